//! Sign-exact geometric predicates.
//!
//! Each predicate evaluates its determinant in f64 together with a forward
//! error bound; when the magnitude cannot certify the sign, the computation
//! falls back to exact dyadic arithmetic over big integers. The fallback
//! scales every input onto a common power-of-two exponent, which turns the
//! determinant into pure integer arithmetic and preserves the sign.

use num_bigint::{BigInt, Sign};

pub(crate) type Point = (f64, f64);

const EPSILON: f64 = 1.1102230246251565e-16; // 2^-53
const CCW_ERRBOUND_A: f64 = (3.0 + 16.0 * EPSILON) * EPSILON;
const ICC_ERRBOUND_A: f64 = (10.0 + 96.0 * EPSILON) * EPSILON;

#[inline]
fn sign_of(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Orientation of the triple: +1 counterclockwise, -1 clockwise, 0 collinear.
pub(crate) fn orient2d(a: Point, b: Point, c: Point) -> i32 {
    let detleft = (a.0 - c.0) * (b.1 - c.1);
    let detright = (a.1 - c.1) * (b.0 - c.0);
    let det = detleft - detright;

    let detsum = if detleft > 0.0 {
        if detright <= 0.0 {
            return sign_of(det);
        }
        detleft + detright
    } else if detleft < 0.0 {
        if detright >= 0.0 {
            return sign_of(det);
        }
        -detleft - detright
    } else {
        return sign_of(det);
    };

    let errbound = CCW_ERRBOUND_A * detsum;
    if det >= errbound || -det >= errbound {
        return sign_of(det);
    }
    orient2d_exact(a, b, c)
}

/// Incircle test for a counterclockwise triangle (a, b, c): +1 when d lies
/// strictly inside the circumcircle, -1 strictly outside, 0 on the circle.
pub(crate) fn incircle(a: Point, b: Point, c: Point, d: Point) -> i32 {
    let adx = a.0 - d.0;
    let bdx = b.0 - d.0;
    let cdx = c.0 - d.0;
    let ady = a.1 - d.1;
    let bdy = b.1 - d.1;
    let cdy = c.1 - d.1;

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let alift = adx * adx + ady * ady;

    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let blift = bdx * bdx + bdy * bdy;

    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;
    let clift = cdx * cdx + cdy * cdy;

    let det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);

    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * alift
        + (cdxady.abs() + adxcdy.abs()) * blift
        + (adxbdy.abs() + bdxady.abs()) * clift;
    let errbound = ICC_ERRBOUND_A * permanent;
    if det > errbound || -det > errbound {
        return sign_of(det);
    }
    incircle_exact(a, b, c, d)
}

/// Exact (mantissa, exponent) decomposition: v = m * 2^e.
fn decompose(v: f64) -> (i64, i64) {
    debug_assert!(v.is_finite());
    let bits = v.to_bits();
    let negative = bits >> 63 == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), exp_bits - 1075)
    };
    (if negative { -m } else { m }, e)
}

/// Scales the values onto their smallest common exponent so each becomes an
/// integer; uniform scaling preserves determinant signs.
fn to_scaled_ints(vals: &[f64]) -> Vec<BigInt> {
    let parts: Vec<(i64, i64)> = vals.iter().map(|&v| decompose(v)).collect();
    let min_e = parts
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| e)
        .min()
        .unwrap_or(0);
    parts
        .into_iter()
        .map(|(m, e)| {
            if m == 0 {
                BigInt::from(0)
            } else {
                BigInt::from(m) << (e - min_e) as u64
            }
        })
        .collect()
}

fn bigint_sign(v: &BigInt) -> i32 {
    match v.sign() {
        Sign::Plus => 1,
        Sign::Minus => -1,
        Sign::NoSign => 0,
    }
}

fn orient2d_exact(a: Point, b: Point, c: Point) -> i32 {
    let v = to_scaled_ints(&[a.0, a.1, b.0, b.1, c.0, c.1]);
    let det = (&v[0] - &v[4]) * (&v[3] - &v[5]) - (&v[1] - &v[5]) * (&v[2] - &v[4]);
    bigint_sign(&det)
}

fn incircle_exact(a: Point, b: Point, c: Point, d: Point) -> i32 {
    let v = to_scaled_ints(&[a.0, a.1, b.0, b.1, c.0, c.1, d.0, d.1]);
    let adx = &v[0] - &v[6];
    let ady = &v[1] - &v[7];
    let bdx = &v[2] - &v[6];
    let bdy = &v[3] - &v[7];
    let cdx = &v[4] - &v[6];
    let cdy = &v[5] - &v[7];

    let alift = &adx * &adx + &ady * &ady;
    let blift = &bdx * &bdx + &bdy * &bdy;
    let clift = &cdx * &cdx + &cdy * &cdy;

    let det = alift * (&bdx * &cdy - &cdx * &bdy)
        + blift * (&cdx * &ady - &adx * &cdy)
        + clift * (&adx * &bdy - &bdx * &ady);
    bigint_sign(&det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_basics() {
        assert_eq!(orient2d((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)), 1);
        assert_eq!(orient2d((0.0, 0.0), (0.0, 1.0), (1.0, 0.0)), -1);
        assert_eq!(orient2d((0.0, 0.0), (1.0, 1.0), (2.0, 2.0)), 0);
    }

    #[test]
    fn orientation_resolves_one_ulp_perturbations() {
        let base: f64 = 12.000000000000001;
        // Points on y = x except for the last coordinate nudged by one ulp.
        let up = f64::from_bits(base.to_bits() + 1);
        let down = f64::from_bits(base.to_bits() - 1);
        assert_eq!(orient2d((0.5, 0.5), (base, base), (24.0, 24.0)), 0);
        assert_eq!(
            orient2d((0.5, 0.5), (base, up), (24.0, 24.0)),
            -orient2d((0.5, 0.5), (base, down), (24.0, 24.0))
        );
        assert_ne!(orient2d((0.5, 0.5), (base, up), (24.0, 24.0)), 0);
    }

    #[test]
    fn incircle_detects_interior_boundary_exterior() {
        let a = (0.0, 0.0);
        let b = (2.0, 0.0);
        let c = (0.0, 2.0);
        // Circumcircle has center (1, 1) and radius sqrt(2).
        assert_eq!(incircle(a, b, c, (1.0, 1.0)), 1);
        assert_eq!(incircle(a, b, c, (2.0, 2.0)), 0);
        assert_eq!(incircle(a, b, c, (10.0, 10.0)), -1);
    }

    #[test]
    fn cocircular_square_is_exactly_on_circle() {
        assert_eq!(incircle((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)), 0);
    }

    #[test]
    fn filter_agrees_with_exact_path_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..2000 {
            let p = |rng: &mut rand_chacha::ChaCha8Rng| {
                (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            };
            let (a, b, c, d) = (p(&mut rng), p(&mut rng), p(&mut rng), p(&mut rng));
            assert_eq!(orient2d(a, b, c), orient2d_exact(a, b, c));
            if orient2d(a, b, c) == 1 {
                assert_eq!(incircle(a, b, c, d), incircle_exact(a, b, c, d));
            }
        }
    }

    #[test]
    fn exact_path_handles_mixed_magnitudes() {
        // Far-away super-triangle corner against a tiny local configuration.
        let s = (-1.0e8, -1.0e8);
        let a = (0.0, 0.0);
        let b = (1e-9, 0.0);
        let c = (0.0, 1e-9);
        assert_ne!(orient2d(a, b, s), 0);
        assert_eq!(incircle(a, b, c, s), incircle_exact(a, b, c, s));
    }
}
