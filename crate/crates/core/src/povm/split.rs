//! Rational approximation used to split effects into equal-trace pieces.

/// Best rational approximation `p/q` of `x >= 0` with `q <= max_den`,
/// from the continued-fraction convergents and the final semiconvergent.
pub(crate) fn best_rational(x: f64, max_den: u64) -> (u64, u64) {
    debug_assert!(x >= 0.0 && x.is_finite());
    let max_den = max_den.max(1) as u128;
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let mut y = x;
    loop {
        let a = y.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let q2 = q0 + a * q1;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p0 + a * p1, q2);
        let frac = y - y.floor();
        if frac < 1e-15 || (x - p1 as f64 / q1 as f64).abs() < 1e-16 {
            return (p1 as u64, q1 as u64);
        }
        y = 1.0 / frac;
    }
    if q1 == 0 {
        // x exceeds every representable numerator over denominator 1.
        return (x.round() as u64, 1);
    }
    let k = (max_den - q0) / q1;
    let (ps, qs) = (p0 + k * p1, q0 + k * q1);
    let err_semi = (x - ps as f64 / qs as f64).abs();
    let err_conv = (x - p1 as f64 / q1 as f64).abs();
    if err_semi < err_conv {
        (ps as u64, qs as u64)
    } else {
        (p1 as u64, q1 as u64)
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn lcm(a: u64, b: u64) -> Option<u64> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd(a, b)).checked_mul(b)
}
