//! Special functions used by the modulator and entanglement models.

/// Bessel function of the first kind, integer order, by its power series.
///
/// Accurate to ~1e-13 absolute for |x| <= 10, which covers every modulation
/// index used here. Negative orders use J_{-n}(x) = (-1)^n J_n(x).
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let order = n.unsigned_abs();
    let sign = if n < 0 && order % 2 == 1 { -1.0 } else { 1.0 };
    let half = 0.5 * x;

    // leading term (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / f64::from(k);
    }
    let mut sum = term;
    let q = -half * half;
    for k in 1..200u32 {
        term *= q / (f64::from(k) * f64::from(k + order));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sign * sum
}

/// Binary entropy in bits. h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// Unnormalized sinc, sin(x)/x.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bessel_reference_values() {
        // scipy.special.jv
        assert_abs_diff_eq!(bessel_j(0, 1.7), 0.397_984_859_446_109_6, epsilon = 1e-14);
        assert_abs_diff_eq!(bessel_j(1, 1.7), 0.577_765_231_529_023_3, epsilon = 1e-14);
        assert_abs_diff_eq!(bessel_j(3, 2.0), 0.128_943_249_474_402_05, epsilon = 1e-14);
        assert_abs_diff_eq!(bessel_j(0, 0.0), 1.0);
        assert_abs_diff_eq!(bessel_j(2, 0.0), 0.0);
    }

    #[test]
    fn negative_orders() {
        for x in [0.3, 1.4, 2.9] {
            assert_abs_diff_eq!(bessel_j(-1, x), -bessel_j(1, x), epsilon = 1e-15);
            assert_abs_diff_eq!(bessel_j(-2, x), bessel_j(2, x), epsilon = 1e-15);
        }
    }

    #[test]
    fn entropy_edges() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.5), 1.0, epsilon = 1e-15);
    }
}
