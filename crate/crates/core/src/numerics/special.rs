use std::f64::consts::PI;

/// Bessel function of the first kind, order zero.
///
/// Evaluates `J0(x) = (1/π) ∫_0^π cos(x sin t) dt` with the trapezoidal rule. The
/// integrand is π-periodic and entire, so the rule converges geometrically: with
/// `n` nodes the error is bounded by `2|J_{2n}(x)|`, which is far below 1e-15 once
/// `2n` exceeds `|x|` by a few dozen.
pub fn bessel_j0(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let ax = x.abs();
    if !ax.is_finite() {
        return if ax.is_infinite() { 0.0 } else { f64::NAN };
    }
    let n = (ax.ceil() as usize) / 2 + 48;
    let h = PI / n as f64;
    let sum: f64 = (0..n).map(|k| (ax * (h * k as f64).sin()).cos()).sum();
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_origin() {
        assert_eq!(bessel_j0(0.0), 1.0);
    }

    #[test]
    fn even_function() {
        for &x in &[0.3, 2.0, 17.5, 63.0] {
            assert_eq!(bessel_j0(x), bessel_j0(-x));
        }
    }

    #[test]
    fn first_zero() {
        assert!(bessel_j0(2.404826).abs() < 1e-5);
    }
}
