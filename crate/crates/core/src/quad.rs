//! Thin wrapper over double-exponential quadrature with interval bisection
//! when the error estimate is not met. Integrands should be smooth on the
//! interior; split the range at kinks.

use quadrature::double_exponential;

const TOL: f64 = 1e-12;
const MAX_DEPTH: u32 = 8;

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    integrate_tol(&f, a, b, TOL)
}

pub fn integrate_tol<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    recurse(f, a, b, tol, 0)
}

fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let out = double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol.max(1e-14 * out.integral.abs()) || depth >= MAX_DEPTH {
        return out.integral;
    }
    let mid = 0.5 * (a + b);
    recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        assert!((integrate(|x| x * x, 0.0, 3.0) - 9.0).abs() < 1e-11);
        assert!((integrate(|x: f64| (-x).exp(), 0.0, 50.0) - (1.0 - (-50f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn kink_at_endpoint() {
        // ∫_0^2 x^{3/2} dx = 2^{5/2} / (5/2)
        let exact = 2f64.powf(2.5) / 2.5;
        assert!((integrate(|x: f64| x.powf(1.5), 0.0, 2.0) - exact).abs() < 1e-11);
    }

    #[test]
    fn oscillatory() {
        assert!((integrate(|x: f64| x.cos(), 0.0, 20.0) - 20f64.sin()).abs() < 1e-11);
    }
}
