//! Jump-size distributions used for local and transition jumps.

use num_complex::Complex64;
use rand::Rng;
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{MapError, Result};
use crate::quad;
use crate::rng;
use crate::stats::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpLaw {
    PointMass { value: f64 },
    /// `x1` with probability `p`, otherwise `x2`.
    TwoPoint { x1: f64, p: f64, x2: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// Lomax law on `[0, ∞)`: survival `(1 + x / scale)^{-tail_index}`.
    ShiftedPareto { tail_index: f64, scale: f64 },
}

/// A (possibly divergent) moment integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn is_finite(&self) -> bool {
        matches!(self, Moment::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match *self {
            Moment::Finite(v) => v,
            Moment::Infinite => f64::INFINITY,
        }
    }

    pub fn scale(self, c: f64) -> Moment {
        match self {
            Moment::Finite(v) => Moment::Finite(c * v),
            Moment::Infinite if c == 0.0 => Moment::Finite(0.0),
            Moment::Infinite => Moment::Infinite,
        }
    }
}

impl std::ops::Add for Moment {
    type Output = Moment;
    fn add(self, rhs: Moment) -> Moment {
        match (self, rhs) {
            (Moment::Finite(a), Moment::Finite(b)) => Moment::Finite(a + b),
            _ => Moment::Infinite,
        }
    }
}

impl std::iter::Sum for Moment {
    fn sum<I: Iterator<Item = Moment>>(iter: I) -> Moment {
        iter.fold(Moment::Finite(0.0), |a, b| a + b)
    }
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// P(a < Z < b) for standard normal Z, accurate in both tails.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    if a > 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

/// `(∫ f, ∫ x f, ∫ x² f)` over `(a, b)` for the `N(m, s²)` density.
fn gaussian_partial(m: f64, s: f64, a: f64, b: f64) -> (f64, f64, f64) {
    let za = (a - m) / s;
    let zb = (b - m) / s;
    let p = normal_mass(za, zb);
    let (pa, pb) = (normal_pdf(za), normal_pdf(zb));
    let ta = if za.is_finite() { za * pa } else { 0.0 };
    let tb = if zb.is_finite() { zb * pb } else { 0.0 };
    let m1 = m * p + s * (pa - pb);
    let m2 = m * m * p + 2.0 * m * s * (pa - pb) + s * s * (p + ta - tb);
    (p, m1, m2)
}

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpLaw::PointMass { value } => value.is_finite(),
            JumpLaw::TwoPoint { x1, p, x2 } => x1.is_finite() && x2.is_finite() && (0.0..=1.0).contains(&p),
            JumpLaw::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            JumpLaw::ShiftedPareto { tail_index, scale } => {
                tail_index.is_finite() && tail_index > 1.0 && scale.is_finite() && scale > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(MapError::InvalidLaw(format!("{self:?}")))
        }
    }

    /// Probability of an atom at zero.
    pub fn mass_at_zero(&self) -> f64 {
        match *self {
            JumpLaw::PointMass { value } => f64::from(value == 0.0),
            JumpLaw::TwoPoint { x1, p, x2 } => {
                (if x1 == 0.0 { p } else { 0.0 }) + (if x2 == 0.0 { 1.0 - p } else { 0.0 })
            }
            JumpLaw::Gaussian { mean, sd } => f64::from(sd == 0.0 && mean == 0.0),
            JumpLaw::ShiftedPareto { .. } => 0.0,
        }
    }

    /// The law of `c X`.
    pub fn scaled(&self, c: f64) -> JumpLaw {
        match *self {
            JumpLaw::PointMass { value } => JumpLaw::PointMass { value: c * value },
            JumpLaw::TwoPoint { x1, p, x2 } => JumpLaw::TwoPoint { x1: c * x1, p, x2: c * x2 },
            JumpLaw::Gaussian { mean, sd } => JumpLaw::Gaussian { mean: c * mean, sd: c.abs() * sd },
            JumpLaw::ShiftedPareto { tail_index, scale } => {
                assert!(c > 0.0, "Pareto laws only scale by positive factors");
                JumpLaw::ShiftedPareto { tail_index, scale: c * scale }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::PointMass { value } => value,
            JumpLaw::TwoPoint { x1, p, x2 } => {
                if rng.random::<f64>() < p {
                    x1
                } else {
                    x2
                }
            }
            JumpLaw::Gaussian { mean, sd } => mean + sd * rng::standard_normal(rng),
            JumpLaw::ShiftedPareto { tail_index, scale } => scale * (rng::open_unit(rng).powf(-1.0 / tail_index) - 1.0),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::PointMass { value } => value,
            JumpLaw::TwoPoint { x1, p, x2 } => p * x1 + (1.0 - p) * x2,
            JumpLaw::Gaussian { mean, .. } => mean,
            JumpLaw::ShiftedPareto { tail_index, scale } => scale / (tail_index - 1.0),
        }
    }

    pub fn second_moment(&self) -> Moment {
        match *self {
            JumpLaw::Gaussian { mean, sd } => Moment::Finite(mean * mean + sd * sd),
            _ => self.abs_moment(2.0),
        }
    }

    /// `E|X|^r`.
    pub fn abs_moment(&self, r: f64) -> Moment {
        if r == 0.0 {
            return Moment::Finite(1.0);
        }
        self.tail_abs_moment(r, 0.0)
    }

    /// `P(|X| > tau)`.
    pub fn tail_probability(&self, tau: f64) -> f64 {
        self.tail_abs_moment(0.0, tau).value()
    }

    /// `∫ |x|^r 1{|x| > tau} dF`, with a finite/infinite verdict.
    pub fn tail_abs_moment(&self, r: f64, tau: f64) -> Moment {
        assert!(tau >= 0.0 && r >= 0.0);
        let pw = |x: f64| if r == 0.0 { 1.0 } else { x.abs().powf(r) };
        match *self {
            JumpLaw::PointMass { value } => Moment::Finite(if value.abs() > tau { pw(value) } else { 0.0 }),
            JumpLaw::TwoPoint { x1, p, x2 } => {
                let a = if x1.abs() > tau { p * pw(x1) } else { 0.0 };
                let b = if x2.abs() > tau { (1.0 - p) * pw(x2) } else { 0.0 };
                Moment::Finite(a + b)
            }
            JumpLaw::Gaussian { mean, sd } => {
                if sd == 0.0 {
                    return JumpLaw::PointMass { value: mean }.tail_abs_moment(r, tau);
                }
                let up = gaussian_partial(mean, sd, tau, f64::INFINITY);
                let lo = gaussian_partial(mean, sd, f64::NEG_INFINITY, -tau);
                let v = if r == 0.0 {
                    up.0 + lo.0
                } else if r == 1.0 {
                    up.1 - lo.1
                } else if r == 2.0 {
                    up.2 + lo.2
                } else {
                    let f = |x: f64| pw(x) * normal_pdf((x - mean) / sd) / sd;
                    let hi = if mean + 40.0 * sd > tau { quad::integrate(f, tau, mean + 40.0 * sd) } else { 0.0 };
                    let lo = if mean - 40.0 * sd < -tau { quad::integrate(f, mean - 40.0 * sd, -tau) } else { 0.0 };
                    hi + lo
                };
                Moment::Finite(v)
            }
            JumpLaw::ShiftedPareto { tail_index: k, scale: s } => {
                if r >= k {
                    return Moment::Infinite;
                }
                // substituting t = (x/s)/(1 + x/s) turns the tail into an incomplete beta integral
                let upper = s / (s + tau);
                let ln_full = k.ln() + r * s.ln() + ln_beta(r + 1.0, k - r);
                Moment::Finite(ln_full.exp() * beta_reg(k - r, r + 1.0, upper))
            }
        }
    }

    /// `∫ x^k 1{|x| <= tau} dF` for `k ∈ {1, 2}`.
    pub fn truncated_moment(&self, k: i32, tau: f64) -> f64 {
        assert!(k == 1 || k == 2);
        let pw = |x: f64| x.powi(k);
        match *self {
            JumpLaw::PointMass { value } => {
                if value.abs() <= tau {
                    pw(value)
                } else {
                    0.0
                }
            }
            JumpLaw::TwoPoint { x1, p, x2 } => {
                (if x1.abs() <= tau { p * pw(x1) } else { 0.0 }) + (if x2.abs() <= tau { (1.0 - p) * pw(x2) } else { 0.0 })
            }
            JumpLaw::Gaussian { mean, sd } => {
                if sd == 0.0 {
                    return JumpLaw::PointMass { value: mean }.truncated_moment(k, tau);
                }
                let (_, m1, m2) = gaussian_partial(mean, sd, -tau, tau);
                if k == 1 {
                    m1
                } else {
                    m2
                }
            }
            JumpLaw::ShiftedPareto { tail_index, scale } => {
                if tau == 0.0 {
                    return 0.0;
                }
                let density = |x: f64| tail_index / scale * (1.0 + x / scale).powf(-tail_index - 1.0);
                quad::integrate(|x| pw(x) * density(x), 0.0, tau)
            }
        }
    }

    /// `∫ x 1{|x| > tau} dF`.
    pub fn tail_mean(&self, tau: f64) -> f64 {
        self.mean() - self.truncated_moment(1, tau)
    }

    /// `E[X² ∧ cap]`.
    pub fn capped_square_mean(&self, cap: f64) -> f64 {
        let tau = cap.sqrt();
        self.truncated_moment(2, tau) + cap * self.tail_probability(tau)
    }

    /// `E[e^{iλX}]`.
    pub fn charfn(&self, lambda: f64) -> Complex64 {
        let e = |x: f64| Complex64::from_polar(1.0, lambda * x);
        match *self {
            JumpLaw::PointMass { value } => e(value),
            JumpLaw::TwoPoint { x1, p, x2 } => e(x1) * p + e(x2) * (1.0 - p),
            JumpLaw::Gaussian { mean, sd } => Complex64::from_polar((-0.5 * lambda * lambda * sd * sd).exp(), lambda * mean),
            JumpLaw::ShiftedPareto { tail_index, scale } => pareto_charfn(tail_index, scale, lambda),
        }
    }
}

/// Lomax characteristic function. The density extends analytically to the
/// first quadrant, so for `λ > 0` the contour rotates onto the positive
/// imaginary axis: `φ(λ) = (i/λ) ∫_0^∞ e^{-u} f(iu/λ) du`.
fn pareto_charfn(k: f64, s: f64, lambda: f64) -> Complex64 {
    if lambda == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if lambda < 0.0 {
        return pareto_charfn(k, s, -lambda).conj();
    }
    let integrand = |u: f64| {
        let z = Complex64::new(1.0, u / (lambda * s));
        (-u).exp() * (k / s) * z.powf(-k - 1.0)
    };
    let re = quad::integrate(|u| integrand(u).re, 0.0, 45.0);
    let im = quad::integrate(|u| integrand(u).im, 0.0, 45.0);
    Complex64::new(0.0, 1.0 / lambda) * Complex64::new(re, im)
}
