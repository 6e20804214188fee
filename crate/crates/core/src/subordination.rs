//! One-sided α-stable subordinators with Laplace exponent `q^α`, their
//! inverses (Mittag-Leffler processes) and Brownian motion on that clock.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{MapError, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatorSpec {
    alpha: f64,
}

impl SubordinatorSpec {
    /// `α ∈ (0, 1]`; `α = 1` is the pure drift `σ_t = t`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(MapError::InvalidArgument(format!("stable index must lie in (0, 1], got {alpha}")));
        }
        Ok(SubordinatorSpec { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn stable_only(&self) -> Result<()> {
        if self.alpha < 1.0 {
            Ok(())
        } else {
            Err(MapError::InvalidArgument("α = 1 is a pure drift; no stable sampling".into()))
        }
    }
}

/// Kanter's function on `(0, π)`; increasing from `(1−α) α^{α/(1−α)}`.
pub fn kanter_a(alpha: f64, u: f64) -> f64 {
    let b = 1.0 - alpha;
    (b * u).sin() * (alpha * u).sin().powf(alpha / b) / u.sin().powf(1.0 / b)
}

fn kanter_a0(alpha: f64) -> f64 {
    (1.0 - alpha) * alpha.powf(alpha / (1.0 - alpha))
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    PI * rng::open_unit(rng)
}

/// `S = (a(U)/E)^{(1−α)/α}` has `E e^{−qS} = e^{−q^α}`.
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = uniform_angle(rng);
    let e = rng::exponential(rng, 1.0);
    (kanter_a(alpha, u) / e).powf((1.0 - alpha) / alpha)
}

/// `S` reweighted by `S^{−α}`: `E ~ Gamma(2 − α)` and `U ∝ a(u)^{α−1}`.
fn sample_stable_tilted<R: Rng + ?Sized>(alpha: f64, gamma: &Gamma<f64>, rng: &mut R) -> f64 {
    let a0 = kanter_a0(alpha);
    let u = loop {
        let u = uniform_angle(rng);
        let accept = (a0 / kanter_a(alpha, u)).powf(1.0 - alpha);
        if rng.random::<f64>() < accept {
            break u;
        }
    };
    let e = gamma.sample(rng);
    (kanter_a(alpha, u) / e).powf((1.0 - alpha) / alpha)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(MapError::InvalidGrid("times must be finite, nonnegative and sorted".into()));
    }
    Ok(())
}

/// `σ` at the grid times from independent stable increments.
pub fn sample_stable_subordinator<R: Rng + ?Sized>(spec: &SubordinatorSpec, grid: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    spec.stable_only()?;
    check_grid(grid)?;
    let alpha = spec.alpha;
    let mut prev = 0.0;
    let mut sigma = 0.0;
    Ok(grid
        .iter()
        .map(|&t| {
            let dt = t - prev;
            if dt > 0.0 {
                sigma += dt.powf(1.0 / alpha) * sample_stable(alpha, rng);
            }
            prev = t;
            sigma
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversePath {
    pub grid: Vec<f64>,
    pub w: Vec<f64>,
}

/// `W_t = inf{s : σ_s > t}` sampled exactly at the grid times.
///
/// Each passage over a level is drawn in one step: the undershoot is
/// `r·Beta(α, 1−α)`, the passage time given undershoot `y` is `(y/S̃)^α` with
/// `S̃` the `S^{−α}`-tilted stable law, and the overshooting jump is Pareto
/// with index `α` beyond `r − y`. The subordinator then regenerates at its
/// new position.
pub fn sample_inverse<R: Rng + ?Sized>(spec: &SubordinatorSpec, grid: &[f64], rng: &mut R) -> Result<InversePath> {
    check_grid(grid)?;
    let alpha = spec.alpha;
    if alpha == 1.0 {
        return Ok(InversePath { grid: grid.to_vec(), w: grid.to_vec() });
    }
    let beta = Beta::new(alpha, 1.0 - alpha).expect("valid beta parameters");
    let gamma = Gamma::new(2.0 - alpha, 1.0).expect("valid gamma parameters");
    let mut pos = 0.0;
    let mut clock = 0.0;
    let mut w = Vec::with_capacity(grid.len());
    for &t in grid {
        if pos <= t {
            let r = t - pos;
            let y = r * beta.sample(rng);
            let s = sample_stable_tilted(alpha, &gamma, rng);
            clock += (y / s).powf(alpha);
            let jump = (r - y) * rng::open_unit(rng).powf(-1.0 / alpha);
            pos += y + jump;
        }
        w.push(clock);
    }
    Ok(InversePath { grid: grid.to_vec(), w })
}

/// Brute-force inverse: simulate `σ` on the lattice `ds·k` and take the first
/// lattice time past each level. Biased upward by at most `ds`.
pub fn sample_inverse_by_inversion<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    grid: &[f64],
    ds: f64,
    rng: &mut R,
) -> Result<InversePath> {
    check_grid(grid)?;
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(MapError::InvalidArgument("lattice step must be positive".into()));
    }
    if spec.alpha == 1.0 {
        return Ok(InversePath { grid: grid.to_vec(), w: grid.to_vec() });
    }
    let scale = ds.powf(1.0 / spec.alpha);
    let mut sigma = 0.0;
    let mut steps = 0u64;
    let mut w = Vec::with_capacity(grid.len());
    for &t in grid {
        while sigma <= t {
            sigma += scale * sample_stable(spec.alpha, rng);
            steps += 1;
        }
        w.push(steps as f64 * ds);
    }
    Ok(InversePath { grid: grid.to_vec(), w })
}

/// `√scale · Σ_{W_t}` with standard Brownian `Σ`; the clock and the motion use
/// separate streams.
pub fn sample_subordinated_bm<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    scale: f64,
    grid: &[f64],
    clock_rng: &mut R1,
    motion_rng: &mut R2,
) -> Result<(InversePath, Vec<f64>)> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(MapError::InvalidArgument(format!("scale must be nonnegative, got {scale}")));
    }
    let inv = sample_inverse(spec, grid, clock_rng)?;
    let mut prev = 0.0;
    let mut x = 0.0;
    let values = inv
        .w
        .iter()
        .map(|&w| {
            let dw = w - prev;
            prev = w;
            if dw > 0.0 && scale > 0.0 {
                x += (scale * dw).sqrt() * rng::standard_normal(motion_rng);
            }
            x
        })
        .collect();
    Ok((inv, values))
}

/// `E W_1 = 1/Γ(1+α)` and `E W_1² = 2/Γ(1+2α)`.
pub fn inverse_moments(alpha: f64) -> (f64, f64) {
    use statrs::function::gamma::gamma;
    (1.0 / gamma(1.0 + alpha), 2.0 / gamma(1.0 + 2.0 * alpha))
}
