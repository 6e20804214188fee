use std::time::Instant;

use rayon::prelude::*;

use crate::error::{MapError, Result};
use crate::model::{limit_constants, MapModel, TRUNCATION};
use crate::modulator::{stationary_measure, InitialLaw, SegmentSampler, State};
use crate::report::{Rule, TestReport, Uncertainty};
use crate::rng::Seed;
use crate::stats::median;

pub const RATIO_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioOutcome {
    pub target: f64,
    /// `(horizon, median ratio)`.
    pub medians: Vec<(f64, f64)>,
    pub report: TestReport,
}

/// Diffusion plus the second moment of the small jumps, per unit time.
pub fn small_variation_rate(model: &MapModel, s: State) -> f64 {
    let c = model.chars.state(s);
    let local = c.local.map_or(0.0, |l| l.rate * l.law.truncated_moment(2, TRUNCATION));
    let trans: f64 = model
        .outgoing(s)
        .into_iter()
        .filter_map(|(_, k, t)| t.map(|t| k * t.prob * t.law.truncated_moment(2, TRUNCATION)))
        .sum();
    c.diffusion + local + trans
}

/// Median over paths of `(C_T + small-jump second moments)/A_T`; both are
/// additive functionals of the modulator, so only the modulator is sampled.
pub fn verify_ratio_ergodic(
    model: &MapModel,
    initial: InitialLaw,
    horizons: &[f64],
    paths: usize,
    seed: Seed,
) -> Result<RatioOutcome> {
    let clock = Instant::now();
    let k = limit_constants(model)?;
    if !(k.m1 > 0.0) {
        return Err(MapError::InvalidArgument(format!("ratio limit needs m1 > 0, got {}", k.m1)));
    }
    if horizons.is_empty() || horizons.iter().any(|&t| !(t > 0.0)) || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MapError::InvalidGrid("horizons must be positive and increasing".into()));
    }
    initial.validate(&model.modulator)?;
    let pi = stationary_measure(&model.modulator)?;
    let support = model.support();
    let num_rates: Vec<f64> = support.iter().map(|&s| small_variation_rate(model, s)).collect();
    let den_rates: Vec<f64> = support.iter().map(|&s| model.compensator_rate(s)).collect();
    let target = support.iter().zip(&num_rates).map(|(&s, r)| pi.weight(s) * r).sum::<f64>() / k.m1;
    let t_max = *horizons.last().unwrap();

    let ratios: Vec<Vec<f64>> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i);
            let start = initial.sample(&model.modulator, &mut rng)?;
            let mut num = vec![0.0; horizons.len()];
            let mut den = vec![0.0; horizons.len()];
            for (seg, _) in SegmentSampler::new(&model.modulator, start, t_max, &mut rng)? {
                let Ok(j) = support.binary_search(&seg.state) else { continue };
                for (h, &t) in horizons.iter().enumerate() {
                    let dt = seg.end.min(t) - seg.start;
                    if dt > 0.0 {
                        num[h] += num_rates[j] * dt;
                        den[h] += den_rates[j] * dt;
                    }
                }
            }
            Ok(num.iter().zip(&den).map(|(n, d)| n / d).collect())
        })
        .collect::<Result<_>>()?;
    let medians: Vec<(f64, f64)> = horizons
        .iter()
        .enumerate()
        .map(|(h, &t)| {
            let v: Vec<f64> = ratios.iter().map(|r| r[h]).filter(|x| x.is_finite()).collect();
            (t, if v.is_empty() { f64::NAN } else { median(&v) })
        })
        .collect();
    let report = TestReport::new(
        format!("ratio_ergodic_T={t_max}"),
        medians.last().unwrap().1,
        target,
        "stationary ratio closed form",
        Uncertainty::None,
        Rule::RelativeWithin { tol: RATIO_TOL, floor: 1e-12 },
        paths,
        seed.0,
    )
    .with_runtime(clock.elapsed().as_secs_f64());
    Ok(RatioOutcome { target, medians, report })
}
