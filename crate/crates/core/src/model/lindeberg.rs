use rayon::prelude::*;

use super::{MapModel, Moment};
use crate::error::{MapError, Result};
use crate::modulator::{InitialLaw, SegmentSampler, State};
use crate::report::{Rule, TestReport, Uncertainty};
use crate::rng::Seed;
use crate::stats::Summary;

/// Absolute slack for estimates whose standard error vanishes.
pub const LINDEBERG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindebergPoint {
    pub t: f64,
    pub estimate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindebergResult {
    pub epsilon: f64,
    pub points: Vec<LindebergPoint>,
    pub reports: Vec<TestReport>,
}

impl LindebergResult {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(TestReport::passed)
    }
}

/// Rate of jump second-moment mass beyond `tau` at a state.
fn big_jump_rate(model: &MapModel, s: State, tau: f64) -> Result<f64> {
    let c = model.chars.state(s);
    let local = c.local.map_or(Moment::Finite(0.0), |l| l.law.tail_abs_moment(2.0, tau).scale(l.rate));
    let trans: Moment = model
        .outgoing(s)
        .into_iter()
        .filter_map(|(_, k, t)| t.map(|t| t.law.tail_abs_moment(2.0, tau).scale(k * t.prob)))
        .sum();
    match local + trans {
        Moment::Finite(v) => Ok(v),
        Moment::Infinite => Err(MapError::HypothesisViolation {
            hypothesis: "H8",
            detail: format!("second jump moment at state {s} is infinite"),
        }),
    }
}

/// Monte Carlo estimate of `(1/t) E ∫_0^t ∫ x² 1{|x| > ε√t} L(du, dx)`, where
/// `L` is the jump compensator. Given the modulator path the inner integral
/// is an exact occupation functional, so only the modulator is sampled. All
/// `t` share the same paths.
pub fn lindeberg_check(
    model: &MapModel,
    initial: InitialLaw,
    t_grid: &[f64],
    epsilon: f64,
    paths: usize,
    seed: Seed,
) -> Result<LindebergResult> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(MapError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MapError::InvalidGrid("Lindeberg times must be positive and increasing".into()));
    }
    if paths < 2 {
        return Err(MapError::InvalidArgument("need at least two paths".into()));
    }
    initial.validate(&model.modulator)?;
    let support = model.support();
    // rates[k][j]: big-jump rate at support[j] with threshold ε√t_k
    let rates = t_grid
        .iter()
        .map(|&t| support.iter().map(|&s| big_jump_rate(model, s, epsilon * t.sqrt())).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let t_max = *t_grid.last().unwrap();

    let per_path: Vec<Vec<f64>> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i);
            let start = initial.sample(&model.modulator, &mut rng)?;
            let mut acc = vec![0.0; t_grid.len()];
            for (seg, _) in SegmentSampler::new(&model.modulator, start, t_max, &mut rng)? {
                let Ok(j) = support.binary_search(&seg.state) else { continue };
                for (k, &t) in t_grid.iter().enumerate() {
                    let overlap = seg.end.min(t) - seg.start;
                    if overlap > 0.0 {
                        acc[k] += overlap * rates[k][j];
                    }
                }
            }
            for (a, &t) in acc.iter_mut().zip(t_grid) {
                *a /= t;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let points: Vec<LindebergPoint> = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let s: Summary = per_path.iter().map(|v| v[k]).collect();
            LindebergPoint { t, estimate: s.mean, se: s.se() }
        })
        .collect();

    let excess = points
        .windows(2)
        .map(|w| w[1].estimate - w[0].estimate - 3.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt())
        .fold(0.0_f64, f64::max);
    let last = *points.last().unwrap();
    let reports = vec![
        TestReport::new(
            "lindeberg_nonincreasing",
            excess,
            0.0,
            "largest increase beyond 3 combined se",
            Uncertainty::None,
            Rule::AtMost { bound: 0.0 },
            paths,
            seed.0,
        ),
        TestReport::new(
            format!("lindeberg_final_t={}", last.t),
            last.estimate,
            0.0,
            "vanishing limit",
            Uncertainty::Se(last.se),
            Rule::WithinSe { k: 3.0, floor: LINDEBERG_FLOOR },
            paths,
            seed.0,
        ),
    ];
    Ok(LindebergResult { epsilon, points, reports })
}
