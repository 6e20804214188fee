use std::time::Instant;

use crate::error::{MapError, Result};
use crate::model::{limit_constants, validate_hypotheses, MapModel};
use crate::modulator::InitialLaw;
use crate::report::{Rule, TestReport, Uncertainty};
use crate::rng::Seed;
use crate::sim::{map_ensemble, EnsembleSpec, Simulator};
use crate::stats::{iqr, median};

/// Absolute tolerance on the median of `ξ_T/T` around `m1`.
pub const SLLN_TOL: f64 = 0.02;
/// `|m1|` below this counts as zero.
pub const M1_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    PositiveRecurrent,
    NullRecurrentDrifting,
    NullRecurrentCentered,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::PositiveRecurrent => "positive recurrent",
            Regime::NullRecurrentDrifting => "null recurrent, m1 != 0",
            Regime::NullRecurrentCentered => "null recurrent, m1 = 0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SllnRow {
    pub horizon: f64,
    pub median_xi_over_t: f64,
    pub iqr_xi_over_t: f64,
    pub median_a_over_t: f64,
    pub median_xi_over_a: f64,
    pub iqr_xi_over_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SllnOutcome {
    pub regime: Regime,
    pub m1: f64,
    pub rows: Vec<SllnRow>,
    pub reports: Vec<TestReport>,
}

pub fn regime(model: &MapModel) -> Result<(Regime, f64)> {
    let k = limit_constants(model)?;
    let r = if k.pi_finite {
        Regime::PositiveRecurrent
    } else if k.m1.abs() > M1_ZERO {
        Regime::NullRecurrentDrifting
    } else {
        Regime::NullRecurrentCentered
    };
    Ok((r, k.m1))
}

fn finite(v: impl Iterator<Item = f64>) -> Vec<f64> {
    v.filter(|x| x.is_finite()).collect()
}

/// Strong law checks on common paths observed at increasing horizons.
pub fn verify_slln(
    model: &MapModel,
    initial: InitialLaw,
    horizons: &[f64],
    paths: usize,
    seed: Seed,
) -> Result<SllnOutcome> {
    let clock = Instant::now();
    if horizons.is_empty() || horizons.iter().any(|&t| t <= 0.0) {
        return Err(MapError::InvalidArgument("horizons must be positive".into()));
    }
    let (regime, m1) = regime(model)?;
    let hyp = validate_hypotheses(model, 1.0)?;
    match regime {
        Regime::PositiveRecurrent => hyp.require(&["H7"])?,
        _ => hyp.require(&["H6", "H7", "H8"])?,
    }
    let sim = Simulator::new(model)?;
    let horizon = horizons.iter().cloned().fold(0.0, f64::max);
    let spec = EnsembleSpec { initial, horizon, grid: horizons.to_vec(), paths, seed };
    let ends = map_ensemble(&sim, &spec, |_, p| (p.xi, p.a))?;

    let rows: Vec<SllnRow> = horizons
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let xt: Vec<f64> = ends.iter().map(|e| e.0[k] / t).collect();
            let at: Vec<f64> = ends.iter().map(|e| e.1[k] / t).collect();
            let xa = finite(ends.iter().map(|e| e.0[k] / e.1[k]));
            SllnRow {
                horizon: t,
                median_xi_over_t: median(&xt),
                iqr_xi_over_t: iqr(&xt),
                median_a_over_t: median(&at),
                median_xi_over_a: if xa.is_empty() { f64::NAN } else { median(&xa) },
                iqr_xi_over_a: if xa.is_empty() { f64::NAN } else { iqr(&xa) },
            }
        })
        .collect();
    let last = *rows.last().unwrap();
    let t_max = last.horizon;
    let max_growth = |f: fn(&SllnRow) -> f64| rows.windows(2).map(|w| f(&w[1]) - f(&w[0])).fold(0.0_f64, f64::max);
    let s = seed.0;
    let mut reports = Vec::new();
    for r in &rows {
        reports.push(TestReport::new(
            format!("slln_trace_median_xi_over_T_T={}", r.horizon),
            r.median_xi_over_t,
            m1,
            "m1 closed form",
            Uncertainty::None,
            Rule::Reported,
            paths,
            s,
        ));
    }
    match regime {
        Regime::PositiveRecurrent => {
            reports.push(TestReport::new(
                format!("slln_median_xi_over_T_T={t_max}"),
                last.median_xi_over_t,
                m1,
                "m1 closed form",
                Uncertainty::None,
                Rule::Interval { lo: m1 - SLLN_TOL, hi: m1 + SLLN_TOL },
                paths,
                s,
            ));
            reports.push(TestReport::new(
                "slln_iqr_nonincreasing",
                max_growth(|r| r.iqr_xi_over_t),
                0.0,
                "largest IQR growth across horizons",
                Uncertainty::None,
                Rule::AtMost { bound: 0.0 },
                paths,
                s,
            ));
        }
        Regime::NullRecurrentDrifting => {
            reports.push(TestReport::new(
                format!("slln_median_xi_over_A_T={t_max}"),
                last.median_xi_over_a,
                1.0,
                "ratio limit 1",
                Uncertainty::None,
                Rule::Interval { lo: 0.9, hi: 1.1 },
                paths,
                s,
            ));
            reports.push(TestReport::new(
                format!("slln_median_A_over_T_T={t_max}"),
                last.median_a_over_t,
                0.0,
                "vanishing limit",
                Uncertainty::None,
                Rule::Below { bound: 0.05 },
                paths,
                s,
            ));
            reports.push(TestReport::new(
                "slln_iqr_xi_over_A_growth",
                max_growth(|r| r.iqr_xi_over_a),
                0.0,
                "largest IQR growth across horizons",
                Uncertainty::None,
                Rule::Reported,
                paths,
                s,
            ));
        }
        Regime::NullRecurrentCentered => {
            reports.push(TestReport::new(
                format!("slln_median_abs_xi_over_T_T={t_max}"),
                median(&ends.iter().map(|e| (e.0[horizons.len() - 1] / t_max).abs()).collect::<Vec<_>>()),
                0.0,
                "vanishing limit",
                Uncertainty::None,
                Rule::Below { bound: SLLN_TOL },
                paths,
                s,
            ));
            reports.push(TestReport::new(
                format!("slln_median_abs_A_over_T_T={t_max}"),
                median(&ends.iter().map(|e| (e.1[horizons.len() - 1] / t_max).abs()).collect::<Vec<_>>()),
                0.0,
                "vanishing limit",
                Uncertainty::None,
                Rule::Below { bound: 0.05 },
                paths,
                s,
            ));
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let reports = reports.into_iter().map(|r| r.with_runtime(secs)).collect();
    Ok(SllnOutcome { regime, m1, rows, reports })
}
