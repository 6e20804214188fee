use std::time::Instant;

use crate::error::{MapError, Result};
use crate::model::{limit_constants, lindeberg_check, validate_hypotheses, MapModel};
use crate::modulator::InitialLaw;
use crate::report::{Rule, TestReport, Uncertainty};
use crate::rng::Seed;
use crate::sim::{map_ensemble, EnsembleSpec, Simulator};
use crate::stats::{ks_one_sample, ks_two_sample, normal_cdf, KsResult, Summary};
use crate::subordination::{sample_subordinated_bm, SubordinatorSpec};

/// Relative tolerance for the second moment against `v_A E[W_t]`.
pub const CLT_MOMENT_TOL: f64 = 0.10;
pub const KS_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct CltSetup {
    pub initial: InitialLaw,
    /// Scaling parameter: the ordinate is observed at `n·t`.
    pub n: f64,
    pub t: f64,
    pub samples: usize,
    pub oracle_samples: usize,
    pub epsilon: f64,
    pub lindeberg_paths: usize,
    pub seed: Seed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltComparison {
    /// `(ξ_{nt} − A_{nt}) / √h(n)`.
    pub empirical: Vec<f64>,
    /// `⟨ξ − A⟩_{nt} / h(n)` on the same paths.
    pub bracket: Vec<f64>,
    pub oracle_a: Vec<f64>,
    pub oracle_b: Vec<f64>,
    pub mean_w: f64,
    pub v_a: f64,
    pub v_b: f64,
    pub ks_a: KsResult,
    pub ks_b: KsResult,
    /// The constant whose oracle sample fits better by KS p-value.
    pub favored: &'static str,
    pub reports: Vec<TestReport>,
}

impl CltComparison {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(TestReport::passed)
    }
}

/// Standard Brownian motion run on an independent Mittag-Leffler clock,
/// observed at `t`. Returns the values and the clock readings.
pub fn subordinated_oracle(alpha: f64, t: f64, samples: usize, seed: Seed) -> Result<(Vec<f64>, Vec<f64>)> {
    use rayon::prelude::*;
    let spec = SubordinatorSpec::new(alpha)?;
    let clock_seed = seed.derive(1);
    let motion_seed = seed.derive(2);
    let draws = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let (w, x) =
                sample_subordinated_bm(&spec, 1.0, &[t], &mut clock_seed.stream(i), &mut motion_seed.stream(i))?;
            Ok((x[0], w.w[0]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(draws.into_iter().unzip())
}

/// Compares the rescaled martingale with both candidate limit laws. Only the
/// bracket identity, the second moment against `v_A E[W_t]` and the KS tests
/// against the `v_A` oracle are gated; `v_B` rows are reported.
pub fn verify_clt(model: &MapModel, setup: &CltSetup) -> Result<CltComparison> {
    let clock = Instant::now();
    if !(setup.n > 0.0 && setup.t > 0.0) {
        return Err(MapError::InvalidArgument("n and t must be positive".into()));
    }
    if setup.samples < 2 || setup.oracle_samples < 2 {
        return Err(MapError::InvalidArgument("need at least two samples".into()));
    }
    validate_hypotheses(model, 1.0)?.require(&["H6", "H7", "H8"])?;
    let k = limit_constants(model)?;
    let horizon = setup.n * setup.t;
    let lind = lindeberg_check(
        model,
        setup.initial,
        &[horizon / 100.0, horizon / 10.0, horizon],
        setup.epsilon,
        setup.lindeberg_paths,
        setup.seed.derive(3),
    )?;
    if !lind.passed() {
        let detail = lind.reports.iter().map(TestReport::summary_line).collect::<Vec<_>>().join("; ");
        return Err(MapError::HypothesisViolation { hypothesis: "Lindeberg", detail });
    }

    let h = k.darling_kac.h(setup.n);
    let sim = Simulator::new(model)?;
    let spec = EnsembleSpec {
        initial: setup.initial,
        horizon,
        grid: vec![horizon],
        paths: setup.samples,
        seed: setup.seed,
    };
    let pairs = map_ensemble(&sim, &spec, |_, p| ((p.xi[0] - p.a[0]) / h.sqrt(), p.bracket[0] / h))?;
    let (empirical, bracket): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();

    let (base, clock_w) =
        subordinated_oracle(k.darling_kac.alpha, setup.t, setup.oracle_samples, setup.seed.derive(4))?;
    let (v_a, v_b) = (k.v_a(), k.v_b());
    let oracle_a: Vec<f64> = base.iter().map(|x| v_a.sqrt() * x).collect();
    let oracle_b: Vec<f64> = base.iter().map(|x| v_b.sqrt() * x).collect();
    let mean_w = clock_w.iter().sum::<f64>() / clock_w.len() as f64;
    let ks_a = ks_two_sample(&empirical, &oracle_a);
    let ks_b = ks_two_sample(&empirical, &oracle_b);
    let favored = if ks_a.p_value >= ks_b.p_value { "v_A" } else { "v_B" };

    let sq: Summary = empirical.iter().map(|y| y * y).collect();
    let diff: Summary = empirical.iter().zip(&bracket).map(|(y, b)| y * y - b).collect();
    let br: Summary = bracket.iter().copied().collect();
    let moments: Summary = empirical.iter().copied().collect();
    let (n, s) = (setup.samples, setup.seed.0);
    let t = setup.t;
    let mut reports = vec![
        TestReport::new(
            "clt_bracket_identity",
            sq.mean,
            br.mean,
            "predictable bracket, same paths",
            Uncertainty::Se(diff.se()),
            Rule::WithinSe { k: 3.0, floor: 1e-12 },
            n,
            s,
        ),
        TestReport::new(
            "clt_second_moment_vs_vA_EW",
            sq.mean,
            v_a * mean_w,
            "v_A times clock mean from subordinator samples",
            Uncertainty::Se(sq.se()),
            Rule::RelativeWithin { tol: CLT_MOMENT_TOL, floor: 0.0 },
            n,
            s,
        ),
        TestReport::new(
            "clt_ks_vs_vA_oracle",
            ks_a.statistic,
            0.0,
            "subordinated Brownian oracle with v_A",
            Uncertainty::PValue(ks_a.p_value),
            Rule::PValueAbove { level: KS_LEVEL },
            n,
            s,
        ),
        TestReport::new(
            "clt_ks_vs_vB_oracle",
            ks_b.statistic,
            0.0,
            "subordinated Brownian oracle with v_B",
            Uncertainty::PValue(ks_b.p_value),
            Rule::Reported,
            n,
            s,
        ),
        TestReport::new(
            "clt_variance_over_vA",
            moments.variance() / (v_a * mean_w),
            1.0,
            "ratio to v_A",
            Uncertainty::Se(sq.se() / (v_a * mean_w)),
            Rule::Reported,
            n,
            s,
        ),
        TestReport::new(
            "clt_variance_over_vB",
            moments.variance() / (v_b * mean_w),
            1.0,
            "ratio to v_B",
            Uncertainty::Se(sq.se() / (v_b * mean_w)),
            Rule::Reported,
            n,
            s,
        ),
    ];
    if k.darling_kac.alpha == 1.0 {
        let normal = |v: f64| {
            let sd = (v * t).sqrt();
            ks_one_sample(&empirical, move |x| normal_cdf(x / sd))
        };
        let one_a = normal(v_a);
        let one_b = normal(v_b);
        reports.push(TestReport::new(
            "clt_ks_vs_normal_vA",
            one_a.statistic,
            0.0,
            "normal law with variance v_A t",
            Uncertainty::PValue(one_a.p_value),
            Rule::PValueAbove { level: KS_LEVEL },
            n,
            s,
        ));
        reports.push(TestReport::new(
            "clt_ks_vs_normal_vB",
            one_b.statistic,
            0.0,
            "normal law with variance v_B t",
            Uncertainty::PValue(one_b.p_value),
            Rule::Reported,
            n,
            s,
        ));
    }
    reports.extend(lind.reports);
    let secs = clock.elapsed().as_secs_f64();
    let reports = reports.into_iter().map(|r| r.with_runtime(secs)).collect();
    Ok(CltComparison { empirical, bracket, oracle_a, oracle_b, mean_w, v_a, v_b, ks_a, ks_b, favored, reports })
}
