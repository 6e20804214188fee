use std::time::Instant;

use super::clt::{subordinated_oracle, KS_LEVEL};
use crate::error::{MapError, Result};
use crate::model::{limit_constants, MapModel};
use crate::modulator::InitialLaw;
use crate::report::{Rule, TestReport, Uncertainty};
use crate::rng::Seed;
use crate::sim::{map_ensemble, EnsembleSpec, Simulator};
use crate::stats::{ks_two_sample, Summary};

#[derive(Debug, Clone, PartialEq)]
pub struct ZSetup {
    pub initial: InitialLaw,
    pub n: f64,
    pub t: f64,
    pub samples: usize,
    pub oracle_samples: usize,
    pub seed: Seed,
}

/// `Z_{nt}/√h(n)` against `√J Σ_{W_t}` and `⟨Z⟩_{nt}/h(n)` against `J W_t`.
/// With `α = 1` the second limit is the constant `J t`, so its mean is
/// compared instead of a KS test against a point mass.
pub fn verify_z_convergence(model: &MapModel, setup: &ZSetup) -> Result<Vec<TestReport>> {
    let clock = Instant::now();
    if !(setup.n > 0.0 && setup.t > 0.0) || setup.samples < 2 || setup.oracle_samples < 2 {
        return Err(MapError::InvalidArgument("need positive n, t and at least two samples".into()));
    }
    let k = limit_constants(model)?;
    let (n, s) = (setup.samples, setup.seed.0);
    if k.j == 0.0 {
        return Ok(vec![TestReport::new(
            "z_vacuous",
            0.0,
            0.0,
            "J = 0",
            Uncertainty::None,
            Rule::AtMost { bound: 0.0 },
            n,
            s,
        )]);
    }
    let horizon = setup.n * setup.t;
    let h = k.darling_kac.h(setup.n);
    let sim = Simulator::new(model)?;
    let spec = EnsembleSpec { initial: setup.initial, horizon, grid: vec![horizon], paths: n, seed: setup.seed };
    let pairs = map_ensemble(&sim, &spec, |_, p| (p.z[0] / h.sqrt(), p.z_angle[0] / h))?;
    let (z, angle): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (base, w) = subordinated_oracle(k.darling_kac.alpha, setup.t, setup.oracle_samples, setup.seed.derive(5))?;
    let z_oracle: Vec<f64> = base.iter().map(|x| k.j.sqrt() * x).collect();
    let ks_z = ks_two_sample(&z, &z_oracle);
    let mut reports = vec![TestReport::new(
        "z_ks_vs_oracle",
        ks_z.statistic,
        0.0,
        "subordinated Brownian oracle with J",
        Uncertainty::PValue(ks_z.p_value),
        Rule::PValueAbove { level: KS_LEVEL },
        n,
        s,
    )];
    if k.darling_kac.alpha == 1.0 {
        let m: Summary = angle.iter().copied().collect();
        let target = k.j * setup.t;
        reports.push(TestReport::new(
            "z_angle_mean",
            m.mean,
            target,
            "J t",
            Uncertainty::Se(m.se()),
            Rule::WithinSe { k: 3.0, floor: 1e-9 * target.abs() },
            n,
            s,
        ));
    } else {
        let angle_oracle: Vec<f64> = w.iter().map(|w| k.j * w).collect();
        let ks = ks_two_sample(&angle, &angle_oracle);
        reports.push(TestReport::new(
            "z_angle_ks_vs_oracle",
            ks.statistic,
            0.0,
            "J times Mittag-Leffler clock",
            Uncertainty::PValue(ks.p_value),
            Rule::PValueAbove { level: KS_LEVEL },
            n,
            s,
        ));
    }
    let secs = clock.elapsed().as_secs_f64();
    Ok(reports.into_iter().map(|r| r.with_runtime(secs)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JumpLaw, MapCharacteristics};
    use crate::modulator::{ModulatorSpec, State};

    fn setup() -> ZSetup {
        ZSetup { initial: InitialLaw::Stationary, n: 1e3, t: 1.0, samples: 3000, oracle_samples: 3000, seed: Seed(4) }
    }

    #[test]
    fn vacuous_without_transition_jumps() {
        let spec = ModulatorSpec::finite(&["a", "b"], &[("a", "b", 1.0), ("b", "a", 1.0)]).unwrap();
        let mut c = MapCharacteristics::new();
        c.set_diffusion(State(0), 1.0);
        let model = MapModel::new(spec, c).unwrap();
        let r = verify_z_convergence(&model, &setup()).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].passed());
    }

    #[test]
    fn alternating_model() {
        let spec = ModulatorSpec::finite(&["a", "b"], &[("a", "b", 1.0), ("b", "a", 1.0)]).unwrap();
        let mut c = MapCharacteristics::new();
        c.set_transition_jump(State(0), State(1), 1.0, JumpLaw::PointMass { value: 0.7 });
        c.set_transition_jump(State(1), State(0), 1.0, JumpLaw::PointMass { value: -0.7 });
        let model = MapModel::new(spec, c).unwrap();
        let r = verify_z_convergence(&model, &setup()).unwrap();
        assert!(r.iter().all(|r| r.passed()), "{r:#?}");
    }
}
