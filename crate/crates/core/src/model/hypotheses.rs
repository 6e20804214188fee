use super::{MapModel, Moment, TRUNCATION};
use crate::error::{MapError, Result};
use crate::modulator::stationary_measure;

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisVerdict {
    pub name: &'static str,
    pub quantity: Moment,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub p: f64,
    pub verdicts: Vec<HypothesisVerdict>,
}

impl HypothesisReport {
    pub fn get(&self, name: &str) -> Option<&HypothesisVerdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Error naming the first listed hypothesis that fails.
    pub fn require(&self, names: &[&str]) -> Result<()> {
        for v in &self.verdicts {
            if names.contains(&v.name) && !v.pass {
                return Err(MapError::HypothesisViolation { hypothesis: v.name, detail: v.note.clone() });
            }
        }
        Ok(())
    }
}

/// Verdicts for the moment hypotheses H5–H8. `p` is the extra tail
/// exponent in H8: `∫ π ∫ |x|^{1+p} 1{|x|>1} Π < ∞`.
pub fn validate_hypotheses(model: &MapModel, p: f64) -> Result<HypothesisReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(MapError::InvalidArgument(format!("H8 exponent p must be positive, got {p}")));
    }
    let pi = stationary_measure(&model.modulator)?;
    let support = model.support();

    // Per-state jump integrals `∫ w(x) Π(θ, S, dx)` over local and transition parts.
    let jump_integral = |s, w: &dyn Fn(&super::JumpLaw) -> Moment| -> Moment {
        let c = model.chars.state(s);
        let local = c.local.map_or(Moment::Finite(0.0), |l| w(&l.law).scale(l.rate));
        let trans: Moment = model
            .outgoing(s)
            .into_iter()
            .filter_map(|(_, k, t)| t.map(|t| w(&t.law).scale(k * t.prob)))
            .sum();
        local + trans
    };
    let weighted = |f: &dyn Fn(crate::modulator::State) -> Moment| -> Moment {
        support.iter().map(|&s| f(s).scale(pi.weight(s))).sum()
    };

    let first: Vec<(crate::modulator::State, Moment)> =
        support.iter().map(|&s| (s, jump_integral(s, &|l| l.abs_moment(1.0)))).collect();
    let h5_bad = first.iter().find(|(_, m)| !m.is_finite());
    let h5_max = first.iter().map(|(_, m)| m.value()).fold(0.0, f64::max);
    let h5 = HypothesisVerdict {
        name: "H5",
        quantity: if h5_bad.is_some() { Moment::Infinite } else { Moment::Finite(h5_max) },
        pass: h5_bad.is_none(),
        note: match h5_bad {
            Some((s, _)) => format!("first jump moment infinite at state {s}"),
            None => "per-state first jump moments finite (max shown)".into(),
        },
    };

    let nu_c: f64 = support.iter().map(|&s| pi.weight(s) * model.chars.state(s).diffusion).sum();
    let small = weighted(&|s| jump_integral(s, &|l| Moment::Finite(l.truncated_moment(2, TRUNCATION))));
    let h6_q = Moment::Finite(nu_c) + small;
    let h6 = HypothesisVerdict {
        name: "H6",
        quantity: h6_q,
        pass: h6_q.is_finite(),
        note: format!("||nu_C|| = {nu_c} plus small-jump second moments"),
    };

    let b_tv = Moment::Finite(support.iter().map(|&s| pi.weight(s) * model.truncated_drift(s).abs()).sum());
    let big_first = weighted(&|s| {
        let c = model.chars.state(s);
        let local = c.local.map_or(Moment::Finite(0.0), |l| l.law.tail_abs_moment(1.0, TRUNCATION).scale(l.rate));
        let trans: Moment = model
            .outgoing(s)
            .into_iter()
            .filter_map(|(_, k, t)| t.map(|t| t.law.abs_moment(1.0).scale(k * t.prob)))
            .sum();
        local + trans
    });
    let h7_q = b_tv + big_first;
    let h7 = HypothesisVerdict {
        name: "H7",
        quantity: h7_q,
        pass: h7_q.is_finite(),
        note: "||nu_Bc|| + integral of |mu^d| ingredients; H7 implies H5".into(),
    };

    let h8_q = weighted(&|s| jump_integral(s, &|l| l.tail_abs_moment(1.0 + p, TRUNCATION)));
    let h8 = HypothesisVerdict {
        name: "H8",
        quantity: h8_q,
        pass: h8_q.is_finite(),
        note: if h8_q.is_finite() {
            format!("tail moment of order {} finite", 1.0 + p)
        } else {
            format!("tail moment of order {} infinite", 1.0 + p)
        },
    };

    Ok(HypothesisReport { p, verdicts: vec![h5, h6, h7, h8] })
}

#[cfg(test)]
mod tests {
    use super::super::{JumpLaw, MapCharacteristics};
    use super::*;
    use crate::modulator::{ModulatorSpec, State};

    fn one() -> ModulatorSpec {
        ModulatorSpec::finite(&["x"], &[]).unwrap()
    }

    #[test]
    fn all_zero_passes() {
        let r = validate_hypotheses(&MapModel::new(one(), MapCharacteristics::new()).unwrap(), 1.0).unwrap();
        assert!(r.all_pass());
        assert_eq!(r.get("H8").unwrap().quantity, Moment::Finite(0.0));
    }

    #[test]
    fn pareto_fails_h8_only() {
        let mut c = MapCharacteristics::new();
        c.set_local_jump(State(0), 1.0, JumpLaw::ShiftedPareto { tail_index: 1.5, scale: 1.0 });
        let model = MapModel::new(one(), c).unwrap();
        let r = validate_hypotheses(&model, 1.0).unwrap();
        assert!(!r.get("H8").unwrap().pass);
        for h in ["H5", "H6", "H7"] {
            assert!(r.get(h).unwrap().pass);
        }
        assert!(matches!(r.require(&["H8"]), Err(MapError::HypothesisViolation { hypothesis: "H8", .. })));
        // smaller power is fine
        assert!(validate_hypotheses(&model, 0.4).unwrap().all_pass());
    }

    #[test]
    fn gaussian_transitions_pass() {
        let m = ModulatorSpec::finite(&["a", "b"], &[("a", "b", 1.0), ("b", "a", 2.0)]).unwrap();
        let mut c = MapCharacteristics::new();
        c.set_transition_jump(State(0), State(1), 0.7, JumpLaw::Gaussian { mean: 1.0, sd: 2.0 });
        c.set_transition_jump(State(1), State(0), 1.0, JumpLaw::Gaussian { mean: -1.0, sd: 0.5 });
        let r = validate_hypotheses(&MapModel::new(m, c).unwrap(), 1.0).unwrap();
        assert!(r.all_pass());
        assert!(r.get("H8").unwrap().quantity.value() > 0.0);
    }
}
