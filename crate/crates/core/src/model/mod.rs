//! Semimartingale characteristics of the ordinate and everything derived
//! from them: per-state rates, limit constants, hypothesis checks.

mod constants;
mod hypotheses;
mod jump_law;
mod lindeberg;

pub use constants::{limit_constants, LimitConstants, StateConstants};
pub use hypotheses::{validate_hypotheses, HypothesisReport, HypothesisVerdict};
pub use jump_law::{JumpLaw, Moment};
pub use lindeberg::{lindeberg_check, LindebergPoint, LindebergResult};

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{MapError, Result};
use crate::modulator::{ModulatorSpec, State};

/// Jumps of size `|x| <= TRUNCATION` count as small.
pub const TRUNCATION: f64 = 1.0;

/// Compound Poisson jumps while the modulator sits in a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalJumps {
    pub rate: f64,
    pub law: JumpLaw,
}

/// Ordinate jump fired with probability `prob` when the modulator moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionJump {
    pub prob: f64,
    pub law: JumpLaw,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StateCharacteristics {
    pub drift: f64,
    pub diffusion: f64,
    pub local: Option<LocalJumps>,
}

/// Per-state drift, diffusion and jump data. States that are never set have
/// zero characteristics, which is how an infinite modulator gets a finitely
/// supported table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapCharacteristics {
    states: BTreeMap<State, StateCharacteristics>,
    transitions: BTreeMap<(State, State), TransitionJump>,
}

impl MapCharacteristics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_drift(&mut self, s: State, drift: f64) -> &mut Self {
        self.states.entry(s).or_default().drift = drift;
        self
    }

    pub fn set_diffusion(&mut self, s: State, c: f64) -> &mut Self {
        self.states.entry(s).or_default().diffusion = c;
        self
    }

    pub fn set_local_jump(&mut self, s: State, rate: f64, law: JumpLaw) -> &mut Self {
        self.states.entry(s).or_default().local = Some(LocalJumps { rate, law });
        self
    }

    pub fn set_transition_jump(&mut self, from: State, to: State, prob: f64, law: JumpLaw) -> &mut Self {
        self.transitions.insert((from, to), TransitionJump { prob, law });
        self
    }

    pub fn state(&self, s: State) -> StateCharacteristics {
        self.states.get(&s).copied().unwrap_or_default()
    }

    pub fn transition(&self, from: State, to: State) -> Option<&TransitionJump> {
        self.transitions.get(&(from, to))
    }

    pub fn states(&self) -> impl Iterator<Item = (State, &StateCharacteristics)> {
        self.states.iter().map(|(&s, c)| (s, c))
    }

    pub fn transitions(&self) -> impl Iterator<Item = ((State, State), &TransitionJump)> {
        self.transitions.iter().map(|(&k, v)| (k, v))
    }

    /// States whose rates may be nonzero.
    pub fn support(&self) -> BTreeSet<State> {
        self.states.keys().copied().chain(self.transitions.keys().map(|k| k.0)).collect()
    }

    /// Multiply every jump size and drift by `s > 0`, and diffusion by `s²`.
    pub fn scaled(&self, s: f64) -> MapCharacteristics {
        assert!(s > 0.0);
        let mut out = self.clone();
        for c in out.states.values_mut() {
            c.drift *= s;
            c.diffusion *= s * s;
            if let Some(l) = c.local.as_mut() {
                l.law = l.law.scaled(s);
            }
        }
        for t in out.transitions.values_mut() {
            t.law = t.law.scaled(s);
        }
        out
    }

    pub fn validate(&self, modulator: &ModulatorSpec) -> Result<()> {
        let bad = |msg: String| Err(MapError::InvalidCharacteristics(msg));
        for (&s, c) in &self.states {
            if !modulator.contains(s) {
                return bad(format!("unknown state {s}"));
            }
            if !c.drift.is_finite() {
                return bad(format!("drift at state {s} is not finite"));
            }
            if !(c.diffusion.is_finite() && c.diffusion >= 0.0) {
                return bad(format!("diffusion at state {s} must be finite and nonnegative"));
            }
            if let Some(l) = c.local {
                if !(l.rate.is_finite() && l.rate > 0.0) {
                    return bad(format!("local jump rate at state {s} must be positive"));
                }
                l.law.validate()?;
                if l.law.mass_at_zero() > 0.0 {
                    return bad(format!("local jump law at state {s} has an atom at 0"));
                }
            }
        }
        for (&(a, b), t) in &self.transitions {
            if !modulator.contains(a) || !modulator.contains(b) {
                return bad(format!("transition jump {a}->{b} references an unknown state"));
            }
            if modulator.rate(a, b) <= 0.0 {
                return bad(format!("transition jump {a}->{b} on a pair with zero modulator rate"));
            }
            if !(0.0..=1.0).contains(&t.prob) {
                return bad(format!("activation probability {} for {a}->{b} outside [0, 1]", t.prob));
            }
            t.law.validate()?;
        }
        Ok(())
    }
}

/// A modulator together with validated characteristics.
#[derive(Debug, Clone, PartialEq)]
pub struct MapModel {
    pub modulator: ModulatorSpec,
    pub chars: MapCharacteristics,
}

impl MapModel {
    pub fn new(modulator: ModulatorSpec, chars: MapCharacteristics) -> Result<Self> {
        chars.validate(&modulator)?;
        Ok(MapModel { modulator, chars })
    }

    /// States over which π-integrals of the rates are taken.
    pub fn support(&self) -> Vec<State> {
        match &self.modulator {
            ModulatorSpec::FiniteChain(c) => (0..c.len() as i64).map(State).collect(),
            ModulatorSpec::SymmetricWalk => self.chars.support().into_iter().collect(),
        }
    }

    /// Outgoing `(target, K(θ, β), transition jump)` triples.
    pub fn outgoing(&self, s: State) -> Vec<(State, f64, Option<TransitionJump>)> {
        self.modulator
            .neighbors(s)
            .into_iter()
            .map(|(b, k)| (b, k, self.chars.transition(s, b).copied()))
            .collect()
    }

    /// Density of the truncated compensator: `d + λ ∫_{|x|<=1} x dF`.
    pub fn truncated_drift(&self, s: State) -> f64 {
        let c = self.chars.state(s);
        c.drift + c.local.map_or(0.0, |l| l.rate * l.law.truncated_moment(1, TRUNCATION))
    }

    /// Compensator density of the big local jumps and all transition jumps.
    pub fn mu_d(&self, s: State) -> f64 {
        let c = self.chars.state(s);
        let local = c.local.map_or(0.0, |l| l.rate * l.law.tail_mean(TRUNCATION));
        local + self.z_compensator_rate(s)
    }

    /// `μ^d` from its defining integrals: big jumps of the full kernel plus
    /// small jumps of the off-diagonal part.
    pub fn mu_d_direct(&self, s: State) -> f64 {
        let c = self.chars.state(s);
        let mut big = c.local.map_or(0.0, |l| l.rate * l.law.tail_mean(TRUNCATION));
        let mut small_off = 0.0;
        for (_, k, t) in self.outgoing(s) {
            if let Some(t) = t {
                big += k * t.prob * t.law.tail_mean(TRUNCATION);
                small_off += k * t.prob * t.law.truncated_moment(1, TRUNCATION);
            }
        }
        big + small_off
    }

    /// `b + μ^d = d + λ E X + Σ_β K p E Y`.
    pub fn compensator_rate(&self, s: State) -> f64 {
        self.truncated_drift(s) + self.mu_d(s)
    }

    /// Density of the predictable bracket of `ξ − A`.
    pub fn bracket_rate(&self, s: State) -> Moment {
        let c = self.chars.state(s);
        let local = c.local.map_or(Moment::Finite(0.0), |l| l.law.second_moment().scale(l.rate));
        let trans: Moment = self
            .outgoing(s)
            .into_iter()
            .filter_map(|(_, k, t)| t.map(|t| t.law.second_moment().scale(k * t.prob)))
            .sum();
        Moment::Finite(c.diffusion) + local + trans
    }

    /// Compensator density of the transition-jump part `Z`.
    pub fn z_compensator_rate(&self, s: State) -> f64 {
        self.outgoing(s)
            .into_iter()
            .filter_map(|(_, k, t)| t.map(|t| k * t.prob * t.law.mean()))
            .sum()
    }

    /// Density of `⟨Z⟩`, where `Z` jumps by the conditional mean of each
    /// transition jump.
    pub fn z_bracket_rate(&self, s: State) -> f64 {
        self.outgoing(s)
            .into_iter()
            .filter_map(|(_, k, t)| t.map(|t| k * (t.prob * t.law.mean()).powi(2)))
            .sum()
    }

    /// Rate of activated transition jumps (nonzero or not).
    pub fn transition_jump_rate(&self, s: State) -> f64 {
        self.outgoing(s).into_iter().filter_map(|(_, k, t)| t.map(|t| k * t.prob)).sum()
    }
}
