use super::{EnsembleSpec, EventKind, MapPath, Simulator};
use crate::error::{MapError, Result};
use crate::model::{JumpLaw, MapModel};
use crate::modulator::{occupation_functional, stationary_measure, InitialLaw, State};
use crate::report::{Rule, TestReport, Uncertainty};
use crate::rng::Seed;
use crate::sim::map_ensemble;
use crate::stats::Summary;

/// Bounded functions `g(θ, β, y)` of a jump of `(Θ, ξ)` from state `θ` to
/// `β` with ordinate increment `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Zero,
    /// Nonzero ordinate jumps fired by a modulator transition.
    TransitionJumps,
    /// `y² ∧ cap`.
    CappedSquare { cap: f64 },
    /// Modulator jumps out of `from`, with or without an ordinate jump.
    ModulatorExits { from: State },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Zero => "zero".into(),
            TestFunction::TransitionJumps => "transition_jumps".into(),
            TestFunction::CappedSquare { cap } => format!("capped_square_{cap}"),
            TestFunction::ModulatorExits { from } => format!("exits_from_{from}"),
        }
    }

    pub fn eval(&self, from: State, to: State, y: f64) -> f64 {
        match *self {
            TestFunction::Zero => 0.0,
            TestFunction::TransitionJumps => f64::from(from != to && y != 0.0),
            TestFunction::CappedSquare { cap } => (y * y).min(cap),
            TestFunction::ModulatorExits { from: s } => f64::from(from == s && to != from),
        }
    }

    /// `E g(θ, β, Y)` for `Y` drawn from `law`.
    fn law_mean(&self, from: State, to: State, law: &JumpLaw) -> f64 {
        match *self {
            TestFunction::Zero => 0.0,
            TestFunction::TransitionJumps => f64::from(from != to) * (1.0 - law.mass_at_zero()),
            TestFunction::CappedSquare { cap } => law.capped_square_mean(cap),
            TestFunction::ModulatorExits { .. } => self.eval(from, to, 1.0),
        }
    }

    /// `G(θ) = ∫ Π(θ, dβ, dy) g(θ, β, y)`, including modulator moves that
    /// leave the ordinate unchanged.
    pub fn intensity(&self, model: &MapModel, s: State) -> f64 {
        let c = model.chars.state(s);
        let local = c.local.map_or(0.0, |l| l.rate * self.law_mean(s, s, &l.law));
        let moves: f64 = model
            .outgoing(s)
            .into_iter()
            .map(|(b, k, tj)| match tj {
                Some(tj) => k * (tj.prob * self.law_mean(s, b, &tj.law) + (1.0 - tj.prob) * self.eval(s, b, 0.0)),
                None => k * self.eval(s, b, 0.0),
            })
            .sum();
        local + moves
    }

    /// `Σ g` over all jumps of the pair process up to time `t` on the path.
    pub fn jump_sum(&self, path: &MapPath, t: f64) -> f64 {
        let local: f64 = path
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Local && e.time <= t)
            .map(|e| self.eval(e.from, e.to, e.size))
            .sum();
        let moves: f64 = path
            .modulator
            .transitions()
            .zip(&path.transition_sizes)
            .filter(|((time, _, _), _)| *time <= t)
            .map(|((_, from, to), &y)| self.eval(from, to, y))
            .sum();
        local + moves
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensationOutcome {
    pub lhs_mean: f64,
    pub rhs_mean: f64,
    /// `t Σ π G` under a stationary start, when π is a probability.
    pub stationary_expectation: Option<f64>,
    pub report: TestReport,
}

/// Absolute slack when both sides vanish identically.
const COMPENSATION_FLOOR: f64 = 1e-12;

/// Checks `E Σ_{s<=t} g(jumps) = E ∫_0^t G(Θ_s) ds` with a paired Monte Carlo
/// difference over `paths` trajectories.
pub fn compensation_formula_check(
    model: &MapModel,
    initial: InitialLaw,
    g: TestFunction,
    t: f64,
    paths: usize,
    seed: Seed,
) -> Result<CompensationOutcome> {
    if paths < 2 {
        return Err(MapError::InvalidArgument("need at least two paths".into()));
    }
    let sim = Simulator::new(model)?;
    let spec = EnsembleSpec { initial, horizon: t, grid: vec![t], paths, seed };
    let pairs = map_ensemble(&sim, &spec, |_, p| {
        let lhs = g.jump_sum(&p, t);
        let rhs = occupation_functional(&p.modulator, |s| g.intensity(model, s));
        (lhs, rhs)
    })?;
    let lhs: Summary = pairs.iter().map(|p| p.0).collect();
    let rhs: Summary = pairs.iter().map(|p| p.1).collect();
    let diff: Summary = pairs.iter().map(|p| p.0 - p.1).collect();
    let pi = stationary_measure(&model.modulator)?;
    let stationary_expectation = (pi.is_finite() && initial == InitialLaw::Stationary)
        .then(|| t * model.support().iter().map(|&s| pi.weight(s) * g.intensity(model, s)).sum::<f64>());
    let report = TestReport::new(
        format!("compensation_{}_t={t}", g.name()),
        lhs.mean,
        rhs.mean,
        "compensator integral, same paths",
        Uncertainty::Se(diff.se()),
        Rule::WithinSe { k: 3.0, floor: COMPENSATION_FLOOR },
        paths,
        seed.0,
    );
    Ok(CompensationOutcome { lhs_mean: lhs.mean, rhs_mean: rhs.mean, stationary_expectation, report })
}
