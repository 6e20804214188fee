use super::{MapModel, Moment};
use crate::error::{MapError, Result};
use crate::modulator::{stationary_measure, DarlingKac, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateConstants {
    pub state: State,
    pub pi: f64,
    pub b: f64,
    pub mu_d: f64,
    pub diffusion: f64,
    pub compensator_rate: f64,
    pub bracket_rate: f64,
    pub z_bracket_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitConstants {
    pub states: Vec<StateConstants>,
    /// Signed `Σ π (b + μ^d)`, the ergodic mean rate.
    pub m1: f64,
    /// `||ν_{B^c}|| + ∫ π μ^d`, with `||ν_{B^c}|| = Σ π |b|`.
    pub m1_tv: f64,
    pub nu_bc: f64,
    pub nu_c: f64,
    pub nu_bracket: f64,
    pub j: f64,
    pub pi_finite: bool,
    pub darling_kac: DarlingKac,
}

impl LimitConstants {
    /// `||ν_⟨ξ⟩||`: martingale-bracket variance constant.
    pub fn v_a(&self) -> f64 {
        self.nu_bracket
    }

    /// `||ν_⟨ξ⟩|| + 2J`.
    pub fn v_b(&self) -> f64 {
        self.nu_bracket + 2.0 * self.j
    }

    /// `(name, value)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("m1", self.m1),
            ("m1_total_variation", self.m1_tv),
            ("nu_Bc", self.nu_bc),
            ("nu_C", self.nu_c),
            ("nu_bracket", self.nu_bracket),
            ("J", self.j),
            ("v_A", self.v_a()),
            ("v_B", self.v_b()),
            ("alpha", self.darling_kac.alpha),
            ("h_scale", self.darling_kac.scale),
            ("pi_total_mass", if self.pi_finite { 1.0 } else { f64::INFINITY }),
        ]
    }
}

pub fn limit_constants(model: &MapModel) -> Result<LimitConstants> {
    let pi = stationary_measure(&model.modulator)?;
    let mut states = Vec::new();
    for s in model.support() {
        let bracket = match model.bracket_rate(s) {
            Moment::Finite(v) => v,
            Moment::Infinite => {
                return Err(MapError::HypothesisViolation {
                    hypothesis: "H8",
                    detail: format!("second jump moment at state {s} is infinite"),
                })
            }
        };
        states.push(StateConstants {
            state: s,
            pi: pi.weight(s),
            b: model.truncated_drift(s),
            mu_d: model.mu_d(s),
            diffusion: model.chars.state(s).diffusion,
            compensator_rate: model.compensator_rate(s),
            bracket_rate: bracket,
            z_bracket_rate: model.z_bracket_rate(s),
        });
    }
    let sum = |f: &dyn Fn(&StateConstants) -> f64| states.iter().map(|c| c.pi * f(c)).sum::<f64>();
    let m1 = sum(&|c| c.b + c.mu_d);
    let nu_bc = sum(&|c| c.b.abs());
    let mu_d_total = sum(&|c| c.mu_d);
    Ok(LimitConstants {
        m1,
        m1_tv: nu_bc + mu_d_total,
        nu_bc,
        nu_c: sum(&|c| c.diffusion),
        nu_bracket: sum(&|c| c.bracket_rate),
        j: sum(&|c| c.z_bracket_rate),
        pi_finite: pi.is_finite(),
        darling_kac: model.modulator.darling_kac(),
        states,
    })
}
