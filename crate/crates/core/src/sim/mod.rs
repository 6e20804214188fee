//! Exact event-driven simulation of the ordinate given a modulator path,
//! with the compensator, bracket and transition martingale tracked along it.

mod charfn;
mod compensation;
mod ensemble;
pub mod export;

pub use charfn::{conditional_charfn, empirical_charfn};
pub use compensation::{compensation_formula_check, CompensationOutcome, TestFunction};
pub use ensemble::{map_ensemble, simulate_ensemble, simulate_path, EnsembleSpec};

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{MapError, Result};
use crate::model::{LocalJumps, MapModel, Moment};
use crate::modulator::{ModulatorPath, State};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Local,
    Transition,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Local => "local",
            EventKind::Transition => "transition",
        }
    }
}

/// A nonzero ordinate jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub size: f64,
    pub kind: EventKind,
    pub from: State,
    pub to: State,
}

/// One simulated trajectory. All grid series start from 0 at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPath {
    pub modulator: ModulatorPath,
    pub events: Vec<Event>,
    /// Ordinate jump at each modulator transition, 0 when not activated.
    pub transition_sizes: Vec<f64>,
    pub grid: Vec<f64>,
    pub xi: Vec<f64>,
    /// Compensator `A`.
    pub a: Vec<f64>,
    /// Predictable bracket `⟨ξ − A⟩`.
    pub bracket: Vec<f64>,
    /// Transition martingale `Z`.
    pub z: Vec<f64>,
    pub z_angle: Vec<f64>,
    pub z_square: Vec<f64>,
}

impl MapPath {
    pub fn state_on_grid(&self) -> Vec<State> {
        self.grid.iter().map(|&g| self.modulator.state_at(g)).collect()
    }

    /// `ξ − A` on the grid.
    pub fn martingale(&self) -> Vec<f64> {
        self.xi.iter().zip(&self.a).map(|(x, a)| x - a).collect()
    }

    pub fn last(&self) -> Option<usize> {
        self.grid.len().checked_sub(1)
    }
}

/// Per-state rates after validation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct StateRates {
    drift: f64,
    diffusion: f64,
    local: Option<LocalJumps>,
    compensator: f64,
    bracket: f64,
    z_compensator: f64,
    z_bracket: f64,
}

/// A model compiled for repeated path simulation.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    model: &'a MapModel,
    table: BTreeMap<State, StateRates>,
    zero: StateRates,
}

pub(crate) fn check_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if grid.iter().any(|g| !(g.is_finite() && *g >= 0.0 && *g <= horizon)) {
        return Err(MapError::InvalidGrid(format!("grid points must lie in [0, {horizon}]")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MapError::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a MapModel) -> Result<Self> {
        let mut table = BTreeMap::new();
        for s in model.support() {
            let bracket = match model.bracket_rate(s) {
                Moment::Finite(v) => v,
                Moment::Infinite => {
                    return Err(MapError::HypothesisViolation {
                        hypothesis: "H8",
                        detail: format!("bracket rate at state {s} is infinite"),
                    })
                }
            };
            let c = model.chars.state(s);
            table.insert(
                s,
                StateRates {
                    drift: c.drift,
                    diffusion: c.diffusion,
                    local: c.local,
                    compensator: model.compensator_rate(s),
                    bracket,
                    z_compensator: model.z_compensator_rate(s),
                    z_bracket: model.z_bracket_rate(s),
                },
            );
        }
        Ok(Simulator { model, table, zero: StateRates::default() })
    }

    pub fn model(&self) -> &MapModel {
        self.model
    }

    fn rates(&self, s: State) -> &StateRates {
        self.table.get(&s).unwrap_or(&self.zero)
    }

    /// Simulates the ordinate along a given modulator path, with no
    /// discretization error at the grid times.
    pub fn simulate<R: Rng + ?Sized>(&self, path: &ModulatorPath, grid: &[f64], rng: &mut R) -> Result<MapPath> {
        check_grid(grid, path.horizon())?;
        let mut run = Run::new(grid);
        let transitions = path.jumps();
        for (k, seg) in path.segments().enumerate() {
            let r = *self.rates(seg.state);
            let last = k == transitions.len();
            run.enter(seg.start, r);
            if let Some(l) = r.local {
                let mut t = seg.start;
                loop {
                    t += rng::exponential(rng, l.rate);
                    if t >= seg.end {
                        break;
                    }
                    run.flush_before(t, rng);
                    let size = l.law.sample(rng);
                    run.jump_sum += size;
                    run.events.push(Event { time: t, size, kind: EventKind::Local, from: seg.state, to: seg.state });
                }
            }
            if last {
                run.flush_through(seg.end, rng);
                break;
            }
            run.flush_before(seg.end, rng);
            let (time, to) = transitions[k];
            let mut size = 0.0;
            if let Some(tj) = self.model.chars.transition(seg.state, to) {
                // the activation uniform is drawn even when prob is 0 or 1 to keep stream usage fixed
                let u: f64 = rng.random();
                if u < tj.prob {
                    size = tj.law.sample(rng);
                }
                run.z_jumps += tj.prob * tj.law.mean();
                run.z_sq += (tj.prob * tj.law.mean()).powi(2);
            }
            if size != 0.0 {
                run.jump_sum += size;
                run.events.push(Event { time, size, kind: EventKind::Transition, from: seg.state, to });
            }
            run.transition_sizes.push(size);
            run.leave(seg.end);
        }
        Ok(run.finish(path.clone()))
    }
}

/// Running totals for one path. Continuous functionals are stored at the
/// start of the current segment and extended linearly to grid times.
struct Run<'g> {
    grid: &'g [f64],
    next: usize,
    seg_start: f64,
    rates: StateRates,
    drift_int: f64,
    c_int: f64,
    a_int: f64,
    br_int: f64,
    zc_int: f64,
    zb_int: f64,
    jump_sum: f64,
    z_jumps: f64,
    z_sq: f64,
    brownian: f64,
    c_at_last_grid: f64,
    events: Vec<Event>,
    transition_sizes: Vec<f64>,
    out: [Vec<f64>; 6],
}

impl<'g> Run<'g> {
    fn new(grid: &'g [f64]) -> Self {
        Run {
            grid,
            next: 0,
            seg_start: 0.0,
            rates: StateRates::default(),
            drift_int: 0.0,
            c_int: 0.0,
            a_int: 0.0,
            br_int: 0.0,
            zc_int: 0.0,
            zb_int: 0.0,
            jump_sum: 0.0,
            z_jumps: 0.0,
            z_sq: 0.0,
            brownian: 0.0,
            c_at_last_grid: 0.0,
            events: Vec::new(),
            transition_sizes: Vec::new(),
            out: std::array::from_fn(|_| Vec::with_capacity(grid.len())),
        }
    }

    fn enter(&mut self, start: f64, rates: StateRates) {
        self.seg_start = start;
        self.rates = rates;
    }

    fn leave(&mut self, end: f64) {
        let dt = end - self.seg_start;
        let r = &self.rates;
        self.drift_int += r.drift * dt;
        self.c_int += r.diffusion * dt;
        self.a_int += r.compensator * dt;
        self.br_int += r.bracket * dt;
        self.zc_int += r.z_compensator * dt;
        self.zb_int += r.z_bracket * dt;
    }

    fn record<R: Rng + ?Sized>(&mut self, g: f64, rng: &mut R) {
        let dt = g - self.seg_start;
        let r = &self.rates;
        let c = self.c_int + r.diffusion * dt;
        let dc = c - self.c_at_last_grid;
        if dc > 0.0 {
            self.brownian += dc.sqrt() * rng::standard_normal(rng);
        }
        self.c_at_last_grid = c;
        let xi = self.drift_int + r.drift * dt + self.brownian + self.jump_sum;
        let vals = [
            xi,
            self.a_int + r.compensator * dt,
            self.br_int + r.bracket * dt,
            self.z_jumps - (self.zc_int + r.z_compensator * dt),
            self.zb_int + r.z_bracket * dt,
            self.z_sq,
        ];
        for (o, v) in self.out.iter_mut().zip(vals) {
            o.push(v);
        }
    }

    fn flush_before<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) {
        while self.next < self.grid.len() && self.grid[self.next] < t {
            self.record(self.grid[self.next], rng);
            self.next += 1;
        }
    }

    fn flush_through<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) {
        while self.next < self.grid.len() && self.grid[self.next] <= t {
            self.record(self.grid[self.next], rng);
            self.next += 1;
        }
    }

    fn finish(self, modulator: ModulatorPath) -> MapPath {
        let [xi, a, bracket, z, z_angle, z_square] = self.out;
        MapPath {
            modulator,
            events: self.events,
            transition_sizes: self.transition_sizes,
            grid: self.grid.to_vec(),
            xi,
            a,
            bracket,
            z,
            z_angle,
            z_square,
        }
    }
}

/// Simulates along a given modulator path. Compiles the model each call;
/// use [`Simulator`] for repeated draws.
pub fn simulate_map<R: Rng + ?Sized>(
    model: &MapModel,
    path: &ModulatorPath,
    grid: &[f64],
    rng: &mut R,
) -> Result<MapPath> {
    Simulator::new(model)?.simulate(path, grid, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JumpLaw, MapCharacteristics};
    use crate::modulator::{occupation_functional, simulate_modulator, ModulatorSpec};
    use crate::rng::Seed;
    use crate::stats::Summary;

    fn sym2() -> ModulatorSpec {
        ModulatorSpec::finite(&["a", "b"], &[("a", "b", 1.0), ("b", "a", 2.0)]).unwrap()
    }

    fn grid(n: usize, t: f64) -> Vec<f64> {
        (0..=n).map(|i| t * i as f64 / n as f64).collect()
    }

    #[test]
    fn zero_characteristics_give_zero_paths() {
        let model = MapModel::new(sym2(), MapCharacteristics::new()).unwrap();
        let mut rng = Seed(1).stream(0);
        let mp = simulate_modulator(&model.modulator, State(0), 10.0, &mut rng).unwrap();
        let p = simulate_map(&model, &mp, &grid(10, 10.0), &mut rng).unwrap();
        assert!(p.xi.iter().chain(&p.a).chain(&p.bracket).chain(&p.z).all(|&v| v == 0.0));
        assert!(p.events.is_empty());
    }

    #[test]
    fn unit_drift_is_time() {
        let mut c = MapCharacteristics::new();
        c.set_drift(State(0), 1.0).set_drift(State(1), 1.0);
        let model = MapModel::new(sym2(), c).unwrap();
        let mut rng = Seed(2).stream(0);
        let mp = simulate_modulator(&model.modulator, State(0), 7.0, &mut rng).unwrap();
        let g = grid(7, 7.0);
        let p = simulate_map(&model, &mp, &g, &mut rng).unwrap();
        for (i, &t) in g.iter().enumerate() {
            assert!((p.xi[i] - t).abs() < 1e-12 && (p.a[i] - t).abs() < 1e-12);
            assert_eq!(p.bracket[i], 0.0);
        }
    }

    #[test]
    fn poisson_mean_and_variance() {
        let spec = ModulatorSpec::finite(&["x"], &[]).unwrap();
        let mut c = MapCharacteristics::new();
        c.set_local_jump(State(0), 1.0, JumpLaw::PointMass { value: 1.0 });
        let model = MapModel::new(spec, c).unwrap();
        let sim = Simulator::new(&model).unwrap();
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = Seed(3).stream(i);
                let mp = simulate_modulator(&model.modulator, State(0), 1.0, &mut rng).unwrap();
                sim.simulate(&mp, &[1.0], &mut rng).unwrap().xi[0]
            })
            .collect();
        let s: Summary = xs.iter().copied().collect();
        assert!((s.mean - 1.0).abs() < 3.0 * s.se());
        // Var of the sample variance for Poisson(1): (μ4 − σ⁴)/n with μ4 = 1 + 3
        let var_se = ((4.0 - 1.0) / n as f64).sqrt();
        assert!((s.variance() - 1.0).abs() < 3.0 * var_se);
    }

    #[test]
    fn functionals_follow_occupation() {
        let mut c = MapCharacteristics::new();
        c.set_drift(State(0), 0.3).set_diffusion(State(1), 2.0);
        c.set_local_jump(State(0), 1.5, JumpLaw::Gaussian { mean: 0.5, sd: 1.0 });
        c.set_transition_jump(State(0), State(1), 0.6, JumpLaw::PointMass { value: 2.0 });
        c.set_transition_jump(State(1), State(0), 1.0, JumpLaw::Gaussian { mean: -1.0, sd: 0.2 });
        let model = MapModel::new(sym2(), c).unwrap();
        let mut rng = Seed(4).stream(0);
        let mp = simulate_modulator(&model.modulator, State(0), 20.0, &mut rng).unwrap();
        let p = simulate_map(&model, &mp, &grid(40, 20.0), &mut rng).unwrap();
        let last = p.last().unwrap();
        let a = occupation_functional(&mp, |s| model.compensator_rate(s));
        assert!((p.a[last] - a).abs() <= 1e-12 * a.abs().max(1.0));
        assert!(p.bracket.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(p.transition_sizes.len(), mp.jumps().len());
        for e in &p.events {
            if e.kind == EventKind::Transition {
                assert!(mp.jumps().iter().any(|j| j.0 == e.time));
            }
        }
        // ξ at the horizon equals drift + Brownian + jumps; check jumps part without diffusion
        assert_eq!(p.xi[0], 0.0);
        assert_eq!(p.z[0], 0.0);
    }

    #[test]
    fn event_on_grid_point_is_included() {
        let spec = sym2();
        let mut c = MapCharacteristics::new();
        c.set_transition_jump(State(0), State(1), 1.0, JumpLaw::PointMass { value: 5.0 });
        let model = MapModel::new(spec, c).unwrap();
        let mp = ModulatorPath::new(State(0), vec![(1.0, State(1))], 2.0).unwrap();
        let p = simulate_map(&model, &mp, &[0.5, 1.0, 2.0], &mut Seed(5).stream(0)).unwrap();
        assert_eq!(p.xi, vec![0.0, 5.0, 5.0]);
        assert_eq!(p.transition_sizes, vec![5.0]);
        // Z jumps by 5 at t=1 and is compensated at rate K·p·5 = 5 in state 0
        assert!((p.z[0] + 2.5).abs() < 1e-12);
        assert!((p.z[1] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grid_and_heavy_tails() {
        let model = MapModel::new(sym2(), MapCharacteristics::new()).unwrap();
        let mp = ModulatorPath::new(State(0), vec![], 1.0).unwrap();
        let mut rng = Seed(6).stream(0);
        assert!(simulate_map(&model, &mp, &[0.5, 0.2], &mut rng).is_err());
        assert!(simulate_map(&model, &mp, &[2.0], &mut rng).is_err());
        let mut c = MapCharacteristics::new();
        c.set_local_jump(State(0), 1.0, JumpLaw::ShiftedPareto { tail_index: 1.5, scale: 1.0 });
        let model = MapModel::new(sym2(), c).unwrap();
        assert!(matches!(Simulator::new(&model), Err(MapError::HypothesisViolation { hypothesis: "H8", .. })));
    }
}
