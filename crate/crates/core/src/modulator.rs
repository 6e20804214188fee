//! The modulating Markov chain: finite-state chains and the continuous-time
//! simple symmetric random walk on the integers.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{MapError, Result};
use crate::rng::{self, Seed};
use crate::stats::Summary;

/// A modulator state. Finite chains use `0..n` indexed in label order; the
/// symmetric walk uses the integer position itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(pub i64);

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    labels: Vec<String>,
    /// Row-major `n x n` rate matrix with zero diagonal.
    rates: Vec<f64>,
    exit: Vec<f64>,
}

impl FiniteChain {
    /// Builds a chain from state labels and `(from, to, rate)` triples.
    /// Repeated triples for the same pair are summed.
    pub fn new(labels: Vec<String>, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(MapError::InvalidModulator("no states".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(MapError::InvalidModulator(format!("duplicate state label `{l}`")));
            }
        }
        let mut rates = vec![0.0; n * n];
        for &(from, to, rate) in triples {
            if from >= n || to >= n {
                return Err(MapError::InvalidModulator(format!("rate ({from}, {to}) references unknown state")));
            }
            if from == to {
                return Err(MapError::InvalidModulator(format!("self-rate on state `{}`", labels[from])));
            }
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(MapError::InvalidModulator(format!("rate {rate} is not a nonnegative finite number")));
            }
            rates[from * n + to] += rate;
        }
        let exit: Vec<f64> = (0..n).map(|i| rates[i * n..(i + 1) * n].iter().sum()).collect();
        // a lone state is a constant environment, not an absorbing trap
        if let Some(i) = exit.iter().position(|&q| q <= 0.0).filter(|_| n > 1) {
            return Err(MapError::AbsorbingState(State(i as i64)));
        }
        let chain = FiniteChain { labels, rates, exit };
        chain.check_irreducible()?;
        Ok(chain)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from * self.len() + to]
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if !seen[j] && self.rate(i, j) > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    fn check_irreducible(&self) -> Result<()> {
        for i in 0..self.len() {
            if let Some(j) = self.reachable_from(i).iter().position(|&r| !r) {
                return Err(MapError::Reducible(format!(
                    "state `{}` cannot reach `{}`",
                    self.labels[i], self.labels[j]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModulatorSpec {
    FiniteChain(FiniteChain),
    /// Jumps to `x ± 1` at rate 1/2 each.
    SymmetricWalk,
}

/// Darling-Kac normalization `h(t) = scale * t^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarlingKac {
    pub alpha: f64,
    pub scale: f64,
}

impl DarlingKac {
    pub fn h(&self, t: f64) -> f64 {
        self.scale * t.powf(self.alpha)
    }
}

impl ModulatorSpec {
    pub fn finite(labels: &[&str], triples: &[(&str, &str, f64)]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let index = |l: &str| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| MapError::InvalidModulator(format!("unknown state `{l}`")))
        };
        let idx = triples
            .iter()
            .map(|&(a, b, r)| Ok((index(a)?, index(b)?, r)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModulatorSpec::FiniteChain(FiniteChain::new(labels, &idx)?))
    }

    pub fn is_positive_recurrent(&self) -> bool {
        matches!(self, ModulatorSpec::FiniteChain(_))
    }

    pub fn contains(&self, s: State) -> bool {
        match self {
            ModulatorSpec::FiniteChain(c) => s.0 >= 0 && (s.0 as usize) < c.len(),
            ModulatorSpec::SymmetricWalk => true,
        }
    }

    pub fn exit_rate(&self, s: State) -> f64 {
        match self {
            ModulatorSpec::FiniteChain(c) => c.exit[s.0 as usize],
            ModulatorSpec::SymmetricWalk => 1.0,
        }
    }

    pub fn rate(&self, from: State, to: State) -> f64 {
        match self {
            ModulatorSpec::FiniteChain(c) => {
                if from == to {
                    0.0
                } else {
                    c.rate(from.0 as usize, to.0 as usize)
                }
            }
            ModulatorSpec::SymmetricWalk => {
                if (from.0 - to.0).abs() == 1 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    /// Target states with positive rate, in ascending order.
    pub fn neighbors(&self, s: State) -> Vec<(State, f64)> {
        match self {
            ModulatorSpec::FiniteChain(c) => (0..c.len())
                .filter(|&j| j as i64 != s.0)
                .map(|j| (State(j as i64), c.rate(s.0 as usize, j)))
                .filter(|(_, r)| *r > 0.0)
                .collect(),
            ModulatorSpec::SymmetricWalk => vec![(State(s.0 - 1), 0.5), (State(s.0 + 1), 0.5)],
        }
    }

    pub fn label(&self, s: State) -> String {
        match self {
            ModulatorSpec::FiniteChain(c) => c.labels[s.0 as usize].clone(),
            ModulatorSpec::SymmetricWalk => s.0.to_string(),
        }
    }

    pub fn state_of(&self, label: &str) -> Option<State> {
        match self {
            ModulatorSpec::FiniteChain(c) => c.labels.iter().position(|l| l == label).map(|i| State(i as i64)),
            ModulatorSpec::SymmetricWalk => label.trim().parse::<i64>().ok().map(State),
        }
    }

    /// `h(t) = t` for positive recurrent chains (π a probability), and
    /// `h(t) = sqrt(t / 2)` for the walk with counting measure.
    pub fn darling_kac(&self) -> DarlingKac {
        match self {
            ModulatorSpec::FiniteChain(_) => DarlingKac { alpha: 1.0, scale: 1.0 },
            ModulatorSpec::SymmetricWalk => DarlingKac { alpha: 0.5, scale: std::f64::consts::FRAC_1_SQRT_2 },
        }
    }

    fn next_state<R: Rng + ?Sized>(&self, s: State, rng: &mut R) -> State {
        match self {
            ModulatorSpec::FiniteChain(c) => {
                let n = c.len();
                let i = s.0 as usize;
                let target = rng.random::<f64>() * c.exit[i];
                let mut cum = 0.0;
                let mut last = None;
                for j in 0..n {
                    let r = c.rates[i * n + j];
                    if r <= 0.0 {
                        continue;
                    }
                    cum += r;
                    last = Some(j);
                    if target < cum {
                        return State(j as i64);
                    }
                }
                // target landed on the rounding slack above the final cumulative sum
                State(last.expect("validated chain has a positive rate") as i64)
            }
            ModulatorSpec::SymmetricWalk => {
                if rng.random::<bool>() {
                    State(s.0 + 1)
                } else {
                    State(s.0 - 1)
                }
            }
        }
    }
}

/// How the modulator's initial state is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw {
    Fixed(State),
    /// Draw from the stationary distribution (finite chains only).
    Stationary,
}

impl InitialLaw {
    pub fn sample<R: Rng + ?Sized>(&self, spec: &ModulatorSpec, rng: &mut R) -> Result<State> {
        match *self {
            InitialLaw::Fixed(s) => Ok(s),
            InitialLaw::Stationary => {
                let pi = stationary_measure(spec)?;
                let weights = match &pi.weights {
                    Weights::Probability(w) => w,
                    Weights::Counting => {
                        return Err(MapError::InvalidArgument(
                            "a stationary initial law needs a finite invariant measure".into(),
                        ))
                    }
                };
                let u = rng.random::<f64>();
                let mut cum = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    cum += w;
                    if u < cum {
                        return Ok(State(i as i64));
                    }
                }
                Ok(State(weights.len() as i64 - 1))
            }
        }
    }

    pub fn validate(&self, spec: &ModulatorSpec) -> Result<()> {
        match *self {
            InitialLaw::Fixed(s) if !spec.contains(s) => {
                Err(MapError::InvalidModulator(format!("initial state {s} is not in the state space")))
            }
            InitialLaw::Stationary if !spec.is_positive_recurrent() => Err(MapError::InvalidModulator(
                "stationary initial law requires a positive recurrent chain".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// A realized càdlàg modulator trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorPath {
    initial: State,
    jumps: Vec<(f64, State)>,
    horizon: f64,
}

/// A maximal interval `[start, end)` on which the modulator sits in `state`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub state: State,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

impl ModulatorPath {
    pub fn new(initial: State, jumps: Vec<(f64, State)>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(MapError::InvalidHorizon(horizon));
        }
        let mut prev_t = 0.0;
        let mut prev_s = initial;
        for &(t, s) in &jumps {
            if !(t > prev_t && t <= horizon) {
                return Err(MapError::InvalidModulator(format!("jump time {t} out of order or outside (0, {horizon}]")));
            }
            if s == prev_s {
                return Err(MapError::InvalidModulator(format!("self-jump at time {t}")));
            }
            prev_t = t;
            prev_s = s;
        }
        Ok(ModulatorPath { initial, jumps, horizon })
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    pub fn jumps(&self) -> &[(f64, State)] {
        &self.jumps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn final_state(&self) -> State {
        self.jumps.last().map_or(self.initial, |&(_, s)| s)
    }

    /// State at time `t`, right-continuous at jump times.
    pub fn state_at(&self, t: f64) -> State {
        let k = self.jumps.partition_point(|&(u, _)| u <= t);
        if k == 0 {
            self.initial
        } else {
            self.jumps[k - 1].1
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.jumps.len();
        (0..=n).map(move |k| {
            let start = if k == 0 { 0.0 } else { self.jumps[k - 1].0 };
            let state = if k == 0 { self.initial } else { self.jumps[k - 1].1 };
            let end = if k == n { self.horizon } else { self.jumps[k].0 };
            Segment { start, end, state }
        })
    }

    /// Modulator transitions as `(time, from, to)`.
    pub fn transitions(&self) -> impl Iterator<Item = (f64, State, State)> + '_ {
        self.jumps.iter().enumerate().map(move |(k, &(t, to))| {
            let from = if k == 0 { self.initial } else { self.jumps[k - 1].1 };
            (t, from, to)
        })
    }

    /// Completed holding times (the censored last sojourn is dropped).
    pub fn holding_times(&self) -> Vec<(State, f64)> {
        let n = self.jumps.len();
        self.segments().take(n).map(|s| (s.state, s.len())).collect()
    }

    /// Appends `next`, shifted by this path's horizon. If `next` starts in a
    /// different state a jump is inserted at the junction.
    pub fn concat(&self, next: &ModulatorPath) -> Result<ModulatorPath> {
        let mut jumps = self.jumps.clone();
        let offset = self.horizon;
        if next.initial != self.final_state() {
            if offset <= jumps.last().map_or(0.0, |j| j.0) {
                return Err(MapError::InvalidModulator("cannot insert a junction jump at time 0".into()));
            }
            jumps.push((offset, next.initial));
        }
        jumps.extend(next.jumps.iter().map(|&(t, s)| (t + offset, s)));
        ModulatorPath::new(self.initial, jumps, offset + next.horizon)
    }
}

/// Streams the segments of a fresh modulator trajectory without storing it.
pub struct SegmentSampler<'a, R: Rng + ?Sized> {
    spec: &'a ModulatorSpec,
    rng: &'a mut R,
    state: State,
    time: f64,
    horizon: f64,
    done: bool,
}

impl<'a, R: Rng + ?Sized> SegmentSampler<'a, R> {
    pub fn new(spec: &'a ModulatorSpec, initial: State, horizon: f64, rng: &'a mut R) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(MapError::InvalidHorizon(horizon));
        }
        if !spec.contains(initial) {
            return Err(MapError::InvalidModulator(format!("initial state {initial} is not in the state space")));
        }
        Ok(SegmentSampler { spec, rng, state: initial, time: 0.0, horizon, done: false })
    }
}

impl<R: Rng + ?Sized> Iterator for SegmentSampler<'_, R> {
    /// The segment and, unless it was cut by the horizon, the next state.
    type Item = (Segment, Option<State>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let q = self.spec.exit_rate(self.state);
        let end = if q > 0.0 { self.time + rng::exponential(self.rng, q) } else { f64::INFINITY };
        let start = self.time;
        let state = self.state;
        if end > self.horizon {
            self.done = true;
            return Some((Segment { start, end: self.horizon, state }, None));
        }
        let next = self.spec.next_state(state, self.rng);
        self.state = next;
        self.time = end;
        Some((Segment { start, end, state }, Some(next)))
    }
}

pub fn simulate_modulator<R: Rng + ?Sized>(
    spec: &ModulatorSpec,
    initial: State,
    horizon: f64,
    rng: &mut R,
) -> Result<ModulatorPath> {
    let mut jumps = Vec::new();
    for (seg, next) in SegmentSampler::new(spec, initial, horizon, rng)? {
        if let Some(s) = next {
            jumps.push((seg.end, s));
        }
    }
    Ok(ModulatorPath { initial, jumps, horizon })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Probability(Vec<f64>),
    /// All weights one, infinite total mass.
    Counting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryMeasure {
    pub weights: Weights,
}

impl StationaryMeasure {
    pub fn weight(&self, s: State) -> f64 {
        match &self.weights {
            Weights::Probability(w) => w.get(s.0 as usize).copied().unwrap_or(0.0),
            Weights::Counting => 1.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.weights, Weights::Probability(_))
    }

    pub fn total_mass(&self) -> f64 {
        match &self.weights {
            Weights::Probability(_) => 1.0,
            Weights::Counting => f64::INFINITY,
        }
    }

    /// `π(g)` for a finitely supported `g`.
    pub fn integrate(&self, g: &StateFunction) -> f64 {
        g.iter().map(|(s, v)| self.weight(s) * v).sum()
    }

    /// `max_β |Σ_θ π(θ) K(θ, β) − π(β) q(β)|`; zero for the walk.
    pub fn balance_residual(&self, spec: &ModulatorSpec) -> f64 {
        match (&self.weights, spec) {
            (Weights::Probability(w), ModulatorSpec::FiniteChain(c)) => (0..c.len())
                .map(|b| {
                    let inflow: f64 = (0..c.len()).map(|a| w[a] * c.rate(a, b)).sum();
                    (inflow - w[b] * c.exit[b]).abs()
                })
                .fold(0.0, f64::max),
            _ => 0.0,
        }
    }
}

pub fn stationary_measure(spec: &ModulatorSpec) -> Result<StationaryMeasure> {
    let chain = match spec {
        ModulatorSpec::SymmetricWalk => return Ok(StationaryMeasure { weights: Weights::Counting }),
        ModulatorSpec::FiniteChain(c) => c,
    };
    chain.check_irreducible()?;
    let n = chain.len();
    // Q^T π = 0 with the last balance equation replaced by Σ π = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for b in 0..n {
        for s in 0..n {
            a[(b, s)] = if s == b { -chain.exit[b] } else { chain.rate(s, b) };
        }
    }
    for s in 0..n {
        a[(n - 1, s)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| MapError::Reducible("singular balance equations".into()))?;
    let weights: Vec<f64> = pi.iter().map(|&w| w.max(0.0)).collect();
    let measure = StationaryMeasure { weights: Weights::Probability(weights) };
    let residual = measure.balance_residual(spec);
    let scale = chain.exit.iter().cloned().fold(1.0, f64::max);
    if residual > 1e-10 * scale {
        return Err(MapError::Reducible(format!("balance residual {residual:e} after solve")));
    }
    Ok(measure)
}

/// A finitely supported nonnegative state function, zero off its support.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateFunction(BTreeMap<State, f64>);

impl StateFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn indicator(s: State) -> Self {
        let mut f = Self::new();
        f.set(s, 1.0);
        f
    }

    pub fn set(&mut self, s: State, v: f64) -> &mut Self {
        self.0.insert(s, v);
        self
    }

    pub fn get(&self, s: State) -> f64 {
        self.0.get(&s).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (State, f64)> + '_ {
        self.0.iter().map(|(&s, &v)| (s, v))
    }
}

/// `∫_0^T f(Θ_s) ds`, exact for the piecewise constant path.
pub fn occupation_functional(path: &ModulatorPath, f: impl Fn(State) -> f64) -> f64 {
    path.segments().map(|seg| f(seg.state) * seg.len()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarlingKacPoint {
    pub t: f64,
    /// Monte Carlo `E[∫_0^∞ e^{-s/t} g(Θ_s) ds] / π(g)`.
    pub h_hat: f64,
    pub se: f64,
}

/// Discount weight below which the resolvent integral is truncated.
const DISCOUNT_CUTOFF: f64 = 1e-8;

/// Monte Carlo estimate of the resolvent `E_θ[∫_0^∞ e^{-s/t} g(Θ_s) ds] / π(g)`
/// on a grid of `t`. All `t` share the same paths.
pub fn darling_kac_estimate(
    spec: &ModulatorSpec,
    initial: InitialLaw,
    g: &StateFunction,
    t_grid: &[f64],
    paths: usize,
    seed: Seed,
) -> Result<Vec<DarlingKacPoint>> {
    initial.validate(spec)?;
    let pi = stationary_measure(spec)?;
    let pi_g = pi.integrate(g);
    if !(pi_g > 0.0 && pi_g.is_finite()) {
        return Err(MapError::InvalidArgument(format!("π(g) must be positive and finite, got {pi_g}")));
    }
    if g.iter().any(|(_, v)| !(v >= 0.0 && v.is_finite())) {
        return Err(MapError::InvalidArgument("g must be finite and nonnegative".into()));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(MapError::InvalidArgument("discount times must be positive".into()));
    }
    if paths < 2 {
        return Err(MapError::InvalidArgument("need at least two paths".into()));
    }
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let horizon = t_max * (1.0 / DISCOUNT_CUTOFF).ln();
    let per_path: Vec<Vec<f64>> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i);
            let start = initial.sample(spec, &mut rng)?;
            let mut acc = vec![0.0; t_grid.len()];
            for (seg, _) in SegmentSampler::new(spec, start, horizon, &mut rng)? {
                let v = g.get(seg.state);
                if v == 0.0 {
                    continue;
                }
                for (a, &t) in acc.iter_mut().zip(t_grid) {
                    *a += v * t * ((-seg.start / t).exp() - (-seg.end / t).exp());
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let s = Summary::from_iter(per_path.iter().map(|v| v[k] / pi_g));
            DarlingKacPoint { t, h_hat: s.mean, se: s.se() }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(a: f64, b: f64) -> ModulatorSpec {
        ModulatorSpec::finite(&["1", "2"], &[("1", "2", a), ("2", "1", b)]).unwrap()
    }

    #[test]
    fn zero_horizon_has_no_jumps() {
        let spec = two_state(1.0, 1.0);
        let path = simulate_modulator(&spec, State(0), 0.0, &mut Seed(1).stream(0)).unwrap();
        assert!(path.jumps().is_empty());
        assert_eq!(path.horizon(), 0.0);
    }

    #[test]
    fn single_state_chain_is_constant() {
        let spec = ModulatorSpec::finite(&["only"], &[]).unwrap();
        let path = simulate_modulator(&spec, State(0), 10.0, &mut Seed(1).stream(0)).unwrap();
        assert!(path.jumps().is_empty());
        assert_eq!(stationary_measure(&spec).unwrap().weight(State(0)), 1.0);
        let err = ModulatorSpec::finite(&["a", "b"], &[("a", "b", 1.0)]).unwrap_err();
        assert_eq!(err, MapError::AbsorbingState(State(1)));
    }

    #[test]
    fn reducible_chain_rejected() {
        let err = ModulatorSpec::finite(&["a", "b", "c"], &[("a", "b", 1.0), ("b", "a", 1.0), ("c", "a", 1.0)]);
        assert!(matches!(err, Err(MapError::Reducible(_))));
    }

    #[test]
    fn rejects_bad_horizon_and_negative_rates() {
        let spec = two_state(1.0, 1.0);
        let mut rng = Seed(1).stream(0);
        assert!(matches!(
            simulate_modulator(&spec, State(0), f64::NAN, &mut rng),
            Err(MapError::InvalidHorizon(_))
        ));
        assert!(ModulatorSpec::finite(&["1", "2"], &[("1", "2", -1.0), ("2", "1", 1.0)]).is_err());
    }

    #[test]
    fn stationary_two_state() {
        let pi = stationary_measure(&two_state(1.0, 1.0)).unwrap();
        assert!((pi.weight(State(0)) - 0.5).abs() < 1e-14);
        // K(1,2) = 1, K(2,1) = 2 gives π = (2/3, 1/3)
        let spec = two_state(1.0, 2.0);
        let pi = stationary_measure(&spec).unwrap();
        assert!((pi.weight(State(0)) - 2.0 / 3.0).abs() < 1e-14);
        assert!((pi.weight(State(1)) - 1.0 / 3.0).abs() < 1e-14);
        assert!(pi.balance_residual(&spec) < 1e-10);
    }

    #[test]
    fn stationary_walk_is_counting() {
        let pi = stationary_measure(&ModulatorSpec::SymmetricWalk).unwrap();
        assert!(!pi.is_finite());
        assert_eq!(pi.weight(State(-17)), 1.0);
        assert_eq!(pi.total_mass(), f64::INFINITY);
    }

    #[test]
    fn occupation_identities() {
        let spec = two_state(1.0, 1.0);
        let path = simulate_modulator(&spec, State(0), 50.0, &mut Seed(3).stream(0)).unwrap();
        assert!((occupation_functional(&path, |_| 1.0) - 50.0).abs() < 1e-12);
        assert_eq!(occupation_functional(&path, |_| 0.0), 0.0);
    }

    #[test]
    fn occupation_additive_under_concatenation() {
        let spec = two_state(1.0, 3.0);
        let a = simulate_modulator(&spec, State(0), 7.0, &mut Seed(3).stream(0)).unwrap();
        let b = simulate_modulator(&spec, State(1), 4.0, &mut Seed(3).stream(1)).unwrap();
        let ab = a.concat(&b).unwrap();
        let f = |s: State| if s.0 == 0 { 2.5 } else { -1.0 };
        let lhs = occupation_functional(&ab, f);
        let rhs = occupation_functional(&a, f) + occupation_functional(&b, f);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn path_validation() {
        assert!(ModulatorPath::new(State(0), vec![(1.0, State(1)), (0.5, State(0))], 2.0).is_err());
        assert!(ModulatorPath::new(State(0), vec![(1.0, State(0))], 2.0).is_err());
        assert!(ModulatorPath::new(State(0), vec![(3.0, State(1))], 2.0).is_err());
        let p = ModulatorPath::new(State(0), vec![(1.0, State(1))], 2.0).unwrap();
        assert_eq!(p.state_at(0.999), State(0));
        assert_eq!(p.state_at(1.0), State(1));
    }

    #[test]
    fn tie_break_prefers_lowest_index() {
        let spec = ModulatorSpec::finite(
            &["a", "b", "c"],
            &[("a", "b", 1.0), ("a", "c", 1.0), ("b", "a", 1.0), ("c", "a", 1.0)],
        )
        .unwrap();
        let mut rng = Seed(9).stream(0);
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            counts[spec.next_state(State(0), &mut rng).0 as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        let frac = counts[1] as f64 / 20_000.0;
        assert!((frac - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt());
    }

    #[test]
    fn darling_kac_vanishes_for_small_t() {
        let spec = two_state(1.0, 1.0);
        let g = StateFunction::indicator(State(0));
        let pts = darling_kac_estimate(&spec, InitialLaw::Fixed(State(0)), &g, &[1e-4, 1e-2], 200, Seed(2)).unwrap();
        assert!(pts[0].h_hat < 1e-3);
        assert!(pts[0].h_hat < pts[1].h_hat);
    }

    #[test]
    fn darling_kac_rejects_zero_mass() {
        let spec = two_state(1.0, 1.0);
        let g = StateFunction::new();
        assert!(darling_kac_estimate(&spec, InitialLaw::Fixed(State(0)), &g, &[1.0], 10, Seed(2)).is_err());
    }
}
