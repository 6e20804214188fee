use rand::Rng;
use rayon::prelude::*;

use super::{check_grid, MapPath, Simulator};
use crate::error::{MapError, Result};
use crate::modulator::{simulate_modulator, InitialLaw};
use crate::rng::Seed;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub initial: InitialLaw,
    pub horizon: f64,
    pub grid: Vec<f64>,
    pub paths: usize,
    pub seed: Seed,
}

/// Draws the modulator path first, then the ordinate, from one stream.
pub fn simulate_path<R: Rng + ?Sized>(
    sim: &Simulator<'_>,
    initial: InitialLaw,
    horizon: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<MapPath> {
    let modulator = &sim.model().modulator;
    let start = initial.sample(modulator, rng)?;
    let mp = simulate_modulator(modulator, start, horizon, rng)?;
    sim.simulate(&mp, grid, rng)
}

fn check(sim: &Simulator<'_>, spec: &EnsembleSpec) -> Result<()> {
    if spec.paths == 0 {
        return Err(MapError::InvalidArgument("need at least one path".into()));
    }
    if !(spec.horizon.is_finite() && spec.horizon >= 0.0) {
        return Err(MapError::InvalidHorizon(spec.horizon));
    }
    check_grid(&spec.grid, spec.horizon)?;
    spec.initial.validate(&sim.model().modulator)
}

/// Simulates path `i` from stream `i` of the master seed and maps it through
/// `f`. Results come back in path order whatever the thread count.
pub fn map_ensemble<T, F>(sim: &Simulator<'_>, spec: &EnsembleSpec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, MapPath) -> T + Sync,
{
    check(sim, spec)?;
    (0..spec.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = spec.seed.stream(i as u64);
            simulate_path(sim, spec.initial, spec.horizon, &spec.grid, &mut rng).map(|p| f(i, p))
        })
        .collect()
}

pub fn simulate_ensemble(sim: &Simulator<'_>, spec: &EnsembleSpec) -> Result<Vec<MapPath>> {
    map_ensemble(sim, spec, |_, p| p)
}
