use std::time::Instant;

use rayon::prelude::*;

use crate::error::{MapError, Result};
use crate::modulator::{occupation_functional, simulate_modulator, InitialLaw, ModulatorPath};
use crate::report::{Rule, TestReport, Uncertainty};
use crate::rng::Seed;
use crate::sim::{
    compensation_formula_check, conditional_charfn, empirical_charfn, map_ensemble, EnsembleSpec, Simulator,
    TestFunction,
};
use crate::model::MapModel;
use crate::stats::Summary;

#[derive(Debug, Clone, PartialEq)]
pub struct StructureSetup {
    pub initial: InitialLaw,
    pub times: Vec<f64>,
    pub paths: usize,
    pub compensation_t: f64,
    pub test_functions: Vec<TestFunction>,
    pub frozen_paths: usize,
    pub replicas: usize,
    pub lambdas: Vec<f64>,
    pub charfn_t: f64,
    pub seed: Seed,
}

/// Relative slack for identities that hold exactly up to rounding.
const ROUNDING: f64 = 1e-12;

fn within(name: String, stat: f64, target: f64, se: f64, scale: f64, n: usize, seed: u64, prov: &str) -> TestReport {
    TestReport::new(
        name,
        stat,
        target,
        prov,
        Uncertainty::Se(se),
        Rule::WithinSe { k: 3.0, floor: ROUNDING * scale.max(1.0) },
        n,
        seed,
    )
}

struct PathStats {
    m: Vec<f64>,
    b: Vec<f64>,
    a_abs: Vec<f64>,
    a_err: f64,
    /// Per λ: `(cos λξ − Re φ, sin λξ − Im φ)` at the ch.f. time.
    cf: Vec<(f64, f64)>,
}

/// The martingale, bracket, compensator and characteristic-function suite.
pub fn verify_structure(model: &MapModel, setup: &StructureSetup) -> Result<Vec<TestReport>> {
    let clock = Instant::now();
    if setup.times.is_empty() || setup.times.windows(2).any(|w| w[0] >= w[1]) || setup.times[0] <= 0.0 {
        return Err(MapError::InvalidGrid("structure times must be positive and increasing".into()));
    }
    if setup.paths < 2 || setup.replicas < 2 {
        return Err(MapError::InvalidArgument("need at least two paths and replicas".into()));
    }
    let sim = Simulator::new(model)?;
    let s = setup.seed.0;
    let t_max = *setup.times.last().unwrap();
    if !(setup.charfn_t > 0.0 && setup.charfn_t <= t_max) {
        return Err(MapError::InvalidArgument(format!("ch.f. time must lie in (0, {t_max}]")));
    }
    let mut grid = setup.times.clone();
    grid.push(setup.charfn_t);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let idx = |t: f64| grid.iter().position(|&g| g == t).unwrap();
    let time_idx: Vec<usize> = setup.times.iter().map(|&t| idx(t)).collect();
    let cf_idx = idx(setup.charfn_t);

    let spec = EnsembleSpec { initial: setup.initial, horizon: t_max, grid: grid.clone(), paths: setup.paths, seed: setup.seed };
    let stats = map_ensemble(&sim, &spec, |_, p| {
        let last = p.last().unwrap();
        let occ = occupation_functional(&p.modulator, |st| model.compensator_rate(st));
        let a_err = (p.a[last] - occ).abs() / occ.abs().max(1.0);
        let cf = setup
            .lambdas
            .iter()
            .map(|&l| {
                let phi = conditional_charfn(model, &p.modulator, l, setup.charfn_t).expect("time within horizon");
                let x = p.xi[cf_idx];
                ((l * x).cos() - phi.re, (l * x).sin() - phi.im)
            })
            .collect();
        PathStats {
            m: time_idx.iter().map(|&i| p.xi[i] - p.a[i]).collect(),
            b: time_idx.iter().map(|&i| p.bracket[i]).collect(),
            a_abs: time_idx.iter().map(|&i| p.a[i].abs()).collect(),
            a_err,
            cf,
        }
    })?;

    let n = setup.paths;
    let mut reports = Vec::new();
    for (k, &t) in setup.times.iter().enumerate() {
        let m: Summary = stats.iter().map(|p| p.m[k]).collect();
        let scale = stats.iter().map(|p| p.a_abs[k]).sum::<f64>() / n as f64;
        reports.push(within(format!("martingale_mean_t={t}"), m.mean, 0.0, m.se(), scale, n, s, "zero mean"));
        let b: Summary = stats.iter().map(|p| p.b[k]).collect();
        let d: Summary = stats.iter().map(|p| (p.m[k] - m.mean).powi(2) - p.b[k]).collect();
        reports.push(within(
            format!("bracket_identity_t={t}"),
            m.variance(),
            b.mean,
            d.se(),
            b.mean,
            n,
            s,
            "mean predictable bracket, same paths",
        ));
    }
    let a_err = stats.iter().map(|p| p.a_err).fold(0.0, f64::max);
    reports.push(TestReport::new(
        "compensator_recompute",
        a_err,
        0.0,
        "occupation integral of b + mu_d",
        Uncertainty::None,
        Rule::AtMost { bound: ROUNDING },
        n,
        s,
    ));
    for (j, &l) in setup.lambdas.iter().enumerate() {
        let re: Summary = stats.iter().map(|p| p.cf[j].0).collect();
        let im: Summary = stats.iter().map(|p| p.cf[j].1).collect();
        let t = setup.charfn_t;
        reports.push(within(format!("charfn_unconditional_t={t}_lambda={l}_re"), re.mean, 0.0, re.se(), 0.0, n, s, "mean conditional ch.f."));
        reports.push(within(format!("charfn_unconditional_t={t}_lambda={l}_im"), im.mean, 0.0, im.se(), 0.0, n, s, "mean conditional ch.f."));
    }

    for (i, g) in setup.test_functions.iter().enumerate() {
        let out = compensation_formula_check(model, setup.initial, *g, setup.compensation_t, n, setup.seed.derive(10 + i as u64))?;
        if let Some(e) = out.stationary_expectation {
            reports.push(TestReport::new(
                format!("compensation_{}_closed_form", g.name()),
                out.rhs_mean,
                e,
                "stationary expectation",
                Uncertainty::None,
                Rule::Reported,
                n,
                s,
            ));
        }
        reports.push(out.report);
    }

    reports.extend(frozen_path_checks(model, &sim, setup)?);
    let secs = clock.elapsed().as_secs_f64();
    Ok(reports.into_iter().map(|r| r.with_runtime(secs)).collect())
}

fn frozen_path_checks(model: &MapModel, sim: &Simulator<'_>, setup: &StructureSetup) -> Result<Vec<TestReport>> {
    let t = setup.charfn_t;
    let s = setup.seed.0;
    let mut reports = Vec::new();
    let frozen_seed = setup.seed.derive(20);
    for f in 0..setup.frozen_paths {
        let mut rng = frozen_seed.stream(f as u64);
        let start = setup.initial.sample(&model.modulator, &mut rng)?;
        let path: ModulatorPath = simulate_modulator(&model.modulator, start, t, &mut rng)?;
        let replica_seed = setup.seed.derive(1000 + f as u64);
        let grid = [0.5 * t, t];
        let draws: Vec<(f64, f64)> = (0..setup.replicas as u64)
            .into_par_iter()
            .map(|r| sim.simulate(&path, &grid, &mut replica_seed.stream(r)).map(|p| (p.xi[0], p.xi[1])))
            .collect::<Result<_>>()?;
        let xs: Vec<f64> = draws.iter().map(|d| d.1).collect();
        for &l in &setup.lambdas {
            let exact = conditional_charfn(model, &path, l, t)?;
            let (emp, se_re, se_im) = empirical_charfn(&xs, l);
            let prov = "closed-form conditional ch.f.";
            reports.push(within(format!("charfn_frozen{f}_lambda={l}_re"), emp.re, exact.re, se_re, 0.0, setup.replicas, s, prov));
            reports.push(within(format!("charfn_frozen{f}_lambda={l}_im"), emp.im, exact.im, se_im, 0.0, setup.replicas, s, prov));
        }
        if f == 0 {
            let first: Summary = draws.iter().map(|d| d.0).collect();
            let second: Summary = draws.iter().map(|d| d.1 - d.0).collect();
            let cov = draws.iter().map(|d| (d.0 - first.mean) * (d.1 - d.0 - second.mean)).sum::<f64>()
                / (draws.len() - 1) as f64;
            let denom = first.sd() * second.sd();
            let corr = if denom > 0.0 { cov / denom } else { 0.0 };
            reports.push(TestReport::new(
                "frozen_increment_correlation",
                corr.abs(),
                0.0,
                "conditionally independent increments",
                Uncertainty::None,
                Rule::Below { bound: 3.0 / (setup.replicas as f64).sqrt() },
                setup.replicas,
                s,
            ));
        }
    }
    Ok(reports)
}
