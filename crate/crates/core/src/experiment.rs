//! Command dispatch: each command reads a config, runs, and writes CSV artifacts
//! into the output directory.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::error::MapError;
use crate::model::{limit_constants, lindeberg_check, validate_hypotheses, MapModel, Moment};
use crate::modulator::InitialLaw;
use crate::report::{summary_text, write_reports, write_timings, Rule, TestReport, Uncertainty};
use crate::sim::export::{fmt_f64, write_events, write_path};
use crate::sim::{map_ensemble, EnsembleSpec, Simulator};
use crate::stats::Summary;
use crate::subordination::{inverse_moments, sample_inverse, sample_stable_subordinator, SubordinatorSpec};
use crate::verify::{
    verify_clt, verify_ratio_ergodic, verify_slln, verify_structure, verify_z_convergence, CltSetup, StructureSetup,
    ZSetup,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Simulate paths and write one path CSV and one event log per path.
    Simulate,
    /// Write the limit constants.
    Constants,
    /// Check the moment hypotheses and the Lindeberg condition.
    CheckHypotheses,
    /// Strong law (and ratio limit when m1 > 0).
    VerifySlln,
    /// Central limit theorem and transition-jump functional.
    VerifyClt,
    /// Martingale, bracket, compensation formula and ch.f. suite.
    VerifyStructure,
    /// Stable subordinator and inverse samples with moment checks.
    SampleSubordinator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// A hypothesis needed by the command does not hold.
    Refused,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Refused => 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config {path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
    #[error(transparent)]
    Model(#[from] MapError),
}

impl RunError {
    /// Usage and I/O failures, distinct from test failure and refusal.
    pub const EXIT_CODE: i32 = 3;
}

/// Command-line values that take precedence over the config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    /// Replaces the largest horizon; smaller configured horizons are kept.
    pub horizon: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Read { path: path.display().to_string(), source })?;
    ExperimentConfig::parse(&text).map_err(|source| RunError::Config { path: path.display().to_string(), source })
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) -> Result<(), RunError> {
    let x = &mut cfg.experiment;
    if let Some(s) = o.seed {
        x.seed = s;
    }
    if let Some(p) = o.paths {
        if p == 0 {
            return Err(MapError::InvalidArgument("--paths must be at least 1".into()).into());
        }
        x.paths = p;
    }
    if let Some(t) = o.horizon {
        if !(t > 0.0 && t.is_finite()) {
            return Err(MapError::InvalidArgument(format!("--horizon must be positive, got {t}")).into());
        }
        x.horizons.retain(|&h| h < t);
        x.horizons.push(t);
    }
    if let Some(out) = &o.out {
        x.out = out.display().to_string();
    }
    Ok(())
}

struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir)
            .map_err(|e| RunError::Write { path: dir.display().to_string(), message: e.to_string() })?;
        Ok(Artifacts { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), String>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| RunError::Write { path: parent.display().to_string(), message: e.to_string() })?;
        }
        let err = |message: String| RunError::Write { path: path.display().to_string(), message };
        let file = fs::File::create(&path).map_err(|e| err(e.to_string()))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(err)?;
        w.flush().map_err(|e| err(e.to_string()))
    }

    fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), RunError> {
        self.write(name, |w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(header).map_err(|e| e.to_string())?;
            for r in rows {
                out.write_record(&r).map_err(|e| e.to_string())?;
            }
            out.flush().map_err(|e| e.to_string())
        })
    }

    fn text(&self, name: &str, text: &str) -> Result<(), RunError> {
        self.write(name, |w| w.write_all(text.as_bytes()).map_err(|e| e.to_string()))
    }

    /// `reports.csv`, `summary.txt` and `timings.csv`; the outcome follows the verdicts.
    fn reports(&self, reports: &[TestReport]) -> Result<Outcome, RunError> {
        self.write("reports.csv", |w| write_reports(w, reports).map_err(|e| e.to_string()))?;
        self.write("timings.csv", |w| write_timings(w, reports).map_err(|e| e.to_string()))?;
        self.text("summary.txt", &summary_text(reports))?;
        Ok(if reports.iter().all(TestReport::passed) { Outcome::Pass } else { Outcome::Fail })
    }
}

fn moment_str(m: Moment) -> String {
    match m {
        Moment::Finite(v) => fmt_f64(v),
        Moment::Infinite => "inf".into(),
    }
}

/// Runs one command. Hypothesis refusals are written to `summary.txt` and
/// reported as [`Outcome::Refused`].
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let art = Artifacts::new(Path::new(&cfg.experiment.out))?;
    let model = cfg.model()?;
    let initial = cfg.initial_law()?;
    match dispatch(command, cfg, &model, initial, &art) {
        Err(RunError::Model(MapError::HypothesisViolation { hypothesis, detail })) => {
            art.text("summary.txt", &format!("refused: hypothesis {hypothesis} violated: {detail}\n"))?;
            Ok(Outcome::Refused)
        }
        other => other,
    }
}

fn dispatch(
    command: Command,
    cfg: &ExperimentConfig,
    model: &MapModel,
    initial: InitialLaw,
    art: &Artifacts,
) -> Result<Outcome, RunError> {
    let x = &cfg.experiment;
    let seed = x.seed();
    match command {
        Command::Simulate => {
            let sim = Simulator::new(model)?;
            let horizon = *x.horizons.last().expect("parser rejects empty horizons");
            let grid: Vec<f64> = (0..=x.grid).map(|k| horizon * k as f64 / x.grid as f64).collect();
            let spec = EnsembleSpec { initial, horizon, grid, paths: x.paths, seed };
            let width = x.paths.saturating_sub(1).to_string().len();
            let files = map_ensemble(&sim, &spec, |_, p| {
                let mut path_csv = Vec::new();
                let mut events_csv = Vec::new();
                write_path(&mut path_csv, &p, &model.modulator).expect("writing to memory");
                write_events(&mut events_csv, &p).expect("writing to memory");
                (path_csv, events_csv)
            })?;
            for (i, (p, e)) in files.iter().enumerate() {
                art.write(&format!("paths/path_{i:0width$}.csv"), |w| w.write_all(p).map_err(|e| e.to_string()))?;
                art.write(&format!("paths/events_{i:0width$}.csv"), |w| w.write_all(e).map_err(|e| e.to_string()))?;
            }
            art.text("summary.txt", &format!("simulated {} paths to T={horizon} on {} steps\n", x.paths, x.grid))?;
            Ok(Outcome::Pass)
        }
        Command::Constants => {
            let k = limit_constants(model)?;
            art.csv("constants.csv", &["name", "value"], k.rows().into_iter().map(|(n, v)| vec![n.into(), fmt_f64(v)]))?;
            art.csv(
                "state_constants.csv",
                &["state", "pi", "b", "mu_d", "diffusion", "compensator_rate", "bracket_rate", "z_bracket_rate"],
                k.states.iter().map(|s| {
                    vec![
                        model.modulator.label(s.state),
                        fmt_f64(s.pi),
                        fmt_f64(s.b),
                        fmt_f64(s.mu_d),
                        fmt_f64(s.diffusion),
                        fmt_f64(s.compensator_rate),
                        fmt_f64(s.bracket_rate),
                        fmt_f64(s.z_bracket_rate),
                    ]
                }),
            )?;
            let text: String = k.rows().iter().map(|(n, v)| format!("{n} = {v}\n")).collect();
            art.text("summary.txt", &text)?;
            Ok(Outcome::Pass)
        }
        Command::CheckHypotheses => {
            let hyp = validate_hypotheses(model, x.p)?;
            art.csv(
                "hypotheses.csv",
                &["name", "quantity", "pass", "note"],
                hyp.verdicts.iter().map(|v| vec![v.name.into(), moment_str(v.quantity), v.pass.to_string(), v.note.clone()]),
            )?;
            let mut text: String = hyp
                .verdicts
                .iter()
                .map(|v| format!("[{}] {}: {}\n", if v.pass { "pass" } else { "fail" }, v.name, v.note))
                .collect();
            if !hyp.all_pass() {
                let failed: Vec<&str> = hyp.verdicts.iter().filter(|v| !v.pass).map(|v| v.name).collect();
                text += &format!("refused: {} violated\n", failed.join(", "));
                art.text("summary.txt", &text)?;
                return Ok(Outcome::Refused);
            }
            let horizon = x.n * x.t;
            let lind = lindeberg_check(
                model,
                initial,
                &[horizon / 100.0, horizon / 10.0, horizon],
                x.epsilon,
                x.lindeberg_paths,
                seed.derive(3),
            )?;
            art.csv(
                "lindeberg.csv",
                &["t", "estimate", "se"],
                lind.points.iter().map(|p| vec![fmt_f64(p.t), fmt_f64(p.estimate), fmt_f64(p.se)]),
            )?;
            let outcome = art.reports(&lind.reports)?;
            text += &summary_text(&lind.reports);
            if outcome == Outcome::Fail {
                text += "refused: Lindeberg condition not met\n";
            }
            art.text("summary.txt", &text)?;
            Ok(if outcome == Outcome::Fail { Outcome::Refused } else { Outcome::Pass })
        }
        Command::VerifySlln => {
            let out = verify_slln(model, initial, &x.horizons, x.paths, seed)?;
            art.csv(
                "slln.csv",
                &["horizon", "median_xi_over_T", "iqr_xi_over_T", "median_A_over_T", "median_xi_over_A", "iqr_xi_over_A"],
                out.rows.iter().map(|r| {
                    [r.horizon, r.median_xi_over_t, r.iqr_xi_over_t, r.median_a_over_t, r.median_xi_over_a, r.iqr_xi_over_a]
                        .map(fmt_f64)
                        .to_vec()
                }),
            )?;
            let mut reports = out.reports;
            if out.m1 > 0.0 {
                let ratio = verify_ratio_ergodic(model, initial, &x.horizons, x.paths, seed.derive(7))?;
                art.csv(
                    "ratio.csv",
                    &["horizon", "median_ratio", "target"],
                    ratio.medians.iter().map(|&(t, m)| vec![fmt_f64(t), fmt_f64(m), fmt_f64(ratio.target)]),
                )?;
                reports.push(ratio.report);
            }
            art.reports(&reports)
        }
        Command::VerifyClt => {
            let setup = CltSetup {
                initial,
                n: x.n,
                t: x.t,
                samples: x.samples,
                oracle_samples: x.oracle_samples,
                epsilon: x.epsilon,
                lindeberg_paths: x.lindeberg_paths,
                seed,
            };
            let out = verify_clt(model, &setup)?;
            art.csv(
                "clt_samples.csv",
                &["sample", "rescaled_martingale", "rescaled_bracket"],
                out.empirical.iter().zip(&out.bracket).enumerate().map(|(i, (y, b))| vec![i.to_string(), fmt_f64(*y), fmt_f64(*b)]),
            )?;
            art.csv(
                "clt_oracle.csv",
                &["sample", "oracle_vA", "oracle_vB"],
                out.oracle_a.iter().zip(&out.oracle_b).enumerate().map(|(i, (a, b))| vec![i.to_string(), fmt_f64(*a), fmt_f64(*b)]),
            )?;
            art.csv(
                "clt_constants.csv",
                &["name", "value"],
                [("v_A", out.v_a), ("v_B", out.v_b), ("mean_W", out.mean_w)].map(|(n, v)| vec![n.to_string(), fmt_f64(v)]),
            )?;
            let mut reports = out.reports;
            let z = ZSetup {
                initial,
                n: x.n,
                t: x.t,
                samples: x.samples,
                oracle_samples: x.oracle_samples,
                seed: seed.derive(6),
            };
            reports.extend(verify_z_convergence(model, &z)?);
            art.reports(&reports)
        }
        Command::VerifyStructure => {
            let setup = StructureSetup {
                initial,
                times: x.times.clone(),
                paths: x.paths,
                compensation_t: x.compensation_t,
                test_functions: x.test_functions.clone(),
                frozen_paths: x.frozen_paths,
                replicas: x.replicas,
                lambdas: x.lambdas.clone(),
                charfn_t: x.charfn_t,
                seed,
            };
            art.reports(&verify_structure(model, &setup)?)
        }
        Command::SampleSubordinator => {
            let alpha = x.alpha.unwrap_or_else(|| model.modulator.darling_kac().alpha);
            let (samples, sigma, w) = sample_subordinator(alpha, x.t, x.samples, seed)?;
            art.csv(
                "subordinator.csv",
                &["sample", "sigma", "W"],
                sigma.iter().zip(&w).enumerate().map(|(i, (s, w))| vec![i.to_string(), fmt_f64(*s), fmt_f64(*w)]),
            )?;
            art.reports(&samples)
        }
    }
}

/// `σ_t` and `W_t` on independent streams, with the Laplace transform and
/// the first two inverse moments checked against closed forms.
fn sample_subordinator(
    alpha: f64,
    t: f64,
    samples: usize,
    seed: crate::rng::Seed,
) -> Result<(Vec<TestReport>, Vec<f64>, Vec<f64>), RunError> {
    let clock = Instant::now();
    let spec = SubordinatorSpec::new(alpha)?;
    let (sigma_seed, w_seed) = (seed.derive(1), seed.derive(2));
    let draws = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let sigma = if alpha == 1.0 {
                t
            } else {
                sample_stable_subordinator(&spec, &[t], &mut sigma_seed.stream(i))?[0]
            };
            let w = sample_inverse(&spec, &[t], &mut w_seed.stream(i))?.w[0];
            Ok((sigma, w))
        })
        .collect::<crate::error::Result<Vec<_>>>()?;
    let (sigma, w): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    let s = seed.0;
    let laplace: Summary = sigma.iter().map(|x| (-x).exp()).collect();
    let w1: Summary = w.iter().copied().collect();
    let w2: Summary = w.iter().map(|x| x * x).collect();
    let (m1, m2) = inverse_moments(alpha);
    let scale = t.powf(alpha);
    let within = |name: String, m: &Summary, target: f64, prov: &str| {
        TestReport::new(
            name,
            m.mean,
            target,
            prov,
            Uncertainty::Se(m.se()),
            Rule::WithinSe { k: 3.0, floor: 1e-12 * target.abs().max(1.0) },
            samples,
            s,
        )
    };
    let mut reports = vec![
        within(format!("subordinator_laplace_q=1_t={t}"), &laplace, (-t).exp(), "exp(-t q^alpha)"),
        within(format!("inverse_mean_t={t}"), &w1, scale * m1, "t^alpha / Gamma(1+alpha)"),
        within(format!("inverse_second_moment_t={t}"), &w2, scale * scale * m2, "2 t^(2 alpha) / Gamma(1+2 alpha)"),
    ];
    if alpha == 1.0 {
        let dev = w.iter().map(|x| (x - t).abs()).fold(0.0, f64::max);
        reports.push(TestReport::new(
            "inverse_identity",
            dev,
            0.0,
            "W_t = t",
            Uncertainty::None,
            Rule::AtMost { bound: 0.0 },
            samples,
            s,
        ));
    }
    let secs = clock.elapsed().as_secs_f64();
    Ok((reports.into_iter().map(|r| r.with_runtime(secs)).collect(), sigma, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(body: &str, out: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::parse(body).unwrap();
        cfg.experiment.out = out.display().to_string();
        cfg
    }

    const PARETO: &str = "[modulator]\nkind = finite\nstates = x\ninitial = x\n[characteristics]\nlocal = x 1 pareto 1.5 1\n[experiment]\nseed = 1\n";

    #[test]
    fn heavy_tail_is_refused_with_h8() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(PARETO, dir.path());
        assert_eq!(run(Command::CheckHypotheses, &cfg).unwrap(), Outcome::Refused);
        let csv = fs::read_to_string(dir.path().join("hypotheses.csv")).unwrap();
        assert!(csv.lines().any(|l| l.starts_with("H8,inf,false")), "{csv}");
        assert!(fs::read_to_string(dir.path().join("summary.txt")).unwrap().contains("H8"));
    }

    #[test]
    fn zero_characteristics_simulate_zero() {
        let dir = tempfile::tempdir().unwrap();
        let text = "[modulator]\nkind = finite\nstates = a b\nrate = a b 1\nrate = b a 1\ninitial = a\n[characteristics]\n[experiment]\nseed = 3\npaths = 3\ngrid = 10\nhorizons = 5\n";
        let cfg = config(text, dir.path());
        assert_eq!(run(Command::Simulate, &cfg).unwrap(), Outcome::Pass);
        for i in 0..3 {
            let rows = crate::sim::export::read_path(fs::File::open(dir.path().join(format!("paths/path_{i}.csv"))).unwrap()).unwrap();
            assert_eq!(rows.len(), 11);
            assert!(rows.iter().all(|r| r.2 == 0.0));
        }
    }

    #[test]
    fn overrides_replace_the_largest_horizon() {
        let mut cfg = ExperimentConfig::parse(PARETO).unwrap();
        cfg.experiment.horizons = vec![10.0, 100.0, 1000.0];
        let o = Overrides { seed: Some(9), paths: Some(5), horizon: Some(500.0), out: Some("elsewhere".into()) };
        apply_overrides(&mut cfg, &o).unwrap();
        assert_eq!(cfg.experiment.horizons, vec![10.0, 100.0, 500.0]);
        assert_eq!((cfg.experiment.seed, cfg.experiment.paths, cfg.experiment.out.as_str()), (9, 5, "elsewhere"));
    }
}
