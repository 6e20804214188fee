//! Sectioned `key = value` experiment configuration.
//!
//! ```text
//! [modulator]
//! kind = finite
//! states = a b
//! rate = a b 1
//! rate = b a 2
//! initial = stationary
//!
//! [characteristics]
//! drift = a 0.5
//! diffusion = b 1
//! local = a 1 gaussian 0.2 1
//! transition = a b 0.5 point 1
//!
//! [experiment]
//! seed = 42
//! ```
//!
//! Laws are written `point v`, `two_point x1 p x2`, `gaussian mean sd` or
//! `pareto tail_index scale`. Experiment keys other than `seed` have
//! defaults; [`ExperimentConfig::to_text`] prints every key.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{JumpLaw, MapCharacteristics, MapModel};
use crate::modulator::{InitialLaw, ModulatorSpec, State};
use crate::rng::Seed;
use crate::sim::TestFunction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("missing section: {0}")]
    MissingSection(&'static str),
    #[error("line {line}: [{section}] {key}: {message}")]
    Located { line: usize, section: String, key: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModulatorConfig {
    Finite { states: Vec<String>, rates: Vec<(String, String, f64)> },
    SymmetricWalk,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialConfig {
    State(String),
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CharacteristicsConfig {
    pub drift: Vec<(String, f64)>,
    pub diffusion: Vec<(String, f64)>,
    pub local: Vec<(String, f64, JumpLaw)>,
    pub transition: Vec<(String, String, f64, JumpLaw)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub command: Option<String>,
    pub seed: u64,
    pub paths: usize,
    pub horizons: Vec<f64>,
    /// Number of equal grid steps on `[0, horizon]` for `simulate`.
    pub grid: usize,
    pub samples: usize,
    pub oracle_samples: usize,
    pub n: f64,
    pub t: f64,
    pub epsilon: f64,
    pub lindeberg_paths: usize,
    pub p: f64,
    pub times: Vec<f64>,
    pub compensation_t: f64,
    pub test_functions: Vec<TestFunction>,
    pub frozen_paths: usize,
    pub replicas: usize,
    pub lambdas: Vec<f64>,
    pub charfn_t: f64,
    /// Stability index for `sample-subordinator`; defaults to the modulator's.
    pub alpha: Option<f64>,
    pub out: String,
}

impl ExperimentSection {
    fn with_seed(seed: u64) -> Self {
        ExperimentSection {
            command: None,
            seed,
            paths: 1000,
            horizons: vec![100.0],
            grid: 100,
            samples: 1000,
            oracle_samples: 1000,
            n: 1000.0,
            t: 1.0,
            epsilon: 0.1,
            lindeberg_paths: 200,
            p: 1.0,
            times: vec![1.0, 5.0, 10.0],
            compensation_t: 5.0,
            test_functions: vec![TestFunction::TransitionJumps, TestFunction::CappedSquare { cap: 1.0 }],
            frozen_paths: 10,
            replicas: 1000,
            lambdas: vec![0.5, 1.0, 2.0],
            charfn_t: 1.0,
            alpha: None,
            out: "out".into(),
        }
    }

    pub fn seed(&self) -> Seed {
        Seed(self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub modulator: ModulatorConfig,
    pub initial: InitialConfig,
    pub characteristics: CharacteristicsConfig,
    pub experiment: ExperimentSection,
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

struct Section<'a> {
    name: &'static str,
    line: usize,
    entries: Vec<Entry<'a>>,
}

impl Section<'_> {
    fn err(&self, line: usize, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Located { line, section: self.name.into(), key: key.into(), message: message.into() }
    }

    /// Rejects unknown keys and repeats of keys outside `repeatable`.
    fn check_keys(&self, known: &[&str], repeatable: &[&str]) -> Result<(), ConfigError> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !known.contains(&e.key) {
                return Err(self.err(e.line, e.key, "unknown key"));
            }
            if !repeatable.contains(&e.key) && !seen.insert(e.key) {
                return Err(self.err(e.line, e.key, "duplicate key"));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&Entry<'_>> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn all<'s>(&'s self, key: &'s str) -> impl Iterator<Item = &'s Entry<'s>> + 's {
        self.entries.iter().filter(move |e| e.key == key)
    }
}

fn parse_num<T: FromStr>(s: &Section<'_>, e: &Entry<'_>, tok: &str, what: &str) -> Result<T, ConfigError> {
    tok.parse().map_err(|_| s.err(e.line, e.key, format!("cannot parse {what} `{tok}`")))
}

fn parse_law(s: &Section<'_>, e: &Entry<'_>, toks: &[&str]) -> Result<JumpLaw, ConfigError> {
    let Some((&family, params)) = toks.split_first() else {
        return Err(s.err(e.line, e.key, "missing jump law"));
    };
    let arity = match family {
        "point" => 1,
        "two_point" => 3,
        "gaussian" | "pareto" => 2,
        other => return Err(s.err(e.line, e.key, format!("unknown law family `{other}`"))),
    };
    if params.len() != arity {
        return Err(s.err(e.line, e.key, format!("law `{family}` takes {arity} parameters, got {}", params.len())));
    }
    let v = params.iter().map(|t| parse_num::<f64>(s, e, t, "law parameter")).collect::<Result<Vec<_>, _>>()?;
    let law = match family {
        "point" => JumpLaw::PointMass { value: v[0] },
        "two_point" => JumpLaw::TwoPoint { x1: v[0], p: v[1], x2: v[2] },
        "gaussian" => JumpLaw::Gaussian { mean: v[0], sd: v[1] },
        _ => JumpLaw::ShiftedPareto { tail_index: v[0], scale: v[1] },
    };
    law.validate().map_err(|err| s.err(e.line, e.key, err.to_string()))?;
    Ok(law)
}

fn fmt_law(law: &JumpLaw) -> String {
    match *law {
        JumpLaw::PointMass { value } => format!("point {value}"),
        JumpLaw::TwoPoint { x1, p, x2 } => format!("two_point {x1} {p} {x2}"),
        JumpLaw::Gaussian { mean, sd } => format!("gaussian {mean} {sd}"),
        JumpLaw::ShiftedPareto { tail_index, scale } => format!("pareto {tail_index} {scale}"),
    }
}

fn parse_test_function(tok: &str) -> Option<TestFunction> {
    match tok.split_once(':') {
        None if tok == "zero" => Some(TestFunction::Zero),
        None if tok == "transition_jumps" => Some(TestFunction::TransitionJumps),
        Some(("capped_square", c)) => c.parse().ok().filter(|c: &f64| *c > 0.0).map(|cap| TestFunction::CappedSquare { cap }),
        Some(("exits", s)) => s.parse().ok().map(|i| TestFunction::ModulatorExits { from: State(i) }),
        _ => None,
    }
}

fn fmt_test_function(g: &TestFunction) -> String {
    match g {
        TestFunction::Zero => "zero".into(),
        TestFunction::TransitionJumps => "transition_jumps".into(),
        TestFunction::CappedSquare { cap } => format!("capped_square:{cap}"),
        TestFunction::ModulatorExits { from } => format!("exits:{}", from.0),
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

const SECTIONS: [&str; 3] = ["modulator", "characteristics", "experiment"];

fn split_sections(text: &str) -> Result<Vec<Section<'_>>, ConfigError> {
    let mut sections: Vec<Section<'_>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let name = name.trim();
            let Some(&known) = SECTIONS.iter().find(|&&s| s == name) else {
                return Err(ConfigError::Located {
                    line,
                    section: name.into(),
                    key: String::new(),
                    message: "unknown section".into(),
                });
            };
            if sections.iter().any(|s| s.name == known) {
                return Err(ConfigError::Located {
                    line,
                    section: name.into(),
                    key: String::new(),
                    message: "duplicate section".into(),
                });
            }
            sections.push(Section { name: known, line, entries: Vec::new() });
            continue;
        }
        let Some(current) = sections.last_mut() else {
            return Err(ConfigError::Located {
                line,
                section: String::new(),
                key: content.split('=').next().unwrap_or("").trim().into(),
                message: "entry outside any section".into(),
            });
        };
        let Some((key, value)) = content.split_once('=') else {
            return Err(current.err(line, content, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(current.err(line, key, "empty key"));
        }
        current.entries.push(Entry { line, key, value });
    }
    Ok(sections)
}

fn state_ref(
    modulator: &ModulatorSpec,
    s: &Section<'_>,
    e: &Entry<'_>,
    label: &str,
) -> Result<State, ConfigError> {
    modulator.state_of(label).ok_or_else(|| s.err(e.line, e.key, format!("unknown state `{label}`")))
}

fn parse_modulator(s: &Section<'_>) -> Result<(ModulatorConfig, InitialConfig, ModulatorSpec), ConfigError> {
    s.check_keys(&["kind", "states", "rate", "initial"], &["rate"])?;
    let kind = s.get("kind").ok_or_else(|| s.err(s.line, "kind", "missing key"))?;
    let initial_entry = s.get("initial").ok_or_else(|| s.err(s.line, "initial", "missing key"))?;
    let (cfg, spec) = match kind.value {
        "finite" => {
            let states_entry = s.get("states").ok_or_else(|| s.err(s.line, "states", "missing key"))?;
            let states: Vec<String> = states_entry.value.split_whitespace().map(String::from).collect();
            let mut seen = BTreeSet::new();
            for st in &states {
                if !seen.insert(st.as_str()) {
                    return Err(s.err(states_entry.line, "states", format!("duplicate state `{st}`")));
                }
            }
            if states.is_empty() {
                return Err(s.err(states_entry.line, "states", "no states listed"));
            }
            let mut rates = Vec::new();
            let mut pairs = BTreeSet::new();
            for e in s.all("rate") {
                let toks: Vec<&str> = e.value.split_whitespace().collect();
                let [a, b, r] = toks[..] else {
                    return Err(s.err(e.line, e.key, "expected `from to rate`"));
                };
                for l in [a, b] {
                    if !seen.contains(l) {
                        return Err(s.err(e.line, e.key, format!("unknown state `{l}`")));
                    }
                }
                if a == b {
                    return Err(s.err(e.line, e.key, "self-transition"));
                }
                let rate: f64 = parse_num(s, e, r, "rate")?;
                if !(rate >= 0.0 && rate.is_finite()) {
                    return Err(s.err(e.line, e.key, format!("rate must be finite and nonnegative, got {rate}")));
                }
                if !pairs.insert((a, b)) {
                    return Err(s.err(e.line, e.key, format!("duplicate key for `{a} {b}`")));
                }
                rates.push((a.to_string(), b.to_string(), rate));
            }
            let labels: Vec<&str> = states.iter().map(String::as_str).collect();
            let triples: Vec<(&str, &str, f64)> = rates.iter().map(|(a, b, r)| (a.as_str(), b.as_str(), *r)).collect();
            let spec = ModulatorSpec::finite(&labels, &triples).map_err(|err| s.err(s.line, "rate", err.to_string()))?;
            (ModulatorConfig::Finite { states, rates }, spec)
        }
        "symmetric_walk" => {
            if let Some(e) = s.get("states").or_else(|| s.get("rate")) {
                return Err(s.err(e.line, e.key, "not allowed for symmetric_walk"));
            }
            (ModulatorConfig::SymmetricWalk, ModulatorSpec::SymmetricWalk)
        }
        other => return Err(s.err(kind.line, "kind", format!("unknown modulator kind `{other}`"))),
    };
    let initial = match initial_entry.value {
        "stationary" => {
            if !spec.is_positive_recurrent() {
                return Err(s.err(initial_entry.line, "initial", "stationary start needs a finite chain"));
            }
            InitialConfig::Stationary
        }
        label => {
            state_ref(&spec, s, initial_entry, label)?;
            InitialConfig::State(label.to_string())
        }
    };
    Ok((cfg, initial, spec))
}

fn parse_characteristics(s: &Section<'_>, spec: &ModulatorSpec) -> Result<CharacteristicsConfig, ConfigError> {
    let keys = ["drift", "diffusion", "local", "transition"];
    s.check_keys(&keys, &keys)?;
    let mut out = CharacteristicsConfig::default();
    let mut seen = BTreeSet::new();
    for e in &s.entries {
        let toks: Vec<&str> = e.value.split_whitespace().collect();
        let arity_err = |want: &str| s.err(e.line, e.key, format!("expected `{want}`"));
        let dup = |target: String| s.err(e.line, e.key, format!("duplicate key for `{target}`"));
        match e.key {
            "drift" | "diffusion" => {
                let [st, v] = toks[..] else { return Err(arity_err("state value")) };
                state_ref(spec, s, e, st)?;
                let v: f64 = parse_num(s, e, v, e.key)?;
                if !v.is_finite() || (e.key == "diffusion" && v < 0.0) {
                    return Err(s.err(e.line, e.key, format!("invalid value {v}")));
                }
                if !seen.insert((e.key, st.to_string())) {
                    return Err(dup(st.into()));
                }
                let list = if e.key == "drift" { &mut out.drift } else { &mut out.diffusion };
                list.push((st.into(), v));
            }
            "local" => {
                if toks.len() < 3 {
                    return Err(arity_err("state rate law params..."));
                }
                state_ref(spec, s, e, toks[0])?;
                let rate: f64 = parse_num(s, e, toks[1], "rate")?;
                if !(rate >= 0.0 && rate.is_finite()) {
                    return Err(s.err(e.line, e.key, format!("rate must be finite and nonnegative, got {rate}")));
                }
                let law = parse_law(s, e, &toks[2..])?;
                if !seen.insert((e.key, toks[0].to_string())) {
                    return Err(dup(toks[0].into()));
                }
                out.local.push((toks[0].into(), rate, law));
            }
            _ => {
                if toks.len() < 4 {
                    return Err(arity_err("from to prob law params..."));
                }
                let from = state_ref(spec, s, e, toks[0])?;
                let to = state_ref(spec, s, e, toks[1])?;
                if !(spec.rate(from, to) > 0.0) {
                    return Err(s.err(e.line, e.key, format!("`{} {}` is not a modulator transition", toks[0], toks[1])));
                }
                let prob: f64 = parse_num(s, e, toks[2], "probability")?;
                if !(0.0..=1.0).contains(&prob) {
                    return Err(s.err(e.line, e.key, format!("probability must lie in [0, 1], got {prob}")));
                }
                let law = parse_law(s, e, &toks[3..])?;
                if !seen.insert((e.key, format!("{} {}", toks[0], toks[1]))) {
                    return Err(dup(format!("{} {}", toks[0], toks[1])));
                }
                out.transition.push((toks[0].into(), toks[1].into(), prob, law));
            }
        }
    }
    Ok(out)
}

const EXPERIMENT_KEYS: [&str; 21] = [
    "command",
    "seed",
    "paths",
    "horizons",
    "grid",
    "samples",
    "oracle_samples",
    "n",
    "t",
    "epsilon",
    "lindeberg_paths",
    "p",
    "times",
    "compensation_t",
    "test_functions",
    "frozen_paths",
    "replicas",
    "lambdas",
    "charfn_t",
    "alpha",
    "out",
];

fn parse_experiment(s: &Section<'_>) -> Result<ExperimentSection, ConfigError> {
    s.check_keys(&EXPERIMENT_KEYS, &[])?;
    let seed_entry = s.get("seed").ok_or_else(|| s.err(s.line, "seed", "missing key (the seed is mandatory)"))?;
    let mut x = ExperimentSection::with_seed(parse_num(s, seed_entry, seed_entry.value, "seed")?);
    let positive = |e: &Entry<'_>, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(s.err(e.line, e.key, format!("must be positive and finite, got {v}")))
        }
    };
    let count = |e: &Entry<'_>| -> Result<usize, ConfigError> {
        let v: usize = parse_num(s, e, e.value, "count")?;
        if v == 0 {
            return Err(s.err(e.line, e.key, "must be at least 1"));
        }
        Ok(v)
    };
    let list = |e: &Entry<'_>, increasing: bool| -> Result<Vec<f64>, ConfigError> {
        let v = e
            .value
            .split_whitespace()
            .map(|t| parse_num::<f64>(s, e, t, "number").and_then(|v| positive(e, v)))
            .collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err(s.err(e.line, e.key, "empty list"));
        }
        if increasing && v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(s.err(e.line, e.key, "values must be strictly increasing"));
        }
        Ok(v)
    };
    for e in &s.entries {
        match e.key {
            "seed" => {}
            "command" => x.command = Some(e.value.to_string()),
            "paths" => x.paths = count(e)?,
            "horizons" => x.horizons = list(e, true)?,
            "grid" => x.grid = count(e)?,
            "samples" => x.samples = count(e)?,
            "oracle_samples" => x.oracle_samples = count(e)?,
            "n" => x.n = positive(e, parse_num(s, e, e.value, "number")?)?,
            "t" => x.t = positive(e, parse_num(s, e, e.value, "number")?)?,
            "epsilon" => x.epsilon = positive(e, parse_num(s, e, e.value, "number")?)?,
            "lindeberg_paths" => x.lindeberg_paths = count(e)?,
            "p" => x.p = positive(e, parse_num(s, e, e.value, "number")?)?,
            "times" => x.times = list(e, true)?,
            "compensation_t" => x.compensation_t = positive(e, parse_num(s, e, e.value, "number")?)?,
            "test_functions" => {
                x.test_functions = e
                    .value
                    .split_whitespace()
                    .map(|t| parse_test_function(t).ok_or_else(|| s.err(e.line, e.key, format!("unknown test function `{t}`"))))
                    .collect::<Result<_, _>>()?
            }
            "frozen_paths" => x.frozen_paths = parse_num(s, e, e.value, "count")?,
            "replicas" => x.replicas = count(e)?,
            "lambdas" => x.lambdas = list(e, false)?,
            "charfn_t" => x.charfn_t = positive(e, parse_num(s, e, e.value, "number")?)?,
            "alpha" => {
                let a: f64 = parse_num(s, e, e.value, "number")?;
                if !(a > 0.0 && a <= 1.0) {
                    return Err(s.err(e.line, e.key, format!("must lie in (0, 1], got {a}")));
                }
                x.alpha = Some(a);
            }
            "out" => x.out = e.value.to_string(),
            _ => unreachable!("checked above"),
        }
    }
    Ok(x)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sections = split_sections(text)?;
        let find = |name: &'static str| {
            sections.iter().find(|s| s.name == name).ok_or(ConfigError::MissingSection(name))
        };
        let m = find("modulator")?;
        let c = find("characteristics")?;
        let x = find("experiment")?;
        let (modulator, initial, spec) = parse_modulator(m)?;
        let characteristics = parse_characteristics(c, &spec)?;
        let experiment = parse_experiment(x)?;
        let cfg = ExperimentConfig { modulator, initial, characteristics, experiment };
        cfg.model().map_err(|err| c.err(c.line, "characteristics", err.to_string()))?;
        Ok(cfg)
    }

    pub fn modulator_spec(&self) -> crate::error::Result<ModulatorSpec> {
        match &self.modulator {
            ModulatorConfig::Finite { states, rates } => {
                let labels: Vec<&str> = states.iter().map(String::as_str).collect();
                let triples: Vec<(&str, &str, f64)> = rates.iter().map(|(a, b, r)| (a.as_str(), b.as_str(), *r)).collect();
                ModulatorSpec::finite(&labels, &triples)
            }
            ModulatorConfig::SymmetricWalk => Ok(ModulatorSpec::SymmetricWalk),
        }
    }

    pub fn model(&self) -> crate::error::Result<MapModel> {
        let spec = self.modulator_spec()?;
        let st = |l: &str| {
            spec.state_of(l)
                .ok_or_else(|| crate::error::MapError::InvalidCharacteristics(format!("unknown state `{l}`")))
        };
        let ch = &self.characteristics;
        let mut c = MapCharacteristics::new();
        for (s, v) in &ch.drift {
            c.set_drift(st(s)?, *v);
        }
        for (s, v) in &ch.diffusion {
            c.set_diffusion(st(s)?, *v);
        }
        for (s, rate, law) in &ch.local {
            c.set_local_jump(st(s)?, *rate, *law);
        }
        for (a, b, prob, law) in &ch.transition {
            c.set_transition_jump(st(a)?, st(b)?, *prob, *law);
        }
        MapModel::new(spec, c)
    }

    pub fn initial_law(&self) -> crate::error::Result<InitialLaw> {
        match &self.initial {
            InitialConfig::Stationary => Ok(InitialLaw::Stationary),
            InitialConfig::State(l) => {
                let spec = self.modulator_spec()?;
                spec.state_of(l)
                    .map(InitialLaw::Fixed)
                    .ok_or_else(|| crate::error::MapError::InvalidModulator(format!("unknown state `{l}`")))
            }
        }
    }

    /// Normalized form: fixed key order, every experiment key present.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        o.push_str("[modulator]\n");
        match &self.modulator {
            ModulatorConfig::Finite { states, rates } => {
                o.push_str("kind = finite\n");
                let _ = writeln!(o, "states = {}", states.join(" "));
                for (a, b, r) in rates {
                    let _ = writeln!(o, "rate = {a} {b} {r}");
                }
            }
            ModulatorConfig::SymmetricWalk => o.push_str("kind = symmetric_walk\n"),
        }
        match &self.initial {
            InitialConfig::Stationary => o.push_str("initial = stationary\n"),
            InitialConfig::State(l) => {
                let _ = writeln!(o, "initial = {l}");
            }
        }
        o.push_str("\n[characteristics]\n");
        let ch = &self.characteristics;
        for (s, v) in &ch.drift {
            let _ = writeln!(o, "drift = {s} {v}");
        }
        for (s, v) in &ch.diffusion {
            let _ = writeln!(o, "diffusion = {s} {v}");
        }
        for (s, r, law) in &ch.local {
            let _ = writeln!(o, "local = {s} {r} {}", fmt_law(law));
        }
        for (a, b, p, law) in &ch.transition {
            let _ = writeln!(o, "transition = {a} {b} {p} {}", fmt_law(law));
        }
        let x = &self.experiment;
        o.push_str("\n[experiment]\n");
        if let Some(c) = &x.command {
            let _ = writeln!(o, "command = {c}");
        }
        let _ = writeln!(o, "seed = {}", x.seed);
        let _ = writeln!(o, "paths = {}", x.paths);
        let _ = writeln!(o, "horizons = {}", join(&x.horizons));
        let _ = writeln!(o, "grid = {}", x.grid);
        let _ = writeln!(o, "samples = {}", x.samples);
        let _ = writeln!(o, "oracle_samples = {}", x.oracle_samples);
        let _ = writeln!(o, "n = {}", x.n);
        let _ = writeln!(o, "t = {}", x.t);
        let _ = writeln!(o, "epsilon = {}", x.epsilon);
        let _ = writeln!(o, "lindeberg_paths = {}", x.lindeberg_paths);
        let _ = writeln!(o, "p = {}", x.p);
        let _ = writeln!(o, "times = {}", join(&x.times));
        let _ = writeln!(o, "compensation_t = {}", x.compensation_t);
        let tf: Vec<String> = x.test_functions.iter().map(fmt_test_function).collect();
        let _ = writeln!(o, "test_functions = {}", tf.join(" "));
        let _ = writeln!(o, "frozen_paths = {}", x.frozen_paths);
        let _ = writeln!(o, "replicas = {}", x.replicas);
        let _ = writeln!(o, "lambdas = {}", join(&x.lambdas));
        let _ = writeln!(o, "charfn_t = {}", x.charfn_t);
        if let Some(a) = x.alpha {
            let _ = writeln!(o, "alpha = {a}");
        }
        let _ = writeln!(o, "out = {}", x.out);
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALTERNATING: &str = "\
[modulator]
kind = finite
states = a b
rate = a b 1
rate = b a 1
initial = a

[characteristics]
transition = a b 1 point 0.5
transition = b a 1 point -0.5

[experiment]
seed = 7
";

    fn located(err: ConfigError) -> (usize, String, String) {
        match err {
            ConfigError::Located { line, section, key, .. } => (line, section, key),
            other => panic!("not located: {other}"),
        }
    }

    #[test]
    fn empty_file() {
        assert_eq!(ExperimentConfig::parse("").unwrap_err().to_string(), "missing section: modulator");
    }

    #[test]
    fn duplicate_seed_is_located() {
        let text = format!("{ALTERNATING}seed = 8\n");
        let (line, section, key) = located(ExperimentConfig::parse(&text).unwrap_err());
        assert_eq!((line, section.as_str(), key.as_str()), (14, "experiment", "seed"));
    }

    #[test]
    fn seed_is_mandatory() {
        let text = ALTERNATING.replace("seed = 7\n", "paths = 3\n");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_state_names_key() {
        let text = ALTERNATING.replace("transition = b a 1", "transition = c a 1");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(located(err.clone()), (10, "characteristics".into(), "transition".into()));
        assert!(err.to_string().contains("unknown state `c`"));
    }

    #[test]
    fn unknown_law_and_negative_rate() {
        let text = ALTERNATING.replace("point 0.5", "cauchy 0.5");
        assert!(ExperimentConfig::parse(&text).unwrap_err().to_string().contains("unknown law family `cauchy`"));
        let text = ALTERNATING.replace("rate = a b 1", "rate = a b -1");
        let (line, _, key) = located(ExperimentConfig::parse(&text).unwrap_err());
        assert_eq!((line, key.as_str()), (4, "rate"));
        let text = ALTERNATING.replace("[experiment]", "local = a -2 point 1\n[experiment]");
        assert!(ExperimentConfig::parse(&text).unwrap_err().to_string().contains("nonnegative"));
    }

    #[test]
    fn transition_must_be_a_modulator_edge() {
        let spec = "[modulator]\nkind = finite\nstates = a b c\nrate = a b 1\nrate = b c 1\nrate = c a 1\ninitial = a\n";
        let text = format!("{spec}[characteristics]\ntransition = a c 1 point 1\n[experiment]\nseed = 1\n");
        assert!(ExperimentConfig::parse(&text).unwrap_err().to_string().contains("not a modulator transition"));
    }

    #[test]
    fn round_trip_is_identity_on_normal_form() {
        let cfg = ExperimentConfig::parse(ALTERNATING).unwrap();
        let text = cfg.to_text();
        let again = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_text(), text);
    }

    #[test]
    fn walk_labels_are_integers() {
        let text = "[modulator]\nkind = symmetric_walk\ninitial = 0\n[characteristics]\ndrift = -3 1\n[experiment]\nseed = 1\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let model = cfg.model().unwrap();
        assert_eq!(model.chars.state(State(-3)).drift, 1.0);
        assert!(ExperimentConfig::parse(&text.replace("-3", "x")).is_err());
    }
}
