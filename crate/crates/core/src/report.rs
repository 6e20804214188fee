//! Self-contained test reports whose verdict is a pure function of the
//! stored fields.

use std::fmt;
use std::io::Write;

use crate::sim::export::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Uncertainty {
    Se(f64),
    PValue(f64),
    None,
}

/// Decision rule applied to `(statistic, target, uncertainty)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// `|statistic − target| <= k·se + floor`.
    WithinSe { k: f64, floor: f64 },
    /// `p > level`.
    PValueAbove { level: f64 },
    /// `lo <= statistic <= hi`.
    Interval { lo: f64, hi: f64 },
    /// `|statistic − target| <= tol·|target| + floor`.
    RelativeWithin { tol: f64, floor: f64 },
    /// `statistic < bound`.
    Below { bound: f64 },
    /// `statistic <= bound`.
    AtMost { bound: f64 },
    /// Not gated.
    Reported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Reported,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Reported => "reported",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Rule {
    pub fn evaluate(&self, statistic: f64, target: f64, uncertainty: Uncertainty) -> Verdict {
        let ok = match *self {
            Rule::Reported => return Verdict::Reported,
            Rule::WithinSe { k, floor } => match uncertainty {
                Uncertainty::Se(se) => (statistic - target).abs() <= k * se + floor,
                _ => false,
            },
            Rule::PValueAbove { level } => match uncertainty {
                Uncertainty::PValue(p) => p > level,
                _ => false,
            },
            Rule::Interval { lo, hi } => lo <= statistic && statistic <= hi,
            Rule::RelativeWithin { tol, floor } => (statistic - target).abs() <= tol * target.abs() + floor,
            Rule::Below { bound } => statistic < bound,
            Rule::AtMost { bound } => statistic <= bound,
        };
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Rule::WithinSe { k, floor } => write!(f, "within {k}se+{floor}"),
            Rule::PValueAbove { level } => write!(f, "p>{level}"),
            Rule::Interval { lo, hi } => write!(f, "in [{lo},{hi}]"),
            Rule::RelativeWithin { tol, floor } => write!(f, "rel {tol}+{floor}"),
            Rule::Below { bound } => write!(f, "<{bound}"),
            Rule::AtMost { bound } => write!(f, "<={bound}"),
            Rule::Reported => write!(f, "reported"),
        }
    }
}

impl fmt::Display for Uncertainty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Uncertainty::Se(se) => write!(f, "se={se:.16e}"),
            Uncertainty::PValue(p) => write!(f, "p={p:.16e}"),
            Uncertainty::None => write!(f, "none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub target: f64,
    /// Where the target value comes from.
    pub provenance: String,
    pub uncertainty: Uncertainty,
    pub rule: Rule,
    pub verdict: Verdict,
    pub sample_size: usize,
    pub seed: u64,
    /// Wall-clock seconds; excluded from byte-stable outputs.
    pub runtime: f64,
}

impl TestReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        statistic: f64,
        target: f64,
        provenance: impl Into<String>,
        uncertainty: Uncertainty,
        rule: Rule,
        sample_size: usize,
        seed: u64,
    ) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            target,
            provenance: provenance.into(),
            uncertainty,
            rule,
            verdict: rule.evaluate(statistic, target, uncertainty),
            sample_size,
            seed,
            runtime: 0.0,
        }
    }

    pub fn with_runtime(mut self, secs: f64) -> Self {
        self.runtime = secs;
        self
    }

    pub fn recomputed_verdict(&self) -> Verdict {
        self.rule.evaluate(self.statistic, self.target, self.uncertainty)
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn summary_line(&self) -> String {
        format!(
            "[{}] {}: statistic={} target={} ({}) {} rule={} n={} seed={}",
            self.verdict, self.name, self.statistic, self.target, self.provenance, self.uncertainty, self.rule,
            self.sample_size, self.seed
        )
    }
}

pub const REPORT_HEADER: [&str; 9] =
    ["name", "statistic", "target", "provenance", "uncertainty", "rule", "verdict", "seed", "sample_size"];

/// One row per report. Runtimes are left out so the file is byte-stable.
pub fn write_reports<W: Write>(w: W, reports: &[TestReport]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in reports {
        out.write_record([
            r.name.clone(),
            fmt_f64(r.statistic),
            fmt_f64(r.target),
            r.provenance.clone(),
            r.uncertainty.to_string(),
            r.rule.to_string(),
            r.verdict.to_string(),
            r.seed.to_string(),
            r.sample_size.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_timings<W: Write>(w: W, reports: &[TestReport]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["name", "runtime_seconds"])?;
    for r in reports {
        out.write_record([r.name.clone(), fmt_f64(r.runtime)])?;
    }
    out.flush()?;
    Ok(())
}

/// Human-readable summary: one line per report and a closing tally.
pub fn summary_text(reports: &[TestReport]) -> String {
    let mut s: String = reports.iter().map(|r| r.summary_line() + "\n").collect();
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    s += &format!(
        "{} passed, {} failed, {} reported\n",
        count(Verdict::Pass),
        count(Verdict::Fail),
        count(Verdict::Reported)
    );
    s
}
