//! CSV export of paths and event logs with round-trip float formatting.

use std::io::{Read, Write};

use super::MapPath;
use crate::modulator::ModulatorSpec;

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const PATH_HEADER: [&str; 6] = ["time", "state", "xi", "A", "bracket", "Z"];
pub const EVENT_HEADER: [&str; 3] = ["time", "kind", "size"];

pub fn write_path<W: Write>(w: W, path: &MapPath, modulator: &ModulatorSpec) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PATH_HEADER)?;
    for (i, s) in path.state_on_grid().into_iter().enumerate() {
        out.write_record([
            fmt_f64(path.grid[i]),
            modulator.label(s),
            fmt_f64(path.xi[i]),
            fmt_f64(path.a[i]),
            fmt_f64(path.bracket[i]),
            fmt_f64(path.z[i]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_events<W: Write>(w: W, path: &MapPath) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EVENT_HEADER)?;
    for e in &path.events {
        out.write_record([fmt_f64(e.time), e.kind.as_str().to_string(), fmt_f64(e.size)])?;
    }
    out.flush()?;
    Ok(())
}

/// Rows of `(time, state label, xi, A, bracket, Z)` read back from a path CSV.
pub type PathRow = (f64, String, f64, f64, f64, f64);

pub fn read_path<R: Read>(r: R) -> csv::Result<Vec<PathRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().collect()
}
