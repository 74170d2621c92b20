//! CSV output with a fixed schema.

use std::io::Write;

use crate::decay::DecayRow;
use crate::error::Result;

pub const HEADER: [&str; 10] = [
    "experiment",
    "kernel",
    "n",
    "gamma",
    "p",
    "s",
    "f_id",
    "ratio",
    "tail_budget",
    "status",
];

/// `v` in plain decimal with 12 significant digits (scientific outside `1e-5..1e15`).
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let digits = (11 - mag).max(0) as usize;
        format!("{v:.digits$}")
    } else {
        format!("{v:.11e}")
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[DecayRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.to_string(),
            r.kernel.clone(),
            r.n.to_string(),
            sig12(r.gamma),
            sig12(r.p),
            r.s.to_string(),
            r.f_id.to_string(),
            sig12(r.ratio),
            sig12(r.tail_budget),
            r.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn rows_to_string(rows: &[DecayRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
