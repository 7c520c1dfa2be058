use std::io::Write;
use std::path::Path;

use super::metrics::MetricRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "sweep_name,sweep_value,metric,mean,stderr,trials";

/// Header plus one line per row, LF-terminated. Floats use the shortest
/// representation that round-trips, so identical runs give identical bytes.
pub fn to_csv(rows: &[MetricRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{},{},{},{},{}\n", field(&r.sweep_name), r.sweep_value, field(&r.metric), r.mean, r.stderr, r.trials));
    }
    s
}

/// Quotes a text field that contains a comma, quote or line break.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let wrap = |source| Error::File { path: path.to_path_buf(), source };
    let mut f = std::fs::File::create(path).map_err(wrap)?;
    f.write_all(to_csv(rows).as_bytes()).map_err(wrap)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let rows = vec![MetricRow::new("snr_p_db", 15.0, "nmse_db_cm_lh2", -26.5, 0.12, 200).unwrap()];
        assert_eq!(to_csv(&rows), "sweep_name,sweep_value,metric,mean,stderr,trials\nsnr_p_db,15,nmse_db_cm_lh2,-26.5,0.12,200\n");
        let quoted = vec![MetricRow::new("snr_rad_db", 20.0, "crlb (a, b)", 0.2, 0.0, 0).unwrap()];
        assert!(to_csv(&quoted).ends_with("snr_rad_db,20,\"crlb (a, b)\",0.2,0,0\n"));
    }
}
