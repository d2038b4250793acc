//! CSV output with provenance headers, and the measurement-table reader.
//!
//! Every file starts with `# config_hash=<hex>` and `# seed=<n>` comments so
//! results stay traceable to the configuration and seed that produced them,
//! followed by a named column header and plain comma-separated rows.

use std::io::Write;
use std::path::Path;

use spi_core::recon::MeasurementSeries;
use spi_core::{Error, Result};

/// Provenance stamped into every output file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvMeta {
    pub config_hash: u64,
    pub seed: u64,
}

/// Writes a provenance-stamped CSV: meta comments, optional extra comment
/// lines, one header, then the rows.
pub fn write_csv(
    path: &Path,
    meta: CsvMeta,
    comments: &[String],
    header: &str,
    rows: &[String],
) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# config_hash={:016x}", meta.config_hash)?;
    writeln!(out, "# seed={}", meta.seed)?;
    for comment in comments {
        writeln!(out, "# {comment}")?;
    }
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Writes one pattern sweep as `pattern_id,intensity` rows.
pub fn write_measurements(
    path: &Path,
    meta: CsvMeta,
    comments: &[String],
    series: &MeasurementSeries,
) -> Result<()> {
    let rows: Vec<String> = series
        .pattern_ids
        .iter()
        .zip(&series.values)
        .map(|(id, v)| format!("{id},{v}"))
        .collect();
    write_csv(path, meta, comments, "pattern_id,intensity", &rows)
}

/// Reads a measurement table written by [`write_measurements`]. Comment
/// lines are skipped; the column header is required.
pub fn read_measurements(path: &Path) -> Result<MeasurementSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut saw_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "pattern_id,intensity" {
                return Err(Error::Format(format!(
                    "line {}: expected header `pattern_id,intensity`",
                    lineno + 1
                )));
            }
            saw_header = true;
            continue;
        }
        let (id, value) = line.split_once(',').ok_or_else(|| {
            Error::Format(format!("line {}: expected `pattern_id,intensity`", lineno + 1))
        })?;
        ids.push(id.trim().parse().map_err(|_| {
            Error::Format(format!("line {}: bad pattern id `{id}`", lineno + 1))
        })?);
        values.push(value.trim().parse().map_err(|_| {
            Error::Format(format!("line {}: bad intensity `{value}`", lineno + 1))
        })?);
    }
    if !saw_header {
        return Err(Error::Format("missing `pattern_id,intensity` header".into()));
    }
    MeasurementSeries::new(ids, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const META: CsvMeta = CsvMeta {
        config_hash: 0xdead_beef_0123_4567,
        seed: 42,
    };

    #[test]
    fn measurements_round_trip_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let series =
            MeasurementSeries::new(vec![0, 1, 5], vec![12.0, 0.5, 99_000.25]).unwrap();
        write_measurements(&path, META, &[String::from("scheme=cspi")], &series).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_hash=deadbeef01234567\n# seed=42\n"));
        assert!(text.contains("# scheme=cspi\n"));
        let back = read_measurements(&path).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn reader_rejects_malformed_tables() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "0,1\n").unwrap();
        assert!(read_measurements(&path).is_err());
        std::fs::write(&path, "pattern_id,intensity\nzero,1\n").unwrap();
        assert!(read_measurements(&path).is_err());
        std::fs::write(&path, "pattern_id,intensity\n0\n").unwrap();
        assert!(read_measurements(&path).is_err());
        std::fs::write(&path, "# only comments\n").unwrap();
        assert!(read_measurements(&path).is_err());
    }

    #[test]
    fn generic_writer_orders_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(
            &path,
            META,
            &[],
            "a,b",
            &[String::from("1,2"), String::from("3,4")],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[2], "a,b");
        assert_eq!(lines[3], "1,2");
        assert_eq!(lines[4], "3,4");
    }
}
