//! The harness result format: `experiment,seed,method,step,metric,value`,
//! one header per file, rows canonically sorted so runs are byte-stable.

use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "experiment,seed,method,step,metric,value";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub seed: u64,
    pub method: String,
    pub step: usize,
    pub metric: String,
    pub value: f64,
}

impl ResultRow {
    pub fn new(
        experiment: &str,
        seed: u64,
        method: &str,
        step: usize,
        metric: &str,
        value: f64,
    ) -> Self {
        ResultRow {
            experiment: experiment.to_string(),
            seed,
            method: method.to_string(),
            step,
            metric: metric.to_string(),
            value,
        }
    }

    fn sort_key(&self) -> (String, String, u64, usize, String) {
        (
            self.experiment.clone(),
            self.method.clone(),
            self.seed,
            self.step,
            self.metric.clone(),
        )
    }
}

/// Sorts rows canonically and writes the file. `f64` values use Rust's
/// shortest round-trip formatting, so identical runs produce identical
/// bytes.
pub fn write_csv(path: &Path, rows: &mut [ResultRow]) -> Result<()> {
    rows.sort_by_key(ResultRow::sort_key);
    let mut out = String::with_capacity(rows.len() * 48 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows.iter() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.experiment, r.seed, r.method, r.step, r.metric, r.value
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, other)) => {
            return Err(Error::CsvParse {
                line: 1,
                msg: format!("bad header '{other}'"),
            })
        }
        None => {
            return Err(Error::CsvParse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::CsvParse {
                line: lineno,
                msg: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        rows.push(ResultRow {
            experiment: fields[0].to_string(),
            seed: fields[1].parse().map_err(|_| Error::CsvParse {
                line: lineno,
                msg: format!("bad seed '{}'", fields[1]),
            })?,
            method: fields[2].to_string(),
            step: fields[3].parse().map_err(|_| Error::CsvParse {
                line: lineno,
                msg: format!("bad step '{}'", fields[3]),
            })?,
            metric: fields[4].to_string(),
            value: fields[5].parse().map_err(|_| Error::CsvParse {
                line: lineno,
                msg: format!("bad value '{}'", fields[5]),
            })?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_rows_and_sorts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut rows = vec![
            ResultRow::new("e", 2, "m", 1, "rmse", 0.5),
            ResultRow::new("e", 1, "m", 1, "rmse", 0.25),
        ];
        write_csv(&path, &mut rows).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].seed, 1);
        assert_eq!(back[1].seed, 2);
        assert_eq!(back[0].value, 0.25);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = format!("{CSV_HEADER}\ne,1,m,1,rmse,0.5\ne,1,m,oops,rmse,0.5\n");
        match parse_csv(&bad) {
            Err(Error::CsvParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_csv("not,a,header\n"),
            Err(Error::CsvParse { line: 1, .. })
        ));
    }
}
