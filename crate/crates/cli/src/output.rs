//! CSV emission with fixed float formatting and atomic file replacement.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Time value as it appears in file names, whichever of plain or scientific notation is shorter.
pub fn time_tag(t: f64) -> String {
    let plain = format!("{t}");
    let sci = format!("{t:e}");
    if plain.len() <= sci.len() {
        plain
    } else {
        sci
    }
}

/// Rows of string cells written with `,` separators and `\n` line endings.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(cells).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("writing to memory")
    }
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    let err = |source| CliError::Write { path: path.clone(), source };
    std::fs::create_dir_all(dir).map_err(err)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = std::fs::File::create(&tmp).map_err(err)?;
    f.write_all(bytes).map_err(err)?;
    f.sync_all().map_err(err)?;
    drop(f);
    std::fs::rename(&tmp, &path).map_err(err)?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

pub fn write_table(dir: &Path, name: &str, table: Table) -> Result<PathBuf> {
    write_atomic(dir, name, &table.into_bytes())
}

/// Header and numeric columns of a CSV file; non-numeric columns are dropped.
pub struct Columns {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn read_columns(path: &Path) -> Result<Columns> {
    let err = |e: csv::Error| CliError::Config(format!("cannot parse {}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Read { path: path.into(), source },
        other => CliError::Config(format!("cannot parse {}: {other:?}", path.display())),
    })?;
    let header: Vec<String> = reader.headers().map_err(err)?.iter().map(String::from).collect();
    let mut cols: Vec<Option<Vec<f64>>> = vec![Some(Vec::new()); header.len()];
    for rec in reader.records() {
        let rec = rec.map_err(err)?;
        for (j, cell) in rec.iter().enumerate() {
            if let Some(Some(col)) = cols.get_mut(j) {
                match cell.parse::<f64>() {
                    Ok(v) => col.push(v),
                    Err(_) => cols[j] = None,
                }
            }
        }
    }
    let (names, values) = header.into_iter().zip(cols).filter_map(|(n, c)| c.map(|c| (n, c))).unzip();
    Ok(Columns { names, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
        assert_eq!(time_tag(1.0), "1");
        assert_eq!(time_tag(0.25), "0.25");
        assert_eq!(time_tag(1e300), "1e300");
        assert_eq!(time_tag(0.5f64.powi(20)), "9.5367431640625e-7");
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["x", "m", "branch"]);
        t.row([num(1.0), num(0.5), "vacuum_right".into()]);
        t.row([num(2.0), num(1.0), "delta_shock".into()]);
        let p = write_table(dir.path(), "a.csv", t).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let c = read_columns(&p).unwrap();
        assert_eq!(c.names, ["x", "m"]);
        assert_eq!(c.values, [vec![1.0, 2.0], vec![0.5, 1.0]]);
        assert!(!dir.path().join(".a.csv.tmp").exists());
    }
}
