//! Exact series tables: rows of `N, Z_N, P_N` read from and written to CSV
//! with header `N,Z,P` and plain decimal integers.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive};
use serde::Serializer;
use thiserror::Error;

const REFERENCE: &str = include_str!("../data/reference_series.csv");

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("row N={n}: {msg}")]
    Invalid { n: u32, msg: String },
    #[error("row N={n} already present with different values")]
    Conflict { n: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Serializes a big integer as a decimal string.
pub fn ser_decimal<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Natural log of a positive big integer, accurate to a few ulp.
pub fn ln_bigint(v: &BigInt) -> f64 {
    assert!(v.is_positive(), "ln of non-positive value {v}");
    let bits = v.bits();
    if bits <= 1000 {
        if let Some(f) = v.to_f64() {
            return f.ln();
        }
    }
    // keep 64 leading bits; the rest only perturbs beyond f64 precision
    let shift = bits - 64;
    let top = (v >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesRow {
    pub n: u32,
    pub z: BigInt,
    pub p: BigInt,
}

impl SeriesRow {
    pub fn new(n: u32, z: impl Into<BigInt>, p: impl Into<BigInt>) -> SeriesRow {
        SeriesRow { n, z: z.into(), p: p.into() }
    }
}

impl fmt::Display for SeriesRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.n, self.z, self.p)
    }
}

/// Rows sorted by strictly increasing `N`.
///
/// Gaps are allowed, since doubling runs only produce even lengths; the
/// estimators report the rows they need but cannot find.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeriesTable {
    rows: Vec<SeriesRow>,
}

fn parse_int(s: &str, line: usize, what: &str) -> Result<BigInt, SeriesError> {
    let t = s.trim();
    if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
        return Err(SeriesError::Parse {
            line,
            msg: format!("{what} '{t}' is not a non-negative decimal integer"),
        });
    }
    Ok(BigInt::parse_bytes(t.as_bytes(), 10).expect("digits"))
}

impl SeriesTable {
    /// Validates rows: `N >= 1` strictly increasing, `Z, P > 0`, and `Z`
    /// strictly increasing.
    pub fn new(rows: Vec<SeriesRow>) -> Result<SeriesTable, SeriesError> {
        for (i, r) in rows.iter().enumerate() {
            if r.n == 0 {
                return Err(SeriesError::Invalid { n: 0, msg: "N must be at least 1".into() });
            }
            if r.z.sign() != Sign::Plus || r.p.sign() != Sign::Plus {
                return Err(SeriesError::Invalid { n: r.n, msg: "Z and P must be positive".into() });
            }
            if i > 0 {
                let prev = &rows[i - 1];
                if prev.n >= r.n {
                    return Err(SeriesError::Invalid {
                        n: r.n,
                        msg: format!("N must increase (follows N={})", prev.n),
                    });
                }
                if prev.z >= r.z {
                    return Err(SeriesError::Invalid {
                        n: r.n,
                        msg: format!("Z must increase (Z_{} = {} >= {})", prev.n, prev.z, r.z),
                    });
                }
            }
        }
        Ok(SeriesTable { rows })
    }

    /// Exact `Z_N`, `P_N` for `N = 1..=36`, embedded from `data/reference_series.csv`.
    pub fn reference() -> SeriesTable {
        SeriesTable::from_csv(REFERENCE.as_bytes()).expect("embedded table is valid")
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<SeriesTable, SeriesError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        let names: Vec<&str> = header.iter().map(str::trim).collect();
        if names != ["N", "Z", "P"] {
            return Err(SeriesError::Parse {
                line: 1,
                msg: format!("expected header N,Z,P, found {}", names.join(",")),
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 3 {
                return Err(SeriesError::Parse { line, msg: format!("expected 3 fields, found {}", rec.len()) });
            }
            let n = parse_int(&rec[0], line, "N")?;
            let n = n.to_u32().ok_or(SeriesError::Parse { line, msg: "N out of range".into() })?;
            rows.push(SeriesRow { n, z: parse_int(&rec[1], line, "Z")?, p: parse_int(&rec[2], line, "P")? });
        }
        SeriesTable::new(rows)
    }

    pub fn read(path: &Path) -> Result<SeriesTable, SeriesError> {
        SeriesTable::from_csv(std::fs::File::open(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,Z,P\n");
        for r in &self.rows {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    /// Adds `row`, keeping rows sorted. An identical existing row is a no-op.
    pub fn insert(&mut self, row: SeriesRow) -> Result<(), SeriesError> {
        match self.rows.binary_search_by_key(&row.n, |r| r.n) {
            Ok(i) if self.rows[i] == row => Ok(()),
            Ok(_) => Err(SeriesError::Conflict { n: row.n }),
            Err(i) => {
                let mut rows = self.rows.clone();
                rows.insert(i, row);
                *self = SeriesTable::new(rows)?;
                Ok(())
            }
        }
    }

    /// Inserts `row` into the CSV at `path`, creating the file if needed.
    pub fn append_to_file(path: &Path, row: SeriesRow) -> Result<(), SeriesError> {
        let mut table = if path.exists() { SeriesTable::read(path)? } else { SeriesTable::default() };
        table.insert(row)?;
        std::fs::write(path, table.to_csv())?;
        Ok(())
    }

    pub fn rows(&self) -> &[SeriesRow] {
        &self.rows
    }

    pub fn get(&self, n: u32) -> Option<&SeriesRow> {
        self.rows.binary_search_by_key(&n, |r| r.n).ok().map(|i| &self.rows[i])
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_n(&self) -> Option<u32> {
        self.rows.last().map(|r| r.n)
    }

    /// Rows with `lo <= N <= hi`.
    pub fn range(&self, lo: u32, hi: u32) -> Vec<&SeriesRow> {
        self.rows.iter().filter(|r| (lo..=hi).contains(&r.n)).collect()
    }

    /// True when the rows are exactly `N = 1..=max`.
    pub fn is_contiguous(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, r)| r.n as usize == i + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_table() {
        let t = SeriesTable::reference();
        assert_eq!(t.len(), 36);
        assert!(t.is_contiguous());
        assert_eq!(t.get(10).unwrap().to_string(), "10,8809878,148157880");
        assert_eq!(t.get(36).unwrap().z.to_string(), "2941370856334701726560670");
        // every walk count is a multiple of 6 and P_1 = Z_1
        assert!(t.rows().iter().all(|r| (&r.z % 6u32) == BigInt::from(0)));
    }

    #[test]
    fn csv_round_trip() {
        let t = SeriesTable::reference();
        let again = SeriesTable::from_csv(t.to_csv().as_bytes()).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = SeriesTable::from_csv("N,Z,P\n1,6,6\n2,3x0,72\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 3"), "{err}");
        assert!(SeriesTable::from_csv("N,Z\n1,6\n".as_bytes()).is_err());
        assert!(SeriesTable::from_csv("N,Z,P\n1,-6,6\n".as_bytes()).is_err());
        assert!(SeriesTable::from_csv("N,Z,P\n2,30,72\n1,6,6\n".as_bytes()).is_err());
        assert!(SeriesTable::from_csv("N,Z,P\n1,30,6\n2,6,72\n".as_bytes()).is_err());
        assert!(SeriesTable::from_csv("N,Z,P\n1,0,6\n".as_bytes()).is_err());
    }

    #[test]
    fn insert_keeps_order_and_detects_conflicts() {
        let mut t = SeriesTable::default();
        t.insert(SeriesRow::new(3, 150, 582)).unwrap();
        t.insert(SeriesRow::new(1, 6, 6)).unwrap();
        t.insert(SeriesRow::new(1, 6, 6)).unwrap();
        assert_eq!(t.to_csv(), "N,Z,P\n1,6,6\n3,150,582\n");
        assert!(!t.is_contiguous());
        assert!(matches!(t.insert(SeriesRow::new(3, 150, 583)), Err(SeriesError::Conflict { n: 3 })));
    }

    #[test]
    fn append_to_file_creates_and_extends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        SeriesTable::append_to_file(&path, SeriesRow::new(2, 30, 72)).unwrap();
        SeriesTable::append_to_file(&path, SeriesRow::new(1, 6, 6)).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "N,Z,P\n1,6,6\n2,30,72\n");
    }

    #[test]
    fn ln_of_large_values() {
        let t = SeriesTable::reference();
        let z36 = &t.get(36).unwrap().z;
        let exact = 2.941_370_856_334_701_5e24_f64.ln();
        assert!((ln_bigint(z36) - exact).abs() < 1e-13);
        let huge = BigInt::from(3).pow(2000);
        assert!((ln_bigint(&huge) - 2000.0 * 3f64.ln()).abs() < 1e-9);
    }
}
