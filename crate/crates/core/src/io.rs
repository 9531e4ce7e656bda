//! Persistence: CSV time series and `LCF1` binary field snapshots.
//!
//! Snapshot layout, all little-endian: magic `LCF1`, `u32` version (1),
//! `u32` N, `f64` L, `u32` n, `f64` t, then `N^3` `f64` values, x fastest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{LandauError, Result};
use crate::estimates::{Provenance, TimeSeries};
use crate::functionals::DiagnosticsRecord;
use crate::grid::{ScalarField, VelocityGrid};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"LCF1";
pub const SNAPSHOT_VERSION: u32 = 1;
const SNAPSHOT_HEADER_LEN: usize = 4 + 4 + 4 + 8 + 4 + 8;

const LEADING_COLUMNS: [&str; 10] = [
    "t",
    "mass",
    "px",
    "py",
    "pz",
    "energy",
    "entropy",
    "dissipation",
    "fisher",
    "fisher_sqrt",
];
const TRAILING_COLUMNS: [&str; 5] = ["l3_m3", "h3", "min_f", "max_f", "dt"];

/// Column name of the weighted `L^2_k` norm.
pub fn l2_column(k: f64) -> String {
    format!("l2_{k}")
}

pub fn csv_header(k_list: &[f64]) -> String {
    let mut cols: Vec<String> = LEADING_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend(k_list.iter().map(|&k| l2_column(k)));
    cols.extend(TRAILING_COLUMNS.iter().map(|s| s.to_string()));
    cols.join(",")
}

fn record_values(r: &DiagnosticsRecord) -> Vec<f64> {
    let mut v = vec![
        r.t,
        r.mass,
        r.momentum[0],
        r.momentum[1],
        r.momentum[2],
        r.energy,
        r.entropy,
        r.dissipation,
        r.fisher,
        r.fisher_sqrt,
    ];
    v.extend(&r.l2);
    v.extend([r.l3_m3, r.h3, r.min_f, r.max_f, r.dt]);
    v
}

/// Serializes a series. Provenance goes into leading `#` comment lines;
/// floats use the shortest exponent form that round-trips exactly.
pub fn timeseries_to_csv(series: &TimeSeries) -> String {
    let mut out = String::new();
    out.push_str("# landau time series\n");
    for (key, value) in series.provenance.entries() {
        let _ = writeln!(out, "# {key} = {value}");
    }
    out.push_str(&csv_header(&series.k_list));
    out.push('\n');
    for r in &series.records {
        let row: Vec<String> = record_values(r).iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_timeseries(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, timeseries_to_csv(series)).map_err(|e| LandauError::io(path, e))
}

pub fn read_timeseries(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LandauError::io(path, e))?;
    parse_timeseries(&text)
}

fn schema(message: impl Into<String>, k_list: &[f64]) -> LandauError {
    LandauError::Schema {
        message: message.into(),
        expected: csv_header(k_list),
    }
}

/// Parses the CSV written by [`timeseries_to_csv`].
pub fn parse_timeseries(text: &str) -> Result<TimeSeries> {
    let mut provenance = Provenance::default();
    let mut lines = text.lines().enumerate();
    let (header_line, header) = loop {
        match lines.next() {
            None => return Err(schema("missing header", &[1.5, 2.0, 2.25])),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) if l.starts_with('#') => {
                if let Some((k, v)) = l.trim_start_matches('#').split_once('=') {
                    provenance.insert(k.trim(), v.trim());
                }
            }
            Some((i, l)) => break (i + 1, l.trim()),
        }
    };
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let k_list: Vec<f64> = columns
        .iter()
        .filter_map(|c| c.strip_prefix("l2_"))
        .map(|k| {
            k.parse::<f64>()
                .map_err(|_| schema(format!("bad weighted-norm column l2_{k}"), &[1.5, 2.0, 2.25]))
        })
        .collect::<Result<_>>()?;
    for name in LEADING_COLUMNS.iter().chain(TRAILING_COLUMNS.iter()) {
        if !columns.contains(name) {
            return Err(schema(format!("missing column `{name}`"), &k_list));
        }
    }
    let expected = csv_header(&k_list);
    if columns.join(",") != expected {
        return Err(schema(
            format!("header mismatch at line {header_line}: got `{header}`"),
            &k_list,
        ));
    }
    let width = columns.len();
    let nk = k_list.len();
    let mut records = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(LandauError::Parse {
                line: line_no,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let values: Vec<f64> = fields
            .iter()
            .zip(&columns)
            .map(|(f, col)| {
                f.trim().parse::<f64>().map_err(|_| LandauError::Parse {
                    line: line_no,
                    message: format!("column `{col}`: cannot parse {f:?} as a number"),
                })
            })
            .collect::<Result<_>>()?;
        records.push(DiagnosticsRecord {
            t: values[0],
            mass: values[1],
            momentum: [values[2], values[3], values[4]],
            energy: values[5],
            entropy: values[6],
            dissipation: values[7],
            fisher: values[8],
            fisher_sqrt: values[9],
            l2: values[10..10 + nk].to_vec(),
            l3_m3: values[10 + nk],
            h3: values[11 + nk],
            min_f: values[12 + nk],
            max_f: values[13 + nk],
            dt: values[14 + nk],
        });
    }
    TimeSeries::new(k_list, records, provenance)
}

/// A field at one time with the run parameters needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub cells: u32,
    pub half_width: f64,
    pub n: u32,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_field(f: &ScalarField, n: u32, t: f64) -> Self {
        Snapshot {
            cells: f.grid().cells() as u32,
            half_width: f.grid().half_width(),
            n,
            t,
            values: f.values().to_vec(),
        }
    }

    pub fn grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.cells as usize, self.half_width)
    }

    pub fn to_field(&self) -> Result<ScalarField> {
        ScalarField::new(self.grid()?, self.values.clone())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SNAPSHOT_HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.cells.to_le_bytes());
        out.extend_from_slice(&self.half_width.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < SNAPSHOT_HEADER_LEN {
            return Err(LandauError::Snapshot(format!(
                "header short: {} bytes, need {SNAPSHOT_HEADER_LEN}",
                bytes.len()
            )));
        }
        if &bytes[0..4] != SNAPSHOT_MAGIC {
            return Err(LandauError::Snapshot(format!(
                "bad magic {:?}, expected \"LCF1\"",
                String::from_utf8_lossy(&bytes[0..4])
            )));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(4);
        if version != SNAPSHOT_VERSION {
            return Err(LandauError::Snapshot(format!(
                "unsupported version {version}, expected {SNAPSHOT_VERSION}"
            )));
        }
        let cells = u32_at(8);
        let half_width = f64_at(12);
        let n = u32_at(20);
        let t = f64_at(24);
        let count = (cells as usize).pow(3);
        let payload = &bytes[SNAPSHOT_HEADER_LEN..];
        if payload.len() < 8 * count {
            return Err(LandauError::Snapshot(format!(
                "payload short: expected N³ values (N = {cells}, need {count}, found {})",
                payload.len() / 8
            )));
        }
        if payload.len() > 8 * count {
            return Err(LandauError::Snapshot(format!(
                "trailing bytes: {} after N³ = {count} values",
                payload.len() - 8 * count
            )));
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Snapshot {
            cells,
            half_width,
            n,
            t,
            values,
        })
    }
}

pub fn write_snapshot(path: impl AsRef<Path>, snapshot: &Snapshot) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, snapshot.to_bytes()).map_err(|e| LandauError::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| LandauError::io(path, e))?;
    Snapshot::from_bytes(&bytes)
}

/// File name used for the snapshot with the given index.
pub fn snapshot_file_name(index: usize) -> String {
    format!("snapshot_{index:04}.lcf")
}
