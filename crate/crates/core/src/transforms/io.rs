//! Columnar CSV bodies with a JSON header for sampled functions and tables.
//!
//! Every row holds two coordinates followed by the real and imaginary part,
//! printed with 17 significant digits so values survive a round trip exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    uniform_angles, Chamber, FunctionOnX, HorocycleFunction, SpectralMeasure, SpectralTable,
    WEYL_ORDER,
};
use crate::error::{Error, Result};
use crate::geometry::{PolarGrid, RHO};

pub const TABLE_SCHEMA: &str = "hypharm-table/1";

/// Grid metadata and normalization constants accompanying a CSV body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub schema: String,
    pub kind: String,
    pub columns: Vec<String>,
    pub n_rows: usize,
    pub grid: BTreeMap<String, Value>,
    pub normalization: BTreeMap<String, f64>,
}

impl TableHeader {
    fn new(kind: &str, columns: [&str; 2], n_rows: usize) -> Self {
        let measure = SpectralMeasure::hyperbolic_plane();
        let normalization = BTreeMap::from([
            ("rho".to_string(), RHO),
            ("kappa".to_string(), measure.kappa),
            ("weyl_order".to_string(), WEYL_ORDER),
            ("c0".to_string(), measure.ev.c0.re),
        ]);
        Self {
            schema: TABLE_SCHEMA.to_string(),
            kind: kind.to_string(),
            columns: [columns[0], columns[1], "re", "im"]
                .map(String::from)
                .to_vec(),
            n_rows,
            grid: BTreeMap::new(),
            normalization,
        }
    }

    fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.grid.insert(key.to_string(), value.into());
        self
    }

    fn number(&self, key: &str) -> Result<f64> {
        self.grid
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Format(format!("header lacks numeric `{key}`")))
    }

    fn count(&self, key: &str) -> Result<usize> {
        self.grid
            .get(key)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| Error::Format(format!("header lacks count `{key}`")))
    }
}

/// Types with a columnar serialization.
pub trait Tabular: Sized {
    const KIND: &'static str;

    fn header(&self) -> TableHeader;

    /// `[coord₀, coord₁, re, im]` per node in storage order.
    fn rows(&self) -> Vec<[f64; 4]>;

    fn from_rows(header: &TableHeader, rows: &[[f64; 4]]) -> Result<Self>;
}

fn values_of(rows: &[[f64; 4]]) -> Vec<Complex64> {
    rows.iter().map(|r| Complex64::new(r[2], r[3])).collect()
}

fn check_coord(found: f64, want: f64, what: &str) -> Result<()> {
    if (found - want).abs() > 1e-12 * want.abs().max(1.0) {
        return Err(Error::Format(format!(
            "{what} {found} does not match the grid value {want}"
        )));
    }
    Ok(())
}

impl Tabular for FunctionOnX {
    const KIND: &'static str = "function_on_x";

    fn header(&self) -> TableHeader {
        TableHeader::new(Self::KIND, ["r", "theta"], self.values.len())
            .with("r_max", self.grid.r_max)
            .with("n_r", self.grid.n_r())
            .with("n_theta", self.grid.n_theta())
    }

    fn rows(&self) -> Vec<[f64; 4]> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(self.values.len());
        for (i, &r) in g.r_values.iter().enumerate() {
            for (j, &t) in g.theta_values.iter().enumerate() {
                let v = self.value(i, j);
                out.push([r, t, v.re, v.im]);
            }
        }
        out
    }

    fn from_rows(header: &TableHeader, rows: &[[f64; 4]]) -> Result<Self> {
        let grid = PolarGrid::new(
            header.number("r_max")?,
            header.count("n_r")?,
            header.count("n_theta")?,
        )?;
        if rows.len() != grid.n_nodes() {
            return Err(Error::Format(format!(
                "{} rows for a grid of {} nodes",
                rows.len(),
                grid.n_nodes()
            )));
        }
        for (idx, row) in rows.iter().enumerate() {
            let (i, j) = (idx / grid.n_theta(), idx % grid.n_theta());
            check_coord(row[0], grid.r_values[i], "r")?;
            check_coord(row[1], grid.theta_values[j], "theta")?;
        }
        FunctionOnX::new(grid, values_of(rows))
    }
}

impl Tabular for SpectralTable {
    const KIND: &'static str = "spectral_table";

    fn header(&self) -> TableHeader {
        TableHeader::new(Self::KIND, ["lambda", "b"], self.values.len())
            .with("n_lambda", self.n_lambda())
            .with("n_b", self.n_b())
            .with("lambda_weight", self.lambda_weight)
            .with("chamber", self.chamber.sign())
    }

    fn rows(&self) -> Vec<[f64; 4]> {
        let mut out = Vec::with_capacity(self.values.len());
        for (k, &b) in self.b_values.iter().enumerate() {
            for j in 0..self.n_lambda() {
                let v = self.value(j, k);
                out.push([self.lambda(j), b, v.re, v.im]);
            }
        }
        out
    }

    fn from_rows(header: &TableHeader, rows: &[[f64; 4]]) -> Result<Self> {
        let (nl, nb) = (header.count("n_lambda")?, header.count("n_b")?);
        let chamber = if header.number("chamber")? < 0.0 {
            Chamber::Minus
        } else {
            Chamber::Plus
        };
        if rows.len() != nl * nb || nl == 0 {
            return Err(Error::Format(format!(
                "{} rows for {nl} × {nb} table",
                rows.len()
            )));
        }
        let lambda_values: Vec<f64> = rows[..nl].iter().map(|r| chamber.sign() * r[0]).collect();
        let b_values = uniform_angles(nb);
        for (idx, row) in rows.iter().enumerate() {
            check_coord(chamber.sign() * row[0], lambda_values[idx % nl], "lambda")?;
            check_coord(row[1], b_values[idx / nl], "b")?;
        }
        Ok(SpectralTable {
            lambda_values,
            lambda_weight: header.number("lambda_weight")?,
            chamber,
            b_values,
            values: values_of(rows),
        })
    }
}

impl Tabular for HorocycleFunction {
    const KIND: &'static str = "horocycle_function";

    fn header(&self) -> TableHeader {
        TableHeader::new(Self::KIND, ["h", "b"], self.values.len())
            .with("n_h", self.n_h())
            .with("n_b", self.n_b())
    }

    fn rows(&self) -> Vec<[f64; 4]> {
        let mut out = Vec::with_capacity(self.values.len());
        for (k, &b) in self.b_values.iter().enumerate() {
            for (i, &h) in self.h_values.iter().enumerate() {
                let v = self.value(i, k);
                out.push([h, b, v.re, v.im]);
            }
        }
        out
    }

    fn from_rows(header: &TableHeader, rows: &[[f64; 4]]) -> Result<Self> {
        let (nh, nb) = (header.count("n_h")?, header.count("n_b")?);
        if rows.len() != nh * nb || nh < 2 {
            return Err(Error::Format(format!(
                "{} rows for {nh} × {nb} table",
                rows.len()
            )));
        }
        let h_values: Vec<f64> = rows[..nh].iter().map(|r| r[0]).collect();
        let b_values = uniform_angles(nb);
        for (idx, row) in rows.iter().enumerate() {
            check_coord(row[0], h_values[idx % nh], "h")?;
            check_coord(row[1], b_values[idx / nh], "b")?;
        }
        Ok(HorocycleFunction {
            h_values,
            b_values,
            values: values_of(rows),
        })
    }
}

/// Formats one CSV field with 17 significant digits.
pub fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// The CSV body (header line plus one line per node).
pub fn to_csv<T: Tabular>(table: &T) -> String {
    let header = table.header();
    let mut s = header.columns.join(",");
    s.push('\n');
    for row in table.rows() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            csv_number(row[0]),
            csv_number(row[1]),
            csv_number(row[2]),
            csv_number(row[3])
        );
    }
    s
}

/// Writes the CSV body to `csv` and the JSON header to `json`.
pub fn write_table<T: Tabular>(table: &T, mut csv: impl Write, mut json: impl Write) -> Result<()> {
    csv.write_all(to_csv(table).as_bytes())?;
    serde_json::to_writer_pretty(&mut json, &table.header())?;
    json.write_all(b"\n")?;
    Ok(())
}

/// Reads a table written by [`write_table`].
pub fn read_table<T: Tabular>(csv: impl Read, json: impl Read) -> Result<T> {
    let header: TableHeader = serde_json::from_reader(json)?;
    if header.schema != TABLE_SCHEMA {
        return Err(Error::Format(format!("unknown schema `{}`", header.schema)));
    }
    if header.kind != T::KIND {
        return Err(Error::Format(format!(
            "expected a `{}` table, found `{}`",
            T::KIND,
            header.kind
        )));
    }
    let mut rows = Vec::with_capacity(header.n_rows);
    let mut lines = BufReader::new(csv).lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    if first.trim() != header.columns.join(",") {
        return Err(Error::Format(format!("unexpected CSV header `{first}`")));
    }
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = [0.0; 4];
        let mut fields = line.split(',');
        for slot in row.iter_mut() {
            let field = fields
                .next()
                .ok_or_else(|| Error::Format(format!("line {}: too few fields", n + 2)))?;
            *slot = field
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("line {}: `{field}`: {e}", n + 2)))?;
        }
        if fields.next().is_some() {
            return Err(Error::Format(format!("line {}: too many fields", n + 2)));
        }
        rows.push(row);
    }
    if rows.len() != header.n_rows {
        return Err(Error::Format(format!(
            "header announces {} rows, body has {}",
            header.n_rows,
            rows.len()
        )));
    }
    T::from_rows(&header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiscPoint;
    use crate::transforms::{helgason_forward, HorocycleGrid, SpectralGrid};

    fn round_trip<T: Tabular>(t: &T) -> T {
        let (mut csv, mut json) = (Vec::new(), Vec::new());
        write_table(t, &mut csv, &mut json).unwrap();
        read_table(csv.as_slice(), json.as_slice()).unwrap()
    }

    fn close(a: &[Complex64], b: &[Complex64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() <= 1e-15 * x.norm().max(1e-300));
        }
    }

    #[test]
    fn function_on_x_round_trip() {
        let g = PolarGrid::new(2.0, 8, 8).unwrap();
        let u = FunctionOnX::gaussian(&g, 0.4, &DiscPoint::from_polar(0.3, 0.2))
            .scale(Complex64::new(1.0 / 3.0, 0.7));
        let back = round_trip(&u);
        assert_eq!(back.grid, u.grid);
        close(&back.values, &u.values);
    }

    #[test]
    fn spectral_and_horocycle_round_trip() {
        let g = PolarGrid::new(2.0, 8, 8).unwrap();
        let u = FunctionOnX::gaussian(&g, 0.4, &DiscPoint::ORIGIN);
        let f = helgason_forward(&u, &SpectralGrid::new(4.0, 8, 8).unwrap()).value;
        let back = round_trip(&f);
        assert_eq!(back.lambda_values, f.lambda_values);
        close(&back.values, &f.values);

        let h = HorocycleFunction::from_fn(&HorocycleGrid::new(2.0, 8, 8).unwrap(), |h, b| {
            Complex64::new(h.sin(), b.cos() / 7.0)
        });
        let back = round_trip(&h);
        close(&back.values, &h.values);
    }

    #[test]
    fn rejects_wrong_kind_and_bad_fields() {
        let h = HorocycleFunction::from_fn(&HorocycleGrid::new(2.0, 8, 8).unwrap(), |h, _| {
            Complex64::new(h, 0.0)
        });
        let (mut csv, mut json) = (Vec::new(), Vec::new());
        write_table(&h, &mut csv, &mut json).unwrap();
        assert!(read_table::<FunctionOnX>(csv.as_slice(), json.as_slice()).is_err());
        let broken = String::from_utf8(csv).unwrap().replacen("e0,", "x,", 1);
        assert!(read_table::<HorocycleFunction>(broken.as_bytes(), json.as_slice()).is_err());
    }
}
