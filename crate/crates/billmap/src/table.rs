//! Embedding and projection CSV files.
//!
//! Columns: `bill_id`, one column per axis (`x`, `y`, `z`, then `c3`,
//! `c4`, ...), `party`, `era`, `split`, and `nearest_train_dist` for
//! projections. Readers also pick up an optional free-form `label` column.

use std::path::Path;

use billmap_core::DenseMatrix;

use crate::error::{Error, Result};
use crate::ingest::{Era, Party};
use crate::persist;

pub fn axis_name(a: usize) -> String {
    match a {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        _ => format!("c{a}"),
    }
}

/// One row of an embedding or projection table.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRow {
    pub bill_id: String,
    pub coords: Vec<f64>,
    pub party: String,
    pub era: String,
    pub split: String,
    pub label: Option<String>,
    pub nearest_train_dist: Option<f64>,
}

pub struct TableInput<'a> {
    pub ids: &'a [String],
    pub coords: &'a DenseMatrix,
    pub parties: &'a [Party],
    pub eras: &'a [Era],
    pub split: &'a str,
    pub nearest: Option<&'a [f64]>,
}

/// Shortest representation that reads back bit-exactly.
fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

pub fn render_table(t: &TableInput<'_>) -> Result<Vec<u8>> {
    let n = t.coords.rows();
    if [t.ids.len(), t.parties.len(), t.eras.len()].iter().any(|&l| l != n)
        || t.nearest.is_some_and(|d| d.len() != n)
    {
        return Err(Error::argument("table columns have different lengths"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["bill_id".to_string()];
    header.extend((0..t.coords.cols()).map(axis_name));
    header.extend(["party", "era", "split"].map(String::from));
    if t.nearest.is_some() {
        header.push("nearest_train_dist".into());
    }
    let to_err = |e: csv::Error| Error::argument(format!("cannot write table: {e}"));
    w.write_record(&header).map_err(to_err)?;
    for i in 0..n {
        let mut row = vec![t.ids[i].clone()];
        row.extend(t.coords.row(i).iter().map(|&v| num(v)));
        row.push(t.parties[i].as_str().into());
        row.push(t.eras[i].as_str().into());
        row.push(t.split.into());
        if let Some(d) = t.nearest {
            row.push(num(d[i]));
        }
        w.write_record(&row).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| Error::argument(format!("cannot write table: {e}")))
}

pub fn write_table(path: &Path, t: &TableInput<'_>) -> Result<()> {
    persist::write_atomic(path, &render_table(t)?)
}

pub fn read_table(path: &Path) -> Result<Vec<PointRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let decode = |message: String| Error::Decode { what: path.display().to_string(), offset: None, message };
    let headers = r.headers().map_err(|e| decode(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let axes: Vec<usize> = (0..).map(axis_name).map_while(|a| col(&a)).collect();
    if axes.len() < 2 {
        return Err(decode("needs at least the coordinate columns x and y".into()));
    }
    let id = col("bill_id").ok_or_else(|| Error::MissingColumn("bill_id".into()))?;
    let (party, era, split, label, nearest) =
        (col("party"), col("era"), col("split"), col("label"), col("nearest_train_dist"));

    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| decode(e.to_string()))?;
        let line = i + 2;
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).unwrap_or("").to_string();
        let parse = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| decode(format!("line {line}: `{s}` is not a finite number")))
        };
        rows.push(PointRow {
            bill_id: field(Some(id)),
            coords: axes.iter().map(|&c| parse(c)).collect::<Result<_>>()?,
            party: field(party),
            era: field(era),
            split: field(split),
            label: label.map(|c| field(Some(c))),
            nearest_train_dist: nearest.map(parse).transpose()?,
        });
    }
    Ok(rows)
}
