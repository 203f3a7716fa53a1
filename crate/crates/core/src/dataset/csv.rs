//! `id,w0,...,w{D-1},sugar` CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::SpectraDataset;
use crate::{Error, Result};

pub fn load_csv(path: impl AsRef<Path>) -> Result<SpectraDataset> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text)
}

pub(crate) fn parse_csv(text: &str) -> Result<SpectraDataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let Some((_, header)) = lines.next() else {
        return Err(Error::Parse { line: 1, message: "empty file".into() });
    };
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 3 || columns[0] != "id" || columns[columns.len() - 1] != "sugar" {
        return Err(Error::Parse {
            line: 1,
            message: "header must be `id,w0,...,w{D-1},sugar` with at least one wavelength column"
                .into(),
        });
    }
    let width = columns.len();
    let dim = width - 2;

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut sugar = Vec::new();
    for (line, row) in lines {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != width {
            return Err(Error::Parse {
                line,
                message: format!(
                    "ragged row: expected {width} columns ({dim} absorbances), found {}",
                    cells.len()
                ),
            });
        }
        let parse = |col: usize| -> Result<f64> {
            cells[col].parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("non-numeric value {:?} in column {}", cells[col], columns[col]),
            })
        };
        ids.push(cells[0].to_string());
        for c in 1..=dim {
            values.push(parse(c)?);
        }
        sugar.push(parse(width - 1)?);
    }
    if ids.is_empty() {
        return Err(Error::Parse { line: 2, message: "no data rows".into() });
    }
    let n = ids.len();
    let spectra = Array2::from_shape_vec((n, dim), values).expect("row widths checked");
    SpectraDataset::new(ids, spectra, Array1::from(sugar))
}

/// Serializes with shortest round-trip float formatting, so a reload is exact.
pub fn write_csv(dataset: &SpectraDataset) -> String {
    let dim = dataset.dim();
    let mut out = String::with_capacity(dataset.len() * dim * 20);
    out.push_str("id");
    for j in 0..dim {
        write!(out, ",w{j}").unwrap();
    }
    out.push_str(",sugar\n");
    for (i, id) in dataset.ids().iter().enumerate() {
        out.push_str(id);
        for v in dataset.spectra().row(i) {
            write!(out, ",{v}").unwrap();
        }
        writeln!(out, ",{}", dataset.sugar()[i]).unwrap();
    }
    out
}

pub fn save_csv(dataset: &SpectraDataset, path: impl AsRef<Path>) -> Result<()> {
    if dataset.ids().iter().any(|id| id.contains(',') || id.contains('\n')) {
        return Err(Error::invalid("sample ids must not contain commas or newlines"));
    }
    fs::write(path, write_csv(dataset))?;
    Ok(())
}
