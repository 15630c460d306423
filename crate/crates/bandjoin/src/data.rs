//! Relation sources: parallel generation and CSV files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bandjoin_core::datagen::{assemble, gen_chunk, GenSpec};
use bandjoin_core::Relation;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{DataSource, GenRelation};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: line {line}: {message}")]
    Row { path: String, line: u64, message: String },
}

/// Generates a relation chunk by chunk on the rayon pool. The result does not
/// depend on the number of threads.
pub fn generate(spec: &GenSpec) -> bandjoin_core::Result<Relation> {
    spec.validate()?;
    let chunks: Vec<Vec<f64>> = (0..spec.chunks()).into_par_iter().map(|c| gen_chunk(spec, c)).collect();
    assemble(spec, chunks)
}

fn gen_spec(rel: &GenRelation, dims: usize) -> GenSpec {
    GenSpec { distribution: rel.distribution.into(), n: rel.n, dims, seed: rel.seed }
}

/// Loads or generates both relations of an experiment.
pub fn load_source(source: &DataSource) -> anyhow::Result<(Relation, Relation)> {
    match source {
        DataSource::Generate { dims, s, t } => Ok((generate(&gen_spec(s, *dims))?, generate(&gen_spec(t, *dims))?)),
        DataSource::Csv { s, t } => {
            let load = |r: &crate::config::CsvRelation| load_csv(&r.path, &r.columns, r.limit, r.has_header);
            Ok((load(s)?, load(t)?))
        }
    }
}

/// Reads the selected columns of a CSV file. Tuple ids are the 0-based record
/// numbers; `limit` keeps only the first records.
pub fn load_csv(path: &Path, columns: &[usize], limit: Option<usize>, has_header: bool) -> Result<Relation, CsvError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|source| CsvError::Io { path: name.clone(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(has_header).flexible(true).trim(csv::Trim::All).from_reader(file);
    let mut rel = Relation::new(columns.len());
    let mut coords = vec![0.0; columns.len()];
    for (row, record) in reader.records().enumerate() {
        if limit.is_some_and(|l| row >= l) {
            break;
        }
        let record = record.map_err(|e| CsvError::Row {
            path: name.clone(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| CsvError::Row { path: name.clone(), line, message };
        for (k, &col) in columns.iter().enumerate() {
            let cell = record.get(col).ok_or_else(|| row_err(format!("missing column {col}")))?;
            coords[k] = cell.parse().map_err(|_| row_err(format!("column {col}: `{cell}` is not a number")))?;
        }
        rel.try_push(&coords, row as u64).map_err(|e| row_err(e.to_string()))?;
    }
    Ok(rel)
}

/// Writes the coordinates of a relation as a headerless CSV file, one tuple per
/// line in id order. Floats are written in shortest round-trip form.
pub fn write_csv(path: &Path, rel: &Relation) -> Result<(), CsvError> {
    let io_err = |source| CsvError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    let mut line = String::new();
    for (coords, _) in rel.iter() {
        line.clear();
        for (k, x) in coords.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&x.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
