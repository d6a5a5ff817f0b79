//! File formats: grid functions and path ensembles as a little-endian `f64` array
//! next to a JSON header, CSV tables for profiles and sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use parabolic_core::sde::{FamilySpec, PathEnsemble};
use parabolic_core::{Boundary, GridFunction, SpaceGrid, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const GRID_FORMAT: &str = "parabolic-grid-v1";
pub const ENSEMBLE_FORMAT: &str = "parabolic-ensemble-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub format: String,
    /// Start of the first time cell; sample `k` sits at `t0 + (k + 1/2) dt`.
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub x0: Vec<f64>,
    pub dx: Vec<f64>,
    pub nx: Vec<usize>,
    pub boundary: Boundary,
    /// Values file relative to the header, `values[k * nspace + i]`.
    pub values: String,
}

pub fn encode_f64(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_f64(bytes: &[u8], path: &Path) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(LabError::Format {
            path: path.into(),
            message: format!("{} bytes is not a whole number of f64", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

fn sibling(header: &Path, name: &str) -> PathBuf {
    header.with_file_name(name)
}

fn stem(header: &Path) -> String {
    header
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("values")
        .to_string()
}

pub fn grid_header(f: &GridFunction, values: String) -> GridHeader {
    let d = f.d();
    GridHeader {
        format: GRID_FORMAT.into(),
        t0: f.time.t0,
        dt: f.time.dt,
        nt: f.time.nt,
        x0: f.space.x0[..d].to_vec(),
        dx: f.space.dx[..d].to_vec(),
        nx: f.space.nx[..d].to_vec(),
        boundary: f.boundary,
        values,
    }
}

/// `<stem>.json` header and `<stem>.bin` values, in memory.
pub fn grid_files(f: &GridFunction, stem: &str) -> [(String, Vec<u8>); 2] {
    let bin = format!("{stem}.bin");
    let json = serde_json::to_vec_pretty(&grid_header(f, bin.clone())).expect("header serializes");
    [
        (format!("{stem}.json"), json),
        (bin, encode_f64(f.values())),
    ]
}

/// Writes `header` (JSON) and its `.bin` sibling.
pub fn write_grid(f: &GridFunction, header: &Path) -> Result<()> {
    write_pair(header, grid_files(f, &stem(header)))
}

fn write_pair(header: &Path, files: [(String, Vec<u8>); 2]) -> Result<()> {
    for (name, bytes) in files {
        write_file(&sibling(header, &name), &bytes)?;
    }
    Ok(())
}

pub fn read_grid(header: &Path) -> Result<GridFunction> {
    let text = fs::read(header).map_err(|e| LabError::io(header, e))?;
    let h: GridHeader = serde_json::from_slice(&text).map_err(|e| LabError::Format {
        path: header.into(),
        message: e.to_string(),
    })?;
    if h.format != GRID_FORMAT {
        return Err(LabError::Format {
            path: header.into(),
            message: format!("unsupported format {:?}", h.format),
        });
    }
    let bin = sibling(header, &h.values);
    let bytes = fs::read(&bin).map_err(|e| LabError::io(&bin, e))?;
    let values = decode_f64(&bytes, &bin)?;
    let time = TimeGrid::new(h.t0, h.dt, h.nt)?;
    let space = SpaceGrid::new(&h.x0, &h.dx, &h.nx)?;
    Ok(GridFunction::new(time, space, h.boundary, values)?)
}

/// Rows `t, x_1..x_d, value` for the time samples in `steps`.
pub fn grid_csv(f: &GridFunction, steps: &[usize]) -> Result<Vec<u8>> {
    let d = f.d();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["t".to_string()];
    head.extend((1..=d).map(|i| format!("x{i}")));
    head.push("value".into());
    w.write_record(&head).map_err(csv_error)?;
    for &k in steps {
        for i in 0..f.nspace() {
            let x = f.space.centre(i);
            let mut row = vec![f.time.time(k).to_string()];
            row.extend(x[..d].iter().map(|v| v.to_string()));
            row.push(f.get(k, i).to_string());
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    w.into_inner().map_err(|e| LabError::config(e.to_string()))
}

/// CSV with the given header and rows of numbers.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))
            .map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| LabError::config(e.to_string()))
}

fn csv_error(e: csv::Error) -> LabError {
    LabError::config(format!("csv: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleHeader {
    pub format: String,
    pub family_tag: String,
    pub params: Option<FamilySpec>,
    pub seed: u64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub t0: f64,
    pub n_paths: usize,
    pub d: usize,
    pub nt: usize,
    /// Paths whose update became non-finite, by index.
    pub frozen: Vec<usize>,
    /// Values file, `paths[(i * (nt + 1) + k) * d + j]`.
    pub values: String,
}

pub fn ensemble_header(
    ens: &PathEnsemble,
    params: Option<FamilySpec>,
    values: String,
) -> EnsembleHeader {
    EnsembleHeader {
        format: ENSEMBLE_FORMAT.into(),
        family_tag: ens.tag.name().into(),
        params,
        seed: ens.seed,
        dt: ens.dt,
        t_final: ens.t0 + ens.nt as f64 * ens.dt,
        t0: ens.t0,
        n_paths: ens.n_paths(),
        d: ens.d,
        nt: ens.nt,
        frozen: ens
            .status
            .iter()
            .enumerate()
            .filter(|(_, s)| s.frozen_at.is_some())
            .map(|(i, _)| i)
            .collect(),
        values,
    }
}

pub fn ensemble_files(
    ens: &PathEnsemble,
    params: Option<FamilySpec>,
    stem: &str,
) -> [(String, Vec<u8>); 2] {
    let bin = format!("{stem}.bin");
    let json = serde_json::to_vec_pretty(&ensemble_header(ens, params, bin.clone()))
        .expect("header serializes");
    [
        (format!("{stem}.json"), json),
        (bin, encode_f64(&ens.paths)),
    ]
}

pub fn write_ensemble(ens: &PathEnsemble, params: Option<FamilySpec>, header: &Path) -> Result<()> {
    write_pair(header, ensemble_files(ens, params, &stem(header)))
}

/// Header and flat path array of an exported ensemble.
pub fn read_ensemble(header: &Path) -> Result<(EnsembleHeader, Vec<f64>)> {
    let text = fs::read(header).map_err(|e| LabError::io(header, e))?;
    let h: EnsembleHeader = serde_json::from_slice(&text).map_err(|e| LabError::Format {
        path: header.into(),
        message: e.to_string(),
    })?;
    let bin = sibling(header, &h.values);
    let values = decode_f64(&fs::read(&bin).map_err(|e| LabError::io(&bin, e))?, &bin)?;
    if values.len() != h.n_paths * (h.nt + 1) * h.d {
        return Err(LabError::Format {
            path: bin,
            message: "array length does not match the header".into(),
        });
    }
    Ok((h, values))
}
