//! Binary columnar ensemble files: a JSON header (configuration, recorded
//! times, layout) followed by the states as little-endian f64, path-major.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use peano_ldp::sde::{PathEnsemble, SdeConfig};

const MAGIC: &[u8; 8] = b"PLDPENS1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnsembleHeader {
    pub epsilon: f64,
    pub t_max: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    pub record_stride: usize,
    pub dim: usize,
    pub times: Vec<f64>,
    pub excluded: Vec<usize>,
}

pub fn write_ensemble(path: &Path, ens: &PathEnsemble<f64>) -> anyhow::Result<()> {
    let header = EnsembleHeader {
        epsilon: ens.config.epsilon,
        t_max: ens.config.t_max,
        dt: ens.config.dt,
        n_paths: ens.config.n_paths,
        master_seed: ens.config.master_seed,
        record_stride: ens.config.record_stride,
        dim: ens.dim,
        times: ens.times().to_vec(),
        excluded: ens.excluded().to_vec(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(f);
    w.write_all(MAGIC)?;
    w.write_all(&(header_json.len() as u64).to_le_bytes())?;
    w.write_all(&header_json)?;
    for v in ens.raw_states() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ensemble(path: &Path) -> anyhow::Result<(EnsembleHeader, Vec<f64>)> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = std::io::BufReader::new(f);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        bail!("{}: not an ensemble file", path.display());
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let hlen = u64::from_le_bytes(len) as usize;
    let mut hbuf = vec![0u8; hlen];
    r.read_exact(&mut hbuf)?;
    let header: EnsembleHeader = serde_json::from_slice(&hbuf)?;
    let n_values = header.n_paths * header.times.len() * header.dim;
    let mut states = Vec::with_capacity(n_values);
    let mut buf = [0u8; 8];
    for _ in 0..n_values {
        r.read_exact(&mut buf)?;
        states.push(f64::from_le_bytes(buf));
    }
    Ok((header, states))
}

/// Reconstruct the simulation config stored in a header.
pub fn header_config(h: &EnsembleHeader) -> SdeConfig<f64> {
    SdeConfig {
        epsilon: h.epsilon,
        t_max: h.t_max,
        dt: h.dt,
        n_paths: h.n_paths,
        master_seed: h.master_seed,
        record_stride: h.record_stride,
    }
}
