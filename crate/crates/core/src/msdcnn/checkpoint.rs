//! MSDP1 parameter files.
//!
//! Layout: ASCII header `MSDP1 <spec-hash> <param-count>\n`, then the
//! parameters as little-endian f32 in flat order. The network spec is written
//! next to the parameters as `<file>.spec.json`.

use std::fs;
use std::path::{Path, PathBuf};

use super::params::ParamSet;
use super::spec::NetworkSpec;
use crate::error::{Error, Result};

const MAGIC: &str = "MSDP1";

#[derive(Debug, Clone, PartialEq)]
pub struct FlatFile {
    pub spec_hash: String,
    pub values: Vec<f32>,
}

pub fn spec_path_for(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".spec.json");
    PathBuf::from(s)
}

pub fn save_flat(path: &Path, spec_hash: &str, values: &[f32]) -> Result<()> {
    let header = format!("{MAGIC} {spec_hash} {}\n", values.len());
    let mut bytes = Vec::with_capacity(header.len() + 4 * values.len());
    bytes.extend_from_slice(header.as_bytes());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_flat(path: &Path) -> Result<FlatFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let nl = bytes
        .iter()
        .take(256)
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(path, "missing header line"))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::format(path, "header is not ASCII"))?;
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    if fields.len() != 3 || fields[0] != MAGIC {
        return Err(Error::format(path, format!("bad header {header:?}")));
    }
    let count: usize = fields[2]
        .parse()
        .map_err(|_| Error::format(path, format!("bad count {:?}", fields[2])))?;
    let payload = &bytes[nl + 1..];
    if payload.len() != count * 4 {
        return Err(Error::format(
            path,
            format!(
                "payload is {} bytes, header implies {}",
                payload.len(),
                count * 4
            ),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(FlatFile {
        spec_hash: fields[1].to_string(),
        values,
    })
}

pub fn save_checkpoint(path: &Path, spec: &NetworkSpec, params: &ParamSet<f32>) -> Result<()> {
    if !params.matches(spec) {
        return Err(Error::Shape(
            "parameters do not match the network being saved".into(),
        ));
    }
    save_flat(path, &spec.hash(), &params.to_flat())?;
    let json = serde_json::to_string_pretty(spec)?;
    let sp = spec_path_for(path);
    fs::write(&sp, json).map_err(|e| Error::io(sp, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(NetworkSpec, ParamSet<f32>)> {
    let sp = spec_path_for(path);
    let text = fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
    let spec: NetworkSpec =
        serde_json::from_str(&text).map_err(|e| Error::format(&sp, e.to_string()))?;
    spec.validate()?;
    let flat = load_flat(path)?;
    if flat.spec_hash != spec.hash() {
        return Err(Error::format(
            path,
            format!(
                "spec hash {} does not match {} in {}",
                flat.spec_hash,
                spec.hash(),
                sp.display()
            ),
        ));
    }
    if flat.values.len() != spec.param_count() {
        return Err(Error::format(
            path,
            format!(
                "{} parameters stored, spec needs {}",
                flat.values.len(),
                spec.param_count()
            ),
        ));
    }
    let params = ParamSet::from_flat(&spec, &flat.values)?;
    Ok((spec, params))
}
