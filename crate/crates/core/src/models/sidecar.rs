//! `key=value` metadata written next to a SYNCMAT file.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::blockmat::{read_matrix, write_matrix, BlockSymMatrix};
use crate::error::{Error, Result};

use super::{ModelInstance, Truth};

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

pub fn sidecar_string(inst: &ModelInstance) -> String {
    let mut out = format!("model={}\n", inst.meta.model);
    let mut has_n = false;
    let mut has_d = false;
    for (k, v) in &inst.meta.params {
        has_n |= k == "n";
        has_d |= k == "d";
        out.push_str(&format!("{k}={v}\n"));
    }
    if !has_n {
        out.push_str(&format!("n={}\n", inst.a.n()));
    }
    if !has_d {
        out.push_str(&format!("d={}\n", inst.d));
    }
    out.push_str(&format!("seed={}\n", inst.meta.seed));
    match &inst.truth {
        Some(Truth::Signs(x)) => out.push_str(&format!("truth={}\n", join(x.iter().copied()))),
        Some(Truth::Blocks(b)) => {
            let all = b.iter().flat_map(row_major).collect::<Vec<_>>();
            out.push_str(&format!("truth={}\n", join(all.into_iter())));
        }
        None => {}
    }
    if let Some(a_bar) = &inst.meta.a_bar {
        out.push_str(&format!("a_bar={}\n", join(row_major(a_bar))));
    }
    out
}

/// Parsed sidecar entries in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub entries: Vec<(String, String)>,
}

impl Sidecar {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn usize_of(&self, key: &str) -> Result<usize> {
        let v = self
            .get(key)
            .ok_or_else(|| Error::Validation(format!("sidecar is missing {key}")))?;
        v.parse()
            .map_err(|_| Error::Validation(format!("sidecar {key} is not an integer: {v:?}")))
    }

    /// Decodes `truth` as signs when `d = 1` and as row-major `d×d` blocks
    /// otherwise.
    pub fn truth(&self) -> Result<Option<Truth>> {
        let Some(raw) = self.get("truth") else {
            return Ok(None);
        };
        let n = self.usize_of("n")?;
        let d = self.usize_of("d")?;
        let values = raw
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Validation(format!("bad truth value {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n * d * d {
            return Err(Error::Validation(format!(
                "truth has {} values, expected {}",
                values.len(),
                n * d * d
            )));
        }
        if d == 1 {
            return Ok(Some(Truth::Signs(values)));
        }
        let blocks = values
            .chunks(d * d)
            .map(|c| DMatrix::from_row_slice(d, d, c))
            .collect();
        Ok(Some(Truth::Blocks(blocks)))
    }
}

pub fn parse_sidecar(text: &str) -> Result<Sidecar> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: format!("expected key=value, got {line:?}"),
        })?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(Sidecar { entries })
}

/// `<path>.meta`.
pub fn sidecar_path(matrix_path: &Path) -> PathBuf {
    let mut s = matrix_path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes the matrix to `path` and its metadata to [`sidecar_path`].
pub fn write_instance(inst: &ModelInstance, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    write_matrix(&inst.a, path)?;
    let meta = sidecar_path(path);
    fs::write(&meta, sidecar_string(inst)).map_err(|e| Error::io(&meta, e))?;
    Ok(meta)
}

/// Reads a matrix and, when present, its sidecar.
pub fn read_instance(path: impl AsRef<Path>) -> Result<(BlockSymMatrix, Option<Sidecar>)> {
    let path = path.as_ref();
    let a = read_matrix(path)?;
    let meta = sidecar_path(path);
    let side = match fs::read_to_string(&meta) {
        Ok(text) => Some(parse_sidecar(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(Error::io(&meta, e)),
    };
    Ok((a, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{gen_od_sync, gen_procrustes, gen_z2};

    #[test]
    fn echoes_inputs_and_truth() {
        let inst = gen_z2(5, 0.1234567890123, 77).unwrap();
        let side = parse_sidecar(&sidecar_string(&inst)).unwrap();
        assert_eq!(side.get("model"), Some("z2"));
        assert_eq!(side.get("sigma"), Some("0.1234567890123"));
        assert_eq!(side.get("seed"), Some("77"));
        assert_eq!(side.get("d"), Some("1"));
        assert_eq!(side.truth().unwrap(), inst.truth);

        let inst = gen_od_sync(4, 3, 0.5, 1).unwrap();
        let side = parse_sidecar(&sidecar_string(&inst)).unwrap();
        assert_eq!(side.truth().unwrap(), inst.truth);

        let inst = gen_procrustes(3, 2, 4, 0.5, 1, None).unwrap();
        let side = parse_sidecar(&sidecar_string(&inst)).unwrap();
        assert_eq!(side.get("a_bar").unwrap().split(',').count(), 8);
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z2.syncmat");
        let inst = gen_z2(6, 0.3, 2).unwrap();
        let meta = write_instance(&inst, &path).unwrap();
        assert!(meta.ends_with("z2.syncmat.meta"));
        let (a, side) = read_instance(&path).unwrap();
        assert_eq!(a, inst.a);
        assert_eq!(side.unwrap().truth().unwrap(), inst.truth);
        assert!(parse_sidecar("no equals sign").is_err());
    }
}
