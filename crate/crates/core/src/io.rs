//! Output files: binary snapshots, CSV tables and the JSON run manifest.
//! Every file is written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{make_grid, RealField, VectorField};
use crate::solver::State;

pub const GIT_DESCRIBE: &str = env!("CAPILLARITY_GIT_DESCRIBE");
pub const OUT_ENV: &str = "CAPILLARITY_OUT";

const HEADER_BYTES: usize = 32;

/// `$CAPILLARITY_OUT/dir`, or `dir` relative to the working directory.
pub fn output_dir(dir: &str) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(dir),
        _ => PathBuf::from(dir),
    }
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    create_dir(parent)?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Error::io(parent, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Little-endian layout: `dim: u64, n: u64, L: f64, t: f64`, then `q` and
/// each velocity component as `n^dim` values of `f64` in row-major order.
pub fn encode_snapshot(state: &State) -> Vec<u8> {
    let grid = state.grid();
    let mut out = Vec::with_capacity(HEADER_BYTES + 8 * grid.len() * (1 + grid.dim()));
    out.extend_from_slice(&(grid.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(grid.n() as u64).to_le_bytes());
    out.extend_from_slice(&grid.length().to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    let fields = std::iter::once(&state.q).chain(state.u.components());
    for f in fields {
        for v in f.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<State> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Snapshot(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    let dim = u64::from_le_bytes(word(0));
    let n = u64::from_le_bytes(word(1));
    let length = f64::from_le_bytes(word(2));
    let t = f64::from_le_bytes(word(3));
    if !(dim == 1 || dim == 2) || n > 1 << 20 {
        return Err(Error::Snapshot(format!("bad header: dim = {dim}, n = {n}")));
    }
    let grid = make_grid(dim as usize, n as usize, length)?;
    let npts = grid.len();
    let expected = HEADER_BYTES + 8 * npts * (1 + grid.dim());
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "expected {expected} bytes for dim = {dim}, n = {n}, got {}",
            bytes.len()
        )));
    }
    let field = |f: usize| -> Result<RealField> {
        let start = HEADER_BYTES + 8 * npts * f;
        let values = bytes[start..start + 8 * npts]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        RealField::new(&grid, values)
    };
    let q = field(0)?;
    let u = VectorField::new((1..=grid.dim()).map(field).collect::<Result<_>>()?)?;
    Ok(State::new(t, q, u))
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    atomic_write(path, &encode_snapshot(state))
}

pub fn read_snapshot(path: &Path) -> Result<State> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes)
}

/// `x,q,rho,u` on a 1D grid.
pub fn state_csv_1d(state: &State) -> Result<String> {
    let grid = state.grid();
    if grid.dim() != 1 {
        return Err(Error::param("profile CSV is only written for 1D grids"));
    }
    let mut out = String::from("# schema=1\nx,q,rho,u\n");
    let u = state.u.component(0).values();
    for (i, (&q, &u)) in state.q.values().iter().zip(u).enumerate() {
        out.push_str(&format!("{:.17e},{q:.17e},{:.17e},{u:.17e}\n", grid.point(i)[0], 1.0 + q));
    }
    Ok(out)
}

/// Per-sample summary `t,mass,rho_min,rho_max,u_max`.
pub fn history_csv(states: &[State]) -> String {
    let mut out = String::from("# schema=1\nt,mass,rho_min,rho_max,u_max\n");
    for s in states {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            s.t,
            s.mass(),
            1.0 + s.q.min(),
            1.0 + s.q.max(),
            s.u.max_magnitude()
        ));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub command: &'a str,
    pub config_hash: String,
    pub config: &'a C,
    pub outputs: Vec<String>,
    pub results: R,
    pub failures: Vec<String>,
}

impl<'a, C: Serialize, R: Serialize> Manifest<'a, C, R> {
    pub fn new(command: &'a str, config_hash: String, config: &'a C, results: R) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            git_describe: GIT_DESCRIBE,
            command,
            config_hash,
            config,
            outputs: Vec::new(),
            results,
            failures: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        atomic_write(path, json.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample_state(dim: usize) -> State {
        let g = make_grid(dim, 16, 2.0 * PI).unwrap();
        let q = RealField::from_fn(&g, |x| 0.1 * x[0].sin() + 0.01 * x[1]);
        let u = VectorField::new(
            (0..dim)
                .map(|a| RealField::from_fn(&g, |x| (a as f64 + 1.0) * x[0].cos()))
                .collect(),
        )
        .unwrap();
        State::new(0.25, q, u)
    }

    #[test]
    fn snapshot_round_trip_is_bitwise() {
        for dim in [1, 2] {
            let s = sample_state(dim);
            let bytes = encode_snapshot(&s);
            assert_eq!(bytes.len(), 32 + 8 * s.grid().len() * (1 + dim));
            assert_eq!(&bytes[0..8], &(dim as u64).to_le_bytes());
            let back = decode_snapshot(&bytes).unwrap();
            assert_eq!(back.t, s.t);
            assert_eq!(back.q.values(), s.q.values());
            for a in 0..dim {
                assert_eq!(back.u.component(a).values(), s.u.component(a).values());
            }
        }
    }

    #[test]
    fn truncated_snapshot_is_rejected() {
        let bytes = encode_snapshot(&sample_state(1));
        assert!(matches!(decode_snapshot(&bytes[..bytes.len() - 8]), Err(Error::Snapshot(_))));
        assert!(matches!(decode_snapshot(&bytes[..10]), Err(Error::Snapshot(_))));
        let mut bad = bytes.clone();
        bad[0] = 3;
        assert!(decode_snapshot(&bad).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("a.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn csv_headers() {
        let s = sample_state(1);
        let csv = state_csv_1d(&s).unwrap();
        assert!(csv.starts_with("# schema=1\nx,q,rho,u\n"));
        assert_eq!(csv.lines().count(), 2 + 16);
        assert!(state_csv_1d(&sample_state(2)).is_err());
        let h = history_csv(&[s]);
        assert_eq!(h.lines().count(), 3);
    }
}
