//! File emission, table formats and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use sbnrg::bath::{StarBath, WilsonChain};
use sbnrg::nrg::NrgFlow;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const FLOW_HEADER: [&str; 3] = ["iteration", "level_index", "scaled_energy"];
pub const SWEEP_HEADER: [&str; 6] = ["alpha", "delta", "epsilon", "n_star", "delta_p", "phase"];
pub const CHAIN_HEADER: [&str; 5] = ["n", "xi", "gamma", "eps", "t"];
pub const POINTS_HEADER: [&str; 2] = ["alpha", "n_star"];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn table<R: AsRef<[String]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // writes to a Vec cannot fail
    w.write_record(header).expect("csv header");
    for r in rows {
        w.write_record(r.as_ref()).expect("csv row");
    }
    w.into_inner().expect("csv flush")
}

pub fn flow_csv(flow: &NrgFlow) -> Vec<u8> {
    let rows = flow.records.iter().flat_map(|r| {
        r.energies
            .iter()
            .enumerate()
            .map(move |(k, &e)| vec![r.iteration.to_string(), k.to_string(), num(e)])
    });
    table(&FLOW_HEADER, rows)
}

/// Star modes next to the chain coefficients; the chain is one hopping short.
pub fn chain_csv(star: &StarBath, chain: &WilsonChain) -> Vec<u8> {
    let n = star.len().max(chain.len());
    let rows = (0..n).map(|i| {
        vec![
            i.to_string(),
            opt_num(star.modes.get(i).map(|m| m.xi)),
            opt_num(star.modes.get(i).map(|m| m.gamma)),
            opt_num(chain.eps.get(i).copied()),
            opt_num(chain.t.get(i).copied()),
        ]
    });
    table(&CHAIN_HEADER, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub n_star: Option<f64>,
    pub delta_p: f64,
    pub phase: String,
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let rows = rows.iter().map(|r| {
        vec![
            num(r.alpha),
            num(r.delta),
            num(r.epsilon),
            opt_num(r.n_star),
            num(r.delta_p),
            r.phase.clone(),
        ]
    });
    table(&SWEEP_HEADER, rows)
}

pub fn points_csv(points: &[(f64, f64)]) -> Vec<u8> {
    table(&POINTS_HEADER, points.iter().map(|&(a, n)| vec![num(a), num(n)]))
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Writes files under an output directory and remembers their digests.
#[derive(Debug)]
pub struct Emitter {
    root: PathBuf,
    files: Vec<FileRecord>,
}

impl Emitter {
    /// Creates `root` and removes the files listed by a manifest left there
    /// by an earlier run.
    pub fn open(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let old = root.join(MANIFEST);
        if let Ok(text) = fs::read_to_string(&old) {
            if let Ok(m) = serde_json::from_str::<Manifest>(&text) {
                for f in m.files {
                    let p = root.join(&f.path);
                    if p.starts_with(root) && p.is_file() {
                        fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
                    }
                }
            }
            fs::remove_file(&old).map_err(|e| CliError::io(&old, e))?;
        }
        Ok(Emitter {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `rel` uses '/' separators.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileRecord {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    pub fn into_files(self) -> Vec<FileRecord> {
        self.files
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: String,
    /// Where the run stopped, e.g. `point 3 (alpha = 0.65)`.
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub started: String,
    pub finished: String,
    pub workers: usize,
    pub status: String,
    pub failure: Option<Failure>,
    pub config: serde_json::Value,
    pub files: Vec<FileRecord>,
}
