//! On-disk cache for two-body matrix elements and assembled operators.
//!
//! Every entry is a pair `<key>.bin` / `<key>.json`. The binary file holds the
//! nonzero entries as little-endian `(u64 row, u64 col, f64 re, f64 im)`
//! records; the JSON header records the shape and the physical parameters.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::fock::{ModeBasis, SparseOperator, TripletBuilder, TwoBodyKernel};
use crate::interaction::{PotentialProfile, ScaledPotential};
use crate::manybody::ModeModel;
use crate::spectral::TorusGrid;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "BOSE_LAB_CACHE";

const FORMAT: &str = "bosonlab-sparse-v1";
const RECORD: usize = 32;

/// Header of a cached sparse matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseHeader {
    pub format: String,
    pub dim: usize,
    pub nnz: usize,
    pub hermitian: bool,
    /// Mode count `K` when the matrix is a two-body tensor indexed by `(a·K + c, b·K + d)`.
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PotentialProfile>,
}

impl SparseHeader {
    pub fn for_operator(op: &SparseOperator) -> Self {
        Self {
            format: FORMAT.into(),
            dim: op.dim(),
            nnz: op.nnz(),
            hermitian: op.is_hermitian(),
            modes: None,
            particles: None,
            beta: None,
            grid_hash: None,
            profile: None,
        }
    }
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

fn format_error(path: &Path, reason: impl Into<String>) -> LabError {
    LabError::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Writes `op` with the given header; `dim`, `nnz` and `hermitian` are overwritten
/// from the operator.
pub fn write_sparse(stem: &Path, op: &SparseOperator, header: &SparseHeader) -> Result<()> {
    let (bin, json) = paths(stem);
    let mut out = BufWriter::new(File::create(&bin)?);
    let mut nnz = 0;
    for (r, c, v) in op.triplets() {
        out.write_all(&(r as u64).to_le_bytes())?;
        out.write_all(&(c as u64).to_le_bytes())?;
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
        nnz += 1;
    }
    out.flush()?;
    let header = SparseHeader {
        format: FORMAT.into(),
        dim: op.dim(),
        nnz,
        hermitian: op.is_hermitian(),
        ..header.clone()
    };
    std::fs::write(json, serde_json::to_string_pretty(&header)?)?;
    Ok(())
}

/// Reads a matrix written by [`write_sparse`].
pub fn read_sparse(stem: &Path) -> Result<(SparseOperator, SparseHeader)> {
    let (bin, json) = paths(stem);
    let header: SparseHeader = serde_json::from_str(&std::fs::read_to_string(&json)?)?;
    if header.format != FORMAT {
        return Err(format_error(&json, format!("unknown format `{}`", header.format)));
    }
    let mut bytes = Vec::with_capacity(RECORD * header.nnz);
    BufReader::new(File::open(&bin)?).read_to_end(&mut bytes)?;
    if bytes.len() != RECORD * header.nnz {
        return Err(format_error(
            &bin,
            format!("expected {} bytes, found {}", RECORD * header.nnz, bytes.len()),
        ));
    }
    let word = |chunk: &[u8], i: usize| -> [u8; 8] { chunk[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    let mut b = TripletBuilder::new(header.dim);
    for chunk in bytes.chunks_exact(RECORD) {
        let r = u64::from_le_bytes(word(chunk, 0)) as usize;
        let c = u64::from_le_bytes(word(chunk, 1)) as usize;
        if r >= header.dim || c >= header.dim {
            return Err(format_error(&bin, format!("entry ({r}, {c}) outside dimension {}", header.dim)));
        }
        let v = num_complex::Complex64::new(f64::from_le_bytes(word(chunk, 2)), f64::from_le_bytes(word(chunk, 3)));
        b.push(r, c, v);
    }
    Ok((b.build(header.hermitian), header))
}

fn tensor_to_sparse(kernel: &TwoBodyKernel) -> SparseOperator {
    let k = kernel.modes();
    let mut b = TripletBuilder::new(k * k);
    for a in 0..k {
        for c in 0..k {
            for bb in 0..k {
                for d in 0..k {
                    b.push(a * k + c, bb * k + d, kernel.get(a, c, bb, d));
                }
            }
        }
    }
    b.build(false)
}

fn sparse_to_tensor(op: &SparseOperator, k: usize) -> TwoBodyKernel {
    let mut t = TwoBodyKernel::zeros(k);
    for (r, c, v) in op.triplets() {
        t.set(r / k, r % k, c / k, c % k, v);
    }
    t
}

fn hex_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Short content hash of a grid.
pub fn grid_hash(grid: &TorusGrid) -> String {
    hex_digest(&format!("L={:?};n={}", grid.length(), grid.points()))[..16].to_string()
}

/// A directory of cached operators.
#[derive(Clone, Debug)]
pub struct OperatorCache {
    dir: PathBuf,
}

#[derive(Serialize)]
struct InteractionKey<'a> {
    kind: &'static str,
    profile: &'a PotentialProfile,
    particles: usize,
    beta: f64,
    grid: String,
    modes: usize,
}

impl OperatorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    /// The cache named by [`CACHE_ENV`], if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => Ok(Some(Self::new(dir)?)),
            _ => Ok(None),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Content hash of the parameters that determine the plane-wave tensor.
    pub fn interaction_key(potential: &ScaledPotential, modes: usize) -> Result<String> {
        let key = InteractionKey {
            kind: "plane-wave-interaction",
            profile: potential.profile(),
            particles: potential.particles(),
            beta: potential.beta(),
            grid: grid_hash(potential.grid()),
            modes,
        };
        Ok(hex_digest(&serde_json::to_string(&key)?))
    }

    /// Plane-wave model, reading the interaction tensor from the cache or
    /// computing and storing it.
    pub fn plane_wave_model(&self, potential: &ScaledPotential, modes: usize) -> Result<ModeModel> {
        let stem = self.dir.join(Self::interaction_key(potential, modes)?);
        if stem.with_extension("json").exists() {
            let (op, header) = read_sparse(&stem)?;
            if header.modes == Some(modes) && op.dim() == modes * modes {
                log::debug!("interaction tensor cache hit {}", stem.display());
                let kinetic = ModeBasis::plane_waves(*potential.grid(), modes)?.kinetic();
                return ModeModel::new(kinetic, sparse_to_tensor(&op, modes));
            }
            log::warn!("ignoring mismatched cache entry {}", stem.display());
        }
        let model = ModeModel::plane_waves(potential, modes)?;
        let header = SparseHeader {
            modes: Some(modes),
            particles: Some(potential.particles()),
            beta: Some(potential.beta()),
            grid_hash: Some(grid_hash(potential.grid())),
            profile: Some(*potential.profile()),
            ..SparseHeader::for_operator(&SparseOperator::zeros(0))
        };
        write_sparse(&stem, &tensor_to_sparse(model.interaction()), &header)?;
        Ok(model)
    }
}
