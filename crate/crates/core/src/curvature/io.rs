//! JSON tensor files: `{"dim": n, "basis": "lex-2form", "matrix": [[...]]}`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{pair_count, BianchiPolicy, CurvatureTensor};
use crate::error::{Error, Result};

pub const BASIS_TAG: &str = "lex-2form";

#[derive(Debug, Serialize, Deserialize)]
pub struct TensorFile {
    pub dim: usize,
    pub basis: String,
    pub matrix: Vec<Vec<f64>>,
}

/// What the reader found while validating a tensor file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoadReport {
    pub dim: usize,
    /// Max `|M_pq − M_qp|` of the stored array.
    pub symmetry_defect: f64,
    /// Bianchi residual of the stored array before any projection.
    pub bianchi_residual: f64,
    pub projected: bool,
    pub content_hash: String,
}

impl From<&CurvatureTensor> for TensorFile {
    fn from(r: &CurvatureTensor) -> Self {
        let m = r.matrix();
        Self {
            dim: r.dim(),
            basis: BASIS_TAG.to_string(),
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        }
    }
}

/// Git-style content hash: SHA-256 of `"blob <len>\0" ++ bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

pub fn to_json(r: &CurvatureTensor) -> String {
    serde_json::to_string_pretty(&TensorFile::from(r)).expect("tensor serializes")
}

pub fn parse(bytes: &[u8], policy: BianchiPolicy) -> Result<(CurvatureTensor, LoadReport)> {
    let file: TensorFile = serde_json::from_slice(bytes)?;
    if file.basis != BASIS_TAG {
        return Err(Error::Format(format!("unsupported basis '{}'", file.basis)));
    }
    if file.dim < 2 {
        return Err(Error::Format(format!("dimension {} too small", file.dim)));
    }
    let n2 = pair_count(file.dim);
    if file.matrix.len() != n2 || file.matrix.iter().any(|row| row.len() != n2) {
        return Err(Error::Format(format!(
            "matrix must be {n2}×{n2} for dim {}",
            file.dim
        )));
    }
    if file.matrix.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Format("non-finite entry".into()));
    }
    let m = DMatrix::from_fn(n2, n2, |i, j| file.matrix[i][j]);
    let symmetry_defect = (&m - m.transpose()).amax();
    let built = CurvatureTensor::from_matrix(file.dim, m, policy)?;
    let projected = built.bianchi_residual > super::BIANCHI_RTOL * built.tensor.norm();
    let report = LoadReport {
        dim: file.dim,
        symmetry_defect,
        bianchi_residual: built.bianchi_residual,
        projected,
        content_hash: content_hash(bytes),
    };
    Ok((built.tensor, report))
}

pub fn read(path: &Path, policy: BianchiPolicy) -> Result<(CurvatureTensor, LoadReport)> {
    let bytes = std::fs::read(path)?;
    parse(&bytes, policy)
}

pub fn write(path: &Path, r: &CurvatureTensor) -> Result<()> {
    std::fs::write(path, to_json(r))?;
    Ok(())
}
