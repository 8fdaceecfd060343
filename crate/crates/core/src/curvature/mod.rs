//! Algebraic curvature operators.
//!
//! A [`CurvatureTensor`] is stored as a symmetric `N×N` matrix on the
//! lexicographically ordered 2-form basis `{e_i∧e_j : i<j}`, `N = n(n−1)/2`,
//! with `R(e_i∧e_j, e_k∧e_l) = R_{ijkl}`. Pair symmetry and antisymmetry are
//! structural; the first Bianchi identity is enforced by projection.
//!
//! Indices in the Rust API are 0-based. Component lists read from files use
//! 1-based indices.

mod form;
pub mod io;
pub mod models;
#[cfg(test)]
mod props;
mod transform;

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use form::SymmetricForm;
pub use models::{regression_corpus, CorpusEntry, ModelKind, RandomClass};
pub use transform::{a_of_b, PinchingTransform, TransformParams};

use crate::error::{Error, Result};

/// Relative tolerance used when checking redundant input components.
const CONSISTENCY_RTOL: f64 = 1e-10;
/// Relative Bianchi tolerance for constructed tensors.
pub const BIANCHI_RTOL: f64 = 1e-12;

/// What a constructor does with a Bianchi-violating input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BianchiPolicy {
    /// Remove the alternating 4-form part and record the residual.
    #[default]
    Project,
    /// Reject inputs whose residual exceeds `1e-12·‖R‖`.
    Strict,
}

/// A constructed tensor plus the Bianchi residual of the raw input.
#[derive(Clone, Debug)]
pub struct Built {
    pub tensor: CurvatureTensor,
    pub bianchi_residual: f64,
}

/// Number of basis 2-forms in dimension `n`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Index of `e_i∧e_j` (`i<j`) in the lexicographic basis.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Basis index and sign of `e_i∧e_j` for arbitrary `i≠j`.
#[inline]
fn signed_pair(n: usize, i: usize, j: usize) -> (usize, f64) {
    if i < j {
        (pair_index(n, i, j), 1.0)
    } else {
        (pair_index(n, j, i), -1.0)
    }
}

/// Coordinates of `u∧v` in the 2-form basis: `(u_i v_j − u_j v_i)_{i<j}`.
pub fn wedge(u: &[f64], v: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut w = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            w.push(u[i] * v[j] - u[j] * v[i]);
        }
    }
    w
}

/// An algebraic curvature operator in dimension `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTensor {
    dim: usize,
    matrix: DMatrix<f64>,
}

impl CurvatureTensor {
    pub fn zeros(dim: usize) -> Self {
        let n2 = pair_count(dim);
        Self {
            dim,
            matrix: DMatrix::zeros(n2, n2),
        }
    }

    /// `I = ½ id∧id`, i.e. `I_{ijkl} = δ_ik δ_jl − δ_il δ_jk`.
    pub fn identity(dim: usize) -> Self {
        let n2 = pair_count(dim);
        Self {
            dim,
            matrix: DMatrix::identity(n2, n2),
        }
    }

    /// Wraps a symmetric pair-basis matrix with no Bianchi handling.
    pub(crate) fn from_matrix_unchecked(dim: usize, matrix: DMatrix<f64>) -> Self {
        debug_assert_eq!(matrix.nrows(), pair_count(dim));
        Self { dim, matrix }
    }

    /// Builds a tensor from a symmetric pair-basis matrix.
    pub fn from_matrix(dim: usize, matrix: DMatrix<f64>, policy: BianchiPolicy) -> Result<Built> {
        let n2 = pair_count(dim);
        if matrix.nrows() != n2 || matrix.ncols() != n2 {
            return Err(Error::DimMismatch(matrix.nrows(), n2));
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > CONSISTENCY_RTOL * (1.0 + matrix.amax()) {
            return Err(Error::NotSymmetric(asym));
        }
        let raw = Self {
            dim,
            matrix: (&matrix + matrix.transpose()) * 0.5,
        };
        raw.finish(policy)
    }

    /// Builds a tensor from 1-based `(i,j,k,l,value)` entries, closing them
    /// under the curvature symmetries. Unlisted components are zero.
    pub fn from_components(
        dim: usize,
        entries: &[(usize, usize, usize, usize, f64)],
        policy: BianchiPolicy,
    ) -> Result<Built> {
        let n2 = pair_count(dim);
        let mut matrix: DMatrix<f64> = DMatrix::zeros(n2, n2);
        let mut set = vec![false; n2 * n2];
        for &(i, j, k, l, value) in entries {
            for &idx in &[i, j, k, l] {
                if idx == 0 || idx > dim {
                    return Err(Error::IndexOutOfRange(format!("{i},{j},{k},{l}"), dim));
                }
            }
            let (a, b, c, d) = (i - 1, j - 1, k - 1, l - 1);
            if a == b || c == d {
                if value != 0.0 {
                    return Err(Error::InconsistentSymmetry {
                        i,
                        j,
                        k,
                        l,
                        existing: 0.0,
                        given: value,
                    });
                }
                continue;
            }
            let (p, sp) = signed_pair(dim, a, b);
            let (q, sq) = signed_pair(dim, c, d);
            let canonical = value * sp * sq;
            let slot = p * n2 + q;
            if set[slot] {
                let existing = matrix[(p, q)];
                let scale = existing.abs().max(canonical.abs()).max(1.0);
                if (existing - canonical).abs() > CONSISTENCY_RTOL * scale {
                    return Err(Error::InconsistentSymmetry {
                        i,
                        j,
                        k,
                        l,
                        existing: existing * sp * sq,
                        given: value,
                    });
                }
            }
            matrix[(p, q)] = canonical;
            matrix[(q, p)] = canonical;
            set[slot] = true;
            set[q * n2 + p] = true;
        }
        Self { dim, matrix }.finish(policy)
    }

    fn finish(self, policy: BianchiPolicy) -> Result<Built> {
        let residual = self.bianchi_residual();
        let tolerance = BIANCHI_RTOL * self.norm();
        if residual <= tolerance {
            return Ok(Built {
                tensor: self,
                bianchi_residual: residual,
            });
        }
        match policy {
            BianchiPolicy::Strict => Err(Error::BianchiViolation {
                residual,
                tolerance,
            }),
            BianchiPolicy::Project => {
                let tensor = self.bianchi_projected();
                if residual > 1e-9 * (1.0 + tensor.norm()) {
                    log::debug!("projected away Bianchi residual {residual:.3e}");
                }
                Ok(Built {
                    tensor,
                    bianchi_residual: residual,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The symmetric pair-basis matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `R_{ijkl}` with 0-based indices.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let (p, sp) = signed_pair(self.dim, i, j);
        let (q, sq) = signed_pair(self.dim, k, l);
        sp * sq * self.matrix[(p, q)]
    }

    /// All `n⁴` components, row-major in `(i,j,k,l)`.
    pub fn to_full(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out[((i * n + j) * n + k) * n + l] = self.get(i, j, k, l);
                    }
                }
            }
        }
        out
    }

    /// Max over `i<j<k<l` of `|R_{ijkl} + R_{iklj} + R_{iljk}|`.
    ///
    /// For pair-symmetric input the cyclic sum is totally antisymmetric, so
    /// strictly increasing quadruples cover every case.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.dim;
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in (k + 1)..n {
                        let s = m[(pair_index(n, i, j), pair_index(n, k, l))]
                            - m[(pair_index(n, i, k), pair_index(n, j, l))]
                            + m[(pair_index(n, i, l), pair_index(n, j, k))];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Orthogonal projection onto the Bianchi subspace: subtracts the
    /// alternating 4-form `b(R) = ⅓(R_{ijkl}+R_{iklj}+R_{iljk})`.
    pub fn bianchi_projected(&self) -> Self {
        let n = self.dim;
        let mut m = self.matrix.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in (k + 1)..n {
                        let ij_kl = (pair_index(n, i, j), pair_index(n, k, l));
                        let ik_jl = (pair_index(n, i, k), pair_index(n, j, l));
                        let il_jk = (pair_index(n, i, l), pair_index(n, j, k));
                        let s = (m[ij_kl] - m[ik_jl] + m[il_jk]) / 3.0;
                        for (idx, delta) in [(ij_kl, -s), (ik_jl, s), (il_jk, -s)] {
                            m[idx] += delta;
                            m[(idx.1, idx.0)] = m[idx];
                        }
                    }
                }
            }
        }
        Self { dim: n, matrix: m }
    }

    /// `Ric_{jl} = Σ_i R_{ijil}`.
    pub fn ricci(&self) -> SymmetricForm {
        let n = self.dim;
        let mut ric = DMatrix::zeros(n, n);
        for j in 0..n {
            for l in j..n {
                let s: f64 = (0..n).map(|i| self.get(i, j, i, l)).sum();
                ric[(j, l)] = s;
                ric[(l, j)] = s;
            }
        }
        SymmetricForm::symmetrized(ric)
    }

    pub fn scalar(&self) -> f64 {
        // scal = Σ_{i,j} R_{ijij} = 2 Σ_{i<j} R_{ijij}
        2.0 * self.matrix.trace()
    }

    /// Frobenius norm over all `n⁴` components. Each basis entry stands for
    /// four components, so this is `2‖M‖_F`.
    pub fn norm(&self) -> f64 {
        2.0 * self.matrix.norm()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.amax()
    }

    /// `(R²)_{ijkl} = Σ_{p,q} R_{ijpq} R_{klpq}`, which is `2M²` on pairs.
    pub fn square(&self) -> Self {
        Self {
            dim: self.dim,
            matrix: (&self.matrix * &self.matrix) * 2.0,
        }
    }

    /// `(R#)_{ijkl} = 2 Σ_{p,q} (R_{ipkq} R_{jplq} − R_{iplq} R_{jpkq})`.
    pub fn sharp(&self) -> Self {
        let n = self.dim;
        let n2 = pair_count(n);
        let full = self.to_full();
        let at = |i: usize, j: usize, k: usize, l: usize| full[((i * n + j) * n + k) * n + l];
        let pairs = pairs(n);
        let mut m = DMatrix::zeros(n2, n2);
        for (p_idx, &(i, j)) in pairs.iter().enumerate() {
            for (q_idx, &(k, l)) in pairs.iter().enumerate().skip(p_idx) {
                let mut s = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        s += at(i, p, k, q) * at(j, p, l, q) - at(i, p, l, q) * at(j, p, k, q);
                    }
                }
                m[(p_idx, q_idx)] = 2.0 * s;
                m[(q_idx, p_idx)] = 2.0 * s;
            }
        }
        Self { dim: n, matrix: m }
    }

    /// The reaction term `Q(R) = R² + R#`, re-projected onto the Bianchi
    /// subspace. Returns the pre-projection residual alongside.
    pub fn q_with_residual(&self) -> (Self, f64) {
        let raw = self.square() + self.sharp();
        let residual = raw.bianchi_residual();
        if residual > 1e-12 * (1.0 + self.norm().powi(2)) {
            log::warn!("Q(R) Bianchi residual {residual:.3e}");
        }
        (raw.bianchi_projected(), residual)
    }

    pub fn q(&self) -> Self {
        self.q_with_residual().0
    }

    /// Basis change `(O·R)_{ijkl} = O_ia O_jb O_kc O_ld R_abcd`.
    pub fn rotated(&self, o: &DMatrix<f64>) -> Self {
        let n = self.dim;
        let l2 = lambda2(o);
        let m = &l2 * &self.matrix * l2.transpose();
        Self {
            dim: n,
            matrix: (&m + m.transpose()) * 0.5,
        }
    }

    /// `R(u,v,w,x) = Σ u^i v^j w^k x^l R_{ijkl}`.
    pub fn eval4(&self, u: &[f64], v: &[f64], w: &[f64], x: &[f64]) -> f64 {
        let a = DVector::from_vec(wedge(u, v));
        let b = DVector::from_vec(wedge(w, x));
        a.dot(&(&self.matrix * b))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            matrix: &self.matrix * c,
        }
    }

    fn check_same_dim(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "curvature tensors of different dimension");
    }
}

/// The basis pairs `(i,j)`, `i<j`, in storage order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j));
        }
    }
    out
}

/// Induced action of `O` on 2-forms: `(Λ²O)_{(ij),(ab)} = O_ia O_jb − O_ib O_ja`.
fn lambda2(o: &DMatrix<f64>) -> DMatrix<f64> {
    let n = o.nrows();
    let ps = pairs(n);
    let n2 = ps.len();
    DMatrix::from_fn(n2, n2, |r, c| {
        let (i, j) = ps[r];
        let (a, b) = ps[c];
        o[(i, a)] * o[(j, b)] - o[(i, b)] * o[(j, a)]
    })
}

/// The Kulkarni–Nomizu product
/// `(A∧B)_{ijkl} = A_ik B_jl + A_jl B_ik − A_il B_jk − A_jk B_il`.
pub fn kulkarni_nomizu(a: &SymmetricForm, b: &SymmetricForm) -> Result<CurvatureTensor> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    let n = a.dim();
    let ps = pairs(n);
    let n2 = ps.len();
    let m = DMatrix::from_fn(n2, n2, |r, c| {
        let (i, j) = ps[r];
        let (k, l) = ps[c];
        a.get(i, k) * b.get(j, l) + a.get(j, l) * b.get(i, k)
            - a.get(i, l) * b.get(j, k)
            - a.get(j, k) * b.get(i, l)
    });
    Ok(CurvatureTensor::from_matrix_unchecked(n, (&m + m.transpose()) * 0.5))
}

/// `½ id∧id`.
pub fn identity_operator(dim: usize) -> CurvatureTensor {
    CurvatureTensor::identity(dim)
}

/// `(R⋆Ric)_{ij} = Σ_{k,l} R_{ikjl} Ric_{kl}`.
pub fn r_star(r: &CurvatureTensor, s: &SymmetricForm) -> SymmetricForm {
    let n = r.dim();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let mut acc = 0.0;
        for k in 0..n {
            for l in 0..n {
                acc += r.get(i, k, j, l) * s.get(k, l);
            }
        }
        acc
    });
    SymmetricForm::symmetrized(m)
}

impl Add for CurvatureTensor {
    type Output = CurvatureTensor;
    fn add(self, rhs: Self) -> Self {
        self.check_same_dim(&rhs);
        Self {
            dim: self.dim,
            matrix: self.matrix + rhs.matrix,
        }
    }
}

impl<'a> Add<&'a CurvatureTensor> for &'a CurvatureTensor {
    type Output = CurvatureTensor;
    fn add(self, rhs: Self) -> CurvatureTensor {
        self.check_same_dim(rhs);
        CurvatureTensor {
            dim: self.dim,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for CurvatureTensor {
    type Output = CurvatureTensor;
    fn sub(self, rhs: Self) -> Self {
        self.check_same_dim(&rhs);
        Self {
            dim: self.dim,
            matrix: self.matrix - rhs.matrix,
        }
    }
}

impl<'a> Sub<&'a CurvatureTensor> for &'a CurvatureTensor {
    type Output = CurvatureTensor;
    fn sub(self, rhs: Self) -> CurvatureTensor {
        self.check_same_dim(rhs);
        CurvatureTensor {
            dim: self.dim,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul<f64> for CurvatureTensor {
    type Output = CurvatureTensor;
    fn mul(self, c: f64) -> Self {
        self.scaled(c)
    }
}

impl Mul<f64> for &CurvatureTensor {
    type Output = CurvatureTensor;
    fn mul(self, c: f64) -> CurvatureTensor {
        self.scaled(c)
    }
}

impl Neg for CurvatureTensor {
    type Output = CurvatureTensor;
    fn neg(self) -> Self {
        self.scaled(-1.0)
    }
}
