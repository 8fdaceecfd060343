use nalgebra::{DMatrix, DVector, LU, Dyn};
use serde::{Deserialize, Serialize};

use super::{kulkarni_nomizu, pair_count, pair_index, CurvatureTensor, SymmetricForm};
use crate::error::{Error, Result};

/// Parameters `(a, b)` of the pinching transform `l_{a,b}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub a: f64,
    pub b: f64,
    /// Set when `a` was computed from `b` by [`a_of_b`].
    pub derived: bool,
}

impl TransformParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0) {
            return Err(Error::BadParameter { name: "a", value: a });
        }
        if !(b >= 0.0) {
            return Err(Error::BadParameter { name: "b", value: b });
        }
        Ok(Self {
            a,
            b,
            derived: false,
        })
    }

    /// Unvalidated parameters, used to exercise the singular branch.
    #[cfg(test)]
    pub(crate) fn raw(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            derived: false,
        }
    }
}

/// `a(b) = (2+(n−2)b)² b / (2(2+(n−3)b))`.
pub fn a_of_b(b: f64, n: usize) -> Result<TransformParams> {
    let nf = n as f64;
    let denom = 2.0 * (2.0 + (nf - 3.0) * b);
    if !(denom > 0.0) {
        return Err(Error::NonpositiveDenominator(denom / 2.0));
    }
    if !(b >= 0.0) {
        return Err(Error::BadParameter { name: "b", value: b });
    }
    let num = 2.0 + (nf - 2.0) * b;
    Ok(TransformParams {
        a: num * num * b / denom,
        b,
        derived: true,
    })
}

impl CurvatureTensor {
    /// `l_{a,b}(R) = R + b·Ric∧id + (2/n)(a−b)·scal·I`.
    pub fn l_ab(&self, p: &TransformParams) -> CurvatureTensor {
        let n = self.dim();
        let ric = self.ricci();
        let kn = kulkarni_nomizu(&ric, &SymmetricForm::identity(n)).expect("same dimension");
        let c = 2.0 / n as f64 * (p.a - p.b) * self.scalar();
        let m = self.matrix() + kn.matrix() * p.b + DMatrix::identity(pair_count(n), pair_count(n)) * c;
        CurvatureTensor::from_matrix_unchecked(n, m)
    }

    /// Inverse of [`CurvatureTensor::l_ab`] by a dense solve; builds a fresh
    /// [`PinchingTransform`]. Reuse one directly when inverting many tensors.
    pub fn l_ab_inverse(&self, p: &TransformParams) -> Result<CurvatureTensor> {
        PinchingTransform::new(self.dim(), *p)?.inverse(self)
    }
}

/// Coordinates on the Bianchi subspace: every upper-triangular pair-basis
/// entry except `M[il,jk]` for `i<j<k<l`, which the identity
/// `M[il,jk] = M[ik,jl] − M[ij,kl]` determines.
struct BianchiCoords {
    n: usize,
    /// `(row, col)` of each free coordinate, `row ≤ col`.
    free: Vec<(usize, usize)>,
    /// `(dependent, ik_jl, ij_kl)` for each quadruple.
    dependent: Vec<((usize, usize), (usize, usize), (usize, usize))>,
}

impl BianchiCoords {
    fn new(n: usize) -> Self {
        let n2 = pair_count(n);
        let mut is_dep = vec![false; n2 * n2];
        let mut dependent = Vec::new();
        let ordered = |a: usize, b: usize| if a <= b { (a, b) } else { (b, a) };
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in (k + 1)..n {
                        let dep = ordered(pair_index(n, i, l), pair_index(n, j, k));
                        is_dep[dep.0 * n2 + dep.1] = true;
                        dependent.push((
                            dep,
                            ordered(pair_index(n, i, k), pair_index(n, j, l)),
                            ordered(pair_index(n, i, j), pair_index(n, k, l)),
                        ));
                    }
                }
            }
        }
        let mut free = Vec::new();
        for r in 0..n2 {
            for c in r..n2 {
                if !is_dep[r * n2 + c] {
                    free.push((r, c));
                }
            }
        }
        Self { n, free, dependent }
    }

    fn len(&self) -> usize {
        self.free.len()
    }

    fn read(&self, r: &CurvatureTensor) -> DVector<f64> {
        let m = r.matrix();
        DVector::from_iterator(self.len(), self.free.iter().map(|&(a, b)| m[(a, b)]))
    }

    fn write(&self, x: &DVector<f64>) -> CurvatureTensor {
        let n2 = pair_count(self.n);
        let mut m = DMatrix::zeros(n2, n2);
        for (&(a, b), &v) in self.free.iter().zip(x.iter()) {
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
        for &(dep, ik_jl, ij_kl) in &self.dependent {
            let v = m[ik_jl] - m[ij_kl];
            m[dep] = v;
            m[(dep.1, dep.0)] = v;
        }
        CurvatureTensor::from_matrix_unchecked(self.n, m)
    }
}

/// `l_{a,b}` assembled as a dense matrix on Bianchi-subspace coordinates,
/// with a cached LU factorization for repeated inversion.
pub struct PinchingTransform {
    params: TransformParams,
    coords: BianchiCoords,
    lu: LU<f64, Dyn, Dyn>,
    condition: f64,
}

impl PinchingTransform {
    pub fn new(n: usize, params: TransformParams) -> Result<Self> {
        let coords = BianchiCoords::new(n);
        let dim = coords.len();
        let mut op = DMatrix::zeros(dim, dim);
        let mut e = DVector::zeros(dim);
        for col in 0..dim {
            e[col] = 1.0;
            let image = coords.write(&e).l_ab(&params);
            op.set_column(col, &coords.read(&image));
            e[col] = 0.0;
        }
        let lu = op.lu();
        let diag = lu.u().diagonal().map(f64::abs);
        let (lo, hi) = (diag.min(), diag.max());
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition < 1e13) {
            return Err(Error::SingularTransform { condition });
        }
        Ok(Self {
            params,
            coords,
            lu,
            condition,
        })
    }

    pub fn params(&self) -> &TransformParams {
        &self.params
    }

    /// Ratio of extreme pivots of the LU factor.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn apply(&self, r: &CurvatureTensor) -> CurvatureTensor {
        r.l_ab(&self.params)
    }

    pub fn inverse(&self, r: &CurvatureTensor) -> Result<CurvatureTensor> {
        if r.dim() != self.coords.n {
            return Err(Error::DimMismatch(r.dim(), self.coords.n));
        }
        let rhs = self.coords.read(r);
        let x = self.lu.solve(&rhs).ok_or(Error::SingularTransform {
            condition: self.condition,
        })?;
        Ok(self.coords.write(&x))
    }
}
