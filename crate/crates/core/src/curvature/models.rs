//! Constructors for model geometries and seeded random tensors.

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{kulkarni_nomizu, pair_count, pair_index, CurvatureTensor, SymmetricForm};
use crate::error::{Error, Result};
use crate::sampling;

/// Families of seeded random tensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomClass {
    /// Gaussian pair-basis entries, Bianchi-projected.
    BianchiGeneric,
    /// `I + ρG` with `‖G‖ = 1`, `ρ ≤ 0.6`; PIC margin stays above 2.
    PicInterior,
    /// A rotated, perturbed cylinder with one axis-plane direction pushed
    /// negative: strictly PIC with a slightly negative PIC1 margin.
    NearPic1Boundary,
}

impl FromStr for RandomClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bianchi_generic" => Ok(Self::BianchiGeneric),
            "pic_interior" => Ok(Self::PicInterior),
            "near_pic1_boundary" => Ok(Self::NearPic1Boundary),
            other => Err(Error::BadClass(other.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ModelKind {
    /// `c·I`, curvature of the round sphere of radius `c^{-1/2}`.
    Sphere(f64),
    /// `c` times the identity block on the first `n−1` coordinates; the
    /// last coordinate is the flat axis.
    Cylinder(f64),
    DirectSum(Box<CurvatureTensor>, Box<CurvatureTensor>),
    Random { seed: u64, class: RandomClass },
}

pub fn model_tensor(kind: &ModelKind, dim: usize) -> Result<CurvatureTensor> {
    match kind {
        ModelKind::Sphere(c) | ModelKind::Cylinder(c) if !(*c > 0.0) => {
            Err(Error::BadParameter { name: "c", value: *c })
        }
        ModelKind::Sphere(c) => Ok(CurvatureTensor::identity(dim).scaled(*c)),
        ModelKind::Cylinder(c) => {
            if dim < 2 {
                return Err(Error::BadDimension(dim, "n ≥ 2"));
            }
            Ok(direct_sum(
                &CurvatureTensor::identity(dim - 1).scaled(*c),
                &CurvatureTensor::zeros(1),
            ))
        }
        ModelKind::DirectSum(a, b) => {
            if a.dim() + b.dim() != dim {
                return Err(Error::DimMismatch(a.dim() + b.dim(), dim));
            }
            Ok(direct_sum(a, b))
        }
        ModelKind::Random { seed, class } => Ok(random_tensor(dim, *seed, *class)),
    }
}

pub fn sphere(dim: usize, c: f64) -> CurvatureTensor {
    CurvatureTensor::identity(dim).scaled(c)
}

pub fn cylinder(dim: usize, c: f64) -> CurvatureTensor {
    direct_sum(&CurvatureTensor::identity(dim - 1).scaled(c), &CurvatureTensor::zeros(1))
}

/// Block sum: `a` acts on the first `a.dim()` coordinates, `b` on the rest.
pub fn direct_sum(a: &CurvatureTensor, b: &CurvatureTensor) -> CurvatureTensor {
    let (na, nb) = (a.dim(), b.dim());
    let n = na + nb;
    let n2 = pair_count(n);
    let mut m = DMatrix::zeros(n2, n2);
    let mut place = |src: &CurvatureTensor, off: usize| {
        let k = src.dim();
        for i in 0..k {
            for j in (i + 1)..k {
                for p in 0..k {
                    for q in (p + 1)..k {
                        m[(pair_index(n, i + off, j + off), pair_index(n, p + off, q + off))] =
                            src.get(i, j, p, q);
                    }
                }
            }
        }
    };
    place(a, 0);
    place(b, na);
    CurvatureTensor::from_matrix_unchecked(n, m)
}

/// The rank-one operator `ω⊗ω` for `ω = e_i∧e_j` (0-based, `i≠j`).
pub fn plane_projector(dim: usize, i: usize, j: usize) -> CurvatureTensor {
    let n2 = pair_count(dim);
    let p = pair_index(dim, i.min(j), i.max(j));
    let mut m = DMatrix::zeros(n2, n2);
    m[(p, p)] = 1.0;
    CurvatureTensor::from_matrix_unchecked(dim, m)
}

fn gaussian_bianchi<R: Rng>(rng: &mut R, dim: usize) -> CurvatureTensor {
    let n2 = pair_count(dim);
    let g = sampling::gaussian_vec(rng, n2 * n2);
    let m = DMatrix::from_vec(n2, n2, g);
    let sym = (&m + m.transpose()) * 0.5;
    CurvatureTensor::from_matrix_unchecked(dim, sym).bianchi_projected()
}

fn unit_bianchi<R: Rng>(rng: &mut R, dim: usize) -> CurvatureTensor {
    let g = gaussian_bianchi(rng, dim);
    let norm = g.norm();
    g.scaled(1.0 / norm)
}

/// Seeded random tensor of the given class; identical output for identical
/// `(dim, seed, class)`.
pub fn random_tensor(dim: usize, seed: u64, class: RandomClass) -> CurvatureTensor {
    let mut rng = sampling::rng(seed, dim as u64);
    match class {
        RandomClass::BianchiGeneric => gaussian_bianchi(&mut rng, dim),
        RandomClass::PicInterior => {
            let rho = rng.gen_range(0.1..0.6);
            let scale = rng.gen_range(0.5..2.0);
            (CurvatureTensor::identity(dim) + unit_bianchi(&mut rng, dim).scaled(rho)).scaled(scale)
        }
        RandomClass::NearPic1Boundary => {
            let delta = rng.gen_range(0.02..0.3);
            let eps = rng.gen_range(0.0..0.5) * delta;
            let mut axis = vec![0.0; dim];
            axis[dim - 1] = 1.0;
            let bend = kulkarni_nomizu(&SymmetricForm::diagonal(&axis), &SymmetricForm::identity(dim))
                .expect("same dimension");
            let base = cylinder(dim, 1.0) - bend.scaled(delta)
                + unit_bianchi(&mut rng, dim).scaled(eps);
            let o = sampling::random_orthogonal(&mut rng, dim);
            base.rotated(&o).bianchi_projected()
        }
    }
}

/// A named corpus member.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub tensor: CurvatureTensor,
}

/// The fixed 50-tensor regression corpus used by margin and pipeline checks.
pub fn regression_corpus(seed: u64) -> Vec<CorpusEntry> {
    let mut out = Vec::with_capacity(50);
    let mut push = |name: String, tensor: CurvatureTensor| out.push(CorpusEntry { name, tensor });
    push("sphere(1)/5".into(), sphere(5, 1.0));
    push("cylinder(1)/5".into(), cylinder(5, 1.0));
    push("sphere(1)/6".into(), sphere(6, 1.0));
    push("cylinder(1)/6".into(), cylinder(6, 1.0));
    push("sphere(2.5)/7".into(), sphere(7, 2.5));
    for (k, (a, b)) in [(2usize, 3usize), (3, 2), (2, 4), (3, 3), (4, 2)].into_iter().enumerate() {
        let t = direct_sum(&sphere(a, 1.0 + k as f64 * 0.25), &sphere(b, 1.0));
        push(format!("sphere{a}+sphere{b}"), t);
    }
    for k in 0..15u64 {
        let n = if k < 8 { 5 } else { 6 };
        push(
            format!("pic_interior/{n}/{k}"),
            random_tensor(n, sampling::mix(seed, 100 + k), RandomClass::PicInterior),
        );
    }
    for k in 0..10u64 {
        let n = if k < 5 { 5 } else { 6 };
        push(
            format!("bianchi_generic/{n}/{k}"),
            random_tensor(n, sampling::mix(seed, 200 + k), RandomClass::BianchiGeneric),
        );
    }
    for k in 0..15u64 {
        let n = 5 + (k % 3) as usize;
        push(
            format!("near_pic1_boundary/{n}/{k}"),
            random_tensor(n, sampling::mix(seed, 300 + k), RandomClass::NearPic1Boundary),
        );
    }
    out
}
