//! Closed-form normalized shrinking gradient Ricci solitons
//! `Ric + ∇²f = ½g`, `scal + |∇f|² = f`, evaluated pointwise in an
//! orthonormal frame.
//!
//! | model    | curvature                      | f                  |
//! |----------|--------------------------------|--------------------|
//! | Gaussian | 0                              | `|x|²/4`           |
//! | sphere   | `I/(2(n−1))`                   | `n/2`              |
//! | cylinder | `I/(2(n−2))` on `Sⁿ⁻¹`, axis last | `s²/4 + (n−1)/2` |
//!
//! All three have parallel curvature, so `Δ_f R = 0` and the elliptic
//! equations reduce to `R = Q(R)`, `Ric = 2R⋆Ric` and `scal = 2|Ric|²`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::models::{cylinder, sphere};
use crate::curvature::{r_star, CurvatureTensor, SymmetricForm};
use crate::error::{Error, Result};
use crate::frame::{cone_margin, p1, ric_two_smallest, Mode, SearchBudget, Verdict};
use crate::sampling;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolitonModel {
    Gaussian { dim: usize },
    RoundSphere { dim: usize },
    Cylinder { dim: usize },
}

/// Where to evaluate a model: a position for the Gaussian, the axial
/// coordinate for the cylinder, nothing for the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelPoint {
    Homogeneous,
    Position(Vec<f64>),
    Axial(f64),
}

impl SolitonModel {
    pub fn dim(&self) -> usize {
        match *self {
            SolitonModel::Gaussian { dim } | SolitonModel::RoundSphere { dim } | SolitonModel::Cylinder { dim } => dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolitonModel::Gaussian { .. } => "gaussian",
            SolitonModel::RoundSphere { .. } => "round_sphere",
            SolitonModel::Cylinder { .. } => "cylinder",
        }
    }

    /// The three models in dimension `dim`.
    pub fn all(dim: usize) -> [SolitonModel; 3] {
        [
            SolitonModel::Gaussian { dim },
            SolitonModel::RoundSphere { dim },
            SolitonModel::Cylinder { dim },
        ]
    }

    /// `count` seeded points: Gaussian positions with `N(0, 4)` entries,
    /// cylinder axial coordinates uniform in `[−6, 6]`.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<ModelPoint> {
        let mut rng = sampling::rng(seed, 0x501);
        (0..count)
            .map(|_| match self {
                SolitonModel::Gaussian { dim } => {
                    ModelPoint::Position(sampling::gaussian_vec(&mut rng, *dim).into_iter().map(|v| 2.0 * v).collect())
                }
                SolitonModel::RoundSphere { .. } => ModelPoint::Homogeneous,
                SolitonModel::Cylinder { .. } => ModelPoint::Axial(rng.gen_range(-6.0..6.0)),
            })
            .collect()
    }
}

/// Pointwise data in the model's orthonormal frame.
#[derive(Clone, Debug)]
pub struct PointData {
    pub curvature: CurvatureTensor,
    pub ricci: SymmetricForm,
    pub scal: f64,
    pub f: f64,
    pub grad_f: Vec<f64>,
    pub grad_f_sq: f64,
    pub hessian_f: SymmetricForm,
    pub hessian_f_eigs: Vec<f64>,
    pub laplacian_f: f64,
}

pub fn model_point(model: &SolitonModel, point: &ModelPoint) -> Result<PointData> {
    let n = model.dim();
    let (curvature, f, grad_f, hess_diag) = match (model, point) {
        (SolitonModel::Gaussian { .. }, ModelPoint::Position(x)) => {
            if x.len() != n {
                return Err(Error::DimMismatch(x.len(), n));
            }
            let f = x.iter().map(|v| v * v).sum::<f64>() / 4.0;
            let grad = x.iter().map(|v| v / 2.0).collect();
            (CurvatureTensor::zeros(n), f, grad, vec![0.5; n])
        }
        (SolitonModel::RoundSphere { .. }, ModelPoint::Homogeneous) => {
            if n < 3 {
                return Err(Error::BadDimension(n, "n ≥ 3"));
            }
            (sphere(n, 1.0 / (2.0 * (n as f64 - 1.0))), n as f64 / 2.0, vec![0.0; n], vec![0.0; n])
        }
        (SolitonModel::Cylinder { .. }, ModelPoint::Axial(s)) => {
            if n < 4 {
                return Err(Error::BadDimension(n, "n ≥ 4"));
            }
            let mut grad = vec![0.0; n];
            grad[n - 1] = s / 2.0;
            let mut hess = vec![0.0; n];
            hess[n - 1] = 0.5;
            (
                cylinder(n, 1.0 / (2.0 * (n as f64 - 2.0))),
                s * s / 4.0 + (n as f64 - 1.0) / 2.0,
                grad,
                hess,
            )
        }
        _ => {
            return Err(Error::Format(format!(
                "point {point:?} does not parametrize the {} model",
                model.name()
            )))
        }
    };
    let hessian_f = SymmetricForm::diagonal(&hess_diag);
    Ok(PointData {
        ricci: curvature.ricci(),
        scal: curvature.scalar(),
        f,
        grad_f_sq: grad_f.iter().map(|v: &f64| v * v).sum(),
        grad_f,
        hessian_f_eigs: hessian_f.eigenvalues(),
        laplacian_f: hess_diag.iter().sum(),
        hessian_f,
        curvature,
    })
}

/// Residuals of the first-order soliton identities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolitonResiduals {
    /// `max |Ric + ∇²f − ½g|`.
    pub soliton_equation: f64,
    /// `scal + Δf − n/2`.
    pub trace: f64,
    /// `max |Ric(∇f,·) − ½∇scal|`; scal is constant on every model.
    pub ricci_gradient: f64,
    /// `max |∇(scal + |∇f|² − f)| = max |2∇²f(∇f) − ∇f|`.
    pub conserved_gradient: f64,
    /// `scal + |∇f|² − f`.
    pub normalization: f64,
}

impl SolitonResiduals {
    pub fn max(&self) -> f64 {
        [
            self.soliton_equation,
            self.trace,
            self.ricci_gradient,
            self.conserved_gradient,
            self.normalization,
        ]
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(f64::abs).fold(0.0, f64::max)
}

pub fn check_soliton_identities(model: &SolitonModel, point: &ModelPoint) -> Result<SolitonResiduals> {
    let d = model_point(model, point)?;
    let n = model.dim();
    let half = SymmetricForm::identity(n).scaled(0.5);
    let eq = d.ricci.add(&d.hessian_f).sub(&half);
    let ric_grad = d.ricci.apply(&d.grad_f);
    let hess_grad = d.hessian_f.apply(&d.grad_f);
    Ok(SolitonResiduals {
        soliton_equation: eq.matrix().amax(),
        trace: d.scal + d.laplacian_f - n as f64 / 2.0,
        ricci_gradient: max_abs(ric_grad),
        conserved_gradient: max_abs(hess_grad.iter().zip(&d.grad_f).map(|(h, g)| 2.0 * h - g)),
        normalization: d.scal + d.grad_f_sq - d.f,
    })
}

/// Residuals of the elliptic equations with `Δ_f` of parallel curvature
/// set to zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EllipticResiduals {
    /// `max |R − Q(R)|` over pair-basis entries.
    pub curvature: f64,
    /// `max |Ric − 2R⋆Ric|`.
    pub ricci: f64,
    /// `scal − 2|Ric|²`.
    pub scal: f64,
}

impl EllipticResiduals {
    pub fn max(&self) -> f64 {
        self.curvature.abs().max(self.ricci.abs()).max(self.scal.abs())
    }
}

pub fn check_elliptic_identities(model: &SolitonModel, point: &ModelPoint) -> Result<EllipticResiduals> {
    let d = model_point(model, point)?;
    let q = d.curvature.q();
    let star = r_star(&d.curvature, &d.ricci).scaled(2.0);
    Ok(EllipticResiduals {
        curvature: (&d.curvature - &q).max_abs_entry(),
        ricci: d.ricci.sub(&star).matrix().amax(),
        scal: d.scal - 2.0 * d.ricci.norm_sq(),
    })
}

/// Hypotheses of the classification theorem at one point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub model: SolitonModel,
    pub point: ModelPoint,
    /// Sum of the two smallest eigenvalues of `∇²f`.
    pub hessian_two_smallest: f64,
    pub hessian_two_nonnegative: bool,
    pub pic_margin: f64,
    pub strictly_pic: bool,
    pub pic1_margin: f64,
    pub weakly_pic1: bool,
    /// `p₁` when strictly PIC.
    pub p1: Option<f64>,
    /// `1 − (Ric₁₁+Ric₂₂)` at the `p₁` witness pair.
    pub witness_slack: Option<f64>,
    /// `|1 − (Ric₁₁+Ric₂₂) − (∇²f₁₁+∇²f₂₂)|` at the witness pair.
    pub witness_identity_residual: Option<f64>,
    pub all_hold: bool,
}

pub fn check_theorem13_hypotheses(
    model: &SolitonModel,
    point: &ModelPoint,
    budget: &SearchBudget,
) -> Result<HypothesisReport> {
    let d = model_point(model, point)?;
    let n = model.dim();
    let hessian_two_smallest = ric_two_smallest(&d.hessian_f);
    let pic = cone_margin(&d.curvature, Mode::Pic, budget);
    let pic1 = cone_margin(&d.curvature, Mode::Pic1, budget);
    let strictly_pic = pic.verdict == Verdict::Interior;
    let weakly_pic1 = pic1.verdict.in_cone();

    let (p1_value, witness_slack, witness_identity_residual) = if strictly_pic {
        let rep = p1(&d.curvature, budget)?;
        let (e1, e2) = (&rep.witness.frame[0], &rep.witness.frame[1]);
        let ric_pair = d.ricci.quad(e1) + d.ricci.quad(e2);
        let hess_pair = d.hessian_f.quad(e1) + d.hessian_f.quad(e2);
        let slack = 1.0 - ric_pair;
        (Some(rep.value), Some(slack), Some((slack - hess_pair).abs()))
    } else {
        (None, None, None)
    };
    let tol = 1e-12 * (1.0 + n as f64);
    let hessian_two_nonnegative = hessian_two_smallest >= -tol;
    Ok(HypothesisReport {
        model: *model,
        point: point.clone(),
        hessian_two_smallest,
        hessian_two_nonnegative,
        pic_margin: pic.margin,
        strictly_pic,
        pic1_margin: pic1.margin,
        weakly_pic1,
        p1: p1_value,
        all_hold: strictly_pic && weakly_pic1 && hessian_two_nonnegative && witness_slack.is_some_and(|s| s >= -tol),
        witness_slack,
        witness_identity_residual,
    })
}

/// `‖R‖/scal` and the range of scal over the sampled points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaBound {
    pub theta: f64,
    pub scal_min: f64,
    pub scal_max: f64,
    /// `0 ≤ scal ≤ n/2` at every sampled point.
    pub scal_in_range: bool,
}

pub fn bound_theta(model: &SolitonModel, points: &[ModelPoint]) -> Result<ThetaBound> {
    let n = model.dim() as f64;
    let mut theta: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let d = model_point(model, p)?;
        if !(d.scal > 0.0) {
            return Err(Error::ZeroScal);
        }
        theta = theta.max(d.curvature.norm() / d.scal);
        lo = lo.min(d.scal);
        hi = hi.max(d.scal);
    }
    if points.is_empty() {
        return Err(Error::BadParameter { name: "points", value: 0.0 });
    }
    Ok(ThetaBound {
        theta,
        scal_min: lo,
        scal_max: hi,
        scal_in_range: lo >= 0.0 && hi <= n / 2.0,
    })
}

/// Smallest eigenvalue of `R⋆Ric`.
pub fn r_star_ric_min_eigenvalue(r: &CurvatureTensor) -> f64 {
    r_star(r, &r.ricci()).eigenvalues().first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_point() {
        let d = model_point(&SolitonModel::Gaussian { dim: 5 }, &ModelPoint::Position(vec![2.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(d.scal, 0.0);
        assert_eq!(d.f, 1.0);
        assert_eq!(d.grad_f_sq, 1.0);
        assert_eq!(d.hessian_f_eigs, vec![0.5; 5]);
        assert_eq!(d.laplacian_f, 2.5);
    }

    #[test]
    fn sphere_point() {
        let d = model_point(&SolitonModel::RoundSphere { dim: 5 }, &ModelPoint::Homogeneous).unwrap();
        assert!((d.scal - 2.5).abs() < 1e-15);
        assert_eq!(d.f, 2.5);
        assert_eq!(d.grad_f_sq, 0.0);
        assert!(d.hessian_f_eigs.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn cylinder_point() {
        let d = model_point(&SolitonModel::Cylinder { dim: 5 }, &ModelPoint::Axial(0.0)).unwrap();
        assert!((d.scal - 2.0).abs() < 1e-15);
        assert_eq!(d.f, 2.0);
        assert_eq!(d.hessian_f_eigs, vec![0.0, 0.0, 0.0, 0.0, 0.5]);
        assert_eq!(d.laplacian_f, 0.5);
        let far = check_soliton_identities(&SolitonModel::Cylinder { dim: 7 }, &ModelPoint::Axial(3.0)).unwrap();
        assert!(far.max() <= 1e-12);
    }

    #[test]
    fn mismatched_point_is_rejected() {
        assert!(model_point(&SolitonModel::RoundSphere { dim: 5 }, &ModelPoint::Axial(1.0)).is_err());
        assert!(model_point(&SolitonModel::Gaussian { dim: 5 }, &ModelPoint::Position(vec![1.0])).is_err());
    }

    #[test]
    fn elliptic_sphere() {
        let e = check_elliptic_identities(&SolitonModel::RoundSphere { dim: 5 }, &ModelPoint::Homogeneous).unwrap();
        assert!(e.max() <= 1e-12, "{e:?}");
    }

    #[test]
    fn theta_bounds() {
        assert!(matches!(
            bound_theta(&SolitonModel::Gaussian { dim: 5 }, &[ModelPoint::Position(vec![0.0; 5])]),
            Err(Error::ZeroScal)
        ));
        let s = bound_theta(&SolitonModel::RoundSphere { dim: 5 }, &[ModelPoint::Homogeneous]).unwrap();
        let i = CurvatureTensor::identity(5);
        assert!((s.theta - i.norm() / 8.0 / 2.5).abs() < 1e-14);
        let model = SolitonModel::Cylinder { dim: 7 };
        let c = bound_theta(&model, &model.sample_points(10, 1)).unwrap();
        assert_eq!(c.scal_min, c.scal_max);
        assert!(c.scal_in_range && (c.scal_max - 3.0).abs() < 1e-14);
    }
}
