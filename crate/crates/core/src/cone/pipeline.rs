//! Search for a small `b` with `R ∈ C(b)`: for each `b` on a descending
//! grid, pull `R` back through `l_{a(b),b}` and test the E(b) conditions.

use serde::{Deserialize, Serialize};

use super::eb::{eb_check, EbReport};
use crate::curvature::{a_of_b, CurvatureTensor, PinchingTransform};
use crate::error::{Error, Result};
use crate::frame::{cone_margin, ric_two_smallest, uniform_pic_margin, Mode, SearchBudget};

pub const DEFAULT_B_GRID: [f64; 4] = [0.2, 0.1, 0.05, 0.01];

/// `b ↦ ω(b)`. Only the growth `ω → ∞` as `b → 0` is prescribed, so the
/// schedule is configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OmegaSchedule {
    /// `scale / b`.
    Reciprocal { scale: f64 },
    Constant { value: f64 },
    /// `scale · b^(−exponent)`.
    Power { scale: f64, exponent: f64 },
}

impl Default for OmegaSchedule {
    fn default() -> Self {
        Self::Reciprocal { scale: 1.0 }
    }
}

impl OmegaSchedule {
    pub fn omega(&self, b: f64) -> Result<f64> {
        let w = match *self {
            OmegaSchedule::Reciprocal { scale } => scale / b,
            OmegaSchedule::Constant { value } => value,
            OmegaSchedule::Power { scale, exponent } => scale * b.powf(-exponent),
        };
        if w > 0.0 && w.is_finite() {
            Ok(w)
        } else {
            Err(Error::BadParameter { name: "omega", value: w })
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineRow {
    pub b: f64,
    pub a: f64,
    pub omega: f64,
    pub condition_estimate: f64,
    /// `scal(S)` for `S = l_{a,b}⁻¹(R)`.
    pub scal_s: f64,
    /// Absent when `scal(S) ≤ 0`.
    pub eb: Option<EbReport>,
    pub admissible: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineReport {
    pub theta: f64,
    pub seed: u64,
    pub scal: f64,
    /// PIC margin of `R − θ·scal·I`.
    pub uniform_margin: f64,
    pub ric_two_smallest: f64,
    /// `(λ₁+λ₂)/scal`, reported in place of an a priori pinching constant.
    pub ric_ratio: f64,
    /// One row per grid value, largest `b` first.
    pub rows: Vec<PipelineRow>,
    /// Largest admissible `b`.
    pub admissible_b: Option<f64>,
}

/// `θ` at which `R − θ·scal·I` reaches the PIC boundary. Every frame gives
/// `I` the PIC value 4, so this is `margin_PIC(R) / (4·scal)`.
pub fn critical_theta(r: &CurvatureTensor, budget: &SearchBudget) -> Result<f64> {
    let scal = r.scalar();
    if !(scal > 0.0) {
        return Err(Error::NonpositiveScal(scal));
    }
    Ok(cone_margin(r, Mode::Pic, budget).margin / (4.0 * scal))
}

/// Runs every grid value and returns the full table. Fails with
/// `NoAdmissibleB`, carrying the table, when no `b` passes.
pub fn theorem11_pipeline(
    r: &CurvatureTensor,
    theta: f64,
    schedule: &OmegaSchedule,
    b_grid: &[f64],
    budget: &SearchBudget,
) -> Result<PipelineReport> {
    let scal = r.scalar();
    if !(scal > 0.0) {
        return Err(Error::PreconditionFailed(format!(
            "scalar curvature {scal} is not positive"
        )));
    }
    let uniform = uniform_pic_margin(r, theta, budget)?;
    if uniform.margin < budget.weak_threshold(scal) {
        return Err(Error::PreconditionFailed(format!(
            "not uniformly PIC at theta = {theta} (margin {:.6e})",
            uniform.margin
        )));
    }
    let two = ric_two_smallest(&r.ricci());
    if two < budget.weak_threshold(scal) {
        return Err(Error::PreconditionFailed(format!(
            "sum of the two smallest Ricci eigenvalues is {two:.6e}"
        )));
    }

    let mut grid = b_grid.to_vec();
    grid.sort_by(|x, y| y.total_cmp(x));
    grid.dedup();
    let mut rows = Vec::with_capacity(grid.len());
    for b in grid {
        let params = a_of_b(b, r.dim())?;
        let omega = schedule.omega(b)?;
        let t = PinchingTransform::new(r.dim(), params)?;
        let s = t.inverse(r)?;
        let scal_s = s.scalar();
        let eb = if scal_s > 0.0 {
            Some(eb_check(&s, theta, omega, budget)?)
        } else {
            None
        };
        rows.push(PipelineRow {
            b,
            a: params.a,
            omega,
            condition_estimate: t.condition_estimate(),
            scal_s,
            admissible: eb.as_ref().is_some_and(EbReport::all_pass),
            eb,
        });
    }
    let report = PipelineReport {
        theta,
        seed: budget.seed,
        scal,
        uniform_margin: uniform.margin,
        ric_two_smallest: two,
        ric_ratio: two / scal,
        admissible_b: rows.iter().find(|row| row.admissible).map(|row| row.b),
        rows,
    };
    if report.admissible_b.is_none() {
        return Err(Error::NoAdmissibleB(Box::new(report)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::models::{cylinder, sphere};

    fn budget() -> SearchBudget {
        SearchBudget::default().with_restarts(8)
    }

    #[test]
    fn schedules() {
        assert_eq!(OmegaSchedule::default().omega(0.1).unwrap(), 10.0);
        assert_eq!(OmegaSchedule::Constant { value: 3.0 }.omega(0.5).unwrap(), 3.0);
        let p = OmegaSchedule::Power { scale: 2.0, exponent: 2.0 };
        assert!((p.omega(0.5).unwrap() - 8.0).abs() < 1e-15);
        assert!(OmegaSchedule::default().omega(0.0).is_err());
    }

    #[test]
    fn critical_theta_models() {
        let c = critical_theta(&cylinder(9, 1.0), &budget()).unwrap();
        assert!((c - 1.0 / 112.0).abs() < 1e-12, "{c}");
        let s = critical_theta(&sphere(9, 1.0), &budget()).unwrap();
        assert!((s - 1.0 / 72.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn cylinder_admits_small_b() {
        let rep = theorem11_pipeline(
            &cylinder(9, 1.0),
            1.0 / 224.0,
            &OmegaSchedule::default(),
            &DEFAULT_B_GRID,
            &budget(),
        )
        .unwrap();
        // the largest b leaves a negative Ricci pair in S
        assert!(!rep.rows[0].eb.as_ref().unwrap().pass_ii);
        assert_eq!(rep.admissible_b, Some(0.1));
    }

    #[test]
    fn flat_fails_precondition() {
        let err = theorem11_pipeline(
            &CurvatureTensor::zeros(6),
            0.01,
            &OmegaSchedule::default(),
            &DEFAULT_B_GRID,
            &budget(),
        );
        assert!(matches!(err, Err(Error::PreconditionFailed(_))));
    }
}
