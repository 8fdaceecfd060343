//! Stress test of the reaction inequality at a PIC1-boundary frame.
//!
//! With `c = −p₁ > 0`, the shifted numerator `Z + c(1−λ²)` is nonnegative
//! over all frames and `λ ∈ [0,1)`, and vanishes at the `p₁` minimizer. At
//! that configuration
//!
//! ```text
//! Q₁₃₁₃ + λ²Q₁₄₁₄ + Q₂₃₂₃ + λ²Q₂₄₂₄ − 2λQ₁₂₃₄ + c(1−λ²)(Ric₁₁+Ric₂₂) ≥ 0.
//! ```
//!
//! The proof adds a direction `e₀` on which the lift `T` has sectional
//! curvature `c/2`, so that `T` is weakly PIC with a zero at
//! `{e₁, e₂, e₃, λe₄ + √(1−λ²)e₀}`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::models::random_tensor;
use crate::curvature::{pair_count, pair_index, CurvatureTensor, RandomClass};
use crate::error::{Error, Result};
use crate::frame::{p1, FrameComponents, FrameConfig, Mode, SearchBudget};
use crate::sampling;

/// `(n+1)`-dimensional tensor with `T_ijkl = R_ijkl` on the first `n`
/// indices, `T_{i n k n} = (c/2)δ_ik` for the new last index, and all other
/// mixed components zero.
pub fn lift_with_constant(r: &CurvatureTensor, c: f64) -> CurvatureTensor {
    let n = r.dim();
    let big = n + 1;
    let mut m = DMatrix::zeros(pair_count(big), pair_count(big));
    let src = r.matrix();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = pair_index(n, i, j);
            let pp = pair_index(big, i, j);
            for k in 0..n {
                for l in (k + 1)..n {
                    m[(pp, pair_index(big, k, l))] = src[(p, pair_index(n, k, l))];
                }
            }
        }
        let q = pair_index(big, i, n);
        m[(q, q)] = c / 2.0;
    }
    CurvatureTensor::from_matrix_unchecked(big, m)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaReport {
    pub p1: f64,
    /// `c = −p₁`.
    pub c: f64,
    pub lambda: f64,
    pub witness: FrameConfig,
    /// `Q₁₃₁₃ + λ²Q₁₄₁₄ + Q₂₃₂₃ + λ²Q₂₄₂₄ − 2λQ₁₂₃₄` at the witness.
    pub q_combination: f64,
    pub ric_pair: f64,
    /// `q_combination + c(1−λ²)·ric_pair`.
    pub slack: f64,
    /// `1e−8·(1+‖R‖²)`.
    pub tolerance: f64,
    /// `λ(R₁₄₁₄+R₂₄₂₄) − R₁₂₃₄ − cλ` and `R₁₃₁₃+R₂₃₂₃ − λR₁₂₃₄ + c`.
    pub stationarity: [f64; 2],
    /// PIC functional of the lift at the extended frame.
    pub lift_value: f64,
    pub slack_ok: bool,
    /// Both residuals within `1e−6·(1+‖R‖)`.
    pub stationarity_ok: bool,
    /// `lift_value ≥ −1e−8·(1+‖R‖)`.
    pub lift_ok: bool,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.slack_ok && self.stationarity_ok && self.lift_ok
    }
}

/// Evaluates the inequality at the `p₁` minimizer. Raises `NotApplicable`
/// when `p₁ = 0`, where the hypothesis holds vacuously.
pub fn lemma31_stress(r: &CurvatureTensor, budget: &SearchBudget) -> Result<LemmaReport> {
    let rep = p1(r, budget)?;
    if rep.value >= 0.0 {
        return Err(Error::NotApplicable(rep.value));
    }
    let n = r.dim();
    let c = -rep.value;
    let lambda = rep.witness.lambda;
    let rows: Vec<f64> = rep.witness.frame.iter().flatten().copied().collect();

    let q_combination = FrameComponents::compute(&r.q(), &rows).value(Mode::Pic1, lambda, 1.0);
    let ric = r.ricci();
    let ric_pair = ric.quad(&rows[..n]) + ric.quad(&rows[n..2 * n]);
    let slack = q_combination + c * (1.0 - lambda * lambda) * ric_pair;
    let norm = r.norm();
    let tolerance = 1e-8 * (1.0 + norm * norm);

    let comps = FrameComponents::compute(r, &rows);
    let stationarity = [
        lambda * (comps.r1414 + comps.r2424) - comps.r1234 - c * lambda,
        comps.r1313 + comps.r2323 - lambda * comps.r1234 + c,
    ];

    let lift = lift_with_constant(r, c);
    let mut ext = vec![0.0; 4 * (n + 1)];
    for (a, v) in rep.witness.frame.iter().enumerate() {
        let scale = if a == 3 { lambda } else { 1.0 };
        for (i, x) in v.iter().enumerate() {
            ext[a * (n + 1) + i] = scale * x;
        }
    }
    ext[3 * (n + 1) + n] = (1.0 - lambda * lambda).max(0.0).sqrt();
    let lift_value = FrameComponents::compute(&lift, &ext).value(Mode::Pic, 1.0, 1.0);

    let small = 1.0 + norm;
    Ok(LemmaReport {
        p1: rep.value,
        c,
        lambda,
        witness: rep.witness,
        q_combination,
        ric_pair,
        slack,
        tolerance,
        stationarity,
        lift_value,
        slack_ok: slack >= -tolerance,
        stationarity_ok: stationarity.iter().all(|s| s.abs() <= 1e-6 * small),
        lift_ok: lift_value >= -1e-8 * small,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LemmaOutcome {
    Checked(LemmaReport),
    Skipped { p1: f64 },
    Failed { message: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaCase {
    pub index: usize,
    pub dim: usize,
    pub seed: u64,
    pub outcome: LemmaOutcome,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaBatch {
    pub cases: Vec<LemmaCase>,
    pub checked: usize,
    pub skipped: usize,
    pub failed: usize,
    /// Cases with `slack < −tolerance`.
    pub violations: usize,
    /// Cases whose stationarity or lift check failed.
    pub secondary_violations: usize,
    /// Smallest `slack / tolerance` among checked cases.
    pub min_relative_slack: f64,
}

/// Runs [`lemma31_stress`] on `count` near-PIC1-boundary tensors, case `k`
/// in dimension `dims[k % dims.len()]` with seed `mix(seed, k)`. Output is
/// in case order.
pub fn lemma31_batch(count: usize, dims: &[usize], seed: u64, budget: &SearchBudget) -> Result<LemmaBatch> {
    if dims.is_empty() || dims.iter().any(|&d| d < 4) {
        return Err(Error::BadDimension(dims.first().copied().unwrap_or(0), "at least 4"));
    }
    let cases: Vec<LemmaCase> = (0..count)
        .into_par_iter()
        .map(|k| {
            let dim = dims[k % dims.len()];
            let case_seed = sampling::mix(seed, k as u64);
            let r = random_tensor(dim, case_seed, RandomClass::NearPic1Boundary);
            let outcome = match lemma31_stress(&r, &budget.clone().with_seed(case_seed)) {
                Ok(rep) => LemmaOutcome::Checked(rep),
                Err(Error::NotApplicable(p)) => LemmaOutcome::Skipped { p1: p },
                Err(e) => LemmaOutcome::Failed { message: e.to_string() },
            };
            LemmaCase {
                index: k,
                dim,
                seed: case_seed,
                outcome,
            }
        })
        .collect();
    let mut batch = LemmaBatch {
        checked: 0,
        skipped: 0,
        failed: 0,
        violations: 0,
        secondary_violations: 0,
        min_relative_slack: f64::INFINITY,
        cases: Vec::new(),
    };
    for case in &cases {
        match &case.outcome {
            LemmaOutcome::Checked(rep) => {
                batch.checked += 1;
                batch.violations += usize::from(!rep.slack_ok);
                batch.secondary_violations += usize::from(!(rep.stationarity_ok && rep.lift_ok));
                batch.min_relative_slack = batch.min_relative_slack.min(rep.slack / rep.tolerance);
            }
            LemmaOutcome::Skipped { .. } => batch.skipped += 1,
            LemmaOutcome::Failed { .. } => batch.failed += 1,
        }
    }
    batch.cases = cases;
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::models::{cylinder, plane_projector, sphere};

    fn budget() -> SearchBudget {
        SearchBudget::default().with_restarts(16)
    }

    #[test]
    fn lift_of_identity_is_identity() {
        let t = lift_with_constant(&sphere(5, 1.0), 2.0);
        assert_eq!(t, CurvatureTensor::identity(6));
    }

    #[test]
    fn lift_keeps_bianchi() {
        let r = random_tensor(5, 2, RandomClass::BianchiGeneric);
        let t = lift_with_constant(&r, 0.7);
        assert!(t.bianchi_residual() <= r.bianchi_residual() + 1e-15);
        assert_eq!(t.get(1, 5, 1, 5), 0.35);
        assert_eq!(t.get(1, 5, 2, 5), 0.0);
        assert_eq!(t.get(0, 2, 1, 3), r.get(0, 2, 1, 3));
    }

    #[test]
    fn perturbed_cylinder() {
        let r = cylinder(5, 1.0) - plane_projector(5, 0, 4).scaled(0.05);
        let rep = lemma31_stress(&r, &budget()).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.lift_value.abs() < 1e-8);
    }

    #[test]
    fn scale_covariance() {
        let r = random_tensor(6, 11, RandomClass::NearPic1Boundary);
        let a = lemma31_stress(&r, &budget()).unwrap();
        let b = lemma31_stress(&r.scaled(2.0), &budget()).unwrap();
        assert!((b.c - 2.0 * a.c).abs() < 1e-8 * a.c.max(1.0));
        assert!((b.slack - 4.0 * a.slack).abs() < 1e-7 * (1.0 + a.slack.abs()));
        assert_eq!(a.slack_ok, b.slack_ok);
    }

    #[test]
    fn sphere_is_vacuous() {
        assert!(matches!(lemma31_stress(&sphere(5, 1.0), &budget()), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn small_batch() {
        let batch = lemma31_batch(6, &[5, 6, 7], 3, &SearchBudget::default().with_restarts(8)).unwrap();
        assert_eq!(batch.cases.len(), 6);
        assert!(batch.cases.iter().enumerate().all(|(k, c)| c.index == k));
        assert_eq!(batch.violations, 0);
    }
}
