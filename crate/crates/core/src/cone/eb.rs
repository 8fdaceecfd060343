//! The three E(b) conditions on `S` at parameters `θ, ω`:
//!
//! 1. `S − (θ/2)·scal(S)·I ∈ C_PIC`;
//! 2. `Ric(S)₁₁ + Ric(S)₂₂ ≥ 0` for every orthonormal pair;
//! 3. `Ric(S)₂₂ − Ric(S)₁₁ ≤ √(ω·scal(S)·Σ_{p≥3}(T₁ₚ₁ₚ+T₂ₚ₂ₚ))` for every
//!    orthonormal frame, with `T = (θ/2)·scal(S)·I`.
//!
//! The sum in (3) is `θ(n−2)·scal(S)`, and the largest Ricci difference over
//! orthonormal pairs is the spectral spread, so (3) reads
//! `λ_max − λ_min ≤ √(ωθ(n−2))·scal(S)`.

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureTensor;
use crate::error::{Error, Result};
use crate::frame::margin::ric_two_smallest;
use crate::frame::{minimize, uniform_pic_margin, MembershipReport, RicciSpreadObjective, SearchBudget};

const SPREAD_STREAM: u64 = 6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EbReport {
    pub theta: f64,
    pub omega: f64,
    pub scal: f64,
    pub ricci_eigenvalues: Vec<f64>,
    /// Uniform PIC search at `θ/2`.
    pub cond_i: MembershipReport,
    pub pass_i: bool,
    /// `λ₁ + λ₂` of `Ric(S)`.
    pub cond_ii: f64,
    pub pass_ii: bool,
    /// `λ_max − λ_min`.
    pub spread: f64,
    /// Largest `Ric₂₂ − Ric₁₁` found by searching orthonormal pairs.
    pub spread_sampled: f64,
    /// `|spread − spread_sampled|`.
    pub spread_agreement: f64,
    /// `√(ωθ(n−2))·scal(S)`.
    pub bound_iii: f64,
    /// `bound_iii − spread`.
    pub cond_iii: f64,
    pub pass_iii: bool,
}

impl EbReport {
    pub fn all_pass(&self) -> bool {
        self.pass_i && self.pass_ii && self.pass_iii
    }

    /// Smallest of the three condition margins.
    pub fn margin(&self) -> f64 {
        self.cond_i.margin.min(self.cond_ii).min(self.cond_iii)
    }
}

/// Evaluates the three conditions; requires `scal(S) > 0`.
pub fn eb_check(s: &CurvatureTensor, theta: f64, omega: f64, budget: &SearchBudget) -> Result<EbReport> {
    let scal = s.scalar();
    if !(scal > 0.0) {
        return Err(Error::NonpositiveScal(scal));
    }
    if !(omega > 0.0) {
        return Err(Error::BadParameter { name: "omega", value: omega });
    }
    let n = s.dim();
    let floor = budget.weak_threshold(scal);

    let cond_i = uniform_pic_margin(s, theta / 2.0, budget)?;
    let pass_i = cond_i.margin >= floor;

    let ric = s.ricci();
    let ricci_eigenvalues = ric.eigenvalues();
    let cond_ii = ric_two_smallest(&ric);
    let pass_ii = cond_ii >= floor;

    let spread = ricci_eigenvalues.last().copied().unwrap_or(0.0) - ricci_eigenvalues.first().copied().unwrap_or(0.0);
    // the objective is Ric₁₁ − Ric₂₂, so its minimum is minus the spread
    let spread_sampled = -minimize(&RicciSpreadObjective::new(&ric), budget, &[], SPREAD_STREAM).value;
    let bound_iii = (omega * theta * (n as f64 - 2.0)).sqrt() * scal;
    let cond_iii = bound_iii - spread;

    Ok(EbReport {
        theta,
        omega,
        scal,
        ricci_eigenvalues,
        pass_i,
        cond_i,
        cond_ii,
        pass_ii,
        spread,
        spread_sampled,
        spread_agreement: (spread - spread_sampled).abs(),
        bound_iii,
        cond_iii,
        pass_iii: cond_iii >= floor,
    })
}
