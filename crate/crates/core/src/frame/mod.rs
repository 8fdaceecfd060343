//! Isotropic-curvature functionals over orthonormal 4-frames.
//!
//! For a frame `(e₁,e₂,e₃,e₄)` and `λ, μ ∈ [0,1]`:
//!
//! ```text
//! PIC   R₁₃₁₃ +   R₁₄₁₄ +   R₂₃₂₃ +      R₂₄₂₄ −   2R₁₂₃₄
//! PIC1  R₁₃₁₃ + λ²R₁₄₁₄ +   R₂₃₂₃ +    λ²R₂₄₂₄ −  2λR₁₂₃₄
//! PIC2  R₁₃₁₃ + λ²R₁₄₁₄ + μ²R₂₃₂₃ + λ²μ²R₂₄₂₄ − 2λμR₁₂₃₄
//! ```
//!
//! The cone margin is the minimum over all admissible configurations.

pub(crate) mod margin;
mod objective;
mod oracle;
mod optimizer;
mod p1;

use serde::{Deserialize, Serialize};

use crate::curvature::{pair_count, wedge, CurvatureTensor};
use crate::error::{Error, Result};

pub use margin::{classify, cone_margin, ric_two_smallest, uniform_pic_margin, Classification};
pub use oracle::{oracle_margin, oracle_search};
pub use p1::{lambda_tilde, p1, verify_lambda_tilde, P1Report};
pub(crate) use objective::RicciSpreadObjective;
pub(crate) use optimizer::minimize;

/// Which isotropic-curvature cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "PIC")]
    Pic,
    #[serde(rename = "PIC1")]
    Pic1,
    #[serde(rename = "PIC2")]
    Pic2,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Pic => "PIC",
            Mode::Pic1 => "PIC1",
            Mode::Pic2 => "PIC2",
        }
    }

    /// Number of free parameters among `(λ, μ)`.
    pub fn n_params(self) -> usize {
        match self {
            Mode::Pic => 0,
            Mode::Pic1 => 1,
            Mode::Pic2 => 2,
        }
    }
}

/// An ordered orthonormal 4-frame plus `λ, μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Frame vectors as rows.
    pub frame: Vec<Vec<f64>>,
    pub lambda: f64,
    pub mu: f64,
}

impl FrameConfig {
    /// Validates orthonormality to `1e-12` and clamps `λ, μ` into `[0,1]`.
    pub fn new(frame: Vec<Vec<f64>>, lambda: f64, mu: f64) -> Result<Self> {
        let cfg = Self {
            frame,
            lambda: lambda.clamp(0.0, 1.0),
            mu: mu.clamp(0.0, 1.0),
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Coordinate frame `(e_a, e_b, e_c, e_d)` with 0-based axis indices.
    pub fn coordinate(n: usize, axes: [usize; 4], lambda: f64, mu: f64) -> Result<Self> {
        let frame = axes
            .iter()
            .map(|&a| {
                let mut v = vec![0.0; n];
                v[a] = 1.0;
                v
            })
            .collect();
        Self::new(frame, lambda, mu)
    }

    pub(crate) fn from_rows(rows: &[f64], n: usize, lambda: f64, mu: f64) -> Self {
        Self {
            frame: rows.chunks(n).map(<[f64]>::to_vec).collect(),
            lambda,
            mu,
        }
    }

    pub fn dim(&self) -> usize {
        self.frame.first().map_or(0, Vec::len)
    }

    pub(crate) fn rows(&self) -> Vec<f64> {
        self.frame.iter().flatten().copied().collect()
    }

    /// Max deviation of `F Fᵀ` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, u) in self.frame.iter().enumerate() {
            for (b, v) in self.frame.iter().enumerate() {
                let dot: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn check(&self) -> Result<()> {
        let n = self.dim();
        if self.frame.len() != 4 || n < 4 || self.frame.iter().any(|r| r.len() != n) {
            return Err(Error::NonOrthonormalFrame(f64::NAN));
        }
        let defect = self.orthonormality_defect();
        if !(defect <= 1e-12) {
            return Err(Error::NonOrthonormalFrame(defect));
        }
        Ok(())
    }
}

/// The five pulled-back components the functionals need.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameComponents {
    pub r1313: f64,
    pub r1414: f64,
    pub r2323: f64,
    pub r2424: f64,
    pub r1234: f64,
}

impl FrameComponents {
    /// `R_{abcd}(F) = Σ F_a^i F_b^j F_c^k F_d^l R_{ijkl}` for the needed
    /// index patterns; `rows` holds `e₁..e₄` row-major.
    pub fn compute(r: &CurvatureTensor, rows: &[f64]) -> Self {
        let n = r.dim();
        let e = |a: usize| &rows[a * n..(a + 1) * n];
        let m = r.matrix();
        let quad = |w1: &[f64], w2: &[f64]| -> f64 {
            let n2 = pair_count(n);
            let mut acc = 0.0;
            for p in 0..n2 {
                let mut row = 0.0;
                for q in 0..n2 {
                    row += m[(p, q)] * w2[q];
                }
                acc += w1[p] * row;
            }
            acc
        };
        let w13 = wedge(e(0), e(2));
        let w14 = wedge(e(0), e(3));
        let w23 = wedge(e(1), e(2));
        let w24 = wedge(e(1), e(3));
        let w12 = wedge(e(0), e(1));
        let w34 = wedge(e(2), e(3));
        Self {
            r1313: quad(&w13, &w13),
            r1414: quad(&w14, &w14),
            r2323: quad(&w23, &w23),
            r2424: quad(&w24, &w24),
            r1234: quad(&w12, &w34),
        }
    }

    pub fn value(&self, mode: Mode, lambda: f64, mu: f64) -> f64 {
        match mode {
            Mode::Pic => self.r1313 + self.r1414 + self.r2323 + self.r2424 - 2.0 * self.r1234,
            Mode::Pic1 => {
                self.r1313 + lambda * lambda * self.r1414 + self.r2323 + lambda * lambda * self.r2424
                    - 2.0 * lambda * self.r1234
            }
            Mode::Pic2 => {
                let (l2, m2) = (lambda * lambda, mu * mu);
                self.r1313 + l2 * self.r1414 + m2 * self.r2323 + l2 * m2 * self.r2424
                    - 2.0 * lambda * mu * self.r1234
            }
        }
    }
}

/// Value of the mode's functional at `cfg`. `μ` is ignored for PIC and
/// PIC1, `λ` for PIC.
pub fn isotropic_value(r: &CurvatureTensor, cfg: &FrameConfig, mode: Mode) -> Result<f64> {
    cfg.check()?;
    if cfg.dim() != r.dim() {
        return Err(Error::DimMismatch(cfg.dim(), r.dim()));
    }
    Ok(FrameComponents::compute(r, &cfg.rows()).value(mode, cfg.lambda, cfg.mu))
}

/// Multi-start search settings. Everything is seeded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBudget {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Random configurations drawn per restart; the best one starts descent.
    pub presamples: usize,
    /// When set, also run the brute-force oracle with this many samples,
    /// refine its best configuration and report the gap.
    pub oracle_samples: Option<usize>,
    /// Projected-gradient stopping tolerance, relative to `‖R‖`.
    pub gtol: f64,
    /// "Weakly in cone": margin ≥ −tol_weak·(1+scal).
    pub tol_weak: f64,
    /// "Interior": margin > tol_interior·(1+scal).
    pub tol_interior: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            restarts: 64,
            iterations: 500,
            seed: 0,
            presamples: 8,
            oracle_samples: None,
            gtol: 1e-11,
            tol_weak: 1e-8,
            tol_interior: 1e-6,
        }
    }
}

impl SearchBudget {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn weak_threshold(&self, scal: f64) -> f64 {
        -self.tol_weak * (1.0 + scal.abs())
    }

    pub fn interior_threshold(&self, scal: f64) -> f64 {
        self.tol_interior * (1.0 + scal.abs())
    }

    pub fn verdict(&self, margin: f64, scal: f64) -> Verdict {
        if margin > self.interior_threshold(scal) {
            Verdict::Interior
        } else if margin >= self.weak_threshold(scal) {
            Verdict::Weak
        } else {
            Verdict::Outside
        }
    }
}

/// Membership classification of a margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Interior,
    Weak,
    Outside,
}

impl Verdict {
    pub fn in_cone(self) -> bool {
        !matches!(self, Verdict::Outside)
    }
}

/// Result of a cone-margin search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub mode: Mode,
    pub margin: f64,
    pub witness: FrameConfig,
    pub verdict: Verdict,
    pub restarts_used: usize,
    pub refinement_iterations: usize,
    /// `false` when the best descent hit the iteration cap before meeting
    /// the gradient tolerance.
    pub converged: bool,
    /// `margin − oracle value` when an oracle run was requested.
    pub oracle_gap: Option<f64>,
}

impl MembershipReport {
    /// Turns an unconverged report into `BudgetExhausted`.
    pub fn budget_flagged(&self) -> bool {
        !self.converged
    }
}
