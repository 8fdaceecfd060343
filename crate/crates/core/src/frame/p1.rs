//! The deviation functional `p₁ = min{0, inf Z/(1−λ²)}` over frames and
//! `λ ∈ [0,1)`, with `Z` the PIC1 numerator.
//!
//! For strictly PIC `R` with PIC margin `ε`, `Z(1) ≥ ε` and
//! `|∂Z/∂λ| ≤ 6‖R‖`, so `Z > 0` on `(λ̃, 1)` for `λ̃ = 1 − ε/(6‖R‖)`. A
//! negative infimum is therefore attained on `[0, λ̃]`, which is where the
//! search runs.

use serde::{Deserialize, Serialize};

use super::margin::cone_margin;
use super::objective::{IsotropicObjective, RicciPairObjective};
use super::optimizer::{minimize, Point};
use super::{FrameComponents, FrameConfig, Mode, SearchBudget};
use crate::curvature::CurvatureTensor;
use crate::error::{Error, Result};
use crate::sampling;

/// The ratio is never evaluated at or beyond this `λ`.
pub const LAMBDA_CEILING: f64 = 1.0 - 1e-9;

/// Frames × `λ ∈ (λ̃,1)` drawn by [`verify_lambda_tilde`].
pub const LAMBDA_TILDE_SAMPLES: usize = 4096;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct P1Report {
    /// `min{0, ratio_min}`.
    pub value: f64,
    /// Smallest `Z/(1−λ²)` found on `[0, λ̃]`.
    pub ratio_min: f64,
    /// Frame and `λ` attaining `ratio_min` (`μ` unused, set to 1).
    pub witness: FrameConfig,
    pub pic_margin: f64,
    pub lambda_tilde: f64,
    /// Smallest sampled `Z` on `(λ̃, 1)`; positive when the cutoff holds.
    pub lambda_tilde_check: f64,
    /// `−max_frames(Ric₁₁+Ric₂₂−2R₁₂₁₂)/(n−4)`; absent for `n = 4`.
    pub lower_bound: Option<f64>,
    /// The same expression at the witness's `(e₁, e₂)`.
    pub pointwise_lower_bound: Option<f64>,
    /// Whether the witness `λ` lies strictly inside `(0, λ̃)` with `p₁ < 0`.
    pub interior: bool,
    /// First-order residuals at an interior witness, with `c = −p₁`:
    /// `λ(R₁₄₁₄+R₂₄₂₄) − R₁₂₃₄ − cλ` and `R₁₃₁₃+R₂₃₂₃ − λR₁₂₃₄ + c`.
    pub stationarity: Option<[f64; 2]>,
    pub restarts_used: usize,
    pub converged: bool,
}

/// `max(0, 1 − eps/(6‖R‖))`.
pub fn lambda_tilde(r: &CurvatureTensor, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::NonpositiveEps(eps));
    }
    let norm = r.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - eps / (6.0 * norm)).max(0.0))
}

/// Smallest PIC1 numerator over random frames and `λ` drawn in
/// `(λ̃, 1)`; the cutoff is sound when this is positive.
pub fn verify_lambda_tilde(r: &CurvatureTensor, lt: f64, samples: usize, seed: u64) -> f64 {
    use rand::Rng;
    let n = r.dim();
    let mut rng = sampling::rng(seed, 0x1A3B);
    let mut worst = f64::INFINITY;
    for k in 0..samples.max(1) {
        let rows = sampling::random_frame(&mut rng, 4, n);
        let c = FrameComponents::compute(r, &rows);
        // include points hugging both ends of the interval
        let t = match k % 4 {
            0 => 1e-12,
            1 => 1.0 - 1e-12,
            _ => rng.gen::<f64>(),
        };
        let l = lt + (1.0 - lt) * t;
        worst = worst.min(c.value(Mode::Pic1, l, 1.0));
    }
    worst
}

fn pair_bound(r: &CurvatureTensor, rows: &[f64]) -> f64 {
    let n = r.dim();
    let ric = r.ricci();
    let (e1, e2) = (&rows[..n], &rows[n..2 * n]);
    let r1212 = r.eval4(e1, e2, e1, e2);
    ric.quad(e1) + ric.quad(e2) - 2.0 * r1212
}

/// Computes `p₁` for a strictly PIC tensor.
pub fn p1(r: &CurvatureTensor, budget: &SearchBudget) -> Result<P1Report> {
    let n = r.dim();
    let pic = cone_margin(r, Mode::Pic, budget);
    let threshold = budget.interior_threshold(r.scalar());
    if !(pic.margin > threshold) {
        return Err(Error::NotStrictlyPic {
            margin: pic.margin,
            threshold,
        });
    }
    let lt = lambda_tilde(r, pic.margin)?.min(LAMBDA_CEILING);
    let lambda_tilde_check = verify_lambda_tilde(r, lt, LAMBDA_TILDE_SAMPLES, budget.seed);

    let obj = IsotropicObjective::ratio(r, lt);
    let warm = Point {
        rows: pic.witness.rows(),
        params: vec![0.0],
    };
    let out = minimize(&obj, budget, &[warm], 4);
    let lambda = out.point.params[0];
    let comps = FrameComponents::compute(r, &out.point.rows);
    let ratio_min = comps.value(Mode::Pic1, lambda, 1.0) / (1.0 - lambda * lambda);
    let value = ratio_min.min(0.0);
    let witness = FrameConfig::from_rows(&out.point.rows, n, lambda, 1.0);

    let interior = value < 0.0 && lambda > 1e-9 && lambda < lt - 1e-9;
    let stationarity = interior.then(|| {
        let c = -value;
        let a = comps.r1313 + comps.r2323;
        let b = comps.r1414 + comps.r2424;
        [lambda * b - comps.r1234 - c * lambda, a - lambda * comps.r1234 + c]
    });

    let (lower_bound, pointwise_lower_bound) = if n > 4 {
        let scale = 1.0 / (n as f64 - 4.0);
        let pair = minimize(&RicciPairObjective::new(r), budget, &[], 5);
        // the objective is the negated bracket, so its minimum is −max
        (
            Some(pair.value * scale),
            Some(-pair_bound(r, &out.point.rows) * scale),
        )
    } else {
        (None, None)
    };

    Ok(P1Report {
        value,
        ratio_min,
        witness,
        pic_margin: pic.margin,
        lambda_tilde: lt,
        lambda_tilde_check,
        lower_bound,
        pointwise_lower_bound,
        interior,
        stationarity,
        restarts_used: out.restarts_used,
        converged: out.converged && pic.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::models::{cylinder, plane_projector, sphere};

    fn budget() -> SearchBudget {
        SearchBudget::default().with_restarts(16)
    }

    #[test]
    fn lambda_tilde_formula() {
        let i = sphere(5, 1.0);
        let lt = lambda_tilde(&i, 4.0).unwrap();
        assert!((lt - (1.0 - 4.0 / (6.0 * i.norm()))).abs() < 1e-15);
        assert_eq!(lambda_tilde(&i, 6.0 * i.norm()).unwrap(), 0.0);
        assert!(matches!(lambda_tilde(&i, 0.0), Err(Error::NonpositiveEps(_))));
        let scaled = lambda_tilde(&i.scaled(3.0), 12.0).unwrap();
        assert!((scaled - lt).abs() < 1e-15);
        assert!(verify_lambda_tilde(&i, lt, 500, 1) > 0.0);
    }

    #[test]
    fn sphere_and_cylinder_vanish() {
        assert_eq!(p1(&sphere(5, 1.0), &budget()).unwrap().value, 0.0);
        let cyl = p1(&cylinder(5, 1.0), &budget()).unwrap();
        assert_eq!(cyl.value, 0.0);
        assert!(cyl.ratio_min.abs() < 1e-9);
    }

    #[test]
    fn perturbed_cylinder_is_negative() {
        let r = cylinder(5, 1.0) - plane_projector(5, 0, 4).scaled(0.05);
        let rep = p1(&r, &budget()).unwrap();
        assert!(rep.value < 0.0);
        assert!(rep.lower_bound.unwrap() <= rep.value);
        assert!(rep.lambda_tilde_check > 0.0);
    }

    #[test]
    fn flat_is_rejected() {
        assert!(matches!(
            p1(&CurvatureTensor::zeros(5), &budget()),
            Err(Error::NotStrictlyPic { .. })
        ));
    }
}
