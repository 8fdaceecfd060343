//! Numerical probes of the pinching-cone axioms: convexity, `O(n)`
//! invariance, transversal invariance under `dR/dt = Q(R)`, and `I` in the
//! interior.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{spec_margin, ConeSpec};
use crate::curvature::models::random_tensor;
use crate::curvature::{CurvatureTensor, RandomClass};
use crate::error::{Error, Result};
use crate::frame::SearchBudget;
use crate::sampling;

/// Directional derivative of the margin along `Q(R)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub margin: f64,
    pub h: f64,
    /// `(m(R + hQ) − m(R))/h`.
    pub quotient_h: f64,
    /// The same at `h/2`.
    pub quotient_half: f64,
    /// `2·quotient_half − quotient_h`.
    pub extrapolated: f64,
    /// `|quotient_h − quotient_half| / max(|quotient_h|, |quotient_half|)`,
    /// zero when both vanish.
    pub relative_change: f64,
}

/// Finite-difference probe at a point near the boundary, that is with
/// `|margin| ≤ 1e−3·(1+scal)`.
pub fn invariance_probe(r: &CurvatureTensor, cone: &ConeSpec, h: f64, budget: &SearchBudget) -> Result<ProbeReport> {
    if !(h > 0.0) {
        return Err(Error::BadParameter { name: "h", value: h });
    }
    let base = spec_margin(r, cone, budget, None)?;
    let tolerance = 1e-3 * (1.0 + r.scalar().abs());
    if base.value.abs() > tolerance {
        return Err(Error::NotNearBoundary {
            margin: base.value,
            tolerance,
        });
    }
    let q = r.q();
    let at = |step: f64| -> Result<f64> {
        let moved = r + &q.scaled(step);
        Ok(spec_margin(&moved, cone, budget, base.witness.as_ref())?.value)
    };
    let quotient_h = (at(h)? - base.value) / h;
    let quotient_half = (at(h / 2.0)? - base.value) / (h / 2.0);
    let top = quotient_h.abs().max(quotient_half.abs());
    let relative_change = if top == 0.0 {
        0.0
    } else {
        (quotient_h - quotient_half).abs() / top
    };
    Ok(ProbeReport {
        margin: base.value,
        h,
        quotient_h,
        quotient_half,
        extrapolated: 2.0 * quotient_half - quotient_h,
        relative_change,
    })
}

/// Moves `r` along `−I` onto the cone boundary by secant iteration on
/// `t ↦ margin(r − t·I)`.
pub(crate) fn to_boundary(r: &CurvatureTensor, cone: &ConeSpec, budget: &SearchBudget) -> Result<CurvatureTensor> {
    let n = r.dim();
    let id = CurvatureTensor::identity(n);
    let eval = |t: f64| -> Result<f64> { Ok(spec_margin(&(r - &id.scaled(t)), cone, budget, None)?.value) };
    let (mut t0, mut f0) = (0.0, eval(0.0)?);
    let m_id = spec_margin(&id, cone, budget, None)?.value;
    if !(m_id > 0.0) {
        return Err(Error::BadParameter { name: "identity margin", value: m_id });
    }
    let mut t1 = f0 / m_id;
    let mut f1 = eval(t1)?;
    for _ in 0..40 {
        if f1.abs() <= 1e-11 * (1.0 + r.norm()) || f1 == f0 {
            break;
        }
        let t2 = t1 - f1 * (t1 - t0) / (f1 - f0);
        (t0, f0) = (t1, f1);
        t1 = t2;
        f1 = eval(t1)?;
    }
    Ok(r - &id.scaled(t1))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomReport {
    pub cone: ConeSpec,
    pub dim: usize,
    pub samples: usize,
    /// Largest `(m(A)+m(B))/2 − m((A+B)/2)` over sampled members; the margin
    /// is concave, so this should not exceed rounding.
    pub concavity_defect: f64,
    /// Midpoints of members found outside the cone.
    pub convexity_violations: usize,
    /// Largest `|m(O R Oᵀ) − m(R)|`.
    pub rotation_defect: f64,
    /// Smallest Richardson-extrapolated probe at sampled boundary points.
    pub min_transversal: f64,
    pub identity_margin: f64,
    /// Ball radius relative to `‖I‖`.
    pub ball_radius: f64,
    /// Smallest margin of `I + P` over sampled `‖P‖ = radius·‖I‖`.
    pub ball_min_margin: f64,
}

/// Samples boundary points `B_k` by shifting random tensors along `−I`,
/// members `B_k + s·I`, and probes each axiom on them.
pub fn axiom_probes(
    cone: &ConeSpec,
    dim: usize,
    samples: usize,
    ball_radius: f64,
    budget: &SearchBudget,
) -> Result<AxiomReport> {
    cone.validate(dim)?;
    let id = CurvatureTensor::identity(dim);
    let mut rng = sampling::rng(budget.seed, 0xA810);
    let m = |r: &CurvatureTensor| -> Result<f64> { Ok(spec_margin(r, cone, budget, None)?.value) };

    let mut members = Vec::with_capacity(samples);
    let mut min_transversal = f64::INFINITY;
    for k in 0..samples {
        let raw = random_tensor(dim, sampling::mix(budget.seed, 0xA811 + k as u64), RandomClass::BianchiGeneric);
        let boundary = to_boundary(&raw.scaled(1.0 / raw.norm()), cone, budget)?;
        if let Ok(p) = invariance_probe(&boundary, cone, 1e-4, budget) {
            min_transversal = min_transversal.min(p.extrapolated);
        }
        let s: f64 = rng.gen_range(0.0..0.5);
        members.push(boundary + id.scaled(s));
    }

    let mut concavity_defect = f64::NEG_INFINITY;
    let mut convexity_violations = 0;
    let mut rotation_defect: f64 = 0.0;
    for k in 0..members.len() {
        let a = &members[k];
        let b = &members[(k + 1) % members.len()];
        let (ma, mb) = (m(a)?, m(b)?);
        let mid = (a + b).scaled(0.5);
        let mm = m(&mid)?;
        concavity_defect = concavity_defect.max(0.5 * (ma + mb) - mm);
        let floor = budget.weak_threshold(mid.scalar());
        if ma >= budget.weak_threshold(a.scalar()) && mb >= budget.weak_threshold(b.scalar()) && mm < floor {
            convexity_violations += 1;
        }
        let o = sampling::random_orthogonal(&mut rng, dim);
        rotation_defect = rotation_defect.max((m(&a.rotated(&o))? - ma).abs());
    }

    let identity_margin = m(&id)?;
    let mut ball_min_margin = f64::INFINITY;
    for k in 0..samples.max(1) {
        let p = random_tensor(dim, sampling::mix(budget.seed, 0xB411 + k as u64), RandomClass::BianchiGeneric);
        let p = p.scaled(ball_radius * id.norm() / p.norm());
        ball_min_margin = ball_min_margin.min(m(&(&id + &p))?);
    }

    Ok(AxiomReport {
        cone: cone.clone(),
        dim,
        samples,
        concavity_defect,
        convexity_violations,
        rotation_defect,
        min_transversal,
        identity_margin,
        ball_radius,
        ball_min_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::models::{cylinder, sphere};

    fn budget() -> SearchBudget {
        SearchBudget::default().with_restarts(8)
    }

    #[test]
    fn rejects_interior_points() {
        let err = invariance_probe(&sphere(5, 1.0), &ConeSpec::Pic, 1e-4, &budget());
        assert!(matches!(err, Err(Error::NotNearBoundary { .. })));
    }

    #[test]
    fn cylinder_probe_vanishes() {
        // Q(cylinder) is a positive multiple of the cylinder, so the margin
        // stays at zero along the direction
        let rep = invariance_probe(&cylinder(5, 1.0), &ConeSpec::Pic2, 1e-4, &budget()).unwrap();
        assert!(rep.extrapolated.abs() < 1e-6, "{rep:?}");
        let rep1 = invariance_probe(&cylinder(5, 1.0), &ConeSpec::Pic1, 1e-4, &budget()).unwrap();
        assert!(rep1.extrapolated >= -1e-6, "{rep1:?}");
    }

    #[test]
    fn boundary_shift_lands_on_boundary() {
        let r = random_tensor(5, 3, RandomClass::BianchiGeneric);
        for cone in [ConeSpec::Pic, ConeSpec::Pic1] {
            let b = to_boundary(&r, &cone, &budget()).unwrap();
            let m = spec_margin(&b, &cone, &budget(), None).unwrap().value;
            assert!(m.abs() < 1e-9, "{m}");
        }
    }

    #[test]
    fn pic_axioms() {
        let rep = axiom_probes(&ConeSpec::Pic, 5, 3, 0.05, &budget()).unwrap();
        assert!(rep.concavity_defect <= 1e-9, "{rep:?}");
        assert_eq!(rep.convexity_violations, 0);
        assert!(rep.rotation_defect < 1e-9);
        assert!(rep.identity_margin > 0.0 && rep.ball_min_margin > 0.0);
        assert!(rep.min_transversal >= -1e-6, "{rep:?}");
    }
}
