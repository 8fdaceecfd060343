//! Pinching cones: the E(b) pullback conditions, the Hamilton ODE
//! `dR/dt = Q(R)`, and numerical probes of the cone axioms.

mod eb;
mod flow;
mod lemma;
mod pipeline;
mod probe;

use serde::{Deserialize, Serialize};

pub use eb::{eb_check, EbReport};
pub use flow::{hamilton_flow, FlowOptions, FlowTrajectory};
pub use lemma::{lemma31_batch, lemma31_stress, lift_with_constant, LemmaBatch, LemmaCase, LemmaOutcome, LemmaReport};
pub use pipeline::{critical_theta, theorem11_pipeline, OmegaSchedule, PipelineReport, PipelineRow, DEFAULT_B_GRID};
pub use probe::{axiom_probes, invariance_probe, AxiomReport, ProbeReport};

use crate::curvature::{a_of_b, CurvatureTensor, PinchingTransform, TransformParams};
use crate::error::{Error, Result};
use crate::frame::margin::cone_margin_seeded;
use crate::frame::{FrameConfig, Mode, SearchBudget};

/// Which cone, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ConeSpec {
    #[serde(rename = "PIC")]
    Pic,
    #[serde(rename = "PIC1")]
    Pic1,
    #[serde(rename = "PIC2")]
    Pic2,
    /// `R − θ·scal·I ∈ C_PIC`.
    UniformPic { theta: f64 },
    /// `R ∈ C(b)` iff `S = l_{a,b}⁻¹(R)` satisfies the three E(b)
    /// conditions at `θ, ω`.
    EbPullback {
        theta: f64,
        b: f64,
        a: f64,
        omega: f64,
        /// Whether `a` came from `a_of_b`.
        derived: bool,
    },
}

impl ConeSpec {
    /// E(b) pullback cone with `a = a(b)`.
    pub fn eb_pullback(theta: f64, b: f64, omega: f64, dim: usize) -> Result<Self> {
        let p = a_of_b(b, dim)?;
        Ok(Self::EbPullback {
            theta,
            b,
            a: p.a,
            omega,
            derived: true,
        })
    }

    /// Short column label, e.g. `PIC1` or `UPIC(0.01)`.
    pub fn label(&self) -> String {
        match self {
            ConeSpec::Pic => "PIC".into(),
            ConeSpec::Pic1 => "PIC1".into(),
            ConeSpec::Pic2 => "PIC2".into(),
            ConeSpec::UniformPic { theta } => format!("UPIC({theta})"),
            ConeSpec::EbPullback { theta, b, omega, .. } => format!("EB({theta};{b};{omega})"),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let positive = |name: &'static str, value: f64| {
            if value > 0.0 {
                Ok(())
            } else {
                Err(Error::BadParameter { name, value })
            }
        };
        match *self {
            ConeSpec::UniformPic { theta } => positive("theta", theta),
            ConeSpec::EbPullback {
                theta,
                b,
                a,
                omega,
                derived,
            } => {
                positive("theta", theta)?;
                positive("omega", omega)?;
                if !(b >= 0.0) {
                    return Err(Error::BadParameter { name: "b", value: b });
                }
                if derived {
                    let expect = a_of_b(b, dim)?.a;
                    if a != expect {
                        return Err(Error::BadParameter { name: "a", value: a });
                    }
                } else if !(a >= 0.0) {
                    return Err(Error::BadParameter { name: "a", value: a });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn mode(&self) -> Option<Mode> {
        match self {
            ConeSpec::Pic => Some(Mode::Pic),
            ConeSpec::Pic1 => Some(Mode::Pic1),
            ConeSpec::Pic2 => Some(Mode::Pic2),
            _ => None,
        }
    }
}

/// Margin and, for frame-based cones, the minimizing configuration.
#[derive(Clone, Debug)]
pub(crate) struct SpecMargin {
    pub value: f64,
    pub witness: Option<FrameConfig>,
}

/// Signed margin of `r` in the cone; `warm` seeds the frame search.
///
/// For the E(b) pullback the margin is the smallest of the three condition
/// margins of `S = l_{a,b}⁻¹(R)`, each of which is positively homogeneous
/// of degree one.
pub(crate) fn spec_margin(
    r: &CurvatureTensor,
    spec: &ConeSpec,
    budget: &SearchBudget,
    warm: Option<&FrameConfig>,
) -> Result<SpecMargin> {
    spec.validate(r.dim())?;
    let warm: Vec<FrameConfig> = warm.cloned().into_iter().collect();
    if let Some(mode) = spec.mode() {
        let rep = cone_margin_seeded(r, mode, budget, &warm);
        return Ok(SpecMargin {
            value: rep.margin,
            witness: Some(rep.witness),
        });
    }
    match *spec {
        ConeSpec::UniformPic { theta } => {
            let shifted = crate::frame::margin::uniform_shift(r, theta);
            let rep = cone_margin_seeded(&shifted, Mode::Pic, budget, &warm);
            Ok(SpecMargin {
                value: rep.margin,
                witness: Some(rep.witness),
            })
        }
        ConeSpec::EbPullback {
            theta, b, a, omega, ..
        } => {
            let t = PinchingTransform::new(r.dim(), TransformParams::new(a, b)?)?;
            let s = t.inverse(r)?;
            if !(s.scalar() > 0.0) {
                // the conditions are only defined for positive scalar curvature
                return Ok(SpecMargin {
                    value: s.scalar().min(0.0),
                    witness: None,
                });
            }
            let rep = eb_check(&s, theta, omega, budget)?;
            Ok(SpecMargin {
                value: rep.margin(),
                witness: Some(rep.cond_i.witness.clone()),
            })
        }
        _ => unreachable!("frame cones handled above"),
    }
}

/// Signed margin of `r` in `spec`.
pub fn cone_value(r: &CurvatureTensor, spec: &ConeSpec, budget: &SearchBudget) -> Result<f64> {
    Ok(spec_margin(r, spec, budget, None)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::models::{cylinder, sphere};

    #[test]
    fn spec_validation() {
        assert!(ConeSpec::UniformPic { theta: 0.0 }.validate(5).is_err());
        let eb = ConeSpec::eb_pullback(0.01, 0.1, 10.0, 9).unwrap();
        eb.validate(9).unwrap();
        if let ConeSpec::EbPullback { a, .. } = eb {
            assert!((a - 0.729 / 5.2).abs() < 1e-15);
        }
        let bad = ConeSpec::EbPullback {
            theta: 0.01,
            b: 0.1,
            a: 0.2,
            omega: 1.0,
            derived: true,
        };
        assert!(bad.validate(9).is_err());
    }

    #[test]
    fn frame_cone_values() {
        let b = SearchBudget::default().with_restarts(8);
        assert!((cone_value(&sphere(5, 1.0), &ConeSpec::Pic1, &b).unwrap() - 2.0).abs() < 1e-9);
        let u = cone_value(&cylinder(5, 1.0), &ConeSpec::UniformPic { theta: 0.01 }, &b).unwrap();
        // PIC value 2 at the axis-free frame minus θ·scal·4
        assert!((u - (2.0 - 0.01 * 12.0 * 4.0)).abs() < 1e-9, "{u}");
    }

    #[test]
    fn labels_and_serde() {
        let spec = ConeSpec::UniformPic { theta: 0.5 };
        assert_eq!(spec.label(), "UPIC(0.5)");
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"UniformPic","theta":0.5}"#);
        let back: ConeSpec = serde_json::from_str(r#"{"kind":"PIC2"}"#).unwrap();
        assert_eq!(back, ConeSpec::Pic2);
    }
}
