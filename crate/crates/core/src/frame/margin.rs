//! Cone margins and membership classification.

use serde::{Deserialize, Serialize};

use super::objective::IsotropicObjective;
use super::optimizer::{minimize, Point};
use super::oracle::oracle_search;
use super::{FrameComponents, FrameConfig, MembershipReport, Mode, SearchBudget};
use crate::curvature::{CurvatureTensor, SymmetricForm};
use crate::error::{Error, Result};

fn stream(mode: Mode) -> u64 {
    match mode {
        Mode::Pic => 1,
        Mode::Pic1 => 2,
        Mode::Pic2 => 3,
    }
}

/// Parameters of a point written back as a frame config; unused parameters
/// are set to 1 so that a PIC witness is a PIC1 configuration with the same
/// value, and a PIC1 witness a PIC2 one.
fn to_config(p: &Point, n: usize, mode: Mode) -> FrameConfig {
    let (l, u) = match mode {
        Mode::Pic => (1.0, 1.0),
        Mode::Pic1 => (p.params[0], 1.0),
        Mode::Pic2 => (p.params[0], p.params[1]),
    };
    FrameConfig::from_rows(&p.rows, n, l, u)
}

fn to_point(cfg: &FrameConfig, mode: Mode) -> Point {
    let params = match mode {
        Mode::Pic => vec![],
        Mode::Pic1 => vec![cfg.lambda],
        Mode::Pic2 => vec![cfg.lambda, cfg.mu],
    };
    Point {
        rows: cfg.rows(),
        params,
    }
}

fn value_at(r: &CurvatureTensor, cfg: &FrameConfig, mode: Mode) -> f64 {
    FrameComponents::compute(r, &cfg.rows()).value(mode, cfg.lambda, cfg.mu)
}

/// Margin search with extra warm-start configurations. The reported
/// margin is the functional re-evaluated at the witness, and never exceeds
/// the value at any warm start.
pub(crate) fn cone_margin_seeded(
    r: &CurvatureTensor,
    mode: Mode,
    budget: &SearchBudget,
    warm: &[FrameConfig],
) -> MembershipReport {
    let n = r.dim();
    let mut starts: Vec<FrameConfig> = warm.to_vec();
    let oracle = budget
        .oracle_samples
        .map(|s| oracle_search(r, mode, s, budget.seed));
    if let Some((_, cfg)) = &oracle {
        starts.push(cfg.clone());
    }
    let points: Vec<Point> = starts.iter().map(|c| to_point(c, mode)).collect();
    let obj = IsotropicObjective::margin(r, mode);
    let out = minimize(&obj, budget, &points, stream(mode));

    let mut witness = to_config(&out.point, n, mode);
    let mut margin = value_at(r, &witness, mode);
    for cfg in &starts {
        let v = value_at(r, cfg, mode);
        if v < margin {
            margin = v;
            witness = cfg.clone();
        }
    }
    MembershipReport {
        mode,
        margin,
        witness,
        verdict: budget.verdict(margin, r.scalar()),
        restarts_used: out.restarts_used,
        refinement_iterations: out.iterations,
        converged: out.converged,
        oracle_gap: oracle.map(|(v, _)| margin - v),
    }
}

/// Minimum of the mode's functional over all frames and parameters.
pub fn cone_margin(r: &CurvatureTensor, mode: Mode, budget: &SearchBudget) -> MembershipReport {
    cone_margin_seeded(r, mode, budget, &[])
}

/// `R − θ·scal(R)·I` shifted tensor.
pub(crate) fn uniform_shift(r: &CurvatureTensor, theta: f64) -> CurvatureTensor {
    r - &CurvatureTensor::identity(r.dim()).scaled(theta * r.scalar())
}

/// PIC margin of `R − θ·scal(R)·I`. Verdict thresholds use `scal(R)`.
pub fn uniform_pic_margin(r: &CurvatureTensor, theta: f64, budget: &SearchBudget) -> Result<MembershipReport> {
    if !(theta > 0.0) {
        return Err(Error::BadParameter { name: "theta", value: theta });
    }
    let mut report = cone_margin(&uniform_shift(r, theta), Mode::Pic, budget);
    report.verdict = budget.verdict(report.margin, r.scalar());
    Ok(report)
}

/// Sum of the two smallest eigenvalues (the trace when `dim < 2`).
pub fn ric_two_smallest(ric: &SymmetricForm) -> f64 {
    ric.eigenvalues().iter().take(2).sum()
}

/// Margins for all three modes, plus uniform PIC when `θ` is given.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Classification {
    pub pic: MembershipReport,
    pub pic1: MembershipReport,
    pub pic2: MembershipReport,
    pub uniform_pic: Option<MembershipReport>,
    pub theta: Option<f64>,
}

impl Classification {
    pub fn any_budget_flag(&self) -> bool {
        [&self.pic, &self.pic1, &self.pic2]
            .into_iter()
            .chain(self.uniform_pic.as_ref())
            .any(MembershipReport::budget_flagged)
    }
}

/// Runs the three mode searches with each witness seeding the next larger
/// parameter set, which makes `PIC2 ≤ PIC1 ≤ PIC` hold exactly.
pub fn classify(r: &CurvatureTensor, budget: &SearchBudget, theta: Option<f64>) -> Result<Classification> {
    let pic = cone_margin(r, Mode::Pic, budget);
    let pic1 = cone_margin_seeded(r, Mode::Pic1, budget, std::slice::from_ref(&pic.witness));
    let pic2 = cone_margin_seeded(r, Mode::Pic2, budget, std::slice::from_ref(&pic1.witness));
    let uniform_pic = theta.map(|t| uniform_pic_margin(r, t, budget)).transpose()?;
    Ok(Classification {
        pic,
        pic1,
        pic2,
        uniform_pic,
        theta,
    })
}
