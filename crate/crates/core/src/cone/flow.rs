//! Dormand–Prince 5(4) integration of `dR/dt = Q(R)` on the pair-basis
//! matrix, re-projected onto the Bianchi subspace after every accepted step.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{spec_margin, ConeSpec};
use crate::curvature::CurvatureTensor;
use crate::error::{Error, Result};
use crate::frame::{FrameConfig, SearchBudget};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowOptions {
    /// Relative and absolute error tolerance per component.
    pub tol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    /// Stop once `scal` exceeds this.
    pub scal_limit: f64,
    /// Stop once the proposed step falls below this.
    pub min_step: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            initial_step: 1e-4,
            max_steps: 100_000,
            scal_limit: 1e12,
            min_step: 1e-14,
        }
    }
}

impl FlowOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Accepted states of one trajectory, starting with `t = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<CurvatureTensor>,
    pub cones: Vec<ConeSpec>,
    /// `margins[k][c]`: margin of `states[k]` in `cones[c]`.
    pub margins: Vec<Vec<f64>>,
    pub scal: Vec<f64>,
    pub bianchi_residuals: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl FlowTrajectory {
    /// Columns `t, scal`, then one margin column per cone.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,scal");
        for c in &self.cones {
            let _ = write!(out, ",{}", c.label());
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:e},{:e}", self.scal[k]);
            for m in &self.margins[k] {
                let _ = write!(out, ",{m:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn last(&self) -> &CurvatureTensor {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn rhs(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    CurvatureTensor::from_matrix_unchecked(n, m.clone()).q().matrix().clone()
}

struct Recorder<'a> {
    traj: FlowTrajectory,
    budget: &'a SearchBudget,
    warm: Vec<Option<FrameConfig>>,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, state: CurvatureTensor) -> Result<()> {
        let mut row = Vec::with_capacity(self.traj.cones.len());
        for (c, spec) in self.traj.cones.iter().enumerate() {
            let m = spec_margin(&state, spec, self.budget, self.warm[c].as_ref())?;
            row.push(m.value);
            self.warm[c] = m.witness;
        }
        self.traj.times.push(t);
        self.traj.margins.push(row);
        self.traj.scal.push(state.scalar());
        self.traj.bianchi_residuals.push(state.bianchi_residual());
        self.traj.states.push(state);
        Ok(())
    }

    fn blow_up(self, reason: String) -> Error {
        Error::BlowUpReached {
            reason,
            trajectory: Box::new(self.traj),
        }
    }
}

/// Integrates to `t_end`, recording each requested cone's margin at every
/// accepted step with the previous witness as warm start.
pub fn hamilton_flow(
    r0: &CurvatureTensor,
    t_end: f64,
    cones: &[ConeSpec],
    options: &FlowOptions,
    budget: &SearchBudget,
) -> Result<FlowTrajectory> {
    if !(t_end > 0.0) {
        return Err(Error::BadParameter { name: "t_end", value: t_end });
    }
    if !(options.tol > 0.0) {
        return Err(Error::BadParameter { name: "tol", value: options.tol });
    }
    let n = r0.dim();
    for spec in cones {
        spec.validate(n)?;
    }
    let mut rec = Recorder {
        traj: FlowTrajectory {
            times: Vec::new(),
            states: Vec::new(),
            cones: cones.to_vec(),
            margins: Vec::new(),
            scal: Vec::new(),
            bianchi_residuals: Vec::new(),
            accepted: 0,
            rejected: 0,
        },
        budget,
        warm: vec![None; cones.len()],
    };
    let start = r0.bianchi_projected();
    let mut y = start.matrix().clone();
    rec.record(0.0, start)?;

    let mut t = 0.0;
    let mut h = options.initial_step.min(t_end);
    let mut k1 = rhs(&y, n);
    let mut steps = 0;
    while t < t_end {
        if steps >= options.max_steps {
            return Err(rec.blow_up(format!("step limit {} reached", options.max_steps)));
        }
        steps += 1;
        let last = t_end - t <= h;
        if last {
            h = t_end - t;
        }
        let mut k = vec![k1.clone()];
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    ys += kj * (h * A[s][j]);
                }
            }
            k.push(rhs(&ys, n));
        }
        let mut y5 = y.clone();
        let mut err = DMatrix::zeros(y.nrows(), y.ncols());
        for s in 0..7 {
            if B5[s] != 0.0 {
                y5 += &k[s] * (h * B5[s]);
            }
            err += &k[s] * (h * (B5[s] - B4[s]));
        }
        let mut ratio: f64 = 0.0;
        for ((e, a), b) in err.iter().zip(y.iter()).zip(y5.iter()) {
            let sc = options.tol * (1.0 + a.abs().max(b.abs()));
            ratio = ratio.max(e.abs() / sc);
        }
        if !ratio.is_finite() {
            ratio = f64::INFINITY;
        }
        if ratio <= 1.0 {
            t = if last { t_end } else { t + h };
            let state = CurvatureTensor::from_matrix_unchecked(n, y5).bianchi_projected();
            y = state.matrix().clone();
            k1 = rhs(&y, n);
            rec.traj.accepted += 1;
            let scal = state.scalar();
            rec.record(t, state)?;
            if scal.abs() > options.scal_limit {
                return Err(rec.blow_up(format!("scalar curvature {scal:.3e} exceeded the limit")));
            }
        } else {
            rec.traj.rejected += 1;
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if t < t_end && h < options.min_step {
            return Err(rec.blow_up(format!("step size {h:.3e} collapsed")));
        }
    }
    Ok(rec.traj)
}
