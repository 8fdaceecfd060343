//! Frame functionals with analytic gradients.
//!
//! A 4-point pulled-back component is `R(u,v,w,x) = (u∧v)ᵀ M (w∧x)`. With
//! `η = M(w∧x)` read as an antisymmetric matrix `H`, this is `uᵀHv`, so
//! `∂/∂u = Hv` and `∂/∂v = −Hu`.

use super::{FrameComponents, Mode};
use crate::curvature::{pair_count, wedge, CurvatureTensor};

/// A smooth function of an orthonormal `k`-frame in ℝⁿ and box parameters.
pub(crate) trait FrameObjective: Sync {
    fn dim(&self) -> usize;
    fn frame_len(&self) -> usize;
    fn bounds(&self) -> &[(f64, f64)];
    /// Magnitude used for relative stopping tolerances.
    fn scale(&self) -> f64;
    /// Value, and the Euclidean gradient when `grad` is given.
    fn eval(&self, rows: &[f64], params: &[f64], grad: Option<(&mut [f64], &mut [f64])>) -> f64;
    /// Exact minimization over the parameters with the frame held fixed.
    fn polish(&self, _rows: &[f64], _params: &mut [f64]) {}
}

/// Minimizes `α + βt² − 2γt` over `[lo, hi]`.
pub(crate) fn quad_min(alpha: f64, beta: f64, gamma: f64, lo: f64, hi: f64) -> (f64, f64) {
    let f = |t: f64| alpha + beta * t * t - 2.0 * gamma * t;
    let mut best = (lo, f(lo));
    let fh = f(hi);
    if fh < best.1 {
        best = (hi, fh);
    }
    if beta > 0.0 {
        let t = gamma / beta;
        if t > lo && t < hi {
            let ft = f(t);
            if ft < best.1 {
                best = (t, ft);
            }
        }
    }
    best
}

fn matvec(m: &[f64], n2: usize, w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n2];
    for (p, o) in out.iter_mut().enumerate() {
        let row = &m[p * n2..(p + 1) * n2];
        *o = row.iter().zip(w).map(|(a, b)| a * b).sum();
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out += coef · H(η) v` where `H_ij = η_(ij)` for `i<j`, antisymmetric.
fn h_apply(eta: &[f64], v: &[f64], n: usize, coef: f64, out: &mut [f64]) {
    let mut p = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let e = coef * eta[p];
            out[i] += e * v[j];
            out[j] -= e * v[i];
            p += 1;
        }
    }
}

fn flat(r: &CurvatureTensor) -> Vec<f64> {
    let m = r.matrix();
    let n2 = m.nrows();
    let mut out = Vec::with_capacity(n2 * n2);
    for p in 0..n2 {
        for q in 0..n2 {
            out.push(m[(p, q)]);
        }
    }
    out
}

/// Which functional of the four frame vectors is minimized.
#[derive(Clone, Copy, Debug)]
pub(crate) enum IsotropicKind {
    Margin(Mode),
    /// `Z/(1−λ²)` with the PIC1 numerator, `λ ∈ [0, λ_max]`.
    Ratio,
}

pub(crate) struct IsotropicObjective {
    n: usize,
    m: Vec<f64>,
    kind: IsotropicKind,
    bounds: Vec<(f64, f64)>,
    scale: f64,
}

struct Pulled {
    c: FrameComponents,
    mw13: Vec<f64>,
    mw14: Vec<f64>,
    mw23: Vec<f64>,
    mw24: Vec<f64>,
    mw12: Vec<f64>,
    mw34: Vec<f64>,
}

impl IsotropicObjective {
    pub(crate) fn margin(r: &CurvatureTensor, mode: Mode) -> Self {
        Self {
            n: r.dim(),
            m: flat(r),
            kind: IsotropicKind::Margin(mode),
            bounds: vec![(0.0, 1.0); mode.n_params()],
            scale: r.norm(),
        }
    }

    pub(crate) fn ratio(r: &CurvatureTensor, lambda_max: f64) -> Self {
        Self {
            n: r.dim(),
            m: flat(r),
            kind: IsotropicKind::Ratio,
            bounds: vec![(0.0, lambda_max)],
            scale: r.norm(),
        }
    }

    fn pull(&self, rows: &[f64]) -> Pulled {
        let n = self.n;
        let n2 = pair_count(n);
        let e = |a: usize| &rows[a * n..(a + 1) * n];
        let w13 = wedge(e(0), e(2));
        let w14 = wedge(e(0), e(3));
        let w23 = wedge(e(1), e(2));
        let w24 = wedge(e(1), e(3));
        let w12 = wedge(e(0), e(1));
        let w34 = wedge(e(2), e(3));
        let mw13 = matvec(&self.m, n2, &w13);
        let mw14 = matvec(&self.m, n2, &w14);
        let mw23 = matvec(&self.m, n2, &w23);
        let mw24 = matvec(&self.m, n2, &w24);
        let mw34 = matvec(&self.m, n2, &w34);
        let mw12 = matvec(&self.m, n2, &w12);
        let c = FrameComponents {
            r1313: dot(&w13, &mw13),
            r1414: dot(&w14, &mw14),
            r2323: dot(&w23, &mw23),
            r2424: dot(&w24, &mw24),
            r1234: dot(&w12, &mw34),
        };
        Pulled {
            c,
            mw13,
            mw14,
            mw23,
            mw24,
            mw12,
            mw34,
        }
    }

    /// Coefficients `(c13, c14, c23, c24, c1234)` of the functional.
    fn coefficients(&self, params: &[f64]) -> [f64; 5] {
        match self.kind {
            IsotropicKind::Margin(Mode::Pic) => [1.0, 1.0, 1.0, 1.0, -2.0],
            IsotropicKind::Margin(Mode::Pic1) => {
                let l = params[0];
                [1.0, l * l, 1.0, l * l, -2.0 * l]
            }
            IsotropicKind::Margin(Mode::Pic2) => {
                let (l, u) = (params[0], params[1]);
                [1.0, l * l, u * u, l * l * u * u, -2.0 * l * u]
            }
            IsotropicKind::Ratio => {
                let l = params[0];
                let s = 1.0 / (1.0 - l * l);
                [s, l * l * s, s, l * l * s, -2.0 * l * s]
            }
        }
    }

    fn frame_grad(&self, rows: &[f64], p: &Pulled, k: [f64; 5], g: &mut [f64]) {
        let n = self.n;
        g.iter_mut().for_each(|x| *x = 0.0);
        let e = |a: usize| &rows[a * n..(a + 1) * n];
        let (g1, rest) = g.split_at_mut(n);
        let (g2, rest) = rest.split_at_mut(n);
        let (g3, g4) = rest.split_at_mut(n);
        h_apply(&p.mw13, e(2), n, 2.0 * k[0], g1);
        h_apply(&p.mw14, e(3), n, 2.0 * k[1], g1);
        h_apply(&p.mw34, e(1), n, k[4], g1);

        h_apply(&p.mw23, e(2), n, 2.0 * k[2], g2);
        h_apply(&p.mw24, e(3), n, 2.0 * k[3], g2);
        h_apply(&p.mw34, e(0), n, -k[4], g2);

        h_apply(&p.mw13, e(0), n, -2.0 * k[0], g3);
        h_apply(&p.mw23, e(1), n, -2.0 * k[2], g3);
        h_apply(&p.mw12, e(3), n, k[4], g3);

        h_apply(&p.mw14, e(0), n, -2.0 * k[1], g4);
        h_apply(&p.mw24, e(1), n, -2.0 * k[3], g4);
        h_apply(&p.mw12, e(2), n, -k[4], g4);
    }
}

impl FrameObjective for IsotropicObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn frame_len(&self) -> usize {
        4
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn eval(&self, rows: &[f64], params: &[f64], grad: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let p = self.pull(rows);
        let c = p.c;
        let k = self.coefficients(params);
        let value = k[0] * c.r1313 + k[1] * c.r1414 + k[2] * c.r2323 + k[3] * c.r2424 + k[4] * c.r1234;
        if let Some((gf, gp)) = grad {
            self.frame_grad(rows, &p, k, gf);
            match self.kind {
                IsotropicKind::Margin(Mode::Pic) => {}
                IsotropicKind::Margin(Mode::Pic1) => {
                    let l = params[0];
                    gp[0] = 2.0 * l * (c.r1414 + c.r2424) - 2.0 * c.r1234;
                }
                IsotropicKind::Margin(Mode::Pic2) => {
                    let (l, u) = (params[0], params[1]);
                    gp[0] = 2.0 * l * c.r1414 + 2.0 * l * u * u * c.r2424 - 2.0 * u * c.r1234;
                    gp[1] = 2.0 * u * c.r2323 + 2.0 * l * l * u * c.r2424 - 2.0 * l * c.r1234;
                }
                IsotropicKind::Ratio => {
                    let l = params[0];
                    let d = 1.0 - l * l;
                    let z = c.r1313 + c.r2323 + l * l * (c.r1414 + c.r2424) - 2.0 * l * c.r1234;
                    let dz = 2.0 * l * (c.r1414 + c.r2424) - 2.0 * c.r1234;
                    gp[0] = (dz * d + 2.0 * l * z) / (d * d);
                }
            }
        }
        value
    }

    fn polish(&self, rows: &[f64], params: &mut [f64]) {
        let c = self.pull(rows).c;
        match self.kind {
            IsotropicKind::Margin(Mode::Pic) => {}
            IsotropicKind::Margin(Mode::Pic1) => {
                params[0] = quad_min(c.r1313 + c.r2323, c.r1414 + c.r2424, c.r1234, 0.0, 1.0).0;
            }
            IsotropicKind::Margin(Mode::Pic2) => {
                let (l, u) = pic2_argmin(&c, (params[0], params[1]));
                params[0] = l;
                params[1] = u;
            }
            IsotropicKind::Ratio => {
                params[0] = ratio_argmin(&c, self.bounds[0].1).0;
            }
        }
    }
}

/// Minimizer of the PIC2 functional over `[0,1]²` for a fixed frame.
/// It is quadratic in each parameter separately, so alternate exact 1-D
/// minimizations from the current point and a few `μ` seeds; each run is
/// monotone and the box is small enough that the seeds cover every basin.
pub(crate) fn pic2_argmin(c: &FrameComponents, current: (f64, f64)) -> (f64, f64) {
    let value = |l: f64, u: f64| c.value(Mode::Pic2, l, u);
    let mut best = (current.0, current.1, value(current.0, current.1));
    for seed in [current.1, 0.0, 0.25, 0.5, 0.75, 1.0] {
        let (mut l, mut u) = (0.0, seed);
        for _ in 0..64 {
            let (l0, u0) = (l, u);
            l = quad_min(c.r1313 + u * u * c.r2323, c.r1414 + u * u * c.r2424, u * c.r1234, 0.0, 1.0).0;
            u = quad_min(c.r1313 + l * l * c.r1414, c.r2323 + l * l * c.r2424, l * c.r1234, 0.0, 1.0).0;
            if l == l0 && u == u0 {
                break;
            }
        }
        let v = value(l, u);
        if v < best.2 {
            best = (l, u, v);
        }
    }
    (best.0, best.1)
}

/// Exact minimizer of `Z(λ)/(1−λ²)` over `[0, λ_max]` for a fixed frame.
/// Interior critical points solve `Cλ² − (A+B)λ + C = 0` with
/// `A = R₁₃₁₃+R₂₃₂₃`, `B = R₁₄₁₄+R₂₄₂₄`, `C = R₁₂₃₄`.
pub(crate) fn ratio_argmin(c: &FrameComponents, lambda_max: f64) -> (f64, f64) {
    let a = c.r1313 + c.r2323;
    let b = c.r1414 + c.r2424;
    let cc = c.r1234;
    let ratio = |l: f64| (a + l * l * b - 2.0 * l * cc) / (1.0 - l * l);
    let mut cands = vec![0.0, lambda_max];
    if cc != 0.0 {
        let disc = (a + b) * (a + b) - 4.0 * cc * cc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair of roots
            let q = 0.5 * ((a + b) + (a + b).signum() * sq);
            if q != 0.0 {
                cands.push(q / cc);
                cands.push(cc / q);
            }
        }
    }
    cands
        .into_iter()
        .filter(|l| (0.0..=lambda_max).contains(l))
        .map(|l| (l, ratio(l)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("endpoints are candidates")
}

/// `−(Ric(e₁,e₁) + Ric(e₂,e₂) − 2R₁₂₁₂)` over 2-frames; its minimum is minus
/// the frame-maximum of `Ric₁₁+Ric₂₂−2R₁₂₁₂`.
pub(crate) struct RicciPairObjective {
    n: usize,
    m: Vec<f64>,
    ric: Vec<f64>,
    scale: f64,
}

impl RicciPairObjective {
    pub(crate) fn new(r: &CurvatureTensor) -> Self {
        let n = r.dim();
        let ric = r.ricci();
        Self {
            n,
            m: flat(r),
            ric: (0..n * n).map(|k| ric.get(k / n, k % n)).collect(),
            scale: r.norm(),
        }
    }
}

fn ric_apply(ric: &[f64], n: usize, v: &[f64], coef: f64, out: &mut [f64]) {
    for i in 0..n {
        out[i] += coef * dot(&ric[i * n..(i + 1) * n], v);
    }
}

impl FrameObjective for RicciPairObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn frame_len(&self) -> usize {
        2
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &[]
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn eval(&self, rows: &[f64], _params: &[f64], grad: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let n = self.n;
        let (e1, e2) = (&rows[..n], &rows[n..2 * n]);
        let w12 = wedge(e1, e2);
        let mw12 = matvec(&self.m, pair_count(n), &w12);
        let r1212 = dot(&w12, &mw12);
        let mut re1 = vec![0.0; n];
        let mut re2 = vec![0.0; n];
        ric_apply(&self.ric, n, e1, 1.0, &mut re1);
        ric_apply(&self.ric, n, e2, 1.0, &mut re2);
        let value = -(dot(e1, &re1) + dot(e2, &re2) - 2.0 * r1212);
        if let Some((gf, _)) = grad {
            let (g1, g2) = gf.split_at_mut(n);
            for i in 0..n {
                g1[i] = -2.0 * re1[i];
                g2[i] = -2.0 * re2[i];
            }
            h_apply(&mw12, e2, n, 4.0, g1);
            h_apply(&mw12, e1, n, -4.0, g2);
        }
        value
    }
}

/// `Ric(e₁,e₁) − Ric(e₂,e₂)` over 2-frames; minimum is `λ_min − λ_max`.
pub(crate) struct RicciSpreadObjective {
    n: usize,
    ric: Vec<f64>,
    scale: f64,
}

impl RicciSpreadObjective {
    pub(crate) fn new(ric: &crate::curvature::SymmetricForm) -> Self {
        let n = ric.dim();
        Self {
            n,
            ric: (0..n * n).map(|k| ric.get(k / n, k % n)).collect(),
            scale: ric.norm_sq().sqrt(),
        }
    }
}

impl FrameObjective for RicciSpreadObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn frame_len(&self) -> usize {
        2
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &[]
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn eval(&self, rows: &[f64], _params: &[f64], grad: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let n = self.n;
        let (e1, e2) = (&rows[..n], &rows[n..2 * n]);
        let mut re1 = vec![0.0; n];
        let mut re2 = vec![0.0; n];
        ric_apply(&self.ric, n, e1, 1.0, &mut re1);
        ric_apply(&self.ric, n, e2, 1.0, &mut re2);
        if let Some((gf, _)) = grad {
            for i in 0..n {
                gf[i] = 2.0 * re1[i];
                gf[n + i] = -2.0 * re2[i];
            }
        }
        dot(e1, &re1) - dot(e2, &re2)
    }
}
