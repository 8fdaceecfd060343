//! Multi-start descent on orthonormal frames × a parameter box.
//!
//! Each restart draws a few random configurations, keeps the best, then
//! runs Riemannian L-BFGS on the frame (tangent projection
//! `G − sym(G Xᵀ) X`, Gram–Schmidt retraction, Armijo backtracking).
//! Restarts run in parallel and the reduction is by `(value, restart index)`, so results do not
//! depend on scheduling.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;

use super::objective::FrameObjective;
use super::SearchBudget;
use crate::sampling;

/// A frame (rows, `k×n` row-major) plus box parameters.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Point {
    pub rows: Vec<f64>,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Local {
    pub point: Point,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct SearchOutcome {
    pub point: Point,
    pub value: f64,
    pub restarts_used: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `G − sym(G Xᵀ) X` for row frames.
fn tangent(rows: &[f64], g: &[f64], k: usize, n: usize) -> Vec<f64> {
    let mut gx = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            gx[a * k + b] = (0..n).map(|i| g[a * n + i] * rows[b * n + i]).sum();
        }
    }
    let mut out = g.to_vec();
    for a in 0..k {
        for b in 0..k {
            let s = 0.5 * (gx[a * k + b] + gx[b * k + a]);
            for i in 0..n {
                out[a * n + i] -= s * rows[b * n + i];
            }
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Memory length of the quasi-Newton approximation.
const MEMORY: usize = 8;

/// Two-loop recursion: `−H g` from stored `(s, y)` pairs.
fn lbfgs_direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push((rho, a));
    }
    if let Some((s, y)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y), (rho, a)) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Value and Riemannian gradient with the parameters minimized out.
fn evaluate(obj: &dyn FrameObjective, rows: &[f64], params: &mut [f64]) -> (f64, Vec<f64>) {
    let (k, n) = (obj.frame_len(), obj.dim());
    obj.polish(rows, params);
    let mut gf = vec![0.0; k * n];
    let mut gp = vec![0.0; params.len()];
    let f = obj.eval(rows, params, Some((&mut gf, &mut gp)));
    (f, tangent(rows, &gf, k, n))
}

/// Local descent from `start`: L-BFGS on the frame with a projected
/// direction and Gram–Schmidt retraction. The box parameters are re-solved
/// exactly at every trial frame, so the function being descended is the
/// frame-only envelope and its gradient is the frame gradient at the
/// polished parameters.
pub(crate) fn descend(obj: &dyn FrameObjective, start: Point, max_iter: usize, gtol: f64) -> Local {
    let (k, n) = (obj.frame_len(), obj.dim());
    let scale = obj.scale();
    let tol = gtol * scale;
    let mut x = start;
    let (mut f, mut g) = evaluate(obj, &x.rows, &mut x.params);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(MEMORY);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        let gn = norm_sq(&g).sqrt();
        if !(gn > tol) {
            converged = gn <= tol;
            break;
        }
        let mut d = tangent(&x.rows, &lbfgs_direction(&g, &pairs), k, n);
        let mut slope = dot(&g, &d);
        if !(slope < -1e-12 * gn * norm_sq(&d).sqrt()) {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let dn = norm_sq(&d).sqrt();
        let mut t: f64 = if pairs.is_empty() { 0.1 / gn.max(1e-300) } else { 1.0 };
        t = t.min(0.5 / dn);
        // differences below a few ulps of f are rounding, not ascent
        let slack = 8.0 * f64::EPSILON * (f.abs() + scale);

        let mut accepted = None;
        for _ in 0..50 {
            let mut rows: Vec<f64> = x.rows.iter().zip(&d).map(|(r, di)| r + t * di).collect();
            if sampling::orthonormalize_rows(&mut rows, k, n) {
                let mut params = x.params.clone();
                let (ft, gt) = evaluate(obj, &rows, &mut params);
                if ft.is_finite() && ft <= f + 1e-4 * t * slope + slack {
                    accepted = Some((Point { rows, params }, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((nx, nf, ng)) = accepted else {
            if pairs.is_empty() {
                converged = gn <= 1e-6 * scale;
                break;
            }
            pairs.clear();
            continue;
        };
        let s: Vec<f64> = nx.rows.iter().zip(&x.rows).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = ng.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * norm_sq(&s).sqrt() * norm_sq(&y).sqrt() {
            if pairs.len() == MEMORY {
                pairs.pop_front();
            }
            pairs.push_back((s, y));
        }
        x = nx;
        f = nf;
        g = ng;
    }

    if !converged {
        let refined = newton_refine(obj, x, f, g, tol);
        x = refined.0;
        f = refined.1;
        converged = refined.2;
    }
    Local {
        point: x,
        value: f,
        iterations,
        converged,
    }
}

/// Orthonormal basis of the tangent space at a row frame `X` (`k×n`):
/// `(x_b, −x_a)/√2` in rows `(a, b)` for `a<b`, and a complement vector in
/// a single row.
fn tangent_basis(rows: &[f64], k: usize, n: usize) -> Vec<Vec<f64>> {
    let mut full = rows.to_vec();
    for axis in 0..n {
        if full.len() == n * n {
            break;
        }
        let mut cand = vec![0.0; n];
        cand[axis] = 1.0;
        let m = full.len() / n;
        for _ in 0..2 {
            for b in 0..m {
                let d: f64 = (0..n).map(|i| cand[i] * full[b * n + i]).sum();
                for i in 0..n {
                    cand[i] -= d * full[b * n + i];
                }
            }
        }
        let norm = norm_sq(&cand).sqrt();
        if norm > 1e-6 {
            full.extend(cand.iter().map(|c| c / norm));
        }
    }
    let mut basis = Vec::new();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..k {
        for b in (a + 1)..k {
            let mut v = vec![0.0; k * n];
            for i in 0..n {
                v[a * n + i] = h * rows[b * n + i];
                v[b * n + i] = -h * rows[a * n + i];
            }
            basis.push(v);
        }
    }
    for a in 0..k {
        for c in k..n {
            let mut v = vec![0.0; k * n];
            v[a * n..(a + 1) * n].copy_from_slice(&full[c * n..(c + 1) * n]);
            basis.push(v);
        }
    }
    basis
}

fn retract(rows: &[f64], dir: &[f64], t: f64, k: usize, n: usize) -> Option<Vec<f64>> {
    let mut out: Vec<f64> = rows.iter().zip(dir).map(|(r, d)| r + t * d).collect();
    sampling::orthonormalize_rows(&mut out, k, n).then_some(out)
}

/// Newton steps with a central-difference Hessian of the Riemannian
/// gradient in a tangent basis. Eigenvalues are taken in absolute value
/// and tiny ones dropped, which copes with the flat directions that frame
/// symmetries of the functionals create.
fn newton_refine(
    obj: &dyn FrameObjective,
    mut x: Point,
    mut f: f64,
    mut g: Vec<f64>,
    tol: f64,
) -> (Point, f64, bool) {
    let (k, n) = (obj.frame_len(), obj.dim());
    let scale = obj.scale();
    for _ in 0..30 {
        if norm_sq(&g).sqrt() <= tol {
            return (x, f, true);
        }
        let basis = tangent_basis(&x.rows, k, n);
        let dim = basis.len();
        let h = 1e-5;
        let mut hess = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for (j, bj) in basis.iter().enumerate() {
            let grad_at = |t: f64| {
                let rows = retract(&x.rows, bj, t, k, n)?;
                let mut params = x.params.clone();
                Some(evaluate(obj, &rows, &mut params).1)
            };
            let (Some(gp), Some(gm)) = (grad_at(h), grad_at(-h)) else {
                return (x, f, false);
            };
            for (i, bi) in basis.iter().enumerate() {
                hess[(i, j)] = (dot(bi, &gp) - dot(bi, &gm)) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let coords = nalgebra::DVector::from_iterator(dim, basis.iter().map(|b| dot(b, &g)));
        let eig = hess.symmetric_eigen();
        let top = eig.eigenvalues.amax();
        let mut step_coords = nalgebra::DVector::<f64>::zeros(dim);
        for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
            if ev.abs() > 1e-10 * top.max(1e-300) {
                let v = eig.eigenvectors.column(idx);
                step_coords -= v * (v.dot(&coords) / ev.abs());
            }
        }
        let mut dir = vec![0.0; k * n];
        for (c, b) in step_coords.iter().zip(&basis) {
            dir.iter_mut().zip(b).for_each(|(d, bi)| *d += c * bi);
        }
        let slack = 8.0 * f64::EPSILON * (f.abs() + scale);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..20 {
            if let Some(rows) = retract(&x.rows, &dir, t, k, n) {
                let mut params = x.params.clone();
                let (ft, gt) = evaluate(obj, &rows, &mut params);
                if ft <= f + slack && norm_sq(&gt) < norm_sq(&g) || ft < f - slack {
                    x = Point { rows, params };
                    f = ft;
                    g = gt;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let gn = norm_sq(&g).sqrt();
    (x, f, gn <= tol)
}

fn random_point<R: Rng>(obj: &dyn FrameObjective, rng: &mut R) -> Point {
    let rows = sampling::random_frame(rng, obj.frame_len(), obj.dim());
    let params = obj.bounds().iter().map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect();
    Point { rows, params }
}

/// Best coordinate-axis frame, parameters polished exactly. All ordered
/// axis tuples for small `n`; a seeded sample of them otherwise.
fn coordinate_start(obj: &dyn FrameObjective, seed: u64) -> Point {
    let (k, n) = (obj.frame_len(), obj.dim());
    let mid: Vec<f64> = obj.bounds().iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    if n <= 8 {
        let mut cur = Vec::with_capacity(k);
        fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for a in 0..n {
                if !cur.contains(&a) {
                    cur.push(a);
                    rec(n, k, cur, out);
                    cur.pop();
                }
            }
        }
        rec(n, k, &mut cur, &mut tuples);
    } else {
        let mut rng = sampling::rng(seed, 0xC00D);
        for _ in 0..2048 {
            let mut t: Vec<usize> = Vec::with_capacity(k);
            while t.len() < k {
                let a = rng.gen_range(0..n);
                if !t.contains(&a) {
                    t.push(a);
                }
            }
            tuples.push(t);
        }
    }
    let mut best: Option<(f64, Point)> = None;
    for t in tuples {
        for sign in [1.0, -1.0] {
            let mut rows = vec![0.0; k * n];
            for (a, &axis) in t.iter().enumerate() {
                rows[a * n + axis] = if a + 1 == k { sign } else { 1.0 };
            }
            let mut params = mid.clone();
            obj.polish(&rows, &mut params);
            let v = obj.eval(&rows, &params, None);
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, Point { rows, params }));
            }
        }
    }
    best.expect("at least one tuple").1
}

enum Start<'a> {
    Given(&'a Point),
    Coordinate,
    Random(u64),
}

/// Multi-start minimization. `warm` starts are descended first and count
/// toward `budget.restarts`; `stream` separates seed schedules of different
/// searches sharing one budget seed.
pub(crate) fn minimize(
    obj: &dyn FrameObjective,
    budget: &SearchBudget,
    warm: &[Point],
    stream: u64,
) -> SearchOutcome {
    let total = budget.restarts.max(warm.len() + 1);
    let mut starts: Vec<Start> = warm.iter().map(Start::Given).collect();
    starts.push(Start::Coordinate);
    let mut r = 0u64;
    while starts.len() < total {
        starts.push(Start::Random(r));
        r += 1;
    }
    let presamples = budget.presamples.max(1);
    let mut results: Vec<Local> = starts
        .par_iter()
        .map(|s| {
            let x0 = match s {
                Start::Given(p) => (*p).clone(),
                Start::Coordinate => coordinate_start(obj, sampling::mix(budget.seed, stream)),
                Start::Random(i) => {
                    let mut rng = sampling::rng(budget.seed, sampling::mix(stream, *i));
                    let mut best = random_point(obj, &mut rng);
                    let mut bv = obj.eval(&best.rows, &best.params, None);
                    for _ in 1..presamples {
                        let p = random_point(obj, &mut rng);
                        let v = obj.eval(&p.rows, &p.params, None);
                        if v < bv {
                            best = p;
                            bv = v;
                        }
                    }
                    best
                }
            };
            descend(obj, x0, budget.iterations, budget.gtol)
        })
        .collect();
    let restarts_used = results.len();
    let best_idx = (0..results.len())
        .min_by(|&a, &b| results[a].value.total_cmp(&results[b].value).then(a.cmp(&b)))
        .expect("at least one restart");
    // A capped best restart still counts as settled when a converged
    // restart reached the same value.
    let agree = 1e-9 * obj.scale();
    let converged = results
        .iter()
        .any(|l| l.converged && l.value <= results[best_idx].value + agree);
    let best = results.swap_remove(best_idx);
    SearchOutcome {
        point: best.point,
        value: best.value,
        restarts_used,
        iterations: best.iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::objective::RicciSpreadObjective;
    use crate::curvature::SymmetricForm;

    #[test]
    fn tangent_projection_is_tangent() {
        let mut rng = sampling::rng(1, 1);
        let x = sampling::random_frame(&mut rng, 4, 7);
        let g = sampling::gaussian_vec(&mut rng, 28);
        let t = tangent(&x, &g, 4, 7);
        // X Tᵀ + T Xᵀ = 0
        for a in 0..4 {
            for b in 0..4 {
                let xt: f64 = (0..7).map(|i| x[a * 7 + i] * t[b * 7 + i]).sum();
                let tx: f64 = (0..7).map(|i| t[a * 7 + i] * x[b * 7 + i]).sum();
                assert!((xt + tx).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn finds_spectral_spread() {
        let ric = SymmetricForm::diagonal(&[3.0, -1.0, 0.5, 2.0, 7.0]);
        let obj = RicciSpreadObjective::new(&ric);
        let out = minimize(&obj, &SearchBudget::default().with_restarts(8), &[], 0);
        assert!((out.value - (-8.0)).abs() < 1e-10, "{}", out.value);
        assert!(out.converged);
    }
}
