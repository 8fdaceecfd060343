//! Brute-force oracles shared by the integration tests. They use only the
//! public tensor accessors, never the search code under test.

#![allow(dead_code)]

use icclab::sampling;
use icclab::CurvatureTensor;
use rand::Rng;

fn row(rows: &[f64], n: usize, a: usize) -> &[f64] {
    &rows[a * n..(a + 1) * n]
}

/// Random orthonormal `k`-frame in ℝⁿ by Gram–Schmidt on Gaussian rows.
pub fn frame<R: Rng>(rng: &mut R, k: usize, n: usize) -> Vec<f64> {
    sampling::random_frame(rng, k, n)
}

/// `Z/(1−λ²)` minimized over a λ grid on `[0, lmax]` for one frame.
fn ratio_on_grid(r: &CurvatureTensor, rows: &[f64], lmax: f64) -> f64 {
    let n = r.dim();
    let (e1, e2, e3, e4) = (row(rows, n, 0), row(rows, n, 1), row(rows, n, 2), row(rows, n, 3));
    let a = r.eval4(e1, e3, e1, e3) + r.eval4(e2, e3, e2, e3);
    let b = r.eval4(e1, e4, e1, e4) + r.eval4(e2, e4, e2, e4);
    let c = r.eval4(e1, e2, e3, e4);
    (0..=200)
        .map(|k| {
            let l = lmax * k as f64 / 200.0;
            (a + l * l * b - 2.0 * l * c) / (1.0 - l * l)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Small random rotation of a frame: perturb and re-orthonormalize.
fn jiggle<R: Rng>(rng: &mut R, rows: &[f64], k: usize, n: usize, step: f64) -> Vec<f64> {
    let mut out: Vec<f64> = rows
        .iter()
        .map(|x| x + step * rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    sampling::orthonormalize_rows(&mut out, k, n);
    out
}

/// Hill-climbing minimum of `f` over `k`-frames, started from the best of
/// `samples` random frames.
pub fn frame_min<F: Fn(&[f64]) -> f64>(f: F, k: usize, n: usize, samples: usize, climbs: usize, seed: u64) -> f64 {
    let mut rng = sampling::rng(seed, 0x7E57);
    let mut best = frame(&mut rng, k, n);
    let mut fb = f(&best);
    for _ in 1..samples {
        let cand = frame(&mut rng, k, n);
        let fc = f(&cand);
        if fc < fb {
            best = cand;
            fb = fc;
        }
    }
    let mut step = 0.3;
    for _ in 0..climbs {
        let cand = jiggle(&mut rng, &best, k, n, step);
        let fc = f(&cand);
        if fc < fb {
            best = cand;
            fb = fc;
        } else {
            step = (step * 0.97).max(1e-7);
        }
    }
    fb
}

/// Upper estimate of `p₁` restricted to `λ ≤ lmax`.
pub fn p1_oracle(r: &CurvatureTensor, lmax: f64, seed: u64) -> f64 {
    frame_min(|rows| ratio_on_grid(r, rows, lmax), 4, r.dim(), 2000, 3000, seed).min(0.0)
}

/// Lower estimate of `max_frames(Ric₁₁ + Ric₂₂ − 2R₁₂₁₂)`.
pub fn pair_bracket_max(r: &CurvatureTensor, seed: u64) -> f64 {
    let ric = r.ricci();
    let n = r.dim();
    -frame_min(
        |rows| {
            let (e1, e2) = (row(rows, n, 0), row(rows, n, 1));
            -(ric.quad(e1) + ric.quad(e2) - 2.0 * r.eval4(e1, e2, e1, e2))
        },
        2,
        n,
        2000,
        3000,
        seed,
    )
}
