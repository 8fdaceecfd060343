//! Brute-force sampling oracle, independent of the descent code: random
//! Gaussian frames orthonormalized, a dense `λ`/`μ` grid, and every
//! coordinate-axis frame. Its value is an upper bound for the true margin.

use rayon::prelude::*;

use super::{FrameComponents, FrameConfig, Mode};
use crate::curvature::CurvatureTensor;
use crate::sampling;

const GRID: usize = 33;
const CHUNK: usize = 1024;

fn grid() -> Vec<f64> {
    (0..GRID).map(|k| k as f64 / (GRID - 1) as f64).collect()
}

/// Best grid point for one frame.
fn best_on_grid(c: &FrameComponents, mode: Mode, g: &[f64]) -> (f64, f64, f64) {
    match mode {
        Mode::Pic => (c.value(mode, 1.0, 1.0), 1.0, 1.0),
        Mode::Pic1 => g
            .iter()
            .map(|&l| (c.value(mode, l, 1.0), l, 1.0))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("nonempty grid"),
        Mode::Pic2 => g
            .iter()
            .flat_map(|&l| g.iter().map(move |&u| (l, u)))
            .map(|(l, u)| (c.value(mode, l, u), l, u))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("nonempty grid"),
    }
}

fn coordinate_frames(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    if a == b || a == c || a == d || b == c || b == d || c == d {
                        continue;
                    }
                    for sign in [1.0, -1.0] {
                        let mut rows = vec![0.0; 4 * n];
                        rows[a] = 1.0;
                        rows[n + b] = 1.0;
                        rows[2 * n + c] = 1.0;
                        rows[3 * n + d] = sign;
                        out.push(rows);
                    }
                }
            }
        }
    }
    out
}

/// Oracle value and the configuration attaining it.
pub fn oracle_search(r: &CurvatureTensor, mode: Mode, samples: usize, seed: u64) -> (f64, FrameConfig) {
    let n = r.dim();
    let g = grid();
    let samples = samples.max(1);
    let chunks = samples.div_ceil(CHUNK);
    let random_best = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = sampling::rng(seed, 0x0AC1E ^ ((chunk as u64) << 20));
            let count = CHUNK.min(samples - chunk * CHUNK);
            let mut best = (f64::INFINITY, Vec::new(), 0.0, 0.0);
            for _ in 0..count {
                let rows = sampling::random_frame(&mut rng, 4, n);
                let (v, l, u) = best_on_grid(&FrameComponents::compute(r, &rows), mode, &g);
                if v < best.0 {
                    best = (v, rows, l, u);
                }
            }
            best
        })
        .collect::<Vec<_>>();
    let coordinate_best = coordinate_frames(n)
        .into_par_iter()
        .map(|rows| {
            let (v, l, u) = best_on_grid(&FrameComponents::compute(r, &rows), mode, &g);
            (v, rows, l, u)
        })
        .collect::<Vec<_>>();
    let (v, rows, l, u) = random_best
        .into_iter()
        .chain(coordinate_best)
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one sample");
    (v, FrameConfig::from_rows(&rows, n, l, u))
}

/// Oracle upper bound for the margin; deterministic given `seed`.
pub fn oracle_margin(r: &CurvatureTensor, mode: Mode, samples: usize, seed: u64) -> f64 {
    oracle_search(r, mode, samples, seed).0
}
