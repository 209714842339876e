//! Picard iteration on dyadic windows with halving on stall.

use crate::path::dist;

/// Stopping rules for windowed Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Stop when successive iterates differ by less than this in sup norm.
    pub tol: f64,
    /// Iteration budget per window before it is halved.
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 200 }
    }
}

/// Outcome of a windowed Picard solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardReport {
    pub converged: bool,
    /// Total Picard sweeps over all windows.
    pub iterations: usize,
    /// Number of windows the horizon was finally split into.
    pub windows: usize,
    /// Largest final step size over all windows.
    pub last_step: f64,
}

/// Solve `y = step(y)` window by window on `0..=n`.
///
/// `step(a, b, start, current)` maps the samples of an iterate on the index
/// window `a..=b` (flattened, `dim` per sample, first sample equal to
/// `start`) to the next iterate on that window. Windows that fail to
/// contract within the budget are halved; a window of one interval that
/// still fails is accepted with `converged = false`.
pub(crate) fn solve_windows<S>(n: usize, dim: usize, start: &[f64], opts: &PicardOptions, mut step: S) -> (Vec<f64>, PicardReport)
where
    S: FnMut(usize, usize, &[f64], &[f64]) -> Vec<f64>,
{
    let mut out = vec![0.0; (n + 1) * dim];
    out[..dim].copy_from_slice(start);
    let mut report = PicardReport { converged: true, iterations: 0, windows: 0, last_step: 0.0 };
    let mut pending = vec![(0usize, n)];
    while let Some((a, b)) = pending.pop() {
        let x0 = out[a * dim..(a + 1) * dim].to_vec();
        let mut cur: Vec<f64> = x0.iter().copied().cycle().take((b - a + 1) * dim).collect();
        let mut ok = false;
        let mut last = f64::INFINITY;
        for _ in 0..opts.max_iter.max(1) {
            let next = step(a, b, &x0, &cur);
            report.iterations += 1;
            let diff = sup_diff(&next, &cur, dim);
            cur = next;
            last = diff;
            if !diff.is_finite() {
                break;
            }
            if diff < opts.tol {
                ok = true;
                break;
            }
        }
        if !ok && b - a >= 2 {
            let mid = a + (b - a) / 2;
            log::debug!("picard: halving window {a}..{b}");
            pending.push((mid, b));
            pending.push((a, mid));
            continue;
        }
        if !ok {
            report.converged = false;
        }
        report.windows += 1;
        report.last_step = report.last_step.max(last);
        out[a * dim..(b + 1) * dim].copy_from_slice(&cur);
    }
    (out, report)
}

fn sup_diff(a: &[f64], b: &[f64], dim: usize) -> f64 {
    a.chunks(dim)
        .zip(b.chunks(dim))
        .map(|(x, y)| dist(x, y))
        .fold(0.0, |m: f64, d| if d.is_nan() { f64::INFINITY } else { m.max(d) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_recursion_converges() {
        // y_i = 1 + sum_{j < i} 0.1 y_j
        let (y, rep) = solve_windows(8, 1, &[1.0], &PicardOptions::default(), |_, _, x0, cur| {
            let mut out = vec![x0[0]];
            let mut acc = x0[0];
            for v in &cur[..cur.len() - 1] {
                acc += 0.1 * v;
                out.push(acc);
            }
            out
        });
        assert!(rep.converged);
        for (i, v) in y.iter().enumerate() {
            assert!((v - 1.1f64.powi(i as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn stalls_are_halved() {
        // y_i = x0 + 0.3 (b - a) y_i only contracts on windows of length <= 3.
        let opts = PicardOptions { tol: 1e-12, max_iter: 200 };
        let (y, rep) = solve_windows(4, 1, &[1.0], &opts, |a, b, x0, cur| {
            let k = 0.3 * (b - a) as f64;
            let mut out = vec![x0[0]];
            out.extend(cur[1..].iter().map(|v| x0[0] + k * v));
            out
        });
        assert!(rep.converged);
        assert_eq!(rep.windows, 2);
        assert!((y[2] - 2.5).abs() < 1e-10 && (y[4] - 6.25).abs() < 1e-9);
    }
}
