//! Minimum-norm point of a polytope given by vertices (Wolfe's algorithm).

/// Solve the small dense system `a x = b` by Gaussian elimination with
/// partial pivoting. Returns `None` when the matrix is numerically singular.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combine(points: &[Vec<f64>], active: &[usize], w: &[f64]) -> Vec<f64> {
    let d = points[0].len();
    let mut x = vec![0.0; d];
    for (&i, &wi) in active.iter().zip(w) {
        for k in 0..d {
            x[k] += wi * points[i][k];
        }
    }
    x
}

/// Point of minimal Euclidean norm in the convex hull of `points`.
pub(crate) fn min_norm_point(points: &[Vec<f64>]) -> Vec<f64> {
    debug_assert!(!points.is_empty());
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return points[0].clone();
    }
    let eps = 1e-14 * scale;
    let start = (0..points.len())
        .min_by(|&i, &j| dot(&points[i], &points[i]).total_cmp(&dot(&points[j], &points[j])))
        .expect("nonempty");
    let mut active = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();

    for _major in 0..(50 * points.len() + 100) {
        let xx = dot(&x, &x);
        let (j, xj) = (0..points.len())
            .map(|i| (i, dot(&x, &points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if xx - xj <= eps || active.contains(&j) {
            break;
        }
        active.push(j);
        lambda.push(0.0);

        loop {
            // Affine minimiser over the active set.
            let k = active.len();
            let mut a = vec![vec![0.0; k + 1]; k + 1];
            for r in 0..k {
                for c in 0..k {
                    a[r][c] = dot(&points[active[r]], &points[active[c]]);
                }
                a[r][k] = 1.0;
                a[k][r] = 1.0;
            }
            let mut rhs = vec![0.0; k + 1];
            rhs[k] = 1.0;
            let mu = match solve_dense(a, rhs) {
                Some(sol) => sol[..k].to_vec(),
                None => {
                    // Affinely dependent set: drop the newest point.
                    active.pop();
                    lambda.pop();
                    x = combine(points, &active, &lambda);
                    return x;
                }
            };
            if mu.iter().all(|&m| m > 1e-15) {
                lambda = mu;
                x = combine(points, &active, &lambda);
                break;
            }
            let mut theta = 1.0f64;
            for (l, m) in lambda.iter().zip(&mu) {
                if *m <= 1e-15 {
                    let d = l - m;
                    if d > 0.0 {
                        theta = theta.min(l / d);
                    }
                }
            }
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut keep_a = Vec::new();
            let mut keep_l = Vec::new();
            for (&i, &l) in active.iter().zip(&lambda) {
                if l > 1e-15 {
                    keep_a.push(i);
                    keep_l.push(l);
                }
            }
            if keep_a.is_empty() {
                keep_a.push(active[0]);
                keep_l.push(1.0);
            }
            let total: f64 = keep_l.iter().sum();
            keep_l.iter_mut().for_each(|l| *l /= total);
            active = keep_a;
            lambda = keep_l;
        }
    }
    x
}
