//! Small dense solvers for the moment systems and least-squares fits.

/// Thin SVD of a small dense matrix by one-sided Jacobi rotations.
pub(crate) struct Svd {
    /// Left singular vectors, one per column of the input (unit norm or zero).
    u: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    /// Right singular vectors as columns of an `n × n` matrix, stored column-wise.
    v: Vec<Vec<f64>>,
    rows: usize,
}

impl Svd {
    /// `a` is row-major with `rows` rows.
    pub(crate) fn new(a: &[Vec<f64>]) -> Self {
        let rows = a.len();
        let cols = a.first().map_or(0, Vec::len);
        let mut w: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..rows).map(|r| a[r][c]).collect())
            .collect();
        let mut v: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..cols).map(|r| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..cols {
                for q in p + 1..cols {
                    let alpha: f64 = w[p].iter().map(|x| x * x).sum();
                    let beta: f64 = w[q].iter().map(|x| x * x).sum();
                    let gamma: f64 = w[p].iter().zip(&w[q]).map(|(x, y)| x * y).sum();
                    if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for col in [&mut w, &mut v] {
                        let (lo, hi) = col.split_at_mut(q);
                        let (cp, cq) = (&mut lo[p], &mut hi[0]);
                        for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                            let (xp, yq) = (*x, *y);
                            *x = c * xp - s * yq;
                            *y = s * xp + c * yq;
                        }
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let sigma: Vec<f64> = w
            .iter()
            .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let u = w
            .into_iter()
            .zip(&sigma)
            .map(|(col, &s)| {
                if s > 0.0 {
                    col.into_iter().map(|x| x / s).collect()
                } else {
                    vec![0.0; rows]
                }
            })
            .collect();
        Svd { u, sigma, v, rows }
    }

    /// Ratio of the largest to the `min(rows, cols)`-th largest singular value.
    pub(crate) fn condition(&self) -> f64 {
        let mut s = self.sigma.clone();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let rank = self.rows.min(s.len());
        if rank == 0 {
            return f64::INFINITY;
        }
        let small = s[rank - 1];
        if small == 0.0 {
            f64::INFINITY
        } else {
            s[0] / small
        }
    }

    /// Minimum-norm least-squares solution of `a x = b`, dropping singular values
    /// below `rel_cut · σ_max`.
    pub(crate) fn solve(&self, b: &[f64], rel_cut: f64) -> Vec<f64> {
        let cols = self.sigma.len();
        let smax = self.sigma.iter().cloned().fold(0.0, f64::max);
        let mut x = vec![0.0; cols];
        for (i, &s) in self.sigma.iter().enumerate() {
            if s <= rel_cut * smax || s == 0.0 {
                continue;
            }
            let coef: f64 = self.u[i].iter().zip(b).map(|(u, b)| u * b).sum::<f64>() / s;
            for (r, xr) in x.iter_mut().enumerate() {
                *xr += coef * self.v[i][r];
            }
        }
        x
    }
}

/// Ordinary least squares for `y ≈ intercept + slope·x`; returns
/// `(slope, intercept, r_squared)`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        let ss_res: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let e = b - (intercept + slope * a);
                e * e
            })
            .sum();
        1.0 - ss_res / syy
    } else {
        1.0
    };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let svd = Svd::new(&a);
        let x = svd.solve(&[3.0, 5.0], 1e-14);
        assert!((x[0] - 0.8).abs() < 1e-13 && (x[1] - 1.4).abs() < 1e-13);
        assert!(svd.condition() > 1.0 && svd.condition() < 10.0);
    }

    #[test]
    fn singular_matrix_has_infinite_condition() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(Svd::new(&a).condition() > 1e12);
    }

    #[test]
    fn wide_system_gives_minimum_norm() {
        let a = vec![vec![1.0, 1.0]];
        let x = Svd::new(&a).solve(&[2.0], 1e-14);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_line_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, i, r2) = linear_fit(&x, &y);
        assert!((s + 0.5).abs() < 1e-14 && (i - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
