//! Dense Levenberg–Marquardt for small-to-medium nonlinear least squares.
//!
//! Both the Schwarz–Christoffel parameter problem and the disk-automorphism
//! fit go through this solver. The damping parameter follows Nielsen's
//! update rule; the normal equations are solved by Cholesky factorization
//! with Marquardt (diagonal) scaling, which makes the step scale-invariant.

/// Jacobian as a dense row-major matrix: `rows = residuals`, `cols = params`.
pub struct Jacobian {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl Jacobian {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iters: usize,
    /// Stop when the max-norm of the gradient Jᵀr falls below this.
    pub grad_tol: f64,
    /// Stop when the step max-norm falls below this.
    pub step_tol: f64,
    /// Declare success as soon as max|r| falls below this (0 disables).
    pub residual_tol: f64,
    /// Largest allowed per-coordinate step.
    pub step_clamp: f64,
    /// Optional box `x ∈ [x0 − w, x0 + w]` around the start.
    pub box_halfwidth: Option<f64>,
    pub lambda_init: f64,
    /// Give up when `patience` consecutive iterations shrink the residual
    /// sum of squares by less than 2% total (0 disables).
    pub patience: usize,
    /// Geodesic acceleration: correct each step by the second directional
    /// derivative of the residual. Pays off when the residual curvature
    /// along the step keeps the plain gain ratio pinned low.
    pub acceleration: bool,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: 1e-12,
            step_tol: 1e-14,
            residual_tol: 0.0,
            step_clamp: f64::INFINITY,
            box_halfwidth: None,
            lambda_init: 1e-3,
            patience: 0,
            acceleration: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub rss: f64,
    pub max_abs_residual: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes ‖residual(x)‖² from `x0`.
///
/// `jacobian(x, r)` receives the current point and its residual so
/// implementations can reuse cached state from the residual evaluation.
pub fn minimize<R, J>(x0: &[f64], mut residual: R, mut jacobian: J, opts: &LmOptions) -> LmOutcome
where
    R: FnMut(&[f64]) -> Vec<f64>,
    J: FnMut(&[f64], &[f64]) -> Jacobian,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut rss = dot(&r, &r);
    let mut lambda = opts.lambda_init;
    let mut nu = 2.0f64;
    let mut iterations = 0;
    let mut converged = max_abs(&r) <= opts.residual_tol && opts.residual_tol > 0.0;
    let mut grad_norm = f64::INFINITY;
    let mut rss_checkpoint = rss;
    let mut since_checkpoint = 0usize;

    while !converged && iterations < opts.max_iters {
        if opts.patience > 0 {
            since_checkpoint += 1;
            if since_checkpoint >= opts.patience {
                if rss > 0.98 * rss_checkpoint {
                    break; // stalled
                }
                rss_checkpoint = rss;
                since_checkpoint = 0;
            }
        }
        iterations += 1;
        let jac = jacobian(&x, &r);
        debug_assert_eq!(jac.cols, n);
        let m = jac.rows;

        let mut jtr = vec![0.0; n];
        let mut col_scale = vec![0.0f64; n];
        for row in 0..m {
            let base = row * n;
            let rv = r[row];
            for i in 0..n {
                let ji = jac.data[base + i];
                jtr[i] += ji * rv;
                col_scale[i] += ji * ji;
            }
        }
        for s in col_scale.iter_mut() {
            *s = s.sqrt().max(1e-10);
        }
        grad_norm = jtr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if grad_norm <= opts.grad_tol {
            converged = true;
            break;
        }

        let mut improved = false;
        for _ in 0..25 {
            // damped least squares min ‖[J; √λ D] δ + [r; 0]‖ by QR on the
            // stacked matrix; solving through JᵀJ would square the
            // conditioning, which crowded prevertex clusters cannot afford
            let sl = lambda.sqrt();
            let mut aug = Jacobian::zeros(m + n, n);
            aug.data[..m * n].copy_from_slice(&jac.data);
            for i in 0..n {
                aug.set(m + i, i, sl * col_scale[i]);
            }
            let mut rhs = vec![0.0; m + n];
            for (dst, src) in rhs.iter_mut().zip(&r) {
                *dst = -src;
            }
            let mut delta = match qr_least_squares(&mut aug, &mut rhs) {
                Some(d) => d,
                None => {
                    lambda *= nu;
                    nu *= 2.0;
                    continue;
                }
            };
            for d in delta.iter_mut() {
                if d.abs() > opts.step_clamp {
                    *d = d.signum() * opts.step_clamp;
                }
            }
            if opts.acceleration {
                // half-step probe of the residual's curvature along δ
                let h = 0.5;
                let x_h: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + h * b).collect();
                let r_h = residual(&x_h);
                if r_h.len() == m && r_h.iter().all(|v| v.is_finite()) {
                    let mut d2 = vec![0.0f64; m];
                    for row in 0..m {
                        let base = row * n;
                        let mut jd = 0.0;
                        for i in 0..n {
                            jd += jac.data[base + i] * delta[i];
                        }
                        d2[row] = (r_h[row] - r[row] - h * jd) * 2.0 / (h * h);
                    }
                    let mut aug2 = Jacobian::zeros(m + n, n);
                    aug2.data[..m * n].copy_from_slice(&jac.data);
                    for i in 0..n {
                        aug2.set(m + i, i, sl * col_scale[i]);
                    }
                    let mut rhs2 = vec![0.0; m + n];
                    for (dst, src) in rhs2.iter_mut().zip(&d2) {
                        *dst = -src;
                    }
                    if let Some(acc) = qr_least_squares(&mut aug2, &mut rhs2) {
                        let na: f64 = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let nd: f64 = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if na <= 0.75 * nd {
                            for (d, a) in delta.iter_mut().zip(&acc) {
                                *d += 0.5 * a;
                            }
                        }
                    }
                }
            }
            let mut x_new: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
            if let Some(w) = opts.box_halfwidth {
                for (xi, x0i) in x_new.iter_mut().zip(x0) {
                    *xi = xi.clamp(x0i - w, x0i + w);
                }
            }
            let r_new = residual(&x_new);
            let rss_new = dot(&r_new, &r_new);
            if rss_new.is_finite() && rss_new < rss {
                // Nielsen gain-ratio style update
                let predicted: f64 = delta
                    .iter()
                    .enumerate()
                    .map(|(i, d)| d * (lambda * col_scale[i] * col_scale[i] * d - jtr[i]))
                    .sum();
                let rho = (rss - rss_new) / predicted.abs().max(1e-300);
                let lambda_factor = if rho > 0.5 {
                    1.0 / 3.0
                } else if rho > 0.2 {
                    1.0
                } else {
                    2.0
                };
                if std::env::var("BRENNAN_LM_TRACE").map(|v| v == "2").unwrap_or(false) {
                    let stepn = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                    eprintln!(
                        "  it {iterations}: rss {rss_new:.4e} lambda {lambda:.3e} rho {rho:.3} step {stepn:.3e} grad {grad_norm:.3e}"
                    );
                }
                lambda = (lambda * lambda_factor).max(1e-14);
                nu = 2.0;
                let step = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                x = x_new;
                r = r_new;
                rss = rss_new;
                improved = true;
                if opts.residual_tol > 0.0 && max_abs(&r) <= opts.residual_tol {
                    converged = true;
                }
                if step <= opts.step_tol {
                    converged = true;
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e14 {
                break;
            }
        }
        if !improved {
            break;
        }
    }

    let max_abs_residual = max_abs(&r);
    LmOutcome {
        x,
        rss,
        max_abs_residual,
        residual: r,
        grad_norm,
        iterations,
        converged: converged || (opts.residual_tol > 0.0 && max_abs_residual <= opts.residual_tol),
    }
}

/// Forward-difference Jacobian helper for residual functions without an
/// analytic derivative.
pub fn fd_jacobian<R>(residual: &mut R, x: &[f64], r0: &[f64], eps: f64) -> Jacobian
where
    R: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let m = r0.len();
    let mut jac = Jacobian::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = eps * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = residual(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac.set(i, j, (rp[i] - r0[i]) / h);
        }
    }
    jac
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// In-place Householder QR least squares: minimizes ‖A x − b‖ over x,
/// destroying `a` and `b`. Returns `None` on a rank-deficient column.
pub fn qr_least_squares(a: &mut Jacobian, b: &mut [f64]) -> Option<Vec<f64>> {
    let m = a.rows;
    let n = a.cols;
    debug_assert!(m >= n && b.len() == m);
    for j in 0..n {
        // Householder vector for column j below row j
        let mut norm = 0.0f64;
        for i in j..m {
            norm += a.at(i, j) * a.at(i, j);
        }
        norm = norm.sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return None;
        }
        let alpha = if a.at(j, j) >= 0.0 { -norm } else { norm };
        let v0 = a.at(j, j) - alpha;
        a.set(j, j, alpha);
        // v = [v0, A[j+1..m, j]]; apply H = I − 2vvᵀ/(vᵀv) to the rest
        let mut vtv = v0 * v0;
        for i in (j + 1)..m {
            vtv += a.at(i, j) * a.at(i, j);
        }
        if vtv <= 1e-300 {
            continue;
        }
        for col in (j + 1)..n {
            let mut dot = v0 * a.at(j, col);
            for i in (j + 1)..m {
                dot += a.at(i, j) * a.at(i, col);
            }
            let f = 2.0 * dot / vtv;
            a.set(j, col, a.at(j, col) - f * v0);
            for i in (j + 1)..m {
                a.set(i, col, a.at(i, col) - f * a.at(i, j));
            }
        }
        let mut dot = v0 * b[j];
        for i in (j + 1)..m {
            dot += a.at(i, j) * b[i];
        }
        let f = 2.0 * dot / vtv;
        b[j] -= f * v0;
        for i in (j + 1)..m {
            b[i] -= f * a.at(i, j);
        }
    }
    // back substitution on R
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a.at(i, k) * x[k];
        }
        let d = a.at(i, i);
        if d.abs() < 1e-300 {
            return None;
        }
        x[i] = s / d;
    }
    Some(x)
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, n×n).
pub fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward + back substitution
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = [[4,2],[2,3]], b = [2, 5] -> x = [-0.5, 2]
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 5.0], 2).unwrap();
        assert!((x[0] + 0.5).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        // non-positive-definite matrix is rejected
        let bad = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_solve(&bad, &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn fits_exponential_decay() {
        // data from y = 3 e^{-1.7 t}; recover (amplitude, rate)
        let ts: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-1.7 * t).exp()).collect();
        let resid = |p: &[f64]| -> Vec<f64> {
            ts.iter()
                .zip(&ys)
                .map(|(t, y)| p[0] * (-p[1] * t).exp() - y)
                .collect()
        };
        let out = minimize(
            &[1.0, 1.0],
            resid,
            |x, r0| {
                let mut f = resid;
                fd_jacobian(&mut f, x, r0, 1e-7)
            },
            &LmOptions {
                grad_tol: 1e-12,
                ..Default::default()
            },
        );
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-8, "{:?}", out.x);
        assert!((out.x[1] - 1.7).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_valley() {
        let resid = |p: &[f64]| vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]];
        let out = minimize(
            &[-1.2, 1.0],
            resid,
            |x, r0| {
                let mut f = resid;
                fd_jacobian(&mut f, x, r0, 1e-8)
            },
            &LmOptions::default(),
        );
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }
}
