//! The Schwarz–Christoffel parameter problem.
//!
//! Unknowns are logs of consecutive prevertex gaps (the ordering constraint
//! disappears in that chart); the residual stacks side-length ratios against
//! the target polygon plus the placement of the conformal center. One gauge
//! prevertex is pinned at angle 2π and the center w_c = f(0) is prescribed,
//! fixing the three Möbius degrees of freedom.
//!
//! The Jacobian is finite-differenced in prevertex space: perturbing t_j
//! only changes one integrand factor away from the two sides adjacent to
//! prevertex j, so cached quadrature nodes give every other column entry at
//! the cost of two power evaluations per node. The chain rule then carries
//! d(residual)/dt back to the log-gap chart.

use super::eval::{Kernel, PathIntegral, QuadNode};
use super::quad::{self, Rule};
use super::{CenterChoice, ScDiagnostics, ScError, ScOptions, SchwarzChristoffelMap};
use crate::geom;
use crate::lm::{self, Jacobian, LmOptions};
use crate::polygon::BoundaryPolygon;
use num_complex::Complex64;
use rayon::prelude::*;
use std::cell::RefCell;
use std::f64::consts::TAU;

/// Solves the parameter problem for a simple ccw polygon.
pub fn solve_parameter_problem(
    poly: &BoundaryPolygon,
    opts: &ScOptions,
) -> Result<SchwarzChristoffelMap, ScError> {
    let n = poly.len();
    if n < 3 {
        return Err(ScError::BadPolygon(format!("{n} vertices")));
    }
    if poly.signed_area() <= 0.0 {
        return Err(ScError::BadPolygon("clockwise orientation".into()));
    }
    let alphas = poly.angle_fractions();
    let closure: f64 = alphas.iter().map(|a| 1.0 - a).sum();
    if (closure - 2.0).abs() > 1e-9 {
        return Err(ScError::BadPolygon(format!(
            "turning angles sum to {closure}, not 2"
        )));
    }

    if n == 3 {
        return solve_triangle(poly, alphas, opts);
    }

    // cyclic relabeling so that the longest side is the scale reference
    let lengths: Vec<f64> = (0..n)
        .map(|k| (poly.vertices[(k + 1) % n] - poly.vertices[k]).norm())
        .collect();
    let shift = lengths
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let poly = rotate_labels(poly, shift);
    let alphas: Vec<f64> = (0..n).map(|i| alphas[(i + shift) % n]).collect();

    let center = match opts.center {
        CenterChoice::Centroid => super::polygon_centroid(&poly.vertices),
        CenterChoice::Point(p) => p,
    };
    if !poly.contains(center) {
        return Err(ScError::BadCenter(center));
    }

    let legendre = quad::gauss_legendre(opts.quadrature_nodes);
    let jacobi: Vec<Rule> = alphas
        .iter()
        .map(|&a| quad::gauss_jacobi(opts.quadrature_nodes, 0.0, a - 1.0))
        .collect();
    let beta: Vec<f64> = alphas.iter().map(|a| a - 1.0).collect();

    // initial gaps: caller-provided angles (rotated into the new labeling)
    // or uniform spacing
    let y0: Vec<f64> = match &opts.initial_prevertices {
        Some(ts) if ts.len() == n => {
            // accept any cyclically increasing configuration (one wrap)
            let mut gaps_orig = vec![0.0f64; n];
            let mut total = 0.0;
            for k in 0..n {
                let prev = if k == 0 { ts[n - 1] } else { ts[k - 1] };
                gaps_orig[k] = (ts[k] - prev).rem_euclid(TAU).max(1e-13);
                total += gaps_orig[k];
            }
            if !(total < 1.5 * TAU) {
                return Err(ScError::BadPolygon(
                    "initial prevertices are not cyclically increasing".into(),
                ));
            }
            let gaps: Vec<f64> = (0..n).map(|i| gaps_orig[(i + shift) % n]).collect();
            (0..n - 1).map(|i| (gaps[i] / gaps[n - 1]).ln()).collect()
        }
        _ => vec![0.0; n - 1],
    };

    let vertices = poly.vertices.clone();

    // A heuristic initialization is only accurate up to a disk
    // automorphism. Its two non-gauge degrees of freedom are exactly the
    // position of the center preimage, so pulling the current preimage of
    // w_c back to the origin and remapping the prevertices removes the
    // distortion before the least-squares iteration starts.
    let y0 = {
        let mut t = gaps_to_angles(&y0);
        for _ in 0..4 {
            let kernel = Kernel::new(&beta, &t, &legendre, &jacobi);
            match center_preimage(&kernel, &vertices, center) {
                Some(z0) if z0.norm() > 1e-4 && z0.norm() < 0.95 => {
                    t = recenter_prevertices(&t, z0);
                }
                _ => break,
            }
        }
        angles_to_y(&t)
    };

    let cache: RefCell<Option<(Vec<f64>, EvalCache)>> = RefCell::new(None);
    let trace = std::env::var("BRENNAN_LM_TRACE").is_ok();

    let residual_fn = |y: &[f64]| -> Vec<f64> {
        let t = gaps_to_angles(y);
        let mut min_gap = t[0];
        for k in 1..t.len() {
            min_gap = min_gap.min(t[k] - t[k - 1]);
        }
        // candidate steps that collapse the prevertex spacing are rejected
        // through an enormous residual rather than evaluated
        if min_gap < 0.5 * opts.gap_min {
            return vec![1e6; n + 1];
        }
        let kernel = Kernel::new(&beta, &t, &legendre, &jacobi);
        let c = evaluate(&kernel, &vertices, center);
        let r = c.residual.clone();
        if trace {
            let rss: f64 = r.iter().map(|v| v * v).sum();
            let (argmax, max) = r
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .map(|(i, v)| (i, *v))
                .unwrap();
            let arg_gap = (1..t.len())
                .min_by(|&a, &b| (t[a] - t[a - 1]).partial_cmp(&(t[b] - t[b - 1])).unwrap())
                .unwrap();
            eprintln!(
                "lm eval: rss {rss:.6e} r[{argmax}] = {max:.3e} min_gap {min_gap:.3e} at t[{arg_gap}]"
            );
        }
        *cache.borrow_mut() = Some((y.to_vec(), c));
        r
    };
    let jacobian_fn = |y: &[f64], r0: &[f64]| -> Jacobian {
        let needs_refresh = cache
            .borrow()
            .as_ref()
            .map(|(yc, _)| yc.as_slice() != y)
            .unwrap_or(true);
        if needs_refresh {
            let t = gaps_to_angles(y);
            let kernel = Kernel::new(&beta, &t, &legendre, &jacobi);
            let c = evaluate(&kernel, &vertices, center);
            *cache.borrow_mut() = Some((y.to_vec(), c));
        }
        let borrowed = cache.borrow();
        let (_, c) = borrowed.as_ref().unwrap();
        jacobian_cached(c, r0, y, &beta, &legendre, &jacobi, &vertices)
    };

    let outcome = lm::minimize(
        &y0,
        residual_fn,
        jacobian_fn,
        &LmOptions {
            max_iters: opts.max_iters,
            residual_tol: opts.residual_tol,
            grad_tol: 1e-16,
            step_tol: 1e-13,
            step_clamp: 2.0,
            box_halfwidth: Some(20.0),
            lambda_init: 1e-3,
            patience: 30,
            acceleration: true,
        },
    );

    let t = gaps_to_angles(&outcome.x);
    let mut min_gap = t[0];
    let mut min_gap_at = 0usize;
    for k in 1..n {
        if t[k] - t[k - 1] < min_gap {
            min_gap = t[k] - t[k - 1];
            min_gap_at = k;
        }
    }
    let unshifted: Vec<f64> = (0..n).map(|i| t[(i + n - shift % n) % n]).collect();
    if min_gap < opts.gap_min {
        return Err(ScError::CrowdingOverflow {
            gap: min_gap,
            gap_min: opts.gap_min,
            vertex: (min_gap_at + shift) % n,
            best_prevertices: unshifted,
        });
    }
    if outcome.max_abs_residual > opts.residual_tol {
        // residual rows 0..n-2 are the log ratios of sides 1..n-1; the
        // final two rows place the center
        let worst_side = outcome
            .residual
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .filter(|&i| i < n - 1)
            .map(|i| (i + 1 + shift) % n);
        let stuck_sides: Vec<usize> = outcome
            .residual
            .iter()
            .enumerate()
            .filter(|(i, r)| *i < n - 1 && r.abs() > 0.3)
            .map(|(i, _)| (i + 1 + shift) % n)
            .collect();
        return Err(ScError::NoConvergence {
            worst_residual: outcome.max_abs_residual,
            iterations: outcome.iterations,
            worst_side,
            stuck_sides,
            best_prevertices: unshifted,
        });
    }

    let kernel = Kernel::new(&beta, &t, &legendre, &jacobi);
    let final_cache = evaluate(&kernel, &vertices, center);
    let diagnostics = ScDiagnostics {
        iterations: outcome.iterations,
        max_residual: outcome.max_abs_residual,
        min_prevertex_gap: min_gap,
        worst_vertex_error: 0.0,
    };
    let mut map = SchwarzChristoffelMap::assemble(
        poly,
        t,
        alphas,
        final_cache.c_scale,
        center,
        opts.quadrature_nodes,
        opts.tol_inv_rel,
        diagnostics,
    );
    let worst = map.worst_vertex_error();
    map_set_worst_vertex_error(&mut map, worst);
    if worst > opts.tol_vertex_rel * map.diameter() {
        return Err(ScError::NoConvergence {
            worst_residual: worst / map.diameter(),
            iterations: outcome.iterations,
            worst_side: None,
            stuck_sides: Vec::new(),
            best_prevertices: Vec::new(),
        });
    }
    Ok(map)
}

fn map_set_worst_vertex_error(map: &mut SchwarzChristoffelMap, worst: f64) {
    map.diagnostics_mut().worst_vertex_error = worst;
}

impl SchwarzChristoffelMap {
    pub(crate) fn diagnostics_mut(&mut self) -> &mut ScDiagnostics {
        &mut self.diagnostics
    }
}

/// Triangles have no free prevertices: three fixed angles determine the
/// image up to similarity, so only C and w_c are solved (linearly).
fn solve_triangle(
    poly: &BoundaryPolygon,
    alphas: Vec<f64>,
    opts: &ScOptions,
) -> Result<SchwarzChristoffelMap, ScError> {
    let t = vec![TAU / 3.0, 2.0 * TAU / 3.0, TAU];
    let legendre = quad::gauss_legendre(opts.quadrature_nodes);
    let jacobi: Vec<Rule> = alphas
        .iter()
        .map(|&a| quad::gauss_jacobi(opts.quadrature_nodes, 0.0, a - 1.0))
        .collect();
    let beta: Vec<f64> = alphas.iter().map(|a| a - 1.0).collect();
    let kernel = Kernel::new(&beta, &t, &legendre, &jacobi);
    let f: Vec<Complex64> = (0..3).map(|k| kernel.vertex_integral(k, false).value).collect();
    let w = &poly.vertices;
    let scale = (w[1] - w[0]) / (f[1] - f[0]);
    let center = w[0] - scale * f[0];
    let residual = (center + scale * f[2] - w[2]).norm() / geom::diameter(w);
    let diagnostics = ScDiagnostics {
        iterations: 0,
        max_residual: residual,
        min_prevertex_gap: TAU / 3.0,
        worst_vertex_error: 0.0,
    };
    let mut map = SchwarzChristoffelMap::assemble(
        poly.clone(),
        t,
        alphas,
        scale,
        center,
        opts.quadrature_nodes,
        opts.tol_inv_rel,
        diagnostics,
    );
    let worst = map.worst_vertex_error();
    map_set_worst_vertex_error(&mut map, worst);
    Ok(map)
}

fn rotate_labels(poly: &BoundaryPolygon, shift: usize) -> BoundaryPolygon {
    let n = poly.len();
    let take = |k: usize| (k + shift) % n;
    BoundaryPolygon {
        vertices: (0..n).map(|i| poly.vertices[take(i)]).collect(),
        words: (0..n).map(|i| poly.words[take(i)].clone()).collect(),
        sort_keys: (0..n).map(|i| poly.sort_keys[take(i)]).collect(),
        seed: poly.seed,
        max_word_length: poly.max_word_length,
        dropped_close: poly.dropped_close,
        dropped_crossing: poly.dropped_crossing,
    }
}

/// Newton for the point of the disk the current (unsolved) map sends to
/// the prescribed center.
fn center_preimage(
    kernel: &Kernel<'_>,
    vertices: &[Complex64],
    w_c: Complex64,
) -> Option<Complex64> {
    let i0 = kernel.side_integral(0, false).value;
    if i0.norm() < 1e-280 {
        return None;
    }
    let c_scale = (vertices[1] - vertices[0]) / i0;
    let base = vertices[0] - c_scale * kernel.vertex_integral(0, false).value; // f(0)
    let mut z = Complex64::ZERO;
    for _ in 0..40 {
        let f = base + c_scale * kernel.interior_path(Complex64::ZERO, z, false).value;
        let fp = c_scale * kernel.product(z, crate::conformal::eval::NO_SKIP);
        if fp.norm() < 1e-280 {
            return None;
        }
        let mut step = (f - w_c) / fp;
        if step.norm() > 0.4 {
            step = step / step.norm() * 0.4;
        }
        z -= step;
        if z.norm() > 0.999 {
            z = z / z.norm() * 0.999;
        }
        if step.norm() < 1e-12 {
            return Some(z);
        }
    }
    Some(z)
}

/// Precomposes the prevertex configuration with the automorphism sending
/// z₀ to the origin, keeping the last angle pinned at 2π.
fn recenter_prevertices(t: &[f64], z0: Complex64) -> Vec<f64> {
    let moved: Vec<f64> = t
        .iter()
        .map(|&a| {
            let z = Complex64::from_polar(1.0, a);
            ((z - z0) / (Complex64::ONE - z0.conj() * z)).arg()
        })
        .collect();
    let last = moved[moved.len() - 1];
    let mut out: Vec<f64> = moved
        .iter()
        .map(|&a| (a - last).rem_euclid(TAU))
        .collect();
    let n = out.len();
    out[n - 1] = TAU;
    // the automorphism is a circle homeomorphism, so the angles stay
    // cyclically ordered; enforce strict monotonicity against rounding
    for k in 1..n {
        if out[k] <= out[k - 1] {
            out[k] = out[k - 1] + 1e-12;
        }
    }
    out
}

fn angles_to_y(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut gaps = Vec::with_capacity(n);
    for k in 0..n {
        let prev = if k == 0 { 0.0 } else { t[k - 1] };
        gaps.push((t[k] - prev).max(1e-13));
    }
    (0..n - 1).map(|k| (gaps[k] / gaps[n - 1]).ln()).collect()
}

/// Gap chart: y holds ln(g_k / g_{n-1}) for k < n−1; angles are the
/// normalized prefix sums, so t_{n-1} = 2π is pinned automatically.
fn gaps_to_angles(y: &[f64]) -> Vec<f64> {
    let n = y.len() + 1;
    let mut gaps: Vec<f64> = Vec::with_capacity(n);
    for &v in y {
        gaps.push(v.clamp(-30.0, 30.0).exp());
    }
    gaps.push(1.0);
    let total: f64 = gaps.iter().sum();
    let mut t = Vec::with_capacity(n);
    let mut acc = 0.0;
    for g in gaps {
        acc += g;
        t.push(TAU * acc / total);
    }
    t[n - 1] = TAU;
    t
}

struct EvalCache {
    t: Vec<f64>,
    sides: Vec<PathIntegral>,
    center_path: PathIntegral,
    residual: Vec<f64>,
    c_scale: Complex64,
}

fn evaluate(kernel: &Kernel<'_>, vertices: &[Complex64], w_c: Complex64) -> EvalCache {
    let n = vertices.len();
    let sides: Vec<PathIntegral> = (0..n).map(|k| kernel.side_integral(k, true)).collect();
    let center_path = kernel.vertex_integral(0, true);
    let values: Vec<Complex64> = sides.iter().map(|s| s.value).collect();
    let (residual, c_scale) = residual_from_values(&values, center_path.value, vertices, w_c);
    EvalCache {
        t: kernel.t.clone(),
        sides,
        center_path,
        residual,
        c_scale,
    }
}

/// Residual: the log of every side-length ratio against the reference
/// side, plus the placement of the conformal center. Log ratios weight
/// every side by its relative error, so the short sides of a crinkled
/// polygon cannot be traded away for the long ones; they also blow up,
/// rather than vanish, when a prevertex gap collapses. The ratios are
/// consistent but redundant (the angle closure fixes two of them), giving
/// a mildly overdetermined least-squares system.
fn residual_from_values(
    side_integrals: &[Complex64],
    center_integral: Complex64,
    vertices: &[Complex64],
    w_c: Complex64,
) -> (Vec<f64>, Complex64) {
    let n = vertices.len();
    let lengths: Vec<f64> = (0..n)
        .map(|k| (vertices[(k + 1) % n] - vertices[k]).norm())
        .collect();
    let i0 = side_integrals[0].norm();
    let mut r = Vec::with_capacity(n + 1);
    for k in 1..n {
        let ratio = side_integrals[k].norm() / i0 * lengths[0] / lengths[k];
        r.push(ratio.max(1e-300).ln());
    }
    let c_scale = (vertices[1] - vertices[0]) / side_integrals[0];
    let f0 = w_c + c_scale * center_integral;
    r.push((f0 - vertices[0]).re / lengths[0]);
    r.push((f0 - vertices[0]).im / lengths[0]);
    (r, c_scale)
}

/// Exact derivative of the frozen-node quadrature with respect to t_j:
/// d/dt_j (1 − ζe^{−it_j})^{β_j} multiplies each contribution by
/// β_j·iζe^{−it_j}/(1 − ζe^{−it_j}). No finite-difference step is
/// involved, so crowded configurations cannot amplify rounding.
fn reprice_derivative(nodes: &[QuadNode], j: u32, beta_j: f64, emt_j: Complex64) -> Complex64 {
    let mut total = Complex64::ZERO;
    for node in nodes {
        debug_assert_ne!(node.skip, j);
        let m = Complex64::ONE - node.zeta * emt_j;
        total += node.contrib * beta_j * (Complex64::I * node.zeta * emt_j) / m;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn jacobian_cached(
    cache: &EvalCache,
    r0: &[f64],
    y: &[f64],
    beta: &[f64],
    legendre: &Rule,
    jacobi: &[Rule],
    vertices: &[Complex64],
) -> Jacobian {
    let n = vertices.len();
    let m = r0.len();
    let t = &cache.t;

    // d(residual)/d(t_j) for j < n−1, in parallel: analytic derivatives
    // for repriced integrals, finite differences for the few whose panel
    // geometry moves with t_j
    let lengths: Vec<f64> = (0..n)
        .map(|k| (vertices[(k + 1) % n] - vertices[k]).norm())
        .collect();
    let columns: Vec<Vec<f64>> = (0..n - 1)
        .into_par_iter()
        .map(|j| {
            // central differences for the integrals whose panel geometry
            // moves with t_j; the steps only evaluate integrals (order-
            // agnostic in the prevertex positions), so a tiny gap on one
            // side must not shrink h, but collisions are avoided by
            // stepping asymmetrically when a neighbor is very close
            let gap_before = if j == 0 { t[0] } else { t[j] - t[j - 1] };
            let gap_after = t[j + 1] - t[j];
            let room = gap_before.min(gap_after);
            let (h_plus, h_minus) = if room > 1e-9 {
                let h = (1e-7f64).min(0.3 * room);
                (h, -h)
            } else if gap_after >= gap_before {
                let h = (1e-7f64).min(0.4 * gap_after).max(1e-13);
                (h, 0.0)
            } else {
                let h = (1e-7f64).min(0.4 * gap_before).max(1e-13);
                (0.0, -h)
            };
            let span = h_plus - h_minus;
            let mut t_plus = t.clone();
            t_plus[j] += h_plus;
            let mut t_minus = t.clone();
            t_minus[j] += h_minus;
            let kernel_plus = Kernel::new(beta, &t_plus, legendre, jacobi);
            let kernel_minus = Kernel::new(beta, &t_minus, legendre, jacobi);
            let emt_j = Complex64::from_polar(1.0, -t[j]);

            let honest_d = |k: usize| -> Complex64 {
                let plus = if h_plus != 0.0 {
                    kernel_plus.side_integral(k, false).value
                } else {
                    cache.sides[k].value
                };
                let minus = if h_minus != 0.0 {
                    kernel_minus.side_integral(k, false).value
                } else {
                    cache.sides[k].value
                };
                (plus - minus) / span
            };
            let side_before = (j + n - 1) % n;
            let mut dvalues: Vec<Complex64> = Vec::with_capacity(n);
            for k in 0..n {
                if k == j || k == side_before {
                    dvalues.push(honest_d(k));
                } else {
                    dvalues.push(reprice_derivative(
                        &cache.sides[k].nodes,
                        j as u32,
                        beta[j],
                        emt_j,
                    ));
                }
            }
            let dcenter = if j == 0 {
                let plus = if h_plus != 0.0 {
                    kernel_plus.vertex_integral(0, false).value
                } else {
                    cache.center_path.value
                };
                let minus = if h_minus != 0.0 {
                    kernel_minus.vertex_integral(0, false).value
                } else {
                    cache.center_path.value
                };
                (plus - minus) / span
            } else {
                reprice_derivative(&cache.center_path.nodes, j as u32, beta[j], emt_j)
            };

            // propagate through the residual: ratio rows are
            // d ln|I_k| − d ln|I_0| = Re(dI_k/I_k) − Re(dI_0/I_0)
            let i0 = cache.sides[0].value;
            let dlog0 = (dvalues[0] / i0).re;
            let mut col = Vec::with_capacity(r0.len());
            for k in 1..n {
                col.push((dvalues[k] / cache.sides[k].value).re - dlog0);
            }
            // center rows: f0 = w_c + C·F0, C = (v1 − v0)/I_0
            let c_scale = cache.c_scale;
            let dc = -c_scale * (dvalues[0] / i0);
            let df0 = dc * cache.center_path.value + c_scale * dcenter;
            col.push(df0.re / lengths[0]);
            col.push(df0.im / lengths[0]);
            col
        })
        .collect();

    // chain rule into the log-gap chart: t_k = 2π P_k / S
    let mut gaps: Vec<f64> = y.iter().map(|v| v.clamp(-30.0, 30.0).exp()).collect();
    gaps.push(1.0);
    let total: f64 = gaps.iter().sum();

    let mut jac = Jacobian::zeros(m, n - 1);
    for row in 0..m {
        for jj in 0..n - 1 {
            let mut acc = 0.0;
            let gj = gaps[jj];
            for (k, col) in columns.iter().enumerate() {
                let indicator = if jj <= k { TAU } else { 0.0 };
                acc += col[row] * gj * (indicator - t[k]) / total;
            }
            jac.set(row, jj, acc);
        }
    }
    jac
}
