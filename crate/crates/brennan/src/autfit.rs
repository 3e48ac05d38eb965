//! Estimating conjugated generators as disk automorphisms.
//!
//! For a Möbius map X preserving the approximated domain, the conjugation
//! f⁻¹∘X∘f through the Riemann map is (up to polygonal approximation error)
//! a disk automorphism λ(z−a)/(1−āz). Sampled correspondences
//! w_i = f⁻¹(X(f(z_i))) are fitted by nonlinear least squares over
//! (λ, a) ∈ 𝕊¹×𝔻, and fits from independent smaller polygons validate the
//! main estimate as a cluster.

use crate::conformal::{ScError, SchwarzChristoffelMap};
use crate::lm::{self, LmOptions};
use crate::moebius::{DiskAutomorphism, MoebiusMap, SpherePoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error("need at least 8 samples, got {0}")]
    TooFewSamples(usize),
    #[error("{dropped} of {total} samples left the polygon after applying X")]
    TooFewValidSamples { dropped: usize, total: usize },
    #[error("inverse map failed during sampling: {0}")]
    Inverse(#[from] ScError),
    #[error("fit produced an invalid automorphism: {0}")]
    BadEstimate(#[from] crate::moebius::MoebiusError),
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Samples are drawn uniformly by area in the disk of this radius.
    pub max_radius: f64,
    /// Number of multi-start phases for λ.
    pub multistarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_radius: 1.0,
            multistarts: 8,
        }
    }
}

/// Outcome of one disk-automorphism fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub estimate: DiskAutomorphism,
    pub residual_rms: f64,
    pub sample_count: usize,
    pub dropped: usize,
    pub seed: u64,
    pub converged: bool,
}

impl FitResult {
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "lambda": [self.estimate.lambda.re, self.estimate.lambda.im],
            "a": [self.estimate.a.re, self.estimate.a.im],
            "residual_rms": self.residual_rms,
            "n": self.sample_count,
            "dropped": self.dropped,
            "converged": self.converged,
        })
        .to_string()
    }
}

/// Draws `n` points uniformly by area from the disk of radius `max_radius`
/// (rejection from the bounding square), deterministic given the seed.
pub fn disk_samples(n: usize, max_radius: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let re: f64 = rng.random_range(-1.0..1.0);
        let im: f64 = rng.random_range(-1.0..1.0);
        let z = Complex64::new(re, im);
        if z.norm() <= max_radius {
            out.push(z);
        }
    }
    out
}

/// Fits f⁻¹∘X∘f by sampled least squares (the polygon's Riemann map stands
/// in for f). Sample pairs whose X-image leaves the polygon are dropped and
/// counted.
pub fn fit_disk_automorphism(
    map: &SchwarzChristoffelMap,
    x_map: &MoebiusMap,
    n: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    if n < 8 {
        return Err(FitError::TooFewSamples(n));
    }
    let samples = disk_samples(n, opts.max_radius, seed);
    let mut zs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    let mut dropped = 0usize;
    for z in samples {
        let fz = map.forward(z);
        let xfz = match x_map.apply(SpherePoint::Finite(fz)) {
            SpherePoint::Finite(w) => w,
            SpherePoint::Infinity => {
                dropped += 1;
                continue;
            }
        };
        if !map.polygon().contains(xfz) {
            dropped += 1;
            continue;
        }
        match map.inverse(xfz) {
            Ok(w) => {
                zs.push(z);
                ws.push(w);
            }
            // points the approximate map cannot resolve (outside the
            // polygon, or wedged deep in a pocket the inverse iteration
            // cannot reach) are dropped and counted alike
            Err(ScError::OutsideDomain(_)) | Err(ScError::InverseNoConvergence { .. }) => {
                dropped += 1
            }
            Err(e) => return Err(FitError::Inverse(e)),
        }
    }
    if dropped * 2 > n {
        return Err(FitError::TooFewValidSamples { dropped, total: n });
    }
    let (aut, rms, converged) = fit_samples(&zs, &ws, opts.multistarts)?;
    Ok(FitResult {
        estimate: aut,
        residual_rms: rms,
        sample_count: zs.len(),
        dropped,
        seed,
        converged,
    })
}

/// Core least-squares fit on explicit (z, w) pairs.
pub fn fit_samples(
    zs: &[Complex64],
    ws: &[Complex64],
    multistarts: usize,
) -> Result<(DiskAutomorphism, f64, bool), FitError> {
    assert_eq!(zs.len(), ws.len());
    let m = zs.len();
    if m < 4 {
        return Err(FitError::TooFewSamples(m));
    }
    // canonical sample order makes the fit bitwise independent of the
    // order the caller produced the pairs in
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        (zs[i].re, zs[i].im)
            .partial_cmp(&(zs[j].re, zs[j].im))
            .unwrap()
    });
    let zs: Vec<Complex64> = order.iter().map(|&i| zs[i]).collect();
    let ws: Vec<Complex64> = order.iter().map(|&i| ws[i]).collect();
    let (zs, ws) = (&zs[..], &ws[..]);

    // unconstrained chart: λ = e^{iφ}, a = u / √(1 + |u|²)
    let model = |p: &[f64]| -> Vec<f64> {
        let lambda = Complex64::from_polar(1.0, p[0]);
        let u = Complex64::new(p[1], p[2]);
        let a = u / (1.0 + u.norm_sqr()).sqrt();
        let mut r = Vec::with_capacity(2 * m);
        for (z, w) in zs.iter().zip(ws) {
            let pred = lambda * (z - a) / (Complex64::ONE - a.conj() * z);
            r.push((w - pred).re);
            r.push((w - pred).im);
        }
        r
    };
    // analytic Jacobian: ∂m/∂φ = i·m; for the center, g = (z−a)/(1−āz)
    // has ∂g/∂a = −1/(1−āz) and ∂g/∂ā = z(z−a)/(1−āz)²
    let jacobian = |p: &[f64], _r0: &[f64]| -> lm::Jacobian {
        let lambda = Complex64::from_polar(1.0, p[0]);
        let u = Complex64::new(p[1], p[2]);
        let s = (1.0 + u.norm_sqr()).sqrt();
        let a = u / s;
        let da_du1 = Complex64::new(1.0 / s, 0.0) - a * (p[1] / (s * s));
        let da_du2 = Complex64::new(0.0, 1.0 / s) - a * (p[2] / (s * s));
        let mut jac = lm::Jacobian::zeros(2 * m, 3);
        for (i, z) in zs.iter().enumerate() {
            let den = Complex64::ONE - a.conj() * z;
            let g = (z - a) / den;
            let mval = lambda * g;
            let dm_dphi = Complex64::I * mval;
            let dg_da = -den.inv();
            let dg_dabar = z * (z - a) / (den * den);
            let dm_du1 = lambda * (dg_da * da_du1 + dg_dabar * da_du1.conj());
            let dm_du2 = lambda * (dg_da * da_du2 + dg_dabar * da_du2.conj());
            // r = w − m, so ∂r = −∂m
            for (col, dm) in [dm_dphi, dm_du1, dm_du2].iter().enumerate() {
                jac.set(2 * i, col, -dm.re);
                jac.set(2 * i + 1, col, -dm.im);
            }
        }
        jac
    };

    // heuristic center start: the mean displacement z − w
    let mean_disp: Complex64 =
        zs.iter().zip(ws).map(|(z, w)| z - w).sum::<Complex64>() / m as f64;
    let a0 = {
        let norm = mean_disp.norm();
        if norm > 0.85 {
            mean_disp / norm * 0.85
        } else {
            mean_disp
        }
    };
    let u0 = a0 / (1.0 - a0.norm_sqr()).sqrt();

    let mut best: Option<lm::LmOutcome> = None;
    for j in 0..multistarts.max(1) {
        let phi = std::f64::consts::TAU * j as f64 / multistarts.max(1) as f64;
        let out = lm::minimize(
            &[phi, u0.re, u0.im],
            model,
            jacobian,
            &LmOptions {
                max_iters: 300,
                grad_tol: 1e-10,
                step_tol: 1e-15,
                ..Default::default()
            },
        );
        if best.as_ref().map(|b| out.rss < b.rss).unwrap_or(true) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    let lambda = Complex64::from_polar(1.0, best.x[0]);
    let u = Complex64::new(best.x[1], best.x[2]);
    let a = u / (1.0 + u.norm_sqr()).sqrt();
    let aut = DiskAutomorphism::new(lambda, a)?;
    let rms = (best.rss / m as f64).sqrt();
    Ok((aut, rms, best.converged && best.grad_norm <= 1e-10))
}

/// Componentwise cluster statistics of repeated fits.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    /// (Re λ, Im λ, Re a, Im a) means over the cluster.
    pub mean: [f64; 4],
    /// Componentwise sample standard deviations.
    pub std: [f64; 4],
    /// Z-scores of the main estimate against the cluster.
    pub z_scores: [f64; 4],
    /// True when every component's z-score is at most 3.
    pub consistent: bool,
    pub runs: usize,
}

fn components(fit: &FitResult) -> [f64; 4] {
    [
        fit.estimate.lambda.re,
        fit.estimate.lambda.im,
        fit.estimate.a.re,
        fit.estimate.a.im,
    ]
}

/// Compares the main estimate against fits from independent polygons.
pub fn validate_cluster(results: &[FitResult], main: &FitResult) -> ClusterReport {
    assert!(results.len() >= 5, "cluster validation needs ≥ 5 runs");
    let n = results.len() as f64;
    let cols: Vec<[f64; 4]> = results.iter().map(components).collect();
    let mut mean = [0.0f64; 4];
    let mut std = [0.0f64; 4];
    for i in 0..4 {
        // a constant column has exactly zero spread, whatever rounding says
        if cols.iter().all(|c| c[i] == cols[0][i]) {
            mean[i] = cols[0][i];
            continue;
        }
        mean[i] = cols.iter().map(|c| c[i]).sum::<f64>() / n;
        std[i] = (cols.iter().map(|c| (c[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    }
    let main_c = components(main);
    let mut z = [0.0f64; 4];
    for i in 0..4 {
        let diff = (main_c[i] - mean[i]).abs();
        z[i] = if std[i] > 1e-300 {
            diff / std[i]
        } else if diff <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    ClusterReport {
        mean,
        std,
        consistent: z.iter().all(|&v| v <= 3.0),
        z_scores: z,
        runs: results.len(),
    }
}

/// CSV rows for a cluster of fits: one per run plus the main estimate.
pub fn cluster_csv(results: &[FitResult], main: &FitResult) -> String {
    let mut out = String::from("run,lambda_re,lambda_im,a_re,a_im,residual_rms,dropped,converged\n");
    for (i, fit) in results.iter().enumerate() {
        let c = components(fit);
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.6e},{},{}\n",
            i, c[0], c[1], c[2], c[3], fit.residual_rms, fit.dropped, fit.converged
        ));
    }
    let c = components(main);
    out.push_str(&format!(
        "main,{:.17e},{:.17e},{:.17e},{:.17e},{:.6e},{},{}\n",
        c[0], c[1], c[2], c[3], main.residual_rms, main.dropped, main.converged
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_pairs(
        aut: &DiskAutomorphism,
        n: usize,
        seed: u64,
        noise: f64,
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let zs = disk_samples(n, 0.9, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        let ws = zs
            .iter()
            .map(|&z| {
                let w = aut.apply(z);
                if noise > 0.0 {
                    // complex Gaussian with E|ξ|² = noise²
                    let g1: f64 = gaussian(&mut rng);
                    let g2: f64 = gaussian(&mut rng);
                    w + Complex64::new(g1, g2) * (noise / 2.0f64.sqrt())
                } else {
                    w
                }
            })
            .collect();
        (zs, ws)
    }

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        // Box–Muller
        let u1: f64 = rng.random_range(1e-12..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[test]
    fn zero_noise_recovery() {
        let truth = DiskAutomorphism::new(
            Complex64::from_polar(1.0, 2.3),
            Complex64::new(0.35, -0.2),
        )
        .unwrap();
        let (zs, ws) = synthetic_pairs(&truth, 64, 7, 0.0);
        let (fit, rms, converged) = fit_samples(&zs, &ws, 8).unwrap();
        assert!(converged);
        assert!(rms <= 1e-12, "rms {rms}");
        assert!((fit.lambda - truth.lambda).norm() <= 1e-9);
        assert!((fit.a - truth.a).norm() <= 1e-9);
    }

    #[test]
    fn identity_data_fits_identity() {
        let zs = disk_samples(32, 0.9, 3);
        let ws = zs.clone();
        let (fit, _, _) = fit_samples(&zs, &ws, 8).unwrap();
        assert!((fit.lambda - Complex64::ONE).norm() <= 1e-9);
        assert!(fit.a.norm() <= 1e-9);
    }

    #[test]
    fn noise_calibration() {
        let truth =
            DiskAutomorphism::new(Complex64::from_polar(1.0, -1.1), Complex64::new(-0.1, 0.4))
                .unwrap();
        let sigma = 1e-3;
        let (zs, ws) = synthetic_pairs(&truth, 256, 11, sigma);
        let (fit, rms, _) = fit_samples(&zs, &ws, 8).unwrap();
        assert!(
            rms >= 0.5 * sigma && rms <= 2.0 * sigma,
            "rms {rms} outside [{}, {}]",
            0.5 * sigma,
            2.0 * sigma
        );
        let err = (fit.lambda - truth.lambda).norm() + (fit.a - truth.a).norm();
        assert!(err <= 10.0 * sigma / (256f64).sqrt() * 4.0, "err {err}");
    }

    #[test]
    fn rotation_gauge_covariance() {
        // replacing f by f∘r turns the fitted γ into r⁻¹∘γ∘r
        let truth = DiskAutomorphism::new(
            Complex64::from_polar(1.0, 0.7),
            Complex64::new(0.25, 0.3),
        )
        .unwrap();
        let beta = 0.9f64;
        let rot = Complex64::from_polar(1.0, beta);
        let zs = disk_samples(64, 0.9, 21);
        // data seen through the rotated map
        let ws: Vec<Complex64> = zs
            .iter()
            .map(|&z| truth.apply(rot * z) / rot)
            .collect();
        let (fit, _, _) = fit_samples(&zs, &ws, 8).unwrap();
        // expected: r⁻¹∘truth∘r has λ unchanged and a multiplied by e^{−iβ}
        assert!((fit.lambda - truth.lambda).norm() <= 1e-6);
        assert!((fit.a - truth.a / rot).norm() <= 1e-6);
    }

    #[test]
    fn fit_is_permutation_invariant_bitwise() {
        let truth = DiskAutomorphism::new(
            Complex64::from_polar(1.0, 0.9),
            Complex64::new(0.2, 0.25),
        )
        .unwrap();
        let (zs, ws) = synthetic_pairs(&truth, 48, 13, 1e-4);
        let (f1, _, _) = fit_samples(&zs, &ws, 4).unwrap();
        let mut idx: Vec<usize> = (0..zs.len()).collect();
        idx.reverse();
        idx.swap(3, 17);
        let zs2: Vec<Complex64> = idx.iter().map(|&i| zs[i]).collect();
        let ws2: Vec<Complex64> = idx.iter().map(|&i| ws[i]).collect();
        let (f2, _, _) = fit_samples(&zs2, &ws2, 4).unwrap();
        assert_eq!(f1.lambda.re.to_bits(), f2.lambda.re.to_bits());
        assert_eq!(f1.lambda.im.to_bits(), f2.lambda.im.to_bits());
        assert_eq!(f1.a.re.to_bits(), f2.a.re.to_bits());
        assert_eq!(f1.a.im.to_bits(), f2.a.im.to_bits());
    }

    #[test]
    fn cluster_statistics() {
        let mk = |lam_re: f64, a_re: f64| FitResult {
            estimate: DiskAutomorphism::new(
                Complex64::new(lam_re, (1.0 - lam_re * lam_re).sqrt()),
                Complex64::new(a_re, 0.1),
            )
            .unwrap(),
            residual_rms: 0.01,
            sample_count: 64,
            dropped: 0,
            seed: 0,
            converged: true,
        };
        let cluster: Vec<FitResult> = [0.59, 0.60, 0.61, 0.605, 0.595, 0.6]
            .iter()
            .map(|&l| mk(l, 0.3))
            .collect();
        let main = mk(0.6, 0.3);
        let report = validate_cluster(&cluster, &main);
        assert!(report.consistent, "{:?}", report.z_scores);
        let outlier = mk(0.9, 0.3);
        let report = validate_cluster(&cluster, &outlier);
        assert!(!report.consistent);
    }

    #[test]
    fn identical_cluster_degenerates_cleanly() {
        let fit = FitResult {
            estimate: DiskAutomorphism::new(Complex64::ONE, Complex64::new(0.2, 0.0)).unwrap(),
            residual_rms: 0.0,
            sample_count: 16,
            dropped: 0,
            seed: 0,
            converged: true,
        };
        let cluster: Vec<FitResult> = (0..6).map(|_| fit.clone()).collect();
        let report = validate_cluster(&cluster, &fit);
        assert!(report.consistent);
        assert!(report.std.iter().all(|&s| s == 0.0));
        assert!(report.z_scores.iter().all(|&z| z == 0.0));
    }
}
