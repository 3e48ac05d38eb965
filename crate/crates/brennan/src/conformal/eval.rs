//! Integrand evaluation and compound quadrature for the mapping integrals.
//!
//! The integrand `Π_k (1 − ζ e^{−i t_k})^{β_k}` has one singular factor per
//! prevertex. Integration paths are straight segments split into panels
//! under the one-half rule: no panel extends further than half the distance
//! from its start to the nearest singularity. A panel that starts exactly
//! at prevertex k absorbs that factor into a Gauss–Jacobi rule with weight
//! `(1+x)^{β_k}`; all other panels use Gauss–Legendre.

use super::quad::Rule;
use num_complex::Complex64;

/// Cap on panels per path; reaching it folds the remainder into one panel,
/// degrading accuracy instead of diverging.
const MAX_PANELS: usize = 96;

/// Marker for "no absorbed factor" in a quadrature node record.
pub const NO_SKIP: u32 = u32::MAX;

/// One recorded quadrature node: the integral is Σ `contrib`, and the
/// contribution still contains every integrand factor except `skip`.
#[derive(Debug, Clone, Copy)]
pub struct QuadNode {
    pub zeta: Complex64,
    pub contrib: Complex64,
    pub skip: u32,
}

/// A fully evaluated path integral with its node breakdown.
#[derive(Debug, Clone, Default)]
pub struct PathIntegral {
    pub value: Complex64,
    pub nodes: Vec<QuadNode>,
}

/// Prevertex geometry plus quadrature tables for one prevertex
/// configuration.
pub struct Kernel<'a> {
    pub beta: &'a [f64],
    pub t: Vec<f64>,
    pub zpre: Vec<Complex64>,
    emt: Vec<Complex64>,
    legendre: &'a Rule,
    jacobi: &'a [Rule],
}

impl<'a> Kernel<'a> {
    pub fn new(beta: &'a [f64], t: &[f64], legendre: &'a Rule, jacobi: &'a [Rule]) -> Self {
        let zpre: Vec<Complex64> = t.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
        let emt: Vec<Complex64> = t.iter().map(|&a| Complex64::from_polar(1.0, -a)).collect();
        Self {
            beta,
            t: t.to_vec(),
            zpre,
            emt,
            legendre,
            jacobi,
        }
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }

    /// Π_k (1 − z e^{−i t_k})^{β_k}, optionally skipping one factor.
    ///
    /// Every factor has nonnegative real part on the closed disk, so the
    /// principal logarithm is continuous and the product of principal
    /// powers equals the principal power of the product along any path.
    pub fn product(&self, z: Complex64, skip: u32) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (k, (emt, &beta)) in self.emt.iter().zip(self.beta).enumerate() {
            if k as u32 == skip {
                continue;
            }
            let mut m = Complex64::ONE - z * emt;
            if m.norm_sqr() < 1e-280 {
                m = Complex64::new(1e-140, 0.0);
            }
            acc += beta * m.ln();
        }
        acc.exp()
    }

    /// Distance from `p` to the nearest prevertex other than `skip`.
    pub fn nearest_prevertex(&self, p: Complex64, skip: u32) -> f64 {
        let mut best = f64::INFINITY;
        for (k, z) in self.zpre.iter().enumerate() {
            if k as u32 == skip {
                continue;
            }
            best = best.min((p - z).norm());
        }
        best
    }

    fn legendre_panel(&self, a: Complex64, b: Complex64, out: &mut PathIntegral, record: bool) {
        let mid = (a + b) / 2.0;
        let h = (b - a) / 2.0;
        for (&x, &w) in self.legendre.nodes.iter().zip(&self.legendre.weights) {
            let zeta = mid + h * x;
            let contrib = h * w * self.product(zeta, NO_SKIP);
            out.value += contrib;
            if record {
                out.nodes.push(QuadNode {
                    zeta,
                    contrib,
                    skip: NO_SKIP,
                });
            }
        }
    }

    /// Gauss–Jacobi panel from prevertex `k` to `end`, absorbing factor k.
    fn jacobi_panel(&self, k: usize, end: Complex64, out: &mut PathIntegral, record: bool) {
        let a = self.zpre[k];
        let span = end - a;
        if span.norm() < 1e-15 {
            return;
        }
        let beta = self.beta[k];
        // factor k along the panel is s·c with s ∈ (0,1]; arg(c) ∈ [−π/2, π/2]
        let c = -self.emt[k] * span;
        let prefactor = span * c.powf(beta) * 2.0f64.powf(-beta - 1.0);
        let rule = &self.jacobi[k];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let zeta = a + span * (1.0 + x) / 2.0;
            let contrib = prefactor * w * self.product(zeta, k as u32);
            out.value += contrib;
            if record {
                out.nodes.push(QuadNode {
                    zeta,
                    contrib,
                    skip: k as u32,
                });
            }
        }
    }

    /// Straight-path integral between interior (or boundary, non-prevertex)
    /// points under the one-half rule.
    pub fn interior_path(&self, a: Complex64, b: Complex64, record: bool) -> PathIntegral {
        let mut out = PathIntegral::default();
        let mut p = a;
        for _ in 0..MAX_PANELS {
            let rem = b - p;
            if rem.norm() < 1e-15 {
                return out;
            }
            let cap = (self.nearest_prevertex(p, NO_SKIP) / 2.0).max(1e-13);
            let step = if rem.norm() <= cap {
                rem
            } else {
                rem / rem.norm() * cap
            };
            self.legendre_panel(p, p + step, &mut out, record);
            p += step;
        }
        if (b - p).norm() > 1e-15 {
            self.legendre_panel(p, b, &mut out, record);
        }
        out
    }

    /// Path integral from prevertex `k` to `q` with the singularity
    /// absorbed at the start.
    pub fn path_from_prevertex(&self, k: usize, q: Complex64, record: bool) -> PathIntegral {
        let mut out = PathIntegral::default();
        let a = self.zpre[k];
        let span = q - a;
        if span.norm() < 1e-15 {
            return out;
        }
        let d = self.nearest_prevertex(a, k as u32);
        let first_end = if span.norm() <= d / 2.0 {
            q
        } else {
            a + span / span.norm() * (d / 2.0)
        };
        self.jacobi_panel(k, first_end, &mut out, record);
        if (q - first_end).norm() > 1e-15 {
            let rest = self.interior_path(first_end, q, record);
            out.value += rest.value;
            out.nodes.extend(rest.nodes);
        }
        out
    }

    /// Side integral from prevertex `k` to prevertex `k+1` (mod n): both
    /// endpoint singularities absorbed, meeting at the chord midpoint.
    pub fn side_integral(&self, k: usize, record: bool) -> PathIntegral {
        let n = self.n();
        let k1 = (k + 1) % n;
        let mid = (self.zpre[k] + self.zpre[k1]) / 2.0;
        let mut fwd = self.path_from_prevertex(k, mid, record);
        let back = self.path_from_prevertex(k1, mid, record);
        fwd.value -= back.value;
        if record {
            fwd.nodes.extend(back.nodes.into_iter().map(|mut node| {
                node.contrib = -node.contrib;
                node
            }));
        }
        fwd
    }

    /// Integral from the disk center to prevertex `k`.
    pub fn vertex_integral(&self, k: usize, record: bool) -> PathIntegral {
        let m = self.zpre[k] * 0.5;
        let mut out = self.interior_path(Complex64::ZERO, m, record);
        let tail = self.path_from_prevertex(k, m, record);
        out.value -= tail.value;
        if record {
            out.nodes.extend(tail.nodes.into_iter().map(|mut node| {
                node.contrib = -node.contrib;
                node
            }));
        }
        out
    }

    /// Integral from 0 to an arbitrary point of the closed disk, routing
    /// through the vertex rule when `z` coincides with a prevertex.
    pub fn integral_from_center(&self, z: Complex64) -> Complex64 {
        for (k, zp) in self.zpre.iter().enumerate() {
            if (z - zp).norm() < 1e-13 {
                return self.vertex_integral(k, false).value;
            }
        }
        self.interior_path(Complex64::ZERO, z, false).value
    }
}
