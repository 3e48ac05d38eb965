//! Numerical Riemann map from the unit disk onto a simple polygon.
//!
//! The map is the classical integral `f(z) = w_c + C ∫₀^z Π_k (1 − ζ
//! e^{−it_k})^{α_k − 1} dζ`. [`solve_parameter_problem`] determines the
//! prevertex angles and the constant; [`SchwarzChristoffelMap::forward`],
//! [`SchwarzChristoffelMap::deriv`] and [`SchwarzChristoffelMap::inverse`]
//! evaluate the solved map.

pub mod eval;
mod param;
pub mod quad;

use crate::geom;
use crate::polygon::BoundaryPolygon;
use eval::Kernel;
use num_complex::Complex64;
use quad::Rule;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub use param::solve_parameter_problem;

#[derive(Debug, thiserror::Error)]
pub enum ScError {
    #[error("polygon must be simple, ccw and have ≥ 3 vertices: {0}")]
    BadPolygon(String),
    #[error("prescribed conformal center {0} is not inside the polygon")]
    BadCenter(Complex64),
    #[error(
        "parameter iteration did not converge: worst residual {worst_residual:.3e} after {iterations} iterations{}",
        worst_side.map(|s| format!(" (worst side starts at vertex {s})")).unwrap_or_default()
    )]
    NoConvergence {
        worst_residual: f64,
        iterations: usize,
        /// Vertex index (input labeling) starting the worst-residual side.
        worst_side: Option<usize>,
        /// All sides whose log-ratio residual stayed above 0.3 (input
        /// labeling, by starting vertex).
        stuck_sides: Vec<usize>,
        /// Best prevertex angles reached, in the input vertex labeling;
        /// usable to warm-start a retry.
        best_prevertices: Vec<f64>,
    },
    #[error(
        "prevertex crowding: gap {gap:.3e} underflows the {gap_min:.3e} floor (vertex {vertex})"
    )]
    CrowdingOverflow {
        gap: f64,
        gap_min: f64,
        /// Vertex (input labeling) whose prevertex ends the collapsed gap.
        vertex: usize,
        /// Best prevertex angles reached, in the input vertex labeling.
        best_prevertices: Vec<f64>,
    },
    #[error("point {0} is outside the polygon")]
    OutsideDomain(Complex64),
    #[error("inverse iteration stalled at residual {residual:.3e} (best iterate {best})")]
    InverseNoConvergence { best: Complex64, residual: f64 },
    #[error("map file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Choice of conformal center w_c = f(0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterChoice {
    /// Area centroid of the polygon.
    Centroid,
    /// A prescribed interior point.
    Point(Complex64),
}

#[derive(Debug, Clone)]
pub struct ScOptions {
    /// Nodes per quadrature panel.
    pub quadrature_nodes: usize,
    /// Iteration cap for the parameter solve.
    pub max_iters: usize,
    /// Required max-norm of the side-length/center residual.
    pub residual_tol: f64,
    /// Smallest tolerated prevertex gap before failing with crowding.
    pub gap_min: f64,
    pub center: CenterChoice,
    /// Optional initial prevertex angles (ascending, one per vertex).
    pub initial_prevertices: Option<Vec<f64>>,
    /// Vertex interpolation tolerance, relative to the polygon diameter.
    pub tol_vertex_rel: f64,
    /// Inverse-map tolerance, relative to the polygon diameter.
    pub tol_inv_rel: f64,
}

impl Default for ScOptions {
    fn default() -> Self {
        Self {
            quadrature_nodes: 8,
            max_iters: 150,
            residual_tol: 1e-8,
            gap_min: 1e-9,
            center: CenterChoice::Centroid,
            initial_prevertices: None,
            tol_vertex_rel: 1e-6,
            tol_inv_rel: 1e-9,
        }
    }
}

/// Convergence report of the parameter solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScDiagnostics {
    pub iterations: usize,
    pub max_residual: f64,
    pub min_prevertex_gap: f64,
    pub worst_vertex_error: f64,
}

/// A solved disk → polygon Schwarz–Christoffel map.
///
/// Vertex `k` of the stored polygon corresponds to the prevertex
/// `e^{i t_k}`; the vertex labeling may be a cyclic rotation of the input
/// polygon's (the solver anchors its gauge on the longest side).
pub struct SchwarzChristoffelMap {
    polygon: BoundaryPolygon,
    prevertices: Vec<f64>,
    alphas: Vec<f64>,
    scale: Complex64,
    center: Complex64,
    quadrature_nodes: usize,
    tol_inv_rel: f64,
    diagnostics: ScDiagnostics,
    legendre: Rule,
    jacobi: Vec<Rule>,
    diameter: f64,
}

impl SchwarzChristoffelMap {
    pub(crate) fn assemble(
        polygon: BoundaryPolygon,
        prevertices: Vec<f64>,
        alphas: Vec<f64>,
        scale: Complex64,
        center: Complex64,
        quadrature_nodes: usize,
        tol_inv_rel: f64,
        diagnostics: ScDiagnostics,
    ) -> Self {
        let legendre = quad::gauss_legendre(quadrature_nodes);
        let jacobi = alphas
            .iter()
            .map(|&a| quad::gauss_jacobi(quadrature_nodes, 0.0, a - 1.0))
            .collect();
        let diameter = geom::diameter(&polygon.vertices);
        Self {
            polygon,
            prevertices,
            alphas,
            scale,
            center,
            quadrature_nodes,
            tol_inv_rel,
            diagnostics,
            legendre,
            jacobi,
            diameter,
        }
    }

    pub fn polygon(&self) -> &BoundaryPolygon {
        &self.polygon
    }

    pub fn prevertices(&self) -> &[f64] {
        &self.prevertices
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn diagnostics(&self) -> &ScDiagnostics {
        &self.diagnostics
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    fn betas(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| a - 1.0).collect()
    }

    fn kernel<'a>(&'a self, beta: &'a [f64]) -> Kernel<'a> {
        Kernel::new(beta, &self.prevertices, &self.legendre, &self.jacobi)
    }

    /// Forward evaluation `f(z)` for `|z| ≤ 1`.
    pub fn forward(&self, z: Complex64) -> Complex64 {
        let beta = self.betas();
        let kernel = self.kernel(&beta);
        self.center + self.scale * kernel.integral_from_center(z)
    }

    /// Forward evaluation together with a quadrature self-refinement error
    /// estimate (the change under doubling the node count).
    pub fn forward_with_error(&self, z: Complex64) -> (Complex64, f64) {
        let w = self.forward(z);
        let fine_leg = quad::gauss_legendre(self.quadrature_nodes * 2);
        let fine_jac: Vec<Rule> = self
            .alphas
            .iter()
            .map(|&a| quad::gauss_jacobi(self.quadrature_nodes * 2, 0.0, a - 1.0))
            .collect();
        let beta = self.betas();
        let kernel = Kernel::new(&beta, &self.prevertices, &fine_leg, &fine_jac);
        let w_fine = self.center + self.scale * kernel.integral_from_center(z);
        (w, (w - w_fine).norm())
    }

    /// Derivative `f′(z) = C Π_k (1 − z e^{−it_k})^{α_k − 1}` in closed form.
    pub fn deriv(&self, z: Complex64) -> Complex64 {
        let beta = self.betas();
        let kernel = self.kernel(&beta);
        self.scale * kernel.product(z, eval::NO_SKIP)
    }

    /// Inverse map: `z` with `forward(z) = w`, for `w` strictly inside the
    /// polygon. The target is approached in hops along the segment from
    /// the center; each hop integrates `dz/ds = Δw/f′(z)` and polishes
    /// with Newton, so deep nonconvex pockets are entered gradually.
    pub fn inverse(&self, w: Complex64) -> Result<Complex64, ScError> {
        if !self.polygon.contains(w) {
            return Err(ScError::OutsideDomain(w));
        }
        let tol = self.tol_inv_rel * self.diameter;
        let beta = self.betas();
        let kernel = self.kernel(&beta);

        let newton = |start: Complex64, target: Complex64, iters: usize| -> (Complex64, f64) {
            let mut z = start;
            let mut best = z;
            let mut best_res = f64::INFINITY;
            for _ in 0..iters {
                let f = self.center + self.scale * kernel.integral_from_center(z);
                let res = (f - target).norm();
                if res < best_res {
                    best_res = res;
                    best = z;
                }
                if res <= tol {
                    break;
                }
                let fp = self.scale * kernel.product(z, eval::NO_SKIP);
                let mut step = (f - target) / fp;
                while step.norm() > 0.5 {
                    step *= 0.5;
                }
                z = clamp_disk(z - step);
            }
            (best, best_res)
        };

        let mut z = Complex64::ZERO;
        for hops in [1usize, 4, 12] {
            z = Complex64::ZERO;
            let mut from = self.center;
            for hop in 1..=hops {
                let target = self.center + (w - self.center) * hop as f64 / hops as f64;
                // ODE leg toward this hop's target
                let dw = target - from;
                let steps = 8;
                let h = 1.0 / steps as f64;
                for _ in 0..steps {
                    let rhs = |p: Complex64| {
                        dw / (self.scale * kernel.product(clamp_disk(p), eval::NO_SKIP))
                    };
                    let k1 = rhs(z);
                    let k2 = rhs(z + 0.5 * h * k1);
                    let k3 = rhs(z + 0.5 * h * k2);
                    let k4 = rhs(z + h * k3);
                    z = clamp_disk(z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
                }
                let (polished, res) = newton(z, target, 30);
                // only accept the polish when it actually improved things;
                // intermediate hop targets may fall outside the domain
                if res <= tol || res < (target - from).norm() {
                    z = polished;
                }
                from = target;
            }
            let (final_z, final_res) = newton(z, w, 60);
            if final_res <= tol {
                return Ok(final_z);
            }
            z = final_z;
        }
        let f = self.center + self.scale * kernel.integral_from_center(z);
        Err(ScError::InverseNoConvergence {
            best: z,
            residual: (f - w).norm(),
        })
    }

    /// Largest distance between `forward(e^{i t_k})` and vertex k.
    pub fn worst_vertex_error(&self) -> f64 {
        let beta = self.betas();
        let kernel = self.kernel(&beta);
        let mut worst: f64 = 0.0;
        for k in 0..self.polygon.len() {
            let f = self.center + self.scale * kernel.vertex_integral(k, false).value;
            worst = worst.max((f - self.polygon.vertices[k]).norm());
        }
        worst
    }

    pub fn to_json(&self, polygon_file: &str) -> String {
        let record = MapRecord {
            prevertices: self.prevertices.clone(),
            alphas: self.alphas.clone(),
            scale: [self.scale.re, self.scale.im],
            center: [self.center.re, self.center.im],
            polygon_file: polygon_file.to_string(),
            quadrature_nodes: self.quadrature_nodes,
            tol_inv_rel: self.tol_inv_rel,
            diagnostics: self.diagnostics.clone(),
        };
        serde_json::to_string_pretty(&record).expect("map record serializes")
    }

    pub fn write_json(&self, path: &Path, polygon_file: &str) -> Result<(), ScError> {
        std::fs::write(path, self.to_json(polygon_file))?;
        Ok(())
    }

    /// Reloads a map written by [`Self::write_json`]; the polygon CSV path
    /// is resolved relative to the JSON file's directory.
    pub fn read_json(path: &Path) -> Result<Self, ScError> {
        let text = std::fs::read_to_string(path)?;
        let record: MapRecord =
            serde_json::from_str(&text).map_err(|e| ScError::Format(e.to_string()))?;
        let polygon_path = {
            let p = Path::new(&record.polygon_file);
            if p.is_absolute() || p.exists() {
                p.to_path_buf()
            } else {
                path.parent().unwrap_or(Path::new(".")).join(p)
            }
        };
        let polygon = BoundaryPolygon::read_csv(&polygon_path)
            .map_err(|e| ScError::Format(format!("polygon csv: {e}")))?;
        Ok(Self::assemble(
            polygon,
            record.prevertices,
            record.alphas,
            Complex64::new(record.scale[0], record.scale[1]),
            Complex64::new(record.center[0], record.center[1]),
            record.quadrature_nodes,
            record.tol_inv_rel,
            record.diagnostics,
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct MapRecord {
    prevertices: Vec<f64>,
    alphas: Vec<f64>,
    scale: [f64; 2],
    center: [f64; 2],
    polygon_file: String,
    quadrature_nodes: usize,
    tol_inv_rel: f64,
    diagnostics: ScDiagnostics,
}

fn clamp_disk(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n > 1.0 - 1e-14 {
        z / n * (1.0 - 1e-14)
    } else {
        z
    }
}

/// Area centroid of a simple polygon.
pub fn polygon_centroid(vertices: &[Complex64]) -> Complex64 {
    let n = vertices.len();
    let mut area6 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        let cr = p.re * q.im - q.re * p.im;
        area6 += cr;
        cx += (p.re + q.re) * cr;
        cy += (p.im + q.im) * cr;
    }
    Complex64::new(cx / (3.0 * area6), cy / (3.0 * area6))
}
