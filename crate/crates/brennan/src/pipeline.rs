//! Stage orchestration: configuration, persistence, provenance, figures.
//!
//! Five stages mirror the mathematical pipeline — `build-polygon`,
//! `solve-map`, `fit-generators`, `shell-sums`, `p-star` — and `full`
//! chains them. Every stage reads its predecessor's files from the output
//! directory, writes its own, and appends a provenance record to
//! `manifest.jsonl`. All artifacts are reproducible from (config, seed);
//! only the manifest carries wall-clock times.

use crate::autfit::{self, FitOptions, FitResult};
use crate::conformal::{self, CenterChoice, ScOptions, SchwarzChristoffelMap};
use crate::grafting::{self, GroupPair, TileArc, TileModel};
use crate::moebius::{cayley_matrix, SpherePoint};
use crate::polygon::{self, BoundaryPolygon, BuildOptions};
use crate::series::{self, GeneratorQuadruple};
use crate::svg::{LinePlot, SvgDocument};
use num_complex::Complex64;
use serde::Serialize;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing artifact {path} — run the {stage} stage first")]
    MissingArtifact { path: PathBuf, stage: &'static str },
    #[error("stage {stage} failed: {message}")]
    StageFailed { stage: &'static str, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonConfig {
    pub n: usize,
    pub max_word_length: u32,
    pub sep_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalConfig {
    pub tol_vertex: f64,
    pub tol_inv: f64,
    /// Residual target for the parameter solve. Sampled quasidisk
    /// boundaries cannot always reach the 1e-8 of tame polygons in double
    /// precision, so the pipeline default is looser than the library one.
    pub tol_residual: f64,
    pub quadrature_nodes: usize,
    pub max_iters: usize,
    /// Conformal center; `None` means the polygon centroid.
    pub center: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    pub samples: usize,
    pub max_radius: f64,
    pub multistarts: usize,
    pub cluster_runs: usize,
    pub cluster_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesConfig {
    pub max_n: u32,
    pub n_min: u32,
    pub p_list: Vec<f64>,
    pub bracket: (f64, f64),
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub polygon: PolygonConfig,
    pub conformal: ConformalConfig,
    pub fit: FitConfig,
    pub series: SeriesConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            output_dir: PathBuf::from("out"),
            polygon: PolygonConfig {
                n: 300,
                max_word_length: 12,
                sep_min: 1e-4,
            },
            conformal: ConformalConfig {
                tol_vertex: 1e-6,
                tol_inv: 1e-9,
                tol_residual: 1e-6,
                quadrature_nodes: 8,
                max_iters: 400,
                // the grafted domain contains the origin, which makes the
                // series' derivatives-at-zero exact rather than shifted
                center: Some((0.0, 0.0)),
            },
            fit: FitConfig {
                samples: 64,
                max_radius: 0.9,
                multistarts: 8,
                cluster_runs: 10,
                cluster_vertices: 100,
            },
            series: SeriesConfig {
                max_n: 12,
                n_min: 6,
                p_list: vec![4.0, 5.52, 5.54],
                bracket: (5.0, 6.0),
                tol: 0.02,
            },
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.polygon.n < 3 {
            return bad("polygon.n must be at least 3".into());
        }
        if self.polygon.sep_min <= 0.0
            || self.conformal.tol_vertex <= 0.0
            || self.conformal.tol_inv <= 0.0
            || self.series.tol <= 0.0
        {
            return bad("tolerances must be positive".into());
        }
        if self.series.bracket.0 >= self.series.bracket.1 {
            return bad(format!(
                "series.bracket {:?} must satisfy lo < hi",
                self.series.bracket
            ));
        }
        if self.fit.samples < 8 {
            return bad("fit.samples must be at least 8".into());
        }
        if self.fit.cluster_runs < 5 {
            return bad("fit.cluster_runs must be at least 5".into());
        }
        Ok(())
    }

    /// Canonical text form; both the config file format and the hash input.
    pub fn canonical(&self) -> String {
        format!(
            "[pipeline]\nseed = {}\noutput_dir = {}\n\n[polygon]\nn = {}\nmax_word_length = {}\nsep_min = {:e}\n\n\
             [conformal]\ntol_vertex = {:e}\ntol_inv = {:e}\ntol_residual = {:e}\nquadrature_nodes = {}\nmax_iters = {}\ncenter = {}\n\n\
             [fit]\nsamples = {}\nmax_radius = {}\nmultistarts = {}\ncluster_runs = {}\ncluster_vertices = {}\n\n\
             [series]\nmax_n = {}\nn_min = {}\np_list = {}\nbracket = {},{}\ntol = {}\n",
            self.seed,
            self.output_dir.display(),
            self.polygon.n,
            self.polygon.max_word_length,
            self.polygon.sep_min,
            self.conformal.tol_vertex,
            self.conformal.tol_inv,
            self.conformal.tol_residual,
            self.conformal.quadrature_nodes,
            self.conformal.max_iters,
            match self.conformal.center {
                Some((re, im)) => format!("{re},{im}"),
                None => "centroid".into(),
            },
            self.fit.samples,
            self.fit.max_radius,
            self.fit.multistarts,
            self.fit.cluster_runs,
            self.fit.cluster_vertices,
            self.series.max_n,
            self.series.n_min,
            self.series
                .p_list
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(","),
            self.series.bracket.0,
            self.series.bracket.1,
            self.series.tol,
        )
    }

    pub fn hash(&self) -> u64 {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    /// Parses the `[section] key = value` config format.
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(&section, key.trim(), value.trim())
                .map_err(|msg| PipelineError::Config(format!("line {}: {msg}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse().map_err(|e| format!("bad value {v:?}: {e}"))
        }
        match (section, key) {
            ("pipeline", "seed") => self.seed = num(value)?,
            ("pipeline", "output_dir") => self.output_dir = PathBuf::from(value),
            ("polygon", "n") => self.polygon.n = num(value)?,
            ("polygon", "max_word_length") => self.polygon.max_word_length = num(value)?,
            ("polygon", "sep_min") => self.polygon.sep_min = num(value)?,
            ("conformal", "tol_vertex") => self.conformal.tol_vertex = num(value)?,
            ("conformal", "tol_inv") => self.conformal.tol_inv = num(value)?,
            ("conformal", "tol_residual") => self.conformal.tol_residual = num(value)?,
            ("conformal", "quadrature_nodes") => self.conformal.quadrature_nodes = num(value)?,
            ("conformal", "max_iters") => self.conformal.max_iters = num(value)?,
            ("conformal", "center") => {
                if value == "centroid" {
                    self.conformal.center = None;
                } else {
                    let (re, im) = value
                        .split_once(',')
                        .ok_or_else(|| format!("bad center {value:?}: want re,im or centroid"))?;
                    self.conformal.center = Some((num(re.trim())?, num(im.trim())?));
                }
            }
            ("fit", "samples") => self.fit.samples = num(value)?,
            ("fit", "max_radius") => self.fit.max_radius = num(value)?,
            ("fit", "multistarts") => self.fit.multistarts = num(value)?,
            ("fit", "cluster_runs") => self.fit.cluster_runs = num(value)?,
            ("fit", "cluster_vertices") => self.fit.cluster_vertices = num(value)?,
            ("series", "max_n") => self.series.max_n = num(value)?,
            ("series", "n_min") => self.series.n_min = num(value)?,
            ("series", "p_list") => {
                let ps: Result<Vec<f64>, _> =
                    value.split(',').map(|s| num::<f64>(s.trim())).collect();
                self.series.p_list = ps?;
            }
            ("series", "bracket") => {
                let (lo, hi) = value
                    .split_once(',')
                    .ok_or_else(|| format!("bad bracket {value:?}: want lo,hi"))?;
                self.series.bracket = (num(lo.trim())?, num(hi.trim())?);
            }
            ("series", "tol") => self.series.tol = num(value)?,
            _ => return Err(format!("unknown key [{section}] {key}")),
        }
        Ok(())
    }
}

/// Pipeline stages; `Full` chains the other five and adds the tiling
/// figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    BuildPolygon,
    SolveMap,
    FitGenerators,
    ShellSums,
    PStar,
    Full,
}

impl Stage {
    pub fn parse(name: &str) -> Option<Stage> {
        match name {
            "build-polygon" => Some(Stage::BuildPolygon),
            "solve-map" => Some(Stage::SolveMap),
            "fit-generators" => Some(Stage::FitGenerators),
            "shell-sums" => Some(Stage::ShellSums),
            "p-star" => Some(Stage::PStar),
            "full" => Some(Stage::Full),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::BuildPolygon => "build-polygon",
            Stage::SolveMap => "solve-map",
            Stage::FitGenerators => "fit-generators",
            Stage::ShellSums => "shell-sums",
            Stage::PStar => "p-star",
            Stage::Full => "full",
        }
    }
}

/// Runs one stage (or the whole chain), writing artifacts under the
/// configured output directory.
pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<(), PipelineError> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;
    match stage {
        Stage::BuildPolygon => timed(stage, config, stage_build_polygon),
        Stage::SolveMap => timed(stage, config, stage_solve_map),
        Stage::FitGenerators => timed(stage, config, stage_fit_generators),
        Stage::ShellSums => timed(stage, config, stage_shell_sums),
        Stage::PStar => timed(stage, config, stage_p_star),
        Stage::Full => {
            timed(Stage::BuildPolygon, config, stage_build_polygon)?;
            timed(Stage::SolveMap, config, stage_solve_map)?;
            timed(Stage::FitGenerators, config, stage_fit_generators)?;
            timed(Stage::ShellSums, config, stage_shell_sums)?;
            timed(Stage::PStar, config, stage_p_star)?;
            timed(Stage::Full, config, stage_figures)
        }
    }
}

fn timed(
    stage: Stage,
    config: &PipelineConfig,
    f: fn(&PipelineConfig) -> Result<Vec<String>, PipelineError>,
) -> Result<(), PipelineError> {
    let start = Instant::now();
    let result = f(config);
    let record = serde_json::json!({
        "stage": stage.name(),
        "config_hash": format!("{:016x}", config.hash()),
        "seed": config.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_ms": start.elapsed().as_millis() as u64,
        "outcome": match &result {
            Ok(_) => "ok".to_string(),
            Err(e) => format!("error: {e}"),
        },
        "artifacts": result.as_deref().unwrap_or(&[]),
    });
    let manifest = config.output_dir.join("manifest.jsonl");
    let mut line = record.to_string();
    line.push('\n');
    use std::io::Write;
    std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(manifest)?
        .write_all(line.as_bytes())?;
    result.map(|_| ())
}

fn fail(stage: &'static str, err: impl fmt::Display) -> PipelineError {
    PipelineError::StageFailed {
        stage,
        message: err.to_string(),
    }
}

fn polygon_path(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join("polygon.csv")
}

fn map_path(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join("map.json")
}

fn generators_path(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join("generators.json")
}

fn require(path: PathBuf, stage: &'static str) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::MissingArtifact { path, stage })
    }
}

fn stage_build_polygon(config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    const STAGE: &str = "build-polygon";
    let pair = grafting::group_pair();
    let opts = BuildOptions {
        sep_min: config.polygon.sep_min,
        ..Default::default()
    };
    let poly = polygon::build_polygon(
        config.polygon.n,
        config.polygon.max_word_length,
        config.seed,
        &pair,
        &opts,
    )
    .map_err(|e| fail(STAGE, e))?;
    let path = polygon_path(config);
    poly.write_csv(&path).map_err(|e| fail(STAGE, e))?;
    Ok(vec![path.display().to_string()])
}

/// Prevertex initialization from the Fuchsian shadow: the boundary
/// correspondence sends the sort key x to η⁻¹(x) ∈ 𝕊¹, so the key angles
/// predict the prevertex crowding pattern up to a disk automorphism.
pub fn shadow_initial_prevertices(poly: &BoundaryPolygon) -> Option<Vec<f64>> {
    let eta_inv = cayley_matrix().inverse();
    let n = poly.len();
    let mut angles = Vec::with_capacity(n);
    for &key in &poly.sort_keys {
        let w = eta_inv.apply(SpherePoint::Finite(Complex64::new(key, 0.0)));
        angles.push(w.finite()?.arg());
    }
    let tau = std::f64::consts::TAU;
    let mut gaps = Vec::with_capacity(n);
    for k in 0..n {
        let prev = angles[(k + n - 1) % n];
        let d = (angles[k] - prev).rem_euclid(tau);
        gaps.push(d.max(1e-12));
    }
    // a cyclically monotone angle sequence wraps exactly once; otherwise
    // fall back to uniform spacing
    let total: f64 = gaps.iter().sum();
    if !(total < 1.5 * tau) {
        return None;
    }
    let mut t = Vec::with_capacity(n);
    let mut acc = 0.0;
    for g in &gaps {
        acc += g / total * tau;
        t.push(acc);
    }
    Some(t)
}

fn sc_options(config: &PipelineConfig, poly: &BoundaryPolygon) -> ScOptions {
    ScOptions {
        quadrature_nodes: config.conformal.quadrature_nodes,
        max_iters: config.conformal.max_iters,
        residual_tol: config.conformal.tol_residual,
        gap_min: 1e-9,
        center: match config.conformal.center {
            Some((re, im)) => CenterChoice::Point(Complex64::new(re, im)),
            None => CenterChoice::Centroid,
        },
        initial_prevertices: shadow_initial_prevertices(poly),
        tol_vertex_rel: config.conformal.tol_vertex,
        tol_inv_rel: config.conformal.tol_inv,
    }
}

/// Solves the parameter problem, retreating from conformally intractable
/// vertices: when the iteration wedges on one side or a prevertex gap
/// underflows, the implicated vertex is removed (a sub-resolution feature
/// of the sampled boundary whose crowding exceeds double precision) and
/// the solve restarts. The number of such removals is reported.

/// Shadow angle of one sort key: arg(η⁻¹(key)) on the unit circle.
fn shadow_angle(key: f64) -> Option<f64> {
    let eta_inv = cayley_matrix().inverse();
    eta_inv
        .apply(SpherePoint::Finite(Complex64::new(key, 0.0)))
        .finite()
        .map(|w| w.arg())
}

/// Subpolygon of vertices whose words are at most `max_len` long — the
/// same boundary sampled at lower resolution — untangled if needed.
fn subpolygon_by_depth(
    poly: &BoundaryPolygon,
    max_len: usize,
    config: &PipelineConfig,
) -> Option<BoundaryPolygon> {
    let picks: Vec<usize> = (0..poly.len())
        .filter(|&i| poly.words[i].len() <= max_len)
        .collect();
    if picks.len() < 24 || picks.len() == poly.len() {
        return None;
    }
    let mut sub = BoundaryPolygon {
        vertices: picks.iter().map(|&i| poly.vertices[i]).collect(),
        words: picks.iter().map(|&i| poly.words[i].clone()).collect(),
        sort_keys: picks.iter().map(|&i| poly.sort_keys[i]).collect(),
        seed: poly.seed,
        max_word_length: poly.max_word_length,
        dropped_close: 0,
        dropped_crossing: 0,
    };
    if !sub.is_simple() {
        let opts = BuildOptions {
            sep_min: config.polygon.sep_min,
            ..Default::default()
        };
        for _ in 0..sub.len() {
            match sub.first_crossing() {
                None => break,
                Some((i, _)) => {
                    sub = sub.without_vertex((i + 1) % sub.len(), &opts).ok()?;
                }
            }
        }
    }
    sub.is_simple().then_some(sub)
}

/// Interpolated prevertex initialization: anchored vertices take their
/// solved angles; inserted vertices are placed inside their host arc at
/// the fraction their shadow angles dictate.
fn interpolate_prevertices(
    fine: &BoundaryPolygon,
    anchor: &std::collections::HashMap<String, f64>,
) -> Option<Vec<f64>> {
    let tau = std::f64::consts::TAU;
    let m = fine.len();
    let anchored: Vec<Option<f64>> = fine
        .words
        .iter()
        .map(|w| anchor.get(&w.to_string()).copied())
        .collect();
    if anchored.iter().filter(|a| a.is_some()).count() < 3 {
        return None;
    }
    let mut init = vec![f64::NAN; m];
    for k in 0..m {
        if let Some(t) = anchored[k] {
            init[k] = t;
            continue;
        }
        let mut left = (k + m - 1) % m;
        while anchored[left].is_none() {
            left = (left + m - 1) % m;
        }
        let mut right = (k + 1) % m;
        while anchored[right].is_none() {
            right = (right + 1) % m;
        }
        let t_l = anchored[left].unwrap();
        let span_t = (anchored[right].unwrap() - t_l).rem_euclid(tau).max(1e-12);
        let th_l = shadow_angle(fine.sort_keys[left])?;
        let span_th = (shadow_angle(fine.sort_keys[right])? - th_l)
            .rem_euclid(tau)
            .max(1e-12);
        let frac = ((shadow_angle(fine.sort_keys[k])? - th_l).rem_euclid(tau) / span_th)
            .clamp(1e-6, 1.0 - 1e-6);
        init[k] = (t_l + frac * span_t).rem_euclid(tau);
    }
    Some(init)
}

/// Solves large polygons by continuation in sampling depth: the
/// subpolygon of short-word vertices is solved first (a lower-resolution
/// pass over the same boundary), then longer-word vertices are inserted
/// with prevertices interpolated inside their host arcs and the solve is
/// repeated warm. Small polygons go straight to the retreat loop.
pub fn solve_with_continuation(
    poly: &BoundaryPolygon,
    config: &PipelineConfig,
) -> Result<(SchwarzChristoffelMap, BoundaryPolygon, usize), conformal::ScError> {
    let max_word = poly.words.iter().map(|w| w.len()).max().unwrap_or(0);
    if poly.len() <= 130 || max_word <= 2 {
        return solve_with_retreat(poly, config, None, poly.len() / 5);
    }
    let coarse = match subpolygon_by_depth(poly, max_word - 1, config) {
        Some(c) => c,
        None => return solve_with_retreat(poly, config, None, poly.len() / 5),
    };
    let (coarse_map, _, coarse_removed) = solve_with_continuation(&coarse, config)?;

    // anchors keyed by word; coarse retreats leave their words out
    let mut anchor: std::collections::HashMap<String, f64> = std::collections::HashMap::new();
    for (w, &t) in coarse_map
        .polygon()
        .words
        .iter()
        .zip(coarse_map.prevertices())
    {
        anchor.insert(w.to_string(), t.rem_euclid(std::f64::consts::TAU));
    }
    let coarse_words: std::collections::HashSet<String> =
        coarse.words.iter().map(|w| w.to_string()).collect();
    let keep: Vec<usize> = (0..poly.len())
        .filter(|&i| {
            let w = poly.words[i].to_string();
            !coarse_words.contains(&w) || anchor.contains_key(&w)
        })
        .collect();
    let fine = BoundaryPolygon {
        vertices: keep.iter().map(|&i| poly.vertices[i]).collect(),
        words: keep.iter().map(|&i| poly.words[i].clone()).collect(),
        sort_keys: keep.iter().map(|&i| poly.sort_keys[i]).collect(),
        seed: poly.seed,
        max_word_length: poly.max_word_length,
        dropped_close: poly.dropped_close,
        dropped_crossing: poly.dropped_crossing + (poly.len() - keep.len()),
    };
    let init = interpolate_prevertices(&fine, &anchor);
    let (map, used, removed) = solve_with_retreat(&fine, config, init, fine.len() / 4)?;
    Ok((map, used, removed + coarse_removed + (poly.len() - keep.len())))
}

pub fn solve_with_retreat(
    poly: &BoundaryPolygon,
    config: &PipelineConfig,
    initial: Option<Vec<f64>>,
    max_retreats: usize,
) -> Result<(SchwarzChristoffelMap, BoundaryPolygon, usize), conformal::ScError> {
    let mut current = poly.clone();
    let mut removed = 0usize;
    let mut warm: Option<Vec<f64>> = initial;
    let mut second_wind = false;
    let mut full_effort = false;
    loop {
        let mut opts = sc_options(config, &current);
        if let Some(t) = &warm {
            opts.initial_prevertices = Some(t.clone());
        }
        if full_effort {
            opts.max_iters = 2 * config.conformal.max_iters;
            full_effort = false;
        }
        let attempt = conformal::solve_parameter_problem(&current, &opts);
        if std::env::var("BRENNAN_RETREAT_TRACE").is_ok() {
            match &attempt {
                Ok(_) => eprintln!("retreat: n={} solved", current.len()),
                Err(e) => eprintln!("retreat: n={} -> {e}", current.len()),
            }
        }
        match attempt {
            Ok(map) => return Ok((map, current, removed)),
            Err(e) if removed < max_retreats => {
                // every side still wedged implicates one endpoint: the one
                // with the more extreme interior angle
                let alphas = current.angle_fractions();
                let pick_endpoint = |k: usize| {
                    let k1 = (k + 1) % current.len();
                    if (alphas[k] - 1.0).abs() >= (alphas[k1] - 1.0).abs() {
                        k
                    } else {
                        k1
                    }
                };
                let (mut victims, best): (Vec<usize>, Vec<f64>) = match &e {
                    conformal::ScError::NoConvergence {
                        worst_side,
                        stuck_sides,
                        best_prevertices,
                        ..
                    } => {
                        let mut v: Vec<usize> =
                            stuck_sides.iter().map(|&s| pick_endpoint(s)).collect();
                        if let Some(k) = worst_side {
                            v.push(pick_endpoint(*k));
                        }
                        if v.is_empty() {
                            // nothing implicated: grant one full-effort
                            // attempt from the best point reached, then
                            // give up honestly
                            if second_wind {
                                return Err(e);
                            }
                            second_wind = true;
                            warm = Some(
                                best_prevertices
                                    .iter()
                                    .map(|t| t.rem_euclid(std::f64::consts::TAU))
                                    .collect(),
                            );
                            full_effort = true;
                            continue;
                        }
                        (v, best_prevertices.clone())
                    }
                    conformal::ScError::CrowdingOverflow {
                        vertex,
                        best_prevertices,
                        ..
                    } => (vec![*vertex], best_prevertices.clone()),
                    _ => return Err(e),
                };
                victims.sort_unstable();
                victims.dedup();
                victims.truncate(max_retreats - removed);
                if victims.is_empty() {
                    return Err(e);
                }
                let build_opts = BuildOptions {
                    sep_min: config.polygon.sep_min,
                    ..Default::default()
                };
                // drop from the highest index so earlier indices stay valid
                let mut next = current.clone();
                let mut ok = true;
                for &v in victims.iter().rev() {
                    match next.without_vertex(v, &build_opts) {
                        Ok(p) => next = p,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    return Err(e);
                }
                // warm start survives only when the edit removed exactly
                // the victims (no extra untangling)
                warm = if best.len() == current.len()
                    && next.len() == current.len() - victims.len()
                {
                    Some(
                        (0..current.len())
                            .filter(|i| !victims.contains(i))
                            .map(|i| best[i])
                            .collect(),
                    )
                } else {
                    None
                };
                removed += victims.len();
                current = next;
            }
            Err(e) => return Err(e),
        }
    }
}

fn stage_solve_map(config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    const STAGE: &str = "solve-map";
    let poly_file = require(polygon_path(config), "build-polygon")?;
    let poly = BoundaryPolygon::read_csv(&poly_file).map_err(|e| fail(STAGE, e))?;
    let (map, solved_poly, removed) =
        solve_with_continuation(&poly, config).map_err(|e| fail(STAGE, e))?;
    // the map references the polygon it was actually solved on, which may
    // be a filtered (and cyclically relabeled) copy of the stage-1 artifact
    let solved_csv = config.output_dir.join("map_polygon.csv");
    map.polygon()
        .write_csv(&solved_csv)
        .map_err(|e| fail(STAGE, e))?;
    let _ = solved_poly;
    if removed > 0 {
        eprintln!("solve-map: retreated from {removed} conformally intractable vertices");
    }
    let path = map_path(config);
    map.write_json(&path, "map_polygon.csv")
        .map_err(|e| fail(STAGE, e))?;
    Ok(vec![path.display().to_string(), solved_csv.display().to_string()])
}

#[derive(Serialize)]
struct GeneratorsRecord {
    a: serde_json::Value,
    b: serde_json::Value,
    conformal_center: [f64; 2],
    /// |tr²([Â,B̂]) − 4|: end-to-end pipeline error indicator, reported
    /// rather than asserted.
    relator_trace_sq_error: f64,
    cluster_consistent_a: bool,
    cluster_consistent_b: bool,
}

fn fit_one(
    map: &SchwarzChristoffelMap,
    pair: &GroupPair,
    config: &PipelineConfig,
    seed: u64,
) -> Result<(FitResult, FitResult), PipelineError> {
    const STAGE: &str = "fit-generators";
    let fit_opts = FitOptions {
        max_radius: config.fit.max_radius,
        multistarts: config.fit.multistarts,
    };
    let fit_a = autfit::fit_disk_automorphism(
        map,
        &pair.kleinian_a,
        config.fit.samples,
        seed,
        &fit_opts,
    )
    .map_err(|e| fail(STAGE, e))?;
    let fit_b = autfit::fit_disk_automorphism(
        map,
        &pair.kleinian_b,
        config.fit.samples,
        seed ^ 0x9e37_79b9,
        &fit_opts,
    )
    .map_err(|e| fail(STAGE, e))?;
    Ok((fit_a, fit_b))
}

fn cluster_figure(results: &[FitResult], main: &FitResult) -> String {
    let mut doc = SvgDocument::new();
    for fit in results {
        doc.cross_marker(fit.estimate.lambda, 0.01, "#555555");
        doc.cross_marker(fit.estimate.a, 0.01, "#cc5500");
    }
    doc.circle_marker(main.estimate.lambda, 0.015, "#000000");
    doc.circle_marker(main.estimate.a, 0.015, "#cc0000");
    doc.finish()
}

fn stage_fit_generators(config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    const STAGE: &str = "fit-generators";
    let map_file = require(map_path(config), "solve-map")?;
    let map = SchwarzChristoffelMap::read_json(&map_file).map_err(|e| fail(STAGE, e))?;
    let pair = grafting::group_pair();

    let (fit_a, fit_b) = fit_one(&map, &pair, config, config.seed.wrapping_add(7))?;

    // validation cluster from independent smaller polygons
    let mut cluster_a = Vec::new();
    let mut cluster_b = Vec::new();
    for i in 0..config.fit.cluster_runs {
        let seed = config.seed.wrapping_add(1000 + i as u64);
        let small = polygon::build_polygon(
            config.fit.cluster_vertices,
            config.polygon.max_word_length,
            seed,
            &pair,
            &BuildOptions {
                sep_min: config.polygon.sep_min,
                ..Default::default()
            },
        )
        .map_err(|e| fail(STAGE, e))?;
        let (small_map, _, _) =
            solve_with_continuation(&small, config).map_err(|e| fail(STAGE, e))?;
        let (fa, fb) = fit_one(&small_map, &pair, config, seed.wrapping_mul(31))?;
        cluster_a.push(fa);
        cluster_b.push(fb);
    }
    let report_a = autfit::validate_cluster(&cluster_a, &fit_a);
    let report_b = autfit::validate_cluster(&cluster_b, &fit_b);

    // relator diagnostic on the fitted pair
    let a_hat = fit_a.estimate.to_matrix();
    let b_hat = fit_b.estimate.to_matrix();
    let tr2 = a_hat.commutator(&b_hat).trace_sq();
    let relator_err = (tr2 - Complex64::new(4.0, 0.0)).norm();

    let record = GeneratorsRecord {
        a: serde_json::from_str(&fit_a.to_json()).expect("fit json"),
        b: serde_json::from_str(&fit_b.to_json()).expect("fit json"),
        conformal_center: [map.center().re, map.center().im],
        relator_trace_sq_error: relator_err,
        cluster_consistent_a: report_a.consistent,
        cluster_consistent_b: report_b.consistent,
    };
    let gen_path = generators_path(config);
    std::fs::write(&gen_path, serde_json::to_string_pretty(&record).unwrap())?;

    let csv_a = config.output_dir.join("cluster_a.csv");
    let csv_b = config.output_dir.join("cluster_b.csv");
    std::fs::write(&csv_a, autfit::cluster_csv(&cluster_a, &fit_a))?;
    std::fs::write(&csv_b, autfit::cluster_csv(&cluster_b, &fit_b))?;
    let summary = config.output_dir.join("cluster_summary.json");
    std::fs::write(
        &summary,
        serde_json::to_string_pretty(&serde_json::json!({
            "a": report_a,
            "b": report_b,
        }))
        .unwrap(),
    )?;
    let svg_a = config.output_dir.join("cluster_a.svg");
    let svg_b = config.output_dir.join("cluster_b.svg");
    std::fs::write(&svg_a, cluster_figure(&cluster_a, &fit_a))?;
    std::fs::write(&svg_b, cluster_figure(&cluster_b, &fit_b))?;

    Ok(vec![
        gen_path.display().to_string(),
        csv_a.display().to_string(),
        csv_b.display().to_string(),
        summary.display().to_string(),
        svg_a.display().to_string(),
        svg_b.display().to_string(),
    ])
}

fn load_quadruple(config: &PipelineConfig) -> Result<GeneratorQuadruple, PipelineError> {
    const STAGE: &str = "shell-sums";
    let gen_file = require(generators_path(config), "fit-generators")?;
    let text = std::fs::read_to_string(&gen_file)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| fail(STAGE, e))?;
    let get_aut = |key: &str| -> Result<crate::moebius::DiskAutomorphism, PipelineError> {
        let parse = |v: &serde_json::Value| -> Option<Complex64> {
            Some(Complex64::new(v[0].as_f64()?, v[1].as_f64()?))
        };
        let lambda =
            parse(&value[key]["lambda"]).ok_or_else(|| fail(STAGE, format!("bad {key}.lambda")))?;
        let a = parse(&value[key]["a"]).ok_or_else(|| fail(STAGE, format!("bad {key}.a")))?;
        crate::moebius::DiskAutomorphism::new(lambda, a).map_err(|e| fail(STAGE, e))
    };
    let fit_a = get_aut("a")?;
    let fit_b = get_aut("b")?;
    let center = value["conformal_center"]
        .as_array()
        .and_then(|v| Some(Complex64::new(v[0].as_f64()?, v[1].as_f64()?)))
        .unwrap_or(Complex64::ZERO);
    let pair = grafting::group_pair();
    GeneratorQuadruple::from_fits(&fit_a, &fit_b, &pair, center).map_err(|e| fail(STAGE, e))
}

fn stage_shell_sums(config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    const STAGE: &str = "shell-sums";
    let gens = load_quadruple(config)?;
    let mut artifacts = Vec::new();
    let mut plot = LinePlot::new();
    let colors = ["#2255cc", "#cc5522", "#22aa55", "#aa22aa", "#888822"];
    let mut summary = Vec::new();
    for (i, &p) in config.series.p_list.iter().enumerate() {
        let table =
            series::shell_sums(&gens, p, config.series.max_n).map_err(|e| fail(STAGE, e))?;
        let path = config.output_dir.join(format!("shells_p{}.csv", fmt_p(p)));
        std::fs::write(&path, table.to_csv())?;
        artifacts.push(path.display().to_string());

        let fit = series::fit_decay(&table, config.series.n_min).map_err(|e| fail(STAGE, e))?;
        let pts: Vec<(f64, f64)> = table
            .entries
            .iter()
            .map(|e| (e.n as f64, e.sum.ln()))
            .collect();
        let color = colors[i % colors.len()];
        plot.add_series(pts, color, true);
        let line: Vec<(f64, f64)> = [config.series.n_min, config.series.max_n]
            .iter()
            .map(|&n| (n as f64, fit.intercept + fit.slope * n as f64))
            .collect();
        plot.add_series(line, color, false);
        plot.add_label(format!(
            "p = {p}: slope {:+.4}, r2 {:.4}",
            fit.slope, fit.r_squared
        ));
        summary.push(serde_json::json!({
            "p": p,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "summation_discrepancy": table.summation_discrepancy(),
        }));
    }
    let svg = config.output_dir.join("shell_decay.svg");
    std::fs::write(&svg, plot.finish())?;
    artifacts.push(svg.display().to_string());
    let summary_path = config.output_dir.join("shells_summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&serde_json::Value::Array(summary)).unwrap(),
    )?;
    artifacts.push(summary_path.display().to_string());
    Ok(artifacts)
}

fn fmt_p(p: f64) -> String {
    format!("{p}").replace('.', "_")
}

fn stage_p_star(config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    const STAGE: &str = "p-star";
    let gens = load_quadruple(config)?;
    let interval = series::estimate_p_star(
        &gens,
        config.series.max_n,
        config.series.n_min,
        config.series.bracket.0,
        config.series.bracket.1,
        config.series.tol,
    )
    .map_err(|e| fail(STAGE, e))?;
    let slopes: serde_json::Map<String, serde_json::Value> = interval
        .evaluations
        .iter()
        .map(|(p, s)| (format!("{p}"), serde_json::json!(s)))
        .collect();
    let record = serde_json::json!({
        "bracket": [interval.lower, interval.upper],
        "slopes": slopes,
        "n_min": config.series.n_min,
        "max_n": config.series.max_n,
        "slopes_monotone": interval.slopes_monotone,
    });
    let path = config.output_dir.join("pstar.json");
    std::fs::write(&path, serde_json::to_string_pretty(&record).unwrap())?;
    Ok(vec![path.display().to_string()])
}

/// Domain-tiling figure: disk-model tiles of the bent group under the
/// boundary polygon.
fn stage_figures(config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    const STAGE: &str = "figures";
    let poly_file = require(polygon_path(config), "build-polygon")?;
    let poly = BoundaryPolygon::read_csv(&poly_file).map_err(|e| fail(STAGE, e))?;
    let tiles = grafting::render_tiles(5, grafting::theta0(), TileModel::Disk, 10.0);
    let mut doc = SvgDocument::new();
    for tile in &tiles {
        for arc in &tile.arcs {
            match arc {
                TileArc::Arc {
                    center,
                    radius,
                    angle_start,
                    angle_end,
                } => doc.arc(
                    Complex64::new(center[0], center[1]),
                    *radius,
                    *angle_start,
                    *angle_end,
                    "#99aacc",
                    0.004,
                ),
                TileArc::Segment { segment } => doc.segment(
                    Complex64::new(segment[0][0], segment[0][1]),
                    Complex64::new(segment[1][0], segment[1][1]),
                    "#99aacc",
                    0.004,
                ),
            }
        }
    }
    doc.polyline(&poly.vertices, "#cc2222", 0.01, true);
    let path = config.output_dir.join("domain_tiling.svg");
    std::fs::write(&path, doc.finish())?;
    Ok(vec![path.display().to_string()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let cfg = PipelineConfig::default();
        let parsed = PipelineConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(cfg, parsed);
        assert_eq!(cfg.hash(), parsed.hash());
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_brackets() {
        assert!(matches!(
            PipelineConfig::parse("[polygon]\nvertices = 3\n"),
            Err(PipelineError::Config(_))
        ));
        assert!(matches!(
            PipelineConfig::parse("[series]\nbracket = 6.0,5.0\n"),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn config_overrides() {
        let text = "[pipeline]\nseed = 7\n[polygon]\nn = 120\n[series]\np_list = 4.0,5.5\nbracket = 5.1, 5.9\n";
        let cfg = PipelineConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.polygon.n, 120);
        assert_eq!(cfg.series.p_list, vec![4.0, 5.5]);
        assert_eq!(cfg.series.bracket, (5.1, 5.9));
    }

    #[test]
    fn shadow_init_monotone_for_real_polygon() {
        let pair = grafting::group_pair();
        let poly = polygon::build_polygon(80, 9, 4, &pair, &BuildOptions::default()).unwrap();
        let t = shadow_initial_prevertices(&poly).expect("shadow init");
        assert_eq!(t.len(), poly.len());
        for w in t.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(t[t.len() - 1] <= std::f64::consts::TAU + 1e-9);
    }

    #[test]
    fn missing_artifact_is_reported() {
        let dir = std::env::temp_dir().join(format!("brennan-missing-{}", std::process::id()));
        let cfg = PipelineConfig {
            output_dir: dir.clone(),
            ..Default::default()
        };
        let err = run_stage(Stage::SolveMap, &cfg).unwrap_err();
        assert!(matches!(err, PipelineError::MissingArtifact { .. }));
        let _ = std::fs::remove_dir_all(dir);
    }
}
