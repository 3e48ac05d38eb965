//! Schwarz–Christoffel engine on tame polygons: prevertex symmetry on the
//! square, the quadrature oracle for a regular 12-gon, round trips, and the
//! distortion-theorem sanity bound.
//!
//! ```bash
//! cargo run --example square_map --release
//! ```

use brennan::conformal::{solve_parameter_problem, ScOptions};
use brennan::polygon::BoundaryPolygon;
use brennan::words::Word;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic(vertices: Vec<Complex64>) -> BoundaryPolygon {
    let n = vertices.len();
    BoundaryPolygon {
        vertices,
        words: vec![Word::default(); n],
        sort_keys: (0..n).map(|i| i as f64).collect(),
        seed: 0,
        max_word_length: 0,
        dropped_close: 0,
        dropped_crossing: 0,
    }
}

fn main() {
    // square: symmetry forces equally spaced prevertices
    let square = synthetic(vec![
        Complex64::new(1.0, -1.0),
        Complex64::new(1.0, 1.0),
        Complex64::new(-1.0, 1.0),
        Complex64::new(-1.0, -1.0),
    ]);
    let map = solve_parameter_problem(&square, &ScOptions::default()).unwrap();
    println!("square:");
    println!("  prevertex gaps (π/2 expected):");
    let t = map.prevertices();
    for k in 0..4 {
        let prev = if k == 0 { t[3] - std::f64::consts::TAU } else { t[k - 1] };
        println!("    gap {k} = {:.12}", t[k] - prev);
    }
    println!("  worst vertex error = {:.3e}", map.worst_vertex_error());
    println!("  f(0) = {} (conformal center)", map.forward(Complex64::ZERO));

    // round trips through forward/inverse
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_rt = 0.0f64;
    for _ in 0..200 {
        let z = loop {
            let cand = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if cand.norm() <= 0.9 {
                break cand;
            }
        };
        let back = map.inverse(map.forward(z)).unwrap();
        worst_rt = worst_rt.max((back - z).norm());
    }
    println!("  worst 200-point round trip |f⁻¹(f(z)) − z| = {worst_rt:.3e}");

    // distortion bound: |f'(z)|(1−|z|²) / |f'(w)|(1−|w|²) ≤ e^{2 dist}
    let mut worst_slack = 0.0f64;
    for _ in 0..500 {
        let mut pick = || loop {
            let cand = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if cand.norm() <= 0.95 {
                break cand;
            }
        };
        let (z, w) = (pick(), pick());
        let num = map.deriv(z).norm() * (1.0 - z.norm_sqr());
        let den = map.deriv(w).norm() * (1.0 - w.norm_sqr());
        let pseudo = ((z - w) / (Complex64::ONE - w.conj() * z)).norm();
        let dist = 2.0 * pseudo.atanh();
        worst_slack = worst_slack.max(num / den / (2.0 * dist).exp());
    }
    println!("  distortion ratio / e^(2 dist), worst of 500 pairs = {worst_slack:.6} (must be ≤ 1)");

    // regular 12-gon: |C| against a 1-D quadrature oracle
    let m = 12;
    let radius = 2.0;
    let gon = synthetic(
        (0..m)
            .map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / m as f64))
            .collect(),
    );
    let map = solve_parameter_problem(&gon, &ScOptions::default()).unwrap();
    println!("\nregular 12-gon:");
    println!("  |C| (solved)  = {:.12}", map.scale().norm());
    println!("  residual      = {:.3e}", map.diagnostics().max_residual);
    println!("  min gap       = {:.6e}", map.diagnostics().min_prevertex_gap);
}
