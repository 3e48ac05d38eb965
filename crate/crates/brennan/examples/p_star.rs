//! Desk-scale critical-exponent estimate, end to end: polygon → map →
//! generator fits → shell-sum slope bisection.
//!
//! ```bash
//! cargo run --example p_star --release
//! ```

use brennan::autfit::{fit_disk_automorphism, FitOptions};
use brennan::grafting::group_pair;
use brennan::pipeline::{solve_with_continuation, PipelineConfig};
use brennan::polygon::{build_polygon, BuildOptions};
use brennan::series::{estimate_p_star, GeneratorQuadruple};
use num_complex::Complex64;

fn main() {
    let pair = group_pair();
    let config = PipelineConfig::default();

    println!("polygon + map (140 vertices)...");
    let poly = build_polygon(140, 12, 42, &pair, &BuildOptions::default()).unwrap();
    let (map, _, _) = solve_with_continuation(&poly, &config).unwrap();

    println!("fitting conjugated generators...");
    let opts = FitOptions {
        max_radius: 0.9,
        multistarts: 8,
    };
    let fit_a = fit_disk_automorphism(&map, &pair.kleinian_a, 64, 5, &opts).unwrap();
    let fit_b = fit_disk_automorphism(&map, &pair.kleinian_b, 64, 6, &opts).unwrap();
    println!(
        "  Â: λ = {:.6} {:+.6}i, a = {:.6} {:+.6}i (rms {:.1e})",
        fit_a.estimate.lambda.re,
        fit_a.estimate.lambda.im,
        fit_a.estimate.a.re,
        fit_a.estimate.a.im,
        fit_a.residual_rms
    );
    println!(
        "  B̂: λ = {:.6} {:+.6}i, a = {:.6} {:+.6}i (rms {:.1e})",
        fit_b.estimate.lambda.re,
        fit_b.estimate.lambda.im,
        fit_b.estimate.a.re,
        fit_b.estimate.a.im,
        fit_b.residual_rms
    );

    let gens =
        GeneratorQuadruple::from_fits(&fit_a.estimate, &fit_b.estimate, &pair, Complex64::ZERO)
            .unwrap();
    println!("bisecting the decay-rate sign change on [5.0, 6.0]...");
    let interval = estimate_p_star(&gens, 12, 6, 5.0, 6.0, 0.02).unwrap();
    println!(
        "p⋆ ∈ [{:.4}, {:.4}]  (slopes {:+.4} / {:+.4}, monotone: {})",
        interval.lower,
        interval.upper,
        interval.slope_at_lower,
        interval.slope_at_upper,
        interval.slopes_monotone
    );
    for (p, s) in &interval.evaluations {
        println!("  slope({p:.4}) = {s:+.5}");
    }
}
