//! Conjugated-generator estimation: sample the map, fit disk
//! automorphisms for both group generators, and report the relator
//! diagnostic.
//!
//! ```bash
//! cargo run --example fit_generators --release
//! ```

use brennan::autfit::{fit_disk_automorphism, FitOptions};
use brennan::grafting::group_pair;
use brennan::pipeline::{solve_with_continuation, PipelineConfig};
use brennan::polygon::{build_polygon, BuildOptions};
use num_complex::Complex64;

fn main() {
    let pair = group_pair();
    let mut config = PipelineConfig::default();
    config.polygon.n = 120;

    println!("building 120-vertex boundary polygon (word length ≤ 12)...");
    let poly = build_polygon(120, 12, 7, &pair, &BuildOptions::default()).unwrap();
    println!("solving the mapping parameter problem ({} vertices)...", poly.len());
    let (map, _, removed) = solve_with_continuation(&poly, &config).unwrap();
    println!(
        "solved: residual {:.2e}, min prevertex gap {:.2e}, {} vertices retreated",
        map.diagnostics().max_residual,
        map.diagnostics().min_prevertex_gap,
        removed
    );

    let opts = FitOptions {
        max_radius: 0.9,
        multistarts: 8,
    };
    let fit_a = fit_disk_automorphism(&map, &pair.kleinian_a, 64, 11, &opts).unwrap();
    let fit_b = fit_disk_automorphism(&map, &pair.kleinian_b, 64, 12, &opts).unwrap();

    for (name, fit) in [("Â", &fit_a), ("B̂", &fit_b)] {
        println!(
            "{name}: λ = {:.9} {:+.9}i   a = {:.9} {:+.9}i",
            fit.estimate.lambda.re, fit.estimate.lambda.im, fit.estimate.a.re, fit.estimate.a.im
        );
        println!(
            "    residual rms {:.3e}, {} samples, {} dropped, converged = {}",
            fit.residual_rms, fit.sample_count, fit.dropped, fit.converged
        );
    }

    // the fitted pair should also have a near-parabolic commutator; the
    // deviation measures accumulated pipeline error
    let k = fit_a
        .estimate
        .to_matrix()
        .commutator(&fit_b.estimate.to_matrix());
    let err = (k.trace_sq() - Complex64::new(4.0, 0.0)).norm();
    println!("relator check: |tr²[Â,B̂] − 4| = {err:.4e} (reported, not asserted)");
}
