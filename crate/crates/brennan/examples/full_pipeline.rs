//! The whole pipeline through the stage runner, at reduced size, writing
//! every artifact (CSV/JSON/SVG + manifest) into `out-example/`.
//!
//! ```bash
//! cargo run --example full_pipeline --release
//! ```

use brennan::pipeline::{run_stage, PipelineConfig, Stage};

fn main() {
    let mut config = PipelineConfig::default();
    config.output_dir = "out-example".into();
    config.polygon.n = 140;
    config.fit.cluster_runs = 5;
    config.fit.cluster_vertices = 80;
    config.series.max_n = 11;
    config.series.tol = 0.05;

    println!("running full pipeline into {:?}...", config.output_dir);
    run_stage(Stage::Full, &config).expect("pipeline");

    for name in [
        "polygon.csv",
        "map_polygon.csv",
        "map.json",
        "generators.json",
        "cluster_summary.json",
        "shells_p4.csv",
        "pstar.json",
        "domain_tiling.svg",
        "cluster_a.svg",
        "cluster_b.svg",
        "shell_decay.svg",
        "manifest.jsonl",
    ] {
        let path = config.output_dir.join(name);
        println!(
            "  {} {}",
            if path.exists() { "✓" } else { "✗" },
            path.display()
        );
    }
    let pstar = std::fs::read_to_string(config.output_dir.join("pstar.json")).unwrap();
    println!("\npstar.json:\n{pstar}");
}
