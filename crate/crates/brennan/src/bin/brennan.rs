//! Thin command-line wrapper over the pipeline stages.
//!
//! Usage:
//!   brennan <stage> [--config FILE] [overrides...]
//!
//! Stages: build-polygon | solve-map | fit-generators | shell-sums |
//! p-star | full. Flag overrides mirror the mathematical parameters:
//! --n-vertices, --max-word-length, --p (comma list), --max-n, --n-min,
//! --bracket LO,HI, --tol, --seed, --out, --samples, --cluster-runs.
//! The BRENNAN_OUTPUT_DIR environment variable overrides the output
//! directory last.

use brennan::pipeline::{run_stage, PipelineConfig, PipelineError, Stage};
use std::path::{Path, PathBuf};

fn usage() -> ! {
    eprintln!(
        "usage: brennan <build-polygon|solve-map|fit-generators|shell-sums|p-star|full> [options]
options:
  --config FILE         read a [section] key = value config file
  --seed N              RNG seed (default 42)
  --out DIR             output directory (default out)
  --n-vertices N        main polygon vertex count
  --max-word-length L   word-length cap for boundary sampling
  --sep-min X           vertex separation floor
  --samples N           fit sample count
  --max-radius R        fit sample radius
  --cluster-runs K      validation polygons (default 10)
  --cluster-vertices N  vertices per validation polygon (default 100)
  --p P1,P2,...         shell-sum exponents
  --max-n N             deepest shell
  --n-min N             first shell used in decay fits
  --bracket LO,HI       p-star bisection bracket
  --tol X               p-star bracket width target
  --center RE,IM|centroid   conformal center
exit codes: 0 ok, 2 config error, 3 stage failure"
    );
    std::process::exit(2);
}

fn parse_args() -> Result<(Stage, PipelineConfig), PipelineError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        usage();
    }
    let stage = Stage::parse(&args[0])
        .ok_or_else(|| PipelineError::Config(format!("unknown stage {:?}", args[0])))?;

    // config file first so flags can override it
    let mut config = PipelineConfig::default();
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            let path = args
                .get(i + 1)
                .ok_or_else(|| PipelineError::Config("--config needs a path".into()))?;
            config = PipelineConfig::load(Path::new(path))?;
            break;
        }
        i += 1;
    }

    let mut i = 1;
    while i < args.len() {
        let flag = args[i].clone();
        let mut take = || -> Result<String, PipelineError> {
            i += 1;
            args.get(i)
                .cloned()
                .ok_or_else(|| PipelineError::Config(format!("{flag} needs a value")))
        };
        match flag.as_str() {
            "--config" => {
                take()?;
            }
            "--seed" => {
                let v = take()?;
                config.set("pipeline", "seed", &v).map_err(PipelineError::Config)?;
            }
            "--out" => {
                let v = take()?;
                config
                    .set("pipeline", "output_dir", &v)
                    .map_err(PipelineError::Config)?;
            }
            "--n-vertices" => {
                let v = take()?;
                config.set("polygon", "n", &v).map_err(PipelineError::Config)?;
            }
            "--max-word-length" => {
                let v = take()?;
                config
                    .set("polygon", "max_word_length", &v)
                    .map_err(PipelineError::Config)?;
            }
            "--sep-min" => {
                let v = take()?;
                config
                    .set("polygon", "sep_min", &v)
                    .map_err(PipelineError::Config)?;
            }
            "--samples" => {
                let v = take()?;
                config.set("fit", "samples", &v).map_err(PipelineError::Config)?;
            }
            "--max-radius" => {
                let v = take()?;
                config
                    .set("fit", "max_radius", &v)
                    .map_err(PipelineError::Config)?;
            }
            "--cluster-runs" => {
                let v = take()?;
                config
                    .set("fit", "cluster_runs", &v)
                    .map_err(PipelineError::Config)?;
            }
            "--cluster-vertices" => {
                let v = take()?;
                config
                    .set("fit", "cluster_vertices", &v)
                    .map_err(PipelineError::Config)?;
            }
            "--p" => {
                let v = take()?;
                config.set("series", "p_list", &v).map_err(PipelineError::Config)?;
            }
            "--max-n" => {
                let v = take()?;
                config.set("series", "max_n", &v).map_err(PipelineError::Config)?;
            }
            "--n-min" => {
                let v = take()?;
                config.set("series", "n_min", &v).map_err(PipelineError::Config)?;
            }
            "--bracket" => {
                let v = take()?;
                config.set("series", "bracket", &v).map_err(PipelineError::Config)?;
            }
            "--tol" => {
                let v = take()?;
                config.set("series", "tol", &v).map_err(PipelineError::Config)?;
            }
            "--center" => {
                let v = take()?;
                config
                    .set("conformal", "center", &v)
                    .map_err(PipelineError::Config)?;
            }
            "--help" | "-h" => usage(),
            other => {
                return Err(PipelineError::Config(format!("unknown flag {other:?}")));
            }
        }
        i += 1;
    }

    if let Ok(dir) = std::env::var("BRENNAN_OUTPUT_DIR") {
        config.output_dir = PathBuf::from(dir);
    }
    config.validate()?;
    Ok((stage, config))
}

fn main() {
    let (stage, config) = match parse_args() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("brennan: {e}");
            std::process::exit(e.exit_code());
        }
    };
    match run_stage(stage, &config) {
        Ok(()) => {
            println!(
                "{} finished; artifacts in {}",
                stage.name(),
                config.output_dir.display()
            );
        }
        Err(e) => {
            eprintln!("brennan: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
