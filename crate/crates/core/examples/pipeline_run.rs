//! Run the bundled mini pipeline twice and confirm the manifest digest is
//! reproducible.
//!
//!     cargo run -p xlr-forge --example pipeline_run

use std::path::Path;

use xlr_forge::pipeline::{manifest_path, run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mini = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini");
    let mut config =
        PipelineConfig::from_toml(&std::fs::read_to_string(mini.join("pipeline.toml"))?, &mini)?;
    let out = tempfile::tempdir()?;
    config.output_dir = out.path().to_path_buf();

    let first = run_pipeline(&config)?;
    for step in &first.steps {
        println!("{step:?}");
    }
    let second = run_pipeline(&config)?;
    println!("digest {}", first.digest);
    println!("reproducible: {}", first.digest == second.digest);
    println!("manifest at {}", manifest_path(&config).display());
    Ok(())
}
