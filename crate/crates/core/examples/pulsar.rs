//! Full pipeline on the HTRU2 pulsar candidates with the shipped config.
//!
//! ```text
//! cargo run --release --example pulsar -- path/to/HTRU_2.csv [seed]
//! ```
//!
//! The CSV path may also come from `MLC_HTRU2_CSV`.

use std::path::{Path, PathBuf};

use mlc::pipeline::{run_pipeline, RunConfig};

fn main() -> mlc::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let data = args
        .next()
        .or_else(|| std::env::var("MLC_HTRU2_CSV").ok())
        .map(PathBuf::from)
        .ok_or_else(|| mlc::Error::Config("pass the HTRU_2.csv path or set MLC_HTRU2_CSV".into()))?;
    let mut cfg = RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/pulsar.json"))?;
    cfg.data = data;
    cfg.out_dir = PathBuf::from("out/pulsar");
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse().map_err(|_| mlc::Error::Config(format!("bad seed {seed}")))?;
    }
    let report = run_pipeline(&cfg)?;
    print!("{}", report.render_text());
    Ok(())
}
