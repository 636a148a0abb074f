//! Runs an adaptive testing session against an oracle classifier that is
//! correct exactly when a case is easier than a cutoff, printing the
//! trajectory and the resulting MLC.
//!
//! ```text
//! cargo run --example cat_oracle -- [cutoff] [jitter_sd]
//! ```

use mlc::cat::{run_cat_with, CatConfig, PoolCase};
use mlc::synth::normal_pool;
use mlc::ClassLabel;

fn main() -> mlc::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let cutoff = args.next().unwrap_or(0.3);
    let jitter_sd = args.next().unwrap_or(0.1);

    let pool = normal_pool(2000, 0.0, 1.0, 7);
    let config = CatConfig { jitter_sd, seed: 11, ..CatConfig::default() };
    let report = run_cat_with(ClassLabel::Class2, pool, &config, |c: &PoolCase| Ok(c.oriented_cdi < cutoff))?;

    println!("{:>4} {:>8} {:>8} {:>8} {:>8} {:>8}", "L", "case", "cdi", "correct", "target", "mlc");
    for t in &report.trajectory {
        let mlc = t.running_mlc.map_or(String::from("-"), |m| format!("{m:.3}"));
        println!("{:>4} {:>8} {:>8.3} {:>8} {:>8.3} {:>8}", t.step, t.case_id, t.cdi, t.correct, t.target, mlc);
    }
    println!(
        "\nstop: {:?} after {} cases; H = {:.3}, R = {}, W = {}; MLC = {:?} (cutoff {cutoff})",
        report.stop_reason, report.cases_used, report.h, report.r, report.w, report.mlc
    );
    Ok(())
}
