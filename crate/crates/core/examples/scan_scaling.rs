//! Runs the construction for a range of `n` and prints the CSV table with
//! the fitted trends.
//!
//! Usage: `cargo run --release --example scan_scaling -- [n_min] [n_max] [trunc_dim]`

use commforge::pipeline::{scan_n, write_csv, PipelineConfig};

fn main() -> commforge::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("arguments must be integers"))
        .collect();
    let n_min = args.first().copied().unwrap_or(2);
    let n_max = args.get(1).copied().unwrap_or(4);
    let cfg = PipelineConfig { trunc_dim: args.get(2).copied().unwrap_or(512), ..PipelineConfig::default() };

    let scan = scan_n(n_min..=n_max, &cfg);
    write_csv(std::io::stdout(), scan.rows.iter().filter_map(|r| r.report.as_ref()))?;
    for row in &scan.rows {
        if let Some(e) = &row.error {
            eprintln!("n = {}: {e}", row.n);
        }
    }
    let s = &scan.summary;
    eprintln!("error / (n^3 2^-n): {:?}", s.error_ratios);
    eprintln!("norm_D / n^5:       {:?}", s.norm_ratios);
    eprintln!("largest norm_X:     {}", s.norm_x_max);
    eprintln!("fitted exponent:    {:?}", s.exponent);
    Ok(())
}
