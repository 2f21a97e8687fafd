//! Solves once at n = 2 and trades norm for error by rescaling with
//! μ = 2^-1 .. 2^-k; the product of norms grows like ε^-2.
//!
//! Usage: `cargo run --release --example bpp_sweep -- [k_max] [trunc_dim]`

use commforge::pipeline::{bpp_sweep, PipelineConfig};

fn main() -> commforge::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().expect("integer argument"));
    let k_max = args.next().unwrap_or(6) as i32;
    let cfg = PipelineConfig { trunc_dim: args.next().unwrap_or(512), ..PipelineConfig::default() };
    let mus: Vec<f64> = (1..=k_max).map(|k| 0.5f64.powi(k)).collect();
    let res = bpp_sweep(&mus, &cfg)?;
    println!("{:>10}  {:>22}  {:>22}", "mu", "epsilon", "|D| |X|");
    for r in &res.rows {
        println!("{:>10}  {:>22}  {:>22}", r.mu, r.epsilon_achieved, r.product);
    }
    println!("fitted slope of ln(product) vs ln(1/epsilon): {:?}", res.slope);
    Ok(())
}
