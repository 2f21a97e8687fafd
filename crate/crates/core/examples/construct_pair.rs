//! End to end: pick n for a target error, solve, build the scaled pair and
//! report norms, errors and the lower bound every such pair must respect.
//!
//! Usage: `cargo run --release --example construct_pair -- [epsilon] [trunc_dim]`

use commforge::pipeline::{construct_epsilon, PipelineConfig};

fn main() -> commforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let eps: f64 = args.next().map_or(0.5, |s| s.parse().expect("epsilon must be a number"));
    let dim: usize = args.next().map_or(256, |s| s.parse().expect("trunc_dim must be an integer"));
    let cfg = PipelineConfig { trunc_dim: dim, ..PipelineConfig::default() };
    let r = construct_epsilon(eps, &cfg)?;
    println!("target {eps}: n = {}, delta = {}", r.n, r.delta);
    println!("|D| = {}, |X| = {}, product = {}", r.norm_d.lower_estimate, r.norm_x.lower_estimate, r.product);
    println!("|[D, X] - 1| = {} (windowed), entry bound {}", r.error_direct.lower_estimate, r.error_entry_bound);
    println!("lower bound on the product: {} (satisfied: {})", r.popa_lower, r.popa_satisfied);
    println!("target met: {:?}", r.target_met);
    Ok(())
}
