//! Solves for the tuple `b` at a given `n` and prints the diagnostics.
//!
//! Usage: `cargo run --release --example solve_system -- [n] [trunc_dim]`

use commforge::solver::{b_bound, solve_b, SolverConfig};

fn main() -> commforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(2), |s| s.parse()).expect("n must be an integer");
    let dim: usize = args.next().map_or(Ok(512), |s| s.parse()).expect("trunc_dim must be an integer");

    let mut cfg = SolverConfig::for_n(n);
    cfg.trunc_dim = dim;
    cfg.compare_half = true;
    let sol = solve_b(&cfg)?;
    let d = &sol.diagnostics;
    println!("{}", serde_json::to_string_pretty(d)?);
    println!("bound on |b_i|: {:.3}", b_bound(n));
    println!("largest row residual: {:.3e}", d.residual_rows.iter().fold(0.0f64, |m, r| m.max(*r)));
    Ok(())
}
