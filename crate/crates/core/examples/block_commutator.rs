//! The block pair (D, X) built from a solved tuple: their commutator is 1
//! except for the top-right block, and conjugating by diag(1, μ, μ², ...)
//! shrinks that block by μ^(n-1) while the norms trade off.
//!
//! Usage: `cargo run --release --example block_commutator -- [n] [trunc_dim]`

use commforge::block::{block_norm_estimate, build_d_cuntz, build_x, commutator, conjugate_scale, BlockMatrix};
use commforge::solver::{solve_b, SolverConfig};
use commforge::PowerConfig;

fn main() -> commforge::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(3);
    let dim = args.next().unwrap_or(128);
    let mut cfg = SolverConfig::for_n(n);
    cfg.trunc_dim = dim;
    let sol = solve_b(&cfg)?;
    let delta = cfg.delta;
    let pc = PowerConfig::solver_grade(0);
    let b = sol.b.entries().to_vec();

    let d = build_d_cuntz(&b, delta, dim)?;
    let x = build_x(&b, delta, dim)?;
    let defect = commutator(&d, &x)?.sub(&BlockMatrix::identity(n, dim))?;
    println!("n = {n}, delta = {delta}, N = {dim}");
    println!("largest entry of each block of [D, X] - 1 (first N/2 columns):");
    let window = |i, j| defect.expanded(i, j).restrict_cols(dim / 2).max_abs();
    for i in 1..=n {
        let row: Vec<String> = (1..=n).map(|j| format!("{:>9.2e}", window(i, j))).collect();
        println!("  {}", row.join(" "));
    }

    for mu in [1.0, 0.5, 0.25] {
        let (dm, xm) = conjugate_scale(&d, &x, mu)?;
        let c = commutator(&dm, &xm)?;
        let corner = c.expanded(1, n).restrict_cols(dim / 2).max_abs();
        println!(
            "mu = {mu:<5} |D| ~ {:.4e}  |X| ~ {:.4}  top-right entry max {corner:.4e}",
            block_norm_estimate(&dm, &pc).lower_estimate,
            block_norm_estimate(&xm, &pc).lower_estimate,
        );
    }
    Ok(())
}
