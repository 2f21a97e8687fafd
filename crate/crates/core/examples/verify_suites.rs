//! Runs one identity suite (or all of them) and prints the JSON reports.
//!
//! Usage: `cargo run --release --example verify_suites -- [suite] [size] [n] [trials] [seed]`
//!
//! `size` is the matrix size for the algebraic suites and the truncation
//! dimension for `solver-identities`, `right-inverse` and `relations`.

use commforge::verify::{run_suite, TestConfig};

fn main() -> commforge::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let suite = args.first().map_or("all", String::as_str);
    let num = |i: usize, default: usize| args.get(i).map_or(default, |s| s.parse().expect("integer argument"));
    let cfg = TestConfig::new(num(1, 64), num(2, 3), num(3, 10), num(4, 0) as u64);
    let start = std::time::Instant::now();
    let reports = run_suite(suite, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&reports)?);
    eprintln!("elapsed: {:.1?}", start.elapsed());
    if reports.iter().any(|r| !r.pass) {
        std::process::exit(1);
    }
    Ok(())
}
