//! Finite truncations of u and v: which relations survive, and how norm
//! estimates of algebra elements settle as the truncation grows.
//!
//! Usage: `cargo run --release --example truncated_norms -- ["expression"]`

use commforge::expr::parse;
use commforge::trunc::{boundary_defect, make_isometries, materialize, safe_window, PowerConfig};
use commforge::TruncatedOperator;

fn main() -> commforge::Result<()> {
    let text = std::env::args().nth(1).unwrap_or_else(|| "u + v".into());
    let x = parse(&text)?.eval();
    let pc = PowerConfig::identity_grade(0);

    let (u, v) = make_isometries(64)?;
    let id = TruncatedOperator::identity(64);
    let uu = u.adjoint().mul(&u);
    let range = u.mul(&u.adjoint()).add(&v.mul(&v.adjoint()));
    println!("N = 64: |U*U - 1| = {}, |UU* + VV* - 1| = {}", uu.sub(&id).max_abs(), range.sub(&id).max_abs());
    println!("        U*U is the projection onto the first {} basis vectors", uu.trace().re);

    println!();
    println!("{text}: l1 bound {}", x.l1_norm_bound());
    println!("{:>6}  {:>22}  {:>6}  {:>14}", "N", "norm estimate", "iters", "window defect");
    for dim in [16, 64, 256, 1024] {
        let est = materialize(&x, dim).op_norm_estimate(&pc);
        let window = safe_window(dim, x.depth() + 1);
        let defect = boundary_defect(&x, dim, window, &pc)?;
        println!("{dim:>6}  {:>22}  {:>6}  {defect:>14.3e}", est.lower_estimate, est.iterations);
    }
    Ok(())
}
