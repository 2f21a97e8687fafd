//! Symbolic arithmetic with u and v: parsing, normal forms, exact
//! coefficients and the 2×2 matrix picture.
//!
//! Usage: `cargo run --example algebra_relations -- ["expression" ...]`

use commforge::expr::parse;
use commforge::verify::relation_defects;
use commforge::Element;

fn main() -> commforge::Result<()> {
    let mut inputs: Vec<String> = std::env::args().skip(1).collect();
    if inputs.is_empty() {
        inputs = ["u* u", "u u* + v v*", "(u + v)*(u + v)", "u* v", "(u v* + 0.5i v)* (u v*)", "v* u u u*"]
            .map(String::from)
            .to_vec();
    }
    for text in &inputs {
        let e = parse(text)?;
        let exact = e.eval_exact().simplified();
        println!("{e}  =  {exact}   (l1 bound {})", e.eval().l1_norm_bound());
    }

    println!();
    for (name, defect) in relation_defects() {
        println!("{name}: reduces to zero exactly = {}", defect.equals(&commforge::ExactElement::zero()));
    }

    // x ↦ [[u*xu, u*xv], [v*xu, v*xv]] is inverted by reassembly
    let x = parse("u v* u + 2 v* - i u u*")?.eval().simplified();
    let blocks = x.embed_m2();
    println!();
    println!("x = {x}");
    for (r, row) in blocks.iter().enumerate() {
        for (c, b) in row.iter().enumerate() {
            println!("  block ({}, {}) = {b}", r + 1, c + 1);
        }
    }
    let back = Element::extract_m2(&blocks);
    println!("reassembled equals x: {}", back.approx_equals(&x, 1e-15));
    Ok(())
}
