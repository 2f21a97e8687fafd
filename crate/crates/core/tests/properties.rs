use commforge::block::{self, Block, BlockMatrix};
use commforge::expr::{parse, Expr, Literal};
use commforge::solver;
use commforge::trunc::{materialize, PowerConfig};
use commforge::verify::random_tuple;
use commforge::{Element, Letter, Monomial, TruncatedOperator, Word};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(any::<bool>(), 0..=max_len)
        .prop_map(|bits| Word::from_letters(bits.into_iter().map(|b| if b { Letter::V } else { Letter::U })))
}

fn element(max_len: usize) -> impl Strategy<Value = Element> {
    prop::collection::vec((word(max_len), word(max_len), -2.0f64..2.0, -2.0f64..2.0), 0..5).prop_map(|terms| {
        Element::from_terms(terms.into_iter().map(|(l, r, re, im)| (Monomial::new(l, r), Complex64::new(re, im))))
    })
}

fn literal() -> impl Strategy<Value = Literal> {
    (0u32..1000, prop::option::of(0u32..100), any::<bool>()).prop_map(|(int, frac, imaginary)| Literal {
        digits: frac.map_or(int.to_string(), |f| format!("{int}.{f}")),
        imaginary,
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Gen(Letter::U)),
        Just(Expr::Gen(Letter::V)),
        Just(Expr::ImagUnit),
        literal().prop_map(Expr::Number),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Adjoint(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
        ]
    })
}

fn random_blocks(n: usize, dim: usize, seed: u64, mask: u32) -> BlockMatrix<TruncatedOperator> {
    BlockMatrix::from_fn(n, dim, |i, j| {
        let k = (i - 1) * n + (j - 1);
        if mask >> k & 1 == 1 {
            Block::Op(TruncatedOperator::random_gaussian(dim, seed.wrapping_add(k as u64)))
        } else if k % 3 == 0 {
            Block::Scalar(Complex64::new(0.5, -1.0))
        } else {
            Block::Zero
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parser_roundtrip(e in expr()) {
        let printed = e.to_string();
        let reparsed = parse(&printed).unwrap();
        prop_assert_eq!(&reparsed, &e, "printed as {}", printed);
        prop_assert_eq!(reparsed.to_string(), printed);
    }

    #[test]
    fn exact_and_float_evaluation_agree(e in expr()) {
        let exact = e.eval_exact().map_coefficients(|c| {
            use num_traits::ToPrimitive;
            Complex64::new(c.re.to_f64().unwrap(), c.im.to_f64().unwrap())
        });
        let float = e.eval();
        let scale = 1.0 + float.l1_norm_bound();
        prop_assert!(exact.approx_equals(&float, 1e-9 * scale));
    }

    #[test]
    fn simplification_is_canonical(x in element(3)) {
        let s = x.simplified();
        prop_assert!(s.approx_equals(&x, 1e-12));
        prop_assert_eq!(x.normal_form().simplified(), s.clone());
        prop_assert!(s.len() <= x.normal_form().len());
    }

    #[test]
    fn norm_sandwich(x in element(3), seed in 0u64..1000) {
        let m = materialize(&x, 64);
        let est = m.op_norm_estimate(&PowerConfig::identity_grade(seed)).lower_estimate;
        prop_assert!(est <= x.l1_norm_bound() * (1.0 + 1e-9) + 1e-12);
        prop_assert!(est <= m.schur_bound() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn truncation_is_faithful_on_interior(x in element(2), y in element(2)) {
        let dim = 64;
        let window = dim >> (x.depth() + y.depth());
        let product = materialize(&x, dim).mul(&materialize(&y, dim));
        let direct = materialize(&(&x * &y), dim);
        prop_assert!(product.sub(&direct).restrict_cols(window).max_abs() < 1e-12);
        prop_assert!(materialize(&x.adjoint(), dim).sub(&materialize(&x, dim).adjoint()).max_abs() < 1e-15);
    }

    #[test]
    fn block_bound_dominates_estimate(n in 2usize..4, seed in 0u64..1000, mask in any::<u32>()) {
        let m = random_blocks(n, 8, seed, mask);
        let est = block::block_norm_estimate(&m, &PowerConfig::identity_grade(seed)).lower_estimate;
        prop_assert!(m.norm_upper().value >= est * (1.0 - 1e-9));
    }

    #[test]
    fn conjugate_scale_is_a_similarity(n in 2usize..5, seed in 0u64..1000, mu in 0.05f64..1.0) {
        let d = random_blocks(n, 4, seed, u32::MAX);
        let x = random_blocks(n, 4, seed + 7919, 0b1011_0110_1101);
        let (dm, xm) = block::conjugate_scale(&d, &x, mu).unwrap();
        let lhs = block::commutator(&dm, &xm).unwrap();
        let rhs = block::similarity_scale(&block::commutator(&d, &x).unwrap(), mu);
        for i in 1..=n {
            for j in 1..=n {
                let scale = 1.0 + rhs.expanded(i, j).max_abs();
                prop_assert!(lhs.expanded(i, j).sub(&rhs.expanded(i, j)).max_abs() <= 1e-10 * scale);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tl_is_one_minus_e_on_window(n in 2usize..6, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, _) = random_tuple(n, 64, &mut rng);
        let lhs = solver::apply_t(&solver::apply_l(&x)).add(&solver::apply_e(&x));
        for (a, b) in lhs.entries().iter().zip(x.entries()) {
            prop_assert!(a.sub(b).restrict_cols(32).max_abs() < 1e-12);
        }
    }

    #[test]
    fn r_is_a_right_inverse(n in 2usize..5, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, _) = random_tuple(n, 64, &mut rng);
        let (b, report) = solver::apply_r(&x, 1e-10, 5000, solver::schur_norm).unwrap();
        prop_assert!(report.converged);
        let tb = solver::apply_t(&b);
        let scale = x.sup_norm(|e| e.max_abs());
        for (a, c) in tb.entries().iter().zip(x.entries()) {
            prop_assert!(a.sub(c).restrict_cols(32).max_abs() <= 1e-8 * scale);
        }
        prop_assert!(b.sup_norm(solver::schur_norm) <= solver::r_bound(n) * x.sup_norm(solver::schur_norm) * 1.01);
    }
}
