//! Formal-series arithmetic: binomial expansions in both conventions, the
//! window discipline that keeps coefficient extraction exact, and formal
//! residues.
//!
//! Run with `cargo run --example series_playground`.

use num_complex::Complex64;
use vertexcalc::{binomial_coeff, iota_expand, ExpansionConvention, Slot, Window};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn main() {
    // The same binomial (x1 - x2)^(-1) expanded toward either slot: the two
    // conventions produce disjoint exponent supports — their difference is
    // the two-sided delta kernel.
    let toward_x2 = iota_expand(
        c(1.0),
        &Slot::var("x1"),
        c(-1.0),
        &Slot::var("x2"),
        -1.0,
        &ExpansionConvention::subordinate_second(),
        &[
            ("x1".to_string(), Window::new(-6.0, 0.0)),
            ("x2".to_string(), Window::new(0.0, 5.0)),
        ],
    )
    .unwrap();
    let toward_x1 = iota_expand(
        c(1.0),
        &Slot::var("x1"),
        c(-1.0),
        &Slot::var("x2"),
        -1.0,
        &ExpansionConvention::subordinate_first(),
        &[
            ("x1".to_string(), Window::new(0.0, 5.0)),
            ("x2".to_string(), Window::new(-6.0, 0.0)),
        ],
    )
    .unwrap();
    println!("(x1 - x2)^(-1), expanded toward x2 (|x1| dominant):");
    for l in 0..3 {
        let v = toward_x2.coeff(&[-1.0 - l as f64, l as f64]).unwrap();
        println!("  coeff at x1^{} x2^{}: {:+.1}", -1 - l, l, v.re);
    }
    println!("(x1 - x2)^(-1), expanded toward x1 (|x2| dominant):");
    for l in 0..3 {
        let v = toward_x1.coeff(&[l as f64, -1.0 - l as f64]).unwrap();
        println!("  coeff at x1^{} x2^{}: {:+.1}", l, -1 - l, v.re);
    }
    assert!((toward_x2.coeff(&[-3.0, 2.0]).unwrap().re - 1.0).abs() < 1e-12);
    assert!((toward_x1.coeff(&[2.0, -3.0]).unwrap().re + 1.0).abs() < 1e-12);

    // Windows make untracked cells loud instead of silently zero: asking for
    // a coefficient outside the declared window is an error, inside-but-zero
    // is an exact 0.
    assert!(toward_x2.coeff(&[-9.0, 8.0]).is_err());
    assert!((toward_x2.coeff(&[-2.0, 3.0]).unwrap()).norm() == 0.0);
    println!();
    println!("outside the window: error; inside with no term: exact 0");

    // Generalized binomial coefficients drive every expansion: C(-1/2, 3).
    let b = binomial_coeff(-0.5, 3);
    println!();
    println!("C(-1/2, 3) = {b:.6} (exact -0.3125)");
    assert!((b + 0.3125).abs() < 1e-12);

    // A formal residue in one variable: Res_{x2} picks the x2^(-1) layer.
    // Build 5 x1^2 x2^(-1) + 7 x1 over windows that track both exponents.
    let mut series = vertexcalc::CoeffSeries::zero(
        &["x1", "x2"],
        &[Window::new(0.0, 4.0), Window::new(-2.0, 2.0)],
    );
    series.insert(&[2.0, -1.0], c(5.0));
    series.insert(&[1.0, 0.0], c(7.0));
    let res = series.res("x2").unwrap();
    let kept = res.coeff(&[2.0]).unwrap();
    println!();
    println!("Res_x2 of 5 x1^2 x2^(-1) + 7 x1: coefficient at x1^2 = {:.1}", kept.re);
    assert!((kept.re - 5.0).abs() < 1e-12);
    assert!(res.coeff(&[1.0]).unwrap().norm() == 0.0);
}
