//! Branch-tracked points: the same complex value on different sheets of the
//! logarithm gives different non-integer powers, and series substitution
//! reports which sheet each variable was evaluated on.
//!
//! Run with `cargo run --example branch_tracking`.

use num_complex::Complex64;
use vertexcalc::{
    in_composition_region, iota_expand, substitute, ExpansionConvention, LogPoint, Slot, Window,
};

fn main() {
    // The value 1 on three sheets: x^(1/2) distinguishes them.
    println!("x = 1 on successive sheets, evaluated at x^(1/2):");
    for k in [0i64, 1, 2] {
        let x = LogPoint::from_mag_half_turns(1.0, k).unwrap();
        let root = x.power(0.5);
        println!("  {k} half-turns: x^(1/2) = {:+.3} {:+.3}i", root.re, root.im);
    }
    let full_turn = LogPoint::from_mag_half_turns(1.0, 2).unwrap();
    assert!((full_turn.power(0.5) + Complex64::new(1.0, 0.0)).norm() < 1e-12);

    // Rotation composes exactly: k half-turns then one more is k+1.
    let p = LogPoint::principal(Complex64::new(0.9, 0.0)).unwrap();
    assert_eq!(p.rotate(3).half_turns, 3);
    assert!((p.rotate(2).value() - p.value()).norm() < 1e-15);

    // Substitute branch-tracked points into a series: (x1 - x2)^(-1) expanded
    // in nonnegative powers of x2 converges for |x1| > |x2| and the
    // diagnostics expose the truncation tail.
    let series = iota_expand(
        Complex64::new(1.0, 0.0),
        &Slot::var("x1"),
        Complex64::new(-1.0, 0.0),
        &Slot::var("x2"),
        -1.0,
        &ExpansionConvention::subordinate_second(),
        &[
            ("x1".to_string(), Window::new(-200.0, 0.0)),
            ("x2".to_string(), Window::new(0.0, 199.0)),
        ],
    )
    .unwrap();
    let x1 = LogPoint::principal(Complex64::new(2.0, 0.0)).unwrap();
    let x2 = LogPoint::principal(Complex64::new(0.5, 0.0)).unwrap();
    let (value, diag) = substitute(&series, &[("x1", x1), ("x2", x2)], 150.0).unwrap();
    let exact = 1.0 / (2.0 - 0.5);
    println!();
    println!(
        "(x1 - x2)^(-1) at (2, 0.5): {:.12} (exact {:.12}), {} terms in {} block(s)",
        value.re, exact, diag.terms_summed, diag.blocks
    );
    assert!((value.re - exact).abs() < 1e-10);

    // The composition region |z1| > |z2| > |z1 - z2| > 0 gates every
    // two-point comparison downstream.
    let z1 = LogPoint::principal(Complex64::new(1.0, 0.0)).unwrap();
    let z2 = LogPoint::principal(Complex64::new(0.9, 0.0)).unwrap();
    let z2_far = LogPoint::principal(Complex64::new(0.4, 0.0)).unwrap();
    println!();
    println!("(1, 0.9) in composition region: {}", in_composition_region(&z1, &z2));
    println!("(1, 0.4) in composition region: {}", in_composition_region(&z1, &z2_far));
    assert!(in_composition_region(&z1, &z2));
    assert!(!in_composition_region(&z1, &z2_far));
}
