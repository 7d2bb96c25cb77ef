//! The two composite actions on dual functionals: inserting an algebra
//! element through the first or the second composition order lands on the
//! same family of coefficient functionals, cell by cell. The vacuum insertion
//! reduces to the delta-kernel identities; the conformal element exercises
//! the full conjugation and kernel assembly.
//!
//! Run with `cargo run --example tau_actions`.

use num_complex::Complex64;
use vertexcalc::{
    check_tau_equality, lprime0_apply, AlgebraElement, CorrelatorFunctional, Functional, LogPoint,
};

fn lp(x: f64) -> LogPoint {
    LogPoint::principal(Complex64::new(x, 0.0)).unwrap()
}

fn main() {
    let z1 = lp(1.0);
    let z2 = lp(0.9);
    let momenta = (1.0, 1.0, 0.0);

    // A product-correlator functional truncated at level 8: the dual vector
    // is the lowest state, insertions read through genuine correlators.
    let lam = CorrelatorFunctional::product(momenta, &z1, &z2, 8, 1e-9).unwrap();

    // Vacuum insertion: both actions collapse to multiplication by the same
    // delta kernels; deviations are pure floating-point noise.
    let vac = AlgebraElement::vacuum();
    let report = check_tau_equality(&vac, &lam, &z1, &z2, 1, 1e-6).unwrap();
    println!(
        "vacuum insertion: {} cells, max dev {:.2e} against scale {:.2} -> {}",
        report.cells,
        report.max_dev,
        report.scale,
        if report.pass { "pass" } else { "FAIL" }
    );
    assert!(report.pass);

    // Conformal element: the first action conjugates it through the formal
    // inversion (it becomes y^4 omega), the second acts directly; the two
    // kernel expansions still agree cellwise.
    let omega = AlgebraElement::omega();
    let report = check_tau_equality(&omega, &lam, &z1, &z2, 1, 1e-6).unwrap();
    println!(
        "conformal insertion: {} cells over {} functional entries, max dev {:.2e} -> {}",
        report.cells,
        report.triples,
        report.max_dev,
        if report.pass { "pass" } else { "FAIL" }
    );
    assert!(report.pass);

    // The grading component of the conformal action is diagonal on the
    // correlator functional: eigenvalue = (total momentum)^2 / 2.
    let graded = lprime0_apply(&lam, &z1, &z2).unwrap();
    let base = lam.eval_triple(&[], &[], &[]).unwrap();
    let acted = graded.value(&[], &[], &[]);
    let eigen = acted / base;
    let p4 = momenta.0 + momenta.1 + momenta.2;
    println!(
        "grading action on the lowest entry: ratio {:.9} (expected {})",
        eigen.re,
        p4 * p4 / 2.0
    );
    assert!((eigen - Complex64::new(p4 * p4 / 2.0, 0.0)).norm() < 1e-6);
}
