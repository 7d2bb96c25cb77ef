//! Product vs iterate on the free-boson model: the two ways to compose three
//! charged insertions agree tuple-by-tuple once the intermediate weight sums
//! are deep enough, inside the region |z1| > |z2| > |z1 - z2| > 0.
//!
//! Run with `cargo run --example free_boson_associativity`.

use num_complex::Complex64;
use vertexcalc::{associativity_check, LogPoint};

fn main() {
    let z1 = LogPoint::principal(Complex64::new(1.0, 0.0)).unwrap();
    let z2 = LogPoint::principal(Complex64::new(0.9, 0.0)).unwrap();
    let (basis_level, level, tol) = (2, 12, 1e-6);

    for (p1, p2, p3) in [(1.0, 1.0, 0.0), (0.5, 0.5, 1.0)] {
        let report =
            associativity_check(p1, p2, p3, basis_level, &z1, &z2, level, tol).unwrap();
        println!(
            "momenta ({p1}, {p2}, {p3}): {} tuples to level {basis_level}, max rel dev {:.2e} -> {}",
            report.rows.len(),
            report.max_rel_dev,
            if report.pass { "pass" } else { "FAIL" }
        );
        // A few rows for texture: excitation tuple, the two values, deviation.
        for row in report.rows.iter().take(3) {
            println!(
                "  {:28} product {:+11.6}  iterate {:+11.6}  rel dev {:.1e}",
                row.tuple_id, row.product_re, row.iterate_re, row.rel_dev
            );
        }
        assert!(report.pass, "associativity failed at ({p1}, {p2}, {p3})");
    }

    // Outside the composition region the comparison refuses to run at all.
    let z2_bad = LogPoint::principal(Complex64::new(0.4, 0.0)).unwrap();
    let err = associativity_check(1.0, 1.0, 0.0, 0, &z1, &z2_bad, 8, tol);
    println!();
    println!("at (1, 0.4): {}", err.err().map(|e| e.to_string()).unwrap());
}
