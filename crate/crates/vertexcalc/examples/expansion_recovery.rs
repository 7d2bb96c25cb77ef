//! Expansion uniqueness in action: plant a finite sum of real-exponent terms,
//! hand the extractor only point samples on shrinking circles plus a lattice
//! of candidate exponents, and recover every term — including the residue at
//! exponent -1.
//!
//! Run with `cargo run --example expansion_recovery`.

use num_complex::Complex64;
use vertexcalc::{exponent_support, leading_extract, res_z, RadiiSchedule, RealExpSeries, Sampler};

fn main() {
    // The planted series: exponents spaced by at least 1/4, one at -1 so the
    // residue is interesting.
    let planted = RealExpSeries::new(vec![
        (-1.75, Complex64::new(0.6, -1.1)),
        (-1.0, Complex64::new(2.5, 0.0)),
        (-0.25, Complex64::new(-0.4, 0.3)),
        (0.5, Complex64::new(1.0, 1.0)),
        (1.75, Complex64::new(0.0, 3.0)),
    ])
    .unwrap();

    // The extractor sees only a black-box sampler on an annulus around 0.
    let sampler = Sampler::new(1e-6, 0.5, |z| planted.eval(z)).unwrap();

    // Candidate lattice: the planted exponents plus well-separated decoys
    // that must come back with zero coefficients (and therefore no term).
    let lattice = [-3.0, -1.75, -1.0, -0.25, 0.5, 1.0, 1.75, 2.5];
    let recovered = leading_extract(&sampler, &lattice, 1e-6, &RadiiSchedule::default()).unwrap();

    println!("{:>9} {:>22} {:>22} {:>10}", "exponent", "planted", "recovered", "|err|");
    for &(m, a) in planted.terms() {
        let got = recovered
            .terms()
            .iter()
            .find(|&&(mr, _)| (mr - m).abs() < 1e-9)
            .map(|&(_, c)| c)
            .expect("planted exponent missing from recovery");
        println!(
            "{:>9.2} {:>10.4}{:+.4}i {:>10.4}{:+.4}i {:>10.2e}",
            m,
            a.re,
            a.im,
            got.re,
            got.im,
            (got - a).norm()
        );
        assert!((got - a).norm() < 1e-6, "coefficient off at exponent {m}");
    }
    assert_eq!(recovered.terms().len(), planted.terms().len(), "decoy term recovered");

    let res = res_z(&recovered);
    println!();
    println!("Res_z (coefficient at exponent -1): {:.6} + {:.6}i", res.re, res.im);
    assert!((res - Complex64::new(2.5, 0.0)).norm() < 1e-6);

    // Exponent clustering mod 1: the support uses four classes here.
    let classes = exponent_support(planted.terms(), 1e-9, 8).unwrap();
    println!();
    println!("exponent classes mod 1: {classes:?}");
}
