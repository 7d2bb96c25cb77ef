//! Recover the analytic shape of a product correlator from samples alone: fit
//! z2^r (z1-z2)^s Taylor towers against probe evaluations, with the exponent
//! sum r + s pinned by the weight normalization.
//!
//! Run with `cargo run --example product_fit`.

use num_complex::Complex64;
use vertexcalc::{fit_product_expansion, CorrelatorFunctional, Functional, LogPoint, PairSampler};

fn lp(x: f64) -> LogPoint {
    LogPoint::principal(Complex64::new(x, 0.0)).unwrap()
}

fn main() {
    let (p1, p2, p3) = (1.0, 1.0, 0.0);
    let p4 = p1 + p2 + p3;
    // Exponent-sum normalization from the lowest weights.
    let delta = p4 * p4 / 2.0 - (p1 * p1 + p2 * p2 + p3 * p3) / 2.0;
    println!("momenta ({p1}, {p2}, {p3}): exponent sum r + s must equal {delta}");

    // Probes along z2 = 0.9 with z1/z2 - 1 sweeping [0.05, 0.5]: inside the
    // product region and with |z1 - z2| < |z2| so the towers converge.
    let probes: Vec<(LogPoint, LogPoint)> = (0..40)
        .map(|k| {
            let v = 0.05 + 0.45 * k as f64 / 39.0;
            (lp(0.9 * (1.0 + v)), lp(0.9))
        })
        .collect();

    // The sampler sees only lowest-tuple product-correlator values.
    let sampler = PairSampler::new(|z1: &LogPoint, z2: &LogPoint| {
        CorrelatorFunctional::product((p1, p2, p3), z1, z2, 0, 1e-10)
            .and_then(|lam| lam.eval_triple(&[], &[], &[]))
            .expect("probe inside the product region")
    });

    // Candidates cover the integer and half-integer exponent classes; the fit
    // anchors one representative per class mod 1 and prunes empty towers.
    let fit = fit_product_expansion(&sampler, delta, &[0.0, 0.5], 4, &probes, 0.5).unwrap();

    println!("residual {:.2e}, witness N = {}", fit.residual, fit.n_witness);
    for term in &fit.terms {
        let lead = term.taylor[0];
        println!(
            "  term z2^{} (z1-z2)^{}: leading Taylor coefficient {:.6} + {:.6}i",
            term.r, term.s, lead.re, lead.im
        );
    }

    // The lowest (1,1,0) correlator is exactly (z1-z2)^1: one term, s = 1.
    assert_eq!(fit.terms.len(), 1);
    assert!((fit.terms[0].s - 1.0).abs() < 1e-12);
    assert!((fit.terms[0].r - 0.0).abs() < 1e-12);
    assert!((fit.terms[0].taylor[0] - Complex64::new(1.0, 0.0)).norm() < 1e-6);
    assert!(fit.residual < 1e-8);
    assert!((fit.terms[0].r + fit.terms[0].s - delta).abs() < 1e-12);
    println!("single term with s = p1*p2 recovered, r + s = {delta} exactly");
}
