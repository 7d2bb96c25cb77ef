//! Branch-tracked nonzero complex numbers and numerical substitution.
//!
//! A [`LogPoint`] stores a logarithm explicitly — a principal part with
//! argument in [0, 2π) plus an exact integer count of extra half-turns — so
//! that fractional powers of rotated arguments land on the intended sheet and
//! half-turn phase bookkeeping never degrades to floating-point argument
//! arithmetic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formal_series::CoeffSeries;

const TOL: f64 = 1e-9;

/// A nonzero complex number represented through its logarithm: the value is
/// e^(ell) · e^(iπ·half_turns), with `ell` the principal logarithm (argument
/// in [0, 2π)) and `half_turns` an exact rotation count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPoint {
    #[serde(rename = "log_re")]
    pub log_re: f64,
    #[serde(rename = "log_im")]
    pub log_im: f64,
    pub half_turns: i64,
}

impl LogPoint {
    /// Principal logarithm of z with argument in [0, 2π); zero is rejected.
    pub fn principal(z: Complex64) -> Result<LogPoint> {
        if z.norm() == 0.0 {
            return Err(Error::ZeroLog);
        }
        let mut arg = z.arg(); // (−π, π]
        if arg < 0.0 {
            arg += 2.0 * std::f64::consts::PI;
        }
        Ok(LogPoint {
            log_re: z.norm().ln(),
            log_im: arg,
            half_turns: 0,
        })
    }

    /// Point with the given modulus on the given half-turn sheet
    /// (mag@half_turns in the CLI syntax): value mag·e^(iπ·half_turns).
    pub fn from_mag_half_turns(mag: f64, half_turns: i64) -> Result<LogPoint> {
        if !(mag > 0.0) || !mag.is_finite() {
            return Err(Error::InvalidInput(format!(
                "magnitude must be positive and finite, got {mag}"
            )));
        }
        Ok(LogPoint {
            log_re: mag.ln(),
            log_im: 0.0,
            half_turns,
        })
    }

    /// The principal part of the logarithm as a complex number.
    pub fn ell(&self) -> Complex64 {
        Complex64::new(self.log_re, self.log_im)
    }

    /// Rotate by k half-turns: multiplies the represented value by e^(iπk)
    /// while keeping the rotation count exact.
    pub fn rotate(&self, k: i64) -> LogPoint {
        LogPoint {
            log_re: self.log_re,
            log_im: self.log_im,
            half_turns: self.half_turns + k,
        }
    }

    /// z^n through this branch of the logarithm: e^(n·ell) · e^(iπ·n·half_turns),
    /// with the half-turn phase exact (±1, ±i, …) whenever n·half_turns lands
    /// on a quarter-integer grid point.
    pub fn power(&self, n: f64) -> Complex64 {
        let base = (self.ell() * n).exp();
        base * half_turn_phase(n * self.half_turns as f64)
    }

    /// The represented complex value.
    pub fn value(&self) -> Complex64 {
        self.power(1.0)
    }

    /// Modulus of the represented value (independent of the branch).
    pub fn modulus(&self) -> f64 {
        self.log_re.exp()
    }
}

/// e^(iπt), exact for integer and half-integer t.
fn half_turn_phase(t: f64) -> Complex64 {
    let twice = 2.0 * t;
    if (twice - twice.round()).abs() < 1e-12 && twice.abs() < 4.0e18 {
        let q = twice.round() as i64; // t = q/2
        match q.rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::new(0.0, std::f64::consts::PI * t).exp()
    }
}

/// True iff |z1| > |z2| > |z1 − z2| > 0 on the represented values: the region
/// where the product and iterate compositions both converge and can be
/// compared after rearrangement.
pub fn in_composition_region(z1: &LogPoint, z2: &LogPoint) -> bool {
    let m1 = z1.modulus();
    let m2 = z2.modulus();
    let d = (z1.value() - z2.value()).norm();
    m1 > m2 && m2 > d && d > 0.0
}

/// Diagnostics from a numerical substitution: how much was summed and how
/// large the final same-total-exponent block was (the tail estimate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstituteDiagnostics {
    pub terms_summed: usize,
    pub blocks: usize,
    /// Modulus of the last block's contribution, a proxy for the truncation
    /// tail when the blocks decay.
    pub tail_estimate: f64,
    /// Total exponent of the last block summed (0 when nothing was summed).
    pub last_total_exponent: f64,
}

/// Numerically evaluate a series at branch-tracked points, summing term
/// blocks in increasing total-exponent order up to a per-variable exponent
/// cap measured from each window's finite edge.
///
/// Every alphabet variable must be assigned. A finite window narrower than
/// the requested order means the requested sum would need untracked
/// coefficients, which is an error.
pub fn substitute(
    s: &CoeffSeries,
    assignment: &[(&str, LogPoint)],
    order: f64,
) -> Result<(Complex64, SubstituteDiagnostics)> {
    let points: Vec<LogPoint> = s
        .vars()
        .iter()
        .map(|v| {
            assignment
                .iter()
                .find(|(n, _)| n == v)
                .map(|(_, p)| *p)
                .ok_or_else(|| Error::InvalidInput(format!("no assignment for variable {v}")))
        })
        .collect::<Result<_>>()?;

    // Per-variable inclusion range: depth `order` into the window from its
    // finite edge. A doubly-finite window narrower than `order` cannot
    // honor the request.
    let mut ranges: Vec<(f64, f64)> = Vec::new();
    for (v, w) in s.vars().iter().zip(s.windows()) {
        let (lo, hi) = (w.lo, w.hi);
        let range = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                if hi - lo < order - TOL {
                    return Err(Error::UntrackedExponent(format!(
                        "window of {v} spans {} but order {order} was requested",
                        hi - lo
                    )));
                }
                (lo, hi)
            }
            (true, false) => (lo, lo + order),
            (false, true) => (hi - order, hi),
            (false, false) => (f64::NEG_INFINITY, f64::INFINITY),
        };
        ranges.push(range);
    }

    // Collect included terms and order blocks by total exponent.
    let mut included: Vec<(f64, Complex64)> = Vec::new();
    'terms: for (exps, c) in s.terms() {
        let mut value = c;
        let mut total = 0.0;
        for ((e, (lo, hi)), p) in exps.iter().zip(&ranges).zip(&points) {
            if *e < lo - TOL || *e > hi + TOL {
                continue 'terms;
            }
            value *= p.power(*e);
            total += e;
        }
        included.push((total, value));
    }
    included.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut sum = Complex64::new(0.0, 0.0);
    let mut blocks = 0usize;
    let mut tail = 0.0f64;
    let mut last_total = 0.0f64;
    let mut i = 0usize;
    while i < included.len() {
        let total = included[i].0;
        let mut block = Complex64::new(0.0, 0.0);
        while i < included.len() && (included[i].0 - total).abs() < TOL {
            block += included[i].1;
            i += 1;
        }
        sum += block;
        blocks += 1;
        tail = block.norm();
        last_total = total;
    }
    Ok((
        sum,
        SubstituteDiagnostics {
            terms_summed: included.len(),
            blocks,
            tail_estimate: tail,
            last_total_exponent: last_total,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formal_series::Window;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn principal_values() {
        let p = LogPoint::principal(c(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p.log_re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.log_im, 0.0, epsilon = 1e-15);

        let m = LogPoint::principal(c(-1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(m.log_im, std::f64::consts::PI, epsilon = 1e-15);

        let two = LogPoint::principal(c(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(two.log_re, 2.0f64.ln(), epsilon = 1e-15);

        // argument convention: below-axis points map into [0, 2π)
        let below = LogPoint::principal(c(0.0, -1.0)).unwrap();
        assert_abs_diff_eq!(below.log_im, 1.5 * std::f64::consts::PI, epsilon = 1e-12);

        assert!(matches!(
            LogPoint::principal(c(0.0, 0.0)),
            Err(Error::ZeroLog)
        ));
    }

    #[test]
    fn power_examples() {
        let one = LogPoint::principal(c(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(one.power(0.5).re, 1.0, epsilon = 1e-15);

        let rotated = one.rotate(1);
        let v = rotated.power(0.5);
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 1.0, epsilon = 1e-15);

        let two = LogPoint::principal(c(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(two.power(3.0).re, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn rotate_full_turn_sqrt() {
        let p = LogPoint::principal(c(1.0, 0.0)).unwrap().rotate(2);
        let v = p.power(0.5);
        assert_abs_diff_eq!(v.re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rotate_roundtrip_exact() {
        let p = LogPoint::principal(c(0.3, 0.7)).unwrap();
        assert_eq!(p.rotate(1).rotate(-1), p);
        assert_eq!(p.rotate(5).rotate(-5), p);
        // modulus is branch-independent
        assert_abs_diff_eq!(p.rotate(3).modulus(), p.modulus(), epsilon = 1e-15);
    }

    #[test]
    fn composition_region_examples() {
        let z = |re: f64| LogPoint::principal(c(re, 0.0)).unwrap();
        assert!(in_composition_region(&z(1.0), &z(0.9)));
        assert!(!in_composition_region(&z(2.0), &z(1.0)));
        assert!(!in_composition_region(&z(1.0), &z(1.0)));
    }

    #[test]
    fn region_invariant_under_simultaneous_rotation() {
        let z1 = LogPoint::principal(c(1.0, 0.0)).unwrap();
        let z2 = LogPoint::principal(c(0.9, 0.0)).unwrap();
        for k in [-3i64, -1, 1, 2, 4] {
            // rotating both by an even count multiplies both values by the
            // same ±1, leaving all three moduli unchanged
            let r1 = z1.rotate(2 * k);
            let r2 = z2.rotate(2 * k);
            assert_eq!(
                in_composition_region(&z1, &z2),
                in_composition_region(&r1, &r2)
            );
        }
    }

    #[test]
    fn power_additivity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if z.norm() < 1e-3 {
                continue;
            }
            let p = LogPoint::principal(z).unwrap().rotate(rng.gen_range(-3..4));
            let m: f64 = rng.gen_range(-3.0..3.0);
            let n: f64 = rng.gen_range(-3.0..3.0);
            let lhs = p.power(m + n);
            let rhs = p.power(m) * p.power(n);
            assert!(
                (lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0),
                "additivity failed for {z} {m} {n}"
            );
        }
    }

    #[test]
    fn rotation_phase_law() {
        let p = LogPoint::principal(c(0.8, 0.1)).unwrap();
        for k in -4i64..=4 {
            for &n in &[0.5, -1.5, 2.0, 1.0 / 3.0] {
                let lhs = p.rotate(k).power(n);
                let phase = Complex64::new(0.0, std::f64::consts::PI * k as f64 * n).exp();
                let rhs = phase * p.power(n);
                assert!((lhs - rhs).norm() < 1e-12, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn substitute_unit_series() {
        let u = CoeffSeries::unit(&["x"], &[Window::new(0.0, 10.0)]);
        let p = LogPoint::principal(c(0.37, 1.2)).unwrap();
        let (v, diag) = substitute(&u, &[("x", p)], 10.0).unwrap();
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        assert_eq!(diag.terms_summed, 1);
    }

    #[test]
    fn substitute_geometric_partial_sum() {
        let n = 12usize;
        let mut s = CoeffSeries::zero(&["x"], &[Window::new(0.0, n as f64)]);
        for l in 0..=n {
            s.insert(&[l as f64], c(1.0, 0.0));
        }
        let half = LogPoint::principal(c(0.5, 0.0)).unwrap();
        let (v, diag) = substitute(&s, &[("x", half)], n as f64).unwrap();
        let expected = 2.0 - 2.0f64.powi(-(n as i32));
        assert_abs_diff_eq!(v.re, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(diag.tail_estimate, 2.0f64.powi(-(n as i32)), epsilon = 1e-15);
        assert_eq!(diag.blocks, n + 1);
        assert_abs_diff_eq!(diag.last_total_exponent, n as f64, epsilon = 1e-9);
    }

    #[test]
    fn substitute_half_power_on_rotated_sheet() {
        let s = CoeffSeries::monomial(&["x"], &[0.5], c(1.0, 0.0));
        let p = LogPoint::principal(c(1.0, 0.0)).unwrap().rotate(1);
        // the monomial's window is the single point {1/2}: order 0 covers it
        let (v, _) = substitute(&s, &[("x", p)], 0.0).unwrap();
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn substitute_order_beyond_window_errors() {
        let s = CoeffSeries::unit(&["x"], &[Window::new(0.0, 12.0)]);
        let p = LogPoint::principal(c(0.5, 0.0)).unwrap();
        match substitute(&s, &[("x", p)], 20.0) {
            Err(Error::UntrackedExponent(_)) => {}
            other => panic!("expected untracked exponent, got {other:?}"),
        }
    }

    #[test]
    fn substitute_missing_assignment_errors() {
        let s = CoeffSeries::unit(&["x", "y"], &[Window::new(0.0, 2.0), Window::new(0.0, 2.0)]);
        let p = LogPoint::principal(c(0.5, 0.0)).unwrap();
        assert!(substitute(&s, &[("x", p)], 2.0).is_err());
    }

    #[test]
    fn logpoint_serde_schema() {
        let p = LogPoint::principal(c(-2.0, 0.0)).unwrap().rotate(3);
        let val = serde_json::to_value(p).unwrap();
        assert_abs_diff_eq!(
            val["log_re"].as_f64().unwrap(),
            2.0f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            val["log_im"].as_f64().unwrap(),
            std::f64::consts::PI,
            epsilon = 1e-15
        );
        assert_eq!(val["half_turns"], serde_json::json!(3));
        let back: LogPoint = serde_json::from_value(val).unwrap();
        assert_eq!(back, p);
    }
}
