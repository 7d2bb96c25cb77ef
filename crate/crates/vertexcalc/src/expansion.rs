//! Expansion-uniqueness analysis: extraction of a finite real-exponent
//! expansion from point samples of a function near 0, the residue functional
//! on such expansions, finite exponent-support detection modulo 1, and
//! least-squares recovery of a two-variable product expansion in powers of z2
//! and z1−z2 from correlator probes.

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::branch::LogPoint;
use crate::error::{Error, Result};
use crate::formal_series::cpowi;

/// A finite expansion Σ_i a_i z^{m_i} with strictly increasing real
/// exponents and nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RealExpSeries {
    terms: Vec<(f64, Complex64)>,
}

impl RealExpSeries {
    /// Build from (exponent, coefficient) pairs; exponents must be strictly
    /// increasing and coefficients nonzero.
    pub fn new(terms: Vec<(f64, Complex64)>) -> Result<RealExpSeries> {
        for w in terms.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidInput(format!(
                    "exponents must be strictly increasing, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((m, a)) = terms.iter().find(|(_, a)| a.norm() == 0.0) {
            return Err(Error::InvalidInput(format!(
                "zero coefficient at exponent {m} ({a})"
            )));
        }
        Ok(RealExpSeries { terms })
    }

    pub fn empty() -> RealExpSeries {
        RealExpSeries { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[(f64, Complex64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluate at a branch-tracked point.
    pub fn eval(&self, z: &LogPoint) -> Complex64 {
        self.terms
            .iter()
            .map(|&(m, a)| a * z.power(m))
            .sum()
    }
}

/// The residue functional: the coefficient at exponent −1, or 0 when no such
/// term exists.
pub fn res_z(s: &RealExpSeries) -> Complex64 {
    s.terms
        .iter()
        .find(|(m, _)| (m + 1.0).abs() < 1e-9)
        .map(|&(_, a)| a)
        .unwrap_or(Complex64::new(0.0, 0.0))
}

/// Point-sampling access to a function of one branch-tracked variable,
/// declared valid on the annulus inner ≤ |z| ≤ outer.
pub struct Sampler<'a> {
    f: Box<dyn Fn(&LogPoint) -> Complex64 + Sync + 'a>,
    pub inner: f64,
    pub outer: f64,
}

impl<'a> Sampler<'a> {
    pub fn new(
        inner: f64,
        outer: f64,
        f: impl Fn(&LogPoint) -> Complex64 + Sync + 'a,
    ) -> Result<Sampler<'a>> {
        if !(inner > 0.0) || !(outer >= inner) {
            return Err(Error::InvalidInput(format!(
                "annulus requires 0 < inner ≤ outer, got [{inner}, {outer}]"
            )));
        }
        Ok(Sampler {
            f: Box::new(f),
            inner,
            outer,
        })
    }

    pub fn eval(&self, z: &LogPoint) -> Complex64 {
        (self.f)(z)
    }
}

/// Point-sampling access to a function of two branch-tracked variables.
pub struct PairSampler<'a> {
    f: Box<dyn Fn(&LogPoint, &LogPoint) -> Complex64 + Sync + 'a>,
}

impl<'a> PairSampler<'a> {
    pub fn new(f: impl Fn(&LogPoint, &LogPoint) -> Complex64 + Sync + 'a) -> PairSampler<'a> {
        PairSampler { f: Box::new(f) }
    }

    pub fn eval(&self, z1: &LogPoint, z2: &LogPoint) -> Complex64 {
        (self.f)(z1, z2)
    }
}

/// Geometric radii schedule r_k = r0 · ratio^k, k = 0 … steps−1, used for
/// limit extraction toward 0.
#[derive(Debug, Clone, Copy)]
pub struct RadiiSchedule {
    pub r0: f64,
    pub ratio: f64,
    pub steps: usize,
}

impl Default for RadiiSchedule {
    fn default() -> Self {
        RadiiSchedule {
            r0: 0.1,
            ratio: 0.5,
            steps: 8,
        }
    }
}

impl RadiiSchedule {
    pub fn radii(&self) -> Vec<f64> {
        (0..self.steps).map(|k| self.r0 * self.ratio.powi(k as i32)).collect()
    }
}

/// Gap-aware sequence acceleration: values v_k sampled at radii r·ratio^k
/// carrying error terms c_j·r^{g_j}; each pass eliminates one known gap g_j
/// by combining neighbors. Once every known error order is eliminated the
/// largest-radius entry is the cleanest (the smallest radii suffer
/// cancellation noise from the subtracted dominant terms), so the estimate
/// is the head of the final column; the spread against its neighbor signals
/// content the gap model did not account for.
fn accelerated_limit(values: &[Complex64], gaps: &[f64], ratio: f64) -> (Complex64, f64) {
    let mut col: Vec<Complex64> = values.to_vec();
    for &g in gaps {
        if col.len() < 2 {
            break;
        }
        let w = Complex64::new(ratio.powf(g), 0.0);
        let mut next = Vec::with_capacity(col.len() - 1);
        for k in 0..col.len() - 1 {
            // col[k+1] sits at the smaller radius
            next.push((col[k + 1] - w * col[k]) / (Complex64::new(1.0, 0.0) - w));
        }
        col = next;
    }
    let est = col[0];
    let spread = if col.len() >= 2 {
        (col[0] - col[1]).norm()
    } else {
        0.0
    };
    (est, spread)
}

/// Re-estimate the coefficients over a fixed, already-identified support by
/// one weighted least-squares solve of Σ_i a_i r^{m_i} = f(r) on a log-dense
/// radius ladder spanning the sampler's annulus. The sequential limits in
/// `leading_extract` identify which exponents carry content, but their
/// repeated subtractions compound rounding noise across a wide exponent
/// span; the joint solve reads every sample at its own scale and carries no
/// cascade. Rows are weighted to unit sample magnitude and columns
/// equilibrated; a solve that is itself ill-conditioned returns None and
/// leaves the sequential estimates in place.
fn joint_coefficient_solve(
    f: &Sampler,
    support: &[f64],
    r_hi: f64,
    r_lo: f64,
) -> Option<Vec<(f64, Complex64)>> {
    if support.is_empty() || !(r_lo > 0.0) || !(r_hi > r_lo) {
        return None;
    }
    let n_rows = (4 * support.len() + 8).max(16);
    let samples: Vec<(LogPoint, Complex64)> = (0..n_rows)
        .map(|k| {
            let r = r_hi * (r_lo / r_hi).powf(k as f64 / (n_rows - 1) as f64);
            let z = LogPoint::principal(Complex64::new(r, 0.0)).unwrap();
            let v = f.eval(&z);
            (z, v)
        })
        .collect();
    let vmax = samples.iter().map(|(_, v)| v.norm()).fold(0.0f64, f64::max);
    if vmax == 0.0 {
        return Some(support.iter().map(|&m| (m, Complex64::new(0.0, 0.0))).collect());
    }
    let mut a = DMatrix::<Complex<f64>>::zeros(n_rows, support.len());
    let mut b = DVector::<Complex<f64>>::zeros(n_rows);
    for (k, (z, v)) in samples.iter().enumerate() {
        // relative weighting; the floor keeps a near-cancellation sample from
        // promoting its own rounding noise to a hard constraint
        let w = 1.0 / v.norm().max(1e-13 * vmax);
        for (i, &m) in support.iter().enumerate() {
            let p = z.power(m) * w;
            a[(k, i)] = Complex::new(p.re, p.im);
        }
        b[k] = Complex::new(v.re * w, v.im * w);
    }
    let mut scales = vec![1.0f64; support.len()];
    for j in 0..support.len() {
        let n = a.column(j).norm();
        if n > 0.0 {
            scales[j] = n;
            let mut col = a.column_mut(j);
            col /= Complex::from(n);
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > 1e10 {
        return None;
    }
    let x = svd.solve(&b, 0.0).ok()?;
    Some(
        support
            .iter()
            .zip(x.iter().zip(&scales))
            .map(|(&m, (c, &s))| (m, Complex64::new(c.re, c.im) / s))
            .collect(),
    )
}

/// Recover the finite expansion of `f` over a candidate exponent lattice by
/// repeated leading-term extraction: ascending over the lattice, estimate
/// a_m = lim_{|z|→0} z^{−m} f(z) by gap-aware acceleration over the radii
/// schedule, subtract the recovered term, and continue. Exhausting the
/// lattice with a non-negligible remainder, or hitting a divergent limit,
/// means `f` is not expandable over the lattice.
pub fn leading_extract(
    f: &Sampler,
    lattice: &[f64],
    tol: f64,
    schedule: &RadiiSchedule,
) -> Result<RealExpSeries> {
    let mut lattice: Vec<f64> = lattice.to_vec();
    lattice.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lattice.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let radii: Vec<f64> = schedule
        .radii()
        .into_iter()
        .filter(|r| *r >= f.inner && *r <= f.outer)
        .collect();
    if radii.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "radii schedule leaves {} usable points inside the annulus [{}, {}]",
            radii.len(),
            f.inner,
            f.outer
        )));
    }
    let points: Vec<LogPoint> = radii
        .iter()
        .map(|&r| LogPoint::principal(Complex64::new(r, 0.0)).unwrap())
        .collect();
    let raw: Vec<Complex64> = points.iter().map(|z| f.eval(z)).collect();

    let mut extracted: Vec<(f64, Complex64)> = Vec::new();
    let remainder = |z: &LogPoint, base: Complex64, found: &[(f64, Complex64)]| {
        found.iter().fold(base, |acc, &(m, a)| acc - a * z.power(m))
    };

    for (i, &m) in lattice.iter().enumerate() {
        let values: Vec<Complex64> = points
            .iter()
            .zip(&raw)
            .map(|(z, &v)| remainder(z, v, &extracted) * z.power(-m))
            .collect();
        // error exponents: gaps to the remaining higher lattice candidates
        let gaps: Vec<f64> = lattice[i + 1..]
            .iter()
            .take(radii.len() - 1)
            .map(|&m2| m2 - m)
            .collect();
        let (est, spread) = accelerated_limit(&values, &gaps, schedule.ratio);
        if spread > 0.05 * est.norm().max(1.0) && est.norm() > 10.0 * tol {
            return Err(Error::NotExpandable(format!(
                "no convergent limit at exponent {m} (estimate {est}, spread {spread})"
            )));
        }
        if est.norm() > tol {
            extracted.push((m, est));
        }
    }

    // The sequential pass says which exponents carry content; re-read their
    // coefficients in one joint solve so wide-span subtraction noise cannot
    // accumulate into them, then drop any support the solve reveals as empty.
    loop {
        let support: Vec<f64> = extracted.iter().map(|&(m, _)| m).collect();
        let Some(refined) = joint_coefficient_solve(f, &support, f.outer, f.inner) else {
            break;
        };
        let kept: Vec<(f64, Complex64)> =
            refined.into_iter().filter(|(_, a)| a.norm() > tol).collect();
        let pruned = kept.len() < extracted.len();
        extracted = kept;
        if !pruned {
            break;
        }
    }

    // Everything at or below the largest lattice exponent must now be gone.
    // Each radius is judged at its own sample magnitude: a single global
    // scale would let junk hide behind the largest (steepest-exponent)
    // samples.
    let worst = points
        .iter()
        .zip(&raw)
        .map(|(z, &v)| remainder(z, v, &extracted).norm() / v.norm().max(1.0))
        .fold(0.0f64, f64::max);
    if worst > tol * 10.0 {
        return Err(Error::NotExpandable(format!(
            "relative remainder {worst} after exhausting the lattice"
        )));
    }
    RealExpSeries::new(extracted)
}

/// Cluster occurring exponents into classes modulo 1: returns one
/// representative in [0, 1) per class, sorted. Exceeding `max_classes`
/// reports the support as not finite at this cutoff.
pub fn exponent_support(
    samples: &[(f64, Complex64)],
    cluster_tol: f64,
    max_classes: usize,
) -> Result<Vec<f64>> {
    let mut classes: Vec<f64> = Vec::new();
    for &(e, c) in samples {
        if c.norm() < 1e-13 {
            continue;
        }
        let frac = e.rem_euclid(1.0);
        let hit = classes.iter().any(|&h| {
            let d = (frac - h).abs();
            d < cluster_tol || (1.0 - d) < cluster_tol
        });
        if !hit {
            classes.push(frac);
            if classes.len() > max_classes {
                return Err(Error::SupportNotFinite(format!(
                    "more than {max_classes} exponent classes modulo 1"
                )));
            }
        }
    }
    classes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(classes)
}

/// One recovered term z2^r (z1−z2)^s f(v) of a product expansion, with the
/// Taylor coefficients of f in v = (z1−z2)/z2.
#[derive(Debug, Clone)]
pub struct FitTerm {
    pub r: f64,
    pub s: f64,
    pub taylor: Vec<Complex64>,
}

/// Least-squares recovery of a product expansion: terms, fit residual, the
/// exponent-sum normalization Δ = r_i + s_i, and the largest integer N with
/// weight_base + s_i > N for every term.
#[derive(Debug, Clone)]
pub struct ExpansionFit {
    pub terms: Vec<FitTerm>,
    pub residual: f64,
    pub delta: f64,
    pub n_witness: i64,
}

impl Serialize for ExpansionFit {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        struct Taylor<'a>(&'a [Complex64]);
        impl Serialize for Taylor<'_> {
            fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = ser.serialize_seq(Some(self.0.len()))?;
                for c in self.0 {
                    seq.serialize_element(&serde_json::json!({"re": c.re, "im": c.im}))?;
                }
                seq.end()
            }
        }
        let mut st = ser.serialize_struct("ExpansionFit", 6)?;
        st.serialize_field("r", &self.terms.iter().map(|t| t.r).collect::<Vec<_>>())?;
        st.serialize_field("s", &self.terms.iter().map(|t| t.s).collect::<Vec<_>>())?;
        st.serialize_field(
            "taylor",
            &self
                .terms
                .iter()
                .map(|t| {
                    serde_json::to_value(Taylor(&t.taylor)).unwrap_or(serde_json::Value::Null)
                })
                .collect::<Vec<_>>(),
        )?;
        st.serialize_field("residual", &self.residual)?;
        st.serialize_field("delta", &self.delta)?;
        st.serialize_field("n_witness", &self.n_witness)?;
        st.end()
    }
}

/// Fit Σ_i z2^{r_i} (z1−z2)^{s_i} f_i((z1−z2)/z2) to correlator probes, with
/// s_i = Δ − r_i and each f_i a Taylor polynomial of degree `degree`.
///
/// Candidate r's that differ by integers produce exactly colliding design
/// columns (a v-power shift maps one tower onto the other), so candidates
/// are first anchored to one representative per class modulo 1 — the
/// smallest r in each class. Probes must lie in |z2| > |z1−z2| > 0. The
/// design is column-equilibrated before a complex SVD solve; a condition
/// number above 1e10 makes the fit unreliable.
pub fn fit_product_expansion(
    correlator: &PairSampler,
    delta: f64,
    candidates: &[f64],
    degree: usize,
    probes: &[(LogPoint, LogPoint)],
    weight_base: f64,
) -> Result<ExpansionFit> {
    // anchor candidates: one representative (smallest r) per class mod 1
    let mut anchors: Vec<f64> = Vec::new();
    let mut sorted: Vec<f64> = candidates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &r in &sorted {
        let frac = r.rem_euclid(1.0);
        let dup = anchors.iter().any(|&a| {
            let d = (a.rem_euclid(1.0) - frac).abs();
            d < 1e-9 || (1.0 - d).abs() < 1e-9
        });
        if !dup {
            anchors.push(r);
        }
    }
    if anchors.is_empty() {
        return Err(Error::InvalidInput("no candidate exponents".into()));
    }
    if probes.len() < anchors.len() * (degree + 1) {
        return Err(Error::InvalidInput(format!(
            "{} probes cannot determine {} coefficients",
            probes.len(),
            anchors.len() * (degree + 1)
        )));
    }

    // probe values and region check
    let mut rows: Vec<(LogPoint, LogPoint, Complex64)> = Vec::new();
    for (z1, z2) in probes {
        let z3v = z1.value() - z2.value();
        if !(z2.modulus() > z3v.norm() && z3v.norm() > 0.0) {
            return Err(Error::OutsideIterateRegion(format!(
                "probe needs |z2| > |z1−z2| > 0, got |z2| = {}, |z1−z2| = {}",
                z2.modulus(),
                z3v.norm()
            )));
        }
        let z3 = LogPoint::principal(z3v).unwrap();
        rows.push((*z2, z3, correlator.eval(z1, z2)));
    }

    let b_norm = rows.iter().map(|(_, _, v)| v.norm_sqr()).sum::<f64>().sqrt();
    if b_norm < 1e-13 {
        return Ok(ExpansionFit {
            terms: Vec::new(),
            residual: 0.0,
            delta,
            n_witness: 0,
        });
    }

    let ncols = anchors.len() * (degree + 1);
    let mut a = DMatrix::<Complex<f64>>::zeros(rows.len(), ncols);
    for (row, (z2, z3, _)) in rows.iter().enumerate() {
        let v = z3.value() / z2.value();
        for (i, &r_i) in anchors.iter().enumerate() {
            let s_i = delta - r_i;
            let base = z2.power(r_i) * z3.power(s_i);
            for j in 0..=degree {
                a[(row, i * (degree + 1) + j)] = base * cpowi(v, j as i64);
            }
        }
    }
    let b = DVector::<Complex<f64>>::from_iterator(rows.len(), rows.iter().map(|(_, _, v)| *v));

    // column equilibration
    let mut scales = vec![1.0f64; ncols];
    let mut a_eq = a.clone();
    for j in 0..ncols {
        let n = a.column(j).norm();
        if n > 0.0 {
            scales[j] = n;
            let mut col = a_eq.column_mut(j);
            col /= Complex::from(n);
        }
    }
    let svd = a_eq.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > 1e10 {
        return Err(Error::FitUnreliable(format!(
            "design condition number {:.3e} exceeds 1e10",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    let x_eq = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::FitUnreliable(e.to_string()))?;
    let residual_abs = (&a_eq * &x_eq - &b).norm();
    let residual = residual_abs / b_norm;

    let mut terms = Vec::new();
    let mut max_norm = 0.0f64;
    let mut class_coeffs: Vec<Vec<Complex64>> = Vec::new();
    for (i, _) in anchors.iter().enumerate() {
        let coeffs: Vec<Complex64> = (0..=degree)
            .map(|j| {
                let k = i * (degree + 1) + j;
                let c = x_eq[k] / Complex::from(scales[k]);
                Complex64::new(c.re, c.im)
            })
            .collect();
        let n = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        max_norm = max_norm.max(n);
        class_coeffs.push(coeffs);
    }
    for (i, coeffs) in class_coeffs.into_iter().enumerate() {
        let n = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 * max_norm {
            terms.push(FitTerm {
                r: anchors[i],
                s: delta - anchors[i],
                taylor: coeffs,
            });
        }
    }

    let n_witness = terms
        .iter()
        .map(|t| {
            let bound = weight_base + t.s;
            // largest integer strictly below bound
            (bound.ceil() - 1.0) as i64
        })
        .min()
        .unwrap_or(0);

    Ok(ExpansionFit {
        terms,
        residual,
        delta,
        n_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lp(re: f64) -> LogPoint {
        LogPoint::principal(Complex64::new(re, 0.0)).unwrap()
    }

    #[test]
    fn res_z_examples() {
        let s = RealExpSeries::new(vec![(-1.0, c(3.0, 0.0))]).unwrap();
        assert_eq!(res_z(&s), c(3.0, 0.0));
        let s = RealExpSeries::new(vec![(0.5, c(2.0, 0.0))]).unwrap();
        assert_eq!(res_z(&s), c(0.0, 0.0));
        let s =
            RealExpSeries::new(vec![(-2.0, c(5.0, 0.0)), (-1.0, c(7.0, 0.0)), (0.0, c(1.0, 0.0))])
                .unwrap();
        assert_eq!(res_z(&s), c(7.0, 0.0));
    }

    #[test]
    fn real_exp_series_invariants() {
        assert!(RealExpSeries::new(vec![(1.0, c(1.0, 0.0)), (0.5, c(1.0, 0.0))]).is_err());
        assert!(RealExpSeries::new(vec![(1.0, c(0.0, 0.0))]).is_err());
    }

    #[test]
    fn extract_two_term_expansion() {
        let f = Sampler::new(1e-4, 0.5, |z: &LogPoint| {
            z.power(-1.0) + 2.0 * z.power(0.5)
        })
        .unwrap();
        let got = leading_extract(&f, &[-1.0, 0.5], 1e-7, &RadiiSchedule::default()).unwrap();
        assert_eq!(got.terms().len(), 2);
        assert_abs_diff_eq!(got.terms()[0].0, -1.0, epsilon = 1e-12);
        assert!((got.terms()[0].1 - c(1.0, 0.0)).norm() < 1e-6);
        assert_abs_diff_eq!(got.terms()[1].0, 0.5, epsilon = 1e-12);
        assert!((got.terms()[1].1 - c(2.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn extract_zero_function() {
        let f = Sampler::new(1e-4, 0.5, |_: &LogPoint| c(0.0, 0.0)).unwrap();
        let got = leading_extract(&f, &[-1.0, 0.0, 1.0], 1e-8, &RadiiSchedule::default()).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn extract_sees_rotated_branch() {
        // g(z) = f(rotate(z, 2)) for f(z) = z^{1/2}: the full turn multiplies
        // the square root by e^{iπ}
        let f = Sampler::new(1e-4, 0.5, |z: &LogPoint| z.rotate(2).power(0.5)).unwrap();
        let got = leading_extract(&f, &[0.5], 1e-7, &RadiiSchedule::default()).unwrap();
        assert_eq!(got.terms().len(), 1);
        assert!((got.terms()[0].1 - c(-1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn extract_flags_off_lattice_content() {
        let f = Sampler::new(1e-4, 0.5, |z: &LogPoint| z.power(-0.7)).unwrap();
        let err = leading_extract(&f, &[0.0, 1.0], 1e-7, &RadiiSchedule::default());
        assert!(
            matches!(err, Err(Error::NotExpandable(_))),
            "expected not-expandable, got {err:?}"
        );
    }

    #[test]
    fn residue_invariant_under_refined_schedule() {
        let f = Sampler::new(1e-6, 0.5, |z: &LogPoint| {
            3.0 * z.power(-1.0) + c(0.0, 1.0) * z.power(-0.25) + z.power(1.0)
        })
        .unwrap();
        let lattice = [-1.0, -0.25, 1.0];
        let coarse = RadiiSchedule::default();
        let fine = RadiiSchedule {
            steps: 12,
            ..RadiiSchedule::default()
        };
        let r1 = res_z(&leading_extract(&f, &lattice, 1e-7, &coarse).unwrap());
        let r2 = res_z(&leading_extract(&f, &lattice, 1e-7, &fine).unwrap());
        assert!((r1 - r2).norm() < 1e-8, "{r1} vs {r2}");
        assert!((r1 - c(3.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn support_classes() {
        let samples: Vec<(f64, Complex64)> = vec![
            (0.5, c(1.0, 0.0)),
            (1.5, c(0.2, 0.0)),
            (2.5, c(-0.3, 0.1)),
        ];
        assert_eq!(exponent_support(&samples, 1e-9, 8).unwrap(), vec![0.5]);

        let ints: Vec<(f64, Complex64)> =
            (0..5).map(|k| (k as f64, c(1.0, 0.0))).collect();
        assert_eq!(exponent_support(&ints, 1e-9, 8).unwrap(), vec![0.0]);

        assert!(exponent_support(&[], 1e-9, 8).unwrap().is_empty());

        // zero-coefficient samples do not create classes
        let ghost = vec![(0.3, c(0.0, 0.0)), (1.0, c(1.0, 0.0))];
        assert_eq!(exponent_support(&ghost, 1e-9, 8).unwrap(), vec![0.0]);
    }

    #[test]
    fn support_cap_exceeded() {
        let spread: Vec<(f64, Complex64)> =
            (0..10).map(|k| (k as f64 * 0.1, c(1.0, 0.0))).collect();
        assert!(matches!(
            exponent_support(&spread, 1e-3, 5),
            Err(Error::SupportNotFinite(_))
        ));
    }

    fn probe_set() -> Vec<(LogPoint, LogPoint)> {
        // z2 fixed at 0.9; v = (z1−z2)/z2 sweeps [0.05, 0.5]
        (0..40)
            .map(|k| {
                let v = 0.05 + 0.45 * k as f64 / 39.0;
                let z2 = 0.9;
                (lp(z2 * (1.0 + v)), lp(z2))
            })
            .collect()
    }

    #[test]
    fn fit_recovers_planted_two_term_expansion() {
        // Δ = 1; classes r = 0 (s = 1) and r = 0.5 (s = 0.5);
        // f1(v) = 1 + v, f2(v) = 2 − v
        let delta = 1.0;
        let f = PairSampler::new(|z1: &LogPoint, z2: &LogPoint| {
            let z3 = LogPoint::principal(z1.value() - z2.value()).unwrap();
            let v = z3.value() / z2.value();
            z3.power(1.0) * (1.0 + v)
                + z2.power(0.5) * z3.power(0.5) * (2.0 - v)
        });
        let fit =
            fit_product_expansion(&f, delta, &[0.0, 0.5], 4, &probe_set(), 1.0).unwrap();
        assert!(fit.residual < 1e-9, "residual {}", fit.residual);
        assert_eq!(fit.terms.len(), 2);
        let t0 = &fit.terms[0];
        assert_abs_diff_eq!(t0.r, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t0.s, 1.0, epsilon = 1e-12);
        assert!((t0.taylor[0] - c(1.0, 0.0)).norm() < 1e-7);
        assert!((t0.taylor[1] - c(1.0, 0.0)).norm() < 1e-6);
        let t1 = &fit.terms[1];
        assert_abs_diff_eq!(t1.r, 0.5, epsilon = 1e-12);
        assert!((t1.taylor[0] - c(2.0, 0.0)).norm() < 1e-7);
        assert!((t1.taylor[1] - c(-1.0, 0.0)).norm() < 1e-6);
        // r + s = Δ by construction
        for t in &fit.terms {
            assert_abs_diff_eq!(t.r + t.s, delta, epsilon = 1e-12);
        }
        // weight_base + min s = 1 + 0.5 → largest integer below is 1
        assert_eq!(fit.n_witness, 1);
    }

    #[test]
    fn fit_zero_correlator() {
        let f = PairSampler::new(|_: &LogPoint, _: &LogPoint| c(0.0, 0.0));
        let fit = fit_product_expansion(&f, 1.0, &[0.0], 3, &probe_set(), 0.0).unwrap();
        assert!(fit.terms.is_empty());
        assert_eq!(fit.residual, 0.0);
    }

    #[test]
    fn fit_anchors_integer_shifted_candidates() {
        // candidates 0 and 1 are the same class mod 1: the fit must anchor
        // them into one tower instead of producing a singular design
        let f = PairSampler::new(|z1: &LogPoint, z2: &LogPoint| {
            let z3 = LogPoint::principal(z1.value() - z2.value()).unwrap();
            z3.power(1.0) * (1.0 + 0.5 * (z3.value() / z2.value()))
        });
        let fit = fit_product_expansion(&f, 1.0, &[0.0, 1.0, 0.5], 4, &probe_set(), 1.0).unwrap();
        assert!(fit.residual < 1e-9);
        // only the r=0 class survives pruning
        assert_eq!(fit.terms.len(), 1);
        assert_abs_diff_eq!(fit.terms[0].r, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_probes_outside_region() {
        let f = PairSampler::new(|_: &LogPoint, _: &LogPoint| c(1.0, 0.0));
        // |z1−z2| = 1.1 > |z2| = 0.9
        let bad = vec![(lp(2.0), lp(0.9)); 12];
        assert!(matches!(
            fit_product_expansion(&f, 1.0, &[0.0], 2, &bad, 0.0),
            Err(Error::OutsideIterateRegion(_))
        ));
    }

    #[test]
    fn fit_detects_degenerate_design() {
        let f = PairSampler::new(|z1: &LogPoint, z2: &LogPoint| {
            (z1.value() - z2.value()) / z2.value()
        });
        // all probes identical: columns cannot be distinguished
        let degenerate = vec![(lp(1.0), lp(0.9)); 20];
        assert!(matches!(
            fit_product_expansion(&f, 1.0, &[0.0, 0.5], 3, &degenerate, 0.0),
            Err(Error::FitUnreliable(_))
        ));
    }

    #[test]
    fn fit_serialization_schema() {
        let fit = ExpansionFit {
            terms: vec![FitTerm {
                r: 0.5,
                s: 0.5,
                taylor: vec![c(1.0, -2.0)],
            }],
            residual: 1e-12,
            delta: 1.0,
            n_witness: 1,
        };
        let v = serde_json::to_value(&fit).unwrap();
        assert_eq!(v["r"], serde_json::json!([0.5]));
        assert_eq!(v["s"], serde_json::json!([0.5]));
        assert_eq!(v["taylor"][0][0]["re"], serde_json::json!(1.0));
        assert_eq!(v["taylor"][0][0]["im"], serde_json::json!(-2.0));
        assert_eq!(v["delta"], serde_json::json!(1.0));
        assert_eq!(v["n_witness"], serde_json::json!(1));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        struct Plant {
            terms: Vec<(f64, Complex64)>,
        }

        fn plant_strategy() -> impl Strategy<Value = Plant> {
            // up to 6 terms, exponents from a base in [−2, −1] with gaps in
            // [0.25, 1.0], coefficient moduli in [0.1, 10]
            (
                1usize..=6,
                -2.0f64..-1.0,
                proptest::collection::vec((0.25f64..1.0, 0.1f64..10.0, 0.0f64..6.28), 6),
            )
                .prop_map(|(n, base, raw)| {
                    let mut m = base;
                    let mut terms = Vec::new();
                    for (gap, mag, phase) in raw.into_iter().take(n) {
                        terms.push((m, Complex64::from_polar(mag, phase)));
                        m += gap;
                    }
                    Plant { terms }
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn plant_and_recover(plant in plant_strategy()) {
                let series = RealExpSeries::new(plant.terms.clone()).unwrap();
                let f = Sampler::new(1e-6, 0.5, |z: &LogPoint| series.eval(z)).unwrap();
                let lattice: Vec<f64> = plant.terms.iter().map(|t| t.0).collect();
                let got = leading_extract(&f, &lattice, 1e-8, &RadiiSchedule::default()).unwrap();
                prop_assert_eq!(got.terms().len(), plant.terms.len());
                for (g, p) in got.terms().iter().zip(&plant.terms) {
                    prop_assert!((g.0 - p.0).abs() < 1e-12);
                    prop_assert!(
                        (g.1 - p.1).norm() < 1e-6,
                        "coefficient at {} off by {}", p.0, (g.1 - p.1).norm()
                    );
                }
            }
        }
    }
}
