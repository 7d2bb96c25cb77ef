//! The normal-ordered exponential realization of momentum-shifting
//! intertwining operators on free-boson Fock spaces, organized as a formal
//! series in the insertion variable, plus the skew transforms Ω_{−1}/Ω_0
//! built from e^{xL(−1)} and a half-turn rotation.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::branch::LogPoint;
use crate::error::{Error, Result};
use crate::formal_series::{binomial_coeff, exp_value, quantize_exp};

use super::basis::{DualVector, FockVector, MOMENTUM_TOL};
use super::modes::{apply_annihilation, apply_creation, exp_virasoro};

/// A finite formal series Σ_e x^e · v_e with Fock-vector coefficients, all
/// at one momentum. Exponent keys are quantized reals: integer ladders on
/// top of one momentum-pairing offset.
#[derive(Debug, Clone)]
pub struct XSeries {
    pub momentum: f64,
    terms: BTreeMap<i64, FockVector>,
}

impl XSeries {
    pub fn zero(momentum: f64) -> XSeries {
        XSeries {
            momentum,
            terms: BTreeMap::new(),
        }
    }

    pub fn single(exp: f64, v: FockVector) -> XSeries {
        let momentum = v.momentum;
        let mut terms = BTreeMap::new();
        if !v.is_zero() {
            terms.insert(quantize_exp(exp), v);
        }
        XSeries { momentum, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_exponents(&self) -> usize {
        self.terms.len()
    }

    pub fn add_at(&mut self, key: i64, v: &FockVector, scale: Complex64) {
        if v.is_zero() || scale == Complex64::new(0.0, 0.0) {
            return;
        }
        let slot = self
            .terms
            .entry(key)
            .or_insert_with(|| FockVector::zero(v.momentum));
        slot.add_scaled(v, scale);
    }

    pub fn merge(&mut self, other: &XSeries) {
        for (k, v) in &other.terms {
            self.add_at(*k, v, Complex64::new(1.0, 0.0));
        }
    }

    /// Shift every exponent by a real offset.
    pub fn shift(&mut self, delta: f64) {
        let moved: Vec<(i64, FockVector)> = std::mem::take(&mut self.terms)
            .into_iter()
            .map(|(k, v)| (quantize_exp(exp_value(k) + delta), v))
            .collect();
        for (k, v) in moved {
            let slot = self
                .terms
                .entry(k)
                .or_insert_with(|| FockVector::zero(v.momentum));
            slot.add_scaled(&v, Complex64::new(1.0, 0.0));
        }
    }

    pub fn drop_empty(&mut self) {
        for v in self.terms.values_mut() {
            v.prune();
        }
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn exponents(&self) -> impl Iterator<Item = (f64, &FockVector)> {
        self.terms.iter().map(|(k, v)| (exp_value(*k), v))
    }

    /// Evaluate the series at a branch-tracked point.
    pub fn eval(&self, x: &LogPoint) -> FockVector {
        let mut out = FockVector::zero(self.momentum);
        for (k, v) in &self.terms {
            out.add_scaled(v, x.power(exp_value(*k)));
        }
        out.prune();
        out
    }
}

/// Map `op` over every Fock-vector coefficient, shifting exponents by
/// `exp_shift` and scaling.
fn mode_map(
    xs: &XSeries,
    exp_shift: i64,
    scale: Complex64,
    momentum: f64,
    op: impl Fn(&FockVector) -> FockVector,
) -> XSeries {
    let mut out = XSeries::zero(momentum);
    for (k, v) in &xs.terms {
        let w = op(v);
        if !w.is_zero() {
            out.add_at(quantize_exp(exp_value(*k) + exp_shift as f64), &w, scale);
        }
    }
    out
}

/// One application of the annihilation-side exponent operator
/// T = Σ_{n≥1} (−p/n) x^{−n} a_n.
fn op_t(xs: &XSeries, p: f64, level: usize) -> XSeries {
    let mut out = XSeries::zero(xs.momentum);
    for n in 1..=level as u32 {
        let contrib = mode_map(
            xs,
            -(n as i64),
            Complex64::new(-p / n as f64, 0.0),
            xs.momentum,
            |v| apply_annihilation(n, v),
        );
        out.merge(&contrib);
    }
    out
}

/// One application of the creation-side exponent operator
/// S = Σ_{n≥1} (p/n) x^n a_{−n}.
fn op_s(xs: &XSeries, p: f64, level: usize) -> XSeries {
    let mut out = XSeries::zero(xs.momentum);
    for n in 1..=level as u32 {
        let contrib = mode_map(
            xs,
            n as i64,
            Complex64::new(p / n as f64, 0.0),
            xs.momentum,
            |v| {
                let mut w = apply_creation(n, v);
                w.truncate(level);
                w
            },
        );
        out.merge(&contrib);
    }
    out
}

/// exp of a nilpotent-by-truncation operator: acc = Σ_j op^j/j!.
fn exp_apply(xs: &XSeries, p: f64, level: usize, creation_side: bool) -> XSeries {
    let mut acc = xs.clone();
    let mut cur = xs.clone();
    let mut j = 1.0;
    loop {
        let mut next = if creation_side {
            op_s(&cur, p, level)
        } else {
            op_t(&cur, p, level)
        };
        next = mode_map(
            &next,
            0,
            Complex64::new(1.0 / j, 0.0),
            next.momentum,
            |v| v.clone(),
        );
        next.drop_empty();
        if next.is_zero() {
            break;
        }
        acc.merge(&next);
        cur = next;
        j += 1.0;
    }
    acc.drop_empty();
    acc
}

/// The annihilation half A⁺_m = Σ_{n≥0} C(−n−1, m−1) x^{−n−m} a_n of a
/// normal-ordered field factor; the n = 0 term reads the pre-shift momentum
/// `q` of the target.
fn field_plus(xs: &XSeries, m: u32, q: f64, level: usize) -> XSeries {
    let mut out = XSeries::zero(xs.momentum);
    let c0 = binomial_coeff(-1.0, (m - 1) as u64) * q;
    let zero_term = mode_map(
        xs,
        -(m as i64),
        Complex64::new(c0, 0.0),
        xs.momentum,
        |v| v.clone(),
    );
    out.merge(&zero_term);
    for n in 1..=level as u32 {
        let cn = binomial_coeff(-(n as f64) - 1.0, (m - 1) as u64);
        let contrib = mode_map(
            xs,
            -(n as i64) - m as i64,
            Complex64::new(cn, 0.0),
            xs.momentum,
            |v| apply_annihilation(n, v),
        );
        out.merge(&contrib);
    }
    out
}

/// The creation half A⁻_m = Σ_{n≥1} C(n−1, m−1) x^{n−m} a_{−n}.
fn field_minus(xs: &XSeries, m: u32, level: usize) -> XSeries {
    let mut out = XSeries::zero(xs.momentum);
    for n in 1..=level as u32 {
        let cn = binomial_coeff(n as f64 - 1.0, (m - 1) as u64);
        if cn == 0.0 {
            continue;
        }
        let contrib = mode_map(
            xs,
            n as i64 - m as i64,
            Complex64::new(cn, 0.0),
            xs.momentum,
            |v| {
                let mut w = apply_creation(n, v);
                w.truncate(level);
                w
            },
        );
        out.merge(&contrib);
    }
    out
}

/// The normal-ordered realization of Y(a_{−μ}|p_ins⟩, x) applied to a Fock
/// vector: annihilation exponential, then for every split of the field
/// occurrences into annihilation/creation halves the chosen A⁺ factors, the
/// momentum power x^{p_ins·q}, the remaining A⁻ factors, and finally the
/// creation exponential. Each field occurrence splits independently — the
/// halves sum, so the split branches per occurrence. Output momentum is
/// q + p_ins.
pub fn apply_vertex(
    field_parts: &[u32],
    p_ins: f64,
    target: &FockVector,
    level: usize,
) -> XSeries {
    let q = target.momentum;
    let mut base = target.clone();
    base.truncate(level);
    let start = XSeries::single(0.0, base);
    let after_t = exp_apply(&start, p_ins, level, false);

    let k = field_parts.len();
    let mut merged = XSeries::zero(q);
    for mask in 0u32..(1u32 << k) {
        let mut state = after_t.clone();
        for (i, &m) in field_parts.iter().enumerate() {
            if mask & (1 << i) != 0 {
                state = field_plus(&state, m, q, level);
            }
        }
        state.shift(p_ins * q);
        for (i, &m) in field_parts.iter().enumerate() {
            if mask & (1 << i) == 0 {
                state = field_minus(&state, m, level);
            }
        }
        merged.merge(&state);
    }

    let mut out = exp_apply(&merged, p_ins, level, true);
    out.momentum = q + p_ins;
    for v in out.terms.values_mut() {
        v.momentum = q + p_ins;
    }
    out.drop_empty();
    out
}

/// How an intertwiner's matrix coefficients are produced.
#[derive(Debug, Clone)]
pub enum Realization {
    /// Directly from the normal-ordered exponential pipeline.
    Plain,
    /// As Ω_variant of another intertwiner: Ω_{−1}(Y)(w, x)w′ =
    /// e^{xL(−1)} Y(w′, e^{−πi}x) w, and Ω_0 with e^{+πi}.
    Omega {
        inner: Box<Intertwiner>,
        variant: i8,
    },
}

/// A momentum-shifting intertwining operator between Fock modules: source
/// momenta (first slot p_a, second slot p_b), target p_a + p_b, truncation
/// level, and an optional half-turn rotation folded into its variable.
#[derive(Debug, Clone)]
pub struct Intertwiner {
    pub p_a: f64,
    pub p_b: f64,
    pub level: usize,
    pub rotation: i64,
    pub realization: Realization,
}

impl Intertwiner {
    pub fn plain(p_a: f64, p_b: f64, level: usize) -> Intertwiner {
        Intertwiner {
            p_a,
            p_b,
            level,
            rotation: 0,
            realization: Realization::Plain,
        }
    }

    pub fn rotated(p_a: f64, p_b: f64, level: usize, rotation: i64) -> Intertwiner {
        Intertwiner {
            rotation,
            ..Intertwiner::plain(p_a, p_b, level)
        }
    }

    pub fn target(&self) -> f64 {
        self.p_a + self.p_b
    }
}

/// The skew transform: swaps the source slots and composes matrix
/// coefficients per the defining formula; variant −1 rotates the inner
/// variable by a negative half turn, variant 0 by a positive one.
pub fn omega(y: &Intertwiner, variant: i8) -> Intertwiner {
    assert!(variant == -1 || variant == 0, "variant must be −1 or 0");
    Intertwiner {
        p_a: y.p_b,
        p_b: y.p_a,
        level: y.level,
        rotation: 0,
        realization: Realization::Omega {
            inner: Box::new(y.clone()),
            variant,
        },
    }
}

/// Numerically evaluated Y(w1, x) w2 at truncation `level`.
pub fn apply_intertwiner(
    y: &Intertwiner,
    w1: &FockVector,
    w2: &FockVector,
    x: &LogPoint,
    level: usize,
) -> Result<FockVector> {
    if (w1.momentum - y.p_a).abs() >= MOMENTUM_TOL {
        return Err(Error::InvalidInput(format!(
            "first-slot momentum {} does not match the operator's {}",
            w1.momentum, y.p_a
        )));
    }
    let x_eff = x.rotate(y.rotation);
    match &y.realization {
        Realization::Plain => {
            let mut out = FockVector::zero(y.target());
            for (parts, &c) in w1.components() {
                let xs = apply_vertex(parts, y.p_a, w2, level);
                out.add_scaled(&xs.eval(&x_eff), c);
            }
            out.prune();
            Ok(out)
        }
        Realization::Omega { inner, variant } => {
            let rot = if *variant == -1 { -1 } else { 1 };
            let u = apply_intertwiner(inner, w2, w1, &x_eff.rotate(rot), level)?;
            Ok(exp_virasoro(x_eff.value(), -1, &u, level))
        }
    }
}

/// ⟨wprime, Y(w1, x) w2⟩ with all x-powers branch-tracked. A momentum
/// mismatch between the target and wprime is exact zero, flagged false in
/// the second component.
pub fn intertwiner_matrix_coeff(
    y: &Intertwiner,
    wprime: &DualVector,
    w1: &FockVector,
    w2: &FockVector,
    x: &LogPoint,
    level: usize,
) -> Result<(Complex64, bool)> {
    let target = w1.momentum + w2.momentum;
    if (wprime.momentum() - target).abs() >= MOMENTUM_TOL {
        return Ok((Complex64::new(0.0, 0.0), false));
    }
    let out = apply_intertwiner(y, w1, w2, x, level)?;
    Ok((wprime.pair(&out), true))
}

/// The finite list of (x-exponent, coefficient) pairs of ⟨wprime, Y(w1, x)w2⟩
/// before evaluation, available for the plain realization.
pub fn matrix_coeff_series(
    y: &Intertwiner,
    wprime: &DualVector,
    w1: &FockVector,
    w2: &FockVector,
    level: usize,
) -> Result<Vec<(f64, Complex64)>> {
    if !matches!(y.realization, Realization::Plain) {
        return Err(Error::InvalidInput(
            "exponent listing requires the plain realization".into(),
        ));
    }
    if (w1.momentum - y.p_a).abs() >= MOMENTUM_TOL {
        return Err(Error::InvalidInput(format!(
            "first-slot momentum {} does not match the operator's {}",
            w1.momentum, y.p_a
        )));
    }
    let mut acc: BTreeMap<i64, Complex64> = BTreeMap::new();
    for (parts, &c) in w1.components() {
        let xs = apply_vertex(parts, y.p_a, w2, level);
        for (e, v) in xs.exponents() {
            let p = wprime.pair(v) * c;
            if p != Complex64::new(0.0, 0.0) {
                *acc.entry(quantize_exp(e)).or_insert(Complex64::new(0.0, 0.0)) += p;
            }
        }
    }
    Ok(acc
        .into_iter()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (exp_value(k), c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::basis::{partitions_up_to, weight, FockState};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lp(re: f64) -> LogPoint {
        LogPoint::principal(Complex64::new(re, 0.0)).unwrap()
    }

    #[test]
    fn lowest_normalization_is_one() {
        let y = Intertwiner::plain(1.0, 0.0, 8);
        let (val, conserved) = intertwiner_matrix_coeff(
            &y,
            &DualVector::lowest(1.0),
            &FockVector::lowest(1.0),
            &FockVector::lowest(0.0),
            &lp(1.0),
            8,
        )
        .unwrap();
        assert!(conserved);
        assert!((val - c(1.0, 0.0)).norm() < 1e-12, "got {val}");
    }

    #[test]
    fn momentum_pairing_power() {
        // lowest-to-lowest coefficient is x^{p_a·p_b}: at x = 2 with
        // p_a = p_b = 1 this is 2
        let y = Intertwiner::plain(1.0, 1.0, 8);
        let (val, _) = intertwiner_matrix_coeff(
            &y,
            &DualVector::lowest(2.0),
            &FockVector::lowest(1.0),
            &FockVector::lowest(1.0),
            &lp(2.0),
            8,
        )
        .unwrap();
        assert!((val - c(2.0, 0.0)).norm() < 1e-12, "got {val}");
    }

    #[test]
    fn momentum_mismatch_is_flagged_zero() {
        let y = Intertwiner::plain(1.0, 0.0, 6);
        let (val, conserved) = intertwiner_matrix_coeff(
            &y,
            &DualVector::lowest(2.0),
            &FockVector::lowest(1.0),
            &FockVector::lowest(0.0),
            &lp(1.0),
            6,
        )
        .unwrap();
        assert_eq!(val, c(0.0, 0.0));
        assert!(!conserved);
    }

    #[test]
    fn exponents_sit_at_weight_difference() {
        // the pairing is graded: the only surviving x-exponent of
        // ⟨w′, Y(w1,x)w2⟩ is wt w′ − wt w1 − wt w2
        let level = 8;
        let (pa, pb) = (0.5, 1.0);
        let y = Intertwiner::plain(pa, pb, level);
        let w1 = FockVector::state(pa, &[1], c(1.0, 0.0));
        let w2 = FockVector::state(pb, &[2], c(1.0, 0.0));
        let wt1 = weight(&FockState {
            momentum: pa,
            parts: vec![1],
        });
        let wt2 = weight(&FockState {
            momentum: pb,
            parts: vec![2],
        });
        for parts in partitions_up_to(4) {
            let wp = DualVector::state(pa + pb, &parts, c(1.0, 0.0));
            let wtp = weight(&FockState {
                momentum: pa + pb,
                parts: parts.clone(),
            });
            let series = matrix_coeff_series(&y, &wp, &w1, &w2, level).unwrap();
            for (e, _) in &series {
                assert!(
                    (e - (wtp - wt1 - wt2)).abs() < 1e-9,
                    "partition {parts:?}: exponent {e} vs {}",
                    wtp - wt1 - wt2
                );
            }
        }
    }

    #[test]
    fn l_minus1_derivative_property() {
        // d/dx ⟨w′, Y(w1,x)w2⟩ = ⟨w′, Y(L(−1)w1, x)w2⟩, probed by central
        // finite differences along the modulus
        use crate::heisenberg::modes::virasoro_apply;
        let level = 12;
        let (pa, pb) = (1.0, 1.0);
        let y = Intertwiner::plain(pa, pb, level);
        let w1 = FockVector::state(pa, &[1], c(1.0, 0.0));
        let w2 = FockVector::lowest(pb);
        let wp = DualVector::state(pa + pb, &[2, 1], c(1.0, 0.0));
        let x0 = 0.8f64;
        let h = 1e-4;
        let at = |x: f64| {
            intertwiner_matrix_coeff(&y, &wp, &w1, &w2, &lp(x), level)
                .unwrap()
                .0
        };
        let numeric = (at(x0 + h) - at(x0 - h)) / c(2.0 * h, 0.0);
        let dw1 = virasoro_apply(-1, &w1, level);
        let exact = intertwiner_matrix_coeff(&y, &wp, &dw1, &w2, &lp(x0), level)
            .unwrap()
            .0;
        assert!(
            (numeric - exact).norm() <= 1e-5 * exact.norm().max(1e-12),
            "numeric {numeric} vs insertion {exact}"
        );
    }

    #[test]
    fn omega_composition_restores_coefficients() {
        let level = 10;
        for &pa in &[0.0, 0.5, 1.0] {
            for &pb in &[0.0, 0.5, 1.0] {
                let y = Intertwiner::plain(pa, pb, level);
                let yy = omega(&omega(&y, -1), 0);
                let w1 = FockVector::state(pa, &[1], c(1.0, 0.0));
                let w2 = FockVector::lowest(pb);
                let x = lp(0.9);
                for parts in [vec![], vec![1], vec![2, 1]] {
                    let wp = DualVector::state(pa + pb, &parts, c(1.0, 0.0));
                    let a = intertwiner_matrix_coeff(&y, &wp, &w1, &w2, &x, level)
                        .unwrap()
                        .0;
                    let b = intertwiner_matrix_coeff(&yy, &wp, &w1, &w2, &x, level)
                        .unwrap()
                        .0;
                    assert!(
                        (a - b).norm() < 1e-10,
                        "(pa, pb) = ({pa}, {pb}), σ = {parts:?}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn omega_lowest_phase() {
        // lowest-to-lowest coefficient of Ω_{−1}(Y) differs from Y's by the
        // half-turn phase e^{−iπ·p_a p_b}
        let level = 10;
        let (pa, pb) = (0.5, 0.5);
        let y = Intertwiner::plain(pa, pb, level);
        let yo = omega(&y, -1);
        let x = lp(1.0);
        let wp = DualVector::lowest(pa + pb);
        let a = intertwiner_matrix_coeff(&y, &wp, &FockVector::lowest(pa), &FockVector::lowest(pb), &x, level)
            .unwrap()
            .0;
        let b = intertwiner_matrix_coeff(&yo, &wp, &FockVector::lowest(pb), &FockVector::lowest(pa), &x, level)
            .unwrap()
            .0;
        let phase = Complex64::from_polar(1.0, -std::f64::consts::PI * pa * pb);
        assert!((b - phase * a).norm() < 1e-12, "{b} vs {a} × {phase}");
    }

    #[test]
    fn vacuum_insertion_is_translation() {
        // Y(u, x)|0⟩ = e^{xL(−1)} u: matrix coefficients against any dual
        // agree
        use crate::heisenberg::modes::exp_virasoro;
        let level = 8;
        let u = FockVector::state(1.0, &[1], c(1.0, 0.0));
        let y = Intertwiner::plain(1.0, 0.0, level);
        let x = lp(0.7);
        let direct = apply_intertwiner(&y, &u, &FockVector::lowest(0.0), &x, level).unwrap();
        let translated = exp_virasoro(x.value(), -1, &u, level);
        for parts in partitions_up_to(4) {
            let wp = DualVector::state(1.0, &parts, c(1.0, 0.0));
            let a = wp.pair(&direct);
            let b = wp.pair(&translated);
            assert!((a - b).norm() < 1e-12, "σ = {parts:?}: {a} vs {b}");
        }
    }
}
