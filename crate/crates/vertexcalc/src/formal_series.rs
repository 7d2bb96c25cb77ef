//! Arithmetic for multivariable formal series with complex coefficients and
//! real exponents: generalized binomial expansion, products with exactness
//! windows, coefficient extraction, and formal residues.
//!
//! Every series carries a per-variable window declaring where its stored
//! coefficients are exact and complete; outside the window, coefficients are
//! untracked. Window bookkeeping under multiplication guarantees that stored
//! coefficients are never truncation-polluted.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Fixed-point scale used to quantize exponents for exact map keys.
///
/// Resolution 2^-40 ≈ 9.1e-13, finer than the 1e-12 exponent-matching
/// tolerance, so distinct exponents closer than the tolerance collapse to the
/// same key and exponent arithmetic (addition under products) is exact.
pub const EXP_SCALE: f64 = (1u64 << 40) as f64;

/// Coefficients with modulus below this are pruned after arithmetic.
pub const PRUNE_EPS: f64 = 1e-15;

const WINDOW_TOL: f64 = 1e-9;
const INF_SENTINEL: f64 = 1e308;

/// Quantize a real exponent to its exact integer key.
pub fn quantize_exp(e: f64) -> i64 {
    (e * EXP_SCALE).round() as i64
}

/// Recover the real exponent from a quantized key (exact for |e| < 2^13).
pub fn exp_value(k: i64) -> f64 {
    k as f64 / EXP_SCALE
}

/// Generalized binomial coefficient m(m−1)⋯(m−l+1)/l!, defined for any real m.
pub fn binomial_coeff(m: f64, l: u64) -> f64 {
    let mut out = 1.0;
    for j in 0..l {
        out *= (m - j as f64) / (j as f64 + 1.0);
    }
    out
}

/// Integer power of a complex number by repeated multiplication (exact
/// phase handling for the ±1 coefficients that dominate this crate).
pub fn cpowi(base: Complex64, n: i64) -> Complex64 {
    let mut out = Complex64::new(1.0, 0.0);
    let (mut b, mut e) = if n >= 0 {
        (base, n as u64)
    } else {
        (1.0 / base, (-n) as u64)
    };
    while e > 0 {
        if e & 1 == 1 {
            out *= b;
        }
        b *= b;
        e >>= 1;
    }
    out
}

/// base^e: exact integer powers when e is (within 1e-9 of) an integer,
/// otherwise the principal power.
pub fn cpow(base: Complex64, e: f64) -> Complex64 {
    if (e - e.round()).abs() < 1e-9 && e.abs() < 4.0e9 {
        cpowi(base, e.round() as i64)
    } else {
        base.powf(e)
    }
}

/// Closed interval of tracked exponents for one variable; ±∞ allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    /// Window [lo, hi]; panics if lo > hi or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(!lo.is_nan() && !hi.is_nan(), "window bound is NaN");
        assert!(lo <= hi, "window lo > hi");
        assert!(lo < f64::INFINITY && hi > f64::NEG_INFINITY, "empty window");
        Window { lo, hi }
    }

    /// The all-exponents window (−∞, ∞): the series is exact everywhere.
    pub fn all() -> Self {
        Window {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// True when `e` lies inside the window (with a small matching slack).
    pub fn contains(&self, e: f64) -> bool {
        e >= self.lo - WINDOW_TOL && e <= self.hi + WINDOW_TOL
    }

    /// Intersection of two windows, or None when empty.
    pub fn intersect(&self, other: &Window) -> Option<Window> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(Window { lo, hi })
        } else {
            None
        }
    }

    /// Shift both bounds by `d` (monomial multiplication).
    pub fn shift(&self, d: f64) -> Window {
        Window {
            lo: self.lo + d,
            hi: self.hi + d,
        }
    }

    /// Window of the product of two series in this variable.
    ///
    /// The product coefficient at exponent e is exact iff every splitting
    /// e = α + β with α, β inside the source windows is tracked, which holds
    /// exactly for e ≤ min(hi1 + lo2, hi2 + lo1); the lower edge is the least
    /// representable exponent lo1 + lo2.
    pub fn product(&self, other: &Window) -> Window {
        let lo = sum_lo(self.lo, other.lo);
        let hi = sum_hi(self.hi, other.lo).min(sum_hi(other.hi, self.lo));
        if lo > hi {
            // Nothing exact: degenerate to a point window below all terms so
            // every stored term is pruned.
            Window { lo: hi, hi }
        } else {
            Window { lo, hi }
        }
    }

    fn ser(&self) -> [f64; 2] {
        [
            self.lo.max(-INF_SENTINEL).min(INF_SENTINEL),
            self.hi.max(-INF_SENTINEL).min(INF_SENTINEL),
        ]
    }

    fn de(raw: [f64; 2]) -> Window {
        let lo = if raw[0] <= -INF_SENTINEL {
            f64::NEG_INFINITY
        } else {
            raw[0]
        };
        let hi = if raw[1] >= INF_SENTINEL {
            f64::INFINITY
        } else {
            raw[1]
        };
        Window { lo, hi }
    }
}

fn sum_lo(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

/// hi + lo with the convention that an infinite hi makes the constraint
/// vacuous (+∞) regardless of lo, while a finite hi against an unbounded-below
/// lo leaves nothing exact (−∞).
fn sum_hi(hi: f64, lo: f64) -> f64 {
    if hi == f64::INFINITY {
        f64::INFINITY
    } else if lo == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        hi + lo
    }
}

/// One slot of a binomial a·u + b·v: either a formal variable or a fixed
/// nonzero number carrying its own logarithm branch.
#[derive(Debug, Clone)]
pub enum Slot {
    Var(String),
    Unit(crate::branch::LogPoint),
}

impl Slot {
    pub fn var(name: &str) -> Slot {
        Slot::Var(name.to_string())
    }
}

/// Which slot of a binomial is expanded in nonnegative powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRef {
    First,
    Second,
}

/// Expansion convention for a binomial: the subordinate slot receives
/// nonnegative integer powers, the dominant slot real powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionConvention {
    pub dominant: SlotRef,
    pub subordinate: SlotRef,
}

impl ExpansionConvention {
    /// Expand the second slot in nonnegative powers (the common convention).
    pub fn subordinate_second() -> Self {
        ExpansionConvention {
            dominant: SlotRef::First,
            subordinate: SlotRef::Second,
        }
    }

    /// Expand the first slot in nonnegative powers.
    pub fn subordinate_first() -> Self {
        ExpansionConvention {
            dominant: SlotRef::Second,
            subordinate: SlotRef::First,
        }
    }
}

/// Finite association of exponent tuples to complex coefficients over an
/// ordered variable alphabet, with a per-variable exactness window.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeries {
    vars: Vec<String>,
    windows: Vec<Window>,
    terms: BTreeMap<Vec<i64>, Complex64>,
}

impl CoeffSeries {
    /// Empty (zero) series over the given alphabet and windows.
    pub fn zero(vars: &[&str], windows: &[Window]) -> Self {
        assert_eq!(vars.len(), windows.len(), "one window per variable");
        CoeffSeries {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            windows: windows.to_vec(),
            terms: BTreeMap::new(),
        }
    }

    /// The unit series: coefficient 1 at exponent 0 in every variable.
    pub fn unit(vars: &[&str], windows: &[Window]) -> Self {
        let mut s = CoeffSeries::zero(vars, windows);
        let exps = vec![0.0; vars.len()];
        s.insert(&exps, Complex64::new(1.0, 0.0));
        s
    }

    /// Single-term series c·Πᵢ varᵢ^expᵢ with point windows at the exponents.
    pub fn monomial(vars: &[&str], exps: &[f64], c: Complex64) -> Self {
        let windows: Vec<Window> = exps.iter().map(|&e| Window::new(e, e)).collect();
        let mut s = CoeffSeries::zero(vars, &windows);
        s.insert(exps, c);
        s
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn window_of(&self, var: &str) -> Option<&Window> {
        self.vars.iter().position(|v| v == var).map(|i| &self.windows[i])
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Add `c` to the coefficient at `exps`. Terms outside the window are
    /// dropped (they are untracked by contract); near-zero results are pruned.
    pub fn insert(&mut self, exps: &[f64], c: Complex64) {
        assert_eq!(exps.len(), self.vars.len(), "exponent arity mismatch");
        for (e, w) in exps.iter().zip(&self.windows) {
            assert!(e.is_finite(), "exponents must be finite");
            if !w.contains(*e) {
                return;
            }
        }
        let key: Vec<i64> = exps.iter().map(|&e| quantize_exp(e)).collect();
        let entry = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() < PRUNE_EPS {
            let key: Vec<i64> = exps.iter().map(|&e| quantize_exp(e)).collect();
            self.terms.remove(&key);
        }
    }

    /// Iterate stored terms as (real exponent tuple, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (Vec<f64>, Complex64)> + '_ {
        self.terms
            .iter()
            .map(|(k, &c)| (k.iter().map(|&q| exp_value(q)).collect(), c))
    }

    /// Stored coefficient at `exps`, or 0 inside the window; querying outside
    /// the window is an error because the coefficient there is untracked.
    pub fn coeff(&self, exps: &[f64]) -> Result<Complex64> {
        if exps.len() != self.vars.len() {
            return Err(Error::AlphabetMismatch(format!(
                "expected {} exponents, got {}",
                self.vars.len(),
                exps.len()
            )));
        }
        for ((e, w), v) in exps.iter().zip(&self.windows).zip(&self.vars) {
            if !w.contains(*e) {
                return Err(Error::UntrackedExponent(format!(
                    "{v}^{e} outside window [{}, {}]",
                    w.lo, w.hi
                )));
            }
        }
        let key: Vec<i64> = exps.iter().map(|&e| quantize_exp(e)).collect();
        Ok(self.terms.get(&key).copied().unwrap_or(Complex64::new(0.0, 0.0)))
    }

    /// Multiply by the scalar c.
    pub fn scale(&self, c: Complex64) -> CoeffSeries {
        let mut out = CoeffSeries {
            vars: self.vars.clone(),
            windows: self.windows.clone(),
            terms: BTreeMap::new(),
        };
        if c.norm() == 0.0 {
            return out;
        }
        for (k, &v) in &self.terms {
            let w = v * c;
            if w.norm() >= PRUNE_EPS {
                out.terms.insert(k.clone(), w);
            }
        }
        out
    }

    /// Multiply by the monomial c·Πᵢ varᵢ^dᵢ, shifting windows exactly.
    pub fn mul_monomial(&self, d: &[f64], c: Complex64) -> CoeffSeries {
        assert_eq!(d.len(), self.vars.len());
        let dq: Vec<i64> = d.iter().map(|&e| quantize_exp(e)).collect();
        let windows = self
            .windows
            .iter()
            .zip(d)
            .map(|(w, &dd)| w.shift(dd))
            .collect();
        let mut terms = BTreeMap::new();
        for (k, &v) in &self.terms {
            let nk: Vec<i64> = k.iter().zip(&dq).map(|(a, b)| a + b).collect();
            let w = v * c;
            if w.norm() >= PRUNE_EPS {
                terms.insert(nk, w);
            }
        }
        CoeffSeries {
            vars: self.vars.clone(),
            windows,
            terms,
        }
    }

    /// Sum of two series over the same alphabet; windows intersect, and terms
    /// falling outside the intersection are dropped.
    pub fn add(&self, other: &CoeffSeries) -> Result<CoeffSeries> {
        self.check_alphabet(other)?;
        let windows: Vec<Window> = self
            .windows
            .iter()
            .zip(&other.windows)
            .map(|(a, b)| {
                a.intersect(b)
                    .unwrap_or(Window { lo: 0.0, hi: f64::NEG_INFINITY.max(-1.0) - 1.0 })
            })
            .collect();
        let mut out = CoeffSeries {
            vars: self.vars.clone(),
            windows,
            terms: BTreeMap::new(),
        };
        for src in [self, other] {
            for (k, &v) in &src.terms {
                let exps: Vec<f64> = k.iter().map(|&q| exp_value(q)).collect();
                out.insert(&exps, v);
            }
        }
        Ok(out)
    }

    /// Convolution product. The result window per variable is
    /// [lo1+lo2, min(hi1+lo2, hi2+lo1)], the largest region where every
    /// contributing pair of source exponents is tracked in both factors, so
    /// every stored result coefficient is exact.
    pub fn mul(&self, other: &CoeffSeries) -> Result<CoeffSeries> {
        self.check_alphabet(other)?;
        let windows: Vec<Window> = self
            .windows
            .iter()
            .zip(&other.windows)
            .map(|(a, b)| a.product(b))
            .collect();
        let mut out = CoeffSeries {
            vars: self.vars.clone(),
            windows,
            terms: BTreeMap::new(),
        };
        for (ka, &va) in &self.terms {
            for (kb, &vb) in &other.terms {
                let k: Vec<f64> = ka
                    .iter()
                    .zip(kb)
                    .map(|(a, b)| exp_value(a + b))
                    .collect();
                out.insert(&k, va * vb);
            }
        }
        Ok(out)
    }

    /// The formal residue in `var`: the sub-series of terms with var-exponent
    /// exactly −1, with `var` removed from the alphabet. Errors when the
    /// window does not track exponent −1.
    pub fn res(&self, var: &str) -> Result<CoeffSeries> {
        let i = self
            .vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| Error::AlphabetMismatch(format!("no variable {var}")))?;
        if !self.windows[i].contains(-1.0) {
            return Err(Error::UntrackedExponent(format!(
                "{var}^-1 outside window [{}, {}]",
                self.windows[i].lo, self.windows[i].hi
            )));
        }
        let target = quantize_exp(-1.0);
        let vars: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        let windows: Vec<Window> = self
            .windows
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, w)| *w)
            .collect();
        let mut terms = BTreeMap::new();
        for (k, &v) in &self.terms {
            if k[i] == target {
                let nk: Vec<i64> = k
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, &q)| q)
                    .collect();
                terms.insert(nk, v);
            }
        }
        Ok(CoeffSeries {
            vars: vars.clone(),
            windows,
            terms,
        })
    }

    /// Restrict to the sub-series with var-exponent exactly `e`, deleting the
    /// variable (generalizes `res`, which is the slice at −1).
    pub fn slice_at(&self, var: &str, e: f64) -> Result<CoeffSeries> {
        let i = self
            .vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| Error::AlphabetMismatch(format!("no variable {var}")))?;
        if !self.windows[i].contains(e) {
            return Err(Error::UntrackedExponent(format!(
                "{var}^{e} outside window [{}, {}]",
                self.windows[i].lo, self.windows[i].hi
            )));
        }
        let target = quantize_exp(e);
        let vars: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        let windows: Vec<Window> = self
            .windows
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, w)| *w)
            .collect();
        let mut terms = BTreeMap::new();
        for (k, &v) in &self.terms {
            if k[i] == target {
                let nk: Vec<i64> = k
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, &q)| q)
                    .collect();
                terms.insert(nk, v);
            }
        }
        Ok(CoeffSeries {
            vars,
            windows,
            terms,
        })
    }

    fn check_alphabet(&self, other: &CoeffSeries) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::AlphabetMismatch(format!(
                "{:?} vs {:?}",
                self.vars, other.vars
            )));
        }
        Ok(())
    }
}

impl fmt::Display for CoeffSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (v, e) in self.vars.iter().zip(&exps) {
                if *e != 0.0 {
                    write!(f, "·{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl Serialize for CoeffSeries {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term {
            exp: BTreeMap<String, f64>,
            re: f64,
            im: f64,
        }
        #[derive(Serialize)]
        struct Repr {
            vars: Vec<String>,
            window: BTreeMap<String, [f64; 2]>,
            terms: Vec<Term>,
        }
        let window = self
            .vars
            .iter()
            .zip(&self.windows)
            .map(|(v, w)| (v.clone(), w.ser()))
            .collect();
        let terms = self
            .terms()
            .map(|(exps, c)| Term {
                exp: self
                    .vars
                    .iter()
                    .zip(&exps)
                    .map(|(v, &e)| (v.clone(), e))
                    .collect(),
                re: c.re,
                im: c.im,
            })
            .collect();
        Repr {
            vars: self.vars.clone(),
            window,
            terms,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for CoeffSeries {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Term {
            exp: BTreeMap<String, f64>,
            re: f64,
            im: f64,
        }
        #[derive(Deserialize)]
        struct Repr {
            vars: Vec<String>,
            window: BTreeMap<String, [f64; 2]>,
            terms: Vec<Term>,
        }
        let raw = Repr::deserialize(de)?;
        let mut windows = Vec::new();
        for v in &raw.vars {
            let w = raw
                .window
                .get(v)
                .ok_or_else(|| D::Error::custom(format!("missing window for {v}")))?;
            windows.push(Window::de(*w));
        }
        let mut out = CoeffSeries {
            vars: raw.vars.clone(),
            windows,
            terms: BTreeMap::new(),
        };
        for t in &raw.terms {
            let mut exps = Vec::new();
            for v in &raw.vars {
                exps.push(*t.exp.get(v).unwrap_or(&0.0));
            }
            out.insert(&exps, Complex64::new(t.re, t.im));
        }
        Ok(out)
    }
}

/// Expand (a·u + b·v)^r by the generalized binomial series, with the
/// convention's subordinate slot receiving nonnegative integer powers:
/// Σ_{l≥0} C(r,l) (a·u)^{r−l} (b·v)^l when the subordinate is the second slot.
///
/// Each `Slot::Var` must appear in `windows` (which also bounds the number of
/// terms); `Slot::Unit` factors are evaluated through their own logarithm
/// branch, while the plain complex coefficients a, b use principal powers.
pub fn iota_expand(
    a: Complex64,
    u: &Slot,
    b: Complex64,
    v: &Slot,
    r: f64,
    conv: &ExpansionConvention,
    windows: &[(String, Window)],
) -> Result<CoeffSeries> {
    if conv.dominant == conv.subordinate {
        return Err(Error::InvalidInput(
            "expansion convention must have dominant ≠ subordinate".into(),
        ));
    }
    // Reorder so (dc·dom + sc·sub)^r expands with `sub` subordinate.
    let (dc, dom, sc, sub) = match conv.subordinate {
        SlotRef::Second => (a, u, b, v),
        SlotRef::First => (b, v, a, u),
    };
    if let (Slot::Var(x), Slot::Var(y)) = (dom, sub) {
        if x == y {
            return Err(Error::InvalidInput(format!(
                "both binomial slots name the same variable {x}"
            )));
        }
    }
    let lookup = |name: &str| -> Result<Window> {
        windows
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, w)| *w)
            .ok_or_else(|| Error::InvalidInput(format!("no window declared for variable {name}")))
    };

    // Range of the subordinate power l.
    let r_is_nonneg_int = r >= -1e-9 && (r - r.round()).abs() < 1e-9;
    let mut l_min: i64 = 0;
    let mut l_max: i64 = if r_is_nonneg_int {
        r.round() as i64
    } else {
        i64::MAX
    };
    if let Slot::Var(name) = sub {
        let w = lookup(name)?;
        if w.hi.is_finite() {
            l_max = l_max.min(w.hi.floor() as i64);
        }
        if w.lo > 0.0 {
            l_min = l_min.max(w.lo.ceil() as i64);
        }
    }
    if let Slot::Var(name) = dom {
        let w = lookup(name)?;
        // r − l ∈ [lo, hi]  ⇔  l ∈ [r − hi, r − lo]
        if w.lo.is_finite() {
            l_max = l_max.min((r - w.lo).floor() as i64);
        }
        if w.hi.is_finite() {
            l_min = l_min.max((r - w.hi).ceil() as i64);
        }
    }
    if l_max == i64::MAX {
        return Err(Error::InvalidInput(
            "expansion needs a finite window on the subordinate or dominant variable".into(),
        ));
    }

    // Output alphabet: the declared windows, in declaration order.
    let vars: Vec<&str> = windows.iter().map(|(n, _)| n.as_str()).collect();
    let wins: Vec<Window> = windows.iter().map(|(_, w)| *w).collect();
    let mut out = CoeffSeries::zero(&vars, &wins);

    for l in l_min..=l_max.max(l_min - 1) {
        if l > l_max {
            break;
        }
        let bc = binomial_coeff(r, l as u64);
        if bc == 0.0 {
            continue;
        }
        let mut c = Complex64::new(bc, 0.0);
        c *= cpow(dc, r - l as f64);
        c *= cpowi(sc, l);
        let mut exps = vec![0.0; vars.len()];
        match dom {
            Slot::Var(name) => {
                let i = vars.iter().position(|n| *n == name).unwrap();
                exps[i] += r - l as f64;
            }
            Slot::Unit(z) => c *= z.power(r - l as f64),
        }
        match sub {
            Slot::Var(name) => {
                let i = vars.iter().position(|n| *n == name).unwrap();
                exps[i] += l as f64;
            }
            Slot::Unit(z) => c *= z.power(l as f64),
        }
        out.insert(&exps, c);
    }
    Ok(out)
}
