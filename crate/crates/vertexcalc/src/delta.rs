//! Products of two-variable delta-function factors: both sides of the four
//! rearrangement identities as coefficient grids, their region-wise
//! coefficient series and closed forms, and a numerical verification harness
//! comparing partial sums against the closed forms cell by cell.
//!
//! Identity labels ("14.8" … "14.11") are the pinned external identifiers
//! used by the CLI `--id` flag; internally each label selects a fixed pair of
//! delta factors per side.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::branch::LogPoint;
use crate::error::{Error, Result};
use crate::formal_series::{
    binomial_coeff, iota_expand, CoeffSeries, ExpansionConvention, Slot, Window,
};

/// The four delta-product identities, named by their pinned CLI labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeltaIdentity {
    I14_8,
    I14_9,
    I14_10,
    I14_11,
}

impl DeltaIdentity {
    pub const ALL: [DeltaIdentity; 4] = [
        DeltaIdentity::I14_8,
        DeltaIdentity::I14_9,
        DeltaIdentity::I14_10,
        DeltaIdentity::I14_11,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            DeltaIdentity::I14_8 => "14.8",
            DeltaIdentity::I14_9 => "14.9",
            DeltaIdentity::I14_10 => "14.10",
            DeltaIdentity::I14_11 => "14.11",
        }
    }

    pub fn from_label(s: &str) -> Result<DeltaIdentity> {
        DeltaIdentity::ALL
            .iter()
            .copied()
            .find(|id| id.label() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown identity id {s}")))
    }
}

impl std::fmt::Display for DeltaIdentity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One side of an identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn tag(&self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

/// Formal variables appearing in delta factors. `Y` denotes the reciprocal of
/// the grid variable x0 (exponent r in x0 is exponent −r in y), and `Z3`
/// denotes the difference z1 − z2 treated as a single variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarToken {
    Y,
    X1,
    X2,
    Z1,
    Z2,
    Z3,
}

impl VarToken {
    pub fn name(&self) -> &'static str {
        match self {
            VarToken::Y => "y",
            VarToken::X1 => "x1",
            VarToken::X2 => "x2",
            VarToken::Z1 => "z1",
            VarToken::Z2 => "z2",
            VarToken::Z3 => "z3",
        }
    }
}

/// One delta factor X^{−1}·δ((D − S)/(±X)): prefactor slot X, dominant
/// numerator term D (real powers), subordinate term S (nonnegative powers),
/// and the sign carried by the denominator.
///
/// Expanded form: Σ_{n∈ℤ} sign^n Σ_{k≥0} C(n,k) D^{n−k} (−1)^k S^k X^{−n−1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaFactor {
    pub prefactor: VarToken,
    pub dominant: VarToken,
    pub subordinate: VarToken,
    pub sign: i8,
}

impl DeltaFactor {
    const fn new(prefactor: VarToken, dominant: VarToken, subordinate: VarToken, sign: i8) -> Self {
        DeltaFactor {
            prefactor,
            dominant,
            subordinate,
            sign,
        }
    }
}

use VarToken::*;

// The eight factor shapes appearing across the four identities.
const F_A: DeltaFactor = DeltaFactor::new(X1, Y, Z1, 1); // x1^{-1} δ((y−z1)/x1)
const F_B: DeltaFactor = DeltaFactor::new(X2, Y, Z2, 1); // x2^{-1} δ((y−z2)/x2)
const F_C: DeltaFactor = DeltaFactor::new(X1, X2, Z3, 1); // x1^{-1} δ((x2−z3)/x1)
const F_D: DeltaFactor = DeltaFactor::new(Z1, Y, X1, 1); // z1^{-1} δ((y−x1)/z1)
const F_E: DeltaFactor = DeltaFactor::new(Z2, Y, X2, 1); // z2^{-1} δ((y−x2)/z2)
const F_F: DeltaFactor = DeltaFactor::new(Z3, X2, X1, 1); // z3^{-1} δ((x2−x1)/z3)
const F_AM: DeltaFactor = DeltaFactor::new(X1, Z1, Y, -1); // x1^{-1} δ((z1−y)/(−x1))
const F_BM: DeltaFactor = DeltaFactor::new(X2, Z2, Y, -1); // x2^{-1} δ((z2−y)/(−x2))
const F_GM: DeltaFactor = DeltaFactor::new(X1, Z3, X2, -1); // x1^{-1} δ((z3−x2)/(−x1))

/// An ordered product of two delta factors, fixed by (identity, side).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaProductExpr {
    pub identity: DeltaIdentity,
    pub side: Side,
    pub factors: [DeltaFactor; 2],
}

impl DeltaProductExpr {
    /// Look up the factor pair for an identity side; the tag fully determines
    /// both factors.
    pub fn new(identity: DeltaIdentity, side: Side) -> DeltaProductExpr {
        let factors = match (identity, side) {
            (DeltaIdentity::I14_8, Side::Left) => [F_A, F_B],
            (DeltaIdentity::I14_8, Side::Right) => [F_B, F_C],
            (DeltaIdentity::I14_9, Side::Left) => [F_D, F_B],
            (DeltaIdentity::I14_9, Side::Right) => [F_E, F_F],
            (DeltaIdentity::I14_10, Side::Left) => [F_AM, F_BM],
            (DeltaIdentity::I14_10, Side::Right) => [F_BM, F_C],
            (DeltaIdentity::I14_11, Side::Left) => [F_AM, F_E],
            (DeltaIdentity::I14_11, Side::Right) => [F_E, F_GM],
        };
        DeltaProductExpr {
            identity,
            side,
            factors,
        }
    }

    /// The two z-type variables of this side: (z1, z2) on left sides,
    /// (z2, z3) on right sides.
    pub fn z_vars(&self) -> [VarToken; 2] {
        match self.side {
            Side::Left => [Z1, Z2],
            Side::Right => [Z2, Z3],
        }
    }
}

/// Compensated (Kahan) summation for complex values: keeps cancellation error
/// bounded when closed-form magnitudes reach ~1e8 at grid corners while the
/// tolerance sits at 1e−8.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    s: Complex64,
    c: Complex64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, v: Complex64) {
        let y = v - self.c;
        let t = self.s + y;
        self.c = (t - self.s) - y;
        self.s = t;
    }

    pub(crate) fn value(&self) -> Complex64 {
        self.s
    }
}

/// C(m, l) extended by C(m, l) = 0 for negative l.
fn binom_i(m: i64, l: i64) -> f64 {
    if l < 0 {
        0.0
    } else {
        binomial_coeff(m as f64, l as u64)
    }
}

/// (−1)^n for any integer n.
fn neg_one_pow(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn ipow(z: &LogPoint, n: i64) -> Complex64 {
    z.power(n as f64)
}

/// Partial sum of the (r,s,t) coefficient of one identity side, using that
/// side's own expansion variables: left sides are series in (z1, z2), right
/// sides in (z2, z3) with z3 = z1 − z2. Finite sums ignore `terms` beyond
/// their natural end.
pub(crate) fn side_cell_value(
    identity: DeltaIdentity,
    side: Side,
    r: i64,
    s: i64,
    t: i64,
    z1: &LogPoint,
    z2: &LogPoint,
    terms: usize,
) -> Result<Complex64> {
    let z3v = z1.value() - z2.value();
    let z3 = LogPoint::principal(z3v).map_err(|_| Error::Pole("z1 = z2".into()))?;
    let cap = terms as i64;
    let mut acc = KahanSum::default();
    match (identity, side) {
        (DeltaIdentity::I14_8, Side::Left) => {
            // finite: K = r−s−t−2; Σ_{k+l=K} C(−s−1,k) C(−t−1,l) (−1)^K z1^k z2^l
            let k_total = r - s - t - 2;
            if k_total >= 0 {
                let sgn = neg_one_pow(k_total);
                for k in 0..=k_total.min(cap) {
                    let l = k_total - k;
                    let c = binom_i(-s - 1, k) * binom_i(-t - 1, l) * sgn;
                    if c != 0.0 {
                        acc.add(c * ipow(z1, k) * ipow(z2, l));
                    }
                }
            }
        }
        (DeltaIdentity::I14_8, Side::Right) => {
            // finite: Σ_{lc=0..K} C(nb, kb) (−1)^{kb} z2^{kb} · C(−s−1, lc) (−1)^{lc} z3^{lc}
            // with nb = −s−t−2−lc, kb = K−lc
            let k_total = r - s - t - 2;
            if k_total >= 0 {
                for lc in 0..=k_total.min(cap) {
                    let nb = -s - t - 2 - lc;
                    let kb = k_total - lc;
                    let c = binom_i(nb, kb)
                        * neg_one_pow(kb)
                        * binom_i(-s - 1, lc)
                        * neg_one_pow(lc);
                    if c != 0.0 {
                        acc.add(c * ipow(z2, kb) * ipow(&z3, lc));
                    }
                }
            }
        }
        (DeltaIdentity::I14_9, Side::Left) => {
            // Σ_{l≥0} C(−t−1,l) (−1)^l C(r−t−2−l, s) z1^{r−t−2−l−s} z2^l
            if s >= 0 {
                for l in 0..=cap {
                    let c = binom_i(-t - 1, l) * neg_one_pow(l) * binom_i(r - t - 2 - l, s);
                    if c != 0.0 {
                        acc.add(c * ipow(z1, r - t - 2 - l - s) * ipow(z2, l));
                    }
                }
            }
        }
        (DeltaIdentity::I14_9, Side::Right) => {
            // Σ_{k≥0} C(r−1,k) C(k−t−1,s) z2^{r−1−k} z3^{k−t−1−s}
            if s >= 0 {
                for k in 0..=cap {
                    let c = binom_i(r - 1, k) * binom_i(k - t - 1, s);
                    if c != 0.0 {
                        acc.add(c * ipow(z2, r - 1 - k) * ipow(&z3, k - t - 1 - s));
                    }
                }
            }
        }
        (DeltaIdentity::I14_10, Side::Left) => {
            // finite: r ≤ 0 only; Σ_{k+l=−r} (−1)^{n1} C(n1,k) (−1)^k z1^{n1−k}
            //                               · (−1)^{n2} C(n2,l) (−1)^l z2^{n2−l}
            if r <= 0 {
                let (n1, n2) = (-s - 1, -t - 1);
                for k in 0..=(-r).min(cap) {
                    let l = -r - k;
                    let c = neg_one_pow(n1)
                        * binom_i(n1, k)
                        * neg_one_pow(k)
                        * neg_one_pow(n2)
                        * binom_i(n2, l)
                        * neg_one_pow(l);
                    if c != 0.0 {
                        acc.add(c * ipow(z1, n1 - k) * ipow(z2, n2 - l));
                    }
                }
            }
        }
        (DeltaIdentity::I14_10, Side::Right) => {
            // Σ_{lc≥0} (−1)^m C(m,l) (−1)^l z2^{m−l} · C(−s−1,lc) (−1)^{lc} z3^{lc}
            // with l = −r fixed, m = −s−t−2−lc
            if r <= 0 {
                let l = -r;
                for lc in 0..=cap {
                    let m = -s - t - 2 - lc;
                    let c = neg_one_pow(m)
                        * binom_i(m, l)
                        * neg_one_pow(l)
                        * binom_i(-s - 1, lc)
                        * neg_one_pow(lc);
                    if c != 0.0 {
                        acc.add(c * ipow(z2, m - l) * ipow(&z3, lc));
                    }
                }
            }
        }
        (DeltaIdentity::I14_11, Side::Left) => {
            // Σ_{k≥0} (−1)^n C(n,k) (−1)^k z1^{n−k} · C(m,t) (−1)^t z2^{−m−1}
            // with n = −s−1, m = −r+t−k
            if t >= 0 {
                let n = -s - 1;
                for k in 0..=cap {
                    let m = -r + t - k;
                    let c = neg_one_pow(n)
                        * binom_i(n, k)
                        * neg_one_pow(k)
                        * binom_i(m, t)
                        * neg_one_pow(t);
                    if c != 0.0 {
                        acc.add(c * ipow(z1, n - k) * ipow(z2, -m - 1));
                    }
                }
            }
        }
        (DeltaIdentity::I14_11, Side::Right) => {
            // finite: Σ_{le=0..t} C(m,le) (−1)^{le} z2^{−m−1}
            //                     · (−1)^{ng} C(ng,lg) (−1)^{lg} z3^{ng−lg}
            // with lg = t−le, m = le−r, ng = −s−1
            if t >= 0 {
                let ng = -s - 1;
                for le in 0..=t.min(cap) {
                    let lg = t - le;
                    let m = le - r;
                    let c = binom_i(m, le)
                        * neg_one_pow(le)
                        * neg_one_pow(ng)
                        * binom_i(ng, lg)
                        * neg_one_pow(lg);
                    if c != 0.0 {
                        acc.add(c * ipow(z2, -m - 1) * ipow(&z3, ng - lg));
                    }
                }
            }
        }
    }
    Ok(acc.value())
}

/// Closed-form (r,s,t) coefficient of the common rational function for one
/// identity: the value both sides' partial sums converge to.
pub(crate) fn identity_closed_value(
    identity: DeltaIdentity,
    r: i64,
    s: i64,
    t: i64,
    z1: &LogPoint,
    z2: &LogPoint,
) -> Result<Complex64> {
    let z3v = z1.value() - z2.value();
    let z3 = LogPoint::principal(z3v).map_err(|_| Error::Pole("z1 = z2".into()))?;
    match identity {
        // 14.8, 14.10, 14.11 have a finite side; the closed form is that side
        // summed to its natural end.
        DeltaIdentity::I14_8 => {
            side_cell_value(identity, Side::Left, r, s, t, z1, z2, usize::MAX / 2)
        }
        DeltaIdentity::I14_10 => {
            side_cell_value(identity, Side::Left, r, s, t, z1, z2, usize::MAX / 2)
        }
        DeltaIdentity::I14_11 => {
            side_cell_value(identity, Side::Right, r, s, t, z1, z2, usize::MAX / 2)
        }
        // 14.9: (1/s!) d^s/dz1^s [ (z1−z2)^{−t−1} z1^{r−1} ] by the Leibniz
        // rule; the 1/s! cancels against the falling factorials, leaving
        // Σ_j C(−t−1,j) C(r−1,s−j) z3^{−t−1−j} z1^{r−1−s+j}.
        DeltaIdentity::I14_9 => {
            if s < 0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let mut acc = KahanSum::default();
            for j in 0..=s {
                let c = binom_i(-t - 1, j) * binom_i(r - 1, s - j);
                if c != 0.0 {
                    acc.add(c * ipow(&z3, -t - 1 - j) * ipow(z1, r - 1 - s + j));
                }
            }
            Ok(acc.value())
        }
    }
}

/// Partial sum of the (r,s,t) coefficient series valid for |z1| > |z2| > 0:
/// (1/s!) d^s/dz1^s applied termwise to z1^{r−1} Σ_l C(−t−1,l)(−1)^l z1^{−t−1−l} z2^l.
pub fn coeff_series_product_region(
    r: i64,
    s: i64,
    t: i64,
    z1: &LogPoint,
    z2: &LogPoint,
    terms: usize,
) -> Result<Complex64> {
    if !(z1.modulus() > z2.modulus() && z2.modulus() > 0.0) {
        return Err(Error::WrongRegion(format!(
            "need |z1| > |z2| > 0, got |z1| = {}, |z2| = {}",
            z1.modulus(),
            z2.modulus()
        )));
    }
    side_cell_value(DeltaIdentity::I14_9, Side::Left, r, s, t, z1, z2, terms)
}

/// Partial sum of the (r,s,t) coefficient series valid for |z2| > |z1−z2| > 0:
/// (1/s!) d^s/dz1^s applied termwise to (z1−z2)^{−t−1} Σ_k C(r−1,k) z2^{r−1−k} (z1−z2)^k.
pub fn coeff_series_iterate_region(
    r: i64,
    s: i64,
    t: i64,
    z1: &LogPoint,
    z2: &LogPoint,
    terms: usize,
) -> Result<Complex64> {
    let d = (z1.value() - z2.value()).norm();
    if !(z2.modulus() > d && d > 0.0) {
        return Err(Error::WrongRegion(format!(
            "need |z2| > |z1−z2| > 0, got |z2| = {}, |z1−z2| = {}",
            z2.modulus(),
            d
        )));
    }
    side_cell_value(DeltaIdentity::I14_9, Side::Right, r, s, t, z1, z2, terms)
}

/// Closed form (1/s!) d^s/dz1^s [ (z1−z2)^{−t−1} z1^{r−1} ], the common limit
/// of both region expansions; pole inputs are rejected.
pub fn closed_form_coeff(
    r: i64,
    s: i64,
    t: i64,
    z1: &LogPoint,
    z2: &LogPoint,
) -> Result<Complex64> {
    if (z1.value() - z2.value()).norm() == 0.0 {
        return Err(Error::Pole("z1 = z2".into()));
    }
    identity_closed_value(DeltaIdentity::I14_9, r, s, t, z1, z2)
}

/// Expand one identity side as a five-variable coefficient series over
/// (x0, x1, x2) and the side's two z-variables ((z1, z2) on the left,
/// (z2, z3) on the right, z3 denoting z1 − z2).
///
/// Each delta factor is expanded by the generalized binomial series
/// ([`iota_expand`]) one numerator power at a time, then the two factor
/// series are convolved. Grid exponents of x0, x1, x2 are kept in
/// [−grid, grid]; z-variable exponent ranges are sized so that every stored
/// coefficient equals the true one, truncated only in each infinite z-sum's
/// own direction at depth `z_terms`.
pub fn expand_side(expr: &DeltaProductExpr, grid: i64, z_terms: i64) -> Result<CoeffSeries> {
    if grid < 0 || z_terms < 0 {
        return Err(Error::InvalidInput(
            "grid and z_terms must be nonnegative".into(),
        ));
    }
    let g = grid;
    let z = z_terms;
    let [za, zb] = expr.z_vars();

    // Target exponent windows for the product, per variable. x-variables are
    // the grid; the z-window table comes from the per-side cell formulas
    // (each side's z-exponents are affine in the cell indices and the
    // truncated sum index).
    let (za_win, zb_win) = match (expr.identity, expr.side) {
        (DeltaIdentity::I14_8, Side::Left) => (Window::new(0.0, z as f64), Window::new(0.0, z as f64)),
        (DeltaIdentity::I14_8, Side::Right) => (Window::new(0.0, z as f64), Window::new(0.0, z as f64)),
        (DeltaIdentity::I14_9, Side::Left) => (
            Window::new(-(3 * g + z + 2) as f64, (3 * g) as f64),
            Window::new(0.0, z as f64),
        ),
        (DeltaIdentity::I14_9, Side::Right) => (
            Window::new(-(g + z + 1) as f64, g as f64),
            Window::new(-(2 * g + 1) as f64, (z + 2 * g) as f64),
        ),
        (DeltaIdentity::I14_10, Side::Left) => (
            Window::new(-(2 * g + 1) as f64, g as f64),
            Window::new(-(2 * g + 1) as f64, g as f64),
        ),
        (DeltaIdentity::I14_10, Side::Right) => (
            Window::new(-(3 * g + z + 2) as f64, (3 * g) as f64),
            Window::new(0.0, z as f64),
        ),
        (DeltaIdentity::I14_11, Side::Left) => (
            Window::new(-(g + z + 1) as f64, g as f64),
            Window::new(-(2 * g + 1) as f64, (2 * g + z) as f64),
        ),
        (DeltaIdentity::I14_11, Side::Right) => (
            Window::new(-(2 * g + 1) as f64, g as f64),
            Window::new(-(2 * g + 1) as f64, g as f64),
        ),
    };

    // Internal alphabet: y (= x0^{-1}) plus the four visible variables.
    let vars = [Y, X1, X2, za, zb];
    let gw = Window::new(-g as f64, g as f64);
    // The one variable both factors share (y on left sides, x2 on right
    // sides) needs per-factor headroom beyond the grid target.
    let shared = match expr.side {
        Side::Left => Y,
        Side::Right => X2,
    };
    let w_shared = (2 * g + z + 4) as f64;

    let target_window = |v: VarToken| -> Window {
        if v == za {
            za_win
        } else if v == zb {
            zb_win
        } else {
            gw
        }
    };

    let factor_windows = |f: &DeltaFactor| -> Vec<(VarToken, Window)> {
        vars.iter()
            .map(|&v| {
                let w = if v == shared {
                    Window::new(-w_shared, w_shared)
                } else if v == f.prefactor || v == f.dominant || v == f.subordinate {
                    target_window(v)
                } else {
                    Window::all()
                };
                (v, w)
            })
            .collect()
    };

    let var_names: Vec<&str> = vars.iter().map(|v| v.name()).collect();
    let mut factor_series: Vec<CoeffSeries> = Vec::new();
    for f in &expr.factors {
        let fw = factor_windows(f);
        let windows: Vec<Window> = fw.iter().map(|(_, w)| *w).collect();
        let mut acc = CoeffSeries::zero(&var_names, &windows);
        let wof = |v: VarToken| fw.iter().find(|(t, _)| *t == v).unwrap().1;

        // n-range from the prefactor window: X-exponent is −n−1.
        let pw = wof(f.prefactor);
        let n_lo = (-pw.hi - 1.0).ceil() as i64;
        let n_hi = (-pw.lo - 1.0).floor() as i64;
        let dom_w = wof(f.dominant);
        let sub_w = wof(f.subordinate);
        let ia = vars.iter().position(|&v| v == f.dominant).unwrap();
        let ib = vars.iter().position(|&v| v == f.subordinate).unwrap();
        let ix = vars.iter().position(|&v| v == f.prefactor).unwrap();
        for n in n_lo..=n_hi {
            // (D − S)^n with S subordinate, bounded by the two slot windows
            let num = iota_expand(
                Complex64::new(1.0, 0.0),
                &Slot::var(f.dominant.name()),
                Complex64::new(-1.0, 0.0),
                &Slot::var(f.subordinate.name()),
                n as f64,
                &ExpansionConvention::subordinate_second(),
                &[
                    (f.dominant.name().to_string(), dom_w),
                    (f.subordinate.name().to_string(), sub_w),
                ],
            )?;
            let sgn = if f.sign >= 0 { 1.0 } else { neg_one_pow(n) };
            for (exps, c) in num.terms() {
                let mut full = vec![0.0; vars.len()];
                full[ia] += exps[0];
                full[ib] += exps[1];
                full[ix] += -(n as f64) - 1.0;
                acc.insert(&full, c * sgn);
            }
        }
        factor_series.push(acc);
    }

    // Convolve into the target windows directly: the per-factor windows were
    // sized so every pair contributing to a target cell is present, so stored
    // coefficients in the target are exact (z-truncation aside).
    let target: Vec<Window> = vars.iter().map(|&v| target_window(v)).collect();
    let mut product = CoeffSeries::zero(&var_names, &target);
    let f2_terms: Vec<(Vec<f64>, Complex64)> = factor_series[1].terms().collect();
    for (e1, c1) in factor_series[0].terms() {
        for (e2, c2) in &f2_terms {
            let exps: Vec<f64> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
            product.insert(&exps, c1 * *c2);
        }
    }

    // Map y back to x0 (exponent r in x0 ↔ −r in y).
    let out_names: Vec<&str> = ["x0", "x1", "x2", za.name(), zb.name()].to_vec();
    let mut out_windows = target.clone();
    out_windows[0] = Window::new(-target[0].hi, -target[0].lo);
    let mut out = CoeffSeries::zero(&out_names, &out_windows);
    for (exps, c) in product.terms() {
        let mut e = exps.clone();
        e[0] = -e[0];
        out.insert(&e, c);
    }
    Ok(out)
}

/// One cell of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct CellCheck {
    pub r: i64,
    pub s: i64,
    pub t: i64,
    pub side: Side,
    pub value_re: f64,
    pub value_im: f64,
    pub closed_re: f64,
    pub closed_im: f64,
    pub abs_err: f64,
    pub terms: usize,
    /// Scaled criterion: |value − closed| ≤ tol · max(1, |closed|).
    pub converged: bool,
    /// False when this side's convergence region is violated at (z1, z2); the
    /// cell is then not evaluated.
    pub region_ok: bool,
}

/// Verification report for one identity at one (z1, z2): every grid cell on
/// both sides against the closed form.
#[derive(Debug, Clone, Serialize)]
pub struct CoeffReport {
    pub identity: String,
    pub z1: LogPoint,
    pub z2: LogPoint,
    pub grid: i64,
    pub terms: usize,
    pub tol: f64,
    pub left_region_ok: bool,
    pub right_region_ok: bool,
    /// All cells on the evaluated side(s) converged.
    pub left_verified: bool,
    pub right_verified: bool,
    /// Both regions admissible and both sides fully converged.
    pub verified: bool,
    pub cells: Vec<CellCheck>,
}

/// Check one identity on the full (r,s,t) grid: each side's partial sums are
/// evaluated only in that side's own convergence region (left at
/// |z1| > |z2| > 0, right at |z2| > |z1−z2| > 0) and compared against the
/// closed form with the scaled criterion |err| ≤ tol·max(1, |closed|).
/// Region violations and convergence failures are reported, never thrown.
pub fn verify_identity(
    identity: DeltaIdentity,
    z1: &LogPoint,
    z2: &LogPoint,
    grid: i64,
    terms: usize,
    tol: f64,
) -> CoeffReport {
    let d = (z1.value() - z2.value()).norm();
    let left_region_ok = z1.modulus() > z2.modulus() && z2.modulus() > 0.0;
    let right_region_ok = z2.modulus() > d && d > 0.0;

    let mut cells_idx = Vec::new();
    for r in -grid..=grid {
        for s in -grid..=grid {
            for t in -grid..=grid {
                for side in [Side::Left, Side::Right] {
                    cells_idx.push((r, s, t, side));
                }
            }
        }
    }

    let cells: Vec<CellCheck> = cells_idx
        .par_iter()
        .map(|&(r, s, t, side)| {
            let region_ok = match side {
                Side::Left => left_region_ok,
                Side::Right => right_region_ok,
            };
            let closed = identity_closed_value(identity, r, s, t, z1, z2)
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            if !region_ok {
                return CellCheck {
                    r,
                    s,
                    t,
                    side,
                    value_re: f64::NAN,
                    value_im: f64::NAN,
                    closed_re: closed.re,
                    closed_im: closed.im,
                    abs_err: f64::NAN,
                    terms: 0,
                    converged: false,
                    region_ok: false,
                };
            }
            let value = side_cell_value(identity, side, r, s, t, z1, z2, terms)
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            let abs_err = (value - closed).norm();
            let converged = abs_err.is_finite() && abs_err <= tol * closed.norm().max(1.0);
            CellCheck {
                r,
                s,
                t,
                side,
                value_re: value.re,
                value_im: value.im,
                closed_re: closed.re,
                closed_im: closed.im,
                abs_err,
                terms,
                converged,
                region_ok: true,
            }
        })
        .collect();

    let side_verified = |side: Side, region_ok: bool| {
        region_ok
            && cells
                .iter()
                .filter(|c| c.side == side)
                .all(|c| c.converged)
    };
    let left_verified = side_verified(Side::Left, left_region_ok);
    let right_verified = side_verified(Side::Right, right_region_ok);
    CoeffReport {
        identity: identity.label().to_string(),
        z1: *z1,
        z2: *z2,
        grid,
        terms,
        tol,
        left_region_ok,
        right_region_ok,
        left_verified,
        right_verified,
        verified: left_verified && right_verified,
        cells,
    }
}
