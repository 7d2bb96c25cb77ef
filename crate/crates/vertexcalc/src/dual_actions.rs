//! Actions on truncated functionals over a triple tensor product of Fock
//! modules. A functional assigns a complex value to each basis tuple
//! (μ, ν, ρ) up to a level cutoff. The two composite actions insert a
//! conjugated vertex operator into one tensor slot at a time and multiply
//! by the matching two-variable delta-kernel cells; slot by slot, the two
//! actions use the two expansion sides of the same rational kernels, so
//! their outputs agree cell-by-cell wherever both expansions converge.
//!
//! Everything here works with truncated shadows: insertions are cut at the
//! functional's level, values at deeper basis tuples read as zero, and the
//! reports state the cutoff they were computed at.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branch::{in_composition_region, LogPoint};
use crate::delta::{side_cell_value, DeltaIdentity, Side};
use crate::error::{Error, Result};
use crate::formal_series::Window;
use crate::heisenberg::{
    apply_vertex, iterate_correlator_depth, partitions_of, product_correlator_depth,
    virasoro_apply, DualVector, FockVector, Intertwiner, Partition, XSeries, MAX_ADAPTIVE_LEVEL,
    MOMENTUM_TOL,
};

/// Kernel-cell series depth used when no explicit count is given.
const DEFAULT_TERMS: usize = 400;
/// Hard cap on the number of cells one window box may request.
const CELL_CAP: usize = 200_000;
/// Minimum weight-sum depth for lazily evaluated correlator functionals;
/// the adaptive extension deepens past this until the tail is negligible.
const CORRELATOR_BASE_LEVEL: usize = 24;

/// One basis tuple of the triple tensor product: a partition per slot.
pub type BasisTriple = (Partition, Partition, Partition);

fn slot_id(parts: &[u32]) -> String {
    if parts.is_empty() {
        "-".to_string()
    } else {
        parts
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(".")
    }
}

/// Stable identifier of one basis tuple: parts joined by dots, slots by
/// semicolons, an empty slot written `-` (e.g. `2.1;-;1`).
pub fn triple_id(mu: &[u32], nu: &[u32], rho: &[u32]) -> String {
    format!("{};{};{}", slot_id(mu), slot_id(nu), slot_id(rho))
}

fn parse_slot(s: &str) -> Result<Partition> {
    if s == "-" {
        return Ok(Vec::new());
    }
    let mut parts = s
        .split('.')
        .map(|p| {
            p.parse::<u32>()
                .map_err(|_| Error::InvalidInput(format!("bad basis tuple part {p:?}")))
        })
        .collect::<Result<Vec<u32>>>()?;
    if parts.iter().any(|&p| p == 0) {
        return Err(Error::InvalidInput("partition parts must be positive".into()));
    }
    parts.sort_unstable_by(|a, b| b.cmp(a));
    Ok(parts)
}

/// Parse a `triple_id` string back into its three partitions.
pub fn parse_triple_id(s: &str) -> Result<BasisTriple> {
    let slots: Vec<&str> = s.split(';').collect();
    if slots.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "basis tuple id needs 3 slots, got {s:?}"
        )));
    }
    Ok((
        parse_slot(slots[0])?,
        parse_slot(slots[1])?,
        parse_slot(slots[2])?,
    ))
}

/// Total excitation of a basis tuple: the part sums of all three slots.
pub fn triple_total(t: &BasisTriple) -> usize {
    let sum = |p: &Partition| p.iter().map(|&x| x as usize).sum::<usize>();
    sum(&t.0) + sum(&t.1) + sum(&t.2)
}

/// Every basis tuple with total excitation ≤ `level`, ordered by total,
/// then slot levels, then partition order.
pub fn basis_triples(level: usize) -> Vec<BasisTriple> {
    let mut out = Vec::new();
    let l = level as u32;
    for total in 0..=l {
        for la in 0..=total {
            for lb in 0..=(total - la) {
                let lc = total - la - lb;
                for mu in &partitions_of(la) {
                    for nu in &partitions_of(lb) {
                        for rho in &partitions_of(lc) {
                            out.push((mu.clone(), nu.clone(), rho.clone()));
                        }
                    }
                }
            }
        }
    }
    out
}

/// A linear functional on the triple tensor product, truncated at a level:
/// values are defined for basis tuples of total excitation up to `level()`,
/// and anything deeper reads as zero.
pub trait Functional: Sync {
    fn level(&self) -> usize;
    fn momenta(&self) -> (f64, f64, f64);
    fn eval_triple(&self, mu: &[u32], nu: &[u32], rho: &[u32]) -> Result<Complex64>;
}

/// An explicit finite table of functional values keyed by basis tuples;
/// absent entries are zero by convention and `missing_entries` reports how
/// many basis tuples below the cutoff lack a stored value.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFunctional {
    pub level: usize,
    pub momenta: (f64, f64, f64),
    table: BTreeMap<BasisTriple, Complex64>,
}

impl TruncatedFunctional {
    pub fn new(level: usize, momenta: (f64, f64, f64)) -> TruncatedFunctional {
        TruncatedFunctional {
            level,
            momenta,
            table: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, mu: &[u32], nu: &[u32], rho: &[u32], value: Complex64) {
        self.table
            .insert((mu.to_vec(), nu.to_vec(), rho.to_vec()), value);
    }

    pub fn add(&mut self, triple: &BasisTriple, value: Complex64) {
        *self
            .table
            .entry(triple.clone())
            .or_insert_with(|| Complex64::new(0.0, 0.0)) += value;
    }

    pub fn value(&self, mu: &[u32], nu: &[u32], rho: &[u32]) -> Complex64 {
        self.table
            .get(&(mu.to_vec(), nu.to_vec(), rho.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BasisTriple, &Complex64)> {
        self.table.iter()
    }

    pub fn num_entries(&self) -> usize {
        self.table.len()
    }

    /// Basis tuples below the cutoff with no stored value (read as zero).
    pub fn missing_entries(&self) -> usize {
        basis_triples(self.level)
            .iter()
            .filter(|t| !self.table.contains_key(*t))
            .count()
    }

    pub fn max_abs(&self) -> f64 {
        self.table.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> TruncatedFunctional {
        let mut out = self.clone();
        for v in out.table.values_mut() {
            *v *= c;
        }
        out
    }

    pub fn add_scaled(&mut self, other: &TruncatedFunctional, c: Complex64) {
        for (k, v) in &other.table {
            self.add(k, *v * c);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidInput(format!("serialize failed: {e}")))
    }

    pub fn from_json(s: &str) -> Result<TruncatedFunctional> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("parse failed: {e}")))
    }
}

impl Functional for TruncatedFunctional {
    fn level(&self) -> usize {
        self.level
    }
    fn momenta(&self) -> (f64, f64, f64) {
        self.momenta
    }
    fn eval_triple(&self, mu: &[u32], nu: &[u32], rho: &[u32]) -> Result<Complex64> {
        Ok(self.value(mu, nu, rho))
    }
}

#[derive(Serialize, Deserialize)]
struct FunctionalJson {
    level: usize,
    momenta: (f64, f64, f64),
    entries: BTreeMap<String, (f64, f64)>,
}

impl From<&TruncatedFunctional> for FunctionalJson {
    fn from(tf: &TruncatedFunctional) -> FunctionalJson {
        FunctionalJson {
            level: tf.level,
            momenta: tf.momenta,
            entries: tf
                .table
                .iter()
                .map(|((m, n, r), v)| (triple_id(m, n, r), (v.re, v.im)))
                .collect(),
        }
    }
}

impl TryFrom<FunctionalJson> for TruncatedFunctional {
    type Error = Error;
    fn try_from(j: FunctionalJson) -> Result<TruncatedFunctional> {
        let mut out = TruncatedFunctional::new(j.level, j.momenta);
        for (key, (re, im)) in j.entries {
            let triple = parse_triple_id(&key)?;
            out.table.insert(triple, Complex64::new(re, im));
        }
        Ok(out)
    }
}

impl Serialize for TruncatedFunctional {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionalJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedFunctional {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FunctionalJson::deserialize(d)?;
        TruncatedFunctional::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Which bracketing realizes the correlator behind a lazy functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelatorKind {
    Product,
    Iterate,
}

/// A functional whose value at a basis tuple is the free-boson correlator
/// with the tuple's three states as operator arguments and a lowest-weight
/// dual vector on the outgoing module, computed on demand and memoized.
pub struct CorrelatorFunctional {
    level: usize,
    momenta: (f64, f64, f64),
    kind: CorrelatorKind,
    za: LogPoint,
    zb: LogPoint,
    tol: f64,
    cache: Mutex<HashMap<String, Complex64>>,
}

impl CorrelatorFunctional {
    /// ⟨w′, Y(w1, z1) Y(w2, z2) w3⟩ in the region |z1| > |z2| > 0.
    pub fn product(
        momenta: (f64, f64, f64),
        z1: &LogPoint,
        z2: &LogPoint,
        level: usize,
        tol: f64,
    ) -> Result<CorrelatorFunctional> {
        if !(z1.modulus() > z2.modulus() && z2.modulus() > 0.0) {
            return Err(Error::OutsideProductRegion(format!(
                "need |z1| > |z2| > 0, got |z1| = {}, |z2| = {}",
                z1.modulus(),
                z2.modulus()
            )));
        }
        Ok(CorrelatorFunctional {
            level,
            momenta,
            kind: CorrelatorKind::Product,
            za: z1.clone(),
            zb: z2.clone(),
            tol,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// ⟨w′, Y(Y(w1, z0) w2, z2) w3⟩ in the region |z2| > |z0| > 0.
    pub fn iterate(
        momenta: (f64, f64, f64),
        z0: &LogPoint,
        z2: &LogPoint,
        level: usize,
        tol: f64,
    ) -> Result<CorrelatorFunctional> {
        if !(z2.modulus() > z0.modulus() && z0.modulus() > 0.0) {
            return Err(Error::OutsideIterateRegion(format!(
                "need |z2| > |z0| > 0, got |z0| = {}, |z2| = {}",
                z0.modulus(),
                z2.modulus()
            )));
        }
        Ok(CorrelatorFunctional {
            level,
            momenta,
            kind: CorrelatorKind::Iterate,
            za: z0.clone(),
            zb: z2.clone(),
            tol,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn kind(&self) -> CorrelatorKind {
        self.kind
    }

    fn compute(&self, mu: &[u32], nu: &[u32], rho: &[u32]) -> Result<Complex64> {
        let (p1, p2, p3) = self.momenta;
        let one = Complex64::new(1.0, 0.0);
        let w1 = FockVector::state(p1, mu, one);
        let w2 = FockVector::state(p2, nu, one);
        let w3 = FockVector::state(p3, rho, one);
        let wp = DualVector::lowest(p1 + p2 + p3);
        let (value, report) = match self.kind {
            CorrelatorKind::Product => {
                let y2 = Intertwiner::plain(p2, p3, self.level);
                let y1 = Intertwiner::plain(p1, p2 + p3, self.level);
                product_correlator_depth(
                    &y1,
                    &y2,
                    &wp,
                    &w1,
                    &w2,
                    &w3,
                    &self.za,
                    &self.zb,
                    CORRELATOR_BASE_LEVEL,
                    Some(MAX_ADAPTIVE_LEVEL),
                    self.tol,
                )?
            }
            CorrelatorKind::Iterate => {
                let y3 = Intertwiner::plain(p1, p2, self.level);
                let y4 = Intertwiner::plain(p1 + p2, p3, self.level);
                iterate_correlator_depth(
                    &y4,
                    &y3,
                    &wp,
                    &w1,
                    &w2,
                    &w3,
                    &self.za,
                    &self.zb,
                    CORRELATOR_BASE_LEVEL,
                    Some(MAX_ADAPTIVE_LEVEL),
                    self.tol,
                )?
            }
        };
        // The adaptive extension either stopped on a run of negligible terms
        // or exhausted its cap; only the former establishes the accuracy the
        // functional promises.
        if !report.converged {
            return Err(Error::ConvergenceNotEstablished(
                report.levels_summed.saturating_sub(1),
            ));
        }
        Ok(value)
    }
}

impl Functional for CorrelatorFunctional {
    fn level(&self) -> usize {
        self.level
    }
    fn momenta(&self) -> (f64, f64, f64) {
        self.momenta
    }
    fn eval_triple(&self, mu: &[u32], nu: &[u32], rho: &[u32]) -> Result<Complex64> {
        let total: u32 = mu.iter().sum::<u32>() + nu.iter().sum::<u32>() + rho.iter().sum::<u32>();
        if total as usize > self.level {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let key = triple_id(mu, nu, rho);
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let value = self.compute(mu, nu, rho)?;
        self.cache.lock().unwrap().insert(key, value);
        Ok(value)
    }
}

/// A homogeneous vacuum-module vector together with its excitation level.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub vector: FockVector,
    pub level: u32,
}

impl AlgebraElement {
    pub fn new(vector: FockVector) -> Result<AlgebraElement> {
        if vector.momentum.abs() >= MOMENTUM_TOL {
            return Err(Error::InvalidInput(
                "algebra elements live in the momentum-zero module".into(),
            ));
        }
        let levels = vector.levels();
        let level = match levels.len() {
            0 => 0,
            1 => levels[0],
            _ => {
                return Err(Error::InvalidInput(format!(
                    "vector is not homogeneous: levels {levels:?}"
                )))
            }
        };
        Ok(AlgebraElement { vector, level })
    }

    /// The vacuum vector; its insertion acts as the identity.
    pub fn vacuum() -> AlgebraElement {
        AlgebraElement {
            vector: FockVector::lowest(0.0),
            level: 0,
        }
    }

    /// The conformal vector, whose insertion components are the Virasoro
    /// modes.
    pub fn omega() -> AlgebraElement {
        AlgebraElement {
            vector: FockVector::omega_vector(),
            level: 2,
        }
    }

    pub fn scale(&self, c: Complex64) -> AlgebraElement {
        AlgebraElement {
            vector: self.vector.scale(c),
            level: self.level,
        }
    }
}

/// Components of the inversion-conjugated element: the j-th piece is
/// (−1)^h · L(1)^j v / j! and carries reciprocal-variable exponent 2h − j.
fn conjugate_terms(v: &AlgebraElement) -> Vec<(i64, FockVector)> {
    let h = v.level as i64;
    let sign = if v.level % 2 == 0 { 1.0 } else { -1.0 };
    let mut cur = v.vector.scale(Complex64::new(sign, 0.0));
    cur.prune();
    let mut out = Vec::new();
    let mut j = 0i64;
    while !cur.is_zero() && j <= 2 * h {
        out.push((j, cur.clone()));
        j += 1;
        cur = virasoro_apply(1, &cur, v.level as usize)
            .scale(Complex64::new(1.0 / j as f64, 0.0));
        cur.prune();
    }
    out
}

/// A finite box of integer cells in the three grid exponents, each holding
/// a truncated functional: the windowed shadow of a formal series whose
/// coefficients are functionals.
#[derive(Debug, Clone)]
pub struct FunctionalSeries {
    pub level: usize,
    pub momenta: (f64, f64, f64),
    cells: BTreeMap<(i64, i64, i64), TruncatedFunctional>,
}

impl FunctionalSeries {
    pub fn cell(&self, r: i64, s: i64, t: i64) -> Option<&TruncatedFunctional> {
        self.cells.get(&(r, s, t))
    }

    pub fn cell_value(&self, r: i64, s: i64, t: i64, mu: &[u32], nu: &[u32], rho: &[u32]) -> Complex64 {
        self.cells
            .get(&(r, s, t))
            .map(|tf| tf.value(mu, nu, rho))
            .unwrap_or_default()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&(i64, i64, i64), &TruncatedFunctional)> {
        self.cells.iter()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.cells.values().map(|tf| tf.max_abs()).fold(0.0, f64::max)
    }
}

/// The slot kernels, in tensor-slot order: the first slot's insertion pairs
/// with the 14.9 kernel, the second with 14.11, the third with 14.10.
const SLOT_KERNELS: [DeltaIdentity; 3] = [
    DeltaIdentity::I14_9,
    DeltaIdentity::I14_11,
    DeltaIdentity::I14_10,
];

/// Cheap support gates mirroring the kernel formulas' own early-outs, so
/// hopeless cells skip the series evaluation entirely.
fn kernel_supported(slot: usize, r: i64, s: i64, t: i64) -> bool {
    match slot {
        0 => s >= 0,
        1 => t >= 0,
        _ => r <= 0,
    }
}

fn kernel_cell(
    cache: &mut HashMap<(usize, i64, i64, i64), Complex64>,
    side: Side,
    slot: usize,
    r: i64,
    s: i64,
    t: i64,
    z1: &LogPoint,
    z2: &LogPoint,
    terms: usize,
) -> Result<Complex64> {
    if !kernel_supported(slot, r, s, t) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if let Some(v) = cache.get(&(slot, r, s, t)) {
        return Ok(*v);
    }
    let v = side_cell_value(SLOT_KERNELS[slot], side, r, s, t, z1, z2, terms)?;
    cache.insert((slot, r, s, t), v);
    Ok(v)
}

fn window_range(w: &Window) -> Result<(i64, i64)> {
    if !w.lo.is_finite() || !w.hi.is_finite() {
        return Err(Error::InvalidInput(
            "cell windows must be finite to enumerate".into(),
        ));
    }
    Ok(((w.lo - 1e-9).ceil() as i64, (w.hi + 1e-9).floor() as i64))
}

struct InsertionRecord {
    triple_idx: usize,
    slot: usize,
    j: i64,
    exp: i64,
    amp: Complex64,
    query: BasisTriple,
}

/// Shared assembly of both actions: enumerate the conjugated-insertion
/// components for every basis tuple and slot, evaluate the functional at
/// the shifted tuples (in parallel for lazy functionals), and scatter the
/// kernel-weighted values into the windowed cells.
fn tau_cells(
    side: Side,
    v: &AlgebraElement,
    lam: &dyn Functional,
    z1: &LogPoint,
    z2: &LogPoint,
    windows: &[Window; 3],
    eval_level: usize,
    terms: usize,
) -> Result<FunctionalSeries> {
    let h = v.level as i64;
    if lam.level() < eval_level + v.level as usize {
        return Err(Error::InsufficientTruncation(format!(
            "functional cutoff {} cannot support evaluation level {} with a weight-{} insertion",
            lam.level(),
            eval_level,
            v.level
        )));
    }
    let r_range = window_range(&windows[0])?;
    let s_range = window_range(&windows[1])?;
    let t_range = window_range(&windows[2])?;
    let dim = |(lo, hi): (i64, i64)| if hi < lo { 0usize } else { (hi - lo + 1) as usize };
    let ncells = dim(r_range)
        .checked_mul(dim(s_range))
        .and_then(|n| n.checked_mul(dim(t_range)))
        .ok_or_else(|| Error::InvalidInput("cell window overflow".into()))?;
    if ncells > CELL_CAP {
        return Err(Error::InvalidInput(format!(
            "window box requests {ncells} cells (cap {CELL_CAP})"
        )));
    }

    let momenta = lam.momenta();
    let slot_p = [momenta.0, momenta.1, momenta.2];
    let conj = conjugate_terms(v);
    let triples = basis_triples(eval_level);
    let one = Complex64::new(1.0, 0.0);

    // Enumerate insertion components once per (tuple, slot, conjugate piece).
    let mut xs_cache: HashMap<(Partition, Partition, usize), XSeries> = HashMap::new();
    let mut records: Vec<InsertionRecord> = Vec::new();
    for (ti, triple) in triples.iter().enumerate() {
        for slot in 0..3 {
            let target_parts: &Partition = match slot {
                0 => &triple.0,
                1 => &triple.1,
                _ => &triple.2,
            };
            for (j, uj) in &conj {
                for (sigma, c) in uj.components() {
                    let key = (sigma.clone(), target_parts.clone(), slot);
                    let xs = match xs_cache.get(&key) {
                        Some(xs) => xs,
                        None => {
                            let target = FockVector::state(slot_p[slot], target_parts, one);
                            let xs = apply_vertex(sigma, 0.0, &target, lam.level());
                            xs_cache.entry(key).or_insert(xs)
                        }
                    };
                    for (ef, fv) in xs.exponents() {
                        let exp = ef.round() as i64;
                        for (pi, a) in fv.components() {
                            let query = match slot {
                                0 => (pi.clone(), triple.1.clone(), triple.2.clone()),
                                1 => (triple.0.clone(), pi.clone(), triple.2.clone()),
                                _ => (triple.0.clone(), triple.1.clone(), pi.clone()),
                            };
                            records.push(InsertionRecord {
                                triple_idx: ti,
                                slot,
                                j: *j,
                                exp,
                                amp: c * a,
                                query,
                            });
                        }
                    }
                }
            }
        }
    }

    // Evaluate the functional once per distinct shifted tuple; grid cells
    // and tuples share these values, so warming them in parallel is the
    // whole concurrency story.
    let query_set: BTreeSet<BasisTriple> = records.iter().map(|r| r.query.clone()).collect();
    let query_list: Vec<BasisTriple> = query_set.into_iter().collect();
    let evals: Vec<(BasisTriple, Complex64)> = query_list
        .into_par_iter()
        .map(|q| {
            let v = lam.eval_triple(&q.0, &q.1, &q.2)?;
            Ok((q, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: HashMap<BasisTriple, Complex64> = evals.into_iter().collect();
    for rec in &mut records {
        rec.amp *= values[&rec.query];
    }
    records.retain(|r| r.amp != Complex64::new(0.0, 0.0));

    let mut kernel_cache: HashMap<(usize, i64, i64, i64), Complex64> = HashMap::new();
    let mut cells = BTreeMap::new();
    for r in r_range.0..=r_range.1 {
        for s in s_range.0..=s_range.1 {
            for t in t_range.0..=t_range.1 {
                let mut tf = TruncatedFunctional::new(eval_level, momenta);
                for rec in &records {
                    let (rr, ss, tt) = match rec.slot {
                        0 => (r - rec.j + 2 * h, s - rec.exp, t),
                        1 => (r - rec.j + 2 * h, s, t - rec.exp),
                        _ => (r - rec.j + 2 * h + rec.exp, s, t),
                    };
                    let k = kernel_cell(
                        &mut kernel_cache,
                        side,
                        rec.slot,
                        rr,
                        ss,
                        tt,
                        z1,
                        z2,
                        terms,
                    )?;
                    if k != Complex64::new(0.0, 0.0) {
                        tf.add(&triples[rec.triple_idx], k * rec.amp);
                    }
                }
                cells.insert((r, s, t), tf);
            }
        }
    }
    Ok(FunctionalSeries {
        level: eval_level,
        momenta,
        cells,
    })
}

/// First composite action: the conjugated insertion runs through the three
/// tensor slots against the left-expansion kernels, organized as windowed
/// cells over the three grid exponents. The output tabulates basis tuples
/// up to `eval_level`; the functional's cutoff must cover `eval_level` plus
/// the insertion weight.
pub fn tau1_apply(
    v: &AlgebraElement,
    lam: &dyn Functional,
    z1: &LogPoint,
    z2: &LogPoint,
    windows: &[Window; 3],
    eval_level: usize,
    terms: usize,
) -> Result<FunctionalSeries> {
    tau_cells(Side::Left, v, lam, z1, z2, windows, eval_level, terms)
}

/// Second composite action, in difference/base coordinates: `z0` plays the
/// difference of the two points and `z2` the base point. The kernels are
/// the right-expansion sides, and the outer point is reassembled as
/// z0 + z2.
pub fn tau2_apply(
    v: &AlgebraElement,
    lam: &dyn Functional,
    z0: &LogPoint,
    z2: &LogPoint,
    windows: &[Window; 3],
    eval_level: usize,
    terms: usize,
) -> Result<FunctionalSeries> {
    let z1 = LogPoint::principal(z0.value() + z2.value()).map_err(|_| {
        Error::InvalidInput("z0 + z2 = 0: the reassembled outer point vanishes".into())
    })?;
    tau_cells(Side::Right, v, lam, &z1, z2, windows, eval_level, terms)
}

/// One cell row of a two-action comparison.
#[derive(Debug, Clone, Serialize)]
pub struct TauCellRow {
    pub r: i64,
    pub s: i64,
    pub t: i64,
    pub norm: f64,
    pub dev: f64,
}

/// Cell-by-cell comparison of the two actions on a centered cube of cells.
#[derive(Debug, Clone, Serialize)]
pub struct TauEqualityReport {
    pub grid: i64,
    pub tol: f64,
    pub eval_level: usize,
    pub triples: usize,
    pub cells: usize,
    pub scale: f64,
    pub max_dev: f64,
    pub pass: bool,
    pub rows: Vec<TauCellRow>,
}

/// Compare the two actions cell-by-cell on the cube [−grid, grid]³: the
/// first at (z1, z2), the second at (z1 − z2, z2). Pass iff the largest
/// cellwise deviation stays below `tol` times the larger of 1 and the
/// largest cell norm.
pub fn check_tau_equality(
    v: &AlgebraElement,
    lam: &dyn Functional,
    z1: &LogPoint,
    z2: &LogPoint,
    grid: i64,
    tol: f64,
) -> Result<TauEqualityReport> {
    if grid < 0 || tol <= 0.0 {
        return Err(Error::InvalidInput("need grid ≥ 0 and tol > 0".into()));
    }
    if !in_composition_region(z1, z2) {
        return Err(Error::WrongRegion(format!(
            "need |z1| > |z2| > |z1 − z2| > 0, got |z1| = {}, |z2| = {}, |z1 − z2| = {}",
            z1.modulus(),
            z2.modulus(),
            (z1.value() - z2.value()).norm()
        )));
    }
    let h = v.level as usize;
    if lam.level() < h {
        return Err(Error::InsufficientTruncation(format!(
            "functional cutoff {} is below the insertion weight {}",
            lam.level(),
            h
        )));
    }
    let eval_level = (lam.level() - h).min(1);
    let g = grid as f64;
    let windows = [
        Window::new(-g, g),
        Window::new(-g, g),
        Window::new(-g, g),
    ];
    let first = tau_cells(Side::Left, v, lam, z1, z2, &windows, eval_level, DEFAULT_TERMS)?;
    let z0 = LogPoint::principal(z1.value() - z2.value())
        .map_err(|_| Error::WrongRegion("z1 = z2".into()))?;
    let second = tau2_apply(v, lam, &z0, z2, &windows, eval_level, DEFAULT_TERMS)?;

    let triples = basis_triples(eval_level);
    let mut rows = Vec::new();
    let mut scale = 0.0f64;
    let mut max_dev = 0.0f64;
    for (key, tf_a) in first.cells() {
        let mut norm = 0.0f64;
        let mut dev = 0.0f64;
        for triple in &triples {
            let a = tf_a.value(&triple.0, &triple.1, &triple.2);
            let b = second.cell_value(key.0, key.1, key.2, &triple.0, &triple.1, &triple.2);
            norm = norm.max(a.norm()).max(b.norm());
            dev = dev.max((a - b).norm());
        }
        scale = scale.max(norm);
        max_dev = max_dev.max(dev);
        rows.push(TauCellRow {
            r: key.0,
            s: key.1,
            t: key.2,
            norm,
            dev,
        });
    }
    let cells = rows.len();
    Ok(TauEqualityReport {
        grid,
        tol,
        eval_level,
        triples: triples.len(),
        cells,
        scale,
        max_dev,
        pass: max_dev <= tol * scale.max(1.0),
        rows,
    })
}

/// The grading component of the first action at the conformal vector: the
/// single cell at grid exponents (−2, −1, −1), whose slot sums reduce to
/// z·L(−1) + L(0) in the first two slots and L(0) in the third. Lowest
/// tuples are exact eigenvectors; correlator functionals with a
/// lowest-weight outgoing dual are eigenfunctionals with the outgoing
/// weight as eigenvalue.
pub fn lprime0_apply(
    lam: &dyn Functional,
    z1: &LogPoint,
    z2: &LogPoint,
) -> Result<TruncatedFunctional> {
    let omega = AlgebraElement::omega();
    if lam.level() < omega.level as usize {
        return Err(Error::InsufficientTruncation(format!(
            "functional cutoff {} is below the insertion weight {}",
            lam.level(),
            omega.level
        )));
    }
    let eval_level = lam.level() - omega.level as usize;
    let windows = [
        Window::new(-2.0, -2.0),
        Window::new(-1.0, -1.0),
        Window::new(-1.0, -1.0),
    ];
    let fs = tau_cells(
        Side::Left,
        &omega,
        lam,
        z1,
        z2,
        &windows,
        eval_level,
        DEFAULT_TERMS,
    )?;
    Ok(fs
        .cell(-2, -1, -1)
        .cloned()
        .unwrap_or_else(|| TruncatedFunctional::new(eval_level, lam.momenta())))
}

/// One element's compatibility verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CompatRow {
    pub element: String,
    pub weight: u32,
    pub eval_level: usize,
    pub buffer_lo: i64,
    pub buffer_hi: i64,
    pub deep_norm: f64,
    pub head_norm: f64,
    pub lower_truncation_pass: bool,
    pub conv_dev: f64,
    pub conv_scale: f64,
    pub multiplied_identity_pass: bool,
    pub pass: bool,
}

/// Compatibility report over a set of insertion elements.
#[derive(Debug, Clone, Serialize)]
pub struct CompatReport {
    pub grid: i64,
    pub tol: f64,
    pub functional_level: usize,
    pub rows: Vec<CompatRow>,
    pub pass: bool,
}

/// Two finite shadows of the compatibility conditions, per element:
/// (a) lower truncation — the single-variable rows at unit exponents in
/// the other two grid variables must die out below the element's weight,
/// checked on a buffer of deep rows; (b) the kernel-multiplied identity —
/// every windowed cell must equal the convolution of the two-delta kernel
/// with those rows. Correlator functionals satisfy both; a functional with
/// mass planted arbitrarily deep fails (a).
pub fn compatibility_check(
    lam: &dyn Functional,
    z1: &LogPoint,
    z2: &LogPoint,
    elements: &[AlgebraElement],
    grid: i64,
    tol: f64,
) -> Result<CompatReport> {
    if grid < 1 || tol <= 0.0 {
        return Err(Error::InvalidInput("need grid ≥ 1 and tol > 0".into()));
    }
    if !in_composition_region(z1, z2) {
        return Err(Error::WrongRegion(format!(
            "need |z1| > |z2| > |z1 − z2| > 0, got |z1| = {}, |z2| = {}",
            z1.modulus(),
            z2.modulus()
        )));
    }
    let mut rows = Vec::new();
    for v in elements {
        let h = v.level as i64;
        if lam.level() < v.level as usize {
            return Err(Error::InsufficientTruncation(format!(
                "functional cutoff {} is below the insertion weight {}",
                lam.level(),
                v.level
            )));
        }
        let eval_level = (lam.level() - v.level as usize).min(1);
        let buffer_lo = -h - 4;
        let buffer_hi = -h - 1;
        let head_hi = h + 2;
        let r_lo = buffer_lo.min(-grid);
        let r_hi = (3 * grid - 2).max(head_hi).max(grid);
        let windows = [
            Window::new(r_lo as f64, r_hi as f64),
            Window::new(-grid as f64, grid as f64),
            Window::new(-grid as f64, grid as f64),
        ];
        let fs = tau_cells(Side::Left, v, lam, z1, z2, &windows, eval_level, DEFAULT_TERMS)?;
        let triples = basis_triples(eval_level);

        // (a) deep single-variable rows vanish for functionals that truncate
        // from below; the head rows set the scale.
        let mut deep_norm = 0.0f64;
        for m in buffer_lo..=buffer_hi {
            for triple in &triples {
                deep_norm =
                    deep_norm.max(fs.cell_value(m, -1, -1, &triple.0, &triple.1, &triple.2).norm());
            }
        }
        let mut head_norm = 0.0f64;
        for m in -h..=head_hi {
            for triple in &triples {
                head_norm =
                    head_norm.max(fs.cell_value(m, -1, -1, &triple.0, &triple.1, &triple.2).norm());
            }
        }
        let lower_truncation_pass = deep_norm <= tol * head_norm.max(1.0);

        // (b) every cell equals the two-delta kernel convolved against the
        // rows: cell(r,s,t) = Σ_m K(r−m, s, t) · row_m.
        let mut kernel_cache: HashMap<(i64, i64, i64), Complex64> = HashMap::new();
        let mut conv_dev = 0.0f64;
        let mut conv_scale = 0.0f64;
        for r in -grid..=grid {
            for s in -grid..=grid {
                for t in -grid..=grid {
                    for triple in &triples {
                        let full = fs.cell_value(r, s, t, &triple.0, &triple.1, &triple.2);
                        let mut conv = Complex64::new(0.0, 0.0);
                        for m in buffer_lo..=(r - s - t - 2) {
                            let key = (r - m, s, t);
                            let k = match kernel_cache.get(&key) {
                                Some(k) => *k,
                                None => {
                                    let k = side_cell_value(
                                        DeltaIdentity::I14_8,
                                        Side::Left,
                                        r - m,
                                        s,
                                        t,
                                        z1,
                                        z2,
                                        DEFAULT_TERMS,
                                    )?;
                                    kernel_cache.insert(key, k);
                                    k
                                }
                            };
                            if k != Complex64::new(0.0, 0.0) {
                                conv += k * fs.cell_value(m, -1, -1, &triple.0, &triple.1, &triple.2);
                            }
                        }
                        conv_scale = conv_scale.max(full.norm()).max(conv.norm());
                        conv_dev = conv_dev.max((full - conv).norm());
                    }
                }
            }
        }
        let multiplied_identity_pass = conv_dev <= tol * conv_scale.max(1.0);
        rows.push(CompatRow {
            element: format!("weight {}", v.level),
            weight: v.level,
            eval_level,
            buffer_lo,
            buffer_hi,
            deep_norm,
            head_norm,
            lower_truncation_pass,
            conv_dev,
            conv_scale,
            multiplied_identity_pass,
            pass: lower_truncation_pass && multiplied_identity_pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(CompatReport {
        grid,
        tol,
        functional_level: lam.level(),
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(x: f64) -> LogPoint {
        LogPoint::principal(Complex64::new(x, 0.0)).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_table(level: usize, momenta: (f64, f64, f64), seed: u64) -> TruncatedFunctional {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tf = TruncatedFunctional::new(level, momenta);
        for (mu, nu, rho) in basis_triples(level) {
            tf.set(
                &mu,
                &nu,
                &rho,
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
        }
        tf
    }

    /// λ composed with a Virasoro mode in one slot, evaluated at a tuple:
    /// Σ_π coeff(π) λ(… π …), built independently of the cell assembly.
    fn mode_in_slot(
        lam: &dyn Functional,
        n: i64,
        slot: usize,
        triple: &BasisTriple,
        cap: usize,
    ) -> Complex64 {
        let (p1, p2, p3) = lam.momenta();
        let slot_p = [p1, p2, p3];
        let parts: &Partition = match slot {
            0 => &triple.0,
            1 => &triple.1,
            _ => &triple.2,
        };
        let state = FockVector::state(slot_p[slot], parts, c(1.0, 0.0));
        let moved = virasoro_apply(n, &state, cap);
        let mut acc = c(0.0, 0.0);
        for (pi, coeff) in moved.components() {
            let val = match slot {
                0 => lam.eval_triple(pi, &triple.1, &triple.2).unwrap(),
                1 => lam.eval_triple(&triple.0, pi, &triple.2).unwrap(),
                _ => lam.eval_triple(&triple.0, &triple.1, pi).unwrap(),
            };
            acc += coeff * val;
        }
        acc
    }

    #[test]
    fn triple_id_roundtrip() {
        let samples: [(&[u32], &[u32], &[u32]); 3] = [
            (&[], &[], &[]),
            (&[2, 1], &[], &[1]),
            (&[5], &[3, 3, 1], &[2]),
        ];
        for (mu, nu, rho) in samples {
            let id = triple_id(mu, nu, rho);
            let parsed = parse_triple_id(&id).unwrap();
            assert_eq!(parsed.0, mu.to_vec());
            assert_eq!(parsed.1, nu.to_vec());
            assert_eq!(parsed.2, rho.to_vec());
        }
        assert_eq!(triple_id(&[], &[], &[]), "-;-;-");
        assert!(parse_triple_id("1;2").is_err());
        assert!(parse_triple_id("0;-;-").is_err());
    }

    #[test]
    fn basis_triple_counts() {
        assert_eq!(basis_triples(0).len(), 1);
        assert_eq!(basis_triples(1).len(), 4);
        // 1 empty + 3 singles + (2 partitions of 2 × 3 slots + 3 split pairs)
        assert_eq!(basis_triples(2).len(), 13);
    }

    #[test]
    fn serde_roundtrip_preserves_table() {
        let tf = random_table(3, (1.0, 0.5, 0.0), 7);
        let json = tf.to_json().unwrap();
        let back = TruncatedFunctional::from_json(&json).unwrap();
        assert_eq!(tf, back);
    }

    #[test]
    fn missing_entries_are_counted() {
        let mut tf = TruncatedFunctional::new(2, (0.0, 0.0, 0.0));
        let all = basis_triples(2);
        for (mu, nu, rho) in all.iter().take(10) {
            tf.set(mu, nu, rho, c(1.0, 0.0));
        }
        assert_eq!(tf.missing_entries(), all.len() - 10);
        assert_eq!(tf.value(&[2], &[], &[2, 1]), c(0.0, 0.0));
    }

    #[test]
    fn vertex_components_are_virasoro_modes() {
        // Y of the conformal vector, read off one variable exponent at a
        // time, is the corresponding Virasoro mode: exponent −n−2 ↔ L(n).
        let mut w = FockVector::state(0.7, &[2, 1], c(1.0, 0.0));
        w.add_scaled(&FockVector::state(0.7, &[1], c(0.3, -0.2)), c(1.0, 0.0));
        let level = 8;
        let xs = apply_vertex(&[1, 1], 0.0, &w, level);
        for n in -3i64..=3 {
            let want = virasoro_apply(n, &w, level);
            let mut got = FockVector::zero(0.7);
            for (e, fv) in xs.exponents() {
                if (e - (-n - 2) as f64).abs() < 1e-9 {
                    got.add_scaled(fv, c(0.5, 0.0));
                }
            }
            let mut diff = got.clone();
            diff.add_scaled(&want, c(-1.0, 0.0));
            assert!(
                diff.max_abs() < 1e-10,
                "mode {n} mismatch: {}",
                diff.max_abs()
            );
        }
    }

    #[test]
    fn conjugate_terms_shapes() {
        // The conformal vector is annihilated by L(1): one piece, plus sign.
        let omega = AlgebraElement::omega();
        let terms = conjugate_terms(&omega);
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0, 0);
        assert!((terms[0].1.coeff(&[1, 1]) - c(0.5, 0.0)).norm() < 1e-15);

        // The vacuum conjugates to itself.
        let vac = AlgebraElement::vacuum();
        let terms = conjugate_terms(&vac);
        assert_eq!(terms.len(), 1);
        assert!((terms[0].1.coeff(&[]) - c(1.0, 0.0)).norm() < 1e-15);

        // A non-quasiprimary element has a genuine chain: L(1) a_{−2} = 2a_{−1}.
        let v = AlgebraElement::new(FockVector::state(0.0, &[2], c(1.0, 0.0))).unwrap();
        let terms = conjugate_terms(&v);
        assert_eq!(terms.len(), 2);
        assert!((terms[0].1.coeff(&[2]) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((terms[1].1.coeff(&[1]) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn vacuum_action_reduces_to_the_two_delta_kernel() {
        // Identity insertion: each cell is the sum of the three slot kernels
        // at the same cell, which telescopes to the finite two-delta kernel.
        let lam = random_table(2, (1.0, 0.5, -0.5), 11);
        let vac = AlgebraElement::vacuum();
        let (z1, z2) = (z(1.0), z(0.9));
        let w = || Window::new(-3.0, 3.0);
        let fs = tau1_apply(&vac, &lam, &z1, &z2, &[w(), w(), w()], 1, DEFAULT_TERMS).unwrap();
        let triples = basis_triples(1);
        for r in -3i64..=3 {
            for s in -3i64..=3 {
                for t in -3i64..=3 {
                    let k8 = side_cell_value(
                        DeltaIdentity::I14_8,
                        Side::Left,
                        r,
                        s,
                        t,
                        &z1,
                        &z2,
                        DEFAULT_TERMS,
                    )
                    .unwrap();
                    // The three slot kernels can be individually huge at
                    // cells where their sum telescopes to a tiny finite
                    // value; the honest error scale is the canceling
                    // magnitude, not the target.
                    let mut kscale = 0.0f64;
                    for slot in 0..3 {
                        kscale += side_cell_value(
                            SLOT_KERNELS[slot],
                            Side::Left,
                            r,
                            s,
                            t,
                            &z1,
                            &z2,
                            DEFAULT_TERMS,
                        )
                        .unwrap()
                        .norm();
                    }
                    for triple in &triples {
                        let lv = lam.value(&triple.0, &triple.1, &triple.2);
                        let got = fs.cell_value(r, s, t, &triple.0, &triple.1, &triple.2);
                        let want = k8 * lv;
                        let tol = 1e-9 * kscale.max(1.0);
                        assert!(
                            (got - want).norm() < tol,
                            "cell ({r},{s},{t}): got {got}, want {want}, kernel scale {kscale}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn vacuum_second_action_matches_right_expansion() {
        let lam = random_table(1, (1.0, 1.0, 0.0), 13);
        let vac = AlgebraElement::vacuum();
        let (z0, z2) = (z(0.1), z(0.9));
        let z1 = z(1.0);
        let w = || Window::new(-2.0, 2.0);
        let fs = tau2_apply(&vac, &lam, &z0, &z2, &[w(), w(), w()], 1, DEFAULT_TERMS).unwrap();
        let triples = basis_triples(1);
        for r in -2i64..=2 {
            for s in -2i64..=2 {
                for t in -2i64..=2 {
                    let k8 = side_cell_value(
                        DeltaIdentity::I14_8,
                        Side::Right,
                        r,
                        s,
                        t,
                        &z1,
                        &z2,
                        DEFAULT_TERMS,
                    )
                    .unwrap();
                    let mut kscale = 0.0f64;
                    for slot in 0..3 {
                        kscale += side_cell_value(
                            SLOT_KERNELS[slot],
                            Side::Right,
                            r,
                            s,
                            t,
                            &z1,
                            &z2,
                            DEFAULT_TERMS,
                        )
                        .unwrap()
                        .norm();
                    }
                    for triple in &triples {
                        let lv = lam.value(&triple.0, &triple.1, &triple.2);
                        let got = fs.cell_value(r, s, t, &triple.0, &triple.1, &triple.2);
                        let want = k8 * lv;
                        assert!(
                            (got - want).norm() < 1e-9 * kscale.max(1.0),
                            "cell ({r},{s},{t}): got {got}, want {want}, kernel scale {kscale}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn zero_functional_maps_to_zero() {
        let lam = TruncatedFunctional::new(4, (1.0, 1.0, 0.0));
        let omega = AlgebraElement::omega();
        let w = || Window::new(-2.0, 2.0);
        let fs =
            tau1_apply(&omega, &lam, &z(1.0), &z(0.9), &[w(), w(), w()], 1, DEFAULT_TERMS).unwrap();
        assert!(fs.max_abs() == 0.0);
        let l0 = lprime0_apply(&lam, &z(1.0), &z(0.9)).unwrap();
        assert!(l0.max_abs() == 0.0);
    }

    #[test]
    fn action_is_linear_in_the_functional() {
        let la = random_table(3, (1.0, 0.5, 0.0), 17);
        let lb = random_table(3, (1.0, 0.5, 0.0), 19);
        let (alpha, beta) = (c(0.7, -0.3), c(-1.1, 0.2));
        let mut combo = la.scale(alpha);
        combo.add_scaled(&lb, beta);
        let omega = AlgebraElement::omega();
        let w = || Window::new(-1.0, 1.0);
        let apply = |lam: &TruncatedFunctional| {
            tau1_apply(&omega, lam, &z(1.0), &z(0.9), &[w(), w(), w()], 1, DEFAULT_TERMS).unwrap()
        };
        let fa = apply(&la);
        let fb = apply(&lb);
        let fc = apply(&combo);
        let triples = basis_triples(1);
        for (key, tf) in fc.cells() {
            for triple in &triples {
                let got = tf.value(&triple.0, &triple.1, &triple.2);
                let want = alpha * fa.cell_value(key.0, key.1, key.2, &triple.0, &triple.1, &triple.2)
                    + beta * fb.cell_value(key.0, key.1, key.2, &triple.0, &triple.1, &triple.2);
                assert!((got - want).norm() < 1e-9 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn action_is_linear_in_the_element() {
        let lam = random_table(3, (0.5, 1.0, 0.0), 23);
        let omega = AlgebraElement::omega();
        let doubled = omega.scale(c(2.0, 0.0));
        let w = || Window::new(-1.0, 1.0);
        let fa =
            tau1_apply(&omega, &lam, &z(1.0), &z(0.9), &[w(), w(), w()], 1, DEFAULT_TERMS).unwrap();
        let fb =
            tau1_apply(&doubled, &lam, &z(1.0), &z(0.9), &[w(), w(), w()], 1, DEFAULT_TERMS)
                .unwrap();
        let triples = basis_triples(1);
        for (key, tf) in fa.cells() {
            for triple in &triples {
                let a = tf.value(&triple.0, &triple.1, &triple.2);
                let b = fb.cell_value(key.0, key.1, key.2, &triple.0, &triple.1, &triple.2);
                assert!((b - a * 2.0).norm() < 1e-10 * b.norm().max(1.0));
            }
        }
    }

    #[test]
    fn gates_reject_bad_inputs() {
        let lam = random_table(1, (1.0, 1.0, 0.0), 3);
        let omega = AlgebraElement::omega();
        // Functional cutoff below the insertion weight.
        assert!(matches!(
            check_tau_equality(&omega, &lam, &z(1.0), &z(0.9), 1, 1e-6),
            Err(Error::InsufficientTruncation(_))
        ));
        // Outside the composition region.
        let lam4 = random_table(4, (1.0, 1.0, 0.0), 3);
        assert!(matches!(
            check_tau_equality(&omega, &lam4, &z(2.0), &z(1.0), 1, 1e-6),
            Err(Error::WrongRegion(_))
        ));
        assert!(matches!(
            compatibility_check(&lam4, &z(2.0), &z(1.0), &[AlgebraElement::vacuum()], 1, 1e-3),
            Err(Error::WrongRegion(_))
        ));
        // Infinite windows cannot be enumerated.
        let winf = [Window::all(), Window::all(), Window::all()];
        assert!(matches!(
            tau1_apply(&omega, &lam4, &z(1.0), &z(0.9), &winf, 1, DEFAULT_TERMS),
            Err(Error::InvalidInput(_))
        ));
        // Non-homogeneous or momentum-carrying elements are rejected.
        let mut bad = FockVector::state(0.0, &[1], c(1.0, 0.0));
        bad.add_scaled(&FockVector::state(0.0, &[2], c(1.0, 0.0)), c(1.0, 0.0));
        assert!(AlgebraElement::new(bad).is_err());
        assert!(AlgebraElement::new(FockVector::lowest(1.0)).is_err());
    }

    #[test]
    fn lowering_row_matches_direct_mode_action() {
        // The cell at (−1, −1, −1) of the conformal-vector action applies
        // z² L(−1) + 2z L(0) + L(1) in the first two slots and L(1) in the
        // third — the commutator chain of a lowering mode through two
        // insertions.
        let lam = random_table(4, (1.0, 0.5, -0.25), 29);
        let omega = AlgebraElement::omega();
        let (z1, z2) = (z(1.0), z(0.9));
        let cell = Window::new(-1.0, -1.0);
        let fs = tau1_apply(
            &omega,
            &lam,
            &z1,
            &z2,
            &[cell.clone(), cell.clone(), cell],
            2,
            DEFAULT_TERMS,
        )
        .unwrap();
        let (z1v, z2v) = (z1.value(), z2.value());
        for triple in basis_triples(2) {
            let got = fs.cell_value(-1, -1, -1, &triple.0, &triple.1, &triple.2);
            let mut want = c(0.0, 0.0);
            for (slot, zv) in [(0usize, z1v), (1, z2v)] {
                want += zv * zv * mode_in_slot(&lam, -1, slot, &triple, 4)
                    + 2.0 * zv * mode_in_slot(&lam, 0, slot, &triple, 4)
                    + mode_in_slot(&lam, 1, slot, &triple, 4);
            }
            want += mode_in_slot(&lam, 1, 2, &triple, 4);
            assert!(
                (got - want).norm() < 1e-9 * want.norm().max(1.0),
                "triple {:?}: got {got}, want {want}",
                triple
            );
        }
    }

    #[test]
    fn grading_row_matches_direct_mode_action() {
        // The cell at (−2, −1, −1) applies z L(−1) + L(0) in the first two
        // slots and L(0) in the third: the total grading operator.
        let lam = random_table(4, (1.0, 0.5, -0.25), 31);
        let omega = AlgebraElement::omega();
        let (z1, z2) = (z(1.0), z(0.9));
        let cell_r = Window::new(-2.0, -2.0);
        let cell = Window::new(-1.0, -1.0);
        let fs = tau1_apply(
            &omega,
            &lam,
            &z1,
            &z2,
            &[cell_r, cell.clone(), cell],
            2,
            DEFAULT_TERMS,
        )
        .unwrap();
        let (z1v, z2v) = (z1.value(), z2.value());
        for triple in basis_triples(2) {
            let got = fs.cell_value(-2, -1, -1, &triple.0, &triple.1, &triple.2);
            let want = z1v * mode_in_slot(&lam, -1, 0, &triple, 4)
                + mode_in_slot(&lam, 0, 0, &triple, 4)
                + z2v * mode_in_slot(&lam, -1, 1, &triple, 4)
                + mode_in_slot(&lam, 0, 1, &triple, 4)
                + mode_in_slot(&lam, 0, 2, &triple, 4);
            assert!(
                (got - want).norm() < 1e-9 * want.norm().max(1.0),
                "triple {:?}: got {got}, want {want}",
                triple
            );
        }
    }

    #[test]
    fn grading_is_diagonal_on_the_lowest_tuple() {
        let momenta = (1.0, 1.0, 0.0);
        let mut lam = TruncatedFunctional::new(3, momenta);
        lam.set(&[], &[], &[], c(1.0, 0.0));
        let out = lprime0_apply(&lam, &z(1.0), &z(0.9)).unwrap();
        // Eigenvalue = sum of the lowest weights p²/2.
        let want = 0.5 + 0.5 + 0.0;
        assert!((out.value(&[], &[], &[]) - c(want, 0.0)).norm() < 1e-10);
        for triple in basis_triples(out.level) {
            if triple_total(&triple) > 0 {
                assert!(out.value(&triple.0, &triple.1, &triple.2).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn tau_equality_vacuum_passes_tightly() {
        // With the identity insertion both actions reduce to the paired
        // kernel expansions; the residual is pure series truncation, well
        // under the comparison tolerance.
        let lam = random_table(2, (1.0, 0.5, 0.0), 37);
        let report =
            check_tau_equality(&AlgebraElement::vacuum(), &lam, &z(1.0), &z(0.9), 2, 1e-6).unwrap();
        assert!(report.pass, "max dev {}", report.max_dev);
        assert!(report.max_dev < 1e-7 * report.scale.max(1.0));
    }

    #[test]
    fn tau_equality_conformal_insertion() {
        let lam = random_table(4, (1.0, 1.0, 0.0), 41);
        let report =
            check_tau_equality(&AlgebraElement::omega(), &lam, &z(1.0), &z(0.9), 1, 1e-6).unwrap();
        assert!(
            report.pass,
            "max dev {} at scale {}",
            report.max_dev, report.scale
        );
        assert_eq!(report.eval_level, 1);
        assert_eq!(report.cells, 27);
    }

    #[test]
    fn correlator_functional_evaluates_and_memoizes() {
        let lam = CorrelatorFunctional::product((1.0, 1.0, 0.0), &z(1.0), &z(0.9), 6, 1e-9).unwrap();
        let direct = {
            let y2 = Intertwiner::plain(1.0, 0.0, 6);
            let y1 = Intertwiner::plain(1.0, 1.0, 6);
            let wp = DualVector::lowest(2.0);
            let w1 = FockVector::state(1.0, &[1], c(1.0, 0.0));
            let w2 = FockVector::lowest(1.0);
            let w3 = FockVector::lowest(0.0);
            product_correlator_depth(
                &y1,
                &y2,
                &wp,
                &w1,
                &w2,
                &w3,
                &z(1.0),
                &z(0.9),
                CORRELATOR_BASE_LEVEL,
                Some(MAX_ADAPTIVE_LEVEL),
                1e-9,
            )
            .unwrap()
            .0
        };
        let a = lam.eval_triple(&[1], &[], &[]).unwrap();
        let b = lam.eval_triple(&[1], &[], &[]).unwrap();
        assert!((a - direct).norm() < 1e-12 * direct.norm().max(1.0));
        assert_eq!(a, b);
        // Beyond the declared cutoff the functional reads zero.
        assert_eq!(lam.eval_triple(&[5, 2], &[], &[]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn action_on_product_correlator_matches_direct_insertion() {
        // Brute-force oracle: the lowering and grading rows applied to a
        // lazily evaluated product-correlator functional agree with the
        // direct Virasoro-mode insertions into the same correlator.
        let momenta = (1.0, 1.0, 0.0);
        let lam = CorrelatorFunctional::product(momenta, &z(1.0), &z(0.9), 10, 1e-10).unwrap();
        let omega = AlgebraElement::omega();
        let (z1, z2) = (z(1.0), z(0.9));
        let wr = Window::new(-2.0, -1.0);
        let wc = Window::new(-1.0, -1.0);
        let fs = tau1_apply(&omega, &lam, &z1, &z2, &[wr, wc.clone(), wc], 0, DEFAULT_TERMS)
            .unwrap();
        let lowest = (Vec::new(), Vec::new(), Vec::new());
        let (z1v, z2v) = (z1.value(), z2.value());

        let got_lower = fs.cell_value(-1, -1, -1, &[], &[], &[]);
        let mut want_lower = c(0.0, 0.0);
        for (slot, zv) in [(0usize, z1v), (1, z2v)] {
            want_lower += zv * zv * mode_in_slot(&lam, -1, slot, &lowest, 10)
                + 2.0 * zv * mode_in_slot(&lam, 0, slot, &lowest, 10)
                + mode_in_slot(&lam, 1, slot, &lowest, 10);
        }
        want_lower += mode_in_slot(&lam, 1, 2, &lowest, 10);
        assert!(
            (got_lower - want_lower).norm() < 1e-7 * want_lower.norm().max(1.0),
            "lowering row: got {got_lower}, want {want_lower}"
        );

        let got_grade = fs.cell_value(-2, -1, -1, &[], &[], &[]);
        let want_grade = z1v * mode_in_slot(&lam, -1, 0, &lowest, 10)
            + mode_in_slot(&lam, 0, 0, &lowest, 10)
            + z2v * mode_in_slot(&lam, -1, 1, &lowest, 10)
            + mode_in_slot(&lam, 0, 1, &lowest, 10)
            + mode_in_slot(&lam, 0, 2, &lowest, 10);
        assert!(
            (got_grade - want_grade).norm() < 1e-7 * want_grade.norm().max(1.0),
            "grading row: got {got_grade}, want {want_grade}"
        );
    }

    #[test]
    fn action_on_iterate_correlator_matches_direct_insertion() {
        let momenta = (1.0, 1.0, 0.0);
        let (z0, z2) = (z(0.1), z(0.9));
        let lam = CorrelatorFunctional::iterate(momenta, &z0, &z2, 10, 1e-10).unwrap();
        let omega = AlgebraElement::omega();
        let wr = Window::new(-2.0, -1.0);
        let wc = Window::new(-1.0, -1.0);
        let fs = tau2_apply(&omega, &lam, &z0, &z2, &[wr, wc.clone(), wc], 0, DEFAULT_TERMS)
            .unwrap();
        let lowest = (Vec::new(), Vec::new(), Vec::new());
        let z1v = z0.value() + z2.value();
        let z2v = z2.value();

        let got_lower = fs.cell_value(-1, -1, -1, &[], &[], &[]);
        let mut want_lower = c(0.0, 0.0);
        for (slot, zv) in [(0usize, z1v), (1, z2v)] {
            want_lower += zv * zv * mode_in_slot(&lam, -1, slot, &lowest, 10)
                + 2.0 * zv * mode_in_slot(&lam, 0, slot, &lowest, 10)
                + mode_in_slot(&lam, 1, slot, &lowest, 10);
        }
        want_lower += mode_in_slot(&lam, 1, 2, &lowest, 10);
        assert!(
            (got_lower - want_lower).norm() < 1e-7 * want_lower.norm().max(1.0),
            "lowering row: got {got_lower}, want {want_lower}"
        );

        let got_grade = fs.cell_value(-2, -1, -1, &[], &[], &[]);
        let want_grade = z1v * mode_in_slot(&lam, -1, 0, &lowest, 10)
            + mode_in_slot(&lam, 0, 0, &lowest, 10)
            + z2v * mode_in_slot(&lam, -1, 1, &lowest, 10)
            + mode_in_slot(&lam, 0, 1, &lowest, 10)
            + mode_in_slot(&lam, 0, 2, &lowest, 10);
        assert!(
            (got_grade - want_grade).norm() < 1e-7 * want_grade.norm().max(1.0),
            "grading row: got {got_grade}, want {want_grade}"
        );
    }

    #[test]
    fn grading_on_correlator_functional_is_eigen() {
        // With a lowest-weight dual on the outgoing module the correlator
        // functional is an exact eigenfunctional of the grading component;
        // the eigenvalue is the outgoing lowest weight (p1+p2+p3)²/2.
        let momenta = (1.0, 1.0, 0.0);
        let lam = CorrelatorFunctional::product(momenta, &z(1.0), &z(0.9), 3, 1e-10).unwrap();
        let out = lprime0_apply(&lam, &z(1.0), &z(0.9)).unwrap();
        let eigen = 2.0; // (1+1+0)²/2
        for triple in basis_triples(out.level) {
            let lhs = out.value(&triple.0, &triple.1, &triple.2);
            let rhs = eigen * lam.eval_triple(&triple.0, &triple.1, &triple.2).unwrap();
            assert!(
                (lhs - rhs).norm() < 1e-6 * rhs.norm().max(1.0),
                "triple {:?}: {lhs} vs {rhs}",
                triple
            );
        }
    }

    #[test]
    fn tau_equality_on_correlator_functional() {
        let momenta = (1.0, 1.0, 0.0);
        let lam = CorrelatorFunctional::product(momenta, &z(1.0), &z(0.9), 6, 1e-9).unwrap();
        let report =
            check_tau_equality(&AlgebraElement::omega(), &lam, &z(1.0), &z(0.9), 1, 1e-6).unwrap();
        assert!(
            report.pass,
            "max dev {} at scale {}",
            report.max_dev, report.scale
        );
    }

    #[test]
    fn compatibility_accepts_correlator_functional() {
        // At a point with a fast ratio the truncation tail of the
        // kernel-multiplied identity is small; the deep-row check is exact
        // up to the correlator's own evaluation tolerance.
        let momenta = (1.0, 1.0, 0.0);
        let (z1, z2) = (z(1.0), z(0.55));
        let lam = CorrelatorFunctional::product(momenta, &z1, &z2, 14, 1e-9).unwrap();
        let elements = [AlgebraElement::vacuum(), AlgebraElement::omega()];
        let report = compatibility_check(&lam, &z1, &z2, &elements, 1, 0.05).unwrap();
        assert!(report.pass, "rows: {:?}", report.rows);
        // The vacuum rows are exact: identity insertion means the full
        // array literally is the kernel times the plain rows.
        assert!(report.rows[0].conv_dev < 1e-8 * report.rows[0].conv_scale.max(1.0));
        assert!(report.rows[1].lower_truncation_pass);
        assert!(report.rows[1].deep_norm < 1e-6 * report.rows[1].head_norm.max(1.0));
    }

    #[test]
    fn compatibility_flags_planted_deep_mass() {
        // An all-ones table has no lower truncation: the deep rows of the
        // weight-2 action stay order-one.
        let momenta = (1.0, 1.0, 0.0);
        let mut lam = TruncatedFunctional::new(5, momenta);
        for (mu, nu, rho) in basis_triples(5) {
            lam.set(&mu, &nu, &rho, c(1.0, 0.0));
        }
        let report = compatibility_check(
            &lam,
            &z(1.0),
            &z(0.55),
            &[AlgebraElement::vacuum(), AlgebraElement::omega()],
            1,
            0.05,
        )
        .unwrap();
        assert!(!report.pass);
        let omega_row = &report.rows[1];
        assert!(!omega_row.lower_truncation_pass, "row: {omega_row:?}");
    }

    #[test]
    fn compatibility_zero_functional_is_vacuous() {
        let lam = TruncatedFunctional::new(4, (1.0, 1.0, 0.0));
        let report = compatibility_check(
            &lam,
            &z(1.0),
            &z(0.55),
            &[AlgebraElement::vacuum(), AlgebraElement::omega()],
            1,
            1e-6,
        )
        .unwrap();
        assert!(report.pass);
    }
}
