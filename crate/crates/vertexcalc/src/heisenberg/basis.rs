//! Fock-space basis bookkeeping for the rank-one free boson: partitions of
//! excitation levels, the diagonal Gram norms of the monomial basis, states,
//! finite linear combinations at a fixed momentum, and the bilinear pairing
//! with the restricted dual.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

/// A multiset of positive mode labels, stored descending — the canonical key
/// for the basis state a_{−λ1} a_{−λ2} … |p⟩.
pub type Partition = Vec<u32>;

/// Momenta agree when they differ by less than this.
pub const MOMENTUM_TOL: f64 = 1e-9;

/// All partitions of exactly `n`, parts descending, enumerated in a fixed
/// deterministic (lexicographically descending) order.
pub fn partitions_of(n: u32) -> Vec<Partition> {
    fn rec(n: u32, max: u32, prefix: &mut Partition, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        let top = max.min(n);
        for part in (1..=top).rev() {
            prefix.push(part);
            rec(n - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n.max(1), &mut Partition::new(), &mut out);
    out
}

/// All partitions of size ≤ `level`, level-major, deterministic.
pub fn partitions_up_to(level: usize) -> Vec<Partition> {
    (0..=level as u32).flat_map(partitions_of).collect()
}

/// Sum of parts.
pub fn partition_size(parts: &[u32]) -> u32 {
    parts.iter().sum()
}

/// Diagonal Gram norm ⟨λ|λ⟩ = ∏_n n^{m_n} · m_n! over multiplicities m_n.
pub fn gram_norm(parts: &[u32]) -> f64 {
    let mut mult: BTreeMap<u32, u32> = BTreeMap::new();
    for &p in parts {
        *mult.entry(p).or_insert(0) += 1;
    }
    mult.iter()
        .map(|(&n, &m)| {
            (n as f64).powi(m as i32) * (1..=m as u64).map(|k| k as f64).product::<f64>()
        })
        .product()
}

/// A single basis state a_{−λ}|p⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub momentum: f64,
    pub parts: Partition,
}

/// Conformal weight p²/2 + Σ parts.
pub fn weight(s: &FockState) -> f64 {
    s.momentum * s.momentum / 2.0 + partition_size(&s.parts) as f64
}

/// A finite linear combination of basis states at one fixed momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub momentum: f64,
    amp: BTreeMap<Partition, Complex64>,
}

impl FockVector {
    pub fn zero(momentum: f64) -> FockVector {
        FockVector {
            momentum,
            amp: BTreeMap::new(),
        }
    }

    /// The lowest-weight vector |p⟩.
    pub fn lowest(momentum: f64) -> FockVector {
        FockVector::state(momentum, &[], Complex64::new(1.0, 0.0))
    }

    pub fn state(momentum: f64, parts: &[u32], coeff: Complex64) -> FockVector {
        let mut key = parts.to_vec();
        key.sort_unstable_by(|a, b| b.cmp(a));
        let mut amp = BTreeMap::new();
        if coeff != Complex64::new(0.0, 0.0) {
            amp.insert(key, coeff);
        }
        FockVector { momentum, amp }
    }

    /// The conformal vector ω = ½ a_{−1}²|0⟩ of the vacuum module.
    pub fn omega_vector() -> FockVector {
        FockVector::state(0.0, &[1, 1], Complex64::new(0.5, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.amp.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.amp.len()
    }

    pub fn coeff(&self, parts: &[u32]) -> Complex64 {
        let mut key = parts.to_vec();
        key.sort_unstable_by(|a, b| b.cmp(a));
        self.amp
            .get(&key)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn components(&self) -> impl Iterator<Item = (&Partition, &Complex64)> {
        self.amp.iter()
    }

    pub fn insert(&mut self, parts: Partition, coeff: Complex64) {
        if coeff == Complex64::new(0.0, 0.0) {
            return;
        }
        let e = self.amp.entry(parts).or_insert(Complex64::new(0.0, 0.0));
        *e += coeff;
        if *e == Complex64::new(0.0, 0.0) {
            // keep the map minimal when exact cancellation occurs
        }
    }

    pub fn scale(&self, c: Complex64) -> FockVector {
        FockVector {
            momentum: self.momentum,
            amp: self.amp.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    /// self += c · other. Momenta must agree.
    pub fn add_scaled(&mut self, other: &FockVector, c: Complex64) {
        debug_assert!(
            (self.momentum - other.momentum).abs() < MOMENTUM_TOL,
            "momentum mismatch {} vs {}",
            self.momentum,
            other.momentum
        );
        for (k, v) in &other.amp {
            self.insert(k.clone(), v * c);
        }
    }

    /// Drop components whose partition size exceeds the cutoff.
    pub fn truncate(&mut self, level: usize) {
        self.amp.retain(|k, _| partition_size(k) as usize <= level);
    }

    /// Drop exact zeros left behind by cancellation.
    pub fn prune(&mut self) {
        self.amp.retain(|_, v| *v != Complex64::new(0.0, 0.0));
    }

    /// The weight-n homogeneous component.
    pub fn grade_project(&self, n: f64) -> FockVector {
        let base = self.momentum * self.momentum / 2.0;
        FockVector {
            momentum: self.momentum,
            amp: self
                .amp
                .iter()
                .filter(|(k, _)| (base + partition_size(k) as f64 - n).abs() < 1e-9)
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }

    /// Distinct excitation levels present, ascending.
    pub fn levels(&self) -> Vec<u32> {
        let mut ls: Vec<u32> = self.amp.keys().map(|k| partition_size(k)).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    }

    /// The component of fixed excitation level (partition size).
    pub fn level_slice(&self, level: u32) -> FockVector {
        FockVector {
            momentum: self.momentum,
            amp: self
                .amp
                .iter()
                .filter(|(k, _)| partition_size(k) == level)
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.amp.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl fmt::Display for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.amp.is_empty() {
            return write!(f, "0 @ p={}", self.momentum);
        }
        let mut first = true;
        for (k, v) in &self.amp {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({v})·a{k:?}|{}⟩", self.momentum)?;
        }
        Ok(())
    }
}

/// An element of the restricted dual, expressed in the basis dual to the
/// monomial basis up to Gram normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    pub inner: FockVector,
}

impl DualVector {
    pub fn lowest(momentum: f64) -> DualVector {
        DualVector {
            inner: FockVector::lowest(momentum),
        }
    }

    pub fn state(momentum: f64, parts: &[u32], coeff: Complex64) -> DualVector {
        DualVector {
            inner: FockVector::state(momentum, parts, coeff),
        }
    }

    pub fn momentum(&self) -> f64 {
        self.inner.momentum
    }

    /// Bilinear graded pairing: ⟨a_{−σ}|p⟩-dual component, state⟩ picks the
    /// σ coefficient weighted by the Gram norm; zero across momenta.
    pub fn pair(&self, v: &FockVector) -> Complex64 {
        if (self.inner.momentum - v.momentum).abs() >= MOMENTUM_TOL {
            return Complex64::new(0.0, 0.0);
        }
        self.inner
            .amp
            .iter()
            .map(|(k, c)| c * v.coeff(k) * gram_norm(k))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn partition_counts() {
        // p(0..8) = 1, 1, 2, 3, 5, 7, 11, 15, 22
        let expect = [1, 1, 2, 3, 5, 7, 11, 15, 22];
        for (n, &e) in expect.iter().enumerate() {
            assert_eq!(partitions_of(n as u32).len(), e, "p({n})");
        }
        assert_eq!(partitions_up_to(4).len(), 1 + 1 + 2 + 3 + 5);
    }

    #[test]
    fn partition_order_deterministic() {
        assert_eq!(
            partitions_of(4),
            vec![vec![4], vec![3, 1], vec![2, 2], vec![2, 1, 1], vec![1, 1, 1, 1]]
        );
    }

    #[test]
    fn gram_norms() {
        assert_eq!(gram_norm(&[]), 1.0);
        assert_eq!(gram_norm(&[1]), 1.0);
        assert_eq!(gram_norm(&[2]), 2.0);
        assert_eq!(gram_norm(&[1, 1]), 2.0);
        assert_eq!(gram_norm(&[2, 1]), 2.0);
        assert_eq!(gram_norm(&[2, 2, 1]), 8.0);
        assert_eq!(gram_norm(&[3, 2, 1]), 6.0);
    }

    #[test]
    fn weights() {
        assert_eq!(
            weight(&FockState {
                momentum: 0.0,
                parts: vec![]
            }),
            0.0
        );
        assert_eq!(
            weight(&FockState {
                momentum: 1.0,
                parts: vec![]
            }),
            0.5
        );
        assert_eq!(
            weight(&FockState {
                momentum: 1.0,
                parts: vec![2, 1]
            }),
            3.5
        );
    }

    #[test]
    fn grade_projection() {
        let mut v = FockVector::lowest(1.0);
        v.add_scaled(
            &FockVector::state(1.0, &[2, 1], c(2.0, 0.0)),
            c(1.0, 0.0),
        );
        // lowest weight 0.5 recovered by its own grade
        let low = v.grade_project(0.5);
        assert_eq!(low.coeff(&[]), c(1.0, 0.0));
        assert_eq!(low.num_states(), 1);
        // excited component at 3.5
        let hi = v.grade_project(3.5);
        assert_eq!(hi.coeff(&[2, 1]), c(2.0, 0.0));
        assert_eq!(hi.num_states(), 1);
        // off-grade is empty
        assert!(v.grade_project(1.5).is_zero());
    }

    #[test]
    fn pairing_is_graded_and_gram_weighted() {
        let d = DualVector::state(1.0, &[2, 1], c(1.0, 0.0));
        let v = FockVector::state(1.0, &[1, 2], c(3.0, 0.0));
        // same state up to part order; Gram norm of {2,1} is 2
        assert_eq!(d.pair(&v), c(6.0, 0.0));
        // weight mismatch pairs to zero
        assert_eq!(d.pair(&FockVector::lowest(1.0)), c(0.0, 0.0));
        // momentum mismatch pairs to zero
        assert_eq!(
            d.pair(&FockVector::state(2.0, &[2, 1], c(3.0, 0.0))),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn state_keys_canonicalize() {
        let v = FockVector::state(0.5, &[1, 3, 2], c(1.0, 0.0));
        assert_eq!(v.coeff(&[3, 2, 1]), c(1.0, 0.0));
        assert_eq!(v.coeff(&[1, 2, 3]), c(1.0, 0.0));
    }
}
