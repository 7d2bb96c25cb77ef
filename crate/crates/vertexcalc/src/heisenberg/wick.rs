//! Contraction-table evaluation of four-point matrix elements between basis
//! states: every pairing of excitation sources across the four clusters
//! contributes a closed-form monomial c·x1^{e1}·x2^{e2}·(x1−x2)^g, and the
//! same term table re-reads as c·(x2+x0)^{e1}·x2^{e2}·x0^{g} after the
//! substitution x1 = x2 + x0. Expanding the binomial factor yields exact
//! per-level values of the intermediate-weight sums in both composition
//! orders, at any depth, without enumerating intermediate states.

use num_complex::Complex64;

use crate::branch::LogPoint;
use crate::formal_series::binomial_coeff;

use super::basis::MOMENTUM_TOL;

/// One contraction branch: c · x1^{e1} · x2^{e2} · (x1−x2)^g.
#[derive(Debug, Clone, Copy)]
pub struct WickTerm {
    pub c: f64,
    pub e1: f64,
    pub e2: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cluster {
    Dual,
    First,
    Second,
    Target,
}

/// Pairing factor and exponent shifts (de1, de2, dg) for a contraction of
/// sources from two different clusters; `None` marks a forbidden
/// combination (same cluster handled by the caller).
fn pair_value(ca: Cluster, a: u32, cb: Cluster, b: u32) -> Option<(f64, f64, f64, f64)> {
    use Cluster::*;
    let (af, bf) = (a as f64, b as f64);
    match (ca, cb) {
        (Dual, Target) | (Target, Dual) => {
            let (s, r) = if ca == Dual { (af, bf) } else { (bf, af) };
            Some(if (s - r).abs() < 0.5 {
                (s, 0.0, 0.0, 0.0)
            } else {
                (0.0, 0.0, 0.0, 0.0)
            })
        }
        (Dual, First) | (First, Dual) => {
            let (s, m) = if ca == Dual { (a, b) } else { (b, a) };
            Some((
                s as f64 * binomial_coeff(s as f64 - 1.0, (m - 1) as u64),
                (s as i64 - m as i64) as f64,
                0.0,
                0.0,
            ))
        }
        (Dual, Second) | (Second, Dual) => {
            let (s, m) = if ca == Dual { (a, b) } else { (b, a) };
            Some((
                s as f64 * binomial_coeff(s as f64 - 1.0, (m - 1) as u64),
                0.0,
                (s as i64 - m as i64) as f64,
                0.0,
            ))
        }
        (First, Target) | (Target, First) => {
            let (m, r) = if ca == First { (a, b) } else { (b, a) };
            Some((
                r as f64 * binomial_coeff(-(r as f64) - 1.0, (m - 1) as u64),
                -((r + m) as f64),
                0.0,
                0.0,
            ))
        }
        (Second, Target) | (Target, Second) => {
            let (m, r) = if ca == Second { (a, b) } else { (b, a) };
            Some((
                r as f64 * binomial_coeff(-(r as f64) - 1.0, (m - 1) as u64),
                0.0,
                -((r + m) as f64),
                0.0,
            ))
        }
        (First, Second) | (Second, First) => {
            let (m, mp) = if ca == First { (a, b) } else { (b, a) };
            let mut fact = 1.0f64;
            for j in (m as u64).max(mp as u64)..(m as u64 + mp as u64) {
                fact *= j as f64;
            }
            for j in 2..=(m as u64).min(mp as u64) - 1 {
                fact /= j as f64;
            }
            let sign = if (m - 1) % 2 == 0 { 1.0 } else { -1.0 };
            Some((sign * fact, 0.0, 0.0, -((m + mp) as f64)))
        }
        _ => None,
    }
}

/// The two uncontracted readings of a leftover source.
fn backgrounds(cl: Cluster, part: u32, p: [f64; 4]) -> [(f64, f64, f64, f64); 2] {
    let (p1, p2, p3) = (p[0], p[1], p[2]);
    let m = part as f64;
    let sign = if (part - 1) % 2 == 0 { 1.0 } else { -1.0 };
    match cl {
        Cluster::Dual => [(p1, m, 0.0, 0.0), (p2, 0.0, m, 0.0)],
        Cluster::Target => [(-p1, -m, 0.0, 0.0), (-p2, 0.0, -m, 0.0)],
        Cluster::First => [(p2 * sign, 0.0, 0.0, -m), (p3 * sign, -m, 0.0, 0.0)],
        Cluster::Second => [(-p1, 0.0, 0.0, -m), (p3 * sign, 0.0, -m, 0.0)],
    }
}

fn enumerate(
    sources: &[(Cluster, u32)],
    used: &mut [bool],
    acc: (f64, f64, f64, f64),
    p: [f64; 4],
    out: &mut Vec<WickTerm>,
) {
    let Some(i) = used.iter().position(|u| !u) else {
        out.push(WickTerm {
            c: acc.0,
            e1: acc.1,
            e2: acc.2,
            g: acc.3,
        });
        return;
    };
    used[i] = true;
    let (ci, vi) = sources[i];
    // leftover readings
    for (dc, de1, de2, dg) in backgrounds(ci, vi, p) {
        if dc != 0.0 {
            enumerate(
                sources,
                used,
                (acc.0 * dc, acc.1 + de1, acc.2 + de2, acc.3 + dg),
                p,
                out,
            );
        }
    }
    // contractions with a later source of another cluster
    for j in i + 1..sources.len() {
        if used[j] || sources[j].0 == ci {
            continue;
        }
        let (cj, vj) = sources[j];
        if let Some((dc, de1, de2, dg)) = pair_value(ci, vi, cj, vj) {
            if dc != 0.0 {
                used[j] = true;
                enumerate(
                    sources,
                    used,
                    (acc.0 * dc, acc.1 + de1, acc.2 + de2, acc.3 + dg),
                    p,
                    out,
                );
                used[j] = false;
            }
        }
    }
    used[i] = false;
}

/// Per-tuple term table and per-level evaluators for both composition
/// orders.
#[derive(Debug, Clone)]
pub struct WickEngine {
    terms: Vec<WickTerm>,
    p: [f64; 4],
    mu_size: i64,
    nu_size: i64,
    rho_size: i64,
}

impl WickEngine {
    /// Build the contraction table for the tuple (σ-dual at p4; μ at p1,
    /// ν at p2, ρ at p3). A violated momentum gate p1+p2+p3 = p4 yields an
    /// empty table (every matrix element is exactly zero).
    pub fn new(p: [f64; 4], sigma: &[u32], mu: &[u32], nu: &[u32], rho: &[u32]) -> WickEngine {
        let mut terms = Vec::new();
        if (p[0] + p[1] + p[2] - p[3]).abs() < MOMENTUM_TOL {
            let mut sources: Vec<(Cluster, u32)> = Vec::new();
            sources.extend(sigma.iter().map(|&s| (Cluster::Dual, s)));
            sources.extend(mu.iter().map(|&m| (Cluster::First, m)));
            sources.extend(nu.iter().map(|&m| (Cluster::Second, m)));
            sources.extend(rho.iter().map(|&r| (Cluster::Target, r)));
            let base = (1.0, p[0] * p[2], p[1] * p[2], p[0] * p[1]);
            let mut used = vec![false; sources.len()];
            enumerate(&sources, &mut used, base, p, &mut terms);
        }
        WickEngine {
            terms,
            p,
            mu_size: mu.iter().sum::<u32>() as i64,
            nu_size: nu.iter().sum::<u32>() as i64,
            rho_size: rho.iter().sum::<u32>() as i64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The exact contribution of intermediate excitation level ℓ to the
    /// first composition order (outer at z1, inner at z2): each term's
    /// (x1−x2)^g expands in x2/x1, and the k-th slice lands at level
    /// (e2 − p2·p3) + k + |ν| + |ρ|.
    pub fn product_level(&self, level: i64, z1: &LogPoint, z2: &LogPoint) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let base = (t.e2 - self.p[1] * self.p[2]).round() as i64 + self.nu_size + self.rho_size;
            let k = level - base;
            if k < 0 {
                continue;
            }
            let bc = binomial_coeff(t.g, k as u64);
            if bc == 0.0 {
                continue;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            total += Complex64::new(t.c * bc * sign, 0.0)
                * z1.power(t.e1 + t.g - k as f64)
                * z2.power(t.e2 + k as f64);
        }
        total
    }

    /// The exact contribution of intermediate excitation level ℓ to the
    /// second composition order (inner at x0 = z0, outer at z2): each term's
    /// (x2+x0)^{e1} expands in x0/x2, and the k-th slice lands at level
    /// (g − p1·p2) + k + |μ| + |ν|.
    pub fn iterate_level(&self, level: i64, z0: &LogPoint, z2: &LogPoint) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let base = (t.g - self.p[0] * self.p[1]).round() as i64 + self.mu_size + self.nu_size;
            let k = level - base;
            if k < 0 {
                continue;
            }
            let bc = binomial_coeff(t.e1, k as u64);
            if bc == 0.0 {
                continue;
            }
            total += Complex64::new(t.c * bc, 0.0)
                * z2.power(t.e1 - k as f64 + t.e2)
                * z0.power(t.g + k as f64);
        }
        total
    }
}
