//! Exact finite group theory: `SL2(Z/n)` transvections, generated subgroups
//! and orbits, and the exhaustive combinatorial checks behind the pairwise
//! and triple zero-coincidence classification.
//!
//! Everything here is integer arithmetic mod `n`. The geometric layer never
//! feeds floats into these scans.

use serde::Serialize;

use crate::error::Error;
use crate::torus::{gcd, lcm, pairing_at_level, prime_factors, TorsionPoint};
use crate::Result;

/// Default cap on the level for full group/orbit enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 12;

/// Symplectic pairing of two vectors mod `n`.
fn pair_vec(u: (u64, u64), v: (u64, u64), n: u64) -> u64 {
    let p = (u.0 as i128) * (v.1 as i128) - (u.1 as i128) * (v.0 as i128);
    p.rem_euclid(n as i128) as u64
}

fn vec_order(v: (u64, u64), n: u64) -> u64 {
    n / gcd(gcd(v.0 % n, v.1 % n), n)
}

/// An element of `SL2(Z/n)`, entries row-major `[a, b; c, d]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ModMatrix {
    pub entries: [u64; 4],
    pub n: u64,
}

impl ModMatrix {
    pub fn new(entries: [i64; 4], n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroLevel);
        }
        let m = n as i64;
        let e = entries.map(|x| x.rem_euclid(m) as u64);
        let det = (e[0] as i128 * e[3] as i128 - e[1] as i128 * e[2] as i128)
            .rem_euclid(n as i128) as u64;
        if det != 1 % n {
            return Err(Error::Precondition(format!(
                "matrix determinant {det} != 1 mod {n}"
            )));
        }
        Ok(ModMatrix { entries: e, n })
    }

    pub fn identity(n: u64) -> Self {
        ModMatrix {
            entries: [1 % n, 0, 0, 1 % n],
            n,
        }
    }

    pub fn mul(&self, other: &ModMatrix) -> Result<ModMatrix> {
        if self.n != other.n {
            return Err(Error::LevelMismatch(self.n, other.n));
        }
        let n = self.n as u128;
        let a = &self.entries;
        let b = &other.entries;
        let e = [
            (a[0] as u128 * b[0] as u128 + a[1] as u128 * b[2] as u128) % n,
            (a[0] as u128 * b[1] as u128 + a[1] as u128 * b[3] as u128) % n,
            (a[2] as u128 * b[0] as u128 + a[3] as u128 * b[2] as u128) % n,
            (a[2] as u128 * b[1] as u128 + a[3] as u128 * b[3] as u128) % n,
        ];
        Ok(ModMatrix {
            entries: e.map(|x| x as u64),
            n: self.n,
        })
    }

    /// Inverse via the adjugate; valid because the determinant is 1.
    pub fn inverse(&self) -> ModMatrix {
        let n = self.n as i64;
        let e = &self.entries;
        let inv = [
            e[3] as i64,
            -(e[1] as i64),
            -(e[2] as i64),
            e[0] as i64,
        ]
        .map(|x| x.rem_euclid(n) as u64);
        ModMatrix {
            entries: inv,
            n: self.n,
        }
    }

    pub fn apply(&self, v: (u64, u64)) -> (u64, u64) {
        let n = self.n as u128;
        let e = &self.entries;
        (
            ((e[0] as u128 * v.0 as u128 + e[1] as u128 * v.1 as u128) % n) as u64,
            ((e[2] as u128 * v.0 as u128 + e[3] as u128 * v.1 as u128) % n) as u64,
        )
    }

    fn key(&self) -> u64 {
        // Levels are capped far below 2^16.
        self.entries[0] | self.entries[1] << 16 | self.entries[2] << 32 | self.entries[3] << 48
    }
}

/// The Picard-Lefschetz transvection `T(v) = v + <v, delta> delta` as a
/// matrix mod `n`.
pub fn transvection(delta: (i64, i64), n: u64) -> Result<ModMatrix> {
    if n == 0 {
        return Err(Error::ZeroLevel);
    }
    let m = n as i64;
    let d1 = delta.0.rem_euclid(m);
    let d2 = delta.1.rem_euclid(m);
    if d1 == 0 && d2 == 0 {
        return Err(Error::ZeroTransvectionDirection);
    }
    // <v, delta> = v0*d2 - v1*d1, so T = [[1 + d1*d2, -d1^2], [d2^2, 1 - d1*d2]].
    ModMatrix::new([1 + d1 * d2, -(d1 * d1), d2 * d2, 1 - d1 * d2], n)
}

/// `|SL2(Z/n)| = n^3 * prod_{p | n} (1 - 1/p^2)`, computed exactly.
pub fn sl2_order(n: u64) -> u64 {
    let mut order = n * n * n;
    for (p, _) in prime_factors(n) {
        order = order / (p * p) * (p * p - 1);
    }
    order
}

/// Count `SL2(Z/n)` the slow way, by scanning all `n^4` matrices. This is
/// the independent oracle for [`sl2_order`].
pub fn sl2_order_bruteforce(n: u64) -> u64 {
    let mut count = 0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let det = (a as i128 * d as i128 - b as i128 * c as i128)
                        .rem_euclid(n as i128) as u64;
                    if det == 1 % n {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

/// Closure of the generators under multiplication, sorted deterministically.
pub fn generated_subgroup(gens: &[ModMatrix]) -> Result<Vec<ModMatrix>> {
    generated_subgroup_capped(gens, DEFAULT_ENUMERATION_CAP)
}

pub fn generated_subgroup_capped(gens: &[ModMatrix], cap: u64) -> Result<Vec<ModMatrix>> {
    let n = gens
        .first()
        .ok_or_else(|| Error::Precondition("generator list is empty".into()))?
        .n;
    for g in gens {
        if g.n != n {
            return Err(Error::LevelMismatch(n, g.n));
        }
    }
    if n > cap {
        return Err(Error::EnumerationBound { n, cap });
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut work = vec![ModMatrix::identity(n)];
    while let Some(m) = work.pop() {
        if !seen.insert(m.key()) {
            continue;
        }
        for g in gens {
            work.push(m.mul(g)?);
        }
        out.push(m);
    }
    out.sort_by_key(|m| m.key());
    Ok(out)
}

/// Do the transvections at the given directions generate all of `SL2(Z/n)`?
pub fn check_surjectivity(deltas: &[(i64, i64)], n: u64) -> Result<bool> {
    check_surjectivity_capped(deltas, n, DEFAULT_ENUMERATION_CAP)
}

pub fn check_surjectivity_capped(deltas: &[(i64, i64)], n: u64, cap: u64) -> Result<bool> {
    let gens = deltas
        .iter()
        .map(|&d| transvection(d, n))
        .collect::<Result<Vec<_>>>()?;
    let group = generated_subgroup_capped(&gens, cap)?;
    Ok(group.len() as u64 == sl2_order(n))
}

/// Orbits of the generated transvection group on the vectors of exact order
/// `n`, each orbit sorted, orbits sorted by smallest member.
pub fn orbit_on_exact_order(deltas: &[(i64, i64)], n: u64) -> Result<Vec<Vec<(u64, u64)>>> {
    orbit_on_exact_order_capped(deltas, n, DEFAULT_ENUMERATION_CAP)
}

pub fn orbit_on_exact_order_capped(
    deltas: &[(i64, i64)],
    n: u64,
    cap: u64,
) -> Result<Vec<Vec<(u64, u64)>>> {
    if n > cap {
        return Err(Error::EnumerationBound { n, cap });
    }
    let gens = deltas
        .iter()
        .map(|&d| transvection(d, n))
        .collect::<Result<Vec<_>>>()?;
    let mut remaining = std::collections::BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            if vec_order((a, b), n) == n {
                remaining.insert((a, b));
            }
        }
    }
    let mut orbits = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut orbit = std::collections::BTreeSet::new();
        let mut work = vec![start];
        while let Some(v) = work.pop() {
            if !orbit.insert(v) {
                continue;
            }
            // Generators have finite order, so applying them forward reaches
            // the full group orbit.
            for g in &gens {
                work.push(g.apply(v));
            }
        }
        for v in &orbit {
            remaining.remove(v);
        }
        orbits.push(orbit.into_iter().collect());
    }
    Ok(orbits)
}

/// For every indivisible `lambda` mod `n`, the pairings against the deltas
/// must generate the unit ideal: `gcd(n, <lambda, delta_1>, ...) = 1`.
pub fn gcd_pairing_check(deltas: &[(i64, i64)], n: u64) -> bool {
    let m = n as i64;
    let ds: Vec<(u64, u64)> = deltas
        .iter()
        .map(|&(a, b)| (a.rem_euclid(m) as u64, b.rem_euclid(m) as u64))
        .collect();
    for a in 0..n {
        for b in 0..n {
            if gcd(gcd(a, b), n) != 1 {
                continue;
            }
            let mut g = n;
            for d in &ds {
                g = gcd(g, pair_vec((a, b), *d, n));
            }
            if g != 1 {
                return false;
            }
        }
    }
    true
}

/// Exhaustive check of the half-pairing lemma: when `4 | n` but `8` does not
/// divide `n`, any two order-`n` vectors with pairing `n/2` and odd multiples
/// whose difference is 4-torsion have a difference of order exactly 2.
pub fn lem5_exhaustive(n: u64) -> Result<bool> {
    if !n.is_multiple_of(4) || n.is_multiple_of(8) {
        return Err(Error::Precondition(format!(
            "lemma requires 4 | n and 8 not | n, got {n}"
        )));
    }
    if n > 36 {
        return Err(Error::EnumerationBound { n, cap: 36 });
    }
    let mut exact = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if vec_order((a, b), n) == n {
                exact.push((a, b));
            }
        }
    }
    let half = n / 2;
    for &a1 in &exact {
        for &a2 in &exact {
            if a1 == a2 || pair_vec(a1, a2, n) != half {
                continue;
            }
            for d1 in (1..n).step_by(2) {
                for d2 in (1..n).step_by(2) {
                    let diff = (
                        ((d1 * a1.0) % n + n - (d2 * a2.0) % n) % n,
                        ((d1 * a1.1) % n + n - (d2 * a2.1) % n) % n,
                    );
                    if !(4 * diff.0).is_multiple_of(n) || !(4 * diff.1).is_multiple_of(n) {
                        continue;
                    }
                    if vec_order(diff, n) != 2 {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// How a pair of distinct nonzero torsions can share a zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairClassification {
    /// No coincidence allowed on a general curve.
    DisjointExpected,
    /// Two 2-torsions: shared zero forced at `p - tau3`.
    TwoTwo,
    /// The exceptional order-6 certificate: pairing 3 in `J(E)_6` and
    /// difference of order 6.
    SixSix,
}

/// Classification of a torsion pair together with the witness data it was
/// decided on.
#[derive(Debug, Clone, Serialize)]
pub struct PairClass {
    pub classification: PairClassification,
    pub n1: u64,
    pub n2: u64,
    /// Pairing at the lcm level of the two orders.
    pub pairing: u64,
    pub diff_order: u64,
}

/// Classify a pair of distinct nonzero torsions by the exceptional-case
/// table.
pub fn classify_pair(t1: &TorsionPoint, t2: &TorsionPoint) -> Result<PairClass> {
    if t1.is_identity() || t2.is_identity() || t1 == t2 {
        return Err(Error::DegeneratePair);
    }
    let n1 = t1.order();
    let n2 = t2.order();
    let level = lcm(n1, n2);
    let pairing = pairing_at_level(t1, t2, level)?;
    let diff_order = t1.sub(t2)?.order();
    let classification = if n1 == 2 && n2 == 2 {
        PairClassification::TwoTwo
    } else if n1 == 6 && n2 == 6 && pairing == 3 && diff_order == 6 {
        // The pairing sign convention is unfixed, but -3 = 3 mod 6, so the
        // certificate is orientation-robust.
        PairClassification::SixSix
    } else {
        PairClassification::DisjointExpected
    };
    Ok(PairClass {
        classification,
        n1,
        n2,
        pairing,
        diff_order,
    })
}

/// Report of the exhaustive triple-coincidence exclusion.
#[derive(Debug, Clone, Serialize)]
pub struct TripleExclusionReport {
    /// Ordered pairs of distinct 2-torsions (6 of them).
    pub ordered_two_torsion_pairs: usize,
    /// The three pairwise shared points `p - tau_k` are pairwise distinct.
    pub two_torsion_shared_points_distinct: bool,
    /// Number of order-6 triples whose three pairs all carry the SixSix
    /// certificate; the case analysis forces this to zero.
    pub six_six_triples: usize,
    /// Number of order-6 triples examined.
    pub six_torsion_triples_checked: usize,
}

/// Exhaustively verify that no three distinct torsions can share a zero:
/// the 2-torsion shared points are pairwise distinct, and no triple of
/// order-6 torsions is pairwise SixSix-certified.
pub fn triple_exclusion_exhaustive(nmax: u64) -> Result<TripleExclusionReport> {
    if nmax > 12 {
        return Err(Error::EnumerationBound { n: nmax, cap: 12 });
    }
    // (A) 2-torsions: the shared zero of b_{t1} and b_{t2} is p - t3 with
    // t3 = t1 + t2; distinctness is pure arithmetic mod 2.
    let twos = [(1u64, 0u64), (0, 1), (1, 1)];
    let mut ordered_pairs = 0;
    let mut shared = Vec::new();
    for (i, &a) in twos.iter().enumerate() {
        for (j, &b) in twos.iter().enumerate() {
            if i == j {
                continue;
            }
            ordered_pairs += 1;
            if i < j {
                shared.push(((a.0 + b.0) % 2, (a.1 + b.1) % 2));
            }
        }
    }
    let mut distinct = true;
    for i in 0..shared.len() {
        for j in (i + 1)..shared.len() {
            if shared[i] == shared[j] {
                distinct = false;
            }
        }
    }

    // (B) order-6 triples with all three pairs SixSix-certified.
    let mut six_six_triples = 0;
    let mut checked = 0;
    if nmax >= 6 {
        let n = 6u64;
        let mut sixes = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if vec_order((a, b), n) == n {
                    sixes.push((a, b));
                }
            }
        }
        let certified = |u: (u64, u64), v: (u64, u64)| -> bool {
            let diff = ((u.0 + n - v.0) % n, (u.1 + n - v.1) % n);
            pair_vec(u, v, n) == 3 && vec_order(diff, n) == 6
        };
        for i in 0..sixes.len() {
            for j in (i + 1)..sixes.len() {
                for k in (j + 1)..sixes.len() {
                    checked += 1;
                    if certified(sixes[i], sixes[j])
                        && certified(sixes[i], sixes[k])
                        && certified(sixes[j], sixes[k])
                    {
                        six_six_triples += 1;
                    }
                }
            }
        }
    }

    Ok(TripleExclusionReport {
        ordered_two_torsion_pairs: ordered_pairs,
        two_torsion_shared_points_distinct: distinct,
        six_six_triples,
        six_torsion_triples_checked: checked,
    })
}

/// Isomorphism types `Z/a x Z/b` (`b | a`, `a*b = m`) of order-`m` subgroups
/// of the torsion group of a torus.
pub fn subgroup_types(m: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for b in 1..=m {
        if !m.is_multiple_of(b) {
            continue;
        }
        let a = m / b;
        if a.is_multiple_of(b) {
            out.push((a, b));
        }
    }
    out
}

/// Verdict of the order-only singularity dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dichotomy {
    /// Every order-`m` subgroup misses the full 2-torsion: arrangements stay
    /// nodal.
    AlwaysNodal,
    /// Some order-`m` subgroup contains `Z/2 x Z/2`: triple points can occur.
    TriplesPossible,
}

/// Decide the dichotomy by enumerating subgroup types rather than by the
/// `4 | m` shortcut; the two must agree, which the tests pin down.
pub fn dichotomy_for_m(m: u64) -> Dichotomy {
    let contains_full_two_torsion = subgroup_types(m)
        .iter()
        .any(|&(a, b)| a.is_multiple_of(2) && b.is_multiple_of(2));
    if contains_full_two_torsion {
        Dichotomy::TriplesPossible
    } else {
        Dichotomy::AlwaysNodal
    }
}

/// Which branch of the deformation argument applies to `L = m*D + pi^*M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeveriBranch {
    /// `m > 0`, `deg M >= 2`: general deformations are nodal outright.
    DeformationNodal,
    /// `m > 0`, `deg M = 1`: the elliptic-fiber case this crate analyzes.
    MainCase,
    /// Not an ample class of the treated shape.
    NotApplicable,
}

pub fn severi_branch(m: i64, deg_m: i64) -> SeveriBranch {
    if m > 0 && deg_m >= 2 {
        SeveriBranch::DeformationNodal
    } else if m > 0 && deg_m == 1 {
        SeveriBranch::MainCase
    } else {
        SeveriBranch::NotApplicable
    }
}
