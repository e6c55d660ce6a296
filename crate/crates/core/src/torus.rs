//! Exact lattice and torsion arithmetic on a complex torus.
//!
//! A [`Lattice`] is the period lattice `Z*omega1 + Z*omega2` normalized to
//! `omega1 = 1` with `omega2 = tau` reduced into the standard fundamental
//! domain of the modular group. Points on the torus are [`TorusPoint`]s,
//! stored by their lattice coordinates in the half-open unit square so that
//! reduction is idempotent. Torsion points of `J(E)` are [`TorsionPoint`]s,
//! stored as exact integer pairs mod `n` -- all group theory on them is exact
//! integer arithmetic, never floats.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Error;
use crate::Result;

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub(crate) fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// Prime factorization by trial division; levels in this crate are small.
pub(crate) fn prime_factors(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Number of elements of exact order `n` in `(Z/n)^2`:
/// `n^2 * prod_{p | n} (1 - 1/p^2)`, computed exactly.
pub fn exact_order_count(n: u64) -> u64 {
    let mut count = n * n;
    for (p, _) in prime_factors(n) {
        count = count / (p * p) * (p * p - 1);
    }
    count
}

/// Period lattice of a complex torus, normalized to `omega1 = 1` and
/// `omega2 = tau` in the standard fundamental domain `|Re tau| <= 1/2`,
/// `|tau| >= 1` (half-open tie-break: `Re tau` in `[-1/2, 1/2)`, and on the
/// unit circle the representative with `Re tau <= 0` is chosen).
#[derive(Debug, Clone, Serialize)]
pub struct Lattice {
    tau: Complex64,
    label: Option<String>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        // Bit equality of the normalized period; the label is just a tag.
        self.tau.re.to_bits() == other.tau.re.to_bits()
            && self.tau.im.to_bits() == other.tau.im.to_bits()
    }
}

fn reduce_to_modular_domain(mut tau: Complex64) -> Complex64 {
    for _ in 0..512 {
        tau.re -= (tau.re + 0.5).floor();
        let norm = tau.norm_sqr();
        if norm < 1.0 - 1e-14 {
            // S: tau -> -1/tau, keeping Im > 0.
            tau = -tau.conj() / norm;
        } else {
            if norm <= 1.0 + 1e-14 && tau.re > 1e-14 {
                // Unit-circle tie-break: prefer the representative with Re <= 0.
                tau = -tau.conj() / norm;
                tau.re -= (tau.re + 0.5).floor();
            }
            return tau;
        }
    }
    tau
}

impl Lattice {
    /// Build the lattice `Z + Z*tau`. `tau` may be any point of the upper half
    /// plane; it is reduced to the modular fundamental domain, and torsion
    /// coordinates always refer to the reduced basis.
    pub fn new(tau: Complex64) -> Result<Self> {
        if !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::NonFiniteInput(tau));
        }
        if tau.im <= 0.0 {
            return Err(Error::InvalidLattice(tau.im));
        }
        Ok(Lattice {
            tau: reduce_to_modular_domain(tau),
            label: None,
        })
    }

    /// The square lattice, `tau = i`.
    pub fn square() -> Self {
        Lattice {
            tau: Complex64::new(0.0, 1.0),
            label: Some("square".into()),
        }
    }

    /// The hexagonal lattice, `tau = exp(2*pi*i/3)`.
    pub fn hexagonal() -> Self {
        Lattice {
            tau: Complex64::new(-0.5, 0.75f64.sqrt()),
            label: Some("hexagonal".into()),
        }
    }

    /// Draw `tau` uniformly from the box `Re in [-0.4, 0.4]`, `Im in [1, 2]`,
    /// a compact subset of the fundamental domain away from the corner points
    /// `i` and `exp(i*pi/3)` where extra symmetries appear.
    pub fn random_in_box<R: Rng>(rng: &mut R) -> Self {
        let re = rng.random_range(-0.4..0.4);
        let im = rng.random_range(1.0..2.0);
        Lattice {
            tau: Complex64::new(re, im),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn omega1(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    pub fn omega2(&self) -> Complex64 {
        self.tau
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// Lattice specs are written `tau=<re>,<im>`.
    pub fn parse(s: &str) -> Result<Self> {
        let body = s.trim().strip_prefix("tau=").ok_or_else(|| Error::Parse {
            what: "lattice",
            input: s.into(),
            reason: "expected \"tau=<re>,<im>\"".into(),
        })?;
        let mut parts = body.splitn(2, ',');
        let parse_f64 = |part: Option<&str>| -> Result<f64> {
            part.and_then(|p| p.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    what: "lattice",
                    input: s.into(),
                    reason: "expected \"tau=<re>,<im>\"".into(),
                })
        };
        let re = parse_f64(parts.next())?;
        let im = parse_f64(parts.next())?;
        Lattice::new(Complex64::new(re, im))
    }

    /// Decompose `z = x*omega1 + y*omega2` into real lattice coordinates.
    fn coords_of(&self, z: Complex64) -> (f64, f64) {
        let y = z.im / self.tau.im;
        let x = z.re - y * self.tau.re;
        (x, y)
    }

    fn point_from_coords(&self, s: f64, t: f64) -> Complex64 {
        Complex64::new(s + t * self.tau.re, t * self.tau.im)
    }
}

fn wrap_unit(x: f64) -> f64 {
    let f = x - x.floor();
    // x - floor(x) rounds up to exactly 1.0 for tiny negative x.
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// A point of the torus, stored by its lattice coordinates `(s, t)` in the
/// half-open square `[0,1)^2`, i.e. `z = s*omega1 + t*omega2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusPoint {
    s: f64,
    t: f64,
    lattice: Lattice,
}

impl TorusPoint {
    /// Reduce an arbitrary complex number into the fundamental parallelogram.
    pub fn reduce(z: Complex64, lattice: &Lattice) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFiniteInput(z));
        }
        let (x, y) = lattice.coords_of(z);
        Ok(TorusPoint {
            s: wrap_unit(x),
            t: wrap_unit(y),
            lattice: lattice.clone(),
        })
    }

    pub fn zero(lattice: &Lattice) -> Self {
        TorusPoint {
            s: 0.0,
            t: 0.0,
            lattice: lattice.clone(),
        }
    }

    /// Uniformly random point of the torus.
    pub fn random<R: Rng>(rng: &mut R, lattice: &Lattice) -> Self {
        TorusPoint {
            s: rng.random_range(0.0..1.0),
            t: rng.random_range(0.0..1.0),
            lattice: lattice.clone(),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Lattice coordinates in `[0,1)^2`.
    pub fn coords(&self) -> (f64, f64) {
        (self.s, self.t)
    }

    /// The complex representative inside the fundamental parallelogram.
    pub fn z(&self) -> Complex64 {
        self.lattice.point_from_coords(self.s, self.t)
    }

    pub fn add(&self, other: &TorusPoint) -> Result<TorusPoint> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        Ok(TorusPoint {
            s: wrap_unit(self.s + other.s),
            t: wrap_unit(self.t + other.t),
            lattice: self.lattice.clone(),
        })
    }

    pub fn sub(&self, other: &TorusPoint) -> Result<TorusPoint> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        Ok(TorusPoint {
            s: wrap_unit(self.s - other.s),
            t: wrap_unit(self.t - other.t),
            lattice: self.lattice.clone(),
        })
    }

    /// Shift by a complex offset (reduced back into the parallelogram).
    pub fn translate(&self, dz: Complex64) -> Result<TorusPoint> {
        TorusPoint::reduce(self.z() + dz, &self.lattice)
    }

    /// Distance on the torus: the minimum of `|a - b - lambda|` over the nine
    /// lattice translates `lambda` neighboring the difference.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        let ds = self.s - other.s;
        let dt = self.t - other.t;
        let mut best = f64::INFINITY;
        for m in [-1.0, 0.0, 1.0] {
            for k in [-1.0, 0.0, 1.0] {
                let d = self.lattice.point_from_coords(ds - m, dt - k).norm();
                best = best.min(d);
            }
        }
        best
    }

    /// Distance from a raw complex number (same reduction semantics).
    pub fn distance_to_z(&self, z: Complex64) -> f64 {
        match TorusPoint::reduce(z, &self.lattice) {
            Ok(p) => self.distance(&p),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Reduce `z` into the half-open fundamental parallelogram of `lat`.
pub fn reduce_to_fundamental(z: Complex64, lat: &Lattice) -> Result<TorusPoint> {
    TorusPoint::reduce(z, lat)
}

/// An exact `n`-torsion point `(a*omega1 + b*omega2)/n` of the torus, stored
/// in canonical form: `0 <= a, b < n` and `gcd(a, b, n) = 1`, so the stored
/// level always equals the order.
#[derive(Debug, Clone, Serialize)]
pub struct TorsionPoint {
    a: u64,
    b: u64,
    n: u64,
    lattice: Lattice,
}

impl PartialEq for TorsionPoint {
    fn eq(&self, other: &Self) -> bool {
        // Canonical forms are unique, so embeddings coincide iff fields agree.
        self.a == other.a && self.b == other.b && self.n == other.n && self.lattice == other.lattice
    }
}

impl Eq for TorsionPoint {}

impl std::hash::Hash for TorsionPoint {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.a.hash(state);
        self.b.hash(state);
        self.n.hash(state);
        self.lattice.tau.re.to_bits().hash(state);
        self.lattice.tau.im.to_bits().hash(state);
    }
}

impl std::fmt::Display for TorsionPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{},{}/{}", self.a, self.n, self.b, self.n)
    }
}

impl TorsionPoint {
    /// Build `(a, b)/n`, canonicalizing signs mod `n` and gcd-reducing the
    /// level.
    pub fn new(a: i64, b: i64, n: u64, lattice: &Lattice) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroLevel);
        }
        let m = n as i64;
        let a = (a.rem_euclid(m)) as u64;
        let b = (b.rem_euclid(m)) as u64;
        let g = gcd(gcd(a, b), n);
        Ok(TorsionPoint {
            a: a / g,
            b: b / g,
            n: n / g,
            lattice: lattice.clone(),
        })
    }

    /// The identity of `J(E)`.
    pub fn identity(lattice: &Lattice) -> Self {
        TorsionPoint {
            a: 0,
            b: 0,
            n: 1,
            lattice: lattice.clone(),
        }
    }

    /// Torsion specs are written `a/n,b/n`; mixed denominators are merged at
    /// their lcm.
    pub fn parse(s: &str, lattice: &Lattice) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            what: "torsion point",
            input: s.into(),
            reason: reason.into(),
        };
        let mut parts = s.trim().splitn(2, ',');
        let frac = |part: Option<&str>| -> Result<(i64, u64)> {
            let p = part.ok_or_else(|| err("expected \"a/n,b/n\""))?.trim();
            let (num, den) = p.split_once('/').ok_or_else(|| err("missing '/'"))?;
            let num = num
                .trim()
                .parse::<i64>()
                .map_err(|e| err(&format!("bad numerator: {e}")))?;
            let den = den
                .trim()
                .parse::<u64>()
                .map_err(|e| err(&format!("bad denominator: {e}")))?;
            if den == 0 {
                return Err(Error::ZeroLevel);
            }
            Ok((num, den))
        };
        let (a, n1) = frac(parts.next())?;
        let (b, n2) = frac(parts.next())?;
        let n = lcm(n1, n2);
        TorsionPoint::new(a * (n / n1) as i64, b * (n / n2) as i64, n, lattice)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Canonical coordinates `(a, b, n)` with `gcd(a, b, n) = 1`.
    pub fn coords(&self) -> (u64, u64, u64) {
        (self.a, self.b, self.n)
    }

    /// Smallest `k >= 1` with `k*t = 0`; equals the canonical level.
    pub fn order(&self) -> u64 {
        self.n
    }

    pub fn is_identity(&self) -> bool {
        self.n == 1
    }

    /// Coordinates rescaled to a multiple `level` of the order.
    pub fn at_level(&self, level: u64) -> Result<(u64, u64)> {
        if level == 0 || !level.is_multiple_of(self.n) {
            return Err(Error::LevelNotDivisible {
                n: self.n,
                m: level,
            });
        }
        let d = level / self.n;
        Ok((self.a * d, self.b * d))
    }

    /// Embed into the torus as `(a + b*tau)/n`.
    pub fn embed(&self) -> TorusPoint {
        TorusPoint {
            s: self.a as f64 / self.n as f64,
            t: self.b as f64 / self.n as f64,
            lattice: self.lattice.clone(),
        }
    }

    /// The lift `(a + b*tau)/n` of the embedding, with `0 <= a, b < n`.
    pub fn lift(&self) -> Complex64 {
        self.embed().z()
    }

    pub fn add(&self, other: &TorsionPoint) -> Result<TorsionPoint> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        let n = lcm(self.n, other.n);
        let (a1, b1) = self.at_level(n)?;
        let (a2, b2) = other.at_level(n)?;
        TorsionPoint::new(
            ((a1 + a2) % n) as i64,
            ((b1 + b2) % n) as i64,
            n,
            &self.lattice,
        )
    }

    pub fn neg(&self) -> TorsionPoint {
        TorsionPoint::new(-(self.a as i64), -(self.b as i64), self.n, &self.lattice)
            .expect("level stays positive")
    }

    pub fn sub(&self, other: &TorsionPoint) -> Result<TorsionPoint> {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: i64) -> TorsionPoint {
        let m = self.n as i64;
        let k = k.rem_euclid(m);
        TorsionPoint::new(k * self.a as i64, k * self.b as i64, self.n, &self.lattice)
            .expect("level stays positive")
    }

    /// Intersection pairing `a1*b2 - a2*b1` reduced mod the lcm level of the
    /// two points.
    pub fn pairing(&self, other: &TorsionPoint) -> Result<u64> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        let n = lcm(self.n, other.n);
        pairing_at_level(self, other, n)
    }
}

/// Intersection pairing evaluated in `J(E)_level`; both orders must divide
/// `level`.
pub fn pairing_at_level(t1: &TorsionPoint, t2: &TorsionPoint, level: u64) -> Result<u64> {
    if t1.lattice != t2.lattice {
        return Err(Error::LatticeMismatch);
    }
    let (a1, b1) = t1.at_level(level)?;
    let (a2, b2) = t2.at_level(level)?;
    let p = (a1 as i128) * (b2 as i128) - (a2 as i128) * (b1 as i128);
    Ok(p.rem_euclid(level as i128) as u64)
}

/// All of `J(E)_n` (or, with `exact_order` set, only the elements of order
/// exactly `n`), in a deterministic row-major order.
pub fn enumerate_torsion(
    n: u64,
    exact_order: bool,
    lattice: &Lattice,
) -> Result<Vec<TorsionPoint>> {
    if n == 0 {
        return Err(Error::ZeroLevel);
    }
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if exact_order && gcd(gcd(a, b), n) != 1 {
                continue;
            }
            out.push(TorsionPoint::new(a as i64, b as i64, n, lattice)?);
        }
    }
    Ok(out)
}

/// Closure of a nonempty generator list under addition and negation, returned
/// sorted by `(level, a, b)`.
pub fn subgroup_from_generators(gens: &[TorsionPoint]) -> Result<Vec<TorsionPoint>> {
    let first = gens
        .first()
        .ok_or_else(|| Error::Precondition("generator list is empty".into()))?;
    let lattice = first.lattice.clone();
    for g in gens {
        if g.lattice != lattice {
            return Err(Error::LatticeMismatch);
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut elements = Vec::new();
    let mut work = vec![TorsionPoint::identity(&lattice)];
    for g in gens {
        work.push(g.clone());
    }
    while let Some(t) = work.pop() {
        if !seen.insert(t.clone()) {
            continue;
        }
        for g in gens {
            work.push(t.add(g)?);
        }
        elements.push(t);
    }
    elements.sort_by_key(|t| (t.n, t.a, t.b));
    Ok(elements)
}
