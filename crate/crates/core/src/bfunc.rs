//! The translate-sum functions `b_{tau,p}` and their zero structure.
//!
//! For a torus point `p` and a torsion `tau` of order `n >= 2`, `b_{tau,p}`
//! is the meromorphic function with simple poles at `p` (residue +1, our
//! normalization) and `p - tau` (residue -1) and no other poles, pinned down
//! by the vanishing translate sum
//!
//! ```text
//! b(z) + b(z + tau) + ... + b(z + (n-1) tau) = 0.
//! ```
//!
//! The construction is `b(z) = zeta(z - p) - zeta(z - p + tau) + c`, where
//! the additive constant has the closed telescoping form
//! `c = (a*eta1 + b*eta2)/n` for the lift `tau = (a + b*tau_lat)/n`. The
//! constant is never trusted: every constructed function has its translate
//! sum verified numerically, which catches lift and orientation mistakes.
//!
//! Zeros are located by the argument principle (winding counts on a
//! subdivided, jittered period parallelogram) and polished by Newton using
//! `b'(z) = -P(z - p) + P(z - p + tau)`. Every `b` has exactly two zeros
//! `q1, q2` with `q1 + q2 = 2p - tau` on the torus.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Error;
use crate::theta::{
    quasi_periods_with, weierstrass_p_prime_with, weierstrass_p_with, weierstrass_zeta_with,
    QuasiPeriods,
};
use crate::tol::Tolerances;
use crate::torus::{Lattice, TorsionPoint, TorusPoint};
use crate::zeros::zeros_in_parallelogram;
use crate::Result;

/// A constructed, verified translate-sum function.
#[derive(Debug, Clone)]
pub struct BFunction {
    lattice: Lattice,
    p: TorusPoint,
    t: TorsionPoint,
    t_lift: Complex64,
    c: Complex64,
    quasi: QuasiPeriods,
    tol: Tolerances,
    seed: u64,
}

/// The two zeros of a `b` function, with multiplicity and transversality
/// data.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroPair {
    pub q1: TorusPoint,
    pub q2: TorusPoint,
    /// Set when the two zeros coincide within the cluster tolerance; `q1`
    /// and `q2` are then the same point.
    pub double_zero: bool,
    /// `|b'(q1)|`, `|b'(q2)|`.
    pub deriv_q1: f64,
    pub deriv_q2: f64,
    /// Winding of the search contour; zero for a healthy elliptic function.
    pub boundary_winding: i64,
}

impl ZeroPair {
    pub fn points(&self) -> [&TorusPoint; 2] {
        [&self.q1, &self.q2]
    }

    /// Smallest torus distance from `q` to either zero.
    pub fn distance_to(&self, q: &TorusPoint) -> f64 {
        self.q1.distance(q).min(self.q2.distance(q))
    }

    /// Smallest torus distance between the two zero sets.
    pub fn min_distance(&self, other: &ZeroPair) -> f64 {
        let mut best = f64::INFINITY;
        for a in self.points() {
            for b in other.points() {
                best = best.min(a.distance(b));
            }
        }
        best
    }
}

/// Outcome of comparing two zero sets.
#[derive(Debug, Clone, Serialize)]
pub enum ZeroSetRelation {
    Disjoint { min_distance: f64 },
    SharedPoint { q: TorusPoint },
}

/// Margins `|b(p - eta)|` over the four half-torsions `eta` with `2*eta = tau`.
#[derive(Debug, Clone, Serialize)]
pub struct DoubleZeroReport {
    pub margins: Vec<(TorsionPoint, f64)>,
    pub min_margin: f64,
    pub pass: bool,
}

/// Result of the residue-matched combination `b1(z) + c*b2(z + tau1 - tau2)`.
#[derive(Debug, Clone, Serialize)]
pub struct CombineReport {
    /// Residue-matching constant.
    pub c: Complex64,
    /// Torsion difference `tau1 - tau2` the combination is proportional to.
    pub difference: TorsionPoint,
    /// Mean of the pointwise ratio against the directly constructed
    /// `b_{tau1-tau2,p}`.
    pub ratio: Complex64,
    /// Relative spread of the ratio over the sample points.
    pub spread: f64,
}

fn mix_seed(parts: &[u64]) -> u64 {
    // splitmix64 fold; only needs to be deterministic.
    let mut h = 0x9e3779b97f4a7c15u64;
    for &p in parts {
        h ^= p;
        h = h.wrapping_mul(0xbf58476d1ce4e5b9);
        h ^= h >> 31;
    }
    h
}

/// Deterministic low-discrepancy sample points on the torus that keep a
/// guard distance from the listed points.
fn sample_points(
    lattice: &Lattice,
    count: usize,
    avoid: &[TorusPoint],
    guard: f64,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    let mut s = 0.3819660112501051f64;
    let mut t = 0.2548776662466927f64;
    while out.len() < count {
        s = (s + 0.6180339887498949).fract();
        t = (t + 0.7548776662466927).fract();
        let z = Complex64::new(s, 0.0) + t * lattice.omega2();
        if avoid.iter().all(|p| p.distance_to_z(z) >= guard) {
            out.push(z);
        }
    }
    out
}

impl BFunction {
    /// Build and verify `b_{tau,p}`; `tau` must have order at least 2.
    pub fn construct(p: &TorusPoint, t: &TorsionPoint) -> Result<Self> {
        Self::construct_with(p, t, &Tolerances::default())
    }

    pub fn construct_with(p: &TorusPoint, t: &TorsionPoint, tol: &Tolerances) -> Result<Self> {
        if p.lattice() != t.lattice() {
            return Err(Error::LatticeMismatch);
        }
        let n = t.order();
        if n < 2 {
            return Err(Error::TorsionOrderTooSmall(n));
        }
        let lattice = p.lattice().clone();
        let quasi = quasi_periods_with(&lattice, tol)?;
        let (a, b, _) = t.coords();
        let t_lift = t.lift();
        let c = (a as f64 * quasi.eta1 + b as f64 * quasi.eta2) / n as f64;

        let (ps, pt) = p.coords();
        let tau = lattice.tau();
        let seed = mix_seed(&[
            tau.re.to_bits(),
            tau.im.to_bits(),
            ps.to_bits(),
            pt.to_bits(),
            a,
            b,
            n,
        ]);

        let f = BFunction {
            lattice,
            p: p.clone(),
            t: t.clone(),
            t_lift,
            c,
            quasi,
            tol: *tol,
            seed,
        };

        // Never trust the telescoping constant: check the translate sum at
        // two independent points.
        let avoid = f.pole_points_of_translates();
        for z in sample_points(&f.lattice, 2, &avoid, 0.03) {
            let s = f.translate_sum(z)?;
            if s.norm() > tol.translate_sum {
                return Err(Error::NumericFailure(format!(
                    "translate sum residual {:.3e} at {z} exceeds {:.3e}",
                    s.norm(),
                    tol.translate_sum
                )));
            }
        }
        Ok(f)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn base_point(&self) -> &TorusPoint {
        &self.p
    }

    pub fn torsion(&self) -> &TorsionPoint {
        &self.t
    }

    pub fn order(&self) -> u64 {
        self.t.order()
    }

    /// The additive constant enforcing the vanishing translate sum.
    pub fn constant(&self) -> Complex64 {
        self.c
    }

    pub fn quasi_periods(&self) -> &QuasiPeriods {
        &self.quasi
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Poles `(p, p - tau)`, reduced to the fundamental parallelogram.
    pub fn poles(&self) -> (TorusPoint, TorusPoint) {
        let second = self
            .p
            .sub(&self.t.embed())
            .expect("same lattice by construction");
        (self.p.clone(), second)
    }

    /// Both poles of every translate `z + k*tau`, used to pick sample points
    /// clear of all of them.
    pub fn pole_points_of_translates(&self) -> Vec<TorusPoint> {
        let (p1, p2) = self.poles();
        let mut out = Vec::new();
        for k in 0..self.order() {
            let shift = self.t.scale(k as i64).embed();
            out.push(p1.sub(&shift).expect("same lattice"));
            out.push(p2.sub(&shift).expect("same lattice"));
        }
        out
    }

    fn guard_poles(&self, z: Complex64, threshold: f64) -> Result<()> {
        let (p1, p2) = self.poles();
        for pole in [&p1, &p2] {
            let dist = pole.distance_to_z(z);
            if dist < threshold {
                return Err(Error::PoleProximity {
                    z,
                    dist,
                    threshold,
                });
            }
        }
        Ok(())
    }

    /// Evaluate `b(z)`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.guard_poles(z, self.tol.pole_proximity)?;
        let w = z - self.p.z();
        let za = weierstrass_zeta_with(w, &self.lattice, &self.tol)?;
        let zb = weierstrass_zeta_with(w + self.t_lift, &self.lattice, &self.tol)?;
        Ok(za - zb + self.c)
    }

    /// Evaluate `b'(z) = -P(z - p) + P(z - p + tau)`.
    pub fn eval_derivative(&self, z: Complex64) -> Result<Complex64> {
        self.guard_poles(z, self.tol.pole_proximity)?;
        let w = z - self.p.z();
        let pa = weierstrass_p_with(w, &self.lattice, &self.tol)?;
        let pb = weierstrass_p_with(w + self.t_lift, &self.lattice, &self.tol)?;
        Ok(pb - pa)
    }

    /// `sum_{k=0}^{n-1} b(z + k*tau)`; vanishes for a valid construction.
    pub fn translate_sum(&self, z: Complex64) -> Result<Complex64> {
        let n = self.order();
        for k in 0..n {
            self.guard_poles(z + k as f64 * self.t_lift, self.tol.translate_pole_guard)?;
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..n {
            sum += self.eval(z + k as f64 * self.t_lift)?;
        }
        Ok(sum)
    }

    /// `sum over all m-torsion lambda of b(z + lambda)`, which equals
    /// `(m^2/n) * translate_sum(z)`; `m` must be a multiple of the order.
    pub fn full_level_sum(&self, z: Complex64, m: u64) -> Result<Complex64> {
        let n = self.order();
        if m == 0 || !m.is_multiple_of(n) {
            return Err(Error::LevelNotDivisible { n, m });
        }
        let tau = self.lattice.tau();
        for i in 0..m {
            for j in 0..m {
                let lambda = (Complex64::new(i as f64, 0.0) + j as f64 * tau) / m as f64;
                self.guard_poles(z + lambda, self.tol.translate_pole_guard)?;
            }
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let lambda = (Complex64::new(i as f64, 0.0) + j as f64 * tau) / m as f64;
                sum += self.eval(z + lambda)?;
            }
        }
        Ok(sum)
    }

    /// Locate the two zeros by winding counts plus Newton refinement, check
    /// the Abel relation `q1 + q2 = 2p - tau`, and report multiplicity.
    pub fn find_zeros(&self) -> Result<ZeroPair> {
        let (p1, p2) = self.poles();
        let poles = [p1, p2];
        let f = |z: Complex64| self.eval(z);
        let df = |z: Complex64| self.eval_derivative(z);
        let outcome =
            zeros_in_parallelogram(&f, &df, &self.lattice, &poles, 2, &self.tol, self.seed)?;

        let mut points: Vec<(TorusPoint, usize)> = Vec::new();
        for z in &outcome.zeros {
            points.push((TorusPoint::reduce(z.z, &self.lattice)?, z.multiplicity));
        }
        let (q1, q2, double) = match points.len() {
            1 if points[0].1 == 2 => (points[0].0.clone(), points[0].0.clone(), true),
            2 if points[0].1 == 1 && points[1].1 == 1 => {
                let mut a = points[0].0.clone();
                let mut b = points[1].0.clone();
                if b.coords() < a.coords() {
                    std::mem::swap(&mut a, &mut b);
                }
                let double = a.distance(&b) <= self.tol.double_zero_cluster;
                (a, b, double)
            }
            _ => {
                return Err(Error::ZeroCountMismatch {
                    expected: 2,
                    found: points.iter().map(|(_, m)| *m as i64).sum(),
                })
            }
        };

        // Abel relation on the torus.
        let lhs = q1.add(&q2)?;
        let rhs = self.p.add(&self.p)?.sub(&self.t.embed())?;
        let abel = lhs.distance(&rhs);
        if abel > self.tol.abel {
            return Err(Error::NumericFailure(format!(
                "Abel relation residual {abel:.3e} exceeds {:.3e}",
                self.tol.abel
            )));
        }

        let deriv_q1 = self.eval_derivative(q1.z())?.norm();
        let deriv_q2 = self.eval_derivative(q2.z())?.norm();
        Ok(ZeroPair {
            q1,
            q2,
            double_zero: double,
            deriv_q1,
            deriv_q2,
            boundary_winding: outcome.boundary_winding,
        })
    }

    /// Evaluate `|b(p - eta)|` for the four `eta` with `2*eta = tau`. All
    /// four must be bounded away from zero on a general lattice.
    pub fn check_no_double_zero(&self) -> Result<DoubleZeroReport> {
        let (a, b, n) = self.t.coords();
        let mut margins = Vec::with_capacity(4);
        let mut min_margin = f64::INFINITY;
        for i in 0..2u64 {
            for j in 0..2u64 {
                let eta = TorsionPoint::new(
                    (a + i * n) as i64,
                    (b + j * n) as i64,
                    2 * n,
                    &self.lattice,
                )?;
                let at = self.p.sub(&eta.embed())?;
                let margin = self.eval(at.z())?.norm();
                min_margin = min_margin.min(margin);
                margins.push((eta, margin));
            }
        }
        Ok(DoubleZeroReport {
            min_margin,
            pass: min_margin >= self.tol.double_zero_margin,
            margins,
        })
    }

    /// Residue of `b` around `center` by a small contour integral.
    pub fn contour_residue(&self, center: &TorusPoint, radius: f64) -> Result<Complex64> {
        circle_residue(|z| self.eval(z), center.z(), radius)
    }
}

/// `(1/2*pi*i) * contour integral` of `f` around a circle; trapezoid rule,
/// exponentially accurate for analytic integrands.
pub fn circle_residue<F>(f: F, center: Complex64, radius: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    const SAMPLES: usize = 64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..SAMPLES {
        let angle = std::f64::consts::TAU * k as f64 / SAMPLES as f64;
        let dir = Complex64::new(angle.cos(), angle.sin());
        let z = center + radius * dir;
        // dz = i * radius * dir * dtheta; the 1/(2*pi*i) cancels the i and 2*pi.
        sum += f(z)? * dir;
    }
    Ok(sum * radius / SAMPLES as f64)
}

/// Compare the zero sets of two `b` functions over the same `(lattice, p)`
/// by torus distance. A refined shared zero matches to ~1e-10, so the
/// cluster tolerance decides cleanly.
pub fn zero_intersection(f1: &BFunction, f2: &BFunction) -> Result<ZeroSetRelation> {
    zero_intersection_of(&f1.find_zeros()?, &f2.find_zeros()?, f1, f2)
}

/// Same classification, reusing zero pairs the caller already computed.
pub fn zero_intersection_of(
    z1: &ZeroPair,
    z2: &ZeroPair,
    f1: &BFunction,
    f2: &BFunction,
) -> Result<ZeroSetRelation> {
    if f1.lattice != f2.lattice || f1.p != f2.p {
        return Err(Error::LatticeMismatch);
    }
    if f1.t == f2.t {
        return Err(Error::DegeneratePair);
    }
    let tol = &f1.tol;
    let mut shared: Option<TorusPoint> = None;
    let mut min_distance = f64::INFINITY;
    for a in z1.points() {
        for b in z2.points() {
            let d = a.distance(b);
            min_distance = min_distance.min(d);
            if d <= tol.cluster {
                if let Some(prev) = &shared {
                    if prev.distance(a) > tol.cluster {
                        return Err(Error::NumericFailure(
                            "two distinct shared zeros; the Abel relation forbids this".into(),
                        ));
                    }
                } else {
                    shared = Some(a.clone());
                }
            }
        }
    }
    match shared {
        Some(q) => Ok(ZeroSetRelation::SharedPoint { q }),
        None => Ok(ZeroSetRelation::Disjoint { min_distance }),
    }
}

/// Residue-matched combination `b1(z) + c * b2(z + tau1 - tau2)`: cancel the
/// common pole at `p - tau1` and verify the result is proportional to the
/// directly constructed `b_{tau1 - tau2, p}`.
pub fn combine_shifted(f1: &BFunction, f2: &BFunction) -> Result<CombineReport> {
    if f1.lattice != f2.lattice || f1.p != f2.p {
        return Err(Error::LatticeMismatch);
    }
    let delta = f1.t.sub(&f2.t)?;
    if delta.is_identity() {
        return Err(Error::DegeneratePair);
    }
    let shift = f1.t.lift() - f2.t.lift();
    let pole = f1.poles().1; // p - tau1

    // Residues of both summands at the common pole p - tau1.
    let radius = 5e-3;
    let res1 = circle_residue(|z| f1.eval(z), pole.z(), radius)?;
    let res2 = circle_residue(|z| f2.eval(z + shift), pole.z(), radius)?;
    if res2.norm() < 1e-8 {
        return Err(Error::NumericFailure(
            "shifted function has no pole to cancel at p - tau1".into(),
        ));
    }
    let c = -res1 / res2;

    let direct = BFunction::construct_with(&f1.p, &delta, &f1.tol)?;
    let (d1, d2) = direct.poles();
    let mut avoid = f1.pole_points_of_translates();
    avoid.extend(f2.pole_points_of_translates());
    avoid.push(d1);
    avoid.push(d2);
    avoid.push(pole.translate(-shift)?);
    let mut ratios = Vec::with_capacity(10);
    for z in sample_points(&f1.lattice, 10, &avoid, 0.02) {
        let combined = f1.eval(z)? + c * f2.eval(z + shift)?;
        let reference = direct.eval(z)?;
        if reference.norm() < 1e-9 {
            continue;
        }
        ratios.push(combined / reference);
    }
    if ratios.len() < 5 {
        return Err(Error::NumericFailure(
            "not enough usable sample points for the proportionality check".into(),
        ));
    }
    let mean = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
    let spread = ratios
        .iter()
        .map(|r| (r - mean).norm())
        .fold(0.0f64, f64::max)
        / mean.norm().max(1e-300);
    Ok(CombineReport {
        c,
        difference: delta,
        ratio: mean,
        spread,
    })
}

/// The vanishing sum over roots of unity from the nodal-fiber degeneration:
/// `sum_{k=0}^{n-1} w_k/((w_k - 1)(w_k - eta))` with `w_k = eta^k z` and
/// `eta = exp(2*pi*i/n)`.
pub fn nodal_fiber_sum(z: Complex64, n: u64) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::Precondition(format!(
            "nodal fiber sum needs n >= 2, got {n}"
        )));
    }
    let eta = Complex64::from_polar(1.0, std::f64::consts::TAU / n as f64);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut w = z;
    for _ in 0..n {
        let d1 = w - Complex64::new(1.0, 0.0);
        let d2 = w - eta;
        if d1.norm() < 1e-9 || d2.norm() < 1e-9 {
            return Err(Error::PoleProximity {
                z: w,
                dist: d1.norm().min(d2.norm()),
                threshold: 1e-9,
            });
        }
        sum += w / (d1 * d2);
        w *= eta;
    }
    Ok(sum)
}

/// Alternative construction of `b_{tau,p}` through the Weierstrass addition
/// ratio `(P'(w) - P'(u))/(P(w) - P(u))` on the pole basis, with the
/// additive constant solved from the translate-sum linear system instead of
/// the quasi-period form. Used to cross-check [`BFunction`]; the two routes
/// must agree up to one scalar.
pub struct PoleBasisB {
    lattice: Lattice,
    p: TorusPoint,
    p_prime_u: Complex64,
    p_u: Complex64,
    beta: Complex64,
    tol: Tolerances,
}

impl PoleBasisB {
    pub fn construct(p: &TorusPoint, t: &TorsionPoint, tol: &Tolerances) -> Result<Self> {
        if p.lattice() != t.lattice() {
            return Err(Error::LatticeMismatch);
        }
        let n = t.order();
        if n < 2 {
            return Err(Error::TorsionOrderTooSmall(n));
        }
        let lattice = p.lattice().clone();
        let t_lift = t.lift();
        let p_u = weierstrass_p_with(t_lift, &lattice, tol)?;
        let p_prime_u = weierstrass_p_prime_with(t_lift, &lattice, tol)?;
        let mut f = PoleBasisB {
            lattice: lattice.clone(),
            p: p.clone(),
            p_prime_u,
            p_u,
            beta: Complex64::new(0.0, 0.0),
            tol: *tol,
        };

        // Solve L(f + beta) = 0 on the basis {f, 1}: L(1) = n, and L(f) is
        // the constant translate sum, sampled at one safe base point.
        let mut avoid = vec![p.clone()];
        for k in 0..n {
            let shift = t.scale(k as i64).embed();
            avoid.push(p.sub(&shift)?);
            avoid.push(p.add(&shift)?);
        }
        let z0 = sample_points(&lattice, 1, &avoid, 0.04)[0];
        let mut l_f = Complex64::new(0.0, 0.0);
        for k in 0..n {
            l_f += f.eval_unshifted(z0 + k as f64 * t_lift)?;
        }
        f.beta = -l_f / n as f64;
        Ok(f)
    }

    fn eval_unshifted(&self, z: Complex64) -> Result<Complex64> {
        let w = z - self.p.z();
        let pw = weierstrass_p_with(w, &self.lattice, &self.tol)?;
        let denom = pw - self.p_u;
        if denom.norm() < 1e-10 * (1.0 + pw.norm()) {
            return Err(Error::NumericFailure(format!(
                "pole-basis evaluation too close to P(w) = P(u) at {z}"
            )));
        }
        let ppw = weierstrass_p_prime_with(w, &self.lattice, &self.tol)?;
        Ok(-0.5 * (ppw - self.p_prime_u) / denom)
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_unshifted(z)? + self.beta)
    }
}

/// Ratio spread between the zeta-difference and pole-basis constructions at
/// deterministic sample points; both construct the same function up to one
/// scalar, so the spread is pure numerical error.
pub fn uniqueness_cross_check(p: &TorusPoint, t: &TorsionPoint, tol: &Tolerances) -> Result<f64> {
    let direct = BFunction::construct_with(p, t, tol)?;
    let alt = PoleBasisB::construct(p, t, tol)?;
    let mut avoid = direct.pole_points_of_translates();
    avoid.push(p.add(&t.embed())?); // removable singularity of the pole-basis route
    let mut ratios = Vec::new();
    for z in sample_points(&direct.lattice, 10, &avoid, 0.03) {
        let a = direct.eval(z)?;
        let b = alt.eval(z)?;
        if b.norm() < 1e-9 {
            continue;
        }
        ratios.push(a / b);
    }
    if ratios.len() < 5 {
        return Err(Error::NumericFailure(
            "not enough usable points for the uniqueness cross-check".into(),
        ));
    }
    let mean = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
    Ok(ratios
        .iter()
        .map(|r| (r - mean).norm())
        .fold(0.0f64, f64::max)
        / mean.norm().max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_lattice(rng: &mut ChaCha8Rng) -> Lattice {
        Lattice::random_in_box(rng)
    }

    #[test]
    fn construct_rejects_identity_torsion() {
        let lat = Lattice::square();
        let p = TorusPoint::zero(&lat);
        let t = TorsionPoint::new(0, 0, 2, &lat).unwrap();
        assert!(matches!(
            BFunction::construct(&p, &t),
            Err(Error::TorsionOrderTooSmall(1))
        ));
    }

    #[test]
    fn translate_sum_vanishes_for_two_torsion_on_square_lattice() {
        let lat = Lattice::square();
        let p = TorusPoint::zero(&lat);
        let t = TorsionPoint::new(1, 0, 2, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        let s = f.translate_sum(c(0.23, 0.31)).unwrap();
        assert!(s.norm() <= 1e-10, "residual {}", s.norm());
    }

    #[test]
    fn translate_sum_vanishes_for_order_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t = TorsionPoint::new(1, 2, 3, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        let avoid = f.pole_points_of_translates();
        let mut checked = 0;
        while checked < 20 {
            let z = TorusPoint::random(&mut rng, &lat).z();
            if avoid.iter().any(|q| q.distance_to_z(z) < 0.02) {
                continue;
            }
            let s = f.translate_sum(z).unwrap();
            assert!(s.norm() <= 1e-9, "residual {} at {z}", s.norm());
            checked += 1;
        }
    }

    #[test]
    fn translate_sum_small_for_order_six_over_many_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t = TorsionPoint::new(1, 2, 6, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        let avoid = f.pole_points_of_translates();
        let mut max: f64 = 0.0;
        let mut checked = 0;
        while checked < 50 {
            let z = TorusPoint::random(&mut rng, &lat).z();
            if avoid.iter().any(|q| q.distance_to_z(z) < 0.02) {
                continue;
            }
            max = max.max(f.translate_sum(z).unwrap().norm());
            checked += 1;
        }
        assert!(max <= 1e-8, "max residual {max}");
    }

    #[test]
    fn shifted_constant_sums_to_n_times_constant() {
        let lat = Lattice::square();
        let p = TorusPoint::zero(&lat);
        let t = TorsionPoint::new(1, 1, 2, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        // (b+1) summed over the n translates picks up n.
        let z = c(0.27, 0.41);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..2 {
            sum += f.eval(z + k as f64 * f.t_lift).unwrap() + c(1.0, 0.0);
        }
        assert!((sum - c(2.0, 0.0)).norm() <= 1e-9);
    }

    #[test]
    fn residues_are_plus_and_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t = TorsionPoint::new(1, 0, 3, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        let (p1, p2) = f.poles();

        // Laurent residue probes: the symmetric average kills the regular
        // part to O(eps^2).
        let eps = 1e-4;
        let probe = |pole: &TorusPoint| {
            let plus = f.eval(pole.z() + c(eps, 0.0)).unwrap();
            let minus = f.eval(pole.z() - c(eps, 0.0)).unwrap();
            0.5 * (plus - minus) * c(eps, 0.0)
        };
        assert!((probe(&p1) - c(1.0, 0.0)).norm() <= 1e-5);
        assert!((probe(&p2) + c(1.0, 0.0)).norm() <= 1e-5);

        // Contour residues.
        let r1 = f.contour_residue(&p1, 1e-2).unwrap();
        let r2 = f.contour_residue(&p2, 1e-2).unwrap();
        assert!((r1 - c(1.0, 0.0)).norm() <= 1e-8);
        assert!((r2 + c(1.0, 0.0)).norm() <= 1e-8);
    }

    #[test]
    fn eval_is_doubly_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t = TorsionPoint::new(1, 1, 4, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        let avoid = f.pole_points_of_translates();
        let mut checked = 0;
        while checked < 10 {
            let z = TorusPoint::random(&mut rng, &lat).z();
            if avoid.iter().any(|q| q.distance_to_z(z) < 0.05) {
                continue;
            }
            let base = f.eval(z).unwrap();
            for shift in [lat.omega1(), lat.omega2(), lat.omega1() + lat.omega2()] {
                let v = f.eval(z + shift).unwrap();
                assert!((v - base).norm() <= 1e-9 * (1.0 + base.norm()));
            }
            checked += 1;
        }
    }

    #[test]
    fn eval_rejects_pole_neighborhood() {
        let lat = Lattice::square();
        let p = TorusPoint::zero(&lat);
        let t = TorsionPoint::new(1, 0, 2, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        assert!(matches!(
            f.eval(c(1e-12, 0.0)),
            Err(Error::PoleProximity { .. })
        ));
        assert!(matches!(
            f.eval(c(0.5, 0.0) + c(1e-12, 0.0)),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn two_torsion_zeros_are_the_other_two_torsion_translates() {
        let lat = Lattice::square();
        let p = TorusPoint::zero(&lat);
        let t = TorsionPoint::new(1, 0, 2, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        let zp = f.find_zeros().unwrap();
        assert!(!zp.double_zero);
        // Expected: i/2 and (1+i)/2.
        let e1 = TorusPoint::reduce(c(0.0, 0.5), &lat).unwrap();
        let e2 = TorusPoint::reduce(c(0.5, 0.5), &lat).unwrap();
        assert!(zp.distance_to(&e1) <= 1e-8, "missing i/2");
        assert!(zp.distance_to(&e2) <= 1e-8, "missing (1+i)/2");
        assert_eq!(zp.boundary_winding, 0);
    }

    #[test]
    fn abel_relation_holds_for_random_constructions() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..5 {
            let lat = random_lattice(&mut rng);
            let p = TorusPoint::random(&mut rng, &lat);
            let a = rng.random_range(0..5i64);
            let b = rng.random_range(1..5i64);
            let t = TorsionPoint::new(a, b, 5, &lat).unwrap();
            let f = BFunction::construct(&p, &t).unwrap();
            let zp = f.find_zeros().unwrap();
            let lhs = zp.q1.add(&zp.q2).unwrap();
            let rhs = p.add(&p).unwrap().sub(&t.embed()).unwrap();
            assert!(lhs.distance(&rhs) <= 1e-8);
        }
    }

    #[test]
    fn full_level_sum_matches_translate_sum_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t = TorsionPoint::new(1, 0, 2, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        let avoid = f.pole_points_of_translates();
        let z = sample_points(&lat, 40, &avoid, 0.05)
            .into_iter()
            .find(|z| {
                // every 4-torsion translate must clear the poles as well
                let tau = lat.tau();
                (0..4).all(|i| {
                    (0..4).all(|j| {
                        let lambda = (c(i as f64, 0.0) + j as f64 * tau) / 4.0;
                        avoid.iter().all(|q| q.distance_to_z(z + lambda) > 0.02)
                    })
                })
            })
            .unwrap();
        let lhs = f.full_level_sum(z, 4).unwrap();
        let rhs = f.translate_sum(z).unwrap() * (16.0 / 2.0);
        assert!((lhs - rhs).norm() <= 1e-7);
        assert!(lhs.norm() <= 1e-7); // normalized b sums to zero
        assert!(matches!(
            f.full_level_sum(z, 3),
            Err(Error::LevelNotDivisible { .. })
        ));

        // Constant-shifted variant: summing b + 1 over the 16 translates
        // picks up exactly m^2.
        let tau = lat.tau();
        let mut shifted_sum = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let lambda = (c(i as f64, 0.0) + j as f64 * tau) / 4.0;
                shifted_sum += f.eval(z + lambda).unwrap() + c(1.0, 0.0);
            }
        }
        assert!((shifted_sum - c(16.0, 0.0)).norm() <= 1e-7);
    }

    #[test]
    fn no_double_zero_on_a_generic_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t = TorsionPoint::new(1, 0, 2, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();
        let report = f.check_no_double_zero().unwrap();
        assert!(report.pass);
        assert_eq!(report.margins.len(), 4);
        assert!(report.min_margin >= 1e-3);
        // Consistency with the zero structure: no double zero found either.
        assert!(!f.find_zeros().unwrap().double_zero);
    }

    #[test]
    fn two_torsion_pair_shares_the_third_translate() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t1 = TorsionPoint::new(1, 0, 2, &lat).unwrap();
        let t2 = TorsionPoint::new(0, 1, 2, &lat).unwrap();
        let t3 = TorsionPoint::new(1, 1, 2, &lat).unwrap();
        let f1 = BFunction::construct(&p, &t1).unwrap();
        let f2 = BFunction::construct(&p, &t2).unwrap();
        match zero_intersection(&f1, &f2).unwrap() {
            ZeroSetRelation::SharedPoint { q } => {
                let expected = p.sub(&t3.embed()).unwrap();
                assert!(q.distance(&expected) <= 1e-6);
            }
            other => panic!("expected a shared point, got {other:?}"),
        }
    }

    #[test]
    fn mixed_order_pair_is_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t1 = TorsionPoint::new(1, 0, 2, &lat).unwrap();
        let t2 = TorsionPoint::new(0, 1, 3, &lat).unwrap();
        let f1 = BFunction::construct(&p, &t1).unwrap();
        let f2 = BFunction::construct(&p, &t2).unwrap();
        assert!(matches!(
            zero_intersection(&f1, &f2).unwrap(),
            ZeroSetRelation::Disjoint { .. }
        ));
    }

    #[test]
    fn combine_two_torsions_gives_the_third_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t1 = TorsionPoint::new(1, 0, 2, &lat).unwrap();
        let t2 = TorsionPoint::new(0, 1, 2, &lat).unwrap();
        let f1 = BFunction::construct(&p, &t1).unwrap();
        let f2 = BFunction::construct(&p, &t2).unwrap();
        let report = combine_shifted(&f1, &f2).unwrap();
        assert_eq!(report.difference.coords(), (1, 1, 2));
        assert!(report.spread <= 1e-7, "spread {}", report.spread);
        assert!(report.ratio.norm() > 1e-6);

        // The combination is proportional to b_{tau3,p}, whose zeros are
        // p - tau1 and p - tau2.
        let direct = BFunction::construct(&p, &report.difference).unwrap();
        let zp = direct.find_zeros().unwrap();
        assert!(zp.distance_to(&p.sub(&t1.embed()).unwrap()) <= 1e-8);
        assert!(zp.distance_to(&p.sub(&t2.embed()).unwrap()) <= 1e-8);
    }

    #[test]
    fn combine_order_four_with_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t1 = TorsionPoint::new(1, 0, 4, &lat).unwrap();
        let t2 = t1.neg();
        let f1 = BFunction::construct(&p, &t1).unwrap();
        let f2 = BFunction::construct(&p, &t2).unwrap();
        let report = combine_shifted(&f1, &f2).unwrap();
        assert_eq!(report.difference.order(), 2);
        assert!(report.spread <= 1e-7, "spread {}", report.spread);
    }

    #[test]
    fn nodal_fiber_sum_examples() {
        // n = 2: the two terms cancel identically.
        let s = nodal_fiber_sum(c(0.7, 0.2), 2).unwrap();
        assert!(s.norm() <= 1e-15);

        let s = nodal_fiber_sum(c(1.3, -0.4), 5).unwrap();
        assert!(s.norm() <= 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut max: f64 = 0.0;
        for _ in 0..100 {
            let z = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            match nodal_fiber_sum(z, 12) {
                Ok(s) => max = max.max(s.norm()),
                Err(Error::PoleProximity { .. }) => continue,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(max <= 1e-10, "max residual {max}");

        assert!(nodal_fiber_sum(c(0.5, 0.5), 1).is_err());
        assert!(matches!(
            nodal_fiber_sum(c(1.0, 0.0), 4),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn uniqueness_cross_check_small_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t = TorsionPoint::new(1, 2, 5, &lat).unwrap();
        let spread = uniqueness_cross_check(&p, &t, &Tolerances::default()).unwrap();
        assert!(spread <= 1e-8, "spread {spread}");
    }

    #[test]
    fn construction_transports_under_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let lat = random_lattice(&mut rng);
        let p = TorusPoint::random(&mut rng, &lat);
        let t = TorsionPoint::new(1, 1, 3, &lat).unwrap();
        let at_p = BFunction::construct(&p, &t).unwrap();
        let at_zero = BFunction::construct(&TorusPoint::zero(&lat), &t).unwrap();
        let avoid = at_p.pole_points_of_translates();
        for z in sample_points(&lat, 5, &avoid, 0.05) {
            let direct = at_p.eval(z).unwrap();
            let transported = at_zero.eval(z - p.z()).unwrap();
            assert!((direct - transported).norm() <= 1e-10 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn different_lifts_give_the_same_function() {
        // The constant c depends on the lift, b itself does not. Compare the
        // canonical lift against a manually shifted one.
        let lat = Lattice::new(c(0.21, 1.37)).unwrap();
        let p = TorusPoint::reduce(c(0.3, 0.4), &lat).unwrap();
        let t = TorsionPoint::new(1, 0, 2, &lat).unwrap();
        let f = BFunction::construct(&p, &t).unwrap();

        // Shifted lift: tau' = tau + omega2; same torsion class.
        let quasi = quasi_periods_with(&lat, &Tolerances::default()).unwrap();
        let lift2 = t.lift() + lat.omega2();
        let c2 = (1.0 * quasi.eta1 + (0.0 + 2.0) * quasi.eta2) / 2.0;
        let eval2 = |z: Complex64| -> Complex64 {
            let w = z - p.z();
            let za = weierstrass_zeta_with(w, &lat, &Tolerances::default()).unwrap();
            let zb = weierstrass_zeta_with(w + lift2, &lat, &Tolerances::default()).unwrap();
            za - zb + c2
        };
        let avoid = f.pole_points_of_translates();
        for z in sample_points(&lat, 5, &avoid, 0.05) {
            let v1 = f.eval(z).unwrap();
            let v2 = eval2(z);
            assert!((v1 - v2).norm() <= 1e-9 * (1.0 + v1.norm()));
        }
    }
}
