//! Jacobi theta series and the Weierstrass functions built from them.
//!
//! Everything here works on a lattice normalized to `Z + Z*tau` with `tau` in
//! the modular fundamental domain, where the nome `q = exp(i*pi*tau)` has
//! `|q| <= exp(-pi*sqrt(3)/2) ~ 0.0658` and the q-series converge in a
//! handful of terms.
//!
//! The series used throughout is
//!
//! ```text
//! theta1(w, q) = 2 * sum_{j>=0} (-1)^j q^{(j+1/2)^2} sin((2j+1) w)
//! ```
//!
//! with zeros at `w = pi*(m + k*tau)`. The Weierstrass functions on the torus
//! coordinate `z` (lattice `Z + Z*tau`) come from the logarithmic derivative
//! `r(w) = theta1'(w)/theta1(w)`:
//!
//! ```text
//! zeta(z) = eta1 * z + pi * r(pi z)
//! P(z)    = -zeta'(z),      P'(z) = -zeta''(z)
//! eta1    = (pi^2/3) * S3/S1,   S_k = sum (-1)^j (2j+1)^k q^{j(j+1)}
//! eta2    = eta1 * tau - 2*pi*i        (Legendre relation, verified)
//! ```

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Error;
use crate::tol::Tolerances;
use crate::torus::{Lattice, TorusPoint};
use crate::Result;

const PI: f64 = std::f64::consts::PI;

/// Increments of the Weierstrass zeta function under the two periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiPeriods {
    pub eta1: Complex64,
    pub eta2: Complex64,
}

impl QuasiPeriods {
    /// Increment of zeta under translation by the lattice vector
    /// `m*omega1 + k*omega2`.
    pub fn increment(&self, m: f64, k: f64) -> Complex64 {
        m * self.eta1 + k * self.eta2
    }
}

/// theta1 and its first three w-derivatives, divided by the common prefactor
/// `2*q^{1/4}`. Ratios of these are what the Weierstrass layer consumes.
struct ThetaStack {
    t0: Complex64,
    t1: Complex64,
    t2: Complex64,
    t3: Complex64,
}

fn theta_stack(w: Complex64, q: Complex64, series_rel: f64) -> Result<ThetaStack> {
    let qn = q.norm();
    if !qn.is_finite() || qn >= 0.999 {
        return Err(Error::NomeOutOfRange(qn));
    }
    let qq = q * q;

    let (mut s, mut c) = (w.sin(), w.cos());
    // Double-angle step for sin/cos((2j+1) w).
    let s2 = 2.0 * s * c;
    let c2 = c * c - s * s;

    let mut t0 = Complex64::new(0.0, 0.0);
    let mut t1 = t0;
    let mut t2 = t0;
    let mut t3 = t0;

    let mut coeff = Complex64::new(1.0, 0.0); // (-1)^j q^{j(j+1)}
    let mut qstep = Complex64::new(1.0, 0.0); // q^{2j}
    let mut running = 0.0f64;
    let mut small_streak = 0;

    for j in 0..1024u32 {
        let odd = (2 * j + 1) as f64;
        let odd2 = odd * odd;
        let cs = coeff * s;
        let cc = coeff * c;
        t0 += cs;
        t1 += odd * cc;
        t2 -= odd2 * cs;
        t3 -= odd2 * odd * cc;

        let term = coeff.norm() * odd2 * odd * s.norm().max(c.norm());
        running = running.max(term);
        if term <= series_rel * running && j >= 2 {
            small_streak += 1;
            if small_streak >= 2 {
                break;
            }
        } else {
            small_streak = 0;
        }

        // Advance to j+1: coefficient picks up -q^{2(j+1)}, angle advances by 2w.
        qstep *= qq;
        coeff *= -qstep;
        let ns = s * c2 + c * s2;
        let nc = c * c2 - s * s2;
        s = ns;
        c = nc;
        if j == 1023 {
            return Err(Error::NumericFailure(format!(
                "theta series did not converge for |q| = {qn}"
            )));
        }
    }

    Ok(ThetaStack { t0, t1, t2, t3 })
}

/// Jacobi theta1 with explicit nome, `2 q^{1/4} sum (-1)^j q^{j(j+1)}
/// sin((2j+1) w)`, with the principal branch of `q^{1/4}`.
pub fn theta1(w: Complex64, q: Complex64) -> Result<Complex64> {
    theta1_with(w, q, &Tolerances::default())
}

pub fn theta1_with(w: Complex64, q: Complex64, tol: &Tolerances) -> Result<Complex64> {
    let stack = theta_stack(w, q, tol.series_rel)?;
    Ok(2.0 * q.powf(0.25) * stack.t0)
}

/// d/dw of [`theta1`].
pub fn theta1_dw(w: Complex64, q: Complex64) -> Result<Complex64> {
    let stack = theta_stack(w, q, Tolerances::default().series_rel)?;
    Ok(2.0 * q.powf(0.25) * stack.t1)
}

fn nome(lat: &Lattice) -> Complex64 {
    (Complex64::new(0.0, PI) * lat.tau()).exp()
}

/// `eta1` from the weight-1 and weight-3 theta coefficient sums.
fn eta1_of(q: Complex64, series_rel: f64) -> Complex64 {
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut s3 = s1;
    let mut coeff = Complex64::new(1.0, 0.0);
    let mut qstep = Complex64::new(1.0, 0.0);
    let qq = q * q;
    for j in 0..512u32 {
        let odd = (2 * j + 1) as f64;
        s1 += odd * coeff;
        s3 += odd * odd * odd * coeff;
        if coeff.norm() * odd * odd * odd <= series_rel && j >= 2 {
            break;
        }
        qstep *= qq;
        coeff *= -qstep;
    }
    PI * PI / 3.0 * s3 / s1
}

fn etas(lat: &Lattice, series_rel: f64) -> (Complex64, Complex64) {
    let q = nome(lat);
    let eta1 = eta1_of(q, series_rel);
    let eta2 = eta1 * lat.tau() - Complex64::new(0.0, 2.0 * PI);
    (eta1, eta2)
}

/// Split `z` into a reduced representative plus integer period multiples.
fn reduce_with_periods(z: Complex64, lat: &Lattice) -> Result<(Complex64, f64, f64)> {
    let p = TorusPoint::reduce(z, lat)?;
    let z0 = p.z();
    // The period multiples are integers, so rounding the residual is exact.
    let k = ((z.im - z0.im) / lat.tau().im).round();
    let m = (z.re - z0.re - k * lat.tau().re).round();
    Ok((z0, m, k))
}

fn guard_pole(z0: Complex64, lat: &Lattice, threshold: f64) -> Result<()> {
    let p = TorusPoint::reduce(z0, lat)?;
    let dist = p.distance(&TorusPoint::zero(lat));
    if dist < threshold {
        return Err(Error::PoleProximity {
            z: z0,
            dist,
            threshold,
        });
    }
    Ok(())
}

/// Weierstrass zeta on `Z + Z*tau`: odd, `zeta(z) - 1/z -> 0` at the origin,
/// quasi-periodic with increments `eta1`, `eta2`.
pub fn weierstrass_zeta(z: Complex64, lat: &Lattice) -> Result<Complex64> {
    weierstrass_zeta_with(z, lat, &Tolerances::default())
}

pub fn weierstrass_zeta_with(z: Complex64, lat: &Lattice, tol: &Tolerances) -> Result<Complex64> {
    let (z0, m, k) = reduce_with_periods(z, lat)?;
    guard_pole(z0, lat, tol.pole_proximity)?;
    let q = nome(lat);
    let eta1 = eta1_of(q, tol.series_rel);
    let eta2 = eta1 * lat.tau() - Complex64::new(0.0, 2.0 * PI);
    let stack = theta_stack(PI * z0, q, tol.series_rel)?;
    let r = stack.t1 / stack.t0;
    Ok(eta1 * z0 + PI * r + m * eta1 + k * eta2)
}

/// Weierstrass P function: even, elliptic, `P = -zeta'`.
pub fn weierstrass_p(z: Complex64, lat: &Lattice) -> Result<Complex64> {
    weierstrass_p_with(z, lat, &Tolerances::default())
}

pub fn weierstrass_p_with(z: Complex64, lat: &Lattice, tol: &Tolerances) -> Result<Complex64> {
    let (z0, _, _) = reduce_with_periods(z, lat)?;
    guard_pole(z0, lat, tol.pole_proximity)?;
    let q = nome(lat);
    let eta1 = eta1_of(q, tol.series_rel);
    let stack = theta_stack(PI * z0, q, tol.series_rel)?;
    let r = stack.t1 / stack.t0;
    let r_prime = stack.t2 / stack.t0 - r * r;
    Ok(-eta1 - PI * PI * r_prime)
}

/// Derivative of the Weierstrass P function, `P' = -zeta''`.
pub fn weierstrass_p_prime(z: Complex64, lat: &Lattice) -> Result<Complex64> {
    weierstrass_p_prime_with(z, lat, &Tolerances::default())
}

pub fn weierstrass_p_prime_with(
    z: Complex64,
    lat: &Lattice,
    tol: &Tolerances,
) -> Result<Complex64> {
    let (z0, _, _) = reduce_with_periods(z, lat)?;
    guard_pole(z0, lat, tol.pole_proximity)?;
    let q = nome(lat);
    let stack = theta_stack(PI * z0, q, tol.series_rel)?;
    let r = stack.t1 / stack.t0;
    let r2 = stack.t2 / stack.t0;
    // r'' = T3/T0 - 3 (T2/T0) r + 2 r^3
    let r_second = stack.t3 / stack.t0 - 3.0 * r2 * r + 2.0 * r * r * r;
    Ok(-PI * PI * PI * r_second)
}

/// Zeta evaluated directly from the series without period reduction. Only
/// used to check quasi-periodicity honestly (the reduced path adds the
/// quasi-period increments by construction, so it cannot test them).
fn zeta_unreduced(z: Complex64, lat: &Lattice, tol: &Tolerances) -> Result<Complex64> {
    guard_pole(z, lat, tol.pole_proximity)?;
    let q = nome(lat);
    let eta1 = eta1_of(q, tol.series_rel);
    let stack = theta_stack(PI * z, q, tol.series_rel)?;
    Ok(eta1 * z + PI * stack.t1 / stack.t0)
}

/// Compute the quasi-periods and verify them: the zeta increments at two base
/// points must agree, and the Legendre relation must hold with the `+2*pi*i`
/// orientation.
pub fn quasi_periods(lat: &Lattice) -> Result<QuasiPeriods> {
    quasi_periods_with(lat, &Tolerances::default())
}

pub fn quasi_periods_with(lat: &Lattice, tol: &Tolerances) -> Result<QuasiPeriods> {
    let (eta1, eta2) = etas(lat, tol.series_rel);

    // Independence of the base point, checked against the raw series.
    let tau = lat.tau();
    let base1 = Complex64::new(0.31, 0.0) + 0.17 * tau;
    let base2 = Complex64::new(0.23, 0.0) + 0.41 * tau;
    for (omega, eta) in [(lat.omega1(), eta1), (lat.omega2(), eta2)] {
        for base in [base1, base2] {
            let inc = zeta_unreduced(base + omega, lat, tol)? - zeta_unreduced(base, lat, tol)?;
            if (inc - eta).norm() > tol.legendre.max(1e-12) * (1.0 + eta.norm()) {
                return Err(Error::NumericFailure(format!(
                    "quasi-period increment {inc} at base {base} disagrees with {eta}"
                )));
            }
        }
    }

    let legendre = eta1 * lat.omega2() - eta2 * lat.omega1() - Complex64::new(0.0, 2.0 * PI);
    if legendre.norm() > tol.legendre {
        return Err(Error::NumericFailure(format!(
            "Legendre relation residual {:.3e}",
            legendre.norm()
        )));
    }

    Ok(QuasiPeriods { eta1, eta2 })
}
