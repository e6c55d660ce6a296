//! Argument-principle zero search over a period parallelogram.
//!
//! The search subdivides a jittered copy of the fundamental parallelogram
//! into a 16x16 grid, computes the winding number of the target function
//! around each cell boundary by adaptive phase tracking, and recurses into
//! cells whose zero count (winding plus known pole count) is positive. Cells
//! holding a single zero are finished by Newton iteration; cells that stay
//! multiple below the cluster scale are reported as one zero of higher
//! multiplicity. Any inconsistency -- a zero on a contour, windings that do
//! not telescope, a count that disagrees with the expected total -- discards
//! the attempt and retries with a fresh jitter, so a wrong answer is never
//! returned silently.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::tol::Tolerances;
use crate::torus::{Lattice, TorusPoint};
use crate::Result;

const GRID: usize = 16;
const MAX_ATTEMPTS: u64 = 8;
const MAX_EVALS: u64 = 2_000_000;
const PHASE_DEPTH: u32 = 36;
const ON_CONTOUR: f64 = 1e-12;

pub(crate) struct FoundZero {
    pub z: Complex64,
    pub multiplicity: usize,
}

pub(crate) struct SearchOutcome {
    pub zeros: Vec<FoundZero>,
    /// Sum of all cell windings = winding of the outer boundary; zero for an
    /// elliptic function with as many zeros as poles.
    pub boundary_winding: i64,
}

/// Locate all zeros of the elliptic function `f` (derivative `df`) in one
/// period parallelogram. `poles` lists the simple poles; `expected` is the
/// total zero count demanded by the argument principle.
pub(crate) fn zeros_in_parallelogram<F, D>(
    f: &F,
    df: &D,
    lat: &Lattice,
    poles: &[TorusPoint],
    expected: usize,
    tol: &Tolerances,
    seed: u64,
) -> Result<SearchOutcome>
where
    F: Fn(Complex64) -> Result<Complex64>,
    D: Fn(Complex64) -> Result<Complex64>,
{
    let mut last_err = Error::NumericFailure("zero search did not run".into());
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9e37)));
        let offset = pick_offset(&mut rng, poles);
        let mut search = Search {
            f,
            df,
            lat,
            poles,
            offset,
            tol,
            evals: 0,
        };
        match search.run(expected) {
            Ok(outcome) => return Ok(outcome),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Pick a box offset that keeps every pole away from all grid lines.
fn pick_offset<R: Rng>(rng: &mut R, poles: &[TorusPoint]) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    let mut best_margin = -1.0;
    for _ in 0..96 {
        let cand = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let mut margin: f64 = 1.0;
        for p in poles {
            let (ps, pt) = p.coords();
            let u = frac((ps - cand.0) * GRID as f64);
            let v = frac((pt - cand.1) * GRID as f64);
            margin = margin.min(u.min(1.0 - u)).min(v.min(1.0 - v));
        }
        if margin > best_margin {
            best_margin = margin;
            best = cand;
        }
        if best_margin > 0.25 {
            break;
        }
    }
    best
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[derive(Clone, Copy)]
struct Rect {
    u0: f64,
    v0: f64,
    w: f64,
    h: f64,
}

struct Search<'a, F, D> {
    f: &'a F,
    df: &'a D,
    lat: &'a Lattice,
    poles: &'a [TorusPoint],
    offset: (f64, f64),
    tol: &'a Tolerances,
    evals: u64,
}

impl<'a, F, D> Search<'a, F, D>
where
    F: Fn(Complex64) -> Result<Complex64>,
    D: Fn(Complex64) -> Result<Complex64>,
{
    fn z_at(&self, u: f64, v: f64) -> Complex64 {
        let s = self.offset.0 + u;
        let t = self.offset.1 + v;
        Complex64::new(s + t * self.lat.tau().re, t * self.lat.tau().im)
    }

    /// Pole coordinates relative to the box origin, in `[0,1)^2`.
    fn pole_positions(&self) -> Vec<(f64, f64)> {
        self.poles
            .iter()
            .map(|p| {
                let (ps, pt) = p.coords();
                (frac(ps - self.offset.0), frac(pt - self.offset.1))
            })
            .collect()
    }

    fn poles_in(&self, rect: &Rect) -> usize {
        self.pole_positions()
            .iter()
            .filter(|(u, v)| {
                *u >= rect.u0 && *u < rect.u0 + rect.w && *v >= rect.v0 && *v < rect.v0 + rect.h
            })
            .count()
    }

    fn eval(&mut self, z: Complex64) -> Result<Complex64> {
        self.evals += 1;
        if self.evals > MAX_EVALS {
            return Err(Error::NumericFailure(
                "zero search exceeded its evaluation budget".into(),
            ));
        }
        let v = (self.f)(z)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NumericFailure(format!("non-finite value at {z}")));
        }
        if v.norm() < ON_CONTOUR {
            return Err(Error::NumericFailure(format!(
                "zero sits on a search contour near {z}"
            )));
        }
        Ok(v)
    }

    /// Phase increment along the segment, refined until every step is below
    /// pi/2.
    fn delta_arg(
        &mut self,
        za: Complex64,
        fa: Complex64,
        zb: Complex64,
        fb: Complex64,
        depth: u32,
    ) -> Result<f64> {
        let d = (fb / fa).arg();
        if d.abs() <= std::f64::consts::FRAC_PI_2 {
            return Ok(d);
        }
        if depth == 0 {
            return Err(Error::NumericFailure(
                "phase tracking failed; contour too close to a zero or pole".into(),
            ));
        }
        let zm = 0.5 * (za + zb);
        let fm = self.eval(zm)?;
        Ok(self.delta_arg(za, fa, zm, fm, depth - 1)?
            + self.delta_arg(zm, fm, zb, fb, depth - 1)?)
    }

    fn edge(&mut self, ua: (f64, f64), ub: (f64, f64)) -> Result<f64> {
        const SEGS: usize = 4;
        let mut total = 0.0;
        let mut prev_z = self.z_at(ua.0, ua.1);
        let mut prev_f = self.eval(prev_z)?;
        for k in 1..=SEGS {
            let s = k as f64 / SEGS as f64;
            let z = self.z_at(ua.0 + s * (ub.0 - ua.0), ua.1 + s * (ub.1 - ua.1));
            let fz = self.eval(z)?;
            total += self.delta_arg(prev_z, prev_f, z, fz, PHASE_DEPTH)?;
            prev_z = z;
            prev_f = fz;
        }
        Ok(total)
    }

    fn winding_of_rect(&mut self, rect: &Rect) -> Result<i64> {
        let a = (rect.u0, rect.v0);
        let b = (rect.u0 + rect.w, rect.v0);
        let c = (rect.u0 + rect.w, rect.v0 + rect.h);
        let d = (rect.u0, rect.v0 + rect.h);
        let total = self.edge(a, b)? + self.edge(b, c)? + self.edge(c, d)? + self.edge(d, a)?;
        let w = total / std::f64::consts::TAU;
        let rounded = w.round();
        if (w - rounded).abs() > 0.25 {
            return Err(Error::NumericFailure(format!(
                "winding number {w:.3} is not close to an integer"
            )));
        }
        Ok(rounded as i64)
    }

    fn run(&mut self, expected: usize) -> Result<SearchOutcome> {
        // Shared edge integrals of the 16x16 grid.
        let step = 1.0 / GRID as f64;
        let mut h_edges = vec![[0.0f64; GRID]; GRID + 1];
        let mut v_edges = vec![[0.0f64; GRID + 1]; GRID];
        for (j, row) in h_edges.iter_mut().enumerate() {
            for (i, e) in row.iter_mut().enumerate() {
                let a = (i as f64 * step, j as f64 * step);
                let b = ((i + 1) as f64 * step, j as f64 * step);
                *e = self.edge(a, b)?;
            }
        }
        for (j, row) in v_edges.iter_mut().enumerate() {
            for (i, e) in row.iter_mut().enumerate() {
                let a = (i as f64 * step, j as f64 * step);
                let b = (i as f64 * step, (j + 1) as f64 * step);
                *e = self.edge(a, b)?;
            }
        }

        let mut boundary_winding = 0i64;
        let mut hot = Vec::new();
        for j in 0..GRID {
            for i in 0..GRID {
                let total = h_edges[j][i] + v_edges[j][i + 1] - h_edges[j + 1][i] - v_edges[j][i];
                let w = total / std::f64::consts::TAU;
                let rounded = w.round();
                if (w - rounded).abs() > 0.25 {
                    return Err(Error::NumericFailure(format!(
                        "cell ({i},{j}) winding {w:.3} is not close to an integer"
                    )));
                }
                let winding = rounded as i64;
                boundary_winding += winding;
                let rect = Rect {
                    u0: i as f64 * step,
                    v0: j as f64 * step,
                    w: step,
                    h: step,
                };
                let count = winding + self.poles_in(&rect) as i64;
                if count < 0 {
                    return Err(Error::NumericFailure(format!(
                        "cell ({i},{j}) reports negative zero count {count}"
                    )));
                }
                if count > 0 {
                    hot.push((rect, count as usize));
                }
            }
        }

        let found: i64 = hot.iter().map(|(_, c)| *c as i64).sum();
        if boundary_winding + self.poles.len() as i64 != found {
            return Err(Error::NumericFailure(
                "cell windings do not telescope to the boundary winding".into(),
            ));
        }
        if found != expected as i64 {
            return Err(Error::ZeroCountMismatch {
                expected: expected as i64,
                found,
            });
        }

        let mut zeros = Vec::new();
        for (rect, count) in hot {
            self.resolve(&rect, count, &mut zeros)?;
        }

        // The outer contour must keep clear of every zero.
        for z in &zeros {
            if self.distance_to_outer_boundary(z.z) < self.tol.contour_guard {
                return Err(Error::NumericFailure(
                    "a zero lies within the guard distance of the outer contour".into(),
                ));
            }
        }

        Ok(SearchOutcome {
            zeros,
            boundary_winding,
        })
    }

    fn distance_to_outer_boundary(&self, z: Complex64) -> f64 {
        let tau = self.lat.tau();
        let y = z.im / tau.im;
        let x = z.re - y * tau.re;
        let u = x - self.offset.0;
        let v = y - self.offset.1;
        let du = u.min(1.0 - u).max(0.0);
        let dv = v.min(1.0 - v).max(0.0);
        // Perpendicular spacing of the two grid-line families.
        (du * tau.im / tau.norm()).min(dv * tau.im)
    }

    fn rect_diameter(&self, rect: &Rect) -> f64 {
        (rect.w * self.lat.omega1() + rect.h * self.lat.omega2()).norm()
    }

    fn resolve(&mut self, rect: &Rect, count: usize, out: &mut Vec<FoundZero>) -> Result<()> {
        if count == 1 {
            let center = self.z_at(rect.u0 + rect.w / 2.0, rect.v0 + rect.h / 2.0);
            if let Ok(z) = self.newton(center, 1) {
                if self.in_rect(z, rect) {
                    out.push(FoundZero {
                        z,
                        multiplicity: 1,
                    });
                    return Ok(());
                }
            }
        }
        if self.rect_diameter(rect) < self.tol.double_zero_cluster {
            // Zeros that the cluster scale cannot separate count as one zero
            // of higher multiplicity.
            let center = self.z_at(rect.u0 + rect.w / 2.0, rect.v0 + rect.h / 2.0);
            let z = self.newton(center, count)?;
            out.push(FoundZero {
                z,
                multiplicity: count,
            });
            return Ok(());
        }

        let mut sub_total = 0usize;
        let mut pending = Vec::new();
        for di in 0..2 {
            for dj in 0..2 {
                let sub = Rect {
                    u0: rect.u0 + di as f64 * rect.w / 2.0,
                    v0: rect.v0 + dj as f64 * rect.h / 2.0,
                    w: rect.w / 2.0,
                    h: rect.h / 2.0,
                };
                let c = self.winding_of_rect(&sub)? + self.poles_in(&sub) as i64;
                if c < 0 {
                    return Err(Error::NumericFailure(
                        "subdivision produced a negative zero count".into(),
                    ));
                }
                if c > 0 {
                    sub_total += c as usize;
                    pending.push((sub, c as usize));
                }
            }
        }
        if sub_total != count {
            return Err(Error::NumericFailure(format!(
                "subdivision lost zeros: {count} became {sub_total}"
            )));
        }
        for (sub, c) in pending {
            self.resolve(&sub, c, out)?;
        }
        Ok(())
    }

    fn in_rect(&self, z: Complex64, rect: &Rect) -> bool {
        let tau = self.lat.tau();
        let y = z.im / tau.im;
        let x = z.re - y * tau.re;
        let u = x - self.offset.0;
        let v = y - self.offset.1;
        let slack = 1e-12;
        u >= rect.u0 - slack
            && u <= rect.u0 + rect.w + slack
            && v >= rect.v0 - slack
            && v <= rect.v0 + rect.h + slack
    }

    fn newton(&mut self, start: Complex64, multiplicity: usize) -> Result<Complex64> {
        let m = multiplicity as f64;
        let mut z = start;
        for _ in 0..80 {
            self.evals += 1;
            let fz = (self.f)(z)?;
            if fz.norm() < 1e-14 {
                break;
            }
            let dz = (self.df)(z)?;
            if dz.norm() == 0.0 {
                return Err(Error::NumericFailure(
                    "vanishing derivative in Newton refinement".into(),
                ));
            }
            let step = m * fz / dz;
            z -= step;
            if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                break;
            }
        }
        let residual = (self.f)(z)?.norm();
        if residual > self.tol.zero_residual {
            return Err(Error::NumericFailure(format!(
                "Newton residual {residual:.3e} exceeds {:.3e}",
                self.tol.zero_residual
            )));
        }
        Ok(z)
    }
}
