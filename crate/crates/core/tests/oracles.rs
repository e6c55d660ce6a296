//! Independent oracles for the special-function layer.
//!
//! Nothing here goes through the theta-quotient code path being tested: zeta
//! is recomputed from the defining lattice sum (with the truncation tail
//! restored through Lambert-series Eisenstein values), zeros are relocated by
//! a blind grid scan plus finite-difference Newton, and the n = 2 root-of-
//! unity cancellation is replayed in exact rational arithmetic.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ellarr::bfunc::{circle_residue, BFunction};
use ellarr::theta::weierstrass_zeta;
use ellarr::torus::{Lattice, TorsionPoint, TorusPoint};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Eisenstein values `G_k = sum' lambda^{-k}` from the Lambert q-series,
/// `q = exp(2 pi i tau)`; used only to restore the tail of the truncated
/// lattice sum.
fn eisenstein_g4_g6_g8(tau: Complex64) -> (Complex64, Complex64, Complex64) {
    let q = (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * tau).exp();
    let mut e4 = Complex64::new(1.0, 0.0);
    let mut e6 = Complex64::new(1.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    for n in 1..64u32 {
        qn *= q;
        if qn.norm() < 1e-20 {
            break;
        }
        let nf = n as f64;
        let lambert = qn / (Complex64::new(1.0, 0.0) - qn);
        e4 += 240.0 * nf.powi(3) * lambert;
        e6 -= 504.0 * nf.powi(5) * lambert;
    }
    let pi = std::f64::consts::PI;
    let g4 = pi.powi(4) / 45.0 * e4;
    let g6 = 2.0 * pi.powi(6) / 945.0 * e6;
    let g8 = 3.0 / 7.0 * g4 * g4; // E8 = E4^2
    (g4, g6, g8)
}

/// Weierstrass zeta from the defining sum over `0 < |lambda| <= radius`,
/// with the absolutely convergent tail restored exactly through `G_4`,
/// `G_6`, `G_8`:
///
/// ```text
/// zeta(z) = 1/z + sum [1/(z-l) + 1/l + z/l^2]
///           - z^3 (G4 - S4) - z^5 (G6 - S6) - z^7 (G8 - S8) - O(z^9 / R^8)
/// ```
fn zeta_lattice_sum(z: Complex64, lat: &Lattice, radius: f64) -> Complex64 {
    let tau = lat.tau();
    let mut sum = 1.0 / z;
    let mut s4 = Complex64::new(0.0, 0.0);
    let mut s6 = s4;
    let mut s8 = s4;
    let kmax = (radius / tau.im).ceil() as i64 + 1;
    for k in -kmax..=kmax {
        let mmax = (radius + k.unsigned_abs() as f64 * tau.re.abs()).ceil() as i64 + 1;
        for m in -mmax..=mmax {
            if m == 0 && k == 0 {
                continue;
            }
            let lam = Complex64::new(m as f64 + k as f64 * tau.re, k as f64 * tau.im);
            if lam.norm() > radius {
                continue;
            }
            let inv = 1.0 / lam;
            let inv2 = inv * inv;
            sum += 1.0 / (z - lam) + inv + z * inv2;
            let inv4 = inv2 * inv2;
            s4 += inv4;
            s6 += inv4 * inv2;
            s8 += inv4 * inv4;
        }
    }
    let (g4, g6, g8) = eisenstein_g4_g6_g8(tau);
    let z2 = z * z;
    let z3 = z2 * z;
    sum - z3 * (g4 - s4) - z3 * z2 * (g6 - s6) - z3 * z2 * z2 * (g8 - s8)
}

#[test]
fn zeta_matches_the_lattice_sum_on_the_square_lattice() {
    let lat = Lattice::square();
    let z = c(0.5, 0.0);
    let oracle = zeta_lattice_sum(z, &lat, 200.0);
    let fast = weierstrass_zeta(z, &lat).unwrap();
    assert!(
        (oracle - fast).norm() <= 1e-10,
        "oracle {oracle} vs theta {fast}, diff {:.3e}",
        (oracle - fast).norm()
    );
    // eta1 = 2 zeta(1/2) = pi on the square lattice.
    assert!((2.0 * fast - c(std::f64::consts::PI, 0.0)).norm() < 1e-10);
}

#[test]
fn zeta_matches_the_lattice_sum_on_random_lattices() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..3 {
        let lat = Lattice::random_in_box(&mut rng);
        let z = c(rng.random_range(0.1..0.5), rng.random_range(0.1..0.5));
        let oracle = zeta_lattice_sum(z, &lat, 200.0);
        let fast = weierstrass_zeta(z, &lat).unwrap();
        assert!(
            (oracle - fast).norm() <= 1e-10,
            "tau {}: diff {:.3e}",
            lat.tau(),
            (oracle - fast).norm()
        );
    }
}

#[test]
fn zeta_residue_at_origin_by_contour_integral() {
    let lat = Lattice::new(c(0.21, 1.37)).unwrap();
    let residue = circle_residue(|z| weierstrass_zeta(z, &lat), c(0.0, 0.0), 0.1).unwrap();
    assert!(
        (residue - c(1.0, 0.0)).norm() <= 1e-8,
        "residue {residue}"
    );
}

/// Blind zero search: scan |b| on a 200x200 grid, keep local minima, then
/// polish with finite-difference Newton (no use of the analytic derivative).
fn grid_scan_zeros(f: &BFunction, lat: &Lattice) -> Vec<Complex64> {
    const N: usize = 200;
    let tau = lat.tau();
    let at = |i: usize, j: usize| -> Complex64 {
        let s = (i as f64 + 0.5) / N as f64;
        let t = (j as f64 + 0.5) / N as f64;
        c(s, 0.0) + t * tau
    };
    let mut mag = vec![[0.0f64; N]; N];
    for (j, row) in mag.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().enumerate() {
            *cell = match f.eval(at(i, j)) {
                Ok(v) => v.norm(),
                Err(_) => f64::INFINITY,
            };
        }
    }
    let mut candidates = Vec::new();
    for j in 0..N {
        for i in 0..N {
            let m = mag[j][i];
            if m > 0.5 {
                continue;
            }
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = (i as i64 + di).rem_euclid(N as i64) as usize;
                    let jj = (j as i64 + dj).rem_euclid(N as i64) as usize;
                    if mag[jj][ii] < m {
                        is_min = false;
                    }
                }
            }
            if is_min {
                candidates.push(at(i, j));
            }
        }
    }
    // Finite-difference Newton polish.
    let h = 1e-6;
    let mut zeros: Vec<Complex64> = Vec::new();
    for start in candidates {
        let mut z = start;
        let mut ok = false;
        for _ in 0..60 {
            let fz = match f.eval(z) {
                Ok(v) => v,
                Err(_) => break,
            };
            if fz.norm() < 1e-9 {
                ok = true;
                break;
            }
            let fp = match (f.eval(z + c(h, 0.0)), f.eval(z - c(h, 0.0))) {
                (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
                _ => break,
            };
            if fp.norm() == 0.0 {
                break;
            }
            z -= fz / fp;
        }
        if ok {
            let q = TorusPoint::reduce(z, lat).unwrap();
            if zeros
                .iter()
                .all(|w| TorusPoint::reduce(*w, lat).unwrap().distance(&q) > 1e-4)
            {
                zeros.push(z);
            }
        }
    }
    zeros
}

#[test]
fn grid_scan_agrees_with_winding_refinement() {
    // The documented example: tau_lat = 0.21 + 1.37i, p = 0, torsion of
    // order 3.
    let lat = Lattice::new(c(0.21, 1.37)).unwrap();
    let p = TorusPoint::zero(&lat);
    let t = TorsionPoint::new(1, 0, 3, &lat).unwrap();
    let f = BFunction::construct(&p, &t).unwrap();

    let refined = f.find_zeros().unwrap();
    let scanned = grid_scan_zeros(&f, &lat);
    assert_eq!(scanned.len(), 2, "grid scan found {}", scanned.len());
    for z in scanned {
        let q = TorusPoint::reduce(z, &lat).unwrap();
        assert!(
            refined.distance_to(&q) <= 1e-6,
            "scan zero {z} is {:.3e} from the refined pair",
            refined.distance_to(&q)
        );
    }
}

mod exact_rational {
    //! Exact complex-rational arithmetic, just enough to cancel two terms.

    use num_bigint::BigInt;
    use num_rational::BigRational;

    #[derive(Clone, PartialEq, Debug)]
    pub struct QC {
        pub re: BigRational,
        pub im: BigRational,
    }

    impl QC {
        pub fn new(re: i64, im: i64, den: u64) -> Self {
            let d = BigInt::from(den);
            QC {
                re: BigRational::new(BigInt::from(re), d.clone()),
                im: BigRational::new(BigInt::from(im), d),
            }
        }

        pub fn zero() -> Self {
            QC::new(0, 0, 1)
        }

        pub fn add(&self, o: &QC) -> QC {
            QC {
                re: &self.re + &o.re,
                im: &self.im + &o.im,
            }
        }

        pub fn sub(&self, o: &QC) -> QC {
            QC {
                re: &self.re - &o.re,
                im: &self.im - &o.im,
            }
        }

        pub fn mul(&self, o: &QC) -> QC {
            QC {
                re: &self.re * &o.re - &self.im * &o.im,
                im: &self.re * &o.im + &self.im * &o.re,
            }
        }

        pub fn div(&self, o: &QC) -> QC {
            let denom = &o.re * &o.re + &o.im * &o.im;
            QC {
                re: (&self.re * &o.re + &self.im * &o.im) / denom.clone(),
                im: (&self.im * &o.re - &self.re * &o.im) / denom,
            }
        }

        pub fn neg(&self) -> QC {
            QC::zero().sub(self)
        }
    }
}

#[test]
fn nodal_fiber_terms_cancel_exactly_at_order_two() {
    use exact_rational::QC;
    // n = 2: eta = -1, and the two terms of the sum cancel identically in
    // exact rational-complex arithmetic.
    let one = QC::new(1, 0, 1);
    for (re, im, den) in [(7i64, 2i64, 10u64), (-3, 5, 4), (13, -9, 7)] {
        let z = QC::new(re, im, den);
        let term = |w: &QC| w.div(&w.sub(&one).mul(&w.add(&one)));
        let total = term(&z).add(&term(&z.neg()));
        assert_eq!(total, QC::zero(), "terms fail to cancel for {z:?}");
    }

    // The floating implementation agrees.
    let s = ellarr::bfunc::nodal_fiber_sum(Complex64::new(0.7, 0.2), 2).unwrap();
    assert!(s.norm() <= 1e-15);
}
