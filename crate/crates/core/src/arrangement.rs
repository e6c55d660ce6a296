//! Singularity classification of the arrangement of translated curves.
//!
//! A finite torsion subgroup `A` translates the base curve `G` into `|A|`
//! curves. Intersections of `G` with the translate by `tau` are exactly the
//! zeros of `b_{tau,p}`, so the whole singularity analysis happens on the
//! base curve: pool the zeros of all `b_{tau,p}` for nonzero `tau` in `A`,
//! cluster coincident points, and read off branch counts. A cluster where
//! `S(q)` of the torsions vanish is a point where `1 + |S(q)|` curves meet.
//!
//! Verdicts are never guessed: a cluster with more than three branches, a
//! non-simple zero, or an ambiguous separation yields `Unclassified` with
//! the reason recorded.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bfunc::{BFunction, ZeroPair};
use crate::error::Error;
use crate::tol::Tolerances;
use crate::torsion_group::subgroup_types;
use crate::torus::{subgroup_from_generators, Lattice, TorsionPoint, TorusPoint};
use crate::Result;

/// One zero of one `b_{tau,p}` in the pooled point set.
#[derive(Debug, Clone, Serialize)]
pub struct PooledZero {
    pub tau: (u64, u64, u64),
    pub location: (f64, f64),
    pub z: Complex64,
    pub deriv: f64,
}

/// A cluster of pooled zeros: one singular point of the arrangement on the
/// base curve.
#[derive(Debug, Clone, Serialize)]
pub struct Cluster {
    pub center: Complex64,
    pub location: (f64, f64),
    /// Torsions whose `b` function vanishes here.
    pub vanishing: Vec<(u64, u64, u64)>,
    /// Branch count `r = 1 + |vanishing|`.
    pub branch_count: usize,
    /// Smallest `|b'|` over the member zeros.
    pub min_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    NormalCrossings,
    NodesAndTriples,
    Unclassified,
}

#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub nodes_on_base_curve: usize,
    pub triples_on_base_curve: usize,
    pub arrangement_nodes: usize,
    pub arrangement_triples: usize,
}

/// Full classification record; serializes to the report JSON.
#[derive(Debug, Clone, Serialize)]
pub struct ArrangementReport {
    pub lattice_tau: Complex64,
    pub lattice_label: Option<String>,
    pub non_generic_lattice: bool,
    pub base_point: (f64, f64),
    pub generators: Vec<(u64, u64, u64)>,
    /// The full subgroup, identity included.
    pub subgroup: Vec<(u64, u64, u64)>,
    pub subgroup_order: usize,
    pub contains_full_two_torsion: bool,
    pub pooled_zeros: Vec<PooledZero>,
    pub clusters: Vec<Cluster>,
    pub totals: Totals,
    pub verdict: Verdict,
    pub unclassified_reason: Option<String>,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
}

/// Zero sets of `b_{tau,p}` for every nonzero `tau` in the subgroup, in the
/// deterministic subgroup order. Hard numeric failures carry the offending
/// torsion.
pub fn zero_locus_table(
    subgroup: &[TorsionPoint],
    p: &TorusPoint,
    tol: &Tolerances,
) -> Result<Vec<(TorsionPoint, ZeroPair)>> {
    let mut out = Vec::new();
    for tau in subgroup {
        if tau.is_identity() {
            continue;
        }
        let f = BFunction::construct_with(p, tau, tol)
            .and_then(|f| f.find_zeros().map(|z| (f, z)));
        match f {
            Ok((_, zeros)) => out.push((tau.clone(), zeros)),
            Err(e) => {
                let (a, b, n) = tau.coords();
                return Err(Error::ArrangementZeroFailure {
                    a,
                    b,
                    n,
                    source: Box::new(e),
                });
            }
        }
    }
    Ok(out)
}

/// A subgroup contains all of `J(E)_2` iff it has all three 2-torsions.
pub fn contains_full_two_torsion(subgroup: &[TorsionPoint]) -> bool {
    subgroup.iter().filter(|t| t.order() == 2).count() == 3
}

fn is_non_generic(lattice: &Lattice) -> bool {
    let tau = lattice.tau();
    let square = Complex64::new(0.0, 1.0);
    let hex = Complex64::new(-0.5, 0.75f64.sqrt());
    (tau - square).norm() < 1e-9 || (tau - hex).norm() < 1e-9
}

/// Classify the arrangement cut out by the subgroup generated by `generators`
/// at base point `p`.
pub fn classify_arrangement(
    generators: &[TorsionPoint],
    p: &TorusPoint,
    tol: &Tolerances,
    seed: Option<u64>,
) -> Result<ArrangementReport> {
    let subgroup = subgroup_from_generators(generators)?;
    let order = subgroup.len();
    if order < 2 {
        return Err(Error::Precondition(
            "subgroup must have at least one nonzero element".into(),
        ));
    }
    let lattice = p.lattice().clone();
    let table = zero_locus_table(&subgroup, p, tol)?;

    let mut report = ArrangementReport {
        lattice_tau: lattice.tau(),
        lattice_label: lattice.label().map(String::from),
        non_generic_lattice: is_non_generic(&lattice),
        base_point: p.coords(),
        generators: generators.iter().map(|t| t.coords()).collect(),
        subgroup: subgroup.iter().map(|t| t.coords()).collect(),
        subgroup_order: order,
        contains_full_two_torsion: contains_full_two_torsion(&subgroup),
        pooled_zeros: Vec::new(),
        clusters: Vec::new(),
        totals: Totals {
            nodes_on_base_curve: 0,
            triples_on_base_curve: 0,
            arrangement_nodes: 0,
            arrangement_triples: 0,
        },
        verdict: Verdict::Unclassified,
        unclassified_reason: None,
        seed,
        tolerances: *tol,
    };

    let unclassified = |report: &mut ArrangementReport, reason: String| {
        report.verdict = Verdict::Unclassified;
        report.unclassified_reason = Some(reason);
    };

    // Pool the zeros; a double zero is a tangency, which the verdict
    // machinery refuses.
    let mut points: Vec<(TorusPoint, TorsionPoint, f64)> = Vec::new();
    for (tau, zeros) in &table {
        if zeros.double_zero {
            unclassified(
                &mut report,
                format!("b function of {tau} has a double zero"),
            );
            return Ok(report);
        }
        points.push((zeros.q1.clone(), tau.clone(), zeros.deriv_q1));
        points.push((zeros.q2.clone(), tau.clone(), zeros.deriv_q2));
    }
    report.pooled_zeros = points
        .iter()
        .map(|(q, tau, deriv)| PooledZero {
            tau: tau.coords(),
            location: q.coords(),
            z: q.z(),
            deriv: *deriv,
        })
        .collect();

    // Union-find clustering at the cluster tolerance.
    let k = points.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if points[i].0.distance(&points[j].0) <= tol.cluster {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..k {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }

    // Hard separation ladder: distinct clusters must be far apart, clusters
    // must be tight, and no torsion may vanish twice at one point.
    let separation = tol.separation_factor * tol.cluster;
    for (ra, ga) in &groups {
        for (rb, gb) in &groups {
            if ra >= rb {
                continue;
            }
            for &i in ga {
                for &j in gb {
                    let d = points[i].0.distance(&points[j].0);
                    if d < separation {
                        unclassified(
                            &mut report,
                            format!(
                                "zeros {d:.3e} apart: too far to cluster, too close to separate"
                            ),
                        );
                        return Ok(report);
                    }
                }
            }
        }
    }

    let mut clusters = Vec::new();
    for group in groups.values() {
        let mut vanishing = Vec::new();
        let mut min_margin = f64::INFINITY;
        for &i in group {
            let (_, tau, deriv) = &points[i];
            if vanishing.contains(&tau.coords()) {
                unclassified(
                    &mut report,
                    format!("both zeros of {tau} landed in one cluster"),
                );
                return Ok(report);
            }
            vanishing.push(tau.coords());
            min_margin = min_margin.min(*deriv);
        }
        vanishing.sort_unstable();
        let branch_count = 1 + vanishing.len();
        let anchor = &points[group[0]].0;
        clusters.push(Cluster {
            center: anchor.z(),
            location: anchor.coords(),
            vanishing,
            branch_count,
            min_margin,
        });
    }
    clusters.sort_by(|a, b| {
        a.location
            .partial_cmp(&b.location)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    report.clusters = clusters;

    let cluster_problem = report.clusters.iter().find_map(|cluster| {
        if cluster.branch_count > 3 {
            Some(format!(
                "cluster at {} has {} branches",
                cluster.center, cluster.branch_count
            ))
        } else if cluster.min_margin < tol.margin {
            Some(format!(
                "cluster at {} has transversality margin {:.3e}",
                cluster.center, cluster.min_margin
            ))
        } else {
            None
        }
    });
    if let Some(reason) = cluster_problem {
        unclassified(&mut report, reason);
        return Ok(report);
    }

    let nodes = report
        .clusters
        .iter()
        .filter(|c| c.branch_count == 2)
        .count();
    let triples = report
        .clusters
        .iter()
        .filter(|c| c.branch_count == 3)
        .count();
    // Orbit counting: A acts freely and transitively on the curves, so each
    // arrangement point of branch count r is seen r times per curve orbit.
    if !(order * nodes).is_multiple_of(2) || !(order * triples).is_multiple_of(3) {
        unclassified(
            &mut report,
            "orbit counts are not integral; cluster data inconsistent".into(),
        );
        return Ok(report);
    }
    let total_nodes = order * nodes / 2;
    let total_triples = order * triples / 3;
    // Every unordered pair of curves meets in exactly 2 points.
    if total_nodes + 3 * total_triples != order * (order - 1) {
        unclassified(
            &mut report,
            format!(
                "pair count {} != {}; some intersection went missing",
                total_nodes + 3 * total_triples,
                order * (order - 1)
            ),
        );
        return Ok(report);
    }

    report.totals = Totals {
        nodes_on_base_curve: nodes,
        triples_on_base_curve: triples,
        arrangement_nodes: total_nodes,
        arrangement_triples: total_triples,
    };
    report.verdict = if triples == 0 {
        Verdict::NormalCrossings
    } else {
        Verdict::NodesAndTriples
    };
    Ok(report)
}

/// Rows of `re,im,kind` for plotting: the base point, the poles `p - tau`,
/// pooled zeros and cluster centers.
pub fn report_csv(report: &ArrangementReport) -> String {
    let mut out = String::from("re,im,kind\n");
    let tau = report.lattice_tau;
    let at = |s: f64, t: f64| Complex64::new(s + t * tau.re, t * tau.im);
    let base = at(report.base_point.0, report.base_point.1);
    out.push_str(&format!("{},{},base_point\n", base.re, base.im));
    for &(a, b, n) in report.subgroup.iter().filter(|(_, _, n)| *n > 1) {
        let wrap = |x: f64| x - x.floor();
        let pole = at(
            wrap(report.base_point.0 - a as f64 / n as f64),
            wrap(report.base_point.1 - b as f64 / n as f64),
        );
        out.push_str(&format!("{},{},pole\n", pole.re, pole.im));
    }
    for z in &report.pooled_zeros {
        out.push_str(&format!("{},{},zero\n", z.z.re, z.z.im));
    }
    for c in &report.clusters {
        let kind = match c.branch_count {
            2 => "node",
            3 => "triple",
            _ => "cluster",
        };
        out.push_str(&format!("{},{},{kind}\n", c.center.re, c.center.im));
    }
    out
}

/// One trial of the dichotomy experiment.
#[derive(Debug, Clone, Serialize)]
pub struct DichotomyTrial {
    pub subgroup_type: (u64, u64),
    pub trial: u64,
    pub seed: u64,
    pub lattice_tau: Complex64,
    pub verdict: Verdict,
    pub expected: Verdict,
    pub matched: bool,
    pub totals: Totals,
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyReport {
    pub m: u64,
    pub trials_per_type: u64,
    pub trials: Vec<DichotomyTrial>,
    pub mismatches: usize,
    pub unclassified: usize,
}

/// For every subgroup type of order `m`, classify arrangements over random
/// lattices and compare the verdict against the group-theoretic prediction:
/// normal crossings iff the subgroup misses the full 2-torsion.
pub fn dichotomy_experiment(
    m: u64,
    trials: u64,
    base_seed: u64,
    tol: &Tolerances,
) -> Result<DichotomyReport> {
    if !(2..=12).contains(&m) {
        return Err(Error::Precondition(format!(
            "dichotomy experiment supports 2 <= m <= 12, got {m}"
        )));
    }
    if trials < 1 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    let mut out = Vec::new();
    let mut mismatches = 0;
    let mut unclassified = 0;
    for (a, b) in subgroup_types(m) {
        let expected = if a % 2 == 0 && b % 2 == 0 {
            Verdict::NodesAndTriples
        } else {
            Verdict::NormalCrossings
        };
        for trial in 0..trials {
            let seed = base_seed
                .wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add(a << 24 | b << 16 | trial);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lattice = Lattice::random_in_box(&mut rng);
            let p = TorusPoint::random(&mut rng, &lattice);
            let mut generators = vec![TorsionPoint::new(1, 0, a, &lattice)?];
            if b > 1 {
                generators.push(TorsionPoint::new(0, 1, b, &lattice)?);
            }
            let report = classify_arrangement(&generators, &p, tol, Some(seed))?;
            let matched = report.verdict == expected;
            if !matched {
                mismatches += 1;
            }
            if report.verdict == Verdict::Unclassified {
                unclassified += 1;
            }
            out.push(DichotomyTrial {
                subgroup_type: (a, b),
                trial,
                seed,
                lattice_tau: lattice.tau(),
                verdict: report.verdict,
                expected,
                matched,
                totals: report.totals,
            });
        }
    }
    Ok(DichotomyReport {
        m,
        trials_per_type: trials,
        trials: out,
        mismatches,
        unclassified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn setup(seed: u64) -> (Lattice, TorusPoint) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice = Lattice::random_in_box(&mut rng);
        let p = TorusPoint::random(&mut rng, &lattice);
        (lattice, p)
    }

    #[test]
    fn single_two_torsion_gives_two_nodes() {
        let (lattice, p) = setup(31);
        let t = TorsionPoint::new(1, 0, 2, &lattice).unwrap();
        let report =
            classify_arrangement(&[t], &p, &Tolerances::default(), Some(31)).unwrap();
        assert_eq!(report.verdict, Verdict::NormalCrossings);
        assert_eq!(report.subgroup_order, 2);
        assert_eq!(report.totals.nodes_on_base_curve, 2);
        assert_eq!(report.totals.arrangement_nodes, 2);
        assert_eq!(report.totals.arrangement_triples, 0);
    }

    #[test]
    fn full_two_torsion_gives_four_triple_points() {
        let (lattice, p) = setup(32);
        let g1 = TorsionPoint::new(1, 0, 2, &lattice).unwrap();
        let g2 = TorsionPoint::new(0, 1, 2, &lattice).unwrap();
        let report =
            classify_arrangement(&[g1, g2], &p, &Tolerances::default(), Some(32)).unwrap();
        assert_eq!(report.verdict, Verdict::NodesAndTriples);
        assert!(report.contains_full_two_torsion);
        assert_eq!(report.totals.triples_on_base_curve, 3);
        assert_eq!(report.totals.nodes_on_base_curve, 0);
        assert_eq!(report.totals.arrangement_triples, 4);
        assert_eq!(report.totals.arrangement_nodes, 0);

        // The triple points sit at the 2-torsion translates of p.
        for cluster in &report.clusters {
            assert_eq!(cluster.branch_count, 3);
            let center = TorusPoint::reduce(cluster.center, &lattice).unwrap();
            let mut best = f64::INFINITY;
            for t in crate::torus::enumerate_torsion(2, true, &lattice).unwrap() {
                let translate = p.sub(&t.embed()).unwrap();
                best = best.min(center.distance(&translate));
            }
            assert!(best <= 1e-6, "triple point {best:.3e} from a translate");
        }
    }

    #[test]
    fn cyclic_four_gives_twelve_nodes() {
        let (lattice, p) = setup(33);
        let g = TorsionPoint::new(1, 0, 4, &lattice).unwrap();
        let report =
            classify_arrangement(&[g], &p, &Tolerances::default(), Some(33)).unwrap();
        assert_eq!(report.verdict, Verdict::NormalCrossings);
        assert_eq!(report.subgroup_order, 4);
        assert_eq!(report.totals.nodes_on_base_curve, 6);
        assert_eq!(report.totals.arrangement_nodes, 12);
    }

    #[test]
    fn zero_locus_table_pools_expected_counts() {
        let (lattice, p) = setup(34);
        // Full 2-torsion: three entries, each translate covered twice.
        let g1 = TorsionPoint::new(1, 0, 2, &lattice).unwrap();
        let g2 = TorsionPoint::new(0, 1, 2, &lattice).unwrap();
        let subgroup = subgroup_from_generators(&[g1, g2]).unwrap();
        let table = zero_locus_table(&subgroup, &p, &Tolerances::default()).unwrap();
        assert_eq!(table.len(), 3);
        for t in crate::torus::enumerate_torsion(2, true, &lattice).unwrap() {
            let translate = p.sub(&t.embed()).unwrap();
            let hits = table
                .iter()
                .flat_map(|(_, zp)| zp.points().map(|q| q.distance(&translate)))
                .filter(|d| *d <= 1e-6)
                .count();
            assert_eq!(hits, 2, "translate of {t} covered twice");
        }

        // Cyclic of order 3: two entries, four pooled points.
        let g = TorsionPoint::new(1, 1, 3, &lattice).unwrap();
        let subgroup = subgroup_from_generators(&[g]).unwrap();
        let table = zero_locus_table(&subgroup, &p, &Tolerances::default()).unwrap();
        assert_eq!(table.len(), 2);
        let pooled: usize = table.iter().map(|_| 2).sum();
        assert_eq!(pooled, 4);
    }

    #[test]
    fn classification_is_translation_covariant_over_subgroup_shifts() {
        let (lattice, p) = setup(35);
        let g = TorsionPoint::new(1, 0, 3, &lattice).unwrap();
        let base =
            classify_arrangement(std::slice::from_ref(&g), &p, &Tolerances::default(), None)
                .unwrap();
        let shifted_p = p.add(&g.embed()).unwrap();
        let shifted =
            classify_arrangement(&[g], &shifted_p, &Tolerances::default(), None).unwrap();
        assert_eq!(base.verdict, shifted.verdict);
        assert_eq!(
            base.totals.nodes_on_base_curve,
            shifted.totals.nodes_on_base_curve
        );
        assert_eq!(
            base.totals.arrangement_nodes,
            shifted.totals.arrangement_nodes
        );
    }

    #[test]
    fn pair_count_conservation() {
        for seed in [41u64, 42, 43] {
            let (lattice, p) = setup(seed);
            let g = TorsionPoint::new(1, 0, 5, &lattice).unwrap();
            let report =
                classify_arrangement(&[g], &p, &Tolerances::default(), None).unwrap();
            let order = report.subgroup_order;
            assert_eq!(
                report.totals.arrangement_nodes + 3 * report.totals.arrangement_triples,
                order * (order - 1)
            );
        }
    }

    #[test]
    fn csv_has_expected_shape() {
        let (lattice, p) = setup(36);
        let t = TorsionPoint::new(1, 0, 2, &lattice).unwrap();
        let report = classify_arrangement(&[t], &p, &Tolerances::default(), None).unwrap();
        let csv = report_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "re,im,kind");
        // header + base point + 1 pole + 2 zeros + 2 clusters
        assert_eq!(lines.len(), 1 + 1 + 1 + 2 + 2);
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 3));
    }

    #[test]
    fn dichotomy_experiment_matches_predictions_for_small_m() {
        for m in [2u64, 4] {
            let report = dichotomy_experiment(m, 1, 7070, &Tolerances::default()).unwrap();
            assert_eq!(report.mismatches, 0, "m = {m}");
            assert_eq!(report.unclassified, 0, "m = {m}");
        }
    }

    #[test]
    fn dichotomy_experiment_rejects_out_of_range_m() {
        assert!(dichotomy_experiment(1, 1, 0, &Tolerances::default()).is_err());
        assert!(dichotomy_experiment(13, 1, 0, &Tolerances::default()).is_err());
        assert!(dichotomy_experiment(4, 0, 0, &Tolerances::default()).is_err());
    }
}
