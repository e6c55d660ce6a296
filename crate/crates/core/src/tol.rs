//! Centralized numeric policy.
//!
//! Every tolerance used by the numerical layer lives in one record so that a
//! run near a special lattice can loosen the knobs without touching code, and
//! so that reports can echo the exact policy they were produced under.

use serde::{Deserialize, Serialize};

/// The full tolerance policy. Constructed with [`Tolerances::default`] and
/// overridden field-wise where an experiment needs looser knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Theta q-series truncation: stop once the term bound falls below this
    /// fraction of the running magnitude.
    pub series_rel: f64,
    /// Distance below which an evaluation point is treated as sitting on a
    /// pole and refused with a distinct error.
    pub pole_proximity: f64,
    /// Guard distance applied to every translate in a translate-sum.
    pub translate_pole_guard: f64,
    /// Residual allowed when verifying the translate-sum of a freshly
    /// constructed `b` function.
    pub translate_sum: f64,
    /// Residual allowed in the Legendre relation `eta1*omega2 - eta2*omega1 =
    /// 2*pi*i` when quasi-periods are computed.
    pub legendre: f64,
    /// `|b(q)|` required of a refined zero.
    pub zero_residual: f64,
    /// Two refined zeros closer than this (torus distance) are reported as a
    /// single double zero.
    pub double_zero_cluster: f64,
    /// Allowed residual in the Abel relation `q1 + q2 = 2p - tau`.
    pub abel: f64,
    /// Jitter the zero-search contour when a pole or zero sits closer than
    /// this to it.
    pub contour_guard: f64,
    /// Margin below which `|b(p - eta)|` counts as a double-zero failure.
    pub double_zero_margin: f64,
    /// Torus distance under which pooled zeros of different `b` functions are
    /// clustered into one arrangement point.
    pub cluster: f64,
    /// Clusters must be separated by `separation_factor * cluster`; anything
    /// in between is refused as unclassifiable rather than silently resolved.
    pub separation_factor: f64,
    /// Transversality margin: every zero in a cluster must have `|b'| >= margin`.
    pub margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            series_rel: 1e-16,
            pole_proximity: 1e-9,
            translate_pole_guard: 1e-7,
            translate_sum: 1e-9,
            legendre: 1e-10,
            zero_residual: 1e-11,
            double_zero_cluster: 1e-7,
            abel: 1e-8,
            contour_guard: 1e-6,
            double_zero_margin: 1e-6,
            cluster: 1e-6,
            separation_factor: 100.0,
            margin: 1e-6,
        }
    }
}

/// Partial override of [`Tolerances`], e.g. parsed from a user-supplied file.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancePatch {
    pub series_rel: Option<f64>,
    pub pole_proximity: Option<f64>,
    pub translate_pole_guard: Option<f64>,
    pub translate_sum: Option<f64>,
    pub legendre: Option<f64>,
    pub zero_residual: Option<f64>,
    pub double_zero_cluster: Option<f64>,
    pub abel: Option<f64>,
    pub contour_guard: Option<f64>,
    pub double_zero_margin: Option<f64>,
    pub cluster: Option<f64>,
    pub separation_factor: Option<f64>,
    pub margin: Option<f64>,
}

impl Tolerances {
    /// Apply a partial override, returning the merged policy.
    pub fn patched(mut self, patch: &TolerancePatch) -> Self {
        macro_rules! merge {
            ($($field:ident),*) => {
                $(if let Some(v) = patch.$field { self.$field = v; })*
            };
        }
        merge!(
            series_rel,
            pole_proximity,
            translate_pole_guard,
            translate_sum,
            legendre,
            zero_residual,
            double_zero_cluster,
            abel,
            contour_guard,
            double_zero_margin,
            cluster,
            separation_factor,
            margin
        );
        self
    }
}
