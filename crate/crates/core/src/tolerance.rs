use serde::{Deserialize, Serialize};

/// Numeric thresholds shared by the field tier and the holonomy lab.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Absolute threshold below which a sampled component counts as zero.
    pub zero: f64,
    /// Relative agreement required between an implementation and its oracle.
    pub relative: f64,
    /// `|G_θθ|` below this raises `DegenerateFiber`.
    pub degenerate_fiber: f64,
    /// Singular values below `rank × σ_max` count as zero.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero: 1e-10,
            relative: 1e-8,
            degenerate_fiber: 1e-12,
            rank: 1e-7,
        }
    }
}
