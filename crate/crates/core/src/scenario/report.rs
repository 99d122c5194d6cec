//! Machine-readable report. Exact quantities are `"p/q"` strings (or exact
//! multiples of π); floating-point quantities carry 17 significant digits
//! together with the tolerance they were judged against.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::buscher::BemCase;
use crate::cohomology::Circle;
use crate::rational::{format_rational, PiMultiple, Rational};
use crate::reduction::ReducedVerdict;

pub const SCHEMA_VERSION: &str = "1";

pub fn rationals(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measured {
    pub value: String,
    pub tolerance: String,
    pub within: bool,
}

impl Measured {
    pub fn new(value: f64, tolerance: f64) -> Self {
        Measured {
            value: float(value),
            tolerance: float(tolerance),
            within: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputEcho {
    pub beta: Vec<String>,
    pub b1_n: usize,
    pub k: usize,
    pub torus_circumferences: Vec<PiMultiple>,
    pub dualize: Vec<Circle>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StratumSection {
    pub r: u8,
    pub dim_k: u8,
    pub r_sharp: u8,
    pub in_p1: bool,
    pub kernel: Vec<String>,
    pub kernel_caveat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BemEntry {
    pub with: Circle,
    /// `∫_{T²} H` per remaining chart coordinate, exact.
    pub integral: Vec<PiMultiple>,
    pub exact_zero: bool,
    pub sampled: Measured,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BemCaseReport {
    A,
    B,
    C,
    /// `γ = 0` and `cᵢ = 0`.
    Unclassified,
    /// The parallel stratum of N is non-empty.
    NotApplicable,
}

impl From<BemCase> for BemCaseReport {
    fn from(c: BemCase) -> Self {
        match c {
            BemCase::A => BemCaseReport::A,
            BemCase::B => BemCaseReport::B,
            BemCase::C => BemCaseReport::C,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleRow {
    pub circle: Circle,
    pub coord: usize,
    pub circumference: PiMultiple,
    pub fiberwise_integral: PiMultiple,
    /// Only defined for circles of the trailing torus.
    pub bem_case: Option<BemCaseReport>,
    pub bem_row: Vec<BemEntry>,
    /// Dual class after dualizing along this circle alone.
    pub single_dual_flux: Vec<String>,
    /// The single duality moved a nonzero coefficient into geometric flux.
    pub converts: bool,
    /// H-flux remains after the single duality.
    pub flux_survives: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerRow {
    pub circle: Option<Circle>,
    pub coord: usize,
    pub converted: Option<String>,
    /// Largest magnitude of each stored `G̃_{μθ}`, keyed by component.
    pub geometric_flux: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldTierReport {
    pub grid_points: usize,
    /// Largest `|H̃|` component carrying a dualized index.
    pub dualized_flux: Measured,
    /// Largest difference between `H̃_{12m}/√g_Σ` and the dual class.
    pub tier_mismatch: Measured,
    pub bidegree_violation: Measured,
    /// Remaining circles still have `G_θθ = 1`, `G_μθ = 0`.
    pub non_interference: bool,
    pub positive_definite: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualitySection {
    pub dualized: Vec<Circle>,
    pub dual_flux: Vec<String>,
    pub dual_flux_zero: bool,
    pub ledger: Vec<LedgerRow>,
    pub chern_flags: BTreeMap<String, bool>,
    pub field_tier: FieldTierReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionSection {
    pub circle: Circle,
    pub restricted_class: Vec<String>,
    pub dropped: String,
    pub vanished: bool,
    pub verdict: ReducedVerdict,
    pub restricted_r_sharp: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRow {
    pub point: Vec<String>,
    pub rank: usize,
    pub oracle_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolonomySection {
    pub r_sharp: u8,
    pub min_rank: usize,
    pub max_rank: usize,
    pub lower_bound_holds: bool,
    pub rank_tolerance: String,
    pub step: String,
    pub seed: u64,
    pub max_asymmetry: Measured,
    pub points: Vec<PointRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleCheck {
    pub id: String,
    pub checks: BTreeMap<String, String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub scenario: String,
    pub input: InputEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratum: Option<StratumSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circles: Option<Vec<CircleRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality: Option<DualitySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holonomy: Option<HolonomySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleCheck>,
    /// Wall-clock seconds per section; only present when requested, so that
    /// default reports stay byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<BTreeMap<String, String>>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
