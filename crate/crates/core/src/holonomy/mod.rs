//! Numerical holonomy lab for `∇^C = ∇^LC + ½T` with `T = h vol_Σ ∧ τ` on an
//! explicit chart: connection coefficients, curvature operators in an
//! orthonormal frame, and the rank of their off-diagonal `V_Σ × V_{M₂}`
//! blocks.

mod transport;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chart::Chart;
use crate::cohomology::{MixedFluxClass, ProductSpec};
use crate::error::{Error, Result};
use crate::rational::to_f64;

pub use transport::{loop_slope, loop_transport, matrix_log, square_loop};

/// Singular values at or below this are noise regardless of the relative
/// threshold.
pub const RANK_FLOOR: f64 = 1e-10;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type CovectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `T = h · vol_Σ ∧ τ`, with `τ` a covector on the `N × T^k` coordinates.
#[derive(Clone)]
pub struct TorsionField {
    pub h: ScalarFn,
    pub tau: CovectorFn,
}

impl fmt::Debug for TorsionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TorsionField { .. }")
    }
}

impl TorsionField {
    pub fn zero() -> Self {
        TorsionField {
            h: Arc::new(|_| 0.0),
            tau: Arc::new(|_| Vec::new()),
        }
    }

    /// `h ≡ 1`, constant chart coefficients.
    pub fn constant(tau: Vec<f64>) -> Self {
        TorsionField {
            h: Arc::new(|_| 1.0),
            tau: Arc::new(move |_| tau.clone()),
        }
    }

    /// The harmonic torsion of a flux class: `τ` is the class's local
    /// constant-coefficient representative.
    pub fn from_class(spec: &ProductSpec, cls: &MixedFluxClass) -> Self {
        Self::constant(spec.realized_covector(cls).iter().map(to_f64).collect())
    }

    /// Fully antisymmetric lowered components `T_{abc}`, flattened
    /// `a·D² + b·D + c`.
    pub fn components(&self, chart: &Chart, x: &[f64]) -> Vec<f64> {
        let d = chart.dim();
        let mut t = vec![0.0; d * d * d];
        let scale = (self.h)(x) * chart.sigma_density(x);
        for (m, tau) in (self.tau)(x).into_iter().enumerate() {
            let v = scale * tau;
            if v == 0.0 {
                continue;
            }
            let c = 2 + m;
            for (p, sign) in [
                ([0, 1, c], 1.0),
                ([1, c, 0], 1.0),
                ([c, 0, 1], 1.0),
                ([1, 0, c], -1.0),
                ([0, c, 1], -1.0),
                ([c, 1, 0], -1.0),
            ] {
                t[p[0] * d * d + p[1] * d + p[2]] = sign * v;
            }
        }
        t
    }

    /// Matrices `(T_a)^i_j = g^{il} T_{laj}`.
    pub fn raised(&self, chart: &Chart, x: &[f64]) -> Vec<DMatrix<f64>> {
        let d = chart.dim();
        let t = self.components(chart, x);
        let ginv = chart.metric_inverse(x);
        (0..d)
            .map(|a| {
                let lowered = DMatrix::from_fn(d, d, |l, j| t[l * d * d + a * d + j]);
                &ginv * lowered
            })
            .collect()
    }
}

/// `Γ^C_a = Γ^LC_a + ½ T_a` as matrices `(Γ_a)^i_j = Γ^i_{aj}`.
pub fn connection_coefficients(
    chart: &Chart,
    torsion: &TorsionField,
    x: &[f64],
    margin: f64,
) -> Result<Vec<DMatrix<f64>>> {
    chart.check_interior(x, margin)?;
    let lc = chart.levi_civita(x);
    let t = torsion.raised(chart, x);
    Ok(lc.into_iter().zip(t).map(|(g, t)| g + t * 0.5).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolonomyOptions {
    /// Finite-difference step; the Richardson cross-check uses twice this.
    pub step: f64,
    /// Allowed disagreement between the two step sizes, relative to
    /// `max(1, |R|)`.
    pub richardson_tolerance: f64,
    /// Relative singular-value threshold for ranks.
    pub rank_tolerance: f64,
}

impl Default for HolonomyOptions {
    fn default() -> Self {
        HolonomyOptions {
            step: 1e-4,
            richardson_tolerance: 1e-6,
            rank_tolerance: 1e-7,
        }
    }
}

/// Curvature operators at one point, in an orthonormal frame.
#[derive(Clone, Debug)]
pub struct CurvatureSample {
    pub point: Vec<f64>,
    /// `R(e_a, e_b)` for `a < b`, in the order of [`pairs`].
    pub operators: Vec<DMatrix<f64>>,
    pub offdiag_rank: usize,
    pub tolerance_used: f64,
    /// Largest `|R + Rᵀ|` entry over all operators.
    pub max_asymmetry: f64,
    pub richardson_diff: f64,
}

/// Index pairs `a < b` of a `d`-dimensional chart.
pub fn pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect()
}

fn coordinate_curvature(
    chart: &Chart,
    torsion: &TorsionField,
    x: &[f64],
    h: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let d = chart.dim();
    let gamma = connection_coefficients(chart, torsion, x, 0.0)?;
    // dgamma[c][b] = ∂_c Γ_b
    let mut dgamma = Vec::with_capacity(d);
    for c in 0..d {
        let shifted = |s: f64| {
            let mut p = x.to_vec();
            p[c] += s * h;
            connection_coefficients(chart, torsion, &p, 0.0)
        };
        let (p2, p1, m1, m2) = (shifted(2.0)?, shifted(1.0)?, shifted(-1.0)?, shifted(-2.0)?);
        dgamma.push(
            (0..d)
                .map(|b| (&m2[b] - &p2[b] + (&p1[b] - &m1[b]) * 8.0) / (12.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    Ok(pairs(d)
        .into_iter()
        .map(|(a, b)| {
            &dgamma[a][b] - &dgamma[b][a] + &gamma[a] * &gamma[b] - &gamma[b] * &gamma[a]
        })
        .collect())
}

/// Lower-triangular Cholesky factor `L` of the metric (`g = L Lᵀ`); the
/// orthonormal frame is `E = L^{-T}`.
fn frame(chart: &Chart, x: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let chol = chart
        .metric(x)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { sample: 0 })?;
    let l = chol.l();
    let e = l
        .transpose()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { sample: 0 })?;
    Ok((l, e))
}

/// Re-expresses coordinate operators `O_{cd}` (2-form slots `c < d`) as
/// `R(e_a, e_b)` acting in the orthonormal frame.
fn to_frame(ops: &[DMatrix<f64>], l: &DMatrix<f64>, e: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let d = l.nrows();
    let ps = pairs(d);
    let conj: Vec<DMatrix<f64>> = ops.iter().map(|o| l.transpose() * o * e).collect();
    ps.iter()
        .map(|&(a, b)| {
            let mut out = DMatrix::zeros(d, d);
            for (k, &(c, dd)) in ps.iter().enumerate() {
                let w = e[(c, a)] * e[(dd, b)] - e[(dd, a)] * e[(c, b)];
                if w != 0.0 {
                    out += &conj[k] * w;
                }
            }
            out
        })
        .collect()
}

/// Numerical rank with threshold `max(tol · σ_max, RANK_FLOOR)`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    let cut = (tol * smax).max(RANK_FLOOR);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Rank of the span of the off-diagonal blocks (rows `0..2`, columns
/// `2..D`), each block flattened into one row.
pub fn offdiag_rank(ops: &[DMatrix<f64>], tol: f64) -> usize {
    let Some(first) = ops.first() else { return 0 };
    let d = first.nrows();
    if d <= 2 {
        return 0;
    }
    let cols = 2 * (d - 2);
    let stacked = DMatrix::from_fn(ops.len(), cols, |r, c| ops[r][(c / (d - 2), 2 + c % (d - 2))]);
    numerical_rank(&stacked, tol)
}

pub fn curvature_operators(
    chart: &Chart,
    torsion: &TorsionField,
    x: &[f64],
    opts: &HolonomyOptions,
) -> Result<CurvatureSample> {
    let h = opts.step;
    chart.check_interior(x, 4.0 * h)?;
    let fine = coordinate_curvature(chart, torsion, x, h)?;
    let coarse = coordinate_curvature(chart, torsion, x, 2.0 * h)?;
    let diff = fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (f - c).amax())
        .fold(0.0, f64::max);
    let scale = fine.iter().map(|f| f.amax()).fold(1.0, f64::max);
    if diff > opts.richardson_tolerance * scale {
        return Err(Error::StepTooLarge {
            step: h,
            coarse: 2.0 * h,
            diff,
        });
    }
    let (l, e) = frame(chart, x)?;
    let operators = to_frame(&fine, &l, &e);
    let max_asymmetry = operators
        .iter()
        .map(|o| (o + o.transpose()).amax())
        .fold(0.0, f64::max);
    Ok(CurvatureSample {
        point: x.to_vec(),
        offdiag_rank: offdiag_rank(&operators, opts.rank_tolerance),
        operators,
        tolerance_used: opts.rank_tolerance,
        max_asymmetry,
        richardson_diff: diff,
    })
}

/// `¼[T_a, T_b]` in the orthonormal frame, for `a < b`. This is the exact
/// curvature when the chart is flat and `T` is constant.
pub fn commutator_oracle(chart: &Chart, torsion: &TorsionField, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let t = torsion.raised(chart, x);
    let ops: Vec<DMatrix<f64>> = pairs(chart.dim())
        .into_iter()
        .map(|(a, b)| (&t[a] * &t[b] - &t[b] * &t[a]) * 0.25)
        .collect();
    let (l, e) = frame(chart, x)?;
    Ok(to_frame(&ops, &l, &e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRank {
    pub point: Vec<f64>,
    pub rank: usize,
    pub oracle_rank: usize,
    pub max_asymmetry: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankSurvey {
    pub min_rank: usize,
    pub max_rank: usize,
    pub per_point: Vec<PointRank>,
    pub tolerance: f64,
}

impl RankSurvey {
    pub fn max_asymmetry(&self) -> f64 {
        self.per_point.iter().map(|p| p.max_asymmetry).fold(0.0, f64::max)
    }

    /// The lower bound lives on the holonomy algebra over an open set, so the
    /// decision value is the maximum over sampled points. A shortfall only
    /// counts once the commutator oracle also falls short.
    pub fn check_lower_bound(&self, r_sharp: u8) -> LowerBound {
        let target = usize::from(r_sharp);
        let holds = self.max_rank >= target;
        let oracle_max = self.per_point.iter().map(|p| p.oracle_rank).max().unwrap_or(0);
        LowerBound {
            r_sharp,
            decision_rank: self.max_rank,
            holds,
            violation_confirmed: !holds && oracle_max < target,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LowerBound {
    pub r_sharp: u8,
    pub decision_rank: usize,
    pub holds: bool,
    pub violation_confirmed: bool,
}

pub fn offdiag_rank_survey(
    chart: &Chart,
    torsion: &TorsionField,
    points: &[Vec<f64>],
    opts: &HolonomyOptions,
) -> Result<RankSurvey> {
    if points.is_empty() {
        return Err(Error::InvalidSpec("rank survey needs at least one point".into()));
    }
    let per_point = points
        .iter()
        .map(|x| {
            let sample = curvature_operators(chart, torsion, x, opts)?;
            let oracle = commutator_oracle(chart, torsion, x)?;
            Ok(PointRank {
                point: x.clone(),
                rank: sample.offdiag_rank,
                oracle_rank: offdiag_rank(&oracle, opts.rank_tolerance),
                max_asymmetry: sample.max_asymmetry,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankSurvey {
        min_rank: per_point.iter().map(|p| p.rank).min().unwrap_or(0),
        max_rank: per_point.iter().map(|p| p.rank).max().unwrap_or(0),
        per_point,
        tolerance: opts.rank_tolerance,
    })
}

/// `count` seeded points drawn from the interior nodes of a lattice with
/// `lattice` nodes per axis (periodic axes use every node but the last).
pub fn sample_points(chart: &Chart, count: usize, seed: u64, lattice: usize) -> Vec<Vec<f64>> {
    let lattice = lattice.max(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..chart.dim())
                .map(|a| {
                    let (lo, hi) = chart.range(a);
                    let node = if chart.is_periodic(a) {
                        rng.random_range(0..lattice - 1)
                    } else {
                        rng.random_range(1..lattice - 1)
                    };
                    lo + (hi - lo) * node as f64 / (lattice - 1) as f64
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::{decompose, FactorSpec};
    use crate::rational::{int, PiMultiple};

    pub(crate) fn flat_t2_t2_s1() -> (ProductSpec, Chart) {
        let spec = ProductSpec::new(1, vec![FactorSpec::unit_torus(2)], vec![PiMultiple::one()]).unwrap();
        let chart = Chart::for_product(&spec);
        (spec, chart)
    }

    fn d_theta(spec: &ProductSpec) -> TorsionField {
        TorsionField::from_class(spec, &decompose(&[int(0), int(0), int(1)], spec).unwrap())
    }

    #[test]
    fn flat_torsion_free_coefficients_vanish() {
        let (_, chart) = flat_t2_t2_s1();
        let g = connection_coefficients(&chart, &TorsionField::zero(), &[0.5; 5], 0.1).unwrap();
        assert!(g.iter().all(|m| m.amax() == 0.0));
        assert!(matches!(
            connection_coefficients(&chart, &TorsionField::zero(), &[0.01, 0.5, 0.5, 0.5, 0.5], 0.1),
            Err(Error::BoundaryTooClose { axis: 0, .. })
        ));
    }

    #[test]
    fn contorsion_is_totally_antisymmetric() {
        let (spec, chart) = flat_t2_t2_s1();
        let x = [0.5; 5];
        let t = d_theta(&spec);
        let g = connection_coefficients(&chart, &t, &x, 0.1).unwrap();
        // flat metric: lowering is the identity
        for a in 0..5 {
            for i in 0..5 {
                for j in 0..5 {
                    assert_eq!(g[a][(i, j)], -g[i][(a, j)]);
                    assert_eq!(g[a][(i, j)], -g[a][(j, i)]);
                }
            }
        }
        assert_eq!(g[0][(4, 1)], 0.5);
    }

    #[test]
    fn flat_constant_torsion_matches_commutator_oracle() {
        let (spec, chart) = flat_t2_t2_s1();
        let t = d_theta(&spec);
        let x = [0.4, 0.6, 0.3, 0.7, 0.5];
        let sample = curvature_operators(&chart, &t, &x, &HolonomyOptions::default()).unwrap();
        let oracle = commutator_oracle(&chart, &t, &x).unwrap();
        for (r, o) in sample.operators.iter().zip(&oracle) {
            assert!((r - o).amax() <= 1e-8 * o.amax().max(1.0));
        }
        assert!(sample.max_asymmetry <= 1e-9);
        assert_eq!(sample.offdiag_rank, 2);
    }

    #[test]
    fn torsion_free_flat_curvature_is_zero() {
        let (_, chart) = flat_t2_t2_s1();
        let sample =
            curvature_operators(&chart, &TorsionField::zero(), &[0.5; 5], &HolonomyOptions::default()).unwrap();
        assert!(sample.operators.iter().all(|o| o.amax() == 0.0));
        assert_eq!(sample.offdiag_rank, 0);
    }

    #[test]
    fn hyperbolic_sigma_has_unit_negative_curvature() {
        let spec = ProductSpec::new(2, vec![FactorSpec::unit_torus(1)], vec![]).unwrap();
        let chart = Chart::for_product(&spec);
        let x = [0.1, 1.4, 0.5];
        let sample = curvature_operators(&chart, &TorsionField::zero(), &x, &HolonomyOptions::default()).unwrap();
        let sigma = &sample.operators[0];
        // ⟨R(e₁,e₂)e₂, e₁⟩ = K = −1
        assert!((sigma[(0, 1)] - (-1.0)).abs() < 1e-8, "{sigma}");
        assert!(sample.operators[1..].iter().all(|o| o.amax() < 1e-9));
        assert_eq!(sample.offdiag_rank, 0);
        assert!(sample.max_asymmetry <= 1e-9);
    }

    #[test]
    fn survey_and_guard() {
        let (spec, chart) = flat_t2_t2_s1();
        let points = sample_points(&chart, 4, 7, 9);
        assert_eq!(points, sample_points(&chart, 4, 7, 9));
        assert_ne!(points, sample_points(&chart, 4, 8, 9));
        let opts = HolonomyOptions::default();
        let zero = offdiag_rank_survey(&chart, &TorsionField::zero(), &points, &opts).unwrap();
        assert_eq!(zero.max_rank, 0);
        let check = zero.check_lower_bound(1);
        assert!(!check.holds && check.violation_confirmed);
        let t = offdiag_rank_survey(&chart, &d_theta(&spec), &points, &opts).unwrap();
        assert_eq!((t.min_rank, t.max_rank), (2, 2));
        assert!(t.check_lower_bound(0).holds);
        assert!(offdiag_rank_survey(&chart, &TorsionField::zero(), &[], &opts).is_err());
    }

    #[test]
    fn rank_threshold_ignores_noise() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-9]);
        assert_eq!(numerical_rank(&m, 1e-7), 1);
        assert_eq!(numerical_rank(&DMatrix::from_element(2, 2, 1e-12), 1e-7), 0);
    }
}
