//! Numeric field tier: metric and B-field components on a chart grid, their
//! realization from a cohomological flux class, and the sampled H-flux
//! `H = dB`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};

use crate::chart::Chart;
use crate::cohomology::{MixedFluxClass, ProductSpec};
use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::rational::Rational;

/// Coordinate classes of the product chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CoordIndex {
    Sigma(usize),
    FactorN(usize),
    Torus(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub dim_n: usize,
    pub k: usize,
}

impl Dims {
    pub fn total(&self) -> usize {
        2 + self.dim_n + self.k
    }

    pub fn classify(&self, coord: usize) -> Option<CoordIndex> {
        match coord {
            0 | 1 => Some(CoordIndex::Sigma(coord)),
            c if c < 2 + self.dim_n => Some(CoordIndex::FactorN(c - 2)),
            c if c < self.total() => Some(CoordIndex::Torus(c - 2 - self.dim_n)),
            _ => None,
        }
    }

    pub fn index(&self, ci: CoordIndex) -> Option<usize> {
        let (c, ok) = match ci {
            CoordIndex::Sigma(a) => (a, a < 2),
            CoordIndex::FactorN(a) => (2 + a, a < self.dim_n),
            CoordIndex::Torus(i) => (2 + self.dim_n + i, i < self.k),
        };
        ok.then_some(c)
    }
}

/// `G_MN` (symmetric) and `B_MN` (antisymmetric) over one chart grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundFields {
    pub dims: Dims,
    pub grid: Grid,
    /// Isometric circle coordinates; no component may depend on them.
    pub circle_coords: Vec<usize>,
    g: Vec<Field>,
    b: Vec<Field>,
}

impl BackgroundFields {
    /// Flat metric, vanishing B-field.
    pub fn flat(dims: Dims, grid: Grid, circle_coords: Vec<usize>) -> Self {
        let d = dims.total();
        assert_eq!(grid.dim(), d, "grid must cover every coordinate");
        let g = (0..d * d)
            .map(|ij| if ij / d == ij % d { Field::one() } else { Field::zero() })
            .collect();
        BackgroundFields {
            dims,
            grid,
            circle_coords,
            g,
            b: vec![Field::zero(); d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    pub fn g(&self, i: usize, j: usize) -> &Field {
        &self.g[i * self.dim() + j]
    }

    pub fn b(&self, i: usize, j: usize) -> &Field {
        &self.b[i * self.dim() + j]
    }

    pub fn set_g(&mut self, i: usize, j: usize, f: Field) {
        let d = self.dim();
        self.g[j * d + i] = f.clone();
        self.g[i * d + j] = f;
    }

    /// Sets `B_ij = f` and `B_ji = −f`. Diagonal entries stay zero.
    pub fn set_b(&mut self, i: usize, j: usize, f: Field) {
        assert_ne!(i, j, "B is antisymmetric");
        let d = self.dim();
        self.b[j * d + i] = f.neg();
        self.b[i * d + j] = f;
    }

    /// Every component, labelled, for diagnostics and comparisons.
    pub fn components(&self) -> impl Iterator<Item = (String, &Field)> {
        let d = self.dim();
        (0..d * d).flat_map(move |ij| {
            let (i, j) = (ij / d, ij % d);
            [
                (format!("G[{i}][{j}]"), &self.g[ij]),
                (format!("B[{i}][{j}]"), &self.b[ij]),
            ]
        })
    }

    /// `G_θθ = 1` and `G_μθ = 0` for all `μ ≠ θ` (within `tol` on samples).
    pub fn product_flag(&self, coord: usize, tol: f64) -> bool {
        let gtt = self.g(coord, coord);
        let unit = match gtt.as_const() {
            Some(q) => q == &Rational::from_integer(1.into()),
            None => gtt.values().iter().all(|v| (v - 1.0).abs() <= tol),
        };
        unit && (0..self.dim())
            .filter(|&mu| mu != coord)
            .all(|mu| self.g(mu, coord).is_zero_within(tol))
    }

    pub fn product_flags(&self, tol: f64) -> Vec<bool> {
        self.circle_coords
            .iter()
            .map(|&c| self.product_flag(c, tol))
            .collect()
    }

    /// Structural check that nothing depends on an isometric circle.
    pub fn check_fiber_independence(&self, coord: usize) -> Result<()> {
        match self.components().find(|(_, f)| f.depends_on(coord)) {
            Some((name, _)) => Err(Error::FiberDependence {
                component: name,
                coord,
            }),
            None => Ok(()),
        }
    }

    /// Positive definiteness of G: exact rational elimination when every
    /// component is constant, Cholesky at every sample otherwise.
    pub fn check_positive_definite(&self) -> Result<()> {
        let d = self.dim();
        if let Some(exact) = self.g.iter().map(Field::as_const).collect::<Option<Vec<_>>>() {
            let mut m: Vec<Rational> = exact.into_iter().cloned().collect();
            for p in 0..d {
                let pivot = m[p * d + p].clone();
                if !pivot.is_positive() {
                    return Err(Error::NotPositiveDefinite { sample: 0 });
                }
                for r in p + 1..d {
                    let factor = &m[r * d + p] / &pivot;
                    if factor.is_zero() {
                        continue;
                    }
                    for c in p..d {
                        let delta = &factor * &m[p * d + c];
                        m[r * d + c] -= delta;
                    }
                }
            }
            return Ok(());
        }
        let mask = self.g.iter().fold(0, |m, f| m | f.mask());
        for flat in 0..self.grid.len(mask) {
            let idx = self.grid.multi_index(mask, flat);
            let g = DMatrix::from_fn(d, d, |i, j| self.g(i, j).at(&self.grid, &idx));
            if g.cholesky().is_none() {
                return Err(Error::NotPositiveDefinite { sample: flat });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for &c in &self.circle_coords {
            self.check_fiber_independence(c)?;
        }
        self.check_positive_definite()
    }

    /// Largest component-wise deviation, absolute and relative to the
    /// largest magnitude in `self`. Exact constants that agree contribute 0.
    pub fn max_deviation(&self, other: &BackgroundFields) -> (f64, f64) {
        let abs = self
            .g
            .iter()
            .zip(&other.g)
            .chain(self.b.iter().zip(&other.b))
            .map(|(a, b)| a.max_abs_diff(b, &self.grid))
            .fold(0.0, f64::max);
        let scale = self
            .g
            .iter()
            .chain(&self.b)
            .map(Field::max_abs)
            .fold(1.0, f64::max);
        (abs, abs / scale)
    }

    /// True when both backgrounds agree exactly on every constant component
    /// and within `rel` on sampled ones.
    pub fn agrees_with(&self, other: &BackgroundFields, rel: f64) -> bool {
        let exact_ok = self
            .g
            .iter()
            .zip(&other.g)
            .chain(self.b.iter().zip(&other.b))
            .all(|(a, b)| match (a, b) {
                (Field::Const(x), Field::Const(y)) => x == y,
                _ => true,
            });
        exact_ok && self.max_deviation(other).1 <= rel
    }
}

/// A background realizing `H = vol_Σ ∧ β` on the product chart, with
/// `B_{2m} = β_m · A(x¹, x²)` where `∂₁A = √g_Σ`.
#[derive(Clone, Debug)]
pub struct Realization {
    pub chart: Chart,
    pub background: BackgroundFields,
    pub sigma_density: Field,
}

pub fn realize(spec: &ProductSpec, cls: &MixedFluxClass, points: usize) -> Result<Realization> {
    let chart = Chart::for_product(spec);
    let grid = chart.grid(points);
    let dims = Dims {
        dim_n: spec.dim_n(),
        k: spec.k(),
    };
    let circle_coords = spec.flat_circles().iter().map(|c| c.coord).collect();
    let mut bg = BackgroundFields::flat(dims, grid.clone(), circle_coords);
    for i in 0..dims.total() {
        bg.set_g(i, i, chart.metric_field(&grid, i, i));
    }
    let potential = chart.sigma_area_potential_field(&grid);
    for (m, tau) in spec.realized_covector(cls).iter().enumerate() {
        if !tau.is_zero() {
            bg.set_b(1, 2 + m, Field::constant(tau.clone()).mul(&potential, &grid));
        }
    }
    let sigma_density = chart.sigma_density_field(&grid);
    Ok(Realization {
        chart,
        background: bg,
        sigma_density,
    })
}

/// Sampled 3-form components `H_{ijk}`, `i < j < k`; missing entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFlux {
    pub grid: Grid,
    pub components: BTreeMap<[usize; 3], Field>,
}

impl SampledFlux {
    /// `H_{ijk} = ∂_i B_{jk} + ∂_j B_{ki} + ∂_k B_{ij}` by fourth-order
    /// differences; derivatives along fields' missing axes vanish exactly.
    pub fn from_background(bg: &BackgroundFields) -> Result<Self> {
        let d = bg.dim();
        let grid = &bg.grid;
        let mut components = BTreeMap::new();
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    let h = bg
                        .b(j, k)
                        .derivative(grid, i)?
                        .add(&bg.b(k, i).derivative(grid, j)?, grid)
                        .add(&bg.b(i, j).derivative(grid, k)?, grid);
                    if !h.is_exact_zero() {
                        components.insert([i, j, k], h);
                    }
                }
            }
        }
        Ok(SampledFlux {
            grid: grid.clone(),
            components,
        })
    }

    /// `H_{ijk}` for any index order, with the permutation sign applied.
    pub fn component(&self, i: usize, j: usize, k: usize) -> Field {
        let mut idx = [i, j, k];
        if i == j || j == k || i == k {
            return Field::zero();
        }
        let mut sign = 1;
        for a in 0..3 {
            for b in 0..2 - a {
                if idx[b] > idx[b + 1] {
                    idx.swap(b, b + 1);
                    sign = -sign;
                }
            }
        }
        match self.components.get(&idx) {
            Some(f) if sign < 0 => f.neg(),
            Some(f) => f.clone(),
            None => Field::zero(),
        }
    }

    pub fn max_abs_where(&self, pred: impl Fn(&[usize; 3]) -> bool) -> f64 {
        self.components
            .iter()
            .filter(|(idx, _)| pred(idx))
            .map(|(_, f)| f.max_abs())
            .fold(0.0, f64::max)
    }

    /// Largest component without exactly two Σ legs; zero for pure (2,1)
    /// flux.
    pub fn bidegree_violation(&self) -> f64 {
        self.max_abs_where(|idx| idx.iter().filter(|&&a| a < 2).count() != 2)
    }

    /// `H_{12m} / √g_Σ` for every coordinate `m ≥ 2`: the local coefficients
    /// of β read back from the field tier.
    pub fn read_covector(&self, sigma_density: &Field, dim: usize) -> Vec<Field> {
        (2..dim)
            .map(|m| self.component(0, 1, m).div(sigma_density, &self.grid))
            .collect()
    }
}

/// Both tiers of one flux: exact class coefficients and, optionally, the
/// sampled components.
#[derive(Clone, Debug)]
pub struct FluxComponents {
    pub cohomological: MixedFluxClass,
    pub field_tier: Option<SampledFlux>,
}

impl FluxComponents {
    pub fn exact(cls: MixedFluxClass) -> Self {
        FluxComponents {
            cohomological: cls,
            field_tier: None,
        }
    }

    /// Largest difference between the field-tier coefficients read back from
    /// `H_{12m}/√g_Σ` and the class's local representative.
    pub fn tier_mismatch(&self, spec: &ProductSpec, sigma_density: &Field) -> Option<f64> {
        let sampled = self.field_tier.as_ref()?;
        let expected = spec.realized_covector(&self.cohomological);
        let read = sampled.read_covector(sigma_density, spec.total_dim());
        Some(
            read.iter()
                .zip(&expected)
                .map(|(f, e)| f.max_abs_diff(&Field::constant(e.clone()), &sampled.grid))
                .fold(0.0, f64::max),
        )
    }
}

/// Exact value of the class's `H_{ijk}` density coefficient: the class only
/// has components `H_{12m} = √g_Σ β_m`, so any index triple without both Σ
/// legs is exactly zero.
pub fn exact_component(spec: &ProductSpec, cls: &MixedFluxClass, idx: [usize; 3]) -> Rational {
    let mut sorted = idx;
    sorted.sort_unstable();
    if sorted[0] == 0 && sorted[1] == 1 && sorted[2] >= 2 {
        spec.realized_covector(cls)[sorted[2] - 2].clone()
    } else {
        Rational::zero()
    }
}
