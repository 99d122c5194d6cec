//! Explicit coordinate charts for product backgrounds.
//!
//! Each factor is a block: flat boxes (genus-1 surfaces, flat generic
//! factors, tori) or upper-half-space patches `y⁻²(dx₁² + … + dy²)` restricted
//! to `y ∈ [1, 2]` (curved surfaces and generic factors without parallel
//! directions). Global topology never enters here.

use nalgebra::DMatrix;

use crate::cohomology::{FactorSpec, ProductSpec};
use crate::error::{Error, Result};
use crate::field::{axis_bit, Axis, Field, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    Flat,
    /// Constant curvature −1, last coordinate of the block is the height.
    Hyperbolic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub offset: usize,
    pub geometry: Geometry,
    pub ranges: Vec<(f64, f64)>,
    /// Circle coordinates; no boundary checks apply along them.
    pub periodic: bool,
}

impl Block {
    fn flat(offset: usize, ranges: Vec<(f64, f64)>, periodic: bool) -> Self {
        Block {
            offset,
            geometry: Geometry::Flat,
            ranges,
            periodic,
        }
    }

    fn hyperbolic(offset: usize, dim: usize) -> Self {
        let mut ranges = vec![(-0.5, 0.5); dim - 1];
        ranges.push((1.0, 2.0));
        Block {
            offset,
            geometry: Geometry::Hyperbolic,
            ranges,
            periodic: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    fn height_coord(&self) -> usize {
        self.offset + self.dim() - 1
    }

    fn contains(&self, coord: usize) -> bool {
        (self.offset..self.offset + self.dim()).contains(&coord)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub blocks: Vec<Block>,
}

impl Chart {
    /// Block 0 is Σ, then one block per factor of N, then the torus `T^k`.
    pub fn for_product(spec: &ProductSpec) -> Chart {
        let mut blocks = Vec::new();
        blocks.push(if spec.sigma_genus >= 2 {
            Block::hyperbolic(0, 2)
        } else {
            Block::flat(0, vec![(0.0, 1.0); 2], false)
        });
        let mut offset = 2;
        for factor in &spec.n {
            let dim = factor.dim();
            blocks.push(match factor {
                FactorSpec::Torus { circumferences } => Block::flat(
                    offset,
                    circumferences.iter().map(|l| (0.0, l.to_f64())).collect(),
                    true,
                ),
                f if f.is_hyperbolic() => Block::hyperbolic(offset, dim),
                _ => Block::flat(offset, vec![(0.0, 1.0); dim], false),
            });
            offset += dim;
        }
        if spec.k() > 0 {
            blocks.push(Block::flat(
                offset,
                spec.torus.iter().map(|l| (0.0, l.to_f64())).collect(),
                true,
            ));
        }
        Chart { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    fn block_of(&self, coord: usize) -> &Block {
        self.blocks
            .iter()
            .find(|b| b.contains(coord))
            .expect("coordinate inside chart")
    }

    pub fn range(&self, coord: usize) -> (f64, f64) {
        let b = self.block_of(coord);
        b.ranges[coord - b.offset]
    }

    pub fn is_periodic(&self, coord: usize) -> bool {
        self.block_of(coord).periodic
    }

    /// Conformal factor `g_ii` of the (diagonal) metric at `x`.
    fn diag(&self, x: &[f64], coord: usize) -> f64 {
        let b = self.block_of(coord);
        match b.geometry {
            Geometry::Flat => 1.0,
            Geometry::Hyperbolic => x[b.height_coord()].powi(-2),
        }
    }

    pub fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| if i == j { self.diag(x, i) } else { 0.0 })
    }

    pub fn metric_inverse(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 / self.diag(x, i) } else { 0.0 })
    }

    /// `√det g_Σ`, the density of `vol_Σ` in the chart.
    pub fn sigma_density(&self, x: &[f64]) -> f64 {
        self.diag(x, 0).sqrt() * self.diag(x, 1).sqrt()
    }

    /// `A(x¹, x²)` with `∂₁A = √g_Σ`, vanishing on the left edge.
    pub fn sigma_area_potential(&self, x: &[f64]) -> f64 {
        let x0 = self.blocks[0].ranges[0].0;
        (x[0] - x0) * self.sigma_density(x)
    }

    /// Levi-Civita symbols in closed form, as matrices `(Γ_a)^i_j = Γ^i_{aj}`.
    /// For `g = y⁻²δ`: `Γ^i_{jk} = −(δ^i_j δ_{kh} + δ^i_k δ_{jh} − δ_{jk} δ^i_h)/y`.
    pub fn levi_civita(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let d = self.dim();
        let mut gamma = vec![DMatrix::zeros(d, d); d];
        for b in self.blocks.iter().filter(|b| b.geometry == Geometry::Hyperbolic) {
            let h = b.height_coord();
            let inv_y = 1.0 / x[h];
            let coords = b.offset..b.offset + b.dim();
            for a in coords.clone() {
                for j in coords.clone() {
                    for i in coords.clone() {
                        let mut v = 0.0;
                        if i == a && j == h {
                            v -= inv_y;
                        }
                        if i == j && a == h {
                            v -= inv_y;
                        }
                        if a == j && i == h {
                            v += inv_y;
                        }
                        gamma[a][(i, j)] = v;
                    }
                }
            }
        }
        gamma
    }

    /// Errors unless every non-periodic coordinate is at least `margin` inside
    /// its range.
    pub fn check_interior(&self, x: &[f64], margin: f64) -> Result<()> {
        for (axis, &xi) in x.iter().enumerate() {
            if self.is_periodic(axis) {
                continue;
            }
            let (lo, hi) = self.range(axis);
            if xi - lo < margin || hi - xi < margin {
                return Err(Error::BoundaryTooClose { axis, margin });
            }
        }
        Ok(())
    }

    /// Uniform grid with `points` per axis over the chart box.
    pub fn grid(&self, points: usize) -> Grid {
        Grid::new(
            (0..self.dim())
                .map(|a| {
                    let (lo, hi) = self.range(a);
                    Axis::new(lo, hi, points)
                })
                .collect(),
        )
    }

    /// Metric component `G_ij` as a field; exact where the block is flat.
    pub fn metric_field(&self, grid: &Grid, i: usize, j: usize) -> Field {
        if i != j {
            return Field::zero();
        }
        let b = self.block_of(i);
        match b.geometry {
            Geometry::Flat => Field::one(),
            Geometry::Hyperbolic => {
                let h = b.height_coord();
                Field::sample(grid, axis_bit(h), move |x| x[h].powi(-2))
            }
        }
    }

    pub fn sigma_density_field(&self, grid: &Grid) -> Field {
        match self.blocks[0].geometry {
            Geometry::Flat => Field::one(),
            Geometry::Hyperbolic => Field::sample(grid, axis_bit(1), |x| x[1].powi(-2)),
        }
    }

    pub fn sigma_area_potential_field(&self, grid: &Grid) -> Field {
        let mask = match self.blocks[0].geometry {
            Geometry::Flat => axis_bit(0),
            Geometry::Hyperbolic => axis_bit(0) | axis_bit(1),
        };
        Field::sample(grid, mask, |x| self.sigma_area_potential(x))
    }

    /// Interior point at fractional position `t ∈ (0,1)` along every axis.
    pub fn point_at(&self, t: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|a| {
                let (lo, hi) = self.range(a);
                lo + (hi - lo) * t[a]
            })
            .collect()
    }
}

/// Levi-Civita symbols from central differences of an arbitrary metric.
pub fn levi_civita_fd(
    metric: impl Fn(&[f64]) -> DMatrix<f64>,
    x: &[f64],
    step: f64,
) -> Vec<DMatrix<f64>> {
    let d = x.len();
    let dg: Vec<DMatrix<f64>> = (0..d)
        .map(|l| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[l] += step;
            xm[l] -= step;
            (metric(&xp) - metric(&xm)) / (2.0 * step)
        })
        .collect();
    let ginv = metric(x)
        .try_inverse()
        .expect("metric must be invertible");
    let mut gamma = vec![DMatrix::zeros(d, d); d];
    for a in 0..d {
        for j in 0..d {
            for i in 0..d {
                gamma[a][(i, j)] = 0.5
                    * (0..d)
                        .map(|l| ginv[(i, l)] * (dg[a][(l, j)] + dg[j][(l, a)] - dg[l][(a, j)]))
                        .sum::<f64>();
            }
        }
    }
    gamma
}
