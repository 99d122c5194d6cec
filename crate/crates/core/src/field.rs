//! Scalar component fields on a tensor-product chart grid.
//!
//! A field is either an exact rational constant or a sample array over the
//! subset of grid axes it depends on (its axis mask). Binary operations
//! broadcast over the union of masks, so a field that never depends on a
//! circle coordinate cannot acquire such a dependence by accident, and
//! independence from a fiber is a structural fact rather than a numeric one.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};

pub type AxisMask = u64;

pub fn axis_bit(axis: usize) -> AxisMask {
    1 << axis
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Axis { lo, hi, n }
    }

    pub fn step(&self) -> f64 {
        if self.n > 1 {
            (self.hi - self.lo) / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lo + self.step() * i as f64
    }

    pub fn center_index(&self) -> usize {
        self.n / 2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

/// `(axis, count, stride)` for each axis in a mask, row-major with the
/// highest axis fastest.
fn layout(grid: &Grid, mask: AxisMask) -> Vec<(usize, usize, usize)> {
    let mut out: Vec<(usize, usize, usize)> = (0..grid.axes.len())
        .filter(|&a| mask & axis_bit(a) != 0)
        .map(|a| (a, grid.axes[a].n, 0))
        .collect();
    let mut stride = 1;
    for entry in out.iter_mut().rev() {
        entry.2 = stride;
        stride *= entry.1;
    }
    out
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Self {
        assert!(axes.len() <= 64, "at most 64 grid axes");
        Grid { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self, mask: AxisMask) -> usize {
        layout(self, mask).iter().map(|&(_, n, _)| n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.iter().any(|a| a.n == 0)
    }

    /// Full multi-index (zeros off the mask) for a flat offset within `mask`.
    pub fn multi_index(&self, mask: AxisMask, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for &(axis, n, _) in layout(self, mask).iter().rev() {
            idx[axis] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn coords(&self, idx: &[usize]) -> Vec<f64> {
        self.axes.iter().zip(idx).map(|(a, &i)| a.coord(i)).collect()
    }

    pub fn center(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::center_index).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Const(Rational),
    Sampled { mask: AxisMask, values: Arc<Vec<f64>> },
}

fn flat_offset(grid: &Grid, mask: AxisMask, idx: &[usize]) -> usize {
    layout(grid, mask).iter().map(|&(a, _, s)| idx[a] * s).sum()
}

impl Field {
    pub fn zero() -> Self {
        Field::Const(Rational::zero())
    }

    pub fn one() -> Self {
        Field::Const(Rational::one())
    }

    pub fn constant(q: Rational) -> Self {
        Field::Const(q)
    }

    /// Samples `f` on the axes in `mask`. `f` receives full coordinates;
    /// axes outside the mask sit at their lower bound and must not matter.
    pub fn sample(grid: &Grid, mask: AxisMask, f: impl Fn(&[f64]) -> f64) -> Self {
        if mask == 0 {
            let x = grid.coords(&vec![0; grid.dim()]);
            return Field::Sampled {
                mask: 0,
                values: Arc::new(vec![f(&x)]),
            };
        }
        let values = (0..grid.len(mask))
            .map(|flat| f(&grid.coords(&grid.multi_index(mask, flat))))
            .collect();
        Field::Sampled {
            mask,
            values: Arc::new(values),
        }
    }

    pub fn mask(&self) -> AxisMask {
        match self {
            Field::Const(_) => 0,
            Field::Sampled { mask, .. } => *mask,
        }
    }

    pub fn depends_on(&self, axis: usize) -> bool {
        self.mask() & axis_bit(axis) != 0
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Field::Const(_))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            Field::Const(q) => Some(q),
            Field::Sampled { .. } => None,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Field::Const(q) if q.is_zero())
    }

    pub fn is_exact_one(&self) -> bool {
        matches!(self, Field::Const(q) if q.is_one())
    }

    /// Value at a full multi-index of the grid.
    pub fn at(&self, grid: &Grid, idx: &[usize]) -> f64 {
        match self {
            Field::Const(q) => to_f64(q),
            Field::Sampled { mask, values } => values[flat_offset(grid, *mask, idx)],
        }
    }

    /// Every stored value (a single value for constants).
    pub fn values(&self) -> Vec<f64> {
        match self {
            Field::Const(q) => vec![to_f64(q)],
            Field::Sampled { values, .. } => values.to_vec(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values().into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// max − min over the stored samples; 0 for constants.
    pub fn spread(&self) -> f64 {
        let v = self.values();
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi - lo
    }

    /// Zero within `tol` (exactly zero for constants).
    pub fn is_zero_within(&self, tol: f64) -> bool {
        match self {
            Field::Const(q) => q.is_zero(),
            Field::Sampled { .. } => self.max_abs() <= tol,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        match self {
            Field::Const(q) => Field::Sampled {
                mask: 0,
                values: Arc::new(vec![f(to_f64(q))]),
            },
            Field::Sampled { mask, values } => Field::Sampled {
                mask: *mask,
                values: Arc::new(values.iter().map(|&v| f(v)).collect()),
            },
        }
    }

    fn zip(
        &self,
        other: &Field,
        grid: &Grid,
        exact: impl Fn(&Rational, &Rational) -> Rational,
        float: impl Fn(f64, f64) -> f64,
    ) -> Field {
        if let (Field::Const(a), Field::Const(b)) = (self, other) {
            return Field::Const(exact(a, b));
        }
        let mask = self.mask() | other.mask();
        let values = (0..grid.len(mask))
            .map(|flat| {
                let idx = grid.multi_index(mask, flat);
                float(self.at(grid, &idx), other.at(grid, &idx))
            })
            .collect();
        Field::Sampled {
            mask,
            values: Arc::new(values),
        }
    }

    pub fn add(&self, other: &Field, grid: &Grid) -> Field {
        if self.is_exact_zero() {
            return other.clone();
        }
        if other.is_exact_zero() {
            return self.clone();
        }
        self.zip(other, grid, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field, grid: &Grid) -> Field {
        if other.is_exact_zero() {
            return self.clone();
        }
        self.zip(other, grid, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field, grid: &Grid) -> Field {
        if self.is_exact_zero() || other.is_exact_zero() {
            return Field::zero();
        }
        if self.is_exact_one() {
            return other.clone();
        }
        if other.is_exact_one() {
            return self.clone();
        }
        self.zip(other, grid, |a, b| a * b, |a, b| a * b)
    }

    /// Caller guarantees `other` has no zero samples.
    pub fn div(&self, other: &Field, grid: &Grid) -> Field {
        if self.is_exact_zero() {
            return Field::zero();
        }
        if other.is_exact_one() {
            return self.clone();
        }
        self.zip(other, grid, |a, b| a / b, |a, b| a / b)
    }

    pub fn neg(&self) -> Field {
        match self {
            Field::Const(q) => Field::Const(-q),
            Field::Sampled { .. } => self.map(|v| -v),
        }
    }

    /// Fourth-order finite difference along `axis`: central stencil in the
    /// interior, shifted five-point stencils on the two outermost layers.
    pub fn derivative(&self, grid: &Grid, axis: usize) -> Result<Field> {
        let Field::Sampled { mask, values } = self else {
            return Ok(Field::zero());
        };
        if mask & axis_bit(axis) == 0 {
            return Ok(Field::zero());
        }
        let ax = &grid.axes[axis];
        if ax.n < 5 {
            return Err(Error::InvalidSpec(format!(
                "axis {axis} needs at least 5 grid points for differentiation"
            )));
        }
        let n = ax.n;
        let h12 = 12.0 * ax.step();
        let stride = layout(grid, *mask)
            .into_iter()
            .find(|&(a, _, _)| a == axis)
            .map(|(_, _, s)| s)
            .unwrap_or(1);
        let out = (0..values.len())
            .map(|flat| {
                let i = (flat / stride) % n;
                let base = flat - i * stride;
                let f = |j: usize| values[base + j * stride];
                let d = match i {
                    0 => -25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4),
                    1 => -3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4),
                    i if i == n - 2 => {
                        3.0 * f(n - 1) + 10.0 * f(n - 2) - 18.0 * f(n - 3) + 6.0 * f(n - 4)
                            - f(n - 5)
                    }
                    i if i == n - 1 => {
                        25.0 * f(n - 1) - 48.0 * f(n - 2) + 36.0 * f(n - 3) - 16.0 * f(n - 4)
                            + 3.0 * f(n - 5)
                    }
                    i => f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2),
                };
                d / h12
            })
            .collect();
        Ok(Field::Sampled {
            mask: *mask,
            values: Arc::new(out),
        })
    }

    /// Largest pointwise |a − b| over the union of both masks; exact zero
    /// when both are equal constants.
    pub fn max_abs_diff(&self, other: &Field, grid: &Grid) -> f64 {
        match (self, other) {
            (Field::Const(a), Field::Const(b)) => to_f64(&(a - b)).abs(),
            _ => self.sub(other, grid).max_abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn grid2() -> Grid {
        Grid::new(vec![Axis::new(0.0, 1.0, 9), Axis::new(1.0, 2.0, 7)])
    }

    #[test]
    fn multi_index_round_trip() {
        let g = grid2();
        for flat in 0..g.len(3) {
            let idx = g.multi_index(3, flat);
            assert_eq!(flat_offset(&g, 3, &idx), flat);
        }
        assert_eq!(g.len(axis_bit(1)), 7);
    }

    #[test]
    fn broadcasting_keeps_masks_minimal() {
        let g = grid2();
        let x = Field::sample(&g, axis_bit(0), |p| p[0]);
        let y = Field::sample(&g, axis_bit(1), |p| p[1]);
        let xy = x.mul(&y, &g);
        assert_eq!(xy.mask(), 3);
        let idx = [4, 3];
        assert!((xy.at(&g, &idx) - 0.5 * 1.5).abs() < 1e-15);
        assert!(!x.add(&Field::one(), &g).depends_on(1));
    }

    #[test]
    fn exact_constants_stay_exact() {
        let g = grid2();
        let a = Field::constant(rat(1, 3));
        let b = Field::constant(int(3));
        assert_eq!(a.mul(&b, &g), Field::one());
        assert_eq!(a.div(&a, &g), Field::one());
        assert!(Field::zero().mul(&Field::sample(&g, 1, |p| p[0]), &g).is_exact_zero());
    }

    #[test]
    fn fourth_order_derivative_is_exact_on_quartics() {
        let g = grid2();
        let f = Field::sample(&g, 3, |p| p[0].powi(4) - 2.0 * p[0] * p[1].powi(3));
        let dx = f.derivative(&g, 0).unwrap();
        let dy = f.derivative(&g, 1).unwrap();
        for flat in 0..g.len(3) {
            let idx = g.multi_index(3, flat);
            let p = g.coords(&idx);
            assert!((dx.at(&g, &idx) - (4.0 * p[0].powi(3) - 2.0 * p[1].powi(3))).abs() < 1e-11);
            assert!((dy.at(&g, &idx) + 6.0 * p[0] * p[1].powi(2)).abs() < 1e-11);
        }
        assert!(Field::constant(int(4)).derivative(&g, 0).unwrap().is_exact_zero());
        assert!(Field::sample(&g, axis_bit(1), |p| p[1]).derivative(&g, 0).unwrap().is_exact_zero());
    }

    #[test]
    fn short_axes_cannot_be_differentiated() {
        let g = Grid::new(vec![Axis::new(0.0, 1.0, 3)]);
        let f = Field::sample(&g, 1, |p| p[0]);
        assert!(f.derivative(&g, 0).is_err());
    }
}
