//! Seeded random products, classes and backgrounds shared by the suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use flux_engine::background::{BackgroundFields, Dims};
use flux_engine::cohomology::{decompose, Circle, FactorSpec, MixedFluxClass, ProductSpec};
use flux_engine::field::{axis_bit, Axis, Field, Grid};
use flux_engine::rational::{rat, PiMultiple, Rational};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rational(rng: &mut impl Rng) -> Rational {
    if rng.random_bool(0.25) {
        return rat(0, 1);
    }
    rat(rng.random_range(-9..=9), rng.random_range(1..=6))
}

pub fn random_circumference(rng: &mut impl Rng) -> PiMultiple {
    let pool = ["1", "2", "1/2", "2pi", "pi", "3/2*pi"];
    pool[rng.random_range(0..pool.len())].parse().unwrap()
}

/// A product `Σ × N × T^k`. With `p1_empty` every factor of N is curved, so
/// the parallel stratum of N is trivial.
pub fn random_spec(rng: &mut impl Rng, k: usize, p1_empty: bool) -> ProductSpec {
    let genus = rng.random_range(1..=3);
    let factors = rng.random_range(1..=2);
    let n = (0..factors)
        .map(|_| match (p1_empty, rng.random_range(0..3)) {
            (true, 0) | (false, 0) => FactorSpec::Surface {
                genus: rng.random_range(if p1_empty { 2 } else { 1 }..=3),
            },
            (true, _) => FactorSpec::Generic {
                dim: rng.random_range(2..=3),
                b1: rng.random_range(0..=2),
                p1_mask: BTreeSet::new(),
            },
            (false, 1) => {
                let b1 = rng.random_range(1..=3);
                FactorSpec::Generic {
                    dim: rng.random_range(1..=3),
                    b1,
                    p1_mask: (0..b1).filter(|_| rng.random_bool(0.5)).collect(),
                }
            }
            (false, _) => FactorSpec::Torus {
                circumferences: (0..rng.random_range(1..=2))
                    .map(|_| random_circumference(rng))
                    .collect(),
            },
        })
        .collect();
    let torus = (0..k).map(|_| random_circumference(rng)).collect();
    ProductSpec::new(genus, n, torus).unwrap()
}

pub fn random_class(rng: &mut impl Rng, spec: &ProductSpec) -> MixedFluxClass {
    let beta: Vec<Rational> = (0..spec.beta_len()).map(|_| random_rational(rng)).collect();
    decompose(&beta, spec).unwrap()
}

/// A random nonempty subset of the flat circles, at most `max` of them.
pub fn random_dualize_set(rng: &mut impl Rng, spec: &ProductSpec, max: usize) -> Vec<Circle> {
    let mut circles: Vec<Circle> = spec.flat_circles().iter().map(|c| c.circle).collect();
    circles.shuffle(rng);
    let len = rng.random_range(1..=circles.len().min(max));
    circles.truncate(len);
    circles
}

pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// A generic positive-definite background on `Σ × N × T^k` whose components
/// vary over Σ and the first N coordinate but never along the circles.
pub fn random_background(rng: &mut impl Rng, points: usize) -> BackgroundFields {
    let dims = Dims {
        dim_n: rng.random_range(1..=2),
        k: rng.random_range(1..=2),
    };
    let d = dims.total();
    let circles: Vec<usize> = (2 + dims.dim_n..d).collect();
    let axes = (0..d)
        .map(|a| {
            if circles.contains(&a) {
                Axis::new(0.0, std::f64::consts::TAU, points)
            } else {
                Axis::new(0.0, 1.0, points)
            }
        })
        .collect();
    let grid = Grid::new(axes);
    let mut bg = BackgroundFields::flat(dims, grid.clone(), circles);
    let mask = axis_bit(0) | axis_bit(1) | axis_bit(2);
    let mut wave = |scale: f64| {
        let (a, b, c, phase) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.0..6.0),
        );
        Field::sample(&grid, mask, move |x| scale * (a * x[0] + b * (3.0 * x[1] + phase).sin() + c * x[2] * x[0]))
    };
    let off = 0.4 / d as f64;
    for i in 0..d {
        let diag = wave(0.2).map(|v| 1.5 + v);
        bg.set_g(i, i, diag);
        for j in i + 1..d {
            bg.set_g(i, j, wave(off));
            bg.set_b(i, j, wave(1.0));
        }
    }
    bg
}
