//! Exact cohomological tier: factor declarations, the mixed (2,1) flux class
//! `H = vol_Σ ∧ β` with `β = γ + Σ cᵢ dθᵢ`, parallel-form strata and the
//! invariant r♯.
//!
//! Basis convention for β: the H¹(N) basis comes first (factor by factor, in
//! declaration order), the torus directions dθ₁..dθ_k after it. All indices in
//! this module are zero-based.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{PiMultiple, Rational};

/// One factor manifold of `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorSpec {
    /// Closed oriented surface. Genus 1 is taken with its flat metric, so
    /// both H¹ directions are parallel; genus ≥ 2 carries curvature −1 and
    /// has no parallel 1-forms.
    Surface { genus: u32 },
    /// A manifold known only through its dimension, first Betti number and
    /// which harmonic basis directions are parallel.
    Generic {
        dim: usize,
        b1: usize,
        p1_mask: BTreeSet<usize>,
    },
    /// Flat torus; every harmonic direction is parallel and each coordinate
    /// is an explicit circle factor.
    Torus { circumferences: Vec<PiMultiple> },
}

impl FactorSpec {
    pub fn unit_torus(k: usize) -> Self {
        FactorSpec::Torus {
            circumferences: vec![PiMultiple::one(); k],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FactorSpec::Surface { .. } => 2,
            FactorSpec::Generic { dim, .. } => *dim,
            FactorSpec::Torus { circumferences } => circumferences.len(),
        }
    }

    pub fn b1(&self) -> usize {
        match self {
            FactorSpec::Surface { genus } => 2 * *genus as usize,
            FactorSpec::Generic { b1, .. } => *b1,
            FactorSpec::Torus { circumferences } => circumferences.len(),
        }
    }

    /// Parallel harmonic directions, as local basis indices.
    pub fn p1_mask(&self) -> BTreeSet<usize> {
        match self {
            FactorSpec::Surface { genus: 1 } => (0..2).collect(),
            FactorSpec::Surface { .. } => BTreeSet::new(),
            FactorSpec::Generic { p1_mask, .. } => p1_mask.clone(),
            FactorSpec::Torus { circumferences } => (0..circumferences.len()).collect(),
        }
    }

    /// True when the factor carries no flat directions in its chart, i.e. the
    /// numeric tier models it by a hyperbolic patch.
    pub fn is_hyperbolic(&self) -> bool {
        match self {
            FactorSpec::Surface { genus } => *genus >= 2,
            FactorSpec::Generic { dim, p1_mask, .. } => *dim >= 2 && p1_mask.is_empty(),
            FactorSpec::Torus { .. } => false,
        }
    }

    /// Chart coordinate that carries the local constant-coefficient
    /// representative of harmonic basis element `m`.
    pub fn realizing_coordinate(&self, m: usize) -> usize {
        match self {
            FactorSpec::Surface { .. } => m % 2,
            FactorSpec::Generic { dim, .. } => m % dim,
            FactorSpec::Torus { .. } => m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FactorSpec::Surface { genus } if *genus == 0 => {
                Err(Error::InvalidSpec("surface genus must be at least 1".into()))
            }
            FactorSpec::Generic { dim, b1, p1_mask } => {
                if *dim == 0 {
                    return Err(Error::InvalidSpec("generic factor needs dim >= 1".into()));
                }
                if let Some(bad) = p1_mask.iter().find(|&&m| m >= *b1) {
                    return Err(Error::InvalidSpec(format!(
                        "p1_mask index {} outside 1..{}",
                        bad + 1,
                        b1
                    )));
                }
                Ok(())
            }
            FactorSpec::Torus { circumferences } => {
                if circumferences.iter().all(PiMultiple::is_positive) {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec("circumferences must be positive".into()))
                }
            }
            _ => Ok(()),
        }
    }
}

/// A flat circle factor that T-duality or reduction can act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Circle {
    /// Circle `i` of the trailing torus `T^k`.
    Torus(usize),
    /// An explicit circle inside `N` (a coordinate of one of its torus
    /// factors), addressed by its H¹(N) basis index.
    InN(usize),
}

impl fmt::Display for Circle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Circle::Torus(i) => write!(f, "t{}", i + 1),
            Circle::InN(m) => write!(f, "n{}", m + 1),
        }
    }
}

impl std::str::FromStr for Circle {
    type Err = String;

    /// `"2"` or `"t2"` for the second torus circle, `"n5"` for the N-circle
    /// carrying basis direction 5 (one-based labels).
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (ctor, digits): (fn(usize) -> Circle, &str) = if let Some(rest) = s.strip_prefix('n') {
            (Circle::InN, rest)
        } else {
            (Circle::Torus, s.strip_prefix('t').unwrap_or(s))
        };
        match digits.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(ctor(n - 1)),
            _ => Err(format!("`{s}` is not a circle label (use 1, t1 or n1)")),
        }
    }
}

impl Serialize for Circle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Accepts a label (`"t2"`, `"n5"`) or a bare one-based torus index (`2`).
impl<'de> Deserialize<'de> for Circle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Label {
            Index(u64),
            Text(String),
        }
        match Label::deserialize(d)? {
            Label::Index(i) => i.to_string().parse(),
            Label::Text(text) => text.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Where a flat circle lives: its chart coordinate, its β basis index and its
/// circumference.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleInfo {
    pub circle: Circle,
    pub coord: usize,
    pub basis: usize,
    pub circumference: PiMultiple,
}

/// `Σ_g × N × T^k` with `N = N₁ × … × N_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpec {
    pub sigma_genus: u32,
    pub n: Vec<FactorSpec>,
    pub torus: Vec<PiMultiple>,
}

impl ProductSpec {
    pub fn new(sigma_genus: u32, n: Vec<FactorSpec>, torus: Vec<PiMultiple>) -> Result<Self> {
        let spec = ProductSpec {
            sigma_genus,
            n,
            torus,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// From a flat factor list: the first entry is Σ_g, a trailing torus is
    /// `T^k`, everything in between is `N`. Use a trailing `Torus` with no
    /// circles to keep a torus inside `N` with `k = 0`.
    pub fn from_factors(factors: &[FactorSpec]) -> Result<Self> {
        let Some((FactorSpec::Surface { genus }, rest)) = factors.split_first() else {
            return Err(Error::InvalidSpec(
                "first factor must be the surface Σ_g".into(),
            ));
        };
        let (n, torus) = match rest.split_last() {
            Some((FactorSpec::Torus { circumferences }, n)) => (n.to_vec(), circumferences.clone()),
            _ => (rest.to_vec(), Vec::new()),
        };
        Self::new(*genus, n, torus)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_genus == 0 {
            return Err(Error::InvalidSpec("Σ_g needs genus >= 1".into()));
        }
        if self.n.is_empty() {
            return Err(Error::InvalidSpec("N must have at least one factor".into()));
        }
        for factor in &self.n {
            factor.validate()?;
        }
        FactorSpec::Torus {
            circumferences: self.torus.clone(),
        }
        .validate()
    }

    pub fn k(&self) -> usize {
        self.torus.len()
    }

    pub fn b1_n(&self) -> usize {
        self.n.iter().map(FactorSpec::b1).sum()
    }

    pub fn dim_n(&self) -> usize {
        self.n.iter().map(FactorSpec::dim).sum()
    }

    pub fn beta_len(&self) -> usize {
        self.b1_n() + self.k()
    }

    /// Total dimension `2 + dim N + k`.
    pub fn total_dim(&self) -> usize {
        2 + self.dim_n() + self.k()
    }

    /// Global H¹(N) indices of the parallel stratum 𝒫₁(N).
    pub fn p1_mask_n(&self) -> BTreeSet<usize> {
        let mut mask = BTreeSet::new();
        let mut offset = 0;
        for factor in &self.n {
            mask.extend(factor.p1_mask().into_iter().map(|m| m + offset));
            offset += factor.b1();
        }
        mask
    }

    /// `(factor index, first basis index, first chart coordinate)` for each
    /// factor of `N`.
    fn n_offsets(&self) -> impl Iterator<Item = (&FactorSpec, usize, usize)> {
        self.n.iter().scan((0usize, 2usize), |(basis, coord), f| {
            let item = (f, *basis, *coord);
            *basis += f.b1();
            *coord += f.dim();
            Some(item)
        })
    }

    /// Chart coordinate of torus circle `i`.
    pub fn torus_coord(&self, i: usize) -> usize {
        2 + self.dim_n() + i
    }

    pub fn circle_info(&self, circle: Circle) -> Result<CircleInfo> {
        match circle {
            Circle::Torus(i) if i < self.k() => Ok(CircleInfo {
                circle,
                coord: self.torus_coord(i),
                basis: self.b1_n() + i,
                circumference: self.torus[i].clone(),
            }),
            Circle::InN(m) => self
                .n_offsets()
                .find_map(|(f, basis, coord)| match f {
                    FactorSpec::Torus { circumferences }
                        if (basis..basis + circumferences.len()).contains(&m) =>
                    {
                        Some(CircleInfo {
                            circle,
                            coord: coord + (m - basis),
                            basis: m,
                            circumference: circumferences[m - basis].clone(),
                        })
                    }
                    _ => None,
                })
                .ok_or_else(|| Error::InvalidCircle(circle.to_string())),
            _ => Err(Error::InvalidCircle(circle.to_string())),
        }
    }

    /// Every explicit flat circle: circles inside `N` first, then `T^k`.
    pub fn flat_circles(&self) -> Vec<CircleInfo> {
        let mut out = Vec::new();
        for (f, basis, _) in self.n_offsets() {
            if let FactorSpec::Torus { circumferences } = f {
                for j in 0..circumferences.len() {
                    out.extend(self.circle_info(Circle::InN(basis + j)).ok());
                }
            }
        }
        out.extend((0..self.k()).filter_map(|i| self.circle_info(Circle::Torus(i)).ok()));
        out
    }

    /// Constant-coefficient covector on the `N × T^k` chart coordinates that
    /// represents β locally (index 0 is the first coordinate of `N`).
    pub fn realized_covector(&self, cls: &MixedFluxClass) -> Vec<Rational> {
        let mut tau = vec![Rational::zero(); self.dim_n() + self.k()];
        for (f, basis, coord) in self.n_offsets() {
            for m in 0..f.b1() {
                tau[coord - 2 + f.realizing_coordinate(m)] += &cls.gamma[basis + m];
            }
        }
        for (i, c) in cls.c.iter().enumerate() {
            tau[self.dim_n() + i] += c;
        }
        tau
    }

    /// The product with torus circle `i` removed.
    pub fn without_torus_circle(&self, i: usize) -> Result<ProductSpec> {
        if i >= self.k() {
            return Err(Error::InvalidCircle(Circle::Torus(i).to_string()));
        }
        let mut torus = self.torus.clone();
        torus.remove(i);
        Ok(ProductSpec {
            torus,
            ..self.clone()
        })
    }
}

/// Coefficients of β relative to the declared harmonic basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MixedFluxClass {
    pub gamma: Vec<Rational>,
    pub c: Vec<Rational>,
    pub sigma_genus: u32,
}

impl MixedFluxClass {
    pub fn zero(spec: &ProductSpec) -> Self {
        MixedFluxClass {
            gamma: vec![Rational::zero(); spec.b1_n()],
            c: vec![Rational::zero(); spec.k()],
            sigma_genus: spec.sigma_genus,
        }
    }

    /// β as one vector in the basis order (γ first, then c).
    pub fn beta(&self) -> Vec<Rational> {
        self.gamma.iter().chain(&self.c).cloned().collect()
    }

    pub fn coefficient(&self, basis: usize) -> &Rational {
        if basis < self.gamma.len() {
            &self.gamma[basis]
        } else {
            &self.c[basis - self.gamma.len()]
        }
    }

    pub fn coefficient_mut(&mut self, basis: usize) -> &mut Rational {
        let nb = self.gamma.len();
        if basis < nb {
            &mut self.gamma[basis]
        } else {
            &mut self.c[basis - nb]
        }
    }

    pub fn is_zero(&self) -> bool {
        self.gamma.iter().chain(&self.c).all(Zero::is_zero)
    }

    pub fn gamma_is_zero(&self) -> bool {
        self.gamma.iter().all(Zero::is_zero)
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        MixedFluxClass {
            gamma: self.gamma.iter().map(|x| x * factor).collect(),
            c: self.c.iter().map(|x| x * factor).collect(),
            sigma_genus: self.sigma_genus,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        MixedFluxClass {
            gamma: self.gamma.iter().zip(&other.gamma).map(|(a, b)| a + b).collect(),
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
            sigma_genus: self.sigma_genus,
        }
    }

    fn check_shape(&self, spec: &ProductSpec) -> Result<()> {
        if self.gamma.len() != spec.b1_n() || self.c.len() != spec.k() {
            return Err(Error::LengthMismatch {
                expected: spec.beta_len(),
                got: self.gamma.len() + self.c.len(),
            });
        }
        Ok(())
    }
}

/// Splits a raw β vector into the N part and the torus part.
pub fn decompose(beta_raw: &[Rational], spec: &ProductSpec) -> Result<MixedFluxClass> {
    if beta_raw.len() != spec.beta_len() {
        return Err(Error::LengthMismatch {
            expected: spec.beta_len(),
            got: beta_raw.len(),
        });
    }
    let (gamma, c) = beta_raw.split_at(spec.b1_n());
    Ok(MixedFluxClass {
        gamma: gamma.to_vec(),
        c: c.to_vec(),
        sigma_genus: spec.sigma_genus,
    })
}

/// β ∈ 𝒫₁(N) ⊕ span{dθᵢ}: torus directions are always parallel, so only the
/// support of γ matters.
pub fn is_in_parallel_stratum(cls: &MixedFluxClass, spec: &ProductSpec) -> bool {
    let p1 = spec.p1_mask_n();
    cls.gamma
        .iter()
        .enumerate()
        .all(|(m, g)| g.is_zero() || p1.contains(&m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StratumVerdict {
    pub r: u8,
    pub dim_k: u8,
    pub r_sharp: u8,
    pub in_p1: bool,
    /// γ has support on parallel directions of N; those components are only
    /// convertible along a circle generated by β♯ when its orbits close.
    pub kernel_caveat: bool,
}

fn gamma_touches_p1(cls: &MixedFluxClass, spec: &ProductSpec) -> bool {
    spec.p1_mask_n()
        .into_iter()
        .any(|m| cls.gamma.get(m).is_some_and(|g| !g.is_zero()))
}

/// r♯ = r − dim 𝒦. With b₂(Σ_g) = 1 the mixed factor space is spanned by
/// `vol_Σ ⊗ β`, so r ∈ {0, 1} and 𝒦 is nonzero exactly when β is parallel.
pub fn r_sharp(cls: &MixedFluxClass, spec: &ProductSpec) -> Result<StratumVerdict> {
    cls.check_shape(spec)?;
    let r = u8::from(!cls.is_zero());
    let in_p1 = is_in_parallel_stratum(cls, spec);
    let dim_k = u8::from(r == 1 && in_p1);
    Ok(StratumVerdict {
        r,
        dim_k,
        r_sharp: r - dim_k,
        in_p1,
        kernel_caveat: gamma_touches_p1(cls, spec),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrreducibleKernel {
    pub kernel: Vec<Rational>,
    pub caveat: bool,
}

impl IrreducibleKernel {
    pub fn is_zero(&self) -> bool {
        self.kernel.iter().all(Zero::is_zero)
    }
}

/// γ with its parallel directions removed: the part of the flux that stays
/// H-flux under duality along every flat circle.
pub fn irreducible_kernel(cls: &MixedFluxClass, spec: &ProductSpec) -> Result<IrreducibleKernel> {
    cls.check_shape(spec)?;
    let p1 = spec.p1_mask_n();
    let mut caveat = false;
    let kernel = cls
        .gamma
        .iter()
        .enumerate()
        .map(|(m, g)| {
            if p1.contains(&m) {
                caveat |= !g.is_zero();
                Rational::zero()
            } else {
                g.clone()
            }
        })
        .collect();
    Ok(IrreducibleKernel { kernel, caveat })
}
