//! Dimensional reduction by restriction to the slice `θᵢ = const`.
//!
//! The inclusion kills `dθᵢ` and fixes every other harmonic 1-form, so the
//! pullback of `vol_Σ ∧ β` is computed by dropping one coefficient.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cohomology::{r_sharp, Circle, MixedFluxClass, ProductSpec};
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq)]
pub struct Pullback {
    /// Restricted class over `N × T^{k−1}`.
    pub restricted: MixedFluxClass,
    pub restricted_spec: ProductSpec,
    /// The coefficient `cᵢ` that the restriction removed.
    pub dropped: Rational,
    pub vanished: bool,
}

/// `ι*(vol_Σ ∧ β)` for the slice transverse to torus circle `i`.
pub fn pullback_flux(cls: &MixedFluxClass, spec: &ProductSpec, i: usize) -> Result<Pullback> {
    if cls.gamma.len() != spec.b1_n() || cls.c.len() != spec.k() {
        return Err(Error::LengthMismatch {
            expected: spec.beta_len(),
            got: cls.gamma.len() + cls.c.len(),
        });
    }
    let restricted_spec = spec.without_torus_circle(i)?;
    let mut restricted = cls.clone();
    let dropped = restricted.c.remove(i);
    let vanished = restricted.is_zero();
    Ok(Pullback {
        restricted,
        restricted_spec,
        dropped,
        vanished,
    })
}

/// Restriction along several torus circles (original indices, any order).
pub fn pullback_many(cls: &MixedFluxClass, spec: &ProductSpec, circles: &[usize]) -> Result<Pullback> {
    let mut sorted = circles.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != circles.len() {
        return Err(Error::InvalidCircle("circle collapsed twice".into()));
    }
    let mut out = Pullback {
        restricted: cls.clone(),
        restricted_spec: spec.clone(),
        dropped: Rational::zero(),
        vanished: cls.is_zero(),
    };
    for &i in sorted.iter().rev() {
        let step = pullback_flux(&out.restricted, &out.restricted_spec, i)?;
        out = Pullback {
            dropped: step.dropped + &out.dropped,
            ..step
        };
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReducedVerdict {
    /// The restricted torsion is nonzero and the restricted connection stays
    /// irreducible.
    IrreducibleSurvives,
    /// Torsion vanishes on the slice; the restricted connection is
    /// Levi-Civita of a product.
    ReducesToLeviCivita,
    /// Outside `k = 1`, `𝒫₁(N) = {0}`: data only, no holonomy claim.
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionReport {
    pub circle: Circle,
    pub pullback: Pullback,
    pub verdict: ReducedVerdict,
    pub restricted_r_sharp: u8,
}

pub fn reduced_verdict(cls: &MixedFluxClass, spec: &ProductSpec, i: usize) -> Result<ReductionReport> {
    let pullback = pullback_flux(cls, spec, i)?;
    let full = r_sharp(cls, spec)?;
    let restricted = r_sharp(&pullback.restricted, &pullback.restricted_spec)?;
    let verdict = if spec.k() != 1 || !spec.p1_mask_n().is_empty() {
        ReducedVerdict::Indeterminate
    } else if full.r_sharp == 1 {
        ReducedVerdict::IrreducibleSurvives
    } else {
        ReducedVerdict::ReducesToLeviCivita
    };
    Ok(ReductionReport {
        circle: Circle::Torus(i),
        pullback,
        verdict,
        restricted_r_sharp: restricted.r_sharp,
    })
}
