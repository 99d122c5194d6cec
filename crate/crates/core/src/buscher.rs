//! Buscher T-duality along flat circles, single and composed, at the exact
//! cohomological tier and the sampled field tier, together with the
//! subtorus (BEM) obstruction and fiberwise integrals.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;

use crate::background::{exact_component, BackgroundFields, FluxComponents, SampledFlux};
use crate::cohomology::{Circle, MixedFluxClass, ProductSpec};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::rational::{PiMultiple, Rational};
use crate::tolerance::Tolerances;

/// Removes constant torus–torus B-field components by the closed gauge
/// shift `B → B − B_{θᵢθⱼ} dθᵢ ∧ dθⱼ`. H is untouched.
pub fn gauge_fix_torus_torus(bg: &BackgroundFields, tol: &Tolerances) -> Result<BackgroundFields> {
    let mut out = bg.clone();
    for (a, &i) in bg.circle_coords.iter().enumerate() {
        for &j in &bg.circle_coords[a + 1..] {
            let b = bg.b(i, j);
            if b.is_exact_zero() {
                continue;
            }
            let spread = b.spread();
            if spread > tol.zero {
                return Err(Error::NotConstant { i, j, spread });
            }
            out.set_b(i, j, Field::zero());
        }
    }
    Ok(out)
}

/// Geometric flux recorded for one dualized circle: the off-diagonal metric
/// components `G̃_{μθ}` that carry what used to be `B_{μθ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerEntry {
    pub coord: usize,
    pub circle: Option<Circle>,
    pub geometric_flux: Vec<(usize, Field)>,
    /// Cohomological coefficient moved out of the H-flux, when known.
    pub converted: Option<Rational>,
}

/// Buscher rules along coordinate `coord` with denominator `G_θθ`:
///
/// ```text
/// G̃_θθ = 1/G_θθ            G̃_μθ = B_μθ/G_θθ       B̃_μθ = G_μθ/G_θθ
/// G̃_μν = G_μν − (G_μθ G_νθ − B_μθ B_νθ)/G_θθ
/// B̃_μν = B_μν − (G_μθ B_νθ − B_μθ G_νθ)/G_θθ
/// ```
///
/// On a product direction (`G_θθ = 1`, `G_μθ = 0`) this is `G̃_μθ = B_μθ`,
/// `G̃_μν = G_μν + B_μθ B_νθ`, `B̃_μθ = 0`, `B̃_μν = B_μν`.
pub fn buscher_dualize(
    bg: &BackgroundFields,
    coord: usize,
    tol: &Tolerances,
) -> Result<(BackgroundFields, Option<LedgerEntry>)> {
    let d = bg.dim();
    if coord >= d {
        return Err(Error::InvalidCircle(format!("coordinate {coord}")));
    }
    bg.check_fiber_independence(coord)?;
    let grid = &bg.grid;
    let gtt = bg.g(coord, coord);
    let smallest = gtt.values().into_iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if smallest < tol.degenerate_fiber || gtt.is_exact_zero() {
        return Err(Error::DegenerateFiber {
            coord,
            value: smallest,
        });
    }

    let mut out = bg.clone();
    let others: Vec<usize> = (0..d).filter(|&m| m != coord).collect();
    let g_t: Vec<Field> = (0..d).map(|m| bg.g(m, coord).div(gtt, grid)).collect();
    let b_t: Vec<Field> = (0..d).map(|m| bg.b(m, coord).div(gtt, grid)).collect();

    for (a, &mu) in others.iter().enumerate() {
        for &nu in &others[a..] {
            let shift = bg
                .g(mu, coord)
                .mul(&g_t[nu], grid)
                .sub(&bg.b(mu, coord).mul(&b_t[nu], grid), grid);
            out.set_g(mu, nu, bg.g(mu, nu).sub(&shift, grid));
            if mu != nu {
                let twist = bg
                    .g(mu, coord)
                    .mul(&b_t[nu], grid)
                    .sub(&bg.b(mu, coord).mul(&g_t[nu], grid), grid);
                out.set_b(mu, nu, bg.b(mu, nu).sub(&twist, grid));
            }
        }
        out.set_g(mu, coord, b_t[mu].clone());
        out.set_b(mu, coord, g_t[mu].clone());
    }
    out.set_g(coord, coord, Field::one().div(gtt, grid));

    let geometric_flux: Vec<(usize, Field)> = others
        .iter()
        .filter(|&&mu| !bg.b(mu, coord).is_zero_within(tol.zero))
        .map(|&mu| (mu, out.g(mu, coord).clone()))
        .collect();
    let entry = (!geometric_flux.is_empty()).then_some(LedgerEntry {
        coord,
        circle: None,
        geometric_flux,
        converted: None,
    });
    Ok((out, entry))
}

/// Exact class-level effect of one duality: the coefficient along the
/// circle becomes geometric flux, every other coefficient stays H-flux.
/// Returns the dual class and the converted coefficient.
pub fn dualize_class(
    cls: &MixedFluxClass,
    spec: &ProductSpec,
    circle: Circle,
) -> Result<(MixedFluxClass, Rational)> {
    let info = spec.circle_info(circle)?;
    let mut out = cls.clone();
    let converted = std::mem::replace(out.coefficient_mut(info.basis), Rational::zero());
    Ok((out, converted))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DualityFrame {
    pub dualized: Vec<Circle>,
    pub ledger: Vec<LedgerEntry>,
    /// Per dualized circle: the fiberwise integral was nonzero, so the dual
    /// circle bundle has `c₁ ≠ 0`.
    pub chern_flags: BTreeMap<Circle, bool>,
}

/// Result of integrating H over the subtorus spanned by two circles: a
/// covector on the remaining directions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BemObstruction {
    pub pair: (Circle, Circle),
    /// Exact value per remaining coordinate from the cohomological class.
    pub exact: Vec<PiMultiple>,
    /// Trapezoidal quadrature of the sampled components at the grid-center
    /// base point, per remaining coordinate.
    pub sampled: Option<Vec<f64>>,
}

impl BemObstruction {
    pub fn exact_is_zero(&self) -> bool {
        self.exact.iter().all(PiMultiple::is_zero)
    }

    pub fn sampled_max_abs(&self) -> Option<f64> {
        self.sampled
            .as_ref()
            .map(|v| v.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
    }
}

/// Trapezoidal weights over an inclusive grid axis (`n = 1` means the
/// integrand was not sampled along it: weight = full length).
fn trapezoid_weights(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![hi - lo];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect()
}

/// `∫_{T²_ij} H` as a covector on the remaining directions.
pub fn bem_obstruction(
    flux: &FluxComponents,
    spec: &ProductSpec,
    i: Circle,
    j: Circle,
) -> Result<BemObstruction> {
    let ci = spec.circle_info(i)?;
    let cj = spec.circle_info(j)?;
    if ci.coord == cj.coord {
        return Err(Error::InvalidCircle(format!("{i} paired with itself")));
    }
    let area = &ci.circumference * &cj.circumference;
    let d = spec.total_dim();
    let exact = (0..d)
        .map(|m| {
            if m == ci.coord || m == cj.coord {
                PiMultiple::rational(Rational::zero())
            } else {
                area.scale(&exact_component(spec, &flux.cohomological, [ci.coord, cj.coord, m]))
            }
        })
        .collect();
    let sampled = flux
        .field_tier
        .as_ref()
        .map(|h| subtorus_quadrature(h, ci.coord, cj.coord));
    Ok(BemObstruction {
        pair: (i, j),
        exact,
        sampled,
    })
}

/// Quadrature of `H_{θᵢθⱼm}` over the `(θᵢ, θⱼ)` axes of the grid, with every
/// other axis held at its center index.
pub fn subtorus_quadrature(h: &SampledFlux, ti: usize, tj: usize) -> Vec<f64> {
    let grid = &h.grid;
    let d = grid.dim();
    let ai = &grid.axes[ti];
    let aj = &grid.axes[tj];
    (0..d)
        .map(|m| {
            if m == ti || m == tj {
                return 0.0;
            }
            let f = h.component(ti, tj, m);
            let (ni, nj) = (
                if f.depends_on(ti) { ai.n } else { 1 },
                if f.depends_on(tj) { aj.n } else { 1 },
            );
            let wi = trapezoid_weights(ai.lo, ai.hi, ni);
            let wj = trapezoid_weights(aj.lo, aj.hi, nj);
            let mut idx = grid.center();
            let mut total = 0.0;
            for (p, w_p) in wi.iter().enumerate() {
                for (q, w_q) in wj.iter().enumerate() {
                    idx[ti] = p;
                    idx[tj] = q;
                    total += w_p * w_q * f.at(grid, &idx);
                }
            }
            total
        })
        .collect()
}

/// `∫_{S¹} β = (coefficient along the circle) · length(S¹)`.
pub fn fiberwise_integral(cls: &MixedFluxClass, spec: &ProductSpec, circle: Circle) -> Result<PiMultiple> {
    let info = spec.circle_info(circle)?;
    Ok(info.circumference.scale(cls.coefficient(info.basis)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BemCase {
    /// γ = 0, cᵢ ≠ 0: all H-flux absorbed into the dual bundle's topology.
    A,
    /// γ ≠ 0, cᵢ = 0: no topological change, H-flux persists.
    B,
    /// γ ≠ 0, cᵢ ≠ 0: topological change and residual H-flux.
    C,
}

pub fn classify_bem_case(cls: &MixedFluxClass, spec: &ProductSpec, i: usize) -> Result<BemCase> {
    if !spec.p1_mask_n().is_empty() {
        return Err(Error::ParallelStratumNonEmpty);
    }
    let c = cls
        .c
        .get(i)
        .ok_or_else(|| Error::InvalidCircle(Circle::Torus(i).to_string()))?;
    match (cls.gamma_is_zero(), c.is_zero()) {
        (true, false) => Ok(BemCase::A),
        (false, true) => Ok(BemCase::B),
        (false, false) => Ok(BemCase::C),
        (true, true) => Err(Error::Unclassified(i)),
    }
}

/// Composed duality `T_I`: gauge-fixes torus–torus B, checks every pairwise
/// subtorus obstruction, then dualizes circle by circle in the given order.
pub fn compose_dualities(
    spec: &ProductSpec,
    bg: &BackgroundFields,
    cls: &MixedFluxClass,
    circles: &[Circle],
    tol: &Tolerances,
) -> Result<(BackgroundFields, DualityFrame, MixedFluxClass)> {
    let mut seen = BTreeSet::new();
    let infos = circles
        .iter()
        .map(|&c| {
            if !seen.insert(c) {
                return Err(Error::InvalidCircle(format!("{c} listed twice")));
            }
            spec.circle_info(c)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut current = gauge_fix_torus_torus(bg, tol)?;
    if circles.len() >= 2 {
        let flux = FluxComponents {
            cohomological: cls.clone(),
            field_tier: Some(SampledFlux::from_background(&current)?),
        };
        for (a, &i) in circles.iter().enumerate() {
            for &j in &circles[a + 1..] {
                let obstruction = bem_obstruction(&flux, spec, i, j)?;
                let sampled = obstruction.sampled_max_abs().unwrap_or(0.0);
                if !obstruction.exact_is_zero() || sampled > tol.zero {
                    let exact = obstruction
                        .exact
                        .iter()
                        .map(|q| q.to_f64().abs())
                        .fold(0.0, f64::max);
                    return Err(Error::ObstructionNonzero {
                        i: infos[a].coord,
                        j: spec.circle_info(j)?.coord,
                        value: exact.max(sampled),
                    });
                }
            }
        }
    }

    let mut frame = DualityFrame::default();
    let mut flux = cls.clone();
    for info in &infos {
        let (next, entry) = buscher_dualize(&current, info.coord, tol)?;
        let (next_flux, converted) = dualize_class(&flux, spec, info.circle)?;
        frame.dualized.push(info.circle);
        frame
            .chern_flags
            .insert(info.circle, !fiberwise_integral(&flux, spec, info.circle)?.is_zero());
        if entry.is_some() || !converted.is_zero() {
            let mut entry = entry.unwrap_or(LedgerEntry {
                coord: info.coord,
                circle: None,
                geometric_flux: Vec::new(),
                converted: None,
            });
            entry.circle = Some(info.circle);
            entry.converted = Some(converted);
            frame.ledger.push(entry);
        }
        current = next;
        flux = next_flux;
    }
    Ok((current, frame, flux))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{realize, Dims, SampledFlux};
    use crate::cohomology::{decompose, FactorSpec};
    use crate::field::{axis_bit, Axis, Grid};
    use crate::rational::{int, rat};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn sigma_sigma_t2() -> ProductSpec {
        ProductSpec::new(2, vec![FactorSpec::Surface { genus: 2 }], vec![PiMultiple::one(); 2]).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn gauge_fix_removes_constant_torus_pairs() {
        let spec = sigma_sigma_t2();
        let cls = decompose(&ints(&[1, 0, 0, 0, 3, -2]), &spec).unwrap();
        let mut bg = realize(&spec, &cls, 9).unwrap().background;
        bg.set_b(4, 5, Field::constant(rat(7, 3)));
        let fixed = gauge_fix_torus_torus(&bg, &tol()).unwrap();
        assert!(fixed.b(4, 5).is_exact_zero());
        assert!(fixed.b(5, 4).is_exact_zero());
        let mut expected = bg.clone();
        expected.set_b(4, 5, Field::zero());
        assert_eq!(fixed, expected);
        assert_eq!(
            SampledFlux::from_background(&fixed).unwrap(),
            SampledFlux::from_background(&bg).unwrap()
        );

        let untouched = realize(&spec, &cls, 9).unwrap().background;
        assert_eq!(gauge_fix_torus_torus(&untouched, &tol()).unwrap(), untouched);
    }

    #[test]
    fn gauge_fix_rejects_varying_torus_pairs() {
        let spec = sigma_sigma_t2();
        let cls = MixedFluxClass::zero(&spec);
        let mut bg = realize(&spec, &cls, 9).unwrap().background;
        let grid = bg.grid.clone();
        bg.set_b(4, 5, Field::sample(&grid, axis_bit(0), |x| x[0]));
        // the varying potential really carries a component with two circle legs
        let h = SampledFlux::from_background(&bg).unwrap();
        let leg = h.component(0, 4, 5);
        assert!((leg.max_abs() - 1.0).abs() < 1e-12);
        assert!(matches!(
            gauge_fix_torus_torus(&bg, &tol()),
            Err(Error::NotConstant { i: 4, j: 5, .. })
        ));
    }

    #[test]
    fn product_dualization_moves_b_into_the_metric() {
        let spec = sigma_sigma_t2();
        let cls = decompose(&ints(&[0, 0, 0, 0, 3, 0]), &spec).unwrap();
        let bg = realize(&spec, &cls, 17).unwrap().background;
        let (dual, entry) = buscher_dualize(&bg, 4, &tol()).unwrap();
        let grid = &bg.grid;
        assert_eq!(dual.g(1, 4), bg.b(1, 4));
        assert!(dual.b(1, 4).is_exact_zero());
        assert!(dual.g(4, 4).is_exact_one());
        // G̃_22 = G_22 + B_2θ²
        let expected = bg.g(1, 1).add(&bg.b(1, 4).mul(bg.b(1, 4), grid), grid);
        assert!(dual.g(1, 1).max_abs_diff(&expected, grid) < 1e-15);
        let entry = entry.unwrap();
        assert_eq!(entry.geometric_flux.len(), 1);
        assert_eq!(entry.geometric_flux[0].0, 1);

        let h = SampledFlux::from_background(&dual).unwrap();
        assert_eq!(h.max_abs_where(|idx| idx.contains(&4)), 0.0);
    }

    #[test]
    fn uncoupled_circle_is_a_fixed_point() {
        let spec = sigma_sigma_t2();
        let cls = decompose(&ints(&[1, 0, 0, 0, 0, 0]), &spec).unwrap();
        let bg = realize(&spec, &cls, 9).unwrap().background;
        let (dual, entry) = buscher_dualize(&bg, 5, &tol()).unwrap();
        assert_eq!(dual, bg);
        assert!(entry.is_none());
    }

    #[test]
    fn general_rules_are_an_involution_exactly_on_constants() {
        let dims = Dims { dim_n: 1, k: 1 };
        let grid = Grid::new(vec![Axis::new(0.0, 1.0, 5); 4]);
        let mut bg = BackgroundFields::flat(dims, grid, vec![3]);
        bg.set_g(3, 3, Field::constant(rat(5, 2)));
        bg.set_g(0, 3, Field::constant(rat(1, 3)));
        bg.set_g(1, 2, Field::constant(rat(-1, 4)));
        bg.set_b(0, 3, Field::constant(rat(2, 7)));
        bg.set_b(2, 3, Field::constant(int(-1)));
        bg.set_b(0, 1, Field::constant(rat(3, 5)));
        bg.validate().unwrap();
        let (once, _) = buscher_dualize(&bg, 3, &tol()).unwrap();
        assert_eq!(once.g(3, 3), &Field::constant(rat(2, 5)));
        let (twice, _) = buscher_dualize(&once, 3, &tol()).unwrap();
        assert_eq!(twice, bg);
    }

    #[test]
    fn degenerate_and_dependent_fibers_are_rejected() {
        let dims = Dims { dim_n: 1, k: 1 };
        let grid = Grid::new(vec![Axis::new(0.0, 1.0, 5); 4]);
        let mut bg = BackgroundFields::flat(dims, grid.clone(), vec![3]);
        bg.set_g(3, 3, Field::constant(rat(1, 10_i64.pow(13))));
        assert!(matches!(
            buscher_dualize(&bg, 3, &tol()),
            Err(Error::DegenerateFiber { coord: 3, .. })
        ));
        let mut bg = BackgroundFields::flat(dims, grid.clone(), vec![3]);
        bg.set_b(0, 1, Field::sample(&grid, axis_bit(3), |x| x[3]));
        assert!(matches!(
            buscher_dualize(&bg, 3, &tol()),
            Err(Error::FiberDependence { coord: 3, .. })
        ));
    }

    #[test]
    fn composed_duality_keeps_only_the_kernel() {
        let spec = sigma_sigma_t2();
        let cls = decompose(&ints(&[1, 0, 0, 0, 3, -2]), &spec).unwrap();
        let bg = realize(&spec, &cls, 9).unwrap().background;
        let both = [Circle::Torus(0), Circle::Torus(1)];
        let (dual, frame, flux) = compose_dualities(&spec, &bg, &cls, &both, &tol()).unwrap();
        assert_eq!(flux.gamma, ints(&[1, 0, 0, 0]));
        assert!(flux.c.iter().all(Zero::is_zero));
        assert_eq!(frame.ledger.len(), 2);
        assert_eq!(frame.ledger[0].converted, Some(int(3)));
        assert!(frame.chern_flags.values().all(|&f| f));

        let reversed = [Circle::Torus(1), Circle::Torus(0)];
        let (dual_r, _, flux_r) = compose_dualities(&spec, &bg, &cls, &reversed, &tol()).unwrap();
        assert_eq!(flux, flux_r);
        assert!(dual.agrees_with(&dual_r, 1e-12));

        let (same, frame, flux) = compose_dualities(&spec, &bg, &cls, &[], &tol()).unwrap();
        assert_eq!(same, bg);
        assert_eq!(flux, cls);
        assert!(frame.ledger.is_empty());

        let pure = decompose(&ints(&[0, 0, 0, 0, 3, -1]), &spec).unwrap();
        let bg = realize(&spec, &pure, 9).unwrap().background;
        let (_, _, flux) = compose_dualities(&spec, &bg, &pure, &both, &tol()).unwrap();
        assert!(flux.is_zero());
    }

    #[test]
    fn repeated_circles_are_rejected() {
        let spec = sigma_sigma_t2();
        let cls = MixedFluxClass::zero(&spec);
        let bg = realize(&spec, &cls, 9).unwrap().background;
        let twice = [Circle::Torus(0), Circle::Torus(0)];
        assert!(compose_dualities(&spec, &bg, &cls, &twice, &tol()).is_err());
    }

    #[test]
    fn fiberwise_integrals() {
        let spec = ProductSpec::new(
            2,
            vec![FactorSpec::Surface { genus: 2 }],
            vec![PiMultiple::two_pi(), PiMultiple::rational(int(4))],
        )
        .unwrap();
        let cls = decompose(&[int(0), int(0), int(0), int(0), int(3), rat(1, 2)], &spec).unwrap();
        let six_pi = fiberwise_integral(&cls, &spec, Circle::Torus(0)).unwrap();
        assert_eq!(six_pi.to_string(), "6/1*pi");
        assert_eq!(
            fiberwise_integral(&cls, &spec, Circle::Torus(1)).unwrap(),
            PiMultiple::rational(int(2))
        );
        let zero = MixedFluxClass::zero(&spec);
        assert!(fiberwise_integral(&zero, &spec, Circle::Torus(0)).unwrap().is_zero());
    }

    #[test]
    fn bem_cases() {
        let spec = ProductSpec::new(
            2,
            vec![FactorSpec::Surface { genus: 2 }],
            vec![PiMultiple::one()],
        )
        .unwrap();
        let case = |beta: &[i64]| classify_bem_case(&decompose(&ints(beta), &spec).unwrap(), &spec, 0);
        assert_eq!(case(&[0, 0, 0, 0, 2]).unwrap(), BemCase::A);
        assert_eq!(case(&[1, 0, 0, 0, 0]).unwrap(), BemCase::B);
        assert_eq!(case(&[1, 0, 0, 0, 2]).unwrap(), BemCase::C);
        assert!(matches!(case(&[0, 0, 0, 0, 0]), Err(Error::Unclassified(0))));

        let flat = ProductSpec::new(1, vec![FactorSpec::unit_torus(2)], vec![PiMultiple::one()]).unwrap();
        let cls = decompose(&ints(&[1, 0, 1]), &flat).unwrap();
        assert!(matches!(
            classify_bem_case(&cls, &flat, 0),
            Err(Error::ParallelStratumNonEmpty)
        ));
    }

    #[test]
    fn bem_obstruction_vanishes_for_pure_bidegree() {
        let spec = sigma_sigma_t2();
        let cls = decompose(&ints(&[1, -1, 2, 0, 3, -2]), &spec).unwrap();
        let bg = realize(&spec, &cls, 9).unwrap().background;
        let flux = FluxComponents {
            cohomological: cls,
            field_tier: Some(SampledFlux::from_background(&bg).unwrap()),
        };
        let obs = bem_obstruction(&flux, &spec, Circle::Torus(0), Circle::Torus(1)).unwrap();
        assert!(obs.exact_is_zero());
        assert_eq!(obs.sampled_max_abs(), Some(0.0));
        assert!(bem_obstruction(&flux, &spec, Circle::Torus(0), Circle::Torus(0)).is_err());
    }
}
