//! Scenario orchestration: config in, report out. Each report section is
//! filled from one engine operation; nothing is recomputed here.

mod config;
mod examples;
pub mod report;

use std::collections::BTreeMap;
use std::time::Instant;

use num_traits::Zero;

pub use config::{FactorConfig, HolonomyConfig, Scenario, ScenarioConfig};
pub use examples::{expand_example_id, run_example, ExampleFile, Expectations, EXAMPLE_IDS};
use report::*;

use crate::background::{realize, FluxComponents, SampledFlux};
use crate::buscher::{bem_obstruction, classify_bem_case, compose_dualities, dualize_class, fiberwise_integral};
use crate::chart::Chart;
use crate::cohomology::{irreducible_kernel, r_sharp, Circle};
use crate::error::{Error, Result};
use crate::holonomy::{offdiag_rank_survey, sample_points, HolonomyOptions, TorsionField};
use crate::reduction::reduced_verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sections {
    pub stratum: bool,
    pub circles: bool,
    pub duality: bool,
    pub reduction: bool,
    pub holonomy: bool,
}

impl Sections {
    /// Everything the config asks for: reduction and holonomy only when
    /// configured.
    pub fn from_config(sc: &Scenario) -> Self {
        Sections {
            stratum: true,
            circles: true,
            duality: true,
            reduction: sc.reduce.is_some(),
            holonomy: sc.holonomy.is_some(),
        }
    }

    pub fn none() -> Self {
        Sections {
            stratum: false,
            circles: false,
            duality: false,
            reduction: false,
            holonomy: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub timing: bool,
    /// Overrides the holonomy sampling seed.
    pub seed: Option<u64>,
}

/// Runs every section the config requests.
pub fn run_scenario(config: &ScenarioConfig, opts: RunOptions) -> Result<Report> {
    let sc = config.validate()?;
    run_sections(&sc, Sections::from_config(&sc), opts)
}

pub fn run_sections(sc: &Scenario, sections: Sections, opts: RunOptions) -> Result<Report> {
    let wrap = |e: Error| match e {
        Error::ConfigInvalid { .. } => e,
        e => Error::Scenario {
            scenario: sc.name.clone(),
            source: Box::new(e),
        },
    };
    let mut timing = BTreeMap::new();
    let mut timed = |name: &str, start: Instant| {
        timing.insert(name.to_string(), report::float(start.elapsed().as_secs_f64()));
    };

    let spec = &sc.spec;
    let input = InputEcho {
        beta: rationals(&sc.class.beta()),
        b1_n: spec.b1_n(),
        k: spec.k(),
        torus_circumferences: spec.torus.clone(),
        dualize: sc.dualize.clone(),
    };

    let start = Instant::now();
    let stratum = sections
        .stratum
        .then(|| stratum_section(sc))
        .transpose()
        .map_err(wrap)?;
    timed("stratum", start);

    let start = Instant::now();
    let circles = sections
        .circles
        .then(|| circle_rows(sc))
        .transpose()
        .map_err(wrap)?;
    timed("circles", start);

    let start = Instant::now();
    let duality = sections
        .duality
        .then(|| duality_section(sc))
        .transpose()
        .map_err(wrap)?;
    timed("duality", start);

    let start = Instant::now();
    let reduction = if sections.reduction {
        let i = sc
            .reduce
            .ok_or_else(|| Error::config("reduce", "a circle to collapse is required"))?;
        Some(reduction_section(sc, i).map_err(wrap)?)
    } else {
        None
    };
    timed("reduction", start);

    let start = Instant::now();
    let holonomy = sections
        .holonomy
        .then(|| holonomy_section(sc, opts.seed))
        .transpose()
        .map_err(wrap)?;
    timed("holonomy", start);

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        scenario: sc.name.clone(),
        input,
        stratum,
        circles,
        duality,
        reduction,
        holonomy,
        example: None,
        timing: opts.timing.then_some(timing),
    })
}

fn stratum_section(sc: &Scenario) -> Result<StratumSection> {
    let v = r_sharp(&sc.class, &sc.spec)?;
    let k = irreducible_kernel(&sc.class, &sc.spec)?;
    Ok(StratumSection {
        r: v.r,
        dim_k: v.dim_k,
        r_sharp: v.r_sharp,
        in_p1: v.in_p1,
        kernel: rationals(&k.kernel),
        kernel_caveat: k.caveat,
    })
}

fn circle_rows(sc: &Scenario) -> Result<Vec<CircleRow>> {
    let spec = &sc.spec;
    let tol = &sc.tolerances;
    let real = realize(spec, &sc.class, sc.grid_points)?;
    let flux = FluxComponents {
        cohomological: sc.class.clone(),
        field_tier: Some(SampledFlux::from_background(&real.background)?),
    };
    let circles = spec.flat_circles();
    circles
        .iter()
        .map(|info| {
            let bem_case = match info.circle {
                Circle::Torus(i) => Some(match classify_bem_case(&sc.class, spec, i) {
                    Ok(case) => case.into(),
                    Err(Error::Unclassified(_)) => BemCaseReport::Unclassified,
                    Err(Error::ParallelStratumNonEmpty) => BemCaseReport::NotApplicable,
                    Err(e) => return Err(e),
                }),
                Circle::InN(_) => None,
            };
            let bem_row = circles
                .iter()
                .filter(|other| other.circle != info.circle)
                .map(|other| {
                    let obs = bem_obstruction(&flux, spec, info.circle, other.circle)?;
                    Ok(BemEntry {
                        with: other.circle,
                        exact_zero: obs.exact_is_zero(),
                        sampled: Measured::new(obs.sampled_max_abs().unwrap_or(0.0), tol.zero),
                        integral: obs.exact,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (dual, converted) = dualize_class(&sc.class, spec, info.circle)?;
            Ok(CircleRow {
                circle: info.circle,
                coord: info.coord,
                circumference: info.circumference.clone(),
                fiberwise_integral: fiberwise_integral(&sc.class, spec, info.circle)?,
                bem_case,
                bem_row,
                single_dual_flux: rationals(&dual.beta()),
                converts: !converted.is_zero(),
                flux_survives: !dual.is_zero(),
            })
        })
        .collect()
}

fn duality_section(sc: &Scenario) -> Result<DualitySection> {
    let spec = &sc.spec;
    let tol = &sc.tolerances;
    let real = realize(spec, &sc.class, sc.grid_points)?;
    let (dual_bg, frame, dual_cls) = compose_dualities(spec, &real.background, &sc.class, &sc.dualize, tol)?;
    let dual_h = SampledFlux::from_background(&dual_bg)?;
    let coords: Vec<usize> = sc
        .dualize
        .iter()
        .map(|&c| spec.circle_info(c).map(|i| i.coord))
        .collect::<Result<_>>()?;
    let dualized_flux = dual_h.max_abs_where(|idx| idx.iter().any(|a| coords.contains(a)));
    let bidegree = dual_h.bidegree_violation();
    let flux = FluxComponents {
        cohomological: dual_cls.clone(),
        field_tier: Some(dual_h),
    };
    let mismatch = flux.tier_mismatch(spec, &real.sigma_density).unwrap_or(0.0);
    let non_interference = spec
        .flat_circles()
        .iter()
        .filter(|c| !coords.contains(&c.coord))
        .all(|c| dual_bg.product_flag(c.coord, tol.zero));

    let ledger = frame
        .ledger
        .iter()
        .map(|e| LedgerRow {
            circle: e.circle,
            coord: e.coord,
            converted: e.converted.as_ref().map(crate::rational::format_rational),
            geometric_flux: e
                .geometric_flux
                .iter()
                .map(|(mu, f)| (format!("G[{mu}][{}]", e.coord), report::float(f.max_abs())))
                .collect(),
        })
        .collect();
    Ok(DualitySection {
        dualized: frame.dualized.clone(),
        dual_flux: rationals(&dual_cls.beta()),
        dual_flux_zero: dual_cls.is_zero(),
        ledger,
        chern_flags: frame
            .chern_flags
            .iter()
            .map(|(c, f)| (c.to_string(), *f))
            .collect(),
        field_tier: FieldTierReport {
            grid_points: sc.grid_points,
            dualized_flux: Measured::new(dualized_flux, tol.zero),
            tier_mismatch: Measured::new(mismatch, tol.relative),
            bidegree_violation: Measured::new(bidegree, tol.zero),
            non_interference,
            positive_definite: dual_bg.check_positive_definite().is_ok(),
        },
    })
}

fn reduction_section(sc: &Scenario, i: usize) -> Result<ReductionSection> {
    let report = reduced_verdict(&sc.class, &sc.spec, i)?;
    Ok(ReductionSection {
        circle: report.circle,
        restricted_class: rationals(&report.pullback.restricted.beta()),
        dropped: crate::rational::format_rational(&report.pullback.dropped),
        vanished: report.pullback.vanished,
        verdict: report.verdict,
        restricted_r_sharp: report.restricted_r_sharp,
    })
}

fn holonomy_section(sc: &Scenario, seed: Option<u64>) -> Result<HolonomySection> {
    let cfg = sc.holonomy.clone().unwrap_or_default();
    let seed = seed.unwrap_or(cfg.seed);
    let chart = Chart::for_product(&sc.spec);
    let torsion = TorsionField::from_class(&sc.spec, &sc.class);
    let points = sample_points(&chart, cfg.sample_count, seed, cfg.grid);
    let opts = HolonomyOptions {
        step: cfg.step,
        rank_tolerance: cfg.tolerance,
        ..HolonomyOptions::default()
    };
    let survey = offdiag_rank_survey(&chart, &torsion, &points, &opts)?;
    let target = r_sharp(&sc.class, &sc.spec)?.r_sharp;
    let bound = survey.check_lower_bound(target);
    if bound.violation_confirmed {
        return Err(Error::LowerBoundViolated {
            r_sharp: target,
            rank: bound.decision_rank,
        });
    }
    Ok(HolonomySection {
        r_sharp: target,
        min_rank: survey.min_rank,
        max_rank: survey.max_rank,
        lower_bound_holds: bound.holds,
        rank_tolerance: report::float(cfg.tolerance),
        step: report::float(cfg.step),
        seed,
        max_asymmetry: Measured::new(survey.max_asymmetry(), 1e-9),
        points: survey
            .per_point
            .iter()
            .map(|p| PointRow {
                point: p.point.iter().map(|&x| report::float(x)).collect(),
                rank: p.rank,
                oracle_rank: p.oracle_rank,
            })
            .collect(),
    })
}
