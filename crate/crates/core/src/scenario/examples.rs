//! Bundled worked examples and the verdicts each must reproduce.

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::Deserialize;

use super::config::ScenarioConfig;
use super::report::{ExampleCheck, Report};
use super::{run_sections, RunOptions, Sections};
use crate::cohomology::Circle;
use crate::error::{Error, Result};
use crate::reduction::ReducedVerdict;

pub const EXAMPLE_IDS: [&str; 7] = ["4.1i", "4.1ii", "4.2", "4.3", "4.4-sigma", "4.4-phi", "4.4-theta"];

fn bundled(id: &str) -> Option<&'static str> {
    Some(match id {
        "4.1i" => include_str!("../../scenarios/double_duality_kernel.json"),
        "4.1ii" => include_str!("../../scenarios/double_duality_converted.json"),
        "4.2" => include_str!("../../scenarios/hyperbolic_three_manifold.json"),
        "4.3" => include_str!("../../scenarios/flat_torus_factor.json"),
        "4.4-sigma" => include_str!("../../scenarios/mixed_surface_class.json"),
        "4.4-phi" => include_str!("../../scenarios/mixed_d_phi.json"),
        "4.4-theta" => include_str!("../../scenarios/mixed_d_theta.json"),
        _ => return None,
    })
}

/// `"4.1"` and `"4.4"` name several variants; everything else is one id.
pub fn expand_example_id(id: &str) -> Result<Vec<&'static str>> {
    let ids: Vec<&'static str> = EXAMPLE_IDS
        .iter()
        .copied()
        .filter(|known| {
            known
                .strip_prefix(id)
                .is_some_and(|rest| rest.is_empty() || rest.starts_with(['i', '-']))
        })
        .collect();
    if ids.is_empty() {
        return Err(Error::config(
            "id",
            format!("unknown example `{id}` (known: {})", EXAMPLE_IDS.join(", ")),
        ));
    }
    Ok(ids)
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub r_sharp: u8,
    pub kernel: Vec<String>,
    #[serde(default)]
    pub kernel_caveat: Option<bool>,
    /// Circles whose single duality removes all H-flux.
    #[serde(default)]
    pub eliminated_by: Vec<Circle>,
    /// Circles whose single duality leaves H-flux behind.
    #[serde(default)]
    pub survives: Vec<Circle>,
    /// Circles whose single duality converts a nonzero coefficient.
    #[serde(default)]
    pub converted_by: Vec<Circle>,
    /// Dual flux after the configured `dualize` list.
    #[serde(default)]
    pub dual_flux: Option<Vec<String>>,
    #[serde(default)]
    pub bem_rows_zero: Option<bool>,
    #[serde(default)]
    pub reduction: Option<ReducedVerdict>,
    #[serde(default)]
    pub holonomy_bound: Option<bool>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleFile {
    pub config: ScenarioConfig,
    pub expect: Expectations,
}

impl ExampleFile {
    pub fn load(id: &str) -> Result<Self> {
        let text = bundled(id).ok_or_else(|| Error::config("id", format!("unknown example `{id}`")))?;
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(format!("{id}:{path}"), e.into_inner().to_string())
        })
    }
}

struct Checker {
    checks: BTreeMap<String, String>,
    diff: Vec<String>,
}

impl Checker {
    fn check<T: PartialEq + Debug>(&mut self, key: &str, expected: T, got: T) {
        if expected == got {
            self.checks.insert(key.into(), "ok".into());
        } else {
            let line = format!("expected {expected:?}, got {got:?}");
            self.diff.push(format!("{key}: {line}"));
            self.checks.insert(key.into(), line);
        }
    }
}

fn verify(id: &str, expect: &Expectations, report: &Report) -> ExampleCheck {
    let mut c = Checker {
        checks: BTreeMap::new(),
        diff: Vec::new(),
    };
    if let Some(s) = &report.stratum {
        c.check("r_sharp", expect.r_sharp, s.r_sharp);
        c.check("kernel", &expect.kernel, &s.kernel);
        if let Some(caveat) = expect.kernel_caveat {
            c.check("kernel_caveat", caveat, s.kernel_caveat);
        }
    }
    if let Some(rows) = &report.circles {
        let row = |circle: &Circle| rows.iter().find(|r| r.circle == *circle);
        for circle in &expect.eliminated_by {
            c.check(
                &format!("eliminated_by.{circle}"),
                Some(false),
                row(circle).map(|r| r.flux_survives),
            );
        }
        for circle in &expect.survives {
            c.check(&format!("survives.{circle}"), Some(true), row(circle).map(|r| r.flux_survives));
        }
        for circle in &expect.converted_by {
            c.check(&format!("converted_by.{circle}"), Some(true), row(circle).map(|r| r.converts));
        }
        if let Some(zero) = expect.bem_rows_zero {
            let all_zero = rows
                .iter()
                .flat_map(|r| &r.bem_row)
                .all(|e| e.exact_zero && e.sampled.within);
            c.check("bem_rows_zero", zero, all_zero);
        }
    }
    if let (Some(flux), Some(d)) = (&expect.dual_flux, &report.duality) {
        c.check("dual_flux", flux, &d.dual_flux);
    }
    if let Some(verdict) = expect.reduction {
        c.check("reduction", Some(verdict), report.reduction.as_ref().map(|r| r.verdict));
    }
    if let Some(bound) = expect.holonomy_bound {
        c.check(
            "holonomy_bound",
            Some(bound),
            report.holonomy.as_ref().map(|h| h.lower_bound_holds),
        );
    }
    ExampleCheck {
        id: id.into(),
        passed: c.diff.is_empty(),
        checks: c.checks,
    }
}

/// Runs one bundled example and asserts its verdicts.
pub fn run_example(id: &str, opts: RunOptions) -> Result<Report> {
    let file = ExampleFile::load(id)?;
    let sc = file.config.validate()?;
    let sections = Sections {
        reduction: sc.reduce.is_some(),
        holonomy: sc.holonomy.is_some(),
        ..Sections::from_config(&sc)
    };
    let mut report = run_sections(&sc, sections, opts)?;
    let check = verify(id, &file.expect, &report);
    if !check.passed {
        let diff = check
            .checks
            .iter()
            .filter(|(_, v)| v.as_str() != "ok")
            .map(|(k, v)| format!("  {k}: {v}"))
            .collect::<Vec<_>>()
            .join("\n");
        return Err(Error::ExampleAssertionFailed { id: id.into(), diff });
    }
    report.example = Some(check);
    Ok(report)
}
