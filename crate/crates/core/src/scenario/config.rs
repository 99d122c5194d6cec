//! Scenario configuration: JSON with unknown fields rejected and every
//! validation failure reported with its field path.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cohomology::{decompose, Circle, FactorSpec, MixedFluxClass, ProductSpec};
use crate::error::{Error, Result};
use crate::rational::{parse_rational, PiMultiple};
use crate::tolerance::Tolerances;

/// One factor as written in a config. `p1_mask` indices are one-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorConfig {
    Surface {
        genus: u32,
    },
    Generic {
        dim: usize,
        b1: usize,
        #[serde(default)]
        p1_mask: BTreeSet<usize>,
    },
    Torus {
        #[serde(default)]
        k: Option<usize>,
        #[serde(default)]
        circumferences: Option<Vec<PiMultiple>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolonomyConfig {
    /// Lattice nodes per axis from which sample points are drawn.
    #[serde(default = "HolonomyConfig::default_grid")]
    pub grid: usize,
    #[serde(default = "HolonomyConfig::default_step")]
    pub step: f64,
    /// Relative singular-value threshold for ranks.
    #[serde(default = "HolonomyConfig::default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "HolonomyConfig::default_sample_count")]
    pub sample_count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl HolonomyConfig {
    fn default_grid() -> usize {
        9
    }
    fn default_step() -> f64 {
        1e-4
    }
    fn default_tolerance() -> f64 {
        1e-7
    }
    fn default_sample_count() -> usize {
        8
    }
}

impl Default for HolonomyConfig {
    fn default() -> Self {
        HolonomyConfig {
            grid: Self::default_grid(),
            step: Self::default_step(),
            tolerance: Self::default_tolerance(),
            sample_count: Self::default_sample_count(),
            seed: 0,
        }
    }
}

fn default_grid_points() -> usize {
    33
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Σ_g first, then the factors of N; a trailing torus is `T^k`.
    pub factors: Vec<FactorConfig>,
    /// β coefficients as `"p/q"` strings, N basis first.
    pub beta: Vec<String>,
    /// Circumferences of the `T^k` circles; overrides the trailing torus.
    #[serde(default)]
    pub circles: Option<Vec<PiMultiple>>,
    #[serde(default)]
    pub dualize: Vec<Circle>,
    #[serde(default)]
    pub reduce: Option<Circle>,
    #[serde(default)]
    pub holonomy: Option<HolonomyConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Field-tier grid points per axis.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

/// A config after semantic validation.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub spec: ProductSpec,
    pub class: MixedFluxClass,
    pub dualize: Vec<Circle>,
    pub reduce: Option<usize>,
    pub holonomy: Option<HolonomyConfig>,
    pub tolerances: Tolerances,
    pub grid_points: usize,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn factor(&self, idx: usize) -> Result<FactorSpec> {
        let path = |field: &str| format!("factors[{idx}].{field}");
        match &self.factors[idx] {
            FactorConfig::Surface { genus } => {
                if *genus == 0 {
                    return Err(Error::config(path("surface.genus"), "genus must be at least 1"));
                }
                Ok(FactorSpec::Surface { genus: *genus })
            }
            FactorConfig::Generic { dim, b1, p1_mask } => {
                if *dim == 0 {
                    return Err(Error::config(path("generic.dim"), "dim must be at least 1"));
                }
                if let Some(bad) = p1_mask.iter().find(|&&m| m == 0 || m > *b1) {
                    return Err(Error::config(
                        path("generic.p1_mask"),
                        format!("index {bad} outside 1..={b1}"),
                    ));
                }
                Ok(FactorSpec::Generic {
                    dim: *dim,
                    b1: *b1,
                    p1_mask: p1_mask.iter().map(|m| m - 1).collect(),
                })
            }
            FactorConfig::Torus { k, circumferences } => {
                let circumferences = match (k, circumferences) {
                    (Some(k), Some(c)) if *k != c.len() => {
                        return Err(Error::config(
                            path("torus.circumferences"),
                            format!("{} circumferences for k = {k}", c.len()),
                        ))
                    }
                    (_, Some(c)) => c.clone(),
                    (Some(k), None) => vec![PiMultiple::one(); *k],
                    (None, None) => {
                        return Err(Error::config(path("torus"), "give k or circumferences"))
                    }
                };
                if let Some(bad) = circumferences.iter().position(|c| !c.is_positive()) {
                    return Err(Error::config(
                        path(&format!("torus.circumferences[{bad}]")),
                        "circumference must be positive",
                    ));
                }
                Ok(FactorSpec::Torus { circumferences })
            }
        }
    }

    pub fn validate(&self) -> Result<Scenario> {
        if self.factors.is_empty() {
            return Err(Error::config("factors", "at least Σ_g and one factor of N are needed"));
        }
        let factors = (0..self.factors.len())
            .map(|i| self.factor(i))
            .collect::<Result<Vec<_>>>()?;
        let mut spec = ProductSpec::from_factors(&factors).map_err(|e| Error::config("factors", e.to_string()))?;
        if let Some(circles) = &self.circles {
            if circles.len() != spec.k() {
                return Err(Error::config(
                    "circles",
                    format!("{} circumferences for k = {}", circles.len(), spec.k()),
                ));
            }
            if let Some(bad) = circles.iter().position(|c| !c.is_positive()) {
                return Err(Error::config(format!("circles[{bad}]"), "circumference must be positive"));
            }
            spec.torus = circles.clone();
        }

        let beta = self
            .beta
            .iter()
            .enumerate()
            .map(|(i, text)| parse_rational(text).map_err(|m| Error::config(format!("beta[{i}]"), m)))
            .collect::<Result<Vec<_>>>()?;
        let class = decompose(&beta, &spec).map_err(|e| Error::config("beta", e.to_string()))?;

        let mut seen = BTreeSet::new();
        for (i, circle) in self.dualize.iter().enumerate() {
            if !seen.insert(*circle) {
                return Err(Error::config(format!("dualize[{i}]"), format!("{circle} listed twice")));
            }
            spec.circle_info(*circle)
                .map_err(|e| Error::config(format!("dualize[{i}]"), e.to_string()))?;
        }
        let reduce = match self.reduce {
            None => None,
            Some(Circle::Torus(i)) if i < spec.k() => Some(i),
            Some(c) => {
                return Err(Error::config(
                    "reduce",
                    format!("{c} is not a circle of the trailing torus"),
                ))
            }
        };
        if let Some(h) = &self.holonomy {
            if h.grid < 3 {
                return Err(Error::config("holonomy.grid", "need at least 3 lattice nodes"));
            }
            if h.sample_count == 0 {
                return Err(Error::config("holonomy.sample_count", "need at least one sample"));
            }
            if !(h.step > 0.0 && h.step < 0.1) {
                return Err(Error::config("holonomy.step", "step must lie in (0, 0.1)"));
            }
            if !(h.tolerance > 0.0 && h.tolerance < 1.0) {
                return Err(Error::config("holonomy.tolerance", "tolerance must lie in (0, 1)"));
            }
        }
        if self.grid_points < 5 {
            return Err(Error::config("grid_points", "fourth-order differences need 5 points"));
        }
        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            spec,
            class,
            dualize: self.dualize.clone(),
            reduce,
            holonomy: self.holonomy.clone(),
            tolerances: self.tolerances,
            grid_points: self.grid_points,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    const MIXED: &str = r#"{
        "name": "mixed",
        "factors": [
            {"surface": {"genus": 2}},
            {"surface": {"genus": 2}},
            {"torus": {"k": 1}},
            {"torus": {"circumferences": ["2pi"]}}
        ],
        "beta": ["0", "0", "0", "0", "1", "0/1"],
        "dualize": ["n5", 1]
    }"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ScenarioConfig::from_json(MIXED).unwrap();
        let sc = cfg.validate().unwrap();
        assert_eq!((sc.spec.b1_n(), sc.spec.k()), (5, 1));
        assert_eq!(sc.class.gamma[4], int(1));
        assert_eq!(sc.dualize, vec![Circle::InN(4), Circle::Torus(0)]);
        assert_eq!(sc.spec.torus, vec![PiMultiple::two_pi()]);
        assert_eq!(sc.grid_points, 33);
        let again = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    fn config_error(text: &str) -> String {
        let err = ScenarioConfig::from_json(text).and_then(|c| c.validate().map(|_| c));
        match err {
            Err(Error::ConfigInvalid { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_field_paths() {
        assert_eq!(config_error(&MIXED.replace("\"genus\": 2}},\n            {\"torus\": {\"k\": 1", "\"genus\": 2, \"extra\": 1}},\n            {\"torus\": {\"k\": 1")), "factors[1].surface.extra");
        assert_eq!(config_error(&MIXED.replace("\"1\", \"0/1\"", "\"1\", \"x\"")), "beta[5]");
        assert_eq!(config_error(&MIXED.replace("\"1\", \"0/1\"", "\"1\"")), "beta");
        assert_eq!(config_error(&MIXED.replace("[\"n5\", 1]", "[1, \"t1\"]")), "dualize[1]");
        assert_eq!(config_error(&MIXED.replace("[\"n5\", 1]", "[\"n2\"]")), "dualize[0]");
        assert_eq!(config_error(&MIXED.replace("\"dualize\"", "\"reduce\": \"n5\", \"dualize\"")), "reduce");
        assert_eq!(config_error(&MIXED.replace("\"name\"", "\"unknown\": 1, \"name\"")), "unknown");
        assert_eq!(config_error(&MIXED.replace("\"2pi\"", "\"-2pi\"")), "factors[3].torus.circumferences[0]");
    }
}
