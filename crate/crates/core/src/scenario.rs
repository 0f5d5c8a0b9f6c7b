//! Scenario construction: the scenario file format, carbon-intensity and
//! availability derivations for renewable-following scenarios, and node
//! counts from facility power budgets.
//!
//! A scenario file is line oriented UTF-8 text. `[section]` headers group
//! `key = value` lines and `#` starts a comment that runs to end of line:
//!
//! ```text
//! [scenario]
//! name = hpc_example
//!
//! [hi]
//! sites = 1
//! nodes = 100
//! load = 0.8
//! op_kg_per_node_year = 3879
//!
//! [lo]
//! sites = 1
//! nodes = 100
//! load = 0.8
//! ci_g_per_kwh = 211
//! node_power_w = 1200
//! pue = 1.1
//!
//! [common]
//! gamma = 0.3
//! embodied_kg_per_node_year = 444
//!
//! [shift]
//! alpha = 1
//! beta = 1
//! eta = 0.01
//! ```
//!
//! Each class gives either `op_kg_per_node_year` directly or the triple
//! `ci_g_per_kwh`, `node_power_w`, `pue` (plus optional `nu`) from which it
//! is derived.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{
    blended_emissions, check, check_fraction, EmissionsReport, ModelError, NodePowerModel,
    ShiftPolicy, SiteClass,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required section [{0}]")]
    MissingSection(&'static str),
    #[error("[{section}] missing required key `{key}`")]
    MissingKey {
        section: &'static str,
        key: &'static str,
    },
    #[error("[{section}] {message}")]
    Conflict {
        section: &'static str,
        message: String,
    },
    #[error("[{section}] {source}")]
    Invalid {
        section: &'static str,
        source: ModelError,
    },
    #[error("at least one region profile is required")]
    NoProfiles,
    #[error("region {0} has no sunshine hours")]
    MissingSunshine(String),
    #[error("region {name}: renewable CI {renewable} exceeds the average CI {average}")]
    RenewableAboveAverage {
        name: String,
        average: f64,
        renewable: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Where a class's full-load per-node operational emissions came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpSource {
    /// Given directly as kgCO2e per node per year.
    Direct,
    /// Derived from a node power model.
    PowerModel(NodePowerModel),
}

/// A complete named parameterisation of one high/low scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub hi: SiteClass,
    pub lo: SiteClass,
    pub gamma: f64,
    pub policy: ShiftPolicy,
    pub hi_source: OpSource,
    pub lo_source: OpSource,
    pub notes: Vec<String>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |section| move |source| ScenarioError::Invalid { section, source };
        self.hi.validate().map_err(invalid("hi"))?;
        self.lo.validate().map_err(invalid("lo"))?;
        check_fraction("gamma", self.gamma).map_err(invalid("common"))?;
        self.policy.validate().map_err(invalid("shift"))?;
        if self.hi.nodes_per_site != self.lo.nodes_per_site {
            return Err(ScenarioError::Conflict {
                section: "lo",
                message: format!(
                    "nodes = {} differs from [hi] nodes = {}; sites must be twins",
                    self.lo.nodes_per_site, self.hi.nodes_per_site
                ),
            });
        }
        if self.hi.embodied_per_node_kg != self.lo.embodied_per_node_kg {
            return Err(ScenarioError::Conflict {
                section: "common",
                message: "embodied emissions differ between classes".into(),
            });
        }
        for (section, class, source) in [
            ("hi", &self.hi, &self.hi_source),
            ("lo", &self.lo, &self.lo_source),
        ] {
            if let OpSource::PowerModel(model) = source {
                model.validate().map_err(invalid(section))?;
                if model.op_full_per_node_kg() != class.op_full_per_node_kg
                    || model.idle_fraction != self.gamma
                {
                    return Err(ScenarioError::Conflict {
                        section,
                        message: "operational emissions disagree with the node power model".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self) -> Result<EmissionsReport, ModelError> {
        blended_emissions(&self.hi, &self.lo, self.gamma, &self.policy)
    }
}

impl fmt::Display for ScenarioConfig {
    /// Writes the config in scenario file format; parsing the output with
    /// [`load_scenario`] gives back an equal config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for note in &self.notes {
            writeln!(f, "# {note}")?;
        }
        writeln!(f, "[scenario]\nname = {}\n", self.name)?;
        for (section, class, source) in [
            ("hi", &self.hi, &self.hi_source),
            ("lo", &self.lo, &self.lo_source),
        ] {
            writeln!(f, "[{section}]")?;
            writeln!(f, "sites = {}", class.site_count)?;
            writeln!(f, "nodes = {}", class.nodes_per_site)?;
            writeln!(f, "load = {}", class.load)?;
            match source {
                OpSource::Direct => {
                    writeln!(f, "op_kg_per_node_year = {}", class.op_full_per_node_kg)?
                }
                OpSource::PowerModel(m) => {
                    writeln!(f, "ci_g_per_kwh = {}", m.carbon_intensity_g_per_kwh)?;
                    writeln!(f, "node_power_w = {}", m.active_power_w)?;
                    writeln!(f, "pue = {}", m.pue)?;
                    writeln!(f, "nu = {}", m.network_overhead_fraction)?;
                }
            }
            writeln!(f)?;
        }
        writeln!(f, "[common]")?;
        writeln!(f, "gamma = {}", self.gamma)?;
        writeln!(
            f,
            "embodied_kg_per_node_year = {}\n",
            self.hi.embodied_per_node_kg
        )?;
        writeln!(f, "[shift]")?;
        writeln!(f, "alpha = {}", self.policy.alpha)?;
        writeln!(f, "beta = {}", self.policy.beta)?;
        writeln!(f, "eta = {}", self.policy.eta)
    }
}

const SECTIONS: [&str; 5] = ["scenario", "hi", "lo", "common", "shift"];
const CLASS_KEYS: [&str; 8] = [
    "sites",
    "nodes",
    "load",
    "op_kg_per_node_year",
    "ci_g_per_kwh",
    "node_power_w",
    "pue",
    "nu",
];

fn allowed_keys(section: &str) -> &'static [&'static str] {
    match section {
        "scenario" => &["name"],
        "hi" | "lo" => &CLASS_KEYS,
        "common" => &["gamma", "embodied_kg_per_node_year"],
        "shift" => &["alpha", "beta", "eta"],
        _ => &[],
    }
}

struct Entry {
    line: usize,
    value: String,
}

type Section = BTreeMap<&'static str, Entry>;

struct SectionReader<'a> {
    name: &'static str,
    entries: Option<&'a Section>,
}

impl SectionReader<'_> {
    fn entry(&self, key: &'static str) -> Option<&Entry> {
        self.entries.and_then(|e| e.get(key))
    }

    fn text(&self, key: &'static str) -> Result<&str, ScenarioError> {
        self.entry(key)
            .map(|e| e.value.as_str())
            .ok_or(ScenarioError::MissingKey {
                section: self.name,
                key,
            })
    }

    fn optional_f64(&self, key: &'static str) -> Result<Option<f64>, ScenarioError> {
        self.entry(key)
            .map(|e| {
                e.value.parse::<f64>().map_err(|_| ScenarioError::Parse {
                    line: e.line,
                    message: format!("{key}: `{}` is not a decimal number", e.value),
                })
            })
            .transpose()
    }

    fn f64(&self, key: &'static str) -> Result<f64, ScenarioError> {
        self.optional_f64(key)?.ok_or(ScenarioError::MissingKey {
            section: self.name,
            key,
        })
    }

    fn u32(&self, key: &'static str) -> Result<u32, ScenarioError> {
        let e = self.entry(key).ok_or(ScenarioError::MissingKey {
            section: self.name,
            key,
        })?;
        e.value.parse::<u32>().map_err(|_| ScenarioError::Parse {
            line: e.line,
            message: format!("{key}: `{}` is not a non-negative integer", e.value),
        })
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<&'static str, Section>, ScenarioError> {
    let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ScenarioError::Parse { line, message };
        if let Some(header) = content.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .ok_or_else(|| err(format!("malformed section header `{content}`")))?
                .trim();
            let known = SECTIONS
                .iter()
                .copied()
                .find(|s| *s == name)
                .ok_or_else(|| err(format!("unknown section [{name}]")))?;
            if sections.contains_key(known) {
                return Err(err(format!("duplicate section [{known}]")));
            }
            sections.insert(known, Section::new());
            current = Some(known);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let section = current.ok_or_else(|| err(format!("key `{key}` outside any section")))?;
        let known = allowed_keys(section)
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| err(format!("unknown key `{key}` in [{section}]")))?;
        if value.is_empty() {
            return Err(err(format!("key `{key}` has no value")));
        }
        let entries = sections
            .get_mut(section)
            .expect("section inserted on header");
        if entries.contains_key(known) {
            return Err(err(format!("duplicate key `{key}` in [{section}]")));
        }
        entries.insert(
            known,
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(sections)
}

fn read_class(
    reader: &SectionReader<'_>,
    gamma: f64,
    embodied: f64,
    notes: &mut Vec<String>,
) -> Result<(SiteClass, OpSource), ScenarioError> {
    let section = reader.name;
    let invalid = |source| ScenarioError::Invalid { section, source };
    let direct = reader.optional_f64("op_kg_per_node_year")?;
    let ci = reader.optional_f64("ci_g_per_kwh")?;
    let power = reader.optional_f64("node_power_w")?;
    let pue = reader.optional_f64("pue")?;
    let nu = reader.optional_f64("nu")?;
    let any_model_key = ci.is_some() || power.is_some() || pue.is_some() || nu.is_some();

    let (op, source) = match (direct, any_model_key) {
        (Some(_), true) => {
            return Err(ScenarioError::Conflict {
                section,
                message:
                    "give either op_kg_per_node_year or ci_g_per_kwh/node_power_w/pue, not both"
                        .into(),
            })
        }
        (Some(op), false) => (op, OpSource::Direct),
        (None, _) => {
            let model = NodePowerModel::new(
                power.ok_or(ScenarioError::MissingKey {
                    section,
                    key: "node_power_w",
                })?,
                gamma,
                pue.ok_or(ScenarioError::MissingKey {
                    section,
                    key: "pue",
                })?,
                ci.ok_or(ScenarioError::MissingKey {
                    section,
                    key: "ci_g_per_kwh",
                })?,
            )
            .and_then(|m| m.with_network_overhead(nu.unwrap_or(0.0)))
            .map_err(invalid)?;
            let op = model.op_full_per_node_kg();
            notes.push(format!(
                "{section}: op_kg_per_node_year = {op} derived from {} W, PUE {}, nu {}, CI {} g/kWh",
                model.active_power_w,
                model.pue,
                model.network_overhead_fraction,
                model.carbon_intensity_g_per_kwh
            ));
            (op, OpSource::PowerModel(model))
        }
    };

    let class = SiteClass {
        site_count: reader.u32("sites")?,
        nodes_per_site: reader.u32("nodes")?,
        load: reader.f64("load")?,
        embodied_per_node_kg: embodied,
        op_full_per_node_kg: op,
    };
    class.validate().map_err(invalid)?;
    Ok((class, source))
}

/// Parses and validates a scenario file.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let sections = tokenize(text)?;
    let reader = |name: &'static str| -> Result<SectionReader<'_>, ScenarioError> {
        Ok(SectionReader {
            name,
            entries: Some(
                sections
                    .get(name)
                    .ok_or(ScenarioError::MissingSection(name))?,
            ),
        })
    };
    let scenario = reader("scenario")?;
    let hi = reader("hi")?;
    let lo = reader("lo")?;
    let common = reader("common")?;
    let shift = reader("shift")?;

    let name = scenario.text("name")?.to_string();
    let gamma = common.f64("gamma")?;
    check_fraction("gamma", gamma).map_err(|source| ScenarioError::Invalid {
        section: "common",
        source,
    })?;
    let embodied = common.f64("embodied_kg_per_node_year")?;
    let policy = ShiftPolicy::new(shift.f64("alpha")?, shift.f64("beta")?, shift.f64("eta")?)
        .map_err(|source| ScenarioError::Invalid {
            section: "shift",
            source,
        })?;

    let mut notes = Vec::new();
    let (hi, hi_source) = read_class(&hi, gamma, embodied, &mut notes)?;
    let (lo, lo_source) = read_class(&lo, gamma, embodied, &mut notes)?;

    let config = ScenarioConfig {
        name,
        hi,
        lo,
        gamma,
        policy,
        hi_source,
        lo_source,
        notes,
    };
    config.validate()?;
    Ok(config)
}

/// Grid carbon-intensity profile of one region that alternates between a
/// renewable-dominated and a fossil-dominated part of each day.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionProfile {
    pub name: String,
    pub average_ci: f64,
    pub renewable_ci: f64,
    pub renewable_hours_per_day: f64,
    pub sunshine_hours_per_year: Option<f64>,
    pub wind_load_factor: Option<f64>,
}

impl RegionProfile {
    /// Solar day split: 8 renewable hours out of 24.
    pub fn solar(name: &str, average_ci: f64, renewable_ci: f64) -> Self {
        Self {
            name: name.to_string(),
            average_ci,
            renewable_ci,
            renewable_hours_per_day: 8.0,
            sunshine_hours_per_year: None,
            wind_load_factor: None,
        }
    }

    /// Wind split: half of each day is wind dominated.
    pub fn wind(name: &str, average_ci: f64, renewable_ci: f64) -> Self {
        Self {
            renewable_hours_per_day: 12.0,
            ..Self::solar(name, average_ci, renewable_ci)
        }
    }

    pub fn with_sunshine_hours(mut self, hours: f64) -> Self {
        self.sunshine_hours_per_year = Some(hours);
        self
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        check(
            "renewable_ci",
            self.renewable_ci,
            self.renewable_ci >= 0.0,
            "[0, inf)",
        )?;
        check(
            "average_ci",
            self.average_ci,
            self.average_ci >= 0.0,
            "[0, inf)",
        )?;
        let h = self.renewable_hours_per_day;
        check("renewable_hours_per_day", h, h > 0.0 && h < 24.0, "(0, 24)")?;
        if let Some(s) = self.sunshine_hours_per_year {
            check("sunshine_hours_per_year", s, s >= 0.0, "[0, inf)")?;
        }
        if let Some(lf) = self.wind_load_factor {
            check_fraction("wind_load_factor", lf)?;
        }
        if self.average_ci < self.renewable_ci {
            return Err(ScenarioError::RenewableAboveAverage {
                name: self.name.clone(),
                average: self.average_ci,
                renewable: self.renewable_ci,
            });
        }
        Ok(())
    }

    /// Hours per year the region would be renewable dominated if every day
    /// had the full renewable split.
    pub fn reference_hours_per_year(&self) -> f64 {
        self.renewable_hours_per_day * 365.0
    }
}

/// CI of the fossil-dominated hours, inverted from the time-weighted daily
/// average `(h * ci_renewable + (24 - h) * ci_fossil) / 24`.
pub fn fossil_ci_backout(profile: &RegionProfile) -> Result<f64, ScenarioError> {
    profile.validate()?;
    let h = profile.renewable_hours_per_day;
    Ok((24.0 * profile.average_ci - h * profile.renewable_ci) / (24.0 - h))
}

pub fn mean_fossil_ci(profiles: &[RegionProfile]) -> Result<f64, ScenarioError> {
    if profiles.is_empty() {
        return Err(ScenarioError::NoProfiles);
    }
    let sum = profiles
        .iter()
        .map(fossil_ci_backout)
        .sum::<Result<f64, _>>()?;
    Ok(sum / profiles.len() as f64)
}

/// Share of the year during which solar-driven shifting is possible.
///
/// Each profile contributes its sunshine hours relative to the full-split
/// reference year (capped at 1). `always_low_count` adds that many weights
/// of full availability for sites that are low-carbon around the clock. The
/// availability is then scaled by `overlap_factor` for time-zone overlap.
pub fn solar_beta(
    profiles: &[RegionProfile],
    always_low_count: u32,
    overlap_factor: f64,
) -> Result<f64, ScenarioError> {
    check_fraction("overlap_factor", overlap_factor)?;
    if profiles.is_empty() && always_low_count == 0 {
        return Err(ScenarioError::NoProfiles);
    }
    let mut available = 0.0;
    for p in profiles {
        p.validate()?;
        let sunshine = p
            .sunshine_hours_per_year
            .ok_or_else(|| ScenarioError::MissingSunshine(p.name.clone()))?;
        available += (sunshine / p.reference_hours_per_year()).min(1.0);
    }
    let always = f64::from(always_low_count);
    let availability = (available + always) / (profiles.len() as f64 + always);
    Ok(availability * overlap_factor)
}

/// Share of the year during which wind-driven shifting is possible, from the
/// realised versus assumed load factor and a penalty for correlated weather.
pub fn wind_beta(
    ideal_load_factor: f64,
    actual_load_factor: f64,
    correlation_penalty: f64,
) -> Result<f64, ScenarioError> {
    check(
        "ideal_load_factor",
        ideal_load_factor,
        ideal_load_factor > 0.0 && ideal_load_factor <= 1.0,
        "(0, 1]",
    )?;
    check(
        "actual_load_factor",
        actual_load_factor,
        (0.0..=ideal_load_factor).contains(&actual_load_factor),
        "[0, ideal_load_factor]",
    )?;
    check_fraction("correlation_penalty", correlation_penalty)?;
    Ok(actual_load_factor / ideal_load_factor * (1.0 - correlation_penalty))
}

/// Number of nodes whose facility draw at full load (node power times PUE)
/// fits the budget, rounded to the nearest node.
pub fn nodes_from_power_budget(budget_w: f64, model: &NodePowerModel) -> Result<u64, ModelError> {
    check("budget_w", budget_w, budget_w > 0.0, "(0, inf)")?;
    model.validate()?;
    Ok((budget_w / (model.active_power_w * model.pue)).round() as u64)
}
