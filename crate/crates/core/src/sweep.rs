//! Reduction-versus-load sweeps with the variant toggles used to separate
//! the effects of idle power, embodied carbon and time constraints.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{blended_emissions, gls_emissions, ModelError};
use crate::scenario::{ScenarioConfig, ScenarioError};

/// Default grid spacing.
pub const DEFAULT_STEP: f64 = 0.01;

/// Loads at which a zero baseline is replaced by its right-hand limit.
const ZERO_LOAD_PROBE: f64 = 1e-9;

/// Smallest second difference that counts as a kink.
const KINK_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep range: {0}")]
    InvalidRange(String),
    #[error(
        "unknown variant `{0}` (expected full, zero_idle, zero_embodied or no_time_constraints)"
    )]
    UnknownVariant(String),
    #[error("unknown swept parameter `{0}` (expected load_both or load_hi)")]
    UnknownParameter(String),
    #[error("variant {0} was not part of the sweep")]
    MissingVariant(Variant),
    #[error("kink detection needs at least 3 rows with defined reductions, got {0}")]
    TooFewRows(usize),
    #[error("no kink: the reduction curve has no curvature change")]
    NoKink,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParameter {
    /// Both classes share the swept load.
    LoadBoth,
    /// Only the high class load is swept; the low class keeps its own load.
    LoadHi,
}

impl FromStr for SweptParameter {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "load_both" => Ok(Self::LoadBoth),
            "load_hi" => Ok(Self::LoadHi),
            other => Err(SweepError::UnknownParameter(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// The scenario as configured.
    Full,
    /// Idle draw set to zero.
    ZeroIdle,
    /// Embodied carbon set to zero.
    ZeroEmbodied,
    /// Zero idle draw, zero embodied carbon and shifting all of the time.
    NoTimeConstraints,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::ZeroIdle,
        Variant::ZeroEmbodied,
        Variant::NoTimeConstraints,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::ZeroIdle => "zero_idle",
            Variant::ZeroEmbodied => "zero_embodied",
            Variant::NoTimeConstraints => "no_time_constraints",
        }
    }

    fn apply(self, config: &mut ScenarioConfig) {
        let zero_idle = matches!(self, Variant::ZeroIdle | Variant::NoTimeConstraints);
        let zero_embodied = matches!(self, Variant::ZeroEmbodied | Variant::NoTimeConstraints);
        if zero_idle {
            config.gamma = 0.0;
        }
        if zero_embodied {
            config.hi.embodied_per_node_kg = 0.0;
            config.lo.embodied_per_node_kg = 0.0;
        }
        if self == Variant::NoTimeConstraints {
            config.policy.beta = 1.0;
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| SweepError::UnknownVariant(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub parameter: SweptParameter,
    pub from: f64,
    pub to: f64,
    pub step: f64,
    pub variants: Vec<Variant>,
    /// Keep the scenario's alpha instead of moving as much work as possible.
    pub keep_base_alpha: bool,
}

impl SweepSpec {
    /// A sweep over the whole load range at the default step, all variants.
    pub fn new(base: ScenarioConfig, parameter: SweptParameter) -> Self {
        Self {
            base,
            parameter,
            from: 0.0,
            to: 1.0,
            step: DEFAULT_STEP,
            variants: Variant::ALL.to_vec(),
            keep_base_alpha: false,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |msg: String| Err(SweepError::InvalidRange(msg));
        if !(self.from.is_finite() && self.to.is_finite() && self.step.is_finite()) {
            return bad("from, to and step must be finite".into());
        }
        if self.from < 0.0 || self.to > 1.0 {
            return bad(format!("[{}, {}] is not within [0, 1]", self.from, self.to));
        }
        if self.from > self.to {
            return bad(format!("from {} exceeds to {}", self.from, self.to));
        }
        if self.step <= 0.0 {
            return bad(format!("step {} must be positive", self.step));
        }
        if self.variants.is_empty() {
            return bad("no variants requested".into());
        }
        Ok(())
    }

    /// Grid loads `from + i * step` up to `to`, rounded to 10 decimals so
    /// that nominal values such as 0.5 are hit exactly.
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| round_to(self.from + i as f64 * self.step, 1e10).min(1.0))
            .collect()
    }

    fn config_at(&self, load: f64, variant: Variant) -> ScenarioConfig {
        let mut config = self.base.clone();
        match self.parameter {
            SweptParameter::LoadBoth => {
                config.hi.load = load;
                config.lo.load = load;
            }
            SweptParameter::LoadHi => config.hi.load = load,
        }
        if !self.keep_base_alpha {
            config.policy.alpha = 1.0;
        }
        variant.apply(&mut config);
        config
    }

    fn reduction_at(&self, load: f64, variant: Variant) -> Result<Option<f64>, SweepError> {
        let config = self.config_at(load, variant);
        match config.evaluate() {
            Ok(report) => Ok(Some(report.reduction)),
            Err(ModelError::ZeroBaseline) => {
                // Baseline and shifted totals both vanish at zero load: use
                // the limit from the right, where both grow linearly.
                let blended = config.policy.beta
                    * gls_emissions(&config.hi, &config.lo, config.gamma, &config.policy);
                if blended != 0.0 {
                    return Ok(None);
                }
                let probe = self.config_at(load + ZERO_LOAD_PROBE, variant);
                Ok(
                    blended_emissions(&probe.hi, &probe.lo, probe.gamma, &probe.policy)
                        .map(|r| Some(r.reduction))
                        .unwrap_or(None),
                )
            }
            Err(e) => Err(e.into()),
        }
    }
}

fn round_to(x: f64, scale: f64) -> f64 {
    (x * scale).round() / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub load: f64,
    /// One entry per variant, in [`SweepTable::variants`] order. `None`
    /// where the baseline is zero and no limit exists.
    pub reductions: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variants: Vec<Variant>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn column(&self, variant: Variant) -> Result<Vec<Option<f64>>, SweepError> {
        let idx = self
            .variants
            .iter()
            .position(|v| *v == variant)
            .ok_or(SweepError::MissingVariant(variant))?;
        Ok(self.rows.iter().map(|r| r.reductions[idx]).collect())
    }

    /// CSV with a `load,<variant>...` header and one row per grid load.
    /// Undefined reductions are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("load");
        for v in &self.variants {
            out.push(',');
            out.push_str(v.name());
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.load.to_string());
            for r in &row.reductions {
                out.push(',');
                if let Some(r) = r {
                    out.push_str(&r.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates every requested variant at every grid load. Points are
/// computed in parallel; rows come back in ascending load order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable, SweepError> {
    spec.validate()?;
    spec.base.validate()?;
    let mut variants = Vec::new();
    for v in &spec.variants {
        if !variants.contains(v) {
            variants.push(*v);
        }
    }
    let rows = spec
        .grid()
        .into_par_iter()
        .map(|load| {
            let reductions = variants
                .iter()
                .map(|v| spec.reduction_at(load, *v))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SweepRow { load, reductions })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    Ok(SweepTable { variants, rows })
}

/// Load at which the reduction curve bends hardest: the grid point with the
/// largest absolute discrete second difference.
pub fn kink_location(table: &SweepTable, variant: Variant) -> Result<f64, SweepError> {
    let column = table.column(variant)?;
    let points: Vec<(f64, f64)> = table
        .rows
        .iter()
        .zip(column)
        .filter_map(|(row, r)| r.map(|r| (row.load, r)))
        .collect();
    if points.len() < 3 {
        return Err(SweepError::TooFewRows(points.len()));
    }
    let (load, bend) = points
        .windows(3)
        .map(|w| (w[1].0, (w[2].1 - 2.0 * w[1].1 + w[0].1).abs()))
        .fold(
            (f64::NAN, 0.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    if bend <= KINK_THRESHOLD {
        return Err(SweepError::NoKink);
    }
    Ok(load)
}
