//! Annual emissions of a fleet of high- and low-carbon-intensity data centres,
//! with and without geographic load shifting between them.
//!
//! All emission values are kgCO2e per year unless a name says otherwise.
//! Per-site totals are per-node values multiplied by the nodes per site.

use thiserror::Error;

/// Hours in the modelled year (365 days, no leap-year handling).
pub const HOURS_PER_YEAR: f64 = 24.0 * 365.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{field} = {value} is outside its valid range {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("{field} must be at least 1")]
    ZeroCount { field: &'static str },
    #[error("baseline emissions are zero, the relative reduction is undefined")]
    ZeroBaseline,
    #[error("c_hi + c_lo must be positive for the ideal reduction")]
    ZeroEmissions,
}

pub(crate) fn check(
    field: &'static str,
    value: f64,
    ok: bool,
    range: &'static str,
) -> Result<(), ModelError> {
    // NaN fails every comparison, so `ok` is false for it as well.
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            field,
            value,
            range,
        })
    }
}

pub(crate) fn check_fraction(field: &'static str, value: f64) -> Result<(), ModelError> {
    check(field, value, (0.0..=1.0).contains(&value), "[0, 1]")
}

/// Electrical and grid characteristics of one node, used to derive the
/// full-load operational emissions of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePowerModel {
    pub active_power_w: f64,
    /// Idle draw as a fraction of active draw.
    pub idle_fraction: f64,
    pub pue: f64,
    /// Network infrastructure overhead on top of node energy.
    pub network_overhead_fraction: f64,
    pub carbon_intensity_g_per_kwh: f64,
}

impl NodePowerModel {
    pub fn new(
        active_power_w: f64,
        idle_fraction: f64,
        pue: f64,
        carbon_intensity_g_per_kwh: f64,
    ) -> Result<Self, ModelError> {
        let model = Self {
            active_power_w,
            idle_fraction,
            pue,
            network_overhead_fraction: 0.0,
            carbon_intensity_g_per_kwh,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_network_overhead(mut self, fraction: f64) -> Result<Self, ModelError> {
        self.network_overhead_fraction = fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check(
            "active_power_w",
            self.active_power_w,
            self.active_power_w > 0.0,
            "(0, inf)",
        )?;
        check_fraction("idle_fraction", self.idle_fraction)?;
        check("pue", self.pue, self.pue >= 1.0, "[1, inf)")?;
        check(
            "network_overhead_fraction",
            self.network_overhead_fraction,
            self.network_overhead_fraction >= 0.0,
            "[0, inf)",
        )?;
        check(
            "carbon_intensity_g_per_kwh",
            self.carbon_intensity_g_per_kwh,
            self.carbon_intensity_g_per_kwh >= 0.0,
            "[0, inf)",
        )
    }

    /// Energy drawn by one always-active node over a year, in kWh.
    pub fn annual_energy_kwh(&self) -> f64 {
        self.active_power_w * HOURS_PER_YEAR / 1000.0
    }

    /// Operational emissions of one node running at full load for a year,
    /// including network overhead and PUE, in kgCO2e.
    pub fn op_full_per_node_kg(&self) -> f64 {
        self.annual_energy_kwh()
            * (1.0 + self.network_overhead_fraction)
            * self.pue
            * self.carbon_intensity_g_per_kwh
            / 1000.0
    }
}

/// One emission class of identical sites (all high-CI or all low-CI).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteClass {
    pub site_count: u32,
    pub nodes_per_site: u32,
    /// Fraction of time a node is not idle.
    pub load: f64,
    pub embodied_per_node_kg: f64,
    /// Operational emissions of one node at full load for a year.
    pub op_full_per_node_kg: f64,
}

impl SiteClass {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.site_count == 0 {
            return Err(ModelError::ZeroCount {
                field: "site_count",
            });
        }
        if self.nodes_per_site == 0 {
            return Err(ModelError::ZeroCount {
                field: "nodes_per_site",
            });
        }
        check_fraction("load", self.load)?;
        check(
            "embodied_per_node_kg",
            self.embodied_per_node_kg,
            self.embodied_per_node_kg >= 0.0,
            "[0, inf)",
        )?;
        check(
            "op_full_per_node_kg",
            self.op_full_per_node_kg,
            self.op_full_per_node_kg >= 0.0,
            "[0, inf)",
        )
    }

    fn sites(&self) -> f64 {
        f64::from(self.site_count)
    }

    pub fn embodied_per_site_kg(&self) -> f64 {
        self.embodied_per_node_kg * f64::from(self.nodes_per_site)
    }

    pub fn op_full_per_site_kg(&self) -> f64 {
        self.op_full_per_node_kg * f64::from(self.nodes_per_site)
    }
}

/// How much work may move from the high to the low class, and at what cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftPolicy {
    /// Fraction of the high-site workload that can be moved.
    pub alpha: f64,
    /// Fraction of the time that moving is possible.
    pub beta: f64,
    /// Emission overhead of moving, per unit of moved work.
    pub eta: f64,
}

impl ShiftPolicy {
    pub fn new(alpha: f64, beta: f64, eta: f64) -> Result<Self, ModelError> {
        let policy = Self { alpha, beta, eta };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_fraction("alpha", self.alpha)?;
        check_fraction("beta", self.beta)?;
        check("eta", self.eta, (0.0..1.0).contains(&self.eta), "[0, 1)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelWarning {
    /// The high class has no load, so there is nothing to move and alpha is
    /// passed through uncapped.
    IdleHighClass,
}

/// Itemised annual emissions of one scenario.
///
/// `op_hi`, `op_lo` and `overhead` are the time-blended contributions, so
/// `embodied_total + op_hi + op_lo + overhead == blended_total`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionsReport {
    pub embodied_total: f64,
    pub op_hi: f64,
    pub op_lo: f64,
    pub overhead: f64,
    pub baseline_total: f64,
    pub gls_total: f64,
    pub blended_total: f64,
    pub alpha_eff: f64,
    pub reduction: f64,
    pub warnings: Vec<ModelWarning>,
}

/// Fraction of full-load power drawn at `load` when idle nodes draw
/// `idle_fraction` of active power.
pub fn operational_factor(load: f64, idle_fraction: f64) -> f64 {
    load + idle_fraction * (1.0 - load)
}

fn embodied_total(hi: &SiteClass, lo: &SiteClass) -> f64 {
    hi.sites() * hi.embodied_per_site_kg() + lo.sites() * lo.embodied_per_site_kg()
}

/// Emissions of both classes when no work is moved.
pub fn baseline_emissions(hi: &SiteClass, lo: &SiteClass, gamma: f64) -> f64 {
    embodied_total(hi, lo)
        + hi.sites() * operational_factor(hi.load, gamma) * hi.op_full_per_site_kg()
        + lo.sites() * operational_factor(lo.load, gamma) * lo.op_full_per_site_kg()
}

/// Movable fraction after capping by the free capacity of the low class.
///
/// The capped form `min(alpha, n_lo (1 - load_lo) / (n_hi load_hi))` equals
/// the three-way piecewise definition for every alpha in [0, 1]; its
/// "otherwise 1" branch needs alpha > 1 and never fires.
pub fn effective_alpha(alpha: f64, hi: &SiteClass, lo: &SiteClass) -> f64 {
    let movable = hi.sites() * hi.load;
    if movable == 0.0 {
        return alpha;
    }
    let free = lo.sites() * (1.0 - lo.load);
    alpha.min(free / movable).clamp(0.0, 1.0)
}

/// Loads of the high and low class after moving `alpha_eff` of the high work.
pub fn shifted_loads(alpha_eff: f64, hi: &SiteClass, lo: &SiteClass) -> (f64, f64) {
    let moved = alpha_eff * hi.load;
    (hi.load - moved, lo.load + moved * hi.sites() / lo.sites())
}

pub fn shift_overhead(eta: f64, alpha_eff: f64, hi: &SiteClass, lo: &SiteClass) -> f64 {
    eta * alpha_eff
        * (hi.sites() * hi.op_full_per_site_kg() + lo.sites() * lo.op_full_per_site_kg())
}

struct ShiftedParts {
    alpha_eff: f64,
    op_hi: f64,
    op_lo: f64,
    overhead: f64,
}

fn shifted_parts(hi: &SiteClass, lo: &SiteClass, gamma: f64, policy: &ShiftPolicy) -> ShiftedParts {
    let alpha_eff = effective_alpha(policy.alpha, hi, lo);
    let (load_hi, load_lo) = shifted_loads(alpha_eff, hi, lo);
    ShiftedParts {
        alpha_eff,
        op_hi: hi.sites() * operational_factor(load_hi, gamma) * hi.op_full_per_site_kg(),
        op_lo: lo.sites() * operational_factor(load_lo, gamma) * lo.op_full_per_site_kg(),
        overhead: shift_overhead(policy.eta, alpha_eff, hi, lo),
    }
}

/// Emissions when the capped share of the high-class work runs at the low
/// class all of the time.
pub fn gls_emissions(hi: &SiteClass, lo: &SiteClass, gamma: f64, policy: &ShiftPolicy) -> f64 {
    let parts = shifted_parts(hi, lo, gamma, policy);
    embodied_total(hi, lo) + parts.op_hi + parts.op_lo + parts.overhead
}

/// Full evaluation: shifting happens for a `beta` share of the year and the
/// baseline holds for the rest.
pub fn blended_emissions(
    hi: &SiteClass,
    lo: &SiteClass,
    gamma: f64,
    policy: &ShiftPolicy,
) -> Result<EmissionsReport, ModelError> {
    hi.validate()?;
    lo.validate()?;
    check_fraction("gamma", gamma)?;
    policy.validate()?;

    let beta = policy.beta;
    let embodied = embodied_total(hi, lo);
    let base_hi = hi.sites() * operational_factor(hi.load, gamma) * hi.op_full_per_site_kg();
    let base_lo = lo.sites() * operational_factor(lo.load, gamma) * lo.op_full_per_site_kg();
    let baseline_total = embodied + base_hi + base_lo;

    let parts = shifted_parts(hi, lo, gamma, policy);
    let gls_total = embodied + parts.op_hi + parts.op_lo + parts.overhead;
    // Written as a correction to the baseline so that beta = 0 or an
    // unchanged shifted total reproduce the baseline bit for bit.
    let blend = |base: f64, shifted: f64| base + beta * (shifted - base);
    let blended_total = blend(baseline_total, gls_total);

    if baseline_total == 0.0 {
        return Err(ModelError::ZeroBaseline);
    }

    let mut warnings = Vec::new();
    if hi.load == 0.0 && policy.alpha > 0.0 {
        warnings.push(ModelWarning::IdleHighClass);
    }

    Ok(EmissionsReport {
        embodied_total: embodied,
        op_hi: blend(base_hi, parts.op_hi),
        op_lo: blend(base_lo, parts.op_lo),
        overhead: beta * parts.overhead,
        baseline_total,
        gls_total,
        blended_total,
        alpha_eff: parts.alpha_eff,
        reduction: (baseline_total - blended_total) / baseline_total,
        warnings,
    })
}

/// Upper bound on the reduction for two equally loaded sites with no
/// embodied carbon, no idle draw, no overhead and unrestricted shifting.
pub fn ideal_reduction(c_hi: f64, c_lo: f64, load: f64) -> Result<f64, ModelError> {
    check("c_hi", c_hi, c_hi >= 0.0, "[0, inf)")?;
    check("c_lo", c_lo, c_lo >= 0.0, "[0, inf)")?;
    check_fraction("load", load)?;
    let total = c_hi + c_lo;
    if total <= 0.0 {
        return Err(ModelError::ZeroEmissions);
    }
    if load <= 0.5 {
        Ok((c_hi - c_lo) / total)
    } else {
        Ok(1.0 - ((2.0 * load - 1.0) * c_hi + c_lo) / (load * total))
    }
}
