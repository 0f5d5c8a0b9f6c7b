//! Time-stepped check of the closed-form site model.
//!
//! Per time step a site emits `a * load_t * c_t + b * c_t` (annualised, with
//! `a = 1 - gamma`, `b = gamma` and `c_t` the full-load operational rate)
//! plus its embodied share. When load and carbon intensity are independent,
//! the year-average of that trace equals the same expression evaluated at
//! the distribution means. This module generates seeded traces and reports
//! how far the two are apart.
//!
//! Random numbers come from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Each draw takes one `next_u64()` and maps it to
//! `[0, 1)` as `(x >> 11) * 2^-53`. Independent traces draw the load first,
//! then the carbon intensity, at every step; coupled traces reuse one draw
//! for both.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{check, check_fraction, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("steps must be at least 1")]
    NoSteps,
    #[error("{which} distribution: {message}")]
    Distribution {
        which: &'static str,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Marginal distribution of one trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Constant(f64),
    Uniform {
        low: f64,
        high: f64,
    },
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint {
        low: f64,
        high: f64,
        p_high: f64,
    },
}

impl Distribution {
    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Constant(v) => v,
            Distribution::Uniform { low, high } => 0.5 * (low + high),
            Distribution::TwoPoint { low, high, p_high } => low + p_high * (high - low),
        }
    }

    /// Inverse CDF at `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Distribution::Constant(v) => v,
            Distribution::Uniform { low, high } => low + u * (high - low),
            Distribution::TwoPoint { low, high, p_high } => {
                if u < p_high {
                    high
                } else {
                    low
                }
            }
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            Distribution::Constant(v) => (v, v),
            Distribution::Uniform { low, high } | Distribution::TwoPoint { low, high, .. } => {
                (low, high)
            }
        }
    }

    fn validate(&self, which: &'static str, min: f64, max: f64) -> Result<(), OracleError> {
        let err = |message: String| Err(OracleError::Distribution { which, message });
        let (low, high) = self.support();
        if !(low.is_finite() && high.is_finite()) {
            return err("bounds must be finite".into());
        }
        if low > high {
            return err(format!("low {low} exceeds high {high}"));
        }
        if low < min || high > max {
            return err(format!("support [{low}, {high}] leaves [{min}, {max}]"));
        }
        if let Distribution::TwoPoint { p_high, .. } = self {
            if !(0.0..=1.0).contains(p_high) {
                return err(format!("p_high {p_high} is not a probability"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    Independent,
    /// Load and CI are the same quantile at every step, so the load is an
    /// increasing function of the CI. A negative control for the
    /// independence assumption.
    Comonotone,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSpec {
    pub steps: u64,
    pub seed: u64,
    pub load: Distribution,
    /// Carbon intensity in gCO2e/kWh.
    pub ci: Distribution,
    pub coupling: Coupling,
    /// Energy one node would draw at full load over the year, facility
    /// overheads included (kWh). Converts CI into kgCO2e per year.
    pub full_load_energy_kwh: f64,
}

impl TraceSpec {
    /// Uniform load on [0.6, 1.0] and CI on [300, 500] g/kWh for a 1.2 kW
    /// node, independent draws.
    pub fn with_defaults(steps: u64, seed: u64) -> Self {
        Self {
            steps,
            seed,
            load: Distribution::Uniform {
                low: 0.6,
                high: 1.0,
            },
            ci: Distribution::Uniform {
                low: 300.0,
                high: 500.0,
            },
            coupling: Coupling::Independent,
            full_load_energy_kwh: 10_512.0,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.steps == 0 {
            return Err(OracleError::NoSteps);
        }
        self.load.validate("load", 0.0, 1.0)?;
        self.ci.validate("ci", 0.0, f64::INFINITY)?;
        check(
            "full_load_energy_kwh",
            self.full_load_energy_kwh,
            self.full_load_energy_kwh >= 0.0,
            "[0, inf)",
        )?;
        Ok(())
    }

    fn emission_rate(&self, ci: f64) -> f64 {
        self.full_load_energy_kwh * ci / 1000.0
    }

    /// The per-step load and full-load operational rate (kgCO2e/y).
    pub fn generate(&self) -> Result<Vec<(f64, f64)>, OracleError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        Ok((0..self.steps)
            .map(|_| {
                let u_load = unit();
                let u_ci = match self.coupling {
                    Coupling::Independent => unit(),
                    Coupling::Comonotone => u_load,
                };
                (
                    self.load.quantile(u_load),
                    self.emission_rate(self.ci.quantile(u_ci)),
                )
            })
            .collect())
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Default)]
struct Sum {
    sum: f64,
    carry: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn mean_of(values: impl Iterator<Item = f64>, n: f64) -> f64 {
    let mut s = Sum::default();
    values.for_each(|v| s.add(v));
    s.value() / n
}

fn site_rate(gamma: f64, load: f64, rate: f64) -> f64 {
    (1.0 - gamma) * load * rate + gamma * rate
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceComparison {
    /// Time-integrated emissions over the year from the trace.
    pub trace_total: f64,
    /// Closed form at the distribution means.
    pub closed_form_total: f64,
    /// Closed form at the realised sample means.
    pub sample_mean_total: f64,
    /// `(1 - gamma)` times the sample covariance of load and rate (1/n
    /// normalisation), computed from centred values.
    pub covariance_term: f64,
    /// Standard error of the trace mean.
    pub standard_error: f64,
    /// `(trace_total - closed_form_total) / standard_error`.
    pub z_score: f64,
}

/// Year total of one site over the generated trace, embodied emissions
/// included.
pub fn evaluate_trace(spec: &TraceSpec, gamma: f64, embodied: f64) -> Result<f64, OracleError> {
    Ok(compare_with_means(spec, gamma, embodied)?.trace_total)
}

pub fn compare_with_means(
    spec: &TraceSpec,
    gamma: f64,
    embodied: f64,
) -> Result<TraceComparison, OracleError> {
    check_fraction("gamma", gamma)?;
    check("embodied", embodied, embodied >= 0.0, "[0, inf)")?;
    let trace = spec.generate()?;
    let n = trace.len() as f64;

    let per_step: Vec<f64> = trace.iter().map(|&(l, c)| site_rate(gamma, l, c)).collect();
    let mean_step = mean_of(per_step.iter().copied(), n);
    let trace_total = mean_step + embodied;

    let closed_form_total =
        site_rate(gamma, spec.load.mean(), spec.emission_rate(spec.ci.mean())) + embodied;

    let mean_load = mean_of(trace.iter().map(|t| t.0), n);
    let mean_rate = mean_of(trace.iter().map(|t| t.1), n);
    let sample_mean_total = site_rate(gamma, mean_load, mean_rate) + embodied;
    let covariance = mean_of(
        trace
            .iter()
            .map(|&(l, c)| (l - mean_load) * (c - mean_rate)),
        n,
    );

    let standard_error = if trace.len() > 1 {
        let var = mean_of(per_step.iter().map(|e| (e - mean_step).powi(2)), n) * n / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let delta = trace_total - closed_form_total;
    let z_score = if standard_error > 0.0 {
        delta / standard_error
    } else if delta.abs() <= 1e-9 * closed_form_total.abs().max(1.0) {
        0.0
    } else {
        delta.signum() * f64::INFINITY
    };

    Ok(TraceComparison {
        trace_total,
        closed_form_total,
        sample_mean_total,
        covariance_term: (1.0 - gamma) * covariance,
        standard_error,
        z_score,
    })
}
