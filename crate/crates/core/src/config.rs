//! Run configuration read from TOML. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::calculus::MIN_GRID_SIZE;
use crate::error::{Error, Result};
use crate::flow::{default_dt, FlowConfig, Representation};
use crate::functionals::Reference;
use crate::potential::{Potential, DEFAULT_DEGREE};
use crate::sampling::{PotentialSampler, DEFAULT_BOUND, DEFAULT_MARGIN};
use crate::verification::{Mutation, SuiteConfig, Tolerances};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub grid_size: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Monomial coefficients of the reference potential; absent for Fubini–Study.
    #[serde(default)]
    pub reference: Option<ReferenceSection>,
    #[serde(default)]
    pub potential: Option<PotentialSection>,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub mutation: MutationSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    2024
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub coefficients: Vec<f64>,
}

/// Either explicit monomial coefficients or a seeded random draw.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub coefficients: Option<Vec<f64>>,
    pub random: Option<RandomSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSection {
    pub seed: u64,
    #[serde(default = "default_bound")]
    pub bound: f64,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_bound() -> f64 {
    DEFAULT_BOUND
}

fn default_degree() -> usize {
    DEFAULT_DEGREE
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationKind {
    #[default]
    Nodal,
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub t_max: f64,
    /// Defaults to `1e-4 (2048/N)^2`.
    pub dt_init: Option<f64>,
    pub dt_safety: f64,
    pub record_every: usize,
    pub representation: RepresentationKind,
    pub degree: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            t_max: 1.0,
            dt_init: None,
            dt_safety: 0.8,
            record_every: 10,
            representation: RepresentationKind::Nodal,
            degree: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub samples: usize,
    pub pairs: usize,
    pub degree: usize,
    pub bound: f64,
    pub margin: f64,
    pub dt: f64,
    pub flow_t_max: f64,
    pub flow_degree: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        let s = SuiteConfig::default();
        Self {
            samples: s.samples,
            pairs: s.pairs,
            degree: s.degree,
            bound: s.bound,
            margin: s.margin,
            dt: s.dt,
            flow_t_max: s.flow_t_max,
            flow_degree: s.flow_degree,
        }
    }
}

/// Overrides for individual check tolerances.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub j_agreement: Option<f64>,
    pub shift_invariance: Option<f64>,
    pub variational: Option<f64>,
    pub cocycle: Option<f64>,
    pub diagonal: Option<f64>,
    pub h_equation: Option<f64>,
    pub h_normalization: Option<f64>,
    pub futaki: Option<f64>,
    pub scal_average: Option<f64>,
    pub class_total: Option<f64>,
    pub residual_constancy: Option<f64>,
    pub inequality: Option<f64>,
    pub flow_monotonicity: Option<f64>,
    pub flow_residual: Option<f64>,
}

impl ToleranceSection {
    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            j_agreement: self.j_agreement.unwrap_or(d.j_agreement),
            shift_invariance: self.shift_invariance.unwrap_or(d.shift_invariance),
            variational: self.variational.unwrap_or(d.variational),
            cocycle: self.cocycle.unwrap_or(d.cocycle),
            diagonal: self.diagonal.unwrap_or(d.diagonal),
            h_equation: self.h_equation.unwrap_or(d.h_equation),
            h_normalization: self.h_normalization.unwrap_or(d.h_normalization),
            futaki: self.futaki.unwrap_or(d.futaki),
            scal_average: self.scal_average.unwrap_or(d.scal_average),
            class_total: self.class_total.unwrap_or(d.class_total),
            residual_constancy: self.residual_constancy.unwrap_or(d.residual_constancy),
            inequality: self.inequality.unwrap_or(d.inequality),
            flow_monotonicity: self.flow_monotonicity.unwrap_or(d.flow_monotonicity),
            flow_residual: self.flow_residual.unwrap_or(d.flow_residual),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MutationSection {
    pub b1_shift: f64,
    pub h_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Where `verify` also writes its report.
    pub report: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be finite")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::UnsupportedDimension(self.dimension));
        }
        if self.grid_size < MIN_GRID_SIZE || !self.grid_size.is_multiple_of(2) {
            return Err(Error::InvalidGrid(self.grid_size));
        }
        if let Some(r) = &self.reference {
            check_finite("reference.coefficients", &r.coefficients)?;
        }
        if let Some(p) = &self.potential {
            match (&p.coefficients, &p.random) {
                (Some(c), None) => check_finite("potential.coefficients", c)?,
                (None, Some(r)) => {
                    if !(r.bound > 0.0 && r.bound.is_finite()) {
                        return Err(config_error("potential.random.bound must be positive"));
                    }
                    if !(0.0..1.0).contains(&r.margin) {
                        return Err(config_error("potential.random.margin must lie in [0, 1)"));
                    }
                }
                _ => {
                    return Err(config_error(
                        "potential needs exactly one of `coefficients` or `random`",
                    ))
                }
            }
        }
        let v = &self.verify;
        if v.samples < 2 || v.pairs == 0 {
            return Err(config_error("verify needs samples >= 2 and pairs >= 1"));
        }
        if !(v.dt > 0.0 && v.bound > 0.0 && v.flow_t_max > 0.0) {
            return Err(config_error(
                "verify.dt, verify.bound and verify.flow_t_max must be positive",
            ));
        }
        if !(0.0..1.0).contains(&v.margin) {
            return Err(config_error("verify.margin must lie in [0, 1)"));
        }
        check_finite(
            "mutation",
            &[self.mutation.b1_shift, self.mutation.h_offset],
        )?;
        self.flow_config(Potential::zero())?.validate()?;
        Ok(())
    }

    pub fn reference(&self) -> Result<Reference> {
        let config = crate::geometry::ManifoldConfig::build(self.dimension, self.grid_size)?;
        match &self.reference {
            None => Reference::background(&config),
            Some(r) => Reference::from_potential(&config, &Potential::monomial(&r.coefficients)),
        }
    }

    /// The configured potential; zero when none is given.
    pub fn potential(&self, reference: &Reference) -> Result<Potential> {
        match &self.potential {
            None => Ok(Potential::zero()),
            Some(PotentialSection {
                coefficients: Some(c),
                ..
            }) => Ok(Potential::monomial(c)),
            Some(PotentialSection {
                random: Some(r), ..
            }) => PotentialSampler::with_params(r.seed, r.degree, r.bound)
                .with_margin(r.margin)
                .admissible(reference),
            Some(_) => Err(config_error("potential needs coefficients or random")),
        }
    }

    pub fn flow_config(&self, initial: Potential) -> Result<FlowConfig> {
        let f = &self.flow;
        let config = FlowConfig {
            initial,
            t_max: f.t_max,
            dt_init: f.dt_init.unwrap_or_else(|| default_dt(self.grid_size)),
            dt_safety: f.dt_safety,
            record_every: f.record_every,
            representation: match f.representation {
                RepresentationKind::Nodal => Representation::Nodal,
                RepresentationKind::Polynomial => Representation::Polynomial { degree: f.degree },
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn suite_config(&self) -> SuiteConfig {
        let v = &self.verify;
        SuiteConfig {
            dimension: self.dimension,
            grid_size: self.grid_size,
            seed: self.seed,
            reference: self
                .reference
                .as_ref()
                .map(|r| r.coefficients.clone())
                .unwrap_or_default(),
            samples: v.samples,
            pairs: v.pairs,
            degree: v.degree,
            bound: v.bound,
            margin: v.margin,
            dt: v.dt,
            flow_t_max: v.flow_t_max,
            flow_degree: v.flow_degree,
            flow_record_every: self.flow.record_every,
            tolerances: self.tolerances.resolve(),
            mutation: Mutation {
                b1_shift: self.mutation.b1_shift,
                h_offset: self.mutation.h_offset,
            },
        }
    }
}
