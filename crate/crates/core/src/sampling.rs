//! Seeded sampling of admissible polynomial potentials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functionals::Reference;
use crate::potential::{Potential, DEFAULT_DEGREE};

/// Default coefficient bound for random potentials.
pub const DEFAULT_BOUND: f64 = 0.3;

/// Default lower bound on `min(Â, B̂)`, i.e. `ω_φ ≥ margin·ω_FS`. Draws that
/// are positive but nearly degenerate at an endpoint develop boundary layers
/// the uniform grid cannot resolve.
pub const DEFAULT_MARGIN: f64 = 0.5;

const MAX_ATTEMPTS: usize = 10_000;

/// Draws monomial coefficients uniformly from `[-bound, bound]` and rejects
/// draws whose metric falls below `margin` times Fubini–Study.
#[derive(Debug, Clone)]
pub struct PotentialSampler {
    rng: ChaCha8Rng,
    degree: usize,
    bound: f64,
    margin: f64,
}

impl PotentialSampler {
    pub fn new(seed: u64) -> Self {
        Self::with_params(seed, DEFAULT_DEGREE, DEFAULT_BOUND)
    }

    pub fn with_params(seed: u64, degree: usize, bound: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            degree,
            bound,
            margin: DEFAULT_MARGIN,
        }
    }

    /// `0` accepts every positive metric.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// Raw coefficients, without any admissibility test.
    pub fn coefficients(&mut self) -> Vec<f64> {
        (0..=self.degree)
            .map(|_| self.rng.gen_range(-self.bound..=self.bound))
            .collect()
    }

    /// A potential `φ` with `ω_φ > 0` relative to `reference` and above the
    /// margin.
    pub fn admissible(&mut self, reference: &Reference) -> Result<Potential> {
        self.admissible_where(reference, |_| true)
    }

    /// Like [`admissible`](Self::admissible) with an extra acceptance test,
    /// e.g. that `φ ± t·direction` stays admissible as well.
    pub fn admissible_where(
        &mut self,
        reference: &Reference,
        accept: impl Fn(&Potential) -> bool,
    ) -> Result<Potential> {
        for _ in 0..MAX_ATTEMPTS {
            let phi = Potential::monomial(&self.coefficients());
            let Ok(state) = reference.state_of(&phi) else {
                continue;
            };
            if state.a_hat().min().min(state.b_hat().min()) >= self.margin && accept(&phi) {
                return Ok(phi);
            }
        }
        Err(Error::Config(format!(
            "no admissible potential found in {MAX_ATTEMPTS} draws (bound {})",
            self.bound
        )))
    }

    /// Directions for variational checks come from the same family.
    pub fn direction(&mut self) -> Potential {
        Potential::monomial(&self.coefficients())
    }
}
