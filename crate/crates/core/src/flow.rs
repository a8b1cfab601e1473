//! The normalized Kähler–Ricci flow `φ̇ = log(ω_φ^n/ω^n) + φ - h_ω` as a
//! method-of-lines system.
//!
//! The potential is split as `φ = ψ + c` with `∫_0^1 ψ̇ dx = 0`: the shape
//! `ψ` carries the geometry and the scalar `c` absorbs the exponentially
//! growing constant mode. Since `v(ψ + c) = v(ψ) + c`, writing `w = v(ψ)`
//! and `m` for its mean gives `ψ̇ = w - m`, `ċ = m + c`, which is the same
//! flow. Every recorded functional is invariant under constant shifts.
//!
//! Time stepping is classical RK4 on nodal values or on shifted Chebyshev
//! coefficients (velocities are projected by least squares). The step is
//! capped by a power-iteration estimate of the spectral radius of the
//! linearized right-hand side.

use nalgebra::{DMatrix, DVector};

use crate::calculus::{simpson, Grid, Profile};
use crate::error::{Error, Result};
use crate::functionals::{futaki, identity_residual, re_reference, Reference};
use crate::potential::{chebyshev_basis, Potential, RadialPotential};

/// Accepted steps in a row before the step size grows.
pub const GROWTH_STREAK: usize = 10;

/// Consecutive halvings allowed before a run gives up.
pub const MAX_RETRIES: usize = 40;

/// Length of the real stability interval of RK4 is about 2.785; keep a margin.
const RK4_STABILITY: f64 = 2.5;

const POWER_ITERATIONS: usize = 40;

/// Spatial representation of the evolving potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Nodal,
    /// Shifted Chebyshev polynomial of the given degree.
    Polynomial {
        degree: usize,
    },
}

/// Default initial step `1e-4 (2048/N)^2`.
pub fn default_dt(size: usize) -> f64 {
    let ratio = 2048.0 / size as f64;
    1e-4 * ratio * ratio
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub initial: Potential,
    pub t_max: f64,
    pub dt_init: f64,
    /// Growth happens by `1 / dt_safety`; `1` disables growth.
    pub dt_safety: f64,
    pub record_every: usize,
    pub representation: Representation,
}

impl FlowConfig {
    pub fn new(initial: Potential, t_max: f64, size: usize) -> Self {
        Self {
            initial,
            t_max,
            dt_init: default_dt(size),
            dt_safety: 0.8,
            record_every: 10,
            representation: Representation::Nodal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !(self.dt_init > 0.0 && self.dt_init.is_finite()) {
            return Err(Error::Config(format!(
                "dt_init must be positive, got {}",
                self.dt_init
            )));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::Config(format!(
                "dt_safety must lie in (0, 1], got {}",
                self.dt_safety
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be positive".into()));
        }
        if let Representation::Polynomial { degree } = self.representation {
            if degree < 2 {
                return Err(Error::Config(format!(
                    "polynomial degree {degree} is too small"
                )));
            }
        }
        Ok(())
    }
}

/// `φ = ψ + offset` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub psi: Potential,
    pub offset: f64,
}

impl FlowState {
    pub fn potential(&self) -> Potential {
        self.psi.shift(self.offset)
    }
}

/// Least-squares projection of nodal values onto polynomials of fixed degree.
#[derive(Debug, Clone)]
pub struct PolynomialFit {
    degree: usize,
    pinv: DMatrix<f64>,
}

impl PolynomialFit {
    pub fn new(g: &Grid, degree: usize) -> Result<Self> {
        if degree + 1 > g.len() {
            return Err(Error::Config(format!(
                "degree {degree} exceeds what {} nodes can resolve",
                g.len()
            )));
        }
        let basis = DMatrix::from_fn(g.len(), degree + 1, |i, k| {
            chebyshev_basis(g.nodes()[i], degree)[k]
        });
        let pinv = basis
            .pseudo_inverse(1e-13)
            .map_err(|e| Error::Config(format!("polynomial fit failed: {e}")))?;
        Ok(Self { degree, pinv })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn fit(&self, values: &Profile) -> RadialPotential {
        let v = DVector::from_column_slice(values.values());
        let c = &self.pinv * v;
        RadialPotential::from_chebyshev(c.iter().copied().collect())
    }
}

/// `∫_0^1 T_k(2x - 1) dx`.
fn chebyshev_mean(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| k % 2 == 0)
        .map(|(k, c)| c / (1.0 - (k * k) as f64))
        .sum()
}

/// Right-hand side of the split system in the chosen representation.
#[derive(Debug, Clone)]
pub struct FlowOperator<'a> {
    reference: &'a Reference,
    fit: Option<PolynomialFit>,
}

impl<'a> FlowOperator<'a> {
    pub fn new(reference: &'a Reference, representation: Representation) -> Result<Self> {
        let fit = match representation {
            Representation::Nodal => None,
            Representation::Polynomial { degree } => {
                Some(PolynomialFit::new(reference.config().grid(), degree)?)
            }
        };
        Ok(Self { reference, fit })
    }

    pub fn reference(&self) -> &Reference {
        self.reference
    }

    fn grid(&self) -> &Grid {
        self.reference.config().grid()
    }

    /// Converts a potential into the working representation.
    pub fn represent(&self, phi: &Potential) -> Potential {
        match (&self.fit, phi) {
            (None, p) => Potential::Nodal(p.values(self.grid())),
            (Some(fit), Potential::Polynomial(p)) if p.degree() <= fit.degree() => phi.clone(),
            (Some(fit), p) => Potential::Polynomial(fit.fit(&p.values(self.grid()))),
        }
    }

    /// Returns `(w - m, m)` where `w` is the projected velocity at `ψ`.
    /// A stage that leaves the admissible space is reported as `StepRejected`.
    pub fn rhs(&self, psi: &Potential, t: f64, dt: f64) -> Result<(Potential, f64)> {
        let reject = |_| Error::StepRejected { t, dt };
        let eval = self.reference.evaluate(psi).map_err(reject)?;
        let w = eval.velocity();
        if !w.is_finite() {
            return Err(Error::StepRejected { t, dt });
        }
        match &self.fit {
            None => {
                let m = simpson(&w, self.grid())?;
                Ok((Potential::Nodal(w.map(|v| v - m)), m))
            }
            Some(fit) => {
                let p = fit.fit(&w);
                let m = chebyshev_mean(p.chebyshev());
                Ok((Potential::Polynomial(p.shift(-m)), m))
            }
        }
    }

    fn axpy(&self, a: &Potential, factor: f64, b: &Potential) -> Result<Potential> {
        a.axpy(factor, b, self.grid())
    }

    /// One classical RK4 step.
    pub fn step(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        let t = state.t;
        let (k1, m1) = self.rhs(&state.psi, t, dt)?;
        let c1 = m1 + state.offset;
        let (k2, m2) = self.rhs(&self.axpy(&state.psi, 0.5 * dt, &k1)?, t, dt)?;
        let c2 = m2 + state.offset + 0.5 * dt * c1;
        let (k3, m3) = self.rhs(&self.axpy(&state.psi, 0.5 * dt, &k2)?, t, dt)?;
        let c3 = m3 + state.offset + 0.5 * dt * c2;
        let (k4, m4) = self.rhs(&self.axpy(&state.psi, dt, &k3)?, t, dt)?;
        let c4 = m4 + state.offset + dt * c3;

        let mut psi = self.axpy(&state.psi, dt / 6.0, &k1)?;
        psi = self.axpy(&psi, dt / 3.0, &k2)?;
        psi = self.axpy(&psi, dt / 3.0, &k3)?;
        psi = self.axpy(&psi, dt / 6.0, &k4)?;
        // the accepted state itself must be a metric
        self.reference
            .state_of(&psi)
            .map_err(|_| Error::StepRejected { t, dt })?;
        Ok(FlowState {
            t: t + dt,
            psi,
            offset: state.offset + dt / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4),
        })
    }

    /// Power-iteration estimate of the spectral radius of the linearized
    /// shape equation at `psi`.
    pub fn spectral_radius(&self, psi: &Potential) -> Result<f64> {
        let g = self.grid();
        let base = self.rhs(psi, 0.0, 0.0)?.0.values(g);
        // deterministic start with content at every frequency
        let mut u = self.represent(&Potential::Nodal(
            g.profile(|x| (37.0 * x * x).sin() + (1.0 - x).powi(3) - 0.5),
        ));
        let mut rho = 0.0;
        for _ in 0..POWER_ITERATIONS {
            let norm = u.values(g).max_abs();
            if norm == 0.0 {
                break;
            }
            let eps = 1e-7 / norm;
            let plus = self.rhs(&self.axpy(psi, eps, &u)?, 0.0, 0.0)?.0.values(g);
            let jv = (&plus - &base).scale(1.0 / eps);
            rho = jv.max_abs() / norm;
            u = self.represent(&Potential::Nodal(jv));
        }
        Ok(rho)
    }

    /// Largest stable RK4 step at `psi`.
    pub fn stable_dt(&self, psi: &Potential) -> Result<f64> {
        let rho = self.spectral_radius(psi)?;
        Ok(if rho > 0.0 {
            RK4_STABILITY / (1.1 * rho)
        } else {
            f64::INFINITY
        })
    }
}

/// One RK4 step of the flow for `φ` with the given representation.
pub fn step(
    reference: &Reference,
    phi: &Potential,
    dt: f64,
    representation: Representation,
) -> Result<Potential> {
    let op = FlowOperator::new(reference, representation)?;
    let state = FlowState {
        t: 0.0,
        psi: op.represent(phi),
        offset: 0.0,
    };
    Ok(op.step(&state, dt)?.potential())
}

/// Functionals at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub t: f64,
    pub nu: f64,
    pub e1: f64,
    pub dirichlet: f64,
    pub residual: f64,
    pub scal_min: f64,
    pub scal_max: f64,
    pub futaki: f64,
    pub min_a_hat: f64,
    pub min_b_hat: f64,
}

impl FlowRecord {
    pub fn measure(reference: &Reference, t: f64, psi: &Potential) -> Result<Self> {
        let eval = reference.evaluate(psi)?;
        let nu = eval.nu()?;
        let e1 = eval.e1()?;
        let dirichlet = eval.dirichlet()?;
        let state = eval.state();
        let scal = state.scalar_curvature();
        let current = re_reference(reference, psi)?;
        Ok(Self {
            t,
            nu,
            e1,
            dirichlet,
            residual: e1 - 2.0 * nu - dirichlet,
            scal_min: scal.min(),
            scal_max: scal.max(),
            futaki: futaki(&current)?,
            min_a_hat: state.a_hat().min(),
            min_b_hat: state.b_hat().min(),
        })
    }

    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.nu,
            self.e1,
            self.dirichlet,
            self.residual,
            self.scal_min,
            self.scal_max,
            self.futaki,
            self.min_a_hat,
            self.min_b_hat,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub final_state: FlowState,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl FlowTrace {
    /// Largest increase of `ν` between consecutive records, relative to
    /// `1 + |ν|`; non-positive when `ν` is non-increasing.
    pub fn max_nu_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].nu - w[0].nu) / (1.0 + w[0].nu.abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_residual_deviation(&self, c_omega: f64) -> f64 {
        self.records
            .iter()
            .map(|r| (r.residual - c_omega).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest value of `E_1 - 2ν - C_ω` over the records.
    pub fn min_inequality_margin(&self, c_omega: f64) -> f64 {
        self.records
            .iter()
            .map(|r| r.e1 - 2.0 * r.nu - c_omega)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn last(&self) -> &FlowRecord {
        self.records
            .last()
            .expect("a trace has at least one record")
    }
}

/// `C_ω`, measured as the identity residual at `φ = 0`.
pub fn c_omega_estimate(reference: &Reference) -> Result<f64> {
    identity_residual(reference, &Potential::zero())
}

/// Integrates to `t_max`, halving on rejection and growing after streaks of
/// accepted steps, never beyond the stability cap.
pub fn run(reference: &Reference, config: &FlowConfig) -> Result<FlowTrace> {
    config.validate()?;
    let op = FlowOperator::new(reference, config.representation)?;
    let psi = op.represent(&config.initial);
    reference.state_of(&psi)?;
    let mut state = FlowState {
        t: 0.0,
        psi,
        offset: 0.0,
    };
    let t_max = config.t_max;
    let min_dt = 1e-14 * t_max.max(1.0);

    let mut records = vec![FlowRecord::measure(reference, 0.0, &state.psi)?];
    let mut cap = op.stable_dt(&state.psi)?;
    let mut dt = config.dt_init.min(cap);
    let (mut accepted, mut rejected, mut streak, mut retries) = (0usize, 0usize, 0usize, 0usize);

    while state.t < t_max {
        let remaining = t_max - state.t;
        let h = dt.min(remaining);
        match op.step(&state, h) {
            Ok(mut next) => {
                if h == remaining {
                    next.t = t_max;
                }
                state = next;
                accepted += 1;
                retries = 0;
                streak += 1;
                if streak >= GROWTH_STREAK {
                    dt = (dt / config.dt_safety).min(cap);
                    streak = 0;
                }
                if accepted % config.record_every == 0 || state.t >= t_max {
                    records.push(FlowRecord::measure(reference, state.t, &state.psi)?);
                    cap = op.stable_dt(&state.psi)?;
                    dt = dt.min(cap);
                }
            }
            Err(Error::StepRejected { .. }) => {
                rejected += 1;
                retries += 1;
                streak = 0;
                dt = h / 2.0;
                if retries > MAX_RETRIES || dt < min_dt {
                    return Err(Error::FlowAborted {
                        t: state.t,
                        reason: format!(
                            "positivity not restored after {retries} halvings (dt = {dt:e})"
                        ),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(FlowTrace {
        records,
        final_state: state,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ManifoldConfig;

    fn fs(n: usize, size: usize) -> Reference {
        Reference::background(&ManifoldConfig::build(n, size).unwrap()).unwrap()
    }

    #[test]
    fn background_is_a_fixed_point() {
        let r = fs(2, 128);
        for rep in [
            Representation::Nodal,
            Representation::Polynomial { degree: 10 },
        ] {
            let next = step(&r, &Potential::zero(), 1e-3, rep).unwrap();
            assert!(next.values(r.config().grid()).max_abs() < 1e-14);
        }
    }

    #[test]
    fn chebyshev_mean_matches_quadrature() {
        let g = Grid::new(256).unwrap();
        let p = RadialPotential::from_monomial(&[0.3, -1.0, 0.5, 2.0, -0.7]);
        let exact = simpson(&p.profile(&g), &g).unwrap();
        assert!((chebyshev_mean(p.chebyshev()) - exact).abs() < 1e-9);
    }

    #[test]
    fn fit_reproduces_polynomials() {
        let g = Grid::new(128).unwrap();
        let p = RadialPotential::from_monomial(&[0.1, 0.2, -0.3, 0.05]);
        let fit = PolynomialFit::new(&g, 8).unwrap().fit(&p.profile(&g));
        assert!(fit.profile(&g).max_abs_diff(&p.profile(&g)) < 1e-13);
    }

    #[test]
    fn step_is_first_order_consistent() {
        // the RK4 step deviates from forward Euler by O(dt^2)
        let r = fs(1, 256);
        let g = r.config().grid();
        let phi = Potential::monomial(&[0.0, 0.02, -0.01]);
        let rep = Representation::Polynomial { degree: 12 };
        let v = crate::functionals::flow_velocity(&r, &phi).unwrap();
        let defect = |dt: f64| {
            let next = step(&r, &phi, dt, rep).unwrap().values(g);
            let euler = phi.values(g).zip_map(&v, |p, w| p + dt * w);
            next.max_abs_diff(&euler)
        };
        let ratio = defect(2e-3) / defect(1e-3);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn oversized_step_is_rejected_then_recovers() {
        let r = fs(1, 128);
        let steep = Potential::monomial(&[0.0, -1.9, 0.0]);
        let rep = Representation::Polynomial { degree: 10 };
        let mut dt = 2.0;
        let mut halvings = 0;
        loop {
            match step(&r, &steep, dt, rep) {
                Ok(_) => break,
                Err(Error::StepRejected { .. }) => {
                    dt /= 2.0;
                    halvings += 1;
                }
                Err(e) => panic!("{e}"),
            }
            assert!(halvings < 40);
        }
        assert!(halvings > 0);
    }

    #[test]
    fn stationary_run_from_background() {
        let r = fs(1, 64);
        let mut cfg = FlowConfig::new(Potential::zero(), 1.0, 64);
        cfg.representation = Representation::Polynomial { degree: 8 };
        let trace = run(&r, &cfg).unwrap();
        for rec in &trace.records {
            assert!(rec.nu.abs() < 1e-12 && rec.e1.abs() < 1e-12);
        }
        assert!(
            trace
                .final_state
                .potential()
                .values(r.config().grid())
                .max_abs()
                < 1e-10
        );
    }

    #[test]
    fn short_polynomial_flow_keeps_theorem_invariants() {
        let r = fs(1, 256);
        let mut cfg = FlowConfig::new(Potential::monomial(&[0.0, 0.2]), 1.0, 256);
        cfg.representation = Representation::Polynomial { degree: 14 };
        let trace = run(&r, &cfg).unwrap();
        let c = c_omega_estimate(&r).unwrap();
        assert!(trace.max_nu_increase() <= 1e-8);
        assert!(trace.max_residual_deviation(c) <= 1e-5);
        assert!(trace.min_inequality_margin(c) >= -1e-8);
        let ts: Vec<f64> = trace.records.iter().map(|r| r.t).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*ts.last().unwrap(), 1.0);
    }

    #[test]
    fn short_nodal_flow() {
        let r = fs(1, 128);
        let mut cfg = FlowConfig::new(Potential::monomial(&[0.0, 0.2]), 0.2, 128);
        cfg.record_every = 200;
        let trace = run(&r, &cfg).unwrap();
        let c = c_omega_estimate(&r).unwrap();
        assert!(
            trace.max_nu_increase() <= 1e-8,
            "{}",
            trace.max_nu_increase()
        );
        assert!(trace.max_residual_deviation(c) <= 1e-5);
        assert!(trace
            .records
            .iter()
            .all(|r| r.min_a_hat > 0.0 && r.min_b_hat > 0.0));
    }
}
