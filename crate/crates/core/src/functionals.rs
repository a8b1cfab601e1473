//! Energy functionals of the canonical class.
//!
//! All functionals are taken relative to a [`Reference`] metric `ω` and
//! evaluated on a potential `φ` with `ω_φ = ω + i∂∂̄φ > 0`:
//!
//! * `J`, the generalized energy, in both its gradient and its mixed-volume form;
//! * `ν`, the K-energy, in the form `⨏(log(ω_φ^n/ω^n) - h_ω) ω_φ^n + Σ a_k/(n+1) ⨏φ ω^k∧ω_φ^{n-k} + C_0`;
//! * `E_1`, with `(Ric(ω_φ) + ω)∧ω_φ^{n-1}` in the first term, coefficients `b_k`
//!   and the constant `C_1`.
//!
//! Along the potential flow `φ̇ = v(φ)` these satisfy
//! `E_1 = 2ν + ⨏ i∂v∧∂̄v∧ω_φ^{n-1} + C_ω`; [`identity_residual`] measures the
//! left-over `C_ω` at an arbitrary `φ`.

use crate::calculus::{cumulative_integral, integrate_ds, Profile};
use crate::error::{Error, Result};
use crate::geometry::{
    average, background, gradient_pairing, make_state, wedge_density, ManifoldConfig, MetricState,
    RadialForm,
};
use crate::potential::Potential;

/// Endpoint tolerance for `B_R - B` when solving for `h_ω`.
pub const REFERENCE_ENDPOINT_TOLERANCE: f64 = 1e-8;

/// Relative tolerance of the agreement check between the two `J` expressions.
pub const J_AGREEMENT_TOLERANCE: f64 = 1e-6;

/// Coefficients `a_k` (K-energy) and `b_k` (`E_1`), both of length `n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl EnergyCoefficients {
    /// `a_0 = n, a_k = -1`; `b_0 = b_1 = n - 1, b_k = -2`.
    pub fn canonical(n: usize) -> Self {
        let nf = n as f64;
        let a = (0..=n).map(|k| if k == 0 { nf } else { -1.0 }).collect();
        let b = (0..=n)
            .map(|k| if k <= 1 { nf - 1.0 } else { -2.0 })
            .collect();
        Self { a, b }
    }

    /// Perturbs `b_1`; used by mutation fixtures.
    pub fn with_b1_shift(mut self, delta: f64) -> Self {
        self.b[1] += delta;
        self
    }
}

/// The Ricci potential `h_ω`: `Ric(ω) = ω + i∂∂̄h` with `⨏(e^h - 1) ω^n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciPotential {
    pub h: Profile,
    /// `dh/dx`, known in closed form from the metric.
    pub slope: Profile,
    /// Additive constant fixed by the exponential normalization.
    pub normalization: f64,
}

impl RicciPotential {
    /// Adds a constant to `h` without renormalizing.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            h: self.h.map(|v| v + delta),
            slope: self.slope.clone(),
            normalization: self.normalization + delta,
        }
    }
}

/// Integrates `dh/dx = (B_R - B) / (x(1-x)) = -(ψ' + G)` outward from
/// `x = 1/2` and fixes the constant in closed form.
pub fn ricci_potential(reference: &MetricState) -> Result<RicciPotential> {
    let g = reference.grid();
    let n = g.size();
    let diff = &reference.ricci().b - &reference.form().b;
    let scale = 1.0 + reference.form().b.max_abs();
    let defect = diff[0].abs().max(diff[n].abs());
    if defect > REFERENCE_ENDPOINT_TOLERANCE * scale {
        return Err(Error::NonAdmissibleReference { defect });
    }
    let slope = -&(reference.log_density_slope() + &reference.jet().d1);
    let running = cumulative_integral(&slope, g)?;
    let mid = running[n / 2];
    let raw = running.map(|v| v - mid);

    let volume = reference.volume_density();
    let total = integrate_ds(&volume, g)?;
    let weighted = integrate_ds(&raw.zip_map(&volume, |h, w| h.exp() * w), g)?;
    let c = (total / weighted).ln();
    Ok(RicciPotential {
        h: raw.map(|v| v + c),
        slope,
        normalization: c,
    })
}

/// A reference metric together with its Ricci potential and the constants
/// `C_0 = ⨏ h ω^n` and `C_1 = ⨏ h (Ric(ω) + ω)∧ω^{n-1}`.
#[derive(Debug, Clone)]
pub struct Reference {
    state: MetricState,
    ricci_potential: RicciPotential,
    coefficients: EnergyCoefficients,
    c0: f64,
    c1: f64,
}

impl Reference {
    pub fn new(state: MetricState) -> Result<Self> {
        let h = ricci_potential(&state)?;
        let coefficients = EnergyCoefficients::canonical(state.dimension());
        Self::assemble(state, h, coefficients)
    }

    pub fn background(config: &ManifoldConfig) -> Result<Self> {
        Self::new(background(config))
    }

    /// `ω_FS + i∂∂̄ψ` as a reference.
    pub fn from_potential(config: &ManifoldConfig, psi: &Potential) -> Result<Self> {
        Self::new(make_state(config, psi)?)
    }

    fn assemble(
        state: MetricState,
        ricci_potential: RicciPotential,
        coefficients: EnergyCoefficients,
    ) -> Result<Self> {
        let n = state.dimension();
        if coefficients.a.len() != n + 1 {
            return Err(Error::CoefficientLength {
                expected: n + 1,
                found: coefficients.a.len(),
            });
        }
        if coefficients.b.len() != n + 1 {
            return Err(Error::CoefficientLength {
                expected: n + 1,
                found: coefficients.b.len(),
            });
        }
        let config = state.config();
        let h = &ricci_potential.h;
        let c0 = average(&(h * &state.volume_density()), config)?;
        let ric_plus = state.ricci().add(state.form());
        let mixed = wedge_density(&[(&ric_plus, 1), (state.form(), n - 1)], n)?;
        let c1 = average(&(h * &mixed), config)?;
        Ok(Self {
            state,
            ricci_potential,
            coefficients,
            c0,
            c1,
        })
    }

    pub fn with_coefficients(self, coefficients: EnergyCoefficients) -> Result<Self> {
        Self::assemble(self.state, self.ricci_potential, coefficients)
    }

    /// Replaces `h_ω` (and the constants built from it).
    pub fn with_ricci_potential(self, h: RicciPotential) -> Result<Self> {
        Self::assemble(self.state, h, self.coefficients)
    }

    pub fn state(&self) -> &MetricState {
        &self.state
    }

    pub fn config(&self) -> &ManifoldConfig {
        self.state.config()
    }

    pub fn dimension(&self) -> usize {
        self.state.dimension()
    }

    pub fn ricci_potential(&self) -> &RicciPotential {
        &self.ricci_potential
    }

    pub fn h(&self) -> &Profile {
        &self.ricci_potential.h
    }

    pub fn coefficients(&self) -> &EnergyCoefficients {
        &self.coefficients
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// The metric `ω_φ` as a state.
    pub fn state_of(&self, phi: &Potential) -> Result<MetricState> {
        let jet = phi.jet(self.config().grid())?;
        MetricState::from_jet(self.config(), self.state.jet() + &jet)
    }

    pub fn evaluate(&self, phi: &Potential) -> Result<Evaluation<'_>> {
        Evaluation::new(self, phi)
    }
}

/// All functionals at one potential, sharing the state `ω_φ`.
#[derive(Debug, Clone)]
pub struct Evaluation<'a> {
    reference: &'a Reference,
    phi: Profile,
    state: MetricState,
    /// `log(ω_φ^n / ω^n) - h_ω`.
    entropy: Profile,
}

impl<'a> Evaluation<'a> {
    pub fn new(reference: &'a Reference, phi: &Potential) -> Result<Self> {
        let state = reference.state_of(phi)?;
        Ok(Self::from_state(
            reference,
            phi.values(reference.config().grid()),
            state,
        ))
    }

    /// Uses a precomputed `ω_φ`; `phi` must be its potential relative to the
    /// reference.
    pub fn from_state(reference: &'a Reference, phi: Profile, state: MetricState) -> Self {
        let log_ratio = state.log_density() - reference.state.log_density();
        let entropy = &log_ratio - reference.h();
        Self {
            reference,
            phi,
            state,
            entropy,
        }
    }

    pub fn state(&self) -> &MetricState {
        &self.state
    }

    pub fn reference(&self) -> &'a Reference {
        self.reference
    }

    pub fn phi(&self) -> &Profile {
        &self.phi
    }

    fn config(&self) -> &ManifoldConfig {
        self.reference.config()
    }

    fn n(&self) -> usize {
        self.reference.dimension()
    }

    /// Density of `ω^k ∧ ω_φ^{n-k}`.
    pub fn mixed_density(&self, k: usize) -> Result<Profile> {
        let n = self.n();
        wedge_density(
            &[(self.reference.state.form(), k), (self.state.form(), n - k)],
            n,
        )
    }

    /// `Σ_k coeffs[k]/(n+1) ⨏ φ ω^k∧ω_φ^{n-k}`.
    pub fn mixed_sum(&self, coeffs: &[f64]) -> Result<f64> {
        let n = self.n();
        if coeffs.len() != n + 1 {
            return Err(Error::CoefficientLength {
                expected: n + 1,
                found: coeffs.len(),
            });
        }
        let mut total = 0.0;
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            total += c * average(&(&self.phi * &self.mixed_density(k)?), self.config())?;
        }
        Ok(total / (n + 1) as f64)
    }

    /// Both `J` expressions: the gradient sum and the mixed-volume form.
    pub fn j_expressions(&self) -> Result<(f64, f64)> {
        let n = self.n();
        let g = self.config().grid();
        let grad = gradient_pairing(&self.phi, &self.phi, g)?;
        let mut first = 0.0;
        for k in 0..n {
            let density = wedge_density(
                &[
                    (&grad, 1),
                    (self.reference.state.form(), k),
                    (self.state.form(), n - k - 1),
                ],
                n,
            )?;
            first += (k + 1) as f64 / (n + 1) as f64 * average(&density, self.config())?;
        }
        let ref_volume = self.reference.state.volume_density();
        let second = average(&(&self.phi * &ref_volume), self.config())?
            - self.mixed_sum(&vec![1.0; n + 1])?;
        Ok((first, second))
    }

    /// `J`, after checking that both expressions agree.
    pub fn j(&self) -> Result<f64> {
        let (first, second) = self.j_expressions()?;
        if (first - second).abs() > J_AGREEMENT_TOLERANCE * (1.0 + first.abs()) {
            return Err(Error::ExpressionMismatch { first, second });
        }
        Ok(first)
    }

    /// K-energy `ν_ω(φ)`.
    pub fn nu(&self) -> Result<f64> {
        let volume = self.state.volume_density();
        let entropy = average(&(&self.entropy * &volume), self.config())?;
        Ok(entropy + self.mixed_sum(&self.reference.coefficients.a)? + self.reference.c0)
    }

    /// `E_{1,ω}(φ)`.
    pub fn e1(&self) -> Result<f64> {
        let n = self.n();
        let ric_plus = self.state.ricci().add(self.reference.state.form());
        let density = wedge_density(&[(&ric_plus, 1), (self.state.form(), n - 1)], n)?;
        let first = average(&(&self.entropy * &density), self.config())?;
        Ok(first + self.mixed_sum(&self.reference.coefficients.b)? + self.reference.c1)
    }

    /// Flow velocity `v = log(ω_φ^n/ω^n) + φ - h_ω`.
    pub fn velocity(&self) -> Profile {
        &self.entropy + &self.phi
    }

    /// `dv/dx` of the flow velocity, from the closed-form slopes.
    pub fn velocity_slope(&self) -> Profile {
        let reference = &self.reference.state;
        let log_ratio = self.state.log_density_slope() - reference.log_density_slope();
        let phi = &self.state.jet().d1 - &reference.jet().d1;
        &(&log_ratio + &phi) - &self.reference.ricci_potential.slope
    }

    /// `⨏ i∂v∧∂̄v∧ω_φ^{n-1}` with `v` the flow velocity.
    pub fn dirichlet(&self) -> Result<f64> {
        dirichlet_from_slope(&self.state, &self.velocity_slope())
    }

    /// `E_1 - 2ν - ⨏ i∂v∧∂̄v∧ω_φ^{n-1}`.
    pub fn residual(&self) -> Result<f64> {
        Ok(self.e1()? - 2.0 * self.nu()? - self.dirichlet()?)
    }

    pub fn report(&self) -> Result<FunctionalReport> {
        let (j, j_second) = self.j_expressions()?;
        let nu = self.nu()?;
        let e1 = self.e1()?;
        let dirichlet = self.dirichlet()?;
        Ok(FunctionalReport {
            j,
            j_second,
            nu,
            e1,
            dirichlet,
            residual: e1 - 2.0 * nu - dirichlet,
            c0: self.reference.c0,
            c1: self.reference.c1,
            futaki: futaki(self.reference)?,
        })
    }
}

/// Values of all functionals at one potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub j: f64,
    pub j_second: f64,
    pub nu: f64,
    pub e1: f64,
    pub dirichlet: f64,
    pub residual: f64,
    pub c0: f64,
    pub c1: f64,
    pub futaki: f64,
}

pub fn j_energy(reference: &Reference, phi: &Potential) -> Result<f64> {
    reference.evaluate(phi)?.j()
}

pub fn k_energy(reference: &Reference, phi: &Potential) -> Result<f64> {
    reference.evaluate(phi)?.nu()
}

pub fn e1_energy(reference: &Reference, phi: &Potential) -> Result<f64> {
    reference.evaluate(phi)?.e1()
}

pub fn flow_velocity(reference: &Reference, phi: &Potential) -> Result<Profile> {
    Ok(reference.evaluate(phi)?.velocity())
}

pub fn identity_residual(reference: &Reference, phi: &Potential) -> Result<f64> {
    reference.evaluate(phi)?.residual()
}

pub fn mixed_sum(reference: &Reference, phi: &Potential, coeffs: &[f64]) -> Result<f64> {
    reference.evaluate(phi)?.mixed_sum(coeffs)
}

/// `⨏ (D_s v)^2 B^{n-1}` on the given state.
pub fn dirichlet(state: &MetricState, v: &Profile) -> Result<f64> {
    let n = state.dimension();
    let grad = gradient_pairing(v, v, state.grid())?;
    let density = wedge_density(&[(&grad, 1), (state.form(), n - 1)], n)?;
    average(&density, state.config())
}

/// Same as [`dirichlet`] with `dv/dx` supplied instead of `v`.
pub fn dirichlet_from_slope(state: &MetricState, v_x: &Profile) -> Result<f64> {
    let n = state.dimension();
    let g = state.grid();
    let ds = v_x.zip_map(&g.moment_weight(), |d, w| d * w);
    let grad = RadialForm::new(&ds * &ds, Profile::zeros(g.len()));
    let density = wedge_density(&[(&grad, 1), (state.form(), n - 1)], n)?;
    average(&density, state.config())
}

/// Futaki invariant on the radial generator `Σ z_i ∂/∂z_i`, for which
/// `ξ.h = D_s h`.
pub fn futaki(reference: &Reference) -> Result<f64> {
    let g = reference.config().grid();
    let dh = reference
        .ricci_potential
        .slope
        .zip_map(&g.moment_weight(), |d, w| d * w);
    average(
        &(&dh * &reference.state.volume_density()),
        reference.config(),
    )
}

/// `ω_ψ` promoted to a reference, for two-argument functionals.
pub fn re_reference(old: &Reference, psi: &Potential) -> Result<Reference> {
    let state = old.state_of(psi)?;
    let h = ricci_potential(&state)?;
    Reference::assemble(state, h, old.coefficients.clone())
}

/// The form `Ric(ω) - ω` that `i∂∂̄h_ω` should reproduce.
pub fn ricci_defect(state: &MetricState) -> RadialForm {
    state.ricci().sub(state.form())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::d_ds;
    use crate::geometry::ManifoldConfig;

    fn config(n: usize, size: usize) -> ManifoldConfig {
        ManifoldConfig::build(n, size).unwrap()
    }

    fn non_einstein(c: &ManifoldConfig) -> Reference {
        Reference::from_potential(c, &Potential::monomial(&[0.0, 0.3, -0.2, 0.1])).unwrap()
    }

    #[test]
    fn canonical_coefficients() {
        let c = EnergyCoefficients::canonical(3);
        assert_eq!(c.a, vec![3.0, -1.0, -1.0, -1.0]);
        assert_eq!(c.b, vec![2.0, 2.0, -2.0, -2.0]);
        let c = EnergyCoefficients::canonical(1);
        assert_eq!(c.b, vec![0.0, 0.0]);
        for n in 1..=3 {
            let c = EnergyCoefficients::canonical(n);
            assert_eq!(c.a.iter().sum::<f64>(), 0.0);
            assert_eq!(c.b.iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn ricci_potential_of_fubini_study_vanishes() {
        for n in 1..=3 {
            let r = Reference::background(&config(n, 256)).unwrap();
            assert!(r.h().max_abs() <= 1e-10);
            assert!(r.ricci_potential().normalization.abs() <= 1e-10);
        }
    }

    #[test]
    fn ricci_potential_defining_conditions() {
        for n in 1..=3 {
            let c = config(n, 1024);
            let r = non_einstein(&c);
            let g = c.grid();
            let dh = d_ds(r.h(), g).unwrap();
            let target = &r.state().ricci().b - &r.state().form().b;
            assert!(dh.max_abs_diff(&target) <= 1e-6, "n = {n}");
            let norm = average(
                &r.h()
                    .zip_map(&r.state().volume_density(), |h, w| (h.exp() - 1.0) * w),
                &c,
            )
            .unwrap();
            assert!(norm.abs() <= 1e-10, "n = {n}: {norm:e}");
        }
    }

    #[test]
    fn ricci_potential_matches_closed_form() {
        // h = -ψ - log(ω_ψ^n / ω_FS^n) + const
        let c = config(2, 512);
        let psi = Potential::monomial(&[0.0, 0.3, -0.2, 0.1]);
        let r = Reference::from_potential(&c, &psi).unwrap();
        let closed = &(-&psi.values(c.grid())) - r.state().log_density();
        let diff = r.h() - &closed;
        let spread = diff.max() - diff.min();
        assert!(spread < 1e-9, "spread {spread:e}");
    }

    #[test]
    fn j_closed_form_on_linear_potentials() {
        let c = config(1, 1024);
        let r = Reference::background(&c).unwrap();
        for eps in [0.1, 0.3, -0.2] {
            let j = j_energy(&r, &Potential::monomial(&[0.0, eps])).unwrap();
            assert!((j - eps * eps / 24.0).abs() <= 1e-7, "eps {eps}: {j}");
        }
    }

    #[test]
    fn functionals_vanish_at_zero_and_constants() {
        for n in 1..=3 {
            let c = config(n, 256);
            for r in [Reference::background(&c).unwrap(), non_einstein(&c)] {
                for phi in [Potential::zero(), Potential::constant(0.7)] {
                    let e = r.evaluate(&phi).unwrap();
                    let (j1, j2) = e.j_expressions().unwrap();
                    assert!(j1.abs() < 1e-12 && j2.abs() < 1e-12);
                    assert!(e.nu().unwrap().abs() < 1e-10, "n = {n}");
                    assert!(e.e1().unwrap().abs() < 1e-10, "n = {n}");
                }
            }
        }
    }

    #[test]
    fn mixed_sums_with_zero_sum_coefficients_vanish_on_constants() {
        let c = config(3, 128);
        let r = non_einstein(&c);
        let coeffs = EnergyCoefficients::canonical(3);
        let phi = Potential::constant(2.0);
        assert!(mixed_sum(&r, &phi, &coeffs.a).unwrap().abs() < 1e-12);
        assert!(mixed_sum(&r, &phi, &coeffs.b).unwrap().abs() < 1e-12);
        assert_eq!(
            mixed_sum(&r, &phi, &[1.0, 2.0]).unwrap_err(),
            Error::CoefficientLength {
                expected: 4,
                found: 2
            }
        );
    }

    #[test]
    fn velocity_at_fixed_point() {
        let c = config(2, 128);
        let r = Reference::background(&c).unwrap();
        assert!(flow_velocity(&r, &Potential::zero()).unwrap().max_abs() < 1e-12);
        let v = flow_velocity(&r, &Potential::constant(0.4)).unwrap();
        assert!(v.map(|x| x - 0.4).max_abs() < 1e-12);
    }

    #[test]
    fn velocity_generates_the_ricci_defect() {
        // i∂∂̄v = ω_φ - Ric(ω_φ)
        let c = config(2, 1024);
        let r = non_einstein(&c);
        let e = r.evaluate(&Potential::monomial(&[0.0, -0.1, 0.2])).unwrap();
        let dv = d_ds(&e.velocity(), c.grid()).unwrap();
        let target = &e.state().form().b - &e.state().ricci().b;
        assert!(dv.max_abs_diff(&target) <= 1e-6);
    }

    #[test]
    fn closed_form_velocity_slope() {
        let c = config(2, 1024);
        let r = non_einstein(&c);
        let e = r
            .evaluate(&Potential::monomial(&[0.0, -0.1, 0.2, 0.05]))
            .unwrap();
        let stencil = crate::calculus::d_dx(&e.velocity(), c.grid()).unwrap();
        assert!(e.velocity_slope().max_abs_diff(&stencil) <= 1e-8);
        let from_values = dirichlet(e.state(), &e.velocity()).unwrap();
        assert!((e.dirichlet().unwrap() - from_values).abs() <= 1e-10);
    }

    #[test]
    fn dirichlet_values() {
        let c = config(1, 1024);
        let bg = background(&c);
        let v = c.grid().profile(|x| x);
        // ⨏ (x(1-x))^2 ds = (1/2) ∫_0^1 x(1-x) dx
        assert!((dirichlet(&bg, &v).unwrap() - 1.0 / 12.0).abs() < 1e-10);
        let k = Profile::constant(c.grid().len(), 5.0);
        assert!(dirichlet(&bg, &k).unwrap().abs() < 1e-20);
    }

    #[test]
    fn residual_is_the_reference_constant() {
        for n in 1..=3 {
            let c = config(n, 1024);
            let r = non_einstein(&c);
            let at_zero = identity_residual(&r, &Potential::zero()).unwrap();
            // C_ω = C_1 - 2 C_0 = -⨏ i∂h∧∂̄h∧ω^{n-1}
            assert!((at_zero - (r.c1() - 2.0 * r.c0())).abs() < 1e-8, "n = {n}");
            let dh = dirichlet(r.state(), r.h()).unwrap();
            assert!((at_zero + dh).abs() < 1e-8);
            assert!(at_zero < 0.0);
            let other =
                identity_residual(&r, &Potential::monomial(&[0.0, 0.2, -0.15, 0.05])).unwrap();
            assert!(
                (other - at_zero).abs() < 1e-8,
                "n = {n}: {other} vs {at_zero}"
            );
        }
        let c = config(2, 256);
        let r = Reference::background(&c).unwrap();
        assert!(identity_residual(&r, &Potential::zero()).unwrap().abs() < 1e-14);
    }

    #[test]
    fn futaki_vanishes_and_is_reference_independent() {
        let c = config(2, 1024);
        let bg = Reference::background(&c).unwrap();
        assert_eq!(futaki(&bg).unwrap(), 0.0);
        let a = futaki(&non_einstein(&c)).unwrap();
        let b = futaki(
            &Reference::from_potential(&c, &Potential::monomial(&[0.0, -0.2, 0.3])).unwrap(),
        )
        .unwrap();
        assert!(a.abs() < 1e-6 && b.abs() < 1e-6);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn re_reference_with_zero_is_identity() {
        let c = config(2, 256);
        let r = non_einstein(&c);
        let same = re_reference(&r, &Potential::zero()).unwrap();
        let phi = Potential::monomial(&[0.0, 0.1, 0.05]);
        let a = r.evaluate(&phi).unwrap().report().unwrap();
        let b = same.evaluate(&phi).unwrap().report().unwrap();
        assert!((a.nu - b.nu).abs() < 1e-14);
        assert!((a.e1 - b.e1).abs() < 1e-14);
        assert!((a.j - b.j).abs() < 1e-14);
    }

    #[test]
    fn k_energy_cocycle() {
        let c = config(2, 512);
        let r = non_einstein(&c);
        let p1 = Potential::monomial(&[0.0, 0.1, -0.05]);
        let p2 = Potential::monomial(&[0.0, -0.1, 0.2, 0.05]);
        let direct = k_energy(&r, &p2).unwrap();
        let mid = re_reference(&r, &p1).unwrap();
        let diff = p2.axpy(-1.0, &p1, c.grid()).unwrap();
        let split = k_energy(&r, &p1).unwrap() + k_energy(&mid, &diff).unwrap();
        assert!((direct - split).abs() < 1e-6 * (1.0 + direct.abs()));
    }

    #[test]
    fn inadmissible_potential_is_rejected() {
        let c = config(1, 64);
        let r = Reference::background(&c).unwrap();
        assert!(matches!(
            k_energy(&r, &Potential::monomial(&[0.0, -10.0])),
            Err(Error::NotInPotentialSpace { .. })
        ));
    }
}
