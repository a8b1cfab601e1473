//! Rotation-invariant Kähler geometry on CP^n.
//!
//! A `U(n+1)`-invariant real (1,1)-form on the affine chart is
//! `A · i∂s∧∂̄s + B · i∂∂̄s` with `s = log|z|^2`. The first factor squares to
//! zero and `(i∂∂̄s)^n = 0`, so an n-fold wedge of such forms has density
//! `Σ_j A_j Π_{k≠j} B_k` against a fixed top form, and every integral on the
//! manifold becomes `c_n ∫ (...) ds`. The constant `c_n` cancels in averages
//! and is never materialized.
//!
//! Metrics are written relative to the Fubini–Study form normalized so that
//! `Ric(ω) = ω`, whose potential satisfies `D_s Φ = (n+1) x`. A total potential
//! `φ(x)` gives `B = x q` and `A = x(1-x) r` with
//!
//! ```text
//! q = (n+1) + (1-x) φ',    r = dB/dx = (n+1) + (1-2x) φ' + x(1-x) φ''.
//! ```
//!
//! All curvature quantities are written through `q` and `r`, which stay
//! regular at both endpoints.

use std::sync::Arc;

use crate::calculus::{d_ds, d_dx, integrate_ds, Grid, Profile};
use crate::error::{Error, Result};
use crate::potential::{Jet, Potential};

/// Complex dimension and discretization.
#[derive(Debug, Clone)]
pub struct ManifoldConfig {
    dimension: usize,
    grid: Arc<Grid>,
}

impl ManifoldConfig {
    pub fn new(dimension: usize, grid: Grid) -> Result<Self> {
        Self::with_shared_grid(dimension, Arc::new(grid))
    }

    pub fn with_shared_grid(dimension: usize, grid: Arc<Grid>) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::UnsupportedDimension(dimension));
        }
        Ok(Self { dimension, grid })
    }

    /// Shorthand for `new(dimension, Grid::new(size)?)`.
    pub fn build(dimension: usize, size: usize) -> Result<Self> {
        Self::new(dimension, Grid::new(size)?)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `∫ ω^n ds` for any metric in the class: `(n+1)^n`.
    pub fn class_volume(&self) -> f64 {
        ((self.dimension + 1) as f64).powi(self.dimension as i32)
    }
}

/// Coefficient pair of `A · i∂s∧∂̄s + B · i∂∂̄s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialForm {
    pub a: Profile,
    pub b: Profile,
}

impl RadialForm {
    pub fn new(a: Profile, b: Profile) -> Self {
        assert_eq!(a.len(), b.len(), "form components differ in length");
        Self { a, b }
    }

    pub fn zero(len: usize) -> Self {
        Self::new(Profile::zeros(len), Profile::zeros(len))
    }

    /// `i∂∂̄f` for a radial function: `(D_s^2 f, D_s f)`.
    pub fn ddbar(f: &Profile, g: &Grid) -> Result<Self> {
        let b = d_ds(f, g)?;
        let a = d_ds(&b, g)?;
        Ok(Self::new(a, b))
    }

    pub fn add(&self, other: &RadialForm) -> RadialForm {
        RadialForm::new(&self.a + &other.a, &self.b + &other.b)
    }

    pub fn sub(&self, other: &RadialForm) -> RadialForm {
        RadialForm::new(&self.a - &other.a, &self.b - &other.b)
    }

    pub fn scale(&self, factor: f64) -> RadialForm {
        RadialForm::new(self.a.scale(factor), self.b.scale(factor))
    }
}

/// Density of the n-fold wedge product of a multiset of radial forms.
pub fn wedge_density(forms: &[(&RadialForm, usize)], degree: usize) -> Result<Profile> {
    let total: usize = forms.iter().map(|(_, m)| m).sum();
    if total != degree {
        return Err(Error::DegreeMismatch {
            expected: degree,
            found: total,
        });
    }
    let factors: Vec<&RadialForm> = forms
        .iter()
        .flat_map(|(f, m)| std::iter::repeat_n(*f, *m))
        .collect();
    let len = forms
        .iter()
        .map(|(f, _)| f.a.len())
        .next()
        .unwrap_or_default();
    if factors.is_empty() {
        return Ok(Profile::zeros(len));
    }
    let values = (0..len)
        .map(|i| {
            (0..factors.len())
                .map(|j| {
                    factors
                        .iter()
                        .enumerate()
                        .map(|(k, f)| if k == j { f.a[i] } else { f.b[i] })
                        .product::<f64>()
                })
                .sum()
        })
        .collect();
    Ok(Profile::from_vec(values))
}

/// `⨏ density = ∫ density ds / (n+1)^n`.
pub fn average(density: &Profile, config: &ManifoldConfig) -> Result<f64> {
    Ok(integrate_ds(density, config.grid())? / config.class_volume())
}

/// `i∂f ∧ ∂̄g` for radial functions: only the `i∂s∧∂̄s` component survives.
pub fn gradient_pairing(f: &Profile, g: &Profile, grid: &Grid) -> Result<RadialForm> {
    let df = d_ds(f, grid)?;
    let dg = d_ds(g, grid)?;
    Ok(RadialForm::new(&df * &dg, Profile::zeros(grid.len())))
}

/// A positive metric `ω + i∂∂̄φ` with cached curvature data.
#[derive(Debug, Clone)]
pub struct MetricState {
    config: ManifoldConfig,
    jet: Jet,
    form: RadialForm,
    q: Profile,
    r: Profile,
    a_hat: Profile,
    b_hat: Profile,
    log_density: Profile,
    ricci: RadialForm,
    /// `dB_R/dx`, kept for the regular form of the scalar curvature.
    ricci_slope: Profile,
    /// `(n+1) - (1-x) G`, equal to `B_R / x`.
    ricci_reduced: Profile,
    /// `G = d/dx log_density`.
    log_slope: Profile,
}

/// The Fubini–Study state.
pub fn background(config: &ManifoldConfig) -> MetricState {
    MetricState::from_jet(config, Jet::zero(config.grid().len()))
        .expect("the Fubini–Study metric is positive")
}

/// `ω_φ` for a potential relative to the Fubini–Study background.
pub fn make_state(config: &ManifoldConfig, phi: &Potential) -> Result<MetricState> {
    MetricState::from_jet(config, phi.jet(config.grid())?)
}

impl MetricState {
    /// Builds the state from the jet of the total potential relative to the
    /// Fubini–Study background; rejects non-positive metrics.
    pub fn from_jet(config: &ManifoldConfig, jet: Jet) -> Result<Self> {
        let g = config.grid();
        if jet.len() != g.len() {
            return Err(Error::ShapeMismatch {
                expected: g.len(),
                found: jet.len(),
            });
        }
        for p in [&jet.value, &jet.d1, &jet.d2, &jet.d3, &jet.d4] {
            if let Some(node) = p.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { node });
            }
        }
        let n = config.dimension() as f64;
        let np1 = n + 1.0;
        let len = g.len();
        let xs = g.nodes();

        let mut q = vec![0.0; len];
        let mut r = vec![0.0; len];
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        let mut a_hat = vec![0.0; len];
        let mut b_hat = vec![0.0; len];
        let mut log_density = vec![0.0; len];
        let mut a_r = vec![0.0; len];
        let mut b_r = vec![0.0; len];
        let mut slope = vec![0.0; len];
        let mut reduced = vec![0.0; len];
        let mut log_slope = vec![0.0; len];

        for i in 0..len {
            let x = xs[i];
            let w = x * (1.0 - x);
            let (p1, p2, p3, p4) = (jet.d1[i], jet.d2[i], jet.d3[i], jet.d4[i]);

            let qi = np1 + (1.0 - x) * p1;
            let dq = -p1 + (1.0 - x) * p2;
            let ddq = -2.0 * p2 + (1.0 - x) * p3;
            let ri = np1 + (1.0 - 2.0 * x) * p1 + w * p2;
            let dr = -2.0 * p1 + 2.0 * (1.0 - 2.0 * x) * p2 + w * p3;
            let ddr = -6.0 * p2 + 3.0 * (1.0 - 2.0 * x) * p3 + w * p4;

            q[i] = qi;
            r[i] = ri;
            b[i] = x * qi;
            a[i] = w * ri;
            a_hat[i] = ri / np1;
            b_hat[i] = qi / np1;
            if a_hat[i] <= 0.0 || b_hat[i] <= 0.0 {
                return Err(Error::NotInPotentialSpace {
                    node: i,
                    x,
                    a_hat: a_hat[i],
                    b_hat: b_hat[i],
                });
            }
            log_density[i] = a_hat[i].ln() + (n - 1.0) * b_hat[i].ln();

            // G = d/dx log(q^{n-1} r)
            let gi = (n - 1.0) * dq / qi + dr / ri;
            let dg =
                (n - 1.0) * (ddq * qi - dq * dq) / (qi * qi) + (ddr * ri - dr * dr) / (ri * ri);
            log_slope[i] = gi;
            reduced[i] = np1 - (1.0 - x) * gi;
            b_r[i] = x * reduced[i];
            slope[i] = np1 - (1.0 - 2.0 * x) * gi - w * dg;
            a_r[i] = w * slope[i];
        }

        Ok(Self {
            config: config.clone(),
            jet,
            form: RadialForm::new(Profile::from_vec(a), Profile::from_vec(b)),
            q: Profile::from_vec(q),
            r: Profile::from_vec(r),
            a_hat: Profile::from_vec(a_hat),
            b_hat: Profile::from_vec(b_hat),
            log_density: Profile::from_vec(log_density),
            ricci: RadialForm::new(Profile::from_vec(a_r), Profile::from_vec(b_r)),
            ricci_slope: Profile::from_vec(slope),
            ricci_reduced: Profile::from_vec(reduced),
            log_slope: Profile::from_vec(log_slope),
        })
    }

    pub fn config(&self) -> &ManifoldConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.config.dimension()
    }

    pub fn grid(&self) -> &Grid {
        self.config.grid()
    }

    /// Jet of the total potential relative to the Fubini–Study background.
    pub fn jet(&self) -> &Jet {
        &self.jet
    }

    pub fn form(&self) -> &RadialForm {
        &self.form
    }

    pub fn a_hat(&self) -> &Profile {
        &self.a_hat
    }

    pub fn b_hat(&self) -> &Profile {
        &self.b_hat
    }

    /// `log(ω_φ^n / ω_FS^n) = log Â + (n-1) log B̂`.
    pub fn log_density(&self) -> &Profile {
        &self.log_density
    }

    /// Exact `x`-derivative of [`log_density`](Self::log_density).
    pub fn log_density_slope(&self) -> &Profile {
        &self.log_slope
    }

    pub fn ricci(&self) -> &RadialForm {
        &self.ricci
    }

    /// Density of `ω_φ^n`: `n A B^{n-1}`.
    pub fn volume_density(&self) -> Profile {
        let n = self.dimension();
        wedge_density(&[(&self.form, n)], n).expect("degree matches")
    }

    /// `Scal = 2 [A_R/A + (n-1) B_R/B]`, evaluated through the regular
    /// quotients `(dB_R/dx)/r` and `(B_R/x)/q`.
    pub fn scalar_curvature(&self) -> Profile {
        let n = self.dimension() as f64;
        let first = self.ricci_slope.zip_map(&self.r, |s, r| s / r);
        let second = self.ricci_reduced.zip_map(&self.q, |s, q| s / q);
        first.zip_map(&second, |a, b| 2.0 * (a + (n - 1.0) * b))
    }

    /// `Δf = Trace(i∂∂̄f) = 2 [D_s^2 f / A + (n-1) D_s f / B]`.
    pub fn laplacian(&self, f: &Profile) -> Result<Profile> {
        let g = self.grid();
        let n = self.dimension() as f64;
        let df = d_dx(f, g)?;
        let flux = df.zip_map(&g.moment_weight(), |d, w| d * w);
        let dflux = d_dx(&flux, g)?;
        let xs = g.nodes();
        let mut out = vec![0.0; g.len()];
        for i in 0..g.len() {
            // D_s f / B = (1-x) f' / q
            out[i] = 2.0 * (dflux[i] / self.r[i] + (n - 1.0) * (1.0 - xs[i]) * df[i] / self.q[i]);
        }
        Ok(Profile::from_vec(out))
    }

    /// [`laplacian`](Self::laplacian) from exact first and second derivatives.
    pub fn laplacian_of_jet(&self, jet: &Jet) -> Profile {
        let n = self.dimension() as f64;
        let xs = self.grid().nodes();
        let out = (0..xs.len())
            .map(|i| {
                let x = xs[i];
                let dflux = (1.0 - 2.0 * x) * jet.d1[i] + x * (1.0 - x) * jet.d2[i];
                2.0 * (dflux / self.r[i] + (n - 1.0) * (1.0 - x) * jet.d1[i] / self.q[i])
            })
            .collect();
        Profile::from_vec(out)
    }
}

pub fn ricci(state: &MetricState) -> &RadialForm {
    state.ricci()
}

pub fn scalar_curvature(state: &MetricState) -> Profile {
    state.scalar_curvature()
}

pub fn laplacian(state: &MetricState, f: &Profile) -> Result<Profile> {
    state.laplacian(f)
}
