//! Radial Kähler potentials and their derivative jets.
//!
//! Polynomial potentials are stored in the shifted Chebyshev basis
//! `T_k(2x - 1)`, so nodal values and all derivatives are evaluated exactly
//! (up to rounding) without finite differences. Nodal potentials, which the
//! flow produces, take their derivatives from the fourth-order stencils.

use std::ops::{Add, Sub};

use crate::calculus::{derivative, Grid, Profile};
use crate::error::{Error, Result};

/// Default polynomial degree for sampled potentials.
pub const DEFAULT_DEGREE: usize = 8;

/// A polynomial in `x` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    /// Coefficients of `T_k(2x - 1)`.
    chebyshev: Vec<f64>,
}

impl RadialPotential {
    pub fn zero() -> Self {
        Self {
            chebyshev: vec![0.0],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self { chebyshev: vec![c] }
    }

    /// Builds `Σ_k coeffs[k] x^k`.
    pub fn from_monomial(coeffs: &[f64]) -> Self {
        // Horner's scheme with multiplication by x = (1 + u)/2 carried out in
        // the Chebyshev basis: u T_k = (T_{k+1} + T_{|k-1|}) / 2.
        let mut acc = vec![0.0];
        for &a in coeffs.iter().rev() {
            let mut next = vec![0.0; acc.len() + 1];
            for (k, &c) in acc.iter().enumerate() {
                next[k] += 0.5 * c;
                if k == 0 {
                    next[1] += 0.5 * c;
                } else {
                    next[k + 1] += 0.25 * c;
                    next[k - 1] += 0.25 * c;
                }
            }
            next[0] += a;
            acc = next;
        }
        Self::from_chebyshev(acc)
    }

    pub fn from_chebyshev(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { chebyshev: coeffs }
    }

    pub fn chebyshev(&self) -> &[f64] {
        &self.chebyshev
    }

    pub fn degree(&self) -> usize {
        self.chebyshev.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.chebyshev, 2.0 * x - 1.0)
    }

    /// Derivative in `x`.
    pub fn derivative(&self) -> Self {
        let c = &self.chebyshev;
        let m = c.len() - 1;
        if m == 0 {
            return Self::zero();
        }
        let mut d = vec![0.0; m + 2];
        for k in (1..=m).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
        }
        d[0] *= 0.5;
        d.truncate(m);
        // d/dx = 2 d/du on the shifted interval
        Self::from_chebyshev(d.into_iter().map(|v| 2.0 * v).collect())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_chebyshev(self.chebyshev.iter().map(|c| c * factor).collect())
    }

    /// Adds `c` to the constant term.
    pub fn shift(&self, c: f64) -> Self {
        let mut coeffs = self.chebyshev.clone();
        coeffs[0] += c;
        Self::from_chebyshev(coeffs)
    }

    pub fn profile(&self, g: &Grid) -> Profile {
        g.profile(|x| self.eval(x))
    }

    /// Exact nodal jet up to the fourth derivative.
    pub fn jet(&self, g: &Grid) -> Jet {
        let d1 = self.derivative();
        let d2 = d1.derivative();
        let d3 = d2.derivative();
        let d4 = d3.derivative();
        Jet {
            value: self.profile(g),
            d1: d1.profile(g),
            d2: d2.profile(g),
            d3: d3.profile(g),
            d4: d4.profile(g),
        }
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let len = self.chebyshev.len().max(other.chebyshev.len());
        let at = |c: &[f64], k: usize| c.get(k).copied().unwrap_or(0.0);
        Self::from_chebyshev(
            (0..len)
                .map(|k| at(&self.chebyshev, k) + sign * at(&other.chebyshev, k))
                .collect(),
        )
    }
}

impl Add for &RadialPotential {
    type Output = RadialPotential;
    fn add(self, rhs: &RadialPotential) -> RadialPotential {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &RadialPotential {
    type Output = RadialPotential;
    fn sub(self, rhs: &RadialPotential) -> RadialPotential {
        self.combine(rhs, -1.0)
    }
}

fn clenshaw(c: &[f64], u: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * u * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + u * b1 - b2
}

/// Values of `T_k(2x - 1)` for `k = 0..=degree`.
pub fn chebyshev_basis(x: f64, degree: usize) -> Vec<f64> {
    let u = 2.0 * x - 1.0;
    let mut t = Vec::with_capacity(degree + 1);
    t.push(1.0);
    if degree >= 1 {
        t.push(u);
    }
    for k in 2..=degree {
        t.push(2.0 * u * t[k - 1] - t[k - 2]);
    }
    t
}

/// A potential either as an exact polynomial or as nodal samples.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Polynomial(RadialPotential),
    Nodal(Profile),
}

impl Potential {
    pub fn zero() -> Self {
        Self::Polynomial(RadialPotential::zero())
    }

    pub fn constant(c: f64) -> Self {
        Self::Polynomial(RadialPotential::constant(c))
    }

    pub fn monomial(coeffs: &[f64]) -> Self {
        Self::Polynomial(RadialPotential::from_monomial(coeffs))
    }

    pub fn values(&self, g: &Grid) -> Profile {
        match self {
            Self::Polynomial(p) => p.profile(g),
            Self::Nodal(v) => v.clone(),
        }
    }

    pub fn jet(&self, g: &Grid) -> Result<Jet> {
        match self {
            Self::Polynomial(p) => Ok(p.jet(g)),
            Self::Nodal(v) => Jet::from_nodal(v, g),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        match self {
            Self::Polynomial(p) => Self::Polynomial(p.scale(factor)),
            Self::Nodal(v) => Self::Nodal(v.scale(factor)),
        }
    }

    pub fn shift(&self, c: f64) -> Self {
        match self {
            Self::Polynomial(p) => Self::Polynomial(p.shift(c)),
            Self::Nodal(v) => Self::Nodal(v.map(|x| x + c)),
        }
    }

    /// `self + factor * other`; mixed kinds fall back to nodal samples.
    pub fn axpy(&self, factor: f64, other: &Potential, g: &Grid) -> Result<Potential> {
        match (self, other) {
            (Self::Polynomial(a), Self::Polynomial(b)) => {
                Ok(Self::Polynomial(a + &b.scale(factor)))
            }
            _ => {
                let a = self.values(g);
                let b = other.values(g);
                if a.len() != g.len() || b.len() != g.len() {
                    return Err(Error::ShapeMismatch {
                        expected: g.len(),
                        found: a.len().min(b.len()),
                    });
                }
                Ok(Self::Nodal(a.zip_map(&b, |x, y| x + factor * y)))
            }
        }
    }
}

impl From<RadialPotential> for Potential {
    fn from(p: RadialPotential) -> Self {
        Self::Polynomial(p)
    }
}

/// Nodal values of a potential and its first four `x`-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Profile,
    pub d1: Profile,
    pub d2: Profile,
    pub d3: Profile,
    pub d4: Profile,
}

impl Jet {
    pub fn zero(len: usize) -> Self {
        let z = Profile::zeros(len);
        Self {
            value: z.clone(),
            d1: z.clone(),
            d2: z.clone(),
            d3: z.clone(),
            d4: z,
        }
    }

    pub fn from_nodal(v: &Profile, g: &Grid) -> Result<Self> {
        Ok(Self {
            value: v.clone(),
            d1: derivative(v, g, 1)?,
            d2: derivative(v, g, 2)?,
            d3: derivative(v, g, 3)?,
            d4: derivative(v, g, 4)?,
        })
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// `self + factor * other`, derivative by derivative.
    pub fn axpy(&self, factor: f64, other: &Jet) -> Jet {
        let f = |a: &Profile, b: &Profile| a.zip_map(b, |x, y| x + factor * y);
        Jet {
            value: f(&self.value, &other.value),
            d1: f(&self.d1, &other.d1),
            d2: f(&self.d2, &other.d2),
            d3: f(&self.d3, &other.d3),
            d4: f(&self.d4, &other.d4),
        }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.axpy(1.0, rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_conversion_round_trips_values() {
        let coeffs = [0.3, -0.2, 0.15, 0.05, -0.1, 0.0, 0.07, -0.02, 0.01];
        let p = RadialPotential::from_monomial(&coeffs);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let direct: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * x.powi(k as i32))
                .sum();
            assert!((p.eval(x) - direct).abs() < 1e-15);
        }
        assert_eq!(p.degree(), 8);
    }

    #[test]
    fn derivatives_are_exact() {
        // p = x^4 - 2x^3 + x
        let p = RadialPotential::from_monomial(&[0.0, 1.0, 0.0, -2.0, 1.0]);
        let g = Grid::new(16).unwrap();
        let jet = p.jet(&g);
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((jet.d1[i] - (4.0 * x.powi(3) - 6.0 * x * x + 1.0)).abs() < 1e-13);
            assert!((jet.d2[i] - (12.0 * x * x - 12.0 * x)).abs() < 1e-12);
            assert!((jet.d3[i] - (24.0 * x - 12.0)).abs() < 1e-12);
            assert!((jet.d4[i] - 24.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_has_zero_derivative() {
        let p = RadialPotential::constant(2.5);
        assert_eq!(p.derivative(), RadialPotential::zero());
        assert_eq!(p.eval(0.3), 2.5);
    }

    #[test]
    fn basis_matches_clenshaw() {
        let c = vec![0.1, -0.4, 0.25, 0.3, -0.05];
        let p = RadialPotential::from_chebyshev(c.clone());
        let x = 0.37;
        let t = chebyshev_basis(x, 4);
        let direct: f64 = c.iter().zip(&t).map(|(a, b)| a * b).sum();
        assert!((p.eval(x) - direct).abs() < 1e-15);
    }

    #[test]
    fn nodal_jet_agrees_with_exact_jet() {
        let p = RadialPotential::from_monomial(&[0.0, 0.2, -0.1, 0.05]);
        let g = Grid::new(256).unwrap();
        let exact = p.jet(&g);
        let nodal = Jet::from_nodal(&p.profile(&g), &g).unwrap();
        assert!(exact.d1.max_abs_diff(&nodal.d1) < 1e-12);
        assert!(exact.d2.max_abs_diff(&nodal.d2) < 1e-9);
        assert!(exact.d3.max_abs_diff(&nodal.d3) < 1e-6);
    }

    #[test]
    fn arithmetic_mixes_kinds() {
        let g = Grid::new(32).unwrap();
        let a = Potential::monomial(&[1.0, 2.0]);
        let b = Potential::Nodal(g.profile(|x| x * x));
        let c = a.axpy(-1.0, &b, &g).unwrap();
        assert!(matches!(c, Potential::Nodal(_)));
        let v = c.values(&g);
        assert!((v[16] - (1.0 + 1.0 - 0.25)).abs() < 1e-15);
        let d = a.axpy(2.0, &a, &g).unwrap();
        assert!((d.values(&g)[32] - 9.0).abs() < 1e-14);
    }
}
