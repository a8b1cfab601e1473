//! One-dimensional calculus on the compactified radial coordinate.
//!
//! Radial functions on CP^n depend on `s = log|z|^2`. Every computation here
//! runs in the moment-type coordinate `x = e^s / (1 + e^s)`, which maps the
//! whole real line onto `[0, 1]`. In this chart `d/ds = x(1-x) d/dx` and
//! `ds = dx / (x(1-x))`, so the endpoint degeneracies are explicit and can be
//! resolved by one-sided stencils and extrapolation.

use std::ops::{Add, Index, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Smallest grid accepted by [`Grid::new`].
pub const MIN_GRID_SIZE: usize = 16;

/// Default bound on the extrapolated endpoint value of `f / (x(1-x))`.
pub const DEFAULT_ENDPOINT_BOUND: f64 = 1e8;

/// Finite-difference weights for one derivative order, already scaled by `1/dx^k`.
#[derive(Debug, Clone)]
struct Stencil {
    /// Symmetric interior weights for offsets `-half..=half`.
    interior: Vec<f64>,
    half: usize,
    /// For each boundary node `i < half`: (window start, weights).
    left: Vec<(usize, Vec<f64>)>,
    /// For each boundary node `i > size - half`, keyed by `size - i`.
    right: Vec<(usize, Vec<f64>)>,
}

impl Stencil {
    fn new(order: usize, size: usize, spacing: f64) -> Self {
        // Fourth-order accuracy: symmetric windows gain one order for even
        // derivatives, one-sided windows need `order + 4` points.
        let interior_width = if (order + 4) % 2 == 1 {
            order + 4
        } else {
            order + 3
        };
        let boundary_width = order + 4;
        let half = interior_width / 2;
        let scale = spacing.powi(order as i32);

        let offsets: Vec<f64> = (0..interior_width)
            .map(|j| j as f64 - half as f64)
            .collect();
        let interior = fornberg_weights(0.0, &offsets, order)
            .into_iter()
            .map(|w| w / scale)
            .collect();

        let window = |i: usize| -> (usize, Vec<f64>) {
            let start = i
                .saturating_sub(boundary_width / 2)
                .min(size + 1 - boundary_width);
            let nodes: Vec<f64> = (start..start + boundary_width).map(|j| j as f64).collect();
            let weights = fornberg_weights(i as f64, &nodes, order)
                .into_iter()
                .map(|w| w / scale)
                .collect();
            (start, weights)
        };
        let left = (0..half).map(window).collect();
        let right = (0..half).map(|k| window(size - k)).collect();

        Self {
            interior,
            half,
            left,
            right,
        }
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let size = f.len() - 1;
        let mut out = vec![0.0; f.len()];
        let dot = |start: usize, w: &[f64]| -> f64 {
            w.iter()
                .zip(&f[start..start + w.len()])
                .map(|(a, b)| a * b)
                .sum()
        };
        for (i, (start, w)) in self.left.iter().enumerate() {
            out[i] = dot(*start, w);
        }
        for (i, o) in out
            .iter_mut()
            .enumerate()
            .take(size - self.half + 1)
            .skip(self.half)
        {
            *o = dot(i - self.half, &self.interior);
        }
        for (k, (start, w)) in self.right.iter().enumerate() {
            out[size - k] = dot(*start, w);
        }
        out
    }
}

/// Finite-difference weights (Fornberg's recursion) for the `order`-th
/// derivative at `z` using the given nodes.
pub fn fornberg_weights(z: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Uniform grid on `[0, 1]` with `size + 1` nodes.
#[derive(Debug, Clone)]
pub struct Grid {
    size: usize,
    nodes: Vec<f64>,
    stencils: [Stencil; 4],
    endpoint_bound: f64,
}

impl Grid {
    pub fn new(size: usize) -> Result<Self> {
        if size < MIN_GRID_SIZE || !size.is_multiple_of(2) {
            return Err(Error::InvalidGrid(size));
        }
        let spacing = 1.0 / size as f64;
        let nodes = (0..=size).map(|i| i as f64 / size as f64).collect();
        let stencils = [1, 2, 3, 4].map(|k| Stencil::new(k, size, spacing));
        Ok(Self {
            size,
            nodes,
            stencils,
            endpoint_bound: DEFAULT_ENDPOINT_BOUND,
        })
    }

    /// Overrides the magnitude bound used by [`integrate_ds`] to flag
    /// non-admissible integrands.
    pub fn with_endpoint_bound(mut self, bound: f64) -> Self {
        self.endpoint_bound = bound;
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.size + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn endpoint_bound(&self) -> f64 {
        self.endpoint_bound
    }

    /// Samples `f` at every node.
    pub fn profile(&self, f: impl Fn(f64) -> f64) -> Profile {
        Profile(self.nodes.iter().map(|&x| f(x)).collect())
    }

    /// `x(1-x)` at every node.
    pub fn moment_weight(&self) -> Profile {
        self.profile(|x| x * (1.0 - x))
    }

    fn check(&self, f: &Profile) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        Ok(())
    }
}

/// Convenience constructor matching the grid law `x_i = i / size`.
pub fn build_grid(size: usize) -> Result<Grid> {
    Grid::new(size)
}

/// Samples of a radial function at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile(Vec<f64>);

impl Profile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self(values))
    }

    /// Wraps values without the finiteness check.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Profile, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "profile length mismatch");
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn powi(&self, exponent: i32) -> Self {
        self.map(|v| v.powi(exponent))
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute value.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-norm distance.
    pub fn max_abs_diff(&self, other: &Profile) -> f64 {
        self.zip_map(other, |a, b| a - b).max_abs()
    }
}

impl Index<usize> for Profile {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Profile {
    type Output = Profile;
    fn add(self, rhs: &Profile) -> Profile {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Profile {
    type Output = Profile;
    fn sub(self, rhs: &Profile) -> Profile {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &Profile {
    type Output = Profile;
    fn mul(self, rhs: &Profile) -> Profile {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Neg for &Profile {
    type Output = Profile;
    fn neg(self) -> Profile {
        self.map(|v| -v)
    }
}

/// Derivative of order `order` (1..=4) in `x`, fourth-order accurate, with
/// one-sided stencils of the same order in the boundary bands.
pub fn derivative(f: &Profile, g: &Grid, order: usize) -> Result<Profile> {
    assert!((1..=4).contains(&order), "derivative order must be 1..=4");
    g.check(f)?;
    Ok(Profile(g.stencils[order - 1].apply(&f.0)))
}

pub fn d_dx(f: &Profile, g: &Grid) -> Result<Profile> {
    derivative(f, g, 1)
}

/// `d/ds = x(1-x) d/dx`; vanishes at both endpoints.
pub fn d_ds(f: &Profile, g: &Grid) -> Result<Profile> {
    let df = d_dx(f, g)?;
    Ok(Profile(
        df.0.iter()
            .zip(g.nodes())
            .map(|(d, &x)| x * (1.0 - x) * d)
            .collect(),
    ))
}

/// Value at `x = 0` of the quartic through nodes 1..=5.
fn extrapolate_left(v: &[f64]) -> f64 {
    5.0 * v[1] - 10.0 * v[2] + 10.0 * v[3] - 5.0 * v[4] + v[5]
}

fn extrapolate_right(v: &[f64]) -> f64 {
    let n = v.len() - 1;
    5.0 * v[n - 1] - 10.0 * v[n - 2] + 10.0 * v[n - 3] - 5.0 * v[n - 4] + v[n - 5]
}

/// `f / (x(1-x))` on interior nodes, extended to the endpoints by one-sided
/// extrapolation. Fails if an extended endpoint value exceeds the grid bound.
pub fn divide_moment_weight(f: &Profile, g: &Grid) -> Result<Profile> {
    g.check(f)?;
    let n = g.size();
    let mut v: Vec<f64> =
        f.0.iter()
            .zip(g.nodes())
            .map(|(fv, &x)| fv / (x * (1.0 - x)))
            .collect();
    v[0] = extrapolate_left(&v);
    v[n] = extrapolate_right(&v);
    for (i, endpoint) in [(0, 0.0), (n, 1.0)] {
        if !v[i].is_finite() || v[i].abs() > g.endpoint_bound() {
            return Err(Error::Divergent {
                endpoint,
                value: v[i],
            });
        }
    }
    Ok(Profile(v))
}

/// Composite Simpson rule over `[0, 1]`.
pub fn simpson(f: &Profile, g: &Grid) -> Result<f64> {
    g.check(f)?;
    let n = g.size();
    let v = &f.0;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in (1..n).step_by(2) {
        odd += v[i];
    }
    for i in (2..n).step_by(2) {
        even += v[i];
    }
    Ok(g.spacing() / 3.0 * (v[0] + v[n] + 4.0 * odd + 2.0 * even))
}

/// `∫ f ds = ∫_0^1 f(x) / (x(1-x)) dx`.
pub fn integrate_ds(f: &Profile, g: &Grid) -> Result<f64> {
    simpson(&divide_moment_weight(f, g)?, g)
}

/// Running integral `F(x_i) = ∫_0^{x_i} f dx` using cubic-interpolation
/// panel weights (fourth order).
pub fn cumulative_integral(f: &Profile, g: &Grid) -> Result<Profile> {
    g.check(f)?;
    let n = g.size();
    let v = &f.0;
    let h = g.spacing() / 24.0;
    let mut out = vec![0.0; n + 1];
    for i in 0..n {
        let panel = if i == 0 {
            9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3]
        } else if i == n - 1 {
            9.0 * v[n] + 19.0 * v[n - 1] - 5.0 * v[n - 2] + v[n - 3]
        } else {
            -v[i - 1] + 13.0 * v[i] + 13.0 * v[i + 1] - v[i + 2]
        };
        out[i + 1] = out[i] + h * panel;
    }
    Ok(Profile(out))
}
