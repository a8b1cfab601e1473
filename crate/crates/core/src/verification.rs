//! Finite-difference adjudication of the derivative identities and property
//! checks, collected into a deterministic report.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::calculus::{d_ds, Profile};
use crate::error::{Error, Result};
use crate::flow::{self, c_omega_estimate, FlowConfig, Representation};
use crate::functionals::{futaki, re_reference, EnergyCoefficients, Evaluation, Reference};
use crate::geometry::{average, wedge_density, ManifoldConfig};
use crate::potential::{Potential, DEFAULT_DEGREE};
use crate::sampling::{PotentialSampler, DEFAULT_BOUND, DEFAULT_MARGIN};

/// The four derivative identities along a path `φ_t = φ + t·φ̇`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Identity {
    /// `d/dt Σ_k ⨏ φ ω^k∧ω_t^{n-k} = (n+1) ⨏ φ̇ ω_t^n`.
    JFunc,
    /// `dν/dt = -½ ⨏ φ̇ (Scal(ω_t) - 2n) ω_t^n`.
    KEnergy,
    /// `d/dt Σ b_k/(n+1) ⨏ φ ω^k∧ω_t^{n-k} = (n-1) ⨏ φ̇ (ω_t^2 - ω^2)∧ω_t^{n-2}`.
    J1Fun,
    /// `dE_1/dt = ⨏ Δ_t φ̇ Ric(ω_t)∧ω_t^{n-1} - (n-1) ⨏ φ̇ (Ric(ω_t)^2 - ω_t^2)∧ω_t^{n-2}`.
    E1,
}

impl Identity {
    pub const ALL: [Identity; 4] = [Self::JFunc, Self::KEnergy, Self::J1Fun, Self::E1];

    pub fn id(self) -> &'static str {
        match self {
            Self::JFunc => "DER_JFUNC",
            Self::KEnergy => "DER_KENERG",
            Self::J1Fun => "DER_J1FUN",
            Self::E1 => "DER_E1",
        }
    }

    /// The functional whose derivative the identity describes.
    pub fn functional(self, eval: &Evaluation) -> Result<f64> {
        let n = eval.state().dimension();
        match self {
            Self::JFunc => Ok((n + 1) as f64 * eval.mixed_sum(&vec![1.0; n + 1])?),
            Self::KEnergy => eval.nu(),
            Self::J1Fun => eval.mixed_sum(&eval_coefficients(eval).b),
            Self::E1 => eval.e1(),
        }
    }

    /// The closed-form rate at `φ` in the direction `φ̇`.
    pub fn rate(self, eval: &Evaluation, direction: &Potential) -> Result<f64> {
        let state = eval.state();
        let config = state.config();
        let g = config.grid();
        let n = state.dimension();
        let nf = n as f64;
        let d = direction.values(g);
        let volume = state.volume_density();
        match self {
            Self::JFunc => Ok((nf + 1.0) * average(&(&d * &volume), config)?),
            Self::KEnergy => {
                let excess = state.scalar_curvature().map(|s| s - 2.0 * nf);
                Ok(-0.5 * average(&(&(&d * &excess) * &volume), config)?)
            }
            Self::J1Fun => {
                if n < 2 {
                    return Ok(0.0);
                }
                let diff = &eval.mixed_density(0)? - &eval.mixed_density(2)?;
                Ok((nf - 1.0) * average(&(&d * &diff), config)?)
            }
            Self::E1 => {
                let jet = direction.jet(g)?;
                let lap = state.laplacian_of_jet(&jet);
                let ric = state.ricci();
                let form = state.form();
                let mixed = wedge_density(&[(ric, 1), (form, n - 1)], n)?;
                let first = average(&(&lap * &mixed), config)?;
                if n < 2 {
                    return Ok(first);
                }
                let ric2 = wedge_density(&[(ric, 2), (form, n - 2)], n)?;
                let diff = &ric2 - &volume;
                Ok(first - (nf - 1.0) * average(&(&d * &diff), config)?)
            }
        }
    }
}

fn eval_coefficients<'a>(eval: &'a Evaluation) -> &'a EnergyCoefficients {
    eval.reference().coefficients()
}

/// One finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalCheck {
    pub identity: Identity,
    pub direction: Profile,
    pub dt: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

pub fn relative_error(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs()))
}

/// Central difference of the functional along `φ + t·direction` against the
/// closed-form rate.
pub fn variational_check(
    identity: Identity,
    reference: &Reference,
    phi: &Potential,
    direction: &Potential,
    dt: f64,
) -> Result<VariationalCheck> {
    let g = reference.config().grid();
    let plus = phi.axpy(dt, direction, g)?;
    let minus = phi.axpy(-dt, direction, g)?;
    let f_plus = identity.functional(&reference.evaluate(&plus)?)?;
    let f_minus = identity.functional(&reference.evaluate(&minus)?)?;
    let lhs = (f_plus - f_minus) / (2.0 * dt);
    let rhs = identity.rate(&reference.evaluate(phi)?, direction)?;
    Ok(VariationalCheck {
        identity,
        direction: direction.values(g),
        dt,
        lhs,
        rhs,
        rel_err: relative_error(lhs, rhs),
    })
}

/// Two-argument functionals `𝔼(ω_1, ω_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    J,
    Nu,
    E1,
}

impl Functional {
    pub const ALL: [Functional; 3] = [Self::J, Self::Nu, Self::E1];

    pub fn name(self) -> &'static str {
        match self {
            Self::J => "j",
            Self::Nu => "nu",
            Self::E1 => "e1",
        }
    }

    /// `𝔼(ω, ω_φ)` with `ω` the reference. `J` is taken in its gradient form.
    pub fn evaluate(self, reference: &Reference, phi: &Potential) -> Result<f64> {
        let eval = reference.evaluate(phi)?;
        match self {
            Self::J => Ok(eval.j_expressions()?.0),
            Self::Nu => eval.nu(),
            Self::E1 => eval.e1(),
        }
    }
}

/// `𝔼(ω, ω_2) - 𝔼(ω, ω_1) - 𝔼(ω_1, ω_2)` for `ω_i = ω_{φ_i}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleDefect {
    pub functional: Functional,
    pub direct: f64,
    pub first: f64,
    pub second: f64,
    pub defect: f64,
    /// Largest of the three terms in absolute value.
    pub scale: f64,
}

impl CocycleDefect {
    pub fn relative(&self) -> f64 {
        self.defect.abs() / (1.0 + self.scale)
    }
}

pub fn cocycle_check(
    reference: &Reference,
    phi1: &Potential,
    phi2: &Potential,
    functional: Functional,
) -> Result<CocycleDefect> {
    let g = reference.config().grid();
    let direct = functional.evaluate(reference, phi2)?;
    let first = functional.evaluate(reference, phi1)?;
    let middle = re_reference(reference, phi1)?;
    let second = functional.evaluate(&middle, &phi2.axpy(-1.0, phi1, g)?)?;
    Ok(CocycleDefect {
        functional,
        direct,
        first,
        second,
        defect: direct - first - second,
        scale: direct.abs().max(first.abs()).max(second.abs()),
    })
}

/// `𝔼(ω_φ, ω_φ)`.
pub fn diagonal_value(
    reference: &Reference,
    phi: &Potential,
    functional: Functional,
) -> Result<f64> {
    functional.evaluate(&re_reference(reference, phi)?, &Potential::zero())
}

/// Tolerances of the suite; defaults are the acceptance values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub j_agreement: f64,
    pub shift_invariance: f64,
    pub variational: f64,
    pub cocycle: f64,
    pub diagonal: f64,
    pub h_equation: f64,
    pub h_normalization: f64,
    pub futaki: f64,
    pub scal_average: f64,
    pub class_total: f64,
    pub residual_constancy: f64,
    pub inequality: f64,
    pub flow_monotonicity: f64,
    pub flow_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            j_agreement: 1e-6,
            shift_invariance: 1e-8,
            variational: 1e-5,
            cocycle: 1e-6,
            diagonal: 1e-8,
            h_equation: 1e-6,
            h_normalization: 1e-10,
            futaki: 1e-6,
            scal_average: 1e-6,
            class_total: 1e-6,
            residual_constancy: 1e-6,
            inequality: 1e-8,
            flow_monotonicity: 1e-8,
            flow_residual: 1e-5,
        }
    }
}

/// Deliberate corruptions that the suite must detect.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mutation {
    pub b1_shift: f64,
    pub h_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub dimension: usize,
    pub grid_size: usize,
    pub seed: u64,
    /// Monomial coefficients of the reference potential; empty for Fubini–Study.
    pub reference: Vec<f64>,
    pub samples: usize,
    pub pairs: usize,
    pub degree: usize,
    pub bound: f64,
    pub margin: f64,
    pub dt: f64,
    pub flow_t_max: f64,
    pub flow_degree: usize,
    pub flow_record_every: usize,
    pub tolerances: Tolerances,
    pub mutation: Mutation,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            grid_size: 1024,
            seed: 2024,
            reference: Vec::new(),
            samples: 20,
            pairs: 5,
            degree: DEFAULT_DEGREE,
            bound: DEFAULT_BOUND,
            margin: DEFAULT_MARGIN,
            dt: 1e-4,
            flow_t_max: 1.0,
            flow_degree: 12,
            flow_record_every: 10,
            tolerances: Tolerances::default(),
            mutation: Mutation::default(),
        }
    }
}

impl SuiteConfig {
    pub fn manifold(&self) -> Result<ManifoldConfig> {
        ManifoldConfig::build(self.dimension, self.grid_size)
    }

    /// The reference metric with any configured mutation applied.
    pub fn build_reference(&self) -> Result<Reference> {
        let config = self.manifold()?;
        let mut reference = if self.reference.iter().all(|&c| c == 0.0) {
            Reference::background(&config)?
        } else {
            Reference::from_potential(&config, &Potential::monomial(&self.reference))?
        };
        if self.mutation.b1_shift != 0.0 {
            let coefficients =
                EnergyCoefficients::canonical(self.dimension).with_b1_shift(self.mutation.b1_shift);
            reference = reference.with_coefficients(coefficients)?;
        }
        if self.mutation.h_offset != 0.0 {
            let h = reference.ricci_potential().shifted(self.mutation.h_offset);
            reference = reference.with_ricci_potential(h)?;
        }
        Ok(reference)
    }

    pub fn sampler(&self, stream: u64) -> PotentialSampler {
        PotentialSampler::with_params(
            self.seed
                .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            self.degree,
            self.bound,
        )
        .with_margin(self.margin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckResult {
    /// Passes when `value ≤ tolerance` (NaN fails).
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }

    fn failed(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub grid_size: usize,
    pub dimension: usize,
    pub checks: Vec<CheckResult>,
}

/// Seventeen significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# seed={} grid_size={} dimension={}",
            self.seed, self.grid_size, self.dimension
        );
        out.push_str("check_name,status,value,tolerance\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                format_float(c.value),
                format_float(c.tolerance)
            );
        }
        let _ = writeln!(
            out,
            "# overall={}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        out
    }
}

type Check<'a> = Box<dyn Fn() -> Vec<CheckResult> + Send + Sync + 'a>;

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn spread(values: &[f64]) -> f64 {
    max_of(values.iter().copied()) - values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Runs every check of the suite. Errors inside a check turn into failed
/// entries; only an unusable configuration is an `Err`.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    if config.samples < 2 || config.pairs == 0 {
        return Err(Error::Config(
            "need at least two samples and one pair".into(),
        ));
    }
    let reference = config.build_reference()?;
    let tol = config.tolerances.clone();
    let n = config.dimension;
    let nf = n as f64;

    let samples: Vec<Potential> = {
        let mut s = config.sampler(0);
        (0..config.samples)
            .map(|_| s.admissible(&reference))
            .collect::<Result<_>>()?
    };
    let dt = config.dt;
    let pairs: Vec<(Potential, Potential)> = {
        let mut s = config.sampler(1);
        let mut out = Vec::with_capacity(config.pairs);
        for _ in 0..config.pairs {
            let direction = s.direction();
            let g = reference.config().grid();
            let phi = s.admissible_where(&reference, |p| {
                [dt, -dt].iter().all(|&t| {
                    p.axpy(t, &direction, g)
                        .and_then(|q| reference.state_of(&q))
                        .is_ok()
                })
            })?;
            out.push((phi, direction));
        }
        out
    };
    let triples: Vec<(Potential, Potential)> = {
        let mut s = config.sampler(2);
        let mut out = Vec::with_capacity(config.pairs);
        for _ in 0..config.pairs {
            let phi1 = s.admissible(&reference)?;
            let phi2 = s.admissible(&reference)?;
            out.push((phi1, phi2));
        }
        out
    };
    let c_omega = c_omega_estimate(&reference)?;

    let r = &reference;
    let tol = &tol;
    let samples = &samples;
    let pairs = &pairs;
    let triples = &triples;

    let mut checks: Vec<Check> = Vec::new();

    checks.push(Box::new(move || {
        let mut agree = Vec::new();
        let mut neg = Vec::new();
        for phi in samples {
            match r.evaluate(phi).and_then(|e| e.j_expressions()) {
                Ok((a, b)) => {
                    agree.push((a - b).abs() / (1.0 + a.abs()));
                    neg.push(-a.min(b));
                }
                Err(_) => {
                    return vec![
                        CheckResult::failed("j_expression_agreement", tol.j_agreement),
                        CheckResult::failed("j_nonnegative", 0.0),
                    ]
                }
            }
        }
        vec![
            CheckResult::at_most("j_expression_agreement", max_of(agree), tol.j_agreement),
            CheckResult::at_most("j_nonnegative", max_of(neg), 0.0),
        ]
    }));

    for f in Functional::ALL {
        checks.push(Box::new(move || {
            let name = format!("shift_invariance_{}", f.name());
            let worst = samples
                .iter()
                .take(config.pairs)
                .try_fold(0.0f64, |acc, phi| {
                    let a = f.evaluate(r, phi)?;
                    let b = f.evaluate(r, &phi.shift(0.37))?;
                    Ok::<_, Error>(acc.max((a - b).abs()))
                });
            match worst {
                Ok(v) => vec![CheckResult::at_most(name, v, tol.shift_invariance)],
                Err(_) => vec![CheckResult::failed(name, tol.shift_invariance)],
            }
        }));
    }

    for id in Identity::ALL {
        checks.push(Box::new(move || {
            let name = id.id().to_string();
            let worst = pairs.iter().try_fold(0.0f64, |acc, (phi, dir)| {
                Ok::<_, Error>(acc.max(variational_check(id, r, phi, dir, dt)?.rel_err))
            });
            match worst {
                Ok(v) => vec![CheckResult::at_most(name, v, tol.variational)],
                Err(_) => vec![CheckResult::failed(name, tol.variational)],
            }
        }));
    }

    for f in Functional::ALL {
        checks.push(Box::new(move || {
            let diag_name = format!("diagonal_{}", f.name());
            let diag = triples.iter().try_fold(0.0f64, |acc, (phi1, _)| {
                Ok::<_, Error>(acc.max(diagonal_value(r, phi1, f)?.abs()))
            });
            let mut out = vec![match diag {
                Ok(v) => CheckResult::at_most(diag_name, v, tol.diagonal),
                Err(_) => CheckResult::failed(diag_name, tol.diagonal),
            }];
            // J satisfies the diagonal axiom but is not additive along
            // triples, so only ν and E_1 enter the cocycle check here.
            if f != Functional::J {
                let name = format!("cocycle_{}", f.name());
                let worst = triples.iter().try_fold(0.0f64, |acc, (phi1, phi2)| {
                    Ok::<_, Error>(acc.max(cocycle_check(r, phi1, phi2, f)?.relative()))
                });
                out.push(match worst {
                    Ok(v) => CheckResult::at_most(name, v, tol.cocycle),
                    Err(_) => CheckResult::failed(name, tol.cocycle),
                });
            }
            out
        }));
    }

    checks.push(Box::new(move || {
        let state = r.state();
        let g = r.config().grid();
        let equation = d_ds(r.h(), g).map(|dh| {
            let target = &state.ricci().b - &state.form().b;
            dh.max_abs_diff(&target)
        });
        let volume = state.volume_density();
        let norm = average(&(&r.h().map(|h| h.exp() - 1.0) * &volume), r.config());
        vec![
            match equation {
                Ok(v) => CheckResult::at_most("h_defining_equation", v, tol.h_equation),
                Err(_) => CheckResult::failed("h_defining_equation", tol.h_equation),
            },
            match norm {
                Ok(v) => CheckResult::at_most("h_normalization", v.abs(), tol.h_normalization),
                Err(_) => CheckResult::failed("h_normalization", tol.h_normalization),
            },
        ]
    }));

    checks.push(Box::new(move || {
        // the reference itself plus one metric per pair
        let mut values = vec![futaki(r)];
        let mut s = config.sampler(3);
        let background = match Reference::background(r.config()) {
            Ok(b) => b,
            Err(_) => {
                return vec![
                    CheckResult::failed("futaki_vanishing", tol.futaki),
                    CheckResult::failed("futaki_independence", tol.futaki),
                ]
            }
        };
        for _ in 0..config.pairs {
            values.push(
                s.admissible(&background)
                    .and_then(|psi| Reference::from_potential(r.config(), &psi))
                    .and_then(|other| futaki(&other)),
            );
        }
        match values.into_iter().collect::<Result<Vec<f64>>>() {
            Ok(v) => vec![
                CheckResult::at_most(
                    "futaki_vanishing",
                    max_of(v.iter().map(|f| f.abs())),
                    tol.futaki,
                ),
                CheckResult::at_most("futaki_independence", spread(&v), tol.futaki),
            ],
            Err(_) => vec![
                CheckResult::failed("futaki_vanishing", tol.futaki),
                CheckResult::failed("futaki_independence", tol.futaki),
            ],
        }
    }));

    checks.push(Box::new(move || {
        let mut scal = Vec::new();
        let mut total = Vec::new();
        for phi in samples {
            let Ok(state) = r.state_of(phi) else {
                return vec![
                    CheckResult::failed("scal_average", tol.scal_average),
                    CheckResult::failed("ricci_class_total", tol.class_total),
                ];
            };
            let cfg = r.config();
            let volume = state.volume_density();
            let s = average(&(&state.scalar_curvature() * &volume), cfg);
            let ric = wedge_density(&[(state.ricci(), 1), (state.form(), n - 1)], n)
                .and_then(|d| average(&d, cfg));
            let own = wedge_density(&[(r.state().form(), 1), (state.form(), n - 1)], n)
                .and_then(|d| average(&d, cfg));
            match (s, ric, own) {
                (Ok(s), Ok(a), Ok(b)) => {
                    scal.push((s - 2.0 * nf).abs());
                    total.push((a - b).abs());
                }
                _ => {
                    return vec![
                        CheckResult::failed("scal_average", tol.scal_average),
                        CheckResult::failed("ricci_class_total", tol.class_total),
                    ]
                }
            }
        }
        vec![
            CheckResult::at_most("scal_average", max_of(scal), tol.scal_average),
            CheckResult::at_most("ricci_class_total", max_of(total), tol.class_total),
        ]
    }));

    checks.push(Box::new(move || {
        let scale = 1.0 + c_omega.abs();
        let mut residuals = Vec::new();
        let mut margin = Vec::new();
        for phi in samples {
            let Ok(eval) = r.evaluate(phi) else {
                return vec![
                    CheckResult::failed("residual_constancy", tol.residual_constancy),
                    CheckResult::failed("energy_inequality", tol.inequality),
                ];
            };
            match (eval.nu(), eval.e1(), eval.dirichlet()) {
                (Ok(nu), Ok(e1), Ok(d)) => {
                    residuals.push(e1 - 2.0 * nu - d);
                    margin.push(-(e1 - 2.0 * nu - c_omega));
                }
                _ => {
                    return vec![
                        CheckResult::failed("residual_constancy", tol.residual_constancy),
                        CheckResult::failed("energy_inequality", tol.inequality),
                    ]
                }
            }
        }
        residuals.push(c_omega);
        vec![
            CheckResult::at_most(
                "residual_constancy",
                spread(&residuals) / scale,
                tol.residual_constancy,
            ),
            CheckResult::at_most("energy_inequality", max_of(margin), tol.inequality),
        ]
    }));

    checks.push(Box::new(move || {
        let names = [
            "flow_nu_monotone",
            "flow_residual_constancy",
            "flow_energy_inequality",
        ];
        let tols = [tol.flow_monotonicity, tol.flow_residual, tol.inequality];
        let flow_config = FlowConfig {
            initial: samples[0].clone(),
            t_max: config.flow_t_max,
            dt_init: flow::default_dt(config.grid_size),
            dt_safety: 0.8,
            record_every: config.flow_record_every,
            representation: Representation::Polynomial {
                degree: config.flow_degree,
            },
        };
        match flow::run(r, &flow_config) {
            Ok(trace) => {
                let values = [
                    trace.max_nu_increase(),
                    trace.max_residual_deviation(c_omega) / (1.0 + c_omega.abs()),
                    -trace.min_inequality_margin(c_omega),
                ];
                (0..3)
                    .map(|i| CheckResult::at_most(names[i], values[i], tols[i]))
                    .collect()
            }
            Err(_) => (0..3)
                .map(|i| CheckResult::failed(names[i], tols[i]))
                .collect(),
        }
    }));

    let checks: Vec<CheckResult> = checks.par_iter().flat_map(|c| c()).collect();
    Ok(SuiteReport {
        seed: config.seed,
        grid_size: config.grid_size,
        dimension: config.dimension,
        checks,
    })
}
