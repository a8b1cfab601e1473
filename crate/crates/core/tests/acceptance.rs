//! Acceptance criteria, one test per criterion. Each test prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::time::{Duration, Instant};

use kahler_lab::calculus::d_ds;
use kahler_lab::flow::{self, c_omega_estimate, FlowConfig, FlowTrace, Representation};
use kahler_lab::functionals::{futaki, identity_residual, EnergyCoefficients, Reference};
use kahler_lab::geometry::{average, wedge_density, ManifoldConfig};
use kahler_lab::potential::Potential;
use kahler_lab::sampling::PotentialSampler;
use kahler_lab::verification::{
    cocycle_check, diagonal_value, variational_check, Functional, Identity,
};

const SEED: u64 = 2024;
const NON_EINSTEIN: [f64; 4] = [0.0, 0.3, -0.2, 0.1];

fn verdict(criterion: &str, pass: bool, detail: String) {
    println!(
        "criterion {criterion}: {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn manifold(n: usize, size: usize) -> ManifoldConfig {
    ManifoldConfig::build(n, size).unwrap()
}

fn fubini_study(n: usize, size: usize) -> Reference {
    Reference::background(&manifold(n, size)).unwrap()
}

fn non_einstein(n: usize, size: usize) -> Reference {
    Reference::from_potential(&manifold(n, size), &Potential::monomial(&NON_EINSTEIN)).unwrap()
}

fn references(n: usize, size: usize) -> [(&'static str, Reference); 2] {
    [
        ("fs", fubini_study(n, size)),
        ("non-einstein", non_einstein(n, size)),
    ]
}

fn samples(reference: &Reference, count: usize, stream: u64) -> Vec<Potential> {
    let mut s = PotentialSampler::new(SEED + stream);
    (0..count)
        .map(|_| s.admissible(reference).unwrap())
        .collect()
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn residual_spread(reference: &Reference, phis: &[Potential]) -> f64 {
    let values: Vec<f64> = phis
        .iter()
        .map(|p| identity_residual(reference, p).unwrap())
        .collect();
    spread(&values)
}

fn flow_from(reference: &Reference, initial: Potential, t_max: f64) -> FlowTrace {
    let size = reference.config().grid().size();
    let mut config = FlowConfig::new(initial, t_max, size);
    config.representation = Representation::Polynomial { degree: 12 };
    flow::run(reference, &config).unwrap()
}

/// Observed order 4 ± 1 for the "≈ 16×" refinement factor.
const RATIO_BAND: (f64, f64) = (8.0, 32.0);

#[test]
fn criterion_01_pointwise_identity() {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [1, 2] {
        for ((name, fine), (_, coarse)) in references(n, 2048).into_iter().zip(references(n, 1024))
        {
            let phis = samples(&fine, 20, 0);
            let c = c_omega_estimate(&fine).unwrap();
            let s_fine = residual_spread(&fine, &phis);
            let s_coarse = residual_spread(&coarse, &phis);
            let ratio = s_coarse / s_fine;
            let ok_abs = s_fine <= 1e-6 * (1.0 + c.abs());
            let ok_ratio = ratio >= RATIO_BAND.0 && ratio <= RATIO_BAND.1;
            pass &= ok_abs && ok_ratio;
            detail.push(format!(
                "n={n} {name}: spread={s_fine:.2e} ratio={ratio:.1}"
            ));
        }
    }
    verdict("1", pass, detail.join("; "));
}

#[test]
fn criterion_02_inequality() {
    let mut worst = f64::INFINITY;
    for n in [1, 2] {
        for (_, r) in references(n, 1024) {
            let c = c_omega_estimate(&r).unwrap();
            for phi in samples(&r, 20, 0) {
                let e = r.evaluate(&phi).unwrap();
                worst = worst.min(e.e1().unwrap() - 2.0 * e.nu().unwrap() - c);
            }
        }
    }
    let sample_margin = worst;
    let r = fubini_study(1, 1024);
    let trace = flow_from(&r, Potential::monomial(&[0.0, 0.2]), 10.0);
    let flow_fs = trace.min_inequality_margin(c_omega_estimate(&r).unwrap());
    let r = non_einstein(2, 1024);
    let trace = flow_from(&r, samples(&r, 1, 5).remove(0), 2.0);
    let flow_ne = trace.min_inequality_margin(c_omega_estimate(&r).unwrap());
    worst = worst.min(flow_fs).min(flow_ne);
    verdict(
        "2",
        worst >= -1e-8,
        format!(
            "min margin samples={sample_margin:.2e} flow_fs={flow_fs:.2e} flow_ne={flow_ne:.2e}"
        ),
    );
}

#[test]
fn criterion_03_flow() {
    let start = Instant::now();
    let r = fubini_study(1, 1024);
    let trace = flow_from(&r, Potential::monomial(&[0.0, 0.2]), 10.0);
    let elapsed = start.elapsed();
    let c = c_omega_estimate(&r).unwrap();
    let monotone = trace
        .records
        .windows(2)
        .all(|w| w[1].nu - w[0].nu <= 1e-8 * (1.0 + w[0].nu.abs()));
    let deviation = trace.max_residual_deviation(c);
    let last = trace.last();
    let scal = last.scal_max - last.scal_min;
    let positive = trace
        .records
        .iter()
        .all(|r| r.min_a_hat > 0.0 && r.min_b_hat > 0.0);
    let pass = monotone
        && deviation <= 1e-5 * (1.0 + c.abs())
        && scal <= 1e-3
        && positive
        && last.t == 10.0
        && elapsed <= Duration::from_secs(300);
    verdict(
        "3",
        pass,
        format!(
            "monotone={monotone} residual_dev={deviation:.2e} final_scal_spread={scal:.2e} records={} time={:.1}s",
            trace.records.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_04_variational_identities() {
    let dt = 1e-4;
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [1, 2] {
        let r = fubini_study(n, 1024);
        let g = r.config().grid().clone();
        let mut s = PotentialSampler::new(SEED + 1);
        let mut worst = [0.0f64; 4];
        for _ in 0..5 {
            let dir = s.direction();
            let phi = s
                .admissible_where(&r, |p| {
                    [dt, -dt]
                        .iter()
                        .all(|&t| r.state_of(&p.axpy(t, &dir, &g).unwrap()).is_ok())
                })
                .unwrap();
            for (k, id) in Identity::ALL.into_iter().enumerate() {
                let c = variational_check(id, &r, &phi, &dir, dt).unwrap();
                if id == Identity::J1Fun && n == 1 {
                    pass &= c.lhs == 0.0 && c.rhs == 0.0;
                }
                worst[k] = worst[k].max(c.rel_err);
            }
        }
        pass &= worst.iter().all(|&e| e <= 1e-5);
        for (k, id) in Identity::ALL.into_iter().enumerate() {
            detail.push(format!("n={n} {}={:.1e}", id.id(), worst[k]));
        }
    }
    verdict("4", pass, detail.join(" "));
}

#[test]
fn criterion_05_axioms() {
    let mut cocycle = [0.0f64; 3];
    let mut diagonal = 0.0f64;
    let mut shift = 0.0f64;
    for n in [1, 2] {
        let r = fubini_study(n, 1024);
        let mut s = PotentialSampler::new(SEED + 2);
        for _ in 0..5 {
            let phi1 = s.admissible(&r).unwrap();
            let phi2 = s.admissible(&r).unwrap();
            for (k, f) in Functional::ALL.into_iter().enumerate() {
                cocycle[k] = cocycle[k].max(cocycle_check(&r, &phi1, &phi2, f).unwrap().relative());
                diagonal = diagonal.max(diagonal_value(&r, &phi1, f).unwrap().abs());
                let a = f.evaluate(&r, &phi1).unwrap();
                let b = f.evaluate(&r, &phi1.shift(0.37)).unwrap();
                shift = shift.max((a - b).abs());
            }
        }
    }
    let pass = cocycle.iter().all(|&d| d <= 1e-6) && diagonal <= 1e-8 && shift <= 1e-8;
    verdict(
        "5",
        pass,
        format!(
            "cocycle j={:.2e} nu={:.2e} e1={:.2e} diagonal={diagonal:.2e} shift={shift:.2e}",
            cocycle[0], cocycle[1], cocycle[2]
        ),
    );
}

#[test]
fn criterion_06_j() {
    let mut agreement = 0.0f64;
    let mut min_j = f64::INFINITY;
    for n in [1, 2, 3] {
        let r = fubini_study(n, 1024);
        for phi in samples(&r, 20, 0) {
            let (a, b) = r.evaluate(&phi).unwrap().j_expressions().unwrap();
            agreement = agreement.max((a - b).abs() / (1.0 + a.abs()));
            min_j = min_j.min(a).min(b);
        }
    }
    let r = fubini_study(1, 1024);
    let closed_form = [0.05, 0.1, 0.3, 0.5]
        .iter()
        .map(|&eps: &f64| {
            let j = r
                .evaluate(&Potential::monomial(&[0.0, eps]))
                .unwrap()
                .j()
                .unwrap();
            (j - eps * eps / 24.0).abs()
        })
        .fold(0.0, f64::max);
    let pass = agreement <= 1e-6 && min_j >= 0.0 && closed_form <= 1e-7;
    verdict(
        "6",
        pass,
        format!("agreement={agreement:.2e} min_j={min_j:.2e} closed_form_err={closed_form:.2e}"),
    );
}

fn h_checks(r: &Reference) -> (f64, f64) {
    let g = r.config().grid();
    let state = r.state();
    let dh = d_ds(r.h(), g).unwrap();
    let target = &state.ricci().b - &state.form().b;
    let equation = dh.max_abs_diff(&target);
    let volume = state.volume_density();
    let norm = average(&(&r.h().map(|h| h.exp() - 1.0) * &volume), r.config()).unwrap();
    (equation, norm.abs())
}

#[test]
fn criterion_07_ricci_potential() {
    let mut equation = 0.0f64;
    let mut norm = 0.0f64;
    let mut fs = 0.0f64;
    for n in [1, 2, 3] {
        let bg = fubini_study(n, 1024);
        fs = fs.max(bg.h().max_abs());
        let mut s = PotentialSampler::new(SEED + 3);
        let mut refs = vec![non_einstein(n, 1024)];
        for _ in 0..3 {
            let psi = s.admissible(&bg).unwrap();
            refs.push(Reference::from_potential(bg.config(), &psi).unwrap());
        }
        for r in refs.iter().chain([&bg]) {
            let (e, m) = h_checks(r);
            equation = equation.max(e);
            norm = norm.max(m);
        }
    }
    let pass = equation <= 1e-6 && norm <= 1e-10 && fs <= 1e-10;
    verdict(
        "7",
        pass,
        format!("equation={equation:.2e} normalization={norm:.2e} fs_h={fs:.2e}"),
    );
}

#[test]
fn criterion_08_curvature() {
    let mut fs = 0.0f64;
    let mut scal_avg = 0.0f64;
    let mut class = 0.0f64;
    for n in [1, 2, 3] {
        let r = fubini_study(n, 1024);
        let nf = n as f64;
        fs = fs.max(r.state().scalar_curvature().map(|s| s - 2.0 * nf).max_abs());
        let cfg = r.config();
        for phi in samples(&r, 20, 0) {
            let st = r.state_of(&phi).unwrap();
            let vol = st.volume_density();
            let s = average(&(&st.scalar_curvature() * &vol), cfg).unwrap();
            scal_avg = scal_avg.max((s - 2.0 * nf).abs());
            let ric = wedge_density(&[(st.ricci(), 1), (st.form(), n - 1)], n).unwrap();
            let own = wedge_density(&[(r.state().form(), 1), (st.form(), n - 1)], n).unwrap();
            let diff = average(&ric, cfg).unwrap() - average(&own, cfg).unwrap();
            class = class.max(diff.abs());
        }
    }
    let pass = fs <= 1e-8 && scal_avg <= 1e-6 && class <= 1e-6;
    verdict(
        "8",
        pass,
        format!("fs_pointwise={fs:.2e} scal_average={scal_avg:.2e} class_total={class:.2e}"),
    );
}

#[test]
fn criterion_09_futaki() {
    let mut exact = true;
    let mut worst = 0.0f64;
    let mut pairwise = 0.0f64;
    for n in [1, 2] {
        let bg = fubini_study(n, 1024);
        exact &= futaki(&bg).unwrap() == 0.0;
        let mut s = PotentialSampler::new(SEED + 4);
        let values: Vec<f64> = (0..5)
            .map(|_| {
                let psi = s.admissible(&bg).unwrap();
                futaki(&Reference::from_potential(bg.config(), &psi).unwrap()).unwrap()
            })
            .collect();
        worst = values.iter().fold(worst, |m, v| m.max(v.abs()));
        pairwise = pairwise.max(spread(&values));
    }
    let pass = exact && worst <= 1e-6 && pairwise <= 1e-6;
    verdict(
        "9",
        pass,
        format!("fs_exact={exact} max_abs={worst:.2e} pairwise={pairwise:.2e}"),
    );
}

#[test]
fn criterion_10_mutation_sensitivity() {
    let n = 2;
    let clean = fubini_study(n, 2048);
    let corrupted = fubini_study(n, 2048)
        .with_coefficients(EnergyCoefficients::canonical(n).with_b1_shift(0.1))
        .unwrap();
    let phis = samples(&clean, 20, 0);
    let c = c_omega_estimate(&corrupted).unwrap();
    let identity_fails = residual_spread(&corrupted, &phis) > 1e-6 * (1.0 + c.abs());

    let r = fubini_study(n, 1024);
    let corrupted_1024 = fubini_study(n, 1024)
        .with_coefficients(EnergyCoefficients::canonical(n).with_b1_shift(0.1))
        .unwrap();
    let g = r.config().grid().clone();
    let mut s = PotentialSampler::new(SEED + 1);
    let dir = s.direction();
    let phi = s
        .admissible_where(&r, |p| {
            [1e-4, -1e-4]
                .iter()
                .all(|&t| r.state_of(&p.axpy(t, &dir, &g).unwrap()).is_ok())
        })
        .unwrap();
    let der_e1 = variational_check(Identity::E1, &corrupted_1024, &phi, &dir, 1e-4).unwrap();
    let der_fails = der_e1.rel_err > 1e-5;

    let shifted_h = r.ricci_potential().shifted(0.05);
    let bad_h = fubini_study(n, 1024)
        .with_ricci_potential(shifted_h)
        .unwrap();
    let (_, norm) = h_checks(&bad_h);
    let h_fails = norm > 1e-10;

    verdict(
        "10",
        identity_fails && der_fails && h_fails,
        format!(
            "b1: identity_fails={identity_fails} der_e1_rel_err={:.2e}; h: normalization={norm:.2e}",
            der_e1.rel_err
        ),
    );
}
