//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::{Duration, Instant};

use aklt_core::chain::{build_aklt, build_aklt_noisy, make_singlet};
use aklt_core::mbqc::{
    run_rotation_gate, run_wire, Axis, LogicalInput, Outcome, Rotation, Sampled, StepKind,
    ANGLE_GRID,
};
use aklt_core::optics::{
    backprop_projector, rotation_analyzer_settings, symmetrize_direct, symmetrize_via_bs,
    tomo_analyzer_settings, werner_p_for_fidelity, werner_singlet, NoiseModel,
};
use aklt_core::quantum::{c, Ket, State, C64};
use aklt_core::tomography::{
    linear_inversion, ml_reconstruct, monte_carlo_fidelity, published_counts, simulate_all_counts,
    LikelihoodProblem, MonteCarloOptions, ReconstructionOptions, ScalingMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AMPLITUDE_TOL: f64 = 1e-12;
const PROBABILITY_TOL: f64 = 1e-10;
const GATE_FIDELITY_TOL: f64 = 1e-10;
const GATE_RUNTIME: Duration = Duration::from_secs(10);
const OVERLAP_TOL: f64 = 1e-10;
const SUCCESS_P_TOL: f64 = 1e-12;
const SYMMETRIZE_TOL: f64 = 1e-10;
const BUILD_P_TOL: f64 = 1e-12;
const HEADLINE_FIDELITY: f64 = 0.871;
const HEADLINE_TOL: f64 = 0.02;
const MC_TRIALS: usize = 420;
const MC_STD_RANGE: (f64, f64) = (0.002, 0.010);
const HEADLINE_RUNTIME: Duration = Duration::from_secs(300);
const ROUND_TRIP_N0: f64 = 1e5;
const ROUND_TRIP_FIDELITY: f64 = 0.999;
const LINEAR_TRACE_DISTANCE: f64 = 0.05;
const WIRE_RUNS: usize = 10_000;
const SIGMAS: f64 = 3.0;
const SINGLET_FIDELITY: f64 = 0.969;
const SINGLET_TOL: f64 = 1e-12;
/// Four-digit rounding of the Werner parameter for F = 0.969.
const ROUNDED_P_TOL: f64 = 5e-5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

// Oracle states written out from the published formulas, without engine code.

fn qubit(a: C64, b: C64) -> [C64; 2] {
    [a, b]
}

/// |a, k, b⟩ at index 6a + 2k + b, H = 0, V = 1.
fn oracle_aklt() -> Vec<C64> {
    let mut psi = vec![c(0.0, 0.0); 12];
    let s6 = 1.0 / 6f64.sqrt();
    let s3 = 1.0 / 3f64.sqrt();
    psi[3] = c(s6, 0.0); // H,1,V
    psi[8] = c(s6, 0.0); // V,1,H
    psi[4] = c(-s3, 0.0); // H,2,H
    psi[7] = c(-s3, 0.0); // V,0,V
    psi
}

fn oracle_inputs() -> Vec<(LogicalInput, [C64; 2])> {
    let r = FRAC_1_SQRT_2;
    let (s8, c8) = (PI / 8.0).sin_cos();
    let xi = (1.0 / 3f64.sqrt()).acos();
    let (sx, cx) = (xi / 2.0).sin_cos();
    let w = C64::from_polar(1.0, PI / 4.0);
    vec![
        (LogicalInput::H, qubit(c(1.0, 0.0), c(0.0, 0.0))),
        (LogicalInput::V, qubit(c(0.0, 0.0), c(1.0, 0.0))),
        (LogicalInput::Plus, qubit(c(r, 0.0), c(r, 0.0))),
        (LogicalInput::Minus, qubit(c(r, 0.0), c(-r, 0.0))),
        (LogicalInput::HadamardPlus, qubit(c(c8, 0.0), c(s8, 0.0))),
        (LogicalInput::HadamardMinus, qubit(c(s8, 0.0), c(-c8, 0.0))),
        (LogicalInput::MagicPlus, qubit(c(cx, 0.0), w * sx)),
        (LogicalInput::MagicMinus, qubit(c(sx, 0.0), -w * cx)),
    ]
}

fn pauli(label: char) -> [[C64; 2]; 2] {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match label {
        'X' => [[o, l], [l, o]],
        'Y' => [[o, -i], [i, o]],
        'Z' => [[l, o], [o, -l]],
        _ => [[l, o], [o, l]],
    }
}

fn apply2(m: [[C64; 2]; 2], v: [C64; 2]) -> [C64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// cos(θ/2) I − i sin(θ/2) σ.
fn oracle_rotation(axis: char, theta: f64, v: [C64; 2]) -> [C64; 2] {
    let s = pauli(axis);
    let (sn, cs) = (theta / 2.0).sin_cos();
    let sv = apply2(s, v);
    [
        v[0] * cs - c(0.0, sn) * sv[0],
        v[1] * cs - c(0.0, sn) * sv[1],
    ]
}

/// Table basis state and correction for one axis and outcome.
fn oracle_basis(axis: char, theta: f64, outcome: Outcome) -> ([C64; 3], char) {
    let r = FRAC_1_SQRT_2;
    let x = [c(r, 0.0), c(0.0, 0.0), c(-r, 0.0)];
    let y = [c(r, 0.0), c(0.0, 0.0), c(r, 0.0)];
    let z = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
    let (sn, cs) = (theta / 2.0).sin_cos();
    let mix = |a: C64, u: [C64; 3], b: C64, v: [C64; 3]| {
        [
            a * u[0] + b * v[0],
            a * u[1] + b * v[1],
            a * u[2] + b * v[2],
        ]
    };
    let (re, im) = (|t: f64| c(t, 0.0), |t: f64| c(0.0, t));
    match (axis, outcome) {
        ('X', Outcome::Plus) => (mix(re(cs), y, im(sn), z), 'Y'),
        ('X', Outcome::Minus) => (mix(im(sn), y, re(cs), z), 'Z'),
        ('X', Outcome::Id) => (x, 'X'),
        ('Y', Outcome::Plus) => (mix(re(cs), z, re(sn), x), 'Z'),
        ('Y', Outcome::Minus) => (mix(re(-sn), z, re(cs), x), 'X'),
        ('Y', Outcome::Id) => (y, 'Y'),
        ('Z', Outcome::Plus) => (mix(re(cs), x, im(sn), y), 'X'),
        ('Z', Outcome::Minus) => (mix(im(sn), x, re(cs), y), 'Y'),
        _ => (z, 'Z'),
    }
}

/// Prepares `input` by projecting qubit 1 onto its orthogonal state, then
/// measures the qutrit on `q`; returns the normalized readout qubit.
fn oracle_gate(input: [C64; 2], q: [C64; 3], correction: char) -> [C64; 2] {
    let perp = [-input[1].conj(), input[0].conj()];
    let psi = oracle_aklt();
    let mut out = [c(0.0, 0.0); 2];
    for a in 0..2 {
        for k in 0..3 {
            for b in 0..2 {
                out[b] += perp[a].conj() * q[k].conj() * psi[6 * a + 2 * k + b];
            }
        }
    }
    let norm = (out[0].norm_sqr() + out[1].norm_sqr()).sqrt();
    apply2(pauli(correction), [out[0] / norm, out[1] / norm])
}

fn overlap2(a: [C64; 2], b: [C64; 2]) -> f64 {
    (a[0].conj() * b[0] + a[1].conj() * b[1]).norm_sqr()
}

fn axis_char(a: Axis) -> char {
    match a {
        Axis::X => 'X',
        Axis::Y => 'Y',
        Axis::Z => 'Z',
    }
}

fn criterion_1() -> Verdict {
    let chain = build_aklt(1).unwrap();
    let engine = chain.ket().unwrap().amps();
    let oracle = oracle_aklt();
    // Remove one global phase, fixed on the ⟨H,1,V| term.
    let phase = engine[3] / engine[3].norm() * oracle[3].conj() / oracle[3].norm();
    let err = (0..12)
        .map(|i| (engine[i] - oracle[i] * phase).norm())
        .fold(0.0, f64::max);
    verdict(
        err < AMPLITUDE_TOL,
        format!("max amplitude error {err:.2e} (tol {AMPLITUDE_TOL:.0e})"),
    )
}

fn criterion_2() -> Verdict {
    let mut worst = 0.0f64;
    for axis in Axis::ALL {
        for &theta in &ANGLE_GRID {
            for input in LogicalInput::ALL {
                let mut total = 0.0;
                for outcome in Outcome::ALL {
                    let p = run_rotation_gate(&input.ket(), axis, theta, outcome, None)
                        .unwrap()
                        .probability;
                    worst = worst.max((p - 1.0 / 3.0).abs());
                    total += p;
                }
                worst = worst.max((total - 1.0).abs());
            }
        }
    }
    verdict(
        worst < PROBABILITY_TOL,
        format!("max |p − 1/3| {worst:.2e} over 3 axes × 10 angles × 8 inputs"),
    )
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut worst_engine = 0.0f64;
    let mut worst_orbit = 0.0f64;
    let mut worst_id = 0.0f64;
    let mut checked = 0;
    for (input, psi) in oracle_inputs() {
        let catalogue = input.ket();
        let catalogue = [catalogue.amps()[0], catalogue.amps()[1]];
        worst_engine = worst_engine.max(1.0 - overlap2(catalogue, psi));
        for axis in Axis::ALL {
            let a = axis_char(axis);
            for &theta in &ANGLE_GRID {
                for outcome in Outcome::ALL {
                    let (q, corr) = oracle_basis(a, theta, outcome);
                    let oracle = oracle_gate(psi, q, corr);
                    let g = run_rotation_gate(&input.ket(), axis, theta, outcome, None).unwrap();
                    let ket = Ket::new(vec![2], oracle.to_vec()).unwrap();
                    let f = State::Mixed(g.corrected_readout)
                        .fidelity_with_pure(&ket)
                        .unwrap();
                    worst_engine = worst_engine.max(1.0 - f);
                    if outcome.is_rotation() {
                        worst_orbit =
                            worst_orbit.max(1.0 - overlap2(oracle, oracle_rotation(a, theta, psi)));
                    } else {
                        worst_id = worst_id.max(1.0 - overlap2(oracle, psi));
                    }
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let worst = worst_engine.max(worst_orbit).max(worst_id);
    verdict(
        worst <= GATE_FIDELITY_TOL && elapsed < GATE_RUNTIME,
        format!(
            "{checked} gates; 1 − F: engine vs oracle {worst_engine:.1e}, oracle vs R(θ) {worst_orbit:.1e}, id vs input {worst_id:.1e}; {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Target and success probability of a two-polarizer analyser: the photons
/// are split with probability 1/2 and each projected on ψ_m; the qutrit
/// state detected is the symmetric part of ψ₁ ⊗ ψ₂.
fn oracle_analyser(a1: f64, c1: f64, a2: f64, c2: f64) -> ([C64; 3], f64) {
    let p1 = [c(a1.cos(), 0.0), C64::from_polar(a1.sin(), c1)];
    let p2 = [c(a2.cos(), 0.0), C64::from_polar(a2.sin(), c2)];
    let sym = [
        p1[0] * p2[0],
        (p1[0] * p2[1] + p1[1] * p2[0]) * FRAC_1_SQRT_2,
        p1[1] * p2[1],
    ];
    let norm_sqr: f64 = sym.iter().map(|z| z.norm_sqr()).sum();
    let n = norm_sqr.sqrt();
    ([sym[0] / n, sym[1] / n, sym[2] / n], 0.5 * norm_sqr)
}

fn overlap3(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm()
}

fn criterion_4() -> Verdict {
    let mut worst_overlap = 0.0f64;
    let mut worst_p = 0.0f64;
    for axis in Axis::ALL {
        for i in 0..20 {
            let theta = -PI + 2.0 * PI * (i as f64 + 0.5) / 20.0;
            for outcome in Outcome::ALL {
                let s = rotation_analyzer_settings(axis, theta, outcome);
                let proj = backprop_projector(&s).unwrap();
                let (target, p) = oracle_analyser(s.alpha1, s.chi1, s.alpha2, s.chi2);
                let (q, _) = oracle_basis(axis_char(axis), theta, outcome);
                worst_overlap = worst_overlap
                    .max((1.0 - overlap3(proj.target.amps().as_slice(), &q)).abs())
                    .max((1.0 - overlap3(&target, &q)).abs());
                worst_p = worst_p
                    .max((proj.success_probability - 0.25).abs())
                    .max((p - 0.25).abs());
            }
        }
    }
    let mut tomo_overlap = 0.0f64;
    let mut tomo_p = 0.0f64;
    for t in tomo_analyzer_settings() {
        let s = t.setting;
        let proj = backprop_projector(&s).unwrap();
        let (target, p) = oracle_analyser(s.alpha1, s.chi1, s.alpha2, s.chi2);
        let allowed = [0.5, 0.25, 1.0 / 3.0]
            .iter()
            .any(|v| (t.table_p - v).abs() < SUCCESS_P_TOL);
        tomo_overlap = tomo_overlap
            .max((1.0 - overlap3(proj.target.amps().as_slice(), t.nominal.amps().as_slice())).abs())
            .max((1.0 - overlap3(&target, t.nominal.amps().as_slice())).abs());
        tomo_p = tomo_p
            .max((proj.success_probability - t.table_p).abs())
            .max((p - t.table_p).abs());
        if !allowed {
            tomo_p = f64::INFINITY;
        }
    }
    let pass = worst_overlap < OVERLAP_TOL
        && worst_p < SUCCESS_P_TOL
        && tomo_overlap < OVERLAP_TOL
        && tomo_p < SUCCESS_P_TOL;
    verdict(
        pass,
        format!(
            "rotation rows: 1 − |⟨t|b⟩| {worst_overlap:.1e}, |p − 1/4| {worst_p:.1e}; tomography: 1 − |⟨t|n⟩| {tomo_overlap:.1e}, |p − p_table| {tomo_p:.1e}"
        ),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_distance = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for _ in 0..50 {
        let amps: Vec<C64> = (0..4)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let psi = Ket::new(vec![2, 2], amps).unwrap().normalized().unwrap();
        let bs = symmetrize_via_bs(&psi).unwrap();
        let direct = symmetrize_direct(&psi).unwrap();
        let d = bs
            .state
            .to_density()
            .trace_distance(&direct.state.to_density())
            .unwrap();
        worst_distance = worst_distance.max(d);
        worst_ratio = worst_ratio.max((bs.probability / direct.probability - 0.5).abs());
    }
    verdict(
        worst_distance < SYMMETRIZE_TOL && worst_ratio < SYMMETRIZE_TOL,
        format!("50 inputs: trace distance {worst_distance:.1e}, |ratio − 1/2| {worst_ratio:.1e}"),
    )
}

/// Norm² left after projecting every inner pair of n+1 singlets onto the
/// symmetric subspace, computed on the full 4^(n+1) qubit space.
fn brute_force_build_probability(n: usize) -> f64 {
    let qubits = 2 * (n + 1);
    let s = FRAC_1_SQRT_2;
    let mut psi = vec![c(0.0, 0.0); 1 << qubits];
    for (idx, amp) in psi.iter_mut().enumerate() {
        let bit = |q: usize| (idx >> (qubits - 1 - q)) & 1;
        let mut a = 1.0;
        for pair in 0..=n {
            a *= match (bit(2 * pair), bit(2 * pair + 1)) {
                (0, 1) => s,
                (1, 0) => -s,
                _ => 0.0,
            };
        }
        *amp = c(a, 0.0);
    }
    // P_sym = (1 + SWAP)/2 on qubits (2j+1, 2j+2).
    for j in 0..n {
        let (q1, q2) = (2 * j + 1, 2 * j + 2);
        let (m1, m2) = (1 << (qubits - 1 - q1), 1 << (qubits - 1 - q2));
        let old = psi.clone();
        for idx in 0..psi.len() {
            let b1 = (idx & m1 != 0) as usize;
            let b2 = (idx & m2 != 0) as usize;
            let swapped = if b1 == b2 { idx } else { idx ^ m1 ^ m2 };
            psi[idx] = (old[idx] + old[swapped]) * 0.5;
        }
    }
    psi.iter().map(|z| z.norm_sqr()).sum()
}

fn criterion_6() -> Verdict {
    let mut worst = 0.0f64;
    for n in 1..=4 {
        let expected = 0.75f64.powi(n as i32);
        let brute = brute_force_build_probability(n);
        let engine = build_aklt(n).unwrap().build_probability;
        worst = worst
            .max((brute - expected).abs())
            .max((engine - expected).abs());
    }
    verdict(
        worst < BUILD_P_TOL,
        format!("n = 1..4: max |p − (3/4)ⁿ| {worst:.1e} (engine and brute force)"),
    )
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let ideal = build_aklt(1).unwrap().density();
    let counts = published_counts().unwrap();
    let fit = ml_reconstruct(&counts, &ReconstructionOptions::default()).unwrap();
    let f = fit.rho.fidelity(&ideal).unwrap();
    let mc = monte_carlo_fidelity(
        &counts,
        &ideal,
        &MonteCarloOptions {
            trials: MC_TRIALS,
            seed: 420,
            ..Default::default()
        },
    )
    .unwrap();
    let elapsed = start.elapsed();
    let pass = (f - HEADLINE_FIDELITY).abs() <= HEADLINE_TOL
        && (MC_STD_RANGE.0..=MC_STD_RANGE.1).contains(&mc.fidelity_std)
        && mc.failures == 0
        && elapsed <= HEADLINE_RUNTIME;
    verdict(
        pass,
        format!(
            "F = {f:.4} (target {HEADLINE_FIDELITY} ± {HEADLINE_TOL}); {MC_TRIALS} trials: mean {:.4}, std {:.4}, failures {}; {:.0} s",
            mc.fidelity_mean,
            mc.fidelity_std,
            mc.failures,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8() -> Verdict {
    let ideal = build_aklt(1).unwrap().density();
    let counts = simulate_all_counts(&ideal, ROUND_TRIP_N0, 8).unwrap();
    let fit = ml_reconstruct(&counts, &ReconstructionOptions::default()).unwrap();
    let f = fit.rho.fidelity(&ideal).unwrap();
    let lin =
        linear_inversion(&LikelihoodProblem::from_table(&counts, ScalingMode::FoldIn)).unwrap();
    let d = lin.rho.trace_distance(&fit.rho).unwrap();
    verdict(
        f >= ROUND_TRIP_FIDELITY && d <= LINEAR_TRACE_DISTANCE,
        format!("N₀ = 1e5: F = {f:.5}; linear vs ML trace distance {d:.4}"),
    )
}

fn criterion_9() -> Verdict {
    let chain = build_aklt(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut trials, mut successes) = (0usize, 0usize);
    let mut attempts = Vec::with_capacity(WIRE_RUNS);
    for _ in 0..WIRE_RUNS {
        let axis = Axis::ALL[rng.random_range(0..3)];
        let theta = ANGLE_GRID[rng.random_range(0..ANGLE_GRID.len())];
        let input = LogicalInput::ALL[rng.random_range(0..LogicalInput::ALL.len())].ket();
        let run = run_wire(
            &chain,
            &input,
            &[Rotation { axis, theta }],
            &mut Sampled(&mut rng),
        )
        .unwrap();
        for step in run
            .transcript
            .iter()
            .filter(|s| s.kind != StepKind::Teleport)
        {
            trials += 1;
            successes += step.outcome.is_rotation() as usize;
        }
        attempts.push(run.attempts(0) as f64);
    }
    let freq = successes as f64 / trials as f64;
    let sigma_f = (2.0 / 9.0 / trials as f64).sqrt();
    let n = attempts.len() as f64;
    let mean = attempts.iter().sum::<f64>() / n;
    // Geometric with p = 2/3: variance (1 − p)/p² = 3/4.
    let sigma_m = (0.75 / n).sqrt();
    let pass =
        (freq - 2.0 / 3.0).abs() <= SIGMAS * sigma_f && (mean - 1.5).abs() <= SIGMAS * sigma_m;
    verdict(
        pass,
        format!(
            "{WIRE_RUNS} runs: success frequency {freq:.4} (2/3 ± {:.4}), mean attempts {mean:.4} (1.5 ± {:.4})",
            SIGMAS * sigma_f,
            SIGMAS * sigma_m
        ),
    )
}

fn criterion_10() -> Verdict {
    let ideal = build_aklt(1).unwrap().density();
    let mut ps: [f64; 5] = [1.0, 0.95, 0.9587, 0.9, 0.8];
    ps.sort_by(|a, b| b.total_cmp(a));
    let mut last = (f64::INFINITY, f64::INFINITY);
    let mut monotone = true;
    let mut trail = Vec::new();
    for p in ps {
        let noisy = build_aklt_noisy(1, &NoiseModel::new(p, 1.0).unwrap())
            .unwrap()
            .density();
        let f = noisy.fidelity(&ideal).unwrap();
        let t = werner_singlet(p).unwrap().tangle().unwrap();
        monotone &= f <= last.0 + 1e-12 && t <= last.1 + 1e-12;
        last = (f, t);
        trail.push(format!("{p}: F {f:.4}, τ {t:.4}"));
    }
    let singlet = make_singlet();
    let fidelity_at = |p: f64| {
        State::Mixed(werner_singlet(p).unwrap())
            .fidelity_with_pure(&singlet)
            .unwrap()
    };
    let exact_p = werner_p_for_fidelity(SINGLET_FIDELITY).unwrap();
    let exact = (fidelity_at(exact_p) - SINGLET_FIDELITY).abs();
    let rounded = (fidelity_at(0.9587) - SINGLET_FIDELITY).abs();
    verdict(
        monotone && exact < SINGLET_TOL && rounded < ROUNDED_P_TOL,
        format!(
            "{}; singlet F at p = {exact_p:.6} off by {exact:.1e}, at p = 0.9587 off by {rounded:.1e}",
            trail.join("; ")
        ),
    )
}

fn main() -> std::process::ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("AKLT exactness", criterion_1),
        ("outcome uniformity", criterion_2),
        ("gate correctness", criterion_3),
        ("optics consistency", criterion_4),
        ("symmetrization equivalence", criterion_5),
        ("build probability", criterion_6),
        ("headline reproduction", criterion_7),
        ("tomography round trip", criterion_8),
        ("wire statistics", criterion_9),
        ("noise monotonicity", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
