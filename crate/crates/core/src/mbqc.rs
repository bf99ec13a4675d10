//! One-way protocol on the AKLT wire: logical-input preparation on the first
//! boundary qubit, qutrit measurements in rotation bases, Pauli-frame
//! bookkeeping and readout on the last boundary qubit.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{build_chain, ChainState};
use crate::error::{Error, Result};
use crate::optics::{xi, NoiseModel};
use crate::quantum::{
    c, kets, BlochVector, CMatrix, DensityOperator, Ket, LocalOperator, Pauli, State, C64,
};

/// Direction in which plus and minus outcomes rotate the logical qubit,
/// relative to R_axis(θ) = exp(−iθσ/2) with |H⟩ at +ẑ. Fixed by the
/// brute-force projection oracle in the acceptance suite.
pub const ROTATION_SIGN: f64 = 1.0;

/// Rotation angles of the published gate scans.
pub const ANGLE_GRID: [f64; 10] = [
    0.0,
    PI / 8.0,
    PI / 4.0,
    3.0 * PI / 8.0,
    PI / 2.0,
    3.0 * PI / 4.0,
    PI,
    5.0 * PI / 4.0,
    3.0 * PI / 2.0,
    7.0 * PI / 4.0,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(format!("unknown axis `{other}` (expected x, y or z)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Plus,
    Minus,
    Id,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Plus, Outcome::Minus, Outcome::Id];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Plus => "plus",
            Outcome::Minus => "minus",
            Outcome::Id => "id",
        }
    }

    pub fn is_rotation(self) -> bool {
        self != Outcome::Id
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" => Ok(Outcome::Plus),
            "minus" | "-" => Ok(Outcome::Minus),
            "id" => Ok(Outcome::Id),
            other => Err(format!(
                "unknown outcome `{other}` (expected plus, minus or id)"
            )),
        }
    }
}

/// |x⟩ = (|0⟩ − |2⟩)/√2, |y⟩ = (|0⟩ + |2⟩)/√2, |z⟩ = |1⟩.
pub fn qutrit_xyz_states() -> [Ket; 3] {
    let r = FRAC_1_SQRT_2;
    [
        Ket::from_real(vec![3], &[r, 0.0, -r]).expect("static qutrit"),
        Ket::from_real(vec![3], &[r, 0.0, r]).expect("static qutrit"),
        Ket::from_real(vec![3], &[0.0, 1.0, 0.0]).expect("static qutrit"),
    ]
}

/// Three orthonormal qutrit states with the Pauli correction for each outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct QutritBasis {
    pub axis: Axis,
    pub theta: f64,
    states: [Ket; 3],
    corrections: [Pauli; 3],
}

impl QutritBasis {
    pub fn state(&self, outcome: Outcome) -> &Ket {
        &self.states[outcome.index()]
    }

    pub fn correction(&self, outcome: Outcome) -> Pauli {
        self.corrections[outcome.index()]
    }

    pub fn states(&self) -> &[Ket; 3] {
        &self.states
    }
}

fn combine(a: C64, u: &Ket, b: C64, v: &Ket) -> Ket {
    let amps = u
        .amps()
        .iter()
        .zip(v.amps().iter())
        .map(|(x, y)| a * x + b * y)
        .collect();
    Ket::new(vec![3], amps).expect("qutrit combination")
}

/// Measurement basis realizing R_axis(θ) on plus and minus outcomes.
pub fn rotation_basis(axis: Axis, theta: f64) -> QutritBasis {
    let [x, y, z] = qutrit_xyz_states();
    let (s, co) = (theta / 2.0).sin_cos();
    let re = |v: f64| c(v, 0.0);
    let im = |v: f64| c(0.0, v);
    let (states, corrections) = match axis {
        Axis::X => (
            [
                combine(re(co), &y, im(s), &z),
                combine(im(s), &y, re(co), &z),
                x,
            ],
            [Pauli::Y, Pauli::Z, Pauli::X],
        ),
        Axis::Y => (
            [
                combine(re(co), &z, re(s), &x),
                combine(re(-s), &z, re(co), &x),
                y,
            ],
            [Pauli::Z, Pauli::X, Pauli::Y],
        ),
        Axis::Z => (
            [
                combine(re(co), &x, im(s), &y),
                combine(im(s), &x, re(co), &y),
                z,
            ],
            [Pauli::X, Pauli::Y, Pauli::Z],
        ),
    };
    QutritBasis {
        axis,
        theta,
        states,
        corrections,
    }
}

/// exp(−iθσ/2) = cos(θ/2) I − i sin(θ/2) σ.
pub fn rotation_matrix(axis: Axis, theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    CMatrix::identity(2, 2) * c(co, 0.0) - axis.pauli().matrix() * c(0.0, s)
}

/// Ideal corrected output of a successful rotation.
pub fn rotated_input(input: &Ket, axis: Axis, theta: f64) -> Ket {
    let amps = rotation_matrix(axis, ROTATION_SIGN * theta) * input.amps();
    Ket::new(vec![2], amps.iter().copied().collect()).expect("qubit")
}

/// The logical input catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogicalInput {
    #[serde(rename = "H")]
    H,
    #[serde(rename = "V")]
    V,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "h+")]
    HadamardPlus,
    #[serde(rename = "h-")]
    HadamardMinus,
    #[serde(rename = "m+")]
    MagicPlus,
    #[serde(rename = "m-")]
    MagicMinus,
}

impl LogicalInput {
    pub const ALL: [LogicalInput; 8] = [
        LogicalInput::H,
        LogicalInput::V,
        LogicalInput::Plus,
        LogicalInput::Minus,
        LogicalInput::HadamardPlus,
        LogicalInput::HadamardMinus,
        LogicalInput::MagicPlus,
        LogicalInput::MagicMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LogicalInput::H => "H",
            LogicalInput::V => "V",
            LogicalInput::Plus => "+",
            LogicalInput::Minus => "-",
            LogicalInput::HadamardPlus => "h+",
            LogicalInput::HadamardMinus => "h-",
            LogicalInput::MagicPlus => "m+",
            LogicalInput::MagicMinus => "m-",
        }
    }

    pub fn ket(self) -> Ket {
        let qubit = |a: C64, b: C64| Ket::new(vec![2], vec![a, b]).expect("static qubit");
        let (s8, c8) = (PI / 8.0).sin_cos();
        let (sx, cx) = (xi() / 2.0).sin_cos();
        let phase = C64::from_polar(1.0, PI / 4.0);
        match self {
            LogicalInput::H => kets::h(),
            LogicalInput::V => kets::v(),
            LogicalInput::Plus => kets::plus(),
            LogicalInput::Minus => kets::minus(),
            // Eigenvectors of (X + Z)/√2 with eigenvalues ±1.
            LogicalInput::HadamardPlus => qubit(c(c8, 0.0), c(s8, 0.0)),
            LogicalInput::HadamardMinus => qubit(c(s8, 0.0), c(-c8, 0.0)),
            LogicalInput::MagicPlus => qubit(c(cx, 0.0), phase * sx),
            LogicalInput::MagicMinus => qubit(c(sx, 0.0), -phase * cx),
        }
    }
}

impl fmt::Display for LogicalInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LogicalInput {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "H" | "h" => Ok(LogicalInput::H),
            "V" | "v" => Ok(LogicalInput::V),
            "+" | "P" | "plus" => Ok(LogicalInput::Plus),
            "-" | "M" | "minus" => Ok(LogicalInput::Minus),
            "h+" => Ok(LogicalInput::HadamardPlus),
            "h-" => Ok(LogicalInput::HadamardMinus),
            "m+" => Ok(LogicalInput::MagicPlus),
            "m-" => Ok(LogicalInput::MagicMinus),
            other => Err(format!(
                "unknown logical input `{other}` (expected H, V, +, -, h+, h-, m+, m-)"
            )),
        }
    }
}

/// Which state the first boundary qubit is projected on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputProjection {
    /// Project on ψ⊥, which prepares ψ.
    Orthogonal,
    /// Project on ψ itself, which prepares ψ⊥.
    Direct,
}

#[derive(Clone, Debug)]
pub struct PreparedInput {
    /// Qutrits ⊗ last boundary qubit.
    pub state: State,
    pub probability: f64,
    /// Set when the projection prepared the state orthogonal to the request.
    pub antipodal: bool,
    pub logical: Ket,
}

pub fn prepare_logical_input(chain: &ChainState, input: &Ket) -> Result<PreparedInput> {
    prepare_logical_input_with(chain, input, InputProjection::Orthogonal)
}

pub fn prepare_logical_input_with(
    chain: &ChainState,
    input: &Ket,
    mode: InputProjection,
) -> Result<PreparedInput> {
    if input.dims() != [2] {
        return Err(Error::WrongShape {
            expected: "single-qubit",
            found: input.dims().to_vec(),
        });
    }
    if chain.n_qutrits == 0 {
        return Err(Error::ChainLength(0, crate::chain::MAX_QUTRITS));
    }
    let input = input.normalized()?;
    let (projected_on, logical) = match mode {
        InputProjection::Orthogonal => (kets::orthogonal(&input), input),
        InputProjection::Direct => (input.clone(), kets::orthogonal(&input)),
    };
    let (state, probability) = chain.state.project(&LocalOperator::bra(0, &projected_on))?;
    Ok(PreparedInput {
        state,
        probability,
        antipodal: mode == InputProjection::Direct,
        logical,
    })
}

/// Picks a measurement outcome given the three outcome probabilities.
pub trait OutcomeSource {
    fn choose(&mut self, probabilities: &[f64; 3]) -> Outcome;
}

/// Deterministic outcomes in sequence; the last one repeats.
#[derive(Clone, Debug)]
pub struct Forced {
    outcomes: Vec<Outcome>,
    next: usize,
}

impl Forced {
    pub fn always(outcome: Outcome) -> Self {
        Self {
            outcomes: vec![outcome],
            next: 0,
        }
    }

    pub fn sequence(outcomes: Vec<Outcome>) -> Self {
        assert!(
            !outcomes.is_empty(),
            "forced outcome sequence must be non-empty"
        );
        Self { outcomes, next: 0 }
    }
}

impl OutcomeSource for Forced {
    fn choose(&mut self, _: &[f64; 3]) -> Outcome {
        let o = self.outcomes[self.next.min(self.outcomes.len() - 1)];
        self.next += 1;
        o
    }
}

/// Born-rule sampling from a seeded generator.
#[derive(Clone, Debug)]
pub struct Sampled<R>(pub R);

impl<R: Rng> OutcomeSource for Sampled<R> {
    fn choose(&mut self, probabilities: &[f64; 3]) -> Outcome {
        let total: f64 = probabilities.iter().sum();
        let u: f64 = self.0.random::<f64>() * total;
        let mut acc = 0.0;
        for (o, p) in Outcome::ALL.iter().zip(probabilities) {
            acc += p;
            if u < acc {
                return *o;
            }
        }
        Outcome::Id
    }
}

#[derive(Clone, Debug)]
pub struct SiteMeasurement {
    pub outcome: Outcome,
    pub probability: f64,
    pub probabilities: [f64; 3],
    pub state: State,
}

/// Measures the qutrit in factor 0 and contracts it away.
pub fn measure_site(
    state: &State,
    basis: &QutritBasis,
    source: &mut impl OutcomeSource,
) -> Result<SiteMeasurement> {
    if state.dims().first() != Some(&3) {
        return Err(Error::WrongShape {
            expected: "leading qutrit",
            found: state.dims().to_vec(),
        });
    }
    let local = state.reduced(&[0])?;
    let total = local.trace();
    let mut probabilities = [0.0; 3];
    for (p, k) in probabilities.iter_mut().zip(basis.states()) {
        *p = (local.expectation_ket(k)? / total).max(0.0);
    }
    let outcome = source.choose(&probabilities);
    let (post, probability) = state.project(&LocalOperator::bra(0, basis.state(outcome)))?;
    Ok(SiteMeasurement {
        outcome,
        probability,
        probabilities,
        state: post,
    })
}

/// P ρ P.
pub fn apply_pauli(rho: &DensityOperator, p: Pauli) -> DensityOperator {
    rho.conjugated(&p.matrix())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateOutcome {
    pub outcome: Outcome,
    pub probability: f64,
    pub raw_readout: DensityOperator,
    pub corrected_readout: DensityOperator,
    pub correction_applied: Pauli,
}

impl GateOutcome {
    pub fn raw_bloch(&self) -> BlochVector {
        self.raw_readout
            .bloch_vector()
            .expect("single-qubit readout")
    }

    pub fn corrected_bloch(&self) -> BlochVector {
        self.corrected_readout
            .bloch_vector()
            .expect("single-qubit readout")
    }
}

/// Measures the last qutrit of a prepared single-qutrit wire (dims [3, 2]).
pub fn measure_qutrit(
    state: &State,
    basis: &QutritBasis,
    source: &mut impl OutcomeSource,
) -> Result<GateOutcome> {
    if state.dims() != [3, 2] {
        return Err(Error::WrongShape {
            expected: "qutrit ⊗ readout qubit",
            found: state.dims().to_vec(),
        });
    }
    let m = measure_site(state, basis, source)?;
    let raw = m.state.to_density();
    let correction = basis.correction(m.outcome);
    Ok(GateOutcome {
        outcome: m.outcome,
        probability: m.probability,
        corrected_readout: apply_pauli(&raw, correction),
        raw_readout: raw,
        correction_applied: correction,
    })
}

/// One rotation on a single-qutrit chain.
pub fn run_rotation_gate_on(
    chain: &ChainState,
    input: &Ket,
    axis: Axis,
    theta: f64,
    source: &mut impl OutcomeSource,
) -> Result<GateOutcome> {
    if chain.n_qutrits != 1 {
        return Err(Error::ChainLength(chain.n_qutrits, 1));
    }
    let prepared = prepare_logical_input(chain, input)?;
    measure_qutrit(&prepared.state, &rotation_basis(axis, theta), source)
}

/// One rotation with a forced outcome on a fresh single-qutrit chain.
pub fn run_rotation_gate(
    input: &Ket,
    axis: Axis,
    theta: f64,
    outcome: Outcome,
    noise: Option<&NoiseModel>,
) -> Result<GateOutcome> {
    let chain = build_chain(1, noise)?;
    run_rotation_gate_on(&chain, input, axis, theta, &mut Forced::always(outcome))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub axis: Axis,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepKind {
    /// Attempt at program rotation `index`.
    Rotation { index: usize },
    /// θ = 0 measurement moving the logical qubit towards the readout.
    Teleport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireStep {
    pub site: usize,
    #[serde(flatten)]
    pub kind: StepKind,
    pub axis: Axis,
    pub theta: f64,
    /// Angle actually measured after feed-forward of the current frame.
    pub theta_measured: f64,
    pub outcome: Outcome,
    pub probability: f64,
    /// Frame after this step.
    pub frame: Pauli,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum WireStatus {
    Completed,
    /// Qutrits ran out before every rotation succeeded.
    Exhausted {
        completed_rotations: usize,
        program_length: usize,
    },
}

#[derive(Clone, Debug)]
pub struct WireRun {
    pub status: WireStatus,
    pub transcript: Vec<WireStep>,
    pub preparation_probability: f64,
    pub frame: Pauli,
    pub raw_readout: DensityOperator,
    /// Readout with the accumulated frame undone.
    pub corrected_readout: DensityOperator,
}

impl WireRun {
    pub fn completed(&self) -> bool {
        self.status == WireStatus::Completed
    }

    /// Number of qutrits spent on program rotation `index`.
    pub fn attempts(&self, index: usize) -> usize {
        self.transcript
            .iter()
            .filter(|s| s.kind == StepKind::Rotation { index })
            .count()
    }
}

/// Runs `program` along the wire. An `id` outcome re-attempts the same
/// rotation on the next qutrit; once the program is done the remaining
/// qutrits are measured at θ = 0. Measurement angles are adapted to the
/// frame so that every success realizes the requested rotation.
pub fn run_wire(
    chain: &ChainState,
    input: &Ket,
    program: &[Rotation],
    source: &mut impl OutcomeSource,
) -> Result<WireRun> {
    if program.len() > chain.n_qutrits {
        return Err(Error::ProgramTooLong {
            program: program.len(),
            chain: chain.n_qutrits,
        });
    }
    let prepared = prepare_logical_input(chain, input)?;
    let mut state = prepared.state;
    let mut frame = Pauli::I;
    let mut next = 0;
    let mut transcript = Vec::with_capacity(chain.n_qutrits);
    for site in 1..=chain.n_qutrits {
        let (kind, rotation) = match program.get(next) {
            Some(r) => (StepKind::Rotation { index: next }, *r),
            None => (
                StepKind::Teleport,
                Rotation {
                    axis: Axis::X,
                    theta: 0.0,
                },
            ),
        };
        let flip = !frame.commutes_with(rotation.axis.pauli());
        let theta_measured = if flip {
            -rotation.theta
        } else {
            rotation.theta
        };
        let basis = rotation_basis(rotation.axis, theta_measured);
        let m = measure_site(&state, &basis, source)?;
        frame = basis.correction(m.outcome).compose(frame);
        if matches!(kind, StepKind::Rotation { .. }) && m.outcome.is_rotation() {
            next += 1;
        }
        transcript.push(WireStep {
            site,
            kind,
            axis: rotation.axis,
            theta: rotation.theta,
            theta_measured,
            outcome: m.outcome,
            probability: m.probability,
            frame,
        });
        state = m.state;
    }
    let status = if next == program.len() {
        WireStatus::Completed
    } else {
        WireStatus::Exhausted {
            completed_rotations: next,
            program_length: program.len(),
        }
    };
    let raw = state.to_density();
    Ok(WireRun {
        status,
        transcript,
        preparation_probability: prepared.probability,
        frame,
        corrected_readout: apply_pauli(&raw, frame),
        raw_readout: raw,
    })
}

/// Corrected Bloch vectors of the `outcome` readout for the given input,
/// for every axis and angle of `thetas`.
pub fn bloch_scan(
    input: &Ket,
    outcome: Outcome,
    thetas: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<Vec<(Axis, f64, BlochVector)>> {
    let chain = build_chain(1, noise)?;
    let mut rows = Vec::with_capacity(3 * thetas.len());
    for axis in Axis::ALL {
        for &theta in thetas {
            let g = run_rotation_gate_on(&chain, input, axis, theta, &mut Forced::always(outcome))?;
            rows.push((axis, theta, g.corrected_bloch()));
        }
    }
    Ok(rows)
}
