//! Per-gate readout tomography and fidelity tables.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::counts::{poisson_draw, QubitSetting, QUBIT_SETTINGS};
use super::estimator::{ml_fit, LikelihoodProblem, ReconstructionOptions};
use crate::chain::{build_chain, ChainState};
use crate::error::Result;
use crate::mbqc::{
    apply_pauli, rotation_basis, run_rotation_gate_on, Axis, Forced, LogicalInput, Outcome,
};
use crate::optics::NoiseModel;
use crate::quantum::{DensityOperator, State};

/// Readout counts for one (input, rotation, outcome) combination, indexed
/// like [`QubitSetting::ALL`]. Values may be fractional for exact
/// expected-count data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub input: LogicalInput,
    pub axis: Axis,
    pub theta: f64,
    pub outcome: Outcome,
    pub counts: [Option<f64>; QUBIT_SETTINGS],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRow {
    pub input: LogicalInput,
    pub axis: Axis,
    pub theta: f64,
    pub outcome: Outcome,
    /// Against the ideal-chain prediction.
    pub fidelity_th: Option<f64>,
    /// Against the prediction from the supplied reconstructed chain.
    pub fidelity_exp: Option<f64>,
    pub incomplete: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateAverage {
    pub axis: Axis,
    pub outcome: Outcome,
    pub rows: usize,
    pub fidelity_th: Option<f64>,
    pub fidelity_exp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub rows: Vec<GateRow>,
    /// Outcome-major, axis-minor; only complete rows contribute.
    pub averages: Vec<GateAverage>,
    pub overall_th: Option<f64>,
    pub overall_exp: Option<f64>,
    /// Share of readout counts per outcome (plus, minus, id).
    pub outcome_frequencies: [f64; 3],
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn predicted(chain: &ChainState, r: &GateRecord) -> Result<DensityOperator> {
    let gate = run_rotation_gate_on(
        chain,
        &r.input.ket(),
        r.axis,
        r.theta,
        &mut Forced::always(r.outcome),
    )?;
    Ok(gate.corrected_readout)
}

fn evaluate(
    r: &GateRecord,
    ideal: &ChainState,
    experimental: Option<&ChainState>,
    options: &ReconstructionOptions,
) -> Result<(f64, Option<f64>)> {
    let fit = ml_fit(&LikelihoodProblem::single_qubit(&r.counts), options)?;
    let correction = rotation_basis(r.axis, r.theta).correction(r.outcome);
    let corrected = apply_pauli(&fit.rho, correction);
    let th = corrected.fidelity(&predicted(ideal, r)?)?;
    let exp = experimental
        .map(|chain| predicted(chain, r).and_then(|rho| corrected.fidelity(&rho)))
        .transpose()?;
    Ok((th, exp))
}

/// Fits each record, applies its Pauli correction and compares with the
/// ideal prediction and, when `experimental` is given, with the prediction
/// from that single-qutrit chain state.
pub fn gate_fidelity_report(
    records: &[GateRecord],
    experimental: Option<&DensityOperator>,
    options: &ReconstructionOptions,
) -> Result<GateReport> {
    let ideal = build_chain(1, None)?;
    let experimental = experimental
        .map(|rho| ChainState::from_state(State::Mixed(rho.clone())))
        .transpose()?;
    let rows: Vec<GateRow> = records
        .iter()
        .map(|r| {
            let incomplete = r.counts.iter().any(Option::is_none);
            let (fidelity_th, fidelity_exp, error) =
                match evaluate(r, &ideal, experimental.as_ref(), options) {
                    Ok((th, exp)) => (Some(th), exp, None),
                    Err(e) => (None, None, Some(e.to_string())),
                };
            GateRow {
                input: r.input,
                axis: r.axis,
                theta: r.theta,
                outcome: r.outcome,
                fidelity_th,
                fidelity_exp,
                incomplete,
                error,
            }
        })
        .collect();

    let usable = |row: &&GateRow| !row.incomplete && row.fidelity_th.is_some();
    let averages = Outcome::ALL
        .iter()
        .flat_map(|&outcome| Axis::ALL.iter().map(move |&axis| (outcome, axis)))
        .filter_map(|(outcome, axis)| {
            let group: Vec<&GateRow> = rows
                .iter()
                .filter(usable)
                .filter(|row| row.axis == axis && row.outcome == outcome)
                .collect();
            (!group.is_empty()).then(|| GateAverage {
                axis,
                outcome,
                rows: group.len(),
                fidelity_th: mean(group.iter().filter_map(|row| row.fidelity_th)),
                fidelity_exp: mean(group.iter().filter_map(|row| row.fidelity_exp)),
            })
        })
        .collect();
    let overall_th = mean(rows.iter().filter(usable).filter_map(|row| row.fidelity_th));
    let overall_exp = mean(
        rows.iter()
            .filter(usable)
            .filter_map(|row| row.fidelity_exp),
    );
    Ok(GateReport {
        rows,
        averages,
        overall_th,
        overall_exp,
        outcome_frequencies: outcome_frequencies(records),
    })
}

/// Share of all readout counts falling under each outcome.
pub fn outcome_frequencies(records: &[GateRecord]) -> [f64; 3] {
    let mut sums = [0.0; 3];
    for r in records {
        sums[r.outcome.index()] += r.counts.iter().flatten().sum::<f64>();
    }
    let total: f64 = sums.iter().sum();
    if total > 0.0 {
        sums.map(|s| s / total)
    } else {
        sums
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountMode {
    /// Expected counts, unrounded.
    Exact,
    Poisson {
        seed: u64,
    },
}

/// Readout counts for every input × rotation × outcome. The mean count for
/// readout setting a is n0 · π(outcome) · ⟨a|ρ_raw|a⟩.
pub fn simulate_gate_campaign(
    inputs: &[LogicalInput],
    rotations: &[(Axis, f64)],
    noise: Option<&NoiseModel>,
    n0: f64,
    mode: CountMode,
) -> Result<Vec<GateRecord>> {
    let chain = build_chain(1, noise)?;
    let mut rng = match mode {
        CountMode::Poisson { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        CountMode::Exact => None,
    };
    let mut records = Vec::with_capacity(inputs.len() * rotations.len() * 3);
    for &input in inputs {
        for &(axis, theta) in rotations {
            for outcome in Outcome::ALL {
                let gate = run_rotation_gate_on(
                    &chain,
                    &input.ket(),
                    axis,
                    theta,
                    &mut Forced::always(outcome),
                )?;
                let mut counts = [None; QUBIT_SETTINGS];
                for (slot, q) in counts.iter_mut().zip(QubitSetting::ALL) {
                    let rate =
                        n0 * gate.probability * gate.raw_readout.expectation_ket(&q.ket())?;
                    *slot = Some(match rng.as_mut() {
                        Some(rng) => poisson_draw(rate, rng) as f64,
                        None => rate,
                    });
                }
                records.push(GateRecord {
                    input,
                    axis,
                    theta,
                    outcome,
                    counts,
                });
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbqc::ANGLE_GRID;

    #[test]
    fn ideal_campaign_is_perfect() {
        let rotations: Vec<_> = Axis::ALL.iter().map(|&a| (a, ANGLE_GRID[3])).collect();
        let records =
            simulate_gate_campaign(&LogicalInput::ALL, &rotations, None, 1e4, CountMode::Exact)
                .unwrap();
        let report =
            gate_fidelity_report(&records, None, &ReconstructionOptions::default()).unwrap();
        for row in &report.rows {
            assert!(row.fidelity_th.unwrap() > 1.0 - 1e-6, "{row:?}");
        }
        assert_eq!(report.averages.len(), 9);
        for f in report.outcome_frequencies {
            assert!((f - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn missing_setting_flags_row() {
        let mut records = simulate_gate_campaign(
            &[LogicalInput::H],
            &[(Axis::X, 0.3)],
            None,
            1e3,
            CountMode::Exact,
        )
        .unwrap();
        records[0].counts[5] = None;
        let report =
            gate_fidelity_report(&records, None, &ReconstructionOptions::default()).unwrap();
        assert!(report.rows[0].incomplete);
        assert!(!report.rows[1].incomplete);
        assert_eq!(report.averages.iter().map(|a| a.rows).sum::<usize>(), 2);
    }
}
