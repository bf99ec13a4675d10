//! AKLT wire construction: n + 1 singlets with each neighbouring pair of
//! qubits projected onto its symmetric (triplet) subspace.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::optics::{mode_mismatch_kraus, werner_singlet, NoiseModel};
use crate::quantum::{
    c, project, CMatrix, DensityOperator, Ket, LocalOperator, Projected, QuantumState, State,
};

/// Longest pure chain (state dimension 2·3⁶·2 = 5832).
pub const MAX_QUTRITS: usize = 6;
/// Longest mixed chain (density operator side 2·3³·2 = 108).
pub const MAX_NOISY_QUTRITS: usize = 3;

/// (|HV⟩ − |VH⟩)/√2.
pub fn make_singlet() -> Ket {
    Ket::from_real(vec![2, 2], &[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).expect("static singlet")
}

/// 3×4 isometry |0⟩⟨HH| + |1⟩(⟨HV| + ⟨VH|)/√2 + |2⟩⟨VV|.
pub fn symmetric_isometry() -> CMatrix {
    let r = FRAC_1_SQRT_2;
    let o = c(0.0, 0.0);
    CMatrix::from_row_slice(
        3,
        4,
        &[
            c(1.0, 0.0),
            o,
            o,
            o,
            o,
            c(r, 0.0),
            c(r, 0.0),
            o,
            o,
            o,
            o,
            c(1.0, 0.0),
        ],
    )
}

fn symmetrizer(first: usize) -> LocalOperator {
    LocalOperator::new(first, vec![2, 2], vec![3], symmetric_isometry()).expect("isometry shape")
}

/// Projects a two-qubit state onto the triplet subspace, mapped to a qutrit.
pub fn symmetrize_pair<S: QuantumState>(state: &S) -> Result<Projected<S>> {
    if state.dims() != [2, 2] {
        return Err(Error::WrongShape {
            expected: "two-qubit",
            found: state.dims().to_vec(),
        });
    }
    project(state, &symmetrizer(0))
}

/// Boundary qubit ⊗ n qutrits ⊗ boundary qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub n_qutrits: usize,
    pub state: State,
    /// Probability that every triplet projection succeeded.
    pub build_probability: f64,
}

impl ChainState {
    pub fn dims(&self) -> Vec<usize> {
        chain_dims(self.n_qutrits)
    }

    pub fn ket(&self) -> Option<&Ket> {
        match &self.state {
            State::Pure(k) => Some(k),
            State::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> DensityOperator {
        self.state.to_density()
    }

    /// Wraps an externally obtained 12-dimensional (or longer) state, e.g. a
    /// tomographic reconstruction, as a chain.
    pub fn from_state(state: State) -> Result<Self> {
        let dims = state.dims().to_vec();
        let n = dims.len().saturating_sub(2);
        if n == 0 || dims != chain_dims(n) {
            return Err(Error::WrongShape {
                expected: "qubit ⊗ qutrits ⊗ qubit",
                found: dims,
            });
        }
        Ok(Self {
            n_qutrits: n,
            state,
            build_probability: 1.0,
        })
    }
}

pub fn chain_dims(n: usize) -> Vec<usize> {
    let mut dims = vec![2];
    dims.extend(std::iter::repeat_n(3, n));
    dims.push(2);
    dims
}

fn check_length(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::ChainLength(n, max));
    }
    Ok(())
}

/// Phase convention: ⟨H,1,…,1,V|ψ⟩ real and positive.
fn phase_anchor(n: usize) -> Vec<usize> {
    let mut digits = vec![0];
    digits.extend(std::iter::repeat_n(1, n));
    digits.push(1);
    digits
}

/// Ideal AKLT wire with `n` qutrits, built left to right.
pub fn build_aklt(n: usize) -> Result<ChainState> {
    check_length(n, MAX_QUTRITS)?;
    let singlet = make_singlet();
    let mut state = singlet.clone();
    let mut probability = 1.0;
    for k in 1..=n {
        state = state.tensor(&singlet);
        let step = project(&state, &symmetrizer(k))?;
        state = step.state;
        probability *= step.probability;
    }
    Ok(ChainState {
        n_qutrits: n,
        state: State::Pure(state.with_phase_fixed_at(&phase_anchor(n))),
        build_probability: probability,
    })
}

/// Builds the wire from all n + 1 singlets at once, symmetrizing the bonds in
/// `order` (a permutation of 0..n, bond j joining singlets j and j + 1).
pub fn build_aklt_in_order(n: usize, order: &[usize]) -> Result<ChainState> {
    check_length(n, MAX_QUTRITS)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::WrongShape {
            expected: "permutation of bond indices",
            found: order.to_vec(),
        });
    }
    let singlet = make_singlet();
    let mut state = singlet.clone();
    for _ in 0..n {
        state = state.tensor(&singlet);
    }
    let mut done = vec![false; n];
    let mut probability = 1.0;
    for &bond in order {
        // Bond j starts at qubit 2j + 1; each earlier merged bond shifts it left.
        let shift = done[..bond].iter().filter(|&&d| d).count();
        let step = project(&state, &symmetrizer(2 * bond + 1 - shift))?;
        state = step.state;
        probability *= step.probability;
        done[bond] = true;
    }
    Ok(ChainState {
        n_qutrits: n,
        state: State::Pure(state.with_phase_fixed_at(&phase_anchor(n))),
        build_probability: probability,
    })
}

/// Wire built from Werner singlets, with mode-overlap noise at every
/// symmetrizing splitter. The build probability uses the normalization of
/// the direct triplet projection, so an ideal model reproduces
/// [`build_aklt`] exactly.
pub fn build_aklt_noisy(n: usize, noise: &NoiseModel) -> Result<ChainState> {
    noise.validate()?;
    check_length(n, MAX_NOISY_QUTRITS)?;
    let singlet = werner_singlet(noise.werner_p)?;
    // Splitter Kraus operators rescaled by √2 to the direct-projection
    // normalization.
    let kraus_at = |first: usize| -> Result<Vec<LocalOperator>> {
        mode_mismatch_kraus(noise.mode_overlap)?
            .into_iter()
            .map(|m| {
                LocalOperator::new(
                    first,
                    vec![2, 2],
                    vec![3],
                    m * c(std::f64::consts::SQRT_2, 0.0),
                )
            })
            .collect()
    };
    let mut state = singlet.clone();
    let mut probability = 1.0;
    for k in 1..=n {
        state = state.tensor(&singlet);
        let before = state.trace();
        let mapped = state.apply_kraus(&kraus_at(k)?)?;
        let p = mapped.trace() / before;
        if !(p >= crate::quantum::NULL_OUTCOME) {
            return Err(Error::NullOutcome { probability: p });
        }
        state = mapped.normalized()?;
        probability *= p;
    }
    Ok(ChainState {
        n_qutrits: n,
        state: State::Mixed(state),
        build_probability: probability,
    })
}

/// Chain as a pure state when the noise model is ideal, mixed otherwise.
pub fn build_chain(n: usize, noise: Option<&NoiseModel>) -> Result<ChainState> {
    match noise {
        Some(model) if !model.is_ideal() => build_aklt_noisy(n, model),
        _ => build_aklt(n),
    }
}
