//! Photonic layer: biphoton qutrits, the symmetrizing 50:50 splitter, the
//! two-polarizer qutrit analyser and singlet noise.
//!
//! Bosonic states are kept in the three-dimensional symmetric sector. The
//! only Fock facts needed are the √2 normalization of a doubly occupied mode
//! and the 1/√2 routing amplitude of the splitter.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::chain::{make_singlet, symmetric_isometry};
use crate::error::{Error, Result};
use crate::mbqc::{Axis, Outcome};
use crate::quantum::{
    c, project, CMatrix, DensityOperator, Ket, LocalOperator, Projected, C64, NULL_OUTCOME,
};

/// Norm of a†a†|vac⟩.
pub const DOUBLE_OCCUPATION: f64 = std::f64::consts::SQRT_2;
/// Amplitude for one photon to take a given output of the 50:50 splitter.
pub const SPLITTER_AMPLITUDE: f64 = FRAC_1_SQRT_2;

/// arccos(1/√3).
pub fn xi() -> f64 {
    (1.0 / 3.0_f64.sqrt()).acos()
}

/// arccos(√(2/3)).
pub fn eta() -> f64 {
    (2.0_f64 / 3.0).sqrt().acos()
}

/// Polarizer pair: photon m is projected on cos α_m |H⟩ + e^{iχ_m} sin α_m |V⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub alpha1: f64,
    pub chi1: f64,
    pub alpha2: f64,
    pub chi2: f64,
}

impl AnalyzerSetting {
    pub const fn new(alpha1: f64, chi1: f64, alpha2: f64, chi2: f64) -> Self {
        Self {
            alpha1,
            chi1,
            alpha2,
            chi2,
        }
    }
}

/// Qutrit state heralded by a coincidence, with its success probability.
#[derive(Clone, Debug, PartialEq)]
pub struct QutritProjection {
    pub target: Ket,
    pub success_probability: f64,
}

/// Unnormalized qutrit amplitudes obtained by propagating the two polarizer
/// states back through the analyser splitter.
pub fn backprop_amplitudes(s: &AnalyzerSetting) -> [C64; 3] {
    let (s1, c1) = s.alpha1.sin_cos();
    let (s2, c2) = s.alpha2.sin_cos();
    let e1 = C64::from_polar(1.0, s.chi1);
    let e2 = C64::from_polar(1.0, s.chi2);
    [
        c(c1 * c2 * FRAC_1_SQRT_2, 0.0),
        (e1 * c2 * s1 + e2 * c1 * s2) * 0.5,
        e1 * e2 * (s1 * s2 * FRAC_1_SQRT_2),
    ]
}

/// Normalized heralded qutrit state, phase fixed so that its first non-zero
/// amplitude is real and positive.
pub fn backprop_projector(s: &AnalyzerSetting) -> Result<QutritProjection> {
    let amps = backprop_amplitudes(s);
    let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if !(p >= NULL_OUTCOME) {
        return Err(Error::DegenerateSetting);
    }
    let pivot = amps
        .iter()
        .copied()
        .find(|a| a.norm() > 1e-12)
        .unwrap_or(amps[0]);
    let phase = pivot.conj() / pivot.norm();
    let norm = p.sqrt();
    let target = Ket::new(vec![3], amps.iter().map(|a| a * phase / norm).collect())?;
    Ok(QutritProjection {
        target,
        success_probability: p,
    })
}

/// Analyser settings realizing the rotation-basis states.
///
/// The third row of the published table is labeled as an x rotation, but its
/// entries produce the z basis; it is used for `Axis::Z`.
pub fn rotation_analyzer_settings(axis: Axis, theta: f64, outcome: Outcome) -> AnalyzerSetting {
    use Outcome::*;
    let t = theta;
    match (axis, outcome) {
        (Axis::X, Plus) => {
            AnalyzerSetting::new((t - PI) / 4.0, FRAC_PI_2, (3.0 * PI - t) / 4.0, -FRAC_PI_2)
        }
        (Axis::X, Minus) => {
            AnalyzerSetting::new(t / 4.0, FRAC_PI_2, FRAC_PI_2 - t / 4.0, -FRAC_PI_2)
        }
        (Axis::X, Id) => AnalyzerSetting::new(FRAC_PI_4, PI, 3.0 * FRAC_PI_4, -PI),
        (Axis::Y, Plus) => AnalyzerSetting::new(t / 4.0, PI, FRAC_PI_2 + t / 4.0, -PI),
        (Axis::Y, Minus) => AnalyzerSetting::new((PI - t) / 4.0, 0.0, (3.0 * PI - t) / 4.0, 0.0),
        (Axis::Y, Id) => AnalyzerSetting::new(FRAC_PI_4, FRAC_PI_2, FRAC_PI_4, -FRAC_PI_2),
        (Axis::Z, Plus) => AnalyzerSetting::new(-FRAC_PI_4, -t / 2.0, FRAC_PI_4, -t / 2.0),
        (Axis::Z, Minus) => {
            AnalyzerSetting::new(-FRAC_PI_4, (PI - t) / 2.0, FRAC_PI_4, (PI - t) / 2.0)
        }
        (Axis::Z, Id) => AnalyzerSetting::new(0.0, FRAC_PI_2, FRAC_PI_2, -FRAC_PI_2),
    }
}

/// One column of the over-complete qutrit tomography set.
#[derive(Clone, Debug)]
pub struct TomographySetting {
    pub label: &'static str,
    pub setting: AnalyzerSetting,
    /// Success probability as printed in the settings table.
    pub table_p: f64,
    /// The labeled qutrit state (unit norm, phase as written in the label).
    pub nominal: Ket,
}

/// Number of qutrit settings in the tomography set.
pub const TOMO_SETTINGS: usize = 15;

/// Column `(|2⟩−|0⟩)/√2` exactly as printed. It back-propagates onto |0⟩ with
/// p = 1/2, inconsistent with both its label and its p entry; the corrected
/// values are used by [`tomo_analyzer_settings`].
pub const PRINTED_TWO_MINUS_ZERO: AnalyzerSetting =
    AnalyzerSetting::new(PI, -FRAC_PI_4, 0.0, FRAC_PI_4);

/// The fifteen tomography analyser settings in table order.
pub fn tomo_analyzer_settings() -> Vec<TomographySetting> {
    let (x, e) = (xi(), eta());
    let h = FRAC_PI_2;
    let q = FRAC_PI_4;
    let r = FRAC_1_SQRT_2;
    let o = c(0.0, 0.0);
    let one = c(r, 0.0);
    let i = c(0.0, r);
    let rows: [(&'static str, [f64; 4], f64, [C64; 3]); TOMO_SETTINGS] = [
        ("|0>", [0.0, 0.0, 0.0, 0.0], 0.5, [c(1.0, 0.0), o, o]),
        ("|1>", [0.0, 0.0, h, 0.0], 0.25, [o, c(1.0, 0.0), o]),
        ("|2>", [h, 0.0, h, 0.0], 0.5, [o, o, c(1.0, 0.0)]),
        (
            "(|0>+|1>)/sqrt2",
            [0.0, 0.0, x, 0.0],
            1.0 / 3.0,
            [one, one, o],
        ),
        (
            "(|0>-|1>)/sqrt2",
            [0.0, 0.0, x, PI],
            1.0 / 3.0,
            [one, -one, o],
        ),
        (
            "(|1>+|2>)/sqrt2",
            [h, 0.0, e, 0.0],
            1.0 / 3.0,
            [o, one, one],
        ),
        (
            "(|1>-|2>)/sqrt2",
            [h, 0.0, e, PI],
            1.0 / 3.0,
            [o, one, -one],
        ),
        ("(|2>+|0>)/sqrt2", [-q, h, q, h], 0.25, [one, o, one]),
        ("(|2>-|0>)/sqrt2", [-q, 0.0, q, 0.0], 0.25, [-one, o, one]),
        ("(|0>+i|1>)/sqrt2", [0.0, 0.0, x, h], 1.0 / 3.0, [one, i, o]),
        (
            "(|0>-i|1>)/sqrt2",
            [0.0, 0.0, x, -h],
            1.0 / 3.0,
            [one, -i, o],
        ),
        ("(|1>+i|2>)/sqrt2", [h, 0.0, e, h], 1.0 / 3.0, [o, one, i]),
        ("(|1>-i|2>)/sqrt2", [h, 0.0, e, -h], 1.0 / 3.0, [o, one, -i]),
        ("(|2>+i|0>)/sqrt2", [-q, q, q, q], 0.25, [i, o, one]),
        ("(|2>-i|0>)/sqrt2", [-q, -q, q, -q], 0.25, [-i, o, one]),
    ];
    rows.into_iter()
        .map(
            |(label, [a1, c1, a2, c2], table_p, amps)| TomographySetting {
                label,
                setting: AnalyzerSetting::new(a1, c1, a2, c2),
                table_p,
                nominal: Ket::new(vec![3], amps.to_vec()).expect("static qutrit"),
            },
        )
        .collect()
}

/// Output of both photons leaving one splitter port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitterPort {
    C,
    D,
}

/// Routing probabilities of a two-photon input at the symmetrizing splitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitterRouting {
    pub both_c: f64,
    pub both_d: f64,
    pub split: f64,
}

impl SplitterRouting {
    pub fn total(&self) -> f64 {
        self.both_c + self.both_d + self.split
    }
}

/// Unnormalized biphoton amplitudes in `port` for photon 1 entering input a
/// and photon 2 entering input b, with a† → (c† + d†)/√2, b† → (c† − d†)/√2.
fn port_amplitudes(psi: &[C64], port: SplitterPort) -> [C64; 3] {
    let sign = match port {
        SplitterPort::C => 1.0,
        SplitterPort::D => -1.0,
    };
    let route = SPLITTER_AMPLITUDE * SPLITTER_AMPLITUDE * sign;
    [
        psi[0] * route * DOUBLE_OCCUPATION,
        (psi[1] + psi[2]) * route,
        psi[3] * route * DOUBLE_OCCUPATION,
    ]
}

fn check_two_qubit(dims: &[usize]) -> Result<()> {
    if dims != [2, 2] {
        return Err(Error::WrongShape {
            expected: "two-qubit",
            found: dims.to_vec(),
        });
    }
    Ok(())
}

/// Probabilities for both photons in c, both in d, or one in each.
pub fn splitter_routing(input: &Ket) -> Result<SplitterRouting> {
    check_two_qubit(input.dims())?;
    let psi = input.amps().as_slice();
    let weight = |a: [C64; 3]| a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    // One photon per port: ½ Σ (ψ_ji − ψ_ij) c†_i d†_j over ordered pairs.
    let split: f64 = [(0, 1), (1, 0)]
        .iter()
        .map(|&(i, j)| (0.5 * (psi[2 * j + i] - psi[2 * i + j])).norm_sqr())
        .sum();
    Ok(SplitterRouting {
        both_c: weight(port_amplitudes(psi, SplitterPort::C)),
        both_d: weight(port_amplitudes(psi, SplitterPort::D)),
        split,
    })
}

/// Post-selects both photons in `port`; returns the biphoton qutrit and the
/// post-selection probability.
pub fn symmetrize_via_bs_port(input: &Ket, port: SplitterPort) -> Result<Projected<Ket>> {
    check_two_qubit(input.dims())?;
    let amps = port_amplitudes(input.amps().as_slice(), port);
    let probability: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>() / input.norm_sqr();
    if !(probability >= NULL_OUTCOME) {
        return Err(Error::NullOutcome { probability });
    }
    let state = Ket::new(vec![3], amps.to_vec())?.normalized()?;
    Ok(Projected { state, probability })
}

/// Both photons in output c.
pub fn symmetrize_via_bs(input: &Ket) -> Result<Projected<Ket>> {
    symmetrize_via_bs_port(input, SplitterPort::C)
}

/// Two-photon interference at the splitter for mode overlap `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomResult {
    /// Probability of one photon in each output.
    pub coincidence_probability: f64,
    /// Probability of both photons in the same output.
    pub bunching_probability: f64,
    pub visibility: f64,
}

/// Identically polarized photons whose modes overlap with |⟨a|b⟩|² = v.
pub fn hom_coincidence(v: f64) -> Result<HomResult> {
    check_unit_range("mode_overlap", v)?;
    let coincidence = |v: f64| 0.5 * (1.0 - v);
    let coincidence_probability = coincidence(v);
    let classical = coincidence(0.0);
    Ok(HomResult {
        coincidence_probability,
        bunching_probability: 1.0 - coincidence_probability,
        visibility: (classical - coincidence_probability) / classical,
    })
}

fn check_unit_range(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ParameterRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// p|ψ⁻⟩⟨ψ⁻| + (1 − p) I/4.
pub fn werner_singlet(p: f64) -> Result<DensityOperator> {
    check_unit_range("werner_p", p)?;
    let s = make_singlet().to_density();
    let m = s.matrix() * c(p, 0.0) + CMatrix::identity(4, 4) * c((1.0 - p) / 4.0, 0.0);
    DensityOperator::from_matrix(vec![2, 2], m)
}

/// Werner parameter whose singlet fidelity (1 + 3p)/4 equals `fidelity`.
pub fn werner_p_for_fidelity(fidelity: f64) -> Result<f64> {
    let p = (4.0 * fidelity - 1.0) / 3.0;
    check_unit_range("werner_p", p)?;
    Ok(p)
}

/// Per-singlet Werner mixing and splitter mode overlap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub werner_p: f64,
    pub mode_overlap: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::IDEAL
    }
}

impl NoiseModel {
    pub const IDEAL: NoiseModel = NoiseModel {
        werner_p: 1.0,
        mode_overlap: 1.0,
    };

    pub fn new(werner_p: f64, mode_overlap: f64) -> Result<Self> {
        let model = Self {
            werner_p,
            mode_overlap,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_range("werner_p", self.werner_p)?;
        check_unit_range("mode_overlap", self.mode_overlap)
    }

    pub fn is_ideal(&self) -> bool {
        self.werner_p == 1.0 && self.mode_overlap == 1.0
    }
}

/// Kraus operators (4 → 3) of the one-port post-selection at a splitter with
/// mode overlap `v`, in the splitter's own normalization.
///
/// The indistinguishable fraction is the ideal symmetrizer scaled by the
/// routing amplitude. The distinguishable fraction fires with probability
/// 1/4 for every input; its symmetric part keeps the coherent map and its
/// antisymmetric part lands on the qutrit as white noise. At v = 1 this
/// reduces to `symmetrize_via_bs`.
pub fn mode_mismatch_kraus(v: f64) -> Result<Vec<CMatrix>> {
    check_unit_range("mode_overlap", v)?;
    let iso = symmetric_isometry();
    let mut ops = vec![&iso * c(((1.0 + v) / 4.0).sqrt(), 0.0)];
    if v < 1.0 {
        let singlet = make_singlet();
        let bra = singlet.amps().adjoint();
        let scale = ((1.0 - v) / 12.0).sqrt();
        for k in 0..3 {
            let mut m = CMatrix::zeros(3, 4);
            for j in 0..4 {
                m[(k, j)] = bra[j] * scale;
            }
            ops.push(m);
        }
    }
    Ok(ops)
}

/// Applies [`mode_mismatch_kraus`] to a two-qubit density operator and
/// post-selects; the probability is in the splitter normalization.
pub fn symmetrize_mixed_via_bs(
    input: &DensityOperator,
    v: f64,
) -> Result<Projected<DensityOperator>> {
    check_two_qubit(input.dims())?;
    let kraus = mode_mismatch_kraus(v)?
        .into_iter()
        .map(|m| LocalOperator::new(0, vec![2, 2], vec![3], m))
        .collect::<Result<Vec<_>>>()?;
    let out = input.apply_kraus(&kraus)?;
    let probability = out.trace() / input.trace();
    if !(probability >= NULL_OUTCOME) {
        return Err(Error::NullOutcome { probability });
    }
    Ok(Projected {
        state: out.normalized()?,
        probability,
    })
}

/// Direct triplet projection, used for comparison with the splitter.
pub fn symmetrize_direct(input: &Ket) -> Result<Projected<Ket>> {
    let op = LocalOperator::new(0, vec![2, 2], vec![3], symmetric_isometry())?;
    project(input, &op)
}

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Analyser tables as CSV rows `label,alpha1,chi1,alpha2,chi2,p`, angles in
/// radians at 12 significant digits. Rotation rows are evaluated at `theta`.
pub fn settings_tables_csv(theta: f64) -> Result<String> {
    let mut out = String::from("label,alpha1,chi1,alpha2,chi2,p\n");
    let mut row = |label: &str, s: &AnalyzerSetting| -> Result<()> {
        let p = backprop_projector(s)?.success_probability;
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{}",
            sig12(s.alpha1),
            sig12(s.chi1),
            sig12(s.alpha2),
            sig12(s.chi2),
            sig12(p)
        );
        Ok(())
    };
    for axis in Axis::ALL {
        for outcome in Outcome::ALL {
            let s = rotation_analyzer_settings(axis, theta, outcome);
            row(&format!("R{}:{}", axis.label(), outcome.label()), &s)?;
        }
    }
    for t in tomo_analyzer_settings() {
        row(t.label, &t.setting)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbqc::rotation_basis;
    use approx::assert_abs_diff_eq;

    #[test]
    fn backprop_examples() {
        let p = backprop_projector(&AnalyzerSetting::new(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p.success_probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.target.amps()[0].re, 1.0, epsilon = 1e-15);

        let p = backprop_projector(&AnalyzerSetting::new(0.0, 0.0, FRAC_PI_2, 0.0)).unwrap();
        assert_abs_diff_eq!(p.success_probability, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p.target.amps()[1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_setting_rejected() {
        // A product of two polarizer states always has a symmetric part, so
        // only non-finite angles can fail.
        let s = AnalyzerSetting::new(f64::NAN, 0.0, 0.0, 0.0);
        assert!(matches!(
            backprop_projector(&s),
            Err(Error::DegenerateSetting)
        ));
    }

    #[test]
    fn printed_column_heralds_zero() {
        let p = backprop_projector(&PRINTED_TWO_MINUS_ZERO).unwrap();
        assert_abs_diff_eq!(p.success_probability, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.target.amps()[0].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tomography_targets_match_labels() {
        let table = tomo_analyzer_settings();
        assert_eq!(table.len(), TOMO_SETTINGS);
        for t in table {
            let proj = backprop_projector(&t.setting).unwrap();
            assert_abs_diff_eq!(proj.success_probability, t.table_p, epsilon = 1e-12);
            let overlap = proj.target.inner(&t.nominal).unwrap().norm();
            assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_rows_match_bases() {
        for axis in Axis::ALL {
            for k in 0..20 {
                let theta = -PI + 2.0 * PI * k as f64 / 19.0;
                let basis = rotation_basis(axis, theta);
                for outcome in Outcome::ALL {
                    let proj =
                        backprop_projector(&rotation_analyzer_settings(axis, theta, outcome))
                            .unwrap();
                    assert_abs_diff_eq!(proj.success_probability, 0.25, epsilon = 1e-12);
                    let overlap = proj.target.inner(basis.state(outcome)).unwrap().norm();
                    assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn splitter_examples() {
        let hh = Ket::basis(vec![2, 2], &[0, 0]).unwrap();
        let r = symmetrize_via_bs(&hh).unwrap();
        assert_abs_diff_eq!(r.probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.state.amps()[0].norm(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            symmetrize_via_bs(&make_singlet()),
            Err(Error::NullOutcome { .. })
        ));
        let routing = splitter_routing(&make_singlet()).unwrap();
        assert_abs_diff_eq!(routing.split, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hom_examples() {
        assert_abs_diff_eq!(hom_coincidence(1.0).unwrap().visibility, 1.0);
        assert_abs_diff_eq!(hom_coincidence(0.0).unwrap().visibility, 0.0);
        assert_abs_diff_eq!(
            hom_coincidence(0.957).unwrap().visibility,
            0.957,
            epsilon = 1e-15
        );
        assert!(hom_coincidence(1.2).is_err());
    }

    #[test]
    fn werner_examples() {
        let w = werner_singlet(1.0).unwrap();
        assert_abs_diff_eq!(
            w.expectation_ket(&make_singlet()).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let p = werner_p_for_fidelity(0.969).unwrap();
        assert_abs_diff_eq!(p, 0.9586666666666667, epsilon = 1e-15);
        let w = werner_singlet(p).unwrap();
        assert_abs_diff_eq!(
            w.expectation_ket(&make_singlet()).unwrap(),
            0.969,
            epsilon = 1e-12
        );
        let closed = ((3.0 * p - 1.0) / 2.0).powi(2);
        assert_abs_diff_eq!(w.tangle().unwrap(), closed, epsilon = 1e-9);
        assert!(werner_singlet(-0.1).is_err());
        assert!(NoiseModel::new(0.9, 1.5).is_err());
    }

    #[test]
    fn mode_mismatch_is_one_quarter_when_distinguishable() {
        for input in [make_singlet(), Ket::basis(vec![2, 2], &[0, 1]).unwrap()] {
            let r = symmetrize_mixed_via_bs(&input.to_density(), 0.0).unwrap();
            assert_abs_diff_eq!(r.probability, 0.25, epsilon = 1e-14);
        }
        let hv = Ket::basis(vec![2, 2], &[0, 1]).unwrap();
        let ideal = symmetrize_via_bs(&hv).unwrap();
        let channel = symmetrize_mixed_via_bs(&hv.to_density(), 1.0).unwrap();
        assert_abs_diff_eq!(channel.probability, ideal.probability, epsilon = 1e-14);
        assert_abs_diff_eq!(
            channel
                .state
                .trace_distance(&ideal.state.to_density())
                .unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn settings_csv_has_all_rows() {
        let csv = settings_tables_csv(PI / 2.0).unwrap();
        assert_eq!(csv.lines().count(), 1 + 9 + 15);
        assert!(csv.lines().nth(1).unwrap().starts_with("Rx:plus,"));
    }
}
