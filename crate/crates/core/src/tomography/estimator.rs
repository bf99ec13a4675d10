//! Maximum-likelihood reconstruction.
//!
//! The measurement operators E_s = e_s e_s† are whitened with
//! G = Σ_s E_s, so that the whitened operators resolve the identity, and the
//! iterate σ = G^{1/2} ρ G^{1/2} is updated by congruence σ ← KσK† with
//! K = I + t∇/N. Writing σ = T†T this is T ← TK, so positivity is kept by
//! construction; t = 1 is the plain RρR step and t is adapted so the
//! likelihood never decreases.

use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use super::counts::{CountTable, MeasurementSetting, SettingModel, QUBIT_SETTINGS};
use super::linear::{hermitian_design, hermitian_from_params, params_from_hermitian};
use crate::error::{Error, Result};
use crate::optics::TOMO_SETTINGS;
use crate::quantum::{c, hermitian_eigen, map_psd, CMatrix, CVector, DensityOperator, Ket};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Likelihood {
    /// Independent Poisson counts with one fitted global scale N₀.
    Poisson,
    /// Multinomial within each group of mutually exclusive outcomes.
    Multinomial,
}

/// How qutrit success probabilities enter the fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// p scales the measurement operator.
    FoldIn,
    /// Counts are divided by p and the operators are bare projectors.
    DivideCounts,
}

#[derive(Clone, Debug)]
pub struct ReconstructionOptions {
    pub likelihood: Likelihood,
    pub scaling: ScalingMode,
    pub max_iterations: usize,
    /// Stop once the log-likelihood gain per iteration, per count, drops
    /// below this.
    pub tolerance: f64,
    /// Warm start; mixed with a little white noise so that no direction is
    /// frozen out.
    pub initial: Option<DensityOperator>,
    /// White-noise weight mixed into `initial`.
    pub warm_start_mixing: f64,
    pub record_history: bool,
}

pub const DEFAULT_MAX_ITERATIONS: usize = 5000;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_WARM_START_MIXING: f64 = 1e-3;
const RANK_TOLERANCE: f64 = 1e-10;
const MAX_STEP: f64 = 8.0;
const MIN_STEP: f64 = 1e-12;

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            likelihood: Likelihood::Poisson,
            scaling: ScalingMode::FoldIn,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            initial: None,
            warm_start_mixing: DEFAULT_WARM_START_MIXING,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub rho: DensityOperator,
    /// Profile log-likelihood at the estimate (constant terms in the counts
    /// dropped).
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Fitted global scale.
    pub n0: f64,
    /// The settings do not span the operator space.
    pub rank_deficient: bool,
    pub warnings: Vec<String>,
    /// Log-likelihood after every accepted iteration, when recorded.
    pub history: Vec<f64>,
}

/// One outcome: operator e e† with e = √efficiency · vector.
#[derive(Clone, Debug)]
pub struct Observation {
    pub vector: Ket,
    pub efficiency: f64,
    pub count: f64,
    /// Outcomes sharing a group form one multinomial trial.
    pub group: usize,
}

/// Observations over a fixed Hilbert space.
#[derive(Clone, Debug)]
pub struct LikelihoodProblem {
    pub dims: Vec<usize>,
    pub observations: Vec<Observation>,
}

impl LikelihoodProblem {
    /// Tomography data over the 12-dimensional chain; `values` gives the
    /// (possibly fractional) count for each setting, `None` when absent.
    pub fn tomography(
        values: impl Fn(&MeasurementSetting) -> Option<f64>,
        scaling: ScalingMode,
    ) -> Self {
        let model = SettingModel::new();
        let observations = MeasurementSetting::all()
            .filter_map(|s| {
                let count = values(&s)?;
                let p = model.success_probability(s.qutrit);
                let group = (s.qubit1.basis() * 3 + s.qubit4.basis()) * TOMO_SETTINGS + s.qutrit;
                let (efficiency, count) = match scaling {
                    ScalingMode::FoldIn => (p, count),
                    ScalingMode::DivideCounts => (1.0, count / p),
                };
                Some(Observation {
                    vector: model.vector(&s),
                    efficiency,
                    count,
                    group,
                })
            })
            .collect();
        Self {
            dims: vec![2, 3, 2],
            observations,
        }
    }

    pub fn from_table(table: &CountTable, scaling: ScalingMode) -> Self {
        Self::tomography(|s| table.get(s).map(|n| n as f64), scaling)
    }

    /// Single-qubit tomography over {H, V, P, M, R, L}.
    pub fn single_qubit(counts: &[Option<f64>; QUBIT_SETTINGS]) -> Self {
        let observations = super::counts::QubitSetting::ALL
            .iter()
            .zip(counts)
            .filter_map(|(q, n)| {
                n.map(|count| Observation {
                    vector: q.ket(),
                    efficiency: 1.0,
                    count,
                    group: q.basis(),
                })
            })
            .collect();
        Self {
            dims: vec![2],
            observations,
        }
    }

    fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn total(&self) -> f64 {
        self.observations.iter().map(|o| o.count).sum()
    }
}

/// Precomputed whitened design.
struct Whitened {
    /// Row s is w_s† with w_s = G^{-1/2} e_s.
    rows: CMatrix,
    counts: Vec<f64>,
    groups: Vec<usize>,
    group_totals: Vec<f64>,
    g_sqrt: CMatrix,
    g_inv_sqrt: CMatrix,
    rank_deficient: bool,
    total: f64,
}

impl Whitened {
    fn new(problem: &LikelihoodProblem, likelihood: Likelihood) -> Result<Self> {
        let d = problem.dim();
        let obs = &problem.observations;
        if obs.is_empty() {
            return Err(Error::Data("no observations".into()));
        }
        for o in obs {
            if o.vector.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: o.vector.dim(),
                });
            }
            if !(o.count >= 0.0) || !o.count.is_finite() {
                return Err(Error::Data(format!("invalid count {}", o.count)));
            }
        }
        let total: f64 = obs.iter().map(|o| o.count).sum();
        if !(total > 0.0) {
            return Err(Error::Data("all counts are zero".into()));
        }
        let e: Vec<CVector> = obs
            .iter()
            .map(|o| o.vector.amps() * c(o.efficiency.sqrt(), 0.0))
            .collect();
        let mut g = CMatrix::zeros(d, d);
        for v in &e {
            g += v * v.adjoint();
        }
        let (values, _) = hermitian_eigen(&g);
        let max = values.iter().copied().fold(0.0, f64::max);
        let cut = RANK_TOLERANCE * max;
        let rank_deficient = values[0] <= cut || !spans_operator_space(&e);
        let g_sqrt = map_psd(&g, f64::sqrt);
        let g_inv_sqrt = map_psd(&g, |l| if l > cut { 1.0 / l.sqrt() } else { 0.0 });
        let mut rows = CMatrix::zeros(obs.len(), d);
        for (s, v) in e.iter().enumerate() {
            let w = &g_inv_sqrt * v;
            for j in 0..d {
                rows[(s, j)] = w[j].conj();
            }
        }
        let groups: Vec<usize> = match likelihood {
            Likelihood::Poisson => vec![0; obs.len()],
            Likelihood::Multinomial => {
                // Relabel to 0..k.
                let mut labels: Vec<usize> = obs.iter().map(|o| o.group).collect();
                labels.sort_unstable();
                labels.dedup();
                obs.iter()
                    .map(|o| labels.binary_search(&o.group).expect("present"))
                    .collect()
            }
        };
        let n_groups = groups.iter().max().map_or(0, |m| m + 1);
        let mut group_totals = vec![0.0; n_groups];
        for (g, o) in groups.iter().zip(obs) {
            group_totals[*g] += o.count;
        }
        Ok(Self {
            rows,
            counts: obs.iter().map(|o| o.count).collect(),
            groups,
            group_totals,
            g_sqrt,
            g_inv_sqrt,
            rank_deficient,
            total,
        })
    }

    /// f_s = w_s† σ w_s.
    fn frequencies(&self, sigma: &CMatrix) -> Vec<f64> {
        let a_sigma = &self.rows * sigma;
        (0..self.rows.nrows())
            .map(|s| {
                let mut acc = 0.0;
                for j in 0..self.rows.ncols() {
                    acc += (a_sigma[(s, j)] * self.rows[(s, j)].conj()).re;
                }
                acc
            })
            .collect()
    }

    fn group_sums(&self, f: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.group_totals.len()];
        for (g, fs) in self.groups.iter().zip(f) {
            sums[*g] += fs;
        }
        sums
    }

    /// Σ n ln f − Σ_g N_g ln F_g; −∞ if an observed outcome has zero weight.
    fn log_likelihood(&self, f: &[f64]) -> f64 {
        let sums = self.group_sums(f);
        let mut l = 0.0;
        for (n, fs) in self.counts.iter().zip(f) {
            if *n > 0.0 {
                if *fs <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                l += n * fs.ln();
            }
        }
        for (n, fg) in self.group_totals.iter().zip(&sums) {
            if *n > 0.0 {
                l -= n * fg.ln();
            }
        }
        l
    }

    /// Poisson profile value: the scale-free form plus N ln N − N.
    fn report(&self, l: f64, likelihood: Likelihood) -> f64 {
        match likelihood {
            Likelihood::Poisson => l + self.total * self.total.ln() - self.total,
            Likelihood::Multinomial => l,
        }
    }

    fn gradient(&self, f: &[f64]) -> CMatrix {
        let sums = self.group_sums(f);
        let d = self.rows.ncols();
        let mut weighted = self.rows.clone();
        for s in 0..self.rows.nrows() {
            let g = self.groups[s];
            let ratio = if self.counts[s] > 0.0 {
                self.counts[s] / f[s]
            } else {
                0.0
            };
            let w = ratio - self.group_totals[g] / sums[g];
            for j in 0..d {
                weighted[(s, j)] *= w;
            }
        }
        // Σ_s c_s w_s w_s† = A† diag(c) A with rows of A equal to w_s†.
        self.rows.adjoint() * weighted
    }
}

/// Whether the rank-1 operators e e† span all d × d Hermitian matrices.
fn spans_operator_space(e: &[CVector]) -> bool {
    let d = e[0].len();
    if e.len() < d * d {
        return false;
    }
    let mut gram = CMatrix::zeros(d * d, d * d);
    for v in e {
        let flat = CVector::from_iterator(d * d, (0..d * d).map(|k| v[k / d] * v[k % d].conj()));
        gram += &flat * flat.adjoint();
    }
    let (values, _) = hermitian_eigen(&gram);
    let max = values.last().copied().unwrap_or(0.0);
    values[0] > RANK_TOLERANCE * max
}

const NEWTON_STEPS: usize = 50;

/// Newton ascent on the Hermitian parameters of σ at unit trace. Yields the
/// accepted iterates; stops on the first step that cannot be made positive
/// and likelihood-increasing.
fn newton_steps(w: &Whitened, sigma: &CMatrix, start: f64) -> Vec<(CMatrix, f64)> {
    let d = sigma.nrows();
    let p = d * d;
    let vectors: Vec<CVector> = (0..w.rows.nrows())
        .map(|s| w.rows.row(s).adjoint())
        .collect();
    let a = hermitian_design(&vectors);
    let mut x = DVector::from_vec(params_from_hermitian(sigma));
    let mut l = start;
    let mut out = Vec::new();
    for _ in 0..NEWTON_STEPS {
        let f = &a * &x;
        let sums = w.group_sums(f.as_slice());
        let mut r = DVector::zeros(f.len());
        let mut curvature = DVector::zeros(f.len());
        for s in 0..f.len() {
            let g = w.groups[s];
            let n = w.counts[s];
            r[s] = if n > 0.0 { n / f[s] } else { 0.0 } - w.group_totals[g] / sums[g];
            curvature[s] = if n > 0.0 { n / (f[s] * f[s]) } else { 0.0 };
        }
        let grad = a.transpose() * &r;
        let mut scaled = a.clone();
        for (s, mut row) in scaled.row_iter_mut().enumerate() {
            row *= curvature[s];
        }
        let mut kkt = DMatrix::<f64>::zeros(p + 1, p + 1);
        let hessian = -(a.transpose() * scaled);
        kkt.view_mut((0, 0), (p, p)).copy_from(&hessian);
        let mut group_rows = DMatrix::<f64>::zeros(w.group_totals.len(), p);
        for s in 0..f.len() {
            let mut row = group_rows.row_mut(w.groups[s]);
            row += a.row(s);
        }
        for (g, row) in group_rows.row_iter().enumerate() {
            let weight = w.group_totals[g] / (sums[g] * sums[g]);
            let outer = row.transpose() * row * weight;
            let mut block = kkt.view_mut((0, 0), (p, p));
            block += outer;
        }
        for i in 0..d {
            kkt[(i, p)] = 1.0;
            kkt[(p, i)] = 1.0;
        }
        let mut rhs = DVector::zeros(p + 1);
        rhs.rows_mut(0, p).copy_from(&(-grad));
        let Some(solution) = kkt.lu().solve(&rhs) else {
            break;
        };
        let dx = solution.rows(0, p).into_owned();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cx = &x + &dx * t;
            let m = hermitian_from_params(d, cx.as_slice());
            if hermitian_eigen(&m).0[0] >= 0.0 {
                let cl = w.log_likelihood(&w.frequencies(&m));
                if cl > l {
                    accepted = Some((cx, m, cl));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cx, m, cl)) = accepted else { break };
        let gain = cl - l;
        x = cx;
        l = cl;
        out.push((m, cl));
        if gain / w.total < 1e-15 {
            break;
        }
    }
    out
}

fn best_truncation(w: &Whitened, sigma: &CMatrix, current: f64) -> Option<(CMatrix, f64)> {
    let d = sigma.nrows();
    let (values, vectors) = hermitian_eigen(sigma);
    let mut best: Option<(CMatrix, f64)> = None;
    for rank in 1..d {
        let mut m = CMatrix::zeros(d, d);
        for k in (d - rank)..d {
            let v = vectors.column(k);
            m += &v * v.adjoint() * c(values[k].max(0.0), 0.0);
        }
        if !(m.trace().re > 0.0) {
            continue;
        }
        let m = normalize_trace(m);
        let l = w.log_likelihood(&w.frequencies(&m));
        if l > best.as_ref().map_or(current, |b| b.1) {
            best = Some((m, l));
        }
    }
    best
}

fn normalize_trace(m: CMatrix) -> CMatrix {
    let t = m.trace().re;
    let h = (&m + m.adjoint()) * c(0.5 / t, 0.0);
    h
}

/// Maximum-likelihood fit of an arbitrary observation set.
pub fn ml_fit(
    problem: &LikelihoodProblem,
    options: &ReconstructionOptions,
) -> Result<ReconstructionResult> {
    let d = problem.dim();
    let w = Whitened::new(problem, options.likelihood)?;
    let mut warnings = Vec::new();
    if w.rank_deficient {
        warnings.push("measurement settings are not informationally complete; the estimate is confined to their span".into());
    }

    let mut sigma = match &options.initial {
        Some(rho) => {
            if rho.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: rho.dim(),
                });
            }
            let warm = normalize_trace(&w.g_sqrt * rho.matrix() * &w.g_sqrt);
            let eps = options.warm_start_mixing;
            warm * c(1.0 - eps, 0.0) + CMatrix::identity(d, d) * c(eps / d as f64, 0.0)
        }
        None => CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0),
    };
    let mut f = w.frequencies(&sigma);
    let mut l = w.log_likelihood(&f);
    if !l.is_finite() {
        // A warm start can miss observed outcomes entirely; fall back.
        sigma = CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0);
        f = w.frequencies(&sigma);
        l = w.log_likelihood(&f);
    }
    let mut history = Vec::new();
    if options.record_history {
        history.push(w.report(l, options.likelihood));
    }
    let mut iterations = 0;
    let identity = CMatrix::identity(d, d);
    let mut step = 1.0;
    let mut converged = false;
    while iterations < options.max_iterations {
        iterations += 1;
        let grad = w.gradient(&f) * c(1.0 / w.total, 0.0);
        let mut accepted = false;
        while step >= MIN_STEP {
            let k = &identity + &grad * c(step, 0.0);
            let candidate = normalize_trace(&k * &sigma * k.adjoint());
            let cf = w.frequencies(&candidate);
            let cl = w.log_likelihood(&cf);
            if cl >= l {
                let gain = cl - l;
                sigma = candidate;
                f = cf;
                l = cl;
                accepted = true;
                if gain / w.total < options.tolerance {
                    // An overshooting long step can gain nothing away from
                    // the optimum, so only a stalled plain step counts.
                    if step == 1.0 {
                        converged = true;
                    }
                    step = 1.0;
                } else {
                    step = (step * 1.5).min(MAX_STEP);
                }
                break;
            }
            step *= 0.5;
        }
        if options.record_history && accepted {
            history.push(w.report(l, options.likelihood));
        }
        if !accepted {
            // No ascent along the update direction at any step size: stationary.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        warnings.push(format!(
            "iteration cap {} reached before convergence",
            options.max_iterations
        ));
    }
    // The ascent is first order and slow to settle on ill-conditioned data;
    // finish with constrained Newton steps while they stay positive.
    for (candidate, cl) in newton_steps(&w, &sigma, l) {
        sigma = candidate;
        l = cl;
        iterations += 1;
        if options.record_history {
            history.push(w.report(l, options.likelihood));
        }
    }
    // The ascent crawls toward rank-deficient optima, so also try the
    // low-rank truncations of the iterate and keep any that score higher.
    if let Some((candidate, cl)) = best_truncation(&w, &sigma, l) {
        sigma = candidate;
        l = cl;
        if options.record_history {
            history.push(w.report(l, options.likelihood));
        }
    }

    let rho_m = normalize_trace(&w.g_inv_sqrt * &sigma * &w.g_inv_sqrt);
    let rho = DensityOperator::from_matrix(problem.dims.clone(), rho_m)?;
    // Σ_s Tr(ρ E_s) = Tr(ρ G).
    let g = &w.g_sqrt * &w.g_sqrt;
    let expected_total = rho.expectation(&g).re;
    let n0 = w.total / expected_total;
    Ok(ReconstructionResult {
        rho,
        log_likelihood: w.report(l, options.likelihood),
        iterations,
        converged,
        n0,
        rank_deficient: w.rank_deficient,
        warnings,
        history,
    })
}

/// Maximum-likelihood reconstruction of the 12-dimensional chain state.
pub fn ml_reconstruct(
    counts: &CountTable,
    options: &ReconstructionOptions,
) -> Result<ReconstructionResult> {
    ml_fit(
        &LikelihoodProblem::from_table(counts, options.scaling),
        options,
    )
}
