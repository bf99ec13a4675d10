//! Linear-inversion estimate, as a baseline and warm start for the ML fit.

use nalgebra::{DMatrix, DVector};

use super::estimator::LikelihoodProblem;
use crate::error::{Error, Result};
use crate::quantum::{c, CMatrix, CVector, DensityOperator, EIGEN_FLOOR};

#[derive(Clone, Debug)]
pub struct LinearEstimate {
    /// Unit trace, Hermitian, possibly not positive.
    pub rho: DensityOperator,
    pub min_eigenvalue: f64,
    pub nonpositive: bool,
}

/// Least squares for X in n_s ≈ ⟨e_s|X|e_s⟩ over a Hermitian basis of d²
/// real parameters, then ρ = X / Tr X.
pub fn linear_inversion(problem: &LikelihoodProblem) -> Result<LinearEstimate> {
    let d: usize = problem.dims.iter().product();
    let obs = &problem.observations;
    let params = d * d;
    if obs.len() < params {
        return Err(Error::Singular(format!(
            "{} observations for {} parameters",
            obs.len(),
            params
        )));
    }
    let vectors: Vec<CVector> = obs
        .iter()
        .map(|o| o.vector.amps() * c(o.efficiency.sqrt(), 0.0))
        .collect();
    let design = hermitian_design(&vectors);
    let rhs = DVector::from_iterator(obs.len(), obs.iter().map(|o| o.count));
    let svd = design.svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if !(max > 0.0) || min / max < 1e-10 {
        return Err(Error::Singular(
            "settings are not informationally complete".into(),
        ));
    }
    let x = svd
        .solve(&rhs, 1e-12 * max)
        .map_err(|e| Error::Singular(e.to_string()))?;

    let m = hermitian_from_params(d, x.as_slice());
    let trace = m.trace().re;
    if !(trace > 0.0) {
        return Err(Error::Singular(format!("reconstructed trace {trace}")));
    }
    let rho = DensityOperator::from_matrix(problem.dims.clone(), m * c(1.0 / trace, 0.0))?;
    let min_eigenvalue = rho.eigenvalues()[0];
    Ok(LinearEstimate {
        nonpositive: min_eigenvalue < -EIGEN_FLOOR,
        rho,
        min_eigenvalue,
    })
}

/// Row s holds the coefficients of ⟨e_s|X|e_s⟩ in the real parameters of a
/// Hermitian X: diagonal entries, then Re and Im of each upper entry.
pub(crate) fn hermitian_design(vectors: &[CVector]) -> DMatrix<f64> {
    let d = vectors.first().map_or(0, |v| v.len());
    let mut design = DMatrix::<f64>::zeros(vectors.len(), d * d);
    for (s, e) in vectors.iter().enumerate() {
        for i in 0..d {
            design[(s, i)] = e[i].norm_sqr();
        }
        let mut col = d;
        for i in 0..d {
            for j in (i + 1)..d {
                let z = e[i].conj() * e[j];
                design[(s, col)] = 2.0 * z.re;
                design[(s, col + 1)] = -2.0 * z.im;
                col += 2;
            }
        }
    }
    design
}

/// Inverse of the parameterisation used by [`hermitian_design`].
pub(crate) fn hermitian_from_params(d: usize, x: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = c(x[i], 0.0);
    }
    let mut col = d;
    for i in 0..d {
        for j in (i + 1)..d {
            // x_re (E_ij + E_ji) + x_im i(E_ij − E_ji)
            m[(i, j)] = c(x[col], x[col + 1]);
            m[(j, i)] = c(x[col], -x[col + 1]);
            col += 2;
        }
    }
    m
}

pub(crate) fn params_from_hermitian(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut x: Vec<f64> = (0..d).map(|i| m[(i, i)].re).collect();
    for i in 0..d {
        for j in (i + 1)..d {
            x.push(m[(i, j)].re);
            x.push(m[(i, j)].im);
        }
    }
    x
}
