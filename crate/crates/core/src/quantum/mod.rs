//! Exact qubit algebra: observables, one- and two-qubit states, spatial and
//! sequential correlators, and the hybrid correlation operator.

mod correlator;
mod eigen;
mod evaluate;
mod hybrid;
mod matrix;
mod state;

pub use correlator::{sequential_correlator, sequential_probabilities, spatial_correlator};
pub use eigen::{hermitian_eigenvalues, operator_norm, HERMITIAN_TOL};
pub use evaluate::{evaluate_inequality_quantum, term_value, TermAssignment, TermRule};
pub use hybrid::{
    build_f_operator, envelope_branch_max, envelope_settings, hybrid_f_product, hybrid_f_singlet,
    s2_squared_identity, tsirelson_envelope, validate_settings, FOperator, HybridSettings,
    HYBRID_SOURCE,
};
pub use matrix::CMatrix;
pub use state::{
    embed, pauli_observable, qubit_projector, sigma_dot, BlochVector, DensityMatrix, Subsystem,
    UNIT_TOL,
};

use crate::dsl::VariableId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error("direction has norm {norm}, expected 1")]
    NonUnitVector { norm: f64 },
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("no setting for `{0}`")]
    MissingSetting(VariableId),
    #[error("no evaluation rule for {0}")]
    MissingAssignment(String),
}

#[cfg(test)]
pub(crate) fn random_direction(rng: &mut rand_chacha::ChaCha8Rng) -> BlochVector {
    use rand::Rng;
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 0.01 && n2 <= 1.0 {
            return BlochVector::normalized(v[0], v[1], v[2]).unwrap();
        }
    }
}

/// `G G† / Tr(G G†)` for a random complex `G`.
#[cfg(test)]
pub(crate) fn random_state(rng: &mut rand_chacha::ChaCha8Rng, dim: usize) -> DensityMatrix {
    use rand::Rng;
    let mut g = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    let m = &g * &g.dagger();
    let t = m.trace().re;
    let mut m = m.scale_re(1.0 / t);
    for i in 0..dim {
        for j in i + 1..dim {
            let v = m[(j, i)].conj();
            m[(i, j)] = v;
        }
        let d = m[(i, i)].re;
        m[(i, i)] = num_complex::Complex64::new(d, 0.0);
    }
    DensityMatrix::new(m).unwrap()
}
