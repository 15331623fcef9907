use super::matrix::CMatrix;
use super::state::{embed, pauli_observable, qubit_projector, BlochVector, DensityMatrix, Subsystem};
use super::QuantumError;

/// `Tr(ρ (a·σ ⊗ b·σ))` for a two-qubit state.
pub fn spatial_correlator(
    rho: &DensityMatrix,
    a: &BlochVector,
    b: &BlochVector,
) -> Result<f64, QuantumError> {
    if rho.dim() != 4 {
        return Err(QuantumError::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    rho.expectation(&pauli_observable(a).kron(&pauli_observable(b)))
}

/// Joint probabilities `P(a, then b)` of two projective measurements on one
/// qubit, with Lüders collapse in between. Indexed `[a == +1][b == +1]`.
pub fn sequential_probabilities(
    rho: &DensityMatrix,
    subsystem: Subsystem,
    first: &BlochVector,
    second: &BlochVector,
) -> Result<[[f64; 2]; 2], QuantumError> {
    let dim = rho.dim();
    let mut out = [[0.0; 2]; 2];
    for (ia, a) in [(0, -1i8), (1, 1)] {
        let p = embed(&qubit_projector(first, a), subsystem, dim)?;
        let collapsed: CMatrix = &(&p * rho.matrix()) * &p;
        for (ib, b) in [(0, -1i8), (1, 1)] {
            let q = embed(&qubit_projector(second, b), subsystem, dim)?;
            out[ia][ib] = collapsed.trace_product_re(&q);
        }
    }
    Ok(out)
}

/// `Σ_{a,b} a·b·P(a, then b)` by the full Lüders sum. For qubits this is
/// `first·second` whatever the state.
pub fn sequential_correlator(
    rho: &DensityMatrix,
    subsystem: Subsystem,
    first: &BlochVector,
    second: &BlochVector,
) -> Result<f64, QuantumError> {
    let p = sequential_probabilities(rho, subsystem, first, second)?;
    Ok(p[1][1] + p[0][0] - p[0][1] - p[1][0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{random_direction, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singlet_anticorrelation() {
        let z = BlochVector::z_axis();
        assert!((spatial_correlator(&DensityMatrix::singlet(), &z, &z).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn singlet_is_minus_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let (a, b) = (random_direction(&mut rng), random_direction(&mut rng));
            let v = spatial_correlator(&DensityMatrix::singlet(), &a, &b).unwrap();
            assert!((v + a.dot(&b)).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let [na, nb, a, b] = std::array::from_fn(|_| random_direction(&mut rng));
            let v = spatial_correlator(&DensityMatrix::product(&na, &nb), &a, &b).unwrap();
            assert!((v - a.dot(&na) * b.dot(&nb)).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_state_is_uncorrelated() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let (a, b) = (random_direction(&mut rng), random_direction(&mut rng));
            assert!(spatial_correlator(&rho, &a, &b).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn repeated_and_orthogonal_measurements() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let rho = random_state(&mut rng, 4);
            let n = random_direction(&mut rng);
            for s in [Subsystem::A, Subsystem::B] {
                assert!((sequential_correlator(&rho, s, &n, &n).unwrap() - 1.0).abs() < 1e-12);
                let v = sequential_correlator(&rho, s, &BlochVector::z_axis(), &BlochVector::x_axis()).unwrap();
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn state_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let first = BlochVector::in_xz_plane(0.0);
        let second = BlochVector::in_xz_plane(std::f64::consts::FRAC_PI_4);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let rho = random_state(&mut rng, 4);
            let v = sequential_correlator(&rho, Subsystem::A, &first, &second).unwrap();
            worst = worst.max((v - std::f64::consts::FRAC_1_SQRT_2).abs());
            let one = random_state(&mut rng, 2);
            let (a, b) = (random_direction(&mut rng), random_direction(&mut rng));
            let v = sequential_correlator(&one, Subsystem::A, &a, &b).unwrap();
            worst = worst.max((v - a.dot(&b)).abs());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn sequential_magnitude_matches_singlet_cross_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let rho = DensityMatrix::singlet();
        for _ in 0..50 {
            let (a, b) = (random_direction(&mut rng), random_direction(&mut rng));
            let seq = sequential_correlator(&rho, Subsystem::B, &a, &b).unwrap();
            let spa = spatial_correlator(&rho, &a, &b).unwrap();
            assert!((seq.abs() - spa.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn subsystem_b_rejected_on_one_qubit() {
        let rho = DensityMatrix::qubit(&BlochVector::z_axis());
        let z = BlochVector::z_axis();
        assert!(sequential_correlator(&rho, Subsystem::B, &z, &z).is_err());
        assert!(spatial_correlator(&rho, &z, &z).is_err());
    }
}
