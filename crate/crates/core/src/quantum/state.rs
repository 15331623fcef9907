use serde::{Deserialize, Serialize};

use super::eigen::hermitian_eigenvalues;
use super::matrix::{c, CMatrix};
use super::QuantumError;

/// Unit vectors must have norm 1 within this tolerance.
pub const UNIT_TOL: f64 = 1e-12;
const STATE_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-10;

/// A unit vector giving a qubit measurement direction or pure-state axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl TryFrom<[f64; 3]> for BlochVector {
    type Error = QuantumError;

    fn try_from(v: [f64; 3]) -> Result<Self, QuantumError> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        [v.x, v.y, v.z]
    }
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, QuantumError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(QuantumError::NonUnitVector { norm });
        }
        Ok(Self { x, y, z })
    }

    /// Rescales any non-zero vector to unit length.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self, QuantumError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QuantumError::NonUnitVector { norm });
        }
        Ok(Self { x: x / norm, y: y / norm, z: z / norm })
    }

    pub fn x_axis() -> Self {
        Self { x: 1.0, y: 0.0, z: 0.0 }
    }

    pub fn y_axis() -> Self {
        Self { x: 0.0, y: 1.0, z: 0.0 }
    }

    pub fn z_axis() -> Self {
        Self { x: 0.0, y: 0.0, z: 1.0 }
    }

    /// Direction at `angle` from ẑ towards x̂ in the x–z plane.
    pub fn in_xz_plane(angle: f64) -> Self {
        Self { x: angle.sin(), y: 0.0, z: angle.cos() }
    }

    /// Polar angle `theta` from ẑ, azimuth `phi` from x̂.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        Self {
            x: theta.sin() * phi.cos(),
            y: theta.sin() * phi.sin(),
            z: theta.cos(),
        }
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Cross product; not unit in general.
    pub fn cross(&self, o: &Self) -> [f64; 3] {
        [
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        ]
    }

    pub fn negated(&self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }
}

/// `v·σ` for any real 3-vector.
pub fn sigma_dot(v: [f64; 3]) -> CMatrix {
    CMatrix::from_rows(vec![
        vec![c(v[2], 0.0), c(v[0], -v[1])],
        vec![c(v[0], v[1]), c(-v[2], 0.0)],
    ])
}

/// `n·σ`, the ±1-valued qubit observable along `n`.
pub fn pauli_observable(direction: &BlochVector) -> CMatrix {
    sigma_dot(direction.components())
}

/// Projector onto the `outcome` (±1) eigenspace of `n·σ`.
pub fn qubit_projector(direction: &BlochVector, outcome: i8) -> CMatrix {
    let s = f64::from(outcome);
    &CMatrix::identity(2).scale_re(0.5) + &pauli_observable(direction).scale_re(0.5 * s)
}

/// A one- or two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self, QuantumError> {
        let n = matrix.dim();
        if n != 2 && n != 4 {
            return Err(QuantumError::DimensionMismatch { expected: 4, found: n });
        }
        if !matrix.is_finite() {
            return Err(QuantumError::InvalidState("non-finite entry".into()));
        }
        let dev = matrix.hermitian_deviation();
        if dev > STATE_TOL {
            return Err(QuantumError::InvalidState(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let tr = matrix.trace();
        if (tr - c(1.0, 0.0)).norm() > STATE_TOL {
            return Err(QuantumError::InvalidState(format!("trace {}", tr.re)));
        }
        let low = hermitian_eigenvalues(&matrix)?[0];
        if low < -POSITIVITY_TOL {
            return Err(QuantumError::InvalidState(format!("negative eigenvalue {low:.3e}")));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `|ψ⟩⟨ψ|` for a normalized amplitude vector.
    pub fn pure(amplitudes: &[num_complex::Complex64]) -> Result<Self, QuantumError> {
        let n = amplitudes.len();
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::InvalidState(format!("amplitudes have norm² {norm}")));
        }
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = amplitudes[i] * amplitudes[j].conj();
            }
        }
        Self::new(m)
    }

    /// `(|01⟩ − |10⟩)/√2`.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::pure(&[c(0.0, 0.0), c(h, 0.0), c(-h, 0.0), c(0.0, 0.0)]).expect("valid state")
    }

    /// The pure qubit state with Bloch vector `n`.
    pub fn qubit(n: &BlochVector) -> Self {
        Self { matrix: qubit_projector(n, 1) }
    }

    /// `|n_A⟩⟨n_A| ⊗ |n_B⟩⟨n_B|`.
    pub fn product(n_a: &BlochVector, n_b: &BlochVector) -> Self {
        Self { matrix: qubit_projector(n_a, 1).kron(&qubit_projector(n_b, 1)) }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self, QuantumError> {
        Self::new(CMatrix::identity(dim).scale_re(1.0 / dim as f64))
    }

    /// `Σ wᵢ ρᵢ`; weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self, QuantumError> {
        let Some(first) = parts.first() else {
            return Err(QuantumError::InvalidState("empty mixture".into()));
        };
        let mut m = CMatrix::zeros(first.1.dim());
        for (w, rho) in parts {
            if rho.dim() != m.dim() {
                return Err(QuantumError::DimensionMismatch { expected: m.dim(), found: rho.dim() });
            }
            if *w < 0.0 {
                return Err(QuantumError::InvalidState("negative weight".into()));
            }
            m = &m + &rho.matrix.scale_re(*w);
        }
        Self::new(m)
    }

    /// `Re Tr(ρ O)`.
    pub fn expectation(&self, observable: &CMatrix) -> Result<f64, QuantumError> {
        if observable.dim() != self.dim() {
            return Err(QuantumError::DimensionMismatch { expected: self.dim(), found: observable.dim() });
        }
        Ok(self.matrix.trace_product_re(observable))
    }

    /// Reduced state of subsystem `A` or `B` of a two-qubit state.
    pub fn reduced(&self, subsystem: Subsystem) -> Result<Self, QuantumError> {
        if self.dim() != 4 {
            return Err(QuantumError::DimensionMismatch { expected: 4, found: self.dim() });
        }
        let mut m = CMatrix::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    m[(i, j)] += match subsystem {
                        Subsystem::A => self.matrix[(2 * i + k, 2 * j + k)],
                        Subsystem::B => self.matrix[(2 * k + i, 2 * k + j)],
                    };
                }
            }
        }
        Ok(Self { matrix: m })
    }
}

/// Which qubit of a two-qubit state an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Lifts a one-qubit operator to the register of dimension `dim` (2 or 4).
pub fn embed(op: &CMatrix, subsystem: Subsystem, dim: usize) -> Result<CMatrix, QuantumError> {
    match (dim, subsystem) {
        (2, Subsystem::A) => Ok(op.clone()),
        (4, Subsystem::A) => Ok(op.kron(&CMatrix::identity(2))),
        (4, Subsystem::B) => Ok(CMatrix::identity(2).kron(op)),
        _ => Err(QuantumError::DimensionMismatch { expected: 4, found: dim }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::eigen::hermitian_eigenvalues;
    use crate::quantum::random_direction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pauli_axes() {
        let z = pauli_observable(&BlochVector::z_axis());
        assert_eq!(z[(0, 0)], c(1.0, 0.0));
        assert_eq!(z[(1, 1)], c(-1.0, 0.0));
        let x = pauli_observable(&BlochVector::x_axis());
        assert_eq!(x[(0, 1)], c(1.0, 0.0));
        assert_eq!(x[(1, 0)], c(1.0, 0.0));
        assert_eq!(x[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn random_observables_are_involutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let o = pauli_observable(&random_direction(&mut rng));
            assert!((&o * &o).max_abs_diff(&CMatrix::identity(2)) < 1e-12);
            assert!(o.trace().norm() < 1e-15);
            let e = hermitian_eigenvalues(&o).unwrap();
            assert!((e[0] + 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_unit_vector() {
        assert!(matches!(BlochVector::new(1.0, 1.0, 0.0), Err(QuantumError::NonUnitVector { .. })));
    }

    #[test]
    fn states_validate() {
        assert_eq!(DensityMatrix::singlet().dim(), 4);
        let mut bad = CMatrix::identity(2);
        bad[(1, 1)] = c(-0.5, 0.0);
        bad[(0, 0)] = c(1.5, 0.0);
        assert!(DensityMatrix::new(bad).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(3).scale_re(1.0 / 3.0)).is_err());
        let mix = DensityMatrix::mixture(&[
            (0.5, DensityMatrix::singlet()),
            (0.5, DensityMatrix::maximally_mixed(4).unwrap()),
        ])
        .unwrap();
        assert!((mix.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singlet_reduces_to_mixed() {
        let r = DensityMatrix::singlet().reduced(Subsystem::B).unwrap();
        assert!(r.matrix().max_abs_diff(&CMatrix::identity(2).scale_re(0.5)) < 1e-15);
        let n = BlochVector::in_xz_plane(0.3);
        let p = DensityMatrix::product(&BlochVector::z_axis(), &n).reduced(Subsystem::B).unwrap();
        assert!(p.matrix().max_abs_diff(DensityMatrix::qubit(&n).matrix()) < 1e-15);
    }
}
