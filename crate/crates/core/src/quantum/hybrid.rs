use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use serde::{Deserialize, Serialize};

use super::matrix::CMatrix;
use super::state::{pauli_observable, sigma_dot, BlochVector};
use super::QuantumError;
use crate::dsl::{var, VariableId};

/// Hybrid source whose expansion is `⟨X1X2⟩ + ⟨X1Y2⟩ − ⟨X2Y1⟩ + ⟨Y1Y2⟩ <= 2`.
pub const HYBRID_SOURCE: &str = "(X2 - X1 + Y1)^2 + (X1 - Y2 + Y1)^2 >= 2";

/// The four measurement directions of the hybrid inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridSettings {
    pub x1: BlochVector,
    pub x2: BlochVector,
    pub y1: BlochVector,
    pub y2: BlochVector,
}

impl HybridSettings {
    /// Coplanar settings in the x–z plane, angles measured from ẑ.
    pub fn coplanar(x1: f64, x2: f64, y1: f64, y2: f64) -> Self {
        Self {
            x1: BlochVector::in_xz_plane(x1),
            x2: BlochVector::in_xz_plane(x2),
            y1: BlochVector::in_xz_plane(y1),
            y2: BlochVector::in_xz_plane(y2),
        }
    }

    /// `x̂2, x̂1, ŷ2, ŷ1` stepping by π/4 from ẑ, the order quoted for the
    /// hybrid protocol.
    pub fn quoted_ladder() -> Self {
        Self::coplanar(FRAC_PI_4, 0.0, 3.0 * FRAC_PI_4, FRAC_PI_2)
    }

    /// `x̂1, x̂2, ŷ1, ŷ2` stepping by π/4 from ẑ. With the literal trace
    /// `Tr(ρ A⊗B) = −a·b` this is the ladder on which the singlet reaches
    /// 2√2.
    pub fn singlet_ladder() -> Self {
        Self::coplanar(0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4)
    }

    /// Bob's directions reflected through the origin.
    pub fn with_reflected_bob(&self) -> Self {
        Self { y1: self.y1.negated(), y2: self.y2.negated(), ..*self }
    }

    pub fn as_map(&self) -> BTreeMap<VariableId, BlochVector> {
        [(var("X1"), self.x1), (var("X2"), self.x2), (var("Y1"), self.y1), (var("Y2"), self.y2)]
            .into_iter()
            .collect()
    }
}

/// Closed form of the hybrid value on `|n_A⟩|n_B⟩`:
/// `x̂1·x̂2 + (x̂1·n̂A)(ŷ2·n̂B) − (x̂2·n̂A)(ŷ1·n̂B) + ŷ1·ŷ2`.
pub fn hybrid_f_product(n_a: &BlochVector, n_b: &BlochVector, s: &HybridSettings) -> f64 {
    s.x1.dot(&s.x2) + s.x1.dot(n_a) * s.y2.dot(n_b) - s.x2.dot(n_a) * s.y1.dot(n_b)
        + s.y1.dot(&s.y2)
}

/// Closed form of the hybrid value on the singlet under the literal trace:
/// `x̂1·x̂2 − x̂1·ŷ2 + x̂2·ŷ1 + ŷ1·ŷ2`.
pub fn hybrid_f_singlet(s: &HybridSettings) -> f64 {
    s.x1.dot(&s.x2) - s.x1.dot(&s.y2) + s.x2.dot(&s.y1) + s.y1.dot(&s.y2)
}

/// `F̂ = S1 + S2` with `S1 = (x̂1·x̂2 + ŷ1·ŷ2)·I` and
/// `S2 = (x̂1·σ)⊗(ŷ2·σ) − (x̂2·σ)⊗(ŷ1·σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FOperator {
    pub f: CMatrix,
    pub s1: CMatrix,
    pub s2: CMatrix,
}

pub fn build_f_operator(s: &HybridSettings) -> FOperator {
    let s1 = CMatrix::identity(4).scale_re(s.x1.dot(&s.x2) + s.y1.dot(&s.y2));
    let s2 = &pauli_observable(&s.x1).kron(&pauli_observable(&s.y2))
        - &pauli_observable(&s.x2).kron(&pauli_observable(&s.y1));
    FOperator { f: &s1 + &s2, s1, s2 }
}

/// `2[I − (x̂1·x̂2)(ŷ1·ŷ2)·I − ((x̂1×x̂2)·σ)⊗((ŷ1×ŷ2)·σ)]`, which equals `S2²`.
pub fn s2_squared_identity(s: &HybridSettings) -> CMatrix {
    let id = CMatrix::identity(4);
    let scalar = id.scale_re(1.0 - s.x1.dot(&s.x2) * s.y1.dot(&s.y2));
    let cross = sigma_dot(s.x1.cross(&s.x2)).kron(&sigma_dot(s.y1.cross(&s.y2)));
    (&scalar - &cross).scale_re(2.0)
}

/// `|cos θ1 + cos θ2 + √2·√(1 − cos(θ1 − θ2))|`.
pub fn tsirelson_envelope(theta1: f64, theta2: f64) -> f64 {
    (theta1.cos() + theta2.cos() + SQRT_2 * (1.0 - (theta1 - theta2).cos()).max(0.0).sqrt()).abs()
}

/// Coplanar settings with `x̂1 = ŷ1 = ẑ`, `x̂2` at `θ1` and `ŷ2` at `θ2`, so
/// that `x̂1·x̂2 = cos θ1` and `ŷ1·ŷ2 = cos θ2`.
pub fn envelope_settings(theta1: f64, theta2: f64) -> HybridSettings {
    HybridSettings::coplanar(0.0, theta1, 0.0, theta2)
}

/// Largest of the envelope's four sign branches. `F̂` at
/// [`envelope_settings`] has eigenvalues `cos θ1 + cos θ2 ± √(2(1 − cos(θ1 ∓ θ2)))`,
/// so its norm is this maximum rather than the single branch.
pub fn envelope_branch_max(theta1: f64, theta2: f64) -> f64 {
    use std::f64::consts::PI;
    [
        tsirelson_envelope(theta1, theta2),
        tsirelson_envelope(theta1, -theta2),
        tsirelson_envelope(theta1 + PI, theta2 + PI),
        tsirelson_envelope(theta1 + PI, -theta2 + PI),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Checks every direction is a unit vector (for settings built by hand).
pub fn validate_settings(s: &HybridSettings) -> Result<(), QuantumError> {
    for v in [s.x1, s.x2, s.y1, s.y2] {
        let c = v.components();
        BlochVector::new(c[0], c[1], c[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_rs;
    use crate::poly::derive_inequality;
    use crate::quantum::{
        evaluate_inequality_quantum, operator_norm, random_direction, random_state, DensityMatrix,
        Subsystem, TermAssignment,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TSIRELSON: f64 = 2.0 * SQRT_2;

    fn hybrid() -> crate::poly::CorrelationInequality {
        derive_inequality(&parse_rs(HYBRID_SOURCE).unwrap()).unwrap().inequality
    }

    fn assignment() -> TermAssignment {
        TermAssignment::by_party(&hybrid(), &[('X', Subsystem::A), ('Y', Subsystem::B)]).unwrap()
    }

    fn random_settings(rng: &mut ChaCha8Rng) -> HybridSettings {
        HybridSettings {
            x1: random_direction(rng),
            x2: random_direction(rng),
            y1: random_direction(rng),
            y2: random_direction(rng),
        }
    }

    #[test]
    fn source_derives_hybrid_terms() {
        assert_eq!(hybrid().to_string(), "<X1X2> + <X1Y2> - <X2Y1> + <Y1Y2> <= 2");
    }

    #[test]
    fn singlet_reaches_tsirelson_on_its_ladder() {
        let s = HybridSettings::singlet_ladder();
        let v = evaluate_inequality_quantum(&hybrid(), &DensityMatrix::singlet(), &s.as_map(), &assignment()).unwrap();
        assert!((v - TSIRELSON).abs() < 1e-12, "{v}");
        assert!((hybrid_f_singlet(&s) - v).abs() < 1e-12);
    }

    #[test]
    fn quoted_ladder_needs_reflected_bob() {
        let s = HybridSettings::quoted_ladder();
        let m = |s: &HybridSettings| {
            evaluate_inequality_quantum(&hybrid(), &DensityMatrix::singlet(), &s.as_map(), &assignment()).unwrap()
        };
        assert!(m(&s).abs() < 1e-12);
        assert!((m(&s.with_reflected_bob()) - TSIRELSON).abs() < 1e-12);
    }

    #[test]
    fn product_state_value() {
        let s = HybridSettings::quoted_ladder();
        let v = hybrid_f_product(&s.y2, &s.y2, &s);
        assert!((v - 3.0 / SQRT_2).abs() < 1e-12);
        let rho = DensityMatrix::product(&s.y2, &s.y2);
        let m = evaluate_inequality_quantum(&hybrid(), &rho, &s.as_map(), &assignment()).unwrap();
        assert!((m - v).abs() < 1e-12);
    }

    #[test]
    fn product_closed_form_matches_matrix_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let s = random_settings(&mut rng);
            let (na, nb) = (random_direction(&mut rng), random_direction(&mut rng));
            let rho = DensityMatrix::product(&na, &nb);
            let m = evaluate_inequality_quantum(&hybrid(), &rho, &s.as_map(), &assignment()).unwrap();
            assert!((m - hybrid_f_product(&na, &nb, &s)).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_state_leaves_self_terms() {
        let s = HybridSettings::quoted_ladder();
        let n = BlochVector::y_axis();
        let v = hybrid_f_product(&n, &n, &s);
        assert!((v - (s.x1.dot(&s.x2) + s.y1.dot(&s.y2))).abs() < 1e-15);
    }

    #[test]
    fn degenerate_operator() {
        let z = BlochVector::z_axis();
        let x = BlochVector::x_axis();
        let s = HybridSettings { x1: z, x2: z, y1: x, y2: x };
        let f = build_f_operator(&s);
        assert!(f.s1.max_abs_diff(&CMatrix::identity(4).scale_re(2.0)) < 1e-15);
        assert!(f.s2.max_abs_diff(&CMatrix::zeros(4)) < 1e-15);
    }

    #[test]
    fn s2_squared_matches_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let s = random_settings(&mut rng);
            let f = build_f_operator(&s);
            let lhs = &f.s2 * &f.s2;
            assert!(lhs.max_abs_diff(&s2_squared_identity(&s)) < 1e-12);
            assert!(f.f.hermitian_deviation() < 1e-15);
        }
    }

    #[test]
    fn trace_of_f_matches_term_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let s = random_settings(&mut rng);
            let f = build_f_operator(&s);
            for rho in [DensityMatrix::singlet(), random_state(&mut rng, 4)] {
                let direct = evaluate_inequality_quantum(&hybrid(), &rho, &s.as_map(), &assignment()).unwrap();
                let via = rho.expectation(&f.f).unwrap();
                assert!((direct - via).abs() < 1e-12);
                assert!(direct <= operator_norm(&f.f).unwrap() + 1e-10);
            }
        }
    }

    #[test]
    fn operator_norm_at_ladder() {
        let n = operator_norm(&build_f_operator(&HybridSettings::singlet_ladder()).f).unwrap();
        assert!((n - TSIRELSON).abs() < 1e-12);
    }

    #[test]
    fn envelope_values() {
        assert!((tsirelson_envelope(FRAC_PI_4, -FRAC_PI_4) - TSIRELSON).abs() < 1e-15);
        assert!((tsirelson_envelope(0.0, 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_branches_give_operator_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..200 {
            let (t1, t2) = (rng.random_range(-3.2..3.2), rng.random_range(-3.2..3.2));
            let n = operator_norm(&build_f_operator(&envelope_settings(t1, t2)).f).unwrap();
            assert!((n - envelope_branch_max(t1, t2)).abs() < 1e-9, "{t1} {t2}");
            assert!(tsirelson_envelope(t1, t2) <= n + 1e-9);
        }
    }
}
