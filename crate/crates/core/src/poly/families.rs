//! Generated sum-of-squares sources for odd cycles.

use crate::dsl::{Comparator, LinearForm, RsExpression, VariableId};

use super::multilinear::MultilinearPoly;

fn x(i: usize) -> VariableId {
    VariableId::indexed('X', i as u32)
}

/// Source whose derivation is the odd `n`-cycle inequality on `X1..Xn`.
///
/// Triangles `(X_{2i-1} ± X_{2i} + X_{2i+1})` cover the cycle edges and leave
/// chords `X_{2i-1}X_{2i+1}`; fan groups `(X1 - X_{2i+1} + X_{2i+3})` cancel
/// those chords and close the cycle with `X1Xn`. With `alternating` the middle
/// sign of each triangle is negative, which negates the path edges. There are
/// `n - 2` groups, all odd, so the derived bound has magnitude `n - 2`.
///
/// Panics unless `n` is odd and at least 3.
pub fn chained_cycle_source(n: usize, alternating: bool) -> RsExpression {
    assert!(n >= 3 && n % 2 == 1, "cycle length must be odd and >= 3");
    let m = (n - 1) / 2;
    let middle = if alternating { -1 } else { 1 };
    let mut groups = Vec::with_capacity(n - 2);
    for i in 1..=m {
        groups.push(
            LinearForm::new(vec![(1, x(2 * i - 1)), (middle, x(2 * i)), (1, x(2 * i + 1))])
                .expect("distinct variables"),
        );
    }
    for i in 1..m {
        groups.push(
            LinearForm::new(vec![(1, x(1)), (-1, x(2 * i + 1)), (1, x(2 * i + 3))])
                .expect("distinct variables"),
        );
    }
    let q = groups.len() as i64;
    RsExpression::new(groups, 0, Comparator::AtLeast, q).expect("non-empty")
}

/// `X1X2 + X2X3 + … + X_{n-1}X_n + X_nX1`.
pub fn cycle_sum(n: usize) -> MultilinearPoly {
    let mut p = MultilinearPoly::zero();
    for i in 1..=n {
        let j = if i == n { 1 } else { i + 1 };
        p.add_term(vec![x(i), x(j)], 1);
    }
    p
}
