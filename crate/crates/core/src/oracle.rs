//! Plain Born-rule reference: joint outcome distributions, projective
//! collapse and operator contractions on a qubit pair.
//!
//! Only [`crate::hilbert`] is shared with the rest of the crate. Composite
//! operators are built here as explicit 4×4 matrices so that nothing from
//! the lifting pipeline can leak into the arbiter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    pauli, sigma_theta, Amps4, Frame, Operator2, Outcome, Scalar, Side, TensorState, EXACT_TOL,
};

type Matrix4 = [[Scalar; 4]; 4];

fn kron_ops(a: &Operator2, b: &Operator2) -> Matrix4 {
    let mut m = [[Scalar::new(0.0, 0.0); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = a.entry(i / 2, j / 2) * b.entry(i % 2, j % 2);
        }
    }
    m
}

fn mat_vec(m: &Matrix4, v: &Amps4) -> Amps4 {
    let mut out = [Scalar::new(0.0, 0.0); 4];
    for (o, row) in out.iter_mut().zip(m.iter()) {
        *o = row.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
    }
    out
}

fn bra_ket(bra: &Amps4, ket: &Amps4) -> Scalar {
    bra.iter().zip(ket.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `(I + s·op) / 2` for the eigenvalue `s` of a ±1-valued observable.
pub fn projector(op: &Operator2, outcome: Outcome) -> Operator2 {
    let s = outcome.value() as f64;
    let mut m = [[Scalar::new(0.0, 0.0); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let id = if i == j { 1.0 } else { 0.0 };
            *e = (Scalar::new(id, 0.0) + op.entry(i, j) * s) * 0.5;
        }
    }
    Operator2::new(m)
}

/// ⟨Ψ|A ⊗ B|Ψ⟩
pub fn expectation(state: &TensorState, op_a: &Operator2, op_b: &Operator2) -> Scalar {
    let v = state.amps();
    bra_ket(&v, &mat_vec(&kron_ops(op_a, op_b), &v))
}

/// Probabilities of the four outcome pairs, indexed by outcome index
/// (0 for +1, 1 for −1) on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub p: [[f64; 2]; 2],
}

impl JointDistribution {
    pub fn prob(&self, a: Outcome, b: Outcome) -> f64 {
        self.p[a.index()][b.index()]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    /// Σ a·b·P(a, b)
    pub fn correlation(&self) -> f64 {
        self.p[0][0] + self.p[1][1] - self.p[0][1] - self.p[1][0]
    }

    /// (P(a = +1), P(a = −1))
    pub fn marginal_a(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[0][1], self.p[1][0] + self.p[1][1]]
    }

    pub fn marginal_b(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[1][0], self.p[0][1] + self.p[1][1]]
    }

    /// Outcome pairs with probability above `tol`.
    pub fn support(&self, tol: f64) -> Vec<(Outcome, Outcome)> {
        let mut out = Vec::new();
        for a in [Outcome::Plus, Outcome::Minus] {
            for b in [Outcome::Plus, Outcome::Minus] {
                if self.prob(a, b) > tol {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Joint distribution for two ±1-valued observables.
pub fn born_joint_ops(
    state: &TensorState,
    op_a: &Operator2,
    op_b: &Operator2,
) -> JointDistribution {
    let mut p = [[0.0; 2]; 2];
    for a in [Outcome::Plus, Outcome::Minus] {
        for b in [Outcome::Plus, Outcome::Minus] {
            p[a.index()][b.index()] =
                expectation(state, &projector(op_a, a), &projector(op_b, b)).re;
        }
    }
    JointDistribution { p }
}

/// Joint distribution for polarizers at `alpha` and `beta` radians.
pub fn born_joint(state: &TensorState, alpha: f64, beta: f64) -> JointDistribution {
    born_joint_ops(state, &sigma_theta(alpha), &sigma_theta(beta))
}

/// Joint distribution for measurements in two named frames.
pub fn born_joint_frames(state: &TensorState, frame_a: Frame, frame_b: Frame) -> JointDistribution {
    born_joint_ops(state, &pauli(frame_a), &pauli(frame_b))
}

/// ⟨Ψ|σα ⊗ σβ|Ψ⟩
pub fn oracle_correlation(state: &TensorState, alpha: f64, beta: f64) -> f64 {
    expectation(state, &sigma_theta(alpha), &sigma_theta(beta)).re
}

/// Applies the projector for `outcome` of σθ on one side and renormalizes.
pub fn textbook_collapse(
    state: &TensorState,
    side: Side,
    theta: f64,
    outcome: Outcome,
) -> Result<TensorState> {
    let proj = projector(&sigma_theta(theta), outcome);
    let id = Operator2::identity();
    let m = match side {
        Side::A => kron_ops(&proj, &id),
        Side::B => kron_ops(&id, &proj),
    };
    let v = mat_vec(&m, &state.amps());
    let prob = bra_ket(&v, &v).re;
    if prob <= EXACT_TOL {
        return Err(Error::Domain(format!(
            "outcome {outcome} at angle {theta} on side {side} has zero probability"
        )));
    }
    TensorState::new(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{bell, equal_up_to_global_phase, frame_ket, BellKind, Ket, ONE};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};

    fn ket(frame: Frame, i: u8) -> Ket {
        frame_ket(frame, i, ONE).unwrap()
    }

    #[test]
    fn singlet_is_anticorrelated() {
        let d = born_joint(&bell(BellKind::PsiMinus), 0.0, 0.0);
        assert!((d.prob(Outcome::Plus, Outcome::Minus) - 0.5).abs() < 1e-12);
        assert!((d.prob(Outcome::Minus, Outcome::Plus) - 0.5).abs() < 1e-12);
        assert!(d.prob(Outcome::Plus, Outcome::Plus).abs() < 1e-12);
        assert!(d.prob(Outcome::Minus, Outcome::Minus).abs() < 1e-12);
    }

    #[test]
    fn phi_plus_is_correlated() {
        let d = born_joint(&bell(BellKind::PhiPlus), 0.0, 0.0);
        assert!((d.prob(Outcome::Plus, Outcome::Plus) - 0.5).abs() < 1e-12);
        assert!((d.prob(Outcome::Minus, Outcome::Minus) - 0.5).abs() < 1e-12);
        let d = born_joint(&bell(BellKind::PhiPlus), 0.0, FRAC_PI_8);
        assert!((d.correlation() - SQRT_2 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_examples() {
        assert!((oracle_correlation(&bell(BellKind::PsiMinus), 0.0, 0.0) + 1.0).abs() < 1e-12);
        assert!((oracle_correlation(&bell(BellKind::PsiPlus), 0.0, 0.0) + 1.0).abs() < 1e-12);
        let e = oracle_correlation(&bell(BellKind::PsiPlus), FRAC_PI_4, FRAC_PI_4);
        assert!((e - 1.0).abs() < 1e-12);
        for k in 0..50 {
            let a = k as f64 * 0.137;
            assert!((oracle_correlation(&bell(BellKind::PhiPlus), a, a) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn collapse_examples() {
        let s = textbook_collapse(&bell(BellKind::PsiMinus), Side::A, 0.0, Outcome::Plus).unwrap();
        let want = TensorState::product(&ket(Frame::Z, 0), &ket(Frame::Z, 1));
        assert!(equal_up_to_global_phase(&s, &want, 1e-12));

        let s = textbook_collapse(&bell(BellKind::PhiPlus), Side::A, 0.0, Outcome::Minus).unwrap();
        let want = TensorState::product(&ket(Frame::Z, 1), &ket(Frame::Z, 1));
        assert!(equal_up_to_global_phase(&s, &want, 1e-12));

        let s =
            textbook_collapse(&bell(BellKind::PsiPlus), Side::A, FRAC_PI_4, Outcome::Plus).unwrap();
        let want = TensorState::product(&ket(Frame::X, 0), &ket(Frame::X, 0));
        assert!(equal_up_to_global_phase(&s, &want, 1e-12));
    }

    #[test]
    fn zero_probability_collapse_fails() {
        let s = TensorState::product(&ket(Frame::Z, 0), &ket(Frame::Z, 0));
        assert!(matches!(
            textbook_collapse(&s, Side::A, 0.0, Outcome::Minus),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn frame_distributions_match_angles() {
        for kind in BellKind::ALL {
            let s = bell(kind);
            let by_frame = born_joint_frames(&s, Frame::X, Frame::Z);
            let by_angle = born_joint(&s, FRAC_PI_4, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    assert!((by_frame.p[a][b] - by_angle.p[a][b]).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn marginals_are_uniform(alpha in -7.0f64..7.0, beta in -7.0f64..7.0, k in 0usize..4) {
            let d = born_joint(&bell(BellKind::ALL[k]), alpha, beta);
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
            for p in d.p.iter().flatten() {
                prop_assert!(*p >= -1e-15);
            }
            for m in [d.marginal_a(), d.marginal_b()] {
                prop_assert!((m[0] - 0.5).abs() < 1e-12);
                prop_assert!((m[1] - 0.5).abs() < 1e-12);
            }
        }

        #[test]
        fn contraction_matches_distribution(alpha in -7.0f64..7.0, beta in -7.0f64..7.0, k in 0usize..4) {
            let s = bell(BellKind::ALL[k]);
            let d = born_joint(&s, alpha, beta);
            prop_assert!((d.correlation() - oracle_correlation(&s, alpha, beta)).abs() < 1e-12);
        }

        #[test]
        fn collapse_is_repeatable(theta in -4.0f64..4.0, k in 0usize..4, plus in any::<bool>(), on_a in any::<bool>()) {
            let s = bell(BellKind::ALL[k]);
            let side = if on_a { Side::A } else { Side::B };
            let o = if plus { Outcome::Plus } else { Outcome::Minus };
            let after = textbook_collapse(&s, side, theta, o).unwrap();
            let proj = projector(&sigma_theta(theta), o);
            let id = Operator2::identity();
            let p = match side {
                Side::A => expectation(&after, &proj, &id).re,
                Side::B => expectation(&after, &id, &proj).re,
            };
            prop_assert!((p - 1.0).abs() < 1e-12);
        }
    }
}
