//! Double-precision complex linear algebra for a single qubit and a qubit
//! pair: named basis frames, kets, 2×2 observables and 4-dimensional
//! composite states.
//!
//! Amplitudes are always stored in the computational (Z) basis. Frames are
//! views onto that representation.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Scalar = Complex64;

/// Tolerance for pure arithmetic identities.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for compositions of several operations.
pub const COMPOSE_TOL: f64 = 1e-9;

pub(crate) const ZERO: Scalar = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Scalar = Complex64::new(1.0, 0.0);
pub(crate) const I: Scalar = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Frame {
    Z,
    X,
    Y,
}

impl Frame {
    pub const ALL: [Frame; 3] = [Frame::Z, Frame::X, Frame::Y];

    /// The frame whose presentation yields definite outcomes in this frame.
    /// Z and X are mutually conjugate; Y has no conjugate partner here.
    pub fn conjugate(self) -> Option<Frame> {
        match self {
            Frame::Z => Some(Frame::X),
            Frame::X => Some(Frame::Z),
            Frame::Y => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Frame::Z => "Z",
            Frame::X => "X",
            Frame::Y => "Y",
        }
    }

    pub fn from_token(token: &str) -> Option<Frame> {
        match token {
            "Z" | "z" => Some(Frame::Z),
            "X" | "x" => Some(Frame::X),
            "Y" | "y" => Some(Frame::Y),
            _ => None,
        }
    }

    /// Number of primes used when writing this frame's kets (`|0>`, `|0'>`, `|0''>`).
    pub fn primes(self) -> usize {
        match self {
            Frame::Z => 0,
            Frame::X => 1,
            Frame::Y => 2,
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Subsystem label of a bipartite system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn token(self) -> &'static str {
        match self {
            Side::A => "A",
            Side::B => "B",
        }
    }

    pub fn from_token(token: &str) -> Option<Side> {
        match token {
            "A" | "a" => Some(Side::A),
            "B" | "b" => Some(Side::B),
            _ => None,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A measurement outcome: an eigenvalue of a ±1-valued observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Outcome> {
        match v {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    /// Basis index 0 carries eigenvalue +1, index 1 carries −1.
    pub fn from_index(index: u8) -> Outcome {
        if index == 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    /// Rounds an expectation value that should be exactly ±1.
    pub fn from_eigenvalue(lambda: f64, tol: f64) -> Option<Outcome> {
        if (lambda - 1.0).abs() <= tol {
            Some(Outcome::Plus)
        } else if (lambda + 1.0).abs() <= tol {
            Some(Outcome::Minus)
        } else {
            None
        }
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value() as i8
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Outcome, String> {
        Outcome::from_value(v as i64).ok_or_else(|| format!("outcome {v} is not +1 or -1"))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// Replaces a unit phase within `EXACT_TOL` of 1, −1, i or −i by that exact
/// value.
pub fn snap_phase(phase: Scalar) -> Scalar {
    [ONE, -ONE, I, -I]
        .into_iter()
        .find(|q| (phase - q).norm() <= EXACT_TOL)
        .unwrap_or(phase)
}

/// Raw (unnormalized) amplitudes of one qubit in the Z basis.
pub type Amps2 = [Scalar; 2];
/// Raw amplitudes of a qubit pair, ordered (0,0), (0,1), (1,0), (1,1).
pub type Amps4 = [Scalar; 4];

pub(crate) fn is_finite(z: Scalar) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub(crate) fn check_unit_phase(phase: Scalar) -> Result<()> {
    if !is_finite(phase) || (phase.norm() - 1.0).abs() > EXACT_TOL {
        return Err(Error::Domain(format!(
            "phase {phase} does not have unit modulus"
        )));
    }
    Ok(())
}

pub(crate) fn norm2(v: &Amps2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub(crate) fn norm4(v: &Amps4) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// The unphased `index`-th basis vector of `frame`, in Z amplitudes.
pub fn frame_amps(frame: Frame, index: u8) -> Amps2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    match (frame, index) {
        (Frame::Z, 0) => [ONE, ZERO],
        (Frame::Z, _) => [ZERO, ONE],
        (Frame::X, 0) => [h, h],
        (Frame::X, _) => [h, -h],
        (Frame::Y, 0) => [h, h * I],
        (Frame::Y, _) => [h, -h * I],
    }
}

/// A normalized single-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ket {
    amps: Amps2,
}

impl Ket {
    /// Normalizes `amps`. Fails on a zero or non-finite vector.
    pub fn new(amps: Amps2) -> Result<Ket> {
        if !amps.iter().all(|z| is_finite(*z)) {
            return Err(Error::Domain("ket has non-finite amplitudes".into()));
        }
        let n = norm2(&amps);
        if n <= EXACT_TOL {
            return Err(Error::Domain("ket has zero norm".into()));
        }
        Ok(Ket {
            amps: [amps[0] / n, amps[1] / n],
        })
    }

    pub fn amps(&self) -> Amps2 {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.amps)
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Ket) -> Scalar {
        self.amps[0].conj() * other.amps[0] + self.amps[1].conj() * other.amps[1]
    }

    pub fn scale(&self, phase: Scalar) -> Ket {
        Ket {
            amps: [self.amps[0] * phase, self.amps[1] * phase],
        }
    }

    /// ⟨self|op|self⟩; real for Hermitian `op`.
    pub fn expectation(&self, op: &Operator2) -> f64 {
        op.sandwich(&self.amps, &self.amps).re
    }

    /// If this ket is a basis ket of `frame` up to a global phase, returns
    /// its index.
    pub fn frame_index(&self, frame: Frame, tol: f64) -> Option<u8> {
        (0..2u8).find(|&i| {
            let b = Ket {
                amps: frame_amps(frame, i),
            };
            b.inner(self).norm() >= 1.0 - tol
        })
    }

    /// Splits off the phase of the leading nonzero amplitude, so that the
    /// returned ket has a non-negative real leading amplitude and
    /// `phase * canonical == self`.
    pub fn canonicalize(&self) -> (Ket, Scalar) {
        let lead = if self.amps[0].norm() > EXACT_TOL {
            self.amps[0]
        } else {
            self.amps[1]
        };
        let phase = lead / lead.norm();
        (self.scale(phase.conj()), phase)
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {})",
            fmt_scalar(self.amps[0]),
            fmt_scalar(self.amps[1])
        )
    }
}

pub(crate) fn fmt_scalar(z: Scalar) -> String {
    let clean = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let (re, im) = (clean(z.re), clean(z.im));
    if im == 0.0 {
        format!("{re:.6}")
    } else {
        format!("{re:.6}{im:+.6}i")
    }
}

/// `phase` times the `index`-th basis ket of `frame`.
pub fn frame_ket(frame: Frame, index: u8, phase: Scalar) -> Result<Ket> {
    if index > 1 {
        return Err(Error::Domain(format!("basis index {index} is not 0 or 1")));
    }
    check_unit_phase(phase)?;
    let b = frame_amps(frame, index);
    Ok(Ket {
        amps: [b[0] * phase, b[1] * phase],
    })
}

/// A 2×2 complex matrix acting on one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Operator2 {
    m: [[Scalar; 2]; 2],
}

impl Operator2 {
    pub fn new(m: [[Scalar; 2]; 2]) -> Operator2 {
        Operator2 { m }
    }

    pub fn identity() -> Operator2 {
        Operator2::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn entry(&self, row: usize, col: usize) -> Scalar {
        self.m[row][col]
    }

    pub fn matrix(&self) -> [[Scalar; 2]; 2] {
        self.m
    }

    pub fn apply(&self, v: &Amps2) -> Amps2 {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// ⟨bra|self|ket⟩ on raw amplitude vectors.
    pub fn sandwich(&self, bra: &Amps2, ket: &Amps2) -> Scalar {
        let w = self.apply(ket);
        bra[0].conj() * w[0] + bra[1].conj() * w[1]
    }

    pub fn mul(&self, rhs: &Operator2) -> Operator2 {
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = self.m[r][0] * rhs.m[0][c] + self.m[r][1] * rhs.m[1][c];
            }
        }
        Operator2::new(out)
    }

    pub fn adjoint(&self) -> Operator2 {
        Operator2::new([
            [self.m[0][0].conj(), self.m[1][0].conj()],
            [self.m[0][1].conj(), self.m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> Scalar {
        self.m[0][0] + self.m[1][1]
    }

    pub fn max_abs_diff(&self, other: &Operator2) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = self.m[0][1].norm();
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - radius, mean + radius]
    }
}

/// The polarizer observable at angle `theta` (radians): eigenvalues ±1,
/// `sigma_theta(0)` is Pauli Z and `sigma_theta(π/4)` is Pauli X.
pub fn sigma_theta(theta: f64) -> Operator2 {
    let (s, c) = (2.0 * theta).sin_cos();
    Operator2::new([
        [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(-c, 0.0)],
    ])
}

/// The Pauli observable whose eigenbasis is `frame`.
pub fn pauli(frame: Frame) -> Operator2 {
    match frame {
        Frame::Z => Operator2::new([[ONE, ZERO], [ZERO, -ONE]]),
        Frame::X => Operator2::new([[ZERO, ONE], [ONE, ZERO]]),
        Frame::Y => Operator2::new([[ZERO, -I], [I, ZERO]]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    /// Wire token, e.g. `PHI_PLUS`.
    pub fn token(self) -> &'static str {
        match self {
            BellKind::PhiPlus => "PHI_PLUS",
            BellKind::PhiMinus => "PHI_MINUS",
            BellKind::PsiPlus => "PSI_PLUS",
            BellKind::PsiMinus => "PSI_MINUS",
        }
    }

    pub fn from_token(token: &str) -> Option<BellKind> {
        BellKind::ALL.into_iter().find(|k| k.token() == token)
    }

    /// Short name, e.g. `phi+`.
    pub fn short(self) -> &'static str {
        match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
        }
    }

    pub fn from_short(s: &str) -> Option<BellKind> {
        BellKind::ALL
            .into_iter()
            .find(|k| k.short().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// A normalized two-qubit pure state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorState {
    amps: Amps4,
}

impl TensorState {
    pub fn new(amps: Amps4) -> Result<TensorState> {
        if !amps.iter().all(|z| is_finite(*z)) {
            return Err(Error::Domain("state has non-finite amplitudes".into()));
        }
        let n = norm4(&amps);
        if n <= EXACT_TOL {
            return Err(Error::Domain("state has zero norm".into()));
        }
        Ok(TensorState {
            amps: amps.map(|z| z / n),
        })
    }

    pub fn product(a: &Ket, b: &Ket) -> TensorState {
        TensorState {
            amps: kron(&a.amps(), &b.amps()),
        }
    }

    pub fn amps(&self) -> Amps4 {
        self.amps
    }

    pub fn amp(&self, i: usize, j: usize) -> Scalar {
        self.amps[2 * i + j]
    }

    pub fn norm(&self) -> f64 {
        norm4(&self.amps)
    }

    pub fn inner(&self, other: &TensorState) -> Scalar {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, phase: Scalar) -> TensorState {
        TensorState {
            amps: self.amps.map(|z| z * phase),
        }
    }

    /// Determinant of the amplitude matrix M[i][j]; |det M| = 1/2 exactly
    /// for maximally entangled states and 0 for product states.
    pub fn amplitude_det(&self) -> Scalar {
        self.amps[0] * self.amps[3] - self.amps[1] * self.amps[2]
    }

    pub fn is_maximally_entangled(&self) -> bool {
        (self.amplitude_det().norm() - 0.5).abs() <= COMPOSE_TOL
    }

    /// (op_a ⊗ op_b) applied to the raw amplitudes.
    pub fn apply_local(&self, op_a: &Operator2, op_b: &Operator2) -> Amps4 {
        let mut out = [ZERO; 4];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += op_a.entry(i, k) * op_b.entry(j, l) * self.amps[2 * k + l];
                    }
                }
                out[2 * i + j] = acc;
            }
        }
        out
    }
}

impl fmt::Display for TensorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.amps.iter().map(|z| fmt_scalar(*z)).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

pub(crate) fn kron(a: &Amps2, b: &Amps2) -> Amps4 {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// One of the four canonical Bell states, written in the Z basis.
pub fn bell(kind: BellKind) -> TensorState {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let amps = match kind {
        BellKind::PhiPlus => [h, ZERO, ZERO, h],
        BellKind::PhiMinus => [h, ZERO, ZERO, -h],
        BellKind::PsiPlus => [ZERO, h, h, ZERO],
        BellKind::PsiMinus => [ZERO, h, -h, ZERO],
    };
    TensorState { amps }
}

/// States for which a global-phase-insensitive comparison makes sense.
pub trait Overlap {
    fn overlap(&self, other: &Self) -> Scalar;
}

impl Overlap for Ket {
    fn overlap(&self, other: &Ket) -> Scalar {
        self.inner(other)
    }
}

impl Overlap for TensorState {
    fn overlap(&self, other: &TensorState) -> Scalar {
        self.inner(other)
    }
}

/// True iff |⟨a|b⟩| ≥ 1 − tol. Both inputs must be normalized.
pub fn equal_up_to_global_phase<T: Overlap>(a: &T, b: &T, tol: f64) -> bool {
    a.overlap(b).norm() >= 1.0 - tol
}

/// Coefficients c_ij of `state` on the product kets |i_F⟩⊗|j_F⟩, ordered as
/// the amplitudes are.
pub fn expand_in_frame(state: &TensorState, frame: Frame) -> Amps4 {
    let basis = [frame_amps(frame, 0), frame_amps(frame, 1)];
    let mut out = [ZERO; 4];
    for i in 0..2 {
        for j in 0..2 {
            let prod = kron(&basis[i], &basis[j]);
            out[2 * i + j] = prod
                .iter()
                .zip(state.amps.iter())
                .map(|(p, s)| p.conj() * s)
                .sum();
        }
    }
    out
}

/// Inverse of [`expand_in_frame`]: Σ c_ij |i_F⟩⊗|j_F⟩ as raw Z amplitudes.
pub fn reconstruct_from_frame(coeffs: &Amps4, frame: Frame) -> Amps4 {
    let basis = [frame_amps(frame, 0), frame_amps(frame, 1)];
    let mut out = [ZERO; 4];
    for i in 0..2 {
        for j in 0..2 {
            let prod = kron(&basis[i], &basis[j]);
            for (o, p) in out.iter_mut().zip(prod.iter()) {
                *o += coeffs[2 * i + j] * p;
            }
        }
    }
    out
}

/// Returns λ when (op_a ⊗ op_b)|state⟩ = λ|state⟩ within 1e−10.
pub fn is_joint_eigenvector(
    state: &TensorState,
    op_a: &Operator2,
    op_b: &Operator2,
) -> Option<f64> {
    const TOL: f64 = 1e-10;
    let image = state.apply_local(op_a, op_b);
    let lambda: Scalar = state
        .amps
        .iter()
        .zip(image.iter())
        .map(|(s, w)| s.conj() * w)
        .sum();
    let residual: f64 = image
        .iter()
        .zip(state.amps.iter())
        .map(|(w, s)| (w - lambda * s).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual <= TOL && lambda.im.abs() <= TOL {
        Some(lambda.re)
    } else {
        None
    }
}
