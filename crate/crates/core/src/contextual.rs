//! Lifting Bell states to class-tagged representatives in the free vector
//! space on pairs, projecting them onto each subsystem and collapsing the
//! local formal sums to definite kets.
//!
//! A state written in one frame yields definite outcomes in the conjugate
//! frame: the Z presentation serves X measurements and the X presentation
//! serves Z measurements. Y measurements are served by representatives whose
//! second-term phases are multiples of π/2, found by [`search_y_lifts`].

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freevec::{identify_t, quotient_map, FormalSum, Pair, PairSymbol, SubSymbol, Term};
use crate::hilbert::{
    bell, equal_up_to_global_phase, expand_in_frame, is_joint_eigenvector, pauli, snap_phase,
    BellKind, Frame, Ket, Outcome, Scalar, Side, COMPOSE_TOL, EXACT_TOL, I, ONE,
};
use crate::rng::{keyed_unit, ISOLATED_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContextClass {
    Class1,
    Class2,
}

impl ContextClass {
    pub const ALL: [ContextClass; 2] = [ContextClass::Class1, ContextClass::Class2];

    pub fn token(self) -> &'static str {
        match self {
            ContextClass::Class1 => "CLASS1",
            ContextClass::Class2 => "CLASS2",
        }
    }

    pub fn from_token(token: &str) -> Option<ContextClass> {
        match token {
            "CLASS1" => Some(ContextClass::Class1),
            "CLASS2" => Some(ContextClass::Class2),
            _ => None,
        }
    }

    /// `1` or `2`.
    pub fn number(self) -> u8 {
        match self {
            ContextClass::Class1 => 1,
            ContextClass::Class2 => 2,
        }
    }

    pub fn from_number(n: &str) -> Option<ContextClass> {
        match n {
            "1" => Some(ContextClass::Class1),
            "2" => Some(ContextClass::Class2),
            _ => None,
        }
    }

    pub fn other(self) -> ContextClass {
        match self {
            ContextClass::Class1 => ContextClass::Class2,
            ContextClass::Class2 => ContextClass::Class1,
        }
    }
}

impl fmt::Display for ContextClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Where a representative came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Origin {
    /// The fixed two-term pre-image of a Bell state.
    Canonical,
    /// One of the eight phase-placement patterns, instantiated at
    /// `(phi_prime, phi)`. `row` counts from 1; `column` is the class the
    /// pattern is listed under.
    Pattern {
        row: u8,
        column: ContextClass,
        phi_prime: f64,
        phi: f64,
    },
    /// A quarter-turn phase assignment serving Y measurements.
    QuarterTurns { a: u8, b: u8 },
}

/// A class-tagged two-term element of the free vector space on U × V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representative {
    pub kind: BellKind,
    pub klass: ContextClass,
    pub presentation_frame: Frame,
    pub sum: FormalSum<PairSymbol>,
    /// Phase of the second term relative to the first, per side, in (−π, π].
    pub local_phases: (f64, f64),
    /// Relative phase between the two terms of the state in this
    /// presentation, in (−π, π].
    pub superposition_phase: f64,
    pub origin: Origin,
}

impl Representative {
    pub fn project(&self, side: Side) -> FormalSum<SubSymbol> {
        project(&self.sum, side)
    }

    /// Residual of the stated local-phase constraint
    /// `e^{−iφA}·e^{iφB} = e^{iφ}`.
    pub fn local_phase_residual(&self) -> f64 {
        let (pa, pb) = self.local_phases;
        (Complex64::from_polar(1.0, pb - pa) - Complex64::from_polar(1.0, self.superposition_phase))
            .norm()
    }

    /// Residual of `e^{i(φA+φB)} = e^{iφ}`, which is what the quotient
    /// identity requires of any two-term representative.
    pub fn absorption_residual(&self) -> f64 {
        let (pa, pb) = self.local_phases;
        (Complex64::from_polar(1.0, pa + pb) - Complex64::from_polar(1.0, self.superposition_phase))
            .norm()
    }

    /// Whether the sum maps onto the Bell state up to global phase.
    pub fn quotient_holds(&self) -> bool {
        quotient_map(&self.sum)
            .map(|s| equal_up_to_global_phase(&s, &bell(self.kind), COMPOSE_TOL))
            .unwrap_or(false)
    }
}

/// A collapsed local ket in canonical form together with the phase that
/// canonicalization stripped: the signed ket is `phase · ket`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalKet {
    pub ket: Ket,
    pub phase: Scalar,
}

impl LocalKet {
    pub fn from_signed(signed: Ket) -> LocalKet {
        let (ket, phase) = signed.canonicalize();
        LocalKet {
            ket,
            phase: snap_phase(phase),
        }
    }

    pub fn signed(&self) -> Ket {
        self.ket.scale(self.phase)
    }

    /// The basis index in `frame`, if the ket is a basis ket of it.
    pub fn index_in(&self, frame: Frame) -> Option<u8> {
        self.ket.frame_index(frame, COMPOSE_TOL)
    }

    /// The signed ket as a labelled symbol of `frame`, such as `|-1'>`.
    pub fn symbol(&self, frame: Frame) -> Option<SubSymbol> {
        let index = self.index_in(frame)?;
        let basis = SubSymbol::basis(frame, index).ket();
        let overlap = basis.inner(&self.signed());
        SubSymbol::new(frame, index, snap_phase(overlap / overlap.norm())).ok()
    }
}

/// The two collapsed local kets of one representative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalPair {
    pub psi_a: LocalKet,
    pub psi_b: LocalKet,
    pub outcome_frame: Frame,
}

impl LocalPair {
    pub fn side(&self, side: Side) -> &LocalKet {
        match side {
            Side::A => &self.psi_a,
            Side::B => &self.psi_b,
        }
    }

    /// Eigenvalues of σ_frame on the two kets.
    pub fn outcomes(&self) -> Result<(Outcome, Outcome)> {
        let get = |k: &LocalKet| {
            k.index_in(self.outcome_frame)
                .map(Outcome::from_index)
                .ok_or_else(|| {
                    Error::Domain(format!(
                        "collapsed ket {} is not a {} basis ket",
                        k.ket, self.outcome_frame
                    ))
                })
        };
        Ok((get(&self.psi_a)?, get(&self.psi_b)?))
    }
}

// Pre-image rows: first term, second term, and the signs on the second
// term's (A, B) symbols for class 1 and class 2.
struct PreImage {
    first: (u8, u8),
    second: (u8, u8),
    class1: (f64, f64),
    class2: (f64, f64),
}

fn pre_image(kind: BellKind, frame: Frame) -> PreImage {
    let p = |first, second, class1, class2| PreImage {
        first,
        second,
        class1,
        class2,
    };
    match (frame, kind) {
        (Frame::X, BellKind::PsiMinus) => p((1, 0), (0, 1), (1.0, -1.0), (-1.0, 1.0)),
        (Frame::X, BellKind::PhiMinus) => p((1, 0), (0, 1), (1.0, 1.0), (-1.0, -1.0)),
        (Frame::X, BellKind::PhiPlus) => p((0, 0), (1, 1), (1.0, 1.0), (-1.0, -1.0)),
        (Frame::X, BellKind::PsiPlus) => p((0, 0), (1, 1), (1.0, -1.0), (-1.0, 1.0)),
        (_, BellKind::PsiMinus) => p((0, 1), (1, 0), (1.0, -1.0), (-1.0, 1.0)),
        (_, BellKind::PhiMinus) => p((0, 0), (1, 1), (-1.0, 1.0), (1.0, -1.0)),
        (_, BellKind::PhiPlus) => p((0, 0), (1, 1), (1.0, 1.0), (-1.0, -1.0)),
        (_, BellKind::PsiPlus) => p((0, 1), (1, 0), (1.0, 1.0), (-1.0, -1.0)),
    }
}

fn wrap(angle: f64) -> f64 {
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

fn cis(angle: f64) -> Scalar {
    snap_phase(Complex64::from_polar(1.0, angle))
}

fn idx(i: u8, j: u8) -> usize {
    (2 * i + j) as usize
}

/// Phase of the `second` product-ket coefficient relative to the `first`.
fn superposition_phase(kind: BellKind, frame: Frame, first: (u8, u8), second: (u8, u8)) -> f64 {
    let c = expand_in_frame(&bell(kind), frame);
    wrap((c[idx(second.0, second.1)] / c[idx(first.0, first.1)]).arg())
}

fn two_term(
    frame: Frame,
    first: (u8, u8),
    first_phases: (Scalar, Scalar),
    second: (u8, u8),
    second_phases: (Scalar, Scalar),
) -> Result<FormalSum<PairSymbol>> {
    let pair = |(i, j): (u8, u8), (pa, pb): (Scalar, Scalar)| -> Result<PairSymbol> {
        Ok(Pair::new(
            SubSymbol::new(frame, i, pa)?,
            SubSymbol::new(frame, j, pb)?,
        ))
    };
    Ok(FormalSum::from_terms(vec![
        Term::unit(pair(first, first_phases)?),
        Term::unit(pair(second, second_phases)?),
    ]))
}

/// Relative phase of the second term over the first on one side.
fn relative_phase(sum: &FormalSum<PairSymbol>, side: Side) -> f64 {
    let t = sum.terms();
    wrap((t[1].sym.side(side).phase() / t[0].sym.side(side).phase()).arg())
}

/// The fixed pre-image of `kind` in a Z or X presentation, with every
/// scalar absorbed into a symbol phase.
pub fn lift(
    kind: BellKind,
    klass: ContextClass,
    presentation_frame: Frame,
) -> Result<Representative> {
    if presentation_frame == Frame::Y {
        return Err(Error::Domain(
            "fixed pre-images exist for Z and X presentations only".into(),
        ));
    }
    let row = pre_image(kind, presentation_frame);
    let (sa, sb) = match klass {
        ContextClass::Class1 => row.class1,
        ContextClass::Class2 => row.class2,
    };
    let sum = two_term(
        presentation_frame,
        row.first,
        (ONE, ONE),
        row.second,
        (Complex64::new(sa, 0.0), Complex64::new(sb, 0.0)),
    )?;
    let local_phases = (relative_phase(&sum, Side::A), relative_phase(&sum, Side::B));
    Ok(Representative {
        kind,
        klass,
        presentation_frame,
        sum,
        local_phases,
        superposition_phase: superposition_phase(kind, presentation_frame, row.first, row.second),
        origin: Origin::Canonical,
    })
}

/// Linear extension of `(u, v) ↦ u` (or `↦ v`): keeps coefficients and
/// term order.
pub fn project(sum: &FormalSum<PairSymbol>, side: Side) -> FormalSum<SubSymbol> {
    sum.map_symbols(|p| *p.side(side))
}

/// Identifies the formal symbols with their kets and sums them.
pub fn collapse(local: &FormalSum<SubSymbol>) -> Result<LocalKet> {
    identify_t(local).map(LocalKet::from_signed)
}

/// Projects and collapses both sides of a representative.
pub fn collapse_pair(rep: &Representative, outcome_frame: Frame) -> Result<LocalPair> {
    Ok(LocalPair {
        psi_a: collapse(&rep.project(Side::A))?,
        psi_b: collapse(&rep.project(Side::B))?,
        outcome_frame,
    })
}

/// The Z and X pair whose terms carry the state in `frame`, in basis order.
fn support(kind: BellKind, frame: Frame) -> ((u8, u8), (u8, u8)) {
    let c = expand_in_frame(&bell(kind), frame);
    let mut nz = (0..4u8).filter(|&k| c[k as usize].norm() > COMPOSE_TOL);
    let first = nz.next().expect("a Bell state has two product terms");
    let second = nz.next().expect("a Bell state has two product terms");
    ((first / 2, first % 2), (second / 2, second % 2))
}

const QUARTER_TURNS: [Scalar; 4] = [ONE, I, Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];

/// One quarter-turn phase assignment that serves a Y measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YCandidate {
    pub representative: Representative,
    pub local: LocalPair,
}

/// Every assignment of phases from {1, i, −1, −i} to the second term's two
/// symbols such that the quotient identity holds and both collapsed kets
/// are Y basis kets. Z presentations are searched before X. The class field
/// is set by the A outcome: index 0 is class 1.
pub fn search_y_lifts(kind: BellKind) -> Vec<YCandidate> {
    let mut found = Vec::new();
    let state = bell(kind);
    for frame in [Frame::Z, Frame::X] {
        let (first, second) = support(kind, frame);
        let phi = superposition_phase(kind, frame, first, second);
        for (qa, &pa) in QUARTER_TURNS.iter().enumerate() {
            for (qb, &pb) in QUARTER_TURNS.iter().enumerate() {
                let Ok(sum) = two_term(frame, first, (ONE, ONE), second, (pa, pb)) else {
                    continue;
                };
                let lifted = quotient_map(&sum)
                    .map(|s| equal_up_to_global_phase(&s, &state, COMPOSE_TOL))
                    .unwrap_or(false);
                if !lifted {
                    continue;
                }
                let local = match (
                    collapse(&project(&sum, Side::A)),
                    collapse(&project(&sum, Side::B)),
                ) {
                    (Ok(a), Ok(b)) => LocalPair {
                        psi_a: a,
                        psi_b: b,
                        outcome_frame: Frame::Y,
                    },
                    _ => continue,
                };
                let Ok((oa, _)) = local.outcomes() else {
                    continue;
                };
                let klass = if oa == Outcome::Plus {
                    ContextClass::Class1
                } else {
                    ContextClass::Class2
                };
                found.push(YCandidate {
                    representative: Representative {
                        kind,
                        klass,
                        presentation_frame: frame,
                        local_phases: (wrap(qa as f64 * FRAC_PI_2), wrap(qb as f64 * FRAC_PI_2)),
                        sum,
                        superposition_phase: phi,
                        origin: Origin::QuarterTurns {
                            a: qa as u8,
                            b: qb as u8,
                        },
                    },
                    local,
                });
            }
        }
    }
    found
}

/// The first search hit for `klass`.
pub fn lift_y(kind: BellKind, klass: ContextClass) -> Result<Representative> {
    search_y_lifts(kind)
        .into_iter()
        .find(|c| c.representative.klass == klass)
        .map(|c| c.representative)
        .ok_or_else(|| Error::Domain(format!("no quarter-turn Y lift of {kind} for {klass}")))
}

/// The representative whose collapse gives definite outcomes in
/// `measurement_frame`.
pub fn lift_for_measurement(
    kind: BellKind,
    klass: ContextClass,
    measurement_frame: Frame,
) -> Result<Representative> {
    match measurement_frame.conjugate() {
        Some(presentation) => lift(kind, klass, presentation),
        None => lift_y(kind, klass),
    }
}

/// The definite local kets of `kind` under `klass` for a measurement in
/// `measurement_frame`.
pub fn local_states(
    kind: BellKind,
    klass: ContextClass,
    measurement_frame: Frame,
) -> Result<LocalPair> {
    let rep = lift_for_measurement(kind, klass, measurement_frame)?;
    let pair = collapse_pair(&rep, measurement_frame)?;
    pair.outcomes()?;
    Ok(pair)
}

type PatternPhases = fn(f64, f64) -> [f64; 4];

// (v_A, v_B, w_A, w_B) phases as functions of (φ′, φ), by row and column.
const PATTERNS: [(u8, ContextClass, PatternPhases); 8] = [
    (1, ContextClass::Class1, |_, p| [0.0, 0.0, 0.0, p]),
    (1, ContextClass::Class2, |_, p| [0.0, 0.0, p, 0.0]),
    (2, ContextClass::Class1, |q, _| [0.0, q, 0.0, 0.0]),
    (2, ContextClass::Class2, |q, _| [q, 0.0, 0.0, 0.0]),
    (3, ContextClass::Class1, |q, p| [-q, q, p, 0.0]),
    (3, ContextClass::Class2, |q, p| [-q, q, 0.0, p]),
    (4, ContextClass::Class1, |q, p| [q, 0.0, -p, p]),
    (4, ContextClass::Class2, |q, p| [0.0, q, -p, p]),
];

/// Instantiates the eight phase-placement patterns on `phase_grid` for both
/// φ′ and φ, keeps those that lift `kind`, and drops structural duplicates.
/// Each survivor is tagged with the class of its collapsed outcomes.
pub fn enumerate_representatives(
    kind: BellKind,
    presentation_frame: Frame,
    phase_grid: &[f64],
) -> Result<Vec<Representative>> {
    if phase_grid.is_empty() {
        return Err(Error::Domain("phase grid is empty".into()));
    }
    let base = lift(kind, ContextClass::Class1, presentation_frame)?;
    let measurement = presentation_frame
        .conjugate()
        .expect("Z and X are conjugate");
    let reference = collapse_pair(&base, measurement)?;
    let first = (
        base.sum.terms()[0].sym.a.index(),
        base.sum.terms()[0].sym.b.index(),
    );
    let second = (
        base.sum.terms()[1].sym.a.index(),
        base.sum.terms()[1].sym.b.index(),
    );

    let mut out: Vec<Representative> = Vec::new();
    for &(row, column, phases) in &PATTERNS {
        for &phi_prime in phase_grid {
            for &phi in phase_grid {
                let [va, vb, wa, wb] = phases(phi_prime, phi);
                let sum = two_term(
                    presentation_frame,
                    first,
                    (cis(va), cis(vb)),
                    second,
                    (cis(wa), cis(wb)),
                )?;
                if out.iter().any(|r| r.sum == sum) {
                    continue;
                }
                let local_phases = (relative_phase(&sum, Side::A), relative_phase(&sum, Side::B));
                let mut rep = Representative {
                    kind,
                    klass: column,
                    presentation_frame,
                    sum,
                    local_phases,
                    superposition_phase: base.superposition_phase,
                    origin: Origin::Pattern {
                        row,
                        column,
                        phi_prime,
                        phi,
                    },
                };
                if !rep.quotient_holds() {
                    continue;
                }
                let local = collapse_pair(&rep, measurement)?;
                rep.klass = if equal_up_to_global_phase(
                    &local.psi_a.ket,
                    &reference.psi_a.ket,
                    COMPOSE_TOL,
                ) {
                    ContextClass::Class1
                } else {
                    ContextClass::Class2
                };
                out.push(rep);
            }
        }
    }
    Ok(out)
}

/// There is no representative giving definite outcomes in two different
/// frames at once. Always fails; the error carries the joint-eigenvector
/// witness for σ_frame_a ⊗ σ_frame_b.
pub fn mixed_lift(kind: BellKind, frame_a: Frame, frame_b: Frame) -> Result<Representative> {
    if frame_a == frame_b {
        return Err(Error::Domain(format!(
            "mixed lift needs two different frames, got {frame_a} twice"
        )));
    }
    Err(Error::NoGo {
        kind,
        frame_a,
        frame_b,
        witness: is_joint_eigenvector(&bell(kind), &pauli(frame_a), &pauli(frame_b)),
    })
}

/// Repeated measurements of subsystem A alone after its partner is gone.
/// A's ket is the one fixed by `(kind, klass)` for `prepared_frame`. A
/// device aligned with that ket returns its eigenvalue every time;
/// otherwise outcomes are independent Born draws keyed by `seed`.
pub fn isolated_sequence(
    kind: BellKind,
    klass: ContextClass,
    prepared_frame: Frame,
    device_frame: Frame,
    n: usize,
    seed: u64,
) -> Result<Vec<Outcome>> {
    if n == 0 {
        return Err(Error::Domain("sequence length must be at least 1".into()));
    }
    let psi = local_states(kind, klass, prepared_frame)?.psi_a.ket;
    let plus = SubSymbol::basis(device_frame, 0).ket();
    let p_plus = plus.inner(&psi).norm_sqr();
    if (p_plus - 1.0).abs() <= EXACT_TOL {
        return Ok(vec![Outcome::Plus; n]);
    }
    if p_plus <= EXACT_TOL {
        return Ok(vec![Outcome::Minus; n]);
    }
    Ok((0..n as u64)
        .map(|i| {
            if keyed_unit(seed, ISOLATED_STREAM, i) < p_plus {
                Outcome::Plus
            } else {
                Outcome::Minus
            }
        })
        .collect())
}
