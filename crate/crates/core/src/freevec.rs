//! Free vector spaces over labelled kets and the maps out of them.
//!
//! A [`FormalSum`] is kept exactly as written: repeated symbols are not
//! merged and term order is preserved, so `3e0 - 2e0 + e1` and `e0 + e1`
//! are different values. [`normal_form`] gives the merged, sorted view when
//! a canonical comparison is wanted.
//!
//! The relation subspace is never rewritten syntactically. Membership is
//! decided through the quotient image: a sum of pairs lies in the relation
//! subspace exactly when [`quotient_image`] is the zero tensor.

mod text;

pub use text::{parse_pair_symbol, parse_sub_symbol};

use std::cmp::Ordering;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    self, check_unit_phase, equal_up_to_global_phase, frame_amps, kron, norm2, norm4, Amps2, Amps4,
    Frame, Ket, Scalar, Side, TensorState, COMPOSE_TOL, EXACT_TOL, ONE, ZERO,
};

/// A formal basis symbol of one subsystem: the `index`-th ket of `frame`
/// carrying a unit `phase`, written `|0>`, `|-1'>`, `|i0''>`, ...
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SubSymbol {
    frame: Frame,
    index: u8,
    phase: Scalar,
}

impl SubSymbol {
    pub fn new(frame: Frame, index: u8, phase: Scalar) -> Result<SubSymbol> {
        if index > 1 {
            return Err(Error::Domain(format!("basis index {index} is not 0 or 1")));
        }
        check_unit_phase(phase)?;
        Ok(SubSymbol {
            frame,
            index,
            phase,
        })
    }

    /// Unphased basis symbol.
    pub fn basis(frame: Frame, index: u8) -> SubSymbol {
        assert!(index <= 1, "basis index must be 0 or 1");
        SubSymbol {
            frame,
            index,
            phase: ONE,
        }
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn index(&self) -> u8 {
        self.index
    }

    pub fn phase(&self) -> Scalar {
        self.phase
    }

    /// Phase argument in [0, 2π).
    pub fn phase_arg(&self) -> f64 {
        let a = self.phase.arg();
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }

    pub fn with_phase(&self, phase: Scalar) -> Result<SubSymbol> {
        SubSymbol::new(self.frame, self.index, phase)
    }

    /// Multiplies `factor` into the phase. `factor` must have unit modulus.
    pub fn rephase(&self, factor: Scalar) -> Result<SubSymbol> {
        check_unit_phase(factor)?;
        let p = self.phase * factor;
        // keep the phase exactly on the unit circle
        SubSymbol::new(self.frame, self.index, p / p.norm())
    }

    pub fn ket(&self) -> Ket {
        hilbert::frame_ket(self.frame, self.index, self.phase)
            .expect("SubSymbol invariants guarantee a valid ket")
    }
}

impl PartialEq for SubSymbol {
    fn eq(&self, other: &Self) -> bool {
        self.frame == other.frame
            && self.index == other.index
            && (self.phase - other.phase).norm() <= EXACT_TOL
    }
}

/// An arbitrary vector of a subsystem used as a formal symbol. The free
/// vector space on the whole space U has one basis symbol per vector, so
/// `(ru + sv, w)` is a single symbol, unrelated to `(u, w)` and `(v, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Amps2);

impl Point {
    pub fn of(sym: &SubSymbol) -> Point {
        Point(sym.ket().amps())
    }

    pub fn combine(r: Scalar, u: &Point, s: Scalar, v: &Point) -> Point {
        Point([r * u.0[0] + s * v.0[0], r * u.0[1] + s * v.0[1]])
    }
}

/// Symbols of a free vector space.
pub trait Symbol: Clone + std::fmt::Debug {
    /// Structural identity.
    fn same(&self, other: &Self) -> bool;
    /// A fixed total order used by [`normal_form`].
    fn order(&self, other: &Self) -> Ordering;
}

/// Symbols with an image in the subsystem Hilbert space.
pub trait Embed: Symbol {
    fn embed(&self) -> Amps2;
}

impl Symbol for SubSymbol {
    fn same(&self, other: &Self) -> bool {
        self == other
    }

    fn order(&self, other: &Self) -> Ordering {
        self.frame
            .cmp(&other.frame)
            .then(self.index.cmp(&other.index))
            .then_with(|| {
                if self == other {
                    Ordering::Equal
                } else {
                    self.phase_arg().total_cmp(&other.phase_arg())
                }
            })
    }
}

impl Embed for SubSymbol {
    fn embed(&self) -> Amps2 {
        let b = frame_amps(self.frame, self.index);
        [b[0] * self.phase, b[1] * self.phase]
    }
}

impl Symbol for Point {
    fn same(&self, other: &Self) -> bool {
        self.0
            .iter()
            .zip(other.0.iter())
            .all(|(a, b)| (a - b).norm() <= EXACT_TOL)
    }

    fn order(&self, other: &Self) -> Ordering {
        if self.same(other) {
            return Ordering::Equal;
        }
        let key = |p: &Point| [p.0[0].re, p.0[0].im, p.0[1].re, p.0[1].im];
        let (a, b) = (key(self), key(other));
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    }
}

impl Embed for Point {
    fn embed(&self) -> Amps2 {
        self.0
    }
}

/// A basis symbol `(a, b)` of the free vector space on U × V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair<S> {
    pub a: S,
    pub b: S,
}

pub type PairSymbol = Pair<SubSymbol>;

impl<S> Pair<S> {
    pub fn new(a: S, b: S) -> Pair<S> {
        Pair { a, b }
    }

    pub fn side(&self, side: Side) -> &S {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }
}

impl<S: Symbol> Symbol for Pair<S> {
    fn same(&self, other: &Self) -> bool {
        self.a.same(&other.a) && self.b.same(&other.b)
    }

    fn order(&self, other: &Self) -> Ordering {
        self.a.order(&other.a).then_with(|| self.b.order(&other.b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term<S> {
    pub coeff: Scalar,
    pub sym: S,
}

impl<S> Term<S> {
    pub fn new(coeff: Scalar, sym: S) -> Term<S> {
        Term { coeff, sym }
    }

    pub fn unit(sym: S) -> Term<S> {
        Term { coeff: ONE, sym }
    }
}

/// A finite formal linear combination, kept as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormalSum<S> {
    terms: Vec<Term<S>>,
}

impl<S> Default for FormalSum<S> {
    fn default() -> Self {
        FormalSum { terms: Vec::new() }
    }
}

impl<S: Clone> FormalSum<S> {
    pub fn new() -> FormalSum<S> {
        FormalSum::default()
    }

    pub fn from_terms(terms: Vec<Term<S>>) -> FormalSum<S> {
        FormalSum { terms }
    }

    /// Sum of `sym`s, each with coefficient 1.
    pub fn of_symbols<I: IntoIterator<Item = S>>(syms: I) -> FormalSum<S> {
        FormalSum {
            terms: syms.into_iter().map(Term::unit).collect(),
        }
    }

    pub fn push(&mut self, coeff: Scalar, sym: S) -> &mut Self {
        self.terms.push(Term::new(coeff, sym));
        self
    }

    pub fn with(mut self, coeff: Scalar, sym: S) -> Self {
        self.terms.push(Term::new(coeff, sym));
        self
    }

    pub fn terms(&self) -> &[Term<S>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Formal concatenation `self + other`.
    pub fn concat(&self, other: &FormalSum<S>) -> FormalSum<S> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FormalSum { terms }
    }

    /// Formal difference `self - other`.
    pub fn minus(&self, other: &FormalSum<S>) -> FormalSum<S> {
        let mut terms = self.terms.clone();
        terms.extend(
            other
                .terms
                .iter()
                .map(|t| Term::new(-t.coeff, t.sym.clone())),
        );
        FormalSum { terms }
    }

    pub fn map_symbols<T, F: FnMut(&S) -> T>(&self, mut f: F) -> FormalSum<T> {
        FormalSum {
            terms: self
                .terms
                .iter()
                .map(|t| Term::new(t.coeff, f(&t.sym)))
                .collect(),
        }
    }
}

/// Merges coefficients on structurally equal symbols, drops zero terms and
/// sorts by the symbol order.
pub fn normal_form<S: Symbol>(f: &FormalSum<S>) -> FormalSum<S> {
    let mut merged: Vec<Term<S>> = Vec::new();
    for t in &f.terms {
        match merged.iter_mut().find(|m| m.sym.same(&t.sym)) {
            Some(m) => m.coeff += t.coeff,
            None => merged.push(t.clone()),
        }
    }
    merged.retain(|t| t.coeff.norm() > EXACT_TOL);
    merged.sort_by(|x, y| x.sym.order(&y.sym));
    FormalSum { terms: merged }
}

/// Moves a unit-modulus coefficient into the phase of one side's symbol.
/// The quotient image is unchanged.
pub fn absorb_scalar(term: &Term<PairSymbol>, side: Side) -> Result<Term<PairSymbol>> {
    check_unit_phase(term.coeff).map_err(|_| {
        Error::Domain(format!(
            "cannot absorb non-unit coefficient {} into a symbol phase",
            term.coeff
        ))
    })?;
    let sym = match side {
        Side::A => Pair::new(term.sym.a.rephase(term.coeff)?, term.sym.b),
        Side::B => Pair::new(term.sym.a, term.sym.b.rephase(term.coeff)?),
    };
    Ok(Term::unit(sym))
}

/// Σ c·(a ⊗ b) over the terms, without normalization.
pub fn quotient_image<S: Embed>(f: &FormalSum<Pair<S>>) -> Amps4 {
    let mut out = [ZERO; 4];
    for t in &f.terms {
        let prod = kron(&t.sym.a.embed(), &t.sym.b.embed());
        for (o, p) in out.iter_mut().zip(prod.iter()) {
            *o += t.coeff * p;
        }
    }
    out
}

fn pair_scale<S: Embed>(f: &FormalSum<Pair<S>>) -> f64 {
    f.terms
        .iter()
        .map(|t| t.coeff.norm() * norm2(&t.sym.a.embed()) * norm2(&t.sym.b.embed()))
        .sum()
}

/// The quotient map onto the tensor product, normalized. Fails with
/// [`Error::InRelationSubspace`] when the image vanishes.
pub fn quotient_map<S: Embed>(f: &FormalSum<Pair<S>>) -> Result<TensorState> {
    let image = quotient_image(f);
    let scale = pair_scale(f);
    if scale == 0.0 || norm4(&image) <= EXACT_TOL * scale.max(1.0) {
        return Err(Error::InRelationSubspace);
    }
    TensorState::new(image)
}

/// Whether `f - g` lies in the relation subspace, up to a global phase:
/// both quotient images agree up to phase, or both vanish.
pub fn equivalent_mod_r<S: Embed>(f: &FormalSum<Pair<S>>, g: &FormalSum<Pair<S>>) -> bool {
    match (quotient_map(f), quotient_map(g)) {
        (Ok(a), Ok(b)) => equal_up_to_global_phase(&a, &b, COMPOSE_TOL),
        (Err(Error::InRelationSubspace), Err(Error::InRelationSubspace)) => true,
        _ => false,
    }
}

/// Σ c·ket over the terms, without normalization.
pub fn identify_image<S: Embed>(f: &FormalSum<S>) -> Amps2 {
    let mut out = [ZERO; 2];
    for t in &f.terms {
        let v = t.sym.embed();
        out[0] += t.coeff * v[0];
        out[1] += t.coeff * v[1];
    }
    out
}

/// The identification map from formal sums to subsystem kets: each symbol
/// becomes its ket, the kets are summed and the result normalized.
pub fn identify_t<S: Embed>(f: &FormalSum<S>) -> Result<Ket> {
    let image = identify_image(f);
    let scale: f64 = f
        .terms
        .iter()
        .map(|t| t.coeff.norm() * norm2(&t.sym.embed()))
        .sum();
    if scale == 0.0 || norm2(&image) <= EXACT_TOL * scale.max(1.0) {
        return Err(Error::DestructiveInterference);
    }
    Ket::new(image)
}

/// `r(u,w) + s(v,w) - (ru + sv, w)`
pub fn left_relation(r: Scalar, s: Scalar, u: Point, v: Point, w: Point) -> FormalSum<Pair<Point>> {
    FormalSum::new()
        .with(r, Pair::new(u, w))
        .with(s, Pair::new(v, w))
        .with(-ONE, Pair::new(Point::combine(r, &u, s, &v), w))
}

/// `r(u,v) + s(u,w) - (u, rv + sw)`
pub fn right_relation(
    r: Scalar,
    s: Scalar,
    u: Point,
    v: Point,
    w: Point,
) -> FormalSum<Pair<Point>> {
    FormalSum::new()
        .with(r, Pair::new(u, v))
        .with(s, Pair::new(u, w))
        .with(-ONE, Pair::new(u, Point::combine(r, &v, s, &w)))
}
