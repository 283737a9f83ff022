//! Frozen reference data: the sixteen fixed pre-images with their collapsed
//! local kets, the quarter-turn Y lifts, and the closed-form correlation
//! claims compared against the oracle.

use serde::{Deserialize, Serialize};

use crate::contextual::{collapse_pair, lift, search_y_lifts, ContextClass, LocalPair, Origin};
use crate::error::{Error, Result};
use crate::hilbert::{BellKind, Frame, Outcome};
use crate::measurement::{check_closed_form, oracle_closed_form, ClosedForm, ClosedFormCheck};

const EMBEDDED: &str = include_str!("../fixtures/lifts.json");

/// One lift and its collapse, in text form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftFixture {
    pub kind: String,
    pub class: String,
    pub presentation: String,
    pub sum: String,
    pub measurement: String,
    pub psi_a: String,
    pub psi_b: String,
    pub outcomes: [i8; 2],
}

/// A quarter-turn lift serving Y measurements. `quarter_turns` are the
/// second term's phases on A and B in units of π/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YLiftFixture {
    pub kind: String,
    pub class: String,
    pub presentation: String,
    pub quarter_turns: [u8; 2],
    pub sum: String,
    pub psi_a: String,
    pub psi_b: String,
    pub outcomes: [i8; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormFixture {
    pub source: String,
    pub kind: String,
    pub negated: bool,
    pub sum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSet {
    pub lifts: Vec<LiftFixture>,
    pub y_lifts: Vec<YLiftFixture>,
    pub closed_forms: Vec<ClosedFormFixture>,
}

pub fn embedded() -> Result<FixtureSet> {
    serde_json::from_str(EMBEDDED)
        .map_err(|e| Error::Domain(format!("embedded fixture file is malformed: {e}")))
}

fn local_text(pair: &LocalPair) -> Result<(String, String, [i8; 2])> {
    let sym = |k: &crate::contextual::LocalKet| {
        k.symbol(pair.outcome_frame)
            .map(|s| s.to_string())
            .ok_or_else(|| Error::Domain("collapsed ket is not a basis ket".into()))
    };
    let (a, b) = pair.outcomes()?;
    Ok((
        sym(&pair.psi_a)?,
        sym(&pair.psi_b)?,
        [i8::from(a), i8::from(b)],
    ))
}

/// The sixteen fixed pre-images, X presentations first, in fixture order.
pub fn generate_lifts() -> Result<Vec<LiftFixture>> {
    let order = [
        BellKind::PsiMinus,
        BellKind::PhiMinus,
        BellKind::PhiPlus,
        BellKind::PsiPlus,
    ];
    let mut out = Vec::new();
    for presentation in [Frame::X, Frame::Z] {
        let measurement = presentation.conjugate().expect("Z and X are conjugate");
        for kind in order {
            for klass in ContextClass::ALL {
                let rep = lift(kind, klass, presentation)?;
                let (psi_a, psi_b, outcomes) = local_text(&collapse_pair(&rep, measurement)?)?;
                out.push(LiftFixture {
                    kind: kind.token().into(),
                    class: klass.token().into(),
                    presentation: presentation.token().into(),
                    sum: rep.sum.to_string(),
                    measurement: measurement.token().into(),
                    psi_a,
                    psi_b,
                    outcomes,
                });
            }
        }
    }
    Ok(out)
}

/// The first quarter-turn lift per kind and class.
pub fn generate_y_lifts() -> Result<Vec<YLiftFixture>> {
    let mut out = Vec::new();
    for kind in BellKind::ALL {
        let found = search_y_lifts(kind);
        for klass in ContextClass::ALL {
            let c = found
                .iter()
                .find(|c| c.representative.klass == klass)
                .ok_or_else(|| Error::Domain(format!("no Y lift for {kind} {klass}")))?;
            let Origin::QuarterTurns { a, b } = c.representative.origin else {
                unreachable!("search results carry quarter turns")
            };
            let (psi_a, psi_b, outcomes) = local_text(&c.local)?;
            out.push(YLiftFixture {
                kind: kind.token().into(),
                class: klass.token().into(),
                presentation: c.representative.presentation_frame.token().into(),
                quarter_turns: [a, b],
                sum: c.representative.sum.to_string(),
                psi_a,
                psi_b,
                outcomes,
            });
        }
    }
    Ok(out)
}

/// Fixtures recomputed from the library, with the closed-form claims
/// copied from the embedded file.
pub fn generate() -> Result<FixtureSet> {
    Ok(FixtureSet {
        lifts: generate_lifts()?,
        y_lifts: generate_y_lifts()?,
        closed_forms: embedded()?.closed_forms,
    })
}

fn parse_kind(s: &str) -> Result<BellKind> {
    BellKind::from_token(s).ok_or_else(|| Error::Domain(format!("unknown kind token {s}")))
}

/// Each recorded closed form, plus the oracle's own, checked against the
/// oracle on a degree grid.
pub fn closed_form_report() -> Result<Vec<ClosedFormCheck>> {
    let mut out = Vec::new();
    for f in embedded()?.closed_forms {
        let kind = parse_kind(&f.kind)?;
        out.push(check_closed_form(
            &f.source,
            kind,
            ClosedForm {
                negated: f.negated,
                sum: f.sum,
            },
        ));
    }
    for kind in BellKind::ALL {
        out.push(check_closed_form("oracle", kind, oracle_closed_form(kind)));
    }
    Ok(out)
}

/// Parses an outcome pair from a fixture.
pub fn fixture_outcomes(o: [i8; 2]) -> Result<(Outcome, Outcome)> {
    let conv = |v: i8| Outcome::try_from(v).map_err(Error::Domain);
    Ok((conv(o[0])?, conv(o[1])?))
}
