//! Newline-delimited JSON messages between source, stations and collector.
//!
//! Lines are written with a fixed field order so that streams can be
//! compared byte for byte. Unknown fields are ignored on input; a missing
//! required field is reported by name.

use serde_json::{Map, Value};

use crate::contextual::ContextClass;
use crate::error::{Error, Result};
use crate::hilbert::{BellKind, Frame, Outcome, Side};

/// Longest accepted line, excluding the newline.
pub const MAX_LINE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairDescriptor {
    pub pair_id: u64,
    pub kind: BellKind,
    pub klass: ContextClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StationReport {
    pub pair_id: u64,
    pub station: Side,
    pub setting: Frame,
    pub outcome: Outcome,
    /// Nanoseconds since the Unix epoch when the outcome was produced.
    pub wall_clock_ns: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Message {
    Pair(PairDescriptor),
    Report(StationReport),
    End,
}

pub fn encode(msg: &Message) -> String {
    match msg {
        Message::Pair(p) => format!(
            r#"{{"type":"pair","pair_id":{},"kind":"{}","klass":"{}"}}"#,
            p.pair_id,
            p.kind.token(),
            p.klass.token()
        ),
        Message::Report(r) => {
            let mut s = format!(
                r#"{{"type":"report","pair_id":{},"station":"{}","setting":"{}","outcome":{}"#,
                r.pair_id,
                r.station.token(),
                r.setting.token(),
                r.outcome.value()
            );
            if let Some(t) = r.wall_clock_ns {
                s.push_str(&format!(r#","wall_clock_ns":{t}"#));
            }
            s.push('}');
            s
        }
        Message::End => r#"{"type":"end"}"#.to_string(),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::MissingField(name.to_string()))
}

fn string<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a str> {
    field(obj, name)?
        .as_str()
        .ok_or_else(|| Error::Protocol(format!("field `{name}` must be a string")))
}

fn token<T>(obj: &Map<String, Value>, name: &str, parse: fn(&str) -> Option<T>) -> Result<T> {
    let s = string(obj, name)?;
    parse(s).ok_or_else(|| Error::Protocol(format!("unknown {name} token `{s}`")))
}

fn uint(obj: &Map<String, Value>, name: &str) -> Result<u64> {
    field(obj, name)?
        .as_u64()
        .ok_or_else(|| Error::Protocol(format!("field `{name}` must be a non-negative integer")))
}

fn station_frame(s: &str) -> Option<Frame> {
    match s {
        "Z" => Some(Frame::Z),
        "X" => Some(Frame::X),
        _ => None,
    }
}

fn exact_side(s: &str) -> Option<Side> {
    match s {
        "A" => Some(Side::A),
        "B" => Some(Side::B),
        _ => None,
    }
}

pub fn decode(line: &str) -> Result<Message> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.len() > MAX_LINE {
        return Err(Error::Protocol(format!(
            "line of {} bytes exceeds the {MAX_LINE}-byte cap",
            line.len()
        )));
    }
    let value: Value =
        serde_json::from_str(line).map_err(|e| Error::Protocol(format!("malformed line: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Protocol("message is not an object".into()))?;
    match string(obj, "type")? {
        "pair" => Ok(Message::Pair(PairDescriptor {
            pair_id: uint(obj, "pair_id")?,
            kind: token(obj, "kind", BellKind::from_token)?,
            klass: token(obj, "klass", ContextClass::from_token)?,
        })),
        "report" => {
            let outcome = field(obj, "outcome")?
                .as_i64()
                .and_then(Outcome::from_value)
                .ok_or_else(|| Error::Protocol("field `outcome` must be 1 or -1".into()))?;
            let wall_clock_ns = match obj.get("wall_clock_ns") {
                None => None,
                Some(v) => Some(v.as_u64().ok_or_else(|| {
                    Error::Protocol("field `wall_clock_ns` must be a non-negative integer".into())
                })?),
            };
            Ok(Message::Report(StationReport {
                pair_id: uint(obj, "pair_id")?,
                station: token(obj, "station", exact_side)?,
                setting: token(obj, "setting", station_frame)?,
                outcome,
                wall_clock_ns,
            }))
        }
        "end" => Ok(Message::End),
        other => Err(Error::Protocol(format!("unknown message type `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_field_order() {
        let m = Message::Pair(PairDescriptor {
            pair_id: 7,
            kind: BellKind::PsiPlus,
            klass: ContextClass::Class2,
        });
        assert_eq!(
            encode(&m),
            r#"{"type":"pair","pair_id":7,"kind":"PSI_PLUS","klass":"CLASS2"}"#
        );
        let r = Message::Report(StationReport {
            pair_id: 7,
            station: Side::B,
            setting: Frame::X,
            outcome: Outcome::Minus,
            wall_clock_ns: None,
        });
        assert_eq!(
            encode(&r),
            r#"{"type":"report","pair_id":7,"station":"B","setting":"X","outcome":-1}"#
        );
        assert_eq!(encode(&Message::End), r#"{"type":"end"}"#);
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let m = decode(
            r#"{"type":"pair","extra":[1,2],"pair_id":1,"kind":"PHI_MINUS","klass":"CLASS1"}"#,
        )
        .unwrap();
        assert!(matches!(m, Message::Pair(p) if p.kind == BellKind::PhiMinus));
    }

    #[test]
    fn missing_field_is_named() {
        let e = decode(r#"{"type":"pair","pair_id":1,"kind":"PHI_MINUS"}"#).unwrap_err();
        assert!(matches!(e, Error::MissingField(ref f) if f == "klass"));
        let e = decode(r#"{"pair_id":1}"#).unwrap_err();
        assert!(matches!(e, Error::MissingField(ref f) if f == "type"));
    }

    #[test]
    fn rejects_bad_values() {
        for line in [
            r#"{"type":"report","pair_id":1,"station":"A","setting":"Y","outcome":1}"#,
            r#"{"type":"report","pair_id":1,"station":"A","setting":"Z","outcome":0}"#,
            r#"{"type":"report","pair_id":-1,"station":"A","setting":"Z","outcome":1}"#,
            r#"{"type":"pair","pair_id":1,"kind":"phi+","klass":"CLASS1"}"#,
            r#"{"type":"launch"}"#,
            "not json",
        ] {
            assert!(matches!(decode(line), Err(Error::Protocol(_))), "{line}");
        }
    }

    #[test]
    fn enforces_line_cap() {
        let pad = "x".repeat(MAX_LINE);
        let line = format!(r#"{{"type":"end","pad":"{pad}"}}"#);
        assert!(matches!(decode(&line), Err(Error::Protocol(_))));
    }

    proptest! {
        #[test]
        fn round_trip(pair_id in any::<u64>(), k in 0usize..4, c in any::<bool>(), side in any::<bool>(),
                      x in any::<bool>(), plus in any::<bool>(), clock in proptest::option::of(any::<u64>())) {
            let klass = if c { ContextClass::Class1 } else { ContextClass::Class2 };
            let p = Message::Pair(PairDescriptor { pair_id, kind: BellKind::ALL[k], klass });
            prop_assert_eq!(decode(&encode(&p)).unwrap(), p);
            let r = Message::Report(StationReport {
                pair_id,
                station: if side { Side::A } else { Side::B },
                setting: if x { Frame::X } else { Frame::Z },
                outcome: if plus { Outcome::Plus } else { Outcome::Minus },
                wall_clock_ns: clock,
            });
            let line = encode(&r);
            prop_assert!(line.len() <= MAX_LINE);
            prop_assert_eq!(decode(&line).unwrap(), r);
        }
    }
}
