//! The measuring station: reads pair descriptors, measures its own half
//! locally and writes one report per pair.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::contextual::{local_states, ContextClass};
use crate::error::{Error, Result};
use crate::hilbert::{BellKind, Frame, Outcome, Side};
use crate::rng::{keyed_coin, SETTING_STREAM_A, SETTING_STREAM_B};

use super::protocol::{decode, encode, Message, StationReport};

/// How a station picks its frame for each pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Fixed(Frame),
    /// Z or X with probability 1/2, keyed by `(seed, station, pair_id)`.
    Random,
}

impl Policy {
    pub fn token(self) -> &'static str {
        match self {
            Policy::Fixed(Frame::Z) => "z",
            Policy::Fixed(Frame::X) => "x",
            Policy::Fixed(Frame::Y) => "y",
            Policy::Random => "random",
        }
    }

    /// Accepts `z`, `x` and `random`; stations measure in Z or X only.
    pub fn from_token(s: &str) -> Option<Policy> {
        match s.to_ascii_lowercase().as_str() {
            "z" => Some(Policy::Fixed(Frame::Z)),
            "x" => Some(Policy::Fixed(Frame::X)),
            "random" => Some(Policy::Random),
            _ => None,
        }
    }

    /// The frame for `pair_id`. Depends only on this station's own inputs.
    pub fn setting(self, side: Side, seed: u64, pair_id: u64) -> Frame {
        match self {
            Policy::Fixed(f) => f,
            Policy::Random => {
                let stream = match side {
                    Side::A => SETTING_STREAM_A,
                    Side::B => SETTING_STREAM_B,
                };
                if keyed_coin(seed, stream, pair_id) {
                    Frame::Z
                } else {
                    Frame::X
                }
            }
        }
    }
}

/// What a station saw on its input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StationSummary {
    pub reported: u64,
    pub rejected: u64,
    pub saw_end: bool,
}

/// Closes every inherited descriptor above stderr, so that the station's
/// only routes are the pipes it was given.
#[cfg(target_os = "linux")]
pub fn detach_inherited_descriptors() {
    use std::os::fd::{FromRawFd, OwnedFd};

    let fds: Vec<i32> = match std::fs::read_dir("/proc/self/fd") {
        Ok(dir) => dir
            .filter_map(|e| e.ok()?.file_name().to_str()?.parse().ok())
            .filter(|&fd| fd > 2)
            .collect(),
        Err(_) => return,
    };
    for fd in fds {
        // the directory handle used above is already closed; closing it
        // again fails harmlessly with EBADF
        if std::fs::read_link(format!("/proc/self/fd/{fd}")).is_ok() {
            // SAFETY: nothing else in this process uses descriptors above 2
            // at this point of station start-up.
            drop(unsafe { OwnedFd::from_raw_fd(fd) });
        }
    }
}

#[cfg(not(target_os = "linux"))]
pub fn detach_inherited_descriptors() {}

fn now_ns() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

/// Runs one station until an `end` message or end of input. Malformed
/// lines are reported on `errors` and skipped. After `end` the station
/// echoes `end` and keeps draining input until it closes.
pub fn run_station<R: BufRead, W: Write, E: Write>(
    input: R,
    mut output: W,
    mut errors: E,
    side: Side,
    policy: Policy,
    seed: u64,
) -> Result<StationSummary> {
    let mut cache: HashMap<(BellKind, ContextClass, Frame), Outcome> = HashMap::new();
    let mut summary = StationSummary::default();
    let mut lines = input.lines();
    for line in lines.by_ref() {
        let line = line?;
        match decode(&line) {
            Ok(Message::Pair(p)) => {
                let setting = policy.setting(side, seed, p.pair_id);
                let outcome = match cache.get(&(p.kind, p.klass, setting)) {
                    Some(o) => *o,
                    None => {
                        let pair = local_states(p.kind, p.klass, setting)?;
                        let (a, b) = pair.outcomes()?;
                        let o = if side == Side::A { a } else { b };
                        cache.insert((p.kind, p.klass, setting), o);
                        o
                    }
                };
                let report = StationReport {
                    pair_id: p.pair_id,
                    station: side,
                    setting,
                    outcome,
                    wall_clock_ns: Some(now_ns()),
                };
                writeln!(output, "{}", encode(&Message::Report(report)))?;
                summary.reported += 1;
            }
            Ok(Message::End) => {
                summary.saw_end = true;
                break;
            }
            Ok(Message::Report(_)) => {
                summary.rejected += 1;
                writeln!(errors, "station {side}: unexpected report message")?;
            }
            Err(e) => {
                summary.rejected += 1;
                writeln!(errors, "station {side}: {e}")?;
            }
        }
    }
    writeln!(output, "{}", encode(&Message::End))?;
    output.flush()?;
    // stay alive until the source hangs up
    for line in lines {
        if line.is_err() {
            break;
        }
    }
    if summary.saw_end {
        Ok(summary)
    } else {
        Err(Error::Transport(format!(
            "station {side}: input closed before end message"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stations::protocol::PairDescriptor;

    fn feed(msgs: &[Message]) -> String {
        msgs.iter().map(|m| encode(m) + "\n").collect()
    }

    #[test]
    fn reports_each_pair() {
        let input = feed(&[
            Message::Pair(PairDescriptor {
                pair_id: 0,
                kind: BellKind::PsiPlus,
                klass: ContextClass::Class1,
            }),
            Message::Pair(PairDescriptor {
                pair_id: 1,
                kind: BellKind::PsiPlus,
                klass: ContextClass::Class2,
            }),
            Message::End,
        ]);
        let mut out = Vec::new();
        let mut err = Vec::new();
        let s = run_station(
            input.as_bytes(),
            &mut out,
            &mut err,
            Side::B,
            Policy::Fixed(Frame::Z),
            1,
        )
        .unwrap();
        assert_eq!(s.reported, 2);
        let lines: Vec<Message> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| decode(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 3);
        let Message::Report(r0) = lines[0] else {
            panic!()
        };
        let Message::Report(r1) = lines[1] else {
            panic!()
        };
        assert_eq!((r0.outcome, r1.outcome), (Outcome::Minus, Outcome::Plus));
        assert_eq!(lines[2], Message::End);
    }

    #[test]
    fn skips_malformed_lines() {
        let input = format!("garbage\n{}\n", encode(&Message::End));
        let mut out = Vec::new();
        let mut err = Vec::new();
        let s = run_station(
            input.as_bytes(),
            &mut out,
            &mut err,
            Side::A,
            Policy::Random,
            1,
        )
        .unwrap();
        assert_eq!(s.rejected, 1);
        assert!(!err.is_empty());
    }

    #[test]
    fn truncated_input_is_a_transport_error() {
        let mut out = Vec::new();
        let r = run_station(
            &b""[..],
            &mut out,
            std::io::sink(),
            Side::A,
            Policy::Random,
            1,
        );
        assert!(matches!(r, Err(Error::Transport(_))));
    }

    #[test]
    fn random_policy_depends_on_own_side_only() {
        let a: Vec<Frame> = (0..64)
            .map(|i| Policy::Random.setting(Side::A, 5, i))
            .collect();
        let b: Vec<Frame> = (0..64)
            .map(|i| Policy::Random.setting(Side::B, 5, i))
            .collect();
        assert_ne!(a, b);
        assert!(a.contains(&Frame::Z) && a.contains(&Frame::X));
    }
}
