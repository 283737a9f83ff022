//! Source, two station processes and a collector.
//!
//! The source writes descriptors to each station's stdin; each station
//! writes reports to its own stdout, read by a collector thread. The only
//! transport routes are source→A, source→B, A→collector and B→collector.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::thread;

use serde::Serialize;

use crate::contextual::{local_states, ContextClass};
use crate::error::{Error, Result};
use crate::hilbert::{bell, BellKind, Frame, Outcome, Side};
use crate::measurement::{draw_class, CorrelationEstimate};
use crate::oracle::born_joint_frames;

use super::protocol::{decode, encode, Message, PairDescriptor, StationReport};
use super::station::Policy;

/// How to start a station process. The harness appends
/// `--side <a|b> --policy <p> --seed <n>`.
#[derive(Debug, Clone)]
pub struct StationCommand {
    pub program: PathBuf,
    pub args: Vec<OsString>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: BellKind,
    pub n_pairs: u64,
    pub policy_a: Policy,
    pub policy_b: Policy,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JoinedRecord {
    pub pair_id: u64,
    pub klass: ContextClass,
    pub setting_a: Frame,
    pub setting_b: Frame,
    pub a: Outcome,
    pub b: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LostPair {
    pub pair_id: u64,
    pub missing: Vec<Side>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingEstimate {
    pub setting_a: Frame,
    pub setting_b: Frame,
    pub estimate: CorrelationEstimate,
    pub oracle: f64,
}

/// Open transport endpoints of each station and the routes the harness
/// built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Topology {
    pub routes: Vec<(String, String)>,
    pub endpoints_a: Vec<String>,
    pub endpoints_b: Vec<String>,
    pub shared: Vec<String>,
    /// `false` when endpoints could not be inspected on this platform.
    pub inspected: bool,
}

impl Topology {
    /// No pipe or socket is open in both stations.
    pub fn no_station_route(&self) -> bool {
        self.inspected && self.shared.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Vec<JoinedRecord>,
    pub lost: Vec<LostPair>,
    pub estimates: Vec<SettingEstimate>,
    pub topology: Topology,
    /// Failures of the source or a station. Pairs they cost are in `lost`.
    pub transport_errors: Vec<String>,
    /// Each station's report lines with the wall clock removed.
    pub stream_a: Vec<String>,
    pub stream_b: Vec<String>,
    pub stderr_a: String,
    pub stderr_b: String,
}

impl ExperimentResult {
    pub fn estimate(&self, a: Frame, b: Frame) -> Option<&SettingEstimate> {
        self.estimates
            .iter()
            .find(|e| e.setting_a == a && e.setting_b == b)
    }
}

fn endpoints(pid: u32) -> Option<Vec<String>> {
    if !cfg!(target_os = "linux") {
        return None;
    }
    let dir = std::fs::read_dir(format!("/proc/{pid}/fd")).ok()?;
    let mut out: Vec<String> = dir
        .filter_map(|e| {
            let target = std::fs::read_link(e.ok()?.path()).ok()?;
            let t = target.to_string_lossy().into_owned();
            (t.starts_with("pipe:") || t.starts_with("socket:")).then_some(t)
        })
        .collect();
    out.sort();
    out.dedup();
    Some(out)
}

fn inspect(a: &Child, b: &Child) -> Topology {
    let routes = [
        ("source", "A"),
        ("source", "B"),
        ("A", "collector"),
        ("B", "collector"),
    ]
    .iter()
    .map(|(x, y)| (x.to_string(), y.to_string()))
    .collect();
    match (endpoints(a.id()), endpoints(b.id())) {
        (Some(ea), Some(eb)) => {
            let shared = ea.iter().filter(|e| eb.contains(e)).cloned().collect();
            Topology {
                routes,
                endpoints_a: ea,
                endpoints_b: eb,
                shared,
                inspected: true,
            }
        }
        _ => Topology {
            routes,
            endpoints_a: Vec::new(),
            endpoints_b: Vec::new(),
            shared: Vec::new(),
            inspected: false,
        },
    }
}

fn spawn(cmd: &StationCommand, side: Side, policy: Policy, seed: u64) -> Result<Child> {
    Command::new(&cmd.program)
        .args(&cmd.args)
        .arg("--side")
        .arg(side.token().to_ascii_lowercase())
        .arg("--policy")
        .arg(policy.token())
        .arg("--seed")
        .arg(seed.to_string())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Transport(format!("cannot start station {side}: {e}")))
}

struct Collected {
    reports: Vec<StationReport>,
    lines: Vec<String>,
    saw_end: bool,
    errors: Vec<String>,
}

fn collect<R: Read>(out: R, side: Side) -> Collected {
    let mut c = Collected {
        reports: Vec::new(),
        lines: Vec::new(),
        saw_end: false,
        errors: Vec::new(),
    };
    for line in BufReader::new(out).lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                c.errors.push(format!("read from station {side}: {e}"));
                break;
            }
        };
        match decode(&line) {
            Ok(Message::Report(r)) => {
                let bare = StationReport {
                    wall_clock_ns: None,
                    ..r
                };
                c.lines.push(encode(&Message::Report(bare)));
                c.reports.push(r);
            }
            Ok(Message::End) => {
                c.saw_end = true;
                break;
            }
            Ok(Message::Pair(_)) => c.errors.push(format!("station {side} sent a pair message")),
            Err(e) => c.errors.push(format!("station {side}: {e}")),
        }
    }
    c
}

type Fed = (std::io::Result<()>, Option<ChildStdin>, Option<ChildStdin>);

fn feed(a: ChildStdin, b: ChildStdin, kind: BellKind, n: u64, seed: u64) -> Fed {
    let mut wa = BufWriter::new(a);
    let mut wb = BufWriter::new(b);
    let mut send = || -> std::io::Result<()> {
        for pair_id in 0..n {
            let line = encode(&Message::Pair(PairDescriptor {
                pair_id,
                kind,
                klass: draw_class(seed, pair_id),
            }));
            writeln!(wa, "{line}")?;
            writeln!(wb, "{line}")?;
        }
        let end = encode(&Message::End);
        writeln!(wa, "{end}")?;
        writeln!(wb, "{end}")?;
        wa.flush()?;
        wb.flush()
    };
    let res = send();
    if res.is_err() {
        // hang up on both stations so neither waits for more input
        return (res, None, None);
    }
    (res, wa.into_inner().ok(), wb.into_inner().ok())
}

fn read_all<R: Read + Send + 'static>(r: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut s = String::new();
        if let Some(mut r) = r {
            let _ = r.read_to_string(&mut s);
        }
        s
    })
}

/// Runs the source, both stations and the collector, then joins reports by
/// pair id. Pairs missing a report are listed in `lost`; a report for an
/// unknown or already reported pair, or one whose outcome disagrees with
/// the station's local prediction, is an integrity error.
pub fn run_experiment(
    station: &StationCommand,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    if config.n_pairs == 0 {
        return Err(Error::Domain(
            "an experiment needs at least one pair".into(),
        ));
    }
    let mut child_a = spawn(station, Side::A, config.policy_a, config.seed)?;
    let mut child_b = match spawn(station, Side::B, config.policy_b, config.seed) {
        Ok(c) => c,
        Err(e) => {
            let _ = child_a.kill();
            let _ = child_a.wait();
            return Err(e);
        }
    };

    let err_a = read_all(child_a.stderr.take());
    let err_b = read_all(child_b.stderr.take());
    let out_a = child_a.stdout.take().expect("stdout is piped");
    let out_b = child_b.stdout.take().expect("stdout is piped");
    let col_a = thread::spawn(move || collect(out_a, Side::A));
    let col_b = thread::spawn(move || collect(out_b, Side::B));

    let in_a = child_a.stdin.take().expect("stdin is piped");
    let in_b = child_b.stdin.take().expect("stdin is piped");
    let (kind, n, seed) = (config.kind, config.n_pairs, config.seed);
    let source = thread::spawn(move || feed(in_a, in_b, kind, n, seed));

    let collected_a = col_a
        .join()
        .map_err(|_| Error::Transport("collector A panicked".into()))?;
    let collected_b = col_b
        .join()
        .map_err(|_| Error::Transport("collector B panicked".into()))?;

    // both stations have answered `end` and wait for their input to close
    let topology = inspect(&child_a, &child_b);

    let (sent, stdin_a, stdin_b) = source
        .join()
        .map_err(|_| Error::Transport("source panicked".into()))?;
    drop(stdin_a);
    drop(stdin_b);
    let status_a = child_a.wait()?;
    let status_b = child_b.wait()?;
    let stderr_a = err_a.join().unwrap_or_default();
    let stderr_b = err_b.join().unwrap_or_default();

    let mut transport_errors = Vec::new();
    if let Err(e) = sent {
        transport_errors.push(format!("source could not write: {e}"));
    }
    for (side, status, stderr) in [
        (Side::A, status_a, &stderr_a),
        (Side::B, status_b, &stderr_b),
    ] {
        if !status.success() {
            transport_errors.push(format!(
                "station {side} exited with {status}: {}",
                stderr.trim()
            ));
        }
    }
    for (side, c) in [(Side::A, &collected_a), (Side::B, &collected_b)] {
        if !c.saw_end {
            transport_errors.push(format!("station {side} closed its output before end"));
        }
        if let Some(e) = c.errors.first() {
            return Err(Error::Integrity(e.clone()));
        }
    }

    let (records, lost) = join(config, &collected_a.reports, &collected_b.reports)?;
    let estimates = estimates(config.kind, &records);
    Ok(ExperimentResult {
        config: config.clone(),
        records,
        lost,
        estimates,
        topology,
        transport_errors,
        stream_a: collected_a.lines,
        stream_b: collected_b.lines,
        stderr_a,
        stderr_b,
    })
}

fn join(
    config: &ExperimentConfig,
    reports_a: &[StationReport],
    reports_b: &[StationReport],
) -> Result<(Vec<JoinedRecord>, Vec<LostPair>)> {
    let mut predicted: HashMap<(ContextClass, Frame), (Outcome, Outcome)> = HashMap::new();
    let mut by_id: BTreeMap<u64, [Option<StationReport>; 2]> = BTreeMap::new();
    for (expected_side, reports) in [(Side::A, reports_a), (Side::B, reports_b)] {
        for r in reports {
            if r.station != expected_side {
                return Err(Error::Integrity(format!(
                    "report for pair {} claims station {} on the {} route",
                    r.pair_id, r.station, expected_side
                )));
            }
            if r.pair_id >= config.n_pairs {
                return Err(Error::Integrity(format!(
                    "report for unknown pair {}",
                    r.pair_id
                )));
            }
            let slot =
                &mut by_id.entry(r.pair_id).or_default()[(expected_side == Side::B) as usize];
            if slot.is_some() {
                return Err(Error::Integrity(format!(
                    "duplicate report for pair {} from station {}",
                    r.pair_id, r.station
                )));
            }
            *slot = Some(*r);
        }
    }
    let mut records = Vec::new();
    let mut lost = Vec::new();
    for pair_id in 0..config.n_pairs {
        let klass = draw_class(config.seed, pair_id);
        match by_id.get(&pair_id) {
            Some([Some(a), Some(b)]) => {
                for r in [a, b] {
                    let key = (klass, r.setting);
                    let pred = match predicted.get(&key) {
                        Some(p) => *p,
                        None => {
                            let p = local_states(config.kind, klass, r.setting)?.outcomes()?;
                            predicted.insert(key, p);
                            p
                        }
                    };
                    let want = if r.station == Side::A { pred.0 } else { pred.1 };
                    if r.outcome != want {
                        return Err(Error::Integrity(format!(
                            "station {} reported {} for pair {pair_id}, local prediction is {want}",
                            r.station, r.outcome
                        )));
                    }
                }
                records.push(JoinedRecord {
                    pair_id,
                    klass,
                    setting_a: a.setting,
                    setting_b: b.setting,
                    a: a.outcome,
                    b: b.outcome,
                });
            }
            other => {
                let (ra, rb) = other.map(|s| (s[0], s[1])).unwrap_or((None, None));
                let mut missing = Vec::new();
                if ra.is_none() {
                    missing.push(Side::A);
                }
                if rb.is_none() {
                    missing.push(Side::B);
                }
                lost.push(LostPair { pair_id, missing });
            }
        }
    }
    Ok((records, lost))
}

fn estimates(kind: BellKind, records: &[JoinedRecord]) -> Vec<SettingEstimate> {
    let state = bell(kind);
    let mut out = Vec::new();
    for fa in [Frame::Z, Frame::X] {
        for fb in [Frame::Z, Frame::X] {
            let products: Vec<i32> = records
                .iter()
                .filter(|r| r.setting_a == fa && r.setting_b == fb)
                .map(|r| r.a.value() * r.b.value())
                .collect();
            if products.is_empty() {
                continue;
            }
            out.push(SettingEstimate {
                setting_a: fa,
                setting_b: fb,
                estimate: CorrelationEstimate::from_products(&products, None),
                oracle: born_joint_frames(&state, fa, fb).correlation(),
            });
        }
    }
    out
}
