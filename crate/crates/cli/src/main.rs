//! `ctxphase`: inspect lifts and collapses, sweep correlations, evaluate
//! CHSH and run ensembles or the separated-stations harness.

mod output;

use std::f64::consts::SQRT_2;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use ctxphase::contextual::{
    collapse_pair, isolated_sequence, lift, lift_y, mixed_lift, ContextClass, LocalKet,
    Representative,
};
use ctxphase::fixtures;
use ctxphase::freevec::quotient_map;
use ctxphase::hilbert::{bell, equal_up_to_global_phase, expand_in_frame, BellKind, Frame, Side};
use ctxphase::measurement::{
    chsh, deterministic_chsh_values, expanded_correlation, sample_ensemble, Decomposition,
};
use ctxphase::oracle::oracle_correlation;
use ctxphase::stations::{
    detach_inherited_descriptors, run_experiment, run_station, ExperimentConfig, Policy,
    StationCommand,
};
use ctxphase::{Error, Result};

use output::{Cell, Format, Out};

#[derive(Parser)]
#[command(
    name = "ctxphase",
    version,
    about = "Contextual-phase measurement model for Bell states"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    format: Format,

    /// Seed for every random draw; a random one is chosen and printed when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone, Copy)]
struct KindArg {
    /// Bell state: phi+, phi-, psi+ or psi-.
    #[arg(long, value_parser = parse_kind)]
    kind: BellKind,
}

#[derive(Subcommand)]
enum Cmd {
    /// Amplitudes of a Bell state and its expansion in each frame.
    Bell(KindArg),
    /// A class-tagged pre-image and its quotient check.
    Lift {
        #[command(flatten)]
        kind: KindArg,
        #[arg(long, value_parser = parse_class)]
        class: ContextClass,
        /// Presentation frame z or x; y gives the quarter-turn lift for Y measurements.
        #[arg(long, value_parser = parse_frame)]
        frame: Frame,
    },
    /// Project and collapse both sides for a measurement frame.
    Collapse {
        #[command(flatten)]
        kind: KindArg,
        #[arg(long, value_parser = parse_class)]
        class: ContextClass,
        /// Measurement frame.
        #[arg(long, value_parser = parse_frame)]
        frame: Frame,
    },
    /// Correlation E(alpha, beta) by term expansion and by the oracle.
    Correlate {
        #[command(flatten)]
        kind: KindArg,
        /// Angle on A in degrees.
        #[arg(long, allow_hyphen_values = true, required_unless_present = "sweep")]
        alpha: Option<f64>,
        /// Angle on B in degrees.
        #[arg(long, allow_hyphen_values = true, required_unless_present = "sweep")]
        beta: Option<f64>,
        /// Square grid start:stop:step in degrees, applied to both angles.
        #[arg(long, conflicts_with_all = ["alpha", "beta"], value_parser = parse_sweep)]
        sweep: Option<Sweep>,
        /// Presentation frame of the two-term decomposition.
        #[arg(long, value_parser = parse_frame, default_value = "z")]
        frame: Frame,
        /// canonical, pre1 or pre2.
        #[arg(long, value_parser = parse_decomposition, default_value = "canonical")]
        decomposition: Decomposition,
    },
    /// CHSH value at four angles.
    Chsh {
        #[command(flatten)]
        kind: KindArg,
        /// a,a2,b,b2 in degrees.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        angles: Vec<f64>,
    },
    /// Class-mixture ensemble in one frame.
    Ensemble {
        #[command(flatten)]
        kind: KindArg,
        #[arg(long, value_parser = parse_frame)]
        frame: Frame,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Also print every record.
        #[arg(long)]
        records: bool,
    },
    /// Run the separated-stations harness.
    Stations {
        #[command(flatten)]
        kind: KindArg,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        /// z, x or random.
        #[arg(long, value_parser = parse_policy, default_value = "z")]
        policy_a: Policy,
        #[arg(long, value_parser = parse_policy, default_value = "z")]
        policy_b: Policy,
    },
    /// Repeated measurements of subsystem A after B is gone.
    Isolated {
        #[command(flatten)]
        kind: KindArg,
        #[arg(long, value_parser = parse_class)]
        class: ContextClass,
        /// Frame whose class-1/class-2 ket A carries.
        #[arg(long, value_parser = parse_frame)]
        prepared: Frame,
        /// Frame the device measures.
        #[arg(long, value_parser = parse_frame)]
        device: Frame,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Attempt a lift with definite outcomes in two different frames.
    Mixed {
        #[command(flatten)]
        kind: KindArg,
        #[arg(long, value_parser = parse_frame)]
        frame_a: Frame,
        #[arg(long, value_parser = parse_frame)]
        frame_b: Frame,
    },
    /// Closed-form correlation claims compared with the oracle.
    Report,
    /// Print the fixture set recomputed from the library as JSON.
    Fixtures,
    /// One measuring station on stdin/stdout (used by `stations`).
    #[command(hide = true)]
    Station {
        #[arg(long, value_parser = parse_side)]
        side: Side,
        #[arg(long, value_parser = parse_policy)]
        policy: Policy,
    },
}

#[derive(Debug, Clone, Copy)]
struct Sweep {
    start: f64,
    stop: f64,
    step: f64,
}

impl Sweep {
    fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

fn parse_kind(s: &str) -> std::result::Result<BellKind, String> {
    BellKind::from_short(s)
        .ok_or_else(|| format!("unknown kind `{s}`; use phi+, phi-, psi+ or psi-"))
}

fn parse_class(s: &str) -> std::result::Result<ContextClass, String> {
    ContextClass::from_number(s).ok_or_else(|| format!("unknown class `{s}`; use 1 or 2"))
}

fn parse_frame(s: &str) -> std::result::Result<Frame, String> {
    Frame::from_token(s).ok_or_else(|| format!("unknown frame `{s}`; use z, x or y"))
}

fn parse_side(s: &str) -> std::result::Result<Side, String> {
    Side::from_token(s).ok_or_else(|| format!("unknown side `{s}`; use a or b"))
}

fn parse_policy(s: &str) -> std::result::Result<Policy, String> {
    Policy::from_token(s).ok_or_else(|| format!("unknown policy `{s}`; use z, x or random"))
}

fn parse_decomposition(s: &str) -> std::result::Result<Decomposition, String> {
    match s {
        "canonical" => Ok(Decomposition::Canonical),
        "pre1" => Ok(Decomposition::PreImage(ContextClass::Class1)),
        "pre2" => Ok(Decomposition::PreImage(ContextClass::Class2)),
        _ => Err(format!(
            "unknown decomposition `{s}`; use canonical, pre1 or pre2"
        )),
    }
}

fn parse_sweep(s: &str) -> std::result::Result<Sweep, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| {
            p.parse::<f64>()
                .map_err(|e| format!("bad sweep part `{p}`: {e}"))
        })
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [start, stop, step]
            if step > 0.0 && stop >= start && [start, stop, step].iter().all(|v| v.is_finite()) =>
        {
            Ok(Sweep { start, stop, step })
        }
        _ => Err("sweep must be start:stop:step with step > 0 and stop >= start".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Cmd::Chsh { angles, .. } = &cli.command {
        if angles.len() != 4 || angles.iter().any(|a| !a.is_finite()) {
            Cli::command()
                .error(
                    clap::error::ErrorKind::ValueValidation,
                    "--angles takes four finite values a,a2,b,b2",
                )
                .exit();
        }
    }
    if let Cmd::Station { side, policy } = cli.command {
        return station(side, policy, cli.seed.unwrap_or(0));
    }
    let seed = cli.seed.unwrap_or_else(|| rand::random::<u32>() as u64);
    let argv: Vec<String> = std::env::args().collect();
    let mut out = Out::new(cli.format);
    out.header(seed, env!("CARGO_PKG_VERSION"), &argv.join(" "));
    let res = run(&cli.command, seed, &mut out);
    out.flush();
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn station(side: Side, policy: Policy, seed: u64) -> ExitCode {
    detach_inherited_descriptors();
    let stdin = std::io::stdin().lock();
    let stdout = std::io::BufWriter::new(std::io::stdout().lock());
    match run_station(stdin, stdout, std::io::stderr(), side, policy, seed) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}

fn pass(ok: bool) -> Cell {
    Cell::from(if ok { "PASS" } else { "FAIL" })
}

fn signed_text(k: &LocalKet, frame: Frame) -> String {
    k.symbol(frame)
        .map(|s| s.to_string())
        .unwrap_or_else(|| k.signed().to_string())
}

/// Returns `Ok(false)` when a check the command makes does not hold.
fn run(cmd: &Cmd, seed: u64, out: &mut Out) -> Result<bool> {
    match cmd {
        Cmd::Bell(KindArg { kind }) => {
            let s = bell(*kind);
            out.record(
                "state",
                vec![
                    ("kind", Cell::from(kind.short())),
                    ("amplitudes", Cell::from(s.to_string())),
                    ("abs_det", Cell::Num(s.amplitude_det().norm())),
                    (
                        "maximally_entangled",
                        Cell::Bool(s.is_maximally_entangled()),
                    ),
                ],
            );
            for frame in Frame::ALL {
                let c = expand_in_frame(&s, frame);
                let mut fields = vec![("frame", Cell::from(frame.token()))];
                for (name, z) in ["c00", "c01", "c10", "c11"].into_iter().zip(c) {
                    fields.push((name, Cell::Complex(z)));
                }
                out.record("expansion", fields);
            }
            Ok(true)
        }
        Cmd::Lift { kind, class, frame } => {
            let rep = if *frame == Frame::Y {
                lift_y(kind.kind, *class)?
            } else {
                lift(kind.kind, *class, *frame)?
            };
            Ok(print_lift(out, &rep))
        }
        Cmd::Collapse { kind, class, frame } => {
            let rep = ctxphase::contextual::lift_for_measurement(kind.kind, *class, *frame)?;
            print_lift(out, &rep);
            let pair = collapse_pair(&rep, *frame)?;
            let (a, b) = pair.outcomes()?;
            for (side, o) in [(Side::A, a), (Side::B, b)] {
                out.record(
                    "collapse",
                    vec![
                        ("side", Cell::from(side.token())),
                        ("projection", Cell::from(rep.project(side).to_string())),
                        ("ket", Cell::from(signed_text(pair.side(side), *frame))),
                        ("outcome", Cell::Int(o.value() as i64)),
                    ],
                );
            }
            Ok(true)
        }
        Cmd::Correlate {
            kind,
            alpha,
            beta,
            sweep,
            frame,
            decomposition,
        } => {
            let (alphas, betas) = match sweep {
                Some(s) => (s.points(), s.points()),
                None => (
                    vec![alpha.expect("clap requires alpha")],
                    vec![beta.expect("clap requires beta")],
                ),
            };
            let state = bell(kind.kind);
            let mut worst: f64 = 0.0;
            let mut rows = Vec::new();
            for &a in &alphas {
                for &b in &betas {
                    let (ar, br) = (a.to_radians(), b.to_radians());
                    let e = expanded_correlation(kind.kind, *frame, *decomposition, ar, br)?;
                    let o = oracle_correlation(&state, ar, br);
                    worst = worst.max((e.total() - o).abs());
                    rows.push(vec![
                        Cell::Num(a),
                        Cell::Num(b),
                        Cell::Num(e.total()),
                        Cell::Num(o),
                        Cell::Num(e.diagonal_total()),
                        Cell::Num(e.off_diagonal_total()),
                    ]);
                }
            }
            out.table(
                "correlation",
                &[
                    "alpha_deg",
                    "beta_deg",
                    "E_analytic",
                    "E_oracle",
                    "diag_term",
                    "offdiag_term",
                ],
                rows,
            );
            out.note(&format!(
                "decomposition={decomposition} frame={frame} max_abs_diff={worst:e}"
            ));
            Ok(worst < 1e-12)
        }
        Cmd::Chsh { kind, angles } => {
            let r: Vec<f64> = angles.iter().map(|d| d.to_radians()).collect();
            let state = bell(kind.kind);
            let e = |x: f64, y: f64| oracle_correlation(&state, x, y);
            let s = chsh(kind.kind, r[0], r[1], r[2], r[3]);
            let classical = deterministic_chsh_values()
                .into_iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            out.record(
                "chsh",
                vec![
                    ("kind", Cell::from(kind.kind.short())),
                    ("E_a_b", Cell::Num(e(r[0], r[2]))),
                    ("E_a_b2", Cell::Num(e(r[0], r[3]))),
                    ("E_a2_b", Cell::Num(e(r[1], r[2]))),
                    ("E_a2_b2", Cell::Num(e(r[1], r[3]))),
                    ("S", Cell::Num(s)),
                    ("classical_bound", Cell::Num(classical)),
                    ("tsirelson_bound", Cell::Num(2.0 * SQRT_2)),
                ],
            );
            Ok(s.abs() <= 2.0 * SQRT_2 + 1e-9)
        }
        Cmd::Ensemble {
            kind,
            frame,
            n,
            records,
        } => {
            let e = sample_ensemble(kind.kind, *frame, *n, seed)?;
            let c = e.counts();
            out.record(
                "ensemble",
                vec![
                    ("kind", Cell::from(kind.kind.short())),
                    ("frame", Cell::from(frame.token())),
                    ("n", Cell::Int(*n as i64)),
                    ("seed", Cell::Int(seed as i64)),
                    ("count_pp", Cell::Int(c[0][0] as i64)),
                    ("count_pm", Cell::Int(c[0][1] as i64)),
                    ("count_mp", Cell::Int(c[1][0] as i64)),
                    ("count_mm", Cell::Int(c[1][1] as i64)),
                    ("class1_fraction", Cell::Num(e.class1_fraction())),
                    ("mean_a", Cell::Num(e.mean_a())),
                    ("mean_b", Cell::Num(e.mean_b())),
                    ("E", Cell::Num(e.estimate.value)),
                    ("stderr", Cell::Num(e.estimate.stderr.unwrap_or(f64::NAN))),
                ],
            );
            if *records {
                let rows = e
                    .records
                    .iter()
                    .map(|r| {
                        vec![
                            Cell::Int(r.pair_id as i64),
                            Cell::from(r.klass.token()),
                            Cell::Int(r.a.value() as i64),
                            Cell::Int(r.b.value() as i64),
                        ]
                    })
                    .collect();
                out.table("record", &["pair_id", "klass", "a", "b"], rows);
            }
            Ok(true)
        }
        Cmd::Stations {
            kind,
            n,
            policy_a,
            policy_b,
        } => {
            let station = StationCommand {
                program: std::env::current_exe()?,
                args: vec!["station".into()],
            };
            let config = ExperimentConfig {
                kind: kind.kind,
                n_pairs: *n,
                policy_a: *policy_a,
                policy_b: *policy_b,
                seed,
            };
            let r = run_experiment(&station, &config)?;
            let rows = r
                .estimates
                .iter()
                .map(|e| {
                    vec![
                        Cell::from(e.setting_a.token()),
                        Cell::from(e.setting_b.token()),
                        Cell::Int(e.estimate.n.unwrap_or(0) as i64),
                        Cell::Num(e.estimate.value),
                        Cell::Num(e.estimate.stderr.unwrap_or(f64::NAN)),
                        Cell::Num(e.oracle),
                    ]
                })
                .collect();
            out.table(
                "setting",
                &["setting_a", "setting_b", "n", "E", "stderr", "E_oracle"],
                rows,
            );
            let no_route = r.topology.no_station_route();
            out.record(
                "stations",
                vec![
                    ("joined", Cell::Int(r.records.len() as i64)),
                    ("lost", Cell::Int(r.lost.len() as i64)),
                    (
                        "transport_errors",
                        Cell::Int(r.transport_errors.len() as i64),
                    ),
                    (
                        "routes",
                        Cell::from(
                            r.topology
                                .routes
                                .iter()
                                .map(|(x, y)| format!("{x}->{y}"))
                                .collect::<Vec<_>>()
                                .join(" "),
                        ),
                    ),
                    ("no_station_route", pass(no_route)),
                ],
            );
            for e in &r.transport_errors {
                eprintln!("transport: {e}");
            }
            Ok(no_route && r.lost.is_empty() && r.transport_errors.is_empty())
        }
        Cmd::Isolated {
            kind,
            class,
            prepared,
            device,
            n,
        } => {
            let seq = isolated_sequence(kind.kind, *class, *prepared, *device, *n, seed)?;
            let mean = seq.iter().map(|o| o.value() as f64).sum::<f64>() / seq.len() as f64;
            out.record(
                "isolated",
                vec![
                    ("kind", Cell::from(kind.kind.short())),
                    ("class", Cell::Int(class.number() as i64)),
                    ("prepared", Cell::from(prepared.token())),
                    ("device", Cell::from(device.token())),
                    ("n", Cell::Int(*n as i64)),
                    ("mean", Cell::Num(mean)),
                    (
                        "outcomes",
                        Cell::from(
                            seq.iter()
                                .map(|o| o.value().to_string())
                                .collect::<Vec<_>>()
                                .join(" "),
                        ),
                    ),
                ],
            );
            Ok(true)
        }
        Cmd::Mixed {
            kind,
            frame_a,
            frame_b,
        } => match mixed_lift(kind.kind, *frame_a, *frame_b) {
            Err(Error::NoGo { witness, .. }) => {
                out.record(
                    "mixed",
                    vec![
                        ("kind", Cell::from(kind.kind.short())),
                        ("frame_a", Cell::from(frame_a.token())),
                        ("frame_b", Cell::from(frame_b.token())),
                        ("lift", Cell::from("none")),
                        (
                            "joint_eigenvalue",
                            witness.map(Cell::Num).unwrap_or(Cell::from("none")),
                        ),
                    ],
                );
                Ok(witness.is_none())
            }
            Err(e) => Err(e),
            Ok(_) => Ok(false),
        },
        Cmd::Report => {
            let rows = fixtures::closed_form_report()?
                .into_iter()
                .map(|c| {
                    vec![
                        Cell::from(c.source),
                        Cell::from(c.kind.short()),
                        Cell::from(c.form),
                        Cell::Num(c.max_abs_error),
                        Cell::Bool(c.matches),
                    ]
                })
                .collect();
            out.table(
                "closed_form",
                &["source", "kind", "form", "max_abs_error", "matches_oracle"],
                rows,
            );
            Ok(true)
        }
        Cmd::Fixtures => {
            let set = fixtures::generate()?;
            let json = serde_json::to_string_pretty(&set)
                .map_err(|e| Error::Domain(format!("cannot serialize fixtures: {e}")))?;
            out.raw(&json);
            Ok(true)
        }
        Cmd::Station { .. } => unreachable!("handled before the header"),
    }
}

fn print_lift(out: &mut Out, rep: &Representative) -> bool {
    let recon = quotient_map(&rep.sum);
    let ok = recon
        .as_ref()
        .map(|s| equal_up_to_global_phase(s, &bell(rep.kind), 1e-9))
        .unwrap_or(false);
    out.record(
        "lift",
        vec![
            ("kind", Cell::from(rep.kind.short())),
            ("class", Cell::Int(rep.klass.number() as i64)),
            ("presentation", Cell::from(rep.presentation_frame.token())),
            ("sum", Cell::from(rep.sum.to_string())),
            (
                "reconstructed",
                Cell::from(
                    recon
                        .map(|s| s.to_string())
                        .unwrap_or_else(|e| e.to_string()),
                ),
            ),
            ("phase_a_deg", Cell::Num(rep.local_phases.0.to_degrees())),
            ("phase_b_deg", Cell::Num(rep.local_phases.1.to_degrees())),
            ("quotient", pass(ok)),
        ],
    );
    ok
}
