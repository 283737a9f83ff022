//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ctxphase::contextual::{lift, local_states, mixed_lift, ContextClass};
use ctxphase::fixtures::closed_form_report;
use ctxphase::freevec::{left_relation, quotient_map, right_relation, Point};
use ctxphase::hilbert::{bell, equal_up_to_global_phase, frame_ket, BellKind, Frame};
use ctxphase::measurement::{
    chsh, deterministic_chsh_values, expanded_correlation, sample_ensemble, Decomposition,
};
use ctxphase::oracle::{born_joint, born_joint_frames, oracle_correlation};
use ctxphase::stations::{run_experiment, ExperimentConfig, Policy, StationCommand};
use ctxphase::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    match limit {
        Some(l) if took >= l => Err(format!("{detail}; took {took:?}, limit {l:?}")),
        _ => Ok(format!("{detail}; {took:.2?}")),
    }
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn quotient_suite() -> Outcome {
    let mut worst = f64::INFINITY;
    for kind in BellKind::ALL {
        for klass in ContextClass::ALL {
            for frame in [Frame::Z, Frame::X] {
                let rep = lift(kind, klass, frame).map_err(|e| e.to_string())?;
                let recon = quotient_map(&rep.sum).map_err(|e| e.to_string())?;
                let overlap = recon.inner(&bell(kind)).norm();
                worst = worst.min(overlap);
                check(
                    overlap >= 1.0 - 1e-9,
                    format!("{kind} {klass} {frame}: {overlap}"),
                )?;
            }
        }
    }
    Ok(format!("16 lifts, min overlap {worst:.15}"))
}

fn worked_example() -> Outcome {
    let z = |i| frame_ket(Frame::Z, i, Complex64::new(1.0, 0.0)).unwrap();
    for (klass, (a, b)) in [
        (ContextClass::Class1, (0, 1)),
        (ContextClass::Class2, (1, 0)),
    ] {
        let pair = local_states(BellKind::PsiPlus, klass, Frame::Z).map_err(|e| e.to_string())?;
        check(
            equal_up_to_global_phase(&pair.psi_a.ket, &z(a), 1e-12)
                && equal_up_to_global_phase(&pair.psi_b.ket, &z(b), 1e-12),
            format!("{klass}: unexpected local kets"),
        )?;
    }
    Ok("class 1 -> (|0>,|1>), class 2 -> (|1>,|0>)".into())
}

fn phi_plus_grid() -> Outcome {
    let mut worst = 0.0f64;
    for a in 0..=360 {
        for b in 0..=360 {
            let (al, be) = ((a as f64).to_radians(), (b as f64).to_radians());
            let e = expanded_correlation(
                BellKind::PhiPlus,
                Frame::Z,
                Decomposition::PreImage(ContextClass::Class1),
                al,
                be,
            )
            .map_err(|e| e.to_string())?;
            worst = worst.max((e.total() - (2.0 * (al - be)).cos()).abs());
        }
    }
    check(worst < 1e-12, format!("max error {worst:e}"))?;
    Ok(format!("361x361 points, max error {worst:e}"))
}

fn expansion_vs_oracle() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(26);
    let angles: Vec<(f64, f64)> = (0..100)
        .map(|_| (rng.random_range(0.0..PI), rng.random_range(0.0..PI)))
        .collect();
    let decs = [
        Decomposition::Canonical,
        Decomposition::PreImage(ContextClass::Class1),
        Decomposition::PreImage(ContextClass::Class2),
    ];
    let (mut worst, mut split) = (0.0f64, 0.0f64);
    for kind in BellKind::ALL {
        let state = bell(kind);
        for frame in [Frame::Z, Frame::X] {
            for d in decs {
                for &(a, b) in &angles {
                    let e =
                        expanded_correlation(kind, frame, d, a, b).map_err(|e| e.to_string())?;
                    worst = worst.max((e.total() - oracle_correlation(&state, a, b)).abs());
                    split =
                        split.max((e.diagonal_total() + e.off_diagonal_total() - e.total()).abs());
                }
            }
        }
    }
    check(
        worst < 1e-12 && split < 1e-12,
        format!("error {worst:e}, split {split:e}"),
    )?;
    Ok(format!(
        "2400 evaluations, max error {worst:e}, split error {split:e}"
    ))
}

fn chsh_bounds() -> Outcome {
    let d = |x: f64| x.to_radians();
    let s = chsh(BellKind::PhiPlus, d(0.0), d(45.0), d(22.5), d(67.5));
    check((s - 2.0 * SQRT_2).abs() < 1e-9, format!("S = {s}"))?;
    let classical = deterministic_chsh_values();
    check(classical.len() == 16, "expected 16 assignments")?;
    let max = classical.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    check(max <= 2.0, format!("deterministic max |S| = {max}"))?;
    Ok(format!("S = {s:.12}, deterministic max |S| = {max}"))
}

fn ensemble_stats() -> Outcome {
    let n = 100_000;
    let mut lines = Vec::new();
    for (kind, frame, product) in [
        (BellKind::PsiMinus, Frame::Z, -1),
        (BellKind::PsiPlus, Frame::X, 1),
    ] {
        let ens = sample_ensemble(kind, frame, n, 7).map_err(|e| e.to_string())?;
        check(ens.records.len() == n, "record count")?;
        check(
            ens.records
                .iter()
                .all(|r| r.a.value() * r.b.value() == product),
            format!("{kind} {frame}: a*b != {product}"),
        )?;
        let f = ens.class1_fraction();
        check(
            (f - 0.5).abs() <= 0.005,
            format!("{kind}: class-1 fraction {f}"),
        )?;
        let (ma, mb) = (ens.mean_a(), ens.mean_b());
        check(
            ma.abs() <= 0.016 && mb.abs() <= 0.016,
            format!("{kind}: marginals {ma} {mb}"),
        )?;
        lines.push(format!(
            "{kind} {frame} class1 {f:.4} marginals {ma:+.4}/{mb:+.4}"
        ));
    }
    Ok(lines.join(", "))
}

fn class_oracle_consistency() -> Outcome {
    for kind in BellKind::ALL {
        let state = bell(kind);
        for frame in Frame::ALL {
            let dist = match frame {
                Frame::Z => born_joint(&state, 0.0, 0.0),
                Frame::X => born_joint(&state, FRAC_PI_4, FRAC_PI_4),
                Frame::Y => born_joint_frames(&state, Frame::Y, Frame::Y),
            };
            let mut got = Vec::new();
            for klass in ContextClass::ALL {
                let pair = local_states(kind, klass, frame).map_err(|e| e.to_string())?;
                let (a, b) = pair.outcomes().map_err(|e| e.to_string())?;
                let p = dist.prob(a, b);
                check(
                    (p - 0.5).abs() < 1e-12,
                    format!("{kind} {frame} {klass}: p = {p}"),
                )?;
                got.push((a, b));
            }
            got.sort();
            let mut support = dist.support(1e-12);
            support.sort();
            check(
                got == support,
                format!("{kind} {frame}: {got:?} vs {support:?}"),
            )?;
        }
    }
    Ok("4 kinds x 3 frames, classes exhaust the support at p = 1/2".into())
}

fn mixed_no_go() -> Outcome {
    for kind in BellKind::ALL {
        match mixed_lift(kind, Frame::Z, Frame::X) {
            Err(Error::NoGo { witness: None, .. }) => {}
            other => return Err(format!("{kind}: {other:?}")),
        }
    }
    Ok("all 4 kinds refuse a Z/X lift with no eigenvector witness".into())
}

fn relation_generators() -> Outcome {
    let c = Complex64::new;
    let scalars = [
        c(1.0, 0.0),
        c(-1.0, 0.0),
        c(0.0, 1.0),
        Complex64::from_polar(1.0, PI / 3.0),
    ];
    let points = [
        Point([c(1.0, 0.0), c(0.0, 0.0)]),
        Point([c(0.3, -0.2), c(0.5, 0.9)]),
        Point([c(-0.7, 0.1), c(0.2, 0.4)]),
    ];
    let [u, v, w] = points;
    let mut count = 0;
    for &r in &scalars {
        for &s in &scalars {
            for g in [left_relation(r, s, u, v, w), right_relation(r, s, u, v, w)] {
                check(
                    matches!(quotient_map(&g), Err(Error::InRelationSubspace)),
                    format!("r = {r}, s = {s}: generator survived the quotient"),
                )?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} generators map to zero"))
}

fn stations_harness() -> Outcome {
    let station = StationCommand {
        program: env!("CARGO_BIN_EXE_ctxphase").into(),
        args: vec!["station".into()],
    };
    let config = |policy_b| ExperimentConfig {
        kind: BellKind::PsiPlus,
        n_pairs: 10_000,
        policy_a: Policy::Random,
        policy_b,
        seed: 3,
    };
    let start = Instant::now();
    let r = run_experiment(&station, &config(Policy::Random)).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(took < Duration::from_secs(10), format!("took {took:?}"))?;
    check(
        r.lost.is_empty() && r.records.len() == 10_000,
        format!("lost {}", r.lost.len()),
    )?;
    check(r.topology.no_station_route(), format!("{:?}", r.topology))?;
    for f in [Frame::Z, Frame::X] {
        let e = r.estimate(f, f).ok_or("missing matched estimate")?;
        check(
            e.estimate.value.abs() == 1.0 && (e.estimate.value - e.oracle).abs() < 1e-12,
            format!("{f}{f}: E = {}", e.estimate.value),
        )?;
    }
    for b in [Policy::Fixed(Frame::Z), Policy::Fixed(Frame::X)] {
        let other = run_experiment(&station, &config(b)).map_err(|e| e.to_string())?;
        check(
            other.stream_a == r.stream_a,
            format!("A stream changed with B policy {}", b.token()),
        )?;
    }
    Ok(format!(
        "10^4 pairs in {took:.2?}, matched E exact, A stream invariant"
    ))
}

fn discrepancy_report() -> Outcome {
    let report = closed_form_report().map_err(|e| e.to_string())?;
    println!(
        "      {:<18} {:<10} {:<16} {:>10}  matches",
        "source", "kind", "form", "max_err"
    );
    for c in &report {
        println!(
            "      {:<18} {:<10} {:<16} {:>10.2e}  {}",
            c.source,
            c.kind.short(),
            c.form,
            c.max_abs_error,
            if c.matches { "yes" } else { "no" }
        );
    }
    for kind in BellKind::ALL {
        check(
            report
                .iter()
                .any(|c| c.kind == kind && c.source != "oracle"),
            format!("{kind}: no recorded form"),
        )?;
    }
    let matched = report
        .iter()
        .filter(|c| c.source != "oracle" && c.matches)
        .count();
    Ok(format!(
        "{} rows, {matched} recorded forms match the oracle",
        report.len()
    ))
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: Vec<Criterion> = vec![
        ("quotient suite", secs(1), quotient_suite),
        ("worked example", None, worked_example),
        ("phi+ correlation grid", secs(5), phi_plus_grid),
        ("expansion equals oracle", None, expansion_vs_oracle),
        ("chsh", None, chsh_bounds),
        ("ensemble statistics", secs(5), ensemble_stats),
        ("class/oracle consistency", None, class_oracle_consistency),
        ("mixed-frame no-go", None, mixed_no_go),
        ("relation generators", None, relation_generators),
        ("stations harness", None, stations_harness),
        ("closed-form report", None, discrepancy_report),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        match timed(limit, f) {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
