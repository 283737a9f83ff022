use ctxphase::contextual::{lift, local_states, ContextClass};
use ctxphase::hilbert::{bell, BellKind, Frame};
use ctxphase::measurement::{expanded_correlation, sample_ensemble, Decomposition};
use ctxphase::oracle::{born_joint_frames, oracle_correlation};

#[test]
fn local_outcomes_cover_oracle_support() {
    for kind in BellKind::ALL {
        for frame in Frame::ALL {
            let dist = born_joint_frames(&bell(kind), frame, frame);
            let mut got: Vec<_> = ContextClass::ALL
                .iter()
                .map(|&c| local_states(kind, c, frame).unwrap().outcomes().unwrap())
                .collect();
            got.sort();
            let mut support = dist.support(1e-12);
            support.sort();
            assert_eq!(got, support, "{kind} {frame}");
        }
    }
}

#[test]
fn every_decomposition_agrees_with_oracle() {
    let decs = [
        Decomposition::Canonical,
        Decomposition::PreImage(ContextClass::Class1),
        Decomposition::PreImage(ContextClass::Class2),
    ];
    for kind in BellKind::ALL {
        for frame in [Frame::Z, Frame::X] {
            for d in decs {
                for (a, b) in [(0.1, 0.7), (1.3, -0.4), (2.0, 2.9)] {
                    let e = expanded_correlation(kind, frame, d, a, b).unwrap();
                    assert!((e.total() - oracle_correlation(&bell(kind), a, b)).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn ensemble_matches_lift_collapse() {
    let ens = sample_ensemble(BellKind::PhiMinus, Frame::X, 200, 8).unwrap();
    for r in &ens.records {
        let pair = local_states(BellKind::PhiMinus, r.klass, Frame::X).unwrap();
        assert_eq!((r.a, r.b), pair.outcomes().unwrap());
    }
    assert!(lift(BellKind::PhiMinus, ContextClass::Class1, Frame::X)
        .unwrap()
        .quotient_holds());
}
