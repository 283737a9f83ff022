//! Observables of the contextual model: deterministic per-class joint
//! outcomes, class-mixture ensembles, the four-term correlation expansion,
//! closed-form correlations and CHSH.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contextual::{lift, local_states, ContextClass};
use crate::error::{Error, Result};
use crate::hilbert::{
    bell, expand_in_frame, frame_amps, pauli, sigma_theta, Amps2, BellKind, Frame, Operator2,
    Outcome, Scalar, COMPOSE_TOL,
};
use crate::oracle::oracle_correlation;
use crate::rng::{keyed_coin, CLASS_STREAM};

/// A measurement setting: a named frame or a polarizer angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Setting {
    Frame(Frame),
    Angle(f64),
}

impl Setting {
    /// The polarizer angle. Z is 0 and X is π/4; Y is not a polarizer
    /// setting.
    pub fn angle(&self) -> Option<f64> {
        match *self {
            Setting::Frame(Frame::Z) => Some(0.0),
            Setting::Frame(Frame::X) => Some(std::f64::consts::FRAC_PI_4),
            Setting::Frame(Frame::Y) => None,
            Setting::Angle(t) => Some(t),
        }
    }

    pub fn observable(&self) -> Operator2 {
        match *self {
            Setting::Frame(f) => pauli(f),
            Setting::Angle(t) => sigma_theta(t),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Frame(fr) => write!(f, "{fr}"),
            Setting::Angle(t) => write!(f, "{}deg", t.to_degrees()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub pair_id: u64,
    pub klass: ContextClass,
    pub setting_a: Setting,
    pub setting_b: Setting,
    pub a: Outcome,
    pub b: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The four-term expansion over a two-term decomposition.
    Analytic,
    Oracle,
    MonteCarlo,
}

impl Method {
    pub fn token(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Oracle => "oracle",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub method: Method,
    pub n: Option<u64>,
    pub seed: Option<u64>,
    pub stderr: Option<f64>,
}

impl CorrelationEstimate {
    pub fn exact(value: f64, method: Method) -> CorrelationEstimate {
        CorrelationEstimate {
            value,
            method,
            n: None,
            seed: None,
            stderr: None,
        }
    }

    /// Mean of ±1 products with its standard error.
    pub fn from_products(products: &[i32], seed: Option<u64>) -> CorrelationEstimate {
        let n = products.len();
        let mean = if n == 0 {
            0.0
        } else {
            products.iter().map(|&p| p as f64).sum::<f64>() / n as f64
        };
        let stderr = if n > 1 {
            ((1.0 - mean * mean).max(0.0) / n as f64).sqrt()
        } else {
            f64::NAN
        };
        CorrelationEstimate {
            value: mean,
            method: Method::MonteCarlo,
            n: Some(n as u64),
            seed,
            stderr: Some(stderr),
        }
    }
}

/// The per-pair context class, a fair coin keyed by `(seed, pair_id)`.
pub fn draw_class(seed: u64, pair_id: u64) -> ContextClass {
    if keyed_coin(seed, CLASS_STREAM, pair_id) {
        ContextClass::Class1
    } else {
        ContextClass::Class2
    }
}

/// The eigenvalues of σ_frame on the two collapsed local kets.
pub fn joint_outcome(
    kind: BellKind,
    klass: ContextClass,
    frame: Frame,
) -> Result<(Outcome, Outcome)> {
    local_states(kind, klass, frame)?.outcomes()
}

/// Records and summary statistics of a class-mixture ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub kind: BellKind,
    pub frame: Frame,
    pub seed: u64,
    pub records: Vec<OutcomeRecord>,
    pub estimate: CorrelationEstimate,
}

impl Ensemble {
    pub fn class1_fraction(&self) -> f64 {
        let c = self
            .records
            .iter()
            .filter(|r| r.klass == ContextClass::Class1)
            .count();
        c as f64 / self.records.len() as f64
    }

    pub fn mean_a(&self) -> f64 {
        self.records.iter().map(|r| r.a.value() as f64).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_b(&self) -> f64 {
        self.records.iter().map(|r| r.b.value() as f64).sum::<f64>() / self.records.len() as f64
    }

    /// Counts indexed by outcome index on each side.
    pub fn counts(&self) -> [[u64; 2]; 2] {
        let mut c = [[0u64; 2]; 2];
        for r in &self.records {
            c[r.a.index()][r.b.index()] += 1;
        }
        c
    }
}

/// Draws a class per pair and records the deterministic joint outcome.
/// Pairs are processed in parallel; each draw is keyed by its pair id, so
/// the result depends only on `seed`.
pub fn sample_ensemble(kind: BellKind, frame: Frame, n: usize, seed: u64) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::Domain("ensemble size must be at least 1".into()));
    }
    let by_class = [
        joint_outcome(kind, ContextClass::Class1, frame)?,
        joint_outcome(kind, ContextClass::Class2, frame)?,
    ];
    let records: Vec<OutcomeRecord> = (0..n as u64)
        .into_par_iter()
        .map(|pair_id| {
            let klass = draw_class(seed, pair_id);
            let (a, b) = by_class[(klass.number() - 1) as usize];
            OutcomeRecord {
                pair_id,
                klass,
                setting_a: Setting::Frame(frame),
                setting_b: Setting::Frame(frame),
                a,
                b,
            }
        })
        .collect();
    let products: Vec<i32> = records.iter().map(|r| r.a.value() * r.b.value()).collect();
    let estimate = CorrelationEstimate::from_products(&products, Some(seed));
    Ok(Ensemble {
        kind,
        frame,
        seed,
        records,
        estimate,
    })
}

/// Which two-term decomposition `u⊗v + x⊗y` feeds the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decomposition {
    /// The state's own product-basis coefficients, absorbed into A.
    Canonical,
    /// The class-tagged pre-image, phases carried by the symbols.
    PreImage(ContextClass),
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decomposition::Canonical => f.write_str("canonical"),
            Decomposition::PreImage(c) => write!(f, "pre_image_{}", c.number()),
        }
    }
}

/// The four terms of ⟨Ψ|σα⊗σβ|Ψ⟩ for `Ψ = (u⊗v + x⊗y)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpandedCorrelation {
    pub kind: BellKind,
    pub presentation_frame: Frame,
    pub decomposition: Decomposition,
    pub alpha: f64,
    pub beta: f64,
    /// ½⟨u|σα|u⟩⟨v|σβ|v⟩ and ½⟨x|σα|x⟩⟨y|σβ|y⟩
    pub diagonal: [f64; 2],
    /// ½⟨u|σα|x⟩⟨v|σβ|y⟩ and ½⟨x|σα|u⟩⟨y|σβ|v⟩
    pub off_diagonal: [Scalar; 2],
}

impl ExpandedCorrelation {
    pub fn diagonal_total(&self) -> f64 {
        self.diagonal[0] + self.diagonal[1]
    }

    pub fn off_diagonal_total(&self) -> f64 {
        (self.off_diagonal[0] + self.off_diagonal[1]).re
    }

    pub fn total(&self) -> f64 {
        self.diagonal_total() + self.off_diagonal_total()
    }

    pub fn estimate(&self) -> CorrelationEstimate {
        CorrelationEstimate::exact(self.total(), Method::Analytic)
    }
}

fn scaled(v: Amps2, c: Scalar) -> Amps2 {
    [v[0] * c, v[1] * c]
}

/// `(u, v, x, y)` with `Ψ ∝ (u⊗v + x⊗y)/√2`, each vector of norm 1.
fn decompose(kind: BellKind, frame: Frame, decomposition: Decomposition) -> Result<[Amps2; 4]> {
    match decomposition {
        Decomposition::Canonical => {
            let c = expand_in_frame(&bell(kind), frame);
            let nz: Vec<usize> = (0..4).filter(|&k| c[k].norm() > COMPOSE_TOL).collect();
            let [k1, k2] = nz[..] else {
                return Err(Error::Domain(format!(
                    "{kind} does not have two product terms in frame {frame}"
                )));
            };
            let r2 = std::f64::consts::SQRT_2;
            let term = |k: usize| {
                (
                    scaled(frame_amps(frame, (k / 2) as u8), c[k] * r2),
                    frame_amps(frame, (k % 2) as u8),
                )
            };
            let (u, v) = term(k1);
            let (x, y) = term(k2);
            Ok([u, v, x, y])
        }
        Decomposition::PreImage(klass) => {
            if frame == Frame::Y {
                return Err(Error::Domain(
                    "pre-images exist for Z and X presentations only".into(),
                ));
            }
            let rep = lift(kind, klass, frame)?;
            let t = rep.sum.terms();
            let embed = |i: usize, side: crate::hilbert::Side| {
                scaled(t[i].sym.side(side).ket().amps(), t[i].coeff)
            };
            use crate::hilbert::Side::{A, B};
            Ok([embed(0, A), embed(0, B), embed(1, A), embed(1, B)])
        }
    }
}

/// Expands ⟨Ψ|σα⊗σβ|Ψ⟩ over a two-term decomposition of the state into two
/// diagonal and two off-diagonal terms.
pub fn expanded_correlation(
    kind: BellKind,
    presentation_frame: Frame,
    decomposition: Decomposition,
    alpha: f64,
    beta: f64,
) -> Result<ExpandedCorrelation> {
    let [u, v, x, y] = decompose(kind, presentation_frame, decomposition)?;
    let sa = sigma_theta(alpha);
    let sb = sigma_theta(beta);
    let half = 0.5;
    Ok(ExpandedCorrelation {
        kind,
        presentation_frame,
        decomposition,
        alpha,
        beta,
        diagonal: [
            half * (sa.sandwich(&u, &u) * sb.sandwich(&v, &v)).re,
            half * (sa.sandwich(&x, &x) * sb.sandwich(&y, &y)).re,
        ],
        off_diagonal: [
            sa.sandwich(&u, &x) * sb.sandwich(&v, &y) * half,
            sa.sandwich(&x, &u) * sb.sandwich(&y, &v) * half,
        ],
    })
}

/// `E(a,b) − E(a,b2) + E(a2,b) + E(a2,b2)` for any correlation function.
pub fn chsh_with<F: Fn(f64, f64) -> f64>(e: F, a: f64, a2: f64, b: f64, b2: f64) -> f64 {
    e(a, b) - e(a, b2) + e(a2, b) + e(a2, b2)
}

/// CHSH value with correlations from the Born-rule oracle.
pub fn chsh(kind: BellKind, a: f64, a2: f64, b: f64, b2: f64) -> f64 {
    let s = bell(kind);
    chsh_with(|x, y| oracle_correlation(&s, x, y), a, a2, b, b2)
}

/// CHSH values of all 16 deterministic local assignments
/// `(A(a), A(a2), B(b), B(b2)) ∈ {±1}⁴`, in binary order.
pub fn deterministic_chsh_values() -> Vec<f64> {
    (0u8..16)
        .map(|bits| {
            let v = |k: u8| if bits >> k & 1 == 0 { 1.0 } else { -1.0 };
            let (aa, aa2, bb, bb2) = (v(3), v(2), v(1), v(0));
            aa * bb - aa * bb2 + aa2 * bb + aa2 * bb2
        })
        .collect()
}

/// `sign · cos 2(α ∓ β)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub negated: bool,
    /// `true` for α + β, `false` for α − β.
    pub sum: bool,
}

impl ClosedForm {
    pub fn eval(&self, alpha: f64, beta: f64) -> f64 {
        let arg = if self.sum { alpha + beta } else { alpha - beta };
        let c = (2.0 * arg).cos();
        if self.negated {
            -c
        } else {
            c
        }
    }

    pub fn text(&self) -> String {
        format!(
            "{}cos 2(a {} b)",
            if self.negated { "-" } else { "" },
            if self.sum { "+" } else { "-" }
        )
    }
}

/// One labelled closed-form claim compared with the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub source: String,
    pub kind: BellKind,
    pub form: String,
    pub max_abs_error: f64,
    pub matches: bool,
}

/// Evaluates `form` against the oracle for `kind` on a whole-degree grid
/// over [0°, 180°)².
pub fn check_closed_form(source: &str, kind: BellKind, form: ClosedForm) -> ClosedFormCheck {
    let state = bell(kind);
    let max_abs_error = (0..180)
        .step_by(3)
        .flat_map(|a| (0..180).step_by(3).map(move |b| (a, b)))
        .map(|(a, b)| {
            let (al, be) = ((a as f64).to_radians(), (b as f64).to_radians());
            (form.eval(al, be) - oracle_correlation(&state, al, be)).abs()
        })
        .fold(0.0, f64::max);
    ClosedFormCheck {
        source: source.to_string(),
        kind,
        form: form.text(),
        max_abs_error,
        matches: max_abs_error < 1e-12,
    }
}

/// The oracle's own closed form for `kind`.
pub fn oracle_closed_form(kind: BellKind) -> ClosedForm {
    match kind {
        BellKind::PhiPlus => ClosedForm {
            negated: false,
            sum: false,
        },
        BellKind::PhiMinus => ClosedForm {
            negated: false,
            sum: true,
        },
        BellKind::PsiPlus => ClosedForm {
            negated: true,
            sum: true,
        },
        BellKind::PsiMinus => ClosedForm {
            negated: true,
            sum: false,
        },
    }
}

/// Smallest uniform error `max |f(α)·g(β) − E(α, β)|` over the grid, with
/// `f` and `g` values restricted to `cos(k°)`, k = 0..=180.
pub fn product_fit_min_error(kind: BellKind, alphas: &[f64], betas: &[f64]) -> f64 {
    let state = bell(kind);
    let target: Vec<Vec<f64>> = alphas
        .iter()
        .map(|&a| {
            betas
                .iter()
                .map(|&b| oracle_correlation(&state, a, b))
                .collect()
        })
        .collect();
    let levels: Vec<f64> = (0..=180).map(|k| (k as f64).to_radians().cos()).collect();

    // best g for column j given f values, minimizing the column's max error
    let column_error = |f: &[f64], j: usize| -> f64 {
        levels
            .iter()
            .map(|&g| {
                f.iter()
                    .enumerate()
                    .map(|(i, &fi)| (fi * g - target[i][j]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    };

    let mut best = f64::INFINITY;
    let mut f = vec![0.0; alphas.len()];
    let total = levels.len().pow(alphas.len() as u32);
    for code in 0..total {
        let mut c = code;
        for fi in f.iter_mut() {
            *fi = levels[c % levels.len()];
            c /= levels.len();
        }
        let err = (0..betas.len())
            .map(|j| column_error(&f, j))
            .fold(0.0, f64::max);
        best = best.min(err);
    }
    best
}
