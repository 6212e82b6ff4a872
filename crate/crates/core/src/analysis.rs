//! Trajectory interpretation: regime classification, oscillation skeletons,
//! and executable trajectory predicates.
//!
//! Capture by one of the wells at `u = ±1` is decided by the energy barrier:
//! once `E(r) = ½v² + F(u)` falls below zero, a later zero of `u` is
//! impossible (it would need `E = ½v² ≥ 0` under a non-increasing `E`), so
//! the trajectory is trapped in one half-plane and spirals into the well.
//! This test is exact up to integration error and does not consult the
//! threshold `p`, which keeps the classifier an independent check of the
//! closed-form predictions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{integrate, EventKind, IntegratorConfig, Termination, Trajectory};
use crate::nonlin::{energy, Params, State};

/// Classification verdict for one initial value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeTag {
    /// `a = 0`: the trivial solution `u ≡ 0`.
    TrivialZero,
    /// `a = 1`: the equilibrium `u ≡ 1`.
    EquilibriumPlus,
    /// `a = -1`: the equilibrium `u ≡ -1`.
    EquilibriumMinus,
    /// No zeros; captured by the well at `+1`.
    OscAroundOne,
    /// No zeros; captured by the well at `-1`.
    OscAroundMinusOne,
    /// `a > 1`, positive throughout, captured by the well at `+1`.
    PositiveOscillatory,
    /// At least one zero of `u` at finite radius.
    NodalFiniteZero,
    /// Terminated on the triple-smallness dead-core test.
    DeadCoreCandidate,
    /// No confident verdict at this horizon (never silently misclassified).
    Undetermined,
}

impl RegimeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeTag::TrivialZero => "TrivialZero",
            RegimeTag::EquilibriumPlus => "EquilibriumPlus",
            RegimeTag::EquilibriumMinus => "EquilibriumMinus",
            RegimeTag::OscAroundOne => "OscAroundOne",
            RegimeTag::OscAroundMinusOne => "OscAroundMinusOne",
            RegimeTag::PositiveOscillatory => "PositiveOscillatory",
            RegimeTag::NodalFiniteZero => "NodalFiniteZero",
            RegimeTag::DeadCoreCandidate => "DeadCoreCandidate",
            RegimeTag::Undetermined => "Undetermined",
        }
    }
}

/// Which well the tail of the trajectory settled into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Attractor {
    Plus1,
    Minus1,
}

impl Attractor {
    pub fn as_str(self) -> &'static str {
        match self {
            Attractor::Plus1 => "Plus1",
            Attractor::Minus1 => "Minus1",
        }
    }
}

/// Classification result with its supporting quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// First zero radius, present iff a `ZeroOfU` event exists.
    pub rho_a: Option<f64>,
    /// Number of `ZeroOfU` events.
    pub zero_count: usize,
    /// Tail attractor when the sign of `u` is settled over the last 10% of
    /// the radius span and the energy barrier is passed.
    pub final_attractor: Option<Attractor>,
}

/// The named radius sequences extracted from the event stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OscillationSkeleton {
    /// Crossing radii of the level `+1`.
    pub r_k: Vec<f64>,
    /// Crossing radii of the level `-1`.
    pub z_k: Vec<f64>,
    /// Zero radii of `u`.
    pub t_k: Vec<f64>,
    /// Critical radii (`ZeroOfV`).
    pub zeta_k: Vec<f64>,
    /// `u` at the critical radii.
    pub maxima: Vec<f64>,
}

/// Identifier of a trajectory predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LemmaId {
    /// A zero of `u` is transversal: `u(ζ) = 0 ⟹ u'(ζ) ≠ 0`.
    ZeroImpliesSlope,
    /// For `a > 1` the solution never returns to its initial value.
    BelowA,
    /// For `a > 1` the solution is not strictly decreasing to the horizon.
    NotMonotone,
    /// The first critical value sits strictly below 1.
    FirstCriticalBelowOne,
    /// After the first critical point in `(0,1)` (resp. `(-1,0)`) the
    /// trajectory is captured by `+1` (resp. `-1`).
    OscillatesAfterR1,
    /// No endless alternation of full `±1` swings; the tail is one-sided
    /// and every zero carries non-negative energy.
    ExcludedPattern,
    /// Captured tails drive the energy to the well bottom `-θ/(2(1-θ))`.
    EnergyLimit,
}

impl LemmaId {
    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::ZeroImpliesSlope => "ZeroImpliesSlope",
            LemmaId::BelowA => "BelowA",
            LemmaId::NotMonotone => "NotMonotone",
            LemmaId::FirstCriticalBelowOne => "FirstCriticalBelowOne",
            LemmaId::OscillatesAfterR1 => "OscillatesAfterR1",
            LemmaId::ExcludedPattern => "ExcludedPattern",
            LemmaId::EnergyLimit => "EnergyLimit",
        }
    }
}

/// Outcome of one trajectory predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub lemma_id: LemmaId,
    pub holds: bool,
    /// `(r, state)` where the predicate failed; present iff `holds` is false.
    pub witness: Option<(f64, State)>,
    /// Worst-case slack; `+∞` when the check is vacuous.
    pub margin: f64,
}

/// Which branch the first critical value landed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FirstCriticalCase {
    /// `u(r₁) ∈ (0, 1)`: positive capture branch.
    InZeroOne,
    /// `u(r₁) ∈ (-1, 0)`: negative capture branch.
    InMinusOneZero,
    /// `|u(r₁)|` below the dead-core threshold.
    DeadCore,
    /// `u(r₁) ≥ 1`: excluded by the integral identity.
    AtOrAboveOne,
    /// `u(r₁) ≤ -1`: deep first swing after a zero crossing.
    AtOrBelowMinusOne,
}

/// Energy level below which a trajectory can no longer reach `u = 0`
/// (a zero needs `E = ½v² ≥ 0` and `E` is non-increasing).
const CAPTURE_ENERGY_MARGIN: f64 = -1e-6;
/// Minimum level crossings demanded before calling a tail oscillatory.
const MIN_CROSSINGS: usize = 3;
/// Slack for the same-side envelope monotonicity check.
const ENVELOPE_SLACK: f64 = 1e-8;
/// `|v|` floor for transversal zeros: ten times the default event tolerance.
const ZERO_SLOPE_FLOOR: f64 = 1e-11;

/// Sign of `u` over the last 10% of the radius span; `None` when mixed.
fn tail_sign(traj: &Trajectory) -> Option<f64> {
    let first = traj.states.first()?.r;
    let last = traj.states.last()?.r;
    let cut = first + 0.9 * (last - first);
    let mut sign = 0.0;
    for s in traj.states.iter().filter(|s| s.r >= cut) {
        if s.u == 0.0 {
            return None;
        }
        let cur = s.u.signum();
        if sign == 0.0 {
            sign = cur;
        } else if sign != cur {
            return None;
        }
    }
    if sign == 0.0 {
        None
    } else {
        Some(sign)
    }
}

/// Energy-barrier capture test: settled tail sign plus `E < 0`.
fn captured(traj: &Trajectory) -> Option<Attractor> {
    if traj.final_energy() > CAPTURE_ENERGY_MARGIN {
        return None;
    }
    match tail_sign(traj) {
        Some(s) if s > 0.0 => Some(Attractor::Plus1),
        Some(s) if s < 0.0 => Some(Attractor::Minus1),
        _ => None,
    }
}

/// Same-side envelope monotonicity of `|u(ζ_k) - level|`: extrema above and
/// below the level are compared within their own subsequence, which is the
/// ordering the decreasing energy actually enforces.
fn envelope_same_side_ok(extrema: &[f64], level: f64) -> bool {
    let mut last_above: Option<f64> = None;
    let mut last_below: Option<f64> = None;
    for &u in extrema {
        let w = u - level;
        let slot = if w >= 0.0 {
            &mut last_above
        } else {
            &mut last_below
        };
        if let Some(prev) = *slot {
            if w.abs() > prev + ENVELOPE_SLACK {
                return false;
            }
        }
        *slot = Some(w.abs());
    }
    true
}

fn synthetic_constant(a: f64, params: &Params, cfg: &IntegratorConfig) -> Trajectory {
    let states = vec![State::new(0.0, a, 0.0), State::new(cfg.r_max, a, 0.0)];
    let energies = states.iter().map(|s| energy(s, params)).collect();
    Trajectory {
        params: *params,
        a,
        states,
        events: Vec::new(),
        energies,
        termination: Termination::ReachedRMax,
    }
}

/// Integrates from `u(0) = a` and classifies the trajectory.
///
/// `a = 0` and `|a| = 1` short-circuit to the exact constant solutions
/// without integrating. Step failures and unresolved tails are reported as
/// `Undetermined`, never silently misclassified.
pub fn classify(
    a: f64,
    params: &Params,
    cfg: &IntegratorConfig,
) -> Result<(Regime, OscillationSkeleton, Trajectory)> {
    cfg.validate()?;
    if !a.is_finite() {
        return Err(Error::Domain(format!(
            "initial value must be finite, got {a}"
        )));
    }
    if a == 0.0 || a == 1.0 || a == -1.0 {
        let traj = synthetic_constant(a, params, cfg);
        let tag = if a == 0.0 {
            RegimeTag::TrivialZero
        } else if a == 1.0 {
            RegimeTag::EquilibriumPlus
        } else {
            RegimeTag::EquilibriumMinus
        };
        let regime = Regime {
            tag,
            rho_a: None,
            zero_count: 0,
            final_attractor: None,
        };
        return Ok((regime, OscillationSkeleton::default(), traj));
    }

    let traj = integrate(a, params, cfg)?;
    let skeleton = extract_skeleton(&traj);
    let zero_count = traj.zero_count();
    let rho_a = traj.first_zero();
    let attractor = captured(&traj);

    let tag = match traj.termination {
        Termination::DeadCore => RegimeTag::DeadCoreCandidate,
        Termination::StepUnderflow | Termination::StepLimit => RegimeTag::Undetermined,
        Termination::ReachedRMax => {
            if zero_count >= 1 {
                RegimeTag::NodalFiniteZero
            } else {
                match attractor {
                    Some(Attractor::Plus1)
                        if skeleton.r_k.len() >= MIN_CROSSINGS
                            && envelope_same_side_ok(&skeleton.maxima, 1.0) =>
                    {
                        let min_u = traj
                            .states
                            .iter()
                            .map(|s| s.u)
                            .fold(f64::INFINITY, f64::min);
                        if a > 1.0 && min_u > 0.0 {
                            RegimeTag::PositiveOscillatory
                        } else {
                            RegimeTag::OscAroundOne
                        }
                    }
                    Some(Attractor::Minus1)
                        if skeleton.z_k.len() >= MIN_CROSSINGS
                            && envelope_same_side_ok(&skeleton.maxima, -1.0) =>
                    {
                        RegimeTag::OscAroundMinusOne
                    }
                    _ => RegimeTag::Undetermined,
                }
            }
        }
    };

    let regime = Regime {
        tag,
        rho_a,
        zero_count,
        final_attractor: attractor,
    };
    Ok((regime, skeleton, traj))
}

/// Partitions the event stream into the named radius sequences.
pub fn extract_skeleton(traj: &Trajectory) -> OscillationSkeleton {
    let mut skeleton = OscillationSkeleton::default();
    for ev in &traj.events {
        match ev.kind {
            EventKind::CrossUp1 | EventKind::CrossDown1 => skeleton.r_k.push(ev.r),
            EventKind::CrossUpMinus1 | EventKind::CrossDownMinus1 => skeleton.z_k.push(ev.r),
            EventKind::ZeroOfU => skeleton.t_k.push(ev.r),
            EventKind::ZeroOfV => {
                skeleton.zeta_k.push(ev.r);
                skeleton.maxima.push(ev.state.u);
            }
            EventKind::DeadCore => {}
        }
    }
    skeleton
}

/// Every zero of `u` must be transversal: `|v| ≥ 10·event_tol` there.
pub fn check_zero_slope(traj: &Trajectory) -> LemmaReport {
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for ev in traj.events_of(EventKind::ZeroOfU) {
        let slope = ev.state.v.abs();
        if slope < margin {
            margin = slope;
        }
        if slope < ZERO_SLOPE_FLOOR && witness.is_none() {
            witness = Some((ev.r, ev.state));
        }
    }
    LemmaReport {
        lemma_id: LemmaId::ZeroImpliesSlope,
        holds: witness.is_none(),
        witness,
        margin,
    }
}

/// For `a > 1`: `u(r) < a` at every sampled radius `r > 0`.
pub fn check_below_a(traj: &Trajectory) -> Result<LemmaReport> {
    if !(traj.a > 1.0) {
        return Err(Error::Precondition(format!(
            "below-a predicate applies to a > 1, got a = {}",
            traj.a
        )));
    }
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for s in traj.states.iter().filter(|s| s.r > 0.0) {
        let slack = traj.a - s.u;
        if slack < margin {
            margin = slack;
            if slack <= 0.0 && witness.is_none() {
                witness = Some((s.r, *s));
            }
        }
    }
    Ok(LemmaReport {
        lemma_id: LemmaId::BelowA,
        holds: margin > 0.0,
        witness,
        margin,
    })
}

/// For `a > 1`: a first critical point exists before the horizon.
pub fn check_not_monotone(traj: &Trajectory) -> Result<LemmaReport> {
    if !(traj.a > 1.0) {
        return Err(Error::Precondition(format!(
            "monotonicity predicate applies to a > 1, got a = {}",
            traj.a
        )));
    }
    let first_critical = traj.events_of(EventKind::ZeroOfV).next();
    match first_critical {
        Some(ev) => Ok(LemmaReport {
            lemma_id: LemmaId::NotMonotone,
            holds: true,
            witness: None,
            // slack: how far before the horizon the critical point appeared
            margin: traj.last_state().r - ev.r,
        }),
        None => Ok(LemmaReport {
            lemma_id: LemmaId::NotMonotone,
            holds: false,
            witness: Some((traj.last_state().r, traj.last_state())),
            margin: 0.0,
        }),
    }
}

/// For `a > 1`: the first critical value is `< 1`, and which branch it hit.
pub fn check_first_critical(traj: &Trajectory) -> Result<(LemmaReport, FirstCriticalCase)> {
    if !(traj.a > 1.0) {
        return Err(Error::Precondition(format!(
            "first-critical predicate applies to a > 1, got a = {}",
            traj.a
        )));
    }
    let ev = traj
        .events_of(EventKind::ZeroOfV)
        .next()
        .ok_or_else(|| Error::MissingEvent("no critical point before the horizon".into()))?;
    let u1 = ev.state.u;
    let case = if u1 >= 1.0 {
        FirstCriticalCase::AtOrAboveOne
    } else if u1.abs() <= 1e-9 {
        FirstCriticalCase::DeadCore
    } else if u1 > 0.0 {
        FirstCriticalCase::InZeroOne
    } else if u1 > -1.0 {
        FirstCriticalCase::InMinusOneZero
    } else {
        FirstCriticalCase::AtOrBelowMinusOne
    };
    let holds = u1 < 1.0 - 1e-9;
    Ok((
        LemmaReport {
            lemma_id: LemmaId::FirstCriticalBelowOne,
            holds,
            witness: if holds { None } else { Some((ev.r, ev.state)) },
            margin: 1.0 - u1,
        },
        case,
    ))
}

/// After a first critical value in `(0,1)` (resp. `(-1,0)`) the tail must be
/// captured by `+1` (resp. `-1`); vacuous for other first critical values.
pub fn check_oscillates_after_r1(traj: &Trajectory) -> Result<LemmaReport> {
    if !(traj.a > 1.0) {
        return Err(Error::Precondition(format!(
            "post-critical oscillation predicate applies to a > 1, got a = {}",
            traj.a
        )));
    }
    let ev = traj
        .events_of(EventKind::ZeroOfV)
        .next()
        .ok_or_else(|| Error::MissingEvent("no critical point before the horizon".into()))?;
    let u1 = ev.state.u;
    let expected = if u1 > 0.0 && u1 < 1.0 {
        Some(Attractor::Plus1)
    } else if u1 > -1.0 && u1 < 0.0 {
        Some(Attractor::Minus1)
    } else {
        None
    };
    let (holds, witness, margin) = match expected {
        None => (true, None, f64::INFINITY),
        Some(want) => {
            let got = captured(traj);
            if got == Some(want) {
                (true, None, -traj.final_energy())
            } else {
                (false, Some((traj.last_state().r, traj.last_state())), 0.0)
            }
        }
    };
    Ok(LemmaReport {
        lemma_id: LemmaId::OscillatesAfterR1,
        holds,
        witness,
        margin,
    })
}

/// No endless alternation of full `±1` swings: after the last critical point
/// with `|u| ≥ 1` the trajectory keeps one sign, and every zero of `u`
/// carries non-negative energy `E = ½v²`.
pub fn check_excluded_pattern(traj: &Trajectory) -> LemmaReport {
    let outer_last = traj
        .events_of(EventKind::ZeroOfV)
        .filter(|ev| ev.state.u.abs() >= 1.0 - 1e-12)
        .last()
        .map(|ev| ev.r);
    let mut witness = None;
    if let Some(r_last) = outer_last {
        let mut sign = 0.0;
        for s in traj.states.iter().filter(|s| s.r > r_last) {
            if s.u == 0.0 {
                witness = Some((s.r, *s));
                break;
            }
            let cur = s.u.signum();
            if sign == 0.0 {
                sign = cur;
            } else if sign != cur {
                witness = Some((s.r, *s));
                break;
            }
        }
    }
    let mut margin = f64::INFINITY;
    for ev in traj.events_of(EventKind::ZeroOfU) {
        let e = energy(&ev.state, &traj.params);
        if e < margin {
            margin = e;
        }
        if e < -1e-12 && witness.is_none() {
            witness = Some((ev.r, ev.state));
        }
    }
    LemmaReport {
        lemma_id: LemmaId::ExcludedPattern,
        holds: witness.is_none(),
        witness,
        margin,
    }
}

/// Captured tails must drive the energy to the well bottom:
/// `|E(r_end) - F(1)| ≤ 1e-4` with `E` non-increasing throughout.
pub fn check_energy_limit(traj: &Trajectory, params: &Params) -> Result<LemmaReport> {
    if captured(traj).is_none() {
        return Err(Error::Precondition(
            "energy-limit predicate applies to trajectories captured by ±1".into(),
        ));
    }
    let mut witness = None;
    for (pair, states) in traj.energies.windows(2).zip(traj.states.windows(2)) {
        if pair[1] > pair[0] + 1e-8 * (1.0 + pair[0].abs()) {
            witness = Some((states[1].r, states[1]));
            break;
        }
    }
    let margin = (traj.final_energy() - params.potential_min).abs();
    let holds = witness.is_none() && margin <= 1e-4;
    if !holds && witness.is_none() {
        witness = Some((traj.last_state().r, traj.last_state()));
    }
    Ok(LemmaReport {
        lemma_id: LemmaId::EnergyLimit,
        holds,
        witness,
        margin,
    })
}

/// `√λ₁` of the unit ball: the first positive zero of the Bessel function
/// `J_{(d-2)/2}`, located by bisection on its ascending series.
///
/// Supported for `d ∈ {2, 3}`: `J₀` (first zero ≈ 2.40482556) and `J_{1/2}`
/// (first zero exactly π, since `J_{1/2}(x) ∝ sin(x)/√x`).
pub fn lambda1_threshold(d: f64) -> Result<f64> {
    let nu = if (d - 2.0).abs() <= 1e-9 {
        0.0
    } else if (d - 3.0).abs() <= 1e-9 {
        0.5
    } else {
        return Err(Error::NotSupported(format!(
            "first Dirichlet eigenvalue threshold is implemented for d ∈ {{2, 3}}, got {d}"
        )));
    };
    let (mut lo, mut hi) = if nu == 0.0 { (2.0, 3.0) } else { (3.0, 3.3) };
    let f_lo = bessel_j_series(nu, lo);
    debug_assert!(f_lo > 0.0 && bessel_j_series(nu, hi) < 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let val = bessel_j_series(nu, mid);
        if val == 0.0 {
            return Ok(mid);
        }
        if val.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Ascending series `J_ν(x) = (x/2)^ν Σ (-1)^m (x²/4)^m / (m! Γ(m+ν+1))`,
/// for ν ∈ {0, 1/2} (Γ(1) = 1, Γ(3/2) = √π/2).
fn bessel_j_series(nu: f64, x: f64) -> f64 {
    let gamma_nu_plus_1 = if nu == 0.0 {
        1.0
    } else {
        0.5 * std::f64::consts::PI.sqrt()
    };
    let q = x * x / 4.0;
    let mut term = (0.5 * x).powf(nu) / gamma_nu_plus_1;
    let mut sum = term;
    for m in 1..200 {
        let m = m as f64;
        term *= -q / (m * (m + nu));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// JSON projection of a [`LemmaReport`] with the stable field names.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReportJson {
    pub lemma_id: LemmaId,
    pub holds: bool,
    /// `null` when the check is vacuous (infinite slack).
    pub margin: Option<f64>,
    pub witness_r: Option<f64>,
}

impl From<&LemmaReport> for LemmaReportJson {
    fn from(report: &LemmaReport) -> Self {
        LemmaReportJson {
            lemma_id: report.lemma_id,
            holds: report.holds,
            margin: report.margin.is_finite().then_some(report.margin),
            witness_r: report.witness.map(|(r, _)| r),
        }
    }
}

/// Full classification verdict for one initial value: the regime, the
/// supporting sequences, and the applicable predicate reports.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub a: f64,
    pub tag: RegimeTag,
    pub rho_a: Option<f64>,
    pub zero_count: usize,
    pub final_attractor: Option<Attractor>,
    pub skeleton: OscillationSkeleton,
    pub lemmas: Vec<LemmaReportJson>,
}

impl RegimeReport {
    /// Assembles the report, running every predicate whose precondition the
    /// trajectory satisfies.
    pub fn build(
        regime: &Regime,
        skeleton: &OscillationSkeleton,
        traj: &Trajectory,
        params: &Params,
    ) -> Self {
        let mut lemmas = Vec::new();
        lemmas.push(LemmaReportJson::from(&check_zero_slope(traj)));
        lemmas.push(LemmaReportJson::from(&check_excluded_pattern(traj)));
        if traj.a > 1.0 {
            if let Ok(rep) = check_below_a(traj) {
                lemmas.push(LemmaReportJson::from(&rep));
            }
            if let Ok(rep) = check_not_monotone(traj) {
                lemmas.push(LemmaReportJson::from(&rep));
            }
            if let Ok((rep, _)) = check_first_critical(traj) {
                lemmas.push(LemmaReportJson::from(&rep));
            }
            if let Ok(rep) = check_oscillates_after_r1(traj) {
                lemmas.push(LemmaReportJson::from(&rep));
            }
        }
        if let Ok(rep) = check_energy_limit(traj, params) {
            lemmas.push(LemmaReportJson::from(&rep));
        }
        RegimeReport {
            a: traj.a,
            tag: regime.tag,
            rho_a: regime.rho_a,
            zero_count: regime.zero_count,
            final_attractor: regime.final_attractor,
            skeleton: skeleton.clone(),
            lemmas,
        }
    }
}
