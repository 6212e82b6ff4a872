//! Adaptive integration of the radial initial-value problem.
//!
//! The trajectory starts at `r = 0` with `u(0) = a`, `u'(0) = 0`. The axis
//! term `(d-1)/r` is singular there, so the first step is an explicit Taylor
//! step built from the regular limit `u''(0) = -f(a)/d`; from then on an
//! embedded Dormand–Prince 5(4) pair with proportional-integral step control
//! advances the phase point. Every accepted step carries a cubic Hermite
//! interpolant; sign changes of `u`, `v`, `u-1`, `u+1` on it are refined by
//! Brent's method and polished with the full right-hand side, producing the
//! event stream (zeros, critical points, ±1 crossings). A triple smallness
//! test on `(u, v, E)` recognises dead-core arrival, past which the solution
//! extends by zero and further integration is meaningless.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlin::{energy, force, Params, State};

/// Tolerances and limits of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Relative tolerance of the embedded error estimate.
    pub rel_tol: f64,
    /// Absolute tolerance of the embedded error estimate.
    pub abs_tol: f64,
    /// Right end of the integration interval.
    pub r_max: f64,
    /// Size of the Taylor startup step (also the initial trial step).
    pub h_init: f64,
    /// Smallest step the controller may demand before giving up.
    pub h_min: f64,
    /// Residual tolerance for refined event locations.
    pub event_tol: f64,
    /// Triple-smallness threshold on `(|u|, |v|, |E|)` for dead-core arrival.
    pub dead_core_eps: f64,
    /// Cap on attempted steps (accepted plus rejected).
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            r_max: 200.0,
            h_init: 1e-4,
            h_min: 1e-12,
            event_tol: 1e-12,
            dead_core_eps: 1e-9,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    /// Checks positivity of tolerances and the ordering `h_min < h_init < r_max`.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("r_max", self.r_max),
            ("h_init", self.h_init),
            ("h_min", self.h_min),
            ("event_tol", self.event_tol),
            ("dead_core_eps", self.dead_core_eps),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Domain(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        if !(self.h_min < self.h_init && self.h_init < self.r_max) {
            return Err(Error::Domain(format!(
                "step sizes must satisfy h_min < h_init < r_max, got {} / {} / {}",
                self.h_min, self.h_init, self.r_max
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Domain("max_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Same configuration with a different truncation radius.
    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }
}

/// Classification of a refined trajectory event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// `u = 0` (a node).
    ZeroOfU,
    /// `v = u' = 0` (a critical point).
    ZeroOfV,
    /// `u` crosses `+1` upward.
    CrossUp1,
    /// `u` crosses `+1` downward.
    CrossDown1,
    /// `u` crosses `-1` upward.
    CrossUpMinus1,
    /// `u` crosses `-1` downward.
    CrossDownMinus1,
    /// `u`, `v` and `E` simultaneously below the dead-core threshold.
    DeadCore,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ZeroOfU => "ZeroOfU",
            EventKind::ZeroOfV => "ZeroOfV",
            EventKind::CrossUp1 => "CrossUp1",
            EventKind::CrossDown1 => "CrossDown1",
            EventKind::CrossUpMinus1 => "CrossUpMinus1",
            EventKind::CrossDownMinus1 => "CrossDownMinus1",
            EventKind::DeadCore => "DeadCore",
        }
    }

    fn index(self) -> usize {
        match self {
            EventKind::ZeroOfU => 0,
            EventKind::ZeroOfV => 1,
            EventKind::CrossUp1 => 2,
            EventKind::CrossDown1 => 3,
            EventKind::CrossUpMinus1 => 4,
            EventKind::CrossDownMinus1 => 5,
            EventKind::DeadCore => 6,
        }
    }
}

/// A tagged root with its refined location and phase state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub r: f64,
    pub state: State,
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Reached the configured truncation radius.
    ReachedRMax,
    /// Arrived at `u = v = E = 0` within tolerance; extension by zero.
    DeadCore,
    /// The controller demanded a step below `h_min`.
    StepUnderflow,
    /// The attempt budget ran out (or the solution left f64 range).
    StepLimit,
}

/// Dense output of one integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: Params,
    /// Initial value `u(0)`.
    pub a: f64,
    /// Accepted-step states, strictly increasing in `r`; `states[0]` is the
    /// initial condition when the run started at the origin.
    pub states: Vec<State>,
    /// Refined events in increasing `r`.
    pub events: Vec<Event>,
    /// `energy(states[i])`, recomputed from the states.
    pub energies: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last_state(&self) -> State {
        *self
            .states
            .last()
            .expect("trajectory has at least one state")
    }

    pub fn final_energy(&self) -> f64 {
        *self
            .energies
            .last()
            .expect("trajectory has at least one state")
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// First event of the given kind, if any.
    pub fn first_event_of(&self, kind: EventKind) -> Option<Event> {
        self.events_of(kind).next().copied()
    }

    /// Number of nodes (`ZeroOfU` events).
    pub fn zero_count(&self) -> usize {
        self.events_of(EventKind::ZeroOfU).count()
    }

    /// Radius of the first node, if any.
    pub fn first_zero(&self) -> Option<f64> {
        self.events_of(EventKind::ZeroOfU).next().map(|e| e.r)
    }

    /// Dense-output evaluation at radius `r` by cubic Hermite interpolation
    /// on the accepted step containing `r`. Below the startup step the Taylor
    /// expansion around the origin is used. `None` outside the covered range.
    pub fn sample(&self, r: f64) -> Option<State> {
        let first = self.states.first()?;
        let last = self.states.last()?;
        if r < first.r || r > last.r || !r.is_finite() {
            return None;
        }
        if r == last.r {
            return Some(*last);
        }
        // index of the left node of the step containing r
        let idx = match self
            .states
            .binary_search_by(|s| s.r.partial_cmp(&r).unwrap())
        {
            Ok(i) => return Some(self.states[i]),
            Err(i) => i - 1,
        };
        let s0 = self.states[idx];
        let s1 = self.states[idx + 1];
        if s0.r == 0.0 {
            // Taylor branch: u'' at the origin is -f(a)/d.
            let c = force(self.a, &self.params) / self.params.dim;
            return Some(State::new(r, self.a - 0.5 * c * r * r, -c * r));
        }
        let interp = StepInterp::new(&self.params, &s0, &s1);
        Some(State::new(r, interp.u_at(r), interp.v_at(r)))
    }

    /// Streams the dense output as CSV with header `r,u,v,E`
    /// (17 significant digits per field).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "r,u,v,E")?;
        for (s, e) in self.states.iter().zip(&self.energies) {
            writeln!(
                w,
                "{},{},{},{}",
                format_sig17(s.r),
                format_sig17(s.u),
                format_sig17(s.v),
                format_sig17(*e)
            )?;
        }
        Ok(())
    }

    /// Streams the event list as CSV with header `kind,r,u,v`.
    pub fn write_events_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "kind,r,u,v")?;
        for ev in &self.events {
            writeln!(
                w,
                "{},{},{},{}",
                ev.kind.as_str(),
                format_sig17(ev.r),
                format_sig17(ev.state.u),
                format_sig17(ev.state.v)
            )?;
        }
        Ok(())
    }
}

/// Fixed 17-significant-digit formatting used by every file format the crate
/// emits; locale-independent and reproducible across runs.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Phase-plane right-hand side: `du = v`, `dv = -(d-1)/r·v - f(u)`.
///
/// Only valid away from the axis; startup through `r = 0` must use
/// [`taylor_start`].
pub fn rhs(state: &State, params: &Params) -> Result<(f64, f64)> {
    if !(state.r > 0.0) {
        return Err(Error::Domain(format!(
            "right-hand side needs r > 0, got r = {}; use taylor_start at the origin",
            state.r
        )));
    }
    Ok(accel(state.r, state.u, state.v, params))
}

#[inline]
fn accel(r: f64, u: f64, v: f64, params: &Params) -> (f64, f64) {
    debug_assert!(r > 0.0);
    (v, -(params.dim - 1.0) / r * v - force(u, params))
}

/// Second-order startup: the unique `C²` solution through the origin has
/// `u''(0) = -f(a)/d`, so
/// `u(h) = a - f(a)/(2d)·h²`, `v(h) = -f(a)/d·h`, exact to `O(h⁴)`
/// (odd Taylor coefficients vanish at the axis).
pub fn taylor_start(a: f64, h: f64, params: &Params) -> Result<State> {
    if a == 0.0 {
        return Err(Error::Domain(
            "taylor_start is undefined at a = 0; the trivial solution is handled by classification"
                .into(),
        ));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!(
            "startup step must be positive, got {h}"
        )));
    }
    let c = force(a, params) / params.dim;
    Ok(State::new(h, a - 0.5 * c * h * h, -c * h))
}

/// Integrates the initial-value problem from `r = 0` up to `cfg.r_max` or an
/// earlier dead-core / step-failure termination.
pub fn integrate(a: f64, params: &Params, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if a == 0.0 || !a.is_finite() {
        return Err(Error::Domain(format!(
            "initial value must be finite and nonzero, got {a}"
        )));
    }
    let start = taylor_start(a, cfg.h_init, params)?;
    let states = vec![State::new(0.0, a, 0.0), start];
    Ok(drive(params, a, states, cfg))
}

/// Continues integration from an arbitrary interior state with the same
/// stepping and event semantics. The returned trajectory is the extension
/// only; its first state is `from`.
pub fn resume(traj: &Trajectory, from: State, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !(from.r > 0.0) || !from.r.is_finite() {
        return Err(Error::Domain(format!(
            "resume needs a strictly positive radius, got {}",
            from.r
        )));
    }
    Ok(drive(&traj.params, traj.a, vec![from], cfg))
}

fn drive(params: &Params, a: f64, mut states: Vec<State>, cfg: &IntegratorConfig) -> Trajectory {
    let mut events = Vec::new();
    let termination = step_loop(params, cfg, &mut states, &mut events);
    let energies = states.iter().map(|s| energy(s, params)).collect();
    Trajectory {
        params: *params,
        a,
        states,
        events,
        energies,
        termination,
    }
}

// Dormand-Prince 5(4) tableau. The 7th stage row equals the 5th-order
// weights (first-same-as-last), so k7 doubles as the next step's k1.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// Hairer-style PI controller constants.
const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_SHRINK: f64 = 5.0; // at most h/5 per rejection
const FAC_GROW: f64 = 10.0; // at most 10h per acceptance

struct DpStep {
    u: f64,
    v: f64,
    k7: (f64, f64),
    err: f64,
}

fn dopri_step(
    params: &Params,
    s: &State,
    k1: (f64, f64),
    h: f64,
    cfg: &IntegratorConfig,
) -> DpStep {
    let mut k = [(0.0f64, 0.0f64); 7];
    k[0] = k1;
    let mut u_new = s.u;
    let mut v_new = s.v;
    for i in 1..7 {
        let mut du = 0.0;
        let mut dv = 0.0;
        for j in 0..i.min(6) {
            du += DP_A[i][j] * k[j].0;
            dv += DP_A[i][j] * k[j].1;
        }
        let u = s.u + h * du;
        let v = s.v + h * dv;
        if i == 6 {
            u_new = u;
            v_new = v;
        }
        k[i] = accel(s.r + DP_C[i] * h, u, v, params);
    }
    let mut err_u = 0.0;
    let mut err_v = 0.0;
    for j in 0..7 {
        err_u += DP_E[j] * k[j].0;
        err_v += DP_E[j] * k[j].1;
    }
    err_u *= h;
    err_v *= h;
    let sk_u = cfg.abs_tol + cfg.rel_tol * s.u.abs().max(u_new.abs());
    let sk_v = cfg.abs_tol + cfg.rel_tol * s.v.abs().max(v_new.abs());
    let err = (0.5 * ((err_u / sk_u).powi(2) + (err_v / sk_v).powi(2))).sqrt();
    DpStep {
        u: u_new,
        v: v_new,
        k7: k[6],
        err,
    }
}

/// Cubic Hermite interpolant over one accepted step; `u` uses the stored
/// slopes `v`, `v` uses the right-hand side slopes at the nodes.
struct StepInterp {
    r0: f64,
    h: f64,
    u0: f64,
    v0: f64,
    dv0: f64,
    u1: f64,
    v1: f64,
    dv1: f64,
}

impl StepInterp {
    fn new(params: &Params, s0: &State, s1: &State) -> Self {
        let (_, dv0) = accel(s0.r, s0.u, s0.v, params);
        let (_, dv1) = accel(s1.r, s1.u, s1.v, params);
        StepInterp {
            r0: s0.r,
            h: s1.r - s0.r,
            u0: s0.u,
            v0: s0.v,
            dv0,
            u1: s1.u,
            v1: s1.v,
            dv1,
        }
    }

    fn from_slopes(s0: &State, k0: (f64, f64), s1: &State, k1: (f64, f64)) -> Self {
        StepInterp {
            r0: s0.r,
            h: s1.r - s0.r,
            u0: s0.u,
            v0: k0.0,
            dv0: k0.1,
            u1: s1.u,
            v1: k1.0,
            dv1: k1.1,
        }
    }

    #[inline]
    fn basis(&self, r: f64) -> (f64, f64, f64, f64) {
        let t = (r - self.r0) / self.h;
        let s = 1.0 - t;
        (
            s * s * (1.0 + 2.0 * t),
            t * s * s,
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        )
    }

    fn u_at(&self, r: f64) -> f64 {
        let (h00, h10, h01, h11) = self.basis(r);
        h00 * self.u0 + h10 * self.h * self.v0 + h01 * self.u1 + h11 * self.h * self.v1
    }

    fn v_at(&self, r: f64) -> f64 {
        let (h00, h10, h01, h11) = self.basis(r);
        h00 * self.v0 + h10 * self.h * self.dv0 + h01 * self.v1 + h11 * self.h * self.dv1
    }
}

/// Precise in-step evaluation: two classical RK4 substeps from the step's
/// left node to `r`. Used to polish event locations found on the interpolant.
fn eval_on_step(params: &Params, s0: &State, r: f64) -> State {
    if r <= s0.r {
        return *s0;
    }
    let mut cur = *s0;
    let dh = (r - s0.r) / 2.0;
    for _ in 0..2 {
        let h = dh;
        let (k1u, k1v) = accel(cur.r, cur.u, cur.v, params);
        let (k2u, k2v) = accel(
            cur.r + 0.5 * h,
            cur.u + 0.5 * h * k1u,
            cur.v + 0.5 * h * k1v,
            params,
        );
        let (k3u, k3v) = accel(
            cur.r + 0.5 * h,
            cur.u + 0.5 * h * k2u,
            cur.v + 0.5 * h * k2v,
            params,
        );
        let (k4u, k4v) = accel(cur.r + h, cur.u + h * k3u, cur.v + h * k3v, params);
        cur = State::new(
            cur.r + h,
            cur.u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            cur.v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        );
    }
    cur.r = r;
    cur
}

/// The four scalar channels scanned for sign changes within each step.
#[derive(Clone, Copy, PartialEq)]
enum Channel {
    U,
    V,
    UMinus1,
    UPlus1,
}

impl Channel {
    fn value(self, s: &State) -> f64 {
        match self {
            Channel::U => s.u,
            Channel::V => s.v,
            Channel::UMinus1 => s.u - 1.0,
            Channel::UPlus1 => s.u + 1.0,
        }
    }

    fn interp_value(self, interp: &StepInterp, r: f64) -> f64 {
        match self {
            Channel::U => interp.u_at(r),
            Channel::V => interp.v_at(r),
            Channel::UMinus1 => interp.u_at(r) - 1.0,
            Channel::UPlus1 => interp.u_at(r) + 1.0,
        }
    }

    fn slope(self, s: &State, params: &Params) -> f64 {
        match self {
            Channel::V => accel(s.r, s.u, s.v, params).1,
            _ => s.v,
        }
    }

    /// Event kind given the sign of the channel before the root.
    fn kind(self, rising: bool) -> EventKind {
        match (self, rising) {
            (Channel::U, _) => EventKind::ZeroOfU,
            (Channel::V, _) => EventKind::ZeroOfV,
            (Channel::UMinus1, true) => EventKind::CrossUp1,
            (Channel::UMinus1, false) => EventKind::CrossDown1,
            (Channel::UPlus1, true) => EventKind::CrossUpMinus1,
            (Channel::UPlus1, false) => EventKind::CrossDownMinus1,
        }
    }
}

const CHANNELS: [Channel; 4] = [Channel::U, Channel::V, Channel::UMinus1, Channel::UPlus1];
const SCAN_POINTS: usize = 8;

/// Brent root refinement on a scalar function over `[a, b]` with `f(a)·f(b) < 0`.
fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
) -> f64 {
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..80 {
        if fb.abs() < 1e-300 {
            return b;
        }
        if fa.signum() == fb.signum() {
            a = c;
            fa = fc;
            d = b - a;
            e = d;
        }
        if fa.abs() < fb.abs() {
            c = b;
            b = a;
            a = c;
            fc = fb;
            fb = fa;
            fa = fc;
        }
        let m = 0.5 * (a - b);
        if m.abs() <= xtol {
            return b;
        }
        if e.abs() < xtol || fc.abs() <= fb.abs() {
            d = m;
            e = m;
        } else {
            let s = fb / fc;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q0 = fc / fa;
                let r = fb / fa;
                (
                    s * (2.0 * m * q0 * (q0 - r) - (b - c) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * m * q - (xtol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        c = b;
        fc = fb;
        b += if d.abs() > xtol { d } else { xtol * m.signum() };
        fb = f(b);
    }
    b
}

/// Refines one bracketed sign change: Brent on the Hermite interpolant,
/// then Newton corrections evaluated with the full right-hand side. Returns
/// `None` when the candidate does not meet the event tolerance (tangency or
/// interpolation artifact).
#[allow(clippy::too_many_arguments)]
fn refine_event(
    params: &Params,
    cfg: &IntegratorConfig,
    s0: &State,
    interp: &StepInterp,
    channel: Channel,
    r_lo: f64,
    r_hi: f64,
    f_lo: f64,
    f_hi: f64,
) -> Option<(f64, State)> {
    let xtol = (cfg.event_tol * 1e-2).max(f64::EPSILON * r_hi.abs());
    let mut r = brent(
        |r| channel.interp_value(interp, r),
        r_lo,
        r_hi,
        f_lo,
        f_hi,
        xtol,
    );
    // Newton polish against the true local flow.
    for _ in 0..6 {
        let s = eval_on_step(params, s0, r);
        let val = channel.value(&s);
        if val.abs() <= 0.5 * cfg.event_tol {
            return Some((r, s));
        }
        let slope = channel.slope(&s, params);
        if !slope.is_finite() || slope == 0.0 {
            break;
        }
        let next = (r - val / slope).clamp(r_lo, r_hi);
        if next == r {
            break;
        }
        r = next;
    }
    // Bisection fallback on the true evaluation.
    let mut lo = r_lo;
    let mut hi = r_hi;
    let mut v_lo = channel.value(&eval_on_step(params, s0, lo));
    let v_hi = channel.value(&eval_on_step(params, s0, hi));
    if v_lo == 0.0 {
        return Some((lo, eval_on_step(params, s0, lo)));
    }
    if v_hi == 0.0 {
        return Some((hi, eval_on_step(params, s0, hi)));
    }
    if v_lo.signum() == v_hi.signum() {
        return None;
    }
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        let s = eval_on_step(params, s0, mid);
        let val = channel.value(&s);
        if val.abs() <= 0.5 * cfg.event_tol {
            return Some((mid, s));
        }
        if val.signum() == v_lo.signum() {
            lo = mid;
            v_lo = val;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs() {
            let s = eval_on_step(params, s0, 0.5 * (lo + hi));
            return if channel.value(&s).abs() <= cfg.event_tol {
                Some((s.r, s))
            } else {
                None
            };
        }
    }
    None
}

fn detect_step_events(
    params: &Params,
    cfg: &IntegratorConfig,
    s0: &State,
    k0: (f64, f64),
    s1: &State,
    k1: (f64, f64),
    last_by_kind: &mut [Option<f64>; 7],
) -> Vec<Event> {
    let interp = StepInterp::from_slopes(s0, k0, s1, k1);
    let mut found: Vec<Event> = Vec::new();
    let h = s1.r - s0.r;
    for channel in CHANNELS {
        // Interpolation of a constant channel leaves ±ulp noise whose sign is
        // meaningless; samples below this floor count as exact zeros and do
        // not participate in sign-change detection (the refinement below
        // still resolves genuine roots to event_tol).
        let floor = 1e-13 * (1.0 + channel.value(s0).abs().max(channel.value(s1).abs()));
        let quantize = |f: f64| if f.abs() <= floor { 0.0 } else { f };
        let mut prev_r = s0.r;
        let mut prev_f = quantize(channel.value(s0));
        for i in 1..=SCAN_POINTS {
            let r = if i == SCAN_POINTS {
                s1.r
            } else {
                s0.r + h * i as f64 / SCAN_POINTS as f64
            };
            let f = quantize(if i == SCAN_POINTS {
                channel.value(s1)
            } else {
                channel.interp_value(&interp, r)
            });
            if f == 0.0 {
                // root at (or noise around) the sample itself; keep the last
                // signed sample so the next one can still bracket it.
                continue;
            }
            if prev_f == 0.0 {
                prev_r = r;
                prev_f = f;
                continue;
            }
            if f.signum() != prev_f.signum() {
                if let Some((r_ev, state)) =
                    refine_event(params, cfg, s0, &interp, channel, prev_r, r, prev_f, f)
                {
                    let rising = prev_f < 0.0;
                    let kind = channel.kind(rising);
                    // Snap to the step endpoint when indistinguishable.
                    let (r_ev, state) = if (r_ev - s1.r).abs() <= cfg.event_tol {
                        (s1.r, State::new(s1.r, state.u, state.v))
                    } else {
                        (r_ev, state)
                    };
                    let dup = last_by_kind[kind.index()]
                        .map(|r_prev| {
                            (r_ev - r_prev).abs() <= 4.0 * cfg.event_tol * (1.0 + r_ev.abs())
                        })
                        .unwrap_or(false);
                    if !dup {
                        last_by_kind[kind.index()] = Some(r_ev);
                        found.push(Event {
                            kind,
                            r: r_ev,
                            state,
                        });
                    }
                }
            }
            prev_r = r;
            prev_f = f;
        }
    }
    found.sort_by(|a, b| a.r.partial_cmp(&b.r).unwrap());
    found
}

fn is_dead_core(state: &State, params: &Params, eps: f64) -> bool {
    state.u.abs() < eps && state.v.abs() < eps && energy(state, params).abs() < eps
}

fn step_loop(
    params: &Params,
    cfg: &IntegratorConfig,
    states: &mut Vec<State>,
    events: &mut Vec<Event>,
) -> Termination {
    let mut cur = *states.last().expect("step_loop needs a start state");
    if cur.r >= cfg.r_max {
        return Termination::ReachedRMax;
    }
    let mut k1 = accel(cur.r, cur.u, cur.v, params);
    let mut h = cfg.h_init.min(cfg.r_max - cur.r);
    let mut facold: f64 = 1e-4;
    let mut attempts = 0usize;
    let mut last_by_kind: [Option<f64>; 7] = [None; 7];

    loop {
        let remaining = cfg.r_max - cur.r;
        if remaining <= cfg.h_min {
            return Termination::ReachedRMax;
        }
        let mut h_attempt = h;
        // Keep (d-1)/r·h moderate while climbing away from the axis.
        h_attempt = h_attempt.min((0.4 * cur.r).max(cfg.h_init));
        // Near u = 0 the restoring term loses its Lipschitz bound; keep the
        // predicted crossing inside the current step so the endpoint sign
        // check cannot straddle two crossings.
        if cur.u != 0.0 && cur.v != 0.0 && cur.u.signum() != cur.v.signum() && cur.u.abs() < 0.5 {
            let crossing = (cur.u / cur.v).abs();
            if h_attempt > 2.0 * crossing {
                h_attempt = (2.0 * crossing).max(8.0 * cfg.h_min);
            }
        }
        let landing = h_attempt >= remaining;
        if landing {
            h_attempt = remaining;
        }

        attempts += 1;
        if attempts > cfg.max_steps {
            return Termination::StepLimit;
        }

        let step = dopri_step(params, &cur, k1, h_attempt, cfg);
        if !step.err.is_finite() {
            h = h_attempt * 0.1;
            if h < cfg.h_min {
                return Termination::StepUnderflow;
            }
            continue;
        }
        if step.err > 1.0 {
            let fac11 = step.err.powf(EXPO1);
            h = h_attempt / FAC_SHRINK.min(fac11 / SAFE);
            if h < cfg.h_min {
                return Termination::StepUnderflow;
            }
            continue;
        }

        // Accepted.
        let r_new = if landing {
            cfg.r_max
        } else {
            cur.r + h_attempt
        };
        let new_state = State::new(r_new, step.u, step.v);
        let step_events = detect_step_events(
            params,
            cfg,
            &cur,
            k1,
            &new_state,
            step.k7,
            &mut last_by_kind,
        );
        for ev in step_events {
            if is_dead_core(&ev.state, params, cfg.dead_core_eps) {
                events.push(Event {
                    kind: EventKind::DeadCore,
                    r: ev.r,
                    state: ev.state,
                });
                states.push(ev.state);
                return Termination::DeadCore;
            }
            events.push(ev);
        }
        if is_dead_core(&new_state, params, cfg.dead_core_eps) {
            events.push(Event {
                kind: EventKind::DeadCore,
                r: new_state.r,
                state: new_state,
            });
            states.push(new_state);
            return Termination::DeadCore;
        }
        states.push(new_state);
        if landing {
            return Termination::ReachedRMax;
        }

        let fac11 = step.err.powf(EXPO1);
        let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_GROW, FAC_SHRINK);
        facold = step.err.max(1e-4);
        h = h_attempt / fac;
        cur = new_state;
        k1 = step.k7;
    }
}
