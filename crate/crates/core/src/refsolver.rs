//! Brute-force oracle: fixed-step classical RK4 with bisection-located
//! events and a Richardson error estimate from paired runs at `h` and `h/2`.
//!
//! The oracle shares the Taylor startup with the adaptive integrator so that
//! startup modelling cancels in comparisons, but its marching loop is written
//! independently of the adaptive path it validates. Test-grade only: no
//! adaptivity, no event taxonomy beyond zeros of `u` and `v`.

use crate::error::{Error, Result};
use crate::integrator::{taylor_start, Event, EventKind, Termination, Trajectory};
use crate::nonlin::{energy, force, Params, State};

/// A reference solution together with its Richardson error estimate.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    /// Trajectory of the finer (`h/2`) run; states are thinned to roughly
    /// 0.005 spacing, events carry full resolution.
    pub traj: Trajectory,
    /// `max |u_h - u_{h/2}|` over 64 shared sample radii.
    pub richardson_error: f64,
}

#[inline]
fn accel(r: f64, u: f64, v: f64, params: &Params) -> (f64, f64) {
    (v, -(params.dim - 1.0) / r * v - force(u, params))
}

/// One classical RK4 step of size `h` from `s`.
fn rk4_step(s: &State, h: f64, params: &Params) -> State {
    let (k1u, k1v) = accel(s.r, s.u, s.v, params);
    let (k2u, k2v) = accel(
        s.r + 0.5 * h,
        s.u + 0.5 * h * k1u,
        s.v + 0.5 * h * k1v,
        params,
    );
    let (k3u, k3v) = accel(
        s.r + 0.5 * h,
        s.u + 0.5 * h * k2u,
        s.v + 0.5 * h * k2v,
        params,
    );
    let (k4u, k4v) = accel(s.r + h, s.u + h * k3u, s.v + h * k3v, params);
    State::new(
        s.r + h,
        s.u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        s.v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

struct March {
    states: Vec<State>,
    events: Vec<Event>,
    samples: Vec<f64>,
    termination: Termination,
}

fn bisect_event(prev: &State, next: &State, pick_v: bool, params: &Params) -> Event {
    let value = |s: &State| if pick_v { s.v } else { s.u };
    let mut lo = prev.r;
    let mut hi = next.r;
    let mut f_lo = value(prev);
    let eval = |r: f64| -> State {
        if r <= prev.r {
            *prev
        } else {
            rk4_step(prev, r - prev.r, params)
        }
    };
    for _ in 0..60 {
        if hi - lo <= 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = eval(mid);
        if value(&s) == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if value(&s).signum() == f_lo.signum() {
            lo = mid;
            f_lo = value(&s);
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let s = eval(r);
    Event {
        kind: if pick_v {
            EventKind::ZeroOfV
        } else {
            EventKind::ZeroOfU
        },
        r,
        state: s,
    }
}

fn march(a: f64, params: &Params, h: f64, r_max: f64, sample_radii: &[f64]) -> Result<March> {
    let start = taylor_start(a, h, params)?;
    let n_steps = ((r_max - start.r) / h).round() as usize;
    let thin = ((0.005 / h).round() as usize).max(1);
    let mut states = Vec::with_capacity(n_steps / thin + 3);
    states.push(State::new(0.0, a, 0.0));
    states.push(start);
    let mut events = Vec::new();
    let mut samples = vec![f64::NAN; sample_radii.len()];
    let mut next_sample = 0usize;
    let mut cur = start;
    let mut termination = Termination::ReachedRMax;
    for k in 1..=n_steps {
        let mut next = rk4_step(&cur, h, params);
        next.r = start.r + h * k as f64;
        if !next.u.is_finite() || !next.v.is_finite() {
            termination = Termination::StepLimit;
            break;
        }
        while next_sample < sample_radii.len() && sample_radii[next_sample] <= next.r {
            let r_s = sample_radii[next_sample];
            let s = if r_s <= cur.r {
                cur
            } else {
                rk4_step(&cur, r_s - cur.r, params)
            };
            samples[next_sample] = s.u;
            next_sample += 1;
        }
        if cur.u != 0.0 && next.u != 0.0 && cur.u.signum() != next.u.signum() {
            events.push(bisect_event(&cur, &next, false, params));
        }
        if cur.v != 0.0 && next.v != 0.0 && cur.v.signum() != next.v.signum() {
            events.push(bisect_event(&cur, &next, true, params));
        }
        if k % thin == 0 || k == n_steps {
            states.push(next);
        }
        cur = next;
    }
    Ok(March {
        states,
        events,
        samples,
        termination,
    })
}

/// Fixed-step RK4 runs at `h` and `h/2` from the shared Taylor startup.
/// The returned trajectory is the `h/2` run; the error estimate pairs the
/// two runs at 64 radii.
pub fn reference_solve(a: f64, params: &Params, h: f64, r_max: f64) -> Result<ReferenceRun> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::Domain(format!(
            "initial value must be finite and nonzero, got {a}"
        )));
    }
    if !(h > 0.0) || !(r_max > h) {
        return Err(Error::Domain(format!(
            "need 0 < h < r_max, got h={h}, r_max={r_max}"
        )));
    }
    let sample_radii: Vec<f64> = (1..=64).map(|j| r_max * j as f64 / 64.0).collect();
    let coarse = march(a, params, h, r_max, &sample_radii)?;
    let fine = march(a, params, 0.5 * h, r_max, &sample_radii)?;
    let mut richardson_error: f64 = 0.0;
    for (uc, uf) in coarse.samples.iter().zip(&fine.samples) {
        if uc.is_finite() && uf.is_finite() {
            richardson_error = richardson_error.max((uc - uf).abs());
        }
    }
    let energies = fine.states.iter().map(|s| energy(s, params)).collect();
    let traj = Trajectory {
        params: *params,
        a,
        states: fine.states,
        events: fine.events,
        energies,
        termination: fine.termination,
    };
    Ok(ReferenceRun {
        traj,
        richardson_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: f64, theta: f64) -> Params {
        Params::new(d, theta).unwrap()
    }

    #[test]
    fn equilibrium_is_machine_exact() {
        let p = params(3.0, 0.25);
        let run = reference_solve(1.0, &p, 1e-3, 5.0).unwrap();
        for s in &run.traj.states {
            assert_eq!(s.u, 1.0);
            assert_eq!(s.v, 0.0);
        }
        assert_eq!(run.richardson_error, 0.0);
    }

    #[test]
    fn paired_runs_agree_on_smooth_arc() {
        let p = params(3.0, 0.25);
        let run = reference_solve(0.5, &p, 1e-4, 10.0).unwrap();
        assert_eq!(run.traj.termination, Termination::ReachedRMax);
        assert!(
            run.richardson_error <= 1e-10,
            "richardson = {}",
            run.richardson_error
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(3.0, 0.25);
        assert!(reference_solve(0.0, &p, 1e-4, 1.0).is_err());
        assert!(reference_solve(1.0, &p, 0.0, 1.0).is_err());
        assert!(reference_solve(1.0, &p, 2.0, 1.0).is_err());
    }
}
