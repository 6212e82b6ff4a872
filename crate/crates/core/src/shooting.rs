//! Root-finding over the initial value `a`: Dirichlet solutions on a ball of
//! radius `R` with a prescribed interior zero count, and search for
//! compact-support (dead-core) candidates.
//!
//! The boundary map `a ↦ u(R)` is continuous where an existing zero of the
//! trajectory crosses `R` — those are the genuine Dirichlet roots — but it
//! jumps at the birth of a new zero (the minimum of `|u|` touching zero),
//! so every bracketed sign change is bisected and then verified by its
//! boundary residual; plateau-boundary artifacts fail the residual test and
//! are discarded rather than reported as roots.

use serde::Serialize;

use crate::analysis::lambda1_threshold;
use crate::error::{Error, Result};
use crate::integrator::{integrate, EventKind, IntegratorConfig, Termination, Trajectory};
use crate::nonlin::Params;

/// Boundary data of one shot to radius `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotOutcome {
    pub a: f64,
    pub u_at_r: f64,
    pub v_at_r: f64,
    /// Zeros of `u` strictly inside `(0, R)`; a zero sitting on the boundary
    /// (within `1e-6·(1+R)`) is not interior.
    pub interior_zeros: usize,
    /// First zero radius, if any.
    pub rho_a: Option<f64>,
    pub energy_at_r: f64,
    /// Integrator termination; anything except `ReachedRMax` flags the shot.
    pub termination: Termination,
}

const BOUNDARY_MARGIN: f64 = 1e-6;
/// Scan resolution of the Dirichlet pre-scan.
const DIRICHLET_GRID: usize = 256;
/// Scan resolution of the dead-core pre-scan.
const DEAD_CORE_GRID: usize = 128;
/// Residual bound separating genuine Dirichlet roots from plateau jumps.
const RESIDUAL_BOUND: f64 = 1e-8;

fn interior_zero_count(traj: &Trajectory, radius: f64) -> usize {
    let cut = radius - BOUNDARY_MARGIN * (1.0 + radius);
    traj.events_of(EventKind::ZeroOfU)
        .filter(|ev| ev.r < cut)
        .count()
}

/// Integrates to exactly `r = R` and reports the boundary data.
pub fn shoot(a: f64, radius: f64, params: &Params, cfg: &IntegratorConfig) -> Result<ShotOutcome> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let traj = integrate(a, params, &cfg.with_r_max(radius))?;
    let last = traj.last_state();
    Ok(ShotOutcome {
        a,
        u_at_r: last.u,
        v_at_r: last.v,
        interior_zeros: interior_zero_count(&traj, radius),
        rho_a: traj.first_zero(),
        energy_at_r: traj.final_energy(),
        termination: traj.termination,
    })
}

/// Dirichlet solutions with exactly `k` interior zeros: scans the bracket on
/// a uniform grid for sign changes of `a ↦ u(R)` adjacent to the
/// `interior_zeros = k` plateau, bisects each to `|Δa| ≤ tol_a`, and keeps a
/// root only when its boundary residual and zero count check out.
///
/// Returns the ascending roots (possibly empty when every sign change turned
/// out to be a plateau-boundary jump). `Bracket` error when the grid shows no
/// admissible sign change at all.
pub fn solve_dirichlet(
    radius: f64,
    k: usize,
    bracket: (f64, f64),
    params: &Params,
    cfg: &IntegratorConfig,
    tol_a: f64,
) -> Result<Vec<f64>> {
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("invalid bracket ({lo}, {hi})")));
    }
    if !(tol_a > 0.0) {
        return Err(Error::Domain(format!(
            "tol_a must be positive, got {tol_a}"
        )));
    }
    let grid_a: Vec<f64> = (0..DIRICHLET_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (DIRICHLET_GRID - 1) as f64)
        .collect();
    let mut shots = Vec::with_capacity(DIRICHLET_GRID);
    for &a in &grid_a {
        if a == 0.0 {
            shots.push(None);
            continue;
        }
        shots.push(Some(shoot(a, radius, params, cfg)?));
    }

    let mut roots = Vec::new();
    let mut saw_candidate = false;
    for i in 0..DIRICHLET_GRID - 1 {
        let (Some(s0), Some(s1)) = (&shots[i], &shots[i + 1]) else {
            continue;
        };
        if s0.u_at_r == 0.0 || s1.u_at_r == 0.0 {
            continue;
        }
        if s0.u_at_r.signum() == s1.u_at_r.signum() {
            continue;
        }
        if s0.interior_zeros.min(s1.interior_zeros) != k {
            continue;
        }
        saw_candidate = true;
        // bisection on the sign of u(R)
        let mut a_lo = s0.a;
        let mut a_hi = s1.a;
        let sign_lo = s0.u_at_r.signum();
        for _ in 0..200 {
            if a_hi - a_lo <= tol_a {
                break;
            }
            let mid = 0.5 * (a_lo + a_hi);
            let s_mid = shoot(mid, radius, params, cfg)?;
            if s_mid.u_at_r == 0.0 {
                a_lo = mid;
                a_hi = mid;
                break;
            }
            if s_mid.u_at_r.signum() == sign_lo {
                a_lo = mid;
            } else {
                a_hi = mid;
            }
        }
        let root = 0.5 * (a_lo + a_hi);
        let verdict = shoot(root, radius, params, cfg)?;
        if verdict.u_at_r.abs() <= RESIDUAL_BOUND
            && verdict.interior_zeros == k
            && roots
                .last()
                .map(|&r: &f64| (root - r).abs() > 2.0 * tol_a)
                .unwrap_or(true)
        {
            roots.push(root);
        }
    }
    if !saw_candidate {
        return Err(Error::Bracket(format!(
            "no sign change of u(R) adjacent to the interior_zeros = {k} plateau on ({lo}, {hi})"
        )));
    }
    Ok(roots)
}

/// Golden-section minimization of `a ↦ |v(ρ_a)|` over the bracket, seeded by
/// a grid scan; initial values without a first zero score `+∞`.
///
/// When the minimum is below `tol` the candidate `(a*, ρ_{a*})` is returned
/// after checking the eigenvalue bound `ρ_{a*} > √λ₁(B(0,1))` (for
/// `d ∈ {2, 3}` where the threshold is available); otherwise `None`.
/// `Bracket` error when no point of the bracket has a zero at all.
pub fn find_dead_core(
    bracket: (f64, f64),
    params: &Params,
    cfg: &IntegratorConfig,
    tol: f64,
) -> Result<Option<(f64, f64)>> {
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("invalid bracket ({lo}, {hi})")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    let objective = |a: f64| -> Result<(f64, Option<f64>)> {
        if a == 0.0 {
            return Ok((f64::INFINITY, None));
        }
        let traj = integrate(a, params, cfg)?;
        let first = traj.events_of(EventKind::ZeroOfU).next().copied();
        Ok(match first {
            Some(ev) => (ev.state.v.abs(), Some(ev.r)),
            None => (f64::INFINITY, None),
        })
    };

    let mut best_idx = None;
    let mut best_val = f64::INFINITY;
    let grid_a: Vec<f64> = (0..DEAD_CORE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (DEAD_CORE_GRID - 1) as f64)
        .collect();
    for (i, &a) in grid_a.iter().enumerate() {
        let (val, _) = objective(a)?;
        if val < best_val {
            best_val = val;
            best_idx = Some(i);
        }
    }
    let Some(center) = best_idx else {
        return Err(Error::Bracket(format!(
            "no trajectory on ({lo}, {hi}) reaches u = 0; the first-zero objective is undefined everywhere"
        )));
    };
    let mut gold_lo = grid_a[center.saturating_sub(1)];
    let mut gold_hi = grid_a[(center + 1).min(DEAD_CORE_GRID - 1)];

    // golden-section on the grid-refined bracket
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = gold_hi - INV_PHI * (gold_hi - gold_lo);
    let mut x2 = gold_lo + INV_PHI * (gold_hi - gold_lo);
    let mut f1 = objective(x1)?.0;
    let mut f2 = objective(x2)?.0;
    let mut best = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..90 {
        if gold_hi - gold_lo <= 1e-10 * (1.0 + gold_hi.abs()) {
            break;
        }
        if f1 < f2 {
            gold_hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = gold_hi - INV_PHI * (gold_hi - gold_lo);
            f1 = objective(x1)?.0;
        } else {
            gold_lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = gold_lo + INV_PHI * (gold_hi - gold_lo);
            f2 = objective(x2)?.0;
        }
        let cand = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        if cand.1 < best.1 {
            best = cand;
        }
    }

    let (a_star, v_min) = best;
    if v_min > tol {
        return Ok(None);
    }
    let (_, rho) = objective(a_star)?;
    let rho = rho.expect("minimizer below tol must have a zero");
    if let Ok(threshold) = lambda1_threshold(params.dim) {
        if rho <= threshold - 1e-6 {
            return Err(Error::Precondition(format!(
                "dead-core candidate at a = {a_star} has first zero {rho} at or below the eigenvalue radius {threshold}"
            )));
        }
    }
    Ok(Some((a_star, rho)))
}
