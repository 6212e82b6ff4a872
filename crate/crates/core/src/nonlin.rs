//! Closed-form quantities of the radial profile equation.
//!
//! The equation `u'' + (d-1)/r u' + u - |u|^{-2θ}u = 0` is driven by the
//! nonlinearity `f(s) = s·g(s)` with `g(s) = 1 - |s|^{-2θ}`. This module
//! evaluates `g`, `f`, `f'`, the potential `F(s) = ∫₀ˢ f`, the energy
//! `E = ½v² + F(u)`, and the derived thresholds:
//!
//! - `p = (1-θ)^{-1/(2θ)}`, the unique `s > 1` with `F(p) = 0`;
//! - `s_θ = (1-2θ)^{1/(2θ)}`, the location of the minimum of `f` on `(0, 1)`;
//! - `F(1) = -θ/(2(1-θ))`, the bottom of the potential wells at `s = ±1`.
//!
//! `f` and `F` use the algebraically simplified forms
//! `s - sign(s)|s|^{1-2θ}` and `s²/2 - |s|^{2-2θ}/(2(1-θ))` so that they
//! extend continuously by `0` at `s = 0` and avoid cancellation for tiny `s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problem constants plus derived thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Real dimension `d > 1` of the underlying radial Laplacian.
    pub dim: f64,
    /// Exponent `θ ∈ (0, 1/2)` of the singular factor `|s|^{-2θ}`.
    pub theta: f64,
    /// `p = (1-θ)^{-1/(2θ)}`: the unique level in `(1, ∞)` with zero potential.
    pub potential_zero: f64,
    /// `s_θ = (1-2θ)^{1/(2θ)}`: where `f'` vanishes on `(0, 1)`.
    pub force_min_loc: f64,
    /// `F(1) = -θ/(2(1-θ))`: the potential minimum, attained at `s = ±1`.
    pub potential_min: f64,
}

impl Params {
    /// Validates `(d, θ)` and computes the derived thresholds.
    pub fn new(dim: f64, theta: f64) -> Result<Self> {
        if !dim.is_finite() || dim <= 1.0 {
            return Err(Error::Domain(format!(
                "dimension must satisfy d > 1, got {dim}"
            )));
        }
        if !theta.is_finite() || theta <= 0.0 || theta >= 0.5 {
            return Err(Error::Domain(format!(
                "exponent must satisfy 0 < θ < 1/2, got {theta}"
            )));
        }
        Ok(Params {
            dim,
            theta,
            potential_zero: (-(1.0 - theta).ln() / (2.0 * theta)).exp(),
            force_min_loc: ((1.0 - 2.0 * theta).ln() / (2.0 * theta)).exp(),
            potential_min: -theta / (2.0 * (1.0 - theta)),
        })
    }
}

/// A phase point `(r, u, v = u')` along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Radius, `r ≥ 0`.
    pub r: f64,
    /// Profile value `u(r)`.
    pub u: f64,
    /// Radial derivative `v(r) = u'(r)`.
    pub v: f64,
}

impl State {
    pub fn new(r: f64, u: f64, v: f64) -> Self {
        State { r, u, v }
    }
}

/// `|s|^e` evaluated as `exp(e·ln|s|)`; full relative precision for tiny `|s|`.
#[inline]
fn abs_pow(s: f64, e: f64) -> f64 {
    s.abs().powf(e)
}

/// `g(s) = 1 - |s|^{-2θ}`, the multiplier turning the linear term into `f`.
///
/// Diverges to `-∞` at `s = 0`, which is rejected.
pub fn force_ratio(s: f64, params: &Params) -> Result<f64> {
    if s == 0.0 {
        return Err(Error::Domain("force ratio g(s) diverges at s = 0".into()));
    }
    Ok(1.0 - abs_pow(s, -2.0 * params.theta))
}

/// `f(s) = s - sign(s)|s|^{1-2θ}`, the restoring term of the equation.
///
/// Continuous at `0` (with `f(0) = 0`) and odd, but not Lipschitz at `0`.
#[inline]
pub fn force(s: f64, params: &Params) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    s - s.signum() * abs_pow(s, 1.0 - 2.0 * params.theta)
}

/// `f'(s) = 1 - (1-2θ)|s|^{-2θ}`; diverges to `-∞` at `s = 0`.
pub fn force_deriv(s: f64, params: &Params) -> Result<f64> {
    if s == 0.0 {
        return Err(Error::Domain(
            "force derivative f'(s) diverges at s = 0".into(),
        ));
    }
    Ok(1.0 - (1.0 - 2.0 * params.theta) * abs_pow(s, -2.0 * params.theta))
}

/// `F(s) = s²/2 - |s|^{2-2θ}/(2(1-θ)) = ∫₀ˢ f`; even, `F(0) = 0`.
#[inline]
pub fn potential(s: f64, params: &Params) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    s * s / 2.0 - abs_pow(s, 2.0 - 2.0 * params.theta) / (2.0 * (1.0 - params.theta))
}

/// Energy `E = ½v² + F(u)`; non-increasing along trajectories since
/// `E'(r) = -((d-1)/r)v²`.
#[inline]
pub fn energy(state: &State, params: &Params) -> f64 {
    0.5 * state.v * state.v + potential(state.u, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: f64, theta: f64) -> Params {
        Params::new(d, theta).unwrap()
    }

    /// Adaptive Simpson quadrature, used as an independent oracle for F = ∫f.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson_rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson_rule(f, a, m);
            let right = simpson_rule(f, m, b);
            if depth > 40 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth + 1)
                    + recurse(f, m, b, right, tol / 2.0, depth + 1)
            }
        }
        recurse(f, a, b, simpson_rule(f, a, b), tol, 0)
    }

    /// SplitMix64: deterministic pseudo-random stream for sampled invariants.
    struct SplitMix64(u64);
    impl SplitMix64 {
        fn next_f64(&mut self) -> f64 {
            self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z = z ^ (z >> 31);
            (z >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn params_thresholds_at_quarter() {
        let p = params(3.0, 0.25);
        // p solves F(p)=0: p^{2θ} = 1/(1-θ), so p = (3/4)^{-2} = 16/9.
        assert!((p.potential_zero - 16.0 / 9.0).abs() < 1e-14);
        // s_θ solves f'(s)=0: s^{2θ} = 1-2θ, so s_θ = (1/2)^2 = 1/4.
        assert!((p.force_min_loc - 0.25).abs() < 1e-15);
        // F(1) = -θ/(2(1-θ)) = -1/6.
        assert!((p.potential_min - (-1.0 / 6.0)).abs() < 1e-16);
    }

    #[test]
    fn params_rejects_invalid() {
        assert!(matches!(Params::new(1.0, 0.25), Err(Error::Domain(_))));
        assert!(matches!(Params::new(0.5, 0.25), Err(Error::Domain(_))));
        assert!(matches!(Params::new(3.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(Params::new(3.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(Params::new(f64::NAN, 0.25), Err(Error::Domain(_))));
        assert!(matches!(Params::new(3.0, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn threshold_identities_across_theta_grid() {
        for i in 1..10 {
            let theta = 0.05 * i as f64;
            let p = params(3.0, theta);
            assert!(
                potential(p.potential_zero, &p).abs() <= 1e-14,
                "theta={theta}"
            );
            assert!(
                force_deriv(p.force_min_loc, &p).unwrap().abs() <= 1e-12,
                "theta={theta}"
            );
            assert!(
                (potential(1.0, &p) - p.potential_min).abs() <= 1e-15,
                "theta={theta}"
            );
            assert!(p.potential_zero > 1.0);
            assert!(p.force_min_loc > 0.0 && p.force_min_loc < 1.0);
        }
    }

    #[test]
    fn force_ratio_values() {
        let p = params(3.0, 0.25);
        assert_eq!(force_ratio(1.0, &p).unwrap(), 0.0);
        assert_eq!(force_ratio(-1.0, &p).unwrap(), 0.0);
        // g(2) = 1 - 2^{-1/2}
        let expect = 1.0 - 2.0_f64.powf(-0.5);
        assert!((force_ratio(2.0, &p).unwrap() - expect).abs() < 1e-15);
        assert!(matches!(force_ratio(0.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn force_values() {
        let p = params(3.0, 0.25);
        assert_eq!(force(0.0, &p), 0.0);
        assert_eq!(force(1.0, &p), 0.0);
        assert_eq!(force(-1.0, &p), 0.0);
        // f(s_θ) = 1/4 - (1/4)^{1/2} = -1/4: the minimum of f on (0, 1).
        assert!((force(0.25, &p) - (-0.25)).abs() < 1e-16);
    }

    #[test]
    fn force_deriv_values() {
        let p = params(3.0, 0.25);
        assert!(force_deriv(p.force_min_loc, &p).unwrap().abs() < 1e-15);
        assert!((force_deriv(1.0, &p).unwrap() - 0.5).abs() < 1e-15);
        // f odd implies f' even.
        assert!((force_deriv(-1.0, &p).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(force_deriv(0.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn potential_values() {
        let p = params(3.0, 0.25);
        assert_eq!(potential(0.0, &p), 0.0);
        assert!(potential(p.potential_zero, &p).abs() <= 1e-14);
        assert!((potential(1.0, &p) - (-1.0 / 6.0)).abs() < 1e-16);
        // F(2) = 2 - 2^{3/2}/(3/2)
        let expect = 2.0 - 2.0_f64.powf(1.5) / 1.5;
        assert!((potential(2.0, &p) - expect).abs() < 1e-15);
    }

    #[test]
    fn energy_values() {
        let p = params(3.0, 0.25);
        assert_eq!(energy(&State::new(0.0, 0.0, 0.0), &p), 0.0);
        let e1 = energy(&State::new(1.0, 1.0, 0.0), &p);
        assert!((e1 - p.potential_min).abs() < 1e-16);
        for a in [0.3, 0.9, 1.7, 2.5] {
            let e = energy(&State::new(0.0, a, 0.0), &p);
            assert_eq!(e, potential(a, &p));
        }
    }

    #[test]
    fn potential_matches_quadrature_of_force() {
        // |F(s) - ∫₀ˢ f| ≤ 1e-8 on 200 pseudo-random points of [-3, 3].
        let p = params(3.0, 0.25);
        let mut rng = SplitMix64(0x5eed_0001);
        for _ in 0..200 {
            let s = -3.0 + 6.0 * rng.next_f64();
            let quad = simpson(&|x| force(x, &p), 0.0, s, 1e-12);
            assert!(
                (potential(s, &p) - quad).abs() <= 1e-8,
                "s={s}: F={} quad={quad}",
                potential(s, &p)
            );
        }
    }

    #[test]
    fn force_deriv_matches_finite_difference() {
        // Central difference of f vs f', relative error ≤ 1e-6, |s| ∈ [0.05, 3].
        let p = params(3.0, 0.25);
        let mut rng = SplitMix64(0x5eed_0002);
        for _ in 0..200 {
            let mag = 0.05 + 2.95 * rng.next_f64();
            let s = if rng.next_f64() < 0.5 { -mag } else { mag };
            let h = 1e-6 * mag.max(0.5);
            let fd = (force(s + h, &p) - force(s - h, &p)) / (2.0 * h);
            let exact = force_deriv(s, &p).unwrap();
            let denom = exact.abs().max(1.0);
            assert!(
                ((fd - exact) / denom).abs() <= 1e-6,
                "s={s}: fd={fd} exact={exact}"
            );
        }
    }

    #[test]
    fn sign_structure_matches_variation_tables() {
        // f < 0 on (0,1), f > 0 on (1,∞); F < 0 on (0,p), F > 0 on (p,∞);
        // F decreasing on (0,1), increasing on (1,∞). Sampled on a 1e-3 grid.
        for theta in [0.1, 0.25, 0.4] {
            let p = params(3.0, theta);
            let pz = p.potential_zero;
            let mut s = 1e-3;
            let mut prev_f_below_one = potential(0.0, &p);
            let mut prev_f_above_one = potential(1.0, &p);
            while s < 3.0 {
                if s < 1.0 - 1e-9 {
                    assert!(force(s, &p) < 0.0, "f(s) sign at s={s}");
                    let cur = potential(s, &p);
                    assert!(cur < prev_f_below_one, "F not decreasing at s={s}");
                    prev_f_below_one = cur;
                } else if s > 1.0 + 1e-9 {
                    assert!(force(s, &p) > 0.0, "f(s) sign at s={s}");
                    let cur = potential(s, &p);
                    assert!(cur > prev_f_above_one, "F not increasing at s={s}");
                    prev_f_above_one = cur;
                }
                if s < pz - 1e-9 {
                    assert!(potential(s, &p) < 0.0, "F(s) sign at s={s}");
                } else if s > pz + 1e-9 {
                    assert!(potential(s, &p) > 0.0, "F(s) sign at s={s}");
                }
                s += 1e-3;
            }
        }
    }
}
