//! Light-cone calculus: the free solution, the Duhamel operator over the
//! backward cone, the weighted cone mass `I(x,t)`, and the damping profile
//! `D(tau)` with its empirical bound constant.
//!
//! The Duhamel quadrature runs on characteristic diamonds aligned with the
//! marching lattice. The backward cone with apex `(x, n h)` tiles exactly
//! into diamonds centered at the parity-matching nodes of rows `1..n-1`
//! (measure `2 h^2` each) plus half-diamonds on row 0 (measure `h^2`); with
//! the factor 1/2 of the Duhamel operator the node weights become `h^2` and
//! `h^2/2`. Midpoint evaluation at the diamond centers is second order and
//! needs no interpolation.

use crate::error::{Error, Result};
use crate::integrate::adaptive_simpson;
use crate::picard::GridFunction;
use crate::problem::{phi, InitialData, ProblemSpec};

/// Relative tolerance for the weighted cone mass `I(x,t)`.
const MASS_REL_TOL: f64 = 1e-8;

/// The backward light cone `D(x,t)`: all `(y,s)` with `0 <= s <= t` and
/// `x - t + s <= y <= x + t - s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeTriangle {
    pub apex_x: f64,
    pub apex_t: f64,
}

impl ConeTriangle {
    pub fn new(apex_x: f64, apex_t: f64) -> Result<Self> {
        if !(apex_t >= 0.0) {
            return Err(Error::Domain(format!(
                "cone apex time must be nonnegative, got {apex_t}"
            )));
        }
        Ok(ConeTriangle { apex_x, apex_t })
    }

    /// Area of the triangle in the `(y, s)` plane.
    pub fn area(&self) -> f64 {
        self.apex_t * self.apex_t
    }

    pub fn contains(&self, y: f64, s: f64) -> bool {
        s >= 0.0 && s <= self.apex_t && (y - self.apex_x).abs() <= self.apex_t - s
    }
}

/// The damping profile `D(tau)` governing how far the contraction horizon
/// reaches: `(1+tau)^{1-a}` for `-1 <= a < 0`, `phi(tau)` at `a = 0`,
/// `1 + tau` for `a > 0`.
#[derive(Debug, Clone, Copy)]
pub struct DampingProfile {
    pub a: f64,
}

impl DampingProfile {
    pub fn value(&self, tau: f64) -> Result<f64> {
        damping_profile(self.a, tau)
    }
}

/// Evaluates the damping profile; `tau < 0` or `a < -1` is a domain error.
pub fn damping_profile(a: f64, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!(
            "damping profile requires tau >= 0, got {tau}"
        )));
    }
    if !(a >= -1.0) {
        return Err(Error::Domain(format!(
            "damping profile requires a >= -1, got {a}"
        )));
    }
    if a < 0.0 {
        Ok((1.0 + tau).powf(1.0 - a))
    } else if a == 0.0 {
        phi(tau)
    } else {
        Ok(1.0 + tau)
    }
}

/// The free-wave value `u0(x,t) = (f(x+t) + f(x-t))/2 + (1/2) int_{x-t}^{x+t} g`.
///
/// No amplitude factor is applied. The `g`-integral is adaptive quadrature,
/// clipped to the declared support when there is one.
pub fn free_solution(data: &InitialData, x: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "free solution requires t >= 0, got {t}"
        )));
    }
    let f_part = 0.5 * (data.f(x + t) + data.f(x - t));
    let (mut lo, mut hi) = (x - t, x + t);
    if let Some(r) = data.support_radius {
        lo = lo.max(-r);
        hi = hi.min(r);
    }
    let g_part = if lo < hi {
        0.5 * adaptive_simpson(|y| data.g(y), lo, hi, 1e-12, 1e-15)?
    } else {
        0.0
    };
    Ok(f_part + g_part)
}

/// The weight applied to the source at position `y`: `(1 + y^2)^{-(1+a)/2}`.
pub fn weight_factor(a: f64, y: f64) -> f64 {
    (1.0 + y * y).powf(-(1.0 + a) / 2.0)
}

/// The full source `H(x, u) = F(u) / (1 + x^2)^{(1+a)/2}`.
pub fn weight_source(spec: &ProblemSpec, x: f64, u: f64) -> f64 {
    spec.nonlinearity.eval(u) * weight_factor(spec.a, x)
}

/// Applies the Duhamel operator to a lattice function:
/// `(1/2) iint_{D} V(y,s) (1+y^2)^{-(1+a)/2} dy ds`
/// by midpoint evaluation on the characteristic diamonds tiling the cone.
///
/// `V` must cover the cone and `h` must match `V`'s spacing and divide the
/// apex time. Error `O(h^2)` for twice-differentiable integrands; exact for
/// constants under the unit weight.
pub fn duhamel_apply(
    spec: &ProblemSpec,
    v: &GridFunction,
    cone: &ConeTriangle,
    h: f64,
) -> Result<f64> {
    if (v.h() - h).abs() > 1e-12 * h.abs() {
        return Err(Error::GeometryMismatch(format!(
            "requested spacing {h} but lattice has {}",
            v.h()
        )));
    }
    let n_real = cone.apex_t / h;
    let n = n_real.round();
    if (n_real - n).abs() > 1e-9 || n < 0.0 {
        return Err(Error::Domain(format!(
            "apex time {} is not a lattice multiple of h = {h}",
            cone.apex_t
        )));
    }
    let n = n as i64;
    let ic_real = (cone.apex_x - v.x_min()) / h;
    let ic = ic_real.round();
    let off_lattice = (ic_real - ic).abs() > 1e-9;
    let ic = ic as i64;
    let nx = v.nx() as i64;
    let covered = !off_lattice && ic - n >= 0 && ic + n < nx && (v.nt() as i64) > n;
    if !covered {
        return Err(Error::ConeNotCovered {
            apex_x: cone.apex_x,
            apex_t: cone.apex_t,
        });
    }

    let h2 = h * h;
    let mut sum = 0.0;
    for k in 0..n {
        let reach = n - 1 - k;
        let coeff = if k == 0 { 0.5 * h2 } else { h2 };
        let mut i = ic - reach;
        while i <= ic + reach {
            let y = v.x_of(i as usize);
            sum += coeff * v.value(k as usize, i as usize) * weight_factor(spec.a, y);
            i += 2;
        }
    }
    Ok(sum)
}

/// The weighted cone mass `I(x,t) = iint_{D(x,t)} <y>^{-(1+a)} dy ds` with
/// `<y> = 1 + |y|`.
///
/// The `y`-integral has a closed-form antiderivative in each sign branch
/// (power for `a != 0`, log at `a = 0`); only the `s`-integral is adaptive.
pub fn weight_mass(a: f64, x: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "weighted mass requires t >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    // Even in x, so work with |x|.
    let x = x.abs();
    let prim = move |r: f64| -> f64 {
        debug_assert!(r >= 0.0);
        if a == 0.0 {
            (1.0 + r).ln()
        } else {
            (1.0 - (1.0 + r).powf(-a)) / a
        }
    };
    let psi = move |y: f64| -> f64 {
        if y >= 0.0 {
            prim(y)
        } else {
            -prim(-y)
        }
    };
    let strip = move |s: f64| psi(x + t - s) - psi(x - t + s);
    adaptive_simpson(strip, 0.0, t, MASS_REL_TOL, 1e-13 * t * t)
}

/// Empirical constant `C_a` with `I(x,t) <= C_a * D(T)` for `0 <= t <= T`:
/// the supremum of `I(x,t)/D(T)` over a sampled grid.
///
/// The constant is measured, not proven; audits apply a safety factor on
/// fresh samples. Because `sup_x I(x,t)/D(t)` is nondecreasing in `t`, a
/// constant measured at `T` remains valid for every horizon below `T`.
pub fn mass_bound_constant(a: f64, sample_t: f64) -> Result<f64> {
    mass_bound_constant_with(a, sample_t, 48, 64)
}

/// [`mass_bound_constant`] with explicit sampling resolution.
pub fn mass_bound_constant_with(a: f64, sample_t: f64, nt: usize, nx: usize) -> Result<f64> {
    if !(sample_t > 0.0) {
        return Err(Error::Domain(format!(
            "sampling horizon must be positive, got {sample_t}"
        )));
    }
    let d = damping_profile(a, sample_t)?;
    if d <= 0.0 {
        return Err(Error::Domain(format!(
            "damping profile vanishes at T = {sample_t}; constant undefined"
        )));
    }
    let mut sup = 0.0f64;
    for j in 1..=nt {
        let t = sample_t * j as f64 / nt as f64;
        for l in 0..=nx {
            let x = 2.0 * sample_t * l as f64 / nx as f64;
            let ratio = weight_mass(a, x, t)? / d;
            if ratio > sup {
                sup = ratio;
            }
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::picard::GridFunction;
    use crate::problem::{builtin_blowup_data, ProblemSpec};
    use approx::assert_relative_eq;

    #[test]
    fn cone_geometry() {
        let cone = ConeTriangle::new(0.5, 2.0).unwrap();
        assert_eq!(cone.area(), 4.0);
        assert!(cone.contains(0.5, 0.0));
        assert!(cone.contains(2.4, 0.1));
        assert!(!cone.contains(2.6, 0.1));
        assert!(ConeTriangle::new(0.0, -1.0).is_err());
    }

    #[test]
    fn free_solution_fixed_values() {
        let data = builtin_blowup_data();
        // Cone [-2, 2] swallows the whole unit-mass bump.
        assert_relative_eq!(
            free_solution(&data, 0.0, 2.0).unwrap(),
            0.5,
            max_relative = 1e-10
        );
        // Zero-width integral at t = 0 leaves only f.
        assert_eq!(free_solution(&data, 0.7, 0.0).unwrap(), 0.0);
        // Cone [9, 11] misses the support entirely.
        assert_eq!(free_solution(&data, 10.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn weight_source_fixed_values() {
        let spec = ProblemSpec::blowup(1.0, 2.0, 1.0);
        assert_eq!(weight_source(&spec, 0.0, 3.0), 9.0);
        assert_relative_eq!(weight_source(&spec, 1.0, 1.0), 0.5, max_relative = 1e-14);
        let mut signed = ProblemSpec::blowup(1.0, 2.0, 1.0);
        signed.nonlinearity = crate::problem::Nonlinearity::signed_pow(2.0);
        assert_eq!(weight_source(&signed, 0.0, -3.0), -9.0);
    }

    #[test]
    fn duhamel_zero_and_unit() {
        let h = 0.05;
        let spec = ProblemSpec::blowup(-1.0, 2.0, 1.0);
        let zero = GridFunction::zeros(h, -3.0, 121, 41);
        let cone = ConeTriangle::new(0.0, 2.0).unwrap();
        assert_eq!(duhamel_apply(&spec, &zero, &cone, h).unwrap(), 0.0);

        // Unit V with unit weight (a = -1): (1/2) * area, and the parity
        // tiling makes the midpoint sum exact.
        let one = GridFunction::from_fn(h, -3.0, 121, 41, |_, _| 1.0);
        let val = duhamel_apply(&spec, &one, &cone, h).unwrap();
        assert_relative_eq!(val, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn duhamel_coverage_error() {
        let h = 0.1;
        let spec = ProblemSpec::blowup(0.0, 2.0, 1.0);
        let v = GridFunction::zeros(h, -1.0, 21, 11);
        let wide = ConeTriangle::new(0.0, 1.5).unwrap();
        assert!(matches!(
            duhamel_apply(&spec, &v, &wide, h),
            Err(Error::ConeNotCovered { .. })
        ));
    }

    #[test]
    fn damping_profile_fixed_values() {
        assert_eq!(damping_profile(-1.0, 3.0).unwrap(), 16.0);
        assert_relative_eq!(
            damping_profile(0.0, 2.0).unwrap(),
            2.0 * 4.0f64.ln(),
            max_relative = 1e-14
        );
        assert_eq!(damping_profile(2.0, 9.0).unwrap(), 10.0);
        assert!(damping_profile(1.0, -0.1).is_err());
    }

    #[test]
    fn unweighted_mass_is_cone_area() {
        for &(x, t) in &[(0.0, 1.0), (3.0, 2.0), (-5.0, 4.0)] {
            assert_relative_eq!(weight_mass(-1.0, x, t).unwrap(), t * t, max_relative = 1e-8);
        }
    }

    #[test]
    fn mass_is_even_in_x() {
        for &a in &[-1.0, -0.5, 0.0, 0.5, 2.0] {
            for &x in &[0.3, 1.7, 6.0] {
                let plus = weight_mass(a, x, 2.5).unwrap();
                let minus = weight_mass(a, -x, 2.5).unwrap();
                assert_relative_eq!(plus, minus, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn mass_bound_matches_closed_form_at_unit_weight() {
        // a = -1: I = t^2 and D(4) = 25, so the grid supremum is 16/25.
        let c = mass_bound_constant(-1.0, 4.0).unwrap();
        assert_relative_eq!(c, 0.64, max_relative = 1e-7);
    }

    #[test]
    fn mass_bound_saturates_for_positive_a() {
        // For a = 2 the exact ratio I(0,T)/D(T) = (T - T/(1+T))/(1+T)
        // climbs toward 1 and never passes it.
        let c10 = mass_bound_constant(2.0, 10.0).unwrap();
        let c100 = mass_bound_constant(2.0, 100.0).unwrap();
        let c1000 = mass_bound_constant(2.0, 1000.0).unwrap();
        assert!(c10 <= 1.0 && c100 <= 1.0 && c1000 <= 1.0);
        assert!(c100 >= c10);
        assert!(c1000 / c100 <= 1.05, "saturation ratio {}", c1000 / c100);
    }
}
