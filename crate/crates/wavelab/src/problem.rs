//! Problem specifications: nonlinearities, initial data, data norms, and the
//! scaling function `phi` with its inverse.
//!
//! A [`ProblemSpec`] fixes one initial-value problem
//! `u_tt - u_xx = F(u) / (1 + x^2)^{(1+a)/2}` with data `(eps*f, eps*g)`.
//! Validation is data, not failure: [`validate_spec`] reports every violated
//! hypothesis and leaves acting on them to the caller.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrate::adaptive_simpson;

/// Shared evaluator for user-supplied functions of one real variable.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of sample points for construction spot checks of custom
/// nonlinearities. The check is evidence, not proof.
const CUSTOM_SPOT_SAMPLES: usize = 1000;

/// Relative tolerance of the `c0` quadrature.
const C0_REL_TOL: f64 = 1e-10;

/// Whether a spec is solved toward blow-up or toward certified existence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Mode {
    Blowup,
    Existence,
}

/// The source nonlinearity `F` together with its growth data.
///
/// Built-ins carry `A = 1` in the bound `|F'(s)| <= p A |s|^{p-1}`; custom
/// evaluators declare their own Lipschitz constant, which is spot-checked at
/// construction rather than proven.
#[derive(Clone)]
pub enum Nonlinearity {
    /// `F(u) = |u|^p`.
    AbsPow { p: f64 },
    /// `F(u) = |u|^{p-1} u`.
    SignedPow { p: f64 },
    /// User-supplied `F` and `F'` with declared constant `A`.
    Custom {
        p: f64,
        lipschitz: f64,
        f: RealFn,
        df: RealFn,
    },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::AbsPow { p } => write!(fmt, "AbsPow {{ p: {p} }}"),
            Nonlinearity::SignedPow { p } => write!(fmt, "SignedPow {{ p: {p} }}"),
            Nonlinearity::Custom { p, lipschitz, .. } => {
                write!(fmt, "Custom {{ p: {p}, lipschitz: {lipschitz} }}")
            }
        }
    }
}

impl Nonlinearity {
    pub fn abs_pow(p: f64) -> Self {
        Nonlinearity::AbsPow { p }
    }

    pub fn signed_pow(p: f64) -> Self {
        Nonlinearity::SignedPow { p }
    }

    /// Builds a custom nonlinearity, spot-checking `F(0) = F'(0) = 0` and the
    /// declared bound `|F'(s)| <= p A |s|^{p-1}` on a thousand log-spaced
    /// points.
    pub fn custom(p: f64, lipschitz: f64, f: RealFn, df: RealFn) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidNonlinearity(format!(
                "p must exceed 1, got {p}"
            )));
        }
        if !(lipschitz >= 0.0) {
            return Err(Error::InvalidNonlinearity(format!(
                "Lipschitz constant must be nonnegative, got {lipschitz}"
            )));
        }
        if f(0.0).abs() > 1e-12 {
            return Err(Error::InvalidNonlinearity(format!(
                "F(0) = {} but must vanish",
                f(0.0)
            )));
        }
        if df(0.0).abs() > 1e-12 {
            return Err(Error::InvalidNonlinearity(format!(
                "F'(0) = {} but must vanish",
                df(0.0)
            )));
        }
        let half = CUSTOM_SPOT_SAMPLES / 2;
        for k in 0..CUSTOM_SPOT_SAMPLES {
            // |s| log-spaced over [1e-8, 1e4], both signs.
            let j = k % half;
            let mag = 1e-8 * (1e12_f64).powf(j as f64 / (half - 1) as f64);
            let s = if k < half { mag } else { -mag };
            let bound = p * lipschitz * mag.powf(p - 1.0);
            if df(s).abs() > bound * (1.0 + 1e-9) + 1e-30 {
                return Err(Error::InvalidNonlinearity(format!(
                    "|F'({s})| = {} exceeds declared bound {bound}",
                    df(s).abs()
                )));
            }
        }
        Ok(Nonlinearity::Custom {
            p,
            lipschitz,
            f,
            df,
        })
    }

    /// The identically zero source, useful for homogeneous runs.
    pub fn zero(p: f64) -> Self {
        Nonlinearity::Custom {
            p,
            lipschitz: 0.0,
            f: Arc::new(|_| 0.0),
            df: Arc::new(|_| 0.0),
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            Nonlinearity::AbsPow { p }
            | Nonlinearity::SignedPow { p }
            | Nonlinearity::Custom { p, .. } => *p,
        }
    }

    /// The constant `A` in `|F'(s)| <= p A |s|^{p-1}`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Nonlinearity::Custom { lipschitz, .. } => *lipschitz,
            _ => 1.0,
        }
    }

    /// Evaluates `F(s)`.
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            // The quadratic case dominates the marching hot loop.
            Nonlinearity::AbsPow { p } if *p == 2.0 => s * s,
            Nonlinearity::SignedPow { p } if *p == 2.0 => s.abs() * s,
            Nonlinearity::AbsPow { p } => s.abs().powf(*p),
            Nonlinearity::SignedPow { p } => s.abs().powf(*p - 1.0) * s,
            Nonlinearity::Custom { f, .. } => f(s),
        }
    }
}

/// Initial displacement and velocity together with their norms.
///
/// `support_radius = None` means the data is not known to be compactly
/// supported; `Some(r)` is a contract that both `f` and `g` vanish for
/// `|x| > r`.
#[derive(Clone)]
pub struct InitialData {
    f: RealFn,
    g: RealFn,
    pub support_radius: Option<f64>,
    /// `sup |f|`.
    pub sup_f: f64,
    /// `||g||_{L^1}`.
    pub l1_g: f64,
    /// Half the mass of `g` over `[-1, 1]`, cached at construction.
    pub c0: f64,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("InitialData")
            .field("support_radius", &self.support_radius)
            .field("sup_f", &self.sup_f)
            .field("l1_g", &self.l1_g)
            .field("c0", &self.c0)
            .finish()
    }
}

impl InitialData {
    /// Wraps evaluators and declared norms; computes `c0` by quadrature.
    pub fn new(
        f: RealFn,
        g: RealFn,
        support_radius: Option<f64>,
        sup_f: f64,
        l1_g: f64,
    ) -> Result<Self> {
        let c0 = half_mass_on_unit_interval(&g)?;
        Ok(InitialData {
            f,
            g,
            support_radius,
            sup_f,
            l1_g,
            c0,
        })
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    /// Interpolates tabulated `(y, f, g)` samples with natural cubic splines.
    ///
    /// Samples must be strictly increasing in `y`; outside the sampled range
    /// both functions are taken to vanish, and the support radius is
    /// `max |y|`. Norms are computed from the splines.
    pub fn from_samples(samples: &[(f64, f64, f64)]) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::InvalidDataTable(format!(
                "need at least 4 samples, got {}",
                samples.len()
            )));
        }
        let ys: Vec<f64> = samples.iter().map(|s| s.0).collect();
        for w in ys.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidDataTable(format!(
                    "sample abscissae must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let f_spline = CubicSpline::fit(&ys, &samples.iter().map(|s| s.1).collect::<Vec<_>>());
        let g_spline = CubicSpline::fit(&ys, &samples.iter().map(|s| s.2).collect::<Vec<_>>());
        let (lo, hi) = (ys[0], *ys.last().unwrap());
        let support = lo.abs().max(hi.abs());

        // sup |f| from a dense scan of the spline (a spot estimate, matching
        // the contract that norms are declared, not proven).
        let mut sup_f = 0.0f64;
        let scan = 8 * samples.len();
        for k in 0..=scan {
            let y = lo + (hi - lo) * k as f64 / scan as f64;
            sup_f = sup_f.max(f_spline.eval(y).abs());
        }
        let g_for_norm = g_spline.clone();
        let l1_g = adaptive_simpson(move |y| g_for_norm.eval(y).abs(), lo, hi, 1e-9, 1e-12)?;

        let f_arc: RealFn = Arc::new(move |x| f_spline.eval(x));
        let g_arc: RealFn = Arc::new(move |x| g_spline.eval(x));
        InitialData::new(f_arc, g_arc, Some(support), sup_f, l1_g)
    }
}

/// The canonical blow-up datum: `f = 0` and the C^1 bump
/// `g(y) = cos^2(pi y / 2)` on `[-1, 1]`, zero outside.
///
/// Its total mass is 1, so `c0 = 1/2` and `M = 1`.
pub fn builtin_blowup_data() -> InitialData {
    let g: RealFn = Arc::new(|y: f64| {
        if y.abs() <= 1.0 {
            let c = (std::f64::consts::FRAC_PI_2 * y).cos();
            c * c
        } else {
            0.0
        }
    });
    InitialData::new(Arc::new(|_| 0.0), g, Some(1.0), 0.0, 1.0)
        .expect("builtin bump is smooth; quadrature cannot fail")
}

/// Looks up an initial datum by registry name. Currently only `cos2-bump`.
pub fn data_by_name(name: &str) -> Option<InitialData> {
    match name {
        "cos2-bump" => Some(builtin_blowup_data()),
        _ => None,
    }
}

/// `(M, c0)` with `M = sup|f| + ||g||_1` from the declared norms and `c0`
/// recomputed by adaptive quadrature of `g` over `[-1, 1]`.
pub fn data_norms(data: &InitialData) -> Result<(f64, f64)> {
    let g = data.g.clone();
    let c0 = half_mass_on_unit_interval(&g)?;
    Ok((data.sup_f + data.l1_g, c0))
}

fn half_mass_on_unit_interval(g: &RealFn) -> Result<f64> {
    Ok(0.5 * adaptive_simpson(|y| g(y), -1.0, 1.0, C0_REL_TOL, 1e-14)?)
}

/// Full parameterization of one initial-value problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    /// Weight exponent; the source carries `(1 + x^2)^{-(1+a)/2}`.
    pub a: f64,
    /// Data amplitude.
    pub eps: f64,
    pub nonlinearity: Nonlinearity,
    pub data: InitialData,
    pub mode: Mode,
}

impl ProblemSpec {
    pub fn new(
        a: f64,
        eps: f64,
        nonlinearity: Nonlinearity,
        data: InitialData,
        mode: Mode,
    ) -> Self {
        ProblemSpec {
            a,
            eps,
            nonlinearity,
            data,
            mode,
        }
    }

    /// Blow-up configuration with the builtin bump and `F(u) = |u|^p`.
    pub fn blowup(a: f64, p: f64, eps: f64) -> Self {
        ProblemSpec::new(
            a,
            eps,
            Nonlinearity::abs_pow(p),
            builtin_blowup_data(),
            Mode::Blowup,
        )
    }

    pub fn p(&self) -> f64 {
        self.nonlinearity.p()
    }
}

/// Checks every structural hypothesis and returns the violations.
///
/// An empty list means the spec is admissible for its mode. Violations are
/// data, not failures: callers decide whether to proceed.
pub fn validate_spec(spec: &ProblemSpec) -> Vec<String> {
    let mut violations = Vec::new();
    if !(spec.a >= -1.0) {
        violations.push(format!("a must be at least -1, got {}", spec.a));
    }
    if !(spec.eps > 0.0) {
        violations.push(format!("eps must be positive, got {}", spec.eps));
    }
    if !(spec.p() > 1.0) {
        violations.push("p must exceed 1".to_string());
    }
    if !spec.data.sup_f.is_finite() || !(spec.data.sup_f >= 0.0) {
        violations.push("sup|f| must be finite and nonnegative".to_string());
    }
    if !spec.data.l1_g.is_finite() || !(spec.data.l1_g >= 0.0) {
        violations.push("||g||_1 must be finite and nonnegative".to_string());
    }
    if spec.mode == Mode::Blowup {
        let r = spec.data.support_radius.unwrap_or(8.0).max(1.0);
        let samples = 401;
        let mut f_nonzero = false;
        let mut g_negative = false;
        for k in 0..samples {
            let y = -r + 2.0 * r * k as f64 / (samples - 1) as f64;
            if spec.data.f(y).abs() > 1e-14 {
                f_nonzero = true;
            }
            if spec.data.g(y) < -1e-14 {
                g_negative = true;
            }
        }
        if f_nonzero || spec.data.sup_f > 0.0 {
            violations.push("f must vanish identically in blow-up mode".to_string());
        }
        if g_negative {
            violations.push("g must be nonnegative".to_string());
        }
        if !(spec.data.c0 > 0.0) {
            violations.push(format!("c0 must be positive, got {}", spec.data.c0));
        }
    }
    violations
}

/// The lifespan scale `phi(s) = s log(2 + s)` for `s >= 0`.
pub fn phi(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("phi requires s >= 0, got {s}")));
    }
    Ok(s * (2.0 + s).ln())
}

/// Inverse of [`phi`] on `[0, inf)`: the `s` with `phi(s) = y`, to
/// `1e-12 * max(1, y)` residual.
///
/// Bracketed by doubling, then 60 bisection steps, then a short Newton
/// polish; `phi` is strictly increasing so the bracket never lies.
pub fn phi_inverse(y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!(
            "phi_inverse requires y >= 0, got {y}"
        )));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0f64;
    let mut hi = y.max(1.0);
    while hi * (2.0 + hi).ln() < y {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid * (2.0 + mid).ln() < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..5 {
        let val = s * (2.0 + s).ln() - y;
        let slope = (2.0 + s).ln() + s / (2.0 + s);
        let next = s - val / slope;
        if next.is_finite() && next >= lo && next <= hi {
            s = next;
        }
    }
    Ok(s)
}

/// Natural cubic spline over strictly increasing knots; zero outside.
#[derive(Clone)]
struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let mut second = vec![0.0; n];
        let mut u = vec![0.0; n];
        // Tridiagonal sweep for natural boundary conditions.
        for i in 1..n - 1 {
            let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            let pval = sig * second[i - 1] + 2.0;
            second[i] = (sig - 1.0) / pval;
            let d = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                - (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
            u[i] = (6.0 * d / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / pval;
        }
        for i in (0..n - 1).rev() {
            second[i] = second[i] * second[i + 1] + u[i];
        }
        CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            second,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] > x {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let w = self.xs[hi] - self.xs[lo];
        let t = (self.xs[hi] - x) / w;
        let s = (x - self.xs[lo]) / w;
        t * self.ys[lo]
            + s * self.ys[hi]
            + ((t * t * t - t) * self.second[lo] + (s * s * s - s) * self.second[hi]) * w * w / 6.0
    }
}
