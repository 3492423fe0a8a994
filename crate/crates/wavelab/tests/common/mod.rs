//! Independent oracles shared by the integration tests.
//!
//! Everything here is deliberately written against different machinery than
//! the library: composite Simpson with Richardson doubling instead of
//! adaptive bisection, closed-form antiderivatives instead of sampled
//! quadrature. The tests compare the two paths.

#![allow(dead_code)]

/// Composite Simpson over `[a, b]` with `n` panels (`n` even).
fn simpson_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `iint_{D(apex)} f(y, s) dy ds` over the backward cone, by iterated
/// composite Simpson with panel doubling until two refinements agree.
///
/// The inner integral splits at `y = 0` so kinks of even weights cannot
/// spoil the convergence order.
pub fn cone_integral<F>(f: F, apex_x: f64, apex_t: f64, tol: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let inner = |s: f64, n: usize| -> f64 {
        let half = apex_t - s;
        let (lo, hi) = (apex_x - half, apex_x + half);
        if hi <= lo {
            return 0.0;
        }
        if lo < 0.0 && hi > 0.0 {
            simpson_panels(&|y| f(y, s), lo, 0.0, n) + simpson_panels(&|y| f(y, s), 0.0, hi, n)
        } else {
            simpson_panels(&|y| f(y, s), lo, hi, n)
        }
    };
    let eval = |n: usize| simpson_panels(&|s| inner(s, n), 0.0, apex_t, n);
    let mut n = 8;
    let mut prev = eval(n);
    loop {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= tol * (1.0 + cur.abs()) || n >= 4096 {
            return cur;
        }
        prev = cur;
    }
}

/// Brute-force midpoint Riemann double sum over the cone with cell size `h`.
pub fn riemann_cone_integral<F>(f: F, apex_x: f64, apex_t: f64, h: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let ns = (apex_t / h).ceil() as usize;
    let mut sum = 0.0;
    for j in 0..ns {
        let s = (j as f64 + 0.5) * h;
        if s >= apex_t {
            break;
        }
        let half = apex_t - s;
        let ny = (2.0 * half / h).ceil() as usize;
        for i in 0..ny {
            let y = apex_x - half + (i as f64 + 0.5) * h;
            if (y - apex_x).abs() <= half {
                sum += f(y, s) * h * h;
            }
        }
    }
    sum
}

/// Exact antiderivative `G(y) = int_0^y g` of the builtin cosine-squared
/// bump: `y/2 + sin(pi y)/(2 pi)` inside the support, `+-1/2` outside.
pub fn bump_antiderivative(y: f64) -> f64 {
    if y >= 1.0 {
        0.5
    } else if y <= -1.0 {
        -0.5
    } else {
        0.5 * y + (std::f64::consts::PI * y).sin() / (2.0 * std::f64::consts::PI)
    }
}

/// Exact free wave of the builtin datum (`f = 0`):
/// `u0(x, t) = (G(x+t) - G(x-t)) / 2`.
pub fn bump_free_wave(x: f64, t: f64) -> f64 {
    0.5 * (bump_antiderivative(x + t) - bump_antiderivative(x - t))
}

/// Ordinary least squares `(slope, intercept)` for small fits in tests.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    ((slope), (sy - slope * sx) / n)
}
