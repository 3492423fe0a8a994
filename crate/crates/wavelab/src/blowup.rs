//! The blow-up ledger: iteration constants and sequences, pointwise
//! lower-bound envelopes in the three weight regimes, the divergence
//! functionals `K_i` with their thresholds `B_i`, and the upper lifespan
//! predictor.
//!
//! All sequence arithmetic runs in log space: the constants `C_{a,j}`
//! collapse or explode double-exponentially in `j`, and only their logs stay
//! representable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{phi, phi_inverse, ProblemSpec};

/// Divergence is declared once an envelope exceeds this magnitude (compared
/// in log space).
const DIVERGENCE_THRESHOLD_LOG: f64 = 100.0 * std::f64::consts::LN_10;

/// Hard cap on the divergence index scan.
const DIVERGENCE_INDEX_CAP: u64 = 10_000;

/// Regime floors of the divergence functionals: the proofs work on
/// `t >= 4` for `a <= 0` and `t >= 20` for `a > 0`.
pub fn functional_floor(a: f64) -> f64 {
    if a > 0.0 {
        20.0
    } else {
        4.0
    }
}

/// The constants seeding and driving the iteration sequence.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationConstants {
    /// Gain factor `E_{p,a}`.
    pub e_pa: f64,
    /// Loss base `F_{p,a}`: `p^2` for `-1 <= a <= 0`, `2p` for `a > 0`.
    pub f_pa: f64,
    /// Seed factor `k_a`.
    pub k_a: f64,
    pub c0: f64,
    /// `log C_{a,1} = p log(c0 eps) + log k_a`.
    pub log_c1: f64,
}

/// Piecewise case tables for `E`, `F`, `k` and the seed `C_{a,1}`.
pub fn iteration_constants(p: f64, a: f64, c0: f64, eps: f64) -> IterationConstants {
    debug_assert!(p > 1.0 && a >= -1.0 && c0 > 0.0 && eps > 0.0);
    let (e_pa, k_a) = if a < 0.0 {
        (
            (p - 1.0) * (p - 1.0) / (2f64.powf(a + 5.0) * p * p),
            2f64.powf(-(a + 4.0)),
        )
    } else if a == 0.0 {
        ((p - 1.0) * (p - 1.0) / (2.0 * p * p), 0.5)
    } else {
        ((p - 1.0) / (2f64.powf(a + 2.0) * p), 2f64.powf(-(a + 2.0)))
    };
    let f_pa = if a <= 0.0 { p * p } else { 2.0 * p };
    IterationConstants {
        e_pa,
        f_pa,
        k_a,
        c0,
        log_c1: p * (c0 * eps).ln() + k_a.ln(),
    }
}

/// One rung of the iteration ledger.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationState {
    pub j: u32,
    /// Envelope exponent `a_j = (p^j - 1)/(p - 1)`.
    pub a_j: f64,
    /// Partial sum `S_j = sum_{i<j} i p^{-i}`.
    pub s_j: f64,
    pub log_c_j: f64,
    /// Offset `l_j = 5 - 2^{2-j}` of the shrinking regions.
    pub l_j: f64,
}

impl IterationState {
    /// The ledger at `j = 1`.
    pub fn first(consts: &IterationConstants) -> Self {
        IterationState {
            j: 1,
            a_j: 1.0,
            s_j: 0.0,
            log_c_j: consts.log_c1,
            l_j: 3.0,
        }
    }
}

/// Advances the ledger one rung:
/// `log C_{j+1} = p log C_j + log E - j log F`, `a_{j+1} = p a_j + 1`,
/// `S_{j+1} = S_j + j p^{-j}`, `l_{j+1} = l_j + 2^{1-j}`.
pub fn seq_next(state: &IterationState, consts: &IterationConstants, p: f64) -> IterationState {
    let j = state.j;
    IterationState {
        j: j + 1,
        a_j: p * state.a_j + 1.0,
        s_j: state.s_j + j as f64 / p.powi(j as i32),
        log_c_j: p * state.log_c_j + consts.e_pa.ln() - j as f64 * consts.f_pa.ln(),
        l_j: state.l_j + 2f64.powi(1 - j as i32),
    }
}

/// Region offset `l_j = 5 - 2^{2-j}`; `l_1 = 3` and `l_j < 5` always.
pub fn l_j(j: u32) -> f64 {
    5.0 - 2f64.powi(2 - j as i32)
}

/// Envelope exponent `a_j = (p^j - 1)/(p - 1)`.
pub fn a_j(p: f64, j: u32) -> f64 {
    (p.powi(j as i32) - 1.0) / (p - 1.0)
}

/// Partial sum `S_j = sum_{i=1}^{j-1} i p^{-i}`, with limit `p/(p-1)^2`.
pub fn s_j(p: f64, j: u32) -> f64 {
    (1..j).map(|i| i as f64 / p.powi(i as i32)).sum()
}

/// Limit of the partial sums: `S = p/(p-1)^2`.
pub fn s_infinity(p: f64) -> f64 {
    p / ((p - 1.0) * (p - 1.0))
}

/// Closed form of the ledger constant for `j >= 2`:
/// `log C_j = p^{j-1}(log C_1 - S_j log F + log E/(p-1)) - log E/(p-1)`.
pub fn seq_closed_form(j: u32, consts: &IterationConstants, p: f64) -> f64 {
    debug_assert!(j >= 2);
    let le = consts.e_pa.ln() / (p - 1.0);
    let lam = consts.log_c1 - s_j(p, j) * consts.f_pa.ln() + le;
    p.powi(j as i32 - 1) * lam - le
}

fn log_c(j: u32, consts: &IterationConstants, p: f64) -> f64 {
    if j == 1 {
        consts.log_c1
    } else {
        seq_closed_form(j, consts, p)
    }
}

/// Membership predicates of the blow-up regions on the quarter-plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `x >= 0`, `t - x >= 1`.
    Gamma1,
    /// `x >= t - x >= 1`.
    Gamma2,
    /// `x >= 0`, `t - x >= l_j`.
    Sigma(u32),
}

impl Region {
    pub fn contains(&self, x: f64, t: f64) -> bool {
        if x < 0.0 {
            return false;
        }
        match self {
            Region::Gamma1 => t - x >= 1.0,
            Region::Gamma2 => t - x >= 1.0 && x >= t - x,
            Region::Sigma(j) => t - x >= l_j(*j),
        }
    }

    /// The region an envelope of weight exponent `a` lives on.
    pub fn for_regime(a: f64, j: u32) -> Region {
        if a < 0.0 {
            Region::Gamma2
        } else if a == 0.0 {
            Region::Gamma1
        } else {
            Region::Sigma(j)
        }
    }
}

/// Log of the regime envelope at `(x, t)`, or `None` outside its region.
pub fn log_envelope(
    p: f64,
    a: f64,
    consts: &IterationConstants,
    j: u32,
    x: f64,
    t: f64,
) -> Option<f64> {
    let region = Region::for_regime(a, j);
    if !region.contains(x, t) {
        return None;
    }
    let aj = a_j(p, j);
    let lc = log_c(j, consts, p);
    let log_base = if a < 0.0 {
        2.0 * (t - x - 1.0).ln() - (1.0 + a) * (t - x).ln()
    } else if a == 0.0 {
        (t - x - 1.0).ln() + (1.0 + x).ln().ln()
    } else {
        (t - x - l_j(j)).ln()
    };
    // a_j * (-inf) is -inf as wanted; guard only the 0 * inf corner.
    if log_base == f64::NEG_INFINITY {
        return Some(f64::NEG_INFINITY);
    }
    Some(lc + aj * log_base)
}

/// The regime lower bound `C_{a,j} * base(x,t)^{a_j}` when `(x, t)` lies in
/// the regime region, `None` otherwise. Underflow to zero is permitted.
pub fn envelope(
    spec: &ProblemSpec,
    consts: &IterationConstants,
    j: u32,
    x: f64,
    t: f64,
) -> Option<f64> {
    log_envelope(spec.p(), spec.a, consts, j, x, t).map(f64::exp)
}

/// The divergence functional `K_i(t)` of the regime of `a`; positive values
/// certify that the envelope sequence at `(t/2, t)` diverges.
pub fn blowup_functional(p: f64, a: f64, c0: f64, eps: f64, t: f64) -> Result<f64> {
    let floor = functional_floor(a);
    if !(t >= floor) {
        return Err(Error::Domain(format!(
            "divergence functional needs t >= {floor}, got {t}"
        )));
    }
    let s = s_infinity(p);
    let consts = iteration_constants(p, a, c0, eps);
    let le = consts.e_pa.ln() / (p - 1.0);
    let ln2 = std::f64::consts::LN_2;
    let base = p * (eps * c0).ln() + le;
    let value = if a < 0.0 {
        base + (-(a + 4.0) + p * (a - 3.0) / (p - 1.0)) * ln2 - 2.0 * s * p.ln()
            + p * (1.0 - a) / (p - 1.0) * t.ln()
    } else if a == 0.0 {
        base + (-1.0 - 3.0 * p / (p - 1.0)) * ln2 - 2.0 * s * p.ln() + p / (p - 1.0) * phi(t)?.ln()
    } else {
        base + (-(a + 2.0) - 2.0 * p / (p - 1.0)) * ln2 - s * (2.0 * p).ln()
            + p / (p - 1.0) * t.ln()
    };
    Ok(value)
}

/// The lifespan threshold constant `B` of the regime and the largest
/// amplitude `eps_cap` for which the predicted bound still clears the
/// regime floor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdConstants {
    pub b: f64,
    pub eps_cap: f64,
}

/// Solves `K_i = 0` in closed form. Uses the limit `S = p/(p-1)^2`.
pub fn threshold_constants(p: f64, a: f64, c0: f64) -> ThresholdConstants {
    let s = s_infinity(p);
    let consts = iteration_constants(p, a, c0, 1.0);
    let le = consts.e_pa.ln() / (p - 1.0);
    let ln2 = std::f64::consts::LN_2;
    let (log_inner, outer_exp) = if a < 0.0 {
        (
            p * c0.ln() + (-(a + 4.0) + p * (a - 3.0) / (p - 1.0)) * ln2 - 2.0 * s * p.ln() + le,
            -(p - 1.0) / (p * (1.0 - a)),
        )
    } else if a == 0.0 {
        (
            p * c0.ln() + (-1.0 - 3.0 * p / (p - 1.0)) * ln2 - 2.0 * s * p.ln() + le,
            -(p - 1.0) / p,
        )
    } else {
        (
            p * c0.ln() + (-(a + 2.0) - 2.0 * p / (p - 1.0)) * ln2 - s * (2.0 * p).ln() + le,
            -(p - 1.0) / p,
        )
    };
    let b = (outer_exp * log_inner).exp();
    let eps_cap = if a < 0.0 {
        (b / 4.0).powf((1.0 - a) / (p - 1.0))
    } else if a == 0.0 {
        let phi4 = 4.0 * 6.0f64.ln();
        (b / phi4).powf(1.0 / (p - 1.0))
    } else {
        (b / 20.0).powf(1.0 / (p - 1.0))
    };
    ThresholdConstants { b, eps_cap }
}

/// The predicted upper lifespan bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LifespanBound {
    pub t_upper: f64,
    /// False when `eps` exceeds `eps_cap`, where the prediction leaves its
    /// proven regime.
    pub in_small_eps_regime: bool,
}

/// `B eps^{-(p-1)/(1-a)}` for `-1 <= a < 0`, `phi^{-1}(B eps^{-(p-1)})` at
/// `a = 0`, `B eps^{-(p-1)}` for `a > 0`.
pub fn upper_lifespan_bound(spec: &ProblemSpec) -> Result<LifespanBound> {
    let p = spec.p();
    let tc = threshold_constants(p, spec.a, spec.data.c0);
    let t_upper = if spec.a < 0.0 {
        tc.b * spec.eps.powf(-(p - 1.0) / (1.0 - spec.a))
    } else if spec.a == 0.0 {
        phi_inverse(tc.b * spec.eps.powf(-(p - 1.0)))?
    } else {
        tc.b * spec.eps.powf(-(p - 1.0))
    };
    Ok(LifespanBound {
        t_upper,
        in_small_eps_regime: spec.eps <= tc.eps_cap,
    })
}

/// Smallest `j` whose envelope at `(x, t)` exceeds 1e100, or `None` when the
/// sequence decays (or the point leaves every region first).
///
/// Walks the ledger with an incremental partial sum, so each index costs
/// O(1) even in the borderline case that runs to the cap.
pub fn divergence_index(
    spec: &ProblemSpec,
    consts: &IterationConstants,
    x: f64,
    t: f64,
) -> Option<u64> {
    let p = spec.p();
    let a = spec.a;
    let le = consts.e_pa.ln() / (p - 1.0);
    let lf = consts.f_pa.ln();
    let mut s = 0.0; // S_j, advanced incrementally
    let mut p_pow = 1.0; // p^{j-1}
    let mut prev = f64::NEG_INFINITY;
    for j in 1..=DIVERGENCE_INDEX_CAP {
        let region = Region::for_regime(a, j as u32);
        if !region.contains(x, t) {
            return None;
        }
        let log_base = if a < 0.0 {
            2.0 * (t - x - 1.0).ln() - (1.0 + a) * (t - x).ln()
        } else if a == 0.0 {
            (t - x - 1.0).ln() + (1.0 + x).ln().ln()
        } else {
            (t - x - l_j(j as u32)).ln()
        };
        let aj = (p_pow * p - 1.0) / (p - 1.0);
        let log_c = p_pow * (consts.log_c1 - s * lf + le) - le;
        let log_env = if log_base == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            log_c + aj * log_base
        };
        if log_env > DIVERGENCE_THRESHOLD_LOG {
            return Some(j);
        }
        // Once the sequence turns down below unit size it is geometric decay.
        if j > 2 && log_env < prev && log_env < 0.0 {
            return None;
        }
        prev = log_env;
        s += j as f64 / (p_pow * p);
        p_pow *= p;
    }
    None
}
