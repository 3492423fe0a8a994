//! Time-marching solver with blow-up detection, amplitude sweeps, scaling
//! fits, and the envelope / sandwich audits.
//!
//! The scheme is the exact characteristic parallelogram
//! `u(x, t+h) = u(x+h, t) + u(x-h, t) - u(x, t-h) + source`,
//! whose homogeneous part reproduces free waves to rounding. Each interior
//! step integrates the source over the backward diamond between rows
//! (measure `2h^2`; with the Duhamel factor 1/2 and center-node evaluation
//! the step source is `h^2 H`), and the first row is seeded from the free
//! solution plus one half-diamond source `h^2/2 * H` on row zero. The
//! telescoped sources reproduce the cone quadrature of the Duhamel operator
//! diamond for diamond.

use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::{envelope, upper_lifespan_bound, IterationConstants};
use crate::error::{Error, Result};
use crate::picard::{self, GridFunction};
use crate::problem::{phi, ProblemSpec};
use crate::quadrature::{free_solution, weight_source};

/// Default spatial truncation radius for data without declared support.
const DEFAULT_R_CUT: f64 = 8.0;

/// Number of geometric threshold levels used by the blow-up extrapolation.
const EXTRAPOLATION_LEVELS: u32 = 10;

/// Minimum number of distinct level crossings for a trustworthy fit.
const EXTRAPOLATION_MIN_POINTS: usize = 5;

/// Relative margin allowed above the predicted upper bound in the sandwich
/// audit.
pub const SANDWICH_UPPER_TOL: f64 = 0.2;

/// Marching controls.
#[derive(Debug, Clone)]
pub struct MarchConfig {
    pub h: f64,
    pub t_max: f64,
    /// Row max `|u|` at which the run stops and reports blow-up.
    pub threshold: f64,
    /// Keep the full field (audits) or only row maxima (sweeps).
    pub keep_rows: bool,
    /// Truncation radius when the data has no declared support.
    pub r_cut: f64,
}

impl MarchConfig {
    pub fn new(h: f64, t_max: f64, threshold: f64) -> Self {
        MarchConfig {
            h,
            t_max,
            threshold,
            keep_rows: false,
            r_cut: DEFAULT_R_CUT,
        }
    }

    pub fn keeping_rows(mut self) -> Self {
        self.keep_rows = true;
        self
    }
}

/// The row where the amplitude first crossed the threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlowupRow {
    pub row: usize,
    pub t: f64,
    pub max_abs: f64,
}

/// A marched solution: row maxima always, the full field on request.
#[derive(Debug)]
pub struct LatticeSolution {
    pub grid: Option<GridFunction>,
    /// `max |u|` per computed row.
    pub row_max: Vec<f64>,
    pub blowup: Option<BlowupRow>,
    pub h: f64,
    pub x_min: f64,
    pub threshold: f64,
    /// Last computed time level.
    pub t_reached: f64,
}

impl LatticeSolution {
    /// `(t, max |u|)` pairs for every computed row.
    pub fn history(&self) -> Vec<(f64, f64)> {
        self.row_max
            .iter()
            .enumerate()
            .map(|(k, &m)| (k as f64 * self.h, m))
            .collect()
    }
}

/// Marches the problem to `t_max` or blow-up.
pub fn march(spec: &ProblemSpec, config: &MarchConfig) -> Result<LatticeSolution> {
    march_forced(spec, config, |_, _| 0.0)
}

/// [`march`] with an extra forcing term `G(x, t)` added to the source,
/// the hook used by manufactured-solution studies.
pub fn march_forced<G>(
    spec: &ProblemSpec,
    config: &MarchConfig,
    forcing: G,
) -> Result<LatticeSolution>
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    let h = config.h;
    if !(h > 0.0) {
        return Err(Error::Domain(format!("h must be positive, got {h}")));
    }
    if !(config.t_max > 0.0) {
        return Err(Error::Domain(format!(
            "t_max must be positive, got {}",
            config.t_max
        )));
    }
    let nt = (config.t_max / h - 1e-9).ceil().max(1.0) as usize; // rows 0..=nt
    let compact = spec.data.support_radius.is_some();
    let radius = spec.data.support_radius.unwrap_or(config.r_cut);
    let m_idx = ((radius + nt as f64 * h) / h).ceil() as usize + 1;
    let x_min = -(m_idx as f64) * h;
    let nx = 2 * m_idx + 1;
    let supp_idx = (radius / h).ceil() as usize;
    let x_of = |i: usize| x_min + i as f64 * h;

    // Active window: the data's influence cone, one lattice cell padded.
    // Outside it the solution vanishes identically (compact data only).
    let active = |k: usize| -> (usize, usize) {
        if compact {
            let reach = supp_idx + k + 1;
            (m_idx.saturating_sub(reach), (m_idx + reach).min(nx - 1))
        } else {
            (0, nx - 1)
        }
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut row_max = Vec::new();
    let mut blowup = None;

    // Row 0 is exactly eps * f.
    let mut prev2 = vec![0.0; nx];
    {
        let (lo, hi) = active(0);
        for (off, v) in prev2[lo..=hi].iter_mut().enumerate() {
            *v = spec.eps * spec.data.f(x_of(lo + off));
        }
    }
    let max0 = row_sup(&prev2);
    if !(config.threshold > max0) {
        return Err(Error::Domain(format!(
            "threshold {} must exceed the initial sup {max0}",
            config.threshold
        )));
    }
    row_max.push(max0);
    if config.keep_rows {
        rows.push(prev2.clone());
    }

    // Row 1: free solution plus one half-diamond source from row 0.
    let mut prev = vec![0.0; nx];
    {
        let (lo, hi) = active(1);
        for i in lo..=hi {
            let x = x_of(i);
            prev[i] = spec.eps * free_solution(&spec.data, x, h)?
                + 0.5 * h * h * (weight_source(spec, x, prev2[i]) + forcing(x, 0.0));
        }
    }
    let mut stopped = check_row(&prev, 1, h, config.threshold, &mut row_max, &mut blowup)?;
    if config.keep_rows {
        rows.push(prev.clone());
    }

    // One weight evaluation per column for the whole march.
    let col_weight: Vec<f64> = (0..nx)
        .map(|i| crate::quadrature::weight_factor(spec.a, x_of(i)))
        .collect();

    let mut cur = vec![0.0; nx];
    let mut k = 1;
    while !stopped && k < nt {
        k += 1;
        let t_src = (k - 1) as f64 * h;
        let (lo, hi) = active(k);
        let h2 = h * h;
        let update = |i: usize| -> f64 {
            let left = if i > 0 {
                prev[i - 1]
            } else {
                edge_value(spec, x_of(0) - h, k as f64 * h - h)
            };
            let right = if i + 1 < nx {
                prev[i + 1]
            } else {
                edge_value(spec, x_of(nx - 1) + h, k as f64 * h - h)
            };
            left + right - prev2[i]
                + h2 * (spec.nonlinearity.eval(prev[i]) * col_weight[i] + forcing(x_of(i), t_src))
        };
        let row_slice = &mut cur[lo..=hi];
        if row_slice.len() >= 16384 {
            row_slice
                .par_chunks_mut(8192)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = lo + c * 8192;
                    for (o, v) in chunk.iter_mut().enumerate() {
                        *v = update(base + o);
                    }
                });
        } else {
            for (o, v) in row_slice.iter_mut().enumerate() {
                *v = update(lo + o);
            }
        }
        // Outside the active window the reused buffer is still zero: the
        // windows only grow, and the buffer two rows back was zero there.
        stopped = check_row(
            &cur[lo..=hi],
            k,
            h,
            config.threshold,
            &mut row_max,
            &mut blowup,
        )?;
        if config.keep_rows {
            rows.push(cur.clone());
        }
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }

    let grid = if config.keep_rows {
        Some(GridFunction::from_rows(h, x_min, rows)?)
    } else {
        None
    };
    let t_reached = row_max.len().saturating_sub(1) as f64 * h;
    Ok(LatticeSolution {
        grid,
        row_max,
        blowup,
        h,
        x_min,
        threshold: config.threshold,
        t_reached,
    })
}

/// Outside the lattice the free wave continues; used only by unbounded data
/// where the edge neighbor is off-grid.
fn edge_value(spec: &ProblemSpec, x: f64, t: f64) -> f64 {
    spec.eps * free_solution(&spec.data, x, t.max(0.0)).unwrap_or(0.0)
}

fn row_sup(row: &[f64]) -> f64 {
    row.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn check_row(
    row: &[f64],
    k: usize,
    h: f64,
    threshold: f64,
    row_max: &mut Vec<f64>,
    blowup: &mut Option<BlowupRow>,
) -> Result<bool> {
    let m = row_sup(row);
    if !m.is_finite() {
        return Err(Error::NumericalOverflow {
            row: k,
            t: k as f64 * h,
        });
    }
    row_max.push(m);
    if m >= threshold {
        *blowup = Some(BlowupRow {
            row: k,
            t: k as f64 * h,
            max_abs: m,
        });
        return Ok(true);
    }
    Ok(false)
}

/// Extrapolates the blow-up time from the amplitude history.
///
/// Fits `w(t) = (max |u|)^{-(p-1)}` linearly in `t` over the last ten
/// crossings of geometrically spaced levels and
/// returns the root `w = 0`. For power-type growth `u ~ c (T-t)^{-1/(p-1)}`
/// the fit model is exact; the huge final amplitude makes the residual model
/// error negligible either way.
pub fn extrapolate_blowup_time(history: &[(f64, f64)], p: f64) -> Result<f64> {
    let (t_end, m_end) = *history
        .last()
        .ok_or_else(|| Error::ExtrapolationUnreliable("empty amplitude history".into()))?;
    if !(m_end > 0.0) {
        return Err(Error::ExtrapolationUnreliable(
            "final amplitude is not positive".into(),
        ));
    }
    // First crossing index of each of the geometric levels spanning the
    // last half of the amplitude's decades, deduplicated by row. The growth
    // near blow-up is so steep that levels packed tighter than this land on
    // a single row.
    let level_lo = m_end.sqrt().max(1.0);
    let ratio = (m_end / level_lo).powf(1.0 / (EXTRAPOLATION_LEVELS - 1) as f64);
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut used = Vec::new();
    for j in 0..EXTRAPOLATION_LEVELS {
        let level = level_lo * ratio.powi(j as i32);
        if let Some(idx) = history.iter().position(|&(_, m)| m >= level) {
            if used.last() != Some(&idx) {
                used.push(idx);
                let (t, m) = history[idx];
                points.push((t, m.powf(-(p - 1.0))));
            }
        }
    }
    if points.len() < EXTRAPOLATION_MIN_POINTS {
        return Err(Error::ExtrapolationUnreliable(format!(
            "only {} distinct level crossings, need {EXTRAPOLATION_MIN_POINTS}",
            points.len()
        )));
    }
    // The tail must be nondecreasing from the first crossing on.
    let first_idx = used[0];
    let mut prev = history[first_idx].1;
    for &(_, m) in &history[first_idx..] {
        if m < prev * (1.0 - 1e-9) {
            return Err(Error::ExtrapolationUnreliable(
                "non-monotone amplitude tail".into(),
            ));
        }
        prev = prev.max(m);
    }
    let (slope, intercept) = least_squares(&points);
    if !(slope < 0.0) {
        return Err(Error::ExtrapolationUnreliable(
            "fitted inverse amplitude is not decreasing".into(),
        ));
    }
    // The root may land slightly before the final sample: the last rows
    // overshoot the continuum blow-up once the growth outruns the lattice.
    // Anything before the fit window itself is a failed fit, though.
    let root = -intercept / slope;
    if root < points[0].0 {
        return Err(Error::ExtrapolationUnreliable(format!(
            "extrapolated root {root} precedes the fit window at {}",
            points[0].0
        )));
    }
    let _ = t_end;
    Ok(root)
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// One measured blow-up run.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupRecord {
    pub eps: f64,
    /// Threshold-crossing time; `None` when censored.
    pub t_numeric: Option<f64>,
    /// Extrapolated blow-up time; falls back to `t_numeric` (flagged) when
    /// the extrapolation preconditions fail.
    pub t_extrapolated: Option<f64>,
    pub h: f64,
    pub threshold: f64,
    /// Weight exponent of the run.
    pub regime_a: f64,
    /// The run exhausted its budget without reaching the threshold.
    pub censored: bool,
    /// `t_extrapolated` is a copy of `t_numeric` rather than a fit.
    pub extrapolation_fallback: bool,
}

/// Sweep controls.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub h: f64,
    pub threshold: f64,
    /// Hard cap on the per-run time budget (the predicted upper bound is
    /// loose by construction).
    pub budget_cap: f64,
}

impl SweepConfig {
    pub fn new(h: f64, threshold: f64) -> Self {
        SweepConfig {
            h,
            threshold,
            budget_cap: 5000.0,
        }
    }
}

/// Runs one marched blow-up measurement per amplitude, in parallel; records
/// come back sorted by amplitude. Budget per run: three times the predicted
/// upper bound, capped.
pub fn epsilon_sweep(
    template: &ProblemSpec,
    eps_list: &[f64],
    config: &SweepConfig,
) -> Result<Vec<BlowupRecord>> {
    let mut records = eps_list
        .par_iter()
        .map(|&eps| -> Result<BlowupRecord> {
            let mut spec = template.clone();
            spec.eps = eps;
            let bound = upper_lifespan_bound(&spec)?.t_upper;
            let budget = if bound.is_finite() && bound > 0.0 {
                (3.0 * bound).min(config.budget_cap)
            } else {
                config.budget_cap
            };
            let sol = march(&spec, &MarchConfig::new(config.h, budget, config.threshold))?;
            let record = match sol.blowup {
                Some(row) => {
                    let (t_ext, fallback) = match extrapolate_blowup_time(&sol.history(), spec.p())
                    {
                        Ok(t) => (t, false),
                        Err(_) => (row.t, true),
                    };
                    BlowupRecord {
                        eps,
                        t_numeric: Some(row.t),
                        t_extrapolated: Some(t_ext),
                        h: config.h,
                        threshold: config.threshold,
                        regime_a: spec.a,
                        censored: false,
                        extrapolation_fallback: fallback,
                    }
                }
                None => BlowupRecord {
                    eps,
                    t_numeric: None,
                    t_extrapolated: None,
                    h: config.h,
                    threshold: config.threshold,
                    regime_a: spec.a,
                    censored: true,
                    extrapolation_fallback: false,
                },
            };
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    Ok(records)
}

/// Which law a fit ran in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitLaw {
    /// `log T` against `log eps`.
    PowerLaw,
    /// `log phi(T)` against `log eps` (the `a = 0` scale).
    PhiLaw,
}

/// Least-squares lifespan exponent with diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub regime: FitLaw,
    /// Standard error of the slope.
    pub stderr: f64,
}

/// The exponent the theory predicts for the fit of [`fit_scaling`].
pub fn theory_slope(a: f64, p: f64) -> f64 {
    if a < 0.0 {
        -(p - 1.0) / (1.0 - a)
    } else {
        // At a = 0 the fit runs in phi space, where the law is again a pure
        // power of eps.
        -(p - 1.0)
    }
}

/// Fits the measured lifespans against amplitude on log-log axes
/// (phi-space ordinates at `a = 0`). Censored records never enter.
pub fn fit_scaling(records: &[BlowupRecord], a: f64, p: f64) -> Result<ScalingFit> {
    let _ = p;
    let mut points = Vec::new();
    for rec in records.iter().filter(|r| !r.censored) {
        let t = rec
            .t_extrapolated
            .or(rec.t_numeric)
            .expect("uncensored record carries a time");
        let y = if a == 0.0 { phi(t)?.ln() } else { t.ln() };
        points.push((rec.eps.ln(), y));
    }
    if points.len() < 4 {
        return Err(Error::InsufficientData {
            got: points.len(),
            need: 4,
        });
    }
    let (slope, intercept) = least_squares(&points);
    let n = points.len() as f64;
    let mean_y: f64 = points.iter().map(|p| p.1).sum::<f64>() / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let mean_x: f64 = points.iter().map(|p| p.0).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let stderr = if points.len() > 2 && sxx > 0.0 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
        regime: if a == 0.0 {
            FitLaw::PhiLaw
        } else {
            FitLaw::PowerLaw
        },
        stderr,
    })
}

/// Audit of one envelope order `j` against a marched field.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnvelopeAuditRow {
    pub j: u32,
    /// In-region nodes actually compared.
    pub checked: usize,
    pub violations: usize,
    /// Most negative slack `u - envelope * (1 - tol)` seen (positive when
    /// every node clears the bound).
    pub worst_margin: f64,
    /// Nodes outside the regime region, skipped.
    pub skipped_outside: usize,
    /// Nodes whose envelope already exceeds the amplitude threshold: the
    /// solution blew up before the envelope applies there.
    pub beyond_threshold: usize,
}

/// Result of [`envelope_audit`].
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub tol_env: f64,
    pub rows: Vec<EnvelopeAuditRow>,
}

impl EnvelopeReport {
    pub fn total_violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }
}

/// Checks `u >= envelope_j * (1 - 10 h)` at every in-region lattice node of
/// a kept-rows blow-up run, for `j = 1..=j_max`.
pub fn envelope_audit(
    solution: &LatticeSolution,
    spec: &ProblemSpec,
    consts: &IterationConstants,
    j_max: u32,
) -> Result<EnvelopeReport> {
    let grid = solution.grid.as_ref().ok_or_else(|| {
        Error::Domain("envelope audit needs a solution marched with kept rows".into())
    })?;
    let tol_env = 10.0 * solution.h;
    let factor = 1.0 - tol_env;
    let mut rows = Vec::new();
    for j in 1..=j_max {
        let mut audit = EnvelopeAuditRow {
            j,
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            skipped_outside: 0,
            beyond_threshold: 0,
        };
        for k in 0..grid.nt() {
            let t = grid.t_of(k);
            for i in 0..grid.nx() {
                let x = grid.x_of(i);
                match envelope(spec, consts, j, x, t) {
                    None => audit.skipped_outside += 1,
                    Some(env) => {
                        if env * factor >= solution.threshold {
                            audit.beyond_threshold += 1;
                            continue;
                        }
                        audit.checked += 1;
                        let margin = grid.value(k, i) - env * factor;
                        if margin < audit.worst_margin {
                            audit.worst_margin = margin;
                        }
                        if margin < 0.0 {
                            audit.violations += 1;
                        }
                    }
                }
            }
        }
        rows.push(audit);
    }
    Ok(EnvelopeReport { tol_env, rows })
}

/// One amplitude of the sandwich audit.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichRow {
    pub eps: f64,
    /// Certified existence horizon (empirical constant, safety factor 2).
    pub lower: f64,
    /// Measured blow-up time.
    pub t: f64,
    /// Predicted upper bound, slack included.
    pub upper: f64,
    pub pass: bool,
    /// How loose the lower side is: `lower / t`.
    pub lower_ratio: f64,
    /// Why the row was excluded from assertion, if it was.
    pub skipped: Option<String>,
}

/// Result of [`sandwich_check`].
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    pub all_pass: bool,
    pub upper_tolerance: f64,
}

/// Asserts `certified horizon <= measured T <= (1 + 0.2) * predicted bound`
/// for every uncensored record with amplitude inside the small-eps regime.
pub fn sandwich_check(records: &[BlowupRecord], template: &ProblemSpec) -> Result<SandwichReport> {
    let mut rows = Vec::new();
    let mut all_pass = true;
    for rec in records {
        let mut spec = template.clone();
        spec.eps = rec.eps;
        if rec.censored {
            rows.push(SandwichRow {
                eps: rec.eps,
                lower: f64::NAN,
                t: f64::NAN,
                upper: f64::NAN,
                pass: true,
                lower_ratio: f64::NAN,
                skipped: Some("censored".into()),
            });
            continue;
        }
        let t = rec.t_extrapolated.or(rec.t_numeric).unwrap();
        let bound = upper_lifespan_bound(&spec)?;
        if !bound.in_small_eps_regime {
            rows.push(SandwichRow {
                eps: rec.eps,
                lower: f64::NAN,
                t,
                upper: f64::NAN,
                pass: true,
                lower_ratio: f64::NAN,
                skipped: Some("outside small-eps regime".into()),
            });
            continue;
        }
        let lower = picard::self_consistent_horizon(&spec, 2.0)?.t_star;
        let upper = bound.t_upper * (1.0 + SANDWICH_UPPER_TOL);
        let pass = lower <= t && t <= upper;
        all_pass &= pass;
        rows.push(SandwichRow {
            eps: rec.eps,
            lower,
            t,
            upper,
            pass,
            lower_ratio: lower / t,
            skipped: None,
        });
    }
    Ok(SandwichReport {
        rows,
        all_pass,
        upper_tolerance: SANDWICH_UPPER_TOL,
    })
}
