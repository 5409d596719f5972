//! The dominating drift walk and its stationary analysis.
//!
//! A `(M, K, rho, beta)` walk moves up by 1 each step; above level M it
//! instead drops by exactly K with probability rho (clamped at M), where
//! rho*K = 1 + beta pins the negative drift. The stationary distribution is
//! geometric above M; the ratio alpha solves a fixed-point equation whose
//! exponential approximation gives the root function
//!
//! ```text
//! f(x) = e^{-x} - 1 + x / (1 + beta'),   beta' = beta + rho,
//! ```
//!
//! with the meaningful root inside [2b'/(1+b'), 4b'/(1+b')] (b' = beta').
//! We solve both: `x` from f by bisection, and the exact alpha from the
//! un-approximated polynomial fixed point, and the geometric family uses the
//! exact alpha so the stationary recurrence holds to tight tolerance.

use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

/// The expectation and tail bounds are stated for beta <= 3/5.
const BETA_LIMIT: f64 = 0.6;
/// Solver guard: the root bracket argument needs beta' = beta + rho < 3/5.
const BETA_PRIME_LIMIT: f64 = 0.6;
/// rho*K must equal 1 + beta to this tolerance.
const PARAM_TOL: f64 = 1e-12;
/// Bisection target on |f(x)|.
const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WalkError {
    #[error("invalid walk parameters: {0}")]
    InvalidParams(String),
    #[error("beta {0} above the 3/5 regime limit")]
    BetaRegime(f64),
    #[error("beta' = beta + rho = {0} must be below 3/5 for the root solver")]
    BetaPrimeRegime(f64),
    #[error("root bracket sign condition violated: f({lo}) = {flo}, f({hi}) = {fhi}")]
    RootBracket {
        lo: f64,
        hi: f64,
        flo: f64,
        fhi: f64,
    },
    #[error("bisection failed to reach tolerance")]
    NoConvergence,
    #[error("delta {0} outside (0, 1)")]
    BadDelta(f64),
    #[error("the walk simulator needs integer K, got {0}")]
    NonIntegerJump(f64),
}

/// Parameters of the drift walk. `rho * k = 1 + beta` exactly.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WalkParams {
    pub m: u64,
    pub k: f64,
    pub rho: f64,
    pub beta: f64,
}

impl WalkParams {
    pub fn new(m: u64, k: f64, rho: f64, beta: f64) -> Result<Self, WalkError> {
        if !(k.is_finite() && k > 0.0) {
            return Err(WalkError::InvalidParams(format!(
                "K = {k} must be positive"
            )));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(WalkError::InvalidParams(format!(
                "rho = {rho} outside (0, 1]"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(WalkError::InvalidParams(format!(
                "beta = {beta} must be positive"
            )));
        }
        if (rho * k - (1.0 + beta)).abs() > PARAM_TOL {
            return Err(WalkError::InvalidParams(format!(
                "rho*K = {} but 1+beta = {}",
                rho * k,
                1.0 + beta
            )));
        }
        Ok(Self { m, k, rho, beta })
    }

    /// Derive beta from the drift identity: beta = rho*K - 1.
    pub fn from_drop(m: u64, k: f64, rho: f64) -> Result<Self, WalkError> {
        Self::new(m, k, rho, rho * k - 1.0)
    }

    pub fn beta_prime(&self) -> f64 {
        self.beta + self.rho
    }

    pub fn k_prime(&self) -> f64 {
        self.k + 1.0
    }
}

/// Nonzero root of f and the geometric ratios derived from it.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RootSolution {
    /// Root of the approximated equation f(x) = 0.
    pub x: f64,
    /// alpha = 1 - x/k' from the approximate root.
    pub alpha: f64,
}

/// Stationary distribution of the dominating walk: point mass at M plus a
/// geometric tail `s_{M+i} = c * alpha^i` for i >= 1.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SteadyState {
    pub s_m: f64,
    /// Exact geometric ratio (root of the un-approximated fixed point).
    pub alpha: f64,
    /// Ratio implied by the e^{-x} approximation, reported for comparison.
    pub alpha_approx: f64,
    /// Root of f the approximate alpha came from.
    pub x: f64,
    pub c: f64,
}

impl SteadyState {
    /// Stationary probability of level `m + i`.
    pub fn occupancy(&self, i: u64) -> f64 {
        if i == 0 {
            self.s_m
        } else {
            self.c * self.alpha.powi(i as i32)
        }
    }

    /// |s_M + sum_{i>=1} s_{M+i} - 1|.
    pub fn normalization_error(&self) -> f64 {
        (self.s_m + self.c * self.alpha / (1.0 - self.alpha) - 1.0).abs()
    }

    /// Max residual of s_{l+1} = (1-rho) s_l + rho s_{l+K+1} over
    /// l in [M+1, M+levels].
    pub fn recurrence_residual(&self, params: &WalkParams, levels: u64) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..=levels {
            let lhs = self.occupancy(i + 1);
            let rhs = (1.0 - params.rho) * self.occupancy(i)
                + params.rho * self.c * self.alpha.powf(i as f64 + params.k + 1.0);
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }

    /// Stationary mean of the dominating walk.
    pub fn mean(&self, params: &WalkParams) -> f64 {
        let a = self.alpha;
        params.m as f64 + self.c * a / ((1.0 - a) * (1.0 - a))
    }
}

fn f_root(x: f64, beta_prime: f64) -> f64 {
    (-x).exp() - 1.0 + x / (1.0 + beta_prime)
}

/// Bisection for the nonzero root of f inside [2b'/(1+b'), 4b'/(1+b')].
/// (f(0) = 0 is the excluded trivial root.)
pub fn solve_root(params: &WalkParams) -> Result<RootSolution, WalkError> {
    let bp = params.beta_prime();
    if bp >= BETA_PRIME_LIMIT {
        return Err(WalkError::BetaPrimeRegime(bp));
    }
    let (mut lo, mut hi) = (2.0 * bp / (1.0 + bp), 4.0 * bp / (1.0 + bp));
    let (flo, fhi) = (f_root(lo, bp), f_root(hi, bp));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(WalkError::RootBracket { lo, hi, flo, fhi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fmid = f_root(mid, bp);
        if fmid.abs() <= ROOT_TOL {
            let alpha = 1.0 - mid / params.k_prime();
            debug_assert!(alpha > 0.0 && alpha < 1.0);
            return Ok(RootSolution { x: mid, alpha });
        }
        if fmid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(WalkError::NoConvergence)
}

/// Exact geometric ratio: root of alpha = (1-rho) + rho * alpha^{k'} in (0,1).
fn solve_alpha_exact(params: &WalkParams) -> Result<f64, WalkError> {
    let (rho, kp) = (params.rho, params.k_prime());
    let g = |a: f64| (1.0 - rho) + rho * a.powf(kp) - a;
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    if !(g(lo) > 0.0 && g(hi) < 0.0) {
        return Err(WalkError::InvalidParams(
            "exact fixed point has no root in (0,1)".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Full stationary solution; the geometric family uses the exact alpha.
pub fn steady_state(params: &WalkParams) -> Result<SteadyState, WalkError> {
    let root = solve_root(params)?;
    let alpha = solve_alpha_exact(params)?;
    let k = params.k;
    let rho = params.rho;
    // Normalization: s_M + c*alpha/(1-alpha) = 1 with
    // s_M = rho*c*alpha*(1-alpha^K)/(1-alpha).
    let c = (1.0 - alpha) / (alpha * (rho * (1.0 - alpha.powf(k)) + 1.0));
    let s_m = rho * c * alpha * (1.0 - alpha.powf(k)) / (1.0 - alpha);
    Ok(SteadyState {
        s_m,
        alpha,
        alpha_approx: root.alpha,
        x: root.x,
        c,
    })
}

/// Expectation bound: M + K(1+beta)/beta, valid for beta <= 3/5.
pub fn expected_value_bound(params: &WalkParams) -> Result<f64, WalkError> {
    if params.beta > BETA_LIMIT {
        return Err(WalkError::BetaRegime(params.beta));
    }
    Ok(params.m as f64 + params.k * (1.0 + params.beta) / params.beta)
}

/// Tail bound: with probability 1-delta the walk sits below
/// M + (K(1+beta)/beta) * ln(2/delta).
pub fn tail_bound(params: &WalkParams, delta: f64) -> Result<f64, WalkError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(WalkError::BadDelta(delta));
    }
    if params.beta > BETA_LIMIT {
        return Err(WalkError::BetaRegime(params.beta));
    }
    Ok(params.m as f64 + params.k * (1.0 + params.beta) / params.beta * (2.0 / delta).ln())
}

#[inline(always)]
fn step_y(y: u64, m: u64, k: u64, rho: f64, rng: &mut RngStream) -> u64 {
    if y <= m {
        // deterministic climb through the transient band and out of M
        y + 1
    } else if rng.gen_bool(rho) {
        (y - k.min(y)).max(m)
    } else {
        y + 1
    }
}

fn integer_jump(params: &WalkParams) -> Result<u64, WalkError> {
    if params.k.fract() != 0.0 {
        return Err(WalkError::NonIntegerJump(params.k));
    }
    Ok(params.k as u64)
}

/// Simulate the dominating walk for `steps` steps, starting at Y_1 = 0.
pub fn simulate_walk(params: &WalkParams, steps: u64, seed: u64) -> Result<Vec<u64>, WalkError> {
    let k = integer_jump(params)?;
    let mut rng = RngStream::new(seed);
    let mut out = Vec::with_capacity(steps as usize);
    let mut y = 0u64;
    for _ in 0..steps {
        out.push(y);
        y = step_y(y, params.m, k, params.rho, &mut rng);
    }
    Ok(out)
}

/// Streaming occupancy over a long run; the first `burn_frac` of steps are
/// discarded. Memory stays flat regardless of `steps`.
#[derive(Clone, Debug, Serialize)]
pub struct WalkStats {
    pub samples: u64,
    pub mean: f64,
    pub max: u64,
    /// `histogram[y]` = visits to level y among the kept samples
    pub histogram: Vec<u64>,
}

impl WalkStats {
    /// Fraction of kept samples strictly above `threshold`.
    pub fn mass_above(&self, threshold: f64) -> f64 {
        let count: u64 = self
            .histogram
            .iter()
            .enumerate()
            .filter(|&(y, _)| y as f64 > threshold)
            .map(|(_, &c)| c)
            .sum();
        count as f64 / self.samples as f64
    }

    /// Total-variation distance between the empirical occupancy and the
    /// analytic stationary family (mass below M counts fully).
    pub fn tv_against(&self, steady: &SteadyState, m: u64) -> f64 {
        let horizon = self.histogram.len().max(m as usize + 2000);
        let mut tv = 0.0;
        for y in 0..horizon {
            let emp = self
                .histogram
                .get(y)
                .map(|&c| c as f64 / self.samples as f64)
                .unwrap_or(0.0);
            let truth = if (y as u64) < m {
                0.0
            } else {
                steady.occupancy(y as u64 - m)
            };
            tv += (emp - truth).abs();
        }
        0.5 * tv
    }
}

pub fn walk_occupancy(
    params: &WalkParams,
    steps: u64,
    seed: u64,
    burn_frac: f64,
) -> Result<WalkStats, WalkError> {
    let k = integer_jump(params)?;
    let burn = (steps as f64 * burn_frac) as u64;
    let mut rng = RngStream::new(seed);
    let mut histogram: Vec<u64> = Vec::new();
    let mut y = 0u64;
    let mut sum = 0u128;
    let mut max = 0u64;
    let mut samples = 0u64;
    for t in 0..steps {
        if t >= burn {
            if histogram.len() <= y as usize {
                histogram.resize(y as usize + 1, 0);
            }
            histogram[y as usize] += 1;
            sum += y as u128;
            max = max.max(y);
            samples += 1;
        }
        y = step_y(y, params.m, k, params.rho, &mut rng);
    }
    Ok(WalkStats {
        samples,
        mean: sum as f64 / samples as f64,
        max,
        histogram,
    })
}

/// Everything the `walk` CLI subcommand reports.
#[derive(Clone, Debug, Serialize)]
pub struct WalkReport {
    pub params: WalkParams,
    pub x: f64,
    pub alpha_exact: f64,
    pub alpha_approx: f64,
    pub c: f64,
    pub s_m: f64,
    pub stationary_mean: f64,
    pub expected_value_bound: f64,
    pub recurrence_residual: f64,
    pub normalization_error: f64,
    pub steps: u64,
    pub seed: u64,
    pub mc_mean: f64,
    pub mc_max: u64,
    pub tail_checks: Vec<TailCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCheck {
    pub delta: f64,
    pub bound: f64,
    pub empirical_exceedance: f64,
}

pub fn walk_report(
    params: &WalkParams,
    steps: u64,
    seed: u64,
    deltas: &[f64],
) -> Result<WalkReport, WalkError> {
    let steady = steady_state(params)?;
    let stats = walk_occupancy(params, steps, seed, 0.5)?;
    let mut tail_checks = Vec::new();
    for &delta in deltas {
        let bound = tail_bound(params, delta)?;
        tail_checks.push(TailCheck {
            delta,
            bound,
            empirical_exceedance: stats.mass_above(bound),
        });
    }
    Ok(WalkReport {
        params: *params,
        x: steady.x,
        alpha_exact: steady.alpha,
        alpha_approx: steady.alpha_approx,
        c: steady.c,
        s_m: steady.s_m,
        stationary_mean: steady.mean(params),
        expected_value_bound: expected_value_bound(params)?,
        recurrence_residual: steady.recurrence_residual(params, 200),
        normalization_error: steady.normalization_error(),
        steps,
        seed,
        mc_mean: stats.mean,
        mc_max: stats.max,
        tail_checks,
    })
}
