//! Entropy level-set geometry and the containment / coverage / facet-growth
//! experiments.
//!
//! The level sets F^β = {x ∈ C : F(x) ≤ β} are convex bodies sandwiched
//! around the β-center of the cube. This module provides the boundary-point
//! map θ ↦ x(θ, β) (the point of ∂F^β whose tilt vector is a positive
//! multiple of θ), the analytic Weingarten/curvature audit of the level
//! surface, the one-sided depth refutation, and the Monte Carlo experiments
//! that tie the level sets to sampled random polytopes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{big_f, f_entropy, h_deriv, h_fn, CubePoint};
use crate::hull::{facet_enum, membership, Membership, SignMatrix};
use crate::prob::{q_upper, QUpperStrategy};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// The level/accuracy schedule tied to a problem size (n, N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    /// 3 log n / n
    pub eps1: f64,
    /// 3 log n / n
    pub eps2: f64,
    /// 6 / n
    pub eps3: f64,
    /// log N / n
    pub alpha: f64,
}

impl EpsilonSchedule {
    pub fn new(n: usize, big_n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter("EpsilonSchedule: n >= 2 required".into()));
        }
        if big_n < 2 {
            return Err(Error::Parameter("EpsilonSchedule: N >= 2 required".into()));
        }
        let nf = n as f64;
        Ok(Self {
            eps1: 3.0 * nf.ln() / nf,
            eps2: 3.0 * nf.ln() / nf,
            eps3: 6.0 / nf,
            alpha: (big_n as f64).ln() / nf,
        })
    }
}

/// A point on ∂F^β realized through the boundary-point map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub x: CubePoint,
    /// unit direction; the tilt vector at x is scale · theta
    pub theta: Vec<f64>,
    /// the positive multiple: h(x_i) = scale · theta_i
    pub scale: f64,
    pub beta: f64,
}

/// Membership in the sub-level body F^β = {F ≤ β}.
pub fn f_beta_member(x: &CubePoint, beta: f64) -> Result<bool> {
    if !(beta > 0.0 && beta <= std::f64::consts::LN_2) {
        return Err(Error::Parameter(format!(
            "f_beta_member: beta = {beta} not in (0, log 2]"
        )));
    }
    Ok(big_f(x) <= beta)
}

/// Verdict of the one-sided depth refutation at level β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QBetaVerdict {
    /// Certified witness that x is not in the β-center: some halfspace
    /// through x has probability < e^{-βn}.
    RefutedOut { q_upper: f64, threshold: f64 },
    /// No claim: the candidate halfspaces all have probability ≥ e^{-βn}.
    NotRefuted { q_upper: f64, threshold: f64 },
}

/// One-sided membership refutation for the β-center: any halfspace through
/// x with probability below e^{-βn} certifies x outside.
pub fn q_beta_refute(x: &CubePoint, beta: f64, strategy: QUpperStrategy) -> Result<QBetaVerdict> {
    if !(beta > 0.0) {
        return Err(Error::Parameter("q_beta_refute: beta must be > 0".into()));
    }
    let (q, _witness) = q_upper(x, strategy)?;
    let threshold = (-beta * x.dim() as f64).exp();
    let qv = q.value();
    Ok(if qv < threshold {
        QBetaVerdict::RefutedOut { q_upper: qv, threshold }
    } else {
        QBetaVerdict::NotRefuted { q_upper: qv, threshold }
    })
}

/// The boundary-point map: the unique x on ∂F^β with tilt vector a positive
/// multiple of θ, for 0 < β < |supp(θ)| log2 / n. Solved as the monotone
/// scalar root of s ↦ Σ f(tanh(s θ_i)) - nβ (bracketed bisection plus a
/// Newton polish; tolerance 1e-12 on F).
pub fn boundary_point(theta: &[f64], beta: f64) -> Result<BoundaryPoint> {
    let n = theta.len();
    if n == 0 || theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("boundary_point: bad direction".into()));
    }
    let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Domain("boundary_point: zero direction".into()));
    }
    let theta: Vec<f64> = theta.iter().map(|t| t / norm).collect();
    let supp = theta.iter().filter(|t| **t != 0.0).count();
    let sup_level = supp as f64 * std::f64::consts::LN_2 / n as f64;
    if !(beta > 0.0 && beta < sup_level) {
        return Err(Error::Precondition(format!(
            "boundary_point: beta = {beta} not in (0, {sup_level})"
        )));
    }
    let target = beta * n as f64;
    let level = |s: f64| -> f64 {
        theta
            .iter()
            .map(|&t| f_entropy((s * t).tanh()).unwrap())
            .sum::<f64>()
    };

    // bracket: level is strictly increasing from 0 to supp·log2 > target
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut guard = 0;
    while level(hi) < target {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 300 {
            return Err(Error::Degenerate("boundary_point: bracket failed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if level(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (level(mid) - target).abs() <= 1e-13 * n as f64 {
            break;
        }
    }
    let mut s = 0.5 * (lo + hi);
    // Newton polish: d/ds Σ f(tanh(sθ_i)) = Σ s θ_i² (1 - tanh²(sθ_i))
    for _ in 0..6 {
        let g = level(s) - target;
        let dg: f64 = theta
            .iter()
            .map(|&t| {
                let x = (s * t).tanh();
                s * t * t * (1.0 - x * x)
            })
            .sum();
        if dg <= 0.0 {
            break;
        }
        let step = g / dg;
        let next = s - step;
        if next > 0.0 && next.is_finite() {
            s = next;
        } else {
            break;
        }
    }
    let x = CubePoint::new(theta.iter().map(|&t| (s * t).tanh()).collect())?;
    let achieved = big_f(&x);
    if (achieved - beta).abs() > 1e-10 {
        return Err(Error::Degenerate(format!(
            "boundary_point: root finder stalled (|F - beta| = {})",
            (achieved - beta).abs()
        )));
    }
    Ok(BoundaryPoint { x, theta, scale: s, beta })
}

/// Curvature audit of the level surface at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeingartenAudit {
    /// trace of the full differential of the Gauss map
    pub trace_d: f64,
    /// trace of its restriction to the tangent space
    pub trace_w: f64,
    /// product curvature det W
    pub kappa: f64,
    /// lower bound on 1/kappa through the tilt norm: ‖t‖^{n-1}(1-γ'²)^{n-1}
    pub inv_kappa_norm_bound: f64,
    /// lower bound on 1/kappa through the level: (1-γ'²)^{n-1}(2nβ)^{(n-1)/2}
    pub inv_kappa_level_bound: f64,
}

/// Differential of the Gauss map ν = t/‖t‖₂ of the level surface, in the
/// standard basis: a_ij = δ_ij h'(x_i)/‖t‖ - t_i t_j h'(x_j)/‖t‖³.
pub fn gauss_map_differential(x: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
    let n = x.len();
    let t: Vec<f64> = x.iter().map(|&c| h_fn(c)).collect::<Result<_>>()?;
    let hp: Vec<f64> = x.iter().map(|&c| h_deriv(c)).collect::<Result<_>>()?;
    let norm_sq: f64 = t.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return Err(Error::Degenerate("gauss map undefined at the center".into()));
    }
    let norm = norm_sq.sqrt();
    Ok(nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { hp[i] / norm } else { 0.0 };
        diag - t[i] * t[j] * hp[j] / (norm * norm_sq)
    }))
}

/// Orthonormal basis of ν⊥ via a Householder reflector carrying e₁ to ±ν:
/// the trailing n-1 columns of the reflector.
fn tangent_basis(nu: &[f64]) -> nalgebra::DMatrix<f64> {
    let n = nu.len();
    let alpha = if nu[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut u: Vec<f64> = nu.to_vec();
    u[0] += alpha;
    let uu: f64 = u.iter().map(|v| v * v).sum();
    nalgebra::DMatrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { 1.0 } else { 0.0 };
        delta - 2.0 * u[i] * u[col] / uu
    })
}

/// Analytic Weingarten map at a boundary point inside γ'C: trace identity,
/// product curvature, and the two 1/κ lower bounds.
pub fn weingarten_audit(bp: &BoundaryPoint, gamma_prime: f64) -> Result<WeingartenAudit> {
    let x = bp.x.coords();
    let n = x.len();
    if n < 2 {
        return Err(Error::Parameter("weingarten_audit: n >= 2 required".into()));
    }
    if !(gamma_prime > 0.0 && gamma_prime < 1.0) {
        return Err(Error::Parameter("weingarten_audit: gamma' in (0,1)".into()));
    }
    if x.iter().any(|&c| c.abs() > gamma_prime) {
        return Err(Error::Precondition(
            "weingarten_audit: point outside gamma' C".into(),
        ));
    }
    let d = gauss_map_differential(x)?;
    let t: Vec<f64> = x.iter().map(|&c| h_fn(c).unwrap()).collect();
    let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nu: Vec<f64> = t.iter().map(|v| v / norm).collect();
    let b = tangent_basis(&nu);
    let w = b.transpose() * &d * &b;
    let trace_d = d.trace();
    let trace_w = w.trace();
    let kappa = w.determinant();
    let g2 = 1.0 - gamma_prime * gamma_prime;
    let nf = n as f64;
    Ok(WeingartenAudit {
        trace_d,
        trace_w,
        kappa,
        inv_kappa_norm_bound: (norm * g2).powi(n as i32 - 1),
        inv_kappa_level_bound: g2.powi(n as i32 - 1)
            * (2.0 * nf * bp.beta).powf((nf - 1.0) / 2.0),
    })
}

// ---------------------------------------------------------------------------
// experiments

/// Tunables shared by the Monte Carlo experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    /// desk-scale substitute for the (tiny) fixed gamma
    pub gamma_prime: f64,
    /// boundary samples per trial
    pub samples: usize,
    /// explicit (eps1, eps2, eps3) instead of the schedule defaults
    pub eps_override: Option<(f64, f64, f64)>,
    /// restrict directions to M = {θ : max|θ_i| ≤ √(3 log n / n)}
    pub restrict_to_m: bool,
    /// use the full vertex set instead of sampling
    pub exhaustive: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            gamma_prime: 0.3,
            samples: 64,
            eps_override: None,
            restrict_to_m: false,
            exhaustive: false,
        }
    }
}

/// Clamp a level into (0, 0.95 log 2); at desk scale the schedule levels
/// routinely leave the meaningful range (recorded in the reports).
fn clamp_level(beta: f64) -> (f64, bool) {
    let max = 0.95 * std::f64::consts::LN_2;
    let min = 0.02;
    if beta >= min && beta <= max {
        (beta, false)
    } else {
        (beta.clamp(min, max), true)
    }
}

fn sample_theta(rng: &mut CounterRng, n: usize, restrict_to_m: bool) -> Vec<f64> {
    let cap = (3.0 * (n as f64).ln() / n as f64).sqrt();
    loop {
        let theta = rng.unit_vector(n);
        if !restrict_to_m || theta.iter().all(|t| t.abs() <= cap) {
            return theta;
        }
    }
}

/// One experiment trial's tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    /// boundary samples actually tested (inside γ'C)
    pub tested: usize,
    /// samples rejected because they left γ'C
    pub rejected: usize,
    /// containment violations (resp. covered points for coverage runs)
    pub hits: usize,
    pub degenerate: bool,
}

/// Containment experiment report: how often sampled points of
/// ∂F^β ∩ γ'C escape the sampled polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub n: usize,
    pub big_n: usize,
    pub beta: f64,
    pub level_clamped: bool,
    pub gamma_prime: f64,
    pub rows: Vec<TrialRow>,
    /// violations / tested, pooled over non-degenerate trials
    pub violation_fraction: f64,
    /// fraction of non-degenerate trials with zero violations
    pub full_containment_fraction: f64,
    pub degenerate_trials: usize,
}

fn boundary_samples_in_cube(
    rng: &mut CounterRng,
    n: usize,
    beta: f64,
    opts: &ExperimentOptions,
) -> (Vec<CubePoint>, usize) {
    let mut pts = Vec::with_capacity(opts.samples);
    let mut rejected = 0;
    let mut attempts = 0;
    while pts.len() < opts.samples && attempts < 200 * opts.samples {
        attempts += 1;
        let theta = sample_theta(rng, n, opts.restrict_to_m);
        let Ok(bp) = boundary_point(&theta, beta) else {
            rejected += 1;
            continue;
        };
        if bp.x.coords().iter().all(|c| c.abs() <= opts.gamma_prime) {
            pts.push(bp.x);
        } else {
            rejected += 1;
        }
    }
    (pts, rejected)
}

fn experiment_trial(
    n: usize,
    big_n: usize,
    seed: u64,
    trial: u64,
    beta: f64,
    opts: &ExperimentOptions,
    count_outside: bool,
) -> Result<TrialRow> {
    let matrix = if opts.exhaustive {
        SignMatrix::exhaustive(n)?
    } else {
        let trial_seed = CounterRng::new(seed, trial).next_u64();
        SignMatrix::sample_polytope(n, big_n, trial_seed)?
    };
    let hull = facet_enum(&matrix)?;
    if hull.dim_affine < n {
        return Ok(TrialRow { trial, tested: 0, rejected: 0, hits: 0, degenerate: true });
    }
    let mut rng = CounterRng::new(seed, trial).substream(7);
    let (pts, rejected) = boundary_samples_in_cube(&mut rng, n, beta, opts);
    let mut hits = 0;
    for p in &pts {
        let outside = membership(p.coords(), &hull)? == Membership::Outside;
        if outside == count_outside {
            hits += 1;
        }
    }
    Ok(TrialRow { trial, tested: pts.len(), rejected, hits, degenerate: false })
}

/// Does the sampled polytope contain ∂F^{α-ε₁-ε₂} ∩ γ'C? `hits` counts
/// escapes (membership violations).
pub fn containment_experiment(
    n: usize,
    big_n: usize,
    trials: u64,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<ContainmentReport> {
    let sched = EpsilonSchedule::new(n, big_n)?;
    let (e1, e2) = match opts.eps_override {
        Some((a, b, _)) => (a, b),
        None => (sched.eps1, sched.eps2),
    };
    let (beta, level_clamped) = clamp_level(sched.alpha - e1 - e2);
    let rows: Vec<TrialRow> = (0..trials)
        .into_par_iter()
        .map(|t| experiment_trial(n, big_n, seed, t, beta, opts, true))
        .collect::<Result<_>>()?;
    let degenerate_trials = rows.iter().filter(|r| r.degenerate).count();
    let tested: usize = rows.iter().map(|r| r.tested).sum();
    let violations: usize = rows.iter().map(|r| r.hits).sum();
    let live = rows.iter().filter(|r| !r.degenerate).count();
    let full = rows.iter().filter(|r| !r.degenerate && r.hits == 0).count();
    Ok(ContainmentReport {
        n,
        big_n,
        beta,
        level_clamped,
        gamma_prime: opts.gamma_prime,
        rows,
        violation_fraction: if tested > 0 { violations as f64 / tested as f64 } else { 0.0 },
        full_containment_fraction: if live > 0 { full as f64 / live as f64 } else { 0.0 },
        degenerate_trials,
    })
}

/// Coverage experiment report: the fraction of ∂F^{α+ε₃} ∩ γ'C that the
/// sampled polytope still covers (sampled through the θ-measure; this is
/// not the surface measure, reweight by 1/κ for that).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n: usize,
    pub big_n: usize,
    pub beta: f64,
    pub level_clamped: bool,
    pub gamma_prime: f64,
    pub rows: Vec<TrialRow>,
    pub coverage_fraction: f64,
    pub degenerate_trials: usize,
}

/// Fraction of sampled points of ∂F^{α+ε₃} ∩ γ'C lying inside the polytope;
/// `hits` counts covered points.
pub fn boundary_coverage_experiment(
    n: usize,
    big_n: usize,
    trials: u64,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<CoverageReport> {
    let sched = EpsilonSchedule::new(n, big_n)?;
    let e3 = match opts.eps_override {
        Some((_, _, c)) => c,
        None => sched.eps3,
    };
    let (beta, level_clamped) = clamp_level(sched.alpha + e3);
    let rows: Vec<TrialRow> = (0..trials)
        .into_par_iter()
        .map(|t| experiment_trial(n, big_n, seed, t, beta, opts, false))
        .collect::<Result<_>>()?;
    let degenerate_trials = rows.iter().filter(|r| r.degenerate).count();
    let tested: usize = rows.iter().map(|r| r.tested).sum();
    let covered: usize = rows.iter().map(|r| r.hits).sum();
    Ok(CoverageReport {
        n,
        big_n,
        beta,
        level_clamped,
        gamma_prime: opts.gamma_prime,
        rows,
        coverage_fraction: if tested > 0 { covered as f64 / tested as f64 } else { 0.0 },
        degenerate_trials,
    })
}

/// Facet statistics for one N in a growth sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacetGrowthRow {
    pub big_n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: u64,
    pub max: u64,
    /// the comparison curve (log N)^{n/2}
    pub curve: f64,
    pub degenerate_trials: usize,
}

/// Growth of the facet count with N, with the (log N)^{n/2} comparison
/// curve (fitted at the last point; only the trend is asserted anywhere).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetGrowthReport {
    pub n: usize,
    pub trials: u64,
    pub rows: Vec<FacetGrowthRow>,
    pub fitted_constant: f64,
    /// slope of log(mean f_count) against log log N between the endpoints
    pub loglog_slope: f64,
}

/// Mean/median/extreme facet counts over `trials` sampled polytopes per N.
pub fn facet_growth_experiment(
    n: usize,
    n_list: &[usize],
    trials: u64,
    seed: u64,
) -> Result<FacetGrowthReport> {
    if n_list.is_empty() {
        return Err(Error::Parameter("facet_growth_experiment: empty N list".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &big_n in n_list {
        let counts: Vec<Option<u64>> = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<Option<u64>> {
                let trial_seed = CounterRng::new(seed, t).next_u64();
                let m = SignMatrix::sample_polytope(n, big_n, trial_seed)?;
                let h = facet_enum(&m)?;
                Ok(if h.dim_affine < n { None } else { Some(h.f_count as u64) })
            })
            .collect::<Result<_>>()?;
        let degenerate_trials = counts.iter().filter(|c| c.is_none()).count();
        let mut live: Vec<u64> = counts.into_iter().flatten().collect();
        live.sort_unstable();
        if live.is_empty() {
            return Err(Error::Degenerate(format!(
                "facet_growth_experiment: all trials degenerate at N = {big_n}"
            )));
        }
        let mean = live.iter().sum::<u64>() as f64 / live.len() as f64;
        let median = if live.len() % 2 == 1 {
            live[live.len() / 2] as f64
        } else {
            (live[live.len() / 2 - 1] + live[live.len() / 2]) as f64 / 2.0
        };
        rows.push(FacetGrowthRow {
            big_n,
            mean,
            median,
            min: live[0],
            max: *live.last().unwrap(),
            curve: (big_n as f64).ln().powf(n as f64 / 2.0),
            degenerate_trials,
        });
    }
    let first = rows.first().unwrap();
    let last = rows.last().unwrap();
    let fitted_constant = last.mean / last.curve;
    let loglog_slope = if rows.len() >= 2 && first.mean > 0.0 {
        ((last.mean / first.mean).ln())
            / ((last.big_n as f64).ln().ln() - (first.big_n as f64).ln().ln())
    } else {
        f64::NAN
    };
    Ok(FacetGrowthReport { n, trials, rows, fitted_constant, loglog_slope })
}
