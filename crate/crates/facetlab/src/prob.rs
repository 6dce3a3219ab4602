//! Ground-truth probabilities for halfspace events over uniform ±1 vectors.
//!
//! Exact answers come from a Gray-code enumeration kernel running on snapped
//! integer queries: the normal is scaled to fixed point at 2^48 and the
//! threshold is reduced, in exact arithmetic, to an integer comparison bound,
//! so ties (the closed-halfspace boundary) are counted exactly. Everything
//! verified downstream is a statement about the snapped query, which is
//! returned as the witness.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{n_big_f, CubePoint};
use crate::exact::{ceil_dyadic_sum, dyadic_from_f64};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Default exact-enumeration cap: 2^22 sign vectors per probability.
pub const ENUM_CAP: usize = 22;

/// Fixed-point scale for snapped normals.
pub const SNAP_SCALE_LOG2: i32 = 48;

/// Confidence multiplier for Monte Carlo half-widths.
pub const MC_Z: f64 = 3.0;

/// A probability, either exactly (dyadic rational with denominator 2^n) or
/// as a Monte Carlo mean with confidence half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProbEstimate {
    Exact { num: u128, den_log2: u32 },
    MonteCarlo { value: f64, half_width: f64, trials: u64 },
}

impl ProbEstimate {
    pub fn value(&self) -> f64 {
        match self {
            ProbEstimate::Exact { num, den_log2 } => {
                *num as f64 / 2f64.powi(*den_log2 as i32)
            }
            ProbEstimate::MonteCarlo { value, .. } => *value,
        }
    }

    pub fn half_width(&self) -> f64 {
        match self {
            ProbEstimate::Exact { .. } => 0.0,
            ProbEstimate::MonteCarlo { half_width, .. } => *half_width,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ProbEstimate::Exact { .. })
    }
}

/// The halfspace event ⟨normal, X⟩ ≥ threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceQuery {
    pub normal: Vec<f64>,
    pub threshold: f64,
}

impl HalfspaceQuery {
    pub fn new(normal: Vec<f64>, threshold: f64) -> Result<Self> {
        if normal.iter().any(|c| !c.is_finite()) || !threshold.is_finite() {
            return Err(Error::Domain("halfspace query must be finite".into()));
        }
        Ok(Self { normal, threshold })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }
}

/// Integer form of a query: event Σ aᵢ Xᵢ ≥ bound with aᵢ at scale 2^48.
#[derive(Debug, Clone)]
pub struct SnappedQuery {
    scaled: Vec<i64>,
    bound: i64,
    /// bound after clamping: Trivial(true) = always inside, Trivial(false) =
    /// never inside; None = genuine comparison
    trivial: Option<bool>,
}

impl SnappedQuery {
    /// Snap a general query. The normal is normalized by its max-norm first
    /// (the event is scale-invariant), then rounded to fixed point; the
    /// threshold is reduced exactly to the integer bound.
    pub fn from_query(q: &HalfspaceQuery) -> Self {
        let m = q.normal.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        if m == 0.0 {
            return Self {
                scaled: vec![0; q.normal.len()],
                bound: 0,
                trivial: Some(q.threshold <= 0.0),
            };
        }
        let scale = 2f64.powi(SNAP_SCALE_LOG2);
        let scaled: Vec<i64> = q
            .normal
            .iter()
            .map(|&c| (c / m * scale).round() as i64)
            .collect();
        let theta = q.threshold / m;
        let bound = ceil_dyadic_sum(&[dyadic_from_f64(theta)], SNAP_SCALE_LOG2);
        Self::with_exact_bound(scaled, bound)
    }

    /// Tangent query at x: normal = snapped tilt direction, threshold the
    /// exact value ⟨a, x⟩ so that x lies on the bounding hyperplane.
    pub fn tangent(x: &CubePoint) -> Result<Self> {
        let t = x.tilt()?;
        Ok(Self::through_point(t.coords(), x))
    }

    /// Query with the given direction whose hyperplane passes exactly
    /// through x (threshold computed in exact arithmetic from the snapped
    /// direction).
    pub fn through_point(direction: &[f64], x: &CubePoint) -> Self {
        assert_eq!(direction.len(), x.dim());
        let m = direction.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        if m == 0.0 {
            // degenerate direction: event 0 >= 0, always true
            return Self {
                scaled: vec![0; x.dim()],
                bound: 0,
                trivial: Some(true),
            };
        }
        let scale = 2f64.powi(SNAP_SCALE_LOG2);
        let scaled: Vec<i64> = direction
            .iter()
            .map(|&c| (c / m * scale).round() as i64)
            .collect();
        let terms: Vec<(i128, i32)> = scaled
            .iter()
            .zip(x.coords())
            .map(|(&a, &xi)| {
                let (mant, exp) = dyadic_from_f64(xi);
                (a as i128 * mant, exp)
            })
            .collect();
        let bound = ceil_dyadic_sum(&terms, 0);
        Self::with_exact_bound(scaled, bound)
    }

    fn with_exact_bound(scaled: Vec<i64>, bound: BigInt) -> Self {
        let reach: i128 = scaled.iter().map(|&a| (a as i128).abs()).sum();
        let trivial = if bound > BigInt::from(reach) {
            Some(false)
        } else if bound <= BigInt::from(-reach) {
            Some(true)
        } else {
            None
        };
        let bound = bound.to_i64().unwrap_or(if trivial == Some(false) {
            i64::MAX
        } else {
            i64::MIN
        });
        Self { scaled, bound, trivial }
    }

    pub fn dim(&self) -> usize {
        self.scaled.len()
    }

    /// The snapped integer normal at scale 2^48.
    pub fn scaled(&self) -> &[i64] {
        &self.scaled
    }

    /// The integer comparison bound (event: Σ aᵢXᵢ ≥ bound).
    pub fn bound_i64(&self) -> i64 {
        self.bound
    }

    /// The snapped query back in real coordinates (exact: scale 2^-48).
    pub fn as_query(&self) -> HalfspaceQuery {
        let inv = 2f64.powi(-SNAP_SCALE_LOG2);
        HalfspaceQuery {
            normal: self.scaled.iter().map(|&a| a as f64 * inv).collect(),
            threshold: match self.trivial {
                Some(true) => f64::NEG_INFINITY.max(-1e308),
                Some(false) => 1e308,
                None => self.bound as f64 * inv,
            },
        }
    }

    #[inline]
    fn holds(&self, dot: i64) -> bool {
        dot >= self.bound
    }

    /// Evaluate the event on the sign vector encoded by `mask`
    /// (bit i set means X_i = -1).
    pub fn eval_mask(&self, mask: u64) -> bool {
        if let Some(t) = self.trivial {
            return t;
        }
        let mut dot = 0i64;
        for (i, &a) in self.scaled.iter().enumerate() {
            dot += if mask >> i & 1 == 1 { -a } else { a };
        }
        self.holds(dot)
    }

    /// Exact count of sign vectors in the halfspace, by Gray-code walk.
    pub fn count(&self) -> u64 {
        let n = self.dim();
        assert!(n <= 26, "enumeration kernel limited to n <= 26");
        let total = 1u64 << n;
        if let Some(t) = self.trivial {
            return if t { total } else { 0 };
        }
        let chunk = 1u64 << 14;
        if total <= chunk {
            self.count_range(0, total)
        } else {
            (0..total / chunk)
                .into_par_iter()
                .map(|c| self.count_range(c * chunk, chunk))
                .sum()
        }
    }

    /// Count over masks in [start, start+len): Gray-code order within the
    /// range, O(1) dot update per step.
    fn count_range(&self, start: u64, len: u64) -> u64 {
        let mut mask = start ^ (start >> 1);
        let mut dot = 0i64;
        for (i, &a) in self.scaled.iter().enumerate() {
            dot += if mask >> i & 1 == 1 { -a } else { a };
        }
        let mut hits = u64::from(self.holds(dot));
        for idx in start + 1..start + len {
            let j = idx.trailing_zeros() as usize;
            let a2 = self.scaled[j] << 1;
            if mask >> j & 1 == 1 {
                dot += a2; // bit clears: X_j flips -1 -> +1
            } else {
                dot -= a2;
            }
            mask ^= 1 << j;
            hits += u64::from(self.holds(dot));
        }
        hits
    }

    /// Monte Carlo hit count over `trials` uniform sign vectors, counter-RNG
    /// seeded; deterministic and schedule-independent.
    pub fn mc_count(&self, trials: u64, seed: u64) -> u64 {
        let n = self.dim();
        assert!(n <= 64);
        let block = 8192u64;
        let blocks = trials.div_ceil(block);
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = CounterRng::new(seed, b);
                let lo = b * block;
                let hi = (lo + block).min(trials);
                let mut hits = 0u64;
                for _ in lo..hi {
                    if self.eval_mask(rng.sign_mask(n)) {
                        hits += 1;
                    }
                }
                hits
            })
            .sum()
    }
}

/// Exact probability of a halfspace event (snapped query), n ≤ cap.
pub fn exact_halfspace_prob_capped(q: &HalfspaceQuery, cap: usize) -> Result<ProbEstimate> {
    let n = q.dim();
    if n == 0 {
        return Err(Error::Parameter("empty query".into()));
    }
    if n > cap {
        return Err(Error::CapExceeded(format!(
            "n = {n} exceeds enumeration cap {cap}; use mc_halfspace_prob"
        )));
    }
    let snapped = SnappedQuery::from_query(q);
    Ok(ProbEstimate::Exact {
        num: snapped.count() as u128,
        den_log2: n as u32,
    })
}

/// Exact probability with the default cap (n ≤ 22).
pub fn exact_halfspace_prob(q: &HalfspaceQuery) -> Result<ProbEstimate> {
    exact_halfspace_prob_capped(q, ENUM_CAP)
}

/// Monte Carlo estimate; deterministic given the seed, half-width at z = 3.
pub fn mc_halfspace_prob(q: &HalfspaceQuery, trials: u64, seed: u64) -> Result<ProbEstimate> {
    if trials < 10_000 {
        return Err(Error::Parameter("mc_halfspace_prob needs trials >= 10^4".into()));
    }
    if q.dim() == 0 || q.dim() > 64 {
        return Err(Error::Parameter("mc_halfspace_prob needs 1 <= n <= 64".into()));
    }
    let snapped = SnappedQuery::from_query(q);
    let hits = snapped.mc_count(trials, seed);
    let v = hits as f64 / trials as f64;
    Ok(ProbEstimate::MonteCarlo {
        value: v,
        half_width: MC_Z * (v * (1.0 - v) / trials as f64).sqrt(),
        trials,
    })
}

/// Tangent-halfspace certificate: evaluates P(Σ tᵢ(Xᵢ - xᵢ) ≥ 0) with
/// t = h(x) and returns it with exp(-nF(x)). The probability never exceeds
/// the bound (exponential Chebyshev on the tangent direction).
pub fn chernoff_cert(x: &CubePoint, seed: u64) -> Result<(ProbEstimate, f64)> {
    let bound = (-n_big_f(x)).exp();
    let snapped = SnappedQuery::tangent(x)?;
    let n = x.dim();
    let est = if n <= ENUM_CAP {
        ProbEstimate::Exact {
            num: snapped.count() as u128,
            den_log2: n as u32,
        }
    } else {
        let trials = 1_000_000;
        let hits = snapped.mc_count(trials, seed);
        let v = hits as f64 / trials as f64;
        ProbEstimate::MonteCarlo {
            value: v,
            half_width: MC_Z * (v * (1.0 - v) / trials as f64).sqrt(),
            trials,
        }
    };
    Ok((est, bound))
}

/// Montgomery-Smith tail lower bound check with c = 4 log 12:
/// lhs = P(Σ sᵢXᵢ ≥ c⁻¹ a ‖s‖₂) against rhs = c⁻¹ e^{-c a²}, applicable
/// when a ≤ ‖s‖₂/‖s‖∞.
pub fn montgomery_smith_check(
    s: &[f64],
    a: f64,
) -> Result<(ProbEstimate, f64, bool)> {
    let norm2 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_inf = s.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if norm_inf == 0.0 {
        return Err(Error::Domain("montgomery_smith_check: zero vector".into()));
    }
    if !(a > 0.0) {
        return Err(Error::Domain("montgomery_smith_check: a must be > 0".into()));
    }
    let c = 4.0 * 12f64.ln();
    let applicable = a <= norm2 / norm_inf;
    let q = HalfspaceQuery::new(s.to_vec(), a * norm2 / c)?;
    let lhs = exact_halfspace_prob(&q)?;
    let rhs = (-c * a * a).exp() / c;
    Ok((lhs, rhs, applicable))
}

/// Which form of the binomial-tail lower bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailBoundForm {
    /// The full product expression, valid for m > 2/(1-gamma).
    Full,
    /// c(gamma) m^{-3/2} e^{-m f(gamma)}, valid for gamma ≤ tanh(1/(48√(2π)))
    /// and m > 2.
    Simplified,
}

/// Exact binomial tail P(Σᵢ₌₁ᵐ (Xᵢ - γ) ≥ 0) against the corresponding
/// lower-bound expression. Equal positive weights reduce the event to the
/// binomial tail; the threshold index is computed in exact arithmetic from
/// the dyadic value of γ.
pub fn binomial_tail_lower_bound(m: u32, gamma: f64, form: TailBoundForm) -> Result<(ProbEstimate, f64)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain("binomial_tail_lower_bound: gamma must be in (0,1)".into()));
    }
    if m > 64 {
        return Err(Error::CapExceeded("binomial_tail_lower_bound: m > 64".into()));
    }
    match form {
        TailBoundForm::Full => {
            if f64::from(m) <= 2.0 / (1.0 - gamma) {
                return Err(Error::Precondition(format!(
                    "full form needs m > 2/(1-gamma) = {}",
                    2.0 / (1.0 - gamma)
                )));
            }
        }
        TailBoundForm::Simplified => {
            let gamma_max = (1.0 / (48.0 * (2.0 * std::f64::consts::PI).sqrt())).tanh();
            if gamma > gamma_max {
                return Err(Error::Precondition(format!(
                    "simplified form needs gamma <= {gamma_max}"
                )));
            }
            if m <= 2 {
                return Err(Error::Precondition("simplified form needs m > 2".into()));
            }
        }
    }

    // exact k_min: least k with 2k - m >= m*gamma, gamma taken as its exact
    // dyadic f64 value
    let (g_mant, g_exp) = dyadic_from_f64(gamma);
    let terms = [(i128::from(m), 0i32), (i128::from(m) * g_mant, g_exp)];
    // k >= m(1+gamma)/2  <=>  k >= ceil((m + m*gamma) * 2^-1)
    let k_min = ceil_dyadic_sum(&terms, -1)
        .to_u32()
        .ok_or_else(|| Error::Domain("binomial_tail_lower_bound: threshold overflow".into()))?;

    let mut num: u128 = 0;
    let mut binom: u128 = 1; // C(m, 0)
    for k in 0..=m {
        if k >= k_min {
            num += binom;
        }
        if k < m {
            binom = binom * u128::from(m - k) / u128::from(k + 1);
        }
    }
    let lhs = ProbEstimate::Exact {
        num,
        den_log2: m,
    };

    let mf = f64::from(m);
    let fg = crate::entropy::f_entropy(gamma)?;
    let rhs = match form {
        TailBoundForm::Full => {
            (2.0 / (std::f64::consts::PI * (1.0 - gamma * gamma))).sqrt()
                * (1.0 - gamma - 2.0 / mf)
                / (1.0 + gamma + 2.0 / mf)
                * (1.0 / (12.0 * mf + 1.0)
                    - 1.0 / (12.0 * mf) * 4.0 / (1.0 - (gamma + 2.0 / mf).powi(2)))
                    .exp()
                * mf.powf(-1.5)
                * (-mf * fg).exp()
        }
        TailBoundForm::Simplified => {
            let c_gamma = (2.0 / (std::f64::consts::PI * (1.0 - gamma * gamma))).sqrt()
                * (1.0 - 3.0 * gamma)
                / (5.0 + 3.0 * gamma)
                * (-1.0 / (9.0 - (3.0 * gamma + 2.0).powi(2))).exp();
            c_gamma * mf.powf(-1.5) * (-mf * fg).exp()
        }
    };
    Ok((lhs, rhs))
}

/// Candidate-set strategy for the one-sided depth certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QUpperStrategy {
    /// Tangent halfspace only.
    Tangent,
    /// Tangent plus the 2n coordinate halfspaces.
    Coords,
    /// Tangent, coordinates, and k coordinate-descent refinements from
    /// random starts.
    Multistart { starts: u32, seed: u64 },
}

/// Upper bound for the halfspace depth q(x): minimum exact probability over
/// a candidate set of halfspaces through x. Any candidate upper-bounds the
/// infimum; the minimizing (snapped) witness is returned.
pub fn q_upper(
    x: &CubePoint,
    strategy: QUpperStrategy,
) -> Result<(ProbEstimate, HalfspaceQuery)> {
    let n = x.dim();
    if n > ENUM_CAP {
        return Err(Error::CapExceeded(format!("q_upper: n = {n} > {ENUM_CAP}")));
    }
    if !x.is_open() {
        return Err(Error::Domain("q_upper requires the open cube".into()));
    }

    let mut best: Option<(u64, SnappedQuery)> = None;
    let mut consider = |sq: SnappedQuery| {
        let c = sq.count();
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, sq));
        }
    };

    consider(SnappedQuery::tangent(x)?);

    if !matches!(strategy, QUpperStrategy::Tangent) {
        for i in 0..n {
            for sgn in [1.0, -1.0] {
                let mut dir = vec![0.0; n];
                dir[i] = sgn;
                consider(SnappedQuery::through_point(&dir, x));
            }
        }
    }

    if let QUpperStrategy::Multistart { starts, seed } = strategy {
        for s in 0..starts {
            let mut rng = CounterRng::new(seed, u64::from(s));
            let mut dir = rng.unit_vector(n);
            let mut cur = SnappedQuery::through_point(&dir, x).count();
            for pass in 0..3 {
                let step = 0.5 / f64::from(1 << pass);
                for i in 0..n {
                    for delta in [step, -step] {
                        let saved = dir[i];
                        dir[i] += delta;
                        let cand = SnappedQuery::through_point(&dir, x);
                        let c = cand.count();
                        if c < cur {
                            cur = c;
                        } else {
                            dir[i] = saved;
                        }
                    }
                }
            }
            consider(SnappedQuery::through_point(&dir, x));
        }
    }

    let (count, witness) = best.unwrap();
    Ok((
        ProbEstimate::Exact {
            num: count as u128,
            den_log2: n as u32,
        },
        witness.as_query(),
    ))
}
