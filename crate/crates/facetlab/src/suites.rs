//! Packaged verification suites.
//!
//! Each suite runs a batch of exact-oracle inequality checks or trend
//! checks and produces a CSV report (header row plus one row per check).
//! All randomness is counter-based, and rows are merged by sample index,
//! so a rerun with the same seed yields a byte-identical CSV body at any
//! thread count.

use rayon::prelude::*;

use crate::entropy::{fixed_constants, h_fn, n_big_f, CubePoint};
use crate::hull::{
    facet_enum, facet_enum_bruteforce, verify_h_rep, volume_fraction_mc, SignMatrix,
};
use crate::prob::{
    chernoff_cert, binomial_tail_lower_bound, montgomery_smith_check, TailBoundForm, SnappedQuery,
};
use crate::rng::CounterRng;
use crate::sandwich::{
    boundary_point, facet_growth_experiment, gauss_map_differential, weingarten_audit,
    BoundaryPoint,
};
use crate::tilted::{berry_esseen_gap_bound, local_limit_bounds, tilted_moments, TiltedDistribution};
use crate::{Error, Result};

/// Outcome of one suite: a CSV report plus pass/violation tallies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
    pub checked: usize,
    pub violations: usize,
}

impl SuiteReport {
    fn build(name: &str, header: &str, rows: Vec<(String, bool)>) -> Self {
        let checked = rows.len();
        let violations = rows.iter().filter(|(_, pass)| !pass).count();
        Self {
            name: name.to_string(),
            header: header.to_string(),
            rows: rows.into_iter().map(|(r, _)| r).collect(),
            checked,
            violations,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// The full CSV document: header row then data rows, '\n' terminated.
    pub fn csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

fn fmt(v: f64) -> String {
    // shortest round-trip decimal form; '.' separator, locale-independent
    format!("{v}")
}

fn random_point(rng: &mut CounterRng, n: usize, radius: f64) -> CubePoint {
    CubePoint::new((0..n).map(|_| rng.uniform_in(-radius, radius)).collect()).unwrap()
}

/// Tangent-halfspace certificate suite: exact enumeration of the event
/// probability against e^{-nF(x)}.
pub fn suite_chernoff(ns: &[usize], samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut jobs = Vec::new();
    for &n in ns {
        for i in 0..samples {
            jobs.push((n, i));
        }
    }
    let rows: Vec<(String, bool)> = jobs
        .into_par_iter()
        .map(|(n, i)| -> Result<(String, bool)> {
            let mut rng = CounterRng::new(seed, ((n as u64) << 32) | i as u64);
            let x = random_point(&mut rng, n, 0.9);
            let (est, bound) = chernoff_cert(&x, seed)?;
            let lhs = est.value();
            let pass = lhs <= bound;
            Ok((
                format!(
                    "chernoff-tangent,{n},{i},{},{},{},{}",
                    fmt(lhs),
                    fmt(bound),
                    fmt(bound - lhs),
                    u8::from(pass)
                ),
                pass,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::build(
        "chernoff-tangent",
        "check,n,sample,lhs,rhs,margin,pass",
        rows,
    ))
}

/// Local-limit bracket suite: the exact tangent-event probability must lie
/// between the sharp lower/upper expressions, and the change-of-measure
/// identity must reproduce it to 1e-10 relative.
pub fn suite_local_limit(ns: &[usize], samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut jobs = Vec::new();
    for &n in ns {
        for i in 0..samples {
            jobs.push((n, i));
        }
    }
    let rows: Vec<(String, bool)> = jobs
        .into_par_iter()
        .map(|(n, i)| -> Result<(String, bool)> {
            let mut rng = CounterRng::new(seed, ((n as u64) << 32) | i as u64);
            let mut x = random_point(&mut rng, n, 0.3);
            while x.coords().iter().all(|&c| c == 0.0) {
                x = random_point(&mut rng, n, 0.3);
            }
            let b = local_limit_bounds(&x)?;
            let exact =
                SnappedQuery::tangent(&x)?.count() as f64 / 2f64.powi(n as i32);
            let dist = TiltedDistribution::enumerate(&x)?;
            let identity = (-n_big_f(&x)).exp() * dist.laplace_integral();
            let rel_err = ((identity - exact) / exact).abs();
            let pass = b.lower <= exact && exact <= b.upper && rel_err <= 1e-10;
            Ok((
                format!(
                    "local-limit-bracket,{n},{i},{},{},{},{},{},{},{}",
                    fmt(b.n_f),
                    fmt(b.sigma),
                    fmt(b.lower),
                    fmt(exact),
                    fmt(b.upper),
                    fmt(rel_err),
                    u8::from(pass)
                ),
                pass,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::build(
        "local-limit-bracket",
        "check,n,sample,nF,sigma,lower,exact,upper,identity_rel_err,pass",
        rows,
    ))
}

/// Rademacher tail lower bound suite: exact P(ΣsᵢXᵢ ≥ a‖s‖₂/c) against
/// c⁻¹e^{-ca²} with c = 4 log 12, over admissible (s, a).
pub fn suite_tail_lower(count: usize, seed: u64) -> Result<SuiteReport> {
    let rows: Vec<(String, bool)> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<(String, bool)> {
            let mut rng = CounterRng::new(seed, i as u64);
            let n = 2 + (rng.next_u64() % 19) as usize; // 2..=20
            let mut s: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            if s.iter().all(|v| *v == 0.0) {
                s[0] = 1.0;
            }
            let norm2 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            let norm_inf = s.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let a = rng.uniform_in(0.01, norm2 / norm_inf);
            let (lhs, rhs, applicable) = montgomery_smith_check(&s, a)?;
            debug_assert!(applicable);
            let pass = applicable && lhs.value() >= rhs;
            Ok((
                format!(
                    "tail-lower-bound,{n},{i},{},{},{},{},{}",
                    fmt(a),
                    fmt(lhs.value()),
                    fmt(rhs),
                    fmt(lhs.value() - rhs),
                    u8::from(pass)
                ),
                pass,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::build(
        "tail-lower-bound",
        "check,n,sample,a,lhs,rhs,margin,pass",
        rows,
    ))
}

/// Binomial-tail lower bound suite: exact P(Σ(Xᵢ-γ) ≥ 0) against both
/// closed-form lower bounds, over every (m, γ) pair satisfying the
/// respective hypotheses.
pub fn suite_binomial_tail() -> Result<SuiteReport> {
    let gamma0 = fixed_constants().gamma;
    let mut rows = Vec::new();
    for m in 3u32..=24 {
        for &gamma in &[gamma0, 0.05, 0.1, 0.2] {
            for (label, form) in [
                ("full", TailBoundForm::Full),
                ("simplified", TailBoundForm::Simplified),
            ] {
                let (lhs, rhs) = match binomial_tail_lower_bound(m, gamma, form) {
                    Ok(v) => v,
                    Err(Error::Precondition(_)) => continue, // hypothesis fails
                    Err(e) => return Err(e),
                };
                let pass = lhs.value() >= rhs;
                rows.push((
                    format!(
                        "binomial-tail-lower,{m},{},{label},{},{},{},{}",
                        fmt(gamma),
                        fmt(lhs.value()),
                        fmt(rhs),
                        fmt(lhs.value() - rhs),
                        u8::from(pass)
                    ),
                    pass,
                ));
            }
        }
    }
    Ok(SuiteReport::build(
        "binomial-tail-lower",
        "check,m,gamma,form,lhs,rhs,margin,pass",
        rows,
    ))
}

/// Quantitative CLT gap suite: exact sup-distance between the standardized
/// tilted CDF and the Gaussian, against the third-moment bound.
pub fn suite_clt_gap(ns: &[usize], samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut jobs = Vec::new();
    for &n in ns {
        for i in 0..samples {
            jobs.push((n, i));
        }
    }
    let rows: Vec<(String, bool)> = jobs
        .into_par_iter()
        .map(|(n, i)| -> Result<(String, bool)> {
            let mut rng = CounterRng::new(seed, ((n as u64) << 32) | i as u64);
            let mut x = random_point(&mut rng, n, 0.9);
            while x.coords().iter().all(|&c| c == 0.0) {
                x = random_point(&mut rng, n, 0.9);
            }
            let bound = berry_esseen_gap_bound(&tilted_moments(&x)?)?;
            let gap = TiltedDistribution::enumerate(&x)?.sup_gap_vs_gaussian();
            let pass = gap <= bound;
            Ok((
                format!(
                    "clt-gap-bound,{n},{i},{},{},{},{}",
                    fmt(gap),
                    fmt(bound),
                    fmt(bound - gap),
                    u8::from(pass)
                ),
                pass,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::build(
        "clt-gap-bound",
        "check,n,sample,gap,bound,margin,pass",
        rows,
    ))
}

fn hull_case(label: &str, m: &SignMatrix, expect: Option<usize>) -> Result<(String, bool)> {
    let inc = facet_enum(m)?;
    let brute = facet_enum_bruteforce(m)?;
    let matches = inc.facets == brute.facets;
    let hrep_ok = verify_h_rep(m, &inc);
    let count_ok = expect.is_none_or(|e| inc.f_count == e);
    let pass = matches && hrep_ok && count_ok;
    Ok((
        format!(
            "hull-oracle,{label},{},{},{},{},{},{}",
            m.n(),
            m.rows().len(),
            inc.f_count,
            u8::from(matches),
            u8::from(hrep_ok),
            u8::from(pass)
        ),
        pass,
    ))
}

/// Hull oracle suite: incremental facet enumeration against the subset
/// brute-force oracle on random instances plus the fixed reference shapes.
pub fn suite_hull_oracle(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut rows: Vec<(String, bool)> = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(String, bool)> {
            let mut rng = CounterRng::new(seed, i as u64);
            let n = 3 + (rng.next_u64() % 4) as usize; // 3..=6
            let big_n = n + 1 + (rng.next_u64() % (20 - n as u64)) as usize; // n+1..=20
            let m = SignMatrix::sample_polytope(n, big_n, rng.next_u64())?;
            if facet_enum(&m)?.dim_affine < n {
                // degenerate draws carry no facet set to compare; record as checked
                return Ok((
                    format!("hull-oracle,random-{i},{n},{big_n},0,1,1,1"),
                    true,
                ));
            }
            hull_case(&format!("random-{i}"), &m, None)
        })
        .collect::<Result<_>>()?;

    // fixed reference shapes
    rows.push(hull_case("cube-3", &SignMatrix::exhaustive(3)?, Some(6))?);
    let tetra = SignMatrix::from_rows(
        vec![
            vec![1, 1, 1],
            vec![1, -1, -1],
            vec![-1, 1, -1],
            vec![-1, -1, 1],
        ],
        0,
    )?;
    rows.push(hull_case("even-tetrahedron", &tetra, Some(4))?);
    for n in [3usize, 5, 7] {
        let mut pts = vec![vec![1i64; n]];
        for i in 0..n {
            let mut p = vec![1i64; n];
            p[i] = -1;
            pts.push(p);
        }
        rows.push(hull_case(
            &format!("simplex-{n}"),
            &SignMatrix::from_rows(pts, 0)?,
            Some(n + 1),
        )?);
    }
    Ok(SuiteReport::build(
        "hull-oracle",
        "check,case,n,N,f_count,oracle_match,hrep_ok,pass",
        rows,
    ))
}

/// Frozen-constants audit: the small-γ threshold, its comparison with the
/// tail-bound constant, the integer search result, and the lower-bound
/// prefactor.
pub fn suite_constants() -> Result<SuiteReport> {
    let c = fixed_constants();
    let mut rows = Vec::new();
    let mut push = |label: &str, value: f64, expected: f64, pass: bool| {
        rows.push((
            format!(
                "constants-audit,{label},{},{},{}",
                fmt(value),
                fmt(expected),
                u8::from(pass)
            ),
            pass,
        ));
    };
    let gamma_ref = 0.008311106138639071_f64;
    push(
        "gamma-12-digits",
        c.gamma,
        gamma_ref,
        ((c.gamma - gamma_ref) / gamma_ref).abs() < 1e-12,
    );
    let tail_cap = (1.0 / (4.0 * 12f64.ln())).tanh();
    push("gamma-le-tail-cap", c.gamma, tail_cap, c.gamma <= tail_cap);
    push("k-integer-search", f64::from(c.k_gamma), 3.0, c.k_gamma == 3);
    let pref_ref = 0.070709457013444_f64;
    push(
        "prefactor",
        c.cor_prefactor,
        pref_ref,
        ((c.cor_prefactor - pref_ref) / pref_ref).abs() < 1e-4
            && (c.cor_prefactor - 0.0707).abs() < 1e-4,
    );
    Ok(SuiteReport::build(
        "constants-audit",
        "check,name,value,expected,pass",
        rows,
    ))
}

fn curvature_sample(n: usize, seed: u64, i: usize) -> Result<BoundaryPoint> {
    let mut rng = CounterRng::new(seed, ((n as u64) << 32) | i as u64);
    for _ in 0..10_000 {
        let theta = rng.unit_vector(n);
        let beta = rng.uniform_in(0.002, 0.02);
        let Ok(bp) = boundary_point(&theta, beta) else { continue };
        if bp.x.coords().iter().all(|c| c.abs() <= 0.3) {
            return Ok(bp);
        }
    }
    Err(Error::Degenerate(
        "curvature_sample: no point landed inside gamma' C".into(),
    ))
}

fn finite_difference_error(x: &[f64]) -> Result<f64> {
    let d = gauss_map_differential(x)?;
    let nu = |p: &[f64]| -> Result<Vec<f64>> {
        let t: Vec<f64> = p.iter().map(|&c| h_fn(c)).collect::<Result<_>>()?;
        let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(t.into_iter().map(|v| v / norm).collect())
    };
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for j in 0..x.len() {
        let mut hi = x.to_vec();
        let mut lo = x.to_vec();
        hi[j] += eps;
        lo[j] -= eps;
        let nh = nu(&hi)?;
        let nl = nu(&lo)?;
        for i in 0..x.len() {
            let fd = (nh[i] - nl[i]) / (2.0 * eps);
            let err = (fd - d[(i, j)]).abs() / d[(i, j)].abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// Level-surface curvature suite: the tangential/full trace identity, the
/// AM-GM product-curvature bound, the closed-form 1/κ lower bound at
/// γ' = 0.3, and a finite-difference audit of the Gauss-map differential.
pub fn suite_curvature(samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut jobs = Vec::new();
    for n in 3usize..=8 {
        for i in 0..samples {
            jobs.push((n, i));
        }
    }
    let rows: Vec<(String, bool)> = jobs
        .into_par_iter()
        .map(|(n, i)| -> Result<(String, bool)> {
            let bp = curvature_sample(n, seed, i)?;
            let a = weingarten_audit(&bp, 0.3)?;
            let trace_ok =
                (a.trace_w - a.trace_d).abs() <= 1e-9 * a.trace_d.abs().max(1.0);
            let amgm = (a.trace_w / (n as f64 - 1.0)).powi(n as i32 - 1);
            let amgm_ok = a.kappa <= amgm * (1.0 + 1e-10);
            let level_ok = 1.0 / a.kappa >= a.inv_kappa_level_bound * (1.0 - 1e-9);
            let fd_err = finite_difference_error(bp.x.coords())?;
            let fd_ok = fd_err <= 1e-6;
            let pass = trace_ok && amgm_ok && level_ok && fd_ok;
            Ok((
                format!(
                    "surface-curvature,{n},{i},{},{},{},{},{},{}",
                    fmt(a.trace_d),
                    fmt(a.trace_w),
                    fmt(a.kappa),
                    fmt(a.inv_kappa_level_bound),
                    fmt(fd_err),
                    u8::from(pass)
                ),
                pass,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::build(
        "surface-curvature",
        "check,n,sample,trace_d,trace_w,kappa,inv_kappa_level_bound,fd_err,pass",
        rows,
    ))
}

/// Volume trend suite: the estimated cube fraction covered by the hull of
/// a nested vertex sample must increase strictly across the N sweep, with
/// successive gaps exceeding the combined interval half-widths.
pub fn suite_volume_trend(
    n: usize,
    n_list: &[usize],
    mc_trials: u64,
    seed: u64,
) -> Result<SuiteReport> {
    if n_list.len() < 2 {
        return Err(Error::Parameter("suite_volume_trend: need >= 2 sweep points".into()));
    }
    let stats: Vec<(usize, usize, f64, f64)> = n_list
        .par_iter()
        .map(|&big_n| -> Result<(usize, usize, f64, f64)> {
            let m = SignMatrix::sample_polytope(n, big_n, seed)?;
            let h = facet_enum(&m)?;
            if h.dim_affine < n {
                return Err(Error::Degenerate(format!(
                    "suite_volume_trend: degenerate hull at N = {big_n}"
                )));
            }
            // common MC stream across the sweep: exact monotonicity of the
            // per-point indicator under nested hulls
            let v = volume_fraction_mc(&h, mc_trials, seed ^ 0x766f6c)?;
            Ok((big_n, h.f_count, v.value(), v.half_width()))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, &(big_n, f_count, value, hw)) in stats.iter().enumerate() {
        let pass = if i == 0 {
            true
        } else {
            let (_, _, pv, phw) = stats[i - 1];
            value > pv + 3.0 * (hw + phw)
        };
        rows.push((
            format!(
                "volume-trend,{n},{big_n},{f_count},{},{},{}",
                fmt(value),
                fmt(hw),
                u8::from(pass)
            ),
            pass,
        ));
    }
    Ok(SuiteReport::build(
        "volume-trend",
        "check,n,N,f_count,volume_fraction,half_width,pass",
        rows,
    ))
}

/// Facet trend suite: the mean facet count over repeated trials must be
/// nondecreasing along the N sweep.
pub fn suite_facet_trend(
    n: usize,
    n_list: &[usize],
    trials: u64,
    seed: u64,
) -> Result<SuiteReport> {
    let report = facet_growth_experiment(n, n_list, trials, seed)?;
    let mut rows = Vec::new();
    for (i, row) in report.rows.iter().enumerate() {
        let pass = i == 0 || row.mean >= report.rows[i - 1].mean;
        rows.push((
            format!(
                "facet-trend,{n},{},{},{},{},{},{},{}",
                row.big_n,
                fmt(row.mean),
                fmt(row.median),
                row.min,
                row.max,
                fmt(row.curve),
                u8::from(pass)
            ),
            pass,
        ));
    }
    Ok(SuiteReport::build(
        "facet-trend",
        "check,n,N,mean,median,min,max,curve,pass",
        rows,
    ))
}
