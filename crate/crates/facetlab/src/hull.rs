//! Sampling of random ±1 polytopes and exact facet enumeration.
//!
//! All hyperplane data are integers: normals come from cofactor expansions of
//! ±1 point differences, so by Hadamard's bound the entries fit in i64 far
//! beyond the configured dimension cap (intermediates run in i128 and are
//! checked on conversion). The incremental hull merges coplanar insertions
//! into facet supports instead of fanning simplicial facets — ±1 polytopes
//! are massively degenerate and correctness under degeneracy is the point.
//! A brute-force n-subset oracle provides the independent cross-check.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{dyadic_from_f64, dyadic_sum_sign};
use crate::prob::{ProbEstimate, MC_Z};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Default exact-mode dimension cap for facet enumeration.
pub const HULL_DIM_CAP: usize = 10;

/// Hard kernel limit: i64 normals are guaranteed by Hadamard only this far.
pub const HULL_DIM_LIMIT: usize = 16;

/// Combinatorial cap for the brute-force oracle: C(N_distinct, n) subsets.
pub const BRUTEFORCE_CAP: u128 = 10_000_000;

/// N sampled ±1 vertex rows: the raw material of the random polytope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignMatrix {
    rows: Vec<Vec<i64>>,
    n: usize,
    seed: u64,
    dedup_count: usize,
}

fn count_duplicates(rows: &[Vec<i64>]) -> usize {
    let mut seen = HashSet::new();
    rows.iter().filter(|r| !seen.insert(r.as_slice().to_vec())).count()
}

impl SignMatrix {
    /// N i.i.d. uniform ±1 rows; row i depends only on (seed, i), so draws
    /// with the same seed and growing N are nested.
    pub fn sample_polytope(n: usize, big_n: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > 30 {
            return Err(Error::Parameter(format!("sample_polytope: n = {n} not in 1..=30")));
        }
        // N counts draws, not distinct points: repetitions are expected and
        // retained, so N may exceed 2^n
        if big_n == 0 || big_n > 10_000_000 {
            return Err(Error::Parameter(format!(
                "sample_polytope: N = {big_n} not in 1..=10^7"
            )));
        }
        let rows: Vec<Vec<i64>> = (0..big_n)
            .map(|i| {
                let mask = CounterRng::new(seed, i as u64).sign_mask(n);
                (0..n)
                    .map(|j| if mask >> j & 1 == 1 { -1 } else { 1 })
                    .collect()
            })
            .collect();
        let dedup_count = count_duplicates(&rows);
        Ok(Self { rows, n, seed, dedup_count })
    }

    /// All 2^n vertices exactly once.
    pub fn exhaustive(n: usize) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::CapExceeded(format!("exhaustive: n = {n} not in 1..=16")));
        }
        let rows = (0..1u64 << n)
            .map(|mask| {
                (0..n)
                    .map(|j| if mask >> j & 1 == 1 { -1 } else { 1 })
                    .collect()
            })
            .collect();
        Ok(Self { rows, n, seed: 0, dedup_count: 0 })
    }

    /// Explicit rows (entries must be exactly ±1).
    pub fn from_rows(rows: Vec<Vec<i64>>, seed: u64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Parameter("from_rows: need at least one row".into()));
        }
        let n = rows[0].len();
        if n == 0 || n > 30 {
            return Err(Error::Parameter(format!("from_rows: n = {n} not in 1..=30")));
        }
        for r in &rows {
            if r.len() != n || r.iter().any(|&v| v != 1 && v != -1) {
                return Err(Error::Domain("from_rows: entries must be ±1, fixed width".into()));
            }
        }
        let dedup_count = count_duplicates(&rows);
        Ok(Self { rows, n, seed, dedup_count })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dedup_count(&self) -> usize {
        self.dedup_count
    }

    /// Distinct rows in first-appearance order (facet supports index these).
    pub fn distinct(&self) -> Vec<Vec<i64>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for r in &self.rows {
            if seen.insert(r.clone()) {
                out.push(r.clone());
            }
        }
        out
    }
}

/// One inequality ⟨normal, y⟩ ≤ offset of the H-representation: primitive
/// outward integer normal, integer offset, and the supporting vertex set
/// (indices into the distinct rows) attaining equality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
    pub support: Vec<usize>,
}

/// Result of facet enumeration. `facets` is empty when the points do not
/// affinely span (dim_affine < n).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HullResult {
    pub dim_affine: usize,
    pub facets: Vec<Facet>,
    pub f_count: usize,
}

impl HullResult {
    fn dim(&self) -> Option<usize> {
        self.facets.first().map(|f| f.normal.len())
    }
}

// ---------------------------------------------------------------------------
// exact integer linear algebra (i128 intermediates)

fn dot(a: &[i64], p: &[i64]) -> i128 {
    a.iter().zip(p).map(|(&x, &y)| x as i128 * y as i128).sum()
}

/// Fraction-free (Bareiss) row reduction; returns the rank.
fn bareiss_rank(mut m: Vec<Vec<i128>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev = 1i128;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..rows {
            for j in c + 1..cols {
                m[r][j] = (m[r][j] * m[rank][c] - m[r][c] * m[rank][j]) / prev;
            }
            m[r][c] = 0;
        }
        prev = m[rank][c];
        rank += 1;
    }
    rank
}

/// Bareiss determinant of a square matrix.
fn det_bareiss(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1; // empty determinant, used by the n = 1 hyperplane case
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for c in 0..n {
        let Some(pivot) = (c..n).find(|&r| m[r][c] != 0) else {
            return 0;
        };
        if pivot != c {
            m.swap(c, pivot);
            sign = -sign;
        }
        for r in c + 1..n {
            for j in c + 1..n {
                m[r][j] = (m[r][j] * m[c][c] - m[r][c] * m[c][j]) / prev;
            }
            m[r][c] = 0;
        }
        prev = m[c][c];
    }
    sign * m[n - 1][n - 1]
}

/// Affine rank of the indexed points (0 for a single point).
fn affine_rank(pts: &[Vec<i64>], idx: &[usize]) -> usize {
    if idx.len() <= 1 {
        return 0;
    }
    let base = &pts[idx[0]];
    let m: Vec<Vec<i128>> = idx[1..]
        .iter()
        .map(|&i| {
            pts[i]
                .iter()
                .zip(base)
                .map(|(&x, &y)| (x - y) as i128)
                .collect()
        })
        .collect();
    bareiss_rank(m)
}

/// Greedy affinely independent subset of the candidates, up to `target`
/// points; candidates scanned in the given order (deterministic).
fn independent_subset(pts: &[Vec<i64>], cand: &[usize], target: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    for &c in cand {
        if chosen.len() == target {
            break;
        }
        chosen.push(c);
        if affine_rank(pts, &chosen) != chosen.len() - 1 {
            chosen.pop();
        }
    }
    chosen
}

/// Primitive integer hyperplane through n affinely independent points:
/// normal by cofactor expansion of the difference matrix, offset through the
/// first point. None if the points are affinely dependent.
fn hyperplane_through(pts: &[Vec<i64>], idx: &[usize]) -> Result<Option<(Vec<i64>, i64)>> {
    let n = pts[0].len();
    debug_assert_eq!(idx.len(), n);
    let base = &pts[idx[0]];
    let diffs: Vec<Vec<i128>> = idx[1..]
        .iter()
        .map(|&i| {
            pts[i]
                .iter()
                .zip(base)
                .map(|(&x, &y)| (x - y) as i128)
                .collect()
        })
        .collect();
    let mut a = Vec::with_capacity(n);
    for j in 0..n {
        let minor: Vec<Vec<i128>> = diffs
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect();
        let d = det_bareiss(minor);
        a.push(if j % 2 == 0 { d } else { -d });
    }
    if a.iter().all(|&v| v == 0) {
        return Ok(None);
    }
    let g = a
        .iter()
        .fold(0i128, |acc, &v| acc.gcd(&v));
    let b128 = a.iter().zip(base).map(|(&x, &y)| x * y as i128).sum::<i128>() / g;
    let a64: Option<Vec<i64>> = a.iter().map(|&v| i64::try_from(v / g).ok()).collect();
    let (Some(a64), Ok(b64)) = (a64, i64::try_from(b128)) else {
        return Err(Error::CapExceeded(
            "hyperplane normal exceeds i64 (dimension beyond the exact kernel)".into(),
        ));
    };
    Ok(Some((a64, b64)))
}

// ---------------------------------------------------------------------------
// support bitsets

type Bits = Vec<u64>;

fn bits_new(v: usize) -> Bits {
    vec![0; v.div_ceil(64)]
}

fn bits_set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn bits_and_count(a: &Bits, b: &Bits) -> u32 {
    a.iter().zip(b).map(|(&x, &y)| (x & y).count_ones()).sum()
}

fn bits_and_indices(a: &Bits, b: &Bits) -> Vec<usize> {
    let mut out = Vec::new();
    for (w, (&x, &y)) in a.iter().zip(b).enumerate() {
        let mut m = x & y;
        while m != 0 {
            out.push(w * 64 + m.trailing_zeros() as usize);
            m &= m - 1;
        }
    }
    out
}

fn bits_indices(a: &Bits) -> Vec<usize> {
    let mut out = Vec::new();
    for (w, &x) in a.iter().enumerate() {
        let mut m = x;
        while m != 0 {
            out.push(w * 64 + m.trailing_zeros() as usize);
            m &= m - 1;
        }
    }
    out
}

struct IncFacet {
    a: Vec<i64>,
    b: i64,
    supp: Bits,
}

/// Outward orientation against the scaled interior reference point:
/// ⟨a, ref_s⟩ < b·den must hold. Flips (a, b) if needed.
fn orient_outward(a: &mut Vec<i64>, b: &mut i64, ref_s: &[i128], den: i128) {
    let d: i128 = a.iter().zip(ref_s).map(|(&x, &r)| x as i128 * r).sum();
    debug_assert!(d != *b as i128 * den, "reference point on facet hyperplane");
    if d > *b as i128 * den {
        for v in a.iter_mut() {
            *v = -*v;
        }
        *b = -*b;
    }
}

fn scan_support(pts: &[Vec<i64>], inserted: &[usize], a: &[i64], b: i64, v: usize) -> Bits {
    let mut s = bits_new(v);
    for &i in inserted {
        if dot(a, &pts[i]) == b as i128 {
            bits_set(&mut s, i);
        }
    }
    s
}

// ---------------------------------------------------------------------------
// incremental hull

/// Exact facet enumeration with the default dimension cap (n ≤ 10).
pub fn facet_enum(points: &SignMatrix) -> Result<HullResult> {
    facet_enum_capped(points, HULL_DIM_CAP)
}

/// Exact facet enumeration, incremental beneath-beyond with explicit
/// degeneracy handling; cap configurable up to the i64 kernel limit.
pub fn facet_enum_capped(points: &SignMatrix, cap: usize) -> Result<HullResult> {
    let n = points.n();
    if cap > HULL_DIM_LIMIT {
        return Err(Error::Parameter(format!(
            "facet_enum cap {cap} beyond kernel limit {HULL_DIM_LIMIT}"
        )));
    }
    if n > cap {
        return Err(Error::CapExceeded(format!("facet_enum: n = {n} > cap {cap}")));
    }
    let pts = points.distinct();
    let v = pts.len();

    // greedy affine basis of n+1 points
    let all: Vec<usize> = (0..v).collect();
    let basis = independent_subset(&pts, &all, n + 1);
    let dim_affine = basis.len() - 1;
    if dim_affine < n {
        return Ok(HullResult { dim_affine, facets: vec![], f_count: 0 });
    }

    // interior reference: the simplex centroid, scaled by n+1
    let ref_s: Vec<i128> = (0..n)
        .map(|j| basis.iter().map(|&i| pts[i][j] as i128).sum())
        .collect();
    let den = (n + 1) as i128;

    let mut inserted: Vec<usize> = basis.clone();
    let in_basis: HashSet<usize> = basis.iter().copied().collect();
    let mut facets: Vec<IncFacet> = Vec::new();
    for k in 0..=n {
        let idx: Vec<usize> = basis
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &p)| p)
            .collect();
        let (mut a, mut b) = hyperplane_through(&pts, &idx)?
            .expect("basis facets are affinely independent");
        orient_outward(&mut a, &mut b, &ref_s, den);
        let supp = scan_support(&pts, &inserted, &a, b, v);
        facets.push(IncFacet { a, b, supp });
    }

    for ip in 0..v {
        if in_basis.contains(&ip) {
            continue;
        }
        let p = &pts[ip];
        let mut vis: Vec<usize> = Vec::new();
        let mut hid: Vec<usize> = Vec::new();
        for (fi, f) in facets.iter_mut().enumerate() {
            let s = dot(&f.a, p) - f.b as i128;
            if s > 0 {
                vis.push(fi);
            } else {
                if s == 0 {
                    bits_set(&mut f.supp, ip);
                }
                hid.push(fi);
            }
        }
        inserted.push(ip);
        if vis.is_empty() {
            continue;
        }

        let hidden_keys: HashSet<(Vec<i64>, i64)> = hid
            .iter()
            .map(|&h| (facets[h].a.clone(), facets[h].b))
            .collect();
        let mut new_keys: BTreeSet<(Vec<i64>, i64)> = BTreeSet::new();
        for &fv in &vis {
            for &fh in &hid {
                if bits_and_count(&facets[fv].supp, &facets[fh].supp) < n as u32 - 1 {
                    continue;
                }
                let common = bits_and_indices(&facets[fv].supp, &facets[fh].supp);
                // a horizon ridge spans an (n-2)-flat
                let ind = independent_subset(&pts, &common, n - 1);
                if ind.len() < n - 1 {
                    continue;
                }
                let mut plane = ind;
                plane.push(ip);
                let (mut a, mut b) = hyperplane_through(&pts, &plane)?
                    .expect("ridge points plus exterior point are independent");
                orient_outward(&mut a, &mut b, &ref_s, den);
                if !hidden_keys.contains(&(a.clone(), b)) {
                    new_keys.insert((a, b));
                }
            }
        }

        let vis_set: HashSet<usize> = vis.into_iter().collect();
        let mut next: Vec<IncFacet> = facets
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !vis_set.contains(i))
            .map(|(_, f)| f)
            .collect();
        for (a, b) in new_keys {
            let supp = scan_support(&pts, &inserted, &a, b, v);
            next.push(IncFacet { a, b, supp });
        }
        facets = next;
    }

    let mut out: Vec<Facet> = facets
        .into_iter()
        .map(|f| Facet {
            support: bits_indices(&f.supp),
            normal: f.a,
            offset: f.b,
        })
        .collect();
    out.sort_by(|x, y| (&x.normal, x.offset).cmp(&(&y.normal, y.offset)));
    let f_count = out.len();
    Ok(HullResult { dim_affine: n, facets: out, f_count })
}

// ---------------------------------------------------------------------------
// brute-force oracle

fn binomial_u128(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc = 1u128;
    for i in 0..k.min(n - k) {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn for_each_combination(pool: &[usize], k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let need = k - cur.len();
        for i in start..=pool.len().saturating_sub(need) {
            cur.push(pool[i]);
            rec(pool, k, i + 1, cur, f);
            cur.pop();
        }
    }
    if k == 0 {
        f(&[]);
        return;
    }
    rec(pool, k, 0, &mut Vec::with_capacity(k), f);
}

/// Reference oracle: every n-subset of the distinct points, hyperplane via
/// cofactor expansion, keep one-sided hyperplanes, merge coplanar supports.
/// Parallelized over the first subset element with an exact set merge.
pub fn facet_enum_bruteforce(points: &SignMatrix) -> Result<HullResult> {
    let n = points.n();
    let pts = points.distinct();
    let v = pts.len();
    if binomial_u128(v as u128, n as u128) > BRUTEFORCE_CAP {
        return Err(Error::CapExceeded(format!(
            "facet_enum_bruteforce: C({v}, {n}) exceeds {BRUTEFORCE_CAP}"
        )));
    }
    let all: Vec<usize> = (0..v).collect();
    let dim_affine = independent_subset(&pts, &all, n + 1).len() - 1;
    if dim_affine < n {
        return Ok(HullResult { dim_affine, facets: vec![], f_count: 0 });
    }

    let keys: BTreeSet<(Vec<i64>, i64)> = (0..=v.saturating_sub(n))
        .into_par_iter()
        .map(|first| {
            let mut local: BTreeSet<(Vec<i64>, i64)> = BTreeSet::new();
            let rest: Vec<usize> = (first + 1..v).collect();
            for_each_combination(&rest, n - 1, &mut |tail| {
                let mut idx = Vec::with_capacity(n);
                idx.push(first);
                idx.extend_from_slice(tail);
                let Ok(Some((mut a, mut b))) = hyperplane_through(&pts, &idx) else {
                    return;
                };
                let mut pos = false;
                let mut neg = false;
                for p in &pts {
                    match dot(&a, p).cmp(&(b as i128)) {
                        std::cmp::Ordering::Greater => pos = true,
                        std::cmp::Ordering::Less => neg = true,
                        std::cmp::Ordering::Equal => {}
                    }
                    if pos && neg {
                        return;
                    }
                }
                if pos {
                    for c in a.iter_mut() {
                        *c = -*c;
                    }
                    b = -b;
                }
                local.insert((a, b));
            });
            local
        })
        .reduce(BTreeSet::new, |mut x, y| {
            x.extend(y);
            x
        });

    let inserted: Vec<usize> = (0..v).collect();
    let mut facets: Vec<Facet> = keys
        .into_iter()
        .map(|(a, b)| Facet {
            support: bits_indices(&scan_support(&pts, &inserted, &a, b, v)),
            normal: a,
            offset: b,
        })
        .collect();
    facets.sort_by(|x, y| (&x.normal, x.offset).cmp(&(&y.normal, y.offset)));
    let f_count = facets.len();
    Ok(HullResult { dim_affine: n, facets, f_count })
}

// ---------------------------------------------------------------------------
// verification

/// Per-facet ridge audit cap: skip the recursive reference when the support
/// is too rich to enumerate.
const RIDGE_AUDIT_CAP: u128 = 200_000;

/// Full audit; the empty report means the H-representation verifies.
pub fn verify_h_rep_report(points: &SignMatrix, hull: &HullResult) -> Vec<String> {
    let n = points.n();
    let mut report = Vec::new();
    if hull.dim_affine != n {
        report.push(format!("dim_affine = {} != n = {n}", hull.dim_affine));
        return report;
    }
    let pts = points.distinct();
    if hull.facets.is_empty() {
        report.push("full-dimensional hull with no facets".into());
        return report;
    }

    let mut seen = HashSet::new();
    for (fi, f) in hull.facets.iter().enumerate() {
        if f.normal.len() != n {
            report.push(format!("facet {fi}: normal has wrong dimension"));
            continue;
        }
        let g = f.normal.iter().fold(0i64, |acc, &x| acc.gcd(&x));
        if g != 1 {
            report.push(format!("facet {fi}: normal not primitive (gcd {g})"));
        }
        if !seen.insert((f.normal.clone(), f.offset)) {
            report.push(format!("facet {fi}: duplicate normal+offset"));
        }
        let mut support_found = Vec::new();
        for (pi, p) in pts.iter().enumerate() {
            match dot(&f.normal, p).cmp(&(f.offset as i128)) {
                std::cmp::Ordering::Greater => {
                    report.push(format!("facet {fi}: vertex {pi} infeasible"));
                }
                std::cmp::Ordering::Equal => support_found.push(pi),
                std::cmp::Ordering::Less => {}
            }
        }
        if support_found != f.support {
            report.push(format!("facet {fi}: support mismatch"));
        }
        if f.support.len() < n || affine_rank(&pts, &f.support) != n - 1 {
            report.push(format!("facet {fi}: support does not span the hyperplane"));
        }
    }
    if !report.is_empty() {
        return report;
    }

    // ridge-counting audit: every ridge of every facet must be shared with
    // exactly one other facet; ridges of a facet are enumerated independently
    // by a recursive hull of its support (projected out along a nonzero
    // normal coordinate, an affine bijection on the hyperplane).
    if n >= 3 {
        // pair-derived ridges: common supports of affine rank n-2
        let mut ridge_owners: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::new();
        for i in 0..hull.facets.len() {
            for j in i + 1..hull.facets.len() {
                let common: Vec<usize> = hull.facets[i]
                    .support
                    .iter()
                    .copied()
                    .filter(|x| hull.facets[j].support.binary_search(x).is_ok())
                    .collect();
                if common.len() >= n - 1 && affine_rank(&pts, &common) == n - 2 {
                    ridge_owners.entry(common).or_default().extend([i, j]);
                }
            }
        }
        for (ridge, owners) in &ridge_owners {
            if owners.len() != 2 {
                report.push(format!(
                    "ridge {ridge:?} incident to {} facets (expected 2)",
                    owners.len()
                ));
            }
        }
        for (fi, f) in hull.facets.iter().enumerate() {
            let s = f.support.len() as u128;
            if binomial_u128(s, n as u128 - 1) > RIDGE_AUDIT_CAP {
                continue; // audit skipped for oversized supports
            }
            let drop_j = f.normal.iter().position(|&c| c != 0).unwrap();
            let projected: Vec<Vec<i64>> = f
                .support
                .iter()
                .map(|&pi| {
                    pts[pi]
                        .iter()
                        .enumerate()
                        .filter(|&(c, _)| c != drop_j)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect();
            let sub = match SignMatrix::from_rows(projected, 0) {
                Ok(m) => m,
                Err(e) => {
                    report.push(format!("facet {fi}: projection failed: {e}"));
                    continue;
                }
            };
            let sub_hull = match facet_enum_bruteforce(&sub) {
                Ok(h) => h,
                Err(e) => {
                    report.push(format!("facet {fi}: ridge recursion failed: {e}"));
                    continue;
                }
            };
            let expected: BTreeSet<Vec<usize>> = sub_hull
                .facets
                .iter()
                .map(|rf| rf.support.iter().map(|&k| f.support[k]).collect())
                .collect();
            let found: BTreeSet<Vec<usize>> = ridge_owners
                .iter()
                .filter(|(_, owners)| owners.contains(&fi))
                .map(|(r, _)| r.clone())
                .collect();
            if expected != found {
                report.push(format!(
                    "facet {fi}: ridge set mismatch ({} expected, {} found)",
                    expected.len(),
                    found.len()
                ));
            }
        }
    }
    report
}

/// True iff the H-representation passes the full audit.
pub fn verify_h_rep(points: &SignMatrix, hull: &HullResult) -> bool {
    verify_h_rep_report(points, hull).is_empty()
}

// ---------------------------------------------------------------------------
// membership and volume

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// Exact classification of a (dyadic-rational f64) point against the
/// H-representation.
pub fn membership(y: &[f64], hull: &HullResult) -> Result<Membership> {
    let Some(n) = hull.dim() else {
        return Err(Error::Precondition("membership: hull not full-dimensional".into()));
    };
    if hull.dim_affine != n || y.len() != n {
        return Err(Error::Precondition("membership: dimension mismatch".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("membership: non-finite coordinate".into()));
    }
    let terms_y: Vec<(i128, i32)> = y.iter().map(|&v| dyadic_from_f64(v)).collect();
    let mut boundary = false;
    for f in &hull.facets {
        // sign of <a, y> - b, exactly
        let mut terms: Vec<(i128, i32)> = f
            .normal
            .iter()
            .zip(&terms_y)
            .map(|(&a, &(m, e))| (a as i128 * m, e))
            .collect();
        terms.push((-(f.offset as i128), 0));
        match dyadic_sum_sign(&terms) {
            1 => return Ok(Membership::Outside),
            0 => boundary = true,
            _ => {}
        }
    }
    Ok(if boundary { Membership::Boundary } else { Membership::Inside })
}

/// Fraction of the cube volume covered by the hull, by exact membership of
/// grid-uniform samples (coordinates k/2^20 - 1, so every sign test is an
/// i128 integer comparison). Deterministic given the seed; sample t depends
/// only on (seed, t), so sweeps over nested hulls share random numbers.
pub fn volume_fraction_mc(hull: &HullResult, trials: u64, seed: u64) -> Result<ProbEstimate> {
    let Some(n) = hull.dim() else {
        return Err(Error::Precondition("volume_fraction_mc: hull not full-dimensional".into()));
    };
    if trials == 0 {
        return Err(Error::Parameter("volume_fraction_mc: trials = 0".into()));
    }
    const GRID_LOG2: u32 = 20;
    let block = 4096u64;
    let blocks = trials.div_ceil(block);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|bk| {
            let mut rng = CounterRng::new(seed, bk);
            let lo = bk * block;
            let hi = (lo + block).min(trials);
            let mut h = 0u64;
            let mut c = vec![0i128; n];
            for _ in lo..hi {
                for cj in c.iter_mut() {
                    let k = rng.next_u64() & ((1 << (GRID_LOG2 + 1)) - 1);
                    *cj = k as i128 - (1 << GRID_LOG2);
                }
                let inside = hull.facets.iter().all(|f| {
                    let d: i128 = f
                        .normal
                        .iter()
                        .zip(&c)
                        .map(|(&a, &cj)| a as i128 * cj)
                        .sum();
                    d <= (f.offset as i128) << GRID_LOG2
                });
                if inside {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let v = hits as f64 / trials as f64;
    Ok(ProbEstimate::MonteCarlo {
        value: v,
        half_width: MC_Z * (v * (1.0 - v) / trials as f64).sqrt(),
        trials,
    })
}

// ---------------------------------------------------------------------------
// serialization

/// Vertex set plus H-representation, the serialized form (text and JSON
/// mirror, bit-exact round-trip).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HullDocument {
    pub n: usize,
    pub rows: Vec<Vec<i64>>,
    pub facets: Vec<(Vec<i64>, i64)>,
}

impl HullDocument {
    pub fn new(points: &SignMatrix, hull: &HullResult) -> Self {
        Self {
            n: points.n(),
            rows: points.rows().to_vec(),
            facets: hull
                .facets
                .iter()
                .map(|f| (f.normal.clone(), f.offset))
                .collect(),
        }
    }

    /// Line format: `n N`, vertex rows, `facets k`, rows `a_1 ... a_n b`.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.rows.len());
        for r in &self.rows {
            s.push_str(&r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
            s.push('\n');
        }
        s.push_str(&format!("facets {}\n", self.facets.len()));
        for (a, b) in &self.facets {
            let mut row: Vec<String> = a.iter().map(|v| v.to_string()).collect();
            row.push(b.to_string());
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parameter(format!("hull text: {m}"));
        let mut lines = s.lines();
        let header = lines.next().ok_or_else(|| bad("missing header"))?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("bad n"))?;
        let big_n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("bad N"))?;
        let parse_row = |line: &str, width: usize| -> Result<Vec<i64>> {
            let row: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("non-integer entry"))?;
            if row.len() != width {
                return Err(bad("wrong row width"));
            }
            Ok(row)
        };
        let mut rows = Vec::with_capacity(big_n);
        for _ in 0..big_n {
            rows.push(parse_row(lines.next().ok_or_else(|| bad("missing vertex row"))?, n)?);
        }
        let fh = lines.next().ok_or_else(|| bad("missing facets header"))?;
        let k: usize = fh
            .strip_prefix("facets ")
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("bad facets header"))?;
        let mut facets = Vec::with_capacity(k);
        for _ in 0..k {
            let mut row = parse_row(lines.next().ok_or_else(|| bad("missing facet row"))?, n + 1)?;
            let b = row.pop().unwrap();
            facets.push((row, b));
        }
        if lines.next().is_some_and(|l| !l.trim().is_empty()) {
            return Err(bad("trailing content"));
        }
        Ok(Self { n, rows, facets })
    }
}
