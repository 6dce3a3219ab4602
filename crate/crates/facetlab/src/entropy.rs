//! Scalar entropy-type functions, gaussian tail envelopes and fixed constants.
//!
//! Everything here is a pure function of its arguments. Scalar evaluation is
//! 64-bit with ≤ 1e-12 relative error away from the endpoints ±1; the frozen
//! constants were derived once in extended precision and are pinned by tests.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point of the cube `C = [-1,1]^n`.
///
/// Coordinates are held exactly as given (every f64 is a dyadic rational,
/// which the exact enumeration oracles rely on). Operations that need the
/// open cube reject coordinates with |x_i| = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubePoint {
    coords: Vec<f64>,
}

impl CubePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Parameter("cube point needs dim >= 1".into()));
        }
        for (i, &c) in coords.iter().enumerate() {
            if !c.is_finite() || c.abs() > 1.0 {
                return Err(Error::Domain(format!(
                    "coordinate {i} = {c} outside [-1, 1]"
                )));
            }
        }
        Ok(Self { coords })
    }

    /// All-zero point (the cube center).
    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    /// Constant vector (c, ..., c).
    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; dim])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// True iff every coordinate lies in the open interval (-1, 1).
    pub fn is_open(&self) -> bool {
        self.coords.iter().all(|c| c.abs() < 1.0)
    }

    fn require_open(&self) -> Result<()> {
        if self.is_open() {
            Ok(())
        } else {
            Err(Error::Domain(
                "operation requires the open cube (-1,1)^n".into(),
            ))
        }
    }

    /// Tilt vector t with t_i = h(x_i); requires the open cube.
    pub fn tilt(&self) -> Result<TiltVector> {
        self.require_open()?;
        Ok(TiltVector {
            coords: self.coords.iter().map(|&c| h_fn(c).unwrap()).collect(),
        })
    }
}

/// The tilting parameter t = (h(x_1), ..., h(x_n)), also the normal direction
/// of the tangent halfspace at x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltVector {
    coords: Vec<f64>,
}

impl TiltVector {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, &t| m.max(t.abs()))
    }
}

/// The entropy-type function f on [-1,1], with f(±1) = log 2.
///
/// Evaluated as f(x) = ½ log(1-x²) + |x| atanh|x|, an algebraic regrouping
/// of ½(1+x)log(1+x) + ½(1-x)log(1-x) that avoids the cancellation of the
/// direct form near 0 and is exactly even in x.
pub fn f_entropy(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 {
        return Err(Error::Domain(format!("f_entropy: {x} outside [-1, 1]")));
    }
    let a = x.abs();
    if a == 1.0 {
        // the 0·log 0 = 0 limit convention
        return Ok(std::f64::consts::LN_2);
    }
    Ok(0.5 * (-x * x).ln_1p() + a * a.atanh())
}

/// F(x) = (1/n) Σ f(x_i), the coordinate mean of f. Lies in [0, log 2].
pub fn big_f(x: &CubePoint) -> f64 {
    let n = x.dim() as f64;
    x.coords().iter().map(|&c| f_entropy(c).unwrap()).sum::<f64>() / n
}

/// n·F(x) = Σ f(x_i).
pub fn n_big_f(x: &CubePoint) -> f64 {
    x.coords().iter().map(|&c| f_entropy(c).unwrap()).sum()
}

/// h(x) = ½ log((1+x)/(1-x)) = atanh(x) on (-1,1); h = f′, inverse of tanh.
///
/// Rejects |x| ≥ 1 so downstream tilt vectors stay finite. Exactly odd.
pub fn h_fn(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() >= 1.0 {
        return Err(Error::Domain(format!("h_fn: {x} outside (-1, 1)")));
    }
    Ok(x.abs().atanh().copysign(x))
}

/// Derivative h′(x) = 1/(1-x²).
pub fn h_deriv(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() >= 1.0 {
        return Err(Error::Domain(format!("h_deriv: {x} outside (-1, 1)")));
    }
    Ok(1.0 / ((1.0 - x) * (1.0 + x)))
}

/// ψ(t) = log cosh(t), overflow-safe for large |t|.
pub fn psi_fn(t: f64) -> f64 {
    // log cosh t = |t| - log 2 + log(1 + e^{-2|t|}), valid for every t
    let a = t.abs();
    a - std::f64::consts::LN_2 + (-2.0 * a).exp().ln_1p()
}

/// g(t) = f(tanh t)/t² on (0,∞): strictly decreasing, limit ½ at 0⁺.
pub fn g_ratio(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("g_ratio: t = {t} not in (0, inf)")));
    }
    Ok(f_entropy(t.tanh())? / (t * t))
}

/// The gaussian tail envelope pair (m₁(x), m₂(x)) with
/// m₁(x) e^{-x²/2}/x ≤ ∫ₓ^∞ φ ≤ m₂(x) e^{-x²/2}/x for x > 0.
pub fn m1_m2(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("m1_m2: x = {x} not in (0, inf)")));
    }
    let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let m1 = inv_sqrt_2pi * 2.0 * x / (x + (x * x + 4.0).sqrt());
    let m2 = inv_sqrt_2pi * 4.0 * x / (3.0 * x + (x * x + 8.0).sqrt());
    Ok((m1, m2))
}

/// The fixed constants of the construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedConstants {
    /// gamma = tanh(1/(48 √(2π)))
    pub gamma: f64,
    /// Montgomery-Smith universal constant c = 4 log 12
    pub mont_smith_c: f64,
    /// minimal integer k with m₁(√(2k)/cosh(h(gamma))) ≥ 5/(6√(2π))
    pub k_gamma: u32,
    /// Berry–Esseen constant factor
    pub berry_esseen_c: f64,
    /// lower-bound prefactor √f(gamma)/(10 h(gamma))
    pub cor_prefactor: f64,
}

/// Computes the fixed constants; k_gamma by exact integer search, not assumed.
pub fn fixed_constants() -> FixedConstants {
    let gamma = (1.0 / (48.0 * (2.0 * std::f64::consts::PI).sqrt())).tanh();
    let h_gamma = h_fn(gamma).unwrap();
    let target = 5.0 / (6.0 * (2.0 * std::f64::consts::PI).sqrt());
    let mut k_gamma = 0;
    for k in 1..=64u32 {
        let (m1, _) = m1_m2((2.0 * f64::from(k)).sqrt() / h_gamma.cosh()).unwrap();
        if m1 >= target {
            k_gamma = k;
            break;
        }
    }
    assert!(k_gamma > 0, "integer search for k(gamma) failed");
    FixedConstants {
        gamma,
        mont_smith_c: 4.0 * 12f64.ln(),
        k_gamma,
        berry_esseen_c: 6.0,
        cor_prefactor: f_entropy(gamma).unwrap().sqrt() / (10.0 * h_gamma),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn f_entropy_pinned_values() {
        assert_eq!(f_entropy(0.0).unwrap(), 0.0);
        assert_eq!(f_entropy(1.0).unwrap(), std::f64::consts::LN_2);
        assert_eq!(f_entropy(-1.0).unwrap(), std::f64::consts::LN_2);
        // high-precision direct evaluation
        assert_relative_eq!(
            f_entropy(0.5).unwrap(),
            0.13081203594113696,
            max_relative = 1e-12
        );
        assert!(f_entropy(1.5).is_err());
        assert!(f_entropy(f64::NAN).is_err());
    }

    #[test]
    fn big_f_examples() {
        for n in [1, 5, 17] {
            assert_eq!(big_f(&CubePoint::zeros(n)), 0.0);
        }
        let c = CubePoint::constant(9, 0.5).unwrap();
        assert_relative_eq!(big_f(&c), 0.13081203594113696, max_relative = 1e-12);
        let p = CubePoint::new(vec![0.0, 1.0]).unwrap();
        assert_relative_eq!(
            big_f(&p),
            std::f64::consts::LN_2 / 2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn h_fn_pinned_values() {
        assert_eq!(h_fn(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            h_fn(0.5).unwrap(),
            0.5 * 3f64.ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(h_fn(1f64.tanh()).unwrap(), 1.0, max_relative = 1e-14);
        assert!(h_fn(1.0).is_err());
        assert!(h_fn(-1.0).is_err());
    }

    #[test]
    fn psi_fn_values_and_legendre_identity() {
        assert_eq!(psi_fn(0.0), 0.0);
        assert_relative_eq!(
            psi_fn(50.0),
            50.0 - std::f64::consts::LN_2,
            max_relative = 1e-15
        );
        // -psi(h(x)) + x h(x) = f(x)
        let x = 0.3;
        let hx = h_fn(x).unwrap();
        assert_relative_eq!(
            -psi_fn(hx) + x * hx,
            f_entropy(x).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn g_ratio_limit_and_monotonicity() {
        let g = g_ratio(1e-4).unwrap();
        assert!(g > 0.4999 && g < 0.5, "g(1e-4) = {g}");
        assert!(g_ratio(0.5).unwrap() > g_ratio(1.0).unwrap());
        assert!(g_ratio(1.0).unwrap() > g_ratio(2.0).unwrap());
        // direct evaluation (two algebraic routes agree)
        assert_relative_eq!(
            g_ratio(1.0).unwrap(),
            0.3278133254727377,
            max_relative = 1e-12
        );
        assert!(g_ratio(0.0).is_err());
        assert!(g_ratio(-1.0).is_err());
    }

    /// Adaptive Simpson quadrature for the gaussian upper tail; oracle only.
    fn gauss_tail(x: f64) -> f64 {
        fn phi(u: f64) -> f64 {
            (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
        fn simpson(a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (phi(a) + 4.0 * phi(0.5 * (a + b)) + phi(b))
        }
        fn adapt(a: f64, b: f64, whole: f64, eps: f64) -> f64 {
            let m = 0.5 * (a + b);
            let l = simpson(a, m);
            let r = simpson(m, b);
            if (l + r - whole).abs() < 15.0 * eps {
                l + r + (l + r - whole) / 15.0
            } else {
                adapt(a, m, l, eps / 2.0) + adapt(m, b, r, eps / 2.0)
            }
        }
        // truncate at x + 14 std deviations; remainder below 1e-40 relative
        let b = x + 14.0;
        adapt(x, b, simpson(x, b), 1e-14)
    }

    #[test]
    fn m1_m2_sandwich_against_quadrature() {
        for x in [0.5, 1.0, 2.0, 4.0] {
            let (m1, m2) = m1_m2(x).unwrap();
            let tail = gauss_tail(x);
            let scale = (-x * x / 2.0).exp() / x;
            assert!(m1 * scale <= tail, "lower envelope fails at x = {x}");
            assert!(tail <= m2 * scale, "upper envelope fails at x = {x}");
            assert!(m1 < m2);
        }
    }

    #[test]
    fn m1_limit_and_crossing() {
        let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let (m1, m2) = m1_m2(1e3).unwrap();
        assert!((m1 - inv).abs() < 1e-3);
        assert!((m2 - inv).abs() < 1e-3);
        // m1 attains 5/(6 sqrt(2 pi)) at x = 5/sqrt(6) (7x = 5 sqrt(x^2+4))
        let x = 5.0 / 6f64.sqrt();
        let (m1, _) = m1_m2(x).unwrap();
        assert_relative_eq!(m1, 5.0 * inv / 6.0, max_relative = 1e-12);
        assert!(m1_m2(0.0).is_err());
    }

    #[test]
    fn fixed_constants_audit() {
        let c = fixed_constants();
        // frozen from extended-precision evaluation
        assert_relative_eq!(c.gamma, 0.008311106138639071, max_relative = 1e-13);
        assert_relative_eq!(c.mont_smith_c, 9.939626599152001, max_relative = 1e-14);
        assert!(c.gamma <= (1.0 / c.mont_smith_c).tanh());
        assert_eq!(c.k_gamma, 3);
        // minimality: k = 2 fails the search condition
        let target = 5.0 / (6.0 * (2.0 * std::f64::consts::PI).sqrt());
        let h_gamma = h_fn(c.gamma).unwrap();
        let (m1_at_2, _) = m1_m2(4f64.sqrt() / h_gamma.cosh()).unwrap();
        assert!(m1_at_2 < target);
        assert_relative_eq!(c.cor_prefactor, 0.070709457013444, max_relative = 1e-12);
        // serializes for audit output (float text round-trip is not
        // bit-exact on this serializer; 1 ulp of slack)
        let json = serde_json::to_string(&c).unwrap();
        let back: FixedConstants = serde_json::from_str(&json).unwrap();
        assert_relative_eq!(back.gamma, c.gamma, max_relative = 1e-15);
        assert_relative_eq!(back.mont_smith_c, c.mont_smith_c, max_relative = 1e-15);
        assert_relative_eq!(back.cor_prefactor, c.cor_prefactor, max_relative = 1e-15);
        assert_eq!(back.k_gamma, c.k_gamma);
    }

    #[test]
    fn f_prime_is_h_on_grid() {
        // central finite differences at 200 points
        let eps = 1e-6;
        for k in 0..200 {
            let x = -0.99 + 1.98 * (k as f64 + 0.5) / 200.0;
            let fd = (f_entropy(x + eps).unwrap() - f_entropy(x - eps).unwrap()) / (2.0 * eps);
            let hx = h_fn(x).unwrap();
            assert!(
                (fd - hx).abs() <= 1e-7 * hx.abs().max(1.0),
                "f' vs h mismatch at x = {x}: {fd} vs {hx}"
            );
        }
    }

    #[test]
    fn x_below_h_on_grid() {
        for k in 0..=999 {
            let x = k as f64 / 1000.0;
            assert!(x <= h_fn(x).unwrap() + 1e-15, "x <= h(x) fails at {x}");
        }
    }

    #[test]
    fn chain_326_on_random_points() {
        let mut rng = crate::rng::CounterRng::new(0xf326, 0);
        for &delta in &[0.1, 0.5, 0.9] {
            let fd = f_entropy(delta).unwrap();
            let hd = h_fn(delta).unwrap();
            for _ in 0..100 {
                let x = rng.uniform_in(-delta, delta);
                let fx = f_entropy(x).unwrap();
                let hx = h_fn(x).unwrap();
                assert!(fd / (hd * hd) * hx * hx <= fx * (1.0 + 1e-12) + 1e-300);
                assert!(fx <= 0.5 * hx * hx * (1.0 + 1e-12) + 1e-300);
            }
        }
    }

    proptest! {
        #[test]
        fn f_convex(x in -0.999f64..0.999, y in -0.999f64..0.999, lam in 0.0f64..1.0) {
            let (x, y) = if x < y { (x, y) } else { (y, x) };
            let m = lam * x + (1.0 - lam) * y;
            let lhs = f_entropy(m).unwrap();
            let rhs = lam * f_entropy(x).unwrap() + (1.0 - lam) * f_entropy(y).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn h_convex_on_nonnegatives(x in 0.0f64..0.999, y in 0.0f64..0.999, lam in 0.0f64..1.0) {
            let m = lam * x + (1.0 - lam) * y;
            let lhs = h_fn(m).unwrap();
            let rhs = lam * h_fn(x).unwrap() + (1.0 - lam) * h_fn(y).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn f_even_h_odd_bitwise(x in -0.9999f64..0.9999) {
            prop_assert_eq!(f_entropy(x).unwrap().to_bits(), f_entropy(-x).unwrap().to_bits());
            prop_assert_eq!(h_fn(x).unwrap().to_bits(), (-h_fn(-x).unwrap()).to_bits());
        }

        #[test]
        fn g_ratio_in_range(t in 1e-6f64..20.0) {
            let g = g_ratio(t).unwrap();
            prop_assert!(g > 0.0 && g < 0.5);
        }
    }
}
