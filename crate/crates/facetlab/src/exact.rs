//! Small exact-arithmetic helpers shared by the enumeration kernels.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Exact dyadic decomposition of a finite f64: returns (m, e) with x = m·2^e.
pub fn dyadic_from_f64(x: f64) -> (i128, i32) {
    assert!(x.is_finite());
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1i128 } else { 1 };
    let exp_field = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    let (mant, exp) = if exp_field == 0 {
        (frac, -1074) // subnormal
    } else {
        (frac | (1 << 52), exp_field - 1075)
    };
    (sign * mant, exp)
}

/// ceil(Σ mᵢ·2^{eᵢ} · 2^shift) computed exactly.
///
/// Used to reduce a real halfspace threshold to the integer comparison bound
/// for a snapped query.
pub fn ceil_dyadic_sum(terms: &[(i128, i32)], shift: i32) -> BigInt {
    // common exponent = min over terms
    let min_e = terms
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| e + shift)
        .min();
    let Some(min_e) = min_e else {
        return BigInt::zero();
    };
    let mut acc = BigInt::zero();
    for &(m, e) in terms {
        if m == 0 {
            continue;
        }
        acc += BigInt::from(m) << ((e + shift - min_e) as u64);
    }
    if min_e >= 0 {
        acc << (min_e as u64)
    } else {
        // ceil(acc / 2^{-min_e})
        let den = BigInt::one() << ((-min_e) as u64);
        let q = &acc / &den;
        if &q * &den < acc {
            q + 1
        } else {
            q
        }
    }
}

/// True iff Σ mᵢ·2^{eᵢ}·2^shift is an exact integer (the ceil is attained,
/// i.e. the threshold can tie with an enumeration atom).
pub fn dyadic_sum_is_integer(terms: &[(i128, i32)], shift: i32) -> bool {
    let min_e = terms
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| e + shift)
        .min();
    let Some(min_e) = min_e else { return true };
    if min_e >= 0 {
        return true;
    }
    let mut acc = BigInt::zero();
    for &(m, e) in terms {
        if m != 0 {
            acc += BigInt::from(m) << ((e + shift - min_e) as u64);
        }
    }
    (acc.abs() & ((BigInt::one() << ((-min_e) as u64)) - BigInt::one())).is_zero()
}

/// Sign of Σ mᵢ·2^{eᵢ}: -1, 0 or +1, computed exactly.
pub fn dyadic_sum_sign(terms: &[(i128, i32)]) -> i32 {
    let min_e = terms
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| e)
        .min();
    let Some(min_e) = min_e else { return 0 };
    let mut acc = BigInt::zero();
    for &(m, e) in terms {
        if m != 0 {
            acc += BigInt::from(m) << ((e - min_e) as u64);
        }
    }
    match acc.sign() {
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
        num_bigint::Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn decompose_roundtrip() {
        for &x in &[0.0, 1.0, -0.5, 0.1, 1e-300, -3.7e12, f64::MIN_POSITIVE / 8.0] {
            let (m, e) = dyadic_from_f64(x);
            // reconstruct in two exact power-of-two steps so the scale
            // factor itself never underflows
            let half = e / 2;
            let back = m as f64 * 2f64.powi(half) * 2f64.powi(e - half);
            assert_eq!(back, x, "roundtrip failed for {x}");
        }
    }

    #[test]
    fn sum_sign_cases() {
        assert_eq!(dyadic_sum_sign(&[]), 0);
        assert_eq!(dyadic_sum_sign(&[(0, 5)]), 0);
        assert_eq!(
            dyadic_sum_sign(&[dyadic_from_f64(0.75), dyadic_from_f64(-0.75)]),
            0
        );
        assert_eq!(
            dyadic_sum_sign(&[dyadic_from_f64(0.1), dyadic_from_f64(-0.3)]),
            -1
        );
        assert_eq!(dyadic_sum_sign(&[(3, -2), (-1, -1)]), 1); // 3/4 - 1/2
    }

    #[test]
    fn ceil_sum_matches_float_on_easy_cases() {
        let terms = vec![dyadic_from_f64(0.75), dyadic_from_f64(-0.5)];
        // 0.25 * 4 = 1 exactly
        assert_eq!(ceil_dyadic_sum(&terms, 2).to_i64().unwrap(), 1);
        assert!(dyadic_sum_is_integer(&terms, 2));
        // 0.25 * 2 = 0.5 -> ceil 1, not integer
        assert_eq!(ceil_dyadic_sum(&terms, 1).to_i64().unwrap(), 1);
        assert!(!dyadic_sum_is_integer(&terms, 1));
    }
}
