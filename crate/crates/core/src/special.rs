//! Log-gamma and log-binomial in the scalar type.

use crate::scalar::{lit, Real};

// Stirling series coefficients B_{2k} / (2k (2k-1)).
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

/// `ln Γ(x)` for `x > 0`.
///
/// Shifts the argument above 15 by the recurrence and evaluates the Stirling
/// series there; relative error is at the level of the scalar's epsilon.
pub fn ln_gamma<R: Real>(x: R) -> R {
    assert!(x > R::zero(), "ln_gamma requires a positive argument");
    let threshold: R = lit(15.0);
    let mut shift = R::zero();
    let mut z = x;
    while z < threshold {
        shift = shift + z.ln();
        z = z + R::one();
    }
    let half: R = lit(0.5);
    let ln_2pi: R = (R::PI() + R::PI()).ln();
    let zinv = z.recip();
    let zinv2 = zinv * zinv;
    let mut series = R::zero();
    let mut pow = zinv;
    for c in STIRLING {
        series = series + lit::<R>(c) * pow;
        pow = pow * zinv2;
    }
    (z - half) * z.ln() - z + half * ln_2pi + series - shift
}

/// `ln n!`.
pub fn ln_factorial<R: Real>(n: u64) -> R {
    if n < 2 {
        return R::zero();
    }
    if n <= 32 {
        let mut acc = R::zero();
        for k in 2..=n {
            acc = acc + R::from_u64(k).unwrap().ln();
        }
        return acc;
    }
    ln_gamma(R::from_u64(n).unwrap() + R::one())
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial<R: Real>(n: u64, k: u64) -> R {
    if k > n {
        return R::neg_infinity();
    }
    let k = k.min(n - k);
    if k == 0 {
        return R::zero();
    }
    if n <= 60 {
        // exact product form for small arguments
        let mut acc = R::zero();
        for i in 0..k {
            acc = acc + R::from_u64(n - i).unwrap().ln() - R::from_u64(i + 1).unwrap().ln();
        }
        return acc;
    }
    ln_factorial::<R>(n) - ln_factorial::<R>(k) - ln_factorial::<R>(n - k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_integers_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..25u64 {
            fact *= n as f64;
            let lg = ln_gamma(n as f64 + 1.0);
            assert!((lg - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0), "n={n}");
        }
    }

    #[test]
    fn gamma_half() {
        let expected = std::f64::consts::PI.sqrt().ln();
        assert!((ln_gamma(0.5f64) - expected).abs() < 1e-14);
    }

    #[test]
    fn binomial_against_integer_table() {
        // Pascal's triangle in u128 as an independent oracle.
        let mut row = vec![1u128];
        for n in 1..=90u64 {
            let mut next = vec![1u128; (n + 1) as usize];
            for k in 1..n as usize {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
            for (k, &c) in row.iter().enumerate() {
                let got: f64 = ln_binomial(n, k as u64);
                let want = (c as f64).ln();
                assert!((got - want).abs() <= 1e-12 * want.max(1.0), "C({n},{k})");
            }
        }
    }

    #[test]
    fn large_factorial_is_finite() {
        let v: f64 = ln_factorial(1_000_000_000);
        assert!(v.is_finite() && v > 1e10);
        let f: f32 = ln_factorial(1000);
        assert!((f as f64 - ln_factorial::<f64>(1000)).abs() < 1.0);
    }
}
