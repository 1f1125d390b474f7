//! Exact binomials and factorials. Values are kept as big integers and only
//! converted to the target scalar at the end.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::Scalar;

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

pub fn to_ratio(value: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(value.clone()))
}

pub fn to_scalar<S: Scalar>(value: &BigUint) -> S {
    S::from_ratio(&to_ratio(value))
}

/// `P(T = t)` when `r` replicas are spread uniformly over `n` slots and `T`
/// counts those landing in the first `alpha`: `C(alpha,t) C(n-alpha,r-t) / C(n,r)`.
pub fn hypergeometric_pmf<S: Scalar>(t: u64, n: u64, r: u64, alpha: u64) -> S {
    if t > r || r > n || alpha > n {
        return S::zero();
    }
    let num = binomial(alpha, t) * binomial(n - alpha, r - t);
    let den = binomial(n, r);
    S::from_ratio(&BigRational::new(
        BigInt::from(num),
        BigInt::from(den),
    ))
}
