//! Replica-count distributions in polynomial form, `Λ(x) = Σ Λ_r x^r`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SUM_TOLERANCE: f64 = 1e-9;

/// Probability mass over replica counts; entry `r` is the probability that a
/// user sends `r` replicas.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeDistribution<S = f64> {
    coeffs: Vec<S>,
    r_max: usize,
}

impl<S: Scalar> DegreeDistribution<S> {
    /// Validates a probability vector. Mass may sit at any index, including 0
    /// and 1, which is what split distributions need.
    pub fn new(coeffs: Vec<S>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let mut sum = S::zero();
        for (index, c) in coeffs.iter().enumerate() {
            if *c < S::zero() || c.to_f64().is_nan() {
                return Err(Error::NegativeProbability {
                    index,
                    value: c.to_f64(),
                });
            }
            sum = sum + c.clone();
        }
        let total = sum.to_f64();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum: total });
        }
        let r_max = coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0);
        Ok(DegreeDistribution { coeffs, r_max })
    }

    /// A base IRSA distribution: every user sends at least two replicas.
    pub fn base(coeffs: Vec<S>) -> Result<Self> {
        let dist = Self::new(coeffs)?;
        for degree in 0..dist.coeffs.len().min(2) {
            if !dist.coeffs[degree].is_zero() {
                return Err(Error::LowDegreeMass {
                    degree,
                    value: dist.coeffs[degree].to_f64(),
                });
            }
        }
        Ok(dist)
    }

    /// `x^r`: every user sends exactly `r` replicas.
    pub fn point_mass(r: usize) -> Self {
        let mut coeffs = vec![S::zero(); r + 1];
        coeffs[r] = S::one();
        DegreeDistribution { coeffs, r_max: r }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Probability of degree `r`; zero past the end of the vector.
    pub fn prob(&self, r: usize) -> S {
        self.coeffs.get(r).cloned().unwrap_or_else(S::zero)
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    /// Degrees carrying nonzero mass, with their probabilities.
    pub fn support(&self) -> impl Iterator<Item = (usize, &S)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
    }

    pub fn is_point_mass(&self) -> bool {
        self.support().count() == 1
    }

    /// `E[R] = Σ r Λ_r`.
    pub fn mean(&self) -> S {
        self.support()
            .fold(S::zero(), |acc, (r, c)| acc + S::from_u64(r as u64) * c.clone())
    }

    pub fn cast<T: Scalar>(&self) -> DegreeDistribution<T> {
        DegreeDistribution {
            coeffs: self.coeffs.iter().map(|c| T::from_ratio(&c.to_ratio())).collect(),
            r_max: self.r_max,
        }
    }

    /// Draws a degree by inversion of the cumulative mass.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.is_point_mass() {
            return self.r_max;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (r, c) in self.support() {
            acc += c.to_f64();
            if u < acc {
                return r;
            }
        }
        self.r_max
    }
}

impl DegreeDistribution<f64> {
    /// Parses a comma-separated coefficient list such as `0,0,0.5,0.5`.
    pub fn parse(text: &str) -> Result<Self> {
        let coeffs = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("coefficient {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }
}

impl<S: Scalar> std::fmt::Display for DegreeDistribution<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(r, c)| format!("{:.4} x^{r}", c.to_f64()))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Mean of an integer-valued pmf given as a slice.
pub(crate) fn pmf_mean<S: Scalar>(pmf: &[S]) -> S {
    pmf.iter()
        .enumerate()
        .fold(S::zero(), |acc, (t, p)| acc + S::from_u64(t as u64) * p.clone())
}
