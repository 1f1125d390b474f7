//! Closed-form energy and loss model for two-step SIC.
//!
//! All functions are generic over [`Scalar`], so every quantity can be
//! evaluated in floating point or exactly over the rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::combin::{binomial, factorial, to_scalar};
use crate::dist::{pmf_mean, DegreeDistribution};
use crate::error::{Error, Result};
use crate::frame::FrameConfig;
use crate::scalar::Scalar;
use crate::stopset::StoppingSet;

/// Loads above this are outside the regime where the stopping-set
/// approximation is meaningful; results are still produced but flagged.
pub const APPROXIMATION_LOAD_LIMIT: f64 = 0.5;

/// How the expected transmitted replica count weights the first-part split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectationMode {
    /// Uses the marginal `Γ_t` inside the sum over degrees.
    PaperMarginal,
    /// Uses `P(T = t | R = r)`; the true expectation for any `Λ`.
    #[default]
    ExactConditional,
}

/// Placement factor of the stopping-set term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossForm {
    /// Divides by `C(alpha, t)^ν_t`: each user's placement has probability
    /// `1 / C(alpha, t)`.
    #[default]
    Denominator,
    /// Multiplies by `C(alpha, t)^ν_t`.
    PaperLiteral,
}

/// First-step decoding probability assigned to users with no first-part
/// replica.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroReplicaRule {
    /// Same `1 - P_a` as everybody else.
    Uniform,
    /// Zero: a silent user cannot be decoded.
    #[default]
    Silent,
}

impl std::fmt::Display for ExpectationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExpectationMode::PaperMarginal => "paper-marginal",
            ExpectationMode::ExactConditional => "exact-conditional",
        })
    }
}

impl std::fmt::Display for LossForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossForm::Denominator => "denominator",
            LossForm::PaperLiteral => "paper-literal",
        })
    }
}

impl std::fmt::Display for ZeroReplicaRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ZeroReplicaRule::Uniform => "uniform",
            ZeroReplicaRule::Silent => "silent",
        })
    }
}

/// `P(T = t | R = r)` for `t = 0..=r`, in product form:
/// `C(r,t) ∏_{i<t} (α-i)/(n-i) ∏_{j<r-t} (n-α-j)/(n-t-j)`.
pub fn conditional_split_pmf<S: Scalar>(r: usize, n: usize, alpha: usize) -> Result<Vec<S>> {
    if r > n {
        return Err(Error::TooManyReplicas { replicas: r, slots: n });
    }
    if alpha > n {
        return Err(Error::InvalidAlpha { alpha, min: 0, n });
    }
    let pmf = (0..=r)
        .map(|t| {
            let mut p: S = to_scalar(&binomial(r as u64, t as u64));
            for i in 0..t {
                p = p * ratio(alpha as i64 - i as i64, (n - i) as i64);
            }
            for j in 0..r - t {
                p = p * ratio(n as i64 - alpha as i64 - j as i64, (n - t - j) as i64);
            }
            p
        })
        .collect();
    Ok(pmf)
}

fn ratio<S: Scalar>(num: i64, den: i64) -> S {
    if num <= 0 {
        return S::zero();
    }
    S::from_ratio(&BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// Distribution of first-part replicas `Γ(x)` derived from a base `Λ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSplit<S = f64> {
    pub gamma: DegreeDistribution<S>,
    pub alpha: usize,
    pub n: usize,
    pub source: DegreeDistribution<S>,
}

impl<S: Scalar> GammaSplit<S> {
    /// `Γ_t`, zero past `r_max`.
    pub fn prob(&self, t: usize) -> S {
        self.gamma.prob(t)
    }

    pub fn coeffs(&self) -> &[S] {
        self.gamma.coeffs()
    }

    /// `E[T] = Σ t Γ_t`.
    pub fn mean_first_part(&self) -> S {
        pmf_mean(self.gamma.coeffs())
    }
}

/// Mixes the conditional split over the base distribution:
/// `Γ_t = Σ_r Λ_r P(T = t | R = r)`.
pub fn gamma_of<S: Scalar>(lambda: &DegreeDistribution<S>, n: usize, alpha: usize) -> Result<GammaSplit<S>> {
    let r_max = lambda.r_max();
    if alpha < r_max || alpha > n {
        return Err(Error::InvalidAlpha { alpha, min: r_max, n });
    }
    let mut coeffs = vec![S::zero(); r_max + 1];
    for (r, weight) in lambda.support() {
        for (t, p) in conditional_split_pmf::<S>(r, n, alpha)?.into_iter().enumerate() {
            coeffs[t] = coeffs[t].clone() + weight.clone() * p;
        }
    }
    Ok(GammaSplit {
        gamma: DegreeDistribution::new(coeffs)?,
        alpha,
        n,
        source: lambda.clone(),
    })
}

/// Expected replicas per user split by frame part.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaSplit<S> {
    pub first: S,
    pub second: S,
}

impl<S: Scalar> ReplicaSplit<S> {
    pub fn total(&self) -> S {
        self.first.clone() + self.second.clone()
    }
}

/// `E[K] = Σ_r Λ_r Σ_{t<=r} w(t, r) [t + (r - t)(1 - p_dec(t))]`, where the
/// weight `w` is the marginal `Γ_t` or the conditional `P(T = t | R = r)`
/// depending on `mode`.
pub fn expected_replicas_two_step<S, F>(
    lambda: &DegreeDistribution<S>,
    n: usize,
    alpha: usize,
    p_dec: F,
    mode: ExpectationMode,
) -> Result<ReplicaSplit<S>>
where
    S: Scalar,
    F: Fn(usize) -> S,
{
    let gamma = gamma_of(lambda, n, alpha)?;
    let mut first = S::zero();
    let mut second = S::zero();
    for (r, weight) in lambda.support() {
        let conditional = match mode {
            ExpectationMode::ExactConditional => Some(conditional_split_pmf::<S>(r, n, alpha)?),
            ExpectationMode::PaperMarginal => None,
        };
        for t in 0..=r {
            let w = match &conditional {
                Some(c) => c[t].clone(),
                None => gamma.prob(t),
            };
            let w = weight.clone() * w;
            let p = p_dec(t);
            if p < S::zero() || p > S::one() {
                return Err(Error::InvalidParameter(format!(
                    "decoding probability {} for t = {t} outside [0, 1]",
                    p.to_f64()
                )));
            }
            first = first + w.clone() * S::from_u64(t as u64);
            second = second + w * S::from_u64((r - t) as u64) * (S::one() - p);
        }
    }
    Ok(ReplicaSplit { first, second })
}

/// `φ = Σ_{i=0}^{ω-1} (-1)^{ω-1+i} (ω-1)!/i! (nG)^i`, accumulated exactly.
pub fn phi<S: Scalar>(omega: usize, n: usize, load: &S) -> S {
    let x = load.to_ratio() * BigRational::from_integer(BigInt::from(n));
    let top = factorial(omega.saturating_sub(1) as u64);
    let mut sum = BigRational::zero();
    let mut power = BigRational::one();
    for i in 0..omega {
        let coeff = BigRational::new(
            BigInt::from(top.clone()),
            BigInt::from(factorial(i as u64)),
        );
        let term = coeff * power.clone();
        if (omega - 1 + i).is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power *= x.clone();
    }
    S::from_ratio(&sum)
}

/// Approximate first-step loss and its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct LossEstimate<S> {
    /// Value clamped into `[0, 1]`.
    pub value: S,
    /// Unclamped sum of stopping-set terms.
    pub raw: S,
    pub clamped: bool,
    /// The catalog was empty (or filtered to nothing).
    pub vacuous: bool,
    /// Load beyond [`APPROXIMATION_LOAD_LIMIT`].
    pub regime_warning: bool,
}

/// Contribution of one stopping set to the loss approximation.
pub fn stopping_set_term<S: Scalar>(
    set: &StoppingSet,
    alpha: usize,
    gamma: &DegreeDistribution<S>,
    n: usize,
    load: &S,
    form: LossForm,
) -> S {
    let mut term = phi::<S>(set.users(), n, load)
        * S::from_u64(set.users() as u64)
        * S::from_u64(set.multiplicity())
        * to_scalar(&binomial(alpha as u64, set.slots() as u64));
    for t in 1..=set.max_degree() {
        let nu = set.nu(t);
        if nu == 0 {
            continue;
        }
        let placements: S = to_scalar(&binomial(alpha as u64, t as u64).pow(nu));
        let nu_fact: S = to_scalar(&factorial(nu as u64));
        let mut factor = gamma.prob(t).powu(nu) / nu_fact;
        factor = match form {
            LossForm::Denominator => {
                if placements.is_zero() {
                    S::zero()
                } else {
                    factor / placements
                }
            }
            LossForm::PaperLiteral => factor * placements,
        };
        term = term * factor;
    }
    term
}

/// Probability that a user with first-part distribution `gamma` is left in
/// a stopping set after peeling `alpha` slots.
pub fn analytic_loss<S: Scalar>(
    alpha: usize,
    gamma: &DegreeDistribution<S>,
    catalog: &[StoppingSet],
    n: usize,
    load: &S,
    form: LossForm,
) -> LossEstimate<S> {
    let raw = catalog.iter().fold(S::zero(), |acc, s| {
        acc + stopping_set_term(s, alpha, gamma, n, load, form)
    });
    let (value, clamped) = raw.clone().clamp_to(S::zero(), S::one());
    LossEstimate {
        value,
        raw,
        clamped,
        vacuous: catalog.is_empty(),
        regime_warning: load.to_f64() > APPROXIMATION_LOAD_LIMIT,
    }
}

/// Stopping sets whose users all have degrees present in `lambda`.
pub fn filter_for_base<S: Scalar>(catalog: &[StoppingSet], lambda: &DegreeDistribution<S>) -> Vec<StoppingSet> {
    catalog
        .iter()
        .filter(|s| (0..=s.max_degree()).all(|y| s.nu(y) == 0 || !lambda.prob(y).is_zero()))
        .cloned()
        .collect()
}

/// Packet loss over the whole frame: the stopping-set approximation with
/// `alpha = n` and the catalog restricted to degrees users can actually have.
pub fn plr_full_frame<S: Scalar>(
    n: usize,
    lambda: &DegreeDistribution<S>,
    catalog: &[StoppingSet],
    load: &S,
    form: LossForm,
) -> LossEstimate<S> {
    analytic_loss(n, lambda, &filter_for_base(catalog, lambda), n, load, form)
}

/// Energy-normalized throughput `G (1 - PLR) / E`.
pub fn eta<S: Scalar>(load: &S, plr: &S, energy: &S) -> Result<S> {
    if *energy <= S::zero() {
        return Err(Error::InvalidParameter(format!(
            "energy must be positive, got {}",
            energy.to_f64()
        )));
    }
    Ok(load.clone() * (S::one() - plr.clone()) / energy.clone())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticOptions {
    pub mode: ExpectationMode,
    pub form: LossForm,
    pub zero_replicas: ZeroReplicaRule,
}

/// Analytic operating point of the two-step scheme at one load.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport<S = f64> {
    pub load: S,
    pub alpha: usize,
    pub gamma: GammaSplit<S>,
    /// `E[K]`.
    pub expected_k: S,
    pub energy: S,
    pub energy_first: S,
    pub energy_second: S,
    /// Approximate first-step loss `P_a(alpha, Γ)`.
    pub first_step_loss: LossEstimate<S>,
    /// Approximate frame loss `P_a(n, Λ)`.
    pub plr: LossEstimate<S>,
    pub eta: S,
    pub options: AnalyticOptions,
}

impl<S: Scalar> EnergyReport<S> {
    pub fn clamped(&self) -> bool {
        self.first_step_loss.clamped || self.plr.clamped
    }

    pub fn regime_warning(&self) -> bool {
        self.first_step_loss.regime_warning
    }

    pub fn throughput(&self) -> S {
        self.load.clone() * (S::one() - self.plr.value.clone())
    }
}

/// Evaluates the energy model at load `load`, taking `P_dec(t) = 1 - P_a`
/// for every `t` (except `t = 0` under [`ZeroReplicaRule::Silent`]).
pub fn analytic_energy_report<S: Scalar>(
    config: &FrameConfig,
    load: &S,
    catalog: &[StoppingSet],
    options: AnalyticOptions,
) -> Result<EnergyReport<S>> {
    config.validate()?;
    let lambda: DegreeDistribution<S> = config.dist.cast();
    let (n, alpha) = (config.n, config.alpha);
    let gamma = gamma_of(&lambda, n, alpha)?;
    let first_step_loss = analytic_loss(alpha, &gamma.gamma, catalog, n, load, options.form);
    let decode = S::one() - first_step_loss.value.clone();
    let split = expected_replicas_two_step(
        &lambda,
        n,
        alpha,
        |t| match (t, options.zero_replicas) {
            (0, ZeroReplicaRule::Silent) => S::zero(),
            _ => decode.clone(),
        },
        options.mode,
    )?;
    let unit = S::from_f64(config.power) * S::from_f64(config.packet_duration);
    let plr = plr_full_frame(n, &lambda, catalog, load, options.form);
    let expected_k = split.total();
    let energy = expected_k.clone() * unit.clone();
    let eta = eta(load, &plr.value, &energy)?;
    Ok(EnergyReport {
        load: load.clone(),
        alpha,
        gamma,
        energy_first: split.first * unit.clone(),
        energy_second: split.second * unit,
        expected_k,
        energy,
        first_step_loss,
        plr,
        eta,
        options,
    })
}
