//! Monte Carlo runner.
//!
//! Each trial draws its frame from a ChaCha stream keyed by
//! `(master seed, load index, trial index)`, so results do not depend on how
//! trials are scheduled across workers. Per-point statistics are integer
//! sufficient statistics; merging them is exact, associative and commutative.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{build_frame, users_at_load, FrameConfig};
use crate::sic::{run_standard, run_two_step};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const STREAM_TAG: &[u8; 8] = b"irsa-mc1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum Scheme {
    /// Every user transmits all replicas; one SIC pass over the frame.
    Standard,
    /// Intermediate decoding after `alpha` slots.
    TwoStep { alpha: usize },
}

impl Scheme {
    /// First-part length; `n` for the standard scheme.
    pub fn alpha(&self, n: usize) -> usize {
        match self {
            Scheme::Standard => n,
            Scheme::TwoStep { alpha } => *alpha,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Standard => "standard",
            Scheme::TwoStep { .. } => "two-step",
        }
    }
}

/// Random stream of one trial.
pub fn trial_rng(seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&trial.to_le_bytes());
    key[24..].copy_from_slice(STREAM_TAG);
    ChaCha8Rng::from_seed(key)
}

/// Aggregated results at one load for one scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadPointStats {
    pub load: f64,
    pub n: usize,
    pub users: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub point: u64,
    pub energy_unit: f64,
    pub trials: u64,
    sum_tx: u128,
    sum_tx_sq: u128,
    sum_first: u128,
    sum_first_sq: u128,
    sum_lost: u128,
    sum_lost_sq: u128,
    max_user_tx: u64,
}

/// Outcome of one simulated frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSample {
    /// Replicas transmitted by all users.
    pub transmitted: u64,
    /// Replicas transmitted in the first part.
    pub first: u64,
    /// Users never decoded.
    pub lost: u64,
    /// Largest per-user replica count.
    pub max_user: u64,
}

impl LoadPointStats {
    pub fn empty(config: &FrameConfig, load: f64, scheme: Scheme, seed: u64, point: u64) -> Self {
        LoadPointStats {
            load,
            n: config.n,
            users: config.m,
            scheme,
            seed,
            point,
            energy_unit: config.energy_unit(),
            trials: 0,
            sum_tx: 0,
            sum_tx_sq: 0,
            sum_first: 0,
            sum_first_sq: 0,
            sum_lost: 0,
            sum_lost_sq: 0,
            max_user_tx: 0,
        }
    }

    pub fn push(&mut self, s: TrialSample) {
        let (tx, first, lost) = (s.transmitted as u128, s.first as u128, s.lost as u128);
        self.trials += 1;
        self.sum_tx += tx;
        self.sum_tx_sq += tx * tx;
        self.sum_first += first;
        self.sum_first_sq += first * first;
        self.sum_lost += lost;
        self.sum_lost_sq += lost * lost;
        self.max_user_tx = self.max_user_tx.max(s.max_user);
    }

    /// Pools two runs of the same experiment.
    pub fn merge(&self, other: &LoadPointStats) -> Result<LoadPointStats> {
        let same = self.load.to_bits() == other.load.to_bits()
            && self.n == other.n
            && self.users == other.users
            && self.scheme == other.scheme
            && self.seed == other.seed
            && self.point == other.point
            && self.energy_unit.to_bits() == other.energy_unit.to_bits();
        if !same {
            return Err(Error::MergeMismatch(format!(
                "{:?}/G={}/m={}/seed={} vs {:?}/G={}/m={}/seed={}",
                self.scheme, self.load, self.users, self.seed, other.scheme, other.load, other.users, other.seed
            )));
        }
        Ok(LoadPointStats {
            trials: self.trials + other.trials,
            sum_tx: self.sum_tx + other.sum_tx,
            sum_tx_sq: self.sum_tx_sq + other.sum_tx_sq,
            sum_first: self.sum_first + other.sum_first,
            sum_first_sq: self.sum_first_sq + other.sum_first_sq,
            sum_lost: self.sum_lost + other.sum_lost,
            sum_lost_sq: self.sum_lost_sq + other.sum_lost_sq,
            max_user_tx: self.max_user_tx.max(other.max_user_tx),
            ..self.clone()
        })
    }

    /// True when the point has no users, in which case energy and loss are
    /// reported as zero.
    pub fn zero_users(&self) -> bool {
        self.users == 0
    }

    fn per_user(&self, sum: u128) -> f64 {
        if self.trials == 0 || self.users == 0 {
            return 0.0;
        }
        sum as f64 / (self.trials as f64 * self.users as f64)
    }

    /// 95% half-width for the mean of per-trial values `x / users`.
    fn half_width(&self, sum: u128, sum_sq: u128) -> f64 {
        if self.trials < 2 || self.users == 0 {
            return 0.0;
        }
        let t = self.trials as u128;
        // T Σx² - (Σx)² is exact in integers and nonnegative
        let spread = t * sum_sq - sum * sum;
        let var = spread as f64 / (t as f64 * (t - 1) as f64) / (self.users as f64).powi(2);
        Z95 * (var / self.trials as f64).sqrt()
    }

    /// Mean energy per user per frame.
    pub fn energy_mean(&self) -> f64 {
        self.per_user(self.sum_tx) * self.energy_unit
    }

    pub fn energy_ci95(&self) -> f64 {
        self.half_width(self.sum_tx, self.sum_tx_sq) * self.energy_unit
    }

    pub fn energy_first(&self) -> f64 {
        self.per_user(self.sum_first) * self.energy_unit
    }

    pub fn energy_first_ci95(&self) -> f64 {
        self.half_width(self.sum_first, self.sum_first_sq) * self.energy_unit
    }

    pub fn energy_second(&self) -> f64 {
        self.per_user(self.sum_tx - self.sum_first) * self.energy_unit
    }

    /// Pooled fraction of users never decoded.
    pub fn plr(&self) -> f64 {
        self.per_user(self.sum_lost)
    }

    pub fn plr_ci95(&self) -> f64 {
        self.half_width(self.sum_lost, self.sum_lost_sq)
    }

    pub fn throughput(&self) -> f64 {
        self.load * (1.0 - self.plr())
    }

    /// `G (1 - PLR) / E`; zero when no energy was spent.
    pub fn eta(&self) -> f64 {
        let e = self.energy_mean();
        if e > 0.0 {
            self.throughput() / e
        } else {
            0.0
        }
    }

    /// Largest energy a single user spent in any trial.
    pub fn max_user_energy(&self) -> f64 {
        self.max_user_tx as f64 * self.energy_unit
    }

    /// Sample variance of per-trial mean energy is zero.
    pub fn energy_is_constant(&self) -> bool {
        let t = self.trials as u128;
        t * self.sum_tx_sq == self.sum_tx * self.sum_tx
    }
}

/// Simulates one frame.
pub fn simulate_trial(config: &FrameConfig, scheme: Scheme, rng: &mut ChaCha8Rng) -> Result<TrialSample> {
    let graph = build_frame(config, rng);
    let m = graph.users() as u64;
    match scheme {
        Scheme::Standard => {
            let out = run_standard(&graph);
            let tx = graph.total_replicas() as u64;
            Ok(TrialSample {
                transmitted: tx,
                first: tx,
                lost: m - out.decoded.len() as u64,
                max_user: (0..graph.users()).map(|u| graph.degree(u) as u64).max().unwrap_or(0),
            })
        }
        Scheme::TwoStep { alpha } => {
            let out = run_two_step(&graph, alpha, config.energy_unit())?;
            Ok(TrialSample {
                transmitted: out.total_transmitted() as u64,
                first: out.replicas_first() as u64,
                lost: m - out.final_decoded().len() as u64,
                max_user: out.transmitted.iter().copied().max().unwrap_or(0) as u64,
            })
        }
    }
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Runs trials `range` of load point `point`. `config.m` must already match
/// the load.
pub fn run_trials(
    config: &FrameConfig,
    load: f64,
    scheme: Scheme,
    seed: u64,
    point: u64,
    range: Range<u64>,
) -> Result<LoadPointStats> {
    let mut config = config.clone();
    config.alpha = scheme.alpha(config.n);
    config.validate()?;
    let empty = LoadPointStats::empty(&config, load, scheme, seed, point);
    range
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, point, trial);
            let sample = simulate_trial(&config, scheme, &mut rng)?;
            let mut stats = empty.clone();
            stats.push(sample);
            Ok(stats)
        })
        .try_reduce(|| empty.clone(), |a, b| a.merge(&b))
}

/// Simulates `trials` frames at load `load` (load index 0).
pub fn run_point(
    config: &FrameConfig,
    load: f64,
    trials: u64,
    seed: u64,
    scheme: Scheme,
    workers: usize,
) -> Result<LoadPointStats> {
    let config = config.clone().with_users(users_at_load(config.n, load)?);
    with_pool(workers, || run_trials(&config, load, scheme, seed, 0, 0..trials))?
}

/// Full experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: FrameConfig,
    pub loads: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if let Some(g) = self.loads.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::InvalidParameter(format!("loads must be positive, got {g}")));
        }
        for s in &self.schemes {
            self.base.clone().with_alpha(s.alpha(self.base.n))?;
        }
        Ok(())
    }
}

/// One result per (scheme, load), scheme-major in the order given. Load index `i`
/// shares trial streams across schemes, so schemes see identical frames.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<LoadPointStats>> {
    spec.validate()?;
    with_pool(spec.workers, || {
        let mut out = Vec::with_capacity(spec.schemes.len() * spec.loads.len());
        for &scheme in &spec.schemes {
            for (i, &g) in spec.loads.iter().enumerate() {
                let config = spec.base.clone().with_users(users_at_load(spec.base.n, g)?);
                out.push(run_trials(&config, g, scheme, spec.seed, i as u64, 0..spec.trials)?);
            }
        }
        Ok(out)
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DegreeDistribution;
    use proptest::prelude::*;

    fn config() -> FrameConfig {
        FrameConfig::new(200, 0, 200, DegreeDistribution::point_mass(3)).unwrap()
    }

    #[test]
    fn standard_energy_is_constant() {
        for g in [0.1, 0.5, 0.9] {
            let s = run_point(&config(), g, 300, 5, Scheme::Standard, 0).unwrap();
            assert_eq!(s.energy_mean(), 3.0);
            assert_eq!(s.energy_ci95(), 0.0);
            assert!(s.energy_is_constant());
            assert_eq!(s.energy_second(), 0.0);
        }
    }

    #[test]
    fn zero_users_point() {
        let s = run_point(&config(), 0.001, 1, 5, Scheme::TwoStep { alpha: 100 }, 0).unwrap();
        assert!(s.zero_users());
        assert_eq!((s.plr(), s.energy_mean(), s.eta()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn merge_identity_and_mismatch() {
        let a = run_point(&config(), 0.3, 50, 1, Scheme::TwoStep { alpha: 100 }, 0).unwrap();
        let cfg = config().with_users(60);
        let empty = LoadPointStats::empty(&cfg, 0.3, Scheme::TwoStep { alpha: 100 }, 1, 0);
        assert_eq!(a.merge(&empty).unwrap(), a);
        let other = run_point(&config(), 0.3, 50, 1, Scheme::Standard, 0).unwrap();
        assert!(matches!(a.merge(&other), Err(Error::MergeMismatch(_))));
    }

    #[test]
    fn pooled_chunks_equal_single_run() {
        let cfg = config().with_users(80);
        let scheme = Scheme::TwoStep { alpha: 100 };
        let whole = run_trials(&cfg, 0.4, scheme, 9, 3, 0..10_000).unwrap();
        let mut pooled = LoadPointStats::empty(&cfg, 0.4, scheme, 9, 3);
        for k in 0..10 {
            let part = run_trials(&cfg, 0.4, scheme, 9, 3, k * 1000..(k + 1) * 1000).unwrap();
            pooled = pooled.merge(&part).unwrap();
        }
        assert_eq!(pooled, whole);
        assert_eq!(pooled.energy_mean().to_bits(), whole.energy_mean().to_bits());
        assert_eq!(pooled.plr().to_bits(), whole.plr().to_bits());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let spec = SweepSpec {
            base: config(),
            loads: vec![0.2, 0.6],
            trials: 400,
            seed: 77,
            schemes: vec![Scheme::Standard, Scheme::TwoStep { alpha: 150 }],
            workers: 1,
        };
        let one = run_sweep(&spec).unwrap();
        let four = run_sweep(&SweepSpec { workers: 4, ..spec.clone() }).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.len(), 4);
        assert_eq!(one[0].scheme, Scheme::Standard);
        assert_eq!(one[3].load, 0.6);
    }

    #[test]
    fn sweep_validation() {
        let mut spec = SweepSpec {
            base: config(),
            loads: vec![],
            trials: 1,
            seed: 0,
            schemes: vec![Scheme::Standard],
            workers: 0,
        };
        assert!(run_sweep(&spec).unwrap().is_empty());
        spec.trials = 0;
        assert!(run_sweep(&spec).is_err());
        spec.trials = 1;
        spec.loads = vec![-0.1];
        assert!(run_sweep(&spec).is_err());
        spec.loads = vec![0.1];
        spec.schemes = vec![Scheme::TwoStep { alpha: 2 }];
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn per_user_energy_is_bounded() {
        let dist = DegreeDistribution::parse("0,0,0.5,0.2,0.3").unwrap();
        let cfg = FrameConfig::new(100, 0, 100, dist).unwrap();
        let s = run_point(&cfg, 0.5, 500, 3, Scheme::TwoStep { alpha: 50 }, 0).unwrap();
        assert!(s.max_user_energy() <= 4.0);
        assert!(s.energy_mean() <= 4.0 && s.energy_mean() > 0.0);
        assert!((0.0..=1.0).contains(&s.plr()));
    }

    fn arb_stats() -> impl Strategy<Value = LoadPointStats> {
        prop::collection::vec((0u64..600, 0u64..600, 0u64..200, 0u64..4), 0..20).prop_map(|samples| {
            let mut s = LoadPointStats::empty(&config().with_users(200), 1.0, Scheme::Standard, 0, 0);
            for (tx, first, lost, max_user) in samples {
                s.push(TrialSample { transmitted: tx.max(first), first, lost, max_user });
            }
            s
        })
    }

    proptest! {
        #[test]
        fn merge_is_commutative(a in arb_stats(), b in arb_stats()) {
            prop_assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
        }

        #[test]
        fn merge_is_associative(a in arb_stats(), b in arb_stats(), c in arb_stats()) {
            let left = a.merge(&b).unwrap().merge(&c).unwrap();
            let right = a.merge(&b.merge(&c).unwrap()).unwrap();
            prop_assert_eq!(left.energy_mean().to_bits(), right.energy_mean().to_bits());
            prop_assert_eq!(left, right);
        }
    }
}
