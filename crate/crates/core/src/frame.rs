//! Frame configuration and random transmission patterns.

use rand::seq::index;
use rand::Rng;

use crate::dist::DegreeDistribution;
use crate::error::{Error, Result};

/// Parameters of one MAC frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameConfig {
    /// Slots per frame.
    pub n: usize,
    /// Active users.
    pub m: usize,
    /// Slots decoded in the first step, `1 <= alpha <= n`.
    pub alpha: usize,
    /// Transmission power.
    pub power: f64,
    /// Packet (slot) duration.
    pub packet_duration: f64,
    pub dist: DegreeDistribution,
}

impl FrameConfig {
    pub fn new(n: usize, m: usize, alpha: usize, dist: DegreeDistribution) -> Result<Self> {
        let config = FrameConfig {
            n,
            m,
            alpha,
            power: 1.0,
            packet_duration: 1.0,
            dist,
        };
        config.validate()?;
        Ok(config)
    }

    /// Builds a configuration at channel load `g`, with `m = round(g * n)`.
    pub fn from_load(n: usize, g: f64, alpha: usize, dist: DegreeDistribution) -> Result<Self> {
        Self::new(n, users_at_load(n, g)?, alpha, dist)
    }

    pub fn with_energy(mut self, power: f64, packet_duration: f64) -> Result<Self> {
        self.power = power;
        self.packet_duration = packet_duration;
        self.validate()?;
        Ok(self)
    }

    pub fn with_users(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_alpha(mut self, alpha: usize) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyFrame);
        }
        let min = self.dist.r_max().max(1);
        if self.alpha < min || self.alpha > self.n {
            return Err(Error::InvalidAlpha {
                alpha: self.alpha,
                min,
                n: self.n,
            });
        }
        if self.dist.r_max() > self.n {
            return Err(Error::TooManyReplicas {
                replicas: self.dist.r_max(),
                slots: self.n,
            });
        }
        for (name, v) in [("power", self.power), ("packet duration", self.packet_duration)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Energy of one packet transmission, `p * t`.
    pub fn energy_unit(&self) -> f64 {
        self.power * self.packet_duration
    }

    pub fn load(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

/// `round(g * n)`, rejecting negative or non-finite loads.
pub fn users_at_load(n: usize, g: f64) -> Result<usize> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::InvalidParameter(format!("load must be >= 0, got {g}")));
    }
    Ok((g * n as f64).round() as usize)
}

/// User/slot incidence of one frame. Slots are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameGraph {
    n: usize,
    placements: Vec<Vec<u32>>,
}

impl FrameGraph {
    pub fn empty(n: usize) -> Self {
        FrameGraph {
            n,
            placements: Vec::new(),
        }
    }

    /// Builds a graph from per-user slot lists. Lists are sorted; duplicates
    /// or out-of-range slots are rejected.
    pub fn new(n: usize, placements: Vec<Vec<u32>>) -> Result<Self> {
        let mut placements = placements;
        for (user, slots) in placements.iter_mut().enumerate() {
            slots.sort_unstable();
            if slots.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidPlacement(format!(
                    "user {user} uses a slot twice"
                )));
            }
            if let Some(&last) = slots.last() {
                if last as usize >= n {
                    return Err(Error::InvalidPlacement(format!(
                        "user {user} slot {last} outside frame of {n}"
                    )));
                }
            }
        }
        Ok(FrameGraph { n, placements })
    }

    /// Same as [`FrameGraph::new`] but takes 1-based slot numbers.
    pub fn from_one_based(n: usize, placements: &[&[u32]]) -> Result<Self> {
        let zero_based = placements
            .iter()
            .map(|slots| {
                slots
                    .iter()
                    .map(|&s| {
                        s.checked_sub(1).ok_or_else(|| {
                            Error::InvalidPlacement("slot numbers start at 1".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, zero_based)
    }

    /// Rebuilds placements from per-slot user lists.
    pub fn from_occupancy(n: usize, users: usize, occupancy: &[Vec<usize>]) -> Result<Self> {
        if occupancy.len() != n {
            return Err(Error::InvalidPlacement(format!(
                "expected {n} slot lists, got {}",
                occupancy.len()
            )));
        }
        let mut placements = vec![Vec::new(); users];
        for (slot, occupants) in occupancy.iter().enumerate() {
            for &u in occupants {
                let list = placements.get_mut(u).ok_or_else(|| {
                    Error::InvalidPlacement(format!("user {u} out of range"))
                })?;
                list.push(slot as u32);
            }
        }
        Self::new(n, placements)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn users(&self) -> usize {
        self.placements.len()
    }

    pub fn placements(&self) -> &[Vec<u32>] {
        &self.placements
    }

    pub fn slots_of(&self, user: usize) -> &[u32] {
        &self.placements[user]
    }

    /// Drawn replica count `R` of a user.
    pub fn degree(&self, user: usize) -> usize {
        self.placements[user].len()
    }

    /// Replicas of `user` in slots `< limit`.
    pub fn replicas_before(&self, user: usize, limit: usize) -> usize {
        self.placements[user].partition_point(|&s| (s as usize) < limit)
    }

    pub fn total_replicas(&self) -> usize {
        self.placements.iter().map(Vec::len).sum()
    }

    /// Users in each slot, in increasing user order.
    pub fn occupancy(&self) -> Vec<Vec<usize>> {
        let mut occ = vec![Vec::new(); self.n];
        for (u, slots) in self.placements.iter().enumerate() {
            for &s in slots {
                occ[s as usize].push(u);
            }
        }
        occ
    }

    /// Copy in which the listed users keep only their replicas before `limit`.
    pub fn truncated(&self, silenced: &[bool], limit: usize) -> FrameGraph {
        let placements = self
            .placements
            .iter()
            .enumerate()
            .map(|(u, slots)| {
                if silenced[u] {
                    slots[..self.replicas_before(u, limit)].to_vec()
                } else {
                    slots.clone()
                }
            })
            .collect();
        FrameGraph {
            n: self.n,
            placements,
        }
    }
}

/// Draws a degree from `dist`.
pub fn sample_degree<R: Rng + ?Sized>(dist: &DegreeDistribution, rng: &mut R) -> usize {
    dist.sample(rng)
}

/// Uniform `r`-subset of `0..n`, sorted.
pub fn place_replicas<R: Rng + ?Sized>(r: usize, n: usize, rng: &mut R) -> Result<Vec<u32>> {
    if r > n {
        return Err(Error::TooManyReplicas {
            replicas: r,
            slots: n,
        });
    }
    let mut slots: Vec<u32> = index::sample(rng, n, r).into_iter().map(|s| s as u32).collect();
    slots.sort_unstable();
    Ok(slots)
}

/// Draws a full frame: `m` users, each with an independent degree and a
/// uniform placement.
pub fn build_frame<R: Rng + ?Sized>(config: &FrameConfig, rng: &mut R) -> FrameGraph {
    let placements = (0..config.m)
        .map(|_| {
            let r = sample_degree(&config.dist, rng);
            place_replicas(r, config.n, rng).expect("validated config has r_max <= n")
        })
        .collect();
    FrameGraph {
        n: config.n,
        placements,
    }
}
