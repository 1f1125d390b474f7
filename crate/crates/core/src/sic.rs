//! Successive interference cancellation on a frame graph, and the two-step
//! variant with an intermediate feedback bitmap.
//!
//! Cancellation is ideal and collisions are destructive: a slot yields a packet
//! only when exactly one undecoded replica remains in it. Once a user is
//! decoded every sibling replica position is known.

use crate::error::{Error, Result};
use crate::frame::FrameGraph;

/// Result of peeling a frame graph (or its first `slot_limit` slots).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// Decoded users, ascending.
    pub decoded: Vec<usize>,
    /// Number of passes that decoded at least one user.
    pub iterations: usize,
    /// Undecoded users with their replicas inside the decoding window.
    pub residual: Vec<(usize, Vec<u32>)>,
    pub slot_limit: usize,
    pub users: usize,
}

impl DecodeOutcome {
    pub fn is_decoded(&self, user: usize) -> bool {
        self.decoded.binary_search(&user).is_ok()
    }

    pub fn lost(&self) -> usize {
        self.users - self.decoded.len()
    }

    /// Decoded flags indexed by user.
    pub fn decoded_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.users];
        for &u in &self.decoded {
            mask[u] = true;
        }
        mask
    }
}

/// Iterative peeling restricted to slots `< slot_limit`.
///
/// Each pass decodes every user that currently owns a singleton slot, then
/// cancels all of that user's replicas inside the window. Replicas at or past
/// `slot_limit` neither help nor interfere. Stops at the fixpoint or after
/// `max_iters` passes.
pub fn peel(graph: &FrameGraph, slot_limit: usize, max_iters: usize) -> DecodeOutcome {
    let limit = slot_limit.min(graph.n());
    let users = graph.users();
    let window = |u: usize| &graph.slots_of(u)[..graph.replicas_before(u, limit)];
    // per-slot replica count and XOR of occupant ids: when the count is one,
    // the XOR is the lone occupant
    let mut load = vec![0u32; limit];
    let mut occupant = vec![0usize; limit];
    for u in 0..users {
        for &s in window(u) {
            load[s as usize] += 1;
            occupant[s as usize] ^= u;
        }
    }
    let mut decoded = vec![false; users];
    let mut candidates: Vec<usize> = (0..limit).filter(|&s| load[s] == 1).collect();
    let mut ready = Vec::new();
    let mut iterations = 0;

    while iterations < max_iters && !candidates.is_empty() {
        ready.clear();
        ready.extend(
            candidates
                .iter()
                .filter(|&&s| load[s] == 1)
                .map(|&s| occupant[s]),
        );
        candidates.clear();
        if ready.is_empty() {
            break;
        }
        iterations += 1;
        for &u in &ready {
            if decoded[u] {
                continue;
            }
            decoded[u] = true;
            for &s in window(u) {
                let s = s as usize;
                load[s] -= 1;
                occupant[s] ^= u;
                if load[s] == 1 {
                    candidates.push(s);
                }
            }
        }
    }

    let residual = (0..users)
        .filter(|&u| !decoded[u])
        .map(|u| (u, window(u).to_vec()))
        .collect();
    DecodeOutcome {
        decoded: (0..users).filter(|&u| decoded[u]).collect(),
        iterations,
        residual,
        slot_limit: limit,
        users,
    }
}

/// Conventional IRSA: every user sends all replicas, SIC over the whole frame.
pub fn run_standard(graph: &FrameGraph) -> DecodeOutcome {
    peel(graph, graph.n(), graph.n())
}

/// Per-slot success flags broadcast after the first step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feedback {
    bits: Vec<bool>,
}

impl Feedback {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Feedback { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit for 0-based slot `slot`.
    pub fn get(&self, slot: usize) -> bool {
        self.bits[slot]
    }

    /// What a node concludes from the bitmap given its own first-part slots:
    /// it was decoded iff at least one of them is flagged. A node that sent
    /// nothing in the first part is never decoded.
    pub fn node_decoded(&self, first_part_slots: &[u32]) -> bool {
        first_part_slots.iter().any(|&s| self.bits[s as usize])
    }

    /// Packs bit `i` (slot `i + 1` in 1-based numbering) into byte `i / 8`,
    /// position `i % 8` from the least significant bit, zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        bytes
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad feedback hex {hex:?} for {len} bits"));
        if hex.len() != 2 * len.div_ceil(8) {
            return Err(bad());
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad()))
            .collect::<Result<Vec<u8>>>()?;
        let bits: Vec<bool> = (0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
        // padding must be zero
        let tail = (len..bytes.len() * 8).any(|i| bytes[i / 8] >> (i % 8) & 1 == 1);
        if tail {
            return Err(bad());
        }
        Ok(Feedback { bits })
    }
}

/// Builds the first-step feedback from a peel over `alpha` slots: bit `i` is
/// clear iff some undecoded user still has a replica in slot `i`. Empty slots
/// read as 1.
pub fn feedback_bitmap(outcome: &DecodeOutcome, alpha: usize) -> Feedback {
    let mut bits = vec![true; alpha];
    for (_, slots) in &outcome.residual {
        for &s in slots {
            if let Some(b) = bits.get_mut(s as usize) {
                *b = false;
            }
        }
    }
    Feedback { bits }
}

/// Everything that happened in one frame under two-step SIC.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepOutcome {
    pub alpha: usize,
    pub first: DecodeOutcome,
    pub feedback: Feedback,
    /// Users silenced after the first step.
    pub first_decoded: Vec<usize>,
    /// Replicas each user placed in the first part (`T`).
    pub first_part: Vec<usize>,
    /// Replicas each user actually transmitted (`K`).
    pub transmitted: Vec<usize>,
    pub last: DecodeOutcome,
    pub energy_first: f64,
    pub energy_second: f64,
}

impl TwoStepOutcome {
    pub fn final_decoded(&self) -> &[usize] {
        &self.last.decoded
    }

    pub fn total_transmitted(&self) -> usize {
        self.transmitted.iter().sum()
    }

    pub fn replicas_first(&self) -> usize {
        self.first_part.iter().sum()
    }

    pub fn replicas_second(&self) -> usize {
        self.total_transmitted() - self.replicas_first()
    }

    /// Size of the feedback message in bits. Not counted in the energy.
    pub fn feedback_bits(&self) -> usize {
        self.feedback.len()
    }
}

/// Runs the two-step protocol on a drawn frame.
///
/// The receiver peels the first `alpha` slots and broadcasts the bitmap; nodes
/// that read themselves as decoded drop their remaining replicas; the receiver
/// then peels the whole (pruned) frame. `energy_unit` is `p * t` of one packet.
pub fn run_two_step(graph: &FrameGraph, alpha: usize, energy_unit: f64) -> Result<TwoStepOutcome> {
    let n = graph.n();
    if alpha == 0 || alpha > n {
        return Err(Error::InvalidAlpha { alpha, min: 1, n });
    }
    let first = peel(graph, alpha, n);
    let feedback = feedback_bitmap(&first, alpha);

    let users = graph.users();
    let first_part: Vec<usize> = (0..users).map(|u| graph.replicas_before(u, alpha)).collect();
    let silenced: Vec<bool> = (0..users)
        .map(|u| feedback.node_decoded(&graph.slots_of(u)[..first_part[u]]))
        .collect();
    let transmitted: Vec<usize> = (0..users)
        .map(|u| if silenced[u] { first_part[u] } else { graph.degree(u) })
        .collect();

    let pruned = graph.truncated(&silenced, alpha);
    let last = peel(&pruned, n, n);

    let replicas_first: usize = first_part.iter().sum();
    let replicas_total: usize = transmitted.iter().sum();
    Ok(TwoStepOutcome {
        alpha,
        first_decoded: (0..users).filter(|&u| silenced[u]).collect(),
        first,
        feedback,
        first_part,
        transmitted,
        last,
        energy_first: replicas_first as f64 * energy_unit,
        energy_second: (replicas_total - replicas_first) as f64 * energy_unit,
    })
}
