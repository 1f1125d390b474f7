//! Independent oracles for the acceptance checks.

use irsa_core::FrameGraph;
use rand::seq::SliceRandom;
use rand::Rng;

/// Decodes by resolving one uniformly chosen singleton slot at a time, with
/// no bookkeeping beyond the occupancy lists. Returns decoded users in
/// ascending order.
pub fn random_order_decode(graph: &FrameGraph, rng: &mut impl Rng) -> Vec<usize> {
    let occupancy = graph.occupancy();
    let mut decoded = vec![false; graph.users()];
    loop {
        let singles: Vec<usize> = occupancy
            .iter()
            .filter_map(|users| {
                let mut live = users.iter().filter(|&&u| !decoded[u]);
                match (live.next(), live.next()) {
                    (Some(&u), None) => Some(u),
                    _ => None,
                }
            })
            .collect();
        match singles.choose(rng) {
            Some(&u) => decoded[u] = true,
            None => break,
        }
    }
    (0..graph.users()).filter(|&u| decoded[u]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chain_decodes_fully() {
        let graph = FrameGraph::from_one_based(4, &[&[1, 2], &[2, 3], &[3, 4], &[4]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_order_decode(&graph, &mut rng), vec![0, 1, 2, 3]);
    }

    #[test]
    fn stopping_set_is_stuck() {
        let graph = FrameGraph::from_one_based(3, &[&[1, 2], &[1, 2], &[3]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_order_decode(&graph, &mut rng), vec![2]);
    }
}
