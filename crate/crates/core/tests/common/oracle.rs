use std::sync::Arc;

use fairdyn::dfd::{Dfd1, DfdState, SigmaRule};
use fairdyn::partition::equal_partition;
use fairdyn::rat::{self, Rat};
use fairdyn::{IntervalSet, PiecewiseConstant, PlayerId};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

/// Best total value of `take` pieces, by enumerating every subset.
fn best_subset(values: &[Rat], take: usize) -> Rat {
    let mut best = Rat::zero();
    for mask in 0u32..(1 << values.len()) {
        if mask.count_ones() as usize != take {
            continue;
        }
        let sum = values
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .fold(Rat::zero(), |acc, (_, v)| acc + v);
        if sum > best {
            best = sum;
        }
    }
    best
}

/// Checks `cases` random feasible instances of the top-subset search.
pub fn top_subset_matches_exhaustive_search(cases: usize) {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < cases {
        seed += 1;
        let mut r = super::rng(seed);
        let players = r.gen_range(1..=4);
        let grid = r.gen_range(players.max(2)..=10) as i64;
        let holdings = super::deal(&mut r, grid, players);
        let vals: Vec<Arc<PiecewiseConstant>> = (0..players)
            .map(|_| Arc::new(super::density(&mut r, 12, 4)))
            .collect();
        let owns: Vec<Rat> = vals.iter().zip(&holdings).map(|(v, h)| v.eval(h)).collect();
        if owns.iter().any(|o| o.is_zero()) {
            continue;
        }
        let needs: Vec<usize> = owns
            .iter()
            .zip(&vals)
            .map(|(o, v)| rat::ceil_int(&(v.total_mass() / o)).to_usize().unwrap())
            .collect();
        let least = *needs.iter().max().unwrap();
        if least > 12 {
            continue;
        }
        let sigma = r.gen_range(least.max(1)..=12);
        let newcomer = Arc::new(super::density(&mut r, 12, 5));
        let state = DfdState::from_parts(holdings.iter().cloned().zip(vals.iter().cloned()).collect()).unwrap();

        let mut want: Option<(usize, Rat)> = None;
        for j in 0..players {
            let pieces = equal_partition(&vals[j], &holdings[j], sigma).unwrap();
            let values: Vec<Rat> = pieces.iter().map(|p| newcomer.eval(p)).collect();
            let v = best_subset(&values, sigma - needs[j]);
            if want.as_ref().is_none_or(|(_, b)| v > *b) {
                want = Some((j, v));
            }
        }
        let (want_player, want_value) = want.unwrap();

        let alg = Dfd1::with_sigma(SigmaRule::Fixed(sigma as u64));
        let choice = alg.choose(&state, &newcomer).unwrap().unwrap();
        assert_eq!(choice.value, want_value, "seed {seed}");
        assert_eq!(choice.player, PlayerId::from_index(want_player), "seed {seed}");

        let mut after = state.clone();
        let recall = alg.arrive(&mut after, &newcomer).unwrap();
        assert_eq!(newcomer.eval(&recall.removed), want_value, "seed {seed}");
        if let Some(p) = recall.player {
            let j = p.index();
            assert!(recall.removed.is_subset(&holdings[j]));
            let taken = sigma - needs[j];
            assert_eq!(
                vals[j].eval(&recall.removed),
                &owns[j] * rat::int(taken as i64) / rat::int(sigma as i64),
                "seed {seed}"
            );
        }
        checked += 1;
    }
}

/// Checks equal partitions for `cases` random seeds.
pub fn equal_partition_pieces_are_exactly_equal(cases: u64) {
    for seed in 0..cases {
        let mut r = super::rng(10_000 + seed);
        let v = super::density(&mut r, 24, 6);
        let g = r.gen_range(1..=16);
        let s = super::cells(&mut r, g);
        let total = v.eval(&s);
        if total.is_zero() {
            continue;
        }
        let m = r.gen_range(1..=64);
        let pieces = equal_partition(&v, &s, m).unwrap();
        assert_eq!(pieces.len(), m);
        let share = &total / rat::int(m as i64);
        let mut union = IntervalSet::empty();
        for p in &pieces {
            assert_eq!(v.eval(p), share, "seed {seed}");
            assert!(p.is_disjoint(&union), "seed {seed}");
            union = union.union(p);
        }
        assert_eq!(union, s, "seed {seed}");
    }
}
