#![allow(dead_code)]

pub mod oracle;

use std::sync::Arc;

use fairdyn::instance::{Instance, InstanceEvent, InstanceMeta};
use fairdyn::rat::{self, Rat};
use fairdyn::{Demand, IntervalSet, PiecewiseConstant, PlayerId, Valuation};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalized density with up to `max_segments` pieces on a `1/grid` lattice.
pub fn density(rng: &mut impl Rng, grid: i64, max_segments: usize) -> PiecewiseConstant {
    loop {
        let k = rng.gen_range(1..=max_segments);
        let mut cuts: Vec<i64> = (0..k - 1).map(|_| rng.gen_range(1..grid)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut bounds = vec![0];
        bounds.extend(cuts);
        bounds.push(grid);
        let segs: Vec<(Rat, Rat, Rat)> = bounds
            .windows(2)
            .map(|w| {
                (
                    rat::ratio(w[0], grid),
                    rat::ratio(w[1], grid),
                    rat::int(rng.gen_range(0..=5)),
                )
            })
            .collect();
        if let Ok(v) = PiecewiseConstant::new(segs).and_then(|v| v.normalize()) {
            return v;
        }
    }
}

/// Union of a random subset of the `1/grid` cells, never empty.
pub fn cells(rng: &mut impl Rng, grid: i64) -> IntervalSet {
    loop {
        let pieces: Vec<(Rat, Rat)> = (0..grid)
            .filter(|_| rng.gen_bool(0.5))
            .map(|c| (rat::ratio(c, grid), rat::ratio(c + 1, grid)))
            .collect();
        if !pieces.is_empty() {
            return IntervalSet::from_pieces(pieces).unwrap();
        }
    }
}

/// The `1/grid` cells dealt out to `players` players, each getting at least
/// one.
pub fn deal(rng: &mut impl Rng, grid: i64, players: usize) -> Vec<IntervalSet> {
    assert!(players as i64 <= grid);
    loop {
        let owner: Vec<usize> = (0..grid).map(|_| rng.gen_range(0..players)).collect();
        if (0..players).all(|p| owner.contains(&p)) {
            return (0..players)
                .map(|p| {
                    let pieces = (0..grid)
                        .filter(|&c| owner[c as usize] == p)
                        .map(|c| (rat::ratio(c, grid), rat::ratio(c + 1, grid)))
                        .collect();
                    IntervalSet::from_pieces(pieces).unwrap()
                })
                .collect();
        }
    }
}

/// Random density arrivals with departures mixed in.
pub fn density_instance(seed: u64, arrivals: usize, depart_prob: f64) -> Instance {
    let mut r = rng(seed);
    let mut events = Vec::new();
    let mut live: Vec<usize> = Vec::new();
    let mut arrived = 0;
    while arrived < arrivals {
        if !live.is_empty() && r.gen_bool(depart_prob) {
            let p = live.swap_remove(r.gen_range(0..live.len()));
            events.push(InstanceEvent::Departure(PlayerId(p)));
        } else {
            arrived += 1;
            live.push(arrived);
            let v = density(&mut r, 12, 4);
            events.push(InstanceEvent::Arrival(Valuation::Density(Arc::new(v))));
        }
    }
    Instance {
        n_max: arrivals,
        events,
        meta: InstanceMeta::default(),
    }
}

/// Random demand arrivals with departures mixed in.
pub fn demand_instance(seed: u64, arrivals: usize, depart_prob: f64) -> Instance {
    let mut r = rng(seed);
    let mut events = Vec::new();
    let mut live: Vec<usize> = Vec::new();
    let mut arrived = 0;
    while arrived < arrivals {
        if !live.is_empty() && r.gen_bool(depart_prob) {
            let p = live.swap_remove(r.gen_range(0..live.len()));
            events.push(InstanceEvent::Departure(PlayerId(p)));
        } else {
            arrived += 1;
            live.push(arrived);
            let d = rat::ratio(r.gen_range(1..=64), 64 << r.gen_range(0..4));
            events.push(InstanceEvent::Arrival(Valuation::Demand(Demand::new(d).unwrap())));
        }
    }
    Instance {
        n_max: arrivals,
        events,
        meta: InstanceMeta::default(),
    }
}
