//! Allocators for uniform valuations with demands.
//!
//! Only sizes matter here, so a holding is a rational size. The ideal factor
//! `1 / ln 3` in the allocation formulas is replaced by a fixed rational just
//! below it ([`certified::ln3_inv_lo`]), which keeps every size exact and
//! every feasibility bound intact.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::{One, Signed, Zero};

use crate::certified;
use crate::error::{Error, Result};
use crate::rat::{self, Rat};
use crate::{PlayerId, Recall};

pub type UdRecall = Recall<Rat>;

/// Parameters of the known-range allocator: minimum demand `d`, max/min
/// demand ratio `c`, and budget parameter `eta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UdParams {
    pub d: Rat,
    pub c: Rat,
    pub eta: Rat,
    pub ln3_inv_lo: Rat,
}

impl UdParams {
    pub fn new(d: Rat, c: Rat, eta: Rat) -> Result<Self> {
        if !d.is_positive() || d > Rat::one() {
            return Err(Error::Parameter(format!("d = {} not in (0, 1]", rat::format(&d))));
        }
        if c < Rat::one() {
            return Err(Error::Parameter(format!("c = {} below 1", rat::format(&c))));
        }
        if &c * &d > Rat::one() {
            return Err(Error::Parameter("c·d exceeds 1".into()));
        }
        if !eta.is_positive() {
            return Err(Error::Parameter("eta must be positive".into()));
        }
        Ok(Self {
            d,
            c,
            eta,
            ln3_inv_lo: certified::ln3_inv_lo().clone(),
        })
    }

    pub fn max_demand(&self) -> Rat {
        &self.c * &self.d
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Entry {
    size: Rat,
    player: usize,
}

impl Ord for Entry {
    // largest size first, then lowest player
    fn cmp(&self, other: &Self) -> Ordering {
        self.size
            .cmp(&other.size)
            .then_with(|| other.player.cmp(&self.player))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sizes, demands and classes of every player who has arrived.
#[derive(Clone, Debug, Default)]
pub struct UdState {
    sizes: Vec<Rat>,
    demands: Vec<Rat>,
    class_of: Vec<u32>,
    live: Vec<bool>,
    total_demand: Rat,
    allocated: Rat,
    step: usize,
    // max-size lookup per class; stale entries are skipped lazily
    heaps: Vec<BinaryHeap<Entry>>,
}

impl UdState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn arrivals(&self) -> usize {
        self.sizes.len()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn size(&self, p: PlayerId) -> &Rat {
        &self.sizes[p.index()]
    }

    pub fn sizes(&self) -> &[Rat] {
        &self.sizes
    }

    pub fn demand(&self, p: PlayerId) -> &Rat {
        &self.demands[p.index()]
    }

    pub fn class_of(&self, p: PlayerId) -> u32 {
        self.class_of[p.index()]
    }

    pub fn is_live(&self, p: PlayerId) -> bool {
        self.live.get(p.index()).copied().unwrap_or(false)
    }

    /// Sum of all demands that have arrived.
    pub fn total_demand(&self) -> &Rat {
        &self.total_demand
    }

    /// Sum of live sizes.
    pub fn allocated(&self) -> &Rat {
        &self.allocated
    }

    fn largest_in(&mut self, class: u32) -> Option<PlayerId> {
        let heap = self.heaps.get_mut(class as usize)?;
        while let Some(top) = heap.peek() {
            if self.live[top.player] && self.sizes[top.player] == top.size {
                return Some(PlayerId::from_index(top.player));
            }
            heap.pop();
        }
        None
    }

    fn push(&mut self, class: u32, p: usize) {
        let class = class as usize;
        if self.heaps.len() <= class {
            self.heaps.resize_with(class + 1, BinaryHeap::new);
        }
        self.heaps[class].push(Entry {
            size: self.sizes[p].clone(),
            player: p,
        });
    }

    /// Shrinks the largest holding of `class` to `target` if it exceeds it,
    /// then admits a newcomer of size `target`.
    fn admit(&mut self, demand: Rat, class: u32, target: Rat) -> Result<UdRecall> {
        self.step += 1;
        let mut recall = Recall {
            step: self.step,
            player: None,
            removed: Rat::zero(),
        };
        if let Some(j) = self.largest_in(class) {
            let current = &self.sizes[j.index()];
            if target < *current {
                let removed = current - &target;
                self.allocated -= &removed;
                self.sizes[j.index()] = target.clone();
                self.push(class, j.index());
                recall.player = Some(j);
                recall.removed = removed;
            }
        }
        self.total_demand += &demand;
        self.allocated += &target;
        self.sizes.push(target);
        self.demands.push(demand);
        self.class_of.push(class);
        self.live.push(true);
        self.push(class, self.sizes.len() - 1);
        if self.allocated > Rat::one() {
            return Err(Error::Capacity {
                step: self.step,
                total: rat::format(&self.allocated),
            });
        }
        Ok(recall)
    }

    /// Releases a departing player's size; it is never handed out again
    /// except through future targets.
    pub fn depart(&mut self, p: PlayerId) -> Result<()> {
        if !self.is_live(p) {
            return Err(Error::UnknownPlayer(p));
        }
        self.step += 1;
        let i = p.index();
        self.allocated -= &self.sizes[i];
        self.sizes[i] = Rat::zero();
        self.live[i] = false;
        Ok(())
    }
}

/// Known-range allocator: every newcomer and the current largest holder get
/// `(d / 2) / (η ln 3 · max(d·i, 1))`.
#[derive(Clone, Debug)]
pub struct UdS {
    pub params: UdParams,
}

impl UdS {
    pub fn new(params: UdParams) -> Self {
        Self { params }
    }

    pub fn target(&self, i: usize) -> Rat {
        let p = &self.params;
        let di = &p.d * rat::int(i as i64);
        let scale = if di > Rat::one() { di } else { Rat::one() };
        &p.d * &p.ln3_inv_lo / (rat::int(2) * &p.eta * scale)
    }

    pub fn arrive(&self, state: &mut UdState, demand: &Rat) -> Result<UdRecall> {
        if *demand < self.params.d || *demand > self.params.max_demand() {
            return Err(Error::DemandRange {
                demand: rat::format(demand),
                lo: rat::format(&self.params.d),
                hi: rat::format(&self.params.max_demand()),
            });
        }
        let target = self.target(state.arrivals() + 1);
        state.admit(demand.clone(), 0, target)
    }
}

/// The dyadic demand class: `l` with `2^-l < d <= 2^(1-l)` for
/// `1 <= l <= m`, else `0` (`d <= 2^-m`).
pub fn demand_class(d: &Rat, m: u32) -> u32 {
    let mut bound = Rat::one();
    for l in 1..=m {
        bound /= rat::int(2);
        if *d > bound {
            return l;
        }
    }
    0
}

/// General allocator: players are grouped by dyadic demand class and the
/// known-range scheme runs inside each class, with the largest holder of the
/// newcomer's class recalled. `η = 1 + ⌈log₂ n⌉`.
#[derive(Clone, Debug)]
pub struct Ud {
    n_max: usize,
    m: u32,
    eta: Rat,
    ln3_inv_lo: Rat,
}

impl Ud {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        let m = certified::ceil_log2(n_max as u64);
        Ok(Self {
            n_max,
            m,
            eta: rat::int(1 + m as i64),
            ln3_inv_lo: certified::ln3_inv_lo().clone(),
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn eta(&self) -> &Rat {
        &self.eta
    }

    /// Size exponent of a class. The bottom class holds demands up to
    /// `2^-m` and is sized like the next dyadic class below `S_m`.
    fn exponent(&self, class: u32) -> u32 {
        if class == 0 {
            self.m + 1
        } else {
            class
        }
    }

    /// `2^-e / (η ln 3 · max(D, 1))` for total demand `D`.
    pub fn target(&self, class: u32, total_demand: &Rat) -> Rat {
        let scale = if *total_demand > Rat::one() {
            total_demand.clone()
        } else {
            Rat::one()
        };
        let pow = rat::pow2(self.exponent(class) as i64);
        &self.ln3_inv_lo / (pow * &self.eta * scale)
    }

    pub fn arrive(&self, state: &mut UdState, demand: &Rat) -> Result<UdRecall> {
        if !demand.is_positive() || *demand > Rat::one() {
            return Err(Error::InvalidValuation(format!(
                "demand {} not in (0, 1]",
                rat::format(demand)
            )));
        }
        if state.arrivals() >= self.n_max {
            return Err(Error::Parameter(format!(
                "more than n = {} arrivals",
                self.n_max
            )));
        }
        let class = demand_class(demand, self.m);
        let total = state.total_demand() + demand;
        let target = self.target(class, &total);
        state.admit(demand.clone(), class, target)
    }
}
