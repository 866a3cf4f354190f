//! Instance generators: the adaptive envy adversary, the staged demand
//! instance and seeded random families.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::certified::ceil_log2;
use crate::dfd::DfdState;
use crate::error::{Error, Result};
use crate::instance::{Instance, InstanceMeta};
use crate::interval::IntervalSet;
use crate::rat::{self, Rat};
use crate::trace::HaltCertificate;
use crate::valuation::{Demand, PiecewiseConstant, Valuation};
use crate::PlayerId;

pub enum AdversaryMove {
    Arrive(Arc<PiecewiseConstant>),
    Halt(HaltCertificate),
}

/// Chooses each arriving valuation after seeing the current allocation.
pub trait AdaptiveAdversary {
    fn next_valuation(&mut self, state: &DfdState) -> AdversaryMove;
}

/// Every newcomer wants exactly what player 1 currently holds.
#[derive(Clone, Copy, Debug, Default)]
pub struct EnvyAdversary;

impl AdaptiveAdversary for EnvyAdversary {
    fn next_valuation(&mut self, state: &DfdState) -> AdversaryMove {
        envy_adversary_step(state)
    }
}

pub fn envy_adversary_step(state: &DfdState) -> AdversaryMove {
    if state.arrivals() == 0 {
        return AdversaryMove::Arrive(Arc::new(PiecewiseConstant::uniform()));
    }
    let first = state.holding(PlayerId(1));
    match PiecewiseConstant::piecewise_uniform(first) {
        Ok(v) => AdversaryMove::Arrive(Arc::new(v)),
        Err(_) => AdversaryMove::Halt(HaltCertificate {
            arrivals: state.arrivals(),
            reason: "player 1 holds nothing; envy toward player 1 is unbounded".into(),
        }),
    }
}

/// Smallest envy factor any non-empty algorithm can guarantee against the
/// envy adversary with `n` players: the root `ξ > 1` of
/// `(1 - 1/(1+ξ))^(n-2) = 1/ξ^2`, to relative precision `1e-12`.
pub fn envy_lower_bound(n: u64) -> f64 {
    if n < 3 {
        return 1.0;
    }
    let k = (n - 2) as f64;
    // increasing in ξ, negative at 1 and positive at n^2
    let g = |x: f64| k * (x / (1.0 + x)).ln() + 2.0 * x.ln();
    let (mut lo, mut hi) = (1.0f64, (n as f64) * (n as f64));
    while (hi - lo) > 1e-13 * lo {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub count: u64,
    pub demand: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StagedUdInstance {
    pub k: u32,
    pub tau: u64,
    pub n: u64,
    pub stages: Vec<Stage>,
}

impl StagedUdInstance {
    pub fn demands(&self) -> impl Iterator<Item = &Rat> {
        self.stages
            .iter()
            .flat_map(|s| std::iter::repeat_n(&s.demand, s.count as usize))
    }

    pub fn arrivals(&self) -> u64 {
        self.stages.iter().map(|s| s.count).sum()
    }

    pub fn to_instance(&self) -> Instance {
        let mut params = BTreeMap::new();
        params.insert("k".into(), self.k.to_string());
        params.insert("tau".into(), self.tau.to_string());
        let valuations = self
            .demands()
            .map(|d| Valuation::Demand(Demand::new(d.clone()).expect("demands lie in (0, 1]")))
            .collect();
        let mut inst = Instance::from_valuations(
            valuations,
            InstanceMeta {
                family: Some("staged".into()),
                seed: None,
                params,
            },
        );
        inst.n_max = self.n as usize;
        inst
    }
}

/// `k` stages over `n = (8τ)^k`: stage `j` brings `n / (2 (4τ)^(j-1))`
/// players of demand `(8τ)^j / n`.
pub fn staged_ud_instance(k: u32, tau: u64) -> Result<StagedUdInstance> {
    if k == 0 || tau == 0 {
        return Err(Error::Parameter("stage count and tau must be positive".into()));
    }
    let base = 8u64
        .checked_mul(tau)
        .ok_or_else(|| Error::Parameter("tau too large".into()))?;
    let n = base
        .checked_pow(k)
        .ok_or_else(|| Error::Parameter(format!("({base})^{k} overflows")))?;
    let mut stages = Vec::with_capacity(k as usize);
    for j in 1..=k {
        let div = 2 * (4 * tau).pow(j - 1);
        if n % div != 0 {
            return Err(Error::Parameter(format!("stage {j} count is not an integer")));
        }
        stages.push(Stage {
            count: n / div,
            demand: rat::frac(base.pow(j).into(), n.into()),
        });
    }
    Ok(StagedUdInstance { k, tau, n, stages })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Uniform,
    Pwu,
    Pwc,
    Demand,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Pwu => "pwu",
            Family::Pwc => "pwc",
            Family::Demand => "demand",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Family::Uniform),
            "pwu" => Ok(Family::Pwu),
            "pwc" => Ok(Family::Pwc),
            "demand" => Ok(Family::Demand),
            other => Err(Error::Parameter(format!("unknown family {other:?}"))),
        }
    }
}

fn random_pwu(rng: &mut ChaCha8Rng) -> PiecewiseConstant {
    let g: i64 = rng.gen_range(2..=24);
    let mut cells: Vec<i64> = (0..g).filter(|_| rng.gen_bool(0.5)).collect();
    if cells.is_empty() {
        cells.push(rng.gen_range(0..g));
    }
    let support = IntervalSet::from_pieces(
        cells
            .into_iter()
            .map(|c| (rat::ratio(c, g), rat::ratio(c + 1, g)))
            .collect(),
    )
    .expect("grid cells lie in [0, 1]");
    PiecewiseConstant::piecewise_uniform(&support).expect("support is non-empty")
}

fn random_pwc(rng: &mut ChaCha8Rng) -> PiecewiseConstant {
    const GRID: i64 = 60;
    let segments = rng.gen_range(1..=6usize);
    let mut cuts: Vec<i64> = sample(rng, (GRID - 1) as usize, segments - 1)
        .into_iter()
        .map(|c| c as i64 + 1)
        .collect();
    cuts.sort_unstable();
    let mut weights: Vec<i64> = (0..segments).map(|_| rng.gen_range(0..=5)).collect();
    if weights.iter().all(|&w| w == 0) {
        let k = rng.gen_range(0..segments);
        weights[k] = 1;
    }
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(GRID);
    let segs = bounds
        .windows(2)
        .zip(weights)
        .map(|(w, d)| (rat::ratio(w[0], GRID), rat::ratio(w[1], GRID), rat::int(d)))
        .collect();
    PiecewiseConstant::new(segs)
        .and_then(|v| v.normalize())
        .expect("some weight is positive")
}

/// Half the demands are uniform on a grid of step 1/1000, half spread
/// log-uniformly over dyadic scales down to about `1/(4n)`.
fn random_demand(rng: &mut ChaCha8Rng, n: usize) -> Rat {
    if rng.gen_bool(0.5) {
        rat::ratio(rng.gen_range(1..=1000), 1000)
    } else {
        let e = rng.gen_range(1..=ceil_log2(n as u64) + 2);
        let u: i64 = rng.gen_range(0..64);
        rat::frac((64 + u).into(), rat::Int::from(64) << e as usize)
    }
}

/// `n` seeded valuations of one family.
pub fn random_instance(n: usize, family: Family, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let valuations = (0..n)
        .map(|_| match family {
            Family::Uniform => Valuation::Density(Arc::new(PiecewiseConstant::uniform())),
            Family::Pwu => Valuation::Density(Arc::new(random_pwu(&mut rng))),
            Family::Pwc => Valuation::Density(Arc::new(random_pwc(&mut rng))),
            Family::Demand => Valuation::Demand(
                Demand::new(random_demand(&mut rng, n)).expect("demand lies in (0, 1]"),
            ),
        })
        .collect();
    Instance::from_valuations(
        valuations,
        InstanceMeta {
            family: Some(family.name().into()),
            seed: Some(seed),
            params: BTreeMap::new(),
        },
    )
}

/// `n` seeded demands in `[d, c·d]` on a grid of 1000 steps.
pub fn random_ranged_demands(n: usize, d: &Rat, c: &Rat, seed: u64) -> Result<Instance> {
    if !(d > &Rat::zero() && c >= &Rat::one() && (c * d) <= Rat::one()) {
        return Err(Error::Parameter("need 0 < d and 1 <= c with c d <= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = (c - Rat::one()) * d;
    let valuations = (0..n)
        .map(|_| {
            let u = rat::ratio(rng.gen_range(0..=1000), 1000);
            Demand::new(d + &span * u).map(Valuation::Demand)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut params = BTreeMap::new();
    params.insert("d".into(), rat::format(d));
    params.insert("c".into(), rat::format(c));
    Ok(Instance::from_valuations(
        valuations,
        InstanceMeta {
            family: Some("demand-range".into()),
            seed: Some(seed),
            params,
        },
    ))
}
