//! Interval allocators with one recall per arrival.
//!
//! [`Dfd1`] cuts every existing holding into `σ = ⌊2i(3 + ln i)⌋` pieces of
//! equal owner value; the newcomer takes the best `σ - σ_j` pieces from a
//! single player `j`, where `σ_j = ⌈v_j([0,1]) / v_j(A_j)⌉`. It keeps every
//! player `2(3 + ln i)`-proportional.
//!
//! [`Dfd2`] cuts every existing holding into `i` equal-owner-value pieces and
//! lets the newcomer pick the single piece it likes best. It keeps everybody
//! `i`-envy-free.

use std::sync::Arc;

use num_traits::{ToPrimitive, Zero};

use crate::certified;
use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::partition::{collect_pieces, PieceProfile};
use crate::rat::{self, Rat};
use crate::valuation::PiecewiseConstant;
use crate::{PlayerId, Recall};

pub type DfdRecall = Recall<IntervalSet>;

#[derive(Clone, Debug)]
pub struct DfdState {
    holdings: Vec<Arc<IntervalSet>>,
    live: Vec<bool>,
    valuations: Vec<Arc<PiecewiseConstant>>,
    /// Each player's value for its own holding.
    own: Vec<Rat>,
    unallocated: Arc<IntervalSet>,
    step: usize,
}

impl Default for DfdState {
    fn default() -> Self {
        Self::new()
    }
}

impl DfdState {
    /// Nothing allocated yet: the whole resource is unallocated.
    pub fn new() -> Self {
        Self {
            holdings: Vec::new(),
            live: Vec::new(),
            valuations: Vec::new(),
            own: Vec::new(),
            unallocated: Arc::new(IntervalSet::full()),
            step: 0,
        }
    }

    /// Assembles a state from explicit live holdings. The holdings must be
    /// pairwise disjoint; whatever they leave uncovered is unallocated.
    pub fn from_parts(parts: Vec<(IntervalSet, Arc<PiecewiseConstant>)>) -> Result<Self> {
        let mut covered = IntervalSet::empty();
        let mut state = Self::new();
        for (holding, valuation) in parts {
            if !holding.is_disjoint(&covered) {
                return Err(Error::Infeasible {
                    step: 0,
                    detail: "holdings overlap".into(),
                });
            }
            covered = covered.union(&holding);
            state.admit(valuation, holding);
        }
        state.unallocated = Arc::new(covered.complement());
        state.step = state.holdings.len();
        Ok(state)
    }

    /// Number of arrivals so far.
    pub fn arrivals(&self) -> usize {
        self.holdings.len()
    }

    /// Number of events (arrivals and departures) processed.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn holding(&self, p: PlayerId) -> &Arc<IntervalSet> {
        &self.holdings[p.index()]
    }

    pub fn valuation(&self, p: PlayerId) -> &Arc<PiecewiseConstant> {
        &self.valuations[p.index()]
    }

    /// `v_p(A_p)`.
    pub fn own_value(&self, p: PlayerId) -> &Rat {
        &self.own[p.index()]
    }

    pub fn is_live(&self, p: PlayerId) -> bool {
        self.live.get(p.index()).copied().unwrap_or(false)
    }

    pub fn live_players(&self) -> impl Iterator<Item = PlayerId> + '_ {
        self.live
            .iter()
            .enumerate()
            .filter(|(_, &l)| l)
            .map(|(i, _)| PlayerId::from_index(i))
    }

    pub fn unallocated(&self) -> &Arc<IntervalSet> {
        &self.unallocated
    }

    pub fn has_departures(&self) -> bool {
        self.live.iter().any(|l| !l)
    }

    fn admit(&mut self, valuation: Arc<PiecewiseConstant>, holding: IntervalSet) -> PlayerId {
        self.own.push(valuation.eval(&holding));
        self.holdings.push(Arc::new(holding));
        self.live.push(true);
        self.valuations.push(valuation);
        PlayerId(self.holdings.len())
    }

    /// Moves a departing player's holding to the unallocated pool, where it
    /// stays.
    pub fn depart(&mut self, p: PlayerId) -> Result<()> {
        if !self.is_live(p) {
            return Err(Error::UnknownPlayer(p));
        }
        self.step += 1;
        let freed = std::mem::replace(&mut self.holdings[p.index()], Arc::new(IntervalSet::empty()));
        self.unallocated = Arc::new(self.unallocated.union(&freed));
        self.live[p.index()] = false;
        self.own[p.index()] = Rat::zero();
        Ok(())
    }

    /// The very first arrival takes the whole resource; later arrivals into
    /// an empty room get nothing. Returns `None` when neither applies.
    fn arrive_trivially(&mut self, v: &Arc<PiecewiseConstant>) -> Option<DfdRecall> {
        if self.holdings.is_empty() {
            self.step += 1;
            let all = std::mem::replace(&mut self.unallocated, Arc::new(IntervalSet::empty()));
            self.admit(v.clone(), (*all).clone());
            return Some(no_recall(self.step));
        }
        if self.live_players().next().is_none() {
            self.step += 1;
            self.admit(v.clone(), IntervalSet::empty());
            return Some(no_recall(self.step));
        }
        None
    }

    fn transfer(
        &mut self,
        from: PlayerId,
        taken: IntervalSet,
        v: &Arc<PiecewiseConstant>,
    ) -> DfdRecall {
        self.step += 1;
        let rest = self.holdings[from.index()].subtract(&taken);
        let lost = self.valuations[from.index()].eval(&taken);
        self.own[from.index()] -= lost;
        self.holdings[from.index()] = Arc::new(rest);
        self.admit(v.clone(), taken.clone());
        Recall {
            step: self.step,
            player: if taken.is_empty() { None } else { Some(from) },
            removed: taken,
        }
    }
}

fn no_recall(step: usize) -> DfdRecall {
    Recall {
        step,
        player: None,
        removed: IntervalSet::empty(),
    }
}

/// Offers sorted by newcomer worth, highest first, then by player. A
/// candidate's value never exceeds its worth, so the search can stop early.
fn by_worth<T>(mut offers: Vec<(PlayerId, T, Rat)>) -> Vec<(PlayerId, T, Rat)> {
    offers.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    offers
}

fn may_win(best: &Option<Choice>, j: PlayerId, worth: &Rat) -> bool {
    match best {
        None => true,
        Some(b) => *worth > b.value || (*worth == b.value && j < b.player),
    }
}

fn beats(c: &Choice, best: &Option<Choice>) -> bool {
    match best {
        None => true,
        Some(b) => c.value > b.value || (c.value == b.value && c.player < b.player),
    }
}

/// How many pieces [`Dfd1`] cuts each holding into at arrival `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SigmaRule {
    /// `⌊2i(3 + ln i)⌋`.
    #[default]
    Logarithmic,
    /// A fixed count, for exercising the subset selection on small cases.
    Fixed(u64),
}

impl SigmaRule {
    pub fn sigma(self, i: u64) -> Result<u64> {
        match self {
            SigmaRule::Logarithmic => certified::sigma_of(i),
            SigmaRule::Fixed(s) => Ok(s),
        }
    }
}

/// Outcome of the newcomer's search over existing holdings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Choice {
    pub player: PlayerId,
    /// Newcomer's value for what it takes.
    pub value: Rat,
    /// Index ranges of the pieces taken.
    pub pieces: Vec<(usize, usize)>,
    pub piece_count: usize,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Dfd1 {
    pub sigma: SigmaRule,
}

impl Dfd1 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sigma(sigma: SigmaRule) -> Self {
        Self { sigma }
    }

    /// The `(j*, S*)` search: for every live player, the best subset of
    /// `σ - σ_j` of its pieces by newcomer value; the best player overall,
    /// lowest number among ties.
    pub fn choose(&self, state: &DfdState, v_new: &PiecewiseConstant) -> Result<Option<Choice>> {
        let i = state.arrivals() as u64 + 1;
        let sigma = self.sigma.sigma(i)?;
        let sigma_us = sigma as usize;
        let mut offers = Vec::new();
        for j in state.live_players() {
            let own = state.own_value(j);
            let sigma_j = (!own.is_zero()).then(|| rat::ceil_int(&(state.valuation(j).total_mass() / own)));
            let short = sigma_j.as_ref().is_none_or(|s| *s > rat::Int::from(sigma));
            if short && !state.has_departures() {
                return Err(Error::Infeasible {
                    step: state.step() + 1,
                    detail: match sigma_j {
                        None => format!("player {j} holds nothing of value"),
                        Some(s) => format!("player {j} needs {s} of {sigma} pieces"),
                    },
                });
            }
            // After departures the freed resource sits idle, so a player can
            // fall short of 1/σ; such a player gives up nothing.
            let Some(sigma_j) = sigma_j else { continue };
            let take = if short {
                0
            } else {
                sigma_us - sigma_j.to_usize().expect("bounded by sigma")
            };
            offers.push((j, take, v_new.eval(state.holding(j))));
        }
        let mut best: Option<Choice> = None;
        for (j, take, worth) in by_worth(offers) {
            if !may_win(&best, j, &worth) {
                continue;
            }
            let candidate = if worth.is_zero() || take == 0 {
                Choice {
                    player: j,
                    value: Rat::zero(),
                    pieces: if take == 0 { vec![] } else { vec![(0, take)] },
                    piece_count: sigma_us,
                }
            } else {
                let profile = PieceProfile::build(state.valuation(j), state.holding(j), sigma_us, v_new)?;
                let (value, pieces) = profile.top(take);
                Choice {
                    player: j,
                    value,
                    pieces,
                    piece_count: sigma_us,
                }
            };
            if beats(&candidate, &best) {
                best = Some(candidate);
            }
        }
        Ok(best)
    }

    pub fn arrive(&self, state: &mut DfdState, v: &Arc<PiecewiseConstant>) -> Result<DfdRecall> {
        if let Some(r) = state.arrive_trivially(v) {
            return Ok(r);
        }
        match self.choose(state, v)? {
            Some(choice) if !choice.pieces.is_empty() => {
                let from = choice.player;
                let taken = collect_pieces(
                    state.valuation(from),
                    state.holding(from),
                    choice.piece_count,
                    &choice.pieces,
                )?;
                Ok(state.transfer(from, taken, v))
            }
            _ => {
                state.step += 1;
                state.admit(v.clone(), IntervalSet::empty());
                Ok(no_recall(state.step))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Dfd2;

impl Dfd2 {
    /// Best single piece over all live players' `i`-way partitions; ties go
    /// to the lowest `(player, piece)` pair.
    pub fn choose(&self, state: &DfdState, v_new: &PiecewiseConstant) -> Result<Option<Choice>> {
        let i = state.arrivals() + 1;
        let offers = state
            .live_players()
            // no equal-value partition of a worthless holding exists
            .filter(|&j| !state.own_value(j).is_zero())
            .map(|j| (j, (), v_new.eval(state.holding(j))))
            .collect();
        let mut best: Option<Choice> = None;
        for (j, (), worth) in by_worth(offers) {
            if !may_win(&best, j, &worth) {
                continue;
            }
            let candidate = if worth.is_zero() {
                Choice {
                    player: j,
                    value: Rat::zero(),
                    pieces: vec![(0, 1)],
                    piece_count: i,
                }
            } else {
                let profile = PieceProfile::build(state.valuation(j), state.holding(j), i, v_new)?;
                let (k, value) = profile.best_piece();
                Choice {
                    player: j,
                    value: value.clone(),
                    pieces: vec![(k, k + 1)],
                    piece_count: i,
                }
            };
            if beats(&candidate, &best) {
                best = Some(candidate);
            }
        }
        Ok(best)
    }

    pub fn arrive(&self, state: &mut DfdState, v: &Arc<PiecewiseConstant>) -> Result<DfdRecall> {
        if let Some(r) = state.arrive_trivially(v) {
            return Ok(r);
        }
        match self.choose(state, v)? {
            Some(choice) => {
                let from = choice.player;
                let taken = collect_pieces(
                    state.valuation(from),
                    state.holding(from),
                    choice.piece_count,
                    &choice.pieces,
                )?;
                Ok(state.transfer(from, taken, v))
            }
            None => {
                state.step += 1;
                state.admit(v.clone(), IntervalSet::empty());
                Ok(no_recall(state.step))
            }
        }
    }
}

/// Pure form of a [`Dfd1`] arrival.
pub fn dfd1_arrival(state: &DfdState, v: &Arc<PiecewiseConstant>) -> Result<(DfdState, DfdRecall)> {
    let mut next = state.clone();
    let r = Dfd1::new().arrive(&mut next, v)?;
    Ok((next, r))
}

/// Pure form of a [`Dfd2`] arrival.
pub fn dfd2_arrival(state: &DfdState, v: &Arc<PiecewiseConstant>) -> Result<(DfdState, DfdRecall)> {
    let mut next = state.clone();
    let r = Dfd2.arrive(&mut next, v)?;
    Ok((next, r))
}

/// `v([0,1]) / v(A)`: how many times over the holding falls short of the
/// whole resource.
pub fn shortfall(v: &PiecewiseConstant, held: &IntervalSet) -> Option<Rat> {
    let own = v.eval(held);
    if own.is_zero() {
        None
    } else {
        Some(v.total_mass() / own)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;

    fn uniform() -> Arc<PiecewiseConstant> {
        Arc::new(PiecewiseConstant::uniform())
    }

    fn support(a: Rat, b: Rat) -> Arc<PiecewiseConstant> {
        Arc::new(PiecewiseConstant::piecewise_uniform(&IntervalSet::interval(a, b).unwrap()).unwrap())
    }

    #[test]
    fn first_arrival_takes_everything() {
        for alg in [0, 1] {
            let mut s = DfdState::new();
            let r = if alg == 0 {
                Dfd1::new().arrive(&mut s, &support(rat::zero(), ratio(1, 3)))
            } else {
                Dfd2.arrive(&mut s, &uniform())
            }
            .unwrap();
            assert_eq!(r.player, None);
            assert_eq!(**s.holding(PlayerId(1)), IntervalSet::full());
            assert!(s.unallocated().is_empty());
        }
    }

    #[test]
    fn dfd1_uniform_pair() {
        let mut s = DfdState::new();
        Dfd1::new().arrive(&mut s, &uniform()).unwrap();
        let r = Dfd1::new().arrive(&mut s, &uniform()).unwrap();
        assert_eq!(r.player, Some(PlayerId(1)));
        // σ = 14, σ_1 = 1: the newcomer takes the 13 lowest-index pieces
        assert_eq!(s.holding(PlayerId(2)).measure(), ratio(13, 14));
        assert_eq!(
            **s.holding(PlayerId(1)),
            IntervalSet::interval(ratio(13, 14), rat::one()).unwrap()
        );
        assert_eq!(shortfall(&PiecewiseConstant::uniform(), s.holding(PlayerId(1))), Some(rat::int(14)));
    }

    #[test]
    fn dfd1_newcomer_targets_aligned_piece() {
        let mut s = DfdState::new();
        Dfd1::new().arrive(&mut s, &uniform()).unwrap();
        let v2 = support(rat::zero(), ratio(1, 14));
        Dfd1::new().arrive(&mut s, &v2).unwrap();
        assert_eq!(v2.eval(s.holding(PlayerId(2))), rat::one());
    }

    #[test]
    fn dfd2_uniform_sequence() {
        let mut s = DfdState::new();
        for _ in 0..2 {
            Dfd2.arrive(&mut s, &uniform()).unwrap();
        }
        assert_eq!(**s.holding(PlayerId(2)), IntervalSet::interval(rat::zero(), ratio(1, 2)).unwrap());
        assert_eq!(**s.holding(PlayerId(1)), IntervalSet::interval(ratio(1, 2), rat::one()).unwrap());
        // i = 3: four candidate pieces of value 1/4, tie broken to (player 1, piece 0)
        let c = Dfd2.choose(&s, &PiecewiseConstant::uniform()).unwrap().unwrap();
        assert_eq!((c.player, c.pieces.clone(), c.value.clone()), (PlayerId(1), vec![(0, 1)], ratio(1, 6)));
        let r = Dfd2.arrive(&mut s, &uniform()).unwrap();
        assert_eq!(r.player, Some(PlayerId(1)));
        assert_eq!(**s.holding(PlayerId(3)), IntervalSet::interval(ratio(1, 2), ratio(2, 3)).unwrap());
    }

    #[test]
    fn dfd2_newcomer_wanting_one_holding() {
        let mut s = DfdState::new();
        for _ in 0..3 {
            Dfd2.arrive(&mut s, &uniform()).unwrap();
        }
        let a1 = (**s.holding(PlayerId(1))).clone();
        let v = Arc::new(PiecewiseConstant::piecewise_uniform(&a1).unwrap());
        Dfd2.arrive(&mut s, &v).unwrap();
        let got = s.holding(PlayerId(4));
        assert!(got.is_subset(&a1));
        assert!(v.eval(got) >= ratio(1, 4));
    }

    #[test]
    fn departures_free_into_unallocated() {
        let mut s = DfdState::new();
        for _ in 0..3 {
            Dfd2.arrive(&mut s, &uniform()).unwrap();
        }
        let freed = (**s.holding(PlayerId(2))).clone();
        s.depart(PlayerId(2)).unwrap();
        assert_eq!(**s.unallocated(), freed);
        assert!(matches!(s.depart(PlayerId(2)), Err(Error::UnknownPlayer(_))));
        // a newcomer wanting only the freed resource gets nothing of value
        let v = Arc::new(PiecewiseConstant::piecewise_uniform(&freed).unwrap());
        Dfd2.arrive(&mut s, &v).unwrap();
        assert_eq!(v.eval(s.holding(PlayerId(4))), rat::zero());
        assert_eq!(**s.unallocated(), freed);
    }

    #[test]
    fn everyone_departed_newcomer_gets_nothing() {
        let mut s = DfdState::new();
        Dfd1::new().arrive(&mut s, &uniform()).unwrap();
        s.depart(PlayerId(1)).unwrap();
        let r = Dfd1::new().arrive(&mut s, &uniform()).unwrap();
        assert_eq!(r.player, None);
        assert!(s.holding(PlayerId(2)).is_empty());
    }

    #[test]
    fn pure_forms_leave_input_untouched() {
        let s = DfdState::new();
        let (s1, _) = dfd1_arrival(&s, &uniform()).unwrap();
        let (s2, _) = dfd2_arrival(&s1, &uniform()).unwrap();
        assert_eq!(s.arrivals(), 0);
        assert_eq!(s1.arrivals(), 1);
        assert_eq!(s2.arrivals(), 2);
    }

    #[test]
    fn infeasible_sigma_detected() {
        let s = DfdState::from_parts(vec![
            (IntervalSet::interval(rat::zero(), ratio(1, 10)).unwrap(), uniform()),
            (IntervalSet::interval(ratio(1, 10), rat::one()).unwrap(), uniform()),
        ])
        .unwrap();
        let err = Dfd1::with_sigma(SigmaRule::Fixed(5)).choose(&s, &PiecewiseConstant::uniform());
        assert!(matches!(err, Err(Error::Infeasible { .. })));
    }
}
