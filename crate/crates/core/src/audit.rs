//! Fairness ratios and structural checks over traces.
//!
//! [`audit`] walks a trace once and maintains everything incrementally: for
//! interval traces a lazily updated matrix `v_j(A_j')` (one max-heap per row)
//! plus an ownership map of the resource; for demand traces the sorted
//! per-player values. The free functions ([`envy_factor`] and friends)
//! recompute a single step from scratch and serve as the reference route.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::certified::{self, Enclosure, Verdict};
use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::rat::{self, Rat};
pub use crate::trace::HaltCertificate;
use crate::trace::{Event, Holding, Snapshot, Trace, TraceStep};
use crate::ud::demand_class;
use crate::valuation::{PiecewiseConstant, Valuation};
use crate::Algorithm;

/// A fairness ratio; `Unbounded` when some player values their own holding
/// at zero while the comparison side is positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Finite(Rat),
    Unbounded,
}

impl Factor {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Factor::Unbounded)
    }

    pub fn finite(&self) -> Option<&Rat> {
        match self {
            Factor::Finite(r) => Some(r),
            Factor::Unbounded => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Factor::Finite(r) => rat::to_f64(r),
            Factor::Unbounded => f64::INFINITY,
        }
    }

    /// `num / den`, unbounded when `den` is zero.
    fn ratio(num: Rat, den: &Rat) -> Self {
        if den.is_zero() {
            Factor::Unbounded
        } else {
            Factor::Finite(num / den)
        }
    }
}

impl Ord for Factor {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Factor::Finite(a), Factor::Finite(b)) => a.cmp(b),
            (Factor::Finite(_), Factor::Unbounded) => Ordering::Less,
            (Factor::Unbounded, Factor::Finite(_)) => Ordering::Greater,
            (Factor::Unbounded, Factor::Unbounded) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Factor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Finite(r) => f.write_str(&rat::format(r)),
            Factor::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Factor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Factor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let s = String::deserialize(d)?;
        if s == "unbounded" {
            return Ok(Factor::Unbounded);
        }
        rat::parse(&s)
            .map(Factor::Finite)
            .ok_or_else(|| D::Error::custom(format!("invalid factor {s:?}")))
    }
}

fn max_opt(acc: &mut Option<Factor>, f: &Option<Factor>) {
    if let Some(f) = f {
        if acc.as_ref().is_none_or(|a| f > a) {
            *acc = Some(f.clone());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepAudit {
    pub step: usize,
    pub arrivals: usize,
    pub live: usize,
    /// Proportionality with the live player count as denominator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Factor>,
    /// Proportionality with the number of arrivals so far as denominator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_arrivals: Option<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub allocated: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub total_demand: Option<Rat>,
    /// Approximate value of the checked bound, for plotting.
    pub bound: f64,
    pub pass: bool,
}

mod opt_rat {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rat::{self, Rat};

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&rat::format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        use serde::de::Error as _;
        match Option::<String>::deserialize(d)? {
            Some(s) => rat::parse(&s)
                .map(Some)
                .ok_or_else(|| D::Error::custom(format!("invalid rational {s:?}"))),
            None => Ok(None),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overall {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_arrivals: Option<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Factor>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub max_allocated: Option<Rat>,
    /// Largest per-class allocation times the class count (`ud` only).
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub class_budget_ratio: Option<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub step: usize,
    pub rule: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub step: usize,
    pub bound: String,
    pub lhs: Factor,
    pub rhs: String,
    pub verdict: Verdict,
}

/// Outcome of a structural check with its first failure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub ok: bool,
    pub first_violation: Option<Violation>,
}

impl Check {
    fn pass() -> Self {
        Self {
            ok: true,
            first_violation: None,
        }
    }

    fn fail(&mut self, step: usize, rule: &str, detail: String) {
        if self.ok {
            self.ok = false;
            self.first_violation = Some(Violation {
                step,
                rule: rule.into(),
                detail,
            });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub algorithm: Algorithm,
    pub steps: usize,
    pub arrivals: usize,
    pub recallable_ok: bool,
    pub conservation_ok: bool,
    pub non_wasteful_ok: bool,
    pub violations: Vec<Violation>,
    pub bound_violations: Vec<BoundViolation>,
    pub inconclusive: Vec<BoundViolation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halt: Option<HaltCertificate>,
    pub overall: Overall,
    pub per_step: Vec<StepAudit>,
}

impl AuditReport {
    /// Structural checks hold and no bound is violated. Non-wastefulness is
    /// a reported property, not a requirement.
    pub fn passed(&self) -> bool {
        self.recallable_ok && self.conservation_ok && self.bound_violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,sigma,xi,eta,bound,pass\n");
        let cell = |f: &Option<Factor>| f.as_ref().map(|f| fmt_f64(f.to_f64())).unwrap_or_default();
        for s in &self.per_step {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.step,
                cell(&s.sigma_arrivals),
                cell(&s.xi),
                cell(&s.eta),
                fmt_f64(s.bound),
                s.pass
            ));
        }
        out
    }
}

pub(crate) fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:.12}")
    }
}

// ----------------------------------------------------------------------
// Direct single-step computations.

fn density_of(snap: &Snapshot, j: usize) -> Result<&Arc<PiecewiseConstant>> {
    snap.valuations[j]
        .as_density()
        .ok_or_else(|| Error::Compatibility("interval audit on a demand valuation".into()))
}

fn set_of(snap: &Snapshot, j: usize) -> Result<&Arc<IntervalSet>> {
    snap.holdings[j]
        .as_set()
        .ok_or_else(|| Error::Compatibility("interval audit on a size holding".into()))
}

/// Worst `v_j([0,1]) / (k · v_j(A_j))` over live players, `k` the number of
/// arrivals so far.
pub fn proportionality_factor(trace: &Trace, step: usize) -> Result<Option<Factor>> {
    let snap = trace.snapshot(step)?;
    proportionality_of(&snap, snap.arrivals())
}

/// As [`proportionality_factor`] with the live player count as `k`.
pub fn proportionality_factor_live(trace: &Trace, step: usize) -> Result<Option<Factor>> {
    let snap = trace.snapshot(step)?;
    let live = snap.live_players().count();
    proportionality_of(&snap, live)
}

pub fn proportionality_of(snap: &Snapshot, k: usize) -> Result<Option<Factor>> {
    let mut worst = None;
    for p in snap.live_players() {
        let v = density_of(snap, p.index())?;
        let own = v.eval(set_of(snap, p.index())?);
        let f = Factor::ratio(v.total_mass(), &(own * rat::int(k as i64)));
        max_opt(&mut worst, &Some(f));
    }
    Ok(worst)
}

/// Worst `v_j(A_j') / v_j(A_j)` over live pairs; zero over zero counts as 1.
pub fn envy_factor(trace: &Trace, step: usize) -> Result<Option<Factor>> {
    envy_of(&trace.snapshot(step)?)
}

pub fn envy_of(snap: &Snapshot) -> Result<Option<Factor>> {
    let live: Vec<usize> = snap.live_players().map(|p| p.index()).collect();
    let mut worst = None;
    for &j in &live {
        let v = density_of(snap, j)?;
        let own = v.eval(set_of(snap, j)?);
        for &k in &live {
            let other = v.eval(set_of(snap, k)?);
            let f = if other.is_zero() && own.is_zero() {
                Factor::Finite(Rat::one())
            } else {
                Factor::ratio(other, &own)
            };
            max_opt(&mut worst, &Some(f));
        }
    }
    Ok(worst)
}

/// Worst `1 / (v_j(size_j) · max(D, 1))` over live players, `D` the total
/// demand of every arrival so far.
pub fn ud_fairness_factor(trace: &Trace, step: usize) -> Result<Option<Factor>> {
    ud_fairness_of(&trace.snapshot(step)?)
}

pub fn ud_fairness_of(snap: &Snapshot) -> Result<Option<Factor>> {
    let mut total = Rat::zero();
    for v in &snap.valuations {
        let d = v
            .as_demand()
            .ok_or_else(|| Error::Compatibility("demand audit on an interval valuation".into()))?;
        total += d.d();
    }
    let scale = if total > Rat::one() { total } else { Rat::one() };
    let mut worst = None;
    for p in snap.live_players() {
        let d = snap.valuations[p.index()].as_demand().expect("checked above");
        let size = snap.holdings[p.index()]
            .as_size()
            .ok_or_else(|| Error::Compatibility("demand audit on an interval holding".into()))?;
        let f = Factor::ratio(Rat::one(), &(d.eval(size) * &scale));
        max_opt(&mut worst, &Some(f));
    }
    Ok(worst)
}

// ----------------------------------------------------------------------
// Structural checks.

struct Structural {
    holdings: Vec<Holding>,
    live: Vec<bool>,
    tau: usize,
    recall: Check,
    departures: Check,
}

impl Structural {
    fn new(tau: usize) -> Self {
        Self {
            holdings: Vec::new(),
            live: Vec::new(),
            tau,
            recall: Check::pass(),
            departures: Check::pass(),
        }
    }

    /// Applies a step; returns the players whose holding actually changed
    /// together with their previous holding.
    fn apply(&mut self, step: &TraceStep) -> Result<Vec<(usize, Holding)>> {
        let i = step.step;
        let arriving = match &step.event {
            Event::Arrival { player, valuation } => {
                if player.0 != self.holdings.len() + 1 {
                    return Err(Error::Schema {
                        line: i,
                        detail: format!("arrival of player {player} out of order"),
                    });
                }
                self.holdings.push(match valuation {
                    Valuation::Density(_) => Holding::Set(Arc::new(IntervalSet::empty())),
                    Valuation::Demand(_) => Holding::Size(Rat::zero()),
                });
                self.live.push(true);
                Some(player.index())
            }
            Event::Departure { player } => {
                if player.0 == 0 || player.0 > self.holdings.len() || !self.live[player.index()] {
                    return Err(Error::Schema {
                        line: i,
                        detail: format!("departure of absent player {player}"),
                    });
                }
                self.live[player.index()] = false;
                None
            }
        };
        let departing = match &step.event {
            Event::Departure { player } => Some(player.index()),
            Event::Arrival { .. } => None,
        };
        let mut changed = Vec::new();
        let mut prior = 0;
        for (p, h) in &step.changes {
            let j = p.index();
            if p.0 == 0 || j >= self.holdings.len() {
                return Err(Error::Schema {
                    line: i,
                    detail: format!("change for unknown player {p}"),
                });
            }
            if *h == self.holdings[j] {
                continue;
            }
            if Some(j) == departing {
                if !holding_is_empty(h) {
                    self.departures
                        .fail(i, "departure", format!("player {p} keeps a holding after leaving"));
                }
            } else if Some(j) != arriving {
                if !self.live[j] {
                    self.recall
                        .fail(i, "recallable", format!("holding of departed player {p} changed"));
                }
                prior += 1;
                if !shrinks(&self.holdings[j], h) {
                    self.recall
                        .fail(i, "recallable", format!("holding of player {p} grew"));
                }
            }
            let old = std::mem::replace(&mut self.holdings[j], h.clone());
            changed.push((j, old));
        }
        if prior > self.tau {
            self.recall.fail(
                i,
                "recallable",
                format!("{prior} existing players lost resource, more than {}", self.tau),
            );
        }
        if let Some((p, removed)) = &step.recall {
            let j = p.index();
            let ok = changed.iter().find(|(k, _)| *k == j).is_some_and(|(_, old)| {
                removal_matches(old, &self.holdings[j], removed)
            });
            if !ok {
                self.recall
                    .fail(i, "recall record", format!("recall of player {p} does not match holdings"));
            }
        }
        Ok(changed)
    }
}

fn holding_is_empty(h: &Holding) -> bool {
    match h {
        Holding::Set(s) => s.is_empty(),
        Holding::Size(r) => r.is_zero(),
    }
}

fn shrinks(old: &Holding, new: &Holding) -> bool {
    match (old, new) {
        (Holding::Set(a), Holding::Set(b)) => b.is_subset(a),
        (Holding::Size(a), Holding::Size(b)) => b <= a,
        _ => false,
    }
}

fn removal_matches(old: &Holding, new: &Holding, removed: &Holding) -> bool {
    match (old, new, removed) {
        (Holding::Set(a), Holding::Set(b), Holding::Set(r)) => a.subtract(b) == **r,
        (Holding::Size(a), Holding::Size(b), Holding::Size(r)) => &(a - b) == r,
        _ => false,
    }
}

/// Every step shrinks at most `tau` earlier players and never grows one.
pub fn check_recallable(trace: &Trace, tau: usize) -> Result<Check> {
    let mut st = Structural::new(tau);
    for step in &trace.steps {
        st.apply(step)?;
    }
    Ok(st.recall)
}

/// No player ever holds a positive-length part of their own zero-density
/// region.
pub fn check_non_wasteful(trace: &Trace) -> Result<Check> {
    let mut st = Structural::new(usize::MAX);
    let mut zero: Vec<IntervalSet> = Vec::new();
    let mut check = Check::pass();
    for step in &trace.steps {
        if let Event::Arrival { valuation, .. } = &step.event {
            zero.push(
                valuation
                    .as_density()
                    .map(|v| v.zero_region())
                    .unwrap_or_default(),
            );
        }
        for (j, _) in st.apply(step)? {
            if let Holding::Set(s) = &st.holdings[j] {
                let waste = s.intersect(&zero[j]);
                if !waste.measure().is_zero() {
                    check.fail(
                        step.step,
                        "non-wasteful",
                        format!("player {} holds {:?} of zero value", j + 1, waste),
                    );
                }
            }
        }
    }
    Ok(check)
}

/// Disjointness and full coverage of the interval, or for demand traces
/// non-negative sizes summing to at most one.
pub fn check_conservation(trace: &Trace) -> Result<Check> {
    Ok(run_audit(trace)?.1)
}

/// Bound violations of the algorithm named in the trace header.
pub fn check_bounds(trace: &Trace) -> Result<Vec<BoundViolation>> {
    Ok(audit(trace)?.bound_violations)
}

// ----------------------------------------------------------------------
// Ownership of the interval, for disjointness and coverage.

const POOL: usize = usize::MAX;

struct Ownership {
    map: BTreeMap<Rat, (Rat, usize)>,
    total: Rat,
}

impl Ownership {
    fn new() -> Self {
        let mut map = BTreeMap::new();
        map.insert(Rat::zero(), (Rat::one(), POOL));
        Self {
            map,
            total: Rat::one(),
        }
    }

    fn remove(&mut self, owner: usize, set: &IntervalSet) {
        for (a, b) in set.pieces() {
            if let Some((end, o)) = self.map.get(a) {
                if *o == owner && end == b {
                    self.map.remove(a);
                    self.total -= b - a;
                }
            }
        }
    }

    /// Returns false if some piece overlaps what is already owned.
    fn insert(&mut self, owner: usize, set: &IntervalSet) -> bool {
        for (a, b) in set.pieces() {
            if let Some((_, (end, _))) = self.map.range(..b.clone()).next_back() {
                if end > a {
                    return false;
                }
            }
            self.map.insert(a.clone(), (b.clone(), owner));
            self.total += b - a;
        }
        true
    }
}

// ----------------------------------------------------------------------
// Incremental engine.

struct BoundCheck {
    name: &'static str,
    violations: Vec<BoundViolation>,
    inconclusive: Vec<BoundViolation>,
}

impl BoundCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            violations: Vec::new(),
            inconclusive: Vec::new(),
        }
    }

    fn record(&mut self, step: usize, lhs: &Factor, rhs: String, verdict: Verdict) -> bool {
        let v = BoundViolation {
            step,
            bound: self.name.into(),
            lhs: lhs.clone(),
            rhs,
            verdict,
        };
        match verdict {
            Verdict::Pass => true,
            Verdict::Fail => {
                self.violations.push(v);
                false
            }
            Verdict::Inconclusive => {
                self.inconclusive.push(v);
                true
            }
        }
    }

    /// `lhs <= rhs` for an exact rational right-hand side.
    fn exact(&mut self, step: usize, lhs: &Factor, rhs: &Rat) -> bool {
        let verdict = match lhs {
            Factor::Finite(l) if l <= rhs => Verdict::Pass,
            _ => Verdict::Fail,
        };
        self.record(step, lhs, rat::format(rhs), verdict)
    }

    /// `lhs <= rhs` for a transcendental right-hand side; `quick` is an exact
    /// rational known to be below it.
    fn certified(
        &mut self,
        step: usize,
        lhs: &Factor,
        quick: &Enclosure,
        rhs: impl Fn(u32) -> Enclosure,
    ) -> bool {
        let verdict = match lhs {
            Factor::Unbounded => Verdict::Fail,
            Factor::Finite(l) if *l <= quick.lo => Verdict::Pass,
            Factor::Finite(l) if *l > quick.hi => Verdict::Fail,
            Factor::Finite(l) => certified::certify_le(l, rhs),
        };
        self.record(step, lhs, fmt_f64(rat::to_f64(&quick.hi)), verdict)
    }
}

/// `old \ new` when `new` is a subset of a set-valued `old`.
fn shrink_of(old: &Holding, new: &IntervalSet) -> Option<IntervalSet> {
    match old {
        Holding::Set(old) if !old.is_empty() && new.is_subset(old) => Some(old.subtract(new)),
        _ => None,
    }
}

/// Relative slack covering one rounding of an exact value to `f64`.
const ULP_SLACK: f64 = 1.0 / (1u64 << 50) as f64;

/// A density in floating point, for bracketing values cheaply.
struct FloatDensity {
    segs: Vec<(f64, f64, f64)>,
    dmax: f64,
}

impl FloatDensity {
    fn new(v: &PiecewiseConstant) -> Self {
        let segs: Vec<(f64, f64, f64)> = v
            .segments()
            .iter()
            .map(|s| (rat::to_f64(&s.start), rat::to_f64(&s.end), rat::to_f64(&s.density)))
            .collect();
        let dmax = segs.iter().map(|s| s.2).fold(0.0, f64::max) * (1.0 + ULP_SLACK);
        Self { segs, dmax }
    }

    /// Interval containing the exact value of a set whose endpoints were
    /// rounded to nearest.
    fn enclose(&self, set: &[(f64, f64)]) -> (f64, f64) {
        let mut sum = 0.0;
        let mut terms = set.len() + 1;
        let mut k = 0;
        for &(a, b) in set {
            while k < self.segs.len() && self.segs[k].1 <= a {
                k += 1;
            }
            let mut m = k;
            while m < self.segs.len() && self.segs[m].0 < b {
                let (s0, s1, d) = self.segs[m];
                let w = b.min(s1) - a.max(s0);
                if w > 0.0 {
                    sum += d * w;
                }
                terms += 1;
                m += 1;
            }
        }
        // Each term is off by a few units in the last place of dmax, from
        // rounded endpoints, boundary slivers and the summation.
        let err = terms as f64 * self.dmax * 16.0 * f64::EPSILON;
        ((sum - err).max(0.0), sum + err)
    }
}

struct DfdEngine {
    vals: Vec<Arc<PiecewiseConstant>>,
    fvals: Vec<FloatDensity>,
    mass: Vec<Rat>,
    zero: Vec<IntervalSet>,
    diag: Vec<Rat>,
    share: Vec<Rat>,
    version: Vec<u32>,
    fsets: Vec<Vec<(f64, f64)>>,
    /// Enclosures of `v_j(A_c)`, by row then column.
    approx: Vec<Vec<(f64, f64)>>,
    /// Exact `v_j(A_c)` with the column version it was computed for.
    exact: HashMap<(usize, usize), (u32, Rat)>,
}

impl DfdEngine {
    fn new() -> Self {
        Self {
            vals: Vec::new(),
            fvals: Vec::new(),
            mass: Vec::new(),
            zero: Vec::new(),
            diag: Vec::new(),
            share: Vec::new(),
            version: Vec::new(),
            fsets: Vec::new(),
            approx: Vec::new(),
            exact: HashMap::new(),
        }
    }

    fn admit(&mut self, v: &Arc<PiecewiseConstant>) {
        self.mass.push(v.total_mass());
        self.zero.push(v.zero_region());
        self.fvals.push(FloatDensity::new(v));
        self.vals.push(v.clone());
        self.diag.push(Rat::zero());
        self.share.push(Rat::zero());
        self.version.push(0);
        self.fsets.push(Vec::new());
        self.approx.push(Vec::new());
    }

    fn set_approx(&mut self, row: usize, col: usize) {
        let e = self.fvals[row].enclose(&self.fsets[col]);
        let r = &mut self.approx[row];
        if r.len() <= col {
            r.resize(col + 1, (0.0, 0.0));
        }
        r[col] = e;
    }

    fn approx(&self, row: usize, col: usize) -> (f64, f64) {
        self.approx[row].get(col).copied().unwrap_or((0.0, 0.0))
    }

    fn exact(&mut self, st: &Structural, row: usize, col: usize) -> Rat {
        let version = self.version[col];
        if let Some((v, value)) = self.exact.get(&(row, col)) {
            if *v == version {
                return value.clone();
            }
        }
        let value = self.vals[row].eval(st.holdings[col].as_set().expect("interval trace"));
        self.exact.insert((row, col), (version, value.clone()));
        value
    }

    /// Updates after the holdings in `st` changed for the players in
    /// `changed`, given with their previous holdings.
    fn update(
        &mut self,
        st: &Structural,
        changed: &[(usize, Holding)],
        arrived: Option<usize>,
    ) {
        let set = |j: usize| st.holdings[j].as_set().expect("interval trace");
        for (c, _) in changed {
            let c = *c;
            self.version[c] += 1;
            self.fsets[c] = if st.live[c] {
                set(c).pieces().iter().map(|(a, b)| (rat::to_f64(a), rat::to_f64(b))).collect()
            } else {
                Vec::new()
            };
        }
        let live: Vec<usize> = (0..st.live.len()).filter(|&j| st.live[j]).collect();
        if let Some(n) = arrived {
            for &k in &live {
                if k != n {
                    self.set_approx(n, k);
                }
            }
        }
        for (c, old) in changed {
            let c = *c;
            if !st.live[c] {
                continue;
            }
            for &j in &live {
                if j != c && Some(j) != arrived {
                    self.set_approx(j, c);
                }
            }
            let a = set(c);
            self.diag[c] = match shrink_of(old, a) {
                Some(removed) => &self.diag[c] - self.vals[c].eval(&removed),
                None => self.vals[c].eval(a),
            };
            self.share[c] = if self.mass[c].is_one() {
                self.diag[c].clone()
            } else {
                &self.diag[c] / &self.mass[c]
            };
        }
    }

    /// Exact envy factor of row `j`, looking only at columns that may hold
    /// the row maximum.
    fn row_factor(&mut self, st: &Structural, j: usize, live: &[usize]) -> Factor {
        let others = live.iter().copied().filter(|&c| c != j);
        if self.diag[j].is_zero() {
            for c in others {
                let (lo, hi) = self.approx(j, c);
                if lo > 0.0 || (hi > 0.0 && self.exact(st, j, c).is_positive()) {
                    return Factor::Unbounded;
                }
            }
            return Factor::Finite(Rat::one());
        }
        let floor = others.clone().map(|c| self.approx(j, c).0).fold(0.0, f64::max);
        let mut top = Rat::zero();
        for c in others {
            if self.approx(j, c).1 >= floor {
                let v = self.exact(st, j, c);
                if v > top {
                    top = v;
                }
            }
        }
        if top <= self.diag[j] {
            Factor::Finite(Rat::one())
        } else {
            Factor::Finite(top / &self.diag[j])
        }
    }

    fn envy(&mut self, st: &Structural) -> Option<Factor> {
        let live: Vec<usize> = (0..st.live.len()).filter(|&j| st.live[j]).collect();
        if live.is_empty() {
            return None;
        }
        // Bracket every row's factor, then settle only rows that may be the
        // largest.
        let mut bounds = Vec::with_capacity(live.len());
        for &j in &live {
            let (mut top_lo, mut top_hi) = (0.0f64, 0.0f64);
            for &c in &live {
                if c != j {
                    let (lo, hi) = self.approx(j, c);
                    top_lo = top_lo.max(lo);
                    top_hi = top_hi.max(hi);
                }
            }
            let d = rat::to_f64(&self.diag[j]);
            let (lo, hi) = if self.diag[j].is_zero() {
                if top_lo > 0.0 {
                    (f64::INFINITY, f64::INFINITY)
                } else if top_hi > 0.0 {
                    (1.0, f64::INFINITY)
                } else {
                    (1.0, 1.0)
                }
            } else {
                let lo = top_lo / (d * (1.0 + ULP_SLACK)) * (1.0 - ULP_SLACK);
                let hi = top_hi / (d * (1.0 - ULP_SLACK)) * (1.0 + ULP_SLACK);
                (lo.max(1.0), hi.max(1.0))
            };
            bounds.push((j, lo, hi));
        }
        let floor = bounds.iter().map(|b| b.1).fold(1.0, f64::max);
        let mut best: Option<Factor> = None;
        for (j, _, hi) in bounds {
            if hi >= floor {
                let f = self.row_factor(st, j, &live);
                if best.as_ref().is_none_or(|b| f > *b) {
                    best = Some(f);
                }
            }
        }
        best
    }

    fn min_share(&self, st: &Structural) -> Option<&Rat> {
        (0..st.live.len())
            .filter(|&j| st.live[j])
            .map(|j| &self.share[j])
            .min()
    }
}

struct UdEngine {
    demands: Vec<Rat>,
    classes: Vec<u32>,
    values: BTreeSet<(Rat, usize)>,
    value_of: Vec<Rat>,
    class_sum: BTreeMap<u32, Rat>,
    total_demand: Rat,
    allocated: Rat,
    m: u32,
}

impl UdEngine {
    fn new(m: u32) -> Self {
        Self {
            demands: Vec::new(),
            classes: Vec::new(),
            values: BTreeSet::new(),
            value_of: Vec::new(),
            class_sum: BTreeMap::new(),
            total_demand: Rat::zero(),
            allocated: Rat::zero(),
            m,
        }
    }

    fn value(&self, j: usize, size: &Rat) -> Rat {
        let v = size / &self.demands[j];
        if v > Rat::one() {
            Rat::one()
        } else {
            v
        }
    }

    fn admit(&mut self, d: &Rat) {
        let j = self.demands.len();
        self.demands.push(d.clone());
        self.classes.push(demand_class(d, self.m));
        self.total_demand += d;
        self.value_of.push(Rat::zero());
        self.values.insert((Rat::zero(), j));
    }

    fn eta(&self) -> Option<Factor> {
        let (v, _) = self.values.first()?;
        let scale = if self.total_demand > Rat::one() {
            &self.total_demand
        } else {
            return Some(Factor::ratio(Rat::one(), v));
        };
        Some(Factor::ratio(Rat::one(), &(v * scale)))
    }
}

/// Audits a trace in one pass.
pub fn audit(trace: &Trace) -> Result<AuditReport> {
    Ok(run_audit(trace)?.0)
}

fn run_audit(trace: &Trace) -> Result<(AuditReport, Check)> {
    let algorithm = trace.header.algorithm;
    let mut st = Structural::new(1);
    let mut conservation = Check::pass();
    let mut waste = Check::pass();
    let mut per_step = Vec::with_capacity(trace.steps.len());
    let mut overall = Overall::default();
    let mut arrivals = 0usize;

    let mut dfd = DfdEngine::new();
    let mut owners = Ownership::new();
    let mut pool = Arc::new(IntervalSet::full());
    let mut bounds;

    let n_max = trace.header.n_max.max(1) as u64;
    let m = certified::ceil_log2(n_max);
    let mut ud = UdEngine::new(m);

    // Constant bounds of the demand algorithms.
    let (ud_k, ud_budget) = match algorithm {
        Algorithm::UdS => {
            let p = &trace.header.params;
            let (c, eta) = match (&p.c, &p.eta) {
                (Some(c), Some(eta)) => (c.clone(), eta.clone()),
                _ => return Err(Error::Parameter("ud_s trace without c and eta".into())),
            };
            (rat::int(2) * c * &eta, Rat::one() / eta)
        }
        Algorithm::Ud => (rat::int(4 * (1 + m as i64)), Rat::one()),
        _ => (Rat::zero(), Rat::one()),
    };
    let ud_quick = certified::ln3_bound(&ud_k, certified::BASE_BITS);
    bounds = BoundCheck::new(match algorithm {
        Algorithm::Dfd1 => "proportionality <= 2(3 + ln i)",
        Algorithm::Dfd2 => "envy <= i",
        Algorithm::UdS => "fairness <= 2 c eta ln 3",
        Algorithm::Ud => "fairness <= 4 (1 + ceil(log2 n)) ln 3",
    });
    let mut budget = BoundCheck::new(match algorithm {
        Algorithm::UdS => "allocated <= 1/eta",
        _ => "allocated <= 1",
    });

    for step in &trace.steps {
        let i = step.step;
        let (arrived, departed) = match &step.event {
            Event::Arrival { player, valuation } => {
                arrivals += 1;
                match (algorithm.is_interval(), valuation) {
                    (true, Valuation::Density(v)) => dfd.admit(v),
                    (false, Valuation::Demand(d)) => ud.admit(d.d()),
                    _ => {
                        return Err(Error::Compatibility(format!(
                            "{algorithm} trace with a mismatched valuation at step {i}"
                        )))
                    }
                }
                (Some(player.index()), None)
            }
            Event::Departure { player } => (None, Some(player.index())),
        };
        let changed = st.apply(step)?;
        if let Some(dep) = st.departures.first_violation.take() {
            conservation.fail(dep.step, &dep.rule, dep.detail);
        }
        let live = st.live.iter().filter(|&&l| l).count();
        let mut audit_step = StepAudit {
            step: i,
            arrivals,
            live,
            sigma: None,
            sigma_arrivals: None,
            xi: None,
            eta: None,
            allocated: None,
            total_demand: None,
            bound: 0.0,
            pass: true,
        };

        if algorithm.is_interval() {
            // conservation: the changed holdings and the pool tile [0, 1)
            for (j, old) in &changed {
                owners.remove(*j, old.as_set().expect("interval trace"));
            }
            let mut ok = true;
            if let Some(u) = &step.unallocated {
                owners.remove(POOL, &pool);
                ok &= owners.insert(POOL, u);
                pool = u.clone();
            }
            for (j, _) in &changed {
                let set = st.holdings[*j].as_set().expect("interval trace");
                ok &= owners.insert(*j, set);
                if !set.intersect(&dfd.zero[*j]).measure().is_zero() {
                    waste.fail(i, "non-wasteful", format!("player {} holds zero-value resource", j + 1));
                }
            }
            if !ok {
                conservation.fail(i, "disjoint", "holdings overlap".into());
            } else if !owners.total.is_one() {
                conservation.fail(
                    i,
                    "coverage",
                    format!("holdings cover {} of the resource", rat::format(&owners.total)),
                );
            }

            dfd.update(&st, &changed, arrived);
            if let Some(share) = dfd.min_share(&st) {
                let k_live = rat::int(live as i64);
                let k_arr = rat::int(arrivals as i64);
                audit_step.sigma = Some(Factor::ratio(Rat::one(), &(share * k_live)));
                audit_step.sigma_arrivals = Some(Factor::ratio(Rat::one(), &(share * k_arr)));
                audit_step.xi = dfd.envy(&st);
            }
            match algorithm {
                Algorithm::Dfd1 => {
                    audit_step.bound = 2.0 * (3.0 + (arrivals.max(1) as f64).ln());
                    if let Some(s) = &audit_step.sigma_arrivals {
                        // 2(a-1)/(a+1) <= ln a for a >= 1
                        let a = rat::int(arrivals.max(1) as i64);
                        let ln_lo = rat::int(2) * (&a - Rat::one()) / (&a + Rat::one());
                        let quick = Enclosure {
                            lo: rat::int(2) * (rat::int(3) + ln_lo),
                            hi: rat::int(2) * (rat::int(3) + &a - Rat::one()),
                        };
                        let a = arrivals as u64;
                        audit_step.pass &= bounds.certified(i, s, &quick, |bits| {
                            certified::proportional_bound(a, bits)
                        });
                    }
                }
                Algorithm::Dfd2 => {
                    audit_step.bound = arrivals as f64;
                    if let Some(x) = &audit_step.xi {
                        audit_step.pass &= bounds.exact(i, x, &rat::int(arrivals as i64));
                    }
                }
                _ => unreachable!(),
            }
        } else {
            for (j, old) in &changed {
                let old = old.as_size().expect("demand trace");
                let new = st.holdings[*j].as_size().expect("demand trace");
                if new.is_negative() {
                    conservation.fail(i, "size", format!("player {} has negative size", j + 1));
                }
                ud.allocated += new - old;
                *ud.class_sum.entry(ud.classes[*j]).or_insert_with(Rat::zero) += new - old;
            }
            for &j in changed
                .iter()
                .map(|(j, _)| j)
                .chain(departed.iter())
                .chain(arrived.iter())
            {
                let old = std::mem::take(&mut ud.value_of[j]);
                ud.values.remove(&(old, j));
                if st.live[j] {
                    let v = ud.value(j, st.holdings[j].as_size().expect("demand trace"));
                    ud.value_of[j] = v.clone();
                    ud.values.insert((v, j));
                }
            }
            if ud.allocated > Rat::one() {
                conservation.fail(
                    i,
                    "capacity",
                    format!("allocated {} exceeds the resource", rat::format(&ud.allocated)),
                );
            }
            if algorithm == Algorithm::Ud {
                if let Some(top) = ud.class_sum.values().max() {
                    let r = top * rat::int(1 + m as i64);
                    if overall.class_budget_ratio.as_ref().is_none_or(|b| r > *b) {
                        overall.class_budget_ratio = Some(r);
                    }
                }
            }
            audit_step.eta = ud.eta();
            audit_step.allocated = Some(ud.allocated.clone());
            audit_step.total_demand = Some(ud.total_demand.clone());
            audit_step.bound = rat::to_f64(&ud_quick.hi);
            if let Some(e) = &audit_step.eta {
                audit_step.pass &= bounds.certified(i, e, &ud_quick, |bits| {
                    certified::ln3_bound(&ud_k, bits)
                });
            }
            audit_step.pass &= budget.exact(i, &Factor::Finite(ud.allocated.clone()), &ud_budget);
        }

        max_opt(&mut overall.sigma, &audit_step.sigma);
        max_opt(&mut overall.sigma_arrivals, &audit_step.sigma_arrivals);
        max_opt(&mut overall.xi, &audit_step.xi);
        max_opt(&mut overall.eta, &audit_step.eta);
        if let Some(a) = &audit_step.allocated {
            if overall.max_allocated.as_ref().is_none_or(|m| a > m) {
                overall.max_allocated = Some(a.clone());
            }
        }
        per_step.push(audit_step);
    }

    let halt = trace.header.halt.clone();
    if halt.is_some() {
        overall.xi = Some(Factor::Unbounded);
    }
    let mut bound_violations = bounds.violations;
    bound_violations.extend(budget.violations);
    let mut inconclusive = bounds.inconclusive;
    inconclusive.extend(budget.inconclusive);
    bound_violations.sort_by_key(|v| v.step);
    let violations: Vec<Violation> = [&st.recall, &conservation, &waste]
        .iter()
        .filter_map(|c| c.first_violation.clone())
        .collect();
    let report = AuditReport {
        algorithm,
        steps: trace.steps.len(),
        arrivals,
        recallable_ok: st.recall.ok,
        conservation_ok: conservation.ok,
        non_wasteful_ok: waste.ok,
        violations,
        bound_violations,
        inconclusive,
        halt,
        overall,
        per_step,
    };
    Ok((report, conservation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfd::{Dfd1, Dfd2, DfdState};
    use crate::rat::ratio;
    use crate::trace::{RunParams, TraceHeader};
    use crate::valuation::Demand;
    use crate::PlayerId;

    fn uniform() -> Arc<PiecewiseConstant> {
        Arc::new(PiecewiseConstant::uniform())
    }

    fn iv(a: Rat, b: Rat) -> IntervalSet {
        IntervalSet::interval(a, b).unwrap()
    }

    /// Trace from explicit holdings after each arrival.
    fn hand_trace(alg: Algorithm, vals: Vec<Arc<PiecewiseConstant>>, states: Vec<Vec<IntervalSet>>) -> Trace {
        let mut t = Trace::new(TraceHeader::new(alg, vals.len(), RunParams::default()));
        let mut prev: Vec<IntervalSet> = Vec::new();
        let mut pool = IntervalSet::full();
        for (k, (v, s)) in vals.into_iter().zip(states).enumerate() {
            prev.push(IntervalSet::empty());
            let changes: Vec<(PlayerId, Holding)> = s
                .iter()
                .enumerate()
                .filter(|(j, h)| prev[*j] != **h)
                .map(|(j, h)| (PlayerId::from_index(j), Holding::Set(Arc::new(h.clone()))))
                .collect();
            let held = s.iter().fold(IntervalSet::empty(), |acc, h| acc.union(h));
            let new_pool = held.complement();
            t.steps.push(TraceStep {
                step: k + 1,
                event: Event::Arrival {
                    player: PlayerId(k + 1),
                    valuation: Valuation::Density(v),
                },
                changes,
                unallocated: (new_pool != pool).then(|| Arc::new(new_pool.clone())),
                recall: None,
            });
            pool = new_pool;
            prev = s;
        }
        t
    }

    fn dfd_trace(alg: Algorithm, vals: &[Arc<PiecewiseConstant>]) -> Trace {
        let mut state = DfdState::new();
        let mut states = Vec::new();
        for v in vals {
            match alg {
                Algorithm::Dfd1 => Dfd1::new().arrive(&mut state, v).unwrap(),
                _ => Dfd2.arrive(&mut state, v).unwrap(),
            };
            states.push(
                (1..=state.arrivals())
                    .map(|p| (**state.holding(PlayerId(p))).clone())
                    .collect(),
            );
        }
        hand_trace(alg, vals.to_vec(), states)
    }

    #[test]
    fn proportionality_examples() {
        let t = hand_trace(
            Algorithm::Dfd2,
            vec![uniform(), uniform()],
            vec![
                vec![IntervalSet::full()],
                vec![iv(ratio(1, 2), rat::one()), iv(rat::zero(), ratio(1, 2))],
            ],
        );
        assert_eq!(proportionality_factor(&t, 2).unwrap(), Some(Factor::Finite(rat::one())));
        let starved = hand_trace(
            Algorithm::Dfd2,
            vec![uniform(), uniform()],
            vec![vec![IntervalSet::full()], vec![IntervalSet::full(), IntervalSet::empty()]],
        );
        assert_eq!(proportionality_factor(&starved, 2).unwrap(), Some(Factor::Unbounded));
        assert_eq!(envy_factor(&starved, 2).unwrap(), Some(Factor::Unbounded));
        assert_eq!(envy_factor(&t, 2).unwrap(), Some(Factor::Finite(rat::one())));
    }

    #[test]
    fn dfd1_uniform_pair_is_seven() {
        let t = dfd_trace(Algorithm::Dfd1, &[uniform(), uniform()]);
        assert_eq!(proportionality_factor(&t, 2).unwrap(), Some(Factor::Finite(rat::int(7))));
        let report = audit(&t).unwrap();
        assert_eq!(report.per_step[1].sigma_arrivals, Some(Factor::Finite(rat::int(7))));
        assert!(report.bound_violations.is_empty());
        assert!(report.passed());
    }

    #[test]
    fn dfd2_pair_has_no_envy() {
        let t = dfd_trace(Algorithm::Dfd2, &[uniform(), uniform()]);
        let report = audit(&t).unwrap();
        assert_eq!(report.overall.xi, Some(Factor::Finite(rat::one())));
        assert!(report.recallable_ok && report.conservation_ok && report.non_wasteful_ok);
        assert_eq!(check_recallable(&t, 1).unwrap(), Check::pass());
    }

    #[test]
    fn envy_of_four_is_flagged_at_step_three() {
        // player 1 sees 4/5 in player 3's piece and 1/5 in its own
        let p1 = Arc::new(
            PiecewiseConstant::new(vec![
                (rat::zero(), ratio(1, 5), rat::one()),
                (ratio(1, 5), ratio(4, 5), rat::zero()),
                (ratio(4, 5), rat::one(), rat::int(4)),
            ])
            .unwrap(),
        );
        let t = hand_trace(
            Algorithm::Dfd2,
            vec![p1, uniform(), uniform()],
            vec![
                vec![IntervalSet::full()],
                vec![
                    iv(rat::zero(), ratio(1, 5)).union(&iv(ratio(4, 5), rat::one())),
                    iv(ratio(1, 5), ratio(4, 5)),
                ],
                vec![
                    iv(rat::zero(), ratio(1, 5)),
                    iv(ratio(1, 5), ratio(4, 5)),
                    iv(ratio(4, 5), rat::one()),
                ],
            ],
        );
        assert_eq!(envy_factor(&t, 3).unwrap(), Some(Factor::Finite(rat::int(4))));
        let v = check_bounds(&t).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].step, 3);
        assert!(check_recallable(&t, 1).unwrap().ok);
    }

    #[test]
    fn two_shrinks_need_tau_two() {
        let t = hand_trace(
            Algorithm::Dfd2,
            vec![uniform(), uniform(), uniform()],
            vec![
                vec![IntervalSet::full()],
                vec![iv(rat::zero(), ratio(1, 2)), iv(ratio(1, 2), rat::one())],
                vec![
                    iv(rat::zero(), ratio(1, 4)),
                    iv(ratio(1, 2), ratio(3, 4)),
                    iv(ratio(1, 4), ratio(1, 2)).union(&iv(ratio(3, 4), rat::one())),
                ],
            ],
        );
        assert!(!check_recallable(&t, 1).unwrap().ok);
        assert!(check_recallable(&t, 2).unwrap().ok);
    }

    #[test]
    fn growth_breaks_recallability() {
        let t = hand_trace(
            Algorithm::Dfd2,
            vec![uniform(), uniform(), uniform()],
            vec![
                vec![iv(rat::zero(), ratio(1, 2))],
                vec![iv(rat::zero(), ratio(3, 4)), iv(ratio(3, 4), rat::one())],
                vec![
                    iv(rat::zero(), ratio(3, 4)),
                    iv(ratio(3, 4), ratio(7, 8)),
                    iv(ratio(7, 8), rat::one()),
                ],
            ],
        );
        let c = check_recallable(&t, 1).unwrap();
        assert!(!c.ok);
        assert_eq!(c.first_violation.unwrap().step, 2);
    }

    #[test]
    fn wasteful_holding_is_detected() {
        let half = Arc::new(
            PiecewiseConstant::piecewise_uniform(&iv(rat::zero(), ratio(1, 2))).unwrap(),
        );
        let t = hand_trace(
            Algorithm::Dfd2,
            vec![half],
            vec![vec![iv(ratio(1, 2), ratio(3, 4))]],
        );
        assert!(!check_non_wasteful(&t).unwrap().ok);
        let t = dfd_trace(Algorithm::Dfd2, &[uniform(), uniform(), uniform()]);
        assert!(check_non_wasteful(&t).unwrap().ok);
    }

    #[test]
    fn overlap_breaks_conservation() {
        let t = hand_trace(
            Algorithm::Dfd2,
            vec![uniform(), uniform()],
            vec![
                vec![IntervalSet::full()],
                vec![IntervalSet::full(), iv(rat::zero(), ratio(1, 2))],
            ],
        );
        assert!(!check_conservation(&t).unwrap().ok);
    }

    fn ud_trace(sizes: &[(&str, &[(usize, &str)])]) -> Trace {
        let mut t = Trace::new(TraceHeader::new(Algorithm::Ud, sizes.len(), RunParams::default()));
        for (k, (d, changes)) in sizes.iter().enumerate() {
            t.steps.push(TraceStep {
                step: k + 1,
                event: Event::Arrival {
                    player: PlayerId(k + 1),
                    valuation: Valuation::Demand(Demand::new(rat::parse(d).unwrap()).unwrap()),
                },
                changes: changes
                    .iter()
                    .map(|(p, s)| (PlayerId(*p), Holding::Size(rat::parse(s).unwrap())))
                    .collect(),
                unallocated: None,
                recall: None,
            });
        }
        t
    }

    #[test]
    fn ud_fairness_examples() {
        let t = ud_trace(&[("1/10", &[(1, "1/20")]), ("1/10", &[(2, "1/20")])]);
        assert_eq!(ud_fairness_factor(&t, 2).unwrap(), Some(Factor::Finite(rat::int(2))));
        let t = ud_trace(&[("1/2", &[(1, "3/4")])]);
        assert_eq!(ud_fairness_factor(&t, 1).unwrap(), Some(Factor::Finite(rat::one())));
        let t = ud_trace(&[("1/2", &[])]);
        assert_eq!(ud_fairness_factor(&t, 1).unwrap(), Some(Factor::Unbounded));
        let report = audit(&ud_trace(&[("1/10", &[(1, "1/20")]), ("1/10", &[(2, "1/20")])])).unwrap();
        assert_eq!(report.overall.eta, Some(Factor::Finite(rat::int(2))));
        assert!(report.passed());
    }

    #[test]
    fn ud_size_growth_is_not_recallable() {
        let t = ud_trace(&[("1/2", &[(1, "1/4")]), ("1/2", &[(1, "1/2"), (2, "1/4")])]);
        assert!(!check_recallable(&t, 1).unwrap().ok);
    }

    #[test]
    fn factor_order_and_text() {
        assert!(Factor::Unbounded > Factor::Finite(rat::int(1_000_000)));
        assert_eq!(Factor::Finite(ratio(7, 2)).to_string(), "7/2");
        let f: Factor = serde_json::from_str("\"unbounded\"").unwrap();
        assert_eq!(f, Factor::Unbounded);
    }
}
