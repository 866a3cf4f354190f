//! Allocator-versus-instance runs, sweeps and replays.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::adversary::{
    random_instance, random_ranged_demands, staged_ud_instance, AdaptiveAdversary, AdversaryMove,
    EnvyAdversary, Family,
};
use crate::audit::{self, fmt_f64, AuditReport, Factor};
use crate::certified::ceil_log2;
use crate::dfd::{Dfd1, Dfd2, DfdRecall, DfdState};
use crate::error::{Error, Result};
use crate::instance::{Instance, InstanceEvent, InstanceMeta, ValuationKind};
use crate::interval::IntervalSet;
use crate::rat::{self, Rat};
use crate::trace::{Event, Holding, RunParams, Trace, TraceHeader, TraceStep};
use crate::ud::{Ud, UdParams, UdRecall, UdS, UdState};
use crate::valuation::{PiecewiseConstant, Valuation};
use crate::{Algorithm, PlayerId};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdversaryKind {
    Envy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    /// `ud_s` parameters; missing ones are read off the instance.
    pub d: Option<Rat>,
    pub c: Option<Rat>,
    pub eta: Option<Rat>,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            d: None,
            c: None,
            eta: None,
        }
    }

    pub fn with_ud_params(mut self, d: Rat, c: Rat, eta: Rat) -> Self {
        self.d = Some(d);
        self.c = Some(c);
        self.eta = Some(eta);
        self
    }
}

pub enum Source<'a> {
    Instance(&'a Instance),
    Adversary { kind: AdversaryKind, n: usize },
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: Trace,
    pub report: AuditReport,
    /// The instance actually played; for adaptive runs, the realized one.
    pub instance: Instance,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            EXIT_PASS
        } else {
            EXIT_VIOLATION
        }
    }
}

enum Driver {
    Dfd1(Dfd1, DfdState),
    Dfd2(Dfd2, DfdState),
    UdS(UdS, UdState),
    Ud(Ud, UdState),
}

fn dfd_step(
    state: &mut DfdState,
    arrive: impl FnOnce(&mut DfdState) -> Result<DfdRecall>,
    v: &Arc<PiecewiseConstant>,
) -> Result<TraceStep> {
    let before_pool = state.unallocated().clone();
    let recall = arrive(state)?;
    let player = PlayerId(state.arrivals());
    let mut changes = Vec::with_capacity(2);
    if let Some(r) = recall.player {
        changes.push((r, Holding::Set(state.holding(r).clone())));
    }
    changes.push((player, Holding::Set(state.holding(player).clone())));
    let pool = state.unallocated();
    Ok(TraceStep {
        step: state.step(),
        event: Event::Arrival {
            player,
            valuation: Valuation::Density(v.clone()),
        },
        changes,
        unallocated: (!Arc::ptr_eq(pool, &before_pool) && **pool != *before_pool).then(|| pool.clone()),
        recall: recall
            .player
            .map(|r| (r, Holding::Set(Arc::new(recall.removed)))),
    })
}

fn ud_step(state: &mut UdState, recall: UdRecall, demand: &Valuation) -> TraceStep {
    let player = PlayerId(state.arrivals());
    let mut changes = Vec::with_capacity(2);
    if let Some(r) = recall.player {
        changes.push((r, Holding::Size(state.size(r).clone())));
    }
    changes.push((player, Holding::Size(state.size(player).clone())));
    TraceStep {
        step: state.step(),
        event: Event::Arrival {
            player,
            valuation: demand.clone(),
        },
        changes,
        unallocated: None,
        recall: recall.player.map(|r| (r, Holding::Size(recall.removed))),
    }
}

impl Driver {
    fn arrive(&mut self, v: &Valuation) -> Result<TraceStep> {
        match (self, v) {
            (Driver::Dfd1(alg, state), Valuation::Density(d)) => {
                dfd_step(state, |s| alg.arrive(s, d), d)
            }
            (Driver::Dfd2(alg, state), Valuation::Density(d)) => {
                dfd_step(state, |s| alg.arrive(s, d), d)
            }
            (Driver::UdS(alg, state), Valuation::Demand(d)) => {
                let r = alg.arrive(state, d.d())?;
                Ok(ud_step(state, r, v))
            }
            (Driver::Ud(alg, state), Valuation::Demand(d)) => {
                let r = alg.arrive(state, d.d())?;
                Ok(ud_step(state, r, v))
            }
            _ => Err(Error::Compatibility(
                "interval algorithms need density valuations, demand algorithms need demands".into(),
            )),
        }
    }

    fn depart(&mut self, p: PlayerId) -> Result<TraceStep> {
        let (step, holding, unallocated) = match self {
            Driver::Dfd1(_, s) | Driver::Dfd2(_, s) => {
                s.depart(p)?;
                (
                    s.step(),
                    Holding::Set(Arc::new(IntervalSet::empty())),
                    Some(s.unallocated().clone()),
                )
            }
            Driver::UdS(_, s) | Driver::Ud(_, s) => {
                s.depart(p)?;
                (s.step(), Holding::Size(Rat::zero()), None)
            }
        };
        Ok(TraceStep {
            step,
            event: Event::Departure { player: p },
            changes: vec![(p, holding)],
            unallocated,
            recall: None,
        })
    }

    fn dfd_state(&self) -> Option<&DfdState> {
        match self {
            Driver::Dfd1(_, s) | Driver::Dfd2(_, s) => Some(s),
            _ => None,
        }
    }
}

/// `ud_s` parameters from the config, defaulting to the instance's demand
/// range with `η = 1`.
fn ud_params(config: &RunConfig, instance: Option<&Instance>) -> Result<UdParams> {
    let demands: Vec<&Rat> = instance
        .map(|i| i.valuations().filter_map(|v| v.as_demand()).map(|d| d.d()).collect())
        .unwrap_or_default();
    let d = match &config.d {
        Some(d) => d.clone(),
        None => demands
            .iter()
            .min()
            .map(|d| (*d).clone())
            .ok_or_else(|| Error::Parameter("ud_s needs --d or a demand instance".into()))?,
    };
    let c = match &config.c {
        Some(c) => c.clone(),
        None => demands
            .iter()
            .max()
            .map(|m| (*m) / &d)
            .filter(|c| *c >= Rat::one())
            .unwrap_or_else(Rat::one),
    };
    let eta = config.eta.clone().unwrap_or_else(Rat::one);
    UdParams::new(d, c, eta)
}

fn driver(config: &RunConfig, n_max: usize, instance: Option<&Instance>) -> Result<(Driver, RunParams)> {
    let mut params = RunParams::default();
    let d = match config.algorithm {
        Algorithm::Dfd1 => Driver::Dfd1(Dfd1::new(), DfdState::new()),
        Algorithm::Dfd2 => Driver::Dfd2(Dfd2, DfdState::new()),
        Algorithm::UdS => {
            let p = ud_params(config, instance)?;
            params.d = Some(p.d.clone());
            params.c = Some(p.c.clone());
            params.eta = Some(p.eta.clone());
            Driver::UdS(UdS::new(p), UdState::new())
        }
        Algorithm::Ud => Driver::Ud(Ud::new(n_max.max(1))?, UdState::new()),
    };
    Ok((d, params))
}

fn check_compatible(algorithm: Algorithm, instance: &Instance) -> Result<()> {
    let ok = match instance.kind() {
        ValuationKind::Empty => true,
        ValuationKind::Density => algorithm.is_interval(),
        ValuationKind::Demand => !algorithm.is_interval(),
        ValuationKind::Mixed => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Compatibility(format!(
            "{algorithm} cannot run on this instance's valuations"
        )))
    }
}

/// Plays an instance or an adaptive adversary against an allocator, then
/// audits the trace.
pub fn run(config: &RunConfig, source: Source<'_>) -> Result<RunOutput> {
    let algorithm = config.algorithm;
    match source {
        Source::Instance(instance) => {
            instance.validate()?;
            check_compatible(algorithm, instance)?;
            let (mut drv, params) = driver(config, instance.n_max, Some(instance))?;
            let mut trace = Trace::new(TraceHeader::new(algorithm, instance.n_max, params));
            for event in &instance.events {
                let step = match event {
                    InstanceEvent::Arrival(v) => drv.arrive(v)?,
                    InstanceEvent::Departure(p) => drv.depart(*p)?,
                };
                trace.steps.push(step);
            }
            let report = audit::audit(&trace)?;
            Ok(RunOutput {
                trace,
                report,
                instance: instance.clone(),
            })
        }
        Source::Adversary { kind, n } => {
            if !algorithm.is_interval() {
                return Err(Error::Compatibility(format!(
                    "the envy adversary plays interval allocators, not {algorithm}"
                )));
            }
            let (mut drv, mut params) = driver(config, n, None)?;
            params.adversary = Some(match kind {
                AdversaryKind::Envy => "envy".into(),
            });
            let mut trace = Trace::new(TraceHeader::new(algorithm, n, params));
            let mut adversary = EnvyAdversary;
            let mut valuations = Vec::with_capacity(n);
            for _ in 0..n {
                let state = drv.dfd_state().expect("interval driver");
                match adversary.next_valuation(state) {
                    AdversaryMove::Arrive(v) => {
                        let v = Valuation::Density(v);
                        trace.steps.push(drv.arrive(&v)?);
                        valuations.push(v);
                    }
                    AdversaryMove::Halt(cert) => {
                        trace.header.halt = Some(cert);
                        break;
                    }
                }
            }
            let report = audit::audit(&trace)?;
            let mut instance = Instance::from_valuations(
                valuations,
                InstanceMeta {
                    family: Some("envy-adversary".into()),
                    seed: None,
                    params: BTreeMap::new(),
                },
            );
            instance.n_max = n;
            Ok(RunOutput {
                trace,
                report,
                instance,
            })
        }
    }
}

/// Re-audits a serialized trace.
pub fn replay(bytes: &[u8]) -> Result<AuditReport> {
    audit::audit(&Trace::from_bytes(bytes)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepFamily {
    Random(Family),
    /// Staged demand instances; each `n` must be a power of `8τ`.
    Staged { tau: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepConfig {
    pub run: RunConfig,
    pub family: SweepFamily,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub sigma: Option<Factor>,
    pub xi: Option<Factor>,
    pub eta: Option<Factor>,
    pub bound: f64,
    pub pass: bool,
}

/// Seed of run `(n, rep)` in a sweep seeded with `seed`.
pub fn derive_seed(seed: u64, n: usize, rep: usize) -> u64 {
    // splitmix64 finalizer over the combined inputs
    let mut z = seed
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (rep as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Approximate guarantee of `algorithm` with `n` players.
pub fn bound_at(config: &RunConfig, params: &RunParams, n: usize) -> f64 {
    let ln3 = 3f64.ln();
    match config.algorithm {
        Algorithm::Dfd1 => 2.0 * (3.0 + (n.max(1) as f64).ln()),
        Algorithm::Dfd2 => n as f64,
        Algorithm::UdS => {
            let c = params.c.as_ref().map_or(1.0, rat::to_f64);
            let eta = params.eta.as_ref().map_or(1.0, rat::to_f64);
            2.0 * c * eta * ln3
        }
        Algorithm::Ud => 4.0 * (1.0 + ceil_log2(n.max(1) as u64) as f64) * ln3,
    }
}

fn sweep_instance(config: &SweepConfig, n: usize, seed: u64) -> Result<Instance> {
    match config.family {
        SweepFamily::Random(Family::Demand) if config.run.algorithm == Algorithm::UdS => {
            let d = config.run.d.clone().unwrap_or_else(|| rat::ratio(1, 100));
            let c = config.run.c.clone().unwrap_or_else(Rat::one);
            random_ranged_demands(n, &d, &c, seed)
        }
        SweepFamily::Random(f) => Ok(random_instance(n, f, seed)),
        SweepFamily::Staged { tau } => {
            let base = 8 * tau.max(1);
            let mut k = 0u32;
            let mut m = 1u64;
            while m < n as u64 {
                m = m.saturating_mul(base);
                k += 1;
            }
            if m != n as u64 || k == 0 {
                return Err(Error::Parameter(format!("{n} is not a positive power of {base}")));
            }
            Ok(staged_ud_instance(k, tau)?.to_instance())
        }
    }
}

/// One audited run per `(n, rep)`.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in &config.ns {
        let reps = match config.family {
            SweepFamily::Staged { .. } => 1,
            SweepFamily::Random(_) => config.reps,
        };
        for rep in 0..reps {
            let seed = derive_seed(config.seed, n, rep);
            let instance = sweep_instance(config, n, seed)?;
            let out = run(&config.run, Source::Instance(&instance))?;
            rows.push(SweepRow {
                n,
                rep,
                seed,
                sigma: out.report.overall.sigma_arrivals.clone(),
                xi: out.report.overall.xi.clone(),
                eta: out.report.overall.eta.clone(),
                bound: bound_at(&config.run, &out.trace.header.params, n),
                pass: out.report.passed(),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,rep,seed,sigma,xi,eta,bound,pass\n");
    let cell = |f: &Option<Factor>| f.as_ref().map(|f| fmt_f64(f.to_f64())).unwrap_or_default();
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.rep,
            r.seed,
            cell(&r.sigma),
            cell(&r.xi),
            cell(&r.eta),
            fmt_f64(r.bound),
            r.pass
        ));
    }
    out
}
