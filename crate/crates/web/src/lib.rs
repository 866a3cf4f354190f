//! Browser bindings: each export runs one experiment and returns a JSON
//! document for the page to draw.

use fairdyn::adversary::{envy_lower_bound, random_instance, Family};
use fairdyn::audit::{AuditReport, Factor};
use fairdyn::harness::{self, AdversaryKind, RunConfig, RunOutput, Source};
use fairdyn::trace::Holding;
use fairdyn::{rat, Algorithm, Error};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest run the page will ask for; keeps the tab responsive.
pub const MAX_PLAYERS: usize = 4096;

#[derive(Serialize)]
struct Curve {
    step: usize,
    arrivals: usize,
    value: Option<f64>,
    bound: f64,
}

#[derive(Serialize)]
struct IntervalRun {
    algorithm: String,
    family: String,
    sigma: Vec<Curve>,
    xi: Vec<Curve>,
    /// Final holdings as `[start, end]` pieces per player.
    holdings: Vec<Vec<[f64; 2]>>,
    pass: bool,
}

#[derive(Serialize)]
struct EnvyRun {
    algorithm: String,
    xi: Vec<Curve>,
    /// Smallest envy any algorithm can guarantee after `k` arrivals.
    xi_min: Vec<f64>,
    halted: bool,
}

#[derive(Serialize)]
struct DemandRun {
    eta: Vec<Curve>,
    allocated: Vec<f64>,
    sizes: Vec<f64>,
    pass: bool,
}

fn curve(report: &AuditReport, pick: impl Fn(&fairdyn::audit::StepAudit) -> Option<&Factor>) -> Vec<Curve> {
    report
        .per_step
        .iter()
        .map(|s| Curve {
            step: s.step,
            arrivals: s.arrivals,
            value: pick(s).map(Factor::to_f64).filter(|x| x.is_finite()),
            bound: s.bound,
        })
        .collect()
}

fn final_holdings(out: &RunOutput) -> Result<Vec<Holding>, Error> {
    Ok(out.trace.snapshot(out.trace.steps.len())?.holdings)
}

fn check_size(n: usize) -> Result<(), Error> {
    if n == 0 || n > MAX_PLAYERS {
        return Err(Error::Parameter(format!("choose between 1 and {MAX_PLAYERS} players")));
    }
    Ok(())
}

fn interval_algorithm(name: &str) -> Result<Algorithm, Error> {
    match name.parse()? {
        a @ (Algorithm::Dfd1 | Algorithm::Dfd2) => Ok(a),
        other => Err(Error::Compatibility(format!("{other} is not an interval allocator"))),
    }
}

/// Runs `dfd1` or `dfd2` on a random instance.
pub fn interval_run(algorithm: &str, family: &str, n: usize, seed: u64) -> Result<String, Error> {
    check_size(n)?;
    let alg = interval_algorithm(algorithm)?;
    let fam: Family = family.parse()?;
    if fam == Family::Demand {
        return Err(Error::Compatibility("demand valuations need ud or ud_s".into()));
    }
    let inst = random_instance(n, fam, seed);
    let out = harness::run(&RunConfig::new(alg), Source::Instance(&inst))?;
    let holdings = final_holdings(&out)?
        .iter()
        .map(|h| match h {
            Holding::Set(s) => s.pieces().iter().map(|(a, b)| [rat::to_f64(a), rat::to_f64(b)]).collect(),
            Holding::Size(_) => Vec::new(),
        })
        .collect();
    let run = IntervalRun {
        algorithm: alg.to_string(),
        family: fam.to_string(),
        sigma: curve(&out.report, |s| s.sigma_arrivals.as_ref()),
        xi: curve(&out.report, |s| s.xi.as_ref()),
        holdings,
        pass: out.report.passed(),
    };
    Ok(serde_json::to_string(&run).expect("serializes"))
}

/// Plays the adaptive envy adversary against `dfd1` or `dfd2`.
pub fn envy_run(algorithm: &str, n: usize) -> Result<String, Error> {
    check_size(n)?;
    let alg = interval_algorithm(algorithm)?;
    let out = harness::run(&RunConfig::new(alg), Source::Adversary { kind: AdversaryKind::Envy, n })?;
    let xi = curve(&out.report, |s| s.xi.as_ref());
    let xi_min = xi.iter().map(|c| envy_lower_bound(c.arrivals as u64)).collect();
    let run = EnvyRun {
        algorithm: alg.to_string(),
        xi,
        xi_min,
        halted: out.report.halt.is_some(),
    };
    Ok(serde_json::to_string(&run).expect("serializes"))
}

/// Runs `ud` on random demands.
pub fn demand_run(n: usize, seed: u64) -> Result<String, Error> {
    check_size(n)?;
    let inst = random_instance(n, Family::Demand, seed);
    let out = harness::run(&RunConfig::new(Algorithm::Ud), Source::Instance(&inst))?;
    let sizes = final_holdings(&out)?
        .iter()
        .map(|h| h.as_size().map_or(0.0, rat::to_f64))
        .collect();
    let run = DemandRun {
        eta: curve(&out.report, |s| s.eta.as_ref()),
        allocated: out
            .report
            .per_step
            .iter()
            .map(|s| s.allocated.as_ref().map_or(0.0, rat::to_f64))
            .collect(),
        sizes,
        pass: out.report.passed(),
    };
    Ok(serde_json::to_string(&run).expect("serializes"))
}

fn js(r: Result<String, Error>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = intervalRun)]
pub fn interval_run_js(algorithm: &str, family: &str, n: usize, seed: u32) -> Result<String, JsError> {
    js(interval_run(algorithm, family, n, seed as u64))
}

#[wasm_bindgen(js_name = envyRun)]
pub fn envy_run_js(algorithm: &str, n: usize) -> Result<String, JsError> {
    js(envy_run(algorithm, n))
}

#[wasm_bindgen(js_name = demandRun)]
pub fn demand_run_js(n: usize, seed: u32) -> Result<String, JsError> {
    js(demand_run(n, seed as u64))
}
