use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fairdyn::adversary::{random_instance, random_ranged_demands, staged_ud_instance, Family};
use fairdyn::audit::AuditReport;
use fairdyn::harness::{
    self, AdversaryKind, RunConfig, Source, SweepConfig, SweepFamily, EXIT_INPUT, EXIT_PASS,
    EXIT_VIOLATION,
};
use fairdyn::instance::Instance;
use fairdyn::{rat, Algorithm, Error, Rat};

#[derive(Parser)]
#[command(name = "fairdyn", version, about = "Dynamic fair division with recall: runs, sweeps and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Dfd1,
    Dfd2,
    #[value(name = "ud_s")]
    UdS,
    Ud,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Dfd1 => Algorithm::Dfd1,
            AlgorithmArg::Dfd2 => Algorithm::Dfd2,
            AlgorithmArg::UdS => Algorithm::UdS,
            AlgorithmArg::Ud => Algorithm::Ud,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Uniform,
    Pwu,
    Pwc,
    Demand,
    Staged,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdversaryArg {
    Envy,
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    rat::parse(s).ok_or_else(|| format!("expected a rational like 3/4, got {s:?}"))
}

#[derive(clap::Args, Clone)]
struct UdArgs {
    /// Smallest demand (ud_s)
    #[arg(long, value_parser = parse_rat)]
    d: Option<Rat>,
    /// Ratio of largest to smallest demand (ud_s)
    #[arg(long, value_parser = parse_rat)]
    c: Option<Rat>,
    /// Budget parameter (ud_s)
    #[arg(long, value_parser = parse_rat)]
    eta: Option<Rat>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an allocator on an instance file or against the envy adversary
    Run {
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        #[arg(long, required_unless_present = "adversary")]
        instance: Option<PathBuf>,
        #[arg(long, value_enum, requires = "n")]
        adversary: Option<AdversaryArg>,
        /// Number of adversarial arrivals
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        ud: UdArgs,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-step ratio curve
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Where to write the instance actually played
        #[arg(long)]
        realized: Option<PathBuf>,
    },
    /// Generate an instance file
    Gen {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, required_unless_present = "k")]
        n: Option<usize>,
        /// Stage count (staged)
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 1)]
        tau: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Demand range [d, c d] (demand)
        #[arg(long, value_parser = parse_rat, requires = "c")]
        d: Option<Rat>,
        #[arg(long, value_parser = parse_rat)]
        c: Option<Rat>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Audited runs over many sizes and seeds, one CSV row per run
    Sweep {
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        tau: u64,
        #[command(flatten)]
        ud: UdArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Re-audit a trace file
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

fn config(algorithm: AlgorithmArg, ud: &UdArgs) -> RunConfig {
    let mut cfg = RunConfig::new(algorithm.into());
    cfg.d = ud.d.clone();
    cfg.c = ud.c.clone();
    cfg.eta = ud.eta.clone();
    cfg
}

fn summarize(report: &AuditReport) {
    let show = |f: &Option<fairdyn::audit::Factor>| {
        f.as_ref()
            .map(|f| format!("{:.6}", f.to_f64()))
            .unwrap_or_else(|| "-".into())
    };
    println!("algorithm      {}", report.algorithm);
    println!("steps          {} ({} arrivals)", report.steps, report.arrivals);
    match report.algorithm {
        Algorithm::Dfd1 | Algorithm::Dfd2 => {
            println!("max sigma      {}", show(&report.overall.sigma_arrivals));
            println!("max xi         {}", show(&report.overall.xi));
        }
        Algorithm::UdS | Algorithm::Ud => {
            println!("max eta        {}", show(&report.overall.eta));
        }
    }
    println!("recallable     {}", report.recallable_ok);
    println!("conservation   {}", report.conservation_ok);
    println!("non-wasteful   {}", report.non_wasteful_ok);
    println!("bound failures {}", report.bound_violations.len());
    if !report.inconclusive.is_empty() {
        println!("inconclusive   {}", report.inconclusive.len());
    }
    if let Some(h) = &report.halt {
        println!("halted         after {} arrivals: {}", h.arrivals, h.reason);
    }
    for v in &report.violations {
        println!("violation      step {}: {} ({})", v.step, v.rule, v.detail);
    }
}

fn verdict(report: &AuditReport) -> i32 {
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    }
}

fn execute(cmd: Command) -> Result<i32, Error> {
    match cmd {
        Command::Run {
            algorithm,
            instance,
            adversary,
            n,
            ud,
            trace,
            report,
            csv,
            realized,
        } => {
            let cfg = config(algorithm, &ud);
            let loaded;
            let source = match (adversary, &instance) {
                (Some(AdversaryArg::Envy), _) => Source::Adversary {
                    kind: AdversaryKind::Envy,
                    n: n.expect("clap requires --n"),
                },
                (None, Some(path)) => {
                    loaded = Instance::read_from(BufReader::new(File::open(path)?))?;
                    Source::Instance(&loaded)
                }
                (None, None) => return Err(Error::Parameter("--instance or --adversary".into())),
            };
            let out = harness::run(&cfg, source)?;
            if let Some(p) = trace {
                write_file(&p, &out.trace.to_bytes())?;
            }
            if let Some(p) = report {
                write_file(&p, out.report.to_json().as_bytes())?;
            }
            if let Some(p) = csv {
                write_file(&p, out.report.to_csv().as_bytes())?;
            }
            if let Some(p) = realized {
                write_file(&p, &out.instance.to_bytes())?;
            }
            summarize(&out.report);
            Ok(out.exit_code())
        }
        Command::Gen {
            family,
            n,
            k,
            tau,
            seed,
            d,
            c,
            out,
        } => {
            let inst = match family {
                FamilyArg::Staged => {
                    let k = match (k, n) {
                        (Some(k), _) => k,
                        (None, Some(n)) => {
                            let base = 8 * tau.max(1);
                            let mut k = 0;
                            let mut m = 1u64;
                            while m < n as u64 {
                                m = m.saturating_mul(base);
                                k += 1;
                            }
                            if m != n as u64 {
                                return Err(Error::Parameter(format!("{n} is not a power of {base}")));
                            }
                            k
                        }
                        (None, None) => unreachable!("clap requires --n or --k"),
                    };
                    staged_ud_instance(k, tau)?.to_instance()
                }
                other => {
                    let n = n.ok_or_else(|| Error::Parameter("--n is required".into()))?;
                    let fam = match other {
                        FamilyArg::Uniform => Family::Uniform,
                        FamilyArg::Pwu => Family::Pwu,
                        FamilyArg::Pwc => Family::Pwc,
                        _ => Family::Demand,
                    };
                    match (fam, d, c) {
                        (Family::Demand, Some(d), Some(c)) => random_ranged_demands(n, &d, &c, seed)?,
                        _ => random_instance(n, fam, seed),
                    }
                }
            };
            write_file(&out, &inst.to_bytes())?;
            println!("wrote {} events to {}", inst.events.len(), out.display());
            Ok(EXIT_PASS)
        }
        Command::Sweep {
            algorithm,
            family,
            n,
            reps,
            seed,
            tau,
            ud,
            csv,
        } => {
            let family = match family {
                FamilyArg::Staged => SweepFamily::Staged { tau },
                FamilyArg::Uniform => SweepFamily::Random(Family::Uniform),
                FamilyArg::Pwu => SweepFamily::Random(Family::Pwu),
                FamilyArg::Pwc => SweepFamily::Random(Family::Pwc),
                FamilyArg::Demand => SweepFamily::Random(Family::Demand),
            };
            let cfg = SweepConfig {
                run: config(algorithm, &ud),
                family,
                ns: n,
                reps,
                seed,
            };
            let rows = harness::sweep(&cfg)?;
            let text = harness::sweep_csv(&rows);
            match csv {
                Some(p) => write_file(&p, text.as_bytes())?,
                None => print!("{text}"),
            }
            let failed = rows.iter().filter(|r| !r.pass).count();
            eprintln!("{} runs, {} failed", rows.len(), failed);
            Ok(if failed == 0 { EXIT_PASS } else { EXIT_VIOLATION })
        }
        Command::Replay { trace, report } => {
            let bytes = std::fs::read(&trace)?;
            let rep = harness::replay(&bytes)?;
            if let Some(p) = report {
                write_file(&p, rep.to_json().as_bytes())?;
            }
            summarize(&rep);
            Ok(verdict(&rep))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
