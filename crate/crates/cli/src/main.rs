//! `compsyn`: check whether a goal service is realizable from available
//! services, extract delegators, decide bisimilarity, and generate hard
//! benchmark instances from Turing machines.
//!
//! Exit codes: 0 for a positive verdict, 1 for a negative one, 2 for
//! errors (bad input, exceeded caps). Every run writes a JSON manifest
//! sidecar and prints it as the final `MANIFEST:` line of the report;
//! re-running a command with the inputs and parameters recorded in a
//! manifest reproduces the verdict lines byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use compsyn_core::automata::ServiceAutomaton;
use compsyn_core::bisimulation::{bisim_oracle, check_bisimilar, render_bisim_report};
use compsyn_core::delegator::{synthesize, DelegatorError};
use compsyn_core::product::ProductView;
use compsyn_core::reductions::{
    atm_has_infinite_computation, const_alphabet_conflicts, const_alphabet_transform,
    exptime_encode, parse_tm, pspace_encode, tm_loops, ReductionInstance, TmKind,
};
use compsyn_core::simulation::{
    largest_simulation, largest_simulation_fullspace, render_sim_report, simulates,
    simulates_disjoint, SimVerdict,
};

#[derive(Parser)]
#[command(
    name = "compsyn",
    version,
    about = "Composition synthesis toolkit for service automata"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the goal is simulated by the asynchronous product of
    /// the services.
    CheckSim {
        /// Goal automaton (.saut).
        goal: PathBuf,
        /// Service automata (.saut), in product order.
        #[arg(required = true)]
        services: Vec<PathBuf>,
        /// Cap on simulation-game pairs.
        #[arg(long, default_value_t = 10_000_000)]
        pair_cap: usize,
        /// Cap on explicit product states (oracle runs).
        #[arg(long, default_value_t = 1_000_000)]
        state_cap: usize,
        /// Use the full-space fixpoint over the explicit product.
        #[arg(long)]
        oracle: bool,
        /// Use the per-component polynomial check; requires pairwise
        /// disjoint service alphabets.
        #[arg(long)]
        disjoint_fast: bool,
        /// Manifest sidecar path.
        #[arg(long, default_value = "compsyn-run.json")]
        manifest: PathBuf,
    },
    /// Decide whether the goal is bisimilar to the asynchronous product.
    CheckBisim {
        goal: PathBuf,
        #[arg(required = true)]
        services: Vec<PathBuf>,
        /// Cap on explicit product states (oracle runs).
        #[arg(long, default_value_t = 1_000_000)]
        state_cap: usize,
        /// Use partition refinement on the explicit product.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value = "compsyn-run.json")]
        manifest: PathBuf,
    },
    /// Synthesize a delegator for the goal and write it to a file.
    Synth {
        goal: PathBuf,
        #[arg(required = true)]
        services: Vec<PathBuf>,
        /// Output path for the delegator.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        pair_cap: usize,
        #[arg(long, default_value = "compsyn-run.json")]
        manifest: PathBuf,
    },
    /// Encode a Turing machine (.tm) into a benchmark instance directory.
    Encode {
        /// Machine with its input word (.tm).
        tm: PathBuf,
        /// Which construction to apply.
        #[arg(long, value_enum)]
        kind: EncodeKind,
        /// Re-encode over a fixed alphabet; letters comma-separated.
        #[arg(long, value_name = "LETTERS", num_args = 0..=1, default_missing_value = "a,b")]
        const_alphabet: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Cap on machine configurations for the oracle run.
        #[arg(long, default_value_t = 1_000_000)]
        tm_cap: usize,
        #[arg(long, default_value = "compsyn-run.json")]
        manifest: PathBuf,
    },
    /// Run every instance listed in a corpus file and compare checker
    /// verdicts against the recorded oracle verdicts.
    Corpus {
        /// Text file with one instance directory per line.
        spec: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        pair_cap: usize,
        #[arg(long, default_value = "compsyn-run.json")]
        manifest: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EncodeKind {
    Pspace,
    Exptime,
}

/// Reproducibility record for one run.
#[derive(Serialize, Deserialize)]
struct RunManifest {
    command: String,
    inputs: Vec<String>,
    parameters: BTreeMap<String, serde_json::Value>,
    verdict: String,
    timing_ms: u128,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: Vec::new(),
            parameters: BTreeMap::new(),
            verdict: String::new(),
            timing_ms: 0,
        }
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    fn param(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    fn finish(mut self, verdict: &str, started: Instant, path: &Path) -> Result<()> {
        self.verdict = verdict.to_string();
        self.timing_ms = started.elapsed().as_millis();
        let json = serde_json::to_string(&self).expect("manifest serializes");
        fs::write(path, &json).with_context(|| format!("writing manifest {}", path.display()))?;
        println!("MANIFEST: {json}");
        Ok(())
    }
}

fn load_service(path: &Path) -> Result<ServiceAutomaton> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ServiceAutomaton::parse(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_product(paths: &[PathBuf]) -> Result<ProductView> {
    let services = paths
        .iter()
        .map(|p| load_service(p))
        .collect::<Result<Vec<_>>>()?;
    ProductView::new(services).map_err(|e| anyhow!("{e}"))
}

/// Verdict of one run and the exit status it maps to.
enum Outcome {
    Positive(String),
    Negative(String),
}

impl Outcome {
    fn verdict(&self) -> &str {
        match self {
            Outcome::Positive(v) | Outcome::Negative(v) => v,
        }
    }

    fn code(&self) -> ExitCode {
        match self {
            Outcome::Positive(_) => ExitCode::from(0),
            Outcome::Negative(_) => ExitCode::from(1),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let started = Instant::now();
    match cli.command {
        Command::CheckSim {
            goal,
            services,
            pair_cap,
            state_cap,
            oracle,
            disjoint_fast,
            manifest,
        } => {
            let mut record = RunManifest::new("check-sim");
            record.input(&goal);
            for s in &services {
                record.input(s);
            }
            record.param("pair_cap", pair_cap as u64);
            record.param("state_cap", state_cap as u64);
            record.param("oracle", oracle);
            record.param("disjoint_fast", disjoint_fast);

            let b = load_service(&goal)?;
            let p = load_product(&services)?;
            let verdict = if disjoint_fast {
                let ok = simulates_disjoint(&b, &p)?;
                SimVerdict {
                    simulated: ok,
                    counterexample: None,
                }
            } else if oracle {
                let explicit = p.explicit(state_cap)?;
                let rel = largest_simulation_fullspace(&b, &explicit);
                SimVerdict {
                    simulated: rel.contains(&(b.initial(), explicit.initial())),
                    counterexample: None,
                }
            } else {
                simulates(&b, &p, pair_cap)?
            };
            print!("{}", render_sim_report(&verdict));
            let outcome = if verdict.simulated {
                Outcome::Positive("SIMULATED".into())
            } else {
                Outcome::Negative("NOT-SIMULATED".into())
            };
            record.finish(outcome.verdict(), started, &manifest)?;
            Ok(outcome.code())
        }

        Command::CheckBisim {
            goal,
            services,
            state_cap,
            oracle,
            manifest,
        } => {
            let mut record = RunManifest::new("check-bisim");
            record.input(&goal);
            for s in &services {
                record.input(s);
            }
            record.param("state_cap", state_cap as u64);
            record.param("oracle", oracle);

            let b = load_service(&goal)?;
            let p = load_product(&services)?;
            let outcome = if oracle {
                let explicit = p.explicit(state_cap)?;
                let ok = bisim_oracle(&b.to_nfa(), &explicit);
                println!(
                    "VERDICT: {}",
                    if ok { "BISIMILAR" } else { "NOT-BISIMILAR" }
                );
                if ok {
                    Outcome::Positive("BISIMILAR".into())
                } else {
                    Outcome::Negative("NOT-BISIMILAR".into())
                }
            } else {
                let verdict = check_bisimilar(&b, &p);
                print!("{}", render_bisim_report(&verdict));
                if verdict.bisimilar {
                    Outcome::Positive("BISIMILAR".into())
                } else {
                    Outcome::Negative("NOT-BISIMILAR".into())
                }
            };
            record.finish(outcome.verdict(), started, &manifest)?;
            Ok(outcome.code())
        }

        Command::Synth {
            goal,
            services,
            out,
            pair_cap,
            manifest,
        } => {
            let mut record = RunManifest::new("synth");
            record.input(&goal);
            for s in &services {
                record.input(s);
            }
            record.param("pair_cap", pair_cap as u64);
            record.param("out", out.display().to_string());

            let b = load_service(&goal)?;
            let p = load_product(&services)?;
            let rel = largest_simulation(&b, &p, pair_cap)?;
            let outcome = match synthesize(&rel) {
                Ok(d) => {
                    fs::write(&out, d.to_text())
                        .with_context(|| format!("writing {}", out.display()))?;
                    println!("VERDICT: SYNTHESIZED");
                    println!("POLICY: {} entries -> {}", d.len(), out.display());
                    Outcome::Positive("SYNTHESIZED".into())
                }
                Err(DelegatorError::Unsolvable) => {
                    println!("VERDICT: UNSOLVABLE");
                    Outcome::Negative("UNSOLVABLE".into())
                }
                Err(e) => bail!(e),
            };
            record.finish(outcome.verdict(), started, &manifest)?;
            Ok(outcome.code())
        }

        Command::Encode {
            tm,
            kind,
            const_alphabet,
            out,
            tm_cap,
            manifest,
        } => {
            let mut record = RunManifest::new("encode");
            record.input(&tm);
            record.param("kind", format!("{kind:?}").to_lowercase());
            record.param("tm_cap", tm_cap as u64);
            record.param("out", out.display().to_string());
            if let Some(base) = &const_alphabet {
                record.param("const_alphabet", base.clone());
            }

            let text =
                fs::read_to_string(&tm).with_context(|| format!("reading {}", tm.display()))?;
            let (machine, input) = parse_tm(&text).map_err(|e| anyhow!("{}: {e}", tm.display()))?;
            let mut instance = match (kind, machine.kind()) {
                (EncodeKind::Pspace, TmKind::Deterministic) => {
                    let mut inst = pspace_encode(&machine, &input)?;
                    inst.meta.oracle = Some(tm_loops(&machine, &input, tm_cap)?);
                    inst
                }
                (EncodeKind::Exptime, TmKind::Alternating) => {
                    let mut inst = exptime_encode(&machine, &input)?;
                    inst.meta.oracle =
                        Some(atm_has_infinite_computation(&machine, &input, tm_cap)?);
                    inst
                }
                (EncodeKind::Pspace, TmKind::Alternating) => {
                    bail!("pspace encoding needs a deterministic machine")
                }
                (EncodeKind::Exptime, TmKind::Deterministic) => {
                    bail!("exptime encoding needs an alternating machine")
                }
            };
            if let Some(base) = const_alphabet {
                let letters: Vec<String> = base.split(',').map(|s| s.to_string()).collect();
                let conflicts = const_alphabet_conflicts(&instance, letters.len());
                instance = const_alphabet_transform(&instance, &letters)?;
                if conflicts > 0 {
                    // The goal can now postpone choices the product must
                    // commit to; the machine verdict no longer certifies the
                    // transformed instance, so the manifest records none.
                    instance.meta.oracle = None;
                    println!(
                        "NOTE: {conflicts} goal states share a base letter between enabled actions; \
                         oracle verdict omitted (exact preservation needs a larger base)"
                    );
                }
            }
            instance.write_dir(&out)?;
            let verdict = if instance.meta.oracle == Some(true) {
                "SIMULATED"
            } else {
                "NOT-SIMULATED"
            };
            println!(
                "ENCODED: {} services + goal -> {}",
                instance.services.len(),
                out.display()
            );
            println!("ORACLE: {verdict}");
            record.finish(verdict, started, &manifest)?;
            Ok(ExitCode::from(0))
        }

        Command::Corpus {
            spec,
            pair_cap,
            manifest,
        } => {
            let mut record = RunManifest::new("corpus");
            record.input(&spec);
            record.param("pair_cap", pair_cap as u64);

            let text =
                fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let base = spec.parent().unwrap_or(Path::new("."));
            let dirs: Vec<PathBuf> = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(|l| base.join(l))
                .collect();

            let rows = run_corpus(&dirs, pair_cap)?;
            println!(
                "{:<28} {:<15} {:<15} {:<6} {:>8}",
                "INSTANCE", "ORACLE", "CHECKER", "AGREE", "TIME-MS"
            );
            let mut disagreements = 0;
            for row in &rows {
                if !row.agree {
                    disagreements += 1;
                }
                println!(
                    "{:<28} {:<15} {:<15} {:<6} {:>8}",
                    row.name,
                    verdict_str(row.oracle),
                    verdict_str(row.checker),
                    if row.agree { "yes" } else { "NO" },
                    row.time_ms
                );
            }
            println!(
                "TOTAL: {} instances, {} agree, {} disagree",
                rows.len(),
                rows.len() - disagreements,
                disagreements
            );
            let outcome = if disagreements == 0 {
                Outcome::Positive("AGREE".into())
            } else {
                Outcome::Negative("DISAGREE".into())
            };
            record.finish(outcome.verdict(), started, &manifest)?;
            Ok(outcome.code())
        }
    }
}

fn verdict_str(v: bool) -> &'static str {
    if v {
        "SIMULATED"
    } else {
        "NOT-SIMULATED"
    }
}

struct CorpusRow {
    name: String,
    oracle: bool,
    checker: bool,
    agree: bool,
    time_ms: u128,
}

/// Checks all instances, spreading them over the available cores; row order
/// follows the corpus file regardless of scheduling.
fn run_corpus(dirs: &[PathBuf], pair_cap: usize) -> Result<Vec<CorpusRow>> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(dirs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<CorpusRow>>>> =
        dirs.iter().map(|_| std::sync::Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= dirs.len() {
                    break;
                }
                *results[i].lock().unwrap() = Some(check_instance(&dirs[i], pair_cap));
            });
        }
    });

    results
        .into_iter()
        .map(|cell| {
            cell.into_inner()
                .unwrap()
                .expect("worker filled every slot")
        })
        .collect()
}

fn check_instance(dir: &Path, pair_cap: usize) -> Result<CorpusRow> {
    let started = Instant::now();
    let instance =
        ReductionInstance::read_dir(dir).map_err(|e| anyhow!("{}: {e}", dir.display()))?;
    let oracle = instance
        .meta
        .oracle
        .ok_or_else(|| anyhow!("{}: manifest records no oracle verdict", dir.display()))?;
    let product = instance.product();
    let verdict = simulates(&instance.goal, &product, pair_cap)?;
    Ok(CorpusRow {
        name: instance.meta.name.clone(),
        oracle,
        checker: verdict.simulated,
        agree: oracle == verdict.simulated,
        time_ms: started.elapsed().as_millis(),
    })
}
