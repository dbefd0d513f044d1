use std::fs;
use std::io::{self, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use disclose_core::check::{run_check, Algo, Classes};
use disclose_core::corpus::{diff_problem, random_circuit, random_graph, random_id_implication, random_problem, run_diff, DiffSummary, Family};
use disclose_core::engine::ChaseBudget;
use disclose_core::hardgen::{chain_implication, gen_3coloring, gen_circuit_sat, gen_id_implication, Circuit, CircuitVariant, ColoringProblem};
use disclose_core::model::Problem;
use disclose_core::syntax::{parse, print};
use disclose_core::verdict::VerdictKind;

// Stdout writes that fail with an error instead of panicking, so a closed pipe
// ends the run quietly.
macro_rules! out {
    ($($t:tt)*) => { write!(io::stdout().lock(), $($t)*)? };
}

macro_rules! outln {
    ($($t:tt)*) => { writeln!(io::stdout().lock(), $($t)*)? };
}

const MAX_VERTICES: usize = 200;
const MAX_GATES: usize = 200;
const MAX_CHAIN: usize = 200;

#[derive(Parser)]
#[command(name = "disclose", version, about = "Decides whether published views disclose a secret over the sources")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone, Copy)]
struct BudgetArgs {
    /// Chase rounds before giving up with UNKNOWN.
    #[arg(long, default_value_t = 8)]
    rounds: usize,
    /// Instance size before giving up with UNKNOWN.
    #[arg(long = "max-facts", default_value_t = 100_000)]
    max_facts: usize,
}

impl BudgetArgs {
    fn budget(self) -> ChaseBudget {
        ChaseBudget::new(self.rounds, self.max_facts)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide disclosure for one problem file.
    Check {
        file: PathBuf,
        /// auto, vischase, critrewrite, critrewrite-ptime, uid-ptime or oracle.
        #[arg(long, default_value = "auto")]
        algo: String,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        json: bool,
    },
    /// Print a generated problem file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run several algorithms on the same settings and compare verdicts.
    Diff {
        /// Problem files; without them a seeded family is used.
        files: Vec<PathBuf>,
        #[arg(long, value_parser = parse_family)]
        family: Option<Family>,
        /// `N` for 0..N, or `A..B`.
        #[arg(long, default_value = "0..200", value_parser = parse_seeds)]
        seeds: Range<u64>,
        /// Comma-separated algorithms; default every legal one.
        #[arg(long, value_delimiter = ',')]
        algos: Vec<String>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        json: bool,
    },
    /// Report constraint and mapping classes and the legal algorithms.
    Classify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// 3-colourability of a graph.
    #[command(name = "3col")]
    ThreeCol {
        /// Edges such as `1-2,2-3,1-3`.
        #[arg(long, conflicts_with = "seed")]
        edges: Option<String>,
        #[arg(long)]
        vertices: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Satisfiability of a NOT/OR circuit.
    Circuit {
        /// Circuit such as `o=OR(NOT 2,2)`.
        #[arg(long, conflicts_with = "seed")]
        spec: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "fr1")]
        variant: Variant,
        /// Also write the companion instance here.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Implication between inclusion dependencies.
    Idimp {
        /// Length of a chain R0 ⊆ .. ⊆ Rn.
        #[arg(long, conflicts_with = "seed")]
        chain: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// A seeded random setting of one family.
    Random {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Atommap,
    Fr1,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let r = num(a)?..num(b)?;
            if r.is_empty() {
                return Err(format!("empty seed range `{s}`"));
            }
            Ok(r)
        }
        None => Ok(0..num(s)?),
    }
}

fn load(path: &Path) -> Result<Problem> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn check(file: &Path, algo: &str, budget: BudgetArgs, json: bool) -> Result<ExitCode> {
    let algo: Algo = algo.parse()?;
    let p = load(file)?;
    let r = run_check(&p, algo, budget.budget())?;
    if json {
        outln!("{}", r.to_json());
    } else {
        outln!("{r}");
    }
    Ok(if r.verdict == VerdictKind::Unknown { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn gen(kind: GenKind) -> Result<ExitCode> {
    match kind {
        GenKind::ThreeCol { edges, vertices, seed } => {
            let g = match (edges, seed) {
                (Some(e), _) => ColoringProblem::parse(&e, vertices)?,
                (None, Some(s)) => random_graph(s, vertices.unwrap_or(8)),
                (None, None) => bail!("give --edges or --seed"),
            };
            if g.vertices > MAX_VERTICES {
                bail!("{} vertices exceeds the cap of {MAX_VERTICES}", g.vertices);
            }
            out!("{}", print(&gen_3coloring(&g)));
        }
        GenKind::Circuit { spec, seed, variant, instance } => {
            let c = match (spec, seed) {
                (Some(s), _) => Circuit::parse(&s)?,
                (None, Some(s)) => random_circuit(s, 6, 4),
                (None, None) => bail!("give --spec or --seed"),
            };
            if c.gates.len() > MAX_GATES {
                bail!("{} gates exceeds the cap of {MAX_GATES}", c.gates.len());
            }
            let variant = match variant {
                Variant::Atommap => CircuitVariant::AtomMap,
                Variant::Fr1 => CircuitVariant::Fr1,
            };
            let setting = gen_circuit_sat(&c, variant)?;
            out!("{}", print(&setting.problem));
            outln!("\n# circuit: {c}\n# companion instance:");
            for f in setting.instance.sorted_facts() {
                outln!("#   {f}");
            }
            if let Some(path) = instance {
                fs::write(&path, setting.instance.to_string()).with_context(|| format!("cannot write {}", path.display()))?;
            }
        }
        GenKind::Idimp { chain, seed } => {
            let p = match (chain, seed) {
                (Some(n), _) if n > MAX_CHAIN => bail!("chain of {n} exceeds the cap of {MAX_CHAIN}"),
                (Some(n), _) => chain_implication(n),
                (None, Some(s)) => random_id_implication(s),
                (None, None) => bail!("give --chain or --seed"),
            };
            out!("{}", print(&gen_id_implication(&p)));
        }
        GenKind::Random { family, seed } => out!("{}", print(&random_problem(family, seed))),
    }
    Ok(ExitCode::SUCCESS)
}

fn diff(files: &[PathBuf], family: Option<Family>, seeds: Range<u64>, algos: &[String], budget: BudgetArgs, json: bool) -> Result<ExitCode> {
    let algos: Vec<Algo> = algos.iter().map(|a| a.parse()).collect::<Result<_, _>>()?;
    if algos.contains(&Algo::Auto) {
        bail!("diff compares concrete algorithms; `auto` is not one");
    }
    let chosen = (!algos.is_empty()).then_some(algos.as_slice());
    let summary = match (files.is_empty(), family) {
        (false, None) => {
            let rows = files
                .iter()
                .map(|f| Ok(diff_problem(f.display().to_string(), &load(f)?, chosen, budget.budget())))
                .collect::<Result<_>>()?;
            DiffSummary { rows }
        }
        (true, Some(f)) => run_diff(f, seeds, chosen, budget.budget()),
        (false, Some(_)) => bail!("give either files or --family, not both"),
        (true, None) => bail!("give problem files or --family"),
    };
    if json {
        outln!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        for r in &summary.rows {
            let tag = if r.disagrees() {
                "DISAGREE"
            } else if r.has_unknown() {
                "unknown "
            } else {
                "ok      "
            };
            outln!("{tag} {r}");
        }
        outln!("{summary}");
    }
    Ok(if summary.disagreements().is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn classify(file: &Path, json: bool) -> Result<ExitCode> {
    let c = Classes::of(&load(file)?);
    if json {
        let v = serde_json::json!({ "classes": c, "legal": c.legal_algos(), "auto": c.auto() });
        outln!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        let join = |v: Vec<String>| v.join(", ");
        outln!("constraint classes: {}", join(c.constraints.iter().map(|x| x.to_string()).collect()));
        outln!("mapping classes: {}", join(c.mappings.iter().map(|x| x.to_string()).collect()));
        outln!("legal algorithms: {}", join(c.legal_algos().iter().map(|x| x.to_string()).collect()));
        outln!("auto: {}", c.auto());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let out = match cli.cmd {
        Cmd::Check { file, algo, budget, json } => check(&file, &algo, budget, json),
        Cmd::Gen { kind } => gen(kind),
        Cmd::Diff { files, family, seeds, algos, budget, json } => diff(&files, family, seeds, &algos, budget, json),
        Cmd::Classify { file, json } => classify(&file, json),
    };
    out.unwrap_or_else(|e| {
        if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) {
            return ExitCode::SUCCESS;
        }
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
