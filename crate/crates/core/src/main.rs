use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use acx_core::corpus::{self, Document};
use acx_core::explore::Exploration;
use acx_core::lattice::{self, PropertySet, PropertyTag};
use acx_core::props;
use acx_core::report::Report;
use acx_core::{reachable, Bound};

const TAG_TABLE: &str = "\
Property tags (ASCII spelling = symbol):
  SCs SCq SCa            state correspondence
  SSl SSp SSinf=SS∞      state size
  CDi CDt CDs            command dependence
  CCc CCl CCinf=CC∞      command complexity
  CS1 CSc CSinf=CS∞      stuttering
  CT1 CTq CTa CTs        trace structure
  CAtop=CA⊤ CAa          actor
  QD1 QDi QDt QDs        query dependence
  QCc QCinf=QC∞          query complexity
  QPf QPa QPw            query preservation
  Rfwd=R→ Rbi=R↔         reachability
Use `all` for every tag.";

#[derive(Parser)]
#[command(name = "acx", version, about = "Bounded checking of access control simulation properties")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load and validate system or mapping files.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Explore the bounded state space of a system or mapping.
    Explore {
        path: PathBuf,
        #[arg(long, default_value_t = Bound::default())]
        bound: Bound,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check simulation properties of a mapping.
    #[command(after_help = TAG_TABLE)]
    Check {
        mapping: PathBuf,
        /// Comma separated property tags.
        #[arg(long, default_value = "all")]
        props: String,
        /// Atoms per sort, new atoms per sort, depth.
        #[arg(long, default_value_t = Bound::default())]
        bound: Bound,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Query the property lattice and the catalog of simulations.
    Lattice {
        #[command(subcommand)]
        command: LatticeCmd,
    },
    /// Re-read a JSON report, optionally replaying its counterexamples.
    Report {
        path: PathBuf,
        /// Mapping to replay counterexamples against.
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Published decomposition of simulations (all when none named).
    Decompose { names: Vec<String> },
    /// Compare two simulations (or comma separated tag sets).
    Compare {
        a: String,
        b: String,
        /// Compare canonical usages instead of decompositions.
        #[arg(long)]
        canonical: bool,
    },
    /// Canonical usage of a simulation.
    Canonical { name: String },
    /// Whether one tag implies another.
    Implies { premise: String, conclusion: String },
    /// Implication closure of a tag set.
    Closure { tags: String },
    /// Print the catalog and implication rules as JSON.
    Export,
}

fn parse_props(text: &str) -> anyhow::Result<PropertySet> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(PropertyTag::ALL.iter().copied().collect());
    }
    let set = lattice::parse_set(text)?;
    if set.is_empty() {
        bail!("no property tags given");
    }
    Ok(set)
}

/// A simulation name or an explicit tag set.
fn named_or_set(text: &str, canonical: bool) -> anyhow::Result<PropertySet> {
    if lattice::simulation_names().iter().any(|n| n.eq_ignore_ascii_case(text)) {
        return Ok(if canonical { lattice::canonical_usage(text)? } else { lattice::decompose_named(text)? });
    }
    lattice::parse_set(text).with_context(|| format!("`{text}` is neither a simulation name nor a tag set"))
}

fn load_mapping(path: &Path) -> anyhow::Result<acx_core::MappingDef> {
    Ok(corpus::load_mapping_file(path)?)
}

fn validate(paths: &[PathBuf]) -> anyhow::Result<u8> {
    let mut failed = false;
    for p in paths {
        match corpus::load_document(p) {
            Ok(Document::System(s)) => {
                println!(
                    "ok: {} (system {}: {} sorts, {} relations, {} queries, {} commands)",
                    p.display(),
                    s.name(),
                    s.sorts().len(),
                    s.relations().len(),
                    s.queries().len(),
                    s.commands().len()
                );
                for w in s.warnings() {
                    println!("  warning: {w}");
                }
            }
            Ok(Document::Mapping(m)) => println!("ok: {} (mapping {m})", p.display()),
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                failed = true;
            }
        }
    }
    Ok(if failed { 2 } else { 0 })
}

fn explore(path: &Path, bound: Bound, format: Format) -> anyhow::Result<u8> {
    let stats = match corpus::load_document(path)? {
        Document::System(s) => {
            let start = acx_core::explore::seed_state(&s, s.init(), bound.atoms_per_sort);
            let r = reachable(&s, &start, bound);
            serde_json::json!({
                "system": s.name(),
                "bound": bound,
                "states": r.len(),
                "edges": r.edges.len(),
                "max_depth": r.depth.iter().max().copied().unwrap_or(0),
                "truncated": r.truncated,
            })
        }
        Document::Mapping(m) => {
            let ex = Exploration::new(&m, bound)?;
            serde_json::json!({ "mapping": m.name(), "bound": bound, "exploration": ex.stats() })
        }
    };
    match format {
        Format::Json => println!("{}", acx_core::canonical_json_pretty(&stats)),
        Format::Text => {
            for (k, v) in stats.as_object().expect("object") {
                println!("{k}: {v}");
            }
        }
    }
    Ok(0)
}

fn check(mapping: &Path, props: &str, bound: Bound, out: Option<&Path>, format: Format) -> anyhow::Result<u8> {
    let tags = parse_props(props)?;
    let m = Arc::new(load_mapping(mapping)?);
    let run = props::check_mapping(m.clone(), bound, &tags)?;
    let report = Report::new(&m, run);
    if let Some(out) = out {
        std::fs::write(out, report.to_json()).with_context(|| format!("writing {}", out.display()))?;
    }
    match format {
        Format::Json => print!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    Ok(report.exit_code() as u8)
}

fn report(path: &Path, replay: Option<&Path>, format: Format) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = Report::from_json(&text)?;
    match format {
        Format::Json => print!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    if let Some(mp) = replay {
        let m = load_mapping(mp)?;
        for r in report.results.iter().filter(|r| r.counterexample.is_some()) {
            match props::replay(&m, r) {
                Ok(true) => println!("replay {}: reproduced", r.property),
                Ok(false) => {
                    println!("replay {}: NOT reproduced", r.property);
                    return Ok(1);
                }
                Err(e) => bail!("replay {}: {e}", r.property),
            }
        }
    }
    Ok(report.exit_code() as u8)
}

fn lattice_cmd(cmd: LatticeCmd) -> anyhow::Result<u8> {
    match cmd {
        LatticeCmd::Decompose { names } => {
            if names.is_empty() {
                for e in lattice::catalog() {
                    println!("{:<7} {}", e.name, lattice::format_set(&e.decomposition));
                }
            } else {
                for n in names {
                    println!("{}", lattice::format_set(&lattice::decompose_ordered(&n)?));
                }
            }
        }
        LatticeCmd::Compare { a, b, canonical } => {
            let (sa, sb) = (named_or_set(&a, canonical)?, named_or_set(&b, canonical)?);
            println!("{}", lattice::compare_sets(&sa, &sb));
        }
        LatticeCmd::Canonical { name } => println!("{}", lattice::format_set(&lattice::canonical_usage(&name)?)),
        LatticeCmd::Implies { premise, conclusion } => {
            let (p, c): (PropertyTag, PropertyTag) = (premise.parse()?, conclusion.parse()?);
            println!("{}", lattice::implies(p, c));
        }
        LatticeCmd::Closure { tags } => println!("{}", lattice::format_set(&lattice::closure(&lattice::parse_set(&tags)?))),
        LatticeCmd::Export => print!("{}", lattice::catalog_json()),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Validate { paths } => validate(&paths),
        Cmd::Explore { path, bound, format } => explore(&path, bound, format),
        Cmd::Check { mapping, props, bound, out, format } => check(&mapping, &props, bound, out.as_deref(), format),
        Cmd::Lattice { command } => lattice_cmd(command),
        Cmd::Report { path, replay, format } => report(&path, replay.as_deref(), format),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
