//! Command-line front end. Exit codes: 0 success, 2 search violation found,
//! 64 usage error, 74 I/O error.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::branch_matrix::{block_decompose, build_matrix, rank_bounds};
use crate::core_graph::CoreGraph;
use crate::hyperbolic::{estimate_gp, sample_schottky, PointH3};
use crate::search::{run_search, SearchConfig};
use crate::subgroup_calc::{intersect, join};
use crate::words::Word;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

/// Worker-count fallback when neither flag nor config file sets one.
pub const THREADS_ENV: &str = "STALLINGS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "stallings", version, about = "Free-group subgroup calculus and hyperbolic displacement tools")]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PairArgs {
    /// Generators of the first subgroup, comma-separated words.
    #[arg(long = "h")]
    h: String,
    /// Generators of the second subgroup, comma-separated words.
    #[arg(long = "k")]
    k: String,
    /// Ambient free group rank.
    #[arg(long, default_value_t = 2)]
    n: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank of the subgroup generated by the given words.
    Rank {
        /// Comma-separated generator words (lowercase = generator, uppercase = inverse).
        #[arg(long)]
        gens: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Whether a word lies in the subgroup generated by the given words.
    Member {
        #[arg(long)]
        gens: String,
        /// The word to test.
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Intersection of two subgroups.
    Intersect(PairArgs),
    /// Join (subgroup generated by the union) of two subgroups.
    Join(PairArgs),
    /// Branch-vertex matrix of a pair, with block counts and rank bounds.
    Matrix(PairArgs),
    /// Enumerate or sample rank-m pairs and test the join-rank conjecture.
    Search {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// "exhaustive" or "random".
        #[arg(long)]
        mode: Option<String>,
        /// Bound on generator word length.
        #[arg(long)]
        length: Option<usize>,
        /// Number of random pairs.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = library default).
        #[arg(long)]
        threads: Option<usize>,
        /// Flat key = value config file; entries override flags.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the JSON report here as well as stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to dump a violation witness.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Sample a certified rank-k Schottky configuration.
    Schottky {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate the rank of the subgroup generated by short-translation
    /// cyclic groups at a point of a sampled Schottky group.
    GpEstimate {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Base point as "x,y,z" with z > 0.
        #[arg(long, default_value = "0,0,1")]
        point: String,
        /// Displacement threshold; defaults to log(2k - 1).
        #[arg(long)]
        lambda: Option<f64>,
        /// Word length bound for the enumeration.
        #[arg(long, default_value_t = 6)]
        length: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_gens(text: &str, n: usize) -> Result<Vec<Word>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Word::parse(s, n).map_err(usage))
        .collect()
}

fn subgroup(text: &str, n: usize) -> Result<CoreGraph, CliError> {
    let gens = parse_gens(text, n)?;
    CoreGraph::from_generators(&gens, n).map_err(usage)
}

fn gen_strings(g: &CoreGraph) -> Vec<String> {
    g.generators().iter().map(|w| w.to_string()).collect()
}

/// Parses argv and dispatches; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Rank { gens, n } => {
            let g = subgroup(gens, *n)?;
            if cli.json {
                print_json(&json!({ "rank": g.rank(), "graph": g.to_json() }))?;
            } else {
                println!("{}", g.rank());
            }
            Ok(EXIT_OK)
        }
        Command::Member { gens, word, n } => {
            let g = subgroup(gens, *n)?;
            let w = Word::parse(word, *n).map_err(usage)?;
            let member = g.contains(&w).map_err(usage)?;
            if cli.json {
                print_json(&json!({ "word": word, "member": member }))?;
            } else {
                println!("{member}");
            }
            Ok(EXIT_OK)
        }
        Command::Intersect(args) => pair_subgroup_op(cli, args, intersect),
        Command::Join(args) => pair_subgroup_op(cli, args, join),
        Command::Matrix(args) => {
            let h = subgroup(&args.h, args.n)?;
            let k = subgroup(&args.k, args.n)?;
            let m = build_matrix(&h, &k).map_err(usage)?;
            let d = block_decompose(&m);
            let bounds = rank_bounds(h.rank(), k.rank(), &d);
            if cli.json {
                print_json(&json!({
                    "rows": m.rows,
                    "cols": m.cols,
                    "ones": m.ones,
                    "l": d.l,
                    "p": d.p,
                    "q": d.q,
                    "trivalent": m.trivalent,
                    "intersection_trivalent": m.intersection_trivalent,
                    "kent_bound": bounds.kent_bound,
                    "refined_bound": bounds.refined_bound,
                    "integral_bound": bounds.integral_bound,
                }))?;
            } else {
                println!("dimensions: {} x {}", m.rows.len(), m.cols.len());
                println!("ones: {}", m.ones.len());
                println!("l: {} p: {} q: {}", d.l, d.p, d.q);
                println!("trivalent: {}", m.trivalent);
                println!(
                    "bounds: kent {} refined {} integral {}",
                    bounds.kent_bound, bounds.refined_bound, bounds.integral_bound
                );
            }
            Ok(EXIT_OK)
        }
        Command::Search {
            m,
            n,
            mode,
            length,
            samples,
            seed,
            threads,
            config,
            out,
            witness,
        } => {
            let mut cfg = SearchConfig::default();
            if let Ok(value) = std::env::var(THREADS_ENV) {
                cfg.parallelism = value
                    .parse()
                    .map_err(|e| usage(format!("{THREADS_ENV}: {e}")))?;
            }
            if let Some(m) = m {
                cfg.m = *m;
            }
            if let Some(n) = n {
                cfg.alphabet_rank = *n;
            }
            if let Some(mode) = mode {
                cfg.mode = mode.parse().map_err(usage)?;
            }
            if let Some(length) = length {
                cfg.max_word_length = *length;
            }
            if let Some(samples) = samples {
                cfg.sample_count = *samples;
            }
            if let Some(seed) = seed {
                cfg.rng_seed = *seed;
            }
            if let Some(threads) = threads {
                cfg.parallelism = *threads;
            }
            if let Some(witness) = witness {
                cfg.witness_path = Some(witness.clone());
            }
            // config file entries take precedence over flags
            if let Some(path) = config {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                cfg.apply_text(&text).map_err(usage)?;
            }
            cfg.validate().map_err(usage)?;
            let report = run_search(&cfg).map_err(|e| CliError::Io(e.to_string()))?;
            let rendered = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Io(e.to_string()))?;
            if let Some(path) = out {
                std::fs::write(path, &rendered)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            if cli.json {
                println!("{rendered}");
            } else {
                println!("pairs tested: {}", report.pairs_tested);
                println!("pairs qualifying: {}", report.pairs_qualifying);
                println!("violations: {}", report.violations);
                for (key, count) in &report.histogram {
                    println!("  (intersection, join) = ({key}): {count}");
                }
                println!("wall time: {} ms", report.wall_time_ms);
            }
            if report.violations > 0 {
                Ok(EXIT_VIOLATION)
            } else {
                Ok(EXIT_OK)
            }
        }
        Command::Schottky { k, seed } => {
            if *k < 2 {
                return Err(usage("k must be at least 2"));
            }
            let cfg = sample_schottky(*k, *seed).map_err(usage)?;
            if cli.json {
                print_json(&cfg.to_json())?;
            } else {
                println!("k: {}", cfg.k);
                for (i, (g, (src, tgt))) in cfg.generators.iter().zip(&cfg.circles).enumerate() {
                    let c = g.classify().map_err(usage)?;
                    println!(
                        "generator {i}: length {:.6} rotation {:.6}",
                        c.translation_length, c.rotation_angle
                    );
                    println!(
                        "  circles: ({:.4}, {:.4}) r {:.4} -> ({:.4}, {:.4}) r {:.4}",
                        src.center[0], src.center[1], src.radius,
                        tgt.center[0], tgt.center[1], tgt.radius
                    );
                }
            }
            Ok(EXIT_OK)
        }
        Command::GpEstimate { k, seed, point, lambda, length } => {
            if *k < 2 {
                return Err(usage("k must be at least 2"));
            }
            let coords: Vec<f64> = point
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(usage))
                .collect::<Result<_, _>>()?;
            if coords.len() != 3 {
                return Err(usage("point must be 'x,y,z'"));
            }
            let p = PointH3::new(coords[0], coords[1], coords[2]).map_err(usage)?;
            let cfg = sample_schottky(*k, *seed).map_err(usage)?;
            let lam = lambda.unwrap_or(((2 * k - 1) as f64).ln());
            let est = estimate_gp(&p, &cfg, lam, *length);
            if cli.json {
                print_json(&est.to_json())?;
            } else {
                println!("lambda: {lam}");
                println!("survivors: {}", est.survivors.len());
                let roots: Vec<String> = est.roots.iter().map(|w| w.to_string()).collect();
                println!("roots: {}", roots.join(", "));
                println!("rank estimate: {}", est.rank_estimate);
            }
            Ok(EXIT_OK)
        }
    }
}

fn pair_subgroup_op(
    cli: &Cli,
    args: &PairArgs,
    op: fn(&CoreGraph, &CoreGraph) -> Result<CoreGraph, crate::core_graph::GraphError>,
) -> Result<i32, CliError> {
    let h = subgroup(&args.h, args.n)?;
    let k = subgroup(&args.k, args.n)?;
    let result = op(&h, &k).map_err(usage)?;
    let gens = gen_strings(&result);
    if cli.json {
        print_json(&json!({
            "rank": result.rank(),
            "generators": gens,
            "graph": result.to_json(),
        }))?;
    } else {
        println!("rank: {}", result.rank());
        println!("generators: {}", gens.join(", "));
    }
    Ok(EXIT_OK)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}
