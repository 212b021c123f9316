use std::path::PathBuf;
use std::process::ExitCode;

use blockgraver::instances::CorpusParams;
use blockgraver::solver::Caps;
use blockgraver::{GraverOptions, MatrixKind};
use blockgraver_cli::{
    cmd_brute, cmd_decompose, cmd_graver, cmd_merge, cmd_scaling, cmd_solve, cmd_steinitz, emit,
    family_instance, format, load_instance, load_matrix, load_vectors, parse_vector_arg, usage,
    write_corpus, CliResult, Family, GraverEngine, ScalingMethod,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "blockgraver", version, about = "Graver bases and exact solvers for 3-block and 4-block n-fold integer programs")]
struct Cli {
    /// Worker threads for parallel commands (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum Method {
    Enum,
    Complete,
}

#[derive(Copy, Clone, ValueEnum)]
enum Kind {
    H,
    H0,
    E,
    F,
}

#[derive(Copy, Clone, ValueEnum)]
enum FamilyArg {
    FourBlock,
    ThreeBlock,
}

#[derive(Copy, Clone, ValueEnum)]
enum CertArg {
    Auto,
    Exhaustive,
    Divisibility,
}

#[derive(Subcommand)]
enum GenKind {
    /// The 4-block family with kernel norms n^(t-1).
    Lower4 {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        bound: i64,
    },
    /// The 3-block family with Graver norm n.
    Lower3 {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        bound: i64,
    },
    /// Seeded random instances written into a directory.
    Corpus {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        #[arg(long, default_value_t = 2)]
        entry: i64,
        #[arg(long, default_value_t = 3)]
        bound: i64,
        #[arg(long)]
        three_block: bool,
    },
}

#[derive(Subcommand)]
enum Command {
    /// Graver basis of a matrix file or of an instance's assembled matrix.
    Graver {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "complete")]
        method: Method,
        /// Enumeration radius; defaults to the completion's max norm.
        #[arg(long)]
        radius: Option<i64>,
        #[arg(long, value_enum, default_value = "h")]
        kind: Kind,
        #[arg(long, default_value_t = 100_000)]
        element_budget: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Augmentation solver.
    Solve {
        file: PathBuf,
        #[arg(long)]
        xi: Option<i64>,
        #[arg(long)]
        guess_radius: Option<i64>,
        /// A known Graver norm bound; certifies runs with caps at least this.
        #[arg(long)]
        graver_bound: Option<i64>,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Exhaustive solver over the box clipped to `radius`.
    Brute {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        radius: i64,
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Bounded decomposition of a kernel vector of the instance's H₀.
    Decompose {
        file: PathBuf,
        /// Comma- or space-separated entries.
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
        /// Fixed cap; doubles from 1 when absent.
        #[arg(long)]
        xi: Option<i64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Steinitz rearrangement of a vectors file.
    Steinitz {
        file: PathBuf,
        #[arg(long)]
        greedy: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Partition of a vectors file into conformal subsets.
    Merge {
        file: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Certified kernel norms of the lower-bound families as CSV.
    Scaling {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_enum, default_value = "auto")]
        method: CertArg,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Instance generators.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<Option<String>> {
    match cli.command {
        Command::Graver {
            file,
            method,
            radius,
            kind,
            element_budget,
            out,
        } => {
            let kind = match kind {
                Kind::H => MatrixKind::H,
                Kind::H0 => MatrixKind::H0,
                Kind::E => MatrixKind::E,
                Kind::F => MatrixKind::F,
            };
            let m = load_matrix(&file, kind)?;
            let engine = match method {
                Method::Enum => GraverEngine::Enumeration,
                Method::Complete => GraverEngine::Completion,
            };
            let opts = GraverOptions {
                element_budget,
                ..GraverOptions::default()
            };
            emit(out.as_deref(), cmd_graver(&m, engine, radius, &opts)?)
        }
        Command::Solve {
            file,
            xi,
            guess_radius,
            graver_bound,
            max_steps,
            budget,
            out,
        } => {
            let inst = load_instance(&file)?;
            let caps = Caps {
                xi,
                guess_radius,
                graver_bound,
                max_steps,
                state_budget: budget,
                node_budget: budget,
            };
            emit(out.as_deref(), cmd_solve(&inst, &caps)?)
        }
        Command::Brute {
            file,
            radius,
            budget,
            out,
        } => emit(out.as_deref(), cmd_brute(&load_instance(&file)?, radius, budget)?),
        Command::Decompose {
            file,
            vector,
            xi,
            out,
        } => {
            let inst = load_instance(&file)?;
            let v = parse_vector_arg(&vector)?;
            emit(out.as_deref(), cmd_decompose(&inst, &v, xi)?)
        }
        Command::Steinitz { file, greedy, out } => {
            emit(out.as_deref(), cmd_steinitz(&load_vectors(&file)?, greedy)?)
        }
        Command::Merge { file, out } => emit(out.as_deref(), cmd_merge(&load_vectors(&file)?)?),
        Command::Scaling {
            family,
            t,
            n_list,
            method,
            out,
        } => {
            if n_list.iter().any(|&n| n < 2) || t < 2 {
                return Err(usage("n and t must be at least 2"));
            }
            let family = match family {
                FamilyArg::FourBlock => Family::FourBlock,
                FamilyArg::ThreeBlock => Family::ThreeBlock,
            };
            let method = match method {
                CertArg::Auto => ScalingMethod::Auto,
                CertArg::Exhaustive => ScalingMethod::Exhaustive,
                CertArg::Divisibility => ScalingMethod::Divisibility,
            };
            emit(out.as_deref(), cmd_scaling(family, t, &n_list, method)?)
        }
        Command::Gen { kind, out } => match kind {
            GenKind::Lower4 { t, n, bound } => {
                if t < 2 || n < 2 {
                    return Err(usage("t and n must be at least 2"));
                }
                let inst = family_instance(Family::FourBlock, t, n, bound)?;
                emit(out.as_deref(), format::write_instance(&inst))
            }
            GenKind::Lower3 { n, bound } => {
                if n < 2 {
                    return Err(usage("n must be at least 2"));
                }
                let inst = family_instance(Family::ThreeBlock, 1, n, bound)?;
                emit(out.as_deref(), format::write_instance(&inst))
            }
            GenKind::Corpus {
                seed,
                count,
                dir,
                max_n,
                entry,
                bound,
                three_block,
            } => {
                let params = CorpusParams {
                    n: (1, max_n.max(1)),
                    entry,
                    bound,
                    three_block,
                    ..CorpusParams::default()
                };
                let paths = write_corpus(&dir, seed, count, &params)?;
                Ok(Some(
                    paths
                        .iter()
                        .map(|p| format!("{}\n", p.display()))
                        .collect(),
                ))
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Only fails if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli) {
        Ok(Some(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
