//! Command implementations behind the `blockgraver` binary.

pub mod format;

use std::fs;
use std::path::{Path, PathBuf};

use blockgraver::instances::{
    certify_divisibility, certify_min_norm, conformal_divisor, gen_lower_3block, gen_lower_4block,
    random_corpus, CertMethod, CorpusParams,
};
use blockgraver::merging::{merge_1d, merge_kd};
use blockgraver::solver::{brute_solve, solve, Caps, SolveResult, SolveStatus};
use blockgraver::steinitz::{prefix_deviation, steinitz_permute_with, SteinitzMethod};
use blockgraver::structure::{decompose_bounded, decompose_bounded_auto, DEFAULT_BUDGET};
use blockgraver::{
    apply, assemble, graver_complete, graver_enumerate, in_kernel_h0, Bound, Constraint,
    Error as CoreError, GraverOptions, GraverSet, IPInstance, MatrixKind, SmallMatrix,
};
use rayon::prelude::*;
use thiserror::Error;

use format::{join, parse_instance, parse_list, parse_matrix, parse_vectors, ParseError, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{0}")]
    Core(CoreError),
    #[error("{0}")]
    Usage(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::BudgetExceeded { .. } | CoreError::CompletionBudget(_) => {
                CliError::Budget(e.to_string())
            }
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    /// 0 ok, 1 invariant violation or other failure, 2 budget, 3 parse.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Budget(_) => 2,
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Usage(_) => 3,
            CliError::Invariant(_) | CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_at<T>(path: &Path, r: std::result::Result<T, ParseError>) -> CliResult<T> {
    r.map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_instance(path: &Path) -> CliResult<IPInstance> {
    parse_at(path, parse_instance(&read(path)?))
}

/// Writes `text` to `out`, or returns it for stdout.
pub fn emit(out: Option<&Path>, text: String) -> CliResult<Option<String>> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

/// Fails with an invariant error when any check in the report failed.
fn finish(report: Report) -> CliResult<String> {
    if report.failed().is_empty() {
        Ok(report.render())
    } else {
        Err(CliError::Invariant(format!(
            "{}\n{}",
            report.failed().join(", "),
            report.render()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraverEngine {
    Enumeration,
    Completion,
}

/// Loads a matrix document, or an instance document assembled as `kind`.
pub fn load_matrix(path: &Path, kind: MatrixKind) -> CliResult<SmallMatrix> {
    let text = read(path)?;
    if text.starts_with("# blockgraver matrix") {
        return parse_at(path, parse_matrix(&text));
    }
    let inst = parse_at(path, parse_instance(&text))?;
    Ok(match &inst.constraint {
        Constraint::Explicit(m) => m.clone(),
        Constraint::Block { spec, .. } => assemble(spec, kind)?,
    })
}

pub fn graver_report(set: &GraverSet) -> Report {
    let mut r = Report::new("basis");
    r.line(
        "method",
        match set.method {
            blockgraver::GraverMethod::Enumeration { radius } => format!("enumeration {radius}"),
            blockgraver::GraverMethod::Completion => "completion".into(),
        },
    );
    r.line("count", set.len());
    r.line("max_norm", set.max_norm());
    r.line("certified_complete", set.certified_complete);
    for g in &set.elements {
        r.line("g", join(g));
    }
    let kernel = set
        .elements
        .iter()
        .all(|g| apply(&set.matrix, g).is_ok_and(|p| p.iter().all(|&v| v == 0)));
    r.check("kernel", kernel);
    r.check("minimal", set.check_invariants().is_ok());
    r
}

pub fn cmd_graver(
    m: &SmallMatrix,
    engine: GraverEngine,
    radius: Option<i64>,
    opts: &GraverOptions,
) -> CliResult<String> {
    let set = match engine {
        GraverEngine::Completion => graver_complete(m, opts)?,
        GraverEngine::Enumeration => {
            let radius = match radius {
                Some(r) => r,
                None => graver_complete(m, opts)?.max_norm().max(1),
            };
            graver_enumerate(m, radius, opts)?
        }
    };
    finish(graver_report(&set))
}

fn result_report(inst: &IPInstance, r: &SolveResult) -> Report {
    let mut rep = Report::new("result");
    rep.line(
        "status",
        match r.status {
            SolveStatus::Optimal if !r.certified => "heuristic",
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::BudgetExceeded => "budget_exceeded",
        },
    );
    rep.line("certified", r.certified);
    if let Some(o) = r.objective {
        rep.line("objective", o);
    }
    if let Some(p) = r.phase_one_objective {
        rep.line("phase_one_objective", p);
    }
    if let Some(x) = &r.solution {
        rep.line("x", join(x.flat()));
    }
    let s = &r.stats;
    rep.line(
        "stats",
        format!(
            "steps={} dp_calls={} dp_states={} guesses={} nodes={}",
            s.augmentation_steps, s.dp_calls, s.dp_states, s.guesses, s.enumeration_nodes
        ),
    );
    if let Some(x) = &r.solution {
        let hx_ok = inst.is_feasible(x.flat()).unwrap_or(false);
        rep.check("feasible", hx_ok);
        rep.check("bounds", inst.within_bounds(x.flat()));
        rep.check("objective", inst.objective(x.flat()).ok() == r.objective);
    }
    rep
}

pub fn cmd_solve(inst: &IPInstance, caps: &Caps) -> CliResult<String> {
    let r = solve(inst, caps)?;
    let code = r.status;
    let text = finish(result_report(inst, &r))?;
    if code == SolveStatus::BudgetExceeded {
        return Err(CliError::Budget(text));
    }
    Ok(text)
}

pub fn cmd_brute(inst: &IPInstance, radius: i64, budget: u64) -> CliResult<String> {
    let r = brute_solve(inst, radius, budget)?;
    if r.status == SolveStatus::BudgetExceeded {
        return Err(CliError::Budget("enumeration nodes".into()));
    }
    finish(result_report(inst, &r))
}

pub fn cmd_decompose(inst: &IPInstance, vector: &[i64], xi: Option<i64>) -> CliResult<String> {
    let spec = inst.constraint.as_spec();
    let g = spec.bricks(vector.to_vec())?;
    let d = match xi {
        Some(xi) => decompose_bounded(&g, &spec, xi, DEFAULT_BUDGET)?,
        None => decompose_bounded_auto(&g, &spec, 1 << 20, DEFAULT_BUDGET)?,
    };
    let mut r = Report::new("decomposition");
    r.line("xi", d.xi);
    r.line("count", d.summands.len());
    r.line("max_norm", d.max_norm());
    for e in &d.summands {
        r.line("e", join(e.flat()));
    }
    r.check("sum_kernel_conformal", d.check(&spec, &g).is_ok());
    r.check(
        "kernel",
        d.summands.iter().all(|e| in_kernel_h0(&spec, e).unwrap_or(false)),
    );
    finish(r)
}

pub fn cmd_steinitz(vectors: &[Vec<i64>], greedy: bool) -> CliResult<String> {
    let method = if greedy {
        SteinitzMethod::GreedyFirst
    } else {
        SteinitzMethod::Exact
    };
    let res = steinitz_permute_with(vectors, method)?;
    let mut r = Report::new("rearrangement");
    r.line("kappa", res.kappa);
    r.line("zeta", res.zeta);
    r.line("permutation", join(&res.permutation));
    r.line("deviation", res.achieved_bound);
    let recomputed = prefix_deviation(vectors, &res.permutation)?;
    r.check("deviation", recomputed == res.achieved_bound);
    r.check("bound", res.within_bound());
    finish(r)
}

pub fn cmd_merge(vectors: &[Vec<i64>]) -> CliResult<String> {
    let part = if vectors[0].len() == 1 {
        merge_1d(&vectors.iter().map(|v| v[0]).collect::<Vec<_>>())?
    } else {
        merge_kd(vectors)?
    };
    let mut r = Report::new("partition");
    r.line("kappa", part.kappa);
    r.line("zeta", part.zeta);
    r.line("count", part.subsets.len());
    r.line("max_size", part.max_size());
    if let Some(c) = part.constant_c {
        r.line("constant_c", c);
    }
    r.line("claim_fallbacks", part.claim_fallbacks);
    for s in &part.subsets {
        r.line("subset", join(s));
    }
    r.check("conformal", part.check(vectors).is_ok());
    if part.kappa == 1 {
        r.check("size", part.max_size() as i64 <= 6 * part.zeta + 2);
    }
    finish(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    FourBlock,
    ThreeBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingMethod {
    Auto,
    Exhaustive,
    Divisibility,
}

/// One CSV row per `n`: `family,t,n,norm,method`. Rows are computed in
/// parallel and emitted in input order.
pub fn cmd_scaling(
    family: Family,
    t: usize,
    ns: &[usize],
    method: ScalingMethod,
) -> CliResult<String> {
    let rows: Vec<CliResult<String>> = ns
        .par_iter()
        .map(|&n| match family {
            Family::ThreeBlock => {
                let (spec, w) = gen_lower_3block(n);
                if conformal_divisor(&spec, &w, DEFAULT_BUDGET)?.is_some() {
                    return Err(CliError::Invariant(format!("n={n}: witness not minimal")));
                }
                Ok(format!("three_block,1,{n},{},witness_minimal", w.norm_inf()))
            }
            Family::FourBlock => {
                let exhaustive = match method {
                    ScalingMethod::Exhaustive => true,
                    ScalingMethod::Divisibility => false,
                    ScalingMethod::Auto => t == 2,
                };
                let cert = if exhaustive {
                    let target = (n as i64)
                        .checked_pow(t as u32 - 1)
                        .ok_or(CoreError::Overflow)?;
                    let spec = gen_lower_4block(t, n)?;
                    match certify_min_norm(&spec, target, DEFAULT_BUDGET) {
                        Err(CoreError::CounterexampleFound(v)) => {
                            return Err(CliError::Invariant(format!(
                                "t={t} n={n}: kernel vector {v:?} below {target}"
                            )))
                        }
                        other => other?,
                    }
                } else {
                    certify_divisibility(t, n)?
                };
                if cert.witness.is_none() {
                    return Err(CliError::Invariant(format!("t={t} n={n}: no witness")));
                }
                let m = match cert.method {
                    CertMethod::Exhaustive => "exhaustive",
                    CertMethod::Divisibility => "divisibility",
                };
                Ok(format!("four_block,{t},{n},{},{m}", cert.min_norm_verified))
            }
        })
        .collect();
    let mut out = String::from("family,t,n,norm,method\n");
    for r in rows {
        out.push_str(&r?);
        out.push('\n');
    }
    Ok(out)
}

/// Instance document for a lower-bound family: `b = 0`, bounds
/// `[-bound, bound]`, `w = 0`.
pub fn family_instance(family: Family, t: usize, n: usize, bound: i64) -> CliResult<IPInstance> {
    let (spec, three) = match family {
        Family::FourBlock => (gen_lower_4block(t, n)?, false),
        Family::ThreeBlock => (gen_lower_3block(n).0, true),
    };
    let d = spec.dim();
    let rows = spec.rows();
    Ok(IPInstance::new(
        Constraint::Block {
            spec,
            three_block: three,
        },
        vec![0; rows],
        vec![Bound::Finite(-bound); d],
        vec![Bound::Finite(bound); d],
        vec![0; d],
    )?)
}

/// Writes `corpus-NNN.txt` files into `dir`; returns the paths.
pub fn write_corpus(
    dir: &Path,
    seed: u64,
    count: usize,
    params: &CorpusParams,
) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    random_corpus(seed, params, count)
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let p = dir.join(format!("corpus-{i:03}.txt"));
            emit(Some(&p), format::write_instance(inst))?;
            Ok(p)
        })
        .collect()
}

pub fn parse_vector_arg(text: &str) -> CliResult<Vec<i64>> {
    parse_list(text).map_err(|source| CliError::Parse {
        path: "<argument>".into(),
        source,
    })
}

pub fn load_vectors(path: &Path) -> CliResult<Vec<Vec<i64>>> {
    parse_at(path, parse_vectors(&read(path)?))
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
