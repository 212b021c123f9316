//! Exact solvers for block-structured integer programs.
//!
//! [`solve`] runs Graver-style augmentation: from a feasible point it looks
//! for the best step `ρ·g` over `ρ ∈ {1, 2, 4, …}`, guesses `g⁰ = v` within
//! a radius, and finds the rest of `g` brick by brick with [`crate::dp`].
//! Feasibility comes first by minimizing `‖b − Hx‖₁` the same way.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::blockmat::{
    apply, assemble, block_apply, Bound, BrickVector, Constraint, FourBlockSpec, IPInstance,
    MatrixKind, SmallMatrix,
};
use crate::dp::{prune_dominated, BrickDp, Candidate, Terminal};
use crate::error::{add, check_len, mul, Error, Result};
use crate::graver::{graver_complete, GraverOptions};
use crate::lattice::for_each_box_solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    BudgetExceeded,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub augmentation_steps: u64,
    pub dp_calls: u64,
    pub dp_states: u64,
    pub guesses: u64,
    pub enumeration_nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub solution: Option<BrickVector>,
    pub objective: Option<i64>,
    /// The step caps were large enough for the status to be exact.
    pub certified: bool,
    /// `‖b − Hx‖₁` at the end of the feasibility phase.
    pub phase_one_objective: Option<i64>,
    pub stats: SolveStats,
}

/// Step caps and budgets for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Bound on `‖gⁱ‖∞` for bricks `1..=n`. Defaults to the widest brick
    /// bound window when all bricks are bounded.
    pub xi: Option<i64>,
    /// Bound on `‖g⁰‖∞`. Defaults to the brick-0 window width, else to a
    /// radius extrapolated from measured Graver bases.
    pub guess_radius: Option<i64>,
    /// A known bound on the Graver ∞-norm of `H`, when one is available.
    pub graver_bound: Option<i64>,
    pub max_steps: u64,
    pub state_budget: u64,
    pub node_budget: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            xi: None,
            guess_radius: None,
            graver_bound: None,
            max_steps: 10_000,
            state_budget: 10_000_000,
            node_budget: 10_000_000,
        }
    }
}

/// One call of the step oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepQuery {
    pub base: BrickVector,
    pub rho: i64,
    pub xi: i64,
    /// Fixes `g⁰`; when absent every `v` with `‖v‖∞ ≤ xi` is tried.
    pub guess: Option<Vec<i64>>,
}

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

fn norm1(v: &[i64]) -> Result<i64> {
    v.iter().try_fold(0i64, |acc, x| add(acc, x.abs()))
}

fn dot(a: &[i64], b: &[i64]) -> Result<i64> {
    a.iter().zip(b).try_fold(0i64, |acc, (x, y)| add(acc, mul(*x, *y)?))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Goal {
    /// Minimize `w·x` keeping `Hx = b`.
    Linear,
    /// Minimize `‖b − Hx‖₁`.
    Residual,
}

struct Outcome {
    g: BrickVector,
    /// `w·g` for linear goals, the residual change otherwise.
    wg: i64,
    /// Objective change of the step `ρ·g`.
    change: i64,
}

struct Ctx<'a> {
    spec: FourBlockSpec,
    b_top: Vec<i64>,
    b_bricks: Vec<Vec<i64>>,
    lower: &'a [Bound],
    upper: &'a [Bound],
    w: &'a [i64],
    caps: Caps,
    stats: SolveStats,
}

impl<'a> Ctx<'a> {
    fn new(inst: &'a IPInstance, caps: Caps) -> Result<Self> {
        inst.validate()?;
        let spec = inst.constraint.as_spec();
        let s_c = spec.s_c();
        let b_top = inst.b[..s_c].to_vec();
        let b_bricks = inst.b[s_c..]
            .chunks(spec.s_a().max(1))
            .map(|c| c.to_vec())
            .collect::<Vec<_>>();
        let b_bricks = if spec.s_a() == 0 {
            vec![Vec::new(); spec.n]
        } else {
            b_bricks
        };
        Ok(Ctx {
            spec,
            b_top,
            b_bricks,
            lower: &inst.lower,
            upper: &inst.upper,
            w: &inst.w,
            caps,
            stats: SolveStats::default(),
        })
    }

    fn offset(&self, brick: usize) -> usize {
        if brick == 0 {
            0
        } else {
            self.spec.t_b() + (brick - 1) * self.spec.t_a()
        }
    }

    /// Per-coordinate step window `lo ≤ z ≤ hi` for `x + ρz` to respect the
    /// bounds, intersected with `[-cap, cap]`.
    fn window(&self, x: &BrickVector, brick: usize, rho: i64, cap: i64) -> (Vec<i64>, Vec<i64>) {
        let off = self.offset(brick);
        let xs = x.brick(brick);
        let mut lo = Vec::with_capacity(xs.len());
        let mut hi = Vec::with_capacity(xs.len());
        for (j, &v) in xs.iter().enumerate() {
            let l = match self.lower[off + j] {
                Bound::Finite(b) => ceil_div(b - v, rho).max(-cap),
                _ => -cap,
            };
            let u = match self.upper[off + j] {
                Bound::Finite(b) => floor_div(b - v, rho).min(cap),
                _ => cap,
            };
            lo.push(l);
            hi.push(u);
        }
        (lo, hi)
    }

    fn residual(&self, x: &BrickVector) -> Result<(Vec<i64>, Vec<Vec<i64>>)> {
        let p = block_apply(&self.spec, x)?;
        let top = self.b_top.iter().zip(&p.top).map(|(b, h)| b - h).collect();
        let bricks = self
            .b_bricks
            .iter()
            .zip(&p.per_brick)
            .map(|(b, h)| b.iter().zip(h).map(|(p, q)| p - q).collect())
            .collect();
        Ok((top, bricks))
    }

    fn goal_value(&self, x: &BrickVector, goal: Goal) -> Result<i64> {
        match goal {
            Goal::Linear => dot(self.w, x.flat()),
            Goal::Residual => {
                let (t, b) = self.residual(x)?;
                let mut s = norm1(&t)?;
                for r in &b {
                    s = add(s, norm1(r)?)?;
                }
                Ok(s)
            }
        }
    }

    /// Best step with `g⁰ = v` at step length `rho`.
    fn step(
        &mut self,
        x: &BrickVector,
        rho: i64,
        xi: i64,
        v: &[i64],
        goal: Goal,
    ) -> Result<Option<Outcome>> {
        let spec = &self.spec;
        let (lo0, hi0) = self.window(x, 0, rho, i64::MAX / 4);
        if v.iter().zip(lo0.iter().zip(&hi0)).any(|(a, (l, h))| a < l || a > h) {
            return Ok(None);
        }
        let bv = apply(&spec.b, v)?;
        let cv = apply(&spec.c, v)?;
        let neg_bv: Vec<i64> = bv.iter().map(|a| -a).collect();
        let (r_top, r_bricks) = match goal {
            Goal::Residual => self.residual(x)?,
            Goal::Linear => (Vec::new(), Vec::new()),
        };
        let t_a = spec.t_a();
        let no_rows = SmallMatrix::zeros(0, t_a);
        let mut memo: BTreeMap<(Vec<i64>, Vec<i64>, Vec<i64>), usize> = BTreeMap::new();
        let mut pools: Vec<Vec<Candidate>> = Vec::new();
        let mut stage_ix = Vec::with_capacity(spec.n);
        for i in 1..=spec.n {
            let (lo, hi) = self.window(x, i, rho, xi);
            let r = if goal == Goal::Residual {
                r_bricks[i - 1].clone()
            } else {
                Vec::new()
            };
            let key = (lo.clone(), hi.clone(), r.clone());
            if let Some(&k) = memo.get(&key) {
                stage_ix.push(k);
                continue;
            }
            let w_i = &self.w[self.offset(i)..self.offset(i) + t_a];
            let mut raw = Vec::new();
            let mut err = None;
            let (m, rhs) = match goal {
                Goal::Linear => (&spec.a, neg_bv.as_slice()),
                Goal::Residual => (&no_rows, &[][..]),
            };
            let nodes = for_each_box_solution(m, rhs, &lo, &hi, self.caps.node_budget, |z| {
                let built = (|| -> Result<Candidate> {
                    let contrib = apply(&spec.d, z)?;
                    let cost = match goal {
                        Goal::Linear => dot(w_i, z)?,
                        Goal::Residual => {
                            let az = apply(&spec.a, z)?;
                            let mut after = 0i64;
                            for ((ri, b), a) in r.iter().zip(&bv).zip(&az) {
                                after = add(after, (ri - mul(rho, add(*b, *a)?)?).abs())?;
                            }
                            after - norm1(&r)?
                        }
                    };
                    Ok(Candidate {
                        z: z.to_vec(),
                        contrib,
                        cost,
                    })
                })();
                match built {
                    Ok(c) => {
                        raw.push(c);
                        true
                    }
                    Err(e) => {
                        err = Some(e);
                        false
                    }
                }
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            self.stats.enumeration_nodes += nodes;
            memo.insert(key, pools.len());
            stage_ix.push(pools.len());
            pools.push(prune_dominated(raw));
        }
        let r_top_norm = if goal == Goal::Residual {
            norm1(&r_top)?
        } else {
            0
        };
        let top_cost = |s: &[i64]| -> Option<i64> {
            let mut after = 0i64;
            for ((r, c), sj) in r_top.iter().zip(&cv).zip(s) {
                let moved = rho.checked_mul(c.checked_add(*sj)?)?;
                after = after.checked_add(r.checked_sub(moved)?.abs())?;
            }
            after.checked_sub(r_top_norm)
        };
        let terminal = match goal {
            Goal::Linear => Terminal::Exact(cv.iter().map(|a| -a).collect()),
            Goal::Residual => Terminal::Cost(&top_cost),
        };
        let dp = BrickDp {
            stages: stage_ix.iter().map(|&k| pools[k].as_slice()).collect(),
            terminal,
            state_dim: spec.s_c(),
            require_nonzero: false,
            start_nonzero: false,
            state_budget: self.caps.state_budget,
        };
        let sol = dp.solve()?;
        self.stats.dp_calls += 1;
        let Some(sol) = sol else {
            return Ok(None);
        };
        self.stats.dp_states += sol.states;
        let mut flat = v.to_vec();
        for (i, &k) in sol.choice.iter().enumerate() {
            flat.extend_from_slice(&pools[stage_ix[i]][k].z);
        }
        let g = spec.bricks(flat)?;
        let (wg, change) = match goal {
            Goal::Linear => {
                let wg = add(dot(&self.w[..spec.t_b()], v)?, sol.cost)?;
                (wg, mul(rho, wg)?)
            }
            Goal::Residual => (sol.cost, sol.cost),
        };
        Ok(Some(Outcome { g, wg, change }))
    }

    /// All `v` in `[-radius, radius]^{t_B}` admissible for brick 0 at `rho`.
    fn guesses(&self, x: &BrickVector, rho: i64, radius: i64) -> Result<Vec<Vec<i64>>> {
        let (lo, hi) = self.window(x, 0, rho, radius);
        let m = SmallMatrix::zeros(0, self.spec.t_b());
        let mut out = Vec::new();
        for_each_box_solution(&m, &[], &lo, &hi, self.caps.node_budget, |v| {
            out.push(v.to_vec());
            true
        })?;
        Ok(out)
    }

    /// Largest step length worth trying and whether it is the generic cap.
    fn rho_max(&self, x: &BrickVector) -> (i64, bool) {
        let mut far = 0i64;
        let mut unbounded = false;
        for (j, &v) in x.flat().iter().enumerate() {
            for (b, up) in [(self.lower[j], false), (self.upper[j], true)] {
                match b.finite() {
                    Some(b) => far = far.max(if up { b - v } else { v - b }),
                    None => unbounded = true,
                }
            }
        }
        if unbounded {
            return (generic_cap(&self.spec), true);
        }
        let mut rho = 1i64;
        while rho * 2 <= far {
            rho *= 2;
        }
        (rho, false)
    }

    fn augment(
        &mut self,
        mut x: BrickVector,
        xi: i64,
        radius: i64,
        goal: Goal,
    ) -> Result<(BrickVector, bool)> {
        let mut value = self.goal_value(&x, goal)?;
        loop {
            if goal == Goal::Residual && value == 0 {
                return Ok((x, false));
            }
            let (rho_max, capped) = self.rho_max(&x);
            let mut best: Option<(i64, i64, BrickVector)> = None;
            let mut rho = 1i64;
            loop {
                for v in self.guesses(&x, rho, radius)? {
                    self.stats.guesses += 1;
                    if let Some(o) = self.step(&x, rho, xi, &v, goal)? {
                        if o.change < 0 && best.as_ref().is_none_or(|b| o.change < b.0) {
                            best = Some((o.change, rho, o.g));
                        }
                    }
                }
                if rho >= rho_max {
                    break;
                }
                rho *= 2;
            }
            let Some((change, rho, g)) = best else {
                return Ok((x, false));
            };
            if goal == Goal::Linear && capped && rho >= rho_max {
                return Ok((x, true));
            }
            let next = x.checked_add(&g.scale(rho)?)?;
            let next_value = self.goal_value(&next, goal)?;
            debug_assert_eq!(next_value, value + change);
            if next_value >= value {
                return Err(Error::Precondition("augmentation did not improve".into()));
            }
            x = next;
            value = next_value;
            self.stats.augmentation_steps += 1;
            if self.stats.augmentation_steps > self.caps.max_steps {
                return Err(Error::BudgetExceeded {
                    what: "augmentation steps",
                    limit: self.caps.max_steps,
                });
            }
        }
    }

    fn widths(&self) -> (Option<i64>, Option<i64>) {
        let t_b = self.spec.t_b();
        let width = |range: core::ops::Range<usize>| -> Option<i64> {
            range.into_iter().try_fold(0i64, |acc, j| {
                Some(acc.max(self.upper[j].finite()? - self.lower[j].finite()?))
            })
        };
        (width(0..t_b), width(t_b..self.spec.dim()))
    }
}

/// Step-length cap for unbounded variables, `(n·Δ)^{n+1}` clamped to
/// `[16, 2⁴⁰]` and rounded down to a power of two.
fn generic_cap(spec: &FourBlockSpec) -> i64 {
    let base = (spec.n as i64 * spec.delta()).max(2);
    let mut cap = 1i64;
    for _ in 0..=spec.n {
        cap = cap.saturating_mul(base);
    }
    let cap = cap.clamp(16, 1 << 40);
    1i64 << (63 - cap.leading_zeros())
}

fn clamp_zero(l: Bound, u: Bound) -> i64 {
    match (l.finite(), u.finite()) {
        (Some(l), _) if l > 0 => l,
        (_, Some(u)) if u < 0 => u,
        _ => 0,
    }
}

/// Ground truth by enumerating the box `[max(ℓ,−r), min(u,r)]`; the
/// lexicographically first optimum is returned.
pub fn brute_solve(inst: &IPInstance, radius: i64, node_budget: u64) -> Result<SolveResult> {
    inst.validate()?;
    let m = inst.constraint.matrix()?;
    let lo: Vec<i64> = inst
        .lower
        .iter()
        .map(|l| l.finite().map_or(-radius, |v| v.max(-radius)))
        .collect();
    let hi: Vec<i64> = inst
        .upper
        .iter()
        .map(|u| u.finite().map_or(radius, |v| v.min(radius)))
        .collect();
    let clipped = inst
        .lower
        .iter()
        .zip(&inst.upper)
        .any(|(l, u)| l.finite().is_none_or(|v| v < -radius) || u.finite().is_none_or(|v| v > radius));
    let mut best: Option<(i64, Vec<i64>)> = None;
    let mut err = None;
    let mut stats = SolveStats::default();
    let visited = for_each_box_solution(&m, &inst.b, &lo, &hi, node_budget, |x| {
        match inst.objective(x) {
            Ok(v) => {
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, x.to_vec()));
                }
                true
            }
            Err(e) => {
                err = Some(e);
                false
            }
        }
    });
    let visited = match visited {
        Ok(v) => v,
        Err(Error::BudgetExceeded { .. }) => {
            return Ok(SolveResult {
                status: SolveStatus::BudgetExceeded,
                solution: None,
                objective: None,
                certified: false,
                phase_one_objective: None,
                stats,
            })
        }
        Err(e) => return Err(e),
    };
    if let Some(e) = err {
        return Err(e);
    }
    stats.enumeration_nodes = visited;
    let spec = inst.constraint.as_spec();
    Ok(match best {
        Some((obj, x)) => SolveResult {
            status: SolveStatus::Optimal,
            solution: Some(spec.bricks(x)?),
            objective: Some(obj),
            certified: !clipped,
            phase_one_objective: Some(0),
            stats,
        },
        None => SolveResult {
            status: SolveStatus::Infeasible,
            solution: None,
            objective: None,
            certified: !clipped,
            phase_one_objective: None,
            stats,
        },
    })
}

/// The slack-augmented feasibility instance and its trivial start.
///
/// Every brick gains columns `(ȳ₊, ȳ₋, y₊, y₋)`: `ȳ` (length `s_D`) enters
/// the top rows through `D̃ = (D, I, −I, 0, 0)`, `y` (length `s_A`) enters
/// the brick rows through `Ã = (A, 0, 0, I, −I)`. Slacks are nonnegative and
/// cost 1 each; the original variables cost 0. In the start, `x` is the
/// point of the box closest to 0, brick 1's `ȳ` absorbs the top residual
/// and each `yⁱ` absorbs its brick residual.
pub fn phase_one(inst: &IPInstance) -> Result<(IPInstance, BrickVector)> {
    inst.validate()?;
    let spec = match &inst.constraint {
        Constraint::Block { spec, .. } => spec.clone(),
        Constraint::Explicit(_) => {
            return Err(Error::Precondition("phase one needs a block instance".into()))
        }
    };
    let (s_d, s_a, t_a, t_b, n) = (spec.s_c(), spec.s_a(), spec.t_a(), spec.t_b(), spec.n);
    let id = |k: usize, sign: i64| {
        let mut m = SmallMatrix::zeros(k, k);
        for i in 0..k {
            m.set(i, i, sign);
        }
        m
    };
    let a2 = spec
        .a
        .hstack(&SmallMatrix::zeros(s_a, 2 * s_d))?
        .hstack(&id(s_a, 1))?
        .hstack(&id(s_a, -1))?;
    let d2 = spec
        .d
        .hstack(&id(s_d, 1))?
        .hstack(&id(s_d, -1))?
        .hstack(&SmallMatrix::zeros(s_d, 2 * s_a))?;
    let aug = FourBlockSpec::new(a2, spec.b.clone(), spec.c.clone(), d2, n)?;
    let t2 = aug.t_a();
    let x0: Vec<i64> = inst
        .lower
        .iter()
        .zip(&inst.upper)
        .map(|(l, u)| clamp_zero(*l, *u))
        .collect();
    let xv = spec.bricks(x0)?;
    let p = block_apply(&spec, &xv)?;
    let mut start = aug.zero_vector();
    start.brick_mut(0).copy_from_slice(xv.brick0());
    let mut lower = inst.lower[..t_b].to_vec();
    let mut upper = inst.upper[..t_b].to_vec();
    let mut w = vec![0i64; t_b];
    for i in 1..=n {
        let off = t_b + (i - 1) * t_a;
        lower.extend_from_slice(&inst.lower[off..off + t_a]);
        upper.extend_from_slice(&inst.upper[off..off + t_a]);
        lower.extend(core::iter::repeat_n(Bound::Finite(0), t2 - t_a));
        upper.extend(core::iter::repeat_n(Bound::PosInf, t2 - t_a));
        w.extend(core::iter::repeat_n(0, t_a));
        w.extend(core::iter::repeat_n(1, t2 - t_a));
        let brick = start.brick_mut(i);
        brick[..t_a].copy_from_slice(xv.brick(i));
        if i == 1 {
            for r in 0..s_d {
                let res = inst.b[r] - p.top[r];
                brick[t_a + r] = res.max(0);
                brick[t_a + s_d + r] = (-res).max(0);
            }
        }
        for r in 0..s_a {
            let res = inst.b[s_d + (i - 1) * s_a + r] - p.per_brick[i - 1][r];
            brick[t_a + 2 * s_d + r] = res.max(0);
            brick[t_a + 2 * s_d + s_a + r] = (-res).max(0);
        }
    }
    let augmented = IPInstance::new(Constraint::block(aug), inst.b.clone(), lower, upper, w)?;
    Ok((augmented, start))
}

/// The original variables of a point of the [`phase_one`] instance.
pub fn phase_one_extract(inst: &IPInstance, augmented_point: &BrickVector) -> Result<BrickVector> {
    let spec = inst.constraint.as_spec();
    let t_a = spec.t_a();
    let mut flat = augmented_point.brick0().to_vec();
    for i in 1..=spec.n {
        flat.extend_from_slice(&augmented_point.brick(i)[..t_a]);
    }
    spec.bricks(flat)
}

/// Best step `g` with `x₀ + ρg` in bounds, `Hg = 0`, `‖gⁱ‖∞ ≤ xi` and
/// `g⁰ = v`, minimizing `w·g`. Without a guess, every `v` with
/// `‖v‖∞ ≤ xi` is tried; ties go to the lexicographically first `g`.
pub fn best_step_dp(inst: &IPInstance, q: &StepQuery) -> Result<Option<(BrickVector, i64)>> {
    if q.rho < 1 || q.rho.count_ones() != 1 {
        return Err(Error::Precondition("rho must be a power of two".into()));
    }
    if q.xi < 1 {
        return Err(Error::Precondition("xi must be at least 1".into()));
    }
    let mut ctx = Ctx::new(inst, Caps::default())?;
    check_len("step base", ctx.spec.dim(), q.base.dim())?;
    let guesses = match &q.guess {
        Some(v) => {
            check_len("guess", ctx.spec.t_b(), v.len())?;
            vec![v.clone()]
        }
        None => ctx.guesses(&q.base, q.rho, q.xi)?,
    };
    let mut best: Option<(BrickVector, i64)> = None;
    for v in guesses {
        if let Some(o) = ctx.step(&q.base, q.rho, q.xi, &v, Goal::Linear)? {
            if best.as_ref().is_none_or(|b| o.wg < b.1) {
                best = Some((o.g, o.wg));
            }
        }
    }
    Ok(best)
}

/// Guess radius extrapolated from Graver bases of `H` at `n ∈ {1, 2, 3}`:
/// the largest `‖g⁰‖∞ / n^{s_C}` scaled to `spec.n`.
pub fn estimate_guess_radius(spec: &FourBlockSpec, element_budget: usize) -> Option<i64> {
    let opts = GraverOptions {
        element_budget,
        ..GraverOptions::default()
    };
    let mut c = 0i64;
    let s_c = spec.s_c() as u32;
    for n in 1..=3usize {
        let h = assemble(&spec.with_n(n), MatrixKind::H).ok()?;
        let set = graver_complete(&h, &opts).ok()?;
        let g0 = set
            .elements
            .iter()
            .flat_map(|g| g[..spec.t_b()].iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0);
        let scale = (n as i64).pow(s_c);
        c = c.max((g0 + scale - 1) / scale);
    }
    Some((c * (spec.n as i64).checked_pow(s_c)?).max(1))
}

/// Minimizes `w·x` over `Hx = b`, `ℓ ≤ x ≤ u`.
pub fn solve(inst: &IPInstance, caps: &Caps) -> Result<SolveResult> {
    let mut ctx = Ctx::new(inst, *caps)?;
    let (w0, wb) = ctx.widths();
    let xi = caps
        .xi
        .or(wb)
        .or(caps.graver_bound)
        .unwrap_or(2)
        .max(1);
    let radius = match caps.guess_radius.or(w0) {
        Some(r) => r,
        None => caps
            .graver_bound
            .or_else(|| estimate_guess_radius(&ctx.spec, 20_000))
            .unwrap_or(2),
    }
    .max(0);
    let covers = |cap: i64, width: Option<i64>| {
        width.is_some_and(|w| cap >= w) || caps.graver_bound.is_some_and(|g| cap >= g)
    };
    let certified = covers(xi, wb) && covers(radius, w0);
    let x0: Vec<i64> = inst
        .lower
        .iter()
        .zip(&inst.upper)
        .map(|(l, u)| clamp_zero(*l, *u))
        .collect();
    let x0 = ctx.spec.bricks(x0)?;
    let run = (|| -> Result<SolveResult> {
        let (x, _) = ctx.augment(x0, xi, radius, Goal::Residual)?;
        let p1 = ctx.goal_value(&x, Goal::Residual)?;
        if p1 > 0 {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                solution: None,
                objective: None,
                certified,
                phase_one_objective: Some(p1),
                stats: ctx.stats,
            });
        }
        let (x, unbounded) = ctx.augment(x, xi, radius, Goal::Linear)?;
        let obj = dot(ctx.w, x.flat())?;
        Ok(SolveResult {
            status: if unbounded {
                SolveStatus::Unbounded
            } else {
                SolveStatus::Optimal
            },
            solution: Some(x),
            objective: Some(obj),
            certified,
            phase_one_objective: Some(0),
            stats: ctx.stats,
        })
    })();
    match run {
        Err(Error::BudgetExceeded { .. }) => Ok(SolveResult {
            status: SolveStatus::BudgetExceeded,
            solution: None,
            objective: None,
            certified: false,
            phase_one_objective: None,
            stats: ctx.stats,
        }),
        other => other,
    }
}

/// Augments from a given feasible point, skipping the feasibility phase.
pub fn solve_from(inst: &IPInstance, start: &BrickVector, caps: &Caps) -> Result<SolveResult> {
    if !inst.is_feasible(start.flat())? {
        return Err(Error::Precondition("start point is infeasible".into()));
    }
    let mut ctx = Ctx::new(inst, *caps)?;
    let (w0, wb) = ctx.widths();
    let xi = caps.xi.or(wb).or(caps.graver_bound).unwrap_or(2).max(1);
    let radius = caps.guess_radius.or(w0).or(caps.graver_bound).unwrap_or(2).max(0);
    let covers = |cap: i64, width: Option<i64>| {
        width.is_some_and(|w| cap >= w) || caps.graver_bound.is_some_and(|g| cap >= g)
    };
    let certified = covers(xi, wb) && covers(radius, w0);
    let (x, unbounded) = ctx.augment(start.clone(), xi, radius, Goal::Linear)?;
    let obj = dot(ctx.w, x.flat())?;
    Ok(SolveResult {
        status: if unbounded {
            SolveStatus::Unbounded
        } else {
            SolveStatus::Optimal
        },
        solution: Some(x),
        objective: Some(obj),
        certified,
        phase_one_objective: Some(0),
        stats: ctx.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_lower_3block, random_corpus, CorpusParams};
    use proptest::prelude::*;

    fn boxed(spec: FourBlockSpec, b: Vec<i64>, r: i64, w: Vec<i64>) -> IPInstance {
        let d = spec.dim();
        IPInstance::new(
            Constraint::block(spec),
            b,
            vec![Bound::Finite(-r); d],
            vec![Bound::Finite(r); d],
            w,
        )
        .unwrap()
    }

    /// Reverse-order exhaustive search used as an independent oracle.
    fn reverse_oracle(inst: &IPInstance, r: i64) -> Option<i64> {
        let m = inst.constraint.matrix().unwrap();
        let d = m.cols();
        let mut x = vec![0i64; d];
        let mut best = None;
        fn rec(k: usize, x: &mut Vec<i64>, r: i64, inst: &IPInstance, m: &SmallMatrix, best: &mut Option<i64>) {
            if k == 0 {
                if inst.within_bounds(x) && apply(m, x).unwrap() == inst.b {
                    let v = inst.objective(x).unwrap();
                    if best.is_none_or(|b| v < b) {
                        *best = Some(v);
                    }
                }
                return;
            }
            for v in -r..=r {
                x[k - 1] = v;
                rec(k - 1, x, r, inst, m, best);
            }
        }
        rec(d, &mut x, r, inst, &m, &mut best);
        best
    }

    #[test]
    fn brute_examples() {
        let (spec, _) = gen_lower_3block(2);
        let inst = boxed(spec.clone(), vec![0, 0, 0], 2, vec![1; 5]);
        let r = brute_solve(&inst, 2, u64::MAX).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, reverse_oracle(&inst, 2));
        let inst0 = boxed(spec.clone(), vec![0, 1, 1], 2, vec![0; 5]);
        let r = brute_solve(&inst0, 2, u64::MAX).unwrap();
        assert_eq!(r.objective, Some(0));
        let empty = IPInstance::new(
            Constraint::Explicit(SmallMatrix::from_rows(&[[2]]).unwrap()),
            vec![1],
            vec![Bound::Finite(-5)],
            vec![Bound::Finite(5)],
            vec![1],
        )
        .unwrap();
        assert_eq!(brute_solve(&empty, 5, u64::MAX).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn phase_one_reaches_zero() {
        let (spec, _) = gen_lower_3block(2);
        let inst = boxed(spec, vec![0, 1, 1], 2, vec![0; 5]);
        let (aug, start) = phase_one(&inst).unwrap();
        assert!(aug.is_feasible(start.flat()).unwrap());
        let caps = Caps {
            xi: Some(2),
            guess_radius: Some(2),
            ..Caps::default()
        };
        let r = solve_from(&aug, &start, &caps).unwrap();
        assert_eq!(r.objective, Some(0));
        let x = phase_one_extract(&inst, r.solution.as_ref().unwrap()).unwrap();
        assert!(inst.is_feasible(x.flat()).unwrap());
        assert_eq!(brute_solve(&inst, 2, u64::MAX).unwrap().status, SolveStatus::Optimal);
    }

    #[test]
    fn phase_one_zero_rhs_is_trivial() {
        let (spec, _) = gen_lower_3block(3);
        let d = spec.dim();
        let inst = boxed(spec, vec![0; 4], 1, vec![0; d]);
        let (aug, start) = phase_one(&inst).unwrap();
        assert!(start.is_zero());
        assert_eq!(aug.objective(start.flat()).unwrap(), 0);
    }

    #[test]
    fn infeasible_reports_positive_phase_one() {
        let spec = FourBlockSpec::three_block(
            SmallMatrix::from_rows(&[[2, 0]]).unwrap(),
            SmallMatrix::from_rows(&[[0]]).unwrap(),
            SmallMatrix::from_rows(&[[1, 1]]).unwrap(),
            2,
        )
        .unwrap();
        let inst = boxed(spec, vec![0, 1, 0], 2, vec![0; 5]);
        let r = solve(&inst, &Caps::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.phase_one_objective.unwrap() > 0);
        assert!(r.certified);
    }

    #[test]
    fn zero_objective_returns_feasible_point() {
        let (spec, _) = gen_lower_3block(2);
        let inst = boxed(spec, vec![0, 1, 1], 2, vec![0; 5]);
        let r = solve(&inst, &Caps::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(0));
        assert_eq!(r.stats.augmentation_steps > 0, true);
    }

    #[test]
    fn optimal_start_takes_no_steps() {
        let (spec, _) = gen_lower_3block(2);
        let inst = boxed(spec.clone(), vec![0, 0, 0], 2, vec![0; 5]);
        let r = solve_from(&inst, &spec.zero_vector(), &Caps::default()).unwrap();
        assert_eq!(r.stats.augmentation_steps, 0);
        assert!(r.solution.unwrap().is_zero());
    }

    #[test]
    fn single_brick_is_direct_enumeration() {
        let m = SmallMatrix::from_rows(&[[1, 1, -1]]).unwrap();
        let inst = IPInstance::new(
            Constraint::Explicit(m.clone()),
            vec![0],
            vec![Bound::Finite(-3); 3],
            vec![Bound::Finite(3); 3],
            vec![1, 2, -1],
        )
        .unwrap();
        let base = inst.constraint.as_spec().zero_vector();
        let q = StepQuery {
            base,
            rho: 1,
            xi: 2,
            guess: Some(vec![]),
        };
        let (g, delta) = best_step_dp(&inst, &q).unwrap().unwrap();
        let mut best = i64::MAX;
        for_each_box_solution(&m, &[0], &[-2; 3], &[2; 3], u64::MAX, |z| {
            best = best.min(inst.objective(z).unwrap());
            true
        })
        .unwrap();
        assert_eq!(delta, best);
        assert_eq!(apply(&m, g.flat()).unwrap(), vec![0]);
    }

    #[test]
    fn unbounded_is_detected() {
        let m = SmallMatrix::from_rows(&[[1, -1]]).unwrap();
        let inst = IPInstance::new(
            Constraint::Explicit(m),
            vec![0],
            vec![Bound::NegInf; 2],
            vec![Bound::PosInf; 2],
            vec![1, 0],
        )
        .unwrap();
        let r = solve(&inst, &Caps::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn step_matches_brute_force(seed in any::<u64>()) {
            let params = CorpusParams { n: (1, 3), t_a: (1, 2), t_b: (1, 1), s_a: (1, 1), s_c: (1, 1), entry: 2, bound: 2, three_block: true };
            let inst = random_corpus(seed, &params, 1).remove(0);
            let spec = inst.constraint.as_spec();
            let base = spec.bricks(inst.lower.iter().zip(&inst.upper).map(|(l, u)| clamp_zero(*l, *u)).collect()).unwrap();
            let q = StepQuery { base: base.clone(), rho: 1, xi: 2, guess: None };
            let got = best_step_dp(&inst, &q).unwrap().map(|(_, d)| d);
            // Brute force over all g with ‖g‖∞ ≤ 2 in the kernel and window.
            let h = assemble(&spec, MatrixKind::H).unwrap();
            let lo: Vec<i64> = base.flat().iter().zip(&inst.lower).map(|(x, l)| (l.finite().unwrap() - x).max(-2)).collect();
            let hi: Vec<i64> = base.flat().iter().zip(&inst.upper).map(|(x, u)| (u.finite().unwrap() - x).min(2)).collect();
            let mut best: Option<i64> = None;
            for_each_box_solution(&h, &vec![0; h.rows()], &lo, &hi, u64::MAX, |g| {
                let v = inst.objective(g).unwrap();
                if best.is_none_or(|b| v < b) { best = Some(v); }
                true
            }).unwrap();
            prop_assert_eq!(got, best);
        }

        #[test]
        fn solve_matches_brute(seed in any::<u64>()) {
            let params = CorpusParams { n: (1, 3), t_a: (1, 2), t_b: (1, 2), s_a: (1, 2), s_c: (1, 2), entry: 2, bound: 2, three_block: false };
            let inst = random_corpus(seed, &params, 1).remove(0);
            let r = solve(&inst, &Caps::default()).unwrap();
            let b = brute_solve(&inst, 2, u64::MAX).unwrap();
            prop_assert!(r.certified);
            prop_assert_eq!(r.status, b.status);
            prop_assert_eq!(r.objective, b.objective);
            if let Some(x) = &r.solution {
                prop_assert!(inst.is_feasible(x.flat()).unwrap());
            }
        }
    }
}
