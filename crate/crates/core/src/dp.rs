//! Dynamic programming over bricks.
//!
//! Each stage picks one candidate brick vector; the state is the running
//! sum of the candidates' top-row contributions `Σ D·zⁱ`. Costs are
//! separable over bricks, with an optional terminal cost on the final state.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::blockmat::{apply, BrickVector, FourBlockSpec, SmallMatrix};
use crate::error::{add, check_len, Error, Result};
use crate::lattice::for_each_box_solution;

/// One admissible choice for a brick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub z: Vec<i64>,
    /// Contribution to the top rows, usually `D·z`.
    pub contrib: Vec<i64>,
    pub cost: i64,
}

impl Candidate {
    pub fn is_zero(&self) -> bool {
        self.z.iter().all(|&v| v == 0)
    }
}

/// Keeps, for every contribution and zero/nonzero flag, the cheapest
/// candidate (lexicographically first on ties). Output is sorted by `z`.
pub fn prune_dominated(mut cands: Vec<Candidate>) -> Vec<Candidate> {
    cands.sort_by(|a, b| a.z.cmp(&b.z));
    let mut best: BTreeMap<(Vec<i64>, bool), usize> = BTreeMap::new();
    for (i, c) in cands.iter().enumerate() {
        let key = (c.contrib.clone(), c.is_zero());
        match best.get(&key) {
            Some(&j) if cands[j].cost <= c.cost => {}
            _ => {
                best.insert(key, i);
            }
        }
    }
    let keep: BTreeSet<usize> = best.into_values().collect();
    cands
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, c)| c)
        .collect()
}

/// What the final state must satisfy.
pub enum Terminal<'a> {
    /// The final state must equal this vector; no extra cost.
    Exact(Vec<i64>),
    /// Any final state is allowed at the given cost; `None` forbids it.
    Cost(&'a dyn Fn(&[i64]) -> Option<i64>),
}

/// A DP instance over `stages.len()` bricks.
pub struct BrickDp<'a> {
    pub stages: Vec<&'a [Candidate]>,
    pub terminal: Terminal<'a>,
    /// Dimension of the state vector.
    pub state_dim: usize,
    /// Require at least one nonzero choice overall (or `start_nonzero`).
    pub require_nonzero: bool,
    pub start_nonzero: bool,
    pub state_budget: u64,
}

/// Optimal choice per stage and its total cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpSolution {
    pub choice: Vec<usize>,
    pub cost: i64,
    pub states: u64,
}

/// Axis-aligned state box of one layer, flattened in mixed radix with the
/// nonzero flag as the fastest axis.
#[derive(Clone)]
struct Layer {
    lo: Vec<i64>,
    hi: Vec<i64>,
    stride: Vec<usize>,
    flags: usize,
    size: usize,
}

impl Layer {
    fn new(lo: Vec<i64>, hi: Vec<i64>, flags: usize) -> Option<Layer> {
        let mut stride = alloc::vec![0; lo.len()];
        let mut size = flags;
        for k in (0..lo.len()).rev() {
            if hi[k] < lo[k] {
                return None;
            }
            stride[k] = size;
            size = size.checked_mul(usize::try_from(hi[k] - lo[k] + 1).ok()?)?;
        }
        Some(Layer {
            lo,
            hi,
            stride,
            flags,
            size,
        })
    }

    fn index(&self, s: &[i64], flag: bool) -> Option<usize> {
        let mut ix = usize::from(flag && self.flags == 2);
        for k in 0..s.len() {
            if s[k] < self.lo[k] || s[k] > self.hi[k] {
                return None;
            }
            ix += (s[k] - self.lo[k]) as usize * self.stride[k];
        }
        Some(ix)
    }

    fn decode(&self, mut ix: usize, s: &mut [i64]) -> bool {
        let flag = self.flags == 2 && ix % 2 == 1;
        for k in 0..s.len() {
            s[k] = self.lo[k] + (ix / self.stride[k]) as i64;
            ix %= self.stride[k];
        }
        flag
    }
}

const INF: i64 = i64::MAX;

impl BrickDp<'_> {
    fn terminal_cost(&self, s: &[i64], flag: bool) -> Option<i64> {
        if self.require_nonzero && !flag {
            return None;
        }
        match &self.terminal {
            Terminal::Exact(t) => (s == t.as_slice()).then_some(0),
            Terminal::Cost(f) => f(s),
        }
    }

    fn layers(&self) -> Result<Option<Vec<Layer>>> {
        let n = self.stages.len();
        let k = self.state_dim;
        let flags = if self.require_nonzero { 2 } else { 1 };
        let mut lo = alloc::vec![alloc::vec![0i64; k]; n + 1];
        let mut hi = lo.clone();
        for (i, stage) in self.stages.iter().enumerate() {
            if stage.is_empty() {
                return Ok(None);
            }
            for d in 0..k {
                let min = stage.iter().map(|c| c.contrib[d]).min().expect("nonempty");
                let max = stage.iter().map(|c| c.contrib[d]).max().expect("nonempty");
                lo[i + 1][d] = add(lo[i][d], min)?;
                hi[i + 1][d] = add(hi[i][d], max)?;
            }
        }
        if let Terminal::Exact(t) = &self.terminal {
            // Backward reachability from the target.
            let (mut blo, mut bhi) = (t.clone(), t.clone());
            for i in (0..=n).rev() {
                for d in 0..k {
                    lo[i][d] = lo[i][d].max(blo[d]);
                    hi[i][d] = hi[i][d].min(bhi[d]);
                }
                if i > 0 {
                    for d in 0..k {
                        let stage = self.stages[i - 1];
                        let min = stage.iter().map(|c| c.contrib[d]).min().expect("nonempty");
                        let max = stage.iter().map(|c| c.contrib[d]).max().expect("nonempty");
                        blo[d] = lo[i][d] - max;
                        bhi[d] = hi[i][d] - min;
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(n + 1);
        let mut total = 0u64;
        for i in 0..=n {
            let Some(layer) = Layer::new(lo[i].clone(), hi[i].clone(), flags) else {
                if (0..k).any(|d| hi[i][d] < lo[i][d]) {
                    return Ok(None);
                }
                return Err(Error::BudgetExceeded {
                    what: "DP states",
                    limit: self.state_budget,
                });
            };
            total = total.saturating_add(layer.size as u64);
            if total > self.state_budget {
                return Err(Error::BudgetExceeded {
                    what: "DP states",
                    limit: self.state_budget,
                });
            }
            out.push(layer);
        }
        Ok(Some(out))
    }

    /// Minimum total cost with a lexicographically first optimal choice,
    /// or `None` when no choice sequence satisfies the terminal condition.
    pub fn solve(&self) -> Result<Option<DpSolution>> {
        let n = self.stages.len();
        let k = self.state_dim;
        let Some(layers) = self.layers()? else {
            return Ok(None);
        };
        let states: u64 = layers.iter().map(|l| l.size as u64).sum();
        let mut value: Vec<Vec<i64>> = Vec::with_capacity(n + 1);
        value.resize_with(n + 1, Vec::new);
        let mut s = alloc::vec![0i64; k];
        let last = &layers[n];
        value[n] = (0..last.size)
            .map(|ix| {
                let flag = last.decode(ix, &mut s);
                self.terminal_cost(&s, flag).unwrap_or(INF)
            })
            .collect();
        let mut t = alloc::vec![0i64; k];
        for i in (0..n).rev() {
            let (here, next) = (&layers[i], &layers[i + 1]);
            let mut vals = alloc::vec![INF; here.size];
            for (ix, slot) in vals.iter_mut().enumerate() {
                let flag = here.decode(ix, &mut s);
                for c in self.stages[i] {
                    for d in 0..k {
                        t[d] = s[d] + c.contrib[d];
                    }
                    let nflag = self.require_nonzero && (flag || !c.is_zero());
                    let Some(j) = next.index(&t, nflag) else {
                        continue;
                    };
                    let v = value[i + 1][j];
                    if v != INF {
                        let total = add(c.cost, v)?;
                        if total < *slot {
                            *slot = total;
                        }
                    }
                }
            }
            value[i] = vals;
        }
        let start_flag = self.require_nonzero && self.start_nonzero;
        let zero = alloc::vec![0i64; k];
        let cost = match layers[0].index(&zero, start_flag) {
            Some(ix) if value[0][ix] != INF => value[0][ix],
            _ => return Ok(None),
        };
        let mut st = zero;
        let mut flag = start_flag;
        let mut choice = Vec::with_capacity(n);
        let mut left = cost;
        for i in 0..n {
            let (kk, next, nflag) = self.stages[i]
                .iter()
                .enumerate()
                .find_map(|(kk, c)| {
                    let next: Vec<i64> = st.iter().zip(&c.contrib).map(|(a, b)| a + b).collect();
                    let nflag = self.require_nonzero && (flag || !c.is_zero());
                    let v = value[i + 1][layers[i + 1].index(&next, nflag)?];
                    (v != INF && c.cost.checked_add(v) == Some(left)).then_some((kk, next, nflag))
                })
                .expect("optimal value has a witness");
            left -= self.stages[i][kk].cost;
            choice.push(kk);
            st = next;
            flag = nflag;
        }
        Ok(Some(DpSolution {
            choice,
            cost,
            states,
        }))
    }
}

/// What [`kernel_search`] minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelCost {
    /// Stop at the first hit.
    Any,
    Norm1,
}

/// A nonzero `g` with `lo ≤ g ≤ hi` and `H·g = 0` (or `H₀·g = 0` when
/// `include_c` is false), minimizing `cost`. Brick 0 is scanned in
/// lexicographic order and ties keep the first hit.
pub fn kernel_search(
    spec: &FourBlockSpec,
    include_c: bool,
    lo: &BrickVector,
    hi: &BrickVector,
    cost: KernelCost,
    budget: u64,
) -> Result<Option<(BrickVector, i64)>> {
    check_len("kernel search box", spec.dim(), lo.dim())?;
    check_len("kernel search box", spec.dim(), hi.dim())?;
    let free = SmallMatrix::zeros(0, spec.t_b());
    let mut guesses = Vec::new();
    for_each_box_solution(&free, &[], lo.brick0(), hi.brick0(), budget, |v| {
        guesses.push(v.to_vec());
        true
    })?;
    let mut best: Option<(BrickVector, i64)> = None;
    for v in guesses {
        let rhs: Vec<i64> = apply(&spec.b, &v)?.iter().map(|x| -x).collect();
        let target: Vec<i64> = if include_c {
            apply(&spec.c, &v)?.iter().map(|x| -x).collect()
        } else {
            alloc::vec![0; spec.s_c()]
        };
        let mut memo: BTreeMap<(Vec<i64>, Vec<i64>), usize> = BTreeMap::new();
        let mut pools: Vec<Vec<Candidate>> = Vec::new();
        let mut ix = Vec::with_capacity(spec.n);
        for i in 1..=spec.n {
            let key = (lo.brick(i).to_vec(), hi.brick(i).to_vec());
            if let Some(&k) = memo.get(&key) {
                ix.push(k);
                continue;
            }
            let mut raw = Vec::new();
            let mut err = None;
            for_each_box_solution(&spec.a, &rhs, &key.0, &key.1, budget, |z| {
                match apply(&spec.d, z) {
                    Ok(contrib) => raw.push(Candidate {
                        z: z.to_vec(),
                        contrib,
                        cost: match cost {
                            KernelCost::Any => 0,
                            KernelCost::Norm1 => z.iter().map(|x| x.abs()).sum(),
                        },
                    }),
                    Err(e) => err = Some(e),
                }
                err.is_none()
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            memo.insert(key, pools.len());
            ix.push(pools.len());
            pools.push(prune_dominated(raw));
        }
        let dp = BrickDp {
            stages: ix.iter().map(|&k| pools[k].as_slice()).collect(),
            terminal: Terminal::Exact(target),
            state_dim: spec.s_c(),
            require_nonzero: true,
            start_nonzero: v.iter().any(|&x| x != 0),
            state_budget: budget,
        };
        let Some(sol) = dp.solve()? else {
            continue;
        };
        let total = match cost {
            KernelCost::Any => 0,
            KernelCost::Norm1 => v.iter().map(|x| x.abs()).sum::<i64>() + sol.cost,
        };
        if best.as_ref().is_none_or(|b| total < b.1) {
            let mut flat = v.clone();
            for (i, &k) in sol.choice.iter().enumerate() {
                flat.extend_from_slice(&pools[ix[i]][k].z);
            }
            best = Some((spec.bricks(flat)?, total));
            if cost == KernelCost::Any {
                break;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn cand(z: i64, cost: i64) -> Candidate {
        Candidate {
            z: vec![z],
            contrib: vec![z],
            cost,
        }
    }

    #[test]
    fn exact_terminal_and_nonzero_flag() {
        let stage = vec![cand(-1, 1), cand(0, 0), cand(1, 1)];
        let dp = BrickDp {
            stages: vec![&stage, &stage],
            terminal: Terminal::Exact(vec![0]),
            state_dim: 1,
            require_nonzero: false,
            start_nonzero: false,
            state_budget: 1000,
        };
        let s = dp.solve().unwrap().unwrap();
        assert_eq!((s.choice, s.cost), (vec![1, 1], 0));
        let dp = BrickDp {
            require_nonzero: true,
            ..dp
        };
        let s = dp.solve().unwrap().unwrap();
        assert_eq!((s.choice, s.cost), (vec![0, 2], 2));
    }

    #[test]
    fn pruning_keeps_cheapest() {
        let c = vec![
            Candidate { z: vec![1, 0], contrib: vec![1], cost: 3 },
            Candidate { z: vec![0, 1], contrib: vec![1], cost: 2 },
            Candidate { z: vec![0, 2], contrib: vec![1], cost: 2 },
        ];
        let p = prune_dominated(c);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].z, vec![0, 1]);
    }

    proptest! {
        #[test]
        fn matches_exhaustive(costs in proptest::collection::vec(-3i64..=3, 9), target in -3i64..=3) {
            let stages: Vec<Vec<Candidate>> = costs.chunks(3)
                .map(|c| (0..3).map(|k| cand(k as i64 - 1, c[k])).collect())
                .collect();
            let dp = BrickDp {
                stages: stages.iter().map(|s| s.as_slice()).collect(),
                terminal: Terminal::Exact(vec![target]),
                state_dim: 1,
                require_nonzero: false,
                start_nonzero: false,
                state_budget: 1000,
            };
            let mut best: Option<(i64, Vec<usize>)> = None;
            for a in 0..3 { for b in 0..3 { for c in 0..3 {
                let ch = vec![a, b, c];
                let s: i64 = ch.iter().map(|&k| k as i64 - 1).sum();
                if s == target {
                    let cost: i64 = ch.iter().enumerate().map(|(i, &k)| stages[i][k].cost).sum();
                    if best.as_ref().is_none_or(|(bc, _)| cost < *bc) { best = Some((cost, ch)); }
                }
            }}}
            let got = dp.solve().unwrap().map(|s| (s.cost, s.choice));
            prop_assert_eq!(got, best);
        }
    }

    #[test]
    fn kernel_search_finds_smallest() {
        let spec = FourBlockSpec::three_block(
            SmallMatrix::from_rows(&[[1, -1]]).unwrap(),
            SmallMatrix::from_rows(&[[1]]).unwrap(),
            SmallMatrix::from_rows(&[[1, 0]]).unwrap(),
            2,
        )
        .unwrap();
        let lo = spec.bricks(vec![-2; 5]).unwrap();
        let hi = spec.bricks(vec![2; 5]).unwrap();
        let (g, c) = kernel_search(&spec, false, &lo, &hi, KernelCost::Norm1, 1 << 20)
            .unwrap()
            .unwrap();
        let h0 = crate::blockmat::assemble(&spec, crate::blockmat::MatrixKind::H0).unwrap();
        assert_eq!(apply(&h0, g.flat()).unwrap(), vec![0, 0, 0]);
        assert_eq!(c, g.norm_1());
        // Exhaustive oracle over the same box.
        let mut best = i64::MAX;
        for_each_box_solution(&h0, &[0, 0, 0], &[-2; 5], &[2; 5], u64::MAX, |x| {
            let n: i64 = x.iter().map(|v| v.abs()).sum();
            if n > 0 {
                best = best.min(n);
            }
            true
        })
        .unwrap();
        assert_eq!(c, best);
    }
}
