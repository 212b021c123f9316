//! Partitions of a vector sequence into small subsets whose sums conform to
//! the total.
//!
//! A subset `T` of a sequence with total `x` is conformal when
//! `Σ_{i∈T} x_i ⊑ x`; removing it keeps the residual in the orthant of `x`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::graver::conf;
use crate::steinitz::{prefix_deviation, steinitz_permute_with, SteinitzMethod};

/// A partition of `0..m` into conformal subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPartition {
    /// Index sets, each sorted ascending; together they cover `0..m`.
    pub subsets: Vec<Vec<usize>>,
    pub zeta: i64,
    pub kappa: usize,
    /// Smallest `c ≥ 1` with `max |T_j| ≤ (cζ)^{κ²}`, when `ζ ≥ 1`.
    pub constant_c: Option<u64>,
    /// Extractions where the threshold search produced a non-conformal
    /// window and the remainder was taken instead.
    pub claim_fallbacks: usize,
    /// Extractions performed on an ordering whose Steinitz deviation could
    /// not be certified.
    pub uncertified_orders: usize,
}

impl SignPartition {
    pub fn max_size(&self) -> usize {
        self.subsets.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    /// Disjoint cover of `0..vectors.len()` and conformality of every
    /// subset sum.
    pub fn check(&self, vectors: &[Vec<i64>]) -> Result<()> {
        let m = vectors.len();
        let mut seen = vec![false; m];
        for s in &self.subsets {
            for &i in s {
                if i >= m || seen[i] {
                    return Err(Error::Precondition("subsets are not a partition".into()));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Precondition("subsets do not cover".into()));
        }
        let x = sum_of(vectors, 0..m, self.kappa);
        for s in &self.subsets {
            if !conf(&sum_of(vectors, s.iter().copied(), self.kappa), &x) {
                return Err(Error::Precondition("subset sum does not conform".into()));
            }
        }
        Ok(())
    }
}

fn sum_of(vectors: &[Vec<i64>], idx: impl IntoIterator<Item = usize>, kappa: usize) -> Vec<i64> {
    let mut s = vec![0i64; kappa];
    for i in idx {
        for (a, b) in s.iter_mut().zip(&vectors[i]) {
            *a += b;
        }
    }
    s
}

fn measure_c(max_size: usize, zeta: i64, kappa: usize) -> Option<u64> {
    if zeta < 1 {
        return None;
    }
    let e = (kappa * kappa) as u32;
    (1u64..).find(|&c| {
        (c as u128)
            .saturating_mul(zeta as u128)
            .saturating_pow(e)
            >= max_size as u128
    })
}

/// Partitions integers into subsets of size at most `6ζ+2` whose sums
/// share the sign of the total and do not exceed it in absolute value.
pub fn merge_1d(ints: &[i64]) -> Result<SignPartition> {
    if ints.is_empty() {
        return Err(Error::Precondition("empty sequence".into()));
    }
    let sign = if ints.iter().sum::<i64>() < 0 { -1 } else { 1 };
    let vals: Vec<i64> = ints.iter().map(|v| v * sign).collect();
    let zeta = vals.iter().map(|v| v.abs()).max().unwrap_or(0);
    let cap = (6 * zeta + 2) as usize;
    let head = (3 * zeta + 2) as usize;
    let mut remaining: Vec<usize> = (0..vals.len()).collect();
    let mut residual: i64 = vals.iter().sum();
    let mut subsets = Vec::new();
    let mut uncertified = 0;
    while remaining.len() > cap {
        let seq: Vec<Vec<i64>> = remaining.iter().map(|&i| vec![vals[i]]).collect();
        let r = steinitz_permute_with(&seq, SteinitzMethod::GreedyFirst)?;
        if !r.within_bound() {
            uncertified += 1;
        }
        let ord: Vec<usize> = r.permutation.iter().map(|&p| remaining[p]).collect();
        let m = ord.len() as i64;
        let take: Vec<usize> = if (3 * zeta + 1) * residual > zeta * m {
            ord[..head].to_vec()
        } else {
            let mut seen: BTreeMap<i64, usize> = BTreeMap::new();
            let mut s = 0;
            let mut found = None;
            for (l, &i) in ord[..head].iter().enumerate() {
                s += vals[i];
                if let Some(&l1) = seen.get(&s) {
                    found = Some((l1, l + 1));
                    break;
                }
                seen.insert(s, l + 1);
            }
            let (a, b) = found
                .ok_or_else(|| Error::Precondition("no prefix collision in the head".into()))?;
            ord[a..b].to_vec()
        };
        let s: i64 = take.iter().map(|&i| vals[i]).sum();
        if s < 0 || s > residual {
            return Err(Error::Precondition("extracted subset is not conformal".into()));
        }
        residual -= s;
        remaining.retain(|i| !take.contains(i));
        let mut t = take;
        t.sort_unstable();
        subsets.push(t);
    }
    remaining.sort_unstable();
    subsets.push(remaining);
    let max = subsets.iter().map(|s| s.len()).max().unwrap_or(0);
    Ok(SignPartition {
        subsets,
        zeta,
        kappa: 1,
        constant_c: measure_c(max, zeta, 1),
        claim_fallbacks: 0,
        uncertified_orders: uncertified,
    })
}

/// Threshold search over a Steinitz-ordered sequence with nonnegative
/// total `x`. Coordinates are visited in ascending order of `x`. Returns a
/// window `(a, b]` of prefix positions.
struct ClaimSearch<'a> {
    prefix: &'a [Vec<i64>],
    x: &'a [i64],
    /// Coordinates sorted ascending by `x`, ties by index.
    coords: Vec<usize>,
    m: u128,
    kappa: u128,
    /// Steinitz deviation bound `κζ`.
    dev: u128,
    /// `6·dev + 1`.
    base: u128,
}

impl ClaimSearch<'_> {
    fn xs(&self, j: usize) -> u128 {
        self.x[self.coords[j - 1]] as u128
    }

    /// Smallest `μ ≥ 1` with `μ·x^j > 2·dev·m`, or `None` if `x^j = 0`.
    fn mu(&self, j: usize) -> Option<u128> {
        let xj = self.xs(j);
        if xj == 0 {
            return None;
        }
        Some(self.dev.saturating_mul(2).saturating_mul(self.m) / xj + 1)
    }

    /// First pair of positions in `ls` whose prefixes agree on the first
    /// `depth` sorted coordinates.
    fn collide(&self, ls: impl Iterator<Item = u128>, depth: usize) -> Option<(usize, usize)> {
        let mut seen: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        for l in ls {
            let l = l as usize;
            let key: Vec<i64> = self.coords[..depth]
                .iter()
                .map(|&c| self.prefix[l][c])
                .collect();
            if let Some(&a) = seen.get(&key) {
                return Some((a, l));
            }
            seen.insert(key, l);
        }
        None
    }

    fn window(&self) -> (usize, usize) {
        let whole = (0, self.m as usize);
        let kappa = self.kappa as usize;
        let k = kappa;
        let top = self
            .base
            .saturating_pow(k as u32)
            .saturating_add(self.kappa);
        if top.saturating_mul(self.xs(k)) <= self.dev.saturating_mul(2).saturating_mul(self.m) {
            if top > self.m {
                return whole;
            }
            return self.collide(self.kappa..=top, k).unwrap_or(whole);
        }
        let mut j = k;
        let mut mu = match self.mu(k) {
            Some(mu) => mu,
            None => return whole,
        };
        while j >= 2 {
            let reach = self.base.saturating_pow(j as u32 - 1).saturating_mul(mu);
            let lhs = (mu - 1).saturating_mul(self.xs(j));
            let rhs = self.kappa.saturating_add(reach).saturating_mul(self.xs(j - 1));
            if self.xs(j - 1) == 0 || lhs > rhs {
                let last = self.kappa.saturating_add(reach);
                if last > self.m {
                    return whole;
                }
                let steps = self.base.saturating_pow(j as u32 - 1);
                let ls = (0..=steps).map(|s| self.kappa + s * mu);
                return self.collide(ls, j - 1).unwrap_or(whole);
            }
            mu = match self.mu(j - 1) {
                Some(mu) => mu,
                None => return whole,
            };
            j -= 1;
        }
        if self.m <= mu.saturating_mul(2).saturating_add(self.kappa) {
            whole
        } else {
            (0, (mu + self.kappa) as usize)
        }
    }
}

fn window_conforms(prefix: &[Vec<i64>], a: usize, b: usize, x: &[i64]) -> bool {
    prefix[b]
        .iter()
        .zip(&prefix[a])
        .zip(x)
        .all(|((pb, pa), xj)| {
            let s = pb - pa;
            0 <= s && s <= *xj
        })
}

/// Partitions vectors into conformal subsets by repeated extraction.
///
/// After orthant normalization the sequence is Steinitz-ordered and the
/// threshold search over ascending coordinates yields a conformal window;
/// the shortest conformal window no longer than it is extracted.
pub fn merge_kd(vectors: &[Vec<i64>]) -> Result<SignPartition> {
    let kappa = vectors
        .first()
        .map(|v| v.len())
        .ok_or_else(|| Error::Precondition("empty sequence".into()))?;
    for v in vectors {
        check_len("merge vector", kappa, v.len())?;
    }
    let total = sum_of(vectors, 0..vectors.len(), kappa);
    let flip: Vec<i64> = total.iter().map(|&t| if t < 0 { -1 } else { 1 }).collect();
    let vals: Vec<Vec<i64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&flip).map(|(a, f)| a * f).collect())
        .collect();
    let zeta = vals
        .iter()
        .flat_map(|v| v.iter().map(|a| a.abs()))
        .max()
        .unwrap_or(0);
    let dev = (kappa as u128) * (zeta as u128);
    let mut remaining: Vec<usize> = (0..vals.len()).collect();
    let mut subsets = Vec::new();
    let (mut fallbacks, mut uncertified) = (0, 0);
    while !remaining.is_empty() {
        let x = sum_of(&vals, remaining.iter().copied(), kappa);
        let seq: Vec<Vec<i64>> = remaining.iter().map(|&i| vals[i].clone()).collect();
        let ident: Vec<usize> = (0..seq.len()).collect();
        let bound = crate::rational::Ratio::from_int((kappa as i64) * zeta);
        let order: Vec<usize> = if prefix_deviation(&seq, &ident)? <= bound {
            ident
        } else {
            match steinitz_permute_with(&seq, SteinitzMethod::GreedyFirst) {
                Ok(r) => r.permutation,
                Err(Error::Overflow) => {
                    uncertified += 1;
                    ident
                }
                Err(e) => return Err(e),
            }
        };
        let ord: Vec<usize> = order.iter().map(|&p| remaining[p]).collect();
        let mut prefix = vec![vec![0i64; kappa]];
        for &i in &ord {
            let mut p = prefix.last().expect("nonempty").clone();
            for (a, b) in p.iter_mut().zip(&vals[i]) {
                *a += b;
            }
            prefix.push(p);
        }
        let mut coords: Vec<usize> = (0..kappa).collect();
        coords.sort_by_key(|&c| (x[c], c));
        let search = ClaimSearch {
            prefix: &prefix,
            x: &x,
            coords,
            m: ord.len() as u128,
            kappa: kappa as u128,
            dev,
            base: dev.saturating_mul(6).saturating_add(1),
        };
        let (mut a, mut b) = search.window();
        if !window_conforms(&prefix, a, b, &x) {
            fallbacks += 1;
            (a, b) = (0, ord.len());
        }
        'shorter: for len in 1..b - a {
            for s in 0..=ord.len() - len {
                if window_conforms(&prefix, s, s + len, &x) {
                    (a, b) = (s, s + len);
                    break 'shorter;
                }
            }
        }
        let mut take: Vec<usize> = ord[a..b].to_vec();
        remaining.retain(|i| !take.contains(i));
        take.sort_unstable();
        subsets.push(take);
    }
    let max = subsets.iter().map(|s| s.len()).max().unwrap_or(0);
    Ok(SignPartition {
        subsets,
        zeta,
        kappa,
        constant_c: measure_c(max, zeta, kappa),
        claim_fallbacks: fallbacks,
        uncertified_orders: uncertified,
    })
}
