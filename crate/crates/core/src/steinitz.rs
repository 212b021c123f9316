//! Steinitz rearrangement and prefix-sum collisions.
//!
//! Given `x_1..x_m ∈ Zᵏ` with `‖x_i‖∞ ≤ ζ` summing to `x`, the rearrangement
//! keeps every prefix within `κζ` of `((ℓ−κ)/m)·x`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::rational::Ratio;

/// Output of [`steinitz_permute`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RearrangementResult {
    /// `permutation[ℓ]` is the input index placed at position `ℓ`.
    pub permutation: Vec<usize>,
    /// `max_ℓ ‖Σ_{i≤ℓ} x_{π(i)} − ((ℓ−κ)/m)·x‖∞` over `ℓ = 1..=m`.
    pub achieved_bound: Ratio,
    pub kappa: usize,
    pub zeta: i64,
}

impl RearrangementResult {
    /// Whether the achieved deviation is at most `κζ`.
    pub fn within_bound(&self) -> bool {
        self.achieved_bound <= Ratio::from_int(self.kappa as i64 * self.zeta)
    }
}

/// Ordering strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SteinitzMethod {
    /// The fractional-certificate construction; always within `κζ`.
    #[default]
    Exact,
    /// Greedy nearest-to-target choice, replaced by the exact construction
    /// whenever its post-hoc check fails.
    GreedyFirst,
}

fn dims(vectors: &[Vec<i64>]) -> Result<usize> {
    let kappa = vectors
        .first()
        .map(|v| v.len())
        .ok_or_else(|| Error::Precondition("empty sequence".into()))?;
    for v in vectors {
        check_len("steinitz vector", kappa, v.len())?;
    }
    Ok(kappa)
}

fn total(vectors: &[Vec<i64>], kappa: usize) -> Vec<i128> {
    let mut x = vec![0i128; kappa];
    for v in vectors {
        for (a, b) in x.iter_mut().zip(v) {
            *a += *b as i128;
        }
    }
    x
}

/// Exact prefix deviation of `vectors` taken in the order `perm`.
pub fn prefix_deviation(vectors: &[Vec<i64>], perm: &[usize]) -> Result<Ratio> {
    let kappa = dims(vectors)?;
    check_len("permutation", vectors.len(), perm.len())?;
    let m = vectors.len() as i128;
    let x = total(vectors, kappa);
    let mut s = vec![0i128; kappa];
    let mut worst = 0i128;
    for (l, &i) in perm.iter().enumerate() {
        for (a, b) in s.iter_mut().zip(&vectors[i]) {
            *a += *b as i128;
        }
        let shift = l as i128 + 1 - kappa as i128;
        for (sj, xj) in s.iter().zip(&x) {
            worst = worst.max((m * sj - shift * xj).abs());
        }
    }
    Ratio::new(worst, m)
}

/// Rearranges `vectors` so all prefix sums stay within `κζ` of the segment
/// towards their total.
pub fn steinitz_permute(vectors: &[Vec<i64>]) -> Result<RearrangementResult> {
    steinitz_permute_with(vectors, SteinitzMethod::Exact)
}

pub fn steinitz_permute_with(
    vectors: &[Vec<i64>],
    method: SteinitzMethod,
) -> Result<RearrangementResult> {
    let kappa = dims(vectors)?;
    let zeta = vectors
        .iter()
        .flat_map(|v| v.iter().map(|a| a.abs()))
        .max()
        .unwrap_or(0);
    let finish = |permutation: Vec<usize>| -> Result<RearrangementResult> {
        let achieved_bound = prefix_deviation(vectors, &permutation)?;
        Ok(RearrangementResult {
            permutation,
            achieved_bound,
            kappa,
            zeta,
        })
    };
    if method == SteinitzMethod::GreedyFirst {
        let r = finish(greedy_order(vectors, kappa))?;
        if r.within_bound() {
            return Ok(r);
        }
    }
    finish(exact_order(vectors, kappa)?)
}

fn greedy_order(vectors: &[Vec<i64>], kappa: usize) -> Vec<usize> {
    let m = vectors.len() as i128;
    let x = total(vectors, kappa);
    let mut s = vec![0i128; kappa];
    let mut left: Vec<usize> = (0..vectors.len()).collect();
    let mut order = Vec::with_capacity(vectors.len());
    for l in 1..=vectors.len() {
        let shift = l as i128 - kappa as i128;
        let (pos, _) = left
            .iter()
            .enumerate()
            .map(|(p, &i)| {
                let dev = s
                    .iter()
                    .zip(&vectors[i])
                    .zip(&x)
                    .map(|((sj, vj), xj)| (m * (sj + *vj as i128) - shift * xj).abs())
                    .max()
                    .unwrap_or(0);
                (p, dev)
            })
            .min_by_key(|&(p, d)| (d, p))
            .expect("nonempty");
        let i = left.remove(pos);
        for (a, b) in s.iter_mut().zip(&vectors[i]) {
            *a += *b as i128;
        }
        order.push(i);
    }
    order
}

/// A nonzero rational null vector of the matrix whose columns are `cols`
/// (each of equal height), assuming one exists.
fn null_vector(cols: &[Vec<Ratio>]) -> Result<Vec<Ratio>> {
    let h = cols[0].len();
    let w = cols.len();
    let mut a: Vec<Vec<Ratio>> = (0..h).map(|r| (0..w).map(|c| cols[c][r]).collect()).collect();
    let mut pivot_col = Vec::new();
    let mut row = 0;
    for c in 0..w {
        if row == h {
            break;
        }
        let Some(p) = (row..h).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let pv = a[row][c];
        for k in c..w {
            a[row][k] = a[row][k].div(&pv)?;
        }
        for r in 0..h {
            if r != row && !a[r][c].is_zero() {
                let f = a[r][c];
                for k in c..w {
                    let t = f.mul(&a[row][k])?;
                    a[r][k] = a[r][k].sub(&t)?;
                }
            }
        }
        pivot_col.push(c);
        row += 1;
    }
    let free = (0..w)
        .find(|c| !pivot_col.contains(c))
        .ok_or_else(|| Error::Precondition("columns are independent".into()))?;
    let mut v = vec![Ratio::ZERO; w];
    v[free] = Ratio::ONE;
    for (r, &pc) in pivot_col.iter().enumerate() {
        v[pc] = a[r][free].neg();
    }
    Ok(v)
}

/// Shrinks the active set one element at a time, keeping a fractional
/// weight vector `μ ∈ [0,1]` with `Σμ = k−κ` and `Σμ_i x_i = ((k−κ)/m)·x`.
/// Before each removal `μ` is pushed to a vertex, which leaves at most
/// `κ+1` fractional entries and therefore some zero entry to drop.
fn exact_order(vectors: &[Vec<i64>], kappa: usize) -> Result<Vec<usize>> {
    let m = vectors.len();
    if m <= kappa {
        return Ok((0..m).collect());
    }
    let mut active: Vec<usize> = (0..m).collect();
    let mut mu: Vec<Ratio> = vec![Ratio::new((m - kappa) as i128, m as i128)?; m];
    let mut tail = Vec::with_capacity(m);
    let column = |i: usize| -> Vec<Ratio> {
        let mut c = Vec::with_capacity(kappa + 1);
        c.push(Ratio::ONE);
        c.extend(vectors[i].iter().map(|&v| Ratio::from_int(v)));
        c
    };
    for k in (kappa + 1..=m).rev() {
        let scale = Ratio::new((k - 1 - kappa) as i128, (k - kappa) as i128)?;
        for &i in &active {
            mu[i] = mu[i].mul(&scale)?;
        }
        loop {
            let frac: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| !mu[i].is_zero() && mu[i] != Ratio::ONE)
                .collect();
            if frac.len() <= kappa + 1 {
                break;
            }
            let pick = &frac[..kappa + 2];
            let cols: Vec<Vec<Ratio>> = pick.iter().map(|&i| column(i)).collect();
            let delta = null_vector(&cols)?;
            let mut step: Option<Ratio> = None;
            for (d, &i) in delta.iter().zip(pick) {
                if d.is_zero() {
                    continue;
                }
                let room = if d.signum() > 0 {
                    Ratio::ONE.sub(&mu[i])?.div(d)?
                } else {
                    mu[i].div(&d.neg())?
                };
                if step.is_none_or(|s| room < s) {
                    step = Some(room);
                }
            }
            let t = step.expect("null vector is nonzero");
            for (d, &i) in delta.iter().zip(pick) {
                mu[i] = mu[i].add(&d.mul(&t)?)?;
            }
        }
        let pos = active
            .iter()
            .position(|&i| mu[i].is_zero())
            .ok_or_else(|| Error::Precondition("no zero weight at a vertex".into()))?;
        tail.push(active.remove(pos));
    }
    let mut order = active;
    order.extend(tail.into_iter().rev());
    Ok(order)
}

/// Two prefix lengths `ℓ₁ < ℓ₂` (0 is the empty prefix) with equal prefix
/// sums, scanning in order and returning the first repeat.
pub fn prefix_collision(vectors: &[Vec<i64>], box_radius: i64) -> Result<Option<(usize, usize)>> {
    let kappa = dims(vectors)?;
    let mut s = vec![0i64; kappa];
    let mut prefixes = vec![s.clone()];
    for v in vectors {
        for (a, b) in s.iter_mut().zip(v) {
            *a = a.checked_add(*b).ok_or(Error::Overflow)?;
        }
        if s.iter().any(|a| a.abs() > box_radius) {
            return Err(Error::Precondition("prefix sum escapes the box".into()));
        }
        prefixes.push(s.clone());
    }
    let mut seen: BTreeMap<&[i64], usize> = BTreeMap::new();
    for (l, p) in prefixes.iter().enumerate() {
        if let Some(&l1) = seen.get(p.as_slice()) {
            return Ok(Some((l1, l)));
        }
        seen.insert(p, l);
    }
    Ok(None)
}
