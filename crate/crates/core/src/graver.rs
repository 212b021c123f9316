//! The conformal order, Graver bases by enumeration and by completion, and
//! positive Graver decompositions.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::blockmat::{apply, SmallMatrix};
use crate::error::{check_len, mul, Error, Result};
use crate::lattice::{for_each_box_solution, kernel_basis};

pub(crate) fn conf(x: &[i64], y: &[i64]) -> bool {
    x.iter()
        .zip(y)
        .all(|(a, b)| a.abs() <= b.abs() && (*a == 0 || a.signum() == b.signum()))
}

pub(crate) fn compat(x: &[i64], y: &[i64]) -> bool {
    x.iter()
        .zip(y)
        .all(|(a, b)| a.signum() * b.signum() >= 0)
}

/// `x ⊑ y`: every coordinate of `x` lies between 0 and the matching
/// coordinate of `y`.
pub fn conforms(x: &[i64], y: &[i64]) -> Result<bool> {
    check_len("conforms", x.len(), y.len())?;
    Ok(conf(x, y))
}

/// No coordinate of `x` and `y` has strictly opposite signs.
pub fn sign_compatible(x: &[i64], y: &[i64]) -> Result<bool> {
    check_len("sign_compatible", x.len(), y.len())?;
    Ok(compat(x, y))
}

/// How a [`GraverSet`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraverMethod {
    Enumeration { radius: i64 },
    Completion,
}

/// Budgets and assertions for the two engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraverOptions {
    /// Search nodes allowed for enumeration.
    pub node_budget: u64,
    /// Elements allowed during completion.
    pub element_budget: usize,
    /// A known bound on the Graver ∞-norm; enumeration at or beyond it is
    /// certified complete.
    pub asserted_bound: Option<i64>,
}

impl Default for GraverOptions {
    fn default() -> Self {
        GraverOptions {
            node_budget: 10_000_000,
            element_budget: 100_000,
            asserted_bound: None,
        }
    }
}

/// A set of ⊑-minimal kernel vectors, closed under negation and sorted
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraverSet {
    pub matrix: SmallMatrix,
    pub elements: Vec<Vec<i64>>,
    pub method: GraverMethod,
    pub certified_complete: bool,
}

impl GraverSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn max_norm(&self) -> i64 {
        self.elements
            .iter()
            .flat_map(|g| g.iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn contains(&self, g: &[i64]) -> bool {
        self.elements
            .binary_search_by(|e| e.as_slice().cmp(g))
            .is_ok()
    }

    /// Elements lying in the nonnegative orthant.
    pub fn nonnegative(&self) -> Vec<Vec<i64>> {
        self.elements
            .iter()
            .filter(|g| g.iter().all(|&v| v >= 0))
            .cloned()
            .collect()
    }

    /// Kernel membership, symmetry and pairwise minimality.
    pub fn check_invariants(&self) -> Result<()> {
        for g in &self.elements {
            if g.iter().all(|&v| v == 0) {
                return Err(Error::Precondition("zero vector in Graver set".into()));
            }
            if apply(&self.matrix, g)?.iter().any(|&v| v != 0) {
                return Err(Error::NotInKernel);
            }
            let neg: Vec<i64> = g.iter().map(|v| -v).collect();
            if !self.contains(&neg) {
                return Err(Error::Precondition("Graver set not symmetric".into()));
            }
        }
        for (i, g) in self.elements.iter().enumerate() {
            for (j, h) in self.elements.iter().enumerate() {
                if i != j && conf(h, g) {
                    return Err(Error::Precondition("Graver set not minimal".into()));
                }
            }
        }
        Ok(())
    }
}

fn norm1(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Keeps the ⊑-minimal vectors. Input must be free of zeros.
fn minimal_elements(mut vs: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    vs.sort_by(|a, b| norm1(a).cmp(&norm1(b)).then_with(|| a.cmp(b)));
    vs.dedup();
    let mut kept: Vec<Vec<i64>> = Vec::new();
    for v in vs {
        if !kept.iter().any(|g| conf(g, &v)) {
            kept.push(v);
        }
    }
    kept.sort();
    kept
}

/// All ⊑-minimal nonzero kernel vectors of `m` with ∞-norm at most `radius`.
pub fn graver_enumerate(m: &SmallMatrix, radius: i64, opts: &GraverOptions) -> Result<GraverSet> {
    if radius < 1 {
        return Err(Error::Precondition("radius must be at least 1".into()));
    }
    let lo = alloc::vec![-radius; m.cols()];
    let hi = alloc::vec![radius; m.cols()];
    let zero = alloc::vec![0; m.rows()];
    let mut found = Vec::new();
    for_each_box_solution(m, &zero, &lo, &hi, opts.node_budget, |x| {
        if x.iter().any(|&v| v != 0) {
            found.push(x.to_vec());
        }
        true
    })?;
    Ok(GraverSet {
        matrix: m.clone(),
        elements: minimal_elements(found),
        method: GraverMethod::Enumeration { radius },
        certified_complete: opts.asserted_bound.is_some_and(|b| radius >= b),
    })
}

fn reduce(mut s: Vec<i64>, g: &[Vec<i64>]) -> Vec<i64> {
    loop {
        if s.iter().all(|&v| v == 0) {
            return s;
        }
        match g.iter().find(|h| conf(h, &s)) {
            Some(h) => {
                for (a, b) in s.iter_mut().zip(h) {
                    *a -= b;
                }
            }
            None => return s,
        }
    }
}

fn add_vec(a: &[i64], b: &[i64]) -> Result<Vec<i64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.checked_add(*y).ok_or(Error::Overflow))
        .collect()
}

/// The full Graver basis of `m` by completion: starting from a kernel
/// lattice basis and its negation, sums of pairs are reduced by conformal
/// subtraction and every nonzero remainder joins the set, until no pair
/// produces anything new.
pub fn graver_complete(m: &SmallMatrix, opts: &GraverOptions) -> Result<GraverSet> {
    let basis = kernel_basis(m)?;
    let mut g: Vec<Vec<i64>> = Vec::new();
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut queue: BTreeSet<(i64, Vec<i64>)> = BTreeSet::new();
    for b in basis {
        let nb: Vec<i64> = b.iter().map(|v| -v).collect();
        for v in [b, nb] {
            if seen.insert(v.clone()) {
                g.push(v);
            }
        }
    }
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            if !compat(&g[i], &g[j]) {
                let s = add_vec(&g[i], &g[j])?;
                if s.iter().any(|&v| v != 0) {
                    queue.insert((norm1(&s), s));
                }
            }
        }
    }
    while let Some((_, s)) = queue.pop_first() {
        let r = reduce(s, &g);
        if r.iter().all(|&v| v == 0) {
            continue;
        }
        let nr: Vec<i64> = r.iter().map(|v| -v).collect();
        for f in [r, nr] {
            if !seen.insert(f.clone()) {
                continue;
            }
            for h in &g {
                if !compat(&f, h) {
                    let s = add_vec(&f, h)?;
                    if s.iter().any(|&v| v != 0) {
                        queue.insert((norm1(&s), s));
                    }
                }
            }
            g.push(f);
        }
        if g.len() > opts.element_budget {
            return Err(Error::CompletionBudget(Box::new(GraverSet {
                matrix: m.clone(),
                elements: minimal_elements(g),
                method: GraverMethod::Completion,
                certified_complete: false,
            })));
        }
    }
    Ok(GraverSet {
        matrix: m.clone(),
        elements: minimal_elements(g),
        method: GraverMethod::Completion,
        certified_complete: true,
    })
}

/// Writes `y = Σ αᵢ gᵢ` with every `gᵢ ⊑ y`. Each step takes the conforming
/// element of largest ∞-norm (lexicographically first on ties) with the
/// largest coefficient that keeps `α·g ⊑ residual`.
pub fn graver_decompose(y: &[i64], set: &GraverSet) -> Result<Vec<(i64, Vec<i64>)>> {
    if apply(&set.matrix, y)?.iter().any(|&v| v != 0) {
        return Err(Error::NotInKernel);
    }
    let mut r = y.to_vec();
    let mut out = Vec::new();
    while r.iter().any(|&v| v != 0) {
        let mut best: Option<&Vec<i64>> = None;
        for g in &set.elements {
            if conf(g, &r) {
                let norm = g.iter().map(|v| v.abs()).max().unwrap_or(0);
                if best.is_none_or(|b| norm > b.iter().map(|v| v.abs()).max().unwrap_or(0)) {
                    best = Some(g);
                }
            }
        }
        let g = best.ok_or(Error::IncompleteBasis)?;
        let alpha = g
            .iter()
            .zip(&r)
            .filter(|(a, _)| **a != 0)
            .map(|(a, b)| b.abs() / a.abs())
            .min()
            .unwrap_or(0);
        for (ri, gi) in r.iter_mut().zip(g) {
            *ri -= mul(alpha, *gi)?;
        }
        out.push((alpha, g.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockmat::{assemble, FourBlockSpec, MatrixKind};
    use alloc::vec;
    use proptest::prelude::*;

    fn sample_h0(n: usize) -> FourBlockSpec {
        FourBlockSpec::three_block(
            SmallMatrix::from_rows(&[[1, -1]]).unwrap(),
            SmallMatrix::from_rows(&[[1]]).unwrap(),
            SmallMatrix::from_rows(&[[1, 0]]).unwrap(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn order_examples() {
        assert!(conforms(&[1, 0], &[2, 0]).unwrap());
        assert!(!conforms(&[1, -1], &[1, 1]).unwrap());
        assert!(conforms(&[0, 0, 0], &[5, -2, 0]).unwrap());
        assert!(sign_compatible(&[3, 0, -1], &[1, 5, -2]).unwrap());
        assert!(!sign_compatible(&[1, 1], &[1, -1]).unwrap());
        assert!(!sign_compatible(&[2, -3], &[-2, 3]).unwrap());
        assert!(conforms(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let o = GraverOptions::default();
        let g = graver_enumerate(&SmallMatrix::from_rows(&[[1, -1]]).unwrap(), 2, &o).unwrap();
        assert_eq!(g.elements, vec![vec![-1, -1], vec![1, 1]]);
        let g = graver_enumerate(&SmallMatrix::from_rows(&[[1, 2]]).unwrap(), 3, &o).unwrap();
        assert_eq!(g.elements, vec![vec![-2, 1], vec![2, -1]]);
    }

    #[test]
    fn completion_examples() {
        let o = GraverOptions::default();
        let g = graver_complete(&SmallMatrix::from_rows(&[[1, -1]]).unwrap(), &o).unwrap();
        assert_eq!(g.elements, vec![vec![-1, -1], vec![1, 1]]);
        assert!(g.certified_complete);
        let m = SmallMatrix::from_rows(&[[1, 1, 0], [0, 1, 1]]).unwrap();
        let c = graver_complete(&m, &o).unwrap();
        let e = graver_enumerate(&m, c.max_norm(), &o).unwrap();
        assert_eq!(c.elements, e.elements);
    }

    #[test]
    fn engines_agree_on_n_fold_matrix() {
        let e = assemble(&sample_h0(2), MatrixKind::E).unwrap();
        let o = GraverOptions::default();
        let c = graver_complete(&e, &o).unwrap();
        let en = graver_enumerate(&e, 3, &o).unwrap();
        let restricted: Vec<Vec<i64>> = c
            .elements
            .iter()
            .filter(|g| g.iter().all(|v| v.abs() <= 3))
            .cloned()
            .collect();
        assert_eq!(restricted, en.elements);
    }

    #[test]
    fn h0_basis_contains_witness_and_decomposes() {
        let h0 = assemble(&sample_h0(2), MatrixKind::H0).unwrap();
        let set = graver_complete(&h0, &GraverOptions::default()).unwrap();
        set.check_invariants().unwrap();
        assert!(set.contains(&[1, 1, 2, -1, 0]));
        let parts = graver_decompose(&[2, 2, 4, -2, 0], &set).unwrap();
        assert_eq!(parts, vec![(2, vec![1, 1, 2, -1, 0])]);
        // Brute-force confirmation that this is the only conforming element.
        let conforming: Vec<_> = set
            .elements
            .iter()
            .filter(|g| conf(g, &[2, 2, 4, -2, 0]))
            .collect();
        assert_eq!(conforming.len(), 1);
        assert!(graver_decompose(&[], &set).is_err());
        assert!(graver_decompose(&[0, 0, 0, 0, 0], &set).unwrap().is_empty());
        assert_eq!(
            graver_decompose(&[1, 0, 0, 0, 0], &set),
            Err(Error::NotInKernel)
        );
    }

    #[test]
    fn nonnegative_filter() {
        let m = SmallMatrix::from_rows(&[[1, 1, -2]]).unwrap();
        let set = graver_complete(&m, &GraverOptions::default()).unwrap();
        let nn = set.nonnegative();
        assert!(nn.iter().all(|g| g.iter().all(|&v| v >= 0)));
        assert!(nn.contains(&vec![1, 1, 1]));
    }

    proptest! {
        #[test]
        fn completion_is_a_graver_set(d in proptest::collection::vec(-2i64..=2, 6)) {
            let m = SmallMatrix::new(2, 3, d).unwrap();
            let set = graver_complete(&m, &GraverOptions::default()).unwrap();
            set.check_invariants().unwrap();
            let en = graver_enumerate(&m, set.max_norm().max(1), &GraverOptions::default()).unwrap();
            prop_assert_eq!(&set.elements, &en.elements);
        }

        #[test]
        fn decomposition_is_conformal(d in proptest::collection::vec(-2i64..=2, 4), coeffs in proptest::collection::vec(-3i64..=3, 3)) {
            let m = SmallMatrix::new(1, 4, d).unwrap();
            let set = graver_complete(&m, &GraverOptions::default()).unwrap();
            let basis = kernel_basis(&m).unwrap();
            let mut y = vec![0i64; 4];
            for (b, c) in basis.iter().zip(&coeffs) {
                for (yi, bi) in y.iter_mut().zip(b) { *yi += c * bi; }
            }
            let parts = graver_decompose(&y, &set).unwrap();
            let mut sum = vec![0i64; 4];
            for (a, g) in &parts {
                prop_assert!(*a > 0);
                prop_assert!(conf(g, &y));
                for (s, gi) in sum.iter_mut().zip(g) { *s += a * gi; }
            }
            prop_assert_eq!(sum, y);
        }
    }
}
