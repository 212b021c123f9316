//! Lower-bound instance families, their certifiers, and a seeded random
//! corpus for oracle tests.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockmat::{
    block_apply, Bound, BrickVector, Constraint, FourBlockSpec, IPInstance, SmallMatrix,
};
use crate::dp::{kernel_search, KernelCost};
use crate::error::{Error, Result};
use crate::rational::Ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    FourBlock { t: usize, n: usize },
    ThreeBlock { n: usize },
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CertMethod {
    Exhaustive,
    Divisibility,
}

/// Proof that every nonzero kernel vector of `H` has ∞-norm at least
/// `min_norm_verified`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundCertificate {
    pub family: Family,
    /// A nonzero kernel vector attaining the bound, when one was found.
    pub witness: Option<BrickVector>,
    pub min_norm_verified: i64,
    pub method: CertMethod,
}

/// `A = I_t`, `B = −I_t`, `D` the `(t−1)×t` bidiagonal `(1, −1)` matrix and
/// `C = (−I_{t−1} | 0)`. Kernel vectors repeat `y⁰` in every brick with
/// `(n−1)·y_i = n·y_{i+1}`.
pub fn gen_lower_4block(t: usize, n: usize) -> Result<FourBlockSpec> {
    if t < 2 || n < 2 {
        return Err(Error::Precondition("need t >= 2 and n >= 2".into()));
    }
    let mut b = SmallMatrix::zeros(t, t);
    let mut c = SmallMatrix::zeros(t - 1, t);
    let mut d = SmallMatrix::zeros(t - 1, t);
    for i in 0..t {
        b.set(i, i, -1);
    }
    for i in 0..t - 1 {
        c.set(i, i, -1);
        d.set(i, i, 1);
        d.set(i, i + 1, -1);
    }
    FourBlockSpec::new(SmallMatrix::identity(t), b, c, d, n)
}

/// The kernel vector `y_i = n^{t−i}(n−1)^{i−1}` of [`gen_lower_4block`],
/// copied into every brick.
pub fn lower_4block_witness(t: usize, n: usize) -> Result<BrickVector> {
    let n64 = n as i64;
    let y: Vec<i64> = (1..=t as u32)
        .map(|i| {
            n64.checked_pow(t as u32 - i)
                .and_then(|a| a.checked_mul((n64 - 1).checked_pow(i - 1)?))
                .ok_or(Error::Overflow)
        })
        .collect::<Result<_>>()?;
    BrickVector::new(&y, &vec![y.clone(); n])
}

/// `B = (1)`, `A = (1, −1)`, `D = (1, 0)` with its Graver element
/// `(1, (n−1, n), (−1, 0), …, (−1, 0))` of ∞-norm `n`.
pub fn gen_lower_3block(n: usize) -> (FourBlockSpec, BrickVector) {
    let n = n.max(1);
    let spec = FourBlockSpec::three_block(
        SmallMatrix::from_rows(&[[1, -1]]).expect("static"),
        SmallMatrix::from_rows(&[[1]]).expect("static"),
        SmallMatrix::from_rows(&[[1, 0]]).expect("static"),
        n,
    )
    .expect("static");
    let mut bricks = vec![vec![-1i64, 0]; n];
    bricks[0] = vec![n as i64 - 1, n as i64];
    let witness = BrickVector::new(&[1], &bricks).expect("static");
    (spec, witness)
}

fn family_of(spec: &FourBlockSpec) -> Family {
    let t = spec.t_b();
    if t >= 2 && spec.n >= 2 && gen_lower_4block(t, spec.n).is_ok_and(|f| f == *spec) {
        return Family::FourBlock { t, n: spec.n };
    }
    if spec.n >= 1 && gen_lower_3block(spec.n).0 == *spec {
        return Family::ThreeBlock { n: spec.n };
    }
    Family::Other
}

/// Exhaustively proves that `H` has no nonzero kernel vector of ∞-norm
/// below `bound`, then looks for one of norm exactly `bound`.
pub fn certify_min_norm(
    spec: &FourBlockSpec,
    bound: i64,
    budget: u64,
) -> Result<LowerBoundCertificate> {
    spec.validate()?;
    if bound < 1 {
        return Err(Error::Precondition("bound must be at least 1".into()));
    }
    let boxed = |r: i64| {
        (
            spec.bricks(vec![-r; spec.dim()]).expect("shape"),
            spec.bricks(vec![r; spec.dim()]).expect("shape"),
        )
    };
    if bound > 1 {
        let (lo, hi) = boxed(bound - 1);
        if let Some((g, _)) = kernel_search(spec, true, &lo, &hi, KernelCost::Any, budget)? {
            return Err(Error::CounterexampleFound(g.into_flat()));
        }
    }
    let (lo, hi) = boxed(bound);
    let witness = kernel_search(spec, true, &lo, &hi, KernelCost::Any, budget)?.map(|(g, _)| g);
    Ok(LowerBoundCertificate {
        family: family_of(spec),
        witness,
        min_norm_verified: bound,
        method: CertMethod::Exhaustive,
    })
}

/// Replays `(n−1)·y_i = n·y_{i+1}` for the [`gen_lower_4block`] family:
/// writing `y_i = r_i·y_1` with rational `r_i`, integrality forces `y_1`
/// into `g·ℤ` with `g` the lcm of the denominators, so the smallest
/// nonzero kernel ∞-norm is `g·max|r_i|`.
pub fn certify_divisibility(t: usize, n: usize) -> Result<LowerBoundCertificate> {
    let spec = gen_lower_4block(t, n)?;
    let n64 = n as i64;
    let step = Ratio::new(n64 as i128 - 1, n64 as i128)?;
    let mut ratios = vec![Ratio::ONE];
    for _ in 1..t {
        let last = *ratios.last().expect("nonempty");
        ratios.push(last.mul(&step)?);
    }
    let mut g: i128 = 1;
    for r in &ratios {
        let d = r.denom();
        g = g.checked_mul(d / gcd(g, d)).ok_or(Error::Overflow)?;
    }
    let y: Vec<i64> = ratios
        .iter()
        .map(|r| {
            let v = r.mul_int(i64::try_from(g).map_err(|_| Error::Overflow)?)?;
            i64::try_from(v.numer()).map_err(|_| Error::Overflow)
        })
        .collect::<Result<_>>()?;
    let witness = BrickVector::new(&y, &vec![y.clone(); n])?;
    if !block_apply(&spec, &witness)?.is_zero() {
        return Err(Error::NotInKernel);
    }
    Ok(LowerBoundCertificate {
        family: Family::FourBlock { t, n },
        min_norm_verified: witness.norm_inf(),
        witness: Some(witness),
        method: CertMethod::Divisibility,
    })
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// A nonzero kernel vector of `H₀` strictly conformal to `y`, found by
/// exhaustive search over the box between `0` and `y`. `None` means `y` is
/// ⊑-minimal.
pub fn conformal_divisor(
    spec: &FourBlockSpec,
    y: &BrickVector,
    budget: u64,
) -> Result<Option<BrickVector>> {
    let lo = spec.bricks(y.flat().iter().map(|&v| v.min(0)).collect())?;
    let hi = spec.bricks(y.flat().iter().map(|&v| v.max(0)).collect())?;
    Ok(
        kernel_search(&spec.without_c(), false, &lo, &hi, KernelCost::Norm1, budget)?
            .filter(|(_, c)| *c < y.norm_1())
            .map(|(z, _)| z),
    )
}

/// Size ranges for [`random_corpus`]; each pair is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusParams {
    pub n: (usize, usize),
    pub t_a: (usize, usize),
    pub t_b: (usize, usize),
    pub s_a: (usize, usize),
    pub s_c: (usize, usize),
    /// Matrix and weight entries lie in `[-entry, entry]`.
    pub entry: i64,
    /// Variable bounds lie in `[-bound, bound]`.
    pub bound: i64,
    pub three_block: bool,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            n: (1, 4),
            t_a: (1, 2),
            t_b: (1, 2),
            s_a: (1, 2),
            s_c: (1, 2),
            entry: 2,
            bound: 3,
            three_block: false,
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, entry: i64) -> SmallMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-entry..=entry)).collect();
    SmallMatrix::new(rows, cols, data).expect("sized")
}

/// Seeded instances with finite bounds; even positions get a planted
/// solution `x̂` and `b = H·x̂`, odd positions a random right-hand side.
pub fn random_corpus(seed: u64, params: &CorpusParams, count: usize) -> Vec<IPInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = params;
    (0..count)
        .map(|k| {
            let n = rng.gen_range(p.n.0..=p.n.1);
            let t_a = rng.gen_range(p.t_a.0..=p.t_a.1);
            let t_b = rng.gen_range(p.t_b.0..=p.t_b.1);
            let s_a = rng.gen_range(p.s_a.0..=p.s_a.1);
            let s_c = rng.gen_range(p.s_c.0..=p.s_c.1);
            let a = random_matrix(&mut rng, s_a, t_a, p.entry);
            let b = random_matrix(&mut rng, s_a, t_b, p.entry);
            let c = if p.three_block {
                SmallMatrix::zeros(s_c, t_b)
            } else {
                random_matrix(&mut rng, s_c, t_b, p.entry)
            };
            let d = random_matrix(&mut rng, s_c, t_a, p.entry);
            let spec = FourBlockSpec::new(a, b, c, d, n).expect("consistent shapes");
            let dim = spec.dim();
            let mut lower = Vec::with_capacity(dim);
            let mut upper = Vec::with_capacity(dim);
            for _ in 0..dim {
                let l = rng.gen_range(-p.bound..=p.bound);
                let u = rng.gen_range(l..=p.bound);
                lower.push(l);
                upper.push(u);
            }
            let w = (0..dim).map(|_| rng.gen_range(-p.entry..=p.entry)).collect();
            let rhs = if k % 2 == 0 {
                let x: Vec<i64> = lower
                    .iter()
                    .zip(&upper)
                    .map(|(l, u)| rng.gen_range(*l..=*u))
                    .collect();
                let x = spec.bricks(x).expect("sized");
                block_apply(&spec, &x).expect("small entries").flatten()
            } else {
                let r = p.entry * p.bound;
                (0..spec.rows()).map(|_| rng.gen_range(-r..=r)).collect()
            };
            let constraint = if p.three_block {
                Constraint::Block {
                    spec,
                    three_block: true,
                }
            } else {
                Constraint::block(spec)
            };
            IPInstance::new(
                constraint,
                rhs,
                lower.into_iter().map(Bound::Finite).collect(),
                upper.into_iter().map(Bound::Finite).collect(),
                w,
            )
            .expect("consistent instance")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockmat::{assemble, in_kernel_h0, MatrixKind};
    use crate::lattice::solve_integer_system;
    use proptest::prelude::*;

    #[test]
    fn four_block_top_row() {
        let spec = gen_lower_4block(2, 2).unwrap();
        let h = assemble(&spec, MatrixKind::H).unwrap();
        // Top row of H restricted to brick 0 plus n copies of D collapsed.
        let top = h.row(0);
        assert_eq!(top[0] + 2 * top[2], 1);
        assert_eq!(top[1] + 2 * top[3], -2);
    }

    #[test]
    fn four_block_t2_minimal_brick0() {
        for n in 2..=5usize {
            let spec = gen_lower_4block(2, n).unwrap();
            let w = lower_4block_witness(2, n).unwrap();
            assert_eq!(w.brick0(), &[n as i64, n as i64 - 1]);
            assert!(block_apply(&spec, &w).unwrap().is_zero());
            // (n−1)·y1 = n·y2 over ℤ has solutions k·(n, n−1) only.
            let m = SmallMatrix::from_rows(&[[n as i64 - 1, -(n as i64)]]).unwrap();
            let k = crate::lattice::kernel_basis(&m).unwrap();
            assert_eq!(k.len(), 1);
            let v = &k[0];
            assert_eq!(v[0].abs(), n as i64);
            assert_eq!(v[1].abs(), n as i64 - 1);
        }
    }

    #[test]
    fn four_block_t3_divisible_by_n_squared() {
        let spec = gen_lower_4block(3, 2).unwrap();
        let h = assemble(&spec, MatrixKind::H).unwrap();
        for g in crate::lattice::kernel_basis(&h).unwrap() {
            assert_eq!(g[0] % 4, 0);
        }
        assert!(solve_integer_system(&h, &vec![0; h.rows()]).unwrap().is_some());
    }

    #[test]
    fn three_block_witnesses() {
        let (spec, w) = gen_lower_3block(2);
        assert_eq!(w.flat(), &[1, 1, 2, -1, 0]);
        let (spec3, w3) = gen_lower_3block(3);
        assert_eq!(w3.flat(), &[1, 2, 3, -1, 0, -1, 0]);
        assert!(in_kernel_h0(&spec, &w).unwrap());
        assert!(in_kernel_h0(&spec3, &w3).unwrap());
        for n in 2..=6 {
            assert_eq!(gen_lower_3block(n).1.norm_inf(), n as i64);
        }
    }

    #[test]
    fn exhaustive_certificates() {
        let spec = gen_lower_4block(2, 3).unwrap();
        let c = certify_min_norm(&spec, 3, 1 << 24).unwrap();
        assert_eq!(c.family, Family::FourBlock { t: 2, n: 3 });
        assert_eq!(c.witness.unwrap().norm_inf(), 3);
        assert!(matches!(
            certify_min_norm(&spec, 4, 1 << 24),
            Err(Error::CounterexampleFound(_))
        ));
        let trivial = certify_min_norm(&gen_lower_3block(2).0, 1, 1 << 24).unwrap();
        assert_eq!(trivial.min_norm_verified, 1);
    }

    #[test]
    fn three_block_witness_is_minimal() {
        for n in 2..=4 {
            let (spec, w) = gen_lower_3block(n);
            assert_eq!(conformal_divisor(&spec, &w, 1 << 24).unwrap(), None);
            let double = w.scale(2).unwrap();
            let z = conformal_divisor(&spec, &double, 1 << 24).unwrap().unwrap();
            assert!(in_kernel_h0(&spec, &z).unwrap());
            assert!(z.norm_1() < double.norm_1());
        }
    }

    #[test]
    fn divisibility_agrees_with_exhaustive() {
        for n in 2..=4 {
            let d = certify_divisibility(2, n).unwrap();
            assert_eq!(d.min_norm_verified, n as i64);
            let e = certify_min_norm(&gen_lower_4block(2, n).unwrap(), n as i64, 1 << 24).unwrap();
            assert_eq!(e.witness.unwrap().norm_inf(), d.min_norm_verified);
        }
        let norms: Vec<i64> = (2..=4)
            .map(|n| certify_divisibility(3, n).unwrap().min_norm_verified)
            .collect();
        assert_eq!(norms, vec![4, 9, 16]);
    }

    #[test]
    fn corpus_is_reproducible_and_planted() {
        let p = CorpusParams::default();
        let a = random_corpus(7, &p, 20);
        assert_eq!(a, random_corpus(7, &p, 20));
        assert_ne!(a, random_corpus(8, &p, 20));
        for inst in a.iter().step_by(2) {
            inst.validate().unwrap();
        }
    }

    proptest! {
        #[test]
        fn four_block_witness_in_kernel(t in 2usize..=4, n in 2usize..=6) {
            let spec = gen_lower_4block(t, n).unwrap();
            let w = lower_4block_witness(t, n).unwrap();
            prop_assert!(block_apply(&spec, &w).unwrap().is_zero());
            prop_assert_eq!(w.norm_inf(), (n as i64).pow(t as u32 - 1));
        }
    }
}
