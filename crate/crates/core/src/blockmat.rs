//! Dense integer matrices, 4-block assembly and brick-structured vectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{add, check_len, mul, Error, Result};

/// Dense integer matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SmallMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl SmallMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        check_len("matrix entries", rows * cols, data.len())?;
        Ok(SmallMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SmallMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = SmallMatrix::zeros(size, size);
        for i in 0..size {
            m.data[i * size + i] = 1;
        }
        m
    }

    /// Builds a matrix from equally long rows. An empty slice yields 0×0.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len("matrix row", cols, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        Ok(SmallMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Largest absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> i64 {
        self.data.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn transpose(&self) -> SmallMatrix {
        let mut t = SmallMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &SmallMatrix) -> Result<SmallMatrix> {
        check_len("vstack columns", self.cols, other.cols)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        SmallMatrix::new(self.rows + other.rows, self.cols, data)
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &SmallMatrix) -> Result<SmallMatrix> {
        check_len("hstack rows", self.rows, other.rows)?;
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        SmallMatrix::new(self.rows, cols, data)
    }

    /// Adds `sub` into the block whose top-left corner is `(r0, c0)`.
    fn place(&mut self, r0: usize, c0: usize, sub: &SmallMatrix) {
        for r in 0..sub.rows {
            for c in 0..sub.cols {
                self.set(r0 + r, c0 + c, sub.get(r, c));
            }
        }
    }

    /// Accumulates `self · x` into `out`.
    pub(crate) fn mul_add_into(&self, x: &[i64], out: &mut [i64]) -> Result<()> {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = *o;
            for (a, b) in self.row(r).iter().zip(x) {
                if *a != 0 && *b != 0 {
                    acc = add(acc, mul(*a, *b)?)?;
                }
            }
            *o = acc;
        }
        Ok(())
    }
}

/// Exact matrix-vector product.
pub fn apply(m: &SmallMatrix, x: &[i64]) -> Result<Vec<i64>> {
    check_len("apply", m.cols, x.len())?;
    let mut out = vec![0; m.rows];
    m.mul_add_into(x, &mut out)?;
    Ok(out)
}

/// Which matrix to materialize from a [`FourBlockSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    /// The full 4-block matrix.
    H,
    /// `H` with the `C` block zeroed.
    H0,
    /// The n-fold matrix: `B` and `C` zeroed, shape kept.
    E,
    /// The two-stage stochastic matrix: `C` and `D` zeroed, shape kept.
    F,
}

/// The blocks `A, B, C, D` and the number of bricks `n`.
///
/// The layout is a top row `[C D D … D]` followed by `n` rows
/// `[B 0 … A … 0]` with `A` on the diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FourBlockSpec {
    pub a: SmallMatrix,
    pub b: SmallMatrix,
    pub c: SmallMatrix,
    pub d: SmallMatrix,
    pub n: usize,
}

impl FourBlockSpec {
    pub fn new(
        a: SmallMatrix,
        b: SmallMatrix,
        c: SmallMatrix,
        d: SmallMatrix,
        n: usize,
    ) -> Result<Self> {
        let spec = FourBlockSpec { a, b, c, d, n };
        spec.validate()?;
        Ok(spec)
    }

    /// A 3-block spec: `C` is the zero matrix of the matching shape.
    pub fn three_block(a: SmallMatrix, b: SmallMatrix, d: SmallMatrix, n: usize) -> Result<Self> {
        let c = SmallMatrix::zeros(d.rows(), b.cols());
        FourBlockSpec::new(a, b, c, d, n)
    }

    pub fn validate(&self) -> Result<()> {
        check_len("s_C = s_D", self.c.rows(), self.d.rows())?;
        check_len("s_A = s_B", self.a.rows(), self.b.rows())?;
        check_len("t_B = t_C", self.b.cols(), self.c.cols())?;
        check_len("t_A = t_D", self.a.cols(), self.d.cols())?;
        if self.n == 0 {
            return Err(Error::Precondition("n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn s_a(&self) -> usize {
        self.a.rows()
    }

    pub fn t_a(&self) -> usize {
        self.a.cols()
    }

    pub fn s_c(&self) -> usize {
        self.c.rows()
    }

    pub fn t_b(&self) -> usize {
        self.b.cols()
    }

    pub fn rows(&self) -> usize {
        self.s_c() + self.n * self.s_a()
    }

    pub fn dim(&self) -> usize {
        self.t_b() + self.n * self.t_a()
    }

    /// Largest absolute entry over the four blocks.
    pub fn delta(&self) -> i64 {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|m| m.max_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn is_three_block(&self) -> bool {
        self.c.is_zero()
    }

    pub fn with_n(&self, n: usize) -> FourBlockSpec {
        FourBlockSpec {
            n,
            ..self.clone()
        }
    }

    /// The same blocks with `C` replaced by zero.
    pub fn without_c(&self) -> FourBlockSpec {
        FourBlockSpec {
            c: SmallMatrix::zeros(self.c.rows(), self.c.cols()),
            ..self.clone()
        }
    }

    pub fn zero_vector(&self) -> BrickVector {
        BrickVector::zeros(self.t_b(), self.t_a(), self.n)
    }

    /// Splits a flat vector into bricks following this spec.
    pub fn bricks(&self, flat: Vec<i64>) -> Result<BrickVector> {
        BrickVector::from_flat(flat, self.t_b(), self.t_a(), self.n)
    }
}

/// Materializes one of the matrices described by `spec`.
pub fn assemble(spec: &FourBlockSpec, kind: MatrixKind) -> Result<SmallMatrix> {
    spec.validate()?;
    let (use_b, use_c, use_d) = match kind {
        MatrixKind::H => (true, true, true),
        MatrixKind::H0 => (true, false, true),
        MatrixKind::E => (false, false, true),
        MatrixKind::F => (true, false, false),
    };
    let mut m = SmallMatrix::zeros(spec.rows(), spec.dim());
    let (s_c, s_a, t_b, t_a) = (spec.s_c(), spec.s_a(), spec.t_b(), spec.t_a());
    if use_c {
        m.place(0, 0, &spec.c);
    }
    for i in 0..spec.n {
        if use_d {
            m.place(0, t_b + i * t_a, &spec.d);
        }
        if use_b {
            m.place(s_c + i * s_a, 0, &spec.b);
        }
        m.place(s_c + i * s_a, t_b + i * t_a, &spec.a);
    }
    Ok(m)
}

/// An integer vector split into brick 0 (length `t_B`) and `n` bricks of
/// length `t_A`. Brick indices run `0..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BrickVector {
    data: Vec<i64>,
    t_b: usize,
    t_a: usize,
    n: usize,
}

impl BrickVector {
    pub fn zeros(t_b: usize, t_a: usize, n: usize) -> Self {
        BrickVector {
            data: vec![0; t_b + n * t_a],
            t_b,
            t_a,
            n,
        }
    }

    pub fn new<R: AsRef<[i64]>>(brick0: &[i64], bricks: &[R]) -> Result<Self> {
        let t_a = bricks.first().map_or(0, |b| b.as_ref().len());
        let mut data = brick0.to_vec();
        for b in bricks {
            check_len("brick length", t_a, b.as_ref().len())?;
            data.extend_from_slice(b.as_ref());
        }
        Ok(BrickVector {
            data,
            t_b: brick0.len(),
            t_a,
            n: bricks.len(),
        })
    }

    pub fn from_flat(flat: Vec<i64>, t_b: usize, t_a: usize, n: usize) -> Result<Self> {
        check_len("brick vector", t_b + n * t_a, flat.len())?;
        Ok(BrickVector {
            data: flat,
            t_b,
            t_a,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_a(&self) -> usize {
        self.t_a
    }

    pub fn t_b(&self) -> usize {
        self.t_b
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn flat(&self) -> &[i64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<i64> {
        self.data
    }

    pub fn brick0(&self) -> &[i64] {
        &self.data[..self.t_b]
    }

    /// Brick `i`; `brick(0)` is brick 0.
    pub fn brick(&self, i: usize) -> &[i64] {
        if i == 0 {
            return self.brick0();
        }
        let s = self.t_b + (i - 1) * self.t_a;
        &self.data[s..s + self.t_a]
    }

    pub fn brick_mut(&mut self, i: usize) -> &mut [i64] {
        if i == 0 {
            return &mut self.data[..self.t_b];
        }
        let s = self.t_b + (i - 1) * self.t_a;
        &mut self.data[s..s + self.t_a]
    }

    pub fn same_shape(&self, o: &BrickVector) -> bool {
        self.t_b == o.t_b && self.t_a == o.t_a && self.n == o.n
    }

    fn shape_check(&self, o: &BrickVector) -> Result<()> {
        if self.same_shape(o) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context: "brick shape",
                expected: self.dim(),
                found: o.dim(),
            })
        }
    }

    pub fn checked_add(&self, o: &BrickVector) -> Result<BrickVector> {
        self.shape_check(o)?;
        let data = self
            .data
            .iter()
            .zip(&o.data)
            .map(|(a, b)| add(*a, *b))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_data(data))
    }

    pub fn checked_sub(&self, o: &BrickVector) -> Result<BrickVector> {
        self.checked_add(&o.neg())
    }

    pub fn scale(&self, k: i64) -> Result<BrickVector> {
        let data = self
            .data
            .iter()
            .map(|a| mul(*a, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_data(data))
    }

    pub fn neg(&self) -> BrickVector {
        self.with_data(self.data.iter().map(|v| -v).collect())
    }

    fn with_data(&self, data: Vec<i64>) -> BrickVector {
        BrickVector {
            data,
            t_b: self.t_b,
            t_a: self.t_a,
            n: self.n,
        }
    }

    pub fn norm_inf(&self) -> i64 {
        self.data.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    pub fn norm_1(&self) -> i64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }
}

/// Output of [`block_apply`]: the top rows and one slice per brick row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockProduct {
    /// `C·x⁰ + Σ D·xⁱ`.
    pub top: Vec<i64>,
    /// `B·x⁰ + A·xⁱ` for `i = 1..=n`.
    pub per_brick: Vec<Vec<i64>>,
}

impl BlockProduct {
    pub fn is_zero(&self) -> bool {
        self.top.iter().all(|&v| v == 0) && self.per_brick.iter().flatten().all(|&v| v == 0)
    }

    pub fn flatten(&self) -> Vec<i64> {
        let mut out = self.top.clone();
        for p in &self.per_brick {
            out.extend_from_slice(p);
        }
        out
    }
}

/// Structured product `H·x` that never materializes `H`.
pub fn block_apply(spec: &FourBlockSpec, x: &BrickVector) -> Result<BlockProduct> {
    check_len("block_apply brick0", spec.t_b(), x.t_b())?;
    check_len("block_apply brick length", spec.t_a(), x.t_a())?;
    check_len("block_apply brick count", spec.n, x.n())?;
    let mut top = vec![0; spec.s_c()];
    spec.c.mul_add_into(x.brick0(), &mut top)?;
    let mut bx0 = vec![0; spec.s_a()];
    spec.b.mul_add_into(x.brick0(), &mut bx0)?;
    let mut per_brick = Vec::with_capacity(spec.n);
    for i in 1..=spec.n {
        spec.d.mul_add_into(x.brick(i), &mut top)?;
        let mut row = bx0.clone();
        spec.a.mul_add_into(x.brick(i), &mut row)?;
        per_brick.push(row);
    }
    Ok(BlockProduct { top, per_brick })
}

/// `H₀·x = 0` for the 3-block matrix derived from `spec`.
pub fn in_kernel_h0(spec: &FourBlockSpec, x: &BrickVector) -> Result<bool> {
    Ok(block_apply(&spec.without_c(), x)?.is_zero())
}

/// Extended integer used for variable bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    NegInf,
    Finite(i64),
    PosInf,
}

impl Bound {
    pub fn finite(self) -> Option<i64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Whether `v` satisfies `self ≤ v`.
    pub fn le_int(self, v: i64) -> bool {
        self <= Bound::Finite(v)
    }

    /// Whether `v` satisfies `v ≤ self`.
    pub fn ge_int(self, v: i64) -> bool {
        Bound::Finite(v) <= self
    }
}

/// Constraint matrix of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Block-structured; `three_block` records that `C` is identically zero.
    Block {
        spec: FourBlockSpec,
        three_block: bool,
    },
    Explicit(SmallMatrix),
}

impl Constraint {
    pub fn block(spec: FourBlockSpec) -> Constraint {
        let three_block = spec.is_three_block();
        Constraint::Block { spec, three_block }
    }

    pub fn matrix(&self) -> Result<SmallMatrix> {
        match self {
            Constraint::Block { spec, .. } => assemble(spec, MatrixKind::H),
            Constraint::Explicit(m) => Ok(m.clone()),
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Constraint::Block { spec, .. } => spec.rows(),
            Constraint::Explicit(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Constraint::Block { spec, .. } => spec.dim(),
            Constraint::Explicit(m) => m.cols(),
        }
    }

    /// The block view; an explicit matrix `M` is the single brick `A = M`.
    pub fn as_spec(&self) -> FourBlockSpec {
        match self {
            Constraint::Block { spec, .. } => spec.clone(),
            Constraint::Explicit(m) => FourBlockSpec {
                a: m.clone(),
                b: SmallMatrix::zeros(m.rows(), 0),
                c: SmallMatrix::zeros(0, 0),
                d: SmallMatrix::zeros(0, m.cols()),
                n: 1,
            },
        }
    }
}

/// `min w·x` subject to `Hx = b`, `lower ≤ x ≤ upper`, `x` integral.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IPInstance {
    pub constraint: Constraint,
    pub b: Vec<i64>,
    pub lower: Vec<Bound>,
    pub upper: Vec<Bound>,
    pub w: Vec<i64>,
}

impl IPInstance {
    pub fn new(
        constraint: Constraint,
        b: Vec<i64>,
        lower: Vec<Bound>,
        upper: Vec<Bound>,
        w: Vec<i64>,
    ) -> Result<Self> {
        let inst = IPInstance {
            constraint,
            b,
            lower,
            upper,
            w,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if let Constraint::Block { spec, three_block } = &self.constraint {
            spec.validate()?;
            if *three_block && !spec.c.is_zero() {
                return Err(Error::Precondition(
                    "three_block instance with nonzero C".into(),
                ));
            }
        }
        let (rows, cols) = (self.constraint.rows(), self.constraint.cols());
        check_len("right-hand side", rows, self.b.len())?;
        check_len("lower bounds", cols, self.lower.len())?;
        check_len("upper bounds", cols, self.upper.len())?;
        check_len("objective", cols, self.w.len())?;
        for (l, u) in self.lower.iter().zip(&self.upper) {
            if l > u || *l == Bound::PosInf || *u == Bound::NegInf {
                return Err(Error::Precondition("lower bound exceeds upper bound".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.constraint.cols()
    }

    pub fn objective(&self, x: &[i64]) -> Result<i64> {
        check_len("objective", self.w.len(), x.len())?;
        self.w
            .iter()
            .zip(x)
            .try_fold(0i64, |acc, (a, b)| add(acc, mul(*a, *b)?))
    }

    pub fn within_bounds(&self, x: &[i64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l.le_int(*v) && u.ge_int(*v))
    }

    /// Feasibility of `x`: equality rows and bounds.
    pub fn is_feasible(&self, x: &[i64]) -> Result<bool> {
        if !self.within_bounds(x) {
            return Ok(false);
        }
        let hx = match &self.constraint {
            Constraint::Block { spec, .. } => {
                block_apply(spec, &spec.bricks(x.to_vec())?)?.flatten()
            }
            Constraint::Explicit(m) => apply(m, x)?,
        };
        Ok(hx == self.b)
    }
}
