//! Finite-propagation operators over a [`SpaceFamily`]: block-sparse complex
//! matrices, one block per component.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::space::{Entourage, Point, SpaceFamily};
use crate::system::FullTranslationSystem;
use crate::textio;

pub type C64 = Complex64;

/// Entries with magnitude below this are dropped after arithmetic.
pub const DROP_TOL: f64 = 1e-15;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// One component block in compressed-row form. Entries of a row are sorted
/// by column and all stored values are nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<Point>,
    vals: Vec<C64>,
}

impl Block {
    fn from_sorted(dim: usize, mut trip: Vec<(Point, Point, C64)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<C64> = Vec::with_capacity(trip.len());
        let mut rows: Vec<Point> = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut out_cols = Vec::with_capacity(cols.len());
        let mut out_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v.norm() >= DROP_TOL {
                row_ptr[r as usize + 1] += 1;
                out_cols.push(c);
                out_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            cols: out_cols,
            vals: out_vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (Point, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// Coordinate triplets `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (Point, Point, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r as Point, c, v)))
    }

    pub fn get(&self, r: Point, c: Point) -> C64 {
        let span = self.row_ptr[r as usize]..self.row_ptr[r as usize + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => ZERO,
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, a)| a * v[c as usize]).sum())
            .collect()
    }

    /// Real matrix-vector product; the imaginary parts are ignored.
    pub fn apply_real(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *o = self.cols[span.clone()]
                .iter()
                .zip(&self.vals[span])
                .map(|(&c, a)| a.re * v[c as usize])
                .sum();
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut d = vec![ZERO; self.dim * self.dim];
        for (r, c, v) in self.triplets() {
            d[r as usize * self.dim + c as usize] = v;
        }
        d
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }
}

/// A finite-propagation operator `T = ⊕ T_c`.
#[derive(Debug, Clone)]
pub struct RoeOperator {
    space: Arc<SpaceFamily>,
    blocks: Vec<Block>,
    propagation: u32,
}

impl PartialEq for RoeOperator {
    fn eq(&self, other: &Self) -> bool {
        self.space.fingerprint() == other.space.fingerprint() && self.blocks == other.blocks
    }
}

impl RoeOperator {
    fn from_blocks(space: Arc<SpaceFamily>, blocks: Vec<Block>) -> Self {
        let propagation = blocks
            .iter()
            .enumerate()
            .flat_map(|(c, b)| {
                let comp = space.component(c);
                b.triplets().map(move |(x, y, _)| comp.dist(x, y))
            })
            .max()
            .unwrap_or(0);
        Self {
            space,
            blocks,
            propagation,
        }
    }

    /// Builds from `(component, row, col, value)` triplets; duplicates add up.
    pub fn from_triplets(
        space: Arc<SpaceFamily>,
        triplets: impl IntoIterator<Item = (usize, Point, Point, C64)>,
    ) -> Result<Self> {
        let sizes = space.sizes();
        let mut per: Vec<Vec<(Point, Point, C64)>> = vec![Vec::new(); sizes.len()];
        for (c, r, col, v) in triplets {
            let size = *sizes.get(c).ok_or(Error::InvalidPoint {
                component: c,
                point: r as u64,
                size: 0,
            })?;
            for p in [r, col] {
                if p as usize >= size {
                    return Err(Error::InvalidPoint {
                        component: c,
                        point: p as u64,
                        size,
                    });
                }
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::OutOfRange(format!("non-finite entry at ({r}, {col})")));
            }
            per[c].push((r, col, v));
        }
        let blocks = per
            .into_iter()
            .zip(&sizes)
            .map(|(t, &d)| Block::from_sorted(d, t))
            .collect();
        Ok(Self::from_blocks(space, blocks))
    }

    pub fn zero(space: Arc<SpaceFamily>) -> Self {
        let blocks = space
            .sizes()
            .into_iter()
            .map(|d| Block::from_sorted(d, Vec::new()))
            .collect();
        Self::from_blocks(space, blocks)
    }

    pub fn identity(space: Arc<SpaceFamily>) -> Self {
        Self::diagonal(&DiagonalFunction::constant(&space, ONE), space)
    }

    /// The multiplication operator `T_f`.
    pub fn diagonal(f: &DiagonalFunction, space: Arc<SpaceFamily>) -> Self {
        let blocks = f
            .values
            .iter()
            .map(|vals| {
                let t = vals
                    .iter()
                    .enumerate()
                    .map(|(x, &v)| (x as Point, x as Point, v))
                    .collect();
                Block::from_sorted(vals.len(), t)
            })
            .collect();
        Self::from_blocks(space, blocks)
    }

    /// Operator of the translation `A_i` of a system: 1 at `(A_i(y), y)`.
    pub fn from_translation(
        space: Arc<SpaceFamily>,
        system: &FullTranslationSystem,
        i: usize,
    ) -> Self {
        let blocks = (0..system.num_components())
            .map(|c| {
                let map = system.perm(i, c);
                let t = map
                    .iter()
                    .enumerate()
                    .map(|(y, &x)| (x, y as Point, ONE))
                    .collect();
                Block::from_sorted(map.len(), t)
            })
            .collect();
        Self::from_blocks(space, blocks)
    }

    pub fn space(&self) -> &Arc<SpaceFamily> {
        &self.space
    }

    pub fn block(&self, c: usize) -> &Block {
        &self.blocks[c]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn nnz(&self) -> usize {
        self.blocks.iter().map(Block::nnz).sum()
    }

    /// `max d(x, y)` over the support.
    pub fn propagation(&self) -> u32 {
        self.propagation
    }

    pub fn get(&self, c: usize, x: Point, y: Point) -> C64 {
        self.blocks[c].get(x, y)
    }

    /// `(component, x, y)` for every stored entry.
    pub fn support(&self) -> impl Iterator<Item = (usize, Point, Point)> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(c, b)| b.triplets().map(move |(x, y, _)| (c, x, y)))
    }

    pub fn supported_in(&self, e: &Entourage) -> bool {
        e.fingerprint() == self.space.fingerprint()
            && self.support().all(|(c, x, y)| e.contains(c, x, y))
    }

    pub fn sup_entry(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.vals.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space)
            || self.space.fingerprint() == other.space.fingerprint()
        {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    fn combine(&self, other: &Self, b: C64) -> Result<Self> {
        self.same_space(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(x, y)| {
                let t = x
                    .triplets()
                    .chain(y.triplets().map(|(r, c, v)| (r, c, b * v)))
                    .collect();
                Block::from_sorted(x.dim, t)
            })
            .collect();
        Ok(Self::from_blocks(self.space.clone(), blocks))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, ONE)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -ONE)
    }

    pub fn scale(&self, a: C64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block::from_sorted(b.dim, b.triplets().map(|(r, c, v)| (r, c, a * v)).collect()))
            .collect();
        Self::from_blocks(self.space.clone(), blocks)
    }

    /// Block-wise sparse product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let blocks: Vec<Block> = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let n = a.dim;
                let mut acc = vec![ZERO; n];
                let mut used = vec![false; n];
                let mut touched: Vec<Point> = Vec::new();
                let mut t = Vec::new();
                for r in 0..n {
                    for (k, av) in a.row(r) {
                        for (c, bv) in b.row(k as usize) {
                            if !used[c as usize] {
                                used[c as usize] = true;
                                touched.push(c);
                            }
                            acc[c as usize] += av * bv;
                        }
                    }
                    for &c in &touched {
                        t.push((r as Point, c, acc[c as usize]));
                        acc[c as usize] = ZERO;
                        used[c as usize] = false;
                    }
                    touched.clear();
                }
                Block::from_sorted(n, t)
            })
            .collect();
        let out = Self::from_blocks(self.space.clone(), blocks);
        assert!(
            out.propagation <= self.propagation + other.propagation,
            "propagation is subadditive under products"
        );
        Ok(out)
    }

    /// Conjugate transpose `T*(x, y) = conj(T(y, x))`.
    pub fn adjoint(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block::from_sorted(b.dim, b.triplets().map(|(r, c, v)| (c, r, v.conj())).collect()))
            .collect();
        Self {
            space: self.space.clone(),
            blocks,
            propagation: self.propagation,
        }
    }

    /// Row sums `Φ(T)(x) = Σ_y T_{xy}`.
    pub fn phi(&self) -> DiagonalFunction {
        DiagonalFunction {
            values: self
                .blocks
                .iter()
                .map(|b| (0..b.dim).map(|r| b.row(r).map(|(_, v)| v).sum()).collect())
                .collect(),
        }
    }

    /// `T_f · T`: scales row `x` by `f(x)`.
    pub fn left_mul_diag(&self, f: &DiagonalFunction) -> Self {
        let blocks = self
            .blocks
            .iter()
            .zip(&f.values)
            .map(|(b, fv)| {
                Block::from_sorted(
                    b.dim,
                    b.triplets().map(|(r, c, v)| (r, c, fv[r as usize] * v)).collect(),
                )
            })
            .collect();
        Self::from_blocks(self.space.clone(), blocks)
    }

    /// `T · T_f`: scales column `y` by `f(y)`.
    pub fn right_mul_diag(&self, f: &DiagonalFunction) -> Self {
        let blocks = self
            .blocks
            .iter()
            .zip(&f.values)
            .map(|(b, fv)| {
                Block::from_sorted(
                    b.dim,
                    b.triplets().map(|(r, c, v)| (r, c, v * fv[c as usize])).collect(),
                )
            })
            .collect();
        Self::from_blocks(self.space.clone(), blocks)
    }

    /// Matrix-vector product on one component.
    pub fn apply_block(&self, c: usize, v: &[C64]) -> Result<Vec<C64>> {
        let b = self.blocks.get(c).ok_or(Error::DimensionMismatch {
            expected: self.blocks.len(),
            got: c,
        })?;
        if v.len() != b.dim {
            return Err(Error::DimensionMismatch {
                expected: b.dim,
                got: v.len(),
            });
        }
        Ok(b.apply(v))
    }

    /// Matrix-vector product on the concatenation of all components.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let total = self.space.total_points();
        if v.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: v.len(),
            });
        }
        let mut out = Vec::with_capacity(total);
        let mut start = 0;
        for b in &self.blocks {
            out.extend(b.apply(&v[start..start + b.dim]));
            start += b.dim;
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("roeop v1\n");
        for (c, b) in self.blocks.iter().enumerate() {
            for (r, col, v) in b.triplets() {
                let _ = writeln!(s, "entry {c} {r} {col} {:?} {:?}", v.re, v.im);
            }
        }
        s
    }

    pub fn from_text(space: Arc<SpaceFamily>, input: &str) -> Result<Self> {
        let recs = textio::records(input);
        textio::expect_header(&recs, "roeop")?;
        let mut trip = Vec::new();
        for rec in &recs[1..] {
            if rec.keyword() != "entry" {
                return Err(rec.error(0, format!("unknown record `{}`", rec.keyword())));
            }
            rec.expect_len(6)?;
            let c: usize = rec.field(1, "component")?;
            let r: Point = rec.field(2, "row")?;
            let col: Point = rec.field(3, "column")?;
            let re: f64 = rec.field(4, "real part")?;
            let im: f64 = rec.field(5, "imaginary part")?;
            if c >= space.len() || r as usize >= space.component(c).size() || col as usize >= space.component(c).size() {
                return Err(rec.error(1, "entry outside the space"));
            }
            trip.push((c, r, col, C64::new(re, im)));
        }
        Self::from_triplets(space, trip)
    }
}

/// A function on the family, acting as a diagonal operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalFunction {
    pub values: Vec<Vec<C64>>,
}

impl DiagonalFunction {
    pub fn zeros(space: &SpaceFamily) -> Self {
        Self::constant(space, ZERO)
    }

    pub fn constant(space: &SpaceFamily, v: C64) -> Self {
        Self {
            values: space.sizes().into_iter().map(|d| vec![v; d]).collect(),
        }
    }

    /// `χ_B` for `B` given as point lists per component.
    pub fn indicator(space: &SpaceFamily, sets: &[Vec<Point>]) -> Self {
        let mut f = Self::zeros(space);
        for (c, set) in sets.iter().enumerate() {
            for &x in set {
                f.values[c][x as usize] = ONE;
            }
        }
        f
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Whether every value is exactly 0 or 1.
    pub fn is_indicator(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == ZERO || v == ONE)
    }

    pub fn linear_combination(&self, a: C64, other: &Self, b: C64) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x.iter().zip(y).map(|(&u, &v)| a * u + b * v).collect())
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// A partial injection `t: D → R` inside one component at a time. A pair
/// `(x, y)` means `t(y) = x`, i.e. `V_{xy} = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialTranslation {
    /// Sorted by `x`, per component.
    pairs: Vec<Vec<(Point, Point)>>,
}

impl PartialTranslation {
    pub fn new(space: &SpaceFamily, pairs: impl IntoIterator<Item = (usize, Point, Point)>) -> Result<Self> {
        let sizes = space.sizes();
        let mut per: Vec<Vec<(Point, Point)>> = vec![Vec::new(); sizes.len()];
        for (c, x, y) in pairs {
            let size = *sizes.get(c).ok_or(Error::InvalidPoint {
                component: c,
                point: x as u64,
                size: 0,
            })?;
            for p in [x, y] {
                if p as usize >= size {
                    return Err(Error::InvalidPoint {
                        component: c,
                        point: p as u64,
                        size,
                    });
                }
            }
            per[c].push((x, y));
        }
        for (c, list) in per.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            let mut seen_x = vec![false; sizes[c]];
            let mut seen_y = vec![false; sizes[c]];
            for &(x, y) in list.iter() {
                if seen_x[x as usize] || seen_y[y as usize] {
                    return Err(Error::NotPartialInjection { component: c, x, y });
                }
                seen_x[x as usize] = true;
                seen_y[y as usize] = true;
            }
        }
        Ok(Self { pairs: per })
    }

    pub fn empty(space: &SpaceFamily) -> Self {
        Self {
            pairs: vec![Vec::new(); space.len()],
        }
    }

    pub fn identity_on(space: &SpaceFamily, sets: &[Vec<Point>]) -> Result<Self> {
        Self::new(
            space,
            sets.iter()
                .enumerate()
                .flat_map(|(c, s)| s.iter().map(move |&x| (c, x, x))),
        )
    }

    pub fn pairs(&self, c: usize) -> &[(Point, Point)] {
        &self.pairs[c]
    }

    pub fn all_pairs(&self) -> impl Iterator<Item = (usize, Point, Point)> + '_ {
        self.pairs
            .iter()
            .enumerate()
            .flat_map(|(c, l)| l.iter().map(move |&(x, y)| (c, x, y)))
    }

    pub fn num_components(&self) -> usize {
        self.pairs.len()
    }

    pub fn len(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self, c: usize) -> Vec<Point> {
        let mut d: Vec<Point> = self.pairs[c].iter().map(|p| p.1).collect();
        d.sort_unstable();
        d
    }

    pub fn range(&self, c: usize) -> Vec<Point> {
        self.pairs[c].iter().map(|p| p.0).collect()
    }

    pub fn within(&self, e: &Entourage) -> bool {
        self.all_pairs().all(|(c, x, y)| e.contains(c, x, y))
    }

    pub fn to_operator(&self, space: Arc<SpaceFamily>) -> RoeOperator {
        RoeOperator::from_triplets(space, self.all_pairs().map(|(c, x, y)| (c, x, y, ONE)))
            .expect("validated on construction")
    }

    /// Recovers the partial injection from an operator whose entries form a
    /// 0/1 partial-injection pattern.
    pub fn from_operator(t: &RoeOperator) -> Option<Self> {
        let mut pairs = Vec::new();
        for (c, b) in t.blocks().iter().enumerate() {
            for (x, y, v) in b.triplets() {
                if v != ONE {
                    return None;
                }
                pairs.push((c, x, y));
            }
        }
        Self::new(t.space(), pairs).ok()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("pt v1\n");
        for (c, x, y) in self.all_pairs() {
            let _ = writeln!(s, "pair {c} {x} {y}");
        }
        s
    }

    pub fn from_text(space: &SpaceFamily, input: &str) -> Result<Self> {
        let recs = textio::records(input);
        textio::expect_header(&recs, "pt")?;
        let mut pairs = Vec::new();
        for rec in &recs[1..] {
            if rec.keyword() != "pair" {
                return Err(rec.error(0, format!("unknown record `{}`", rec.keyword())));
            }
            rec.expect_len(4)?;
            let c: usize = rec.field(1, "component")?;
            let x: Point = rec.field(2, "point")?;
            let y: Point = rec.field(3, "point")?;
            if c >= space.len() {
                return Err(rec.error(1, format!("component {c} does not exist")));
            }
            pairs.push((c, x, y));
        }
        Self::new(space, pairs)
    }
}

/// Upper bound for the ℓ¹-norm: routes every entry `(x, y)` of `T` to the
/// lowest-indexed `A_i` with `A_i(y) = x`, giving `T = Σ f_i A_i`, and
/// returns `Σ_i ‖f_i‖_∞`.
pub fn l1_norm_upper(t: &RoeOperator, system: &FullTranslationSystem) -> Result<f64> {
    let mut sup = vec![0.0f64; system.len()];
    for (c, b) in t.blocks().iter().enumerate() {
        for (x, y, v) in b.triplets() {
            let i = system
                .route(c, x, y)
                .ok_or(Error::SupportNotCovered { component: c, x, y })?;
            sup[i] = sup[i].max(v.norm());
        }
    }
    Ok(sup.iter().sum())
}
