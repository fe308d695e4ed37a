use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::roe::{RoeOperator, C64};
use crate::space::{Point, SpaceFamily};
use crate::system::FullTranslationSystem;

/// Whether `A_0 = id` takes part in the average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub enum IdentityMode {
    /// Average over the system exactly as given.
    #[default]
    Include,
    /// Drop `A_0`; the average runs over `A_1, …, A_n`.
    Exclude,
}

/// Real compressed-row matrix used by the iterative solvers.
#[derive(Debug, Clone)]
pub struct RealCsr {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl RealCsr {
    fn from_triplets(dim: usize, mut t: Vec<(Point, Point, f64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &t {
            row_ptr[r as usize + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            cols: t.iter().map(|e| e.1).collect(),
            vals: t.iter().map(|e| e.2).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            *o = s;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[(r, self.cols[k] as usize)] = self.vals[k];
            }
        }
        d
    }
}

/// Integer numerators `c_xy = #{i : A_i(y) = x}` for one component.
fn hit_counts(system: &FullTranslationSystem, c: usize, range: std::ops::Range<usize>) -> Vec<(Point, Point, u32)> {
    let mut hits: Vec<(Point, Point)> = range
        .flat_map(|i| {
            system
                .perm(i, c)
                .iter()
                .enumerate()
                .map(|(y, &x)| (x, y as Point))
        })
        .collect();
    hits.sort_unstable();
    let mut out: Vec<(Point, Point, u32)> = Vec::new();
    for (x, y) in hits {
        match out.last_mut() {
            Some(last) if last.0 == x && last.1 == y => last.2 += 1,
            _ => out.push((x, y, 1)),
        }
    }
    out
}

/// Adds `v` to every diagonal numerator of a sorted triplet list.
fn add_diagonal<T: Copy + std::ops::AddAssign>(num: &mut Vec<(Point, Point, T)>, m: usize, v: T) {
    for x in 0..m as Point {
        match num.binary_search_by_key(&(x, x), |e| (e.0, e.1)) {
            Ok(i) => num[i].2 += v,
            Err(i) => num.insert(i, (x, x, v)),
        }
    }
}

fn averaged_range(system: &FullTranslationSystem, mode: IdentityMode) -> Result<std::ops::Range<usize>> {
    let r = match mode {
        IdentityMode::Include => 0..system.len(),
        IdentityMode::Exclude => 1..system.len(),
    };
    if r.is_empty() {
        return Err(Error::EmptySystem);
    }
    Ok(r)
}

fn check_space(space: &SpaceFamily, system: &FullTranslationSystem) -> Result<()> {
    if system.entourage().fingerprint() != space.fingerprint() {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// `Δ = 1 - (1/n) Σ A_i` over the averaged translations.
pub fn laplacian(space: Arc<SpaceFamily>, system: &FullTranslationSystem, mode: IdentityMode) -> Result<RoeOperator> {
    check_space(&space, system)?;
    let range = averaged_range(system, mode)?;
    let n = range.len();
    let nf = n as f64;
    let mut trip = Vec::new();
    for c in 0..system.num_components() {
        let mut num: Vec<(Point, Point, i64)> = hit_counts(system, c, range.clone())
            .into_iter()
            .map(|(x, y, k)| (x, y, -(k as i64)))
            .collect();
        add_diagonal(&mut num, space.component(c).size(), n as i64);
        trip.extend(
            num.into_iter()
                .filter(|e| e.2 != 0)
                .map(|(x, y, k)| (c, x, y, C64::new(k as f64 / nf, 0.0))),
        );
    }
    RoeOperator::from_triplets(space, trip)
}

/// `A = 1 - Δ/2 = (1/n) Σ (1 + A_i)/2` together with its solver views.
#[derive(Debug, Clone)]
pub struct MarkovOperator {
    op: RoeOperator,
    n: usize,
    symmetric: bool,
    mode: IdentityMode,
    system: Arc<FullTranslationSystem>,
    csr: Vec<RealCsr>,
    csr_t: Vec<RealCsr>,
}

/// Builds the Markov operator. Every entry is `k / (2n)` for an integer `k`;
/// row and column numerators are checked to sum to exactly `2n`.
pub fn markov(space: Arc<SpaceFamily>, system: &FullTranslationSystem, mode: IdentityMode) -> Result<MarkovOperator> {
    check_space(&space, system)?;
    let range = averaged_range(system, mode)?;
    let n = range.len();
    let two_n = 2 * n as u64;
    let mut trip = Vec::new();
    let mut csr = Vec::new();
    let mut csr_t = Vec::new();
    let mut symmetric = true;
    for c in 0..system.num_components() {
        let m = space.component(c).size();
        let mut num: Vec<(Point, Point, u64)> = hit_counts(system, c, range.clone())
            .into_iter()
            .map(|(x, y, k)| (x, y, k as u64))
            .collect();
        // the `1` in (1 + A_i)/2, n times
        add_diagonal(&mut num, m, n as u64);
        let mut rows = vec![0u64; m];
        let mut cols = vec![0u64; m];
        for &(x, y, k) in &num {
            rows[x as usize] += k;
            cols[y as usize] += k;
        }
        if rows.iter().chain(&cols).any(|&s| s != two_n) {
            return Err(Error::InvalidSystem(format!(
                "Markov numerators of component {c} are not doubly stochastic"
            )));
        }
        let lookup = |x: Point, y: Point| {
            num.binary_search_by_key(&(x, y), |e| (e.0, e.1))
                .map(|i| num[i].2)
                .unwrap_or(0)
        };
        if num.iter().any(|&(x, y, k)| lookup(y, x) != k) {
            symmetric = false;
        }
        let real: Vec<(Point, Point, f64)> = num
            .iter()
            .map(|&(x, y, k)| (x, y, k as f64 / two_n as f64))
            .collect();
        trip.extend(real.iter().map(|&(x, y, v)| (c, x, y, C64::new(v, 0.0))));
        csr_t.push(RealCsr::from_triplets(m, real.iter().map(|&(x, y, v)| (y, x, v)).collect()));
        csr.push(RealCsr::from_triplets(m, real));
    }
    let op = RoeOperator::from_triplets(space, trip)?;
    Ok(MarkovOperator {
        op,
        n,
        symmetric,
        mode,
        system: Arc::new(system.clone()),
        csr,
        csr_t,
    })
}

impl MarkovOperator {
    pub fn operator(&self) -> &RoeOperator {
        &self.op
    }

    pub fn space(&self) -> &Arc<SpaceFamily> {
        self.op.space()
    }

    /// Number of translations averaged.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn identity_mode(&self) -> IdentityMode {
        self.mode
    }

    pub fn system(&self) -> &Arc<FullTranslationSystem> {
        &self.system
    }

    /// Indices of the averaged translations.
    pub fn averaged(&self) -> std::ops::Range<usize> {
        match self.mode {
            IdentityMode::Include => 0..self.system.len(),
            IdentityMode::Exclude => 1..self.system.len(),
        }
    }

    pub fn num_components(&self) -> usize {
        self.csr.len()
    }

    pub fn dim(&self, c: usize) -> usize {
        self.csr[c].dim
    }

    pub fn csr(&self, c: usize) -> &RealCsr {
        &self.csr[c]
    }

    /// `out = (A - P) x` on component `c`.
    pub fn apply_m(&self, c: usize, x: &[f64], out: &mut [f64]) {
        self.csr[c].apply(x, out);
        subtract_mean(x, out);
    }

    /// `out = (A - P)ᵀ x` on component `c`.
    pub fn apply_mt(&self, c: usize, x: &[f64], out: &mut [f64]) {
        self.csr_t[c].apply(x, out);
        subtract_mean(x, out);
    }

    /// Dense `A - P` for component `c`, formed entry by entry.
    pub fn dense_m(&self, c: usize) -> DMatrix<f64> {
        let m = self.dim(c);
        let inv = 1.0 / m as f64;
        let mut d = self.csr[c].to_dense();
        d.iter_mut().for_each(|v| *v -= inv);
        d
    }
}

fn subtract_mean(x: &[f64], out: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    out.iter_mut().for_each(|o| *o -= mean);
}

/// The per-component averaging projectors `P`, all entries `1/k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantProjector {
    sizes: Vec<usize>,
}

impl InvariantProjector {
    pub fn new(space: &SpaceFamily) -> Self {
        Self { sizes: space.sizes() }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `P` as a (dense-block) operator; `scale = k` gives the averaging
    /// matrix with all entries 1.
    pub fn to_operator(&self, space: Arc<SpaceFamily>, unnormalized: bool) -> Result<RoeOperator> {
        if space.sizes() != self.sizes {
            return Err(Error::SpaceMismatch);
        }
        let mut trip = Vec::new();
        for (c, &k) in self.sizes.iter().enumerate() {
            let v = if unnormalized { 1.0 } else { 1.0 / k as f64 };
            for x in 0..k as Point {
                for y in 0..k as Point {
                    trip.push((c, x, y, C64::new(v, 0.0)));
                }
            }
        }
        RoeOperator::from_triplets(space, trip)
    }

    /// `out = P x` on component `c`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        out.iter_mut().for_each(|o| *o = mean);
    }

    /// `max |(T · kP)_{xy} - (Φ(T) · kP)_{xy}|`. Every column of `kP` is the
    /// all-ones vector, so both products have identical columns `T·1` and
    /// `Φ(T)`, compared here entry by entry.
    pub fn averaging_defect(&self, t: &RoeOperator) -> f64 {
        let phi = t.phi();
        let mut worst: f64 = 0.0;
        for (c, &k) in self.sizes.iter().enumerate() {
            let ones = vec![C64::new(1.0, 0.0); k];
            let col = t.apply_block(c, &ones).expect("sizes checked");
            for (a, b) in col.iter().zip(&phi.values[c]) {
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }
}
