//! Separated disjoint unions of finite metric spaces and their coarse
//! structure.
//!
//! Every component carries an exact integer distance table. Points of
//! different components are infinitely far apart; that is encoded by the
//! component split itself and never by a sentinel inside a table.

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::textio;

/// Local index of a point inside its component.
pub type Point = u32;

/// One finite connected metric space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    size: usize,
    edges: Vec<(Point, Point)>,
    dist: Vec<u32>,
    diameter: u32,
    /// `ball_profile[r]` is the largest `#B(x, r)` over all `x`, for `r <= diameter`.
    ball_profile: Vec<usize>,
}

impl Component {
    /// Builds a component with the unit-weight shortest-path metric of `edges`.
    pub fn from_edges(index: usize, size: usize, edges: &[(Point, Point)]) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyComponent { component: index });
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for w in [u, v] {
                if w as usize >= size {
                    return Err(Error::InvalidPoint {
                        component: index,
                        point: w as u64,
                        size,
                    });
                }
            }
            if u != v {
                norm.push((u.min(v), u.max(v)));
            }
        }
        norm.sort_unstable();
        norm.dedup();

        let mut adj = vec![Vec::new(); size];
        for &(u, v) in &norm {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }

        let mut dist = vec![u32::MAX; size * size];
        let mut queue = VecDeque::new();
        for s in 0..size {
            let row = &mut dist[s * size..(s + 1) * size];
            row[s] = 0;
            queue.push_back(s as Point);
            while let Some(x) = queue.pop_front() {
                let dx = row[x as usize];
                for &y in &adj[x as usize] {
                    if row[y as usize] == u32::MAX {
                        row[y as usize] = dx + 1;
                        queue.push_back(y);
                    }
                }
            }
            if let Some(p) = row.iter().position(|&d| d == u32::MAX) {
                return Err(Error::DisconnectedComponent {
                    component: index,
                    point: p as Point,
                });
            }
        }
        Ok(Self::with_table(size, norm, dist))
    }

    /// Builds a component from an explicit distance table (row-major).
    ///
    /// The table must be symmetric with zero exactly on the diagonal; the
    /// triangle inequality is the caller's responsibility (see
    /// [`Component::validate_metric`]). `edges` records the generating scale
    /// used when the component is exported.
    pub fn from_metric(
        index: usize,
        size: usize,
        dist: Vec<u32>,
        edges: Vec<(Point, Point)>,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyComponent { component: index });
        }
        if dist.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                got: dist.len(),
            });
        }
        for x in 0..size {
            for y in 0..size {
                let d = dist[x * size + y];
                if (d == 0) != (x == y) || d != dist[y * size + x] || d == u32::MAX {
                    return Err(Error::InvalidMetric {
                        component: index,
                        reason: format!("bad entry d({x}, {y}) = {d}"),
                    });
                }
            }
        }
        Ok(Self::with_table(size, edges, dist))
    }

    fn with_table(size: usize, edges: Vec<(Point, Point)>, dist: Vec<u32>) -> Self {
        let diameter = dist.iter().copied().max().unwrap_or(0);
        let mut profile = vec![0usize; diameter as usize + 1];
        let mut hist = vec![0usize; diameter as usize + 1];
        for x in 0..size {
            hist.iter_mut().for_each(|h| *h = 0);
            for &d in &dist[x * size..(x + 1) * size] {
                hist[d as usize] += 1;
            }
            let mut acc = 0;
            for (r, h) in hist.iter().enumerate() {
                acc += h;
                profile[r] = profile[r].max(acc);
            }
        }
        Self {
            size,
            edges,
            dist,
            diameter,
            ball_profile: profile,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn edges(&self) -> &[(Point, Point)] {
        &self.edges
    }

    #[inline]
    pub fn dist(&self, x: Point, y: Point) -> u32 {
        self.dist[x as usize * self.size + y as usize]
    }

    pub fn distance_row(&self, x: Point) -> &[u32] {
        &self.dist[x as usize * self.size..(x as usize + 1) * self.size]
    }

    pub fn diameter(&self) -> u32 {
        self.diameter
    }

    /// Largest ball cardinality `max_x #B(x, r)`.
    pub fn max_ball(&self, r: u32) -> usize {
        self.ball_profile
            .get(r as usize)
            .copied()
            .unwrap_or(self.size)
    }

    pub fn ball_profile(&self) -> &[usize] {
        &self.ball_profile
    }

    pub fn ball(&self, x: Point, r: u32) -> Vec<Point> {
        self.distance_row(x)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= r)
            .map(|(y, _)| y as Point)
            .collect()
    }

    /// Sorted neighbour lists of the stored edge set.
    pub fn adjacency(&self) -> Vec<Vec<Point>> {
        let mut adj = vec![Vec::new(); self.size];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        adj
    }

    /// Exhaustive metric-axiom check. Cubic in the component size.
    pub fn validate_metric(&self) -> std::result::Result<(), String> {
        let m = self.size as Point;
        for x in 0..m {
            for y in 0..m {
                let d = self.dist(x, y);
                if (d == 0) != (x == y) {
                    return Err(format!("d({x}, {y}) = {d} breaks zero-diagonal"));
                }
                if d != self.dist(y, x) {
                    return Err(format!("d({x}, {y}) is not symmetric"));
                }
                for z in 0..m {
                    if d > self.dist(x, z) + self.dist(z, y) {
                        return Err(format!("triangle fails at ({x}, {z}, {y})"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A separated disjoint union of finite components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceFamily {
    components: Vec<Component>,
    fingerprint: u64,
}

impl SpaceFamily {
    pub fn new(components: Vec<Component>) -> Self {
        let mut h = DefaultHasher::new();
        components.len().hash(&mut h);
        for c in &components {
            c.size.hash(&mut h);
            c.dist.hash(&mut h);
        }
        Self {
            components,
            fingerprint: h.finish(),
        }
    }

    /// Builds a family from one edge list per component: `(point count, edges)`.
    pub fn from_edge_lists(lists: &[(usize, Vec<(Point, Point)>)]) -> Result<Self> {
        let comps = lists
            .iter()
            .enumerate()
            .map(|(i, (size, edges))| Component::from_edges(i, *size, edges))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(comps))
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, c: usize) -> &Component {
        &self.components[c]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_points(&self) -> usize {
        self.components.iter().map(|c| c.size).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.size).collect()
    }

    /// Start offset of every component in the concatenated point order.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.components
            .iter()
            .map(|c| {
                let o = acc;
                acc += c.size;
                o
            })
            .collect()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Uniform bounded-geometry constant `max_x #B(x, r)` over the family.
    pub fn max_ball(&self, r: u32) -> usize {
        self.components
            .iter()
            .map(|c| c.max_ball(r))
            .max()
            .unwrap_or(0)
    }

    /// The `R`-diagonal `{(x, y) : d(x, y) <= R}`.
    pub fn r_diagonal(&self, radius: u32) -> Entourage {
        let rows = self
            .components
            .iter()
            .map(|c| (0..c.size as Point).map(|x| c.ball(x, radius)).collect())
            .collect();
        Entourage {
            fingerprint: self.fingerprint,
            form: EntourageForm::Radius(radius),
            rows,
        }
    }

    /// Explicit entourage from pairs `(component, x, y)`.
    pub fn entourage_from_pairs(
        &self,
        pairs: impl IntoIterator<Item = (usize, Point, Point)>,
    ) -> Result<Entourage> {
        let mut rows: Vec<Vec<Vec<Point>>> =
            self.components.iter().map(|c| vec![Vec::new(); c.size]).collect();
        for (c, x, y) in pairs {
            let comp = self.components.get(c).ok_or(Error::InvalidPoint {
                component: c,
                point: x as u64,
                size: 0,
            })?;
            for p in [x, y] {
                if p as usize >= comp.size {
                    return Err(Error::InvalidPoint {
                        component: c,
                        point: p as u64,
                        size: comp.size,
                    });
                }
            }
            rows[c][x as usize].push(y);
        }
        for comp in &mut rows {
            for row in comp.iter_mut() {
                row.sort_unstable();
                row.dedup();
            }
        }
        Ok(Entourage {
            fingerprint: self.fingerprint,
            form: EntourageForm::Explicit,
            rows,
        })
    }

    fn check(&self, e: &Entourage) -> Result<()> {
        if e.fingerprint != self.fingerprint {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// `E ∘ F = {(x, y) : ∃z, (x, z) ∈ E, (z, y) ∈ F}`.
    pub fn compose(&self, e: &Entourage, f: &Entourage) -> Result<Entourage> {
        self.check(e)?;
        self.check(f)?;
        let rows = e
            .rows
            .iter()
            .zip(&f.rows)
            .map(|(er, fr)| compose_rows(er, fr))
            .collect();
        Ok(Entourage {
            fingerprint: self.fingerprint,
            form: EntourageForm::Explicit,
            rows,
        })
    }

    /// Smallest `n <= n_max` with `F ⊆ E0^{∘n}`.
    pub fn check_monogenic(&self, e0: &Entourage, f: &Entourage, n_max: usize) -> Option<usize> {
        if self.check(e0).is_err() || self.check(f).is_err() {
            return None;
        }
        let mut power = e0.clone();
        for n in 1..=n_max {
            if f.is_subset(&power) {
                return Some(n);
            }
            if n < n_max {
                let next = self.compose(&power, e0).ok()?;
                if next.rows == power.rows {
                    // The powers have stabilised, nothing further is reachable.
                    return None;
                }
                power = next;
            }
        }
        None
    }

    /// Greedy maximal `R`-separated subset of every component, scanned in
    /// ascending point order, with the restricted metric.
    pub fn extract_net(&self, radius: u32) -> Result<Net> {
        if radius == 0 {
            return Err(Error::OutOfRange("net radius must be >= 1".into()));
        }
        let mut comps = Vec::with_capacity(self.len());
        let mut inclusion = Vec::with_capacity(self.len());
        for (ci, c) in self.components.iter().enumerate() {
            let mut chosen: Vec<Point> = Vec::new();
            for x in 0..c.size as Point {
                if chosen.iter().all(|&y| c.dist(x, y) >= radius) {
                    chosen.push(x);
                }
            }
            let k = chosen.len();
            let mut dist = vec![0u32; k * k];
            let mut edges = Vec::new();
            for (i, &x) in chosen.iter().enumerate() {
                for (j, &y) in chosen.iter().enumerate() {
                    let d = c.dist(x, y);
                    dist[i * k + j] = d;
                    // Nearest-neighbour scale that keeps the net connected.
                    if i < j && d < 2 * radius {
                        edges.push((i as Point, j as Point));
                    }
                }
            }
            comps.push(Component::from_metric(ci, k, dist, edges)?);
            inclusion.push(chosen);
        }
        Ok(Net {
            space: SpaceFamily::new(comps),
            inclusion,
        })
    }

    /// `X × {1..N}` with `d((x,i),(y,j)) = d(x,y) + |i - j|`. Point `(x, i)`
    /// gets local index `(i - 1) * m + x`.
    pub fn amplify(&self, layers: usize) -> Result<SpaceFamily> {
        if layers == 0 {
            return Err(Error::OutOfRange("amplification needs N >= 1".into()));
        }
        let mut comps = Vec::with_capacity(self.len());
        for (ci, c) in self.components.iter().enumerate() {
            let m = c.size;
            let big = m * layers;
            let mut dist = vec![0u32; big * big];
            for i in 0..layers {
                for x in 0..m {
                    let row = (i * m + x) * big;
                    for j in 0..layers {
                        let lift = i.abs_diff(j) as u32;
                        for y in 0..m {
                            dist[row + j * m + y] = c.dist[x * m + y] + lift;
                        }
                    }
                }
            }
            let mut edges = Vec::new();
            for i in 0..layers {
                let base = (i * m) as Point;
                edges.extend(c.edges.iter().map(|&(u, v)| (base + u, base + v)));
                if i + 1 < layers {
                    edges.extend((0..m as Point).map(|x| (base + x, base + m as Point + x)));
                }
            }
            edges.sort_unstable();
            comps.push(Component::from_metric(ci, big, dist, edges)?);
        }
        Ok(SpaceFamily::new(comps))
    }

    /// `space v1` text form.
    pub fn to_text(&self) -> String {
        let mut s = String::from("space v1\n");
        for (i, c) in self.components.iter().enumerate() {
            let _ = writeln!(s, "component {i} {}", c.size);
            for &(u, v) in &c.edges {
                let _ = writeln!(s, "edge {u} {v}");
            }
        }
        s
    }

    /// Adjacency dump, one `<component> <point>: <neighbours>` line per point.
    pub fn adjacency_text(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.components.iter().enumerate() {
            for (x, nbrs) in c.adjacency().iter().enumerate() {
                let list: Vec<String> = nbrs.iter().map(|n| n.to_string()).collect();
                let _ = writeln!(s, "{i} {x}: {}", list.join(" "));
            }
        }
        s
    }

    /// Parses `space v1` and rebuilds the shortest-path metric.
    pub fn from_text(input: &str) -> Result<Self> {
        let recs = textio::records(input);
        textio::expect_header(&recs, "space")?;
        let mut lists: Vec<(usize, Vec<(Point, Point)>)> = Vec::new();
        for rec in &recs[1..] {
            match rec.keyword() {
                "component" => {
                    rec.expect_len(3)?;
                    let id: usize = rec.field(1, "component id")?;
                    if id != lists.len() {
                        return Err(rec.error(1, format!("expected component {}", lists.len())));
                    }
                    let size: usize = rec.field(2, "point count")?;
                    lists.push((size, Vec::new()));
                }
                "edge" => {
                    rec.expect_len(3)?;
                    let u: Point = rec.field(1, "endpoint")?;
                    let v: Point = rec.field(2, "endpoint")?;
                    let (size, edges) = lists
                        .last_mut()
                        .ok_or_else(|| rec.error(0, "edge before any component"))?;
                    for (idx, w) in [(1, u), (2, v)] {
                        if w as usize >= *size {
                            return Err(rec.error(idx, format!("point {w} out of range")));
                        }
                    }
                    edges.push((u, v));
                }
                other => return Err(rec.error(0, format!("unknown record `{other}`"))),
            }
        }
        Self::from_edge_lists(&lists)
    }
}

fn compose_rows(e: &[Vec<Point>], f: &[Vec<Point>]) -> Vec<Vec<Point>> {
    let m = e.len();
    let mut mark = vec![false; m];
    let mut out = Vec::with_capacity(m);
    for row in e {
        let mut hit = Vec::new();
        for &z in row {
            for &y in &f[z as usize] {
                if !mark[y as usize] {
                    mark[y as usize] = true;
                    hit.push(y);
                }
            }
        }
        for &y in &hit {
            mark[y as usize] = false;
        }
        hit.sort_unstable();
        out.push(hit);
    }
    out
}

/// A net together with its inclusion into the ambient family.
#[derive(Debug, Clone)]
pub struct Net {
    pub space: SpaceFamily,
    /// `inclusion[c][i]` is the ambient point of net point `i` in component `c`.
    pub inclusion: Vec<Vec<Point>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntourageForm {
    /// Exactly `Δ_R`.
    Radius(u32),
    Explicit,
}

/// A set of point pairs, each inside a single component, stored as sorted
/// rows: `(x, y) ∈ E` iff `y ∈ rows[c][x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entourage {
    fingerprint: u64,
    form: EntourageForm,
    rows: Vec<Vec<Vec<Point>>>,
}

impl Entourage {
    pub fn form(&self) -> EntourageForm {
        self.form
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn row(&self, c: usize, x: Point) -> &[Point] {
        &self.rows[c][x as usize]
    }

    pub fn component_rows(&self, c: usize) -> &[Vec<Point>] {
        &self.rows[c]
    }

    pub fn num_components(&self) -> usize {
        self.rows.len()
    }

    pub fn contains(&self, c: usize, x: Point, y: Point) -> bool {
        self.rows
            .get(c)
            .and_then(|r| r.get(x as usize))
            .is_some_and(|r| r.binary_search(&y).is_ok())
    }

    pub fn pair_count(&self) -> usize {
        self.rows.iter().flatten().map(Vec::len).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, Point, Point)> + '_ {
        self.rows.iter().enumerate().flat_map(|(c, comp)| {
            comp.iter()
                .enumerate()
                .flat_map(move |(x, row)| row.iter().map(move |&y| (c, x as Point, y)))
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs().all(|(c, x, y)| self.contains(c, y, x))
    }

    pub fn contains_diagonal(&self) -> bool {
        self.rows.iter().all(|comp| {
            comp.iter()
                .enumerate()
                .all(|(x, row)| row.binary_search(&(x as Point)).is_ok())
        })
    }

    pub fn is_subset(&self, other: &Entourage) -> bool {
        self.fingerprint == other.fingerprint
            && self.pairs().all(|(c, x, y)| other.contains(c, x, y))
    }

    /// `Eᵀ = {(y, x) : (x, y) ∈ E}`.
    pub fn transpose(&self) -> Entourage {
        let rows = self
            .rows
            .iter()
            .map(|comp| {
                let mut t = vec![Vec::new(); comp.len()];
                for (x, row) in comp.iter().enumerate() {
                    for &y in row {
                        t[y as usize].push(x as Point);
                    }
                }
                t
            })
            .collect();
        Entourage {
            fingerprint: self.fingerprint,
            form: self.form,
            rows,
        }
    }

    /// `E ∪ Eᵀ ∪ Δ_0`, the smallest symmetric reflexive entourage containing `E`.
    pub fn symmetrized(&self) -> Entourage {
        let t = self.transpose();
        let rows = self
            .rows
            .iter()
            .zip(&t.rows)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .enumerate()
                    .map(|(x, (ra, rb))| {
                        let mut r: Vec<Point> = ra.iter().chain(rb).copied().collect();
                        r.push(x as Point);
                        r.sort_unstable();
                        r.dedup();
                        r
                    })
                    .collect()
            })
            .collect();
        Entourage {
            fingerprint: self.fingerprint,
            form: EntourageForm::Explicit,
            rows,
        }
    }
}
