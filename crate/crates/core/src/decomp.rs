//! Splitting partial translations supported in `E₀` into pieces of full
//! translations: `V = Σ χ_i A_i` with disjoint indicator functions `χ_i`.
//!
//! Systems for arbitrary entourages come from a greedy proper edge colouring
//! of the off-diagonal part of `E₀`; each colour class is a matching and
//! becomes the involution swapping the endpoints of its edges.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::roe::{DiagonalFunction, PartialTranslation, RoeOperator};
use crate::space::{Entourage, Point, SpaceFamily};
use crate::system::FullTranslationSystem;

/// Disjoint matchings covering the off-diagonal pairs of an entourage.
#[derive(Debug, Clone)]
pub struct MatchingCover {
    entourage: Entourage,
    /// `matchings[j][c]` lists the edges `(u, v)`, `u < v`, of colour `j`.
    matchings: Vec<Vec<Vec<(Point, Point)>>>,
    max_degree: usize,
}

impl MatchingCover {
    pub fn num_matchings(&self) -> usize {
        self.matchings.len()
    }

    pub fn matching(&self, j: usize, c: usize) -> &[(Point, Point)] {
        &self.matchings[j][c]
    }

    /// Largest off-diagonal degree of the entourage graph.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn entourage(&self) -> &Entourage {
        &self.entourage
    }

    /// Greedy colouring never needs more than `2Δ - 1` colours.
    pub fn within_greedy_bound(&self) -> bool {
        self.max_degree == 0 && self.matchings.is_empty()
            || self.matchings.len() < 2 * self.max_degree
    }
}

/// Greedy proper edge colouring of the off-diagonal part of `E₀`, edges in
/// lexicographic order, each taking the lowest colour free at both ends.
pub fn entourage_matchings(e0: &Entourage) -> MatchingCover {
    let mut per_comp: Vec<Vec<Vec<(Point, Point)>>> = Vec::new();
    let mut colours = 0usize;
    let mut max_degree = 0usize;
    for c in 0..e0.num_components() {
        let rows = e0.component_rows(c);
        let m = rows.len();
        let mut edges: Vec<(Point, Point)> = Vec::new();
        for (x, row) in rows.iter().enumerate() {
            for &y in row {
                let x = x as Point;
                if x != y {
                    edges.push((x.min(y), x.max(y)));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut degree = vec![0usize; m];
        for &(u, v) in &edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        max_degree = max_degree.max(degree.iter().copied().max().unwrap_or(0));

        let mut used: Vec<Vec<bool>> = vec![Vec::new(); m];
        let mut classes: Vec<Vec<(Point, Point)>> = Vec::new();
        for (u, v) in edges {
            let (ui, vi) = (u as usize, v as usize);
            let mut k = 0;
            while used[ui].get(k).copied().unwrap_or(false) || used[vi].get(k).copied().unwrap_or(false) {
                k += 1;
            }
            for w in [ui, vi] {
                if used[w].len() <= k {
                    used[w].resize(k + 1, false);
                }
                used[w][k] = true;
            }
            if classes.len() <= k {
                classes.resize(k + 1, Vec::new());
            }
            classes[k].push((u, v));
        }
        colours = colours.max(classes.len());
        per_comp.push(classes);
    }
    let matchings = (0..colours)
        .map(|j| {
            per_comp
                .iter()
                .map(|classes| classes.get(j).cloned().unwrap_or_default())
                .collect()
        })
        .collect();
    MatchingCover {
        entourage: e0.clone(),
        matchings,
        max_degree,
    }
}

/// `A_0 = id`, and `A_j` swaps the endpoints of every edge of matching `j`
/// while fixing all other points.
pub fn full_system_from_matchings(space: &SpaceFamily, cover: &MatchingCover) -> Result<FullTranslationSystem> {
    let sizes = space.sizes();
    let identity: Vec<Vec<Point>> = sizes.iter().map(|&m| (0..m as Point).collect()).collect();
    let mut perms = vec![identity.clone()];
    for classes in &cover.matchings {
        let mut p = identity.clone();
        for (c, edges) in classes.iter().enumerate() {
            for &(u, v) in edges {
                p[c][u as usize] = v;
                p[c][v as usize] = u;
            }
        }
        perms.push(p);
    }
    FullTranslationSystem::new(space, perms, cover.entourage.symmetrized(), None)
}

/// Indicator sets `B_i` with `V = Σ χ_{B_i} A_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    /// `parts[i][c]`: sorted points of `B_i` in component `c`.
    pub parts: Vec<Vec<Vec<Point>>>,
}

/// Result of the three reconstruction checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecompositionCheck {
    pub reconstruction: bool,
    pub disjoint: bool,
    pub mass: bool,
}

impl DecompositionCheck {
    pub fn passed(&self) -> bool {
        self.reconstruction && self.disjoint && self.mass
    }
}

impl Decomposition {
    pub fn chis(&self, space: &SpaceFamily) -> Vec<DiagonalFunction> {
        self.parts
            .iter()
            .map(|sets| DiagonalFunction::indicator(space, sets))
            .collect()
    }

    /// Number of nonzero `χ_i`.
    pub fn nonzero_terms(&self) -> usize {
        self.parts
            .iter()
            .filter(|sets| sets.iter().any(|s| !s.is_empty()))
            .count()
    }

    /// `Σ χ_i A_i`.
    pub fn reconstruct(&self, space: Arc<SpaceFamily>, system: &FullTranslationSystem) -> RoeOperator {
        let mut acc = RoeOperator::zero(space.clone());
        for (i, sets) in self.parts.iter().enumerate() {
            if sets.iter().all(Vec::is_empty) {
                continue;
            }
            let chi = DiagonalFunction::indicator(&space, sets);
            let term = RoeOperator::from_translation(space.clone(), system, i).left_mul_diag(&chi);
            acc = acc.add(&term).expect("same space");
        }
        acc
    }

    /// Checks `Σ χ_i A_i = V` entry-exactly, pairwise disjoint supports and
    /// `Σ χ_i = Φ(V)`.
    pub fn verify(
        &self,
        v: &PartialTranslation,
        space: Arc<SpaceFamily>,
        system: &FullTranslationSystem,
    ) -> DecompositionCheck {
        let target = v.to_operator(space.clone());
        let reconstruction = self.reconstruct(space.clone(), system) == target;

        let mut count: Vec<Vec<u32>> = space.sizes().into_iter().map(|m| vec![0; m]).collect();
        for sets in &self.parts {
            for (c, s) in sets.iter().enumerate() {
                for &x in s {
                    count[c][x as usize] += 1;
                }
            }
        }
        let disjoint = count.iter().flatten().all(|&k| k <= 1);
        let phi = target.phi();
        let mass = count.iter().zip(&phi.values).all(|(cnt, ph)| {
            cnt.iter()
                .zip(ph)
                .all(|(&k, p)| p.im == 0.0 && p.re == k as f64)
        });
        DecompositionCheck {
            reconstruction,
            disjoint,
            mass,
        }
    }

    /// `decomp v1`: one `chi <i> <component> <point>` line per member.
    pub fn to_text(&self) -> String {
        let mut s = String::from("decomp v1\n");
        for (i, sets) in self.parts.iter().enumerate() {
            for (c, set) in sets.iter().enumerate() {
                for &x in set {
                    let _ = writeln!(s, "chi {i} {c} {x}");
                }
            }
        }
        s
    }
}

fn route_all(
    v: &PartialTranslation,
    system: &FullTranslationSystem,
    mut route: impl FnMut(usize, Point, Point) -> Option<usize>,
) -> Result<Decomposition> {
    let comps = system.num_components();
    if v.num_components() != comps {
        return Err(Error::SpaceMismatch);
    }
    let mut parts = vec![vec![Vec::new(); comps]; system.len()];
    for (c, x, y) in v.all_pairs() {
        let i = route(c, x, y).ok_or(Error::SupportNotCovered { component: c, x, y })?;
        parts[i][c].push(x);
    }
    for sets in &mut parts {
        for s in sets.iter_mut() {
            s.sort_unstable();
        }
    }
    Ok(Decomposition { parts })
}

/// Routes each pair `(x, y)` of `V` to the lowest-indexed `A_i` with
/// `A_i(y) = x`; `χ_i` collects the first coordinates routed to `i`.
pub fn decompose(v: &PartialTranslation, system: &FullTranslationSystem) -> Result<Decomposition> {
    route_all(v, system, |c, x, y| system.route(c, x, y))
}

/// Decomposition by generator label on a Cayley system: diagonal pairs go to
/// `s_0 = e`, an off-diagonal pair `(ys, y)` to the first generator `s`
/// producing it.
pub fn cayley_decompose(v: &PartialTranslation, system: &FullTranslationSystem) -> Result<Decomposition> {
    if system.labels().is_none() {
        return Err(Error::InvalidSystem("not a Cayley generator system".into()));
    }
    route_all(v, system, |c, x, y| {
        if x == y {
            return Some(0);
        }
        (1..system.len()).find(|&k| system.image(k, c, y) == x)
    })
}

/// Random partial translation inside `E₀`: shuffle the pairs of `E₀`, take a
/// random-length prefix and greedily keep pairs preserving injectivity.
pub fn random_partial_translation<R: Rng>(
    space: &SpaceFamily,
    e0: &Entourage,
    rng: &mut R,
) -> PartialTranslation {
    let mut pairs: Vec<(usize, Point, Point)> = e0.pairs().collect();
    pairs.shuffle(rng);
    let take = rng.gen_range(0..=pairs.len());
    let mut used_x: Vec<Vec<bool>> = space.sizes().into_iter().map(|m| vec![false; m]).collect();
    let mut used_y = used_x.clone();
    let mut kept = Vec::new();
    for &(c, x, y) in &pairs[..take] {
        if !used_x[c][x as usize] && !used_y[c][y as usize] {
            used_x[c][x as usize] = true;
            used_y[c][y as usize] = true;
            kept.push((c, x, y));
        }
    }
    PartialTranslation::new(space, kept).expect("greedy selection keeps injectivity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{generate_family, GroupSpec};

    fn path(n: usize) -> SpaceFamily {
        SpaceFamily::from_edge_lists(&[(n, (0..n as Point - 1).map(|i| (i, i + 1)).collect())]).unwrap()
    }

    fn cycle(n: usize) -> SpaceFamily {
        SpaceFamily::from_edge_lists(&[(n, (0..n as Point).map(|i| (i, (i + 1) % n as Point)).collect())])
            .unwrap()
    }

    #[test]
    fn diagonal_entourage_has_empty_cover() {
        let s = path(4);
        let cover = entourage_matchings(&s.r_diagonal(0));
        assert_eq!(cover.num_matchings(), 0);
        let sys = full_system_from_matchings(&s, &cover).unwrap();
        assert_eq!(sys.len(), 1);
        assert!(sys.verify().passed());
    }

    #[test]
    fn path_of_three() {
        let s = path(3);
        let cover = entourage_matchings(&s.r_diagonal(1));
        assert_eq!(cover.num_matchings(), 2);
        assert_eq!(cover.matching(0, 0), &[(0, 1)]);
        assert_eq!(cover.matching(1, 0), &[(1, 2)]);
        let sys = full_system_from_matchings(&s, &cover).unwrap();
        assert_eq!(sys.perm(1, 0), &[1, 0, 2]);
        assert_eq!(sys.perm(2, 0), &[0, 2, 1]);
        assert!(sys.verify().passed());
    }

    #[test]
    fn four_cycle_cover() {
        let s = cycle(4);
        let cover = entourage_matchings(&s.r_diagonal(1));
        assert_eq!(cover.num_matchings(), 2);
        assert_eq!(cover.matching(0, 0), &[(0, 1), (2, 3)]);
        assert_eq!(cover.matching(1, 0), &[(0, 3), (1, 2)]);
        assert!(cover.within_greedy_bound());
        let sys = full_system_from_matchings(&s, &cover).unwrap();
        assert_eq!(sys.perm(1, 0), &[1, 0, 3, 2]);
        assert_eq!(sys.perm(2, 0), &[3, 2, 1, 0]);
        assert!(sys.verify().passed());
        assert!(sys.inverse_closed());
    }

    #[test]
    fn identity_on_a_subset() {
        let s = Arc::new(cycle(6));
        let sys = full_system_from_matchings(&s, &entourage_matchings(&s.r_diagonal(1))).unwrap();
        let v = PartialTranslation::identity_on(&s, &[vec![1, 4, 5]]).unwrap();
        let d = decompose(&v, &sys).unwrap();
        assert_eq!(d.parts[0][0], vec![1, 4, 5]);
        assert_eq!(d.nonzero_terms(), 1);
        assert!(d.verify(&v, s.clone(), &sys).passed());
    }

    #[test]
    fn full_translation_decomposes_into_itself() {
        let s = Arc::new(cycle(6));
        let sys = full_system_from_matchings(&s, &entourage_matchings(&s.r_diagonal(1))).unwrap();
        for k in 0..sys.len() {
            let v = PartialTranslation::new(
                &s,
                sys.perm(k, 0).iter().enumerate().map(|(y, &x)| (0, x, y as Point)),
            )
            .unwrap();
            let d = decompose(&v, &sys).unwrap();
            let check = d.verify(&v, s.clone(), &sys);
            assert!(check.passed(), "{k}: {check:?}");
        }
    }

    #[test]
    fn uncovered_pair_is_reported() {
        let s = cycle(6);
        let sys = full_system_from_matchings(&s, &entourage_matchings(&s.r_diagonal(1))).unwrap();
        let v = PartialTranslation::new(&s, [(0, 3, 0)]).unwrap();
        assert!(matches!(
            decompose(&v, &sys),
            Err(Error::SupportNotCovered { component: 0, x: 3, y: 0 })
        ));
    }

    #[test]
    fn cayley_routing() {
        let fam = generate_family(&GroupSpec::parse("cyclic:5,8").unwrap(), 100).unwrap();
        let s = Arc::new(fam.space.clone());
        // +1 on {0, 1} of the 8-cycle and -1 on {5}.
        let v = PartialTranslation::new(&s, [(1, 1, 0), (1, 2, 1), (1, 4, 5)]).unwrap();
        let d = cayley_decompose(&v, &fam.system).unwrap();
        assert_eq!(d.parts[1][1], vec![1, 2]);
        assert_eq!(d.parts[2][1], vec![4]);
        assert_eq!(d.nonzero_terms(), 2);
        assert!(d.verify(&v, s.clone(), &fam.system).passed());
        assert_eq!(d, decompose(&v, &fam.system).unwrap());

        let one = PartialTranslation::new(&s, [(0, 1, 0), (0, 3, 2)]).unwrap();
        assert_eq!(cayley_decompose(&one, &fam.system).unwrap().nonzero_terms(), 1);

        let empty = PartialTranslation::empty(&s);
        let d = cayley_decompose(&empty, &fam.system).unwrap();
        assert_eq!(d.nonzero_terms(), 0);
    }

    #[test]
    fn decomp_text() {
        let d = Decomposition {
            parts: vec![vec![vec![0, 2]], vec![vec![1]]],
        };
        assert_eq!(d.to_text(), "decomp v1\nchi 0 0 0\nchi 0 0 2\nchi 1 0 1\n");
    }
}
