//! Ordered families `A_0, …, A_n` of full translations (component-wise
//! permutations) whose graphs sit inside and cover a generating entourage.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::space::{Entourage, Point, SpaceFamily};
use crate::textio;

/// `perms[i][c][y]` is the image `A_i(y)` of point `y` in component `c`.
/// As an operator, `A_i` has a 1 at `(A_i(y), y)`.
#[derive(Debug, Clone)]
pub struct FullTranslationSystem {
    perms: Vec<Vec<Vec<Point>>>,
    entourage: Entourage,
    inverse_closed: bool,
    labels: Option<Vec<String>>,
}

/// Outcome of the three structural checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemCheck {
    pub bijective: bool,
    pub supported: bool,
    pub covering: bool,
}

impl SystemCheck {
    pub fn passed(&self) -> bool {
        self.bijective && self.supported && self.covering
    }
}

impl FullTranslationSystem {
    /// Builds a system. `A_0` must be the identity on every component and
    /// every map must be a permutation of its component.
    pub fn new(
        space: &SpaceFamily,
        perms: Vec<Vec<Vec<Point>>>,
        entourage: Entourage,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if perms.is_empty() {
            return Err(Error::EmptySystem);
        }
        if entourage.fingerprint() != space.fingerprint() {
            return Err(Error::SpaceMismatch);
        }
        let sizes = space.sizes();
        for (i, p) in perms.iter().enumerate() {
            if p.len() != sizes.len() {
                return Err(Error::InvalidSystem(format!(
                    "translation {i} has {} components, space has {}",
                    p.len(),
                    sizes.len()
                )));
            }
            for (c, map) in p.iter().enumerate() {
                if map.len() != sizes[c] || !is_permutation(map) {
                    return Err(Error::InvalidSystem(format!(
                        "translation {i} is not a permutation of component {c}"
                    )));
                }
                if i == 0 && map.iter().enumerate().any(|(y, &x)| x as usize != y) {
                    return Err(Error::InvalidSystem("A_0 must be the identity".into()));
                }
            }
        }
        if let Some(l) = &labels {
            if l.len() != perms.len() {
                return Err(Error::InvalidSystem("label count mismatch".into()));
            }
        }
        let inverse_closed = compute_inverse_closed(&perms);
        Ok(Self {
            perms,
            entourage,
            inverse_closed,
            labels,
        })
    }

    /// Number of translations including `A_0`.
    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn num_components(&self) -> usize {
        self.perms[0].len()
    }

    pub fn perm(&self, i: usize, c: usize) -> &[Point] {
        &self.perms[i][c]
    }

    pub fn perms(&self) -> &[Vec<Vec<Point>>] {
        &self.perms
    }

    #[inline]
    pub fn image(&self, i: usize, c: usize, y: Point) -> Point {
        self.perms[i][c][y as usize]
    }

    pub fn entourage(&self) -> &Entourage {
        &self.entourage
    }

    pub fn inverse_closed(&self) -> bool {
        self.inverse_closed
    }

    /// Generator labels, present for Cayley systems.
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Lowest index `i` with `A_i(y) = x`.
    pub fn route(&self, c: usize, x: Point, y: Point) -> Option<usize> {
        self.perms.iter().position(|p| p[c][y as usize] == x)
    }

    /// Exhaustive check of bijectivity, `graph(A_i) ⊆ E₀` and
    /// `E₀ ⊆ ⋃ graph(A_i)`.
    pub fn verify(&self) -> SystemCheck {
        let bijective = self.perms.iter().flatten().all(|m| is_permutation(m));
        let supported = self.perms.iter().all(|p| {
            p.iter().enumerate().all(|(c, map)| {
                map.iter()
                    .enumerate()
                    .all(|(y, &x)| self.entourage.contains(c, x, y as Point))
            })
        });
        let covering = self
            .entourage
            .pairs()
            .all(|(c, x, y)| self.route(c, x, y).is_some());
        SystemCheck {
            bijective,
            supported,
            covering,
        }
    }

    /// Products of at most `r` translations, deduplicated and ordered by
    /// first appearance (identity first). The result covers `E₀^{∘r}`.
    pub fn raise(&self, space: &SpaceFamily, r: usize) -> Result<Self> {
        if r <= 1 {
            return Ok(self.clone());
        }
        let mut seen: HashSet<Vec<Vec<Point>>> = HashSet::new();
        let mut out: Vec<Vec<Vec<Point>>> = Vec::new();
        let mut frontier = vec![self.perms[0].clone()];
        seen.insert(self.perms[0].clone());
        out.push(self.perms[0].clone());
        for _ in 0..r {
            let mut next = Vec::new();
            for f in &frontier {
                for g in &self.perms {
                    let prod: Vec<Vec<Point>> = g
                        .iter()
                        .zip(f)
                        .map(|(gm, fm)| fm.iter().map(|&y| gm[y as usize]).collect())
                        .collect();
                    if seen.insert(prod.clone()) {
                        out.push(prod.clone());
                        next.push(prod);
                    }
                }
            }
            frontier = next;
        }
        let mut ent = self.entourage.clone();
        for _ in 1..r {
            ent = space.compose(&ent, &self.entourage)?;
        }
        Self::new(space, out, ent, None)
    }

    /// `system v1` text form.
    pub fn to_text(&self) -> String {
        let mut s = String::from("system v1\n");
        for c in 0..self.num_components() {
            let _ = writeln!(s, "component {c} {}", self.perms[0][c].len());
            for (i, p) in self.perms.iter().enumerate() {
                let imgs: Vec<String> = p[c].iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "perm {i} {}", imgs.join(","));
            }
        }
        s
    }

    /// Parses `system v1`. The generating entourage is recovered as the union
    /// of the translation graphs.
    pub fn from_text(space: &SpaceFamily, input: &str) -> Result<Self> {
        let recs = textio::records(input);
        textio::expect_header(&recs, "system")?;
        let sizes = space.sizes();
        let mut per_comp: Vec<Vec<Vec<Point>>> = Vec::new();
        for rec in &recs[1..] {
            match rec.keyword() {
                "component" => {
                    rec.expect_len(3)?;
                    let id: usize = rec.field(1, "component id")?;
                    let size: usize = rec.field(2, "point count")?;
                    if id != per_comp.len() || sizes.get(id) != Some(&size) {
                        return Err(rec.error(1, "component does not match the space"));
                    }
                    per_comp.push(Vec::new());
                }
                "perm" => {
                    rec.expect_len(3)?;
                    let i: usize = rec.field(1, "translation index")?;
                    let comp = per_comp
                        .last_mut()
                        .ok_or_else(|| rec.error(0, "perm before any component"))?;
                    if i != comp.len() {
                        return Err(rec.error(1, format!("expected translation {}", comp.len())));
                    }
                    let map = rec.tokens[2]
                        .text
                        .split(',')
                        .map(|t| t.parse::<Point>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| rec.error(2, "bad image list"))?;
                    comp.push(map);
                }
                other => return Err(rec.error(0, format!("unknown record `{other}`"))),
            }
        }
        if per_comp.len() != sizes.len() {
            return Err(Error::parse(1, 1, "component count does not match the space"));
        }
        let count = per_comp.first().map_or(0, Vec::len);
        if per_comp.iter().any(|c| c.len() != count) {
            return Err(Error::parse(1, 1, "translation count differs across components"));
        }
        let perms: Vec<Vec<Vec<Point>>> = (0..count)
            .map(|i| per_comp.iter().map(|c| c[i].clone()).collect())
            .collect();
        let ent = graphs_entourage(space, &perms)?;
        Self::new(space, perms, ent, None)
    }
}

/// Union of the graphs `{(A_i(y), y)}` as an explicit entourage.
pub fn graphs_entourage(space: &SpaceFamily, perms: &[Vec<Vec<Point>>]) -> Result<Entourage> {
    space.entourage_from_pairs(perms.iter().flat_map(|p| {
        p.iter().enumerate().flat_map(|(c, map)| {
            map.iter()
                .enumerate()
                .map(move |(y, &x)| (c, x, y as Point))
        })
    }))
}

pub(crate) fn is_permutation(map: &[Point]) -> bool {
    let mut seen = vec![false; map.len()];
    for &x in map {
        match seen.get_mut(x as usize) {
            Some(s) if !*s => *s = true,
            _ => return false,
        }
    }
    true
}

fn compute_inverse_closed(perms: &[Vec<Vec<Point>>]) -> bool {
    let set: HashSet<&Vec<Vec<Point>>> = perms.iter().collect();
    perms.iter().all(|p| {
        let inv: Vec<Vec<Point>> = p
            .iter()
            .map(|map| {
                let mut inv = vec![0; map.len()];
                for (y, &x) in map.iter().enumerate() {
                    inv[x as usize] = y as Point;
                }
                inv
            })
            .collect();
        set.contains(&inv)
    })
}
