//! Concrete finite groups, their Cayley graphs, and the families built from
//! them (box spaces of ℤ, ℤ^d and the infinite dihedral group, symmetric
//! groups, SL₂(ℤ/p)).
//!
//! Cayley graphs use right multiplication: the edge set is `{x, xs}` and the
//! translation attached to generator `s` is `y ↦ ys`, so the word metric is
//! left-invariant. Generator `0` is always the identity.

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Debug};
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{Component, Point, SpaceFamily};
use crate::system::{graphs_entourage, FullTranslationSystem};

pub trait FiniteGroup {
    type Elem: Clone + Eq + Hash + Debug;

    fn identity(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inverse(&self, a: &Self::Elem) -> Self::Elem;
    /// All elements in canonical order; the position is the point id.
    fn elements(&self) -> Vec<Self::Elem>;
    /// Symmetric generating set without the identity, with labels.
    fn standard_generators(&self) -> Vec<(String, Self::Elem)>;
}

/// ℤ/n.
#[derive(Debug, Clone, Copy)]
pub struct Cyclic(pub u64);

impl FiniteGroup for Cyclic {
    type Elem = u64;

    fn identity(&self) -> u64 {
        0
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.0
    }
    fn inverse(&self, a: &u64) -> u64 {
        (self.0 - a) % self.0
    }
    fn elements(&self) -> Vec<u64> {
        (0..self.0).collect()
    }
    fn standard_generators(&self) -> Vec<(String, u64)> {
        vec![
            ("+1".into(), 1 % self.0),
            ("-1".into(), (self.0 - 1) % self.0),
        ]
    }
}

/// (ℤ/n)^d, elements in lexicographic order.
#[derive(Debug, Clone, Copy)]
pub struct Torus {
    pub n: u64,
    pub dim: usize,
}

impl FiniteGroup for Torus {
    type Elem = Vec<u64>;

    fn identity(&self) -> Vec<u64> {
        vec![0; self.dim]
    }
    fn mul(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.n).collect()
    }
    fn inverse(&self, a: &Vec<u64>) -> Vec<u64> {
        a.iter().map(|x| (self.n - x) % self.n).collect()
    }
    fn elements(&self) -> Vec<Vec<u64>> {
        let total = self.n.pow(self.dim as u32);
        (0..total)
            .map(|mut k| {
                let mut v = vec![0; self.dim];
                for slot in v.iter_mut().rev() {
                    *slot = k % self.n;
                    k /= self.n;
                }
                v
            })
            .collect()
    }
    fn standard_generators(&self) -> Vec<(String, Vec<u64>)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            let mut plus = vec![0; self.dim];
            plus[i] = 1 % self.n;
            let minus = self.inverse(&plus);
            out.push((format!("+e{}", i + 1), plus));
            out.push((format!("-e{}", i + 1), minus));
        }
        out
    }
}

/// Dihedral group of order `2n`; `(i, f)` stands for `r^i s^f`.
#[derive(Debug, Clone, Copy)]
pub struct Dihedral(pub u64);

impl FiniteGroup for Dihedral {
    type Elem = (u64, bool);

    fn identity(&self) -> (u64, bool) {
        (0, false)
    }
    fn mul(&self, a: &(u64, bool), b: &(u64, bool)) -> (u64, bool) {
        let n = self.0;
        let j = if a.1 { (n - b.0) % n } else { b.0 };
        ((a.0 + j) % n, a.1 ^ b.1)
    }
    fn inverse(&self, a: &(u64, bool)) -> (u64, bool) {
        if a.1 {
            *a
        } else {
            ((self.0 - a.0) % self.0, false)
        }
    }
    fn elements(&self) -> Vec<(u64, bool)> {
        [false, true]
            .into_iter()
            .flat_map(|f| (0..self.0).map(move |i| (i, f)))
            .collect()
    }
    fn standard_generators(&self) -> Vec<(String, (u64, bool))> {
        let n = self.0;
        vec![
            ("r".into(), (1 % n, false)),
            ("r^-1".into(), ((n - 1) % n, false)),
            ("s".into(), (0, true)),
        ]
    }
}

/// Symmetric group on `n` letters in one-line notation; `(a·b)(x) = a(b(x))`.
#[derive(Debug, Clone, Copy)]
pub struct Symmetric(pub usize);

impl FiniteGroup for Symmetric {
    type Elem = Vec<u8>;

    fn identity(&self) -> Vec<u8> {
        (0..self.0 as u8).collect()
    }
    fn mul(&self, a: &Vec<u8>, b: &Vec<u8>) -> Vec<u8> {
        b.iter().map(|&x| a[x as usize]).collect()
    }
    fn inverse(&self, a: &Vec<u8>) -> Vec<u8> {
        let mut inv = vec![0; a.len()];
        for (i, &x) in a.iter().enumerate() {
            inv[x as usize] = i as u8;
        }
        inv
    }
    fn elements(&self) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        let mut cur = self.identity();
        loop {
            out.push(cur.clone());
            if !next_permutation(&mut cur) {
                break;
            }
        }
        out
    }
    fn standard_generators(&self) -> Vec<(String, Vec<u8>)> {
        let n = self.0;
        let mut swap = self.identity();
        if n >= 2 {
            swap.swap(0, 1);
        }
        let cycle: Vec<u8> = (0..n).map(|i| ((i + 1) % n) as u8).collect();
        let back = self.inverse(&cycle);
        vec![
            ("(0 1)".into(), swap),
            ("cycle".into(), cycle),
            ("cycle^-1".into(), back),
        ]
    }
}

fn next_permutation(v: &mut [u8]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// SL₂(ℤ/p); a matrix `[[a, b], [c, d]]` is stored as `[a, b, c, d]`.
#[derive(Debug, Clone, Copy)]
pub struct Sl2(pub u64);

impl FiniteGroup for Sl2 {
    type Elem = [u64; 4];

    fn identity(&self) -> [u64; 4] {
        [1, 0, 0, 1]
    }
    fn mul(&self, a: &[u64; 4], b: &[u64; 4]) -> [u64; 4] {
        let p = self.0;
        [
            (a[0] * b[0] + a[1] * b[2]) % p,
            (a[0] * b[1] + a[1] * b[3]) % p,
            (a[2] * b[0] + a[3] * b[2]) % p,
            (a[2] * b[1] + a[3] * b[3]) % p,
        ]
    }
    fn inverse(&self, a: &[u64; 4]) -> [u64; 4] {
        let p = self.0;
        [a[3], (p - a[1]) % p, (p - a[2]) % p, a[0]]
    }
    fn elements(&self) -> Vec<[u64; 4]> {
        let p = self.0;
        let mut out = Vec::with_capacity((p * (p * p - 1)) as usize);
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for d in 0..p {
                        if (a * d + p * p - b * c) % p == 1 {
                            out.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        out
    }
    fn standard_generators(&self) -> Vec<(String, [u64; 4])> {
        let p = self.0;
        vec![
            ("u".into(), [1, 1, 0, 1]),
            ("u^-1".into(), [1, p - 1, 0, 1]),
            ("l".into(), [1, 0, 1, 1]),
            ("l^-1".into(), [1, 0, p - 1, 1]),
        ]
    }
}

/// Cayley graph of `group` with respect to `generators` (identity excluded),
/// plus the translations `y ↦ y s_k` with `s_0 = e`.
pub fn cayley_component<G: FiniteGroup>(
    index: usize,
    group: &G,
    generators: &[G::Elem],
) -> Result<(Component, Vec<Vec<Point>>)> {
    let elements = group.elements();
    let lookup: HashMap<&G::Elem, Point> = elements
        .iter()
        .enumerate()
        .map(|(i, g)| (g, i as Point))
        .collect();
    let e = group.identity();
    for s in generators {
        let inv = group.inverse(s);
        if inv != e && !generators.contains(&inv) {
            return Err(Error::NonSymmetricGenerators(format!(
                "inverse of {s:?} is missing"
            )));
        }
    }

    let mut labels: Vec<G::Elem> = Vec::with_capacity(generators.len() + 1);
    labels.push(e.clone());
    labels.extend(generators.iter().cloned());
    let translations: Vec<Vec<Point>> = labels
        .iter()
        .map(|s| {
            elements
                .iter()
                .map(|y| lookup[&group.mul(y, s)])
                .collect()
        })
        .collect();

    let mut reached = vec![false; elements.len()];
    let mut queue = VecDeque::from([lookup[&e]]);
    reached[lookup[&e] as usize] = true;
    let mut count = 1;
    while let Some(x) = queue.pop_front() {
        for t in &translations[1..] {
            let y = t[x as usize];
            if !reached[y as usize] {
                reached[y as usize] = true;
                count += 1;
                queue.push_back(y);
            }
        }
    }
    if count != elements.len() {
        return Err(Error::NotGenerating {
            reached: count,
            order: elements.len(),
        });
    }

    let edges: Vec<(Point, Point)> = translations[1..]
        .iter()
        .flat_map(|t| t.iter().enumerate().map(|(x, &y)| (x as Point, y)))
        .filter(|(x, y)| x != y)
        .collect();
    let comp = Component::from_edges(index, elements.len(), &edges)?;
    Ok((comp, translations))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupKind {
    Cyclic,
    Torus,
    Dihedral,
    Symmetric,
    Sl2Prime,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKind::Cyclic => "cyclic",
            GroupKind::Torus => "torus",
            GroupKind::Dihedral => "dihedral",
            GroupKind::Symmetric => "symmetric",
            GroupKind::Sl2Prime => "sl2",
        })
    }
}

/// A family of finite groups sharing one formal generating set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupSpec {
    pub kind: GroupKind,
    /// Cycle lengths, torus side lengths, dihedral rotation orders,
    /// symmetric degrees or primes.
    pub params: Vec<u64>,
    /// Torus dimension; ignored by other kinds.
    pub dim: usize,
}

impl GroupSpec {
    /// Parses descriptors such as `cyclic:4,8`, `torus:d=2:4,8`, `sl2:3,5`,
    /// `dihedral:3,6`, `symmetric:n=4,5`.
    pub fn parse(desc: &str) -> Result<Self> {
        let desc = desc.trim();
        let (head, rest) = desc
            .split_once(':')
            .ok_or_else(|| Error::parse(1, 1, format!("family descriptor `{desc}` has no `:`")))?;
        let kind = match head {
            "cyclic" => GroupKind::Cyclic,
            "torus" => GroupKind::Torus,
            "dihedral" => GroupKind::Dihedral,
            "symmetric" => GroupKind::Symmetric,
            "sl2" => GroupKind::Sl2Prime,
            other => return Err(Error::parse(1, 1, format!("unknown family `{other}`"))),
        };
        let mut offset = head.len() + 1;
        let mut list = rest;
        let mut dim = 1;
        if kind == GroupKind::Torus {
            let (d, tail) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(1, offset + 1, "torus needs `d=<dim>:`"))?;
            dim = d
                .strip_prefix("d=")
                .and_then(|v| v.parse().ok())
                .filter(|&v: &usize| v >= 1)
                .ok_or_else(|| Error::parse(1, offset + 1, format!("bad dimension `{d}`")))?;
            offset += d.len() + 1;
            list = tail;
        } else if kind == GroupKind::Symmetric {
            if let Some(tail) = rest.strip_prefix("n=") {
                offset += 2;
                list = tail;
            }
        }
        let mut params = Vec::new();
        for tok in list.split(',') {
            let value: u64 = tok.trim().parse().map_err(|_| {
                Error::parse(1, offset + 1, format!("cannot parse size from `{tok}`"))
            })?;
            if value == 0 {
                return Err(Error::parse(1, offset + 1, "sizes must be positive"));
            }
            params.push(value);
            offset += tok.len() + 1;
        }
        if params.is_empty() || list.trim().is_empty() {
            return Err(Error::parse(1, offset, "empty family list"));
        }
        Ok(Self { kind, params, dim })
    }

    pub fn order(&self, param: u64) -> usize {
        match self.kind {
            GroupKind::Cyclic => param as usize,
            GroupKind::Torus => (param as usize).pow(self.dim as u32),
            GroupKind::Dihedral => 2 * param as usize,
            GroupKind::Symmetric => (1..=param as usize).product(),
            GroupKind::Sl2Prime => (param * (param * param - 1)) as usize,
        }
    }

    pub fn descriptor(&self) -> String {
        let list: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        match self.kind {
            GroupKind::Torus => format!("torus:d={}:{}", self.dim, list.join(",")),
            GroupKind::Symmetric => format!("symmetric:n={}", list.join(",")),
            k => format!("{k}:{}", list.join(",")),
        }
    }
}

/// A generated family: the space and its canonical generator system.
#[derive(Debug, Clone)]
pub struct GeneratedFamily {
    pub spec: GroupSpec,
    pub space: SpaceFamily,
    pub system: FullTranslationSystem,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn build_component(spec: &GroupSpec, index: usize, param: u64) -> Result<(Component, Vec<Vec<Point>>, Vec<String>)> {
    fn go<G: FiniteGroup>(
        index: usize,
        g: G,
    ) -> Result<(Component, Vec<Vec<Point>>, Vec<String>)> {
        let gens = g.standard_generators();
        let elems: Vec<G::Elem> = gens.iter().map(|(_, s)| s.clone()).collect();
        let (comp, tr) = cayley_component(index, &g, &elems)?;
        let mut labels = vec!["e".to_string()];
        labels.extend(gens.into_iter().map(|(l, _)| l));
        Ok((comp, tr, labels))
    }
    match spec.kind {
        GroupKind::Cyclic => go(index, Cyclic(param)),
        GroupKind::Torus => go(index, Torus { n: param, dim: spec.dim }),
        GroupKind::Dihedral => go(index, Dihedral(param)),
        GroupKind::Symmetric => {
            if param > 8 {
                return Err(Error::OutOfRange(format!("symmetric degree {param} > 8")));
            }
            go(index, Symmetric(param as usize))
        }
        GroupKind::Sl2Prime => {
            if param < 3 || !is_prime(param) {
                return Err(Error::NotPrime(param));
            }
            go(index, Sl2(param))
        }
    }
}

/// One Cayley component per parameter, all with the same formal generating
/// set, so the translation systems line up index by index.
pub fn generate_family(spec: &GroupSpec, budget: usize) -> Result<GeneratedFamily> {
    if spec.kind == GroupKind::Sl2Prime {
        if let Some(&p) = spec.params.iter().find(|&&p| p < 3 || !is_prime(p)) {
            return Err(Error::NotPrime(p));
        }
    }
    if spec.kind == GroupKind::Symmetric && spec.params.iter().any(|&n| n > 8) {
        return Err(Error::OutOfRange("symmetric degree above 8".into()));
    }
    let required: usize = spec.params.iter().map(|&p| spec.order(p)).sum();
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let mut comps = Vec::with_capacity(spec.params.len());
    let mut per_comp = Vec::with_capacity(spec.params.len());
    let mut labels = Vec::new();
    for (i, &param) in spec.params.iter().enumerate() {
        let (comp, tr, l) = build_component(spec, i, param)?;
        comps.push(comp);
        per_comp.push(tr);
        labels = l;
    }
    let space = SpaceFamily::new(comps);
    let count = labels.len();
    let perms: Vec<Vec<Vec<Point>>> = (0..count)
        .map(|k| per_comp.iter().map(|tr| tr[k].clone()).collect())
        .collect();
    let ent = graphs_entourage(&space, &perms)?;
    let system = FullTranslationSystem::new(&space, perms, ent, Some(labels))?;
    Ok(GeneratedFamily {
        spec: spec.clone(),
        space,
        system,
    })
}

/// Box space of ℤ, ℤ^d or the infinite dihedral group along the filtration
/// `n_1 ℤ ⊇ n_2 ℤ ⊇ …` (resp. its product / rotation-subgroup analogue).
pub fn box_space(spec: &GroupSpec, budget: usize) -> Result<GeneratedFamily> {
    match spec.kind {
        GroupKind::Cyclic | GroupKind::Torus | GroupKind::Dihedral => {}
        k => {
            return Err(Error::InvalidFiltration(format!(
                "{k} families are not quotients along one filtration"
            )))
        }
    }
    for w in spec.params.windows(2) {
        if w[1] % w[0] != 0 {
            return Err(Error::InvalidFiltration(format!(
                "{}ℤ does not contain {}ℤ",
                w[0], w[1]
            )));
        }
    }
    generate_family(spec, budget)
}

/// SL₂(ℤ/p) Cayley graphs with the elementary generators and their inverses.
pub fn sl2_family(primes: &[u64], budget: usize) -> Result<GeneratedFamily> {
    generate_family(
        &GroupSpec {
            kind: GroupKind::Sl2Prime,
            params: primes.to_vec(),
            dim: 1,
        },
        budget,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_four_is_a_cycle() {
        let g = Cyclic(4);
        let gens: Vec<u64> = g.standard_generators().into_iter().map(|x| x.1).collect();
        let (c, tr) = cayley_component(0, &g, &gens).unwrap();
        assert_eq!(c.size(), 4);
        assert_eq!(c.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert_eq!(tr.len(), 3);
        assert_eq!(tr[0], vec![0, 1, 2, 3]);
        assert_eq!(tr[1], vec![1, 2, 3, 0]);
        assert_eq!(tr[2], vec![3, 0, 1, 2]);
    }

    #[test]
    fn trivial_group() {
        let g = Cyclic(1);
        let (c, tr) = cayley_component(0, &g, &[]).unwrap();
        assert_eq!(c.size(), 1);
        assert_eq!(tr, vec![vec![0]]);
    }

    #[test]
    fn sl2_orders() {
        for (p, order) in [(3u64, 24usize), (5, 120), (7, 336)] {
            let g = Sl2(p);
            assert_eq!(g.elements().len(), order);
            let gens: Vec<[u64; 4]> = g.standard_generators().into_iter().map(|x| x.1).collect();
            let (c, _) = cayley_component(0, &g, &gens).unwrap();
            assert_eq!(c.size(), order);
            assert!(c.max_ball(1) <= 5);
        }
    }

    #[test]
    fn generator_errors() {
        let g = Cyclic(6);
        assert!(matches!(
            cayley_component(0, &g, &[2, 4]),
            Err(Error::NotGenerating { reached: 3, order: 6 })
        ));
        assert!(matches!(
            cayley_component(0, &g, &[1]),
            Err(Error::NonSymmetricGenerators(_))
        ));
    }

    #[test]
    fn group_axioms_hold() {
        fn check<G: FiniteGroup>(g: &G) {
            let el = g.elements();
            let e = g.identity();
            for a in &el {
                assert_eq!(g.mul(a, &e), *a);
                assert_eq!(g.mul(a, &g.inverse(a)), e);
            }
            for a in el.iter().take(6) {
                for b in el.iter().take(6) {
                    for c in el.iter().take(6) {
                        assert_eq!(g.mul(&g.mul(a, b), c), g.mul(a, &g.mul(b, c)));
                    }
                }
            }
        }
        check(&Cyclic(5));
        check(&Torus { n: 3, dim: 2 });
        check(&Dihedral(5));
        check(&Symmetric(4));
        check(&Sl2(5));
        assert_eq!(Symmetric(4).elements().len(), 24);
        assert_eq!(Dihedral(5).elements().len(), 10);
    }

    #[test]
    fn descriptor_parsing() {
        let s = GroupSpec::parse("cyclic:2,4,8").unwrap();
        assert_eq!((s.kind, s.params.clone()), (GroupKind::Cyclic, vec![2, 4, 8]));
        let t = GroupSpec::parse("torus:d=2:4,8,16").unwrap();
        assert_eq!((t.kind, t.dim), (GroupKind::Torus, 2));
        assert_eq!(GroupSpec::parse("symmetric:n=4,5").unwrap().params, vec![4, 5]);
        assert_eq!(GroupSpec::parse("sl2:3,5,7").unwrap().kind, GroupKind::Sl2Prime);
        assert_eq!(t.descriptor(), "torus:d=2:4,8,16");
        for bad in ["cyclic:", "cyclic", "circle:3", "torus:4,8", "cyclic:3,x", "cyclic:0"] {
            assert!(matches!(GroupSpec::parse(bad), Err(Error::Parse { .. })), "{bad}");
        }
        match GroupSpec::parse("cyclic:3,x").unwrap_err() {
            Error::Parse { column, .. } => assert_eq!(column, 10),
            _ => unreachable!(),
        }
    }

    #[test]
    fn box_space_of_integers() {
        let f = box_space(&GroupSpec::parse("cyclic:2,4,8").unwrap(), 1000).unwrap();
        assert_eq!(f.space.sizes(), vec![2, 4, 8]);
        assert_eq!(f.space.component(2).diameter(), 4);
        assert!(f.system.verify().passed());
        let one = box_space(&GroupSpec::parse("cyclic:1").unwrap(), 10).unwrap();
        assert_eq!(one.space.sizes(), vec![1]);
        assert!(matches!(
            box_space(&GroupSpec::parse("cyclic:4,6").unwrap(), 1000),
            Err(Error::InvalidFiltration(_))
        ));
        assert!(matches!(
            box_space(&GroupSpec::parse("sl2:3,5").unwrap(), 1000),
            Err(Error::InvalidFiltration(_))
        ));
    }

    #[test]
    fn torus_box_space() {
        let f = box_space(&GroupSpec::parse("torus:d=2:3,6").unwrap(), 1000).unwrap();
        assert_eq!(f.space.sizes(), vec![9, 36]);
        assert_eq!(f.system.len(), 5);
        assert_eq!(f.space.component(1).diameter(), 6);
    }

    #[test]
    fn sl2_family_checks() {
        let f = sl2_family(&[3, 5], 10_000).unwrap();
        assert_eq!(f.space.sizes(), vec![24, 120]);
        assert!(f.system.inverse_closed());
        assert!(matches!(sl2_family(&[9], 10_000), Err(Error::NotPrime(9))));
        assert!(matches!(sl2_family(&[2], 10_000), Err(Error::NotPrime(2))));
        assert!(matches!(
            sl2_family(&[13], 100),
            Err(Error::BudgetExceeded { required: 2184, budget: 100 })
        ));
    }
}
