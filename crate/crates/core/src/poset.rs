//! Directed index posets, sections and the filter of sections.
//!
//! Posets come in three shapes: an explicit finite relation, an arithmetic
//! chain of naturals, and finite subsets of a parameter set ordered by
//! inclusion. Checks on posets that cannot be enumerated run on caller-supplied
//! probe indices; a positive answer there means "verified on probe", not a proof.

use std::collections::BTreeSet;
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Time = OrderedFloat<f64>;

/// Opaque index identifier.
///
/// The derived `Ord` is the internal canonical order used for deterministic
/// set layouts; it is unrelated to the poset order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Index {
    Nat(u64),
    Name(String),
    Times(Vec<Time>),
}

impl Index {
    pub fn name(s: &str) -> Self {
        Index::Name(s.to_string())
    }

    /// A finite set of parameters, sorted and deduplicated.
    pub fn times(ts: &[f64]) -> Self {
        let mut v: Vec<Time> = ts.iter().copied().map(OrderedFloat).collect();
        v.sort();
        v.dedup();
        Index::Times(v)
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Index::Nat(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_times(&self) -> Option<Vec<f64>> {
        match self {
            Index::Times(v) => Some(v.iter().map(|t| t.0).collect()),
            _ => None,
        }
    }
}

/// Parses `3` as a natural, `{0.25,0.5}` as a time set and anything else as a name.
impl std::str::FromStr for Index {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Invalid("empty index".into()));
        }
        if let Some(inner) = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            let ts = inner
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| Error::Invalid(format!("bad time `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Index::times(&ts));
        }
        if let Ok(n) = s.parse::<u64>() {
            return Ok(Index::Nat(n));
        }
        Ok(Index::name(s))
    }
}

impl From<u64> for Index {
    fn from(n: u64) -> Self {
        Index::Nat(n)
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Nat(n) => write!(f, "{n}"),
            Index::Name(s) => write!(f, "{s}"),
            Index::Times(ts) => {
                write!(f, "{{")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", t.0)?;
                }
                write!(f, "}}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosetKind {
    Finite,
    CountableChain,
    FiniteSubsetsOfParameterSet,
}

/// An explicit finite poset given by its `leq` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFinitePoset")]
pub struct FinitePoset {
    elements: Vec<Index>,
    leq: Vec<Vec<bool>>,
}

#[derive(Deserialize)]
struct RawFinitePoset {
    elements: Vec<Index>,
    leq: Vec<Vec<bool>>,
}

impl TryFrom<RawFinitePoset> for FinitePoset {
    type Error = Error;

    fn try_from(raw: RawFinitePoset) -> Result<Self> {
        FinitePoset::new(raw.elements, raw.leq)
    }
}

impl FinitePoset {
    /// Validates reflexivity, antisymmetry and transitivity.
    pub fn new(elements: Vec<Index>, leq: Vec<Vec<bool>>) -> Result<Self> {
        let n = elements.len();
        if n == 0 {
            return Err(Error::NotPartialOrder("no elements".into()));
        }
        if leq.len() != n || leq.iter().any(|row| row.len() != n) {
            return Err(Error::NotPartialOrder(format!("leq matrix must be {n}x{n}")));
        }
        let distinct: BTreeSet<&Index> = elements.iter().collect();
        if distinct.len() != n {
            return Err(Error::NotPartialOrder("duplicate elements".into()));
        }
        for a in 0..n {
            if !leq[a][a] {
                return Err(Error::NotPartialOrder(format!("{} not reflexive", elements[a])));
            }
            for b in 0..n {
                if a != b && leq[a][b] && leq[b][a] {
                    return Err(Error::NotPartialOrder(format!(
                        "{} and {} violate antisymmetry",
                        elements[a], elements[b]
                    )));
                }
                for c in 0..n {
                    if leq[a][b] && leq[b][c] && !leq[a][c] {
                        return Err(Error::NotPartialOrder(format!(
                            "{} <= {} <= {} but not {} <= {}",
                            elements[a], elements[b], elements[c], elements[a], elements[c]
                        )));
                    }
                }
            }
        }
        Ok(FinitePoset { elements, leq })
    }

    /// Builds the reflexive-transitive closure of the given covering relations.
    pub fn from_covers(elements: Vec<Index>, covers: &[(Index, Index)]) -> Result<Self> {
        let n = elements.len();
        let pos = |x: &Index| {
            elements
                .iter()
                .position(|e| e == x)
                .ok_or_else(|| Error::UnknownIndex(x.clone()))
        };
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in covers {
            let (i, j) = (pos(a)?, pos(b)?);
            leq[i][j] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if leq[i][k] && leq[k][j] {
                        leq[i][j] = true;
                    }
                }
            }
        }
        FinitePoset::new(elements, leq)
    }

    pub fn elements(&self) -> &[Index] {
        &self.elements
    }

    fn position(&self, x: &Index) -> Option<usize> {
        self.elements.iter().position(|e| e == x)
    }
}

/// A directed index set with comparability and join oracles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IndexPoset {
    Finite(FinitePoset),
    /// `start, start + step, start + 2 step, ...`, up to `end` inclusive when given.
    Chain {
        start: u64,
        step: u64,
        end: Option<u64>,
    },
    /// Finite subsets of a parameter set ordered by inclusion; the empty set
    /// is the bottom element. With a `pool`, only subsets of the pool belong.
    FiniteSubsets { pool: Option<Vec<Time>> },
}

/// Largest pool for which subset posets are enumerated.
const MAX_ENUMERABLE_POOL: usize = 16;

impl IndexPoset {
    pub fn chain(start: u64, end: u64) -> Self {
        IndexPoset::Chain {
            start,
            step: 1,
            end: Some(end),
        }
    }

    pub fn naturals() -> Self {
        IndexPoset::Chain {
            start: 0,
            step: 1,
            end: None,
        }
    }

    pub fn subsets_of(pool: &[f64]) -> Self {
        let mut v: Vec<Time> = pool.iter().copied().map(OrderedFloat).collect();
        v.sort();
        v.dedup();
        IndexPoset::FiniteSubsets { pool: Some(v) }
    }

    pub fn kind(&self) -> PosetKind {
        match self {
            IndexPoset::Finite(_) => PosetKind::Finite,
            IndexPoset::Chain { .. } => PosetKind::CountableChain,
            IndexPoset::FiniteSubsets { .. } => PosetKind::FiniteSubsetsOfParameterSet,
        }
    }

    pub fn contains(&self, x: &Index) -> bool {
        match (self, x) {
            (IndexPoset::Finite(p), _) => p.position(x).is_some(),
            (IndexPoset::Chain { start, step, end }, Index::Nat(n)) => {
                *n >= *start && (*n - *start) % (*step).max(1) == 0 && end.is_none_or(|e| *n <= e)
            }
            (IndexPoset::FiniteSubsets { pool }, Index::Times(ts)) => {
                ts.windows(2).all(|w| w[0] < w[1])
                    && pool
                        .as_ref()
                        .is_none_or(|pool| ts.iter().all(|t| pool.binary_search(t).is_ok()))
            }
            _ => false,
        }
    }

    /// Comparability oracle. Indices outside the poset compare as `false`.
    pub fn leq(&self, a: &Index, b: &Index) -> bool {
        if !self.contains(a) || !self.contains(b) {
            return false;
        }
        match (self, a, b) {
            (IndexPoset::Finite(p), _, _) => match (p.position(a), p.position(b)) {
                (Some(i), Some(j)) => p.leq[i][j],
                _ => false,
            },
            (IndexPoset::Chain { .. }, Index::Nat(x), Index::Nat(y)) => x <= y,
            (IndexPoset::FiniteSubsets { .. }, Index::Times(x), Index::Times(y)) => {
                x.iter().all(|t| y.binary_search(t).is_ok())
            }
            _ => false,
        }
    }

    /// Strict order: `leq(a, b)` and `a != b`.
    pub fn lt(&self, a: &Index, b: &Index) -> bool {
        a != b && self.leq(a, b)
    }

    pub fn comparable(&self, a: &Index, b: &Index) -> bool {
        self.leq(a, b) || self.leq(b, a)
    }

    /// An upper bound of `a` and `b`: the least one when it exists, otherwise
    /// the canonically first minimal upper bound.
    pub fn join(&self, a: &Index, b: &Index) -> Result<Index> {
        for x in [a, b] {
            if !self.contains(x) {
                return Err(Error::UnknownIndex(x.clone()));
            }
        }
        match (self, a, b) {
            (IndexPoset::Chain { .. }, Index::Nat(x), Index::Nat(y)) => Ok(Index::Nat(*x.max(y))),
            (IndexPoset::FiniteSubsets { .. }, Index::Times(x), Index::Times(y)) => {
                let mut u: Vec<Time> = x.iter().chain(y.iter()).copied().collect();
                u.sort();
                u.dedup();
                Ok(Index::Times(u))
            }
            (IndexPoset::Finite(p), _, _) => {
                let uppers: Vec<&Index> = p
                    .elements
                    .iter()
                    .filter(|r| self.leq(a, r) && self.leq(b, r))
                    .collect();
                let minimal: BTreeSet<&Index> = uppers
                    .iter()
                    .copied()
                    .filter(|r| !uppers.iter().any(|s| self.lt(s, r)))
                    .collect();
                minimal
                    .into_iter()
                    .next()
                    .cloned()
                    .ok_or_else(|| Error::JoinFailure(a.clone(), b.clone()))
            }
            _ => Err(Error::JoinFailure(a.clone(), b.clone())),
        }
    }

    /// The greatest lower bound, when the poset provides one.
    pub fn meet(&self, a: &Index, b: &Index) -> Option<Index> {
        if !self.contains(a) || !self.contains(b) {
            return None;
        }
        match (self, a, b) {
            (IndexPoset::Chain { .. }, Index::Nat(x), Index::Nat(y)) => Some(Index::Nat(*x.min(y))),
            (IndexPoset::FiniteSubsets { .. }, Index::Times(x), Index::Times(y)) => Some(
                Index::Times(x.iter().filter(|t| y.binary_search(t).is_ok()).copied().collect()),
            ),
            (IndexPoset::Finite(p), _, _) => {
                let lowers: Vec<&Index> = p
                    .elements
                    .iter()
                    .filter(|r| self.leq(r, a) && self.leq(r, b))
                    .collect();
                lowers
                    .iter()
                    .find(|r| lowers.iter().all(|s| self.leq(s, r)))
                    .map(|r| (*r).clone())
            }
            _ => None,
        }
    }

    /// All elements, when the poset is finitely enumerable, in canonical order.
    pub fn elements(&self) -> Option<Vec<Index>> {
        match self {
            IndexPoset::Finite(p) => {
                let mut v = p.elements.clone();
                v.sort();
                Some(v)
            }
            IndexPoset::Chain { start, step, end } => end.map(|e| {
                (*start..=e)
                    .step_by((*step).max(1) as usize)
                    .map(Index::Nat)
                    .collect()
            }),
            IndexPoset::FiniteSubsets { pool } => {
                let pool = pool.as_ref()?;
                if pool.len() > MAX_ENUMERABLE_POOL {
                    return None;
                }
                let mut v: Vec<Index> = (0u32..(1u32 << pool.len()))
                    .map(|mask| {
                        Index::Times(
                            pool.iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, t)| *t)
                                .collect(),
                        )
                    })
                    .collect();
                v.sort();
                Some(v)
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.elements().is_some()
    }

    /// Checks reflexivity, antisymmetry and transitivity on every triple of the sample.
    pub fn order_axioms_hold(&self, sample: &[Index]) -> bool {
        for a in sample {
            if !self.leq(a, a) {
                return false;
            }
            for b in sample {
                if a != b && self.leq(a, b) && self.leq(b, a) {
                    return false;
                }
                for c in sample {
                    if self.leq(a, b) && self.leq(b, c) && !self.leq(a, c) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Indices strictly above `x` that are minimal with that property (finite posets).
    pub fn covers_of(&self, x: &Index) -> Vec<Index> {
        let Some(all) = self.elements() else {
            return match (self, x) {
                (IndexPoset::Chain { step, .. }, Index::Nat(n)) => {
                    let next = Index::Nat(n + (*step).max(1));
                    if self.contains(&next) {
                        vec![next]
                    } else {
                        vec![]
                    }
                }
                _ => vec![],
            };
        };
        let above: Vec<&Index> = all.iter().filter(|y| self.lt(x, y)).collect();
        above
            .iter()
            .filter(|y| !above.iter().any(|z| self.lt(z, y)))
            .map(|y| (*y).clone())
            .collect()
    }
}

/// A finite antichain of indices.
///
/// Construction validates nonemptiness and pairwise incomparability. Whether
/// every index is comparable to some member is checked by [`is_section`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Section {
    members: BTreeSet<Index>,
}

impl Section {
    pub fn new(poset: &IndexPoset, members: impl IntoIterator<Item = Index>) -> Result<Self> {
        let members: BTreeSet<Index> = members.into_iter().collect();
        if members.is_empty() {
            return Err(Error::EmptySection);
        }
        for m in &members {
            if !poset.contains(m) {
                return Err(Error::UnknownIndex(m.clone()));
            }
        }
        check_antichain(poset, &members)?;
        Ok(Section { members })
    }

    pub fn single(index: Index) -> Self {
        Section {
            members: BTreeSet::from([index]),
        }
    }

    /// Members in canonical order.
    pub fn members(&self) -> impl Iterator<Item = &Index> {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: &Index) -> bool {
        self.members.contains(x)
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "]")
    }
}

fn check_antichain<'a>(poset: &IndexPoset, members: impl IntoIterator<Item = &'a Index> + Clone) -> Result<()> {
    for a in members.clone() {
        for b in members.clone() {
            if a < b && poset.comparable(a, b) {
                return Err(Error::NotAntichain(a.clone(), b.clone()));
            }
        }
    }
    Ok(())
}

/// A possibly infinite candidate index set; infinite ones carry only a sample.
#[derive(Clone, Debug)]
pub enum IndexSet {
    Finite(Vec<Index>),
    Infinite { sample: Vec<Index> },
}

/// True iff every pair of the sample has a validated upper bound.
pub fn is_directed(poset: &IndexPoset, sample: &[Index]) -> Result<bool> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    for a in sample {
        for b in sample {
            let r = poset.join(a, b)?;
            if !(poset.leq(a, &r) && poset.leq(b, &r)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff `members` is an antichain and every probe index is comparable to
/// some member. For finite posets the whole poset is probed in addition to
/// `probe`, which makes the answer exact.
pub fn is_section(poset: &IndexPoset, members: &[Index], probe: &[Index]) -> Result<bool> {
    if members.is_empty() {
        return Err(Error::EmptySection);
    }
    if members.iter().any(|m| !poset.contains(m)) {
        return Ok(false);
    }
    if check_antichain(poset, members.iter()).is_err() {
        return Ok(false);
    }
    let all = poset.elements().unwrap_or_default();
    let covered = all
        .iter()
        .chain(probe.iter())
        .all(|i| members.iter().any(|s| poset.comparable(i, s)));
    Ok(covered)
}

/// Every section of a finite poset, sorted by size then canonically.
///
/// Sections of a finite poset are its maximal antichains; antichains are grown
/// by backtracking in canonical order and kept when they cover the poset.
pub fn enumerate_sections(poset: &IndexPoset) -> Result<Vec<Section>> {
    let all = poset.elements().ok_or(Error::InfinitePoset)?;
    let n = all.len();
    let comparable: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| poset.comparable(&all[i], &all[j])).collect())
        .collect();
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    fn grow(
        start: usize,
        n: usize,
        comparable: &[Vec<bool>],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if !current.is_empty() && (0..n).all(|i| current.iter().any(|&s| comparable[i][s])) {
            out.push(current.clone());
        }
        for next in start..n {
            if current.iter().all(|&s| !comparable[s][next]) {
                current.push(next);
                grow(next + 1, n, comparable, current, out);
                current.pop();
            }
        }
    }
    grow(0, n, &comparable, &mut current, &mut out);
    let mut sections: Vec<Section> = out
        .into_iter()
        .map(|idx| Section {
            members: idx.into_iter().map(|i| all[i].clone()).collect(),
        })
        .collect();
    sections.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(sections)
}

/// Base set of the filter of sections: the strict upper shadow of a section.
#[derive(Clone, Debug)]
pub struct FilterBaseSet {
    poset: IndexPoset,
    section: Section,
}

impl FilterBaseSet {
    /// `J` belongs iff some member `K` of the section satisfies `K < J`.
    pub fn contains(&self, j: &Index) -> bool {
        self.section.members().any(|k| self.poset.lt(k, j))
    }

    pub fn section(&self) -> &Section {
        &self.section
    }

    /// Members of the base set among the finitely many elements, when enumerable.
    pub fn enumerate(&self) -> Option<Vec<Index>> {
        Some(
            self.poset
                .elements()?
                .into_iter()
                .filter(|j| self.contains(j))
                .collect(),
        )
    }
}

/// Builds the filter base set of `section`; errors unless it passes [`is_section`]
/// on `probe` (the whole poset when finite).
pub fn filter_base_set(poset: &IndexPoset, section: &Section, probe: &[Index]) -> Result<FilterBaseSet> {
    let members: Vec<Index> = section.members().cloned().collect();
    if !is_section(poset, &members, probe)? {
        return Err(Error::Invalid(format!("{section} is not a section")));
    }
    Ok(FilterBaseSet {
        poset: poset.clone(),
        section: section.clone(),
    })
}

/// Certificate that `candidate` is a finite section, used as the hypothesis of
/// the tangent duality checks.
pub fn is_finitely_cylindrical_witness(poset: &IndexPoset, candidate: &IndexSet, probe: &[Index]) -> bool {
    match candidate {
        IndexSet::Infinite { .. } => false,
        IndexSet::Finite(members) => !members.is_empty() && is_section(poset, members, probe).unwrap_or(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn four_space() -> IndexPoset {
        let [i, j, k, l] = ["I", "J", "K", "L"].map(Index::name);
        IndexPoset::Finite(
            FinitePoset::from_covers(
                vec![i.clone(), j.clone(), k.clone(), l.clone()],
                &[(i.clone(), j.clone()), (i, k.clone()), (j, l.clone()), (k, l)],
            )
            .unwrap(),
        )
    }

    fn nats(v: &[u64]) -> Vec<Index> {
        v.iter().map(|&n| Index::Nat(n)).collect()
    }

    #[test]
    fn directedness() {
        assert!(is_directed(&IndexPoset::naturals(), &nats(&[1, 5, 9])).unwrap());
        let subsets = IndexPoset::FiniteSubsets { pool: None };
        let s = [Index::times(&[0.1]), Index::times(&[0.3, 0.7]), Index::times(&[])];
        assert!(is_directed(&subsets, &s).unwrap());

        let anti = IndexPoset::Finite(
            FinitePoset::new(
                vec![Index::name("J"), Index::name("K")],
                vec![vec![true, false], vec![false, true]],
            )
            .unwrap(),
        );
        let err = is_directed(&anti, &[Index::name("J"), Index::name("K")]).unwrap_err();
        assert!(matches!(err, Error::JoinFailure(_, _)));
        assert_eq!(is_directed(&anti, &[]), Err(Error::EmptySample));
    }

    #[test]
    fn sections_of_naturals_and_four_space() {
        let n = IndexPoset::naturals();
        let probe = nats(&[0, 1, 2, 7, 50]);
        assert!(is_section(&n, &nats(&[7]), &probe).unwrap());
        assert!(!is_section(&n, &nats(&[3, 5]), &probe).unwrap());
        assert_eq!(is_section(&n, &[], &probe), Err(Error::EmptySection));

        let p = four_space();
        let jk = [Index::name("J"), Index::name("K")];
        assert!(is_section(&p, &jk, &[]).unwrap());
        assert!(!is_section(&p, &[Index::name("J")], &[]).unwrap());
    }

    #[test]
    fn enumerate_small_posets() {
        let chain = IndexPoset::chain(0, 2);
        let secs = enumerate_sections(&chain).unwrap();
        let expect: Vec<Section> = (0..3).map(|n| Section::single(Index::Nat(n))).collect();
        assert_eq!(secs, expect);

        let names: Vec<Vec<String>> = enumerate_sections(&four_space())
            .unwrap()
            .iter()
            .map(|s| s.members().map(|m| m.to_string()).collect())
            .collect();
        assert_eq!(names, vec![vec!["I"], vec!["L"], vec!["J", "K"]]);

        let single = IndexPoset::Finite(FinitePoset::new(vec![Index::name("*")], vec![vec![true]]).unwrap());
        assert_eq!(enumerate_sections(&single).unwrap().len(), 1);
        assert_eq!(enumerate_sections(&IndexPoset::naturals()), Err(Error::InfinitePoset));
    }

    #[test]
    fn filter_base_membership() {
        let n = IndexPoset::naturals();
        let b = filter_base_set(&n, &Section::single(Index::Nat(3)), &nats(&[0, 1, 3, 5])).unwrap();
        assert!(b.contains(&Index::Nat(5)));
        assert!(!b.contains(&Index::Nat(3)));
        assert!(!b.contains(&Index::Nat(1)));

        let p = four_space();
        let s = Section::new(&p, [Index::name("J"), Index::name("K")]).unwrap();
        let b = filter_base_set(&p, &s, &[]).unwrap();
        assert!(b.contains(&Index::name("L")));
        assert!(!b.contains(&Index::name("I")));
        assert_eq!(b.enumerate().unwrap(), vec![Index::name("L")]);

        let subsets = IndexPoset::FiniteSubsets { pool: None };
        let s = Section::single(Index::times(&[]));
        let b = filter_base_set(&subsets, &s, &[Index::times(&[0.5])]).unwrap();
        assert!(b.contains(&Index::times(&[0.25, 0.5])));
        let half = filter_base_set(&subsets, &Section::single(Index::times(&[0.5])), &[]).unwrap();
        assert!(half.contains(&Index::times(&[0.25, 0.5])));
        assert!(!half.contains(&Index::times(&[0.5])));
    }

    #[test]
    fn finitely_cylindrical() {
        let n = IndexPoset::naturals();
        assert!(is_finitely_cylindrical_witness(&n, &IndexSet::Finite(nats(&[4])), &nats(&[0, 9])));
        let pool = IndexPoset::subsets_of(&[0.25, 0.5, 0.75, 1.0]);
        let top = Index::times(&[0.25, 0.5, 0.75, 1.0]);
        assert!(is_finitely_cylindrical_witness(&pool, &IndexSet::Finite(vec![top]), &[]));
        let anti = IndexSet::Infinite {
            sample: (1..5).map(|k| Index::times(&[1.0 / k as f64])).collect(),
        };
        assert!(!is_finitely_cylindrical_witness(&pool, &anti, &[]));
    }

    #[test]
    fn section_constructor_rejects_chains() {
        let n = IndexPoset::naturals();
        assert!(matches!(
            Section::new(&n, nats(&[3, 5])),
            Err(Error::NotAntichain(_, _))
        ));
        assert_eq!(Section::new(&n, vec![]), Err(Error::EmptySection));
    }

    #[test]
    fn finite_poset_validation() {
        let e = vec![Index::name("a"), Index::name("b")];
        assert!(FinitePoset::new(e.clone(), vec![vec![true, true], vec![true, true]]).is_err());
        assert!(FinitePoset::new(e, vec![vec![false, false], vec![false, true]]).is_err());
    }
}
