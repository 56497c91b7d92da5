//! JSON descriptors for families and threads.
//!
//! A family descriptor is either a gallery reference
//! `{"gallery": "poly_tower", "cap": 8}` or an explicit table:
//!
//! ```json
//! {
//!   "name": "line",
//!   "poset": {"kind": "chain", "start": 1, "step": 1, "end": 2},
//!   "levels": [{"index": 1, "dim": 1}, {"index": 2, "dim": 2}],
//!   "projections": [{"lower": 1, "upper": 2, "map": {"kind": "truncation"}}],
//!   "injections": [{"lower": 1, "upper": 2, "map": {"kind": "matrix", "rows": [[1], [0]]}}]
//! }
//! ```
//!
//! Maps between non-adjacent levels are composed along stored pairs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{DiffMap, LevelStructure, ProfiniteFamily};
use crate::gallery;
use crate::limits::{thread_from_section, SectionPoint, Thread};
use crate::poset::{Index, IndexPoset, Section};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapSpec {
    /// Row-major matrix.
    Matrix { rows: Vec<Vec<f64>> },
    /// `[I 0]` for projections, `[I; 0]` for injections.
    Truncation,
    /// Keep the values at the lower level's times (time-indexed levels).
    TimeSelection { components: usize },
    /// Piecewise-linear interpolation anchored at `γ(0) = 0`.
    PlInterpolation { components: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDescriptor {
    pub lower: Index,
    pub upper: Index,
    pub map: MapSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDescriptor {
    pub index: Index,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDescriptor {
    pub name: String,
    pub poset: IndexPoset,
    pub levels: Vec<LevelDescriptor>,
    #[serde(default)]
    pub projections: Vec<MapDescriptor>,
    #[serde(default)]
    pub injections: Vec<MapDescriptor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyDescriptor {
    Gallery { gallery: String, cap: Option<u64> },
    Table(TableDescriptor),
}

impl FamilyDescriptor {
    pub fn from_json(src: &str) -> Result<Self> {
        let bad = |e: serde_json::Error| Error::Descriptor(e.to_string());
        let value: serde_json::Value = serde_json::from_str(src).map_err(bad)?;
        if value.get("gallery").is_some() {
            serde_json::from_value(value).map_err(bad)
        } else {
            Ok(FamilyDescriptor::Table(serde_json::from_value(value).map_err(bad)?))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptors serialize")
    }

    pub fn build(&self) -> Result<ProfiniteFamily> {
        match self {
            FamilyDescriptor::Gallery { gallery: name, cap } => gallery::by_name(name, *cap),
            FamilyDescriptor::Table(t) => t.build(),
        }
    }
}

/// `want_cols` fixes the shape of a matrix with no rows.
fn matrix_of(rows: &[Vec<f64>], want_cols: usize) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(want_cols, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Descriptor("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn times(j: &Index) -> Result<Vec<f64>> {
    j.as_times()
        .ok_or_else(|| Error::Descriptor(format!("{j} is not a time set")))
}

fn time_selection(from: &[f64], to: &[f64], n: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(n * to.len(), n * from.len());
    for (r, t) in to.iter().enumerate() {
        let c = from
            .iter()
            .position(|s| s == t)
            .ok_or_else(|| Error::Descriptor(format!("time {t} missing from the upper level")))?;
        for d in 0..n {
            m[(r * n + d, c * n + d)] = 1.0;
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, PartialEq)]
enum Dir {
    Proj,
    Inj,
}

/// Linear map stored for a pair, oriented as the family expects: `E_K -> E_J`
/// for projections and `E_J -> E_K` for injections.
fn stored_matrix(spec: &MapSpec, dir: Dir, lower: &Index, upper: &Index, dl: usize, du: usize) -> Result<DMatrix<f64>> {
    let want = match dir {
        Dir::Proj => (dl, du),
        Dir::Inj => (du, dl),
    };
    let m = match spec {
        MapSpec::Matrix { rows } => matrix_of(rows, want.1)?,
        MapSpec::Truncation => match dir {
            Dir::Proj => gallery::truncation_matrix(dl, du),
            Dir::Inj => gallery::truncation_matrix(dl, du).transpose(),
        },
        MapSpec::TimeSelection { components } => time_selection(&times(upper)?, &times(lower)?, *components)?,
        MapSpec::PlInterpolation { components } => gallery::pl_interpolation_matrix(&times(lower)?, &times(upper)?, *components),
    };
    if m.shape() != want {
        return Err(Error::Descriptor(format!(
            "map {lower} <= {upper} has shape {}x{}, expected {}x{}",
            m.nrows(),
            m.ncols(),
            want.0,
            want.1
        )));
    }
    Ok(m)
}

struct TabulatedLevels {
    dims: BTreeMap<Index, usize>,
    proj: BTreeMap<(Index, Index), DMatrix<f64>>,
    inj: BTreeMap<(Index, Index), DMatrix<f64>>,
}

impl TabulatedLevels {
    /// Shortest path `j = a_0 < a_1 < ... = k` through stored pairs.
    fn path(table: &BTreeMap<(Index, Index), DMatrix<f64>>, j: &Index, k: &Index) -> Option<Vec<Index>> {
        let mut prev: BTreeMap<Index, Index> = BTreeMap::new();
        let mut seen = BTreeSet::from([j.clone()]);
        let mut queue = VecDeque::from([j.clone()]);
        while let Some(a) = queue.pop_front() {
            if &a == k {
                let mut path = vec![a.clone()];
                let mut cur = a;
                while let Some(p) = prev.get(&cur) {
                    path.push(p.clone());
                    cur = p.clone();
                }
                path.reverse();
                return Some(path);
            }
            for (lo, hi) in table.keys() {
                if lo == &a && seen.insert(hi.clone()) {
                    prev.insert(hi.clone(), a.clone());
                    queue.push_back(hi.clone());
                }
            }
        }
        None
    }

    fn compose(&self, dir: Dir, j: &Index, k: &Index) -> Result<DiffMap> {
        let table = match dir {
            Dir::Proj => &self.proj,
            Dir::Inj => &self.inj,
        };
        if j == k {
            return Ok(DiffMap::identity(self.dim(j)?));
        }
        let path = Self::path(table, j, k).ok_or_else(|| Error::Descriptor(format!("no stored maps connect {j} to {k}")))?;
        let mut acc = DMatrix::identity(self.dim(j)?, self.dim(j)?);
        for w in path.windows(2) {
            let m = &table[&(w[0].clone(), w[1].clone())];
            acc = match dir {
                Dir::Proj => &acc * m,
                Dir::Inj => m * &acc,
            };
        }
        Ok(DiffMap::linear(acc))
    }
}

impl LevelStructure for TabulatedLevels {
    fn dim(&self, j: &Index) -> Result<usize> {
        self.dims.get(j).copied().ok_or_else(|| Error::UnknownIndex(j.clone()))
    }

    fn proj(&self, j: &Index, k: &Index) -> Result<DiffMap> {
        self.compose(Dir::Proj, j, k)
    }

    fn inj(&self, k: &Index, j: &Index) -> Result<DiffMap> {
        self.compose(Dir::Inj, j, k)
    }
}

impl TableDescriptor {
    pub fn build(&self) -> Result<ProfiniteFamily> {
        let mut dims = BTreeMap::new();
        for l in &self.levels {
            if !self.poset.contains(&l.index) {
                return Err(Error::Descriptor(format!("level {} is not in the poset", l.index)));
            }
            if dims.insert(l.index.clone(), l.dim).is_some() {
                return Err(Error::Descriptor(format!("level {} listed twice", l.index)));
            }
        }
        if let Some(all) = self.poset.elements() {
            if let Some(missing) = all.iter().find(|j| !dims.contains_key(j)) {
                return Err(Error::Descriptor(format!("no dimension for level {missing}")));
            }
        }
        let dim = |j: &Index| {
            dims.get(j)
                .copied()
                .ok_or_else(|| Error::Descriptor(format!("map refers to undeclared level {j}")))
        };
        let mut tables = [BTreeMap::new(), BTreeMap::new()];
        for (dir, maps, table) in [(Dir::Proj, &self.projections, 0), (Dir::Inj, &self.injections, 1)] {
            for m in maps {
                if !self.poset.lt(&m.lower, &m.upper) {
                    return Err(Error::Descriptor(format!("{} < {} fails in the poset", m.lower, m.upper)));
                }
                let mat = stored_matrix(&m.map, dir, &m.lower, &m.upper, dim(&m.lower)?, dim(&m.upper)?)?;
                tables[table].insert((m.lower.clone(), m.upper.clone()), mat);
            }
        }
        let [proj, inj] = tables;
        Ok(ProfiniteFamily::new(self.name.clone(), self.poset.clone(), Arc::new(TabulatedLevels { dims, proj, inj })))
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Tabulates a family with a finite poset: every covering pair stores its
/// projection and injection matrices.
pub fn export_family(family: &ProfiniteFamily) -> Result<TableDescriptor> {
    let poset = family.poset();
    let all = poset.elements().ok_or(Error::InfinitePoset)?;
    let finite_poset = match poset {
        IndexPoset::Finite(_) => poset.clone(),
        IndexPoset::Chain { start, step, .. } => IndexPoset::Chain {
            start: *start,
            step: *step,
            end: all.last().and_then(Index::as_nat),
        },
        IndexPoset::FiniteSubsets { .. } => poset.clone(),
    };
    let mut levels = Vec::new();
    let mut projections = Vec::new();
    let mut injections = Vec::new();
    for j in &all {
        levels.push(LevelDescriptor {
            index: j.clone(),
            dim: family.dim(j)?,
        });
        for k in poset.covers_of(j) {
            let linear = |m: DiffMap| {
                m.as_linear()
                    .cloned()
                    .ok_or_else(|| Error::Descriptor(format!("map between {j} and {k} is not linear")))
            };
            projections.push(MapDescriptor {
                lower: j.clone(),
                upper: k.clone(),
                map: MapSpec::Matrix {
                    rows: rows_of(&linear(family.proj(j, &k)?)?),
                },
            });
            injections.push(MapDescriptor {
                lower: j.clone(),
                upper: k.clone(),
                map: MapSpec::Matrix {
                    rows: rows_of(&linear(family.inj(&k, j)?)?),
                },
            });
        }
    }
    Ok(TableDescriptor {
        name: family.name().to_string(),
        poset: finite_poset,
        levels,
        projections,
        injections,
    })
}

/// A thread given by values on a section, or a named distinguished thread.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThreadDescriptor {
    Section { section: Vec<Index>, values: Vec<Vec<f64>> },
    Named { thread: String },
}

impl ThreadDescriptor {
    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| Error::Descriptor(e.to_string()))
    }

    /// Named threads: `zero`, `ones`, `exp_series` and `laplacian_exp`.
    pub fn build(&self, family: &ProfiniteFamily) -> Result<Thread> {
        match self {
            ThreadDescriptor::Section { section, values } => {
                let section = Section::new(family.poset(), section.iter().cloned())?;
                if values.len() != section.len() {
                    return Err(Error::Descriptor(format!("{} values for {} section members", values.len(), section.len())));
                }
                let vals = values.iter().map(|v| DVector::from_vec(v.clone())).collect();
                thread_from_section(family, &SectionPoint::new(family, section, vals)?)
            }
            ThreadDescriptor::Named { thread } => match thread.as_str() {
                "zero" => Ok(gallery::coordinate_thread(family, |_| 0.0)),
                "ones" => Ok(gallery::coordinate_thread(family, |_| 1.0)),
                "exp_series" => Ok(gallery::exp_series_thread(family)),
                "laplacian_exp" => Ok(gallery::laplacian_exp_thread(family)),
                other => Err(Error::Descriptor(format!("unknown thread `{other}`"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{sample_chains, verify_family};

    const LINE: &str = r#"{
        "name": "line",
        "poset": {"kind": "chain", "start": 1, "step": 1, "end": 3},
        "levels": [{"index": 1, "dim": 1}, {"index": 2, "dim": 2}, {"index": 3, "dim": 3}],
        "projections": [
            {"lower": 1, "upper": 2, "map": {"kind": "truncation"}},
            {"lower": 2, "upper": 3, "map": {"kind": "truncation"}}
        ],
        "injections": [
            {"lower": 1, "upper": 2, "map": {"kind": "matrix", "rows": [[1], [0]]}},
            {"lower": 2, "upper": 3, "map": {"kind": "truncation"}}
        ]
    }"#;

    #[test]
    fn composes_along_stored_pairs() {
        let f = FamilyDescriptor::from_json(LINE).unwrap().build().unwrap();
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(f.proj(&Index::Nat(1), &Index::Nat(3)).unwrap().apply(&x).unwrap()[0], 1.0);
        assert_eq!(f.inj(&Index::Nat(3), &Index::Nat(1)).unwrap().as_linear().unwrap().shape(), (3, 1));
    }

    #[test]
    fn export_round_trip() {
        let f = gallery::cross_family();
        let d = export_family(&f).unwrap();
        let back = FamilyDescriptor::from_json(&FamilyDescriptor::Table(d).to_json()).unwrap().build().unwrap();
        let chains = sample_chains(back.poset(), 10, 3, 0);
        assert!(verify_family(&back, &chains, 5, 1e-12, 0).unwrap().passed);
        let l = Index::name("L");
        let j = Index::name("J");
        assert_eq!(back.proj(&j, &l).unwrap().as_linear(), f.proj(&j, &l).unwrap().as_linear());
    }

    #[test]
    fn rejects_bad_shapes() {
        let bad = LINE.replace("[[1], [0]]", "[[1, 0]]");
        assert!(matches!(FamilyDescriptor::from_json(&bad).unwrap().build(), Err(Error::Descriptor(_))));
    }

    #[test]
    fn thread_from_values() {
        let f = gallery::euclid_tower(3);
        let t = ThreadDescriptor::from_json(r#"{"section": [2], "values": [[3, 4]]}"#).unwrap().build(&f).unwrap();
        assert_eq!(t.value(&Index::Nat(3)).unwrap(), DVector::from_vec(vec![3.0, 4.0, 0.0]));
    }
}
