//! Profinite families: level spaces, projections, injections, and numerical
//! verification of their structural axioms.
//!
//! Convention: `proj(J, K)` maps level `K` down to level `J` and `inj(K, J)`
//! maps level `J` up to level `K`, for `J <= K`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, max_diff, max_diff_mat};
use crate::poset::{Index, IndexPoset};
use crate::report::AxiomResidual;

type EvalFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum MapRepr {
    Linear(DMatrix<f64>),
    Smooth { eval: EvalFn, jacobian: Option<JacFn> },
    Composite { outer: Box<DiffMap>, inner: Box<DiffMap> },
}

/// A smooth map between coordinate spaces, with a Jacobian that is analytic
/// when supplied and a central finite difference otherwise.
#[derive(Clone)]
pub struct DiffMap {
    domain_dim: usize,
    codomain_dim: usize,
    repr: MapRepr,
}

impl fmt::Debug for DiffMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            MapRepr::Linear(_) => "linear",
            MapRepr::Smooth { .. } => "smooth",
            MapRepr::Composite { .. } => "composite",
        };
        write!(f, "DiffMap({kind}: R^{} -> R^{})", self.domain_dim, self.codomain_dim)
    }
}

impl DiffMap {
    pub fn identity(n: usize) -> Self {
        DiffMap::linear(DMatrix::identity(n, n))
    }

    pub fn linear(m: DMatrix<f64>) -> Self {
        DiffMap {
            domain_dim: m.ncols(),
            codomain_dim: m.nrows(),
            repr: MapRepr::Linear(m),
        }
    }

    pub fn smooth<F>(domain_dim: usize, codomain_dim: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        DiffMap {
            domain_dim,
            codomain_dim,
            repr: MapRepr::Smooth {
                eval: Arc::new(f),
                jacobian: None,
            },
        }
    }

    /// Attaches an analytic Jacobian to a smooth map. No effect on other kinds.
    pub fn with_jacobian<G>(mut self, jac: G) -> Self
    where
        G: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if let MapRepr::Smooth { jacobian, .. } = &mut self.repr {
            *jacobian = Some(Arc::new(jac));
        }
        self
    }

    /// A scalar function `R^n -> R` with an optional analytic gradient.
    pub fn scalar<F>(n: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        DiffMap::smooth(n, 1, move |x| DVector::from_element(1, f(x)))
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn as_linear(&self) -> Option<&DMatrix<f64>> {
        match &self.repr {
            MapRepr::Linear(m) => Some(m),
            _ => None,
        }
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        match &self.repr {
            MapRepr::Linear(_) => true,
            MapRepr::Smooth { jacobian, .. } => jacobian.is_some(),
            MapRepr::Composite { outer, inner } => {
                outer.has_analytic_jacobian() && inner.has_analytic_jacobian()
            }
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.domain_dim {
            return Err(Error::dims("map argument", self.domain_dim, x.len()));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.repr {
            MapRepr::Linear(m) => m * x,
            MapRepr::Smooth { eval, .. } => eval(x),
            MapRepr::Composite { outer, inner } => outer.eval_unchecked(&inner.eval_unchecked(x)),
        }
    }

    /// Scalar value of a map with one-dimensional codomain.
    pub fn apply_scalar(&self, x: &DVector<f64>) -> Result<f64> {
        if self.codomain_dim != 1 {
            return Err(Error::dims("scalar map codomain", 1, self.codomain_dim));
        }
        Ok(self.apply(x)?[0])
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != self.domain_dim {
            return Err(Error::dims("jacobian argument", self.domain_dim, x.len()));
        }
        Ok(self.jacobian_unchecked(x))
    }

    fn jacobian_unchecked(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.repr {
            MapRepr::Linear(m) => m.clone(),
            MapRepr::Smooth { jacobian: Some(j), .. } => j(x),
            MapRepr::Smooth { eval, jacobian: None } => linalg::fd_jacobian(|y| eval(y), x, self.codomain_dim),
            MapRepr::Composite { outer, inner } => {
                let y = inner.eval_unchecked(x);
                outer.jacobian_unchecked(&y) * inner.jacobian_unchecked(x)
            }
        }
    }

    /// Central finite-difference Jacobian regardless of any analytic payload.
    pub fn fd_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != self.domain_dim {
            return Err(Error::dims("jacobian argument", self.domain_dim, x.len()));
        }
        Ok(linalg::fd_jacobian(|y| self.eval_unchecked(y), x, self.codomain_dim))
    }

    /// Gradient of a scalar map.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if self.codomain_dim != 1 {
            return Err(Error::dims("scalar map codomain", 1, self.codomain_dim));
        }
        Ok(self.jacobian(x)?.row(0).transpose())
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &DiffMap) -> Result<DiffMap> {
        if inner.codomain_dim != self.domain_dim {
            return Err(Error::dims("composition", self.domain_dim, inner.codomain_dim));
        }
        if let (Some(a), Some(b)) = (self.as_linear(), inner.as_linear()) {
            return Ok(DiffMap::linear(a * b));
        }
        Ok(DiffMap {
            domain_dim: inner.domain_dim,
            codomain_dim: self.codomain_dim,
            repr: MapRepr::Composite {
                outer: Box::new(self.clone()),
                inner: Box::new(inner.clone()),
            },
        })
    }

    /// Stacks maps sharing a domain: `x ↦ (f_1(x), ..., f_m(x))`.
    pub fn stack(domain_dim: usize, maps: &[DiffMap]) -> Result<DiffMap> {
        for m in maps {
            if m.domain_dim != domain_dim {
                return Err(Error::dims("stacked map domain", domain_dim, m.domain_dim));
            }
        }
        let codim: usize = maps.iter().map(|m| m.codomain_dim).sum();
        if maps.iter().all(|m| m.as_linear().is_some()) {
            let mut out = DMatrix::zeros(codim, domain_dim);
            let mut r = 0;
            for m in maps {
                let a = m.as_linear().unwrap();
                out.view_mut((r, 0), a.shape()).copy_from(a);
                r += a.nrows();
            }
            return Ok(DiffMap::linear(out));
        }
        let ev = maps.to_vec();
        let jm = maps.to_vec();
        let analytic = maps.iter().all(|m| m.has_analytic_jacobian());
        let map = DiffMap::smooth(domain_dim, codim, move |x| {
            linalg::concat(&ev.iter().map(|m| m.eval_unchecked(x)).collect::<Vec<_>>())
        });
        if !analytic {
            return Ok(map);
        }
        Ok(map.with_jacobian(move |x| {
            let mut out = DMatrix::zeros(codim, x.len());
            let mut r = 0;
            for m in &jm {
                let a = m.jacobian_unchecked(x);
                out.view_mut((r, 0), a.shape()).copy_from(&a);
                r += a.nrows();
            }
            out
        }))
    }

    /// Block-diagonal map `(x_1, ..., x_m) ↦ (f_1(x_1), ..., f_m(x_m))`.
    pub fn block_diagonal(maps: &[DiffMap]) -> DiffMap {
        let dom: usize = maps.iter().map(|m| m.domain_dim).sum();
        let codim: usize = maps.iter().map(|m| m.codomain_dim).sum();
        if maps.iter().all(|m| m.as_linear().is_some()) {
            let mut out = DMatrix::zeros(codim, dom);
            let (mut r, mut c) = (0, 0);
            for m in maps {
                let a = m.as_linear().unwrap();
                out.view_mut((r, c), a.shape()).copy_from(a);
                r += a.nrows();
                c += a.ncols();
            }
            return DiffMap::linear(out);
        }
        let ev = maps.to_vec();
        let jm = maps.to_vec();
        let analytic = maps.iter().all(|m| m.has_analytic_jacobian());
        let map = DiffMap::smooth(dom, codim, move |x| {
            let mut parts = Vec::with_capacity(ev.len());
            let mut c = 0;
            for m in &ev {
                parts.push(m.eval_unchecked(&x.rows(c, m.domain_dim).into_owned()));
                c += m.domain_dim;
            }
            linalg::concat(&parts)
        });
        if !analytic {
            return map;
        }
        map.with_jacobian(move |x| {
            let mut out = DMatrix::zeros(codim, dom);
            let (mut r, mut c) = (0, 0);
            for m in &jm {
                let a = m.jacobian_unchecked(&x.rows(c, m.domain_dim).into_owned());
                out.view_mut((r, c), a.shape()).copy_from(&a);
                r += m.codomain_dim;
                c += m.domain_dim;
            }
            out
        })
    }
}

/// Level dimensions and raw projection/injection maps of a family.
///
/// Implementations may assume `j <= k` and that both indices belong to the
/// poset; [`ProfiniteFamily`] checks this before delegating.
pub trait LevelStructure: Send + Sync {
    fn dim(&self, j: &Index) -> Result<usize>;
    /// `proj(J, K): E_K -> E_J`.
    fn proj(&self, j: &Index, k: &Index) -> Result<DiffMap>;
    /// `inj(K, J): E_J -> E_K`.
    fn inj(&self, k: &Index, j: &Index) -> Result<DiffMap>;
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum MapDir {
    Proj,
    Inj,
}

type MapCache = Mutex<HashMap<(MapDir, Index, Index), DiffMap>>;

/// A directed poset of coordinate levels with projections and injections.
#[derive(Clone)]
pub struct ProfiniteFamily {
    name: Arc<str>,
    poset: IndexPoset,
    levels: Arc<dyn LevelStructure>,
    cache: Arc<MapCache>,
}

impl fmt::Debug for ProfiniteFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProfiniteFamily({})", self.name)
    }
}

impl ProfiniteFamily {
    pub fn new(name: impl Into<String>, poset: IndexPoset, levels: Arc<dyn LevelStructure>) -> Self {
        ProfiniteFamily {
            name: Arc::from(name.into()),
            poset,
            levels,
            cache: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn poset(&self) -> &IndexPoset {
        &self.poset
    }

    pub fn levels(&self) -> &Arc<dyn LevelStructure> {
        &self.levels
    }

    pub fn ensure_same(&self, other: &ProfiniteFamily) -> Result<()> {
        if self.name != other.name {
            return Err(Error::FamilyMismatch {
                expected: self.name.to_string(),
                found: other.name.to_string(),
            });
        }
        Ok(())
    }

    fn check_index(&self, j: &Index) -> Result<()> {
        if self.poset.contains(j) {
            Ok(())
        } else {
            Err(Error::UnknownIndex(j.clone()))
        }
    }

    pub fn dim(&self, j: &Index) -> Result<usize> {
        self.check_index(j)?;
        self.levels.dim(j)
    }

    pub fn proj(&self, j: &Index, k: &Index) -> Result<DiffMap> {
        self.resolve(MapDir::Proj, j, k)
    }

    pub fn inj(&self, k: &Index, j: &Index) -> Result<DiffMap> {
        self.resolve(MapDir::Inj, j, k)
    }

    fn resolve(&self, dir: MapDir, lower: &Index, upper: &Index) -> Result<DiffMap> {
        self.check_index(lower)?;
        self.check_index(upper)?;
        if !self.poset.leq(lower, upper) {
            return Err(Error::NotComparable(lower.clone(), upper.clone()));
        }
        let key = (dir, lower.clone(), upper.clone());
        if let Some(m) = self.cache.lock().unwrap().get(&key) {
            return Ok(m.clone());
        }
        let (dl, du) = (self.levels.dim(lower)?, self.levels.dim(upper)?);
        let map = if lower == upper {
            DiffMap::identity(dl)
        } else {
            match dir {
                MapDir::Proj => self.levels.proj(lower, upper)?,
                MapDir::Inj => self.levels.inj(upper, lower)?,
            }
        };
        let (want_dom, want_cod) = match dir {
            MapDir::Proj => (du, dl),
            MapDir::Inj => (dl, du),
        };
        let what = match dir {
            MapDir::Proj => format!("proj({lower}, {upper})"),
            MapDir::Inj => format!("inj({upper}, {lower})"),
        };
        if map.domain_dim() != want_dom {
            return Err(Error::dims(format!("{what} domain"), want_dom, map.domain_dim()));
        }
        if map.codomain_dim() != want_cod {
            return Err(Error::dims(format!("{what} codomain"), want_cod, map.codomain_dim()));
        }
        self.cache.lock().unwrap().insert(key, map.clone());
        Ok(map)
    }

    /// The stored map for `proj(J, J)`, bypassing the identity shortcut.
    fn raw_self_proj(&self, j: &Index) -> Result<DiffMap> {
        self.levels.proj(j, j)
    }
}

/// Uniform random point in `[-1, 1]^n`.
pub fn random_point(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub family: String,
    pub tolerance: f64,
    pub axioms: Vec<AxiomResidual>,
    pub passed: bool,
}

impl FamilyReport {
    pub fn residual(&self, axiom: &str) -> f64 {
        self.axioms
            .iter()
            .find(|a| a.axiom == axiom)
            .map_or(0.0, |a| a.max_residual)
    }

    pub fn failing(&self) -> Vec<&AxiomResidual> {
        self.axioms.iter().filter(|a| !a.passed).collect()
    }
}

/// Checks identity, consistency, retraction and injection cocycle along every
/// ordered pair and triple of each sampled chain, at `points_per_chain` random
/// points of the relevant top level.
pub fn verify_family(
    family: &ProfiniteFamily,
    chains: &[Vec<Index>],
    points_per_chain: usize,
    tol: f64,
    seed: u64,
) -> Result<FamilyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut identity = AxiomResidual::new("identity", tol);
    let mut consistency = AxiomResidual::new("consistency", tol);
    let mut retraction = AxiomResidual::new("retraction", tol);
    let mut cocycle = AxiomResidual::new("injection-cocycle", tol);

    for chain in chains {
        for w in chain.windows(2) {
            if !family.poset.leq(&w[0], &w[1]) {
                return Err(Error::NotComparable(w[0].clone(), w[1].clone()));
            }
        }
        let label = chain.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" <= ");
        for _ in 0..points_per_chain {
            for j in chain {
                let n = family.dim(j)?;
                let x = random_point(&mut rng, n);
                let id = family.raw_self_proj(j)?;
                if id.domain_dim() != n || id.codomain_dim() != n {
                    return Err(Error::dims(format!("proj({j}, {j})"), n, id.domain_dim()));
                }
                identity.record(max_diff(&id.apply(&x)?, &x), &label);
            }
            for a in 0..chain.len() {
                for b in a + 1..chain.len() {
                    let (j, k) = (&chain[a], &chain[b]);
                    let x = random_point(&mut rng, family.dim(j)?);
                    let back = family.proj(j, k)?.apply(&family.inj(k, j)?.apply(&x)?)?;
                    retraction.record(max_diff(&back, &x), &format!("{j} <= {k}"));
                    for l in &chain[b + 1..] {
                        let xl = random_point(&mut rng, family.dim(l)?);
                        let direct = family.proj(j, l)?.apply(&xl)?;
                        let stepwise = family.proj(j, k)?.apply(&family.proj(k, l)?.apply(&xl)?)?;
                        consistency.record(max_diff(&direct, &stepwise), &format!("{j} <= {k} <= {l}"));
                        let direct = family.inj(l, j)?.apply(&x)?;
                        let stepwise = family.inj(l, k)?.apply(&family.inj(k, j)?.apply(&x)?)?;
                        cocycle.record(max_diff(&direct, &stepwise), &format!("{j} <= {k} <= {l}"));
                    }
                }
            }
        }
    }
    let axioms = vec![identity, consistency, retraction, cocycle];
    let passed = axioms.iter().all(|a| a.passed);
    Ok(FamilyReport {
        family: family.name().to_string(),
        tolerance: tol,
        axioms,
        passed,
    })
}

/// Random chains `J <= K <= L` drawn from an enumerable poset, or consecutive
/// runs of the given indices otherwise.
pub fn sample_chains(poset: &IndexPoset, count: usize, len: usize, seed: u64) -> Vec<Vec<Index>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(all) = poset.elements() else {
        return vec![];
    };
    let mut chains = Vec::with_capacity(count);
    for _ in 0..count {
        let mut chain = vec![all[rng.random_range(0..all.len())].clone()];
        while chain.len() < len {
            let last = chain.last().unwrap();
            let above: Vec<&Index> = all.iter().filter(|y| poset.leq(last, y)).collect();
            chain.push(above[rng.random_range(0..above.len())].clone());
        }
        chains.push(chain);
    }
    chains
}

type IndexMapFn = Arc<dyn Fn(&Index) -> Index + Send + Sync>;
type LevelMapFn = Arc<dyn Fn(&Index) -> Result<DiffMap> + Send + Sync>;

/// A map between families: an order-preserving index map and level maps
/// `f_J: X_J -> X'_{ind(J)}` commuting with the projections.
#[derive(Clone)]
pub struct ProfiniteMap {
    source: ProfiniteFamily,
    target: ProfiniteFamily,
    index_map: IndexMapFn,
    level_maps: LevelMapFn,
}

impl ProfiniteMap {
    pub fn new<I, L>(source: ProfiniteFamily, target: ProfiniteFamily, index_map: I, level_maps: L) -> Self
    where
        I: Fn(&Index) -> Index + Send + Sync + 'static,
        L: Fn(&Index) -> Result<DiffMap> + Send + Sync + 'static,
    {
        ProfiniteMap {
            source,
            target,
            index_map: Arc::new(index_map),
            level_maps: Arc::new(level_maps),
        }
    }

    pub fn identity(family: &ProfiniteFamily) -> Self {
        let f = family.clone();
        ProfiniteMap::new(family.clone(), family.clone(), |j| j.clone(), move |j| {
            Ok(DiffMap::identity(f.dim(j)?))
        })
    }

    pub fn source(&self) -> &ProfiniteFamily {
        &self.source
    }

    pub fn target(&self) -> &ProfiniteFamily {
        &self.target
    }

    pub fn index(&self, j: &Index) -> Index {
        (self.index_map)(j)
    }

    /// The level map at `J`, with its dimensions checked against both families.
    pub fn level(&self, j: &Index) -> Result<DiffMap> {
        let m = (self.level_maps)(j)?;
        let jt = self.index(j);
        let (d, c) = (self.source.dim(j)?, self.target.dim(&jt)?);
        if m.domain_dim() != d || m.codomain_dim() != c {
            return Err(Error::dims(format!("level map at {j}"), d, m.domain_dim()));
        }
        Ok(m)
    }

    /// Largest commuting-square residual `|π'(f_K(x)) - f_J(π(x))|` over the
    /// pairs and random points.
    pub fn commuting_residual(&self, pairs: &[(Index, Index)], points: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for (j, k) in pairs {
            let (jt, kt) = (self.index(j), self.index(k));
            if !self.target.poset().leq(&jt, &kt) {
                return Err(Error::NotComparable(jt, kt));
            }
            let fk = self.level(k)?;
            let fj = self.level(j)?;
            let pt = self.target.proj(&jt, &kt)?;
            let ps = self.source.proj(j, k)?;
            for _ in 0..points {
                let x = random_point(&mut rng, self.source.dim(k)?);
                let lhs = pt.apply(&fk.apply(&x)?)?;
                let rhs = fj.apply(&ps.apply(&x)?)?;
                worst = worst.max(max_diff(&lhs, &rhs));
            }
        }
        Ok(worst)
    }
}

/// `f ∘ g`, re-verifying the commuting square on the sample pairs.
pub fn compose_profinite_maps(
    f: &ProfiniteMap,
    g: &ProfiniteMap,
    pairs: &[(Index, Index)],
    tol: f64,
) -> Result<ProfiniteMap> {
    f.source.ensure_same(&g.target)?;
    let (fi, gi) = (f.index_map.clone(), g.index_map.clone());
    let (f2, g2) = (f.clone(), g.clone());
    let composite = ProfiniteMap {
        source: g.source.clone(),
        target: f.target.clone(),
        index_map: Arc::new(move |j| fi(&gi(j))),
        level_maps: Arc::new(move |j| {
            let inner = g2.level(j)?;
            let outer = f2.level(&g2.index(j))?;
            outer.after(&inner)
        }),
    };
    for (j, k) in pairs {
        let r = composite.commuting_residual(&[(j.clone(), k.clone())], 3, 0)?;
        if r > tol {
            return Err(Error::CommutingSquare {
                lower: j.clone(),
                upper: k.clone(),
                residual: r,
            });
        }
    }
    Ok(composite)
}

/// True iff `g ∘ f` and `f ∘ g` are the identity on the sampled indices and
/// points. Level maps may move a level to a different index.
pub fn is_profinite_diffeomorphism(
    f: &ProfiniteMap,
    g: &ProfiniteMap,
    indices: &[Index],
    points: usize,
    tol: f64,
    seed: u64,
) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (a, b) in [(f, g), (g, f)] {
        a.source.ensure_same(&b.target)?;
        for j in indices {
            let mid = a.index(j);
            if b.index(&mid) != *j {
                return Ok(false);
            }
            let comp = b.level(&mid)?.after(&a.level(j)?)?;
            for _ in 0..points {
                let x = random_point(&mut rng, a.source.dim(j)?);
                if max_diff(&comp.apply(&x)?, &x) > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

struct TangentLevels {
    base: ProfiniteFamily,
}

/// `(x, v) ↦ (f(x), Df(x) v)` on `R^{2n}`.
fn tangent_map(map: DiffMap) -> DiffMap {
    let (n, m) = (map.domain_dim(), map.codomain_dim());
    if let Some(a) = map.as_linear() {
        return DiffMap::block_diagonal(&[DiffMap::linear(a.clone()), DiffMap::linear(a.clone())]);
    }
    DiffMap::smooth(2 * n, 2 * m, move |xv| {
        let x = xv.rows(0, n).into_owned();
        let v = xv.rows(n, n).into_owned();
        let y = map.apply(&x).expect("dimension checked");
        let dv = map.jacobian(&x).expect("dimension checked") * v;
        linalg::concat(&[y, dv])
    })
}

impl LevelStructure for TangentLevels {
    fn dim(&self, j: &Index) -> Result<usize> {
        Ok(2 * self.base.dim(j)?)
    }

    fn proj(&self, j: &Index, k: &Index) -> Result<DiffMap> {
        Ok(tangent_map(self.base.proj(j, k)?))
    }

    fn inj(&self, k: &Index, j: &Index) -> Result<DiffMap> {
        Ok(tangent_map(self.base.inj(k, j)?))
    }
}

/// The tangent family: level `J` is `E_J ⊕ T E_J` with `(x, v)` transported
/// by `(π(x), Dπ(x) v)` and likewise for injections.
pub fn tangent_family(family: &ProfiniteFamily) -> ProfiniteFamily {
    ProfiniteFamily::new(
        format!("T({})", family.name()),
        family.poset().clone(),
        Arc::new(TangentLevels { base: family.clone() }),
    )
}

/// Covector transport between levels `J <= K` at a point of level `K`.
#[derive(Clone, Debug)]
pub struct CotangentMaps {
    /// `α ↦ α ∘ dπ`: covectors of level `J` to level `K`, shape `dim K x dim J`.
    pub push_up: DMatrix<f64>,
    /// `α ↦ α ∘ di`: covectors of level `K` to level `J`, shape `dim J x dim K`.
    pub push_down: DMatrix<f64>,
}

impl CotangentMaps {
    pub fn up(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.push_up * alpha
    }

    pub fn down(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.push_down * alpha
    }
}

/// Transposes of `Dπ(J, K)` at `point` and of `Di(K, J)` at `π(point)`.
pub fn cotangent_maps(family: &ProfiniteFamily, j: &Index, k: &Index, point: &DVector<f64>) -> Result<CotangentMaps> {
    let p = family.proj(j, k)?;
    let down_pt = p.apply(point)?;
    let dp = p.jacobian(point)?;
    let di = family.inj(k, j)?.jacobian(&down_pt)?;
    Ok(CotangentMaps {
        push_up: dp.transpose(),
        push_down: di.transpose(),
    })
}

/// Bundle data: total family `E`, base `M`, fiber `F` and level-wise bundle
/// projections `E_J -> M_J`.
#[derive(Clone)]
pub struct FibrationData {
    pub total: ProfiniteFamily,
    pub base: ProfiniteFamily,
    pub fiber: ProfiniteFamily,
    pub bundle_proj: LevelMapFn,
}

impl FibrationData {
    pub fn new<L>(total: ProfiniteFamily, base: ProfiniteFamily, fiber: ProfiniteFamily, bundle_proj: L) -> Self
    where
        L: Fn(&Index) -> Result<DiffMap> + Send + Sync + 'static,
    {
        FibrationData {
            total,
            base,
            fiber,
            bundle_proj: Arc::new(bundle_proj),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FibrationReport {
    pub projection: AxiomResidual,
    pub injection: AxiomResidual,
    pub passed: bool,
}

/// Checks that bundle projections intertwine the projections and injections
/// of the total and base families.
pub fn verify_fibration(
    data: &FibrationData,
    pairs: &[(Index, Index)],
    points: usize,
    tol: f64,
    seed: u64,
) -> Result<FibrationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut proj_res = AxiomResidual::new("bundle-projection", tol);
    let mut inj_res = AxiomResidual::new("bundle-injection", tol);
    let check_dims = |j: &Index| -> Result<DiffMap> {
        let (e, m, f) = (data.total.dim(j)?, data.base.dim(j)?, data.fiber.dim(j)?);
        if e != m + f {
            return Err(Error::dims(format!("total level {j}"), m + f, e));
        }
        let b = (data.bundle_proj)(j)?;
        if b.domain_dim() != e || b.codomain_dim() != m {
            return Err(Error::dims(format!("bundle projection at {j}"), e, b.domain_dim()));
        }
        Ok(b)
    };
    for (j, k) in pairs {
        let (bj, bk) = (check_dims(j)?, check_dims(k)?);
        let (pe, pm) = (data.total.proj(j, k)?, data.base.proj(j, k)?);
        let (ie, im) = (data.total.inj(k, j)?, data.base.inj(k, j)?);
        let label = format!("{j} <= {k}");
        for _ in 0..points {
            let x = random_point(&mut rng, data.total.dim(k)?);
            let r = max_diff(&bj.apply(&pe.apply(&x)?)?, &pm.apply(&bk.apply(&x)?)?);
            proj_res.record(r, &label);
            let y = random_point(&mut rng, data.total.dim(j)?);
            let r = max_diff(&bk.apply(&ie.apply(&y)?)?, &im.apply(&bj.apply(&y)?)?);
            inj_res.record(r, &label);
        }
    }
    let passed = proj_res.passed && inj_res.passed;
    Ok(FibrationReport {
        projection: proj_res,
        injection: inj_res,
        passed,
    })
}

struct ProductLevels {
    factors: Vec<ProfiniteFamily>,
}

impl LevelStructure for ProductLevels {
    fn dim(&self, j: &Index) -> Result<usize> {
        self.factors.iter().map(|f| f.dim(j)).sum()
    }

    fn proj(&self, j: &Index, k: &Index) -> Result<DiffMap> {
        let maps = self.factors.iter().map(|f| f.proj(j, k)).collect::<Result<Vec<_>>>()?;
        Ok(DiffMap::block_diagonal(&maps))
    }

    fn inj(&self, k: &Index, j: &Index) -> Result<DiffMap> {
        let maps = self.factors.iter().map(|f| f.inj(k, j)).collect::<Result<Vec<_>>>()?;
        Ok(DiffMap::block_diagonal(&maps))
    }
}

/// Level-wise product of families over the same poset.
pub fn product_family(factors: &[ProfiniteFamily]) -> Result<ProfiniteFamily> {
    let first = factors.first().ok_or(Error::EmptySample)?;
    for f in factors {
        if f.poset() != first.poset() {
            return Err(Error::FamilyMismatch {
                expected: first.name().to_string(),
                found: f.name().to_string(),
            });
        }
    }
    let name = factors.iter().map(|f| f.name()).collect::<Vec<_>>().join(" x ");
    Ok(ProfiniteFamily::new(
        name,
        first.poset().clone(),
        Arc::new(ProductLevels {
            factors: factors.to_vec(),
        }),
    ))
}

/// Bundle data of the tangent family over its base: the fiber is the base
/// family itself and the bundle projection drops the vector slot.
pub fn tangent_bundle(family: &ProfiniteFamily) -> FibrationData {
    let f = family.clone();
    FibrationData::new(tangent_family(family), family.clone(), family.clone(), move |j| {
        let n = f.dim(j)?;
        let mut m = DMatrix::zeros(n, 2 * n);
        m.view_mut((0, 0), (n, n)).fill_with_identity();
        Ok(DiffMap::linear(m))
    })
}

/// Largest relative deviation between analytic and finite-difference Jacobians.
pub fn jacobian_fd_residual(map: &DiffMap, x: &DVector<f64>) -> Result<f64> {
    let a = map.jacobian(x)?;
    let fd = map.fd_jacobian(x)?;
    let scale = 1.0 + linalg::max_abs_mat(&a);
    Ok(max_diff_mat(&a, &fd) / scale)
}
