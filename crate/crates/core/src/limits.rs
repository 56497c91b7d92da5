//! Elements of the product limit (threads) and of the inductive limit
//! (section points), and lifting of level-wise algebraic structure.
//!
//! Threads are value oracles `J ↦ x_J`. Equality and consistency can only be
//! checked on finitely many sampled indices.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::ProfiniteFamily;
use crate::linalg::max_diff;
use crate::poset::{Index, Section};

/// Agreement tolerance for section data, relative to the value scale.
pub const SECTION_AGREEMENT_TOL: f64 = 1e-9;

type Oracle = Arc<dyn Fn(&Index) -> Result<DVector<f64>> + Send + Sync>;

/// A point of the product limit: a consistent assignment `J ↦ x_J`,
/// evaluated lazily and memoized.
#[derive(Clone)]
pub struct Thread {
    family: ProfiniteFamily,
    oracle: Oracle,
    memo: Arc<Mutex<HashMap<Index, DVector<f64>>>>,
    origin: Option<Arc<SectionPoint>>,
    label: Option<Arc<str>>,
}

impl fmt::Debug for Thread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Thread({} in {})", self.label.as_deref().unwrap_or("oracle"), self.family.name())
    }
}

impl Thread {
    pub fn from_oracle<F>(family: &ProfiniteFamily, oracle: F) -> Self
    where
        F: Fn(&Index) -> Result<DVector<f64>> + Send + Sync + 'static,
    {
        Thread {
            family: family.clone(),
            oracle: Arc::new(oracle),
            memo: Arc::new(Mutex::new(HashMap::new())),
            origin: None,
            label: None,
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(Arc::from(label));
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn family(&self) -> &ProfiniteFamily {
        &self.family
    }

    /// The section point this thread was extended from, if any.
    pub fn origin(&self) -> Option<&SectionPoint> {
        self.origin.as_deref()
    }

    pub fn value(&self, j: &Index) -> Result<DVector<f64>> {
        if let Some(v) = self.memo.lock().unwrap().get(j) {
            return Ok(v.clone());
        }
        let n = self.family.dim(j)?;
        let v = (self.oracle)(j)?;
        if v.len() != n {
            return Err(Error::dims(format!("thread value at {j}"), n, v.len()));
        }
        self.memo.lock().unwrap().insert(j.clone(), v.clone());
        Ok(v)
    }

    /// Max-norm distance to `other` on the sampled indices.
    pub fn distance_on(&self, other: &Thread, indices: &[Index]) -> Result<f64> {
        self.family.ensure_same(&other.family)?;
        let mut worst: f64 = 0.0;
        for j in indices {
            worst = worst.max(max_diff(&self.value(j)?, &other.value(j)?));
        }
        Ok(worst)
    }

    /// Equality on a finite sample of indices; never a proof of equality.
    pub fn equal_on(&self, other: &Thread, indices: &[Index], tol: f64) -> Result<bool> {
        Ok(self.distance_on(other, indices)? <= tol)
    }

    /// Values on the members of `section`.
    pub fn restrict(&self, section: &Section) -> Result<SectionPoint> {
        let values = section
            .members()
            .map(|s| Ok((s.clone(), self.value(s)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(SectionPoint {
            family_name: self.family.name().to_string(),
            section: section.clone(),
            values,
        })
    }
}

/// Data over a section: one point per member.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectionPoint {
    family_name: String,
    section: Section,
    values: BTreeMap<Index, DVector<f64>>,
}

impl SectionPoint {
    pub fn new(family: &ProfiniteFamily, section: Section, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != section.len() {
            return Err(Error::dims("section values", section.len(), values.len()));
        }
        let mut map = BTreeMap::new();
        for (s, v) in section.members().zip(values) {
            let n = family.dim(s)?;
            if v.len() != n {
                return Err(Error::dims(format!("section value at {s}"), n, v.len()));
            }
            map.insert(s.clone(), v);
        }
        Ok(SectionPoint {
            family_name: family.name().to_string(),
            section,
            values: map,
        })
    }

    pub fn section(&self) -> &Section {
        &self.section
    }

    pub fn value(&self, s: &Index) -> Option<&DVector<f64>> {
        self.values.get(s)
    }

    /// Member values in canonical member order.
    pub fn values(&self) -> impl Iterator<Item = (&Index, &DVector<f64>)> {
        self.values.iter()
    }

    pub fn family_name(&self) -> &str {
        &self.family_name
    }
}

fn agree(a: &DVector<f64>, b: &DVector<f64>) -> (bool, f64) {
    let r = max_diff(a, b);
    let scale = 1.0 + a.amax().max(b.amax());
    (r <= SECTION_AGREEMENT_TOL * scale, r)
}

/// Value of the section extension at `i`: projected down from the members above
/// `i`, otherwise injected up from the members below it.
fn extend_at(family: &ProfiniteFamily, sp: &SectionPoint, i: &Index) -> Result<DVector<f64>> {
    let poset = family.poset();
    let mut candidates = Vec::new();
    for (s, x) in &sp.values {
        if poset.leq(i, s) {
            candidates.push(family.proj(i, s)?.apply(x)?);
        }
    }
    if candidates.is_empty() {
        for (s, x) in &sp.values {
            if poset.leq(s, i) {
                candidates.push(family.inj(i, s)?.apply(x)?);
            }
        }
    }
    let Some(first) = candidates.first() else {
        return Err(Error::Incomparable(i.clone()));
    };
    for c in &candidates[1..] {
        let (ok, r) = agree(first, c);
        if !ok {
            return Err(Error::IllDefinedSection {
                index: i.clone(),
                residual: r,
            });
        }
    }
    Ok(first.clone())
}

/// Indices where two members of the section constrain each other: common lower
/// and upper bounds (all of them for finite posets, meet and join otherwise),
/// plus the caller's probe.
fn coherence_indices(family: &ProfiniteFamily, sp: &SectionPoint, probe: &[Index]) -> Vec<Index> {
    let poset = family.poset();
    let members: Vec<&Index> = sp.section.members().collect();
    let mut out: Vec<Index> = probe.to_vec();
    if let Some(all) = poset.elements() {
        for i in all {
            let below = members.iter().filter(|s| poset.leq(&i, s)).count();
            let above = members.iter().filter(|s| poset.leq(s, &i)).count();
            if below >= 2 || above >= 2 {
                out.push(i);
            }
        }
    } else {
        for (a, s) in members.iter().enumerate() {
            for t in &members[a + 1..] {
                out.extend(poset.meet(s, t));
                out.extend(poset.join(s, t).ok());
            }
        }
    }
    out
}

/// Checks that the members' data agree wherever two members constrain the same index.
pub fn check_section_point(family: &ProfiniteFamily, sp: &SectionPoint, probe: &[Index]) -> Result<()> {
    if sp.family_name != family.name() {
        return Err(Error::FamilyMismatch {
            expected: family.name().to_string(),
            found: sp.family_name.clone(),
        });
    }
    for i in coherence_indices(family, sp, probe) {
        match extend_at(family, sp, &i) {
            Ok(_) | Err(Error::Incomparable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Extends section data to a thread: below a member the value is projected
/// down, above a member it is injected up.
pub fn thread_from_section(family: &ProfiniteFamily, sp: &SectionPoint) -> Result<Thread> {
    check_section_point(family, sp, &[])?;
    let f = family.clone();
    let data = sp.clone();
    let mut t = Thread::from_oracle(family, move |i| extend_at(&f, &data, i));
    t.origin = Some(Arc::new(sp.clone()));
    Ok(t)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThreadReport {
    pub max_residual: f64,
    pub worst_pair: Option<(Index, Index)>,
    pub pairs_checked: usize,
    pub passed: bool,
}

/// Max residual of `x_J = π(J, K)(x_K)` over the sampled pairs.
pub fn check_thread(t: &Thread, pairs: &[(Index, Index)], tol: f64) -> Result<ThreadReport> {
    let mut worst = 0.0;
    let mut worst_pair = None;
    for (j, k) in pairs {
        let r = max_diff(&t.value(j)?, &t.family.proj(j, k)?.apply(&t.value(k)?)?);
        if r > worst || r.is_nan() {
            worst = if r.is_nan() { f64::INFINITY } else { r };
            worst_pair = Some((j.clone(), k.clone()));
        }
    }
    Ok(ThreadReport {
        max_residual: worst,
        worst_pair,
        pairs_checked: pairs.len(),
        passed: worst <= tol,
    })
}

/// Consecutive pairs `(J_n, J_{n+1})` of an index list.
pub fn consecutive_pairs(indices: &[Index]) -> Vec<(Index, Index)> {
    indices.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
}

/// The first candidate section whose extension reproduces `t` on the probe
/// indices comparable to it. `None` only means no candidate matched.
pub fn is_inductive(t: &Thread, candidates: &[Section], probe: &[Index], tol: f64) -> Result<Option<SectionPoint>> {
    for s in candidates {
        let sp = t.restrict(s)?;
        let ext = match thread_from_section(&t.family, &sp) {
            Ok(e) => e,
            Err(Error::IllDefinedSection { .. }) => continue,
            Err(e) => return Err(e),
        };
        let mut matches = true;
        for i in probe {
            match ext.value(i) {
                Ok(v) => {
                    if max_diff(&v, &t.value(i)?) > tol {
                        matches = false;
                        break;
                    }
                }
                Err(Error::Incomparable(_)) => {}
                Err(Error::IllDefinedSection { .. }) => {
                    matches = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if matches {
            return Ok(Some(sp));
        }
    }
    Ok(None)
}

type LawFn = Arc<dyn Fn(&Index, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
type InverseFn = Arc<dyn Fn(&Index, &DVector<f64>) -> Option<DVector<f64>> + Send + Sync>;
type NeutralFn = Arc<dyn Fn(&Index, usize) -> DVector<f64> + Send + Sync>;

/// Level-wise binary law with optional inverse and neutral element.
#[derive(Clone)]
pub struct AlgebraicStructure {
    name: String,
    family: ProfiniteFamily,
    law: LawFn,
    inverse: Option<InverseFn>,
    neutral: Option<NeutralFn>,
}

impl AlgebraicStructure {
    pub fn new<L>(name: &str, family: &ProfiniteFamily, law: L) -> Self
    where
        L: Fn(&Index, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        AlgebraicStructure {
            name: name.to_string(),
            family: family.clone(),
            law: Arc::new(law),
            inverse: None,
            neutral: None,
        }
    }

    pub fn with_inverse<F>(mut self, inv: F) -> Self
    where
        F: Fn(&Index, &DVector<f64>) -> Option<DVector<f64>> + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(inv));
        self
    }

    /// Neutral element as a function of level index and dimension.
    pub fn with_neutral<F>(mut self, e: F) -> Self
    where
        F: Fn(&Index, usize) -> DVector<f64> + Send + Sync + 'static,
    {
        self.neutral = Some(Arc::new(e));
        self
    }

    /// Coordinate-wise addition with negation and zero.
    pub fn addition(family: &ProfiniteFamily) -> Self {
        AlgebraicStructure::new("addition", family, |_, x, y| x + y)
            .with_inverse(|_, x| Some(-x))
            .with_neutral(|_, n| DVector::zeros(n))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &ProfiniteFamily {
        &self.family
    }

    pub fn apply(&self, j: &Index, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        (self.law)(j, x, y)
    }

    /// The neutral thread, when a neutral element is known.
    pub fn neutral_thread(&self) -> Option<Thread> {
        let e = self.neutral.clone()?;
        let f = self.family.clone();
        Some(
            Thread::from_oracle(&self.family, move |j| Ok(e(j, f.dim(j)?)))
                .with_label(&format!("neutral of {}", self.name)),
        )
    }

    /// Largest `|π(x_K ⊢ y_K) - π(x_K) ⊢ π(y_K)|` over the pairs.
    pub fn morphism_residual(&self, x: &Thread, y: &Thread, pairs: &[(Index, Index)]) -> Result<Option<(Index, Index, f64)>> {
        let mut worst: Option<(Index, Index, f64)> = None;
        for (j, k) in pairs {
            let p = self.family.proj(j, k)?;
            let (xk, yk) = (x.value(k)?, y.value(k)?);
            let lhs = p.apply(&self.apply(k, &xk, &yk))?;
            let rhs = self.apply(j, &p.apply(&xk)?, &p.apply(&yk)?);
            let r = max_diff(&lhs, &rhs);
            if worst.as_ref().is_none_or(|w| r > w.2) {
                worst = Some((j.clone(), k.clone(), r));
            }
        }
        Ok(worst)
    }
}

fn morphism_gate(worst: Option<(Index, Index, f64)>, tol: f64) -> Result<()> {
    match worst {
        Some((lower, upper, residual)) if residual > tol || residual.is_nan() => Err(Error::MorphismViolation { lower, upper, residual }),
        _ => Ok(()),
    }
}

/// `J ↦ x_J ⊢_J y_J`, after checking that projections are morphisms for the
/// law on the operands' values at the sampled pairs.
pub fn lift_binary(op: &AlgebraicStructure, x: &Thread, y: &Thread, pairs: &[(Index, Index)], tol: f64) -> Result<Thread> {
    op.family.ensure_same(&x.family)?;
    op.family.ensure_same(&y.family)?;
    morphism_gate(op.morphism_residual(x, y, pairs)?, tol)?;
    let (op2, x2, y2) = (op.clone(), x.clone(), y.clone());
    Ok(Thread::from_oracle(&op.family, move |j| Ok(op2.apply(j, &x2.value(j)?, &y2.value(j)?)))
        .with_label(&format!("{} of threads", op.name)))
}

/// `J ↦ x_J^{-1}`; the inverse is checked eagerly on `indices`.
pub fn lift_inverse(op: &AlgebraicStructure, x: &Thread, indices: &[Index]) -> Result<Thread> {
    op.family.ensure_same(&x.family)?;
    let inv = op
        .inverse
        .clone()
        .ok_or_else(|| Error::Invalid(format!("{} has no inverse", op.name)))?;
    for j in indices {
        if inv(j, &x.value(j)?).is_none() {
            return Err(Error::NotInvertible(j.clone()));
        }
    }
    let x2 = x.clone();
    Ok(Thread::from_oracle(&op.family, move |j| {
        inv(j, &x2.value(j)?).ok_or_else(|| Error::NotInvertible(j.clone()))
    })
    .with_label("inverse thread"))
}

type ActFn = Arc<dyn Fn(&Index, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Level-wise action of a ring family on a module family.
#[derive(Clone)]
pub struct ScalarAction {
    ring: ProfiniteFamily,
    module: ProfiniteFamily,
    act: ActFn,
}

impl ScalarAction {
    pub fn new<A>(ring: &ProfiniteFamily, module: &ProfiniteFamily, act: A) -> Self
    where
        A: Fn(&Index, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        ScalarAction {
            ring: ring.clone(),
            module: module.clone(),
            act: Arc::new(act),
        }
    }

    pub fn apply(&self, j: &Index, r: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        (self.act)(j, r, x)
    }
}

/// `J ↦ r_J · x_J`, after checking compatibility with both families'
/// projections on the sampled pairs.
pub fn lift_scalar_action(action: &ScalarAction, r: &Thread, x: &Thread, pairs: &[(Index, Index)], tol: f64) -> Result<Thread> {
    action.ring.ensure_same(&r.family)?;
    action.module.ensure_same(&x.family)?;
    let mut worst: Option<(Index, Index, f64)> = None;
    for (j, k) in pairs {
        let pr = action.ring.proj(j, k)?;
        let pm = action.module.proj(j, k)?;
        let (rk, xk) = (r.value(k)?, x.value(k)?);
        let lhs = pm.apply(&action.apply(k, &rk, &xk))?;
        let rhs = action.apply(j, &pr.apply(&rk)?, &pm.apply(&xk)?);
        let res = max_diff(&lhs, &rhs);
        if worst.as_ref().is_none_or(|w| res > w.2) {
            worst = Some((j.clone(), k.clone(), res));
        }
    }
    morphism_gate(worst, tol)?;
    let (a, r2, x2) = (action.clone(), r.clone(), x.clone());
    Ok(Thread::from_oracle(&action.module, move |j| Ok(a.apply(j, &r2.value(j)?, &x2.value(j)?)))
        .with_label("scalar action"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use nalgebra::dvector;

    fn nat(n: u64) -> Index {
        Index::Nat(n)
    }

    #[test]
    fn euclid_section_extension() {
        let f = gallery::euclid_tower(6);
        let sp = SectionPoint::new(&f, Section::single(nat(2)), vec![dvector![3.0, 4.0]]).unwrap();
        let t = thread_from_section(&f, &sp).unwrap();
        assert_eq!(t.value(&nat(1)).unwrap(), dvector![3.0]);
        assert_eq!(t.value(&nat(4)).unwrap(), dvector![3.0, 4.0, 0.0, 0.0]);
        let pairs = consecutive_pairs(&(1..=6).map(nat).collect::<Vec<_>>());
        assert_eq!(check_thread(&t, &pairs, 0.0).unwrap().max_residual, 0.0);
        assert_eq!(t.restrict(&Section::single(nat(2))).unwrap(), sp);
    }

    #[test]
    fn cross_family_conflicting_injections() {
        let f = gallery::cross_family();
        let s = Section::new(f.poset(), [Index::name("J"), Index::name("K")]).unwrap();
        let sp = SectionPoint::new(&f, s, vec![dvector![1.0], dvector![2.0]]).unwrap();
        let err = thread_from_section(&f, &sp).unwrap_err();
        assert!(matches!(err, Error::IllDefinedSection { ref index, .. } if *index == Index::name("L")));
        assert_eq!(extend_at(&f, &sp, &Index::name("I")).unwrap().len(), 0);
    }

    #[test]
    fn inductive_membership() {
        let f = gallery::poly_tower(15);
        let probe: Vec<Index> = (0..=15).map(nat).collect();
        let candidates: Vec<Section> = (0..=10).map(|k| Section::single(nat(k))).collect();
        let p = gallery::polynomial_thread(&f, &[1.0, 0.0, 1.0]).unwrap();
        let found = is_inductive(&p, &candidates, &probe, 1e-12).unwrap().unwrap();
        assert_eq!(found.section(), &Section::single(nat(2)));
        let e = gallery::exp_series_thread(&f);
        assert!(is_inductive(&e, &candidates, &probe, 1e-12).unwrap().is_none());
        let z = gallery::polynomial_thread(&f, &[]).unwrap();
        let found = is_inductive(&z, &candidates, &probe, 0.0).unwrap().unwrap();
        assert_eq!(found.section(), &Section::single(nat(0)));
    }

    #[test]
    fn corrupted_thread_detected() {
        let f = gallery::euclid_tower(4);
        let t = Thread::from_oracle(&f, |j| {
            let n = j.as_nat().unwrap() as usize;
            let mut v = DVector::from_element(n, 1.0);
            if n == 3 {
                v[0] += 0.25;
            }
            Ok(v)
        });
        let pairs = consecutive_pairs(&(1..=4).map(nat).collect::<Vec<_>>());
        let rep = check_thread(&t, &pairs, 1e-12).unwrap();
        assert!((rep.max_residual - 0.25).abs() < 1e-15);
        assert!(!rep.passed);
    }

    #[test]
    fn addition_lifts_and_inverts() {
        let f = gallery::euclid_tower(5);
        let x = gallery::coordinate_thread(&f, |i| (i as f64 + 1.0).sqrt());
        let add = AlgebraicStructure::addition(&f);
        let idx: Vec<Index> = (1..=5).map(nat).collect();
        let neg = lift_inverse(&add, &x, &idx).unwrap();
        let pairs = consecutive_pairs(&idx);
        let sum = lift_binary(&add, &x, &neg, &pairs, 1e-12).unwrap();
        let zero = add.neutral_thread().unwrap();
        assert_eq!(sum.distance_on(&zero, &idx).unwrap(), 0.0);
    }

    #[test]
    fn family_mismatch() {
        let a = gallery::euclid_tower(3);
        let b = gallery::poly_tower(3);
        let x = gallery::coordinate_thread(&a, |_| 1.0);
        let y = gallery::polynomial_thread(&b, &[1.0]).unwrap();
        let add = AlgebraicStructure::addition(&a);
        assert!(matches!(lift_binary(&add, &x, &y, &[], 0.0), Err(Error::FamilyMismatch { .. })));
    }
}
