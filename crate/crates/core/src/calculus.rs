//! Tame differential forms, exterior derivative, compatible metrics and
//! tangent threads.
//!
//! An `r`-form on `R^n` is stored densely by its components `ω_I` over
//! increasing multi-indices `I` in lexicographic order.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cylinder::CylindricalFunction;
use crate::error::{Error, Result};
use crate::family::{random_point, tangent_family, DiffMap, ProfiniteFamily};
use crate::limits::{thread_from_section, SectionPoint, Thread};
use crate::linalg::{self, combinations, max_diff, minor, FD_REL_STEP, RANK_REL_THRESHOLD};
use crate::poly::Poly;
use crate::poset::{is_finitely_cylindrical_witness, Index, IndexSet, Section};
use crate::report::AxiomResidual;

/// Sorts a multi-index, returning the permutation sign, or `None` when an
/// index repeats.
fn sort_with_sign(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            } else if v[j] == v[j + 1] {
                return None;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

fn slot_of(combos: &[Vec<usize>], sorted: &[usize]) -> usize {
    combos.binary_search_by(|c| c.as_slice().cmp(sorted)).expect("valid multi-index")
}

/// A constant alternating `r`-form on `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AltForm {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl AltForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        AltForm {
            dim,
            degree,
            coeffs: vec![0.0; combinations(dim, degree).len()],
        }
    }

    /// Sums `c · dx_{i_1} ∧ ... ∧ dx_{i_r}` over the given terms; the indices
    /// need not be increasing.
    pub fn from_components(dim: usize, degree: usize, terms: &[(Vec<usize>, f64)]) -> Self {
        let combos = combinations(dim, degree);
        let mut out = AltForm::zero(dim, degree);
        for (idx, c) in terms {
            assert_eq!(idx.len(), degree, "multi-index length must equal the degree");
            if let Some((sorted, sign)) = sort_with_sign(idx) {
                out.coeffs[slot_of(&combos, &sorted)] += sign * c;
            }
        }
        out
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let n = combinations(dim, degree).len();
        if coeffs.len() != n {
            return Err(Error::dims("form components", n, coeffs.len()));
        }
        Ok(AltForm { dim, degree, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Components over increasing multi-indices, lexicographically ordered.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `ω_I` for any multi-index, with the antisymmetry sign.
    pub fn component(&self, idx: &[usize]) -> f64 {
        match sort_with_sign(idx) {
            Some((sorted, sign)) => sign * self.coeffs[slot_of(&combinations(self.dim, self.degree), &sorted)],
            None => 0.0,
        }
    }

    /// `ω(v_1, ..., v_r) = Σ_I ω_I det(v[I])`.
    pub fn eval(&self, vectors: &[DVector<f64>]) -> Result<f64> {
        if vectors.len() != self.degree {
            return Err(Error::dims("form arguments", self.degree, vectors.len()));
        }
        for v in vectors {
            if v.len() != self.dim {
                return Err(Error::dims("form argument", self.dim, v.len()));
            }
        }
        let m = DMatrix::from_fn(self.dim, self.degree, |r, c| vectors[c][r]);
        let cols: Vec<usize> = (0..self.degree).collect();
        Ok(combinations(self.dim, self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|(i, c)| c * minor(&m, i, &cols))
            .sum())
    }

    /// `A^* ω` for a linear map `A: R^m -> R^n`, via `r x r` minors of `A`.
    pub fn pullback(&self, a: &DMatrix<f64>) -> Result<AltForm> {
        if a.nrows() != self.dim {
            return Err(Error::dims("pullback matrix rows", self.dim, a.nrows()));
        }
        let m = a.ncols();
        let src = combinations(self.dim, self.degree);
        let coeffs = combinations(m, self.degree)
            .iter()
            .map(|j| src.iter().zip(&self.coeffs).map(|(i, c)| c * minor(a, i, j)).sum())
            .collect();
        Ok(AltForm {
            dim: m,
            degree: self.degree,
            coeffs,
        })
    }

    /// `M_ab = ω(e_a, e_b)` for a 2-form.
    pub fn as_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.degree, 2, "matrix form needs degree 2");
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (idx, c) in combinations(self.dim, 2).iter().zip(&self.coeffs) {
            m[(idx[0], idx[1])] = *c;
            m[(idx[1], idx[0])] = -c;
        }
        m
    }

    /// The 2-form with `ω(e_a, e_b) = (M_ab - M_ba) / 2`.
    pub fn from_matrix(m: &DMatrix<f64>) -> AltForm {
        let n = m.nrows();
        let coeffs = combinations(n, 2)
            .iter()
            .map(|i| 0.5 * (m[(i[0], i[1])] - m[(i[1], i[0])]))
            .collect();
        AltForm { dim: n, degree: 2, coeffs }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Max-norm distance; infinite when shapes differ.
    pub fn max_diff(&self, other: &AltForm) -> f64 {
        if self.dim != other.dim || self.degree != other.degree {
            return f64::INFINITY;
        }
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

type SmoothFieldFn = Arc<dyn Fn(&DVector<f64>) -> AltForm + Send + Sync>;

/// A form field on one level: constant, polynomial (exact derivatives) or a
/// general smooth field (finite-difference derivatives).
#[derive(Clone)]
pub enum FormField {
    Constant(AltForm),
    Polynomial { dim: usize, degree: usize, coeffs: Vec<Poly> },
    Smooth { dim: usize, degree: usize, f: SmoothFieldFn },
}

impl fmt::Debug for FormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self {
            FormField::Constant(_) => "constant",
            FormField::Polynomial { .. } => "polynomial",
            FormField::Smooth { .. } => "smooth",
        };
        write!(f, "FormField({kind}, {}-form on R^{})", self.degree(), self.dim())
    }
}

/// `(dω)_I = Σ_p (-1)^p ∂_{I_p} ω_{I \ I_p}`, given the partial derivatives of
/// the components.
fn assemble_d<T, Z, A>(n: usize, r: usize, partial: impl Fn(usize, usize) -> T, zero: Z, add: A) -> Vec<T>
where
    Z: Fn() -> T,
    A: Fn(T, T, f64) -> T,
{
    let src = combinations(n, r);
    combinations(n, r + 1)
        .iter()
        .map(|idx| {
            let mut acc = zero();
            for p in 0..idx.len() {
                let rest: Vec<usize> = idx.iter().enumerate().filter(|(q, _)| *q != p).map(|(_, v)| *v).collect();
                let k = slot_of(&src, &rest);
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                acc = add(acc, partial(idx[p], k), sign);
            }
            acc
        })
        .collect()
}

impl FormField {
    /// Polynomial field from `(multi-index, coefficient)` terms.
    pub fn polynomial(dim: usize, degree: usize, terms: Vec<(Vec<usize>, Poly)>) -> FormField {
        let combos = combinations(dim, degree);
        let mut coeffs = vec![Poly::zero(dim); combos.len()];
        for (idx, p) in terms {
            if let Some((sorted, sign)) = sort_with_sign(&idx) {
                let k = slot_of(&combos, &sorted);
                coeffs[k] = coeffs[k].add(&p.scale(sign));
            }
        }
        FormField::Polynomial { dim, degree, coeffs }
    }

    pub fn smooth<F>(dim: usize, degree: usize, f: F) -> FormField
    where
        F: Fn(&DVector<f64>) -> AltForm + Send + Sync + 'static,
    {
        FormField::Smooth {
            dim,
            degree,
            f: Arc::new(f),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FormField::Constant(a) => a.dim,
            FormField::Polynomial { dim, .. } | FormField::Smooth { dim, .. } => *dim,
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            FormField::Constant(a) => a.degree,
            FormField::Polynomial { degree, .. } | FormField::Smooth { degree, .. } => *degree,
        }
    }

    pub fn is_polynomial(&self) -> bool {
        !matches!(self, FormField::Smooth { .. })
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<AltForm> {
        if x.len() != self.dim() {
            return Err(Error::dims("form field point", self.dim(), x.len()));
        }
        Ok(match self {
            FormField::Constant(a) => a.clone(),
            FormField::Polynomial { dim, degree, coeffs } => AltForm {
                dim: *dim,
                degree: *degree,
                coeffs: coeffs.iter().map(|p| p.eval(x)).collect(),
            },
            FormField::Smooth { f, .. } => f(x),
        })
    }

    /// Coordinate exterior derivative: exact for constant and polynomial
    /// fields, central differences otherwise.
    pub fn d(&self) -> FormField {
        let (n, r) = (self.dim(), self.degree());
        match self {
            FormField::Constant(_) => FormField::Constant(AltForm::zero(n, r + 1)),
            FormField::Polynomial { coeffs, .. } => {
                let cs = assemble_d(n, r, |i, k| coeffs[k].partial(i), || Poly::zero(n), |acc, p, s| acc.add(&p.scale(s)));
                FormField::Polynomial {
                    dim: n,
                    degree: r + 1,
                    coeffs: cs,
                }
            }
            FormField::Smooth { f, .. } => {
                let f = f.clone();
                FormField::smooth(n, r + 1, move |x| {
                    let mut partials = Vec::with_capacity(n);
                    let mut xp = x.clone();
                    for i in 0..n {
                        let h = linalg::fd_step(x[i]);
                        xp[i] = x[i] + h;
                        let up = f(&xp);
                        xp[i] = x[i] - h;
                        let down = f(&xp);
                        xp[i] = x[i];
                        partials.push(
                            up.coeffs
                                .iter()
                                .zip(&down.coeffs)
                                .map(|(a, b)| (a - b) / (2.0 * h))
                                .collect::<Vec<f64>>(),
                        );
                    }
                    let coeffs = assemble_d(n, r, |i, k| partials[i][k], || 0.0, |acc, v, s| acc + s * v);
                    AltForm {
                        dim: n,
                        degree: r + 1,
                        coeffs,
                    }
                })
            }
        }
    }

    /// The field pulled back along `map`; stays polynomial for linear maps.
    pub fn pullback(&self, map: &DiffMap) -> Result<FormField> {
        if map.codomain_dim() != self.dim() {
            return Err(Error::dims("pullback map codomain", self.dim(), map.codomain_dim()));
        }
        let (m, r) = (map.domain_dim(), self.degree());
        if let Some(a) = map.as_linear() {
            match self {
                FormField::Constant(alt) => return Ok(FormField::Constant(alt.pullback(a)?)),
                FormField::Polynomial { coeffs, .. } => {
                    let src = combinations(self.dim(), r);
                    let composed: Vec<Poly> = coeffs.iter().map(|p| p.compose_linear(a)).collect();
                    let cs = combinations(m, r)
                        .iter()
                        .map(|j| {
                            src.iter()
                                .zip(&composed)
                                .fold(Poly::zero(m), |acc, (i, p)| acc.add(&p.scale(minor(a, i, j))))
                        })
                        .collect();
                    return Ok(FormField::Polynomial {
                        dim: m,
                        degree: r,
                        coeffs: cs,
                    });
                }
                FormField::Smooth { .. } => {}
            }
        }
        let (field, map) = (self.clone(), map.clone());
        Ok(FormField::smooth(m, r, move |x| {
            let y = map.apply(x).expect("dimension checked");
            let jac = map.jacobian(x).expect("dimension checked");
            field
                .eval(&y)
                .and_then(|a| a.pullback(&jac))
                .unwrap_or_else(|_| AltForm::zero(m, r))
        }))
    }
}

type FieldFn = Arc<dyn Fn(&Index, usize) -> Result<FormField> + Send + Sync>;

/// A family of level forms tied together by pullback along the injections.
#[derive(Clone)]
pub struct TameForm {
    family: ProfiniteFamily,
    degree: usize,
    field: FieldFn,
    name: Arc<str>,
}

impl fmt::Debug for TameForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TameForm({}, degree {} on {})", self.name, self.degree, self.family.name())
    }
}

impl TameForm {
    /// `field(J, dim J)` gives the form field of level `J`.
    pub fn new<F>(family: &ProfiniteFamily, degree: usize, field: F) -> Self
    where
        F: Fn(&Index, usize) -> Result<FormField> + Send + Sync + 'static,
    {
        TameForm {
            family: family.clone(),
            degree,
            field: Arc::new(field),
            name: Arc::from("omega"),
        }
    }

    pub fn constant<F>(family: &ProfiniteFamily, degree: usize, form: F) -> Self
    where
        F: Fn(&Index, usize) -> AltForm + Send + Sync + 'static,
    {
        TameForm::new(family, degree, move |j, n| Ok(FormField::Constant(form(j, n))))
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = Arc::from(name);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &ProfiniteFamily {
        &self.family
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn field_at(&self, j: &Index) -> Result<FormField> {
        let n = self.family.dim(j)?;
        let f = (self.field)(j, n)?;
        if f.dim() != n {
            return Err(Error::dims(format!("form field at {j}"), n, f.dim()));
        }
        if f.degree() != self.degree {
            return Err(Error::dims(format!("form degree at {j}"), self.degree, f.degree()));
        }
        Ok(f)
    }

    pub fn at(&self, j: &Index, pt: &DVector<f64>) -> Result<AltForm> {
        self.field_at(j)?.eval(pt)
    }
}

/// `(i_K^I)^* α` for a form `α` of level `K` evaluated at `i(pt)`, `pt` in level `I`.
pub fn pull_along_inj(family: &ProfiniteFamily, alpha: &AltForm, i: &Index, k: &Index, pt: &DVector<f64>) -> Result<AltForm> {
    alpha.pullback(&family.inj(k, i)?.jacobian(pt)?)
}

/// `(π_I^K)^* α` for a form `α` of level `I` evaluated at `π(pt)`, `pt` in level `K`.
pub fn pull_along_proj(family: &ProfiniteFamily, alpha: &AltForm, i: &Index, k: &Index, pt: &DVector<f64>) -> Result<AltForm> {
    alpha.pullback(&family.proj(i, k)?.jacobian(pt)?)
}

/// The level-`K` form pulled back to level `I` at `pt ∈ E_I`.
pub fn pullback_inj(omega: &TameForm, i: &Index, k: &Index, pt: &DVector<f64>) -> Result<AltForm> {
    let up = omega.family.inj(k, i)?.apply(pt)?;
    pull_along_inj(&omega.family, &omega.at(k, &up)?, i, k, pt)
}

/// The level-`I` form pulled back to level `K` along the projection, at `pt ∈ E_K`.
pub fn pushforward_proj(omega: &TameForm, i: &Index, k: &Index, pt: &DVector<f64>) -> Result<AltForm> {
    let down = omega.family.proj(i, k)?.apply(pt)?;
    pull_along_proj(&omega.family, &omega.at(i, &down)?, i, k, pt)
}

/// Max `|i^* ω_K - ω_I|` over the pairs at random points of the lower level.
pub fn check_tame(omega: &TameForm, pairs: &[(Index, Index)], samples: usize, seed: u64, tol: f64) -> Result<AxiomResidual> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = AxiomResidual::new("tame-compatibility", tol);
    for (i, k) in pairs {
        for _ in 0..samples {
            let pt = random_point(&mut rng, omega.family.dim(i)?);
            let r = pullback_inj(omega, i, k, &pt)?.max_diff(&omega.at(i, &pt)?);
            res.record(r, &format!("{i} <= {k}"));
        }
    }
    Ok(res)
}

/// Level-wise exterior derivative.
pub fn exterior_derivative(omega: &TameForm) -> TameForm {
    let w = omega.clone();
    TameForm::new(&omega.family, omega.degree + 1, move |j, _| Ok(w.field_at(j)?.d())).with_name(&format!("d{}", omega.name))
}

/// Max component of `d(dω)` over random points of the given levels.
pub fn d_squared_residual(omega: &TameForm, levels: &[Index], samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for j in levels {
        let dd = omega.field_at(j)?.d().d();
        for _ in 0..samples {
            let pt = random_point(&mut rng, omega.family.dim(j)?);
            worst = worst.max(dd.eval(&pt)?.max_abs());
        }
    }
    Ok(worst)
}

/// Max `|i^*(dω_K) - d(i^* ω_K)|` over the pairs at random points.
pub fn d_commutes_residual(omega: &TameForm, pairs: &[(Index, Index)], samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let d_omega = exterior_derivative(omega);
    for (i, k) in pairs {
        let inj = omega.family.inj(k, i)?;
        let pulled_then_d = omega.field_at(k)?.pullback(&inj)?.d();
        for _ in 0..samples {
            let pt = random_point(&mut rng, omega.family.dim(i)?);
            let lhs = pullback_inj(&d_omega, i, k, &pt)?;
            worst = worst.max(lhs.max_diff(&pulled_then_d.eval(&pt)?));
        }
    }
    Ok(worst)
}

/// Max `|i^* π^* α - α|` for random constant `r`-forms `α` of level `I`.
pub fn dual_retraction_residual(
    family: &ProfiniteFamily,
    pairs: &[(Index, Index)],
    degree: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (i, k) in pairs {
        let n = family.dim(i)?;
        let m = combinations(n, degree).len();
        for _ in 0..samples {
            let alpha = AltForm::from_coeffs(n, degree, random_point(&mut rng, m).as_slice().to_vec())?;
            let pt = random_point(&mut rng, n);
            let up = family.inj(k, i)?.apply(&pt)?;
            let pushed = pull_along_proj(family, &alpha, i, k, &up)?;
            let back = pull_along_inj(family, &pushed, i, k, &pt)?;
            worst = worst.max(back.max_diff(&alpha));
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Riemannian,
    PseudoRiemannian,
    Hermitian,
    PseudoHermitian,
}

impl MetricKind {
    pub fn requires_definite(self) -> bool {
        matches!(self, MetricKind::Riemannian | MetricKind::Hermitian)
    }

    pub fn is_hermitian(self) -> bool {
        matches!(self, MetricKind::Hermitian | MetricKind::PseudoHermitian)
    }
}

type MetricFn = Arc<dyn Fn(&Index, &DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync>;

/// Level-wise symmetric bilinear forms compatible with the injections:
/// `G_I = Di^T G_K Di`. Hermitian kinds live on even levels with the
/// block complex structure of [`linalg::complex_structure`].
#[derive(Clone)]
pub struct CompatibleMetric {
    family: ProfiniteFamily,
    kind: MetricKind,
    field: MetricFn,
    name: Arc<str>,
}

impl fmt::Debug for CompatibleMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CompatibleMetric({}, {:?} on {})", self.name, self.kind, self.family.name())
    }
}

impl CompatibleMetric {
    pub fn new<F>(family: &ProfiniteFamily, kind: MetricKind, field: F) -> Self
    where
        F: Fn(&Index, &DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        CompatibleMetric {
            family: family.clone(),
            kind,
            field: Arc::new(field),
            name: Arc::from("g"),
        }
    }

    pub fn constant<F>(family: &ProfiniteFamily, kind: MetricKind, g: F) -> Self
    where
        F: Fn(&Index, usize) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let f = family.clone();
        CompatibleMetric::new(family, kind, move |j, _| Ok(g(j, f.dim(j)?)))
    }

    /// A constant form on level `top`, pulled back to every level below it.
    pub fn from_top(family: &ProfiniteFamily, kind: MetricKind, top: &Index, g: DMatrix<f64>) -> Result<Self> {
        let n = family.dim(top)?;
        if g.shape() != (n, n) {
            return Err(Error::dims("top-level metric", n, g.nrows()));
        }
        let (f, top) = (family.clone(), top.clone());
        Ok(CompatibleMetric::new(family, kind, move |j, pt| {
            let inj = f.inj(&top, j)?;
            let di = inj.jacobian(pt)?;
            Ok(di.transpose() * &g * di)
        }))
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = Arc::from(name);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn family(&self) -> &ProfiniteFamily {
        &self.family
    }

    pub fn matrix(&self, j: &Index, pt: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.family.dim(j)?;
        if pt.len() != n {
            return Err(Error::dims(format!("metric point at {j}"), n, pt.len()));
        }
        let g = (self.field)(j, pt)?;
        if g.shape() != (n, n) {
            return Err(Error::dims(format!("metric matrix at {j}"), n, g.nrows()));
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelDefiniteness {
    pub index: Index,
    pub dim: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub min_rank: usize,
    pub positive_definite: bool,
    pub nondegenerate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub metric: String,
    pub kind: MetricKind,
    pub compatibility: AxiomResidual,
    pub symmetry: AxiomResidual,
    pub complex_invariance: Option<AxiomResidual>,
    pub levels: Vec<LevelDefiniteness>,
    pub compatible: bool,
    pub positive_definite: bool,
    pub passed: bool,
}

/// Compatibility along injections on `pairs`, symmetry, and eigenvalue-based
/// definiteness on `levels`, all at random points.
pub fn metric_check(
    g: &CompatibleMetric,
    levels: &[Index],
    pairs: &[(Index, Index)],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<MetricReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut compat = AxiomResidual::new("metric-compatibility", tol);
    let mut symmetry = AxiomResidual::new("symmetry", tol);
    let mut complex = g.kind.is_hermitian().then(|| AxiomResidual::new("complex-invariance", tol));
    for (i, k) in pairs {
        for _ in 0..samples {
            let pt = random_point(&mut rng, g.family.dim(i)?);
            let inj = g.family.inj(k, i)?;
            let di = inj.jacobian(&pt)?;
            let pulled = di.transpose() * g.matrix(k, &inj.apply(&pt)?)? * di;
            compat.record(linalg::max_diff_mat(&pulled, &g.matrix(i, &pt)?), &format!("{i} <= {k}"));
        }
    }
    let mut reports = Vec::new();
    for j in levels {
        let n = g.family.dim(j)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut min_rank = n;
        let mut pd = true;
        for _ in 0..samples.max(1) {
            let pt = random_point(&mut rng, n);
            let m = g.matrix(j, &pt)?;
            symmetry.record(linalg::max_diff_mat(&m, &m.transpose()), &j.to_string());
            if let Some(c) = complex.as_mut() {
                let r = if n % 2 == 0 {
                    let jm = linalg::complex_structure(n);
                    linalg::max_diff_mat(&(jm.transpose() * &m * &jm), &m)
                } else {
                    f64::INFINITY
                };
                c.record(r, &j.to_string());
            }
            if n == 0 {
                continue;
            }
            let sym = (&m + m.transpose()) * 0.5;
            let eig = sym.symmetric_eigenvalues();
            let (emin, emax) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
            let scale = eig.iter().fold(0.0f64, |s, e| s.max(e.abs()));
            lo = lo.min(emin);
            hi = hi.max(emax);
            min_rank = min_rank.min(linalg::rank(&m));
            pd &= scale > 0.0 && emin > RANK_REL_THRESHOLD * scale;
        }
        if n == 0 {
            lo = 0.0;
            hi = 0.0;
        }
        reports.push(LevelDefiniteness {
            index: j.clone(),
            dim: n,
            min_eigenvalue: lo,
            max_eigenvalue: hi,
            min_rank,
            positive_definite: pd,
            nondegenerate: min_rank == n,
        });
    }
    let positive_definite = reports.iter().all(|l| l.positive_definite);
    let compatible = compat.passed && symmetry.passed;
    let passed = compatible
        && (!g.kind.requires_definite() || positive_definite)
        && complex.as_ref().is_none_or(|c| c.passed);
    Ok(MetricReport {
        metric: g.name.to_string(),
        kind: g.kind,
        compatibility: compat,
        symmetry,
        complex_invariance: complex,
        levels: reports,
        compatible,
        positive_definite,
        passed,
    })
}

type VectorFn = Arc<dyn Fn(&Index) -> Result<DVector<f64>> + Send + Sync>;

/// A tangent vector to the limit at a base thread, level by level.
#[derive(Clone)]
pub struct TangentThread {
    base: Thread,
    vector: VectorFn,
}

impl fmt::Debug for TangentThread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TangentThread(at {:?})", self.base)
    }
}

impl TangentThread {
    pub fn new<F>(base: &Thread, vector: F) -> Self
    where
        F: Fn(&Index) -> Result<DVector<f64>> + Send + Sync + 'static,
    {
        TangentThread {
            base: base.clone(),
            vector: Arc::new(vector),
        }
    }

    /// Vectors given on a section, extended by the tangent family: `Dπ` below
    /// the members and `Di` above them.
    pub fn from_section(base: &Thread, section: &Section, vectors: Vec<DVector<f64>>) -> Result<Self> {
        let family = base.family().clone();
        let tf = tangent_family(&family);
        let values = section
            .members()
            .zip(&vectors)
            .map(|(s, v)| Ok(linalg::concat(&[base.value(s)?, v.clone()])))
            .collect::<Result<Vec<_>>>()?;
        if vectors.len() != section.len() {
            return Err(Error::dims("tangent vectors", section.len(), vectors.len()));
        }
        let lifted = thread_from_section(&tf, &SectionPoint::new(&tf, section.clone(), values)?)?;
        Ok(TangentThread::new(base, move |j| {
            let xv = lifted.value(j)?;
            let n = xv.len() / 2;
            Ok(xv.rows(n, n).into_owned())
        }))
    }

    pub fn base(&self) -> &Thread {
        &self.base
    }

    pub fn vector(&self, j: &Index) -> Result<DVector<f64>> {
        let n = self.base.family().dim(j)?;
        let v = (self.vector)(j)?;
        if v.len() != n {
            return Err(Error::dims(format!("tangent vector at {j}"), n, v.len()));
        }
        Ok(v)
    }

    /// Max `|v_J - Dπ(J, K)(x_K) v_K|` over the pairs.
    pub fn transport_residual(&self, pairs: &[(Index, Index)]) -> Result<f64> {
        let family = self.base.family();
        let mut worst: f64 = 0.0;
        for (j, k) in pairs {
            let jac = family.proj(j, k)?.jacobian(&self.base.value(k)?)?;
            worst = worst.max(max_diff(&self.vector(j)?, &(jac * self.vector(k)?)));
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub analytic: f64,
    pub finite_difference: f64,
    pub residual: f64,
    pub passed: bool,
}

/// Compares `⟨df, v⟩` computed from the base gradient with the central
/// difference of `s ↦ f(c(s))`, where `c(s)` extends `x_C + s v_C` from the
/// finite section `certificate`. The certificate must be a finite section
/// dominating the support of `f`; the residual is relative to `max(1, |⟨df, v⟩|)`.
pub fn tangent_duality_check(f: &CylindricalFunction, v: &TangentThread, certificate: &Section, tol: f64) -> Result<DualityReport> {
    let family = f.family();
    family.ensure_same(v.base.family())?;
    let poset = family.poset();
    let cert: Vec<Index> = certificate.members().cloned().collect();
    let mut probe: Vec<Index> = f.support().members().cloned().collect();
    probe.extend(cert.iter().cloned());
    if !is_finitely_cylindrical_witness(poset, &IndexSet::Finite(cert.clone()), &probe) {
        return Err(Error::Invalid(format!("{certificate} is not a finitely cylindrical certificate")));
    }
    for s in f.support().members() {
        if !cert.iter().any(|c| poset.leq(s, c)) {
            return Err(Error::NotRefinement(s.clone()));
        }
    }
    let blocks = f.support().members().map(|s| v.vector(s)).collect::<Result<Vec<_>>>()?;
    let analytic = f.differential(&v.base)?.dot(&linalg::concat(&blocks));

    let base_c = cert.iter().map(|c| v.base.value(c)).collect::<Result<Vec<_>>>()?;
    let vec_c = cert.iter().map(|c| v.vector(c)).collect::<Result<Vec<_>>>()?;
    let x_scale = base_c.iter().map(linalg::max_abs).fold(0.0, f64::max);
    let v_scale = vec_c.iter().map(linalg::max_abs).fold(0.0, f64::max);
    let fd = if v_scale == 0.0 {
        0.0
    } else {
        let h = FD_REL_STEP * (1.0 + x_scale) / v_scale;
        let at = |s: f64| -> Result<f64> {
            let vals = base_c.iter().zip(&vec_c).map(|(x, w)| x + w * s).collect();
            let sp = SectionPoint::new(family, certificate.clone(), vals)?;
            f.eval(&thread_from_section(family, &sp)?)
        };
        (at(h)? - at(-h)?) / (2.0 * h)
    };
    let residual = (analytic - fd).abs() / analytic.abs().max(1.0);
    Ok(DualityReport {
        analytic,
        finite_difference: fd,
        residual,
        passed: residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use nalgebra::dvector;

    fn inclusion_32() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    }

    #[test]
    fn pullback_along_inclusion() {
        let w = AltForm::from_components(3, 2, &[(vec![0, 1], 1.0)]);
        assert_eq!(w.pullback(&inclusion_32()).unwrap(), AltForm::from_components(2, 2, &[(vec![0, 1], 1.0)]));
        let v = AltForm::from_components(3, 2, &[(vec![1, 2], 1.0)]);
        assert_eq!(v.pullback(&inclusion_32()).unwrap().max_abs(), 0.0);
        assert_eq!(w.pullback(&DMatrix::identity(3, 3)).unwrap(), w);
    }

    #[test]
    fn antisymmetric_components() {
        let w = AltForm::from_components(3, 2, &[(vec![1, 0], 2.0)]);
        assert_eq!(w.component(&[0, 1]), -2.0);
        assert_eq!(w.component(&[1, 0]), 2.0);
        assert_eq!(w.component(&[1, 1]), 0.0);
        let e = |i: usize| DVector::from_fn(3, |r, _| if r == i { 1.0 } else { 0.0 });
        assert_eq!(w.eval(&[e(1), e(0)]).unwrap(), 2.0);
    }

    #[test]
    fn d_of_x_dy() {
        let field = FormField::polynomial(2, 1, vec![(vec![1], Poly::var(2, 0))]);
        let d = field.d().eval(&dvector![0.3, -0.2]).unwrap();
        assert_eq!(d, AltForm::from_components(2, 2, &[(vec![0, 1], 1.0)]));
        let smooth = FormField::smooth(2, 1, |x| AltForm::from_components(2, 1, &[(vec![1], x[0])]));
        let ds = smooth.d().eval(&dvector![0.3, -0.2]).unwrap();
        assert!(ds.max_diff(&d) < 1e-6);
    }

    #[test]
    fn d_squared_of_sine() {
        let smooth = FormField::smooth(3, 1, |x| AltForm::from_components(3, 1, &[(vec![1], x[0].sin())]));
        let dd = smooth.d().d().eval(&dvector![0.7, 0.1, -0.4]).unwrap();
        assert!(dd.max_abs() < 1e-5);
        let poly = FormField::polynomial(3, 1, vec![(vec![2], Poly::monomial(3, &[(0, 3), (1, 1)], 2.0))]);
        assert_eq!(poly.d().d().eval(&dvector![0.7, 0.1, -0.4]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn dual_retraction_on_euclid() {
        let f = gallery::euclid_tower(4);
        let pairs = [(Index::Nat(2), Index::Nat(3)), (Index::Nat(1), Index::Nat(4))];
        assert!(dual_retraction_residual(&f, &pairs, 1, 5, 1).unwrap() <= 1e-12);
        let dx1 = AltForm::from_components(1, 1, &[(vec![0], 1.0)]);
        let pt = dvector![0.2, 0.4, 0.6];
        let up = pull_along_proj(&f, &dx1, &Index::Nat(1), &Index::Nat(3), &pt).unwrap();
        assert_eq!(up, AltForm::from_components(3, 1, &[(vec![0], 1.0)]));
    }

    #[test]
    fn hyperbolic_pair_is_degenerate_below() {
        let g = gallery::hyperbolic_pair();
        let levels = [Index::Nat(1), Index::Nat(2)];
        let rep = metric_check(&g, &levels, &[(Index::Nat(1), Index::Nat(2))], 3, 0, 1e-12).unwrap();
        assert!(rep.compatible);
        assert!(!rep.levels[0].positive_definite);
        assert!(!rep.levels[0].nondegenerate);
        assert!(rep.levels[1].nondegenerate);
    }

    #[test]
    fn euclid_duality() {
        let f = gallery::euclid_tower(4);
        let t = gallery::coordinate_thread(&f, |i| i as f64 + 3.0);
        let sq = CylindricalFunction::from_fn(&f, Section::single(Index::Nat(1)), |x| x[0] * x[0]).unwrap();
        let top = Section::single(Index::Nat(4));
        let v = TangentThread::from_section(&t, &top, vec![dvector![1.0, 0.0, 0.0, 0.0]]).unwrap();
        let rep = tangent_duality_check(&sq, &v, &top, 1e-6).unwrap();
        assert!((rep.analytic - 6.0).abs() < 1e-8);
        assert!(rep.passed);
        assert_eq!(v.transport_residual(&[(Index::Nat(1), Index::Nat(4))]).unwrap(), 0.0);
    }
}
