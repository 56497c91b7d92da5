//! Built-in families: Euclidean, polynomial (jet) and matrix towers, the
//! four-space family with its swap, the Wiener family of time evaluations, and
//! the symplectic towers.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::calculus::{AltForm, CompatibleMetric, FormField, MetricKind, TameForm};
use crate::cylinder::CylindricalFunction;
use crate::error::{Error, Result};
use crate::family::{cotangent_maps, DiffMap, LevelStructure, ProfiniteFamily, ProfiniteMap};
use crate::limits::{thread_from_section, AlgebraicStructure, ScalarAction, SectionPoint, Thread};
use crate::poset::{FinitePoset, Index, IndexPoset, PosetKind, Section};
use crate::symplectic::{MomentumMap, ProfiniteGroupAction};

type LabelFn = Arc<dyn Fn(&Index) -> Result<Vec<usize>> + Send + Sync>;

/// Levels whose coordinates carry global labels: projections select the
/// lower level's labels, injections put them back and zero the rest.
struct SelectionLevels {
    labels: LabelFn,
}

fn selection_matrix(lower: &[usize], upper: &[usize]) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(lower.len(), upper.len());
    for (r, l) in lower.iter().enumerate() {
        let c = upper
            .iter()
            .position(|u| u == l)
            .ok_or_else(|| Error::Invalid(format!("coordinate {l} missing from upper level")))?;
        m[(r, c)] = 1.0;
    }
    Ok(m)
}

impl LevelStructure for SelectionLevels {
    fn dim(&self, j: &Index) -> Result<usize> {
        Ok((self.labels)(j)?.len())
    }

    fn proj(&self, j: &Index, k: &Index) -> Result<DiffMap> {
        Ok(DiffMap::linear(selection_matrix(&(self.labels)(j)?, &(self.labels)(k)?)?))
    }

    fn inj(&self, k: &Index, j: &Index) -> Result<DiffMap> {
        Ok(DiffMap::linear(selection_matrix(&(self.labels)(j)?, &(self.labels)(k)?)?.transpose()))
    }
}

fn selection_family<F>(name: String, poset: IndexPoset, labels: F) -> ProfiniteFamily
where
    F: Fn(&Index) -> Result<Vec<usize>> + Send + Sync + 'static,
{
    ProfiniteFamily::new(name, poset, Arc::new(SelectionLevels { labels: Arc::new(labels) }))
}

fn nat_of(j: &Index) -> Result<u64> {
    j.as_nat().ok_or_else(|| Error::UnknownIndex(j.clone()))
}

/// Truncation `R^n -> R^m` keeping the first `m` coordinates.
pub fn truncation_matrix(m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |r, c| if r == c { 1.0 } else { 0.0 })
}

/// `R^n` at level `n` for `1 <= n <= max_level`.
pub fn euclid_tower(max_level: u64) -> ProfiniteFamily {
    selection_family(
        format!("euclid_tower({max_level})"),
        IndexPoset::chain(1, max_level.max(1)),
        |j| Ok((0..nat_of(j)? as usize).collect()),
    )
}

/// Coefficients `(a_0, ..., a_n)` of polynomials of degree `<= n`, for
/// `0 <= n <= max_degree`. Projections truncate, injections zero-pad.
pub fn poly_tower(max_degree: u64) -> ProfiniteFamily {
    selection_family(
        format!("poly_tower({max_degree})"),
        IndexPoset::chain(0, max_degree),
        |j| Ok((0..=nat_of(j)? as usize).collect()),
    )
}

/// `k`-jets of real functions of one variable at a point, as Taylor
/// coefficients; the same family as [`poly_tower`].
pub fn jet_tower(max_order: u64) -> ProfiniteFamily {
    poly_tower(max_order)
}

/// The constant family `R` over the poset `1..=max_level`.
pub fn scalar_tower(max_level: u64) -> ProfiniteFamily {
    selection_family(
        format!("scalar_tower({max_level})"),
        IndexPoset::chain(1, max_level.max(1)),
        |_| Ok(vec![0]),
    )
}

/// `M_n(R)` at level `n`, flattened row-major. Projections keep the top-left
/// block, injections embed into the top-left corner.
pub fn matrix_tower(max_n: u64) -> ProfiniteFamily {
    let stride = max_n.max(1) as usize;
    selection_family(
        format!("matrix_tower({max_n})"),
        IndexPoset::chain(1, max_n.max(1)),
        move |j| {
            let n = nat_of(j)? as usize;
            Ok((0..n).flat_map(|r| (0..n).map(move |c| r * stride + c)).collect())
        },
    )
}

fn cross_poset() -> IndexPoset {
    let (i, j, k, l) = (Index::name("I"), Index::name("J"), Index::name("K"), Index::name("L"));
    let covers = [(i.clone(), j.clone()), (i.clone(), k.clone()), (j.clone(), l.clone()), (k.clone(), l.clone())];
    IndexPoset::Finite(FinitePoset::from_covers(vec![i, j, k, l], &covers).expect("valid covers"))
}

/// Four spaces over `I <= J, K <= L`: the origin, the x-axis, the y-axis and the plane.
pub fn cross_family() -> ProfiniteFamily {
    selection_family("cross_family".into(), cross_poset(), |j| match j {
        Index::Name(s) if s == "I" => Ok(vec![]),
        Index::Name(s) if s == "J" => Ok(vec![0]),
        Index::Name(s) if s == "K" => Ok(vec![1]),
        Index::Name(s) if s == "L" => Ok(vec![0, 1]),
        _ => Err(Error::UnknownIndex(j.clone())),
    })
}

/// The swap `(x, y) ↦ (y, x)` of the four-space family: the index map
/// exchanges `J` and `K`, and `f_J: X_J -> X_K` is the identity of the line.
pub fn cross_swap(family: &ProfiniteFamily) -> ProfiniteMap {
    let f = family.clone();
    ProfiniteMap::new(
        family.clone(),
        family.clone(),
        |j| match j {
            Index::Name(s) if s == "J" => Index::name("K"),
            Index::Name(s) if s == "K" => Index::name("J"),
            _ => j.clone(),
        },
        move |j| match j {
            Index::Name(s) if s == "L" => Ok(DiffMap::linear(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))),
            _ => Ok(DiffMap::identity(f.dim(j)?)),
        },
    )
}

/// `x_J = (g(0), ..., g(dim J - 1))` on a truncation family.
pub fn coordinate_thread<G>(family: &ProfiniteFamily, g: G) -> Thread
where
    G: Fn(usize) -> f64 + Send + Sync + 'static,
{
    let f = family.clone();
    Thread::from_oracle(family, move |j| Ok(DVector::from_fn(f.dim(j)?, |i, _| g(i))))
}

/// The polynomial `Σ c_k X^k` as a section point at its degree, extended to a thread.
pub fn polynomial_thread(family: &ProfiniteFamily, coeffs: &[f64]) -> Result<Thread> {
    let degree = coeffs.len().saturating_sub(1) as u64;
    let level = Index::Nat(degree);
    if !family.poset().contains(&level) {
        return Err(Error::UnknownIndex(level));
    }
    let value = if coeffs.is_empty() {
        DVector::zeros(family.dim(&level)?)
    } else {
        DVector::from_column_slice(coeffs)
    };
    let sp = SectionPoint::new(family, Section::single(level), vec![value])?;
    Ok(thread_from_section(family, &sp)?.with_label("polynomial"))
}

/// The formal series `exp(X) = Σ X^k / k!`.
pub fn exp_series_thread(family: &ProfiniteFamily) -> Thread {
    coordinate_thread(family, |k| 1.0 / (1..=k).map(|i| i as f64).product::<f64>()).with_label("exp series")
}

fn flat_matrix(n: usize, entry: impl Fn(usize, usize) -> f64) -> DVector<f64> {
    DVector::from_fn(n * n, |p, _| entry(p / n, p % n))
}

/// `diag(d(1), ..., d(n))` at level `n`.
pub fn diagonal_thread<D>(family: &ProfiniteFamily, d: D) -> Thread
where
    D: Fn(usize) -> f64 + Send + Sync + 'static,
{
    Thread::from_oracle(family, move |j| {
        let n = nat_of(j)? as usize;
        Ok(flat_matrix(n, |r, c| if r == c { d(r + 1) } else { 0.0 }))
    })
}

/// `e^Δ` in the Fourier basis: `diag(e^{1²}, ..., e^{n²})` at level `n`.
pub fn laplacian_exp_thread(family: &ProfiniteFamily) -> Thread {
    diagonal_thread(family, |k| ((k * k) as f64).exp()).with_label("exp(laplacian)")
}

/// Upper-triangular thread with entries `a(r, c)` for `r <= c` (1-based).
pub fn upper_triangular_thread<A>(family: &ProfiniteFamily, a: A) -> Thread
where
    A: Fn(usize, usize) -> f64 + Send + Sync + 'static,
{
    Thread::from_oracle(family, move |j| {
        let n = nat_of(j)? as usize;
        Ok(flat_matrix(n, |r, c| if r <= c { a(r + 1, c + 1) } else { 0.0 }))
    })
}

fn as_square(x: &DVector<f64>) -> DMatrix<f64> {
    let n = (x.len() as f64).sqrt().round() as usize;
    DMatrix::from_row_slice(n, n, x.as_slice())
}

fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.transpose().iter().copied())
}

/// Matrix multiplication on the matrix tower, with inverses and the identity.
pub fn matrix_product(family: &ProfiniteFamily) -> AlgebraicStructure {
    AlgebraicStructure::new("matrix product", family, |_, x, y| flatten(&(as_square(x) * as_square(y))))
        .with_inverse(|_, x| {
            let m = as_square(x);
            let lu = m.clone().lu();
            let det = lu.determinant();
            let scale = m.amax().max(1.0).powi(m.nrows() as i32);
            if det.abs() <= 1e-14 * scale {
                return None;
            }
            lu.try_inverse().map(|inv| flatten(&inv))
        })
        .with_neutral(|_, d| {
            let n = (d as f64).sqrt().round() as usize;
            flatten(&DMatrix::identity(n, n))
        })
}

fn convolve(x: &DVector<f64>, y: &DVector<f64>, cyclic: bool) -> DVector<f64> {
    let n = x.len();
    let mut out = DVector::zeros(n);
    for a in 0..n {
        for b in 0..n {
            let k = a + b;
            if k < n {
                out[k] += x[a] * y[b];
            } else if cyclic {
                out[k - n] += x[a] * y[b];
            }
        }
    }
    out
}

/// Multiplication in `R[X] / (X^{n+1})` at level `n`. Truncation is a ring morphism for it.
pub fn truncated_product(family: &ProfiniteFamily) -> AlgebraicStructure {
    AlgebraicStructure::new("truncated product", family, |_, x, y| convolve(x, y, false)).with_neutral(|_, d| {
        let mut e = DVector::zeros(d);
        if d > 0 {
            e[0] = 1.0;
        }
        e
    })
}

/// Multiplication in `R[X] / (X^{n+1} - 1)` at level `n`. Truncation is not a
/// morphism for it: at level 1, `X · X = 1`, while `X²` truncates to `0`.
pub fn cyclic_product(family: &ProfiniteFamily) -> AlgebraicStructure {
    AlgebraicStructure::new("cyclic product", family, |_, x, y| convolve(x, y, true))
}

/// The polynomial tower acting on itself by truncated multiplication.
pub fn truncated_product_action(family: &ProfiniteFamily) -> ScalarAction {
    ScalarAction::new(family, family, |_, r, x| convolve(r, x, false))
}

/// The scalar tower acting on a family by `r · x`.
pub fn scalar_multiplication(scalars: &ProfiniteFamily, module: &ProfiniteFamily) -> ScalarAction {
    ScalarAction::new(scalars, module, |_, r, x| x * r[0])
}

/// Default time pool of the Wiener family: `k / 8` for `k = 1..=8`.
pub fn dyadic_pool(levels: u32) -> Vec<f64> {
    let m = 1u32 << levels;
    (1..=m).map(|k| k as f64 / m as f64).collect()
}

fn check_times(ts: &[f64]) -> Result<()> {
    for &t in ts {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::TimeOutOfRange(t));
        }
    }
    Ok(())
}

/// Matrix of piecewise-linear interpolation from the knots `from` (anchored at
/// `γ(0) = 0`, constant after the last knot) to the times `to`, for paths
/// with `n` components. Both time lists are sorted.
pub fn pl_interpolation_matrix(from: &[f64], to: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n * to.len(), n * from.len());
    for (r, &t) in to.iter().enumerate() {
        let weights: Vec<(usize, f64)> = match from.iter().position(|&s| s >= t) {
            _ if from.is_empty() => vec![],
            Some(b) if from[b] == t => vec![(b, 1.0)],
            Some(0) => vec![(0, t / from[0])],
            Some(b) => {
                let (s0, s1) = (from[b - 1], from[b]);
                let w = (t - s0) / (s1 - s0);
                vec![(b - 1, 1.0 - w), (b, w)]
            }
            None => vec![(from.len() - 1, 1.0)],
        };
        for (c, w) in weights {
            for d in 0..n {
                m[(r * n + d, c * n + d)] = w;
            }
        }
    }
    m
}

struct WienerLevels {
    components: usize,
}

fn times_of(j: &Index) -> Result<Vec<f64>> {
    let ts = j.as_times().ok_or_else(|| Error::UnknownIndex(j.clone()))?;
    check_times(&ts)?;
    Ok(ts)
}

impl LevelStructure for WienerLevels {
    fn dim(&self, j: &Index) -> Result<usize> {
        Ok(self.components * times_of(j)?.len())
    }

    fn proj(&self, j: &Index, k: &Index) -> Result<DiffMap> {
        let (tj, tk) = (times_of(j)?, times_of(k)?);
        let n = self.components;
        let mut m = DMatrix::zeros(n * tj.len(), n * tk.len());
        for (r, t) in tj.iter().enumerate() {
            let c = tk
                .iter()
                .position(|s| s == t)
                .ok_or_else(|| Error::NotComparable(j.clone(), k.clone()))?;
            for d in 0..n {
                m[(r * n + d, c * n + d)] = 1.0;
            }
        }
        Ok(DiffMap::linear(m))
    }

    fn inj(&self, k: &Index, j: &Index) -> Result<DiffMap> {
        Ok(DiffMap::linear(pl_interpolation_matrix(&times_of(j)?, &times_of(k)?, self.components)))
    }
}

/// Paths `γ: [0, 1] -> R^n` with `γ(0) = 0`, seen through their values at
/// finite sets of times drawn from `pool`. Level `K` holds `(γ(t))_{t ∈ K}`
/// time-major; projections forget times and injections interpolate.
pub fn wiener_family(pool: &[f64], components: usize) -> Result<ProfiniteFamily> {
    check_times(pool)?;
    let poset = IndexPoset::subsets_of(pool);
    let size = match &poset {
        IndexPoset::FiniteSubsets { pool: Some(p) } => p.len(),
        _ => pool.len(),
    };
    Ok(ProfiniteFamily::new(
        format!("wiener({size}x{components})"),
        poset,
        Arc::new(WienerLevels { components }),
    ))
}

/// The full time pool of a Wiener family: its top element.
pub fn wiener_top(family: &ProfiniteFamily) -> Result<Index> {
    match family.poset() {
        IndexPoset::FiniteSubsets { pool: Some(p) } => Ok(Index::Times(p.clone())),
        _ => Err(Error::Invalid(format!("{} is not a Wiener family", family.name()))),
    }
}

/// Brownian motion sampled on the pool of a Wiener family.
pub struct BrownianSampler {
    family: ProfiniteFamily,
    top: Index,
    times: Vec<f64>,
    components: usize,
    rng: ChaCha8Rng,
}

impl BrownianSampler {
    pub fn new(family: &ProfiniteFamily, seed: u64) -> Result<Self> {
        let top = wiener_top(family)?;
        let times = top.as_times().unwrap_or_default();
        let components = if times.is_empty() { 0 } else { family.dim(&top)? / times.len() };
        Ok(BrownianSampler {
            family: family.clone(),
            top,
            times,
            components,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Values on the whole pool from independent Gaussian increments.
    pub fn sample_values(&mut self) -> DVector<f64> {
        let n = self.components;
        let mut out = DVector::zeros(n * self.times.len());
        let mut prev_t = 0.0;
        for (r, &t) in self.times.iter().enumerate() {
            let sd = (t - prev_t).sqrt();
            for d in 0..n {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                let prev = if r == 0 { 0.0 } else { out[(r - 1) * n + d] };
                out[r * n + d] = prev + sd * z;
            }
            prev_t = t;
        }
        out
    }

    /// A sample path as a section point over the full pool.
    pub fn sample_point(&mut self) -> Result<SectionPoint> {
        let v = self.sample_values();
        SectionPoint::new(&self.family, Section::single(self.top.clone()), vec![v])
    }

    /// A sample path as a thread, extended from the full pool.
    pub fn sample(&mut self) -> Result<Thread> {
        let sp = self.sample_point()?;
        thread_from_section(&self.family, &sp)
    }
}

/// A cylindrical 1-form `α = Σ_i ξ_i · dγ(t_i)` of the Wiener family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CylindricalOneForm {
    pub times: Vec<f64>,
    pub covectors: Vec<DVector<f64>>,
}

impl CylindricalOneForm {
    pub fn new(times: &[f64], covectors: Vec<DVector<f64>>) -> Result<Self> {
        check_times(times)?;
        if times.len() != covectors.len() {
            return Err(Error::dims("one-form covectors", times.len(), covectors.len()));
        }
        let mut pairs: Vec<(f64, DVector<f64>)> = times.iter().copied().zip(covectors).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Invalid(format!("time {} repeated", w[0].0)));
            }
        }
        Ok(CylindricalOneForm {
            times: pairs.iter().map(|p| p.0).collect(),
            covectors: pairs.into_iter().map(|p| p.1).collect(),
        })
    }

    pub fn index(&self) -> Index {
        Index::times(&self.times)
    }

    /// The covector on level `{t_1, ..., t_k}`, time-major.
    pub fn covector(&self) -> DVector<f64> {
        crate::linalg::concat(&self.covectors)
    }

    /// `⟨α, h⟩ = Σ_i ξ_i · h(t_i)`.
    pub fn pairing(&self, family: &ProfiniteFamily, h: &Thread) -> Result<f64> {
        let v = h.value(&self.index())?;
        let c = self.covector();
        if c.len() != v.len() {
            return Err(Error::dims("one-form pairing", v.len(), c.len()));
        }
        family.ensure_same(h.family())?;
        Ok(c.iter().zip(v.iter()).fold(0.0, |acc, (a, b)| acc + a * b))
    }

    /// The same form seen on a finer time grid: the covector is pushed up by the
    /// transpose of the projection's Jacobian.
    pub fn refine(&self, family: &ProfiniteFamily, finer: &[f64]) -> Result<CylindricalOneForm> {
        let (j, k) = (self.index(), Index::times(finer));
        if !family.poset().leq(&j, &k) {
            return Err(Error::NotRefinement(k));
        }
        let pt = DVector::zeros(family.dim(&k)?);
        let up = cotangent_maps(family, &j, &k, &pt)?.up(&self.covector());
        let times = k.as_times().unwrap_or_default();
        let n = if times.is_empty() { 0 } else { up.len() / times.len() };
        let covectors = (0..times.len()).map(|r| up.rows(r * n, n).into_owned()).collect();
        CylindricalOneForm::new(&times, covectors)
    }
}

/// Darboux form `Σ_i dx_{2i} ∧ dx_{2i+1}` on `R^n`; degenerate for odd `n`.
pub fn darboux_form(n: usize) -> AltForm {
    let comps: Vec<(Vec<usize>, f64)> = (0..n / 2).map(|i| (vec![2 * i, 2 * i + 1], 1.0)).collect();
    AltForm::from_components(n, 2, &comps)
}

/// `R^n` levels carrying `ω = Σ dq_i ∧ dp_i` on interleaved coordinates
/// `(q_0, p_0, q_1, p_1, ...)`. The even tower has levels `2, 4, ..., 2 max_pairs`
/// labelled by dimension; the odd variant has every level `1..=2 max_pairs + 1`.
#[derive(Clone, Debug)]
pub struct SymplecticTower {
    pub family: ProfiniteFamily,
    pub odd: bool,
    pub max_pairs: u64,
}

impl SymplecticTower {
    pub fn even(max_pairs: u64) -> Self {
        let max_pairs = max_pairs.max(1);
        let family = selection_family(
            format!("symplectic_even_tower({max_pairs})"),
            IndexPoset::Chain {
                start: 2,
                step: 2,
                end: Some(2 * max_pairs),
            },
            |j| Ok((0..nat_of(j)? as usize).collect()),
        );
        SymplecticTower {
            family,
            odd: false,
            max_pairs,
        }
    }

    pub fn odd(max_pairs: u64) -> Self {
        let max_pairs = max_pairs.max(1);
        let family = selection_family(
            format!("symplectic_odd_tower({max_pairs})"),
            IndexPoset::chain(1, 2 * max_pairs + 1),
            |j| Ok((0..nat_of(j)? as usize).collect()),
        );
        SymplecticTower {
            family,
            odd: true,
            max_pairs,
        }
    }

    pub fn levels(&self) -> Vec<Index> {
        self.family.poset().elements().unwrap_or_default()
    }

    pub fn form(&self) -> TameForm {
        TameForm::constant(&self.family, 2, |_, n| darboux_form(n)).with_name("darboux")
    }

    /// `H = ½ Σ_{i < support} x_i²` as a cylindrical function on the section `{support}`.
    pub fn oscillator(&self, support: u64) -> Result<CylindricalFunction> {
        let level = Index::Nat(support);
        let n = self.family.dim(&level)?;
        let base = DiffMap::scalar(n, |x| 0.5 * x.norm_squared()).with_jacobian(move |x| DMatrix::from_row_slice(1, n, x.as_slice()));
        Ok(CylindricalFunction::new(&self.family, Section::single(level), base)?.with_label("oscillator"))
    }

    /// `T^{max_pairs}` acting by rotation on each `(q_i, p_i)` pair. Generator
    /// `i` is `[[0, -1], [1, 0]]` on pair `i`, zero on levels without that pair.
    pub fn rotation_action(&self) -> ProfiniteGroupAction {
        let f = self.family.clone();
        ProfiniteGroupAction::new(&self.family, self.max_pairs as usize, move |j, i| {
            let n = f.dim(j)?;
            let mut m = DMatrix::zeros(n, n);
            if 2 * i + 1 < n {
                m[(2 * i, 2 * i + 1)] = -1.0;
                m[(2 * i + 1, 2 * i)] = 1.0;
            }
            Ok(m)
        })
    }

    /// `μ_i = sign · ½ (q_i² + p_i²)`, each on the smallest level containing pair `i`.
    /// The momentum map of [`Self::rotation_action`] is `sign = -1`.
    pub fn momentum_map(&self, sign: f64) -> Result<MomentumMap> {
        let mut comps = Vec::new();
        for i in 0..self.max_pairs as usize {
            let dim = 2 * i + 2;
            let level = self
                .levels()
                .into_iter()
                .find(|j| self.family.dim(j).is_ok_and(|d| d >= dim))
                .ok_or_else(|| Error::Invalid(format!("no level holds pair {i}")))?;
            let n = self.family.dim(&level)?;
            let base = DiffMap::scalar(n, move |x| sign * 0.5 * (x[2 * i].powi(2) + x[2 * i + 1].powi(2))).with_jacobian(
                move |x| {
                    let mut g = DMatrix::zeros(1, n);
                    g[(0, 2 * i)] = sign * x[2 * i];
                    g[(0, 2 * i + 1)] = sign * x[2 * i + 1];
                    g
                },
            );
            comps.push(CylindricalFunction::new(&self.family, Section::single(level), base)?.with_label(&format!("mu_{i}")));
        }
        MomentumMap::new(comps)
    }
}

/// The bilinear form `[[0, 1], [1, 0]]` on `R^2` over `A = {1, 2}` with
/// `i(x) = (x, 0)`: its pullback to level 1 vanishes.
pub fn hyperbolic_pair() -> CompatibleMetric {
    let f = euclid_tower(2);
    CompatibleMetric::from_top(&f, MetricKind::PseudoRiemannian, &Index::Nat(2), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
        .expect("level 2 exists")
        .with_name("hyperbolic pair")
}

/// The dot product on every level of the Euclidean tower.
pub fn euclid_metric(family: &ProfiniteFamily) -> CompatibleMetric {
    CompatibleMetric::constant(family, MetricKind::Riemannian, |_, n| DMatrix::identity(n, n)).with_name("euclidean")
}

/// `diag(1, -1, ..., -1)` on the Euclidean tower.
pub fn lorentz_metric(family: &ProfiniteFamily) -> CompatibleMetric {
    CompatibleMetric::constant(family, MetricKind::PseudoRiemannian, |_, n| {
        DMatrix::from_fn(n, n, |r, c| match (r, c) {
            (0, 0) => 1.0,
            _ if r == c => -1.0,
            _ => 0.0,
        })
    })
    .with_name("lorentz")
}

/// The standard hermitian product on `C^{n/2} = R^n`, for the even symplectic tower.
pub fn hermitian_metric(family: &ProfiniteFamily) -> CompatibleMetric {
    CompatibleMetric::constant(family, MetricKind::Hermitian, |_, n| DMatrix::identity(n, n)).with_name("hermitian")
}

/// `Σ_{i} dx_{2i} ∧ dx_{2i+1}` on the Euclidean tower, including odd levels.
pub fn euclid_darboux_form(family: &ProfiniteFamily) -> TameForm {
    TameForm::constant(family, 2, |_, n| darboux_form(n)).with_name("darboux")
}

/// `Σ_i x_i dx_{i+1}` with polynomial coefficients on the Euclidean tower.
pub fn euclid_polynomial_form(family: &ProfiniteFamily) -> TameForm {
    TameForm::new(family, 1, |_, n| {
        let comps = (0..n.saturating_sub(1))
            .map(|i| (vec![i + 1], crate::poly::Poly::var(n, i)))
            .collect::<Vec<_>>();
        Ok(FormField::polynomial(n, 1, comps))
    })
    .with_name("x dy chain")
}

/// Names accepted by [`by_name`].
pub const GALLERY_NAMES: &[&str] = &[
    "euclid_tower",
    "poly_tower",
    "jet_tower",
    "scalar_tower",
    "matrix_tower",
    "cross_family",
    "wiener",
    "symplectic_even_tower",
    "symplectic_odd_tower",
];

/// A gallery family by name. `cap` bounds the top level (pairs for the
/// symplectic towers, dyadic depth for the Wiener pool).
pub fn by_name(name: &str, cap: Option<u64>) -> Result<ProfiniteFamily> {
    match name {
        "euclid_tower" => Ok(euclid_tower(cap.unwrap_or(10))),
        "poly_tower" => Ok(poly_tower(cap.unwrap_or(10))),
        "jet_tower" => Ok(jet_tower(cap.unwrap_or(10))),
        "scalar_tower" => Ok(scalar_tower(cap.unwrap_or(10))),
        "matrix_tower" => Ok(matrix_tower(cap.unwrap_or(8))),
        "cross_family" => Ok(cross_family()),
        "wiener" => wiener_family(&dyadic_pool(cap.unwrap_or(3).min(4) as u32), 1),
        "symplectic_even_tower" => Ok(SymplecticTower::even(cap.unwrap_or(5)).family),
        "symplectic_odd_tower" => Ok(SymplecticTower::odd(cap.unwrap_or(5)).family),
        _ => Err(Error::UnknownGallery(name.to_string())),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub index: Index,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GalleryDescription {
    pub name: String,
    pub family: String,
    pub poset_kind: PosetKind,
    pub levels: Vec<LevelSummary>,
    pub summary: String,
}

pub fn summary(name: &str) -> &'static str {
    match name {
        "euclid_tower" => "R^n with coordinate truncations and zero-padding inclusions",
        "poly_tower" => "polynomials of degree <= n; E^A is R[[X]] and E_A is R[X]",
        "jet_tower" => "k-jets as Taylor coefficients; the polynomial tower",
        "scalar_tower" => "the constant family R, acting on the Euclidean tower",
        "matrix_tower" => "M_n(R) with corner embeddings and block truncations",
        "cross_family" => "origin, two axes and the plane over I <= J, K <= L",
        "wiener" => "paths from 0 evaluated at finite sets of dyadic times",
        "symplectic_even_tower" => "R^{2n} with the Darboux form",
        "symplectic_odd_tower" => "R^n with the Darboux form, degenerate on odd levels",
        _ => "",
    }
}

pub fn describe(name: &str, cap: Option<u64>) -> Result<GalleryDescription> {
    let f = by_name(name, cap)?;
    let levels = f
        .poset()
        .elements()
        .unwrap_or_default()
        .into_iter()
        .map(|j| Ok(LevelSummary { dim: f.dim(&j)?, index: j }))
        .collect::<Result<Vec<_>>>()?;
    Ok(GalleryDescription {
        name: name.to_string(),
        family: f.name().to_string(),
        poset_kind: f.poset().kind(),
        levels,
        summary: summary(name).to_string(),
    })
}
