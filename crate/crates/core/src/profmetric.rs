//! The bounded sup pseudo-distance `d^∞ = sup_J d_J / (1 + d_J)` and the
//! measure pseudo-distance `d_μ = Σ_J μ(J) d_J / (1 + d_J)` on threads.

use std::fmt;
use std::io::Read;
use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{random_point, ProfiniteFamily};
use crate::limits::Thread;
use crate::poset::Index;
use crate::report::AxiomResidual;

type DistanceFn = Arc<dyn Fn(&Index, &DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelDistanceKind {
    Euclidean,
    Discrete,
    Custom,
}

/// A distance on every level of a family.
#[derive(Clone)]
pub struct LevelMetricFamily {
    family: ProfiniteFamily,
    kind: LevelDistanceKind,
    d: DistanceFn,
}

impl fmt::Debug for LevelMetricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LevelMetricFamily({:?} on {})", self.kind, self.family.name())
    }
}

impl LevelMetricFamily {
    pub fn euclidean(family: &ProfiniteFamily) -> Self {
        LevelMetricFamily {
            family: family.clone(),
            kind: LevelDistanceKind::Euclidean,
            d: Arc::new(|_, x, y| (x - y).norm()),
        }
    }

    /// `0` on equal points and `1` otherwise.
    pub fn discrete(family: &ProfiniteFamily) -> Self {
        LevelMetricFamily {
            family: family.clone(),
            kind: LevelDistanceKind::Discrete,
            d: Arc::new(|_, x, y| if x == y { 0.0 } else { 1.0 }),
        }
    }

    pub fn custom<D>(family: &ProfiniteFamily, d: D) -> Self
    where
        D: Fn(&Index, &DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        LevelMetricFamily {
            family: family.clone(),
            kind: LevelDistanceKind::Custom,
            d: Arc::new(d),
        }
    }

    pub fn kind(&self) -> LevelDistanceKind {
        self.kind
    }

    pub fn family(&self) -> &ProfiniteFamily {
        &self.family
    }

    pub fn distance(&self, j: &Index, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        let n = self.family.dim(j)?;
        if x.len() != n || y.len() != n {
            return Err(Error::dims(format!("points at {j}"), n, x.len().max(y.len())));
        }
        Ok((self.d)(j, x, y))
    }

    /// `d_J` between the values of two threads.
    pub fn thread_distance(&self, j: &Index, x: &Thread, y: &Thread) -> Result<f64> {
        self.distance(j, &x.value(j)?, &y.value(j)?)
    }

    /// Max `|d_J(x, y) - d_K(i x, i y)|` at random point pairs.
    pub fn isometry_residual(&self, pairs: &[(Index, Index)], samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for (j, k) in pairs {
            let inj = self.family.inj(k, j)?;
            let n = self.family.dim(j)?;
            for _ in 0..samples {
                let (x, y) = (random_point(&mut rng, n), random_point(&mut rng, n));
                let up = self.distance(k, &inj.apply(&x)?, &inj.apply(&y)?)?;
                worst = worst.max((self.distance(j, &x, &y)? - up).abs());
            }
        }
        Ok(worst)
    }
}

fn bounded(d: f64) -> f64 {
    d / (1.0 + d)
}

/// An atomic finite measure on the index set: explicit weights plus an upper
/// bound on the mass of the indices left out.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexMeasure {
    weights: Vec<(Index, f64)>,
    tail_mass: f64,
}

impl IndexMeasure {
    pub fn new(weights: Vec<(Index, f64)>, tail_mass: f64) -> Result<Self> {
        for (j, w) in &weights {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Invalid(format!("weight of {j} must be finite and nonnegative, got {w}")));
            }
        }
        if !tail_mass.is_finite() || tail_mass < 0.0 {
            return Err(Error::Invalid(format!("tail mass must be finite and nonnegative, got {tail_mass}")));
        }
        Ok(IndexMeasure { weights, tail_mass })
    }

    pub fn point_mass(j: Index, w: f64) -> Result<Self> {
        IndexMeasure::new(vec![(j, w)], 0.0)
    }

    /// `μ({n}) = 1 / (n + 1)²` on `1..=n_max`; the tail is the exact remainder
    /// of `Σ_{n ≥ 1} 1 / (n + 1)² = π²/6 - 1`.
    pub fn inverse_square(n_max: u64) -> Self {
        let weights: Vec<(Index, f64)> = (1..=n_max).map(|n| (Index::Nat(n), 1.0 / ((n + 1) as f64).powi(2))).collect();
        let partial: f64 = (1..=n_max + 1).map(|m| 1.0 / (m as f64).powi(2)).sum();
        let tail = (std::f64::consts::PI.powi(2) / 6.0 - partial).max(0.0);
        IndexMeasure {
            weights,
            tail_mass: tail,
        }
    }

    /// Reads `index,weight` rows (with a header line).
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut weights = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::Descriptor(format!("measure csv: {e}")))?;
            if row.len() != 2 {
                return Err(Error::Descriptor(format!("measure csv rows need 2 fields, got {}", row.len())));
            }
            let j: Index = row[0].trim().parse()?;
            let w: f64 = row[1]
                .trim()
                .parse()
                .map_err(|_| Error::Descriptor(format!("bad weight `{}`", &row[1])))?;
            weights.push((j, w));
        }
        IndexMeasure::new(weights, 0.0)
    }

    pub fn weights(&self) -> &[(Index, f64)] {
        &self.weights
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().map(|w| w.1).sum::<f64>() + self.tail_mass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DInf {
    pub value: f64,
    /// Running supremum after each level set.
    pub partials: Vec<f64>,
    pub converged: bool,
    /// Whether the last level set exhausts a finite poset, making the value exact.
    pub exact: bool,
}

/// Partial suprema of `d_J / (1 + d_J)` over increasing level sets.
pub fn d_inf(m: &LevelMetricFamily, x: &Thread, y: &Thread, level_sets: &[Vec<Index>], tol: f64) -> Result<DInf> {
    m.family.ensure_same(x.family())?;
    m.family.ensure_same(y.family())?;
    let mut partials = Vec::with_capacity(level_sets.len());
    let mut sup: f64 = 0.0;
    for set in level_sets {
        for j in set {
            sup = sup.max(bounded(m.thread_distance(j, x, y)?));
        }
        partials.push(sup);
    }
    let exact = match (m.family.poset().elements(), level_sets.last()) {
        (Some(all), Some(last)) => all.iter().all(|j| last.contains(j)),
        _ => false,
    };
    let n = partials.len();
    let converged = exact || (n >= 3 && partials[n - 1] - partials[n - 2] <= tol && partials[n - 2] - partials[n - 3] <= tol);
    Ok(DInf {
        value: sup,
        partials,
        converged,
        exact,
    })
}

/// [`d_inf`] over the prefixes `{l_1}, {l_1, l_2}, ...` of `levels`.
pub fn d_inf_prefixes(m: &LevelMetricFamily, x: &Thread, y: &Thread, levels: &[Index], tol: f64) -> Result<DInf> {
    let sets: Vec<Vec<Index>> = (1..=levels.len()).map(|k| levels[..k].to_vec()).collect();
    d_inf(m, x, y, &sets, tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct DMu {
    pub value: f64,
    /// The omitted indices contribute at most this much.
    pub tail_bound: f64,
}

pub fn d_mu(m: &LevelMetricFamily, mu: &IndexMeasure, x: &Thread, y: &Thread) -> Result<DMu> {
    m.family.ensure_same(x.family())?;
    m.family.ensure_same(y.family())?;
    let mut value = 0.0;
    for (j, w) in &mu.weights {
        value += w * bounded(m.thread_distance(j, x, y)?);
    }
    Ok(DMu {
        value,
        tail_bound: mu.tail_mass,
    })
}

#[derive(Clone, Debug, Default)]
pub struct AuditOptions {
    pub tol: f64,
    /// Levels on which distinct threads must get positive distance.
    pub separation_levels: Option<Vec<Index>>,
    pub ultrametric: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PseudoMetricReport {
    pub triples: usize,
    pub symmetry: AxiomResidual,
    pub identity: AxiomResidual,
    pub triangle: AxiomResidual,
    pub separation: Option<AxiomResidual>,
    pub ultrametric: Option<AxiomResidual>,
    pub passed: bool,
}

/// Symmetry, `d(x, x) = 0` and the triangle inequality on each triple, plus
/// the optional separation and ultrametric checks. Inequality residuals are
/// the positive part of the violation.
pub fn pseudo_metric_audit<D>(distance: D, triples: &[(Thread, Thread, Thread)], opts: &AuditOptions) -> Result<PseudoMetricReport>
where
    D: Fn(&Thread, &Thread) -> Result<f64>,
{
    let mut symmetry = AxiomResidual::new("symmetry", opts.tol);
    let mut identity = AxiomResidual::new("zero-diagonal", opts.tol);
    let mut triangle = AxiomResidual::new("triangle", opts.tol);
    let mut separation = opts.separation_levels.as_ref().map(|_| AxiomResidual::new("separation", 0.0));
    let mut ultra = opts.ultrametric.then(|| AxiomResidual::new("ultrametric", opts.tol));
    for (n, (x, y, z)) in triples.iter().enumerate() {
        let at = format!("triple {n}");
        let (dxy, dyx, dyz, dxz) = (distance(x, y)?, distance(y, x)?, distance(y, z)?, distance(x, z)?);
        symmetry.record((dxy - dyx).abs(), &at);
        identity.record(distance(x, x)?.abs(), &at);
        triangle.record((dxz - dxy - dyz).max(0.0), &at);
        if let Some(u) = ultra.as_mut() {
            u.record((dxz - dxy.max(dyz)).max(0.0), &at);
        }
        if let (Some(s), Some(levels)) = (separation.as_mut(), opts.separation_levels.as_ref()) {
            let distinct = x.distance_on(y, levels)? > 0.0;
            s.record(if distinct && dxy <= 0.0 { 1.0 } else { 0.0 }, &at);
        }
    }
    let passed = symmetry.passed
        && identity.passed
        && triangle.passed
        && separation.as_ref().is_none_or(|s| s.passed)
        && ultra.as_ref().is_none_or(|u| u.passed);
    Ok(PseudoMetricReport {
        triples: triples.len(),
        symmetry,
        identity,
        triangle,
        separation,
        ultrametric: ultra,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::symplectic::level_thread;
    use nalgebra::dvector;

    #[test]
    fn five_sixths() {
        let f = gallery::euclid_tower(6);
        let m = LevelMetricFamily::euclidean(&f);
        let zero = gallery::coordinate_thread(&f, |_| 0.0);
        let y = level_thread(&f, &Index::Nat(2), dvector![3.0, 4.0]).unwrap();
        let levels: Vec<Index> = (1..=6).map(Index::Nat).collect();
        let r = d_inf_prefixes(&m, &zero, &y, &levels, 1e-12).unwrap();
        assert_eq!(r.partials[0], 0.75);
        assert!((r.value - 5.0 / 6.0).abs() <= 1e-12);
        assert!(r.converged && r.exact);
        assert_eq!(d_inf_prefixes(&m, &y, &y, &levels, 1e-12).unwrap().value, 0.0);
    }

    #[test]
    fn discrete_half() {
        let f = gallery::euclid_tower(3);
        let m = LevelMetricFamily::discrete(&f);
        let a = gallery::coordinate_thread(&f, |_| 1.0);
        let b = gallery::coordinate_thread(&f, |_| 2.0);
        let levels: Vec<Index> = (1..=3).map(Index::Nat).collect();
        assert_eq!(d_inf_prefixes(&m, &a, &b, &levels, 0.0).unwrap().value, 0.5);
        let mu = IndexMeasure::point_mass(Index::Nat(2), 0.4).unwrap();
        assert_eq!(d_mu(&m, &mu, &a, &b).unwrap().value, 0.2);
    }

    #[test]
    fn inverse_square_tail() {
        let mu = IndexMeasure::inverse_square(10);
        let total = std::f64::consts::PI.powi(2) / 6.0 - 1.0;
        assert!((mu.total_mass() - total).abs() < 1e-15);
    }

    #[test]
    fn measure_csv() {
        let mu = IndexMeasure::from_csv("index,weight\n1,0.5\n2,0.25\n".as_bytes()).unwrap();
        assert_eq!(mu.weights(), &[(Index::Nat(1), 0.5), (Index::Nat(2), 0.25)]);
        assert!(IndexMeasure::from_csv("index,weight\n1,-1\n".as_bytes()).is_err());
    }
}
