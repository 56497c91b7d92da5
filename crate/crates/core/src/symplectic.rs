//! Non-degeneracy of level bilinear forms, tame symplectic structures,
//! Hamiltonian fields and flows, group actions and momentum maps.
//!
//! Matrix convention: `M_ab = ω(e_a, e_b)`, so `ω(X, Y) = Xᵀ M Y` and the
//! Hamiltonian field solves `Mᵀ X = ∇H`. For `dq ∧ dp` this gives
//! `X = (∂H/∂p, -∂H/∂q)`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{exterior_derivative, CompatibleMetric, TameForm};
use crate::cylinder::CylindricalFunction;
use crate::error::{Error, Result};
use crate::family::{random_point, ProfiniteFamily};
use crate::gallery::darboux_form;
use crate::limits::{thread_from_section, SectionPoint, Thread};
use crate::linalg::{self, max_abs, max_diff, max_diff_mat, rank, FD_REL_STEP, RANK_REL_THRESHOLD};
use crate::poset::{Index, Section};
use crate::report::AxiomResidual;

/// Anything that yields a bilinear form matrix per level and point.
pub trait BilinearFamily {
    fn family(&self) -> &ProfiniteFamily;
    fn label(&self) -> String;
    fn matrix_at(&self, j: &Index, pt: &DVector<f64>) -> Result<DMatrix<f64>>;
}

impl BilinearFamily for TameForm {
    fn family(&self) -> &ProfiniteFamily {
        TameForm::family(self)
    }

    fn label(&self) -> String {
        self.name().to_string()
    }

    fn matrix_at(&self, j: &Index, pt: &DVector<f64>) -> Result<DMatrix<f64>> {
        if self.degree() != 2 {
            return Err(Error::dims("bilinear form degree", 2, self.degree()));
        }
        Ok(self.at(j, pt)?.as_matrix())
    }
}

impl BilinearFamily for CompatibleMetric {
    fn family(&self) -> &ProfiniteFamily {
        CompatibleMetric::family(self)
    }

    fn label(&self) -> String {
        self.name().to_string()
    }

    fn matrix_at(&self, j: &Index, pt: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.matrix(j, pt)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelRank {
    pub index: Index,
    pub dim: usize,
    pub min_rank: usize,
    pub max_rank: usize,
    pub full_rank: bool,
    pub constant_rank: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NondegeneracyReport {
    pub form: String,
    pub levels: Vec<LevelRank>,
    pub nondegenerate: bool,
}

impl NondegeneracyReport {
    pub fn level(&self, j: &Index) -> Option<&LevelRank> {
        self.levels.iter().find(|l| &l.index == j)
    }
}

/// Rank profile of each level at random points; nondegenerate iff every
/// level has full rank at every sample.
pub fn is_projectively_nondegenerate(
    b: &dyn BilinearFamily,
    levels: &[Index],
    samples: usize,
    seed: u64,
) -> Result<NondegeneracyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for j in levels {
        let n = b.family().dim(j)?;
        let (mut lo, mut hi) = (usize::MAX, 0);
        for _ in 0..samples.max(1) {
            let r = rank(&b.matrix_at(j, &random_point(&mut rng, n))?);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        out.push(LevelRank {
            index: j.clone(),
            dim: n,
            min_rank: lo,
            max_rank: hi,
            full_rank: lo == n,
            constant_rank: lo == hi,
        });
    }
    Ok(NondegeneracyReport {
        form: b.label(),
        nondegenerate: out.iter().all(|l| l.full_rank),
        levels: out,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakWitness {
    pub level: Index,
    pub basis: usize,
    pub value: f64,
}

/// `witnessed = false` means no witness among the searched levels, not a
/// proof of degeneracy.
#[derive(Clone, Debug, Serialize)]
pub struct WeakReport {
    pub witnessed: bool,
    pub witness: Option<WeakWitness>,
    pub searched: Vec<Index>,
}

/// Looks for `J` in `search` and a basis vector `e_b` with
/// `|b_J(Di(u), e_b)| > threshold`, evaluating at `i(at)`.
pub fn is_weakly_nondegenerate(
    b: &dyn BilinearFamily,
    i: &Index,
    at: &DVector<f64>,
    u: &DVector<f64>,
    search: &[Index],
) -> Result<WeakReport> {
    let family = b.family();
    let n = family.dim(i)?;
    if u.len() != n {
        return Err(Error::dims("tangent vector", n, u.len()));
    }
    if u.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroVector);
    }
    for j in search {
        if !family.poset().leq(i, j) {
            return Err(Error::NotComparable(i.clone(), j.clone()));
        }
        let inj = family.inj(j, i)?;
        let du = inj.jacobian(at)? * u;
        let m = b.matrix_at(j, &inj.apply(at)?)?;
        let row = m.transpose() * &du;
        let threshold = RANK_REL_THRESHOLD * linalg::max_abs_mat(&m) * max_abs(&du);
        if let Some((basis, value)) = row.iter().enumerate().find(|(_, v)| v.abs() > threshold && v.abs() > 0.0) {
            return Ok(WeakReport {
                witnessed: true,
                witness: Some(WeakWitness {
                    level: j.clone(),
                    basis,
                    value: *value,
                }),
                searched: search.to_vec(),
            });
        }
    }
    Ok(WeakReport {
        witnessed: false,
        witness: None,
        searched: search.to_vec(),
    })
}

/// A closed tame 2-form of constant rank on each checked level.
#[derive(Clone, Debug)]
pub struct SymplecticStructure {
    form: TameForm,
    closedness: f64,
    ranks: NondegeneracyReport,
}

impl SymplecticStructure {
    /// Checks closedness and per-level constant rank at random points.
    pub fn new(form: TameForm, levels: &[Index], samples: usize, seed: u64, tol: f64) -> Result<Self> {
        if form.degree() != 2 {
            return Err(Error::dims("symplectic form degree", 2, form.degree()));
        }
        let d = exterior_derivative(&form);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut closedness: f64 = 0.0;
        for j in levels {
            let n = form.family().dim(j)?;
            for _ in 0..samples.max(1) {
                closedness = closedness.max(d.at(j, &random_point(&mut rng, n))?.max_abs());
            }
        }
        if closedness > tol {
            return Err(Error::Invalid(format!("form `{}` is not closed: |dω| = {closedness:e}", form.name())));
        }
        let ranks = is_projectively_nondegenerate(&form, levels, samples, seed)?;
        if let Some(l) = ranks.levels.iter().find(|l| !l.constant_rank) {
            return Err(Error::Invalid(format!("form rank varies on level {}", l.index)));
        }
        Ok(SymplecticStructure { form, closedness, ranks })
    }

    pub fn form(&self) -> &TameForm {
        &self.form
    }

    pub fn family(&self) -> &ProfiniteFamily {
        self.form.family()
    }

    pub fn closedness(&self) -> f64 {
        self.closedness
    }

    pub fn ranks(&self) -> &NondegeneracyReport {
        &self.ranks
    }

    /// Full rank on every checked level.
    pub fn is_symplectic(&self) -> bool {
        self.ranks.nondegenerate
    }

    fn nondegenerate_matrix(&self, j: &Index, pt: &DVector<f64>) -> Result<DMatrix<f64>> {
        let m = self.form.matrix_at(j, pt)?;
        let r = rank(&m);
        if r < m.nrows() {
            return Err(Error::SingularForm {
                index: j.clone(),
                rank: r,
                dim: m.nrows(),
            });
        }
        Ok(m)
    }
}

/// `X_{H,J}` at `pt ∈ E_J`: the solution of `ω_J(X, ·) = dH_J`.
pub fn hamiltonian_field(s: &SymplecticStructure, h: &CylindricalFunction, j: &Index, pt: &DVector<f64>) -> Result<DVector<f64>> {
    s.family().ensure_same(h.family())?;
    let grad = h.at_level(j)?.gradient(pt)?;
    let m = s.nondegenerate_matrix(j, pt)?;
    m.transpose().lu().solve(&grad).ok_or(Error::SingularForm {
        index: j.clone(),
        rank: rank(&m),
        dim: m.nrows(),
    })
}

/// `max_k |ω_J(X, e_k) - ∂_k H_J|` at `pt`.
pub fn defining_identity_residual(s: &SymplecticStructure, h: &CylindricalFunction, j: &Index, pt: &DVector<f64>) -> Result<f64> {
    let x = hamiltonian_field(s, h, j, pt)?;
    let m = s.form.matrix_at(j, pt)?;
    Ok(max_diff(&(m.transpose() * x), &h.at_level(j)?.gradient(pt)?))
}

/// `|Dπ(J, K) X_{H,K}(x) - X_{H,J}(π x)|` at random points of each upper level.
pub fn hamiltonian_compat_check(
    s: &SymplecticStructure,
    h: &CylindricalFunction,
    pairs: &[(Index, Index)],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<AxiomResidual> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = AxiomResidual::new("hamiltonian-compatibility", tol);
    let family = s.family();
    for (j, k) in pairs {
        let proj = family.proj(j, k)?;
        for _ in 0..samples {
            let x = random_point(&mut rng, family.dim(k)?);
            let xk = hamiltonian_field(s, h, k, &x)?;
            let xj = hamiltonian_field(s, h, j, &proj.apply(&x)?)?;
            res.record(max_diff(&(proj.jacobian(&x)? * xk), &xj), &format!("{j} <= {k}"));
        }
    }
    Ok(res)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Störmer-Verlet in Darboux coordinates; exact symplecticity for separable `H`.
    Leapfrog,
    ImplicitMidpoint,
}

/// Newton iterations allowed per implicit-midpoint step.
pub const MAX_NEWTON_ITERATIONS: usize = 50;

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub level: Index,
    pub dt: f64,
    pub points: Vec<DVector<f64>>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> &DVector<f64> {
        self.points.last().expect("trajectory holds the initial point")
    }

    /// `|H(final) - H(initial)|`.
    pub fn final_energy_drift(&self) -> f64 {
        (self.energies[self.energies.len() - 1] - self.energies[0]).abs()
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.energies.iter().fold(0.0, |m, e| m.max((e - self.energies[0]).abs()))
    }

    /// Rows `step,t,x0,...,x{n-1},H`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n = self.points.first().map_or(0, |p| p.len());
        let mut header = vec!["step".to_string(), "t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.push("H".to_string());
        let io = |e: csv::Error| Error::Invalid(format!("csv output: {e}"));
        out.write_record(&header).map_err(io)?;
        for (k, (p, e)) in self.points.iter().zip(&self.energies).enumerate() {
            let mut row = vec![k.to_string(), format!("{}", k as f64 * self.dt)];
            row.extend(p.iter().map(|v| format!("{v}")));
            row.push(format!("{e}"));
            out.write_record(&row).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Invalid(format!("csv output: {e}")))
    }
}

/// Integrates `X_{H,J}` from `x0` for `steps` steps; the trajectory holds
/// `steps + 1` points including `x0`.
pub fn flow(
    s: &SymplecticStructure,
    h: &CylindricalFunction,
    j: &Index,
    x0: &DVector<f64>,
    dt: f64,
    steps: usize,
    scheme: Scheme,
) -> Result<Trajectory> {
    let n = s.family().dim(j)?;
    if x0.len() != n {
        return Err(Error::dims("initial point", n, x0.len()));
    }
    s.nondegenerate_matrix(j, x0)?;
    let hj = h.at_level(j)?;
    let mut x = x0.clone();
    let mut points = vec![x.clone()];
    let mut energies = vec![hj.apply_scalar(&x)?];
    let canonical = darboux_form(n).as_matrix();
    for _ in 0..steps {
        x = match scheme {
            Scheme::Leapfrog => {
                if n % 2 == 1 || max_diff_mat(&s.form.matrix_at(j, &x)?, &canonical) > 0.0 {
                    return Err(Error::NonCanonicalForm(j.clone()));
                }
                leapfrog_step(&hj, &x, dt)?
            }
            Scheme::ImplicitMidpoint => midpoint_step(s, h, j, &x, dt)?,
        };
        energies.push(hj.apply_scalar(&x)?);
        points.push(x.clone());
    }
    Ok(Trajectory {
        level: j.clone(),
        dt,
        points,
        energies,
    })
}

fn leapfrog_step(hj: &crate::family::DiffMap, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    let n = x.len();
    let mut y = x.clone();
    let g = hj.gradient(&y)?;
    for i in (1..n).step_by(2) {
        y[i] -= 0.5 * dt * g[i - 1];
    }
    let g = hj.gradient(&y)?;
    for i in (0..n).step_by(2) {
        y[i] += dt * g[i + 1];
    }
    let g = hj.gradient(&y)?;
    for i in (1..n).step_by(2) {
        y[i] -= 0.5 * dt * g[i - 1];
    }
    Ok(y)
}

fn midpoint_step(s: &SymplecticStructure, h: &CylindricalFunction, j: &Index, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    let n = x.len();
    let field = |z: &DVector<f64>| hamiltonian_field(s, h, j, z);
    let mut y = x + field(x)? * dt;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let mid = (x + &y) * 0.5;
        let resid = &y - x - field(&mid)? * dt;
        if max_abs(&resid) <= 1e-14 * (1.0 + max_abs(&y)) {
            return Ok(y);
        }
        let dx = linalg::fd_jacobian(|z| field(z).unwrap_or_else(|_| DVector::from_element(n, f64::NAN)), &mid, n);
        let jac = DMatrix::identity(n, n) - dx * (0.5 * dt);
        let delta = jac.lu().solve(&resid).ok_or(Error::NonconvergentSolve(MAX_NEWTON_ITERATIONS))?;
        y -= delta;
        if y.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(Error::NonconvergentSolve(MAX_NEWTON_ITERATIONS))
}

type GeneratorFn = Arc<dyn Fn(&Index, usize) -> Result<DMatrix<f64>> + Send + Sync>;

/// A linear action of a `k`-dimensional matrix Lie group, given per level by
/// the images of a Lie-algebra basis: `φ_J(exp ξ) = exp(Σ ξ_i G_{J,i})`.
#[derive(Clone)]
pub struct ProfiniteGroupAction {
    family: ProfiniteFamily,
    algebra_dim: usize,
    generators: GeneratorFn,
}

impl fmt::Debug for ProfiniteGroupAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProfiniteGroupAction({}-dim on {})", self.algebra_dim, self.family.name())
    }
}

impl ProfiniteGroupAction {
    pub fn new<G>(family: &ProfiniteFamily, algebra_dim: usize, generators: G) -> Self
    where
        G: Fn(&Index, usize) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        ProfiniteGroupAction {
            family: family.clone(),
            algebra_dim,
            generators: Arc::new(generators),
        }
    }

    pub fn family(&self) -> &ProfiniteFamily {
        &self.family
    }

    pub fn algebra_dim(&self) -> usize {
        self.algebra_dim
    }

    /// `Σ ξ_i G_{J,i}`.
    pub fn generator(&self, j: &Index, xi: &[f64]) -> Result<DMatrix<f64>> {
        if xi.len() != self.algebra_dim {
            return Err(Error::dims("Lie algebra element", self.algebra_dim, xi.len()));
        }
        let n = self.family.dim(j)?;
        let mut a = DMatrix::zeros(n, n);
        for (i, c) in xi.iter().enumerate() {
            let g = (self.generators)(j, i)?;
            if g.shape() != (n, n) {
                return Err(Error::dims(format!("generator {i} at {j}"), n, g.nrows()));
            }
            a += g * *c;
        }
        Ok(a)
    }

    /// The matrix of `exp ξ` acting on level `J`.
    pub fn group_element(&self, j: &Index, xi: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.generator(j, xi)?.exp())
    }

    pub fn act(&self, j: &Index, xi: &[f64], x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.group_element(j, xi)? * x)
    }

    /// `d/dt exp(tξ)·x` at `t = 0` by central differences.
    pub fn infinitesimal(&self, j: &Index, xi: &[f64], x: &DVector<f64>) -> Result<DVector<f64>> {
        let h = FD_REL_STEP;
        let scaled = |t: f64| xi.iter().map(|c| c * t).collect::<Vec<f64>>();
        Ok((self.act(j, &scaled(h), x)? - self.act(j, &scaled(-h), x)?) / (2.0 * h))
    }

    /// Max of `|π φ_K x - φ_J π x|` and `|i φ_J y - φ_K i y|` for random `ξ` and points.
    pub fn equivariance_residual(&self, pairs: &[(Index, Index)], samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for (j, k) in pairs {
            let proj = self.family.proj(j, k)?;
            let inj = self.family.inj(k, j)?;
            for _ in 0..samples {
                let xi = random_xi(&mut rng, self.algebra_dim);
                let x = random_point(&mut rng, self.family.dim(k)?);
                let y = random_point(&mut rng, self.family.dim(j)?);
                let down = max_diff(&proj.apply(&self.act(k, &xi, &x)?)?, &self.act(j, &xi, &proj.apply(&x)?)?);
                let up = max_diff(&inj.apply(&self.act(j, &xi, &y)?)?, &self.act(k, &xi, &inj.apply(&y)?)?);
                worst = worst.max(down).max(up);
            }
        }
        Ok(worst)
    }

    /// `|φ_g^* ω - ω|` for `count` random group elements per level.
    pub fn symplectic_certificate(&self, omega: &TameForm, levels: &[Index], count: usize, seed: u64, tol: f64) -> Result<AxiomResidual> {
        self.family.ensure_same(omega.family())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut res = AxiomResidual::new("symplectic-action", tol);
        for j in levels {
            let n = self.family.dim(j)?;
            for _ in 0..count {
                let xi = random_xi(&mut rng, self.algebra_dim);
                let g = self.group_element(j, &xi)?;
                let x = random_point(&mut rng, n);
                let pulled = g.transpose() * omega.matrix_at(j, &(&g * &x))? * &g;
                res.record(max_diff_mat(&pulled, &omega.matrix_at(j, &x)?), &j.to_string());
            }
        }
        Ok(res)
    }
}

fn random_xi(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}

/// `ξ ↦ μ(ξ) = Σ ξ_i μ_i` for cylindrical components `μ_i`.
#[derive(Clone, Debug)]
pub struct MomentumMap {
    components: Vec<CylindricalFunction>,
}

impl MomentumMap {
    pub fn new(components: Vec<CylindricalFunction>) -> Result<Self> {
        let first = components.first().ok_or(Error::EmptySample)?;
        for c in &components[1..] {
            first.family().ensure_same(c.family())?;
        }
        Ok(MomentumMap { components })
    }

    pub fn algebra_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[CylindricalFunction] {
        &self.components
    }

    pub fn mu(&self, xi: &[f64]) -> Result<CylindricalFunction> {
        if xi.len() != self.components.len() {
            return Err(Error::dims("Lie algebra element", self.components.len(), xi.len()));
        }
        let terms: Vec<(f64, &CylindricalFunction)> = xi.iter().copied().zip(&self.components).collect();
        Ok(CylindricalFunction::linear_combination(&terms)?.with_label("mu"))
    }

    /// `|μ(aξ + bη)(t) - a μ(ξ)(t) - b μ(η)(t)|` over the given threads.
    pub fn linearity_residual(&self, a: f64, xi: &[f64], b: f64, eta: &[f64], threads: &[Thread]) -> Result<f64> {
        let combo: Vec<f64> = xi.iter().zip(eta).map(|(x, e)| a * x + b * e).collect();
        let (lhs, fx, fe) = (self.mu(&combo)?, self.mu(xi)?, self.mu(eta)?);
        let mut worst: f64 = 0.0;
        for t in threads {
            worst = worst.max((lhs.eval(t)? - a * fx.eval(t)? - b * fe.eval(t)?).abs());
        }
        Ok(worst)
    }
}

/// The thread determined by a point of a single level.
pub fn level_thread(family: &ProfiniteFamily, j: &Index, x: DVector<f64>) -> Result<Thread> {
    thread_from_section(family, &SectionPoint::new(family, Section::single(j.clone()), vec![x])?)
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentumReport {
    pub symplectic_action: AxiomResidual,
    pub field_match: AxiomResidual,
    pub passed: bool,
}

/// Compares the infinitesimal action `X_ξ` with `X_{μ(ξ)}` at random points
/// of level `J`, after certifying that the action preserves `ω` there.
#[allow(clippy::too_many_arguments)]
pub fn momentum_verify(
    s: &SymplecticStructure,
    action: &ProfiniteGroupAction,
    mu: &MomentumMap,
    xi: &[f64],
    j: &Index,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<MomentumReport> {
    let cert = action.symplectic_certificate(s.form(), std::slice::from_ref(j), 20, seed, 1e-8)?;
    if !cert.passed {
        return Err(Error::NonSymplecticAction {
            index: j.clone(),
            residual: cert.max_residual,
        });
    }
    let h = mu.mu(xi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut res = AxiomResidual::new("momentum-map", tol);
    let n = s.family().dim(j)?;
    for _ in 0..samples {
        let x = random_point(&mut rng, n);
        let generated = action.infinitesimal(j, xi, &x)?;
        let hamiltonian = hamiltonian_field(s, &h, j, &x)?;
        res.record(max_diff(&generated, &hamiltonian), &j.to_string());
    }
    Ok(MomentumReport {
        passed: res.passed,
        symplectic_action: cert,
        field_match: res,
    })
}

/// `𝔍_J = G⁻¹ Ω`, so that `ω_J(x, y) = g_J(x, 𝔍_J y)`.
pub fn musical_endomorphism(g: &CompatibleMetric, omega: &TameForm, j: &Index, pt: &DVector<f64>) -> Result<DMatrix<f64>> {
    let gm = g.matrix(j, pt)?;
    let om = omega.matrix_at(j, pt)?;
    gm.lu().solve(&om).ok_or_else(|| Error::NotInvertible(j.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{self, SymplecticTower};
    use nalgebra::dvector;

    fn even(p: u64) -> (SymplecticTower, SymplecticStructure) {
        let t = SymplecticTower::even(p);
        let s = SymplecticStructure::new(t.form(), &t.levels(), 3, 0, 1e-12).unwrap();
        (t, s)
    }

    #[test]
    fn oscillator_field() {
        let (t, s) = even(2);
        let h = t.oscillator(2).unwrap();
        let x = hamiltonian_field(&s, &h, &Index::Nat(2), &dvector![0.3, -0.7]).unwrap();
        assert!(max_diff(&x, &dvector![-0.7, -0.3]) < 1e-12);
        assert!(defining_identity_residual(&s, &h, &Index::Nat(4), &dvector![0.3, -0.7, 1.0, 2.0]).unwrap() <= 1e-10);
    }

    #[test]
    fn odd_level_is_singular() {
        let t = SymplecticTower::odd(2);
        let s = SymplecticStructure::new(t.form(), &t.levels(), 2, 0, 1e-12).unwrap();
        assert!(!s.is_symplectic());
        assert_eq!(s.ranks().level(&Index::Nat(3)).unwrap().min_rank, 2);
        let h = CylindricalFunction::constant(&t.family, Section::single(Index::Nat(3)), 1.0).unwrap();
        let err = hamiltonian_field(&s, &h, &Index::Nat(3), &dvector![0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::SingularForm { rank: 2, dim: 3, .. }));
    }

    #[test]
    fn weak_witness_on_hyperbolic_pair() {
        let g = gallery::hyperbolic_pair();
        let rep = is_weakly_nondegenerate(&g, &Index::Nat(1), &dvector![0.0], &dvector![1.0], &[Index::Nat(2)]).unwrap();
        assert_eq!(
            rep.witness,
            Some(WeakWitness {
                level: Index::Nat(2),
                basis: 1,
                value: 1.0
            })
        );
        let proj = is_projectively_nondegenerate(&g, &[Index::Nat(1), Index::Nat(2)], 2, 0).unwrap();
        assert!(!proj.nondegenerate);
        assert!(matches!(
            is_weakly_nondegenerate(&g, &Index::Nat(1), &dvector![0.0], &dvector![0.0], &[Index::Nat(2)]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn leapfrog_circle() {
        let (t, s) = even(1);
        let h = t.oscillator(2).unwrap();
        let traj = flow(&s, &h, &Index::Nat(2), &dvector![1.0, 0.0], 1e-3, 10_000, Scheme::Leapfrog).unwrap();
        assert_eq!(traj.len(), 10_001);
        assert!(traj.max_energy_drift() <= 1e-6);
        assert!((traj.last().norm() - 1.0).abs() <= 1e-3);
        let mid = flow(&s, &h, &Index::Nat(2), &dvector![1.0, 0.0], 1e-2, 100, Scheme::ImplicitMidpoint).unwrap();
        assert!(mid.max_energy_drift() <= 1e-9);
    }

    #[test]
    fn momentum_sign() {
        let (t, s) = even(1);
        let act = t.rotation_action();
        let j = Index::Nat(2);
        let good = momentum_verify(&s, &act, &t.momentum_map(-1.0).unwrap(), &[1.0], &j, 10, 3, 1e-6).unwrap();
        assert!(good.passed, "{:?}", good.field_match);
        let bad = momentum_verify(&s, &act, &t.momentum_map(1.0).unwrap(), &[1.0], &j, 10, 3, 1e-6).unwrap();
        assert!(!bad.passed);
    }

    #[test]
    fn musical_identity_for_euclid() {
        let (t, _) = even(1);
        let g = gallery::hermitian_metric(&t.family);
        let m = musical_endomorphism(&g, &t.form(), &Index::Nat(2), &dvector![0.0, 0.0]).unwrap();
        assert_eq!(m, gallery::darboux_form(2).as_matrix());
    }
}
