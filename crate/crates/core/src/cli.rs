//! Command-line front end.
//!
//! Exit codes: `0` when every audit passes, `1` when an audit fails, `2` on
//! usage errors or malformed input. Reports are JSON with a
//! `schema_version` field; trajectories are CSV with the header
//! `step,t,x0,...,H`. Without `--out`, output goes to `$PROFINITE_OUT_DIR`
//! when set and to stdout otherwise.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{check_tame, metric_check, MetricReport, TameForm};
use crate::cylinder::{parse_function, CylindricalFunction};
use crate::descriptor::{FamilyDescriptor, ThreadDescriptor};
use crate::error::{Error, Result};
use crate::family::{random_point, sample_chains, verify_family, FamilyReport, ProfiniteFamily};
use crate::gallery::{self, BrownianSampler, CylindricalOneForm, SymplecticTower};
use crate::limits::consecutive_pairs;
use crate::linalg::max_diff;
use crate::poset::{Index, IndexPoset, Section};
use crate::profmetric::{d_inf_prefixes, d_mu, DInf, DMu, IndexMeasure, LevelMetricFamily};
use crate::report::{AxiomResidual, SCHEMA_VERSION};
use crate::symplectic::{
    defining_identity_residual, flow, hamiltonian_compat_check, is_projectively_nondegenerate, is_weakly_nondegenerate,
    momentum_verify, MomentumReport, NondegeneracyReport, Scheme, SymplecticStructure, WeakReport,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PROFINITE_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "profinite", version, about = "Verify profinite families and compute on their limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Audit the family axioms and the family's distinguished forms and metrics.
    Verify(VerifyArgs),
    /// Bounded sup and measure distances between two threads.
    Distance(DistanceArgs),
    /// Integrate a Hamiltonian field on one level.
    Flow(FlowArgs),
    /// Brownian sampling, one-form pairing, refinement and interpolation checks.
    Wiener(WienerArgs),
    /// Non-degeneracy, Hamiltonian and momentum-map checks on a symplectic tower.
    Symplectic(SymplecticArgs),
    /// Built-in families.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Gallery name or path to a JSON family descriptor.
    #[arg(long)]
    family: String,
    /// Top level of a gallery family.
    #[arg(long)]
    max_level: Option<u64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Random points per chain.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Chains sampled from non-chain posets.
    #[arg(long, default_value_t = 20)]
    chains: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    Euclidean,
    Discrete,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    max_level: Option<u64>,
    /// Thread descriptor: inline JSON or a file path.
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    metric: MetricArg,
    /// Number of levels, in the poset's canonical order.
    #[arg(long, default_value_t = 10)]
    levels: usize,
    /// CSV file of `index,weight` rows.
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Leapfrog,
    ImplicitMidpoint,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long, default_value = "symplectic_even_tower")]
    family: String,
    #[arg(long)]
    max_level: Option<u64>,
    #[arg(long)]
    level: u64,
    /// `oscillator` or an expression such as `x[2:0]^2 + sin(x[2:1])`.
    #[arg(long = "H", default_value = "oscillator")]
    hamiltonian: String,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Leapfrog)]
    scheme: SchemeArg,
    /// Comma-separated initial point; defaults to `(1, 0, ..., 0)`.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Largest acceptable `|H(final) - H(initial)|`.
    #[arg(long, default_value_t = 1e-6)]
    drift_tol: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct WienerArgs {
    /// Dyadic depth of the time pool (at most 4).
    #[arg(long, default_value_t = 3)]
    depth: u32,
    #[arg(long, default_value_t = 1)]
    components: usize,
    /// Brownian paths for the marginal statistics.
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    /// Random forms and triples for the exact checks.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Relative tolerance on the marginal variances.
    #[arg(long, default_value_t = 0.05)]
    variance_tol: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TowerArg {
    Even,
    Odd,
}

#[derive(Args, Debug)]
struct SymplecticArgs {
    #[arg(long, value_enum, default_value_t = TowerArg::Even)]
    tower: TowerArg,
    #[arg(long, default_value_t = 3)]
    max_pairs: u64,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    momentum_tol: f64,
    /// Sign of the momentum map components `± ½ (q² + p²)`.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    momentum_sign: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum GalleryAction {
    List {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Describe {
        name: String,
        #[arg(long)]
        cap: Option<u64>,
        /// Emit a tabulated JSON family descriptor instead of the summary.
        #[arg(long)]
        export: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Audit,
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularForm { .. }
            | Error::NonSymplecticAction { .. }
            | Error::NonconvergentSolve(_)
            | Error::MorphismViolation { .. }
            | Error::CommutingSquare { .. }
            | Error::IllDefinedSection { .. } => {
                eprintln!("FAIL {e}");
                Failure::Audit
            }
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = std::result::Result<bool, Failure>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Distance(a) => distance(a),
        Command::Flow(a) => run_flow(a),
        Command::Wiener(a) => wiener(a),
        Command::Symplectic(a) => symplectic(a),
        Command::Gallery { action } => run_gallery(action),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) | Err(Failure::Audit) => 1,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn emit(text: &str, out: Option<&Path>, default_name: &str) -> std::io::Result<()> {
    let path = match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(default_name)),
    };
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r,
            }
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn report_failures(axioms: &[&AxiomResidual]) {
    for a in axioms.iter().filter(|a| !a.passed) {
        eprintln!(
            "FAIL {}: residual {:e} exceeds {:e} at {}",
            a.axiom,
            a.max_residual,
            a.tolerance,
            a.worst_at.as_deref().unwrap_or("-")
        );
    }
}

fn load_family(spec: &str, cap: Option<u64>) -> Result<ProfiniteFamily> {
    let path = Path::new(spec);
    if spec.ends_with(".json") || path.is_file() {
        let src = fs::read_to_string(path).map_err(|e| Error::Descriptor(format!("{spec}: {e}")))?;
        FamilyDescriptor::from_json(&src)?.build()
    } else {
        gallery::by_name(spec, cap)
    }
}

fn load_thread_descriptor(spec: &str) -> Result<ThreadDescriptor> {
    let trimmed = spec.trim_start();
    if trimmed.starts_with('{') {
        ThreadDescriptor::from_json(trimmed)
    } else {
        let src = fs::read_to_string(spec).map_err(|e| Error::Descriptor(format!("{spec}: {e}")))?;
        ThreadDescriptor::from_json(&src)
    }
}

fn elements(family: &ProfiniteFamily) -> Result<Vec<Index>> {
    family.poset().elements().ok_or(Error::InfinitePoset)
}

/// One chain through every level for chain posets, sampled triples otherwise.
fn chains_for(family: &ProfiniteFamily, count: usize, seed: u64) -> Result<Vec<Vec<Index>>> {
    match family.poset() {
        IndexPoset::Chain { .. } => Ok(vec![elements(family)?]),
        p => {
            elements(family)?;
            Ok(sample_chains(p, count, 3, seed))
        }
    }
}

fn pairs_of(chains: &[Vec<Index>]) -> Vec<(Index, Index)> {
    let mut out: Vec<(Index, Index)> = chains.iter().flat_map(|c| consecutive_pairs(c)).filter(|(a, b)| a != b).collect();
    out.sort();
    out.dedup();
    out
}

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    command: &'static str,
    family: String,
    seed: u64,
    samples: usize,
    axioms: FamilyReport,
    forms: Vec<AxiomResidual>,
    metrics: Vec<MetricReport>,
    passed: bool,
}

fn distinguished(family: &ProfiniteFamily) -> (Vec<TameForm>, Vec<crate::calculus::CompatibleMetric>) {
    let name = family.name();
    if name.starts_with("euclid_tower(") {
        (
            vec![gallery::euclid_darboux_form(family), gallery::euclid_polynomial_form(family)],
            vec![gallery::euclid_metric(family), gallery::lorentz_metric(family)],
        )
    } else if name.starts_with("symplectic_even_tower(") {
        (
            vec![TameForm::constant(family, 2, |_, n| gallery::darboux_form(n)).with_name("darboux")],
            vec![gallery::hermitian_metric(family)],
        )
    } else if name.starts_with("symplectic_odd_tower(") {
        (vec![TameForm::constant(family, 2, |_, n| gallery::darboux_form(n)).with_name("darboux")], vec![])
    } else {
        (vec![], vec![])
    }
}

fn verify(a: VerifyArgs) -> Outcome {
    let family = load_family(&a.family, a.max_level)?;
    let chains = chains_for(&family, a.chains, a.common.seed)?;
    let axioms = verify_family(&family, &chains, a.samples, a.tol, a.common.seed)?;
    let pairs = pairs_of(&chains);
    let levels = elements(&family)?;
    let (forms, metrics) = distinguished(&family);
    let mut form_reports = Vec::new();
    for w in &forms {
        let mut r = check_tame(w, &pairs, a.samples, a.common.seed, a.tol)?;
        r.axiom = format!("{} ({})", r.axiom, w.name());
        form_reports.push(r);
    }
    let mut metric_reports = Vec::new();
    for g in &metrics {
        metric_reports.push(metric_check(g, &levels, &pairs, a.samples.min(5), a.common.seed, a.tol)?);
    }
    let passed = axioms.passed && form_reports.iter().all(|r| r.passed) && metric_reports.iter().all(|m| m.passed);
    let mut all: Vec<&AxiomResidual> = axioms.axioms.iter().chain(&form_reports).collect();
    for m in &metric_reports {
        all.push(&m.compatibility);
        all.push(&m.symmetry);
    }
    report_failures(&all);
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: "verify",
        family: family.name().to_string(),
        seed: a.common.seed,
        samples: a.samples,
        axioms,
        forms: form_reports,
        metrics: metric_reports,
        passed,
    };
    emit(&to_json(&report), a.common.out.as_deref(), "verify.json")?;
    Ok(passed)
}

#[derive(Serialize)]
struct DistanceReport {
    schema_version: u32,
    command: &'static str,
    family: String,
    metric: &'static str,
    levels: Vec<Index>,
    d_inf: DInf,
    d_mu: Option<DMu>,
    passed: bool,
}

fn distance(a: DistanceArgs) -> Outcome {
    let family = load_family(&a.family, a.max_level)?;
    let x = load_thread_descriptor(&a.x)?.build(&family)?;
    let y = load_thread_descriptor(&a.y)?.build(&family)?;
    let levels: Vec<Index> = elements(&family)?.into_iter().take(a.levels).collect();
    let (m, metric) = match a.metric {
        MetricArg::Euclidean => (LevelMetricFamily::euclidean(&family), "euclidean"),
        MetricArg::Discrete => (LevelMetricFamily::discrete(&family), "discrete"),
    };
    let dinf = d_inf_prefixes(&m, &x, &y, &levels, a.tol)?;
    let dmu = match &a.measure {
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            Some(d_mu(&m, &IndexMeasure::from_csv(file)?, &x, &y)?)
        }
        None => None,
    };
    let passed = (0.0..=1.0).contains(&dinf.value) && dinf.partials.windows(2).all(|w| w[0] <= w[1]);
    let report = DistanceReport {
        schema_version: SCHEMA_VERSION,
        command: "distance",
        family: family.name().to_string(),
        metric,
        levels,
        d_inf: dinf,
        d_mu: dmu,
        passed,
    };
    emit(&to_json(&report), a.common.out.as_deref(), "distance.json")?;
    Ok(passed)
}

#[derive(Serialize)]
struct FlowSummary {
    schema_version: u32,
    command: &'static str,
    family: String,
    level: Index,
    scheme: Scheme,
    dt: f64,
    steps: usize,
    final_energy_drift: f64,
    max_energy_drift: f64,
    passed: bool,
}

fn parse_point(src: &str, n: usize) -> Result<DVector<f64>> {
    let vals = src
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Invalid(format!("bad coordinate `{s}`"))))
        .collect::<Result<Vec<f64>>>()?;
    if vals.len() != n {
        return Err(Error::dims("initial point", n, vals.len()));
    }
    Ok(DVector::from_vec(vals))
}

fn run_flow(a: FlowArgs) -> Outcome {
    let family = load_family(&a.family, a.max_level)?;
    let level = Index::Nat(a.level);
    let n = family.dim(&level)?;
    let form = TameForm::constant(&family, 2, |_, n| gallery::darboux_form(n)).with_name("darboux");
    let s = SymplecticStructure::new(form, std::slice::from_ref(&level), 3, a.common.seed, 1e-12)?;
    let h: CylindricalFunction = if a.hamiltonian == "oscillator" {
        CylindricalFunction::from_fn(&family, Section::single(level.clone()), |x| 0.5 * x.norm_squared())?
    } else {
        parse_function(&family, &a.hamiltonian)?
    };
    let x0 = match &a.x0 {
        Some(src) => parse_point(src, n)?,
        None => DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 }),
    };
    let scheme = match a.scheme {
        SchemeArg::Leapfrog => Scheme::Leapfrog,
        SchemeArg::ImplicitMidpoint => Scheme::ImplicitMidpoint,
    };
    let traj = flow(&s, &h, &level, &x0, a.dt, a.steps, scheme)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    let text = String::from_utf8(csv).expect("csv output is utf-8");
    emit(text.trim_end(), a.common.out.as_deref(), "flow.csv")?;
    let drift = traj.final_energy_drift();
    let passed = drift <= a.drift_tol;
    if !passed {
        eprintln!("FAIL energy-drift: residual {drift:e} exceeds {:e}", a.drift_tol);
    }
    let summary = FlowSummary {
        schema_version: SCHEMA_VERSION,
        command: "flow",
        family: family.name().to_string(),
        level,
        scheme,
        dt: a.dt,
        steps: a.steps,
        final_energy_drift: drift,
        max_energy_drift: traj.max_energy_drift(),
        passed,
    };
    eprintln!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    Ok(passed)
}

#[derive(Serialize)]
struct Marginal {
    t: f64,
    mean: f64,
    variance: f64,
    mean_bound: f64,
    relative_variance_error: f64,
}

#[derive(Serialize)]
struct WienerReport {
    schema_version: u32,
    command: &'static str,
    family: String,
    seed: u64,
    paths: usize,
    marginals: Vec<Marginal>,
    marginals_passed: bool,
    pairing: AxiomResidual,
    refinement: AxiomResidual,
    cocycle: AxiomResidual,
    passed: bool,
}

fn random_subset(rng: &mut ChaCha8Rng, pool: &[f64]) -> Vec<f64> {
    loop {
        let s: Vec<f64> = pool.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn wiener(a: WienerArgs) -> Outcome {
    if a.depth > 4 || a.components == 0 {
        return Err(Failure::Input("depth must be at most 4 and components positive".into()));
    }
    let pool = gallery::dyadic_pool(a.depth);
    let family = gallery::wiener_family(&pool, a.components)?;
    let top = gallery::wiener_top(&family)?;
    let n = a.components;

    let mut sampler = BrownianSampler::new(&family, a.common.seed)?;
    let mut sum = vec![0.0; pool.len()];
    let mut sq = vec![0.0; pool.len()];
    for _ in 0..a.paths {
        let v = sampler.sample_values();
        for r in 0..pool.len() {
            let x = v[r * n];
            sum[r] += x;
            sq[r] += x * x;
        }
    }
    let count = a.paths.max(1) as f64;
    let marginals: Vec<Marginal> = pool
        .iter()
        .enumerate()
        .map(|(r, &t)| {
            let mean = sum[r] / count;
            let variance = sq[r] / count - mean * mean;
            Marginal {
                t,
                mean,
                variance,
                mean_bound: 4.0 * (t / count).sqrt(),
                relative_variance_error: (variance - t).abs() / t,
            }
        })
        .collect();
    let marginals_passed = marginals
        .iter()
        .all(|m| m.mean.abs() <= m.mean_bound && m.relative_variance_error <= a.variance_tol);

    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed.wrapping_add(1));
    let mut pairing = AxiomResidual::new("pairing", 0.0);
    let mut refinement = AxiomResidual::new("refinement-invariance", a.tol);
    let mut cocycle = AxiomResidual::new("pl-injection-cocycle", a.tol);
    let top_times = top.as_times().unwrap_or_default();
    for k in 0..a.samples {
        let times = random_subset(&mut rng, &pool);
        let covectors: Vec<DVector<f64>> = times.iter().map(|_| random_point(&mut rng, n)).collect();
        let alpha = CylindricalOneForm::new(&times, covectors.clone())?;
        let h = sampler.sample()?;
        let full = h.value(&top)?;
        let mut direct = 0.0;
        for (t, xi) in times.iter().zip(&covectors) {
            let r = top_times.iter().position(|s| s == t).expect("subset of the pool");
            for d in 0..n {
                direct += xi[d] * full[r * n + d];
            }
        }
        let at = format!("sample {k}");
        let paired = alpha.pairing(&family, &h)?;
        pairing.record((paired - direct).abs(), &at);
        let finer = alpha.refine(&family, &top_times)?;
        refinement.record((finer.pairing(&family, &h)? - paired).abs(), &at);

        let m = random_subset(&mut rng, &pool);
        let l = random_subset(&mut rng, &m);
        let kk = random_subset(&mut rng, &l);
        let (ki, li, mi) = (Index::times(&kk), Index::times(&l), Index::times(&m));
        let x = random_point(&mut rng, family.dim(&ki)?);
        let direct = family.inj(&mi, &ki)?.apply(&x)?;
        let stepwise = family.inj(&mi, &li)?.apply(&family.inj(&li, &ki)?.apply(&x)?)?;
        cocycle.record(max_diff(&direct, &stepwise), &format!("{ki} <= {li} <= {mi}"));
    }
    let passed = marginals_passed && pairing.passed && refinement.passed && cocycle.passed;
    report_failures(&[&pairing, &refinement, &cocycle]);
    if !marginals_passed {
        eprintln!("FAIL brownian-marginals: sample mean or variance outside bounds");
    }
    let report = WienerReport {
        schema_version: SCHEMA_VERSION,
        command: "wiener",
        family: family.name().to_string(),
        seed: a.common.seed,
        paths: a.paths,
        marginals,
        marginals_passed,
        pairing,
        refinement,
        cocycle,
        passed,
    };
    emit(&to_json(&report), a.common.out.as_deref(), "wiener.json")?;
    Ok(passed)
}

#[derive(Serialize)]
struct HyperbolicExample {
    projective: NondegeneracyReport,
    weak: WeakReport,
}

#[derive(Serialize)]
struct SymplecticReport {
    schema_version: u32,
    command: &'static str,
    family: String,
    seed: u64,
    closedness: f64,
    projective: NondegeneracyReport,
    weak: Vec<WeakReport>,
    defining_identity: AxiomResidual,
    hamiltonian_compatibility: AxiomResidual,
    momentum: Option<MomentumReport>,
    hyperbolic_pair: HyperbolicExample,
    passed: bool,
}

fn symplectic(a: SymplecticArgs) -> Outcome {
    let tower = match a.tower {
        TowerArg::Even => SymplecticTower::even(a.max_pairs),
        TowerArg::Odd => SymplecticTower::odd(a.max_pairs),
    };
    let family = tower.family.clone();
    let levels = tower.levels();
    let seed = a.common.seed;
    let s = SymplecticStructure::new(tower.form(), &levels, a.samples, seed, 1e-12)?;
    let projective = is_projectively_nondegenerate(s.form(), &levels, a.samples, seed)?;
    let full: Vec<Index> = projective.levels.iter().filter(|l| l.full_rank).map(|l| l.index.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
    let mut weak = Vec::new();
    for (pos, i) in levels.iter().enumerate() {
        let n = family.dim(i)?;
        let u = random_point(&mut rng, n);
        if u.iter().all(|v| *v == 0.0) {
            continue;
        }
        weak.push(is_weakly_nondegenerate(s.form(), i, &random_point(&mut rng, n), &u, &levels[pos..])?);
    }

    let top_full = full.last().cloned();
    let h = match &top_full {
        Some(t) => Some(tower.oscillator(t.as_nat().unwrap_or(2))?),
        None => None,
    };
    let mut identity = AxiomResidual::new("defining-identity", a.tol);
    let mut compat = AxiomResidual::new("hamiltonian-compatibility", a.tol);
    let mut momentum = None;
    if let (Some(h), Some(top)) = (&h, &top_full) {
        for j in &full {
            for _ in 0..a.samples {
                let x = random_point(&mut rng, family.dim(j)?);
                identity.record(defining_identity_residual(&s, h, j, &x)?, &j.to_string());
            }
        }
        compat = hamiltonian_compat_check(&s, h, &consecutive_pairs(&full), a.samples, seed, a.tol)?;
        let xi: Vec<f64> = (0..a.max_pairs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mu = tower.momentum_map(a.momentum_sign)?;
        momentum = Some(momentum_verify(&s, &tower.rotation_action(), &mu, &xi, top, a.samples, seed, a.momentum_tol)?);
    }

    let g = gallery::hyperbolic_pair();
    let pair_levels = [Index::Nat(1), Index::Nat(2)];
    let hyperbolic_pair = HyperbolicExample {
        projective: is_projectively_nondegenerate(&g, &pair_levels, a.samples, seed)?,
        weak: is_weakly_nondegenerate(&g, &Index::Nat(1), &DVector::zeros(1), &DVector::from_element(1, 1.0), &pair_levels[1..])?,
    };

    let passed = projective.nondegenerate
        && weak.iter().all(|w| w.witnessed)
        && identity.passed
        && compat.passed
        && momentum.as_ref().is_some_and(|m| m.passed);
    if !projective.nondegenerate {
        for l in projective.levels.iter().filter(|l| !l.full_rank) {
            eprintln!("FAIL projective-nondegeneracy: level {} has rank {} < {}", l.index, l.min_rank, l.dim);
        }
    }
    let mut audits = vec![&identity, &compat];
    if let Some(m) = &momentum {
        audits.push(&m.field_match);
    }
    report_failures(&audits);
    let report = SymplecticReport {
        schema_version: SCHEMA_VERSION,
        command: "symplectic",
        family: family.name().to_string(),
        seed,
        closedness: s.closedness(),
        projective,
        weak,
        defining_identity: identity,
        hamiltonian_compatibility: compat,
        momentum,
        hyperbolic_pair,
        passed,
    };
    emit(&to_json(&report), a.common.out.as_deref(), "symplectic.json")?;
    Ok(passed)
}

#[derive(Serialize)]
struct GalleryEntry {
    name: &'static str,
    summary: &'static str,
}

fn run_gallery(action: GalleryAction) -> Outcome {
    match action {
        GalleryAction::List { out } => {
            let entries: Vec<GalleryEntry> = gallery::GALLERY_NAMES
                .iter()
                .map(|n| GalleryEntry {
                    name: n,
                    summary: gallery::summary(n),
                })
                .collect();
            emit(&to_json(&entries), out.as_deref(), "gallery.json")?;
        }
        GalleryAction::Describe { name, cap, export, out } => {
            let text = if export {
                FamilyDescriptor::Table(crate::descriptor::export_family(&gallery::by_name(&name, cap)?)?).to_json()
            } else {
                to_json(&gallery::describe(&name, cap)?)
            };
            emit(&text, out.as_deref(), &format!("{name}.json"))?;
        }
    }
    Ok(true)
}
