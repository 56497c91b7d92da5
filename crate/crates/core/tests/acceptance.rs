//! End-to-end acceptance run: one line per criterion, non-zero exit on any failure.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::{E, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use common::*;
use nalgebra::{dvector, DVector};
use profinite::calculus::{
    check_tame, d_commutes_residual, d_squared_residual, dual_retraction_residual, tangent_duality_check, AltForm,
    FormField, TameForm, TangentThread,
};
use profinite::cylinder::separate;
use profinite::family::{random_point, sample_chains, verify_family};
use profinite::gallery::{self, BrownianSampler, CylindricalOneForm, SymplecticTower};
use profinite::limits::{check_thread, consecutive_pairs};
use profinite::poset::enumerate_sections;
use profinite::profmetric::{d_inf_prefixes, d_mu, pseudo_metric_audit, AuditOptions, IndexMeasure, LevelMetricFamily};
use profinite::symplectic::{
    defining_identity_residual, flow, hamiltonian_compat_check, is_projectively_nondegenerate, is_weakly_nondegenerate,
    momentum_verify, Scheme, SymplecticStructure,
};
use profinite::{Index, IndexPoset, ProfiniteFamily, Section};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: profinite::Error) -> String {
    e.to_string()
}

fn ordered_pairs(family: &ProfiniteFamily) -> Vec<(Index, Index)> {
    let all = levels(family);
    let mut out = Vec::new();
    for j in &all {
        for k in &all {
            if j != k && family.poset().leq(j, k) {
                out.push((j.clone(), k.clone()));
            }
        }
    }
    out
}

fn structural_axioms() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, f) in acceptance_gallery().iter().enumerate() {
        let chains = sample_chains(f.poset(), 10, 4, n as u64);
        let rep = verify_family(f, &chains, 100, 1e-9, 100 + n as u64).map_err(err)?;
        check(rep.passed, || format!("{}: {:?}", f.name(), rep.failing()))?;
        worst = rep.axioms.iter().map(|a| a.max_residual).fold(worst, f64::max);
    }
    Ok(format!("7 families, max residual {worst:.1e}"))
}

fn brute_force_sections(poset: &IndexPoset) -> BTreeSet<Vec<Index>> {
    let all = poset.elements().unwrap();
    let n = all.len();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<Index> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| all[i].clone()).collect();
        let antichain = members
            .iter()
            .enumerate()
            .all(|(a, x)| members[a + 1..].iter().all(|y| !poset.leq(x, y) && !poset.leq(y, x)));
        let covering = all.iter().all(|x| members.iter().any(|m| poset.leq(x, m) || poset.leq(m, x)));
        if antichain && covering {
            let mut m = members;
            m.sort();
            out.insert(m);
        }
    }
    out
}

fn enumerated(poset: &IndexPoset) -> Result<BTreeSet<Vec<Index>>, String> {
    Ok(enumerate_sections(poset)
        .map_err(err)?
        .iter()
        .map(|s| {
            let mut m: Vec<Index> = s.members().cloned().collect();
            m.sort();
            m
        })
        .collect())
}

fn sections_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for n in 1..=12 {
        for _ in 0..4 {
            let density = rng.random_range(0.05..0.7);
            let poset = random_poset(n, density, &mut rng);
            let (got, want) = (enumerated(&poset)?, brute_force_sections(&poset));
            check(got == want, || format!("poset of size {n}: {got:?} != {want:?}"))?;
            checked += 1;
        }
        let chain = IndexPoset::chain(1, n as u64);
        let singletons: BTreeSet<Vec<Index>> = (1..=n as u64).map(|k| vec![Index::Nat(k)]).collect();
        check(enumerated(&chain)? == singletons, || format!("chain of length {n}"))?;
    }
    Ok(format!("{checked} random posets, 12 chains"))
}

fn cylindrical_coherence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut incoherent = 0;
    for f in acceptance_gallery() {
        for _ in 0..100 {
            let support = random_support(&f, &mut rng);
            let g = random_function(&f, support, &mut rng);
            let t = random_thread(&f, &mut rng);
            let a = g.eval(&t).map_err(err)?;
            let rep = g.representative(&t).map_err(err)?;
            let b = g.eval_section_point(&rep).map_err(err)?;
            check(a.to_bits() == b.to_bits(), || format!("{}: {a} != {b} on the representative", f.name()))?;
            match g.eval_via_representative(&t) {
                Ok(c) => check(a.to_bits() == c.to_bits(), || format!("{}: {a} != {c} via extension", f.name()))?,
                Err(profinite::Error::IllDefinedSection { .. }) if g.support().len() > 1 => incoherent += 1,
                Err(e) => return Err(err(e)),
            }
        }
        let witnesses = levels(&f);
        for _ in 0..100 {
            let (x, y) = (random_thread(&f, &mut rng), random_thread(&f, &mut rng));
            let sep = separate(&x, &y, &witnesses).map_err(err)?;
            let g = sep.ok_or_else(|| format!("{}: no separating function", f.name()))?;
            check(g.eval(&x).map_err(err)? != g.eval(&y).map_err(err)?, || format!("{}: separation failed", f.name()))?;
        }
    }
    Ok(format!(
        "100 evaluations and 100 separations per family; {incoherent} multi-member representatives not extendable"
    ))
}

fn distances() -> Outcome {
    let f = gallery::euclid_tower(10);
    let m = LevelMetricFamily::euclidean(&f);
    let lv = levels(&f);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scaled = |rng: &mut ChaCha8Rng| {
        let s = rng.random_range(0.01..5.0);
        thread_at(&f, &Index::Nat(10), random_point(rng, 10) * s)
    };
    let triples: Vec<_> = (0..50).map(|_| (scaled(&mut rng), scaled(&mut rng), scaled(&mut rng))).collect();
    for (x, y, _) in &triples {
        let d = d_inf_prefixes(&m, x, y, &lv, 1e-12).map_err(err)?;
        check((0.0..=1.0).contains(&d.value), || format!("d_inf = {} out of [0, 1]", d.value))?;
        check(d.partials.windows(2).all(|w| w[0] <= w[1]), || "partial suprema decrease".into())?;
    }
    let opts = AuditOptions {
        tol: 1e-12,
        separation_levels: Some(lv.clone()),
        ultrametric: false,
    };
    let rep = pseudo_metric_audit(|x, y| Ok(d_inf_prefixes(&m, x, y, &lv, 1e-12)?.value), &triples, &opts).map_err(err)?;
    check(rep.passed, || format!("d_inf audit: {rep:?}"))?;

    let zero = gallery::coordinate_thread(&f, |_| 0.0);
    let y = thread_at(&f, &Index::Nat(2), dvector![3.0, 4.0]);
    let five_sixths = d_inf_prefixes(&m, &zero, &y, &lv, 1e-12).map_err(err)?.value;
    check((five_sixths - 5.0 / 6.0).abs() <= 1e-12, || format!("example distance {five_sixths}"))?;

    let cap = 40;
    let tower = gallery::euclid_tower(cap);
    let discrete = LevelMetricFamily::discrete(&tower);
    let mu = IndexMeasure::inverse_square(cap);
    let (a, b) = (gallery::coordinate_thread(&tower, |_| 0.0), gallery::coordinate_thread(&tower, |_| 1.0));
    let dm = d_mu(&discrete, &mu, &a, &b).map_err(err)?;
    let target = (PI * PI / 6.0 - 1.0) / 2.0;
    check((dm.value - target).abs() <= dm.tail_bound, || {
        format!("d_mu = {} vs {target}, tail bound {}", dm.value, dm.tail_bound)
    })?;
    let base = random_point(&mut rng, cap as usize);
    let agree = |rng: &mut ChaCha8Rng| {
        let from = rng.random_range(0..=cap as usize);
        perturbed_thread(&tower, &base, from, rng)
    };
    let ultra: Vec<_> = (0..50).map(|_| (agree(&mut rng), agree(&mut rng), agree(&mut rng))).collect();
    let opts = AuditOptions {
        tol: 1e-12,
        separation_levels: None,
        ultrametric: true,
    };
    let rep = pseudo_metric_audit(|x, y| Ok(d_mu(&discrete, &mu, x, y)?.value), &ultra, &opts).map_err(err)?;
    check(rep.passed, || format!("d_mu audit: {rep:?}"))?;
    Ok(format!("5/6 to {:.1e}, d_mu {:.5} (tail {:.1e})", (five_sixths - 5.0 / 6.0).abs(), dm.value, dm.tail_bound))
}

fn sine_chain_form(family: &ProfiniteFamily) -> TameForm {
    TameForm::new(family, 1, |_, n| {
        Ok(FormField::smooth(n, 1, move |x| {
            let comps: Vec<(Vec<usize>, f64)> = (0..n.saturating_sub(1)).map(|i| (vec![i + 1], x[i].sin())).collect();
            AltForm::from_components(n, 1, &comps)
        }))
    })
    .with_name("sin chain")
}

fn calculus() -> Outcome {
    let mut worst_retraction: f64 = 0.0;
    for (n, f) in small_gallery().iter().enumerate() {
        let pairs: Vec<(Index, Index)> = sample_chains(f.poset(), 6, 3, n as u64)
            .iter()
            .flat_map(|c| consecutive_pairs(c))
            .collect();
        for degree in 1..=2 {
            worst_retraction = worst_retraction.max(dual_retraction_residual(f, &pairs, degree, 5, n as u64).map_err(err)?);
        }
    }
    check(worst_retraction <= 1e-12, || format!("dual retraction residual {worst_retraction:e}"))?;

    let f = gallery::euclid_tower(5);
    let lv = levels(&f);
    let pairs = ordered_pairs(&f);
    let smooth = sine_chain_form(&f);
    let poly = gallery::euclid_polynomial_form(&f);
    let dd_smooth = d_squared_residual(&smooth, &lv, 5, 5).map_err(err)?;
    check(dd_smooth <= 1e-5, || format!("finite-difference d² residual {dd_smooth:e}"))?;
    let dd_poly = d_squared_residual(&poly, &lv, 5, 5).map_err(err)?;
    check(dd_poly == 0.0, || format!("polynomial d² residual {dd_poly:e}"))?;
    let commute = d_commutes_residual(&smooth, &pairs, 5, 5).map_err(err)?;
    check(commute <= 1e-5, || format!("pullback and d residual {commute:e}"))?;

    let even = SymplecticTower::even(5);
    let odd = SymplecticTower::odd(5);
    let forms = [
        (gallery::euclid_darboux_form(&f), pairs.clone()),
        (poly, pairs.clone()),
        (smooth, pairs),
        (even.form(), ordered_pairs(&even.family)),
        (odd.form(), ordered_pairs(&odd.family)),
    ];
    let mut worst_tame: f64 = 0.0;
    for (omega, pairs) in &forms {
        let r = check_tame(omega, pairs, 5, 6, 1e-9).map_err(err)?;
        check(r.passed, || format!("{}: {r:?}", omega.name()))?;
        worst_tame = worst_tame.max(r.max_residual);
    }
    Ok(format!(
        "retraction {worst_retraction:.1e}, d² {dd_smooth:.1e}, commute {commute:.1e}, tame {worst_tame:.1e}"
    ))
}

fn tangent_coincidence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for f in small_gallery() {
        let t = top(&f);
        let cert = Section::single(t.clone());
        let n = f.dim(&t).map_err(err)?;
        for _ in 0..20 {
            let support = random_support(&f, &mut rng);
            let g = random_function(&f, support, &mut rng);
            for _ in 0..20 {
                let base = random_thread(&f, &mut rng);
                let v = TangentThread::from_section(&base, &cert, vec![random_point(&mut rng, n)]).map_err(err)?;
                let rep = tangent_duality_check(&g, &v, &cert, 1e-6).map_err(err)?;
                check(rep.passed, || format!("{}: {rep:?}", f.name()))?;
                worst = worst.max(rep.residual);
                count += 1;
            }
        }
    }
    Ok(format!("{count} checks, max relative residual {worst:.1e}"))
}

fn nondegeneracy() -> Outcome {
    let g = gallery::hyperbolic_pair();
    let weak = is_weakly_nondegenerate(&g, &Index::Nat(1), &dvector![0.0], &dvector![1.0], &[Index::Nat(2)]).map_err(err)?;
    let w = weak.witness.clone().ok_or("no weak witness")?;
    check(weak.witnessed && w.level == Index::Nat(2) && w.basis == 1, || format!("witness {w:?}"))?;
    let proj = is_projectively_nondegenerate(&g, &[Index::Nat(1), Index::Nat(2)], 3, 7).map_err(err)?;
    check(!proj.nondegenerate, || "hyperbolic pair reported projectively nondegenerate".into())?;

    let odd = SymplecticTower::odd(5);
    let rep = is_projectively_nondegenerate(&odd.form(), &odd.levels(), 3, 7).map_err(err)?;
    check(!rep.nondegenerate, || "odd tower reported nondegenerate".into())?;
    for l in &rep.levels {
        let want = 2 * (l.dim / 2);
        check(l.constant_rank && l.min_rank == want, || format!("odd tower level {}: {l:?}", l.index))?;
    }
    let even = SymplecticTower::even(5);
    let rep = is_projectively_nondegenerate(&even.form(), &even.levels(), 3, 7).map_err(err)?;
    check(rep.nondegenerate && rep.levels.iter().all(|l| l.full_rank), || "even tower degenerate".into())?;
    Ok(format!("witness (level {}, e_{}), odd ranks 2⌊n/2⌋, even full", w.level, w.basis + 1))
}

fn hamiltonian_suite() -> Outcome {
    let tower = SymplecticTower::even(5);
    let s = SymplecticStructure::new(tower.form(), &tower.levels(), 3, 8, 1e-12).map_err(err)?;
    check(s.is_symplectic(), || "even tower not symplectic".into())?;
    let h = tower.oscillator(4).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut identity: f64 = 0.0;
    for j in tower.levels() {
        let n = tower.family.dim(&j).map_err(err)?;
        for _ in 0..10 {
            identity = identity.max(defining_identity_residual(&s, &h, &j, &random_point(&mut rng, n)).map_err(err)?);
        }
    }
    check(identity <= 1e-10, || format!("defining identity residual {identity:e}"))?;
    let compat = hamiltonian_compat_check(&s, &h, &ordered_pairs(&tower.family), 10, 8, 1e-10).map_err(err)?;
    check(compat.passed, || format!("{compat:?}"))?;

    let osc = tower.oscillator(2).map_err(err)?;
    let traj = flow(&s, &osc, &Index::Nat(2), &dvector![1.0, 0.0], 1e-3, 10_000, Scheme::Leapfrog).map_err(err)?;
    let drift = traj.max_energy_drift();
    let radius = (traj.last().norm() - 1.0).abs();
    check(drift <= 1e-6 && radius <= 1e-3, || format!("drift {drift:e}, radius error {radius:e}"))?;

    let action = tower.rotation_action();
    let xi: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let j = Index::Nat(10);
    let good = momentum_verify(&s, &action, &tower.momentum_map(-1.0).map_err(err)?, &xi, &j, 20, 8, 1e-6).map_err(err)?;
    check(good.passed, || format!("momentum map: {:?}", good.field_match))?;
    let flipped = momentum_verify(&s, &action, &tower.momentum_map(1.0).map_err(err)?, &xi, &j, 20, 8, 1e-6).map_err(err)?;
    check(!flipped.passed, || "sign-flipped momentum map accepted".into())?;
    Ok(format!(
        "identity {identity:.1e}, compat {:.1e}, drift {drift:.1e}, radius {radius:.1e}, momentum {:.1e}",
        compat.max_residual, good.field_match.max_residual
    ))
}

fn random_subset(pool: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    pool.iter().copied().filter(|_| rng.random_bool(0.5)).collect()
}

fn wiener() -> Outcome {
    let f = gallery::wiener_family(&gallery::dyadic_pool(3), 1).map_err(err)?;
    let pool = gallery::dyadic_pool(3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sampler = BrownianSampler::new(&f, 9).map_err(err)?;

    for _ in 0..100 {
        let mut times = random_subset(&pool, &mut rng);
        if times.is_empty() {
            times.push(pool[0]);
        }
        let covs: Vec<DVector<f64>> = times.iter().map(|_| random_point(&mut rng, 1)).collect();
        let alpha = CylindricalOneForm::new(&times, covs.clone()).map_err(err)?;
        let h = sampler.sample().map_err(err)?;
        let mut direct = 0.0;
        for (t, c) in times.iter().zip(&covs) {
            direct += c[0] * h.value(&Index::times(&[*t])).map_err(err)?[0];
        }
        let paired = alpha.pairing(&f, &h).map_err(err)?;
        check(paired == direct, || format!("pairing {paired} != direct sum {direct}"))?;

        let finer: Vec<f64> = pool.iter().copied().filter(|t| times.contains(t) || rng.random_bool(0.5)).collect();
        let refined = alpha.refine(&f, &finer).map_err(err)?;
        let r = (refined.pairing(&f, &h).map_err(err)? - paired).abs();
        check(r <= 1e-12, || format!("refinement changed the pairing by {r:e}"))?;
    }

    let mut cocycle: f64 = 0.0;
    for _ in 0..200 {
        let l = random_subset(&pool, &mut rng);
        let k = random_subset(&l, &mut rng);
        let j = random_subset(&k, &mut rng);
        let (j, k, l) = (Index::times(&j), Index::times(&k), Index::times(&l));
        let x = random_point(&mut rng, f.dim(&j).map_err(err)?);
        let two_step = f.inj(&l, &k).map_err(err)?.apply(&f.inj(&k, &j).map_err(err)?.apply(&x).map_err(err)?).map_err(err)?;
        let direct = f.inj(&l, &j).map_err(err)?.apply(&x).map_err(err)?;
        cocycle = cocycle.max(profinite::linalg::max_diff(&two_step, &direct));
    }
    check(cocycle <= 1e-12, || format!("interpolation cocycle residual {cocycle:e}"))?;

    let n = 100_000;
    let mut sums = vec![0.0; pool.len()];
    let mut squares = vec![0.0; pool.len()];
    for _ in 0..n {
        let v = sampler.sample_values();
        for i in 0..pool.len() {
            sums[i] += v[i];
            squares[i] += v[i] * v[i];
        }
    }
    let mut worst_rel: f64 = 0.0;
    for (i, t) in pool.iter().enumerate() {
        let mean = sums[i] / n as f64;
        let var = (squares[i] - n as f64 * mean * mean) / (n as f64 - 1.0);
        worst_rel = worst_rel.max((var - t).abs() / t);
    }
    check(worst_rel <= 0.05, || format!("marginal variance off by {:.1}%", 100.0 * worst_rel))?;
    Ok(format!("pairing exact, cocycle {cocycle:.1e}, variance within {:.2}%", 100.0 * worst_rel))
}

fn laplacian_thread() -> Outcome {
    let f = gallery::matrix_tower(8);
    let t = gallery::laplacian_exp_thread(&f);
    let rep = check_thread(&t, &consecutive_pairs(&levels(&f)), 0.0).map_err(err)?;
    check(rep.max_residual == 0.0, || format!("{rep:?}"))?;
    let v = t.value(&Index::Nat(2)).map_err(err)?;
    let want = dvector![E, 0.0, 0.0, E.powi(4)];
    let rel = profinite::linalg::max_diff(&v, &want) / profinite::linalg::max_abs(&want);
    check(rel <= 1e-12, || format!("level 2 = {v:?}"))?;
    Ok(format!("thread residual 0, level 2 relative error {rel:.1e}"))
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_profinite"))
        .args(args)
        .env_remove("PROFINITE_OUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn cli() -> Outcome {
    let reports: [&[&str]; 4] = [
        &["verify", "--family", "wiener", "--seed", "11"],
        &["distance", "--family", "euclid_tower", "--x", r#"{"thread":"zero"}"#, "--y", &fixture("oscillator_thread.json")],
        &["wiener", "--paths", "2000", "--seed", "11"],
        &["symplectic", "--seed", "11"],
    ];
    for args in reports {
        let (code_a, a) = run(args)?;
        let (code_b, b) = run(args)?;
        check(code_a == 0 && code_a == code_b, || format!("{args:?}: exit codes {code_a}, {code_b}"))?;
        check(!a.is_empty() && a == b, || format!("{args:?}: reports differ"))?;
    }
    let (good, corrupted, malformed) = (fixture("good_fixture.json"), fixture("corrupted_fixture.json"), fixture("malformed_fixture.json"));
    let contract: [(&[&str], i32); 6] = [
        (&["verify", "--family", &good], 0),
        (&["verify", "--family", &corrupted], 1),
        (&["verify", "--family", &malformed], 2),
        (&["verify", "--family", &good, "--bogus"], 2),
        (&["frobnicate"], 2),
        (&["symplectic", "--tower", "odd"], 1),
    ];
    for (args, want) in contract {
        let (code, _) = run(args)?;
        check(code == want, || format!("{args:?}: exit {code}, expected {want}"))?;
    }
    Ok("4 reproducible reports, 6 exit codes".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("structural axioms", structural_axioms),
        ("sections oracle", sections_oracle),
        ("cylindrical coherence", cylindrical_coherence),
        ("distances", distances),
        ("calculus", calculus),
        ("tangent coincidence", tangent_coincidence),
        ("non-degeneracy dichotomy", nondegeneracy),
        ("hamiltonian suite", hamiltonian_suite),
        ("wiener space", wiener),
        ("laplacian exponential thread", laplacian_thread),
        ("command line", cli),
    ];
    let mut failures = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: pass ({detail}) [{secs:.2}s]", n + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} {name}: FAIL ({detail}) [{secs:.2}s]", n + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
