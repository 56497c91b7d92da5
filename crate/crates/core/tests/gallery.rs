mod common;

use common::levels;
use nalgebra::{dvector, DVector};
use profinite::calculus::check_tame;
use profinite::family::{compose_profinite_maps, is_profinite_diffeomorphism, sample_chains, verify_family};
use profinite::gallery::{self, CylindricalOneForm, SymplecticTower};
use profinite::limits::{check_thread, consecutive_pairs, is_inductive, lift_binary};
use profinite::symplectic::{hamiltonian_field, is_projectively_nondegenerate, SymplecticStructure};
use profinite::{Error, Index, Section, SectionPoint};

#[test]
fn polynomial_truncation_drops_top_coefficient() {
    let f = gallery::poly_tower(4);
    let p = f.proj(&Index::Nat(1), &Index::Nat(2)).unwrap();
    assert_eq!(p.apply(&dvector![1.0, 2.0, 3.0]).unwrap(), dvector![1.0, 2.0]);
}

#[test]
fn formal_exponential_is_a_thread_but_not_a_polynomial() {
    let f = gallery::poly_tower(20);
    let e = gallery::exp_series_thread(&f);
    let all = levels(&f);
    assert_eq!(check_thread(&e, &consecutive_pairs(&all), 0.0).unwrap().max_residual, 0.0);
    assert_eq!(e.value(&Index::Nat(3)).unwrap(), dvector![1.0, 1.0, 0.5, 1.0 / 6.0]);
    let candidates: Vec<Section> = (0..=10).map(|n| Section::single(Index::Nat(n))).collect();
    assert!(is_inductive(&e, &candidates, &all, 1e-12).unwrap().is_none());

    let p = gallery::polynomial_thread(&f, &[1.0, 0.0, 1.0]).unwrap();
    let sp = is_inductive(&p, &candidates, &all, 1e-12).unwrap().unwrap();
    assert_eq!(sp.section(), &Section::single(Index::Nat(2)));
}

#[test]
fn swap_is_an_involutive_diffeomorphism() {
    let f = gallery::cross_family();
    let swap = gallery::cross_swap(&f);
    let l = Index::name("L");
    assert_eq!(swap.level(&l).unwrap().apply(&dvector![1.0, 2.0]).unwrap(), dvector![2.0, 1.0]);
    assert_eq!(swap.index(&Index::name("J")), Index::name("K"));
    assert_eq!(swap.level(&Index::name("J")).unwrap().apply(&dvector![3.0]).unwrap(), dvector![3.0]);
    assert!(is_profinite_diffeomorphism(&swap, &swap, &levels(&f), 10, 0.0, 1).unwrap());
    let pairs = [
        (Index::name("I"), Index::name("J")),
        (Index::name("I"), Index::name("K")),
        (Index::name("J"), Index::name("L")),
        (Index::name("K"), Index::name("L")),
    ];
    let twice = compose_profinite_maps(&swap, &swap, &pairs, 1e-12).unwrap();
    for j in levels(&f) {
        assert_eq!(twice.index(&j), j);
        let n = f.dim(&j).unwrap();
        let x = DVector::from_fn(n, |i, _| i as f64 + 1.5);
        assert_eq!(twice.level(&j).unwrap().apply(&x).unwrap(), x);
    }
}

#[test]
fn cross_section_needs_coherent_data() {
    let f = gallery::cross_family();
    let s = Section::new(f.poset(), [Index::name("J"), Index::name("K")]).unwrap();
    let sp = SectionPoint::new(&f, s.clone(), vec![dvector![1.0], dvector![2.0]]).unwrap();
    assert!(matches!(
        profinite::limits::thread_from_section(&f, &sp),
        Err(Error::IllDefinedSection { .. })
    ));
    let zero = SectionPoint::new(&f, s, vec![dvector![0.0], dvector![0.0]]).unwrap();
    let t = profinite::limits::thread_from_section(&f, &zero).unwrap();
    assert_eq!(t.value(&Index::name("L")).unwrap(), dvector![0.0, 0.0]);
}

#[test]
fn wiener_pairing_and_interpolation() {
    let f = gallery::wiener_family(&[0.25, 0.5], 1).unwrap();
    let h = profinite::symplectic::level_thread(&f, &Index::times(&[0.5]), dvector![3.0]).unwrap();
    let alpha = CylindricalOneForm::new(&[0.5], vec![dvector![2.0]]).unwrap();
    assert_eq!(alpha.pairing(&f, &h).unwrap(), 6.0);
    assert_eq!(h.value(&Index::times(&[0.25, 0.5])).unwrap(), dvector![1.5, 3.0]);
    let up = f.inj(&Index::times(&[0.25, 0.5]), &Index::times(&[0.5])).unwrap();
    assert_eq!(up.apply(&dvector![2.0]).unwrap(), dvector![1.0, 2.0]);
    assert!(matches!(CylindricalOneForm::new(&[1.5], vec![dvector![1.0]]), Err(Error::TimeOutOfRange(_))));
}

#[test]
fn laplacian_exponential_is_diagonal() {
    let f = gallery::matrix_tower(8);
    let t = gallery::laplacian_exp_thread(&f);
    let v = t.value(&Index::Nat(2)).unwrap();
    let e = std::f64::consts::E;
    assert!((v[0] - e).abs() <= 1e-12 * e);
    assert!((v[3] - e.powi(4)).abs() <= 1e-12 * e.powi(4));
    assert_eq!((v[1], v[2]), (0.0, 0.0));
    assert_eq!(check_thread(&t, &consecutive_pairs(&levels(&f)), 0.0).unwrap().max_residual, 0.0);
}

#[test]
fn diagonal_threads_multiply_entrywise() {
    let f = gallery::matrix_tower(5);
    let a = gallery::diagonal_thread(&f, |k| k as f64);
    let b = gallery::diagonal_thread(&f, |k| 1.0 / (k as f64 + 1.0));
    let pairs = consecutive_pairs(&levels(&f));
    let c = lift_binary(&gallery::matrix_product(&f), &a, &b, &pairs, 1e-12).unwrap();
    let v = c.value(&Index::Nat(3)).unwrap();
    for k in 1..=3usize {
        assert!((v[(k - 1) * 3 + (k - 1)] - k as f64 / (k as f64 + 1.0)).abs() <= 1e-15);
    }
    assert!(check_thread(&c, &pairs, 1e-12).unwrap().passed);
}

#[test]
fn every_gallery_family_verifies() {
    for name in gallery::GALLERY_NAMES {
        let f = gallery::by_name(name, Some(4)).unwrap();
        let chains = sample_chains(f.poset(), 8, 3, 0);
        let rep = verify_family(&f, &chains, 10, 1e-9, 0).unwrap();
        assert!(rep.passed, "{name}: {:?}", rep.failing());
    }
}

#[test]
fn darboux_tower_ranks() {
    let even = SymplecticTower::even(3);
    assert_eq!(
        even.form().at(&Index::Nat(2), &dvector![0.0, 0.0]).unwrap().as_matrix(),
        nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
    );
    let rep = is_projectively_nondegenerate(&even.form(), &even.levels(), 2, 0).unwrap();
    assert!(rep.nondegenerate);
    let pairs = consecutive_pairs(&even.levels());
    assert_eq!(check_tame(&even.form(), &pairs, 3, 0, 0.0).unwrap().max_residual, 0.0);

    let odd = SymplecticTower::odd(3);
    let rep = is_projectively_nondegenerate(&odd.form(), &odd.levels(), 2, 0).unwrap();
    assert!(!rep.nondegenerate);
    assert_eq!(rep.level(&Index::Nat(3)).unwrap().max_rank, 2);
    let s = SymplecticStructure::new(odd.form(), &odd.levels(), 2, 0, 1e-12).unwrap();
    let h = odd.oscillator(3).unwrap();
    assert!(matches!(
        hamiltonian_field(&s, &h, &Index::Nat(3), &dvector![1.0, 0.0, 0.0]),
        Err(Error::SingularForm { .. })
    ));
}

#[test]
fn hyperbolic_pair_is_compatible_but_indefinite() {
    let g = gallery::hyperbolic_pair();
    let rep = profinite::calculus::metric_check(&g, &[Index::Nat(1), Index::Nat(2)], &[(Index::Nat(1), Index::Nat(2))], 2, 0, 1e-12)
        .unwrap();
    assert!(rep.compatible);
    assert!(!rep.levels[0].positive_definite);
    assert_eq!(g.matrix(&Index::Nat(1), &dvector![0.0]).unwrap()[(0, 0)], 0.0);
}
