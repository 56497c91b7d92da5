#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use profinite::cylinder::CylindricalFunction;
use profinite::family::random_point;
use profinite::gallery::{self, SymplecticTower};
use profinite::limits::{thread_from_section, SectionPoint};
use profinite::poset::enumerate_sections;
use profinite::{DiffMap, Index, IndexPoset, ProfiniteFamily, Section, Thread};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The gallery at the sizes named in the structural acceptance criterion.
pub fn acceptance_gallery() -> Vec<ProfiniteFamily> {
    vec![
        gallery::euclid_tower(10),
        gallery::poly_tower(10),
        gallery::matrix_tower(8),
        gallery::cross_family(),
        gallery::wiener_family(&gallery::dyadic_pool(3), 1).unwrap(),
        SymplecticTower::even(5).family,
        SymplecticTower::odd(5).family,
    ]
}

/// Smaller instances for the more expensive calculus checks.
pub fn small_gallery() -> Vec<ProfiniteFamily> {
    vec![
        gallery::euclid_tower(5),
        gallery::poly_tower(4),
        gallery::matrix_tower(3),
        gallery::cross_family(),
        gallery::wiener_family(&gallery::dyadic_pool(2), 2).unwrap(),
        SymplecticTower::even(3).family,
    ]
}

/// The greatest element of a finite directed poset.
pub fn top(family: &ProfiniteFamily) -> Index {
    let all = family.poset().elements().expect("finite poset");
    let mut acc = all[0].clone();
    for j in &all[1..] {
        acc = family.poset().join(&acc, j).unwrap();
    }
    acc
}

pub fn levels(family: &ProfiniteFamily) -> Vec<Index> {
    family.poset().elements().expect("finite poset")
}

/// A thread extended from a uniform random point of the top level.
pub fn random_thread(family: &ProfiniteFamily, rng: &mut ChaCha8Rng) -> Thread {
    let t = top(family);
    let x = random_point(rng, family.dim(&t).unwrap());
    thread_from_section(family, &SectionPoint::new(family, Section::single(t), vec![x]).unwrap()).unwrap()
}

pub fn thread_at(family: &ProfiniteFamily, j: &Index, x: DVector<f64>) -> Thread {
    thread_from_section(family, &SectionPoint::new(family, Section::single(j.clone()), vec![x]).unwrap()).unwrap()
}

/// A random support: a random enumerated section for small posets, a random
/// single level otherwise.
pub fn random_support(family: &ProfiniteFamily, rng: &mut ChaCha8Rng) -> Section {
    let all = levels(family);
    if all.len() <= 12 {
        let secs = enumerate_sections(family.poset()).unwrap();
        secs[rng.random_range(0..secs.len())].clone()
    } else {
        Section::single(all[rng.random_range(0..all.len())].clone())
    }
}

/// `sin(a·x) + (b·x)² / 2` on the concatenated support coordinates, with its
/// analytic gradient.
pub fn random_function(family: &ProfiniteFamily, support: Section, rng: &mut ChaCha8Rng) -> CylindricalFunction {
    let n: usize = support.members().map(|s| family.dim(s).unwrap()).sum();
    let a = random_point(rng, n);
    let b = random_point(rng, n);
    let (a2, b2) = (a.clone(), b.clone());
    let base = DiffMap::scalar(n, move |x| a.dot(x).sin() + 0.5 * b.dot(x).powi(2)).with_jacobian(move |x| {
        let g = &a2 * a2.dot(x).cos() + &b2 * b2.dot(x);
        DMatrix::from_row_slice(1, g.len(), g.as_slice())
    });
    CylindricalFunction::new(family, support, base).unwrap()
}

/// A random finite poset on `n` elements: `a < b` is added with probability
/// `density` for `a < b` in label order, then closed transitively.
pub fn random_poset(n: usize, density: f64, rng: &mut ChaCha8Rng) -> IndexPoset {
    use profinite::poset::FinitePoset;
    let elements: Vec<Index> = (0..n as u64).map(Index::Nat).collect();
    let mut covers = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(density) {
                covers.push((elements[a].clone(), elements[b].clone()));
            }
        }
    }
    IndexPoset::Finite(FinitePoset::from_covers(elements, &covers).unwrap())
}

/// A chain-tower thread whose coordinates agree with `base` before `from`.
pub fn perturbed_thread(family: &ProfiniteFamily, base: &DVector<f64>, from: usize, rng: &mut ChaCha8Rng) -> Thread {
    let t = top(family);
    let mut x = base.clone();
    for i in from..x.len() {
        x[i] = rng.random_range(-1.0..1.0);
    }
    thread_at(family, &t, x)
}
