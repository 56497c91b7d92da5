//! Sparse multivariate polynomials with exact partial derivatives.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;

/// `Σ c_α x^α` over `nvars` variables. Zero coefficients are never stored,
/// so derivatives of constants are the empty polynomial.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        Poly::monomial(nvars, &[(i, 1)], 1.0)
    }

    /// `c Π x_i^{e_i}` from `(i, e_i)` pairs.
    pub fn monomial(nvars: usize, powers: &[(usize, u32)], c: f64) -> Self {
        let mut exps = vec![0; nvars];
        for &(i, e) in powers {
            exps[i] += e;
        }
        let mut p = Poly::zero(nvars);
        p.add_term(exps, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    fn add_term(&mut self, exps: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| x[i].powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, c * e[i] as f64);
            }
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.nvars = self.nvars.max(other.nvars);
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// Substitutes `x_i = Σ_j a_ij y_j`, giving a polynomial in `y`.
    pub fn compose_linear(&self, a: &nalgebra::DMatrix<f64>) -> Poly {
        let m = a.ncols();
        let lin: Vec<Poly> = (0..self.nvars)
            .map(|i| {
                (0..m).fold(Poly::zero(m), |acc, j| acc.add(&Poly::var(m, j).scale(a[(i, j)])))
            })
            .collect();
        let mut out = Poly::zero(m);
        for (e, c) in &self.terms {
            let mut term = Poly::constant(m, *c);
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = term.mul(&lin[i]);
                }
            }
            out = out.add(&term);
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{i}")?,
                    _ => write!(f, "*x{i}^{k}")?,
                }
            }
        }
        Ok(())
    }
}
