//! Cylindrical functions: maps on the limit that factor through the levels of
//! a finite section.
//!
//! The base map of a function over a multi-member section takes the member
//! coordinates concatenated in canonical member order.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::family::{DiffMap, ProfiniteFamily};
use crate::limits::{thread_from_section, SectionPoint, Thread};
use crate::linalg;
use crate::poset::{Index, Section};

#[derive(Clone)]
pub struct CylindricalFunction {
    family: ProfiniteFamily,
    support: Section,
    base: DiffMap,
    label: Arc<str>,
}

impl fmt::Debug for CylindricalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyl({} on {} of {})", self.label, self.support, self.family.name())
    }
}

fn support_dims(family: &ProfiniteFamily, support: &Section) -> Result<Vec<usize>> {
    support.members().map(|s| family.dim(s)).collect()
}

impl CylindricalFunction {
    pub fn new(family: &ProfiniteFamily, support: Section, base: DiffMap) -> Result<Self> {
        let total: usize = support_dims(family, &support)?.iter().sum();
        if base.domain_dim() != total {
            return Err(Error::dims("cylindrical base domain", total, base.domain_dim()));
        }
        if base.codomain_dim() != 1 {
            return Err(Error::dims("cylindrical base codomain", 1, base.codomain_dim()));
        }
        Ok(CylindricalFunction {
            family: family.clone(),
            support,
            base,
            label: Arc::from("f"),
        })
    }

    /// Scalar base map from a closure, differentiated by finite differences.
    pub fn from_fn<F>(family: &ProfiniteFamily, support: Section, f: F) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        let n = support_dims(family, &support)?.iter().sum();
        CylindricalFunction::new(family, support, DiffMap::scalar(n, f))
    }

    pub fn constant(family: &ProfiniteFamily, support: Section, c: f64) -> Result<Self> {
        let n: usize = support_dims(family, &support)?.iter().sum();
        let base = DiffMap::smooth(n, 1, move |_| DVector::from_element(1, c)).with_jacobian(move |_| DMatrix::zeros(1, n));
        Ok(CylindricalFunction::new(family, support, base)?.with_label(&format!("{c}")))
    }

    /// Coordinate `i` of level `J`.
    pub fn coordinate(family: &ProfiniteFamily, j: &Index, i: usize) -> Result<Self> {
        let n = family.dim(j)?;
        if i >= n {
            return Err(Error::dims(format!("coordinate of level {j}"), n, i + 1));
        }
        let mut row = DMatrix::zeros(1, n);
        row[(0, i)] = 1.0;
        Ok(CylindricalFunction::new(family, Section::single(j.clone()), DiffMap::linear(row))?
            .with_label(&format!("x[{j}:{i}]")))
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Arc::from(label);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn family(&self) -> &ProfiniteFamily {
        &self.family
    }

    pub fn support(&self) -> &Section {
        &self.support
    }

    pub fn base(&self) -> &DiffMap {
        &self.base
    }

    fn gather(&self, t: &Thread) -> Result<DVector<f64>> {
        self.family.ensure_same(t.family())?;
        let blocks = self.support.members().map(|s| t.value(s)).collect::<Result<Vec<_>>>()?;
        Ok(linalg::concat(&blocks))
    }

    pub fn eval(&self, t: &Thread) -> Result<f64> {
        self.base.apply_scalar(&self.gather(t)?)
    }

    /// Value on section data over exactly this function's support.
    pub fn eval_section_point(&self, sp: &SectionPoint) -> Result<f64> {
        if sp.family_name() != self.family.name() {
            return Err(Error::FamilyMismatch {
                expected: self.family.name().to_string(),
                found: sp.family_name().to_string(),
            });
        }
        if sp.section() != &self.support {
            return Err(Error::Invalid(format!("section {} is not the support {}", sp.section(), self.support)));
        }
        let blocks: Vec<DVector<f64>> = sp.values().map(|(_, v)| v.clone()).collect();
        self.base.apply_scalar(&linalg::concat(&blocks))
    }

    /// The restriction of `t` to the support; its extension evaluates like `t`.
    pub fn representative(&self, t: &Thread) -> Result<SectionPoint> {
        self.family.ensure_same(t.family())?;
        t.restrict(&self.support)
    }

    /// `eval` through the extension of the representative.
    pub fn eval_via_representative(&self, t: &Thread) -> Result<f64> {
        let ext = thread_from_section(&self.family, &self.representative(t)?)?;
        self.eval(&ext)
    }

    /// Gradient of the base map at the representative, on the concatenated
    /// member coordinates.
    pub fn differential(&self, t: &Thread) -> Result<DVector<f64>> {
        self.base.gradient(&self.gather(t)?)
    }

    /// `f` read on level `J`: each member's coordinates are obtained by
    /// projecting (member below `J`) or injecting (member above `J`).
    pub fn at_level(&self, j: &Index) -> Result<DiffMap> {
        let poset = self.family.poset();
        let n = self.family.dim(j)?;
        let mut maps = Vec::new();
        for s in self.support.members() {
            if poset.leq(s, j) {
                maps.push(self.family.proj(s, j)?);
            } else if poset.leq(j, s) {
                maps.push(self.family.inj(s, j)?);
            } else {
                return Err(Error::Incomparable(j.clone()));
            }
        }
        self.base.after(&DiffMap::stack(n, &maps)?)
    }

    /// The same function expressed over a section whose members dominate the
    /// current ones.
    pub fn refine(&self, finer: &Section) -> Result<CylindricalFunction> {
        let poset = self.family.poset();
        let new_dims = support_dims(&self.family, finer)?;
        let total: usize = new_dims.iter().sum();
        let mut offsets = Vec::new();
        let mut off = 0;
        for d in &new_dims {
            offsets.push(off);
            off += d;
        }
        let members: Vec<&Index> = finer.members().collect();
        let mut maps = Vec::new();
        for s in self.support.members() {
            let slot = members
                .iter()
                .position(|m| poset.leq(s, m))
                .ok_or_else(|| Error::NotRefinement(s.clone()))?;
            let m = members[slot];
            let mut select = DMatrix::zeros(new_dims[slot], total);
            select.view_mut((0, offsets[slot]), (new_dims[slot], new_dims[slot])).fill_with_identity();
            maps.push(self.family.proj(s, m)?.after(&DiffMap::linear(select))?);
        }
        let base = self.base.after(&DiffMap::stack(total, &maps)?)?;
        Ok(CylindricalFunction::new(&self.family, finer.clone(), base)?.with_label(&self.label))
    }

    /// `Σ c_i f_i` over the join of all supports.
    pub fn linear_combination(terms: &[(f64, &CylindricalFunction)]) -> Result<CylindricalFunction> {
        let first = terms.first().ok_or(Error::EmptySample)?.1;
        let top = Section::single(join_of(&first.family, terms.iter().map(|t| t.1))?);
        let parts = terms.iter().map(|(_, f)| f.refine(&top)).collect::<Result<Vec<_>>>()?;
        let n = top.members().map(|s| first.family.dim(s)).sum::<Result<usize>>()?;
        let coeffs: Vec<f64> = terms.iter().map(|t| t.0).collect();
        let bases: Vec<DiffMap> = parts.iter().map(|p| p.base.clone()).collect();
        let stacked = DiffMap::stack(n, &bases)?;
        let row = DMatrix::from_row_slice(1, coeffs.len(), &coeffs);
        let base = DiffMap::linear(row).after(&stacked)?;
        CylindricalFunction::new(&first.family, top, base)
    }
}

/// Join of every support member of the given functions.
fn join_of<'a>(family: &ProfiniteFamily, fs: impl Iterator<Item = &'a CylindricalFunction>) -> Result<Index> {
    let mut acc: Option<Index> = None;
    for f in fs {
        family.ensure_same(&f.family)?;
        for s in f.support.members() {
            acc = Some(match acc {
                None => s.clone(),
                Some(a) => family.poset().join(&a, s)?,
            });
        }
    }
    acc.ok_or(Error::EmptySection)
}

/// A coordinate function telling `x` and `y` apart at the witness level where
/// they differ most, or `None` when they agree on every witness.
pub fn separate(x: &Thread, y: &Thread, witness_levels: &[Index]) -> Result<Option<CylindricalFunction>> {
    x.family().ensure_same(y.family())?;
    let mut best: Option<(Index, usize, f64)> = None;
    for j in witness_levels {
        let d = x.value(j)? - y.value(j)?;
        for (i, v) in d.iter().enumerate() {
            if v.abs() > 0.0 && best.as_ref().is_none_or(|b| v.abs() > b.2) {
                best = Some((j.clone(), i, v.abs()));
            }
        }
    }
    best.map(|(j, i, _)| CylindricalFunction::coordinate(x.family(), &j, i)).transpose()
}

/// Polynomials in cylindrical functions: `Σ c · Π f`.
#[derive(Clone, Debug)]
pub struct CylPolynomial {
    family: ProfiniteFamily,
    terms: Vec<(f64, Vec<CylindricalFunction>)>,
}

impl CylPolynomial {
    pub fn constant(family: &ProfiniteFamily, c: f64) -> Self {
        CylPolynomial {
            family: family.clone(),
            terms: vec![(c, vec![])],
        }
    }

    pub fn from_function(f: &CylindricalFunction) -> Self {
        CylPolynomial {
            family: f.family.clone(),
            terms: vec![(1.0, vec![f.clone()])],
        }
    }

    /// `P(f) = Σ_k c_k f^k`.
    pub fn univariate(coeffs: &[f64], f: &CylindricalFunction) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| (c, vec![f.clone(); k]))
            .collect();
        CylPolynomial {
            family: f.family.clone(),
            terms,
        }
    }

    pub fn terms(&self) -> &[(f64, Vec<CylindricalFunction>)] {
        &self.terms
    }

    pub fn add(&self, other: &CylPolynomial) -> Result<CylPolynomial> {
        self.family.ensure_same(&other.family)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(CylPolynomial {
            family: self.family.clone(),
            terms,
        })
    }

    pub fn scale(&self, s: f64) -> CylPolynomial {
        CylPolynomial {
            family: self.family.clone(),
            terms: self.terms.iter().map(|(c, fs)| (c * s, fs.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &CylPolynomial) -> Result<CylPolynomial> {
        self.family.ensure_same(&other.family)?;
        let mut terms = Vec::new();
        for (a, fa) in &self.terms {
            for (b, fb) in &other.terms {
                let mut fs = fa.clone();
                fs.extend(fb.iter().cloned());
                terms.push((a * b, fs));
            }
        }
        Ok(CylPolynomial {
            family: self.family.clone(),
            terms,
        })
    }

    pub fn eval(&self, t: &Thread) -> Result<f64> {
        let mut total = 0.0;
        for (c, fs) in &self.terms {
            let mut term = *c;
            for f in fs {
                term *= f.eval(t)?;
            }
            total += term;
        }
        Ok(total)
    }

    /// A single cylindrical function over the join of every factor's support.
    pub fn to_cylindrical(&self) -> Result<CylindricalFunction> {
        let top = Section::single(join_of(&self.family, self.terms.iter().flat_map(|t| t.1.iter()))?);
        let n = top.members().map(|s| self.family.dim(s)).sum::<Result<usize>>()?;
        let mut terms: Vec<(f64, Vec<DiffMap>)> = Vec::new();
        for (c, fs) in &self.terms {
            let bases = fs.iter().map(|f| Ok(f.refine(&top)?.base)).collect::<Result<Vec<_>>>()?;
            terms.push((*c, bases));
        }
        let eval_terms = terms.clone();
        let base = DiffMap::scalar(n, move |x| {
            eval_terms
                .iter()
                .map(|(c, bs)| c * bs.iter().map(|b| b.apply_scalar(x).unwrap_or(f64::NAN)).product::<f64>())
                .sum()
        })
        .with_jacobian(move |x| {
            let mut g = DMatrix::zeros(1, n);
            for (c, bs) in &terms {
                let vals: Vec<f64> = bs.iter().map(|b| b.apply_scalar(x).unwrap_or(f64::NAN)).collect();
                for (k, b) in bs.iter().enumerate() {
                    let others: f64 = vals.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| v).product();
                    let grad = b.jacobian(x).unwrap_or_else(|_| DMatrix::from_element(1, n, f64::NAN));
                    g += grad * (c * others);
                }
            }
            g
        });
        CylindricalFunction::new(&self.family, top, base)
    }
}

#[derive(Clone, Debug)]
enum Expr {
    Num(f64),
    Coord(Index, usize),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Expression(format!("{msg} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            lhs = Expr::Bin(op as char, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            lhs = Expr::Bin(op as char, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Expr::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit()
                        || matches!(self.src[self.pos], b'.' | b'e' | b'E')
                        || (matches!(self.src[self.pos], b'+' | b'-') && matches!(self.src[self.pos - 1], b'e' | b'E')))
                {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                s.parse().map(Expr::Num).map_err(|_| self.err("bad number"))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("").to_string();
                if name == "x" && self.eat(b'[') {
                    let start = self.pos;
                    let end = self.src[start..]
                        .iter()
                        .position(|&c| c == b']')
                        .map(|p| start + p)
                        .ok_or_else(|| self.err("expected `]`"))?;
                    let inner = std::str::from_utf8(&self.src[start..end]).unwrap_or("");
                    self.pos = end + 1;
                    let (level, coord) = inner.rsplit_once(':').ok_or_else(|| self.err("expected `level:coord`"))?;
                    let coord = coord.trim().parse().map_err(|_| self.err("bad coordinate"))?;
                    return Ok(Expr::Coord(level.parse()?, coord));
                }
                if name == "pi" {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                if !self.eat(b'(') {
                    return Err(self.err(&format!("unknown name `{name}`")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                match name.as_str() {
                    "sin" | "cos" | "exp" | "sqr" | "sqrt" | "tanh" => Ok(Expr::Call(name, Box::new(arg))),
                    _ => Err(self.err(&format!("unknown function `{name}`"))),
                }
            }
            _ => Err(self.err("unexpected input")),
        }
    }
}

fn collect_coords(e: &Expr, out: &mut Vec<(Index, usize)>) {
    match e {
        Expr::Coord(j, i) => out.push((j.clone(), *i)),
        Expr::Neg(a) | Expr::Call(_, a) => collect_coords(a, out),
        Expr::Bin(_, a, b) => {
            collect_coords(a, out);
            collect_coords(b, out);
        }
        Expr::Num(_) => {}
    }
}

fn eval_expr(e: &Expr, slots: &[(Index, usize)], vals: &DVector<f64>) -> f64 {
    match e {
        Expr::Num(v) => *v,
        Expr::Coord(j, i) => {
            let k = slots.iter().position(|s| s.0 == *j && s.1 == *i).unwrap_or(0);
            vals[k]
        }
        Expr::Neg(a) => -eval_expr(a, slots, vals),
        Expr::Bin(op, a, b) => {
            let (x, y) = (eval_expr(a, slots, vals), eval_expr(b, slots, vals));
            match op {
                '+' => x + y,
                '-' => x - y,
                '*' => x * y,
                '/' => x / y,
                _ => x.powf(y),
            }
        }
        Expr::Call(f, a) => {
            let x = eval_expr(a, slots, vals);
            match f.as_str() {
                "sin" => x.sin(),
                "cos" => x.cos(),
                "exp" => x.exp(),
                "sqr" => x * x,
                "sqrt" => x.sqrt(),
                _ => x.tanh(),
            }
        }
    }
}

/// Parses an expression such as `sqr(x[2:0]) + sin(x[{0.5}:0]) * 3` into a
/// cylindrical function. `x[J:i]` is coordinate `i` of level `J`; the support
/// is the join of every referenced level.
pub fn parse_function(family: &ProfiniteFamily, src: &str) -> Result<CylindricalFunction> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let expr = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    let mut refs = Vec::new();
    collect_coords(&expr, &mut refs);
    refs.sort();
    refs.dedup();
    let mut top: Option<Index> = None;
    for (j, i) in &refs {
        let n = family.dim(j)?;
        if *i >= n {
            return Err(Error::Expression(format!("coordinate {i} out of range for level {j} of dimension {n}")));
        }
        top = Some(match top {
            None => j.clone(),
            Some(t) => family.poset().join(&t, j)?,
        });
    }
    let top = match top {
        Some(t) => t,
        None => family
            .poset()
            .elements()
            .and_then(|e| e.into_iter().next())
            .ok_or_else(|| Error::Expression("constant expression needs a finite poset".into()))?,
    };
    let n = family.dim(&top)?;
    let mut rows = DMatrix::zeros(refs.len(), n);
    for (r, (j, i)) in refs.iter().enumerate() {
        let p = family.proj(j, &top)?;
        let lin = p
            .as_linear()
            .ok_or_else(|| Error::Expression("expressions need linear projections".into()))?;
        rows.set_row(r, &lin.row(*i));
    }
    let base = DiffMap::scalar(refs.len(), move |v| eval_expr(&expr, &refs, v)).after(&DiffMap::linear(rows))?;
    Ok(CylindricalFunction::new(family, Section::single(top), base)?.with_label(src))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use nalgebra::dvector;

    fn nat(n: u64) -> Index {
        Index::Nat(n)
    }

    fn three_four(f: &ProfiniteFamily) -> Thread {
        gallery::coordinate_thread(f, |i| i as f64 + 3.0)
    }

    #[test]
    fn coordinate_and_representative() {
        let f = gallery::euclid_tower(6);
        let t = three_four(&f);
        let x1 = CylindricalFunction::coordinate(&f, &nat(3), 0).unwrap();
        assert_eq!(x1.eval(&t).unwrap(), 3.0);
        assert_eq!(x1.eval_via_representative(&t).unwrap(), 3.0);
        let g = CylindricalFunction::coordinate(&f, &nat(2), 1).unwrap();
        assert_eq!(g.representative(&t).unwrap().value(&nat(2)).unwrap(), &dvector![3.0, 4.0]);
        let g3 = g.refine(&Section::single(nat(3))).unwrap();
        assert_eq!(g3.representative(&t).unwrap().value(&nat(3)).unwrap(), &dvector![3.0, 4.0, 5.0]);
        assert_eq!(g3.eval(&t).unwrap(), g.eval(&t).unwrap());
        assert!(matches!(g3.refine(&Section::single(nat(1))), Err(Error::NotRefinement(_))));
    }

    #[test]
    fn wiener_square() {
        let f = gallery::wiener_family(&gallery::dyadic_pool(3), 1).unwrap();
        let half = Index::times(&[0.5]);
        let sp = SectionPoint::new(&f, Section::single(half.clone()), vec![dvector![2.0]]).unwrap();
        let t = thread_from_section(&f, &sp).unwrap();
        let sq = CylindricalFunction::from_fn(&f, Section::single(half.clone()), |x| x[0] * x[0]).unwrap();
        assert_eq!(sq.eval(&t).unwrap(), 4.0);
        assert!((sq.differential(&t).unwrap()[0] - 4.0).abs() < 1e-8);
        assert_eq!(sq.representative(&t).unwrap().value(&half).unwrap(), &dvector![2.0]);
        let g = CylindricalFunction::coordinate(&f, &half, 0).unwrap();
        let p = CylPolynomial::univariate(&[-1.0, 0.0, 1.0], &g);
        assert_eq!(p.eval(&t).unwrap(), 3.0);
        assert_eq!(p.to_cylindrical().unwrap().eval(&t).unwrap(), 3.0);
    }

    #[test]
    fn polynomial_algebra_on_euclid() {
        let f = gallery::euclid_tower(5);
        let t = three_four(&f);
        let x1 = CylPolynomial::from_function(&CylindricalFunction::coordinate(&f, &nat(1), 0).unwrap());
        let x2 = CylPolynomial::from_function(&CylindricalFunction::coordinate(&f, &nat(2), 1).unwrap());
        assert_eq!(x1.add(&x2).unwrap().eval(&t).unwrap(), 7.0);
        let prod = x1.mul(&x2).unwrap();
        assert_eq!(prod.eval(&t).unwrap(), 12.0);
        let c = prod.to_cylindrical().unwrap();
        assert_eq!(c.support(), &Section::single(nat(2)));
        assert_eq!(c.eval(&t).unwrap(), 12.0);
        assert_eq!(c.differential(&t).unwrap(), dvector![4.0, 3.0]);
        let k = CylindricalFunction::constant(&f, Section::single(nat(1)), 2.5).unwrap();
        assert_eq!(k.eval(&t).unwrap(), 2.5);
        assert_eq!(k.differential(&t).unwrap(), dvector![0.0]);
    }

    #[test]
    fn separation() {
        let f = gallery::euclid_tower(4);
        let x = three_four(&f);
        let y = gallery::coordinate_thread(&f, |i| if i == 1 { 5.0 } else { i as f64 + 3.0 });
        let levels: Vec<Index> = (1..=2).map(nat).collect();
        let s = separate(&x, &y, &levels).unwrap().unwrap();
        assert_eq!((s.eval(&x).unwrap() - s.eval(&y).unwrap()).abs(), 1.0);
        assert!(separate(&x, &x, &levels).unwrap().is_none());
    }

    #[test]
    fn expressions() {
        let f = gallery::euclid_tower(4);
        let t = three_four(&f);
        let e = parse_function(&f, "x[1:0] * x[2:1] + sqr(x[3:2]) - 2^3").unwrap();
        assert_eq!(e.support(), &Section::single(nat(3)));
        assert_eq!(e.eval(&t).unwrap(), 12.0 + 25.0 - 8.0);
        assert!(parse_function(&f, "x[2:5]").is_err());
        assert!(parse_function(&f, "foo(1)").is_err());
        assert!(parse_function(&f, "1 +").is_err());
        let w = gallery::wiener_family(&gallery::dyadic_pool(2), 1).unwrap();
        let e = parse_function(&w, "x[{0.5}:0] * x[{0.25}:0]").unwrap();
        assert_eq!(e.support(), &Section::single(Index::times(&[0.25, 0.5])));
    }
}
