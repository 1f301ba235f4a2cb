//! Multivariate polynomials with exact rational coefficients, plus the
//! calculus operators the jump machinery needs: grad, div, the 2D/3D curls,
//! the strain tensor, and affine substitution.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::rational::{format_q, qi, to_f64, Q};

/// Exponent multi-index; length equals the number of variables.
pub type Mono = Vec<u32>;

/// Polynomial in `nvars` variables, stored as exponent → coefficient with
/// no zero coefficients kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Q) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, qi(1))
    }

    /// The variable `x_axis`.
    pub fn var(nvars: usize, axis: usize) -> Self {
        assert!(axis < nvars, "axis out of range");
        let mut mono = vec![0; nvars];
        mono[axis] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(mono, qi(1));
        p
    }

    pub fn monomial(nvars: usize, exponents: Mono, coeff: Q) -> Self {
        assert_eq!(exponents.len(), nvars);
        let mut p = Self::zero(nvars);
        p.add_term(exponents, coeff);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &[u32]) -> Q {
        self.terms.get(mono).cloned().unwrap_or_else(Q::zero)
    }

    /// The constant a polynomial of degree 0 represents.
    pub fn constant_value(&self) -> Option<Q> {
        if self.is_zero() {
            return Some(Q::zero());
        }
        if self.degree() == 0 {
            return Some(self.coeff(&vec![0; self.nvars]));
        }
        None
    }

    pub fn add_term(&mut self, mono: Mono, c: Q) {
        assert_eq!(mono.len(), self.nvars, "monomial arity mismatch");
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn derivative(&self, axis: usize) -> Poly {
        assert!(axis < self.nvars, "axis out of range");
        let mut out = Poly::zero(self.nvars);
        for (mono, c) in &self.terms {
            let e = mono[axis];
            if e == 0 {
                continue;
            }
            let mut m = mono.clone();
            m[axis] = e - 1;
            out.add_term(m, c * qi(e as i64));
        }
        out
    }

    /// Substitutes `x_i := images[i]`; the images fix the target variable
    /// count and must all share it. Exact composition.
    pub fn substitute(&self, images: &[Poly]) -> Poly {
        assert_eq!(images.len(), self.nvars, "one image per variable required");
        let out_vars = images.first().map_or(0, Poly::nvars);
        assert!(images.iter().all(|p| p.nvars == out_vars));
        let mut out = Poly::zero(out_vars);
        for (mono, c) in &self.terms {
            let mut term = Poly::constant(out_vars, c.clone());
            for (axis, &e) in mono.iter().enumerate() {
                for _ in 0..e {
                    term = &term * &images[axis];
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Evaluates at a rational point.
    pub fn eval(&self, point: &[Q]) -> Q {
        assert_eq!(point.len(), self.nvars, "point arity mismatch");
        let mut acc = Q::zero();
        for (mono, c) in &self.terms {
            let mut term = c.clone();
            for (axis, &e) in mono.iter().enumerate() {
                for _ in 0..e {
                    term *= &point[axis];
                }
            }
            acc += term;
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(mono, c)| {
                mono.iter()
                    .enumerate()
                    .map(|(axis, &e)| point[axis].powi(e as i32))
                    .product::<f64>()
                    * to_f64(c)
            })
            .sum()
    }

    /// Stable text form: graded-lexicographic term order, rationals as `p/q`.
    pub fn to_string_with(&self, vars: &[&str]) -> String {
        assert_eq!(vars.len(), self.nvars);
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut monos: Vec<&Mono> = self.terms.keys().collect();
        monos.sort_by(|a, b| {
            let ka = (a.iter().sum::<u32>(), (*a).clone());
            let kb = (b.iter().sum::<u32>(), (*b).clone());
            kb.cmp(&ka)
        });
        let mut out = String::new();
        for (i, mono) in monos.iter().enumerate() {
            let c = &self.terms[*mono];
            if i > 0 {
                out.push_str(if c >= &Q::zero() { " + " } else { " - " });
            } else if c < &Q::zero() {
                out.push('-');
            }
            let abs = if c < &Q::zero() { -c.clone() } else { c.clone() };
            let is_const = mono.iter().all(|&e| e == 0);
            let mut parts = Vec::new();
            if abs != qi(1) || is_const {
                parts.push(format_q(&abs));
            }
            for (axis, &e) in mono.iter().enumerate() {
                if e == 1 {
                    parts.push(vars[axis].to_string());
                } else if e > 1 {
                    parts.push(format!("{}^{}", vars[axis], e));
                }
            }
            out.push_str(&parts.join("*"));
        }
        out
    }

    fn default_vars(nvars: usize) -> Vec<&'static str> {
        match nvars {
            1 => vec!["s"],
            2 => vec!["x", "y"],
            3 => vec!["x", "y", "z"],
            _ => vec!["x1", "x2", "x3", "x4", "x5", "x6"][..nvars].to_vec(),
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_with(&Poly::default_vars(self.nvars)))
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl std::ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(&qi(-1))
    }
}

impl std::ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m: Mono = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

/// Vector-valued polynomial. The component count and the variable count are
/// independent: a field on a face chart keeps its ambient components while
/// depending on the chart variables only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VecPoly {
    pub components: Vec<Poly>,
}

impl VecPoly {
    pub fn new(components: Vec<Poly>) -> Self {
        let nvars = components.first().map_or(0, Poly::nvars);
        assert!(
            components.iter().all(|p| p.nvars() == nvars),
            "components must share the variable count"
        );
        Self { components }
    }

    pub fn zero(ncomp: usize, nvars: usize) -> Self {
        Self::new(vec![Poly::zero(nvars); ncomp])
    }

    /// Constant vector field.
    pub fn constant(nvars: usize, values: &[Q]) -> Self {
        Self::new(
            values
                .iter()
                .map(|c| Poly::constant(nvars, c.clone()))
                .collect(),
        )
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    pub fn nvars(&self) -> usize {
        self.components.first().map_or(0, Poly::nvars)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Q) -> VecPoly {
        VecPoly::new(self.components.iter().map(|p| p.scale(c)).collect())
    }

    pub fn add(&self, rhs: &VecPoly) -> VecPoly {
        assert_eq!(self.ncomp(), rhs.ncomp());
        VecPoly::new(
            self.components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, rhs: &VecPoly) -> VecPoly {
        self.add(&rhs.scale(&qi(-1)))
    }

    /// Componentwise product with a scalar polynomial.
    pub fn mul_scalar(&self, s: &Poly) -> VecPoly {
        VecPoly::new(self.components.iter().map(|p| p * s).collect())
    }

    /// Pointwise dot product with a constant rational vector.
    pub fn dot_const(&self, v: &[Q]) -> Poly {
        assert_eq!(v.len(), self.ncomp(), "length mismatch");
        let mut out = Poly::zero(self.nvars());
        for (p, c) in self.components.iter().zip(v) {
            out = &out + &p.scale(c);
        }
        out
    }

    /// Pointwise dot product with another field over the same variables.
    pub fn dot(&self, rhs: &VecPoly) -> Poly {
        assert_eq!(self.ncomp(), rhs.ncomp(), "component mismatch");
        let mut out = Poly::zero(self.nvars());
        for (a, b) in self.components.iter().zip(&rhs.components) {
            out = &out + &(a * b);
        }
        out
    }

    /// Pointwise cross product with a constant 3-vector: `self × n`.
    pub fn cross_const(&self, n: &[Q]) -> VecPoly {
        assert_eq!(self.ncomp(), 3, "cross product needs 3 components");
        assert_eq!(n.len(), 3);
        let [u, v, w] = [&self.components[0], &self.components[1], &self.components[2]];
        VecPoly::new(vec![
            &v.scale(&n[2]) - &w.scale(&n[1]),
            &w.scale(&n[0]) - &u.scale(&n[2]),
            &u.scale(&n[1]) - &v.scale(&n[0]),
        ])
    }

    pub fn substitute(&self, images: &[Poly]) -> VecPoly {
        VecPoly::new(
            self.components
                .iter()
                .map(|p| p.substitute(images))
                .collect(),
        )
    }

    pub fn eval(&self, point: &[Q]) -> Vec<Q> {
        self.components.iter().map(|p| p.eval(point)).collect()
    }

    pub fn to_string_with(&self, vars: &[&str]) -> String {
        let inner: Vec<String> = self
            .components
            .iter()
            .map(|p| p.to_string_with(vars))
            .collect();
        format!("({})", inner.join(", "))
    }
}

impl fmt::Display for VecPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}",
            self.to_string_with(&Poly::default_vars(self.nvars()))
        )
    }
}

/// Gradient as a vector field in the same variables.
pub fn grad(p: &Poly) -> VecPoly {
    VecPoly::new((0..p.nvars()).map(|a| p.derivative(a)).collect())
}

/// Divergence of a `d`-component field in `d` variables.
pub fn div(v: &VecPoly) -> Poly {
    assert_eq!(v.ncomp(), v.nvars(), "divergence needs a square field");
    let mut out = Poly::zero(v.nvars());
    for (axis, p) in v.components.iter().enumerate() {
        out = &out + &p.derivative(axis);
    }
    out
}

/// 2D curl of a scalar: `(-∂q/∂y, ∂q/∂x)`.
pub fn curl2_scalar(q: &Poly) -> VecPoly {
    assert_eq!(q.nvars(), 2, "curl2_scalar needs 2 variables");
    VecPoly::new(vec![q.derivative(1).scale(&qi(-1)), q.derivative(0)])
}

/// 2D rotation of a vector: `∂v₂/∂x − ∂v₁/∂y`.
pub fn curl2_vector(v: &VecPoly) -> Poly {
    assert_eq!(v.nvars(), 2, "curl2_vector needs 2 variables");
    assert_eq!(v.ncomp(), 2, "curl2_vector needs 2 components");
    &v.components[1].derivative(0) - &v.components[0].derivative(1)
}

/// 3D curl: `(∂₂q₃ − ∂₃q₂, ∂₃q₁ − ∂₁q₃, ∂₁q₂ − ∂₂q₁)`.
pub fn curl3(v: &VecPoly) -> VecPoly {
    assert_eq!(v.nvars(), 3, "curl3 needs 3 variables");
    assert_eq!(v.ncomp(), 3, "curl3 needs 3 components");
    let [q1, q2, q3] = [&v.components[0], &v.components[1], &v.components[2]];
    VecPoly::new(vec![
        &q3.derivative(1) - &q2.derivative(2),
        &q1.derivative(2) - &q3.derivative(0),
        &q2.derivative(0) - &q1.derivative(1),
    ])
}

/// Strain tensor `D_ij(u) = (∂u_i/∂x_j + ∂u_j/∂x_i)/2` as a symmetric
/// matrix of polynomials.
pub fn strain(v: &VecPoly) -> Vec<Vec<Poly>> {
    let d = v.nvars();
    assert_eq!(v.ncomp(), d, "strain needs a square field");
    let half = crate::rational::q(1, 2);
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    (&v.components[i].derivative(j) + &v.components[j].derivative(i)).scale(&half)
                })
                .collect()
        })
        .collect()
}

pub fn strain_is_zero(v: &VecPoly) -> bool {
    strain(v).iter().flatten().all(Poly::is_zero)
}
