//! Exact arithmetic in finite commutative rings presented by monomial
//! rewrite rules, plus split nilpotent extensions and truncated exp/log.
//!
//! A ring is `Z/m[x_1..x_v]` modulo rewrite rules `monomial -> polynomial`.
//! The additive basis is the set of irreducible monomials, which must close
//! up into a finite set under multiplication; products are tabulated once.

pub mod parse;
pub mod stability;

use crate::abgroup::IncrementalLattice;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FringError {
    #[error("rewrite system does not terminate within the basis cap ({cap} monomials)")]
    NonTerminatingRewrite { cap: usize },
    #[error("inconsistent ring spec: {0}")]
    InconsistentSpec(String),
    #[error("ring too large: {0}")]
    TooLarge(String),
    #[error("ideal is not nilpotent")]
    NotNilpotent,
    #[error("extension does not split monomially: {0}")]
    NotSplit(String),
    #[error("no decomposition into a sum of two units")]
    NoDecomposition,
    #[error("integer {k} is not invertible in the ring")]
    NonInvertibleDenominator { k: u64 },
    #[error("element outside the domain: {0}")]
    DomainError(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

/// Exponent vector over the spec's variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = vec![0; nvars];
        m[i] = 1;
        Monomial(m)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn quotient(&self, divisor: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(divisor.0.iter())
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    fn sort_key(&self) -> (u32, Vec<u32>) {
        (self.degree(), self.0.clone())
    }
}

#[derive(Clone)]
pub struct Rewrite {
    pub lhs: Monomial,
    pub rhs: Vec<(i64, Monomial)>,
}

#[derive(Clone)]
pub struct RingSpec {
    pub name: String,
    pub characteristic: u64,
    pub vars: Vec<String>,
    pub rewrites: Vec<Rewrite>,
}

impl RingSpec {
    pub fn validate(&self) -> Result<(), FringError> {
        if self.characteristic < 2 {
            return Err(FringError::InconsistentSpec(
                "characteristic must be at least 2".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for v in &self.vars {
            if v.is_empty() || !v.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(FringError::InconsistentSpec(format!(
                    "variable name '{v}' must be alphabetic"
                )));
            }
            if !seen.insert(v.clone()) {
                return Err(FringError::InconsistentSpec(format!(
                    "duplicate variable '{v}'"
                )));
            }
        }
        for rw in &self.rewrites {
            if rw.lhs.degree() < 2 {
                return Err(FringError::InconsistentSpec(
                    "rewrite left-hand side must have degree at least 2".into(),
                ));
            }
            for (_, m) in &rw.rhs {
                if m.degree() >= rw.lhs.degree() {
                    return Err(FringError::InconsistentSpec(
                        "rewrite right-hand side must have strictly smaller degree \
                         than the left-hand side"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Coefficient vector over the ring basis, canonical residues in `[0, m)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingElement(pub Vec<u64>);

pub struct FiniteRing {
    pub spec: RingSpec,
    pub characteristic: u64,
    /// Irreducible monomials sorted by (degree, exponents); basis[0] is 1.
    pub basis: Vec<Monomial>,
    basis_index: HashMap<Monomial, usize>,
    /// Flattened basis x basis products.
    mul_table: Vec<RingElement>,
    /// Unit -> inverse.
    units: HashMap<RingElement, RingElement>,
    /// Units in lexicographic coefficient order.
    unit_list: Vec<RingElement>,
}

const BASIS_CAP: usize = 128;
const ORDER_CAP: u64 = 4_000_000;

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// inverse of a mod m when gcd(a, m) = 1
fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u64)
}

struct Reducer<'a> {
    spec: &'a RingSpec,
    cache: HashMap<Monomial, HashMap<Monomial, u64>>,
}

impl<'a> Reducer<'a> {
    fn reduce(&mut self, mono: &Monomial) -> HashMap<Monomial, u64> {
        if let Some(hit) = self.cache.get(mono) {
            return hit.clone();
        }
        let m = self.spec.characteristic;
        let rule = self
            .spec
            .rewrites
            .iter()
            .find(|rw| rw.lhs.divides(mono))
            .cloned();
        let result = match rule {
            None => {
                let mut out = HashMap::new();
                out.insert(mono.clone(), 1u64);
                out
            }
            Some(rw) => {
                let rest = mono.quotient(&rw.lhs);
                let mut out: HashMap<Monomial, u64> = HashMap::new();
                for (coef, rm) in &rw.rhs {
                    let c = coef.rem_euclid(m as i64) as u64;
                    if c == 0 {
                        continue;
                    }
                    let sub = self.reduce(&rm.mul(&rest));
                    for (b, k) in sub {
                        let slot = out.entry(b).or_insert(0);
                        *slot = (*slot + c * k) % m;
                    }
                }
                out.retain(|_, v| *v != 0);
                out
            }
        };
        self.cache.insert(mono.clone(), result.clone());
        result
    }
}

pub fn build_ring(spec: RingSpec) -> Result<Arc<FiniteRing>, FringError> {
    spec.validate()?;
    let m = spec.characteristic;
    let nvars = spec.vars.len();
    let mut reducer = Reducer {
        spec: &spec,
        cache: HashMap::new(),
    };

    // Closure of {1, vars} under reduced multiplication.
    let mut basis_set: std::collections::BTreeSet<Monomial> = std::collections::BTreeSet::new();
    basis_set.insert(Monomial::one(nvars));
    for i in 0..nvars {
        let v = Monomial::var(nvars, i);
        if reducer.reduce(&v).contains_key(&v) {
            basis_set.insert(v);
        }
    }
    loop {
        let snapshot: Vec<Monomial> = basis_set.iter().cloned().collect();
        let mut grew = false;
        for a in &snapshot {
            for b in &snapshot {
                let prod = reducer.reduce(&a.mul(b));
                for mono in prod.keys() {
                    if basis_set.insert(mono.clone()) {
                        grew = true;
                    }
                }
            }
            if basis_set.len() > BASIS_CAP {
                return Err(FringError::NonTerminatingRewrite { cap: BASIS_CAP });
            }
        }
        if !grew {
            break;
        }
    }
    let mut basis: Vec<Monomial> = basis_set.into_iter().collect();
    basis.sort_by_key(|m| m.sort_key());
    let nb = basis.len();
    if basis[0].degree() != 0 {
        return Err(FringError::InconsistentSpec("basis does not contain 1".into()));
    }
    let order = (m as f64).powi(nb as i32);
    if order > ORDER_CAP as f64 {
        return Err(FringError::TooLarge(format!(
            "ring order {}^{} exceeds the cap {}",
            m, nb, ORDER_CAP
        )));
    }
    let basis_index: HashMap<Monomial, usize> =
        basis.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();

    let to_elem = |poly: &HashMap<Monomial, u64>, basis_index: &HashMap<Monomial, usize>| {
        let mut v = vec![0u64; nb];
        for (mono, c) in poly {
            let idx = *basis_index.get(mono).expect("reduced monomial outside basis");
            v[idx] = *c % m;
        }
        RingElement(v)
    };

    let mut mul_table = Vec::with_capacity(nb * nb);
    for a in &basis {
        for b in &basis {
            let prod = reducer.reduce(&a.mul(b));
            mul_table.push(to_elem(&prod, &basis_index));
        }
    }

    let mut ring = FiniteRing {
        spec,
        characteristic: m,
        basis,
        basis_index,
        mul_table,
        units: HashMap::new(),
        unit_list: Vec::new(),
    };

    // Identity row must be the identity.
    for j in 0..nb {
        let e = ring.basis_element(j);
        if ring.mul_table[j] != e {
            return Err(FringError::InconsistentSpec(
                "1 * r != r for a basis monomial".into(),
            ));
        }
    }
    // Associativity on basis triples (or a deterministic sample when the
    // basis is large enough that the full scan is wasteful).
    let full = nb <= 24;
    let triples: Vec<(usize, usize, usize)> = if full {
        (0..nb)
            .flat_map(|a| (0..nb).flat_map(move |b| (0..nb).map(move |c| (a, b, c))))
            .collect()
    } else {
        let mut t = Vec::new();
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..100_000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (state >> 11) as usize % nb;
            let b = (state >> 31) as usize % nb;
            let c = (state >> 47) as usize % nb;
            t.push((a, b, c));
        }
        t
    };
    for (a, b, c) in triples {
        let ab = ring.mul_table[a * nb + b].clone();
        let bc = ring.mul_table[b * nb + c].clone();
        let left = ring.mul_basis_right(&ab, c);
        let right = ring.mul_basis_right(&bc, a);
        if left != right {
            return Err(FringError::InconsistentSpec(format!(
                "associativity fails on basis triple ({a}, {b}, {c})"
            )));
        }
    }
    // Commutativity of the table.
    for a in 0..nb {
        for b in 0..a {
            if ring.mul_table[a * nb + b] != ring.mul_table[b * nb + a] {
                return Err(FringError::InconsistentSpec(format!(
                    "commutativity fails on basis pair ({a}, {b})"
                )));
            }
        }
    }

    ring.enumerate_units();
    Ok(Arc::new(ring))
}

impl FiniteRing {
    pub fn basis_size(&self) -> usize {
        self.basis.len()
    }

    pub fn order(&self) -> u64 {
        self.characteristic.pow(self.basis.len() as u32)
    }

    pub fn zero(&self) -> RingElement {
        RingElement(vec![0; self.basis.len()])
    }

    pub fn one(&self) -> RingElement {
        self.basis_element(0)
    }

    pub fn basis_element(&self, i: usize) -> RingElement {
        let mut v = vec![0; self.basis.len()];
        v[i] = 1;
        RingElement(v)
    }

    pub fn from_integer(&self, k: i64) -> RingElement {
        let mut v = vec![0; self.basis.len()];
        v[0] = k.rem_euclid(self.characteristic as i64) as u64;
        RingElement(v)
    }

    pub fn monomial_index(&self, m: &Monomial) -> Option<usize> {
        self.basis_index.get(m).copied()
    }

    pub fn add(&self, a: &RingElement, b: &RingElement) -> RingElement {
        RingElement(
            a.0.iter()
                .zip(b.0.iter())
                .map(|(x, y)| (x + y) % self.characteristic)
                .collect(),
        )
    }

    pub fn sub(&self, a: &RingElement, b: &RingElement) -> RingElement {
        RingElement(
            a.0.iter()
                .zip(b.0.iter())
                .map(|(x, y)| (x + self.characteristic - y) % self.characteristic)
                .collect(),
        )
    }

    pub fn neg(&self, a: &RingElement) -> RingElement {
        self.sub(&self.zero(), a)
    }

    pub fn scalar_mul(&self, k: u64, a: &RingElement) -> RingElement {
        let k = k % self.characteristic;
        RingElement(
            a.0.iter()
                .map(|x| (x * k) % self.characteristic)
                .collect(),
        )
    }

    /// element * basis monomial c
    fn mul_basis_right(&self, a: &RingElement, c: usize) -> RingElement {
        let nb = self.basis.len();
        let mut out = vec![0u64; nb];
        for (i, &ai) in a.0.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            let row = &self.mul_table[i * nb + c];
            for (k, &rk) in row.0.iter().enumerate() {
                if rk != 0 {
                    out[k] = (out[k] + ai * rk) % self.characteristic;
                }
            }
        }
        RingElement(out)
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let nb = self.basis.len();
        let mut out = vec![0u64; nb];
        for (i, &ai) in a.0.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.0.iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let c = (ai * bj) % self.characteristic;
                let row = &self.mul_table[i * nb + j];
                for (k, &rk) in row.0.iter().enumerate() {
                    if rk != 0 {
                        out[k] = (out[k] + c * rk) % self.characteristic;
                    }
                }
            }
        }
        RingElement(out)
    }

    pub fn pow(&self, a: &RingElement, mut e: u64) -> RingElement {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn is_one(&self, a: &RingElement) -> bool {
        *a == self.one()
    }

    pub fn is_zero(&self, a: &RingElement) -> bool {
        a.0.iter().all(|&x| x == 0)
    }

    /// All elements in lexicographic coefficient order.
    pub fn elements(&self) -> impl Iterator<Item = RingElement> + '_ {
        let nb = self.basis.len();
        let m = self.characteristic;
        let total = self.order();
        (0..total).map(move |mut idx| {
            let mut v = vec![0u64; nb];
            for slot in (0..nb).rev() {
                v[slot] = idx % m;
                idx /= m;
            }
            RingElement(v)
        })
    }

    pub fn is_unit(&self, a: &RingElement) -> bool {
        self.units.contains_key(a)
    }

    pub fn invert(&self, a: &RingElement) -> Option<RingElement> {
        self.units.get(a).cloned()
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn units_lex(&self) -> &[RingElement] {
        &self.unit_list
    }

    /// Matrix of multiplication by `a` in the basis, column j = a * e_j.
    fn mul_matrix(&self, a: &RingElement) -> Vec<Vec<u64>> {
        let nb = self.basis.len();
        (0..nb)
            .map(|j| self.mul_basis_right(a, j).0)
            .collect()
    }

    fn enumerate_units(&mut self) {
        let nb = self.basis.len();
        let m = self.characteristic;
        let prime = is_prime(m);
        let mut units = HashMap::new();
        let mut unit_list = Vec::new();
        for a in self.elements().collect::<Vec<_>>() {
            let inv = if prime {
                solve_unit_prime(&self.mul_matrix(&a), m, nb)
            } else {
                solve_unit_general(self, &a)
            };
            if let Some(inv) = inv {
                debug_assert!(self.is_one(&self.mul(&a, &RingElement(inv.clone()))));
                units.insert(a.clone(), RingElement(inv));
                unit_list.push(a);
            }
        }
        self.units = units;
        self.unit_list = unit_list;
    }

    pub fn format_element(&self, a: &RingElement) -> String {
        let mut parts = Vec::new();
        for (i, &c) in a.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mono = self.format_monomial(&self.basis[i]);
            let part = if mono.is_empty() {
                format!("{c}")
            } else if c == 1 {
                mono
            } else {
                format!("{c}*{mono}")
            };
            parts.push(part);
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }

    pub fn format_monomial(&self, m: &Monomial) -> String {
        let mut parts = Vec::new();
        for (i, &e) in m.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(self.spec.vars[i].clone()),
                _ => parts.push(format!("{}^{}", self.spec.vars[i], e)),
            }
        }
        parts.join("*")
    }
}

/// Solve rows(a) * x = e_0 mod prime p by Gaussian elimination. `mat` is
/// column-major: mat[j] = a * e_j.
fn solve_unit_prime(mat: &[Vec<u64>], p: u64, nb: usize) -> Option<Vec<u64>> {
    // Build augmented row-major system: rows indexed by basis coordinate,
    // unknowns x_j, target (1, 0, .., 0).
    let mut a = vec![vec![0u64; nb + 1]; nb];
    for (j, col) in mat.iter().enumerate() {
        for i in 0..nb {
            a[i][j] = col[i] % p;
        }
    }
    a[0][nb] = 1;
    let mut row = 0;
    let mut pivots = Vec::new();
    for col in 0..nb {
        let Some(r) = (row..nb).find(|&r| a[r][col] % p != 0) else {
            continue;
        };
        a.swap(row, r);
        let inv = inv_mod(a[row][col], p)?;
        for x in a[row].iter_mut() {
            *x = (*x * inv) % p;
        }
        for r2 in 0..nb {
            if r2 != row && a[r2][col] != 0 {
                let f = a[r2][col];
                for c2 in 0..=nb {
                    let sub = (f * a[row][c2]) % p;
                    a[r2][c2] = (a[r2][c2] + p - sub) % p;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
        if row == nb {
            break;
        }
    }
    // Consistency: any zero row with nonzero rhs means no solution.
    for r in row..nb {
        if a[r][nb] % p != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; nb];
    for &(r, c) in &pivots {
        x[c] = a[r][nb] % p;
    }
    Some(x)
}

/// General-characteristic inverse via exact integer lattices: x solves
/// a*x = 1 iff e_one lies in the column lattice of [mul_matrix | m*I].
fn solve_unit_general(ring: &FiniteRing, a: &RingElement) -> Option<Vec<u64>> {
    use crate::abgroup::{smith_normal_form, solve_in_lattice, IntMatrix};
    use num_bigint::BigInt;
    let nb = ring.basis.len();
    let m = ring.characteristic;
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for j in 0..nb {
        rows.push(
            ring.mul_basis_right(a, j)
                .0
                .iter()
                .map(|&x| BigInt::from(x))
                .collect(),
        );
    }
    for i in 0..nb {
        let mut r = vec![BigInt::from(0); nb];
        r[i] = BigInt::from(m);
        rows.push(r);
    }
    let mat = IntMatrix::from_rows(nb, rows);
    let smith = smith_normal_form(&mat);
    let mut target = vec![BigInt::from(0); nb];
    target[0] = BigInt::from(1);
    let x = solve_in_lattice(&smith, &target)?;
    let coeffs: Vec<u64> = x[..nb]
        .iter()
        .map(|c| {
            use num_integer::Integer;
            u64::try_from(c.mod_floor(&BigInt::from(m))).unwrap()
        })
        .collect();
    Some(coeffs)
}

pub fn sum_of_two_units(
    ring: &FiniteRing,
    r: &RingElement,
) -> Result<(RingElement, RingElement), FringError> {
    for u in ring.units_lex() {
        let v = ring.sub(r, u);
        if ring.is_unit(&v) {
            return Ok((u.clone(), v));
        }
    }
    Err(FringError::NoDecomposition)
}

/// Split nilpotent extension R = S (+) I where both I and S are spanned by
/// basis monomials.
pub struct SplitExtension {
    pub ring: Arc<FiniteRing>,
    pub subring: Arc<FiniteRing>,
    /// R-basis indices spanning the ideal.
    pub ideal_monomials: Vec<usize>,
    /// R-basis indices spanning the complement, in R-basis order.
    pub s_monomials: Vec<usize>,
    /// subring basis index -> R basis index
    sub_to_ring: Vec<usize>,
    pub nilpotency: u32,
    pub ideal_generators: Vec<RingElement>,
}

impl SplitExtension {
    pub fn in_ideal(&self, a: &RingElement) -> bool {
        let mut in_i = vec![false; self.ring.basis_size()];
        for &i in &self.ideal_monomials {
            in_i[i] = true;
        }
        a.0.iter().enumerate().all(|(i, &c)| c == 0 || in_i[i])
    }

    /// Image in the subring's coordinates.
    pub fn project(&self, a: &RingElement) -> RingElement {
        let mut v = vec![0u64; self.sub_to_ring.len()];
        for (si, &ri) in self.sub_to_ring.iter().enumerate() {
            v[si] = a.0[ri];
        }
        RingElement(v)
    }

    /// Inclusion of a subring element into R.
    pub fn section(&self, s: &RingElement) -> RingElement {
        let mut v = vec![0u64; self.ring.basis_size()];
        for (si, &ri) in self.sub_to_ring.iter().enumerate() {
            v[ri] = s.0[si];
        }
        RingElement(v)
    }

    /// The ideal component of `a` (so `a = section(project(a)) + ideal_part(a)`).
    pub fn ideal_part(&self, a: &RingElement) -> RingElement {
        let mut v = vec![0u64; self.ring.basis_size()];
        for &i in &self.ideal_monomials {
            v[i] = a.0[i];
        }
        RingElement(v)
    }

    pub fn ideal_order(&self) -> u64 {
        self.ring
            .characteristic
            .pow(self.ideal_monomials.len() as u32)
    }

    /// All ideal elements, lexicographic in ideal-monomial coordinates.
    pub fn ideal_elements(&self) -> Vec<RingElement> {
        let m = self.ring.characteristic;
        let k = self.ideal_monomials.len();
        let mut out = Vec::new();
        let total = m.pow(k as u32);
        for mut idx in 0..total {
            let mut v = vec![0u64; self.ring.basis_size()];
            for slot in (0..k).rev() {
                v[self.ideal_monomials[slot]] = idx % m;
                idx /= m;
            }
            out.push(RingElement(v));
        }
        out
    }

    pub fn is_one_plus_ideal(&self, u: &RingElement) -> bool {
        self.in_ideal(&self.ring.sub(u, &self.ring.one()))
    }

    fn check_integers_invertible(&self, upto: u64) -> Result<(), FringError> {
        for k in 1..=upto {
            if inv_mod(k % self.ring.characteristic, self.ring.characteristic).is_none() {
                return Err(FringError::NonInvertibleDenominator { k });
            }
        }
        Ok(())
    }

    /// Truncated logarithm of an element of (1+I)*.
    pub fn log_trunc(&self, u: &RingElement) -> Result<RingElement, FringError> {
        let n = self.nilpotency as u64;
        if n >= 2 {
            self.check_integers_invertible(n - 1)?;
        }
        let ring = &self.ring;
        let i = ring.sub(u, &ring.one());
        if !self.in_ideal(&i) {
            return Err(FringError::DomainError(
                "logarithm argument is not in 1 + I".into(),
            ));
        }
        let mut acc = ring.zero();
        let mut power = ring.one();
        for k in 1..n {
            power = ring.mul(&power, &i);
            if ring.is_zero(&power) {
                break;
            }
            let inv_k = inv_mod(k % ring.characteristic, ring.characteristic)
                .expect("checked invertible");
            let term = ring.scalar_mul(inv_k, &power);
            if k % 2 == 1 {
                acc = ring.add(&acc, &term);
            } else {
                acc = ring.sub(&acc, &term);
            }
        }
        Ok(acc)
    }

    /// Truncated exponential of an ideal element.
    pub fn exp_trunc(&self, i: &RingElement) -> Result<RingElement, FringError> {
        let n = self.nilpotency as u64;
        if n >= 2 {
            self.check_integers_invertible(n - 1)?;
        }
        let ring = &self.ring;
        if !self.in_ideal(i) {
            return Err(FringError::DomainError(
                "exponential argument is not in I".into(),
            ));
        }
        let mut acc = ring.one();
        let mut power = ring.one();
        let mut factorial_inv = 1u64;
        for k in 1..n {
            power = ring.mul(&power, i);
            if ring.is_zero(&power) {
                break;
            }
            let inv_k = inv_mod(k % ring.characteristic, ring.characteristic)
                .expect("checked invertible");
            factorial_inv = (factorial_inv * inv_k) % ring.characteristic;
            acc = ring.add(&acc, &ring.scalar_mul(factorial_inv, &power));
        }
        Ok(acc)
    }
}

pub fn split_extension(
    ring: Arc<FiniteRing>,
    ideal_gens: Vec<RingElement>,
) -> Result<Arc<SplitExtension>, FringError> {
    let nb = ring.basis_size();
    let m = ring.characteristic as i128;

    // Span of the ideal generated by the generators, as a mod-m row lattice.
    let mut span = IncrementalLattice::new(nb);
    let to_row = |e: &RingElement| -> Vec<i128> { e.0.iter().map(|&x| x as i128).collect() };
    for i in 0..nb {
        let mut r = vec![0i128; nb];
        r[i] = m;
        span.insert(&r).expect("small ring rows");
    }
    let mut gen_rows = Vec::new();
    for g in &ideal_gens {
        for b in 0..nb {
            let prod = ring.mul_basis_right(g, b);
            let row = to_row(&prod);
            gen_rows.push(row.clone());
            span.insert(&row).expect("small ring rows");
        }
    }

    // The ideal must be spanned by basis monomials.
    let mut ideal_monomials = Vec::new();
    for i in 0..nb {
        let mut e = vec![0i128; nb];
        e[i] = 1;
        if span.contains(&e).expect("small ring rows") {
            ideal_monomials.push(i);
        }
    }
    let mut mono_span = IncrementalLattice::new(nb);
    for i in 0..nb {
        let mut r = vec![0i128; nb];
        r[i] = m;
        mono_span.insert(&r).expect("small ring rows");
    }
    for &i in &ideal_monomials {
        let mut e = vec![0i128; nb];
        e[i] = 1;
        mono_span.insert(&e).expect("small ring rows");
    }
    for row in &gen_rows {
        if !mono_span.contains(row).expect("small ring rows") {
            return Err(FringError::NotSplit(
                "ideal is not spanned by basis monomials".into(),
            ));
        }
    }
    if ideal_monomials.contains(&0) {
        return Err(FringError::NotNilpotent);
    }

    let ideal_flags: Vec<bool> = (0..nb).map(|i| ideal_monomials.contains(&i)).collect();
    let s_monomials: Vec<usize> = (0..nb).filter(|&i| !ideal_flags[i]).collect();

    // The complement must be closed under multiplication.
    for &a in &s_monomials {
        for &b in &s_monomials {
            let prod = &ring.mul_table[a * nb + b];
            if prod.0.iter().enumerate().any(|(k, &c)| c != 0 && ideal_flags[k]) {
                return Err(FringError::NotSplit(format!(
                    "complement monomials {} * {} leave the complement",
                    ring.format_monomial(&ring.basis[a]),
                    ring.format_monomial(&ring.basis[b])
                )));
            }
        }
    }
    // Products of ideal monomials with anything must stay in the ideal.
    for &i in &ideal_monomials {
        for b in 0..nb {
            let prod = &ring.mul_table[i * nb + b];
            if prod.0.iter().enumerate().any(|(k, &c)| c != 0 && !ideal_flags[k]) {
                return Err(FringError::NotSplit("ideal monomials are not an ideal".into()));
            }
        }
    }

    // Nilpotency index: powers of the ideal span.
    let nilpotency;
    {
        let mut current: Vec<RingElement> = ideal_monomials
            .iter()
            .map(|&i| ring.basis_element(i))
            .collect();
        let mut n = 1u32;
        loop {
            if current.is_empty() {
                nilpotency = n;
                break;
            }
            if n as usize > nb + 1 {
                return Err(FringError::NotNilpotent);
            }
            let mut next = IncrementalLattice::new(nb);
            for i in 0..nb {
                let mut r = vec![0i128; nb];
                r[i] = m;
                next.insert(&r).expect("small ring rows");
            }
            let mut next_elems = Vec::new();
            for x in &current {
                for &i in &ideal_monomials {
                    let prod = ring.mul_basis_right(x, i);
                    if !ring.is_zero(&prod) && next.insert(&to_row(&prod)).expect("small rows") {
                        next_elems.push(prod);
                    }
                }
            }
            current = next_elems;
            n += 1;
        }
    }

    // Derive the subring presentation and cross-check it against the
    // restricted structure constants.
    let spec = &ring.spec;
    let var_is_ideal: Vec<bool> = (0..spec.vars.len())
        .map(|v| {
            let mono = Monomial::var(spec.vars.len(), v);
            match ring.monomial_index(&mono) {
                Some(i) => ideal_flags[i],
                None => false,
            }
        })
        .collect();
    let sub_vars: Vec<usize> = (0..spec.vars.len()).filter(|&v| !var_is_ideal[v]).collect();
    let restrict = |mono: &Monomial| -> Option<Monomial> {
        if (0..spec.vars.len()).any(|v| var_is_ideal[v] && mono.0[v] != 0) {
            return None;
        }
        Some(Monomial(sub_vars.iter().map(|&v| mono.0[v]).collect()))
    };
    let mut sub_rewrites = Vec::new();
    for rw in &spec.rewrites {
        let Some(lhs) = restrict(&rw.lhs) else { continue };
        let mut rhs = Vec::new();
        for (c, mono) in &rw.rhs {
            // Reduce the RHS monomial in R, keep the complement part.
            let mut reducer = Reducer {
                spec,
                cache: HashMap::new(),
            };
            for (red_mono, red_c) in reducer.reduce(mono) {
                let idx = ring.monomial_index(&red_mono).expect("reduced monomial");
                if ideal_flags[idx] {
                    continue;
                }
                let r = restrict(&red_mono).expect("complement monomial uses subring vars");
                rhs.push(((c.rem_euclid(m as i64) * red_c as i64) as i64, r));
            }
        }
        sub_rewrites.push(Rewrite { lhs, rhs });
    }
    let sub_spec = RingSpec {
        name: format!("{}-sub", spec.name),
        characteristic: ring.characteristic,
        vars: sub_vars.iter().map(|&v| spec.vars[v].clone()).collect(),
        rewrites: sub_rewrites,
    };
    let subring = build_ring(sub_spec)?;
    if subring.basis_size() != s_monomials.len() {
        return Err(FringError::NotSplit(
            "derived subring basis does not match the complement monomials".into(),
        ));
    }
    let mut sub_to_ring = Vec::with_capacity(s_monomials.len());
    for sb in subring.basis.iter() {
        // Lift the subring monomial back to R variables.
        let mut full = vec![0u32; spec.vars.len()];
        for (k, &v) in sub_vars.iter().enumerate() {
            full[v] = sb.0[k];
        }
        let ri = ring
            .monomial_index(&Monomial(full))
            .ok_or_else(|| FringError::NotSplit("subring monomial missing in R".into()))?;
        if ideal_flags[ri] {
            return Err(FringError::NotSplit("subring monomial lies in the ideal".into()));
        }
        sub_to_ring.push(ri);
    }

    let ext = SplitExtension {
        ring: ring.clone(),
        subring: subring.clone(),
        ideal_monomials,
        s_monomials,
        sub_to_ring,
        nilpotency,
        ideal_generators: ideal_gens,
    };

    // Structure constants of the subring must be the restriction of R's.
    for (si, &ri) in ext.sub_to_ring.iter().enumerate() {
        for (sj, &rj) in ext.sub_to_ring.iter().enumerate() {
            let in_r = &ring.mul_table[ri * nb + rj];
            let in_s = &subring.mul_table[si * subring.basis_size() + sj];
            if ext.project(in_r) != *in_s {
                return Err(FringError::NotSplit(
                    "subring structure constants disagree with R".into(),
                ));
            }
        }
    }

    Ok(Arc::new(ext))
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElement({:?})", self.0)
    }
}

#[cfg(test)]
mod tests;
