//! Structure of the unit group R* as a product of cyclic groups, with
//! discrete logarithms.
//!
//! Two routes: an exhaustive one presenting R* on all units with the
//! relations u + v - uv and reducing by Smith normal form, and a split one
//! using R* = S* x (1+I)* with (1+I)* identified with (I, +) through the
//! truncated logarithm. The split route is the one used for relative
//! computations; the exhaustive route doubles as its cross-check.

use super::MilnorError;
use crate::abgroup::{smith_normal_form, IncrementalLattice};
use crate::fring::{FiniteRing, RingElement, SplitExtension};
use num_bigint::BigInt;
use std::collections::HashMap;
use std::sync::Arc;

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 150;

enum Backend {
    Exhaustive {
        table: HashMap<RingElement, Vec<u64>>,
    },
    Split {
        ext: Arc<SplitExtension>,
        base: Arc<UnitGroupStructure>,
    },
}

pub struct UnitGroupStructure {
    pub ring: Arc<FiniteRing>,
    /// Cyclic factor orders; the first `s_block` factors span the image of
    /// S* under the section, the rest span (1+I)*.
    pub orders: Vec<u64>,
    pub generators: Vec<RingElement>,
    pub s_block: usize,
    backend: Backend,
}

impl UnitGroupStructure {
    pub fn num_factors(&self) -> usize {
        self.orders.len()
    }

    pub fn unit_count(&self) -> u64 {
        self.orders.iter().product()
    }

    /// Exponent vector of a unit over the cyclic generators.
    pub fn dlog(&self, u: &RingElement) -> Result<Vec<u64>, MilnorError> {
        match &self.backend {
            Backend::Exhaustive { table } => table
                .get(u)
                .cloned()
                .ok_or_else(|| MilnorError::NotAUnit(self.ring.format_element(u))),
            Backend::Split { ext, base } => {
                if !self.ring.is_unit(u) {
                    return Err(MilnorError::NotAUnit(self.ring.format_element(u)));
                }
                let s = ext.project(u);
                let mut coords = base.dlog(&s)?;
                let lifted = ext.section(&s);
                let inv = self
                    .ring
                    .invert(&lifted)
                    .expect("projection of a unit is a unit");
                let w = self.ring.mul(u, &inv);
                let i = ext.log_trunc(&w).map_err(MilnorError::Ring)?;
                for &mono in &ext.ideal_monomials {
                    coords.push(i.0[mono]);
                }
                Ok(coords)
            }
        }
    }

    /// Invariant factors of R*, merged into a divisibility chain.
    pub fn invariant_factors(&self) -> Vec<u64> {
        invariant_chain(&self.orders)
    }

    /// Every unit is the product of the generators raised to its dlog.
    pub fn check_reconstruction(&self, u: &RingElement) -> bool {
        let Ok(coords) = self.dlog(u) else {
            return false;
        };
        let mut acc = self.ring.one();
        for (g, &e) in self.generators.iter().zip(coords.iter()) {
            acc = self.ring.mul(&acc, &self.ring.pow(g, e));
        }
        acc == *u
    }
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Merges arbitrary cyclic orders into the invariant-factor chain.
pub fn invariant_chain(orders: &[u64]) -> Vec<u64> {
    let mut by_prime: HashMap<u64, Vec<u32>> = HashMap::new();
    for &o in orders {
        for (p, e) in factorize(o) {
            by_prime.entry(p).or_default().push(e);
        }
    }
    let depth = by_prime.values().map(|v| v.len()).max().unwrap_or(0);
    let mut chain = vec![1u64; depth];
    for (p, mut exps) in by_prime {
        exps.sort_unstable_by(|a, b| b.cmp(a));
        for (k, e) in exps.into_iter().enumerate() {
            chain[k] *= p.pow(e);
        }
    }
    chain.retain(|&d| d > 1);
    chain.reverse();
    chain
}

/// Presents R* on all units and reduces. The discrete log of a unit is its
/// row of the Smith basis-change matrix.
pub fn unit_structure_exhaustive(
    ring: &Arc<FiniteRing>,
    cap: usize,
) -> Result<Arc<UnitGroupStructure>, MilnorError> {
    let units: Vec<RingElement> = ring.units_lex().to_vec();
    let n = units.len();
    if n > cap {
        return Err(MilnorError::TooLarge(format!(
            "{n} units exceed the exhaustive cap {cap}"
        )));
    }
    let pos: HashMap<&RingElement, usize> = units.iter().enumerate().map(|(i, u)| (u, i)).collect();
    let mut lat = IncrementalLattice::new(n);
    let mut row = vec![0i128; n];
    for i in 0..n {
        for j in 0..=i {
            let prod = ring.mul(&units[i], &units[j]);
            let k = pos[&prod];
            for x in row.iter_mut() {
                *x = 0;
            }
            row[i] += 1;
            row[j] += 1;
            row[k] -= 1;
            lat.insert(&row).map_err(|_| {
                MilnorError::TooLarge("unit relation lattice overflowed".into())
            })?;
        }
    }
    let relations = lat.to_matrix();
    let smith = smith_normal_form(&relations);
    // The group Z^n / relations is R* itself (finite), so the diagonal has
    // full rank.
    assert_eq!(smith.rank, smith.diag.len().min(n));
    let mut kept: Vec<usize> = Vec::new();
    let mut orders: Vec<u64> = Vec::new();
    for (i, d) in smith.diag.iter().enumerate() {
        let d = u64::try_from(d.clone()).expect("unit group order fits u64");
        assert!(d != 0, "unit group presentation must be torsion");
        if d > 1 {
            kept.push(i);
            orders.push(d);
        }
    }
    let total: u64 = orders.iter().product();
    assert_eq!(total, n as u64, "cyclic decomposition misses units");
    let group_order = n as u64;
    let generators: Vec<RingElement> = kept
        .iter()
        .map(|&i| {
            let mut acc = ring.one();
            for (u, unit) in units.iter().enumerate() {
                let e = smith.v_inv.at(i, u);
                let e = e.mod_floor_u64(group_order);
                if e != 0 {
                    acc = ring.mul(&acc, &ring.pow(unit, e));
                }
            }
            acc
        })
        .collect();
    let mut table = HashMap::new();
    for (u, unit) in units.iter().enumerate() {
        let coords: Vec<u64> = kept
            .iter()
            .zip(orders.iter())
            .map(|(&i, &o)| smith.v.at(u, i).mod_floor_u64(o))
            .collect();
        table.insert(unit.clone(), coords);
    }
    let s = UnitGroupStructure {
        ring: ring.clone(),
        s_block: orders.len(),
        orders,
        generators,
        backend: Backend::Exhaustive { table },
    };
    Ok(Arc::new(s))
}

trait ModFloorU64 {
    fn mod_floor_u64(&self, m: u64) -> u64;
}

impl ModFloorU64 for BigInt {
    fn mod_floor_u64(&self, m: u64) -> u64 {
        use num_integer::Integer;
        u64::try_from(self.mod_floor(&BigInt::from(m))).expect("residue fits")
    }
}

/// R* = section(S*) x (1+I)* with (1+I)* = (I, +) via the truncated
/// logarithm; needs 1..N-1 invertible (automatic for N = 2).
pub fn unit_structure_split(
    ext: &Arc<SplitExtension>,
    base: Arc<UnitGroupStructure>,
) -> Result<Arc<UnitGroupStructure>, MilnorError> {
    let ring = ext.ring.clone();
    // Probe the truncated exponential once so invertibility failures
    // surface here rather than on first dlog.
    let probe = ext
        .ideal_monomials
        .first()
        .map(|&i| ring.basis_element(i))
        .unwrap_or_else(|| ring.zero());
    ext.exp_trunc(&probe).map_err(MilnorError::Ring)?;

    let mut orders = base.orders.clone();
    let mut generators: Vec<RingElement> = base
        .generators
        .iter()
        .map(|g| ext.section(g))
        .collect();
    for &mono in &ext.ideal_monomials {
        orders.push(ring.characteristic);
        generators.push(
            ext.exp_trunc(&ring.basis_element(mono))
                .map_err(MilnorError::Ring)?,
        );
    }
    let s = UnitGroupStructure {
        ring,
        s_block: base.num_factors(),
        orders,
        generators,
        backend: Backend::Split {
            ext: ext.clone(),
            base,
        },
    };
    Ok(Arc::new(s))
}

/// Chooses a route automatically: exhaustive below the cap, otherwise a
/// split along the nilpotent variables.
pub fn unit_structure_auto(ring: &Arc<FiniteRing>) -> Result<Arc<UnitGroupStructure>, MilnorError> {
    if ring.units_lex().len() <= DEFAULT_EXHAUSTIVE_CAP {
        return unit_structure_exhaustive(ring, DEFAULT_EXHAUSTIVE_CAP);
    }
    // Split along the nilpotent variables.
    let nvars = ring.spec.vars.len();
    let mut gens = Vec::new();
    for v in 0..nvars {
        let mono = crate::fring::Monomial::var(nvars, v);
        if let Some(i) = ring.monomial_index(&mono) {
            let e = ring.basis_element(i);
            let mut pow = e.clone();
            let mut nilpotent = false;
            for _ in 0..ring.basis_size() + 1 {
                pow = ring.mul(&pow, &e);
                if ring.is_zero(&pow) {
                    nilpotent = true;
                    break;
                }
            }
            if nilpotent {
                gens.push(e);
            }
        }
    }
    if gens.is_empty() {
        return Err(MilnorError::TooLarge(
            "unit group too large and no nilpotent split available".into(),
        ));
    }
    let ext = crate::fring::split_extension(ring.clone(), gens).map_err(MilnorError::Ring)?;
    let base = unit_structure_auto(&ext.subring)?;
    unit_structure_split(&ext, base)
}

/// Element-order census of R*: how many units have each exact order.
/// Independent of the structure computation; used for cross-checks.
pub fn unit_order_census(ring: &FiniteRing) -> HashMap<u64, u64> {
    let mut census = HashMap::new();
    for u in ring.units_lex() {
        let mut order = 1u64;
        let mut acc = u.clone();
        while !ring.is_one(&acc) {
            acc = ring.mul(&acc, u);
            order += 1;
        }
        *census.entry(order).or_insert(0) += 1;
    }
    census
}

/// The census predicted by a cyclic decomposition: the number of elements
/// of order dividing m in prod Z/o_i is prod gcd(o_i, m).
pub fn census_from_orders(orders: &[u64]) -> HashMap<u64, u64> {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let exponent = orders.iter().fold(1u64, |acc, &o| acc / gcd(acc, o) * o);
    let divisors: Vec<u64> = (1..=exponent).filter(|d| exponent % d == 0).collect();
    let upto = |m: u64| -> u64 { orders.iter().map(|&o| gcd(o, m)).product() };
    let mut census = HashMap::new();
    for &d in &divisors {
        // Möbius-free route: exact-order count = |{x : x^d = 1}| minus the
        // counts of all proper divisors, accumulated in increasing order.
        let mut count = upto(d);
        for &e in &divisors {
            if e < d && d % e == 0 {
                count -= census.get(&e).copied().unwrap_or(0);
            }
        }
        if count > 0 {
            census.insert(d, count);
        }
    }
    census
}

