//! Milnor K-groups through the tensor-algebra presentation: Steinberg
//! symbols, relative K-groups of split extensions, the Dennis-Stein group
//! D2 with the explicit K2 <-> D2 maps, and the dlog homomorphism into the
//! Kähler differentials.

pub mod dennis_stein;
pub mod units;

use crate::abgroup::{AbGroupError, AbHom, FPAbGroup, IncrementalLattice, IntMatrix};
use crate::fring::{FringError, RingElement, SplitExtension};
use crate::kahler::{FormalDifferential, KahlerError, OmegaModule};
use num_bigint::BigInt;
use rand::Rng;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;
pub use units::{
    unit_structure_auto, unit_structure_exhaustive, unit_structure_split, UnitGroupStructure,
};

#[derive(Debug, Error)]
pub enum MilnorError {
    #[error("not a unit: {0}")]
    NotAUnit(String),
    #[error("symbol does not lie in the relative subgroup")]
    NotRelative,
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("could not rewrite a Dennis-Stein symbol into unit form: {0}")]
    RewriteFailed(String),
    #[error(transparent)]
    Ring(#[from] FringError),
    #[error(transparent)]
    Group(#[from] AbGroupError),
    #[error(transparent)]
    Kahler(#[from] KahlerError),
}

/// A formal product of Steinberg symbols with +-1 exponents.
#[derive(Clone, Debug)]
pub struct SymbolWord {
    pub factors: Vec<(Vec<RingElement>, i32)>,
}

impl SymbolWord {
    pub fn symbol(entries: Vec<RingElement>) -> Self {
        SymbolWord {
            factors: vec![(entries, 1)],
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Degree-n Milnor K-group of the unit structure's ring: the n-th tensor
/// power of the cyclic decomposition of R*, modulo Steinberg relations
/// placed in every adjacent pair of slots.
pub struct KMilnorGroup {
    pub units: Arc<UnitGroupStructure>,
    pub degree: usize,
    /// Kept cyclic-factor index tuples (componentwise gcd > 1).
    pub tuples: Vec<Vec<u8>>,
    tuple_index: HashMap<Vec<u8>, usize>,
    pub moduli: Vec<u64>,
    pub group: Arc<FPAbGroup>,
    pub steinberg_generator_count: usize,
}

/// Steinberg subgroup generators inside R* (x) R*: the reduced set of
/// coordinates of r (x) (1-r) over kept factor pairs, modulo the diagonal
/// relations. Entries are (i, j, coefficient).
pub fn steinberg_pair_generators(units: &UnitGroupStructure) -> Vec<Vec<(u8, u8, i64)>> {
    let ring = &units.ring;
    let m = units.num_factors();
    let mut pairs = Vec::new();
    let mut moduli = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let g = gcd(units.orders[i], units.orders[j]);
            if g > 1 {
                pairs.push((i, j));
                moduli.push(g as i64);
            }
        }
    }
    let mut diag = IncrementalLattice::new(pairs.len());
    let mut all = IncrementalLattice::new(pairs.len());
    for (k, &md) in moduli.iter().enumerate() {
        let mut row = vec![0i128; pairs.len()];
        row[k] = md as i128;
        diag.insert(&row).expect("small rows");
        all.insert(&row).expect("small rows");
    }
    let one = ring.one();
    for r in ring.units_lex() {
        let omr = ring.sub(&one, r);
        if !ring.is_unit(&omr) {
            continue;
        }
        let dr = units.dlog(r).expect("unit");
        let domr = units.dlog(&omr).expect("unit");
        let mut row = vec![0i128; pairs.len()];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let v = (dr[i] as i64 * domr[j] as i64).rem_euclid(moduli[k]);
            row[k] = v as i128;
        }
        all.insert(&row).expect("small rows");
    }
    let mut out = Vec::new();
    for row in all.rows() {
        if diag.contains(&row).expect("small rows") {
            continue;
        }
        let sparse: Vec<(u8, u8, i64)> = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(k, &v)| {
                let (i, j) = pairs[k];
                (i as u8, j as u8, i64::try_from(v).expect("small entry"))
            })
            .collect();
        out.push(sparse);
    }
    out
}

pub fn k_milnor(units: Arc<UnitGroupStructure>, n: usize) -> KMilnorGroup {
    assert!(n >= 1, "degree zero is Z by convention");
    let m = units.num_factors();
    let mut tuples: Vec<Vec<u8>> = Vec::new();
    let mut moduli = Vec::new();
    if m > 0 {
        let mut cur = vec![0u8; n];
        loop {
            let g = cur
                .iter()
                .fold(0u64, |acc, &i| gcd(acc, units.orders[i as usize]));
            if g > 1 {
                tuples.push(cur.clone());
                moduli.push(g);
            }
            let mut slot = n;
            let mut done = true;
            while slot > 0 {
                slot -= 1;
                cur[slot] += 1;
                if (cur[slot] as usize) < m {
                    done = false;
                    break;
                }
                cur[slot] = 0;
            }
            if done {
                break;
            }
        }
    }
    let tuple_index: HashMap<Vec<u8>, usize> = tuples
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let ngens = tuples.len();
    let mut rows: Vec<Vec<i64>> = Vec::new();
    for (k, &md) in moduli.iter().enumerate() {
        let mut row = vec![0i64; ngens];
        row[k] = md as i64;
        rows.push(row);
    }
    let steinberg = if n >= 2 {
        steinberg_pair_generators(&units)
    } else {
        Vec::new()
    };
    let steinberg_generator_count = steinberg.len();
    if n >= 2 {
        // Place each Steinberg generator in every adjacent slot pair,
        // tensored with every assignment of cyclic generators to the
        // complementary slots.
        let comp_slots = n - 2;
        for pos in 0..n - 1 {
            for gen in &steinberg {
                let mut assign = vec![0u8; comp_slots];
                loop {
                    let mut row = vec![0i64; ngens];
                    let mut nonzero = false;
                    for &(i, j, c) in gen {
                        let mut tuple = Vec::with_capacity(n);
                        let mut it = assign.iter();
                        for slot in 0..n {
                            if slot == pos {
                                tuple.push(i);
                            } else if slot == pos + 1 {
                                tuple.push(j);
                            } else {
                                tuple.push(*it.next().expect("assignment"));
                            }
                        }
                        if let Some(&ti) = tuple_index.get(&tuple) {
                            row[ti] += c;
                            nonzero = true;
                        }
                    }
                    if nonzero {
                        rows.push(row);
                    }
                    let mut slot = comp_slots;
                    let mut done = true;
                    while slot > 0 {
                        slot -= 1;
                        assign[slot] += 1;
                        if (assign[slot] as usize) < m {
                            done = false;
                            break;
                        }
                        assign[slot] = 0;
                    }
                    if done {
                        break;
                    }
                }
            }
        }
    }
    let group = Arc::new(FPAbGroup::new(
        ngens,
        IntMatrix::from_i64_rows(ngens, &rows),
    ));
    KMilnorGroup {
        units,
        degree: n,
        tuples,
        tuple_index,
        moduli,
        group,
        steinberg_generator_count,
    }
}

impl KMilnorGroup {
    pub fn ngens(&self) -> usize {
        self.tuples.len()
    }

    pub fn describe_gen(&self, index: usize) -> String {
        let entries: Vec<String> = self.tuples[index]
            .iter()
            .map(|&i| {
                self.units
                    .ring
                    .format_element(&self.units.generators[i as usize])
            })
            .collect();
        format!("{{{}}}", entries.join(", "))
    }

    /// Coordinates from precomputed discrete logs, one per symbol slot.
    pub fn encode_from_dlogs(&self, dlogs: &[&[u64]]) -> Vec<i64> {
        debug_assert_eq!(dlogs.len(), self.degree);
        let mut coords = vec![0i64; self.ngens()];
        for (k, tuple) in self.tuples.iter().enumerate() {
            let mut v: i64 = 1;
            for (slot, &i) in tuple.iter().enumerate() {
                v *= dlogs[slot][i as usize] as i64;
                if v == 0 {
                    break;
                }
                v %= self.moduli[k] as i64;
            }
            coords[k] = v.rem_euclid(self.moduli[k] as i64);
        }
        coords
    }

    /// Coordinates of the pure symbol with the given unit entries.
    pub fn encode_symbol(&self, entries: &[RingElement]) -> Result<Vec<i64>, MilnorError> {
        if entries.len() != self.degree {
            return Err(MilnorError::TooLarge(format!(
                "symbol has {} entries, group degree is {}",
                entries.len(),
                self.degree
            )));
        }
        let dlogs: Vec<Vec<u64>> = entries
            .iter()
            .map(|e| self.units.dlog(e))
            .collect::<Result<_, _>>()?;
        let mut coords = vec![0i64; self.ngens()];
        for (k, tuple) in self.tuples.iter().enumerate() {
            let mut v: i64 = 1;
            for (slot, &i) in tuple.iter().enumerate() {
                v *= dlogs[slot][i as usize] as i64;
                if v == 0 {
                    break;
                }
                v %= self.moduli[k] as i64;
            }
            coords[k] = v.rem_euclid(self.moduli[k] as i64);
        }
        Ok(coords)
    }

    pub fn encode_word(&self, word: &SymbolWord) -> Result<Vec<BigInt>, MilnorError> {
        let mut acc = vec![BigInt::from(0); self.ngens()];
        for (entries, exp) in &word.factors {
            let coords = self.encode_symbol(entries)?;
            for (a, &c) in acc.iter_mut().zip(coords.iter()) {
                *a += BigInt::from(c) * BigInt::from(*exp);
            }
        }
        Ok(acc)
    }

    pub fn is_zero_word(&self, word: &SymbolWord) -> Result<bool, MilnorError> {
        Ok(self.group.is_zero_element(&self.encode_word(word)?))
    }
}

pub struct RelativeKMilnor {
    pub ambient: KMilnorGroup,
    pub sub: KMilnorGroup,
    pub projection: AbHom,
    pub kernel: Arc<FPAbGroup>,
    pub inclusion: AbHom,
}

/// Kernel of K_n(R) -> K_n(S); the unit structure must be split-backed so
/// the first `s_block` cyclic factors are the sectioned S* factors.
pub fn relative_k_milnor(
    units: &Arc<UnitGroupStructure>,
    base: &Arc<UnitGroupStructure>,
    n: usize,
) -> Result<RelativeKMilnor, MilnorError> {
    let ambient = k_milnor(units.clone(), n);
    let sub = k_milnor(base.clone(), n);
    let s_block = units.s_block;
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for tuple in &ambient.tuples {
        let mut row = vec![BigInt::from(0); sub.ngens()];
        if tuple.iter().all(|&i| (i as usize) < s_block) {
            if let Some(&ti) = sub.tuple_index.get(tuple) {
                row[ti] = BigInt::from(1);
            }
        }
        rows.push(row);
    }
    let projection = AbHom::new(
        ambient.group.clone(),
        sub.group.clone(),
        IntMatrix::from_rows(sub.ngens(), rows),
    )?;
    let (kernel, inclusion) = projection.kernel();
    Ok(RelativeKMilnor {
        ambient,
        sub,
        projection,
        kernel,
        inclusion,
    })
}

/// The graded dlog map K_n -> Omega^n sending {r_1,..,r_n} to
/// dr_1/r_1 ^ ... ^ dr_n/r_n, verified well defined on construction.
pub fn dlog_hom(k: &KMilnorGroup, omega: &OmegaModule) -> Result<AbHom, MilnorError> {
    assert_eq!(k.degree, omega.degree);
    let ring = &k.units.ring;
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for tuple in &k.tuples {
        let args: Vec<RingElement> = tuple
            .iter()
            .map(|&i| k.units.generators[i as usize].clone())
            .collect();
        let mut coef = ring.one();
        for a in &args {
            coef = ring.mul(&coef, &ring.invert(a).expect("generator is a unit"));
        }
        rows.push(omega.encode_form(&FormalDifferential::term(coef, args))?);
    }
    Ok(AbHom::new(
        k.group.clone(),
        omega.group.clone(),
        IntMatrix::from_rows(omega.ngens(), rows),
    )?)
}

/// Factors a relative symbol into the product over nonempty entry subsets
/// taking the (1+I)* parts, per the splitting R = S (+) I; every factor
/// keeps at least one entry in (1+I)*.
pub fn factor_relative_symbol(
    ext: &SplitExtension,
    rel: &RelativeKMilnor,
    entries: &[RingElement],
) -> Result<SymbolWord, MilnorError> {
    let ring = &ext.ring;
    let n = entries.len();
    assert_eq!(n, rel.ambient.degree);
    let coords = rel.ambient.encode_symbol(entries)?;
    let coords_big: Vec<BigInt> = coords.iter().map(|&c| BigInt::from(c)).collect();
    let image = rel.projection.apply(&coords_big);
    if !rel.sub.group.is_zero_element(&image) {
        return Err(MilnorError::NotRelative);
    }
    let mut s_parts = Vec::with_capacity(n);
    let mut u_parts = Vec::with_capacity(n);
    for e in entries {
        let s = ext.section(&ext.project(e));
        let sinv = ring
            .invert(&s)
            .ok_or_else(|| MilnorError::NotAUnit(ring.format_element(e)))?;
        let w = ring.mul(e, &sinv);
        debug_assert!(ext.is_one_plus_ideal(&w));
        s_parts.push(s);
        u_parts.push(w);
    }
    // The omitted pure-S factor must already be trivial.
    let pure_coords = rel.ambient.encode_symbol(&s_parts)?;
    let pure_big: Vec<BigInt> = pure_coords.iter().map(|&c| BigInt::from(c)).collect();
    if !rel.ambient.group.is_zero_element(&pure_big) {
        return Err(MilnorError::NotRelative);
    }
    let mut factors = Vec::new();
    for mask in 1u32..(1 << n) {
        let factor: Vec<RingElement> = (0..n)
            .map(|l| {
                if mask & (1 << l) != 0 {
                    u_parts[l].clone()
                } else {
                    s_parts[l].clone()
                }
            })
            .collect();
        factors.push((factor, 1i32));
    }
    let word = SymbolWord { factors };
    // The factorization must re-encode to the original symbol.
    let recoded = rel.ambient.encode_word(&word)?;
    debug_assert!(rel.ambient.group.elements_equal(&recoded, &coords_big));
    Ok(word)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolRelation {
    Idempotent,
    AdditiveInverse,
    Anticommutativity,
}

impl SymbolRelation {
    pub fn as_str(&self) -> &'static str {
        match self {
            SymbolRelation::Idempotent => "idempotent",
            SymbolRelation::AdditiveInverse => "additive-inverse",
            SymbolRelation::Anticommutativity => "anticommutativity",
        }
    }
}

#[derive(Debug)]
pub struct RelationCheck {
    pub which: SymbolRelation,
    pub ok: bool,
    pub checked: u64,
    pub counterexample: Option<String>,
}

/// Checks a symbol identity in the computed group: exhaustively when the
/// candidate count fits the budget, by seeded sampling otherwise. These
/// identities are theorems under 5-fold stability, so a counterexample is
/// a value, not an error.
pub fn check_symbol_relations(
    k: &KMilnorGroup,
    which: SymbolRelation,
    budget: u64,
    seed: u64,
) -> Result<RelationCheck, MilnorError> {
    use rand::SeedableRng;
    let ring = &k.units.ring;
    let units: Vec<RingElement> = ring.units_lex().to_vec();
    let n = k.degree;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    if matches!(
        which,
        SymbolRelation::AdditiveInverse | SymbolRelation::Anticommutativity
    ) && n < 2
    {
        return Ok(RelationCheck {
            which,
            ok: true,
            checked: 0,
            counterexample: None,
        });
    }
    // Number of free unit slots to fill for one instance of the identity.
    let free_choices = match which {
        SymbolRelation::Idempotent => n - 1,
        SymbolRelation::AdditiveInverse => n - 1,
        SymbolRelation::Anticommutativity => n,
    };
    let total = (units.len() as u64).checked_pow(free_choices as u32);
    let exhaustive = total.map(|t| t <= budget).unwrap_or(false);
    let iterations = if exhaustive { total.unwrap() } else { budget.max(1) };
    // Discrete logs of every unit, computed once; the identity checks below
    // only combine them.
    let unit_dlogs: Vec<Vec<u64>> = units
        .iter()
        .map(|u| k.units.dlog(u))
        .collect::<Result<_, _>>()?;
    let neg_index: Vec<usize> = units
        .iter()
        .map(|u| {
            let nu = ring.neg(u);
            units.binary_search(&nu).expect("negation of a unit is a unit")
        })
        .collect();
    let one_index = units.binary_search(&ring.one()).expect("1 is a unit");
    let mut checked = 0u64;
    for it in 0..iterations {
        let entry_ids: Vec<usize> = (0..free_choices)
            .map(|slot| {
                if exhaustive {
                    let mut idx = it;
                    for _ in 0..slot {
                        idx /= units.len() as u64;
                    }
                    (idx % units.len() as u64) as usize
                } else {
                    rng.gen_range(0..units.len())
                }
            })
            .collect();
        let word_ids: Vec<(Vec<usize>, i32)> = match which {
            SymbolRelation::Idempotent => {
                let mut sym = entry_ids;
                sym.push(one_index);
                vec![(sym, 1)]
            }
            SymbolRelation::AdditiveInverse => {
                // {.., u, -u}: the last drawn unit is doubled up.
                let mut sym = entry_ids;
                let u = sym.pop().expect("at least one unit");
                sym.push(u);
                sym.push(neg_index[u]);
                vec![(sym, 1)]
            }
            SymbolRelation::Anticommutativity => {
                let pos = if n == 2 { 0 } else { (it as usize) % (n - 1) };
                let mut swapped = entry_ids.clone();
                swapped.swap(pos, pos + 1);
                vec![(entry_ids, 1), (swapped, 1)]
            }
        };
        checked += 1;
        let mut acc = vec![0i64; k.ngens()];
        for (ids, exp) in &word_ids {
            let dls: Vec<&[u64]> = ids.iter().map(|&i| unit_dlogs[i].as_slice()).collect();
            let coords = k.encode_from_dlogs(&dls);
            for (a, c) in acc.iter_mut().zip(coords.iter()) {
                *a += c * i64::from(*exp);
            }
        }
        let zero = {
            let big: Vec<BigInt> = acc.iter().map(|&c| BigInt::from(c)).collect();
            k.group.is_zero_element(&big)
        };
        if !zero {
            let text: Vec<String> = word_ids
                .iter()
                .map(|(ids, e)| {
                    let entries: Vec<String> = ids
                        .iter()
                        .map(|&i| ring.format_element(&units[i]))
                        .collect();
                    format!("{{{}}}^{}", entries.join(","), e)
                })
                .collect();
            return Ok(RelationCheck {
                which,
                ok: false,
                checked,
                counterexample: Some(text.join(" ")),
            });
        }
    }
    Ok(RelationCheck {
        which,
        ok: true,
        checked,
        counterexample: None,
    })
}

#[cfg(test)]
mod milnork_tests;
