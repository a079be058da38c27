//! The second Dennis-Stein group D2(R): generators <a, b> for pairs with
//! 1 + ab a unit, modulo
//!   <a,b><-b,-a> = 1
//!   <a,b><a,c>   = <a, b+c+abc>
//!   <a,bc>       = <ab,c><ac,b>
//! fully enumerated and crushed by the streaming presentation reducer.
//! Also the explicit K2 <-> D2 symbol maps.

use super::{KMilnorGroup, MilnorError, SymbolWord};
use crate::abgroup::reduce::{PresentationReducer, ReducedPresentation};
use crate::abgroup::{AbHom, FPAbGroup, IntMatrix};
use crate::fring::{FiniteRing, RingElement, SplitExtension};
use num_bigint::BigInt;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub const DEFAULT_RELATION_BUDGET: u64 = 300_000_000;

pub struct DennisSteinGroup {
    pub ring: Arc<FiniteRing>,
    /// Symbols in enumeration order: (element id of a, element id of b).
    pub symbols: Vec<(u32, u32)>,
    pub elements: Vec<RingElement>,
    symbol_id: Vec<u32>, // a_id * |R| + b_id -> symbol index (or MAX)
    reduced: Mutex<ReducedPresentation>,
    pub group: Arc<FPAbGroup>,
    pub alive: Vec<usize>,
}

impl DennisSteinGroup {
    pub fn element_id(&self, e: &RingElement) -> Option<u32> {
        self.elements.iter().position(|x| x == e).map(|i| i as u32)
    }

    fn symbol_index(&self, a_id: u32, b_id: u32) -> Option<usize> {
        let k = self.symbol_id[a_id as usize * self.elements.len() + b_id as usize];
        if k == u32::MAX {
            None
        } else {
            Some(k as usize)
        }
    }

    /// Coordinates of the symbol <a, b> in the reduced presentation.
    pub fn encode_symbol(
        &self,
        a: &RingElement,
        b: &RingElement,
    ) -> Result<Vec<BigInt>, MilnorError> {
        let one_ab = self
            .ring
            .add(&self.ring.one(), &self.ring.mul(a, b));
        if !self.ring.is_unit(&one_ab) {
            return Err(MilnorError::NotAUnit(format!(
                "1 + ({})({})",
                self.ring.format_element(a),
                self.ring.format_element(b)
            )));
        }
        let a_id = self.element_id(a).expect("element of the ring");
        let b_id = self.element_id(b).expect("element of the ring");
        let sym = self
            .symbol_index(a_id, b_id)
            .expect("valid symbols are enumerated");
        let sparse = self
            .reduced
            .lock()
            .expect("reducer lock")
            .encode_column(sym)
            .map_err(|_| MilnorError::TooLarge("presentation coefficients overflowed".into()))?;
        let mut out = vec![BigInt::from(0); self.alive.len()];
        for (col, c) in sparse {
            out[col] = BigInt::from(c);
        }
        Ok(out)
    }

    pub fn describe_gen(&self, alive_index: usize) -> String {
        let (a, b) = self.symbols[self.alive[alive_index]];
        format!(
            "<{}, {}>",
            self.ring.format_element(&self.elements[a as usize]),
            self.ring.format_element(&self.elements[b as usize])
        )
    }

    pub fn alive_symbol(&self, alive_index: usize) -> (RingElement, RingElement) {
        let (a, b) = self.symbols[self.alive[alive_index]];
        (
            self.elements[a as usize].clone(),
            self.elements[b as usize].clone(),
        )
    }
}

/// Builds D2(R) by full enumeration of symbols and relations. The relation
/// count is 2|R|^3 + |R|^2-ish; `budget` caps it.
pub fn dennis_stein(
    ring: &Arc<FiniteRing>,
    budget: u64,
) -> Result<DennisSteinGroup, MilnorError> {
    let k = ring.order();
    let relation_estimate = 2u64.saturating_mul(k.saturating_pow(3)) / 2 + k.saturating_pow(2);
    if relation_estimate > budget {
        return Err(MilnorError::TooLarge(format!(
            "|R| = {k} needs about {relation_estimate} Dennis-Stein relation rows, over the budget {budget}"
        )));
    }
    let elements: Vec<RingElement> = ring.elements().collect();
    let n = elements.len();
    let pos: HashMap<&RingElement, u32> = elements
        .iter()
        .enumerate()
        .map(|(i, e)| (e, i as u32))
        .collect();
    // Element-level operation tables keep the relation loops allocation-free.
    let mut mul = vec![0u32; n * n];
    let mut add = vec![0u32; n * n];
    for i in 0..n {
        for j in 0..n {
            mul[i * n + j] = pos[&ring.mul(&elements[i], &elements[j])];
            add[i * n + j] = pos[&ring.add(&elements[i], &elements[j])];
        }
    }
    let neg: Vec<u32> = (0..n)
        .map(|i| pos[&ring.neg(&elements[i])])
        .collect();
    let one_id = pos[&ring.one()] as usize;
    let unit_flag: Vec<bool> = (0..n).map(|i| ring.is_unit(&elements[i])).collect();
    let symbol_ok =
        |a: usize, b: usize| -> bool { unit_flag[add[one_id * n + mul[a * n + b] as usize] as usize] };

    let mut symbols = Vec::new();
    let mut symbol_id = vec![u32::MAX; n * n];
    for a in 0..n {
        for b in 0..n {
            if symbol_ok(a, b) {
                symbol_id[a * n + b] = symbols.len() as u32;
                symbols.push((a as u32, b as u32));
            }
        }
    }
    let sym = |a: usize, b: usize| -> u32 { symbol_id[a * n + b] };

    // Exponent bound: k<a,b> = <a, b-circle-power-k> by induction on the
    // second relation, and the circle power hits 0 at the order of b in
    // (G_a, circle), so that order annihilates the symbol. The lcm over
    // all symbols therefore annihilates the whole group, which lets the
    // reducer balance its coefficients and never overflow.
    let circle = |a: usize, b: usize, c: usize| -> usize {
        let abc = mul[mul[a * n + b] as usize * n + c] as usize;
        add[add[b * n + c] as usize * n + abc] as usize
    };
    let zero_id = pos[&ring.zero()] as usize;
    let mut exponent: i128 = 1;
    for &(a, b) in &symbols {
        let (a, b) = (a as usize, b as usize);
        let mut cur = b;
        let mut ord: i128 = 1;
        while cur != zero_id {
            cur = circle(a, b, cur);
            ord += 1;
            if ord > (n as i128) + 1 {
                return Err(MilnorError::TooLarge(
                    "circle-operation order exceeded the ring order".into(),
                ));
            }
        }
        exponent = num_integer::lcm(exponent, ord);
        if exponent > 1 << 40 {
            return Err(MilnorError::TooLarge(
                "Dennis-Stein exponent bound overflowed".into(),
            ));
        }
    }

    let mut reducer = PresentationReducer::new_with_exponent(symbols.len(), exponent);
    let push = |rows: &mut PresentationReducer, terms: &[(u32, i128)]| {
        rows.insert(terms)
            .map_err(|_| MilnorError::TooLarge("presentation coefficients overflowed".into()))
    };
    // <a,b><-b,-a> = 1
    for a in 0..n {
        for b in 0..n {
            if symbol_ok(a, b) {
                let partner = sym(neg[b] as usize, neg[a] as usize);
                debug_assert_ne!(partner, u32::MAX);
                push(&mut reducer, &[(sym(a, b), 1), (partner, 1)])?;
            }
        }
    }
    // <a,b><a,c> = <a, b+c+abc>. For fixed a these are the multiplication
    // rows of the abelian group G_a = ({b : 1+ab unit}, circle); rows with
    // b restricted to a generating set of G_a derive the rest, since
    // R(g*x, y) = R(g, x*y) + R(x, y) - R(g, x) peels one generator off.
    for a in 0..n {
        let members: Vec<usize> = (0..n).filter(|&b| symbol_ok(a, b)).collect();
        let mut in_span = vec![false; n];
        in_span[zero_id] = true;
        let mut span: Vec<usize> = vec![zero_id];
        let mut gens: Vec<usize> = Vec::new();
        for &x in &members {
            if in_span[x] {
                continue;
            }
            gens.push(x);
            // <H, x> is the union of the cosets H + k*x until k*x falls
            // back into H.
            let base = span.clone();
            let old_flag = in_span.clone();
            let mut k_x = x;
            while !old_flag[k_x] {
                for &y in &base {
                    let z = circle(a, y, k_x);
                    if !in_span[z] {
                        in_span[z] = true;
                        span.push(z);
                    }
                }
                k_x = circle(a, k_x, x);
            }
        }
        for &g in &gens {
            for &h in &members {
                let combined = circle(a, g, h);
                debug_assert!(symbol_ok(a, combined));
                push(
                    &mut reducer,
                    &[(sym(a, g), 1), (sym(a, h), 1), (sym(a, combined), -1)],
                )?;
            }
        }
    }
    // <a,bc> = <ab,c><ac,b>; symmetric in (b, c). All three symbols share
    // the unit condition on 1 + abc.
    for a in 0..n {
        for b in 0..n {
            for c in 0..=b {
                let bc = mul[b * n + c] as usize;
                if !symbol_ok(a, bc) {
                    continue;
                }
                let ab = mul[a * n + b] as usize;
                let ac = mul[a * n + c] as usize;
                push(
                    &mut reducer,
                    &[(sym(a, bc), 1), (sym(ab, c), -1), (sym(ac, b), -1)],
                )?;
            }
        }
    }
    let reduced = reducer
        .finalize()
        .map_err(|_| MilnorError::TooLarge("presentation coefficients overflowed".into()))?;
    let alive = reduced.alive.clone();
    let group = Arc::new(FPAbGroup::new(
        alive.len(),
        IntMatrix::from_rows(alive.len(), reduced.residual_rows.clone()),
    ));
    Ok(DennisSteinGroup {
        ring: ring.clone(),
        symbols,
        elements,
        symbol_id,
        reduced: Mutex::new(reduced),
        group,
        alive,
    })
}

/// The map induced by the split projection, on the surviving generators.
pub fn dennis_stein_projection(
    ext: &SplitExtension,
    d_r: &DennisSteinGroup,
    d_s: &DennisSteinGroup,
) -> Result<AbHom, MilnorError> {
    let mut rows = Vec::new();
    for i in 0..d_r.alive.len() {
        let (a, b) = d_r.alive_symbol(i);
        let pa = ext.project(&a);
        let pb = ext.project(&b);
        rows.push(d_s.encode_symbol(&pa, &pb)?);
    }
    Ok(AbHom::new(
        d_r.group.clone(),
        d_s.group.clone(),
        IntMatrix::from_rows(d_s.alive.len(), rows),
    )?)
}

/// Rewrites <a, b> with a non-unit b into a sum of unit-b symbols:
/// find a unit u with b - u a unit (and 1 + au a unit), then
/// <a,b> = <a,u> + <a,v> with v = (b-u)(1+au)^{-1}.
pub fn unit_b_form(
    ring: &FiniteRing,
    a: &RingElement,
    b: &RingElement,
) -> Result<Vec<(RingElement, RingElement)>, MilnorError> {
    let one = ring.one();
    if ring.is_unit(b) {
        return Ok(vec![(a.clone(), b.clone())]);
    }
    for u in ring.units_lex() {
        let bmu = ring.sub(b, u);
        if !ring.is_unit(&bmu) {
            continue;
        }
        let one_au = ring.add(&one, &ring.mul(a, u));
        if !ring.is_unit(&one_au) {
            continue;
        }
        let v = ring.mul(&bmu, &ring.invert(&one_au).expect("unit"));
        debug_assert!(ring.is_unit(&v));
        return Ok(vec![(a.clone(), u.clone()), (a.clone(), v)]);
    }
    Err(MilnorError::RewriteFailed(format!(
        "<{}, {}>",
        ring.format_element(a),
        ring.format_element(b)
    )))
}

/// The Steinberg symbol associated to a Dennis-Stein symbol: {1 + ab, b},
/// after rewriting b into unit form if needed.
pub fn dennis_stein_to_steinberg(
    ring: &FiniteRing,
    a: &RingElement,
    b: &RingElement,
) -> Result<SymbolWord, MilnorError> {
    let one = ring.one();
    let mut factors = Vec::new();
    for (a2, b2) in unit_b_form(ring, a, b)? {
        let lead = ring.add(&one, &ring.mul(&a2, &b2));
        factors.push((vec![lead, b2], 1));
    }
    Ok(SymbolWord { factors })
}

/// The two explicit maps between K2 and D2: {r0, r1} -> <(r0-1)/r1, r1>
/// and <a, b> -> {1+ab, b}. Well-definedness is certified by the hom
/// constructor; under 5-fold stability both succeed and are inverse.
pub fn vdk_maps(
    k2: &KMilnorGroup,
    d2: &DennisSteinGroup,
) -> Result<(AbHom, AbHom), MilnorError> {
    assert_eq!(k2.degree, 2);
    let ring = &k2.units.ring;
    let one = ring.one();
    // K2 -> D2 on the tuple generators {g_i, g_j}.
    let mut rows = Vec::new();
    for tuple in &k2.tuples {
        let r0 = &k2.units.generators[tuple[0] as usize];
        let r1 = &k2.units.generators[tuple[1] as usize];
        let a = ring.mul(
            &ring.sub(r0, &one),
            &ring.invert(r1).expect("generator is a unit"),
        );
        rows.push(d2.encode_symbol(&a, r1)?);
    }
    let k_to_d = AbHom::new(
        k2.group.clone(),
        d2.group.clone(),
        IntMatrix::from_rows(d2.alive.len(), rows),
    )?;
    // D2 -> K2 on the surviving symbols.
    let mut rows = Vec::new();
    for i in 0..d2.alive.len() {
        let (a, b) = d2.alive_symbol(i);
        let word = dennis_stein_to_steinberg(ring, &a, &b)?;
        rows.push(k2.encode_word(&word)?);
    }
    let d_to_k = AbHom::new(
        d2.group.clone(),
        k2.group.clone(),
        IntMatrix::from_rows(k2.ngens(), rows),
    )?;
    Ok((k_to_d, d_to_k))
}
