//! The degree-one bridge through the Dennis-Stein group: the composites
//!
//!   K2(R,I) -> D2(R,I) -> Omega^1_{R,I}/dI   via {r0,r1} -> <(r0-1)/r1, r1>
//!                                            and <a,b> -> log(1+ab) db/b
//!   Omega^1_{R,I}/dI -> D2(R,I) -> K2(R,I)   via r0 dr1 -> <(e^{r0 r1}-1)/r1, r1>
//!                                            and <a,b> -> {1+ab, b}
//!
//! must equal phi_2 and psi_2 as homomorphisms.

use super::{GoodwillieError, TheoremInstance};
use crate::abgroup::{row_basis_bigint, subgroup_spans_equal, AbHom, IntMatrix};
use crate::fring::RingElement;
use crate::kahler::FormalDifferential;
use crate::milnork::dennis_stein::{
    dennis_stein, dennis_stein_projection, dennis_stein_to_steinberg, DennisSteinGroup,
};
use crate::milnork::MilnorError;
use num_bigint::BigInt;
use num_traits::Zero;

pub struct BaseCaseReport {
    pub k2_order: BigInt,
    pub d2_order: BigInt,
    pub vdk_mutually_inverse: bool,
    pub relative_orders_equal: bool,
    pub relative_symbols_span: bool,
    pub phi_composite_equal: bool,
    pub psi_composite_equal: bool,
    pub anticommutativity_in_d2: bool,
}

impl BaseCaseReport {
    pub fn all_ok(&self) -> bool {
        self.k2_order == self.d2_order
            && self.vdk_mutually_inverse
            && self.relative_orders_equal
            && self.relative_symbols_span
            && self.phi_composite_equal
            && self.psi_composite_equal
            && self.anticommutativity_in_d2
    }
}

/// Series value of (e^{c*b} - 1)/b, which is defined in the ring because
/// every term of e^{c*b} - 1 carries a factor of b: the quotient is
/// sum_{k>=1} c^k b^{k-1} / k!.
fn exp_minus_one_over(
    ext: &crate::fring::SplitExtension,
    c: &RingElement,
    b: &RingElement,
) -> Result<RingElement, GoodwillieError> {
    let ring = &ext.ring;
    let n = ext.nilpotency as u64;
    let mut acc = ring.zero();
    let mut c_pow = ring.one();
    let mut b_pow = ring.one();
    let mut factorial_inv = 1u64;
    for k in 1..=n {
        c_pow = ring.mul(&c_pow, c);
        if k >= 2 {
            b_pow = ring.mul(&b_pow, b);
        }
        if ring.is_zero(&c_pow) {
            break;
        }
        let inv_k = inv_mod_u64(k % ring.characteristic, ring.characteristic).ok_or(
            GoodwillieError::Ring(crate::fring::FringError::NonInvertibleDenominator { k }),
        )?;
        factorial_inv = (factorial_inv * inv_k) % ring.characteristic;
        let term = ring.scalar_mul(factorial_inv, &ring.mul(&c_pow, &b_pow));
        acc = ring.add(&acc, &term);
    }
    Ok(acc)
}

fn inv_mod_u64(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        None
    } else {
        Some(t.rem_euclid(m as i128) as u64)
    }
}

/// Maazen-Stienstra image of a Dennis-Stein symbol with ideal first entry:
/// <a, b> -> log(1+ab) db/b = (sum_k (-1)^{k+1} a^k b^{k-1} / k) db.
fn ms_symbol_to_form(
    ext: &crate::fring::SplitExtension,
    a: &RingElement,
    b: &RingElement,
) -> Result<FormalDifferential, GoodwillieError> {
    let ring = &ext.ring;
    assert!(ext.in_ideal(a), "the MS formula needs an ideal first entry");
    let n = ext.nilpotency as u64;
    let mut coef = ring.zero();
    let mut a_pow = ring.one();
    let mut b_pow = ring.one();
    for k in 1..=n {
        a_pow = ring.mul(&a_pow, a);
        if k >= 2 {
            b_pow = ring.mul(&b_pow, b);
        }
        if ring.is_zero(&a_pow) {
            break;
        }
        let inv_k = inv_mod_u64(k % ring.characteristic, ring.characteristic).ok_or(
            GoodwillieError::Ring(crate::fring::FringError::NonInvertibleDenominator { k }),
        )?;
        let term = ring.scalar_mul(inv_k, &ring.mul(&a_pow, &b_pow));
        if k % 2 == 1 {
            coef = ring.add(&coef, &term);
        } else {
            coef = ring.sub(&coef, &term);
        }
    }
    Ok(FormalDifferential::term(coef, vec![b.clone()]))
}

/// Runs every check of the degree-one bridge on a built theorem instance.
/// `budget` caps the Dennis-Stein relation enumeration.
pub fn base_case_composites(
    inst: &TheoremInstance,
    budget: u64,
) -> Result<BaseCaseReport, GoodwillieError> {
    assert_eq!(inst.degree, 1, "the bridge is a degree-one construction");
    let ext = &inst.ext;
    let ring = &ext.ring;
    let d2_r = dennis_stein(&ring.clone(), budget)?;
    let d2_s = dennis_stein(&ext.subring.clone(), budget)?;

    // Absolute comparison and the two explicit maps.
    let k2 = &inst.lhs.rel.ambient;
    let k2_order = k2.group.order().expect("finite");
    let d2_order = d2_r.group.order().expect("finite");
    let (k_to_d, d_to_k) = crate::milnork::dennis_stein::vdk_maps(k2, &d2_r)?;
    let vdk_mutually_inverse = k_to_d.compose(&d_to_k).identity_witness().is_none()
        && d_to_k.compose(&k_to_d).identity_witness().is_none();

    // Relative orders: Ker(D2(R) -> D2(S)) against Ker on the K side.
    let proj = dennis_stein_projection(ext, &d2_r, &d2_s)?;
    let (d2_rel, d2_incl) = proj.kernel();
    let relative_orders_equal =
        d2_rel.order() == inst.lhs.rel.kernel.order();

    // The symbols <i, r> with i in I span the relative Dennis-Stein group.
    let relative_symbols_span = {
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for i in ext.ideal_elements() {
            for r in ring.elements() {
                rows.push(d2_r.encode_symbol(&i, &r).map_err(GoodwillieError::Milnor)?);
            }
        }
        let sym_rows = row_basis_bigint(d2_r.group.ngens(), rows);
        let kernel_rows = {
            let m = d2_incl.images();
            row_basis_bigint(d2_r.group.ngens(), (0..m.rows()).map(|i| m.row(i).to_vec()))
        };
        subgroup_spans_equal(&d2_r.group, &sym_rows, &kernel_rows)
    };

    // phi composite: K2(R,I) -> D2 -> Omega, generator by generator.
    let units = &k2.units;
    let s_block = units.s_block;
    let one = ring.one();
    let mut anticommutativity_in_d2 = true;
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for tuple in &inst.lhs.family {
        let g0 = &units.generators[tuple[0] as usize];
        let g1 = &units.generators[tuple[1] as usize];
        let (form, d_check): (FormalDifferential, Option<(RingElement, RingElement, RingElement, RingElement)>) =
            if (tuple[0] as usize) >= s_block {
                // {h, g}: the Van der Kallen symbol <(h-1)/g, g> already has
                // an ideal first entry.
                let a = ring.mul(&ring.sub(g0, &one), &ring.invert(g1).expect("unit"));
                (ms_symbol_to_form(ext, &a, g1)?, None)
            } else {
                // {g, h}: rewrite through anticommutativity in D2, checking
                // <(g-1)/h, h> = -<(h-1)/g, g> there.
                let direct_a = ring.mul(&ring.sub(g0, &one), &ring.invert(g1).expect("unit"));
                let swapped_a = ring.mul(&ring.sub(g1, &one), &ring.invert(g0).expect("unit"));
                let mut form = ms_symbol_to_form(ext, &swapped_a, g0)?;
                for (c, _) in form.terms.iter_mut() {
                    *c = ring.neg(c);
                }
                (form, Some((direct_a, g1.clone(), swapped_a, g0.clone())))
            };
        if let Some((a1, b1, a2, b2)) = d_check {
            let lhs = d2_r.encode_symbol(&a1, &b1).map_err(GoodwillieError::Milnor)?;
            let rhs = d2_r.encode_symbol(&a2, &b2).map_err(GoodwillieError::Milnor)?;
            let sum: Vec<BigInt> = lhs.iter().zip(rhs.iter()).map(|(x, y)| x + y).collect();
            if !d2_r.group.is_zero_element(&sum) {
                anticommutativity_in_d2 = false;
            }
        }
        let v = inst.rhs.ambient.encode_form(&form)?;
        let coords = inst.rhs.solve_family_coords(&v).ok_or_else(|| {
            GoodwillieError::Unsupported("bridge image is not a relative differential".into())
        })?;
        rows.push(coords);
    }
    let phi_composite = AbHom::new(
        inst.lhs.group.clone(),
        inst.rhs.group.clone(),
        IntMatrix::from_rows(inst.rhs.family.len(), rows),
    )?;
    let phi_composite_equal = inst
        .phi
        .as_ref()
        .map(|phi| phi.equal_hom(&phi_composite))
        .unwrap_or(false);

    // psi composite: Omega -> D2 -> K2(R,I), generator by generator.
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    let mut psi_ok = true;
    for gen in &inst.rhs.family {
        let coords = match gen.coef {
            None => vec![BigInt::zero(); inst.lhs.family.len()],
            Some(coef_idx) => {
                let c = ring.basis_element(coef_idx);
                assert_eq!(gen.args.len(), 1);
                let b = ring.basis_element(gen.args[0]);
                let a = exp_minus_one_over(ext, &c, &b)?;
                debug_assert!(
                    ring.is_unit(&ring.add(&one, &ring.mul(&a, &b))),
                    "1 + ab = e^(cb) must be a unit"
                );
                let word = dennis_stein_to_steinberg(ring, &a, &b)
                    .map_err(GoodwillieError::Milnor)?;
                let v = k2.encode_word(&word).map_err(GoodwillieError::Milnor)?;
                match inst.lhs.solve_family_coords(&v) {
                    Some(c) => c,
                    None => {
                        psi_ok = false;
                        vec![BigInt::zero(); inst.lhs.family.len()]
                    }
                }
            }
        };
        rows.push(coords);
    }
    let psi_composite = AbHom::new(
        inst.rhs.group.clone(),
        inst.lhs.group.clone(),
        IntMatrix::from_rows(inst.lhs.family.len(), rows),
    )?;
    let psi_composite_equal = psi_ok
        && inst
            .psi
            .as_ref()
            .map(|psi| psi.equal_hom(&psi_composite))
            .unwrap_or(false);

    Ok(BaseCaseReport {
        k2_order,
        d2_order,
        vdk_mutually_inverse,
        relative_orders_equal,
        relative_symbols_span,
        phi_composite_equal,
        psi_composite_equal,
        anticommutativity_in_d2,
    })
}

/// Symbol-level example used in tests: the chain image of a single symbol.
pub fn bridge_image_of_symbol(
    inst: &TheoremInstance,
    d2: &DennisSteinGroup,
    r0: &RingElement,
    r1: &RingElement,
) -> Result<(Vec<BigInt>, Vec<BigInt>), GoodwillieError> {
    let ext = &inst.ext;
    let ring = &ext.ring;
    let a = ring.mul(
        &ring.sub(r0, &ring.one()),
        &ring.invert(r1).ok_or_else(|| {
            GoodwillieError::Milnor(MilnorError::NotAUnit(ring.format_element(r1)))
        })?,
    );
    let d_coords = d2.encode_symbol(&a, r1).map_err(GoodwillieError::Milnor)?;
    let form = ms_symbol_to_form(ext, &a, r1)?;
    let omega_coords = inst.rhs.ambient.encode_form(&form)?;
    Ok((d_coords, omega_coords))
}
