use super::dennis_stein::*;
use super::units::*;
use super::*;
use crate::fring::parse::parse_element;
use crate::fring::{split_extension, FiniteRing};
use crate::kahler::omega_n;

fn ring_from(text: &str) -> Arc<FiniteRing> {
    crate::fring::parse::build_ring_from_file(text, "test")
        .unwrap()
        .0
}

fn f7() -> Arc<FiniteRing> {
    ring_from("char = 7\n")
}

fn f2x() -> Arc<FiniteRing> {
    ring_from("char = 2\nvars = [\"x\"]\nrewrites = [\"x^2 -> 0\"]\n")
}

fn f7e() -> Arc<FiniteRing> {
    ring_from("char = 7\nvars = [\"e\"]\nrewrites = [\"e^2 -> 0\"]\n")
}

fn f7te() -> Arc<FiniteRing> {
    ring_from("char = 7\nvars = [\"t\", \"e\"]\nrewrites = [\"t^2 -> 0\", \"e^2 -> 0\"]\n")
}

fn split_units(
    ring: &Arc<FiniteRing>,
    gens: &[&str],
) -> (Arc<crate::fring::SplitExtension>, Arc<UnitGroupStructure>, Arc<UnitGroupStructure>) {
    let gens = gens
        .iter()
        .map(|g| parse_element(ring, g).unwrap())
        .collect();
    let ext = split_extension(ring.clone(), gens).unwrap();
    let base = unit_structure_auto(&ext.subring).unwrap();
    let units = unit_structure_split(&ext, base.clone()).unwrap();
    (ext, units, base)
}

#[test]
fn unit_structure_examples() {
    // Z/2[x]/x^2: R* = Z/2 generated by 1 + x.
    let r = f2x();
    let s = unit_structure_exhaustive(&r, 150).unwrap();
    assert_eq!(s.invariant_factors(), vec![2]);
    assert_eq!(s.generators.len(), 1);
    assert_eq!(s.generators[0], parse_element(&r, "1+x").unwrap());

    // F7: Z/6.
    let s = unit_structure_exhaustive(&f7(), 150).unwrap();
    assert_eq!(s.invariant_factors(), vec![6]);

    // F7[e]/e^2: Z/6 x Z/7 = Z/42; split and exhaustive agree.
    let r = f7e();
    let exhaustive = unit_structure_exhaustive(&r, 150).unwrap();
    let (_, split, _) = split_units(&r, &["e"]);
    assert_eq!(exhaustive.invariant_factors(), vec![42]);
    assert_eq!(split.invariant_factors(), vec![42]);
    assert_eq!(split.s_block, 1);
    assert_eq!(split.orders, vec![6, 7]);
}

#[test]
fn dlog_reconstructs_every_unit() {
    let r = f7e();
    for s in [
        unit_structure_exhaustive(&r, 150).unwrap(),
        split_units(&r, &["e"]).1,
    ] {
        for u in r.units_lex() {
            assert!(s.check_reconstruction(u));
        }
    }
    // Non-units are rejected.
    let s = unit_structure_exhaustive(&r, 150).unwrap();
    let e = parse_element(&r, "e").unwrap();
    assert!(matches!(s.dlog(&e), Err(MilnorError::NotAUnit(_))));
}

#[test]
fn split_structure_matches_order_census() {
    // F7[e]/e^3 is over the exhaustive cap; the split route must still
    // predict the exact element-order census.
    let r = ring_from("char = 7\nvars = [\"e\"]\nrewrites = [\"e^3 -> 0\"]\n");
    let (_, units, _) = split_units(&r, &["e"]);
    assert_eq!(units.orders, vec![6, 7, 7]);
    let census = unit_order_census(&r);
    let predicted = census_from_orders(&units.orders);
    assert_eq!(census, predicted);
    for u in r.units_lex().iter().step_by(7) {
        assert!(units.check_reconstruction(u));
    }
}

#[test]
fn auto_structure_recurses_through_nilpotent_variables() {
    // F7[t,u]/(t,u)^2 has 294 units: auto must split over F7.
    let r = ring_from(
        "char = 7\nvars = [\"t\", \"u\"]\nrewrites = [\"t^2 -> 0\", \"t*u -> 0\", \"u^2 -> 0\"]\n",
    );
    let units = unit_structure_auto(&r).unwrap();
    assert_eq!(units.invariant_factors(), vec![7, 42]);
    assert_eq!(units.unit_count(), 294);
    for u in r.units_lex().iter().step_by(11) {
        assert!(units.check_reconstruction(u));
    }
}

#[test]
fn steinberg_generators_examples() {
    // Z/2[x]/x^2: no unit r has 1 - r a unit, so the set is empty.
    let r = f2x();
    let s = unit_structure_exhaustive(&r, 150).unwrap();
    assert!(steinberg_pair_generators(&s).is_empty());

    // F7 and F3: the Steinberg subgroup kills all of K2.
    for p in ["char = 7\n", "char = 3\n"] {
        let r = ring_from(p);
        let s = unit_structure_exhaustive(&r, 150).unwrap();
        let k2 = k_milnor(s, 2);
        assert!(k2.group.is_trivial(), "K2 of {p}");
    }
}

#[test]
fn k_milnor_examples() {
    // K1 = R*.
    for r in [f2x(), f7(), f7e()] {
        let s = unit_structure_auto(&r).unwrap();
        let k1 = k_milnor(s.clone(), 1);
        assert_eq!(
            k1.group.invariant_factors_u64(),
            s.invariant_factors(),
            "K1 of {}",
            r.spec.name
        );
    }
    // K2(Z/2[x]/x^2) = Z/2 generated by {1+x, 1+x}.
    let r = f2x();
    let s = unit_structure_exhaustive(&r, 150).unwrap();
    let k2 = k_milnor(s, 2);
    assert_eq!(k2.group.invariant_factors_u64(), vec![2]);
    let u = parse_element(&r, "1+x").unwrap();
    let sym = SymbolWord::symbol(vec![u.clone(), u]);
    assert!(!k2.is_zero_word(&sym).unwrap());
}

#[test]
fn encode_symbol_laws() {
    let r = f7e();
    let s = unit_structure_auto(&r).unwrap();
    let k2 = k_milnor(s, 2);
    let u = parse_element(&r, "3+e").unwrap();
    let v = parse_element(&r, "1+2e").unwrap();
    // An entry 1 kills the symbol.
    let w = SymbolWord::symbol(vec![r.one(), u.clone()]);
    assert!(k2.is_zero_word(&w).unwrap());
    // Formal cancellation.
    let w = SymbolWord {
        factors: vec![
            (vec![u.clone(), v.clone()], 1),
            (vec![u.clone(), v.clone()], -1),
        ],
    };
    assert!(k2.is_zero_word(&w).unwrap());
    // Multiplicativity in a slot: {uv, w} = {u, w} + {v, w}.
    let w3 = parse_element(&r, "2+5e").unwrap();
    let prod = r.mul(&u, &v);
    let lhs = k2.encode_word(&SymbolWord::symbol(vec![prod, w3.clone()])).unwrap();
    let rhs = k2
        .encode_word(&SymbolWord {
            factors: vec![(vec![u, w3.clone()], 1), (vec![v, w3], 1)],
        })
        .unwrap();
    assert!(k2.group.elements_equal(&lhs, &rhs));
}

#[test]
fn steinberg_and_multiplicative_relations_encode_to_zero() {
    // The two defining relation families of the presentation: exhaustive
    // over the dual numbers, sampled on the 2401-element ring.
    let r = f7e();
    let units_list: Vec<RingElement> = r.units_lex().to_vec();
    let s = unit_structure_auto(&r).unwrap();
    let k2 = k_milnor(s, 2);
    for u in &units_list {
        let omu = r.sub(&r.one(), u);
        if r.is_unit(&omu) {
            let w = SymbolWord::symbol(vec![u.clone(), omu]);
            assert!(k2.is_zero_word(&w).unwrap(), "Steinberg relation fails");
        }
        for v in &units_list {
            for w3 in units_list.iter().step_by(5) {
                let prod = r.mul(u, v);
                let word = SymbolWord {
                    factors: vec![
                        (vec![prod.clone(), w3.clone()], 1),
                        (vec![u.clone(), w3.clone()], -1),
                        (vec![v.clone(), w3.clone()], -1),
                    ],
                };
                assert!(k2.is_zero_word(&word).unwrap(), "multiplicative relation fails");
            }
        }
    }
    let r = f7te();
    let (_, units, _) = split_units(&r, &["e"]);
    let k2 = k_milnor(units, 2);
    let all: Vec<RingElement> = r.units_lex().to_vec();
    for u in all.iter().step_by(37) {
        let omu = r.sub(&r.one(), u);
        if r.is_unit(&omu) {
            let w = SymbolWord::symbol(vec![u.clone(), omu]);
            assert!(k2.is_zero_word(&w).unwrap());
        }
    }
}

#[test]
fn degree_three_identities_on_stable_rings() {
    let r = f7te();
    let (_, units, _) = split_units(&r, &["e"]);
    let k3 = k_milnor(units, 3);
    for which in [SymbolRelation::AdditiveInverse, SymbolRelation::Anticommutativity] {
        let check = check_symbol_relations(&k3, which, 1_000, 23).unwrap();
        assert!(check.ok, "{which:?}: {:?}", check.counterexample);
    }
}

#[test]
fn relative_k_milnor_examples() {
    // F7[e]/e^2: K2(R, I) is trivial.
    let r = f7e();
    let (_, units, base) = split_units(&r, &["e"]);
    let rel = relative_k_milnor(&units, &base, 2).unwrap();
    assert!(rel.kernel.is_trivial());
    // Degree 1: the kernel is (1+I)* = Z/7.
    let rel = relative_k_milnor(&units, &base, 1).unwrap();
    assert_eq!(rel.kernel.invariant_factors_u64(), vec![7]);

    // F7[t,e]/(t^2,e^2) over F7[t]/t^2 with I = (e): K2(R, I) = Z/7.
    let r = f7te();
    let (_, units, base) = split_units(&r, &["e"]);
    let rel = relative_k_milnor(&units, &base, 2).unwrap();
    assert_eq!(rel.kernel.invariant_factors_u64(), vec![7]);
    let rel = relative_k_milnor(&units, &base, 1).unwrap();
    assert_eq!(rel.kernel.invariant_factors_u64(), vec![7, 7]);
}

#[test]
fn symbol_relation_checks() {
    // Theorems hold on the stable rings.
    let r = f7();
    let s = unit_structure_auto(&r).unwrap();
    let k2 = k_milnor(s, 2);
    for which in [
        SymbolRelation::Idempotent,
        SymbolRelation::AdditiveInverse,
        SymbolRelation::Anticommutativity,
    ] {
        let check = check_symbol_relations(&k2, which, 10_000, 7).unwrap();
        assert!(check.ok, "{which:?} failed: {:?}", check.counterexample);
    }
    let r = f7te();
    let (_, units, _) = split_units(&r, &["e"]);
    let k2 = k_milnor(units, 2);
    for which in [SymbolRelation::AdditiveInverse, SymbolRelation::Anticommutativity] {
        let check = check_symbol_relations(&k2, which, 1_000, 11).unwrap();
        assert!(check.ok, "{which:?} failed: {:?}", check.counterexample);
    }

    // The naive K2 of Z/2[x]/x^2 violates the additive inverse relation:
    // {r, -r} = {r, r} generates the whole group.
    let r = f2x();
    let s = unit_structure_exhaustive(&r, 150).unwrap();
    let k2 = k_milnor(s, 2);
    let check = check_symbol_relations(&k2, SymbolRelation::AdditiveInverse, 100, 3).unwrap();
    assert!(!check.ok);
    assert!(check.counterexample.is_some());
}

#[test]
fn factor_relative_symbol_examples() {
    let r = f7e();
    let (ext, units, base) = split_units(&r, &["e"]);
    let rel = relative_k_milnor(&units, &base, 2).unwrap();
    // {3(1+e), 5} is relative iff its S-part {3, 5} dies; K2(F7) = 0.
    let a = parse_element(&r, "3+3e").unwrap();
    let b = parse_element(&r, "5").unwrap();
    let word = factor_relative_symbol(&ext, &rel, &[a.clone(), b.clone()]).unwrap();
    assert_eq!(word.factors.len(), 3);
    let orig = rel.ambient.encode_symbol(&[a, b]).unwrap();
    let orig: Vec<BigInt> = orig.iter().map(|&c| BigInt::from(c)).collect();
    let refactored = rel.ambient.encode_word(&word).unwrap();
    assert!(rel.ambient.group.elements_equal(&orig, &refactored));
    // Every factor has an entry in (1+I)*.
    for (entries, _) in &word.factors {
        assert!(entries.iter().any(|e| ext.is_one_plus_ideal(e)));
    }
}

#[test]
fn dennis_stein_basics() {
    // <0, b> must die in the presented group.
    let r = f7();
    let d = dennis_stein(&r, DEFAULT_RELATION_BUDGET).unwrap();
    assert!(d.group.is_trivial(), "D2(F7) should be trivial");
    let coords = d.encode_symbol(&r.zero(), &r.from_integer(3)).unwrap();
    assert!(d.group.is_zero_element(&coords));

    // D2 of the dual numbers over F7 is trivial, like K2.
    let r = f7e();
    let d = dennis_stein(&r, DEFAULT_RELATION_BUDGET).unwrap();
    assert!(d.group.is_trivial());

    // The budget is enforced.
    let r = f7te();
    assert!(matches!(
        dennis_stein(&r, 1000),
        Err(MilnorError::TooLarge(_))
    ));
}

#[test]
fn dennis_stein_relative_of_f2x() {
    // D2(Z/2[x]/x^2, (x)) = Ker(D2(R) -> D2(F2)).
    let r = f2x();
    let x = parse_element(&r, "x").unwrap();
    let ext = split_extension(r.clone(), vec![x]).unwrap();
    let d_r = dennis_stein(&r, DEFAULT_RELATION_BUDGET).unwrap();
    let d_s = dennis_stein(&ext.subring, DEFAULT_RELATION_BUDGET).unwrap();
    let proj = dennis_stein_projection(&ext, &d_r, &d_s).unwrap();
    let (kernel, _) = proj.kernel();
    // K2 of the dual numbers over a perfect field of characteristic 2
    // vanishes, and D2(R, I) = K2(R, I) for split radical extensions.
    assert!(kernel.is_trivial());
    // The naive Milnor K2 is Z/2 here, so the two genuinely differ.
    let s = unit_structure_exhaustive(&r, 150).unwrap();
    let k2 = k_milnor(s, 2);
    assert_eq!(k2.group.invariant_factors_u64(), vec![2]);
}

#[test]
fn vdk_maps_are_mutually_inverse_on_stable_rings() {
    for text in ["char = 7\n", "char = 11\n", "char = 7\nvars = [\"e\"]\nrewrites = [\"e^2 -> 0\"]\n"] {
        let r = ring_from(text);
        let units = unit_structure_auto(&r).unwrap();
        let k2 = k_milnor(units, 2);
        let d2 = dennis_stein(&r, DEFAULT_RELATION_BUDGET).unwrap();
        assert_eq!(
            k2.group.order().unwrap(),
            d2.group.order().unwrap(),
            "orders differ on {text}"
        );
        let (k_to_d, d_to_k) = vdk_maps(&k2, &d2).unwrap();
        assert!(k_to_d.compose(&d_to_k).identity_witness().is_none());
        assert!(d_to_k.compose(&k_to_d).identity_witness().is_none());
    }
}

#[test]
fn vdk_example_image() {
    // {1+e, u} -> <e u^{-1}, u> in F7[e]/e^2.
    let r = f7e();
    let units = unit_structure_auto(&r).unwrap();
    let k2 = k_milnor(units, 2);
    let d2 = dennis_stein(&r, DEFAULT_RELATION_BUDGET).unwrap();
    let (k_to_d, _) = vdk_maps(&k2, &d2).unwrap();
    let one_e = parse_element(&r, "1+e").unwrap();
    let u = parse_element(&r, "3").unwrap();
    let sym = k2.encode_word(&SymbolWord::symbol(vec![one_e, u.clone()])).unwrap();
    let image = k_to_d.apply(&sym);
    let e = parse_element(&r, "e").unwrap();
    let a = r.mul(&e, &r.invert(&u).unwrap());
    let direct = d2.encode_symbol(&a, &u).unwrap();
    assert!(d2.group.elements_equal(&image, &direct));
    // <a, b> with ab = 0 maps to {1, b} = 0.
    let word = dennis_stein_to_steinberg(&r, &e, &e).unwrap();
    assert!(k2.is_zero_word(&word).unwrap());
}

#[test]
fn dlog_hom_examples() {
    // dlog on K1 of the dual numbers: {1+e} -> de.
    let r = f7e();
    let units = unit_structure_auto(&r).unwrap();
    let k1 = k_milnor(units.clone(), 1);
    let om1 = omega_n(r.clone(), 1);
    let d = dlog_hom(&k1, &om1).unwrap();
    let one_e = parse_element(&r, "1+e").unwrap();
    let sym = k1.encode_word(&SymbolWord::symbol(vec![one_e])).unwrap();
    let image = d.apply(&sym);
    let e = parse_element(&r, "e").unwrap();
    let de = om1
        .encode_form(&crate::kahler::FormalDifferential::term(r.one(), vec![e]))
        .unwrap();
    assert!(om1.group.elements_equal(&image, &de));
    // Prime-field constants die: dlog {a} = da/a = 0.
    let f7 = f7();
    let u7 = unit_structure_auto(&f7).unwrap();
    let k1 = k_milnor(u7, 1);
    let om = omega_n(f7.clone(), 1);
    let d = dlog_hom(&k1, &om).unwrap();
    for i in 0..k1.ngens() {
        assert!(om.group.is_zero_element(d.images().row(i)));
    }
}

#[test]
fn dlog_kills_steinberg_relations() {
    // Well-definedness of dlog on K2 is exactly the statement that every
    // Steinberg generator maps to zero; the checked constructor proves it.
    for r in [f7(), f7e(), f7te()] {
        let units = unit_structure_auto(&r).unwrap();
        let k2 = k_milnor(units, 2);
        let om2 = omega_n(r.clone(), 2);
        assert!(dlog_hom(&k2, &om2).is_ok(), "dlog not defined on {}", r.spec.name);
    }
}
