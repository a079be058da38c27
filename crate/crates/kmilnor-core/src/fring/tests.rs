use super::parse::parse_element;
use super::*;

pub(crate) fn ring_from(text: &str) -> Arc<FiniteRing> {
    super::parse::build_ring_from_file(text, "test").unwrap().0
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

#[test]
fn dual_numbers_over_f2() {
    let r = f2x();
    assert_eq!(r.order(), 4);
    assert_eq!(r.basis_size(), 2);
    assert_eq!(r.unit_count(), 2);
    let x = parse_element(&r, "x").unwrap();
    let one_x = parse_element(&r, "1+x").unwrap();
    assert!(r.is_unit(&one_x));
    assert!(!r.is_unit(&x));
    assert!(r.invert(&x).is_none());
}

#[test]
fn prime_field_f7() {
    let r = f7();
    assert_eq!(r.order(), 7);
    assert_eq!(r.unit_count(), 6);
    let three = r.from_integer(3);
    let five = r.from_integer(5);
    assert_eq!(r.invert(&three), Some(five));
}

#[test]
fn unit_count_of_f7te_by_enumeration() {
    let r = f7te();
    assert_eq!(r.order(), 2401);
    // Units are exactly the elements with invertible constant term.
    let by_enumeration = r
        .elements()
        .filter(|e| r.is_unit(e))
        .count();
    assert_eq!(by_enumeration, 2058);
    assert_eq!(r.unit_count(), 2058);
}

#[test]
fn inverse_in_dual_numbers() {
    let r = f7e();
    let u = parse_element(&r, "1+e").unwrap();
    let inv = r.invert(&u).unwrap();
    assert_eq!(inv, parse_element(&r, "1+6e").unwrap());
}

#[test]
fn nonterminating_and_inconsistent_specs_fail() {
    let r = super::parse::build_ring_from_file(
        "char = 5\nvars = [\"x\"]\nrewrites = [\"x^2 -> x^2\"]\n",
        "bad",
    );
    assert!(matches!(
        r,
        Err(FringError::InconsistentSpec(_)) | Err(FringError::NonTerminatingRewrite { .. })
    ));
    // Degree-1 left-hand side is rejected.
    let r = super::parse::build_ring_from_file(
        "char = 5\nvars = [\"x\"]\nrewrites = [\"x -> 0\"]\n",
        "bad",
    );
    assert!(r.is_err());
}

#[test]
fn f9_has_a_nontrivial_reduction_target() {
    // F9 = Z/3[w]/(w^2 - w - 1): rewrite with a nonzero right-hand side.
    let r = ring_from("char = 3\nvars = [\"w\"]\nrewrites = [\"w^2 -> w + 1\"]\n");
    assert_eq!(r.order(), 9);
    assert_eq!(r.unit_count(), 8);
    let w = parse_element(&r, "w").unwrap();
    let wsq = r.mul(&w, &w);
    assert_eq!(wsq, parse_element(&r, "w + 1").unwrap());
}

#[test]
fn split_extension_examples() {
    // F7[e]/e^2 over F7.
    let r = f7e();
    let e = parse_element(&r, "e").unwrap();
    let ext = split_extension(r.clone(), vec![e]).unwrap();
    assert_eq!(ext.nilpotency, 2);
    assert_eq!(ext.subring.order(), 7);
    assert_eq!(ext.ideal_monomials.len(), 1);

    // F7[t,e]/(t^2, e^2) with I = (t, e): N = 3 since te != 0.
    let r = f7te();
    let t = parse_element(&r, "t").unwrap();
    let e = parse_element(&r, "e").unwrap();
    let ext = split_extension(r.clone(), vec![t, e]).unwrap();
    assert_eq!(ext.nilpotency, 3);
    assert_eq!(ext.subring.order(), 7);
    assert_eq!(ext.ideal_monomials.len(), 3);

    // Same ring with I = (e): span {e, te}, square zero.
    let e = parse_element(&r, "e").unwrap();
    let ext = split_extension(r.clone(), vec![e]).unwrap();
    assert_eq!(ext.nilpotency, 2);
    assert_eq!(ext.ideal_monomials.len(), 2);
    assert_eq!(ext.subring.order(), 49);
}

#[test]
fn projection_section_and_units() {
    let r = f7te();
    let e = parse_element(&r, "e").unwrap();
    let ext = split_extension(r.clone(), vec![e]).unwrap();
    // projection . section = identity on S.
    for s in ext.subring.elements() {
        assert_eq!(ext.project(&ext.section(&s)), s);
    }
    // r is a unit iff its projection is a unit in S.
    for x in r.elements() {
        assert_eq!(r.is_unit(&x), ext.subring.is_unit(&ext.project(&x)));
    }
    // projection is a ring homomorphism (sampled over all pairs of a slice).
    let elems: Vec<RingElement> = r.elements().take(120).collect();
    for a in &elems {
        for b in &elems {
            assert_eq!(
                ext.project(&r.mul(a, b)),
                ext.subring.mul(&ext.project(a), &ext.project(b))
            );
        }
    }
}

#[test]
fn sum_of_two_units_examples() {
    let r = f7();
    let (u, v) = sum_of_two_units(&r, &r.zero()).unwrap();
    assert_eq!(u, r.from_integer(1));
    assert_eq!(v, r.from_integer(6));

    let r = f7e();
    let e = parse_element(&r, "e").unwrap();
    let (u, v) = sum_of_two_units(&r, &e).unwrap();
    assert_eq!(u, r.one());
    assert_eq!(v, parse_element(&r, "6 + e").unwrap());

    let f2 = ring_from("char = 2\n");
    assert!(matches!(
        sum_of_two_units(&f2, &f2.one()),
        Err(FringError::NoDecomposition)
    ));
}

#[test]
fn sum_of_two_units_total_on_stable_rings() {
    // On a 2-fold stable ring with 2 invertible, every element decomposes.
    for text in [
        "char = 7\n",
        "char = 7\nvars = [\"e\"]\nrewrites = [\"e^2 -> 0\"]\n",
        "char = 3\nvars = [\"w\"]\nrewrites = [\"w^2 -> w + 1\"]\n",
    ] {
        let r = ring_from(text);
        for x in r.elements() {
            let (u, v) = sum_of_two_units(&r, &x).unwrap();
            assert_eq!(r.add(&u, &v), x);
        }
    }
}

#[test]
fn log_and_exp_truncate() {
    // N = 2: series stop after the linear term.
    let r = f7e();
    let e = parse_element(&r, "e").unwrap();
    let ext = split_extension(r.clone(), vec![e.clone()]).unwrap();
    let one_e = parse_element(&r, "1+e").unwrap();
    assert_eq!(ext.log_trunc(&one_e).unwrap(), e);
    assert_eq!(ext.exp_trunc(&e).unwrap(), one_e);

    // N = 3: log(1+e) = e + 3e^2 over F7 since -1/2 = 3 (mod 7).
    let r = ring_from("char = 7\nvars = [\"e\"]\nrewrites = [\"e^3 -> 0\"]\n");
    let e = parse_element(&r, "e").unwrap();
    let ext = split_extension(r.clone(), vec![e.clone()]).unwrap();
    assert_eq!(ext.nilpotency, 3);
    let one_e = parse_element(&r, "1+e").unwrap();
    let log = ext.log_trunc(&one_e).unwrap();
    assert_eq!(log, parse_element(&r, "e + 3e^2").unwrap());
    assert_eq!(ext.exp_trunc(&log).unwrap(), one_e);
}

#[test]
fn log_fails_without_invertible_denominators() {
    // F2[x,y]/(x^2, y^2) with I = (x, y): N = 3 needs 2 invertible.
    let r = ring_from("char = 2\nvars = [\"x\", \"y\"]\nrewrites = [\"x^2 -> 0\", \"y^2 -> 0\"]\n");
    let x = parse_element(&r, "x").unwrap();
    let y = parse_element(&r, "y").unwrap();
    let ext = split_extension(r.clone(), vec![x.clone(), y]).unwrap();
    assert_eq!(ext.nilpotency, 3);
    let u = r.add(&r.one(), &x);
    assert!(matches!(
        ext.log_trunc(&u),
        Err(FringError::NonInvertibleDenominator { k: 2 })
    ));
}

#[test]
fn exp_log_are_mutually_inverse_bijections() {
    for text in [
        "char = 7\nvars = [\"e\"]\nrewrites = [\"e^3 -> 0\"]\n",
        "char = 7\nvars = [\"t\", \"e\"]\nrewrites = [\"t^2 -> 0\", \"e^2 -> 0\"]\n",
    ] {
        let r = ring_from(text);
        let gens: Vec<RingElement> = r
            .spec
            .vars
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let m = Monomial::var(r.spec.vars.len(), i);
                r.basis_element(r.monomial_index(&m).unwrap())
            })
            .collect();
        let ext = split_extension(r.clone(), gens).unwrap();
        let mut seen = std::collections::HashSet::new();
        for i in ext.ideal_elements() {
            let u = ext.exp_trunc(&i).unwrap();
            assert!(ext.is_one_plus_ideal(&u));
            assert!(r.is_unit(&u));
            assert_eq!(ext.log_trunc(&u).unwrap(), i);
            assert!(seen.insert(u));
        }
        assert_eq!(seen.len() as u64, ext.ideal_order());
        // exp is a homomorphism from (I, +) to (1+I)*.
        let ideals = ext.ideal_elements();
        for a in ideals.iter().take(20) {
            for b in ideals.iter().take(20) {
                let lhs = ext.exp_trunc(&r.add(a, b)).unwrap();
                let rhs = r.mul(&ext.exp_trunc(a).unwrap(), &ext.exp_trunc(b).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }
}

#[test]
fn ring_laws_hold_on_samples() {
    for text in [
        "char = 2\nvars = [\"x\"]\nrewrites = [\"x^2 -> 0\"]\n",
        "char = 7\nvars = [\"t\", \"e\"]\nrewrites = [\"t^2 -> 0\", \"e^2 -> 0\"]\n",
        "char = 3\nvars = [\"w\"]\nrewrites = [\"w^2 -> w + 1\"]\n",
        "char = 6\n",
    ] {
        let r = ring_from(text);
        let elems: Vec<RingElement> = if r.order() <= 256 {
            r.elements().collect()
        } else {
            r.elements().step_by(17).take(40).collect()
        };
        for a in &elems {
            for b in &elems {
                assert_eq!(r.mul(a, b), r.mul(b, a));
                for c in &elems {
                    assert_eq!(r.mul(&r.mul(a, b), c), r.mul(a, &r.mul(b, c)));
                    assert_eq!(
                        r.mul(a, &r.add(b, c)),
                        r.add(&r.mul(a, b), &r.mul(a, c))
                    );
                }
            }
        }
    }
}

#[test]
fn stability_is_inherited_by_split_extensions() {
    use super::stability::*;
    // S = F7 is 2-fold stable; so are its split nilpotent extensions.
    for text in [
        "char = 7\n",
        "char = 7\nvars = [\"e\"]\nrewrites = [\"e^2 -> 0\"]\n",
    ] {
        let r = ring_from(text);
        for m in 1..=2 {
            let rep = is_m_fold_stable_exact(&r, m, DEFAULT_EXACT_CAP).unwrap();
            assert!(rep.stable, "{text} m={m}");
        }
    }
    // The 2401-element extension stays within the cap only for m = 1.
    let r = f7te();
    let rep = is_m_fold_stable_exact(&r, 1, DEFAULT_EXACT_CAP).unwrap();
    assert!(rep.stable);
    assert!(matches!(
        is_m_fold_stable_exact(&r, 2, DEFAULT_EXACT_CAP),
        Err(FringError::TooLarge(_))
    ));
}

#[test]
fn criterion_detects_local_rings() {
    use super::stability::*;
    let r = f7te();
    assert!(is_local(&r));
    let rep = is_m_fold_stable_criterion(&r, 5).unwrap();
    assert!(rep.stable);
    match rep.certificate {
        StabilityCertificate::ResidueFields(sizes) => assert_eq!(sizes, vec![7]),
        _ => panic!("expected residue fields"),
    }
}
