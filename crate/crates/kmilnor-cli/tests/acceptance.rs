//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test -p kmilnor-cli --test acceptance`.

use kmilnor_core::fring::parse::{build_ring_from_file, parse_element};
use kmilnor_core::fring::stability::{
    is_m_fold_stable_criterion, is_m_fold_stable_exact, DEFAULT_EXACT_CAP,
};
use kmilnor_core::fring::{split_extension, FiniteRing, RingSpec, SplitExtension};
use kmilnor_core::goodwillie::basecase::base_case_composites;
use kmilnor_core::goodwillie::patching::PatchChecker;
use kmilnor_core::goodwillie::{verify_theorem, TheoremInstance, TheoremOptions};
use kmilnor_core::kahler::{brute_omega_invariants, de_rham_hom, omega_n};
use kmilnor_core::milnork::{
    check_symbol_relations, dlog_hom, k_milnor, steinberg_pair_generators, unit_structure_auto,
    SymbolRelation, SymbolWord,
};
use std::sync::Arc;
use std::time::Instant;

fn ring_file(name: &str) -> String {
    let path = format!("{}/../../rings/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).expect("ring file")
}

fn extension_from(name: &str) -> Arc<SplitExtension> {
    let text = ring_file(name);
    let (ring, gens) = build_ring_from_file(&text, name).expect("ring");
    split_extension(ring, gens).expect("extension")
}

fn ring_from_text(text: &str) -> Arc<FiniteRing> {
    build_ring_from_file(text, "test").expect("ring").0
}

fn verdict(name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {name}: {} {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {name} failed: {detail}");
}

fn verify(name: &str, n: usize) -> TheoremInstance {
    let ext = extension_from(name);
    verify_theorem(&ext, n, name, &TheoremOptions::default()).expect("pipeline")
}

#[test]
fn criterion_01_main_theorem_nontrivial() {
    let started = Instant::now();
    let inst = verify("f7te.toml", 1);
    let elapsed = started.elapsed();
    let ok = inst.report.verdict == "PASS"
        && inst.report.lhs_invariants == vec![7]
        && inst.report.rhs_invariants == vec![7]
        && inst.report.phi_well_defined
        && inst.report.psi_well_defined
        && inst.report.roundtrip_ok
        && inst.report.oracle_isomorphic
        && elapsed.as_secs() < 60;
    verdict(
        "1 (main theorem, nontrivial)",
        ok,
        &format!(
            "K2(R,I) = {:?}, quotient = {:?}, {:?}",
            inst.report.lhs_invariants, inst.report.rhs_invariants, elapsed
        ),
    );
}

#[test]
fn criterion_02_main_theorem_collapsing() {
    let started = Instant::now();
    let inst = verify("f7e2.toml", 1);
    let elapsed = started.elapsed();
    let ok = inst.report.verdict == "PASS"
        && inst.report.lhs_invariants.is_empty()
        && inst.report.rhs_invariants.is_empty()
        && elapsed.as_secs() < 5;
    verdict(
        "2 (main theorem, collapsing)",
        ok,
        &format!("both sides trivial, {elapsed:?}"),
    );
}

#[test]
fn criterion_03_degree_two() {
    let started = Instant::now();
    let inst = verify("f7te_te.toml", 2);
    let elapsed = started.elapsed();
    let ok = inst.report.verdict == "PASS"
        && inst.ext.nilpotency == 3
        && inst.report.lhs_invariants.is_empty()
        && inst.report.rhs_invariants.is_empty()
        && inst.report.phi_well_defined
        && elapsed.as_secs() < 600;
    verdict(
        "3 (degree two, N = 3)",
        ok,
        &format!("both sides trivial, phi relations vanish, {elapsed:?}"),
    );
}

#[test]
fn criterion_04_extended_degree_two() {
    let started = Instant::now();
    let inst = verify("f7uv.toml", 2);
    let elapsed = started.elapsed();
    // Expected value: Omega^2 of S = F7[t,u]/(t,u)^2, which is Z/7.
    let s_omega2 = omega_n(inst.ext.subring.clone(), 2);
    let expected = s_omega2.group.invariant_factors_u64();
    let ok = inst.report.verdict == "PASS"
        && inst.report.lhs_invariants == expected
        && inst.report.rhs_invariants == expected
        && expected == vec![7]
        && elapsed.as_secs() < 1800;
    verdict(
        "4 (extended degree two, 7^6 elements)",
        ok,
        &format!(
            "K3(R,I) = {:?} = Omega^2(S) = {:?}, {:?}",
            inst.report.lhs_invariants, expected, elapsed
        ),
    );
}

#[test]
fn criterion_05_paper_example() {
    let started = Instant::now();
    let text = ring_file("f2x.toml");
    let (ring, _) = build_ring_from_file(&text, "f2x").expect("ring");
    let units = unit_structure_auto(&ring).expect("units");
    let steinberg = steinberg_pair_generators(&units);
    let k2 = k_milnor(units, 2);
    let r = parse_element(&ring, "1+x").expect("element");
    let generator = SymbolWord::symbol(vec![r.clone(), r]);
    let nonzero = !k2.is_zero_word(&generator).expect("encode");
    let elapsed = started.elapsed();
    let ok = k2.group.invariant_factors_u64() == vec![2]
        && steinberg.is_empty()
        && nonzero
        && elapsed.as_millis() < 1000;
    verdict(
        "5 (K2 of Z/2[x]/x^2)",
        ok,
        &format!(
            "K2 = {:?}, Steinberg set empty = {}, {{1+x,1+x}} nonzero = {nonzero}, {elapsed:?}",
            k2.group.invariant_factors_u64(),
            steinberg.is_empty()
        ),
    );
}

#[test]
fn criterion_06_base_case_bridge() {
    // Every catalog extension where the Dennis-Stein enumeration is
    // feasible and the ring satisfies the stability hypothesis the
    // bridge theorems need.
    let started = Instant::now();
    let mut detail = String::new();
    let mut ok = true;
    for name in ["f7e2.toml", "f7e3.toml", "f9e.toml", "f7v2.toml", "f7v2_te.toml"] {
        let inst = verify(name, 1);
        assert!(
            is_m_fold_stable_criterion(&inst.ext.ring, 5).expect("criterion").stable,
            "bridge rings are 5-fold stable"
        );
        let bridge = base_case_composites(&inst, 300_000_000).expect("bridge");
        let this_ok = bridge.k2_order == bridge.d2_order
            && bridge.vdk_mutually_inverse
            && bridge.relative_orders_equal
            && bridge.relative_symbols_span
            && bridge.phi_composite_equal
            && bridge.psi_composite_equal
            && bridge.anticommutativity_in_d2;
        detail.push_str(&format!("{name}: |K2| = |D2| = {}; ", bridge.k2_order));
        ok &= this_ok;
    }
    let elapsed = started.elapsed();
    ok &= elapsed.as_secs() < 120;
    verdict("6 (Dennis-Stein bridge)", ok, &format!("{detail}{elapsed:?}"));
}

#[test]
fn criterion_07_relation_theorem_suite() {
    let mut ok = true;
    let mut detail = String::new();
    // Symbol identities in the computed K-groups of every 5-fold stable
    // catalog ring: exhaustive below 7^4 elements, sampled beyond.
    let stable_rings = [
        ("f7", "name = \"f7\"\nchar = 7\n"),
        ("f11", "name = \"f11\"\nchar = 11\n"),
        (
            "f7e2",
            "char = 7\nvars = [\"e\"]\nrewrites = [\"e^2 -> 0\"]\n",
        ),
        (
            "f7e3",
            "char = 7\nvars = [\"e\"]\nrewrites = [\"e^3 -> 0\"]\n",
        ),
        (
            "f9e",
            "char = 3\nvars = [\"w\", \"e\"]\nrewrites = [\"w^2 -> w + 1\", \"e^2 -> 0\"]\n",
        ),
        (
            "f7v2",
            "char = 7\nvars = [\"t\", \"e\"]\nrewrites = [\"t^2 -> 0\", \"t*e -> 0\", \"e^2 -> 0\"]\n",
        ),
        (
            "f7te",
            "char = 7\nvars = [\"t\", \"e\"]\nrewrites = [\"t^2 -> 0\", \"e^2 -> 0\"]\n",
        ),
        (
            "f7uv",
            "char = 7\nvars = [\"t\", \"u\", \"e\"]\nrewrites = [\"t^2 -> 0\", \"t*u -> 0\", \"u^2 -> 0\", \"e^2 -> 0\"]\n",
        ),
    ];
    for (name, text) in stable_rings {
        let ring = ring_from_text(text);
        assert!(is_m_fold_stable_criterion(&ring, 5).expect("criterion").stable);
        let units = unit_structure_auto(&ring).expect("units");
        let k2 = k_milnor(units, 2);
        let budget = if ring.order() <= 2401 { 5_000_000 } else { 1_000 };
        for which in [
            SymbolRelation::Idempotent,
            SymbolRelation::AdditiveInverse,
            SymbolRelation::Anticommutativity,
        ] {
            let check = check_symbol_relations(&k2, which, budget, 7).expect("check");
            if !check.ok {
                ok = false;
                detail.push_str(&format!(
                    "{name} {} counterexample {:?}; ",
                    which.as_str(),
                    check.counterexample
                ));
            }
        }
        // dlog kills every Steinberg generator (checked constructor).
        let om2 = omega_n(ring.clone(), 2);
        if dlog_hom(&k2, &om2).is_err() {
            ok = false;
            detail.push_str(&format!("{name}: dlog not well defined; "));
        }
        // d after d vanishes.
        let m0 = omega_n(ring.clone(), 0);
        let m1 = omega_n(ring.clone(), 1);
        let d0 = de_rham_hom(&m0, &m1).expect("d");
        let d1 = de_rham_hom(&m1, &om2).expect("d");
        let dd = d0.compose(&d1);
        if !(0..m0.ngens()).all(|i| om2.group.is_zero_element(dd.images().row(i))) {
            ok = false;
            detail.push_str(&format!("{name}: d.d != 0; "));
        }
    }
    // exp/log are mutually inverse on I <-> (1+I)* for the extensions.
    for name in [
        "f2x.toml",
        "f7e2.toml",
        "f7e3.toml",
        "f9e.toml",
        "f7v2.toml",
        "f7te.toml",
        "f7te_te.toml",
        "f7uv.toml",
    ] {
        let ext = extension_from(name);
        if ext.ideal_order() > 10_000 {
            continue;
        }
        let mut seen = std::collections::HashSet::new();
        for i in ext.ideal_elements() {
            let u = ext.exp_trunc(&i).expect("exp");
            let back = ext.log_trunc(&u).expect("log");
            if back != i || !seen.insert(u) {
                ok = false;
                detail.push_str(&format!("{name}: exp/log mismatch; "));
                break;
            }
        }
    }
    verdict("7 (relation theorem suite)", ok, &detail);
}

#[test]
fn criterion_08_oracle_equivalences() {
    let mut ok = true;
    let mut detail = String::new();
    // Conormal presentation vs the all-elements oracle on every suite
    // ring with at most 32 elements, degrees 0..2.
    let small_rings = [
        ("f2", "char = 2\n"),
        ("f3", "char = 3\n"),
        ("f5", "char = 5\n"),
        ("f7", "char = 7\n"),
        ("f11", "char = 11\n"),
        ("f9", "char = 3\nvars = [\"w\"]\nrewrites = [\"w^2 -> w + 1\"]\n"),
        ("f2x", "char = 2\nvars = [\"x\"]\nrewrites = [\"x^2 -> 0\"]\n"),
        (
            "f2xy",
            "char = 2\nvars = [\"x\", \"y\"]\nrewrites = [\"x^2 -> 0\", \"y^2 -> 0\"]\n",
        ),
    ];
    for (name, text) in small_rings {
        let ring = ring_from_text(text);
        assert!(ring.order() <= 32);
        for n in 0..=2usize {
            let brute = brute_omega_invariants(&ring, n, 40_000).expect("oracle");
            let conormal = omega_n(ring.clone(), n).group.invariant_factors();
            if brute != conormal {
                ok = false;
                detail.push_str(&format!("{name} degree {n}: {brute:?} vs {conormal:?}; "));
            }
        }
    }
    // Exact stability agrees with the residue criterion.
    for p in [2u64, 3, 5, 7] {
        let ring = kmilnor_core::fring::build_ring(RingSpec {
            name: format!("f{p}"),
            characteristic: p,
            vars: vec![],
            rewrites: vec![],
        })
        .expect("field");
        for m in 1..=2u32 {
            let exact = is_m_fold_stable_exact(&ring, m, DEFAULT_EXACT_CAP).expect("exact");
            let crit = is_m_fold_stable_criterion(&ring, m).expect("criterion");
            if exact.stable != crit.stable {
                ok = false;
                detail.push_str(&format!("F{p} m={m} modes disagree; "));
            }
        }
    }
    // Smith normal form: invariant factor product = |det| on 1000 random
    // nonsingular 4x4 matrices.
    {
        use kmilnor_core::abgroup::{smith_normal_form, IntMatrix};
        use num_bigint::BigInt;
        use num_traits::Signed;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut trials = 0;
        while trials < 1000 {
            let rows: Vec<Vec<i64>> = (0..4)
                .map(|_| (0..4).map(|_| rng.gen_range(-30i64..=30)).collect())
                .collect();
            let m = IntMatrix::from_i64_rows(4, &rows);
            let det = m.determinant().abs();
            if num_traits::Zero::is_zero(&det) {
                continue;
            }
            trials += 1;
            let s = smith_normal_form(&m);
            let prod: BigInt = s.diag.iter().product();
            if prod != det {
                ok = false;
                detail.push_str("SNF determinant mismatch; ");
                break;
            }
        }
    }
    verdict("8 (oracle equivalences)", ok, &detail);
}

#[test]
fn criterion_09_patching_identity() {
    let ext = extension_from("f7te.toml");
    let checker = PatchChecker::new(&ext, 2).expect("checker");
    let mut ok = true;
    let mut detail = String::new();
    // Degree n = 2 admits the single pair (j, k) = (1, 2).
    for (j, k) in [(1usize, 2usize)] {
        let opts = TheoremOptions {
            seed: 42,
            ..TheoremOptions::default()
        };
        let report = checker.run(j, k, 100, &opts).expect("patching");
        if !report.ok {
            ok = false;
            detail.push_str(&format!(
                "(j={j}, k={k}) counterexample {:?}; ",
                report.counterexample
            ));
        } else {
            detail.push_str(&format!("(j={j},k={k}): {} samples ok; ", report.samples));
        }
    }
    verdict("9 (patching identity)", ok, &detail);
}

#[test]
fn criterion_10_determinism_across_threads() {
    let bin = env!("CARGO_BIN_EXE_kmilnor");
    let dir = std::env::temp_dir().join(format!("kmilnor-acc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let mut outputs = Vec::new();
    for threads in [1u32, 4, 8] {
        let path = dir.join(format!("suite-{threads}.json"));
        let status = std::process::Command::new(bin)
            .args([
                "suite",
                "--seed",
                "17",
                "--threads",
                &threads.to_string(),
                "--json",
            ])
            .arg(&path)
            .status()
            .expect("run suite");
        assert!(status.success(), "suite failed at {threads} threads");
        let text = std::fs::read_to_string(&path).expect("suite json");
        let stripped: String = text
            .lines()
            .filter(|l| !l.contains("elapsed_ms"))
            .collect::<Vec<_>>()
            .join("\n");
        outputs.push(stripped);
    }
    let ok = outputs[0] == outputs[1] && outputs[1] == outputs[2];
    std::fs::remove_dir_all(&dir).ok();
    verdict(
        "10 (determinism across 1/4/8 threads)",
        ok,
        "suite JSON identical minus timing fields",
    );
}
