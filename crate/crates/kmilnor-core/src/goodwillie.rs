//! Construction and verification of the isomorphism between the relative
//! Milnor K-group of a split nilpotent extension and the corresponding
//! quotient of absolute Kähler differentials.
//!
//! phi sends {r_0, r_1, .., r_n} with r_0 in (1+I)* to
//! log(r_0) dr_1/r_1 ^ .. ^ dr_n/r_n; psi sends r_0 dr_1 ^ .. ^ dr_n with
//! the leading entries in I and the rest units to
//! {e^{r_0 u-product}, e^{ideal entries}, unit entries}. Both maps are
//! built on explicit generating families and certified well defined by the
//! homomorphism constructor; an independent Smith-normal-form pipeline
//! supplies the invariant factors of both sides.

pub mod basecase;
pub mod patching;

use crate::abgroup::{
    smith_normal_form, solve_in_lattice, subgroup_presentation, subgroup_spans_equal, AbGroupError,
    AbHom, FPAbGroup, IntMatrix, Smith,
};
use crate::fring::stability::{
    is_m_fold_stable, StabilityMode, StabilityReport, DEFAULT_EXACT_CAP,
};
use crate::fring::{FringError, RingElement, SplitExtension};
use crate::kahler::{omega_quotient, KahlerError, OmegaQuotient};
use crate::milnork::{
    relative_k_milnor, unit_structure_auto, unit_structure_split, MilnorError, RelativeKMilnor,
    SymbolWord, UnitGroupStructure,
};
use crate::report::VerifyReport;
use num_bigint::BigInt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GoodwillieError {
    #[error(transparent)]
    Ring(#[from] FringError),
    #[error(transparent)]
    Group(#[from] AbGroupError),
    #[error(transparent)]
    Milnor(#[from] MilnorError),
    #[error(transparent)]
    Kahler(#[from] KahlerError),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Clone, Debug)]
pub struct TheoremOptions {
    /// Stability parameter; the theorem uses 5 but it stays adjustable.
    pub stability_m: u32,
    /// None picks exact mode when it fits the cap, else the criterion.
    pub stability_mode: Option<StabilityMode>,
    pub exact_cap: u64,
    pub seed: u64,
}

impl Default for TheoremOptions {
    fn default() -> Self {
        TheoremOptions {
            stability_m: 5,
            stability_mode: None,
            exact_cap: DEFAULT_EXACT_CAP,
            seed: 1,
        }
    }
}

/// Relative Milnor K-group presented on the symbol family
/// { {g_{i_0}, .., g_{i_n}} : some i_k indexes a (1+I)* factor }.
pub struct RelativeKPresentation {
    pub ext: Arc<SplitExtension>,
    pub rel: RelativeKMilnor,
    /// Factor-index tuples with at least one ideal-block index.
    pub family: Vec<Vec<u8>>,
    pub family_rows: IntMatrix,
    pub group: Arc<FPAbGroup>,
    pub spans: bool,
    solve_smith: Smith,
}

impl RelativeKPresentation {
    pub fn new(
        ext: &Arc<SplitExtension>,
        units: &Arc<UnitGroupStructure>,
        base: &Arc<UnitGroupStructure>,
        degree: usize,
    ) -> Result<Self, GoodwillieError> {
        let rel = relative_k_milnor(units, base, degree)?;
        let s_block = units.s_block;
        let mut family = Vec::new();
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for tuple in &rel.ambient.tuples {
            if tuple.iter().any(|&i| (i as usize) >= s_block) {
                let entries: Vec<RingElement> = tuple
                    .iter()
                    .map(|&i| units.generators[i as usize].clone())
                    .collect();
                let coords = rel.ambient.encode_symbol(&entries)?;
                let row: Vec<BigInt> = coords.iter().map(|&c| BigInt::from(c)).collect();
                family.push(tuple.clone());
                rows.push(row);
            }
        }
        let family_rows = IntMatrix::from_rows(rel.ambient.ngens(), rows);
        let kernel_rows = {
            let incl = rel.inclusion.images();
            crate::abgroup::row_basis_bigint(
                rel.ambient.ngens(),
                (0..incl.rows()).map(|i| incl.row(i).to_vec()),
            )
        };
        let spans = subgroup_spans_equal(&rel.ambient.group, &family_rows, &kernel_rows);
        let (group, _) = subgroup_presentation(&rel.ambient.group, &family_rows);
        let solve_smith = smith_normal_form(&IntMatrix::stack(
            &family_rows,
            rel.ambient.group.relations(),
        ));
        Ok(RelativeKPresentation {
            ext: ext.clone(),
            rel,
            family,
            family_rows,
            group: Arc::new(group),
            spans,
            solve_smith,
        })
    }

    /// Expresses an ambient K-coordinate vector over the family generators;
    /// None when it lies outside the relative subgroup.
    pub fn solve_family_coords(&self, ambient: &[BigInt]) -> Option<Vec<BigInt>> {
        let x = solve_in_lattice(&self.solve_smith, ambient)?;
        Some(x[..self.family.len()].to_vec())
    }

    pub fn encode_word(&self, word: &SymbolWord) -> Result<Option<Vec<BigInt>>, GoodwillieError> {
        let v = self.rel.ambient.encode_word(word)?;
        Ok(self.solve_family_coords(&v))
    }

    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.rel.kernel.invariant_factors()
    }

    pub fn describe_family_gen(&self, i: usize) -> String {
        let entries: Vec<String> = self.family[i]
            .iter()
            .map(|&fi| {
                self.ext
                    .ring
                    .format_element(&self.rel.ambient.units.generators[fi as usize])
            })
            .collect();
        format!("{{{}}}", entries.join(", "))
    }
}

/// phi on a family generator: rotate the first (1+I)* entry to the front
/// with the anticommutativity sign, then take log(front) d(rest)/rest.
pub fn build_phi(
    ext: &Arc<SplitExtension>,
    kf: &RelativeKPresentation,
    q: &OmegaQuotient,
) -> Result<AbHom, GoodwillieError> {
    assert_eq!(kf.rel.ambient.degree, q.degree + 1);
    let ring = &ext.ring;
    let units = &kf.rel.ambient.units;
    let s_block = units.s_block;
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for tuple in &kf.family {
        let j = tuple
            .iter()
            .position(|&i| (i as usize) >= s_block)
            .expect("family tuples have an ideal-block entry");
        let h = &units.generators[tuple[j] as usize];
        let log = ext.log_trunc(h)?;
        let mut coef = log;
        let mut args = Vec::with_capacity(tuple.len() - 1);
        for (slot, &i) in tuple.iter().enumerate() {
            if slot == j {
                continue;
            }
            let g = &units.generators[i as usize];
            coef = ring.mul(&coef, &ring.invert(g).expect("generator is a unit"));
            args.push(g.clone());
        }
        let mut v = q
            .ambient
            .encode_form(&crate::kahler::FormalDifferential::term(coef, args))?;
        if j % 2 == 1 {
            for x in v.iter_mut() {
                *x = -x.clone();
            }
        }
        let coords = q.solve_family_coords(&v).ok_or_else(|| {
            GoodwillieError::Unsupported(
                "phi image lies outside the relative differential subgroup".into(),
            )
        })?;
        rows.push(coords);
    }
    Ok(AbHom::new(
        kf.group.clone(),
        q.group.clone(),
        IntMatrix::from_rows(q.family.len(), rows),
    )?)
}

/// One summand of a differential generator after decomposing every entry
/// into ideal elements and units.
#[derive(Clone)]
enum EntryKind {
    Ideal(RingElement),
    Unit(RingElement),
}

/// Strategy for writing a non-unit, non-ideal element as a sum of two
/// units; psi's output must not depend on the choice.
pub type UnitDecomposer =
    dyn Fn(&crate::fring::FiniteRing, &RingElement) -> Result<(RingElement, RingElement), FringError>;

/// psi on a quotient family generator `c * db_1 ^ .. ^ db_n`:
/// entries that are neither units nor ideal split as sums of two units;
/// ideal entries move to the front with the permutation sign; then
/// images {e^{c Pi'}, e^{ideal parts}, units}.
pub fn build_psi(
    ext: &Arc<SplitExtension>,
    q: &OmegaQuotient,
    kf: &RelativeKPresentation,
) -> Result<AbHom, GoodwillieError> {
    build_psi_with(ext, q, kf, &|ring, r| crate::fring::sum_of_two_units(ring, r))
}

pub fn build_psi_with(
    ext: &Arc<SplitExtension>,
    q: &OmegaQuotient,
    kf: &RelativeKPresentation,
    decompose: &UnitDecomposer,
) -> Result<AbHom, GoodwillieError> {
    assert_eq!(kf.rel.ambient.degree, q.degree + 1);
    let ring = &ext.ring;
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for gen in &q.family {
        let Some(coef_idx) = gen.coef else {
            // Coefficient 1 with an ideal d-entry: d(i * d(rest)) is exact,
            // so the generator is zero in the quotient and maps to 1.
            rows.push(vec![BigInt::from(0); kf.family.len()]);
            continue;
        };
        let c = ring.basis_element(coef_idx);
        // Expand each argument into ideal-or-unit summands.
        let mut terms: Vec<(i32, Vec<EntryKind>)> = vec![(1, Vec::new())];
        for &arg_idx in &gen.args {
            let b = ring.basis_element(arg_idx);
            let options: Vec<EntryKind> = if ext.in_ideal(&b) {
                vec![EntryKind::Ideal(b)]
            } else if ring.is_unit(&b) {
                vec![EntryKind::Unit(b)]
            } else {
                let (u, v) = decompose(ring, &b)?;
                vec![EntryKind::Unit(u), EntryKind::Unit(v)]
            };
            let mut next = Vec::with_capacity(terms.len() * options.len());
            for (sign, entries) in &terms {
                for opt in &options {
                    let mut e = entries.clone();
                    e.push(opt.clone());
                    next.push((*sign, e));
                }
            }
            terms = next;
        }
        let mut word = SymbolWord { factors: Vec::new() };
        for (sign, entries) in terms {
            // Stable partition: ideal entries first. The sign is the parity
            // of (unit, ideal) pairs that must cross.
            let mut crossings = 0usize;
            for i in 0..entries.len() {
                for j in i + 1..entries.len() {
                    if matches!(entries[i], EntryKind::Unit(_))
                        && matches!(entries[j], EntryKind::Ideal(_))
                    {
                        crossings += 1;
                    }
                }
            }
            let total_sign = if crossings % 2 == 0 { sign } else { -sign };
            let mut unit_product = ring.one();
            let mut ideal_entries = Vec::new();
            let mut unit_entries = Vec::new();
            for e in &entries {
                match e {
                    EntryKind::Ideal(x) => ideal_entries.push(x.clone()),
                    EntryKind::Unit(x) => {
                        unit_product = ring.mul(&unit_product, x);
                        unit_entries.push(x.clone());
                    }
                }
            }
            let lead = ext.exp_trunc(&ring.mul(&c, &unit_product))?;
            let mut symbol = Vec::with_capacity(entries.len() + 1);
            symbol.push(lead);
            for i in &ideal_entries {
                symbol.push(ext.exp_trunc(i)?);
            }
            symbol.extend(unit_entries);
            word.factors.push((symbol, total_sign));
        }
        let v = kf.rel.ambient.encode_word(&word)?;
        let coords = kf.solve_family_coords(&v).ok_or_else(|| {
            GoodwillieError::Unsupported("psi image lies outside the relative K subgroup".into())
        })?;
        rows.push(coords);
    }
    Ok(AbHom::new(
        q.group.clone(),
        kf.group.clone(),
        IntMatrix::from_rows(kf.family.len(), rows),
    )?)
}

pub struct TheoremInstance {
    pub ext: Arc<SplitExtension>,
    pub degree: usize,
    pub units: Arc<UnitGroupStructure>,
    pub base_units: Arc<UnitGroupStructure>,
    pub lhs: RelativeKPresentation,
    pub rhs: OmegaQuotient,
    pub phi: Option<AbHom>,
    pub psi: Option<AbHom>,
    pub stability: Option<StabilityReport>,
    pub invertibility_ok: bool,
    pub roundtrip_ok: bool,
    pub oracle_isomorphic: bool,
    pub family_spans_ok: bool,
    pub verdict: Verdict,
    pub report: VerifyReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    ReportOnly,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::ReportOnly => "REPORT-ONLY",
        }
    }
}

fn invariants_u64(v: &[BigInt]) -> Vec<u64> {
    v.iter()
        .map(|d| u64::try_from(d.clone()).expect("invariant factor fits u64"))
        .collect()
}

/// Builds the whole pipeline for one (extension, degree) instance:
/// hypothesis checks, both groups with oracle invariants, phi and psi on
/// the generating families, the round trips, and the verdict.
pub fn verify_theorem(
    ext: &Arc<SplitExtension>,
    n: usize,
    ring_id: &str,
    opts: &TheoremOptions,
) -> Result<TheoremInstance, GoodwillieError> {
    assert!(n >= 1);
    let started = std::time::Instant::now();
    let base_units = unit_structure_auto(&ext.subring)?;
    let units = unit_structure_split(ext, base_units.clone())?;

    // Hypotheses: S is m-fold stable and 1..N invertible in S.
    let sub = &ext.subring;
    let mode = opts.stability_mode.unwrap_or_else(|| {
        let order = sub.order() as f64;
        if order.powi(2 * opts.stability_m as i32) <= opts.exact_cap as f64 {
            StabilityMode::Exact
        } else {
            StabilityMode::ResidueCriterion
        }
    });
    let stability = is_m_fold_stable(sub, opts.stability_m, mode, opts.exact_cap).ok();
    let stability_ok = stability.as_ref().map(|s| s.stable).unwrap_or(false);
    let invertibility_ok = (1..=ext.nilpotency as u64)
        .all(|k| ext.ring.is_unit(&ext.ring.from_integer(k as i64)));

    let lhs = RelativeKPresentation::new(ext, &units, &base_units, n + 1)?;
    let rhs = omega_quotient(ext, n)?;

    let phi = match build_phi(ext, &lhs, &rhs) {
        Ok(h) => Some(h),
        Err(GoodwillieError::Group(AbGroupError::NotWellDefined { .. })) => None,
        Err(e) => return Err(e),
    };
    let psi = match build_psi(ext, &rhs, &lhs) {
        Ok(h) => Some(h),
        Err(GoodwillieError::Group(AbGroupError::NotWellDefined { .. })) => None,
        Err(e) => return Err(e),
    };
    let roundtrip_ok = match (&phi, &psi) {
        (Some(phi), Some(psi)) => {
            phi.compose(psi).identity_witness().is_none()
                && psi.compose(phi).identity_witness().is_none()
        }
        _ => false,
    };
    let lhs_inv = invariants_u64(&lhs.invariant_factors());
    let rhs_inv = invariants_u64(&rhs.invariant_factors());
    let oracle_isomorphic = lhs_inv == rhs_inv;
    // The working presentations must agree with the kernel-based oracles.
    let family_spans_ok = lhs.spans
        && rhs.family_spans
        && lhs.group.invariant_factors() == lhs.invariant_factors()
        && rhs.group.invariant_factors() == rhs.invariant_factors();

    let hypotheses_ok = stability_ok && invertibility_ok;
    let computations_ok =
        phi.is_some() && psi.is_some() && roundtrip_ok && oracle_isomorphic && family_spans_ok;
    let verdict = if !hypotheses_ok {
        Verdict::ReportOnly
    } else if computations_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    let ideal = {
        let gens: Vec<String> = ext
            .ideal_generators
            .iter()
            .map(|g| ext.ring.format_element(g))
            .collect();
        format!("({})", gens.join(", "))
    };
    let report = VerifyReport {
        ring_id: ring_id.to_string(),
        ideal,
        n: n as u32,
        nilpotency: ext.nilpotency,
        stability_m: opts.stability_m,
        stability_mode: mode.as_str().to_string(),
        stability_ok,
        invertibility_ok,
        lhs_invariants: lhs_inv,
        rhs_invariants: rhs_inv,
        phi_well_defined: phi.is_some(),
        psi_well_defined: psi.is_some(),
        roundtrip_ok,
        oracle_isomorphic,
        family_spans_ok,
        verdict: verdict.as_str().to_string(),
        elapsed_ms: started.elapsed().as_millis() as u64,
        seed: opts.seed,
    };
    Ok(TheoremInstance {
        ext: ext.clone(),
        degree: n,
        units,
        base_units,
        lhs,
        rhs,
        phi,
        psi,
        stability,
        invertibility_ok,
        roundtrip_ok,
        oracle_isomorphic,
        family_spans_ok,
        verdict,
        report,
    })
}

/// Negates one generator image of a map; used to show the inverse check
/// really bites (a corrupted map must fail the round trip). The corrupted
/// map is built unchecked since it usually stops being well defined.
pub fn mutually_inverse(a: &AbHom, b: &AbHom) -> bool {
    a.compose(b).identity_witness().is_none() && b.compose(a).identity_witness().is_none()
}

pub fn corrupt_hom(h: &AbHom) -> Option<AbHom> {
    let images = h.images();
    for i in 0..images.rows() {
        if images.row(i).iter().all(num_traits::Zero::is_zero) {
            continue;
        }
        let mut m = images.clone();
        for j in 0..images.cols() {
            m.set(i, j, -images.at(i, j).clone());
        }
        let cand = AbHom::new_unchecked(h.source().clone(), h.target().clone(), m);
        if !cand.equal_hom(h) {
            return Some(cand);
        }
    }
    None
}
