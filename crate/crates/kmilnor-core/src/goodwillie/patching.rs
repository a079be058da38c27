//! Sampled verification of the patching identity: for a tuple lying in the
//! images of two deletion maps, applying the lower-degree phi to either
//! deleted tuple and wedging back the deleted entry's dlog agrees up to
//! the sign (-1)^(k-j).

use super::{build_phi, GoodwillieError, RelativeKPresentation, TheoremOptions};
use crate::abgroup::{AbHom, IntMatrix};
use crate::fring::{RingElement, SplitExtension};
use crate::kahler::{omega_n, omega_quotient, wedge_with_dlog, OmegaModule, OmegaQuotient};
use crate::milnork::{unit_structure_auto, unit_structure_split, SymbolWord};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

pub struct PatchReport {
    pub n: usize,
    pub j: usize,
    pub k: usize,
    pub samples: u64,
    pub ok: bool,
    pub counterexample: Option<String>,
}

pub struct PatchChecker {
    ext: Arc<SplitExtension>,
    lower_kf: RelativeKPresentation,
    lower_phi: AbHom,
    /// Family rows of the lower quotient, for lifting classes back to
    /// ambient (n-1)-form representatives.
    lower_q_family_rows: IntMatrix,
    lower_omega: OmegaModule,
    target_omega: OmegaModule,
    target_quotient: OmegaQuotient,
}

impl PatchChecker {
    pub fn new(ext: &Arc<SplitExtension>, n: usize) -> Result<Self, GoodwillieError> {
        assert!(n >= 2, "patching compares deletions in degree >= 2");
        let base = unit_structure_auto(&ext.subring)?;
        let units = unit_structure_split(ext, base.clone())?;
        // phi_n : K_n(R, I) -> Omega^{n-1} quotient.
        let lower_kf = RelativeKPresentation::new(ext, &units, &base, n)?;
        let lower_q = omega_quotient(ext, n - 1)?;
        let lower_phi = build_phi(ext, &lower_kf, &lower_q)?;
        let lower_omega = omega_n(ext.ring.clone(), n - 1);
        let target_omega = omega_n(ext.ring.clone(), n);
        let target_quotient = omega_quotient(ext, n)?;
        Ok(PatchChecker {
            ext: ext.clone(),
            lower_kf,
            lower_phi,
            lower_q_family_rows: lower_q.family_rows.clone(),
            lower_omega,
            target_omega,
            target_quotient,
        })
    }

    /// Ambient representative of phi_n applied to the tuple with slot
    /// `delete` removed, wedged with dlog of the deleted entry.
    fn phi_wedge(
        &self,
        tuple: &[RingElement],
        delete: usize,
    ) -> Result<Vec<BigInt>, GoodwillieError> {
        let deleted: Vec<RingElement> = tuple
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != delete)
            .map(|(_, r)| r.clone())
            .collect();
        let coords = self
            .lower_kf
            .encode_word(&SymbolWord::symbol(deleted))?
            .ok_or(GoodwillieError::Unsupported(
                "deleted tuple is not relative".into(),
            ))?;
        let image = self.lower_phi.apply(&coords);
        let rep = self.lower_q_family_rows.mul_vec_left(&image);
        wedge_with_dlog(&self.lower_omega, &rep, &tuple[delete], &self.target_omega)
            .map_err(GoodwillieError::Kahler)
    }

    /// One identity instance; the comparison happens in the degree-n
    /// quotient, i.e. modulo relations and exact relative forms.
    pub fn check_tuple(
        &self,
        tuple: &[RingElement],
        j: usize,
        k: usize,
    ) -> Result<bool, GoodwillieError> {
        let lhs = self.phi_wedge(tuple, j)?;
        let rhs = self.phi_wedge(tuple, k)?;
        let sign = if (k - j) % 2 == 0 { 1i64 } else { -1 };
        let diff: Vec<BigInt> = lhs
            .iter()
            .zip(rhs.iter())
            .map(|(a, b)| a - b * BigInt::from(sign))
            .collect();
        Ok(self.target_quotient.ambient_mod.is_zero_element(&diff))
    }

    /// Seeded sampling of tuples (r_0, .., r_n) with r_0 in (1+I)* and the
    /// rest units, so both deleted tuples stay relative for 1 <= j < k <= n.
    pub fn run(
        &self,
        j: usize,
        k: usize,
        samples: u64,
        opts: &TheoremOptions,
    ) -> Result<PatchReport, GoodwillieError> {
        let n = self.target_quotient.degree;
        assert!(1 <= j && j < k && k <= n);
        let ring = &self.ext.ring;
        let units: Vec<RingElement> = ring.units_lex().to_vec();
        let ideals = self.ext.ideal_elements();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
        let mut checked = 0u64;
        for _ in 0..samples {
            let i = &ideals[rng.gen_range(0..ideals.len())];
            let r0 = ring.add(&ring.one(), i);
            let mut tuple = vec![r0];
            for _ in 0..n {
                tuple.push(units[rng.gen_range(0..units.len())].clone());
            }
            checked += 1;
            if !self.check_tuple(&tuple, j, k)? {
                let text: Vec<String> = tuple.iter().map(|r| ring.format_element(r)).collect();
                return Ok(PatchReport {
                    n,
                    j,
                    k,
                    samples: checked,
                    ok: false,
                    counterexample: Some(format!("({})", text.join(", "))),
                });
            }
        }
        Ok(PatchReport {
            n,
            j,
            k,
            samples: checked,
            ok: true,
            counterexample: None,
        })
    }
}
