//! Stability testing: exhaustive search over families of unimodular pairs,
//! and the residue-field criterion for semilocal rings.

use super::{FiniteRing, FringError, RingElement};
use crate::abgroup::IncrementalLattice;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityMode {
    Exact,
    ResidueCriterion,
}

impl StabilityMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            StabilityMode::Exact => "exact",
            StabilityMode::ResidueCriterion => "criterion",
        }
    }
}

#[derive(Debug, Clone)]
pub enum StabilityCertificate {
    /// Every family of unimodular pairs admits a witness.
    ExactVerified,
    /// A family with no witness element.
    FailingFamily(Vec<(RingElement, RingElement)>),
    /// Residue field sizes of the local factors.
    ResidueFields(Vec<u64>),
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub m: u32,
    pub mode: StabilityMode,
    pub stable: bool,
    pub certificate: StabilityCertificate,
}

pub const DEFAULT_EXACT_CAP: u64 = 100_000_000;

/// (s, s') is unimodular when the ideal (s, s') is all of R.
pub fn is_unimodular_pair(ring: &FiniteRing, s: &RingElement, s2: &RingElement) -> bool {
    // A pair containing a unit is always unimodular; this covers every
    // unimodular pair of a local ring, so the lattice test below only runs
    // on the residual cases.
    if ring.is_unit(s) || ring.is_unit(s2) {
        return true;
    }
    let nb = ring.basis_size();
    let m = ring.characteristic as i128;
    let mut lat = IncrementalLattice::new(nb);
    for i in 0..nb {
        let mut r = vec![0i128; nb];
        r[i] = m;
        lat.insert(&r).expect("small rows");
    }
    for g in [s, s2] {
        for b in 0..nb {
            let prod = ring.mul(g, &ring.basis_element(b));
            let row: Vec<i128> = prod.0.iter().map(|&x| x as i128).collect();
            lat.insert(&row).expect("small rows");
        }
    }
    let mut one = vec![0i128; nb];
    one[0] = 1;
    lat.contains(&one).expect("small rows")
}

/// Exhaustive m-fold stability: for every family of m unimodular pairs
/// (s_j, s'_j), some s makes every s_j + s'_j * s a unit.
pub fn is_m_fold_stable_exact(
    ring: &FiniteRing,
    m: u32,
    cap: u64,
) -> Result<StabilityReport, FringError> {
    let order = ring.order() as f64;
    if order.powi(2 * m as i32) > cap as f64 {
        return Err(FringError::TooLarge(format!(
            "|R|^(2m) = {}^{} exceeds the exact-mode cap {}",
            ring.order(),
            2 * m,
            cap
        )));
    }
    let elements: Vec<RingElement> = ring.elements().collect();

    if m == 1 {
        // Stream pairs and scan for a witness with early exit. Trying 1
        // first settles almost every pair immediately.
        for s in &elements {
            for s2 in &elements {
                if !is_unimodular_pair(ring, s, s2) {
                    continue;
                }
                let found = std::iter::once(&ring.one())
                    .chain(elements.iter())
                    .any(|cand| ring.is_unit(&ring.add(s, &ring.mul(s2, cand))));
                if !found {
                    return Ok(StabilityReport {
                        m,
                        mode: StabilityMode::Exact,
                        stable: false,
                        certificate: StabilityCertificate::FailingFamily(vec![(
                            s.clone(),
                            s2.clone(),
                        )]),
                    });
                }
            }
        }
        return Ok(StabilityReport {
            m,
            mode: StabilityMode::Exact,
            stable: true,
            certificate: StabilityCertificate::ExactVerified,
        });
    }

    let mut pairs = Vec::new();
    for s in &elements {
        for s2 in &elements {
            if is_unimodular_pair(ring, s, s2) {
                pairs.push((s.clone(), s2.clone()));
            }
        }
    }

    // Bitmask over witness candidates s for each pair: bit k set when
    // s_j + s'_j * elements[k] is a unit.
    let nelem = elements.len();
    let words = nelem.div_ceil(64);
    let masks: Vec<Vec<u64>> = pairs
        .iter()
        .map(|(s, s2)| {
            let mut mask = vec![0u64; words];
            for (k, cand) in elements.iter().enumerate() {
                let val = ring.add(s, &ring.mul(s2, cand));
                if ring.is_unit(&val) {
                    mask[k / 64] |= 1 << (k % 64);
                }
            }
            mask
        })
        .collect();

    // Depth-first over families, keeping running intersections. An empty
    // intersection at any depth is a counterexample (extend arbitrarily).
    let np = pairs.len();
    if np == 0 {
        return Ok(StabilityReport {
            m,
            mode: StabilityMode::Exact,
            stable: true,
            certificate: StabilityCertificate::ExactVerified,
        });
    }
    let mut choice = vec![0usize; m as usize];
    let mut partial: Vec<Vec<u64>> = Vec::with_capacity(m as usize + 1);
    partial.push(vec![u64::MAX; words]);
    let mut depth = 0usize;
    loop {
        if depth == m as usize {
            // Full family with nonempty witness set: advance.
            depth -= 1;
            choice[depth] += 1;
        } else if choice[depth] == np {
            if depth == 0 {
                break;
            }
            choice[depth] = 0;
            depth -= 1;
            choice[depth] += 1;
            partial.truncate(depth + 1);
            continue;
        } else {
            let mut inter = partial[depth].clone();
            let mask = &masks[choice[depth]];
            let mut nonempty = false;
            for (w, mw) in inter.iter_mut().zip(mask.iter()) {
                *w &= mw;
                nonempty |= *w != 0;
            }
            // Mask off the padding bits beyond nelem.
            if nelem % 64 != 0 {
                let last = inter.len() - 1;
                inter[last] &= (1u64 << (nelem % 64)) - 1;
                nonempty = inter.iter().any(|&w| w != 0);
            }
            if !nonempty {
                let mut family: Vec<(RingElement, RingElement)> = (0..=depth)
                    .map(|d| pairs[choice[d]].clone())
                    .collect();
                while family.len() < m as usize {
                    family.push(pairs[0].clone());
                }
                return Ok(StabilityReport {
                    m,
                    mode: StabilityMode::Exact,
                    stable: false,
                    certificate: StabilityCertificate::FailingFamily(family),
                });
            }
            partial.truncate(depth + 1);
            partial.push(inter);
            depth += 1;
            continue;
        }
        partial.truncate(depth + 1);
    }
    Ok(StabilityReport {
        m,
        mode: StabilityMode::Exact,
        stable: true,
        certificate: StabilityCertificate::ExactVerified,
    })
}

/// A finite commutative ring is local iff r or 1 - r is a unit for every r.
pub fn is_local(ring: &FiniteRing) -> bool {
    ring.elements().all(|r| {
        ring.is_unit(&r) || ring.is_unit(&ring.sub(&ring.one(), &r))
    })
}

/// Residue field sizes of the local factors, found by splitting along
/// idempotents. Finite commutative rings are finite products of local
/// rings, so this terminates; the cap guards pathological blowup.
pub fn residue_field_sizes(ring: &FiniteRing) -> Result<Vec<u64>, FringError> {
    // Local rings (all the catalog rings) use the unit table directly:
    // the nonunits form the maximal ideal.
    if is_local(ring) {
        let nonunits = ring.order() - ring.unit_count() as u64;
        return Ok(vec![ring.order() / nonunits.max(1)]);
    }
    // A factor is represented by its identity idempotent e; its elements
    // are {e*r}. Unit-in-factor means invertible relative to e.
    struct Factor {
        elements: Vec<RingElement>,
        identity: RingElement,
    }

    fn factor_units(ring: &FiniteRing, f: &Factor) -> Vec<bool> {
        let n = f.elements.len();
        let mut unit = vec![false; n];
        for (i, x) in f.elements.iter().enumerate() {
            if unit[i] {
                continue;
            }
            for y in f.elements.iter() {
                if ring.mul(x, y) == f.identity {
                    unit[i] = true;
                    break;
                }
            }
        }
        unit
    }

    let all: Vec<RingElement> = ring.elements().collect();
    let mut work = vec![Factor {
        elements: all,
        identity: ring.one(),
    }];
    let mut sizes = Vec::new();
    let mut guard = 0;
    while let Some(f) = work.pop() {
        guard += 1;
        if guard > 64 {
            return Err(FringError::TooLarge(
                "idempotent decomposition did not terminate".into(),
            ));
        }
        if f.elements.len() as u64 * f.elements.len() as u64 > 64_000_000 {
            return Err(FringError::TooLarge(
                "factor too large for semilocal decomposition".into(),
            ));
        }
        let units = factor_units(ring, &f);
        let local = f.elements.iter().enumerate().all(|(i, x)| {
            units[i] || {
                let y = ring.sub(&f.identity, x);
                f.elements
                    .iter()
                    .position(|z| *z == y)
                    .map(|j| units[j])
                    .unwrap_or(false)
            }
        });
        if local {
            let nonunits = units.iter().filter(|u| !**u).count() as u64;
            sizes.push(f.elements.len() as u64 / nonunits.max(1));
            continue;
        }
        // Find a nontrivial idempotent to split along.
        let idem = f.elements.iter().find(|x| {
            ring.mul(x, x) == **x && !ring.is_zero(x) && **x != f.identity
        });
        let Some(e) = idem else {
            return Err(FringError::TooLarge(
                "non-local factor without nontrivial idempotent".into(),
            ));
        };
        let e1 = e.clone();
        let e2 = ring.sub(&f.identity, &e1);
        for ident in [e1, e2] {
            let mut seen = std::collections::BTreeSet::new();
            for x in &f.elements {
                seen.insert(ring.mul(&ident, x));
            }
            work.push(Factor {
                elements: seen.into_iter().collect(),
                identity: ident.clone(),
            });
        }
    }
    sizes.sort();
    Ok(sizes)
}

/// Residue-field criterion: a semilocal commutative ring is m-fold stable
/// iff all residue fields have at least m + 1 elements.
pub fn is_m_fold_stable_criterion(
    ring: &FiniteRing,
    m: u32,
) -> Result<StabilityReport, FringError> {
    let sizes = residue_field_sizes(ring)?;
    let stable = sizes.iter().all(|&q| q >= m as u64 + 1);
    Ok(StabilityReport {
        m,
        mode: StabilityMode::ResidueCriterion,
        stable,
        certificate: StabilityCertificate::ResidueFields(sizes),
    })
}

pub fn is_m_fold_stable(
    ring: &FiniteRing,
    m: u32,
    mode: StabilityMode,
    cap: u64,
) -> Result<StabilityReport, FringError> {
    match mode {
        StabilityMode::Exact => is_m_fold_stable_exact(ring, m, cap),
        StabilityMode::ResidueCriterion => is_m_fold_stable_criterion(ring, m),
    }
}
