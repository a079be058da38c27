//! Report structures shared between the verification pipeline and the CLI.

use serde::Serialize;

#[derive(Serialize, Clone, Debug)]
pub struct VerifyReport {
    pub ring_id: String,
    pub ideal: String,
    pub n: u32,
    pub nilpotency: u32,
    pub stability_m: u32,
    pub stability_mode: String,
    pub stability_ok: bool,
    pub invertibility_ok: bool,
    pub lhs_invariants: Vec<u64>,
    pub rhs_invariants: Vec<u64>,
    pub phi_well_defined: bool,
    pub psi_well_defined: bool,
    pub roundtrip_ok: bool,
    pub oracle_isomorphic: bool,
    pub family_spans_ok: bool,
    pub verdict: String,
    pub elapsed_ms: u64,
    pub seed: u64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.verdict == "PASS"
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct PropertyReport {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Serialize, Clone, Debug)]
pub struct SuiteReport {
    pub version: String,
    pub seed: u64,
    pub instances: Vec<VerifyReport>,
    pub properties: Vec<PropertyReport>,
    pub summary: SuiteSummary,
}

#[derive(Serialize, Clone, Debug)]
pub struct SuiteSummary {
    pub pass: usize,
    pub fail: usize,
    pub report_only: usize,
    pub properties_ok: usize,
    pub properties_failed: usize,
    /// Every instance matched its pinned invariants and verdict.
    pub expectations_ok: bool,
}
