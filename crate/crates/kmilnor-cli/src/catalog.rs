//! Built-in ring catalog: the rings the suite verifies, with pinned
//! expected invariant factors for regression.

use anyhow::{anyhow, Result};
use kmilnor_core::fring::parse::parse_element;
use kmilnor_core::fring::{split_extension, FiniteRing, SplitExtension};
use std::sync::Arc;

pub struct CatalogEntry {
    pub id: &'static str,
    pub toml: &'static str,
    /// Ideal generators as expressions; empty means no extension.
    pub ideal_gens: &'static [&'static str],
    /// Degrees to verify, with the expected invariant factors of both
    /// sides and the expected verdict.
    pub instances: &'static [(usize, &'static [u64], &'static str)],
    pub slow: bool,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        id: "f7",
        toml: "name = \"f7\"\nchar = 7\n",
        ideal_gens: &[],
        instances: &[],
        slow: false,
    },
    CatalogEntry {
        id: "f11",
        toml: "name = \"f11\"\nchar = 11\n",
        ideal_gens: &[],
        instances: &[],
        slow: false,
    },
    CatalogEntry {
        id: "f2x",
        toml: "name = \"f2x\"\nchar = 2\nvars = [\"x\"]\nrewrites = [\"x^2 -> 0\"]\n",
        ideal_gens: &["x"],
        instances: &[(1, &[2], "REPORT-ONLY")],
        slow: false,
    },
    CatalogEntry {
        id: "f7e2",
        toml: "name = \"f7e2\"\nchar = 7\nvars = [\"e\"]\nrewrites = [\"e^2 -> 0\"]\n",
        ideal_gens: &["e"],
        instances: &[(1, &[], "PASS")],
        slow: false,
    },
    CatalogEntry {
        id: "f7e3",
        toml: "name = \"f7e3\"\nchar = 7\nvars = [\"e\"]\nrewrites = [\"e^3 -> 0\"]\n",
        ideal_gens: &["e"],
        instances: &[(1, &[], "PASS")],
        slow: false,
    },
    CatalogEntry {
        id: "f9e",
        toml: "name = \"f9e\"\nchar = 3\nvars = [\"w\", \"e\"]\n\
               rewrites = [\"w^2 -> w + 1\", \"e^2 -> 0\"]\n",
        ideal_gens: &["e"],
        instances: &[(1, &[], "PASS")],
        slow: false,
    },
    CatalogEntry {
        id: "f7v2-e",
        toml: "name = \"f7v2\"\nchar = 7\nvars = [\"t\", \"e\"]\n\
               rewrites = [\"t^2 -> 0\", \"t*e -> 0\", \"e^2 -> 0\"]\n",
        ideal_gens: &["e"],
        instances: &[(1, &[7], "PASS")],
        slow: false,
    },
    CatalogEntry {
        id: "f7v2-te",
        toml: "name = \"f7v2\"\nchar = 7\nvars = [\"t\", \"e\"]\n\
               rewrites = [\"t^2 -> 0\", \"t*e -> 0\", \"e^2 -> 0\"]\n",
        ideal_gens: &["t", "e"],
        instances: &[(1, &[7], "PASS"), (2, &[], "PASS")],
        slow: false,
    },
    CatalogEntry {
        id: "f7te-e",
        toml: "name = \"f7te\"\nchar = 7\nvars = [\"t\", \"e\"]\n\
               rewrites = [\"t^2 -> 0\", \"e^2 -> 0\"]\n",
        ideal_gens: &["e"],
        instances: &[(1, &[7], "PASS"), (2, &[], "PASS")],
        slow: false,
    },
    CatalogEntry {
        id: "f7te-te",
        toml: "name = \"f7te\"\nchar = 7\nvars = [\"t\", \"e\"]\n\
               rewrites = [\"t^2 -> 0\", \"e^2 -> 0\"]\n",
        ideal_gens: &["t", "e"],
        instances: &[(1, &[7], "PASS"), (2, &[], "PASS")],
        slow: false,
    },
    CatalogEntry {
        id: "f7uv-e",
        toml: "name = \"f7uv\"\nchar = 7\nvars = [\"t\", \"u\", \"e\"]\n\
               rewrites = [\"t^2 -> 0\", \"t*u -> 0\", \"u^2 -> 0\", \"e^2 -> 0\"]\n",
        ideal_gens: &["e"],
        instances: &[(1, &[7, 7, 7], "PASS"), (2, &[7], "PASS")],
        slow: true,
    },
];

pub fn entry(id: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.id == id)
}

pub struct BuiltEntry {
    pub ring: Arc<FiniteRing>,
    pub ext: Option<Arc<SplitExtension>>,
}

pub fn build_entry(e: &'static CatalogEntry) -> Result<BuiltEntry> {
    let (ring, _) = kmilnor_core::fring::parse::build_ring_from_file(e.toml, e.id)
        .map_err(|err| anyhow!("catalog ring {}: {err}", e.id))?;
    let ext = if e.ideal_gens.is_empty() {
        None
    } else {
        let gens = e
            .ideal_gens
            .iter()
            .map(|g| parse_element(&ring, g))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|err| anyhow!("catalog ideal {}: {err}", e.id))?;
        Some(split_extension(ring.clone(), gens).map_err(|err| anyhow!("{err}"))?)
    };
    Ok(BuiltEntry { ring, ext })
}

/// Dennis-Stein feasibility for the bridge checks: the full relation
/// enumeration is cubic in the ring order.
pub fn d2_feasible(ring: &FiniteRing) -> bool {
    let k = ring.order();
    k.saturating_pow(3) <= 300_000_000
}
