//! Checksec-style hardening flags and per-year adoption trends.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::identify::elf::{PF_X, PT_GNU_RELRO, PT_GNU_STACK};
use crate::identify::{classify_elf, DynFlag, ElfInventory, ElfSummary, ElfType, IsaFamily, MimeClass};
use crate::manifest::{CorpusManifest, YearBucket};
use crate::table::TextTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relro {
    None,
    Partial,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardeningFlags {
    pub canary: bool,
    pub nx: bool,
    pub relro: Relro,
    pub pic: bool,
    pub fortify: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HardenError {
    #[error("checksec is not meaningful for {0}")]
    NotApplicable(MimeClass),
    #[error("{} inventory origin(s) missing from the manifest: {}", .0.len(), .0.join(", "))]
    OrphanOrigins(Vec<String>),
}

const CANARY_SYMBOLS: [&str; 2] = ["__stack_chk_fail", "__stack_chk_guard"];

fn fortify_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^__.*_chk$").expect("static regex"))
}

pub fn checksec(s: &ElfSummary) -> Result<HardeningFlags, HardenError> {
    let class = classify_elf(s);
    if matches!(class, MimeClass::Object | MimeClass::Archive | MimeClass::Unknown) {
        return Err(HardenError::NotApplicable(class));
    }
    let has = |name: &str| s.dynamic_symbols.iter().chain(&s.symbols).any(|n| n == name);
    let canary = CANARY_SYMBOLS.iter().any(|n| has(n));
    let nx = s.segment(PT_GNU_STACK).is_some_and(|p| p.flags & PF_X == 0);
    let relro = if !s.has_segment(PT_GNU_RELRO) {
        Relro::None
    } else if s.dynamic_flags.contains(&DynFlag::BindNow) {
        Relro::Full
    } else {
        Relro::Partial
    };
    let pic = s.e_type == ElfType::Dyn;
    let fortify = s.dynamic_symbols.iter().any(|n| fortify_re().is_match(n));
    Ok(HardeningFlags { canary, nx, relro, pic, fortify })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Canary,
    Nx,
    Relro,
    Pic,
    Fortify,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Canary, Method::Nx, Method::Relro, Method::Pic, Method::Fortify];

    /// RELRO counts as enabled when partial or full.
    pub fn enabled(self, f: &HardeningFlags) -> bool {
        match self {
            Method::Canary => f.canary,
            Method::Nx => f.nx,
            Method::Relro => f.relro != Relro::None,
            Method::Pic => f.pic,
            Method::Fortify => f.fortify,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Canary => "canary",
            Method::Nx => "nx",
            Method::Relro => "relro",
            Method::Pic => "pic",
            Method::Fortify => "fortify",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendMode {
    ByMethod,
    NxByIsa,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub year: YearBucket,
    pub key: String,
    pub enabled: usize,
    pub total: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrendTable {
    /// Sorted by year (unknown last), then key.
    pub rows: Vec<TrendRow>,
}

impl TrendTable {
    pub fn get(&self, year: YearBucket, key: &str) -> Option<&TrendRow> {
        self.rows.iter().find(|r| r.year == year && r.key == key)
    }

    pub fn years(&self) -> BTreeSet<YearBucket> {
        self.rows.iter().map(|r| r.year).collect()
    }

    pub fn to_text_table(&self) -> TextTable {
        let mut t = TextTable::new(["year", "key", "enabled", "total", "fraction"]);
        for r in &self.rows {
            t.push([
                r.year.to_string(),
                r.key.clone(),
                r.enabled.to_string(),
                r.total.to_string(),
                format!("{:.4}", r.fraction),
            ]);
        }
        t
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        self.to_text_table().write_csv(w)
    }
}

/// Each deduplicated ELF counts once per (year, key) cell even when several
/// images of the same year ship it. Objects and archives are skipped.
pub fn hardening_trend(
    inv: &ElfInventory,
    manifest: &CorpusManifest,
    mode: TrendMode,
) -> Result<TrendTable, HardenError> {
    let by_sha = manifest.by_sha256();
    let orphans: BTreeSet<String> = inv
        .entries
        .iter()
        .flat_map(|e| &e.origins)
        .filter(|o| !by_sha.contains_key(o.firmware_sha256.as_str()))
        .map(|o| o.firmware_sha256.clone())
        .collect();
    if !orphans.is_empty() {
        return Err(HardenError::OrphanOrigins(orphans.into_iter().collect()));
    }

    let mut cells: BTreeMap<(YearBucket, String), (usize, usize)> = BTreeMap::new();
    for e in &inv.entries {
        let Ok(flags) = checksec(&e.summary) else { continue };
        let years: BTreeSet<YearBucket> = e
            .origins
            .iter()
            .map(|o| {
                by_sha[o.firmware_sha256.as_str()]
                    .release_date
                    .as_ref()
                    .map_or(YearBucket::Unknown, |d| YearBucket::Year(d.year()))
            })
            .collect();
        let keyed: Vec<(String, bool)> = match mode {
            TrendMode::ByMethod => Method::ALL.iter().map(|m| (m.to_string(), m.enabled(&flags))).collect(),
            TrendMode::NxByIsa => vec![(e.isa_family.to_string(), flags.nx)],
        };
        for y in years {
            for (key, on) in &keyed {
                let c = cells.entry((y, key.clone())).or_default();
                c.1 += 1;
                if *on {
                    c.0 += 1;
                }
            }
        }
    }
    let rows = cells
        .into_iter()
        .map(|((year, key), (enabled, total))| TrendRow {
            year,
            key,
            enabled,
            total,
            fraction: enabled as f64 / total as f64,
        })
        .collect();
    Ok(TrendTable { rows })
}

/// Labels used by [`TrendMode::NxByIsa`] rows.
pub fn family_keys() -> [&'static str; 4] {
    IsaFamily::ALL.map(IsaFamily::as_str)
}
