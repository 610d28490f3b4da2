//! Content identification on extracted files: kernel banners, ISAs, ELF
//! parsing and classification, and the corpus-wide ELF inventory.

mod banner;
pub mod elf;
mod inventory;
mod isa;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use banner::{scan_kernel_banners, BannerScanner, KernelBannerFinding, CONTEXT_BYTES};
pub use elf::{
    classify_elf, parse_elf, DynFlag, ElfError, ElfSummary, ElfType, Endianness, MimeClass, MimeGroup, ProgramHeader,
};
pub use inventory::{elf_inventory, ElfInventory, ElfOrigin, FamilyCounts, InventoryBuilder, InventoryEntry};
pub use isa::{detect_isa, detect_isas, isa_from_machine, Isa, IsaEvidence, IsaFamily, IsaFinding};

use crate::manifest::CompositionFindings;

/// Everything identified in one firmware image.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirmwareIdentification {
    pub firmware_sha256: String,
    pub file_count: u64,
    pub banners: Vec<KernelBannerFinding>,
    pub isas: Vec<IsaFinding>,
}

impl FirmwareIdentification {
    pub fn isa_labels(&self) -> BTreeSet<String> {
        self.isas.iter().map(|f| f.isa.label().to_string()).collect()
    }
}

pub fn identify_firmware<'a, I>(firmware_sha256: &str, files: I) -> FirmwareIdentification
where
    I: IntoIterator<Item = (&'a str, &'a [u8])>,
{
    let scanner = BannerScanner::default();
    let mut out = FirmwareIdentification { firmware_sha256: firmware_sha256.to_string(), ..Default::default() };
    for (path, data) in files {
        out.file_count += 1;
        out.banners.extend(scanner.scan(path, data));
        out.isas.extend(detect_isa(path, data));
    }
    out.banners.sort();
    out.isas.sort();
    out
}

/// Folds per-image results into the composition join keyed by firmware sha256.
pub fn composition_findings<'a, I>(ids: I) -> CompositionFindings
where
    I: IntoIterator<Item = &'a FirmwareIdentification>,
{
    let mut f = CompositionFindings::default();
    for id in ids {
        let key = id.firmware_sha256.clone();
        f.file_counts.insert(key.clone(), id.file_count);
        f.kernels.insert(key.clone(), id.banners.iter().map(|b| b.version.clone()).collect());
        f.isas.insert(key, id.isa_labels());
    }
    f
}
