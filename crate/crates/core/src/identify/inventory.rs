//! Corpus-wide ELF inventory, deduplicated by sha256.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::banner::BannerScanner;
use super::elf::{classify_elf, is_elf_or_archive, parse_elf, ElfSummary, MimeClass, MimeGroup};
use super::isa::IsaFamily;
use crate::digest::sha256_bytes;
use crate::manifest::CorpusManifest;
use crate::table::TextTable;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElfOrigin {
    pub firmware_sha256: String,
    pub path: String,
    pub release_year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryEntry {
    pub sha256: String,
    pub summary: ElfSummary,
    pub mime_class: MimeClass,
    pub isa_family: IsaFamily,
    pub origins: Vec<ElfOrigin>,
}

pub type FamilyCounts = BTreeMap<(IsaFamily, MimeGroup), usize>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElfInventory {
    /// Sorted by sha256.
    pub entries: Vec<InventoryEntry>,
    #[serde(with = "counts_serde")]
    pub raw_counts: FamilyCounts,
    #[serde(with = "counts_serde")]
    pub dedup_counts: FamilyCounts,
    pub excluded_kernel_modules: usize,
    pub excluded_kernel_images: usize,
}

mod counts_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &FamilyCounts, s: S) -> Result<S::Ok, S::Error> {
        let flat: Vec<(IsaFamily, MimeGroup, usize)> = c.iter().map(|(&(f, g), &n)| (f, g, n)).collect();
        flat.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FamilyCounts, D::Error> {
        let flat: Vec<(IsaFamily, MimeGroup, usize)> = Vec::deserialize(d)?;
        Ok(flat.into_iter().map(|(f, g, n)| ((f, g), n)).collect())
    }
}

fn total(c: &FamilyCounts) -> usize {
    c.values().sum()
}

impl ElfInventory {
    pub fn raw_total(&self) -> usize {
        total(&self.raw_counts)
    }

    pub fn dedup_total(&self) -> usize {
        total(&self.dedup_counts)
    }

    /// Families as rows, raw and deduplicated groups as columns, with sums.
    pub fn table(&self) -> TextTable {
        let mut t = TextTable::new([
            "Arch",
            "Execs",
            "Libs",
            "Objs",
            "Sum",
            "Execs (dedup)",
            "Libs (dedup)",
            "Objs (dedup)",
            "Sum (dedup)",
        ]);
        let cells = |c: &FamilyCounts, fam: Option<IsaFamily>| {
            let mut row = Vec::new();
            let mut sum = 0;
            for g in MimeGroup::ALL {
                let n: usize =
                    c.iter().filter(|((f, gg), _)| *gg == g && fam.is_none_or(|x| x == *f)).map(|(_, n)| n).sum();
                sum += n;
                row.push(n.to_string());
            }
            row.push(sum.to_string());
            row
        };
        for fam in IsaFamily::ALL.map(Some).into_iter().chain([None]) {
            let mut row = vec![fam.map_or("Sum".to_string(), |f| f.to_string())];
            row.extend(cells(&self.raw_counts, fam));
            row.extend(cells(&self.dedup_counts, fam));
            t.push(row);
        }
        t
    }

    /// One row per (ELF, origin firmware).
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut t = TextTable::new(["sha256", "mime_class", "isa_family", "origin_firmware_sha256", "release_year"]);
        for e in &self.entries {
            for o in &e.origins {
                t.push([
                    e.sha256.clone(),
                    e.mime_class.to_string(),
                    e.isa_family.to_string(),
                    o.firmware_sha256.clone(),
                    o.release_year.map_or(String::new(), |y| y.to_string()),
                ]);
            }
        }
        t.write_csv(w)
    }
}

/// Accumulates ELF files from extracted trees. Per-worker builders can be merged.
#[derive(Debug, Default, Clone)]
pub struct InventoryBuilder {
    entries: BTreeMap<String, InventoryEntry>,
    raw_counts: FamilyCounts,
    excluded_kernel_modules: usize,
    excluded_kernel_images: usize,
    scanner: BannerScanner,
}

impl InventoryBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one extracted file; non-ELF and unclassifiable files are ignored.
    pub fn add_file(&mut self, firmware_sha256: &str, path: &str, data: &[u8]) {
        if !is_elf_or_archive(data) {
            return;
        }
        if path.ends_with(".ko") {
            self.excluded_kernel_modules += 1;
            return;
        }
        if !self.scanner.scan(path, data).is_empty() {
            self.excluded_kernel_images += 1;
            return;
        }
        let Ok(summary) = parse_elf(data) else { return };
        let mime_class = classify_elf(&summary);
        let Some(group) = mime_class.group() else { return };
        let isa_family = summary.isa.as_ref().map_or(IsaFamily::Other, |i| i.family());
        *self.raw_counts.entry((isa_family, group)).or_default() += 1;
        let sha = sha256_bytes(data);
        let origin =
            ElfOrigin { firmware_sha256: firmware_sha256.to_string(), path: path.to_string(), release_year: None };
        self.entries
            .entry(sha.clone())
            .or_insert_with(|| InventoryEntry { sha256: sha, summary, mime_class, isa_family, origins: Vec::new() })
            .origins
            .push(origin);
    }

    pub fn merge(&mut self, other: InventoryBuilder) {
        for (sha, e) in other.entries {
            match self.entries.get_mut(&sha) {
                Some(mine) => mine.origins.extend(e.origins),
                None => {
                    self.entries.insert(sha, e);
                }
            }
        }
        for (k, n) in other.raw_counts {
            *self.raw_counts.entry(k).or_default() += n;
        }
        self.excluded_kernel_modules += other.excluded_kernel_modules;
        self.excluded_kernel_images += other.excluded_kernel_images;
    }

    /// Joins release years from the manifest by firmware sha256.
    pub fn finish(self, manifest: &CorpusManifest) -> ElfInventory {
        let by_sha = manifest.by_sha256();
        let mut dedup_counts = FamilyCounts::new();
        let entries = self
            .entries
            .into_values()
            .map(|mut e| {
                for o in &mut e.origins {
                    o.release_year =
                        by_sha.get(o.firmware_sha256.as_str()).and_then(|r| r.release_date.as_ref()).map(|d| d.year());
                }
                e.origins.sort();
                e.origins.dedup();
                let group = e.mime_class.group().expect("only grouped classes are stored");
                *dedup_counts.entry((e.isa_family, group)).or_default() += 1;
                e
            })
            .collect();
        ElfInventory {
            entries,
            raw_counts: self.raw_counts,
            dedup_counts,
            excluded_kernel_modules: self.excluded_kernel_modules,
            excluded_kernel_images: self.excluded_kernel_images,
        }
    }
}

/// Builds an inventory from (firmware sha256, extracted path, bytes) triples.
pub fn elf_inventory<'a, I>(files: I, manifest: &CorpusManifest) -> ElfInventory
where
    I: IntoIterator<Item = (&'a str, &'a str, &'a [u8])>,
{
    let mut b = InventoryBuilder::new();
    for (fw, path, data) in files {
        b.add_file(fw, path, data);
    }
    b.finish(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identify::elf::build::header;
    use crate::manifest::{FirmwareRecord, ReleaseDate};
    use chrono::NaiveDate;

    fn manifest() -> CorpusManifest {
        let mut a = FirmwareRecord::new("V", "A", "router", &"a".repeat(64));
        a.release_date = Some(ReleaseDate::day(NaiveDate::from_ymd_opt(2019, 5, 1).unwrap()));
        let b = FirmwareRecord::new("V", "B", "router", &"b".repeat(64));
        CorpusManifest::new(vec![a, b])
    }

    #[test]
    fn shared_elf_counted_once_after_dedup() {
        let fa = "a".repeat(64);
        let fb = "b".repeat(64);
        let exe = header(false, true, 2, 0x28);
        let lib = header(false, false, 3, 0x08);
        let inv = elf_inventory(
            [
                (fa.as_str(), "bin/busybox", &exe[..]),
                (fb.as_str(), "bin/busybox", &exe[..]),
                (fb.as_str(), "lib/libc.so", &lib[..]),
                (fb.as_str(), "lib/modules/driver.ko", &exe[..]),
                (fb.as_str(), "etc/passwd", &b"root"[..]),
            ],
            &manifest(),
        );
        assert_eq!(inv.raw_total(), 3);
        assert_eq!(inv.dedup_total(), 2);
        assert_eq!(inv.excluded_kernel_modules, 1);
        assert_eq!(inv.raw_counts[&(IsaFamily::Arm, MimeGroup::Execs)], 2);
        assert_eq!(inv.dedup_counts[&(IsaFamily::Mips, MimeGroup::Libs)], 1);
        let e = inv.entries.iter().find(|e| e.mime_class == MimeClass::Executable).unwrap();
        assert_eq!(e.origins.len(), 2);
        assert_eq!(e.origins[0].release_year, Some(2019));
        assert_eq!(e.origins[1].release_year, None);
    }

    #[test]
    fn kernel_image_excluded() {
        let mut k = header(false, true, 2, 0x28);
        k.extend_from_slice(b"Linux version 4.14.90 (x@y)");
        let inv = elf_inventory([("f", "boot/vmlinux", &k[..])], &CorpusManifest::default());
        assert_eq!(inv.raw_total(), 0);
        assert_eq!(inv.excluded_kernel_images, 1);
    }

    #[test]
    fn csv_and_table() {
        let exe = header(false, true, 2, 0x28);
        let inv = elf_inventory([("a", "x", &exe[..])], &CorpusManifest::default());
        let mut buf = Vec::new();
        inv.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sha256,mime_class,isa_family,origin_firmware_sha256,release_year\n"));
        assert!(text.contains(",x-executable,ARM,a,\n"));
        let t = inv.table();
        assert_eq!(t.rows.len(), 5);
        assert_eq!(t.rows[4][4], "1");
    }
}
