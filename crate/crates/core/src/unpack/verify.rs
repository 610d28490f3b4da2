use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::digest::sha256_bytes;

use super::UnpackReport;

pub const DEFAULT_MARKERS: [&str; 14] = [
    "/bin/", "/sbin/", "/lib/", "/usr/", "/etc/", "/var/", "/root/", "/home/", "/opt/", "/mnt/", "/proc/", "/sys/",
    "/dev/", "/tmp/",
];

const DEFAULT_SET_ID: &str = "linux-rootfs-default";

/// Normalized path-component markers, each stored as `/name/`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerSet {
    pub id: String,
    markers: Vec<String>,
}

impl Default for MarkerSet {
    fn default() -> Self {
        Self { id: DEFAULT_SET_ID.to_string(), markers: DEFAULT_MARKERS.iter().map(|m| m.to_string()).collect() }
    }
}

impl MarkerSet {
    /// Accepts "bin", "/bin" or "/bin/". Returns None for an empty list.
    pub fn custom<I, S>(markers: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut norm: Vec<String> = markers
            .into_iter()
            .map(|m| m.as_ref().trim().trim_matches('/').to_string())
            .filter(|m| !m.is_empty())
            .map(|m| format!("/{m}/"))
            .collect();
        norm.dedup();
        if norm.is_empty() {
            return None;
        }
        let defaults: Vec<String> = DEFAULT_MARKERS.iter().map(|m| m.to_string()).collect();
        if norm == defaults {
            return Some(Self::default());
        }
        let id = format!("custom:{}", &sha256_bytes(norm.join("\n").as_bytes())[..12]);
        Some(Self { id, markers: norm })
    }

    pub fn markers(&self) -> &[String] {
        &self.markers
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub verified: bool,
    pub matched_markers: Vec<String>,
    pub marker_set_id: String,
}

/// A file at `bin/busybox` matches `/bin/`: markers must appear as a whole
/// directory component of the extracted path.
pub fn verify_unpack(report: &UnpackReport, markers: &MarkerSet) -> VerificationResult {
    let mut matched = BTreeSet::new();
    for f in &report.files {
        let p = format!("/{}", f.path);
        for m in markers.markers() {
            if p.contains(m.as_str()) {
                matched.insert(m.clone());
            }
        }
    }
    VerificationResult {
        verified: !matched.is_empty(),
        matched_markers: matched.into_iter().collect(),
        marker_set_id: markers.id.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileOrigin {
    pub firmware_sha256: String,
    pub path: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentDedupIndex {
    /// File sha256 to every place it was seen, kept sorted.
    pub entries: BTreeMap<String, Vec<FileOrigin>>,
    pub total_file_count: usize,
}

impl ContentDedupIndex {
    pub fn ingest(&mut self, report: &UnpackReport) {
        for f in &report.files {
            let origins = self.entries.entry(f.sha256.clone()).or_default();
            let o = FileOrigin { firmware_sha256: report.firmware_sha256.clone(), path: f.path.clone() };
            let pos = origins.binary_search(&o).unwrap_or_else(|p| p);
            origins.insert(pos, o);
            self.total_file_count += 1;
        }
    }

    /// Combines partial indices built by separate workers.
    pub fn merge(&mut self, other: ContentDedupIndex) {
        for (sha, origins) in other.entries {
            let mine = self.entries.entry(sha).or_default();
            mine.extend(origins);
            mine.sort();
        }
        self.total_file_count += other.total_file_count;
    }

    pub fn unique_file_count(&self) -> usize {
        self.entries.len()
    }

    pub fn duplicate_file_count(&self) -> usize {
        self.total_file_count - self.unique_file_count()
    }

    fn distinct_hashes(&self, firmware_sha256: &str) -> BTreeSet<&str> {
        self.entries
            .iter()
            .filter(|(_, o)| o.iter().any(|x| x.firmware_sha256 == firmware_sha256))
            .map(|(s, _)| s.as_str())
            .collect()
    }

    /// Shared distinct file hashes of two images over the larger image's distinct count.
    pub fn overlap(&self, a: &str, b: &str) -> f64 {
        let sa = self.distinct_hashes(a);
        let sb = self.distinct_hashes(b);
        let denom = sa.len().max(sb.len());
        if denom == 0 {
            return 0.0;
        }
        sa.intersection(&sb).count() as f64 / denom as f64
    }
}

pub fn content_dedup<'a, I>(reports: I) -> ContentDedupIndex
where
    I: IntoIterator<Item = &'a UnpackReport>,
{
    let mut idx = ContentDedupIndex::default();
    for r in reports {
        idx.ingest(r);
    }
    idx
}
