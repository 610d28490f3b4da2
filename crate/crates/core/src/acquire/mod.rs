//! Corpus replication from meta data: direct link, web archive, hash lookup,
//! then a manual worklist for whatever is left.

mod clients;
pub mod mock;
mod robots;
mod throttle;
mod wayback;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

pub use clients::{HashLookup, HttpClient, HttpHashLookup, HttpResponse, LocalHashStore, NoHashLookup, UreqClient};
pub use robots::RobotsRules;
pub use throttle::{host_key, HostThrottle};
pub use wayback::{parse_cdx_json, wayback_lookup, ArchiveIndex, CdxCapture, WaybackIndex};

use crate::digest::{sha256_bytes, sha256_file};
use crate::manifest::{CorpusManifest, FirmwareRecord};
use crate::table::{ratio_cell, TextTable};

/// Archive snapshots tried per record before giving up on the phase.
pub const MAX_SNAPSHOTS: usize = 3;

const ROBOTS_AGENT: &str = "fwcorpus";

/// Accepted body and whether its hash was checked.
type Fetched = Option<(Vec<u8>, bool)>;
type PhaseFn<'a> = fn(&Acquirer<'a>, &FirmwareRecord, &mut Vec<Attempt>) -> Fetched;

#[derive(Debug, Error)]
pub enum AcquireError {
    #[error("invalid acquisition policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionPolicy {
    /// Requests per second per host.
    pub per_host_rate: f64,
    pub max_parallel: usize,
    pub timeout_secs: u64,
    pub verify_hash: bool,
    /// Check robots.txt before direct downloads.
    pub respect_robots: bool,
    /// Emit a worklist entry when automated phases fail; otherwise the record is Missing.
    pub manual_worklist: bool,
    /// Verified payloads are written here as `<sha256>`.
    pub output_dir: Option<PathBuf>,
}

impl Default for AcquisitionPolicy {
    fn default() -> Self {
        Self {
            per_host_rate: 1.0,
            max_parallel: 4,
            timeout_secs: 30,
            verify_hash: true,
            respect_robots: false,
            manual_worklist: true,
            output_dir: None,
        }
    }
}

impl AcquisitionPolicy {
    pub fn validate(&self) -> Result<(), AcquireError> {
        if !(self.per_host_rate.is_finite() && self.per_host_rate > 0.0) {
            return Err(AcquireError::InvalidPolicy(format!("per_host_rate must be > 0, got {}", self.per_host_rate)));
        }
        if self.max_parallel == 0 {
            return Err(AcquireError::InvalidPolicy("max_parallel must be at least 1".into()));
        }
        if self.timeout_secs == 0 {
            return Err(AcquireError::InvalidPolicy("timeout must be at least 1 second".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Direct,
    Archive,
    HashLookup,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum AttemptStatus {
    /// Payload accepted.
    Fetched,
    HashMismatch,
    Http(u16),
    NotFound,
    NoUrl,
    Disallowed,
    Error(String),
}

impl fmt::Display for AttemptStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttemptStatus::Fetched => f.write_str("fetched"),
            AttemptStatus::HashMismatch => f.write_str("hash mismatch"),
            AttemptStatus::Http(s) => write!(f, "HTTP {s}"),
            AttemptStatus::NotFound => f.write_str("not found"),
            AttemptStatus::NoUrl => f.write_str("no url"),
            AttemptStatus::Disallowed => f.write_str("disallowed by robots.txt"),
            AttemptStatus::Error(e) => write!(f, "error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub phase: Phase,
    pub url: Option<String>,
    pub status: AttemptStatus,
}

impl Attempt {
    fn new(phase: Phase, url: Option<&str>, status: AttemptStatus) -> Self {
        Self { phase, url: url.map(str::to_string), status }
    }

    pub(crate) fn archive_index(url: &str, status: AttemptStatus) -> Self {
        Self::new(Phase::Archive, Some(url), status)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Direct,
    Archive,
    HashLookup,
    ManualWorklist,
    Missing,
}

impl Outcome {
    pub fn is_fetched(self) -> bool {
        matches!(self, Outcome::Direct | Outcome::Archive | Outcome::HashLookup)
    }
}

/// Search inputs for someone hunting the sample down by hand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorklistEntry {
    pub manufacturer: String,
    pub model: String,
    pub file_name: String,
    pub version: String,
    pub sha256: String,
}

impl WorklistEntry {
    fn for_record(r: &FirmwareRecord) -> Self {
        Self {
            manufacturer: r.manufacturer.clone(),
            model: r.model.clone(),
            file_name: r.file_name().unwrap_or_default().to_string(),
            version: r.firmware_version.clone(),
            sha256: r.sha256.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcquisitionResult {
    /// Position in the manifest.
    pub index: usize,
    pub sha256: String,
    pub manufacturer: String,
    pub outcome: Outcome,
    /// Size of the accepted payload.
    pub bytes_fetched: u64,
    pub attempts: Vec<Attempt>,
    pub hash_verified: bool,
    pub worklist: Option<WorklistEntry>,
    /// Worklist item later matched against a manually collected file.
    pub manual_recovered: bool,
}

/// The three automated backends.
#[derive(Clone, Copy)]
pub struct Clients<'a> {
    pub http: &'a dyn HttpClient,
    pub archive: &'a dyn ArchiveIndex,
    pub hash_lookup: &'a dyn HashLookup,
}

struct Throttled<'a> {
    inner: &'a dyn HttpClient,
    throttle: &'a HostThrottle,
}

impl HttpClient for Throttled<'_> {
    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        self.throttle.run(url, || {
            log::debug!("GET {url}");
            self.inner.get(url)
        })
    }
}

/// Shared state for one acquisition run: throttle slots and robots.txt cache.
pub struct Acquirer<'a> {
    clients: Clients<'a>,
    policy: AcquisitionPolicy,
    throttle: HostThrottle,
    robots: Mutex<HashMap<String, Arc<OnceLock<RobotsRules>>>>,
}

impl<'a> Acquirer<'a> {
    pub fn new(clients: Clients<'a>, policy: AcquisitionPolicy) -> Result<Self, AcquireError> {
        policy.validate()?;
        if let Some(dir) = &policy.output_dir {
            fs::create_dir_all(dir)?;
        }
        let throttle = HostThrottle::new(policy.per_host_rate);
        Ok(Self { clients, policy, throttle, robots: Mutex::new(HashMap::new()) })
    }

    pub fn policy(&self) -> &AcquisitionPolicy {
        &self.policy
    }

    fn http(&self) -> Throttled<'_> {
        Throttled { inner: self.clients.http, throttle: &self.throttle }
    }

    fn robots_allow(&self, url: &str) -> bool {
        let Ok(u) = Url::parse(url) else { return true };
        let cell = {
            let mut map = self.robots.lock().unwrap_or_else(|e| e.into_inner());
            map.entry(host_key(url)).or_default().clone()
        };
        let rules = cell.get_or_init(|| {
            let mut robots = u.clone();
            robots.set_path("/robots.txt");
            robots.set_query(None);
            robots.set_fragment(None);
            match self.http().get(robots.as_str()) {
                Ok(r) if r.status == 200 => RobotsRules::parse(&String::from_utf8_lossy(&r.body), ROBOTS_AGENT),
                _ => RobotsRules::default(),
            }
        });
        rules.allows(u.path())
    }

    fn check(&self, r: &FirmwareRecord, body: &[u8]) -> Result<bool, AttemptStatus> {
        if !self.policy.verify_hash {
            return Ok(false);
        }
        if sha256_bytes(body).eq_ignore_ascii_case(&r.sha256) {
            Ok(true)
        } else {
            Err(AttemptStatus::HashMismatch)
        }
    }

    /// GETs one candidate URL and records the attempt; returns the accepted body.
    fn try_fetch(&self, r: &FirmwareRecord, phase: Phase, url: &str, log: &mut Vec<Attempt>) -> Fetched {
        let status = match self.http().get(url) {
            Ok(resp) if resp.status == 200 => match self.check(r, &resp.body) {
                Ok(verified) => {
                    log.push(Attempt::new(phase, Some(url), AttemptStatus::Fetched));
                    return Some((resp.body, verified));
                }
                Err(s) => s,
            },
            Ok(resp) => AttemptStatus::Http(resp.status),
            Err(e) => AttemptStatus::Error(e),
        };
        log.push(Attempt::new(phase, Some(url), status));
        None
    }

    fn direct(&self, r: &FirmwareRecord, log: &mut Vec<Attempt>) -> Fetched {
        let Some(url) = r.download_url.as_deref() else {
            log.push(Attempt::new(Phase::Direct, None, AttemptStatus::NoUrl));
            return None;
        };
        if self.policy.respect_robots && !self.robots_allow(url) {
            log.push(Attempt::new(Phase::Direct, Some(url), AttemptStatus::Disallowed));
            return None;
        }
        self.try_fetch(r, Phase::Direct, url, log)
    }

    fn archive(&self, r: &FirmwareRecord, log: &mut Vec<Attempt>) -> Fetched {
        let Some(url) = r.download_url.as_deref() else {
            log.push(Attempt::new(Phase::Archive, None, AttemptStatus::NoUrl));
            return None;
        };
        let caps = wayback::captures(url, self.clients.archive, &self.http(), log);
        caps.iter()
            .take(MAX_SNAPSHOTS)
            .find_map(|c| self.try_fetch(r, Phase::Archive, &self.clients.archive.snapshot_url(c), log))
    }

    fn hash_lookup(&self, r: &FirmwareRecord, log: &mut Vec<Attempt>) -> Fetched {
        let hl = self.clients.hash_lookup;
        let locator = hl.locator(&r.sha256);
        let status = match hl.lookup(&r.sha256, &self.http()) {
            Ok(Some(body)) => match self.check(r, &body) {
                Ok(verified) => {
                    log.push(Attempt::new(Phase::HashLookup, Some(&locator), AttemptStatus::Fetched));
                    return Some((body, verified));
                }
                Err(s) => s,
            },
            Ok(None) => AttemptStatus::NotFound,
            Err(e) => AttemptStatus::Error(e),
        };
        log.push(Attempt::new(Phase::HashLookup, Some(&locator), status));
        None
    }

    fn store(&self, r: &FirmwareRecord, body: &[u8]) -> io::Result<()> {
        if let Some(dir) = &self.policy.output_dir {
            let name = if self.policy.verify_hash { r.sha256.to_ascii_lowercase() } else { sha256_bytes(body) };
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }

    /// Runs the phases in order and stops at the first accepted payload.
    pub fn acquire_record(&self, index: usize, r: &FirmwareRecord) -> AcquisitionResult {
        let mut attempts = Vec::new();
        let phases: [(Outcome, PhaseFn<'a>); 3] = [
            (Outcome::Direct, Self::direct),
            (Outcome::Archive, Self::archive),
            (Outcome::HashLookup, Self::hash_lookup),
        ];
        let mut result = AcquisitionResult {
            index,
            sha256: r.sha256.clone(),
            manufacturer: r.manufacturer.clone(),
            outcome: Outcome::Missing,
            bytes_fetched: 0,
            attempts: Vec::new(),
            hash_verified: false,
            worklist: None,
            manual_recovered: false,
        };
        for (outcome, phase) in phases {
            if let Some((body, verified)) = phase(self, r, &mut attempts) {
                if let Err(e) = self.store(r, &body) {
                    log::error!("cannot store {}: {e}", r.sha256);
                    attempts.push(Attempt::new(Phase::Manual, None, AttemptStatus::Error(format!("store: {e}"))));
                    break;
                }
                result.outcome = outcome;
                result.bytes_fetched = body.len() as u64;
                result.hash_verified = verified;
                result.attempts = attempts;
                return result;
            }
        }
        if self.policy.manual_worklist {
            result.outcome = Outcome::ManualWorklist;
            result.worklist = Some(WorklistEntry::for_record(r));
        }
        result.attempts = attempts;
        result
    }

    /// Bounded worker pool over the manifest; results come back in manifest order.
    pub fn acquire_all(&self, m: &CorpusManifest) -> Vec<AcquisitionResult> {
        let next = AtomicUsize::new(0);
        let out = Mutex::new(Vec::with_capacity(m.len()));
        let workers = self.policy.max_parallel.min(m.len().max(1));
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(r) = m.records.get(i) else { break };
                    let res = self.acquire_record(i, r);
                    log::info!("{} {}: {:?}", r.manufacturer, r.sha256, res.outcome);
                    out.lock().unwrap_or_else(|e| e.into_inner()).push(res);
                });
            }
        });
        let mut results = out.into_inner().unwrap_or_else(|e| e.into_inner());
        results.sort_by_key(|r| r.index);
        results
    }
}

pub fn acquire_record(
    r: &FirmwareRecord,
    clients: Clients<'_>,
    policy: &AcquisitionPolicy,
) -> Result<AcquisitionResult, AcquireError> {
    Ok(Acquirer::new(clients, policy.clone())?.acquire_record(0, r))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcquisitionRun {
    pub results: Vec<AcquisitionResult>,
    pub report: ReplicationReport,
}

pub fn acquire_corpus(
    m: &CorpusManifest,
    clients: Clients<'_>,
    policy: &AcquisitionPolicy,
) -> Result<AcquisitionRun, AcquireError> {
    let start = Instant::now();
    let results = Acquirer::new(clients, policy.clone())?.acquire_all(m);
    let report = ReplicationReport::from_results(&results, start.elapsed());
    Ok(AcquisitionRun { results, report })
}

/// Matches outstanding worklist items against files collected by hand under `dir`
/// (any name, any depth). Returns how many were recovered.
pub fn resolve_manual(results: &mut [AcquisitionResult], dir: &Path) -> io::Result<usize> {
    let mut found = BTreeSet::new();
    for entry in walkdir::WalkDir::new(dir).follow_links(false) {
        let entry = entry.map_err(io::Error::other)?;
        if entry.file_type().is_file() {
            found.insert(sha256_file(entry.path())?);
        }
    }
    let mut n = 0;
    for r in results.iter_mut().filter(|r| r.outcome == Outcome::ManualWorklist && !r.manual_recovered) {
        if found.contains(&r.sha256.to_ascii_lowercase()) {
            r.manual_recovered = true;
            r.hash_verified = true;
            r.attempts.push(Attempt::new(Phase::Manual, Some(&dir.display().to_string()), AttemptStatus::Fetched));
            n += 1;
        }
    }
    Ok(n)
}

/// One line per sample still awaiting manual search.
pub fn write_worklist<W: Write>(results: &[AcquisitionResult], w: W) -> io::Result<()> {
    let mut t = TextTable::new(["manufacturer", "model", "file_name", "version", "sha256"]);
    for e in results.iter().filter(|r| !r.manual_recovered).filter_map(|r| r.worklist.as_ref()) {
        t.push([&e.manufacturer, &e.model, &e.file_name, &e.version, &e.sha256]);
    }
    t.write_csv(w)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub manufacturer: String,
    pub samples: usize,
    pub direct: usize,
    pub archive: usize,
    pub hash_lookup: usize,
    pub manual: usize,
    /// Worklist items not (yet) recovered by hand.
    pub worklist: usize,
    pub missing: usize,
}

impl ReplicationRow {
    pub fn replicated(&self) -> usize {
        self.direct + self.archive + self.hash_lookup + self.manual
    }

    fn add(&mut self, o: &ReplicationRow) {
        self.samples += o.samples;
        self.direct += o.direct;
        self.archive += o.archive;
        self.hash_lookup += o.hash_lookup;
        self.manual += o.manual;
        self.worklist += o.worklist;
        self.missing += o.missing;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    /// Sorted by manufacturer.
    pub rows: Vec<ReplicationRow>,
    pub total: ReplicationRow,
    pub duration_secs: f64,
}

impl ReplicationReport {
    pub fn from_results(results: &[AcquisitionResult], duration: Duration) -> Self {
        let mut by: BTreeMap<&str, ReplicationRow> = BTreeMap::new();
        for r in results {
            let row = by
                .entry(&r.manufacturer)
                .or_insert_with(|| ReplicationRow { manufacturer: r.manufacturer.clone(), ..Default::default() });
            row.samples += 1;
            match (r.outcome, r.manual_recovered) {
                (Outcome::Direct, _) => row.direct += 1,
                (Outcome::Archive, _) => row.archive += 1,
                (Outcome::HashLookup, _) => row.hash_lookup += 1,
                (Outcome::ManualWorklist, true) => row.manual += 1,
                (Outcome::ManualWorklist, false) => {
                    row.worklist += 1;
                    row.missing += 1;
                }
                (Outcome::Missing, _) => row.missing += 1,
            }
        }
        Self::from_rows(by.into_values().collect(), duration.as_secs_f64())
    }

    pub fn from_rows(mut rows: Vec<ReplicationRow>, duration_secs: f64) -> Self {
        rows.sort_by(|a, b| a.manufacturer.cmp(&b.manufacturer));
        let mut total = ReplicationRow { manufacturer: "Total".into(), ..Default::default() };
        for r in &rows {
            total.add(r);
        }
        Self { rows, total, duration_secs }
    }

    /// Same counts, ignoring wall-clock duration.
    pub fn same_counts(&self, other: &ReplicationReport) -> bool {
        self.rows == other.rows && self.total == other.total
    }

    fn render(&self, headers: [&str; 13]) -> TextTable {
        let mut t = TextTable::new(headers);
        for r in self.rows.iter().chain([&self.total]) {
            let n = r.samples;
            t.push([
                r.manufacturer.clone(),
                n.to_string(),
                r.replicated().to_string(),
                r.direct.to_string(),
                ratio_cell(r.direct, n),
                r.archive.to_string(),
                ratio_cell(r.archive, n),
                r.hash_lookup.to_string(),
                ratio_cell(r.hash_lookup, n),
                r.manual.to_string(),
                ratio_cell(r.manual, n),
                r.missing.to_string(),
                ratio_cell(r.missing, n),
            ]);
        }
        t
    }

    pub fn table(&self) -> TextTable {
        self.render([
            "Manufacturer",
            "Samples",
            "Replicated",
            "1: Link",
            "Ratio",
            "2: Archive",
            "Ratio",
            "3: Hash lookup",
            "Ratio",
            "4: Manual",
            "Ratio",
            "Missing",
            "Ratio",
        ])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        self.render([
            "manufacturer",
            "samples",
            "replicated",
            "direct",
            "direct_ratio",
            "archive",
            "archive_ratio",
            "hash_lookup",
            "hash_lookup_ratio",
            "manual",
            "manual_ratio",
            "missing",
            "missing_ratio",
        ])
        .write_csv(w)
    }
}

pub mod fixtures {
    use super::*;

    pub const REFERENCE_REPLICATION_CSV: &str = include_str!("../../data/reference_replication.csv");

    #[derive(Debug, Deserialize)]
    struct Row {
        manufacturer: String,
        samples: usize,
        replicated: usize,
        direct: usize,
        archive: usize,
        hash_lookup: usize,
        manual: usize,
        missing: usize,
    }

    /// Published per-manufacturer replication outcome of the reference corpus.
    pub fn reference_replication() -> ReplicationReport {
        let mut rd = csv::Reader::from_reader(REFERENCE_REPLICATION_CSV.as_bytes());
        let rows = rd
            .deserialize::<Row>()
            .map(|r| {
                let r = r.expect("bundled replication fixture parses");
                let row = ReplicationRow {
                    manufacturer: r.manufacturer,
                    samples: r.samples,
                    direct: r.direct,
                    archive: r.archive,
                    hash_lookup: r.hash_lookup,
                    manual: r.manual,
                    worklist: r.missing,
                    missing: r.missing,
                };
                assert_eq!(row.replicated(), r.replicated, "fixture row {} inconsistent", row.manufacturer);
                row
            })
            .collect();
        ReplicationReport::from_rows(rows, 0.0)
    }
}
