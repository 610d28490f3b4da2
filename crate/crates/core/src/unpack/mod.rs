//! Recursive firmware unpacking.
//!
//! Every extracted node goes back through format detection until it is of an
//! unknown format, the depth limit is hit, or its sha256 was already unpacked
//! in the same run (cycle guard). Failures are recorded per node and never
//! abort siblings. The report lists leaf files only: containers that unpacked
//! successfully are represented by their contents.

mod external;
mod formats;
mod verify;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256_bytes;

pub use external::{ExternalUnpacker, RegistryConfig};
pub use formats::{CpioNewcUnpacker, GzipUnpacker, TarUnpacker, ZipUnpacker};
pub use verify::{content_dedup, verify_unpack, ContentDedupIndex, MarkerSet, VerificationResult, DEFAULT_MARKERS};

/// Container format identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum FormatId {
    Gzip,
    Zip,
    Tar,
    CpioNewc,
    Directory,
    Unknown,
    External(String),
}

impl fmt::Display for FormatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormatId::Gzip => "gzip",
            FormatId::Zip => "zip",
            FormatId::Tar => "tar",
            FormatId::CpioNewc => "cpio_newc",
            FormatId::Directory => "directory",
            FormatId::Unknown => "unknown",
            FormatId::External(name) => name,
        })
    }
}

impl From<String> for FormatId {
    fn from(s: String) -> Self {
        match s.as_str() {
            "gzip" => FormatId::Gzip,
            "zip" => FormatId::Zip,
            "tar" => FormatId::Tar,
            "cpio_newc" => FormatId::CpioNewc,
            "directory" => FormatId::Directory,
            "unknown" => FormatId::Unknown,
            _ => FormatId::External(s),
        }
    }
}

impl From<FormatId> for String {
    fn from(f: FormatId) -> String {
        f.to_string()
    }
}

/// Number of leading bytes magic detection looks at.
pub const DETECT_WINDOW: usize = 512;

/// Magic-byte container detection on the first 512 bytes of a node.
pub fn detect_container(head: &[u8], _len: u64) -> FormatId {
    let head = &head[..head.len().min(DETECT_WINDOW)];
    if head.starts_with(&[0x1f, 0x8b]) {
        FormatId::Gzip
    } else if head.starts_with(b"PK\x03\x04") {
        FormatId::Zip
    } else if head.len() >= 262 && &head[257..262] == b"ustar" {
        FormatId::Tar
    } else if head.starts_with(b"070701") {
        FormatId::CpioNewc
    } else {
        FormatId::Unknown
    }
}

/// Format of a filesystem path: directories are containers of their own.
pub fn detect_path(path: &Path) -> io::Result<FormatId> {
    if path.is_dir() {
        return Ok(FormatId::Directory);
    }
    let data = fs::read(path)?;
    Ok(detect_container(&data, data.len() as u64))
}

#[derive(Debug, Error)]
pub enum UnpackError {
    #[error("corrupt {format} data: {message}")]
    Corrupt { format: FormatId, message: String },
    #[error("extraction byte budget exceeded")]
    BudgetExceeded,
    #[error("external unpacker '{id}' failed: {message}")]
    External { id: String, message: String },
    #[error("unpacker registry is empty")]
    EmptyRegistry,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One member produced by a single container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub path: String,
    pub data: Vec<u8>,
}

/// A format handler. `unpack` must not return more than `budget` bytes of
/// member data; it returns [`UnpackError::BudgetExceeded`] instead.
pub trait Unpacker: Send + Sync {
    fn format(&self) -> FormatId;
    fn claims(&self, head: &[u8], len: u64) -> bool;
    fn unpack(&self, data: &[u8], name_hint: &str, budget: u64) -> Result<Vec<Member>, UnpackError>;
}

/// Ordered set of unpackers; the first one that claims a node handles it.
#[derive(Default)]
pub struct Registry {
    unpackers: Vec<Box<dyn Unpacker>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.unpackers.iter().map(|u| u.format())).finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// gzip, zip, tar and cpio (newc).
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(GzipUnpacker));
        r.register(Box::new(ZipUnpacker));
        r.register(Box::new(TarUnpacker));
        r.register(Box::new(CpioNewcUnpacker));
        r
    }

    pub fn register(&mut self, u: Box<dyn Unpacker>) {
        self.unpackers.push(u);
    }

    pub fn with_config(mut self, cfg: &RegistryConfig) -> Self {
        for ext in &cfg.external {
            self.register(Box::new(ext.clone()));
        }
        self
    }

    pub fn is_empty(&self) -> bool {
        self.unpackers.is_empty()
    }

    pub fn formats(&self) -> Vec<FormatId> {
        self.unpackers.iter().map(|u| u.format()).collect()
    }

    pub fn find(&self, data: &[u8]) -> Option<&dyn Unpacker> {
        let head = &data[..data.len().min(DETECT_WINDOW)];
        self.unpackers.iter().find(|u| u.claims(head, data.len() as u64)).map(|u| u.as_ref())
    }

    pub fn detect(&self, data: &[u8]) -> FormatId {
        self.find(data).map_or(FormatId::Unknown, |u| u.format())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_depth: usize,
    pub max_total_bytes: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_depth: 8, max_total_bytes: 4 * 1024 * 1024 * 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExtractedFile {
    pub path: String,
    pub size_bytes: u64,
    pub sha256: String,
    pub depth: usize,
    pub container_chain: Vec<FormatId>,
    /// Index of the container node that yielded this file.
    pub node: usize,
    /// Path of the file inside that container.
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FailedNode {
    pub path: String,
    pub format: FormatId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UnpackReport {
    pub firmware_sha256: String,
    pub files: Vec<ExtractedFile>,
    pub failed_nodes: Vec<FailedNode>,
    pub max_depth_reached: bool,
    pub budget_exceeded: bool,
    /// Paths of nodes skipped because their sha256 was already unpacked in this run.
    pub cycle_skips: Vec<String>,
    /// Member paths that had `..`, absolute or empty components removed.
    pub sanitized_paths: usize,
}

/// Strips `..`, `.`, empty and absolute components. Returns the clean path and
/// whether anything was removed.
pub fn sanitize_member_path(raw: &str) -> (String, bool) {
    let mut parts = Vec::new();
    let mut changed = raw.starts_with('/') || raw.starts_with('\\');
    for seg in raw.split(['/', '\\']) {
        match seg {
            "" | "." => {}
            ".." => changed = true,
            s if s.contains('\0') => {
                changed = true;
                parts.push(s.replace('\0', ""));
            }
            s => parts.push(s.to_string()),
        }
    }
    parts.retain(|p| !p.is_empty());
    if parts.is_empty() {
        return ("unnamed".to_string(), true);
    }
    (parts.join("/"), changed)
}

fn join_path(parent: &str, child: &str) -> String {
    if parent.is_empty() {
        child.to_string()
    } else {
        format!("{parent}/{child}")
    }
}

struct Walker<'a> {
    registry: &'a Registry,
    limits: Limits,
    seen: HashSet<String>,
    used_bytes: u64,
    next_node: usize,
    report: UnpackReport,
    sink: &'a mut dyn FnMut(&ExtractedFile, &[u8]),
}

struct Node<'d> {
    data: &'d [u8],
    sha256: String,
    path: String,
    name: String,
    parent_node: usize,
    depth: usize,
    chain: Vec<FormatId>,
}

impl Walker<'_> {
    fn emit(&mut self, node: &Node<'_>) {
        let f = ExtractedFile {
            path: node.path.clone(),
            size_bytes: node.data.len() as u64,
            sha256: node.sha256.clone(),
            depth: node.depth,
            container_chain: node.chain.clone(),
            node: node.parent_node,
            name: node.name.clone(),
        };
        (self.sink)(&f, node.data);
        self.report.files.push(f);
    }

    fn visit(&mut self, node: Node<'_>) {
        let is_root = node.depth == 0;
        let Some(unpacker) = self.registry.find(node.data) else {
            if is_root {
                self.report.failed_nodes.push(FailedNode {
                    path: node.path.clone(),
                    format: FormatId::Unknown,
                    reason: "no unpacker claims this data".to_string(),
                });
            } else {
                self.emit(&node);
            }
            return;
        };
        if self.seen.contains(&node.sha256) {
            self.report.cycle_skips.push(node.path.clone());
            self.emit(&node);
            return;
        }
        if node.depth >= self.limits.max_depth {
            self.report.max_depth_reached = true;
            self.emit(&node);
            return;
        }
        if self.report.budget_exceeded {
            self.emit(&node);
            return;
        }
        self.seen.insert(node.sha256.clone());
        let format = unpacker.format();
        let budget = self.limits.max_total_bytes.saturating_sub(self.used_bytes);
        let hint = node.name.rsplit('/').next().unwrap_or("").to_string();
        let members = match unpacker.unpack(node.data, &hint, budget) {
            Ok(m) => m,
            Err(e) => {
                if matches!(e, UnpackError::BudgetExceeded) {
                    self.report.budget_exceeded = true;
                }
                self.report.failed_nodes.push(FailedNode { path: node.path.clone(), format, reason: e.to_string() });
                if !is_root {
                    self.emit(&node);
                }
                return;
            }
        };
        self.descend(&node, format, members);
    }

    fn descend(&mut self, node: &Node<'_>, format: FormatId, members: Vec<Member>) {
        let this_node = self.next_node;
        self.next_node += 1;
        let mut chain = node.chain.clone();
        chain.push(format);
        for m in members {
            let size = m.data.len() as u64;
            if self.used_bytes.saturating_add(size) > self.limits.max_total_bytes {
                self.report.budget_exceeded = true;
                warn!("{}: extraction budget exhausted at {}", self.report.firmware_sha256, node.path);
                break;
            }
            self.used_bytes += size;
            let (clean, changed) = sanitize_member_path(&m.path);
            if changed {
                self.report.sanitized_paths += 1;
                warn!("{}: hostile member path {:?} sanitized to {:?}", self.report.firmware_sha256, m.path, clean);
            }
            let child = Node {
                sha256: sha256_bytes(&m.data),
                data: &m.data,
                path: join_path(&node.path, &clean),
                name: clean,
                parent_node: this_node,
                depth: node.depth + 1,
                chain: chain.clone(),
            };
            self.visit(child);
        }
    }
}

/// Unpacks `firmware` recursively, handing each leaf file and its bytes to `sink`.
pub fn unpack_with_sink(
    firmware: &[u8],
    registry: &Registry,
    limits: Limits,
    sink: &mut dyn FnMut(&ExtractedFile, &[u8]),
) -> Result<UnpackReport, UnpackError> {
    if registry.is_empty() {
        return Err(UnpackError::EmptyRegistry);
    }
    let sha = sha256_bytes(firmware);
    let mut walker = Walker {
        registry,
        limits,
        seen: HashSet::new(),
        used_bytes: 0,
        next_node: 0,
        report: UnpackReport { firmware_sha256: sha.clone(), ..Default::default() },
        sink,
    };
    walker.visit(Node {
        data: firmware,
        sha256: sha,
        path: String::new(),
        name: String::new(),
        parent_node: 0,
        depth: 0,
        chain: Vec::new(),
    });
    let mut report = walker.report;
    report.files.sort();
    report.failed_nodes.sort();
    report.cycle_skips.sort();
    Ok(report)
}

/// Treats an already extracted directory tree as the root container.
pub fn unpack_directory(root: &Path, registry: &Registry, limits: Limits) -> Result<UnpackReport, UnpackError> {
    if registry.is_empty() {
        return Err(UnpackError::EmptyRegistry);
    }
    let mut members = Vec::new();
    let mut hasher_input = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(io::Error::other)?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("below root");
        let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        let data = fs::read(entry.path())?;
        hasher_input.extend_from_slice(path.as_bytes());
        hasher_input.push(0);
        hasher_input.extend_from_slice(sha256_bytes(&data).as_bytes());
        hasher_input.push(b'\n');
        members.push(Member { path, data });
    }
    // A directory has no bytes of its own; its id hashes the sorted (path, sha256) listing.
    let sha = sha256_bytes(&hasher_input);
    let mut sink = |_: &ExtractedFile, _: &[u8]| {};
    let mut walker = Walker {
        registry,
        limits,
        seen: HashSet::new(),
        used_bytes: 0,
        next_node: 0,
        report: UnpackReport { firmware_sha256: sha.clone(), ..Default::default() },
        sink: &mut sink,
    };
    let root_node = Node {
        data: &[],
        sha256: sha,
        path: String::new(),
        name: String::new(),
        parent_node: 0,
        depth: 0,
        chain: Vec::new(),
    };
    walker.descend(&root_node, FormatId::Directory, members);
    let mut report = walker.report;
    report.files.sort();
    report.failed_nodes.sort();
    report.cycle_skips.sort();
    Ok(report)
}

pub fn unpack_recursive(firmware: &[u8], registry: &Registry, limits: Limits) -> Result<UnpackReport, UnpackError> {
    unpack_with_sink(firmware, registry, limits, &mut |_, _| {})
}

/// Leaf files with their contents, sorted by file.
pub type ExtractedContents = Vec<(ExtractedFile, Vec<u8>)>;

/// Unpacks and keeps every leaf file's bytes alongside the report.
pub fn unpack_in_memory(
    firmware: &[u8],
    registry: &Registry,
    limits: Limits,
) -> Result<(UnpackReport, ExtractedContents), UnpackError> {
    let mut files = Vec::new();
    let report = unpack_with_sink(firmware, registry, limits, &mut |f, d| files.push((f.clone(), d.to_vec())))?;
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((report, files))
}

fn file_alias(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".file");
    PathBuf::from(s)
}

fn member_target(base: &Path, f: &ExtractedFile) -> PathBuf {
    let (clean, _) = sanitize_member_path(&f.name);
    let mut p = base.join(f.node.to_string());
    for seg in clean.split('/') {
        p.push(seg);
    }
    p
}

/// Writes leaf files below `root` as `<firmware sha256>/<node-index>/<member path>`.
pub struct DirSink {
    base: PathBuf,
    errors: Vec<io::Error>,
}

impl DirSink {
    pub fn new(root: &Path, firmware_sha256: &str) -> io::Result<Self> {
        let base = root.join(firmware_sha256);
        fs::create_dir_all(&base)?;
        Ok(Self { base, errors: Vec::new() })
    }

    pub fn base(&self) -> &Path {
        &self.base
    }

    pub fn target(&self, f: &ExtractedFile) -> PathBuf {
        member_target(&self.base, f)
    }

    pub fn write(&mut self, f: &ExtractedFile, data: &[u8]) {
        let target = self.target(f);
        debug_assert!(target.starts_with(&self.base));
        let res = target.parent().map_or(Ok(()), |dir| self.make_dirs(dir)).and_then(|_| {
            // A file and a directory may share a member path; suffix the file.
            let t = if target.is_dir() { file_alias(&target) } else { target.clone() };
            fs::write(t, data)
        });
        if let Err(e) = res {
            self.errors.push(e);
        }
    }

    /// Like `create_dir_all`, but a file already sitting where a directory is
    /// needed is moved to its `.file` alias first.
    fn make_dirs(&self, dir: &Path) -> io::Result<()> {
        let rel = dir.strip_prefix(&self.base).map_err(io::Error::other)?;
        let mut p = self.base.clone();
        for c in rel.components() {
            p.push(c);
            if p.is_file() {
                fs::rename(&p, file_alias(&p))?;
            }
        }
        fs::create_dir_all(dir)
    }

    pub fn finish(self) -> Result<(), io::Error> {
        match self.errors.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Unpacks to disk under `root` and stores `report.json` next to the extracted tree.
pub fn unpack_to_dir(
    firmware: &[u8],
    registry: &Registry,
    limits: Limits,
    root: &Path,
) -> Result<UnpackReport, UnpackError> {
    let sha = sha256_bytes(firmware);
    let mut sink = DirSink::new(root, &sha)?;
    let report = unpack_with_sink(firmware, registry, limits, &mut |f, d| sink.write(f, d))?;
    let base = sink.base().to_path_buf();
    sink.finish()?;
    let json = serde_json::to_vec_pretty(&report).map_err(io::Error::other)?;
    fs::write(base.join("report.json"), json)?;
    Ok(report)
}

/// One firmware tree written by [`unpack_to_dir`].
#[derive(Debug, Clone)]
pub struct UnpackedTree {
    pub report: UnpackReport,
    pub base: PathBuf,
}

impl UnpackedTree {
    pub fn file_path(&self, f: &ExtractedFile) -> PathBuf {
        let t = member_target(&self.base, f);
        if t.is_dir() {
            file_alias(&t)
        } else {
            t
        }
    }

    pub fn read(&self, f: &ExtractedFile) -> io::Result<Vec<u8>> {
        fs::read(self.file_path(f))
    }
}

/// Reads back every `<root>/<sha256>/report.json`, sorted by firmware sha256.
pub fn read_unpacked(root: &Path) -> io::Result<Vec<UnpackedTree>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root)? {
        let base = entry?.path();
        let report_path = base.join("report.json");
        if !report_path.is_file() {
            continue;
        }
        let report: UnpackReport = serde_json::from_slice(&fs::read(&report_path)?)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", report_path.display())))?;
        out.push(UnpackedTree { report, base });
    }
    out.sort_by(|a, b| a.report.firmware_sha256.cmp(&b.report.firmware_sha256));
    Ok(out)
}
