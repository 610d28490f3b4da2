//! Candidate matching of corpus records against exploit meta data.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::CorpusManifest;
use crate::table::TextTable;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroundTruthError {
    #[error("unparseable version '{0}'")]
    Version(String),
    #[error("malformed version constraint '{0}'")]
    Constraint(String),
    #[error("exploit db line {line}: {message}")]
    Db { line: usize, message: String },
}

/// Numeric segments plus whatever trails them. Equality follows the ordering,
/// so `2.0` equals `2.0.0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Version {
    pub segments: Vec<u64>,
    pub suffix: String,
    /// Input text, kept for display.
    pub raw: String,
}

impl Version {
    fn trimmed(&self) -> &[u64] {
        let end = self.segments.iter().rposition(|&s| s != 0).map_or(0, |i| i + 1);
        &self.segments[..end]
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.segments.len().max(other.segments.len());
        for i in 0..n {
            let a = self.segments.get(i).copied().unwrap_or(0);
            let b = other.segments.get(i).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        match (self.suffix.is_empty(), other.suffix.is_empty()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self.suffix.cmp(&other.suffix),
        }
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Version {}

impl std::hash::Hash for Version {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.trimmed().hash(state);
        self.suffix.hash(state);
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FromStr for Version {
    type Err = GroundTruthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_version(s)
    }
}

pub fn parse_version(s: &str) -> Result<Version, GroundTruthError> {
    let t = s.trim();
    let t = t.strip_prefix(['v', 'V']).unwrap_or(t);
    let b = t.as_bytes();
    let mut segments = Vec::new();
    let mut i = 0;
    loop {
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            break;
        }
        let seg = t[start..i].parse::<u64>().map_err(|_| GroundTruthError::Version(s.to_string()))?;
        segments.push(seg);
        if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
            i += 1;
        } else {
            break;
        }
    }
    if segments.is_empty() {
        return Err(GroundTruthError::Version(s.to_string()));
    }
    Ok(Version { segments, suffix: t[i..].to_string(), raw: s.trim().to_string() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Constraint {
    Eq(Version),
    Lt(Version),
    Le(Version),
    Gt(Version),
    Ge(Version),
    /// Inclusive on both ends.
    Range(Version, Version),
}

impl FromStr for Constraint {
    type Err = GroundTruthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || GroundTruthError::Constraint(s.to_string());
        let v = |x: &str| parse_version(x).map_err(|_| bad());
        if let Some((lo, hi)) = t.split_once("..") {
            let (lo, hi) = (v(lo)?, v(hi)?);
            if lo > hi {
                return Err(bad());
            }
            return Ok(Constraint::Range(lo, hi));
        }
        for (op, ctor) in [
            ("==", Constraint::Eq as fn(Version) -> Constraint),
            ("<=", Constraint::Le),
            (">=", Constraint::Ge),
            ("<", Constraint::Lt),
            (">", Constraint::Gt),
        ] {
            if let Some(rest) = t.strip_prefix(op) {
                return Ok(ctor(v(rest)?));
            }
        }
        Err(bad())
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Eq(v) => write!(f, "=={v}"),
            Constraint::Lt(v) => write!(f, "<{v}"),
            Constraint::Le(v) => write!(f, "<={v}"),
            Constraint::Gt(v) => write!(f, ">{v}"),
            Constraint::Ge(v) => write!(f, ">={v}"),
            Constraint::Range(a, b) => write!(f, "{a}..{b}"),
        }
    }
}

impl TryFrom<String> for Constraint {
    type Error = GroundTruthError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Constraint> for String {
    fn from(c: Constraint) -> String {
        c.to_string()
    }
}

pub fn version_satisfies(v: &Version, c: &Constraint) -> bool {
    match c {
        Constraint::Eq(x) => v == x,
        Constraint::Lt(x) => v < x,
        Constraint::Le(x) => v <= x,
        Constraint::Gt(x) => v > x,
        Constraint::Ge(x) => v >= x,
        Constraint::Range(a, b) => a <= v && v <= b,
    }
}

/// Lowercase with everything but ASCII letters and digits removed.
pub fn normalize(s: &str) -> String {
    s.chars().filter(char::is_ascii_alphanumeric).map(|c| c.to_ascii_lowercase()).collect()
}

/// Normalizes a model pattern but keeps the glob characters `*` and `?`.
fn normalize_glob(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '*' || *c == '?').map(|c| c.to_ascii_lowercase()).collect()
}

fn glob_match(pattern: &[u8], text: &[u8]) -> bool {
    // Iterative matcher with single-star backtracking.
    let (mut p, mut t) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while t < text.len() {
        if p < pattern.len() && (pattern[p] == b'?' || pattern[p] == text[t]) {
            p += 1;
            t += 1;
        } else if p < pattern.len() && pattern[p] == b'*' {
            star = Some((p, t));
            p += 1;
        } else if let Some((sp, st)) = star {
            p = sp + 1;
            t = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    pattern[p..].iter().all(|&c| c == b'*')
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploitEntry {
    pub id: String,
    #[serde(default)]
    pub cve_ids: Vec<String>,
    pub manufacturer_pattern: String,
    pub model_pattern: String,
    pub version_constraint: Constraint,
    #[serde(default)]
    pub advisory_ref: String,
}

impl ExploitEntry {
    pub fn validate(&self) -> Result<(), String> {
        if self.cve_ids.is_empty() && self.advisory_ref.trim().is_empty() {
            return Err(format!("exploit '{}' has neither CVE ids nor an advisory reference", self.id));
        }
        if normalize(&self.manufacturer_pattern).is_empty() || normalize_glob(&self.model_pattern).is_empty() {
            return Err(format!("exploit '{}' has an empty manufacturer or model pattern", self.id));
        }
        Ok(())
    }

    pub fn matches_device(&self, manufacturer: &str, model: &str) -> bool {
        normalize(manufacturer) == normalize(&self.manufacturer_pattern)
            && glob_match(normalize_glob(&self.model_pattern).as_bytes(), normalize(model).as_bytes())
    }
}

/// One JSON object per line; blank and `#` lines are skipped.
pub fn parse_exploit_db<R: BufRead>(r: R) -> Result<Vec<ExploitEntry>, GroundTruthError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| GroundTruthError::Db { line: line_no, message };
        let line = line.map_err(|e| err(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let e: ExploitEntry = serde_json::from_str(t).map_err(|e| err(e.to_string()))?;
        e.validate().map_err(err)?;
        out.push(e);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Confidence {
    Automatic,
    ManuallyConfirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthMatch {
    pub sha256: String,
    pub exploit_id: String,
    pub cve_ids: Vec<String>,
    pub confidence: Confidence,
    pub note: String,
}

impl GroundTruthMatch {
    /// Records a human check of the match.
    pub fn confirm(&mut self, note: &str) {
        self.confidence = Confidence::ManuallyConfirmed;
        self.note = note.to_string();
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchOutcome {
    pub matches: Vec<GroundTruthMatch>,
    /// Records skipped because their version does not parse: (sha256, version).
    pub unparseable: Vec<(String, String)>,
}

pub fn match_exploits(m: &CorpusManifest, db: &[ExploitEntry]) -> MatchOutcome {
    let mut out = MatchOutcome::default();
    for r in &m.records {
        let v = match parse_version(&r.firmware_version) {
            Ok(v) => v,
            Err(_) => {
                warn!("{} {} ({}): unparseable version {:?}", r.manufacturer, r.model, r.sha256, r.firmware_version);
                out.unparseable.push((r.sha256.clone(), r.firmware_version.clone()));
                continue;
            }
        };
        for e in db {
            if e.matches_device(&r.manufacturer, &r.model) && version_satisfies(&v, &e.version_constraint) {
                out.matches.push(GroundTruthMatch {
                    sha256: r.sha256.clone(),
                    exploit_id: e.id.clone(),
                    cve_ids: e.cve_ids.clone(),
                    confidence: Confidence::Automatic,
                    note: format!("version {} satisfies {}", r.firmware_version, e.version_constraint),
                });
            }
        }
    }
    out
}

pub fn write_match_csv<W: Write>(matches: &[GroundTruthMatch], w: W) -> io::Result<()> {
    let mut t = TextTable::new(["sha256", "exploit_id", "cve_ids", "confidence", "note"]);
    for m in matches {
        t.push([
            m.sha256.clone(),
            m.exploit_id.clone(),
            m.cve_ids.join(";"),
            format!("{:?}", m.confidence),
            m.note.clone(),
        ]);
    }
    t.write_csv(w)
}
