//! Web-archive fallback: CDX capture index plus raw snapshot replay.

use serde_json::Value;

use super::clients::HttpClient;
use super::Attempt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CdxCapture {
    /// 14-digit `YYYYMMDDhhmmss`, so lexical order is chronological.
    pub timestamp: String,
    pub original: String,
    pub statuscode: String,
}

pub trait ArchiveIndex: Send + Sync {
    fn query_url(&self, original: &str) -> String;
    fn parse(&self, body: &[u8]) -> Result<Vec<CdxCapture>, String>;
    fn snapshot_url(&self, capture: &CdxCapture) -> String;
}

/// CDX server API as exposed by the Wayback Machine.
#[derive(Debug, Clone)]
pub struct WaybackIndex {
    pub base: String,
}

impl WaybackIndex {
    pub const PUBLIC: &'static str = "https://web.archive.org";

    pub fn new(base: &str) -> Self {
        Self { base: base.trim_end_matches('/').to_string() }
    }
}

impl Default for WaybackIndex {
    fn default() -> Self {
        Self::new(Self::PUBLIC)
    }
}

impl ArchiveIndex for WaybackIndex {
    fn query_url(&self, original: &str) -> String {
        let q: String = url::form_urlencoded::Serializer::new(String::new())
            .append_pair("url", original)
            .append_pair("output", "json")
            .append_pair("fl", "timestamp,original,statuscode")
            .append_pair("filter", "statuscode:200")
            .finish();
        format!("{}/cdx/search/cdx?{q}", self.base)
    }

    fn parse(&self, body: &[u8]) -> Result<Vec<CdxCapture>, String> {
        parse_cdx_json(body)
    }

    fn snapshot_url(&self, c: &CdxCapture) -> String {
        // id_ asks for the unmodified archived bytes instead of the rewritten page
        format!("{}/web/{}id_/{}", self.base, c.timestamp, c.original)
    }
}

/// JSON output: an array of string rows, the first of which names the fields.
/// An empty body means no captures.
pub fn parse_cdx_json(body: &[u8]) -> Result<Vec<CdxCapture>, String> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(Vec::new());
    }
    let rows: Vec<Vec<Value>> = serde_json::from_slice(body).map_err(|e| format!("bad CDX response: {e}"))?;
    let Some((header, rest)) = rows.split_first() else { return Ok(Vec::new()) };
    let col = |name: &str| {
        header.iter().position(|h| h.as_str() == Some(name)).ok_or_else(|| format!("CDX response lacks {name} column"))
    };
    let (ti, oi, si) = (col("timestamp")?, col("original")?, col("statuscode")?);
    rest.iter()
        .map(|row| {
            let cell =
                |i: usize| row.get(i).and_then(Value::as_str).map(str::to_string).ok_or("short CDX row".to_string());
            Ok(CdxCapture { timestamp: cell(ti)?, original: cell(oi)?, statuscode: cell(si)? })
        })
        .collect()
}

/// Status-200 captures, newest first. Index failures are logged in `log` and yield none.
pub(crate) fn captures(
    original: &str,
    index: &dyn ArchiveIndex,
    http: &dyn HttpClient,
    log: &mut Vec<Attempt>,
) -> Vec<CdxCapture> {
    let q = index.query_url(original);
    let resp = http.get(&q);
    let mut caps = match resp {
        Ok(r) if r.status == 200 => match index.parse(&r.body) {
            Ok(c) => {
                log.push(Attempt::archive_index(&q, super::AttemptStatus::Http(200)));
                c
            }
            Err(e) => {
                log.push(Attempt::archive_index(&q, super::AttemptStatus::Error(e)));
                return Vec::new();
            }
        },
        Ok(r) => {
            log.push(Attempt::archive_index(&q, super::AttemptStatus::Http(r.status)));
            return Vec::new();
        }
        Err(e) => {
            log::warn!("archive index unreachable for {original}: {e}");
            log.push(Attempt::archive_index(&q, super::AttemptStatus::Error(e)));
            return Vec::new();
        }
    };
    caps.retain(|c| c.statuscode == "200");
    caps.sort_by(|a, b| b.timestamp.cmp(&a.timestamp));
    caps.dedup_by(|a, b| a.timestamp == b.timestamp);
    caps
}

/// Replayable URL of the newest status-200 capture of `original`, if any.
pub fn wayback_lookup(original: &str, index: &dyn ArchiveIndex, http: &dyn HttpClient) -> Option<String> {
    let mut log = Vec::new();
    captures(original, index, http, &mut log).first().map(|c| index.snapshot_url(c))
}
