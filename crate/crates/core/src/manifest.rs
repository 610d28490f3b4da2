//! Corpus manifest: the per-sample meta-data schema, its line-delimited file
//! format, record validation and corpus composition analytics.
//!
//! A manifest file is UTF-8 JSON Lines. Every line is one object carrying the
//! fields `manufacturer, model, device_class, firmware_version, release_date,
//! download_url, sha256, size_bytes, fuzzy_digest, firmware_type,
//! unpack_status, notes`. Fields the schema does not know are kept by appending
//! `key=value` to `notes`, so nothing a curator wrote is lost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::digest::FuzzyDigest;
use crate::table::TextTable;

pub const SCHEMA_VERSION: u32 = 1;

/// The 22 device-class labels used for corpus records.
pub const DEVICE_CLASSES: [&str; 22] = [
    "switch",
    "router",
    "ipcam",
    "repeater",
    "mesh",
    "controller",
    "accesspoint",
    "powerline",
    "modem",
    "power_supply",
    "wifi-usb",
    "recorder",
    "nas",
    "phone",
    "board",
    "kvm",
    "converter",
    "san",
    "printer",
    "media",
    "encoder",
    "gateway",
];

/// Field names in serialization order.
pub const FIELDS: [&str; 12] = [
    "manufacturer",
    "model",
    "device_class",
    "firmware_version",
    "release_date",
    "download_url",
    "sha256",
    "size_bytes",
    "fuzzy_digest",
    "firmware_type",
    "unpack_status",
    "notes",
];

pub fn is_device_class(label: &str) -> bool {
    DEVICE_CLASSES.contains(&label)
}

/// Firmware taxonomy by OS abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum FirmwareType {
    /// General purpose OS (desktop/server).
    Type0,
    /// Retrofitted general purpose OS, e.g. embedded Linux.
    TypeI,
    /// Special purpose embedded OS.
    TypeII,
    /// Bare-metal monolith.
    TypeIII,
    #[default]
    Unknown,
}

impl FirmwareType {
    /// Roman label as used in survey tables (`0`, `I`, `II`, `III`).
    pub fn roman(self) -> Option<&'static str> {
        match self {
            FirmwareType::Type0 => Some("0"),
            FirmwareType::TypeI => Some("I"),
            FirmwareType::TypeII => Some("II"),
            FirmwareType::TypeIII => Some("III"),
            FirmwareType::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum UnpackStatus {
    #[default]
    Untested,
    Unpacked,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DatePrecision {
    Day,
    Month,
    Year,
}

/// Calendar release date. Month- or year-precision sources are stored as the
/// first day of the period and keep their precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ReleaseDate {
    pub date: NaiveDate,
    pub precision: DatePrecision,
}

impl ReleaseDate {
    pub fn day(date: NaiveDate) -> Self {
        Self { date, precision: DatePrecision::Day }
    }

    pub fn year(&self) -> i32 {
        self.date.year()
    }
}

impl FromStr for ReleaseDate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parts: Vec<&str> = s.split('-').collect();
        let num = |p: &str, len: usize| -> Result<u32, String> {
            if p.len() != len || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("'{s}' is not an ISO 8601 date"));
            }
            p.parse::<u32>().map_err(|e| e.to_string())
        };
        let (y, m, d, precision) = match parts.as_slice() {
            [y] => (num(y, 4)?, 1, 1, DatePrecision::Year),
            [y, m] => (num(y, 4)?, num(m, 2)?, 1, DatePrecision::Month),
            [y, m, d] => (num(y, 4)?, num(m, 2)?, num(d, 2)?, DatePrecision::Day),
            _ => return Err(format!("'{s}' is not an ISO 8601 date")),
        };
        let date =
            NaiveDate::from_ymd_opt(y as i32, m, d).ok_or_else(|| format!("'{s}' is not a valid calendar date"))?;
        Ok(Self { date, precision })
    }
}

impl TryFrom<String> for ReleaseDate {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl fmt::Display for ReleaseDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.precision {
            DatePrecision::Day => write!(f, "{}", self.date.format("%Y-%m-%d")),
            DatePrecision::Month => write!(f, "{}", self.date.format("%Y-%m")),
            DatePrecision::Year => write!(f, "{}", self.date.format("%Y")),
        }
    }
}

impl From<ReleaseDate> for String {
    fn from(d: ReleaseDate) -> String {
        d.to_string()
    }
}

/// Fuzzy digest slot of a record: either the built-in block digest or an
/// externally produced digest (SSDeep, TLSH, ...) kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FuzzyDigestField {
    Block(FuzzyDigest),
    External(String),
}

impl TryFrom<String> for FuzzyDigestField {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s.starts_with(FuzzyDigest::PREFIX) {
            s.parse::<FuzzyDigest>().map(FuzzyDigestField::Block)
        } else {
            Ok(FuzzyDigestField::External(s))
        }
    }
}

impl From<FuzzyDigestField> for String {
    fn from(f: FuzzyDigestField) -> String {
        match f {
            FuzzyDigestField::Block(d) => d.to_string(),
            FuzzyDigestField::External(s) => s,
        }
    }
}

/// One corpus entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirmwareRecord {
    pub manufacturer: String,
    pub model: String,
    pub device_class: String,
    pub firmware_version: String,
    pub release_date: Option<ReleaseDate>,
    pub download_url: Option<String>,
    pub sha256: String,
    pub size_bytes: u64,
    pub fuzzy_digest: Option<FuzzyDigestField>,
    pub firmware_type: FirmwareType,
    pub unpack_status: UnpackStatus,
    pub notes: String,
}

impl FirmwareRecord {
    /// Record with the mandatory identity fields set and everything else empty.
    pub fn new(manufacturer: &str, model: &str, device_class: &str, sha256: &str) -> Self {
        Self {
            manufacturer: manufacturer.to_string(),
            model: model.to_string(),
            device_class: device_class.to_string(),
            firmware_version: String::new(),
            release_date: None,
            download_url: None,
            sha256: sha256.to_string(),
            size_bytes: 0,
            fuzzy_digest: None,
            firmware_type: FirmwareType::Unknown,
            unpack_status: UnpackStatus::Untested,
            notes: String::new(),
        }
    }

    /// Device identity: distinct (manufacturer, model) pairs count as devices.
    pub fn device_key(&self) -> (&str, &str) {
        (&self.manufacturer, &self.model)
    }

    /// File name component of the download URL, if any.
    pub fn file_name(&self) -> Option<&str> {
        let url = self.download_url.as_deref()?;
        let path = url.split(['?', '#']).next().unwrap_or(url);
        path.rsplit('/').next().filter(|s| !s.is_empty())
    }
}

/// Ordered list of records.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub records: Vec<FirmwareRecord>,
    pub schema_version: u32,
}

impl CorpusManifest {
    pub fn new(records: Vec<FirmwareRecord>) -> Self {
        Self { records, schema_version: SCHEMA_VERSION }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn by_sha256(&self) -> BTreeMap<&str, &FirmwareRecord> {
        self.records.iter().map(|r| (r.sha256.as_str(), r)).collect()
    }
}

/// A rule a record field broke.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Empty,
    Sha256Format,
    UnknownDeviceClass(String),
    DateBeforeFloor(NaiveDate),
    NotAbsoluteUrl(String),
    ZeroSizeAfterFetch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::Empty => write!(f, "{} must not be empty", self.field),
            Rule::Sha256Format => write!(f, "{} must be 64 lowercase hex characters", self.field),
            Rule::UnknownDeviceClass(c) => write!(f, "{} '{c}' is not in the device-class vocabulary", self.field),
            Rule::DateBeforeFloor(d) => write!(f, "{} {d} is before 1990-01-01", self.field),
            Rule::NotAbsoluteUrl(u) => write!(f, "{} '{u}' is not an absolute URL", self.field),
            Rule::ZeroSizeAfterFetch => write!(f, "{} must be > 0 for a fetched sample", self.field),
        }
    }
}

pub fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

pub fn is_absolute_url(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once("://") else {
        return false;
    };
    let mut chars = scheme.chars();
    let scheme_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    let host = rest.split(['/', '?', '#']).next().unwrap_or("");
    scheme_ok && !host.is_empty() && !s.chars().any(char::is_whitespace)
}

fn date_floor() -> NaiveDate {
    NaiveDate::from_ymd_opt(1990, 1, 1).expect("valid date")
}

/// Checks every record invariant; an empty list means the record is valid.
pub fn validate_record(r: &FirmwareRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if r.manufacturer.trim().is_empty() {
        out.push(Violation { field: "manufacturer", rule: Rule::Empty });
    }
    if r.model.trim().is_empty() {
        out.push(Violation { field: "model", rule: Rule::Empty });
    }
    if !is_device_class(&r.device_class) {
        out.push(Violation { field: "device_class", rule: Rule::UnknownDeviceClass(r.device_class.clone()) });
    }
    if let Some(d) = r.release_date {
        if d.date < date_floor() {
            out.push(Violation { field: "release_date", rule: Rule::DateBeforeFloor(d.date) });
        }
    }
    if let Some(url) = &r.download_url {
        if !is_absolute_url(url) {
            out.push(Violation { field: "download_url", rule: Rule::NotAbsoluteUrl(url.clone()) });
        }
    }
    if !is_sha256_hex(&r.sha256) {
        out.push(Violation { field: "sha256", rule: Rule::Sha256Format });
    }
    // A sample whose unpack status is known has been fetched at some point.
    if r.download_url.is_some() && r.unpack_status != UnpackStatus::Untested && r.size_bytes == 0 {
        out.push(Violation { field: "size_bytes", rule: Rule::ZeroSizeAfterFetch });
    }
    out
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("malformed record at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid {field} at line {line}: {message}")]
    Field { line: usize, field: String, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ManifestError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ManifestError::Syntax { line, .. } | ManifestError::Field { line, .. } => Some(*line),
            ManifestError::Io(_) => None,
        }
    }
}

/// Records that parsed and validated, plus one error per rejected line.
#[derive(Debug, Default)]
pub struct ParsedManifest {
    pub manifest: CorpusManifest,
    pub errors: Vec<ManifestError>,
}

impl ParsedManifest {
    /// Fails on the first rejected line.
    pub fn into_result(self) -> Result<CorpusManifest, ManifestError> {
        match self.errors.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(self.manifest),
        }
    }
}

fn take_field<T: serde::de::DeserializeOwned>(
    obj: &mut Map<String, Value>,
    field: &str,
    line: usize,
) -> Result<Option<T>, ManifestError> {
    match obj.remove(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v).map(Some).map_err(|e| ManifestError::Field {
            line,
            field: field.to_string(),
            message: e.to_string(),
        }),
    }
}

fn required<T>(v: Option<T>, field: &str, line: usize) -> Result<T, ManifestError> {
    v.ok_or_else(|| ManifestError::Field { line, field: field.to_string(), message: "missing".to_string() })
}

/// Parses one manifest line (1-based `line` for error positions).
pub fn parse_record_line(text: &str, line: usize) -> Result<FirmwareRecord, ManifestError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ManifestError::Syntax { line, message: e.to_string() })?;
    let Value::Object(mut obj) = value else {
        return Err(ManifestError::Syntax { line, message: "expected a JSON object".to_string() });
    };
    let manufacturer = required(take_field::<String>(&mut obj, "manufacturer", line)?, "manufacturer", line)?;
    let model = required(take_field::<String>(&mut obj, "model", line)?, "model", line)?;
    let device_class = required(take_field::<String>(&mut obj, "device_class", line)?, "device_class", line)?;
    let firmware_version = take_field::<String>(&mut obj, "firmware_version", line)?.unwrap_or_default();
    let release_date = take_field::<ReleaseDate>(&mut obj, "release_date", line)?;
    let download_url = take_field::<String>(&mut obj, "download_url", line)?;
    let sha256 = required(take_field::<String>(&mut obj, "sha256", line)?, "sha256", line)?;
    let size_bytes = take_field::<u64>(&mut obj, "size_bytes", line)?.unwrap_or(0);
    let fuzzy_digest = take_field::<FuzzyDigestField>(&mut obj, "fuzzy_digest", line)?;
    let firmware_type = take_field::<FirmwareType>(&mut obj, "firmware_type", line)?.unwrap_or_default();
    let unpack_status = take_field::<UnpackStatus>(&mut obj, "unpack_status", line)?.unwrap_or_default();
    let mut notes = take_field::<String>(&mut obj, "notes", line)?.unwrap_or_default();
    for (key, value) in obj {
        if !notes.is_empty() {
            notes.push_str("; ");
        }
        let rendered = match value {
            Value::String(s) => s,
            other => other.to_string(),
        };
        notes.push_str(&format!("{key}={rendered}"));
    }
    let record = FirmwareRecord {
        manufacturer,
        model,
        device_class,
        firmware_version,
        release_date,
        download_url,
        sha256,
        size_bytes,
        fuzzy_digest,
        firmware_type,
        unpack_status,
        notes,
    };
    if let Some(v) = validate_record(&record).into_iter().next() {
        return Err(ManifestError::Field { line, field: v.field.to_string(), message: v.to_string() });
    }
    Ok(record)
}

/// Parses a line-delimited manifest. Blank lines and lines starting with `#` are skipped.
pub fn parse_manifest<R: BufRead>(input: R) -> Result<ParsedManifest, io::Error> {
    let mut out = ParsedManifest { manifest: CorpusManifest::new(Vec::new()), errors: Vec::new() };
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_record_line(trimmed, idx + 1) {
            Ok(r) => out.manifest.records.push(r),
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}

pub fn parse_manifest_str(text: &str) -> ParsedManifest {
    parse_manifest(text.as_bytes()).expect("reading from memory cannot fail")
}

pub fn write_manifest<W: Write>(m: &CorpusManifest, mut w: W) -> io::Result<()> {
    for r in &m.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn serialize_manifest(m: &CorpusManifest) -> String {
    let mut buf = Vec::new();
    write_manifest(m, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Optional identification results joined into composition analytics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompositionFindings {
    /// Firmware sha256 → number of extracted files.
    pub file_counts: BTreeMap<String, u64>,
    /// Firmware sha256 → kernel versions found (one entry per banner).
    pub kernels: BTreeMap<String, Vec<String>>,
    /// Firmware sha256 → distinct ISA labels found.
    pub isas: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionRow {
    pub samples: usize,
    pub devices: usize,
    pub samples_per_device_mean: f64,
    pub size_per_sample_mean: f64,
    pub files_per_sample_mean: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum YearBucket {
    Year(i32),
    Unknown,
}

impl fmt::Display for YearBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YearBucket::Year(y) => write!(f, "{y}"),
            YearBucket::Unknown => f.write_str("unknown"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionStats {
    pub per_manufacturer: BTreeMap<String, CompositionRow>,
    pub totals: CompositionRow,
    pub class_histogram: BTreeMap<String, usize>,
    pub year_histogram: BTreeMap<YearBucket, usize>,
    pub kernel_histogram: Option<BTreeMap<String, usize>>,
    pub isa_histogram: Option<BTreeMap<String, usize>>,
}

fn composition_row<'a, I>(records: I, findings: Option<&CompositionFindings>) -> CompositionRow
where
    I: IntoIterator<Item = &'a FirmwareRecord>,
{
    let mut samples = 0usize;
    let mut devices = BTreeSet::new();
    let mut size_total = 0u128;
    let mut files_total = 0u128;
    let mut files_seen = 0usize;
    for r in records {
        samples += 1;
        devices.insert(r.device_key());
        size_total += u128::from(r.size_bytes);
        if let Some(n) = findings.and_then(|f| f.file_counts.get(&r.sha256)) {
            files_total += u128::from(*n);
            files_seen += 1;
        }
    }
    let mean = |total: u128, n: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    CompositionRow {
        samples,
        devices: devices.len(),
        samples_per_device_mean: if devices.is_empty() { 0.0 } else { samples as f64 / devices.len() as f64 },
        size_per_sample_mean: mean(size_total, samples),
        files_per_sample_mean: (files_seen > 0).then(|| mean(files_total, files_seen)),
    }
}

/// Kernel version grouped by major.minor.
fn kernel_series(version: &str) -> String {
    let mut it = version.split('.');
    match (it.next(), it.next()) {
        (Some(a), Some(b)) => format!("{a}.{b}"),
        _ => version.to_string(),
    }
}

/// Per-manufacturer and total sample statistics plus class, year, kernel and ISA histograms.
pub fn composition_report(m: &CorpusManifest, findings: Option<&CompositionFindings>) -> CompositionStats {
    let mut by_mfr: BTreeMap<&str, Vec<&FirmwareRecord>> = BTreeMap::new();
    let mut class_histogram = BTreeMap::new();
    let mut year_histogram = BTreeMap::new();
    for r in &m.records {
        by_mfr.entry(r.manufacturer.as_str()).or_default().push(r);
        *class_histogram.entry(r.device_class.clone()).or_insert(0) += 1;
        let bucket = r.release_date.map_or(YearBucket::Unknown, |d| YearBucket::Year(d.year()));
        *year_histogram.entry(bucket).or_insert(0) += 1;
    }
    let per_manufacturer = by_mfr.into_iter().map(|(k, rs)| (k.to_string(), composition_row(rs, findings))).collect();
    let (kernel_histogram, isa_histogram) = match findings {
        None => (None, None),
        Some(f) => {
            let in_corpus: BTreeSet<&str> = m.records.iter().map(|r| r.sha256.as_str()).collect();
            let mut kernels = BTreeMap::new();
            let mut isas = BTreeMap::new();
            for (sha, versions) in &f.kernels {
                if in_corpus.contains(sha.as_str()) {
                    for v in versions {
                        *kernels.entry(kernel_series(v)).or_insert(0) += 1;
                    }
                }
            }
            for (sha, labels) in &f.isas {
                if in_corpus.contains(sha.as_str()) {
                    for l in labels {
                        *isas.entry(l.clone()).or_insert(0) += 1;
                    }
                }
            }
            (Some(kernels), Some(isas))
        }
    };
    CompositionStats {
        per_manufacturer,
        totals: composition_row(&m.records, findings),
        class_histogram,
        year_histogram,
        kernel_histogram,
        isa_histogram,
    }
}

const MIB: f64 = 1024.0 * 1024.0;

impl CompositionStats {
    /// Per-manufacturer overview with a totals row.
    pub fn overview_table(&self) -> TextTable {
        let mut t = TextTable::new([
            "manufacturer",
            "samples",
            "devices",
            "samples_per_device",
            "size_per_sample_mib",
            "files_per_sample",
        ]);
        let row = |name: &str, r: &CompositionRow| {
            vec![
                name.to_string(),
                r.samples.to_string(),
                r.devices.to_string(),
                format!("{:.2}", r.samples_per_device_mean),
                format!("{:.0}", r.size_per_sample_mean / MIB),
                r.files_per_sample_mean.map_or_else(|| "-".to_string(), |f| format!("{f:.0}")),
            ]
        };
        for (name, r) in &self.per_manufacturer {
            t.rows.push(row(name, r));
        }
        t.rows.push(row("Total", &self.totals));
        t
    }

    /// Histograms as `kind,key,count` rows.
    pub fn histogram_table(&self) -> TextTable {
        let mut t = TextTable::new(["histogram", "key", "count"]);
        for (k, n) in &self.class_histogram {
            t.push(["device_class".to_string(), k.clone(), n.to_string()]);
        }
        for (k, n) in &self.year_histogram {
            t.push(["release_year".to_string(), k.to_string(), n.to_string()]);
        }
        for (k, n) in self.kernel_histogram.iter().flatten() {
            t.push(["kernel".to_string(), k.clone(), n.to_string()]);
        }
        for (k, n) in self.isa_histogram.iter().flatten() {
            t.push(["isa".to_string(), k.clone(), n.to_string()]);
        }
        t
    }
}

/// Bundled per-manufacturer summary of the reference Linux firmware corpus and
/// a synthetic manifest expanded from it.
pub mod fixtures {
    use super::*;
    use crate::digest::sha256_bytes;

    pub const REFERENCE_COMPOSITION_CSV: &str = include_str!("../data/reference_composition.csv");

    #[derive(Debug, Clone, PartialEq, Deserialize)]
    pub struct SummaryRow {
        pub manufacturer: String,
        pub samples: usize,
        pub devices: usize,
        pub samples_per_device_mean: f64,
        pub size_per_sample_mib: u64,
        pub files_per_sample_mean: u64,
    }

    pub fn reference_summary() -> Vec<SummaryRow> {
        csv::Reader::from_reader(REFERENCE_COMPOSITION_CSV.as_bytes())
            .deserialize()
            .collect::<Result<_, _>>()
            .expect("bundled composition fixture is well formed")
    }

    /// Expands the summary rows into one record per sample: `devices` distinct
    /// models per manufacturer with samples dealt round-robin over them, every
    /// sample sized at the row's mean size.
    pub fn reference_manifest() -> (CorpusManifest, CompositionFindings) {
        let mut records = Vec::new();
        let mut findings = CompositionFindings::default();
        for row in reference_summary() {
            for i in 0..row.samples {
                let model = format!("{}-{:04}", row.manufacturer, i % row.devices);
                let sha = sha256_bytes(format!("{}/{i}", row.manufacturer).as_bytes());
                let mut r = FirmwareRecord::new(&row.manufacturer, &model, "router", &sha);
                r.firmware_version = format!("1.0.{}", i / row.devices);
                r.size_bytes = row.size_per_sample_mib * 1024 * 1024;
                r.firmware_type = FirmwareType::TypeI;
                r.unpack_status = UnpackStatus::Unpacked;
                findings.file_counts.insert(sha, row.files_per_sample_mean);
                records.push(r);
            }
        }
        (CorpusManifest::new(records), findings)
    }
}
