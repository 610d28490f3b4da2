//! Sixteen documentation measures, six requirements, the fulfillment rubric,
//! survey aggregation, and self-audit of a corpus manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::DedupResult;
use crate::manifest::{CompositionFindings, CorpusManifest, FirmwareType, UnpackStatus};
use crate::table::{percent, TextTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measure {
    PackedCount,
    UnpackedCount,
    Deduplication,
    UnpackProcess,
    Reasoning,
    Acquisition,
    Vulnerabilities,
    ReleaseDates,
    Versions,
    Links,
    Hashes,
    Manufacturers,
    Models,
    DeviceClasses,
    Isas,
    FwTypes,
}

impl Measure {
    pub const ALL: [Measure; 16] = [
        Measure::PackedCount,
        Measure::UnpackedCount,
        Measure::Deduplication,
        Measure::UnpackProcess,
        Measure::Reasoning,
        Measure::Acquisition,
        Measure::Vulnerabilities,
        Measure::ReleaseDates,
        Measure::Versions,
        Measure::Links,
        Measure::Hashes,
        Measure::Manufacturers,
        Measure::Models,
        Measure::DeviceClasses,
        Measure::Isas,
        Measure::FwTypes,
    ];

    /// Column name in the survey data file.
    pub fn column(self) -> &'static str {
        match self {
            Measure::PackedCount => "packed",
            Measure::UnpackedCount => "unpacked",
            Measure::Deduplication => "deduplication",
            Measure::UnpackProcess => "unpack_process",
            Measure::Reasoning => "reasoning",
            Measure::Acquisition => "acquisition",
            Measure::Vulnerabilities => "vulnerabilities",
            Measure::ReleaseDates => "release_dates",
            Measure::Versions => "versions",
            Measure::Links => "links",
            Measure::Hashes => "hashes",
            Measure::Manufacturers => "manufacturers",
            Measure::Models => "models",
            Measure::DeviceClasses => "device_classes",
            Measure::Isas => "isas",
            Measure::FwTypes => "fw_types",
        }
    }

    pub fn from_column(s: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.column() == s)
    }

    pub fn group(self) -> RubricGroup {
        use Measure::*;
        match self {
            PackedCount | UnpackedCount | Manufacturers | Models | DeviceClasses | Isas => RubricGroup::Quantity,
            Deduplication | UnpackProcess | Acquisition => RubricGroup::Process,
            ReleaseDates | Versions | Links | Hashes | FwTypes => RubricGroup::FileProperty,
            Reasoning | Vulnerabilities => RubricGroup::Selection,
        }
    }

    pub fn requirements(self) -> Vec<Requirement> {
        Requirement::ALL.into_iter().filter(|r| r.measures().contains(&self)).collect()
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Requirement {
    GroundTruth,
    Relevance,
    CleanData,
    RichMetaData,
    Documentation,
    Heterogeneity,
}

impl Requirement {
    pub const ALL: [Requirement; 6] = [
        Requirement::GroundTruth,
        Requirement::Relevance,
        Requirement::CleanData,
        Requirement::RichMetaData,
        Requirement::Documentation,
        Requirement::Heterogeneity,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Requirement::GroundTruth => "R1",
            Requirement::Relevance => "R2",
            Requirement::CleanData => "R3",
            Requirement::RichMetaData => "R4",
            Requirement::Documentation => "R5",
            Requirement::Heterogeneity => "R6",
        }
    }

    pub fn measures(self) -> &'static [Measure] {
        use Measure::*;
        match self {
            Requirement::GroundTruth => &[Vulnerabilities],
            Requirement::Relevance => &[ReleaseDates, Versions, Manufacturers, Models, DeviceClasses, Isas, FwTypes],
            Requirement::CleanData => &[PackedCount, UnpackedCount, Deduplication],
            Requirement::RichMetaData => {
                &[ReleaseDates, Versions, Links, Hashes, Manufacturers, Models, DeviceClasses, Isas, FwTypes]
            }
            Requirement::Documentation => &[Deduplication, UnpackProcess, Reasoning, Acquisition],
            Requirement::Heterogeneity => &[UnpackedCount, Manufacturers, Models, DeviceClasses, Isas, FwTypes],
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}", self.id(), self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    Full,
    Partial,
    None,
    NotApplicable,
}

impl Status {
    pub fn symbol(self) -> &'static str {
        match self {
            Status::Full => "Y",
            Status::Partial => "P",
            Status::None => "N",
            Status::NotApplicable => "NA",
        }
    }

    /// Higher is weaker; not-applicable dominates.
    fn weakness(self) -> u8 {
        match self {
            Status::Full => 0,
            Status::Partial => 1,
            Status::None => 2,
            Status::NotApplicable => 3,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

fn is_roman_type(s: &str) -> bool {
    let one = |t: &str| matches!(t, "0" | "I" | "II" | "III");
    match s.split_once('-') {
        Some((a, b)) => one(a) && one(b),
        None => one(s),
    }
}

fn parse_part(p: &str) -> Option<Status> {
    let p = p.trim();
    Some(match p {
        "Y" => Status::Full,
        "P" => Status::Partial,
        "N" => Status::None,
        "NA" => Status::NotApplicable,
        // Acquisition methods: scraping, manual collection, related work.
        "S" | "M" | "R" => Status::Full,
        _ if p.starts_with('~') && p[1..].chars().all(|c| c.is_ascii_digit()) && p.len() > 1 => Status::Partial,
        _ if is_roman_type(p) => Status::Full,
        _ => {
            let digits = p.strip_suffix('+').unwrap_or(p);
            if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                Status::Full
            } else {
                return Option::None;
            }
        }
    })
}

/// Parses one survey cell. Cells with several `;`-separated parts take the
/// weakest part. Concrete counts, acquisition letters and firmware-type ranges
/// mean Full; `~N` (an imprecise count) means Partial.
pub fn parse_cell(cell: &str) -> Result<Status, String> {
    let mut worst: Option<Status> = Option::None;
    for part in cell.split(';') {
        let s = parse_part(part).ok_or_else(|| format!("unrecognized survey cell '{cell}'"))?;
        if worst.is_none_or(|w| s.weakness() > w.weakness()) {
            worst = Some(s);
        }
    }
    worst.ok_or_else(|| "empty survey cell".to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Evidence {
    Text,
    FigureOrTable,
    SharedMetaData,
    SampleList,
    References,
    SharedSamples,
}

impl FromStr for Evidence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Text" => Evidence::Text,
            "FigureOrTable" => Evidence::FigureOrTable,
            "SharedMetaData" => Evidence::SharedMetaData,
            "SampleList" => Evidence::SampleList,
            "References" => Evidence::References,
            "SharedSamples" => Evidence::SharedSamples,
            _ => return Err(format!("unknown evidence source '{s}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RubricGroup {
    Quantity,
    Process,
    FileProperty,
    /// Selection reasoning and bug ground truth. No evidence list is printed
    /// for this group; it borrows the process group's list.
    Selection,
}

impl RubricGroup {
    pub fn allowed_evidence(self, m: Measure) -> &'static [Evidence] {
        use Evidence::*;
        match self {
            RubricGroup::Quantity | RubricGroup::Process | RubricGroup::Selection => {
                &[Text, FigureOrTable, SharedMetaData, SampleList]
            }
            RubricGroup::FileProperty if matches!(m, Measure::Links | Measure::Hashes) => {
                &[Text, References, FigureOrTable, SharedMetaData, SharedSamples]
            }
            RubricGroup::FileProperty => &[Text, References, FigureOrTable, SharedMetaData],
        }
    }

    /// True when the evidence list is borrowed from another group.
    pub fn inferred(self) -> bool {
        self == RubricGroup::Selection
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MeasureEntry {
    pub status: Option<Status>,
    pub evidence: BTreeSet<Evidence>,
    pub note: String,
}

impl MeasureEntry {
    pub fn new(status: Status, evidence: &[Evidence], note: &str) -> Self {
        Self { status: Some(status), evidence: evidence.iter().copied().collect(), note: note.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureAssessment {
    pub subject: String,
    pub entries: BTreeMap<Measure, MeasureEntry>,
}

impl MeasureAssessment {
    pub fn new(subject: &str) -> Self {
        Self { subject: subject.to_string(), entries: BTreeMap::new() }
    }

    pub fn uniform(subject: &str, status: Status) -> Self {
        let mut a = Self::new(subject);
        for m in Measure::ALL {
            let (ev, note): (&[Evidence], &str) =
                if status == Status::NotApplicable { (&[], "not applicable") } else { (&[Evidence::Text], "") };
            a.set(m, MeasureEntry::new(status, ev, note));
        }
        a
    }

    pub fn set(&mut self, m: Measure, e: MeasureEntry) {
        self.entries.insert(m, e);
    }

    pub fn status(&self, m: Measure) -> Option<Status> {
        self.entries.get(&m).and_then(|e| e.status)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RubricRule {
    FullWithoutEvidence,
    DisallowedEvidence(Evidence),
    NotApplicableWithEvidence,
    NotApplicableWithoutNote,
    MissingStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricViolation {
    pub measure: Measure,
    pub rule: RubricRule,
}

impl fmt::Display for RubricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            RubricRule::FullWithoutEvidence => write!(f, "{}: Full needs at least one evidence source", self.measure),
            RubricRule::DisallowedEvidence(e) => {
                write!(f, "{}: evidence {e:?} is not accepted for this measure", self.measure)
            }
            RubricRule::NotApplicableWithEvidence => {
                write!(f, "{}: not-applicable entries carry no evidence", self.measure)
            }
            RubricRule::NotApplicableWithoutNote => {
                write!(f, "{}: not-applicable needs a note saying why", self.measure)
            }
            RubricRule::MissingStatus => write!(f, "{}: no status", self.measure),
        }
    }
}

pub fn validate_assessment(a: &MeasureAssessment) -> Vec<RubricViolation> {
    let mut out = Vec::new();
    for m in Measure::ALL {
        let v = |rule| RubricViolation { measure: m, rule };
        let Some(e) = a.entries.get(&m) else {
            out.push(v(RubricRule::MissingStatus));
            continue;
        };
        match e.status {
            Option::None => out.push(v(RubricRule::MissingStatus)),
            Some(Status::NotApplicable) => {
                if !e.evidence.is_empty() {
                    out.push(v(RubricRule::NotApplicableWithEvidence));
                }
                if e.note.trim().is_empty() {
                    out.push(v(RubricRule::NotApplicableWithoutNote));
                }
            }
            Some(s) => {
                if s == Status::Full && e.evidence.is_empty() {
                    out.push(v(RubricRule::FullWithoutEvidence));
                }
                if matches!(s, Status::Full | Status::Partial) {
                    let allowed = m.group().allowed_evidence(m);
                    for ev in &e.evidence {
                        if !allowed.contains(ev) {
                            out.push(v(RubricRule::DisallowedEvidence(*ev)));
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SoundnessError {
    #[error("duplicate subject id '{0}'")]
    DuplicateSubject(String),
    #[error("subject '{subject}' has no status for {measure}")]
    MissingMeasure { subject: String, measure: Measure },
    #[error("survey data line {line}: {message}")]
    Survey { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub full: usize,
    pub partial: usize,
    pub none: usize,
    pub not_applicable: usize,
}

impl StatusCounts {
    pub fn add(&mut self, s: Status) {
        match s {
            Status::Full => self.full += 1,
            Status::Partial => self.partial += 1,
            Status::None => self.none += 1,
            Status::NotApplicable => self.not_applicable += 1,
        }
    }

    pub fn applicable(&self) -> usize {
        self.full + self.partial + self.none
    }

    pub fn total(&self) -> usize {
        self.applicable() + self.not_applicable
    }

    pub fn count(&self, s: Status) -> usize {
        match s {
            Status::Full => self.full,
            Status::Partial => self.partial,
            Status::None => self.none,
            Status::NotApplicable => self.not_applicable,
        }
    }

    /// Fraction over applicable data points; 0 when nothing applies.
    pub fn fraction(&self, s: Status) -> f64 {
        let n = self.applicable();
        if n == 0 || s == Status::NotApplicable {
            0.0
        } else {
            self.count(s) as f64 / n as f64
        }
    }

    pub fn percent(&self, s: Status) -> u32 {
        percent(self.count(s), self.applicable())
    }
}

fn check_subjects(assessments: &[MeasureAssessment]) -> Result<(), SoundnessError> {
    let mut seen = BTreeSet::new();
    for a in assessments {
        if !seen.insert(a.subject.as_str()) {
            return Err(SoundnessError::DuplicateSubject(a.subject.clone()));
        }
        for m in Measure::ALL {
            if a.status(m).is_none() {
                return Err(SoundnessError::MissingMeasure { subject: a.subject.clone(), measure: m });
            }
        }
    }
    Ok(())
}

pub fn aggregate_by_measure(
    assessments: &[MeasureAssessment],
) -> Result<BTreeMap<Measure, StatusCounts>, SoundnessError> {
    check_subjects(assessments)?;
    let mut out: BTreeMap<Measure, StatusCounts> =
        Measure::ALL.into_iter().map(|m| (m, StatusCounts::default())).collect();
    for a in assessments {
        for m in Measure::ALL {
            out.get_mut(&m).expect("all measures present").add(a.status(m).expect("checked"));
        }
    }
    Ok(out)
}

/// Pools every (subject, measure) data point of a requirement's measures. A
/// measure mapped to several requirements feeds each of their pools.
pub fn aggregate_by_requirement(
    assessments: &[MeasureAssessment],
) -> Result<BTreeMap<Requirement, StatusCounts>, SoundnessError> {
    let per_measure = aggregate_by_measure(assessments)?;
    Ok(Requirement::ALL
        .into_iter()
        .map(|r| {
            let mut c = StatusCounts::default();
            for m in r.measures() {
                let pm = per_measure[m];
                c.full += pm.full;
                c.partial += pm.partial;
                c.none += pm.none;
                c.not_applicable += pm.not_applicable;
            }
            (r, c)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub subjects: usize,
    pub data_points: usize,
    pub not_applicable: usize,
    pub per_measure: BTreeMap<Measure, StatusCounts>,
    pub per_requirement: BTreeMap<Requirement, StatusCounts>,
}

impl SoundnessReport {
    pub fn build(assessments: &[MeasureAssessment]) -> Result<Self, SoundnessError> {
        let per_measure = aggregate_by_measure(assessments)?;
        let per_requirement = aggregate_by_requirement(assessments)?;
        Ok(Self {
            subjects: assessments.len(),
            data_points: assessments.len() * Measure::ALL.len(),
            not_applicable: per_measure.values().map(|c| c.not_applicable).sum(),
            per_measure,
            per_requirement,
        })
    }

    fn row(label: String, c: &StatusCounts) -> Vec<String> {
        vec![
            label,
            c.full.to_string(),
            c.partial.to_string(),
            c.none.to_string(),
            c.not_applicable.to_string(),
            c.applicable().to_string(),
            format!("{}%", c.percent(Status::Full)),
            format!("{}%", c.percent(Status::Partial)),
            format!("{}%", c.percent(Status::None)),
        ]
    }

    const HEADERS: [&'static str; 9] =
        ["", "full", "partial", "none", "na", "applicable", "full%", "partial%", "none%"];

    pub fn measure_table(&self) -> TextTable {
        let mut h = Self::HEADERS;
        h[0] = "measure";
        let mut t = TextTable::new(h);
        for (m, c) in &self.per_measure {
            t.push(Self::row(m.to_string(), c));
        }
        t
    }

    pub fn requirement_table(&self) -> TextTable {
        let mut h = Self::HEADERS;
        h[0] = "requirement";
        let mut t = TextTable::new(h);
        for (r, c) in &self.per_requirement {
            t.push(Self::row(r.to_string(), c));
        }
        t
    }
}

/// Survey data bundled with the crate: one row per surveyed paper plus a
/// final self-assessment row for the reference corpus.
pub const SURVEY_CSV: &str = include_str!("../data/survey_table.csv");
/// Subject id of the self-assessment row, excluded from [`survey_fixture`].
pub const SELF_ROW: &str = "reference corpus";

/// Loads a survey file: a `paper` column plus one column per measure.
pub fn load_survey<R: Read>(r: R) -> Result<Vec<MeasureAssessment>, SoundnessError> {
    let mut rdr = csv::Reader::from_reader(r);
    let err = |line: usize, message: String| SoundnessError::Survey { line, message };
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let mut cols = Vec::new();
    for (i, h) in headers.iter().enumerate().skip(1) {
        let m = Measure::from_column(h.trim()).ok_or_else(|| err(1, format!("unknown measure column '{h}'")))?;
        cols.push((i, m));
    }
    if cols.len() != Measure::ALL.len() {
        return Err(err(1, format!("expected {} measure columns, found {}", Measure::ALL.len(), cols.len())));
    }
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        let mut a = MeasureAssessment::new(rec.get(0).unwrap_or("").trim());
        for &(i, m) in &cols {
            let cell = rec.get(i).ok_or_else(|| err(line, format!("missing {}", m.column())))?;
            let status = parse_cell(cell).map_err(|e| err(line, e))?;
            let entry = if status == Status::NotApplicable {
                MeasureEntry::new(status, &[], "marked not applicable in the survey")
            } else if status == Status::None {
                MeasureEntry::new(status, &[], "")
            } else {
                MeasureEntry::new(status, &[Evidence::Text], cell.trim())
            };
            a.set(m, entry);
        }
        out.push(a);
    }
    Ok(out)
}

/// The surveyed papers, without the self-assessment row.
pub fn survey_fixture() -> Vec<MeasureAssessment> {
    load_survey(SURVEY_CSV.as_bytes())
        .expect("bundled survey data parses")
        .into_iter()
        .filter(|a| a.subject != SELF_ROW)
        .collect()
}

/// Operator-supplied documentation statuses that cannot be read off a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocFlags {
    pub unpack_process: Status,
    pub reasoning: Status,
    pub acquisition: Status,
}

impl Default for DocFlags {
    fn default() -> Self {
        Self { unpack_process: Status::None, reasoning: Status::None, acquisition: Status::None }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreArtifacts<'a> {
    pub dedup: Option<&'a DedupResult>,
    /// Identification results; ISAs are scored from these.
    pub findings: Option<&'a CompositionFindings>,
    /// Number of ground-truth matches, when a matching run was done.
    pub ground_truth_matches: Option<usize>,
    pub docs: DocFlags,
}

fn coverage(n: usize, total: usize) -> Status {
    if total == 0 || n == 0 {
        Status::None
    } else if n == total {
        Status::Full
    } else {
        Status::Partial
    }
}

fn data_entry(status: Status, note: String) -> MeasureEntry {
    let ev: &[Evidence] = if status == Status::None { &[] } else { &[Evidence::SharedMetaData] };
    MeasureEntry { status: Some(status), evidence: ev.iter().copied().collect(), note }
}

/// Self-audit of a corpus against the measures using field coverage.
pub fn score_corpus_manifest(subject: &str, m: &CorpusManifest, art: &ScoreArtifacts<'_>) -> MeasureAssessment {
    let n = m.len();
    let count = |f: &dyn Fn(&crate::manifest::FirmwareRecord) -> bool| m.records.iter().filter(|r| f(r)).count();
    let mut a = MeasureAssessment::new(subject);
    let field = |k: usize, what: &str| data_entry(coverage(k, n), format!("{k}/{n} records carry {what}"));

    a.set(Measure::PackedCount, data_entry(Status::Full, format!("{n} records")));
    let tested = count(&|r| r.unpack_status != UnpackStatus::Untested);
    a.set(Measure::UnpackedCount, field(tested, "an unpack status"));
    a.set(
        Measure::Deduplication,
        match art.dedup {
            Some(d) => data_entry(Status::Full, format!("{} duplicates removed", d.duplicate_count())),
            None => data_entry(Status::None, "no deduplication result supplied".into()),
        },
    );
    let doc = |s: Status| {
        let ev: &[Evidence] = if s == Status::None || s == Status::NotApplicable { &[] } else { &[Evidence::Text] };
        let note = if s == Status::NotApplicable { "declared not applicable by the operator" } else { "operator flag" };
        MeasureEntry::new(s, ev, note)
    };
    a.set(Measure::UnpackProcess, doc(art.docs.unpack_process));
    a.set(Measure::Reasoning, doc(art.docs.reasoning));
    a.set(Measure::Acquisition, doc(art.docs.acquisition));
    a.set(
        Measure::Vulnerabilities,
        match art.ground_truth_matches {
            Some(k) => data_entry(Status::Full, format!("{k} ground-truth candidate matches")),
            None => data_entry(Status::None, "no ground-truth matching supplied".into()),
        },
    );
    a.set(Measure::ReleaseDates, field(count(&|r| r.release_date.is_some()), "a release date"));
    a.set(Measure::Versions, field(count(&|r| !r.firmware_version.trim().is_empty()), "a version"));
    a.set(Measure::Links, field(count(&|r| r.download_url.is_some()), "a download URL"));
    a.set(Measure::Hashes, field(count(&|r| !r.sha256.is_empty()), "a sha256"));
    a.set(Measure::Manufacturers, field(count(&|r| !r.manufacturer.trim().is_empty()), "a manufacturer"));
    a.set(Measure::Models, field(count(&|r| !r.model.trim().is_empty()), "a model"));
    a.set(Measure::DeviceClasses, field(count(&|r| !r.device_class.trim().is_empty()), "a device class"));
    a.set(
        Measure::Isas,
        match art.findings {
            Some(f) => {
                let k = count(&|r| f.isas.get(&r.sha256).is_some_and(|s| !s.is_empty()));
                field(k, "an identified ISA")
            }
            None => data_entry(Status::None, "no identification results supplied".into()),
        },
    );
    a.set(Measure::FwTypes, field(count(&|r| r.firmware_type != FirmwareType::Unknown), "a firmware type"));
    a
}

/// One survey-style row: quantity measures print counts, others print status symbols.
pub fn self_audit_table(
    a: &MeasureAssessment,
    m: &CorpusManifest,
    findings: Option<&CompositionFindings>,
) -> TextTable {
    let mut t = TextTable::new(std::iter::once("subject").chain(Measure::ALL.iter().map(|m| m.column())));
    let distinct = |f: &dyn Fn(&crate::manifest::FirmwareRecord) -> String| {
        m.records.iter().map(f).filter(|s| !s.is_empty()).collect::<BTreeSet<_>>().len()
    };
    let mut row = vec![a.subject.clone()];
    for meas in Measure::ALL {
        let status = a.status(meas).unwrap_or(Status::None);
        let count = match meas {
            Measure::PackedCount => Some(m.len()),
            Measure::UnpackedCount => {
                Some(m.records.iter().filter(|r| r.unpack_status == UnpackStatus::Unpacked).count())
            }
            Measure::Manufacturers => Some(distinct(&|r| r.manufacturer.clone())),
            Measure::Models => Some(distinct(&|r| format!("{}\u{0}{}", r.manufacturer, r.model))),
            Measure::DeviceClasses => Some(distinct(&|r| r.device_class.clone())),
            Measure::Isas => findings.map(|f| f.isas.values().flatten().collect::<BTreeSet<_>>().len()),
            _ => Option::None,
        };
        row.push(match count {
            Some(c) if status == Status::Full => c.to_string(),
            _ => status.symbol().to_string(),
        });
    }
    t.push(row);
    t
}
