use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;

use fwcorpus::acquire::{
    self, mock, AcquisitionPolicy, AcquisitionResult, ArchiveIndex, Clients, HashLookup, HttpHashLookup,
    LocalHashStore, NoHashLookup, ReplicationReport, UreqClient, WaybackIndex,
};
use fwcorpus::digest::{dedup, DedupResult};
use fwcorpus::groundtruth::{match_exploits, parse_exploit_db, write_match_csv};
use fwcorpus::harden::{hardening_trend, TrendMode};
use fwcorpus::identify::{composition_findings, identify_firmware, InventoryBuilder};
use fwcorpus::manifest::{
    composition_report, fixtures, parse_manifest, write_manifest, CompositionFindings, CorpusManifest,
};
use fwcorpus::soundness::{
    load_survey, score_corpus_manifest, self_audit_table, survey_fixture, validate_assessment, DocFlags,
    MeasureAssessment, ScoreArtifacts, SoundnessReport, Status,
};
use fwcorpus::table::TextTable;
use fwcorpus::unpack::{
    content_dedup, read_unpacked, unpack_to_dir, verify_unpack, Limits, MarkerSet, Registry, RegistryConfig,
    UnpackError, UnpackedTree,
};

use crate::{AcquireOpts, Cli, Command, Format, MockScenario, ReportKind, StatusArg, SurveyView, TrendArg, TrendOpts};

#[derive(Debug)]
pub enum CliError {
    /// Input was read but is invalid, or a check failed.
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn io_at(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_at(path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_at(path))
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| CliError::Io(e.to_string()))?;
    w.flush().map_err(io_at(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// Outputs never replace the manifest they were derived from.
fn guard_output(input: &Path, out: Option<&Path>) -> Result<()> {
    match out {
        Some(o) if same_file(input, o) => {
            Err(invalid(format!("refusing to overwrite input manifest {}", input.display())))
        }
        _ => Ok(()),
    }
}

fn emit(t: &TextTable, format: Format) -> Result<()> {
    let mut out = io::stdout().lock();
    match format {
        Format::Table => out.write_all(t.render().as_bytes())?,
        Format::Csv => t.write_csv(&mut out)?,
    }
    Ok(())
}

/// Loads a manifest and fails on any rejected line, listing all of them.
fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    let parsed = parse_manifest(open(path)?).map_err(io_at(path))?;
    if parsed.errors.is_empty() {
        return Ok(parsed.manifest);
    }
    for e in &parsed.errors {
        eprintln!("{}: {e}", path.display());
    }
    Err(invalid(format!("{}: {} invalid record(s)", path.display(), parsed.errors.len())))
}

fn load_trees(root: &Path) -> Result<Vec<UnpackedTree>> {
    let trees = read_unpacked(root).map_err(io_at(root))?;
    if trees.is_empty() {
        return Err(invalid(format!("{}: no unpacked firmware (expected <sha256>/report.json)", root.display())));
    }
    Ok(trees)
}

/// Every leaf file of a tree with its bytes; unreadable files are skipped with a warning.
fn tree_files(t: &UnpackedTree) -> Vec<(String, Vec<u8>)> {
    t.report
        .files
        .iter()
        .filter_map(|f| match t.read(f) {
            Ok(d) => Some((f.path.clone(), d)),
            Err(e) => {
                log::warn!("{}: {}: {e}", t.report.firmware_sha256, f.path);
                None
            }
        })
        .collect()
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.parallel {
        if n == 0 {
            return Err(invalid("--parallel must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| invalid(e.to_string()))?;
    }
    let fmt = cli.format;
    match &cli.command {
        Command::Ingest { manifest, out } => ingest(manifest, out.as_deref(), fmt),
        Command::Dedup { manifest, out, report } => dedup_cmd(manifest, out.as_deref(), report.as_deref(), fmt),
        Command::Unpack { inputs, out, registry, max_depth } => {
            unpack(inputs, out, registry.as_deref(), *max_depth, fmt)
        }
        Command::Verify { unpacked, markers } => verify(unpacked, markers.as_deref(), fmt),
        Command::Identify { unpacked, out } => identify(unpacked, out.as_deref(), fmt),
        Command::Inventory { unpacked, manifest, out } => inventory(unpacked, manifest, out.as_deref(), fmt),
        Command::Harden(o) => harden(o, fmt),
        Command::Score {
            manifest,
            subject,
            findings,
            dedup_report,
            matches,
            unpack_process,
            reasoning,
            acquisition,
            out,
        } => {
            let docs = DocFlags {
                unpack_process: status(*unpack_process),
                reasoning: status(*reasoning),
                acquisition: status(*acquisition),
            };
            score(
                manifest,
                subject,
                findings.as_deref(),
                dedup_report.as_deref(),
                matches.as_deref(),
                docs,
                out.as_deref(),
                fmt,
            )
        }
        Command::Survey { input, fixture, by } => survey(input.as_deref(), *fixture, *by, fmt),
        Command::Match { manifest, db, out } => match_cmd(manifest, db, out.as_deref(), fmt),
        Command::Acquire(o) => acquire_cmd(o, cli.parallel, fmt),
        Command::Report { kind, manifest, findings, results, unpacked, mode, fixture, out } => {
            let t = match kind {
                ReportKind::Composition => composition(manifest.as_deref(), findings.as_deref(), *fixture)?,
                ReportKind::Replication => replication(results.as_deref(), *fixture)?,
                ReportKind::Trend => {
                    let (Some(u), Some(m)) = (unpacked, manifest) else {
                        return Err(invalid("trend report needs --unpacked and --manifest"));
                    };
                    trend_table(u, m, *mode)?
                }
            };
            if let Some(o) = out {
                t.write_csv(create(o)?).map_err(io_at(o))?;
            }
            emit(&t, fmt)
        }
    }
}

fn status(s: StatusArg) -> Status {
    match s {
        StatusArg::Full => Status::Full,
        StatusArg::Partial => Status::Partial,
        StatusArg::None => Status::None,
    }
}

fn ingest(path: &Path, out: Option<&Path>, fmt: Format) -> Result<()> {
    guard_output(path, out)?;
    let parsed = parse_manifest(open(path)?).map_err(io_at(path))?;
    for e in &parsed.errors {
        eprintln!("{}: {e}", path.display());
    }
    if let Some(o) = out {
        write_manifest(&parsed.manifest, create(o)?).map_err(io_at(o))?;
    }
    let mut t = TextTable::new(["manifest", "valid", "rejected"]);
    t.push([path.display().to_string(), parsed.manifest.len().to_string(), parsed.errors.len().to_string()]);
    emit(&t, fmt)?;
    if parsed.errors.is_empty() {
        Ok(())
    } else {
        Err(invalid(format!("{} record(s) rejected", parsed.errors.len())))
    }
}

fn dedup_cmd(path: &Path, out: Option<&Path>, report: Option<&Path>, fmt: Format) -> Result<()> {
    guard_output(path, out)?;
    guard_output(path, report)?;
    let m = load_manifest(path)?;
    let d = dedup(&m.records).map_err(|e| invalid(e.to_string()))?;
    if let Some(o) = out {
        write_manifest(&CorpusManifest::new(d.unique.clone()), create(o)?).map_err(io_at(o))?;
    }
    if let Some(r) = report {
        write_json(r, &d)?;
    }
    let mut t = TextTable::new(["sha256", "copies", "kept"]);
    for g in &d.duplicate_groups {
        let first = &g.members[0];
        t.push([g.sha256.clone(), g.members.len().to_string(), format!("{} {}", first.manufacturer, first.model)]);
    }
    emit(&t, fmt)?;
    eprintln!("{} records, {} unique, {} duplicates removed", m.len(), d.unique.len(), d.duplicate_count());
    Ok(())
}

fn unpack(inputs: &[PathBuf], out: &Path, registry: Option<&Path>, max_depth: usize, fmt: Format) -> Result<()> {
    let mut reg = Registry::builtin();
    if let Some(p) = registry {
        let cfg = RegistryConfig::load(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
        reg = reg.with_config(&cfg);
    }
    let limits = Limits { max_depth, ..Limits::default() };
    fs::create_dir_all(out).map_err(io_at(out))?;
    let results: Vec<_> = inputs
        .par_iter()
        .map(|p| {
            let data = fs::read(p).map_err(io_at(p))?;
            unpack_to_dir(&data, &reg, limits, out).map_err(|e| match e {
                UnpackError::Io(e) => CliError::Io(format!("{}: {e}", p.display())),
                other => invalid(format!("{}: {other}", p.display())),
            })
        })
        .collect();
    let mut t = TextTable::new(["input", "sha256", "files", "failed_nodes", "depth_limited", "budget_exceeded"]);
    let mut first_err = None;
    for (p, r) in inputs.iter().zip(results) {
        match r {
            Ok(r) => t.push([
                p.display().to_string(),
                r.firmware_sha256.clone(),
                r.files.len().to_string(),
                r.failed_nodes.len().to_string(),
                r.max_depth_reached.to_string(),
                r.budget_exceeded.to_string(),
            ]),
            Err(e) => {
                eprintln!("error: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    emit(&t, fmt)?;
    first_err.map_or(Ok(()), Err)
}

fn marker_set(spec: Option<&str>) -> Result<MarkerSet> {
    let Some(spec) = spec else { return Ok(MarkerSet::default()) };
    let p = Path::new(spec);
    let list: Vec<String> = if p.is_file() {
        fs::read_to_string(p).map_err(io_at(p))?.lines().map(str::to_string).collect()
    } else {
        spec.split(',').map(str::to_string).collect()
    };
    MarkerSet::custom(list).ok_or_else(|| invalid("marker list is empty"))
}

fn verify(root: &Path, markers: Option<&str>, fmt: Format) -> Result<()> {
    let set = marker_set(markers)?;
    let trees = load_trees(root)?;
    let mut t = TextTable::new(["sha256", "files", "verified", "matched_markers", "marker_set"]);
    let mut failed = 0;
    for tree in &trees {
        let v = verify_unpack(&tree.report, &set);
        failed += usize::from(!v.verified);
        t.push([
            tree.report.firmware_sha256.clone(),
            tree.report.files.len().to_string(),
            v.verified.to_string(),
            v.matched_markers.join(" "),
            v.marker_set_id,
        ]);
    }
    emit(&t, fmt)?;
    let idx = content_dedup(trees.iter().map(|t| &t.report));
    eprintln!("{} files, {} unique by content", idx.total_file_count, idx.unique_file_count());
    if failed > 0 {
        return Err(invalid(format!("{failed} of {} image(s) not verified", trees.len())));
    }
    Ok(())
}

fn identify(root: &Path, out: Option<&Path>, fmt: Format) -> Result<()> {
    let trees = load_trees(root)?;
    let ids: Vec<_> = trees
        .par_iter()
        .map(|t| {
            let files = tree_files(t);
            identify_firmware(&t.report.firmware_sha256, files.iter().map(|(p, d)| (p.as_str(), d.as_slice())))
        })
        .collect();
    let findings = composition_findings(&ids);
    if let Some(o) = out {
        write_json(o, &findings)?;
    }
    let mut t = TextTable::new(["sha256", "files", "kernels", "isas"]);
    for id in &ids {
        let mut kernels: Vec<_> = id.banners.iter().map(|b| b.version.as_str()).collect();
        kernels.dedup();
        t.push([
            id.firmware_sha256.clone(),
            id.file_count.to_string(),
            kernels.join(" "),
            id.isa_labels().into_iter().collect::<Vec<_>>().join(" "),
        ]);
    }
    emit(&t, fmt)
}

fn build_inventory(root: &Path, manifest: &CorpusManifest) -> Result<fwcorpus::identify::ElfInventory> {
    let trees = load_trees(root)?;
    let builder = trees
        .par_iter()
        .map(|t| {
            let mut b = InventoryBuilder::new();
            for (p, d) in tree_files(t) {
                b.add_file(&t.report.firmware_sha256, &p, &d);
            }
            b
        })
        .reduce(InventoryBuilder::new, |mut a, b| {
            a.merge(b);
            a
        });
    Ok(builder.finish(manifest))
}

fn inventory(root: &Path, manifest: &Path, out: Option<&Path>, fmt: Format) -> Result<()> {
    guard_output(manifest, out)?;
    let m = load_manifest(manifest)?;
    let inv = build_inventory(root, &m)?;
    if let Some(o) = out {
        inv.write_csv(create(o)?).map_err(io_at(o))?;
    }
    emit(&inv.table(), fmt)?;
    eprintln!(
        "excluded {} kernel module(s) and {} kernel image(s)",
        inv.excluded_kernel_modules, inv.excluded_kernel_images
    );
    Ok(())
}

fn trend_table(root: &Path, manifest: &Path, mode: TrendArg) -> Result<TextTable> {
    let m = load_manifest(manifest)?;
    let inv = build_inventory(root, &m)?;
    let mode = match mode {
        TrendArg::Methods => TrendMode::ByMethod,
        TrendArg::NxIsa => TrendMode::NxByIsa,
    };
    let trend = hardening_trend(&inv, &m, mode).map_err(|e| invalid(e.to_string()))?;
    Ok(trend.to_text_table())
}

fn harden(o: &TrendOpts, fmt: Format) -> Result<()> {
    guard_output(&o.manifest, o.out.as_deref())?;
    let t = trend_table(&o.unpacked, &o.manifest, o.mode)?;
    if let Some(out) = &o.out {
        t.write_csv(create(out)?).map_err(io_at(out))?;
    }
    emit(&t, fmt)
}

#[allow(clippy::too_many_arguments)]
fn score(
    manifest: &Path,
    subject: &str,
    findings: Option<&Path>,
    dedup_report: Option<&Path>,
    matches: Option<&Path>,
    docs: DocFlags,
    out: Option<&Path>,
    fmt: Format,
) -> Result<()> {
    guard_output(manifest, out)?;
    let m = load_manifest(manifest)?;
    let findings: Option<CompositionFindings> = findings.map(read_json).transpose()?;
    let dedup: Option<DedupResult> = dedup_report.map(read_json).transpose()?;
    let matches = match matches {
        None => None,
        Some(p) => {
            let mut rd = csv::Reader::from_reader(open(p)?);
            let n = rd
                .records()
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| invalid(format!("{}: {e}", p.display())))?
                .len();
            Some(n)
        }
    };
    let art =
        ScoreArtifacts { dedup: dedup.as_ref(), findings: findings.as_ref(), ground_truth_matches: matches, docs };
    let a = score_corpus_manifest(subject, &m, &art);
    if let Some(o) = out {
        write_json(o, &a)?;
    }
    emit(&self_audit_table(&a, &m, findings.as_ref()), fmt)
}

fn load_assessments(path: &Path) -> Result<Vec<MeasureAssessment>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let all: Vec<MeasureAssessment> = read_json(path)?;
        let mut bad = 0;
        for a in &all {
            for v in validate_assessment(a) {
                eprintln!("{}: {v}", a.subject);
                bad += 1;
            }
        }
        if bad > 0 {
            return Err(invalid(format!("{bad} rubric violation(s)")));
        }
        Ok(all)
    } else {
        load_survey(open(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }
}

fn survey(input: Option<&Path>, fixture: bool, by: SurveyView, fmt: Format) -> Result<()> {
    let assessments = match (input, fixture) {
        (_, true) => survey_fixture(),
        (Some(p), false) => load_assessments(p)?,
        (None, false) => return Err(invalid("survey needs --input or --fixture")),
    };
    let rep = SoundnessReport::build(&assessments).map_err(|e| invalid(e.to_string()))?;
    if matches!(by, SurveyView::Measure | SurveyView::Both) {
        emit(&rep.measure_table(), fmt)?;
    }
    if by == SurveyView::Both && fmt == Format::Table {
        println!();
    }
    if matches!(by, SurveyView::Requirement | SurveyView::Both) {
        emit(&rep.requirement_table(), fmt)?;
    }
    eprintln!("{} subjects, {} data points, {} not applicable", rep.subjects, rep.data_points, rep.not_applicable);
    Ok(())
}

fn match_cmd(manifest: &Path, db: &Path, out: Option<&Path>, fmt: Format) -> Result<()> {
    guard_output(manifest, out)?;
    let m = load_manifest(manifest)?;
    let entries = parse_exploit_db(open(db)?).map_err(|e| invalid(format!("{}: {e}", db.display())))?;
    let outcome = match_exploits(&m, &entries);
    if let Some(o) = out {
        write_match_csv(&outcome.matches, create(o)?).map_err(io_at(o))?;
    }
    let mut buf = Vec::new();
    write_match_csv(&outcome.matches, &mut buf)?;
    match fmt {
        Format::Csv => io::stdout().write_all(&buf)?,
        Format::Table => {
            let mut t = TextTable::new(["sha256", "exploit", "cves", "confidence"]);
            for x in &outcome.matches {
                t.push([x.sha256.clone(), x.exploit_id.clone(), x.cve_ids.join(";"), format!("{:?}", x.confidence)]);
            }
            emit(&t, fmt)?;
        }
    }
    if !outcome.unparseable.is_empty() {
        eprintln!("{} record(s) skipped: unparseable firmware version", outcome.unparseable.len());
    }
    Ok(())
}

fn acquire_cmd(o: &AcquireOpts, parallel: Option<usize>, fmt: Format) -> Result<()> {
    if let Some(m) = &o.manifest {
        guard_output(m, Some(&o.out))?;
    }
    let samples = o.out.join("samples");
    let policy = AcquisitionPolicy {
        per_host_rate: o.rate,
        max_parallel: parallel.unwrap_or(AcquisitionPolicy::default().max_parallel),
        timeout_secs: o.timeout,
        verify_hash: !o.no_verify,
        respect_robots: !o.ignore_robots,
        manual_worklist: true,
        output_dir: Some(samples),
    };
    policy.validate().map_err(|e| invalid(e.to_string()))?;
    let http = UreqClient::new(Duration::from_secs(o.timeout));

    // the scenario owns the servers; keep it alive for the whole run
    let scenario = match o.mock_scenario {
        Some(MockScenario::Standard) => Some(mock::standard_scenario()?),
        None => None,
    };
    let (manifest, index, store): (CorpusManifest, WaybackIndex, Box<dyn HashLookup>) = match &scenario {
        Some(s) => {
            fs::create_dir_all(&o.out).map_err(io_at(&o.out))?;
            let mpath = o.out.join("manifest.jsonl");
            write_manifest(&s.manifest, create(&mpath)?).map_err(io_at(&mpath))?;
            (s.manifest.clone(), s.index.clone(), Box::new(LocalHashStore::new(s.hash_store.path())))
        }
        None => {
            let path = o.manifest.as_deref().expect("clap requires --manifest without --mock-scenario");
            let store: Box<dyn HashLookup> = match (&o.hash_store, &o.hash_service) {
                (Some(d), _) => Box::new(LocalHashStore::new(d)),
                (None, Some(tpl)) => Box::new(HttpHashLookup::new(tpl).map_err(invalid)?),
                (None, None) => Box::new(NoHashLookup),
            };
            (load_manifest(path)?, WaybackIndex::new(&o.archive_base), store)
        }
    };
    let archive: &dyn ArchiveIndex = &index;
    let clients = Clients { http: &http, archive, hash_lookup: store.as_ref() };
    let mut run = acquire::acquire_corpus(&manifest, clients, &policy).map_err(|e| match e {
        acquire::AcquireError::Io(e) => CliError::Io(e.to_string()),
        other => invalid(other.to_string()),
    })?;
    if let Some(dir) = &o.manual_dir {
        let n = acquire::resolve_manual(&mut run.results, dir).map_err(io_at(dir))?;
        log::info!("{n} worklist item(s) matched files in {}", dir.display());
        run.report = ReplicationReport::from_results(&run.results, Duration::from_secs_f64(run.report.duration_secs));
    }
    write_json(&o.out.join("results.json"), &run.results)?;
    let rp = o.out.join("replication.csv");
    run.report.write_csv(create(&rp)?).map_err(io_at(&rp))?;
    let wp = o.out.join("worklist.csv");
    acquire::write_worklist(&run.results, create(&wp)?).map_err(io_at(&wp))?;
    emit(&run.report.table(), fmt)?;
    eprintln!("finished in {:.1}s; outputs in {}", run.report.duration_secs, o.out.display());
    Ok(())
}

fn composition(manifest: Option<&Path>, findings: Option<&Path>, fixture: bool) -> Result<TextTable> {
    let (m, f) = match (manifest, fixture) {
        (_, true) => {
            let (m, f) = fixtures::reference_manifest();
            (m, Some(f))
        }
        (Some(p), false) => (load_manifest(p)?, findings.map(read_json).transpose()?),
        (None, false) => return Err(invalid("composition report needs --manifest or --fixture")),
    };
    Ok(composition_report(&m, f.as_ref()).overview_table())
}

fn replication(results: Option<&Path>, fixture: bool) -> Result<TextTable> {
    let rep = match (results, fixture) {
        (_, true) => acquire::fixtures::reference_replication(),
        (Some(p), false) => {
            let results: Vec<AcquisitionResult> = read_json(p)?;
            ReplicationReport::from_results(&results, Duration::ZERO)
        }
        (None, false) => return Err(invalid("replication report needs --results or --fixture")),
    };
    Ok(rep.table())
}
