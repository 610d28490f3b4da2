use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fwcorpus"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn fwcorpus")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn sha(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// 32-bit little-endian ARM executable with a non-executable GNU_STACK header.
fn arm_exe() -> Vec<u8> {
    let mut h = vec![0u8; 52];
    h[..7].copy_from_slice(b"\x7fELF\x01\x01\x01");
    h[16..18].copy_from_slice(&2u16.to_le_bytes());
    h[18..20].copy_from_slice(&0x28u16.to_le_bytes());
    h[28..32].copy_from_slice(&52u32.to_le_bytes());
    h[42..44].copy_from_slice(&32u16.to_le_bytes());
    h[44..46].copy_from_slice(&1u16.to_le_bytes());
    let mut ph = [0u8; 32];
    ph[..4].copy_from_slice(&0x6474e551u32.to_le_bytes());
    ph[24..28].copy_from_slice(&6u32.to_le_bytes());
    h.extend_from_slice(&ph);
    h
}

fn rootfs_image() -> Vec<u8> {
    let mut b = tar::Builder::new(Vec::new());
    let exe = arm_exe();
    let files: [(&str, &[u8]); 3] = [
        ("bin/busybox", &exe),
        ("etc/passwd", b"root:x:0:0::/root:/bin/sh\n"),
        ("boot/vmlinux", b"..Linux version 4.4.60 (b@h) #1 SMP.."),
    ];
    for (name, data) in files {
        let mut hd = tar::Header::new_gnu();
        hd.set_size(data.len() as u64);
        hd.set_mode(0o644);
        hd.set_cksum();
        b.append_data(&mut hd, name, data).unwrap();
    }
    let tar = b.into_inner().unwrap();
    let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
    gz.write_all(&tar).unwrap();
    gz.finish().unwrap()
}

fn record(manufacturer: &str, model: &str, version: &str, sha256: &str, year: u32) -> String {
    format!(
        r#"{{"manufacturer":"{manufacturer}","model":"{model}","device_class":"router","firmware_version":"{version}","release_date":"{year}-03-01","download_url":"https://example.com/{model}.bin","sha256":"{sha256}","size_bytes":100,"firmware_type":"TypeI","unpack_status":"Unpacked"}}"#
    )
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn survey_fixture_counts() {
    let o = run(&["survey", "--fixture", "--by", "measure", "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row = out.lines().find(|l| l.starts_with("UnpackProcess,")).expect("row");
    assert!(row.starts_with("UnpackProcess,12,6,20,6,38,"), "{row}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("44 subjects, 704 data points, 17 not applicable"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    write(&bad, "{not json}\n");
    assert_eq!(run(&["ingest", "--manifest", bad.to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("nope.jsonl");
    assert_eq!(run(&["ingest", "--manifest", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["ingest", "--bogus"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn dedup_never_overwrites_input() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    let s = "a".repeat(64);
    let text = format!("{}\n{}\n", record("V", "A", "1.0", &s, 2020), record("V", "B", "1.0", &s, 2020));
    write(&m, &text);
    let o = run(&["dedup", "--manifest", m.to_str().unwrap(), "--out", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fs::read_to_string(&m).unwrap(), text);

    let out = dir.path().join("unique.jsonl");
    let rep = dir.path().join("dedup.json");
    let o = run(&[
        "dedup",
        "--manifest",
        m.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--report",
        rep.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1);
    assert!(fs::read_to_string(&rep).unwrap().contains("duplicate_groups"));
}

#[test]
fn unpack_to_trend_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let img = rootfs_image();
    let img_path = d.join("fw.tar.gz");
    fs::write(&img_path, &img).unwrap();
    let fw = sha(&img);
    let manifest = d.join("m.jsonl");
    write(&manifest, &format!("{}\n", record("D-Link", "DIR-100", "1.02", &fw, 2016)));
    let unpacked = d.join("unpacked");
    let p = |x: &Path| x.to_str().unwrap().to_string();

    let o = run(&["unpack", &p(&img_path), "--out", &p(&unpacked)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(unpacked.join(&fw).join("report.json").is_file());

    let o = run(&["verify", "--unpacked", &p(&unpacked), "--format", "csv"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(",true,/bin/ /etc/,linux-rootfs-default"));
    assert_eq!(run(&["verify", "--unpacked", &p(&unpacked), "--markers", "www,cgi-bin"]).status.code(), Some(1));

    let findings = d.join("findings.json");
    let o = run(&["identify", "--unpacked", &p(&unpacked), "--out", &p(&findings), "--format", "csv"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(&format!("{fw},3,4.4.60,arm")));

    let inv = d.join("inv.csv");
    let o = run(&[
        "inventory",
        "--unpacked",
        &p(&unpacked),
        "--manifest",
        &p(&manifest),
        "--out",
        &p(&inv),
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("ARM,1,0,0,1,1,0,0,1"));
    assert!(fs::read_to_string(&inv).unwrap().contains(&format!(",x-executable,ARM,{fw},2016")));

    let o = run(&["harden", "--unpacked", &p(&unpacked), "--manifest", &p(&manifest), "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("2016,nx,1,1,1.0000"), "{out}");
    assert!(out.contains("2016,canary,0,1,0.0000"));

    let o = run(&["score", "--manifest", &p(&manifest), "--findings", &p(&findings), "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    assert!(row.starts_with("corpus,1,1,N,N,N,N,N,Y,Y,Y,Y,1,1,1,1,Y"), "{row}");
}

#[test]
fn match_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let m = d.join("m.jsonl");
    write(
        &m,
        &format!(
            "{}\n{}\n",
            record("D-Link", "DWR-932B", "02.02EU", &"b".repeat(64), 2017),
            record("D-Link", "DWR-932B", "2.03", &"c".repeat(64), 2018)
        ),
    );
    let db = d.join("db.jsonl");
    write(
        &db,
        r#"{"id":"dlink/dwr_932b_backdoor","cve_ids":["CVE-2016-10178"],"manufacturer_pattern":"d-link","model_pattern":"dwr-932*","version_constraint":"<2.03","advisory_ref":"x"}
"#,
    );
    let out = d.join("matches.csv");
    let o = run(&[
        "match",
        "--manifest",
        m.to_str().unwrap(),
        "--db",
        db.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains(&"b".repeat(64)));

    let o = run(&["report", "replication", "--fixture", "--format", "csv"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Total,10913,10883,10786,0.99,20,<0.01,50,<0.01,27,<0.01,30,<0.01"));
    let o = run(&["report", "composition", "--fixture", "--format", "csv"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().last().unwrap().starts_with("Total,10913,"));
    assert_eq!(run(&["report", "trend"]).status.code(), Some(1));
}

#[test]
fn acquire_mock_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("acq");
    let o = run(&[
        "acquire",
        "--mock-scenario",
        "standard",
        "--out",
        out.to_str().unwrap(),
        "--rate",
        "25",
        "--parallel",
        "8",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let total = stdout(&o).lines().last().unwrap().to_string();
    assert_eq!(total, "Total,100,98,90,0.90,5,0.05,3,0.03,0,0.00,2,0.02");
    assert_eq!(fs::read_to_string(out.join("worklist.csv")).unwrap().lines().count(), 3);
    assert_eq!(fs::read_dir(out.join("samples")).unwrap().count(), 98);
    let o = run(&["report", "replication", "--results", out.join("results.json").to_str().unwrap(), "--format", "csv"]);
    assert_eq!(stdout(&o).lines().last().unwrap(), total);
}
