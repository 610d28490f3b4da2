//! Fixture builders and reference oracles shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread;

// ---- containers ----

/// Tar archive written header by header, so member names are stored verbatim
/// (the tar crate refuses `..` and absolute names).
pub fn raw_tar(entries: &[(&str, &[u8])]) -> Vec<u8> {
    let mut out = Vec::new();
    for (name, data) in entries {
        let mut h = [0u8; 512];
        let n = name.as_bytes();
        h[..n.len().min(100)].copy_from_slice(&n[..n.len().min(100)]);
        h[100..107].copy_from_slice(b"0000644");
        h[108..115].copy_from_slice(b"0000000");
        h[116..123].copy_from_slice(b"0000000");
        h[124..135].copy_from_slice(format!("{:011o}", data.len()).as_bytes());
        h[136..147].copy_from_slice(b"00000000000");
        h[156] = b'0';
        h[257..263].copy_from_slice(b"ustar\0");
        h[263..265].copy_from_slice(b"00");
        h[148..156].copy_from_slice(b"        ");
        let sum: u32 = h.iter().map(|&b| u32::from(b)).sum();
        h[148..155].copy_from_slice(format!("{sum:06o}\0").as_bytes());
        out.extend_from_slice(&h);
        out.extend_from_slice(data);
        out.resize(out.len().div_ceil(512) * 512, 0);
    }
    out.resize(out.len() + 1024, 0);
    out
}

pub fn gzip(data: &[u8]) -> Vec<u8> {
    let mut e = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::fast());
    e.write_all(data).unwrap();
    e.finish().unwrap()
}

pub const MINI_ROOTFS: [(&str, &[u8]); 6] = [
    ("bin/busybox", b"\x7fELF-ish busybox"),
    ("sbin/init", b"#!/bin/sh\nexec /bin/busybox init\n"),
    ("etc/passwd", b"root:x:0:0:root:/root:/bin/sh\n"),
    ("etc/inittab", b"::sysinit:/etc/init.d/rcS\n"),
    ("lib/libc.so.0", b"libc"),
    ("usr/sbin/httpd", b"httpd"),
];

// ---- ELF headers ----

/// Minimal ELF header; `tag` lands in e_entry so equal-looking headers can differ in hash.
pub fn elf_header(is64: bool, le: bool, e_type: u16, machine: u16, tag: u32) -> Vec<u8> {
    let mut h = vec![0u8; if is64 { 64 } else { 52 }];
    h[..4].copy_from_slice(b"\x7fELF");
    h[4] = if is64 { 2 } else { 1 };
    h[5] = if le { 1 } else { 2 };
    h[6] = 1;
    let w16 = |v: u16| if le { v.to_le_bytes() } else { v.to_be_bytes() };
    let w32 = |v: u32| if le { v.to_le_bytes() } else { v.to_be_bytes() };
    h[16..18].copy_from_slice(&w16(e_type));
    h[18..20].copy_from_slice(&w16(machine));
    h[20..24].copy_from_slice(&w32(1));
    h[24..28].copy_from_slice(&w32(tag));
    h
}

// ---- compiled hardening fixtures ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelroOpt {
    None,
    Partial,
    Full,
}

#[derive(Debug, Clone)]
pub struct GccFixture {
    pub name: String,
    pub path: PathBuf,
    pub canary: bool,
    pub pie: bool,
    pub relro: RelroOpt,
    pub nx: bool,
    pub fortify: bool,
}

const FIXTURE_SRC: &str = r#"
#include <stdio.h>
#include <string.h>
int main(int argc, char **argv) {
    char buf[32];
    strcpy(buf, argc > 1 ? argv[1] : "fixture");
    printf("%s\n", buf);
    return (int)strlen(buf);
}
"#;

pub fn have_tool(name: &str) -> bool {
    Command::new(name).arg("--version").output().is_ok_and(|o| o.status.success())
}

/// Compiles the full canary × PIE × RELRO × NX matrix (24 binaries); fortify
/// alternates across the matrix.
pub fn build_gcc_fixtures(dir: &Path) -> Result<Vec<GccFixture>, String> {
    let src = dir.join("fixture.c");
    std::fs::write(&src, FIXTURE_SRC).map_err(|e| e.to_string())?;
    let mut specs = Vec::new();
    for canary in [false, true] {
        for pie in [false, true] {
            for relro in [RelroOpt::None, RelroOpt::Partial, RelroOpt::Full] {
                for nx in [false, true] {
                    let fortify = specs.len() % 2 == 1;
                    let name =
                        format!("c{}_p{}_r{}_n{}_f{}", canary as u8, pie as u8, relro as u8, nx as u8, fortify as u8);
                    specs.push(GccFixture { path: dir.join(&name), name, canary, pie, relro, nx, fortify });
                }
            }
        }
    }
    let results: Vec<Result<(), String>> = thread::scope(|s| {
        let handles: Vec<_> = specs
            .iter()
            .map(|f| {
                let src = &src;
                s.spawn(move || {
                    let mut args: Vec<&str> = vec!["-O2", "-o"];
                    let out = f.path.to_str().unwrap();
                    args.push(out);
                    args.push(src.to_str().unwrap());
                    args.push(if f.canary { "-fstack-protector-all" } else { "-fno-stack-protector" });
                    args.extend(if f.pie { ["-fPIE", "-pie"] } else { ["-fno-pie", "-no-pie"] });
                    args.extend(match f.relro {
                        RelroOpt::None => ["-Wl,-z,norelro", "-Wl,-z,lazy"],
                        RelroOpt::Partial => ["-Wl,-z,relro", "-Wl,-z,lazy"],
                        RelroOpt::Full => ["-Wl,-z,relro", "-Wl,-z,now"],
                    });
                    args.push(if f.nx { "-Wl,-z,noexecstack" } else { "-Wl,-z,execstack" });
                    args.extend(if f.fortify {
                        ["-U_FORTIFY_SOURCE", "-D_FORTIFY_SOURCE=2"]
                    } else {
                        ["-U_FORTIFY_SOURCE", "-D_FORTIFY_SOURCE=0"]
                    });
                    let o = Command::new("gcc").args(&args).output().map_err(|e| e.to_string())?;
                    if o.status.success() {
                        Ok(())
                    } else {
                        Err(format!("gcc {}: {}", f.name, String::from_utf8_lossy(&o.stderr)))
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    results.into_iter().collect::<Result<(), String>>()?;
    Ok(specs)
}

/// Hardening as read off `readelf` text output, following the conventions of
/// the common checksec shell script.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceFlags {
    pub canary: bool,
    pub nx: bool,
    /// 0 none, 1 partial, 2 full
    pub relro: u8,
    pub pic: bool,
    pub fortify: bool,
}

fn readelf(args: &[&str], path: &Path) -> String {
    let o = Command::new("readelf").args(args).arg(path).output().expect("readelf runs");
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn symbol_names(table: &str) -> Vec<String> {
    table
        .lines()
        .filter(|l| l.trim_start().split(':').next().is_some_and(|n| n.trim().parse::<u64>().is_ok()))
        .filter_map(|l| l.split_whitespace().nth(7))
        .map(|n| n.split('@').next().unwrap_or(n).to_string())
        .collect()
}

pub fn readelf_inspect(path: &Path) -> ReferenceFlags {
    let header = readelf(&["-W", "-h"], path);
    let phdrs = readelf(&["-W", "-l"], path);
    let dynamic = readelf(&["-W", "-d"], path);
    let all_syms = symbol_names(&readelf(&["-W", "-s"], path));
    let dyn_syms = symbol_names(&readelf(&["-W", "--dyn-syms"], path));

    let stack = phdrs.lines().find(|l| l.trim_start().starts_with("GNU_STACK"));
    // columns: type offset vaddr paddr filesz memsz flags... align
    let nx = stack.is_some_and(|l| {
        let cols: Vec<&str> = l.split_whitespace().collect();
        let flags: String = cols[6..cols.len() - 1].concat();
        !flags.contains('E')
    });
    let has_relro = phdrs.lines().any(|l| l.trim_start().starts_with("GNU_RELRO"));
    let bind_now = dynamic.lines().any(|l| {
        l.contains("(BIND_NOW)")
            || (l.contains("(FLAGS)") && l.contains("BIND_NOW"))
            || (l.contains("(FLAGS_1)") && l.split_whitespace().any(|w| w == "NOW"))
    });
    ReferenceFlags {
        canary: all_syms.iter().any(|n| n == "__stack_chk_fail" || n == "__stack_chk_guard"),
        nx,
        relro: match (has_relro, bind_now) {
            (false, _) => 0,
            (true, false) => 1,
            (true, true) => 2,
        },
        pic: header.lines().any(|l| l.trim_start().starts_with("Type:") && l.contains("DYN")),
        fortify: dyn_syms.iter().any(|n| n.starts_with("__") && n.ends_with("_chk")),
    }
}
