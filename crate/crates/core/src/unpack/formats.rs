use std::io::{Cursor, Read};

use flate2::read::GzDecoder;

use super::{detect_container, FormatId, Member, UnpackError, Unpacker};

fn corrupt(format: FormatId, e: impl std::fmt::Display) -> UnpackError {
    UnpackError::Corrupt { format, message: e.to_string() }
}

/// Reads at most `budget` bytes; one byte more means the budget is blown.
fn read_bounded<R: Read>(r: R, budget: u64, format: FormatId) -> Result<Vec<u8>, UnpackError> {
    let mut out = Vec::new();
    r.take(budget.saturating_add(1)).read_to_end(&mut out).map_err(|e| corrupt(format, e))?;
    if out.len() as u64 > budget {
        return Err(UnpackError::BudgetExceeded);
    }
    Ok(out)
}

fn strip_suffix_name(hint: &str) -> String {
    for ext in [".gz", ".tgz", ".gzip"] {
        if let Some(stem) = hint.strip_suffix(ext) {
            if !stem.is_empty() {
                return if ext == ".tgz" { format!("{stem}.tar") } else { stem.to_string() };
            }
        }
    }
    "decompressed".to_string()
}

pub struct GzipUnpacker;

impl Unpacker for GzipUnpacker {
    fn format(&self) -> FormatId {
        FormatId::Gzip
    }

    fn claims(&self, head: &[u8], len: u64) -> bool {
        detect_container(head, len) == FormatId::Gzip
    }

    fn unpack(&self, data: &[u8], name_hint: &str, budget: u64) -> Result<Vec<Member>, UnpackError> {
        let mut dec = GzDecoder::new(data);
        let data = read_bounded(&mut dec, budget, FormatId::Gzip)?;
        let name = dec
            .header()
            .and_then(|h| h.filename())
            .map(|n| String::from_utf8_lossy(n).into_owned())
            .filter(|n| !n.is_empty())
            .unwrap_or_else(|| strip_suffix_name(name_hint));
        Ok(vec![Member { path: name, data }])
    }
}

pub struct ZipUnpacker;

impl Unpacker for ZipUnpacker {
    fn format(&self) -> FormatId {
        FormatId::Zip
    }

    fn claims(&self, head: &[u8], len: u64) -> bool {
        detect_container(head, len) == FormatId::Zip
    }

    fn unpack(&self, data: &[u8], _name_hint: &str, budget: u64) -> Result<Vec<Member>, UnpackError> {
        let mut archive = zip::ZipArchive::new(Cursor::new(data)).map_err(|e| corrupt(FormatId::Zip, e))?;
        let mut members = Vec::new();
        let mut left = budget;
        for i in 0..archive.len() {
            let entry = archive.by_index(i).map_err(|e| corrupt(FormatId::Zip, e))?;
            if entry.is_dir() {
                continue;
            }
            // Raw name on purpose: the walker sanitizes and counts hostile paths.
            let path = String::from_utf8_lossy(entry.name_raw()).into_owned();
            let bytes = read_bounded(entry, left, FormatId::Zip)?;
            left -= bytes.len() as u64;
            members.push(Member { path, data: bytes });
        }
        Ok(members)
    }
}

pub struct TarUnpacker;

impl Unpacker for TarUnpacker {
    fn format(&self) -> FormatId {
        FormatId::Tar
    }

    fn claims(&self, head: &[u8], len: u64) -> bool {
        detect_container(head, len) == FormatId::Tar
    }

    fn unpack(&self, data: &[u8], _name_hint: &str, budget: u64) -> Result<Vec<Member>, UnpackError> {
        let mut archive = tar::Archive::new(data);
        let mut members = Vec::new();
        let mut left = budget;
        for entry in archive.entries().map_err(|e| corrupt(FormatId::Tar, e))? {
            let entry = entry.map_err(|e| corrupt(FormatId::Tar, e))?;
            if !entry.header().entry_type().is_file() {
                continue;
            }
            let path = String::from_utf8_lossy(&entry.path_bytes()).into_owned();
            let bytes = read_bounded(entry, left, FormatId::Tar)?;
            left -= bytes.len() as u64;
            members.push(Member { path, data: bytes });
        }
        Ok(members)
    }
}

/// SVR4 "newc" cpio without CRC (magic 070701).
pub struct CpioNewcUnpacker;

const CPIO_HEADER_LEN: usize = 110;
const CPIO_TRAILER: &str = "TRAILER!!!";
const S_IFMT: u32 = 0o170000;
const S_IFREG: u32 = 0o100000;

fn align4(n: usize) -> usize {
    (n + 3) & !3
}

fn hex_field(h: &[u8], idx: usize) -> Result<u32, UnpackError> {
    let raw = &h[6 + idx * 8..6 + (idx + 1) * 8];
    std::str::from_utf8(raw)
        .ok()
        .and_then(|s| u32::from_str_radix(s, 16).ok())
        .ok_or_else(|| corrupt(FormatId::CpioNewc, format!("bad header field {idx}")))
}

impl Unpacker for CpioNewcUnpacker {
    fn format(&self) -> FormatId {
        FormatId::CpioNewc
    }

    fn claims(&self, head: &[u8], len: u64) -> bool {
        detect_container(head, len) == FormatId::CpioNewc
    }

    fn unpack(&self, data: &[u8], _name_hint: &str, budget: u64) -> Result<Vec<Member>, UnpackError> {
        let mut members = Vec::new();
        let mut pos = 0usize;
        let mut left = budget;
        loop {
            let h =
                data.get(pos..pos + CPIO_HEADER_LEN).ok_or_else(|| corrupt(FormatId::CpioNewc, "truncated header"))?;
            if &h[..6] != b"070701" {
                return Err(corrupt(FormatId::CpioNewc, format!("bad magic at offset {pos}")));
            }
            let mode = hex_field(h, 1)?;
            let filesize = hex_field(h, 6)? as usize;
            let namesize = hex_field(h, 11)? as usize;
            let name_start = pos + CPIO_HEADER_LEN;
            let name_raw = data
                .get(name_start..name_start + namesize)
                .ok_or_else(|| corrupt(FormatId::CpioNewc, "truncated name"))?;
            let name = String::from_utf8_lossy(name_raw.strip_suffix(&[0]).unwrap_or(name_raw)).into_owned();
            let data_start = align4(name_start + namesize);
            if name == CPIO_TRAILER {
                break;
            }
            let body = data
                .get(data_start..data_start + filesize)
                .ok_or_else(|| corrupt(FormatId::CpioNewc, "truncated file data"))?;
            if mode & S_IFMT == S_IFREG {
                if filesize as u64 > left {
                    return Err(UnpackError::BudgetExceeded);
                }
                left -= filesize as u64;
                members.push(Member { path: name, data: body.to_vec() });
            }
            pos = align4(data_start + filesize);
        }
        Ok(members)
    }
}

#[cfg(test)]
pub(crate) fn cpio_of(entries: &[(&str, &[u8])]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut push =
        |name: &str, mode: u32, data: &[u8], ino: u32| {
            let namesize = name.len() + 1;
            out.extend_from_slice(
                format!(
                "070701{ino:08X}{mode:08X}{:08X}{:08X}{:08X}{:08X}{:08X}{:08X}{:08X}{:08X}{:08X}{namesize:08X}{:08X}",
                0, 0, 1, 0, data.len(), 0, 0, 0, 0, 0
            )
                .as_bytes(),
            );
            out.extend_from_slice(name.as_bytes());
            out.push(0);
            while out.len() % 4 != 0 {
                out.push(0);
            }
            out.extend_from_slice(data);
            while out.len() % 4 != 0 {
                out.push(0);
            }
        };
    push("etc", 0o040755, b"", 1);
    for (i, (name, data)) in entries.iter().enumerate() {
        push(name, 0o100644, data, i as u32 + 2);
    }
    push(CPIO_TRAILER, 0, b"", 0);
    out
}
