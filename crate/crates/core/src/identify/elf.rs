//! Bounds-checked ELF and ar parsing. Every table read goes through `Rd`,
//! which returns `None` past the end of the buffer; the parser then records
//! truncation and keeps what it already has.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::isa::{isa_from_machine, Isa};

pub const ELF_MAGIC: &[u8; 4] = b"\x7fELF";
pub const AR_MAGIC: &[u8; 8] = b"!<arch>\n";

pub const PT_LOAD: u32 = 1;
pub const PT_DYNAMIC: u32 = 2;
pub const PT_INTERP: u32 = 3;
pub const PT_GNU_STACK: u32 = 0x6474_e551;
pub const PT_GNU_RELRO: u32 = 0x6474_e552;
pub const PF_X: u32 = 1;
pub const PF_W: u32 = 2;
pub const PF_R: u32 = 4;

const SHT_SYMTAB: u32 = 2;
const SHT_DYNAMIC: u32 = 6;
const SHT_DYNSYM: u32 = 11;

const DT_NULL: u64 = 0;
const DT_HASH: u64 = 4;
const DT_STRTAB: u64 = 5;
const DT_SYMTAB: u64 = 6;
const DT_STRSZ: u64 = 10;
const DT_SYMENT: u64 = 11;
const DT_BIND_NOW: u64 = 24;
const DT_FLAGS: u64 = 30;
const DT_FLAGS_1: u64 = 0x6fff_fffb;
const DF_BIND_NOW: u64 = 0x8;
const DF_1_NOW: u64 = 0x1;
const DF_1_PIE: u64 = 0x0800_0000;

// Caps so hostile counts cannot make the parser allocate or loop forever.
const MAX_TABLE_ENTRIES: usize = 1 << 16;
const MAX_SYMBOLS: usize = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ElfError {
    #[error("not an ELF file or ar archive")]
    NotElf,
    #[error("invalid ELF identification: {0}")]
    BadIdent(&'static str),
    #[error("ELF header truncated")]
    TruncatedHeader,
    #[error("ar archive contains no ELF member")]
    EmptyArchive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElfType {
    Rel,
    Exec,
    Dyn,
    Core,
    Other(u16),
}

impl From<u16> for ElfType {
    fn from(v: u16) -> Self {
        match v {
            1 => ElfType::Rel,
            2 => ElfType::Exec,
            3 => ElfType::Dyn,
            4 => ElfType::Core,
            o => ElfType::Other(o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DynFlag {
    BindNow,
    Pie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramHeader {
    pub p_type: u32,
    pub flags: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElfSummary {
    /// 32 or 64.
    pub class: u8,
    pub endianness: Endianness,
    pub e_type: ElfType,
    pub machine: u16,
    pub isa: Option<Isa>,
    pub has_interp: bool,
    pub interp: Option<String>,
    pub dynamic_flags: BTreeSet<DynFlag>,
    pub program_headers: Vec<ProgramHeader>,
    pub dynamic_symbols: Vec<String>,
    /// Names from `.symtab`; empty for stripped files.
    pub symbols: Vec<String>,
    pub is_ar_archive: bool,
    pub truncated: bool,
}

impl ElfSummary {
    pub fn has_segment(&self, p_type: u32) -> bool {
        self.program_headers.iter().any(|p| p.p_type == p_type)
    }

    pub fn segment(&self, p_type: u32) -> Option<&ProgramHeader> {
        self.program_headers.iter().find(|p| p.p_type == p_type)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MimeClass {
    #[serde(rename = "x-executable")]
    Executable,
    #[serde(rename = "x-pie-executable")]
    PieExecutable,
    #[serde(rename = "x-sharedlib")]
    SharedLib,
    #[serde(rename = "x-archive")]
    Archive,
    #[serde(rename = "x-object")]
    Object,
    #[serde(rename = "unknown")]
    Unknown,
}

impl MimeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            MimeClass::Executable => "x-executable",
            MimeClass::PieExecutable => "x-pie-executable",
            MimeClass::SharedLib => "x-sharedlib",
            MimeClass::Archive => "x-archive",
            MimeClass::Object => "x-object",
            MimeClass::Unknown => "unknown",
        }
    }

    /// Table grouping: executables, libraries, objects.
    pub fn group(self) -> Option<MimeGroup> {
        match self {
            MimeClass::Executable | MimeClass::PieExecutable => Some(MimeGroup::Execs),
            MimeClass::SharedLib | MimeClass::Archive => Some(MimeGroup::Libs),
            MimeClass::Object => Some(MimeGroup::Objs),
            MimeClass::Unknown => None,
        }
    }
}

impl fmt::Display for MimeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MimeGroup {
    Execs,
    Libs,
    Objs,
}

impl MimeGroup {
    pub const ALL: [MimeGroup; 3] = [MimeGroup::Execs, MimeGroup::Libs, MimeGroup::Objs];
}

impl fmt::Display for MimeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MimeGroup::Execs => "Execs",
            MimeGroup::Libs => "Libs",
            MimeGroup::Objs => "Objs",
        })
    }
}

pub fn classify_elf(s: &ElfSummary) -> MimeClass {
    if s.is_ar_archive {
        return MimeClass::Archive;
    }
    match s.e_type {
        ElfType::Rel => MimeClass::Object,
        ElfType::Exec => MimeClass::Executable,
        ElfType::Dyn if s.has_interp || s.dynamic_flags.contains(&DynFlag::Pie) => MimeClass::PieExecutable,
        ElfType::Dyn => MimeClass::SharedLib,
        _ => MimeClass::Unknown,
    }
}

pub fn is_elf_or_archive(data: &[u8]) -> bool {
    data.starts_with(ELF_MAGIC) || data.starts_with(AR_MAGIC)
}

#[derive(Clone, Copy)]
struct Rd<'a> {
    d: &'a [u8],
    le: bool,
    is64: bool,
}

impl<'a> Rd<'a> {
    fn bytes(&self, off: u64, n: usize) -> Option<&'a [u8]> {
        let off = usize::try_from(off).ok()?;
        self.d.get(off..off.checked_add(n)?)
    }

    fn u16(&self, off: u64) -> Option<u16> {
        let b: [u8; 2] = self.bytes(off, 2)?.try_into().ok()?;
        Some(if self.le { u16::from_le_bytes(b) } else { u16::from_be_bytes(b) })
    }

    fn u32(&self, off: u64) -> Option<u32> {
        let b: [u8; 4] = self.bytes(off, 4)?.try_into().ok()?;
        Some(if self.le { u32::from_le_bytes(b) } else { u32::from_be_bytes(b) })
    }

    fn u64(&self, off: u64) -> Option<u64> {
        let b: [u8; 8] = self.bytes(off, 8)?.try_into().ok()?;
        Some(if self.le { u64::from_le_bytes(b) } else { u64::from_be_bytes(b) })
    }

    fn len(&self) -> u64 {
        self.d.len() as u64
    }

    /// Address-sized word.
    fn word(&self, off: u64) -> Option<u64> {
        if self.is64 {
            self.u64(off)
        } else {
            self.u32(off).map(u64::from)
        }
    }

    fn cstr(&self, off: u64, limit: Option<u64>) -> Option<String> {
        let start = usize::try_from(off).ok()?;
        let end = match limit {
            Some(l) => usize::try_from(l).ok()?.min(self.d.len()),
            None => self.d.len(),
        };
        let s = self.d.get(start..end)?;
        let nul = s.iter().position(|&b| b == 0)?;
        Some(String::from_utf8_lossy(&s[..nul]).into_owned())
    }
}

struct Section {
    sh_type: u32,
    offset: u64,
    size: u64,
    link: u32,
}

struct Load {
    vaddr: u64,
    offset: u64,
    filesz: u64,
}

fn vaddr_to_offset(loads: &[Load], addr: u64) -> Option<u64> {
    loads
        .iter()
        .find(|l| addr >= l.vaddr && addr - l.vaddr < l.filesz)
        .and_then(|l| l.offset.checked_add(addr - l.vaddr))
}

pub fn parse_elf(data: &[u8]) -> Result<ElfSummary, ElfError> {
    if data.starts_with(AR_MAGIC) {
        return parse_ar(data);
    }
    if !data.starts_with(ELF_MAGIC) {
        return Err(ElfError::NotElf);
    }
    let ident = data.get(..16).ok_or(ElfError::TruncatedHeader)?;
    let is64 = match ident[4] {
        1 => false,
        2 => true,
        _ => return Err(ElfError::BadIdent("EI_CLASS")),
    };
    let le = match ident[5] {
        1 => true,
        2 => false,
        _ => return Err(ElfError::BadIdent("EI_DATA")),
    };
    let r = Rd { d: data, le, is64 };
    let ehsize = if is64 { 64 } else { 52 };
    if data.len() < ehsize {
        return Err(ElfError::TruncatedHeader);
    }
    let e_type = r.u16(16).ok_or(ElfError::TruncatedHeader)?;
    let machine = r.u16(18).ok_or(ElfError::TruncatedHeader)?;
    let (phoff, shoff, rest) =
        if is64 { (r.u64(32), r.u64(40), 52u64) } else { (r.u32(28).map(u64::from), r.u32(32).map(u64::from), 40u64) };
    let (phoff, shoff) = (phoff.ok_or(ElfError::TruncatedHeader)?, shoff.ok_or(ElfError::TruncatedHeader)?);
    let phentsize = r.u16(rest + 2).ok_or(ElfError::TruncatedHeader)? as u64;
    let phnum = r.u16(rest + 4).ok_or(ElfError::TruncatedHeader)? as usize;
    let shentsize = r.u16(rest + 6).ok_or(ElfError::TruncatedHeader)? as u64;
    let shnum = r.u16(rest + 8).ok_or(ElfError::TruncatedHeader)? as usize;

    let class = if is64 { 64 } else { 32 };
    let endianness = if le { Endianness::Little } else { Endianness::Big };
    let mut s = ElfSummary {
        class,
        endianness,
        e_type: ElfType::from(e_type),
        machine,
        isa: isa_from_machine(machine, class, endianness),
        has_interp: false,
        interp: None,
        dynamic_flags: BTreeSet::new(),
        program_headers: Vec::new(),
        dynamic_symbols: Vec::new(),
        symbols: Vec::new(),
        is_ar_archive: false,
        truncated: false,
    };

    // Program headers.
    let mut loads = Vec::new();
    let mut dynamic: Option<(u64, u64)> = None;
    if phoff != 0 && phnum > 0 {
        if phentsize < if is64 { 56 } else { 32 } {
            s.truncated = true;
        } else {
            for i in 0..phnum.min(MAX_TABLE_ENTRIES) {
                let Some(base) = phoff.checked_add(i as u64 * phentsize).filter(|&b| b < r.len()) else {
                    s.truncated = true;
                    break;
                };
                let fields = if is64 {
                    (r.u32(base), r.u32(base + 4), r.u64(base + 8), r.u64(base + 16), r.u64(base + 32))
                } else {
                    (
                        r.u32(base),
                        r.u32(base + 24),
                        r.u32(base + 4).map(u64::from),
                        r.u32(base + 8).map(u64::from),
                        r.u32(base + 16).map(u64::from),
                    )
                };
                let (Some(p_type), Some(flags), Some(offset), Some(vaddr), Some(filesz)) = fields else {
                    s.truncated = true;
                    break;
                };
                s.program_headers.push(ProgramHeader { p_type, flags });
                match p_type {
                    PT_LOAD => loads.push(Load { vaddr, offset, filesz }),
                    PT_DYNAMIC => dynamic = Some((offset, filesz)),
                    PT_INTERP => {
                        s.has_interp = true;
                        match r.bytes(offset, filesz as usize) {
                            Some(b) => {
                                let b = b.split(|&c| c == 0).next().unwrap_or(b);
                                s.interp = Some(String::from_utf8_lossy(b).into_owned());
                            }
                            None => s.truncated = true,
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    // Section headers.
    let mut sections = Vec::new();
    if shoff != 0 && shnum > 0 {
        if shentsize < if is64 { 64 } else { 40 } {
            s.truncated = true;
        } else {
            for i in 0..shnum.min(MAX_TABLE_ENTRIES) {
                let Some(base) = shoff.checked_add(i as u64 * shentsize).filter(|&b| b < r.len()) else {
                    s.truncated = true;
                    break;
                };
                let fields = if is64 {
                    (r.u32(base + 4), r.u64(base + 24), r.u64(base + 32), r.u32(base + 40))
                } else {
                    (
                        r.u32(base + 4),
                        r.u32(base + 16).map(u64::from),
                        r.u32(base + 20).map(u64::from),
                        r.u32(base + 24),
                    )
                };
                let (Some(sh_type), Some(offset), Some(size), Some(link)) = fields else {
                    s.truncated = true;
                    break;
                };
                sections.push(Section { sh_type, offset, size, link });
            }
        }
    }

    // Dynamic section: prefer the section header, fall back to PT_DYNAMIC.
    let dyn_range =
        sections.iter().find(|sec| sec.sh_type == SHT_DYNAMIC).map(|sec| (sec.offset, sec.size)).or(dynamic);
    let mut dt = DynInfo::default();
    if let Some((off, size)) = dyn_range.filter(|&(off, _)| off < r.len()) {
        let entsize = if is64 { 16 } else { 8 };
        for i in 0..(size / entsize).min(MAX_TABLE_ENTRIES as u64) {
            let base = off + i * entsize;
            let (Some(tag), Some(val)) = (r.word(base), r.word(base + entsize / 2)) else {
                s.truncated = true;
                break;
            };
            match tag {
                DT_NULL => break,
                DT_BIND_NOW => {
                    s.dynamic_flags.insert(DynFlag::BindNow);
                }
                DT_FLAGS if val & DF_BIND_NOW != 0 => {
                    s.dynamic_flags.insert(DynFlag::BindNow);
                }
                DT_FLAGS_1 => {
                    if val & DF_1_NOW != 0 {
                        s.dynamic_flags.insert(DynFlag::BindNow);
                    }
                    if val & DF_1_PIE != 0 {
                        s.dynamic_flags.insert(DynFlag::Pie);
                    }
                }
                DT_HASH => dt.hash = Some(val),
                DT_STRTAB => dt.strtab = Some(val),
                DT_SYMTAB => dt.symtab = Some(val),
                DT_STRSZ => dt.strsz = Some(val),
                DT_SYMENT => dt.syment = Some(val),
                _ => {}
            }
        }
    }

    // Symbol tables.
    let symsize: u64 = if is64 { 24 } else { 16 };
    let read_symtab = |off: u64, size: u64, str_off: u64, str_size: u64, out: &mut Vec<String>| -> bool {
        if off >= r.len() || str_off >= r.len() {
            return false;
        }
        let count = (size / symsize).min(MAX_SYMBOLS as u64);
        for i in 0..count {
            let Some(name) = r.u32(off + i * symsize) else { return false };
            if name == 0 {
                continue;
            }
            if u64::from(name) >= str_size {
                return false;
            }
            match r.cstr(str_off + u64::from(name), Some(str_off.saturating_add(str_size))) {
                Some(n) if !n.is_empty() => out.push(n),
                Some(_) => {}
                None => return false,
            }
        }
        true
    };
    let mut have_dynsym = false;
    for sec in &sections {
        if sec.sh_type != SHT_SYMTAB && sec.sh_type != SHT_DYNSYM {
            continue;
        }
        let Some(strsec) = sections.get(sec.link as usize) else {
            s.truncated = true;
            continue;
        };
        let out = if sec.sh_type == SHT_DYNSYM {
            have_dynsym = true;
            &mut s.dynamic_symbols
        } else {
            &mut s.symbols
        };
        if !read_symtab(sec.offset, sec.size, strsec.offset, strsec.size, out) {
            s.truncated = true;
        }
    }
    if !have_dynsym {
        if let (Some(symtab), Some(strtab)) = (dt.symtab, dt.strtab) {
            let sym_off = vaddr_to_offset(&loads, symtab);
            let str_off = vaddr_to_offset(&loads, strtab);
            let syment = dt.syment.filter(|&e| e == symsize).unwrap_or(symsize);
            // nchain from DT_HASH is the symbol count; otherwise assume the
            // usual layout where .dynstr directly follows .dynsym.
            let count = dt
                .hash
                .and_then(|h| vaddr_to_offset(&loads, h))
                .and_then(|h| r.u32(h + 4))
                .map(u64::from)
                .or_else(|| strtab.checked_sub(symtab).map(|d| d / syment));
            match (sym_off, str_off, count) {
                (Some(so), Some(to), Some(n)) => {
                    let strsz = dt.strsz.unwrap_or(0);
                    if !read_symtab(so, n * syment, to, strsz, &mut s.dynamic_symbols) {
                        s.truncated = true;
                    }
                }
                _ => s.truncated = true,
            }
        }
    }
    s.dynamic_symbols.sort();
    s.dynamic_symbols.dedup();
    s.symbols.sort();
    s.symbols.dedup();
    Ok(s)
}

#[derive(Default)]
struct DynInfo {
    hash: Option<u64>,
    strtab: Option<u64>,
    symtab: Option<u64>,
    strsz: Option<u64>,
    syment: Option<u64>,
}

/// Members of a System V / GNU ar archive as (name, bytes).
pub fn ar_members(data: &[u8]) -> (Vec<(String, &[u8])>, bool) {
    let mut out = Vec::new();
    let mut pos = AR_MAGIC.len();
    let mut truncated = false;
    while pos + 60 <= data.len() {
        let h = &data[pos..pos + 60];
        if &h[58..60] != b"`\n" {
            truncated = true;
            break;
        }
        let name = String::from_utf8_lossy(&h[..16]).trim_end().to_string();
        let Some(size) = std::str::from_utf8(&h[48..58]).ok().and_then(|s| s.trim().parse::<usize>().ok()) else {
            truncated = true;
            break;
        };
        let start = pos + 60;
        let Some(body) = start.checked_add(size).and_then(|end| data.get(start..end)) else {
            truncated = true;
            break;
        };
        out.push((name, body));
        pos = start + size + (size & 1);
    }
    if !truncated && data[pos.min(data.len())..].iter().any(|&b| b != b'\n') {
        truncated = true;
    }
    (out, truncated)
}

/// Archives take class, byte order, machine and symbols from their ELF members.
fn parse_ar(data: &[u8]) -> Result<ElfSummary, ElfError> {
    let (members, truncated) = ar_members(data);
    let mut summary: Option<ElfSummary> = None;
    for (_, body) in members {
        let Ok(m) = parse_elf(body) else { continue };
        match summary.as_mut() {
            None => summary = Some(m),
            Some(s) => {
                s.symbols.extend(m.symbols);
                s.dynamic_symbols.extend(m.dynamic_symbols);
                s.truncated |= m.truncated;
            }
        }
    }
    let mut s = summary.ok_or(ElfError::EmptyArchive)?;
    s.is_ar_archive = true;
    s.truncated |= truncated;
    s.symbols.sort();
    s.symbols.dedup();
    s.dynamic_symbols.sort();
    s.dynamic_symbols.dedup();
    Ok(s)
}

#[cfg(test)]
pub(crate) mod build {
    //! Minimal ELF images for tests.

    /// 32- or 64-bit header with no tables.
    pub fn header(is64: bool, le: bool, e_type: u16, machine: u16) -> Vec<u8> {
        let mut h = vec![0u8; if is64 { 64 } else { 52 }];
        h[..4].copy_from_slice(b"\x7fELF");
        h[4] = if is64 { 2 } else { 1 };
        h[5] = if le { 1 } else { 2 };
        h[6] = 1;
        let put16 = |h: &mut Vec<u8>, off: usize, v: u16| {
            let b = if le { v.to_le_bytes() } else { v.to_be_bytes() };
            h[off..off + 2].copy_from_slice(&b);
        };
        put16(&mut h, 16, e_type);
        put16(&mut h, 18, machine);
        h
    }

    /// 32-bit little-endian file with the given program headers (type, flags).
    pub fn with_phdrs(e_type: u16, machine: u16, phdrs: &[(u32, u32)]) -> Vec<u8> {
        let mut h = header(false, true, e_type, machine);
        h[28..32].copy_from_slice(&52u32.to_le_bytes());
        h[42..44].copy_from_slice(&32u16.to_le_bytes());
        h[44..46].copy_from_slice(&(phdrs.len() as u16).to_le_bytes());
        for (t, f) in phdrs {
            let mut p = [0u8; 32];
            p[..4].copy_from_slice(&t.to_le_bytes());
            p[24..28].copy_from_slice(&f.to_le_bytes());
            h.extend_from_slice(&p);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::build::*;
    use super::*;

    #[test]
    fn rejects_non_elf() {
        assert_eq!(parse_elf(b"\x7fEL"), Err(ElfError::NotElf));
        assert_eq!(parse_elf(b"abc"), Err(ElfError::NotElf));
        assert_eq!(parse_elf(b"\x7fELF\x01\x01"), Err(ElfError::TruncatedHeader));
        assert_eq!(parse_elf(b"\x7fELF\x09\x01\0\0\0\0\0\0\0\0\0\0"), Err(ElfError::BadIdent("EI_CLASS")));
    }

    #[test]
    fn header_fields() {
        let s = parse_elf(&header(true, false, 3, 0x08)).unwrap();
        assert_eq!(s.class, 64);
        assert_eq!(s.endianness, Endianness::Big);
        assert_eq!(s.e_type, ElfType::Dyn);
        assert_eq!(s.isa, Some(Isa::Mips64));
        assert!(!s.truncated);
    }

    #[test]
    fn program_headers_and_interp_flag() {
        let s = parse_elf(&with_phdrs(2, 0x28, &[(PT_GNU_STACK, PF_R | PF_W), (PT_GNU_RELRO, PF_R)])).unwrap();
        assert_eq!(s.program_headers.len(), 2);
        assert!(s.has_segment(PT_GNU_RELRO));
        assert_eq!(classify_elf(&s), MimeClass::Executable);
    }

    #[test]
    fn out_of_range_tables_flag_truncation() {
        let mut h = header(false, true, 2, 0x28);
        h[28..32].copy_from_slice(&0xffff_0000u32.to_le_bytes());
        h[42..44].copy_from_slice(&32u16.to_le_bytes());
        h[44..46].copy_from_slice(&3u16.to_le_bytes());
        let s = parse_elf(&h).unwrap();
        assert!(s.truncated);
        assert!(s.program_headers.is_empty());
    }

    fn summary(e_type: ElfType, interp: bool, pie: bool, ar: bool) -> ElfSummary {
        let mut s = parse_elf(&header(false, true, 1, 0x28)).unwrap();
        s.e_type = e_type;
        s.has_interp = interp;
        s.is_ar_archive = ar;
        if pie {
            s.dynamic_flags.insert(DynFlag::Pie);
        }
        s
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify_elf(&summary(ElfType::Rel, false, false, false)), MimeClass::Object);
        assert_eq!(classify_elf(&summary(ElfType::Exec, false, false, false)), MimeClass::Executable);
        assert_eq!(classify_elf(&summary(ElfType::Dyn, true, false, false)), MimeClass::PieExecutable);
        assert_eq!(classify_elf(&summary(ElfType::Dyn, false, true, false)), MimeClass::PieExecutable);
        assert_eq!(classify_elf(&summary(ElfType::Dyn, false, false, false)), MimeClass::SharedLib);
        assert_eq!(classify_elf(&summary(ElfType::Rel, false, false, true)), MimeClass::Archive);
        assert_eq!(classify_elf(&summary(ElfType::Core, false, false, false)), MimeClass::Unknown);
        assert_eq!(MimeClass::Archive.group(), Some(MimeGroup::Libs));
    }

    #[test]
    fn ar_archive_of_objects() {
        let obj = header(false, true, 1, 0x08);
        let mut ar = AR_MAGIC.to_vec();
        let hdr = format!("{:<16}{:<12}{:<6}{:<6}{:<8}{:<10}`\n", "a.o/", 0, 0, 0, 644, obj.len());
        ar.extend_from_slice(hdr.as_bytes());
        ar.extend_from_slice(&obj);
        let s = parse_elf(&ar).unwrap();
        assert!(s.is_ar_archive);
        assert_eq!(s.isa, Some(Isa::Mips32El));
        assert_eq!(classify_elf(&s), MimeClass::Archive);
        assert_eq!(parse_elf(AR_MAGIC), Err(ElfError::EmptyArchive));
    }
}
