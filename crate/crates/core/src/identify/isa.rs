use std::fmt;

use serde::{Deserialize, Serialize};

use super::elf::{Endianness, ELF_MAGIC};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Isa {
    Arm,
    Arm64,
    Mips32El,
    Mips32Eb,
    Mips64,
    X86,
    X86_64,
    Ppc,
    Other(String),
}

impl Isa {
    pub fn label(&self) -> &str {
        match self {
            Isa::Arm => "arm",
            Isa::Arm64 => "arm64",
            Isa::Mips32El => "mips32el",
            Isa::Mips32Eb => "mips32eb",
            Isa::Mips64 => "mips64",
            Isa::X86 => "x86",
            Isa::X86_64 => "x86_64",
            Isa::Ppc => "ppc",
            Isa::Other(n) => n,
        }
    }

    pub fn family(&self) -> IsaFamily {
        match self {
            Isa::Arm | Isa::Arm64 => IsaFamily::Arm,
            Isa::Mips32El | Isa::Mips32Eb | Isa::Mips64 => IsaFamily::Mips,
            Isa::Other(n) if n == "mips" => IsaFamily::Mips,
            Isa::X86 | Isa::X86_64 => IsaFamily::X86,
            _ => IsaFamily::Other,
        }
    }
}

impl fmt::Display for Isa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<String> for Isa {
    fn from(s: String) -> Self {
        match s.as_str() {
            "arm" => Isa::Arm,
            "arm64" => Isa::Arm64,
            "mips32el" => Isa::Mips32El,
            "mips32eb" => Isa::Mips32Eb,
            "mips64" => Isa::Mips64,
            "x86" => Isa::X86,
            "x86_64" => Isa::X86_64,
            "ppc" => Isa::Ppc,
            _ => Isa::Other(s),
        }
    }
}

impl From<Isa> for String {
    fn from(i: Isa) -> String {
        i.label().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IsaFamily {
    #[serde(rename = "ARM")]
    Arm,
    #[serde(rename = "MIPS")]
    Mips,
    #[serde(rename = "x86")]
    X86,
    Other,
}

impl IsaFamily {
    pub const ALL: [IsaFamily; 4] = [IsaFamily::Arm, IsaFamily::Mips, IsaFamily::X86, IsaFamily::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            IsaFamily::Arm => "ARM",
            IsaFamily::Mips => "MIPS",
            IsaFamily::X86 => "x86",
            IsaFamily::Other => "Other",
        }
    }
}

impl fmt::Display for IsaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Named machines outside the main label set. Anything not listed yields no finding.
const OTHER_MACHINES: &[(u16, &str)] = &[
    (0x02, "sparc"),
    (0x12, "sparc32plus"),
    (0x16, "s390"),
    (0x2a, "superh"),
    (0x2b, "sparcv9"),
    (0x32, "ia64"),
    (0x53, "avr"),
    (0x5c, "openrisc"),
    (0x5d, "arc"),
    (0x6a, "blackfin"),
    (0xbd, "microblaze"),
    (0xc3, "arcv2"),
    (0xd2, "nios2"),
    (0xf3, "riscv"),
    (0x102, "loongarch"),
];

pub fn isa_from_machine(machine: u16, class: u8, endianness: Endianness) -> Option<Isa> {
    Some(match machine {
        0x28 => Isa::Arm,
        0xb7 => Isa::Arm64,
        0x08 if class == 64 => Isa::Mips64,
        0x08 if endianness == Endianness::Little => Isa::Mips32El,
        0x08 => Isa::Mips32Eb,
        0x03 => Isa::X86,
        0x3e => Isa::X86_64,
        0x14 | 0x15 => Isa::Ppc,
        m => {
            let (_, name) = OTHER_MACHINES.iter().find(|(id, _)| *id == m)?;
            Isa::Other(name.to_string())
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IsaEvidence {
    ElfHeader,
    DeviceTree,
    KernelConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IsaFinding {
    pub isa: Isa,
    pub evidence: IsaEvidence,
    pub source_path: String,
}

pub const DTB_MAGIC: [u8; 4] = [0xd0, 0x0d, 0xfe, 0xed];

/// Only the identification bytes and e_machine are needed, so this reads the
/// raw header directly instead of a full parse.
fn elf_header_isa(data: &[u8]) -> Option<Isa> {
    if data.len() < 20 || !data.starts_with(ELF_MAGIC) {
        return None;
    }
    let class = match data[4] {
        1 => 32,
        2 => 64,
        _ => return None,
    };
    let (endianness, machine) = match data[5] {
        1 => (Endianness::Little, u16::from_le_bytes([data[18], data[19]])),
        2 => (Endianness::Big, u16::from_be_bytes([data[18], data[19]])),
        _ => return None,
    };
    isa_from_machine(machine, class, endianness)
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

/// Best guess from `compatible` strings of the CPU nodes.
fn device_tree_isa(data: &[u8]) -> Isa {
    const RULES: &[(&[u8], Isa)] = &[
        (b"arm,cortex-a53", Isa::Arm64),
        (b"arm,cortex-a55", Isa::Arm64),
        (b"arm,cortex-a57", Isa::Arm64),
        (b"arm,cortex-a72", Isa::Arm64),
        (b"arm,armv8", Isa::Arm64),
        (b"arm,", Isa::Arm),
        (b"intel,", Isa::X86),
        (b"fsl,e500", Isa::Ppc),
        (b"ibm,power", Isa::Ppc),
    ];
    for (needle, isa) in RULES {
        if contains(data, needle) {
            return isa.clone();
        }
    }
    if contains(data, b"mti,") || contains(data, b"mips") || contains(data, b"ralink,") {
        return Isa::Other("mips".into());
    }
    Isa::Other("unknown".into())
}

fn config_isa(data: &[u8]) -> Vec<Isa> {
    let mut set = std::collections::BTreeSet::new();
    for line in data.split(|&b| b == b'\n') {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        set.insert(line);
    }
    let on = |opt: &str| set.contains(opt.as_bytes());
    let mut out = Vec::new();
    if on("CONFIG_ARM64=y") {
        out.push(Isa::Arm64);
    }
    if on("CONFIG_ARM=y") {
        out.push(Isa::Arm);
    }
    if on("CONFIG_MIPS=y") {
        out.push(if on("CONFIG_64BIT=y") {
            Isa::Mips64
        } else if on("CONFIG_CPU_LITTLE_ENDIAN=y") {
            Isa::Mips32El
        } else if on("CONFIG_CPU_BIG_ENDIAN=y") {
            Isa::Mips32Eb
        } else {
            Isa::Other("mips".into())
        });
    }
    if on("CONFIG_X86=y") {
        out.push(if on("CONFIG_X86_64=y") { Isa::X86_64 } else { Isa::X86 });
    }
    if on("CONFIG_PPC=y") {
        out.push(Isa::Ppc);
    }
    out
}

/// Findings for one file. ELF files and device trees are recognized by magic;
/// any other file is scanned for kernel config lines.
pub fn detect_isa(path: &str, data: &[u8]) -> Vec<IsaFinding> {
    let finding = |isa, evidence| IsaFinding { isa, evidence, source_path: path.to_string() };
    if data.starts_with(ELF_MAGIC) {
        return elf_header_isa(data).map(|i| finding(i, IsaEvidence::ElfHeader)).into_iter().collect();
    }
    if data.starts_with(&DTB_MAGIC) {
        return vec![finding(device_tree_isa(data), IsaEvidence::DeviceTree)];
    }
    if contains(data, b"CONFIG_") {
        return config_isa(data).into_iter().map(|i| finding(i, IsaEvidence::KernelConfig)).collect();
    }
    Vec::new()
}

pub fn detect_isas<'a, I>(files: I) -> Vec<IsaFinding>
where
    I: IntoIterator<Item = (&'a str, &'a [u8])>,
{
    files.into_iter().flat_map(|(p, d)| detect_isa(p, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identify::elf::build::header;

    #[test]
    fn machine_map() {
        let le = Endianness::Little;
        assert_eq!(isa_from_machine(0x28, 32, le), Some(Isa::Arm));
        assert_eq!(isa_from_machine(0xb7, 64, le), Some(Isa::Arm64));
        assert_eq!(isa_from_machine(0x08, 32, le), Some(Isa::Mips32El));
        assert_eq!(isa_from_machine(0x08, 32, Endianness::Big), Some(Isa::Mips32Eb));
        assert_eq!(isa_from_machine(0x3e, 64, le), Some(Isa::X86_64));
        assert_eq!(isa_from_machine(0x15, 64, Endianness::Big), Some(Isa::Ppc));
        assert_eq!(isa_from_machine(0xf3, 64, le), Some(Isa::Other("riscv".into())));
        assert_eq!(isa_from_machine(0x7777, 64, le), None);
    }

    #[test]
    fn elf_header_evidence() {
        let f = detect_isa("bin/sh", &header(false, true, 2, 0x28));
        assert_eq!(
            f,
            vec![IsaFinding { isa: Isa::Arm, evidence: IsaEvidence::ElfHeader, source_path: "bin/sh".into() }]
        );
        assert!(detect_isa("x", &header(false, true, 2, 0x28)[..19]).is_empty());
    }

    #[test]
    fn dtb_and_config() {
        let f = detect_isa("a.dtb", &DTB_MAGIC);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].evidence, IsaEvidence::DeviceTree);
        let mut dtb = DTB_MAGIC.to_vec();
        dtb.extend_from_slice(b"\0arm,cortex-a7\0");
        assert_eq!(detect_isa("b.dtb", &dtb)[0].isa, Isa::Arm);

        let f = detect_isa(".config", b"CONFIG_MIPS=y\n");
        assert_eq!(f[0].isa.family(), IsaFamily::Mips);
        assert_eq!(f[0].evidence, IsaEvidence::KernelConfig);
        let f = detect_isa(".config", b"# x\nCONFIG_MIPS=y\nCONFIG_CPU_BIG_ENDIAN=y\n");
        assert_eq!(f[0].isa, Isa::Mips32Eb);
        assert!(detect_isa(".config", b"# CONFIG_MIPS is not set\nCONFIG_MIPSX=y").is_empty());
    }

    #[test]
    fn families() {
        assert_eq!(Isa::Arm64.family(), IsaFamily::Arm);
        assert_eq!(Isa::X86_64.family(), IsaFamily::X86);
        assert_eq!(Isa::Ppc.family(), IsaFamily::Other);
        assert_eq!(Isa::from("mips32el".to_string()), Isa::Mips32El);
    }
}
