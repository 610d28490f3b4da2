//! Adapter for external unpacking tools configured by command template.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde::Deserialize;
use walkdir::WalkDir;

use super::{FormatId, Member, UnpackError, Unpacker};

/// Registry configuration file (TOML):
///
/// ```toml
/// [[external]]
/// id = "squashfs"
/// magic_offset = 0
/// magic_hex = "68737173"
/// command = ["unsquashfs", "-d", "{output_dir}/root", "{input_file}"]
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
pub struct RegistryConfig {
    #[serde(default)]
    pub external: Vec<ExternalUnpacker>,
}

impl RegistryConfig {
    pub fn from_toml(s: &str) -> Result<Self, String> {
        let cfg: RegistryConfig = toml::from_str(s).map_err(|e| e.to_string())?;
        for e in &cfg.external {
            e.magic().map_err(|m| format!("external unpacker '{}': {m}", e.id))?;
            if e.command.is_empty() {
                return Err(format!("external unpacker '{}': empty command", e.id));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExternalUnpacker {
    pub id: String,
    #[serde(default)]
    pub magic_offset: usize,
    pub magic_hex: String,
    /// Program and arguments; `{input_file}` and `{output_dir}` are substituted.
    pub command: Vec<String>,
}

impl ExternalUnpacker {
    fn magic(&self) -> Result<Vec<u8>, String> {
        let m = hex::decode(&self.magic_hex).map_err(|e| e.to_string())?;
        if m.is_empty() {
            return Err("empty magic".into());
        }
        Ok(m)
    }

    fn ext_err(&self, message: impl Into<String>) -> UnpackError {
        UnpackError::External { id: self.id.clone(), message: message.into() }
    }
}

impl Unpacker for ExternalUnpacker {
    fn format(&self) -> FormatId {
        FormatId::External(self.id.clone())
    }

    fn claims(&self, head: &[u8], _len: u64) -> bool {
        let Ok(magic) = self.magic() else { return false };
        head.get(self.magic_offset..self.magic_offset + magic.len()) == Some(&magic[..])
    }

    fn unpack(&self, data: &[u8], name_hint: &str, budget: u64) -> Result<Vec<Member>, UnpackError> {
        let sandbox = tempfile::tempdir()?;
        let input_name = if name_hint.is_empty() { "input.bin" } else { name_hint };
        let input = sandbox.path().join(input_name);
        let output = sandbox.path().join("out");
        fs::create_dir(&output)?;
        fs::write(&input, data)?;
        let subst = |a: &String| {
            a.replace("{input_file}", &input.to_string_lossy()).replace("{output_dir}", &output.to_string_lossy())
        };
        let args: Vec<String> = self.command.iter().map(subst).collect();
        let out = Command::new(&args[0])
            .args(&args[1..])
            .current_dir(sandbox.path())
            .output()
            .map_err(|e| self.ext_err(format!("cannot run {}: {e}", args[0])))?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            return Err(self.ext_err(format!("{}: {}", out.status, stderr.trim())));
        }
        let mut members = Vec::new();
        let mut left = budget;
        for entry in WalkDir::new(&output).sort_by_file_name() {
            let entry = entry.map_err(|e| self.ext_err(e.to_string()))?;
            // Symlinks are not followed so tools cannot point outside the sandbox.
            if !entry.file_type().is_file() {
                continue;
            }
            let len = entry.metadata().map_err(|e| self.ext_err(e.to_string()))?.len();
            if len > left {
                return Err(UnpackError::BudgetExceeded);
            }
            left -= len;
            let rel = entry.path().strip_prefix(&output).expect("walk stays below output dir");
            let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            members.push(Member { path, data: fs::read(entry.path())? });
        }
        Ok(members)
    }
}
