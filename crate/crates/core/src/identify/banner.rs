use std::sync::OnceLock;

use regex::bytes::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KernelBannerFinding {
    pub version: String,
    pub offset: usize,
    pub source_path: String,
    pub raw_banner: String,
}

/// Bytes inspected on each side of a match for false-positive markers.
pub const CONTEXT_BYTES: usize = 64;
const MAX_BANNER_LEN: usize = 256;

fn banner_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"Linux version (\d+\.\d+(?:\.\d+)?)").expect("static regex"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BannerScanner {
    /// Case-sensitive markers; a match with one of these nearby is dropped.
    pub false_positive_markers: Vec<Vec<u8>>,
}

impl Default for BannerScanner {
    fn default() -> Self {
        Self { false_positive_markers: vec![b"pptp".to_vec()] }
    }
}

impl BannerScanner {
    pub fn scan(&self, path: &str, data: &[u8]) -> Vec<KernelBannerFinding> {
        let mut out = Vec::new();
        for caps in banner_re().captures_iter(data) {
            let m = caps.get(0).expect("group 0");
            let lo = m.start().saturating_sub(CONTEXT_BYTES);
            let hi = (m.end() + CONTEXT_BYTES).min(data.len());
            let ctx = &data[lo..hi];
            if self
                .false_positive_markers
                .iter()
                .any(|mk| !mk.is_empty() && ctx.windows(mk.len()).any(|w| w == &mk[..]))
            {
                continue;
            }
            let tail = &data[m.start()..(m.start() + MAX_BANNER_LEN).min(data.len())];
            let end = tail.iter().position(|&b| b == 0 || b == b'\n').unwrap_or(tail.len());
            out.push(KernelBannerFinding {
                version: String::from_utf8_lossy(&caps[1]).into_owned(),
                offset: m.start(),
                source_path: path.to_string(),
                raw_banner: String::from_utf8_lossy(&tail[..end]).trim_end().to_string(),
            });
        }
        out
    }
}

pub fn scan_kernel_banners<'a, I>(files: I) -> Vec<KernelBannerFinding>
where
    I: IntoIterator<Item = (&'a str, &'a [u8])>,
{
    let scanner = BannerScanner::default();
    files.into_iter().flat_map(|(p, d)| scanner.scan(p, d)).collect()
}
