//! Network and storage backends used by the acquisition phases.

use std::fs;
use std::io::{self, Read};
use std::path::PathBuf;
use std::time::Duration;

use crate::manifest::is_sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// `GET url`. Transport failures are returned as `Err`; any HTTP status is `Ok`.
pub trait HttpClient: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, String>;
}

/// Blocking client on top of ureq.
pub struct UreqClient {
    agent: ureq::Agent,
    max_body: u64,
}

impl UreqClient {
    pub fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(concat!("fwcorpus/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        Self { agent, max_body: 8 << 30 }
    }
}

impl HttpClient for UreqClient {
    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        let mut resp = self.agent.get(url).call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().with_config().limit(self.max_body).read_to_vec().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Content-addressed lookup of a sample by its sha256.
pub trait HashLookup: Send + Sync {
    /// `Ok(None)` when the backend does not know the hash. Network access goes
    /// through `http`, which is already rate limited.
    fn lookup(&self, sha256: &str, http: &dyn HttpClient) -> Result<Option<Vec<u8>>, String>;

    /// What to log as the attempt target.
    fn locator(&self, sha256: &str) -> String {
        format!("sha256:{sha256}")
    }
}

/// Never finds anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoHashLookup;

impl HashLookup for NoHashLookup {
    fn lookup(&self, _: &str, _: &dyn HttpClient) -> Result<Option<Vec<u8>>, String> {
        Ok(None)
    }
}

/// Directory of files named by their lowercase sha256.
#[derive(Debug, Clone)]
pub struct LocalHashStore {
    pub dir: PathBuf,
}

impl LocalHashStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl HashLookup for LocalHashStore {
    fn lookup(&self, sha256: &str, _: &dyn HttpClient) -> Result<Option<Vec<u8>>, String> {
        if !is_sha256_hex(sha256) {
            return Err(format!("not a sha256: {sha256}"));
        }
        let path = self.dir.join(sha256.to_ascii_lowercase());
        match fs::File::open(&path) {
            Ok(mut f) => {
                let mut buf = Vec::new();
                f.read_to_end(&mut buf).map_err(|e| e.to_string())?;
                Ok(Some(buf))
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.to_string()),
        }
    }

    fn locator(&self, sha256: &str) -> String {
        self.dir.join(sha256).display().to_string()
    }
}

/// Download service addressed by a URL template containing `{sha256}`.
/// 200 yields the body, 404 means unknown, anything else is an error.
#[derive(Debug, Clone)]
pub struct HttpHashLookup {
    pub template: String,
}

impl HttpHashLookup {
    pub fn new(template: &str) -> Result<Self, String> {
        if !template.contains("{sha256}") {
            return Err("hash lookup template must contain {sha256}".into());
        }
        Ok(Self { template: template.to_string() })
    }
}

impl HashLookup for HttpHashLookup {
    fn lookup(&self, sha256: &str, http: &dyn HttpClient) -> Result<Option<Vec<u8>>, String> {
        let resp = http.get(&self.locator(sha256))?;
        match resp.status {
            200 => Ok(Some(resp.body)),
            404 => Ok(None),
            s => Err(format!("HTTP {s}")),
        }
    }

    fn locator(&self, sha256: &str) -> String {
        self.template.replace("{sha256}", sha256)
    }
}
