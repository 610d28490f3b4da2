//! Loopback HTTP server and a canned replication scenario, for tests and dry runs.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tempfile::TempDir;

use super::{ArchiveIndex, WaybackIndex};
use crate::digest::sha256_bytes;
use crate::manifest::{CorpusManifest, FirmwareRecord};

pub type Routes = HashMap<String, (u16, Vec<u8>)>;

/// Serves fixed responses keyed by request target (path plus query). Unknown
/// targets get 404. Each request's arrival time is logged.
pub struct MockServer {
    addr: SocketAddr,
    log: Arc<Mutex<Vec<(Instant, String)>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(routes: Routes) -> io::Result<Self> {
        Self::from_listener(TcpListener::bind("127.0.0.1:0")?, routes)
    }

    /// Serves on an already bound listener, so callers can know the URL before the routes.
    pub fn from_listener(listener: TcpListener, routes: Routes) -> io::Result<Self> {
        let addr = listener.local_addr()?;
        let log = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let routes = Arc::new(routes);
        let handle = {
            let (log, stop) = (log.clone(), stop.clone());
            thread::spawn(move || {
                for conn in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(conn) = conn else { continue };
                    let at = Instant::now();
                    let (routes, log) = (routes.clone(), log.clone());
                    thread::spawn(move || {
                        if let Err(e) = serve(conn, at, &routes, &log) {
                            log::debug!("mock server connection: {e}");
                        }
                    });
                }
            })
        };
        Ok(Self { addr, log, stop, handle: Some(handle) })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// (arrival, target) pairs sorted by arrival.
    pub fn requests(&self) -> Vec<(Instant, String)> {
        let mut v = self.log.lock().unwrap_or_else(|e| e.into_inner()).clone();
        v.sort();
        v
    }

    /// Smallest gap between consecutive requests, if there were at least two.
    pub fn min_spacing(&self) -> Option<Duration> {
        let r = self.requests();
        r.windows(2).map(|w| w[1].0 - w[0].0).min()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(conn: TcpStream, at: Instant, routes: &Routes, log: &Mutex<Vec<(Instant, String)>>) -> io::Result<()> {
    conn.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut rd = BufReader::new(conn.try_clone()?);
    let mut line = String::new();
    rd.read_line(&mut line)?;
    let target = line.split_whitespace().nth(1).unwrap_or("/").to_string();
    loop {
        let mut h = String::new();
        if rd.read_line(&mut h)? == 0 || h == "\r\n" || h == "\n" {
            break;
        }
    }
    log.lock().unwrap_or_else(|e| e.into_inner()).push((at, target.clone()));
    let (status, body) = routes.get(&target).map_or((404, &b"not found"[..]), |(s, b)| (*s, &b[..]));
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        _ => "Status",
    };
    let mut w = conn;
    write!(w, "HTTP/1.1 {status} {reason}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n", body.len())?;
    w.write_all(body)?;
    w.flush()
}

/// Target part of a URL served by `base`.
fn target(base: &str, url: &str) -> String {
    url.strip_prefix(base).expect("url under server base").to_string()
}

/// Expected per-phase outcome counts of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Expected {
    pub direct: usize,
    pub archive: usize,
    pub hash_lookup: usize,
    pub unrecoverable: usize,
}

/// Vendor servers, an archive server and a hash store backing a synthetic manifest.
pub struct Scenario {
    pub manifest: CorpusManifest,
    pub vendors: Vec<MockServer>,
    pub archive: MockServer,
    pub index: WaybackIndex,
    pub hash_store: TempDir,
    pub expected: Expected,
}

impl Scenario {
    pub fn servers(&self) -> impl Iterator<Item = &MockServer> {
        self.vendors.iter().chain([&self.archive])
    }
}

pub const VENDORS: [&str; 5] = ["Alpha", "Bravo", "Charlie", "Delta", "Echo"];

fn payload(i: usize) -> Vec<u8> {
    let mut v = format!("FWIMG{i:04}").into_bytes();
    v.extend((0..2048u32).map(|k| (k.wrapping_mul(31).wrapping_add(i as u32 * 7) % 251) as u8));
    v
}

/// Original URL, captures as (timestamp, status), body served for the newest
/// 200 capture when it is bad, and the good body.
type ArchivePlan = (String, Vec<(&'static str, &'static str)>, Option<Vec<u8>>, Option<Vec<u8>>);

fn cdx_body(original: &str, rows: &[(&str, &str)]) -> Vec<u8> {
    let mut v = vec![serde_json::json!(["timestamp", "original", "statuscode"])];
    v.extend(rows.iter().map(|(ts, st)| serde_json::json!([ts, original, st])));
    serde_json::to_vec(&v).expect("json")
}

/// 100 records over five vendors. Ten direct links are broken (one of them serves
/// corrupted bytes): five are recoverable from the archive, three from the hash
/// store and two from nowhere.
pub fn standard_scenario() -> io::Result<Scenario> {
    const N: usize = 100;
    let broken = [7usize, 15, 23, 31, 42, 50, 64, 77, 88, 99];
    let (via_archive, rest) = broken.split_at(5);
    let (via_hash, lost) = rest.split_at(3);

    let mut vendor_routes: Vec<Routes> = vec![Routes::new(); VENDORS.len()];
    let mut archive_routes = Routes::new();
    let hash_store = tempfile::tempdir()?;

    struct Pending {
        i: usize,
        vendor: usize,
        path: String,
        data: Vec<u8>,
    }
    let pending: Vec<Pending> = (0..N)
        .map(|i| {
            let vendor = i % VENDORS.len();
            Pending {
                i,
                vendor,
                path: format!("/download/{}-{i:03}.bin", VENDORS[vendor].to_lowercase()),
                data: payload(i),
            }
        })
        .collect();
    for p in &pending {
        let direct = if !broken.contains(&p.i) {
            (200, p.data.clone())
        } else if p.i == via_archive[0] {
            (200, p.data[..p.data.len() / 2].to_vec())
        } else {
            (404, Vec::new())
        };
        vendor_routes[p.vendor].insert(p.path.clone(), direct);
    }

    let vendors: Vec<MockServer> = vendor_routes.into_iter().map(MockServer::start).collect::<io::Result<_>>()?;
    let mut records = Vec::with_capacity(N);
    let mut archive_plan: Vec<ArchivePlan> = Vec::new();
    for p in &pending {
        let url = format!("{}{}", vendors[p.vendor].base_url(), p.path);
        let mut r = FirmwareRecord::new(VENDORS[p.vendor], &format!("M{}", p.i % 17), "router", &sha256_bytes(&p.data));
        r.firmware_version = format!("1.{}.{}", p.i / 10, p.i % 10);
        r.size_bytes = p.data.len() as u64;
        r.download_url = Some(url.clone());
        if via_archive.contains(&p.i) {
            if p.i == via_archive[1] {
                // newest capture is a soft error page; the older one holds the image
                archive_plan.push((
                    url,
                    vec![("20210301000000", "200"), ("20170101000000", "200")],
                    Some(b"<html>moved</html>".to_vec()),
                    Some(p.data.clone()),
                ));
            } else {
                archive_plan.push((
                    url,
                    vec![("20220101000000", "404"), ("20180101000000", "200")],
                    None,
                    Some(p.data.clone()),
                ));
            }
        } else if via_hash.contains(&p.i) {
            std::fs::write(hash_store.path().join(&r.sha256), &p.data)?;
            archive_plan.push((url, vec![("20200101000000", "404")], None, None));
        } else if lost.contains(&p.i) {
            archive_plan.push((url, vec![("20190101000000", "404"), ("20200101000000", "404")], None, None));
        }
        records.push(r);
    }

    // snapshot URLs embed the archive's own address
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let base = format!("http://{}", listener.local_addr()?);
    let index = WaybackIndex::new(&base);
    for (url, caps, newest_body, good_body) in &archive_plan {
        archive_routes.insert(target(&base, &index.query_url(url)), (200, cdx_body(url, caps)));
        let mut ok: Vec<_> = caps.iter().filter(|(_, s)| *s == "200").map(|(ts, _)| *ts).collect();
        ok.sort_unstable_by(|a, b| b.cmp(a));
        if let (Some(bad), Some(newest)) = (newest_body, ok.first()) {
            archive_routes.insert(target(&base, &snapshot(&index, newest, url)), (200, bad.clone()));
        }
        if let (Some(good), Some(ts)) = (good_body, ok.last()) {
            archive_routes.insert(target(&base, &snapshot(&index, ts, url)), (200, good.clone()));
        }
    }
    let archive = MockServer::from_listener(listener, archive_routes)?;

    Ok(Scenario {
        manifest: CorpusManifest::new(records),
        vendors,
        archive,
        index,
        hash_store,
        expected: Expected {
            direct: N - broken.len(),
            archive: via_archive.len(),
            hash_lookup: via_hash.len(),
            unrecoverable: lost.len(),
        },
    })
}

fn snapshot(index: &WaybackIndex, ts: &str, original: &str) -> String {
    index.snapshot_url(&super::CdxCapture { timestamp: ts.into(), original: original.into(), statuscode: "200".into() })
}
