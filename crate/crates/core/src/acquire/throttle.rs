//! Per-host request spacing shared across workers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use url::Url;

/// Throttle key for a URL: `host:port`, or the raw string when it does not parse.
pub fn host_key(url: &str) -> String {
    match Url::parse(url) {
        Ok(u) => format!("{}:{}", u.host_str().unwrap_or(""), u.port_or_known_default().unwrap_or(0)),
        Err(_) => url.to_string(),
    }
}

/// Lets at most `rate` requests per second through per host, one at a time. The
/// interval starts when the previous request to the host finished, so the gap
/// between arrivals at the server is never shorter than the interval, however
/// long connection setup took. Hosts never wait on each other.
#[derive(Debug)]
pub struct HostThrottle {
    interval: Duration,
    gates: Mutex<HashMap<String, Arc<Mutex<Option<Instant>>>>>,
}

impl HostThrottle {
    pub fn new(per_host_rate: f64) -> Self {
        assert!(per_host_rate > 0.0 && per_host_rate.is_finite(), "rate must be positive");
        Self { interval: Duration::from_secs_f64(1.0 / per_host_rate), gates: Mutex::new(HashMap::new()) }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Runs `request` once the URL's host is free and the interval has passed.
    pub fn run<T>(&self, url: &str, request: impl FnOnce() -> T) -> T {
        let gate = {
            let mut gates = self.gates.lock().unwrap_or_else(|e| e.into_inner());
            gates.entry(host_key(url)).or_default().clone()
        };
        let mut last = gate.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = *last {
            let ready = prev + self.interval;
            let now = Instant::now();
            if ready > now {
                thread::sleep(ready - now);
            }
        }
        let out = request();
        *last = Some(Instant::now());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_include_port() {
        assert_eq!(host_key("http://127.0.0.1:8080/a"), "127.0.0.1:8080");
        assert_eq!(host_key("https://example.com/x?y"), "example.com:443");
        assert_eq!(host_key("not a url"), "not a url");
    }

    #[test]
    fn same_host_is_spaced_across_threads() {
        let t = HostThrottle::new(50.0);
        let times = Mutex::new(Vec::new());
        thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for _ in 0..3 {
                        t.run("http://h:1/x", || {
                            times.lock().unwrap().push(Instant::now());
                            thread::sleep(Duration::from_millis(2));
                        });
                    }
                });
            }
        });
        let mut v = times.into_inner().unwrap();
        v.sort();
        assert_eq!(v.len(), 12);
        assert!(v.windows(2).all(|w| w[1] - w[0] >= Duration::from_millis(22)));
    }

    #[test]
    fn hosts_are_independent() {
        let t = HostThrottle::new(0.5);
        let start = Instant::now();
        for h in ["http://a/", "http://b/", "http://c/"] {
            t.run(h, || ());
        }
        assert!(start.elapsed() < Duration::from_millis(500));
    }
}
