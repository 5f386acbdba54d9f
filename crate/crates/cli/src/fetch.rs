//! Dataset download with row-count verification and a provenance manifest.
//! Re-running is a no-op while the files on disk still hash to the manifest
//! entries.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use fairadapt_core::{Error, Result};

pub struct FetchTarget {
    pub file: &'static str,
    pub url: &'static str,
    /// Expected number of data records (excluding banners/headers).
    pub records: usize,
}

pub const TARGETS: [FetchTarget; 4] = [
    FetchTarget {
        file: "adult.data",
        url: "https://archive.ics.uci.edu/ml/machine-learning-databases/adult/adult.data",
        records: 32_561,
    },
    FetchTarget {
        file: "adult.test",
        url: "https://archive.ics.uci.edu/ml/machine-learning-databases/adult/adult.test",
        records: 16_281,
    },
    FetchTarget {
        file: "german.data",
        url: "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/german/german.data",
        records: 1_000,
    },
    FetchTarget {
        file: "compas-scores-two-years.csv",
        url: "https://raw.githubusercontent.com/propublica/compas-analysis/master/compas-scores-two-years.csv",
        records: 7_214,
    },
];

pub const MANIFEST_FILE: &str = "manifest.txt";

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Count data records: non-empty lines, minus banner ('|'-prefixed) and,
/// for the csv file, the header.
fn count_records(file: &str, bytes: &[u8]) -> usize {
    let text = String::from_utf8_lossy(bytes);
    let mut n = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('|')).count();
    if file.ends_with(".csv") && n > 0 {
        n -= 1;
    }
    n
}

fn verify(t: &FetchTarget, bytes: &[u8]) -> Result<()> {
    let n = count_records(t.file, bytes);
    if n != t.records {
        return Err(Error::Config(format!(
            "{}: expected {} records, found {n}; delete the file and re-fetch, \
             or download it manually from {}",
            t.file, t.records, t.url
        )));
    }
    Ok(())
}

fn manifest_line(t: &FetchTarget, bytes: &[u8]) -> String {
    format!("{},{},{:016x},{}", t.file, bytes.len(), fnv1a64(bytes), count_records(t.file, bytes))
}

fn read_manifest(dir: &Path) -> Vec<String> {
    std::fs::read_to_string(dir.join(MANIFEST_FILE))
        .map(|s| s.lines().map(str::to_string).collect())
        .unwrap_or_default()
}

fn download(url: &str) -> Result<Vec<u8>> {
    let fail = |msg: String| {
        Error::Config(format!(
            "download failed: {msg}\nIf this machine has no network access, download the \
             files by hand into the data directory:\n{}",
            TARGETS
                .iter()
                .fold(String::new(), |mut s, t| {
                    let _ = writeln!(s, "  {}  <-  {}", t.file, t.url);
                    s
                })
        ))
    };
    let agent = ureq::AgentBuilder::new()
        .timeout_connect(std::time::Duration::from_secs(10))
        .timeout(std::time::Duration::from_secs(120))
        .build();
    let resp = agent.get(url).call().map_err(|e| fail(format!("{url}: {e}")))?;
    let mut bytes = Vec::new();
    resp.into_reader()
        .take(256 * 1024 * 1024)
        .read_to_end(&mut bytes)
        .map_err(|e| fail(format!("{url}: {e}")))?;
    Ok(bytes)
}

/// Ensure all four files exist, are the expected shape, and are recorded in
/// the manifest. Returns the list of files actually downloaded (empty when
/// everything was already in place).
pub fn cmd_fetch(data_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(data_dir).map_err(|e| Error::io(data_dir, e))?;
    let manifest_before = read_manifest(data_dir);
    let mut manifest = Vec::new();
    let mut downloaded = Vec::new();

    for t in &TARGETS {
        let path = data_dir.join(t.file);
        let existing = std::fs::read(&path).ok();
        let bytes = match existing {
            Some(bytes) => {
                let line = manifest_line(t, &bytes);
                if manifest_before.contains(&line) {
                    // untouched since last fetch
                    manifest.push(line);
                    continue;
                }
                verify(t, &bytes)?;
                bytes
            }
            None => {
                let bytes = download(t.url)?;
                verify(t, &bytes)?;
                std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
                downloaded.push(path.clone());
                bytes
            }
        };
        manifest.push(manifest_line(t, &bytes));
    }

    let manifest_path = data_dir.join(MANIFEST_FILE);
    let text = manifest.join("\n") + "\n";
    std::fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(downloaded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a64_matches_known_vector() {
        // standard FNV-1a test vectors
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn record_counting_skips_banner_and_header() {
        assert_eq!(count_records("adult.test", b"|banner\n1,2\n3,4\n\n"), 2);
        assert_eq!(count_records("x.csv", b"h1,h2\n1,2\n3,4\n"), 2);
        assert_eq!(count_records("german.data", b"1 2\n3 4\n"), 2);
    }

    #[test]
    fn fetch_is_idempotent_on_staged_files() {
        let dir = tempfile::tempdir().unwrap();
        for t in &TARGETS {
            let mut body = String::new();
            if t.file.ends_with(".csv") {
                body.push_str("header\n");
            }
            for i in 0..t.records {
                body.push_str(&format!("row{i}\n"));
            }
            std::fs::write(dir.path().join(t.file), body).unwrap();
        }
        let first = cmd_fetch(dir.path()).unwrap();
        assert!(first.is_empty(), "staged files must not be re-downloaded");
        let manifest1 = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest1.lines().count(), TARGETS.len());
        let second = cmd_fetch(dir.path()).unwrap();
        assert!(second.is_empty());
        let manifest2 = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest1, manifest2);
    }

    #[test]
    fn wrong_row_count_is_rejected_with_instructions() {
        let dir = tempfile::tempdir().unwrap();
        for t in &TARGETS {
            std::fs::write(dir.path().join(t.file), "only one row\n").unwrap();
        }
        let err = cmd_fetch(dir.path()).unwrap_err().to_string();
        assert!(err.contains("expected 32561 records"), "{err}");
    }
}
