//! Memo table for lattice point counts with an optional append-only disk store.
//!
//! Records live in one JSON-lines file per `(method, 2g, n)`. Every record
//! carries a format version and a SHA-256 digest of its payload; records that
//! fail to parse or verify are never loaded (the value is recomputed instead)
//! and are reported by [`CountTable::scan`].

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bpoly::BPoly;
use crate::error::Result;

pub const CACHE_VERSION: u32 = 1;

/// Environment variable overriding the default cache directory.
pub const CACHE_DIR_ENV: &str = "MOEBIUS_CACHE_DIR";

/// Which engine produced a value. Engines never read each other's entries,
/// so cross-checks between them stay independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rec,
    Sym,
    Direct,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rec => "rec",
            Method::Sym => "sym",
            Method::Direct => "direct",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "rec" => Some(Method::Rec),
            "sym" => Some(Method::Sym),
            "direct" => Some(Method::Direct),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CountKey {
    pub method: Method,
    pub two_g: u32,
    pub n: u32,
    /// Sorted perimeters.
    pub l: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    v: u32,
    method: Method,
    two_g: u32,
    n: u32,
    #[serde(rename = "L")]
    l: Vec<u32>,
    coeffs: Vec<String>,
    sha256: String,
}

fn digest(method: Method, two_g: u32, n: u32, l: &[u32], coeffs: &[String]) -> String {
    let payload = format!(
        "{}|{}|{}|{}|{:?}|{}",
        CACHE_VERSION,
        method.as_str(),
        two_g,
        n,
        l,
        coeffs.join(",")
    );
    hex::encode(Sha256::digest(payload.as_bytes()))
}

/// Outcome of scanning the on-disk store.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ScanReport {
    pub files: usize,
    pub records: usize,
    /// `(file name, 1-based line)` of records that failed to parse or verify.
    pub corrupt: Vec<(String, usize)>,
}

pub struct CountTable {
    mem: RwLock<HashMap<CountKey, BPoly>>,
    dir: Option<PathBuf>,
    writers: Mutex<HashMap<PathBuf, File>>,
}

impl CountTable {
    pub fn in_memory() -> Self {
        CountTable {
            mem: RwLock::new(HashMap::new()),
            dir: None,
            writers: Mutex::new(HashMap::new()),
        }
    }

    /// Opens (creating if needed) a disk-backed table and loads every valid record.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let t = CountTable {
            mem: RwLock::new(HashMap::new()),
            dir: Some(dir),
            writers: Mutex::new(HashMap::new()),
        };
        let (entries, _) = t.read_store()?;
        t.mem.write().unwrap().extend(entries);
        Ok(t)
    }

    /// Process-wide in-memory table used by the convenience entry points.
    pub fn global() -> &'static CountTable {
        static T: OnceLock<CountTable> = OnceLock::new();
        T.get_or_init(CountTable::in_memory)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn len(&self) -> usize {
        self.mem.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, k: &CountKey) -> Option<BPoly> {
        self.mem.read().unwrap().get(k).cloned()
    }

    pub fn insert(&self, k: CountKey, v: BPoly) -> Result<()> {
        let fresh = {
            let mut m = self.mem.write().unwrap();
            m.insert(k.clone(), v.clone()).is_none()
        };
        if fresh {
            if let Some(dir) = &self.dir {
                let coeffs = v.to_strings();
                let rec = Record {
                    v: CACHE_VERSION,
                    method: k.method,
                    two_g: k.two_g,
                    n: k.n,
                    sha256: digest(k.method, k.two_g, k.n, &k.l, &coeffs),
                    l: k.l,
                    coeffs,
                };
                let line = serde_json::to_string(&rec)? + "\n";
                let path = dir.join(file_name(rec.method, rec.two_g, rec.n));
                let mut w = self.writers.lock().unwrap();
                if !w.contains_key(&path) {
                    let f = OpenOptions::new().create(true).append(true).open(&path)?;
                    w.insert(path.clone(), f);
                }
                w.get_mut(&path).unwrap().write_all(line.as_bytes())?;
            }
        }
        Ok(())
    }

    /// All entries currently held in memory, sorted.
    pub fn entries(&self) -> BTreeMap<CountKey, BPoly> {
        self.mem.read().unwrap().iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    fn read_store(&self) -> Result<(HashMap<CountKey, BPoly>, ScanReport)> {
        let mut out = HashMap::new();
        let mut rep = ScanReport::default();
        let Some(dir) = &self.dir else {
            return Ok((out, rep));
        };
        let mut names: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        names.sort();
        for path in names {
            rep.files += 1;
            let fname = path.file_name().unwrap().to_string_lossy().to_string();
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.split(b'\n').enumerate() {
                let line = line?;
                if line.is_empty() {
                    continue;
                }
                match parse_record(&line) {
                    Some((k, v)) => {
                        rep.records += 1;
                        out.insert(k, v);
                    }
                    None => rep.corrupt.push((fname.clone(), i + 1)),
                }
            }
        }
        Ok((out, rep))
    }

    /// Re-reads the disk store and reports corrupt records. Nothing is repaired.
    pub fn scan(&self) -> Result<ScanReport> {
        Ok(self.read_store()?.1)
    }

    /// Valid records currently on disk.
    pub fn stored(&self) -> Result<BTreeMap<CountKey, BPoly>> {
        Ok(self.read_store()?.0.into_iter().collect())
    }

    /// Deletes every record from memory and disk.
    pub fn purge(&self) -> Result<usize> {
        let mut removed = 0;
        self.mem.write().unwrap().clear();
        self.writers.lock().unwrap().clear();
        if let Some(dir) = &self.dir {
            for e in fs::read_dir(dir)? {
                let p = e?.path();
                if p.extension().is_some_and(|x| x == "jsonl") {
                    fs::remove_file(p)?;
                    removed += 1;
                }
            }
        }
        Ok(removed)
    }
}

fn file_name(method: Method, two_g: u32, n: u32) -> String {
    format!("{}-2g{}-n{}.jsonl", method.as_str(), two_g, n)
}

fn parse_record(line: &[u8]) -> Option<(CountKey, BPoly)> {
    let rec: Record = serde_json::from_slice(line).ok()?;
    if rec.v != CACHE_VERSION {
        return None;
    }
    if digest(rec.method, rec.two_g, rec.n, &rec.l, &rec.coeffs) != rec.sha256 {
        return None;
    }
    let mut sorted = rec.l.clone();
    sorted.sort_unstable();
    if sorted != rec.l || rec.l.len() != rec.n as usize {
        return None;
    }
    let v = BPoly::from_strings(&rec.coeffs).ok()?;
    Some((
        CountKey {
            method: rec.method,
            two_g: rec.two_g,
            n: rec.n,
            l: rec.l,
        },
        v,
    ))
}

/// Default cache location: `$MOEBIUS_CACHE_DIR`, else `./.moebius-cache`.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".moebius-cache"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn key(l: Vec<u32>) -> CountKey {
        CountKey {
            method: Method::Rec,
            two_g: 2,
            n: l.len() as u32,
            l,
        }
    }

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let v = BPoly::from_coeffs(vec![q(1, 8), q(1, 8), q(3, 8)]);
        {
            let t = CountTable::open(dir.path()).unwrap();
            t.insert(key(vec![4]), v.clone()).unwrap();
            t.insert(key(vec![6]), BPoly::b()).unwrap();
        }
        let t = CountTable::open(dir.path()).unwrap();
        assert_eq!(t.get(&key(vec![4])), Some(v.clone()));
        assert_eq!(t.scan().unwrap().corrupt, vec![]);

        // flip one byte inside the first record's coefficients
        let path = dir.path().join("rec-2g2-n1.jsonl");
        let mut bytes = fs::read(&path).unwrap();
        let pos = bytes.windows(3).position(|w| w == b"1/8").unwrap();
        bytes[pos] = b'7';
        fs::write(&path, &bytes).unwrap();
        let t = CountTable::open(dir.path()).unwrap();
        assert_eq!(t.get(&key(vec![4])), None);
        assert_eq!(t.get(&key(vec![6])), Some(BPoly::b()));
        let rep = t.scan().unwrap();
        assert_eq!(rep.corrupt, vec![("rec-2g2-n1.jsonl".to_string(), 1)]);

        assert_eq!(t.purge().unwrap(), 1);
        assert!(CountTable::open(dir.path()).unwrap().is_empty());
    }
}
