//! Per-command manifest listing every output file with its sha256.

use super::config::hex;
use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, PartialEq)]
pub struct FileEntry {
    /// Path relative to the output directory, with `/` separators.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub threads: usize,
    pub seed: u64,
    pub start_unix: u64,
    pub end_unix: u64,
    pub files: Vec<FileEntry>,
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn file_sha256(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path)?;
    Ok((hex(&Sha256::digest(&bytes)), bytes.len() as u64))
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("manifest-{command}.txt")
    }

    /// Record `rel` (relative to `root`).
    pub fn add(&mut self, root: &Path, rel: &str) -> Result<()> {
        let (sha256, bytes) = file_sha256(&root.join(rel))?;
        self.files.push(FileEntry { path: rel.to_string(), sha256, bytes });
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "command = {}\nconfig_sha256 = {}\nversion = {}\nthreads = {}\nseed = {}\nstart_unix = {}\nend_unix = {}\n",
            self.command, self.config_hash, self.version, self.threads, self.seed, self.start_unix, self.end_unix
        );
        for f in &self.files {
            s.push_str(&format!("file = {} {} {}\n", f.sha256, f.bytes, f.path));
        }
        s
    }

    pub fn parse(text: &str) -> Result<RunManifest> {
        let bad = |msg: String| Error::Format { what: "manifest", msg };
        let mut m = RunManifest {
            command: String::new(),
            config_hash: String::new(),
            version: String::new(),
            threads: 0,
            seed: 0,
            start_unix: 0,
            end_unix: 0,
            files: vec![],
        };
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line.split_once(" = ").ok_or_else(|| bad(format!("line {}: expected `key = value`", i + 1)))?;
            let int = |v: &str| v.parse::<u64>().map_err(|_| bad(format!("line {}: `{v}` is not an integer", i + 1)));
            match k {
                "command" => m.command = v.to_string(),
                "config_sha256" => m.config_hash = v.to_string(),
                "version" => m.version = v.to_string(),
                "threads" => m.threads = int(v)? as usize,
                "seed" => m.seed = int(v)?,
                "start_unix" => m.start_unix = int(v)?,
                "end_unix" => m.end_unix = int(v)?,
                "file" => {
                    let mut parts = v.splitn(3, ' ');
                    let (sha, bytes, path) = (parts.next(), parts.next(), parts.next());
                    match (sha, bytes, path) {
                        (Some(sha), Some(b), Some(p)) => {
                            m.files.push(FileEntry { path: p.to_string(), sha256: sha.to_string(), bytes: int(b)? })
                        }
                        _ => return Err(bad(format!("line {}: file entry needs `sha bytes path`", i + 1))),
                    }
                }
                other => return Err(bad(format!("line {}: unknown key `{other}`", i + 1))),
            }
        }
        Ok(m)
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        std::fs::write(root.join(Self::file_name(&self.command)), self.to_text())?;
        Ok(())
    }

    /// Paths whose current checksum differs from the recorded one.
    pub fn verify(&self, root: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            match file_sha256(&root.join(&f.path)) {
                Ok((sha, _)) if sha == f.sha256 => {}
                _ => bad.push(f.path.clone()),
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_and_verification() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x,y\n1,2\n").unwrap();
        std::fs::create_dir(dir.path().join("snapshots")).unwrap();
        std::fs::write(dir.path().join("snapshots/b name.khm"), [0u8, 1, 2]).unwrap();
        let mut m = RunManifest {
            command: "simulate".into(),
            config_hash: "ab".into(),
            version: "0.1.0".into(),
            threads: 4,
            seed: 7,
            start_unix: 10,
            end_unix: 12,
            files: vec![],
        };
        m.add(dir.path(), "a.csv").unwrap();
        m.add(dir.path(), "snapshots/b name.khm").unwrap();
        let back = RunManifest::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(back.verify(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("a.csv"), "x,y\n1,3\n").unwrap();
        assert_eq!(back.verify(dir.path()).unwrap(), vec!["a.csv".to_string()]);
    }

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, "abc").unwrap();
        let (sha, n) = file_sha256(&p).unwrap();
        assert_eq!(sha, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(n, 3);
    }
}
