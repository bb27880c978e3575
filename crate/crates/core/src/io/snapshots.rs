//! Snapshot directory: one checkpoint file per emitted state, named by
//! member and snapshot index.

use crate::error::{Error, Result};
use crate::integrator::checkpoint::Checkpoint;
use std::path::{Path, PathBuf};

pub fn snapshot_name(member: usize, index: u64) -> String {
    format!("m{member:03}_s{index:08}.khm")
}

fn parse_name(name: &str) -> Option<(usize, u64)> {
    let rest = name.strip_prefix('m')?.strip_suffix(".khm")?;
    let (m, s) = rest.split_once("_s")?;
    Some((m.parse().ok()?, s.parse().ok()?))
}

/// Snapshot files in (member, index) order.
pub fn list_snapshots(dir: &Path) -> Result<Vec<(usize, u64, PathBuf)>> {
    if !dir.is_dir() {
        return Err(Error::Validation(format!("snapshot directory {} does not exist", dir.display())));
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name();
        if let Some((m, s)) = name.to_str().and_then(parse_name) {
            out.push((m, s, entry.path()));
        }
    }
    if out.is_empty() {
        return Err(Error::Validation(format!("no snapshots in {}", dir.display())));
    }
    out.sort();
    Ok(out)
}

/// Reads every snapshot, checking that all share one grid.
pub fn read_snapshots(dir: &Path) -> Result<Vec<(usize, u64, Checkpoint)>> {
    let mut out: Vec<(usize, u64, Checkpoint)> = Vec::new();
    for (m, s, path) in list_snapshots(dir)? {
        let c = Checkpoint::read(&path)?;
        if let Some(first) = out.first() {
            if first.2.field.grid() != c.field.grid() {
                return Err(Error::GridMismatch(format!(
                    "{} has n = {} but earlier snapshots have n = {}",
                    path.display(),
                    c.field.grid().n(),
                    first.2.field.grid().n()
                )));
            }
        }
        out.push((m, s, c));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, SpectralField};

    fn ck(n: usize, step: u64) -> Checkpoint {
        Checkpoint { nu: 0.1, time: step as f64, step, seed: 1, field: SpectralField::zeros(Grid::new(n).unwrap()) }
    }

    #[test]
    fn names_round_trip_and_sort() {
        assert_eq!(parse_name(&snapshot_name(3, 120)), Some((3, 120)));
        assert_eq!(parse_name("energy.csv"), None);
        let dir = tempfile::tempdir().unwrap();
        for (m, s) in [(1, 0), (0, 10), (0, 2)] {
            ck(8, s).write(&dir.path().join(snapshot_name(m, s))).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let got: Vec<(usize, u64)> = read_snapshots(dir.path()).unwrap().iter().map(|t| (t.0, t.1)).collect();
        assert_eq!(got, vec![(0, 2), (0, 10), (1, 0)]);
    }

    #[test]
    fn empty_and_mixed_directories_fail() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_snapshots(dir.path()), Err(Error::Validation(_))));
        ck(8, 0).write(&dir.path().join(snapshot_name(0, 0))).unwrap();
        ck(16, 1).write(&dir.path().join(snapshot_name(0, 1))).unwrap();
        assert!(matches!(read_snapshots(dir.path()), Err(Error::GridMismatch(_))));
    }
}
