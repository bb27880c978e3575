//! INI-style run configuration.
//!
//! ```text
//! format = 1
//! [run]
//! nu = 0.05
//! n = 32
//! dt = 0.005
//! averaging = 50
//! [forcing]
//! preset = low_shell
//! epsilon = 1
//! [stats]
//! ell = linspace(0.1, 1.5, 15)
//! ```

use crate::error::{Error, Result};
use crate::forcing::{build_forcing, ForcingMode, ForcingSpectrum};
use crate::integrator::{BurnIn, RunConfig};
use crate::khm::TestTensorPair;
use crate::spectral::Grid;
use crate::stats::{SphereQuadrature, StatsPlan};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StatsSection {
    pub ells: Vec<f64>,
    pub quadrature_order: usize,
    pub isotropy: bool,
    pub flatness_p: Vec<u32>,
    pub shells: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KhmSection {
    pub eta_scales: Vec<f64>,
    pub ell_d: Option<f64>,
    pub ell_i: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub run: RunConfig,
    pub stats: StatsSection,
    pub khm: KhmSection,
    /// Keep every snapshot on disk (the stats command needs them).
    pub save_snapshots: bool,
    /// sha256 of the config text.
    pub hash: String,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        parse(&text, &path.display().to_string())
    }

    pub fn stats_plan(&self) -> Result<StatsPlan> {
        Ok(StatsPlan {
            ells: self.stats.ells.clone(),
            quadrature: SphereQuadrature::build(self.stats.quadrature_order)?,
            increments: true,
            isotropy: self.stats.isotropy,
            correlations: true,
            flatness_p: self.stats.flatness_p.clone(),
            shells: self.stats.shells.clone(),
        })
    }

    pub fn test_tensors(&self) -> Vec<TestTensorPair> {
        self.khm.eta_scales.iter().map(|&s| TestTensorPair::at_scale(&format!("s={s}"), s)).collect()
    }
}

struct Entry {
    line: usize,
    value: String,
}

type Section = BTreeMap<String, Vec<Entry>>;

struct Parsed<'a> {
    path: &'a str,
    sections: BTreeMap<String, Section>,
    header_line: usize,
}

const KEYS: &[(&str, &[&str])] = &[
    ("", &["format"]),
    ("run", &["nu", "n", "dt", "burn_in", "averaging", "stride", "seed", "ensemble", "nonlinear", "save_snapshots"]),
    ("forcing", &["preset", "epsilon", "mode"]),
    ("stats", &["ell", "quadrature", "isotropy", "flatness_p", "shells"]),
    ("khm", &["eta_scales", "s", "ell_d", "ell_i"]),
];

fn err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), line, msg: msg.into() }
}

fn tokenize<'a>(text: &str, path: &'a str) -> Result<Parsed<'a>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    sections.insert(String::new(), Section::new());
    let mut current = String::new();
    let mut header_line = 1;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap().trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(path, line, format!("malformed section header `{s}`")))?
                .trim();
            if !KEYS.iter().any(|(n, _)| *n == name) || name.is_empty() {
                return Err(err(path, line, format!("unknown section [{name}]")));
            }
            if sections.contains_key(name) {
                return Err(err(path, line, format!("section [{name}] appears twice")));
            }
            sections.insert(name.to_string(), Section::new());
            current = name.to_string();
            continue;
        }
        let (k, v) = s.split_once('=').ok_or_else(|| err(path, line, format!("expected `key = value`, found `{s}`")))?;
        let (k, v) = (k.trim(), v.trim());
        let allowed = KEYS.iter().find(|(n, _)| *n == current).unwrap().1;
        if !allowed.contains(&k) {
            let place = if current.is_empty() { "top level".to_string() } else { format!("[{current}]") };
            return Err(err(path, line, format!("unknown key `{k}` in {place}")));
        }
        let sec = sections.get_mut(&current).unwrap();
        let list = sec.entry(k.to_string()).or_default();
        if k != "mode" && !list.is_empty() {
            return Err(err(path, line, format!("key `{k}` given twice")));
        }
        if k == "format" {
            header_line = line;
        }
        list.push(Entry { line, value: v.to_string() });
    }
    Ok(Parsed { path, sections, header_line })
}

impl Parsed<'_> {
    fn get(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.sections.get(sec).and_then(|s| s.get(key)).and_then(|v| v.first())
    }

    fn all(&self, sec: &str, key: &str) -> &[Entry] {
        self.sections.get(sec).and_then(|s| s.get(key)).map_or(&[], |v| v.as_slice())
    }

    fn section_line(&self, sec: &str) -> usize {
        self.sections
            .get(sec)
            .and_then(|s| s.values().flatten().map(|e| e.line).min())
            .unwrap_or(self.header_line)
    }

    fn typed<T: std::str::FromStr>(&self, sec: &str, key: &str, what: &str) -> Result<Option<(T, usize)>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(|v| Some((v, e.line)))
                .map_err(|_| err(self.path, e.line, format!("`{key}` must be {what}, found `{}`", e.value))),
        }
    }

    fn required<T: std::str::FromStr>(&self, sec: &str, key: &str, what: &str) -> Result<(T, usize)> {
        self.typed(sec, key, what)?
            .ok_or_else(|| err(self.path, self.section_line(sec), format!("missing required key `{key}` in [{sec}]")))
    }

    fn positive(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        match self.typed::<f64>(sec, key, "a number")? {
            None => Ok(None),
            Some((v, _)) if v > 0.0 && v.is_finite() => Ok(Some(v)),
            Some((v, line)) => Err(err(self.path, line, format!("`{key}` must be positive, found {v}"))),
        }
    }

    fn bool(&self, sec: &str, key: &str, default: bool) -> Result<bool> {
        match self.get(sec, key) {
            None => Ok(default),
            Some(e) => match e.value.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                v => Err(err(self.path, e.line, format!("`{key}` must be true or false, found `{v}`"))),
            },
        }
    }

    fn list<T: std::str::FromStr>(&self, sec: &str, key: &str, what: &str) -> Result<Option<Vec<T>>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some(e) => parse_list(&e.value)
                .map(Some)
                .map_err(|bad| err(self.path, e.line, format!("`{key}` must be a comma-separated list of {what}, found `{bad}`"))),
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(|t| t.trim().parse::<T>().map_err(|_| t.trim().to_string())).collect()
}

fn parse_vec3(s: &str) -> Option<[f64; 3]> {
    let v: Vec<f64> = parse_list(s).ok()?;
    (v.len() == 3).then(|| [v[0], v[1], v[2]])
}

/// `linspace(a, b, count)` or an explicit list.
fn parse_ells(s: &str) -> std::result::Result<Vec<f64>, String> {
    if let Some(inner) = s.strip_prefix("linspace(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err("linspace takes (start, stop, count)".into());
        }
        let a: f64 = parts[0].parse().map_err(|_| format!("bad start `{}`", parts[0]))?;
        let b: f64 = parts[1].parse().map_err(|_| format!("bad stop `{}`", parts[1]))?;
        let n: usize = parts[2].parse().map_err(|_| format!("bad count `{}`", parts[2]))?;
        if n < 2 {
            return Err("linspace needs at least 2 points".into());
        }
        return Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect());
    }
    parse_list(s).map_err(|bad| format!("bad number `{bad}`"))
}

fn forcing(p: &Parsed<'_>) -> Result<ForcingSpectrum> {
    let preset = p.get("forcing", "preset");
    let modes = p.all("forcing", "mode");
    let eps = p.positive("forcing", "epsilon")?;
    let spec = match (preset, modes.is_empty()) {
        (Some(e), true) => match e.value.as_str() {
            "low_shell" => ForcingSpectrum::low_shell(eps.unwrap_or(1.0))?,
            "none" => build_forcing(vec![])?,
            other => return Err(err(p.path, e.line, format!("unknown forcing preset `{other}`"))),
        },
        (None, true) => ForcingSpectrum::low_shell(eps.unwrap_or(1.0))?,
        (Some(e), false) => return Err(err(p.path, e.line, "give either `preset` or `mode` lines, not both")),
        (None, false) => {
            let mut list = Vec::with_capacity(modes.len());
            for e in modes {
                let parts: Vec<&str> = e.value.split('/').collect();
                let bad = || err(p.path, e.line, format!("mode must read `kx,ky,kz / ax,ay,az / gx,gy,gz`, found `{}`", e.value));
                if parts.len() != 3 {
                    return Err(bad());
                }
                let k: Vec<i32> = parse_list(parts[0]).map_err(|_| bad())?;
                if k.len() != 3 {
                    return Err(bad());
                }
                let alpha = parse_vec3(parts[1]).ok_or_else(bad)?;
                let gamma = parse_vec3(parts[2]).ok_or_else(bad)?;
                list.push(ForcingMode { k: [k[0], k[1], k[2]], alpha, gamma });
            }
            let spec = build_forcing(list).map_err(|e| err(p.path, modes[0].line, e.to_string()))?;
            match eps {
                Some(t) => spec.with_epsilon(t)?,
                None => spec,
            }
        }
    };
    Ok(spec)
}

pub fn parse(text: &str, path: &str) -> Result<Config> {
    let p = tokenize(text, path)?;
    match p.typed::<u32>("", "format", "an integer")? {
        Some((FORMAT_VERSION, _)) => {}
        Some((v, line)) => return Err(err(path, line, format!("unsupported format {v}, expected {FORMAT_VERSION}"))),
        None => return Err(err(path, 1, format!("missing `format = {FORMAT_VERSION}`"))),
    }
    let (nu, nu_line) = p.required::<f64>("run", "nu", "a number")?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(err(path, nu_line, format!("nu must be positive, found {nu}")));
    }
    let (n, n_line) = p.required::<usize>("run", "n", "an integer")?;
    let grid = Grid::new(n).map_err(|e| err(path, n_line, e.to_string()))?;
    let dt = p.positive("run", "dt")?.ok_or_else(|| err(path, p.section_line("run"), "missing required key `dt` in [run]"))?;
    let averaging = p
        .positive("run", "averaging")?
        .ok_or_else(|| err(path, p.section_line("run"), "missing required key `averaging` in [run]"))?;
    let burn_in = match p.get("run", "burn_in") {
        None => BurnIn::Auto,
        Some(e) if e.value == "auto" => BurnIn::Auto,
        Some(e) => match e.value.parse::<f64>() {
            Ok(t) if t >= 0.0 && t.is_finite() => BurnIn::Time(t),
            _ => return Err(err(path, e.line, format!("`burn_in` must be `auto` or a time >= 0, found `{}`", e.value))),
        },
    };
    let count = |key: &str, default: usize| -> Result<usize> {
        match p.typed::<usize>("run", key, "a positive integer")? {
            None => Ok(default),
            Some((0, line)) => Err(err(path, line, format!("`{key}` must be >= 1"))),
            Some((v, _)) => Ok(v),
        }
    };
    let stride = count("stride", 1)?;
    let ensemble = count("ensemble", 1)?;
    let seed = p.typed::<u64>("run", "seed", "an unsigned integer")?.map_or(0, |v| v.0);
    let nonlinear = p.bool("run", "nonlinear", true)?;
    let save_snapshots = p.bool("run", "save_snapshots", true)?;

    let s = match p.typed::<f64>("khm", "s", "a number")? {
        None => 1.5,
        Some((v, _)) if v > 1.0 && v.is_finite() => v,
        Some((v, line)) => return Err(err(path, line, format!("`s` must exceed 1, found {v}"))),
    };
    let forcing = forcing(&p)?;
    let run = RunConfig {
        nu,
        grid,
        forcing,
        dt,
        burn_in,
        averaging_time: averaging,
        snapshot_stride: stride,
        seed,
        ensemble_size: ensemble,
        nonlinear,
        sobolev_s: s,
    };
    run.validate().map_err(|e| err(path, p.section_line("run"), e.to_string()))?;

    let ells = match p.get("stats", "ell") {
        None => default_ells(grid.n()),
        Some(e) => parse_ells(&e.value).map_err(|m| err(path, e.line, format!("`ell`: {m}")))?,
    };
    if let Some(bad) = ells.iter().find(|l| !(**l > 0.0 && **l < std::f64::consts::PI)) {
        let line = p.get("stats", "ell").map_or(p.header_line, |e| e.line);
        return Err(err(path, line, format!("ell values must lie in (0, pi), found {bad}")));
    }
    if ells.windows(2).any(|w| w[1] <= w[0]) {
        let line = p.get("stats", "ell").map_or(p.header_line, |e| e.line);
        return Err(err(path, line, "ell values must be strictly increasing"));
    }
    let quadrature_order = match p.typed::<usize>("stats", "quadrature", "an integer")? {
        None => 14,
        Some((q, line)) => {
            SphereQuadrature::build(q).map_err(|e| err(path, line, e.to_string()))?;
            q
        }
    };
    let flatness_p = p.list::<u32>("stats", "flatness_p", "integers")?.unwrap_or_default();
    if let Some(&bad) = flatness_p.iter().find(|&&q| q < 2) {
        return Err(err(path, p.get("stats", "flatness_p").unwrap().line, format!("flatness order {bad} must be >= 2")));
    }
    let shells = p.list::<u32>("stats", "shells", "integers")?.unwrap_or_default();
    if let Some(&bad) = shells.iter().find(|&&s| s == 0 || !s.is_power_of_two()) {
        return Err(err(path, p.get("stats", "shells").unwrap().line, format!("shell {bad} is not a power of two")));
    }
    let stats = StatsSection { ells, quadrature_order, isotropy: p.bool("stats", "isotropy", false)?, flatness_p, shells };

    let eta_scales = p.list::<f64>("khm", "eta_scales", "numbers")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    if let Some(&bad) = eta_scales.iter().find(|&&s| !(s > 0.0 && s < std::f64::consts::PI)) {
        return Err(err(path, p.get("khm", "eta_scales").unwrap().line, format!("test-tensor scale {bad} must lie in (0, pi)")));
    }
    let khm = KhmSection { eta_scales, ell_d: p.positive("khm", "ell_d")?, ell_i: p.positive("khm", "ell_i")? };

    let hash = hex(&Sha256::digest(text.as_bytes()));
    Ok(Config { run, stats, khm, save_snapshots, hash })
}

pub const DEFAULT_ELL_POINTS: usize = 32;

/// Log-spaced from one grid spacing to pi/2.
pub fn default_ells(n: usize) -> Vec<f64> {
    let (a, b) = ((2.0 * std::f64::consts::PI / n as f64).ln(), std::f64::consts::FRAC_PI_2.ln());
    let m = DEFAULT_ELL_POINTS - 1;
    (0..=m).map(|i| (a + (b - a) * i as f64 / m as f64).exp()).collect()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
