//! CSV writers and readers for every table the CLI produces.
//!
//! Floats are written in Rust's shortest round-trip form, so a table read
//! back is bit-identical to the one written.

use crate::error::{Error, Result};
use crate::integrator::benchmark::ModeVariance;
use crate::integrator::{EnergyReport, TrajectoryStats};
use crate::khm::{KHMBudget, KhmResidual};
use crate::stats::flatness::FlatnessRow;
use crate::stats::{CorrelationSet, Estimate, FlatnessTable, IsotropyTable, StructureFunctionTable};
use std::path::Path;

pub const ENERGY_HEADER: &[&str] = &["t", "energy", "enstrophy_times_nu"];
pub const STRUCTURE_HEADER: &[&str] = &["ell", "S0", "S0_stderr", "Spar", "Spar_stderr", "samples"];
pub const CORRELATION_HEADER: &[&str] = &["ell", "gamma_bar", "gamma_bar_prime", "H", "H_stderr"];
pub const FLATNESS_HEADER: &[&str] = &["shell_N", "p", "F", "F_stderr"];
pub const BUDGET_HEADER: &[&str] = &[
    "ell",
    "S0_over_ell",
    "viscous_term",
    "forcing_term_43",
    "residual_43",
    "residual_43_stderr",
    "Spar_over_ell",
    "H_term",
    "S0_integral_term",
    "forcing_term_45",
    "residual_45",
    "residual_45_stderr",
];
pub const ISOTROPY_HEADER: &[&str] =
    &["ell", "deviation", "deviation_stderr", "normalized", "normalized_stderr", "noise_floor"];
pub const STATIONARY_HEADER: &[&str] = &[
    "eta",
    "residual",
    "residual_stderr",
    "first_half",
    "first_half_stderr",
    "se_ratio",
    "flux",
    "viscous",
    "forcing",
    "samples",
    "batch_len",
    "stationary",
];
pub const ENERGY_REPORT_HEADER: &[&str] = &["quantity", "value", "stderr"];
pub const OU_MODES_HEADER: &[&str] = &["kx", "ky", "kz", "energy", "energy_stderr", "predicted"];

fn csv_err(what: &'static str) -> impl Fn(csv::Error) -> Error {
    move |e| Error::Format { what, msg: e.to_string() }
}

fn write_rows(path: &Path, what: &'static str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(what))?;
    w.write_record(header).map_err(csv_err(what))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(what))?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows(path: &Path, what: &'static str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(what))?;
    let got = r.headers().map_err(csv_err(what))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Format {
            what,
            msg: format!("{}: expected header `{}`, found `{}`", path.display(), header.join(","), got.iter().collect::<Vec<_>>().join(",")),
        });
    }
    r.records().map(|rec| rec.map_err(csv_err(what))).collect()
}

fn num(rec: &csv::StringRecord, i: usize, what: &'static str) -> Result<f64> {
    let s = rec.get(i).unwrap_or("");
    s.parse::<f64>().map_err(|_| Error::Format {
        what,
        msg: format!("line {}: column {} is not a number: `{s}`", rec.position().map_or(0, |p| p.line()), i + 1),
    })
}

fn f(x: f64) -> String {
    format!("{x}")
}

pub fn write_energy(path: &Path, stats: &TrajectoryStats) -> Result<()> {
    let rows = (0..stats.times.len()).map(|i| vec![f(stats.times[i]), f(stats.energy[i]), f(stats.dissipation[i])]);
    write_rows(path, "energy CSV", ENERGY_HEADER, rows)
}

/// (t, energy, nu enstrophy) columns.
pub fn read_energy(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    const W: &str = "energy CSV";
    let mut out = (Vec::new(), Vec::new(), Vec::new());
    for r in read_rows(path, W, ENERGY_HEADER)? {
        out.0.push(num(&r, 0, W)?);
        out.1.push(num(&r, 1, W)?);
        out.2.push(num(&r, 2, W)?);
    }
    Ok(out)
}

pub fn write_structure(path: &Path, t: &StructureFunctionTable) -> Result<()> {
    let rows = (0..t.ell.len()).map(|i| {
        vec![f(t.ell[i]), f(t.s0[i].mean), f(t.s0[i].stderr), f(t.spar[i].mean), f(t.spar[i].stderr), t.samples.to_string()]
    });
    write_rows(path, "structure-function CSV", STRUCTURE_HEADER, rows)
}

/// The envelope column is not part of the schema and reads back as zeros.
pub fn read_structure(path: &Path) -> Result<StructureFunctionTable> {
    const W: &str = "structure-function CSV";
    let rows = read_rows(path, W, STRUCTURE_HEADER)?;
    let mut t = StructureFunctionTable { ell: vec![], s0: vec![], spar: vec![], envelope: vec![], samples: 0 };
    for r in &rows {
        t.ell.push(num(r, 0, W)?);
        t.s0.push(Estimate::new(num(r, 1, W)?, num(r, 2, W)?));
        t.spar.push(Estimate::new(num(r, 3, W)?, num(r, 4, W)?));
        t.envelope.push(0.0);
        t.samples = num(r, 5, W)? as usize;
    }
    Ok(t)
}

pub fn write_correlations(path: &Path, c: &CorrelationSet) -> Result<()> {
    let rows = (0..c.ell.len()).map(|i| {
        vec![f(c.ell[i]), f(c.gamma_bar[i].mean), f(c.gamma_bar_prime[i].mean), f(c.h[i].mean), f(c.h[i].stderr)]
    });
    write_rows(path, "correlation CSV", CORRELATION_HEADER, rows)
}

/// Standard errors of Gamma_bar and Gamma_bar' are not part of the schema
/// and read back as zero; the spectrum reads back empty.
pub fn read_correlations(path: &Path) -> Result<CorrelationSet> {
    const W: &str = "correlation CSV";
    let rows = read_rows(path, W, CORRELATION_HEADER)?;
    let mut c = CorrelationSet { ell: vec![], gamma_bar: vec![], gamma_bar_prime: vec![], h: vec![], spectrum: vec![] };
    for r in &rows {
        c.ell.push(num(r, 0, W)?);
        c.gamma_bar.push(Estimate::exact(num(r, 1, W)?));
        c.gamma_bar_prime.push(Estimate::exact(num(r, 2, W)?));
        c.h.push(Estimate::new(num(r, 3, W)?, num(r, 4, W)?));
    }
    Ok(c)
}

pub fn write_flatness(path: &Path, t: &FlatnessTable) -> Result<()> {
    let rows = t.rows.iter().map(|r| {
        let (v, se) = r.value.map_or((f64::NAN, f64::NAN), |e| (e.mean, e.stderr));
        vec![r.shell.to_string(), r.p.to_string(), f(v), f(se)]
    });
    write_rows(path, "flatness CSV", FLATNESS_HEADER, rows)
}

/// Empty shells are written as NaN and read back as None.
pub fn read_flatness(path: &Path) -> Result<FlatnessTable> {
    const W: &str = "flatness CSV";
    let rows = read_rows(path, W, FLATNESS_HEADER)?;
    let mut t = FlatnessTable::default();
    for r in &rows {
        let int = |i: usize| -> Result<u32> {
            r.get(i).unwrap_or("").parse::<u32>().map_err(|_| Error::Format { what: W, msg: format!("column {} is not an integer", i + 1) })
        };
        let (v, se) = (num(r, 2, W)?, num(r, 3, W)?);
        let value = if v.is_nan() { None } else { Some(Estimate::new(v, se)) };
        t.rows.push(FlatnessRow { shell: int(0)?, p: int(1)?, value });
    }
    Ok(t)
}

pub fn write_isotropy(path: &Path, t: &IsotropyTable) -> Result<()> {
    let rows = (0..t.ell.len()).map(|i| {
        vec![
            f(t.ell[i]),
            f(t.deviation[i].mean),
            f(t.deviation[i].stderr),
            f(t.normalized[i].mean),
            f(t.normalized[i].stderr),
            f(t.noise_floor[i]),
        ]
    });
    write_rows(path, "isotropy CSV", ISOTROPY_HEADER, rows)
}

pub fn write_budget(path: &Path, b: &KHMBudget) -> Result<()> {
    let rows = (0..b.ell.len()).map(|i| {
        vec![
            f(b.ell[i]),
            f(b.s0_over_ell[i].mean),
            f(b.viscous_term[i].mean),
            f(b.forcing_term_43[i]),
            f(b.residual_43[i].mean),
            f(b.residual_43[i].stderr),
            f(b.spar_over_ell[i].mean),
            f(b.h_term[i].mean),
            f(b.s0_integral_term[i].mean),
            f(b.forcing_term_45[i]),
            f(b.residual_45[i].mean),
            f(b.residual_45[i].stderr),
        ]
    });
    write_rows(path, "budget CSV", BUDGET_HEADER, rows)
}

/// Budget rows as plain numbers, one Vec per column in header order.
pub fn read_budget(path: &Path) -> Result<Vec<Vec<f64>>> {
    const W: &str = "budget CSV";
    let rows = read_rows(path, W, BUDGET_HEADER)?;
    let mut cols = vec![Vec::with_capacity(rows.len()); BUDGET_HEADER.len()];
    for r in &rows {
        for (i, c) in cols.iter_mut().enumerate() {
            c.push(num(r, i, W)?);
        }
    }
    Ok(cols)
}

pub fn write_stationary(path: &Path, rs: &[KhmResidual]) -> Result<()> {
    let rows = rs.iter().map(|r| {
        vec![
            r.label.clone(),
            f(r.residual.mean),
            f(r.residual.stderr),
            f(r.first_half.mean),
            f(r.first_half.stderr),
            f(r.se_ratio),
            f(r.flux.mean),
            f(r.viscous.mean),
            f(r.forcing),
            r.samples.to_string(),
            r.batch_len.to_string(),
            r.stationary.to_string(),
        ]
    });
    write_rows(path, "stationary KHM CSV", STATIONARY_HEADER, rows)
}

pub fn write_energy_report(path: &Path, r: &EnergyReport) -> Result<()> {
    let e = |name: &str, v: Estimate| vec![name.to_string(), f(v.mean), f(v.stderr)];
    let x = |name: &str, v: f64| vec![name.to_string(), f(v), "0".to_string()];
    let rows = vec![
        x("epsilon", r.epsilon),
        x("nu", r.nu),
        x("s", r.s),
        e("dissipation", r.dissipation),
        e("energy", r.energy),
        e("wad", r.wad),
        e("balance_residual", r.balance_residual),
        e("regularity_norm", r.regularity_norm),
        x("ell_d", r.ell_d),
        x("samples", r.samples as f64),
    ];
    write_rows(path, "energy report CSV", ENERGY_REPORT_HEADER, rows)
}

pub fn write_ou_modes(path: &Path, modes: &[ModeVariance]) -> Result<()> {
    let rows = modes.iter().map(|m| {
        vec![
            m.k[0].to_string(),
            m.k[1].to_string(),
            m.k[2].to_string(),
            f(m.measured.mean),
            f(m.measured.stderr),
            f(m.predicted),
        ]
    });
    write_rows(path, "OU modes CSV", OU_MODES_HEADER, rows)
}

pub fn read_energy_report(path: &Path) -> Result<EnergyReport> {
    const W: &str = "energy report CSV";
    let rows = read_rows(path, W, ENERGY_REPORT_HEADER)?;
    let get = |name: &str| -> Result<Estimate> {
        let r = rows
            .iter()
            .find(|r| r.get(0) == Some(name))
            .ok_or_else(|| Error::Format { what: W, msg: format!("missing quantity `{name}`") })?;
        Ok(Estimate::new(num(r, 1, W)?, num(r, 2, W)?))
    };
    Ok(EnergyReport {
        epsilon: get("epsilon")?.mean,
        nu: get("nu")?.mean,
        s: get("s")?.mean,
        dissipation: get("dissipation")?,
        energy: get("energy")?,
        wad: get("wad")?,
        balance_residual: get("balance_residual")?,
        regularity_norm: get("regularity_norm")?,
        ell_d: get("ell_d")?.mean,
        samples: get("samples")?.mean as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(i: usize) -> Estimate {
        Estimate::new(0.1 * i as f64 - 1.0 / 3.0, 1e-3 / (i + 1) as f64)
    }

    #[test]
    fn structure_and_correlation_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ell: Vec<f64> = (1..6).map(|i| 0.1 * i as f64 + 1e-17).collect();
        let s = StructureFunctionTable {
            ell: ell.clone(),
            s0: (0..5).map(est).collect(),
            spar: (5..10).map(est).collect(),
            envelope: vec![0.0; 5],
            samples: 17,
        };
        let p = dir.path().join("s.csv");
        write_structure(&p, &s).unwrap();
        assert_eq!(read_structure(&p).unwrap(), s);
        let c = CorrelationSet {
            ell,
            gamma_bar: (0..5).map(|i| Estimate::exact(est(i).mean)).collect(),
            gamma_bar_prime: (3..8).map(|i| Estimate::exact(est(i).mean)).collect(),
            h: (2..7).map(est).collect(),
            spectrum: vec![],
        };
        let p = dir.path().join("c.csv");
        write_correlations(&p, &c).unwrap();
        assert_eq!(read_correlations(&p).unwrap(), c);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("ell,gamma_bar,gamma_bar_prime,H,H_stderr\n"));
    }

    #[test]
    fn flatness_round_trip_keeps_empty_shells() {
        let dir = tempfile::tempdir().unwrap();
        let t = FlatnessTable {
            rows: vec![
                FlatnessRow { shell: 1, p: 2, value: Some(est(3)) },
                FlatnessRow { shell: 16, p: 3, value: None },
            ],
        };
        let p = dir.path().join("f.csv");
        write_flatness(&p, &t).unwrap();
        assert_eq!(read_flatness(&p).unwrap(), t);
    }

    #[test]
    fn wrong_header_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "ell,S0\n0.1,2\n").unwrap();
        let e = read_structure(&p).unwrap_err();
        assert!(e.to_string().contains("expected header"), "{e}");
        std::fs::write(&p, "t,energy,enstrophy_times_nu\n0.1,x,1\n").unwrap();
        assert!(read_energy(&p).unwrap_err().to_string().contains("not a number"));
    }

    #[test]
    fn energy_report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = EnergyReport {
            epsilon: 1.0,
            nu: 0.05,
            s: 1.5,
            dissipation: est(1),
            energy: est(2),
            wad: est(3),
            balance_residual: est(4),
            regularity_norm: est(5),
            ell_d: 0.123,
            samples: 99,
        };
        let p = dir.path().join("e.csv");
        write_energy_report(&p, &r).unwrap();
        assert_eq!(read_energy_report(&p).unwrap(), r);
    }
}
