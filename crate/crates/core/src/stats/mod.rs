//! Sphere quadrature and Monte Carlo estimators.

pub mod accumulator;
pub mod batch;
pub mod correlation;
pub mod engine;
pub mod flatness;
pub mod isotropy;
pub mod quadrature;
pub mod structure;

pub use accumulator::StatAccumulator;
pub use batch::Estimate;
pub use correlation::CorrelationSet;
pub use engine::{StatsEngine, StatsPlan, StatsTables};
pub use flatness::FlatnessTable;
pub use isotropy::IsotropyTable;
pub use quadrature::SphereQuadrature;
pub use structure::StructureFunctionTable;

use crate::error::Result;
use crate::spectral::SpectralField;

fn run_plan(snapshots: &[SpectralField], plan: StatsPlan, epsilon: f64) -> Result<StatsTables> {
    let grid = match snapshots.first() {
        Some(s) => *s.grid(),
        None => return Err(crate::Error::Validation("no snapshots".into())),
    };
    let mut e = StatsEngine::new(plan, grid)?;
    for (i, s) in snapshots.iter().enumerate() {
        e.observe(0, i as u64, s)?;
    }
    Ok(e.finish(epsilon))
}

/// S0 and S_par over a snapshot sequence of one trajectory.
pub fn structure_functions(snapshots: &[SpectralField], quad: &SphereQuadrature, ells: &[f64]) -> Result<StructureFunctionTable> {
    let plan = StatsPlan {
        ells: ells.to_vec(),
        quadrature: quad.clone(),
        increments: true,
        isotropy: false,
        correlations: false,
        flatness_p: vec![],
        shells: vec![],
    };
    Ok(run_plan(snapshots, plan, 0.0)?.structure.expect("increments requested"))
}

/// Gamma_bar, Gamma_bar' and H over a snapshot sequence.
pub fn correlation_set(snapshots: &[SpectralField], quad: &SphereQuadrature, ells: &[f64]) -> Result<CorrelationSet> {
    let plan = StatsPlan {
        ells: ells.to_vec(),
        quadrature: quad.clone(),
        increments: true,
        isotropy: false,
        correlations: true,
        flatness_p: vec![],
        shells: vec![],
    };
    Ok(run_plan(snapshots, plan, 0.0)?.correlation.expect("correlations requested"))
}

/// Flatness table for the given orders and shells.
pub fn flatness(snapshots: &[SpectralField], ps: &[u32], shells: &[u32]) -> Result<FlatnessTable> {
    let plan = StatsPlan {
        ells: vec![],
        quadrature: SphereQuadrature::build(1)?,
        increments: false,
        isotropy: false,
        correlations: false,
        flatness_p: ps.to_vec(),
        shells: shells.to_vec(),
    };
    Ok(run_plan(snapshots, plan, 0.0)?.flatness.expect("flatness requested"))
}

/// Isotropy deviation of the longitudinal third moment.
pub fn isotropy_deviation(
    snapshots: &[SpectralField],
    quad: &SphereQuadrature,
    ells: &[f64],
    epsilon: f64,
) -> Result<IsotropyTable> {
    let plan = StatsPlan {
        ells: ells.to_vec(),
        quadrature: quad.clone(),
        increments: true,
        isotropy: true,
        correlations: false,
        flatness_p: vec![],
        shells: vec![],
    };
    Ok(run_plan(snapshots, plan, epsilon)?.isotropy.expect("isotropy requested"))
}
