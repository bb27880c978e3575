//! Small-ell bounds on S0/ell and the plateau values implied by the energy balance.

use super::budget::KHMBudget;
use crate::integrator::EnergyReport;
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropTrivCheck {
    pub ell: f64,
    pub value: Estimate,
    pub lower: f64,
    pub upper: f64,
    /// 3 SE plus the distance of the forcing term from its ell -> 0 limit
    pub tolerance: f64,
    /// value in [-8/3 eps - tol, tol]
    pub pass: bool,
    /// value in [-8/3 eps - 3 SE, 3 SE]
    pub pass_strict: bool,
    /// distance to the nearer end of [-8/3 eps, 0]; negative outside
    pub margin: f64,
}

/// Checks S0/ell at the smallest tabulated ell against [-8/3 eps, 0].
pub fn prop_triv_bounds(budget: &KHMBudget, eps: f64) -> PropTrivCheck {
    let value = budget.s0_over_ell[0];
    let three_se = 3.0 * value.stderr;
    // forcing_43 -> -4/3 eps as ell -> 0 because a_bar is continuous
    let continuity = (budget.forcing_term_43[0] + 4.0 / 3.0 * eps).abs();
    let tolerance = three_se + continuity;
    let (lower, upper) = (-8.0 / 3.0 * eps, 0.0);
    let v = value.mean;
    PropTrivCheck {
        ell: budget.ell[0],
        value,
        lower,
        upper,
        tolerance,
        pass: v >= lower - tolerance && v <= upper + tolerance,
        pass_strict: v >= lower - three_se && v <= upper + three_se,
        margin: (v - lower).min(upper - v),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NecessaryConditionReport {
    /// (nu D - eps) / eps with D = <||grad u||^2>
    pub energy_balance_residual: Estimate,
    pub s: f64,
    pub regularity_norm: Estimate,
    pub coefficient_43: f64,
    pub coefficient_45: f64,
    /// coefficient * (nu D - eps)
    pub predicted_43: Estimate,
    pub predicted_45: Estimate,
    /// ell -> 0 extrapolation of S0/ell and S_par/ell
    pub measured_43: Estimate,
    pub measured_45: Estimate,
    pub agrees_43: bool,
    pub agrees_45: bool,
    /// energy balance within 3 SE
    pub balance_holds: bool,
    /// both limits agree and the balance holds, so no -4/3, -4/5 law at this nu
    pub no_scaling_law: bool,
    pub wad: Estimate,
    pub ell_d: f64,
    pub ell_i: f64,
}

/// a + b ell^2 through the two smallest points, evaluated at 0. The error is
/// propagated assuming the two points are independent.
fn extrapolate(ell: &[f64], v: &[Estimate]) -> Estimate {
    let (l0, l1) = (ell[0] * ell[0], ell[1] * ell[1]);
    let w0 = l1 / (l1 - l0);
    let w1 = -l0 / (l1 - l0);
    Estimate::new(w0 * v[0].mean + w1 * v[1].mean, (w0 * v[0].stderr).hypot(w1 * v[1].stderr))
}

fn within(a: Estimate, b: Estimate) -> bool {
    (a.mean - b.mean).abs() <= 3.0 * a.stderr.hypot(b.stderr)
}

pub fn necessary_condition_report(budget: &KHMBudget, energy: &EnergyReport, ell_i: f64) -> NecessaryConditionReport {
    let eps = energy.epsilon;
    let excess = Estimate::new(energy.dissipation.mean - eps, energy.dissipation.stderr);
    let (c43, c45) = (4.0 / 3.0, 4.0 / 15.0);
    let predicted_43 = excess.scale(c43);
    let predicted_45 = excess.scale(c45);
    let measured_43 = extrapolate(&budget.ell, &budget.s0_over_ell);
    let measured_45 = extrapolate(&budget.ell, &budget.spar_over_ell);
    let agrees_43 = within(predicted_43, measured_43);
    let agrees_45 = within(predicted_45, measured_45);
    let balance_holds = excess.mean.abs() <= 3.0 * excess.stderr;
    NecessaryConditionReport {
        energy_balance_residual: energy.balance_residual,
        s: energy.s,
        regularity_norm: energy.regularity_norm,
        coefficient_43: c43,
        coefficient_45: c45,
        predicted_43,
        predicted_45,
        measured_43,
        measured_45,
        agrees_43,
        agrees_45,
        balance_holds,
        no_scaling_law: balance_holds && agrees_43 && agrees_45,
        wad: energy.wad,
        ell_d: energy.ell_d,
        ell_i,
    }
}
