//! Radial test profiles and the isotropic test tensor
//! eta(h) = phi(|h|) I + varphi(|h|) h^ (x) h^.

use crate::special::{gauss_legendre, j0, j1, j1_over_x, j2};
use std::f64::consts::PI;

const PANELS: usize = 16;
const PANEL_POINTS: usize = 16;

/// Smooth bump amp * exp(1 - 1/(1 - s^2)) on (lo, hi), s the position mapped to (-1, 1).
/// Peaks at amp in the middle of the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Zero,
    Bump { lo: f64, hi: f64, amp: f64 },
}

impl Profile {
    pub fn bump(lo: f64, hi: f64) -> Profile {
        assert!(0.0 < lo && lo < hi, "bump support must satisfy 0 < lo < hi");
        Profile::Bump { lo, hi, amp: 1.0 }
    }

    pub fn scaled(self, a: f64) -> Profile {
        match self {
            Profile::Zero => Profile::Zero,
            Profile::Bump { lo, hi, amp } => Profile::Bump { lo, hi, amp: amp * a },
        }
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Profile::Zero => None,
            Profile::Bump { lo, hi, .. } => Some((lo, hi)),
        }
    }

    /// Value and first derivative.
    pub fn eval(&self, ell: f64) -> (f64, f64) {
        match *self {
            Profile::Zero => (0.0, 0.0),
            Profile::Bump { lo, hi, amp } => {
                let ds = 2.0 / (hi - lo);
                let s = (ell - lo) * ds - 1.0;
                if s.abs() >= 1.0 {
                    return (0.0, 0.0);
                }
                let q = 1.0 - s * s;
                let v = amp * (1.0 - 1.0 / q).exp();
                (v, v * (-2.0 * s / (q * q)) * ds)
            }
        }
    }

    pub fn value(&self, ell: f64) -> f64 {
        self.eval(ell).0
    }

    pub fn derivative(&self, ell: f64) -> f64 {
        self.eval(ell).1
    }
}

/// Composite Gauss-Legendre nodes on [lo, hi] with the default panel layout.
pub fn radial_rule(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    composite_rule(lo, hi, PANELS, PANEL_POINTS)
}

/// (node, weight) pairs of `panels` equal panels with `points` nodes each.
pub fn composite_rule(lo: f64, hi: f64, panels: usize, points: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(points);
    let width = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * points);
    for p in 0..panels {
        let a = lo + p as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((a + 0.5 * width * (xi + 1.0), 0.5 * width * wi));
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Node {
    ell: f64,
    w: f64,
    phi: f64,
    phi_d: f64,
    varphi: f64,
    varphi_d: f64,
}

/// Test tensor built from two radial profiles, normalized so that
/// 4pi int ell^2 (phi + varphi/3) d ell = 1, i.e. A(0) = 1.
#[derive(Debug, Clone)]
pub struct TestTensorPair {
    pub label: String,
    phi: Profile,
    varphi: Profile,
    nodes: Vec<Node>,
}

impl PartialEq for TestTensorPair {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.phi == other.phi && self.varphi == other.varphi
    }
}

impl TestTensorPair {
    /// Panics if both profiles vanish.
    pub fn new(label: &str, phi: Profile, varphi: Profile) -> TestTensorPair {
        let (lo, hi) = match (phi.support(), varphi.support()) {
            (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1)),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => panic!("test tensor needs a nonzero profile"),
        };
        let raw = |phi: Profile, varphi: Profile| -> Vec<Node> {
            radial_rule(lo, hi)
                .into_iter()
                .map(|(ell, w)| {
                    let (p, pd) = phi.eval(ell);
                    let (v, vd) = varphi.eval(ell);
                    Node { ell, w, phi: p, phi_d: pd, varphi: v, varphi_d: vd }
                })
                .collect()
        };
        let nodes = raw(phi, varphi);
        let mass: f64 = nodes.iter().map(|n| 4.0 * PI * n.w * n.ell * n.ell * (n.phi + n.varphi / 3.0)).sum();
        assert!(mass.abs() > 0.0, "test tensor has zero mass");
        let (phi, varphi) = (phi.scaled(1.0 / mass), varphi.scaled(1.0 / mass));
        TestTensorPair { label: label.to_string(), phi, varphi, nodes: raw(phi, varphi) }
    }

    /// phi = bump(0.3 s, 0.9 s), varphi = 0.6 bump(0.45 s, s).
    pub fn at_scale(label: &str, s: f64) -> TestTensorPair {
        TestTensorPair::new(label, Profile::bump(0.3 * s, 0.9 * s), Profile::bump(0.45 * s, s).scaled(0.6))
    }

    /// Bumps at three support scales, each with both profiles active.
    pub fn library() -> Vec<TestTensorPair> {
        [("small", 0.5), ("medium", 1.0), ("large", 2.0)]
            .iter()
            .map(|&(name, s)| TestTensorPair::at_scale(name, s))
            .collect()
    }

    pub fn phi(&self) -> Profile {
        self.phi
    }

    pub fn varphi(&self) -> Profile {
        self.varphi
    }

    /// Smallest interval holding both supports.
    pub fn support(&self) -> (f64, f64) {
        let first = self.nodes.first().unwrap().ell;
        let last = self.nodes.last().unwrap().ell;
        let lo = [self.phi.support(), self.varphi.support()].iter().flatten().map(|s| s.0).fold(first, f64::min);
        let hi = [self.phi.support(), self.varphi.support()].iter().flatten().map(|s| s.1).fold(last, f64::max);
        (lo, hi)
    }

    /// Radial divergence factor: div_h eta = Phi(|h|) h^ with Phi = phi' + varphi' + 2 varphi / ell.
    pub fn big_phi(&self, ell: f64) -> f64 {
        let (_, pd) = self.phi.eval(ell);
        let (v, vd) = self.varphi.eval(ell);
        pd + vd + 2.0 * v / ell
    }

    /// Integrate g(ell, phi, phi', varphi, varphi') d ell over the support.
    pub fn integrate(&self, g: impl Fn(f64, f64, f64, f64, f64) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.w * g(n.ell, n.phi, n.phi_d, n.varphi, n.varphi_d)).sum()
    }

    /// Isotropic part of the Fourier transform:
    /// int eta(h) e^{i q.h} dh = A(|q|) I + B(|q|) q^ (x) q^.
    pub fn a_eta(&self, q: f64) -> f64 {
        4.0 * PI * self.integrate(|l, p, _, v, _| l * l * (p * j0(q * l) + v * j1_over_x(q * l)))
    }

    pub fn b_eta(&self, q: f64) -> f64 {
        -4.0 * PI * self.integrate(|l, _, _, v, _| l * l * v * j2(q * l))
    }

    /// 4pi int ell^2 Phi(ell) j1(q ell) d ell.
    pub fn phi_j1(&self, q: f64) -> f64 {
        4.0 * PI * self.integrate(|l, _, pd, v, vd| l * l * (pd + vd + 2.0 * v / l) * j1(q * l))
    }

    /// 4pi int ell^2 |Phi(ell)| d ell.
    pub fn phi_abs_mass(&self) -> f64 {
        4.0 * PI * self.integrate(|l, _, pd, v, vd| l * l * (pd + vd + 2.0 * v / l).abs())
    }

    /// eta(h) as a matrix, for pointwise checks.
    pub fn tensor(&self, h: [f64; 3]) -> [[f64; 3]; 3] {
        let l = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        let mut t = [[0.0; 3]; 3];
        if l == 0.0 {
            return t;
        }
        let p = self.phi.value(l);
        let v = self.varphi.value(l);
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = v * h[i] * h[j] / (l * l) + if i == j { p } else { 0.0 };
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::SphereQuadrature;

    #[test]
    fn bump_derivative_matches_difference_quotient() {
        let b = Profile::bump(0.3, 1.1).scaled(2.5);
        for &l in &[0.35, 0.5, 0.7, 0.9, 1.05] {
            let d = 1e-6;
            let fd = (b.value(l + d) - b.value(l - d)) / (2.0 * d);
            assert!((b.derivative(l) - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{l}");
        }
        assert_eq!(b.value(0.3), 0.0);
        assert_eq!(b.value(1.2), 0.0);
        assert!((b.value(0.7) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn library_is_normalized() {
        for eta in TestTensorPair::library() {
            assert!((eta.a_eta(0.0) - 1.0).abs() < 1e-13, "{}", eta.label);
            assert_eq!(eta.b_eta(0.0), 0.0);
        }
    }

    #[test]
    fn radial_rule_converges() {
        let eta = &TestTensorPair::library()[1];
        let (lo, hi) = eta.support();
        let fine: f64 = {
            let (x, w) = gauss_legendre(64);
            let width = (hi - lo) / 64.0;
            (0..64)
                .flat_map(|p| {
                    let a = lo + p as f64 * width;
                    x.iter().zip(&w).map(move |(xi, wi)| (a + 0.5 * width * (xi + 1.0), 0.5 * width * wi))
                })
                .map(|(l, w)| w * l * l * eta.phi().value(l) * j0(3.0 * l))
                .sum()
        };
        let coarse = eta.integrate(|l, p, _, _, _| l * l * p * j0(3.0 * l));
        // the bump is flat to all orders at its edges, so convergence is fast but not geometric
        assert!((fine - coarse).abs() < 1e-9 * fine.abs());
    }

    #[test]
    fn fourier_transform_matches_direct_quadrature() {
        // int eta(h) e^{iq.h} dh by a product of radial and sphere rules
        let eta = &TestTensorPair::library()[0];
        let quad = SphereQuadrature::build(40).unwrap();
        let q = [1.0, -2.0, 2.0];
        let qn = 3.0;
        let mut m = [[0.0; 3]; 3];
        let (lo, hi) = eta.support();
        for (l, w) in radial_rule(lo, hi) {
            for (n, wn) in quad.nodes().iter().zip(quad.weights()) {
                let h = [l * n[0], l * n[1], l * n[2]];
                let c = (q[0] * h[0] + q[1] * h[1] + q[2] * h[2]).cos();
                let t = eta.tensor(h);
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += w * wn * l * l * c * t[i][j];
                    }
                }
            }
        }
        let a = eta.a_eta(qn);
        let b = eta.b_eta(qn);
        for i in 0..3 {
            for j in 0..3 {
                let want = b * q[i] * q[j] / (qn * qn) + if i == j { a } else { 0.0 };
                assert!((m[i][j] - want).abs() < 1e-12, "{i}{j}: {} vs {}", m[i][j], want);
            }
        }
    }

    #[test]
    fn divergence_factor_matches_difference() {
        // div_h eta = Phi(|h|) h^ checked with central differences
        let eta = &TestTensorPair::library()[2];
        let h: [f64; 3] = [0.4, 0.7, -0.6];
        let l = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        let d = 1e-5;
        for i in 0..3 {
            let mut div = 0.0;
            for j in 0..3 {
                let mut hp = h;
                let mut hm = h;
                hp[j] += d;
                hm[j] -= d;
                div += (eta.tensor(hp)[i][j] - eta.tensor(hm)[i][j]) / (2.0 * d);
            }
            let want = eta.big_phi(l) * h[i] / l;
            assert!((div - want).abs() < 1e-7, "{div} vs {want}");
        }
    }
}
