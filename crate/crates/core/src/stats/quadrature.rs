use crate::error::{Error, Result};
use crate::special::gauss_legendre;
use std::f64::consts::PI;

pub const MAX_ORDER: usize = 256;

/// Product Gauss-Legendre (in cos theta) x uniform-azimuth rule on the unit
/// sphere. Weights sum to 4 pi.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
    rings: usize,
    azimuths: usize,
}

impl SphereQuadrature {
    /// Rule exact for spherical polynomials of total degree <= `order`.
    pub fn build(order: usize) -> Result<SphereQuadrature> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        // m-point Gauss-Legendre is exact to degree 2m - 1
        let rings = (order + 2) / 2;
        // even count so that phi -> phi + pi maps nodes to nodes
        let azimuths = (order + 1).next_multiple_of(2);
        let (z, wz) = gauss_legendre(rings);
        let dphi = 2.0 * PI / azimuths as f64;
        let mut nodes = Vec::with_capacity(rings * azimuths);
        let mut weights = Vec::with_capacity(rings * azimuths);
        for (zi, wi) in z.iter().zip(&wz) {
            let r = (1.0 - zi * zi).max(0.0).sqrt();
            for j in 0..azimuths {
                let (s, c) = (j as f64 * dphi).sin_cos();
                nodes.push([r * c, r * s, *zi]);
                weights.push(wi * dphi);
            }
        }
        Ok(SphereQuadrature { nodes, weights, degree: order, rings, azimuths })
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exactness_degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node at -n.
    pub fn antipode(&self, i: usize) -> usize {
        let (r, a) = (i / self.azimuths, i % self.azimuths);
        (self.rings - 1 - r) * self.azimuths + (a + self.azimuths / 2) % self.azimuths
    }

    /// One node from each antipodal pair, with the pair's combined weight.
    /// Sphere means of antipodally even integrands need only these.
    pub fn half(&self) -> Vec<(usize, f64)> {
        (0..self.len())
            .filter(|&i| i < self.antipode(i))
            .map(|i| (i, 2.0 * self.weights[i]))
            .collect()
    }

    /// (1/4pi) sum_i w_i f(n_i).
    pub fn mean(&self, mut f: impl FnMut([f64; 3]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(*n)).sum::<f64>() / (4.0 * PI)
    }

    /// Largest errors of the second, third and fourth direction moments
    /// against delta/3, 0 and (delta delta + delta delta + delta delta)/15.
    pub fn moment_defects(&self) -> [f64; 3] {
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut out = [0.0f64; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[0] = out[0].max((self.mean(|n| n[i] * n[j]) - d(i, j) / 3.0).abs());
                for k in 0..3 {
                    out[1] = out[1].max(self.mean(|n| n[i] * n[j] * n[k]).abs());
                    for l in 0..3 {
                        let want = (d(i, j) * d(k, l) + d(i, k) * d(j, l) + d(i, l) * d(j, k)) / 15.0;
                        out[2] = out[2].max((self.mean(|n| n[i] * n[j] * n[k] * n[l]) - want).abs());
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(i: usize, j: usize) -> f64 {
        if i == j {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn rejects_unsupported_orders() {
        assert!(SphereQuadrature::build(0).is_err());
        assert!(SphereQuadrature::build(MAX_ORDER + 1).is_err());
    }

    #[test]
    fn default_rule_size_and_weights() {
        let q = SphereQuadrature::build(14).unwrap();
        assert_eq!(q.len(), 128);
        let w: f64 = q.weights().iter().sum();
        assert!((w - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn antipodal_pairs() {
        for order in [1, 2, 5, 14, 15] {
            let q = SphereQuadrature::build(order).unwrap();
            for i in 0..q.len() {
                let j = q.antipode(i);
                assert_eq!(q.antipode(j), i);
                assert_ne!(i, j);
                for d in 0..3 {
                    assert!((q.nodes()[i][d] + q.nodes()[j][d]).abs() < 1e-15);
                }
                assert_eq!(q.weights()[i], q.weights()[j]);
            }
            assert_eq!(q.half().len() * 2, q.len());
        }
    }

    #[test]
    fn moments_through_fourth_order() {
        let q = SphereQuadrature::build(4).unwrap();
        assert!(q.moment_defects().iter().all(|&e| e < 1e-15));
        assert!(SphereQuadrature::build(3).unwrap().moment_defects()[2] > 1e-3);
        for i in 0..3 {
            for j in 0..3 {
                let m2 = q.mean(|n| n[i] * n[j]);
                assert!((m2 - delta(i, j) / 3.0).abs() < 1e-15);
                for k in 0..3 {
                    assert!(q.mean(|n| n[i] * n[j] * n[k]).abs() < 1e-15);
                    for l in 0..3 {
                        let want = (delta(i, j) * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k)) / 15.0;
                        assert!((q.mean(|n| n[i] * n[j] * n[k] * n[l]) - want).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn exact_for_monomials_up_to_degree() {
        // (1/4pi) int x^a y^b z^c = (a-1)!!(b-1)!!(c-1)!!/(a+b+c+1)!! for all even, else 0
        fn dfact(n: i64) -> f64 {
            if n <= 0 {
                1.0
            } else {
                (n as f64) * dfact(n - 2)
            }
        }
        let d = 12;
        let q = SphereQuadrature::build(d).unwrap();
        for a in 0..=d {
            for b in 0..=(d - a) {
                for c in 0..=(d - a - b) {
                    let want = if a % 2 == 0 && b % 2 == 0 && c % 2 == 0 {
                        dfact(a as i64 - 1) * dfact(b as i64 - 1) * dfact(c as i64 - 1) / dfact((a + b + c + 1) as i64)
                    } else {
                        0.0
                    };
                    let got = q.mean(|n| n[0].powi(a as i32) * n[1].powi(b as i32) * n[2].powi(c as i32));
                    assert!((got - want).abs() < 1e-14, "{a} {b} {c}");
                }
            }
        }
    }
}
