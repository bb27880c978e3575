//! Spherical Bessel functions of the first kind and Gauss-Legendre rules.

use std::f64::consts::PI;

/// Below this argument the power series is used; above it the closed forms
/// are well conditioned for orders 0..=3.
const SERIES_CUTOFF: f64 = 4.0;

fn series(order: u32, x: f64) -> f64 {
    // j_n(x) = x^n / (2n+1)!! * sum_m (-x^2/2)^m / (m! (2n+3)(2n+5)...(2n+2m+1))
    let mut lead = 1.0;
    for k in 0..=order {
        lead /= (2 * k + 1) as f64;
    }
    lead *= x.powi(order as i32);
    let y = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..60u32 {
        term *= y / (m as f64 * (2 * (order + m) + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    lead * sum
}

pub fn j0(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        series(0, x)
    } else {
        x.sin() / x
    }
}

pub fn j1(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        series(1, x)
    } else {
        (x.sin() / x - x.cos()) / x
    }
}

pub fn j2(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        series(2, x)
    } else {
        let (s, c) = x.sin_cos();
        (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x)
    }
}

pub fn j3(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        series(3, x)
    } else {
        let (s, c) = x.sin_cos();
        (15.0 / (x * x * x) - 6.0 / x) * s / x - (15.0 / (x * x) - 1.0) * c / x
    }
}

/// j1(x)/x, finite at the origin (value 1/3).
pub fn j1_over_x(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        // series(1, x) / x without the x^1 factor
        let y = -0.5 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..60u32 {
            term *= y / (m as f64 * (2 * (1 + m) + 1) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum / 3.0
    } else {
        j1(x) / x
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[m - 1 - i] = z;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Integrate `f` over [a, b] with an m-point Gauss-Legendre rule.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(&z, &w)| w * f(mid + half * z))
        .sum::<f64>()
        * half
}
