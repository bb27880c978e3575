//! Batch-means standard errors for serially correlated series.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// A mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(mean: f64, stderr: f64) -> Estimate {
        Estimate { mean, stderr }
    }

    pub fn exact(mean: f64) -> Estimate {
        Estimate { mean, stderr: 0.0 }
    }

    pub fn scale(self, a: f64) -> Estimate {
        Estimate { mean: a * self.mean, stderr: a.abs() * self.stderr }
    }
}

/// Batch count below which standard errors are not attempted.
pub const MIN_BATCHES: usize = 4;

/// Normalized autocorrelation rho_t for t < max_lag, via zero-padded FFT.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![1.0; max_lag.min(n)];
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let c0 = buf[0].re;
    if c0 <= 0.0 {
        return vec![1.0; max_lag.min(n)];
    }
    (0..max_lag.min(n)).map(|t| buf[t].re / c0).collect()
}

/// tau = 1 + 2 sum_{t>=1} rho_t, summed up to the first non-positive rho.
pub fn integrated_time(x: &[f64]) -> f64 {
    let rho = autocorrelation(x, x.len() / 2);
    let mut tau = 1.0;
    for &r in rho.iter().skip(1) {
        if r <= 0.0 {
            break;
        }
        tau += 2.0 * r;
    }
    tau
}

/// Batch length of ceil(5 tau), limited so that at least MIN_BATCHES batches fit.
pub fn batch_length(x: &[f64]) -> usize {
    let n = x.len();
    if n == 0 {
        return 1;
    }
    let b = (5.0 * integrated_time(x)).ceil() as usize;
    b.clamp(1, (n / MIN_BATCHES).max(1))
}

/// Means over consecutive non-overlapping batches; a trailing partial batch is dropped.
pub fn batch_series(x: &[f64], batch_len: usize) -> Vec<f64> {
    x.chunks_exact(batch_len.max(1)).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

fn mean_and_se(batches: &[f64]) -> (f64, f64) {
    let nb = batches.len();
    if nb == 0 {
        return (0.0, 0.0);
    }
    let m = batches.iter().sum::<f64>() / nb as f64;
    if nb < 2 {
        return (m, 0.0);
    }
    let var = batches.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (nb - 1) as f64;
    (m, (var / nb as f64).sqrt())
}

/// Mean of all samples with a batch-means standard error. Several
/// independent members are batched separately and pooled.
pub fn batch_means(members: &[&[f64]], batch_len: usize) -> Estimate {
    let total: usize = members.iter().map(|m| m.len()).sum();
    if total == 0 {
        return Estimate::default();
    }
    let mean = members.iter().flat_map(|m| m.iter()).sum::<f64>() / total as f64;
    let batches: Vec<f64> = members.iter().flat_map(|m| batch_series(m, batch_len)).collect();
    let (_, se) = mean_and_se(&batches);
    Estimate { mean, stderr: se }
}

/// Batch means with the batch length chosen from the pooled autocorrelation
/// of the first member.
pub fn auto_batch_means(members: &[&[f64]]) -> Estimate {
    let b = members.first().map(|m| batch_length(m)).unwrap_or(1);
    batch_means(members, b)
}

/// Delete-one-batch jackknife for a smooth function of several means.
/// `series[q][member]` is the sample series of quantity q for one member.
pub fn jackknife(series: &[Vec<&[f64]>], batch_len: usize, f: impl Fn(&[f64]) -> f64) -> Estimate {
    let q = series.len();
    // batch means per quantity, pooled across members in member order
    let batches: Vec<Vec<f64>> = series
        .iter()
        .map(|members| members.iter().flat_map(|m| batch_series(m, batch_len)).collect())
        .collect();
    let full_means: Vec<f64> = series
        .iter()
        .map(|members| {
            let n: usize = members.iter().map(|m| m.len()).sum();
            if n == 0 {
                0.0
            } else {
                members.iter().flat_map(|m| m.iter()).sum::<f64>() / n as f64
            }
        })
        .collect();
    let value = f(&full_means);
    let nb = batches.first().map_or(0, |b| b.len());
    if nb < 2 {
        return Estimate { mean: value, stderr: 0.0 };
    }
    let sums: Vec<f64> = batches.iter().map(|b| b.iter().sum()).collect();
    let mut leave = vec![0.0; q];
    let mut thetas = Vec::with_capacity(nb);
    for i in 0..nb {
        for (j, l) in leave.iter_mut().enumerate() {
            *l = (sums[j] - batches[j][i]) / (nb - 1) as f64;
        }
        thetas.push(f(&leave));
    }
    let tm = thetas.iter().sum::<f64>() / nb as f64;
    let var = thetas.iter().map(|t| (t - tm).powi(2)).sum::<f64>() * (nb - 1) as f64 / nb as f64;
    Estimate { mean: value, stderr: var.sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (z, _) = crate::forcing::noise::normal_pair(&mut rng);
            x = phi * x + (1.0 - phi * phi).sqrt() * z;
            out.push(x);
        }
        out
    }

    #[test]
    fn integrated_time_of_ar1() {
        // tau = (1 + phi) / (1 - phi)
        let x = ar1(400_000, 0.8, 1);
        let tau = integrated_time(&x);
        assert!((tau - 9.0).abs() < 1.0, "tau {tau}");
        let w = ar1(200_000, 0.0, 2);
        assert!((integrated_time(&w) - 1.0).abs() < 0.1);
    }

    #[test]
    fn batch_means_standard_error_covers_ar1() {
        // variance of the mean of an AR(1) of unit variance ~ tau / n
        let n = 200_000;
        let x = ar1(n, 0.9, 3);
        let b = batch_length(&x);
        let e = batch_means(&[&x], b);
        let want = (19.0 / n as f64).sqrt();
        assert!((e.stderr / want - 1.0).abs() < 0.25, "se {} want {want}", e.stderr);
    }

    #[test]
    fn jackknife_of_linear_function_matches_batch_means() {
        let x = ar1(50_000, 0.5, 4);
        let b = 50;
        let j = jackknife(&[vec![&x]], b, |m| 2.0 * m[0]);
        let e = batch_means(&[&x], b);
        assert!((j.mean - 2.0 * e.mean).abs() < 1e-12);
        assert!((j.stderr - 2.0 * e.stderr).abs() < 1e-12);
    }
}
