use std::f64::consts::TAU;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::ScalarField;
use crate::error::{Error, Result};

/// Relative size of the zero mode above which a field is rejected.
pub const MEAN_ZERO_TOL: f64 = 1e-8;

/// Unnormalized square 2D DFT on row-major `n x n` buffers.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn rows(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let len = plan.get_inplace_scratch_len();
        data.par_chunks_mut(self.n).for_each_init(
            || vec![Complex64::default(); len],
            |scratch, row| plan.process_with_scratch(row, scratch),
        );
    }

    fn transpose(&self, data: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            for i in j + 1..n {
                data.swap(j * n + i, i * n + j);
            }
        }
    }

    fn apply(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.n * self.n, "buffer size");
        self.rows(data, plan);
        self.transpose(data);
        self.rows(data, plan);
        self.transpose(data);
    }

    /// `F[k] = sum_x u[x] e^{-i k x}`, entry `k2 * n + k1`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.fwd);
    }

    /// Inverse without the `1/n^2` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inv);
    }
}

/// Signed integer frequency of DFT index `i`, in `[-n/2, n/2)`.
#[inline]
pub fn frequency(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn spectrum(u: &ScalarField) -> (Fft2, Vec<Complex64>) {
    let fft = Fft2::new(u.n());
    let mut data: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut data);
    (fft, data)
}

/// `||u||_{H^-1} = sqrt(sum_{k != 0} |u_k|^2 / |k|^2)` with
/// `u_k = n^-2 sum_x u(x) e^{-i k x}`.
pub fn h_minus_one(u: &ScalarField) -> Result<f64> {
    let n = u.n();
    let (_, data) = spectrum(u);
    let norm = (n * n) as f64;
    let zero = data[0].norm() / norm;
    if zero > MEAN_ZERO_TOL * u.rms() {
        return Err(Error::NotMeanZero { mean: zero });
    }
    let rows: Vec<f64> = data
        .par_chunks(n)
        .enumerate()
        .map(|(j, row)| {
            let k2 = frequency(j, n) as f64;
            row.iter()
                .enumerate()
                .filter(|&(i, _)| i != 0 || j != 0)
                .map(|(i, c)| {
                    let k1 = frequency(i, n) as f64;
                    (c / norm).norm_sqr() / (k1 * k1 + k2 * k2)
                })
                .sum()
        })
        .collect();
    Ok(rows.iter().sum::<f64>().sqrt())
}

/// Offsets `(di, dj)` in `[-n/2, n/2)^2` with `di^2 + dj^2 <= m^2`: the
/// rasterized disk of radius `m` cells.
fn disk_offsets(n: usize, m: usize) -> impl Iterator<Item = (i64, i64)> {
    let half = (n / 2) as i64;
    let m = m as i64;
    let lo = (-m).max(-half);
    let hi = m.min(half - 1);
    (lo..=hi).flat_map(move |dj| {
        let w = ((m * m - dj * dj) as f64).sqrt().floor() as i64;
        (-w.min(half)..=w.min(half - 1)).map(move |di| (di, dj))
    })
}

/// Number of cells in the rasterized disk of radius `m` cells.
pub fn disk_cell_count(n: usize, m: usize) -> usize {
    disk_offsets(n, m).count()
}

/// Disk averages of one field, computed spectrally.
pub struct DiskAverager {
    n: usize,
    fft: Fft2,
    u_hat: Vec<Complex64>,
}

impl DiskAverager {
    pub fn new(u: &ScalarField) -> Self {
        let (fft, u_hat) = spectrum(u);
        DiskAverager { n: u.n(), fft, u_hat }
    }

    /// Averages of the field over the disk of radius `m` cells around every
    /// cell centre, row-major.
    pub fn averages(&self, m: usize) -> Vec<f64> {
        let n = self.n;
        let mut kernel = vec![Complex64::default(); n * n];
        let wrap = |d: i64| d.rem_euclid(n as i64) as usize;
        let count = disk_cell_count(n, m) as f64;
        for (di, dj) in disk_offsets(n, m) {
            kernel[wrap(dj) * n + wrap(di)] = Complex64::new(1.0 / count, 0.0);
        }
        self.fft.forward(&mut kernel);
        // correlation: A(c) = sum_o u(c + o) K(o)
        kernel
            .par_iter_mut()
            .zip(self.u_hat.par_iter())
            .for_each(|(k, u)| *k = u * k.conj());
        self.fft.inverse(&mut kernel);
        let scale = 1.0 / (n * n) as f64;
        kernel.iter().map(|c| c.re * scale).collect()
    }

    pub fn max_abs_average(&self, m: usize) -> f64 {
        self.averages(m).iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Largest radius `m * 2pi/n` (`1 <= m <= n/2`) at which some disk average
/// of `|u|` exceeds `threshold`; 0 if there is none.
///
/// Radii are scanned upwards. A radius is skipped when the containment
/// bound `(N_m a_m + (N_m' - N_m) sup|u|) / N_m'` already rules it out, so
/// the result is exact while well-mixed fields need few convolutions.
pub fn geometric_scale(u: &ScalarField, threshold: f64) -> f64 {
    let n = u.n();
    let sup = u.sup_norm();
    if sup <= threshold {
        return 0.0;
    }
    let avg = DiskAverager::new(u);
    let mmax = n / 2;
    let counts: Vec<f64> = (0..=mmax).map(|m| disk_cell_count(n, m) as f64).collect();
    let mut best = 0;
    let mut m = 1;
    while m <= mmax {
        let a = avg.max_abs_average(m);
        let mut next = m + 1;
        if a > threshold {
            best = m;
        } else {
            while next <= mmax
                && counts[m] * a + (counts[next] - counts[m]) * sup <= threshold * counts[next]
            {
                next += 1;
            }
        }
        m = next;
    }
    best as f64 * TAU / n as f64
}
