use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Row-major 2-D FFT of a fixed size. The inverse is normalized by `1/(w*h)`.
pub struct Fft2d {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.width * self.height) as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.width, self.height);
        assert_eq!(data.len(), w * h);
        rows.process(data);
        let mut t = vec![Complex64::default(); w * h];
        transpose(data, &mut t, w, h);
        cols.process(&mut t);
        transpose(&t, data, h, w);
    }
}

/// `src` is `rows x cols` row-major; `dst` becomes `cols x rows`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_naive_dft() {
        let (w, h) = (6usize, 5usize);
        let input: Vec<Complex64> = (0..w * h)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let f = Fft2d::new(w, h);
        let mut data = input.clone();
        f.forward(&mut data);
        let tau = std::f64::consts::TAU;
        for v in 0..h {
            for u in 0..w {
                let mut acc = Complex64::default();
                for y in 0..h {
                    for x in 0..w {
                        let ph = -tau * (u as f64 * x as f64 / w as f64 + v as f64 * y as f64 / h as f64);
                        acc += input[y * w + x] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - data[v * w + u]).norm() < 1e-10);
            }
        }
        f.inverse(&mut data);
        for (a, b) in data.iter().zip(&input) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
