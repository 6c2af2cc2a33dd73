use serde::{Deserialize, Serialize};

use super::SaliencyError;

/// LogGabor filter bank parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogGaborBankConfig {
    pub num_scales: usize,
    pub num_orientations: usize,
    /// Wavelength of the finest scale, in pixels.
    pub min_wavelength: f64,
    /// Wavelength ratio between successive scales.
    pub scale_multiplier: f64,
    /// Ratio of the radial Gaussian's standard deviation to its center frequency.
    pub sigma_on_f: f64,
    /// Ratio of the orientation spacing `pi / O` to the angular standard deviation.
    pub angular_sigma_factor: f64,
}

impl Default for LogGaborBankConfig {
    fn default() -> Self {
        LogGaborBankConfig {
            num_scales: 4,
            num_orientations: 4,
            min_wavelength: 6.0,
            scale_multiplier: 2.0,
            sigma_on_f: 0.55,
            angular_sigma_factor: 1.2,
        }
    }
}

impl LogGaborBankConfig {
    pub fn validate(&self) -> Result<(), SaliencyError> {
        let bad = |m: &str| Err(SaliencyError::InvalidConfig(m.to_string()));
        if self.num_scales < 1 || self.num_orientations < 1 {
            return bad("need at least one scale and one orientation");
        }
        if !(self.min_wavelength >= 2.0) {
            return bad("min_wavelength must be at least 2 pixels");
        }
        if !(self.scale_multiplier > 1.0) {
            return bad("scale_multiplier must exceed 1");
        }
        if !(self.sigma_on_f > 0.0 && self.sigma_on_f < 1.0) {
            return bad("sigma_on_f must lie in (0, 1)");
        }
        if !(self.angular_sigma_factor > 0.0) {
            return bad("angular_sigma_factor must be positive");
        }
        Ok(())
    }

    pub fn center_frequency(&self, scale: usize) -> f64 {
        1.0 / (self.min_wavelength * self.scale_multiplier.powi(scale as i32))
    }

    pub fn orientation_angle(&self, orientation: usize) -> f64 {
        orientation as f64 * std::f64::consts::PI / self.num_orientations as f64
    }

    pub fn angular_sigma(&self) -> f64 {
        std::f64::consts::PI / self.num_orientations as f64 / self.angular_sigma_factor
    }
}

/// Real, one-sided frequency responses on an unshifted FFT grid.
///
/// Each filter covers a single half-plane of orientations, so the filtered
/// image is complex and its magnitude is the local energy at that scale and
/// orientation.
pub struct LogGaborBank {
    num_orientations: usize,
    /// `filters[scale * O + orientation]`, row-major `height x width`.
    filters: Vec<Vec<f64>>,
}

fn grid_frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64 / n as f64
    } else {
        k as f64 / n as f64 - 1.0
    }
}

impl LogGaborBank {
    pub fn new(config: &LogGaborBankConfig, width: usize, height: usize) -> Self {
        let n = width * height;
        let mut radius = vec![0.0; n];
        let mut angle = vec![0.0; n];
        for y in 0..height {
            let v = grid_frequency(y, height);
            for x in 0..width {
                let u = grid_frequency(x, width);
                radius[y * width + x] = (u * u + v * v).sqrt();
                // Image rows grow downward, so flip v for a counter-clockwise angle.
                angle[y * width + x] = (-v).atan2(u);
            }
        }
        let log_sigma_sq = 2.0 * config.sigma_on_f.ln().powi(2);
        let ang_sigma_sq = 2.0 * config.angular_sigma().powi(2);

        let mut filters = Vec::with_capacity(config.num_scales * config.num_orientations);
        for s in 0..config.num_scales {
            let f0 = config.center_frequency(s);
            let radial: Vec<f64> = radius
                .iter()
                .map(|&r| {
                    if r == 0.0 {
                        0.0
                    } else {
                        (-(r / f0).ln().powi(2) / log_sigma_sq).exp()
                    }
                })
                .collect();
            for o in 0..config.num_orientations {
                let theta0 = config.orientation_angle(o);
                let (s0, c0) = theta0.sin_cos();
                let filter = radial
                    .iter()
                    .zip(&angle)
                    .map(|(&rad, &th)| {
                        let (st, ct) = th.sin_cos();
                        let ds = st * c0 - ct * s0;
                        let dc = ct * c0 + st * s0;
                        let dtheta = ds.atan2(dc).abs();
                        rad * (-dtheta * dtheta / ang_sigma_sq).exp()
                    })
                    .collect();
                filters.push(filter);
            }
        }
        LogGaborBank {
            num_orientations: config.num_orientations,
            filters,
        }
    }

    pub fn filter(&self, scale: usize, orientation: usize) -> &[f64] {
        &self.filters[scale * self.num_orientations + orientation]
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_filter_is_zero_at_dc() {
        let cfg = LogGaborBankConfig::default();
        let bank = LogGaborBank::new(&cfg, 64, 48);
        assert_eq!(bank.len(), 16);
        for s in 0..4 {
            for o in 0..4 {
                assert_eq!(bank.filter(s, o)[0], 0.0);
            }
        }
    }

    #[test]
    fn peak_sits_at_center_frequency_and_orientation() {
        let cfg = LogGaborBankConfig::default();
        let (w, h) = (96, 96);
        let bank = LogGaborBank::new(&cfg, w, h);
        // Orientation 0 points along +u; scale 1 peaks at 1/12 cycles per pixel.
        let f = bank.filter(1, 0);
        let (mut best, mut at) = (0.0, 0);
        for (i, &v) in f.iter().enumerate() {
            if v > best {
                best = v;
                at = i;
            }
        }
        let (x, y) = (at % w, at / w);
        assert_eq!(y, 0);
        assert_eq!(x, 8);
        assert!((best - 1.0).abs() < 1e-12);
        // Opposite half-plane is suppressed.
        assert!(f[w - 8] < 1e-4 * best);
    }

    #[test]
    fn rejects_invalid_configs() {
        let ok = LogGaborBankConfig::default();
        assert!(ok.validate().is_ok());
        assert!(LogGaborBankConfig { num_scales: 0, ..ok }.validate().is_err());
        assert!(LogGaborBankConfig { min_wavelength: 1.5, ..ok }.validate().is_err());
        assert!(LogGaborBankConfig { scale_multiplier: 1.0, ..ok }.validate().is_err());
    }
}
