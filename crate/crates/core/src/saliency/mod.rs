//! Static spectral-whitening saliency and salient patch selection.
//!
//! A frame is split into a luminance and two colour-opponent planes, each
//! plane is filtered by a LogGabor bank in the frequency domain, the scale
//! responses of every (plane, orientation) group are decorrelated by the
//! inverse square root of their covariance, and the squared whitened
//! responses are summed, blurred and rescaled to `[0, 1]`.

mod fft;
mod image_ops;
mod loggabor;
mod maxima;
mod patch;
mod whiten;

pub use fft::Fft2d;
pub use image_ops::{crop, resize_keep_aspect, resize_square, ImagePlane};
pub use loggabor::{LogGaborBank, LogGaborBankConfig};
pub use maxima::{top_local_maxima, LocalMaximum};
pub use patch::{select_patch, PatchSpec};
pub use whiten::{whiten_scales, Whitening};

use image::{GrayImage, RgbImage};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SaliencyError {
    #[error("image has zero area")]
    EmptyImage,
    #[error("invalid saliency configuration: {0}")]
    InvalidConfig(String),
    #[error("patch side {side} does not fit a {width}x{height} frame")]
    PatchLargerThanFrame { side: u32, width: u32, height: u32 },
    #[error("crop window is outside the frame")]
    OutOfBounds,
    #[error("neighborhood must be odd and at least 3, got {0}")]
    InvalidNeighborhood(usize),
}

/// Colour planes the saliency model works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plane {
    Luminance,
    RedGreen,
    BlueYellow,
}

/// One whitening group that fell back to per-scale variance normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateGroup {
    pub plane: Plane,
    pub orientation: usize,
}

/// Saliency values in `[0, 1]` with the dimensions of the source frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub width: u32,
    pub height: u32,
    /// Row-major.
    pub values: Vec<f64>,
    /// Groups whose covariance was too ill-conditioned for full whitening.
    pub degenerate: Vec<DegenerateGroup>,
}

impl SaliencyMap {
    pub fn from_values(width: u32, height: u32, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width as usize * height as usize);
        SaliencyMap {
            width,
            height,
            values,
            degenerate: Vec::new(),
        }
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Location of the largest value (first in row-major order on ties).
    pub fn argmax(&self) -> (u32, u32) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        let w = self.width as usize;
        ((best % w) as u32, (best / w) as u32)
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            image::Luma([(self.get(x, y) * 255.0).round().clamp(0.0, 255.0) as u8])
        })
    }
}

/// Variance below which a scale response is treated as absent.
const VARIANCE_FLOOR: f64 = 1e-18;

/// Saliency model bound to one frame size; reuse it across frames of a video.
pub struct SaliencyModel {
    config: LogGaborBankConfig,
    width: usize,
    height: usize,
    margin: usize,
    padded_width: usize,
    padded_height: usize,
    bank: LogGaborBank,
    fft: Fft2d,
}

/// Smallest even 5-smooth integer `>= n`.
fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(2) + n % 2;
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

/// Index into `0..n`, repeating the edge pixel outside it.
fn replicate(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

impl SaliencyModel {
    pub fn new(config: LogGaborBankConfig, width: u32, height: u32) -> Result<Self, SaliencyError> {
        config.validate()?;
        if width == 0 || height == 0 {
            return Err(SaliencyError::EmptyImage);
        }
        let (w, h) = (width as usize, height as usize);
        let longest = config.min_wavelength * config.scale_multiplier.powi(config.num_scales as i32 - 1);
        let margin = longest.ceil() as usize;
        let (pw, ph) = (fft_friendly(w + 2 * margin), fft_friendly(h + 2 * margin));
        Ok(SaliencyModel {
            config,
            width: w,
            height: h,
            margin,
            padded_width: pw,
            padded_height: ph,
            bank: LogGaborBank::new(&config, pw, ph),
            fft: Fft2d::new(pw, ph),
        })
    }

    pub fn config(&self) -> &LogGaborBankConfig {
        &self.config
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width as u32, self.height as u32)
    }

    /// Filter response magnitudes of one plane, indexed `[orientation][scale][pixel]`
    /// over the unpadded frame. Edge pixels are replicated into a margin as
    /// wide as the longest wavelength so the circular transform does not wrap
    /// content across borders.
    pub fn filter_magnitudes(&self, plane: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let (w, h, pw, ph, m) = (self.width, self.height, self.padded_width, self.padded_height, self.margin);
        let mut spectrum = vec![Complex64::default(); pw * ph];
        for py in 0..ph {
            let y = replicate(py as isize - m as isize, h);
            for px in 0..pw {
                let x = replicate(px as isize - m as isize, w);
                spectrum[py * pw + px].re = plane[y * w + x];
            }
        }
        self.fft.forward(&mut spectrum);

        let mut buf = vec![Complex64::default(); pw * ph];
        (0..self.config.num_orientations)
            .map(|o| {
                (0..self.config.num_scales)
                    .map(|s| {
                        apply_filter(&self.fft, &spectrum, self.bank.filter(s, o), &mut buf);
                        let mut mags = Vec::with_capacity(w * h);
                        for y in 0..h {
                            let row = (y + m) * pw + m;
                            mags.extend(buf[row..row + w].iter().map(|c| c.norm()));
                        }
                        mags
                    })
                    .collect()
            })
            .collect()
    }

    pub fn compute(&self, frame: &RgbImage) -> Result<SaliencyMap, SaliencyError> {
        if frame.width() as usize != self.width || frame.height() as usize != self.height {
            return Err(SaliencyError::InvalidConfig(format!(
                "model built for {}x{}, frame is {}x{}",
                self.width,
                self.height,
                frame.width(),
                frame.height()
            )));
        }
        let n = self.width * self.height;
        let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (i, px) in frame.pixels().enumerate() {
            let [r, g, b] = px.0.map(|c| c as f64 / 255.0);
            planes[0][i] = 0.299 * r + 0.587 * g + 0.114 * b;
            planes[1][i] = r - g;
            planes[2][i] = b - 0.5 * (r + g);
        }
        let kinds = [Plane::Luminance, Plane::RedGreen, Plane::BlueYellow];

        let mut energy = vec![0.0; n];
        let mut degenerate = Vec::new();
        for (plane, kind) in planes.iter().zip(kinds) {
            for (o, mut group) in self.filter_magnitudes(plane).into_iter().enumerate() {
                if whiten_scales(&mut group, VARIANCE_FLOOR) == Whitening::Diagonal {
                    degenerate.push(DegenerateGroup {
                        plane: kind,
                        orientation: o,
                    });
                }
                for column in &group {
                    for (e, z) in energy.iter_mut().zip(column) {
                        *e += z * z;
                    }
                }
            }
        }

        let sigma = 0.02 * self.width as f64;
        let mut values = gaussian_blur(&energy, self.width, self.height, sigma);
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi - lo > 0.0 {
            for v in &mut values {
                *v = ((*v - lo) / (hi - lo)).clamp(0.0, 1.0);
            }
        } else {
            values.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(SaliencyMap {
            width: self.width as u32,
            height: self.height as u32,
            values,
            degenerate,
        })
    }
}

/// Multiplies `spectrum` by a real frequency response and transforms back into `out`.
fn apply_filter(fft: &Fft2d, spectrum: &[Complex64], filter: &[f64], out: &mut [Complex64]) {
    for ((b, &sp), &g) in out.iter_mut().zip(spectrum).zip(filter) {
        *b = sp * g;
    }
    fft.inverse(out);
}

/// One-shot saliency of a frame; builds a fresh [`SaliencyModel`].
pub fn compute_saliency(
    frame: &RgbImage,
    config: &LogGaborBankConfig,
) -> Result<SaliencyMap, SaliencyError> {
    SaliencyModel::new(*config, frame.width(), frame.height())?.compute(frame)
}

/// Separable Gaussian blur with edge replication.
fn gaussian_blur(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, &wk)| wk * row[clamp(x as isize + k as isize - radius, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, &wk)| wk * tmp[clamp(y as isize + k as isize - radius, height) * width + x])
                .sum();
        }
    }
    out
}

/// Salient patch of side `side`: resize so the short side equals `side`,
/// compute saliency, average the five strongest 9x9 maxima and crop around
/// them. Returns the patch image and its placement in the resized frame.
pub fn salient_patch(
    frame: &RgbImage,
    side: u32,
    config: &LogGaborBankConfig,
) -> Result<(RgbImage, PatchSpec), SaliencyError> {
    let p = saliency_preview(frame, side, config)?;
    Ok((crop(&p.resized, &p.patch)?, p.patch))
}

/// Saliency map and patch of a frame, for inspection.
pub struct SaliencyPreview {
    /// Frame after the aspect-preserving resize.
    pub resized: RgbImage,
    pub map: SaliencyMap,
    pub maxima: Vec<LocalMaximum>,
    pub patch: PatchSpec,
}

impl SaliencyPreview {
    /// The resized frame with the maxima marked in yellow and the patch
    /// outlined in red.
    pub fn overlay(&self) -> RgbImage {
        let mut img = self.resized.clone();
        for m in &self.maxima {
            for dy in -2i64..=2 {
                for dx in -2i64..=2 {
                    let (x, y) = (m.x as i64 + dx, m.y as i64 + dy);
                    if (dx == 0 || dy == 0) && x >= 0 && y >= 0 && x < img.width() as i64 && y < img.height() as i64 {
                        img.put_pixel(x as u32, y as u32, image::Rgb([255, 255, 0]));
                    }
                }
            }
        }
        let red = image::Rgb([255, 0, 0]);
        let p = self.patch;
        let (x1, y1) = (p.top_left_x + p.side - 1, p.top_left_y + p.side - 1);
        for t in 0..2u32 {
            for x in p.top_left_x..=x1 {
                img.put_pixel(x, (p.top_left_y + t).min(y1), red);
                img.put_pixel(x, y1.saturating_sub(t).max(p.top_left_y), red);
            }
            for y in p.top_left_y..=y1 {
                img.put_pixel((p.top_left_x + t).min(x1), y, red);
                img.put_pixel(x1.saturating_sub(t).max(p.top_left_x), y, red);
            }
        }
        img
    }
}

pub fn saliency_preview(
    frame: &RgbImage,
    side: u32,
    config: &LogGaborBankConfig,
) -> Result<SaliencyPreview, SaliencyError> {
    let resized = resize_keep_aspect(frame, side)?;
    let map = compute_saliency(&resized, config)?;
    let mut maxima = top_local_maxima(&map, 5, 9)?;
    maxima.retain(|m| m.value >= crate::features::MIN_PATCH_MAXIMUM);
    let patch = select_patch(&maxima, resized.width(), resized.height(), side)?;
    Ok(SaliencyPreview {
        resized,
        map,
        maxima,
        patch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn small_config() -> LogGaborBankConfig {
        LogGaborBankConfig::default()
    }

    fn dot_frame(w: u32, h: u32, cx: u32, cy: u32) -> RgbImage {
        let mut img = RgbImage::from_pixel(w, h, Rgb([0, 0, 0]));
        for y in cy - 1..=cy + 1 {
            for x in cx - 1..=cx + 1 {
                img.put_pixel(x, y, Rgb([255, 255, 255]));
            }
        }
        img
    }

    #[test]
    fn constant_frame_gives_zero_map() {
        let img = RgbImage::from_pixel(64, 48, Rgb([128, 128, 128]));
        let map = compute_saliency(&img, &small_config()).unwrap();
        assert!(map.is_zero());
        assert_eq!((map.width, map.height), (64, 48));
    }

    #[test]
    fn preview_outlines_the_patch() {
        let frame = dot_frame(96, 54, 80, 10);
        let p = saliency_preview(&frame, 32, &small_config()).unwrap();
        assert_eq!((p.map.width, p.map.height), (p.resized.width(), p.resized.height()));
        let o = p.overlay();
        let (x, y) = (p.patch.top_left_x, p.patch.top_left_y);
        assert_eq!(*o.get_pixel(x, y), image::Rgb([255, 0, 0]));
        assert_eq!(*o.get_pixel(x + p.patch.side - 1, y + p.patch.side - 1), image::Rgb([255, 0, 0]));
    }

    #[test]
    fn bright_square_is_the_peak() {
        let img = dot_frame(96, 64, 40, 30);
        let map = compute_saliency(&img, &small_config()).unwrap();
        let (x, y) = map.argmax();
        assert!(x.abs_diff(40) <= 5 && y.abs_diff(30) <= 5, "argmax at ({x},{y})");
        assert_eq!(map.values.iter().cloned().fold(0.0, f64::max), 1.0);
        assert!(map.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn odd_sizes_are_padded() {
        let img = dot_frame(75, 51, 37, 25);
        let map = compute_saliency(&img, &small_config()).unwrap();
        assert_eq!((map.width, map.height), (75, 51));
        let (x, y) = map.argmax();
        assert!(x.abs_diff(37) <= 2 && y.abs_diff(25) <= 2);
    }

    #[test]
    fn fft_filtering_matches_direct_convolution() {
        // Circular convolution with the spatial kernel obtained by a naive
        // inverse DFT of the frequency response.
        let (w, h) = (16usize, 12usize);
        let cfg = LogGaborBankConfig {
            num_scales: 2,
            num_orientations: 2,
            min_wavelength: 3.0,
            ..Default::default()
        };
        let bank = LogGaborBank::new(&cfg, w, h);
        let fft = Fft2d::new(w, h);
        let plane: Vec<f64> = (0..w * h).map(|i| ((i * 37 % 11) as f64) / 10.0).collect();
        let mut spectrum: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut spectrum);
        let mut buf = vec![Complex64::default(); w * h];
        let tau = std::f64::consts::TAU;
        for o in 0..2 {
            for s in 0..2 {
                let filt = bank.filter(s, o);
                apply_filter(&fft, &spectrum, filt, &mut buf);
                let mut kernel = vec![Complex64::default(); w * h];
                for y in 0..h {
                    for x in 0..w {
                        let mut acc = Complex64::default();
                        for v in 0..h {
                            for u in 0..w {
                                let ph = tau * (u as f64 * x as f64 / w as f64 + v as f64 * y as f64 / h as f64);
                                acc += Complex64::from_polar(filt[v * w + u], ph);
                            }
                        }
                        kernel[y * w + x] = acc / (w * h) as f64;
                    }
                }
                for py in 0..h {
                    for px in 0..w {
                        let mut r = Complex64::default();
                        for qy in 0..h {
                            for qx in 0..w {
                                let kx = (px + w - qx) % w;
                                let ky = (py + h - qy) % h;
                                r += kernel[ky * w + kx] * plane[qy * w + qx];
                            }
                        }
                        let got = buf[py * w + px].norm();
                        assert!((got - r.norm()).abs() < 1e-9, "o{o} s{s} ({px},{py}): {got} vs {}", r.norm());
                    }
                }
            }
        }
    }

    #[test]
    fn salient_patch_on_square_input_is_whole_frame() {
        let img = dot_frame(64, 64, 50, 12);
        let (patch_img, spec) = salient_patch(&img, 64, &small_config()).unwrap();
        assert_eq!(spec, PatchSpec { top_left_x: 0, top_left_y: 0, side: 64 });
        assert_eq!(patch_img, img);
    }

    #[test]
    fn padding_helpers() {
        assert_eq!(fft_friendly(494), 500);
        assert_eq!(fft_friendly(7), 8);
        assert_eq!(fft_friendly(320), 320);
        let idx: Vec<usize> = (-3..7).map(|i| replicate(i, 4)).collect();
        assert_eq!(idx, vec![0, 0, 0, 0, 1, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn blur_preserves_constants() {
        let data = vec![2.5; 30];
        let out = gaussian_blur(&data, 6, 5, 1.3);
        assert!(out.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }
}
