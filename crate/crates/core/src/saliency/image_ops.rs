use image::imageops::{self, FilterType};
use image::RgbImage;

use super::{PatchSpec, SaliencyError};

/// Single-channel image with row-major intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: u32, height: u32, data: Vec<f64>) -> Result<Self, SaliencyError> {
        if width == 0 || height == 0 {
            return Err(SaliencyError::EmptyImage);
        }
        if data.len() != width as usize * height as usize {
            return Err(SaliencyError::InvalidConfig("plane size mismatch".into()));
        }
        if !data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(SaliencyError::InvalidConfig("plane values must lie in [0, 1]".into()));
        }
        Ok(ImagePlane { width, height, data })
    }

    /// Luma of an RGB frame.
    pub fn luminance(frame: &RgbImage) -> Self {
        let data = frame
            .pixels()
            .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0)
            .collect();
        ImagePlane {
            width: frame.width(),
            height: frame.height(),
            data,
        }
    }
}

/// `a * b / c` rounded half up, in integers.
fn scaled_round(a: u32, b: u32, c: u32) -> u32 {
    ((2 * a as u64 * b as u64 + c as u64) / (2 * c as u64)) as u32
}

/// Bilinear resize so the shorter side equals `target_short_side`.
pub fn resize_keep_aspect(frame: &RgbImage, target_short_side: u32) -> Result<RgbImage, SaliencyError> {
    let (w, h) = frame.dimensions();
    if w == 0 || h == 0 || target_short_side == 0 {
        return Err(SaliencyError::EmptyImage);
    }
    let (nw, nh) = if h <= w {
        (scaled_round(w, target_short_side, h), target_short_side)
    } else {
        (target_short_side, scaled_round(h, target_short_side, w))
    };
    if (nw, nh) == (w, h) {
        return Ok(frame.clone());
    }
    Ok(imageops::resize(frame, nw, nh, FilterType::Triangle))
}

/// Bilinear warp of the whole frame to `side x side`, ignoring aspect ratio.
pub fn resize_square(frame: &RgbImage, side: u32) -> Result<RgbImage, SaliencyError> {
    let (w, h) = frame.dimensions();
    if w == 0 || h == 0 || side == 0 {
        return Err(SaliencyError::EmptyImage);
    }
    if (w, h) == (side, side) {
        return Ok(frame.clone());
    }
    Ok(imageops::resize(frame, side, side, FilterType::Triangle))
}

/// Exact pixel copy of `patch`.
pub fn crop(frame: &RgbImage, patch: &PatchSpec) -> Result<RgbImage, SaliencyError> {
    super::patch::crop_impl(frame, patch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn full_hd_to_backbone_sides() {
        let f = RgbImage::new(1920, 1080);
        assert_eq!(resize_keep_aspect(&f, 224).unwrap().dimensions(), (398, 224));
        // 1920 * 227 / 1080 = 403.56, rounded half up.
        assert_eq!(resize_keep_aspect(&f, 227).unwrap().dimensions(), (404, 227));
        let tall = RgbImage::new(1080, 1920);
        assert_eq!(resize_keep_aspect(&tall, 224).unwrap().dimensions(), (224, 398));
        assert_eq!(resize_square(&f, 224).unwrap().dimensions(), (224, 224));
    }

    #[test]
    fn same_size_is_identity() {
        let f = RgbImage::from_fn(224, 224, |x, y| Rgb([x as u8, y as u8, (x ^ y) as u8]));
        assert_eq!(resize_keep_aspect(&f, 224).unwrap(), f);
        assert_eq!(resize_square(&f, 224).unwrap(), f);
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(scaled_round(5, 1, 2), 3);
        assert_eq!(scaled_round(1920, 224, 1080), 398);
        assert_eq!(scaled_round(1920, 227, 1080), 404);
    }

    #[test]
    fn empty_frame_is_rejected() {
        assert_eq!(resize_keep_aspect(&RgbImage::new(0, 5), 10), Err(SaliencyError::EmptyImage));
    }

    #[test]
    fn crop_matches_manual_slice() {
        let f = RgbImage::from_fn(40, 30, |x, y| Rgb([x as u8, y as u8, 7]));
        let p = PatchSpec { top_left_x: 40 - 12, top_left_y: 30 - 12, side: 12 };
        let c = crop(&f, &p).unwrap();
        for y in 0..12 {
            for x in 0..12 {
                assert_eq!(c.get_pixel(x, y), f.get_pixel(28 + x, 18 + y));
            }
        }
        let full = PatchSpec { top_left_x: 0, top_left_y: 0, side: 30 };
        assert_eq!(crop(&f, &full).unwrap().dimensions(), (30, 30));
        let bad = PatchSpec { top_left_x: 29, top_left_y: 0, side: 12 };
        assert_eq!(crop(&f, &bad), Err(SaliencyError::OutOfBounds));
    }
}
