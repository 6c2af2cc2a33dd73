use serde::{Deserialize, Serialize};

use super::{SaliencyError, SaliencyMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMaximum {
    pub x: u32,
    pub y: u32,
    pub value: f64,
}

/// Sliding-window extremum along one axis with the window clipped at borders.
fn window_extremum(
    data: &[f64],
    width: usize,
    height: usize,
    radius: usize,
    horizontal: bool,
    pick: fn(f64, f64) -> f64,
) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            let (pos, len) = if horizontal { (x, width) } else { (y, height) };
            let lo = pos.saturating_sub(radius);
            let hi = (pos + radius).min(len - 1);
            let mut acc = data[y * width + x];
            for q in lo..=hi {
                let v = if horizontal { data[y * width + q] } else { data[q * width + x] };
                acc = pick(acc, v);
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// The `k` strongest local maxima of `map`.
///
/// A pixel qualifies when it is `>=` every value in its centered
/// `neighborhood x neighborhood` window (clipped at borders) and strictly
/// greater than at least one of them. Results are ordered by descending
/// value, ties by `(y, x)`. Equal-valued maxima that share a window are
/// collapsed onto the first in that order.
pub fn top_local_maxima(
    map: &SaliencyMap,
    k: usize,
    neighborhood: usize,
) -> Result<Vec<LocalMaximum>, SaliencyError> {
    if neighborhood < 3 || neighborhood % 2 == 0 {
        return Err(SaliencyError::InvalidNeighborhood(neighborhood));
    }
    let (w, h) = (map.width as usize, map.height as usize);
    let r = neighborhood / 2;
    let max_row = window_extremum(&map.values, w, h, r, true, f64::max);
    let win_max = window_extremum(&max_row, w, h, r, false, f64::max);
    let min_row = window_extremum(&map.values, w, h, r, true, f64::min);
    let win_min = window_extremum(&min_row, w, h, r, false, f64::min);

    let mut candidates: Vec<LocalMaximum> = map
        .values
        .iter()
        .enumerate()
        .filter(|&(i, &v)| v >= win_max[i] && v > win_min[i])
        .map(|(i, &v)| LocalMaximum {
            x: (i % w) as u32,
            y: (i / w) as u32,
            value: v,
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
    });

    let mut kept: Vec<LocalMaximum> = Vec::with_capacity(k);
    for c in candidates {
        if kept.len() == k {
            break;
        }
        let duplicate = kept.iter().any(|m| {
            m.value == c.value && m.x.abs_diff(c.x) as usize <= r && m.y.abs_diff(c.y) as usize <= r
        });
        if !duplicate {
            kept.push(c);
        }
    }
    Ok(kept)
}
