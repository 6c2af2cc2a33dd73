use nalgebra::{DMatrix, SymmetricEigen};

/// How a group of scale responses was decorrelated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Whitening {
    /// Full inverse-square-root covariance transform.
    Full,
    /// Per-scale variance normalization; covariance was ill-conditioned.
    Diagonal,
    /// No scale carried energy above the floor; all outputs are zero.
    Empty,
}

/// Smallest accepted eigenvalue ratio for full whitening.
const CONDITION_FLOOR: f64 = 1e-10;

/// Whitens the per-pixel vector of scale responses in place.
///
/// `columns[s][p]` is the response of scale `s` at pixel `p`. Columns are
/// centered, and the centered vectors are multiplied by `C^{-1/2}` where `C` is
/// the scale covariance over all pixels. Columns with variance at or below
/// `variance_floor` are zeroed and excluded.
pub fn whiten_scales(columns: &mut [Vec<f64>], variance_floor: f64) -> Whitening {
    let n = columns.first().map_or(0, Vec::len);
    if n == 0 {
        return Whitening::Empty;
    }
    let mut active = Vec::new();
    for (s, col) in columns.iter_mut().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        col.iter_mut().for_each(|v| *v -= mean);
        let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
        if var > variance_floor {
            active.push(s);
        } else {
            col.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    if active.is_empty() {
        return Whitening::Empty;
    }

    let k = active.len();
    let mut cov = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let c = columns[active[a]]
                .iter()
                .zip(&columns[active[b]])
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / n as f64;
            cov[(a, b)] = c;
            cov[(b, a)] = c;
        }
    }
    let eig = SymmetricEigen::new(cov.clone());
    let max_ev = eig.eigenvalues.max();
    let min_ev = eig.eigenvalues.min();

    if min_ev > CONDITION_FLOOR * max_ev {
        let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let transform = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
        let mut input = vec![0.0; k];
        for p in 0..n {
            for (a, &s) in active.iter().enumerate() {
                input[a] = columns[s][p];
            }
            for (a, &s) in active.iter().enumerate() {
                columns[s][p] = (0..k).map(|b| transform[(a, b)] * input[b]).sum();
            }
        }
        Whitening::Full
    } else {
        for (a, &s) in active.iter().enumerate() {
            let sd = cov[(a, a)].sqrt();
            columns[s].iter_mut().for_each(|v| *v /= sd);
        }
        Whitening::Diagonal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn walsh(n: usize, k: usize) -> Vec<f64> {
        (0..n)
            .map(|i| if (i >> k) & 1 == 0 { 1.0 } else { -1.0 })
            .collect()
    }

    #[test]
    fn uncorrelated_unit_variance_is_identity() {
        let n = 256;
        let mut cols: Vec<Vec<f64>> = (0..4).map(|k| walsh(n, k)).collect();
        let orig = cols.clone();
        assert_eq!(whiten_scales(&mut cols, 1e-18), Whitening::Full);
        for (a, b) in cols.iter().flatten().zip(orig.iter().flatten()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn output_covariance_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 2000;
        let base: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
            .collect();
        // Mix the sources so the columns are strongly correlated.
        let mut cols: Vec<Vec<f64>> = vec![
            base[0].clone(),
            (0..n).map(|i| base[0][i] + 0.5 * base[1][i]).collect(),
            (0..n).map(|i| 2.0 * base[1][i] - base[2][i] + 3.0).collect(),
        ];
        assert_eq!(whiten_scales(&mut cols, 1e-18), Whitening::Full);
        for a in 0..3 {
            for b in 0..3 {
                let c: f64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum::<f64>() / n as f64;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((c - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_covariance_falls_back_to_diagonal() {
        let n = 100;
        let a: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut cols = vec![a.clone(), a.iter().map(|v| 2.0 * v).collect()];
        assert_eq!(whiten_scales(&mut cols, 1e-18), Whitening::Diagonal);
        for c in &cols {
            let var = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn silent_columns_are_zeroed() {
        let mut cols = vec![vec![1e-17; 50], vec![0.0; 50]];
        assert_eq!(whiten_scales(&mut cols, 1e-18), Whitening::Empty);
        assert!(cols.iter().flatten().all(|&v| v == 0.0));
    }
}
