//! Spectral unfolding, observation sets and Gram-route truncated SVD.
//!
//! The `(H·W) × B` unfolding is tall and thin (`B = 16`), so every SVD goes
//! through the `B × B` Gram matrix `XᵀX`. The Gram matrix is accumulated in
//! fixed row blocks and summed in block order, which keeps results
//! bit-reproducible under any thread count.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::mosaic::MosaicFrame;

/// Rows per block in the Gram reduction.
const GRAM_BLOCK: usize = 4096;

/// `(H·W) × B` matrix view of a cube: row = flat pixel index, column = band.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralUnfolding {
    height: usize,
    width: usize,
    matrix: DMatrix<f64>,
}

impl SpectralUnfolding {
    pub fn new(height: usize, width: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != height * width {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                got: matrix.nrows(),
            });
        }
        Ok(Self {
            height,
            width,
            matrix,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn spatial_shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Lossless reshape; the band-major cube buffer is the column-major matrix.
pub fn spectral_unfold(cube: &HyperCube) -> SpectralUnfolding {
    SpectralUnfolding {
        height: cube.height(),
        width: cube.width(),
        matrix: DMatrix::from_vec(cube.pixels(), cube.bands(), cube.as_slice().to_vec()),
    }
}

/// Inverse of [`spectral_unfold`].
pub fn spectral_fold(unfolding: &SpectralUnfolding) -> Result<HyperCube> {
    let m = &unfolding.matrix;
    HyperCube::from_vec(
        unfolding.height,
        unfolding.width,
        m.ncols(),
        m.as_slice().to_vec(),
    )
}

/// Factored rank-`r` matrix `L·R` with `L: n×r`, `R: r×B`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

impl LowRankFactors {
    pub fn rank(&self) -> usize {
        self.left.ncols()
    }

    pub fn product(&self) -> DMatrix<f64> {
        &self.left * &self.right
    }

    /// `(L·R)[row, col]` without forming the product.
    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let n = self.left.nrows();
        let l = self.left.as_slice();
        let r = self.right.as_slice();
        let rank = self.rank();
        (0..rank).map(|t| l[row + t * n] * r[t + col * rank]).sum()
    }
}

/// Observed entries of an `rows × cols` matrix, grouped by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Observations {
    /// Builds from `(row, col, value)` triples; duplicates are rejected.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        if entries
            .windows(2)
            .any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::InvalidConfig("duplicate observation".into()));
        }
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for &(r, c, v) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::DimensionMismatch {
                    expected: rows * cols,
                    got: r * cols + c,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: r,
                    col: c,
                    band: 0,
                });
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// One observation per pixel: the band the mosaic measures there.
    pub fn from_frame(frame: &MosaicFrame) -> Self {
        let (h, w, b) = frame.cube_shape();
        let n = h * w;
        Self {
            rows: n,
            cols: b,
            row_ptr: (0..=n).collect(),
            col_idx: frame.pattern().band_map(h, w),
            values: frame.raw().as_slice().to_vec(),
        }
    }

    /// Every entry of `matrix`.
    pub fn full(matrix: &DMatrix<f64>) -> Self {
        let (rows, cols) = matrix.shape();
        let mut col_idx = Vec::with_capacity(rows * cols);
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                col_idx.push(c);
                values.push(matrix[(r, c)]);
            }
        }
        Self {
            rows,
            cols,
            row_ptr: (0..=rows).map(|r| r * cols).collect(),
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Iterates `(row, col, observation index)`.
    pub(crate) fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |j| (r, self.col_idx[j], j))
        })
    }

    /// `P_Ω(X)` for a dense column-major matrix.
    pub(crate) fn sample(&self, x: &DMatrix<f64>, out: &mut [f64]) {
        let n = x.nrows();
        let data = x.as_slice();
        for (r, c, j) in self.iter() {
            out[j] = data[r + c * n];
        }
    }

    /// `P_Ωᵀ(z)` into a dense matrix (overwritten).
    pub(crate) fn scatter(&self, z: &[f64], out: &mut DMatrix<f64>) {
        out.fill(0.0);
        let n = out.nrows();
        let data = out.as_mut_slice();
        for (r, c, j) in self.iter() {
            data[r + c * n] = z[j];
        }
    }
}

/// Deterministic blocked `XᵀX`.
pub fn gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, b) = x.shape();
    let data = x.as_slice();
    let blocks = n.div_ceil(GRAM_BLOCK).max(1);
    let partials: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let lo = blk * GRAM_BLOCK;
            let hi = ((blk + 1) * GRAM_BLOCK).min(n);
            let mut g = vec![0.0; b * b];
            for i in 0..b {
                let ci = &data[i * n + lo..i * n + hi];
                for j in i..b {
                    let cj = &data[j * n + lo..j * n + hi];
                    g[i * b + j] = ci.iter().zip(cj).map(|(a, c)| a * c).sum();
                }
            }
            g
        })
        .collect();
    let mut g = DMatrix::zeros(b, b);
    for part in &partials {
        for i in 0..b {
            for j in i..b {
                g[(i, j)] += part[i * b + j];
            }
        }
    }
    for i in 0..b {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    g
}

/// Leading right singular structure of a tall matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    /// Descending singular values, length `r`.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns, `B × r`.
    pub right: DMatrix<f64>,
}

impl TruncatedSvd {
    /// Left singular vectors `U_r = X V_r Σ_r⁻¹`; columns with a zero singular
    /// value are left at zero.
    pub fn left(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut u = x * &self.right;
        for (t, &s) in self.singular_values.iter().enumerate() {
            let scale = if s > 0.0 { 1.0 / s } else { 0.0 };
            u.column_mut(t).scale_mut(scale);
        }
        u
    }
}

/// Rank-`r` truncated SVD through the eigendecomposition of `XᵀX`.
pub fn truncated_svd(x: &DMatrix<f64>, rank: usize) -> Result<TruncatedSvd> {
    let b = x.ncols();
    if rank == 0 || rank > b {
        return Err(Error::RankOutOfRange { rank, bands: b });
    }
    let eig = SymmetricEigen::new(gram(x));
    let mut order: Vec<usize> = (0..b).collect();
    // Descending eigenvalue, ties by index so the basis is deterministic.
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });
    let mut right = DMatrix::zeros(b, rank);
    let mut singular_values = Vec::with_capacity(rank);
    for (t, &i) in order.iter().take(rank).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        // Sign convention: largest-magnitude component positive.
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |m, a| if a.abs() > m.abs() { a } else { m });
        if pivot < 0.0 {
            v.neg_mut();
        }
        right.set_column(t, &v);
        singular_values.push(eig.eigenvalues[i].max(0.0).sqrt());
    }
    Ok(TruncatedSvd {
        singular_values,
        right,
    })
}

/// Best rank-`r` approximation `X V_r V_rᵀ` together with `V_r`.
pub fn project_rank(x: &DMatrix<f64>, rank: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let svd = truncated_svd(x, rank)?;
    let proj = &svd.right * svd.right.transpose();
    Ok((x * proj, svd.right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn unfold_index_bookkeeping() {
        let cube = HyperCube::from_fn(2, 2, 3, |r, c, k| (10 * (2 * r + c) + k) as f64).unwrap();
        let u = spectral_unfold(&cube);
        let expect = DMatrix::from_row_slice(
            4,
            3,
            &[0., 1., 2., 10., 11., 12., 20., 21., 22., 30., 31., 32.],
        );
        assert_eq!(u.matrix(), &expect);
        assert_eq!(spectral_fold(&u).unwrap(), cube);
    }

    #[test]
    fn unfold_of_sensor_sized_cube_has_expected_shape() {
        let u = SpectralUnfolding::new(2048, 1088, DMatrix::zeros(2048 * 1088, 16)).unwrap();
        assert_eq!(u.matrix().shape(), (2_228_224, 16));
    }

    #[test]
    fn gram_matches_naive_product() {
        let x = random_matrix(9000, 5, 1);
        let g = gram(&x);
        let naive = x.transpose() * &x;
        assert!((g - naive).amax() < 1e-9);
    }

    #[test]
    fn gram_route_matches_direct_svd() {
        for seed in 0..5 {
            let x = random_matrix(100, 16, seed);
            let r = 5;
            let (xr, v) = project_rank(&x, r).unwrap();
            let svd = x.clone().svd(true, true);
            let mut idx: Vec<usize> = (0..16).collect();
            idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            let u = svd.u.as_ref().unwrap();
            let vt = svd.v_t.as_ref().unwrap();
            let mut direct = DMatrix::zeros(100, 16);
            for &i in idx.iter().take(r) {
                direct += u.column(i) * svd.singular_values[i] * vt.row(i);
            }
            assert!((&xr - &direct).amax() < 1e-9, "seed {seed}");
            // V has orthonormal columns.
            assert!((v.transpose() * &v - DMatrix::identity(r, r)).amax() < 1e-12);

            let tsvd = truncated_svd(&x, r).unwrap();
            for (t, &i) in idx.iter().take(r).enumerate() {
                assert!((tsvd.singular_values[t] - svd.singular_values[i]).abs() < 1e-9);
            }
            let u_r = tsvd.left(&x);
            assert!((u_r.transpose() * &u_r - DMatrix::identity(r, r)).amax() < 1e-9);
        }
    }

    #[test]
    fn rank_out_of_range() {
        let x = random_matrix(10, 4, 3);
        assert!(matches!(
            truncated_svd(&x, 0),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            truncated_svd(&x, 5),
            Err(Error::RankOutOfRange { rank: 5, bands: 4 })
        ));
    }

    #[test]
    fn observations_sample_and_scatter_are_adjoint() {
        let x = random_matrix(6, 4, 4);
        let obs = Observations::from_entries(
            6,
            4,
            vec![(0, 1, 1.0), (5, 3, 2.0), (2, 0, -1.0), (2, 2, 0.5)],
        )
        .unwrap();
        let mut s = vec![0.0; obs.len()];
        obs.sample(&x, &mut s);
        let z = [0.3, -0.7, 1.1, 2.0];
        let mut back = DMatrix::zeros(6, 4);
        obs.scatter(&z, &mut back);
        let lhs: f64 = s.iter().zip(&z).map(|(a, b)| a * b).sum();
        let rhs = x.dot(&back);
        assert!((lhs - rhs).abs() < 1e-14);
        assert!(Observations::from_entries(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
    }

    #[test]
    fn factor_entry_matches_product() {
        let f = LowRankFactors {
            left: random_matrix(7, 2, 5),
            right: random_matrix(2, 3, 6),
        };
        let p = f.product();
        for r in 0..7 {
            for c in 0..3 {
                assert!((f.entry(r, c) - p[(r, c)]).abs() < 1e-15);
            }
        }
    }
}
