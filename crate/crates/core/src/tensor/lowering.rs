use serde::{Deserialize, Serialize};

use super::{check_indices, gemm, Matrix, Tensor4};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Geometry of one convolution: input volume, kernel window, stride and
/// zero padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvGeometry {
    pub in_channels: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be positive".into()));
        }
        if self.in_channels == 0 || self.kernel_h == 0 || self.kernel_w == 0 {
            return Err(Error::InvalidArgument(format!(
                "empty kernel or input in {self:?}"
            )));
        }
        if self.in_h + 2 * self.pad < self.kernel_h || self.in_w + 2 * self.pad < self.kernel_w {
            return Err(Error::InvalidArgument(format!(
                "kernel {}x{} larger than padded input {}x{}",
                self.kernel_h,
                self.kernel_w,
                self.in_h + 2 * self.pad,
                self.in_w + 2 * self.pad
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn out_h(&self) -> usize {
        (self.in_h + 2 * self.pad - self.kernel_h) / self.stride + 1
    }

    #[inline]
    pub fn out_w(&self) -> usize {
        (self.in_w + 2 * self.pad - self.kernel_w) / self.stride + 1
    }

    /// Number of output positions, i.e. columns of the lowered input.
    #[inline]
    pub fn spatial(&self) -> usize {
        self.out_h() * self.out_w()
    }

    /// `C * H_k * W_k`: width of the lowered kernel.
    #[inline]
    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }

    #[inline]
    pub fn kernel_area(&self) -> usize {
        self.kernel_h * self.kernel_w
    }

    #[inline]
    pub fn input_len(&self) -> usize {
        self.in_channels * self.in_h * self.in_w
    }

    /// `(channel, kh, kw)` of lowered column `j`.
    #[inline]
    pub fn decode(&self, j: usize) -> (usize, usize, usize) {
        let area = self.kernel_area();
        (j / area, (j % area) / self.kernel_w, j % self.kernel_w)
    }
}

/// im2col view of a convolution kernel: one row per filter, one column per
/// `(channel, kh, kw)` kernel position.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredMatrix<T> {
    matrix: Matrix<T>,
    col_map: Vec<(usize, usize, usize)>,
    kernel: [usize; 4],
}

impl<T: Scalar> LoweredMatrix<T> {
    pub fn from_tensor(w: &Tensor4<T>) -> Self {
        let [n, c, kh, kw] = w.dims();
        let col_map = (0..c)
            .flat_map(|ci| (0..kh).flat_map(move |hi| (0..kw).map(move |wi| (ci, hi, wi))))
            .collect();
        let matrix = Matrix::from_vec(n, c * kh * kw, w.as_slice().to_vec())
            .expect("tensor length matches its dims");
        Self {
            matrix,
            col_map,
            kernel: w.dims(),
        }
    }

    /// Reshapes back into the `(N, C, H_k, W_k)` kernel.
    pub fn to_tensor(&self) -> Tensor4<T> {
        let mut t = Tensor4::zeros(self.kernel);
        for f in 0..self.matrix.rows() {
            for (j, &(c, h, w)) in self.col_map.iter().enumerate() {
                t.set(f, c, h, w, self.matrix.get(f, j));
            }
        }
        t
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn col_map(&self) -> &[(usize, usize, usize)] {
        &self.col_map
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }
}

/// Lowers one image (`input` with batch dimension 1) into a
/// `(C*H_k*W_k) x (H_out*W_out)` matrix. Padded taps are zero.
pub fn im2col<T: Scalar>(input: &Tensor4<T>, geom: &ConvGeometry) -> Result<Matrix<T>> {
    geom.validate()?;
    let [n, c, h, w] = input.dims();
    if n != 1 || c != geom.in_channels || h != geom.in_h || w != geom.in_w {
        return Err(Error::InvalidArgument(format!(
            "im2col input dims {:?} do not match geometry {geom:?}",
            input.dims()
        )));
    }
    let rows: Vec<usize> = (0..geom.patch_len()).collect();
    let mut out = Matrix::zeros(rows.len(), geom.spatial());
    im2col_select(input.as_slice(), geom, &rows, out.as_mut_slice());
    Ok(out)
}

/// Writes only the lowered rows listed in `rows` (indices into the full
/// `C*H_k*W_k` lowering) into `out`, which has `rows.len() * spatial`
/// entries. The caller guarantees the geometry is valid and indices are
/// in range.
pub fn im2col_select<T: Scalar>(input: &[T], geom: &ConvGeometry, rows: &[usize], out: &mut [T]) {
    let (oh, ow) = (geom.out_h(), geom.out_w());
    let p = oh * ow;
    debug_assert_eq!(input.len(), geom.input_len());
    debug_assert_eq!(out.len(), rows.len() * p);
    let pad = geom.pad as isize;
    for (r, &j) in rows.iter().enumerate() {
        let (c, kh, kw) = geom.decode(j);
        let plane = &input[c * geom.in_h * geom.in_w..(c + 1) * geom.in_h * geom.in_w];
        let dst = &mut out[r * p..(r + 1) * p];
        for y in 0..oh {
            let iy = (y * geom.stride + kh) as isize - pad;
            let dst_row = &mut dst[y * ow..(y + 1) * ow];
            if iy < 0 || iy >= geom.in_h as isize {
                dst_row.fill(T::zero());
                continue;
            }
            let src = &plane[iy as usize * geom.in_w..(iy as usize + 1) * geom.in_w];
            for (x, d) in dst_row.iter_mut().enumerate() {
                let ix = (x * geom.stride + kw) as isize - pad;
                *d = if ix < 0 || ix >= geom.in_w as isize {
                    T::zero()
                } else {
                    src[ix as usize]
                };
            }
        }
    }
}

/// Adjoint of [`im2col_select`]: scatters `cols` back onto `input_grad`,
/// accumulating overlapping taps.
pub fn col2im_select<T: Scalar>(
    cols: &[T],
    geom: &ConvGeometry,
    rows: &[usize],
    input_grad: &mut [T],
) {
    let (oh, ow) = (geom.out_h(), geom.out_w());
    let p = oh * ow;
    debug_assert_eq!(cols.len(), rows.len() * p);
    debug_assert_eq!(input_grad.len(), geom.input_len());
    let pad = geom.pad as isize;
    for (r, &j) in rows.iter().enumerate() {
        let (c, kh, kw) = geom.decode(j);
        let plane = &mut input_grad[c * geom.in_h * geom.in_w..(c + 1) * geom.in_h * geom.in_w];
        let src = &cols[r * p..(r + 1) * p];
        for y in 0..oh {
            let iy = (y * geom.stride + kh) as isize - pad;
            if iy < 0 || iy >= geom.in_h as isize {
                continue;
            }
            let dst = &mut plane[iy as usize * geom.in_w..(iy as usize + 1) * geom.in_w];
            for x in 0..ow {
                let ix = (x * geom.stride + kw) as isize - pad;
                if ix >= 0 && ix < geom.in_w as isize {
                    dst[ix as usize] += src[y * ow + x];
                }
            }
        }
    }
}

/// Multiplies the lowered kernel restricted to `keep_rows` x `keep_cols`
/// with `x`, whose rows are the lowered-input rows for `keep_cols` only.
///
/// The result equals the full product with every removed weight zeroed,
/// restricted to the kept rows.
pub fn compact_gemm<T: Scalar>(
    w: &LoweredMatrix<T>,
    keep_rows: &[usize],
    keep_cols: &[usize],
    x: &Matrix<T>,
) -> Result<Matrix<T>> {
    check_indices("weight row", keep_rows, w.rows())?;
    check_indices("weight column", keep_cols, w.cols())?;
    if x.rows() != keep_cols.len() {
        return Err(Error::DimMismatch(format!(
            "compact_gemm: {} kept columns but lowered input has {} rows",
            keep_cols.len(),
            x.rows()
        )));
    }
    let sub = w.matrix().select(keep_rows, keep_cols)?;
    gemm(&sub, x)
}
