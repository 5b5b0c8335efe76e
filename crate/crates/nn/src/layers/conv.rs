//! 3x3x3 convolution with zero padding 1, via im2col and GEMM.
//!
//! Output extent per axis is `(n - 1) / stride + 1`: size-preserving at
//! stride 1 and `ceil(n / 2)` at stride 2.

use std::ops::Range;

use crate::error::{NnError, Result};
use crate::scalar::{gemm, gemm_strided, MatRef, Scalar};
use crate::tensor::Tensor5;

pub const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL * KERNEL;
const TILE_POSITIONS: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct Conv3d<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    /// `[out][in][kx][ky][kz]`.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub struct ConvGrads<T> {
    pub input: Option<Tensor5<T>>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub fn output_extent(n: usize, stride: usize) -> usize {
    (n - 1) / stride + 1
}

impl<T: Scalar> Conv3d<T> {
    pub fn zeros(in_channels: usize, out_channels: usize, stride: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            stride,
            weight: vec![T::zero(); out_channels * in_channels * TAPS],
            bias: vec![T::zero(); out_channels],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * TAPS
    }

    pub fn fan_out(&self) -> usize {
        self.out_channels * TAPS
    }

    pub fn output_dims(&self, dims: [usize; 3]) -> [usize; 3] {
        dims.map(|n| output_extent(n, self.stride))
    }

    fn check_input(&self, x: &Tensor5<T>) -> Result<()> {
        if x.channels() != self.in_channels {
            return Err(NnError::Shape(format!(
                "conv expects {} input channels, got {}",
                self.in_channels,
                x.channels()
            )));
        }
        Ok(())
    }

    /// Unfolded columns are built in slabs of whole `x` planes of about
    /// this many output positions, so each slab stays in cache.
    fn slabs(out_dims: [usize; 3]) -> impl Iterator<Item = Range<usize>> {
        let plane = out_dims[1] * out_dims[2];
        let step = (TILE_POSITIONS / plane.max(1)).max(1);
        let ow = out_dims[0];
        (0..ow).step_by(step).map(move |x| x..(x + step).min(ow))
    }

    pub fn forward(&self, x: &Tensor5<T>) -> Result<Tensor5<T>> {
        self.check_input(x)?;
        let in_dims = x.spatial();
        let out_dims = self.output_dims(in_dims);
        let positions: usize = out_dims.iter().product();
        let plane = out_dims[1] * out_dims[2];
        let k = self.fan_in();
        let mut y = Tensor5::zeros([x.batch(), self.out_channels, out_dims[0], out_dims[1], out_dims[2]]);
        let mut cols = Vec::new();
        for n in 0..x.batch() {
            let out = y.sample_mut(n);
            for xs in Self::slabs(out_dims) {
                let tile = xs.len() * plane;
                cols.resize(k * tile, T::zero());
                im2col(x.sample(n), self.in_channels, in_dims, out_dims, self.stride, xs.clone(), &mut cols);
                gemm_strided(
                    T::one(),
                    MatRef::row_major(&self.weight, self.out_channels, k),
                    MatRef::row_major(&cols, k, tile),
                    T::zero(),
                    &mut out[xs.start * plane..],
                    positions,
                );
            }
            for (o, &b) in self.bias.iter().enumerate() {
                for v in &mut out[o * positions..(o + 1) * positions] {
                    *v += b;
                }
            }
        }
        Ok(y)
    }

    /// Gradients given the forward input `x` and upstream `dy`. The input
    /// gradient is only formed when `need_input` is set.
    pub fn backward(&self, x: &Tensor5<T>, dy: &Tensor5<T>, need_input: bool) -> Result<ConvGrads<T>> {
        self.check_input(x)?;
        let in_dims = x.spatial();
        let out_dims = self.output_dims(in_dims);
        if dy.shape() != [x.batch(), self.out_channels, out_dims[0], out_dims[1], out_dims[2]] {
            return Err(NnError::Shape(format!("conv upstream gradient {:?}", dy.shape())));
        }
        let positions: usize = out_dims.iter().product();
        let plane = out_dims[1] * out_dims[2];
        let k = self.fan_in();
        let mut dw = vec![T::zero(); self.weight.len()];
        let mut db = vec![T::zero(); self.out_channels];
        let mut dx = need_input.then(|| Tensor5::zeros(x.shape()));
        let mut rows = Vec::new();
        let mut dcols = Vec::new();
        for n in 0..x.batch() {
            let g = dy.sample(n);
            for xs in Self::slabs(out_dims) {
                let tile = xs.len() * plane;
                let g_tile = MatRef {
                    data: &g[xs.start * plane..],
                    rows: self.out_channels,
                    cols: tile,
                    row_stride: positions,
                    col_stride: 1,
                };
                // Position-major unfolding keeps this GEMM on the fast
                // non-transposed path.
                rows.resize(k * tile, T::zero());
                im2row(x.sample(n), self.in_channels, in_dims, out_dims, self.stride, xs.clone(), &mut rows);
                gemm(T::one(), g_tile, MatRef::row_major(&rows, tile, k), T::one(), &mut dw);
                if let Some(dx) = dx.as_mut() {
                    dcols.resize(k * tile, T::zero());
                    gemm(
                        T::one(),
                        MatRef::row_major(&self.weight, self.out_channels, k).t(),
                        g_tile,
                        T::zero(),
                        &mut dcols,
                    );
                    col2im(&dcols, self.in_channels, in_dims, out_dims, self.stride, xs, dx.sample_mut(n));
                }
            }
            for (o, acc) in db.iter_mut().enumerate() {
                *acc += g[o * positions..(o + 1) * positions].iter().copied().sum::<T>();
            }
        }
        Ok(ConvGrads {
            input: dx,
            weight: dw,
            bias: db,
        })
    }
}

/// Source index along one axis for output position `o` and tap `k`, or
/// `None` inside the zero padding.
#[inline]
fn source(o: usize, k: usize, stride: usize, n: usize) -> Option<usize> {
    let i = (o * stride + k).checked_sub(1)?;
    (i < n).then_some(i)
}

/// Output positions along an axis of `out` whose tap `k` reads inside
/// `0..n`; the source of position `o` is `o * stride + k - 1`.
#[inline]
fn valid(k: usize, stride: usize, n: usize, out: usize) -> Range<usize> {
    let lo = usize::from(k == 0);
    let hi = (n + 1 - k).div_ceil(stride);
    lo..hi.min(out).max(lo)
}

/// Unfolds the output positions with `x` index in `xs` of one sample into a
/// `(C * 27) x positions` matrix.
fn im2col<T: Scalar>(
    x: &[T],
    channels: usize,
    in_dims: [usize; 3],
    out_dims: [usize; 3],
    stride: usize,
    xs: Range<usize>,
    cols: &mut [T],
) {
    let [w, h, d] = in_dims;
    let [_, oh, od] = out_dims;
    let positions = xs.len() * oh * od;
    for c in 0..channels {
        let plane = &x[c * w * h * d..(c + 1) * w * h * d];
        for kx in 0..KERNEL {
            for ky in 0..KERNEL {
                for kz in 0..KERNEL {
                    let row = c * TAPS + (kx * KERNEL + ky) * KERNEL + kz;
                    let dst = &mut cols[row * positions..(row + 1) * positions];
                    let zs = valid(kz, stride, d, od);
                    for ox in xs.clone() {
                        let sx = source(ox, kx, stride, w);
                        for oy in 0..oh {
                            let sy = source(oy, ky, stride, h);
                            let base = ((ox - xs.start) * oh + oy) * od;
                            let line = &mut dst[base..base + od];
                            let (Some(sx), Some(sy)) = (sx, sy) else {
                                line.fill(T::zero());
                                continue;
                            };
                            let src = &plane[(sx * h + sy) * d..(sx * h + sy + 1) * d];
                            line[..zs.start].fill(T::zero());
                            line[zs.end..].fill(T::zero());
                            let first = zs.start * stride + kz - 1;
                            if stride == 1 {
                                line[zs.clone()].copy_from_slice(&src[first..first + zs.len()]);
                            } else {
                                for (v, &s) in line[zs.clone()].iter_mut().zip(src[first..].iter().step_by(stride)) {
                                    *v = s;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// The transpose of [`im2col`]: one row of `C * 27` taps per position.
fn im2row<T: Scalar>(
    x: &[T],
    channels: usize,
    in_dims: [usize; 3],
    out_dims: [usize; 3],
    stride: usize,
    xs: Range<usize>,
    rows: &mut [T],
) {
    let [w, h, d] = in_dims;
    let [_, oh, od] = out_dims;
    let voxels = w * h * d;
    let k = channels * TAPS;
    let mut offsets = [None; TAPS];
    let mut p = 0;
    for ox in xs {
        for oy in 0..oh {
            for oz in 0..od {
                for (tap, off) in offsets.iter_mut().enumerate() {
                    let (kx, ky, kz) = (tap / 9, (tap / 3) % 3, tap % 3);
                    *off = match (source(ox, kx, stride, w), source(oy, ky, stride, h), source(oz, kz, stride, d)) {
                        (Some(sx), Some(sy), Some(sz)) => Some((sx * h + sy) * d + sz),
                        _ => None,
                    };
                }
                let row = &mut rows[p * k..(p + 1) * k];
                for c in 0..channels {
                    let plane = &x[c * voxels..(c + 1) * voxels];
                    for (v, off) in row[c * TAPS..(c + 1) * TAPS].iter_mut().zip(&offsets) {
                        *v = off.map_or(T::zero(), |o| plane[o]);
                    }
                }
                p += 1;
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates columns back into one sample.
fn col2im<T: Scalar>(
    cols: &[T],
    channels: usize,
    in_dims: [usize; 3],
    out_dims: [usize; 3],
    stride: usize,
    xs: Range<usize>,
    dx: &mut [T],
) {
    let [w, h, d] = in_dims;
    let [_, oh, od] = out_dims;
    let positions = xs.len() * oh * od;
    for c in 0..channels {
        let plane = &mut dx[c * w * h * d..(c + 1) * w * h * d];
        for kx in 0..KERNEL {
            for ky in 0..KERNEL {
                for kz in 0..KERNEL {
                    let row = c * TAPS + (kx * KERNEL + ky) * KERNEL + kz;
                    let src = &cols[row * positions..(row + 1) * positions];
                    let zs = valid(kz, stride, d, od);
                    if zs.is_empty() {
                        continue;
                    }
                    let first = zs.start * stride + kz - 1;
                    for ox in xs.clone() {
                        let Some(sx) = source(ox, kx, stride, w) else { continue };
                        for oy in 0..oh {
                            let Some(sy) = source(oy, ky, stride, h) else { continue };
                            let base = ((ox - xs.start) * oh + oy) * od;
                            let dst = &mut plane[(sx * h + sy) * d..(sx * h + sy + 1) * d];
                            let g = &src[base + zs.start..base + zs.end];
                            for (v, &g) in dst[first..].iter_mut().step_by(stride).zip(g) {
                                *v += g;
                            }
                        }
                    }
                }
            }
        }
    }
}
