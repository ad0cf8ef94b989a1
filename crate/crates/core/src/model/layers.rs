//! Layer kernels. Activations are `N x C x H x W` (or `N x F`) row-major
//! slices; every backward pass mirrors its forward pass by hand.

use rand::Rng;

use super::tensor::{Scalar, Tensor};

/// 3x3 convolution, stride 1, zero padding 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3x3<T = f32> {
    /// `out x in x 3 x 3`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Affine map `y = x W^T + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T = f32> {
    /// `out x in`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

fn he_uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R, len: usize, fan_in: usize) -> Vec<T> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..len)
        .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
        .collect()
}

impl<T: Scalar> Conv3x3<T> {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, cin: usize, cout: usize) -> Self {
        Self {
            weight: Tensor {
                shape: vec![cout, cin, 3, 3],
                data: he_uniform(rng, cout * cin * 9, cin * 9),
            },
            bias: Tensor::zeros(vec![cout]),
        }
    }

    pub fn cin(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn cout(&self) -> usize {
        self.weight.shape[0]
    }

    /// Returns the output and the per-sample `im2col` matrices needed by
    /// [`Conv3x3::backward`].
    pub fn forward(&self, x: &[T], n: usize, h: usize, w: usize) -> (Vec<T>, Vec<T>) {
        let (cin, cout) = (self.cin(), self.cout());
        let hw = h * w;
        let k = cin * 9;
        let mut cols = vec![T::ZERO; n * k * hw];
        let mut out = vec![T::ZERO; n * cout * hw];
        for s in 0..n {
            let xs = &x[s * cin * hw..(s + 1) * cin * hw];
            let cs = &mut cols[s * k * hw..(s + 1) * k * hw];
            im2col(xs, cin, h, w, cs);
            let os = &mut out[s * cout * hw..(s + 1) * cout * hw];
            for (o, plane) in os.chunks_mut(hw).enumerate() {
                plane.fill(self.bias.data[o]);
            }
            T::gemm(cout, k, hw, T::ONE, &self.weight.data, false, cs, false, T::ONE, os);
        }
        (out, cols)
    }

    /// Accumulates parameter gradients into `dw`/`db` and returns the input
    /// gradient when `need_dx`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        dy: &[T],
        cols: &[T],
        n: usize,
        h: usize,
        w: usize,
        dw: &mut [T],
        db: &mut [T],
        need_dx: bool,
    ) -> Option<Vec<T>> {
        let (cin, cout) = (self.cin(), self.cout());
        let hw = h * w;
        let k = cin * 9;
        let mut dx = need_dx.then(|| vec![T::ZERO; n * cin * hw]);
        let mut dcols = vec![T::ZERO; if need_dx { k * hw } else { 0 }];
        for s in 0..n {
            let dys = &dy[s * cout * hw..(s + 1) * cout * hw];
            let cs = &cols[s * k * hw..(s + 1) * k * hw];
            T::gemm(cout, hw, k, T::ONE, dys, false, cs, true, T::ONE, dw);
            for (o, plane) in dys.chunks(hw).enumerate() {
                db[o] += plane.iter().copied().sum::<T>();
            }
            if let Some(dx) = dx.as_mut() {
                T::gemm(k, cout, hw, T::ONE, &self.weight.data, true, dys, false, T::ZERO, &mut dcols);
                col2im(&dcols, cin, h, w, &mut dx[s * cin * hw..(s + 1) * cin * hw]);
            }
        }
        dx
    }
}

// Row `(c*9 + ky*3 + kx)` of `cols` holds input channel `c` shifted by
// `(ky-1, kx-1)`, zero outside the image.
fn im2col<T: Scalar>(x: &[T], cin: usize, h: usize, w: usize, cols: &mut [T]) {
    let hw = h * w;
    for c in 0..cin {
        let plane = &x[c * hw..(c + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[(c * 9 + ky * 3 + kx) * hw..(c * 9 + ky * 3 + kx + 1) * hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    let dst = &mut row[y * w..(y + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        dst.fill(T::ZERO);
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    for (x, d) in dst.iter_mut().enumerate() {
                        let sx = x as isize + kx as isize - 1;
                        *d = if sx < 0 || sx >= w as isize {
                            T::ZERO
                        } else {
                            src[sx as usize]
                        };
                    }
                }
            }
        }
    }
}

fn col2im<T: Scalar>(cols: &[T], cin: usize, h: usize, w: usize, dx: &mut [T]) {
    let hw = h * w;
    for c in 0..cin {
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[(c * 9 + ky * 3 + kx) * hw..(c * 9 + ky * 3 + kx + 1) * hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for x in 0..w {
                        let sx = x as isize + kx as isize - 1;
                        if sx >= 0 && sx < w as isize {
                            dx[c * hw + sy as usize * w + sx as usize] += row[y * w + x];
                        }
                    }
                }
            }
        }
    }
}

impl<T: Scalar> Linear<T> {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Tensor {
                shape: vec![fan_out, fan_in],
                data: he_uniform(rng, fan_out * fan_in, fan_in),
            },
            bias: Tensor::zeros(vec![fan_out]),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn fan_out(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn forward(&self, x: &[T], n: usize) -> Vec<T> {
        let (fi, fo) = (self.fan_in(), self.fan_out());
        let mut y: Vec<T> = (0..n).flat_map(|_| self.bias.data.iter().copied()).collect();
        T::gemm(n, fi, fo, T::ONE, x, false, &self.weight.data, true, T::ONE, &mut y);
        y
    }

    pub fn backward(&self, dy: &[T], x: &[T], n: usize, dw: &mut [T], db: &mut [T]) -> Vec<T> {
        let (fi, fo) = (self.fan_in(), self.fan_out());
        T::gemm(fo, n, fi, T::ONE, dy, true, x, false, T::ONE, dw);
        for row in dy.chunks(fo) {
            for (b, &g) in db.iter_mut().zip(row) {
                *b += g;
            }
        }
        let mut dx = vec![T::ZERO; n * fi];
        T::gemm(n, fo, fi, T::ONE, dy, false, &self.weight.data, false, T::ZERO, &mut dx);
        dx
    }
}

pub(crate) fn relu_in_place<T: Scalar>(x: &mut [T]) {
    for v in x {
        if *v < T::ZERO {
            *v = T::ZERO;
        }
    }
}

/// Zeroes gradient entries where the rectified output was not positive.
pub(crate) fn relu_backward<T: Scalar>(dy: &mut [T], out: &[T]) {
    for (g, &o) in dy.iter_mut().zip(out) {
        if o <= T::ZERO {
            *g = T::ZERO;
        }
    }
}

/// 2x2 average pooling with stride 2; odd trailing rows/columns are dropped.
pub(crate) fn avg_pool2<T: Scalar>(x: &[T], planes: usize, h: usize, w: usize) -> Vec<T> {
    let (oh, ow) = (h / 2, w / 2);
    let quarter = T::from_f64(0.25);
    let mut out = vec![T::ZERO; planes * oh * ow];
    for p in 0..planes {
        let src = &x[p * h * w..(p + 1) * h * w];
        let dst = &mut out[p * oh * ow..(p + 1) * oh * ow];
        for y in 0..oh {
            for xx in 0..ow {
                let (r0, r1) = (2 * y * w, (2 * y + 1) * w);
                dst[y * ow + xx] = (src[r0 + 2 * xx] + src[r0 + 2 * xx + 1] + src[r1 + 2 * xx]
                    + src[r1 + 2 * xx + 1])
                    * quarter;
            }
        }
    }
    out
}

pub(crate) fn avg_pool2_backward<T: Scalar>(dy: &[T], planes: usize, h: usize, w: usize) -> Vec<T> {
    let (oh, ow) = (h / 2, w / 2);
    let quarter = T::from_f64(0.25);
    let mut dx = vec![T::ZERO; planes * h * w];
    for p in 0..planes {
        let src = &dy[p * oh * ow..(p + 1) * oh * ow];
        let dst = &mut dx[p * h * w..(p + 1) * h * w];
        for y in 0..oh {
            for xx in 0..ow {
                let g = src[y * ow + xx] * quarter;
                let (r0, r1) = (2 * y * w, (2 * y + 1) * w);
                dst[r0 + 2 * xx] = g;
                dst[r0 + 2 * xx + 1] = g;
                dst[r1 + 2 * xx] = g;
                dst[r1 + 2 * xx + 1] = g;
            }
        }
    }
    dx
}

/// Mean over each `hw`-sized plane.
pub(crate) fn global_avg_pool<T: Scalar>(x: &[T], planes: usize, hw: usize) -> Vec<T> {
    let inv = T::from_f64(1.0 / hw as f64);
    (0..planes)
        .map(|p| x[p * hw..(p + 1) * hw].iter().copied().sum::<T>() * inv)
        .collect()
}

pub(crate) fn global_avg_pool_backward<T: Scalar>(dy: &[T], hw: usize) -> Vec<T> {
    let inv = T::from_f64(1.0 / hw as f64);
    dy.iter()
        .flat_map(|&g| std::iter::repeat_n(g * inv, hw))
        .collect()
}
