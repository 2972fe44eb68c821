//! Raw forward/backward arithmetic for the layer primitives.
//!
//! Everything here works on flat slices; shape validation happens in
//! [`super::graph`] before these are called.

/// Convolution geometry for an input `[T, E, Cin]` and kernel `[kT, kE, Cin, Cout]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub t_in: usize,
    pub e_in: usize,
    pub c_in: usize,
    pub kt: usize,
    pub ke: usize,
    pub c_out: usize,
    pub pad_left: usize,
    pub pad_right: usize,
    pub t_out: usize,
    pub e_out: usize,
}

impl ConvGeom {
    fn t_padded(&self) -> usize {
        self.t_in + self.pad_left + self.pad_right
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `[T, E, C]` row-major → `[E, C, T + pads]` planar with zero padding in time.
fn to_planar(input: &[f64], t: usize, e: usize, c: usize, pl: usize, pr: usize) -> Vec<f64> {
    let tp = t + pl + pr;
    let mut out = vec![0.0; e * c * tp];
    for ti in 0..t {
        let row = &input[ti * e * c..(ti + 1) * e * c];
        for (ec, &v) in row.iter().enumerate() {
            out[ec * tp + pl + ti] = v;
        }
    }
    out
}

/// Kernel `[kT, kE, Cin, Cout]` → `[Cout, kE, Cin, kT]`.
fn kernel_to_planar(kernel: &[f64], g: &ConvGeom) -> Vec<f64> {
    let mut out = vec![0.0; kernel.len()];
    for dt in 0..g.kt {
        for de in 0..g.ke {
            for ci in 0..g.c_in {
                for co in 0..g.c_out {
                    let src = ((dt * g.ke + de) * g.c_in + ci) * g.c_out + co;
                    let dst = ((co * g.ke + de) * g.c_in + ci) * g.kt + dt;
                    out[dst] = kernel[src];
                }
            }
        }
    }
    out
}

pub(crate) fn conv2d_forward(input: &[f64], kernel: &[f64], bias: &[f64], g: &ConvGeom) -> Vec<f64> {
    let tp = g.t_padded();
    let planar = to_planar(input, g.t_in, g.e_in, g.c_in, g.pad_left, g.pad_right);
    let kp = kernel_to_planar(kernel, g);
    let mut out_planar = vec![0.0; g.e_out * g.c_out * g.t_out];
    for e in 0..g.e_out {
        for co in 0..g.c_out {
            let orow = &mut out_planar[(e * g.c_out + co) * g.t_out..][..g.t_out];
            orow.fill(bias[co]);
            for de in 0..g.ke {
                for ci in 0..g.c_in {
                    let prow = &planar[((e + de) * g.c_in + ci) * tp..][..tp];
                    let krow = &kp[((co * g.ke + de) * g.c_in + ci) * g.kt..][..g.kt];
                    for (dt, &w) in krow.iter().enumerate() {
                        axpy(orow, w, &prow[dt..dt + g.t_out]);
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; g.t_out * g.e_out * g.c_out];
    for e in 0..g.e_out {
        for co in 0..g.c_out {
            let orow = &out_planar[(e * g.c_out + co) * g.t_out..][..g.t_out];
            for (t, &v) in orow.iter().enumerate() {
                out[(t * g.e_out + e) * g.c_out + co] = v;
            }
        }
    }
    out
}

pub(crate) struct ConvGrads {
    pub input: Vec<f64>,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

pub(crate) fn conv2d_backward(
    input: &[f64],
    kernel: &[f64],
    grad_out: &[f64],
    g: &ConvGeom,
) -> ConvGrads {
    let tp = g.t_padded();
    let planar = to_planar(input, g.t_in, g.e_in, g.c_in, g.pad_left, g.pad_right);
    let kp = kernel_to_planar(kernel, g);
    // grad_out [T', E', Cout] -> planar [E', Cout, T'] (no padding)
    let gp = to_planar(grad_out, g.t_out, g.e_out, g.c_out, 0, 0);

    let mut grad_bias = vec![0.0; g.c_out];
    let mut grad_kp = vec![0.0; kp.len()];
    let mut grad_planar = vec![0.0; planar.len()];
    for e in 0..g.e_out {
        for co in 0..g.c_out {
            let grow = &gp[(e * g.c_out + co) * g.t_out..][..g.t_out];
            grad_bias[co] += grow.iter().sum::<f64>();
            for de in 0..g.ke {
                for ci in 0..g.c_in {
                    let prow_start = ((e + de) * g.c_in + ci) * tp;
                    let kidx = ((co * g.ke + de) * g.c_in + ci) * g.kt;
                    for dt in 0..g.kt {
                        let prow = &planar[prow_start + dt..][..g.t_out];
                        grad_kp[kidx + dt] += dot(grow, prow);
                        let w = kp[kidx + dt];
                        axpy(&mut grad_planar[prow_start + dt..][..g.t_out], w, grow);
                    }
                }
            }
        }
    }

    let mut grad_kernel = vec![0.0; kernel.len()];
    for dt in 0..g.kt {
        for de in 0..g.ke {
            for ci in 0..g.c_in {
                for co in 0..g.c_out {
                    let dst = ((dt * g.ke + de) * g.c_in + ci) * g.c_out + co;
                    let src = ((co * g.ke + de) * g.c_in + ci) * g.kt + dt;
                    grad_kernel[dst] = grad_kp[src];
                }
            }
        }
    }
    let mut grad_input = vec![0.0; input.len()];
    for t in 0..g.t_in {
        for e in 0..g.e_in {
            for ci in 0..g.c_in {
                grad_input[(t * g.e_in + e) * g.c_in + ci] =
                    grad_planar[(e * g.c_in + ci) * tp + g.pad_left + t];
            }
        }
    }
    ConvGrads {
        input: grad_input,
        kernel: grad_kernel,
        bias: grad_bias,
    }
}

/// Max pooling along the leading (time) axis of `[T, E, C]`.
/// Returns pooled values and, for each output, the flat index of the winning input.
pub(crate) fn maxpool_time_forward(
    input: &[f64],
    t_in: usize,
    inner: usize,
    window: usize,
    stride: usize,
) -> (Vec<f64>, Vec<usize>) {
    let t_out = (t_in - window) / stride + 1;
    let mut out = vec![f64::NEG_INFINITY; t_out * inner];
    let mut argmax = vec![0usize; t_out * inner];
    for to in 0..t_out {
        let start = to * stride;
        for w in 0..window {
            let base = (start + w) * inner;
            for j in 0..inner {
                let v = input[base + j];
                // strict > keeps the earliest index on ties
                if v > out[to * inner + j] {
                    out[to * inner + j] = v;
                    argmax[to * inner + j] = base + j;
                }
            }
        }
    }
    (out, argmax)
}

pub(crate) fn dense_forward(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let m = b.len();
    let mut y = b.to_vec();
    for (d, &xd) in x.iter().enumerate() {
        axpy(&mut y, xd, &w[d * m..(d + 1) * m]);
    }
    y
}

pub(crate) fn dense_backward(x: &[f64], w: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = g.len();
    let gx = (0..x.len()).map(|d| dot(&w[d * m..(d + 1) * m], g)).collect();
    let mut gw = vec![0.0; w.len()];
    for (d, &xd) in x.iter().enumerate() {
        axpy(&mut gw[d * m..(d + 1) * m], xd, g);
    }
    (gx, gw)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|v| v / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct seven-loop convolution used as the reference.
    fn conv_naive(input: &[f64], kernel: &[f64], bias: &[f64], g: &ConvGeom) -> Vec<f64> {
        let mut out = vec![0.0; g.t_out * g.e_out * g.c_out];
        for t in 0..g.t_out {
            for e in 0..g.e_out {
                for co in 0..g.c_out {
                    let mut acc = bias[co];
                    for dt in 0..g.kt {
                        let ti = t as isize + dt as isize - g.pad_left as isize;
                        if ti < 0 || ti >= g.t_in as isize {
                            continue;
                        }
                        for de in 0..g.ke {
                            for ci in 0..g.c_in {
                                acc += input[(ti as usize * g.e_in + e + de) * g.c_in + ci]
                                    * kernel[((dt * g.ke + de) * g.c_in + ci) * g.c_out + co];
                            }
                        }
                    }
                    out[(t * g.e_out + e) * g.c_out + co] = acc;
                }
            }
        }
        out
    }

    fn ramp(n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) * scale).collect()
    }

    #[test]
    fn planar_conv_matches_naive() {
        let g = ConvGeom {
            t_in: 13,
            e_in: 3,
            c_in: 2,
            kt: 4,
            ke: 2,
            c_out: 3,
            pad_left: 1,
            pad_right: 2,
            t_out: 13,
            e_out: 2,
        };
        let input = ramp(13 * 3 * 2, 0.1);
        let kernel = ramp(4 * 2 * 2 * 3, 0.07);
        let bias = vec![0.5, -0.25, 0.0];
        let fast = conv2d_forward(&input, &kernel, &bias, &g);
        let slow = conv_naive(&input, &kernel, &bias, &g);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn maxpool_keeps_first_on_ties() {
        let (out, arg) = maxpool_time_forward(&[1.0, 1.0, 0.0, 2.0], 4, 1, 2, 2);
        assert_eq!(out, vec![1.0, 2.0]);
        assert_eq!(arg, vec![0, 3]);
    }

    #[test]
    fn softmax_is_shift_stable() {
        let s = softmax(&[1000.0, 1000.0]);
        assert_eq!(s, vec![0.5, 0.5]);
    }
}
