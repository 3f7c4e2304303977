//! Lattice convolutions with the dyadic kernels via zero-padded 3-D FFTs.
//!
//! For sources on a regular lattice the sums `Σ_{p≠q} K(x_q − x_p)·u_p` and
//! `Σ_{p≠q} ∇g(x_q − x_p) × u_p` are discrete convolutions; embedding the
//! lattice of `n` cells per axis into a periodic one of `2n` cells makes them
//! circular, and the FFT evaluates them in `O(P log P)`.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::green::radial;
use crate::linalg::{CVec3, C64};

/// In-place 3-D FFT on a row-major `dims[0] × dims[1] × dims[2]` array.
pub(crate) struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            dims,
            forward: dims.map(|n| planner.plan_fft_forward(n)),
            inverse: dims.map(|n| planner.plan_fft_inverse(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform including the `1/len` normalization.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(data, &self.inverse);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn run(&self, data: &mut [C64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [n0, n1, n2] = self.dims;
        // Last axis is contiguous.
        plans[2].process(data);
        let mut buf = vec![C64::new(0.0, 0.0); data.len().max(1)];
        // Middle axis: each slab of n1 × n2 is transposed to n2 × n1.
        for slab in data.chunks_exact_mut(n1 * n2) {
            transpose(slab, &mut buf[..n1 * n2], n1, n2);
            plans[1].process(&mut buf[..n1 * n2]);
            transpose(&buf[..n1 * n2], slab, n2, n1);
        }
        // First axis: the whole array as n0 × (n1·n2).
        let inner = n1 * n2;
        transpose(data, &mut buf, n0, inner);
        plans[0].process(&mut buf);
        transpose(&buf, data, inner, n0);
    }
}

fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// Fourier transforms of the interaction kernel (6 symmetric components)
/// and of the gradient kernel (3 components) on the padded lattice.
pub(crate) struct LatticeKernels {
    pub fft: Fft3,
    /// Padded size per axis.
    pub m: [usize; 3],
    /// xx, yy, zz, xy, xz, yz.
    kernel: [Vec<C64>; 6],
    grad: [Vec<C64>; 3],
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn pair_index(a: usize, b: usize) -> usize {
    match (a.min(b), a.max(b)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        _ => 5,
    }
}

impl LatticeKernels {
    pub fn new(n: [usize; 3], spacing: f64, k: f64) -> Self {
        let m = n.map(|ni| 2 * ni);
        let fft = Fft3::new(m);
        let len = fft.len();
        let zero = C64::new(0.0, 0.0);
        let mut kernel: [Vec<C64>; 6] = std::array::from_fn(|_| vec![zero; len]);
        let mut grad: [Vec<C64>; 3] = std::array::from_fn(|_| vec![zero; len]);
        // Signed lattice offset for a padded index; the wrap row n is unused.
        let offset = |i: usize, ni: usize, mi: usize| -> Option<i64> {
            if i < ni {
                Some(i as i64)
            } else if i > ni {
                Some(i as i64 - mi as i64)
            } else {
                None
            }
        };
        for i in 0..m[0] {
            let Some(oi) = offset(i, n[0], m[0]) else { continue };
            for j in 0..m[1] {
                let Some(oj) = offset(j, n[1], m[1]) else { continue };
                for l in 0..m[2] {
                    let Some(ol) = offset(l, n[2], m[2]) else { continue };
                    if oi == 0 && oj == 0 && ol == 0 {
                        continue;
                    }
                    let d = [oi as f64 * spacing, oj as f64 * spacing, ol as f64 * spacing];
                    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    let rad = radial(r, k);
                    let tang = rad.dg / r;
                    let radial_coef = (rad.d2g - tang) / (r * r);
                    let idx = (i * m[1] + j) * m[2] + l;
                    for (c, &(a, b)) in PAIRS.iter().enumerate() {
                        let mut v = radial_coef * (d[a] * d[b]);
                        if a == b {
                            v += rad.g * (k * k) + tang;
                        }
                        kernel[c][idx] = v;
                    }
                    for a in 0..3 {
                        grad[a][idx] = tang * d[a];
                    }
                }
            }
        }
        for arr in kernel.iter_mut().chain(grad.iter_mut()) {
            fft.forward(arr);
        }
        LatticeKernels { fft, m, kernel, grad }
    }

    fn scatter(&self, cells: &[[usize; 3]], u: &[CVec3]) -> [Vec<C64>; 3] {
        let len = self.fft.len();
        let mut out: [Vec<C64>; 3] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); len]);
        for (c, v) in cells.iter().zip(u) {
            let idx = (c[0] * self.m[1] + c[1]) * self.m[2] + c[2];
            for a in 0..3 {
                out[a][idx] = v[a];
            }
        }
        for arr in out.iter_mut() {
            self.fft.forward(arr);
        }
        out
    }

    fn gather(&self, cells: &[[usize; 3]], mut fields: [Vec<C64>; 3]) -> Vec<CVec3> {
        for arr in fields.iter_mut() {
            self.fft.inverse(arr);
        }
        cells
            .iter()
            .map(|c| {
                let idx = (c[0] * self.m[1] + c[1]) * self.m[2] + c[2];
                CVec3([fields[0][idx], fields[1][idx], fields[2][idx]])
            })
            .collect()
    }

    /// `Σ_{p≠q} K(x_q − x_p)·u_p` at every listed cell.
    pub fn apply_kernel(&self, cells: &[[usize; 3]], u: &[CVec3]) -> Vec<CVec3> {
        let src = self.scatter(cells, u);
        let len = self.fft.len();
        let out: [Vec<C64>; 3] = std::array::from_fn(|a| {
            (0..len)
                .map(|i| (0..3).map(|b| self.kernel[pair_index(a, b)][i] * src[b][i]).sum())
                .collect()
        });
        self.gather(cells, out)
    }

    /// `Σ_{p≠q} ∇g(x_q − x_p) × u_p` at every listed cell.
    pub fn apply_grad_cross(&self, cells: &[[usize; 3]], u: &[CVec3]) -> Vec<CVec3> {
        let src = self.scatter(cells, u);
        let len = self.fft.len();
        let g = &self.grad;
        let out: [Vec<C64>; 3] = std::array::from_fn(|a| {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            (0..len).map(|i| g[b][i] * src[c][i] - g[c][i] * src[b][i]).collect()
        });
        self.gather(cells, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{apply_grad_cross, apply_kernel};
    use crate::linalg::Vec3;

    #[test]
    fn fft_roundtrip_and_impulse() {
        let f = Fft3::new([4, 6, 5]);
        let orig: Vec<C64> = (0..f.len()).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        f.inverse(&mut d);
        assert!(orig.iter().zip(&d).all(|(a, b)| (a - b).norm() < 1e-13));
        let mut imp = vec![C64::new(0.0, 0.0); f.len()];
        imp[0] = C64::new(1.0, 0.0);
        f.forward(&mut imp);
        assert!(imp.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn convolutions_match_pairwise_sums() {
        let n = [3, 4, 2];
        let h = 0.2;
        let k = 3.0;
        let lk = LatticeKernels::new(n, h, k);
        let mut cells = Vec::new();
        for i in 0..n[0] {
            for j in 0..n[1] {
                for l in 0..n[2] {
                    cells.push([i, j, l]);
                }
            }
        }
        let u: Vec<CVec3> = (0..cells.len())
            .map(|i| CVec3([0.3, 1.1, 2.3].map(|s: f64| C64::new((s * i as f64).cos(), (s + i as f64).sin()))))
            .collect();
        let fast_k = lk.apply_kernel(&cells, &u);
        let fast_g = lk.apply_grad_cross(&cells, &u);
        let pos = |c: &[usize; 3]| Vec3(c.map(|v| v as f64 * h));
        for (q, cq) in cells.iter().enumerate() {
            let mut sk = CVec3::ZERO;
            let mut sg = CVec3::ZERO;
            for (p, cp) in cells.iter().enumerate() {
                if p == q {
                    continue;
                }
                let d = pos(cq) - pos(cp);
                sk += apply_kernel(&d, d.norm(), k, &u[p]);
                sg += apply_grad_cross(&d, d.norm(), k, &u[p]);
            }
            assert!((sk - fast_k[q]).norm() < 1e-11 * sk.norm().max(1.0));
            assert!((sg - fast_g[q]).norm() < 1e-11 * sg.norm().max(1.0));
        }
    }
}
