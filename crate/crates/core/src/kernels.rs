//! Fixed kernel bank and the dilated cross-correlation primitives.

use crate::error::{Error, Result};

pub const KERNEL_LENGTH: usize = 9;
pub const N_KERNELS: usize = 84;
/// Dilations are `2^e` for `e` in `0..N_DILATIONS`.
pub const N_DILATIONS: usize = 6;

pub type Kernel = [f64; KERNEL_LENGTH];

/// The 84 length-9 kernels with three taps of +2 and six of -1, and the
/// dilation set `{1, 2, 4, 8, 16, 32}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    weights: Vec<Kernel>,
    dilations: [usize; N_DILATIONS],
}

impl KernelBank {
    /// Kernel `k` puts weight 2 on the `k`-th 3-combination of tap positions
    /// in lexicographic order, -1 elsewhere.
    pub fn generate() -> Self {
        let mut weights = Vec::with_capacity(N_KERNELS);
        for a in 0..KERNEL_LENGTH {
            for b in a + 1..KERNEL_LENGTH {
                for c in b + 1..KERNEL_LENGTH {
                    let mut w = [-1.0; KERNEL_LENGTH];
                    w[a] = 2.0;
                    w[b] = 2.0;
                    w[c] = 2.0;
                    weights.push(w);
                }
            }
        }
        let dilations = std::array::from_fn(|e| 1usize << e);
        Self { weights, dilations }
    }

    pub fn kernel(&self, index: usize) -> &Kernel {
        &self.weights[index]
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.weights
    }

    pub fn dilation(&self, exponent: usize) -> usize {
        self.dilations[exponent]
    }

    pub fn dilations(&self) -> &[usize] {
        &self.dilations
    }
}

impl Default for KernelBank {
    fn default() -> Self {
        Self::generate()
    }
}

pub fn generate_kernel_bank() -> KernelBank {
    KernelBank::generate()
}

/// Centered, zero-padded dilated cross-correlation (no kernel flip, no bias):
/// `out[i] = sum_j w[j] * x[i + d*(j - (l-1)/2)]`, with `x` zero outside its
/// bounds. Output has the input's length.
pub fn dilated_xcorr(x: &[f64], w: &[f64], dilation: usize) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::invalid("empty series"));
    }
    if w.len().is_multiple_of(2) {
        return Err(Error::invalid(format!("kernel length {} is not odd", w.len())));
    }
    if dilation == 0 {
        return Err(Error::invalid("dilation must be >= 1"));
    }
    let mut out = vec![0.0; x.len()];
    xcorr_into(x, w, dilation, &mut out);
    Ok(out)
}

/// Unchecked core of [`dilated_xcorr`]; `out` must have `x.len()` entries.
///
/// Taps are accumulated in ascending `j` for every output position, so the
/// result is bit-identical wherever and however often it is evaluated.
pub(crate) fn xcorr_into(x: &[f64], w: &[f64], dilation: usize, out: &mut [f64]) {
    debug_assert_eq!(x.len(), out.len());
    let len = x.len() as isize;
    let half = (w.len() / 2) as isize;
    out.fill(0.0);
    for (j, &wj) in w.iter().enumerate() {
        let shift = dilation as isize * (j as isize - half);
        let lo = (-shift).clamp(0, len);
        let hi = (len - shift).clamp(0, len);
        if lo >= hi {
            continue;
        }
        let (lo, hi) = (lo as usize, hi as usize);
        let src = &x[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
        for (o, &v) in out[lo..hi].iter_mut().zip(src) {
            *o += wj * v;
        }
    }
}

/// Keep even indices, starting at 0.
pub fn downsample2(x: &[f64]) -> Vec<f64> {
    x.iter().step_by(2).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[f64], w: &[f64], d: usize) -> Vec<f64> {
        let pad = (w.len() - 1) / 2 * d;
        let mut padded = vec![0.0; pad];
        padded.extend_from_slice(x);
        padded.extend(std::iter::repeat_n(0.0, pad));
        (0..x.len())
            .map(|i| w.iter().enumerate().map(|(j, wj)| wj * padded[i + d * j]).sum())
            .collect()
    }

    #[test]
    fn bank_endpoints_and_size() {
        let bank = KernelBank::generate();
        assert_eq!(bank.kernels().len(), 84);
        assert_eq!(bank.kernel(0), &[2., 2., 2., -1., -1., -1., -1., -1., -1.]);
        assert_eq!(bank.kernel(83), &[-1., -1., -1., -1., -1., -1., 2., 2., 2.]);
        assert_eq!(bank.dilations(), &[1, 2, 4, 8, 16, 32]);
        assert_eq!(bank, KernelBank::generate());
    }

    #[test]
    fn identity_kernel() {
        let mut w = [0.0; 9];
        w[4] = 1.0;
        let x = [1., 2., 3., 4., 5.];
        assert_eq!(dilated_xcorr(&x, &w, 1).unwrap(), x.to_vec());
    }

    #[test]
    fn difference_kernel_matches_hand_oracle() {
        let mut w = [0.0; 9];
        w[3] = 1.0;
        w[5] = -1.0;
        assert_eq!(dilated_xcorr(&[1., 2., 3.], &w, 1).unwrap(), vec![-2., -2., 2.]);
        assert_eq!(
            dilated_xcorr(&[1., 2., 3., 4., 5.], &w, 2).unwrap(),
            vec![-3., -4., -4., 2., 3.]
        );
        assert_eq!(naive(&[1., 2., 3., 4., 5.], &w, 2), vec![-3., -4., -4., 2., 3.]);
    }

    #[test]
    fn dilation_larger_than_input_is_all_padding() {
        let bank = KernelBank::generate();
        let x = [1.0, 4.0, -2.0];
        let y = dilated_xcorr(&x, bank.kernel(0), 32).unwrap();
        // only the centre tap (weight -1 for kernel 0) lands inside the series
        assert_eq!(y, vec![-1.0, -4.0, 2.0]);
    }

    #[test]
    fn constant_input_maps_to_zero() {
        let bank = KernelBank::generate();
        let x = vec![3.25; 300];
        for k in bank.kernels() {
            let y = dilated_xcorr(&x, k, 1).unwrap();
            // interior positions see every tap
            assert!(y[4..296].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(dilated_xcorr(&[], &[1.0], 1).is_err());
        assert!(dilated_xcorr(&[1.0], &[1.0, 2.0], 1).is_err());
        assert!(dilated_xcorr(&[1.0], &[1.0], 0).is_err());
    }

    #[test]
    fn downsample_examples() {
        assert_eq!(downsample2(&[1., 2., 3., 4., 5.]), vec![1., 3., 5.]);
        assert_eq!(downsample2(&[7.]), vec![7.]);
        assert_eq!(downsample2(&[1., 2., 3., 4.]), vec![1., 3.]);
    }
}
