//! Small signal-processing toolkit: radix-2 FFT, windows, resampling.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * math::cos(2.0 * core::f64::consts::PI * i as f64 / n as f64))
        .collect()
}

/// In-place iterative radix-2 FFT. `re.len()` must be a power of two and
/// equal to `im.len()`.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    assert_eq!(n, im.len());
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    if n < 2 {
        return;
    }

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let angle = -2.0 * core::f64::consts::PI / len as f64;
        let half = len / 2;
        // Twiddles computed directly per index rather than by recurrence to
        // keep rounding error flat across large transforms.
        let twiddles: Vec<(f64, f64)> = (0..half)
            .map(|k| {
                let a = angle * k as f64;
                (math::cos(a), math::sin(a))
            })
            .collect();
        for start in (0..n).step_by(len) {
            for (k, &(wr, wi)) in twiddles.iter().enumerate() {
                let a = start + k;
                let b = a + half;
                let tr = re[b] * wr - im[b] * wi;
                let ti = re[b] * wi + im[b] * wr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
        len <<= 1;
    }
}

/// Power spectrum `|X[k]|^2` for `k = 0..=n/2` of a real frame. The frame is
/// zero-padded to `n_fft`.
pub fn power_spectrum(frame: &[f64], n_fft: usize) -> Vec<f64> {
    let mut re = vec![0.0; n_fft];
    let mut im = vec![0.0; n_fft];
    let take = frame.len().min(n_fft);
    re[..take].copy_from_slice(&frame[..take]);
    fft_in_place(&mut re, &mut im);
    (0..=n_fft / 2)
        .map(|k| re[k] * re[k] + im[k] * im[k])
        .collect()
}

/// Resamples by reading the input at positions `i * step` with linear
/// interpolation; positions past the end hold the last sample.
pub fn resample_linear(input: &[f64], step: f64, out_len: usize) -> Vec<f64> {
    if input.is_empty() {
        return vec![0.0; out_len];
    }
    let last = input.len() - 1;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let i0 = math::floor(pos) as usize;
            if i0 >= last {
                return input[last];
            }
            let frac = pos - i0 as f64;
            input[i0] * (1.0 - frac) + input[i0 + 1] * frac
        })
        .collect()
}
