//! Sine-cosine wavelets and Block-Pulse functions on [0, 1).
//!
//! Wavelets are laid out n-major, m-minor: the wavelet `(n, m)` lives at flat
//! index `n * (2M + 1) + m`. Support blocks are half-open,
//! `[n / 2^k, (n + 1) / 2^k)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::Array1;

use crate::error::{domain, Result};

/// Temporal discretization: dilation level `k`, harmonic count `m`, and
/// `n_t = 2^k (2M + 1)` basis functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WaveletGrid {
    k: u32,
    m: usize,
    n_t: usize,
}

impl WaveletGrid {
    pub fn new(k: u32, m: usize) -> Result<Self> {
        if k > 20 {
            return domain(format!("dilation level k = {k} is unreasonably large"));
        }
        Ok(Self {
            k,
            m,
            n_t: (1usize << k) * (2 * m + 1),
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Harmonic count M.
    pub fn harmonics(&self) -> usize {
        self.m
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// Number of support blocks, 2^k.
    pub fn blocks(&self) -> usize {
        1 << self.k
    }

    /// Wavelets per support block, 2M + 1.
    pub fn block_len(&self) -> usize {
        2 * self.m + 1
    }

    pub fn flat_index(&self, n: usize, m: usize) -> usize {
        debug_assert!(n < self.blocks() && m < self.block_len());
        n * self.block_len() + m
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn split_index(&self, idx: usize) -> (usize, usize) {
        (idx / self.block_len(), idx % self.block_len())
    }

    /// Support block containing `t`, for `t` in [0, 1).
    pub fn block_of(&self, t: f64) -> usize {
        (((t * self.blocks() as f64).floor()) as usize).min(self.blocks() - 1)
    }

    /// Block-Pulse midpoints `(2i + 1) / (2 N_t)`, `i = 0..N_t`.
    pub fn midpoints(&self) -> Vec<f64> {
        let two_n = 2.0 * self.n_t as f64;
        (0..self.n_t).map(|i| (2 * i + 1) as f64 / two_n).collect()
    }

    fn amplitude(&self) -> f64 {
        2f64.powf((self.k as f64 + 1.0) / 2.0)
    }
}

/// Profile `scw_m(t)` for `m` in `0..=2M`.
pub fn eval_scw(m: usize, harmonics: usize, t: f64) -> Result<f64> {
    if m > 2 * harmonics {
        return domain(format!("scw index m = {m} outside [0, {}]", 2 * harmonics));
    }
    Ok(scw_unchecked(m, harmonics, t))
}

#[inline]
fn scw_unchecked(m: usize, harmonics: usize, t: f64) -> f64 {
    if m == 0 {
        FRAC_1_SQRT_2
    } else if m <= harmonics {
        (2.0 * m as f64 * PI * t).cos()
    } else {
        (2.0 * (m - harmonics) as f64 * PI * t).sin()
    }
}

fn check_unit_interval(t: f64) -> Result<()> {
    if (0.0..1.0).contains(&t) {
        Ok(())
    } else {
        domain(format!("t = {t} outside [0, 1)"))
    }
}

/// ψ_{n,m}(t).
pub fn eval_wavelet(n: usize, m: usize, grid: &WaveletGrid, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    if n >= grid.blocks() {
        return domain(format!("wavelet block n = {n} outside [0, {})", grid.blocks()));
    }
    if m >= grid.block_len() {
        return domain(format!("wavelet index m = {m} outside [0, {})", grid.block_len()));
    }
    if grid.block_of(t) != n {
        return Ok(0.0);
    }
    let local = grid.blocks() as f64 * t - n as f64;
    Ok(grid.amplitude() * scw_unchecked(m, grid.harmonics(), local))
}

/// Ψ(t): all N_t wavelets at `t`. Only the 2M + 1 entries of the block
/// containing `t` can be nonzero.
pub fn eval_wavelet_vector(grid: &WaveletGrid, t: f64) -> Result<Array1<f64>> {
    check_unit_interval(t)?;
    let mut out = Array1::zeros(grid.n_t());
    let n = grid.block_of(t);
    let local = grid.blocks() as f64 * t - n as f64;
    let amp = grid.amplitude();
    for m in 0..grid.block_len() {
        out[grid.flat_index(n, m)] = amp * scw_unchecked(m, grid.harmonics(), local);
    }
    Ok(out)
}

/// Block-Pulse function b_i(t): 1 on `[i / N_t, (i + 1) / N_t)`.
pub fn block_pulse_eval(i: usize, n_t: usize, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    if i >= n_t {
        return domain(format!("block-pulse index {i} outside [0, {n_t})"));
    }
    let lo = i as f64 / n_t as f64;
    let hi = (i + 1) as f64 / n_t as f64;
    Ok(if lo <= t && t < hi { 1.0 } else { 0.0 })
}
