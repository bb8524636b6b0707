//! Butterworth band-pass design and zero-phase (forward-backward) filtering.
//!
//! The design chain is the classical analog-prototype route: Butterworth
//! low-pass poles, band transform, bilinear discretization with frequency
//! pre-warping, then expansion to transfer-function coefficients. The
//! coefficients agree with `scipy.signal.butter(order, [low, high],
//! "bandpass", fs=rate)` to within floating-point round-off.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A discretized band-pass filter ready for [`filtfilt`].
#[derive(Debug, Clone)]
pub struct FilterSpec {
    feedforward: Vec<f64>,
    feedback: Vec<f64>,
    order: usize,
    low_hz: f64,
    high_hz: f64,
    sample_rate_hz: f64,
}

impl FilterSpec {
    /// Numerator (b) coefficients.
    pub fn feedforward(&self) -> &[f64] {
        &self.feedforward
    }

    /// Denominator (a) coefficients, `a[0] == 1`.
    pub fn feedback(&self) -> &[f64] {
        &self.feedback
    }

    /// Prototype order; the band-pass filter itself has `2 * order` poles.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn band_hz(&self) -> (f64, f64) {
        (self.low_hz, self.high_hz)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Single-pass frequency response at `freq_hz`. A forward-backward run
    /// applies the squared magnitude of this and no phase.
    pub fn response_at(&self, freq_hz: f64) -> Complex64 {
        let omega = std::f64::consts::TAU * freq_hz / self.sample_rate_hz;
        let zinv = Complex64::from_polar(1.0, -omega);
        let eval = |coeffs: &[f64]| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &c in coeffs.iter().rev() {
                acc = acc * zinv + c;
            }
            acc
        };
        eval(&self.feedforward) / eval(&self.feedback)
    }
}

/// Designs a Butterworth band-pass filter for signals sampled at
/// `sample_rate_hz`, with half-power points at `low_hz` and `high_hz`.
pub fn design_bandpass(
    low_hz: f64,
    high_hz: f64,
    sample_rate_hz: f64,
    order: usize,
) -> Result<FilterSpec> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Config(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )));
    }
    let nyquist = sample_rate_hz / 2.0;
    if !(low_hz.is_finite() && high_hz.is_finite() && 0.0 < low_hz && low_hz < high_hz) {
        return Err(Error::Config(format!(
            "band edges must satisfy 0 < low < high, got ({low_hz}, {high_hz})"
        )));
    }
    if high_hz >= nyquist {
        return Err(Error::Config(format!(
            "upper band edge {high_hz} must be below the Nyquist frequency {nyquist}"
        )));
    }
    if order == 0 {
        return Err(Error::Config("filter order must be at least 1".into()));
    }

    // Analog low-pass prototype poles on the unit circle's left half.
    let n = order;
    let prototype: Vec<Complex64> = (1..=n)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + n - 1) as f64 / (2 * n) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect();

    // Pre-warp the band edges so the bilinear map lands them exactly on the
    // requested digital frequencies (internal rate convention: fs = 2).
    let warp = |f: f64| 4.0 * (std::f64::consts::PI * f / sample_rate_hz).tan();
    let w1 = warp(low_hz);
    let w2 = warp(high_hz);
    let bw = w2 - w1;
    let wo = (w1 * w2).sqrt();

    // Low-pass to band-pass: each prototype pole splits into two.
    let mut s_poles = Vec::with_capacity(2 * n);
    for &p in &prototype {
        let ps = p * (bw / 2.0);
        let root = (ps * ps - wo * wo).sqrt();
        s_poles.push(ps + root);
        s_poles.push(ps - root);
    }
    // The transform puts `order` zeros at s = 0; gain scales by bw^order.
    let s_zeros = vec![Complex64::new(0.0, 0.0); n];
    let gain_s = bw.powi(n as i32);

    // Bilinear transform, z = (4 + s) / (4 - s) for the fs = 2 convention.
    let fs2 = Complex64::new(4.0, 0.0);
    let z_poles: Vec<Complex64> = s_poles.iter().map(|&s| (fs2 + s) / (fs2 - s)).collect();
    let mut z_zeros: Vec<Complex64> = s_zeros.iter().map(|&s| (fs2 + s) / (fs2 - s)).collect();
    z_zeros.resize(2 * n, Complex64::new(-1.0, 0.0));

    if let Some(p) = z_poles.iter().find(|p| p.norm() >= 1.0) {
        return Err(Error::Config(format!(
            "filter design is unstable for band ({low_hz}, {high_hz}) Hz at order {order} \
             (pole radius {:.6})",
            p.norm()
        )));
    }

    let num: Complex64 = s_zeros.iter().map(|&z| fs2 - z).product();
    let den: Complex64 = s_poles.iter().map(|&p| fs2 - p).product();
    let gain_z = gain_s * (num / den).re;

    let feedforward: Vec<f64> = poly(&z_zeros).iter().map(|c| c.re * gain_z).collect();
    let feedback: Vec<f64> = poly(&z_poles).iter().map(|c| c.re).collect();

    Ok(FilterSpec {
        feedforward,
        feedback,
        order,
        low_hz,
        high_hz,
        sample_rate_hz,
    })
}

/// Expands `prod_k (x - roots[k])` into monomial coefficients, highest
/// degree first.
fn poly(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        coeffs.push(Complex64::new(0.0, 0.0));
        for i in (1..coeffs.len()).rev() {
            let lower = coeffs[i - 1];
            coeffs[i] -= r * lower;
        }
    }
    coeffs
}

/// Initial filter state that makes the step response start in steady state.
/// Scaled by the first input sample before use.
fn steady_state_init(b: &[f64], a: &[f64]) -> Vec<f64> {
    let m = b.len().max(a.len()) - 1;
    let pad = |c: &[f64]| {
        let mut v = c.to_vec();
        v.resize(m + 1, 0.0);
        v
    };
    let b = pad(b);
    let a = pad(a);

    // Solve (I - C^T) zi = b[1..] - a[1..] * b[0], C the companion matrix
    // of the denominator.
    let mut mat = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for r in 0..m {
        mat[r][0] = if r == 0 { 1.0 } else { 0.0 } + a[r + 1];
        for c in 1..m {
            let mut v = 0.0;
            if r == c {
                v += 1.0;
            }
            if r == c - 1 {
                v -= 1.0;
            }
            mat[r][c] = v;
        }
        rhs[r] = b[r + 1] - a[r + 1] * b[0];
    }
    solve_dense(&mut mat, &mut rhs);
    rhs
}

/// In-place Gaussian elimination with partial pivoting; solution lands in
/// `rhs`. Sized for the tiny systems the filter state needs.
fn solve_dense(mat: &mut [Vec<f64>], rhs: &mut [f64]) {
    let m = rhs.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| mat[i][col].abs().total_cmp(&mat[j][col].abs()))
            .unwrap();
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        let diag = mat[col][col];
        for row in col + 1..m {
            let factor = mat[row][col] / diag;
            if factor != 0.0 {
                for c in col..m {
                    let upper = mat[col][c];
                    mat[row][c] -= factor * upper;
                }
                rhs[row] -= factor * rhs[col];
            }
        }
    }
    for col in (0..m).rev() {
        let mut acc = rhs[col];
        for c in col + 1..m {
            acc -= mat[col][c] * rhs[c];
        }
        rhs[col] = acc / mat[col][col];
    }
}

/// Direct-form II transposed recursion with explicit initial state.
fn lfilter(b: &[f64], a: &[f64], x: &[f64], state: &mut [f64]) -> Vec<f64> {
    let m = state.len();
    let mut y = Vec::with_capacity(x.len());
    for &xi in x {
        let yi = b[0] * xi + state[0];
        for j in 0..m {
            let next = if j + 1 < m { state[j + 1] } else { 0.0 };
            state[j] = b[j + 1] * xi + next - a[j + 1] * yi;
        }
        y.push(yi);
    }
    y
}

/// Zero-phase filtering: forward pass, backward pass, both primed with
/// steady-state initial conditions over odd-reflected edge padding of
/// `3 * order` samples. The result has no phase distortion and the squared
/// magnitude response of the single-pass filter.
pub fn filtfilt(x: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    let b = &spec.feedforward;
    let a = &spec.feedback;
    let pad = 3 * spec.order;
    if x.len() <= pad {
        return Err(Error::Validation(format!(
            "input of {} samples is too short to filter; need more than {pad}",
            x.len()
        )));
    }

    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in 0..pad {
        ext.push(2.0 * x[0] - x[pad - i]);
    }
    ext.extend_from_slice(x);
    for i in 0..pad {
        ext.push(2.0 * x[n - 1] - x[n - 2 - i]);
    }

    let zi = steady_state_init(b, a);
    let scale_state = |z: &[f64], x0: f64| -> Vec<f64> { z.iter().map(|v| v * x0).collect() };

    let mut state = scale_state(&zi, ext[0]);
    let mut forward = lfilter(b, a, &ext, &mut state);

    forward.reverse();
    let mut state = scale_state(&zi, forward[0]);
    let mut backward = lfilter(b, a, &forward, &mut state);
    backward.reverse();

    Ok(backward[pad..pad + n].to_vec())
}
