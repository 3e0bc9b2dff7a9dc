//! Digital Butterworth low-pass as a cascade of second-order sections,
//! applied forward and backward for zero phase.

use std::f64::consts::PI;

use nalgebra::Complex;

use super::MetricsError;

/// One biquad in transposed direct form II, `a0` normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Complex response at normalised angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex<f64> {
        let z1 = Complex::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b[0] + z1 * self.b[1] + z2 * self.b[2]) / (self.a[0] + z1 * self.a[1] + z2 * self.a[2])
    }

    /// State that holds the output at steady state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * g;
        let z1 = self.b[1] - self.a[1] * g + z2;
        [z1, z2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    pub order: usize,
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
    pub sections: Vec<Biquad>,
}

impl Butterworth {
    /// Bilinear-transform design with the cutoff pre-warped, so the
    /// response is exactly -3 dB at `cutoff_hz`. Each section has unit DC
    /// gain.
    pub fn lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self, MetricsError> {
        if order == 0 || !(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate_hz) {
            return Err(MetricsError::InvalidFilter {
                order,
                cutoff_hz,
                sample_rate_hz,
            });
        }
        let fs2 = 2.0 * sample_rate_hz;
        let warped = fs2 * (PI * cutoff_hz / sample_rate_hz).tan();
        let n = order as f64;
        let digital_pole = |k: usize| {
            let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
            let s = Complex::from_polar(warped, theta);
            (fs2 + s) / (fs2 - s)
        };
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for k in 0..order / 2 {
            let z = digital_pole(k);
            let a = [1.0, -2.0 * z.re, z.norm_sqr()];
            let g = a.iter().sum::<f64>() / 4.0;
            sections.push(Biquad {
                b: [g, 2.0 * g, g],
                a,
            });
        }
        if order % 2 == 1 {
            // The real pole sits at k = (order - 1) / 2.
            let z = digital_pole(order / 2).re;
            let g = (1.0 - z) / 2.0;
            sections.push(Biquad {
                b: [g, g, 0.0],
                a: [1.0, -z, 0.0],
            });
        }
        Ok(Self {
            order,
            cutoff_hz,
            sample_rate_hz,
            sections,
        })
    }

    /// Magnitude of the single-pass response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        self.sections.iter().map(|s| s.response(w)).product::<Complex<f64>>().norm()
    }

    /// Odd-extension padding length used by [`Self::filtfilt`].
    pub fn pad_len(&self) -> usize {
        let trailing_zero = self.sections.iter().filter(|s| s.b[2] == 0.0 && s.a[2] == 0.0).count();
        3 * (2 * self.sections.len() + 1 - trailing_zero)
    }

    /// Minimum number of samples accepted by [`Self::filtfilt`].
    pub fn min_len(&self) -> usize {
        3 * self.order + 1
    }

    /// Causal pass, starting from the steady state for `x0`.
    fn filter_from(&self, x: &mut [f64], x0: f64) {
        let mut state: Vec<[f64; 2]> = Vec::with_capacity(self.sections.len());
        let mut level = x0;
        for s in &self.sections {
            let zi = s.step_state();
            state.push([zi[0] * level, zi[1] * level]);
            level *= s.dc_gain();
        }
        for v in x.iter_mut() {
            let mut u = *v;
            for (s, z) in self.sections.iter().zip(state.iter_mut()) {
                let y = s.b[0] * u + z[0];
                z[0] = s.b[1] * u - s.a[1] * y + z[1];
                z[1] = s.b[2] * u - s.a[2] * y;
                u = y;
            }
            *v = u;
        }
    }

    /// Forward-backward filtering with odd reflection at both ends.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>, MetricsError> {
        let n = x.len();
        if n < self.min_len() {
            return Err(MetricsError::SeriesTooShort {
                len: n,
                min: self.min_len(),
            });
        }
        let pad = self.pad_len().min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let x0 = ext[0];
        self.filter_from(&mut ext, x0);
        ext.reverse();
        let y0 = ext[0];
        self.filter_from(&mut ext, y0);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}
