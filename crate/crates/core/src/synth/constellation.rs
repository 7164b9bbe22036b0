use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::bits::{bits_to_uint, gray_decode};
use super::SynthError;
use crate::Scalar;

/// Symbol alphabet indexed by the integer label formed from a symbol's bits
/// (most significant bit first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation<T> {
    pub points: Vec<Complex<T>>,
    pub bits_per_symbol: usize,
}

impl<T: Scalar> Constellation<T> {
    /// Bit 0 maps to +1.
    pub fn bpsk() -> Self {
        Self {
            points: vec![Complex::new(T::one(), T::zero()), Complex::new(-T::one(), T::zero())],
            bits_per_symbol: 1,
        }
    }

    /// Bits `[b0, b1]` map to `((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`.
    pub fn qpsk() -> Self {
        let h = T::FRAC_1_SQRT_2();
        let points = (0..4)
            .map(|label| {
                let re = if label & 2 == 0 { h } else { -h };
                let im = if label & 1 == 0 { h } else { -h };
                Complex::new(re, im)
            })
            .collect();
        Self {
            points,
            bits_per_symbol: 2,
        }
    }

    /// Gray-coded square QAM (16, 64, 256) or cross QAM-128, unit average energy.
    pub fn qam(order: usize) -> Result<Self, SynthError> {
        let raw = match order {
            16 | 64 | 256 => square_qam(order),
            128 => cross_qam_128(),
            _ => return Err(SynthError::UnsupportedOrder(order)),
        };
        Ok(Self::normalized(raw, order.trailing_zeros() as usize))
    }

    fn normalized(raw: Vec<(f64, f64)>, bits_per_symbol: usize) -> Self {
        let energy = raw.iter().map(|(x, y)| x * x + y * y).sum::<f64>() / raw.len() as f64;
        let k = energy.sqrt().recip();
        Self {
            points: raw
                .into_iter()
                .map(|(x, y)| Complex::new(T::lit(x * k), T::lit(y * k)))
                .collect(),
            bits_per_symbol,
        }
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn average_energy(&self) -> T {
        let mut acc = T::zero();
        for p in &self.points {
            acc += p.norm_sqr();
        }
        acc / T::from_usize_lossy(self.points.len())
    }

    /// Smallest distance between two distinct points.
    pub fn min_distance(&self) -> T {
        let mut best = T::infinity();
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((*a - *b).norm());
            }
        }
        best
    }

    /// Maps `bits` to symbols. The length must be a multiple of the bits per symbol.
    pub fn map(&self, bits: &[bool]) -> Result<Vec<Complex<T>>, SynthError> {
        let k = self.bits_per_symbol;
        if bits.len() % k != 0 {
            return Err(SynthError::BitCountNotDivisible {
                count: bits.len(),
                bits_per_symbol: k,
            });
        }
        Ok(bits.chunks(k).map(|c| self.points[bits_to_uint(c)]).collect())
    }

    /// Label of the point nearest to `z`.
    pub fn nearest(&self, z: Complex<T>) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - *p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Amplitude levels `2 i - (L - 1)` indexed by Gray code.
fn gray_level(code: usize, levels: usize) -> f64 {
    2.0 * gray_decode(code) as f64 - (levels as f64 - 1.0)
}

fn square_qam(order: usize) -> Vec<(f64, f64)> {
    let half = order.trailing_zeros() as usize / 2;
    let levels = 1 << half;
    (0..order)
        .map(|label| {
            let i = label >> half;
            let q = label & (levels - 1);
            (gray_level(i, levels), gray_level(q, levels))
        })
        .collect()
}

/// 128-point cross: a 16 x 8 Gray rectangle whose outer columns are folded
/// onto the top and bottom of the central 8 x 8 block.
fn cross_qam_128() -> Vec<(f64, f64)> {
    (0..128)
        .map(|label| {
            let x = gray_level(label >> 3, 16);
            let y = gray_level(label & 7, 8);
            if x.abs() > 11.0 {
                let xf = x.signum() * (8.0 - y.abs());
                let yf = y.signum() * (x.abs() - 4.0);
                (xf, yf)
            } else {
                (x, y)
            }
        })
        .collect()
}
