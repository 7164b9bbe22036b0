use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Root-raised-cosine taps for offsets `-span*sps ..= span*sps`, scaled so
/// the squared taps sum to `sps` (the energy of a unit rectangular pulse).
pub fn rrc_taps(rolloff: f64, sps: usize, span: usize) -> Vec<f64> {
    let half = (span * sps) as isize;
    let b = rolloff;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|m| {
            let t = m as f64 / sps as f64;
            if m == 0 {
                1.0 - b + 4.0 * b / PI
            } else if b > 0.0 && ((4.0 * b * t).abs() - 1.0).abs() < 1e-9 {
                let a = PI / (4.0 * b);
                b * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos())
            } else {
                let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
                num / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
            }
        })
        .collect();
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let k = (sps as f64 / energy).sqrt();
    taps.iter_mut().for_each(|h| *h *= k);
    taps
}

/// Unit-sum Gaussian smoothing taps for GMSK, truncated at four standard deviations.
pub fn gaussian_taps(bt: f64, sps: usize) -> Vec<f64> {
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * bt) * sps as f64;
    let half = (4.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|m| (-(m as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|g| *g /= sum);
    taps
}

/// Centered ("same" length) convolution, holding the edge values of `x`.
pub fn smooth_hold(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as isize;
    let last = x.len() as isize - 1;
    (0..x.len() as isize)
        .map(|n| {
            taps.iter()
                .enumerate()
                .map(|(j, g)| g * x[(n + half - j as isize).clamp(0, last) as usize])
                .sum()
        })
        .collect()
}
