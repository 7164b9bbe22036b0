use super::MetricsError;

/// `log2(M)` bits/s/Hz for an M-point constellation.
pub fn spectral_efficiency_theoretical(order: u64) -> Result<f64, MetricsError> {
    if order < 2 || !order.is_power_of_two() {
        return Err(MetricsError::NotPowerOfTwo(order));
    }
    Ok(f64::from(order.trailing_zeros()))
}

/// Bit rate divided by occupied bandwidth.
pub fn spectral_efficiency_measured(bit_rate: f64, bandwidth_hz: f64) -> Result<f64, MetricsError> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(MetricsError::ZeroBandwidth);
    }
    Ok(bit_rate / bandwidth_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theoretical() {
        assert_eq!(spectral_efficiency_theoretical(256).unwrap(), 8.0);
        assert_eq!(spectral_efficiency_theoretical(16).unwrap(), 4.0);
        assert_eq!(spectral_efficiency_theoretical(2).unwrap(), 1.0);
        for bad in [0, 1, 3, 100] {
            assert!(spectral_efficiency_theoretical(bad).is_err());
        }
    }

    #[test]
    fn measured() {
        assert_eq!(spectral_efficiency_measured(8000.0, 1000.0).unwrap(), 8.0);
        assert_eq!(spectral_efficiency_measured(1.0, 0.0), Err(MetricsError::ZeroBandwidth));
    }
}
