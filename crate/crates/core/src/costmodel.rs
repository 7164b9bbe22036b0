//! Latency and power models over operation counts and link parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{op_count, Expr};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} must be finite and non-negative")]
    Negative(&'static str),
    #[error("amplifier efficiency must lie in (0, 1]")]
    AmplifierEfficiency,
}

/// Inputs to the latency and power models. Symbols follow the usual
/// notation: `D` data bits, `B` link rate, `L_q` queuing delay, `alpha`
/// hardware efficiency factor, `V` supply voltage, `P_t` required transmit
/// power, `eta_amp` amplifier efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostInputs<T> {
    pub n_ops: T,
    pub f_cpu: T,
    pub data_bits: T,
    pub bandwidth_bps: T,
    #[serde(default)]
    pub queuing_delay: T,
    pub alpha: T,
    pub voltage: T,
    pub transmit_power: T,
    pub amplifier_efficiency: T,
    pub idle_power: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency<T> {
    pub l_p: T,
    pub l_t: T,
    pub l_q: T,
    pub l: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Power<T> {
    pub p_proc: T,
    pub p_tx: T,
    pub p_idle: T,
    pub p_total: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de> + Default"))]
pub struct CostReport<T> {
    pub inputs: CostInputs<T>,
    pub latency: Latency<T>,
    pub power: Power<T>,
}

fn non_negative<T: Scalar>(v: T, name: &'static str) -> Result<(), CostError> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(CostError::Negative(name))
    }
}

fn positive<T: Scalar>(v: T, name: &'static str) -> Result<(), CostError> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(CostError::NonPositive(name))
    }
}

/// `L_p = n_ops / f_cpu`, `L_t = D / B`, `L = L_p + L_t + L_q`.
pub fn latency<T: Scalar>(c: &CostInputs<T>) -> Result<Latency<T>, CostError> {
    positive(c.f_cpu, "f_cpu")?;
    positive(c.bandwidth_bps, "bandwidth_bps")?;
    non_negative(c.n_ops, "n_ops")?;
    non_negative(c.data_bits, "data_bits")?;
    non_negative(c.queuing_delay, "queuing_delay")?;
    let l_p = c.n_ops / c.f_cpu;
    let l_t = c.data_bits / c.bandwidth_bps;
    Ok(Latency {
        l_p,
        l_t,
        l_q: c.queuing_delay,
        l: l_p + l_t + c.queuing_delay,
    })
}

/// `P_proc = alpha n_ops V^2 f_cpu`, `P_tx = P_t / eta_amp`,
/// `P_total = P_proc + P_tx + P_idle`.
///
/// `alpha` absorbs the units of `n_ops * f_cpu`.
pub fn power<T: Scalar>(c: &CostInputs<T>) -> Result<Power<T>, CostError> {
    if !(c.amplifier_efficiency > T::zero() && c.amplifier_efficiency <= T::one()) {
        return Err(CostError::AmplifierEfficiency);
    }
    for (v, name) in [
        (c.alpha, "alpha"),
        (c.n_ops, "n_ops"),
        (c.voltage, "voltage"),
        (c.f_cpu, "f_cpu"),
        (c.transmit_power, "transmit_power"),
        (c.idle_power, "idle_power"),
    ] {
        non_negative(v, name)?;
    }
    let p_proc = c.alpha * c.n_ops * c.voltage * c.voltage * c.f_cpu;
    let p_tx = c.transmit_power / c.amplifier_efficiency;
    Ok(Power {
        p_proc,
        p_tx,
        p_idle: c.idle_power,
        p_total: p_proc + p_tx + c.idle_power,
    })
}

pub fn cost<T: Scalar>(c: &CostInputs<T>) -> Result<CostReport<T>, CostError> {
    Ok(CostReport {
        inputs: *c,
        latency: latency(c)?,
        power: power(c)?,
    })
}

/// Operation count for evaluating `expr` over `samples` samples.
pub fn waveform_ops(expr: &Expr, samples: usize) -> u64 {
    op_count(expr) as u64 * samples as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> CostInputs<f64> {
        CostInputs {
            n_ops: 1e6,
            f_cpu: 1e9,
            data_bits: 1e3,
            bandwidth_bps: 1e6,
            queuing_delay: 0.0,
            alpha: 1e-21,
            voltage: 1.0,
            transmit_power: 0.1,
            amplifier_efficiency: 0.5,
            idle_power: 0.01,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn substitutions() {
        let l = latency(&base()).unwrap();
        assert!(rel(l.l_p, 1e-3) <= 1e-12);
        assert!(rel(l.l_t, 1e-3) <= 1e-12);
        assert!(rel(l.l, 2e-3) <= 1e-12);
        let p = power(&base()).unwrap();
        assert!(rel(p.p_proc, 1e-6) <= 1e-12);
        assert!(rel(p.p_tx, 0.2) <= 1e-12);
        assert!(rel(p.p_total, 0.210001) <= 1e-12);
    }

    #[test]
    fn errors() {
        let mut c = base();
        c.f_cpu = 0.0;
        assert_eq!(latency(&c), Err(CostError::NonPositive("f_cpu")));
        let mut c = base();
        c.bandwidth_bps = -1.0;
        assert!(latency(&c).is_err());
        let mut c = base();
        c.amplifier_efficiency = 0.0;
        assert_eq!(power(&c), Err(CostError::AmplifierEfficiency));
        c.amplifier_efficiency = 1.5;
        assert!(power(&c).is_err());
    }

    #[test]
    fn json_shape() {
        let text = serde_json::to_string(&base()).unwrap();
        let back: CostInputs<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, base());
        let r = cost(&base()).unwrap();
        let v = serde_json::to_value(r).unwrap();
        assert!(v["latency"]["l"].is_number() && v["power"]["p_total"].is_number());
    }
}
