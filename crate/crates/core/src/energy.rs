//! Wave-to-wire energy harvesting for a point-absorber buoy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WecParams {
    /// Power take-off efficiency.
    pub eta_pto: f64,
    /// Onboard electronics conversion efficiency.
    pub eta_conv: f64,
    /// Capture width ratio.
    pub gamma_cwr: f64,
    /// Effective interaction width, meters.
    pub width: f64,
    /// Seawater density, kg/m^3.
    pub rho: f64,
    /// Gravitational acceleration, m/s^2.
    pub g: f64,
    /// Operational draw of the buoy and sensor, watts.
    pub p0: f64,
    /// Maximum transmit power, watts.
    pub p_max: f64,
}

impl Default for WecParams {
    fn default() -> Self {
        WecParams {
            eta_pto: 0.5,
            eta_conv: 0.9,
            gamma_cwr: 0.082,
            width: 2.0,
            rho: 1025.0,
            g: 9.81,
            p0: 5.0,
            p_max: 100.0,
        }
    }
}

impl WecParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_pto", self.eta_pto), ("eta_conv", self.eta_conv), ("gamma_cwr", self.gamma_cwr)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(self.width > 0.0) || !(self.rho > 0.0) || !(self.g > 0.0) {
            return Err(Error::invalid("width, rho and g must be positive"));
        }
        if !(self.p0 >= 0.0) || !(self.p_max > 0.0) {
            return Err(Error::invalid("P_0 must be non-negative and P_max positive"));
        }
        Ok(())
    }

    /// Overall wave-to-wire efficiency `eta_pto * eta_conv * gamma_cwr`.
    pub fn efficiency(&self) -> f64 {
        self.eta_pto * self.eta_conv * self.gamma_cwr
    }
}

/// Wave energy flux `rho g^2 a^2 T / (64 pi)`, W/m.
pub fn wave_power_per_meter(a: f64, period: f64, p: &WecParams) -> f64 {
    p.rho * p.g * p.g / (64.0 * PI) * a * a * period
}

pub fn harvested_power(a: f64, period: f64, p: &WecParams) -> f64 {
    p.efficiency() * wave_power_per_meter(a, period, p) * p.width
}

/// Transmit power budget: what is left after the operational draw, capped at
/// `P_max`, never negative.
pub fn available_tx_power(p_e: f64, p: &WecParams) -> f64 {
    (p_e - p.p0).min(p.p_max).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wave_power_examples() {
        let p = WecParams::default();
        assert_eq!(wave_power_per_meter(0.0, 10.0, &p), 0.0);
        // 1025 * 9.81^2 / (64 pi) * 10
        assert!((wave_power_per_meter(1.0, 10.0, &p) - 4_906.050_716_986_905).abs() < 1e-9);
        let ratio = wave_power_per_meter(2.4, 7.0, &p) / wave_power_per_meter(1.2, 7.0, &p);
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn harvested_power_examples() {
        let p = WecParams::default();
        assert!((p.efficiency() - 0.0369).abs() < 1e-15);
        assert!((harvested_power(1.0, 10.0, &p) - 362.066_542_913_633_67).abs() < 1e-9);
        let off = WecParams { eta_conv: 0.0, ..p };
        assert_eq!(harvested_power(1.0, 10.0, &off), 0.0);
    }

    #[test]
    fn calm_sea_is_power_limited() {
        let p = WecParams::default();
        let pe = harvested_power(0.15, 7.0, &p);
        assert!((pe - 5.702_548_050_889_731).abs() < 1e-9, "{pe}");
        assert!(available_tx_power(pe, &p) < 1.0);
    }

    #[test]
    fn available_power_examples() {
        let p = WecParams { p0: 10.0, p_max: 100.0, ..WecParams::default() };
        assert_eq!(available_tx_power(362.0, &p), 100.0);
        assert_eq!(available_tx_power(8.0, &p), 0.0);
        assert_eq!(available_tx_power(10.0, &p), 0.0);
        assert_eq!(available_tx_power(50.0, &p), 40.0);
    }

    #[test]
    fn validation_rejects_bad_fractions() {
        assert!(WecParams { eta_pto: 1.5, ..WecParams::default() }.validate().is_err());
        assert!(WecParams { gamma_cwr: 0.0, ..WecParams::default() }.validate().is_err());
        WecParams::default().validate().unwrap();
    }

    proptest! {
        #[test]
        fn budget_is_monotone_and_capped(
            pe in 0.0f64..1e4, dpe in 0.0f64..1e3, p0 in 0.0f64..100.0, dp0 in 0.0f64..50.0,
            pmax in 0.1f64..500.0,
        ) {
            let p = WecParams { p0, p_max: pmax, ..WecParams::default() };
            let base = available_tx_power(pe, &p);
            prop_assert!(base <= pmax && base >= 0.0);
            prop_assert!(available_tx_power(pe + dpe, &p) >= base);
            let hungrier = WecParams { p0: p0 + dp0, ..p };
            prop_assert!(available_tx_power(pe, &hungrier) <= base);
        }

        #[test]
        fn harvest_is_linear_in_efficiencies_and_width(
            a in 0.0f64..6.0, period in 1.0f64..20.0, k in 0.1f64..1.0, w in 0.5f64..10.0,
        ) {
            let p = WecParams { width: w, ..WecParams::default() };
            let base = harvested_power(a, period, &p);
            let scaled_pto = WecParams { eta_pto: p.eta_pto * k, ..p };
            let scaled_w = WecParams { width: w * 2.0, ..p };
            prop_assert!((harvested_power(a, period, &scaled_pto) - k * base).abs() <= 1e-9 * (1.0 + base));
            prop_assert!((harvested_power(a, period, &scaled_w) - 2.0 * base).abs() <= 1e-9 * (1.0 + base));
        }
    }
}
