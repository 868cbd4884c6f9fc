//! Capital cost, annual energy production and LCOE.
//!
//! `C_n` is in $/MW/yr and `E_n` in hours per year, both normalized by the
//! turbine rating, so `LCOE = C_n / E_n` is in $/MWh.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::trapz_weights;
use crate::surrogate::{PlantDesign, PLANT_LOWER, PLANT_UPPER};

/// Turbine rating [W].
pub const RATED_POWER: f64 = 15.0e6;
pub const HOURS_PER_YEAR: f64 = 8760.0;
/// Capital cost at the lower and upper plant bounds [$/kW].
pub const CAPITAL_AT_LOWER: f64 = 4740.7;
pub const CAPITAL_AT_UPPER: f64 = 5407.2;

/// Annual operating cost [$/kW/yr] that puts the nominal design, under the
/// default sweep settings at the 6° pitch limit, at 89.30 $/MWh.
pub const CALIBRATED_OPEX: f64 = 171.92;

/// Weibull wind-speed distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weibull {
    pub k: f64,
    /// Scale [m/s].
    pub lambda: f64,
}

impl Default for Weibull {
    fn default() -> Self {
        Self {
            k: 2.0,
            lambda: 11.28,
        }
    }
}

impl Weibull {
    /// Density [s/m] at mean speed `w ≥ 0`.
    pub fn pdf(&self, w: f64) -> f64 {
        if w < 0.0 {
            return 0.0;
        }
        let x = w / self.lambda;
        (self.k / self.lambda) * x.powf(self.k - 1.0) * (-x.powf(self.k)).exp()
    }

    /// Quadrature weights over the case means: trapezoid weights times the
    /// density, normalized to sum to one.
    pub fn weights(&self, means: &[f64]) -> Vec<f64> {
        let tw = if means.len() == 1 {
            vec![1.0]
        } else {
            trapz_weights(means)
        };
        let raw: Vec<f64> = tw
            .iter()
            .zip(means)
            .map(|(t, &m)| t * self.pdf(m))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|r| r / total).collect()
    }
}

pub fn weibull_pdf(w: f64, k: f64, lambda: f64) -> f64 {
    Weibull { k, lambda }.pdf(w)
}

/// Normalized AEP `E_n` [h]. `None` entries (no optimal solution) count as
/// zero power; the weights are normalized by their sum.
pub fn aep(powers: &[Option<f64>], weights: &[f64], f_wl: f64) -> Result<f64> {
    if powers.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} powers for {} quadrature weights",
            powers.len(),
            weights.len()
        )));
    }
    // Dividing by the weight sum keeps uniform power exact under rounding.
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(
            "quadrature weights must have a positive sum".into(),
        ));
    }
    let mean: f64 = powers
        .iter()
        .zip(weights)
        .map(|(p, w)| w * (p.unwrap_or(0.0) / RATED_POWER))
        .sum::<f64>()
        / total;
    Ok((1.0 - f_wl) * HOURS_PER_YEAR * mean)
}

/// Separable capital cost [$/kW]:
///
/// ```text
/// C_capital = C_0 + F_s·C_s(c_s) + F_d·C_d(c_d)
/// C_s = κ·w_s·c_s^p_s,   C_d = κ·w_d·c_d^p_d
/// ```
///
/// `C_0` (turbine and design-independent balance of system) and `κ` are
/// solved from the costs at the two plant bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapitalCost {
    pub fixed: f64,
    pub scale: f64,
    pub weights: [f64; 2],
    pub exponents: [f64; 2],
}

impl Default for CapitalCost {
    fn default() -> Self {
        Self::calibrate([18.2, 1.0], [1.0, 2.0], CAPITAL_AT_LOWER, CAPITAL_AT_UPPER)
            .expect("default capital cost calibrates")
    }
}

impl CapitalCost {
    /// Fits `fixed` and `scale` so the cost is `at_lower` at the lower plant
    /// bound and `at_upper` at the upper one.
    pub fn calibrate(
        weights: [f64; 2],
        exponents: [f64; 2],
        at_lower: f64,
        at_upper: f64,
    ) -> Result<Self> {
        let shape = |x: [f64; 2]| {
            weights[0] * x[0].powf(exponents[0]) + weights[1] * x[1].powf(exponents[1])
        };
        let (g_lo, g_hi) = (shape(PLANT_LOWER), shape(PLANT_UPPER));
        if !(g_hi > g_lo)
            || weights.iter().any(|w| !(*w > 0.0))
            || exponents.iter().any(|p| !(*p > 0.0))
        {
            return Err(Error::InvalidInput(
                "capital cost shape must increase over the plant box".into(),
            ));
        }
        let scale = (at_upper - at_lower) / (g_hi - g_lo);
        Ok(Self {
            fixed: at_lower - scale * g_lo,
            scale,
            weights,
            exponents,
        })
    }

    pub fn c_s(&self, c_s: f64) -> f64 {
        self.scale * self.weights[0] * c_s.powf(self.exponents[0])
    }

    pub fn c_d(&self, c_d: f64) -> f64 {
        self.scale * self.weights[1] * c_d.powf(self.exponents[1])
    }

    /// Capital cost with per-component factors `f` [$/kW].
    pub fn eval(&self, x_p: &PlantDesign, f: [f64; 2]) -> f64 {
        self.fixed + f[0] * self.c_s(x_p.c_s) + f[1] * self.c_d(x_p.c_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    pub capital: CapitalCost,
    /// [$/kW/yr]
    pub c_opex: f64,
    /// Fixed charge rate.
    pub r_fc: f64,
    /// Wake loss factor.
    pub f_wl: f64,
    /// Factors on the `c_s` and `c_d` capital terms.
    pub f: [f64; 2],
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            capital: CapitalCost::default(),
            c_opex: CALIBRATED_OPEX,
            r_fc: 0.056,
            f_wl: 0.15,
            f: [1.0, 1.0],
        }
    }
}

impl CostModel {
    pub fn with_f(mut self, f: [f64; 2]) -> Self {
        self.f = f;
        self
    }

    pub fn capital(&self, x_p: &PlantDesign) -> f64 {
        self.capital.eval(x_p, self.f)
    }

    /// Annualized cost per MW of rating [$/MW/yr].
    pub fn c_n(&self, x_p: &PlantDesign) -> f64 {
        1000.0 * (self.r_fc * self.capital(x_p) + self.c_opex)
    }

    /// LCOE [$/MWh]; infinite when `e_n` is not positive.
    pub fn lcoe(&self, x_p: &PlantDesign, e_n: f64) -> f64 {
        if e_n > 0.0 {
            self.c_n(x_p) / e_n
        } else {
            f64::INFINITY
        }
    }

    /// Operating cost that gives `target` LCOE for a design with `e_n`.
    pub fn opex_for(&self, x_p: &PlantDesign, e_n: f64, target: f64) -> f64 {
        target * e_n / 1000.0 - self.r_fc * self.capital(x_p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.r_fc >= 0.0
            && (0.0..=1.0).contains(&self.f_wl)
            && self.c_opex.is_finite()
            && self.f.iter().all(|f| *f >= 0.0)
            && self.capital.scale >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid cost model {self:?}")))
        }
    }
}
