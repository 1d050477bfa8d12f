//! Player utility families: values, marginals, inverse marginals, demands.
//!
//! A player's demand is the service level at which the marginal utility
//! equals the price; the game layers consume demands rather than raw
//! utilities wherever a closed form exists.

use crate::numeric::bisect;
use crate::{Error, Result};

/// Utility family and its family-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `U(g) = M (1 + y^2) atan(g)`, parameterized directly by its demand
    /// `y`: the marginal at `g = y` is exactly the price.
    Arctan { demand: f64 },
    /// `U(g) = (M u / b) atan(b g)` with scale `u` and steepness `b`.
    ArctanScaled { u: f64, beta: f64 },
    /// `U(g) = u g`; constant marginal, so no demand level exists.
    Linear { slope: f64 },
    /// Arctan below the saturation point, constant beyond it (C0 kink).
    Saturating { demand: f64, saturation: f64 },
}

/// A player's utility: family parameters plus the unit price of service.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilitySpec {
    pub family: Family,
    /// Price per unit of service; scales every strictly concave family.
    pub price: f64,
}

fn check_price(price: f64) -> Result<()> {
    if !(price > 0.0) || !price.is_finite() {
        return Err(Error::Domain(format!("price must be positive, got {price}")));
    }
    Ok(())
}

impl UtilitySpec {
    pub fn arctan(demand: f64, price: f64) -> Result<Self> {
        check_price(price)?;
        if !(demand > 0.0 && demand < 1.0) {
            return Err(Error::Domain(format!(
                "arctan demand must lie in (0,1), got {demand}"
            )));
        }
        Ok(Self { family: Family::Arctan { demand }, price })
    }

    pub fn arctan_scaled(u: f64, beta: f64, price: f64) -> Result<Self> {
        check_price(price)?;
        if !(u > 0.0 && beta > 0.0) {
            return Err(Error::Domain(format!(
                "scaled arctan needs u > 0 and beta > 0, got u={u}, beta={beta}"
            )));
        }
        Ok(Self { family: Family::ArctanScaled { u, beta }, price })
    }

    pub fn linear(slope: f64, price: f64) -> Result<Self> {
        check_price(price)?;
        if !(slope > 0.0) {
            return Err(Error::Domain(format!("linear slope must be positive, got {slope}")));
        }
        Ok(Self { family: Family::Linear { slope }, price })
    }

    pub fn saturating(demand: f64, saturation: f64, price: f64) -> Result<Self> {
        check_price(price)?;
        if !(demand > 0.0 && demand < 1.0) {
            return Err(Error::Domain(format!(
                "saturating demand must lie in (0,1), got {demand}"
            )));
        }
        if !(saturation > 0.0 && saturation < 1.0) {
            return Err(Error::Domain(format!(
                "saturation point must lie in (0,1), got {saturation}"
            )));
        }
        Ok(Self { family: Family::Saturating { demand, saturation }, price })
    }

    /// True for every family with a strictly decreasing marginal.
    pub fn is_concave(&self) -> bool {
        !matches!(self.family, Family::Linear { .. })
    }

    /// Utility of service level `g >= 0`.
    pub fn value(&self, g: f64) -> Result<f64> {
        if g < 0.0 || !g.is_finite() {
            return Err(Error::Domain(format!("service level must be >= 0, got {g}")));
        }
        Ok(match self.family {
            Family::Arctan { demand } => self.price * (1.0 + demand * demand) * g.atan(),
            Family::ArctanScaled { u, beta } => self.price * u / beta * (beta * g).atan(),
            Family::Linear { slope } => slope * g,
            Family::Saturating { demand, saturation } => {
                let capped = g.min(saturation);
                self.price * (1.0 + demand * demand) * capped.atan()
            }
        })
    }

    /// Marginal utility `U'(g)` at `g >= 0`.
    pub fn marginal(&self, g: f64) -> Result<f64> {
        if g < 0.0 || !g.is_finite() {
            return Err(Error::Domain(format!("service level must be >= 0, got {g}")));
        }
        Ok(match self.family {
            Family::Arctan { demand } => self.price * (1.0 + demand * demand) / (1.0 + g * g),
            Family::ArctanScaled { u, beta } => {
                let bg = beta * g;
                self.price * u / (1.0 + bg * bg)
            }
            Family::Linear { slope } => slope,
            Family::Saturating { demand, saturation } => {
                if g > saturation {
                    0.0
                } else {
                    self.price * (1.0 + demand * demand) / (1.0 + g * g)
                }
            }
        })
    }

    /// Service level at which the marginal equals `z`, for strictly
    /// decreasing marginals.
    pub fn inverse_marginal(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::Domain(format!("marginal target must be positive, got {z}")));
        }
        match self.family {
            Family::Arctan { demand } => {
                let top = self.price * (1.0 + demand * demand);
                if z > top {
                    return Err(Error::NoSolution(format!(
                        "marginal target {z} exceeds the maximum marginal {top}"
                    )));
                }
                Ok((top / z - 1.0).sqrt())
            }
            Family::ArctanScaled { u, beta } => {
                let top = self.price * u;
                if z > top {
                    return Err(Error::NoSolution(format!(
                        "marginal target {z} exceeds the maximum marginal {top}"
                    )));
                }
                Ok((top / z - 1.0).sqrt() / beta)
            }
            Family::Linear { .. } => Err(Error::Unsupported(
                "linear utility has a constant marginal; no inverse exists".into(),
            )),
            Family::Saturating { saturation, .. } => {
                let top = self.marginal(0.0)?;
                let edge = self.marginal(saturation)?;
                if z > top {
                    return Err(Error::NoSolution(format!(
                        "marginal target {z} exceeds the maximum marginal {top}"
                    )));
                }
                if z < edge {
                    return Err(Error::NoSolution(format!(
                        "marginal target {z} falls in the saturation gap below {edge}"
                    )));
                }
                bisect(|g| self.marginal(g).unwrap() - z, 0.0, saturation, 1e-12)
            }
        }
    }

    /// Demand level: the service quantity at which the marginal utility
    /// equals the price.
    pub fn demand(&self) -> Result<f64> {
        match self.family {
            // The family is parameterized by its own demand; return it
            // exactly rather than through the inverse.
            Family::Arctan { demand } => Ok(demand),
            Family::Saturating { demand, saturation } => {
                if demand <= saturation {
                    Ok(demand)
                } else {
                    Err(Error::NoSolution(format!(
                        "marginal never reaches the price before saturating at {saturation}"
                    )))
                }
            }
            _ => self.inverse_marginal(self.price),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const Y1: f64 = 8.0 / 15.0;

    #[test]
    fn arctan_value_matches_reference() {
        let u = UtilitySpec::arctan(Y1, 1.0).unwrap();
        assert_eq!(u.value(0.0).unwrap(), 0.0);
        assert_relative_eq!(u.value(Y1).unwrap(), 0.629_322_965_721_455_5, epsilon = 1e-15);
        assert_relative_eq!(u.value(0.3).unwrap(), 0.374_360_060_462_682_6, epsilon = 1e-15);
    }

    #[test]
    fn arctan_marginal_is_price_at_demand() {
        for (y, m) in [(Y1, 1.0), (0.2, 3.5), (0.97, 0.4)] {
            let u = UtilitySpec::arctan(y, m).unwrap();
            assert_relative_eq!(u.marginal(y).unwrap(), m, epsilon = 1e-14);
        }
        let u = UtilitySpec::arctan(Y1, 1.0).unwrap();
        assert_relative_eq!(u.marginal(0.3).unwrap(), 1.1783893985728848, epsilon = 1e-15);
    }

    #[test]
    fn arctan_inverse_marginal_reference_point() {
        let u = UtilitySpec::arctan(Y1, 1.0).unwrap();
        assert_relative_eq!(
            u.inverse_marginal(1.2).unwrap(),
            0.265_274_141_918_073_8,
            epsilon = 1e-15
        );
        assert!(matches!(u.inverse_marginal(2.0), Err(Error::NoSolution(_))));
        assert!(matches!(u.inverse_marginal(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn scaled_family_reference_points() {
        let wide = UtilitySpec::arctan_scaled(100.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(wide.demand().unwrap(), 99f64.sqrt(), epsilon = 1e-15);

        let steep = UtilitySpec::arctan_scaled(100.0, 40.0, 1.0).unwrap();
        assert_relative_eq!(steep.demand().unwrap(), 0.248_746_859_276_655, epsilon = 1e-15);
        assert_relative_eq!(steep.value(0.2).unwrap(), 3.616_103_330_620_338, epsilon = 1e-15);
        assert_relative_eq!(steep.marginal(0.2).unwrap(), 1.5384615384615385, epsilon = 1e-15);
        assert_abs_diff_eq!(steep.inverse_marginal(100.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_family_rejects_inverse() {
        let u = UtilitySpec::linear(2.0, 1.0).unwrap();
        assert_eq!(u.value(0.3).unwrap(), 0.6);
        assert_eq!(u.marginal(9.0).unwrap(), 2.0);
        assert!(matches!(u.inverse_marginal(1.0), Err(Error::Unsupported(_))));
        assert!(matches!(u.demand(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn saturating_kink_behavior() {
        let u = UtilitySpec::saturating(0.3, 0.5, 1.0).unwrap();
        assert_eq!(u.marginal(0.6).unwrap(), 0.0);
        assert_eq!(u.value(0.6).unwrap(), u.value(0.5).unwrap());
        // Marginal at the kink still carries the concave branch value.
        assert!(u.marginal(0.5).unwrap() > 0.0);
        assert_abs_diff_eq!(u.demand().unwrap(), 0.3);
        // Inverse by bisection on the concave branch.
        assert_abs_diff_eq!(u.inverse_marginal(1.0).unwrap(), 0.3, epsilon = 1e-11);
        // Targets inside the saturation gap have no preimage.
        let edge = u.marginal(0.5).unwrap();
        assert!(matches!(u.inverse_marginal(0.9 * edge), Err(Error::NoSolution(_))));
    }

    #[test]
    fn saturating_demand_blocked_by_early_kink() {
        let u = UtilitySpec::saturating(0.4, 0.2, 1.0).unwrap();
        assert!(matches!(u.demand(), Err(Error::NoSolution(_))));
    }

    #[test]
    fn negative_service_level_rejected() {
        let u = UtilitySpec::arctan(0.5, 1.0).unwrap();
        assert!(matches!(u.value(-0.1), Err(Error::Domain(_))));
        assert!(matches!(u.marginal(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn constructor_validation() {
        assert!(UtilitySpec::arctan(1.2, 1.0).is_err());
        assert!(UtilitySpec::arctan(0.5, 0.0).is_err());
        assert!(UtilitySpec::arctan_scaled(0.0, 1.0, 1.0).is_err());
        assert!(UtilitySpec::saturating(0.5, 1.0, 1.0).is_err());
        assert!(UtilitySpec::linear(-2.0, 1.0).is_err());
    }

    proptest! {
        // Marginal and inverse marginal are mutual inverses on the strictly
        // concave branch of every family that has one.
        #[test]
        fn marginal_round_trip(
            y in 0.05f64..0.95,
            m in 0.1f64..10.0,
            g in 1e-3f64..3.0,
            beta in 0.1f64..50.0,
            u_scale in 1.5f64..500.0,
        ) {
            let specs = [
                UtilitySpec::arctan(y, m).unwrap(),
                UtilitySpec::arctan_scaled(u_scale, beta, m).unwrap(),
                UtilitySpec::saturating(y, 0.9, m).unwrap(),
            ];
            for spec in specs {
                let g_here = if matches!(spec.family, Family::Saturating { .. }) {
                    g.min(0.89)
                } else {
                    g
                };
                let z = spec.marginal(g_here).unwrap();
                let back = spec.inverse_marginal(z).unwrap();
                let z2 = spec.marginal(back).unwrap();
                prop_assert!((z2 - z).abs() <= 1e-10 * z.abs());
            }
        }

        // Strictly decreasing marginal on a sampled grid.
        #[test]
        fn marginal_monotone(y in 0.05f64..0.95, m in 0.1f64..10.0) {
            let spec = UtilitySpec::arctan(y, m).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..50 {
                let g = 0.05 * k as f64;
                let z = spec.marginal(g).unwrap();
                prop_assert!(z < prev);
                prev = z;
            }
        }
    }
}
