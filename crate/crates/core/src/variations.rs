//! Access-game variants: linear utilities with bang-bang responses and
//! threshold saddles, and power-based costs with their own response maps,
//! energy function, and equilibrium regions.

use crate::aloha::{AlohaGame, CostBasis, StrategyVector};
use crate::dynamics::{StateBox, VectorField};
use crate::utility::Family;
use crate::{Error, Result};

/// Ratio above which the square-root response approximation is trusted.
pub const APPROX_REGIME_RATIO: f64 = 20.0;

/// Two-player game with linear utilities `u_i g`. The best response is
/// bang-bang: transmit always or never, switching at a threshold on the
/// opponent's attempt rate.
#[derive(Debug, Clone)]
pub struct LinearGame {
    u: [f64; 2],
    price: f64,
    alpha: f64,
    cost_basis: CostBasis,
}

impl LinearGame {
    pub fn new(u: [f64; 2], price: f64, alpha: f64, cost_basis: CostBasis) -> Result<Self> {
        if !(price > 0.0) {
            return Err(Error::Domain(format!("price must be positive, got {price}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0,1], got {alpha}")));
        }
        if u.iter().any(|&ui| !(ui > 0.0)) {
            return Err(Error::Domain("slopes must be positive".into()));
        }
        if cost_basis == CostBasis::Throughput && u.iter().any(|&ui| ui <= price) {
            return Err(Error::Domain(
                "throughput-cost linear game needs every slope above the price".into(),
            ));
        }
        Ok(Self { u, price, alpha, cost_basis })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.u, self.price, alpha, self.cost_basis)
    }

    pub fn slopes(&self) -> [f64; 2] {
        self.u
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cost_basis(&self) -> CostBasis {
        self.cost_basis
    }

    /// Threshold player `i` holds the opponent's attempt rate against:
    /// below it player `i` transmits always, above it never.
    pub fn threshold(&self, i: usize) -> f64 {
        let a = self.alpha;
        let (ui, uo) = (self.u[i], self.u[1 - i]);
        let m = self.price;
        match self.cost_basis {
            CostBasis::Throughput => {
                a * (ui - m) / (a * (ui - m) + (1.0 - a) * (uo - m))
            }
            CostBasis::Power => a * (ui - m) / (a * ui + (1.0 - a) * uo),
        }
    }

    /// Bang-bang best response of player `i`; exact indifference holds the
    /// current play.
    pub fn response(&self, i: usize, q: &[f64]) -> f64 {
        let tau = self.threshold(i);
        let qo = q[1 - i];
        if qo < tau {
            1.0
        } else if qo > tau {
            0.0
        } else {
            q[i]
        }
    }

    pub fn response_vec(&self, q: &[f64]) -> StrategyVector {
        StrategyVector((0..2).map(|i| self.response(i, q)).collect())
    }

    /// The interior fixed point between the two corner equilibria: each
    /// player sits exactly at the opponent's threshold.
    pub fn saddle(&self) -> StrategyVector {
        StrategyVector(vec![self.threshold(1), self.threshold(0)])
    }
}

/// Relaxation field of the bang-bang response on the full unit box.
pub fn linear_field(game: &LinearGame) -> VectorField {
    let bounds = StateBox::uniform(2, 0.0, 1.0).expect("static bounds");
    let game = game.clone();
    VectorField::from_response(bounds, move |q: &[f64]| game.response_vec(q).0)
}

/// Price that makes a purely selfish identical-player game switch at the
/// same threshold as an altruism-weighted one priced at `m`.
pub fn mirror_price(u: f64, m: f64, alpha: f64) -> f64 {
    u - alpha * (u - m)
}

/// Selfish response of the power-cost game with scaled-arctan utilities:
/// exact form, square-root approximation, and the regime flag that says
/// when the approximation may be trusted.
#[derive(Debug, Clone)]
pub struct PowerCostResponse {
    pub exact: StrategyVector,
    pub approx: StrategyVector,
    pub exact_raw: Vec<f64>,
    pub approx_raw: Vec<f64>,
    /// True where the leading coefficient dominates, i.e. the
    /// approximation error is provably below a few percent.
    pub regime: Vec<bool>,
}

fn scaled_params(game: &AlohaGame) -> Result<Vec<(f64, f64)>> {
    game.players()
        .iter()
        .map(|p| match p.family {
            Family::ArctanScaled { u, beta } => Ok((u, beta)),
            _ => Err(Error::Unsupported(
                "power-cost responses are derived for scaled-arctan utilities".into(),
            )),
        })
        .collect()
}

fn require_power_basis(game: &AlohaGame) -> Result<()> {
    if game.cost_basis() != CostBasis::Power {
        return Err(Error::Unsupported("this response assumes power-based costs".into()));
    }
    if game.player_count() != 2 {
        return Err(Error::Unsupported("power-cost responses cover two players".into()));
    }
    Ok(())
}

/// Selfish best response under power-based costs (two players,
/// scaled-arctan utilities): exact and approximate forms side by side.
///
/// The raw exact target is `sqrt(u_i (1-q_o) - 1) / (b_i (1-q_o))` where
/// profitable, 0 where transmission cannot pay for itself, and saturates
/// upward when the opponent jams the slot completely. The approximation
/// replaces it with `y_i / sqrt(1-q_o)`, `y_i = sqrt(u_i)/b_i`.
pub fn power_cost_selfish_response(game: &AlohaGame, q: &[f64]) -> Result<PowerCostResponse> {
    require_power_basis(game)?;
    let params = scaled_params(game)?;
    let (lo, hi) = game.clip();
    let mut exact_raw = Vec::with_capacity(2);
    let mut approx_raw = Vec::with_capacity(2);
    let mut regime = Vec::with_capacity(2);
    for i in 0..2 {
        let (u, beta) = params[i];
        let qo = q[1 - i];
        let silence = 1.0 - qo;
        let ratio = u * silence;
        if silence <= 0.0 {
            // Jammed slot: both forms blow up; saturate at the ceiling.
            exact_raw.push(f64::INFINITY);
            approx_raw.push(f64::INFINITY);
            regime.push(false);
            continue;
        }
        exact_raw.push(if ratio > 1.0 { (ratio - 1.0).sqrt() / (beta * silence) } else { 0.0 });
        approx_raw.push(u.sqrt() / beta / silence.sqrt());
        regime.push(ratio >= APPROX_REGIME_RATIO);
    }
    Ok(PowerCostResponse {
        exact: StrategyVector(exact_raw.iter().map(|&x| x.clamp(lo, hi)).collect()),
        approx: StrategyVector(approx_raw.iter().map(|&x| x.clamp(lo, hi)).collect()),
        exact_raw,
        approx_raw,
        regime,
    })
}

/// Energy function of the approximate power-cost selfish dynamics
/// (two players). Decreases along `dq/dt = F_approx(q) - q`.
pub fn lyapunov_powercost(game: &AlohaGame, q: &[f64]) -> Result<f64> {
    require_power_basis(game)?;
    let params = scaled_params(game)?;
    if q.iter().any(|&qi| qi >= 1.0) {
        return Err(Error::Domain("power-cost energy is singular at q = 1".into()));
    }
    let y: Vec<f64> = params.iter().map(|&(u, beta)| u.sqrt() / beta).collect();
    let prod: f64 = (0..2).map(|i| y[i] / (1.0 - q[i]).sqrt()).product();
    let sum: f64 = (0..2)
        .map(|i| {
            let s = (1.0 - q[i]).sqrt();
            (s + 1.0 / s) * y[1 - i]
        })
        .sum();
    Ok(-prod + sum)
}

/// Relaxation field of the approximate power-cost selfish response on the
/// game's clip box.
pub fn power_cost_field(game: &AlohaGame) -> Result<VectorField> {
    require_power_basis(game)?;
    scaled_params(game)?;
    let (lo, hi) = game.clip();
    let bounds = StateBox::uniform(2, lo, hi)?;
    let game = game.clone();
    Ok(VectorField::from_response(bounds, move |q: &[f64]| {
        power_cost_selfish_response(&game, q).expect("checked at construction").approx.0
    }))
}

/// The equilibrium set of the fully altruistic power-cost game: the
/// opt-out boundary family, plus (for saturating utilities only) the open
/// region where every player's service is already past its saturation
/// point, so nobody's marginal moves.
#[derive(Debug, Clone)]
pub struct AltruisticNepSet {
    saturation_points: Option<Vec<f64>>,
}

impl AltruisticNepSet {
    /// True when at least one player opts out entirely.
    pub fn boundary_contains(&self, q: &[f64]) -> bool {
        q.contains(&0.0)
    }

    /// Membership in the saturated region, or `None` for families that
    /// never saturate.
    pub fn saturation_region_contains(&self, q: &[f64]) -> Option<bool> {
        let sat = self.saturation_points.as_ref()?;
        let n = q.len();
        let inside = (0..n).all(|i| {
            let others: f64 =
                q.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &qj)| 1.0 - qj).product();
            q[i] * others > sat[i]
        });
        Some(inside)
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        self.boundary_contains(q) || self.saturation_region_contains(q).unwrap_or(false)
    }
}

/// Equilibria of the fully altruistic power-cost game, as a membership
/// test rather than a list: the set is a continuum.
pub fn power_cost_altruistic_neps(game: &AlohaGame) -> Result<AltruisticNepSet> {
    if game.cost_basis() != CostBasis::Power {
        return Err(Error::Unsupported("the opt-out family arises under power-based costs".into()));
    }
    let sats: Vec<Option<f64>> = game
        .players()
        .iter()
        .map(|p| match p.family {
            Family::Saturating { saturation, .. } => Some(saturation),
            _ => None,
        })
        .collect();
    let saturation_points =
        if sats.iter().all(|s| s.is_some()) { Some(sats.into_iter().flatten().collect()) } else { None };
    Ok(AltruisticNepSet { saturation_points })
}
