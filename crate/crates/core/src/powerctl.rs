//! Power-controlled spectrum sharing: an SINR channel model, modulation
//! curves mapping SINR to frame success, the affine best responses they
//! induce, the exact equilibrium, quadratic energy functions for both
//! orientations of play, and an altruism sweep with power-priced
//! objectives.

use crate::aloha::{CostBasis, StrategyVector};
use crate::dynamics::{StateBox, VectorField};
use crate::numeric::{bisect, grid_then_golden_max, GOLDEN_TOL, GRID_POINTS};
use crate::utility::UtilitySpec;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Absolute tolerance for inverting a frame-success curve.
pub const GAMMA_INVERSE_TOL: f64 = 1e-12;

/// Convert a gain quoted in decibels to linear units.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Modulation scheme, fixing the bit-error curve. `LargeNApprox` skips the
/// per-bit model entirely and works at the frame level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulation {
    Gmsk { kappa: f64 },
    Dbpsk,
    Gfsk,
    Qpsk,
    Qam16,
    Qam64,
    LargeNApprox,
}

/// A modulation scheme together with the frame length it carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationModel {
    scheme: Modulation,
    bits_per_frame: u32,
}

impl ModulationModel {
    pub fn new(scheme: Modulation, bits_per_frame: u32) -> Result<Self> {
        if bits_per_frame < 1 {
            return Err(Error::Domain("a frame carries at least one bit".into()));
        }
        if let Modulation::Gmsk { kappa } = scheme {
            if !(kappa > 0.0 && kappa.is_finite()) {
                return Err(Error::Domain(format!(
                    "gmsk needs a positive finite kappa, got {kappa}"
                )));
            }
        }
        Ok(Self { scheme, bits_per_frame })
    }

    pub fn scheme(&self) -> Modulation {
        self.scheme
    }

    pub fn bits_per_frame(&self) -> u32 {
        self.bits_per_frame
    }

    /// Bit-error probability at the given SINR.
    pub fn bit_error(&self, sinr: f64) -> Result<f64> {
        debug_assert!(sinr >= 0.0);
        Ok(match self.scheme {
            Modulation::Gmsk { kappa } => 0.5 * libm::erfc((kappa * sinr).sqrt()),
            Modulation::Dbpsk => 0.5 * (-sinr).exp(),
            Modulation::Gfsk => 0.5 * (-0.5 * sinr).exp(),
            Modulation::Qpsk => 0.5 * libm::erfc(sinr.sqrt()),
            Modulation::Qam16 => 0.375 * libm::erfc((0.4 * sinr).sqrt()),
            Modulation::Qam64 => 7.0 / 32.0 * libm::erfc((4.0 * sinr / 21.0).sqrt()),
            Modulation::LargeNApprox => {
                return Err(Error::Unsupported(
                    "the long-frame model works at the frame level; it has no per-bit curve"
                        .into(),
                ))
            }
        })
    }

    /// Probability that a whole frame gets through at the given SINR.
    /// Strictly increasing in SINR for every scheme.
    pub fn frame_success(&self, sinr: f64) -> f64 {
        debug_assert!(sinr >= 0.0);
        let n = self.bits_per_frame as f64;
        match self.scheme {
            Modulation::LargeNApprox => (-n * (-sinr).exp()).exp(),
            _ => {
                let pe = self.bit_error(sinr).expect("exact schemes have a bit-error curve");
                (1.0 - pe).powf(n)
            }
        }
    }

    /// SINR at which the frame-success probability reaches `y`.
    ///
    /// The long-frame curve inverts in closed form; the exact schemes are
    /// bisected over an expanding bracket. Targets below the curve's value
    /// at zero SINR are unreachable with nonnegative power.
    pub fn gamma_inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::Domain(format!(
                "frame-success target must lie in (0,1), got {y}"
            )));
        }
        if let Modulation::LargeNApprox = self.scheme {
            let n = self.bits_per_frame as f64;
            let s = (n / (-y.ln())).ln();
            return if s >= 0.0 {
                Ok(s)
            } else {
                Err(Error::NoSolution(format!(
                    "target {y} sits below the zero-SINR success rate"
                )))
            };
        }
        let floor = self.frame_success(0.0);
        if y == floor {
            return Ok(0.0);
        }
        if y < floor {
            return Err(Error::NoSolution(format!(
                "target {y} sits below the zero-SINR success rate {floor}"
            )));
        }
        let mut hi = 1.0;
        while self.frame_success(hi) < y {
            hi *= 2.0;
            if hi > 1e9 {
                return Err(Error::Numeric(format!(
                    "frame-success curve never reaches {y}"
                )));
            }
        }
        bisect(|s| self.frame_success(s) - y, 0.0, hi, GAMMA_INVERSE_TOL)
    }
}

/// Link-gain matrix with ambient noise. `gains[j][i]` is the gain from
/// the transmitter of flow `j` to the receiver of flow `i`; a processing
/// gain greater than one attenuates every cross entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    noise: f64,
    gains: Vec<Vec<f64>>,
    processing_gain: f64,
}

impl ChannelModel {
    pub fn new(noise: f64, gains: Vec<Vec<f64>>) -> Result<Self> {
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::Domain(format!("noise power must be positive, got {noise}")));
        }
        let n = gains.len();
        if n == 0 || gains.iter().any(|row| row.len() != n) {
            return Err(Error::Domain("gain matrix must be square and non-empty".into()));
        }
        for (j, row) in gains.iter().enumerate() {
            for (i, &h) in row.iter().enumerate() {
                if !h.is_finite() || h < 0.0 || (i == j && h == 0.0) {
                    return Err(Error::Domain(format!(
                        "gain [{j}][{i}] = {h}; need own-link gains > 0 and cross gains >= 0"
                    )));
                }
            }
        }
        Ok(Self { noise, gains, processing_gain: 1.0 })
    }

    /// Spread-spectrum processing gain; divides every cross gain.
    pub fn with_processing_gain(mut self, pg: f64) -> Result<Self> {
        if !(pg >= 1.0 && pg.is_finite()) {
            return Err(Error::Domain(format!("processing gain must be >= 1, got {pg}")));
        }
        self.processing_gain = pg;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.gains.len()
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn processing_gain(&self) -> f64 {
        self.processing_gain
    }

    /// Effective gain from transmitter `tx` to receiver `rx`, with the
    /// processing gain already applied to cross entries.
    pub fn gain(&self, tx: usize, rx: usize) -> f64 {
        if tx == rx {
            self.gains[tx][rx]
        } else {
            self.gains[tx][rx] / self.processing_gain
        }
    }

    /// Signal-to-interference-and-noise ratio of flow `i` at powers `q`.
    pub fn sinr(&self, q: &[f64], i: usize) -> f64 {
        let interference: f64 = q
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, &qj)| self.gain(j, i) * qj)
            .sum();
        q[i] * self.gain(i, i) / (self.noise + interference)
    }
}

/// Power game: each flow wants its frame-success probability at a target
/// level, and pays (directly or through the sweep objective) for the
/// power it radiates.
#[derive(Debug, Clone)]
pub struct PowerGame {
    channel: ChannelModel,
    modulation: ModulationModel,
    demands: Vec<f64>,
    price: f64,
    alpha: f64,
    cost_basis: CostBasis,
    // Target SINR over own-link gain, cached; this is the coefficient
    // that makes both best responses affine.
    scaled_targets: Vec<f64>,
}

impl PowerGame {
    pub fn new(
        channel: ChannelModel,
        modulation: ModulationModel,
        demands: Vec<f64>,
        price: f64,
        alpha: f64,
        cost_basis: CostBasis,
    ) -> Result<Self> {
        if demands.len() != channel.dim() {
            return Err(Error::Domain(format!(
                "{} demands for a {}-flow channel",
                demands.len(),
                channel.dim()
            )));
        }
        if let Some(y) = demands.iter().find(|&&y| !(y > 0.0 && y < 1.0)) {
            return Err(Error::Domain(format!(
                "frame-success targets must lie in (0,1), got {y}"
            )));
        }
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::Domain(format!("price must be positive, got {price}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0,1], got {alpha}")));
        }
        let scaled_targets = demands
            .iter()
            .enumerate()
            .map(|(i, &y)| Ok(modulation.gamma_inverse(y)? / channel.gain(i, i)))
            .collect::<Result<Vec<f64>>>()?;
        if scaled_targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::Numeric("derived SINR targets are not finite".into()));
        }
        Ok(Self { channel, modulation, demands, price, alpha, cost_basis, scaled_targets })
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn modulation(&self) -> &ModulationModel {
        &self.modulation
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cost_basis(&self) -> CostBasis {
        self.cost_basis
    }

    /// Target SINR of each flow divided by its own-link gain. Multiplying
    /// this by the noise-plus-interference a flow sees gives the power
    /// that exactly meets its demand.
    pub fn scaled_sinr_targets(&self) -> &[f64] {
        &self.scaled_targets
    }

    pub fn sinr(&self, q: &[f64], i: usize) -> f64 {
        self.channel.sinr(q, i)
    }

    fn require_two_flows(&self, what: &str) -> Result<()> {
        if self.channel.dim() != 2 {
            return Err(Error::Unsupported(format!("{what} covers exactly two flows")));
        }
        Ok(())
    }

    /// Each flow meets its own demand against the interference it
    /// currently sees. Affine in `q`.
    pub fn selfish_power_response(&self, q: &[f64]) -> Vec<f64> {
        let n = self.channel.dim();
        (0..n)
            .map(|i| {
                let interference: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.channel.gain(j, i) * q[j])
                    .sum();
                self.scaled_targets[i] * (self.channel.noise() + interference)
            })
            .collect()
    }

    /// Each flow radiates just enough to leave the other exactly at its
    /// demand: the inverse reading of the same affine system, solved
    /// through the gain its own transmitter leaks into the other receiver.
    /// Raw negative power floors at zero.
    pub fn altruistic_power_response(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.require_two_flows("the altruistic power response")?;
        (0..2)
            .map(|i| {
                let o = 1 - i;
                let leak = self.channel.gain(i, o);
                if leak == 0.0 {
                    return Err(Error::Domain(
                        "a zero cross gain leaves the altruistic response undetermined".into(),
                    ));
                }
                Ok(((q[o] / self.scaled_targets[o] - self.channel.noise()) / leak).max(0.0))
            })
            .collect()
    }

    /// Exact simultaneous solution of the selfish response system.
    pub fn power_nep(&self) -> Result<PowerNep> {
        let n = self.channel.dim();
        let mut a = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    a[(i, j)] = -self.scaled_targets[i] * self.channel.gain(j, i);
                }
            }
        }
        let b = DVector::from_iterator(
            n,
            self.scaled_targets.iter().map(|t| t * self.channel.noise()),
        );
        let q = a.lu().solve(&b).ok_or_else(|| {
            Error::NoSolution("the gain structure makes the equilibrium system singular".into())
        })?;
        let q: Vec<f64> = q.iter().copied().collect();
        let feasible = q.iter().all(|&x| x >= 0.0);
        Ok(PowerNep { q: StrategyVector(q), feasible })
    }

    /// Quadratic energy that decreases along the selfish relaxation
    /// `dq/dt = F(q) - q`, two flows.
    pub fn lyapunov_selfish(&self, q: &[f64]) -> Result<f64> {
        self.require_two_flows("the selfish power energy")?;
        let noise = self.channel.noise();
        let mut sum = 0.0;
        let mut prod = 1.0;
        for i in 0..2 {
            let o = 1 - i;
            let out = self.channel.gain(i, o) * self.scaled_targets[o];
            sum += out * (q[i] * q[i] / 2.0 - noise * self.scaled_targets[i] * q[i]);
            prod *= q[i] * self.channel.gain(i, o) * self.scaled_targets[i];
        }
        Ok(sum - prod)
    }

    /// Quadratic energy that decreases along the altruistic relaxation
    /// `dq/dt = G(q) - q`, two flows.
    pub fn lyapunov_altruistic(&self, q: &[f64]) -> Result<f64> {
        self.require_two_flows("the altruistic power energy")?;
        let noise = self.channel.noise();
        let mut sum = 0.0;
        let mut prod = 1.0;
        for i in 0..2 {
            let o = 1 - i;
            // The quadratic term carries the incoming cross gain so that
            // the gradient lines up with the outgoing-gain response; on a
            // symmetric channel the distinction disappears.
            let own = self.channel.gain(i, o) * self.scaled_targets[i];
            sum += q[i] * q[i] / (2.0 * self.channel.gain(o, i) * self.scaled_targets[i])
                + noise * q[i] / (self.channel.gain(i, o) * self.channel.gain(o, i)
                    * self.scaled_targets[i]);
            prod *= q[i] * (1.0 / own);
        }
        Ok(sum - prod)
    }

    /// The cross-coupling product that decides which relaxation is stable,
    /// with the verdicts spelled out. Exactly one of the two holds unless
    /// the product sits exactly at one.
    pub fn stability_products(&self) -> Result<StabilityProducts> {
        self.require_two_flows("the stability dichotomy")?;
        let product: f64 =
            (0..2).map(|i| self.channel.gain(i, 1 - i) * self.scaled_targets[i]).product();
        Ok(StabilityProducts {
            product,
            selfish_stable: product < 1.0,
            altruistic_stable: product > 1.0,
            marginal: product == 1.0,
        })
    }

    /// Default ceiling for power boxes and sweeps: an order of magnitude
    /// above the equilibrium. The model itself puts no cap on power; the
    /// box exists for numerics only.
    pub fn default_power_cap(&self) -> Result<f64> {
        let nep = self.power_nep()?;
        let norm = nep.q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Numeric("equilibrium norm vanishes; pass a cap explicitly".into()));
        }
        Ok(10.0 * norm)
    }
}

/// Solution of the affine equilibrium system. `feasible` is false when
/// the algebra demands a negative power somewhere.
#[derive(Debug, Clone)]
pub struct PowerNep {
    pub q: StrategyVector,
    pub feasible: bool,
}

/// The coupling product with its stability verdicts.
#[derive(Debug, Clone, Copy)]
pub struct StabilityProducts {
    pub product: f64,
    pub selfish_stable: bool,
    pub altruistic_stable: bool,
    pub marginal: bool,
}

/// Which power response drives a relaxation field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerResponseKind {
    Selfish,
    Altruistic,
}

/// Relaxation field of a power response on the box `[0, cap]` per flow.
/// Without an explicit `cap` the game's default ceiling is used.
pub fn power_field(
    game: &PowerGame,
    kind: PowerResponseKind,
    cap: Option<f64>,
) -> Result<VectorField> {
    if kind == PowerResponseKind::Altruistic {
        game.require_two_flows("the altruistic power response")?;
    }
    let cap = match cap {
        Some(c) if c > 0.0 && c.is_finite() => c,
        Some(c) => return Err(Error::Domain(format!("power cap must be positive, got {c}"))),
        None => game.default_power_cap()?,
    };
    let bounds = StateBox::uniform(game.channel().dim(), 0.0, cap)?;
    let game = game.clone();
    Ok(VectorField::from_response(bounds, move |q: &[f64]| match kind {
        PowerResponseKind::Selfish => game.selfish_power_response(q),
        PowerResponseKind::Altruistic => {
            game.altruistic_power_response(q).expect("dimension checked at construction")
        }
    }))
}

/// Knobs for the altruism sweep over power-priced objectives.
#[derive(Debug, Clone)]
pub struct PowerSweepOptions {
    /// Price per unit of radiated power inside the sweep objective. Kept
    /// separate from the game's currency normalization so the power
    /// tradeoff stays finite across the whole weight range.
    pub power_price: f64,
    /// Search ceiling per flow; defaults to the game's ceiling.
    pub power_cap: Option<f64>,
    /// Fixed-point residual (sup norm) below which a row counts as
    /// converged.
    pub residual_tol: f64,
    pub max_iterations: usize,
}

impl Default for PowerSweepOptions {
    fn default() -> Self {
        Self { power_price: 2e-3, power_cap: None, residual_tol: 1e-6, max_iterations: 20_000 }
    }
}

/// One row of the altruism sweep.
#[derive(Debug, Clone)]
pub struct PowerSweepRow {
    pub alpha: f64,
    pub equilibrium: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

const SWEEP_DAMPING: f64 = 0.2;

/// Track the weighted equilibrium across altruism weights.
///
/// Each flow maximizes its weighted objective (own weight `alpha`, rest
/// on the other flow) over its own power, utilities taken over frame
/// success and power priced per unit; a damped simultaneous-update
/// iteration finds the fixed point. Rows run in the order given so a
/// descending grid warm-starts each row from the last equilibrium.
/// Non-converged rows are recorded and the sweep continues.
pub fn power_cost_alpha_sweep(
    game: &PowerGame,
    alphas: &[f64],
    opts: &PowerSweepOptions,
) -> Result<Vec<PowerSweepRow>> {
    game.require_two_flows("the altruism sweep")?;
    if game.cost_basis() != CostBasis::Power {
        return Err(Error::Unsupported("the sweep prices radiated power".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Domain(format!("alpha must lie in [0,1], got {a}")));
    }
    if !(opts.power_price > 0.0) {
        return Err(Error::Domain(format!(
            "power price must be positive, got {}",
            opts.power_price
        )));
    }
    let cap = match opts.power_cap {
        Some(c) if c > 0.0 && c.is_finite() => c,
        Some(c) => return Err(Error::Domain(format!("power cap must be positive, got {c}"))),
        None => game.default_power_cap()?,
    };
    let utilities = game
        .demands()
        .iter()
        .map(|&y| UtilitySpec::arctan(y, game.price()))
        .collect::<Result<Vec<_>>>()?;
    let c = opts.power_price;

    let benefit = |j: usize, q: &[f64]| -> f64 {
        let success = game.modulation().frame_success(game.sinr(q, j));
        utilities[j].value(success).expect("frame success lies in [0,1]") - c * q[j]
    };
    let respond = |q: &[f64], alpha: f64| -> Vec<f64> {
        (0..2)
            .map(|i| {
                let o = 1 - i;
                let objective = |x: f64| {
                    let mut p = [q[0], q[1]];
                    p[i] = x;
                    alpha * benefit(i, &p) + (1.0 - alpha) * benefit(o, &p)
                };
                grid_then_golden_max(objective, 0.0, cap, GRID_POINTS, GOLDEN_TOL).0
            })
            .collect()
    };

    // Warm start at the unpriced equilibrium when it exists.
    let mut q: Vec<f64> = match game.power_nep() {
        Ok(nep) if nep.feasible => nep.q.0,
        _ => game.scaled_sinr_targets().iter().map(|t| t * game.channel().noise()).collect(),
    };
    for x in &mut q {
        *x = x.clamp(0.0, cap);
    }

    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut residual = f64::INFINITY;
        let mut iterations = opts.max_iterations;
        for it in 0..opts.max_iterations {
            let r = respond(&q, alpha);
            residual =
                q.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            if residual <= opts.residual_tol {
                iterations = it;
                break;
            }
            for (qi, ri) in q.iter_mut().zip(&r) {
                *qi += SWEEP_DAMPING * (ri - *qi);
            }
        }
        rows.push(PowerSweepRow {
            alpha,
            equilibrium: q.clone(),
            residual,
            iterations,
            converged: residual <= opts.residual_tol,
        });
    }
    Ok(rows)
}
