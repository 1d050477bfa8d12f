//! Slotted random-access game: throughput map, response maps under selfish,
//! altruistic, and blended objectives, exact interior equilibria, energy
//! functions, and closed-form stability criteria.

use crate::numeric::{grid_then_golden_max, polish_concave_argmax, GOLDEN_TOL, GRID_POINTS};
use crate::utility::UtilitySpec;
use crate::{Error, Result};

/// Default clipping box for transmission probabilities.
pub const DEFAULT_CLIP: (f64, f64) = (0.01, 0.99);

/// Residual bound under which a point is accepted as an equilibrium.
pub const NEP_RESIDUAL_TOL: f64 = 1e-6;

/// Whether a player's cost is charged per unit of served traffic or per
/// unit of transmission effort.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostBasis {
    Throughput,
    Power,
}

/// Joint play: one strategy per player (transmission probabilities here,
/// transmit powers in the power-control game).
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyVector(pub Vec<f64>);

impl StrategyVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All components strictly inside (0, 1).
    pub fn interior(&self) -> bool {
        self.0.iter().all(|&q| q > 0.0 && q < 1.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for StrategyVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StrategyVector {
    fn from(q: Vec<f64>) -> Self {
        StrategyVector(q)
    }
}

/// Closed-form local stability indicators at an interior equilibrium of the
/// two-player game: the equilibrium is stable under selfish play iff
/// `sigma_selfish < 1` and under altruistic play iff `sigma_altruistic < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCriteria {
    pub sigma_selfish: f64,
    pub sigma_altruistic: f64,
}

impl StabilityCriteria {
    pub fn stable_selfish(&self) -> bool {
        self.sigma_selfish < 1.0
    }

    pub fn stable_altruistic(&self) -> bool {
        self.sigma_altruistic < 1.0
    }
}

/// An interior equilibrium candidate; `outside_clip` marks points that the
/// clipped dynamics cannot reach because they fall outside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct NepPoint {
    pub q: StrategyVector,
    pub outside_clip: bool,
}

/// Two-or-more-player random-access game. Immutable after construction;
/// every operation is pure.
#[derive(Debug, Clone)]
pub struct AlohaGame {
    players: Vec<UtilitySpec>,
    demands: Vec<f64>,
    alpha: f64,
    clip: (f64, f64),
    cost_basis: CostBasis,
}

impl AlohaGame {
    pub fn new(
        players: Vec<UtilitySpec>,
        alpha: f64,
        clip: (f64, f64),
        cost_basis: CostBasis,
    ) -> Result<Self> {
        if players.len() < 2 {
            return Err(Error::Domain("need at least two players".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0,1], got {alpha}")));
        }
        if !(0.0 < clip.0 && clip.0 < clip.1 && clip.1 < 1.0) {
            return Err(Error::Domain(format!(
                "clip box must satisfy 0 < min < max < 1, got ({}, {})",
                clip.0, clip.1
            )));
        }
        let demands = players
            .iter()
            .map(|p| p.demand())
            .collect::<Result<Vec<_>>>()?;
        // The slot-throughput game needs demands that a shared slot can
        // actually carry. Power-based costs put no such ceiling on play:
        // responses get clipped instead, so only positivity is required.
        let ceiling = match cost_basis {
            CostBasis::Throughput => 1.0,
            CostBasis::Power => f64::INFINITY,
        };
        if let Some(y) = demands.iter().find(|&&y| !(y > 0.0 && y < ceiling)) {
            return Err(Error::Domain(format!(
                "demand {y} falls outside (0,{ceiling}); no meaningful play"
            )));
        }
        Ok(Self { players, demands, alpha, clip, cost_basis })
    }

    /// Game with unit price and utilities pinned so that the demands come
    /// out exactly as given.
    pub fn from_demands(demands: &[f64], alpha: f64) -> Result<Self> {
        let players = demands
            .iter()
            .map(|&y| UtilitySpec::arctan(y, 1.0))
            .collect::<Result<Vec<_>>>()?;
        Self::new(players, alpha, DEFAULT_CLIP, CostBasis::Throughput)
    }

    /// Same game at a different altruism weight.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0,1], got {alpha}")));
        }
        let mut g = self.clone();
        g.alpha = alpha;
        Ok(g)
    }

    /// Same game with a different clipping box.
    pub fn with_clip(&self, clip: (f64, f64)) -> Result<Self> {
        if !(0.0 < clip.0 && clip.0 < clip.1 && clip.1 < 1.0) {
            return Err(Error::Domain(format!(
                "clip box must satisfy 0 < min < max < 1, got ({}, {})",
                clip.0, clip.1
            )));
        }
        let mut g = self.clone();
        g.clip = clip;
        Ok(g)
    }

    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[UtilitySpec] {
        &self.players
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn clip(&self) -> (f64, f64) {
        self.clip
    }

    pub fn cost_basis(&self) -> CostBasis {
        self.cost_basis
    }

    fn require_two_players(&self, what: &str) -> Result<()> {
        if self.players.len() != 2 {
            return Err(Error::Unsupported(format!(
                "{what} is defined for two players, game has {}",
                self.players.len()
            )));
        }
        Ok(())
    }

    fn clamp(&self, x: f64) -> f64 {
        // NaN-free inputs only; f64::clamp maps +-inf to the bounds.
        x.clamp(self.clip.0, self.clip.1)
    }

    /// Per-player success rate: own attempt rate times the probability that
    /// every other player stays silent.
    pub fn throughput(&self, q: &[f64]) -> Vec<f64> {
        debug_assert_eq!(q.len(), self.players.len());
        (0..q.len())
            .map(|i| {
                let others: f64 =
                    q.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &qj)| 1.0 - qj).product();
                q[i] * others
            })
            .collect()
    }

    /// Unclipped selfish target for player `i`: the attempt rate that would
    /// serve the demand given everyone else's play. Infinite when the other
    /// players jam the slot completely.
    pub fn selfish_response_raw(&self, i: usize, q: &[f64]) -> f64 {
        let others: f64 =
            q.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &qj)| 1.0 - qj).product();
        if others == 0.0 {
            f64::INFINITY
        } else {
            self.demands[i] / others
        }
    }

    /// Clipped selfish best response, any number of players.
    pub fn selfish_response(&self, q: &[f64]) -> StrategyVector {
        StrategyVector((0..q.len()).map(|i| self.clamp(self.selfish_response_raw(i, q))).collect())
    }

    /// Unclipped altruistic target: back off until the other player's
    /// demand share of their own attempt rate is ceded.
    pub fn altruistic_response_raw(&self, i: usize, q: &[f64]) -> f64 {
        let o = 1 - i;
        if q[o] == 0.0 {
            f64::NEG_INFINITY
        } else {
            1.0 - self.demands[o] / q[o]
        }
    }

    /// Clipped altruistic best response (two players).
    pub fn altruistic_response(&self, q: &[f64]) -> Result<StrategyVector> {
        self.require_two_players("altruistic response")?;
        Ok(StrategyVector(
            (0..2).map(|i| self.clamp(self.altruistic_response_raw(i, q))).collect(),
        ))
    }

    /// Net benefit of player `j` at joint play `q`: utility of the served
    /// rate minus the cost of obtaining it.
    pub fn net_benefit(&self, j: usize, q: &[f64]) -> Result<f64> {
        let g = self.throughput(q);
        let u = self.players[j].value(g[j])?;
        let cost = match self.cost_basis {
            CostBasis::Throughput => self.players[j].price * g[j],
            CostBasis::Power => self.players[j].price * q[j],
        };
        Ok(u - cost)
    }

    /// Play of player `i` that maximizes its altruism-weighted objective
    /// `alpha * own net benefit + (1 - alpha) * other's net benefit` over
    /// the clip box, holding the opponent fixed (two players).
    ///
    /// A coarse grid pass brackets the maximum, golden-section search
    /// refines it, and a root of the analytic directional derivative
    /// polishes the result (the objective is concave in own play for the
    /// supported families, so the derivative is decreasing).
    pub fn partial_response(&self, i: usize, q: &[f64]) -> Result<f64> {
        self.require_two_players("partial response")?;
        if !self.players.iter().all(|p| p.is_concave()) {
            return Err(Error::Unsupported(
                "partial response needs strictly concave utilities".into(),
            ));
        }
        let o = 1 - i;
        let qo = q[o];
        let a = self.alpha;
        let (own, other) = (&self.players[i], &self.players[o]);

        let objective = |qi: f64| -> f64 {
            let gi = qi * (1.0 - qo);
            let go = qo * (1.0 - qi);
            let (ci, co) = match self.cost_basis {
                CostBasis::Throughput => (own.price * gi, other.price * go),
                CostBasis::Power => (own.price * qi, other.price * qo),
            };
            a * (own.value(gi).unwrap() - ci) + (1.0 - a) * (other.value(go).unwrap() - co)
        };
        let (x0, _) = grid_then_golden_max(objective, self.clip.0, self.clip.1, GRID_POINTS, GOLDEN_TOL);

        let derivative = |qi: f64| -> f64 {
            let gi = qi * (1.0 - qo);
            let go = qo * (1.0 - qi);
            let mi = own.marginal(gi).unwrap();
            let mo = other.marginal(go).unwrap();
            match self.cost_basis {
                CostBasis::Throughput => {
                    a * (mi - own.price) * (1.0 - qo) - (1.0 - a) * (mo - other.price) * qo
                }
                CostBasis::Power => a * (mi * (1.0 - qo) - own.price) - (1.0 - a) * mo * qo,
            }
        };
        Ok(polish_concave_argmax(derivative, self.clip.0, self.clip.1, x0))
    }

    /// [`partial_response`](Self::partial_response) for every player.
    pub fn partial_response_vec(&self, q: &[f64]) -> Result<StrategyVector> {
        Ok(StrategyVector(
            (0..q.len()).map(|i| self.partial_response(i, q)).collect::<Result<Vec<_>>>()?,
        ))
    }

    /// Componentwise convex combination of the clipped selfish and
    /// altruistic responses, weighted by the game's altruism parameter.
    pub fn blended_response_linear(&self, q: &[f64]) -> Result<StrategyVector> {
        self.require_two_players("blended response")?;
        let f = self.selfish_response(q);
        let g = self.altruistic_response(q)?;
        let a = self.alpha;
        Ok(StrategyVector((0..2).map(|i| a * f[i] + (1.0 - a) * g[i]).collect()))
    }

    /// Altruistic target reweighted by the squared odds against own
    /// transmission; unclipped. Signed infinities stand for saturation at
    /// the box edge; the exact zero-times-infinity corner resolves to 0.
    pub fn weighted_altruistic_raw(&self, i: usize, q: &[f64]) -> f64 {
        let o = 1 - i;
        let lead = if q[o] == 0.0 { f64::NEG_INFINITY } else { 1.0 - self.demands[o] / q[o] };
        let yi = self.demands[i];
        if q[i] == 0.0 {
            return match lead.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => f64::INFINITY,
                Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
                _ => 0.0,
            };
        }
        let odds = 1.0 / q[i] - 1.0;
        lead * yi * yi * odds * odds
    }

    /// Blend of the raw selfish target with the reweighted altruistic
    /// target, clipped once at the end.
    ///
    /// Blending before the box is applied is what makes the blend's energy
    /// function ([`lyapunov_blend`](Self::lyapunov_blend)) decrease along
    /// the induced dynamics.
    pub fn blended_response_weighted(&self, q: &[f64]) -> Result<StrategyVector> {
        self.require_two_players("blended response")?;
        let a = self.alpha;
        Ok(StrategyVector(
            (0..2)
                .map(|i| {
                    let f = self.selfish_response_raw(i, q);
                    let g = self.weighted_altruistic_raw(i, q);
                    // a*inf at a=0 would be NaN; fold weights explicitly.
                    let raw = if a == 0.0 {
                        g
                    } else if a == 1.0 {
                        f
                    } else {
                        a * f + (1.0 - a) * g
                    };
                    self.clamp(raw)
                })
                .collect(),
        ))
    }

    /// Discriminant of the interior-equilibrium quadratic (two players);
    /// negative means no interior equilibrium exists.
    pub fn nep_discriminant(&self) -> Result<f64> {
        self.require_two_players("interior equilibria")?;
        let (y1, y2) = (self.demands[0], self.demands[1]);
        let b = 1.0 + y1 - y2;
        Ok(b * b - 4.0 * y1)
    }

    /// All interior equilibria of the unclipped game, exactly, by the
    /// quadratic formula (two players). Points outside the clip box are
    /// returned but flagged: existence is a property of the game, the box
    /// is a property of the dynamics.
    pub fn interior_neps(&self) -> Result<Vec<NepPoint>> {
        let disc = self.nep_discriminant()?;
        if disc < 0.0 {
            return Ok(Vec::new());
        }
        let (y1, y2) = (self.demands[0], self.demands[1]);
        let b = 1.0 + y1 - y2;
        let root = disc.sqrt();
        let mut q1s = vec![0.5 * (b - root)];
        if disc > 0.0 {
            q1s.push(0.5 * (b + root));
        }
        let mut out = Vec::new();
        for q1 in q1s {
            if !(0.0 < q1 && q1 < 1.0) {
                continue;
            }
            let q2 = y2 / (1.0 - q1);
            if !(0.0 < q2 && q2 < 1.0) {
                continue;
            }
            let outside_clip = [q1, q2]
                .iter()
                .any(|&c| c < self.clip.0 || c > self.clip.1);
            out.push(NepPoint { q: StrategyVector(vec![q1, q2]), outside_clip });
        }
        Ok(out)
    }

    /// Energy function of the selfish dynamics, any number of players.
    /// Decreases along trajectories of the clipped selfish better response.
    pub fn lyapunov_selfish(&self, q: &[f64]) -> Result<f64> {
        if q.iter().any(|&qi| qi >= 1.0) {
            return Err(Error::Domain("selfish energy is singular at q = 1".into()));
        }
        let y = &self.demands;
        let n = q.len();
        let all: f64 = (0..n).map(|i| y[i] / (1.0 - q[i])).product();
        let mut sum = 0.0;
        for i in 0..n {
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| y[j]).product();
            sum += (q[i] / (1.0 - q[i]) + (1.0 - q[i]).ln()) * others;
        }
        Ok(-all + sum)
    }

    /// Energy function of the altruistic dynamics (two players).
    pub fn lyapunov_altruistic(&self, q: &[f64]) -> Result<f64> {
        self.require_two_players("altruistic energy")?;
        if q.iter().any(|&qi| qi <= 0.0) {
            return Err(Error::Domain("altruistic energy is singular at q = 0".into()));
        }
        let y = &self.demands;
        let prod: f64 = (0..2).map(|i| 1.0 - y[i] / q[i]).product();
        let sum: f64 = (0..2).map(|i| y[i] * q[i].ln()).sum();
        Ok(-prod + sum)
    }

    /// Energy function of the weighted-blend dynamics at the game's
    /// altruism parameter (two players). Coincides with the selfish energy
    /// at full selfishness.
    pub fn lyapunov_blend(&self, q: &[f64]) -> Result<f64> {
        self.require_two_players("blend energy")?;
        if q.iter().any(|&qi| qi <= 0.0 || qi >= 1.0) {
            return Err(Error::Domain("blend energy is singular at q = 0 and q = 1".into()));
        }
        let y = &self.demands;
        let a = self.alpha;
        let selfish_prod: f64 = (0..2).map(|i| y[i] / (1.0 - q[i])).product();
        let ceded_prod: f64 = (0..2).map(|i| y[i] - y[i] * y[i] / q[i]).product();
        let sum: f64 = (0..2)
            .map(|i| (q[i] / (1.0 - q[i]) + (1.0 - q[i]).ln()) * y[1 - i])
            .sum();
        Ok(-a * selfish_prod - (1.0 - a) * ceded_prod + sum)
    }

    /// Deviation of `q` from the interior equilibrium condition: each
    /// player's served rate must equal its demand.
    pub fn nep_residual(&self, q: &[f64]) -> f64 {
        self.throughput(q)
            .iter()
            .zip(&self.demands)
            .map(|(g, y)| (g - y).abs())
            .fold(0.0, f64::max)
    }

    /// Closed-form stability indicators at an interior equilibrium (two
    /// players). Rejected off equilibrium: the formulas mean nothing there.
    pub fn stability_criteria(&self, q: &[f64]) -> Result<StabilityCriteria> {
        self.require_two_players("stability criteria")?;
        let res = self.nep_residual(q);
        if res > NEP_RESIDUAL_TOL {
            return Err(Error::Precondition(format!(
                "point is not an interior equilibrium (residual {res:.3e})"
            )));
        }
        let y = self.demands[0] * self.demands[1];
        let (q1, q2) = (q[0], q[1]);
        Ok(StabilityCriteria {
            sigma_selfish: y / ((1.0 - q1) * (1.0 - q1) * (1.0 - q2) * (1.0 - q2)),
            sigma_altruistic: y / (q1 * q1 * q2 * q2),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const Y: (f64, f64) = (8.0 / 15.0, 1.0 / 15.0);

    fn canonical(alpha: f64) -> AlohaGame {
        AlohaGame::from_demands(&[Y.0, Y.1], alpha).unwrap()
    }

    #[test]
    fn throughput_at_both_equilibria() {
        let g = canonical(1.0);
        let t = g.throughput(&[2.0 / 3.0, 0.2]);
        assert_relative_eq!(t[0], Y.0, epsilon = 1e-15);
        assert_relative_eq!(t[1], Y.1, epsilon = 1e-15);
        let t = g.throughput(&[0.8, 1.0 / 3.0]);
        assert_relative_eq!(t[0], Y.0, epsilon = 1e-15);
        assert_relative_eq!(t[1], Y.1, epsilon = 1e-15);
        assert_eq!(g.throughput(&[1.0, 1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn throughput_three_players() {
        let g = AlohaGame::from_demands(&[0.2, 0.3, 0.1], 1.0).unwrap();
        let t = g.throughput(&[0.5, 0.4, 0.3]);
        assert_relative_eq!(t[0], 0.5 * 0.6 * 0.7, epsilon = 1e-15);
        assert_relative_eq!(t[1], 0.4 * 0.5 * 0.7, epsilon = 1e-15);
        assert_relative_eq!(t[2], 0.3 * 0.5 * 0.6, epsilon = 1e-15);
    }

    #[test]
    fn selfish_response_fixes_equilibria() {
        let g = canonical(1.0);
        for nep in [[2.0 / 3.0, 0.2], [0.8, 1.0 / 3.0]] {
            let r = g.selfish_response(&nep);
            assert_relative_eq!(r[0], nep[0], epsilon = 1e-14);
            assert_relative_eq!(r[1], nep[1], epsilon = 1e-14);
        }
    }

    #[test]
    fn selfish_response_origin_and_clip() {
        let g = canonical(1.0);
        let r = g.selfish_response(&[0.0, 0.0]);
        assert_eq!(r.as_slice(), &[Y.0, Y.1]);
        // Opponent at 0.5 pushes the raw target past the box.
        let r = g.selfish_response(&[0.3, 0.5]);
        assert_eq!(r[0], 0.99);
        // A jammed slot saturates at the top of the box.
        let r = g.selfish_response(&[0.3, 1.0]);
        assert_eq!(r[0], 0.99);
    }

    #[test]
    fn altruistic_response_fixes_equilibria() {
        let g = canonical(0.0);
        for nep in [[2.0 / 3.0, 0.2], [0.8, 1.0 / 3.0]] {
            let r = g.altruistic_response(&nep).unwrap();
            assert_relative_eq!(r[0], nep[0], epsilon = 1e-14);
            assert_relative_eq!(r[1], nep[1], epsilon = 1e-14);
        }
    }

    #[test]
    fn altruistic_response_edge_cases() {
        let g = canonical(0.0);
        // Opponent plays exactly its demand: raw target 0 clips to the floor.
        let r = g.altruistic_response(&[0.5, Y.1]).unwrap();
        assert_eq!(r[0], 0.01);
        // Silent opponent saturates at the floor.
        let r = g.altruistic_response(&[0.5, 0.0]).unwrap();
        assert_eq!(r[0], 0.01);
    }

    #[test]
    fn partial_response_matches_selfish_at_full_weight() {
        let g = canonical(1.0);
        for q in [[0.3, 0.25], [0.6, 0.22], [0.5, 0.5], [0.9, 0.05]] {
            let f = g.selfish_response(&q);
            for i in 0..2 {
                let p = g.partial_response(i, &q).unwrap();
                assert_abs_diff_eq!(p, f[i], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn partial_response_matches_altruistic_at_zero_weight() {
        let g = canonical(0.0);
        for q in [[0.3, 0.25], [0.6, 0.22], [0.7, 0.4]] {
            let alt = g.altruistic_response(&q).unwrap();
            for i in 0..2 {
                let p = g.partial_response(i, &q).unwrap();
                assert_abs_diff_eq!(p, alt[i], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn partial_response_reference_points() {
        let g = canonical(0.5);
        assert_abs_diff_eq!(
            g.partial_response(0, &[0.5, 0.3]).unwrap(),
            0.762_372_416_805_031_1,
            epsilon = 1e-9
        );
        let g = canonical(0.25);
        assert_abs_diff_eq!(
            g.partial_response(0, &[0.5, 0.22]).unwrap(),
            0.684_255_670_854_737,
            epsilon = 1e-9
        );
    }

    #[test]
    fn partial_response_fixes_equilibrium_at_any_weight() {
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let g = canonical(alpha);
            for nep in [[2.0 / 3.0, 0.2], [0.8, 1.0 / 3.0]] {
                for i in 0..2 {
                    let p = g.partial_response(i, &nep).unwrap();
                    assert_abs_diff_eq!(p, nep[i], epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn partial_response_rejects_linear_utilities() {
        let players = vec![
            UtilitySpec::arctan(0.5, 1.0).unwrap(),
            UtilitySpec::linear(2.0, 1.0).unwrap(),
        ];
        // Construction itself fails: a linear player has no demand level.
        assert!(AlohaGame::new(players, 0.5, DEFAULT_CLIP, CostBasis::Throughput).is_err());
    }

    #[test]
    fn linear_blend_endpoints() {
        let q = [0.45, 0.3];
        let g1 = canonical(1.0);
        assert_eq!(
            g1.blended_response_linear(&q).unwrap().as_slice(),
            g1.selfish_response(&q).as_slice()
        );
        let g0 = canonical(0.0);
        assert_eq!(
            g0.blended_response_linear(&q).unwrap().as_slice(),
            g0.altruistic_response(&q).unwrap().as_slice()
        );
        // Both constituents fix the equilibrium, so any blend does.
        let g = canonical(0.5);
        let r = g.blended_response_linear(&[2.0 / 3.0, 0.2]).unwrap();
        assert_relative_eq!(r[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(r[1], 0.2, epsilon = 1e-14);
    }

    #[test]
    fn weighted_altruistic_reference_values() {
        let g = canonical(0.0);
        let q = [0.5, 0.5];
        assert_relative_eq!(
            g.weighted_altruistic_raw(0, &q),
            0.24651851851851852,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            g.weighted_altruistic_raw(1, &q),
            -2.962_962_962_962_963e-4,
            epsilon = 1e-15
        );
        // Negative raw target clips to the floor at full altruism.
        let r = g.blended_response_weighted(&q).unwrap();
        assert_eq!(r[1], 0.01);
        // Opponent playing exactly its demand zeroes the lead factor.
        assert_eq!(g.weighted_altruistic_raw(0, &[0.5, Y.1]), 0.0);
    }

    #[test]
    fn weighted_blend_handles_zero_components() {
        let g = canonical(0.3);
        // q[0] = 0 with a positive lead factor: target saturates upward.
        let r = g.blended_response_weighted(&[0.0, 0.5]).unwrap();
        assert_eq!(r[0], 0.99);
        // Silent opponent: lead factor -inf, floor.
        let r = g.blended_response_weighted(&[0.5, 0.0]).unwrap();
        assert_eq!(r[0], 0.01);
        // Double corner: q = (0, demand) resolves the 0 * inf product to 0.
        assert_eq!(g.weighted_altruistic_raw(0, &[0.0, Y.1]), 0.0);
    }

    #[test]
    fn interior_neps_canonical_pair() {
        let g = canonical(1.0);
        let neps = g.interior_neps().unwrap();
        assert_eq!(neps.len(), 2);
        assert_abs_diff_eq!(neps[0].q[0], 2.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(neps[0].q[1], 0.2, epsilon = 1e-13);
        assert_abs_diff_eq!(neps[1].q[0], 0.8, epsilon = 1e-13);
        assert_abs_diff_eq!(neps[1].q[1], 1.0 / 3.0, epsilon = 1e-13);
        assert!(!neps[0].outside_clip);
        assert!(!neps[1].outside_clip);
        assert_relative_eq!(g.nep_discriminant().unwrap(), 4.0 / 225.0, epsilon = 1e-12);
    }

    #[test]
    fn interior_neps_empty_when_discriminant_negative() {
        let g = AlohaGame::from_demands(&[0.3, 0.3], 1.0).unwrap();
        assert!(g.nep_discriminant().unwrap() < 0.0);
        assert!(g.interior_neps().unwrap().is_empty());
    }

    #[test]
    fn interior_neps_symmetric_pair() {
        let g = AlohaGame::from_demands(&[0.2, 0.2], 1.0).unwrap();
        let neps = g.interior_neps().unwrap();
        assert_eq!(neps.len(), 2);
        for nep in &neps {
            assert_relative_eq!(nep.q[0], nep.q[1], epsilon = 1e-12);
            assert_relative_eq!(nep.q[0] * (1.0 - nep.q[1]), 0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn interior_neps_outside_clip_flagged() {
        let g = canonical(1.0).with_clip((0.3, 0.7)).unwrap();
        let neps = g.interior_neps().unwrap();
        assert_eq!(neps.len(), 2);
        assert!(neps[0].outside_clip); // q2 = 0.2 < 0.3
        assert!(neps[1].outside_clip); // q1 = 0.8 > 0.7
    }

    #[test]
    fn lyapunov_selfish_reference_values() {
        let g = canonical(1.0);
        assert_relative_eq!(
            g.lyapunov_selfish(&[0.0, 0.0]).unwrap(),
            -Y.0 * Y.1,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            g.lyapunov_selfish(&[2.0 / 3.0, 0.2]).unwrap(),
            -0.058917379945452516,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            g.lyapunov_selfish(&[0.8, 1.0 / 3.0]).unwrap(),
            -0.056877251819961029,
            epsilon = 1e-14
        );
        assert!(g.lyapunov_selfish(&[1.0, 0.5]).is_err());
    }

    #[test]
    fn lyapunov_altruistic_reference_values() {
        let g = canonical(0.0);
        assert_relative_eq!(
            g.lyapunov_altruistic(&[2.0 / 3.0, 0.2]).unwrap(),
            -0.456_877_251_819_961,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            g.lyapunov_altruistic(&[0.8, 1.0 / 3.0]).unwrap(),
            -0.458_917_379_945_452_5,
            epsilon = 1e-14
        );
        // At q = y the product term vanishes.
        let v = g.lyapunov_altruistic(&[Y.0, Y.1]).unwrap();
        assert_relative_eq!(v, Y.0 * Y.0.ln() + Y.1 * Y.1.ln(), epsilon = 1e-14);
        assert!(g.lyapunov_altruistic(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn lyapunov_blend_reference_values() {
        let g = canonical(0.3);
        assert_relative_eq!(
            g.lyapunov_blend(&[0.5, 0.5]).unwrap(),
            0.14288304968872417,
            epsilon = 1e-14
        );
        // Full selfishness collapses the blend energy onto the selfish one.
        let g1 = canonical(1.0);
        assert_relative_eq!(
            g1.lyapunov_blend(&[0.4, 0.3]).unwrap(),
            g1.lyapunov_selfish(&[0.4, 0.3]).unwrap(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            g1.lyapunov_blend(&[0.4, 0.3]).unwrap(),
            -0.035921889991934955,
            epsilon = 1e-14
        );
    }

    #[test]
    fn blend_energy_gradient_matches_response_defect() {
        // d(energy)/dq_i = -(blend_target_i - q_i) * y_other / (1 - q_i)^2
        // at raw-interior points; checked against central differences.
        let g = canonical(0.3);
        let q = [0.4, 0.3];
        let r = g.blended_response_weighted(&q).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[i] += h;
            qm[i] -= h;
            let fd = (g.lyapunov_blend(&qp).unwrap() - g.lyapunov_blend(&qm).unwrap()) / (2.0 * h);
            let y_other = g.demands()[1 - i];
            let analytic = -(r[i] - q[i]) * y_other / ((1.0 - q[i]) * (1.0 - q[i]));
            assert_relative_eq!(fd, analytic, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn altruistic_energy_gradient_matches_response_defect() {
        let g = canonical(0.0);
        let q = [0.45, 0.28];
        let h = 1e-6;
        for i in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[i] += h;
            qm[i] -= h;
            let fd = (g.lyapunov_altruistic(&qp).unwrap() - g.lyapunov_altruistic(&qm).unwrap())
                / (2.0 * h);
            let y = g.demands()[i];
            let raw = g.altruistic_response_raw(i, &q);
            let analytic = (y / (q[i] * q[i])) * (q[i] - raw);
            assert_relative_eq!(fd, analytic, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn stability_criteria_table_values() {
        let g = canonical(1.0);
        let c = g.stability_criteria(&[2.0 / 3.0, 0.2]).unwrap();
        assert_abs_diff_eq!(c.sigma_selfish, 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(c.sigma_altruistic, 2.0, epsilon = 1e-13);
        assert!(c.stable_selfish() && !c.stable_altruistic());

        let c = g.stability_criteria(&[0.8, 1.0 / 3.0]).unwrap();
        assert_abs_diff_eq!(c.sigma_selfish, 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(c.sigma_altruistic, 0.5, epsilon = 1e-13);
        assert!(!c.stable_selfish() && c.stable_altruistic());
    }

    #[test]
    fn stability_criteria_reject_non_equilibrium() {
        let g = canonical(1.0);
        assert!(matches!(
            g.stability_criteria(&[0.5, 0.5]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn stability_criteria_symmetric_split() {
        // Symmetric equilibrium q (1 - q) = y: selfish stability holds below
        // q = 1/2, altruistic stability above, by direct substitution.
        let q = 0.3;
        let y = q * (1.0 - q);
        let g = AlohaGame::from_demands(&[y, y], 1.0).unwrap();
        let c = g.stability_criteria(&[q, q]).unwrap();
        assert_relative_eq!(c.sigma_selfish, (q / (1.0 - q)).powi(2), epsilon = 1e-12);
        assert_relative_eq!(c.sigma_altruistic, ((1.0 - q) / q).powi(2), epsilon = 1e-12);
        assert!(c.stable_selfish() && !c.stable_altruistic());
    }

    proptest! {
        // Every interior equilibrium is fixed by the altruism-weighted
        // response, whatever the weight.
        #[test]
        fn equilibria_invariant_under_altruism_weight(
            y1 in 0.35f64..0.7,
            dy in 0.05f64..0.3,
            alpha in 0.0f64..=1.0,
        ) {
            let y2 = (y1 - dy).max(0.02);
            let game = AlohaGame::from_demands(&[y1, y2], alpha).unwrap();
            let neps = game.interior_neps().unwrap();
            for nep in neps.iter().filter(|n| !n.outside_clip) {
                for i in 0..2 {
                    let p = game.partial_response(i, &nep.q).unwrap();
                    prop_assert!((p - nep.q[i]).abs() < 1e-6,
                        "weight {alpha}: response {p} vs equilibrium {}", nep.q[i]);
                }
            }
        }

        // At an interior equilibrium with q1 + q2 < 1, the two closed-form
        // stability predicates cannot hold simultaneously.
        #[test]
        fn criteria_mutually_exclusive_below_diagonal(
            y1 in 0.3f64..0.75,
            dy in 0.02f64..0.35,
        ) {
            let y2 = (y1 - dy).max(0.02);
            let game = AlohaGame::from_demands(&[y1, y2], 1.0).unwrap();
            for nep in game.interior_neps().unwrap() {
                if nep.q[0] + nep.q[1] < 1.0 {
                    let c = game.stability_criteria(&nep.q).unwrap();
                    prop_assert!(!(c.stable_selfish() && c.stable_altruistic()));
                }
            }
        }
    }
}
