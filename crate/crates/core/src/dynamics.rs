//! Better-response dynamics: fixed-step integration, equilibrium
//! classification by linearization, altruism-weight sweeps, basin sampling,
//! and energy-descent bookkeeping.
//!
//! The flow is always the relaxation `dq/dt = R(q) - q` toward a response
//! map `R`, confined to a box by projection.

use nalgebra::DMatrix;
// Part of this module's public surface through `EquilibriumReport`.
pub use nalgebra::Complex;
use rayon::prelude::*;

use crate::aloha::{AlohaGame, StabilityCriteria, StrategyVector};
use crate::{Error, Result};

/// Largest admitted integration step; the relaxation rate is one, so larger
/// steps lose the descent property long before they lose stability.
pub const MAX_DT: f64 = 0.1;

/// Positive energy increments above this are counted as descent violations.
pub const DESCENT_TOL: f64 = 1e-9;

/// Residual bound for classifying a point as an equilibrium of a field.
pub const FIELD_RESIDUAL_TOL: f64 = 1e-6;

/// Eigenvalue real parts within this of zero defeat linearization.
pub const HYPERBOLIC_EPS: f64 = 1e-8;

/// Damping factor of the discrete fixed-point iteration.
pub const FIXED_POINT_DAMPING: f64 = 0.2;

/// Iteration cap of [`find_fixed_point`].
pub const FIXED_POINT_MAX_ITER: usize = 100_000;

/// Componentwise state bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl StateBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Domain("state box bounds must have equal, positive length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::Domain("state box needs lo < hi componentwise".into()));
        }
        Ok(Self { lo, hi })
    }

    /// Same bounds in every coordinate.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.dim()
            && q.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&x, (&a, &b))| x >= a && x <= b)
    }

    /// Distance from `q` to the nearest face; negative outside.
    pub fn boundary_distance(&self, q: &[f64]) -> f64 {
        q.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&a, &b))| (x - a).min(b - x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn project(&self, q: &mut [f64]) {
        for (x, (&a, &b)) in q.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *x = x.clamp(a, b);
        }
    }
}

/// Boxed response map backing a [`VectorField`].
type ResponseFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Borrowed energy observer sampled along integrated trajectories.
pub type EnergyFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// A relaxation field toward a response map, confined to a box.
pub struct VectorField {
    bounds: StateBox,
    response: ResponseFn,
}

impl VectorField {
    pub fn from_response(
        bounds: StateBox,
        response: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { bounds, response: Box::new(response) }
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &StateBox {
        &self.bounds
    }

    /// The response target `R(q)`.
    pub fn response(&self, q: &[f64]) -> Vec<f64> {
        (self.response)(q)
    }

    /// The velocity `R(q) - q`.
    pub fn velocity(&self, q: &[f64]) -> Vec<f64> {
        let mut v = self.response(q);
        for (vi, qi) in v.iter_mut().zip(q) {
            *vi -= qi;
        }
        v
    }

    /// Sup-norm distance of `q` from being a fixed point of the response.
    pub fn residual(&self, q: &[f64]) -> f64 {
        self.velocity(q).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Which response map of the access game drives the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    Selfish,
    Altruistic,
    Partial,
    BlendLinear,
    BlendWeighted,
}

/// Relaxation field of an access-game response map on the game's clip box.
pub fn aloha_field(game: &AlohaGame, kind: ResponseKind) -> Result<VectorField> {
    let n = game.player_count();
    if n != 2 && kind != ResponseKind::Selfish {
        return Err(Error::Unsupported(format!(
            "{kind:?} response dynamics need exactly two players"
        )));
    }
    if kind == ResponseKind::Partial && !game.players().iter().all(|p| p.is_concave()) {
        return Err(Error::Unsupported(
            "partial response dynamics need strictly concave utilities".into(),
        ));
    }
    let (lo, hi) = game.clip();
    let bounds = StateBox::uniform(n, lo, hi)?;
    let game = game.clone();
    let response = move |q: &[f64]| -> Vec<f64> {
        let r = match kind {
            ResponseKind::Selfish => game.selfish_response(q),
            ResponseKind::Altruistic => game.altruistic_response(q).expect("checked: 2 players"),
            ResponseKind::Partial => {
                game.partial_response_vec(q).expect("checked: 2 concave players")
            }
            ResponseKind::BlendLinear => {
                game.blended_response_linear(q).expect("checked: 2 players")
            }
            ResponseKind::BlendWeighted => {
                game.blended_response_weighted(q).expect("checked: 2 players")
            }
        };
        r.0
    };
    Ok(VectorField::from_response(bounds, response))
}

/// Time-stamped path of an integrated trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Energy values along the path when an energy function was supplied.
    pub lyapunov: Option<Vec<f64>>,
    /// Count of energy increments above [`DESCENT_TOL`] between steps.
    pub descent_violations: usize,
}

/// Summary of the energy increments along a logged trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentReport {
    pub max_increment: f64,
    pub violations: usize,
}

/// Fixed point located by damped iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub q: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn rk4_step(field: &VectorField, q: &[f64], dt: f64) -> Vec<f64> {
    let k1 = field.velocity(q);
    let probe = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        base.iter().zip(k).map(|(&x, &v)| x + h * v).collect()
    };
    let k2 = field.velocity(&probe(q, &k1, 0.5 * dt));
    let k3 = field.velocity(&probe(q, &k2, 0.5 * dt));
    let k4 = field.velocity(&probe(q, &k3, dt));
    let mut next: Vec<f64> = (0..q.len())
        .map(|i| q[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    field.bounds.project(&mut next);
    next
}

/// Integrate the relaxation flow with fixed-step RK4, projecting onto the
/// box after every step. Logs energy values and counts descent violations
/// when an energy function is supplied.
pub fn integrate(
    field: &VectorField,
    q0: &[f64],
    dt: f64,
    t_end: f64,
    lyapunov: Option<EnergyFn>,
) -> Result<TrajectoryLog> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::Domain(format!("dt must lie in (0, {MAX_DT}], got {dt}")));
    }
    if !(t_end > 0.0) {
        return Err(Error::Domain(format!("t_end must be positive, got {t_end}")));
    }
    if !field.bounds.contains(q0) {
        return Err(Error::Domain("initial state is outside the box".into()));
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energies = lyapunov.map(|_| Vec::with_capacity(steps + 1));
    let mut violations = 0usize;

    let mut q = q0.to_vec();
    for k in 0..=steps {
        times.push(k as f64 * dt);
        if let (Some(f), Some(es)) = (lyapunov, energies.as_mut()) {
            let e = f(&q);
            if let Some(&prev) = es.last() {
                if e - prev > DESCENT_TOL {
                    violations += 1;
                }
            }
            es.push(e);
        }
        states.push(q.clone());
        if k < steps {
            q = rk4_step(field, &q, dt);
            if q.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite state after step {k} (t = {})",
                    k as f64 * dt
                )));
            }
        }
    }
    Ok(TrajectoryLog { times, states, lyapunov: energies, descent_violations: violations })
}

/// Summarize the energy increments of a logged trajectory.
pub fn descent_report(traj: &TrajectoryLog) -> Result<DescentReport> {
    let energies = traj
        .lyapunov
        .as_ref()
        .ok_or_else(|| Error::Precondition("trajectory carries no energy values".into()))?;
    let mut max_increment = 0.0f64;
    let mut violations = 0usize;
    for w in energies.windows(2) {
        let inc = w[1] - w[0];
        max_increment = max_increment.max(inc);
        if inc > DESCENT_TOL {
            violations += 1;
        }
    }
    Ok(DescentReport { max_increment, violations })
}

/// Damped fixed-point iteration `q <- q + eta (R(q) - q)` projected onto
/// the box, run until the response residual falls below `tol`.
pub fn find_fixed_point(field: &VectorField, q_start: &[f64], tol: f64) -> Result<FixedPoint> {
    if !field.bounds.contains(q_start) {
        return Err(Error::Domain("start is outside the box".into()));
    }
    let mut q = q_start.to_vec();
    let mut residual = f64::INFINITY;
    for it in 0..=FIXED_POINT_MAX_ITER {
        let r = field.response(&q);
        residual = q.iter().zip(&r).map(|(qi, ri)| (ri - qi).abs()).fold(0.0, f64::max);
        if residual < tol {
            return Ok(FixedPoint { q, residual, iterations: it });
        }
        for (qi, ri) in q.iter_mut().zip(&r) {
            *qi += FIXED_POINT_DAMPING * (ri - *qi);
        }
        field.bounds.project(&mut q);
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite iterate at iteration {it}")));
        }
    }
    Err(Error::Convergence(format!(
        "fixed-point iteration stalled at residual {residual:.3e} near {q:?}"
    )))
}

/// Central finite-difference Jacobian of the velocity field. The step
/// shrinks near the box so probes never cross it; points on the boundary
/// are rejected.
pub fn jacobian_fd(field: &VectorField, q: &[f64]) -> Result<DMatrix<f64>> {
    let n = field.dim();
    if q.len() != n || !field.bounds.contains(q) {
        return Err(Error::Domain("point is outside the box".into()));
    }
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let room = (q[j] - field.bounds.lo[j]).min(field.bounds.hi[j] - q[j]);
        let h = 1e-6f64.min(0.49 * room);
        if h <= 0.0 {
            return Err(Error::Domain(format!(
                "component {j} sits on the box boundary; no two-sided probe exists"
            )));
        }
        let mut qp = q.to_vec();
        let mut qm = q.to_vec();
        qp[j] += h;
        qm[j] -= h;
        let vp = field.velocity(&qp);
        let vm = field.velocity(&qm);
        for i in 0..n {
            jac[(i, j)] = (vp[i] - vm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Hartman-Grobman verdict for an equilibrium of the relaxation flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    StableNode,
    StableFocus,
    Saddle,
    Unstable,
    Boundary,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::StableNode => "stable-node",
            Classification::StableFocus => "stable-focus",
            Classification::Saddle => "saddle",
            Classification::Unstable => "unstable",
            Classification::Boundary => "boundary",
            Classification::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Location, linearization, and verdict for one equilibrium.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub location: Vec<f64>,
    pub residual: f64,
    /// Sorted by descending real part, then descending imaginary part.
    /// Empty for boundary points, where no two-sided linearization exists.
    pub eigenvalues: Vec<Complex<f64>>,
    pub classification: Classification,
    /// Closed-form indicators, attached by callers that know the game.
    pub criteria: Option<StabilityCriteria>,
}

impl EquilibriumReport {
    pub fn max_re(&self) -> Option<f64> {
        self.eigenvalues.iter().map(|e| e.re).fold(None, |m, re| Some(m.map_or(re, |x: f64| x.max(re))))
    }
}

fn eigenvalues_2x2(j: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let (a, b, c, d) = (j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        vec![Complex::new(0.5 * (tr + r), 0.0), Complex::new(0.5 * (tr - r), 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        vec![Complex::new(0.5 * tr, im), Complex::new(0.5 * tr, -im)]
    }
}

fn sorted_eigenvalues(j: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut eig: Vec<Complex<f64>> = if j.nrows() == 2 {
        eigenvalues_2x2(j)
    } else {
        j.clone().complex_eigenvalues().iter().copied().collect()
    };
    eig.sort_by(|x, y| {
        y.re.partial_cmp(&x.re).unwrap().then(y.im.partial_cmp(&x.im).unwrap())
    });
    eig
}

fn classify_eigenvalues(eig: &[Complex<f64>]) -> Classification {
    if eig.iter().any(|e| e.re.abs() <= HYPERBOLIC_EPS) {
        return Classification::Inconclusive;
    }
    let neg = eig.iter().filter(|e| e.re < 0.0).count();
    if neg == eig.len() {
        if eig.iter().any(|e| e.im.abs() > HYPERBOLIC_EPS) {
            Classification::StableFocus
        } else {
            Classification::StableNode
        }
    } else if neg == 0 {
        Classification::Unstable
    } else {
        Classification::Saddle
    }
}

/// Classify an equilibrium of the field by the eigenvalues of its
/// finite-difference Jacobian. The point must actually be an equilibrium
/// (residual below [`FIELD_RESIDUAL_TOL`]); boundary points are reported as
/// such without linearization.
pub fn classify(field: &VectorField, q: &[f64]) -> Result<EquilibriumReport> {
    let residual = field.residual(q);
    if !(residual <= FIELD_RESIDUAL_TOL) {
        return Err(Error::Precondition(format!(
            "not an equilibrium: residual {residual:.3e} exceeds {FIELD_RESIDUAL_TOL:.0e}"
        )));
    }
    if field.bounds.boundary_distance(q) <= 1e-9 {
        return Ok(EquilibriumReport {
            location: q.to_vec(),
            residual,
            eigenvalues: Vec::new(),
            classification: Classification::Boundary,
            criteria: None,
        });
    }
    let jac = jacobian_fd(field, q)?;
    let eigenvalues = sorted_eigenvalues(&jac);
    let classification = classify_eigenvalues(&eigenvalues);
    Ok(EquilibriumReport { location: q.to_vec(), residual, eigenvalues, classification, criteria: None })
}

/// One sweep cell: a (weight, equilibrium) pair and its verdict.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub alpha: f64,
    pub nep_index: usize,
    pub nep: Vec<f64>,
    pub max_re: Option<f64>,
    pub classification: Option<Classification>,
    pub error: Option<String>,
}

/// A located stability switch of one equilibrium.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdCrossing {
    pub nep_index: usize,
    /// Bracket of width at most 1e-3 containing the switch.
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// Bracket midpoint.
    pub alpha: f64,
}

/// Grid-plus-bisection sweep over the altruism weight.
#[derive(Debug, Clone)]
pub struct AlphaSweep {
    pub rows: Vec<SweepRow>,
    pub thresholds: Vec<ThresholdCrossing>,
}

fn partial_field_max_re(game: &AlohaGame, alpha: f64, nep: &[f64]) -> Result<f64> {
    let field = aloha_field(&game.with_alpha(alpha)?, ResponseKind::Partial)?;
    let jac = jacobian_fd(&field, nep)?;
    let eig = sorted_eigenvalues(&jac);
    Ok(eig[0].re)
}

/// Classify each equilibrium under the altruism-weighted response across a
/// weight grid, then bisect every detected stability switch down to a
/// bracket of width 1e-3.
///
/// Per-cell failures are recorded in the row and do not abort the sweep.
pub fn sweep_alpha(game: &AlohaGame, neps: &[StrategyVector], alphas: &[f64]) -> Result<AlphaSweep> {
    if game.player_count() != 2 {
        return Err(Error::Unsupported("weight sweeps need exactly two players".into()));
    }
    let mut rows = Vec::with_capacity(alphas.len() * neps.len());
    for (idx, nep) in neps.iter().enumerate() {
        for &alpha in alphas {
            let row = match game
                .with_alpha(alpha)
                .and_then(|g| aloha_field(&g, ResponseKind::Partial))
                .and_then(|f| classify(&f, nep))
            {
                Ok(report) => SweepRow {
                    alpha,
                    nep_index: idx,
                    nep: nep.to_vec(),
                    max_re: report.max_re(),
                    classification: Some(report.classification),
                    error: None,
                },
                Err(e) => SweepRow {
                    alpha,
                    nep_index: idx,
                    nep: nep.to_vec(),
                    max_re: None,
                    classification: None,
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }

    let mut thresholds = Vec::new();
    for (idx, nep) in neps.iter().enumerate() {
        let cells: Vec<&SweepRow> =
            rows.iter().filter(|r| r.nep_index == idx && r.max_re.is_some()).collect();
        for pair in cells.windows(2) {
            let (r0, r1) = (pair[0], pair[1]);
            let (m0, m1) = (r0.max_re.unwrap(), r1.max_re.unwrap());
            if m0 == 0.0 || m1 == 0.0 || m0.signum() == m1.signum() {
                continue;
            }
            let (mut lo, mut hi, mut mlo) = (r0.alpha, r1.alpha, m0);
            while hi - lo > 1e-3 {
                let mid = 0.5 * (lo + hi);
                let mmid = match partial_field_max_re(game, mid, nep) {
                    Ok(m) => m,
                    Err(_) => break,
                };
                if mmid.signum() == mlo.signum() {
                    lo = mid;
                    mlo = mmid;
                } else {
                    hi = mid;
                }
            }
            thresholds.push(ThresholdCrossing {
                nep_index: idx,
                alpha_lo: lo,
                alpha_hi: hi,
                alpha: 0.5 * (lo + hi),
            });
        }
    }
    Ok(AlphaSweep { rows, thresholds })
}

/// One axis of a sampling grid: `count` evenly spaced points from `start`
/// to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|k| self.start + step * k as f64).collect()
    }
}

/// Two-dimensional sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x: AxisSpec,
    pub y: AxisSpec,
}

/// Basin sampling controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinOptions {
    /// Euclidean capture radius around each attractor.
    pub capture_radius: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for BasinOptions {
    fn default() -> Self {
        // Unit relaxation rate: e-folding time 1, so t_end = 200 is ample.
        Self { capture_radius: 1e-3, t_end: 200.0, dt: 0.01 }
    }
}

/// Attractor labels over a grid of starting points, x-major
/// (`labels[ix * y_count + iy]`); `None` marks starts that entered no
/// capture ball before `t_end`.
#[derive(Debug, Clone)]
pub struct BasinMap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub labels: Vec<Option<usize>>,
    pub attractors: Vec<Vec<f64>>,
}

fn first_captured(q: &[f64], attractors: &[Vec<f64>], radius: f64) -> Option<usize> {
    attractors.iter().position(|a| {
        let d2: f64 = a.iter().zip(q).map(|(ai, qi)| (ai - qi) * (ai - qi)).sum();
        d2 <= radius * radius
    })
}

/// Integrate the flow from every grid start and label each by the first
/// attractor whose capture ball the trajectory enters.
///
/// Cells are independent and run in parallel; the output ordering is fixed
/// by the grid, not by scheduling.
pub fn basin_sample(
    field: &VectorField,
    grid: &GridSpec,
    attractors: &[Vec<f64>],
    opts: &BasinOptions,
) -> BasinMap {
    debug_assert_eq!(field.dim(), 2);
    let xs = grid.x.values();
    let ys = grid.y.values();
    let steps = ((opts.t_end / opts.dt) - 1e-9).ceil().max(1.0) as usize;

    let cells: Vec<(usize, usize)> =
        (0..xs.len()).flat_map(|ix| (0..ys.len()).map(move |iy| (ix, iy))).collect();
    let labels: Vec<Option<usize>> = cells
        .par_iter()
        .map(|&(ix, iy)| {
            let mut q = vec![xs[ix], ys[iy]];
            field.bounds.project(&mut q);
            if let Some(hit) = first_captured(&q, attractors, opts.capture_radius) {
                return Some(hit);
            }
            for _ in 0..steps {
                q = rk4_step(field, &q, opts.dt);
                if let Some(hit) = first_captured(&q, attractors, opts.capture_radius) {
                    return Some(hit);
                }
            }
            None
        })
        .collect();

    BasinMap { xs, ys, labels, attractors: attractors.to_vec() }
}
