//! The five commands. Each consumes a scenario plus the common switches
//! and produces exactly one output artifact; anything meant for a human
//! (threshold summaries, the equilibrium report) also goes to stdout.

use serde::Serialize;

use game_lab_core::aloha::{AlohaGame, StrategyVector};
use game_lab_core::dynamics::{
    aloha_field, basin_sample, classify, integrate, sweep_alpha, BasinOptions, Complex,
    EnergyFn, ResponseKind, VectorField, DESCENT_TOL, MAX_DT,
};
use game_lab_core::powerctl::{power_field, PowerGame, PowerResponseKind};
use game_lab_core::variations::{linear_field, lyapunov_powercost, power_cost_field};
use game_lab_core::Error as CoreError;

use crate::config::{
    GameInstance, LyapunovConfig, ResponseConfig, Scenario, SimulateParams,
};
use crate::output::{csv_safe, fmt_f64, Csv};
use crate::{CliError, Format};

/// What a command hands back: the artifact body and any stdout text.
pub struct CommandOutput {
    pub file: String,
    pub stdout: String,
}

fn config_err(e: CoreError) -> CliError {
    CliError::Config(e.to_string())
}

fn to_json<T: Serialize>(doc: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| CliError::Numeric(format!("cannot encode report: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn game_dim(game: &GameInstance) -> usize {
    match game {
        GameInstance::Aloha(g) => g.player_count(),
        GameInstance::Power(g) => g.channel().dim(),
        GameInstance::Linear(_) => 2,
    }
}

/// Relaxation field for the requested response map, checking that the
/// response actually belongs to the configured game.
fn build_field(
    game: &GameInstance,
    response: ResponseConfig,
    power_cap: Option<f64>,
) -> Result<VectorField, CliError> {
    match game {
        GameInstance::Aloha(g) => {
            let kind = match response {
                ResponseConfig::Selfish => ResponseKind::Selfish,
                ResponseConfig::Altruistic => ResponseKind::Altruistic,
                ResponseConfig::Partial => ResponseKind::Partial,
                ResponseConfig::BlendLinear => ResponseKind::BlendLinear,
                ResponseConfig::BlendWeighted => ResponseKind::BlendWeighted,
                ResponseConfig::PowerCost => return power_cost_field(g).map_err(config_err),
                ResponseConfig::BangBang => {
                    return Err(CliError::Config(
                        "bang-bang responses belong to linear games".into(),
                    ))
                }
            };
            aloha_field(g, kind).map_err(config_err)
        }
        GameInstance::Power(g) => {
            let kind = match response {
                ResponseConfig::Selfish => PowerResponseKind::Selfish,
                ResponseConfig::Altruistic => PowerResponseKind::Altruistic,
                other => {
                    return Err(CliError::Config(format!(
                        "response '{}' does not drive power games",
                        other.name()
                    )))
                }
            };
            power_field(g, kind, power_cap).map_err(config_err)
        }
        GameInstance::Linear(g) => match response {
            ResponseConfig::BangBang => Ok(linear_field(g)),
            other => Err(CliError::Config(format!(
                "response '{}' does not drive linear games; use bang-bang",
                other.name()
            ))),
        },
    }
}

type Energy = Box<dyn Fn(&[f64]) -> Result<f64, CoreError> + Sync>;

/// Energy function for the requested name, bound to the configured game.
fn build_energy(game: &GameInstance, which: LyapunovConfig) -> Result<Energy, CliError> {
    match game {
        GameInstance::Aloha(g) => {
            let g = g.clone();
            let f: Energy = match which {
                LyapunovConfig::Selfish => Box::new(move |q: &[f64]| g.lyapunov_selfish(q)),
                LyapunovConfig::Altruistic => Box::new(move |q: &[f64]| g.lyapunov_altruistic(q)),
                LyapunovConfig::Blend => Box::new(move |q: &[f64]| g.lyapunov_blend(q)),
                LyapunovConfig::PowerCost => Box::new(move |q: &[f64]| lyapunov_powercost(&g, q)),
            };
            Ok(f)
        }
        GameInstance::Power(g) => {
            let g = g.clone();
            let f: Energy = match which {
                LyapunovConfig::Selfish => Box::new(move |q: &[f64]| g.lyapunov_selfish(q)),
                LyapunovConfig::Altruistic => Box::new(move |q: &[f64]| g.lyapunov_altruistic(q)),
                other => {
                    return Err(CliError::Config(format!(
                        "energy '{}' is not defined for power games",
                        other.name()
                    )))
                }
            };
            Ok(f)
        }
        GameInstance::Linear(_) => {
            Err(CliError::Config("linear games carry no energy function".into()))
        }
    }
}

#[derive(Serialize)]
struct EigenPair {
    re: f64,
    im: f64,
}

fn eigen_pairs(eig: &[Complex<f64>]) -> Vec<EigenPair> {
    eig.iter().map(|e| EigenPair { re: e.re, im: e.im }).collect()
}

#[derive(Serialize)]
struct AlohaNepEntry {
    q: Vec<f64>,
    residual: f64,
    outside_clip: bool,
    sigma_selfish: Option<f64>,
    sigma_altruistic: Option<f64>,
    stable_selfish: Option<bool>,
    stable_altruistic: Option<bool>,
    eigenvalues: Vec<EigenPair>,
    max_re: Option<f64>,
    classification: Option<String>,
    note: Option<String>,
}

#[derive(Serialize)]
struct AlohaNepDoc {
    game: &'static str,
    alpha: f64,
    discriminant: f64,
    equilibria: Vec<AlohaNepEntry>,
    note: Option<String>,
}

fn nep_report_aloha(g: &AlohaGame) -> Result<String, CliError> {
    let discriminant = g.nep_discriminant().map_err(config_err)?;
    let neps = g.interior_neps().map_err(config_err)?;
    // Classification runs under the game's own weighted response; games
    // without a differentiable response still get locations and criteria.
    let field = aloha_field(g, ResponseKind::Partial).ok();
    let equilibria: Vec<AlohaNepEntry> = neps
        .iter()
        .map(|nep| {
            let criteria = g.stability_criteria(&nep.q).ok();
            let (eigenvalues, max_re, classification, note) = match &field {
                Some(f) => match classify(f, &nep.q) {
                    Ok(report) => (
                        eigen_pairs(&report.eigenvalues),
                        report.max_re(),
                        Some(report.classification.to_string()),
                        None,
                    ),
                    Err(e) => (Vec::new(), None, None, Some(e.to_string())),
                },
                None => (
                    Vec::new(),
                    None,
                    None,
                    Some("no differentiable response dynamics for these utilities".into()),
                ),
            };
            AlohaNepEntry {
                q: nep.q.to_vec(),
                residual: g.nep_residual(&nep.q),
                outside_clip: nep.outside_clip,
                sigma_selfish: criteria.map(|c| c.sigma_selfish),
                sigma_altruistic: criteria.map(|c| c.sigma_altruistic),
                stable_selfish: criteria.map(|c| c.stable_selfish()),
                stable_altruistic: criteria.map(|c| c.stable_altruistic()),
                eigenvalues,
                max_re,
                classification,
                note,
            }
        })
        .collect();
    let note = equilibria
        .is_empty()
        .then(|| format!("no interior equilibria (discriminant {discriminant:.6e})"));
    to_json(&AlohaNepDoc { game: "aloha", alpha: g.alpha(), discriminant, equilibria, note })
}

#[derive(Serialize)]
struct PowerNepDoc {
    game: &'static str,
    alpha: f64,
    scaled_sinr_targets: Vec<f64>,
    nep: Option<Vec<f64>>,
    feasible: Option<bool>,
    residual: Option<f64>,
    sinrs: Option<Vec<f64>>,
    coupling_product: Option<f64>,
    selfish_stable: Option<bool>,
    altruistic_stable: Option<bool>,
    marginal: Option<bool>,
    altruistic_hessian_det: Option<f64>,
    altruistic_hessian_indefinite: Option<bool>,
    eigenvalues: Vec<EigenPair>,
    max_re: Option<f64>,
    classification: Option<String>,
    note: Option<String>,
}

/// Central-difference Hessian determinant of the altruistic energy; the
/// sign separates minima from saddles.
fn altruistic_hessian_det(g: &PowerGame, q: &[f64]) -> Option<f64> {
    if q.len() != 2 {
        return None;
    }
    let f = |a: f64, b: f64| g.lyapunov_altruistic(&[a, b]).ok();
    let h0 = 1e-3 * (1.0 + q[0].abs());
    let h1 = 1e-3 * (1.0 + q[1].abs());
    let f00 = f(q[0], q[1])?;
    let hxx = (f(q[0] + h0, q[1])? - 2.0 * f00 + f(q[0] - h0, q[1])?) / (h0 * h0);
    let hyy = (f(q[0], q[1] + h1)? - 2.0 * f00 + f(q[0], q[1] - h1)?) / (h1 * h1);
    let hxy = (f(q[0] + h0, q[1] + h1)? - f(q[0] + h0, q[1] - h1)?
        - f(q[0] - h0, q[1] + h1)?
        + f(q[0] - h0, q[1] - h1)?)
        / (4.0 * h0 * h1);
    Some(hxx * hyy - hxy * hxy)
}

fn nep_report_power(g: &PowerGame) -> Result<String, CliError> {
    let products = g.stability_products().ok();
    let mut doc = PowerNepDoc {
        game: "power",
        alpha: g.alpha(),
        scaled_sinr_targets: g.scaled_sinr_targets().to_vec(),
        nep: None,
        feasible: None,
        residual: None,
        sinrs: None,
        coupling_product: products.map(|p| p.product),
        selfish_stable: products.map(|p| p.selfish_stable),
        altruistic_stable: products.map(|p| p.altruistic_stable),
        marginal: products.map(|p| p.marginal),
        altruistic_hessian_det: None,
        altruistic_hessian_indefinite: None,
        eigenvalues: Vec::new(),
        max_re: None,
        classification: None,
        note: None,
    };
    let nep = match g.power_nep() {
        Ok(nep) => nep,
        Err(CoreError::NoSolution(msg)) => {
            doc.note = Some(format!("no interior equilibrium: {msg}"));
            return to_json(&doc);
        }
        Err(e) => return Err(e.into()),
    };
    let q = nep.q.to_vec();
    let response = g.selfish_power_response(&q);
    doc.residual =
        Some(q.iter().zip(&response).map(|(qi, ri)| (ri - qi).abs()).fold(0.0, f64::max));
    doc.sinrs = Some((0..q.len()).map(|i| g.sinr(&q, i)).collect());
    doc.feasible = Some(nep.feasible);
    let det = altruistic_hessian_det(g, &q);
    doc.altruistic_hessian_det = det;
    doc.altruistic_hessian_indefinite = det.map(|d| d < 0.0);
    match power_field(g, PowerResponseKind::Selfish, None)
        .map_err(config_err)
        .and_then(|f| classify(&f, &q).map_err(CliError::from))
    {
        Ok(report) => {
            doc.eigenvalues = eigen_pairs(&report.eigenvalues);
            doc.max_re = report.max_re();
            doc.classification = Some(report.classification.to_string());
        }
        Err(e) => doc.note = Some(format!("classification unavailable: {}", e.message())),
    }
    doc.nep = Some(q);
    to_json(&doc)
}

#[derive(Serialize)]
struct LinearNepDoc {
    game: &'static str,
    alpha: f64,
    thresholds: [f64; 2],
    saddle: Vec<f64>,
    corners: [[f64; 2]; 2],
}

/// Locate and classify equilibria; JSON to stdout and to the artifact.
pub fn cmd_nep(scenario: &Scenario, format: Format) -> Result<CommandOutput, CliError> {
    if format == Format::Csv {
        return Err(CliError::Config("nep reports are JSON; pass --format json or omit".into()));
    }
    let game = scenario.game.build()?;
    let text = match &game {
        GameInstance::Aloha(g) => nep_report_aloha(g)?,
        GameInstance::Power(g) => nep_report_power(g)?,
        GameInstance::Linear(g) => to_json(&LinearNepDoc {
            game: "linear",
            alpha: g.alpha(),
            thresholds: [g.threshold(0), g.threshold(1)],
            saddle: g.saddle().to_vec(),
            corners: [[0.0, 1.0], [1.0, 0.0]],
        })?,
    };
    Ok(CommandOutput { file: text.clone(), stdout: text })
}

#[derive(Serialize)]
struct SimulateDoc<'a> {
    times: &'a [f64],
    states: &'a [Vec<f64>],
    lyapunov: Option<&'a Vec<f64>>,
    descent_violations: usize,
}

/// Integrate a response flow and log the path, with optional energy values
/// and per-step descent flags.
pub fn cmd_simulate(scenario: &Scenario, format: Format) -> Result<CommandOutput, CliError> {
    let params: &SimulateParams = scenario
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Config("scenario has no `simulate` block".into()))?;
    let game = scenario.game.build()?;
    let field = build_field(&game, params.response, params.power_cap)?;
    if params.start.len() != field.dim() {
        return Err(CliError::Config(format!(
            "start has {} components for a {}-dimensional flow",
            params.start.len(),
            field.dim()
        )));
    }
    let energy = match params.lyapunov {
        Some(which) => Some(build_energy(&game, which)?),
        None => None,
    };
    if let Some(f) = &energy {
        f(&params.start)
            .map_err(|e| CliError::Config(format!("energy undefined at the start point: {e}")))?;
    }
    let eval;
    let lyap: Option<EnergyFn> = match &energy {
        Some(f) => {
            // Errors inside the flow surface as non-finite samples, checked
            // after integration so the diagnostics stay deterministic.
            eval = |q: &[f64]| f(q).unwrap_or(f64::NAN);
            Some(&eval)
        }
        None => None,
    };
    let traj = integrate(&field, &params.start, params.dt, params.t_end, lyap)?;
    if let Some(es) = &traj.lyapunov {
        if es.iter().any(|e| !e.is_finite()) {
            return Err(CliError::Numeric("energy became undefined along the trajectory".into()));
        }
    }

    let file = match format {
        Format::Json => to_json(&SimulateDoc {
            times: &traj.times,
            states: &traj.states,
            lyapunov: traj.lyapunov.as_ref(),
            descent_violations: traj.descent_violations,
        })?,
        Format::Csv => {
            let n = field.dim();
            let mut names = vec!["t".to_string()];
            names.extend((1..=n).map(|i| format!("q_{i}")));
            names.push("lyapunov".into());
            names.push("descent_flag".into());
            let mut csv = Csv::new(&names.iter().map(String::as_str).collect::<Vec<_>>());
            for k in 0..traj.times.len() {
                let mut cells = vec![fmt_f64(traj.times[k])];
                cells.extend(traj.states[k].iter().map(|&x| fmt_f64(x)));
                match &traj.lyapunov {
                    Some(es) => {
                        cells.push(fmt_f64(es[k]));
                        let rose = k > 0 && es[k] - es[k - 1] > DESCENT_TOL;
                        cells.push(if rose { "1" } else { "0" }.into());
                    }
                    None => {
                        cells.push(String::new());
                        cells.push(String::new());
                    }
                }
                csv.row(&cells);
            }
            csv.finish()
        }
    };
    Ok(CommandOutput { file, stdout: String::new() })
}

#[derive(Serialize)]
struct SweepRowDoc {
    alpha: f64,
    nep_index: usize,
    nep: Vec<f64>,
    max_re: Option<f64>,
    classification: Option<String>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ThresholdDoc {
    nep_index: usize,
    alpha_lo: f64,
    alpha_hi: f64,
    alpha: f64,
}

#[derive(Serialize)]
struct SweepDoc {
    rows: Vec<SweepRowDoc>,
    thresholds: Vec<ThresholdDoc>,
}

/// Classify every interior equilibrium across an altruism-weight grid and
/// bracket the stability switches.
pub fn cmd_sweep_alpha(scenario: &Scenario, format: Format) -> Result<CommandOutput, CliError> {
    let params = scenario
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("scenario has no `sweep` block".into()))?;
    if params.alphas.is_empty() {
        return Err(CliError::Config("sweep needs at least one alpha".into()));
    }
    if let Some(a) = params.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(CliError::Config(format!("alpha must lie in [0,1], got {a}")));
    }
    let game = scenario.game.build()?;
    let GameInstance::Aloha(g) = &game else {
        return Err(CliError::Config(
            "sweep-alpha walks the interior equilibria of a random-access game".into(),
        ));
    };
    let neps: Vec<StrategyVector> =
        g.interior_neps().map_err(config_err)?.into_iter().map(|n| n.q).collect();
    let sweep = sweep_alpha(g, &neps, &params.alphas)?;

    let mut stdout = String::new();
    for t in &sweep.thresholds {
        stdout.push_str(&format!(
            "threshold nep={} alpha={} lo={} hi={}\n",
            t.nep_index,
            fmt_f64(t.alpha),
            fmt_f64(t.alpha_lo),
            fmt_f64(t.alpha_hi)
        ));
    }

    let file = match format {
        Format::Json => to_json(&SweepDoc {
            rows: sweep
                .rows
                .iter()
                .map(|r| SweepRowDoc {
                    alpha: r.alpha,
                    nep_index: r.nep_index,
                    nep: r.nep.clone(),
                    max_re: r.max_re,
                    classification: r.classification.map(|c| c.to_string()),
                    error: r.error.clone(),
                })
                .collect(),
            thresholds: sweep
                .thresholds
                .iter()
                .map(|t| ThresholdDoc {
                    nep_index: t.nep_index,
                    alpha_lo: t.alpha_lo,
                    alpha_hi: t.alpha_hi,
                    alpha: t.alpha,
                })
                .collect(),
        })?,
        Format::Csv => {
            let mut csv =
                Csv::new(&["alpha", "nep_index", "max_re_eigenvalue", "classification", "note"]);
            for r in &sweep.rows {
                csv.row(&[
                    fmt_f64(r.alpha),
                    r.nep_index.to_string(),
                    r.max_re.map(fmt_f64).unwrap_or_default(),
                    r.classification.map(|c| c.to_string()).unwrap_or_default(),
                    r.error.as_deref().map(csv_safe).unwrap_or_default(),
                ]);
            }
            csv.finish()
        }
    };
    Ok(CommandOutput { file, stdout })
}

#[derive(Serialize)]
struct ContourDoc {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// x-major: `values[ix * ys.len() + iy]`.
    values: Vec<f64>,
}

/// Tabulate an energy function over a grid.
pub fn cmd_contour(scenario: &Scenario, format: Format) -> Result<CommandOutput, CliError> {
    let params = scenario
        .contour
        .as_ref()
        .ok_or_else(|| CliError::Config("scenario has no `contour` block".into()))?;
    let game = scenario.game.build()?;
    if game_dim(&game) != 2 {
        return Err(CliError::Config("contour grids are two-dimensional".into()));
    }
    let energy = build_energy(&game, params.lyapunov)?;
    let grid = params.grid.build()?;
    let xs = grid.x.values();
    let ys = grid.y.values();
    let mut values = Vec::with_capacity(xs.len() * ys.len());
    for &x in &xs {
        for &y in &ys {
            let v = energy(&[x, y])
                .map_err(|e| CliError::Numeric(format!("energy at ({x}, {y}): {e}")))?;
            values.push(v);
        }
    }
    let file = match format {
        Format::Json => to_json(&ContourDoc { xs, ys, values })?,
        Format::Csv => {
            let mut csv = Csv::new(&["q1", "q2", "value"]);
            for (ix, &x) in xs.iter().enumerate() {
                for (iy, &y) in ys.iter().enumerate() {
                    csv.row(&[fmt_f64(x), fmt_f64(y), fmt_f64(values[ix * ys.len() + iy])]);
                }
            }
            csv.finish()
        }
    };
    Ok(CommandOutput { file, stdout: String::new() })
}

#[derive(Serialize)]
struct BasinDoc {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// x-major: `labels[ix * ys.len() + iy]`; null marks uncaptured starts.
    labels: Vec<Option<usize>>,
    attractors: Vec<Vec<f64>>,
}

/// Label every grid start by the attractor its trajectory reaches.
pub fn cmd_basin(scenario: &Scenario, format: Format) -> Result<CommandOutput, CliError> {
    let params = scenario
        .basin
        .as_ref()
        .ok_or_else(|| CliError::Config("scenario has no `basin` block".into()))?;
    let game = scenario.game.build()?;
    let field = build_field(&game, params.response, params.power_cap)?;
    if field.dim() != 2 {
        return Err(CliError::Config("basin grids are two-dimensional".into()));
    }
    if params.attractors.is_empty() {
        return Err(CliError::Config("basin needs at least one attractor".into()));
    }
    for a in &params.attractors {
        if a.len() != 2 || a.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config("attractors must be finite points of dimension 2".into()));
        }
    }
    let grid = params.grid.build()?;
    let mut opts = BasinOptions::default();
    if let Some(r) = params.capture_radius {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::Config(format!("capture radius must be positive, got {r}")));
        }
        opts.capture_radius = r;
    }
    if let Some(t) = params.t_end {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("t_end must be positive, got {t}")));
        }
        opts.t_end = t;
    }
    if let Some(dt) = params.dt {
        if !(dt > 0.0 && dt <= MAX_DT) {
            return Err(CliError::Config(format!("dt must lie in (0, {MAX_DT}], got {dt}")));
        }
        opts.dt = dt;
    }
    let map = basin_sample(&field, &grid, &params.attractors, &opts);
    let file = match format {
        Format::Json => to_json(&BasinDoc {
            xs: map.xs,
            ys: map.ys,
            labels: map.labels,
            attractors: map.attractors,
        })?,
        Format::Csv => {
            let mut csv = Csv::new(&["q1", "q2", "label"]);
            for (ix, &x) in map.xs.iter().enumerate() {
                for (iy, &y) in map.ys.iter().enumerate() {
                    let label = match map.labels[ix * map.ys.len() + iy] {
                        Some(k) => k.to_string(),
                        None => "none".into(),
                    };
                    csv.row(&[fmt_f64(x), fmt_f64(y), label]);
                }
            }
            csv.finish()
        }
    };
    Ok(CommandOutput { file, stdout: String::new() })
}
