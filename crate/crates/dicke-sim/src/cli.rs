//! Config files, result serialization (CSV and a minimal SVG line plot),
//! the experiment runner, and the built-in validation suite.
//!
//! Configs are line-based `key = value` text. Frequencies and rates are
//! given divided by 2π, in GHz (so `g = 0.02` means an angular coupling of
//! 2π × 20 MHz); `#` starts a comment. Unknown keys are rejected, as are
//! missing physics keys. Example:
//!
//! ```text
//! n_qubits = 2
//! omega_r  = 10.0
//! epsilon  = 10.0
//! g        = 0.02
//! amp_x    = 2.0
//! amp_z    = 0.0
//! omega_x  = 9.98
//! omega_z  = 1.0
//! gamma    = 0.00005
//! kappa    = 0.000012
//! ```

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use crate::model::{check_regime, SystemParams};
use crate::protocols::{
    run_experiment, twist_gate, DissipativeEngine, DynamicsMode, ExperimentConfig,
    ExperimentResult, Protocol,
};
use crate::{Error, Result};

/// Keys every config must provide, in GHz (value / 2π).
const REQUIRED_KEYS: [&str; 10] = [
    "n_qubits", "omega_r", "epsilon", "g", "amp_x", "amp_z", "omega_x", "omega_z", "gamma",
    "kappa",
];

const OPTIONAL_KEYS: [&str; 9] = [
    "protocol",
    "horizon_periods",
    "samples",
    "modes",
    "engine",
    "trajectories",
    "seed",
    "fock_dim",
    "convergence_check",
];

/// Command-line overrides applied after the file is parsed.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
    pub fock_dim: Option<usize>,
}

/// A parsed config file.
#[derive(Clone, Debug)]
pub struct ParsedConfig {
    pub params: SystemParams,
    pub protocol: Option<Protocol>,
    pub horizon_periods: f64,
    pub samples: usize,
    pub modes: Option<Vec<DynamicsMode>>,
    pub engine_mcwf: bool,
    pub trajectories: usize,
    pub seed: u64,
    pub fock_dim: Option<usize>,
    pub convergence_check: Option<bool>,
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("key {key}: cannot parse `{v}` as a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("key {key}: cannot parse `{v}` as an integer")))
}

/// Parse `key = value` text into a config. Unknown keys and missing
/// required keys are errors; values are plain decimal (no locale).
pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let mut seen: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if !REQUIRED_KEYS.contains(&key.as_str()) && !OPTIONAL_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        if seen.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!(
                "line {}: duplicate key `{key}`",
                lineno + 1
            )));
        }
        seen.push((key, value.trim().to_string()));
    }
    let get = |key: &str| seen.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    for key in REQUIRED_KEYS {
        if get(key).is_none() {
            return Err(Error::Config(format!("missing required key `{key}`")));
        }
    }
    let ghz = |key: &str| -> Result<f64> { Ok(TAU * parse_f64(key, get(key).unwrap())?) };
    let n_qubits = parse_usize("n_qubits", get("n_qubits").unwrap())?;
    if n_qubits == 0 {
        return Err(Error::Config("n_qubits must be at least 1".into()));
    }
    let params = SystemParams {
        n_qubits,
        omega_r: ghz("omega_r")?,
        epsilon: ghz("epsilon")?,
        g: ghz("g")?,
        amp_x: ghz("amp_x")?,
        amp_z: ghz("amp_z")?,
        omega_x: ghz("omega_x")?,
        omega_z: ghz("omega_z")?,
        gamma: ghz("gamma")?,
        kappa: ghz("kappa")?,
    };
    params.validate().map_err(|e| Error::Config(e.to_string()))?;

    let protocol = match get("protocol") {
        None => None,
        Some("scan") => Some(Protocol::FidelityScan),
        Some("gate") => Some(Protocol::Gate),
        Some("cat") => Some(Protocol::Cat),
        Some("ghz") => Some(Protocol::Ghz),
        Some(other) => {
            return Err(Error::Config(format!("unknown protocol `{other}`")));
        }
    };
    let modes = match get("modes") {
        None => None,
        Some(list) => {
            let mut out = Vec::new();
            for item in list.split(',') {
                out.push(match item.trim() {
                    "ideal" => DynamicsMode::Effective,
                    "full" => DynamicsMode::FullUnitary,
                    "diss" => DynamicsMode::FullDissipative,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown mode `{other}` (expected ideal, full, diss)"
                        )))
                    }
                });
            }
            Some(out)
        }
    };
    let engine_mcwf = match get("engine") {
        None | Some("dense") => false,
        Some("mcwf") => true,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown engine `{other}` (expected dense or mcwf)"
            )))
        }
    };
    let convergence_check = match get("convergence_check") {
        None => None,
        Some("true") => Some(true),
        Some("false") => Some(false),
        Some(other) => {
            return Err(Error::Config(format!(
                "convergence_check must be true or false, got `{other}`"
            )))
        }
    };

    Ok(ParsedConfig {
        params,
        protocol,
        horizon_periods: match get("horizon_periods") {
            Some(v) => parse_f64("horizon_periods", v)?,
            None => 1.0,
        },
        samples: match get("samples") {
            Some(v) => parse_usize("samples", v)?,
            None => 201,
        },
        modes,
        engine_mcwf,
        trajectories: match get("trajectories") {
            Some(v) => parse_usize("trajectories", v)?,
            None => 2000,
        },
        seed: match get("seed") {
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("seed: cannot parse `{v}`")))?,
            None => 1,
        },
        fock_dim: match get("fock_dim") {
            Some(v) => Some(parse_usize("fock_dim", v)?),
            None => None,
        },
        convergence_check,
    })
}

/// Assemble the experiment for a subcommand, applying overrides.
pub fn to_experiment(
    parsed: &ParsedConfig,
    subcommand: Protocol,
    overrides: &Overrides,
) -> Result<ExperimentConfig> {
    if let Some(p) = parsed.protocol {
        if p != subcommand {
            return Err(Error::Config(format!(
                "config selects protocol `{}` but the subcommand is `{}`",
                p.name(),
                subcommand.name()
            )));
        }
    }
    let mut cfg = ExperimentConfig::new(parsed.params, subcommand);
    cfg.horizon_periods = parsed.horizon_periods;
    cfg.samples = parsed.samples;
    if let Some(modes) = &parsed.modes {
        cfg.modes = modes.clone();
    }
    let trajectories = overrides.trajectories.unwrap_or(parsed.trajectories);
    let seed = overrides.seed.unwrap_or(parsed.seed);
    cfg.engine = if parsed.engine_mcwf {
        DissipativeEngine::Mcwf { trajectories, seed }
    } else {
        DissipativeEngine::Dense
    };
    cfg.fock_dim = overrides.fock_dim.or(parsed.fock_dim);
    if let Some(c) = parsed.convergence_check {
        cfg.convergence_check = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Fixed-format float used in every output file: 12 significant digits.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.11e}")
}

/// series.csv: `t,F_ideal,F_full,F_diss` with absent columns omitted.
pub fn series_csv(result: &ExperimentResult) -> String {
    let order = ["F_ideal", "F_full", "F_diss"];
    let cols: Vec<&(String, Vec<f64>)> = order
        .iter()
        .filter_map(|name| result.series.iter().find(|(k, _)| k == name))
        .collect();
    let mut out = String::from("t");
    for (name, _) in &cols {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, t) in result.times.iter().enumerate() {
        out.push_str(&fmt_value(*t));
        for (_, col) in &cols {
            out.push(',');
            out.push_str(&fmt_value(col[i]));
        }
        out.push('\n');
    }
    out
}

/// Parse a series.csv produced by [`series_csv`] (round-trip contract).
pub fn parse_series_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?;
    let names: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
    let mut columns: Vec<Vec<f64>> = names.iter().map(|_| Vec::new()).collect();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(Error::Config("ragged CSV row".into()));
        }
        for (j, field) in fields.iter().enumerate() {
            columns[j].push(
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad CSV field `{field}`")))?,
            );
        }
    }
    Ok((names, columns))
}

/// summary.csv: `key,value` rows.
pub fn summary_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in &result.summary {
        let _ = writeln!(out, "{k},{}", fmt_value(*v));
    }
    out
}

/// meta.txt: parameters (in the /2π GHz convention of the config format),
/// engine settings, warnings, and convergence records.
pub fn meta_text(cfg: &ExperimentConfig, result: &ExperimentResult) -> String {
    let p = &cfg.params;
    let mut out = String::new();
    let _ = writeln!(out, "protocol = {}", result.protocol.name());
    let _ = writeln!(out, "n_qubits = {}", p.n_qubits);
    for (k, v) in [
        ("omega_r", p.omega_r / TAU),
        ("epsilon", p.epsilon / TAU),
        ("g", p.g / TAU),
        ("amp_x", p.amp_x / TAU),
        ("amp_z", p.amp_z / TAU),
        ("omega_x", p.omega_x / TAU),
        ("omega_z", p.omega_z / TAU),
        ("gamma", p.gamma / TAU),
        ("kappa", p.kappa / TAU),
    ] {
        let _ = writeln!(out, "{k} = {}", fmt_value(v));
    }
    let regime = check_regime(p);
    let _ = writeln!(out, "regime = {}", regime.summary());
    for (k, v) in &result.meta {
        let _ = writeln!(out, "{k} = {v}");
    }
    for w in &result.warnings {
        let _ = writeln!(out, "warning = {w}");
    }
    out
}

/// Minimal SVG polyline chart of every series column.
pub fn plot_svg(result: &ExperimentResult) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 50.0;
    let colors = ["#000000", "#c02020", "#2040c0", "#208020"];
    let t0 = *result.times.first().unwrap_or(&0.0);
    let t1 = *result.times.last().unwrap_or(&1.0);
    let span = (t1 - t0).max(1e-300);
    let ymin = result
        .series
        .iter()
        .flat_map(|(_, c)| c.iter())
        .fold(1.0f64, |a, &b| a.min(b))
        .min(0.999);
    let ymin = (ymin - 0.02).max(0.0);
    let yspan = (1.0 - ymin).max(1e-6);
    let xmap = |t: f64| ML + (t - t0) / span * (W - ML - MR);
    let ymap = |f: f64| H - MB - (f - ymin) / yspan * (H - MT - MB);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - MB,
        W - MR,
        H - MB
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/>"#,
        H - MB
    );
    for k in 0..=5 {
        let t = t0 + span * k as f64 / 5.0;
        let x = xmap(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            H - MB,
            H - MB + 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" font-size="12" text-anchor="middle">{t:.3}</text>"#,
            H - MB + 22.0
        );
        let f = ymin + yspan * k as f64 / 5.0;
        let y = ymap(f);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{ML}" y2="{y:.2}" stroke="black"/>"#,
            ML - 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="12" text-anchor="end">{f:.4}</text>"#,
            ML - 10.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">t (ns)</text>"#,
        (ML + W - MR) / 2.0,
        H - 8.0
    );
    for (i, (name, col)) in result.series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let mut points = String::new();
        for (t, f) in result.times.iter().zip(col.iter()) {
            let _ = write!(points, "{:.2},{:.2} ", xmap(*t), ymap(f.clamp(ymin, 1.0)));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.trim_end()
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="13" fill="{color}">{name}</text>"#,
            W - MR - 80.0,
            MT + 18.0 * (i + 1) as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Run a subcommand end to end: parse, execute, write artifacts. Returns
/// the process exit code (0 ok, 1 config error, 2 numerical-budget failure,
/// 3 validation-suite failure).
pub fn run(
    subcommand: &str,
    config_path: Option<&Path>,
    out_dir: &Path,
    overrides: &Overrides,
) -> i32 {
    match run_inner(subcommand, config_path, out_dir, overrides) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Truncation(_) | Error::AccuracyBudget(_) => 2,
        _ => 1,
    }
}

fn run_inner(
    subcommand: &str,
    config_path: Option<&Path>,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<i32> {
    if subcommand == "validate" {
        let checks = validation_suite();
        let mut failed = 0;
        for c in &checks {
            println!(
                "{} {} ({})",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.detail
            );
            if !c.pass {
                failed += 1;
            }
        }
        println!("{} of {} checks passed", checks.len() - failed, checks.len());
        return Ok(if failed == 0 { 0 } else { 3 });
    }
    let protocol = match subcommand {
        "scan" => Protocol::FidelityScan,
        "gate" => Protocol::Gate,
        "cat" => Protocol::Cat,
        "ghz" => Protocol::Ghz,
        other => {
            return Err(Error::Config(format!(
                "unknown subcommand `{other}` (expected scan, gate, cat, ghz, validate)"
            )))
        }
    };
    let path = config_path.ok_or_else(|| Error::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path)?;
    let parsed = parse_config(&text)?;
    let cfg = to_experiment(&parsed, protocol, overrides)?;
    let result = run_experiment(&cfg)?;

    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("series.csv"), series_csv(&result))?;
    std::fs::write(out_dir.join("summary.csv"), summary_csv(&result))?;
    std::fs::write(out_dir.join("meta.txt"), meta_text(&cfg, &result))?;
    std::fs::write(out_dir.join("plot.svg"), plot_svg(&result))?;

    for (k, v) in &result.summary {
        println!("{k} = {v:.6}");
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(0)
}

/// One self-test in the `validate` suite.
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name, pass, detail }
}

/// The invariant suite behind the `validate` subcommand: collective-spin
/// algebra, frame round-trips, displacement group laws, the closed-form
/// propagator against the time-ordered oracle, rearrangement involution,
/// the entangling-power closed form, and the depolarizing process fidelity.
pub fn validation_suite() -> Vec<CheckResult> {
    use crate::dynamics::{magnus_propagator, time_ordered_block, FnProvider};
    use crate::hilbert::{
        build_layout, collective_operator, displacement_operator, Axis, Operator, StateVector,
    };
    use crate::linalg::spectral_norm;
    use crate::metrics::{
        cnot_matrix, entangling_power, process_fidelity, rearrange, swap_operator,
    };
    use crate::model::EffectiveParams;
    use crate::C64;
    use nalgebra::DMatrix;

    let mut checks = Vec::new();

    {
        let mut worst = 0.0f64;
        for n in 1..=3 {
            let layout = build_layout(n, 3).unwrap();
            let jx = collective_operator(layout, Axis::X);
            let jy = collective_operator(layout, Axis::Y);
            let jz = collective_operator(layout, Axis::Z);
            let j2 = collective_operator(layout, Axis::Squared);
            let i = C64::new(0.0, 1.0);
            worst = worst
                .max((&jx * &jy - &jy * &jx - jz.scale(i)).frobenius_norm())
                .max((&jy * &jz - &jz * &jy - jx.scale(i)).frobenius_norm())
                .max((&j2 * &jx - &jx * &j2).frobenius_norm());
        }
        checks.push(check(
            "su2_algebra",
            worst < 1e-12,
            format!("max deviation {worst:.2e}"),
        ));
    }

    {
        let p = table_params(2);
        let layout = build_layout(2, 4).unwrap();
        let lab = crate::model::LabFrameHamiltonian::new(p, layout).unwrap();
        let frame = crate::model::DriveCarrierFrame::new(p, layout);
        let t = 0.37;
        let transformed = crate::model::transform_frame(&lab, &frame, t).unwrap();
        let back = {
            let provider = FnProvider::new(layout, move |_| transformed.clone());
            let adj = crate::model::AdjointFrame(&frame);
            crate::model::transform_frame(&provider, &adj, t).unwrap()
        };
        let dev = (back.matrix()
            - crate::model::full_hamiltonian(&p, layout, t).unwrap().matrix())
        .norm();
        checks.push(check(
            "frame_round_trip",
            dev < 1e-9,
            format!("residual {dev:.2e}"),
        ));
    }

    {
        let layout = build_layout(1, 24).unwrap();
        let beta = C64::new(0.9, -0.4);
        let d1 = displacement_operator(layout, beta);
        let d2 = displacement_operator(layout, -beta);
        let dev = (&d1 * &d2 - Operator::identity(layout)).frobenius_norm();
        let vac = StateVector::ground(layout);
        let disp = d1.apply(&vac).unwrap();
        let nop = crate::hilbert::number_operator(layout);
        let mean = disp.inner(&nop.apply(&disp).unwrap()).unwrap().re;
        let pass = dev < 1e-10 && (mean - beta.norm_sqr()).abs() < 1e-8;
        checks.push(check(
            "displacement_group_law",
            pass,
            format!(
                "inverse dev {dev:.2e}, <n> err {:.2e}",
                (mean - beta.norm_sqr()).abs()
            ),
        ));
    }

    {
        // closed-form propagator vs time-ordered oracle on the bulk sector
        // (the declared levels of an internally padded truncation)
        let declared_fock = 8;
        let layout = build_layout(1, 24).unwrap();
        let eff = EffectiveParams {
            omega_r: TAU * 0.02,
            epsilon: 0.0,
            g: TAU * 0.01,
            ratio: 0.5,
        };
        let period = eff.period();
        let provider = FnProvider::with_scales(
            layout,
            move |t| crate::model::interaction_picture_hamiltonian(&eff, layout, t),
            eff.omega_r.abs(),
            eff.g.abs() * 2.0 * (layout.fock_dim() as f64).sqrt(),
        );
        let d = layout.total_dim();
        let mut cols = Vec::new();
        for s in 0..layout.spin_dim() {
            for n in 0..declared_fock {
                cols.push(layout.index(s, n));
            }
        }
        let block = DMatrix::<C64>::from_fn(d, cols.len(), |i, j| {
            if i == cols[j] {
                C64::from(1.0)
            } else {
                C64::from(0.0)
            }
        });
        let oracle = time_ordered_block(&provider, period / 2.0, 2500, &block).unwrap();
        let magnus = magnus_propagator(&eff, layout, period / 2.0).unwrap();
        let dev = spectral_norm(&(magnus.matrix() * &block - oracle));
        checks.push(check(
            "magnus_vs_oracle",
            dev < 1e-6,
            format!("bulk-sector deviation {dev:.2e}"),
        ));
    }

    {
        let u = twist_gate(0.83);
        let rr = rearrange(&rearrange(&u).unwrap()).unwrap();
        let dev = (&rr - &u).norm();
        let s = swap_operator(2);
        let sdev = (rearrange(&s).unwrap() - &s).norm();
        checks.push(check(
            "rearrangement_involution",
            dev < 1e-14 && sdev < 1e-14,
            format!("deviation {dev:.2e}"),
        ));
    }

    {
        let mut worst = 0.0f64;
        for k in 0..=10 {
            let phi = std::f64::consts::PI * k as f64 / 10.0;
            let ep = entangling_power(&twist_gate(phi)).unwrap();
            worst = worst.max((ep - 2.0 / 9.0 * phi.sin().powi(2)).abs());
        }
        let cnot_ep = entangling_power(&cnot_matrix()).unwrap();
        let pass = worst < 1e-10 && (cnot_ep - 2.0 / 9.0).abs() < 1e-12;
        checks.push(check(
            "entangling_power_closed_form",
            pass,
            format!("family dev {worst:.2e}, cnot {cnot_ep:.12}"),
        ));
    }

    {
        let ideal = twist_gate(std::f64::consts::FRAC_PI_2);
        let f = process_fidelity(
            &mut |w: &DMatrix<C64>| {
                let tr = w.diagonal().sum();
                Ok(DMatrix::identity(4, 4) * (tr / C64::from(4.0)))
            },
            &ideal,
        )
        .unwrap();
        checks.push(check(
            "depolarizing_process_fidelity",
            (f - 1.0 / 16.0).abs() < 1e-12,
            format!("value {f:.12}"),
        ));
    }

    {
        let mut worst = 0.0f64;
        for n in 1..=5 {
            let cm = crate::hilbert::zbasis_to_xbasis_coefficients(n);
            let total: f64 = cm.iter().map(|z| z.norm_sqr()).sum();
            worst = worst.max((total - 1.0).abs());
        }
        checks.push(check(
            "zx_expansion_completeness",
            worst < 1e-12,
            format!("max |1 - sum| {worst:.2e}"),
        ));
    }

    checks
}

fn table_params(n: usize) -> SystemParams {
    SystemParams {
        n_qubits: n,
        omega_r: TAU * 10.0,
        epsilon: TAU * 10.0,
        g: TAU * 0.02,
        amp_x: TAU * 2.0,
        amp_z: 0.0,
        omega_x: TAU * 9.98,
        omega_z: TAU * 1.0,
        gamma: TAU * 0.05e-3,
        kappa: TAU * 0.012e-3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "n_qubits = 2\nomega_r = 10.0\nepsilon = 10.0\ng = 0.02\namp_x = 2.0\namp_z = 0.0\nomega_x = 9.98\nomega_z = 1.0\ngamma = 0.00005\nkappa = 0.000012\n";

    #[test]
    fn parses_baseline_config() {
        let parsed = parse_config(GOOD).unwrap();
        let eff = crate::model::effective_params(&parsed.params).unwrap();
        assert!((eff.ratio - 0.5).abs() < 1e-12);
        assert!((parsed.params.g - TAU * 0.02).abs() < 1e-12);
        assert_eq!(parsed.samples, 201);
    }

    #[test]
    fn rejects_bad_configs() {
        let missing = GOOD.replace("omega_x = 9.98\n", "");
        assert!(matches!(parse_config(&missing), Err(Error::Config(m)) if m.contains("omega_x")));
        let unknown = format!("{GOOD}mystery = 1\n");
        assert!(matches!(parse_config(&unknown), Err(Error::Config(m)) if m.contains("mystery")));
        let zero = GOOD.replace("n_qubits = 2", "n_qubits = 0");
        assert!(parse_config(&zero).is_err());
        let nonpos = GOOD.replace("omega_r = 10.0", "omega_r = -1.0");
        assert!(parse_config(&nonpos).is_err());
        let mcwf = format!("{GOOD}engine = mcwf\nmodes = ideal,full\n");
        let parsed = parse_config(&mcwf).unwrap();
        assert!(to_experiment(&parsed, Protocol::Ghz, &Overrides::default()).is_err());
    }

    #[test]
    fn csv_round_trip_is_idempotent() {
        let result = ExperimentResult {
            protocol: Protocol::FidelityScan,
            times: vec![0.0, 0.5, 1.0],
            series: vec![
                ("F_full".into(), vec![1.0, 0.987654321987, 0.2345]),
                ("F_ideal".into(), vec![1.0, 1.0 - 1e-13, 0.9999999]),
            ],
            summary: vec![],
            meta: vec![],
            warnings: vec![],
        };
        let text = series_csv(&result);
        assert!(text.starts_with("t,F_ideal,F_full\n"));
        let (names, cols) = parse_series_csv(&text).unwrap();
        let re = {
            let mut out = names.join(",");
            out.push('\n');
            for i in 0..cols[0].len() {
                let row: Vec<String> = cols.iter().map(|c| fmt_value(c[i])).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        };
        assert_eq!(text, re, "format -> parse -> format is idempotent");
        for (j, col) in cols.iter().enumerate().skip(1) {
            let src = &result
                .series
                .iter()
                .find(|(k, _)| *k == names[j])
                .unwrap()
                .1;
            for (a, b) in col.iter().zip(src.iter()) {
                assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn validation_suite_passes() {
        for c in validation_suite() {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }
}
