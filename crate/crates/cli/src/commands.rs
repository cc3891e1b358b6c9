use std::fs;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};
use sirsvp_core::equilibria::Equilibrium;
use sirsvp_core::integrator::Sample;
use sirsvp_core::lyapunov::{certify_dfe, l_dfe, l_ee};
use sirsvp_core::sweep::SweepTasks;
use sirsvp_core::*;

use crate::args::*;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or inputs that fail validation.
    Usage(String),
    Model(sirsvp_core::Error),
    Io(anyhow::Error),
    /// Output was written but the certificate did not pass.
    CertificateFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(e) => match e {
                Error::InvalidParams(_)
                | Error::ZeroPopulation(_)
                | Error::SimplexViolation(_)
                | Error::InvalidState(_)
                | Error::InvalidSpec(_)
                | Error::NoEndemicState
                | Error::AllPointsInvalid => 2,
                _ => 1,
            },
            CliError::Io(_) => 1,
            CliError::CertificateFailed => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e:#}"),
            CliError::CertificateFailed => write!(f, "certificate check failed"),
        }
    }
}

impl From<sirsvp_core::Error> for CliError {
    fn from(e: sirsvp_core::Error) -> Self {
        CliError::Model(e)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn load_params(args: &ParamArgs) -> CliResult<ModelParams> {
    let file: Option<RawParams> = match &args.params {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading parameter file {}", path.display()))?;
            Some(serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!("--params {}: {e}", path.display()))
            })?)
        }
        None => None,
    };
    let pick = |flag: &str, inline: Option<f64>, from_file: Option<f64>| {
        inline
            .or(from_file)
            .ok_or_else(|| CliError::Usage(format!("missing --{flag} (or provide --params FILE)")))
    };
    let raw = RawParams {
        b: pick("b", args.b, file.map(|f| f.b))?,
        beta: pick("beta", args.beta, file.map(|f| f.beta))?,
        nu: pick("nu", args.nu, file.map(|f| f.nu))?,
        delta: pick("delta", args.delta, file.map(|f| f.delta))?,
        p: pick("p", args.p, file.map(|f| f.p))?,
        alpha: pick("alpha", args.alpha, file.map(|f| f.alpha))?,
        mu0: pick("mu0", args.mu0, file.map(|f| f.mu0))?,
        k: pick("k", args.k, file.map(|f| f.k))?,
    };
    Ok(raw.validate()?)
}

fn meta() -> Value {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({
        "tool": "sirsvp",
        "version": env!("CARGO_PKG_VERSION"),
        "generated_at_unix": now,
    })
}

/// Seventeen significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0.0000000000000000e0".to_string()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string().to_lowercase()
    }
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn emit(output: &OutputArgs, bytes: &[u8]) -> CliResult<()> {
    match &output.out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).context("writing to stdout")?;
            out.flush().context("writing to stdout")?;
        }
    }
    Ok(())
}

fn emit_json(output: &OutputArgs, mut doc: Value) -> CliResult<()> {
    if !output.no_meta {
        doc["meta"] = meta();
    }
    let mut text = serde_json::to_string_pretty(&doc).context("serializing JSON")?;
    text.push('\n');
    emit(output, text.as_bytes())
}

/// Writes a header plus rows, preceded by `#` metadata lines unless suppressed.
fn emit_csv(output: &OutputArgs, header: &[String], rows: &[Vec<String>], extra_meta: &[String]) -> CliResult<()> {
    let mut buf = Vec::new();
    if !output.no_meta {
        let m = meta();
        writeln!(
            buf,
            "# {} {} generated_at_unix={}",
            m["tool"].as_str().unwrap_or_default(),
            m["version"].as_str().unwrap_or_default(),
            m["generated_at_unix"]
        )
        .unwrap();
        for line in extra_meta {
            writeln!(buf, "# {line}").unwrap();
        }
    }
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(header).context("writing CSV")?;
        for row in rows {
            w.write_record(row).context("writing CSV")?;
        }
        w.flush().context("writing CSV")?;
    }
    emit(output, &buf)
}

fn key_value_csv(output: &OutputArgs, pairs: Vec<(String, String)>) -> CliResult<()> {
    let rows: Vec<Vec<String>> = pairs.into_iter().map(|(k, v)| vec![k, v]).collect();
    emit_csv(output, &["key".into(), "value".into()], &rows, &[])
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    let params = load_params(&args.params)?;
    let derived = derived_quantities(&params);
    let regime = classify_regime(&params);
    let fate = population_fate(&params).ok();
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(
            &args.output,
            json!({
                "params": to_value(&params.to_raw()),
                "n_star": params.n_star(),
                "derived": to_value(&derived),
                "disease_free": to_value(&Equilibrium::disease_free()),
                "endemic": to_value(&regime.endemic),
                "regime": {
                    "r0": regime.r0,
                    "regime": regime.regime,
                    "certificate_basis": regime.certificate_basis,
                },
                "population_fate": to_value(&fate),
            }),
        ),
        Format::Csv => {
            let raw = params.to_raw();
            let mut pairs = vec![
                ("b".into(), fmt_f64(raw.b)),
                ("beta".into(), fmt_f64(raw.beta)),
                ("nu".into(), fmt_f64(raw.nu)),
                ("delta".into(), fmt_f64(raw.delta)),
                ("p".into(), fmt_f64(raw.p)),
                ("alpha".into(), fmt_f64(raw.alpha)),
                ("mu0".into(), fmt_f64(raw.mu0)),
                ("k".into(), fmt_f64(raw.k)),
                ("n_star".into(), fmt_f64(params.n_star())),
                ("gamma".into(), fmt_f64(derived.gamma)),
                ("r0".into(), fmt_f64(derived.r0)),
                ("rho".into(), fmt_f64(derived.rho)),
                ("i_u".into(), opt_f64(derived.i_u)),
                ("regime".into(), regime.regime.as_str().into()),
            ];
            if let Some(e) = regime.endemic {
                pairs.push(("s_e".into(), fmt_f64(e.s)));
                pairs.push(("i_e".into(), fmt_f64(e.i)));
                pairs.push(("r_e".into(), fmt_f64(e.r)));
            }
            if let Some(f) = fate {
                pairs.push(("fate".into(), fate_str(f.fate).into()));
                pairs.push(("n_e".into(), opt_f64(f.n_e)));
            }
            key_value_csv(&args.output, pairs)
        }
    }
}

fn fate_str(f: Fate) -> &'static str {
    match f {
        Fate::Extinction => "extinction",
        Fate::Regulation => "regulation",
    }
}

fn need(value: Option<f64>, flag: &str, system: &str) -> CliResult<f64> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --system {system}")))
}

fn initial_state(args: &SimulateArgs, params: &ModelParams) -> CliResult<InitialState> {
    Ok(match args.system {
        SystemArg::Full => InitialState::Full(FullState::from_counts(
            need(args.x0, "x0", "full")?,
            need(args.y0, "y0", "full")?,
            need(args.z0, "z0", "full")?,
        )?),
        SystemArg::Fraction => {
            let i = need(args.i0, "i0", "fraction")?;
            let r = need(args.r0fr, "r0fr", "fraction")?;
            let s = args.s0.unwrap_or(1.0 - i - r);
            InitialState::FractionWithN {
                state: FractionState::normalized(s, i, r)?,
                n: args.n0.unwrap_or_else(|| params.n_star()),
            }
        }
        SystemArg::Reduced => InitialState::Reduced(ReducedState::new(
            need(args.i0, "i0", "reduced")?,
            need(args.r0fr, "r0fr", "reduced")?,
        )?),
    })
}

/// `(I, R)` of a sample in any formulation.
fn infected_removed(system: System, s: &Sample) -> (f64, f64) {
    match system {
        System::Full => {
            let n = s.state[3];
            (s.state[1] / n, s.state[2] / n)
        }
        System::FractionWithN => (s.state[1], s.state[2]),
        System::Reduced => (s.state[0], s.state[1]),
    }
}

fn simulate(args: SimulateArgs) -> CliResult<()> {
    let params = load_params(&args.params)?;
    let initial = initial_state(&args, &params)?;
    let mut spec = IntegrationSpec::new(initial, args.t_end).with_tolerances(args.rtol, args.atol);
    spec.max_steps = args.max_steps;
    if let Some(dt) = args.dt {
        spec = spec.with_sampling(Sampling::Uniform(dt));
    }
    let traj = integrate(&spec, &params)?;

    let endemic = endemic_equilibrium(&params);
    let lyap: Option<(&str, Vec<f64>)> = args.lyapunov.then(|| {
        let values = traj
            .samples
            .iter()
            .map(|s| {
                let (i, r) = infected_removed(traj.system, s);
                match &endemic {
                    None => l_dfe(&FractionState { s: 1.0 - i - r, i, r }),
                    Some(eq) => l_ee(&ReducedState { i, r }, eq, &params).unwrap_or(f64::NAN),
                }
            })
            .collect();
        (if endemic.is_some() { "L_EE" } else { "L_DFE" }, values)
    });

    let mut columns: Vec<String> = std::iter::once("t")
        .chain(traj.component_names().iter().copied())
        .map(String::from)
        .collect();
    if let Some((name, _)) = &lyap {
        columns.push((*name).to_string());
    }
    let rows: Vec<Vec<f64>> = traj
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut row = vec![s.t];
            row.extend_from_slice(&s.state);
            if let Some((_, l)) = &lyap {
                row.push(l[k]);
            }
            row
        })
        .collect();

    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let text_rows: Vec<Vec<String>> =
                rows.iter().map(|r| r.iter().copied().map(fmt_f64).collect()).collect();
            let extra = [
                format!("system={}", system_str(traj.system)),
                format!("termination={}", serde_json::to_string(&traj.termination).unwrap()),
            ];
            emit_csv(&args.output, &columns, &text_rows, &extra)
        }
        Format::Json => emit_json(
            &args.output,
            json!({
                "params": to_value(&params.to_raw()),
                "system": traj.system,
                "termination": to_value(&traj.termination),
                "stats": to_value(&traj.stats),
                "columns": columns,
                "rows": rows,
            }),
        ),
    }
}

fn system_str(s: System) -> &'static str {
    match s {
        System::Full => "full",
        System::FractionWithN => "fraction-with-n",
        System::Reduced => "reduced",
    }
}

fn verify(args: VerifyArgs) -> CliResult<()> {
    let params = load_params(&args.params)?;
    let regime = classify_regime(&params);
    let (passed, doc) = match regime.endemic {
        None => {
            let rep = certify_dfe(&params, args.resolution)?;
            (
                rep.passed,
                json!({
                    "params": to_value(&params.to_raw()),
                    "regime": regime.regime,
                    "certificate": to_value(&rep),
                }),
            )
        }
        Some(eq) => {
            let region = match args.region {
                RegionArg::Full => Region::FullSimplex,
                RegionArg::Omega => Region::Omega,
                RegionArg::Auto => match regime.certificate_basis {
                    CertificateBasis::IuAtMostRho => Region::Omega,
                    _ => Region::FullSimplex,
                },
            };
            let rep = certify(&params, &eq, region, args.resolution)?;
            let omega = omega_invariance_check(&params)?;
            (
                rep.passed,
                json!({
                    "params": to_value(&params.to_raw()),
                    "regime": regime.regime,
                    "certificate_basis": regime.certificate_basis,
                    "certificate": to_value(&rep),
                    "omega_invariance": to_value(&omega),
                }),
            )
        }
    };
    let mut doc = doc;
    doc["status"] = json!(if passed { "pass" } else { "fail" });
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&args.output, doc)?,
        Format::Csv => {
            let cert = &doc["certificate"];
            let mut pairs = vec![
                ("status".to_string(), doc["status"].as_str().unwrap().to_string()),
                ("regime".to_string(), regime.regime.as_str().to_string()),
                ("points_evaluated".to_string(), cert["points_evaluated"].to_string()),
                ("violation_count".to_string(), cert["violation_count"].to_string()),
                ("max_orbital".to_string(), fmt_f64(cert["max_orbital"].as_f64().unwrap_or(f64::NAN))),
            ];
            if let Some(region) = cert["region"].as_str() {
                pairs.insert(2, ("region".to_string(), region.to_string()));
            }
            key_value_csv(&args.output, pairs)?;
        }
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::CertificateFailed)
    }
}

fn sweep(args: SweepArgs) -> CliResult<()> {
    let base = load_params(&args.params)?.to_raw();
    let has = |t: TaskArg| args.tasks.contains(&t);
    let mut spec = SweepSpec::new(base, args.param, args.lo, args.hi, args.points);
    spec.tasks = SweepTasks {
        equilibria: has(TaskArg::Equilibria),
        regime: has(TaskArg::Regime),
        fate: has(TaskArg::Fate),
        probe: has(TaskArg::Probe),
    };
    let result = run_sweep(&spec)?;
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Json => emit_json(&args.output, to_value(&result)),
        Format::Csv => {
            let header: Vec<String> = [
                args.param.name(),
                "gamma",
                "r0",
                "rho",
                "i_u",
                "i_e",
                "r_e",
                "regime",
                "fate",
                "n_e",
                "probe",
                "skipped",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let rows: Vec<Vec<String>> = result
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.value),
                        opt_f64(r.gamma),
                        opt_f64(r.r0),
                        opt_f64(r.rho),
                        opt_f64(r.i_u),
                        opt_f64(r.i_e),
                        opt_f64(r.r_e),
                        r.regime.map(|g| g.as_str().to_string()).unwrap_or_default(),
                        r.fate.map(|f| fate_str(f).to_string()).unwrap_or_default(),
                        opt_f64(r.n_e),
                        match r.probe {
                            None => String::new(),
                            Some(p) => match p.converged_at {
                                Some(t) => fmt_f64(t),
                                None => "not-converged".to_string(),
                            },
                        },
                        r.skipped.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            let raw = serde_json::to_string(&result.base).unwrap();
            emit_csv(&args.output, &header, &rows, &[format!("base={raw}")])
        }
    }
}
