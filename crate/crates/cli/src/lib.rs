//! Batch driver for the plate laboratory: one subcommand per lab, plain
//! text configuration, CSV output.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use plate_lab::counterexample::{
    blowup_ratio_sequence, default_margin, numerical_cross_check, potential_norm_partial_sums, schedule_csv,
    BlowupSchedule, CrossCheckOptions,
};
use plate_lab::estimates::{
    check_validity_window, ensemble_growth, fixed_time_ratio, strichartz_ensemble, sweep_csv, SweepRow, Variant,
};
use plate_lab::ground_state::{
    check_bl_conditions, find_ground_state, newton_1d, newton_residuals, verify_fourth_order, w_1d, GroundStateOptions,
};
use plate_lab::kato_ponce::{
    dilation_scaling_check, exceedances, run_ensemble, standard_tuples, EnsembleRow, Fixtures, GridPolicy,
    ENSEMBLE_COLUMNS,
};
use plate_lab::norms::{enumerate_admissible, sobolev_seminorm, TimeGrid};
use plate_lab::propagators::free_plate_solution;
use plate_lab::solver::{picard_solve, rescaled_potential, standing_wave_with_tol, PotentialSpec, SolverOptions};
use plate_lab::testfn::TestFunction;
use plate_lab::{Error, Exponent, Field, Grid, Rational};

pub use config::{parse_config, Command, ConfigError, ExperimentConfig};

/// Tool version written into every CSV.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding the output directory.
pub const OUTPUT_ENV: &str = "PLATE_LAB_OUTPUT_DIR";

/// Output directory when neither the environment nor the config sets one.
pub const DEFAULT_OUTPUT: &str = "plate-lab-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// A failed run with its exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub messages: Vec<String>,
}

impl CliError {
    fn config(messages: Vec<String>) -> Self {
        Self { code: EXIT_CONFIG, kind: "config", messages }
    }

    fn certification(message: impl Into<String>) -> Self {
        Self { code: EXIT_CERTIFICATION, kind: "certification", messages: vec![message.into()] }
    }

    /// One-line JSON record for machine consumption.
    pub fn record(&self) -> String {
        serde_json::json!({
            "status": "error",
            "exit": self.code,
            "kind": self.kind,
            "messages": self.messages,
        })
        .to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::InvalidGrid(..)
            | Error::InvalidExponent(..)
            | Error::IndexRelation(..)
            | Error::AdmissibleClass(..)
            | Error::InvalidArgument(..)
            | Error::UnsupportedOrder(..)
            | Error::InvalidTimeGrid(..)
            | Error::InvalidSchedule(..)
            | Error::NonzeroMean(..)
            | Error::Parse(..) => (EXIT_CONFIG, "config"),
            Error::DomainTooSmall(..) | Error::Io(..) => (EXIT_RESOURCE, "resource"),
            _ => (EXIT_CERTIFICATION, "numerical"),
        };
        Self { code, kind, messages: vec![e.to_string()] }
    }
}

impl From<Vec<ConfigError>> for CliError {
    fn from(errs: Vec<ConfigError>) -> Self {
        Self::config(errs.iter().map(|e| e.to_string()).collect())
    }
}

/// Files written and a human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Writer<'a> {
    dir: &'a Path,
    command: Command,
    out: Outcome,
}

impl Writer<'_> {
    /// Writes `# plate-lab <version> <command>` followed by `body`, which
    /// starts with its column row.
    fn csv(&mut self, stem: &str, body: &str) -> Result<(), CliError> {
        fs::create_dir_all(self.dir).map_err(Error::from)?;
        let path = self.dir.join(format!("{}_{stem}.csv", self.command));
        let text = format!("# plate-lab {VERSION} {}\n{body}", self.command);
        fs::write(&path, text).map_err(Error::from)?;
        self.out.files.push(path);
        Ok(())
    }

    fn say(&mut self, line: impl AsRef<str>) {
        self.out.summary.push_str(line.as_ref());
        self.out.summary.push('\n');
    }
}

/// Resolves the output directory: environment, then config, then default.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
    }
}

fn opt_f64(cfg: &ExperimentConfig, key: &str, default: f64) -> Result<f64, CliError> {
    match cfg.option(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::config(vec![format!("[options] {key} = `{v}` is not a number")])),
    }
}

fn opt_usize(cfg: &ExperimentConfig, key: &str, default: usize) -> Result<usize, CliError> {
    match cfg.option(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| CliError::config(vec![format!("[options] {key} = `{v}` is not a non-negative integer")])),
    }
}

fn opt_bool(cfg: &ExperimentConfig, key: &str) -> Result<bool, CliError> {
    match cfg.option(key) {
        None | Some("false") => Ok(false),
        Some("true") => Ok(true),
        Some(v) => Err(CliError::config(vec![format!("[options] {key} = `{v}` is not true/false")])),
    }
}

fn full_grid(cfg: &ExperimentConfig) -> Result<Grid, CliError> {
    let g = cfg.grid.as_ref().expect("validated");
    Ok(Grid::new(g.d, g.n.expect("validated"), g.l.expect("validated"))?)
}

/// Runs a validated configuration, writing into `dir`.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let mut w = Writer { dir, command: cfg.command, out: Outcome::default() };
    match cfg.command {
        Command::AdmissiblePairs => admissible_pairs(cfg, &mut w)?,
        Command::GroundState => ground_state(cfg, &mut w)?,
        Command::VerifyDispersive => verify_dispersive(cfg, &mut w)?,
        Command::VerifyStrichartz => verify_strichartz(cfg, &mut w)?,
        Command::KatoPonce => kato_ponce(cfg, &mut w)?,
        Command::Counterexample => counterexample(cfg, &mut w)?,
        Command::Simulate => simulate(cfg, &mut w)?,
    }
    Ok(w.out)
}

fn admissible_pairs(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let d = cfg.grid.as_ref().expect("validated").d;
    let den = opt_usize(cfg, "den", 12)?;
    if den == 0 {
        return Err(CliError::config(vec!["[options] den must be positive".into()]));
    }
    let pairs = enumerate_admissible(d, den as i64);
    let mut body = String::from("q,r\n");
    for p in &pairs {
        let _ = writeln!(body, "{},{}", p.q, p.r);
    }
    w.csv("pairs", &body)?;
    let list: Vec<String> = pairs.iter().map(|p| p.to_string()).collect();
    w.say(format!("{} admissible pairs for d = {d} with 1/q in (1/{den})Z: {}", pairs.len(), list.join(" ")));
    Ok(())
}

fn ground_state(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let g = cfg.grid.as_ref().expect("validated");
    if g.d == 1 {
        let grid = Grid::new(1, g.n.unwrap_or(2048), g.l.unwrap_or(40.0))?;
        let res = newton_residuals(&grid)?;
        let mut body = String::from("x,v,W\n");
        for x in grid.coords().into_iter().filter(|&x| x >= 0.0) {
            let _ = writeln!(body, "{x:.12e},{:.12e},{:.12e}", newton_1d(x), w_1d(x));
        }
        w.csv("profile", &body)?;
        let report = format!(
            "quantity,value\nsecond_order,{:.6e}\nfourth_order,{:.6e}\nintermediate,{:.6e}\n",
            res.second_order, res.fourth_order, res.intermediate
        );
        w.csv("report", &report)?;
        w.say(format!(
            "d = 1 closed form: max|-v''+v-v^2| = {:.3e}, max|v''''-v+Wv| = {:.3e}",
            res.second_order, res.fourth_order
        ));
        if !(res.second_order < 1e-8 && res.fourth_order < 1e-6) {
            return Err(CliError::certification("closed-form residuals above 1e-8 / 1e-6"));
        }
        return Ok(());
    }
    let gs = find_ground_state(g.d, GroundStateOptions::default())?;
    let bl = check_bl_conditions(g.d)?;
    let rep = verify_fourth_order(&gs, &gs.w_profile, 0.02, gs.matching_radius.min(15.0), 1e-8)?;
    w.csv("profile", &gs.to_csv(""))?;
    let width = gs.bracket.1 - gs.bracket.0;
    let report = format!(
        "quantity,value\nsigma_star,{:.15e}\nbracket_width,{:.3e}\nmatching_radius,{:.6e}\ndecay_rate,{:.6e}\nsecond_order_residual,{:.3e}\nfourth_order_residual,{:.3e}\nbl_all_pass,{}\n",
        gs.sigma_star,
        width,
        gs.matching_radius,
        gs.decay.delta,
        rep.second_order,
        rep.fourth_order,
        bl.all_pass()
    );
    w.csv("report", &report)?;
    w.say(format!(
        "d = {}: sigma* = {:.13}, bracket {:.1e}, decay rate {:.4}, residuals {:.2e} / {:.2e}",
        g.d, gs.sigma_star, width, gs.decay.delta, rep.second_order, rep.fourth_order
    ));
    let ok = width < 1e-12
        && rep.second_order < 1e-6
        && rep.fourth_order < 1e-4
        && bl.all_pass()
        && (0.9..=1.1).contains(&gs.decay.delta);
    if !ok {
        return Err(CliError::certification("ground-state certification failed; see report"));
    }
    Ok(())
}

fn gaussian_data(grid: &Grid, width: f64) -> Result<Field, CliError> {
    Ok(TestFunction::gaussian(grid.dim(), width).sample(grid)?)
}

fn verify_dispersive(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let grid = full_grid(cfg)?;
    let time = cfg.time.expect("validated");
    check_validity_window(&grid, time.t_end)?;
    let u0 = gaussian_data(&grid, opt_f64(cfg, "width", 1.0)?)?;
    let mut body = String::from("t,ratio_r2,ratio_rinf\n");
    let mut worst: f64 = 0.0;
    for i in 1..time.m {
        let t = time.t_end * i as f64 / (time.m - 1) as f64;
        let r2 = fixed_time_ratio(&u0, t, Exponent::int(2))?;
        let rinf = fixed_time_ratio(&u0, t, Exponent::INF)?;
        worst = worst.max((r2 - 1.0).abs());
        let _ = writeln!(body, "{t:.12e},{r2:.15e},{rinf:.15e}");
    }
    w.csv("ratios", &body)?;
    w.say(format!("max |ratio_2 - 1| = {worst:.3e} over {} times up to {}", time.m - 1, time.t_end));
    if worst > 1e-12 {
        return Err(CliError::certification(format!("L2 ratio deviates from 1 by {worst:e}")));
    }
    Ok(())
}

fn verify_strichartz(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let grid = full_grid(cfg)?;
    let time = cfg.time.expect("validated");
    let ens = cfg.ensemble.expect("validated");
    let (q, r) = (cfg.indices.q.expect("validated"), cfg.indices.r.expect("validated"));
    let s = cfg.indices.s.map(plate_lab::exponent::rational_to_f64).unwrap_or(0.0);
    let variant = Variant::parse(cfg.option("variant").unwrap_or("schrodinger"))?;
    let t_long = time.t_end;
    let t_short = t_long / 10.0;
    let dt = t_long / (time.m - 1) as f64;
    check_validity_window(&grid, t_long)?;

    let dist = strichartz_ensemble(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(ens.seed);
    let members = (0..ens.count)
        .map(|_| {
            let f = dist.draw(grid.dim(), &mut rng).sample(&grid)?;
            if variant == Variant::PlateSincInput {
                // velocity data must be mean-zero: use its Laplacian
                plate_lab::grid::apply_radial_multiplier(&f, |k2| Complex64::new(-k2, 0.0)).map(Field::into_space)
            } else {
                Ok(f)
            }
        })
        .collect::<plate_lab::Result<Vec<Field>>>()?;
    let quotients = ensemble_growth(&members, q, r, s, variant, t_short, t_long, dt)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &(a, b) in &quotients {
        worst = worst.max(b / a - 1.0);
        for (t, qv) in [(t_short, a), (t_long, b)] {
            rows.push(SweepRow { variant, d: grid.dim(), n: grid.points_per_axis(), l: grid.half_width(), s, q, r, t, quotient: qv });
        }
    }
    w.csv("quotients", &sweep_csv(&rows))?;
    w.say(format!(
        "{} members, pair ({q}, {r}), s = {s}: max growth from T = {t_short} to T = {t_long} is {:.2}%",
        ens.count,
        100.0 * worst
    ));
    if worst >= 0.1 {
        return Err(CliError::certification(format!("quotient grew by {:.2}% (limit 10%)", 100.0 * worst)));
    }
    Ok(())
}

fn kato_ponce(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let ens = cfg.ensemble.expect("validated");
    let dims: Vec<usize> = match &cfg.grid {
        Some(g) => vec![g.d],
        None => vec![1, 3],
    };
    let tuples = standard_tuples();
    let fixtures = Fixtures::shipped()?;
    let mut rows: Vec<EnsembleRow> = Vec::new();
    for &d in &dims {
        rows.extend(run_ensemble(d, &tuples, ens.count, ens.seed)?);
    }
    let mut body = format!("{ENSEMBLE_COLUMNS}\n");
    for row in &rows {
        body.push_str(&row.csv());
        body.push('\n');
    }
    w.csv("ratios", &body)?;

    let mut dil = String::from("d,lambda,s,r,ratio\n");
    let mut dil_worst: f64 = 0.0;
    for d in dims.iter().copied() {
        let (grid, policy) = if d == 1 {
            (Grid::new(1, 512, 20.0)?, GridPolicy::Fixed)
        } else {
            (Grid::new(d, 64, 8.0)?, GridPolicy::ScaleBox)
        };
        let f = TestFunction::gaussian(d, 1.0);
        for lambda in [0.5, 2.0, 3.0] {
            for (s, r) in [(0.0, Exponent::int(4)), (1.0, Exponent::int(2)), (2.0, Exponent::int(2))] {
                let ratio = dilation_scaling_check(&f, lambda, s, r, &grid, policy)?;
                dil_worst = dil_worst.max((ratio - 1.0).abs());
                let _ = writeln!(dil, "{d},{lambda},{s},{r},{ratio:.15e}");
            }
        }
    }
    w.csv("dilation", &dil)?;

    let over = exceedances(&rows, &fixtures, 2.0);
    let holder_fail = rows
        .iter()
        .filter(|r| r.s == Rational::from_integer(0) && r.ratio > 1.0 + 1e-10)
        .filter(|r| r.tuple_id.starts_with("holder-classical") || r.tuple_id.starts_with("kp-"))
        .count();
    w.say(format!(
        "{} ratios, {} tuples above 2 C*, {} s = 0 ratios above 1, dilation |ratio - 1| <= {dil_worst:.2e}",
        rows.len(),
        over.len(),
        holder_fail
    ));
    if !over.is_empty() || holder_fail > 0 || dil_worst >= 1e-6 {
        let mut msg = String::from("ensemble certification failed");
        for (id, m, c) in over {
            let _ = write!(msg, "; {id}: {m:.4} > 2 x {c:.4}");
        }
        return Err(CliError::certification(msg));
    }
    Ok(())
}

fn counterexample(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let d = cfg.grid.as_ref().expect("validated").d;
    let idx = cfg.indices;
    let (s, q, r) = (idx.s.expect("validated"), idx.q.expect("validated"), idx.r.expect("validated"));
    let (alpha, beta) = (idx.alpha.expect("validated"), idx.beta.expect("validated"));
    let margin = match cfg.option("margin") {
        None => default_margin(),
        Some(v) => plate_lab::exponent::parse_rational(v)?,
    };
    let terms = opt_usize(cfg, "terms", 1000)?.max(1);
    let sched = BlowupSchedule::with_margin(alpha, beta, s, d, margin)?;
    let sums = potential_norm_partial_sums(&sched, 1.0, terms)?;
    let seq = blowup_ratio_sequence(&sched, q, r, 100, 100_000)?;
    w.csv("schedule", &schedule_csv(&sched, q, r, 1.0, terms)?)?;
    w.say(format!(
        "a = {}, b = {}, gap = {}; {}; R_k slope {:.6} vs predicted {} ({:.3}% off); |W| normalized to 1",
        sched.a,
        sched.b,
        sched.gap(),
        sums.verdict,
        seq.fitted_slope,
        seq.predicted,
        100.0 * seq.relative_slope_error()
    ));
    let mut ok = sums.convergent && seq.relative_slope_error() < 0.02 && seq.strictly_increasing();
    if opt_bool(cfg, "cross_check")? {
        let k = opt_usize(cfg, "k", 2)?.max(1) as u64;
        let gs = find_ground_state(d, GroundStateOptions::default())?;
        let rep = numerical_cross_check(&sched, &gs, k, q, r, CrossCheckOptions::default())?;
        let body = format!(
            "quantity,value\nk,{}\neps,{:.12e}\nlength,{:.12e}\nfidelity,{:.3e}\nhs_variation,{:.3e}\nnumerator,{:.12e}\nnumerator_bound,{:.12e}\ndenominator,{:.12e}\ndenominator_analytic,{:.12e}\nquotient,{:.12e}\nquotient_bound,{:.12e}\n",
            rep.k, rep.eps, rep.length, rep.fidelity, rep.hs_variation, rep.numerator, rep.numerator_bound,
            rep.denominator, rep.denominator_analytic, rep.quotient, rep.quotient_bound
        );
        w.csv("cross_check", &body)?;
        w.say(format!(
            "cross check k = {k}: fidelity {:.2e}, H^s variation {:.2e}, quotient {:.4e} >= {:.4e}",
            rep.fidelity, rep.hs_variation, rep.quotient, rep.quotient_bound
        ));
        ok &= rep.all_pass();
    }
    if !ok {
        return Err(CliError::certification("counterexample certification failed; see summary"));
    }
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let grid = full_grid(cfg)?;
    let time = cfg.time.expect("validated");
    let times = TimeGrid::new(time.t_end, time.m)?;
    let kind = cfg.option("potential").unwrap_or("zero");
    let (u0, u1, potential, exact): (Field, Field, PotentialSpec, Box<dyn Fn(f64) -> plate_lab::Result<Field>>) =
        match kind {
            "zero" => {
                let u0 = gaussian_data(&grid, opt_f64(cfg, "width", 1.0)?)?;
                let u1 = Field::zeros(grid, plate_lab::Rep::Space);
                let (a, b) = (u0.clone(), u1.clone());
                let exact = Box::new(move |t: f64| Ok(free_plate_solution(&a, &b, t)?.u));
                (u0, u1, PotentialSpec::zero(grid), exact)
            }
            "standing-wave" => {
                let eps = opt_f64(cfg, "eps", 1.0)?;
                let tail = opt_f64(cfg, "tail_tol", 1e-6)?;
                let gs = find_ground_state(grid.dim(), GroundStateOptions::default())?;
                let u0 = standing_wave_with_tol(&gs, eps, 0.0, &grid, tail)?;
                let u1 = u0.scaled(Complex64::new(0.0, eps * eps));
                let pot = PotentialSpec::static_profile(rescaled_potential(&gs.w_profile, eps, &grid)?);
                let base = u0.clone();
                let exact = Box::new(move |t: f64| Ok(base.scaled(Complex64::from_polar(1.0, eps * eps * t))));
                (u0, u1, pot, exact)
            }
            other => {
                return Err(CliError::config(vec![format!(
                    "[options] potential = `{other}` (expected zero or standing-wave)"
                )]))
            }
        };
    let report = picard_solve(&u0, &u1, None, &potential, &times, SolverOptions::default())?;
    let norm0 = sobolev_seminorm(&u0, 0.0, Exponent::int(2))?;
    let mut body = String::from("t,l2,h2,rel_error\n");
    let mut worst: f64 = 0.0;
    for (t, u) in times.nodes().iter().zip(report.trajectory.fields()) {
        let diff = u.sub(&exact(*t)?)?;
        let e = sobolev_seminorm(&diff, 0.0, Exponent::int(2))? / norm0;
        worst = worst.max(e);
        let _ = writeln!(
            body,
            "{t:.12e},{:.12e},{:.12e},{e:.6e}",
            sobolev_seminorm(u, 0.0, Exponent::int(2))?,
            sobolev_seminorm(u, 2.0, Exponent::int(2))?
        );
    }
    w.csv("trajectory", &body)?;
    let mut sub = String::from("t_start,t_end,depth,iterations,factor\n");
    for s in &report.subintervals {
        let _ = writeln!(sub, "{:.12e},{:.12e},{},{},{:.6e}", s.t_start, s.t_end, s.depth, s.iterations, s.factor);
    }
    w.csv("subintervals", &sub)?;
    let limit = if kind == "zero" { 1e-8 } else { 1e-3 };
    w.say(format!(
        "{kind}: {} subintervals, max contraction factor {:.3}, max relative error {worst:.3e}",
        report.subintervals.len(),
        report.max_factor()
    ));
    if worst >= limit {
        return Err(CliError::certification(format!("relative error {worst:e} above {limit:e}")));
    }
    Ok(())
}

/// Replaces or appends `section.key = value` assignments in config text.
pub fn apply_overrides(text: &str, overrides: &[(String, String, String)]) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut section = String::new();
    for line in text.lines() {
        let t = line.split('#').next().unwrap_or("").trim();
        if let Some(name) = t.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
            section = name.trim().to_string();
        } else if let Some((k, _)) = t.split_once('=') {
            let k = k.trim();
            if overrides.iter().any(|(s, key, _)| *s == section && key == k) {
                continue;
            }
        }
        lines.push(line.to_string());
    }
    let mut out = lines.join("\n");
    out.push('\n');
    for (s, k, v) in overrides {
        let _ = writeln!(out, "[{s}]\n{k} = {v}");
    }
    out
}

/// Parses `argv[1..]`: `<command> [--config FILE] [key=value | section.key=value]...`.
/// Returns the effective configuration text.
pub fn config_text_from_args(args: &[String]) -> Result<String, CliError> {
    let mut text = String::new();
    let mut overrides: Vec<(String, String, String)> = Vec::new();
    let mut errors = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" || a == "-c" {
            match it.next() {
                Some(path) => match fs::read_to_string(path) {
                    Ok(t) => text = t,
                    Err(e) => return Err(CliError::from(Error::Io(format!("{path}: {e}")))),
                },
                None => errors.push("--config needs a file argument".to_string()),
            }
        } else if let Some((k, v)) = a.split_once('=') {
            let (sec, key) = match k.split_once('.') {
                Some((s, key)) => (s.to_string(), key.to_string()),
                None => match config::section_of(k) {
                    Some(s) => (s.to_string(), k.to_string()),
                    None => {
                        errors.push(format!("unknown key `{k}` on the command line"));
                        continue;
                    }
                },
            };
            overrides.push((sec, key, v.to_string()));
        } else if Command::parse(a).is_some() {
            overrides.push(("run".into(), "command".into(), a.clone()));
        } else {
            errors.push(format!("unrecognized argument `{a}`"));
        }
    }
    if !errors.is_empty() {
        return Err(CliError::config(errors));
    }
    Ok(apply_overrides(&text, &overrides))
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args(args: &[String]) -> i32 {
    let result = config_text_from_args(args)
        .and_then(|text| parse_config(&text).map_err(CliError::from))
        .and_then(|cfg| {
            let dir = output_dir(&cfg);
            run(&cfg, &dir)
        });
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            for m in &e.messages {
                eprintln!("error: {m}");
            }
            eprintln!("{}", e.record());
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_existing_keys() {
        let text = "[grid]\nd = 2\nn = 8\n";
        let out = apply_overrides(text, &[("grid".into(), "d".into(), "3".into())]);
        let cfg = parse_config(&format!("[run]\ncommand = admissible-pairs\n{out}")).unwrap();
        assert_eq!(cfg.grid.unwrap().d, 3);
    }

    #[test]
    fn args_map_bare_keys_to_sections() {
        let args: Vec<String> = ["admissible-pairs", "d=3", "options.den=4"].iter().map(|s| s.to_string()).collect();
        let cfg = parse_config(&config_text_from_args(&args).unwrap()).unwrap();
        assert_eq!(cfg.command, Command::AdmissiblePairs);
        assert_eq!(cfg.option("den"), Some("4"));
        let bad: Vec<String> = ["nonsense"].iter().map(|s| s.to_string()).collect();
        assert_eq!(config_text_from_args(&bad).unwrap_err().code, EXIT_CONFIG);
    }

    #[test]
    fn error_record_is_escaped_json() {
        let e = CliError::config(vec!["a \"b\"\nc".into()]);
        let line = e.record();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["status"], "error");
        assert_eq!(v["exit"], 2);
        assert_eq!(v["kind"], "config");
        assert_eq!(v["messages"][0], "a \"b\"\nc");
    }

    #[test]
    fn library_errors_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::DomainTooSmall("x".into())).code, EXIT_RESOURCE);
        assert_eq!(CliError::from(Error::IndexRelation("x".into())).code, EXIT_CONFIG);
        assert_eq!(CliError::from(Error::Certification("x".into())).code, EXIT_CERTIFICATION);
    }
}
