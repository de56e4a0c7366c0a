use std::path::PathBuf;

use stickyrelax::oracle::simulate_ep;
use stickyrelax::relax::default_tau_sequence;
use stickyrelax::validate::{
    avoid_events, bumps_along_clusters, check_initial_continuity, check_oleinik, check_oleinik_clusters,
    check_potential_identities, check_weak_form, compare_layers, vacuum_points, ClusterSource,
};
use stickyrelax::{convergence_study, Data, Drift, Error, ResidualReport, Solution, Tol};

use crate::config::RunConfig;
use crate::error::{CliError, Op, Result};
use crate::output::{num, read_columns, time_tag, write_atomic, write_table, Table};
use crate::svg;

/// Default largest admissible `|dm|`, `|du|` between the two layers.
pub const COMPARE_TOLERANCE: f64 = 1e-9;
/// Time margin kept between comparison times and collisions.
const EVENT_MARGIN: f64 = 1e-9;
const IDENTITY_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
const CONTINUITY_TOLERANCE: f64 = 1e-6;
const DRIFT_RELATIVE: f64 = 1e-14;

pub struct Context {
    pub config: Option<RunConfig>,
    pub out: PathBuf,
    pub seed: u64,
    pub tol: Tol,
}

impl Context {
    fn config(&self) -> Result<&RunConfig> {
        self.config.as_ref().ok_or_else(|| CliError::Config("no config given (use --config)".into()))
    }
}

pub fn solve(ctx: &Context) -> Result<()> {
    let cfg = ctx.config()?;
    let sol = Solution::with_tolerances(cfg.single_instance(ctx.seed)?, ctx.tol);
    let grid = cfg.grid_points()?;
    for &t in cfg.require_times()? {
        let mut table = Table::new(&["x", "m", "q", "u", "E", "branch"]);
        for s in sol.eval_grid(&grid, t).op("eval_grid")? {
            table.row([num(s.x), num(s.m), num(s.q), num(s.u), num(s.energy), s.branch.as_str().into()]);
        }
        write_table(&ctx.out, &format!("solution_t{}.csv", time_tag(t)), table)?;
    }
    Ok(())
}

pub fn oracle(ctx: &Context) -> Result<()> {
    let cfg = ctx.config()?;
    let data = cfg.single_instance(ctx.seed)?;
    let t_end = cfg.horizon()?;
    let traj = simulate_ep(&data, t_end, &ctx.tol).op("simulate_ep")?;
    let mut events = Table::new(&["event", "time", "position", "first_atom", "end_atom", "clusters_merged"]);
    for (j, e) in traj.events().iter().enumerate() {
        let atoms = e.atoms();
        events.row([
            j.to_string(),
            num(e.time),
            num(e.position),
            atoms.start.to_string(),
            atoms.end.to_string(),
            e.merged.len().to_string(),
        ]);
    }
    write_table(&ctx.out, "oracle_events.csv", events)?;
    for &t in &cfg.times {
        if t > t_end {
            return Err(CliError::Config(format!("time {t} lies beyond t_end = {t_end}")));
        }
        let mut table = Table::new(&["position", "mass", "velocity", "first_atom", "end_atom"]);
        for c in traj.state_at(t).clusters {
            table.row([num(c.position), num(c.mass), num(c.velocity), c.atoms.start.to_string(), c.atoms.end.to_string()]);
        }
        write_table(&ctx.out, &format!("oracle_t{}.csv", time_tag(t)), table)?;
    }
    Ok(())
}

pub fn compare(ctx: &Context) -> Result<()> {
    let cfg = ctx.config()?;
    let tolerance = cfg.compare_tolerance.unwrap_or(COMPARE_TOLERANCE);
    let times = cfg.positive_times()?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let extra = match cfg.grid {
        Some(g) => g.points(),
        None => Vec::new(),
    };
    let mut table = Table::new(&["instance", "t", "max_dm", "max_du", "max_dx", "clusters", "pass"]);
    let (mut rows, mut failed) = (0usize, 0usize);
    for (i, data) in cfg.instances(ctx.seed)?.into_iter().enumerate() {
        // room for times nudged past a collision
        let traj = simulate_ep(&data, horizon * (1.0 + 1e-6) + 1e-6, &ctx.tol).op("simulate_ep")?;
        let sol = Solution::with_tolerances(data, ctx.tol);
        for t in avoid_events(&times, &traj.event_times(), EVENT_MARGIN) {
            let c = compare_layers(&sol, &traj, t, &extra).op("compare_layers")?;
            let pass = c.max_dm <= tolerance && c.max_du <= tolerance;
            rows += 1;
            failed += usize::from(!pass);
            table.row([
                i.to_string(),
                num(c.t),
                num(c.max_dm),
                num(c.max_du),
                num(c.max_dx),
                c.clusters.to_string(),
                pass.to_string(),
            ]);
        }
    }
    write_table(&ctx.out, "compare.csv", table)?;
    if failed > 0 {
        return Err(CliError::Mismatch(format!("compare: {failed} of {rows} rows exceed tolerance {tolerance:e}")));
    }
    Ok(())
}

pub fn relax(ctx: &Context) -> Result<()> {
    let cfg = ctx.config()?;
    let data = cfg.single_instance(ctx.seed)?;
    let grid = cfg.grid_points()?;
    let taus = cfg.tau_sequence.clone().unwrap_or_else(default_tau_sequence);
    let t = cfg.relax_time.unwrap_or(1.0);
    let report = convergence_study(&data, t, &grid, &taus, &ctx.tol).op("convergence_study")?;
    log::info!(
        "relax at t = {t}: monotone err_m = {}, monotone err_u = {}, {} grid points excluded",
        report.monotone_m,
        report.monotone_u,
        report.excluded_points
    );
    let mut table = Table::new(&["tau", "err_m", "err_u", "l1_m"]);
    for r in &report.rows {
        table.row([num(r.tau), num(r.err_m), num(r.err_u), num(r.l1_m)]);
    }
    write_table(&ctx.out, "relax_report.csv", table)?;
    Ok(())
}

fn push_report(table: &mut Table, instance: usize, r: &ResidualReport) {
    for (level, ((p, res), floor)) in r.parameters.iter().zip(&r.residuals).zip(&r.floors).enumerate() {
        table.row([
            instance.to_string(),
            r.test.clone(),
            level.to_string(),
            num(*p),
            num(*res),
            num(*floor),
            r.pass.to_string(),
        ]);
    }
}

fn weak_form_reports<S: ClusterSource<f64>>(
    source: &S,
    times: &[f64],
    cfg: &RunConfig,
    layer: &str,
) -> Result<Vec<ResidualReport>> {
    let w = cfg.weak_form;
    let mut out = Vec::new();
    for &t in times {
        // keep the time support away from t = 0
        let bumps = bumps_along_clusters(source, t, w.rx, w.rt.min(0.5 * t)).op("bumps_along_clusters")?;
        for mut r in check_weak_form(source, &bumps, w.base, w.levels).op("check_weak_form")? {
            r.test = format!("{}_{layer}_t{}", r.test, time_tag(t));
            out.push(r);
        }
    }
    Ok(out)
}

fn drift_report(data: &Data, grid: &[f64], times: &[f64], tol: Tol) -> Result<ResidualReport> {
    let drift = Drift::with_tolerances(data.measure().clone(), tol);
    let total = data.total_mass();
    let mut residuals = Vec::new();
    let mut pass = true;
    for &t in times {
        let mut worst = 0.0f64;
        for &x in grid {
            match drift.eval_qbar(x, t) {
                Ok(q) => {
                    let m = drift.eval_mbar(x, t).op("eval_mbar")?;
                    let closed = -0.5 * m * m + 0.5 * total * m;
                    worst = worst.max((q - closed).abs() / closed.abs().max(total * total / 8.0));
                }
                Err(Error::IdentityViolation { prefix, closed, .. }) => {
                    pass = false;
                    worst = worst.max((prefix - closed).abs() / closed.abs().max(total * total / 8.0));
                }
                Err(e) => return Err(CliError::Numeric { op: "eval_qbar", source: e }),
            }
        }
        pass &= worst <= DRIFT_RELATIVE;
        residuals.push(worst);
    }
    Ok(ResidualReport {
        test: "drift_closed_form".into(),
        parameters: times.to_vec(),
        floors: vec![DRIFT_RELATIVE; residuals.len()],
        residuals,
        pass,
    })
}

pub fn validate(ctx: &Context) -> Result<()> {
    let cfg = ctx.config()?;
    let grid = cfg.grid_points()?;
    let times = cfg.positive_times()?;
    let horizon = times.iter().copied().fold(0.0, f64::max) + cfg.weak_form.rt;
    let pairs: Vec<(f64, f64)> = grid.windows(2).map(|w| (w[0], w[1])).collect();
    let continuity_times: Vec<f64> = (1..=20).map(|k| 0.5f64.powi(k)).collect();
    let continuity = cfg.continuity_tolerance.unwrap_or(CONTINUITY_TOLERANCE);
    let mut table = Table::new(&["instance", "check", "level", "parameter", "residual", "floor", "pass"]);
    let mut failed = Vec::new();
    for (i, data) in cfg.instances(ctx.seed)?.into_iter().enumerate() {
        let sol = Solution::with_tolerances(data.clone(), ctx.tol);
        let traj = simulate_ep(&data, horizon, &ctx.tol).op("simulate_ep")?;
        let mut reports = vec![
            check_oleinik(&sol, &times, &pairs).op("check_oleinik")?,
            check_oleinik_clusters(&traj, &times),
        ];
        reports.extend(weak_form_reports(&sol, &times, cfg, "formula")?);
        reports.extend(weak_form_reports(&traj, &times, cfg, "oracle")?);
        for &t in &times {
            let points = vacuum_points(&sol, t, IDENTITY_STEPS[0]).op("vacuum_points")?;
            if points.is_empty() {
                continue;
            }
            for mut r in check_potential_identities(&sol, &points, &IDENTITY_STEPS).op("check_potential_identities")? {
                r.test = format!("{}_t{}", r.test, time_tag(t));
                reports.push(r);
            }
        }
        reports.extend(
            check_initial_continuity(&sol, &grid, &continuity_times, continuity)
                .op("check_initial_continuity")?,
        );
        reports.push(drift_report(&data, &grid, &times, ctx.tol)?);
        for r in &reports {
            push_report(&mut table, i, r);
            if !r.pass {
                failed.push(format!("{i}:{}", r.test));
            }
        }
    }
    write_table(&ctx.out, "validate_report.csv", table)?;
    if !failed.is_empty() {
        return Err(CliError::Mismatch(format!("validate: failing checks {}", failed.join(", "))));
    }
    Ok(())
}

pub fn plot(ctx: &Context) -> Result<()> {
    let entries = std::fs::read_dir(&ctx.out).map_err(|source| CliError::Read { path: ctx.out.clone(), source })?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| (n.starts_with("solution_t") && n.ends_with(".csv")) || n == "relax_report.csv")
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(CliError::Config(format!(
            "no solution_t*.csv or relax_report.csv in {}",
            ctx.out.display()
        )));
    }
    for name in names {
        let cols = read_columns(&ctx.out.join(&name))?;
        let stem = name.trim_end_matches(".csv");
        let mut pairs = cols.names.into_iter().zip(cols.values);
        let Some((xname, x)) = pairs.next() else {
            return Err(CliError::Config(format!("{name} has no numeric columns")));
        };
        let series: Vec<(String, Vec<f64>)> = pairs.collect();
        let text = if name == "relax_report.csv" {
            let series: Vec<_> = series.into_iter().filter(|(n, _)| n.starts_with("err_")).collect();
            svg::loglog_plot("relaxation error", &xname, &x, &series)
        } else {
            svg::step_plot(stem, &xname, &x, &series)
        };
        write_atomic(&ctx.out, &format!("{stem}.svg"), text.as_bytes())?;
    }
    Ok(())
}
