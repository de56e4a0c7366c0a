//! Relaxation limit: slow-time scaled solutions against the drift solution.

use crate::cluster::Cluster;
use crate::eps::{Branch, EntropySolution};
use crate::error::Result;
use crate::measure::InitialData;
use crate::potentials::PotentialCoefficients;
use crate::scalar::{lit, to_f64, Scalar};
use crate::tolerance::Tolerances;

/// Scaled fields `m(x, t/tau)`, `u(x, t/tau)/tau`, `q(x, t/tau)/tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledSample<T> {
    pub m: T,
    pub u: T,
    pub q: T,
    pub branch: Branch,
}

/// Errors at one relaxation time.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationRow {
    pub tau: f64,
    /// Sup of `|m^tau - mbar|` over the retained grid.
    pub err_m: f64,
    /// Max over drift clusters of `|u^tau - ubar|` at the nearest scaled cluster.
    pub err_u: f64,
    /// `int |m^tau - mbar| dx`, computed exactly from the cluster positions.
    pub l1_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationReport {
    pub t: f64,
    pub rows: Vec<RelaxationRow>,
    /// Grid points kept after dropping those at drift concentrations.
    pub grid_points: usize,
    pub excluded_points: usize,
    pub monotone_m: bool,
    pub monotone_u: bool,
    /// `log(err_j / err_{j+1}) / log(tau_j / tau_{j+1})` for consecutive nonzero errors.
    pub observed_order_m: Vec<Option<f64>>,
    pub observed_order_u: Vec<Option<f64>>,
}

/// Slack allowed when checking that errors do not grow along the sequence.
pub const MONOTONE_SLACK: f64 = 1.05;

/// `tau = 2^{-k}`, `k = 1..=10`.
pub fn default_tau_sequence() -> Vec<f64> {
    (1..=10).map(|k| 0.5f64.powi(k)).collect()
}

fn scaled_solution<T: Scalar>(data: &InitialData<T>, tau: T, tol: &Tolerances<T>) -> Result<EntropySolution<T>> {
    Ok(EntropySolution::with_tolerances(data.with_tau(tau)?, *tol))
}

/// Fields of the relaxation-`tau` problem at slow time `t`.
pub fn eval_scaled<T: Scalar>(data: &InitialData<T>, x: T, t: T, tau: T) -> Result<ScaledSample<T>> {
    let sol = scaled_solution(data, tau, &Tolerances::default())?;
    let w = PotentialCoefficients::slow_time(tau, t)?;
    let s = sol.sample_with(&w, x)?;
    Ok(ScaledSample { m: s.m, u: s.u / tau, q: s.q / tau, branch: s.branch })
}

/// Drift clusters at time `t`, from the hull of the drift potential.
pub fn drift_clusters<T: Scalar>(data: &InitialData<T>, t: T, tol: &Tolerances<T>) -> Result<Vec<Cluster<T>>> {
    let sol = EntropySolution::with_tolerances(data.at_rest(), *tol);
    Ok(sol.snapshot_with(&PotentialCoefficients::drift(t)?)?.clusters().to_vec())
}

/// Clusters of the relaxation-`tau` problem at slow time `t`, velocities scaled by `1/tau`.
pub fn scaled_clusters<T: Scalar>(
    data: &InitialData<T>,
    t: T,
    tau: T,
    tol: &Tolerances<T>,
) -> Result<Vec<Cluster<T>>> {
    let sol = scaled_solution(data, tau, tol)?;
    let snap = sol.snapshot_with(&PotentialCoefficients::slow_time(tau, t)?)?;
    Ok(snap.clusters().iter().map(|c| Cluster { velocity: c.velocity / tau, ..c.clone() }).collect())
}

/// `int |F_a - F_b| dx` for the cumulative mass functions of two cluster lists.
pub fn l1_cdf_distance<T: Scalar>(a: &[Cluster<T>], b: &[Cluster<T>]) -> T {
    let mut jumps: Vec<(T, T)> = a.iter().map(|c| (c.position, c.mass)).collect();
    jumps.extend(b.iter().map(|c| (c.position, -c.mass)));
    jumps.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite positions"));
    let mut total = T::zero();
    let mut diff = T::zero();
    for w in jumps.windows(2) {
        diff = diff + w[0].1;
        total = total + diff.abs() * (w[1].0 - w[0].0);
    }
    total
}

fn observed_orders(taus: &[f64], errs: &[f64]) -> Vec<Option<f64>> {
    taus.windows(2)
        .zip(errs.windows(2))
        .map(|(t, e)| (e[0] > 0.0 && e[1] > 0.0).then(|| (e[0] / e[1]).ln() / (t[0] / t[1]).ln()))
        .collect()
}

fn monotone(errs: &[f64]) -> bool {
    errs.windows(2).all(|e| e[1] <= e[0] * MONOTONE_SLACK)
}

/// Tabulates the distance between the scaled solutions and the drift solution at slow time `t`.
pub fn convergence_study<T: Scalar>(
    data: &InitialData<T>,
    t: T,
    x_grid: &[T],
    tau_sequence: &[T],
    tol: &Tolerances<T>,
) -> Result<RelaxationReport> {
    let drift = crate::drift::DriftSolution::with_tolerances(data.measure().clone(), *tol);
    // drop grid points sitting at a jump of mbar
    let mut kept = Vec::new();
    for &x in x_grid {
        let d = lit::<T>(1e-9) * (T::one() + x.abs());
        if drift.eval_mbar(x - d, t)? == drift.eval_mbar(x + d, t)? {
            kept.push((x, drift.eval_mbar(x, t)?));
        }
    }
    let bar = drift_clusters(data, t, tol)?;
    let mut rows = Vec::with_capacity(tau_sequence.len());
    for &tau in tau_sequence {
        let sol = scaled_solution(data, tau, tol)?;
        let w = PotentialCoefficients::slow_time(tau, t)?;
        let mut err_m = T::zero();
        for &(x, mbar) in &kept {
            let m = data.measure().prefix_mass(sol.minimize_with(&w, x)?.k_min);
            err_m = err_m.max((m - mbar).abs());
        }
        let scaled = scaled_clusters(data, t, tau, tol)?;
        let mut err_u = T::zero();
        for c in &bar {
            let nearest = scaled
                .iter()
                .min_by(|a, b| {
                    (a.position - c.position).abs().partial_cmp(&(b.position - c.position).abs()).expect("finite")
                })
                .expect("nonempty data has clusters");
            err_u = err_u.max((nearest.velocity - c.velocity).abs());
        }
        rows.push(RelaxationRow {
            tau: to_f64(tau),
            err_m: to_f64(err_m),
            err_u: to_f64(err_u),
            l1_m: to_f64(l1_cdf_distance(&scaled, &bar)),
        });
    }
    let taus: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let em: Vec<f64> = rows.iter().map(|r| r.err_m).collect();
    let eu: Vec<f64> = rows.iter().map(|r| r.err_u).collect();
    for r in &rows {
        log::info!("tau = {:e}: err_m = {:e}, err_u = {:e}, l1 = {:e}", r.tau, r.err_m, r.err_u, r.l1_m);
    }
    Ok(RelaxationReport {
        t: to_f64(t),
        grid_points: kept.len(),
        excluded_points: x_grid.len() - kept.len(),
        monotone_m: monotone(&em),
        monotone_u: monotone(&eu),
        observed_order_m: observed_orders(&taus, &em),
        observed_order_u: observed_orders(&taus, &eu),
        rows,
    })
}
