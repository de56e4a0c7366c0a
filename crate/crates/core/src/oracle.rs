//! Event-driven sticky-particle reference simulation.
//!
//! Between collisions each cluster obeys a linear ODE with a closed-form
//! solution, so the simulation is exact up to root finding for collision
//! times. Colliding clusters merge, conserving mass and momentum.

use std::ops::Range;

use crate::cluster::{cluster_index, Cluster};
use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, InitialData};
use crate::potentials::{Dynamics, PotentialCoefficients};
use crate::scalar::{lit, to_f64, CompensatedSum, Scalar};
use crate::tolerance::Tolerances;

/// Clusters at one instant, ordered by position.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState<T> {
    pub time: T,
    pub clusters: Vec<Cluster<T>>,
}

impl<T: Scalar> ClusterState<T> {
    pub fn total_mass(&self) -> T {
        self.clusters.iter().map(|c| c.mass).collect::<CompensatedSum<T>>().value()
    }

    pub fn total_momentum(&self) -> T {
        self.clusters.iter().map(|c| c.mass * c.velocity).collect::<CompensatedSum<T>>().value()
    }

    /// The cluster containing atom `i`.
    pub fn cluster_of_atom(&self, i: usize) -> Option<&Cluster<T>> {
        cluster_index(&self.clusters, i).map(|j| &self.clusters[j])
    }
}

/// One merge of adjacent clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionEvent<T> {
    pub time: T,
    pub position: T,
    /// Atom ranges of the clusters that merged, left to right.
    pub merged: Vec<Range<usize>>,
}

impl<T> CollisionEvent<T> {
    /// Atoms of the cluster formed by the event.
    pub fn atoms(&self) -> Range<usize> {
        self.merged[0].start..self.merged[self.merged.len() - 1].end
    }
}

/// Full piecewise-analytic history of a sticky-particle system.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    dynamics: Dynamics,
    tau: T,
    total_mass: T,
    t_end: T,
    /// `states[0]` is the initial state, `states[j]` the state right after the `j`-th event time.
    states: Vec<ClusterState<T>>,
    events: Vec<CollisionEvent<T>>,
}

/// `(A, B, decay)` over an elapsed time `dt >= 0`.
fn motion<T: Scalar>(dynamics: Dynamics, tau: T, dt: T) -> (T, T, T) {
    if dt <= T::zero() {
        return (T::zero(), T::zero(), T::one());
    }
    let w = match dynamics {
        Dynamics::EulerPoisson => PotentialCoefficients::euler_poisson(tau, dt),
        Dynamics::Drift => PotentialCoefficients::drift(dt),
    }
    .expect("elapsed time is positive");
    (w.velocity_weight, w.force_weight, w.decay)
}

/// Half-own-mass force coefficient of a cluster.
fn cluster_force<T: Scalar>(prefix: T, mass: T, total: T) -> T {
    prefix + (mass - total) * lit(0.5)
}

/// Moves a cluster with force coefficient `f` forward by `dt`.
fn advance<T: Scalar>(dynamics: Dynamics, tau: T, c: &Cluster<T>, f: T, dt: T) -> (T, T) {
    match dynamics {
        Dynamics::EulerPoisson => {
            let (a, b, decay) = motion(dynamics, tau, dt);
            (c.position + c.velocity * a + f * b, c.velocity * decay - f * a)
        }
        Dynamics::Drift => (c.position - f * dt, -f),
    }
}

impl<T: Scalar> Trajectory<T> {
    pub fn dynamics(&self) -> Dynamics {
        self.dynamics
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn events(&self) -> &[CollisionEvent<T>] {
        &self.events
    }

    /// States at the start and right after each distinct event time.
    pub fn states(&self) -> &[ClusterState<T>] {
        &self.states
    }

    /// Times at which the cluster configuration changes.
    pub fn event_times(&self) -> Vec<T> {
        self.states[1..].iter().map(|s| s.time).collect()
    }

    fn forces(&self, state: &ClusterState<T>) -> Vec<T> {
        let mut prefix = T::zero();
        state
            .clusters
            .iter()
            .map(|c| {
                let f = cluster_force(prefix, c.mass, self.total_mass);
                prefix = prefix + c.mass;
                f
            })
            .collect()
    }

    /// Exact state at time `t` in `[0, t_end]`.
    pub fn state_at(&self, t: T) -> ClusterState<T> {
        let j = self.states.partition_point(|s| s.time <= t).max(1) - 1;
        let base = &self.states[j];
        let forces = self.forces(base);
        let dt = (t - base.time).max(T::zero());
        let clusters = base
            .clusters
            .iter()
            .zip(&forces)
            .map(|(c, &f)| {
                let (position, velocity) = advance(self.dynamics, self.tau, c, f, dt);
                Cluster { position, velocity, ..c.clone() }
            })
            .collect();
        ClusterState { time: t, clusters }
    }

    /// Re-runs the simulation from the state after event time `j` (or the start for `j = 0`).
    pub fn resume_from(&self, j: usize, tol: &Tolerances<T>) -> Result<Trajectory<T>> {
        let start = self.states[j].clone();
        let mut rest = run(self.dynamics, self.tau, self.total_mass, start, self.t_end, tol, self.atom_count())?;
        let prior_states = self.states[..j].to_vec();
        let prior_events: Vec<_> =
            self.events.iter().filter(|e| e.time <= self.states[j].time).cloned().collect();
        rest.states.splice(0..0, prior_states);
        rest.events.splice(0..0, prior_events);
        Ok(rest)
    }

    fn atom_count(&self) -> usize {
        self.states[0].clusters.last().map(|c| c.atoms.end).unwrap_or(0)
    }
}

/// Time until the gap between adjacent clusters closes, or `None` if it never does.
fn collision_delay<T: Scalar>(
    dynamics: Dynamics,
    tau: T,
    left: (&Cluster<T>, T),
    right: (&Cluster<T>, T),
    now: T,
    tol: &Tolerances<T>,
) -> Result<Option<T>> {
    let (l, fl) = left;
    let (r, fr) = right;
    let g0 = r.position - l.position;
    if g0 <= T::zero() {
        return Ok(Some(T::zero()));
    }
    let df = fr - fl;
    let dv = r.velocity - l.velocity;
    if dynamics == Dynamics::Drift {
        // gap closes linearly at rate df > 0
        return Ok((df > T::zero()).then(|| g0 / df));
    }
    let gap = |dt: T| {
        let (a, b, _) = motion(dynamics, tau, dt);
        g0 + dv * a + df * b
    };
    // the gap has a single maximum at dt* = tau ln(1 + dv/(tau df)) when dv > 0 and
    // decreases to -infinity afterwards, so the first root lies beyond dt*
    let mut lo = if dv > T::zero() { tau * (dv / (tau * df)).ln_1p() } else { T::zero() };
    let mut step = tau.max(g0 / (dv.abs() + df * tau + T::epsilon()));
    let mut hi = lo + step;
    let mut tries = 0;
    while gap(hi) > T::zero() {
        lo = hi;
        step = step + step;
        hi = lo + step;
        tries += 1;
        if tries > 2000 || !hi.is_finite() {
            return Err(Error::RootBracketFailure { t: to_f64(now) });
        }
    }
    loop {
        let mid = lo + (hi - lo) * lit(0.5);
        if mid <= lo || mid >= hi || hi - lo <= tol.root * (now + hi) {
            break;
        }
        if gap(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo + (hi - lo) * lit(0.5)))
}

fn run<T: Scalar>(
    dynamics: Dynamics,
    tau: T,
    total_mass: T,
    start: ClusterState<T>,
    t_end: T,
    tol: &Tolerances<T>,
    atoms: usize,
) -> Result<Trajectory<T>> {
    let mut traj = Trajectory { dynamics, tau, total_mass, t_end, states: vec![start], events: Vec::new() };
    loop {
        let state = traj.states.last().expect("at least one state").clone();
        let now = state.time;
        let n = state.clusters.len();
        if n < 2 {
            break;
        }
        let forces = traj.forces(&state);
        let mut delays = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            delays.push(collision_delay(
                dynamics,
                tau,
                (&state.clusters[j], forces[j]),
                (&state.clusters[j + 1], forces[j + 1]),
                now,
                tol,
            )?);
        }
        let Some(dt) = delays.iter().flatten().copied().reduce(T::min) else { break };
        let t_next = now + dt;
        if t_next > t_end {
            break;
        }
        let window = tol.event * (T::one() + t_next);
        let collide: Vec<bool> = delays.iter().map(|d| matches!(d, Some(d) if *d <= dt + window)).collect();

        let moved: Vec<Cluster<T>> = state
            .clusters
            .iter()
            .zip(&forces)
            .map(|(c, &f)| {
                let (position, velocity) = advance(dynamics, tau, c, f, dt);
                Cluster { position, velocity, ..c.clone() }
            })
            .collect();
        let mut clusters = Vec::with_capacity(n);
        let mut j = 0;
        while j < n {
            let mut k = j;
            while k < n - 1 && collide[k] {
                k += 1;
            }
            let group = &moved[j..=k];
            if group.len() == 1 {
                clusters.push(group[0].clone());
            } else {
                let mass: CompensatedSum<T> = group.iter().map(|c| c.mass).collect();
                let moment: CompensatedSum<T> = group.iter().map(|c| c.mass * c.position).collect();
                let momentum: CompensatedSum<T> = group.iter().map(|c| c.mass * c.velocity).collect();
                let merged = Cluster {
                    position: moment.value() / mass.value(),
                    mass: mass.value(),
                    velocity: momentum.value() / mass.value(),
                    atoms: group[0].atoms.start..group[group.len() - 1].atoms.end,
                };
                traj.events.push(CollisionEvent {
                    time: t_next,
                    position: merged.position,
                    merged: group.iter().map(|c| c.atoms.clone()).collect(),
                });
                clusters.push(merged);
            }
            j = k + 1;
        }
        if traj.events.len() > atoms.saturating_sub(1) {
            return Err(Error::EventHorizonExceeded { events: traj.events.len(), atoms });
        }
        log::debug!("t = {}: {} clusters remain", to_f64(t_next), clusters.len());
        traj.states.push(ClusterState { time: t_next, clusters });
    }
    Ok(traj)
}

fn initial_state<T: Scalar>(positions: &[T], masses: &[T], velocities: &[T]) -> ClusterState<T> {
    let clusters = (0..positions.len())
        .map(|i| Cluster { position: positions[i], mass: masses[i], velocity: velocities[i], atoms: i..i + 1 })
        .collect();
    ClusterState { time: T::zero(), clusters }
}

fn check_end<T: Scalar>(t_end: T) -> Result<()> {
    if t_end > T::zero() && t_end.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime { t: to_f64(t_end) })
    }
}

/// Sticky particles under damping and the attractive mean-field force, up to `t_end`.
pub fn simulate_ep<T: Scalar>(data: &InitialData<T>, t_end: T, tol: &Tolerances<T>) -> Result<Trajectory<T>> {
    check_end(t_end)?;
    // finite weights at t_end bound every step
    PotentialCoefficients::euler_poisson(data.tau(), t_end)?;
    if data.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let m = data.measure();
    let start = initial_state(m.positions(), m.masses(), data.velocities());
    run(Dynamics::EulerPoisson, data.tau(), m.total_mass(), start, t_end, tol, data.len())
}

/// Sticky particles moving with the drift velocity `-mhat`, up to `t_end`.
pub fn simulate_drift<T: Scalar>(
    measure: &AtomicMeasure<T>,
    t_end: T,
    tol: &Tolerances<T>,
) -> Result<Trajectory<T>> {
    check_end(t_end)?;
    if measure.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let velocities: Vec<T> = (0..measure.len()).map(|i| -measure.atom_mtilde(i)).collect();
    let start = initial_state(measure.positions(), measure.masses(), &velocities);
    run(Dynamics::Drift, T::zero(), measure.total_mass(), start, t_end, tol, measure.len())
}

/// Mass of the clusters strictly left of `x`.
pub fn oracle_cdf<T: Scalar>(state: &ClusterState<T>, x: T) -> T {
    state.clusters.iter().filter(|c| c.position < x).map(|c| c.mass).collect::<CompensatedSum<T>>().value()
}

/// Velocity of the cluster within `tol * (1 + |x|)` of `x`.
pub fn oracle_velocity<T: Scalar>(state: &ClusterState<T>, x: T, tol: T) -> Result<T> {
    state
        .clusters
        .iter()
        .filter(|c| (c.position - x).abs() <= tol * (T::one() + x.abs()))
        .min_by(|a, b| {
            (a.position - x).abs().partial_cmp(&(b.position - x).abs()).expect("finite positions")
        })
        .map(|c| c.velocity)
        .ok_or(Error::NoClusterAt { x: to_f64(x) })
}
