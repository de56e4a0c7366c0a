//! Entropy solutions of the damped Euler-Poisson system from the potential `F`.
//!
//! Every field at `(x, t)` is read off the minimizing prefix of `F(.; x, t)`:
//! the mass `m` is the prefix mass, the momentum `q` the prefix sum of the free
//! velocities, and a minimizing interval spanning several atoms is a
//! delta-shock whose velocity is `[q]/[m]`.

use std::ops::Range;

use crate::cluster::{cluster_index, Cluster};
use crate::error::{Error, Result};
use crate::measure::InitialData;
use crate::potentials::{minimize_with, prefix_potential, MinimizerResult, PotentialCoefficients};
use crate::scalar::{lit, to_f64, CompensatedSum, Scalar};
use crate::tolerance::Tolerances;

/// Which case of the velocity formula produced `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Vacuum where the speed is capped at `+U0`, decayed.
    VacuumRight,
    /// Vacuum where the speed is capped at `-U0`, decayed.
    VacuumLeft,
    /// Two or more atoms concentrated at the point.
    DeltaShock,
    /// A characteristic: a single uncollided atom or a vacuum point reached by one.
    Characteristic,
    /// Drift velocity off the support of the drift density.
    Offsupport,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::VacuumRight => "vacuum_right",
            Branch::VacuumLeft => "vacuum_left",
            Branch::DeltaShock => "delta_shock",
            Branch::Characteristic => "characteristic",
            Branch::Offsupport => "offsupport",
        }
    }
}

/// Solution fields at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionSample<T> {
    pub x: T,
    pub t: T,
    pub m: T,
    pub q: T,
    pub u: T,
    pub energy: T,
    pub branch: Branch,
}

/// `nu`, `theta`, `omega` and `h` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryFields<T> {
    pub nu: T,
    pub theta: T,
    pub omega: T,
    pub h: T,
}

/// One sample of a forward generalized characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockSample<T> {
    pub t: T,
    pub x: T,
    pub u: T,
    /// Atoms concentrated at `(x, t)`; empty when the curve runs through vacuum.
    pub absorbed: Range<usize>,
}

/// Forward generalized characteristic sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockCurve<T> {
    pub start: (T, T),
    pub samples: Vec<ShockSample<T>>,
}

/// All clusters of the entropy solution at one time, found from the lower convex
/// hull of the points `(P_k, S_k)` where `T_k = S_k - x P_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    time: T,
    clusters: Vec<Cluster<T>>,
}

impl<T: Scalar> Snapshot<T> {
    pub fn time(&self) -> T {
        self.time
    }

    pub fn clusters(&self) -> &[Cluster<T>] {
        &self.clusters
    }

    /// The cluster containing atom `i`.
    pub fn cluster_of_atom(&self, i: usize) -> &Cluster<T> {
        let j = cluster_index(&self.clusters, i).expect("clusters partition the atoms");
        &self.clusters[j]
    }

    /// Mass of the clusters strictly left of `x`.
    pub fn cdf_left(&self, x: T) -> T {
        self.clusters.iter().filter(|c| c.position < x).map(|c| c.mass).collect::<CompensatedSum<T>>().value()
    }
}

/// Formula-layer evaluator for one set of initial data.
#[derive(Debug, Clone)]
pub struct EntropySolution<T> {
    data: InitialData<T>,
    tol: Tolerances<T>,
}

impl<T: Scalar> EntropySolution<T> {
    pub fn new(data: InitialData<T>) -> Self {
        Self::with_tolerances(data, Tolerances::default())
    }

    pub fn with_tolerances(data: InitialData<T>, tol: Tolerances<T>) -> Self {
        Self { data, tol }
    }

    pub fn data(&self) -> &InitialData<T> {
        &self.data
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.tol
    }

    /// Euler-Poisson time weights at `t > 0`.
    pub fn weights(&self, t: T) -> Result<PotentialCoefficients<T>> {
        PotentialCoefficients::euler_poisson(self.data.tau(), t)
    }

    pub fn minimize_with(&self, w: &PotentialCoefficients<T>, x: T) -> Result<MinimizerResult<T>> {
        minimize_with(&self.data, w, x, self.tol.tie)
    }

    pub fn minimize(&self, x: T, t: T) -> Result<MinimizerResult<T>> {
        self.minimize_with(&self.weights(t)?, x)
    }

    /// `sum_{i<k} w_i v_i` with `v_i` the free velocity of atom `i`.
    fn prefix_flux(&self, w: &PotentialCoefficients<T>, k: usize) -> T {
        w.decay * self.data.prefix_momentum(k) - w.velocity_weight * self.data.measure().prefix_force(k)
    }

    /// Free velocity of atom `i`.
    fn free_velocity(&self, w: &PotentialCoefficients<T>, i: usize) -> T {
        w.free_velocity(self.data.velocities()[i], self.data.measure().atom_mtilde(i))
    }

    /// Free position of atom `i`.
    fn free_position(&self, w: &PotentialCoefficients<T>, i: usize) -> T {
        let m = self.data.measure();
        w.free_position(m.positions()[i], self.data.velocities()[i], m.atom_mtilde(i))
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.data.is_empty() {
            Err(Error::EmptyMeasure)
        } else {
            Ok(())
        }
    }

    fn check_time(t: T) -> Result<()> {
        if t >= T::zero() && t.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositiveTime { t: to_f64(t) })
        }
    }

    /// Velocity and branch given the minimizer at `(x, t)`.
    fn velocity_from(&self, w: &PotentialCoefficients<T>, x: T, r: &MinimizerResult<T>) -> (T, Branch) {
        let m = self.data.measure();
        let (a, b) = (r.k_min, r.k_max);
        if b > a {
            let u = (self.prefix_flux(w, b) - self.prefix_flux(w, a)) / (m.prefix_mass(b) - m.prefix_mass(a));
            let branch = if b - a >= 2 { Branch::DeltaShock } else { Branch::Characteristic };
            return (u, branch);
        }
        // Vacuum. The force seen at x is m(x) - M/2 on either side of y_star.
        let half = m.total_mass() * lit(0.5);
        let mt_side = m.prefix_mass(a) - half;
        let iy = a.max(1) - 1;
        let y = r.y_star;
        let u0y = self.data.velocities()[iy];
        let cap = self.data.max_speed();
        let c_mid = w.connecting_speed(y, m.atom_mtilde(iy), x);
        let c_up = w.connecting_speed(y, m.prefix_mass(iy + 1) - half, x);
        let c_down = w.connecting_speed(y, m.prefix_mass(iy) - half, x);
        if c_mid > u0y && c_up > cap {
            (cap * w.decay - mt_side * w.velocity_weight, Branch::VacuumRight)
        } else if c_mid < u0y && c_down < -cap {
            (-cap * w.decay - mt_side * w.velocity_weight, Branch::VacuumLeft)
        } else {
            let c = w.connecting_speed(y, mt_side, x);
            (c * w.decay - mt_side * w.velocity_weight, Branch::Characteristic)
        }
    }

    /// Initial data read as a solution at `t = 0`.
    fn initial_sample(&self, x: T) -> SolutionSample<T> {
        let d = &self.data;
        let m = d.measure();
        let k = m.count_below(x);
        let at_atom = k < d.len() && m.positions()[k] == x;
        let (u, branch) = if at_atom {
            (d.velocities()[k], Branch::Characteristic)
        } else if k > 0 {
            (d.max_speed(), Branch::VacuumRight)
        } else {
            (-d.max_speed(), Branch::VacuumLeft)
        };
        SolutionSample {
            x,
            t: T::zero(),
            m: m.prefix_mass(k),
            q: d.prefix_momentum(k),
            u,
            energy: d.prefix_energy(k),
            branch,
        }
    }

    /// All fields at `(x, t)` for arbitrary time weights.
    pub fn sample_with(&self, w: &PotentialCoefficients<T>, x: T) -> Result<SolutionSample<T>> {
        let r = self.minimize_with(w, x)?;
        let snap = self.snapshot_with(w)?;
        Ok(self.sample_from(w, x, &r, &snap))
    }

    fn sample_from(
        &self,
        w: &PotentialCoefficients<T>,
        x: T,
        r: &MinimizerResult<T>,
        snap: &Snapshot<T>,
    ) -> SolutionSample<T> {
        let (u, branch) = self.velocity_from(w, x, r);
        SolutionSample {
            x,
            t: w.time,
            m: self.data.measure().prefix_mass(r.k_min),
            q: self.prefix_flux(w, r.k_min),
            u,
            energy: self.energy_from(w, r.k_min, snap),
            branch,
        }
    }

    /// `sum_{i<k} w_i v_i u(x(eta_i, t), t)`.
    fn energy_from(&self, w: &PotentialCoefficients<T>, k: usize, snap: &Snapshot<T>) -> T {
        let masses = self.data.measure().masses();
        (0..k)
            .map(|i| masses[i] * self.free_velocity(w, i) * snap.cluster_of_atom(i).velocity)
            .collect::<CompensatedSum<T>>()
            .value()
    }

    /// All fields at `(x, t)`; `t = 0` returns the initial data.
    pub fn eval(&self, x: T, t: T) -> Result<SolutionSample<T>> {
        self.check_nonempty()?;
        Self::check_time(t)?;
        if t == T::zero() {
            return Ok(self.initial_sample(x));
        }
        self.sample_with(&self.weights(t)?, x)
    }

    /// Fields on a grid of points at one time, sharing the cluster snapshot.
    pub fn eval_grid(&self, xs: &[T], t: T) -> Result<Vec<SolutionSample<T>>> {
        self.check_nonempty()?;
        Self::check_time(t)?;
        if t == T::zero() {
            return Ok(xs.iter().map(|&x| self.initial_sample(x)).collect());
        }
        let w = self.weights(t)?;
        let snap = self.snapshot_with(&w)?;
        xs.iter()
            .map(|&x| {
                let r = self.minimize_with(&w, x)?;
                Ok(self.sample_from(&w, x, &r, &snap))
            })
            .collect()
    }

    /// Mass strictly left of `x`.
    pub fn eval_m(&self, x: T, t: T) -> Result<T> {
        self.check_nonempty()?;
        Self::check_time(t)?;
        if t == T::zero() {
            return Ok(self.data.measure().cdf_left(x));
        }
        Ok(self.data.measure().prefix_mass(self.minimize(x, t)?.k_min))
    }

    /// Momentum strictly left of `x`.
    pub fn eval_q(&self, x: T, t: T) -> Result<T> {
        self.check_nonempty()?;
        Self::check_time(t)?;
        if t == T::zero() {
            return Ok(self.initial_sample(x).q);
        }
        let w = self.weights(t)?;
        Ok(self.prefix_flux(&w, self.minimize_with(&w, x)?.k_min))
    }

    /// Velocity and the branch that produced it.
    pub fn eval_u(&self, x: T, t: T) -> Result<(T, Branch)> {
        self.check_nonempty()?;
        Self::check_time(t)?;
        if t == T::zero() {
            let s = self.initial_sample(x);
            return Ok((s.u, s.branch));
        }
        let w = self.weights(t)?;
        let r = self.minimize_with(&w, x)?;
        Ok(self.velocity_from(&w, x, &r))
    }

    /// Energy strictly left of `x`.
    pub fn eval_energy(&self, x: T, t: T) -> Result<T> {
        Ok(self.eval(x, t)?.energy)
    }

    /// `nu`, `theta`, `omega`, `h` at `(x, t)`.
    pub fn eval_nu_theta_omega(&self, x: T, t: T) -> Result<AuxiliaryFields<T>> {
        self.check_nonempty()?;
        self.auxiliary_with(&self.weights(t)?, x)
    }

    pub fn auxiliary_with(&self, w: &PotentialCoefficients<T>, x: T) -> Result<AuxiliaryFields<T>> {
        let r = self.minimize_with(w, x)?;
        let snap = self.snapshot_with(w)?;
        let d = &self.data;
        let masses = d.measure().masses();
        let tau = d.tau();
        let mut theta = CompensatedSum::new();
        let mut omega = CompensatedSum::new();
        let mut h = CompensatedSum::new();
        for i in 0..r.k_min {
            let c = snap.cluster_of_atom(i);
            let gap = c.position - x;
            theta.add(masses[i] * self.free_velocity(w, i) * gap);
            omega.add(masses[i] * (d.velocities()[i] + tau * d.measure().atom_mtilde(i)) * gap);
            h.add(masses[i] * c.velocity);
        }
        Ok(AuxiliaryFields {
            nu: r.nu,
            theta: theta.value(),
            omega: -w.decay / tau * omega.value(),
            h: h.value(),
        })
    }

    /// Clusters at time `t > 0`.
    pub fn snapshot(&self, t: T) -> Result<Snapshot<T>> {
        self.snapshot_with(&self.weights(t)?)
    }

    pub fn snapshot_with(&self, w: &PotentialCoefficients<T>) -> Result<Snapshot<T>> {
        self.check_nonempty()?;
        let d = &self.data;
        let m = d.measure();
        let n = d.len();
        let s = |k: usize| prefix_potential(m, |j| d.prefix_momentum(j), w, T::zero(), k);
        // lower hull of (P_k, S_k); nearly collinear vertices are dropped so that
        // ties resolve to the largest minimizing prefix, as in the minimizer
        let mut hull: Vec<usize> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            while hull.len() >= 2 {
                let (h1, h2) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let slope = (s(k) - s(h1)) / (m.prefix_mass(k) - m.prefix_mass(h1));
                let base = s(h1) - slope * m.prefix_mass(h1);
                let above = s(h2) - (s(h1) + slope * (m.prefix_mass(h2) - m.prefix_mass(h1)));
                if above >= -self.tol.tie * (T::one() + base.abs()) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(k);
        }
        let masses = m.masses();
        let clusters = hull
            .windows(2)
            .map(|e| {
                let atoms = e[0]..e[1];
                let mass: CompensatedSum<T> = atoms.clone().map(|i| masses[i]).collect();
                let moment: CompensatedSum<T> =
                    atoms.clone().map(|i| masses[i] * self.free_position(w, i)).collect();
                let momentum: CompensatedSum<T> =
                    atoms.clone().map(|i| masses[i] * self.free_velocity(w, i)).collect();
                Cluster {
                    position: moment.value() / mass.value(),
                    mass: mass.value(),
                    velocity: momentum.value() / mass.value(),
                    atoms,
                }
            })
            .collect();
        Ok(Snapshot { time: w.time, clusters })
    }

    /// Mass-weighted mean of the free positions of `atoms`: the path of that group
    /// while it moves as one cluster.
    pub fn group_center(&self, w: &PotentialCoefficients<T>, atoms: Range<usize>) -> T {
        let masses = self.data.measure().masses();
        let mass: CompensatedSum<T> = atoms.clone().map(|j| masses[j]).collect();
        let moment: CompensatedSum<T> = atoms.map(|j| masses[j] * self.free_position(w, j)).collect();
        moment.value() / mass.value()
    }

    /// Smallest minimizing prefix at `x`.
    fn k_min_at(&self, w: &PotentialCoefficients<T>, x: T) -> Result<usize> {
        Ok(self.minimize_with(w, x)?.k_min)
    }

    /// Position at time `t` of the forward generalized characteristic from atom `i`.
    pub fn forward_position(&self, i: usize, t: T) -> Result<T> {
        self.check_nonempty()?;
        if i >= self.data.len() {
            return Err(Error::InvalidArgument(format!("atom index {i} out of range")));
        }
        self.forward_position_with(&self.weights(t)?, i)
    }

    /// Forward position under arbitrary time weights.
    pub fn forward_position_with(&self, w: &PotentialCoefficients<T>, i: usize) -> Result<T> {
        let d = &self.data;
        let m = d.measure();
        let fail = || Error::BisectionFailure { atom: i, t: to_f64(w.time) };
        let spread = d.max_speed() * w.velocity_weight - m.total_mass() * lit(0.5) * w.force_weight;
        let pos = m.positions();
        let mut lo = pos[0] - spread - T::one();
        let mut hi = pos[pos.len() - 1] + spread + T::one();
        // k_min(x) is nondecreasing; the path of atom i separates k_min <= i from k_min > i
        if self.k_min_at(w, lo)? > i || self.k_min_at(w, hi)? <= i {
            return Err(fail());
        }
        let width = self.tol.position * (T::one() + (hi - lo).abs());
        while hi - lo > width {
            let mid = lo + (hi - lo) * lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.k_min_at(w, mid)? > i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // polish: the atoms absorbed between lo and hi form the cluster through i
        let a = self.k_min_at(w, lo)?;
        let b = self.k_min_at(w, hi)?;
        if !(a..b).contains(&i) {
            return Err(fail());
        }
        Ok(self.group_center(w, a..b))
    }

    /// Forward positions of every atom at time `t`.
    pub fn forward_positions(&self, t: T) -> Result<Vec<T>> {
        let w = self.weights(t)?;
        (0..self.data.len()).map(|i| self.forward_position_with(&w, i)).collect()
    }

    /// Samples the forward generalized characteristic from `(x0, t0)` at `t0 + j dt`.
    pub fn trace_shock(&self, x0: T, t0: T, t_end: T, dt: T) -> Result<ShockCurve<T>> {
        self.check_nonempty()?;
        if !(t0 > T::zero()) {
            return Err(Error::NonPositiveTime { t: to_f64(t0) });
        }
        if !(t_end > t0) || !(dt > T::zero()) {
            return Err(Error::InvalidArgument("trace_shock needs t0 < t_end and dt > 0".into()));
        }
        let w0 = self.weights(t0)?;
        let r0 = self.minimize_with(&w0, x0)?;
        let (_, branch0) = self.velocity_from(&w0, x0, &r0);
        let m = self.data.measure();
        let half = m.total_mass() * lit(0.5);
        let mt_side = m.prefix_mass(r0.k_min) - half;
        let c_eff = match branch0 {
            Branch::VacuumRight => self.data.max_speed(),
            Branch::VacuumLeft => -self.data.max_speed(),
            _ => w0.connecting_speed(r0.y_star, mt_side, x0),
        };
        // atom being followed once the curve sits on a cluster
        let mut follow = (r0.k_max > r0.k_min).then_some(r0.k_min);
        let gap = r0.k_min;
        let n = self.data.len();

        let mut samples = Vec::new();
        let mut j = 0usize;
        loop {
            let mut t = t0 + dt * lit(j as f64);
            if t > t_end {
                let last_t = samples.last().map(|s: &ShockSample<T>| s.t).unwrap_or(t0);
                if t_end - last_t <= self.tol.position * (T::one() + t_end) {
                    break;
                }
                t = t_end;
            }
            let w = self.weights(t)?;
            let x = match follow {
                Some(i) => self.forward_position_with(&w, i)?,
                None => {
                    let free = x0
                        + c_eff * (w.velocity_weight - w0.velocity_weight)
                        + mt_side * (w.force_weight - w0.force_weight);
                    let left = if gap > 0 { self.forward_position_with(&w, gap - 1)? } else { T::neg_infinity() };
                    let right = if gap < n { self.forward_position_with(&w, gap)? } else { T::infinity() };
                    if free <= left {
                        follow = Some(gap - 1);
                        left
                    } else if free >= right {
                        follow = Some(gap);
                        right
                    } else {
                        free
                    }
                }
            };
            let r = self.minimize_with(&w, x)?;
            let (u, _) = self.velocity_from(&w, x, &r);
            samples.push(ShockSample { t, x, u, absorbed: r.k_min..r.k_max });
            if t >= t_end {
                break;
            }
            j += 1;
        }
        Ok(ShockCurve { start: (x0, t0), samples })
    }
}
