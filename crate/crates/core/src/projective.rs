//! Schrödinger dynamics as a classical Hamiltonian flow on real Fock-basis
//! coordinates.
//!
//! With `psi_n = (q_n + i p_n) / sqrt(2 hbar)` and `H = S + i A` (`S` real
//! symmetric, `A` real antisymmetric), the expectation value
//!
//! ```text
//! H(q, p) = <psi|H|psi> = (q.S q + p.S p - 2 q.A p) / (2 hbar)
//! ```
//!
//! generates `dq/dt = dH/dp`, `dp/dt = -dH/dq`, which is `i hbar dpsi/dt = H psi`
//! written in real and imaginary parts.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

use crate::csv::CsvTable;
use crate::error::validation;
use crate::fock::{build_xp, FockOperator, StateVector};
use crate::linalg::CVector;
use crate::{Result, C64, EXACT_TOL};

type RVector = DVector<f64>;
type RMatrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCoordinates {
    pub q: RVector,
    pub p: RVector,
    pub hbar: f64,
}

impl PhaseCoordinates {
    pub fn n_levels(&self) -> usize {
        self.q.len()
    }

    /// `sum (q^2 + p^2) / (2 hbar)`, the squared norm of the state.
    pub fn norm_sqr(&self) -> f64 {
        (self.q.norm_squared() + self.p.norm_squared()) / (2.0 * self.hbar)
    }

    /// Euclidean distance in the stacked `(q, p)` space.
    pub fn distance(&self, other: &PhaseCoordinates) -> f64 {
        ((&self.q - &other.q).norm_squared() + (&self.p - &other.p).norm_squared()).sqrt()
    }
}

pub fn to_coordinates(psi: &StateVector, hbar: f64) -> Result<PhaseCoordinates> {
    check_hbar(hbar)?;
    let s = (2.0 * hbar).sqrt();
    Ok(PhaseCoordinates {
        q: psi.amplitudes.map(|z| z.re * s),
        p: psi.amplitudes.map(|z| z.im * s),
        hbar,
    })
}

pub fn from_coordinates(c: &PhaseCoordinates) -> StateVector {
    let s = 1.0 / (2.0 * c.hbar).sqrt();
    StateVector::from_amplitudes(CVector::from_fn(c.n_levels(), |i, _| C64::new(c.q[i] * s, c.p[i] * s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rk4,
    /// Störmer-Verlet; needs a real symmetric Hamiltonian matrix.
    Leapfrog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSpec {
    pub hamiltonian: FockOperator,
    pub t_final: f64,
    pub dt: f64,
    pub method: Method,
    /// Record every `sample_every`-th step (the final time is always kept).
    pub sample_every: usize,
}

impl EvolutionSpec {
    pub fn new(hamiltonian: FockOperator, t_final: f64, dt: f64, method: Method) -> Result<Self> {
        let spec = Self {
            hamiltonian,
            t_final,
            dt,
            method,
            sample_every: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_sampling(mut self, every: usize) -> Result<Self> {
        if every == 0 {
            return validation("sampling stride must be at least 1");
        }
        self.sample_every = every;
        Ok(self)
    }

    pub fn hbar(&self) -> f64 {
        self.hamiltonian.hbar
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return validation(format!("time step must be positive, got {}", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return validation(format!("final time must be nonnegative, got {}", self.t_final));
        }
        if self.t_final > 0.0 && self.dt > self.t_final {
            return validation(format!("time step {} exceeds final time {}", self.dt, self.t_final));
        }
        let defect = self.hamiltonian.hermiticity_defect();
        if defect > EXACT_TOL {
            return validation(format!("Hamiltonian is not Hermitian (defect {defect:e})"));
        }
        if self.method == Method::Leapfrog {
            let a = self.hamiltonian.matrix.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if a > EXACT_TOL {
                return validation("leapfrog needs a real symmetric Hamiltonian matrix");
            }
        }
        Ok(())
    }

    /// Number of steps and the step actually used, which divides `t_final`
    /// exactly.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }

    fn split(&self) -> (RMatrix, RMatrix) {
        let m = &self.hamiltonian.matrix;
        (m.map(|z| z.re), m.map(|z| z.im))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub states: Vec<T>,
}

impl<T> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&T> {
        self.states.last()
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return validation(format!("hbar must be positive, got {hbar}"));
    }
    Ok(())
}

fn record<T: Clone>(
    spec: &EvolutionSpec,
    n: usize,
    h: f64,
    init: T,
    mut step: impl FnMut(&T, f64) -> T,
) -> Trajectory<T> {
    let mut times = vec![0.0];
    let mut states = vec![init.clone()];
    let mut cur = init;
    for j in 1..=n {
        cur = step(&cur, h);
        if j % spec.sample_every == 0 || j == n {
            times.push(if j == n { spec.t_final } else { j as f64 * h });
            states.push(cur.clone());
        }
    }
    Trajectory { times, states }
}

/// Integrates `i hbar dpsi/dt = H psi`.
pub fn schrodinger_evolve(psi0: &StateVector, spec: &EvolutionSpec) -> Result<Trajectory<StateVector>> {
    spec.validate()?;
    let n_levels = spec.hamiltonian.n_levels();
    if psi0.n_levels() != n_levels {
        return validation("initial state and Hamiltonian have different level counts");
    }
    let hbar = spec.hbar();
    let (n, h) = spec.steps();
    match spec.method {
        Method::Rk4 => {
            let gen = &spec.hamiltonian.matrix * C64::new(0.0, -1.0 / hbar);
            let f = |v: &CVector| &gen * v;
            Ok(record(spec, n, h, psi0.clone(), |s, h| {
                let y = &s.amplitudes;
                let k1 = f(y);
                let k2 = f(&(y + &k1 * C64::new(0.5 * h, 0.0)));
                let k3 = f(&(y + &k2 * C64::new(0.5 * h, 0.0)));
                let k4 = f(&(y + &k3 * C64::new(h, 0.0)));
                let inc = (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
                StateVector::from_amplitudes(y + inc)
            }))
        }
        Method::Leapfrog => {
            // real H: d(Re psi)/dt = H Im psi / hbar, d(Im psi)/dt = -H Re psi / hbar
            let (s, _) = spec.split();
            Ok(record(spec, n, h, psi0.clone(), |st, h| {
                let re = st.amplitudes.map(|z| z.re);
                let im = st.amplitudes.map(|z| z.im);
                let im_half = &im - &s * &re * (0.5 * h / hbar);
                let re_new = &re + &s * &im_half * (h / hbar);
                let im_new = &im_half - &s * &re_new * (0.5 * h / hbar);
                StateVector::from_amplitudes(CVector::from_fn(re.len(), |i, _| C64::new(re_new[i], im_new[i])))
            }))
        }
    }
}

/// `H(q, p)` for the operator's `hbar`.
pub fn hamiltonian_value(h: &FockOperator, c: &PhaseCoordinates) -> Result<f64> {
    check_dims(h, c)?;
    let (s, a) = (h.matrix.map(|z| z.re), h.matrix.map(|z| z.im));
    Ok(((c.q.dot(&(&s * &c.q))) + c.p.dot(&(&s * &c.p)) - 2.0 * c.q.dot(&(&a * &c.p))) / (2.0 * c.hbar))
}

/// `(dH/dq, dH/dp)` from the bilinear form.
pub fn gradient(h: &FockOperator, c: &PhaseCoordinates) -> Result<(RVector, RVector)> {
    check_dims(h, c)?;
    let (s, a) = (h.matrix.map(|z| z.re), h.matrix.map(|z| z.im));
    Ok((
        (&s * &c.q - &a * &c.p) / c.hbar,
        (&s * &c.p + &a * &c.q) / c.hbar,
    ))
}

/// Max relative deviation of [`gradient`] from central differences of
/// [`hamiltonian_value`] with the given step. Components are compared
/// relative to the largest gradient component.
pub fn gradient_check(h: &FockOperator, c: &PhaseCoordinates, step: f64) -> Result<f64> {
    let (gq, gp) = gradient(h, c)?;
    let scale = gq.amax().max(gp.amax()).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for which in 0..2 {
        for i in 0..c.n_levels() {
            let shifted = |d: f64| {
                let mut cc = c.clone();
                if which == 0 {
                    cc.q[i] += d;
                } else {
                    cc.p[i] += d;
                }
                hamiltonian_value(h, &cc)
            };
            let fd = (shifted(step)? - shifted(-step)?) / (2.0 * step);
            let an = if which == 0 { gq[i] } else { gp[i] };
            worst = worst.max((fd - an).abs() / scale);
        }
    }
    Ok(worst)
}

fn check_dims(h: &FockOperator, c: &PhaseCoordinates) -> Result<()> {
    if h.n_levels() != c.n_levels() {
        return validation("coordinates and Hamiltonian have different level counts");
    }
    if (h.hbar - c.hbar).abs() > EXACT_TOL * h.hbar.max(1.0) {
        return validation("coordinates and Hamiltonian use different hbar");
    }
    Ok(())
}

/// Integrates Hamilton's equations for `H(q, p)`.
pub fn hamilton_evolve(c0: &PhaseCoordinates, spec: &EvolutionSpec) -> Result<Trajectory<PhaseCoordinates>> {
    spec.validate()?;
    check_dims(&spec.hamiltonian, c0)?;
    let hbar = spec.hbar();
    let (s, a) = spec.split();
    let (n, h) = spec.steps();
    let field = |q: &RVector, p: &RVector| -> (RVector, RVector) {
        ((&s * p + &a * q) / hbar, -(&s * q - &a * p) / hbar)
    };
    match spec.method {
        Method::Rk4 => Ok(record(spec, n, h, c0.clone(), |c, h| {
            let (k1q, k1p) = field(&c.q, &c.p);
            let (k2q, k2p) = field(&(&c.q + &k1q * (0.5 * h)), &(&c.p + &k1p * (0.5 * h)));
            let (k3q, k3p) = field(&(&c.q + &k2q * (0.5 * h)), &(&c.p + &k2p * (0.5 * h)));
            let (k4q, k4p) = field(&(&c.q + &k3q * h), &(&c.p + &k3p * h));
            PhaseCoordinates {
                q: &c.q + (k1q + (k2q + k3q) * 2.0 + k4q) * (h / 6.0),
                p: &c.p + (k1p + (k2p + k3p) * 2.0 + k4p) * (h / 6.0),
                hbar,
            }
        })),
        Method::Leapfrog => Ok(record(spec, n, h, c0.clone(), |c, h| {
            let p_half = &c.p - &s * &c.q * (0.5 * h / hbar);
            let q_new = &c.q + &s * &p_half * (h / hbar);
            let p_new = &p_half - &s * &q_new * (0.5 * h / hbar);
            PhaseCoordinates { q: q_new, p: p_new, hbar }
        })),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// Max over sample times of the `(q, p)` distance between the two flows.
    pub max_deviation: f64,
    /// Max `|norm - 1|` along the Schrödinger run.
    pub norm_drift: f64,
    /// Max `|H(t) - H(0)|` along the Hamilton run.
    pub energy_drift: f64,
    pub schrodinger: Trajectory<StateVector>,
    pub hamilton: Trajectory<PhaseCoordinates>,
}

/// Runs both flows from the same initial data.
pub fn equivalence_report(psi0: &StateVector, spec: &EvolutionSpec) -> Result<EquivalenceReport> {
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > 1e-10 {
        return validation(format!("initial state must be normalized (norm {norm0})"));
    }
    let hbar = spec.hbar();
    let c0 = to_coordinates(psi0, hbar)?;
    let schrodinger = schrodinger_evolve(psi0, spec)?;
    let hamilton = hamilton_evolve(&c0, spec)?;
    let mut max_deviation = 0.0f64;
    let mut norm_drift = 0.0f64;
    for (s, c) in schrodinger.states.iter().zip(&hamilton.states) {
        max_deviation = max_deviation.max(to_coordinates(s, hbar)?.distance(c));
        norm_drift = norm_drift.max((s.norm() - 1.0).abs());
    }
    let e0 = hamiltonian_value(&spec.hamiltonian, &c0)?;
    let mut energy_drift = 0.0f64;
    for c in &hamilton.states {
        energy_drift = energy_drift.max((hamiltonian_value(&spec.hamiltonian, c)? - e0).abs());
    }
    Ok(EquivalenceReport {
        max_deviation,
        norm_drift,
        energy_drift,
        schrodinger,
        hamilton,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayInvariants {
    /// `<X>, <P>, <H>`.
    pub expectations: [f64; 3],
    /// Max change of the expectations over random global phases.
    pub phase_sensitivity: f64,
}

/// Number of random global phases tried by [`ray_invariants`].
pub const RAY_PHASES: usize = 16;

/// Expectations of `X`, `P` (built at the Hamiltonian's `hbar`) and `H`, and
/// their sensitivity to global phases drawn from a seeded generator.
pub fn ray_invariants(psi: &StateVector, hamiltonian: &FockOperator, seed: u64) -> Result<RayInvariants> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return validation(format!("state must be normalized (norm {norm})"));
    }
    let (x, p) = build_xp(hamiltonian.n_levels(), hamiltonian.hbar)?;
    let ops = [&x, &p, hamiltonian];
    let measure = |s: &StateVector| -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (o, op) in out.iter_mut().zip(ops) {
            *o = op.expectation(s)?.re;
        }
        Ok(out)
    };
    let base = measure(psi)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..RAY_PHASES {
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let e = measure(&psi.with_phase(phi))?;
        for (a, b) in e.iter().zip(&base) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(RayInvariants {
        expectations: base,
        phase_sensitivity: worst,
    })
}

/// `t, q_0..q_{N-1}, p_0..p_{N-1}`.
pub fn coordinates_table(traj: &Trajectory<PhaseCoordinates>) -> CsvTable {
    let n = traj.states.first().map_or(0, |c| c.n_levels());
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("q_{i}")));
    header.extend((0..n).map(|i| format!("p_{i}")));
    let mut t = CsvTable::new(&header);
    for (time, c) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![*time];
        row.extend(c.q.iter());
        row.extend(c.p.iter());
        t.push(row);
    }
    t
}

/// `t, <X>, <P>, <H>, norm`.
pub fn observables_table(traj: &Trajectory<StateVector>, hamiltonian: &FockOperator) -> Result<CsvTable> {
    let (x, p) = build_xp(hamiltonian.n_levels(), hamiltonian.hbar)?;
    let mut t = CsvTable::new(&["t", "<X>", "<P>", "<H>", "norm"]);
    for (time, s) in traj.times.iter().zip(&traj.states) {
        t.push(vec![
            *time,
            x.expectation(s)?.re,
            p.expectation(s)?.re,
            hamiltonian.expectation(s)?.re,
            s.norm(),
        ]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{coherent_state, CoherentLabel};
    use crate::fock::{build_hamiltonian, HamiltonianKind};
    use crate::linalg::{expi_hermitian, CMatrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn harmonic(n: usize, hbar: f64) -> FockOperator {
        build_hamiltonian(HamiltonianKind::Harmonic, n, hbar).unwrap()
    }

    #[test]
    fn vacuum_coordinates() {
        let c = to_coordinates(&StateVector::vacuum(4).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(c.q[0], 2f64.sqrt(), epsilon = 1e-15);
        assert!(c.q.iter().skip(1).chain(c.p.iter()).all(|&v| v == 0.0));
        let z = to_coordinates(&StateVector::from_vec(vec![C64::new(0.0, 0.0); 3]), 0.5).unwrap();
        assert_eq!(z.norm_sqr(), 0.0);
        assert!(to_coordinates(&StateVector::vacuum(4).unwrap(), 0.0).is_err());
    }

    #[test]
    fn coordinate_roundtrip_and_norm() {
        let psi = coherent_state(&CoherentLabel::new(0.4, -0.9).with_theta(1.0), 24).unwrap();
        for hbar in [1.0, 0.37, 1e-3] {
            let c = to_coordinates(&psi, hbar).unwrap();
            let back = from_coordinates(&c);
            let err = (&back.amplitudes - &psi.amplitudes).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err <= 1e-14);
            assert_abs_diff_eq!(c.norm_sqr(), psi.norm().powi(2), epsilon = 1e-14);
        }
    }

    #[test]
    fn spec_validation() {
        let h = harmonic(8, 1.0);
        assert!(EvolutionSpec::new(h.clone(), 1.0, 0.0, Method::Rk4).is_err());
        assert!(EvolutionSpec::new(h.clone(), 1.0, 2.0, Method::Rk4).is_err());
        assert!(EvolutionSpec::new(h.clone(), -1.0, 0.1, Method::Rk4).is_err());
        assert!(EvolutionSpec::new(h.clone(), 0.0, 0.1, Method::Rk4).is_ok());
        let mut bad = h.clone();
        bad.matrix[(0, 1)] += C64::new(0.5, 0.0);
        assert!(EvolutionSpec::new(bad, 1.0, 0.1, Method::Rk4).is_err());
        let mut complex = h;
        complex.matrix[(0, 1)] = C64::new(0.0, 0.5);
        complex.matrix[(1, 0)] = C64::new(0.0, -0.5);
        assert!(EvolutionSpec::new(complex.clone(), 1.0, 0.1, Method::Rk4).is_ok());
        assert!(EvolutionSpec::new(complex, 1.0, 0.1, Method::Leapfrog).is_err());
    }

    #[test]
    fn vacuum_is_stationary() {
        let h = harmonic(16, 1.0);
        let vac = StateVector::vacuum(16).unwrap();
        let spec = EvolutionSpec::new(h, 5.0, 1e-3, Method::Rk4).unwrap().with_sampling(100).unwrap();
        let traj = schrodinger_evolve(&vac, &spec).unwrap();
        for s in &traj.states {
            assert_abs_diff_eq!(vac.inner(s).unwrap().norm(), 1.0, epsilon = 1e-10);
        }
        // only the phase e^{-i t/2} evolves
        let last = traj.last().unwrap();
        let expected = C64::from_polar(1.0, -2.5);
        assert!((last.amplitudes[0] - expected).norm() < 1e-10);
    }

    #[test]
    fn ehrenfest_closed_forms() {
        // the free packet spreads through the Fock ladder, so it is only
        // checked where 128 levels hold it
        let (p0, x0) = (0.5, 1.0);
        let n = 128;
        let exact = |kind: HamiltonianKind, t: f64| match kind {
            HamiltonianKind::Free => x0 + p0 * t,
            _ => x0 * t.cos() + p0 * t.sin(),
        };
        let cases = [
            (HamiltonianKind::Harmonic, 1.0),
            (HamiltonianKind::Harmonic, 0.1),
            (HamiltonianKind::Free, 1.0),
        ];
        for (kind, hbar) in cases {
            let label = crate::coherent::fock_label(&CoherentLabel::new(p0, x0), hbar);
            let psi = coherent_state(&label, n).unwrap();
            let (xo, _) = build_xp(n, hbar).unwrap();
            let h = build_hamiltonian(kind, n, hbar).unwrap();
            let spec = EvolutionSpec::new(h, 3.0, 1e-3, Method::Rk4).unwrap().with_sampling(250).unwrap();
            let traj = schrodinger_evolve(&psi, &spec).unwrap();
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let ex = xo.expectation(s).unwrap().re;
                assert!((ex - exact(kind, *t)).abs() <= 1e-6, "{kind:?} hbar {hbar} t {t}: {ex}");
            }
        }
    }

    #[test]
    fn constant_hamiltonian_rotates_rigidly() {
        let e = 2.5;
        let hbar = 0.5;
        let h = FockOperator::new(CMatrix::identity(4, 4) * C64::new(e, 0.0), hbar, "H").unwrap();
        let c0 = PhaseCoordinates {
            q: RVector::from_vec(vec![1.0, 0.0, -0.5, 2.0]),
            p: RVector::from_vec(vec![0.0, 1.0, 0.3, 0.0]),
            hbar,
        };
        for method in [Method::Rk4, Method::Leapfrog] {
            let spec = EvolutionSpec::new(h.clone(), 1.0, 1e-3, method).unwrap();
            let end = hamilton_evolve(&c0, &spec).unwrap().last().unwrap().clone();
            let w = e / hbar;
            for i in 0..4 {
                // (q + i p) -> e^{-i w t}(q + i p)
                let z = C64::new(c0.q[i], c0.p[i]) * C64::from_polar(1.0, -w);
                let tol = if method == Method::Rk4 { 1e-10 } else { 1e-4 };
                assert!((end.q[i] - z.re).abs() < tol && (end.p[i] - z.im).abs() < tol, "{method:?}");
            }
        }
    }

    #[test]
    fn zero_hamiltonian_freezes() {
        let h = FockOperator::new(CMatrix::zeros(3, 3), 1.0, "H").unwrap();
        let c0 = PhaseCoordinates {
            q: RVector::from_vec(vec![1.0, 2.0, 3.0]),
            p: RVector::from_vec(vec![-1.0, 0.0, 0.5]),
            hbar: 1.0,
        };
        let spec = EvolutionSpec::new(h, 2.0, 0.1, Method::Rk4).unwrap();
        let traj = hamilton_evolve(&c0, &spec).unwrap();
        assert!(traj.states.iter().all(|c| *c == c0));
        assert_eq!(traj.len(), 21);
        assert_eq!(*traj.times.last().unwrap(), 2.0);
    }

    #[test]
    fn flows_agree_and_conserve() {
        let n = 32;
        let psi = coherent_state(&CoherentLabel::new(0.5, 1.0), n).unwrap();
        for kind in [HamiltonianKind::Harmonic, HamiltonianKind::Quartic(0.1)] {
            let h = build_hamiltonian(kind, n, 1.0).unwrap();
            let spec = EvolutionSpec::new(h, 10.0, 1e-3, Method::Rk4).unwrap().with_sampling(10).unwrap();
            let rep = equivalence_report(&psi, &spec).unwrap();
            assert!(rep.max_deviation <= 1e-6, "{kind:?}: {:e}", rep.max_deviation);
            assert!(rep.norm_drift <= 1e-8, "{kind:?}: {:e}", rep.norm_drift);
            assert!(rep.energy_drift <= 1e-8, "{kind:?}: {:e}", rep.energy_drift);
        }
    }

    #[test]
    fn zero_time_report() {
        let h = harmonic(8, 1.0);
        let spec = EvolutionSpec::new(h, 0.0, 1e-3, Method::Rk4).unwrap();
        let rep = equivalence_report(&StateVector::vacuum(8).unwrap(), &spec).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        assert_eq!(rep.schrodinger.len(), 1);
    }

    #[test]
    fn integrators_converge_to_exact_flow() {
        // oracle: exact propagator exp(-i t H / hbar) by eigendecomposition
        let n = 16;
        let hbar = 1.0;
        let h = build_hamiltonian(HamiltonianKind::Quartic(0.1), n, hbar).unwrap();
        let psi = coherent_state(&CoherentLabel::new(0.3, 0.6), n).unwrap();
        let t = 2.0;
        let exact = expi_hermitian(&h.matrix, -t / hbar) * &psi.amplitudes;
        let err = |dt: f64, method: Method| {
            let spec = EvolutionSpec::new(h.clone(), t, dt, method).unwrap();
            let s = schrodinger_evolve(&psi, &spec).unwrap();
            let c = hamilton_evolve(&to_coordinates(&psi, hbar).unwrap(), &spec).unwrap();
            let e1 = (&s.last().unwrap().amplitudes - &exact).norm();
            let e2 = (&from_coordinates(c.last().unwrap()).amplitudes - &exact).norm();
            (e1, e2)
        };
        let (a1, b1) = err(0.01, Method::Rk4);
        let (a2, b2) = err(0.005, Method::Rk4);
        for r in [a1 / a2, b1 / b2] {
            assert!((12.0..20.0).contains(&r), "rk4 ratio {r}");
        }
        let (a1, b1) = err(0.01, Method::Leapfrog);
        let (a2, b2) = err(0.005, Method::Leapfrog);
        for r in [a1 / a2, b1 / b2] {
            assert!((3.0..5.0).contains(&r), "leapfrog ratio {r}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let n = 12;
        let psi = coherent_state(&CoherentLabel::new(-0.7, 0.4), n).unwrap();
        let mut h = build_hamiltonian(HamiltonianKind::Quartic(0.1), n, 0.8).unwrap();
        // add an imaginary antisymmetric part to exercise A
        h.matrix[(1, 3)] += C64::new(0.0, 0.3);
        h.matrix[(3, 1)] += C64::new(0.0, -0.3);
        let c = to_coordinates(&psi, 0.8).unwrap();
        assert!(gradient_check(&h, &c, 1e-5).unwrap() <= 1e-6);
        // value agrees with the operator expectation
        let direct = h.expectation(&psi).unwrap().re;
        assert_abs_diff_eq!(hamiltonian_value(&h, &c).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn ray_phase_invariance() {
        let h = harmonic(32, 1.0);
        let psi = coherent_state(&CoherentLabel::new(0.5, -1.0).with_theta(2.2), 32).unwrap();
        let r = ray_invariants(&psi, &h, 9).unwrap();
        assert!(r.phase_sensitivity <= 1e-12);
        assert_abs_diff_eq!(r.expectations[0], -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.expectations[1], 0.5, epsilon = 1e-10);
        let vac = ray_invariants(&StateVector::vacuum(32).unwrap(), &h, 9).unwrap();
        assert_eq!(&vac.expectations[..2], &[0.0, 0.0]);
        let fixed = ray_invariants(&psi.with_phase(std::f64::consts::FRAC_PI_3), &h, 9).unwrap();
        for (a, b) in fixed.expectations.iter().zip(&r.expectations) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn tables() {
        let h = harmonic(4, 1.0);
        let spec = EvolutionSpec::new(h.clone(), 0.2, 0.1, Method::Rk4).unwrap();
        let psi = StateVector::vacuum(4).unwrap();
        let traj = schrodinger_evolve(&psi, &spec).unwrap();
        let t = observables_table(&traj, &h).unwrap();
        assert_eq!(t.header, ["t", "<X>", "<P>", "<H>", "norm"]);
        assert_eq!(t.rows.len(), 3);
        let c = hamilton_evolve(&to_coordinates(&psi, 1.0).unwrap(), &spec).unwrap();
        let ct = coordinates_table(&c);
        assert_eq!(ct.header.len(), 9);
        assert_eq!(ct.header[8], "p_3");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn roundtrip_any_state(re in proptest::collection::vec(-2.0f64..2.0, 6), im in proptest::collection::vec(-2.0f64..2.0, 6), hbar in 1e-3f64..4.0) {
            let psi = StateVector::from_vec(re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect());
            let c = to_coordinates(&psi, hbar).unwrap();
            let back = from_coordinates(&c);
            for (a, b) in back.amplitudes.iter().zip(psi.amplitudes.iter()) {
                prop_assert!((a - b).norm() <= 1e-14 * (1.0 + b.norm()));
            }
            prop_assert!((c.norm_sqr() - psi.norm().powi(2)).abs() <= 1e-12);
        }
    }
}
