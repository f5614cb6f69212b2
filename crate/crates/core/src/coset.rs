//! Group actions on the three cosets, as matrices acting on homogeneous
//! columns:
//!
//! * space-time `(t, x, 1)` under the Galilei group, 5x5;
//! * the configuration coset `(x, theta, 1)` of the Heisenberg-Weyl group
//!   with rotations, 5x5;
//! * the phase-space coset `(p, x, theta, 1)`, 8x8.
//!
//! The quantum cosets are only given infinitesimally; their finite actions
//! are the matrix exponentials of the infinitesimal generators. Phases
//! `theta` are kept unwrapped.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, UnitQuaternion, Vector3, Vector4};
use rand::Rng;

use crate::algebra::ContractionParams;
use crate::csv::CsvTable;
use crate::error::validation;
use crate::exec::{self, Execution};
use crate::{Result, C64};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat5 = SMatrix<f64, 5, 5>;
pub type Mat8 = SMatrix<f64, 8, 8>;

/// Orthogonality and determinant tolerance for rotation blocks.
pub const ROTATION_TOL: f64 = 1e-9;

/// `(B, V, R, A)`: time translation, boost velocity, rotation, space
/// translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalileiElement {
    b: f64,
    v: Vec3,
    r: Mat3,
    a: Vec3,
}

impl GalileiElement {
    pub fn new(b: f64, v: Vec3, r: Mat3, a: Vec3) -> Result<Self> {
        let finite = b.is_finite()
            && v.iter().chain(r.iter()).chain(a.iter()).all(|x| x.is_finite());
        if !finite {
            return validation("Galilei element has non-finite parameters");
        }
        let orth = (r.transpose() * r - Mat3::identity()).amax();
        if orth > ROTATION_TOL {
            return validation(format!("rotation block is not orthogonal (|R^T R - 1| = {orth:e})"));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return validation(format!("rotation block has det {det}, expected +1"));
        }
        Ok(Self { b, v, r, a })
    }

    pub fn identity() -> Self {
        Self {
            b: 0.0,
            v: Vec3::zeros(),
            r: Mat3::identity(),
            a: Vec3::zeros(),
        }
    }

    pub fn time_translation(b: f64) -> Self {
        Self { b, ..Self::identity() }
    }

    pub fn boost(v: Vec3) -> Self {
        Self { v, ..Self::identity() }
    }

    pub fn translation(a: Vec3) -> Self {
        Self { a, ..Self::identity() }
    }

    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn v(&self) -> &Vec3 {
        &self.v
    }
    pub fn r(&self) -> &Mat3 {
        &self.r
    }
    pub fn a(&self) -> &Vec3 {
        &self.a
    }

    /// Parameters uniform in `[-range, range]`, rotation uniform on SO(3).
    pub fn random<R: Rng + ?Sized>(rng: &mut R, range: f64) -> Self {
        let mut u = || rng.random_range(-range..=range);
        let b = u();
        let v = Vec3::new(u(), u(), u());
        let a = Vec3::new(u(), u(), u());
        let q = loop {
            let c = Vector4::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = c.norm();
            if n > 1e-3 && n <= 1.0 {
                break UnitQuaternion::from_quaternion(nalgebra::Quaternion::from_vector(c));
            }
        };
        Self {
            b,
            v,
            r: *q.to_rotation_matrix().matrix(),
            a,
        }
    }

    /// The 5x5 matrix acting on `(t, x, 1)`.
    pub fn to_matrix(&self) -> Mat5 {
        let mut m = Mat5::zeros();
        m[(0, 0)] = 1.0;
        m[(0, 4)] = self.b;
        m.fixed_view_mut::<3, 1>(1, 0).copy_from(&self.v);
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(&self.r);
        m.fixed_view_mut::<3, 1>(1, 4).copy_from(&self.a);
        m[(4, 4)] = 1.0;
        m
    }

    /// Reads parameters back from a matrix of the Galilei block form.
    pub fn from_matrix(m: &Mat5) -> Result<Self> {
        let shape_ok = m[(0, 0)] == 1.0
            && m[(4, 4)] == 1.0
            && (1..4).all(|j| m[(0, j)] == 0.0)
            && (0..4).all(|j| m[(4, j)] == 0.0);
        if !shape_ok {
            return validation("matrix is not of Galilei block form");
        }
        Self::new(
            m[(0, 4)],
            m.fixed_view::<3, 1>(1, 0).into_owned(),
            m.fixed_view::<3, 3>(1, 1).into_owned(),
            m.fixed_view::<3, 1>(1, 4).into_owned(),
        )
    }

    pub fn inverse(&self) -> Self {
        let rt = self.r.transpose();
        Self {
            b: -self.b,
            v: -(rt * self.v),
            r: rt,
            a: -(rt * (self.a - self.v * self.b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTime {
    pub t: f64,
    pub x: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigPoint {
    pub x: Vec3,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub p: Vec3,
    pub x: Vec3,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CosetPoint {
    SpaceTime(SpaceTime),
    Config(ConfigPoint),
    Phase(PhasePoint),
}

impl CosetPoint {
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            CosetPoint::SpaceTime(s) => vec![s.t, s.x[0], s.x[1], s.x[2]],
            CosetPoint::Config(c) => vec![c.x[0], c.x[1], c.x[2], c.theta],
            CosetPoint::Phase(p) => vec![p.p[0], p.p[1], p.p[2], p.x[0], p.x[1], p.x[2], p.theta],
        }
    }

    pub fn column_names(&self) -> &'static [&'static str] {
        match self {
            CosetPoint::SpaceTime(_) => &["t", "x1", "x2", "x3"],
            CosetPoint::Config(_) => &["x1", "x2", "x3", "theta"],
            CosetPoint::Phase(_) => &["p1", "p2", "p3", "x1", "x2", "x3", "theta"],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coordinates().iter().all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeTangent {
    pub dt: f64,
    pub dx: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigTangent {
    pub dx: Vec3,
    pub dtheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTangent {
    pub dp: Vec3,
    pub dx: Vec3,
    pub dtheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tangent {
    SpaceTime(SpaceTimeTangent),
    Config(ConfigTangent),
    Phase(PhaseTangent),
}

/// Infinitesimal parameters. Space-time uses `(b, v, omega, a)`; the
/// quantum cosets use `(omega, p_bar, x_bar, theta_bar)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfinitesimalElement {
    pub b: f64,
    pub v: Vec3,
    omega: Mat3,
    pub a: Vec3,
    pub p_bar: Vec3,
    pub x_bar: Vec3,
    pub theta_bar: f64,
}

impl Default for InfinitesimalElement {
    fn default() -> Self {
        Self {
            b: 0.0,
            v: Vec3::zeros(),
            omega: Mat3::zeros(),
            a: Vec3::zeros(),
            p_bar: Vec3::zeros(),
            x_bar: Vec3::zeros(),
            theta_bar: 0.0,
        }
    }
}

impl InfinitesimalElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Sets the rotation block; it must satisfy `omega + omega^T = 0` exactly.
    pub fn with_omega(mut self, omega: Mat3) -> Result<Self> {
        if omega + omega.transpose() != Mat3::zeros() {
            return validation("rotation generator omega must be antisymmetric");
        }
        self.omega = omega;
        Ok(self)
    }

    /// Rotation about axis `w` with rate `|w|`: `omega x = w cross x`.
    pub fn with_rotation(mut self, w: Vec3) -> Self {
        self.omega = w.cross_matrix();
        self
    }

    pub fn omega(&self) -> &Mat3 {
        &self.omega
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            b: self.b * s,
            v: self.v * s,
            omega: self.omega * s,
            a: self.a * s,
            p_bar: self.p_bar * s,
            x_bar: self.x_bar * s,
            theta_bar: self.theta_bar * s,
        }
    }
}

pub fn apply_galilei(g: &GalileiElement, pt: &SpaceTime) -> SpaceTime {
    let col = g.to_matrix() * SVector::<f64, 5>::new(pt.t, pt.x[0], pt.x[1], pt.x[2], 1.0);
    SpaceTime {
        t: col[0],
        x: Vec3::new(col[1], col[2], col[3]),
    }
}

/// Group product `g1 g2` (apply `g2` first).
pub fn compose(g1: &GalileiElement, g2: &GalileiElement) -> GalileiElement {
    GalileiElement {
        b: g1.b + g2.b,
        v: g1.v + g1.r * g2.v,
        r: g1.r * g2.r,
        a: g1.v * g2.b + g1.r * g2.a + g1.a,
    }
}

pub fn infinitesimal_spacetime(e: &InfinitesimalElement, pt: &SpaceTime) -> SpaceTimeTangent {
    SpaceTimeTangent {
        dt: e.b,
        dx: e.v * pt.t + e.omega * pt.x + e.a,
    }
}

pub fn infinitesimal_config(e: &InfinitesimalElement, pt: &ConfigPoint) -> ConfigTangent {
    ConfigTangent {
        dx: e.omega * pt.x + e.x_bar,
        dtheta: e.p_bar.dot(&pt.x) + e.theta_bar,
    }
}

pub fn infinitesimal_phase(e: &InfinitesimalElement, pt: &PhasePoint) -> PhaseTangent {
    PhaseTangent {
        dp: e.omega * pt.p + e.p_bar,
        dx: e.omega * pt.x + e.x_bar,
        dtheta: 0.5 * (e.p_bar.dot(&pt.x) - e.x_bar.dot(&pt.p)) + e.theta_bar,
    }
}

pub fn infinitesimal(e: &InfinitesimalElement, pt: &CosetPoint) -> Tangent {
    match pt {
        CosetPoint::SpaceTime(s) => Tangent::SpaceTime(infinitesimal_spacetime(e, s)),
        CosetPoint::Config(c) => Tangent::Config(infinitesimal_config(e, c)),
        CosetPoint::Phase(p) => Tangent::Phase(infinitesimal_phase(e, p)),
    }
}

/// Contraction level for [`contracted_action`].
#[derive(Debug, Clone, PartialEq)]
pub enum Scale {
    Finite(ContractionParams),
    Limit,
}

/// Action written in contracted coordinates `x_c = k x`, `p_c = k p` (with
/// `x_bar`, `p_bar` scaled alike), i.e. the group parameters conjugate to
/// `X/k` and `P/k`. Point and element are taken to be in those coordinates.
/// The phase cocycle picks up `1/k^2` and vanishes in the limit; rotations and
/// translations are untouched.
pub fn contracted_action(e: &InfinitesimalElement, pt: &CosetPoint, scale: &Scale) -> Tangent {
    let inv_k2 = match scale {
        Scale::Finite(p) => p.hbar(),
        Scale::Limit => 0.0,
    };
    match pt {
        CosetPoint::SpaceTime(s) => Tangent::SpaceTime(infinitesimal_spacetime(e, s)),
        CosetPoint::Config(c) => Tangent::Config(ConfigTangent {
            dx: e.omega * c.x + e.x_bar,
            dtheta: inv_k2 * e.p_bar.dot(&c.x) + e.theta_bar,
        }),
        CosetPoint::Phase(p) => Tangent::Phase(PhaseTangent {
            dp: e.omega * p.p + e.p_bar,
            dx: e.omega * p.x + e.x_bar,
            dtheta: inv_k2 * 0.5 * (e.p_bar.dot(&p.x) - e.x_bar.dot(&p.p)) + e.theta_bar,
        }),
    }
}

/// Infinitesimal matrix on `(t, x, 1)`.
pub fn spacetime_matrix(e: &InfinitesimalElement) -> Mat5 {
    let mut m = Mat5::zeros();
    m[(0, 4)] = e.b;
    m.fixed_view_mut::<3, 1>(1, 0).copy_from(&e.v);
    m.fixed_view_mut::<3, 3>(1, 1).copy_from(&e.omega);
    m.fixed_view_mut::<3, 1>(1, 4).copy_from(&e.a);
    m
}

/// Infinitesimal matrix on `(x, theta, 1)`.
pub fn config_matrix(e: &InfinitesimalElement) -> Mat5 {
    let mut m = Mat5::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&e.omega);
    m.fixed_view_mut::<3, 1>(0, 4).copy_from(&e.x_bar);
    m.fixed_view_mut::<1, 3>(3, 0).copy_from(&e.p_bar.transpose());
    m[(3, 4)] = e.theta_bar;
    m
}

/// Infinitesimal matrix on `(p, x, theta, 1)`.
pub fn phase_matrix(e: &InfinitesimalElement) -> Mat8 {
    let mut m = Mat8::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&e.omega);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&e.omega);
    m.fixed_view_mut::<3, 1>(0, 7).copy_from(&e.p_bar);
    m.fixed_view_mut::<3, 1>(3, 7).copy_from(&e.x_bar);
    m.fixed_view_mut::<1, 3>(6, 0).copy_from(&(-0.5 * e.x_bar).transpose());
    m.fixed_view_mut::<1, 3>(6, 3).copy_from(&(0.5 * e.p_bar).transpose());
    m[(6, 7)] = e.theta_bar;
    m
}

/// `exp(s M)` applied to the point: the integral curve of `e` at parameter
/// `s` starting from `pt`.
pub fn flow(e: &InfinitesimalElement, pt: &CosetPoint, s: f64) -> CosetPoint {
    match pt {
        CosetPoint::SpaceTime(st) => {
            let m = (spacetime_matrix(e) * s).exp();
            let c = m * SVector::<f64, 5>::new(st.t, st.x[0], st.x[1], st.x[2], 1.0);
            CosetPoint::SpaceTime(SpaceTime {
                t: c[0],
                x: Vec3::new(c[1], c[2], c[3]),
            })
        }
        CosetPoint::Config(cp) => {
            let m = (config_matrix(e) * s).exp();
            let c = m * SVector::<f64, 5>::new(cp.x[0], cp.x[1], cp.x[2], cp.theta, 1.0);
            CosetPoint::Config(ConfigPoint {
                x: Vec3::new(c[0], c[1], c[2]),
                theta: c[3],
            })
        }
        CosetPoint::Phase(pp) => {
            let m = (phase_matrix(e) * s).exp();
            let mut col = SVector::<f64, 8>::zeros();
            col.fixed_rows_mut::<3>(0).copy_from(&pp.p);
            col.fixed_rows_mut::<3>(3).copy_from(&pp.x);
            col[6] = pp.theta;
            col[7] = 1.0;
            let c = m * col;
            CosetPoint::Phase(PhasePoint {
                p: c.fixed_rows::<3>(0).into_owned(),
                x: c.fixed_rows::<3>(3).into_owned(),
                theta: c[6],
            })
        }
    }
}

/// The Galilei element `exp(M)` for a space-time generator.
pub fn exp_spacetime(e: &InfinitesimalElement) -> Result<GalileiElement> {
    GalileiElement::from_matrix(&spacetime_matrix(e).exp())
}

/// Points `exp(j step M) pt` for `j = 0..=n_steps`.
pub fn orbit(e: &InfinitesimalElement, pt: &CosetPoint, step: f64, n_steps: usize) -> Vec<CosetPoint> {
    (0..=n_steps).map(|j| flow(e, pt, j as f64 * step)).collect()
}

/// Points `g^j pt` for `j = 0..=n_steps`.
pub fn orbit_galilei(g: &GalileiElement, pt: &SpaceTime, n_steps: usize) -> Vec<CosetPoint> {
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut cur = *pt;
    out.push(CosetPoint::SpaceTime(cur));
    for _ in 0..n_steps {
        cur = apply_galilei(g, &cur);
        out.push(CosetPoint::SpaceTime(cur));
    }
    out
}

/// `step` column followed by the coordinates of each point.
pub fn orbit_table(points: &[CosetPoint]) -> CsvTable {
    let names = points
        .first()
        .map(|p| p.column_names())
        .unwrap_or(&["t", "x1", "x2", "x3"]);
    let mut header = vec!["step"];
    header.extend_from_slice(names);
    let mut t = CsvTable::new(&header);
    for (j, p) in points.iter().enumerate() {
        let mut row = vec![j as f64];
        row.extend(p.coordinates());
        t.push(row);
    }
    t
}

/// Max deviation of `apply(g1, apply(g2, pt))` from `apply(compose(g1, g2), pt)`
/// over `samples` seeded random triples with parameters in `[-range, range]`.
pub fn group_law_defect(samples: usize, range: f64, seed: u64, exec: Execution) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(GalileiElement, GalileiElement, SpaceTime)> = (0..samples)
        .map(|_| {
            let g1 = GalileiElement::random(&mut rng, range);
            let g2 = GalileiElement::random(&mut rng, range);
            let pt = SpaceTime {
                t: rng.random_range(-range..=range),
                x: Vec3::new(
                    rng.random_range(-range..=range),
                    rng.random_range(-range..=range),
                    rng.random_range(-range..=range),
                ),
            };
            (g1, g2, pt)
        })
        .collect();
    exec::map(exec, &cases, |(g1, g2, pt)| {
        let lhs = apply_galilei(g1, &apply_galilei(g2, pt));
        let rhs = apply_galilei(&compose(g1, g2), pt);
        (lhs.t - rhs.t).abs().max((lhs.x - rhs.x).amax())
    })
    .into_iter()
    .fold(0.0, f64::max)
}

fn unit(k: usize) -> Vec3 {
    let mut w = Vec3::zeros();
    w[k] = 1.0;
    w
}

fn parse_axis(name: &str, prefix: char) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    match rest {
        "1" => Some(0),
        "2" => Some(1),
        "3" => Some(2),
        _ => None,
    }
}

/// Matrix of a Galilei generator (`J_k`, `X_k` as boost, `P_k`, `T`) in the
/// space-time realization.
pub fn spacetime_generator(name: &str) -> Option<Mat5> {
    let mut e = InfinitesimalElement::zero();
    if let Some(k) = parse_axis(name, 'J') {
        e = e.with_rotation(unit(k));
    } else if let Some(k) = parse_axis(name, 'X') {
        e.v[k] = 1.0;
    } else if let Some(k) = parse_axis(name, 'P') {
        e.a[k] = 1.0;
    } else if name == "T" {
        e.b = 1.0;
    } else {
        return None;
    }
    Some(spacetime_matrix(&e))
}

/// Matrix of a generator of the Heisenberg-Weyl algebra with rotations in the
/// phase-space realization. `X_k` translates `p`, `P_k` translates `x`, and
/// `I` is `-i` times the `theta` translation so that `[X_i, P_j] = i delta_ij I`.
pub fn phase_generator(name: &str) -> Option<DMatrix<C64>> {
    let mut e = InfinitesimalElement::zero();
    let mut factor = C64::new(1.0, 0.0);
    if let Some(k) = parse_axis(name, 'J') {
        e = e.with_rotation(unit(k));
    } else if let Some(k) = parse_axis(name, 'X') {
        e.p_bar[k] = 1.0;
    } else if let Some(k) = parse_axis(name, 'P') {
        e.x_bar[k] = 1.0;
    } else if name == "I" {
        e.theta_bar = 1.0;
        factor = C64::new(0.0, -1.0);
    } else {
        return None;
    }
    let m = phase_matrix(&e);
    Some(DMatrix::from_fn(8, 8, |i, j| factor * m[(i, j)]))
}
