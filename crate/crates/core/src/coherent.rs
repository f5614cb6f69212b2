//! Canonical coherent states `|p, x; theta> = U(p, x, theta)|0>` with
//! `U = exp(i(p X - x P + theta I))` in units `hbar = 1`, so that the
//! amplitude parameter is `alpha = (x + i p)/sqrt(2)`.
//!
//! The exponent `p X - x P` is a rotated copy of `X`:
//! `p X - x P = r Phi X Phi^dag` with `r = |(p, x)|`, `Phi = diag(e^{i n phi})`
//! and `phi = atan2(-x, p)`. One real symmetric eigendecomposition of the
//! tridiagonal `X` therefore serves every label at a given truncation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::validation;
use crate::exec::{self, Execution};
use crate::fock::{build_xp, FockOperator, StateVector};
use crate::grid::Grid;
use crate::linalg::{CMatrix, CVector};
use crate::{Error, Result, C64};

pub use crate::grid::GridWavefunction;

/// Largest Poisson tail mass a truncated coherent state may drop.
pub const TAIL_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CoherentLabel {
    pub p: Vec<f64>,
    pub x: Vec<f64>,
    pub theta: f64,
}

impl CoherentLabel {
    /// Single-axis label with `theta = 0`.
    pub fn new(p: f64, x: f64) -> Self {
        Self {
            p: vec![p],
            x: vec![x],
            theta: 0.0,
        }
    }

    pub fn multi(p: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if p.len() != x.len() || p.is_empty() {
            return validation("label needs matching nonempty p and x vectors");
        }
        let l = Self { p, x, theta: 0.0 };
        l.check()?;
        Ok(l)
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    fn check(&self) -> Result<()> {
        if self.p.len() != self.x.len() || self.p.is_empty() {
            return validation("label needs matching nonempty p and x vectors");
        }
        if !self.p.iter().chain(&self.x).chain([&self.theta]).all(|v| v.is_finite()) {
            return validation("label has non-finite entries");
        }
        Ok(())
    }

    /// `(p, x)` of a single-axis label.
    pub fn axis(&self) -> Result<(f64, f64)> {
        self.check()?;
        if self.dim() != 1 {
            return validation(format!(
                "Fock numerics are per axis; got a {}-axis label",
                self.dim()
            ));
        }
        Ok((self.p[0], self.x[0]))
    }

    /// `alpha = (x + i p)/sqrt(2)` of a single-axis label.
    pub fn alpha(&self) -> Result<C64> {
        let (p, x) = self.axis()?;
        Ok(C64::new(x, p) / 2f64.sqrt())
    }
}

/// Displacement operators at a fixed truncation, sharing one
/// eigendecomposition of `X`.
#[derive(Debug, Clone)]
pub struct Displacer {
    n: usize,
    vecs: DMatrix<f64>,
    vals: DVector<f64>,
}

impl Displacer {
    pub fn new(n_levels: usize) -> Result<Self> {
        let (x, _) = build_xp(n_levels, 1.0)?;
        let real = x.matrix.map(|z| z.re);
        let eig = SymmetricEigen::new(real);
        Ok(Self {
            n: n_levels,
            vecs: eig.eigenvectors,
            vals: eig.eigenvalues,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.n
    }

    fn polar(p: f64, x: f64) -> (f64, f64) {
        ((p * p + x * x).sqrt(), (-x).atan2(p))
    }

    /// The full unitary matrix `U(label)`.
    pub fn operator(&self, label: &CoherentLabel) -> Result<FockOperator> {
        let (p, x) = label.axis()?;
        let (r, phi) = Self::polar(p, x);
        let n = self.n;
        let (c, s): (Vec<f64>, Vec<f64>) = self.vals.iter().map(|&l| ((r * l).cos(), (r * l).sin())).unzip();
        let mut vc = self.vecs.clone();
        let mut vs = self.vecs.clone();
        for k in 0..n {
            vc.column_mut(k).scale_mut(c[k]);
            vs.column_mut(k).scale_mut(s[k]);
        }
        let vt = self.vecs.transpose();
        let wr = vc * &vt;
        let wi = vs * &vt;
        let u = CMatrix::from_fn(n, n, |i, j| {
            C64::new(wr[(i, j)], wi[(i, j)]) * C64::from_polar(1.0, label.theta + (i as f64 - j as f64) * phi)
        });
        FockOperator::new(u, 1.0, "U")
    }

    /// `U(label) psi` in `O(N^2)`.
    pub fn apply(&self, label: &CoherentLabel, psi: &StateVector) -> Result<StateVector> {
        let (p, x) = label.axis()?;
        if psi.n_levels() != self.n {
            return validation("state and displacer have different level counts");
        }
        let (r, phi) = Self::polar(p, x);
        let rot = |sign: f64| -> Vec<C64> { (0..self.n).map(|k| C64::from_polar(1.0, sign * k as f64 * phi)).collect() };
        let fwd = rot(1.0);
        let back = rot(-1.0);
        let a: Vec<C64> = psi.amplitudes.iter().zip(&back).map(|(z, b)| z * b).collect();
        let mut coeffs = vec![C64::new(0.0, 0.0); self.n];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, aj) in a.iter().enumerate() {
                acc += aj * self.vecs[(j, k)];
            }
            *ck = acc * C64::from_polar(1.0, r * self.vals[k]);
        }
        let global = C64::from_polar(1.0, label.theta);
        let out = CVector::from_fn(self.n, |i, _| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, ck) in coeffs.iter().enumerate() {
                acc += ck * self.vecs[(i, k)];
            }
            acc * fwd[i] * global
        });
        Ok(StateVector::from_amplitudes(out))
    }

    /// `U(label)|0>`, refusing labels whose Poisson tail beyond `N` exceeds
    /// [`TAIL_LIMIT`].
    pub fn coherent_state(&self, label: &CoherentLabel) -> Result<StateVector> {
        let alpha = label.alpha()?;
        let tail = poisson_tail(alpha.norm_sqr(), self.n);
        if tail > TAIL_LIMIT {
            return Err(Error::Precision {
                tail,
                limit: TAIL_LIMIT,
            });
        }
        self.apply(label, &StateVector::vacuum(self.n)?)
    }
}

pub fn displacement(label: &CoherentLabel, n_levels: usize) -> Result<FockOperator> {
    Displacer::new(n_levels)?.operator(label)
}

pub fn coherent_state(label: &CoherentLabel, n_levels: usize) -> Result<StateVector> {
    Displacer::new(n_levels)?.coherent_state(label)
}

/// `P(n >= cutoff)` for `n ~ Poisson(mean)`.
pub fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean <= 0.0 {
        return if cutoff == 0 { 1.0 } else { 0.0 };
    }
    // ln of the pmf at `cutoff`, then sum the decaying tail by ratios
    let ln_fact: f64 = (1..=cutoff).map(|k| (k as f64).ln()).sum();
    let term = (-mean + cutoff as f64 * mean.ln() - ln_fact).exp();
    if cutoff as f64 <= mean {
        // bulk of the distribution lies beyond the cutoff
        let head: f64 = {
            let mut t = (-mean).exp();
            let mut s = 0.0;
            for k in 0..cutoff {
                s += t;
                t *= mean / (k + 1) as f64;
            }
            s
        };
        return (1.0 - head).max(0.0);
    }
    let mut term = term;
    let mut sum = 0.0;
    let mut k = cutoff;
    while term > 0.0 && term > sum * 1e-18 {
        sum += term;
        k += 1;
        term *= mean / k as f64;
    }
    sum
}

/// Closed-form Fock amplitudes `e^{-|alpha|^2/2} alpha^n / sqrt(n!)` for
/// `n < n_levels`.
pub fn coherent_amplitudes(alpha: C64, n_levels: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_levels);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..n_levels {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return validation(format!("hbar must be positive, got {hbar}"));
    }
    Ok(())
}

fn check_pair(l1: &CoherentLabel, l2: &CoherentLabel) -> Result<()> {
    l1.check()?;
    l2.check()?;
    if l1.dim() != l2.dim() {
        return validation("labels have different axis counts");
    }
    Ok(())
}

/// `<l1|l2>` for labels in the relabeled convention at `hbar`, including the
/// `theta` phases; factorizes over axes.
pub fn overlap_analytic(l1: &CoherentLabel, l2: &CoherentLabel, hbar: f64) -> Result<C64> {
    check_hbar(hbar)?;
    check_pair(l1, l2)?;
    let mut phase = l2.theta - l1.theta;
    let mut gauss = 0.0;
    for i in 0..l1.dim() {
        let (p1, x1, p2, x2) = (l1.p[i], l1.x[i], l2.p[i], l2.x[i]);
        phase += (x1 * p2 - p1 * x2) / (2.0 * hbar);
        gauss += ((x1 - x2).powi(2) + (p1 - p2).powi(2)) / (4.0 * hbar);
    }
    Ok(C64::from_polar((-gauss).exp(), phase))
}

/// `(<l1|X^c|l2>, <l1|P^c|l2>)` for single-axis labels in the relabeled
/// convention, `X^c = sqrt(hbar) X`.
pub fn matrix_element_xp(l1: &CoherentLabel, l2: &CoherentLabel, hbar: f64) -> Result<(C64, C64)> {
    let ov = overlap_analytic(l1, l2, hbar)?;
    let (p1, x1) = l1.axis()?;
    let (p2, x2) = l2.axis()?;
    let mx = C64::new(x1 + x2, -(p1 - p2)) * 0.5 * ov;
    let mp = C64::new(p1 + p2, x1 - x2) * 0.5 * ov;
    Ok((mx, mp))
}

/// Maps a relabeled (`hbar`) label to the unit-`hbar` Fock label.
pub fn fock_label(l: &CoherentLabel, hbar: f64) -> CoherentLabel {
    let s = hbar.sqrt();
    CoherentLabel {
        p: l.p.iter().map(|v| v / s).collect(),
        x: l.x.iter().map(|v| v / s).collect(),
        theta: l.theta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvercompletenessReport {
    /// Max-norm deviation of the truncated frame operator from the identity.
    pub residual: f64,
    /// `S_00`.
    pub vacuum_element: f64,
    /// Set when `step > 1`, where the quadrature is too coarse to trust.
    pub coarse_warning: bool,
}

/// Frame operator `S = (h^2 / 2 pi) sum_l |l><l|` over the square label grid
/// `p, x in {j h : |j h| <= R}`, restricted to the first `n_probe` levels.
/// Amplitudes are the exact (untruncated) coherent expansion, so states
/// far out on the grid are not distorted by an `n_levels` cutoff.
pub fn overcompleteness_residual(
    n_levels: usize,
    n_probe: usize,
    radius: f64,
    step: f64,
    exec: Execution,
) -> Result<OvercompletenessReport> {
    if n_levels < 2 {
        return validation(format!("Fock truncation needs N >= 2, got {n_levels}"));
    }
    if n_probe == 0 || n_probe > n_levels {
        return validation(format!("probe size {n_probe} must lie in 1..={n_levels}"));
    }
    if !(radius > 0.0 && step > 0.0 && radius.is_finite() && step.is_finite()) {
        return validation("grid radius and step must be positive");
    }
    let m = (radius / step + 1e-9).floor() as i64;
    let coords: Vec<f64> = (-m..=m).map(|j| j as f64 * step).collect();
    let labels: Vec<(f64, f64)> = coords
        .iter()
        .flat_map(|&p| coords.iter().map(move |&x| (p, x)))
        .collect();
    let chunks: Vec<&[(f64, f64)]> = labels.chunks(64).collect();
    let partial = exec::map(exec, &chunks, |chunk| {
        let mut s = CMatrix::zeros(n_probe, n_probe);
        for &(p, x) in chunk.iter() {
            let c = CVector::from_vec(coherent_amplitudes(C64::new(x, p) / 2f64.sqrt(), n_probe));
            s += &c * c.adjoint();
        }
        s
    });
    let mut s = CMatrix::zeros(n_probe, n_probe);
    for part in partial {
        s += part;
    }
    s *= C64::new(step * step / (2.0 * std::f64::consts::PI), 0.0);
    let residual = (&s - CMatrix::identity(n_probe, n_probe))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(OvercompletenessReport {
        residual,
        vacuum_element: s[(0, 0)].re,
        coarse_warning: step > 1.0,
    })
}

/// `e^{i theta} psi(y - x)`: exact sample rotation when `x` is an integer
/// multiple of the spacing, spectral shift otherwise.
pub fn position_translate(psi: &GridWavefunction, x: f64, theta: f64) -> Result<GridWavefunction> {
    if !(x.is_finite() && theta.is_finite()) {
        return validation("translation parameters must be finite");
    }
    let grid: &Grid = psi.grid();
    let n = grid.n_points();
    let m = x / grid.spacing();
    let ph = C64::from_polar(1.0, theta);
    let samples: Vec<C64> = if (m - m.round()).abs() <= 1e-9 * m.abs().max(1.0) {
        let shift = (m.round() as i64).rem_euclid(n as i64) as usize;
        let src = psi.samples();
        (0..n).map(|j| src[(j + n - shift) % n] * ph).collect()
    } else {
        let mut buf = psi.samples().to_vec();
        let factors: Vec<C64> = grid
            .wavenumbers()
            .iter()
            .map(|&k| C64::from_polar(1.0, -k * x) * ph)
            .collect();
        grid.apply_in_momentum(&mut buf, &factors);
        buf
    };
    GridWavefunction::new(grid.clone(), samples)
}

/// One row of an overlap table: analytic and numerically computed `<l1|l2>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapRow {
    pub p1: f64,
    pub x1: f64,
    pub p2: f64,
    pub x2: f64,
    pub analytic: C64,
    pub numeric: C64,
}

/// All ordered pairs of the square label grid `values x values`, with the
/// numeric overlap from truncated Fock states at unit `hbar`.
pub fn overlap_table(values: &[f64], n_levels: usize, exec: Execution) -> Result<Vec<OverlapRow>> {
    let d = Displacer::new(n_levels)?;
    let labels: Vec<CoherentLabel> = values
        .iter()
        .flat_map(|&p| values.iter().map(move |&x| CoherentLabel::new(p, x)))
        .collect();
    let states = exec::try_map(exec, &labels, |l| d.coherent_state(l))?;
    let idx: Vec<usize> = (0..labels.len()).collect();
    let rows = exec::try_map(exec, &idx, |&i| -> Result<Vec<OverlapRow>> {
        let mut out = Vec::with_capacity(labels.len());
        for j in 0..labels.len() {
            let (l1, l2) = (&labels[i], &labels[j]);
            out.push(OverlapRow {
                p1: l1.p[0],
                x1: l1.x[0],
                p2: l2.p[0],
                x2: l2.x[0],
                analytic: overlap_analytic(l1, l2, 1.0)?,
                numeric: states[i].inner(&states[j])?,
            });
        }
        Ok(out)
    })?;
    Ok(rows.into_iter().flatten().collect())
}

/// Evenly spaced values `lo, ..., hi` (inclusive).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_xp;
    use crate::linalg::expi_hermitian;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn exponent(p: f64, x: f64, n: usize) -> CMatrix {
        let (xo, po) = build_xp(n, 1.0).unwrap();
        xo.matrix * C64::new(p, 0.0) - po.matrix * C64::new(x, 0.0)
    }

    #[test]
    fn central_phase_only() {
        let u = displacement(&CoherentLabel::new(0.0, 0.0).with_theta(0.7), 16).unwrap();
        let expect = CMatrix::identity(16, 16) * C64::from_polar(1.0, 0.7);
        assert!((u.matrix - expect).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn matches_general_hermitian_exponential() {
        for &(p, x) in &[(1.0, 0.0), (0.0, 1.0), (-1.3, 0.4), (2.0, -2.0)] {
            let u = displacement(&CoherentLabel::new(p, x).with_theta(0.3), 40).unwrap();
            let oracle = expi_hermitian(&exponent(p, x, 40), 1.0) * C64::from_polar(1.0, 0.3);
            let err = (u.matrix - oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "({p},{x}): {err:e}");
        }
    }

    #[test]
    fn unitary_and_inverse() {
        let d = Displacer::new(128).unwrap();
        for &(p, x) in &[(3.0, 3.0), (-3.0, 1.5), (0.5, -2.5)] {
            let u = d.operator(&CoherentLabel::new(p, x)).unwrap();
            assert!(u.unitarity_defect() <= 1e-10);
            let v = d.operator(&CoherentLabel::new(-p, -x)).unwrap();
            let prod = &u.matrix * &v.matrix;
            let err = (prod - CMatrix::identity(128, 128)).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err <= 1e-10, "{err:e}");
        }
    }

    #[test]
    fn bch_ordered_product() {
        // e^{i x p/2} e^{i theta} e^{-i x P} e^{i p X} against the single exponential,
        // compared on the vacuum to stay clear of the truncation edge.
        let n = 96;
        let (xo, po) = build_xp(n, 1.0).unwrap();
        let d = Displacer::new(n).unwrap();
        for &(p, x, th) in &[(1.0, 2.0, 0.0), (-2.0, 1.5, 0.4), (2.0, -2.0, -1.0)] {
            let ordered = expi_hermitian(&po.matrix, -x) * expi_hermitian(&xo.matrix, p)
                * C64::from_polar(1.0, x * p / 2.0 + th);
            let vac = StateVector::vacuum(n).unwrap();
            let lhs = &ordered * &vac.amplitudes;
            let rhs = d.apply(&CoherentLabel::new(p, x).with_theta(th), &vac).unwrap();
            let err = (lhs - rhs.amplitudes).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err <= 1e-10, "{err:e}");
        }
    }

    #[test]
    fn coherent_state_expectations() {
        let n = 128;
        let (xo, po) = build_xp(n, 1.0).unwrap();
        let psi = coherent_state(&CoherentLabel::new(-1.25, 2.0).with_theta(2.0), n).unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-10);
        let ex = xo.expectation(&psi).unwrap();
        let ep = po.expectation(&psi).unwrap();
        assert_abs_diff_eq!(ex.re, 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(ep.re, -1.25, epsilon = 1e-8);
        let x2 = xo.apply(&psi).unwrap().norm().powi(2);
        let p2 = po.apply(&psi).unwrap().norm().powi(2);
        let product = (x2 - ex.re * ex.re) * (p2 - ep.re * ep.re);
        assert_abs_diff_eq!(product, 0.25, epsilon = 1e-8);
    }

    #[test]
    fn vacuum_label_is_vacuum() {
        let psi = coherent_state(&CoherentLabel::new(0.0, 0.0), 8).unwrap();
        assert_abs_diff_eq!(psi.amplitudes[0].re, 1.0, epsilon = 1e-14);
        assert!(psi.amplitudes.iter().skip(1).all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn amplitudes_match_closed_form() {
        let l = CoherentLabel::new(0.8, -1.1);
        let psi = coherent_state(&l, 64).unwrap();
        let exact = coherent_amplitudes(l.alpha().unwrap(), 64);
        // global phase fixed by the vacuum component
        let g = psi.amplitudes[0] / exact[0];
        assert_abs_diff_eq!(g.norm(), 1.0, epsilon = 1e-12);
        for (a, b) in psi.amplitudes.iter().zip(&exact) {
            assert!((a - g * b).norm() < 1e-12);
        }
    }

    #[test]
    fn tail_guard() {
        let err = coherent_state(&CoherentLabel::new(8.0, 8.0), 64).unwrap_err();
        assert!(matches!(err, Error::Precision { tail, .. } if tail > 1e-12));
        assert!(coherent_state(&CoherentLabel::new(2.0, 2.0), 64).is_ok());
    }

    #[test]
    fn poisson_tail_values() {
        // Poisson(1): P(n >= 2) = 1 - 2/e
        assert_abs_diff_eq!(poisson_tail(1.0, 2), 1.0 - 2.0 / std::f64::consts::E, epsilon = 1e-15);
        assert_abs_diff_eq!(poisson_tail(4.0, 0), 1.0, epsilon = 1e-15);
        assert!(poisson_tail(4.0, 128) < 1e-80);
        assert_eq!(poisson_tail(0.0, 3), 0.0);
    }

    #[test]
    fn overlap_analytic_cases() {
        let l = CoherentLabel::new(0.3, -0.4);
        assert_abs_diff_eq!(overlap_analytic(&l, &l, 0.7).unwrap().re, 1.0, epsilon = 1e-15);
        let hbar: f64 = 0.04;
        let a = CoherentLabel::new(0.0, 0.0);
        let b = CoherentLabel::new(0.0, 2.0 * hbar.sqrt());
        assert_abs_diff_eq!(overlap_analytic(&a, &b, hbar).unwrap().norm(), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(overlap_analytic(&a, &b, 0.0).is_err());
        assert!(overlap_analytic(&a, &CoherentLabel::multi(vec![0.0; 2], vec![0.0; 2]).unwrap(), 1.0).is_err());
    }

    #[test]
    fn overlap_factorizes_over_axes() {
        let l1 = CoherentLabel::multi(vec![0.1, -0.5, 1.0], vec![0.3, 0.2, -1.0]).unwrap();
        let l2 = CoherentLabel::multi(vec![0.7, 0.5, 0.0], vec![-0.3, 1.2, 0.4]).unwrap();
        let full = overlap_analytic(&l1, &l2, 0.5).unwrap();
        let mut prod = C64::new(1.0, 0.0);
        for i in 0..3 {
            prod *= overlap_analytic(&CoherentLabel::new(l1.p[i], l1.x[i]), &CoherentLabel::new(l2.p[i], l2.x[i]), 0.5).unwrap();
        }
        assert!((full - prod).norm() < 1e-15);
    }

    #[test]
    fn overlap_against_fock_inner_products() {
        let rows = overlap_table(&linspace(-2.0, 2.0, 5), 128, Execution::default()).unwrap();
        assert_eq!(rows.len(), 625);
        for r in &rows {
            assert!((r.analytic - r.numeric).norm() <= 1e-8, "{r:?}");
        }
    }

    #[test]
    fn matrix_elements_against_fock() {
        let n = 128;
        let d = Displacer::new(n).unwrap();
        for hbar in [1.0, 0.5] {
            let (xo, po) = build_xp(n, 1.0).unwrap();
            let s = C64::new(f64::sqrt(hbar), 0.0);
            let xc = &xo.matrix * s;
            let pc = &po.matrix * s;
            let labels = [CoherentLabel::new(0.5, -1.0), CoherentLabel::new(-1.5, 0.25), CoherentLabel::new(1.0, 1.0)];
            for l1 in &labels {
                for l2 in &labels {
                    let s1 = d.coherent_state(&fock_label(l1, hbar)).unwrap();
                    let s2 = d.coherent_state(&fock_label(l2, hbar)).unwrap();
                    let (mx, mp) = matrix_element_xp(l1, l2, hbar).unwrap();
                    let bx = s1.amplitudes.dotc(&(&xc * &s2.amplitudes));
                    let bp = s1.amplitudes.dotc(&(&pc * &s2.amplitudes));
                    assert!((mx - bx).norm() <= 1e-8 && (mp - bp).norm() <= 1e-8);
                }
            }
        }
        let l = CoherentLabel::new(0.3, -0.7);
        let (mx, mp) = matrix_element_xp(&l, &l, 0.1).unwrap();
        assert_abs_diff_eq!(mx.re, -0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(mp.re, 0.3, epsilon = 1e-15);
        let z = CoherentLabel::new(0.0, 0.0);
        assert_eq!(matrix_element_xp(&z, &z, 1.0).unwrap(), (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    }

    #[test]
    fn weyl_composition() {
        let n = 128;
        let d = Displacer::new(n).unwrap();
        let vac = StateVector::vacuum(n).unwrap();
        for &(p1, x1, p2, x2) in &[(1.0, 0.5, -0.3, 1.2), (-1.5, -1.0, 0.7, 0.2)] {
            let two = d.apply(&CoherentLabel::new(p1, x1), &d.apply(&CoherentLabel::new(p2, x2), &vac).unwrap()).unwrap();
            let phi = 0.5 * (p1 * x2 - x1 * p2);
            let one = d.apply(&CoherentLabel::new(p1 + p2, x1 + x2).with_theta(phi), &vac).unwrap();
            let err = (two.amplitudes - one.amplitudes).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err <= 1e-8, "{err:e}");
        }
    }

    #[test]
    fn grid_wavefunction_matches_fock_overlap() {
        // independent position-space realization of the same states
        let g = Grid::covering(12.0, 12.0, 512).unwrap();
        let a = GridWavefunction::coherent(g.clone(), 0.6, -0.4, 1.0);
        let b = GridWavefunction::coherent(g, -1.1, 0.9, 1.0);
        let grid_ov = a.inner(&b).unwrap();
        let ov = overlap_analytic(&CoherentLabel::new(0.6, -0.4), &CoherentLabel::new(-1.1, 0.9), 1.0).unwrap();
        assert!((grid_ov - ov).norm() < 1e-12, "{grid_ov} vs {ov}");
    }

    #[test]
    fn overcompleteness() {
        let r = overcompleteness_residual(64, 16, 8.0, 0.25, Execution::default()).unwrap();
        assert!(r.residual <= 1e-3, "{}", r.residual);
        assert!(!r.coarse_warning);
        let coarse = overcompleteness_residual(64, 16, 8.0, 1.5, Execution::default()).unwrap();
        assert!(coarse.coarse_warning);
        // shrinking the grid empties the sum
        let tiny = overcompleteness_residual(64, 16, 0.1, 0.25, Execution::default()).unwrap();
        assert!(tiny.residual > 0.98);
        assert!(overcompleteness_residual(64, 65, 8.0, 0.25, Execution::default()).is_err());
    }

    #[test]
    fn vacuum_element_is_separable_gaussian_sum() {
        let h: f64 = 0.25;
        for radius in [2.0, 4.0, 6.0] {
            let r = overcompleteness_residual(16, 1, radius, h, Execution::Sequential).unwrap();
            let m = (radius / h).round() as i64;
            // |<0|l>|^2 = exp(-(p^2 + x^2)/2), split as a product of two axes
            let oracle: f64 = {
                let s: f64 = (-m..=m).map(|j| (-(j as f64 * h).powi(2) / 2.0).exp()).sum::<f64>() * h;
                s * s / (2.0 * std::f64::consts::PI)
            };
            assert_abs_diff_eq!(r.vacuum_element, oracle, epsilon = 1e-14);
        }
        let near = overcompleteness_residual(16, 1, 6.0, h, Execution::Sequential).unwrap();
        assert_abs_diff_eq!(near.vacuum_element, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn overcompleteness_improves_with_radius() {
        let res: Vec<f64> = [4.0, 6.0, 8.0, 10.0]
            .iter()
            .map(|&r| overcompleteness_residual(64, 16, r, 0.25, Execution::default()).unwrap().residual)
            .collect();
        assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
        let seq = overcompleteness_residual(64, 16, 8.0, 0.25, Execution::Sequential).unwrap();
        let par = overcompleteness_residual(64, 16, 8.0, 0.25, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn translate_cases() {
        let g = Grid::new(64, 0.25).unwrap();
        let psi = GridWavefunction::coherent(g.clone(), 0.5, 0.3, 0.5);
        let same = position_translate(&psi, 0.0, 1.1).unwrap();
        assert_eq!(same, psi.with_phase(1.1));

        let delta = GridWavefunction::delta(g.clone(), 32).unwrap();
        let moved = position_translate(&delta, 5.0 * 0.25, 0.0).unwrap();
        assert_eq!(moved, GridWavefunction::delta(g.clone(), 37).unwrap());
        assert_eq!(moved.norm(), delta.norm());

        let a = position_translate(&position_translate(&psi, 0.37, 0.2).unwrap(), 0.81, -0.5).unwrap();
        let b = position_translate(&psi, 1.18, -0.3).unwrap();
        for (u, v) in a.samples().iter().zip(b.samples()) {
            assert!((u - v).norm() < 1e-12);
        }
        assert_abs_diff_eq!(a.norm(), psi.norm(), epsilon = 1e-10);
    }

    #[test]
    fn spectral_shift_moves_gaussian() {
        let hbar = 0.2;
        let g = Grid::covering(8.0, 40.0, 256).unwrap();
        let psi = GridWavefunction::coherent(g.clone(), 0.0, -1.0, hbar);
        let moved = position_translate(&psi, 0.7321, 0.0).unwrap();
        let target = GridWavefunction::coherent(g, 0.0, -1.0 + 0.7321, hbar);
        for (u, v) in moved.samples().iter().zip(target.samples()) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn displacement_is_unitary(p in -3.0f64..3.0, x in -3.0f64..3.0, th in -3.0f64..3.0) {
            let u = displacement(&CoherentLabel::new(p, x).with_theta(th), 128).unwrap();
            prop_assert!(u.unitarity_defect() <= 1e-10);
        }

        #[test]
        fn overlap_magnitude_bounded(p1 in -3.0f64..3.0, x1 in -3.0f64..3.0, p2 in -3.0f64..3.0, x2 in -3.0f64..3.0, hbar in 0.01f64..2.0) {
            let ov = overlap_analytic(&CoherentLabel::new(p1, x1), &CoherentLabel::new(p2, x2), hbar).unwrap();
            prop_assert!(ov.norm() <= 1.0 + 1e-15);
            let back = overlap_analytic(&CoherentLabel::new(p2, x2), &CoherentLabel::new(p1, x1), hbar).unwrap();
            prop_assert!((back - ov.conj()).norm() <= 1e-14);
        }
    }
}
