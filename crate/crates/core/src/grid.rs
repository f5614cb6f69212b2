//! Periodic one-dimensional position grid with FFT-based momentum space.
//!
//! Points are `y_j = (j - M/2) dy` for `j = 0..M`. Wavefunctions are sampled
//! on the grid and normalized in the discrete sense `sum |psi_j|^2 dy = 1`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::validation;
use crate::{Result, C64};

#[derive(Clone)]
pub struct Grid {
    n: usize,
    dy: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).field("dy", &self.dy).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.dy == other.dy
    }
}

impl Grid {
    pub fn new(n_points: usize, spacing: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_multiple_of(2) {
            return validation(format!("grid needs an even number of points >= 2, got {n_points}"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return validation(format!("grid spacing must be positive, got {spacing}"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n: n_points,
            dy: spacing,
            fwd: planner.plan_fft_forward(n_points),
            inv: planner.plan_fft_inverse(n_points),
        })
    }

    /// Smallest power-of-two grid covering `[-half_width, half_width)` whose
    /// Nyquist wavenumber is at least `k_max`.
    pub fn covering(half_width: f64, k_max: f64, min_points: usize) -> Result<Self> {
        if !(half_width > 0.0 && k_max > 0.0) {
            return validation("grid extent and wavenumber bound must be positive");
        }
        let needed = (2.0 * half_width * k_max / PI).ceil() as usize;
        let n = needed.max(min_points).max(2).next_power_of_two();
        Self::new(n, 2.0 * half_width / n as f64)
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.dy
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dy
    }

    pub fn point(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dy
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Angular wavenumber of FFT bin `j`; the Nyquist bin is negative.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = if j < self.n / 2 { j as f64 } else { j as f64 - self.n as f64 };
        2.0 * PI * m / self.length()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    /// Unnormalized DFT in place. The `(-1)^j` origin offset is irrelevant for
    /// the diagonal operators applied in momentum space, so it is omitted.
    pub fn forward(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
    }

    /// Inverse DFT in place, including the `1/M` factor.
    pub fn inverse(&self, buf: &mut [C64]) {
        self.inv.process(buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }

    /// Applies the diagonal momentum-space multiplier `f(k)`.
    pub fn apply_in_momentum(&self, buf: &mut [C64], factors: &[C64]) {
        self.forward(buf);
        for (z, f) in buf.iter_mut().zip(factors) {
            *z *= f;
        }
        self.inverse(buf);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    grid: Grid,
    samples: Vec<C64>,
}

impl GridWavefunction {
    pub fn new(grid: Grid, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return validation(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.n_points()
            ));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return validation("wavefunction has non-finite samples");
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Self {
        let samples = grid.points().into_iter().map(f).collect();
        Self { grid, samples }
    }

    /// Discrete delta at point `j`, normalized.
    pub fn delta(grid: Grid, j: usize) -> Result<Self> {
        if j >= grid.n_points() {
            return validation(format!("delta index {j} outside grid"));
        }
        let mut samples = vec![C64::new(0.0, 0.0); grid.n_points()];
        samples[j] = C64::new(1.0 / grid.spacing().sqrt(), 0.0);
        Ok(Self { grid, samples })
    }

    /// Minimum-uncertainty Gaussian with `<X> = x`, `<P> = p`, variances
    /// `hbar/2`, phase fixed so that it matches the displaced vacuum
    /// `exp(i(pX - xP)/hbar)|0>`.
    pub fn coherent(grid: Grid, p: f64, x: f64, hbar: f64) -> Self {
        let norm = (PI * hbar).powf(-0.25);
        Self::from_fn(grid, |y| {
            let d = y - x;
            let amp = norm * (-d * d / (2.0 * hbar)).exp();
            C64::from_polar(amp, (p * y - 0.5 * p * x) / hbar)
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn norm(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()).sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return validation("cannot normalize the zero wavefunction");
        }
        Ok(Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|z| z / n).collect(),
        })
    }

    /// Discrete inner product `<self|other>`.
    pub fn inner(&self, other: &GridWavefunction) -> Result<C64> {
        if self.grid != other.grid {
            return validation("wavefunctions live on different grids");
        }
        let s: C64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.spacing())
    }

    /// `<X>` for a normalized wavefunction.
    pub fn mean_position(&self) -> f64 {
        let dy = self.spacing();
        self.samples
            .iter()
            .enumerate()
            .map(|(j, z)| z.norm_sqr() * self.grid.point(j))
            .sum::<f64>()
            * dy
    }

    /// `<X^2>` for a normalized wavefunction.
    pub fn mean_position_sq(&self) -> f64 {
        let dy = self.spacing();
        self.samples
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let y = self.grid.point(j);
                z.norm_sqr() * y * y
            })
            .sum::<f64>()
            * dy
    }

    /// `(<P>, <P^2>)` with `P = -i hbar d/dy`.
    pub fn momentum_moments(&self, hbar: f64) -> (f64, f64) {
        let mut buf = self.samples.clone();
        self.grid.forward(&mut buf);
        let mut w = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (j, z) in buf.iter().enumerate() {
            let pk = hbar * self.grid.wavenumber(j);
            let a = z.norm_sqr();
            w += a;
            m1 += a * pk;
            m2 += a * pk * pk;
        }
        (m1 / w, m2 / w)
    }

    pub fn with_phase(&self, theta: f64) -> Self {
        let ph = C64::from_polar(1.0, theta);
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|z| z * ph).collect(),
        }
    }
}

/// Fourth-order (Yoshida) composition of Strang splittings for
/// `i hbar d/dt psi = (P^2/2 + V(X)) psi` on a periodic grid.
pub struct SplitOperator {
    grid: Grid,
    stages: Vec<(Vec<C64>, Vec<C64>)>,
    final_half: Vec<C64>,
    dt: f64,
}

impl SplitOperator {
    pub fn new(grid: Grid, hbar: f64, dt: f64, potential: impl Fn(f64) -> f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return validation(format!("hbar must be positive, got {hbar}"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return validation(format!("time step must be positive, got {dt}"));
        }
        let cbrt2 = 2f64.cbrt();
        let w1 = 1.0 / (2.0 - cbrt2);
        let w0 = -cbrt2 / (2.0 - cbrt2);
        let v: Vec<f64> = grid.points().into_iter().map(&potential).collect();
        let k = grid.wavenumbers();
        let kin = |tau: f64| -> Vec<C64> {
            k.iter()
                .map(|&kk| C64::from_polar(1.0, -0.5 * hbar * kk * kk * tau))
                .collect()
        };
        let pot = |tau: f64| -> Vec<C64> {
            v.iter().map(|&vv| C64::from_polar(1.0, -vv * tau / hbar)).collect()
        };
        // Strang(w dt) = V(w dt/2) T(w dt) V(w dt/2); adjacent half potential
        // kicks merge across stages.
        let stages = vec![
            (pot(0.5 * w1 * dt), kin(w1 * dt)),
            (pot(0.5 * (w1 + w0) * dt), kin(w0 * dt)),
            (pot(0.5 * (w0 + w1) * dt), kin(w1 * dt)),
        ];
        Ok(Self {
            grid,
            stages,
            final_half: pot(0.5 * w1 * dt),
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, psi: &mut GridWavefunction) {
        let buf = psi.samples_mut();
        for (v, t) in &self.stages {
            buf.iter_mut().zip(v).for_each(|(z, f)| *z *= f);
            self.grid.apply_in_momentum(buf, t);
        }
        buf.iter_mut().zip(&self.final_half).for_each(|(z, f)| *z *= f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn layout() {
        let g = Grid::new(8, 0.5).unwrap();
        assert_eq!(g.point(0), -2.0);
        assert_eq!(g.point(4), 0.0);
        assert_eq!(g.length(), 4.0);
        assert_eq!(g.wavenumber(1), 2.0 * PI / 4.0);
        assert_eq!(g.wavenumber(4), -PI / 0.5);
        assert!(Grid::new(7, 0.5).is_err());
        assert!(Grid::new(8, 0.0).is_err());
    }

    #[test]
    fn covering_grid_is_power_of_two() {
        let g = Grid::covering(5.0, 40.0, 64).unwrap();
        assert!(g.n_points().is_power_of_two());
        assert!(g.wavenumber(g.n_points() / 2).abs() >= 40.0);
        assert!(g.length() >= 10.0 - 1e-12);
    }

    #[test]
    fn fft_roundtrip() {
        let g = Grid::new(16, 0.3).unwrap();
        let orig: Vec<C64> = (0..16).map(|j| C64::new(j as f64, -(j as f64).sin())).collect();
        let mut buf = orig.clone();
        g.forward(&mut buf);
        g.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn coherent_moments() {
        let hbar = 0.1;
        let g = Grid::covering(6.0, 60.0, 256).unwrap();
        let psi = GridWavefunction::coherent(g, 0.7, -1.2, hbar);
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psi.mean_position(), -1.2, epsilon = 1e-12);
        let var_x = psi.mean_position_sq() - 1.44;
        assert_abs_diff_eq!(var_x, hbar / 2.0, epsilon = 1e-12);
        let (p1, p2) = psi.momentum_moments(hbar);
        assert_abs_diff_eq!(p1, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(p2 - p1 * p1, hbar / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn free_packet_moves_classically() {
        let hbar = 0.05;
        let g = Grid::covering(8.0, 80.0, 256).unwrap();
        let mut psi = GridWavefunction::coherent(g.clone(), 1.5, -2.0, hbar);
        let prop = SplitOperator::new(g, hbar, 0.01, |_| 0.0).unwrap();
        for _ in 0..200 {
            prop.step(&mut psi);
        }
        assert_abs_diff_eq!(psi.mean_position(), -2.0 + 1.5 * 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn harmonic_split_is_fourth_order() {
        // exact: <X>(t) = x cos t + p sin t
        let hbar = 0.2;
        let t = 2.0;
        let err = |dt: f64| {
            let g = Grid::covering(8.0, 60.0, 256).unwrap();
            let mut psi = GridWavefunction::coherent(g.clone(), 0.5, 1.0, hbar);
            let prop = SplitOperator::new(g, hbar, dt, |y| 0.5 * y * y).unwrap();
            let n = (t / dt).round() as usize;
            for _ in 0..n {
                prop.step(&mut psi);
            }
            (psi.mean_position() - (t.cos() + 0.5 * t.sin())).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio} ({e1:e}, {e2:e})");
    }
}
