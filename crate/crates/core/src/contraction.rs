//! The `hbar -> 0` sweeps.
//!
//! Labels here are in the relabeled convention `p~ = sqrt(hbar) p`,
//! `x~ = sqrt(hbar) x`, which are the expectation values of the contracted
//! operators `P^c = sqrt(hbar) P`, `X^c = sqrt(hbar) X`. The limit is probed at
//! finite `hbar` only.

use crate::coherent::{fock_label, matrix_element_xp, overlap_analytic, CoherentLabel, Displacer};
use crate::csv::CsvTable;
use crate::error::validation;
use crate::exec::{self, Execution};
use crate::fock::HamiltonianKind;
use crate::grid::{Grid, GridWavefunction, SplitOperator};
use crate::{Error, Result};

/// Overlaps below this are reported as zero.
pub const UNDERFLOW_FLOOR: f64 = 1e-100;

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return validation(format!("hbar must be positive, got {hbar}"));
    }
    Ok(())
}

pub fn relabel(p: f64, x: f64, hbar: f64) -> Result<(f64, f64)> {
    check_hbar(hbar)?;
    let s = hbar.sqrt();
    Ok((s * p, s * x))
}

pub fn unrelabel(p_tilde: f64, x_tilde: f64, hbar: f64) -> Result<(f64, f64)> {
    check_hbar(hbar)?;
    let s = hbar.sqrt();
    Ok((p_tilde / s, x_tilde / s))
}

/// Checks that a sweep grid is strictly positive and strictly descending.
pub fn validate_hbar_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return validation("hbar grid is empty");
    }
    for &h in grid {
        check_hbar(h)?;
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return validation("hbar grid must be strictly descending");
    }
    Ok(())
}

/// Fock cutoff rule `N = max(min_levels, factor * |alpha|^2)`, with numerics
/// skipped above `max_levels`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NPolicy {
    pub min_levels: usize,
    pub factor: f64,
    pub max_levels: usize,
}

impl Default for NPolicy {
    fn default() -> Self {
        Self {
            min_levels: 64,
            factor: 9.0,
            max_levels: 1024,
        }
    }
}

impl NPolicy {
    pub fn levels_for(&self, alpha_sq: f64) -> usize {
        self.min_levels.max((self.factor * alpha_sq).ceil() as usize)
    }

    /// Cutoff for a pair of relabeled labels at `hbar`, if within budget.
    pub fn levels_for_pair(&self, l1: &CoherentLabel, l2: &CoherentLabel, hbar: f64) -> Option<usize> {
        let a2 = [l1, l2]
            .iter()
            .map(|l| (l.p[0] * l.p[0] + l.x[0] * l.x[0]) / (2.0 * hbar))
            .fold(0.0, f64::max);
        let n = self.levels_for(a2);
        (n <= self.max_levels).then_some(n)
    }
}

/// The default sweep grid `1, 0.5, 0.2, ..., 0.01`.
pub fn default_hbar_grid() -> Vec<f64> {
    vec![1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub hbar_grid: Vec<f64>,
    pub pairs: Vec<(CoherentLabel, CoherentLabel)>,
    pub n_policy: NPolicy,
}

impl SweepSpec {
    pub fn new(hbar_grid: Vec<f64>, pairs: Vec<(CoherentLabel, CoherentLabel)>, n_policy: NPolicy) -> Result<Self> {
        validate_hbar_grid(&hbar_grid)?;
        if pairs.is_empty() {
            return validation("sweep needs at least one label pair");
        }
        for (a, b) in &pairs {
            a.axis()?;
            b.axis()?;
        }
        if n_policy.min_levels < 2 || n_policy.factor <= 0.0 {
            return validation("invalid Fock cutoff policy");
        }
        Ok(Self {
            hbar_grid,
            pairs,
            n_policy,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub hbar: f64,
    pub abs_overlap: f64,
    /// Fock-space `|<l1|l2>|`, when the cutoff policy allows it.
    pub numeric_abs_overlap: Option<f64>,
    pub offdiag_x: f64,
    pub offdiag_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDecay {
    pub l1: CoherentLabel,
    pub l2: CoherentLabel,
    pub rows: Vec<DecayRow>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    /// `-((dx~)^2 + (dp~)^2)/4`.
    pub expected_slope: f64,
    /// Max `|numeric - analytic|` of the complex overlap where computed.
    pub max_numeric_diff: Option<f64>,
}

impl PairDecay {
    pub fn relative_slope_error(&self) -> f64 {
        ((self.fitted_slope - self.expected_slope) / self.expected_slope).abs()
    }

    /// `hbar,abs_overlap,offdiag_x,offdiag_p`.
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["hbar", "abs_overlap", "offdiag_x", "offdiag_p"]);
        for r in &self.rows {
            t.push(vec![r.hbar, r.abs_overlap, r.offdiag_x, r.offdiag_p]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub pairs: Vec<PairDecay>,
}

/// Least-squares line `y = a + b x`; returns `(b, stderr(b))`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::DegenerateFit(format!("need at least two points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let stderr = if n > 2 {
        let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((b, stderr))
}

fn pair_delta_sq(l1: &CoherentLabel, l2: &CoherentLabel) -> f64 {
    (l1.x[0] - l2.x[0]).powi(2) + (l1.p[0] - l2.p[0]).powi(2)
}

/// Overlap decay of each label pair along the `hbar` grid, with a fit of
/// `ln|<l1|l2>|` against `1/hbar`.
pub fn overlap_decay_sweep(spec: &SweepSpec, exec: Execution) -> Result<DecayReport> {
    let mut pairs = Vec::with_capacity(spec.pairs.len());
    for (l1, l2) in &spec.pairs {
        let d2 = pair_delta_sq(l1, l2);
        if d2 == 0.0 {
            return Err(Error::DegenerateFit("label pair is identical; its overlap does not decay".into()));
        }
        let results = exec::try_map(exec, &spec.hbar_grid, |&hbar| -> Result<(DecayRow, Option<f64>)> {
            let ov = overlap_analytic(l1, l2, hbar)?;
            let diag = diagonalization_diagnostic(&[l1.clone(), l2.clone()], hbar)?;
            let numeric = match spec.n_policy.levels_for_pair(l1, l2, hbar) {
                Some(n) => {
                    let d = Displacer::new(n)?;
                    let a = d.coherent_state(&fock_label(l1, hbar))?;
                    let b = d.coherent_state(&fock_label(l2, hbar))?;
                    Some(a.inner(&b)?)
                }
                None => None,
            };
            Ok((
                DecayRow {
                    hbar,
                    abs_overlap: ov.norm(),
                    numeric_abs_overlap: numeric.map(|z| z.norm()),
                    offdiag_x: diag.x,
                    offdiag_p: diag.p,
                },
                numeric.map(|z| (z - ov).norm()),
            ))
        })?;
        let rows: Vec<DecayRow> = results.iter().map(|(r, _)| *r).collect();
        let diffs: Vec<f64> = results.iter().filter_map(|(_, d)| *d).collect();
        let max_numeric_diff = (!diffs.is_empty()).then(|| diffs.iter().cloned().fold(0.0, f64::max));
        let xs: Vec<f64> = rows.iter().map(|r| 1.0 / r.hbar).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.abs_overlap.ln()).collect();
        let (fitted_slope, slope_stderr) = fit_line(&xs, &ys)?;
        pairs.push(PairDecay {
            l1: l1.clone(),
            l2: l2.clone(),
            rows,
            fitted_slope,
            slope_stderr,
            expected_slope: -d2 / 4.0,
            max_numeric_diff,
        });
    }
    Ok(DecayReport { pairs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffDiagonalRatio {
    pub x: f64,
    pub p: f64,
}

impl OffDiagonalRatio {
    pub fn max(&self) -> f64 {
        self.x.max(self.p)
    }
}

/// Largest off-diagonal matrix element of `X^c` (and of `P^c`) between the
/// coherent states of the label set, divided by the diagonal scale
/// `max_i max(|x~_i|, |p~_i|)`.
pub fn diagonalization_diagnostic(labels: &[CoherentLabel], hbar: f64) -> Result<OffDiagonalRatio> {
    check_hbar(hbar)?;
    if labels.len() < 2 {
        return validation("need at least two labels for an off-diagonal element");
    }
    for (i, a) in labels.iter().enumerate() {
        a.axis()?;
        for b in &labels[i + 1..] {
            if a.p == b.p && a.x == b.x {
                return validation("coincident labels in the diagnostic set");
            }
        }
    }
    let scale = labels
        .iter()
        .map(|l| l.p[0].abs().max(l.x[0].abs()))
        .fold(0.0, f64::max);
    let mut mx = 0.0f64;
    let mut mp = 0.0f64;
    for (i, a) in labels.iter().enumerate() {
        for (j, b) in labels.iter().enumerate() {
            if i != j {
                let (ex, ep) = matrix_element_xp(a, b, hbar)?;
                mx = mx.max(ex.norm());
                mp = mp.max(ep.norm());
            }
        }
    }
    Ok(OffDiagonalRatio {
        x: mx / scale,
        p: mp / scale,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmergenceSpec {
    pub x0: f64,
    pub p0: f64,
    pub hbar_grid: Vec<f64>,
    pub kind: HamiltonianKind,
    pub t_final: f64,
    pub dt: f64,
}

impl EmergenceSpec {
    pub fn validate(&self) -> Result<()> {
        validate_hbar_grid(&self.hbar_grid)?;
        self.kind.validate()?;
        if self.kind == HamiltonianKind::Free {
            return validation("classical emergence needs a confining Hamiltonian (harmonic or quartic)");
        }
        if !(self.x0.is_finite() && self.p0.is_finite()) {
            return validation("initial label must be finite");
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return validation("final time must be nonnegative");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return validation("time step must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmergenceRow {
    pub hbar: f64,
    /// Max over sample times of the distance between `(<X^c>, <P^c>)` and the
    /// classical `(x, p)`.
    pub max_deviation: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmergenceReport {
    pub rows: Vec<EmergenceRow>,
}

impl EmergenceReport {
    /// `hbar,max_traj_dev`.
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["hbar", "max_traj_dev"]);
        for r in &self.rows {
            t.push(vec![r.hbar, r.max_deviation]);
        }
        t
    }
}

/// Classical trajectory by RK4, sampled at `t = j * dt` for `j = 0..=n`.
pub fn classical_trajectory(kind: HamiltonianKind, x0: f64, p0: f64, dt: f64, n: usize, substeps: usize) -> Vec<(f64, f64)> {
    let h = dt / substeps as f64;
    let f = |x: f64, p: f64| (p, kind.classical_force(x));
    let mut out = Vec::with_capacity(n + 1);
    let (mut x, mut p) = (x0, p0);
    out.push((x, p));
    for _ in 0..n {
        for _ in 0..substeps {
            let (a1, b1) = f(x, p);
            let (a2, b2) = f(x + 0.5 * h * a1, p + 0.5 * h * b1);
            let (a3, b3) = f(x + 0.5 * h * a2, p + 0.5 * h * b2);
            let (a4, b4) = f(x + h * a3, p + h * b3);
            x += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            p += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        out.push((x, p));
    }
    out
}

/// Grid sized for a coherent state at energy `energy` in a potential at
/// least as confining as `x^2/2`: extent and momentum bound both
/// `sqrt(2 energy)` plus ten widths `sqrt(hbar)` plus a fixed margin.
pub fn emergence_grid(energy: f64, hbar: f64) -> Result<Grid> {
    let reach = (2.0 * energy.max(0.0)).sqrt() + 10.0 * hbar.sqrt() + 2.0;
    Grid::covering(reach, reach / hbar, 256)
}

/// Quantum expectation values versus the classical trajectory, per `hbar`.
/// The quantum evolution is `i hbar dpsi/dt = H(X^c, P^c) psi` on a position
/// grid by fourth-order split-operator steps, starting from the coherent
/// state at `(p0, x0)`.
pub fn classical_trajectory_emergence(spec: &EmergenceSpec, exec: Execution) -> Result<EmergenceReport> {
    spec.validate()?;
    let kind = spec.kind;
    let (n, h) = if spec.t_final == 0.0 {
        (0, spec.dt)
    } else {
        let n = (spec.t_final / spec.dt - 1e-9).ceil().max(1.0) as usize;
        (n, spec.t_final / n as f64)
    };
    let classical = classical_trajectory(kind, spec.x0, spec.p0, h, n, 8);
    let sample_stride = (n / 200).max(1);
    let rows = exec::try_map(exec, &spec.hbar_grid, |&hbar| -> Result<EmergenceRow> {
        let energy = kind.classical_energy(spec.x0, spec.p0) + hbar;
        let grid = emergence_grid(energy, hbar)?;
        let points = grid.n_points();
        let potential = move |y: f64| kind.classical_energy(y, 0.0);
        let prop = SplitOperator::new(grid.clone(), hbar, h, potential)?;
        let mut psi = GridWavefunction::coherent(grid, spec.p0, spec.x0, hbar);
        let mut worst = 0.0f64;
        let mut measure = |psi: &GridWavefunction, j: usize| {
            let (xc, pc) = classical[j];
            let (pm, _) = psi.momentum_moments(hbar);
            let d = ((psi.mean_position() - xc).powi(2) + (pm - pc).powi(2)).sqrt();
            worst = worst.max(d);
        };
        measure(&psi, 0);
        for j in 1..=n {
            prop.step(&mut psi);
            if j % sample_stride == 0 || j == n {
                measure(&psi, j);
            }
        }
        Ok(EmergenceRow {
            hbar,
            max_deviation: worst,
            grid_points: points,
        })
    })?;
    Ok(EmergenceReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionRow {
    pub hbar: f64,
    /// Largest overlap between distinct proxies (closed form, floored).
    pub max_offdiag_overlap: f64,
    /// The same from grid quadrature.
    pub numeric_offdiag_overlap: f64,
    /// Largest off-diagonal `|<i|X^c|j>|` from grid quadrature.
    pub max_offdiag_x: f64,
    /// Largest `|<i|X^c|i> - c_i|`.
    pub max_center_error: f64,
    /// Set when the closed-form overlap fell below [`UNDERFLOW_FLOOR`].
    pub underflow: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionReport {
    pub rows: Vec<PositionRow>,
    /// Set when the sampling grid is coarser than the narrowest proxy width.
    pub resolution_warning: bool,
}

/// Position-eigenstate proxies `exp(-(y - c)^2 / (2 hbar))`, normalized, at
/// each center `c`, sampled on `grid`.
pub fn position_basis_contraction(centers: &[f64], hbar_grid: &[f64], grid: &Grid, exec: Execution) -> Result<PositionReport> {
    validate_hbar_grid(hbar_grid)?;
    if centers.is_empty() {
        return validation("need at least one center");
    }
    let half = 0.5 * grid.length();
    if centers.iter().any(|c| !c.is_finite() || c.abs() >= half) {
        return validation("centers must lie inside the grid");
    }
    let min_width = hbar_grid.last().copied().unwrap_or(1.0).sqrt();
    let resolution_warning = grid.spacing() > min_width;
    let rows = exec::try_map(exec, hbar_grid, |&hbar| -> Result<PositionRow> {
        let states: Vec<GridWavefunction> = centers
            .iter()
            .map(|&c| GridWavefunction::coherent(grid.clone(), 0.0, c, hbar))
            .collect();
        let xs: Vec<GridWavefunction> = states
            .iter()
            .map(|s| {
                let samples = s.samples().iter().enumerate().map(|(j, z)| z * grid.point(j)).collect();
                GridWavefunction::new(grid.clone(), samples)
            })
            .collect::<Result<_>>()?;
        let mut closed = 0.0f64;
        let mut numeric = 0.0f64;
        let mut offx = 0.0f64;
        let mut center_err = 0.0f64;
        for i in 0..centers.len() {
            center_err = center_err.max((states[i].inner(&xs[i])?.re - centers[i]).abs());
            for j in 0..centers.len() {
                if i == j {
                    continue;
                }
                let d = centers[i] - centers[j];
                closed = closed.max((-d * d / (4.0 * hbar)).exp());
                numeric = numeric.max(states[i].inner(&states[j])?.norm());
                offx = offx.max(states[i].inner(&xs[j])?.norm());
            }
        }
        let underflow = centers.len() > 1 && closed < UNDERFLOW_FLOOR;
        Ok(PositionRow {
            hbar,
            max_offdiag_overlap: if underflow { 0.0 } else { closed },
            numeric_offdiag_overlap: numeric,
            max_offdiag_x: offx,
            max_center_error: center_err,
            underflow,
        })
    })?;
    Ok(PositionReport {
        rows,
        resolution_warning,
    })
}
