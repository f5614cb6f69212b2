//! Truncated Fock-space realization of the Heisenberg-Weyl generators.
//!
//! One degree of freedom per axis, unit mass and frequency:
//!
//! ```text
//! a |n> = sqrt(n) |n-1>
//! X = sqrt(hbar/2) (a + a^dag)
//! P = i sqrt(hbar/2) (a^dag - a)
//! ```
//!
//! Truncation to `N` levels breaks the canonical commutator only in the last
//! diagonal entry: `[X, P] - i hbar I = -i hbar N |N-1><N-1|`. That defect is
//! reported, never projected away.

use nalgebra::DVector;

use crate::csv::CsvTable;
use crate::error::validation;
use crate::linalg::{self, CMatrix, CVector};
use crate::{Error, Result, C64, EXACT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub matrix: CMatrix,
    pub hbar: f64,
    pub label: String,
}

impl FockOperator {
    pub fn new(matrix: CMatrix, hbar: f64, label: impl Into<String>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return validation("operator matrix must be square and nonempty");
        }
        check_hbar(hbar)?;
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return validation("operator matrix has non-finite entries");
        }
        Ok(Self {
            matrix,
            hbar,
            label: label.into(),
        })
    }

    pub fn n_levels(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn identity(n: usize, hbar: f64) -> Result<Self> {
        check_levels(n)?;
        Self::new(CMatrix::identity(n, n), hbar, "I")
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.matrix)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= EXACT_TOL
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_dim(psi)?;
        Ok(StateVector::from_amplitudes(&self.matrix * &psi.amplitudes))
    }

    /// `<psi|O|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        self.check_dim(psi)?;
        Ok(linalg::sandwich(&psi.amplitudes, &self.matrix, &psi.amplitudes))
    }

    /// `<u|O|v>`.
    pub fn element(&self, u: &StateVector, v: &StateVector) -> Result<C64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        Ok(linalg::sandwich(&u.amplitudes, &self.matrix, &v.amplitudes))
    }

    fn check_dim(&self, psi: &StateVector) -> Result<()> {
        if psi.n_levels() != self.n_levels() {
            return validation(format!(
                "state has {} levels, operator {} has {}",
                psi.n_levels(),
                self.label,
                self.n_levels()
            ));
        }
        Ok(())
    }

    /// Row-major `row,col,re,im` listing of every entry.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["row", "col", "re", "im"]);
        t.comment(format!("operator {} n_levels={} hbar={}", self.label, self.n_levels(), self.hbar));
        let n = self.n_levels();
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                t.push(vec![i as f64, j as f64, z.re, z.im]);
            }
        }
        t
    }

    /// Reads the `row,col,re,im` format; missing entries are zero.
    pub fn from_csv(text: &str, hbar: f64, label: &str) -> Result<Self> {
        let t = CsvTable::parse(text).map_err(Error::Validation)?;
        if t.header != ["row", "col", "re", "im"] {
            return validation("operator CSV needs header row,col,re,im");
        }
        let mut n = 0usize;
        for r in &t.rows {
            for &idx in &r[..2] {
                if idx < 0.0 || idx.fract() != 0.0 {
                    return validation(format!("bad matrix index {idx}"));
                }
                n = n.max(idx as usize + 1);
            }
        }
        let mut m = CMatrix::zeros(n, n);
        for r in &t.rows {
            m[(r[0] as usize, r[1] as usize)] = C64::new(r[2], r[3]);
        }
        Self::new(m, hbar, label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: CVector,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    pub fn from_vec(v: Vec<C64>) -> Self {
        Self::from_amplitudes(DVector::from_vec(v))
    }

    /// `|n>` in an `N`-level space.
    pub fn basis(n_levels: usize, n: usize) -> Result<Self> {
        if n >= n_levels {
            return validation(format!("level {n} outside {n_levels}-level space"));
        }
        let mut v = CVector::zeros(n_levels);
        v[n] = C64::new(1.0, 0.0);
        Ok(Self::from_amplitudes(v))
    }

    pub fn vacuum(n_levels: usize) -> Result<Self> {
        Self::basis(n_levels, 0)
    }

    pub fn n_levels(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return validation("cannot normalize a zero or non-finite state");
        }
        Ok(Self::from_amplitudes(&self.amplitudes / C64::new(n, 0.0)))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n_levels() != other.n_levels() {
            return validation("inner product of states with different level counts");
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn with_phase(&self, phi: f64) -> Self {
        Self::from_amplitudes(&self.amplitudes * C64::from_polar(1.0, phi))
    }
}

fn check_levels(n: usize) -> Result<()> {
    if n < 2 {
        return validation(format!("Fock truncation needs N >= 2, got {n}"));
    }
    Ok(())
}

fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return validation(format!("hbar must be positive and finite, got {hbar}"));
    }
    Ok(())
}

/// Annihilation and creation operators on `N` levels.
pub fn build_ladder(n: usize) -> Result<(FockOperator, FockOperator)> {
    check_levels(n)?;
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let a_dag = a.adjoint();
    Ok((FockOperator::new(a, 1.0, "a")?, FockOperator::new(a_dag, 1.0, "a_dag")?))
}

pub fn build_xp(n: usize, hbar: f64) -> Result<(FockOperator, FockOperator)> {
    check_hbar(hbar)?;
    let (a, ad) = build_ladder(n)?;
    let s = (hbar / 2.0).sqrt();
    let x = (&a.matrix + &ad.matrix) * C64::new(s, 0.0);
    let p = (&ad.matrix - &a.matrix) * C64::new(0.0, s);
    Ok((FockOperator::new(x, hbar, "X")?, FockOperator::new(p, hbar, "P")?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorDefect {
    /// Largest `|D_ij|` over all entries except the last diagonal one.
    pub interior_max: f64,
    /// `D_{N-1,N-1}`; equals `-i hbar N`.
    pub corner: C64,
}

/// Splits `D = [X, P] - i hbar I` into its interior and corner parts.
pub fn commutator_defect(x: &FockOperator, p: &FockOperator) -> Result<CommutatorDefect> {
    if x.n_levels() != p.n_levels() {
        return validation(format!(
            "commutator of {}-level and {}-level operators",
            x.n_levels(),
            p.n_levels()
        ));
    }
    if x.hbar != p.hbar {
        return validation(format!("hbar mismatch: {} vs {}", x.hbar, p.hbar));
    }
    let n = x.n_levels();
    let mut d = linalg::commutator(&x.matrix, &p.matrix);
    for k in 0..n {
        d[(k, k)] -= C64::new(0.0, x.hbar);
    }
    let corner = d[(n - 1, n - 1)];
    d[(n - 1, n - 1)] = C64::new(0.0, 0.0);
    Ok(CommutatorDefect {
        interior_max: linalg::max_abs(&d),
        corner,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HamiltonianKind {
    /// `(P^2 + X^2)/2`
    Harmonic,
    /// `P^2/2`
    Free,
    /// `(P^2 + X^2)/2 + lambda X^4`
    Quartic(f64),
}

impl HamiltonianKind {
    pub fn validate(self) -> Result<Self> {
        if let HamiltonianKind::Quartic(l) = self {
            if !(l >= 0.0 && l.is_finite()) {
                return validation(format!("quartic coupling must be >= 0, got {l}"));
            }
        }
        Ok(self)
    }

    /// Classical `H(x, p)` in the same units.
    pub fn classical_energy(self, x: f64, p: f64) -> f64 {
        match self {
            HamiltonianKind::Harmonic => 0.5 * (p * p + x * x),
            HamiltonianKind::Free => 0.5 * p * p,
            HamiltonianKind::Quartic(l) => 0.5 * (p * p + x * x) + l * x.powi(4),
        }
    }

    /// `-dV/dx`.
    pub fn classical_force(self, x: f64) -> f64 {
        match self {
            HamiltonianKind::Harmonic => -x,
            HamiltonianKind::Free => 0.0,
            HamiltonianKind::Quartic(l) => -x - 4.0 * l * x.powi(3),
        }
    }
}

/// Products are taken between truncated matrices, so `X^2` and `P^2` carry
/// their own corner artifacts; the low-level block is exact.
pub fn build_hamiltonian(kind: HamiltonianKind, n: usize, hbar: f64) -> Result<FockOperator> {
    kind.validate()?;
    let (x, p) = build_xp(n, hbar)?;
    let p2 = linalg::mul_sparse_left(&p.matrix, &p.matrix);
    let mut h = &p2 * C64::new(0.5, 0.0);
    if matches!(kind, HamiltonianKind::Harmonic | HamiltonianKind::Quartic(_)) {
        let x2 = linalg::mul_sparse_left(&x.matrix, &x.matrix);
        h += &x2 * C64::new(0.5, 0.0);
        if let HamiltonianKind::Quartic(lambda) = kind {
            if lambda != 0.0 {
                h += linalg::mul_sparse_left(&x2, &x2) * C64::new(lambda, 0.0);
            }
        }
    }
    // clean roundoff asymmetry so H is Hermitian to the last bit
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    FockOperator::new(h, hbar, "H")
}

/// `(A (x) I, I (x) B)` on the `N^2`-level two-axis space.
pub fn tensor_pair(a: &FockOperator, b: &FockOperator) -> Result<(FockOperator, FockOperator)> {
    let ia = CMatrix::identity(a.n_levels(), a.n_levels());
    let ib = CMatrix::identity(b.n_levels(), b.n_levels());
    Ok((
        FockOperator::new(linalg::kron(&a.matrix, &ib), a.hbar, format!("{}_1", a.label))?,
        FockOperator::new(linalg::kron(&ia, &b.matrix), b.hbar, format!("{}_2", b.label))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const I: C64 = C64::new(0.0, 1.0);

    #[test]
    fn ladder_n2() {
        let (a, ad) = build_ladder(2).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0].map(|r| C64::new(r, 0.0)));
        assert_eq!(a.matrix, expected);
        assert_eq!(ad.matrix, expected.adjoint());
        assert!(build_ladder(1).is_err());
        assert!(build_ladder(0).is_err());
    }

    #[test]
    fn ladder_lowers() {
        let n = 10;
        let (a, _) = build_ladder(n).unwrap();
        for k in 1..n {
            let out = a.apply(&StateVector::basis(n, k).unwrap()).unwrap();
            let expected = StateVector::basis(n, k - 1).unwrap().amplitudes * C64::new((k as f64).sqrt(), 0.0);
            assert!((out.amplitudes - expected).norm() < 1e-15);
        }
        assert_eq!(a.apply(&StateVector::vacuum(n).unwrap()).unwrap().norm(), 0.0);
    }

    #[test]
    fn truncated_ladder_commutator() {
        let n = 7;
        let (a, ad) = build_ladder(n).unwrap();
        let c = linalg::commutator(&a.matrix, &ad.matrix);
        for i in 0..n {
            for j in 0..n {
                let expected = match (i == j, i == n - 1) {
                    (true, true) => -((n - 1) as f64),
                    (true, false) => 1.0,
                    _ => 0.0,
                };
                assert_abs_diff_eq!(c[(i, j)].re, expected, epsilon = 1e-12);
                assert_eq!(c[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn xp_n2() {
        let (x, p) = build_xp(2, 1.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(x.matrix[(0, 1)].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(x.matrix[(1, 0)].re, h, epsilon = 1e-15);
        assert_eq!(x.matrix[(0, 0)], C64::new(0.0, 0.0));
        assert_abs_diff_eq!(p.matrix[(0, 1)].im, -h, epsilon = 1e-15);
        assert!(x.is_hermitian() && p.is_hermitian());
        assert!(build_xp(4, 0.0).is_err());
    }

    #[test]
    fn ground_state_moments() {
        for n in [4, 8, 32] {
            let (x, p) = build_xp(n, 1.0).unwrap();
            let g = StateVector::vacuum(n).unwrap();
            assert_eq!(x.expectation(&g).unwrap().norm(), 0.0);
            assert_eq!(p.expectation(&g).unwrap().norm(), 0.0);
            let x2 = FockOperator::new(&x.matrix * &x.matrix, 1.0, "X2").unwrap();
            let p2 = FockOperator::new(&p.matrix * &p.matrix, 1.0, "P2").unwrap();
            assert_abs_diff_eq!(x2.expectation(&g).unwrap().re, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(p2.expectation(&g).unwrap().re, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn commutator_defect_n64() {
        let (x, p) = build_xp(64, 1.0).unwrap();
        let d = commutator_defect(&x, &p).unwrap();
        assert!(d.interior_max <= 1e-12, "{}", d.interior_max);
        assert_abs_diff_eq!(d.corner.re, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d.corner.im, -64.0, epsilon = 1e-10);

        let (x2, p2) = build_xp(64, 2.0).unwrap();
        let d2 = commutator_defect(&x2, &p2).unwrap();
        assert_abs_diff_eq!(d2.corner.im, 2.0 * d.corner.im, epsilon = 1e-10);
    }

    #[test]
    fn commutator_defect_mismatch() {
        let (x, _) = build_xp(8, 1.0).unwrap();
        let (_, p) = build_xp(9, 1.0).unwrap();
        assert!(commutator_defect(&x, &p).is_err());
        let (_, p) = build_xp(8, 0.5).unwrap();
        assert!(commutator_defect(&x, &p).is_err());
    }

    #[test]
    fn hamiltonians() {
        let g = StateVector::vacuum(8).unwrap();
        let h = build_hamiltonian(HamiltonianKind::Harmonic, 8, 1.0).unwrap();
        assert_abs_diff_eq!(h.expectation(&g).unwrap().re, 0.5, epsilon = 1e-14);
        let f = build_hamiltonian(HamiltonianKind::Free, 8, 1.0).unwrap();
        assert_abs_diff_eq!(f.expectation(&g).unwrap().re, 0.25, epsilon = 1e-14);
        let q0 = build_hamiltonian(HamiltonianKind::Quartic(0.0), 8, 1.0).unwrap();
        assert_eq!(q0.matrix, h.matrix);
        assert!(build_hamiltonian(HamiltonianKind::Quartic(-0.1), 8, 1.0).is_err());
        let q = build_hamiltonian(HamiltonianKind::Quartic(0.1), 8, 1.0).unwrap();
        // <0|X^4|0> = 3/4 at hbar = 1
        assert_abs_diff_eq!(q.expectation(&g).unwrap().re, 0.5 + 0.1 * 0.75, epsilon = 1e-14);
        for op in [h, f, q] {
            assert_eq!(op.hermiticity_defect(), 0.0);
        }
    }

    #[test]
    fn hermitian_up_to_1024() {
        for n in [2, 3, 17, 256, 1024] {
            let (x, p) = build_xp(n, 0.3).unwrap();
            assert!(x.hermiticity_defect() <= 1e-12);
            assert!(p.hermiticity_defect() <= 1e-12);
            let h = build_hamiltonian(HamiltonianKind::Harmonic, n, 0.3).unwrap();
            assert!(h.hermiticity_defect() <= 1e-12);
        }
    }

    #[test]
    fn two_axis_smoke() {
        let n = 6;
        let (x, p) = build_xp(n, 1.0).unwrap();
        let (x1, x2) = tensor_pair(&x, &x).unwrap();
        let (p1, p2) = tensor_pair(&p, &p).unwrap();
        assert_eq!(x1.n_levels(), 36);
        assert!(linalg::max_abs(&linalg::commutator(&x1.matrix, &p2.matrix)) < 1e-14);
        assert!(linalg::max_abs(&linalg::commutator(&x2.matrix, &p1.matrix)) < 1e-14);
        // [X1, P1] = i I on states with both occupations below N-1
        let c = linalg::commutator(&x1.matrix, &p1.matrix);
        assert!((c[(0, 0)] - I).norm() < 1e-14);
    }

    #[test]
    fn csv_roundtrip() {
        let h = build_hamiltonian(HamiltonianKind::Quartic(0.1), 5, 1.0).unwrap();
        let text = h.to_csv().render();
        let back = FockOperator::from_csv(&text, 1.0, "H").unwrap();
        assert_eq!(back.matrix, h.matrix);
        assert!(FockOperator::from_csv("a,b\n1,2\n", 1.0, "H").is_err());
    }

    proptest! {
        #[test]
        fn xp_scale_as_sqrt_hbar(n in 2usize..40, hbar in 1e-4f64..10.0) {
            let (x1, p1) = build_xp(n, 1.0).unwrap();
            let (x, p) = build_xp(n, hbar).unwrap();
            let s = C64::new(hbar.sqrt(), 0.0);
            prop_assert!(linalg::max_abs(&(&x1.matrix * s - &x.matrix)) <= 1e-12);
            prop_assert!(linalg::max_abs(&(&p1.matrix * s - &p.matrix)) <= 1e-12);
        }

        #[test]
        fn ccr_defect_confined_to_corner(n in 2usize..80, hbar in 1e-3f64..5.0) {
            let (x, p) = build_xp(n, hbar).unwrap();
            let d = commutator_defect(&x, &p).unwrap();
            prop_assert!(d.interior_max <= 1e-12 * hbar.max(1.0));
            prop_assert!((d.corner - C64::new(0.0, -hbar * n as f64)).norm() <= 1e-10 * hbar.max(1.0) * n as f64);
        }
    }
}
