//! Finite-difference derivatives of the chain maps with respect to the shear
//! magnitudes, and their numerical ranks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ProjectiveState, TwoPointState};
use crate::error::{invalid, Error, Result};
use crate::flow::{flow_magnitudes, tangent_flow_magnitudes, wrap_signed, TorusPoint};

/// Relative singular-value cutoff for numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Maximum entry change allowed between step `h` and `h / 2`.
pub const REFINEMENT_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub matrix: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub tolerance: f64,
    pub h: f64,
}

impl RankReport {
    pub fn from_matrix(m: &DMatrix<f64>, tolerance: f64, h: f64) -> Self {
        let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let smax = sv.first().copied().unwrap_or(0.0);
        let rank = if smax > 0.0 {
            sv.iter().filter(|&&s| s > tolerance * smax).count()
        } else {
            0
        };
        RankReport {
            matrix: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
            singular_values: sv,
            rank,
            tolerance,
            h,
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let rows = self.matrix.len();
        let cols = self.matrix.first().map_or(0, Vec::len);
        DMatrix::from_fn(rows, cols, |i, j| self.matrix[i][j])
    }

    /// Largest absolute entrywise difference from `expected`.
    pub fn max_abs_diff(&self, expected: &[&[f64]]) -> f64 {
        let mut worst = 0.0f64;
        for (row, exp) in self.matrix.iter().zip(expected) {
            for (a, b) in row.iter().zip(exp.iter()) {
                worst = worst.max((a - b).abs());
            }
        }
        if self.matrix.len() != expected.len()
            || self.matrix.iter().zip(expected).any(|(r, e)| r.len() != e.len())
        {
            return f64::INFINITY;
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainKind {
    OnePoint,
    TwoPoint,
    Projective,
}

/// Initial state of one of the three chains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChainState {
    OnePoint(TorusPoint),
    TwoPoint(TwoPointState),
    Projective(ProjectiveState),
}

impl ChainState {
    pub fn kind(&self) -> ChainKind {
        match self {
            ChainState::OnePoint(_) => ChainKind::OnePoint,
            ChainState::TwoPoint(_) => ChainKind::TwoPoint,
            ChainState::Projective(_) => ChainKind::Projective,
        }
    }

    /// Chain map evaluated at arbitrary real magnitudes.
    fn image(&self, taus: &[f64]) -> Vec<f64> {
        match self {
            ChainState::OnePoint(p) => flow_magnitudes(*p, taus).to_array().to_vec(),
            ChainState::TwoPoint(s) => {
                let a = flow_magnitudes(s.x(), taus);
                let b = flow_magnitudes(s.y(), taus);
                vec![a.x1(), a.x2(), b.x1(), b.x2()]
            }
            ChainState::Projective(s) => {
                let (q, m) = tangent_flow_magnitudes(s.x(), taus);
                let w = m.apply(s.v());
                let n = w[0].hypot(w[1]);
                vec![q.x1(), q.x2(), w[0] / n, w[1] / n]
            }
        }
    }

    /// Which output components are angles on the torus.
    fn angular(&self) -> &'static [bool] {
        match self {
            ChainState::OnePoint(_) => &[true, true],
            ChainState::TwoPoint(_) => &[true, true, true, true],
            ChainState::Projective(_) => &[true, true, false, false],
        }
    }
}

/// Central differences of `f` at `taus`; outputs flagged angular are
/// differenced on the circle.
fn central_difference<F>(f: F, angular: &[bool], taus: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let rows = angular.len();
    let mut m = DMatrix::zeros(rows, taus.len());
    let mut work = taus.to_vec();
    for j in 0..taus.len() {
        work[j] = taus[j] + h;
        let plus = f(&work);
        work[j] = taus[j] - h;
        let minus = f(&work);
        work[j] = taus[j];
        for i in 0..rows {
            let d = if angular[i] {
                wrap_signed(plus[i] - minus[i])
            } else {
                plus[i] - minus[i]
            };
            m[(i, j)] = d / (2.0 * h);
        }
    }
    m
}

fn checked_difference<F>(f: F, angular: &[bool], taus: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let coarse = central_difference(&f, angular, taus, h);
    let fine = central_difference(&f, angular, taus, h / 2.0);
    let max_change = (&coarse - &fine).amax();
    if !(max_change <= REFINEMENT_TOL) {
        return Err(Error::IllConditioned { max_change });
    }
    Ok(coarse)
}

fn validate(taus: &[f64], h: f64) -> Result<()> {
    if taus.is_empty() || !taus.len().is_multiple_of(2) {
        return Err(invalid("magnitude list must hold whole (H, V) pairs"));
    }
    if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("magnitudes must be finite and >= 0"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("finite-difference step must be positive"));
    }
    Ok(())
}

/// Derivative of the `n`-step chain map with respect to the `2n` magnitudes.
pub fn jacobian_wrt_schedule(chain: ChainState, tau_star: &[f64], h: f64) -> Result<RankReport> {
    validate(tau_star, h)?;
    let m = checked_difference(|t| chain.image(t), chain.angular(), tau_star, h)?;
    Ok(RankReport::from_matrix(&m, RANK_TOLERANCE, h))
}

/// Orthonormal basis of the kernel of `a` (columns), given its numerical rank.
fn kernel_basis(a: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let n = a.ncols();
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    // order right singular vectors by singular value
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut basis: Vec<nalgebra::DVector<f64>> =
        idx.iter().take(rank).map(|&i| vt.row(i).transpose()).collect();
    let mut kernel = Vec::new();
    for e in 0..n {
        let mut v = nalgebra::DVector::zeros(n);
        v[e] = 1.0;
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            basis.push(v.clone());
            kernel.push(v);
        }
        if kernel.len() == n - rank {
            break;
        }
    }
    DMatrix::from_columns(&kernel)
}

/// Rank test for positivity of the top Lyapunov exponent.
///
/// The first report is `D_tau Psi_x` (2 x 2n). The second is the derivative
/// of the flattened spatial Jacobian `(a, b, c, d)` with respect to the
/// magnitudes (4 x 2n), restricted to an orthonormal basis of the kernel of
/// the first matrix.
pub fn furstenberg_check(x: TorusPoint, tau_star: &[f64], h: f64) -> Result<(RankReport, RankReport)> {
    validate(tau_star, h)?;
    let first = jacobian_wrt_schedule(ChainState::OnePoint(x), tau_star, h)?;
    let second_full = furstenberg_second_derivative(x, tau_star, h)?;
    let a = first.to_dmatrix();
    let k = kernel_basis(&a, first.rank);
    let restricted = second_full * k;
    Ok((first, RankReport::from_matrix(&restricted, RANK_TOLERANCE, h)))
}

/// `D_tau D_x Psi_x` with the Jacobian flattened row-major, unrestricted.
pub fn furstenberg_second_derivative(x: TorusPoint, tau_star: &[f64], h: f64) -> Result<DMatrix<f64>> {
    validate(tau_star, h)?;
    checked_difference(
        |t| tangent_flow_magnitudes(x, t).1.flatten().to_vec(),
        &[false; 4],
        tau_star,
        h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const HALF: f64 = FRAC_PI_2;

    #[test]
    fn one_point_small_set() {
        let r = jacobian_wrt_schedule(
            ChainState::OnePoint(TorusPoint::new(HALF, HALF)),
            &[PI, PI],
            DEFAULT_FD_STEP,
        )
        .unwrap();
        assert!(r.max_abs_diff(&[&[1.0, 0.0], &[0.0, -1.0]]) < 1e-4);
        assert_eq!(r.rank, 2);
    }

    #[test]
    fn projective_small_set() {
        let s = ProjectiveState::new(TorusPoint::new(HALF, HALF), [0.0, 1.0]).unwrap();
        let r = jacobian_wrt_schedule(ChainState::Projective(s), &[PI; 4], DEFAULT_FD_STEP).unwrap();
        let expected: [&[f64]; 4] = [
            &[1.0, 0.0, -1.0, 0.0],
            &[0.0, -1.0, 0.0, 1.0],
            &[0.0, -PI, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
        ];
        assert!(r.max_abs_diff(&expected) < 1e-4, "{:?}", r.matrix);
        assert_eq!(r.rank, 3);
    }

    #[test]
    fn two_point_small_set() {
        // x2 = 0 sits on the wrap seam; differences must be taken on the circle
        let s = TwoPointState::new(TorusPoint::new(0.0, HALF), TorusPoint::new(HALF, 0.0)).unwrap();
        let r = jacobian_wrt_schedule(ChainState::TwoPoint(s), &[PI; 4], DEFAULT_FD_STEP).unwrap();
        let expected: [&[f64]; 4] = [
            &[1.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, PI, 0.0],
            &[0.0, -PI, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 1.0],
        ];
        assert!(r.max_abs_diff(&expected) < 1e-4, "{:?}", r.matrix);
        assert_eq!(r.rank, 4);
    }

    #[test]
    fn furstenberg_matrices() {
        let x = TorusPoint::new(HALF, HALF);
        let taus = [HALF, PI, PI, PI, HALF, HALF];
        let (first, second) = furstenberg_check(x, &taus, DEFAULT_FD_STEP).unwrap();
        let e1: [&[f64]; 2] = [&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0], &[0.0, 0.0, PI, 0.0, 0.0, 1.0]];
        assert!(first.max_abs_diff(&e1) < 1e-4);
        assert_eq!(first.rank, 2);
        assert_eq!(second.matrix.len(), 4);
        assert_eq!(second.matrix[0].len(), 4);
        assert_eq!(second.rank, 3);

        // the unrestricted second derivative, and its product with the
        // explicit (non-orthonormal) kernel basis
        let p2 = PI * PI;
        let p3 = p2 * PI;
        let d = furstenberg_second_derivative(x, &taus, DEFAULT_FD_STEP).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            6,
            &[
                -p3, 0.0, 0.0, 0.0, 0.0, 0.0, //
                p2, 0.0, -p2 / 2.0, 0.0, 0.0, 0.0, //
                -HALF - p2 * p2, -1.0, -HALF, 1.0, -HALF, 0.0, //
                p3, 0.0, 0.0, 0.0, 0.0, 0.0,
            ],
        );
        assert!((&d - &expected).amax() < 1e-4, "{d}");
        let k = DMatrix::from_row_slice(
            6,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                -1.0, 0.0, -1.0, 0.0, //
                0.0, 0.0, -PI, 0.0,
            ],
        );
        let dk = &d * &k;
        let expected_dk = DMatrix::from_row_slice(
            4,
            4,
            &[
                -p3, 0.0, 0.0, 0.0, //
                p2, 0.0, -p2 / 2.0, 0.0, //
                -p2 * p2, -1.0, 0.0, 1.0, //
                p3, 0.0, 0.0, 0.0,
            ],
        );
        assert!((&dk - &expected_dk).amax() < 1e-4);
        assert_eq!(RankReport::from_matrix(&dk, RANK_TOLERANCE, 0.0).rank, 3);
    }

    #[test]
    fn zero_magnitudes_repeat_columns() {
        let x = TorusPoint::new(0.8, 2.1);
        let r = jacobian_wrt_schedule(ChainState::OnePoint(x), &[0.0; 6], DEFAULT_FD_STEP).unwrap();
        assert!(r.rank <= 2);
        // symbolic oracle at tau = 0: H columns (sin x2, 0), V columns (0, sin x1)
        for j in 0..6 {
            let (e0, e1) = if j % 2 == 0 { (x.x2().sin(), 0.0) } else { (0.0, x.x1().sin()) };
            assert!((r.matrix[0][j] - e0).abs() < 1e-8 && (r.matrix[1][j] - e1).abs() < 1e-8);
        }
    }

    #[test]
    fn stable_under_halving() {
        let x = TorusPoint::new(HALF, HALF);
        let a = jacobian_wrt_schedule(ChainState::OnePoint(x), &[PI, PI], 1e-4).unwrap();
        let b = jacobian_wrt_schedule(ChainState::OnePoint(x), &[PI, PI], 5e-5).unwrap();
        assert!((a.to_dmatrix() - b.to_dmatrix()).amax() < 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        let c = ChainState::OnePoint(TorusPoint::new(1.0, 1.0));
        assert!(jacobian_wrt_schedule(c, &[1.0], 1e-5).is_err());
        assert!(jacobian_wrt_schedule(c, &[1.0, -1.0], 1e-5).is_err());
        assert!(jacobian_wrt_schedule(c, &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn huge_step_is_flagged() {
        // with h of order one the difference quotient is far from converged
        let c = ChainState::OnePoint(TorusPoint::new(0.3, 1.2));
        let err = jacobian_wrt_schedule(c, &[8.0, 9.0, 7.0, 6.0], 0.5).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
    }
}
