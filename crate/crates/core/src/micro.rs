//! Matrix-level checks of the block-encoding constructions.
//!
//! Everything here works on dense matrices of at most 16 dimensions: the
//! LCU circuit that shifts an observable by `u`, the matrix-Hoeffding
//! subset fraction, Chebyshev polynomials on diagonal arguments and the
//! eigenphase identity behind the baseline's sine reduction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::grid::GridRegister;
use crate::seed::stream_rng;

/// Largest observable dimension.
pub const MAX_OBSERVABLE_DIM: usize = 16;

const HERMITIAN_TOL: f64 = 1e-12;

/// `T_t(x)`; `cos(t arccos x)` on `[-1, 1]`, the hyperbolic continuation outside.
pub fn chebyshev_t(t: u64, x: f64) -> f64 {
    let tf = t as f64;
    if x.abs() <= 1.0 {
        (tf * x.acos()).cos()
    } else {
        let v = (tf * x.abs().acosh()).cosh();
        if x < 0.0 && t % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

/// `T_t(x)` by the three-term recurrence.
pub fn chebyshev_recurrence(t: u64, x: f64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    let (mut a, mut b) = (1.0, x);
    for _ in 1..t {
        let c = 2.0 * x * b - a;
        a = b;
        b = c;
    }
    b
}

/// Entrywise `T_t` of a diagonal operator.
pub fn chebyshev_diagonal(values: &[f64], t: u64) -> Result<Vec<f64>> {
    if let Some(v) = values.iter().find(|v| !(v.abs() <= 1.0)) {
        return Err(Error::Domain(format!("Chebyshev argument {v} outside [-1, 1]")));
    }
    Ok(values.iter().map(|&x| chebyshev_t(t, x)).collect())
}

fn is_hermitian(m: &DMatrix<Complex64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= HERMITIAN_TOL))
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

fn spectral_norm_hermitian(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigen(m).0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// A Hermitian observable with spectral norm at most 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseObservable {
    matrix: DMatrix<Complex64>,
}

impl DenseObservable {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.ncols(),
            });
        }
        if !n.is_power_of_two() || n > MAX_OBSERVABLE_DIM {
            return Err(invalid(format!("observable dimension must be a power of 2 <= 16, got {n}")));
        }
        if !is_hermitian(&matrix) {
            return Err(invalid("observable is not Hermitian"));
        }
        if spectral_norm_hermitian(&matrix) > 1.0 + HERMITIAN_TOL {
            return Err(invalid("observable has spectral norm above 1"));
        }
        Ok(Self { matrix })
    }

    /// A diagonal observable.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    /// A random Hermitian observable of dimension `dim` with norm in `(0, 1]`.
    pub fn random(dim: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut a = DMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        a = &a + a.adjoint();
        let norm = spectral_norm_hermitian(&a).max(f64::MIN_POSITIVE);
        let target: f64 = rng.random_range(0.2..1.0);
        Self::new(a * Complex64::new(target / norm, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)].norm() == 0.0))
    }

    /// `[[O, sqrt(I - O^2)], [sqrt(I - O^2), -O]]`, a one-ancilla block encoding.
    pub fn unitary_dilation(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let (vals, vecs) = hermitian_eigen(&self.matrix);
        let s = DVector::from_iterator(
            n,
            vals.iter().map(|&v| Complex64::new((1.0 - v * v).max(0.0).sqrt(), 0.0)),
        );
        let root = &vecs * DMatrix::from_diagonal(&s) * vecs.adjoint();
        let mut u = DMatrix::zeros(2 * n, 2 * n);
        u.view_mut((0, 0), (n, n)).copy_from(&self.matrix);
        u.view_mut((0, n), (n, n)).copy_from(&root);
        u.view_mut((n, 0), (n, n)).copy_from(&root);
        u.view_mut((n, n), (n, n)).copy_from(&(-&self.matrix));
        u
    }
}

/// A unitary whose top-left block (ancillas in `|0...0>`, most significant)
/// encodes a target matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEncoding {
    pub ancilla_count: u32,
    pub unitary: DMatrix<Complex64>,
    pub alpha: f64,
    /// `|| A - alpha <0|U|0> ||` for the intended target `A`.
    pub eps: f64,
}

impl BlockEncoding {
    pub fn system_dim(&self) -> usize {
        self.unitary.nrows() >> self.ancilla_count
    }

    /// `<0^a| U |0^a>`.
    pub fn block(&self) -> DMatrix<Complex64> {
        let n = self.system_dim();
        self.unitary.view((0, 0), (n, n)).into_owned()
    }

    /// `max |U U^dagger - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.unitary.nrows();
        let e = &self.unitary * self.unitary.adjoint() - DMatrix::identity(n, n);
        e.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn ry(angle: f64) -> DMatrix<Complex64> {
    let (s, c) = (angle / 2.0).sin_cos();
    let r = |v: f64| Complex64::new(v, 0.0);
    DMatrix::from_row_slice(2, 2, &[r(c), r(-s), r(s), r(c)])
}

/// Block encoding of `(O - u I)/2` by the two-ancilla LCU circuit: a lone
/// `e^(-i Y phi/2)` on the top qubit, and on the LCU qubit `e^(-i Y theta/2)`,
/// `B` controlled on 0, `-sgn(u) I` controlled on 1, then `e^(i Y theta/2)`.
/// `B` is the unitary dilation of `O`, so three ancillas are used in total.
pub fn lcu_shift_encode(o: &DenseObservable, u: f64) -> Result<BlockEncoding> {
    if !(u.abs() <= 1.0) {
        return Err(invalid(format!("shift u must lie in [-1, 1], got {u}")));
    }
    let n = o.dim();
    let au = u.abs();
    let theta = 2.0 * au.sqrt().atan();
    let phi = 2.0 * ((4.0 - (1.0 + au).powi(2)).sqrt() / (1.0 + au)).atan();
    // sgn(0) is taken as +1; the branch has zero weight there.
    let sign = if u < 0.0 { 1.0 } else { -1.0 };

    let b = o.unitary_dilation();
    let inner = 2 * n;
    let mut sel = DMatrix::zeros(2 * inner, 2 * inner);
    sel.view_mut((0, 0), (inner, inner)).copy_from(&b);
    for i in 0..inner {
        sel[(inner + i, inner + i)] = Complex64::new(sign, 0.0);
    }
    let id = DMatrix::<Complex64>::identity(inner, inner);
    let r = ry(theta).kronecker(&id);
    let lcu = r.adjoint() * sel * r;
    let unitary = ry(phi).kronecker(&lcu);

    let enc = BlockEncoding {
        ancilla_count: 3,
        unitary,
        alpha: 1.0,
        eps: 0.0,
    };
    let target = (o.matrix() - DMatrix::identity(n, n) * Complex64::new(u, 0.0)) * Complex64::new(0.5, 0.0);
    let eps = spectral_norm(&(target - enc.block()));
    Ok(BlockEncoding { eps, ..enc })
}

/// `M / sigma` with `sigma = ceil(sqrt(2M ln(2d/delta')))`.
pub fn concentration_gamma(m: usize, d: usize, deltap: f64) -> f64 {
    let sigma = (2.0 * m as f64 * (2.0 * d as f64 / deltap).ln()).sqrt().ceil();
    m as f64 / sigma
}

/// Monte-Carlo fraction of uniform `x` in `G_p^M` with
/// `|| M^-1 sum_j x_j O_j || >= 1/(2 gamma)`.
pub fn subset_fraction(
    observables: &[DenseObservable],
    p: u32,
    gamma: f64,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    let m = observables.len();
    if m == 0 {
        return Err(invalid("need at least one observable"));
    }
    let dim = observables[0].dim();
    if observables.iter().any(|o| o.dim() != dim) {
        return Err(invalid("observables must share a dimension"));
    }
    if !(gamma > 0.0) || n_mc == 0 {
        return Err(invalid("need gamma > 0 and n_mc > 0"));
    }
    let reg = GridRegister::new(p)?;
    let threshold = 1.0 / (2.0 * gamma);
    let mut rng = stream_rng(seed, 0);
    let diagonal = observables.iter().all(DenseObservable::is_diagonal);
    let diags: Vec<Vec<f64>> = observables
        .iter()
        .map(|o| (0..dim).map(|i| o.matrix()[(i, i)].re).collect())
        .collect();
    let mut hits = 0usize;
    let mut xs = vec![0.0; m];
    for _ in 0..n_mc {
        for x in xs.iter_mut() {
            *x = reg.point(rng.random_range(0..reg.len()));
        }
        let norm = if diagonal {
            (0..dim)
                .map(|i| xs.iter().zip(&diags).map(|(x, d)| x * d[i]).sum::<f64>().abs())
                .fold(0.0, f64::max)
        } else {
            let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
            for (x, o) in xs.iter().zip(observables) {
                acc += o.matrix() * Complex64::new(*x, 0.0);
            }
            spectral_norm_hermitian(&acc)
        } / m as f64;
        if norm >= threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_mc as f64)
}

/// `<psi| exp(-2 i x O) |psi>` for a one-qubit `O` with `O|psi> = g|psi>`,
/// computed by a dense matrix exponential. `O` has the second eigenvalue
/// `-g/2` and a fixed non-diagonal eigenbasis.
pub fn eigenphase_oracle_check(g: f64, x: f64) -> Result<Complex64> {
    if !(g.abs() <= 1.0) {
        return Err(invalid(format!("eigenvalue must lie in [-1, 1], got {g}")));
    }
    let (s, c) = 0.37f64.sin_cos();
    let v = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0) * Complex64::i(),
            Complex64::new(-s, 0.0) * Complex64::i(),
            Complex64::new(c, 0.0),
        ],
    );
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![
        Complex64::new(g, 0.0),
        Complex64::new(-g / 2.0, 0.0),
    ]));
    let o = &v * d * v.adjoint();
    let psi = v.column(0).into_owned();
    let u = (o * Complex64::new(0.0, -2.0 * x)).exp();
    Ok((psi.adjoint() * u * psi)[(0, 0)])
}
