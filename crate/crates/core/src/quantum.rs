//! Two-qubit polarization density matrices.
//!
//! States live in the product space of the home photon (kept at the receiver)
//! and the travel photon (sent out and back), with basis order
//! `|HH>, |HV>, |VH>, |VV>` and H/V denoting horizontal/vertical polarization.
//! Density matrices rather than kets are used throughout, so global phases
//! are unrepresentable and mixed states come for free.
//!
//! The protocol alphabet is the pair of Bell states
//! `(|HV> ± |VH>)/sqrt(2)`: the symmetric state encodes bit 0, the
//! antisymmetric one bit 1, and an electro-optic pi phase shift on the
//! travel photon's V component switches between them.

use nalgebra::{Matrix2, Matrix3, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Basis indices into the 4x4 matrices.
pub const HH: usize = 0;
pub const HV: usize = 1;
pub const VH: usize = 2;
pub const VV: usize = 3;

/// Hermiticity / unit-trace tolerance for state validation.
pub const STATE_TOL: f64 = 1e-12;
/// Allowed negativity of the smallest eigenvalue (numerical slack).
pub const EIGEN_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Sign selecting one of the two protocol Bell states.
///
/// `Plus` maps to key bit 0, `Minus` to key bit 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellSign {
    Plus,
    Minus,
}

impl BellSign {
    pub fn bit(self) -> u8 {
        match self {
            BellSign::Plus => 0,
            BellSign::Minus => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            BellSign::Plus
        } else {
            BellSign::Minus
        }
    }
}

/// Measurement outcome of a single polarization qubit in the H/V basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    Horizontal,
    Vertical,
}

/// Two-qubit polarization state over (home, travel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4<Complex64>,
}

impl TwoQubitState {
    /// Checked constructor: enforces Hermiticity, unit trace and positivity.
    pub fn from_matrix(rho: Matrix4<Complex64>) -> Result<Self> {
        let state = TwoQubitState { rho };
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn from_matrix_unchecked(rho: Matrix4<Complex64>) -> Self {
        TwoQubitState { rho }
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    /// Matrix element in the `|HH>..|VV>` ordering.
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.rho[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// Verify the density-matrix invariants.
    pub fn validate(&self) -> Result<()> {
        let mut herm_dev = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                herm_dev = herm_dev.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        if herm_dev >= STATE_TOL {
            return Err(Error::InvalidState(format!(
                "Hermiticity violated by {herm_dev:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr - c(1.0)).norm() >= STATE_TOL {
            return Err(Error::InvalidState(format!("trace {} != 1", tr.re)));
        }
        let min_eig = self
            .rho
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -EIGEN_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    /// Population of the `{|HV>, |VH>}` subspace (one H and one V photon).
    pub fn hv_pair_weight(&self) -> f64 {
        self.rho[(HV, HV)].re + self.rho[(VH, VH)].re
    }

    /// Reduced state of the home photon.
    pub fn reduced_home(&self) -> SingleQubitState {
        // trace out the travel qubit (second tensor factor)
        let r = &self.rho;
        let m = Matrix2::new(
            r[(HH, HH)] + r[(HV, HV)],
            r[(HH, VH)] + r[(HV, VV)],
            r[(VH, HH)] + r[(VV, HV)],
            r[(VH, VH)] + r[(VV, VV)],
        );
        SingleQubitState { rho: m }
    }

    /// Reduced state of the travel photon.
    pub fn reduced_travel(&self) -> SingleQubitState {
        let r = &self.rho;
        let m = Matrix2::new(
            r[(HH, HH)] + r[(VH, VH)],
            r[(HH, HV)] + r[(VH, VV)],
            r[(HV, HH)] + r[(VV, VH)],
            r[(HV, HV)] + r[(VV, VV)],
        );
        SingleQubitState { rho: m }
    }
}

/// Single polarization qubit over `(|H>, |V>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitState {
    rho: Matrix2<Complex64>,
}

impl SingleQubitState {
    pub fn from_matrix(rho: Matrix2<Complex64>) -> Result<Self> {
        let state = SingleQubitState { rho };
        state.validate()?;
        Ok(state)
    }

    pub fn pure_h() -> Self {
        SingleQubitState {
            rho: Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0)),
        }
    }

    pub fn pure_v() -> Self {
        SingleQubitState {
            rho: Matrix2::new(c(0.0), c(0.0), c(0.0), c(1.0)),
        }
    }

    /// Diagonal (+45 deg) polarization `(|H>+|V>)/sqrt(2)`.
    pub fn plus_x() -> Self {
        SingleQubitState {
            rho: Matrix2::new(c(0.5), c(0.5), c(0.5), c(0.5)),
        }
    }

    /// Antidiagonal (-45 deg) polarization `(|H>-|V>)/sqrt(2)`.
    pub fn minus_x() -> Self {
        SingleQubitState {
            rho: Matrix2::new(c(0.5), c(-0.5), c(-0.5), c(0.5)),
        }
    }

    pub fn maximally_mixed() -> Self {
        SingleQubitState {
            rho: Matrix2::new(c(0.5), c(0.0), c(0.0), c(0.5)),
        }
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.rho
    }

    pub fn prob_h(&self) -> f64 {
        self.rho[(0, 0)].re
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (self.rho[(0, 1)] - self.rho[(1, 0)].conj()).norm();
        if herm >= STATE_TOL {
            return Err(Error::InvalidState(format!(
                "Hermiticity violated by {herm:.3e}"
            )));
        }
        if (self.rho.trace() - c(1.0)).norm() >= STATE_TOL {
            return Err(Error::InvalidState("trace != 1".into()));
        }
        let min_eig = self
            .rho
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -EIGEN_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }
}

/// The Bell state `(|HV> ± |VH>)/sqrt(2)` selected by `sign`.
pub fn bell_state(sign: BellSign) -> TwoQubitState {
    let s = match sign {
        BellSign::Plus => 0.5,
        BellSign::Minus => -0.5,
    };
    let mut rho = Matrix4::zeros();
    rho[(HV, HV)] = c(0.5);
    rho[(VH, VH)] = c(0.5);
    rho[(HV, VH)] = c(s);
    rho[(VH, HV)] = c(s);
    TwoQubitState::from_matrix_unchecked(rho)
}

/// Electro-optic encoder: a pi phase shift between H and V on the travel
/// photon when the half-wave voltage is applied, identity otherwise.
///
/// With voltage on this maps the symmetric Bell state onto the antisymmetric
/// one and vice versa; applying it twice is the identity.
pub fn apply_pockels(state: &TwoQubitState, voltage_on: bool) -> TwoQubitState {
    if !voltage_on {
        return *state;
    }
    // U = I (x) diag(1, -1); for a diagonal real unitary, conjugation just
    // flips the sign of elements whose row/column phases differ.
    let phase = [1.0, -1.0, 1.0, -1.0]; // travel qubit is the second factor
    let mut rho = state.rho;
    for i in 0..4 {
        for j in 0..4 {
            rho[(i, j)] *= phase[i] * phase[j];
        }
    }
    TwoQubitState::from_matrix_unchecked(rho)
}

/// Blend the state with the colored (polarization-anticorrelated) mixture
/// `(|HV><HV| + |VH><VH|)/2`.
///
/// This noise model keeps the perfect H/V anticorrelation of the source but
/// destroys the phase coherence between the two amplitudes, which is what the
/// interference contrast of the analyzer actually probes.
pub fn mix_colored(state: &TwoQubitState, m: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::invalid_param(
            "m",
            format!("mixture fraction must be in [0,1], got {m}"),
        ));
    }
    let mut rho = state.rho * c(1.0 - m);
    rho[(HV, HV)] += c(m * 0.5);
    rho[(VH, VH)] += c(m * 0.5);
    Ok(TwoQubitState::from_matrix_unchecked(rho))
}

/// Coherence visibility in the H/V coincidence basis:
/// `2 |rho[HV][VH]| / (rho[HV][HV] + rho[VH][VH])`.
pub fn visibility(state: &TwoQubitState) -> Result<f64> {
    let pop = state.hv_pair_weight();
    if pop <= 0.0 {
        return Err(Error::EmptyHvSubspace);
    }
    Ok(2.0 * state.rho[(HV, VH)].norm() / pop)
}

/// Sample a z-basis (H/V) measurement of a single qubit.
pub fn measure_z<R: Rng + ?Sized>(state: &SingleQubitState, rng: &mut R) -> Polarization {
    if rng.random::<f64>() < state.prob_h() {
        Polarization::Horizontal
    } else {
        Polarization::Vertical
    }
}

/// Single-qubit measurement basis used by control runs and interceptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasBasis {
    /// H/V (computational) basis.
    Z,
    /// Diagonal/antidiagonal basis.
    X,
}

impl MeasBasis {
    /// Eigenstate projectors as 2x2 matrices; index 0 = (H or +45).
    fn projectors(self) -> [Matrix2<Complex64>; 2] {
        match self {
            MeasBasis::Z => [
                *SingleQubitState::pure_h().matrix(),
                *SingleQubitState::pure_v().matrix(),
            ],
            MeasBasis::X => [
                *SingleQubitState::plus_x().matrix(),
                *SingleQubitState::minus_x().matrix(),
            ],
        }
    }
}

/// Projectively measure the travel qubit; the post-measurement state has the
/// travel qubit collapsed onto the observed eigenstate, which is also what an
/// intercept-and-resend adversary forwards.
///
/// Returns the outcome index (0 = H or +45, 1 = V or -45) and the collapsed
/// joint state.
pub fn measure_travel<R: Rng + ?Sized>(
    state: &TwoQubitState,
    basis: MeasBasis,
    rng: &mut R,
) -> (u8, TwoQubitState) {
    let projs = basis.projectors();
    // P0 = I (x) |e0><e0|
    let p0 = kron2(&Matrix2::identity(), &projs[0]);
    let post0 = p0 * state.rho * p0.adjoint();
    let prob0 = post0.trace().re.clamp(0.0, 1.0);
    let (outcome, proj) = if rng.random::<f64>() < prob0 {
        (0u8, post0)
    } else {
        let p1 = kron2(&Matrix2::identity(), &projs[1]);
        (1u8, p1 * state.rho * p1.adjoint())
    };
    let tr = proj.trace().re;
    let rho = proj / c(tr);
    (outcome, TwoQubitState::from_matrix_unchecked(rho))
}

fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    let mut out = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Exchange the home and travel qubits.
pub fn swap_qubits(state: &TwoQubitState) -> TwoQubitState {
    // permutation HH->HH, HV->VH, VH->HV, VV->VV
    let perm = [HH, VH, HV, VV];
    let mut rho = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            rho[(perm[i], perm[j])] = state.rho[(i, j)];
        }
    }
    TwoQubitState::from_matrix_unchecked(rho)
}

/// Uhlmann fidelity `[Tr sqrt(sqrt(a) b sqrt(a))]^2` between two states.
pub fn fidelity(a: &TwoQubitState, b: &TwoQubitState) -> f64 {
    let sqrt_a = matrix_sqrt(&a.rho);
    let inner = sqrt_a * b.rho * sqrt_a;
    let trace_sqrt: f64 = inner
        .symmetric_eigenvalues()
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    (trace_sqrt * trace_sqrt).clamp(0.0, 1.0)
}

fn matrix_sqrt(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let eig = m.symmetric_eigen();
    let mut d = Matrix4::zeros();
    for i in 0..4 {
        d[(i, i)] = c(eig.eigenvalues[i].max(0.0).sqrt());
    }
    eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

const SX: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 0.0]];
const SZ: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];

/// Pauli correlation `Tr[rho (s_i (x) s_j)]` for real Pauli operators given as
/// 2x2 arrays (x and z suffice for linear-polarization analyzers).
fn pauli_corr(rho: &Matrix4<Complex64>, a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    // Tr[rho (A (x) B)] = sum_{ik,jl} rho[(2i+k),(2j+l)] A[j][i] B[l][k]
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    acc += rho[(2 * i + k, 2 * j + l)] * c(a[j][i] * b[l][k]);
                }
            }
        }
    }
    acc.re
}

/// Correlation of linear analyzers at angles `theta_a`, `theta_b` (radians).
///
/// An analyzer at angle theta measures
/// `cos(2 theta) sigma_z + sin(2 theta) sigma_x`.
pub fn analyzer_correlation(state: &TwoQubitState, theta_a: f64, theta_b: f64) -> f64 {
    let m = corr_matrix_xz(state);
    let ra = (f64::cos(2.0 * theta_a), f64::sin(2.0 * theta_a));
    let rb = (f64::cos(2.0 * theta_b), f64::sin(2.0 * theta_b));
    ra.0 * (m[0][0] * rb.0 + m[0][1] * rb.1) + ra.1 * (m[1][0] * rb.0 + m[1][1] * rb.1)
}

/// 2x2 correlation matrix restricted to the z-x analyzer plane:
/// rows/cols ordered (z, x).
fn corr_matrix_xz(state: &TwoQubitState) -> [[f64; 2]; 2] {
    let r = &state.rho;
    [
        [pauli_corr(r, &SZ, &SZ), pauli_corr(r, &SZ, &SX)],
        [pauli_corr(r, &SX, &SZ), pauli_corr(r, &SX, &SX)],
    ]
}

/// CHSH combination `E(a,b) - E(a,b') + E(a',b) + E(a',b')` at explicit
/// analyzer angles.
pub fn chsh_value(state: &TwoQubitState, angles: [f64; 4]) -> f64 {
    let [a, ap, b, bp] = angles;
    analyzer_correlation(state, a, b) - analyzer_correlation(state, a, bp)
        + analyzer_correlation(state, ap, b)
        + analyzer_correlation(state, ap, bp)
}

/// Maximal CHSH parameter over linear-polarization analyzer angles, found by
/// a coarse 1-degree grid followed by local grid refinement (tolerance well
/// below 1e-6).
///
/// For fixed primary angles (a, a') the optimal secondary angles have closed
/// form, so only a 2D search remains: with r(t) = (cos 2t, sin 2t) and M the
/// analyzer-plane correlation matrix,
/// `S(a,a') = |M^T (r(a)+r(a'))| + |M^T (r(a')-r(a))|`.
pub fn chsh_s(state: &TwoQubitState) -> f64 {
    chsh_s_with_angles(state).0
}

/// As [`chsh_s`], also returning one maximizing angle quadruple
/// `(a, a', b, b')`.
pub fn chsh_s_with_angles(state: &TwoQubitState) -> (f64, [f64; 4]) {
    let m = corr_matrix_xz(state);
    let mt_dot = |v: (f64, f64)| -> (f64, f64) {
        (
            m[0][0] * v.0 + m[1][0] * v.1,
            m[0][1] * v.0 + m[1][1] * v.1,
        )
    };
    let score = |a: f64, ap: f64| -> f64 {
        let ra = (f64::cos(2.0 * a), f64::sin(2.0 * a));
        let rap = (f64::cos(2.0 * ap), f64::sin(2.0 * ap));
        let u = mt_dot((ra.0 + rap.0, ra.1 + rap.1));
        let v = mt_dot((rap.0 - ra.0, rap.1 - ra.1));
        (u.0 * u.0 + u.1 * u.1).sqrt() + (v.0 * v.0 + v.1 * v.1).sqrt()
    };

    // coarse grid: both primary angles over half a turn at 1 degree
    let deg = std::f64::consts::PI / 180.0;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..180 {
        for j in 0..180 {
            let (a, ap) = (i as f64 * deg, j as f64 * deg);
            let s = score(a, ap);
            if s > best.0 {
                best = (s, a, ap);
            }
        }
    }
    // local refinement: three nested grid passes around the incumbent
    let mut step = deg;
    for _ in 0..3 {
        let (center_a, center_ap) = (best.1, best.2);
        let fine = step / 20.0;
        for i in -20..=20 {
            for j in -20..=20 {
                let a = center_a + i as f64 * fine;
                let ap = center_ap + j as f64 * fine;
                let s = score(a, ap);
                if s > best.0 {
                    best = (s, a, ap);
                }
            }
        }
        step = fine;
    }

    // recover the closed-form secondary angles
    let (s, a, ap) = best;
    let ra = (f64::cos(2.0 * a), f64::sin(2.0 * a));
    let rap = (f64::cos(2.0 * ap), f64::sin(2.0 * ap));
    let u = mt_dot((ra.0 + rap.0, ra.1 + rap.1));
    let v = mt_dot((rap.0 - ra.0, rap.1 - ra.1));
    let b = 0.5 * u.1.atan2(u.0);
    let bp = 0.5 * v.1.atan2(v.0);
    (s, [a, ap, b, bp])
}

/// Upper bound for the CHSH maximum over *all* measurement directions
/// (not just linear analyzers): `2 sqrt(t1 + t2)` with t1, t2 the two largest
/// eigenvalues of T^T T for the full 3x3 Pauli correlation matrix.
///
/// Exposed for cross-checks; the states produced by this crate saturate it.
pub fn chsh_bound(state: &TwoQubitState) -> f64 {
    let r = &state.rho;
    let sy_re = [[0.0, 0.0], [0.0, 0.0]];
    let sy_im = [[0.0, -1.0], [1.0, 0.0]];
    // complex Pauli-y handled via explicit real/imag split
    let corr_y = |other: &[[f64; 2]; 2], y_first: bool| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let (af, bf) = if y_first {
                            (
                                Complex64::new(sy_re[j][i], sy_im[j][i]),
                                Complex64::new(other[l][k], 0.0),
                            )
                        } else {
                            (
                                Complex64::new(other[j][i], 0.0),
                                Complex64::new(sy_re[l][k], sy_im[l][k]),
                            )
                        };
                        acc += r[(2 * i + k, 2 * j + l)] * af * bf;
                    }
                }
            }
        }
        acc.re
    };
    let yy = {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        acc += r[(2 * i + k, 2 * j + l)]
                            * Complex64::new(sy_re[j][i], sy_im[j][i])
                            * Complex64::new(sy_re[l][k], sy_im[l][k]);
                    }
                }
            }
        }
        acc.re
    };
    let t = Matrix3::new(
        pauli_corr(r, &SX, &SX),
        corr_y(&SX, false),
        pauli_corr(r, &SX, &SZ),
        corr_y(&SX, true),
        yy,
        corr_y(&SZ, true),
        pauli_corr(r, &SZ, &SX),
        corr_y(&SZ, false),
        pauli_corr(r, &SZ, &SZ),
    );
    let mut eig: Vec<f64> = (t.transpose() * t).symmetric_eigenvalues().iter().cloned().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    2.0 * (eig[0] + eig[1]).max(0.0).sqrt()
}
