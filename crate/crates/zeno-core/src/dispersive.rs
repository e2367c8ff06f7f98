//! Coherent-state readout model: per-level cavity pointer trajectories,
//! accumulated resonator-induced phases, pairwise dephasing/rotation rates,
//! their steady-state and slow-gate approximations, and the qudit master
//! equation that supplements pointer dynamics with the Rabi drive.
//!
//! Rate convention: a coherence ρ_{jℓ} damps as e^{-Γ_{jℓ} t} and rotates as
//! e^{+iΥ_{jℓ} t}, matching the Bloch form ẋ = -Γx + Υy of the two-level
//! reduction.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::evolve::{integrate_grid, EvolveError, IntegratorConfig};
use crate::gate::{rabi_hamiltonian, ZenoSystemSpec};
use crate::operator::{DensityMatrix, Operator};

#[derive(Debug, Error)]
pub enum DispersiveError {
    #[error("cavity linewidth must be positive, got {0}")]
    BadKappa(f64),
    #[error("drive amplitude must be non-negative, got {0}")]
    BadEpsilon(f64),
    #[error("need one dispersive shift per level: {levels} levels, {chis} shifts")]
    ChiCount { levels: usize, chis: usize },
    #[error("no canonical drive for a {0}-level qudit (expected 2, 3 or 6 levels)")]
    NoDrive(usize),
    #[error("state dimension {state} does not match level count {levels}")]
    DimMismatch { state: usize, levels: usize },
    #[error(transparent)]
    Evolve(#[from] EvolveError),
}

/// Dispersive readout parameters. `delta_ce` is the drive detuning from the
/// bare cavity (ω_c − ω_ε); level `j` sees the pulled detuning
/// `Δ_j = delta_ce + χ_j`.
#[derive(Debug, Clone)]
pub struct DispersiveParams {
    pub levels: Vec<String>,
    pub chi: Vec<f64>,
    pub kappa: f64,
    pub epsilon: f64,
    pub delta_ce: f64,
    pub phi_drive: f64,
}

impl DispersiveParams {
    pub fn new(
        levels: Vec<String>,
        chi: Vec<f64>,
        kappa: f64,
        epsilon: f64,
        delta_ce: f64,
    ) -> Result<Self, DispersiveError> {
        if kappa <= 0.0 {
            return Err(DispersiveError::BadKappa(kappa));
        }
        if epsilon < 0.0 {
            return Err(DispersiveError::BadEpsilon(epsilon));
        }
        if levels.len() != chi.len() {
            return Err(DispersiveError::ChiCount {
                levels: levels.len(),
                chis: chi.len(),
            });
        }
        Ok(Self {
            levels,
            chi,
            kappa,
            epsilon,
            delta_ce,
            phi_drive: std::f64::consts::FRAC_PI_2,
        })
    }

    /// Standard labels for the qutrit ⊗ qubit system, χ given in the order
    /// gg, ge, eg, ee, fg, fe.
    pub fn gate_levels(
        chi: [f64; 6],
        kappa: f64,
        epsilon: f64,
        delta_ce: f64,
    ) -> Result<Self, DispersiveError> {
        let labels = ["gg", "ge", "eg", "ee", "fg", "fe"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        Self::new(labels, chi.to_vec(), kappa, epsilon, delta_ce)
    }

    /// Bare qutrit with χ given in the order g, e, f.
    pub fn qutrit(
        chi: [f64; 3],
        kappa: f64,
        epsilon: f64,
        delta_ce: f64,
    ) -> Result<Self, DispersiveError> {
        let labels = ["g", "e", "f"].iter().map(|s| s.to_string()).collect();
        Self::new(labels, chi.to_vec(), kappa, epsilon, delta_ce)
    }

    pub fn with_phi_drive(mut self, phi: f64) -> Self {
        self.phi_drive = phi;
        self
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Drive detuning seen by level `j`, `Δ_j = Δ^c_ε + χ_j`.
    pub fn delta(&self, j: usize) -> f64 {
        self.delta_ce + self.chi[j]
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }
}

/// Steady pointer amplitude for level `j`.
pub fn alpha_steady(p: &DispersiveParams, j: usize) -> C64 {
    let drive = C64::new(0.0, -p.epsilon) * C64::from_polar(1.0, p.phi_drive);
    drive / C64::new(0.5 * p.kappa, p.delta(j))
}

/// Pointer amplitude at time `t` starting from `alpha0`:
/// the steady value plus a transient decaying at rate κ/2 while rotating at
/// the pulled detuning.
pub fn alpha_trajectory(p: &DispersiveParams, j: usize, alpha0: C64, t: f64) -> C64 {
    let bar = alpha_steady(p, j);
    let decay = (C64::new(-0.5 * p.kappa, -p.delta(j)) * C64::new(t, 0.0)).exp();
    bar + (alpha0 - bar) * decay
}

/// Accumulated external phase of the level-`j` pointer,
/// `φ_j(t) = -ε ∫₀ᵗ Re[e^{-iφ_drive} α_j(s)] ds`, in closed form.
pub fn phase_accumulation(p: &DispersiveParams, j: usize, alpha0: C64, t: f64) -> f64 {
    let bar = alpha_steady(p, j);
    let pole = C64::new(0.5 * p.kappa, p.delta(j));
    let transient = (alpha0 - bar) * (C64::new(1.0, 0.0) - (-pole * C64::new(t, 0.0)).exp())
        / pole;
    let integral = transient + bar * C64::new(t, 0.0);
    let quad = C64::from_polar(1.0, -p.phi_drive);
    -p.epsilon * (quad * integral).re
}

/// Instantaneous phase rotation rate `φ̇_j = -ε Re[e^{-iφ_drive} α_j]`.
fn rip_rate(epsilon: f64, phi_drive: f64, alpha: C64) -> f64 {
    -epsilon * (C64::from_polar(1.0, -phi_drive) * alpha).re
}

/// Pairwise measurement strength and phase-rotation rate for two pointer
/// amplitudes: `Γ = (κ/2)|α_j - α_ℓ|²`,
/// `Υ = κ Im[α_j α_ℓ*] + ε Im[α_ℓ - α_j]` (drive on the π/2 quadrature).
pub fn rates(alpha_j: C64, alpha_l: C64, kappa: f64, epsilon: f64) -> (f64, f64) {
    rates_general(alpha_j, alpha_l, kappa, epsilon, std::f64::consts::FRAC_PI_2)
}

/// As [`rates`] with an arbitrary drive quadrature; the rotation combines the
/// dissipative term with the difference of resonator-induced phase rates.
pub fn rates_general(
    alpha_j: C64,
    alpha_l: C64,
    kappa: f64,
    epsilon: f64,
    phi_drive: f64,
) -> (f64, f64) {
    let gamma = 0.5 * kappa * (alpha_j - alpha_l).norm_sqr();
    let upsilon = kappa * (alpha_j * alpha_l.conj()).im
        + rip_rate(epsilon, phi_drive, alpha_j)
        - rip_rate(epsilon, phi_drive, alpha_l);
    (gamma, upsilon)
}

/// Pairwise rate tables: `gamma` symmetric, `upsilon` antisymmetric, indexed
/// by the level ordering of the parameter set that produced them.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub levels: Vec<String>,
    pub gamma: Array2<f64>,
    pub upsilon: Array2<f64>,
}

impl RateTable {
    pub fn level_pair(&self, a: &str, b: &str) -> Option<(f64, f64)> {
        let i = self.levels.iter().position(|l| l == a)?;
        let j = self.levels.iter().position(|l| l == b)?;
        Some((self.gamma[[i, j]], self.upsilon[[i, j]]))
    }
}

/// Exact steady-state rates from the steady pointer amplitudes.
pub fn steady_rates(p: &DispersiveParams) -> RateTable {
    let n = p.n_levels();
    let alphas: Vec<C64> = (0..n).map(|j| alpha_steady(p, j)).collect();
    let mut gamma = Array2::zeros((n, n));
    let mut upsilon = Array2::zeros((n, n));
    for j in 0..n {
        for l in 0..n {
            if j == l {
                continue;
            }
            let (g, u) = rates_general(alphas[j], alphas[l], p.kappa, p.epsilon, p.phi_drive);
            gamma[[j, l]] = g;
            upsilon[[j, l]] = u;
        }
    }
    RateTable {
        levels: p.levels.clone(),
        gamma,
        upsilon,
    }
}

/// Leading-order steady rates in the slow-gate hierarchy Ω ≪ κ ≪ Δχ:
/// `Γ ≈ 2ε²/κ` for pairs involving a resonantly driven level and
/// `Γ ≈ (κε²/2) Δχ²/(Δ_j² Δ_ℓ²)` otherwise; the rotation reduces to
/// `ε²(1/Δ_j − 1/Δ_ℓ)` with `ε²/Δ_ℓ` when level `j` is resonant.
pub fn steady_rates_slow_markov(p: &DispersiveParams) -> RateTable {
    let n = p.n_levels();
    let eps2 = p.epsilon * p.epsilon;
    let mut gamma = Array2::zeros((n, n));
    let mut upsilon = Array2::zeros((n, n));
    let resonant_tol = 1e-9 * p.kappa;
    for j in 0..n {
        for l in 0..n {
            if j == l {
                continue;
            }
            let dj = p.delta(j);
            let dl = p.delta(l);
            let dchi = p.chi[j] - p.chi[l];
            let j_res = dj.abs() < resonant_tol;
            let l_res = dl.abs() < resonant_tol;
            gamma[[j, l]] = if j_res || l_res {
                if j_res && l_res {
                    0.0
                } else {
                    2.0 * eps2 / p.kappa
                }
            } else {
                0.5 * p.kappa * eps2 * dchi * dchi / (dj * dj * dl * dl)
            };
            upsilon[[j, l]] = if j_res && l_res {
                0.0
            } else if j_res {
                eps2 / dl
            } else if l_res {
                -eps2 / dj
            } else {
                eps2 * (1.0 / dj - 1.0 / dl)
            };
        }
    }
    RateTable {
        levels: p.levels.clone(),
        gamma,
        upsilon,
    }
}

/// Which readout realizes the pointer states.
#[derive(Debug, Clone)]
pub enum ReadoutModel {
    Dispersive(DispersiveParams),
    /// Level-diagonal coupling `g_j (a + a†)` to a cavity at `omega_c`.
    Longitudinal {
        levels: Vec<String>,
        g: Vec<f64>,
        kappa: f64,
        omega_c: f64,
    },
}

impl ReadoutModel {
    pub fn n_levels(&self) -> usize {
        match self {
            ReadoutModel::Dispersive(p) => p.n_levels(),
            ReadoutModel::Longitudinal { levels, .. } => levels.len(),
        }
    }

    pub fn levels(&self) -> Vec<String> {
        match self {
            ReadoutModel::Dispersive(p) => p.levels.clone(),
            ReadoutModel::Longitudinal { levels, .. } => levels.clone(),
        }
    }

    pub fn kappa(&self) -> f64 {
        match self {
            ReadoutModel::Dispersive(p) => p.kappa,
            ReadoutModel::Longitudinal { kappa, .. } => *kappa,
        }
    }

    /// Pointer ODE pieces: `α̇_j = drive_j - (i ν_j + κ/2) α_j`.
    pub(crate) fn pointer_ode(&self, j: usize) -> (C64, f64) {
        match self {
            ReadoutModel::Dispersive(p) => (
                C64::new(0.0, -p.epsilon) * C64::from_polar(1.0, p.phi_drive),
                p.delta(j),
            ),
            ReadoutModel::Longitudinal { g, omega_c, .. } => {
                (C64::new(0.0, -g[j]), *omega_c)
            }
        }
    }

    pub fn steady_alpha(&self, j: usize) -> C64 {
        let (drive, nu) = self.pointer_ode(j);
        drive / C64::new(0.5 * self.kappa(), nu)
    }

    /// Instantaneous resonator-induced phase rate of level `j`.
    pub(crate) fn rip_rate(&self, j: usize, alpha: C64) -> f64 {
        match self {
            ReadoutModel::Dispersive(p) => rip_rate(p.epsilon, p.phi_drive, alpha),
            ReadoutModel::Longitudinal { g, .. } => -g[j] * alpha.re,
        }
    }
}

/// Steady rates for longitudinal coupling: `ᾱ_j = -2i g_j/(κ + 2iω_c)`,
/// `Γ̄_{jℓ} = 2κ Δg²/(κ² + 4ω_c²)`, `Ῡ_{jℓ} = 4ω_c (g_j² - g_ℓ²)/(κ² + 4ω_c²)`.
pub fn longitudinal_rates(levels: Vec<String>, g: &[f64], kappa: f64, omega_c: f64) -> RateTable {
    let n = g.len();
    let denom = kappa * kappa + 4.0 * omega_c * omega_c;
    let mut gamma = Array2::zeros((n, n));
    let mut upsilon = Array2::zeros((n, n));
    for j in 0..n {
        for l in 0..n {
            if j == l {
                continue;
            }
            let dg = g[j] - g[l];
            gamma[[j, l]] = 2.0 * kappa * dg * dg / denom;
            upsilon[[j, l]] = 4.0 * omega_c * (g[j] * g[j] - g[l] * g[l]) / denom;
        }
    }
    RateTable {
        levels,
        gamma,
        upsilon,
    }
}

/// Canonical drive Hamiltonian per level layout: the qutrit ⊗ qubit gate
/// drive for 6 levels, the bare-qutrit e↔f drive for 3, and a g↔e drive for
/// a plain qubit.
pub(crate) fn qudit_drive(
    n_levels: usize,
    omega: f64,
    phi_axis: f64,
) -> Result<Operator, DispersiveError> {
    if omega == 0.0 {
        let dims = match n_levels {
            6 => vec![3, 2],
            n => vec![n],
        };
        return Ok(Operator::zeros(&dims));
    }
    let (sin_phi, cos_phi) = phi_axis.sin_cos();
    match n_levels {
        6 => {
            let spec = ZenoSystemSpec::new(2, omega, phi_axis).map_err(|_| {
                DispersiveError::NoDrive(n_levels)
            })?;
            Ok(rabi_hamiltonian(&spec))
        }
        3 => {
            let mut q = Array2::zeros((3, 3));
            q[[1, 2]] = C64::new(0.0, 0.5 * omega * sin_phi);
            q[[2, 1]] = C64::new(0.0, -0.5 * omega * sin_phi);
            q[[1, 1]] = C64::new(0.5 * omega * cos_phi, 0.0);
            q[[2, 2]] = C64::new(-0.5 * omega * cos_phi, 0.0);
            Ok(Operator::from_matrix(q).unwrap())
        }
        2 => {
            let mut q = Array2::zeros((2, 2));
            q[[0, 1]] = C64::new(0.0, 0.5 * omega * sin_phi);
            q[[1, 0]] = C64::new(0.0, -0.5 * omega * sin_phi);
            q[[0, 0]] = C64::new(0.5 * omega * cos_phi, 0.0);
            q[[1, 1]] = C64::new(-0.5 * omega * cos_phi, 0.0);
            Ok(Operator::from_matrix(q).unwrap())
        }
        n => Err(DispersiveError::NoDrive(n)),
    }
}

/// Per-level pointer amplitudes and accumulated phases at one instant.
#[derive(Debug, Clone)]
pub struct CoherentRecord {
    pub t: f64,
    pub alpha: Vec<C64>,
    pub phase: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CaFlags {
    /// Zero all phase rotations (isolates pure measurement-induced damping).
    pub upsilon_off: bool,
    /// Hold the pointers at their steady amplitudes instead of co-integrating
    /// the ring-up.
    pub steady: bool,
}

/// Coherent-state-model evolution of the qudit alone: pointer amplitudes are
/// co-integrated per level and the qudit coherences damp and rotate at the
/// instantaneous pairwise rates while the Rabi drive is applied alongside.
pub fn ca_evolve_naive(
    p: &DispersiveParams,
    omega: f64,
    phi_axis: f64,
    rho0: &DensityMatrix,
    alpha0: C64,
    t_grid: &[f64],
    flags: CaFlags,
    cfg: &IntegratorConfig,
) -> Result<(Vec<DensityMatrix>, Vec<CoherentRecord>), DispersiveError> {
    ca_evolve_readout(
        &ReadoutModel::Dispersive(p.clone()),
        omega,
        phi_axis,
        rho0,
        alpha0,
        t_grid,
        flags,
        cfg,
    )
}

/// [`ca_evolve_naive`] generalized over the readout realization.
#[allow(clippy::too_many_arguments)]
pub fn ca_evolve_readout(
    readout: &ReadoutModel,
    omega: f64,
    phi_axis: f64,
    rho0: &DensityMatrix,
    alpha0: C64,
    t_grid: &[f64],
    flags: CaFlags,
    cfg: &IntegratorConfig,
) -> Result<(Vec<DensityMatrix>, Vec<CoherentRecord>), DispersiveError> {
    let n = readout.n_levels();
    if rho0.dim() != n {
        return Err(DispersiveError::DimMismatch {
            state: rho0.dim(),
            levels: n,
        });
    }
    let h_r = qudit_drive(n, omega, phi_axis)?;
    let h = h_r.entries().clone();
    let kappa = readout.kappa();
    let odes: Vec<(C64, f64)> = (0..n).map(|j| readout.pointer_ode(j)).collect();

    // State layout: [α_0..α_{n-1}, φ_0..φ_{n-1}, ρ row-major].
    let len = 2 * n + n * n;
    let mut y0: Array1<C64> = Array1::zeros(len);
    for j in 0..n {
        y0[j] = if flags.steady {
            readout.steady_alpha(j)
        } else {
            alpha0
        };
    }
    for (i, z) in rho0.entries().iter().enumerate() {
        y0[2 * n + i] = *z;
    }

    let readout = readout.clone();
    let rhs = move |_t: f64, y: &Array1<C64>, dy: &mut Array1<C64>| {
        let alphas = &y.as_slice().unwrap()[..n];
        // Pointer and phase derivatives.
        for j in 0..n {
            let (drive, nu) = odes[j];
            dy[j] = if flags.steady {
                C64::new(0.0, 0.0)
            } else {
                drive - C64::new(0.5 * kappa, nu) * alphas[j]
            };
            dy[n + j] = C64::new(readout.rip_rate(j, alphas[j]), 0.0);
        }
        // Qudit block: -i[H_R, ρ] plus element-wise damping/rotation.
        let rho = crate::evolve::as_matrix_offset(y, 2 * n, n);
        let comm = h.dot(&rho) - rho.dot(&h);
        for j in 0..n {
            for l in 0..n {
                let mut m = C64::new(0.0, -1.0) * comm[[j, l]];
                if j != l {
                    let (g, u) = {
                        let gamma = 0.5 * kappa * (alphas[j] - alphas[l]).norm_sqr();
                        let upsilon = if flags.upsilon_off {
                            0.0
                        } else {
                            kappa * (alphas[j] * alphas[l].conj()).im
                                + readout.rip_rate(j, alphas[j])
                                - readout.rip_rate(l, alphas[l])
                        };
                        (gamma, upsilon)
                    };
                    m += C64::new(-g, u) * rho[[j, l]];
                }
                dy[2 * n + j * n + l] = m;
            }
        }
    };

    let states = integrate_grid(y0, t_grid, cfg, rhs, |y| {
        // Keep the qudit block Hermitian; pointer entries are untouched.
        for j in 0..n {
            for l in (j + 1)..n {
                let a = y[2 * n + j * n + l];
                let b = y[2 * n + l * n + j];
                let avg = 0.5 * (a + b.conj());
                y[2 * n + j * n + l] = avg;
                y[2 * n + l * n + j] = avg.conj();
            }
            let d = y[2 * n + j * n + j];
            y[2 * n + j * n + j] = C64::new(d.re, 0.0);
        }
    })?;

    let dims = rho0.dims().to_vec();
    let mut rhos = Vec::with_capacity(states.len());
    let mut records = Vec::with_capacity(states.len());
    for (k, y) in states.iter().enumerate() {
        let mut m = Array2::zeros((n, n));
        for j in 0..n {
            for l in 0..n {
                m[[j, l]] = y[2 * n + j * n + l];
            }
        }
        let op = Operator::new(dims.clone(), m).map_err(EvolveError::from)?;
        rhos.push(DensityMatrix::new(op, crate::evolve::EVOLVE_POSITIVITY_TOL)
            .map_err(EvolveError::from)?);
        records.push(CoherentRecord {
            t: t_grid[k],
            alpha: (0..n).map(|j| y[j]).collect(),
            phase: (0..n).map(|j| y[n + j].re).collect(),
        });
    }
    Ok((rhos, records))
}

/// The qutrit coherence-vector basis used for readout analysis, ordered and
/// normalized to tr(σ_j σ_k) = 2 δ_jk with the f level first.
pub fn gellmann_matrices() -> [Array2<C64>; 8] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    // Level indices: g = 0, e = 1, f = 2.
    let mut s = std::array::from_fn(|_| Array2::from_elem((3, 3), z));
    s[0][[2, 2]] = o; // |f><f| - |e><e|
    s[0][[1, 1]] = -o;
    let r3 = 3.0_f64.sqrt().recip();
    s[1][[2, 2]] = o * r3; // (|f><f| + |e><e| - 2|g><g|)/√3
    s[1][[1, 1]] = o * r3;
    s[1][[0, 0]] = -2.0 * o * r3;
    s[2][[2, 1]] = o; // |f><e| + |e><f|
    s[2][[1, 2]] = o;
    s[3][[2, 0]] = o; // |f><g| + |g><f|
    s[3][[0, 2]] = o;
    s[4][[1, 0]] = o; // |e><g| + |g><e|
    s[4][[0, 1]] = o;
    s[5][[2, 1]] = -i; // -i|f><e| + i|e><f|
    s[5][[1, 2]] = i;
    s[6][[2, 0]] = -i; // -i|f><g| + i|g><f|
    s[6][[0, 2]] = i;
    s[7][[1, 0]] = -i; // -i|e><g| + i|g><e|
    s[7][[0, 1]] = i;
    s
}

/// Coherence-vector coordinates q_k = tr(σ_k ρ) of a qutrit state.
pub fn gellmann_coords(rho: &Array2<C64>) -> Result<[f64; 8], DispersiveError> {
    if rho.nrows() != 3 || rho.ncols() != 3 {
        return Err(DispersiveError::DimMismatch {
            state: rho.nrows(),
            levels: 3,
        });
    }
    let basis = gellmann_matrices();
    let mut q = [0.0; 8];
    for (k, s) in basis.iter().enumerate() {
        let tr: C64 = s.dot(rho).diag().iter().sum();
        q[k] = tr.re;
    }
    Ok(q)
}

/// Inverse map ρ = I/3 + (1/2) q·σ.
pub fn rho_from_gellmann(q: &[f64; 8]) -> Array2<C64> {
    let basis = gellmann_matrices();
    let mut rho = Array2::eye(3).mapv(|z: C64| z / C64::new(3.0, 0.0));
    for (k, s) in basis.iter().enumerate() {
        rho = rho + s.mapv(|z| z * C64::new(0.5 * q[k], 0.0));
    }
    rho
}
