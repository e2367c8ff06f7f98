//! Full qudit ⊗ cavity master-equation simulation with Fock truncation,
//! plus the figures of merit used to judge the gate: subspace retention,
//! two-qubit concurrence on the unrenormalized computational block, and the
//! Husimi-Q portrait of the cavity state.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::dispersive::{qudit_drive, DispersiveError, ReadoutModel};
use crate::evolve::{integrate_grid, EvolveError, IntegratorConfig, EVOLVE_POSITIVITY_TOL};
use crate::linalg;
use crate::operator::{partial_trace, DensityMatrix, Operator, OperatorError};

#[derive(Debug, Error)]
pub enum FullSimError {
    #[error("Fock truncation must be at least 2, got {0}")]
    BadTruncation(usize),
    #[error("initial qudit state has {state} amplitudes for {levels} levels")]
    BadInitial { state: usize, levels: usize },
    #[error("operation requires the qutrit ⊗ qubit level layout, found {0} levels")]
    NotGateLayout(usize),
    #[error("figures of merit did not converge below the Fock ceiling {ceiling}")]
    NonConvergence { ceiling: usize },
    #[error("concurrence input must be a Hermitian 4x4 block (defect {defect:e})")]
    BadConcurrenceInput { defect: f64 },
    #[error(transparent)]
    Dispersive(#[from] DispersiveError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Parameters of one full simulation: readout realization, qudit drive,
/// Fock truncation, duration, and the product initial state
/// (qudit pure state ⊗ cavity coherent `alpha0`, vacuum by default).
#[derive(Debug, Clone)]
pub struct FullSimParams {
    pub readout: ReadoutModel,
    pub omega: f64,
    pub phi_axis: f64,
    pub n_fock: usize,
    pub t_final: f64,
    pub initial_qudit: Array1<C64>,
    pub alpha0: C64,
}

impl FullSimParams {
    pub fn validate(&self) -> Result<(), FullSimError> {
        if self.n_fock < 2 {
            return Err(FullSimError::BadTruncation(self.n_fock));
        }
        let levels = self.readout.n_levels();
        if self.initial_qudit.len() != levels {
            return Err(FullSimError::BadInitial {
                state: self.initial_qudit.len(),
                levels,
            });
        }
        Ok(())
    }

    /// The equal superposition (|e⟩+|g⟩)⊗(|e⟩+|g⟩)/2 on the gate levels.
    pub fn standard_initial_qudit() -> Array1<C64> {
        let mut psi = Array1::zeros(6);
        for idx in 0..4 {
            psi[idx] = C64::new(0.5, 0.0);
        }
        psi
    }

    pub fn n_levels(&self) -> usize {
        self.readout.n_levels()
    }

    /// Tensor-factor dimensions: [3, 2, n_fock] for the gate layout,
    /// [levels, n_fock] otherwise.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = if self.n_levels() == 6 {
            vec![3, 2]
        } else {
            vec![self.n_levels()]
        };
        d.push(self.n_fock);
        d
    }

    pub fn dim(&self) -> usize {
        self.n_levels() * self.n_fock
    }

    pub fn gate_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Full initial state vector ψ_qudit ⊗ |α₀⟩.
    pub fn initial_state(&self) -> Array1<C64> {
        let cav = coherent_amplitudes(self.alpha0, self.n_fock);
        let mut psi = Array1::zeros(self.dim());
        for (q, aq) in self.initial_qudit.iter().enumerate() {
            for (n, cn) in cav.iter().enumerate() {
                psi[q * self.n_fock + n] = aq * cn;
            }
        }
        psi
    }
}

/// Coherent-state amplitudes ⟨n|α⟩ up to the truncation (untruncated
/// normalization, so the vector's norm deficit measures truncation loss).
pub fn coherent_amplitudes(alpha: C64, n_fock: usize) -> Array1<C64> {
    let mut c = Array1::zeros(n_fock);
    c[0] = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..n_fock {
        c[n] = c[n - 1] * alpha / C64::new((n as f64).sqrt(), 0.0);
    }
    c
}

/// Truncated annihilation operator on the Fock factor.
pub fn annihilation(n_fock: usize) -> Operator {
    let mut a = Array2::zeros((n_fock, n_fock));
    for n in 1..n_fock {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::from_matrix(a).unwrap()
}

/// Joint qudit ⊗ cavity Hamiltonian.
///
/// Dispersive (frame rotating at the measurement tone): the qudit drive, the
/// level-dependent pulled cavity frequency `Δ_j a†a`, and the coherent drive
/// `ε(a† e^{iφ} + a e^{-iφ})`. Longitudinal (lab frame): `ω_c a†a`, the
/// level-diagonal displacement couplings `g_j (a + a†)`, and the drive.
pub fn build_hamiltonian(p: &FullSimParams) -> Result<Operator, FullSimError> {
    p.validate()?;
    let nf = p.n_fock;
    let levels = p.n_levels();
    let dims = p.dims();
    let d = p.dim();
    let mut h: Array2<C64> = Array2::zeros((d, d));

    // Qudit drive ⊗ identity.
    let drive = qudit_drive(levels, p.omega, p.phi_axis)?;
    for q in 0..levels {
        for r in 0..levels {
            let v = drive.entries()[[q, r]];
            if v != C64::new(0.0, 0.0) {
                for n in 0..nf {
                    h[[q * nf + n, r * nf + n]] += v;
                }
            }
        }
    }

    match &p.readout {
        ReadoutModel::Dispersive(dp) => {
            for q in 0..levels {
                let delta = dp.delta(q);
                for n in 0..nf {
                    h[[q * nf + n, q * nf + n]] += C64::new(delta * n as f64, 0.0);
                }
            }
            let eps_phase = C64::from_polar(dp.epsilon, dp.phi_drive);
            for q in 0..levels {
                for n in 1..nf {
                    let s = C64::new((n as f64).sqrt(), 0.0);
                    // ε e^{iφ} a† + ε e^{-iφ} a
                    h[[q * nf + n, q * nf + n - 1]] += eps_phase * s;
                    h[[q * nf + n - 1, q * nf + n]] += eps_phase.conj() * s;
                }
            }
        }
        ReadoutModel::Longitudinal { g, omega_c, .. } => {
            for q in 0..levels {
                for n in 0..nf {
                    h[[q * nf + n, q * nf + n]] += C64::new(omega_c * n as f64, 0.0);
                }
                let gq = C64::new(g[q], 0.0);
                for n in 1..nf {
                    let s = C64::new((n as f64).sqrt(), 0.0);
                    h[[q * nf + n, q * nf + n - 1]] += gq * s;
                    h[[q * nf + n - 1, q * nf + n]] += gq * s;
                }
            }
        }
    }
    Ok(Operator::new(dims, h)?)
}

/// Figures of merit sampled along the evolution. `xi_fe` and `concurrence`
/// are only defined on the gate layout and are `None` otherwise.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub t: f64,
    pub xi_fe: Option<f64>,
    pub concurrence: Option<f64>,
    pub pop: Vec<f64>,
    pub trace_defect: f64,
}

#[derive(Debug)]
pub struct FullSimOutput {
    pub rows: Vec<MetricsRow>,
    pub final_state: DensityMatrix,
    /// Largest top-Fock-level population observed at any grid time.
    pub top_fock_max: f64,
    /// Set when `top_fock_max` exceeds 1e-6, signalling that `n_fock` is too
    /// small for the requested drive.
    pub truncation_warning: bool,
}

struct CavityRhs {
    d: usize,
    nf: usize,
    kappa: f64,
    triplets: Vec<(usize, usize, C64)>,
    root: Vec<f64>,
}

impl CavityRhs {
    fn new(h: &Operator, nf: usize, kappa: f64) -> Self {
        let d = h.dim();
        let mut triplets = Vec::new();
        for ((i, j), v) in h.entries().indexed_iter() {
            if v.norm_sqr() > 0.0 {
                triplets.push((i, j, *v));
            }
        }
        let root: Vec<f64> = (0..=nf).map(|n| (n as f64).sqrt()).collect();
        Self {
            d,
            nf,
            kappa,
            triplets,
            root,
        }
    }

    fn apply(&self, y: &[C64], out: &mut [C64]) {
        let d = self.d;
        let nf = self.nf;
        for z in out.iter_mut() {
            *z = C64::new(0.0, 0.0);
        }
        let minus_i = C64::new(0.0, -1.0);
        let plus_i = C64::new(0.0, 1.0);
        for &(i, j, v) in &self.triplets {
            // -i (H ρ): row i accumulates row j of ρ.
            let w = minus_i * v;
            let src = &y[j * d..(j + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            for (o, s) in dst.iter_mut().zip(src.iter()) {
                *o += w * s;
            }
            // +i (ρ H): column j accumulates column i of ρ.
            let w = plus_i * v;
            for r in 0..d {
                out[r * d + j] += w * y[r * d + i];
            }
        }
        // Cavity loss: κ [a ρ a† - (n̂ρ + ρn̂)/2] with the cavity the fastest
        // index, so (q, n) ↦ flat q·nf + n and a ρ a† is a diagonal shift.
        let kappa = self.kappa;
        for r in 0..d {
            let nr = r % nf;
            let row = r * d;
            for c in 0..d {
                let nc = c % nf;
                let mut acc = C64::new(-0.5 * kappa * (nr + nc) as f64, 0.0) * y[row + c];
                if nr + 1 < nf && nc + 1 < nf {
                    let s = kappa * self.root[nr + 1] * self.root[nc + 1];
                    acc += C64::new(s, 0.0) * y[(r + 1) * d + c + 1];
                }
                out[row + c] += acc;
            }
        }
    }
}

fn tr_cavity_block(y: &[C64], nf: usize, levels: usize, j: usize, l: usize) -> C64 {
    let d = levels * nf;
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..nf {
        acc += y[(j * nf + n) * d + l * nf + n];
    }
    acc
}

fn metrics_from_flat(y: &[C64], t: f64, nf: usize, levels: usize) -> (MetricsRow, f64) {
    let d = levels * nf;
    let mut pop = vec![0.0; levels];
    let mut trace = C64::new(0.0, 0.0);
    for q in 0..levels {
        let p = tr_cavity_block(y, nf, levels, q, q);
        pop[q] = p.re;
        trace += p;
    }
    let mut top = 0.0;
    for q in 0..levels {
        top += y[(q * nf + nf - 1) * d + q * nf + nf - 1].re;
    }
    let (xi, conc) = if levels == 6 {
        let xi = 1.0 - 4.0 * pop[5];
        let mut block = Array2::zeros((4, 4));
        for j in 0..4 {
            for l in 0..4 {
                block[[j, l]] = tr_cavity_block(y, nf, levels, j, l);
            }
        }
        let c = concurrence(&block).unwrap_or(f64::NAN);
        (Some(xi), Some(c))
    } else {
        (None, None)
    };
    (
        MetricsRow {
            t,
            xi_fe: xi,
            concurrence: conc,
            pop,
            trace_defect: (trace.re - 1.0).abs(),
        },
        top,
    )
}

/// Propagate the joint system under the cavity-loss master equation and
/// sample the figures of merit at every grid time.
pub fn run_fullsim(
    p: &FullSimParams,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<FullSimOutput, FullSimError> {
    p.validate()?;
    let h = build_hamiltonian(p)?;
    let nf = p.n_fock;
    let levels = p.n_levels();
    let d = p.dim();
    let rhs = CavityRhs::new(&h, nf, p.readout.kappa());

    let psi0 = p.initial_state();
    let mut y0: Array1<C64> = Array1::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            y0[i * d + j] = psi0[i] * psi0[j].conj();
        }
    }

    let states = integrate_grid(
        y0,
        t_grid,
        cfg,
        |_t, y, dy| {
            rhs.apply(y.as_slice().unwrap(), dy.as_slice_mut().unwrap());
        },
        |y| crate::evolve::symmetrize_flat(y, d),
    )?;

    let mut rows = Vec::with_capacity(states.len());
    let mut top_max = 0.0_f64;
    for (k, y) in states.iter().enumerate() {
        let (row, top) = metrics_from_flat(y.as_slice().unwrap(), t_grid[k], nf, levels);
        top_max = top_max.max(top);
        rows.push(row);
    }

    let last = states.last().unwrap();
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            m[[i, j]] = last[i * d + j];
        }
    }
    let final_state = DensityMatrix::new(Operator::new(p.dims(), m)?, EVOLVE_POSITIVITY_TOL)?;
    Ok(FullSimOutput {
        rows,
        final_state,
        top_fock_max: top_max,
        truncation_warning: top_max > 1e-6,
    })
}

/// Subspace-retention figure of merit `1 - 4 ⟨fe| tr_cavity(ρ) |fe⟩` for the
/// standard equal-superposition input (the factor 4 is its initial |ee⟩
/// weight). The cavity is the last tensor factor.
pub fn xi_fe(rho: &DensityMatrix) -> Result<f64, FullSimError> {
    let nfac = rho.dims().len();
    let keep: Vec<usize> = (0..nfac - 1).collect();
    let reduced = partial_trace(rho.operator(), &keep)?;
    if reduced.dim() != 6 {
        return Err(FullSimError::NotGateLayout(reduced.dim()));
    }
    Ok(1.0 - 4.0 * reduced.entries()[[5, 5]].re)
}

/// Wootters concurrence of a two-qubit block in the ordering
/// (gg, ge, eg, ee). The block need not be normalized: the formula is
/// homogeneous of degree one, so trace lost to other levels directly lowers
/// the result.
pub fn concurrence(rho4: &Array2<C64>) -> Result<f64, FullSimError> {
    if rho4.nrows() != 4 || rho4.ncols() != 4 {
        return Err(FullSimError::BadConcurrenceInput { defect: f64::NAN });
    }
    let defect = linalg::hermiticity_defect(rho4);
    let scale = linalg::max_abs(rho4).max(1e-300);
    if defect > 1e-8 * scale.max(1.0) {
        return Err(FullSimError::BadConcurrenceInput { defect });
    }
    // σ_y ⊗ σ_y is the anti-diagonal (-1, 1, 1, -1) in this basis.
    let mut yy: Array2<C64> = Array2::zeros((4, 4));
    yy[[0, 3]] = C64::new(-1.0, 0.0);
    yy[[1, 2]] = C64::new(1.0, 0.0);
    yy[[2, 1]] = C64::new(1.0, 0.0);
    yy[[3, 0]] = C64::new(-1.0, 0.0);
    let spin_flipped = yy.dot(&rho4.mapv(|z| z.conj())).dot(&yy);
    let root = linalg::sqrtm_psd(rho4);
    let m = root.dot(&spin_flipped).dot(&root);
    let vals = linalg::eigvalsh(&m);
    // Rank cutoff before the square root: eigenvalue noise at 1e-16 would
    // otherwise inflate to 1e-8 in the λ's.
    let cutoff = 1e-14 * vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut lambdas: Vec<f64> = vals
        .iter()
        .map(|v| if *v <= cutoff { 0.0 } else { v.sqrt() })
        .collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Extract the unrenormalized computational block (gg, ge, eg, ee) of a
/// 6-level qudit state.
pub fn computational_block(rho_qudit: &Array2<C64>) -> Array2<C64> {
    let mut block = Array2::zeros((4, 4));
    for j in 0..4 {
        for l in 0..4 {
            block[[j, l]] = rho_qudit[[j, l]];
        }
    }
    block
}

/// Phase-space grid specification for the Husimi portrait.
#[derive(Debug, Clone, Copy)]
pub struct HusimiGridSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub resolution: usize,
}

#[derive(Debug, Clone)]
pub struct HusimiGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// `values[[ix, ip]] = Q(x[ix] + i p[ip])`.
    pub values: Array2<f64>,
    /// False where |α|² exceeds half the truncation, i.e. where the finite
    /// Fock space cannot faithfully represent the probe state.
    pub reliable: Array2<bool>,
}

impl HusimiGrid {
    /// Location of the largest value (x, p).
    pub fn peak(&self) -> (f64, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for ((i, j), v) in self.values.indexed_iter() {
            if *v > best.2 {
                best = (i, j, *v);
            }
        }
        (self.x[best.0], self.p[best.1])
    }

    /// Grid spacing along each axis.
    pub fn cell(&self) -> (f64, f64) {
        let dx = if self.x.len() > 1 {
            self.x[1] - self.x[0]
        } else {
            0.0
        };
        let dp = if self.p.len() > 1 {
            self.p[1] - self.p[0]
        } else {
            0.0
        };
        (dx, dp)
    }
}

/// Husimi function `Q(α) = ⟨α|ρ|α⟩/π` of a cavity state over a phase-space
/// grid (α = X + iP).
pub fn husimi_q(rho_cavity: &Operator, grid: &HusimiGridSpec) -> HusimiGrid {
    let nf = rho_cavity.dim();
    let res = grid.resolution;
    let lin = |range: (f64, f64)| -> Vec<f64> {
        (0..res)
            .map(|k| range.0 + (range.1 - range.0) * k as f64 / (res - 1).max(1) as f64)
            .collect()
    };
    let xs = lin(grid.x_range);
    let ps = lin(grid.p_range);
    let mut values = Array2::zeros((res, res));
    let mut reliable = Array2::from_elem((res, res), true);
    let rho = rho_cavity.entries();
    for (ix, &x) in xs.iter().enumerate() {
        for (ip, &p) in ps.iter().enumerate() {
            let alpha = C64::new(x, p);
            let c = coherent_amplitudes(alpha, nf);
            let mut q = C64::new(0.0, 0.0);
            for n in 0..nf {
                let mut row = C64::new(0.0, 0.0);
                for m in 0..nf {
                    row += rho[[n, m]] * c[m];
                }
                q += c[n].conj() * row;
            }
            let mut v = q.re / std::f64::consts::PI;
            if v < 0.0 && v > -1e-12 {
                v = 0.0;
            }
            values[[ix, ip]] = v;
            if alpha.norm_sqr() > nf as f64 / 2.0 {
                reliable[[ix, ip]] = false;
            }
        }
    }
    HusimiGrid {
        x: xs,
        p: ps,
        values,
        reliable,
    }
}

/// Figures of merit that [`fock_convergence`] can track.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeritKind {
    /// Ξ^(fe) halfway through the gate.
    SubspaceRetentionHalf,
    /// Ξ^(fe) at the end of the run.
    SubspaceRetentionFinal,
    /// Concurrence of the computational block at the end of the run.
    ConcurrenceFinal,
}

fn merit_values(
    p: &FullSimParams,
    n_fock: usize,
    merits: &[MeritKind],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, FullSimError> {
    let mut trial = p.clone();
    trial.n_fock = n_fock;
    let grid = [0.0, 0.5 * p.t_final, p.t_final];
    let out = run_fullsim(&trial, &grid, cfg)?;
    merits
        .iter()
        .map(|m| {
            let v = match m {
                MeritKind::SubspaceRetentionHalf => out.rows[1].xi_fe,
                MeritKind::SubspaceRetentionFinal => out.rows[2].xi_fe,
                MeritKind::ConcurrenceFinal => out.rows[2].concurrence,
            };
            v.ok_or(FullSimError::NotGateLayout(p.n_levels()))
        })
        .collect()
}

/// Smallest truncation `n` such that every requested metric moves by less
/// than 1e-3 between `n` and `n + dn`. Scans upward from a minimal space.
pub fn fock_convergence(
    p: &FullSimParams,
    merits: &[MeritKind],
    dn: usize,
    ceiling: usize,
    cfg: &IntegratorConfig,
) -> Result<usize, FullSimError> {
    assert!(dn >= 1, "step must be at least 1");
    let mut n = 2;
    let mut current = merit_values(p, n, merits, cfg)?;
    while n + dn <= ceiling {
        let next = merit_values(p, n + dn, merits, cfg)?;
        let converged = current
            .iter()
            .zip(next.iter())
            .all(|(a, b)| (a - b).abs() < 1e-3);
        if converged {
            return Ok(n);
        }
        n += dn;
        current = next;
    }
    Err(FullSimError::NonConvergence { ceiling })
}
