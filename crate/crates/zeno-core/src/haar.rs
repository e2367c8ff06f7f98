//! Haar-random state sampling, Monte-Carlo fidelity averages, the
//! operator-basis average-fidelity formula, and the closed-form dephasing
//! fidelity surface for the slow-gate readout regime.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

use crate::dispersive::{steady_rates_slow_markov, DispersiveParams};
use crate::finite_meas::{fidelity_herald_from_population, leakage_probability};
use crate::operator::Operator;

#[derive(Debug, Error)]
pub enum HaarError {
    #[error("need n_samples ≥ 1 and dim ≥ 2, got {n_samples} samples of dim {dim}")]
    BadConfig { n_samples: usize, dim: usize },
    #[error("no built-in operator basis for dimension {0}; supply one")]
    BasisUnavailable(usize),
    #[error("target must be square, got {rows}x{cols}")]
    NonSquareTarget { rows: usize, cols: usize },
}

/// Sampling configuration; `seed` fully determines the stream.
#[derive(Debug, Clone, Copy)]
pub struct HaarConfig {
    pub dim: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl HaarConfig {
    pub fn new(dim: usize, n_samples: usize, seed: u64) -> Result<Self, HaarError> {
        if n_samples == 0 || dim < 2 {
            return Err(HaarError::BadConfig { n_samples, dim });
        }
        Ok(Self {
            dim,
            n_samples,
            seed,
        })
    }

    /// Derived configuration for an independent grid cell, seeded as
    /// `seed ⊕ cell index` so sweep cells decouple deterministically.
    pub fn for_cell(&self, index: usize) -> Self {
        Self {
            seed: self.seed ^ index as u64,
            ..*self
        }
    }
}

/// Unit vectors drawn from the rotation-invariant measure: 2·dim standard
/// normals per sample, assembled as (a_k + i b_k) and normalized.
pub fn sample_haar_states(cfg: &HaarConfig) -> Vec<Array1<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_samples)
        .map(|_| {
            let mut v: Array1<C64> = Array1::zeros(cfg.dim);
            for z in v.iter_mut() {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                *z = C64::new(a, b);
            }
            let r = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.mapv_into(|z| z / C64::new(r, 0.0))
        })
        .collect()
}

/// Monte-Carlo mean and standard error of `f` over Haar samples.
pub fn average_fidelity_mc<F>(f: F, cfg: &HaarConfig) -> (f64, f64)
where
    F: Fn(&Array1<C64>) -> f64 + Sync,
{
    let samples = sample_haar_states(cfg);
    let values: Vec<f64> = samples.par_iter().map(|psi| f(psi)).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn pauli_matrices() -> [Array2<C64>; 4] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut s = std::array::from_fn(|_| Array2::from_elem((2, 2), z));
    s[0][[0, 0]] = o;
    s[0][[1, 1]] = o;
    s[1][[0, 1]] = o;
    s[1][[1, 0]] = o;
    s[2][[0, 1]] = -i;
    s[2][[1, 0]] = i;
    s[3][[0, 0]] = o;
    s[3][[1, 1]] = -o;
    s
}

/// The 16 two-qubit Pauli products, an orthogonal unitary operator basis
/// with tr[U_i U_j†] = 4 δ_ij.
pub fn pauli_two_qubit_basis() -> Vec<Array2<C64>> {
    let p = pauli_matrices();
    let mut basis = Vec::with_capacity(16);
    for a in &p {
        for b in &p {
            basis.push(crate::linalg::kron(a, b));
        }
    }
    basis
}

/// Average fidelity between the unitary `target` and a linear channel,
/// `(Σ_i tr[U U_i† U† ℰ(U_i)] + d²) / (d²(d+1))`, evaluated over an
/// orthogonal unitary operator basis.
pub fn nielsen_average_fidelity_with_basis<E>(
    channel: E,
    target: &Operator,
    basis: &[Array2<C64>],
) -> f64
where
    E: Fn(&Array2<C64>) -> Array2<C64>,
{
    let d = target.dim() as f64;
    let u = target.entries();
    let udag = crate::linalg::dagger(u);
    let mut acc = C64::new(0.0, 0.0);
    for ui in basis {
        let mapped = channel(ui);
        let w = u.dot(&crate::linalg::dagger(ui)).dot(&udag).dot(&mapped);
        acc += w.diag().iter().sum::<C64>();
    }
    (acc.re + d * d) / (d * d * (d + 1.0))
}

/// [`nielsen_average_fidelity_with_basis`] using the built-in two-qubit
/// Pauli basis (targets of dimension 4).
pub fn nielsen_average_fidelity<E>(channel: E, target: &Operator) -> Result<f64, HaarError>
where
    E: Fn(&Array2<C64>) -> Array2<C64>,
{
    let entries = target.entries();
    if entries.nrows() != entries.ncols() {
        return Err(HaarError::NonSquareTarget {
            rows: entries.nrows(),
            cols: entries.ncols(),
        });
    }
    if target.dim() != 4 {
        return Err(HaarError::BasisUnavailable(target.dim()));
    }
    let basis = pauli_two_qubit_basis();
    Ok(nielsen_average_fidelity_with_basis(channel, target, &basis))
}

/// Closed-form average fidelity retained under readout-induced dephasing and
/// phase rotations inside the computational subspace, as a function of
/// `X = Δχ/κ` and `Y = Γ/Ω`:
///
/// `1/2 + (1/10) e^{-πY/9X²} cos(πY/3X) + (1/5) e^{-πY/16X²} cos(πY/4X)
///      + (1/5) e^{-πY/144X²} cos(πY/12X)`.
pub fn fbar_chi(x: f64, y: f64) -> f64 {
    assert!(x > 0.0 && y >= 0.0, "need X > 0 and Y ≥ 0");
    let x2 = x * x;
    0.5 + 0.1 * (-PI * y / (9.0 * x2)).exp() * (PI * y / (3.0 * x)).cos()
        + 0.2 * (-PI * y / (16.0 * x2)).exp() * (PI * y / (4.0 * x)).cos()
        + 0.2 * (-PI * y / (144.0 * x2)).exp() * (PI * y / (12.0 * x)).cos()
}

/// Exponent convention for the per-coherence decay factors
/// `e^{(iΥ - Γ) t s}`: the Bloch-equation reduction fixes `s = 1`
/// ([`RateConvention::FullRate`]); the closed-form surface [`fbar_chi`] is
/// reproduced exactly by `s = 1/2` ([`RateConvention::HalfRate`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateConvention {
    FullRate,
    HalfRate,
}

impl RateConvention {
    fn scale(self) -> f64 {
        match self {
            RateConvention::FullRate => 1.0,
            RateConvention::HalfRate => 0.5,
        }
    }
}

/// Slow-gate readout parameters realizing given `X = Δχ/κ`, `Y = Γ/Ω` with
/// dispersive shifts proportional to excitation number and the measurement
/// tone resonant with the blocked level. Working units: κ = 1, Ω = 1.
pub fn slow_markov_params(x: f64, y: f64) -> DispersiveParams {
    let kappa = 1.0;
    let dchi = x * kappa;
    let chi = [0.0, dchi, dchi, 2.0 * dchi, 2.0 * dchi, 3.0 * dchi];
    // Blocking rate 2ε²/κ = Γ fixes the drive power; Γ/Ω = Y with Ω = 1.
    let epsilon = (y * kappa / 2.0).sqrt();
    DispersiveParams::gate_levels(chi, kappa, epsilon, -chi[5]).unwrap()
}

/// Per-coherence decay/rotation factors over one gate period for the
/// computational-subspace block {gg, ge, eg, ee}, built from the slow-gate
/// rate approximations.
pub fn sz_dephasing_factors(x: f64, y: f64, convention: RateConvention) -> Array2<C64> {
    let p = slow_markov_params(x, y);
    let table = steady_rates_slow_markov(&p);
    let t_gate = 2.0 * PI; // Ω = 1 in working units
    let s = convention.scale();
    let mut m = Array2::from_elem((4, 4), C64::new(1.0, 0.0));
    for j in 0..4 {
        for l in 0..4 {
            if j == l {
                continue;
            }
            let arg = C64::new(-table.gamma[[j, l]], table.upsilon[[j, l]]);
            m[[j, l]] = (arg * C64::new(t_gate * s, 0.0)).exp();
        }
    }
    m
}

/// The dephasing/rotation channel as a linear map on 4×4 matrices.
pub fn sz_dephasing_channel(
    x: f64,
    y: f64,
    convention: RateConvention,
) -> impl Fn(&Array2<C64>) -> Array2<C64> {
    let factors = sz_dephasing_factors(x, y, convention);
    move |m: &Array2<C64>| {
        let mut out = m.clone();
        for j in 0..4 {
            for l in 0..4 {
                out[[j, l]] *= factors[[j, l]];
            }
        }
        out
    }
}

/// Fidelity surface over a (Δχ/κ, Γ/Ω) grid; `values[[iy, ix]]` corresponds
/// to `(x_axis[ix], y_axis[iy])`.
#[derive(Debug, Clone)]
pub struct FidelitySurface {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    pub values: Array2<f64>,
    pub heralded: bool,
}

/// Combined gate fidelity surfaces: the dephasing factor [`fbar_chi`] times
/// the heralded fidelity, and additionally times the first-order
/// finite-measurement fidelity for the unheralded case. Equal-superposition
/// input (|ψ_ee|² = 1/4) throughout.
pub fn combined_fidelity_surface(
    x_axis: Vec<f64>,
    y_axis: Vec<f64>,
    heralded: bool,
) -> FidelitySurface {
    assert!(
        x_axis.windows(2).all(|w| w[1] > w[0]) && y_axis.windows(2).all(|w| w[1] > w[0]),
        "grids must be strictly increasing"
    );
    let mut values = Array2::zeros((y_axis.len(), x_axis.len()));
    for (iy, &y) in y_axis.iter().enumerate() {
        // Finite-measurement factors depend only on Γ/Ω.
        let herald = fidelity_herald_from_population(0.25, y, 1.0, false);
        let first_order = 1.0 - 0.25 * leakage_probability(y, 1.0, false);
        for (ix, &x) in x_axis.iter().enumerate() {
            let mut f = fbar_chi(x, y) * herald;
            if !heralded {
                f *= first_order;
            }
            values[[iy, ix]] = f;
        }
    }
    FidelitySurface {
        x_axis,
        y_axis,
        values,
        heralded,
    }
}
