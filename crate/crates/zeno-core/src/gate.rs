//! Ideal gate construction for the qutrit ⊗ (N−1)-qubit system: the
//! excitation-number projector, the driven-transition Hamiltonian, its
//! measurement-projected form, and the closed-form gate unitary.
//!
//! Basis layout: the qutrit (levels g, e, f = 0, 1, 2) is the leftmost,
//! slowest tensor factor; qubits follow with qubit 2 slowest among them. The
//! blocked state |f e…e⟩ is therefore the last basis vector.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::operator::{tensor, Operator};

#[derive(Debug, Error)]
pub enum GateError {
    #[error("need at least 2 logical qubits, got {0}")]
    TooFewQubits(usize),
    #[error("Rabi rate must be positive, got {0}")]
    NonPositiveOmega(f64),
    #[error("axis angle {0} outside [0, π]")]
    AxisOutOfRange(f64),
}

/// Parameters of the N-qubit gate: one logical qubit lives on the qutrit's
/// {g, e} levels, the remaining N−1 on physical qubits.
#[derive(Debug, Clone, Copy)]
pub struct ZenoSystemSpec {
    n_qubits: usize,
    omega: f64,
    phi_axis: f64,
}

impl ZenoSystemSpec {
    pub fn new(n_qubits: usize, omega: f64, phi_axis: f64) -> Result<Self, GateError> {
        if n_qubits < 2 {
            return Err(GateError::TooFewQubits(n_qubits));
        }
        if omega <= 0.0 {
            return Err(GateError::NonPositiveOmega(omega));
        }
        if !(0.0..=std::f64::consts::PI).contains(&phi_axis) {
            return Err(GateError::AxisOutOfRange(phi_axis));
        }
        Ok(Self {
            n_qubits,
            omega,
            phi_axis,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn phi_axis(&self) -> f64 {
        self.phi_axis
    }

    /// Gate duration, one full period of the driven rotation.
    pub fn gate_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Tensor factor dimensions [3, 2, …, 2].
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![3];
        d.extend(std::iter::repeat(2).take(self.n_qubits - 1));
        d
    }

    /// Total physical dimension 3·2^{N−1}.
    pub fn dim(&self) -> usize {
        3 * (1 << (self.n_qubits - 1))
    }

    /// Number of joint qubit configurations, 2^{N−1}.
    pub fn qubit_configs(&self) -> usize {
        1 << (self.n_qubits - 1)
    }

    /// Index of |f e…e⟩, the blocked state.
    pub fn blocked_index(&self) -> usize {
        self.dim() - 1
    }

    /// Index of the basis state with qutrit level `q` and qubit bits `x`.
    pub fn basis_index(&self, qutrit: usize, x: usize) -> usize {
        qutrit * self.qubit_configs() + x
    }
}

/// Projector 1 − |f e…e⟩⟨f e…e| onto "not all excitations at once".
pub fn projector_n(spec: &ZenoSystemSpec) -> Operator {
    let mut op = Operator::identity(&spec.dims());
    let b = spec.blocked_index();
    op.entries_mut()[[b, b]] = C64::new(0.0, 0.0);
    op
}

/// Qutrit e↔f drive about the axis tilted by `phi_axis`, acting trivially on
/// every qubit. Hermitian with eigenvalues {0, ±Ω/2}.
pub fn rabi_hamiltonian(spec: &ZenoSystemSpec) -> Operator {
    let omega = spec.omega;
    let (sin_phi, cos_phi) = spec.phi_axis.sin_cos();
    let mut q = Array2::zeros((3, 3));
    // (iΩ/2)(|e><f| - |f><e|) sinφ + (Ω/2)(|e><e| - |f><f|) cosφ
    q[[1, 2]] = C64::new(0.0, 0.5 * omega * sin_phi);
    q[[2, 1]] = C64::new(0.0, -0.5 * omega * sin_phi);
    q[[1, 1]] = C64::new(0.5 * omega * cos_phi, 0.0);
    q[[2, 2]] = C64::new(-0.5 * omega * cos_phi, 0.0);
    let qutrit = Operator::from_matrix(q).unwrap();
    let mut factors: Vec<Operator> = vec![qutrit];
    for _ in 1..spec.n_qubits {
        factors.push(Operator::identity(&[2]));
    }
    let refs: Vec<&Operator> = factors.iter().collect();
    tensor(&refs).unwrap()
}

/// Measurement-projected Hamiltonian P̂ Ĥ P̂.
pub fn zeno_hamiltonian(spec: &ZenoSystemSpec) -> Operator {
    let p = projector_n(spec);
    let h = rabi_hamiltonian(spec);
    p.matmul(&h).unwrap().matmul(&p).unwrap()
}

/// Closed-form gate unitary at time `t`.
///
/// Each coupled pair (|e x⟩, |f x⟩) with x ≠ e…e rotates as a two-level
/// system; the phase convention removes the axis-tilt precession so that
/// |e e…e⟩ (whose transition is blocked) carries no phase and a full period
/// imparts exactly θ = π(cosφ + 1) to the driven kets. The field is the
/// one-parameter group generated by the projected Hamiltonian minus the
/// commuting diagonal (Ω cosφ/2) term on the driven subspace.
pub fn ideal_unitary(spec: &ZenoSystemSpec, t: f64) -> Operator {
    assert!(t >= 0.0, "gate time must be non-negative");
    let d = spec.dim();
    let nq = spec.qubit_configs();
    let (sin_phi, cos_phi) = spec.phi_axis.sin_cos();
    let half = 0.5 * spec.omega * t;
    let (sin_t, cos_t) = half.sin_cos();
    // Frame phase e^{+i t Ω cosφ / 2} applied on the driven blocks.
    let frame = C64::from_polar(1.0, 0.5 * spec.omega * t * cos_phi);

    let mut u: Array2<C64> = Array2::eye(d);
    let all_e = nq - 1;
    for x in 0..nq {
        if x == all_e {
            continue;
        }
        let ie = spec.basis_index(1, x);
        let if_ = spec.basis_index(2, x);
        // exp(-i t B) with B = (Ω/2)(cosφ σ_z − sinφ σ_y) in the (e, f) pair.
        u[[ie, ie]] = frame * C64::new(cos_t, -sin_t * cos_phi);
        u[[if_, if_]] = frame * C64::new(cos_t, sin_t * cos_phi);
        u[[ie, if_]] = frame * C64::new(sin_t * sin_phi, 0.0);
        u[[if_, ie]] = frame * C64::new(-sin_t * sin_phi, 0.0);
    }
    Operator::new(spec.dims(), u).unwrap()
}

/// Generator of [`ideal_unitary`]: the projected Hamiltonian with the
/// commuting diagonal axis-tilt term subtracted on the driven subspace.
/// `ideal_unitary(spec, t)` equals `exp(-i t G)` for this G exactly.
pub fn ideal_generator(spec: &ZenoSystemSpec) -> Operator {
    let mut g = zeno_hamiltonian(spec);
    let c = 0.5 * spec.omega * spec.phi_axis.cos();
    let nq = spec.qubit_configs();
    let all_e = nq - 1;
    for x in 0..nq {
        if x == all_e {
            let ie = spec.basis_index(1, x);
            g.entries_mut()[[ie, ie]] -= C64::new(c, 0.0);
        } else {
            let ie = spec.basis_index(1, x);
            let if_ = spec.basis_index(2, x);
            g.entries_mut()[[ie, ie]] -= C64::new(c, 0.0);
            g.entries_mut()[[if_, if_]] -= C64::new(c, 0.0);
        }
    }
    g
}

/// The N-body controlled-phase target on the 2^N computational subspace
/// (dims [2; N], basis g/e per logical qubit, qutrit qubit first).
///
/// Composes the measured full-period gate with a second, unmeasured
/// full-period rotation about the mirrored axis (π − φ); the driven-ket
/// phases cancel everywhere except on |e e…e⟩, which acquires π(1 − cosφ).
pub fn ncphase_target(spec: &ZenoSystemSpec) -> Operator {
    let tg = spec.gate_time();
    let u1 = ideal_unitary(spec, tg);

    // Second rotation: unmeasured, mirrored axis, same frame convention on
    // every (e, f) pair. At one full period it is diagonal.
    let phi2 = std::f64::consts::PI - spec.phi_axis;
    let phase2 = C64::from_polar(1.0, std::f64::consts::PI * (1.0 + phi2.cos()));
    let d = spec.dim();
    let nq = spec.qubit_configs();
    let mut u2: Array2<C64> = Array2::eye(d);
    for x in 0..nq {
        let ie = spec.basis_index(1, x);
        let if_ = spec.basis_index(2, x);
        u2[[ie, ie]] = phase2;
        u2[[if_, if_]] = phase2;
    }
    let u = u1.entries().dot(&u2);

    let dc = 1 << spec.n_qubits;
    let mut comp = Array2::zeros((dc, dc));
    for i in 0..dc {
        for j in 0..dc {
            comp[[i, j]] = u[[i, j]];
        }
    }
    Operator::new(vec![2; spec.n_qubits], comp).unwrap()
}
