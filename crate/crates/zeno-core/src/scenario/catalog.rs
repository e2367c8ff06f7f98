//! The scenario catalog: named parameter studies, each keyed to one figure
//! of merit family, with declarative key schemas and a runner that produces
//! result tables.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::units::Kind;
use super::{Resolved, ScenarioError};
use crate::dispersive::{
    alpha_steady, alpha_trajectory, ca_evolve_readout, rates, steady_rates, CaFlags,
    DispersiveParams, ReadoutModel,
};
use crate::evolve::IntegratorConfig;
use crate::finite_meas::{
    fidelity_first_order, fidelity_herald, fidelity_herald_from_population,
    fidelity_second_order, unheralded_fidelity_sim, FiniteGammaParams,
};
use crate::fullsim::{
    computational_block, fock_convergence, husimi_q, run_fullsim, FullSimParams, HusimiGridSpec,
    MeritKind,
};
use crate::haar::{average_fidelity_mc, combined_fidelity_surface, HaarConfig};
use crate::operator::{partial_trace, DensityMatrix};
use crate::scenario::table::ResultTable;

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    /// Default value in config syntax (so it goes through the same parsing
    /// as user input); `None` makes the key required.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub struct ScenarioDef {
    pub name: &'static str,
    pub summary: &'static str,
    pub keys: &'static [KeySpec],
    pub runner: fn(&Resolved) -> Result<Vec<ResultTable>, ScenarioError>,
}

const fn key(
    name: &'static str,
    kind: Kind,
    default: Option<&'static str>,
    help: &'static str,
) -> KeySpec {
    KeySpec {
        name,
        kind,
        default,
        help,
    }
}

const CHI_KEYS: [KeySpec; 6] = [
    key("chi_gg", Kind::Frequency, Some("0 MHz"), "dispersive shift of gg"),
    key("chi_ge", Kind::Frequency, Some("4 MHz"), "dispersive shift of ge"),
    key("chi_eg", Kind::Frequency, Some("4 MHz"), "dispersive shift of eg"),
    key("chi_ee", Kind::Frequency, Some("9 MHz"), "dispersive shift of ee"),
    key("chi_fg", Kind::Frequency, Some("9 MHz"), "dispersive shift of fg"),
    key("chi_fe", Kind::Frequency, Some("15 MHz"), "dispersive shift of fe"),
];

fn chi_array(r: &Resolved) -> [f64; 6] {
    [
        r.value("chi_gg"),
        r.value("chi_ge"),
        r.value("chi_eg"),
        r.value("chi_ee"),
        r.value("chi_fg"),
        r.value("chi_fe"),
    ]
}

pub fn catalog() -> &'static [ScenarioDef] {
    &CATALOG
}

pub fn find(name: &str) -> Option<&'static ScenarioDef> {
    CATALOG.iter().find(|d| d.name == name)
}

static CATALOG: [ScenarioDef; 9] = [
    ScenarioDef {
        name: "fig3",
        summary: "closed-form and exact gate fidelities vs measurement-to-drive ratio",
        keys: &[
            key("ratio_min", Kind::Dimensionless, Some("1"), "smallest Γ/Ω"),
            key("ratio_max", Kind::Dimensionless, Some("10000"), "largest Γ/Ω"),
            key("points", Kind::Count, Some("61"), "log-grid size"),
        ],
        runner: run_fig3,
    },
    ScenarioDef {
        name: "fig4",
        summary: "steady measurement strength vs drive frequency, and ring-up from vacuum",
        keys: &[
            CHI_KEYS[0], CHI_KEYS[1], CHI_KEYS[2], CHI_KEYS[3], CHI_KEYS[4], CHI_KEYS[5],
            key("kappa_a", Kind::Frequency, Some("2 MHz"), "first cavity linewidth"),
            key("kappa_b", Kind::Frequency, Some("0.2 MHz"), "second cavity linewidth"),
            key("epsilon", Kind::Frequency, Some("1 MHz"), "measurement tone amplitude"),
            key("scan_halfwidth", Kind::Frequency, Some("20 MHz"), "drive-frequency scan half-width"),
            key("scan_points", Kind::Count, Some("401"), "scan grid size"),
            key("ringup_t_final", Kind::Time, Some("4 us"), "ring-up duration"),
            key("ringup_points", Kind::Count, Some("201"), "ring-up grid size"),
        ],
        runner: run_fig4,
    },
    ScenarioDef {
        name: "fig5",
        summary: "combined average-fidelity surfaces over (Δχ/κ, Γ/Ω)",
        keys: &[
            key("x_min", Kind::Dimensionless, Some("5"), "smallest Δχ/κ"),
            key("x_max", Kind::Dimensionless, Some("50"), "largest Δχ/κ"),
            key("x_points", Kind::Count, Some("46"), "Δχ/κ grid size (linear)"),
            key("y_min", Kind::Dimensionless, Some("1"), "smallest Γ/Ω"),
            key("y_max", Kind::Dimensionless, Some("1000"), "largest Γ/Ω"),
            key("y_points", Kind::Count, Some("61"), "Γ/Ω grid size (log)"),
        ],
        runner: run_fig5,
    },
    ScenarioDef {
        name: "fig6",
        summary: "gate merits vs drive amplitude, idealized single-shift readout",
        keys: &[
            key("chi_gg", Kind::Frequency, Some("0 MHz"), "dispersive shift of gg"),
            key("chi_ge", Kind::Frequency, Some("0 MHz"), "dispersive shift of ge"),
            key("chi_eg", Kind::Frequency, Some("0 MHz"), "dispersive shift of eg"),
            key("chi_ee", Kind::Frequency, Some("0 MHz"), "dispersive shift of ee"),
            key("chi_fg", Kind::Frequency, Some("0 MHz"), "dispersive shift of fg"),
            CHI_KEYS[5],
            key("delta_ce", Kind::Frequency, Some("-15 MHz"), "drive detuning ω_c - ω_ε"),
            key("omega", Kind::Frequency, Some("1 MHz"), "Rabi rate"),
            key("kappa", Kind::Frequency, Some("5 MHz"), "cavity linewidth (sweepable)"),
            key("epsilon", Kind::Frequency, Some("2 MHz"), "tone amplitude (sweepable)"),
            key("n_fock", Kind::Count, Some("50"), "Fock truncation (or ceiling)"),
            key("fock_step", Kind::Count, Some("0"), "certify truncation with this step (0 = off)"),
        ],
        runner: run_gate_merits,
    },
    ScenarioDef {
        name: "fig7",
        summary: "gate merits vs drive amplitude, realistic shifts, 1 µs gate",
        keys: &[
            CHI_KEYS[0], CHI_KEYS[1], CHI_KEYS[2], CHI_KEYS[3], CHI_KEYS[4], CHI_KEYS[5],
            key("delta_ce", Kind::Frequency, Some("-15 MHz"), "drive detuning ω_c - ω_ε"),
            key("omega", Kind::Frequency, Some("1 MHz"), "Rabi rate"),
            key("kappa", Kind::Frequency, Some("5 MHz"), "cavity linewidth (sweepable)"),
            key("epsilon", Kind::Frequency, Some("2 MHz"), "tone amplitude (sweepable)"),
            key("n_fock", Kind::Count, Some("80"), "Fock truncation (or ceiling)"),
            key("fock_step", Kind::Count, Some("0"), "certify truncation with this step (0 = off)"),
        ],
        runner: run_gate_merits,
    },
    ScenarioDef {
        name: "fig8",
        summary: "gate merits vs drive amplitude, realistic shifts, 10 µs gate",
        keys: &[
            CHI_KEYS[0], CHI_KEYS[1], CHI_KEYS[2], CHI_KEYS[3], CHI_KEYS[4], CHI_KEYS[5],
            key("delta_ce", Kind::Frequency, Some("-15 MHz"), "drive detuning ω_c - ω_ε"),
            key("omega", Kind::Frequency, Some("0.1 MHz"), "Rabi rate"),
            key("kappa", Kind::Frequency, Some("2 MHz"), "cavity linewidth (sweepable)"),
            key("epsilon", Kind::Frequency, Some("0.5 MHz"), "tone amplitude (sweepable)"),
            key("n_fock", Kind::Count, Some("60"), "Fock truncation (or ceiling)"),
            key("fock_step", Kind::Count, Some("0"), "certify truncation with this step (0 = off)"),
        ],
        runner: run_gate_merits,
    },
    ScenarioDef {
        name: "fig9",
        summary: "longitudinal-readout gate merits over coupling and linewidth",
        keys: &[
            key("omega", Kind::Frequency, Some("10 MHz"), "Rabi rate"),
            key("omega_c", Kind::Frequency, Some("1 GHz"), "cavity frequency"),
            key("g", Kind::Frequency, Some("300 MHz"), "coupling magnitude (sweepable)"),
            key("kappa", Kind::Frequency, Some("500 MHz"), "cavity linewidth (sweepable)"),
            key("n_fock", Kind::Count, Some("12"), "Fock truncation (or ceiling)"),
            key("fock_step", Kind::Count, Some("0"), "certify truncation with this step (0 = off)"),
        ],
        runner: run_fig9,
    },
    ScenarioDef {
        name: "fig10",
        summary: "cavity Husimi portraits across drive and linewidth",
        keys: &[
            key("epsilon", Kind::Frequency, Some("2 MHz"), "measurement tone amplitude"),
            key("chi_split", Kind::Frequency, Some("2 MHz"), "qubit shift ±χ"),
            key("omega", Kind::Frequency, Some("0 MHz"), "Rabi rate (sweepable)"),
            key("kappa", Kind::Frequency, Some("10 MHz"), "cavity linewidth (sweepable)"),
            key("t_final", Kind::Time, Some("5 us"), "evolution time"),
            key("n_fock", Kind::Count, Some("30"), "Fock truncation"),
            key("resolution", Kind::Count, Some("161"), "grid points per axis"),
            key("phase_halfwidth", Kind::Dimensionless, Some("8"), "grid extent ±X, ±P"),
        ],
        runner: run_fig10,
    },
    ScenarioDef {
        name: "fig11",
        summary: "Haar-averaged heralded fidelity vs the fixed-state reference",
        keys: &[
            key("ratio_min", Kind::Dimensionless, Some("1"), "smallest Γ/Ω"),
            key("ratio_max", Kind::Dimensionless, Some("1000"), "largest Γ/Ω"),
            key("points", Kind::Count, Some("31"), "log-grid size"),
            key("n_samples", Kind::Count, Some("20000"), "Haar samples per point"),
        ],
        runner: run_fig11,
    },
];

pub fn log_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && n >= 2);
    let (l0, l1) = (min.log10(), max.log10());
    (0..n)
        .map(|k| 10f64.powf(l0 + (l1 - l0) * k as f64 / (n - 1) as f64))
        .collect()
}

pub fn lin_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    assert!(max > min && n >= 2);
    (0..n)
        .map(|k| min + (max - min) * k as f64 / (n - 1) as f64)
        .collect()
}

fn run_fig3(r: &Resolved) -> Result<Vec<ResultTable>, ScenarioError> {
    let grid = log_grid(r.value("ratio_min"), r.value("ratio_max"), r.count("points"));
    let cfg = IntegratorConfig::default();
    let rows: Result<Vec<Vec<f64>>, ScenarioError> = grid
        .par_iter()
        .map(|&y| {
            let p = FiniteGammaParams::equal_superposition(y, 1.0)
                .map_err(|e| ScenarioError::Run(e.to_string()))?;
            let f_exact = unheralded_fidelity_sim(&p, &cfg, false)
                .map_err(|e| ScenarioError::Run(e.to_string()))?;
            Ok(vec![
                y,
                f_exact,
                fidelity_first_order(&p),
                fidelity_herald(&p, true),
                fidelity_herald(&p, false),
                fidelity_second_order(&p),
            ])
        })
        .collect();
    let mut t = ResultTable::new(
        "fidelities",
        &[
            ("gamma_over_omega", "1"),
            ("f_exact", "1"),
            ("f_first_order", "1"),
            ("f_herald_exact", "1"),
            ("f_herald_approx", "1"),
            ("f_second_order", "1"),
        ],
    );
    for row in rows? {
        t.push(row);
    }
    Ok(vec![t])
}

fn run_fig4(r: &Resolved) -> Result<Vec<ResultTable>, ScenarioError> {
    let chi = chi_array(r);
    let epsilon = r.value("epsilon");
    let kappas = [r.value("kappa_a"), r.value("kappa_b")];
    let halfwidth = r.value("scan_halfwidth");
    let n_scan = r.count("scan_points");

    let mut spectrum = ResultTable::new(
        "spectrum",
        &[
            ("kappa", "1/us"),
            ("delta_eps", "rad/us"),
            ("gamma_fe_gg", "1/us"),
            ("gamma_sz_max", "1/us"),
        ],
    );
    for &kappa in &kappas {
        for k in 0..n_scan {
            // Scan the drive frequency relative to the bare cavity:
            // delta_eps = ω_ε − ω_c = −delta_ce.
            let delta_eps = -halfwidth + 2.0 * halfwidth * k as f64 / (n_scan - 1) as f64;
            let p = DispersiveParams::gate_levels(chi, kappa, epsilon, -delta_eps)
                .map_err(|e| ScenarioError::Run(e.to_string()))?;
            let table = steady_rates(&p);
            let mut sz_max = 0.0_f64;
            for j in 0..4 {
                for l in 0..4 {
                    if j != l {
                        sz_max = sz_max.max(table.gamma[[j, l]]);
                    }
                }
            }
            spectrum.push(vec![kappa, delta_eps, table.gamma[[5, 0]], sz_max]);
        }
    }

    let mut ringup = ResultTable::new(
        "ringup",
        &[("kappa", "1/us"), ("t", "us"), ("gamma_fe_gg", "1/us")],
    );
    let t_final = r.value("ringup_t_final");
    let n_t = r.count("ringup_points");
    for &kappa in &kappas {
        // Drive resonant with the blocked level, cavity initially empty.
        let p = DispersiveParams::gate_levels(chi, kappa, epsilon, -chi[5])
            .map_err(|e| ScenarioError::Run(e.to_string()))?;
        for k in 0..n_t {
            let t = t_final * k as f64 / (n_t - 1) as f64;
            let a_fe = alpha_trajectory(&p, 5, C64::new(0.0, 0.0), t);
            let a_gg = alpha_trajectory(&p, 0, C64::new(0.0, 0.0), t);
            let (g, _) = rates(a_fe, a_gg, kappa, epsilon);
            ringup.push(vec![kappa, t, g]);
        }
    }
    Ok(vec![spectrum, ringup])
}

fn run_fig5(r: &Resolved) -> Result<Vec<ResultTable>, ScenarioError> {
    let xs = lin_grid(r.value("x_min"), r.value("x_max"), r.count("x_points"));
    let ys = log_grid(r.value("y_min"), r.value("y_max"), r.count("y_points"));
    let mut out = Vec::new();
    for heralded in [true, false] {
        let surface = combined_fidelity_surface(xs.clone(), ys.clone(), heralded);
        let mut t = ResultTable::new(
            if heralded { "heralded" } else { "unheralded" },
            &[
                ("dchi_over_kappa", "1"),
                ("gamma_over_omega", "1"),
                ("fbar", "1"),
            ],
        );
        for (iy, &y) in surface.y_axis.iter().enumerate() {
            for (ix, &x) in surface.x_axis.iter().enumerate() {
                t.push(vec![x, y, surface.values[[iy, ix]]]);
            }
        }
        out.push(t);
    }
    Ok(out)
}

/// Per-cell results for the dispersive gate-merit scenarios.
pub struct GateCell {
    pub xi_ca: f64,
    pub conc_ca: f64,
    pub xi_ca_free: f64,
    pub conc_ca_free: f64,
    pub xi_fs: f64,
    pub conc_fs: f64,
    pub n_fock: usize,
    pub top_fock: f64,
}

/// One (κ, ε) cell: coherent-model runs (with and without phase rotations)
/// and the full joint simulation, summarized as the halfway subspace
/// retention and the final concurrence.
pub fn gate_merit_cell(
    chi: [f64; 6],
    delta_ce: f64,
    kappa: f64,
    epsilon: f64,
    omega: f64,
    n_fock: usize,
    fock_step: usize,
    cfg: &IntegratorConfig,
) -> Result<GateCell, ScenarioError> {
    let run = |e: String| ScenarioError::Run(e);
    let dp = DispersiveParams::gate_levels(chi, kappa, epsilon, delta_ce)
        .map_err(|e| run(e.to_string()))?;
    let readout = ReadoutModel::Dispersive(dp);
    merit_cell(readout, omega, n_fock, fock_step, cfg)
}

fn merit_cell(
    readout: ReadoutModel,
    omega: f64,
    n_fock: usize,
    fock_step: usize,
    cfg: &IntegratorConfig,
) -> Result<GateCell, ScenarioError> {
    let run = |e: String| ScenarioError::Run(e);
    let tg = 2.0 * std::f64::consts::PI / omega;
    let grid = [0.0, 0.5 * tg, tg];
    let psi = FullSimParams::standard_initial_qudit();
    let rho0 = DensityMatrix::pure(&[3, 2], &psi).map_err(|e| run(e.to_string()))?;

    let ca = |upsilon_off: bool| -> Result<(f64, f64), ScenarioError> {
        let (rhos, _) = ca_evolve_readout(
            &readout,
            omega,
            std::f64::consts::FRAC_PI_2,
            &rho0,
            C64::new(0.0, 0.0),
            &grid,
            CaFlags {
                upsilon_off,
                steady: false,
            },
            cfg,
        )
        .map_err(|e| run(e.to_string()))?;
        let xi = 1.0 - 4.0 * rhos[1].entries()[[5, 5]].re;
        let conc = crate::fullsim::concurrence(&computational_block(rhos[2].entries()))
            .map_err(|e| run(e.to_string()))?;
        Ok((xi, conc))
    };
    let (xi_ca, conc_ca) = ca(false)?;
    let (xi_ca_free, conc_ca_free) = ca(true)?;

    let mut p = FullSimParams {
        readout,
        omega,
        phi_axis: std::f64::consts::FRAC_PI_2,
        n_fock,
        t_final: tg,
        initial_qudit: psi,
        alpha0: C64::new(0.0, 0.0),
    };
    if fock_step > 0 {
        p.n_fock = fock_convergence(
            &p,
            &[MeritKind::SubspaceRetentionHalf, MeritKind::ConcurrenceFinal],
            fock_step,
            n_fock,
            cfg,
        )
        .map_err(|e| run(e.to_string()))?;
    }
    let out = run_fullsim(&p, &grid, cfg).map_err(|e| run(e.to_string()))?;
    Ok(GateCell {
        xi_ca,
        conc_ca,
        xi_ca_free,
        conc_ca_free,
        xi_fs: out.rows[1].xi_fe.unwrap(),
        conc_fs: out.rows[2].concurrence.unwrap(),
        n_fock: p.n_fock,
        top_fock: out.top_fock_max,
    })
}

fn merit_columns() -> [(&'static str, &'static str); 10] {
    [
        ("kappa", "1/us"),
        ("epsilon", "rad/us"),
        ("xi_ca", "1"),
        ("conc_ca", "1"),
        ("xi_ca_no_upsilon", "1"),
        ("conc_ca_no_upsilon", "1"),
        ("xi_fs", "1"),
        ("conc_fs", "1"),
        ("n_fock", "1"),
        ("top_fock", "1"),
    ]
}

fn run_gate_merits(r: &Resolved) -> Result<Vec<ResultTable>, ScenarioError> {
    let chi = chi_array(r);
    let delta_ce = r.value("delta_ce");
    let omega = r.value("omega");
    let n_fock = r.count("n_fock");
    let fock_step = r.count("fock_step");
    let cfg = IntegratorConfig::default();

    let cells: Vec<(f64, f64)> = r.cells_2d("kappa", "epsilon");
    let rows: Result<Vec<Vec<f64>>, ScenarioError> = cells
        .par_iter()
        .map(|&(kappa, epsilon)| {
            let cell = gate_merit_cell(
                chi, delta_ce, kappa, epsilon, omega, n_fock, fock_step, &cfg,
            )?;
            Ok(vec![
                kappa,
                epsilon,
                cell.xi_ca,
                cell.conc_ca,
                cell.xi_ca_free,
                cell.conc_ca_free,
                cell.xi_fs,
                cell.conc_fs,
                cell.n_fock as f64,
                cell.top_fock,
            ])
        })
        .collect();
    let mut t = ResultTable::new("merits", &merit_columns());
    for row in rows? {
        t.push(row);
    }
    Ok(vec![t])
}

/// Longitudinal couplings realizing the ideal blocking pattern:
/// `g_fe = +|g|` and `-|g|` on every other level.
pub fn ideal_longitudinal_couplings(g: f64) -> Vec<f64> {
    vec![-g, -g, -g, -g, -g, g]
}

/// One longitudinal (κ, |g|) cell at the ideal coupling pattern.
pub fn longitudinal_merit_cell(
    g: f64,
    kappa: f64,
    omega_c: f64,
    omega: f64,
    n_fock: usize,
    fock_step: usize,
    cfg: &IntegratorConfig,
) -> Result<GateCell, ScenarioError> {
    let labels = ["gg", "ge", "eg", "ee", "fg", "fe"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let readout = ReadoutModel::Longitudinal {
        levels: labels,
        g: ideal_longitudinal_couplings(g),
        kappa,
        omega_c,
    };
    merit_cell(readout, omega, n_fock, fock_step, cfg)
}

fn run_fig9(r: &Resolved) -> Result<Vec<ResultTable>, ScenarioError> {
    let omega = r.value("omega");
    let omega_c = r.value("omega_c");
    let n_fock = r.count("n_fock");
    let fock_step = r.count("fock_step");
    let cfg = IntegratorConfig::default();

    let cells: Vec<(f64, f64)> = r.cells_2d("kappa", "g");
    let rows: Result<Vec<Vec<f64>>, ScenarioError> = cells
        .par_iter()
        .map(|&(kappa, g)| {
            let cell =
                longitudinal_merit_cell(g, kappa, omega_c, omega, n_fock, fock_step, &cfg)?;
            Ok(vec![
                kappa,
                g,
                cell.xi_ca,
                cell.conc_ca,
                cell.xi_ca_free,
                cell.conc_ca_free,
                cell.xi_fs,
                cell.conc_fs,
                cell.n_fock as f64,
                cell.top_fock,
            ])
        })
        .collect();
    let mut t = ResultTable::new(
        "merits",
        &[
            ("kappa", "1/us"),
            ("g", "rad/us"),
            ("xi_ca", "1"),
            ("conc_ca", "1"),
            ("xi_ca_no_upsilon", "1"),
            ("conc_ca_no_upsilon", "1"),
            ("xi_fs", "1"),
            ("conc_fs", "1"),
            ("n_fock", "1"),
            ("top_fock", "1"),
        ],
    );
    for row in rows? {
        t.push(row);
    }
    Ok(vec![t])
}

/// Qubit-in-cavity portrait cell: evolve (|e⟩+|g⟩)/√2 ⊗ vacuum and return
/// the reduced cavity state.
pub fn portrait_cavity_state(
    chi_split: f64,
    kappa: f64,
    epsilon: f64,
    omega: f64,
    t_final: f64,
    n_fock: usize,
    cfg: &IntegratorConfig,
) -> Result<(crate::operator::Operator, DispersiveParams), ScenarioError> {
    let run = |e: String| ScenarioError::Run(e);
    let dp = DispersiveParams::new(
        vec!["g".into(), "e".into()],
        vec![-chi_split, chi_split],
        kappa,
        epsilon,
        0.0,
    )
    .map_err(|e| run(e.to_string()))?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let p = FullSimParams {
        readout: ReadoutModel::Dispersive(dp.clone()),
        omega,
        phi_axis: std::f64::consts::FRAC_PI_2,
        n_fock,
        t_final,
        initial_qudit: Array1::from(vec![C64::new(s, 0.0), C64::new(s, 0.0)]),
        alpha0: C64::new(0.0, 0.0),
    };
    let out = run_fullsim(&p, &[0.0, t_final], cfg).map_err(|e| run(e.to_string()))?;
    // The cavity is the last tensor factor.
    let cavity = partial_trace(out.final_state.operator(), &[1])
        .map_err(|e| run(e.to_string()))?;
    Ok((cavity, dp))
}

fn run_fig10(r: &Resolved) -> Result<Vec<ResultTable>, ScenarioError> {
    let chi_split = r.value("chi_split");
    let epsilon = r.value("epsilon");
    let t_final = r.value("t_final");
    let n_fock = r.count("n_fock");
    let resolution = r.count("resolution");
    let half = r.value("phase_halfwidth");
    let cfg = IntegratorConfig::default();

    let cells: Vec<(f64, f64)> = r.cells_2d("kappa", "omega");
    let results: Result<Vec<_>, ScenarioError> = cells
        .par_iter()
        .map(|&(kappa, omega)| {
            let (cavity, dp) = portrait_cavity_state(
                chi_split, kappa, epsilon, omega, t_final, n_fock, &cfg,
            )?;
            let grid = HusimiGridSpec {
                x_range: (-half, half),
                p_range: (-half, half),
                resolution,
            };
            let q = husimi_q(&cavity, &grid);
            Ok((kappa, omega, q, dp))
        })
        .collect();

    let mut portraits = ResultTable::new(
        "husimi",
        &[
            ("omega", "rad/us"),
            ("kappa", "1/us"),
            ("x", "1"),
            ("p", "1"),
            ("q", "1"),
            ("reliable", "1"),
        ],
    );
    let mut centers = ResultTable::new(
        "pointers",
        &[
            ("omega", "rad/us"),
            ("kappa", "1/us"),
            ("level", "1"),
            ("alpha_re_t", "1"),
            ("alpha_im_t", "1"),
            ("alpha_re_ss", "1"),
            ("alpha_im_ss", "1"),
        ],
    );
    for (kappa, omega, q, dp) in results? {
        for (ix, &x) in q.x.iter().enumerate() {
            for (ip, &p) in q.p.iter().enumerate() {
                portraits.push(vec![
                    omega,
                    kappa,
                    x,
                    p,
                    q.values[[ix, ip]],
                    if q.reliable[[ix, ip]] { 1.0 } else { 0.0 },
                ]);
            }
        }
        for level in 0..2 {
            let at_t = alpha_trajectory(&dp, level, C64::new(0.0, 0.0), t_final);
            let ss = alpha_steady(&dp, level);
            centers.push(vec![
                omega,
                kappa,
                level as f64,
                at_t.re,
                at_t.im,
                ss.re,
                ss.im,
            ]);
        }
    }
    Ok(vec![portraits, centers])
}

fn run_fig11(r: &Resolved) -> Result<Vec<ResultTable>, ScenarioError> {
    let grid = log_grid(r.value("ratio_min"), r.value("ratio_max"), r.count("points"));
    let n_samples = r.count("n_samples");
    let seed = r.seed;
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &y)| {
            let cfg = HaarConfig {
                dim: 4,
                n_samples,
                seed: seed ^ i as u64,
            };
            let (mean, stderr) = average_fidelity_mc(
                |psi| fidelity_herald_from_population(psi[3].norm_sqr(), y, 1.0, true),
                &cfg,
            );
            let reference = fidelity_herald_from_population(0.25, y, 1.0, true);
            vec![y, mean, stderr, reference]
        })
        .collect();
    let mut t = ResultTable::new(
        "haar",
        &[
            ("gamma_over_omega", "1"),
            ("mc_mean", "1"),
            ("mc_stderr", "1"),
            ("f_herald_reference", "1"),
        ],
    );
    for row in rows {
        t.push(row);
    }
    Ok(vec![t])
}
