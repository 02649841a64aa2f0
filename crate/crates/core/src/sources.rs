//! Initial states of a trial: the write emission of each ensemble, the
//! two-ensemble atom-photon resource and the weak-coherent-pulse input.
//!
//! The anti-Stokes field of ensemble U leaves the combining PBS as `AS_H`
//! and that of ensemble D as `AS_V`, so the PBS is folded into the labels.
//! With the collective-qubit dictionary (excitation in D is the atomic
//! `|H~>`, in U the atomic `|V~>`) the single-excitation part of the resource
//! reads `|H>|V~> + e^{i phi} |V>|H~>`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_range, check_unit, Result};
use crate::fock::{apply_phase_shift, FockState, ModeLabel, ModeName, PolarizationQubit};
use crate::params::{wcp_distribution, ExperimentParams, WCP_MAX_PHOTONS};

pub const AS_H: ModeLabel = ModeLabel::matched(ModeName::AsH);
pub const AS_V: ModeLabel = ModeLabel::matched(ModeName::AsV);
pub const SPIN_U: ModeLabel = ModeLabel::matched(ModeName::SpinU);
pub const SPIN_D: ModeLabel = ModeLabel::matched(ModeName::SpinD);
pub const IN_H: ModeLabel = ModeLabel::matched(ModeName::InH);
pub const IN_V: ModeLabel = ModeLabel::matched(ModeName::InV);
pub const IN_H_LATE: ModeLabel = ModeLabel::mismatched(ModeName::InH);
pub const IN_V_LATE: ModeLabel = ModeLabel::mismatched(ModeName::InV);

/// Modes of the resource state, in this order.
pub const RESOURCE_MODES: [ModeLabel; 4] = [AS_H, AS_V, SPIN_U, SPIN_D];
/// Modes of the input pulse, in this order.
pub const INPUT_MODES: [ModeLabel; 4] = [IN_H, IN_V, IN_H_LATE, IN_V_LATE];

/// Largest number of excitations kept per ensemble.
pub const MAX_PER_ENSEMBLE: u8 = 2;
/// Largest total excitation number of the two-ensemble resource.
pub const MAX_RESOURCE_EXCITATIONS: u8 = 2 * MAX_PER_ENSEMBLE;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    U,
    D,
}

impl Ensemble {
    pub fn modes(self) -> (ModeLabel, ModeLabel) {
        match self {
            Ensemble::U => (AS_H, SPIN_U),
            Ensemble::D => (AS_V, SPIN_D),
        }
    }
}

/// `sum_n chi^(n/2) |n_AS, n_spin>` for `n = 0..=2`, normalized.
pub fn build_write_emission(chi: f64, ensemble: Ensemble) -> Result<FockState> {
    check_range("chi", chi, 0.0, 0.5 - f64::EPSILON)?;
    let (anti_stokes, spin) = ensemble.modes();
    let norm = (1.0 + chi + chi * chi).sqrt();
    let terms = (0..=MAX_PER_ENSEMBLE).map(|n| {
        let amp = chi.powf(n as f64 / 2.0) / norm;
        (vec![n, n], Complex64::new(amp, 0.0))
    });
    FockState::from_terms(&[anti_stokes, spin], MAX_PER_ENSEMBLE, terms)
}

/// Both write emissions with the relative phase `e^{i phase n_D}`.
pub fn build_entangled_resource(params: &ExperimentParams, phase: f64) -> Result<FockState> {
    let u = build_write_emission(params.chi, Ensemble::U)?;
    let d = build_write_emission(params.chi, Ensemble::D)?;
    apply_phase_shift(&u.tensor(&d)?, ModeName::SpinD, phase)
}

/// Probability of each total excitation number `0..=4` of the resource.
pub fn excitation_distribution(chi: f64) -> [f64; MAX_RESOURCE_EXCITATIONS as usize + 1] {
    let z = 1.0 + chi + chi * chi;
    let mut out = [0.0; MAX_RESOURCE_EXCITATIONS as usize + 1];
    for n_u in 0..=MAX_PER_ENSEMBLE {
        for n_d in 0..=MAX_PER_ENSEMBLE {
            out[(n_u + n_d) as usize] += chi.powi((n_u + n_d) as i32) / (z * z);
        }
    }
    out
}

/// Normalized resource restricted to `n` total excitations, on
/// [`RESOURCE_MODES`]. Within a sector every split `(n_U, n_D)` carries the
/// same weight, so only the phase distinguishes them.
pub fn resource_sector(n: u8, phase: f64, n_max: u8) -> Result<FockState> {
    check_range("excitations", n as f64, 0.0, MAX_RESOURCE_EXCITATIONS as f64)?;
    let splits: Vec<(u8, u8)> = (0..=MAX_PER_ENSEMBLE)
        .filter_map(|n_u| n.checked_sub(n_u).map(|n_d| (n_u, n_d)))
        .filter(|&(_, n_d)| n_d <= MAX_PER_ENSEMBLE)
        .collect();
    let amp = 1.0 / (splits.len() as f64).sqrt();
    let terms = splits
        .into_iter()
        .map(|(n_u, n_d)| (vec![n_u, n_d, n_u, n_d], Complex64::from_polar(amp, phase * n_d as f64)));
    FockState::from_terms(&RESOURCE_MODES, n_max.max(MAX_PER_ENSEMBLE), terms)
}

/// `n` photons in the polarization mode of `qubit` on [`INPUT_MODES`]. The
/// spatio-temporal mode is `zeta |matched> + sqrt(1 - zeta^2) |mismatched>`
/// relative to the anti-Stokes wavepacket.
pub fn wcp_state(n: u8, qubit: &PolarizationQubit, zeta: f64, n_max: u8) -> Result<FockState> {
    check_unit("zeta", zeta)?;
    let late = (1.0 - zeta * zeta).max(0.0).sqrt();
    let creation = [
        (IN_H, qubit.alpha * zeta),
        (IN_V, qubit.beta * zeta),
        (IN_H_LATE, qubit.alpha * late),
        (IN_V_LATE, qubit.beta * late),
    ];
    let mut state = FockState::vacuum(&INPUT_MODES, n_max.max(n).max(1))?;
    let mut fact = 1.0;
    for k in 1..=n {
        state = state.apply_creation(&creation)?;
        fact *= k as f64;
    }
    Ok(state.scaled(Complex64::new(1.0 / fact.sqrt(), 0.0)))
}

pub fn sample_wcp_photon_number<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> Result<u8> {
    check_range("mu", mu, 0.0, f64::MAX)?;
    let dist = wcp_distribution(mu);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (n, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(n as u8);
        }
    }
    Ok(WCP_MAX_PHOTONS)
}

/// Draw the photon number of one pulse and build its state. Returns the
/// state and the photon number.
pub fn sample_wcp_input<R: Rng + ?Sized>(
    mu: f64,
    qubit: &PolarizationQubit,
    zeta: f64,
    rng: &mut R,
) -> Result<(FockState, u8)> {
    let n = sample_wcp_photon_number(mu, rng)?;
    Ok((wcp_state(n, qubit, zeta, WCP_MAX_PHOTONS)?, n))
}

pub fn sample_phase<R: Rng + ?Sized>(phase_sigma: f64, rng: &mut R) -> Result<f64> {
    check_range("phase_sigma", phase_sigma, 0.0, f64::MAX)?;
    if phase_sigma == 0.0 {
        return Ok(0.0);
    }
    let normal = Normal::new(0.0, phase_sigma).expect("finite sigma");
    Ok(normal.sample(rng))
}
