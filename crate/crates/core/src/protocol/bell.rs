use rand::Rng;

use crate::error::Result;
use crate::fock::{pauli, project_bell, BellState, ModeMatrix, ModeName, PolarizationQubit, QubitModes};
use crate::sources::{resource_sector, IN_H, IN_V, SPIN_D, SPIN_U};

/// Outcome of checking the teleportation identity on random inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellIdentityReport {
    pub n_random: usize,
    /// Largest `1 - F` between the projected spin state and the corrected input.
    pub max_fidelity_error: f64,
    /// Largest `|p - 1/4|` over Bell outcomes.
    pub max_probability_error: f64,
    pub passed: bool,
}

const TOLERANCE: f64 = 1e-10;

/// Operator that maps the input onto the spin qubit after each Bell outcome
/// for the single-excitation resource. The spin qubit reads `H = SPIN_D`,
/// `V = SPIN_U`.
pub(crate) fn bell_correction(which: BellState) -> ModeMatrix {
    match which {
        BellState::PsiPlus => pauli::IDENTITY,
        BellState::PsiMinus => pauli::Z,
        BellState::PhiPlus => pauli::X,
        BellState::PhiMinus => pauli::MINUS_I_Y,
    }
}

/// Project `input (x) resource` onto each Bell state of (input, anti-Stokes)
/// for `n_random` Haar-random inputs plus the six poles, and compare the spin
/// state left behind with the Pauli-corrected input.
pub fn verify_bell_identity<R: Rng + ?Sized>(n_random: usize, rng: &mut R) -> Result<BellIdentityReport> {
    let mut inputs: Vec<PolarizationQubit> = vec![
        PolarizationQubit::h(),
        PolarizationQubit::v(),
        PolarizationQubit::plus(),
        PolarizationQubit::minus(),
        PolarizationQubit::r(),
        PolarizationQubit::l(),
    ];
    for _ in 0..n_random {
        let cos_theta: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        inputs.push(PolarizationQubit::from_bloch(cos_theta.acos(), phi));
    }
    let resource = resource_sector(1, 0.0, 2)?;
    let input_modes = QubitModes {
        h: IN_H,
        v: IN_V,
    };
    let as_modes = QubitModes::matched(ModeName::AsH, ModeName::AsV);
    let (mut max_f, mut max_p) = (0.0f64, 0.0f64);
    for q in &inputs {
        let state = q.single_photon(IN_H, IN_V, 2)?.tensor(&resource)?;
        for which in BellState::ALL {
            let (spin, p) = project_bell(&state, input_modes, as_modes, which)?;
            let got = PolarizationQubit {
                alpha: spin.amplitude_of(&[(SPIN_D, 1)]),
                beta: spin.amplitude_of(&[(SPIN_U, 1)]),
            };
            let expected = q.apply(&bell_correction(which));
            max_f = max_f.max(1.0 - expected.fidelity(&got));
            max_p = max_p.max((p - 0.25).abs());
        }
    }
    Ok(BellIdentityReport {
        n_random,
        max_fidelity_error: max_f,
        max_probability_error: max_p,
        passed: max_f < TOLERANCE && max_p < TOLERANCE,
    })
}
