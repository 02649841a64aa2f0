//! Storage of the collective spin excitation, retrieval into the Stokes
//! channel, readout noise and the feed-forward correction.
//!
//! Retrieval maps `SPIN_U -> S_V` and `SPIN_D -> S_H`, so the atomic qubit
//! `a|H~> + b|V~>` comes back as the Stokes photon `a|H> + b|V>`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::detection::BsmOutcome;
use crate::error::{check_range, Error, Result};
use crate::fock::{apply_pauli_z, apply_polarization, pauli, FockState, ModeLabel, ModeMatrix, ModeName};
use crate::params::ExperimentParams;

pub const S_H: ModeLabel = ModeLabel::matched(ModeName::SH);
pub const S_V: ModeLabel = ModeLabel::matched(ModeName::SV);
pub const S_H_LATE: ModeLabel = ModeLabel::mismatched(ModeName::SH);
pub const S_V_LATE: ModeLabel = ModeLabel::mismatched(ModeName::SV);

/// Retrieval efficiency after storing for `t` microseconds.
pub fn gamma_at(t: f64, params: &ExperimentParams) -> f64 {
    if params.tau_mem.is_infinite() {
        return params.gamma0;
    }
    params.gamma0 * (-(t * t) / (params.tau_mem * params.tau_mem)).exp()
}

pub fn check_storage_time(t: f64) -> Result<()> {
    check_range("storage_time", t, 0.0, f64::MAX)
}

/// Probability of a spurious sigma_z from spin-wave dephasing after `t`.
pub fn dephasing_flip_prob(t: f64, params: &ExperimentParams) -> f64 {
    if params.dephasing_time.is_infinite() {
        return 0.0;
    }
    let x = t / params.dephasing_time;
    0.5 * (1.0 - (-(x * x)).exp())
}

/// Independent per-excitation loss on the spin modes. Each branch is keyed by
/// the number of excitations lost from `(SPIN_U, SPIN_D)`; the branch states
/// are unnormalized and their squared norms sum to the input norm.
pub fn spin_loss_branches(state: &FockState, survival: f64) -> Result<Vec<FockState>> {
    check_range("survival", survival, 0.0, 1.0)?;
    let spins = [ModeLabel::matched(ModeName::SpinU), ModeLabel::matched(ModeName::SpinD)];
    if !state.contains(spins[0]) || !state.contains(spins[1]) {
        return Err(Error::MissingSpinModes);
    }
    let idx = [state.index_of(spins[0])?, state.index_of(spins[1])?];
    let keep = survival.sqrt();
    let lose = (1.0 - survival).sqrt();
    let mut branches: BTreeMap<(u8, u8), Vec<(Vec<u8>, Complex64)>> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let (n_u, n_d) = (occ[idx[0]], occ[idx[1]]);
        for k_u in 0..=n_u {
            for k_d in 0..=n_d {
                let factor = kraus(n_u, k_u, keep, lose) * kraus(n_d, k_d, keep, lose);
                if factor == 0.0 {
                    continue;
                }
                let mut out = occ.to_vec();
                out[idx[0]] -= k_u;
                out[idx[1]] -= k_d;
                branches.entry((k_u, k_d)).or_default().push((out, amp * factor));
            }
        }
    }
    branches
        .into_values()
        .map(|terms| FockState::from_terms(state.modes(), state.n_max(), terms))
        .collect()
}

fn kraus(n: u8, lost: u8, keep: f64, lose: f64) -> f64 {
    let binom = (1..=lost as u32).fold(1.0, |acc, i| acc * (n as u32 + 1 - i) as f64 / i as f64);
    binom.sqrt() * keep.powi((n - lost) as i32) * lose.powi(lost as i32)
}

/// Convert the surviving spin excitations into Stokes photons.
pub fn retrieve(state: &FockState) -> Result<FockState> {
    if !state.has_name(ModeName::SpinU) || !state.has_name(ModeName::SpinD) {
        return Err(Error::MissingSpinModes);
    }
    state.rename(&[(ModeName::SpinU, ModeName::SV), (ModeName::SpinD, ModeName::SH)])
}

/// Pauli error acting on the retrieved polarization qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> ModeMatrix {
        match self {
            Pauli::I => pauli::IDENTITY,
            Pauli::X => pauli::X,
            Pauli::Y => pauli::Y,
            Pauli::Z => pauli::Z,
        }
    }

    /// Product up to a global phase.
    pub fn compose(self, other: Pauli) -> Pauli {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => p,
            (a, b) if a == b => I,
            (X, Y) | (Y, X) => Z,
            (X, Z) | (Z, X) => Y,
            _ => X,
        }
    }
}

/// Uncorrelated photon added to the Stokes channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Background {
    None,
    H,
    V,
}

/// One realization of the readout noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadoutNoise {
    pub pauli: Pauli,
    pub background: Background,
}

/// Distribution of the Pauli error: dephasing sigma_z followed by a random
/// Pauli with probability `depol_readout`.
pub fn pauli_distribution(t: f64, params: &ExperimentParams) -> [f64; 4] {
    let pz = dephasing_flip_prob(t, params);
    let p = params.depol_readout;
    let depol = [1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0];
    let mut out = [0.0; 4];
    for (zi, pzi) in [(Pauli::I, 1.0 - pz), (Pauli::Z, pz)] {
        for (d, pd) in Pauli::ALL.iter().zip(depol) {
            out[zi.compose(*d) as usize] += pzi * pd;
        }
    }
    out
}

pub fn background_distribution(params: &ExperimentParams) -> [f64; 3] {
    let b = params.background_s;
    [1.0 - b, b / 2.0, b / 2.0]
}

/// Every readout-noise realization with its probability.
pub fn readout_noise_branches(t: f64, params: &ExperimentParams) -> Vec<(f64, ReadoutNoise)> {
    let paulis = pauli_distribution(t, params);
    let bgs = background_distribution(params);
    let mut out = Vec::with_capacity(12);
    for (pauli, pp) in Pauli::ALL.iter().zip(paulis) {
        for (background, pb) in [Background::None, Background::H, Background::V].iter().zip(bgs) {
            let p = pp * pb;
            if p > 0.0 {
                out.push((
                    p,
                    ReadoutNoise {
                        pauli: *pauli,
                        background: *background,
                    },
                ));
            }
        }
    }
    out
}

pub fn sample_readout_noise<R: Rng + ?Sized>(t: f64, params: &ExperimentParams, rng: &mut R) -> ReadoutNoise {
    let pauli = Pauli::ALL[sample_index(&pauli_distribution(t, params), rng)];
    let background = [Background::None, Background::H, Background::V][sample_index(&background_distribution(params), rng)];
    ReadoutNoise { pauli, background }
}

/// Index drawn from a (not necessarily normalized) discrete distribution.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Apply a noise realization to a retrieved state on the Stokes modes. The
/// background photon occupies the mismatched temporal bin.
pub fn apply_readout_noise(state: &FockState, noise: ReadoutNoise) -> Result<FockState> {
    let mut out = state.with_mode(S_H).with_mode(S_V);
    if noise.pauli != Pauli::I {
        out = apply_polarization(&out, ModeName::SH, ModeName::SV, &noise.pauli.matrix())?;
    }
    let extra = match noise.background {
        Background::None => return Ok(out),
        Background::H => S_H_LATE,
        Background::V => S_V_LATE,
    };
    out.apply_creation(&[(extra, Complex64::new(1.0, 0.0))])
}

/// Storage for `t`, retrieval, and readout noise, sampled. The input must be
/// normalized; the output is normalized.
pub fn apply_storage_and_readout<R: Rng + ?Sized>(
    state: &FockState,
    t: f64,
    params: &ExperimentParams,
    rng: &mut R,
) -> Result<FockState> {
    check_storage_time(t)?;
    let branches = spin_loss_branches(state, gamma_at(t, params))?;
    let weights: Vec<f64> = branches.iter().map(|b| b.norm_sqr()).collect();
    let chosen = &branches[sample_index(&weights, rng)];
    let retrieved = retrieve(&chosen.normalized().ok_or(Error::MissingSpinModes)?)?;
    apply_readout_noise(&retrieved, sample_readout_noise(t, params, rng))
}

/// sigma_z on the Stokes qubit after a `PsiMinus` herald, identity after `PsiPlus`.
pub fn apply_feed_forward(state: &FockState, outcome: BsmOutcome) -> Result<FockState> {
    match outcome {
        BsmOutcome::PsiPlus => Ok(state.clone()),
        BsmOutcome::PsiMinus => {
            if !state.has_name(ModeName::SH) || !state.has_name(ModeName::SV) {
                return Err(Error::MissingStokesModes);
            }
            apply_pauli_z(state, ModeName::SH, ModeName::SV)
        }
        BsmOutcome::NoResult => Err(Error::NoResultOutcome),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PolarizationQubit;
    use crate::sources::{SPIN_D, SPIN_U};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn atomic_qubit(q: &PolarizationQubit) -> FockState {
        // H~ = excitation in D, V~ = excitation in U
        FockState::from_terms(&[SPIN_U, SPIN_D], 2, [(vec![0, 1], q.alpha), (vec![1, 0], q.beta)]).unwrap()
    }

    fn density(branches: &[FockState]) -> BTreeMap<(Vec<u8>, Vec<u8>), Complex64> {
        let mut rho: BTreeMap<(Vec<u8>, Vec<u8>), Complex64> = BTreeMap::new();
        for b in branches {
            for (x, ax) in b.terms() {
                for (y, ay) in b.terms() {
                    *rho.entry((x.to_vec(), y.to_vec())).or_default() += ax * ay.conj();
                }
            }
        }
        rho.retain(|_, v| v.norm() > 1e-13);
        rho
    }

    fn lossless() -> ExperimentParams {
        ExperimentParams {
            gamma0: 1.0,
            background_s: 0.0,
            depol_readout: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn gamma_examples() {
        let p = ExperimentParams::default();
        assert!((gamma_at(0.0, &p) - 0.30).abs() < 1e-15);
        assert!(gamma_at(1e6, &p) < 1e-300);
        assert!((gamma_at(p.tau_mem, &p) - 0.30 / std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn single_d_excitation_reads_out_as_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = atomic_qubit(&PolarizationQubit::h());
        let out = apply_storage_and_readout(&s, 0.0, &lossless(), &mut rng).unwrap();
        assert!((out.amplitude_of(&[(S_H, 1)]).norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atomic_qubit_becomes_stokes_qubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = PolarizationQubit::from_bloch(1.2, -0.4);
        let out = apply_storage_and_readout(&atomic_qubit(&q), 0.0, &lossless(), &mut rng).unwrap();
        assert!((out.amplitude_of(&[(S_H, 1)]) - q.alpha).norm() < 1e-12);
        assert!((out.amplitude_of(&[(S_V, 1)]) - q.beta).norm() < 1e-12);
    }

    #[test]
    fn retrieval_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = ExperimentParams {
            background_s: 0.0,
            depol_readout: 0.0,
            ..Default::default()
        };
        let s = atomic_qubit(&PolarizationQubit::plus());
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let out = apply_storage_and_readout(&s, 0.0, &params, &mut rng).unwrap();
                out.photon_number_distribution().get(&1).copied().unwrap_or(0.0) > 0.5
            })
            .count();
        assert!((hits as f64 / n as f64 - 0.30).abs() < 0.01);
    }

    #[test]
    fn feed_forward_examples() {
        let q = PolarizationQubit::plus();
        let s = retrieve(&atomic_qubit(&q)).unwrap();
        assert_eq!(apply_feed_forward(&s, BsmOutcome::PsiPlus).unwrap(), s);
        let flipped = apply_pauli_z(&s, ModeName::SH, ModeName::SV).unwrap();
        let fixed = apply_feed_forward(&flipped, BsmOutcome::PsiMinus).unwrap();
        assert!((fixed.inner(&s).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        let twice = apply_feed_forward(&fixed, BsmOutcome::PsiMinus).unwrap();
        assert_eq!(twice, flipped);
        assert_eq!(apply_feed_forward(&s, BsmOutcome::NoResult), Err(Error::NoResultOutcome));
    }

    #[test]
    fn missing_spin_modes() {
        let s = FockState::vacuum(&[S_H], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            apply_storage_and_readout(&s, 0.0, &lossless(), &mut rng),
            Err(Error::MissingSpinModes)
        );
    }

    #[test]
    fn loss_on_double_excitation() {
        // |2,0>: both survive gamma^2, one survives 2 gamma (1 - gamma), none (1 - gamma)^2
        let s = FockState::basis(&[SPIN_U, SPIN_D], 2, &[(SPIN_U, 2)]).unwrap();
        let g = 0.3;
        let mut p: Vec<f64> = spin_loss_branches(&s, g).unwrap().iter().map(|b| b.norm_sqr()).collect();
        p.sort_by(f64::total_cmp);
        let mut want = vec![g * g, 2.0 * g * (1.0 - g), (1.0 - g) * (1.0 - g)];
        want.sort_by(f64::total_cmp);
        for (a, b) in p.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn noise_distributions_are_normalized() {
        let params = ExperimentParams {
            dephasing_time: 3.0,
            depol_readout: 0.2,
            ..Default::default()
        };
        let total: f64 = readout_noise_branches(2.0, &params).iter().map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert_eq!(dephasing_flip_prob(1.0, &ExperimentParams::default()), 0.0);
    }

    proptest! {
        #[test]
        fn gamma_is_gaussian(t1 in 0.0f64..30.0, t2 in 0.0f64..30.0) {
            let p = ExperimentParams::default();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(gamma_at(hi, &p) <= gamma_at(lo, &p));
            let quad = (gamma_at(t1, &p) / p.gamma0).ln() * p.tau_mem * p.tau_mem;
            prop_assert!((quad + t1 * t1).abs() < 1e-9 * (1.0 + t1 * t1));
        }

        #[test]
        fn loss_commutes_with_polarization_rotation(theta in 0.0f64..3.14, phi in -3.0f64..3.0, g in 0.0f64..=1.0) {
            let q = PolarizationQubit::from_bloch(theta, phi);
            let rot = PolarizationQubit::from_bloch(0.7, 0.2).analyzer_matrix();
            let s = atomic_qubit(&q);
            // loss, retrieval, rotation
            let a: Vec<FockState> = spin_loss_branches(&s, g).unwrap().iter()
                .map(|b| apply_polarization(&retrieve(b).unwrap(), ModeName::SH, ModeName::SV, &rot).unwrap())
                .collect();
            // the same rotation applied before the loss
            let rotated = apply_polarization(&retrieve(&s).unwrap(), ModeName::SH, ModeName::SV, &rot).unwrap()
                .rename(&[(ModeName::SV, ModeName::SpinU), (ModeName::SH, ModeName::SpinD)]).unwrap();
            let b: Vec<FockState> = spin_loss_branches(&rotated, g).unwrap().iter()
                .map(|b| retrieve(b).unwrap())
                .collect();
            let (ra, rb) = (density(&a), density(&b));
            prop_assert_eq!(ra.len(), rb.len());
            for (k, v) in &ra {
                prop_assert!((rb.get(k).copied().unwrap_or_default() - v).norm() < 1e-10);
            }
        }
    }
}
