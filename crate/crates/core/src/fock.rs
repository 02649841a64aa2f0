//! Truncated multimode bosonic states and the linear-optical elements that act
//! on them.
//!
//! A [`FockState`] is a sparse map from occupation tuples (one entry per mode)
//! to complex amplitudes. States are values: every operation returns a new
//! state and leaves its input untouched, so a state can be shared read-only
//! across worker threads.
//!
//! Beam-splitter convention: symmetric, with a factor `i` on reflection,
//!
//! ```text
//! a† -> t a† + i r b†
//! b† -> i r a† + t b†        t = sqrt(1 - R), r = sqrt(R)
//! ```
//!
//! Two successive 50:50 splitters therefore act as `i` times a port swap on
//! every photon: exchanging the two output ports afterwards gives the
//! identity up to a global phase.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub const DEFAULT_N_MAX: u8 = 2;

/// Amplitudes smaller than this (in squared modulus) are dropped as numerical zeros.
const ZERO_WEIGHT: f64 = 1e-28;

const FACTORIALS: [f64; 21] = {
    let mut out = [1.0; 21];
    let mut i = 1;
    while i < 21 {
        out[i] = out[i - 1] * i as f64;
        i += 1;
    }
    out
};

fn factorial(n: usize) -> f64 {
    FACTORIALS[n]
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeName {
    AsH,
    AsV,
    InH,
    InV,
    SpinU,
    SpinD,
    SH,
    SV,
    Out1H,
    Out1V,
    Out2H,
    Out2V,
}

impl ModeName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeName::AsH => "AS_H",
            ModeName::AsV => "AS_V",
            ModeName::InH => "IN_H",
            ModeName::InV => "IN_V",
            ModeName::SpinU => "SPIN_U",
            ModeName::SpinD => "SPIN_D",
            ModeName::SH => "S_H",
            ModeName::SV => "S_V",
            ModeName::Out1H => "OUT1_H",
            ModeName::Out1V => "OUT1_V",
            ModeName::Out2H => "OUT2_H",
            ModeName::Out2V => "OUT2_V",
        }
    }
}

impl fmt::Display for ModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Temporal wavepacket bin. Photons in different bins are orthogonal and never
/// interfere, but a detector watching a mode counts both bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemporalBin {
    Matched,
    Mismatched,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub name: ModeName,
    pub bin: TemporalBin,
}

impl ModeLabel {
    pub const fn new(name: ModeName, bin: TemporalBin) -> Self {
        ModeLabel { name, bin }
    }

    pub const fn matched(name: ModeName) -> Self {
        ModeLabel::new(name, TemporalBin::Matched)
    }

    pub const fn mismatched(name: ModeName) -> Self {
        ModeLabel::new(name, TemporalBin::Mismatched)
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bin {
            TemporalBin::Matched => write!(f, "{}", self.name),
            TemporalBin::Mismatched => write!(f, "{}'", self.name),
        }
    }
}

pub type Occupation = SmallVec<[u8; 12]>;

/// A 2x2 complex matrix acting on a pair of modes. Column `j` is the image of
/// the `j`-th input creation operator, i.e. the Jones-matrix convention for a
/// polarization pair.
pub type ModeMatrix = [[Complex64; 2]; 2];

/// Sparse, possibly sub-normalized, pure state of a set of bosonic modes.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    modes: Vec<ModeLabel>,
    amps: BTreeMap<Occupation, Complex64>,
    n_max: u8,
}

impl FockState {
    /// All modes in vacuum, amplitude 1.
    pub fn vacuum(modes: &[ModeLabel], n_max: u8) -> Result<Self> {
        let mut state = FockState::empty(modes, n_max)?;
        state
            .amps
            .insert(SmallVec::from_elem(0, modes.len()), Complex64::new(1.0, 0.0));
        Ok(state)
    }

    /// A state with no support at all (an impossible outcome).
    pub fn empty(modes: &[ModeLabel], n_max: u8) -> Result<Self> {
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::DuplicateMode(*m));
            }
        }
        Ok(FockState {
            modes: modes.to_vec(),
            amps: BTreeMap::new(),
            n_max: n_max.max(1),
        })
    }

    pub fn from_terms<I>(modes: &[ModeLabel], n_max: u8, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, Complex64)>,
    {
        let mut state = FockState::empty(modes, n_max)?;
        for (occ, amp) in terms {
            assert_eq!(occ.len(), modes.len(), "occupation tuple length mismatch");
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::ParamOutOfRange {
                    name: "amplitude",
                    value: f64::NAN,
                    expected: "finite".to_owned(),
                });
            }
            if let Some((i, &n)) = occ.iter().enumerate().find(|(_, &n)| n > state.n_max) {
                return Err(Error::TruncationOverflow {
                    mode: modes[i],
                    photons: n as usize,
                    n_max: state.n_max,
                });
            }
            *state.amps.entry(SmallVec::from_vec(occ)).or_default() += amp;
        }
        state.prune();
        Ok(state)
    }

    /// Single basis state with the given occupations; modes not listed are empty.
    pub fn basis(modes: &[ModeLabel], n_max: u8, occupied: &[(ModeLabel, u8)]) -> Result<Self> {
        let mut occ = vec![0u8; modes.len()];
        for (label, n) in occupied {
            let i = modes
                .iter()
                .position(|m| m == label)
                .ok_or_else(|| Error::UnknownMode(label.to_string()))?;
            occ[i] = *n;
        }
        FockState::from_terms(modes, n_max, [(occ, Complex64::new(1.0, 0.0))])
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn n_max(&self) -> u8 {
        self.n_max
    }

    /// Number of occupation tuples with non-zero amplitude.
    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8], Complex64)> + '_ {
        self.amps.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Unit-norm copy, or `None` for a state without support.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return None;
        }
        Some(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.amps.values_mut() {
            *a *= factor;
        }
        out.prune();
        out
    }

    pub fn contains(&self, label: ModeLabel) -> bool {
        self.modes.contains(&label)
    }

    pub fn has_name(&self, name: ModeName) -> bool {
        self.modes.iter().any(|m| m.name == name)
    }

    pub fn index_of(&self, label: ModeLabel) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| *m == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    /// Amplitude of an occupation tuple given in this state's mode order.
    pub fn amplitude(&self, occ: &[u8]) -> Complex64 {
        self.amps.get(occ).copied().unwrap_or_default()
    }

    /// Amplitude of the basis state with the listed occupations, all other
    /// modes empty. Labels absent from the state must have occupation 0.
    pub fn amplitude_of(&self, occupied: &[(ModeLabel, u8)]) -> Complex64 {
        let mut occ: Occupation = SmallVec::from_elem(0, self.modes.len());
        for (label, n) in occupied {
            match self.modes.iter().position(|m| m == label) {
                Some(i) => occ[i] = *n,
                None if *n == 0 => {}
                None => return Complex64::default(),
            }
        }
        self.amplitude(&occ)
    }

    /// Raise the per-mode cap. Lowering it below a populated occupation fails.
    pub fn with_n_max(&self, n_max: u8) -> Result<Self> {
        let mut out = self.clone();
        out.n_max = n_max.max(1);
        out.check_cap()?;
        Ok(out)
    }

    /// Add a vacuum mode (no-op when already present).
    pub fn with_mode(&self, label: ModeLabel) -> Self {
        if self.contains(label) {
            return self.clone();
        }
        let mut modes = self.modes.clone();
        modes.push(label);
        let amps = self
            .amps
            .iter()
            .map(|(k, v)| {
                let mut k = k.clone();
                k.push(0);
                (k, *v)
            })
            .collect();
        FockState {
            modes,
            amps,
            n_max: self.n_max,
        }
    }

    /// Tensor product; the result's cap is the larger of the two.
    pub fn tensor(&self, other: &FockState) -> Result<Self> {
        let mut modes = self.modes.clone();
        for m in &other.modes {
            if modes.contains(m) {
                return Err(Error::DuplicateMode(*m));
            }
            modes.push(*m);
        }
        let mut amps = BTreeMap::new();
        for (ka, va) in &self.amps {
            for (kb, vb) in &other.amps {
                let mut k = ka.clone();
                k.extend_from_slice(kb);
                amps.insert(k, va * vb);
            }
        }
        let mut out = FockState {
            modes,
            amps,
            n_max: self.n_max.max(other.n_max),
        };
        out.prune();
        Ok(out)
    }

    /// Coherent sum of two states over the same modes.
    pub fn add(&self, other: &FockState) -> Result<Self> {
        let other = other.reordered_like(self)?;
        let mut out = self.clone();
        out.n_max = self.n_max.max(other.n_max);
        for (k, v) in other.amps {
            *out.amps.entry(k).or_default() += v;
        }
        out.prune();
        Ok(out)
    }

    fn reordered_like(&self, template: &FockState) -> Result<Self> {
        if self.modes == template.modes {
            return Ok(self.clone());
        }
        if self.modes.len() != template.modes.len() {
            return Err(Error::UnknownMode("mode sets differ".to_owned()));
        }
        let perm = template
            .modes
            .iter()
            .map(|m| self.index_of(*m))
            .collect::<Result<Vec<_>>>()?;
        let amps = self
            .amps
            .iter()
            .map(|(k, v)| (perm.iter().map(|&i| k[i]).collect(), *v))
            .collect();
        Ok(FockState {
            modes: template.modes.clone(),
            amps,
            n_max: self.n_max,
        })
    }

    /// Rename every bin of `from` to `to`. Fails if `to` is already in use.
    pub fn relabel(&self, from: ModeName, to: ModeName) -> Result<Self> {
        if from == to {
            return Ok(self.clone());
        }
        if self.has_name(to) {
            return Err(Error::DuplicateMode(ModeLabel::matched(to)));
        }
        let mut out = self.clone();
        for m in out.modes.iter_mut().filter(|m| m.name == from) {
            m.name = to;
        }
        Ok(out)
    }

    /// Simultaneous renaming of physical modes (all bins). A target may be
    /// one of the sources, so permutations are allowed.
    pub fn rename(&self, pairs: &[(ModeName, ModeName)]) -> Result<Self> {
        let mut out = self.clone();
        for m in out.modes.iter_mut() {
            if let Some((_, to)) = pairs.iter().find(|(from, _)| *from == m.name) {
                m.name = *to;
            }
        }
        for (i, m) in out.modes.iter().enumerate() {
            if out.modes[..i].contains(m) {
                return Err(Error::DuplicateMode(*m));
            }
        }
        Ok(out)
    }

    /// Total photon number over the listed physical modes, per occupation tuple.
    pub fn count_in(&self, occ: &[u8], name: ModeName) -> usize {
        self.modes
            .iter()
            .zip(occ)
            .filter(|(m, _)| m.name == name)
            .map(|(_, &n)| n as usize)
            .sum()
    }

    /// Distribution of the total photon number over all modes.
    pub fn photon_number_distribution(&self) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.amps {
            let n: usize = k.iter().map(|&x| x as usize).sum();
            *out.entry(n).or_insert(0.0) += v.norm_sqr();
        }
        out
    }

    pub fn mean_occupation(&self, label: ModeLabel) -> Result<f64> {
        let i = self.index_of(label)?;
        Ok(self
            .amps
            .iter()
            .map(|(k, v)| k[i] as f64 * v.norm_sqr())
            .sum())
    }

    /// Multiply each amplitude by a phase that depends on its occupation tuple.
    pub fn map_amplitudes<F>(&self, f: F) -> Self
    where
        F: Fn(&[u8]) -> Complex64,
    {
        let mut out = self.clone();
        for (k, v) in out.amps.iter_mut() {
            *v *= f(k);
        }
        out.prune();
        out
    }

    /// Apply a linear transformation to one pair of modes (same bin or not).
    /// Missing modes are added in vacuum.
    pub fn apply_mode_matrix(&self, a: ModeLabel, b: ModeLabel, u: &ModeMatrix) -> Result<Self> {
        let state = self.with_mode(a).with_mode(b);
        let ia = state.index_of(a)?;
        let ib = state.index_of(b)?;

        // powers of each matrix element, up to the largest photon number present
        let top = state
            .amps
            .keys()
            .map(|k| k[ia].max(k[ib]) as usize)
            .max()
            .unwrap_or(0);
        let powers = |c: Complex64| {
            let mut p = Vec::with_capacity(top + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=top {
                p.push(acc);
                acc *= c;
            }
            p
        };
        let (p00, p10, p01, p11) = (
            powers(u[0][0]),
            powers(u[1][0]),
            powers(u[0][1]),
            powers(u[1][1]),
        );

        let mut amps: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (k, v) in &state.amps {
            let na = k[ia] as usize;
            let nb = k[ib] as usize;
            let n = na + nb;
            let norm = v / (factorial(na) * factorial(nb)).sqrt();
            for j in 0..=na {
                let ca = binomial(na, j) * p00[j] * p10[na - j];
                for l in 0..=nb {
                    let cb = binomial(nb, l) * p01[l] * p11[nb - l];
                    let out_a = j + l;
                    let out_b = n - out_a;
                    let amp = norm * ca * cb * (factorial(out_a) * factorial(out_b)).sqrt();
                    if amp.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut key = k.clone();
                    key[ia] = out_a as u8;
                    key[ib] = out_b as u8;
                    *amps.entry(key).or_default() += amp;
                }
            }
        }
        let mut out = FockState {
            modes: state.modes,
            amps,
            n_max: state.n_max,
        };
        out.prune();
        out.check_cap()?;
        Ok(out)
    }

    /// `sum_k c_k a_k†` applied to the state (not renormalized). Missing modes
    /// are added in vacuum.
    pub fn apply_creation(&self, combination: &[(ModeLabel, Complex64)]) -> Result<Self> {
        let mut state = self.clone();
        for (label, _) in combination {
            state = state.with_mode(*label);
        }
        let idx = combination
            .iter()
            .map(|(l, c)| Ok((state.index_of(*l)?, *c)))
            .collect::<Result<Vec<_>>>()?;
        let mut amps: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (k, v) in &state.amps {
            for &(i, c) in &idx {
                let mut key = k.clone();
                key[i] += 1;
                let amp = v * c * (key[i] as f64).sqrt();
                *amps.entry(key).or_default() += amp;
            }
        }
        let mut out = FockState {
            modes: state.modes,
            amps,
            n_max: state.n_max,
        };
        out.prune();
        out.check_cap()?;
        Ok(out)
    }

    /// Group the amplitudes by the occupations of `labels`. Each entry maps the
    /// sub-occupation of `labels` to the (unnormalized) state of the remaining
    /// modes.
    pub fn split_by(&self, labels: &[ModeLabel]) -> Result<BTreeMap<Occupation, FockState>> {
        let idx = labels
            .iter()
            .map(|l| self.index_of(*l))
            .collect::<Result<Vec<_>>>()?;
        let rest_idx: Vec<usize> = (0..self.modes.len()).filter(|i| !idx.contains(i)).collect();
        let rest_modes: Vec<ModeLabel> = rest_idx.iter().map(|&i| self.modes[i]).collect();
        let mut out: BTreeMap<Occupation, FockState> = BTreeMap::new();
        for (k, v) in &self.amps {
            let sub: Occupation = idx.iter().map(|&i| k[i]).collect();
            let rest: Occupation = rest_idx.iter().map(|&i| k[i]).collect();
            let entry = out.entry(sub).or_insert_with(|| FockState {
                modes: rest_modes.clone(),
                amps: BTreeMap::new(),
                n_max: self.n_max,
            });
            *entry.amps.entry(rest).or_default() += *v;
        }
        Ok(out)
    }

    /// Project the listed modes onto fixed occupations and drop them. Returns
    /// the normalized remainder and the outcome probability relative to this
    /// state's norm; a zero-probability outcome yields an empty state.
    pub fn project_out(&self, labels: &[ModeLabel], occ: &[u8]) -> Result<(FockState, f64)> {
        let total = self.norm_sqr();
        let mut groups = self.split_by(labels)?;
        let rest_modes: Vec<ModeLabel> = self
            .modes
            .iter()
            .filter(|m| !labels.contains(m))
            .copied()
            .collect();
        match groups.remove(occ) {
            Some(rest) if total > 0.0 => {
                let p = rest.norm_sqr() / total;
                match rest.normalized() {
                    Some(s) => Ok((s, p)),
                    None => Ok((FockState::empty(&rest_modes, self.n_max)?, 0.0)),
                }
            }
            _ => Ok((FockState::empty(&rest_modes, self.n_max)?, 0.0)),
        }
    }

    /// Drop a set of modes that are known to be in vacuum on every term.
    pub fn drop_vacuum_modes(&self, labels: &[ModeLabel]) -> Result<Self> {
        let zeros: Occupation = SmallVec::from_elem(0, labels.len());
        let groups = self.split_by(labels)?;
        if groups.keys().any(|k| *k != zeros) {
            return Err(Error::UnknownMode("dropped mode is occupied".to_owned()));
        }
        let rest_modes: Vec<ModeLabel> = self
            .modes
            .iter()
            .filter(|m| !labels.contains(m))
            .copied()
            .collect();
        Ok(groups
            .into_values()
            .next()
            .unwrap_or(FockState::empty(&rest_modes, self.n_max)?))
    }

    /// `<self|other>` over the same set of modes (order may differ).
    pub fn inner(&self, other: &FockState) -> Result<Complex64> {
        let other = other.reordered_like(self)?;
        Ok(self
            .amps
            .iter()
            .map(|(k, v)| v.conj() * other.amplitude(k))
            .sum())
    }

    fn prune(&mut self) {
        self.amps.retain(|_, v| v.norm_sqr() > ZERO_WEIGHT);
    }

    fn check_cap(&self) -> Result<()> {
        for k in self.amps.keys() {
            if let Some((i, &n)) = k.iter().enumerate().find(|(_, &n)| n > self.n_max) {
                return Err(Error::TruncationOverflow {
                    mode: self.modes[i],
                    photons: n as usize,
                    n_max: self.n_max,
                });
            }
        }
        Ok(())
    }
}

fn bins_of(state: &FockState, name: ModeName) -> Vec<TemporalBin> {
    let mut bins: Vec<TemporalBin> = state
        .modes()
        .iter()
        .filter(|m| m.name == name)
        .map(|m| m.bin)
        .collect();
    bins.sort();
    bins.dedup();
    bins
}

/// Apply a mode matrix to the `(a, b)` pair in every temporal bin where either
/// is present. Bins never mix.
pub fn apply_pair_matrix(state: &FockState, a: ModeName, b: ModeName, u: &ModeMatrix) -> Result<FockState> {
    if !state.has_name(a) {
        return Err(Error::UnknownMode(a.to_string()));
    }
    if !state.has_name(b) {
        return Err(Error::UnknownMode(b.to_string()));
    }
    let mut bins = bins_of(state, a);
    bins.extend(bins_of(state, b));
    bins.sort();
    bins.dedup();
    let mut out = state.clone();
    for bin in bins {
        out = out.apply_mode_matrix(ModeLabel::new(a, bin), ModeLabel::new(b, bin), u)?;
    }
    Ok(out)
}

pub fn beam_splitter_matrix(reflectivity: f64) -> ModeMatrix {
    let t = Complex64::new((1.0 - reflectivity).sqrt(), 0.0);
    let ir = Complex64::new(0.0, reflectivity.sqrt());
    [[t, ir], [ir, t]]
}

/// Mix modes `a` and `b` on a beam splitter of the given intensity
/// reflectivity. Output port 1 keeps the name `a`, port 2 keeps `b`.
pub fn apply_beam_splitter(state: &FockState, a: ModeName, b: ModeName, reflectivity: f64) -> Result<FockState> {
    crate::error::check_unit("reflectivity", reflectivity)?;
    apply_pair_matrix(state, a, b, &beam_splitter_matrix(reflectivity))
}

/// Polarizing beam splitter as a pure routing element: `in_h` leaves through
/// `out_t`, `in_v` through `out_r`.
pub fn apply_pbs(
    state: &FockState,
    in_h: ModeName,
    in_v: ModeName,
    out_t: ModeName,
    out_r: ModeName,
) -> Result<FockState> {
    if !state.has_name(in_h) {
        return Err(Error::UnknownMode(in_h.to_string()));
    }
    if !state.has_name(in_v) {
        return Err(Error::UnknownMode(in_v.to_string()));
    }
    state.rename(&[(in_h, out_t), (in_v, out_r)])
}

/// Jones matrix on the `(h, v)` pair in every temporal bin.
pub fn apply_polarization(state: &FockState, h: ModeName, v: ModeName, jones: &ModeMatrix) -> Result<FockState> {
    apply_pair_matrix(state, h, v, jones)
}

/// sigma_z on a polarization pair: amplitude sign `(-1)^(photons in v)`.
pub fn apply_pauli_z(state: &FockState, h: ModeName, v: ModeName) -> Result<FockState> {
    if !state.has_name(h) {
        return Err(Error::UnknownMode(h.to_string()));
    }
    if !state.has_name(v) {
        return Err(Error::UnknownMode(v.to_string()));
    }
    let idx: Vec<usize> = state
        .modes()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.name == v)
        .map(|(i, _)| i)
        .collect();
    Ok(state.map_amplitudes(|k| {
        let n: usize = idx.iter().map(|&i| k[i] as usize).sum();
        if n % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        }
    }))
}

/// Phase `e^{i phi n}` on every bin of a mode.
pub fn apply_phase_shift(state: &FockState, name: ModeName, phi: f64) -> Result<FockState> {
    if !state.has_name(name) {
        return Err(Error::UnknownMode(name.to_string()));
    }
    let idx: Vec<usize> = state
        .modes()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.name == name)
        .map(|(i, _)| i)
        .collect();
    Ok(state.map_amplitudes(|k| {
        let n: usize = idx.iter().map(|&i| k[i] as usize).sum();
        Complex64::from_polar(1.0, phi * n as f64)
    }))
}

/// Project one mode onto a fixed occupation, keeping the mode in the state.
pub fn project_and_renormalize(state: &FockState, mode: ModeLabel, occupation: u8) -> Result<(FockState, f64)> {
    let i = state.index_of(mode)?;
    let total = state.norm_sqr();
    let kept = FockState {
        modes: state.modes.clone(),
        amps: state
            .amps
            .iter()
            .filter(|(k, _)| k[i] == occupation)
            .map(|(k, v)| (k.clone(), *v))
            .collect(),
        n_max: state.n_max,
    };
    let p = if total > 0.0 { kept.norm_sqr() / total } else { 0.0 };
    match kept.normalized() {
        Some(s) => Ok((s, p)),
        None => Ok((FockState::empty(state.modes(), state.n_max)?, 0.0)),
    }
}

/// Polarization qubit `alpha |H> + beta |V>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationQubit {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl PolarizationQubit {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::ParamOutOfRange {
                name: "qubit norm",
                value: n,
                expected: "1 within 1e-12".to_owned(),
            });
        }
        Ok(PolarizationQubit { alpha, beta })
    }

    /// Normalize arbitrary (non-zero) amplitudes.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ParamOutOfRange {
                name: "qubit norm",
                value: n,
                expected: "non-zero".to_owned(),
            });
        }
        Ok(PolarizationQubit {
            alpha: alpha / n,
            beta: beta / n,
        })
    }

    /// Bloch-sphere parametrization `cos(theta/2)|H> + e^{i phi} sin(theta/2)|V>`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        PolarizationQubit {
            alpha: Complex64::new((theta / 2.0).cos(), 0.0),
            beta: Complex64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    pub fn h() -> Self {
        PolarizationQubit::from_bloch(0.0, 0.0)
    }

    pub fn v() -> Self {
        PolarizationQubit {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PolarizationQubit {
            alpha: Complex64::new(s, 0.0),
            beta: Complex64::new(s, 0.0),
        }
    }

    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PolarizationQubit {
            alpha: Complex64::new(s, 0.0),
            beta: Complex64::new(-s, 0.0),
        }
    }

    pub fn r() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PolarizationQubit {
            alpha: Complex64::new(s, 0.0),
            beta: Complex64::new(0.0, s),
        }
    }

    pub fn l() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PolarizationQubit {
            alpha: Complex64::new(s, 0.0),
            beta: Complex64::new(0.0, -s),
        }
    }

    /// The orthogonal state `-beta* |H> + alpha* |V>`.
    pub fn orthogonal(&self) -> Self {
        PolarizationQubit {
            alpha: -self.beta.conj(),
            beta: self.alpha.conj(),
        }
    }

    pub fn overlap(&self, other: &PolarizationQubit) -> Complex64 {
        self.alpha.conj() * other.alpha + self.beta.conj() * other.beta
    }

    pub fn fidelity(&self, other: &PolarizationQubit) -> f64 {
        self.overlap(other).norm_sqr()
    }

    pub fn apply(&self, m: &ModeMatrix) -> PolarizationQubit {
        PolarizationQubit {
            alpha: m[0][0] * self.alpha + m[0][1] * self.beta,
            beta: m[1][0] * self.alpha + m[1][1] * self.beta,
        }
    }

    /// Jones matrix that sends this state to `|H>` and its orthogonal partner to `|V>`.
    pub fn analyzer_matrix(&self) -> ModeMatrix {
        let perp = self.orthogonal();
        [
            [self.alpha.conj(), self.beta.conj()],
            [perp.alpha.conj(), perp.beta.conj()],
        ]
    }

    /// One photon in this polarization on the `(h, v)` pair of the given bin.
    pub fn single_photon(&self, h: ModeLabel, v: ModeLabel, n_max: u8) -> Result<FockState> {
        FockState::from_terms(
            &[h, v],
            n_max,
            [(vec![1, 0], self.alpha), (vec![0, 1], self.beta)],
        )
    }
}

pub mod pauli {
    use super::ModeMatrix;
    use num_complex::Complex64;

    const O: Complex64 = Complex64::new(0.0, 0.0);
    const I1: Complex64 = Complex64::new(1.0, 0.0);
    const IM: Complex64 = Complex64::new(0.0, 1.0);

    pub const IDENTITY: ModeMatrix = [[I1, O], [O, I1]];
    pub const X: ModeMatrix = [[O, I1], [I1, O]];
    pub const Y: ModeMatrix = [[O, Complex64::new(0.0, -1.0)], [IM, O]];
    pub const Z: ModeMatrix = [[I1, O], [O, Complex64::new(-1.0, 0.0)]];
    /// `-i sigma_y`
    pub const MINUS_I_Y: ModeMatrix = [[O, Complex64::new(-1.0, 0.0)], [I1, O]];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Components on `(HH, HV, VH, VV)`.
    pub fn components(self) -> [f64; 4] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            BellState::PhiPlus => [s, 0.0, 0.0, s],
            BellState::PhiMinus => [s, 0.0, 0.0, -s],
            BellState::PsiPlus => [0.0, s, s, 0.0],
            BellState::PsiMinus => [0.0, s, -s, 0.0],
        }
    }
}

/// `(Phi+, Phi-, Psi+, Psi-)` overlaps of a two-photon polarization state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellCoefficients {
    pub phi_plus: Complex64,
    pub phi_minus: Complex64,
    pub psi_plus: Complex64,
    pub psi_minus: Complex64,
}

impl BellCoefficients {
    pub fn get(&self, which: BellState) -> Complex64 {
        match which {
            BellState::PhiPlus => self.phi_plus,
            BellState::PhiMinus => self.phi_minus,
            BellState::PsiPlus => self.psi_plus,
            BellState::PsiMinus => self.psi_minus,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        BellState::ALL.iter().map(|b| self.get(*b).norm_sqr()).sum()
    }
}

/// A polarization qubit carried by an `(h, v)` pair of mode labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitModes {
    pub h: ModeLabel,
    pub v: ModeLabel,
}

impl QubitModes {
    pub const fn matched(h: ModeName, v: ModeName) -> Self {
        QubitModes {
            h: ModeLabel::matched(h),
            v: ModeLabel::matched(v),
        }
    }
}

/// Split the state into the four `(x, y)` polarization components of the two
/// qubits, each carrying the state of the remaining modes.
fn two_qubit_components(state: &FockState, first: QubitModes, second: QubitModes) -> Result<[FockState; 4]> {
    let labels = [first.h, first.v, second.h, second.v];
    let groups = state.split_by(&labels)?;
    let rest_modes: Vec<ModeLabel> = state
        .modes()
        .iter()
        .filter(|m| !labels.contains(m))
        .copied()
        .collect();
    let empty = FockState::empty(&rest_modes, state.n_max())?;
    let mut out = [empty.clone(), empty.clone(), empty.clone(), empty];
    for (k, rest) in groups {
        let slot = match k.as_slice() {
            [1, 0, 1, 0] => 0,
            [1, 0, 0, 1] => 1,
            [0, 1, 1, 0] => 2,
            [0, 1, 0, 1] => 3,
            _ => return Err(Error::NotTwoQubit),
        };
        out[slot] = rest;
    }
    Ok(out)
}

/// Bell-basis coefficients of a two-qubit polarization state. Any other mode
/// in the state must be in vacuum.
pub fn bell_decompose(state: &FockState, first: QubitModes, second: QubitModes) -> Result<BellCoefficients> {
    let comps = two_qubit_components(state, first, second)?;
    let mut c = [Complex64::default(); 4];
    for (slot, rest) in comps.iter().enumerate() {
        match rest.support_len() {
            0 => {}
            1 => {
                let (occ, amp) = rest.terms().next().expect("one term");
                if occ.iter().any(|&n| n != 0) {
                    return Err(Error::NotTwoQubit);
                }
                c[slot] = amp;
            }
            _ => return Err(Error::NotTwoQubit),
        }
    }
    let coeff = |b: BellState| -> Complex64 {
        b.components()
            .iter()
            .zip(c.iter())
            .map(|(w, a)| a * *w)
            .sum()
    };
    Ok(BellCoefficients {
        phi_plus: coeff(BellState::PhiPlus),
        phi_minus: coeff(BellState::PhiMinus),
        psi_plus: coeff(BellState::PsiPlus),
        psi_minus: coeff(BellState::PsiMinus),
    })
}

/// Project two qubits onto a Bell state, returning the normalized state of the
/// remaining modes and the projection probability.
pub fn project_bell(
    state: &FockState,
    first: QubitModes,
    second: QubitModes,
    which: BellState,
) -> Result<(FockState, f64)> {
    let comps = two_qubit_components(state, first, second)?;
    let weights = which.components();
    let mut acc: Option<FockState> = None;
    for (rest, w) in comps.iter().zip(weights.iter()) {
        if *w == 0.0 || rest.is_empty() {
            continue;
        }
        let term = rest.scaled(Complex64::new(*w, 0.0));
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    let total = state.norm_sqr();
    let rest_modes = comps[0].modes().to_vec();
    match acc.and_then(|a| {
        let p = if total > 0.0 { a.norm_sqr() / total } else { 0.0 };
        a.normalized().map(|s| (s, p))
    }) {
        Some(x) => Ok(x),
        None => Ok((FockState::empty(&rest_modes, state.n_max())?, 0.0)),
    }
}
