//! Closed-form noise budget: three-fold signal and spurious coincidence
//! probabilities, the fidelity they imply and the herald confidence.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::memory::gamma_at;
use crate::params::ExperimentParams;
use crate::protocol::exact::exact_verification;
use crate::protocol::{InputState, VerificationBasis};

/// Fidelity reachable by measuring the input and re-preparing it.
pub const CLASSICAL_LIMIT: f64 = 2.0 / 3.0;

/// Scalar inputs of the budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetInputs {
    /// Anti-Stokes emission probability.
    pub p_as: f64,
    /// Single-photon probability of the input pulse.
    pub p0: f64,
    /// Stokes photon probability (retrieved plus background).
    pub p_s: f64,
    /// Retrieval efficiency.
    pub gamma: f64,
    /// Overall collection times detection efficiency.
    pub eta: f64,
    /// Entanglement visibility in the H/V basis.
    pub v_hv: f64,
    /// Entanglement visibility in the +/- basis.
    pub v_pm: f64,
    pub zeta: f64,
}

pub const BUDGET_KEYS: [&str; 8] = ["p_as", "p0", "p_s", "gamma", "eta", "v_hv", "v_pm", "zeta"];

impl BudgetInputs {
    /// The quoted operating point: p_AS = 0.003, p_0 = 0.03, p_S = 0.004,
    /// gamma = 0.30, eta = 0.375, V = 0.88 (H/V) and 0.822 (+/-), zeta = 0.90.
    pub fn nominal() -> Self {
        BudgetInputs {
            p_as: 0.003,
            p0: 0.03,
            p_s: 0.004,
            gamma: 0.30,
            eta: 0.375,
            v_hv: 0.88,
            v_pm: 0.822,
            zeta: 0.90,
        }
    }

    /// Inputs implied by simulator parameters at zero storage time. The
    /// visibilities come from the exact entanglement-verification evaluator.
    pub fn from_params(params: &ExperimentParams) -> Result<Self> {
        let v_hv = exact_verification(params, VerificationBasis::HV)?.visibility();
        let v_pm = exact_verification(params, VerificationBasis::PM)?.visibility();
        let p_as = params.p_as();
        Ok(BudgetInputs {
            p_as,
            p0: params.p0(),
            p_s: params.background_s + p_as * params.gamma0,
            gamma: params.gamma0,
            eta: params.eta(),
            v_hv,
            v_pm,
            zeta: params.zeta,
        })
    }

    /// The same inputs after storage for `t`: the retrieval efficiency and
    /// the retrieved part of `p_s` follow `gamma(t)`, the background does not.
    pub fn at_time(&self, t: f64, params: &ExperimentParams) -> Self {
        let gamma = gamma_at(t, params);
        let background = (self.p_s - self.p_as * self.gamma).max(0.0);
        BudgetInputs {
            gamma,
            p_s: background + self.p_as * gamma,
            ..*self
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = *self;
        copy.field_mut(key).map(|f| *f)
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        *self.field_mut(key).ok_or_else(|| Error::UnknownParameter(key.to_owned()))? = value;
        Ok(())
    }

    fn field_mut(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "p_as" => &mut self.p_as,
            "p0" => &mut self.p0,
            "p_s" => &mut self.p_s,
            "gamma" => &mut self.gamma,
            "eta" => &mut self.eta,
            "v_hv" => &mut self.v_hv,
            "v_pm" => &mut self.v_pm,
            "zeta" => &mut self.zeta,
            _ => return None,
        })
    }

    fn validate(&self) -> Result<()> {
        check_unit("p_as", self.p_as)?;
        check_unit("p0", self.p0)?;
        check_unit("p_s", self.p_s)?;
        check_unit("gamma", self.gamma)?;
        check_unit("eta", self.eta)?;
        check_unit("v_hv", self.v_hv)?;
        check_unit("v_pm", self.v_pm)?;
        check_unit("zeta", self.zeta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// Desired three-fold coincidence probability.
    pub s: f64,
    /// Spurious three-fold probability from two input photons.
    pub n_wcp: f64,
    /// Spurious three-fold probability from two anti-Stokes photons.
    pub n_double: f64,
    /// Weight of the two-input-photon channel: 0 for H/V, 1 on the equator.
    pub kappa: f64,
    pub v_eff: f64,
    pub fidelity_pred: f64,
    /// Fraction of BSM heralds from one input photon and one anti-Stokes photon.
    pub herald_confidence: f64,
}

impl NoiseBudget {
    pub fn noise(&self) -> f64 {
        self.n_wcp + self.n_double
    }
}

pub fn compute_budget(inputs: &BudgetInputs, input: &InputState) -> Result<NoiseBudget> {
    inputs.validate()?;
    let BudgetInputs {
        p_as,
        p0,
        p_s,
        gamma,
        eta,
        ..
    } = *inputs;
    let kappa = input.kappa();
    let ge = gamma * eta;
    let eta2 = eta * eta;
    let eta3 = eta2 * eta;
    let s = 0.5 * p_as * p0 * gamma * eta3;
    let n_wcp = 0.25 * p0 * p0 * p_s * eta3 * kappa;
    let n_double = 0.25 * p_as * p_as * (2.0 * ge - ge * ge) * eta2;
    let v_eff = (1.0 - kappa) * inputs.v_hv + kappa * inputs.zeta * inputs.zeta * inputs.v_pm;
    let noise = n_wcp + n_double;
    let fidelity_pred = if s + noise > 0.0 {
        (s * (1.0 + v_eff) / 2.0 + noise / 2.0) / (s + noise)
    } else {
        0.5
    };
    let s2 = 0.5 * p_as * p0 * eta2;
    let n2 = 0.25 * p0 * p0 * eta2 * kappa + 0.25 * p_as * p_as * eta2;
    let herald_confidence = if s2 + n2 > 0.0 { s2 / (s2 + n2) } else { 0.0 };
    Ok(NoiseBudget {
        s,
        n_wcp,
        n_double,
        kappa,
        v_eff,
        fidelity_pred,
        herald_confidence,
    })
}

/// Budget fidelity after each storage time.
pub fn predict_fidelity_vs_time(
    params: &ExperimentParams,
    input: &InputState,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if times.is_empty() {
        return Err(Error::EmptyGrid);
    }
    params.validate()?;
    let base = BudgetInputs::from_params(params)?;
    fidelity_curve(&base, params, input, times)
}

/// [`predict_fidelity_vs_time`] with precomputed zero-time inputs.
pub fn fidelity_curve(
    base: &BudgetInputs,
    params: &ExperimentParams,
    input: &InputState,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    times
        .iter()
        .map(|&t| {
            crate::memory::check_storage_time(t)?;
            Ok((t, compute_budget(&base.at_time(t, params), input)?.fidelity_pred))
        })
        .collect()
}

/// Retrieval efficiency at which the budget fidelity equals `target`, or
/// `None` when even `gamma = base.gamma` stays below it.
pub fn gamma_for_fidelity(base: &BudgetInputs, input: &InputState, target: f64) -> Result<Option<f64>> {
    let background = (base.p_s - base.p_as * base.gamma).max(0.0);
    let f = |gamma: f64| -> Result<f64> {
        let inputs = BudgetInputs {
            gamma,
            p_s: background + base.p_as * gamma,
            ..*base
        };
        Ok(compute_budget(&inputs, input)?.fidelity_pred)
    };
    if f(base.gamma)? < target {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, base.gamma);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Storage time at which the budget fidelity of `input` falls to the
/// classical limit under the Gaussian decay with lifetime `tau_mem`.
/// `Some(0.0)` if it starts below, `None` if it never falls (no decay).
pub fn crossing_time(base: &BudgetInputs, tau_mem: f64, input: &InputState) -> Result<Option<f64>> {
    Ok(match gamma_for_fidelity(base, input, CLASSICAL_LIMIT)? {
        None => Some(0.0),
        Some(g) if g > 0.0 && tau_mem.is_finite() => Some(tau_mem * (base.gamma / g).ln().sqrt()),
        Some(_) => None,
    })
}

/// Lifetime at which the budget fidelity of `input` reaches the classical
/// limit exactly at `time`.
pub fn tau_for_crossing(base: &BudgetInputs, input: &InputState, time: f64) -> Result<f64> {
    let g = gamma_for_fidelity(base, input, CLASSICAL_LIMIT)?
        .filter(|g| *g > 0.0 && *g < base.gamma)
        .ok_or(Error::CalibrationFailed {
            name: "tau_mem",
            target: time,
        })?;
    Ok(time / (base.gamma / g).ln().sqrt())
}

/// Least-squares fit of the Gaussian-decay lifetime to measured points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub tau_mem: f64,
    /// Storage time at which the fitted curve crosses the classical limit.
    pub crossing_time: Option<f64>,
    /// Weighted residual sum of squares.
    pub chi2: f64,
}

/// Fit `tau_mem` so the budget curve best matches `points` given as
/// `(t, fidelity, std_err)`. Points with zero error get unit weight.
pub fn fit_decay(
    base: &BudgetInputs,
    params: &ExperimentParams,
    input: &InputState,
    points: &[(f64, f64, f64)],
) -> Result<DecayFit> {
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let chi2 = |ln_tau: f64| -> Result<f64> {
        let p = ExperimentParams {
            tau_mem: ln_tau.exp(),
            ..params.clone()
        };
        let mut acc = 0.0;
        for &(t, f, err) in points {
            let pred = compute_budget(&base.at_time(t, &p), input)?.fidelity_pred;
            let w = if err > 0.0 { 1.0 / (err * err) } else { 1.0 };
            acc += w * (pred - f).powi(2);
        }
        Ok(acc)
    };
    // Golden-section search over ln(tau) in [0.01 us, 10^4 us].
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.01f64.ln(), 1e4f64.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (chi2(c)?, chi2(d)?);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = chi2(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = chi2(d)?;
        }
    }
    let ln_tau = 0.5 * (a + b);
    let tau_mem = ln_tau.exp();
    Ok(DecayFit {
        tau_mem,
        crossing_time: crossing_time(base, tau_mem, input)?,
        chi2: chi2(ln_tau)?,
    })
}

/// One named axis of a budget sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<f64>,
}

/// Budget on the Cartesian product of `axes` around `base`, in lexicographic
/// order (the last axis varies fastest). Each row carries the axis values.
pub fn sweep(base: &BudgetInputs, input: &InputState, axes: &[SweepAxis]) -> Result<Vec<(Vec<f64>, NoiseBudget)>> {
    for axis in axes {
        if axis.values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if base.get(&axis.key).is_none() {
            return Err(Error::UnknownParameter(axis.key.clone()));
        }
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut rows = Vec::with_capacity(total);
    let mut index = vec![0usize; axes.len()];
    for _ in 0..total {
        let mut inputs = *base;
        let mut point = Vec::with_capacity(axes.len());
        for (axis, &i) in axes.iter().zip(&index) {
            inputs.set(&axis.key, axis.values[i])?;
            point.push(axis.values[i]);
        }
        rows.push((point, compute_budget(&inputs, input)?));
        for k in (0..axes.len()).rev() {
            index[k] += 1;
            if index[k] < axes[k].values.len() {
                break;
            }
            index[k] = 0;
        }
    }
    Ok(rows)
}
