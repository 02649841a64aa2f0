use crate::error::{Error, Result};

use super::{AnalyzerClick, TrialRecord};

/// Weighted fidelity of a set of teleportation records.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityEstimate {
    /// Weighted count of three-fold events at the correct port.
    pub n_correct: f64,
    pub n_wrong: f64,
    pub fidelity: f64,
    pub std_err: f64,
    /// Kish effective sample size of the three-fold events.
    pub n_effective: f64,
}

/// Fidelity over three-fold coincidences. An event where both analyzer ports
/// fired counts half correct and half wrong. All records must share the input
/// state and storage time.
pub fn estimate_fidelity(records: &[TrialRecord]) -> Result<FidelityEstimate> {
    if let Some(first) = records.first() {
        if records
            .iter()
            .any(|r| r.input != first.input || r.storage_time != first.storage_time)
        {
            return Err(Error::MixedRecords);
        }
    }
    let (mut correct, mut wrong, mut w2) = (0.0, 0.0, 0.0);
    for r in records {
        let w = r.weight;
        match r.analyzer_click {
            Some(AnalyzerClick::Correct) => correct += w,
            Some(AnalyzerClick::Wrong) => wrong += w,
            Some(AnalyzerClick::Both) => {
                correct += w / 2.0;
                wrong += w / 2.0;
            }
            _ => continue,
        }
        w2 += w * w;
    }
    let total = correct + wrong;
    if total <= 0.0 {
        return Err(Error::NoHeraldedTrials);
    }
    let n_eff = total * total / w2;
    let f = correct / total;
    Ok(FidelityEstimate {
        n_correct: correct,
        n_wrong: wrong,
        fidelity: f,
        std_err: (f * (1.0 - f) / n_eff).sqrt(),
        n_effective: n_eff,
    })
}
