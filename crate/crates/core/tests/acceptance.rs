//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memtele_core::budget::{compute_budget, predict_fidelity_vs_time, BudgetInputs, CLASSICAL_LIMIT};
use memtele_core::cli::{run_experiment, write_results, Experiment, OutputFormat, RunConfig};
use memtele_core::detection::{apply_bsm_optics, classify_bsm, click_distribution, BsmOutcome, DetectorModel, BSM_MONITORS};
use memtele_core::fock::{apply_beam_splitter, BellState, FockState, ModeLabel, ModeName, PolarizationQubit};
use memtele_core::params::{chi_for_p_as, mu_for_p0, ExperimentParams};
use memtele_core::protocol::exact::{exact_teleportation, exact_verification};
use memtele_core::protocol::{
    run_teleportation, run_verification, verify_bell_identity, FidelityEstimate, InputState, RunSettings, SamplingMode,
    VerificationBasis,
};
use memtele_core::sources::{wcp_state, AS_H, AS_V, IN_H, IN_V};

const TABLE_TIME: f64 = 0.5;
const MEASURED: [(InputState, f64); 3] = [(InputState::H, 0.865), (InputState::Plus, 0.737), (InputState::R, 0.750)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn settings(seed: u64, target: f64) -> RunSettings {
    RunSettings {
        seed,
        workers: 1,
        target_ess: target,
        batch_size: 8192,
        max_trials: 50_000_000,
        mode: SamplingMode::Conditioned,
    }
}

fn budget_at(params: &ExperimentParams, input: &InputState, t: f64) -> f64 {
    predict_fidelity_vs_time(params, input, &[t]).unwrap()[0].1
}

fn criterion_1() -> Outcome {
    let b = compute_budget(&BudgetInputs::nominal(), &InputState::H).unwrap();
    let pass = (b.fidelity_pred - 0.90).abs() <= 0.01 && (5e-7..=1.5e-6).contains(&b.s);
    outcome(
        pass,
        format!("budget H: fidelity {:.4} (0.90 +/- 0.01), s = {:.3e} (in [5e-7, 1.5e-6])", b.fidelity_pred, b.s),
    )
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [InputState::Plus, InputState::R] {
        let b = compute_budget(&BudgetInputs::nominal(), &s).unwrap();
        pass &= (b.fidelity_pred - 0.79).abs() <= 0.02;
        parts.push(format!("{s}: {:.4}", b.fidelity_pred));
    }
    outcome(pass, format!("budget at zeta = 0.90: {} (0.79 +/- 0.02)", parts.join(", ")))
}

/// Monte Carlo estimates for H, + and R at the table storage time.
fn table_runs() -> Vec<(InputState, FidelityEstimate, f64, f64)> {
    let params = ExperimentParams::default();
    MEASURED
        .iter()
        .map(|(s, _)| {
            let run = run_teleportation(&params, s, TABLE_TIME, &settings(2024, 1e5)).unwrap();
            let oracle = budget_at(&params, s, TABLE_TIME);
            let exact = exact_teleportation(&params, s, TABLE_TIME).unwrap().fidelity;
            (*s, run.estimate, oracle, exact)
        })
        .collect()
}

fn criterion_3(runs: &[(InputState, FidelityEstimate, f64, f64)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, e, oracle, exact) in runs {
        let tol = f64::max(0.015, 3.0 * e.std_err);
        pass &= e.n_effective >= 1e5 && (e.fidelity - oracle).abs() <= tol;
        parts.push(format!(
            "{s}: MC {:.4} +/- {:.4} (n_eff {:.0}) vs oracle {:.4} [exact {:.4}]",
            e.fidelity, e.std_err, e.n_effective, oracle, exact
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4(runs: &[(InputState, FidelityEstimate, f64, f64)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for ((s, e, oracle, _), (_, measured)) in runs.iter().zip(MEASURED) {
        let mc_ok = (e.fidelity - oracle).abs() <= 0.02;
        let measured_ok = measured >= oracle - 0.06 && measured <= oracle + 0.02;
        pass &= mc_ok && measured_ok;
        parts.push(format!("{s}: oracle {:.4}, MC {:.4}, measured {measured}", oracle, e.fidelity));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let params = ExperimentParams::default();
    let hv = run_verification(&params, VerificationBasis::HV, &settings(7, 1e5)).unwrap().estimate;
    let pm = run_verification(&params, VerificationBasis::PM, &settings(7, 1e5)).unwrap().estimate;
    let hv_exact = exact_verification(&params, VerificationBasis::HV).unwrap();
    let pm_exact = exact_verification(&params, VerificationBasis::PM).unwrap();
    let mut pass = (hv.snr - 15.0).abs() <= 2.0
        && (hv_exact.snr() - 15.0).abs() <= 2.0
        && (pm.visibility - 0.822).abs() <= 0.02
        && (pm_exact.visibility() - 0.822).abs() <= 0.02
        && pm.visibility <= hv.visibility;
    // Dephasing only lowers PM. Without it the two bases agree up to the
    // basis dependence of multi-excitation terms (parts in 10^6).
    let mut ordered = 0;
    for phase_sigma in [0.0, 0.2, 0.5, 1.0] {
        for depol_readout in [0.0, 0.1, 0.3] {
            let p = ExperimentParams {
                phase_sigma,
                depol_readout,
                ..params.clone()
            };
            let h = exact_verification(&p, VerificationBasis::HV).unwrap().visibility();
            let m = exact_verification(&p, VerificationBasis::PM).unwrap().visibility();
            let ok = if phase_sigma > 0.0 { m < h } else { (m - h).abs() < 1e-5 };
            if ok {
                ordered += 1;
            } else {
                pass = false;
            }
        }
    }
    outcome(
        pass,
        format!(
            "HV SNR MC {:.2} / exact {:.2} (15 +/- 2); PM V MC {:.4} +/- {:.4} / exact {:.4} (0.822 +/- 0.02); HV V {:.4}; PM <= HV on {ordered}/12 noise settings",
            hv.snr,
            hv_exact.snr(),
            pm.visibility,
            pm.std_err,
            pm_exact.visibility(),
            hv.visibility
        ),
    )
}

fn criterion_6(r_table: &FidelityEstimate) -> Outcome {
    let params = ExperimentParams::default();
    let config = RunConfig {
        experiment: Experiment::Fig3,
        seed: 99,
        trials: 20_000,
        storage_times: vec![0.5, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
        ..RunConfig::default()
    };
    let table = run_experiment(&config).unwrap();
    let rows: Vec<_> = table.rows.iter().filter(|r| r.experiment == "fig3").collect();
    let mc: Vec<f64> = rows.iter().map(|r| r.mc_fidelity.unwrap()).collect();
    let monotone = mc.windows(2).all(|w| w[1] <= w[0]);
    let times: Vec<f64> = rows.iter().map(|r| r.storage_time_us.unwrap()).collect();
    let budget = predict_fidelity_vs_time(&params, &InputState::R, &times).unwrap();
    let oracle_is_budget = rows
        .iter()
        .zip(&budget)
        .all(|(r, (_, f))| r.oracle_fidelity.unwrap() == *f);
    let first = rows[0];
    let combined = (first.mc_stderr.unwrap().powi(2) + r_table.std_err.powi(2)).sqrt();
    let matches_table = (first.mc_fidelity.unwrap() - r_table.fidelity).abs() <= f64::max(0.015, 3.0 * combined);
    let at_8 = rows.iter().find(|r| r.storage_time_us == Some(8.0)).unwrap();
    let above = at_8.mc_fidelity.unwrap() > CLASSICAL_LIMIT && at_8.oracle_fidelity.unwrap() > CLASSICAL_LIMIT;
    let crossing = table
        .rows
        .iter()
        .find(|r| r.experiment == "fig3-crossing-mc")
        .and_then(|r| r.storage_time_us);
    let curve: Vec<String> = times.iter().zip(&mc).map(|(t, f)| format!("{t}:{f:.4}")).collect();
    outcome(
        monotone && oracle_is_budget && matches_table && above,
        format!(
            "MC f_R(t) [{}] monotone={monotone}; oracle column == budget curve: {oracle_is_budget}; f(0.5) {:.4} vs table {:.4}; f(8) MC {:.4} oracle {:.4} > 2/3; fitted MC crossing {:.2} us",
            curve.join(" "),
            first.mc_fidelity.unwrap(),
            r_table.fidelity,
            at_8.mc_fidelity.unwrap(),
            at_8.oracle_fidelity.unwrap(),
            crossing.unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_7() -> Outcome {
    let r = verify_bell_identity(100, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    outcome(
        r.passed && r.max_fidelity_error < 1e-10 && r.max_probability_error < 1e-10,
        format!(
            "100 random inputs: max 1-F {:.1e}, max |p - 1/4| {:.1e}",
            r.max_fidelity_error, r.max_probability_error
        ),
    )
}

/// Independent two-photon expansion. Output modes: 0 = a (matched),
/// 1 = b (matched), 2 = a (late), 3 = b (late). Each input creation operator
/// is replaced by its image under the beam splitter and the product expanded.
fn hom_oracle(zeta: f64, reflectivity: f64) -> f64 {
    let t = (1.0 - reflectivity).sqrt();
    let r = Complex64::new(0.0, reflectivity.sqrt());
    let tc = Complex64::new(t, 0.0);
    // a -> t a + i r b, b -> i r a + t b, per temporal bin.
    let a_matched = [(0usize, tc), (1, r)];
    let a_late = [(2usize, tc), (3, r)];
    let b_matched = [(0usize, r), (1, tc)];
    let late = (1.0 - zeta * zeta).sqrt();
    let mut poly: BTreeMap<[u8; 4], Complex64> = BTreeMap::new();
    for (first, weight) in [(&a_matched, zeta), (&a_late, late)] {
        for &(m1, c1) in first.iter() {
            for &(m2, c2) in b_matched.iter() {
                let mut occ = [0u8; 4];
                occ[m1] += 1;
                occ[m2] += 1;
                *poly.entry(occ).or_default() += c1 * c2 * weight;
            }
        }
    }
    // Monomial -> Fock amplitude: prod sqrt(n!).
    poly.iter()
        .filter(|(occ, _)| occ[0] + occ[2] >= 1 && occ[1] + occ[3] >= 1)
        .map(|(occ, c)| {
            let fact: f64 = occ.iter().map(|&n| (1..=n as u32).product::<u32>() as f64).product();
            c.norm_sqr() * fact
        })
        .sum()
}

fn hom_simulated(zeta: f64, reflectivity: f64) -> f64 {
    let input = wcp_state(1, &PolarizationQubit::h(), zeta, 2).unwrap();
    let anti_stokes = FockState::basis(&[AS_H], 2, &[(AS_H, 1)]).unwrap();
    let out = apply_beam_splitter(&input.tensor(&anti_stokes).unwrap(), ModeName::InH, ModeName::AsH, reflectivity).unwrap();
    let modes = out.modes().to_vec();
    out.terms()
        .filter(|(occ, _)| {
            let count = |name: ModeName| -> u8 {
                modes
                    .iter()
                    .zip(occ.iter())
                    .filter(|(m, _)| m.name == name)
                    .map(|(_, n)| *n)
                    .sum()
            };
            count(ModeName::InH) >= 1 && count(ModeName::AsH) >= 1
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

fn bell_input(which: BellState) -> FockState {
    let modes: [ModeLabel; 4] = [IN_H, IN_V, AS_H, AS_V];
    let c = which.components();
    let terms = [
        (vec![1, 0, 1, 0], c[0]),
        (vec![1, 0, 0, 1], c[1]),
        (vec![0, 1, 1, 0], c[2]),
        (vec![0, 1, 0, 1], c[3]),
    ]
    .into_iter()
    .filter(|(_, a)| *a != 0.0)
    .map(|(o, a)| (o, Complex64::new(a, 0.0)));
    FockState::from_terms(&modes, 2, terms).unwrap()
}

fn criterion_8() -> Outcome {
    let mut max_err = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut zetas = vec![0.0, 0.25, 0.5, 0.75, 0.9, 1.0];
    zetas.extend((0..20).map(|_| rng.random::<f64>()));
    for &z in &zetas {
        for r in [0.5, 0.3] {
            max_err = max_err.max((hom_oracle(z, r) - hom_simulated(z, r)).abs());
        }
    }
    let at_one = hom_simulated(1.0, 0.5);
    let at_zero = hom_simulated(0.0, 0.5);

    let model = DetectorModel::ideal();
    let mut table_ok = true;
    let mut rows = Vec::new();
    for which in BellState::ALL {
        let optics = apply_bsm_optics(&bell_input(which), 0.0).unwrap();
        let mut probs = [0.0; 3];
        for (pattern, p) in click_distribution(&optics, &BSM_MONITORS, &model).unwrap() {
            let i = match classify_bsm(pattern) {
                BsmOutcome::PsiPlus => 0,
                BsmOutcome::PsiMinus => 1,
                BsmOutcome::NoResult => 2,
            };
            probs[i] += p;
        }
        let expected = match which {
            // Both singlet-type states are resolved with certainty by
            // polarization-resolving detection; the triplet pair never is.
            BellState::PsiPlus => [1.0, 0.0, 0.0],
            BellState::PsiMinus => [0.0, 1.0, 0.0],
            _ => [0.0, 0.0, 1.0],
        };
        table_ok &= probs.iter().zip(expected).all(|(p, e)| (p - e).abs() < 1e-12);
        rows.push(format!("{which:?} -> (+{:.3}, -{:.3}, none {:.3})", probs[0], probs[1], probs[2]));
    }
    outcome(
        at_one.abs() < 1e-12 && (at_zero - 0.5).abs() < 1e-12 && max_err < 1e-10 && table_ok,
        format!(
            "HOM coincidence {at_one:.1e} at zeta=1, {at_zero:.4} at zeta=0, max |sim - expansion| {max_err:.1e} over {} points; {}",
            2 * zetas.len(),
            rows.join(", ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut h = Vec::new();
    let mut plus = Vec::new();
    for zeta in [1.0, 0.9, 0.5] {
        let p = ExperimentParams {
            zeta,
            ..ExperimentParams::default()
        };
        h.push(run_teleportation(&p, &InputState::H, TABLE_TIME, &settings(31, 3e4)).unwrap().estimate);
        plus.push(run_teleportation(&p, &InputState::Plus, TABLE_TIME, &settings(31, 3e4)).unwrap().estimate);
    }
    let mut invariant = true;
    for i in 0..3 {
        for j in i + 1..3 {
            let s = (h[i].std_err.powi(2) + h[j].std_err.powi(2)).sqrt();
            invariant &= (h[i].fidelity - h[j].fidelity).abs() <= 3.0 * s;
        }
    }
    let decreasing = plus[0].fidelity > plus[1].fidelity && plus[1].fidelity > plus[2].fidelity;
    let fmt = |v: &[FidelityEstimate]| {
        v.iter()
            .map(|e| format!("{:.4}+/-{:.4}", e.fidelity, e.std_err))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        invariant && decreasing,
        format!("zeta = 1.0, 0.9, 0.5: H [{}]; + [{}]", fmt(&h), fmt(&plus)),
    )
}

fn criterion_10() -> Outcome {
    let params = ExperimentParams::default();
    let budget = BudgetInputs::from_params(&params).unwrap();
    let mut sim = Vec::new();
    let mut analytic = Vec::new();
    for s in InputState::POLES {
        sim.push(exact_teleportation(&params, &s, 0.0).unwrap().herald_confidence());
        analytic.push(compute_budget(&budget, &s).unwrap().herald_confidence);
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (sim_avg, analytic_avg) = (avg(&sim), avg(&analytic));
    let pass = (0.25..=0.55).contains(&sim_avg)
        && (0.25..=0.55).contains(&analytic_avg)
        && sim[0] > sim[2]
        && analytic[0] > analytic[2];
    outcome(
        pass,
        format!(
            "six-pole average: simulator {sim_avg:.3}, budget {analytic_avg:.3} (in [0.25, 0.55]); H {:.3} > + {:.3} (simulator)",
            sim[0], sim[2]
        ),
    )
}

fn criterion_11() -> Outcome {
    let csv_for = |workers: usize| {
        let config = RunConfig {
            experiment: Experiment::Table1,
            seed: 17,
            trials: 3000,
            workers,
            ..RunConfig::default()
        };
        let mut buf = Vec::new();
        write_results(&run_experiment(&config).unwrap(), OutputFormat::Csv, &mut buf).unwrap();
        buf
    };
    let reference = csv_for(1);
    let deterministic = reference == csv_for(1) && reference == csv_for(4);

    // 100x the three-fold rate: 10x anti-Stokes and 10x single-photon input.
    let boosted = ExperimentParams {
        chi: chi_for_p_as(0.03),
        mu: mu_for_p0(0.3),
        ..ExperimentParams::default()
    };
    let input = InputState::Plus;
    let conditioned = run_teleportation(&boosted, &input, TABLE_TIME, &settings(3, 2e4)).unwrap().estimate;
    let raw_settings = RunSettings {
        mode: SamplingMode::Raw,
        ..RunSettings::fixed(3, 3_000_000, 1, SamplingMode::Raw)
    };
    let raw = run_teleportation(&boosted, &input, TABLE_TIME, &raw_settings).unwrap().estimate;
    let combined = (raw.std_err.powi(2) + conditioned.std_err.powi(2)).sqrt();
    let unbiased = (raw.fidelity - conditioned.fidelity).abs() <= 3.0 * combined;
    outcome(
        deterministic && unbiased,
        format!(
            "table1 CSV byte-identical for workers 1/1/4: {deterministic}; boosted +: conditioned {:.4} +/- {:.4}, raw {:.4} +/- {:.4} ({:.0} events), |diff| <= 3 sigma: {unbiased}",
            conditioned.fidelity, conditioned.std_err, raw.fidelity, raw.std_err, raw.n_effective
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, Outcome)> = vec![(1, criterion_1()), (2, criterion_2())];
    let runs = table_runs();
    results.push((3, criterion_3(&runs)));
    results.push((4, criterion_4(&runs)));
    results.push((5, criterion_5()));
    let r_table = runs.iter().find(|r| r.0 == InputState::R).unwrap().1;
    results.push((6, criterion_6(&r_table)));
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));
    results.push((10, criterion_10()));
    results.push((11, criterion_11()));
    let mut failed = 0;
    for (n, o) in &results {
        println!("criterion {n:>2}: {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.0?}",
        results.len() - failed,
        start.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
