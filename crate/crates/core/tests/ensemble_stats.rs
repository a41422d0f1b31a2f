//! Statistical checks of the ensemble simulator against the exact formulas.
//! Every comparison uses 5 binomial standard errors at n >= 10⁴.

use ppsq::abl::abl_distribution;
use ppsq::ensemble::{
    conditional_post_selection, mutual_exclusivity_audit, simulate_ensemble, simulate_run,
    RunRecord, SimSeed,
};
use ppsq::hilbert::{apply_projector, inner_product, StateVector};
use ppsq::scenario::{n_plus_one_box, three_box, Scenario};

const SIGMAS: f64 = 5.0;
const RUNS: u64 = 40_000;

fn check_convergence(s: &Scenario, obs_name: &str, seed: u64) {
    let obs = s.observable(obs_name).unwrap();
    let stats = simulate_ensemble(s, obs_name, RUNS, SimSeed(seed)).unwrap();
    assert_eq!(stats.counts.iter().map(|c| c.total()).sum::<u64>(), RUNS);
    let tsv = s.two_state_vector().unwrap();
    let abl = abl_distribution(&tsv, obs).ok();

    for (k, e) in obs.events.iter().enumerate() {
        let proj = apply_projector(&e.projector, &s.pre).unwrap();
        let born = proj.norm_sq;
        let f = stats.outcome_frequency(&e.label).unwrap();
        assert!(
            f.sigma_distance(born) < SIGMAS,
            "{obs_name}/{}: freq {} vs Born {born}",
            e.label,
            f.value
        );

        // oracle: |⟨post|updated⟩|² from the normalized projected vector
        let expected_post = if born > 0.0 {
            let updated = StateVector::normalized(proj.vector.clone()).unwrap();
            inner_product(&s.post, &updated).unwrap().norm_sqr()
        } else {
            0.0
        };
        let cond = stats.conditional_post_frequency(&e.label).unwrap();
        if cond.trials > 0 {
            assert!(
                cond.sigma_distance(expected_post) < SIGMAS,
                "{obs_name}/{}: post|outcome {} vs {expected_post}",
                e.label,
                cond.value
            );
        }
        if expected_post < 1e-14 {
            assert_eq!(stats.count(&e.label, true).unwrap(), 0);
        }

        if let Some(abl) = &abl {
            let share = stats.post_selected_frequency(&e.label).unwrap();
            if share.trials > 0 {
                assert!(
                    share.sigma_distance(abl[k]) < SIGMAS,
                    "{obs_name}/{}: post-selected share {} vs ABL {}",
                    e.label,
                    share.value,
                    abl[k]
                );
            }
        }
    }
}

#[test]
fn three_box_converges() {
    let s = three_box();
    check_convergence(&s, "A", 11);
    check_convergence(&s, "B", 12);
}

#[test]
fn n_box_converges() {
    for n in [3, 5] {
        let s = n_plus_one_box(n).unwrap();
        for (i, obs) in s.observables.iter().enumerate() {
            check_convergence(&s, &obs.name, 100 + i as u64);
        }
    }
}

#[test]
fn generic_scenario_converges() {
    // pre/post in general position so every branch has nonzero rates
    let mut s = three_box();
    s.post = StateVector::from_real(&[0.6, 0.0, 0.8]).unwrap();
    check_convergence(&s, "A", 5);
    check_convergence(&s, "B", 6);
}

#[test]
fn conditional_post_rate_for_found_in_a() {
    let s = three_box();
    let q = conditional_post_selection(&s, "A", 0).unwrap();
    let a = StateVector::basis(3, 0).unwrap();
    let oracle = inner_product(&s.post, &a).unwrap().norm_sqr();
    assert!((q - oracle).abs() < 1e-15);
    assert!(((1.0 / 9.0) / (1.0 / 3.0) - q).abs() < 1e-15);
}

#[test]
fn mixed_runs_audit_clean() {
    let s = three_box();
    let seed = SimSeed(2718);
    let records: Vec<RunRecord> = (0..90_000u64)
        .map(|i| {
            let name = if i % 2 == 0 { "A" } else { "B" };
            simulate_run(&s, name, i, &mut seed.stream(i)).unwrap()
        })
        .collect();
    let report = mutual_exclusivity_audit(&s, &records).unwrap();
    assert!(report.clean(), "{:?}", report.violations);
    assert_eq!(report.records, 90_000);
    assert!(report.post_selected > 0);
    let by_a = &report.post_selected_by_branch["A"];
    assert_eq!(by_a.keys().collect::<Vec<_>>(), vec!["a"]);
    let by_b = &report.post_selected_by_branch["B"];
    assert_eq!(by_b.keys().collect::<Vec<_>>(), vec!["b"]);
}

#[test]
fn parallel_and_serial_tallies_agree() {
    let s = n_plus_one_box(4).unwrap();
    let seed = SimSeed(99);
    let parallel = simulate_ensemble(&s, "box3", 20_000, seed).unwrap();
    let mut serial = vec![[0u64; 2]; 2];
    for i in 0..20_000u64 {
        let r = simulate_run(&s, "box3", i, &mut seed.stream(i)).unwrap();
        let k = if r.outcome == "in_3" { 0 } else { 1 };
        serial[k][r.post_selected as usize] += 1;
    }
    for (c, row) in parallel.counts.iter().zip(&serial) {
        assert_eq!(c.rejected, row[0]);
        assert_eq!(c.post_selected, row[1]);
    }
}
