//! Greedy slack-driven Vth replacement: residue behavior in both modes,
//! safety of the pessimistic evaluation, determinism, and a cross-check
//! against exhaustive assignment search on small designs.

mod common;

use common::{derated_worst_slack, variant_leakage, DesignBuilder};
use smt_core::assign::{
    assign_dual_vth, assign_vth, derated_all_low_critical_delay, dual_vth_only_mode,
    initialize_low_vth, AssignMode, AssignOptions,
};
use smt_core::generator::generate_benchmark;
use smt_core::interconnect::estimate_rc_preroute;
use smt_core::model::*;
use smt_core::timing::run_sta;
use smt_core::SmtError;

const FULL: AssignOptions = AssignOptions {
    anticipate_bounce: true,
    anticipate_holders: true,
};
#[test]
fn single_cell_with_huge_slack_goes_high_vth() {
    let mut d = common::inv_chain(1, 1_000_000);
    initialize_low_vth(&mut d);
    assign_dual_vth(&mut d).unwrap();
    assert_eq!(d.cells[0].variant, VthVariant::HighVth);
    assert_eq!(d.flow_stage, FlowStage::Assigned);
}

#[test]
fn zero_derated_slack_keeps_the_whole_residue() {
    // t_clk placed exactly at the derated all-low critical delay: no swap can
    // survive, so every cell stays in the residue.
    let mut d = common::inv_chain(5, 1);
    initialize_low_vth(&mut d);
    d.constraints.t_clk = derated_all_low_critical_delay(&d, FULL);

    let mut selective = d.clone();
    assign_dual_vth(&mut selective).unwrap();
    assert!(selective
        .cells
        .iter()
        .all(|c| c.variant == VthVariant::MtNoVgnd));

    let mut dual = d.clone();
    dual_vth_only_mode(&mut dual).unwrap();
    assert!(dual.cells.iter().all(|c| c.variant == VthVariant::LowVth));
}

#[test]
fn initialize_is_idempotent_and_resets_variants() {
    let mut d = common::inv_chain(4, 1_000_000);
    d.cells[1].variant = VthVariant::HighVth;
    initialize_low_vth(&mut d);
    assert!(d.cells.iter().all(|c| c.variant == VthVariant::LowVth));
    assert_eq!(d.flow_stage, FlowStage::AllLow);
    let snapshot = d.clone();
    initialize_low_vth(&mut d);
    assert_eq!(d, snapshot);
}

#[test]
fn assignment_requires_the_all_low_stage() {
    let mut d = common::inv_chain(3, 1_000_000);
    assert!(matches!(
        assign_vth(&mut d, AssignMode::SelectiveMt, FULL),
        Err(SmtError::Contract(_))
    ));
}

#[test]
fn infeasible_clock_is_rejected_with_the_endpoint_named() {
    let mut d = common::inv_chain(3, 1);
    initialize_low_vth(&mut d);
    match assign_dual_vth(&mut d) {
        Err(SmtError::InfeasibleTiming(msg)) => {
            assert!(msg.contains("n2"), "worst endpoint missing from `{msg}`")
        }
        other => panic!("expected infeasible timing, got {other:?}"),
    }
}

#[test]
fn dual_vth_leakage_never_exceeds_all_low() {
    for seed in 0..10 {
        let mut d = generate_benchmark(40, 4, seed, 0.9).unwrap();
        initialize_low_vth(&mut d);
        let before = variant_leakage(&d);
        dual_vth_only_mode(&mut d).unwrap();
        assert!(variant_leakage(&d) <= before, "seed {seed}");
    }
}

#[test]
fn assignment_is_deterministic() {
    let mut a = generate_benchmark(60, 5, 9, 0.85).unwrap();
    let mut b = a.clone();
    initialize_low_vth(&mut a);
    initialize_low_vth(&mut b);
    assign_dual_vth(&mut a).unwrap();
    assign_dual_vth(&mut b).unwrap();
    assert_eq!(a, b);
}

/// After assignment the design must meet timing both under the pessimistic
/// model (independent path-enumeration check) and under plain pre-route
/// timing with zero bounce.
#[test]
fn assignment_preserves_timing_safety() {
    for seed in 0..15 {
        let tightness = 0.8 + 0.02 * (seed % 10) as f64;
        let mut d = generate_benchmark(30 + (seed as usize * 7) % 60, 4, seed, tightness).unwrap();
        initialize_low_vth(&mut d);
        assign_dual_vth(&mut d).unwrap();

        assert!(
            derated_worst_slack(&d, true, true) >= 0,
            "seed {seed}: derated slack negative after assignment"
        );

        let par = estimate_rc_preroute(&d);
        let bounce = vec![0.0; d.cells.len()];
        let ta = run_sta(&d, &par, &bounce).unwrap();
        assert!(
            ta.worst_setup_slack >= 0,
            "seed {seed}: plain pre-route slack negative"
        );
    }
}

/// Exhaustive cross-check on tiny designs: every assignment the greedy
/// produces is feasible under the independent derated model, and its leakage
/// is close to the best over all 2^n high/low assignments.
#[test]
fn greedy_tracks_the_exhaustive_optimum_on_tiny_designs() {
    for seed in 100..112 {
        let mut d = generate_benchmark(8, 2, seed, 0.9).unwrap();
        initialize_low_vth(&mut d);

        let logic: Vec<usize> = (0..d.cells.len())
            .filter(|&ci| {
                let f = d.kind_of(&d.cells[ci]).function;
                f.is_logic() && f != LogicFunction::Dff
            })
            .collect();
        assert!(logic.len() <= 12);

        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << logic.len()) {
            let mut trial = d.clone();
            for (bit, &ci) in logic.iter().enumerate() {
                trial.cells[ci].variant = if mask >> bit & 1 == 1 {
                    VthVariant::HighVth
                } else {
                    VthVariant::LowVth
                };
            }
            if derated_worst_slack(&trial, true, true) >= 0 {
                let leak = variant_leakage(&trial);
                best = Some(best.map_or(leak, |b: f64| b.min(leak)));
            }
        }
        let best = best.expect("all-low must be feasible");

        let mut greedy = d.clone();
        assign_vth(&mut greedy, AssignMode::DualVthOnly, FULL).unwrap();
        assert!(derated_worst_slack(&greedy, true, true) >= 0, "seed {seed}");
        let got = variant_leakage(&greedy);
        assert!(
            got <= best * 1.5 + 1e-9,
            "seed {seed}: greedy {got} vs optimum {best}"
        );
    }
}

/// The two residue policies differ only in what the leftover low-Vth cells
/// become; the set of converted cells is identical.
#[test]
fn residue_policy_does_not_change_the_converted_set() {
    let mut a = generate_benchmark(50, 4, 21, 0.85).unwrap();
    initialize_low_vth(&mut a);
    let mut b = a.clone();
    assign_vth(&mut a, AssignMode::SelectiveMt, FULL).unwrap();
    assign_vth(&mut b, AssignMode::DualVthOnly, FULL).unwrap();
    for (ca, cb) in a.cells.iter().zip(b.cells.iter()) {
        match (ca.variant, cb.variant) {
            (VthVariant::HighVth, VthVariant::HighVth) => {}
            (VthVariant::MtNoVgnd, VthVariant::LowVth) => {}
            (va, vb) => {
                // non-candidates (registers) keep their variant in both
                assert_eq!(va, vb, "cell {}", ca.id);
            }
        }
    }
}

#[test]
fn one_cell_design_builder_variant_is_respected() {
    // a high-Vth seed variant is reset by initialization, not by assignment
    let mut d = DesignBuilder::new()
        .constraints(|c| c.t_clk = 1_000_000)
        .input("a")
        .cell("u0", "INV", VthVariant::HighVth, (1.0, 1.0), &[("A", "a"), ("Y", "y")])
        .output("y")
        .build();
    initialize_low_vth(&mut d);
    assert_eq!(d.cells[0].variant, VthVariant::LowVth);
}
