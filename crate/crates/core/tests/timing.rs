//! Delay-model and static-timing tests: closed-form stage delays, chain and
//! reconvergence propagation, criticality selection, and oracle equivalence
//! against exhaustive path enumeration.

mod common;

use common::{brute_force_arrivals, DesignBuilder};
use smt_core::generator::generate_benchmark;
use smt_core::interconnect::estimate_rc_preroute;
use smt_core::model::*;
use smt_core::timing::{critical_cells, gate_delay, run_sta, NetParasitics, RcStage};

fn test_kind() -> CellKind {
    let p = VariantParams {
        area: 2.0,
        leak_standby: 20.0,
        d0: 50.0,
        r_drive: 1.0,
        c_in: 2.0,
        i_peak: 0.5,
    };
    CellKind {
        name: "T".into(),
        function: LogicFunction::Inv,
        inputs: vec!["A".into()],
        output: Some("Y".into()),
        high_vth: VariantParams {
            d0: 70.0,
            r_drive: 1.3,
            leak_standby: 1.0,
            ..p
        },
        low_vth: p,
    }
}

#[test]
fn stage_delay_closed_form() {
    let kind = test_kind();
    let net = NetParasitics::zero(RcStage::PreRoute);
    // d0 50 + 1 kΩ · 10 fF = 60 ps
    let d = gate_delay(&kind, VthVariant::LowVth, 10.0, &net, 0.0, 2.0, 1.0);
    assert_eq!(d, 60);
    // bounce multiplier 1 + 2·0.05/1.0 = 1.1 → 66 ps
    let d = gate_delay(&kind, VthVariant::MtWithVgnd, 10.0, &net, 0.05, 2.0, 1.0);
    assert_eq!(d, 66);
    // zero bounce: the MT variant matches low-Vth exactly
    let d = gate_delay(&kind, VthVariant::MtNoVgnd, 10.0, &net, 0.0, 2.0, 1.0);
    assert_eq!(d, 60);
}

#[test]
fn stage_delay_uses_wire_rc() {
    let kind = test_kind();
    let net = NetParasitics {
        r_net: 2000.0, // Ω → 2 kΩ
        c_net: 5.0,
        routed_length: 10.0,
        stage: RcStage::PostRoute,
    };
    // 50 + 1·(5 + 10) + 2·10 = 85
    let d = gate_delay(&kind, VthVariant::LowVth, 10.0, &net, 0.0, 2.0, 1.0);
    assert_eq!(d, 85);
}

#[test]
fn stage_delay_variant_ordering_and_bounce_monotonicity() {
    let kind = test_kind();
    let net = NetParasitics::zero(RcStage::PreRoute);
    let hvt = gate_delay(&kind, VthVariant::HighVth, 10.0, &net, 0.0, 2.0, 1.0);
    let lvt = gate_delay(&kind, VthVariant::LowVth, 10.0, &net, 0.0, 2.0, 1.0);
    let mt = gate_delay(&kind, VthVariant::MtWithVgnd, 10.0, &net, 0.0, 2.0, 1.0);
    assert!(hvt > lvt);
    assert_eq!(mt, lvt);
    let mut prev = mt;
    for i in 1..=10 {
        let v = 0.005 * i as f64;
        let d = gate_delay(&kind, VthVariant::MtWithVgnd, 10.0, &net, v, 2.0, 1.0);
        assert!(d >= prev, "MT delay must not decrease with bounce");
        prev = d;
        // non-MT variants ignore bounce entirely
        let h = gate_delay(&kind, VthVariant::HighVth, 10.0, &net, v, 2.0, 1.0);
        assert_eq!(h, hvt);
    }
    assert!(prev > mt, "bounce must increase MT delay overall");
}

/// Two identical stages: arrival is the sum of both stage delays.
#[test]
fn chain_arrival_is_sum_of_stages() {
    let design = DesignBuilder::new()
        .constraints(|c| c.t_clk = 1000)
        .input("a")
        .cell("u0", "INV", VthVariant::LowVth, (10.0, 10.0), &[("A", "a"), ("Y", "n0")])
        .cell("u1", "INV", VthVariant::LowVth, (10.0, 10.0), &[("A", "n0"), ("Y", "n1")])
        .output("n1")
        .build();
    let par = vec![NetParasitics::zero(RcStage::PreRoute); design.nets.len()];
    let bounce = vec![0.0; design.cells.len()];
    let ta = run_sta(&design, &par, &bounce).unwrap();
    let net_idx = design.net_index();
    // INV low-Vth: d0 30; u0 drives u1 (c_in 2) → 32; u1 drives the PO (no
    // pin load) → 30; total 62.
    assert_eq!(ta.arrival_max[net_idx["n0"]], 32);
    assert_eq!(ta.arrival_max[net_idx["n1"]], 62);
    assert_eq!(ta.worst_setup_slack, 1000 - 62);
}

/// Reconvergent paths: max takes the slow branch, min the fast one.
#[test]
fn diamond_max_min() {
    let design = DesignBuilder::new()
        .constraints(|c| c.t_clk = 1000)
        .input("a")
        .cell("fast", "INV", VthVariant::LowVth, (10.0, 10.0), &[("A", "a"), ("Y", "nf")])
        // slow branch: two inverters
        .cell("s0", "INV", VthVariant::LowVth, (20.0, 10.0), &[("A", "a"), ("Y", "ns0")])
        .cell("s1", "INV", VthVariant::LowVth, (30.0, 10.0), &[("A", "ns0"), ("Y", "ns1")])
        .cell("join", "NAND2", VthVariant::LowVth, (40.0, 10.0), &[("A", "nf"), ("B", "ns1"), ("Y", "y")])
        .output("y")
        .build();
    let par = vec![NetParasitics::zero(RcStage::PreRoute); design.nets.len()];
    let bounce = vec![0.0; design.cells.len()];
    let ta = run_sta(&design, &par, &bounce).unwrap();
    let net_idx = design.net_index();
    // fast: 30 + 1·2 = 32; slow: (30+2) + (30+2) = 64; join adds 45.
    assert_eq!(ta.arrival_max[net_idx["y"]], 64 + 45);
    assert_eq!(ta.arrival_min[net_idx["y"]], 32 + 45);
}

#[test]
fn critical_cells_selection() {
    // Diamond where only the slow branch is inside the margin.
    let design = DesignBuilder::new()
        .constraints(|c| c.t_clk = 109) // slack(y) = 0 via the slow branch
        .input("a")
        .cell("fast", "INV", VthVariant::LowVth, (10.0, 10.0), &[("A", "a"), ("Y", "nf")])
        .cell("s0", "INV", VthVariant::LowVth, (20.0, 10.0), &[("A", "a"), ("Y", "ns0")])
        .cell("s1", "INV", VthVariant::LowVth, (30.0, 10.0), &[("A", "ns0"), ("Y", "ns1")])
        .cell("join", "NAND2", VthVariant::LowVth, (40.0, 10.0), &[("A", "nf"), ("B", "ns1"), ("Y", "y")])
        .output("y")
        .build();
    let par = vec![NetParasitics::zero(RcStage::PreRoute); design.nets.len()];
    let bounce = vec![0.0; design.cells.len()];
    let ta = run_sta(&design, &par, &bounce).unwrap();
    let crit = critical_cells(&design, &ta, 10);
    assert_eq!(crit, vec!["join", "s0", "s1"]);
    // with a huge margin everything is critical; with none, nothing is
    assert_eq!(critical_cells(&design, &ta, 0), Vec::<String>::new());
    assert_eq!(critical_cells(&design, &ta, 1_000_000).len(), 4);
}

#[test]
fn zero_slack_chain_is_fully_critical() {
    let design = common::inv_chain(4, 1000);
    let par = vec![NetParasitics::zero(RcStage::PreRoute); design.nets.len()];
    let bounce = vec![0.0; design.cells.len()];
    let ta = run_sta(&design, &par, &bounce).unwrap();
    let mut tight = design.clone();
    tight.constraints.t_clk = 1000 - ta.worst_setup_slack; // slack exactly 0
    let ta = run_sta(&tight, &par, &bounce).unwrap();
    assert_eq!(ta.worst_setup_slack, 0);
    assert_eq!(critical_cells(&tight, &ta, 1).len(), 4);
}

#[test]
fn sta_matches_path_enumeration_on_small_dags() {
    for seed in 0..40 {
        let n = 3 + (seed as usize % 10);
        let design = generate_benchmark(n, 1 + seed as usize % 4, seed, 0.9).unwrap();
        let par = estimate_rc_preroute(&design);
        let bounce = vec![0.0; design.cells.len()];
        let ta = run_sta(&design, &par, &bounce).unwrap();
        let oracle = brute_force_arrivals(&design, &par, &bounce);
        for ni in 0..design.nets.len() {
            match oracle[ni] {
                Some((omax, omin)) => {
                    assert!(ta.timed[ni], "net {} should be timed", design.nets[ni].id);
                    assert_eq!(ta.arrival_max[ni], omax, "max on {}", design.nets[ni].id);
                    assert_eq!(ta.arrival_min[ni], omin, "min on {}", design.nets[ni].id);
                }
                None => assert!(!ta.timed[ni]),
            }
        }
    }
}

#[test]
fn d0_monotonicity() {
    let base = generate_benchmark(20, 4, 7, 0.9).unwrap();
    let par = estimate_rc_preroute(&base);
    let bounce = vec![0.0; base.cells.len()];
    let before = run_sta(&base, &par, &bounce).unwrap();
    let mut slower = base.clone();
    slower.library.kinds.get_mut("NAND2").unwrap().low_vth.d0 += 25.0;
    let after = run_sta(&slower, &par, &bounce).unwrap();
    for ni in 0..base.nets.len() {
        if before.timed[ni] {
            assert!(after.arrival_max[ni] >= before.arrival_max[ni]);
        }
    }
}

#[test]
fn sta_rejects_mismatched_inputs() {
    let design = common::inv_chain(2, 1000);
    let par = vec![NetParasitics::zero(RcStage::PreRoute); design.nets.len() - 1];
    let bounce = vec![0.0; design.cells.len()];
    assert!(run_sta(&design, &par, &bounce).is_err());
    let par = vec![NetParasitics::zero(RcStage::PreRoute); design.nets.len()];
    assert!(run_sta(&design, &par, &[0.0]).is_err());
}

#[test]
fn registers_cut_paths() {
    let design = DesignBuilder::new()
        .constraints(|c| c.t_clk = 100)
        .input("a")
        .cell("u0", "INV", VthVariant::LowVth, (10.0, 10.0), &[("A", "a"), ("Y", "n0")])
        .cell("r0", "DFF", VthVariant::LowVth, (20.0, 10.0), &[("D", "n0"), ("Q", "q0")])
        .cell("u1", "INV", VthVariant::LowVth, (30.0, 10.0), &[("A", "q0"), ("Y", "n1")])
        .output("n1")
        .build();
    let par = vec![NetParasitics::zero(RcStage::PreRoute); design.nets.len()];
    let bounce = vec![0.0; design.cells.len()];
    let ta = run_sta(&design, &par, &bounce).unwrap();
    let net_idx = design.net_index();
    // n0 is a register-input endpoint; q0 restarts at 0.
    assert!(ta.endpoint_nets.contains(&net_idx["n0"]));
    assert_eq!(ta.arrival_max[net_idx["q0"]], 0);
    assert_eq!(ta.arrival_max[net_idx["n1"]], 30);
}
