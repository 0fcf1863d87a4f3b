//! Randomized property tests over generated designs and the numeric models.

mod common;

use proptest::prelude::*;
use smt_core::assign::{assign_dual_vth, initialize_low_vth};
use smt_core::generator::generate_benchmark;
use smt_core::interconnect::detour_factor;
use smt_core::io::{parse_design, write_design};
use smt_core::library::default_library;
use smt_core::model::*;
use smt_core::timing::{gate_delay, NetParasitics, RcStage};
use smt_core::transform::insert_holders;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Writing and re-parsing any generated design is the identity, and the
    /// serialization is stable.
    #[test]
    fn write_parse_round_trip(
        n in 5usize..80,
        layers in 1usize..8,
        seed in any::<u64>(),
        tightness in 0.75f64..1.0,
    ) {
        let d = generate_benchmark(n, layers, seed, tightness).unwrap();
        let text = write_design(&d);
        let parsed = parse_design(&text).unwrap();
        prop_assert_eq!(&parsed, &d);
        prop_assert_eq!(write_design(&parsed), text);
    }

    /// After holder insertion, a net carries a holder exactly when its driver
    /// is an MT-cell and it has at least one non-MT consumer (logic sink or
    /// primary output) — and never more than one holder.
    #[test]
    fn holder_rule_is_an_iff(
        n in 10usize..60,
        seed in any::<u64>(),
        tightness in 0.8f64..1.0,
    ) {
        let mut d = generate_benchmark(n, 4, seed, tightness).unwrap();
        initialize_low_vth(&mut d);
        assign_dual_vth(&mut d).unwrap();
        let pre_holder = d.clone();
        insert_holders(&mut d).unwrap();

        let conn = pre_holder.connectivity();
        let net_idx = d.net_index();
        let mut holder_count = vec![0usize; d.nets.len()];
        for cell in &d.cells {
            if cell.kind == "HOLDER" {
                holder_count[net_idx[cell.pins["A"].as_str()]] += 1;
            }
        }
        for (ni, net) in pre_holder.nets.iter().enumerate() {
            let nc = &conn.nets[ni];
            let mt_driver = matches!(&nc.driver, Some(NetDriver::Cell(ci, _))
                if pre_holder.cells[*ci].variant.is_mt());
            let non_mt_consumer = nc.is_primary_output
                || nc.sinks.iter().any(|(si, _)| !pre_holder.cells[*si].variant.is_mt());
            let expected = usize::from(mt_driver && non_mt_consumer);
            let out_ni = net_idx[net.id.as_str()];
            prop_assert_eq!(holder_count[out_ni], expected, "net {}", net.id);
            prop_assert_eq!(d.nets[out_ni].holder_attached, expected == 1);
        }
    }

    /// Stage delay is monotone in intrinsic delay, load, wire parasitics, and
    /// (for MT variants) rail bounce.
    #[test]
    fn gate_delay_monotonicity(
        d0 in 1.0f64..200.0,
        extra_d0 in 0.0f64..100.0,
        c_pins in 0.0f64..50.0,
        extra_c in 0.0f64..50.0,
        r_net in 0.0f64..5000.0,
        c_net in 0.0f64..50.0,
        bounce in 0.0f64..0.1,
        extra_bounce in 0.0f64..0.1,
    ) {
        let lib = default_library();
        let mut kind = lib.kinds["INV"].clone();
        kind.low_vth.d0 = d0;
        kind.high_vth.d0 = d0 + extra_d0 + 1.0;
        let net = NetParasitics { r_net, c_net, routed_length: 0.0, stage: RcStage::PostRoute };
        let zero = NetParasitics::zero(RcStage::PreRoute);

        let base = gate_delay(&kind, VthVariant::LowVth, c_pins, &zero, 0.0, 2.0, 1.0);
        let loaded = gate_delay(&kind, VthVariant::LowVth, c_pins + extra_c, &zero, 0.0, 2.0, 1.0);
        prop_assert!(loaded >= base);

        let wired = gate_delay(&kind, VthVariant::LowVth, c_pins, &net, 0.0, 2.0, 1.0);
        prop_assert!(wired >= base);

        let hvt = gate_delay(&kind, VthVariant::HighVth, c_pins, &net, 0.0, 2.0, 1.0);
        prop_assert!(hvt >= wired);

        let mt_lo = gate_delay(&kind, VthVariant::MtWithVgnd, c_pins, &net, bounce, 2.0, 1.0);
        let mt_hi = gate_delay(&kind, VthVariant::MtWithVgnd, c_pins, &net, bounce + extra_bounce, 2.0, 1.0);
        prop_assert!(mt_lo >= wired, "bounce may only slow an MT-cell down");
        prop_assert!(mt_hi >= mt_lo);
    }

    /// The routing-detour factor stays within [1, 1 + detour_max) and only
    /// depends on (seed, net id, detour_max).
    #[test]
    fn detour_factor_bounds(
        seed in any::<u64>(),
        id in "[a-z][a-z0-9_]{0,12}",
        detour_max in 0.0f64..0.5,
    ) {
        let f = detour_factor(seed, &id, detour_max);
        prop_assert!(f >= 1.0);
        prop_assert!(f <= 1.0 + detour_max);
        prop_assert_eq!(f, detour_factor(seed, &id, detour_max));
    }

    /// Generated benchmarks are always structurally valid and meet their own
    /// clock at the all-low starting point.
    #[test]
    fn generated_benchmarks_are_valid(
        n in 5usize..100,
        layers in 1usize..6,
        seed in any::<u64>(),
        tightness in 0.75f64..1.0,
    ) {
        let d = generate_benchmark(n, layers, seed, tightness).unwrap();
        prop_assert!(smt_core::validate::validate(&d).is_empty());
        prop_assert!(d.cells.len() >= n);
    }
}
