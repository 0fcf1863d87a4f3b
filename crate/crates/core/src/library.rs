//! Bundled default cell library. Ratios (80× leakage between Vth variants,
//! 1.4× intrinsic delay) are typical dual-Vth defaults; everything here is
//! configuration, replaceable through the design file.

use crate::model::*;

fn kind(
    name: &str,
    function: LogicFunction,
    inputs: &[&str],
    output: Option<&str>,
    area: f64,
    d0_low: f64,
) -> CellKind {
    CellKind {
        name: name.to_string(),
        function,
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        output: output.map(|s| s.to_string()),
        low_vth: VariantParams {
            area,
            leak_standby: 40.0,
            d0: d0_low,
            r_drive: 1.0,
            c_in: 2.0,
            i_peak: 0.5,
        },
        high_vth: VariantParams {
            area,
            leak_standby: 0.5,
            d0: d0_low * 1.4,
            r_drive: 1.3,
            c_in: 2.0,
            i_peak: 0.4,
        },
    }
}

pub fn default_library() -> Library {
    let mut kinds = std::collections::BTreeMap::new();
    for k in [
        kind("INV", LogicFunction::Inv, &["A"], Some("Y"), 2.0, 30.0),
        kind("BUF", LogicFunction::Buf, &["A"], Some("Y"), 2.0, 35.0),
        kind("NAND2", LogicFunction::Nand2, &["A", "B"], Some("Y"), 3.0, 45.0),
        kind("NOR2", LogicFunction::Nor2, &["A", "B"], Some("Y"), 3.0, 50.0),
        kind("AND2", LogicFunction::And2, &["A", "B"], Some("Y"), 4.0, 60.0),
        kind("DFF", LogicFunction::Dff, &["D"], Some("Q"), 8.0, 80.0),
    ] {
        kinds.insert(k.name.clone(), k);
    }

    let holder = VariantParams {
        area: 2.0,
        leak_standby: 2.0,
        d0: 5.0,
        r_drive: 2.0,
        c_in: 1.0,
        i_peak: 0.05,
    };
    kinds.insert(
        "HOLDER".into(),
        CellKind {
            name: "HOLDER".into(),
            function: LogicFunction::Holder,
            inputs: vec!["A".into()],
            output: None,
            high_vth: holder,
            low_vth: holder,
        },
    );

    let switch = VariantParams {
        area: 0.0,
        leak_standby: 0.0,
        d0: 0.0,
        r_drive: 0.1,
        c_in: 0.5,
        i_peak: 0.01,
    };
    kinds.insert(
        "SWITCH".into(),
        CellKind {
            name: "SWITCH".into(),
            function: LogicFunction::Switch,
            inputs: vec![],
            output: None,
            high_vth: switch,
            low_vth: switch,
        },
    );

    let mtebuf = VariantParams {
        area: 4.0,
        leak_standby: 1.5,
        d0: 45.0,
        r_drive: 1.3,
        c_in: 2.0,
        i_peak: 0.3,
    };
    kinds.insert(
        "MTEBUF".into(),
        CellKind {
            name: "MTEBUF".into(),
            function: LogicFunction::Mtebuf,
            inputs: vec!["A".into()],
            output: Some("Y".into()),
            high_vth: mtebuf,
            low_vth: mtebuf,
        },
    );

    Library { kinds }
}
