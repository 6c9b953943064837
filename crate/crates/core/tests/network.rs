use std::path::PathBuf;

use gridshield::hazard::FragilityCurve;
use gridshield::network::{
    parse_network, validate_network, Bus, Line, LoadSeries, Network, NetworkError, NetworkParams,
    Orientation, PoleOption,
};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn ieee15_parses_with_expected_sizes() {
    let net = parse_network(fixture("ieee15.json")).unwrap();
    assert_eq!(net.num_buses(), 15);
    assert_eq!(net.num_lines(), 14);
    assert_eq!(net.num_pole_options(), 7);
    let report = validate_network(&net);
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    // big-M filled in from line data
    assert!(net.params.big_m1.unwrap() > 1.05);
}

#[test]
fn ieee15_adjacency() {
    let net = parse_network(fixture("ieee15.json")).unwrap();
    let sub = net.substation().unwrap();
    let feeders = net.incident_lines(net.buses[sub].id).unwrap();
    assert_eq!(feeders.len(), 1);
    assert_eq!(feeders[0].line, 0);
    assert_eq!(feeders[0].orientation, Orientation::Outgoing);
    // bus 1 fans out to buses 2, 8 and 5
    let lines: Vec<_> = net.incident_lines(1).unwrap().iter().map(|i| i.line).collect();
    assert_eq!(lines, vec![0, 1, 4, 6]);
}

const TWO_BUS: &str = r#"{
  "buses": [
    {"id": 0, "is_substation": true, "v_min": 0.9, "v_max": 1.05},
    {"id": 1, "v_min": 0.9, "v_max": 1.05, "base_p_load": 100.0, "base_q_load": 40.0, "shed_cost": 14.0}
  ],
  "lines": [
    {"from_bus": 0, "to_bus": 1, "resistance": 0.01, "reactance": 0.02, "p_max": 500.0, "q_max": 500.0,
     "hardening_costs": [0.0]}
  ],
  "pole_catalog": [{"index": 0, "label": "existing", "fragility": "weak", "repair_unit_cost": 4000.0}],
  "fragility_curves": [{"id": "weak", "breakpoints": [[0.0, 0.0], [40.0, 0.5]]}],
  "params": {}
}"#;

#[test]
fn minimal_two_bus_file() {
    let net = Network::from_json_str(TWO_BUS).unwrap();
    assert_eq!(net.num_lines(), 1);
    assert_eq!(net.incident_lines(1).unwrap().len(), 1);
    assert_eq!(net.params.epsilon1, 0.0);
    assert_eq!(net.params.w_h, 1.0);
    assert!(validate_network(&net).is_valid());
}

#[test]
fn absent_bus_is_an_error() {
    let text = TWO_BUS.replace("\"to_bus\": 1", "\"to_bus\": 99");
    let err = Network::from_json_str(&text).unwrap_err();
    assert!(matches!(err, NetworkError::UnresolvedBus { bus: 99, .. }), "{err}");
}

#[test]
fn schema_errors_name_the_field() {
    let text = TWO_BUS.replace("\"p_max\": 500.0,", "");
    let err = Network::from_json_str(&text).unwrap_err().to_string();
    assert!(err.contains("p_max"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn validation_is_pure() {
    let mut net = parse_network(fixture("ieee15.json")).unwrap();
    net.buses[3].is_substation = true;
    net.lines[2].hardening_costs[0] = 5.0;
    let a = serde_json::to_string(&validate_network(&net)).unwrap();
    let b = serde_json::to_string(&validate_network(&net)).unwrap();
    assert_eq!(a, b);
    assert_eq!(validate_network(&net).errors.len(), 2);
}

fn arb_network() -> impl Strategy<Value = Network> {
    (2usize..9, 1usize..4, any::<u64>()).prop_flat_map(|(n, k, _)| {
        let parents = (1..n).map(|i| 0..i).collect::<Vec<_>>();
        let loads = prop::collection::vec((0.0f64..500.0, -100.0f64..300.0), n);
        let imp = prop::collection::vec((0.0f64..0.05, 0.0f64..0.05, 1.0f64..3000.0), n - 1);
        let costs = prop::collection::vec(prop::collection::vec(0.0f64..1e5, k - 1), n - 1);
        let flags = prop::collection::vec((any::<bool>(), any::<bool>()), n - 1);
        (parents, loads, imp, costs, flags, 0.0f64..1.0, 1u32..4)
            .prop_map(move |(parents, loads, imp, costs, flags, eps, ng)| {
                let buses = loads
                    .iter()
                    .enumerate()
                    .map(|(i, &(p, q))| Bus {
                        id: (i * 3) as u32,
                        is_substation: i == 0,
                        v_min: 0.9,
                        v_max: 1.1,
                        dg_candidate: i % 2 == 1,
                        dg_p_max: 400.0,
                        dg_q_max: 300.0,
                        base_p_load: if i % 3 == 2 {
                            LoadSeries::Profile(vec![p, p * 0.5])
                        } else {
                            LoadSeries::Constant(p)
                        },
                        base_q_load: LoadSeries::Constant(q),
                        shed_cost: 14.0,
                        dg_op_cost: 8.0,
                        dg_install_cost: 4e5,
                    })
                    .collect();
                let lines = parents
                    .iter()
                    .enumerate()
                    .map(|(c, &p)| {
                        let mut hc = vec![0.0];
                        hc.extend(&costs[c]);
                        Line {
                            from_bus: (p * 3) as u32,
                            to_bus: ((c + 1) * 3) as u32,
                            resistance: imp[c].0,
                            reactance: imp[c].1,
                            p_max: imp[c].2,
                            q_max: imp[c].2,
                            existing_sectionalizer_from: flags[c].0,
                            existing_sectionalizer_to: flags[c].1,
                            sectionalizer_cost: 15000.0,
                            hardening_costs: hc,
                        }
                    })
                    .collect();
                let catalog = (0..k)
                    .map(|i| PoleOption {
                        index: i,
                        label: format!("o{i}"),
                        fragility: format!("f{i}"),
                        repair_unit_cost: 4000.0,
                    })
                    .collect();
                let curves = (0..k)
                    .map(|i| FragilityCurve::new(format!("f{i}"), vec![(10.0, 0.0), (50.0, 0.9 / (i + 1) as f64)]))
                    .collect();
                let params = NetworkParams {
                    epsilon1: eps,
                    n_g_max: ng,
                    ..NetworkParams::default()
                };
                Network::new(buses, lines, catalog, curves, params).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(net in arb_network()) {
        let text = net.to_json_string();
        let back = Network::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(back.to_json_string(), text);
    }

    #[test]
    fn incidence_counts_every_endpoint_twice(net in arb_network()) {
        let total: usize = net
            .buses
            .iter()
            .map(|b| net.incident_lines(b.id).unwrap().len())
            .sum();
        prop_assert_eq!(total, 2 * net.num_lines());
    }
}
