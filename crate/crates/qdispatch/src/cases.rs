//! Bundled study cases, constructed in code.
//!
//! The same cases ship as TOML files under `cases/`; an integration test
//! keeps file and constructor in lockstep. `micro6` is sized so that every
//! master problem met during decomposition stays small enough for exact
//! binary enumeration; `ieee6_like` is a meshed six-bus system with a horizon
//! of four hours and 512 joint scenarios.

use crate::model::{Bus, DispatchCase, Generator, Line, ResUnit, Storage};
use crate::uqae::{ErrorDistribution, GridEncoding, MixtureComponent};

/// Three buses in a string, two generators, one storage unit, three
/// renewables with one-qubit error grids (eight joint scenarios of weight
/// 1/8 under a symmetric error model).
pub fn micro6() -> DispatchCase {
    DispatchCase {
        name: "micro6".into(),
        horizon_hours: 2,
        buses: vec![
            Bus {
                id: 1,
                load_mw: vec![0.0, 0.0],
            },
            Bus {
                id: 2,
                load_mw: vec![1.0, 1.0],
            },
            Bus {
                id: 3,
                load_mw: vec![2.0, 3.0],
            },
        ],
        lines: vec![
            Line {
                from_bus: 1,
                to_bus: 2,
                reactance_pu: 0.5,
                flow_limit_mw: 6.0,
            },
            Line {
                from_bus: 2,
                to_bus: 3,
                reactance_pu: 0.5,
                flow_limit_mw: 6.0,
            },
        ],
        generators: vec![
            Generator {
                name: "g1".into(),
                bus: 1,
                p_min_mw: 0.0,
                p_max_mw: 4.0,
                ramp_mw_per_hour: 4.0,
                startup_cost_usd: 0.0,
                marginal_cost_usd_per_mwh: 1.0,
                initially_on: true,
            },
            Generator {
                name: "g2".into(),
                bus: 2,
                p_min_mw: 0.0,
                p_max_mw: 1.0,
                ramp_mw_per_hour: 1.0,
                startup_cost_usd: 0.0,
                marginal_cost_usd_per_mwh: 2.0,
                initially_on: false,
            },
        ],
        storages: vec![Storage {
            name: "b1".into(),
            bus: 2,
            energy_capacity_mwh: 2.0,
            soc_min_fraction: 0.0,
            soc_max_fraction: 1.0,
            charge_limit_mw: 1.0,
            discharge_limit_mw: 1.0,
            charge_cost_usd_per_mwh: 0.25,
            discharge_cost_usd_per_mwh: 1.0,
            round_trip_efficiency: 1.0,
            initial_soc_fraction: 0.0,
        }],
        res_units: (0..3)
            .map(|k| ResUnit {
                name: format!("res{}", k + 1),
                bus: 3,
                capacity_mw: 1.0,
                forecast_mw: vec![0.5, 0.5],
                error: ErrorDistribution::Normal { mean: 0.0, sd: 0.5 },
                encoding: GridEncoding {
                    int_bits: 0,
                    frac_bits: 0,
                },
            })
            .collect(),
    }
}

/// Six-bus meshed system, four-hour horizon, two committable generators with
/// startup costs, one storage unit with a lossy round trip, and three
/// renewables on three-qubit error grids (512 joint scenarios).
pub fn ieee6_like() -> DispatchCase {
    let enc = GridEncoding {
        int_bits: 1,
        frac_bits: 1,
    };
    DispatchCase {
        name: "ieee6-like".into(),
        horizon_hours: 4,
        buses: vec![
            Bus {
                id: 1,
                load_mw: vec![0.0, 0.0, 0.0, 0.0],
            },
            Bus {
                id: 2,
                load_mw: vec![2.0, 2.5, 3.0, 2.5],
            },
            Bus {
                id: 3,
                load_mw: vec![4.0, 5.0, 6.0, 5.0],
            },
            Bus {
                id: 4,
                load_mw: vec![0.0, 0.0, 0.0, 0.0],
            },
            Bus {
                id: 5,
                load_mw: vec![3.0, 3.5, 4.0, 3.5],
            },
            Bus {
                id: 6,
                load_mw: vec![2.0, 2.0, 2.5, 2.0],
            },
        ],
        lines: vec![
            Line {
                from_bus: 1,
                to_bus: 2,
                reactance_pu: 0.2,
                flow_limit_mw: 10.0,
            },
            Line {
                from_bus: 2,
                to_bus: 3,
                reactance_pu: 0.25,
                flow_limit_mw: 10.0,
            },
            Line {
                from_bus: 1,
                to_bus: 4,
                reactance_pu: 0.2,
                flow_limit_mw: 10.0,
            },
            Line {
                from_bus: 4,
                to_bus: 5,
                reactance_pu: 0.25,
                flow_limit_mw: 8.0,
            },
            Line {
                from_bus: 5,
                to_bus: 6,
                reactance_pu: 0.3,
                flow_limit_mw: 8.0,
            },
            Line {
                from_bus: 3,
                to_bus: 6,
                reactance_pu: 0.3,
                flow_limit_mw: 8.0,
            },
            Line {
                from_bus: 2,
                to_bus: 5,
                reactance_pu: 0.25,
                flow_limit_mw: 8.0,
            },
        ],
        generators: vec![
            Generator {
                name: "g1".into(),
                bus: 1,
                p_min_mw: 2.0,
                p_max_mw: 12.0,
                ramp_mw_per_hour: 6.0,
                startup_cost_usd: 8.0,
                marginal_cost_usd_per_mwh: 1.5,
                initially_on: true,
            },
            Generator {
                name: "g2".into(),
                bus: 2,
                p_min_mw: 0.0,
                p_max_mw: 8.0,
                ramp_mw_per_hour: 4.0,
                startup_cost_usd: 5.0,
                marginal_cost_usd_per_mwh: 3.0,
                initially_on: false,
            },
        ],
        storages: vec![Storage {
            name: "b5".into(),
            bus: 5,
            energy_capacity_mwh: 6.0,
            soc_min_fraction: 0.1,
            soc_max_fraction: 0.9,
            charge_limit_mw: 2.0,
            discharge_limit_mw: 2.0,
            charge_cost_usd_per_mwh: 0.5,
            discharge_cost_usd_per_mwh: 0.5,
            round_trip_efficiency: 0.81,
            initial_soc_fraction: 0.5,
        }],
        res_units: vec![
            ResUnit {
                name: "wind4".into(),
                bus: 4,
                capacity_mw: 6.0,
                forecast_mw: vec![3.0, 4.0, 3.0, 2.0],
                error: ErrorDistribution::Normal {
                    mean: 0.0,
                    sd: 0.35,
                },
                encoding: enc,
            },
            ResUnit {
                name: "wind6".into(),
                bus: 6,
                capacity_mw: 6.0,
                forecast_mw: vec![2.0, 3.0, 4.0, 3.0],
                error: ErrorDistribution::Normal {
                    mean: 0.0,
                    sd: 0.35,
                },
                encoding: enc,
            },
            ResUnit {
                name: "solar3".into(),
                bus: 3,
                capacity_mw: 4.0,
                forecast_mw: vec![1.0, 3.0, 3.0, 1.0],
                error: ErrorDistribution::GaussianMixture {
                    components: vec![
                        MixtureComponent {
                            weight: 0.6,
                            mean: -0.2,
                            sd: 0.25,
                        },
                        MixtureComponent {
                            weight: 0.4,
                            mean: 0.3,
                            sd: 0.2,
                        },
                    ],
                },
                encoding: enc,
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_cases_validate() {
        micro6().validate().expect("micro6 valid");
        ieee6_like().validate().expect("ieee6-like valid");
    }

    #[test]
    fn micro6_dimensions_match_hand_count() {
        let p = micro6().compile().unwrap();
        assert_eq!(p.num_first_stage(), 8);
        assert_eq!(p.num_second_stage(), 22);
        assert_eq!(p.num_uncertain(), 3);
        assert_eq!(p.rows.len(), 56);
        assert_eq!(p.first_stage_only_rows.len(), 2);
    }

    #[test]
    fn ieee6_like_dimensions_match_hand_count() {
        let p = ieee6_like().compile().unwrap();
        // on 2*4 + startup 2*4 + charge 4 + discharge 4
        assert_eq!(p.num_first_stage(), 24);
        // per hour: 2 power + charge + discharge + soc + 3 injection + 6 angle
        assert_eq!(p.num_second_stage(), 56);
        assert_eq!(p.num_uncertain(), 3);
        // per hour: 12 balance + 2 pin + 14 flow + 4 gen + 6 storage + 3 res
        // = 41, plus 4 ramp rows for hours 1..3, plus 4 exclusivity and
        // 3 + 4 startup-link rows.
        assert_eq!(p.rows.len(), 41 + 45 * 3 + 11);
        assert_eq!(p.first_stage_only_rows.len(), 11);
    }
}
