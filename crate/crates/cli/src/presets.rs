//! Named experiment presets for the evaluation scenarios.

use bdisac::scenario::{
    db_to_amplitude, db_to_linear, dbm_to_watt, GaussianMixturePrior, MixtureComponent,
    ScenarioConfig, UserConfig,
};
use bdisac::PddConfig;

use crate::{ExperimentSpec, Scheme, Sweep, SweepParam};

use std::f64::consts::PI;

/// All recognized preset names.
pub const PRESET_NAMES: &[&str] = &[
    "base",
    "fig5_mx",
    "fig5_mz",
    "fig5_snr",
    "fig6_gamma",
    "fig6_mz",
    "fig6_snr",
    "fig7_beampattern",
    "fig9_tdma",
    "table2",
];

/// The reference scene: 16 BS antennas, a 4x4 fully-connected surface 200 m
/// from the BS, two users and a three-component angle prior. The second
/// moments use the plain-integral convention, which is the one consistent
/// with this parameter set (the density-weighted variant is available via
/// `unweighted_moments = false`).
pub fn base_scenario() -> ScenarioConfig {
    ScenarioConfig {
        n_bs: 16,
        m_x: 4,
        m_z: 4,
        group_sizes: vec![16],
        r_target: 10.0,
        r_ib: 200.0,
        p0: dbm_to_watt(10.0),
        sigma2: dbm_to_watt(-95.0),
        block_len: 25,
        beta0: db_to_amplitude(-33.0),
        spacing: 0.05,
        wavelength: 0.1,
        rician_factor: db_to_linear(-8.0),
        path_loss_exp_direct: 3.5,
        theta_ib_aoa: PI / 4.0,
        users: vec![
            UserConfig {
                r_ui: 10.0,
                theta: 5.0 * PI / 9.0,
                power: dbm_to_watt(10.0),
                direct_blocked: false,
            },
            UserConfig {
                r_ui: 10.0,
                theta: 7.0 * PI / 9.0,
                power: dbm_to_watt(10.0),
                direct_blocked: false,
            },
        ],
        prior: GaussianMixturePrior::new(vec![
            MixtureComponent {
                weight: 0.31,
                mean: 5.0 * PI / 18.0,
                variance: 1e-3,
            },
            MixtureComponent {
                weight: 0.43,
                mean: 11.0 * PI / 36.0,
                variance: 1e-3,
            },
            MixtureComponent {
                weight: 0.26,
                mean: PI / 3.0,
                variance: 1e-3,
            },
        ])
        .expect("reference prior is valid"),
        gamma_pcrb: 5e-4,
        unweighted_moments: true,
    }
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn spec(scenario: ScenarioConfig, sweep: Option<Sweep>, schemes: Vec<Scheme>) -> ExperimentSpec {
    ExperimentSpec {
        scenario,
        pdd: PddConfig::default(),
        sweep,
        seeds: vec![1],
        schemes,
    }
}

/// Looks up a preset by name.
///
/// The threshold grids for the `fig6_gamma` and `fig9_tdma` sweeps are not
/// fixed by the reference scenarios; they are log-spaced over the typically
/// feasible range of the respective scenes.
pub fn preset(name: &str) -> Result<ExperimentSpec, String> {
    let all = vec![Scheme::Optimized, Scheme::Isotropic, Scheme::Random100];
    let sensing_scene = {
        let mut s = base_scenario();
        s.users.clear();
        s
    };
    match name {
        "base" => Ok(spec(base_scenario(), None, all)),
        "fig5_mx" => Ok(spec(
            sensing_scene,
            Some(Sweep {
                param: SweepParam::MX,
                values: vec![2.0, 3.0, 4.0, 5.0, 6.0],
            }),
            all,
        )),
        "fig5_mz" => Ok(spec(
            sensing_scene,
            Some(Sweep {
                param: SweepParam::MZ,
                values: vec![2.0, 3.0, 4.0, 5.0, 6.0],
            }),
            all,
        )),
        "fig5_snr" => Ok(spec(
            sensing_scene,
            Some(Sweep {
                param: SweepParam::SnrDb,
                values: vec![95.0, 100.0, 105.0, 110.0, 115.0],
            }),
            all,
        )),
        "fig6_gamma" => Ok(spec(
            base_scenario(),
            Some(Sweep {
                param: SweepParam::GammaPcrb,
                values: log_spaced(5.5e-4, 2.5e-3, 6),
            }),
            vec![Scheme::Optimized, Scheme::Tdma],
        )),
        "fig6_mz" => {
            let mut s = base_scenario();
            s.gamma_pcrb = 1.5e-3;
            Ok(spec(
                s,
                Some(Sweep {
                    param: SweepParam::MZ,
                    values: vec![2.0, 3.0, 4.0, 5.0, 6.0],
                }),
                all,
            ))
        }
        "fig6_snr" => {
            let mut s = base_scenario();
            s.gamma_pcrb = 2.2e-3;
            Ok(spec(
                s,
                Some(Sweep {
                    param: SweepParam::SnrDb,
                    values: vec![95.0, 100.0, 105.0, 110.0, 115.0],
                }),
                all,
            ))
        }
        "fig7_beampattern" => Ok(spec(base_scenario(), None, all)),
        "fig9_tdma" => {
            let mut s = base_scenario();
            // Heavy-interference topology: user 1 sits near the probable
            // target angles and loses its direct link.
            s.users[0].theta = 5.0 * PI / 12.0;
            s.users[0].direct_blocked = true;
            Ok(spec(
                s,
                Some(Sweep {
                    param: SweepParam::GammaPcrb,
                    values: log_spaced(6e-4, 3e-3, 6),
                }),
                vec![Scheme::Optimized, Scheme::Tdma],
            ))
        }
        "table2" => Ok(spec(base_scenario(), None, all)),
        other => Err(format!(
            "unknown preset '{other}'; available: {}",
            PRESET_NAMES.join(", ")
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_preset_matches_reference_parameters() {
        let s = preset("base").unwrap();
        assert_eq!(s.scenario.block_len, 25);
        assert_eq!(s.scenario.n_bs, 16);
        assert_eq!(s.scenario.m_x, 4);
        assert_eq!(s.scenario.m_z, 4);
        assert_eq!(s.scenario.num_users(), 2);
        assert!((s.scenario.p0 - 0.01).abs() < 1e-15);
        assert!((s.scenario.gamma_pcrb - 5e-4).abs() < 1e-18);
        assert!((s.scenario.users[0].theta - 5.0 * PI / 9.0).abs() < 1e-15);
        assert!((s.scenario.users[1].theta - 7.0 * PI / 9.0).abs() < 1e-15);
        let prior = s.scenario.prior.components();
        assert_eq!(prior.len(), 3);
        assert!((prior[0].weight - 0.31).abs() < 1e-15);
        assert!((prior[1].mean - 11.0 * PI / 36.0).abs() < 1e-15);
        assert!((prior[2].variance - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn figure_presets_override_the_threshold() {
        assert!((preset("fig6_mz").unwrap().scenario.gamma_pcrb - 1.5e-3).abs() < 1e-18);
        assert!((preset("fig6_snr").unwrap().scenario.gamma_pcrb - 2.2e-3).abs() < 1e-18);
    }

    #[test]
    fn fig9_blocks_the_first_user() {
        let s = preset("fig9_tdma").unwrap();
        assert!(s.scenario.users[0].direct_blocked);
        assert!((s.scenario.users[0].theta - 5.0 * PI / 12.0).abs() < 1e-15);
        assert!(!s.scenario.users[1].direct_blocked);
    }

    #[test]
    fn sensing_presets_have_no_users() {
        for name in ["fig5_mx", "fig5_mz", "fig5_snr"] {
            assert_eq!(preset(name).unwrap().scenario.num_users(), 0, "{name}");
        }
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!(preset("fig42").is_err());
        for name in PRESET_NAMES {
            assert!(preset(name).is_ok(), "{name}");
        }
    }
}
