//! Shared scenario fixtures for unit tests.

use crate::scenario::{
    db_to_amplitude, db_to_linear, dbm_to_watt, GaussianMixturePrior, MixtureComponent,
    ScenarioConfig, UserConfig,
};

/// Three-component angle prior used across tests.
pub(crate) fn mixture_prior() -> GaussianMixturePrior {
    GaussianMixturePrior::new(vec![
        MixtureComponent {
            weight: 0.31,
            mean: 5.0 * std::f64::consts::PI / 18.0,
            variance: 1e-3,
        },
        MixtureComponent {
            weight: 0.43,
            mean: 11.0 * std::f64::consts::PI / 36.0,
            variance: 1e-3,
        },
        MixtureComponent {
            weight: 0.26,
            mean: std::f64::consts::PI / 3.0,
            variance: 1e-3,
        },
    ])
    .unwrap()
}

/// Small two-user scene (N=4, M=2x2) that keeps unit tests fast.
pub(crate) fn tiny_scenario() -> ScenarioConfig {
    ScenarioConfig {
        n_bs: 4,
        m_x: 2,
        m_z: 2,
        group_sizes: vec![4],
        r_target: 10.0,
        r_ib: 200.0,
        p0: 0.01,
        sigma2: dbm_to_watt(-95.0),
        block_len: 25,
        beta0: db_to_amplitude(-33.0),
        spacing: 0.05,
        wavelength: 0.1,
        rician_factor: db_to_linear(-8.0),
        path_loss_exp_direct: 3.5,
        theta_ib_aoa: std::f64::consts::FRAC_PI_4,
        users: vec![
            UserConfig {
                r_ui: 10.0,
                theta: 5.0 * std::f64::consts::PI / 9.0,
                power: 0.01,
                direct_blocked: false,
            },
            UserConfig {
                r_ui: 10.0,
                theta: 7.0 * std::f64::consts::PI / 9.0,
                power: 0.01,
                direct_blocked: false,
            },
        ],
        prior: mixture_prior(),
        gamma_pcrb: 5e-4,
        unweighted_moments: false,
    }
}

/// Same scene with a looser grouping, for group-structure paths.
pub(crate) fn tiny_scenario_grouped() -> ScenarioConfig {
    let mut cfg = tiny_scenario();
    cfg.group_sizes = vec![2, 2];
    cfg
}
