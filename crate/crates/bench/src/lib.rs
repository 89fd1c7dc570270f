//! Benchmark-only crate; see `benches/scaling.rs`.

use bdisac::scenario::{
    db_to_amplitude, db_to_linear, dbm_to_watt, GaussianMixturePrior, MixtureComponent,
    ScenarioConfig, UserConfig,
};

/// Reference scene used by the benchmarks (two users, 4x4 surface).
pub fn bench_scenario(group_sizes: Vec<usize>) -> ScenarioConfig {
    use std::f64::consts::PI;
    ScenarioConfig {
        n_bs: 16,
        m_x: 4,
        m_z: 4,
        group_sizes,
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
        .expect("valid prior"),
        gamma_pcrb: 1.5e-3,
        unweighted_moments: true,
    }
}
