use bdisac::pdd::{self, PddConfig};
use bdisac::scenario::*;
use bdisac::tdma;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn base() -> ScenarioConfig {
    ScenarioConfig {
        n_bs: 16, m_x: 4, m_z: 4, group_sizes: vec![16],
        r_target: 10.0, r_ib: 200.0,
        p0: dbm_to_watt(10.0), sigma2: dbm_to_watt(-95.0), block_len: 25,
        beta0: db_to_amplitude(-33.0), spacing: 0.05, wavelength: 0.1,
        rician_factor: db_to_linear(-8.0), path_loss_exp_direct: 3.5,
        theta_ib_aoa: std::f64::consts::FRAC_PI_4,
        users: vec![
            UserConfig { r_ui: 10.0, theta: 5.0*std::f64::consts::PI/9.0, power: dbm_to_watt(10.0), direct_blocked: false },
            UserConfig { r_ui: 10.0, theta: 7.0*std::f64::consts::PI/9.0, power: dbm_to_watt(10.0), direct_blocked: false },
        ],
        prior: GaussianMixturePrior::new(vec![
            MixtureComponent { weight: 0.31, mean: 5.0*std::f64::consts::PI/18.0, variance: 1e-3 },
            MixtureComponent { weight: 0.43, mean: 11.0*std::f64::consts::PI/36.0, variance: 1e-3 },
            MixtureComponent { weight: 0.26, mean: std::f64::consts::PI/3.0, variance: 1e-3 },
        ]).unwrap(),
        gamma_pcrb: 5e-4,
        unweighted_moments: true,
    }
}

fn main() {
    let pddc = PddConfig::default();
    let cfg = base();
    let archs: Vec<Vec<usize>> = vec![vec![16], vec![8,8], vec![4,4,4,4], vec![1;16]];
    let t_all = Instant::now();
    for seed in 1..=10u64 {
        let ch = build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut line = format!("seed {seed}:");
        for sizes in &archs {
            let mut c = cfg.clone(); c.group_sizes = sizes.clone();
            let t = Instant::now();
            match pdd::solve_isac(&ch, &c, &pddc) {
                Ok((_, m, tr)) => line += &format!(" G{}[rate {:.3} pcrb {:.2e} v{:.0e} {:.0?}]", sizes.len(), m.min_rate, m.pcrb, tr.last().unwrap().violation, t.elapsed()),
                Err(e) => line += &format!(" G{}[FAIL {e}]", sizes.len()),
            }
        }
        println!("{line}");
    }
    // fig9: blocked user near target, loosest gamma 3e-3: sdma + tdma plan
    let mut f9 = base();
    f9.users[0].theta = 5.0*std::f64::consts::PI/12.0;
    f9.users[0].direct_blocked = true;
    f9.gamma_pcrb = 3e-3;
    let mut wins = 0;
    for seed in 1..=10u64 {
        let ch = build_channels(&f9, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let t = Instant::now();
        let sdma = pdd::solve_isac(&ch, &f9, &pddc);
        let plan = tdma::plan_tdma(&ch, &f9, &pddc);
        match (&sdma, &plan) {
            (Ok((_, m, _)), Ok(p)) => {
                if p.min_rate > m.min_rate { wins += 1; }
                println!("fig9 seed {seed}: sdma {:.4} tdma {:.4} q {:.3} ({:.0?})", m.min_rate, p.min_rate, p.q, t.elapsed());
            }
            _ => println!("fig9 seed {seed}: sdma {:?} tdma {:?}", sdma.is_ok(), plan.is_ok()),
        }
    }
    println!("fig9 tdma wins: {wins}/10; total {:.0?}", t_all.elapsed());
}
