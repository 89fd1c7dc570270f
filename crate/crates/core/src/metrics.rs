//! Performance evaluation: interference covariances, optimal receive
//! beamformers, expected-rate lower bounds, observation Fisher information,
//! the PCRB, Monte-Carlo oracles and the sensing beampattern.

use nalgebra::Cholesky;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_evd, CMat, CVec, Complex64, DEFAULT_RANK_TOL};
use crate::quadrature::integrate_adaptive;
use crate::reflection::ReflectionMatrix;
use crate::scenario::{steering_derivative, steering_target, ChannelSet, ScenarioConfig};

/// Headline metrics of one reflection matrix in one scene.
#[derive(Debug, Clone)]
pub struct IsacMetrics {
    /// Posterior Cramér-Rao bound on the angle MSE, rad^2.
    pub pcrb: f64,
    /// Expected-rate lower bound per user, bps/Hz.
    pub rates: Vec<f64>,
    /// Worst-case user rate (NaN when there are no users).
    pub min_rate: f64,
    /// Observation Fisher information.
    pub f_o: f64,
    /// Whether `pcrb <= gamma_pcrb`.
    pub feasible: bool,
}

fn cholesky(m: &CMat, what: &str) -> Result<Cholesky<Complex64, nalgebra::Dyn>> {
    m.clone()
        .cholesky()
        .ok_or_else(|| Error::LinearSolve(format!("{what} is not positive definite")))
}

/// Interference-plus-noise covariance seen by the sensing path:
/// `sigma^2 I + sum_k P_k h_k h_k^H`.
pub fn sigma0(phi: &ReflectionMatrix, ch: &ChannelSet, cfg: &ScenarioConfig) -> CMat {
    let n = cfg.n_bs;
    let full = phi.full();
    let mut out = CMat::identity(n, n).scale(cfg.sigma2);
    for (k, user) in cfg.users.iter().enumerate() {
        let h = ch.effective_channel(k, &full);
        out += (&h * h.adjoint()).scale(user.power);
    }
    out
}

/// Interference-plus-noise covariance seen by user `k`'s receive beamformer:
/// `sigma^2 I + sum_{k' != k} P_k' h_k' h_k'^H + P_0 R Phi G Phi^H R^H`.
pub fn sigma_k(k: usize, phi: &ReflectionMatrix, ch: &ChannelSet, cfg: &ScenarioConfig) -> CMat {
    let n = cfg.n_bs;
    let full = phi.full();
    let mut out = CMat::identity(n, n).scale(cfg.sigma2);
    for (kp, user) in cfg.users.iter().enumerate() {
        if kp == k {
            continue;
        }
        let h = ch.effective_channel(kp, &full);
        out += (&h * h.adjoint()).scale(user.power);
    }
    if cfg.p0 > 0.0 {
        let rp = &ch.r_mat * &full;
        out += (&rp * &ch.g_moment * rp.adjoint()).scale(cfg.p0);
    }
    out
}

/// Optimal receive beamformer for user `k` (normalized whitened matched
/// filter `Sigma_k^{-1} h_k / ||.||`).
pub fn optimal_receive_beamformer(
    k: usize,
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> Result<CVec> {
    let full = phi.full();
    let h = ch.effective_channel(k, &full);
    let sol = cholesky(&sigma_k(k, phi, ch, cfg), "sigma_k")?.solve(&h);
    let norm = sol.norm();
    if norm == 0.0 {
        return Err(Error::LinearSolve("beamformer has zero norm".into()));
    }
    Ok(sol.scale(1.0 / norm))
}

/// Jensen-bound SINR of user `k` under an arbitrary receive beamformer.
pub fn jensen_sinr(
    k: usize,
    w: &CVec,
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> f64 {
    let full = phi.full();
    let h = ch.effective_channel(k, &full);
    let signal = cfg.users[k].power * (w.adjoint() * &h)[(0, 0)].norm_sqr();
    let mut denom = cfg.sigma2 * w.norm_squared();
    for (kp, user) in cfg.users.iter().enumerate() {
        if kp == k {
            continue;
        }
        let hk = ch.effective_channel(kp, &full);
        denom += user.power * (w.adjoint() * &hk)[(0, 0)].norm_sqr();
    }
    if cfg.p0 > 0.0 {
        let rp = &ch.r_mat * &full;
        denom += cfg.p0 * (w.adjoint() * &rp * &ch.g_moment * rp.adjoint() * w)[(0, 0)].re;
    }
    signal / denom
}

/// Jensen-bound SINR of user `k` under its optimal receive beamformer,
/// `P_k h_k^H Sigma_k^{-1} h_k`.
pub fn optimal_jensen_sinr(
    k: usize,
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    let full = phi.full();
    let h = ch.effective_channel(k, &full);
    let solved = cholesky(&sigma_k(k, phi, ch, cfg), "sigma_k")?.solve(&h);
    Ok(cfg.users[k].power * (h.adjoint() * solved)[(0, 0)].re)
}

/// Expected-rate lower bound of user `k`:
/// `log2(1 + P_k h_k^H Sigma_k^{-1} h_k)`.
pub fn expected_rate_lower_bound(
    k: usize,
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    Ok((1.0 + optimal_jensen_sinr(k, phi, ch, cfg)?).log2())
}

/// Observation Fisher information through the eigen-expansion of the
/// steering-derivative second moment:
/// `2 P_0 L sum_z kappa_z (R Phi u_z)^H Sigma_0^{-1} (R Phi u_z)`.
pub fn fisher_observation(
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    if cfg.p0 == 0.0 {
        return Ok(0.0);
    }
    let full = phi.full();
    let rp = &ch.r_mat * &full;
    let chol = cholesky(&sigma0(phi, ch, cfg), "sigma0")?;
    let mut acc = 0.0;
    for z in 0..ch.u_evd.rank {
        let u = ch.u_evd.vectors.column(z).into_owned();
        let v = &rp * u;
        acc += ch.u_evd.values[z] * (v.adjoint() * chol.solve(&v))[(0, 0)].re;
    }
    Ok(2.0 * cfg.p0 * cfg.block_len as f64 * acc)
}

/// Observation Fisher information by direct quadrature of
/// `2 P_0 L E_theta[(R Phi g'(theta))^H Sigma_0^{-1} (R Phi g'(theta))]`,
/// the independent oracle for [`fisher_observation`].
pub fn fisher_observation_quadrature(
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    if cfg.p0 == 0.0 {
        return Ok(0.0);
    }
    let full = phi.full();
    let rp = &ch.r_mat * &full;
    let chol = cholesky(&sigma0(phi, ch, cfg), "sigma0")?;
    let integrand = |theta: f64| {
        let v = &rp * steering_derivative(theta, cfg);
        (v.adjoint() * chol.solve(&v))[(0, 0)].re
    };
    let expectation = if cfg.unweighted_moments {
        integrate_adaptive(0.0, std::f64::consts::PI, 1e-10, integrand)?
    } else {
        cfg.prior.expect_scalar(integrand)?
    };
    Ok(2.0 * cfg.p0 * cfg.block_len as f64 * expectation)
}

/// Posterior Cramér-Rao bound `1 / (F_O + F_P)`.
pub fn pcrb(phi: &ReflectionMatrix, ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<f64> {
    Ok(1.0 / (fisher_observation(phi, ch, cfg)? + ch.f_p))
}

/// Monte-Carlo estimate of user `k`'s expected achievable rate under random
/// target angles, with the receive beamformer fixed at its optimum. Returns
/// `(mean, standard error)`.
pub fn monte_carlo_expected_rate(
    k: usize,
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidConfig("monte carlo needs at least one sample".into()));
    }
    let full = phi.full();
    let w = optimal_receive_beamformer(k, phi, ch, cfg)?;
    let h = ch.effective_channel(k, &full);
    let signal = cfg.users[k].power * (w.adjoint() * &h)[(0, 0)].norm_sqr();
    let mut base = cfg.sigma2 * w.norm_squared();
    for (kp, user) in cfg.users.iter().enumerate() {
        if kp == k {
            continue;
        }
        let hk = ch.effective_channel(kp, &full);
        base += user.power * (w.adjoint() * &hk)[(0, 0)].norm_sqr();
    }
    // Row vector w^H R Phi evaluated once; per-sample work is O(M).
    let wrp = (w.adjoint() * &ch.r_mat * &full).transpose();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..samples {
        let theta = cfg.prior.sample(rng);
        let g = steering_target(theta, cfg);
        let cross: Complex64 = wrp.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        let rate = (1.0 + signal / (base + cfg.p0 * cross.norm_sqr())).log2();
        let delta = rate - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (rate - mean);
    }
    let variance = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    Ok((mean, (variance / samples as f64).sqrt()))
}

/// Receive beamformer maximizing the expected sensing SINR: the principal
/// generalized eigenvector of `(R Phi G Phi^H R^H, Sigma_0)`.
pub fn sensing_beamformer(
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> Result<CVec> {
    let full = phi.full();
    let rp = &ch.r_mat * &full;
    let a = &rp * &ch.g_moment * rp.adjoint();
    let s0 = sigma0(phi, ch, cfg);
    let evd = hermitian_evd(&s0, DEFAULT_RANK_TOL)?;
    let inv_sqrt = {
        let d = CMat::from_diagonal(&evd.values.map(|v| Complex64::new(1.0 / v.sqrt(), 0.0)));
        &evd.vectors * d * evd.vectors.adjoint()
    };
    let b = &inv_sqrt * a * &inv_sqrt;
    let b_evd = hermitian_evd(&b, DEFAULT_RANK_TOL)?;
    let w = &inv_sqrt * b_evd.vectors.column(0);
    let norm = w.norm();
    Ok(w.scale(1.0 / norm))
}

/// Expected sensing SINR achieved by beamformer `w`.
pub fn expected_sensing_sinr(
    w: &CVec,
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
) -> f64 {
    let full = phi.full();
    let rp = &ch.r_mat * &full;
    let num = cfg.p0 * (w.adjoint() * &rp * &ch.g_moment * rp.adjoint() * w)[(0, 0)].re;
    let den = (w.adjoint() * sigma0(phi, ch, cfg) * w)[(0, 0)].re;
    num / den
}

/// Effective sensing power `P_0 |w_0^H R Phi g(theta)|^2` received at the BS
/// from each grid angle, with `w_0` from [`sensing_beamformer`].
pub fn sensing_beampattern(
    phi: &ReflectionMatrix,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    theta_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidConfig("beampattern grid is empty".into()));
    }
    let full = phi.full();
    let w = sensing_beamformer(phi, ch, cfg)?;
    let wrp = (w.adjoint() * &ch.r_mat * &full).transpose();
    Ok(theta_grid
        .iter()
        .map(|&theta| {
            let g = steering_target(theta, cfg);
            let cross: Complex64 = wrp.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
            (theta, cfg.p0 * cross.norm_sqr())
        })
        .collect())
}

/// Evaluates the headline metrics of a reflection matrix.
pub fn evaluate(phi: &ReflectionMatrix, ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<IsacMetrics> {
    let pcrb_val = pcrb(phi, ch, cfg)?;
    let f_o = fisher_observation(phi, ch, cfg)?;
    let rates: Vec<f64> = (0..cfg.num_users())
        .map(|k| expected_rate_lower_bound(k, phi, ch, cfg))
        .collect::<Result<_>>()?;
    let min_rate = if rates.is_empty() {
        f64::NAN
    } else {
        rates.iter().copied().fold(f64::INFINITY, f64::min)
    };
    Ok(IsacMetrics {
        pcrb: pcrb_val,
        rates,
        min_rate,
        f_o,
        feasible: pcrb_val <= cfg.gamma_pcrb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_complex_gaussian;
    use crate::testutil::{tiny_scenario, tiny_scenario_grouped};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ScenarioConfig, ChannelSet) {
        let cfg = tiny_scenario();
        let ch = crate::scenario::build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        (cfg, ch)
    }

    fn random_unit(n: usize, rng: &mut impl Rng) -> CVec {
        let v = CVec::from_fn(n, |_, _| standard_complex_gaussian(rng));
        let norm = v.norm();
        v.scale(1.0 / norm)
    }

    #[test]
    fn sigma0_without_users_is_noise() {
        let cfg = tiny_scenario().without_users();
        let ch = crate::scenario::build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        let s = sigma0(&phi, &ch, &cfg);
        assert!((s - CMat::identity(cfg.n_bs, cfg.n_bs).scale(cfg.sigma2)).norm() < 1e-18);
    }

    #[test]
    fn covariances_have_noise_floor() {
        let (cfg, ch) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut rng);
        for m in [
            sigma0(&phi, &ch, &cfg),
            sigma_k(0, &phi, &ch, &cfg),
            sigma_k(1, &phi, &ch, &cfg),
        ] {
            let evd = hermitian_evd(&m, DEFAULT_RANK_TOL).unwrap();
            let min = evd.values[evd.values.len() - 1];
            assert!(min >= cfg.sigma2 * (1.0 - 1e-10), "min eig {min:.3e}");
        }
    }

    #[test]
    fn covariances_match_entrywise_accumulation() {
        let (cfg, ch) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut rng);
        let full = phi.full();
        let n = cfg.n_bs;

        // Scalar-loop reference for sigma0.
        let mut want = CMat::zeros(n, n);
        for i in 0..n {
            want[(i, i)] = Complex64::new(cfg.sigma2, 0.0);
        }
        for (k, user) in cfg.users.iter().enumerate() {
            let h = ch.effective_channel(k, &full);
            for i in 0..n {
                for j in 0..n {
                    want[(i, j)] += Complex64::new(user.power, 0.0) * h[i] * h[j].conj();
                }
            }
        }
        assert!((sigma0(&phi, &ch, &cfg) - &want).norm() < 1e-12 * want.norm());

        // Scalar-loop reference for sigma_1 including the target term.
        let mut want1 = CMat::zeros(n, n);
        for i in 0..n {
            want1[(i, i)] = Complex64::new(cfg.sigma2, 0.0);
        }
        let h0 = ch.effective_channel(0, &full);
        for i in 0..n {
            for j in 0..n {
                want1[(i, j)] += Complex64::new(cfg.users[0].power, 0.0) * h0[i] * h0[j].conj();
            }
        }
        let rp = &ch.r_mat * &full;
        want1 += (&rp * &ch.g_moment * rp.adjoint()).scale(cfg.p0);
        assert!((sigma_k(1, &phi, &ch, &cfg) - &want1).norm() < 1e-12 * want1.norm());
    }

    #[test]
    fn beamformer_reduces_to_matched_filter() {
        let mut cfg = tiny_scenario();
        cfg.users.truncate(1);
        cfg.p0 = 0.0;
        let ch = crate::scenario::build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        let w = optimal_receive_beamformer(0, &phi, &ch, &cfg).unwrap();
        let h = ch.effective_channel(0, &phi.full());
        let matched = h.clone().scale(1.0 / h.norm());
        assert!((&w - matched).norm() < 1e-12);
        assert!((w.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beamformer_dominates_random_competitors() {
        let (cfg, ch) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut rng);
        for k in 0..cfg.num_users() {
            let best = optimal_receive_beamformer(k, &phi, &ch, &cfg).unwrap();
            let best_sinr = jensen_sinr(k, &best, &phi, &ch, &cfg);
            for _ in 0..1000 {
                let w = random_unit(cfg.n_bs, &mut rng);
                assert!(jensen_sinr(k, &w, &phi, &ch, &cfg) <= best_sinr * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn rate_bound_matches_optimal_jensen_sinr() {
        let (cfg, ch) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut rng);
        for k in 0..cfg.num_users() {
            let direct = expected_rate_lower_bound(k, &phi, &ch, &cfg).unwrap();
            let w = optimal_receive_beamformer(k, &phi, &ch, &cfg).unwrap();
            let via_sinr = (1.0 + jensen_sinr(k, &w, &phi, &ch, &cfg)).log2();
            assert!((direct - via_sinr).abs() < 1e-10, "{direct} vs {via_sinr}");
        }
    }

    #[test]
    fn rate_is_zero_without_power_and_monotone_in_it() {
        let mut cfg = tiny_scenario();
        cfg.users[0].power = 0.0;
        let ch = crate::scenario::build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        assert_eq!(expected_rate_lower_bound(0, &phi, &ch, &cfg).unwrap(), 0.0);

        let mut last = 0.0;
        for p in [1e-4, 1e-3, 1e-2, 1e-1] {
            cfg.users[0].power = p;
            let r = expected_rate_lower_bound(0, &phi, &ch, &cfg).unwrap();
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn fisher_observation_zero_power_and_linear_in_block_length() {
        let (mut cfg, ch) = setup();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        let base = fisher_observation(&phi, &ch, &cfg).unwrap();
        assert!(base > 0.0);

        cfg.block_len *= 3;
        let tripled = fisher_observation(&phi, &ch, &cfg).unwrap();
        assert!((tripled / base - 3.0).abs() < 1e-12);

        cfg.p0 = 0.0;
        assert_eq!(fisher_observation(&phi, &ch, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn fisher_evd_form_matches_quadrature() {
        for cfg in [tiny_scenario(), tiny_scenario_grouped()] {
            let ch =
                crate::scenario::build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for _ in 0..3 {
                let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut rng);
                let evd_form = fisher_observation(&phi, &ch, &cfg).unwrap();
                let quad_form = fisher_observation_quadrature(&phi, &ch, &cfg).unwrap();
                let rel = ((evd_form - quad_form) / quad_form).abs();
                assert!(rel < 1e-6, "rel {rel:.3e}");
            }
        }
    }

    #[test]
    fn fisher_equivalence_holds_for_unweighted_convention() {
        let mut cfg = tiny_scenario();
        cfg.unweighted_moments = true;
        let ch = crate::scenario::build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut ChaCha8Rng::seed_from_u64(11));
        let evd_form = fisher_observation(&phi, &ch, &cfg).unwrap();
        let quad_form = fisher_observation_quadrature(&phi, &ch, &cfg).unwrap();
        assert!(((evd_form - quad_form) / quad_form).abs() < 1e-6);
    }

    #[test]
    fn pcrb_reduces_to_prior_and_decreases_with_power() {
        let (mut cfg, ch) = setup();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        cfg.p0 = 0.0;
        let prior_only = pcrb(&phi, &ch, &cfg).unwrap();
        assert!((prior_only - 1.0 / ch.f_p).abs() < 1e-15 * prior_only);

        let mut last = prior_only;
        for p0 in [1e-3, 1e-2, 1e-1] {
            cfg.p0 = p0;
            let v = pcrb(&phi, &ch, &cfg).unwrap();
            assert!(v < last);
            assert!(v <= 1.0 / ch.f_p);
            last = v;
        }
    }

    #[test]
    fn pcrb_is_phase_invariant_without_direct_links() {
        let mut cfg = tiny_scenario();
        for u in &mut cfg.users {
            u.direct_blocked = true;
        }
        let ch = crate::scenario::build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut ChaCha8Rng::seed_from_u64(13));
        let base = pcrb(&phi, &ch, &cfg).unwrap();
        for beta in [0.37, 1.9, -2.4] {
            let rotated = phi.phase_rotated(beta);
            let v = pcrb(&rotated, &ch, &cfg).unwrap();
            assert!(((v - base) / base).abs() < 1e-10, "beta={beta}: {v} vs {base}");
        }
    }

    #[test]
    fn monte_carlo_collapses_without_target_power() {
        let mut cfg = tiny_scenario();
        cfg.p0 = 0.0;
        let ch = crate::scenario::build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(14)).unwrap();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let (mean, se) = monte_carlo_expected_rate(0, &phi, &ch, &cfg, 500, &mut rng).unwrap();
        assert_eq!(se, 0.0);
        let bound = expected_rate_lower_bound(0, &phi, &ch, &cfg).unwrap();
        assert!((mean - bound).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_respects_jensen_direction() {
        let (cfg, ch) = setup();
        let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut ChaCha8Rng::seed_from_u64(16));
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 0..cfg.num_users() {
            let (mean, se) =
                monte_carlo_expected_rate(k, &phi, &ch, &cfg, 10_000, &mut rng).unwrap();
            let bound = expected_rate_lower_bound(k, &phi, &ch, &cfg).unwrap();
            assert!(
                mean >= bound - 3.0 * se,
                "user {k}: mc {mean} vs bound {bound} (se {se})"
            );
        }
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let (cfg, ch) = setup();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        let a =
            monte_carlo_expected_rate(0, &phi, &ch, &cfg, 200, &mut ChaCha8Rng::seed_from_u64(20))
                .unwrap();
        let b =
            monte_carlo_expected_rate(0, &phi, &ch, &cfg, 200, &mut ChaCha8Rng::seed_from_u64(20))
                .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn beampattern_is_nonnegative_and_power_scaled() {
        let (cfg, ch) = setup();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        let grid: Vec<f64> = (0..64).map(|i| i as f64 * std::f64::consts::PI / 64.0).collect();
        let pattern = sensing_beampattern(&phi, &ch, &cfg, &grid).unwrap();
        assert_eq!(pattern.len(), 64);
        for &(theta, p) in &pattern {
            assert!(p >= 0.0 && p.is_finite(), "theta={theta}");
        }

        let cfg0 = cfg.with_p0(0.0);
        let zeros = sensing_beampattern(&phi, &ch, &cfg0, &grid).unwrap();
        assert!(zeros.iter().all(|&(_, p)| p == 0.0));
    }

    #[test]
    fn sensing_beamformer_dominates_random_competitors() {
        let (cfg, ch) = setup();
        let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut ChaCha8Rng::seed_from_u64(21));
        let w0 = sensing_beamformer(&phi, &ch, &cfg).unwrap();
        let best = expected_sensing_sinr(&w0, &phi, &ch, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..1000 {
            let w = random_unit(cfg.n_bs, &mut rng);
            assert!(expected_sensing_sinr(&w, &phi, &ch, &cfg) <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn evaluate_collects_consistent_summary() {
        let (cfg, ch) = setup();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        let m = evaluate(&phi, &ch, &cfg).unwrap();
        assert_eq!(m.rates.len(), 2);
        assert!(
            (m.min_rate - m.rates.iter().copied().fold(f64::INFINITY, f64::min)).abs() < 1e-15
        );
        assert!(m.pcrb > 0.0);
        assert_eq!(m.feasible, m.pcrb <= cfg.gamma_pcrb);
        assert!((m.pcrb - 1.0 / (m.f_o + ch.f_p)).abs() < 1e-15 * m.pcrb);
    }
}
