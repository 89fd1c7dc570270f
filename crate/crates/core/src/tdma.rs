//! Time-division alternative: the block is split into a sensing stage and a
//! communication stage with separately optimized reflection matrices and a
//! closed-form optimal time fraction.

use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics;
use crate::pdd::{self, PddConfig};
use crate::reflection::ReflectionMatrix;
use crate::scenario::{ChannelSet, ScenarioConfig};

/// A complete TDMA operating point.
#[derive(Debug, Clone)]
pub struct TdmaPlan {
    /// Sensing-stage reflection matrix.
    pub phi_s: ReflectionMatrix,
    /// Communication-stage reflection matrix.
    pub phi_c: ReflectionMatrix,
    /// Fraction of the block spent sensing.
    pub q: f64,
    /// Effective per-user rates including the `1 - q` pre-log factor.
    pub rates: Vec<f64>,
    /// Worst-case effective rate.
    pub min_rate: f64,
    /// PCRB achieved by the sensing stage at fraction `q`.
    pub pcrb: f64,
    /// Whether the threshold is met.
    pub feasible: bool,
}

impl TdmaPlan {
    /// Time fraction after rounding the sensing stage up to a whole number
    /// of symbols; the continuous fraction remains the optimization object.
    pub fn q_rounded_up(&self, block_len: usize) -> f64 {
        (self.q * block_len as f64).ceil() / block_len as f64
    }
}

/// Interference-free sensing gain of the sensing stage,
/// `sum_z kappa_z ||R Phi_S u_z||^2`.
pub fn sensing_gain(phi_s: &ReflectionMatrix, ch: &ChannelSet) -> f64 {
    let full = phi_s.full();
    let rp = &ch.r_mat * &full;
    (0..ch.u_evd.rank)
        .map(|z| {
            let u = ch.u_evd.vectors.column(z).into_owned();
            ch.u_evd.values[z] * (&rp * u).norm_squared()
        })
        .sum()
}

/// PCRB of the TDMA sensing stage: users are silent, so the interference
/// covariance collapses to the noise floor and only the time fraction scales
/// the information.
pub fn pcrb_tdma(phi_s: &ReflectionMatrix, q: f64, ch: &ChannelSet, cfg: &ScenarioConfig) -> f64 {
    let info = 2.0 * cfg.p0 * q * cfg.block_len as f64 / cfg.sigma2 * sensing_gain(phi_s, ch);
    1.0 / (info + ch.f_p)
}

/// Closed-form optimal sensing fraction: the smallest `q` meeting the
/// threshold, clamped at zero when the prior alone suffices. Errors when
/// even `q = 1` misses the threshold, reporting that floor.
pub fn optimal_q(phi_s: &ReflectionMatrix, ch: &ChannelSet, cfg: &ScenarioConfig) -> Result<f64> {
    let floor = pcrb_tdma(phi_s, 1.0, ch, cfg);
    if floor > cfg.gamma_pcrb {
        return Err(Error::InfeasibleThreshold {
            threshold: cfg.gamma_pcrb,
            floor,
        });
    }
    let need = 1.0 / cfg.gamma_pcrb - ch.f_p;
    if need <= 0.0 {
        return Ok(0.0);
    }
    let denom = 2.0 * cfg.p0 * cfg.block_len as f64 / cfg.sigma2 * sensing_gain(phi_s, ch);
    Ok(need / denom)
}

/// Builds the full TDMA plan: the sensing-stage matrix from the PCRB
/// minimization with users silent, the communication-stage matrix from the
/// interference-free max-min rate design, and the closed-form time split.
pub fn plan_tdma(ch: &ChannelSet, cfg: &ScenarioConfig, pdd_cfg: &PddConfig) -> Result<TdmaPlan> {
    let sensing_cfg = cfg.without_users();
    let (phi_s, _, _) = pdd::solve_sensing_only(ch, &sensing_cfg, pdd_cfg)?;
    let phi_c = pdd::solve_maxmin_rate_no_sensing(ch, cfg, pdd_cfg)?;
    let q = optimal_q(&phi_s, ch, cfg)?;

    let comm_cfg = cfg.with_p0(0.0);
    let mut rates = Vec::with_capacity(cfg.num_users());
    for k in 0..cfg.num_users() {
        let full_rate = metrics::expected_rate_lower_bound(k, &phi_c, ch, &comm_cfg)?;
        rates.push((1.0 - q) * full_rate);
    }
    let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let pcrb = pcrb_tdma(&phi_s, q, ch, cfg);
    Ok(TdmaPlan {
        phi_s,
        phi_c,
        q,
        rates,
        min_rate,
        pcrb,
        feasible: pcrb <= cfg.gamma_pcrb * (1.0 + 1e-12),
    })
}

/// One row of the SDMA-versus-TDMA comparison.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub gamma_pcrb: f64,
    pub sdma_bound: f64,
    pub sdma_mc: f64,
    pub sdma_mc_se: f64,
    pub tdma_rate: f64,
    pub q_star: f64,
    pub feasible_sdma: bool,
    pub feasible_tdma: bool,
}

/// Sweeps the PCRB threshold and reports both schemes per grid point; the
/// SDMA column carries the rate bound plus a Monte-Carlo estimate of the
/// actual expected minimum-rate user. Infeasible points are recorded with
/// NaN rates rather than aborting the sweep.
pub fn compare_sdma_tdma(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    pdd_cfg: &PddConfig,
    gamma_grid: &[f64],
    mc_samples: usize,
    rng: &mut impl Rng,
) -> Result<Vec<CompareRow>> {
    if gamma_grid.is_empty() {
        return Err(Error::InvalidConfig("comparison grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(gamma_grid.len());
    for &gamma in gamma_grid {
        let mut cfg_g = cfg.clone();
        cfg_g.gamma_pcrb = gamma;

        let (sdma_bound, sdma_mc, sdma_mc_se, feasible_sdma) =
            match pdd::solve_isac(ch, &cfg_g, pdd_cfg) {
                Ok((phi, m, _)) => {
                    let k_min = m
                        .rates
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(k, _)| k)
                        .unwrap_or(0);
                    let (mc, se) = metrics::monte_carlo_expected_rate(
                        k_min, &phi, ch, &cfg_g, mc_samples, rng,
                    )?;
                    (m.min_rate, mc, se, true)
                }
                Err(Error::InfeasibleThreshold { .. }) => (f64::NAN, f64::NAN, f64::NAN, false),
                Err(e) => return Err(e),
            };

        let (tdma_rate, q_star, feasible_tdma) = match plan_tdma(ch, &cfg_g, pdd_cfg) {
            Ok(plan) => (plan.min_rate, plan.q, plan.feasible),
            Err(Error::InfeasibleThreshold { .. }) => (f64::NAN, f64::NAN, false),
            Err(e) => return Err(e),
        };

        rows.push(CompareRow {
            gamma_pcrb: gamma,
            sdma_bound,
            sdma_mc,
            sdma_mc_se,
            tdma_rate,
            q_star,
            feasible_sdma,
            feasible_tdma,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::build_channels;
    use crate::testutil::tiny_scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ScenarioConfig, ChannelSet) {
        let cfg = tiny_scenario();
        let ch = build_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
        (cfg, ch)
    }

    #[test]
    fn zero_fraction_gives_prior_bound() {
        let (cfg, ch) = setup();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        let v = pcrb_tdma(&phi, 0.0, &ch, &cfg);
        assert!((v - 1.0 / ch.f_p).abs() < 1e-15 * v);
    }

    #[test]
    fn full_fraction_matches_userless_pcrb() {
        let (cfg, _) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut rng);
        // q = 1 with users silent equals the general PCRB with no users.
        let cfg0 = cfg.without_users();
        let ch0 = build_channels(&cfg0, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
        let direct = metrics::pcrb(&phi, &ch0, &cfg0).unwrap();
        let via_tdma = pcrb_tdma(&phi, 1.0, &ch0, &cfg0);
        assert!(
            ((direct - via_tdma) / direct).abs() < 1e-10,
            "{direct} vs {via_tdma}"
        );
    }

    #[test]
    fn pcrb_is_strictly_decreasing_in_q() {
        let (cfg, ch) = setup();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        let mut last = f64::INFINITY;
        for i in 0..=10 {
            let v = pcrb_tdma(&phi, i as f64 / 10.0, &ch, &cfg);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn optimal_q_matches_bisection() {
        let (mut cfg, ch) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut interior = 0;
        for _ in 0..100 {
            let phi = ReflectionMatrix::random(&cfg.group_sizes, &mut rng);
            let floor = pcrb_tdma(&phi, 1.0, &ch, &cfg);
            let ceil = 1.0 / ch.f_p;
            // Random threshold; some fall outside the attainable band on
            // purpose to exercise both branches.
            let u: f64 = rand::Rng::gen(&mut rng);
            cfg.gamma_pcrb = floor * (ceil / floor).powf(u * 1.2 - 0.1);
            match optimal_q(&phi, &ch, &cfg) {
                Err(Error::InfeasibleThreshold { floor: f, .. }) => {
                    assert!(cfg.gamma_pcrb < f);
                }
                Err(other) => panic!("unexpected error {other}"),
                Ok(q) => {
                    assert!((0.0..=1.0 + 1e-12).contains(&q));
                    if q == 0.0 {
                        assert!(ch.f_p >= 1.0 / cfg.gamma_pcrb - 1e-9);
                    }
                    if q > 0.0 && q < 1.0 {
                        interior += 1;
                        // Bisection oracle on the monotone pcrb(q).
                        let (mut lo, mut hi) = (0.0, 1.0);
                        for _ in 0..200 {
                            let mid = 0.5 * (lo + hi);
                            if pcrb_tdma(&phi, mid, &ch, &cfg) > cfg.gamma_pcrb {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        assert!(
                            (q - hi).abs() <= 1e-10,
                            "closed form {q} vs bisection {hi}"
                        );
                        // The threshold holds with equality at q*.
                        let at = pcrb_tdma(&phi, q, &ch, &cfg);
                        assert!(((at - cfg.gamma_pcrb) / cfg.gamma_pcrb).abs() < 1e-12);
                    }
                }
            }
        }
        assert!(interior > 10, "only {interior} interior cases exercised");
    }

    #[test]
    fn optimal_q_boundary_cases() {
        let (mut cfg, ch) = setup();
        let phi = ReflectionMatrix::identity(&cfg.group_sizes);
        // Prior alone suffices.
        cfg.gamma_pcrb = 2.0 / ch.f_p;
        assert_eq!(optimal_q(&phi, &ch, &cfg).unwrap(), 0.0);
        // Exactly the q = 1 floor.
        cfg.gamma_pcrb = pcrb_tdma(&phi, 1.0, &ch, &cfg);
        let q = optimal_q(&phi, &ch, &cfg).unwrap();
        assert!((q - 1.0).abs() < 1e-12, "q = {q}");
    }

    #[test]
    fn plan_rates_carry_the_prelog_factor() {
        let (mut cfg, ch) = setup();
        // A mid-band threshold so 0 < q* < 1.
        let pdd_cfg = PddConfig::default();
        let sensing_cfg = cfg.without_users();
        let (phi_s, _, _) = pdd::solve_sensing_only(&ch, &sensing_cfg, &pdd_cfg).unwrap();
        let floor = pcrb_tdma(&phi_s, 1.0, &ch, &cfg);
        cfg.gamma_pcrb = (floor + 1.0 / ch.f_p) / 2.0;

        let plan = plan_tdma(&ch, &cfg, &pdd_cfg).unwrap();
        assert!(plan.q > 0.0 && plan.q < 1.0, "q = {}", plan.q);
        assert!(plan.feasible);
        // Reported threshold holds with equality in the interior.
        assert!(((plan.pcrb - cfg.gamma_pcrb) / cfg.gamma_pcrb).abs() < 1e-10);

        let comm_cfg = cfg.with_p0(0.0);
        for (k, rate) in plan.rates.iter().enumerate() {
            let full =
                metrics::expected_rate_lower_bound(k, &plan.phi_c, &ch, &comm_cfg).unwrap();
            assert!((rate - (1.0 - plan.q) * full).abs() < 1e-12);
        }
        assert!(plan.q_rounded_up(cfg.block_len) >= plan.q);
        assert!((plan.q_rounded_up(cfg.block_len) * cfg.block_len as f64).fract().abs() < 1e-9);
    }

    #[test]
    fn loose_threshold_spends_everything_on_communication() {
        let (mut cfg, ch) = setup();
        cfg.gamma_pcrb = 10.0 / ch.f_p;
        let plan = plan_tdma(&ch, &cfg, &PddConfig::default()).unwrap();
        assert_eq!(plan.q, 0.0);
        let comm_cfg = cfg.with_p0(0.0);
        for (k, rate) in plan.rates.iter().enumerate() {
            let full =
                metrics::expected_rate_lower_bound(k, &plan.phi_c, &ch, &comm_cfg).unwrap();
            assert!((rate - full).abs() < 1e-12);
        }
    }

    #[test]
    fn comparison_table_is_consistent_and_deterministic() {
        let (mut cfg, ch) = setup();
        // Grid from slightly above the TDMA floor to loose.
        let pdd_cfg = PddConfig::default();
        let sensing_cfg = cfg.without_users();
        let (phi_s, _, _) = pdd::solve_sensing_only(&ch, &sensing_cfg, &pdd_cfg).unwrap();
        let floor = pcrb_tdma(&phi_s, 1.0, &ch, &cfg);
        cfg.gamma_pcrb = floor;
        let grid: Vec<f64> = (0..3)
            .map(|i| floor * 1.05 * (1.0 / (1.3 * ch.f_p * floor)).powf(i as f64 / 2.0))
            .collect();

        let rows = compare_sdma_tdma(
            &ch,
            &cfg,
            &pdd_cfg,
            &grid,
            2000,
            &mut ChaCha8Rng::seed_from_u64(31),
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            if row.feasible_sdma {
                assert!(row.sdma_mc >= row.sdma_bound - 3.0 * row.sdma_mc_se);
            }
            if row.feasible_tdma {
                assert!((0.0..=1.0).contains(&row.q_star));
            }
        }
        // Rates do not decrease as the threshold loosens.
        for w in rows.windows(2) {
            if w[0].feasible_tdma && w[1].feasible_tdma {
                assert!(w[1].tdma_rate >= w[0].tdma_rate - 1e-9);
            }
            if w[0].feasible_sdma && w[1].feasible_sdma {
                assert!(w[1].sdma_bound >= w[0].sdma_bound - 1e-4);
            }
        }

        let again = compare_sdma_tdma(
            &ch,
            &cfg,
            &pdd_cfg,
            &grid,
            2000,
            &mut ChaCha8Rng::seed_from_u64(31),
        )
        .unwrap();
        for (a, b) in rows.iter().zip(&again) {
            assert_eq!(a.sdma_bound.to_bits(), b.sdma_bound.to_bits());
            assert_eq!(a.sdma_mc.to_bits(), b.sdma_mc.to_bits());
            assert_eq!(a.tdma_rate.to_bits(), b.tdma_rate.to_bits());
        }
    }
}
