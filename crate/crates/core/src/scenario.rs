//! Scene construction: geometry, the Gaussian-mixture prior on the target
//! angle, channel realizations, and the precomputed statistical matrices the
//! bounds are built from.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_evd, standard_complex_gaussian, CMat, CVec, Complex64, HermitianEvd,
    DEFAULT_RANK_TOL,
};
use crate::quadrature::{integrate_adaptive, integrate_matrix_adaptive};

/// Half-width of each mixture component's integration window, in standard
/// deviations. Gaussian mass outside `8 sigma` is below 1e-15.
const SUPPORT_SIGMAS: f64 = 8.0;

/// Relative Frobenius tolerance for the moment-matrix quadrature refinement.
const MOMENT_QUAD_TOL: f64 = 1e-9;

/// Relative tolerance for scalar prior quadratures.
const PRIOR_QUAD_TOL: f64 = 1e-10;

// ─── Prior ─────────────────────────────────────────────────────────────────────

/// One Gaussian component of the angle prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    /// Mixture weight.
    pub weight: f64,
    /// Mean angle in radians.
    pub mean: f64,
    /// Variance in radians squared.
    pub variance: f64,
}

/// Gaussian mixture prior on the target azimuth angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MixtureComponent>", into = "Vec<MixtureComponent>")]
pub struct GaussianMixturePrior {
    components: Vec<MixtureComponent>,
}

impl TryFrom<Vec<MixtureComponent>> for GaussianMixturePrior {
    type Error = Error;
    fn try_from(components: Vec<MixtureComponent>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<GaussianMixturePrior> for Vec<MixtureComponent> {
    fn from(p: GaussianMixturePrior) -> Self {
        p.components
    }
}

impl GaussianMixturePrior {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidConfig("prior needs at least one component".into()));
        }
        let mut total = 0.0;
        for c in &components {
            if c.weight <= 0.0 || !c.weight.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "prior weight {} must be positive",
                    c.weight
                )));
            }
            if c.variance <= 0.0 || !c.variance.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "prior variance {} must be positive",
                    c.variance
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "prior weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { components })
    }

    /// Equal-weight single- or multi-point helper used by tests.
    pub fn single(mean: f64, variance: f64) -> Self {
        Self::new(vec![MixtureComponent {
            weight: 1.0,
            mean,
            variance,
        }])
        .expect("single component is always valid")
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    /// Mixture density at `theta`.
    pub fn pdf(&self, theta: f64) -> f64 {
        self.components.iter().map(|c| weighted_gaussian(c, theta)).sum()
    }

    /// Interval containing all component means plus `8 sigma` on either side.
    pub fn support(&self) -> (f64, f64) {
        let lo = self
            .components
            .iter()
            .map(|c| c.mean - SUPPORT_SIGMAS * c.variance.sqrt())
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .components
            .iter()
            .map(|c| c.mean + SUPPORT_SIGMAS * c.variance.sqrt())
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Prior Fisher information `F_P = -E[d^2 ln p / d theta^2]`, evaluated
    /// through the mixture-specific form: the weighted inverse variances minus
    /// a cross-component correction integral (which vanishes for a single
    /// component).
    pub fn fisher_prior(&self) -> Result<f64> {
        let base: f64 = self.components.iter().map(|c| c.weight / c.variance).sum();
        if self.components.len() == 1 {
            return Ok(base);
        }
        let (lo, hi) = self.support();
        let correction = integrate_adaptive(lo, hi, PRIOR_QUAD_TOL, |theta| {
            let etas: Vec<f64> = self
                .components
                .iter()
                .map(|c| weighted_gaussian(c, theta))
                .collect();
            let denom: f64 = 2.0 * etas.iter().sum::<f64>();
            if denom < 1e-280 {
                return 0.0;
            }
            let mut num = 0.0;
            for (i1, c1) in self.components.iter().enumerate() {
                for (i2, c2) in self.components.iter().enumerate() {
                    let diff =
                        (theta - c1.mean) / c1.variance - (theta - c2.mean) / c2.variance;
                    num += etas[i1] * etas[i2] * diff * diff;
                }
            }
            num / denom
        })?;
        Ok(base - correction)
    }

    /// Draws one angle: component by weight, then its Gaussian.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = &self.components[self.components.len() - 1];
        for c in &self.components {
            acc += c.weight;
            if u <= acc {
                chosen = c;
                break;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        chosen.mean + chosen.variance.sqrt() * z
    }

    /// Expectation of a matrix-valued function against the prior, integrating
    /// each component over its own `8 sigma` window.
    pub fn expect_matrix(&self, f: impl Fn(f64) -> CMat) -> Result<CMat> {
        let mut acc: Option<CMat> = None;
        for c in &self.components {
            let sigma = c.variance.sqrt();
            let (lo, hi) = (c.mean - SUPPORT_SIGMAS * sigma, c.mean + SUPPORT_SIGMAS * sigma);
            let part = integrate_matrix_adaptive(lo, hi, MOMENT_QUAD_TOL, |theta| {
                f(theta) * Complex64::new(weighted_gaussian(c, theta), 0.0)
            })?;
            acc = Some(match acc {
                None => part,
                Some(a) => a + part,
            });
        }
        Ok(acc.expect("prior has at least one component"))
    }

    /// Scalar counterpart of [`Self::expect_matrix`].
    pub fn expect_scalar(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for c in &self.components {
            let sigma = c.variance.sqrt();
            let (lo, hi) = (c.mean - SUPPORT_SIGMAS * sigma, c.mean + SUPPORT_SIGMAS * sigma);
            acc += integrate_adaptive(lo, hi, PRIOR_QUAD_TOL, |theta| {
                f(theta) * weighted_gaussian(c, theta)
            })?;
        }
        Ok(acc)
    }
}

fn weighted_gaussian(c: &MixtureComponent, theta: f64) -> f64 {
    let d = theta - c.mean;
    c.weight * (-d * d / (2.0 * c.variance)).exp()
        / (c.variance.sqrt() * (2.0 * std::f64::consts::PI).sqrt())
}

// ─── Configuration ─────────────────────────────────────────────────────────────

/// One uplink communication user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserConfig {
    /// User-to-IRS distance in meters.
    pub r_ui: f64,
    /// User angle of arrival at the IRS, radians.
    pub theta: f64,
    /// Transmit power in watts.
    pub power: f64,
    /// Whether the direct user-BS link is blocked (zero channel).
    #[serde(default)]
    pub direct_blocked: bool,
}

/// Full experiment scene definition. All quantities are in linear SI units
/// (watts, meters, radians); dB/dBm conversion happens at config-file parse
/// time only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// BS receive antenna count `N`.
    pub n_bs: usize,
    /// IRS element columns per row (`M_x`) and rows (`M_z`); `M = M_x * M_z`.
    pub m_x: usize,
    pub m_z: usize,
    /// Element group sizes; must sum to `M`.
    pub group_sizes: Vec<usize>,
    /// Target-to-IRS distance in meters.
    pub r_target: f64,
    /// IRS-to-BS distance in meters.
    pub r_ib: f64,
    /// Target probing power in watts.
    pub p0: f64,
    /// Receiver noise power in watts.
    pub sigma2: f64,
    /// Coherence block length in symbols.
    pub block_len: usize,
    /// Reference channel amplitude gain at 1 m (linear).
    pub beta0: f64,
    /// Element spacing in meters.
    pub spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// Rician factor of the IRS-BS channel (linear power ratio).
    pub rician_factor: f64,
    /// Path-loss exponent of the direct user-BS links.
    pub path_loss_exp_direct: f64,
    /// Angle of arrival of the IRS-BS link at the BS, radians.
    pub theta_ib_aoa: f64,
    /// Communication users.
    pub users: Vec<UserConfig>,
    /// Prior distribution of the target angle.
    pub prior: GaussianMixturePrior,
    /// PCRB threshold in radians squared.
    pub gamma_pcrb: f64,
    /// Use the plain-integral convention for the second moments instead of a
    /// density-weighted expectation.
    #[serde(default)]
    pub unweighted_moments: bool,
}

impl ScenarioConfig {
    /// Total IRS element count.
    pub fn m_total(&self) -> usize {
        self.m_x * self.m_z
    }

    /// User count `K`.
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// Phase constant `2 pi spacing / wavelength`.
    pub fn phase_coeff(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.spacing / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bs == 0 || self.m_x == 0 || self.m_z == 0 {
            return Err(Error::InvalidConfig("antenna/element counts must be positive".into()));
        }
        let m = self.m_total();
        let total: usize = self.group_sizes.iter().sum();
        if total != m || self.group_sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "group sizes {:?} must be positive and sum to {m}",
                self.group_sizes
            )));
        }
        for (name, v) in [
            ("r_target", self.r_target),
            ("r_ib", self.r_ib),
            ("sigma2", self.sigma2),
            ("beta0", self.beta0),
            ("spacing", self.spacing),
            ("wavelength", self.wavelength),
            ("gamma_pcrb", self.gamma_pcrb),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} = {v} must be positive")));
            }
        }
        if self.p0 < 0.0 || !self.p0.is_finite() {
            return Err(Error::InvalidConfig(format!("p0 = {} must be non-negative", self.p0)));
        }
        if self.block_len == 0 {
            return Err(Error::InvalidConfig("block_len must be positive".into()));
        }
        if self.rician_factor < 0.0 {
            return Err(Error::InvalidConfig("rician_factor must be non-negative".into()));
        }
        for (k, u) in self.users.iter().enumerate() {
            if u.r_ui <= 0.0 || !u.r_ui.is_finite() || u.power < 0.0 || !u.theta.is_finite() {
                return Err(Error::InvalidConfig(format!("user {k} has invalid parameters")));
            }
        }
        Ok(())
    }

    /// Copy with the target power (and hence all sensing terms) set to zero.
    pub fn with_p0(&self, p0: f64) -> Self {
        let mut out = self.clone();
        out.p0 = p0;
        out
    }

    /// Copy with all communication users removed.
    pub fn without_users(&self) -> Self {
        let mut out = self.clone();
        out.users.clear();
        out
    }
}

// ─── Steering vectors ──────────────────────────────────────────────────────────

/// IRS steering vector toward the target at angle `theta`: element `m` has
/// amplitude `beta0 / r` and phase `phase_coeff * (m mod M_x) * cos(theta)`.
pub fn steering_target(theta: f64, cfg: &ScenarioConfig) -> CVec {
    let amp = cfg.beta0 / cfg.r_target;
    irs_steering(theta, cfg, amp)
}

/// Analytic derivative of [`steering_target`] with respect to `theta`.
pub fn steering_derivative(theta: f64, cfg: &ScenarioConfig) -> CVec {
    let g = steering_target(theta, cfg);
    let coeff = cfg.phase_coeff();
    let m_x = cfg.m_x;
    CVec::from_fn(g.len(), |m, _| {
        let idx = (m % m_x) as f64;
        Complex64::new(0.0, -coeff * idx * theta.sin()) * g[m]
    })
}

fn irs_steering(theta: f64, cfg: &ScenarioConfig, amp: f64) -> CVec {
    let coeff = cfg.phase_coeff();
    let m = cfg.m_total();
    CVec::from_fn(m, |i, _| {
        let idx = (i % cfg.m_x) as f64;
        Complex64::from_polar(amp, coeff * idx * theta.cos())
    })
}

/// BS uniform-linear-array steering vector (unit amplitude).
pub fn bs_steering(theta: f64, cfg: &ScenarioConfig) -> CVec {
    let coeff = cfg.phase_coeff();
    CVec::from_fn(cfg.n_bs, |n, _| Complex64::from_polar(1.0, coeff * n as f64 * theta.cos()))
}

// ─── Channels ──────────────────────────────────────────────────────────────────

/// Realized channels and the statistics precomputed from the prior.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// IRS-to-BS channel, `N x M`.
    pub r_mat: CMat,
    /// Direct user-to-BS channels, each length `N`.
    pub h_direct: Vec<CVec>,
    /// User-to-IRS channels, each length `M`.
    pub h_irs: Vec<CVec>,
    /// Second moment of the target steering vector, `M x M` Hermitian PSD.
    pub g_moment: CMat,
    /// Second moment of the steering derivative, `M x M` Hermitian PSD.
    pub u_moment: CMat,
    /// Eigendecomposition of `u_moment` with its numerical rank.
    pub u_evd: HermitianEvd,
    /// Eigendecomposition of `g_moment` (used to factor PSD quadratics).
    pub g_evd: HermitianEvd,
    /// Prior Fisher information.
    pub f_p: f64,
}

/// Second moment of the target steering vector over the prior.
pub fn second_moment_g(cfg: &ScenarioConfig) -> Result<CMat> {
    let f = |theta: f64| {
        let g = steering_target(theta, cfg);
        &g * g.adjoint()
    };
    let raw = if cfg.unweighted_moments {
        integrate_matrix_adaptive(0.0, std::f64::consts::PI, MOMENT_QUAD_TOL, f)?
    } else {
        cfg.prior.expect_matrix(f)?
    };
    Ok((&raw + raw.adjoint()).scale(0.5))
}

/// Second moment of the steering derivative over the prior.
pub fn second_moment_u(cfg: &ScenarioConfig) -> Result<CMat> {
    let f = |theta: f64| {
        let dg = steering_derivative(theta, cfg);
        &dg * dg.adjoint()
    };
    let raw = if cfg.unweighted_moments {
        integrate_matrix_adaptive(0.0, std::f64::consts::PI, MOMENT_QUAD_TOL, f)?
    } else {
        cfg.prior.expect_matrix(f)?
    };
    Ok((&raw + raw.adjoint()).scale(0.5))
}

/// Line-of-sight component of the IRS-BS channel (unit-amplitude entries).
pub fn irs_bs_los(cfg: &ScenarioConfig) -> CMat {
    let theta_aod = cfg.theta_ib_aoa + std::f64::consts::FRAC_PI_2;
    let a = bs_steering(cfg.theta_ib_aoa, cfg);
    let b = irs_steering(theta_aod, cfg, 1.0);
    &a * b.adjoint()
}

/// User-to-BS distance from the scene geometry (law of cosines between the
/// IRS-BS segment and the user-IRS segment).
pub fn user_bs_distance(user: &UserConfig, cfg: &ScenarioConfig) -> f64 {
    let theta_aod = cfg.theta_ib_aoa + std::f64::consts::FRAC_PI_2;
    (cfg.r_ib * cfg.r_ib + user.r_ui * user.r_ui
        - 2.0 * cfg.r_ib * user.r_ui * (theta_aod - user.theta).cos())
    .sqrt()
}

/// Builds channels and prior statistics; a pure function of `(cfg, rng seed)`.
///
/// Draw order is fixed: the Rayleigh part of the IRS-BS channel column by
/// column, then each user's direct channel in user order.
pub fn build_channels(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<ChannelSet> {
    cfg.validate()?;
    let n = cfg.n_bs;
    let m = cfg.m_total();

    let beta_ib = cfg.beta0 / cfg.r_ib;
    let chi = cfg.rician_factor;
    let los = irs_bs_los(cfg);
    let nlos_entries: Vec<Complex64> =
        (0..n * m).map(|_| standard_complex_gaussian(rng)).collect();
    let nlos = CMat::from_column_slice(n, m, &nlos_entries);
    let r_mat = (los * Complex64::new(chi.sqrt(), 0.0) + nlos)
        .scale(beta_ib / (chi + 1.0).sqrt());

    let mut h_direct = Vec::with_capacity(cfg.num_users());
    let mut h_irs = Vec::with_capacity(cfg.num_users());
    for user in &cfg.users {
        let r_ub = user_bs_distance(user, cfg);
        let amp = cfg.beta0 / r_ub.powf(cfg.path_loss_exp_direct / 2.0);
        let drawn: Vec<Complex64> = (0..n).map(|_| standard_complex_gaussian(rng)).collect();
        let hd = if user.direct_blocked {
            CVec::zeros(n)
        } else {
            CVec::from_vec(drawn) * Complex64::new(amp, 0.0)
        };
        h_direct.push(hd);
        h_irs.push(irs_steering(user.theta, cfg, cfg.beta0 / user.r_ui));
    }

    let g_moment = second_moment_g(cfg)?;
    let u_moment = second_moment_u(cfg)?;
    let u_evd = hermitian_evd(&u_moment, DEFAULT_RANK_TOL)?;
    let g_evd = hermitian_evd(&g_moment, DEFAULT_RANK_TOL)?;
    let f_p = cfg.prior.fisher_prior()?;

    Ok(ChannelSet {
        r_mat,
        h_direct,
        h_irs,
        g_moment,
        u_moment,
        u_evd,
        g_evd,
        f_p,
    })
}

impl ChannelSet {
    /// Effective channel of user `k` under reflection `phi_full`.
    pub fn effective_channel(&self, k: usize, phi_full: &CMat) -> CVec {
        &self.h_direct[k] + &self.r_mat * phi_full * &self.h_irs[k]
    }
}

/// Weighted sample draw used only by Monte-Carlo verification paths.
pub fn sample_theta(prior: &GaussianMixturePrior, rng: &mut impl Rng) -> f64 {
    prior.sample(rng)
}

// ─── Config file format ────────────────────────────────────────────────────────

/// Unit declaration for angle fields in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    Radians,
    Degrees,
}

/// On-disk scenario schema: the same fields as [`ScenarioConfig`] plus
/// explicit units. Angles follow `angle_unit`; powers and gains are written
/// with unit-suffixed keys (`*_dbm` / `*_watt`, `*_db` / `*_linear`), exactly
/// one of each pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub angle_unit: AngleUnit,
    pub n_bs: usize,
    pub m_x: usize,
    pub m_z: usize,
    pub group_sizes: Vec<usize>,
    pub r_target: f64,
    pub r_ib: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0_watt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_watt: Option<f64>,
    pub block_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0_linear: Option<f64>,
    pub spacing: f64,
    pub wavelength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rician_factor_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rician_factor_linear: Option<f64>,
    pub path_loss_exp_direct: f64,
    pub theta_ib_aoa: f64,
    pub users: Vec<UserFile>,
    pub prior: Vec<MixtureComponentFile>,
    pub gamma_pcrb: f64,
    #[serde(default)]
    pub unweighted_moments: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserFile {
    pub r_ui: f64,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_watt: Option<f64>,
    #[serde(default)]
    pub direct_blocked: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureComponentFile {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// dBm to watts.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Watts to dBm.
pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

/// Power-dB value to the linear amplitude it implies (`10^(db/20)`).
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Power-dB to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn pick_unit(name: &str, primary: Option<f64>, alt: Option<f64>, conv: impl Fn(f64) -> f64) -> Result<f64> {
    match (primary, alt) {
        (Some(v), None) => Ok(conv(v)),
        (None, Some(v)) => Ok(v),
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!(
            "{name}: both unit variants given; specify exactly one"
        ))),
        (None, None) => Err(Error::InvalidConfig(format!("{name}: value missing"))),
    }
}

impl ScenarioFile {
    /// Converts the file schema into internal linear SI units.
    pub fn into_config(self) -> Result<ScenarioConfig> {
        let to_rad = |v: f64| match self.angle_unit {
            AngleUnit::Radians => v,
            AngleUnit::Degrees => v.to_radians(),
        };
        let users = self
            .users
            .into_iter()
            .map(|u| {
                Ok(UserConfig {
                    r_ui: u.r_ui,
                    theta: to_rad(u.theta),
                    power: pick_unit("user power", u.power_dbm, u.power_watt, dbm_to_watt)?,
                    direct_blocked: u.direct_blocked,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let prior = GaussianMixturePrior::new(
            self.prior
                .into_iter()
                .map(|c| {
                    let scale = match self.angle_unit {
                        AngleUnit::Radians => 1.0,
                        AngleUnit::Degrees => std::f64::consts::PI / 180.0,
                    };
                    MixtureComponent {
                        weight: c.weight,
                        mean: to_rad(c.mean),
                        variance: c.variance * scale * scale,
                    }
                })
                .collect(),
        )?;
        let cfg = ScenarioConfig {
            n_bs: self.n_bs,
            m_x: self.m_x,
            m_z: self.m_z,
            group_sizes: self.group_sizes,
            r_target: self.r_target,
            r_ib: self.r_ib,
            p0: pick_unit("p0", self.p0_dbm, self.p0_watt, dbm_to_watt)?,
            sigma2: pick_unit("sigma2", self.sigma2_dbm, self.sigma2_watt, dbm_to_watt)?,
            block_len: self.block_len,
            beta0: pick_unit("beta0", self.beta0_db, self.beta0_linear, db_to_amplitude)?,
            spacing: self.spacing,
            wavelength: self.wavelength,
            rician_factor: pick_unit(
                "rician_factor",
                self.rician_factor_db,
                self.rician_factor_linear,
                db_to_linear,
            )?,
            path_loss_exp_direct: self.path_loss_exp_direct,
            theta_ib_aoa: to_rad(self.theta_ib_aoa),
            users,
            prior,
            gamma_pcrb: self.gamma_pcrb,
            unweighted_moments: self.unweighted_moments,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Writes a config back out in radians/watts form.
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            angle_unit: AngleUnit::Radians,
            n_bs: cfg.n_bs,
            m_x: cfg.m_x,
            m_z: cfg.m_z,
            group_sizes: cfg.group_sizes.clone(),
            r_target: cfg.r_target,
            r_ib: cfg.r_ib,
            p0_dbm: None,
            p0_watt: Some(cfg.p0),
            sigma2_dbm: None,
            sigma2_watt: Some(cfg.sigma2),
            block_len: cfg.block_len,
            beta0_db: None,
            beta0_linear: Some(cfg.beta0),
            spacing: cfg.spacing,
            wavelength: cfg.wavelength,
            rician_factor_db: None,
            rician_factor_linear: Some(cfg.rician_factor),
            path_loss_exp_direct: cfg.path_loss_exp_direct,
            theta_ib_aoa: cfg.theta_ib_aoa,
            users: cfg
                .users
                .iter()
                .map(|u| UserFile {
                    r_ui: u.r_ui,
                    theta: u.theta,
                    power_dbm: None,
                    power_watt: Some(u.power),
                    direct_blocked: u.direct_blocked,
                })
                .collect(),
            prior: cfg
                .prior
                .components()
                .iter()
                .map(|c| MixtureComponentFile {
                    weight: c.weight,
                    mean: c.mean,
                    variance: c.variance,
                })
                .collect(),
            gamma_pcrb: cfg.gamma_pcrb,
            unweighted_moments: cfg.unweighted_moments,
        }
    }
}

impl ScenarioConfig {
    /// Parses a TOML scenario file with explicit units.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("scenario file: {e}")))?;
        file.into_config()
    }

    /// Serializes to the TOML file schema (radians/watts).
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(&ScenarioFile::from_config(self))
            .map_err(|e| Error::InvalidConfig(format!("scenario serialization: {e}")))
    }
}
