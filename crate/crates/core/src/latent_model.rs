//! Latent-tendency model for conclusive responses.
//!
//! Examiner `i` is conclusive on item `j` with probability
//! `logistic(theta_i + zeta_j)`. Examiner tendencies follow a skew-normal
//! with location 0, scale `omega` and shape `alpha`; item tendencies follow
//! `N(0, sigma_zeta)`. `sigma_zeta` and `omega` get half-t3 priors and
//! `alpha` a t3 prior, all with location 0 and scale `hyperprior_scale`.
//!
//! Simulated conclusive responses always carry the correct category for the
//! item's ground truth (identification on same-source, exclusion on
//! different-source). The model only describes conclusive vs not, so
//! simulated data never contains false identifications or exclusions.

use std::f64::consts::{FRAC_2_PI, LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::study_data::{Conclusion, Observations, Response, StudyDataset, StudyDesign};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const T_DOF: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hyperprior_scale: f64,
    pub seed: u64,
    pub center_items: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hyperprior_scale: 1.0,
            seed: 0,
            center_items: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hyperprior_scale > 0.0 && self.hyperprior_scale.is_finite()) {
            return Err(Error::Config(format!(
                "hyperprior_scale must be positive, got {}",
                self.hyperprior_scale
            )));
        }
        Ok(())
    }
}

/// Model parameters in constrained space. `theta` and `zeta` follow the
/// roster order of [`StudyDesign`] (sorted identifiers).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub theta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub sigma_zeta: f64,
    pub omega: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examiner_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub item_ids: Vec<String>,
}

impl Parameters {
    // negated comparisons so that NaN is rejected
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_zeta > 0.0) || !(self.omega > 0.0) {
            return Err(Error::Domain("sigma_zeta and omega must be positive".into()));
        }
        if !self.alpha.is_finite()
            || self.theta.iter().chain(&self.zeta).any(|x| !x.is_finite())
        {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        let ids_ok = |ids: &[String], n: usize| ids.is_empty() || ids.len() == n;
        if !ids_ok(&self.examiner_ids, self.theta.len()) || !ids_ok(&self.item_ids, self.zeta.len()) {
            return Err(Error::Domain("identifier lists do not match parameter lengths".into()));
        }
        Ok(())
    }

    pub fn check_design(&self, design: &StudyDesign) -> Result<()> {
        if self.theta.len() != design.n_examiners() || self.zeta.len() != design.n_items() {
            return Err(Error::Domain(format!(
                "parameters have {} examiners / {} items, design has {} / {}",
                self.theta.len(),
                self.zeta.len(),
                design.n_examiners(),
                design.n_items()
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Parameters = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `1 / (1 + exp(-(theta + zeta)))`.
pub fn prob_conclusive(theta: f64, zeta: f64) -> f64 {
    logistic(theta + zeta)
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln logistic(x)` without overflow or cancellation.
pub fn ln_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn std_normal_logpdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// `ln Phi(z)`, accurate in both tails.
pub fn std_normal_logcdf(z: f64) -> f64 {
    if z < -35.0 {
        // asymptotic Mills-ratio expansion
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        std_normal_logpdf(z) - (-z).ln() + series.ln()
    } else if z < 0.0 {
        (0.5 * erfc(-z / std::f64::consts::SQRT_2)).ln()
    } else {
        (-0.5 * erfc(z / std::f64::consts::SQRT_2)).ln_1p()
    }
}

/// `phi(z) / Phi(z)`.
pub fn inverse_mills(z: f64) -> f64 {
    (std_normal_logpdf(z) - std_normal_logcdf(z)).exp()
}

/// Log-density of a location-0 skew-normal: `2/omega phi(x/omega) Phi(alpha x/omega)`.
pub fn skew_normal_logpdf(x: f64, omega: f64, alpha: f64) -> f64 {
    let z = x / omega;
    LN_2 - omega.ln() + std_normal_logpdf(z) + std_normal_logcdf(alpha * z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewNormalMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn skew_normal_moments(omega: f64, alpha: f64) -> SkewNormalMoments {
    let a2 = alpha * alpha;
    SkewNormalMoments {
        mean: omega * FRAC_2_PI.sqrt() * alpha / (1.0 + a2).sqrt(),
        variance: omega * omega * (1.0 - 2.0 * a2 / (PI * (1.0 + a2))),
    }
}

/// Draws from the location-0 skew-normal via the `delta |U0| + sqrt(1-delta^2) U1`
/// representation.
pub fn sample_skew_normal<R: Rng + ?Sized>(omega: f64, alpha: f64, rng: &mut R) -> f64 {
    let delta = alpha / (1.0 + alpha * alpha).sqrt();
    let u0: f64 = StandardNormal.sample(rng);
    let u1: f64 = StandardNormal.sample(rng);
    omega * (delta * u0.abs() + (1.0 - delta * delta).sqrt() * u1)
}

pub fn normal_logpdf(x: f64, sd: f64) -> f64 {
    std_normal_logpdf(x / sd) - sd.ln()
}

/// Student-t log-density with location 0.
pub fn student_t_logpdf(x: f64, dof: f64, scale: f64) -> f64 {
    let z = x / scale;
    ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0) - 0.5 * (dof * PI).ln() - scale.ln()
        - (dof + 1.0) / 2.0 * (z * z / dof).ln_1p()
}

/// Student-t truncated to positive values; `-inf` outside the support.
pub fn half_t_logpdf(x: f64, dof: f64, scale: f64) -> f64 {
    if x > 0.0 {
        LN_2 + student_t_logpdf(x, dof, scale)
    } else {
        f64::NEG_INFINITY
    }
}

pub fn log_prior(params: &Parameters, config: &ModelConfig) -> f64 {
    let s = config.hyperprior_scale;
    if !(params.sigma_zeta > 0.0 && params.omega > 0.0) {
        return f64::NEG_INFINITY;
    }
    let theta: f64 = params
        .theta
        .iter()
        .map(|&t| skew_normal_logpdf(t, params.omega, params.alpha))
        .sum();
    let zeta: f64 = params
        .zeta
        .iter()
        .map(|&z| normal_logpdf(z, params.sigma_zeta))
        .sum();
    theta
        + zeta
        + half_t_logpdf(params.sigma_zeta, T_DOF, s)
        + half_t_logpdf(params.omega, T_DOF, s)
        + student_t_logpdf(params.alpha, T_DOF, s)
}

/// Bernoulli log-likelihood of the conclusive indicators.
pub fn log_likelihood_obs(params: &Parameters, obs: &Observations) -> f64 {
    obs.responses
        .iter()
        .map(|o| {
            let eta = params.theta[o.examiner] + params.zeta[o.item];
            if o.conclusive {
                ln_logistic(eta)
            } else {
                ln_logistic(-eta)
            }
        })
        .sum()
}

pub fn log_likelihood(params: &Parameters, dataset: &StudyDataset) -> Result<f64> {
    let obs = dataset.observations();
    params.check_design(&obs.design)?;
    Ok(log_likelihood_obs(params, &obs))
}

/// Conclusive indicators for each design pair, in `design.pairs` order.
pub fn simulate_indicators<R: Rng + ?Sized>(
    theta: &[f64],
    zeta: &[f64],
    design: &StudyDesign,
    rng: &mut R,
) -> Vec<bool> {
    design
        .pairs
        .iter()
        .map(|&(i, j)| rng.random::<f64>() < prob_conclusive(theta[i], zeta[j]))
        .collect()
}

/// One synthetic study over the design's examiner x item pairs.
pub fn simulate_responses(params: &Parameters, design: &StudyDesign, seed: u64) -> Result<StudyDataset> {
    params.check_design(design)?;
    let mut rng = stream_rng(seed, 0);
    let conclusive = simulate_indicators(&params.theta, &params.zeta, design, &mut rng);
    let responses = design
        .pairs
        .iter()
        .zip(conclusive)
        .enumerate()
        .map(|(k, (&(i, j), conc))| {
            let gt = design.item_truth[j];
            let canonical = if conc {
                gt.correct_conclusion()
            } else {
                Conclusion::Inconclusive
            };
            Response {
                examiner_id: design.examiner_ids[i].clone(),
                item_id: design.item_ids[j].clone(),
                ground_truth: gt,
                raw_conclusion: canonical.name().into(),
                canonical,
                inconclusive_subtype: None,
                elimination_basis: None,
                sequence: k as u64,
            }
        })
        .collect();
    StudyDataset::from_responses(responses)
}

/// Log posterior over the unconstrained vector
/// `[theta.., zeta.., ln sigma_zeta, ln omega, alpha]`, including the
/// log-transform Jacobian.
#[derive(Clone, Debug)]
pub struct LogPosterior<'a> {
    obs: &'a Observations,
    config: ModelConfig,
}

impl<'a> LogPosterior<'a> {
    pub fn new(obs: &'a Observations, config: ModelConfig) -> Self {
        LogPosterior { obs, config }
    }

    pub fn dim(&self) -> usize {
        self.obs.design.n_examiners() + self.obs.design.n_items() + 3
    }

    pub fn to_parameters(&self, u: &[f64]) -> Parameters {
        let ni = self.obs.design.n_examiners();
        let nj = self.obs.design.n_items();
        Parameters {
            theta: u[..ni].to_vec(),
            zeta: u[ni..ni + nj].to_vec(),
            sigma_zeta: u[ni + nj].exp(),
            omega: u[ni + nj + 1].exp(),
            alpha: u[ni + nj + 2],
            examiner_ids: Vec::new(),
            item_ids: Vec::new(),
        }
    }

    pub fn to_unconstrained(p: &Parameters) -> Vec<f64> {
        let mut u = Vec::with_capacity(p.theta.len() + p.zeta.len() + 3);
        u.extend_from_slice(&p.theta);
        u.extend_from_slice(&p.zeta);
        u.extend([p.sigma_zeta.ln(), p.omega.ln(), p.alpha]);
        u
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let p = self.to_parameters(u);
        let n = u.len();
        log_prior(&p, &self.config) + log_likelihood_obs(&p, self.obs) + u[n - 3] + u[n - 2]
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let ni = self.obs.design.n_examiners();
        let nj = self.obs.design.n_items();
        let p = self.to_parameters(u);
        let s = self.config.hyperprior_scale;
        let mut g = vec![0.0; u.len()];

        for o in &self.obs.responses {
            let pi = prob_conclusive(p.theta[o.examiner], p.zeta[o.item]);
            let r = if o.conclusive { 1.0 - pi } else { -pi };
            g[o.examiner] += r;
            g[ni + o.item] += r;
        }

        let (mut d_log_omega, mut d_alpha) = (0.0, 0.0);
        for (i, &t) in p.theta.iter().enumerate() {
            let z = t / p.omega;
            let m = inverse_mills(p.alpha * z);
            g[i] += (-z + p.alpha * m) / p.omega;
            d_log_omega += -1.0 + z * z - p.alpha * z * m;
            d_alpha += z * m;
        }

        let var = p.sigma_zeta * p.sigma_zeta;
        let mut d_log_sigma = 0.0;
        for (j, &z) in p.zeta.iter().enumerate() {
            g[ni + j] += -z / var;
            d_log_sigma += -1.0 + z * z / var;
        }

        // d/dx ln t3(x; s) = -(nu + 1) x / (nu s^2 + x^2); log-scale adds x and the Jacobian 1
        let t_score = |x: f64| -(T_DOF + 1.0) * x / (T_DOF * s * s + x * x);
        d_log_sigma += t_score(p.sigma_zeta) * p.sigma_zeta + 1.0;
        d_log_omega += t_score(p.omega) * p.omega + 1.0;
        d_alpha += t_score(p.alpha);

        g[ni + nj] = d_log_sigma;
        g[ni + nj + 1] = d_log_omega;
        g[ni + nj + 2] = d_alpha;
        g
    }
}
