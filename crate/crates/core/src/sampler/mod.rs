//! Multi-chain MCMC fitting of the latent-tendency model.

mod diagnostics;
mod generic;
mod io;
mod kernel;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent_model::{ModelConfig, Parameters};
use crate::rng::stream_rng;
use crate::study_data::{StudyDataset, StudyDesign};

pub use diagnostics::{ess, quantile_sorted, split_rhat, summarize_values, ParamDiagnostics, ParamSummary};
pub use generic::sample_log_density;
pub use io::{read_draws_bin, read_draws_csv, write_draws_bin, write_draws_csv};

use kernel::{Adjacency, Chain};

/// Split R-hat above this raises a non-convergence warning.
pub const RHAT_WARN: f64 = 1.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub iterations: usize,
    pub warmup: usize,
    pub seed: u64,
    /// Per-coordinate acceptance rate targeted during warmup.
    pub target_accept: f64,
    pub initial_step: f64,
    /// Lower and upper bounds on adapted proposal scales.
    pub step_bounds: (f64, f64),
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            iterations: 5000,
            warmup: 2500,
            seed: 0,
            target_accept: 0.44,
            initial_step: 0.5,
            step_bounds: (1e-3, 20.0),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.chains == 0 || self.iterations == 0 {
            return bad("chains and iterations must be positive".into());
        }
        if self.warmup >= self.iterations {
            return bad(format!(
                "warmup ({}) must be smaller than iterations ({})",
                self.warmup, self.iterations
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad("target_accept must lie in (0, 1)".into());
        }
        let (lo, hi) = self.step_bounds;
        if !(lo > 0.0 && lo <= self.initial_step && self.initial_step <= hi) {
            return bad("step bounds must satisfy 0 < lo <= initial_step <= hi".into());
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        self.iterations - self.warmup
    }
}

/// Per-chain acceptance rates after warmup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainAcceptance {
    pub theta: f64,
    pub zeta: f64,
    pub hyper: f64,
    pub shift: f64,
}

/// Retained draws in unconstrained space, laid out
/// `[theta.., zeta.., log_sigma_zeta, log_omega, alpha]` per draw and stored
/// chain-major.
#[derive(Clone, Debug)]
pub struct PosteriorDraws {
    parameter_names: Vec<String>,
    examiner_ids: Vec<String>,
    item_ids: Vec<String>,
    chains: usize,
    draws_per_chain: usize,
    warmup: usize,
    values: Vec<f64>,
    pub acceptance: Vec<ChainAcceptance>,
    pub diagnostics: Vec<ParamDiagnostics>,
}

impl PartialEq for PosteriorDraws {
    fn eq(&self, other: &Self) -> bool {
        self.parameter_names == other.parameter_names
            && self.chains == other.chains
            && self.draws_per_chain == other.draws_per_chain
            && self.warmup == other.warmup
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.values.len() == other.values.len()
    }
}

pub fn parameter_names(examiner_ids: &[String], item_ids: &[String]) -> Vec<String> {
    examiner_ids
        .iter()
        .map(|e| format!("theta[{e}]"))
        .chain(item_ids.iter().map(|i| format!("zeta[{i}]")))
        .chain(["log_sigma_zeta", "log_omega", "alpha"].map(String::from))
        .collect()
}

impl PosteriorDraws {
    pub(crate) fn from_parts(
        parameter_names: Vec<String>,
        chains: usize,
        draws_per_chain: usize,
        warmup: usize,
        values: Vec<f64>,
        acceptance: Vec<ChainAcceptance>,
    ) -> Result<Self> {
        let p = parameter_names.len();
        if p < 3 || values.len() != chains * draws_per_chain * p {
            return Err(Error::DrawsFormat(format!(
                "{} values do not fill {chains} chains x {draws_per_chain} draws x {p} parameters",
                values.len()
            )));
        }
        let tail = &parameter_names[p - 3..];
        if tail != ["log_sigma_zeta", "log_omega", "alpha"] {
            return Err(Error::DrawsFormat("hyperparameter columns missing".into()));
        }
        let mut examiner_ids = Vec::new();
        let mut item_ids = Vec::new();
        for name in &parameter_names[..p - 3] {
            if let Some(id) = name.strip_prefix("theta[").and_then(|s| s.strip_suffix(']')) {
                if !item_ids.is_empty() {
                    return Err(Error::DrawsFormat("theta after zeta".into()));
                }
                examiner_ids.push(id.to_string());
            } else if let Some(id) = name.strip_prefix("zeta[").and_then(|s| s.strip_suffix(']')) {
                item_ids.push(id.to_string());
            } else {
                return Err(Error::DrawsFormat(format!("unexpected parameter `{name}`")));
            }
        }
        let mut d = PosteriorDraws {
            parameter_names,
            examiner_ids,
            item_ids,
            chains,
            draws_per_chain,
            warmup,
            values,
            acceptance,
            diagnostics: Vec::new(),
        };
        d.diagnostics = d.compute_diagnostics();
        Ok(d)
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameter_names
    }

    pub fn examiner_ids(&self) -> &[String] {
        &self.examiner_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn n_params(&self) -> usize {
        self.parameter_names.len()
    }

    pub fn chains(&self) -> usize {
        self.chains
    }

    pub fn draws_per_chain(&self) -> usize {
        self.draws_per_chain
    }

    pub fn warmup(&self) -> usize {
        self.warmup
    }

    pub fn total_draws(&self) -> usize {
        self.chains * self.draws_per_chain
    }

    pub fn n_examiners(&self) -> usize {
        self.examiner_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }

    pub fn theta_index(&self, i: usize) -> usize {
        i
    }

    pub fn zeta_index(&self, j: usize) -> usize {
        self.n_examiners() + j
    }

    pub fn log_sigma_zeta_index(&self) -> usize {
        self.n_params() - 3
    }

    pub fn log_omega_index(&self) -> usize {
        self.n_params() - 2
    }

    pub fn alpha_index(&self) -> usize {
        self.n_params() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Unconstrained state of one retained draw.
    pub fn draw(&self, chain: usize, iter: usize) -> &[f64] {
        let p = self.n_params();
        let start = (chain * self.draws_per_chain + iter) * p;
        &self.values[start..start + p]
    }

    /// Draw by pooled index (chain-major).
    pub fn pooled_draw(&self, k: usize) -> &[f64] {
        self.draw(k / self.draws_per_chain, k % self.draws_per_chain)
    }

    pub fn get(&self, chain: usize, iter: usize, param: usize) -> f64 {
        self.draw(chain, iter)[param]
    }

    /// One series per chain.
    pub fn chain_series(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.chains)
            .map(|c| (0..self.draws_per_chain).map(|t| self.get(c, t, param)).collect())
            .collect()
    }

    pub fn pooled(&self, param: usize) -> Vec<f64> {
        self.chain_series(param).concat()
    }

    /// Constrained parameters of one pooled draw.
    pub fn parameters(&self, k: usize) -> Parameters {
        let u = self.pooled_draw(k);
        let (ni, nj) = (self.n_examiners(), self.n_items());
        Parameters {
            theta: u[..ni].to_vec(),
            zeta: u[ni..ni + nj].to_vec(),
            sigma_zeta: u[ni + nj].exp(),
            omega: u[ni + nj + 1].exp(),
            alpha: u[ni + nj + 2],
            examiner_ids: self.examiner_ids.clone(),
            item_ids: self.item_ids.clone(),
        }
    }

    /// `(sigma_zeta, omega, alpha)` of one pooled draw.
    pub fn hyper(&self, k: usize) -> (f64, f64, f64) {
        let u = self.pooled_draw(k);
        let n = u.len();
        (u[n - 3].exp(), u[n - 2].exp(), u[n - 1])
    }

    /// Copy with each draw's item tendencies re-centred to mean zero and the
    /// removed mean added to every examiner tendency. The likelihood of each
    /// draw is unchanged.
    pub fn centered(&self) -> PosteriorDraws {
        let mut out = self.clone();
        let (ni, nj, p) = (self.n_examiners(), self.n_items(), self.n_params());
        if nj == 0 {
            return out;
        }
        for row in out.values.chunks_mut(p) {
            let m = row[ni..ni + nj].iter().sum::<f64>() / nj as f64;
            row[ni..ni + nj].iter_mut().for_each(|z| *z -= m);
            row[..ni].iter_mut().for_each(|t| *t += m);
        }
        out.diagnostics = out.compute_diagnostics();
        out
    }

    fn compute_diagnostics(&self) -> Vec<ParamDiagnostics> {
        (0..self.n_params())
            .into_par_iter()
            .map(|p| {
                let series = self.chain_series(p);
                let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
                ParamDiagnostics {
                    name: self.parameter_names[p].clone(),
                    split_rhat: split_rhat(&refs),
                    ess_bulk: ess(&refs),
                }
            })
            .collect()
    }

    pub fn max_rhat(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.split_rhat)
            .filter(|r| !r.is_nan())
            .fold(f64::NAN, f64::max)
    }

    /// An undefined (NaN) R-hat does not count against convergence.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn converged(&self) -> bool {
        self.diagnostics.iter().all(|d| !(d.split_rhat > RHAT_WARN))
    }
}

/// Per-parameter split R-hat and bulk ESS.
pub fn diagnostics(draws: &PosteriorDraws) -> &[ParamDiagnostics] {
    &draws.diagnostics
}

/// Summaries of pooled retained draws in constrained space
/// (`sigma_zeta` and `omega` rather than their logarithms).
pub fn summarize(draws: &PosteriorDraws, level: f64) -> Result<Vec<ParamSummary>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("interval level {level} outside (0, 1)")));
    }
    let hyper_start = draws.n_params() - 3;
    Ok((0..draws.n_params())
        .into_par_iter()
        .map(|p| {
            let mut v = draws.pooled(p);
            let mut name = draws.parameter_names[p].clone();
            if p == hyper_start || p == hyper_start + 1 {
                v.iter_mut().for_each(|x| *x = x.exp());
                name = name.trim_start_matches("log_").to_string();
            }
            summarize_values(&name, &v, level)
        })
        .collect())
}

fn log_degenerate(dataset: &StudyDataset) {
    let d = crate::variance::decompose_lenient(dataset);
    let flat = |m: &std::collections::BTreeMap<String, f64>| {
        m.values().filter(|&&p| p == 0.0 || p == 1.0).count()
    };
    let (fe, fi) = (flat(&d.examiner_props), flat(&d.item_props));
    if fe + fi > 0 {
        log::info!(
            "{fe} examiner(s) and {fi} item(s) have all-identical responses; priors regularise them"
        );
    }
}

/// Runs `config.chains` independent chains in parallel and returns the
/// retained draws. Chain `c` uses random stream `c` of `config.seed`, so
/// results do not depend on thread count.
pub fn fit(dataset: &StudyDataset, model: &ModelConfig, config: &SamplerConfig) -> Result<PosteriorDraws> {
    model.validate()?;
    config.validate()?;
    let obs = dataset.observations();
    if obs.design.n_examiners() < 2 || obs.design.n_items() < 2 {
        return Err(Error::Domain("fitting needs at least 2 examiners and 2 items".into()));
    }
    log_degenerate(dataset);
    let adj = Adjacency::new(&obs);
    let names = parameter_names(&obs.design.examiner_ids, &obs.design.item_ids);
    let p = names.len();
    let retained = config.retained();

    let results: Vec<(Vec<f64>, ChainAcceptance)> = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(&adj, model, config, c, p, retained))
        .collect();

    let mut values = Vec::with_capacity(config.chains * retained * p);
    let mut acceptance = Vec::with_capacity(config.chains);
    for (v, a) in results {
        values.extend(v);
        acceptance.push(a);
    }
    let draws = PosteriorDraws::from_parts(names, config.chains, retained, config.warmup, values, acceptance)?;
    if !draws.converged() {
        log::warn!(
            "non-convergence: max split R-hat {:.3} exceeds {RHAT_WARN}",
            draws.max_rhat()
        );
    }
    Ok(draws)
}

fn run_chain(
    adj: &Adjacency,
    model: &ModelConfig,
    config: &SamplerConfig,
    chain_index: usize,
    p: usize,
    retained: usize,
) -> (Vec<f64>, ChainAcceptance) {
    let mut rng = stream_rng(config.seed, chain_index as u64);
    let mut chain = Chain::initialise(adj, model, config, &mut rng);
    let mut out = Vec::with_capacity(retained * p);
    let tick = (config.iterations / 10).max(1);
    for it in 0..config.iterations {
        if it == config.warmup {
            chain.reset_counters();
        }
        let adapt = (it < config.warmup).then_some(it as u64 + 1);
        chain.sweep(&mut rng, adapt);
        if it >= config.warmup {
            chain.write_state(&mut out);
        }
        if (it + 1) % tick == 0 {
            log::info!(
                "chain {chain_index}: {}% ({}/{})",
                (it + 1) * 100 / config.iterations,
                it + 1,
                config.iterations
            );
        }
    }
    let [theta, zeta, hyper, shift] = chain.acceptance();
    (out, ChainAcceptance { theta, zeta, hyper, shift })
}

/// Design implied by the draws' rosters, for simulating from the posterior.
pub fn check_draws_match(draws: &PosteriorDraws, design: &StudyDesign) -> Result<()> {
    if draws.examiner_ids() != design.examiner_ids.as_slice() || draws.item_ids() != design.item_ids.as_slice() {
        return Err(Error::Domain(
            "posterior draws were fitted on a different examiner/item roster".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent_model::simulate_responses;
    use crate::study_data::GroundTruth;

    fn small_dataset() -> StudyDataset {
        let design = StudyDesign::fully_crossed(6, 8, GroundTruth::SameSource);
        let p = Parameters {
            theta: vec![-1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
            zeta: vec![-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0],
            sigma_zeta: 1.2,
            omega: 1.0,
            alpha: 0.0,
            examiner_ids: vec![],
            item_ids: vec![],
        };
        simulate_responses(&p, &design, 4).unwrap()
    }

    fn quick(chains: usize, iterations: usize, warmup: usize) -> SamplerConfig {
        SamplerConfig { chains, iterations, warmup, seed: 17, ..Default::default() }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let ds = small_dataset();
        let a = fit(&ds, &ModelConfig::default(), &quick(2, 300, 150)).unwrap();
        let b = fit(&ds, &ModelConfig::default(), &quick(2, 300, 150)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_retained_draw() {
        let ds = small_dataset();
        let d = fit(&ds, &ModelConfig::default(), &quick(1, 51, 50)).unwrap();
        assert_eq!(d.total_draws(), 1);
        assert_eq!(d.pooled(0).len(), 1);
        assert_eq!(d.n_params(), 6 + 8 + 3);
    }

    #[test]
    fn longer_run_prefix_extends_shorter() {
        let ds = small_dataset();
        let a = fit(&ds, &ModelConfig::default(), &quick(1, 200, 100)).unwrap();
        let b = fit(&ds, &ModelConfig::default(), &quick(1, 260, 100)).unwrap();
        let n = a.values().len();
        assert_eq!(a.values(), &b.values()[..n]);
    }

    #[test]
    fn constrained_views_are_positive() {
        let ds = small_dataset();
        let d = fit(&ds, &ModelConfig::default(), &quick(2, 200, 100)).unwrap();
        for k in 0..d.total_draws() {
            let (s, w, _) = d.hyper(k);
            assert!(s > 0.0 && w > 0.0);
        }
        let sums = summarize(&d, 0.95).unwrap();
        assert!(sums.iter().any(|s| s.name == "sigma_zeta" && s.lower > 0.0));
    }

    #[test]
    fn centering_preserves_linear_predictor() {
        let ds = small_dataset();
        let d = fit(&ds, &ModelConfig::default(), &quick(1, 120, 100)).unwrap();
        let c = d.centered();
        for k in 0..d.total_draws() {
            let (a, b) = (d.parameters(k), c.parameters(k));
            assert!(b.zeta.iter().sum::<f64>().abs() < 1e-9);
            assert!((a.theta[2] + a.zeta[5] - b.theta[2] - b.zeta[5]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_configs_and_tiny_data() {
        let ds = small_dataset();
        assert!(fit(&ds, &ModelConfig::default(), &quick(1, 10, 10)).is_err());
        let bad_model = ModelConfig { hyperprior_scale: 0.0, ..Default::default() };
        assert!(fit(&ds, &bad_model, &quick(1, 20, 10)).is_err());
        let one = ds
            .restrict_to_examiners(&["E001".to_string()].into_iter().collect())
            .unwrap();
        assert!(fit(&one, &ModelConfig::default(), &quick(1, 20, 10)).is_err());
    }

    #[test]
    fn pooled_quantiles_ignore_chain_order() {
        let ds = small_dataset();
        let d = fit(&ds, &ModelConfig::default(), &quick(3, 150, 100)).unwrap();
        let mut series = d.chain_series(0);
        let s1 = summarize_values("x", &series.concat(), 0.9);
        series.reverse();
        let s2 = summarize_values("x", &series.concat(), 0.9);
        assert_eq!((s1.lower, s1.upper), (s2.lower, s2.upper));
        assert!((s1.mean - s2.mean).abs() < 1e-12);
    }
}
