//! One Markov chain of adaptive Metropolis-within-Gibbs.
//!
//! Each sweep updates every examiner tendency, every item tendency,
//! `ln sigma_zeta`, `ln omega` and `alpha` with univariate Gaussian
//! random-walk proposals, then proposes a joint shift `(theta + c, zeta - c)`
//! that leaves the likelihood unchanged and only touches the priors.
//! Proposal scales adapt by Robbins-Monro toward the target acceptance
//! during warmup and are frozen afterwards.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use super::SamplerConfig;
use crate::latent_model::{
    half_t_logpdf, ln_logistic, normal_logpdf, skew_normal_logpdf, student_t_logpdf, ModelConfig,
};
use crate::rng::StreamRng;
use crate::study_data::Observations;

const T_DOF: f64 = 3.0;
const INIT_SD: f64 = 2.0;
const INIT_HYPER_RANGE: (f64, f64) = (0.1, 10.0);
const ADAPT_OFFSET: f64 = 10.0;
const ADAPT_DECAY: f64 = 0.6;

/// Responses grouped both ways for O(n_i) / O(n_j) conditional updates.
pub(crate) struct Adjacency {
    by_examiner: Vec<Vec<(usize, bool)>>,
    by_item: Vec<Vec<(usize, bool)>>,
}

impl Adjacency {
    pub(crate) fn new(obs: &Observations) -> Self {
        let mut by_examiner = vec![Vec::new(); obs.design.n_examiners()];
        let mut by_item = vec![Vec::new(); obs.design.n_items()];
        for o in &obs.responses {
            by_examiner[o.examiner].push((o.item, o.conclusive));
            by_item[o.item].push((o.examiner, o.conclusive));
        }
        Adjacency { by_examiner, by_item }
    }
}

/// Per-coordinate random-walk scales with Robbins-Monro adaptation.
#[derive(Clone)]
pub(crate) struct Adapter {
    log_steps: Vec<f64>,
    accepted: Vec<u64>,
    proposed: Vec<u64>,
    target: f64,
    log_step_bounds: (f64, f64),
}

impl Adapter {
    pub(crate) fn new(n: usize, cfg: &SamplerConfig) -> Self {
        Adapter {
            log_steps: vec![cfg.initial_step.ln(); n],
            accepted: vec![0; n],
            proposed: vec![0; n],
            target: cfg.target_accept,
            log_step_bounds: (cfg.step_bounds.0.ln(), cfg.step_bounds.1.ln()),
        }
    }

    pub(crate) fn step(&self, k: usize) -> f64 {
        self.log_steps[k].exp()
    }

    /// Metropolis accept/reject for a symmetric proposal with log ratio
    /// `delta`; adapts coordinate `k`'s scale when `adapt_t` is given.
    pub(crate) fn decide(&mut self, k: usize, delta: f64, rng: &mut StreamRng, adapt_t: Option<u64>) -> bool {
        let accept = delta >= 0.0 || rng.random::<f64>().ln() < delta;
        self.proposed[k] += 1;
        if accept {
            self.accepted[k] += 1;
        }
        if let Some(t) = adapt_t {
            let gain = (t as f64 + ADAPT_OFFSET).powf(-ADAPT_DECAY);
            let a = if accept { 1.0 } else { 0.0 };
            let (lo, hi) = self.log_step_bounds;
            self.log_steps[k] = (self.log_steps[k] + gain * (a - self.target)).clamp(lo, hi);
        }
        accept
    }

    pub(crate) fn reset_counters(&mut self) {
        self.accepted.iter_mut().for_each(|a| *a = 0);
        self.proposed.iter_mut().for_each(|p| *p = 0);
    }

    pub(crate) fn rate(&self, r: std::ops::Range<usize>) -> f64 {
        let a: u64 = self.accepted[r.clone()].iter().sum();
        let p: u64 = self.proposed[r].iter().sum();
        if p == 0 {
            f64::NAN
        } else {
            a as f64 / p as f64
        }
    }
}

fn bernoulli_ll(eta: f64, conclusive: bool) -> f64 {
    if conclusive {
        ln_logistic(eta)
    } else {
        ln_logistic(-eta)
    }
}

/// Coordinates with their own proposal scale.
#[derive(Clone, Copy)]
enum Coord {
    Theta(usize),
    Zeta(usize),
    LogSigma,
    LogOmega,
    Alpha,
    Shift,
}

#[derive(Clone)]
pub(crate) struct Chain<'a> {
    adj: &'a Adjacency,
    scale: f64,
    pub theta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub log_sigma: f64,
    pub log_omega: f64,
    pub alpha: f64,
    adapt: Adapter,
}

impl<'a> Chain<'a> {
    /// Over-dispersed start: tendencies from N(0, 2), hyperparameters from
    /// their priors restricted to [0.1, 10] (alpha to [-10, 10]).
    pub(crate) fn initialise(
        adj: &'a Adjacency,
        model: &ModelConfig,
        cfg: &SamplerConfig,
        rng: &mut StreamRng,
    ) -> Self {
        let ni = adj.by_examiner.len();
        let nj = adj.by_item.len();
        let normal = |rng: &mut StreamRng| INIT_SD * Distribution::<f64>::sample(&StandardNormal, rng);
        let theta = (0..ni).map(|_| normal(rng)).collect();
        let zeta = (0..nj).map(|_| normal(rng)).collect();
        let t = StudentT::new(T_DOF).expect("valid dof");
        let (lo, hi) = INIT_HYPER_RANGE;
        let draw_abs = |rng: &mut StreamRng| loop {
            let x: f64 = model.hyperprior_scale * t.sample(rng);
            if (lo..=hi).contains(&x.abs()) {
                break x;
            }
        };
        let log_sigma = draw_abs(rng).abs().ln();
        let log_omega = draw_abs(rng).abs().ln();
        let alpha = loop {
            let x: f64 = model.hyperprior_scale * t.sample(rng);
            if x.abs() <= hi {
                break x;
            }
        };
        let n_coords = ni + nj + 4;
        Chain {
            adj,
            scale: model.hyperprior_scale,
            theta,
            zeta,
            log_sigma,
            log_omega,
            alpha,
            adapt: Adapter::new(n_coords, cfg),
        }
    }

    fn slot(&self, c: Coord) -> usize {
        let ni = self.theta.len();
        let nj = self.zeta.len();
        match c {
            Coord::Theta(i) => i,
            Coord::Zeta(j) => ni + j,
            Coord::LogSigma => ni + nj,
            Coord::LogOmega => ni + nj + 1,
            Coord::Alpha => ni + nj + 2,
            Coord::Shift => ni + nj + 3,
        }
    }

    fn decide(&mut self, c: Coord, delta: f64, rng: &mut StreamRng, adapt_t: Option<u64>) -> bool {
        let k = self.slot(c);
        self.adapt.decide(k, delta, rng, adapt_t)
    }

    fn step(&self, c: Coord) -> f64 {
        self.adapt.step(self.slot(c))
    }

    fn omega(&self) -> f64 {
        self.log_omega.exp()
    }

    fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }

    fn theta_prior_sum(&self, omega: f64, alpha: f64) -> f64 {
        self.theta.iter().map(|&t| skew_normal_logpdf(t, omega, alpha)).sum()
    }

    fn zeta_prior_sum(&self, sigma: f64) -> f64 {
        self.zeta.iter().map(|&z| normal_logpdf(z, sigma)).sum()
    }

    /// Change in log posterior if coordinate `c` moved to `prop` (for
    /// [`Coord::Shift`], `prop` is the shift amount).
    fn delta(&self, c: Coord, prop: f64) -> f64 {
        let (omega, sigma, alpha) = (self.omega(), self.sigma(), self.alpha);
        match c {
            Coord::Theta(i) => {
                let cur = self.theta[i];
                let mut d = skew_normal_logpdf(prop, omega, alpha) - skew_normal_logpdf(cur, omega, alpha);
                for &(j, x) in &self.adj.by_examiner[i] {
                    let z = self.zeta[j];
                    d += bernoulli_ll(prop + z, x) - bernoulli_ll(cur + z, x);
                }
                d
            }
            Coord::Zeta(j) => {
                let cur = self.zeta[j];
                let mut d = normal_logpdf(prop, sigma) - normal_logpdf(cur, sigma);
                for &(i, x) in &self.adj.by_item[j] {
                    let t = self.theta[i];
                    d += bernoulli_ll(t + prop, x) - bernoulli_ll(t + cur, x);
                }
                d
            }
            Coord::LogSigma => {
                let lp = |ls: f64| {
                    let s = ls.exp();
                    self.zeta_prior_sum(s) + half_t_logpdf(s, T_DOF, self.scale) + ls
                };
                lp(prop) - lp(self.log_sigma)
            }
            Coord::LogOmega => {
                let lp = |lw: f64| {
                    let w = lw.exp();
                    self.theta_prior_sum(w, alpha) + half_t_logpdf(w, T_DOF, self.scale) + lw
                };
                lp(prop) - lp(self.log_omega)
            }
            Coord::Alpha => {
                let lp = |a: f64| self.theta_prior_sum(omega, a) + student_t_logpdf(a, T_DOF, self.scale);
                lp(prop) - lp(alpha)
            }
            Coord::Shift => {
                let mut d = 0.0;
                for &t in &self.theta {
                    d += skew_normal_logpdf(t + prop, omega, alpha) - skew_normal_logpdf(t, omega, alpha);
                }
                for &z in &self.zeta {
                    d += normal_logpdf(z - prop, sigma) - normal_logpdf(z, sigma);
                }
                d
            }
        }
    }

    fn current(&self, c: Coord) -> f64 {
        match c {
            Coord::Theta(i) => self.theta[i],
            Coord::Zeta(j) => self.zeta[j],
            Coord::LogSigma => self.log_sigma,
            Coord::LogOmega => self.log_omega,
            Coord::Alpha => self.alpha,
            Coord::Shift => 0.0,
        }
    }

    fn apply(&mut self, c: Coord, prop: f64) {
        match c {
            Coord::Theta(i) => self.theta[i] = prop,
            Coord::Zeta(j) => self.zeta[j] = prop,
            Coord::LogSigma => self.log_sigma = prop,
            Coord::LogOmega => self.log_omega = prop,
            Coord::Alpha => self.alpha = prop,
            Coord::Shift => {
                self.theta.iter_mut().for_each(|t| *t += prop);
                self.zeta.iter_mut().for_each(|z| *z -= prop);
            }
        }
    }

    fn update(&mut self, c: Coord, rng: &mut StreamRng, adapt_t: Option<u64>) {
        let prop = self.current(c) + self.step(c) * Distribution::<f64>::sample(&StandardNormal, rng);
        let delta = self.delta(c, prop);
        if self.decide(c, delta, rng, adapt_t) {
            self.apply(c, prop);
        }
    }

    /// One full sweep. `adapt_t` is the 1-based warmup iteration, or `None`
    /// once adaptation has stopped.
    pub(crate) fn sweep(&mut self, rng: &mut StreamRng, adapt_t: Option<u64>) {
        for i in 0..self.theta.len() {
            self.update(Coord::Theta(i), rng, adapt_t);
        }
        for j in 0..self.zeta.len() {
            self.update(Coord::Zeta(j), rng, adapt_t);
        }
        for c in [Coord::LogSigma, Coord::LogOmega, Coord::Alpha, Coord::Shift] {
            self.update(c, rng, adapt_t);
        }
    }

    /// Appends the unconstrained state `[theta, zeta, ln sigma, ln omega, alpha]`.
    pub(crate) fn write_state(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.theta);
        out.extend_from_slice(&self.zeta);
        out.extend([self.log_sigma, self.log_omega, self.alpha]);
    }

    pub(crate) fn reset_counters(&mut self) {
        self.adapt.reset_counters();
    }

    /// Acceptance rates for (theta block, zeta block, hyperparameters, shift).
    pub(crate) fn acceptance(&self) -> [f64; 4] {
        let ni = self.theta.len();
        let nj = self.zeta.len();
        [
            self.adapt.rate(0..ni),
            self.adapt.rate(ni..ni + nj),
            self.adapt.rate(ni + nj..ni + nj + 3),
            self.adapt.rate(ni + nj + 3..ni + nj + 4),
        ]
    }
}
