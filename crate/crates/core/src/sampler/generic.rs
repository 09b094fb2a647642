//! The same adaptive Metropolis-within-Gibbs scheme over an arbitrary
//! log density. Slower than the model kernel (each coordinate update
//! evaluates the full density) but useful for checking the scheme itself.

use rand_distr::{Distribution, StandardNormal};

use super::kernel::Adapter;
use super::SamplerConfig;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Runs `config.chains` chains from `init` and returns retained draws per
/// chain, each a flat `draws x init.len()` vector.
pub fn sample_log_density<F>(log_density: F, init: &[f64], config: &SamplerConfig) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    if !log_density(init).is_finite() {
        return Err(Error::Domain("initial point has zero density".into()));
    }
    let d = init.len();
    let mut out = Vec::with_capacity(config.chains);
    for c in 0..config.chains {
        let mut rng = stream_rng(config.seed, c as u64);
        let mut adapt = Adapter::new(d, config);
        let mut x = init.to_vec();
        let mut lp = log_density(&x);
        let mut draws = Vec::with_capacity(config.retained() * d);
        for it in 0..config.iterations {
            let adapt_t = (it < config.warmup).then_some(it as u64 + 1);
            for k in 0..d {
                let old = x[k];
                let z: f64 = StandardNormal.sample(&mut rng);
                x[k] = old + adapt.step(k) * z;
                let lp_new = log_density(&x);
                if adapt.decide(k, lp_new - lp, &mut rng, adapt_t) {
                    lp = lp_new;
                } else {
                    x[k] = old;
                }
            }
            if it >= config.warmup {
                draws.extend_from_slice(&x);
            }
        }
        out.push(draws);
    }
    Ok(out)
}
