//! Model-based variance ratios, posterior-predictive checks of the
//! empirical ratio, and model-adjusted failure rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_rates::{failure_rate, rates, ContingencyTable, RateOption};
use crate::latent_model::{simulate_indicators, skew_normal_moments};
use crate::rng::stream_rng;
use crate::sampler::{check_draws_match, quantile_sorted, PosteriorDraws};
use crate::study_data::{GroundTruth, StudyDataset};
use crate::variance::{decompose_lenient, empirical_ratio, variance_ratio};

/// Gap between mean-of-ratios and ratio-of-means worth mentioning.
pub const AVERAGING_GAP: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioBasis {
    /// `sigma_theta / (sigma_theta + sigma_zeta)`.
    #[default]
    ScaleParams,
    /// `sigma_theta^2 / (sigma_theta^2 + sigma_zeta^2)`.
    VarianceParams,
}

impl RatioBasis {
    pub const ALL: [RatioBasis; 2] = [RatioBasis::ScaleParams, RatioBasis::VarianceParams];

    pub fn label(self) -> &'static str {
        match self {
            RatioBasis::ScaleParams => "scale",
            RatioBasis::VarianceParams => "variance",
        }
    }
}

impl std::str::FromStr for RatioBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scale" | "scale_params" => Ok(RatioBasis::ScaleParams),
            "variance" | "variance_params" => Ok(RatioBasis::VarianceParams),
            _ => Err(Error::Config(format!("unknown ratio basis `{s}` (expected scale or variance)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    /// Posterior mean of the per-draw ratio.
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub basis: RatioBasis,
    /// Posterior means of the examiner and item components.
    pub examiner_component: f64,
    pub item_component: f64,
    /// `examiner_component / (examiner_component + item_component)`.
    pub ratio_of_averages: f64,
}

impl RatioEstimate {
    pub fn averaging_gap(&self) -> f64 {
        (self.point - self.ratio_of_averages).abs()
    }
}

/// Examiner and item components of one draw under `basis`.
pub fn components(sigma_zeta: f64, omega: f64, alpha: f64, basis: RatioBasis) -> (f64, f64) {
    let var_theta = skew_normal_moments(omega, alpha).variance;
    match basis {
        RatioBasis::ScaleParams => (var_theta.sqrt(), sigma_zeta),
        RatioBasis::VarianceParams => (var_theta, sigma_zeta * sigma_zeta),
    }
}

/// Ratio computed directly from tabulated examiner and item components.
pub fn ratio_from_components(examiner: f64, item: f64) -> Result<f64> {
    if !(examiner >= 0.0 && item >= 0.0 && examiner.is_finite() && item.is_finite()) {
        return Err(Error::Domain(format!("components ({examiner}, {item}) must be finite and non-negative")));
    }
    variance_ratio(examiner, item).ok_or(Error::UndefinedRatio)
}

/// Per-draw examiner share of variability, summarised by its posterior
/// mean and central 95% interval.
pub fn model_ratio(draws: &PosteriorDraws, basis: RatioBasis) -> RatioEstimate {
    let n = draws.total_draws();
    let mut ratios = Vec::with_capacity(n);
    let (mut sum_e, mut sum_i) = (0.0, 0.0);
    for k in 0..n {
        let (s, w, a) = draws.hyper(k);
        let (e, i) = components(s, w, a, basis);
        sum_e += e;
        sum_i += i;
        ratios.push(e / (e + i));
    }
    let point = ratios.iter().sum::<f64>() / n as f64;
    ratios.sort_by(f64::total_cmp);
    let (me, mi) = (sum_e / n as f64, sum_i / n as f64);
    let est = RatioEstimate {
        point,
        lower: quantile_sorted(&ratios, 0.025),
        upper: quantile_sorted(&ratios, 0.975),
        basis,
        examiner_component: me,
        item_component: mi,
        ratio_of_averages: me / (me + mi),
    };
    if est.averaging_gap() > AVERAGING_GAP {
        log::info!(
            "{} basis: mean of per-draw ratios {:.3} differs from ratio of means {:.3}",
            basis.label(),
            est.point,
            est.ratio_of_averages
        );
    }
    est
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveInterval {
    /// Mean of the simulated ratios.
    pub predicted: f64,
    pub lower: f64,
    pub upper: f64,
    /// Ratio of the real data; `None` when undefined.
    pub observed: Option<f64>,
    pub n_sims: usize,
    /// Simulations whose ratio was undefined and were dropped.
    pub undefined: usize,
}

impl PredictiveInterval {
    pub fn contains_observed(&self) -> bool {
        self.observed.is_some_and(|o| self.lower <= o && o <= self.upper)
    }
}

pub fn default_n_sims(draws: &PosteriorDraws) -> usize {
    draws.total_draws().min(1000)
}

/// Pooled draw indices spread evenly over all retained draws.
fn strided(total: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..n).map(move |k| k * total / n)
}

/// Replicates the study from `n_sims` posterior draws over the dataset's
/// actual examiner x item assignment and reports the spread of the
/// empirical ratio. Simulation `k` uses random stream `k` of `seed`.
pub fn predictive_ratio_interval(
    draws: &PosteriorDraws,
    dataset: &StudyDataset,
    n_sims: usize,
    seed: u64,
) -> Result<PredictiveInterval> {
    let design = dataset.design();
    check_draws_match(draws, &design)?;
    if n_sims == 0 || n_sims > draws.total_draws() {
        return Err(Error::Domain(format!(
            "n_sims must lie in 1..={} (retained draws), got {n_sims}",
            draws.total_draws()
        )));
    }
    let (ni, nj) = (draws.n_examiners(), draws.n_items());
    let idx: Vec<usize> = strided(draws.total_draws(), n_sims).collect();
    let sims: Vec<Option<f64>> = idx
        .par_iter()
        .enumerate()
        .map(|(k, &d)| {
            let u = draws.pooled_draw(d);
            let mut rng = stream_rng(seed, k as u64);
            let conclusive = simulate_indicators(&u[..ni], &u[ni..ni + nj], &design, &mut rng);
            let inconclusive: Vec<bool> = conclusive.into_iter().map(|c| !c).collect();
            empirical_ratio(&design, &inconclusive)
        })
        .collect();
    let mut ratios: Vec<f64> = sims.iter().flatten().copied().collect();
    let undefined = n_sims - ratios.len();
    if ratios.is_empty() {
        return Err(Error::AllSimulationsUndefined(n_sims));
    }
    if undefined > 0 {
        log::warn!("{undefined} of {n_sims} simulated studies had an undefined ratio and were dropped");
    }
    let predicted = ratios.iter().sum::<f64>() / ratios.len() as f64;
    ratios.sort_by(f64::total_cmp);
    Ok(PredictiveInterval {
        predicted,
        lower: quantile_sorted(&ratios, 0.025),
        upper: quantile_sorted(&ratios, 0.975),
        observed: decompose_lenient(dataset).ratio,
        n_sims,
        undefined,
    })
}

/// Inputs for one (ground truth, group) row of the failure-rate table.
#[derive(Clone, Debug)]
pub struct FailureInput {
    pub ground_truth: GroundTruth,
    pub group: String,
    pub table: ContingencyTable,
    pub observed_ratio: Option<f64>,
    pub model: RatioEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub ground_truth: String,
    pub group: String,
    pub obs_ratio: Option<f64>,
    pub model_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub inc_correct: f64,
    pub inc_incorrect: f64,
    pub obs_failure: Option<f64>,
    pub model_failure: f64,
}

fn rate_for(table: &ContingencyTable, option: RateOption, gt: GroundTruth, group: &str) -> Result<f64> {
    rates(table, option).for_truth(gt).value().ok_or_else(|| {
        Error::Domain(format!(
            "{} rate under {} is undefined for group {group}",
            gt.code(),
            option.label()
        ))
    })
}

/// Failure rates using the observed and the model-based ratio.
pub fn adjusted_failure_rates(inputs: &[FailureInput]) -> Result<Vec<FailureRow>> {
    inputs
        .iter()
        .map(|inp| {
            let gt = inp.ground_truth;
            let ic = rate_for(&inp.table, RateOption::Correct, gt, &inp.group)?;
            let ii = rate_for(&inp.table, RateOption::Incorrect, gt, &inp.group)?;
            let obs_failure = inp.observed_ratio.map(|r| failure_rate(ic, ii, r)).transpose()?;
            Ok(FailureRow {
                ground_truth: gt.code().into(),
                group: inp.group.clone(),
                obs_ratio: inp.observed_ratio,
                model_ratio: inp.model.point,
                lower: inp.model.lower,
                upper: inp.model.upper,
                inc_correct: ic,
                inc_incorrect: ii,
                obs_failure,
                model_failure: failure_rate(ic, ii, inp.model.point)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent_model::Parameters;
    use crate::sampler::{parameter_names, ChainAcceptance};
    use crate::study_data::StudyDesign;
    use proptest::prelude::*;

    /// Draws where every pooled draw has the given hyperparameters and
    /// every tendency equals `eta / 2`.
    fn fixed_draws(ni: usize, nj: usize, hypers: &[(f64, f64, f64)], eta: f64) -> PosteriorDraws {
        let design = StudyDesign::fully_crossed(ni, nj, GroundTruth::SameSource);
        let names = parameter_names(&design.examiner_ids, &design.item_ids);
        let mut values = Vec::new();
        for &(s, w, a) in hypers {
            values.extend(std::iter::repeat_n(eta / 2.0, ni + nj));
            values.extend([s.ln(), w.ln(), a]);
        }
        let acc = vec![ChainAcceptance { theta: 0.4, zeta: 0.4, hyper: 0.4, shift: 0.4 }];
        PosteriorDraws::from_parts(names, 1, hypers.len(), 0, values, acc).unwrap()
    }

    #[test]
    fn tabulated_components() {
        assert!((ratio_from_components(1.908, 26.776).unwrap() - 0.067).abs() < 5e-4);
        assert!((ratio_from_components(261.0, 1.367).unwrap() - 0.995).abs() < 5e-4);
        assert!(ratio_from_components(0.0, 0.0).is_err());
    }

    #[test]
    fn equal_components_give_one_half() {
        // alpha = 0 so sd(theta) = omega
        let d = fixed_draws(3, 3, &[(1.3, 1.3, 0.0), (0.7, 0.7, 0.0), (2.0, 2.0, 0.0)], 0.0);
        for basis in RatioBasis::ALL {
            let r = model_ratio(&d, basis);
            assert!((r.point - 0.5).abs() < 1e-12);
            assert!((r.upper - r.lower).abs() < 1e-12);
        }
    }

    #[test]
    fn bases_differ_as_expected() {
        let d = fixed_draws(3, 3, &[(1.0, 2.0, 0.0)], 0.0);
        assert!((model_ratio(&d, RatioBasis::ScaleParams).point - 2.0 / 3.0).abs() < 1e-12);
        assert!((model_ratio(&d, RatioBasis::VarianceParams).point - 0.8).abs() < 1e-12);
    }

    #[test]
    fn saturated_posterior_has_no_defined_simulations() {
        let d = fixed_draws(4, 5, &[(1.0, 1.0, 0.0); 10], 40.0);
        let p = Parameters {
            theta: vec![20.0; 4],
            zeta: vec![20.0; 5],
            sigma_zeta: 1.0,
            omega: 1.0,
            alpha: 0.0,
            examiner_ids: vec![],
            item_ids: vec![],
        };
        let design = StudyDesign::fully_crossed(4, 5, GroundTruth::SameSource);
        let ds = crate::latent_model::simulate_responses(&p, &design, 1).unwrap();
        match predictive_ratio_interval(&d, &ds, 10, 3) {
            Err(Error::AllSimulationsUndefined(10)) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(predictive_ratio_interval(&d, &ds, 11, 3).is_err());
    }

    #[test]
    fn predictive_interval_is_deterministic() {
        let d = fixed_draws(6, 8, &[(1.0, 1.0, 0.0); 50], 0.0);
        let p = Parameters {
            theta: vec![0.0; 6],
            zeta: vec![0.0; 8],
            sigma_zeta: 1.0,
            omega: 1.0,
            alpha: 0.0,
            examiner_ids: vec![],
            item_ids: vec![],
        };
        let design = StudyDesign::fully_crossed(6, 8, GroundTruth::SameSource);
        let ds = crate::latent_model::simulate_responses(&p, &design, 2).unwrap();
        let a = predictive_ratio_interval(&d, &ds, 40, 9).unwrap();
        let b = predictive_ratio_interval(&d, &ds, 40, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.lower <= a.predicted && a.predicted <= a.upper);
        assert_eq!(a.n_sims, 40);
    }

    #[test]
    fn failure_rows_from_tabulated_rates() {
        // SS: 75 misses, 473 inconclusives out of 1000 -> (0.075, 0.548)
        let table = ContingencyTable::new(452, 473, 75, 1, 207, 792);
        let model = RatioEstimate {
            point: 0.067,
            lower: 0.05,
            upper: 0.09,
            basis: RatioBasis::ScaleParams,
            examiner_component: 0.0,
            item_component: 0.0,
            ratio_of_averages: 0.067,
        };
        let rows = adjusted_failure_rates(&[FailureInput {
            ground_truth: GroundTruth::SameSource,
            group: "all".into(),
            table,
            observed_ratio: Some(0.0),
            model,
        }])
        .unwrap();
        let r = &rows[0];
        assert!((r.inc_correct - 0.075).abs() < 1e-12 && (r.inc_incorrect - 0.548).abs() < 1e-12);
        assert!((r.model_failure - 0.106).abs() < 1e-3);
        assert_eq!(r.obs_failure, Some(r.inc_correct));
    }

    proptest! {
        #[test]
        fn variance_ratio_grows_with_omega(s in 0.05f64..20.0, w in 0.05f64..20.0, a in -10.0f64..10.0, k in 1.0f64..5.0) {
            let (e1, i1) = components(s, w, a, RatioBasis::VarianceParams);
            let (e2, i2) = components(s, w * k, a, RatioBasis::VarianceParams);
            prop_assert!(e2 / (e2 + i2) >= e1 / (e1 + i1) - 1e-15);
        }

        #[test]
        fn per_draw_ratio_in_unit_interval(s in 1e-3f64..50.0, w in 1e-3f64..50.0, a in -20.0f64..20.0) {
            for basis in RatioBasis::ALL {
                let (e, i) = components(s, w, a, basis);
                let r = e / (e + i);
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn failure_between_endpoints(a in 0u64..50, b in 0u64..50, c in 0u64..50, r in 0.0f64..=1.0) {
            prop_assume!(a + b + c > 0);
            let table = ContingencyTable::new(a, b, c, 1, 1, 1);
            let model = RatioEstimate {
                point: r, lower: r, upper: r, basis: RatioBasis::ScaleParams,
                examiner_component: r, item_component: 1.0 - r, ratio_of_averages: r,
            };
            let rows = adjusted_failure_rates(&[FailureInput {
                ground_truth: GroundTruth::SameSource, group: "g".into(), table,
                observed_ratio: None, model,
            }]).unwrap();
            let row = &rows[0];
            prop_assert!(row.inc_correct - 1e-12 <= row.model_failure && row.model_failure <= row.inc_incorrect + 1e-12);
        }
    }
}
