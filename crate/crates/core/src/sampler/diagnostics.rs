//! Convergence diagnostics and posterior summaries over per-chain series.

use serde::{Deserialize, Serialize};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn var_n1(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Splits every chain into two halves of equal length (dropping the middle
/// draw of odd-length chains) and trims to the shortest chain.
fn split_halves<'a>(chains: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let half = n / 2;
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let c = &c[..n];
        out.push(&c[..half]);
        out.push(&c[n - half..]);
    }
    out
}

/// Classic split R-hat from between- and within-chain variances.
///
/// Returns `NaN` with fewer than two draws per half, `+inf` when every
/// half is constant but the halves differ, and 1 when everything is
/// identical.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    let halves = split_halves(chains);
    let n = halves.first().map_or(0, |h| h.len());
    if n < 2 || halves.len() < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let w = mean(&halves.iter().map(|h| var_n1(h)).collect::<Vec<_>>());
    let b_over_n = var_n1(&means);
    if w == 0.0 {
        return if b_over_n == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let nf = n as f64;
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    (var_plus / w).sqrt()
}

/// Effective sample size over split chains using Geyer's initial monotone
/// sequence: autocorrelation pairs are summed until the first negative pair.
pub fn ess(chains: &[&[f64]]) -> f64 {
    let halves = split_halves(chains);
    let n = halves.first().map_or(0, |h| h.len());
    let m = halves.len();
    if n < 4 || m == 0 {
        return f64::NAN;
    }
    let nf = n as f64;
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let autocov = |t: usize| -> f64 {
        halves
            .iter()
            .zip(&means)
            .map(|(h, &mu)| {
                (0..n - t).map(|s| (h[s] - mu) * (h[s + t] - mu)).sum::<f64>() / nf
            })
            .sum::<f64>()
            / m as f64
    };
    let acov0 = autocov(0);
    let w = acov0 * nf / (nf - 1.0);
    let b_over_n = if m > 1 { var_n1(&means) } else { 0.0 };
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    if var_plus <= 0.0 {
        return f64::NAN;
    }
    let rho = |t: usize, acov_t: f64| if t == 0 { 1.0 } else { 1.0 - (w - acov_t) / var_plus };

    let mut sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let r0 = rho(t, if t == 0 { acov0 } else { autocov(t) });
        let r1 = rho(t + 1, autocov(t + 1));
        let pair = r0 + r1;
        if pair < 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum += pair;
        prev_pair = pair;
        t += 2;
    }
    let tau = (-1.0 + 2.0 * sum).max(1.0 / (m as f64 * nf).log10().max(1.0));
    m as f64 * nf / tau
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub split_rhat: f64,
    pub ess_bulk: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Type-7 (linear interpolation) quantile of sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, sd and equal-tailed `level` interval of pooled draws.
pub fn summarize_values(name: &str, values: &[f64], level: f64) -> ParamSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = mean(values);
    let sd = if values.len() > 1 { var_n1(values).sqrt() } else { 0.0 };
    let tail = (1.0 - level) / 2.0;
    ParamSummary {
        name: name.into(),
        mean: m,
        sd,
        lower: quantile_sorted(&sorted, tail),
        upper: quantile_sorted(&sorted, 1.0 - tail),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn iid_chains(k: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..k)
            .map(|c| {
                let mut rng = stream_rng(seed, c as u64);
                (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
            })
            .collect()
    }

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn iid_rhat_near_one() {
        let c = iid_chains(4, 2500, 1);
        let r = split_rhat(&refs(&c));
        assert!((0.99..=1.01).contains(&r), "rhat {r}");
    }

    #[test]
    fn constant_distinct_chains_diverge() {
        let a = vec![1.0; 100];
        let b = vec![2.0; 100];
        assert_eq!(split_rhat(&[&a, &b]), f64::INFINITY);
        assert_eq!(split_rhat(&[&a, &a]), 1.0);
    }

    #[test]
    fn iid_ess_close_to_draw_count() {
        let c = iid_chains(4, 2500, 2);
        let e = ess(&refs(&c));
        assert!((e - 10_000.0).abs() < 2_000.0, "ess {e}");
    }

    #[test]
    fn autocorrelated_ess_is_smaller() {
        // AR(1) with phi = 0.9: ESS/N = (1 - phi)/(1 + phi) ~ 0.053
        let mut rng = stream_rng(5, 0);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x = 0.0;
                (0..5000)
                    .map(|_| {
                        x = 0.9 * x + Distribution::<f64>::sample(&StandardNormal, &mut rng);
                        x
                    })
                    .collect()
            })
            .collect();
        let e = ess(&refs(&chains)) / 20_000.0;
        assert!((0.035..0.075).contains(&e), "relative ess {e}");
    }

    #[test]
    fn too_short_is_nan() {
        assert!(split_rhat(&[&[1.0]]).is_nan());
        assert!(ess(&[&[1.0, 2.0]]).is_nan());
    }

    #[test]
    fn uniform_interval() {
        let mut rng = stream_rng(9, 0);
        let v: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let s = summarize_values("u", &v, 0.95);
        assert!((s.lower - 0.025).abs() < 0.003);
        assert!((s.upper - 0.975).abs() < 0.003);
    }

    #[test]
    fn constant_summary() {
        let s = summarize_values("c", &[3.5; 20], 0.95);
        assert_eq!((s.mean, s.sd, s.lower, s.upper), (3.5, 0.0, 3.5, 3.5));
    }
}
