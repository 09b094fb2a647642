//! Six-cell summary table, the four inconclusive-handling error-rate
//! options, and ratio-interpolated failure rates.
//!
//! Rates are exact rationals until rendered.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study_data::{Conclusion, GroundTruth, StudyDataset};

/// Rows: same / different source. Columns: identification, inconclusive,
/// exclusion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
    pub e: u64,
    pub f: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64, e: u64, f: u64) -> Self {
        ContingencyTable { a, b, c, d, e, f }
    }

    pub fn same_source_total(&self) -> u64 {
        self.a + self.b + self.c
    }

    pub fn different_source_total(&self) -> u64 {
        self.d + self.e + self.f
    }

    pub fn scaled(&self, k: u64) -> Self {
        ContingencyTable::new(self.a * k, self.b * k, self.c * k, self.d * k, self.e * k, self.f * k)
    }

    /// (errors, inconclusives, total) for one ground-truth row.
    pub fn failure_counts(&self, gt: GroundTruth) -> (u64, u64, u64) {
        match gt {
            GroundTruth::SameSource => (self.c, self.b, self.same_source_total()),
            GroundTruth::DifferentSource => (self.d, self.e, self.different_source_total()),
        }
    }
}

/// Tallies responses into the six cells. Unsuitable responses are not
/// counted, so the dataset should already have had a policy applied.
pub fn build_contingency(dataset: &StudyDataset) -> ContingencyTable {
    let mut t = ContingencyTable::default();
    for r in dataset.responses() {
        let cell = match (r.ground_truth, r.canonical) {
            (GroundTruth::SameSource, Conclusion::Identification) => &mut t.a,
            (GroundTruth::SameSource, Conclusion::Inconclusive) => &mut t.b,
            (GroundTruth::SameSource, Conclusion::Exclusion) => &mut t.c,
            (GroundTruth::DifferentSource, Conclusion::Identification) => &mut t.d,
            (GroundTruth::DifferentSource, Conclusion::Inconclusive) => &mut t.e,
            (GroundTruth::DifferentSource, Conclusion::Exclusion) => &mut t.f,
            (_, Conclusion::Unsuitable) => continue,
        };
        *cell += 1;
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConclusiveSummary {
    pub ss_conclusive: u64,
    pub ss_not_conclusive: u64,
    pub ds_conclusive: u64,
    pub ds_not_conclusive: u64,
    /// P(same source | not conclusive); `None` when nothing is non-conclusive.
    pub p_same_given_not_conclusive: Option<f64>,
}

impl ConclusiveSummary {
    pub fn from_counts(ss_conc: u64, ss_not: u64, ds_conc: u64, ds_not: u64) -> Self {
        let not_total = ss_not + ds_not;
        ConclusiveSummary {
            ss_conclusive: ss_conc,
            ss_not_conclusive: ss_not,
            ds_conclusive: ds_conc,
            ds_not_conclusive: ds_not,
            p_same_given_not_conclusive: (not_total > 0)
                .then(|| ss_not as f64 / not_total as f64),
        }
    }
}

/// Conclusive vs not-conclusive counts by ground truth.
pub fn summarize_conclusive(dataset: &StudyDataset) -> ConclusiveSummary {
    let (mut sc, mut sn, mut dc, mut dn) = (0, 0, 0, 0);
    for r in dataset.responses() {
        match (r.ground_truth, r.is_conclusive()) {
            (GroundTruth::SameSource, true) => sc += 1,
            (GroundTruth::SameSource, false) => sn += 1,
            (GroundTruth::DifferentSource, true) => dc += 1,
            (GroundTruth::DifferentSource, false) => dn += 1,
        }
    }
    ConclusiveSummary::from_counts(sc, sn, dc, dn)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateOption {
    Ignored,
    Correct,
    HalfCredit,
    Incorrect,
}

impl RateOption {
    pub const ALL: [RateOption; 4] = [
        RateOption::Ignored,
        RateOption::Correct,
        RateOption::HalfCredit,
        RateOption::Incorrect,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RateOption::Ignored => "inconclusives_ignored",
            RateOption::Correct => "inconclusives_correct",
            RateOption::HalfCredit => "half_credit",
            RateOption::Incorrect => "inconclusives_incorrect",
        }
    }
}

/// An exact rate, or undefined when its denominator is zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rate {
    Defined(Ratio<u64>),
    Undefined,
}

impl Rate {
    fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            Rate::Undefined
        } else {
            Rate::Defined(Ratio::new(num, den))
        }
    }

    pub fn exact(self) -> Option<Ratio<u64>> {
        match self {
            Rate::Defined(r) => Some(r),
            Rate::Undefined => None,
        }
    }

    pub fn value(self) -> Option<f64> {
        self.exact().map(|r| *r.numer() as f64 / *r.denom() as f64)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v:.3}"),
            None => f.write_str("undefined"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RateSet {
    pub option: RateOption,
    pub fpr: Rate,
    pub fnr: Rate,
    /// The false-positive denominator holds no correct exclusions (d > 0, f = 0).
    pub fpr_degenerate: bool,
    /// The false-negative denominator holds no correct identifications (c > 0, a = 0).
    pub fnr_degenerate: bool,
}

impl RateSet {
    pub fn for_truth(&self, gt: GroundTruth) -> Rate {
        match gt {
            GroundTruth::SameSource => self.fnr,
            GroundTruth::DifferentSource => self.fpr,
        }
    }
}

/// Error rates under one inconclusive-handling option. Half credit is
/// computed as `(2d + e) / 2(d + e + f)` to stay integral.
pub fn rates(t: &ContingencyTable, option: RateOption) -> RateSet {
    let ds = t.different_source_total();
    let ss = t.same_source_total();
    let (fpr, fnr) = match option {
        RateOption::Ignored => (Rate::new(t.d, t.d + t.f), Rate::new(t.c, t.a + t.c)),
        RateOption::Correct => (Rate::new(t.d, ds), Rate::new(t.c, ss)),
        RateOption::HalfCredit => (
            Rate::new(2 * t.d + t.e, 2 * ds),
            Rate::new(2 * t.c + t.b, 2 * ss),
        ),
        RateOption::Incorrect => (Rate::new(t.d + t.e, ds), Rate::new(t.c + t.b, ss)),
    };
    RateSet {
        option,
        fpr,
        fnr,
        fpr_degenerate: t.f == 0 && t.d > 0,
        fnr_degenerate: t.a == 0 && t.c > 0,
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{name} = {x} is outside [0, 1]")));
    }
    Ok(())
}

/// Interpolates between the inconclusives-correct and
/// inconclusives-incorrect rates: a `ratio` share of inconclusives is
/// counted as erroneous.
pub fn failure_rate(inc_correct: f64, inc_incorrect: f64, ratio: f64) -> Result<f64> {
    check_unit("inc_correct", inc_correct)?;
    check_unit("inc_incorrect", inc_incorrect)?;
    check_unit("ratio", ratio)?;
    if inc_correct > inc_incorrect {
        return Err(Error::Domain(format!(
            "inc_correct {inc_correct} exceeds inc_incorrect {inc_incorrect}"
        )));
    }
    Ok(inc_correct + ratio * (inc_incorrect - inc_correct))
}

/// Count form of [`failure_rate`]: `(errors + ratio * inconclusives) / total`.
pub fn failure_rate_counts(errors: u64, inconclusives: u64, total: u64, ratio: f64) -> Result<f64> {
    check_unit("ratio", ratio)?;
    if total == 0 || errors + inconclusives > total {
        return Err(Error::Domain(format!(
            "counts errors={errors} inconclusives={inconclusives} total={total} are inconsistent"
        )));
    }
    Ok((errors as f64 + ratio * inconclusives as f64) / total as f64)
}

/// Report row mirroring the published error-rate tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub ground_truth: String,
    pub group: String,
    pub option: RateOption,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub flag: Option<String>,
}

/// One row per (ground truth, option) with the relevant rate filled.
pub fn rate_rows(table: &ContingencyTable, group: &str) -> Vec<RateRow> {
    let mut rows = Vec::new();
    for gt in [GroundTruth::DifferentSource, GroundTruth::SameSource] {
        for option in RateOption::ALL {
            let set = rates(table, option);
            let (fpr, fnr, degenerate) = match gt {
                GroundTruth::DifferentSource => (set.fpr.value(), None, set.fpr_degenerate),
                GroundTruth::SameSource => (None, set.fnr.value(), set.fnr_degenerate),
            };
            let flag = if set.for_truth(gt) == Rate::Undefined {
                Some("undefined_denominator".to_string())
            } else if degenerate && option == RateOption::Ignored {
                Some("no_correct_conclusives".to_string())
            } else {
                None
            };
            rows.push(RateRow {
                ground_truth: gt.code().into(),
                group: group.into(),
                option,
                fpr,
                fnr,
                flag,
            });
        }
    }
    rows
}
