use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bbr_core::error_rates::{
    build_contingency, rate_rows, rates, summarize_conclusive, ConclusiveSummary, ContingencyTable,
};
use bbr_core::latent_model::{simulate_responses, ModelConfig, Parameters};
use bbr_core::posterior::{
    adjusted_failure_rates, default_n_sims, model_ratio, predictive_ratio_interval, FailureInput, FailureRow,
    PredictiveInterval, RatioBasis, RatioEstimate,
};
use bbr_core::sampler::{
    fit, read_draws_bin, summarize, write_draws_bin, write_draws_csv, ChainAcceptance, PosteriorDraws,
    SamplerConfig,
};
use bbr_core::study_data::{write_csv, GroundTruth, StudyDesign};
use bbr_core::variance::{decompose_lenient, DecompositionRow};

use crate::args::{BasisArg, DataArgs, FitArgs, PolicyArg, PpcArgs, ReportArgs, SimulateArgs, ValidateArgs};
use crate::output::{
    ensure_dir, fmt_opt, histogram_svg, io_err, write_json, write_rows, write_text, CliError, CliResult,
    RunManifest,
};
use crate::pipeline::{load, DataSpec, Study, Unit};

const INTERVAL_LEVEL: f64 = 0.95;

pub fn validate(args: &ValidateArgs) -> CliResult<()> {
    let ds = load(&args.input.input, &args.input.mapping)?;
    let s = ds.summary();
    println!("responses: {}", s.responses);
    println!("examiners: {}", s.examiners);
    println!("items: {}", s.items);
    println!("duplicates removed: {}", s.duplicates_removed);
    for (cell, n) in &s.cells {
        println!("  {cell}: {n}");
    }
    if !s.notes.is_empty() {
        println!("notes: {}", s.notes.len());
    }
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_json(&out.join("validation.json"), &s)?;
        let mut m = RunManifest::new("validate", out);
        m.input = Some(args.input.input.clone());
        m.mapping = Some(args.input.mapping.clone());
        m.write()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RateCsvRow {
    ground_truth: String,
    group: String,
    option: String,
    rate: Option<f64>,
    exact: String,
    flag: String,
}

#[derive(Serialize)]
struct ContingencyCsvRow {
    group: String,
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    e: u64,
    f: u64,
}

#[derive(Serialize)]
struct GroupRates {
    group: String,
    table: ContingencyTable,
    conclusive: ConclusiveSummary,
}

/// Rate rows for the selected ground truths that have any responses.
fn rate_table_rows(table: &ContingencyTable, group: &str, truths: &[GroundTruth]) -> Vec<RateCsvRow> {
    let present = |t: &GroundTruth| match t {
        GroundTruth::SameSource => table.same_source_total() > 0,
        GroundTruth::DifferentSource => table.different_source_total() > 0,
    };
    rate_rows(table, group)
        .into_iter()
        .filter(|r| truths.iter().filter(|t| present(t)).any(|t| t.code() == r.ground_truth))
        .map(|r| {
            let gt: GroundTruth = r.ground_truth.parse().expect("row truth code");
            let exact = rates(table, r.option)
                .for_truth(gt)
                .exact()
                .map(|q| format!("{}/{}", q.numer(), q.denom()))
                .unwrap_or_default();
            RateCsvRow {
                ground_truth: r.ground_truth,
                group: r.group,
                option: r.option.label().to_string(),
                rate: r.fpr.or(r.fnr),
                exact,
                flag: r.flag.unwrap_or_default(),
            }
        })
        .collect()
}

pub fn rates_cmd(args: &DataArgs) -> CliResult<()> {
    let spec = DataSpec::from_args(args, PolicyArg::Exclude);
    let study = Study::load(&spec)?;
    let truths = spec.truth.selected();
    ensure_dir(&args.out)?;
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    let mut groups = Vec::new();
    for (group, ds) in study.by_group(spec.policy, None)? {
        let table = build_contingency(&ds);
        rows.extend(rate_table_rows(&table, &group, &truths));
        let t = table;
        tables.push(ContingencyCsvRow { group: group.clone(), a: t.a, b: t.b, c: t.c, d: t.d, e: t.e, f: t.f });
        groups.push(GroupRates { group, table, conclusive: summarize_conclusive(&ds) });
    }
    for r in &rows {
        println!(
            "{} {:<14} {:<24} {:>6}  {}",
            r.ground_truth,
            r.group,
            r.option,
            fmt_opt(r.rate),
            r.flag
        );
    }
    write_rows(&args.out.join("rates.csv"), &rows)?;
    write_rows(&args.out.join("contingency.csv"), &tables)?;
    write_json(&args.out.join("rates.json"), &groups)?;
    let mut m = RunManifest::new("rates", &args.out);
    spec.record(&mut m);
    m.write()
}

#[derive(Serialize)]
struct ProportionRow<'a> {
    ground_truth: &'a str,
    group: &'a str,
    id: &'a str,
    inconclusive_proportion: f64,
}

pub fn decompose_cmd(args: &DataArgs) -> CliResult<()> {
    let spec = DataSpec::from_args(args, PolicyArg::Pool);
    let study = Study::load(&spec)?;
    let units = study.units(&spec)?;
    ensure_dir(&args.out)?;
    let mut rows = Vec::new();
    let mut ex_rows = Vec::new();
    let mut item_rows = Vec::new();
    for u in &units {
        let d = decompose_lenient(&u.data);
        let code = u.truth.code();
        if d.ratio.is_none() {
            log::warn!("{code} {}: every proportion is identical, ratio undefined", u.group);
        }
        let ex: Vec<f64> = d.examiner_props.values().copied().collect();
        let it: Vec<f64> = d.item_props.values().copied().collect();
        let slug = u.slug();
        write_text(
            &args.out.join(format!("hist_examiners_{slug}.svg")),
            &histogram_svg(
                &format!("Inconclusives by examiner ({code}, {})", u.group),
                "Inconclusive responses per examiner (%)",
                &ex,
            ),
        )?;
        write_text(
            &args.out.join(format!("hist_items_{slug}.svg")),
            &histogram_svg(
                &format!("Inconclusives by item ({code}, {})", u.group),
                "Inconclusive responses per item (%)",
                &it,
            ),
        )?;
        for (id, &p) in &d.examiner_props {
            ex_rows.push((code, u.group.clone(), id.clone(), p));
        }
        for (id, &p) in &d.item_props {
            item_rows.push((code, u.group.clone(), id.clone(), p));
        }
        let row = DecompositionRow::new(code, &u.group, &d);
        println!(
            "{} {:<14} examiner_var {:.4}  item_var {:.4}  ratio {}",
            code,
            u.group,
            row.examiner_var,
            row.item_var,
            fmt_opt(row.ratio)
        );
        rows.push(row);
    }
    write_rows(&args.out.join("decomposition.csv"), &rows)?;
    write_rows(&args.out.join("examiner_proportions.csv"), &proportion_rows(&ex_rows))?;
    write_rows(&args.out.join("item_proportions.csv"), &proportion_rows(&item_rows))?;
    if let Some(groups) = &study.groups {
        #[derive(Serialize)]
        struct GroupRow<'a> {
            examiner: &'a str,
            group: &'static str,
        }
        let g: Vec<_> = groups.iter().map(|(e, g)| GroupRow { examiner: e, group: g.label() }).collect();
        write_rows(&args.out.join("examiner_groups.csv"), &g)?;
    }
    let mut m = RunManifest::new("decompose", &args.out);
    spec.record(&mut m);
    m.write()
}

#[derive(Serialize, Deserialize)]
struct FitUnitRecord {
    ground_truth: String,
    group: String,
    slug: String,
    examiners: usize,
    items: usize,
    responses: usize,
    max_rhat: f64,
    converged: bool,
    acceptance: Vec<ChainAcceptance>,
    ratios: Vec<RatioEstimate>,
}

#[derive(Serialize)]
struct SummaryRow {
    parameter: String,
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    split_rhat: f64,
    ess_bulk: f64,
}

#[derive(Serialize)]
struct RatioRow {
    ground_truth: String,
    group: String,
    basis: &'static str,
    point: f64,
    lower: f64,
    upper: f64,
    examiner_component: f64,
    item_component: f64,
    ratio_of_averages: f64,
}

fn ratio_row(gt: GroundTruth, group: &str, r: &RatioEstimate) -> RatioRow {
    RatioRow {
        ground_truth: gt.code().into(),
        group: group.into(),
        basis: r.basis.label(),
        point: r.point,
        lower: r.lower,
        upper: r.upper,
        examiner_component: r.examiner_component,
        item_component: r.item_component,
        ratio_of_averages: r.ratio_of_averages,
    }
}

fn draws_path(out: &Path, slug: &str) -> PathBuf {
    out.join("fit").join(slug).join("draws.bin")
}

fn load_draws(out: &Path, slug: &str) -> CliResult<PosteriorDraws> {
    let path = draws_path(out, slug);
    let file = fs::File::open(&path).map_err(|_| {
        CliError::Prerequisite(format!("{} not found: run fit first", path.display()))
    })?;
    Ok(read_draws_bin(std::io::BufReader::new(file))?)
}

fn remove_stale(out: &Path, names: &[&str]) {
    for n in names {
        let _ = fs::remove_file(out.join(n));
    }
}

pub fn fit_cmd(args: &FitArgs) -> CliResult<()> {
    let spec = DataSpec::from_args(&args.data, PolicyArg::Pool);
    let out = &args.data.out;
    let sampler = SamplerConfig {
        chains: args.chains,
        iterations: args.iters,
        warmup: args.warmup,
        seed: args.seed,
        ..Default::default()
    };
    let model = ModelConfig { hyperprior_scale: args.hyperprior_scale, seed: args.seed, center_items: true };
    sampler.validate()?;
    model.validate()?;
    let study = Study::load(&spec)?;
    let units = study.units(&spec)?;
    ensure_dir(out)?;
    remove_stale(out, &["ppc.csv", "ppc.json", "manifest.ppc.json", "manifest.report.json"]);

    let mut records = Vec::new();
    let mut ratio_rows = Vec::new();
    for u in &units {
        log::info!("fitting {} ({} responses)", u.slug(), u.data.len());
        let draws = fit(&u.data, &model, &sampler)
            .map_err(|e| CliError::Numerical(format!("fit of {} failed: {e}", u.slug())))?;
        let dir = out.join("fit").join(u.slug());
        ensure_dir(&dir)?;
        let bin = dir.join("draws.bin");
        let f = fs::File::create(&bin).map_err(io_err(&bin))?;
        write_draws_bin(&draws, std::io::BufWriter::new(f))?;
        if args.draws_csv {
            let p = dir.join("draws.csv");
            let f = fs::File::create(&p).map_err(io_err(&p))?;
            write_draws_csv(&draws, std::io::BufWriter::new(f))?;
        }
        let view = if model.center_items { draws.centered() } else { draws.clone() };
        let summary: Vec<SummaryRow> = summarize(&view, INTERVAL_LEVEL)?
            .into_iter()
            .zip(&view.diagnostics)
            .map(|(s, d)| SummaryRow {
                parameter: s.name,
                mean: s.mean,
                sd: s.sd,
                lower: s.lower,
                upper: s.upper,
                split_rhat: d.split_rhat,
                ess_bulk: d.ess_bulk,
            })
            .collect();
        write_rows(&dir.join("summary.csv"), &summary)?;
        let ratios: Vec<RatioEstimate> = RatioBasis::ALL.iter().map(|&b| model_ratio(&draws, b)).collect();
        for r in &ratios {
            ratio_rows.push(ratio_row(u.truth, &u.group, r));
        }
        let chosen = ratios.iter().find(|r| r.basis == args.ratio_basis.basis()).expect("both bases");
        println!(
            "{} {:<14} max R-hat {:.3}  model ratio ({}) {:.3} [{:.3}, {:.3}]",
            u.truth.code(),
            u.group,
            draws.max_rhat(),
            chosen.basis.label(),
            chosen.point,
            chosen.lower,
            chosen.upper
        );
        records.push(FitUnitRecord {
            ground_truth: u.truth.code().into(),
            group: u.group.clone(),
            slug: u.slug(),
            examiners: u.data.examiners().len(),
            items: u.data.items().len(),
            responses: u.data.len(),
            max_rhat: draws.max_rhat(),
            converged: draws.converged(),
            acceptance: draws.acceptance.clone(),
            ratios,
        });
    }
    write_rows(&out.join("model_ratios.csv"), &ratio_rows)?;
    write_json(&out.join("fit.json"), &records)?;
    let mut m = RunManifest::new("fit", out);
    spec.record(&mut m);
    m.sampler = Some(sampler);
    m.model = Some(model);
    m.seed = Some(args.seed);
    m.ratio_basis = Some(args.ratio_basis);
    m.write()
}

#[derive(Serialize, Deserialize)]
struct PpcRow {
    ground_truth: String,
    group: String,
    predicted: f64,
    lower: f64,
    upper: f64,
    observed: Option<f64>,
    contains_observed: bool,
    n_sims: usize,
    undefined: usize,
}

fn proportion_rows<'a>(v: &'a [(&'static str, String, String, f64)]) -> Vec<ProportionRow<'a>> {
    v.iter()
        .map(|(gt, g, id, p)| ProportionRow { ground_truth: gt, group: g, id, inconclusive_proportion: *p })
        .collect()
}

fn ppc_row(u: &Unit, pi: &PredictiveInterval) -> PpcRow {
    PpcRow {
        ground_truth: u.truth.code().into(),
        group: u.group.clone(),
        predicted: pi.predicted,
        lower: pi.lower,
        upper: pi.upper,
        observed: pi.observed,
        contains_observed: pi.contains_observed(),
        n_sims: pi.n_sims,
        undefined: pi.undefined,
    }
}

pub fn ppc_cmd(args: &PpcArgs) -> CliResult<()> {
    let fit_m = RunManifest::load_prerequisite(&args.out, "fit")?;
    let spec = DataSpec::from_manifest(&fit_m)?;
    let seed = args.seed.or(fit_m.seed).unwrap_or(0);
    let study = Study::load(&spec)?;
    let mut rows = Vec::new();
    for u in study.units(&spec)? {
        let draws = load_draws(&args.out, &u.slug())?;
        let n = args.n_sims.unwrap_or_else(|| default_n_sims(&draws));
        let pi = predictive_ratio_interval(&draws, &u.data, n, seed)?;
        println!(
            "{} {:<14} predicted {:.3} [{:.3}, {:.3}]  observed {}",
            u.truth.code(),
            u.group,
            pi.predicted,
            pi.lower,
            pi.upper,
            fmt_opt(pi.observed)
        );
        rows.push(ppc_row(&u, &pi));
    }
    write_rows(&args.out.join("ppc.csv"), &rows)?;
    write_json(&args.out.join("ppc.json"), &rows)?;
    let mut m = RunManifest::new("ppc", &args.out);
    spec.record(&mut m);
    m.seed = Some(seed);
    m.n_sims = args.n_sims;
    m.write()
}

#[derive(Serialize)]
struct Report {
    input: PathBuf,
    mapping: String,
    policy: PolicyArg,
    ratio_basis: BasisArg,
    rates: Vec<RateCsvRow>,
    decomposition: Vec<DecompositionRow>,
    model_ratios: Vec<RatioRow>,
    failure_rates: Vec<FailureRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ppc: Option<Vec<PpcRow>>,
    unconverged_units: Vec<String>,
}

pub fn report_cmd(args: &ReportArgs) -> CliResult<()> {
    let fit_m = RunManifest::load_prerequisite(&args.out, "fit")?;
    let spec = DataSpec::from_manifest(&fit_m)?;
    let basis = args.ratio_basis.or(fit_m.ratio_basis).unwrap_or(BasisArg::Scale);
    let study = Study::load(&spec)?;
    let truths = spec.truth.selected();

    let mut tables: BTreeMap<String, ContingencyTable> = BTreeMap::new();
    let mut rate_rows_all = Vec::new();
    for (group, ds) in study.by_group(PolicyArg::Exclude, None)? {
        let table = build_contingency(&ds);
        rate_rows_all.extend(rate_table_rows(&table, &group, &truths));
        tables.insert(group, table);
    }

    let mut decomposition = Vec::new();
    let mut ratio_rows = Vec::new();
    let mut inputs = Vec::new();
    let mut unconverged = Vec::new();
    for u in study.units(&spec)? {
        let draws = load_draws(&args.out, &u.slug())?;
        if !draws.converged() {
            unconverged.push(u.slug());
        }
        let d = decompose_lenient(&u.data);
        decomposition.push(DecompositionRow::new(u.truth.code(), &u.group, &d));
        let mut chosen = None;
        for b in RatioBasis::ALL {
            let r = model_ratio(&draws, b);
            ratio_rows.push(ratio_row(u.truth, &u.group, &r));
            if b == basis.basis() {
                chosen = Some(r);
            }
        }
        let table = *tables.get(&u.group).ok_or_else(|| {
            CliError::Numerical(format!("group {} has no responses once unsuitable are excluded", u.group))
        })?;
        inputs.push(FailureInput {
            ground_truth: u.truth,
            group: u.group.clone(),
            table,
            observed_ratio: d.ratio,
            model: chosen.expect("basis present"),
        });
    }
    let failure = adjusted_failure_rates(&inputs)?;
    let ppc_path = args.out.join("ppc.json");
    let ppc: Option<Vec<PpcRow>> = match fs::read_to_string(&ppc_path) {
        Ok(text) => Some(serde_json::from_str(&text)?),
        Err(_) => None,
    };

    write_rows(&args.out.join("failure_rates.csv"), &failure)?;
    let text = report_text(&spec, basis, &rate_rows_all, &decomposition, &failure, ppc.as_deref(), &unconverged);
    print!("{text}");
    write_text(&args.out.join("report.txt"), &text)?;
    let report = Report {
        input: spec.input.clone(),
        mapping: spec.mapping.clone(),
        policy: spec.policy,
        ratio_basis: basis,
        rates: rate_rows_all,
        decomposition,
        model_ratios: ratio_rows,
        failure_rates: failure,
        ppc,
        unconverged_units: unconverged,
    };
    write_json(&args.out.join("report.json"), &report)?;
    let mut m = RunManifest::new("report", &args.out);
    spec.record(&mut m);
    m.ratio_basis = Some(basis);
    m.write()
}

fn report_text(
    spec: &DataSpec,
    basis: BasisArg,
    rates: &[RateCsvRow],
    decomposition: &[DecompositionRow],
    failure: &[FailureRow],
    ppc: Option<&[PpcRow]>,
    unconverged: &[String],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Study: {} (mapping {})", spec.input.display(), spec.mapping);
    let _ = writeln!(s, "\nError rates (unsuitable excluded)");
    let _ = writeln!(s, "{:<3} {:<14} {:<24} {:>6}", "GT", "group", "option", "rate");
    for r in rates {
        let _ = writeln!(s, "{:<3} {:<14} {:<24} {:>6}", r.ground_truth, r.group, r.option, fmt_opt(r.rate));
    }
    let _ = writeln!(s, "\nEmpirical decomposition ({} policy)", spec.policy.name());
    let _ = writeln!(s, "{:<3} {:<14} {:>10} {:>10} {:>6}", "GT", "group", "examiner", "item", "ratio");
    for d in decomposition {
        let _ = writeln!(
            s,
            "{:<3} {:<14} {:>10.4} {:>10.4} {:>6}",
            d.ground_truth,
            d.group,
            d.examiner_var,
            d.item_var,
            fmt_opt(d.ratio)
        );
    }
    let label = basis.basis().label();
    let _ = writeln!(s, "\nFailure rates (model ratio on {label} basis)");
    let _ = writeln!(
        s,
        "{:<3} {:<14} {:>6} {:>6} {:>15} {:>6} {:>6} {:>8} {:>8}",
        "GT", "group", "obs_r", "mod_r", "interval", "inc_c", "inc_i", "obs_fail", "mod_fail"
    );
    for f in failure {
        let _ = writeln!(
            s,
            "{:<3} {:<14} {:>6} {:>6.3} [{:.3}, {:.3}] {:>6.3} {:>6.3} {:>8} {:>8.3}",
            f.ground_truth,
            f.group,
            fmt_opt(f.obs_ratio),
            f.model_ratio,
            f.lower,
            f.upper,
            f.inc_correct,
            f.inc_incorrect,
            fmt_opt(f.obs_failure),
            f.model_failure
        );
    }
    match ppc {
        Some(rows) => {
            let _ = writeln!(s, "\nPosterior-predictive ratio");
            for p in rows {
                let _ = writeln!(
                    s,
                    "{:<3} {:<14} {:.3} [{:.3}, {:.3}] observed {} {}",
                    p.ground_truth,
                    p.group,
                    p.predicted,
                    p.lower,
                    p.upper,
                    fmt_opt(p.observed),
                    if p.contains_observed { "inside" } else { "OUTSIDE" }
                );
            }
        }
        None => {
            let _ = writeln!(s, "\nPosterior-predictive check not run (bbr ppc).");
        }
    }
    if !unconverged.is_empty() {
        let _ = writeln!(s, "\nWARNING: split R-hat above 1.05 for {}", unconverged.join(", "));
    }
    s
}

#[derive(Deserialize)]
struct AssignmentRow {
    examiner: String,
    item: String,
    #[serde(default)]
    ground_truth: Option<String>,
}

fn roster(ids: &[String], n: usize, prefix: char) -> Vec<String> {
    if ids.is_empty() {
        (1..=n).map(|k| format!("{prefix}{k:03}")).collect()
    } else {
        ids.to_vec()
    }
}

fn simulation_design(params: &Parameters, args: &SimulateArgs) -> CliResult<StudyDesign> {
    let examiner_ids = roster(&params.examiner_ids, params.theta.len(), 'E');
    let item_ids = roster(&params.item_ids, params.zeta.len(), 'I');
    let default_truth = args.ground_truth.truth();
    if args.assignment == "crossed" {
        let mut d = StudyDesign::fully_crossed(examiner_ids.len(), item_ids.len(), default_truth);
        d.examiner_ids = examiner_ids;
        d.item_ids = item_ids;
        return Ok(d);
    }
    let path = PathBuf::from(&args.assignment);
    let file = fs::File::open(&path).map_err(io_err(&path))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let ex_index: BTreeMap<&str, usize> = examiner_ids.iter().enumerate().map(|(k, e)| (e.as_str(), k)).collect();
    let it_index: BTreeMap<&str, usize> = item_ids.iter().enumerate().map(|(k, e)| (e.as_str(), k)).collect();
    let mut item_truth = vec![default_truth; item_ids.len()];
    let mut pairs = Vec::new();
    for (row, rec) in reader.deserialize::<AssignmentRow>().enumerate() {
        let rec = rec?;
        let unknown = |kind: &str, id: &str| {
            CliError::Usage(format!("assignment row {}: {kind} `{id}` not in parameter file", row + 2))
        };
        let i = *ex_index.get(rec.examiner.as_str()).ok_or_else(|| unknown("examiner", &rec.examiner))?;
        let j = *it_index.get(rec.item.as_str()).ok_or_else(|| unknown("item", &rec.item))?;
        if let Some(gt) = rec.ground_truth.as_deref().filter(|s| !s.is_empty()) {
            item_truth[j] = gt.parse()?;
        }
        pairs.push((i, j));
    }
    pairs.sort_unstable();
    pairs.dedup();
    if pairs.is_empty() {
        return Err(CliError::Usage("assignment file has no rows".into()));
    }
    Ok(StudyDesign { examiner_ids, item_ids, item_truth, pairs })
}

pub fn simulate_cmd(args: &SimulateArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.params).map_err(io_err(&args.params))?;
    let params = Parameters::from_json(&text)?;
    let design = simulation_design(&params, args)?;
    let ds = simulate_responses(&params, &design, args.seed)?;
    ensure_dir(&args.out)?;
    let path = args.out.join("simulated.csv");
    let f = fs::File::create(&path).map_err(io_err(&path))?;
    write_csv(&ds, std::io::BufWriter::new(f))?;
    let s = ds.summary();
    println!(
        "wrote {} responses ({} examiners, {} items) to {}",
        s.responses,
        s.examiners,
        s.items,
        path.display()
    );
    let mut m = RunManifest::new("simulate", &args.out);
    m.params = Some(args.params.clone());
    m.assignment = Some(args.assignment.clone());
    m.seed = Some(args.seed);
    m.mapping = Some("canonical".into());
    m.write()
}
