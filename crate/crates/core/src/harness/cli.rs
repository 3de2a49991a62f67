use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{compare_scenarios, emit_report, render_table, ReportFormat};
use crate::ingest::{
    encode, forecast_demand, generate_synthetic_cohort, load_discharge_table,
    write_discharge_table, CodebookMode, DispositionMap, HospitalModels, PatientRecord,
    ReferralType, DEFAULT_FORECAST_HORIZON,
};
use crate::learn::{
    k_fold_cv, random_search_tune, train_forest, train_preprocessed, CvReport, Dataset,
    ForestModel, SearchSpace, Task,
};
use crate::sim::{
    compute_case_metrics, read_history, run_experiment_with_cases, validate_against_history,
    write_case_log, write_metrics_csv, PatientModelSource, PredictionMode, ReferralCase,
    ReplicationMetrics, ScenarioConfig, Stage,
};
use crate::stats::{MeanSd, RngStream};
use crate::util::write_atomic;

#[derive(Debug, Parser)]
#[command(
    name = "refsim",
    version,
    about = "Referral-processing simulation with ML-guided prioritization"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replications for simulate, compare and validate.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Simulation horizon, forecast horizon or synthetic cohort length.
    #[arg(long, global = true)]
    pub days: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    Baseline,
    Guided,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic discharge table with planted ground truth.
    Synth,
    /// Train per-hospital LOS and referral-type forests.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Cross-validated model reports.
    Evaluate {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Daily referral demand from trained models.
    Forecast {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Run one scenario.
    Simulate {
        #[arg(long, value_enum, default_value = "baseline")]
        scenario: ScenarioKind,
    },
    /// Run baseline and guided scenarios and report the reductions.
    Compare,
    /// Compare simulated baseline ATRT with a historical sample.
    Validate {
        #[arg(long)]
        history: Option<PathBuf>,
    },
}

struct Context {
    config: ExperimentConfig,
    out: PathBuf,
    days: Option<u32>,
}

impl Context {
    fn new(common: &CommonArgs) -> Result<Self> {
        let mut config = match &common.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if common.seed.is_some() {
            config.seed = common.seed;
        }
        if let Some(r) = common.reps {
            if r == 0 {
                return Err(Error::Config("--reps must be at least 1".into()));
            }
            config.replications = Some(r);
        }
        let out = common
            .out
            .clone()
            .or_else(|| config.paths.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        Ok(Context {
            config,
            out,
            days: common.days,
        })
    }

    fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(42)
    }

    fn data(&self, flag: &Option<PathBuf>) -> Result<PathBuf> {
        flag.clone()
            .or_else(|| self.config.paths.data.clone())
            .ok_or_else(|| Error::Config("no data path: pass --data or set paths.data".into()))
    }

    fn models_dir(&self, flag: &Option<PathBuf>) -> PathBuf {
        flag.clone()
            .or_else(|| self.config.paths.models.clone())
            .unwrap_or_else(|| self.out.clone())
    }

    fn scenario(&self, kind: ScenarioKind) -> Result<ScenarioConfig> {
        let mut c = match kind {
            ScenarioKind::Baseline => self.config.baseline_scenario()?,
            ScenarioKind::Guided => self.config.guided_scenario()?,
        };
        if let Some(d) = self.days {
            c.horizon_days = d;
        }
        if let PredictionMode::Model { model_dir } = &c.prediction {
            let ids: Vec<String> = c.hospitals.iter().map(|h| h.id.clone()).collect();
            c.patient_models = Some(Arc::new(PatientModelSource {
                cohort: self.config.cohort_spec()?,
                models: load_models(model_dir, &ids)?,
            }));
        }
        c.validate()?;
        Ok(c)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn los_model_path(dir: &Path, hospital: &str) -> PathBuf {
    dir.join(format!("{hospital}.los.model"))
}

pub fn referral_model_path(dir: &Path, hospital: &str) -> PathBuf {
    dir.join(format!("{hospital}.referral.model"))
}

pub fn load_models(dir: &Path, hospitals: &[String]) -> Result<BTreeMap<String, HospitalModels>> {
    hospitals
        .iter()
        .map(|h| {
            let reg = ForestModel::read_from(&los_model_path(dir, h))?;
            let cls = ForestModel::read_from(&referral_model_path(dir, h))?;
            Ok((h.clone(), HospitalModels::new(reg, cls)?))
        })
        .collect()
}

fn by_hospital(records: Vec<PatientRecord>) -> BTreeMap<String, Vec<PatientRecord>> {
    let mut map: BTreeMap<String, Vec<PatientRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.hospital_id.clone()).or_default().push(r);
    }
    map
}

fn require_truth(records: &[PatientRecord]) -> Result<()> {
    if records
        .iter()
        .any(|r| r.los_days.is_none() || r.referral.is_none())
    {
        return Err(Error::Data(
            "training data needs length of stay and disposition on every row".into(),
        ));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(&cli.common)?;
    match &cli.command {
        Command::Synth => synth(&ctx),
        Command::Train { data } => train(&ctx, &ctx.data(data)?),
        Command::Evaluate { data } => evaluate(&ctx, &ctx.data(data)?),
        Command::Forecast { data, models } => {
            forecast(&ctx, &ctx.data(data)?, &ctx.models_dir(models))
        }
        Command::Simulate { scenario } => simulate(&ctx, *scenario),
        Command::Compare => compare(&ctx),
        Command::Validate { history } => validate(&ctx, history),
    }
}

fn synth(ctx: &Context) -> Result<()> {
    let mut spec = ctx.config.cohort_spec()?;
    if let Some(d) = ctx.days {
        spec.days = d;
    }
    spec.validate()?;
    let records = generate_synthetic_cohort(&spec)?;
    let path = ctx.path("discharges.csv");
    write_discharge_table(&records, &path, true)?;
    println!("wrote {} patients to {}", records.len(), path.display());
    Ok(())
}

fn train(ctx: &Context, data: &Path) -> Result<()> {
    let table = load_discharge_table(data, CodebookMode::Build, &DispositionMap::default())?;
    if table.dropped > 0 {
        log::warn!("{}: dropped {} invalid rows", data.display(), table.dropped);
    }
    require_truth(&table.records)?;
    let training = &ctx.config.training;
    let options = training.cv_options();
    let labels: Vec<String> = ReferralType::ALL
        .iter()
        .map(|t| t.label().to_string())
        .collect();
    for (h, records) in by_hospital(table.records) {
        let mut rng = RngStream::substream(ctx.seed(), &format!("train/{h}"));
        let reg = encode(&records, &table.codebook, Task::Regression)?;
        let cls = encode(&records, &table.codebook, Task::Classification)?;
        let fit = |d: &Dataset, rng: &mut RngStream| -> Result<ForestModel> {
            let params = if training.tune_budget > 0 {
                let space = SearchSpace::default();
                random_search_tune(d, &space, training.tune_budget, &options, rng)?.best
            } else {
                training.forest_params()
            };
            train_preprocessed(d, &params, &options, rng)
        };
        let reg_model = fit(&reg, &mut rng)?.with_codebook(table.codebook.clone());
        let cls_model = fit(&cls, &mut rng)?
            .with_codebook(table.codebook.clone())
            .with_category_labels(labels.clone());
        reg_model.write_to(&los_model_path(&ctx.out, &h))?;
        cls_model.write_to(&referral_model_path(&ctx.out, &h))?;
        println!("{h}: trained on {} patients", records.len());
    }
    Ok(())
}

fn evaluate(ctx: &Context, data: &Path) -> Result<()> {
    let table = load_discharge_table(data, CodebookMode::Build, &DispositionMap::default())?;
    require_truth(&table.records)?;
    let training = &ctx.config.training;
    let options = training.cv_options();
    let params = training.forest_params();
    let trainer = |d: &Dataset, r: &mut RngStream| train_forest(d, &params, r);
    let mut text = String::new();
    let mut rows: Vec<[String; 5]> = Vec::new();
    let _ = writeln!(
        text,
        "referral type (%)\taccuracy\tAUROC\tsensitivity\tspecificity"
    );
    let mut reg_lines = vec!["length of stay\tMAE\tMSE\tR^2".to_string()];
    for (h, records) in by_hospital(table.records) {
        let mut rng = RngStream::substream(ctx.seed(), &format!("evaluate/{h}"));
        let cls = encode(&records, &table.codebook, Task::Classification)?;
        let reg = encode(&records, &table.codebook, Task::Regression)?;
        if let CvReport::Classification(r) = k_fold_cv(&cls, &options, &trainer, &mut rng)? {
            let _ = writeln!(text, "{h}\t{}", r.table_row());
            for (name, v) in [
                ("accuracy", r.accuracy),
                ("macro_auroc", r.macro_auroc),
                ("macro_sensitivity", r.macro_sensitivity),
                ("macro_specificity", r.macro_specificity),
            ] {
                rows.push(metric_row(&h, "classification", name, v));
            }
        }
        if let CvReport::Regression(r) = k_fold_cv(&reg, &options, &trainer, &mut rng)? {
            reg_lines.push(format!("{h}\t{}", r.table_row()));
            for (name, v) in [("mae", r.mae), ("mse", r.mse), ("r2", r.r2)] {
                rows.push(metric_row(&h, "regression", name, v));
            }
        }
    }
    let _ = writeln!(text);
    for l in reg_lines {
        let _ = writeln!(text, "{l}");
    }
    print!("{text}");
    let bytes = crate::util::csv_bytes(&["hospital", "task", "metric", "mean", "sd"], |w| {
        for r in &rows {
            w.write_record(r)?;
        }
        Ok(())
    })?;
    write_atomic(&ctx.path("evaluation.csv"), &bytes)?;
    write_atomic(&ctx.path("evaluation.txt"), text.as_bytes())
}

fn metric_row(h: &str, task: &str, name: &str, v: MeanSd) -> [String; 5] {
    [
        h.to_string(),
        task.to_string(),
        name.to_string(),
        v.mean.to_string(),
        v.sd.to_string(),
    ]
}

fn forecast(ctx: &Context, data: &Path, models_dir: &Path) -> Result<()> {
    let table = load_discharge_table(data, CodebookMode::Build, &DispositionMap::default())?;
    let hospitals: Vec<String> = by_hospital(table.records.clone()).into_keys().collect();
    let models = load_models(models_dir, &hospitals)?;
    let horizon = ctx.days.unwrap_or(DEFAULT_FORECAST_HORIZON);
    let f = forecast_demand(&table.records, &models, horizon)?;
    let path = ctx.path("demand.csv");
    f.write_csv(&path)?;
    println!(
        "{} referrals forecast over {horizon} days, written to {}",
        f.total(),
        path.display()
    );
    Ok(())
}

type Runs = Vec<(ReplicationMetrics, Vec<ReferralCase>)>;

fn run_scenario(ctx: &Context, kind: ScenarioKind) -> Result<(ScenarioConfig, Runs)> {
    let config = ctx.scenario(kind)?;
    let runs = run_experiment_with_cases(
        &config,
        ctx.config.replications(),
        ctx.config.report.case_log,
    )?;
    Ok((config, runs))
}

fn write_runs(
    ctx: &Context,
    name: &str,
    runs: &[(ReplicationMetrics, Vec<ReferralCase>)],
) -> Result<Vec<ReplicationMetrics>> {
    let metrics: Vec<ReplicationMetrics> = runs.iter().map(|(m, _)| m.clone()).collect();
    write_metrics_csv(&metrics, &ctx.path(&format!("{name}_metrics.csv")))?;
    if ctx.config.report.case_log {
        let cases: Vec<(usize, &[ReferralCase])> = runs
            .iter()
            .map(|(m, c)| (m.replication, c.as_slice()))
            .collect();
        write_case_log(&cases, &ctx.path(&format!("{name}_cases.csv")))?;
    }
    Ok(metrics)
}

fn scenario_name(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Baseline => "baseline",
        ScenarioKind::Guided => "guided",
    }
}

fn simulate(ctx: &Context, kind: ScenarioKind) -> Result<()> {
    let (config, runs) = run_scenario(ctx, kind)?;
    let metrics = write_runs(ctx, scenario_name(kind), &runs)?;
    println!("{}", describe_scenario(&config));
    println!("group\tcases/rep\tATRT (days)\tRCDT (days)");
    for (i, g) in metrics[0].groups.iter().enumerate() {
        let col = |f: fn(&crate::sim::GroupMetrics) -> f64| {
            MeanSd::of(&metrics.iter().map(|m| f(&m.groups[i])).collect::<Vec<_>>())
        };
        println!(
            "{}\t{:.1}\t{}\t{}",
            g.hospital,
            col(|g| g.n_cases as f64).mean,
            col(|g| g.mean_atrt),
            col(|g| g.mean_rcdt)
        );
    }
    Ok(())
}

/// The parameters a reader needs to reproduce a scenario.
pub fn describe_scenario(c: &ScenarioConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "scenario: discipline={:?} capacity={} info_wait_probability={} horizon_days={} burn_in_days={} seed={}",
        c.discipline, c.mco_capacity, c.info_wait_probability, c.horizon_days, c.burn_in_days, c.seed
    );
    let _ = writeln!(
        s,
        "  arrivals={:?} offered_utilization={:.3} los_truth=mean {} sd {} min {} prediction={:?}",
        c.arrivals,
        c.offered_utilization(),
        c.los_truth.mean,
        c.los_truth.sd,
        c.los_truth.min,
        c.prediction
    );
    let _ = writeln!(
        s,
        "  vendor_route: SNF={} HHS={} Other={}",
        c.vendor_route.snf, c.vendor_route.hhs, c.vendor_route.other
    );
    for h in &c.hospitals {
        let _ = writeln!(
            s,
            "  {}: rates SNF={} HHS={} Other={} per day, request delay {:?}, prediction MAE {}",
            h.id,
            h.arrival_rates.snf,
            h.arrival_rates.hhs,
            h.arrival_rates.other,
            h.request_delay,
            h.prediction_mae
        );
    }
    for st in Stage::ALL {
        let t = c.stages.raw(st);
        let unit = if st.in_days() { "days" } else { "min" };
        let _ = writeln!(
            s,
            "  stage {}: triangular({}, {}, {}) {unit}{}",
            st.name(),
            t.min,
            t.mode,
            t.max,
            if st.uses_processor() {
                ""
            } else {
                ", no processor"
            }
        );
    }
    s.trim_end().to_string()
}

fn compare(ctx: &Context) -> Result<()> {
    let (bconf, bruns) = run_scenario(ctx, ScenarioKind::Baseline)?;
    let (gconf, gruns) = run_scenario(ctx, ScenarioKind::Guided)?;
    let b = write_runs(ctx, "baseline", &bruns)?;
    let g = write_runs(ctx, "guided", &gruns)?;
    let report = compare_scenarios(&b, &g)?;
    emit_report(&report, ReportFormat::Csv, &ctx.path("comparison.csv"))?;
    let text = format!(
        "baseline {}\nguided {}\n\n{}",
        describe_scenario(&bconf),
        describe_scenario(&gconf),
        render_table(&report)
    );
    write_atomic(&ctx.path("comparison.txt"), text.as_bytes())?;
    if ctx.config.report.format == ReportFormat::Csv {
        print!(
            "{}",
            String::from_utf8_lossy(&crate::harness::report::render_csv(&report)?)
        );
    } else {
        print!("{text}");
    }
    Ok(())
}

fn validate(ctx: &Context, history: &Option<PathBuf>) -> Result<()> {
    let path = history
        .clone()
        .or_else(|| ctx.config.paths.history.clone())
        .ok_or_else(|| {
            Error::Config("no history file: pass --history or set paths.history".into())
        })?;
    let hist = read_history(&path)?;
    let config = ctx.scenario(ScenarioKind::Baseline)?;
    let runs = run_experiment_with_cases(&config, ctx.config.replications(), true)?;
    let burn_in = f64::from(config.burn_in_days);
    let sim: Vec<f64> = runs
        .iter()
        .flat_map(|(_, cases)| cases.iter())
        .filter(|c| c.admission_time >= burn_in)
        .map(|c| compute_case_metrics(c).map(|m| m.atrt))
        .collect::<Result<_>>()?;
    let report = validate_against_history(&sim, &hist)?;
    report.write_density_csv(&ctx.path("validation_density.csv"))?;
    let t = report.test;
    let text = format!(
        "simulated ATRT mean {:.3} (n={}), historical mean {:.3} (n={})\n\
         Welch t={:.4} df={:.1} p={:.4}: {}\n",
        report.sim_mean,
        sim.len(),
        report.hist_mean,
        hist.len(),
        t.t_statistic,
        t.degrees_of_freedom,
        t.p_value,
        if t.reject_at_005 {
            "means differ at the 5% level"
        } else {
            "no significant difference at the 5% level"
        }
    );
    write_atomic(&ctx.path("validation.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
