//! The referral pipeline as a discrete-event simulation.
//!
//! All random quantities of a case (admission instant, true LOS, request
//! delay, every stage duration, the info-wait branch and the prediction
//! error) are drawn when the case is generated, each kind from its own
//! substream of the replication seed. The event loop itself is
//! deterministic, so two scenarios that share a seed see the same draws
//! wherever their distributions agree.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ReferralType;
use crate::sim::calendar::EventCalendar;
use crate::sim::config::{ArrivalMode, Discipline, PredictionMode, ScenarioConfig, Stage};
use crate::sim::metrics::ReplicationMetrics;
use crate::stats::{derive_seed, sample_poisson_count, RngStream, ShiftedLognormalParams};

/// One simulated referral's timeline, in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferralCase {
    pub hospital_id: String,
    pub referral_type: ReferralType,
    pub admission_time: f64,
    pub true_los: f64,
    pub discharge_time: f64,
    /// Present when the queue is keyed on predicted discharge.
    pub predicted_discharge_time: Option<f64>,
    pub request_time: f64,
    pub stage_completions: Vec<(Stage, f64)>,
    pub creation_time: f64,
}

impl ReferralCase {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.admission_time,
            self.request_time,
            self.creation_time,
            self.discharge_time,
        ]
        .iter()
        .all(|t| t.is_finite());
        if !finite {
            return Err(Error::Case("non-finite timestamp".into()));
        }
        if !(self.admission_time <= self.request_time && self.request_time <= self.creation_time) {
            return Err(Error::Case(format!(
                "expected admission <= request <= creation, got {} / {} / {}",
                self.admission_time, self.request_time, self.creation_time
            )));
        }
        if !(self.discharge_time > self.admission_time) {
            return Err(Error::Case(format!(
                "discharge {} not after admission {}",
                self.discharge_time, self.admission_time
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseMetrics {
    /// Admission to referral creation.
    pub atrt: f64,
    /// Creation delay past discharge, zero when created before discharge.
    pub rcdt: f64,
}

pub fn compute_case_metrics(case: &ReferralCase) -> Result<CaseMetrics> {
    case.validate()?;
    Ok(CaseMetrics {
        atrt: case.creation_time - case.admission_time,
        rcdt: (case.creation_time - case.discharge_time).max(0.0),
    })
}

/// Hooks into the event loop, for auditing.
pub trait SimObserver {
    fn on_generated(&mut self, _cases: usize) {}
    fn on_event(&mut self, _time: f64) {}
    fn on_created(&mut self, _time: f64) {}
    /// A processor was handed to a case with queue key `key`; `min_waiting`
    /// is the smallest key still queued.
    fn on_acquire(&mut self, _time: f64, _key: f64, _min_waiting: Option<f64>) {}
}

pub struct NoObserver;

impl SimObserver for NoObserver {}

/// Records clock and queue-order violations.
#[derive(Debug, Default, Clone)]
pub struct AuditTrace {
    pub generated: usize,
    pub created: usize,
    pub events: usize,
    pub last_time: f64,
    pub clock_violations: usize,
    pub acquisitions: usize,
    pub priority_violations: usize,
}

impl SimObserver for AuditTrace {
    fn on_generated(&mut self, cases: usize) {
        self.generated += cases;
    }

    fn on_created(&mut self, _time: f64) {
        self.created += 1;
    }

    fn on_event(&mut self, time: f64) {
        if self.events > 0 && time < self.last_time {
            self.clock_violations += 1;
        }
        self.events += 1;
        self.last_time = time;
    }

    fn on_acquire(&mut self, _time: f64, key: f64, min_waiting: Option<f64>) {
        self.acquisitions += 1;
        if min_waiting.is_some_and(|m| m < key) {
            self.priority_violations += 1;
        }
    }
}

struct Plan {
    hospital: usize,
    referral: ReferralType,
    admission: f64,
    true_los: f64,
    request: f64,
    predicted_discharge: Option<f64>,
    route: Vec<(Stage, f64)>,
}

fn sample_los(config: &ScenarioConfig, rng: &mut RngStream) -> f64 {
    let l = config.los_truth;
    let draw = ShiftedLognormalParams {
        shift: 0.0,
        mean: l.mean,
        sd: l.sd,
    }
    .transform(if l.sd == 0.0 {
        0.0
    } else {
        rng.standard_normal()
    });
    draw.max(l.min)
}

fn plan_cases(config: &ScenarioConfig, seed: u64) -> Result<Vec<Plan>> {
    let mut arrivals = RngStream::substream(seed, "arrivals");
    let mut los_rng = RngStream::substream(seed, "los");
    let mut request_rng = RngStream::substream(seed, "request");
    let mut stage_rng = RngStream::substream(seed, "stages");
    let mut branch_rng = RngStream::substream(seed, "branch");
    let mut predict_rng = RngStream::substream(seed, "prediction");
    let mut patient_rng = RngStream::substream(seed, "patients");
    let priority = config.discipline == Discipline::PriorityByPredictedDischarge;

    let mut plans = Vec::new();
    for day in 0..config.horizon_days {
        for (h, hospital) in config.hospitals.iter().enumerate() {
            for referral in ReferralType::ALL {
                let rate = hospital.arrival_rates.get(referral);
                let count = match config.arrivals {
                    ArrivalMode::Poisson => sample_poisson_count(rate, &mut arrivals)?,
                    ArrivalMode::Deterministic => rate.round() as u64,
                };
                for _ in 0..count {
                    let admission = f64::from(day) + arrivals.uniform();
                    let request = admission + hospital.request_delay.sample(&mut request_rng);

                    let mut route = Vec::with_capacity(Stage::ALL.len());
                    let info = branch_rng.uniform() < config.info_wait_probability;
                    let vendor = config.vendor_route.get(referral);
                    for stage in Stage::ALL {
                        let d = config.stages.days(stage).quantile(stage_rng.uniform());
                        let skip = (stage == Stage::InfoWait && !info)
                            || (stage.is_vendor_path() && !vendor);
                        if !skip {
                            route.push((stage, d));
                        }
                    }

                    let z = predict_rng.standard_normal();
                    let (true_los, predicted_los) = match &config.prediction {
                        PredictionMode::Oracle {} => {
                            let los = sample_los(config, &mut los_rng);
                            let sigma = hospital.prediction_mae * (PI / 2.0).sqrt();
                            (los, los + sigma * z)
                        }
                        PredictionMode::Model { .. } => {
                            let src = config.patient_models.as_ref().ok_or_else(|| {
                                Error::Config("model prediction mode needs loaded models".into())
                            })?;
                            let (features, los, _) = src.cohort.sample_patient(&mut patient_rng);
                            let models = src.models.get(&hospital.id).ok_or_else(|| {
                                Error::Config(format!("no models for hospital {}", hospital.id))
                            })?;
                            let record = crate::ingest::PatientRecord {
                                hospital_id: hospital.id.clone(),
                                admission_day: admission,
                                features,
                                los_days: None,
                                referral: None,
                            };
                            (los, models.predict_los(&record)?)
                        }
                    };
                    plans.push(Plan {
                        hospital: h,
                        referral,
                        admission,
                        true_los,
                        request,
                        predicted_discharge: priority.then(|| admission + predicted_los.max(1.0)),
                        route,
                    });
                }
            }
        }
    }
    Ok(plans)
}

#[derive(Debug, Clone, Copy)]
struct QueueKey {
    key: f64,
    seq: u64,
    case: usize,
}

impl PartialEq for QueueKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueKey {}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(self.seq.cmp(&other.seq))
    }
}

enum Event {
    Request(usize),
    StageDone(usize),
}

struct Engine<'a, O: SimObserver> {
    plans: &'a [Plan],
    discipline: Discipline,
    calendar: EventCalendar<Event>,
    waiting: BinaryHeap<Reverse<QueueKey>>,
    enqueue_seq: u64,
    free: usize,
    next_stage: Vec<usize>,
    completions: Vec<Vec<(Stage, f64)>>,
    creation: Vec<f64>,
    observer: &'a mut O,
}

impl<O: SimObserver> Engine<'_, O> {
    fn run(&mut self) {
        self.observer.on_generated(self.plans.len());
        for (i, p) in self.plans.iter().enumerate() {
            self.calendar.schedule(p.request, Event::Request(i));
        }
        while let Some((now, event)) = self.calendar.pop() {
            self.observer.on_event(now);
            match event {
                Event::Request(i) => self.advance(i, now),
                Event::StageDone(i) => {
                    let (stage, _) = self.plans[i].route[self.next_stage[i]];
                    self.completions[i].push((stage, now));
                    self.next_stage[i] += 1;
                    if stage.uses_processor() {
                        self.free += 1;
                    }
                    self.advance(i, now);
                }
            }
            self.dispatch(now);
        }
    }

    /// Start the case's next stage, or mark it created.
    fn advance(&mut self, i: usize, now: f64) {
        let plan = &self.plans[i];
        let Some(&(stage, duration)) = plan.route.get(self.next_stage[i]) else {
            self.creation[i] = now;
            self.observer.on_created(now);
            return;
        };
        if stage.uses_processor() {
            let key = match self.discipline {
                Discipline::Fifo => now,
                Discipline::PriorityByPredictedDischarge => plan.predicted_discharge.unwrap_or(now),
            };
            self.waiting.push(Reverse(QueueKey {
                key,
                seq: self.enqueue_seq,
                case: i,
            }));
            self.enqueue_seq += 1;
        } else {
            self.calendar.schedule(now + duration, Event::StageDone(i));
        }
    }

    fn dispatch(&mut self, now: f64) {
        while self.free > 0 {
            let Some(Reverse(next)) = self.waiting.pop() else {
                break;
            };
            let min_waiting = self.waiting.peek().map(|Reverse(k)| k.key);
            self.observer.on_acquire(now, next.key, min_waiting);
            self.free -= 1;
            let (_, duration) = self.plans[next.case].route[self.next_stage[next.case]];
            self.calendar
                .schedule(now + duration, Event::StageDone(next.case));
        }
    }
}

pub struct Replication {
    pub cases: Vec<ReferralCase>,
    pub metrics: ReplicationMetrics,
}

/// Run one replication to completion: every case admitted inside the
/// horizon is followed until its referral is created.
pub fn run_replication(config: &ScenarioConfig, seed: u64) -> Result<Replication> {
    run_replication_observed(config, seed, &mut NoObserver)
}

pub fn run_replication_observed<O: SimObserver>(
    config: &ScenarioConfig,
    seed: u64,
    observer: &mut O,
) -> Result<Replication> {
    config.validate()?;
    let plans = plan_cases(config, seed)?;
    let n = plans.len();
    let mut engine = Engine {
        plans: &plans,
        discipline: config.discipline,
        calendar: EventCalendar::new(),
        waiting: BinaryHeap::new(),
        free: config.mco_capacity,
        next_stage: vec![0; n],
        enqueue_seq: 0,
        completions: vec![Vec::new(); n],
        creation: vec![f64::NAN; n],
        observer,
    };
    engine.run();
    let Engine {
        completions,
        creation,
        ..
    } = engine;

    let cases: Vec<ReferralCase> = plans
        .into_iter()
        .zip(completions)
        .zip(creation)
        .map(|((p, stage_completions), creation_time)| ReferralCase {
            hospital_id: config.hospitals[p.hospital].id.clone(),
            referral_type: p.referral,
            admission_time: p.admission,
            true_los: p.true_los,
            discharge_time: p.admission + p.true_los,
            predicted_discharge_time: p.predicted_discharge,
            request_time: p.request,
            stage_completions,
            creation_time,
        })
        .collect();
    if let Some(c) = cases.iter().find(|c| c.creation_time.is_nan()) {
        return Err(Error::Case(format!(
            "case admitted at {} never completed",
            c.admission_time
        )));
    }
    let metrics = ReplicationMetrics::from_cases(0, config, &cases)?;
    Ok(Replication { cases, metrics })
}

/// Seed of replication `index` under master seed `seed`.
pub fn replication_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, "replication", index as u64)
}

/// Metrics of `replications` independent runs; run i uses substream
/// (config.seed, i).
pub fn run_experiment(
    config: &ScenarioConfig,
    replications: usize,
) -> Result<Vec<ReplicationMetrics>> {
    Ok(run_experiment_with_cases(config, replications, false)?
        .into_iter()
        .map(|(m, _)| m)
        .collect())
}

/// As [`run_experiment`], optionally keeping each replication's cases.
pub fn run_experiment_with_cases(
    config: &ScenarioConfig,
    replications: usize,
    keep_cases: bool,
) -> Result<Vec<(ReplicationMetrics, Vec<ReferralCase>)>> {
    if replications == 0 {
        return Err(Error::param("replications must be at least 1"));
    }
    config.validate()?;
    (0..replications)
        .into_par_iter()
        .map(|i| {
            let rep = run_replication(config, replication_seed(config.seed, i))?;
            let mut metrics = rep.metrics;
            metrics.replication = i;
            Ok((metrics, if keep_cases { rep.cases } else { Vec::new() }))
        })
        .collect()
}
