//! Independent reference implementations and property checkers shared by
//! the integration tests and the acceptance runner.

#![allow(dead_code)]

use refsim::ingest::ReferralType;
use refsim::learn::{Dataset, Target};
use refsim::sim::{
    run_replication, run_replication_observed, ArrivalMode, AuditTrace, DelaySpec, Discipline,
    HospitalConfig, PerType, ReferralCase, ScenarioConfig, Stage,
};
use refsim::stats::RngStream;

// ---------------------------------------------------------------- metrics

/// AUROC by counting every positive/negative pair.
pub fn brute_auroc(truth: &[bool], scores: &[f64]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &ti) in truth.iter().enumerate() {
        for (j, &tj) in truth.iter().enumerate() {
            if ti && !tj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

pub struct BruteClassification {
    pub accuracy: f64,
    pub sensitivity: Vec<Option<f64>>,
    pub specificity: Vec<Option<f64>>,
    pub auroc: Vec<Option<f64>>,
}

pub fn brute_classification(
    truth: &[usize],
    predicted: &[usize],
    scores: &[Vec<f64>],
    k: usize,
) -> BruteClassification {
    let n = truth.len();
    let hits = (0..n).filter(|&i| truth[i] == predicted[i]).count();
    let mut sensitivity = Vec::new();
    let mut specificity = Vec::new();
    let mut auroc = Vec::new();
    for c in 0..k {
        let pos: Vec<usize> = (0..n).filter(|&i| truth[i] == c).collect();
        let neg: Vec<usize> = (0..n).filter(|&i| truth[i] != c).collect();
        let tp = pos.iter().filter(|&&i| predicted[i] == c).count();
        let tn = neg.iter().filter(|&&i| predicted[i] != c).count();
        sensitivity.push((!pos.is_empty()).then(|| tp as f64 / pos.len() as f64));
        specificity.push((!neg.is_empty()).then(|| tn as f64 / neg.len() as f64));
        let labels: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let col: Vec<f64> = scores.iter().map(|s| s[c]).collect();
        auroc.push(brute_auroc(&labels, &col));
    }
    BruteClassification {
        accuracy: hits as f64 / n as f64,
        sensitivity,
        specificity,
        auroc,
    }
}

/// (MAE, MSE, R²) by the textbook formulas; R² is `None` for constant truth.
pub fn brute_regression(truth: &[f64], pred: &[f64]) -> (f64, f64, Option<f64>) {
    let n = truth.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for i in 0..truth.len() {
        abs += (truth[i] - pred[i]).abs();
        sq += (truth[i] - pred[i]).powi(2);
    }
    let mean = truth.iter().sum::<f64>() / n;
    let tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    (abs / n, sq / n, (tot > 0.0).then(|| 1.0 - sq / tot))
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

pub fn opt_close(a: f64, b: Option<f64>, tol: f64) -> bool {
    match b {
        Some(b) => close(a, b, tol),
        None => a.is_nan(),
    }
}

// ---------------------------------------------------------- case metrics

/// ATRT and RCDT as stated in words: days from admission to creation, and
/// days from discharge to creation if creation comes after discharge.
pub fn brute_case_metrics(admission: f64, creation: f64, discharge: f64) -> (f64, f64) {
    let atrt = creation - admission;
    let rcdt = if creation > discharge {
        creation - discharge
    } else {
        0.0
    };
    (atrt, rcdt)
}

pub fn random_case(rng: &mut RngStream) -> ReferralCase {
    let admission = (rng.uniform() * 30.0 * 8.0).round() / 8.0;
    // Quantised so that creation == discharge and creation == admission
    // occur regularly.
    let step = |rng: &mut RngStream, max: f64| (rng.uniform() * max * 4.0).round() / 4.0;
    let request = admission + step(rng, 8.0);
    let creation = request + step(rng, 8.0);
    let los = 0.25 + step(rng, 12.0);
    ReferralCase {
        hospital_id: "H1".into(),
        referral_type: ReferralType::ALL[rng.index(3)],
        admission_time: admission,
        true_los: los,
        discharge_time: admission + los,
        predicted_discharge_time: None,
        request_time: request,
        stage_completions: vec![],
        creation_time: creation,
    }
}

// ------------------------------------------------------------------- SMOTE

/// Synthetic rows (those after the original prefix) that do not lie on a
/// segment between a same-category member and one of its k nearest
/// same-category neighbours, the neighbours recomputed by brute force on
/// min-max-scaled features.
pub fn smote_segment_violations(original: &Dataset, balanced: &Dataset, k: usize) -> usize {
    let rows = original.rows();
    let codes = original.codes().unwrap();
    let d = original.n_features();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for r in rows {
        for j in 0..d {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    let scale = |r: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|j| {
                if hi[j] > lo[j] {
                    (r[j] - lo[j]) / (hi[j] - lo[j])
                } else {
                    0.0
                }
            })
            .collect()
    };
    let scaled: Vec<Vec<f64>> = rows.iter().map(|r| scale(r)).collect();
    let dist = |a: usize, b: usize| -> f64 {
        scaled[a]
            .iter()
            .zip(&scaled[b])
            .map(|(x, y)| (x - y).powi(2))
            .sum()
    };
    // Neighbour sets, allowing any member tied with the k-th distance.
    let n = rows.len();
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let mut same: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i && codes[j] == codes[i])
            .map(|j| (dist(i, j), j))
            .collect();
        same.sort_by(|a, b| a.0.total_cmp(&b.0));
        let kk = k.min(same.len());
        if kk == 0 {
            continue;
        }
        let cutoff = same[kk - 1].0;
        neighbours[i] = same.iter().filter(|p| p.0 <= cutoff).map(|p| p.1).collect();
    }
    let out_codes = balanced.codes().unwrap();
    let mut violations = 0;
    for (s, row) in balanced.rows().iter().enumerate().skip(n) {
        let c = out_codes[s];
        let ok = (0..n).filter(|&i| codes[i] == c).any(|i| {
            neighbours[i]
                .iter()
                .any(|&j| on_segment(row, &rows[i], &rows[j]))
        });
        if !ok {
            violations += 1;
        }
    }
    violations
}

fn on_segment(p: &[f64], a: &[f64], b: &[f64]) -> bool {
    // Solve for lambda on the largest-spread coordinate, then check all.
    let (j, span) = a
        .iter()
        .zip(b)
        .map(|(x, y)| (y - x).abs())
        .enumerate()
        .fold((0, 0.0), |acc, (j, s)| if s > acc.1 { (j, s) } else { acc });
    if span == 0.0 {
        return p.iter().zip(a).all(|(x, y)| (x - y).abs() < 1e-9);
    }
    let lambda = (p[j] - a[j]) / (b[j] - a[j]);
    if !(-1e-9..=1.0 + 1e-9).contains(&lambda) {
        return false;
    }
    p.iter()
        .zip(a.iter().zip(b))
        .all(|(x, (u, v))| (x - (u + lambda * (v - u))).abs() < 1e-9 * (1.0 + u.abs() + v.abs()))
}

pub fn random_class_dataset(rng: &mut RngStream, n: usize, d: usize, k: usize) -> Dataset {
    // Skewed class sizes, every class with at least 3 members.
    let weights: Vec<f64> = (0..k).map(|c| 1.0 / (c as f64 + 1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut codes = Vec::with_capacity(n);
    for i in 0..n {
        codes.push(if i < 3 * k {
            i % k
        } else {
            let u = rng.uniform() * total;
            let mut acc = 0.0;
            let mut pick = k - 1;
            for (c, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = c;
                    break;
                }
            }
            pick
        });
    }
    let rows = codes
        .iter()
        .map(|&c| {
            (0..d)
                .map(|j| c as f64 * (j as f64 + 1.0) + 10.0 * rng.uniform())
                .collect()
        })
        .collect();
    Dataset::new(
        rows,
        (0..d).map(|j| format!("x{j}")).collect(),
        Target::Classification {
            codes,
            n_categories: k,
        },
    )
    .unwrap()
}

// --------------------------------------------------------------------- DES

pub fn random_config(rng: &mut RngStream) -> ScenarioConfig {
    let mut c = if rng.uniform() < 0.5 {
        ScenarioConfig::baseline()
    } else {
        ScenarioConfig::guided()
    };
    c.horizon_days = 2 + rng.index(8) as u32;
    c.mco_capacity = 1 + rng.index(12);
    c.info_wait_probability = rng.uniform();
    c.arrivals = if rng.uniform() < 0.8 {
        ArrivalMode::Poisson
    } else {
        ArrivalMode::Deterministic
    };
    c.discipline = if rng.uniform() < 0.5 {
        Discipline::Fifo
    } else {
        Discipline::PriorityByPredictedDischarge
    };
    c.vendor_route = PerType::new(
        rng.uniform() < 0.8,
        rng.uniform() < 0.8,
        rng.uniform() < 0.5,
    );
    let n_h = 1 + rng.index(3);
    c.hospitals = (0..n_h)
        .map(|h| {
            let mut rate = || (rng.uniform() * 25.0).floor();
            let rates = PerType::new(rate(), rate(), rate());
            let delay = match rng.index(3) {
                0 => DelaySpec::shifted_lognormal(
                    -0.5,
                    1.0 + 6.0 * rng.uniform(),
                    5.0 * rng.uniform(),
                ),
                1 => DelaySpec::triangular(0.5, 1.0, 2.0),
                _ => DelaySpec::Fixed {
                    days: 3.0 * rng.uniform(),
                },
            };
            HospitalConfig {
                id: format!("H{}", h + 1),
                arrival_rates: rates,
                request_delay: delay,
                prediction_mae: 3.0 * rng.uniform(),
            }
        })
        .collect();
    c.seed = rng.next_seed();
    c
}

/// Clock monotonicity, conservation, per-case bounds and the queue audit
/// for one run. Returns a description of the first violation.
pub fn check_kernel_properties(config: &ScenarioConfig, seed: u64) -> Result<(), String> {
    let mut trace = AuditTrace::default();
    let rep = run_replication_observed(config, seed, &mut trace).map_err(|e| e.to_string())?;
    if trace.clock_violations > 0 {
        return Err(format!("{} clock violations", trace.clock_violations));
    }
    if trace.priority_violations > 0 {
        return Err(format!(
            "{} queue-order violations",
            trace.priority_violations
        ));
    }
    if trace.generated != rep.cases.len() || trace.created != trace.generated {
        return Err(format!(
            "generated {} created {} returned {}",
            trace.generated,
            trace.created,
            rep.cases.len()
        ));
    }
    let processing: usize = rep
        .cases
        .iter()
        .map(|c| {
            c.stage_completions
                .iter()
                .filter(|(s, _)| s.uses_processor())
                .count()
        })
        .sum();
    if trace.acquisitions != processing {
        return Err(format!(
            "{} acquisitions for {processing} processing stages",
            trace.acquisitions
        ));
    }
    for c in &rep.cases {
        if c.admission_time >= f64::from(config.horizon_days) || c.admission_time < 0.0 {
            return Err(format!("admission {} outside horizon", c.admission_time));
        }
        if c.request_time < c.admission_time {
            return Err("request before admission".into());
        }
        let min_work: f64 = c
            .stage_completions
            .iter()
            .map(|(s, _)| config.stages.days(*s).min)
            .sum();
        if c.creation_time < c.request_time + min_work - 1e-9 {
            return Err(format!(
                "creation {} earlier than request {} + minimum work {min_work}",
                c.creation_time, c.request_time
            ));
        }
        let mut last = c.request_time;
        for &(s, t) in &c.stage_completions {
            if t < last {
                return Err(format!(
                    "stage {} completes before its predecessor",
                    s.name()
                ));
            }
            last = t;
        }
        if last != c.creation_time && !c.stage_completions.is_empty() {
            return Err("creation is not the final stage completion".into());
        }
        let expected: Vec<Stage> = Stage::ALL
            .into_iter()
            .filter(|s| c.stage_completions.iter().any(|(x, _)| x == s))
            .collect();
        let got: Vec<Stage> = c.stage_completions.iter().map(|(s, _)| *s).collect();
        if expected != got {
            return Err("stages out of order".into());
        }
    }
    Ok(())
}

/// Doubling the capacity must not make any case later, with every draw
/// held fixed.
pub fn check_capacity_monotone(config: &ScenarioConfig, seed: u64) -> Result<(), String> {
    let a = run_replication(config, seed).map_err(|e| e.to_string())?;
    let mut doubled = config.clone();
    doubled.mco_capacity *= 2;
    let b = run_replication(&doubled, seed).map_err(|e| e.to_string())?;
    if a.cases.len() != b.cases.len() {
        return Err("case counts differ".into());
    }
    for (x, y) in a.cases.iter().zip(&b.cases) {
        if y.creation_time > x.creation_time + 1e-12 {
            return Err(format!(
                "capacity {} -> {}: case admitted {} created {} -> {}",
                config.mco_capacity,
                doubled.mco_capacity,
                x.admission_time,
                x.creation_time,
                y.creation_time
            ));
        }
    }
    Ok(())
}

pub struct CapacityEffect {
    pub cases: usize,
    /// Cases whose creation time rose when capacity doubled.
    pub later: usize,
    pub worst_delay: f64,
    pub mean_before: f64,
    pub mean_after: f64,
}

pub fn capacity_effect(config: &ScenarioConfig, seed: u64) -> Result<CapacityEffect, String> {
    let a = run_replication(config, seed).map_err(|e| e.to_string())?;
    let mut doubled = config.clone();
    doubled.mco_capacity *= 2;
    let b = run_replication(&doubled, seed).map_err(|e| e.to_string())?;
    if a.cases.len() != b.cases.len() {
        return Err("case counts differ".into());
    }
    let mut e = CapacityEffect {
        cases: a.cases.len(),
        later: 0,
        worst_delay: 0.0,
        mean_before: 0.0,
        mean_after: 0.0,
    };
    for (x, y) in a.cases.iter().zip(&b.cases) {
        e.mean_before += x.creation_time;
        e.mean_after += y.creation_time;
        let d = y.creation_time - x.creation_time;
        if d > 1e-12 {
            e.later += 1;
            e.worst_delay = e.worst_delay.max(d);
        }
    }
    if e.cases > 0 {
        e.mean_before /= e.cases as f64;
        e.mean_after /= e.cases as f64;
    }
    Ok(e)
}

/// Guided engine under FIFO with the baseline request delays reproduces the
/// baseline timelines exactly, whatever the prediction error.
pub fn check_fifo_equivalence(base: &ScenarioConfig, seed: u64) -> Result<(), String> {
    let mut base = base.clone();
    base.discipline = Discipline::Fifo;
    let mut guided = ScenarioConfig::guided();
    guided.hospitals = base.hospitals.clone();
    for h in &mut guided.hospitals {
        h.prediction_mae = 7.5 - h.prediction_mae;
    }
    guided.discipline = Discipline::Fifo;
    guided.horizon_days = base.horizon_days;
    guided.mco_capacity = base.mco_capacity;
    guided.info_wait_probability = base.info_wait_probability;
    guided.arrivals = base.arrivals;
    guided.vendor_route = base.vendor_route;
    guided.seed = base.seed;
    let a = run_replication(&base, seed).map_err(|e| e.to_string())?;
    let b = run_replication(&guided, seed).map_err(|e| e.to_string())?;
    if a.cases != b.cases {
        return Err("timelines differ".into());
    }
    if a.metrics != b.metrics {
        return Err("metrics differ".into());
    }
    Ok(())
}

// ------------------------------------------------------------------ stats

/// Two-sided Student-t tail probability P(|T| > t) by Simpson integration
/// of the density in the angle variable x = sqrt(df) tan(theta), where it
/// becomes proportional to cos(theta)^(df - 1).
pub fn welch_vectors() -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (
            vec![19.1, 21.4, 18.7, 22.0, 20.3],
            vec![23.5, 24.1, 22.8, 25.0, 23.9, 24.4],
        ),
        (
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            vec![2.5, 2.9, 3.1, 3.3],
        ),
        (
            vec![0.2, 0.4, 0.1, 0.5],
            vec![0.3, 0.35, 0.28, 0.5, 0.41, 0.33, 0.29],
        ),
        (
            vec![10.0, 12.0, 9.0, 11.0, 10.5, 9.5],
            vec![10.2, 11.8, 9.1, 11.1, 10.4, 9.7],
        ),
        (
            vec![5.0, 7.5, 6.1, 8.8, 4.9, 6.6, 7.7],
            vec![12.0, 3.0, 15.0, 1.0, 9.0],
        ),
    ]
}

pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    let f = |th: f64| th.cos().powf(df - 1.0);
    let simpson = |a: f64, b: f64| {
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let theta = (t.abs() / df.sqrt()).atan();
    simpson(theta, half_pi) / simpson(0.0, half_pi)
}

/// Welch t and Welch-Satterthwaite df, computed directly.
pub fn welch_by_hand(x: &[f64], y: &[f64]) -> (f64, f64) {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1.0);
        (n, m, var)
    };
    let (nx, mx, vx) = stats(x);
    let (ny, my, vy) = stats(y);
    let se2 = vx / nx + vy / ny;
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / ((vx / nx).powi(2) / (nx - 1.0) + (vy / ny).powi(2) / (ny - 1.0));
    (t, df)
}

/// E[max(0, shift + L)] for L lognormal with variate mean and sd, by
/// Simpson integration over the underlying standard normal.
pub fn clamped_lognormal_mean(shift: f64, mean: f64, sd: f64) -> f64 {
    let sigma2 = (1.0 + (sd / mean).powi(2)).ln();
    let mu = mean.ln() - sigma2 / 2.0;
    let sigma = sigma2.sqrt();
    let g = |z: f64| {
        let phi = (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        (shift + (mu + sigma * z).exp()).max(0.0) * phi
    };
    let (a, b, n) = (-12.0, 12.0, 400_000);
    let h = (b - a) / n as f64;
    let mut s = g(a) + g(b);
    for i in 1..n {
        s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

// ------------------------------------------------------ exhaustive sweeps

use refsim::learn::{auroc_ovr, classification_report, regression_report};

/// Every base-`k` digit pattern of length `n`.
pub fn patterns(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = k.pow(n as u32);
    (0..total).map(move |mut x| {
        let mut v = vec![0; n];
        for d in v.iter_mut() {
            *d = x % k;
            x /= k;
        }
        v
    })
}

/// (instances checked, mismatches) for AUROC over every binary labelling
/// of up to `max_n` points and every score vector on a three-level grid.
pub fn sweep_auroc(max_n: usize) -> (usize, usize) {
    let grid = [0.0, 0.5, 1.0];
    let (mut checked, mut bad) = (0, 0);
    for n in 1..=max_n {
        let score_sets: Vec<Vec<f64>> = patterns(n, 3)
            .map(|p| p.iter().map(|&i| grid[i]).collect())
            .collect();
        for labels in patterns(n, 2) {
            let truth: Vec<bool> = labels.iter().map(|&b| b == 1).collect();
            for scores in &score_sets {
                checked += 1;
                let want = brute_auroc(&truth, scores);
                let ok = match (auroc_ovr(&truth, scores), want) {
                    (Ok(a), Some(b)) => a == b || close(a, b, 1e-12),
                    (Err(refsim::Error::UndefinedMetric(_)), None) => true,
                    _ => false,
                };
                if !ok {
                    bad += 1;
                }
            }
        }
    }
    (checked, bad)
}

fn score_rows(k: usize) -> Vec<Vec<f64>> {
    match k {
        2 => vec![
            vec![0.5, 0.5],
            vec![0.9, 0.1],
            vec![0.2, 0.8],
            vec![0.7, 0.3],
        ],
        _ => vec![
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![0.6, 0.3, 0.1],
            vec![0.1, 0.6, 0.3],
            vec![0.25, 0.25, 0.5],
            vec![0.6, 0.1, 0.3],
        ],
    }
}

/// Every (truth, prediction) pair of label vectors: k = 2 up to `max_n2`
/// points, k = 3 up to `max_n3` points.
pub fn sweep_classification(max_n2: usize, max_n3: usize) -> (usize, usize) {
    let (mut checked, mut bad) = (0, 0);
    for (k, max_n) in [(2, max_n2), (3, max_n3)] {
        let rows = score_rows(k);
        for n in 1..=max_n {
            let preds: Vec<Vec<usize>> = patterns(n, k).collect();
            for truth in patterns(n, k) {
                for pred in &preds {
                    let scores: Vec<Vec<f64>> = (0..n)
                        .map(|i| rows[(3 * i + truth[i] + 2 * pred[i]) % rows.len()].clone())
                        .collect();
                    checked += 1;
                    let got = classification_report(&truth, pred, &scores).unwrap();
                    let want = brute_classification(&truth, pred, &scores, k);
                    let ok = close(got.accuracy, want.accuracy, 1e-12)
                        && (0..k).all(|c| {
                            opt_close(got.sensitivity[c], want.sensitivity[c], 1e-12)
                                && opt_close(got.specificity[c], want.specificity[c], 1e-12)
                                && opt_close(got.auroc[c], want.auroc[c], 1e-12)
                        });
                    if !ok {
                        bad += 1;
                    }
                }
            }
        }
    }
    (checked, bad)
}

/// Every three-class truth pattern of `n` points against a few predictions
/// derived from it.
pub fn sweep_classification_truths(n: usize) -> (usize, usize) {
    let rows = score_rows(3);
    let (mut checked, mut bad) = (0, 0);
    for truth in patterns(n, 3) {
        let preds = [
            truth.clone(),
            truth.iter().map(|t| (t + 1) % 3).collect(),
            vec![0; n],
            (0..n).map(|i| (truth[i] + i) % 3).collect::<Vec<_>>(),
        ];
        for pred in &preds {
            let scores: Vec<Vec<f64>> = (0..n)
                .map(|i| rows[(3 * i + truth[i] + 2 * pred[i]) % rows.len()].clone())
                .collect();
            checked += 1;
            let got = classification_report(&truth, pred, &scores).unwrap();
            let want = brute_classification(&truth, pred, &scores, 3);
            let ok = close(got.accuracy, want.accuracy, 1e-12)
                && (0..3).all(|c| {
                    opt_close(got.sensitivity[c], want.sensitivity[c], 1e-12)
                        && opt_close(got.specificity[c], want.specificity[c], 1e-12)
                        && opt_close(got.auroc[c], want.auroc[c], 1e-12)
                });
            if !ok {
                bad += 1;
            }
        }
    }
    (checked, bad)
}

/// Every truth/prediction pair on a small grid up to `max_n` points, plus
/// the exact-zero R² of the mean predictor.
pub fn sweep_regression(max_n: usize) -> (usize, usize) {
    let grid = [0.0, 1.0, 2.5, 7.0];
    let (mut checked, mut bad) = (0, 0);
    for n in 1..=max_n {
        let vecs: Vec<Vec<f64>> = patterns(n, grid.len())
            .map(|p| p.iter().map(|&i| grid[i]).collect())
            .collect();
        for truth in &vecs {
            for pred in &vecs {
                checked += 1;
                let got = regression_report(truth, pred).unwrap();
                let (mae, mse, r2) = brute_regression(truth, pred);
                if !(close(got.mae, mae, 1e-12)
                    && close(got.mse, mse, 1e-12)
                    && opt_close(got.r2, r2, 1e-12))
                {
                    bad += 1;
                }
            }
            let mean = truth.iter().sum::<f64>() / n as f64;
            let naive = vec![mean; n];
            let r2 = regression_report(truth, &naive).unwrap().r2;
            checked += 1;
            let constant = truth.iter().all(|&t| t == truth[0]);
            if !(if constant { r2.is_nan() } else { r2 == 0.0 }) {
                bad += 1;
            }
        }
    }
    (checked, bad)
}
