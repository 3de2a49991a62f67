use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::ReplicationMetrics;
use crate::stats::{summarize, MeanSd, Summary};
use crate::util::{csv_bytes, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Atrt,
    Rcdt,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Atrt => "ATRT",
            Metric::Rcdt => "RCDT",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ATRT" => Some(Metric::Atrt),
            "RCDT" => Some(Metric::Rcdt),
            _ => None,
        }
    }
}

/// Baseline and guided replication means of one metric for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub hospital: String,
    pub metric: Metric,
    pub baseline: Summary,
    pub guided: Summary,
    /// 100 * (baseline - guided) / baseline; `None` when the baseline mean
    /// is not positive.
    pub reduction_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<MetricComparison>,
}

impl ComparisonReport {
    pub fn get(&self, hospital: &str, metric: Metric) -> Option<&MetricComparison> {
        self.rows
            .iter()
            .find(|r| r.hospital == hospital && r.metric == metric)
    }

    pub fn replications(&self) -> usize {
        self.rows.first().map_or(0, |r| r.baseline.n)
    }
}

pub fn percent_reduction(baseline: f64, guided: f64) -> Option<f64> {
    (baseline > 0.0 && baseline.is_finite()).then(|| 100.0 * (baseline - guided) / baseline)
}

const NAN_SUMMARY: Summary = Summary {
    n: 0,
    mean: f64::NAN,
    sd: f64::NAN,
    ci_half_width: f64::NAN,
};

fn summary_of(values: Vec<f64>) -> Summary {
    let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
    summarize(&finite).unwrap_or(NAN_SUMMARY)
}

/// Replications in which a group had no cases are left out of its summary.
pub fn compare_scenarios(
    baseline: &[ReplicationMetrics],
    guided: &[ReplicationMetrics],
) -> Result<ComparisonReport> {
    if baseline.is_empty() || guided.is_empty() {
        return Err(Error::param("both scenarios need at least one replication"));
    }
    let names = |m: &[ReplicationMetrics]| -> Vec<String> {
        m[0].groups.iter().map(|g| g.hospital.clone()).collect()
    };
    let hospitals = names(baseline);
    if hospitals != names(guided)
        || baseline.iter().chain(guided).any(|m| {
            m.groups.len() != hospitals.len()
                || m.groups
                    .iter()
                    .zip(&hospitals)
                    .any(|(g, h)| &g.hospital != h)
        })
    {
        return Err(Error::param("scenarios cover different hospitals"));
    }
    let mut rows = Vec::new();
    for (i, h) in hospitals.iter().enumerate() {
        for metric in [Metric::Atrt, Metric::Rcdt] {
            let pick = |ms: &[ReplicationMetrics]| {
                summary_of(
                    ms.iter()
                        .map(|m| match metric {
                            Metric::Atrt => m.groups[i].mean_atrt,
                            Metric::Rcdt => m.groups[i].mean_rcdt,
                        })
                        .collect(),
                )
            };
            let (b, g) = (pick(baseline), pick(guided));
            rows.push(MetricComparison {
                hospital: h.clone(),
                metric,
                baseline: b,
                guided: g,
                reduction_pct: percent_reduction(b.mean, g.mean),
            });
        }
    }
    Ok(ComparisonReport { rows })
}

const CSV_HEADER: [&str; 11] = [
    "hospital",
    "metric",
    "baseline_n",
    "baseline_mean",
    "baseline_sd",
    "baseline_ci95",
    "guided_n",
    "guided_mean",
    "guided_sd",
    "guided_ci95",
    "reduction_pct",
];

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

fn parse_num(s: &str) -> Result<f64> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse()
        .map_err(|_| Error::Data(format!("`{s}` is not a number")))
}

pub fn render_csv(report: &ComparisonReport) -> Result<Vec<u8>> {
    csv_bytes(&CSV_HEADER, |w| {
        for r in &report.rows {
            let mut rec = vec![r.hospital.clone(), r.metric.label().to_string()];
            for s in [&r.baseline, &r.guided] {
                rec.push(s.n.to_string());
                rec.extend([s.mean, s.sd, s.ci_half_width].map(fmt_num));
            }
            rec.push(r.reduction_pct.map(fmt_num).unwrap_or_default());
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn parse_csv(bytes: &[u8]) -> Result<ComparisonReport> {
    let mut reader = csv::Reader::from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| Error::Data(e.to_string()))?
        .clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Schema("unexpected comparison header".into()));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
        let summary = |at: usize| -> Result<Summary> {
            Ok(Summary {
                n: rec[at]
                    .parse()
                    .map_err(|_| Error::Data(format!("bad count `{}`", &rec[at])))?,
                mean: parse_num(&rec[at + 1])?,
                sd: parse_num(&rec[at + 2])?,
                ci_half_width: parse_num(&rec[at + 3])?,
            })
        };
        rows.push(MetricComparison {
            hospital: rec[0].to_string(),
            metric: Metric::parse(&rec[1])
                .ok_or_else(|| Error::Data(format!("unknown metric `{}`", &rec[1])))?,
            baseline: summary(2)?,
            guided: summary(6)?,
            reduction_pct: if rec[10].is_empty() {
                None
            } else {
                Some(parse_num(&rec[10])?)
            },
        });
    }
    Ok(ComparisonReport { rows })
}

/// Fixed-width table with `mean±sd` cells and the 95% CI half-width.
pub fn render_table(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:<6} {:>24} {:>24} {:>10}",
        "group", "metric", "baseline (days)", "guided (days)", "reduction"
    );
    let cell = |s: &Summary| {
        format!(
            "{} [±{:.2}]",
            MeanSd {
                mean: s.mean,
                sd: s.sd
            },
            s.ci_half_width
        )
    };
    for r in &report.rows {
        let red = r
            .reduction_pct
            .map_or_else(|| "undefined".to_string(), |p| format!("{p:.1}%"));
        let _ = writeln!(
            out,
            "{:<8} {:<6} {:>24} {:>24} {:>10}",
            r.hospital,
            r.metric.label(),
            cell(&r.baseline),
            cell(&r.guided),
            red
        );
    }
    let _ = writeln!(out, "replications: {}", report.replications());
    out
}

pub fn emit_report(report: &ComparisonReport, format: ReportFormat, path: &Path) -> Result<()> {
    let bytes = match format {
        ReportFormat::Table => render_table(report).into_bytes(),
        ReportFormat::Csv => render_csv(report)?,
    };
    write_atomic(path, &bytes)
}
