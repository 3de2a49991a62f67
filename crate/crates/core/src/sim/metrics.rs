use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::config::ScenarioConfig;
use crate::sim::engine::{compute_case_metrics, ReferralCase};
use crate::stats::quantile_sorted;
use crate::util::{csv_bytes, write_atomic};

/// Label of the all-hospitals group.
pub const OVERALL: &str = "ALL";

/// ATRT and RCDT summaries over one group of cases, in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub hospital: String,
    pub n_cases: usize,
    pub mean_atrt: f64,
    pub p50_atrt: f64,
    pub p90_atrt: f64,
    pub mean_rcdt: f64,
    pub p50_rcdt: f64,
    pub p90_rcdt: f64,
    pub p_rcdt_zero: f64,
}

impl GroupMetrics {
    /// NaN statistics when `atrt` is empty.
    pub fn from_values(hospital: &str, mut atrt: Vec<f64>, mut rcdt: Vec<f64>) -> Self {
        let n = atrt.len();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let zero = rcdt.iter().filter(|&&r| r == 0.0).count();
        atrt.sort_by(f64::total_cmp);
        rcdt.sort_by(f64::total_cmp);
        GroupMetrics {
            hospital: hospital.to_string(),
            n_cases: n,
            mean_atrt: mean(&atrt),
            p50_atrt: quantile_sorted(&atrt, 0.5),
            p90_atrt: quantile_sorted(&atrt, 0.9),
            mean_rcdt: mean(&rcdt),
            p50_rcdt: quantile_sorted(&rcdt, 0.5),
            p90_rcdt: quantile_sorted(&rcdt, 0.9),
            p_rcdt_zero: if n == 0 {
                f64::NAN
            } else {
                zero as f64 / n as f64
            },
        }
    }
}

/// Per-hospital groups in config order, then [`OVERALL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub replication: usize,
    pub groups: Vec<GroupMetrics>,
}

impl ReplicationMetrics {
    /// Cases admitted before the burn-in day are ignored.
    pub fn from_cases(
        replication: usize,
        config: &ScenarioConfig,
        cases: &[ReferralCase],
    ) -> Result<Self> {
        let burn_in = f64::from(config.burn_in_days);
        let k = config.hospitals.len();
        let mut atrt = vec![Vec::new(); k + 1];
        let mut rcdt = vec![Vec::new(); k + 1];
        for c in cases.iter().filter(|c| c.admission_time >= burn_in) {
            let m = compute_case_metrics(c)?;
            let h = config
                .hospitals
                .iter()
                .position(|h| h.id == c.hospital_id)
                .unwrap_or(k);
            for g in [h, k] {
                atrt[g].push(m.atrt);
                rcdt[g].push(m.rcdt);
            }
        }
        let names = config
            .hospitals
            .iter()
            .map(|h| h.id.as_str())
            .chain([OVERALL]);
        let groups = names
            .zip(atrt.into_iter().zip(rcdt))
            .map(|(name, (a, r))| GroupMetrics::from_values(name, a, r))
            .collect();
        Ok(ReplicationMetrics {
            replication,
            groups,
        })
    }

    pub fn group(&self, hospital: &str) -> Option<&GroupMetrics> {
        self.groups.iter().find(|g| g.hospital == hospital)
    }

    pub fn overall(&self) -> &GroupMetrics {
        self.groups
            .last()
            .expect("metrics always hold the overall group")
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

/// Columns `replication,hospital,n_cases,mean_atrt,mean_rcdt,p_rcdt_zero`.
pub fn write_metrics_csv(metrics: &[ReplicationMetrics], path: &Path) -> Result<()> {
    let header = [
        "replication",
        "hospital",
        "n_cases",
        "mean_atrt",
        "mean_rcdt",
        "p_rcdt_zero",
    ];
    let bytes = csv_bytes(&header, |w| {
        for m in metrics {
            for g in &m.groups {
                w.write_record([
                    m.replication.to_string(),
                    g.hospital.clone(),
                    g.n_cases.to_string(),
                    num(g.mean_atrt),
                    num(g.mean_rcdt),
                    num(g.p_rcdt_zero),
                ])?;
            }
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

/// Columns `replication,hospital,referral_type,admission,request,creation,
/// discharge,atrt,rcdt`.
pub fn write_case_log(runs: &[(usize, &[ReferralCase])], path: &Path) -> Result<()> {
    let header = [
        "replication",
        "hospital",
        "referral_type",
        "admission",
        "request",
        "creation",
        "discharge",
        "atrt",
        "rcdt",
    ];
    let mut rows = Vec::new();
    for (rep, cases) in runs {
        for c in cases.iter() {
            let m = compute_case_metrics(c)?;
            rows.push([
                rep.to_string(),
                c.hospital_id.clone(),
                c.referral_type.label().to_string(),
                c.admission_time.to_string(),
                c.request_time.to_string(),
                c.creation_time.to_string(),
                c.discharge_time.to_string(),
                m.atrt.to_string(),
                m.rcdt.to_string(),
            ]);
        }
    }
    let bytes = csv_bytes(&header, |w| {
        for r in &rows {
            w.write_record(r)?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}
