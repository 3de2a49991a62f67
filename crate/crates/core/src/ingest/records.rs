use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{Dataset, Target, Task};
use crate::util::{csv_bytes, write_atomic};

/// The twelve categorical feature columns, in model order.
pub const FEATURE_COLUMNS: [&str; 12] = [
    "Age Group",
    "Gender",
    "Race",
    "Ethnicity",
    "Type of Admission",
    "CCS Diagnosis Code",
    "CCS Procedure Code",
    "APR DRG Code",
    "APR MDC Code",
    "APR Severity of Illness Code",
    "APR Risk of Mortality",
    "Payment Typology 1",
];
pub const LOS_COLUMN: &str = "Length of Stay";
pub const DISPOSITION_COLUMN: &str = "Patient Disposition";
/// Optional; defaults to `H1`.
pub const HOSPITAL_COLUMN: &str = "Hospital";
/// Optional; defaults to day 0.
pub const ADMISSION_COLUMN: &str = "Admission Day";

const TRUE_LOS_COLUMN: &str = "true_los";
const TRUE_REFERRAL_COLUMN: &str = "true_referral_type";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReferralType {
    #[serde(rename = "SNF")]
    Snf = 0,
    #[serde(rename = "HHS")]
    Hhs = 1,
    #[serde(rename = "Other")]
    Other = 2,
}

impl ReferralType {
    pub const ALL: [ReferralType; 3] = [ReferralType::Snf, ReferralType::Hhs, ReferralType::Other];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            ReferralType::Snf => "SNF",
            ReferralType::Hhs => "HHS",
            ReferralType::Other => "Other",
        }
    }

    /// Disposition text written for synthetic rows.
    pub fn disposition(self) -> &'static str {
        match self {
            ReferralType::Snf => "Skilled Nursing Home",
            ReferralType::Hhs => "Home w/ Home Health Services",
            ReferralType::Other => "Home or Self Care",
        }
    }
}

impl fmt::Display for ReferralType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ReferralType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "SNF" | "0" => Ok(ReferralType::Snf),
            "HHS" | "1" => Ok(ReferralType::Hhs),
            "Other" | "2" => Ok(ReferralType::Other),
            other => Err(Error::Data(format!("unknown referral type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub hospital_id: String,
    pub admission_day: f64,
    /// Labels for [`FEATURE_COLUMNS`], same order.
    pub features: Vec<String>,
    pub los_days: Option<f64>,
    pub referral: Option<ReferralType>,
}

/// Ordered substring rules mapping a raw discharge disposition to a
/// referral type; anything unmatched is `Other`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispositionMap {
    rules: Vec<(String, ReferralType)>,
}

impl Default for DispositionMap {
    fn default() -> Self {
        DispositionMap {
            rules: vec![
                ("Skilled Nursing".to_string(), ReferralType::Snf),
                ("Home w/ Home Health".to_string(), ReferralType::Hhs),
            ],
        }
    }
}

impl DispositionMap {
    pub fn new(rules: Vec<(String, ReferralType)>) -> Self {
        DispositionMap { rules }
    }

    /// Two columns, `pattern,referral_type`, with a header row.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut rules = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| csv_error(path, e))?;
            if row.len() != 2 {
                return Err(Error::Schema(format!(
                    "{}: disposition map rows need 2 fields",
                    path.display()
                )));
            }
            rules.push((row[0].to_string(), row[1].parse()?));
        }
        Ok(DispositionMap { rules })
    }

    pub fn classify(&self, disposition: &str) -> ReferralType {
        let lower = disposition.to_lowercase();
        self.rules
            .iter()
            .find(|(pat, _)| lower.contains(&pat.to_lowercase()))
            .map(|(_, t)| *t)
            .unwrap_or(ReferralType::Other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureEncoding {
    #[default]
    Ordinal,
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeatureCodes {
    name: String,
    labels: Vec<String>,
}

/// Per-feature label lists; a label's code is its position. The referral
/// map is fixed by [`ReferralType`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    features: Vec<FeatureCodes>,
    #[serde(default)]
    encoding: FeatureEncoding,
}

/// Numeric labels sort numerically, anything else lexically.
fn label_order(labels: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = labels.into_iter().collect();
    if v.iter().all(|l| l.parse::<f64>().is_ok()) {
        v.sort_by(|a, b| {
            a.parse::<f64>()
                .unwrap()
                .total_cmp(&b.parse::<f64>().unwrap())
        });
    }
    v
}

impl Codebook {
    pub fn build(records: &[PatientRecord]) -> Self {
        let features = FEATURE_COLUMNS
            .iter()
            .enumerate()
            .map(|(j, name)| FeatureCodes {
                name: name.to_string(),
                labels: label_order(records.iter().map(|r| r.features[j].clone()).collect()),
            })
            .collect();
        Codebook {
            features,
            encoding: FeatureEncoding::Ordinal,
        }
    }

    /// Codebook with the given label lists in order.
    pub fn from_labels(labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != FEATURE_COLUMNS.len() {
            return Err(Error::Schema(format!(
                "codebook needs {} features, got {}",
                FEATURE_COLUMNS.len(),
                labels.len()
            )));
        }
        for (name, l) in FEATURE_COLUMNS.iter().zip(&labels) {
            if l.iter().collect::<BTreeSet<_>>().len() != l.len() {
                return Err(Error::Schema(format!("duplicate label for `{name}`")));
            }
        }
        Ok(Codebook {
            features: FEATURE_COLUMNS
                .iter()
                .zip(labels)
                .map(|(n, labels)| FeatureCodes {
                    name: n.to_string(),
                    labels,
                })
                .collect(),
            encoding: FeatureEncoding::Ordinal,
        })
    }

    pub fn with_encoding(mut self, encoding: FeatureEncoding) -> Self {
        self.encoding = encoding;
        self
    }

    pub fn encoding(&self) -> FeatureEncoding {
        self.encoding
    }

    pub fn labels(&self, feature: usize) -> &[String] {
        &self.features[feature].labels
    }

    pub fn code(&self, feature: usize, label: &str) -> Result<usize> {
        let f = &self.features[feature];
        f.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Encoding {
                feature: f.name.clone(),
                label: label.to_string(),
            })
    }

    pub fn label(&self, feature: usize, code: usize) -> Option<&str> {
        self.features[feature].labels.get(code).map(String::as_str)
    }

    /// Column names of the encoded categorical block.
    pub fn encoded_names(&self) -> Vec<String> {
        match self.encoding {
            FeatureEncoding::Ordinal => self.features.iter().map(|f| f.name.clone()).collect(),
            FeatureEncoding::OneHot => self
                .features
                .iter()
                .flat_map(|f| f.labels.iter().map(move |l| format!("{}={l}", f.name)))
                .collect(),
        }
    }

    /// Merge in labels from `records` that this codebook has not seen.
    pub fn extend(&mut self, records: &[PatientRecord]) {
        for (j, f) in self.features.iter_mut().enumerate() {
            for r in records {
                if !f.labels.contains(&r.features[j]) {
                    f.labels.push(r.features[j].clone());
                }
            }
        }
    }
}

pub fn encode_features(record: &PatientRecord, codebook: &Codebook) -> Result<Vec<f64>> {
    if record.features.len() != FEATURE_COLUMNS.len() {
        return Err(Error::Data(format!(
            "record has {} features, expected {}",
            record.features.len(),
            FEATURE_COLUMNS.len()
        )));
    }
    let mut row = Vec::new();
    for (j, label) in record.features.iter().enumerate() {
        let code = codebook.code(j, label)?;
        match codebook.encoding {
            FeatureEncoding::Ordinal => row.push(code as f64),
            FeatureEncoding::OneHot => {
                row.extend((0..codebook.labels(j).len()).map(|c| if c == code { 1.0 } else { 0.0 }))
            }
        }
    }
    Ok(row)
}

/// Inverse of [`encode_features`] on the categorical block of `row`.
pub fn decode_features(row: &[f64], codebook: &Codebook) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(FEATURE_COLUMNS.len());
    let mut pos = 0;
    for (j, f) in codebook.features.iter().enumerate() {
        let code = match codebook.encoding {
            FeatureEncoding::Ordinal => {
                let v = *row.get(pos).ok_or_else(|| Error::param("row too short"))?;
                pos += 1;
                v.round() as usize
            }
            FeatureEncoding::OneHot => {
                let width = f.labels.len();
                let block = row
                    .get(pos..pos + width)
                    .ok_or_else(|| Error::param("row too short"))?;
                pos += width;
                crate::learn::forest::argmax(block)
            }
        };
        let label = codebook
            .label(j, code)
            .ok_or_else(|| Error::param(format!("code {code} out of range for `{}`", f.name)))?;
        out.push(label.to_string());
    }
    Ok(out)
}

/// Regression datasets use the categorical block with LOS as target;
/// classification datasets add LOS as a final feature and target the
/// referral type.
pub fn encode(records: &[PatientRecord], codebook: &Codebook, task: Task) -> Result<Dataset> {
    let mut rows = Vec::with_capacity(records.len());
    let mut values = Vec::new();
    let mut codes = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let mut row = encode_features(r, codebook)?;
        let los = r
            .los_days
            .ok_or_else(|| Error::Data(format!("record {i} has no length of stay")))?;
        match task {
            Task::Regression => values.push(los),
            Task::Classification => {
                row.push(los);
                let t = r
                    .referral
                    .ok_or_else(|| Error::Data(format!("record {i} has no referral type")))?;
                codes.push(t.code());
            }
        }
        rows.push(row);
    }
    let mut names = codebook.encoded_names();
    let target = match task {
        Task::Regression => Target::Regression(values),
        Task::Classification => {
            names.push(LOS_COLUMN.to_string());
            Target::Classification {
                codes,
                n_categories: ReferralType::ALL.len(),
            }
        }
    };
    if rows.is_empty() {
        return Err(Error::Data("no records to encode".into()));
    }
    Dataset::new(rows, names, target)
}

pub enum CodebookMode<'a> {
    /// Learn labels from the file.
    Build,
    /// Reject rows whose labels the codebook does not know.
    Strict(&'a Codebook),
}

#[derive(Debug, Clone)]
pub struct LoadedTable {
    pub records: Vec<PatientRecord>,
    pub codebook: Codebook,
    pub dropped: usize,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

pub fn load_discharge_table(
    path: &Path,
    mode: CodebookMode<'_>,
    dispositions: &DispositionMap,
) -> Result<LoadedTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Schema(format!("{}: no header row", path.display())));
    }
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let require = |name: &str| {
        find(name)
            .ok_or_else(|| Error::Schema(format!("{}: missing column `{name}`", path.display())))
    };
    let feature_idx = FEATURE_COLUMNS
        .iter()
        .map(|c| require(c))
        .collect::<Result<Vec<_>>>()?;
    let los_idx = require(LOS_COLUMN)?;
    let disp_idx = require(DISPOSITION_COLUMN)?;
    let hosp_idx = find(HOSPITAL_COLUMN);
    let adm_idx = find(ADMISSION_COLUMN);

    let mut records = Vec::new();
    let mut dropped = 0;
    for row in rdr.records() {
        let Ok(row) = row else {
            dropped += 1;
            continue;
        };
        let field = |i: usize| row.get(i).map(str::trim).filter(|s| !s.is_empty());
        let parsed = (|| {
            let features = feature_idx
                .iter()
                .map(|&i| field(i).map(str::to_string))
                .collect::<Option<Vec<_>>>()?;
            let los: u32 = field(los_idx)?.parse().ok()?;
            if los == 0 {
                return None;
            }
            let disposition = field(disp_idx)?;
            let hospital = match hosp_idx {
                Some(i) => field(i)?.to_string(),
                None => "H1".to_string(),
            };
            let admission_day = match adm_idx {
                Some(i) => field(i)?.parse::<f64>().ok().filter(|d| d.is_finite())?,
                None => 0.0,
            };
            Some(PatientRecord {
                hospital_id: hospital,
                admission_day,
                features,
                los_days: Some(f64::from(los)),
                referral: Some(dispositions.classify(disposition)),
            })
        })();
        match parsed {
            Some(r) => records.push(r),
            None => dropped += 1,
        }
    }
    if records.is_empty() {
        return Err(Error::Data(format!(
            "{}: no valid rows ({dropped} dropped)",
            path.display()
        )));
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} invalid row(s)", path.display());
    }
    let codebook = match mode {
        CodebookMode::Build => Codebook::build(&records),
        CodebookMode::Strict(cb) => {
            for r in &records {
                encode_features(r, cb)?;
            }
            cb.clone()
        }
    };
    Ok(LoadedTable {
        records,
        codebook,
        dropped,
    })
}

/// Write records in the loader's schema. With `truth`, ground-truth columns
/// prefixed `true_` are appended.
pub fn write_discharge_table(records: &[PatientRecord], path: &Path, truth: bool) -> Result<()> {
    let mut header = vec![HOSPITAL_COLUMN, ADMISSION_COLUMN];
    header.extend(FEATURE_COLUMNS);
    header.extend([LOS_COLUMN, DISPOSITION_COLUMN]);
    if truth {
        header.extend([TRUE_LOS_COLUMN, TRUE_REFERRAL_COLUMN]);
    }
    let bytes = csv_bytes(&header, |w| {
        for r in records {
            let los = r.los_days.map(|l| format!("{l}")).unwrap_or_default();
            let referral = r.referral.map(|t| t.label()).unwrap_or_default();
            let mut fields = vec![r.hospital_id.clone(), format!("{:.6}", r.admission_day)];
            fields.extend(r.features.iter().cloned());
            fields.push(los.clone());
            fields.push(
                r.referral
                    .map(|t| t.disposition())
                    .unwrap_or_default()
                    .to_string(),
            );
            if truth {
                fields.push(los);
                fields.push(referral.to_string());
            }
            w.write_record(&fields)?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}
