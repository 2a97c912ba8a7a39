use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::{make_synthetic, SyntheticKind, SYNTHETIC_DATA_SEED};
use super::Dataset;
use crate::error::{FairError, Result};
use crate::model::Matrix;

pub const PRESET_NAMES: [&str; 5] = ["synthetic", "synthetic-unequal", "adult", "bank", "census"];

/// Named experiment configuration: where the data comes from plus the
/// default cluster count and trade-off weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub source: DataSource,
    pub n_clusters: usize,
    pub lambda: f64,
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    /// Standardize and L2-normalize features before clustering.
    #[serde(default = "default_true")]
    pub preprocess: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DataSource {
    Synthetic {
        kind: String,
        #[serde(default = "default_data_seed")]
        data_seed: u64,
    },
    Csv(CsvSource),
}

/// Maps raw values of the sensitive column to one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    /// Relative paths are resolved against the data directory.
    pub file: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Column names for files without a header row.
    #[serde(default)]
    pub columns: Option<Vec<String>>,
    pub features: Vec<String>,
    pub sensitive: String,
    pub groups: Vec<GroupSpec>,
    /// Rows whose sensitive value is listed here are skipped.
    #[serde(default)]
    pub drop_values: Vec<String>,
    pub targets: Vec<f64>,
}

fn default_data_seed() -> u64 {
    SYNTHETIC_DATA_SEED
}

fn default_delimiter() -> char {
    ','
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn group(name: &str, values: &[&str]) -> GroupSpec {
    GroupSpec {
        name: name.into(),
        values: strings(values),
    }
}

const ADULT_COLUMNS: [&str; 15] = [
    "age",
    "workclass",
    "fnlwgt",
    "education",
    "education-num",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
    "native-country",
    "income",
];

const CENSUS_FEATURES: [&str; 25] = [
    "dAge", "dAncstry1", "dAncstry2", "iAvail", "iCitizen", "iClass", "dDepart", "iDisabl1",
    "iDisabl2", "iEnglish", "iFeb55", "iFertil", "dHispanic", "dHour89", "dHours", "iImmigr",
    "dIncome1", "dIncome2", "dIncome3", "dIncome4", "dIncome5", "dIncome6", "dIncome7",
    "dIncome8", "dIndustry",
];

fn preset(name: &str) -> Option<Profile> {
    let grid = |center: f64| vec![0.0, center / 10.0, center, center * 10.0];
    let profile = match name {
        "synthetic" | "synthetic-unequal" => Profile {
            name: name.into(),
            source: DataSource::Synthetic {
                kind: if name == "synthetic" { "equal" } else { "unequal" }.into(),
                data_seed: SYNTHETIC_DATA_SEED,
            },
            n_clusters: 2,
            lambda: 10.0,
            lambda_grid: vec![0.0, 1.0, 5.0, 10.0, 50.0, 100.0],
            preprocess: false,
        },
        "adult" => Profile {
            name: name.into(),
            source: DataSource::Csv(CsvSource {
                file: "adult.data".into(),
                delimiter: ',',
                columns: Some(strings(&ADULT_COLUMNS)),
                features: strings(&["age", "fnlwgt", "education-num", "capital-gain", "hours-per-week"]),
                sensitive: "sex".into(),
                groups: vec![group("female", &["Female"]), group("male", &["Male"])],
                drop_values: vec![],
                targets: vec![0.33, 0.67],
            }),
            n_clusters: 10,
            lambda: 9000.0,
            lambda_grid: grid(9000.0),
            preprocess: true,
        },
        "bank" => Profile {
            name: name.into(),
            source: DataSource::Csv(CsvSource {
                file: "bank-additional-full.csv".into(),
                delimiter: ';',
                columns: None,
                features: strings(&[
                    "age",
                    "duration",
                    "euribor3m",
                    "nr.employed",
                    "cons.price.idx",
                    "campaign",
                ]),
                sensitive: "marital".into(),
                groups: vec![
                    group("single", &["single"]),
                    group("married", &["married"]),
                    group("divorced", &["divorced"]),
                ],
                drop_values: strings(&["unknown"]),
                targets: vec![0.28, 0.61, 0.11],
            }),
            n_clusters: 10,
            lambda: 9000.0,
            lambda_grid: grid(9000.0),
            preprocess: true,
        },
        "census" => Profile {
            name: name.into(),
            source: DataSource::Csv(CsvSource {
                file: "USCensus1990.data.txt".into(),
                delimiter: ',',
                columns: None,
                features: strings(&CENSUS_FEATURES),
                sensitive: "iSex".into(),
                groups: vec![group("female", &["1"]), group("male", &["0"])],
                drop_values: vec![],
                targets: vec![0.48, 0.52],
            }),
            n_clusters: 20,
            lambda: 500_000.0,
            lambda_grid: grid(500_000.0),
            preprocess: true,
        },
        _ => return None,
    };
    Some(profile)
}

/// Looks up a preset by name, or reads a JSON profile from a path.
pub fn resolve_profile(name_or_path: &str) -> Result<Profile> {
    if let Some(p) = preset(name_or_path) {
        return Ok(p);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(FairError::UnknownProfile(name_or_path.into()));
    }
    let file = File::open(path).map_err(|source| FairError::Io {
        path: path.into(),
        source,
    })?;
    serde_json::from_reader(file).map_err(|e| FairError::Report {
        path: path.into(),
        detail: e.to_string(),
    })
}

/// Materializes a profile's raw (unpreprocessed) dataset.
pub fn load_profile(
    profile: &Profile,
    data_dir: &Path,
    max_rows: Option<usize>,
) -> Result<Dataset> {
    let data = match &profile.source {
        DataSource::Synthetic { kind, data_seed } => {
            let mut d = make_synthetic(kind.parse::<SyntheticKind>()?, *data_seed);
            d.name = profile.name.clone();
            d
        }
        DataSource::Csv(src) => {
            let path = if src.file.is_absolute() {
                src.file.clone()
            } else {
                data_dir.join(&src.file)
            };
            let mut d = load_csv(&path, src, max_rows)?;
            d.name = profile.name.clone();
            d
        }
    };
    Ok(match max_rows {
        Some(n) => data.truncate(n),
        None => data,
    })
}

/// Reads numeric feature columns and the sensitive column from a delimited
/// file. Cells are trimmed; empty lines are skipped.
pub fn load_csv(path: &Path, src: &CsvSource, max_rows: Option<usize>) -> Result<Dataset> {
    let csv_err = |source| FairError::Csv {
        path: path.into(),
        source,
    };
    let delimiter = u8::try_from(src.delimiter).map_err(|_| {
        FairError::InvalidArgument(format!("delimiter `{}` is not ASCII", src.delimiter))
    })?;
    let file = File::open(path).map_err(|source| FairError::Io {
        path: path.into(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(src.columns.is_none())
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = match &src.columns {
        Some(cols) => cols.clone(),
        None => reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect(),
    };
    let position = |column: &str| {
        header
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| FairError::MissingColumn {
                path: path.into(),
                column: column.into(),
            })
    };
    let feature_idx = src
        .features
        .iter()
        .map(|c| position(c))
        .collect::<Result<Vec<_>>>()?;
    let sensitive_idx = position(&src.sensitive)?;
    let mut group_lookup = HashMap::new();
    for (g, spec) in src.groups.iter().enumerate() {
        for v in &spec.values {
            group_lookup.insert(v.as_str(), g);
        }
    }

    let mut data = Vec::new();
    let mut groups = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 0;
    while reader.read_record(&mut record).map_err(csv_err)? {
        row += 1;
        if max_rows.is_some_and(|n| groups.len() >= n) {
            break;
        }
        let value = record.get(sensitive_idx).unwrap_or("");
        if src.drop_values.iter().any(|d| d == value) {
            continue;
        }
        let g = *group_lookup
            .get(value)
            .ok_or_else(|| FairError::UnknownGroup {
                value: value.into(),
                row,
            })?;
        for (&idx, name) in feature_idx.iter().zip(&src.features) {
            let cell = record.get(idx).unwrap_or("");
            let x: f64 = cell.parse().map_err(|_| FairError::NonNumeric {
                column: name.clone(),
                row,
                value: cell.into(),
            })?;
            data.push(x);
        }
        groups.push(g);
    }
    let n = groups.len();
    let features = Matrix::new(n, src.features.len(), data)?;
    let names = src.groups.iter().map(|g| g.name.clone()).collect();
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(stem, features, groups, names, src.targets.clone())
}

/// Writes features and group indices as CSV (`f0,...,group`).
pub fn export_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|source| FairError::Csv {
        path: path.into(),
        source,
    })?;
    let wrap = |source| FairError::Csv {
        path: path.into(),
        source,
    };
    let mut header: Vec<String> = (0..dataset.n_features()).map(|j| format!("f{j}")).collect();
    header.push("group".into());
    writer.write_record(&header).map_err(wrap)?;
    for (row, g) in dataset.features().rows_iter().zip(dataset.group_of()) {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        cells.push(g.to_string());
        writer.write_record(&cells).map_err(wrap)?;
    }
    writer.flush().map_err(|source| FairError::Io {
        path: path.into(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn source() -> CsvSource {
        CsvSource {
            file: "t.csv".into(),
            delimiter: ',',
            columns: None,
            features: strings(&["a", "c"]),
            sensitive: "sex".into(),
            groups: vec![group("f", &["F"]), group("m", &["M"])],
            drop_values: strings(&["?"]),
            targets: vec![0.5, 0.5],
        }
    }

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_row_fixture() {
        let f = write("a,b,c,sex\n1,x,2.5,F\n3, y ,4, M\n-1,z,0,F\n");
        let d = load_csv(f.path(), &source(), None).unwrap();
        assert_eq!(d.features().as_slice(), &[1.0, 2.5, 3.0, 4.0, -1.0, 0.0]);
        assert_eq!(d.group_of(), &[0, 1, 0]);
        assert_eq!(d.group_counts(), vec![2, 1]);
    }

    #[test]
    fn drop_rules_and_row_cap() {
        let f = write("a,c,sex\n1,2,?\n3,4,M\n5,6,F\n7,8,F\n");
        let d = load_csv(f.path(), &source(), None).unwrap();
        assert_eq!(d.n_points(), 3);
        let d = load_csv(f.path(), &source(), Some(2)).unwrap();
        assert_eq!(d.group_of(), &[1, 0]);
    }

    #[test]
    fn headerless_with_semicolons() {
        let f = write("1;2;F\n3;4;M\n\n");
        let mut src = source();
        src.delimiter = ';';
        src.columns = Some(strings(&["a", "c", "sex"]));
        let d = load_csv(f.path(), &src, None).unwrap();
        assert_eq!(d.features().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn named_errors() {
        let f = write("a,sex\n1,F\n");
        match load_csv(f.path(), &source(), None) {
            Err(FairError::MissingColumn { column, .. }) => assert_eq!(column, "c"),
            other => panic!("unexpected {other:?}"),
        }
        let f = write("a,c,sex\n1,2,F\n1,oops,M\n");
        match load_csv(f.path(), &source(), None) {
            Err(FairError::NonNumeric { column, row, value }) => {
                assert_eq!((column.as_str(), row, value.as_str()), ("c", 2, "oops"))
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = write("a,c,sex\n1,2,X\n");
        assert!(matches!(
            load_csv(f.path(), &source(), None),
            Err(FairError::UnknownGroup { row: 1, .. })
        ));
    }

    #[test]
    fn presets_resolve_and_round_trip_through_json() {
        for name in PRESET_NAMES {
            let p = resolve_profile(name).unwrap();
            let json = serde_json::to_string(&p).unwrap();
            let mut f = tempfile::NamedTempFile::new().unwrap();
            f.write_all(json.as_bytes()).unwrap();
            let back = resolve_profile(f.path().to_str().unwrap()).unwrap();
            assert_eq!(back, p);
        }
        assert!(matches!(
            resolve_profile("no-such-profile"),
            Err(FairError::UnknownProfile(_))
        ));
        let adult = resolve_profile("adult").unwrap();
        match adult.source {
            DataSource::Csv(src) => assert_eq!(src.features.len(), 5),
            _ => unreachable!(),
        }
        match resolve_profile("census").unwrap().source {
            DataSource::Csv(src) => assert_eq!(src.features.len(), 25),
            _ => unreachable!(),
        }
    }

    #[test]
    fn export_writes_header_and_rows() {
        let f = write("a,c,sex\n1,2.5,F\n3,4,M\n");
        let d = load_csv(f.path(), &source(), None).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        export_csv(&d, out.path()).unwrap();
        let text = std::fs::read_to_string(out.path()).unwrap();
        assert_eq!(text, "f0,f1,group\n1,2.5,0\n3,4,1\n");
    }
}
