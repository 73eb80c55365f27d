//! CSV formats.
//!
//! Trajectories are written in long form (`tick,value,count`, one row per
//! tick and value in `0..=k`), metrics as one row per tick. Forecast input is
//! two files: predictions (`day,source,prediction`) and actuals
//! (`day,actual`). Row numbers in errors count the header as row 1.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use votesim_core::forecast::ForecastDataset;
use votesim_core::metrics::{histogram, trajectory_metrics};
use votesim_core::Trajectory;

pub const TRAJECTORY_HEADER: &str = "tick,value,count";
pub const METRICS_HEADER: &str = "tick,winning_count,change_rate,friend_agreement,random_agreement";
pub const PREDICTIONS_HEADER: [&str; 3] = ["day", "source", "prediction"];
pub const ACTUALS_HEADER: [&str; 2] = ["day", "actual"];

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for (tick, snapshot) in traj.snapshots.iter().enumerate() {
        let hist = histogram(snapshot, traj.config.k).map_err(io::Error::other)?;
        for (value, count) in hist.iter().enumerate() {
            writeln!(out, "{tick},{value},{count}")?;
        }
    }
    out.flush()
}

pub fn write_metrics_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    let metrics = trajectory_metrics(traj).map_err(io::Error::other)?;
    for (tick, m) in metrics.iter().enumerate() {
        writeln!(out, "{tick},{},{},{},{}", m.winning_count, m.change_rate, m.friend_agreement, m.random_agreement)?;
    }
    out.flush()
}

pub fn trajectory_csv_bytes(traj: &Trajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &mut buf).expect("writing to memory");
    buf
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: io::Error,
    },
    #[error("{file}: expected header `{expected}`, found `{found}`")]
    Header { file: String, expected: String, found: String },
    #[error("{file} row {row}: {message}")]
    Malformed { file: String, row: u64, message: String },
    #[error("predictions row {row}: duplicate prediction for source `{source_name}` on day `{day}`")]
    DuplicatePrediction { row: u64, source_name: String, day: String },
    #[error("actuals row {row}: duplicate actual for day `{day}`")]
    DuplicateActual { row: u64, day: String },
    #[error("predictions row {row}: day `{day}` has no actual value")]
    MissingActual { row: u64, day: String },
    #[error(transparent)]
    Invalid(#[from] votesim_core::Error),
}

impl DatasetError {
    pub fn is_io(&self) -> bool {
        matches!(self, DatasetError::Io { .. })
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, file: &str, expected: &[&str]) -> Result<(), DatasetError> {
    let found =
        rdr.headers().map_err(|e| DatasetError::Malformed { file: file.into(), row: 1, message: e.to_string() })?;
    if found.iter().ne(expected.iter().copied()) {
        return Err(DatasetError::Header {
            file: file.into(),
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

fn records<'a, R: Read>(
    rdr: &'a mut csv::Reader<R>,
    file: &str,
    width: usize,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord), DatasetError>> + 'a {
    let file = file.to_string();
    rdr.records().enumerate().map(move |(i, rec)| {
        let row = i as u64 + 2;
        let rec = rec.map_err(|e| DatasetError::Malformed { file: file.clone(), row, message: e.to_string() })?;
        if rec.len() != width {
            return Err(DatasetError::Malformed {
                file: file.clone(),
                row,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        Ok((row, rec))
    })
}

fn parse_int(file: &str, row: u64, field: &str, text: &str) -> Result<i32, DatasetError> {
    text.parse().map_err(|_| DatasetError::Malformed {
        file: file.into(),
        row,
        message: format!("`{field}` is not an integer: `{text}`"),
    })
}

/// Reads a dataset from its two CSV streams. Days follow the actuals file,
/// sources their first appearance in the predictions file.
pub fn parse_dataset<P: Read, A: Read>(predictions: P, actuals: A) -> Result<ForecastDataset, DatasetError> {
    let mut days = Vec::new();
    let mut actual_values = Vec::new();
    let mut day_index: HashMap<String, usize> = HashMap::new();
    let mut rdr = reader(actuals);
    check_header(&mut rdr, "actuals", &ACTUALS_HEADER)?;
    for rec in records(&mut rdr, "actuals", 2) {
        let (row, rec) = rec?;
        let day = rec[0].to_string();
        if day.is_empty() {
            return Err(DatasetError::Malformed { file: "actuals".into(), row, message: "empty day".into() });
        }
        let actual = parse_int("actuals", row, "actual", &rec[1])?;
        if day_index.insert(day.clone(), days.len()).is_some() {
            return Err(DatasetError::DuplicateActual { row, day });
        }
        days.push(day);
        actual_values.push(actual);
    }

    let mut sources: Vec<String> = Vec::new();
    let mut source_index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<Option<i32>>> = Vec::new();
    let mut rdr = reader(predictions);
    check_header(&mut rdr, "predictions", &PREDICTIONS_HEADER)?;
    for rec in records(&mut rdr, "predictions", 3) {
        let (row, rec) = rec?;
        let day = rec[0].to_string();
        let source = rec[1].to_string();
        if source.is_empty() {
            return Err(DatasetError::Malformed { file: "predictions".into(), row, message: "empty source".into() });
        }
        let prediction = parse_int("predictions", row, "prediction", &rec[2])?;
        let Some(&d) = day_index.get(&day) else {
            return Err(DatasetError::MissingActual { row, day });
        };
        let s = *source_index.entry(source.clone()).or_insert_with(|| {
            sources.push(source.clone());
            rows.push(vec![None; days.len()]);
            sources.len() - 1
        });
        if rows[s][d].replace(prediction).is_some() {
            return Err(DatasetError::DuplicatePrediction { row, source_name: source, day });
        }
    }
    Ok(ForecastDataset::new(days, sources, rows, actual_values)?)
}

pub fn load_dataset(predictions: &Path, actuals: &Path) -> Result<ForecastDataset, DatasetError> {
    let open = |p: &Path| File::open(p).map_err(|source| DatasetError::Io { file: p.display().to_string(), source });
    parse_dataset(open(predictions)?, open(actuals)?)
}

/// Writes a dataset in the two-file layout; missing predictions are omitted.
pub fn write_dataset<P: Write, A: Write>(data: &ForecastDataset, mut predictions: P, mut actuals: A) -> io::Result<()> {
    writeln!(actuals, "{}", ACTUALS_HEADER.join(","))?;
    for (day, actual) in data.days().iter().zip(data.actuals()) {
        writeln!(actuals, "{day},{actual}")?;
    }
    writeln!(predictions, "{}", PREDICTIONS_HEADER.join(","))?;
    for (d, day) in data.days().iter().enumerate() {
        for (s, source) in data.sources().iter().enumerate() {
            if let Some(p) = data.source_predictions(s)[d] {
                writeln!(predictions, "{day},{source},{p}")?;
            }
        }
    }
    predictions.flush()?;
    actuals.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ACTUALS: &str = "day,actual\n2016-10-01,10\n2016-10-02,12\n2016-10-03,9\n";

    #[test]
    fn complete_fixture_loads() {
        let preds = "day,source,prediction\n\
                     2016-10-01,a,10\n2016-10-01,b,11\n\
                     2016-10-02,a,12\n2016-10-02,b,13\n\
                     2016-10-03,a,8\n2016-10-03,b,-1\n";
        let d = parse_dataset(preds.as_bytes(), ACTUALS.as_bytes()).unwrap();
        assert_eq!(d.sources(), ["a", "b"]);
        assert_eq!(d.days().len(), 3);
        let count: usize = (0..2).map(|s| d.source_predictions(s).iter().flatten().count()).sum();
        assert_eq!(count, 6);
        assert_eq!(d.source_predictions(1), &[Some(11), Some(13), Some(-1)]);
    }

    #[test]
    fn missing_cells_stay_absent() {
        let preds = "day,source,prediction\n2016-10-01,a,10\n2016-10-01,b,11\n2016-10-02,a,12\n2016-10-03,a,8\n2016-10-03,b,9\n";
        let d = parse_dataset(preds.as_bytes(), ACTUALS.as_bytes()).unwrap();
        assert_eq!(d.source_predictions(1)[1], None);
        assert_eq!(d.day_predictions(1), vec![12]);
    }

    #[test]
    fn day_without_actual_is_named() {
        let preds = "day,source,prediction\n2016-10-01,a,10\n2016-10-04,a,1\n";
        let err = parse_dataset(preds.as_bytes(), ACTUALS.as_bytes()).unwrap_err();
        assert!(matches!(&err, DatasetError::MissingActual { row: 3, day } if day == "2016-10-04"), "{err}");
        assert!(err.to_string().contains("2016-10-04"));
    }

    #[test]
    fn duplicates_and_garbage_report_rows() {
        let preds = "day,source,prediction\n2016-10-01,a,10\n2016-10-01,a,11\n";
        let err = parse_dataset(preds.as_bytes(), ACTUALS.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::DuplicatePrediction { row: 3, .. }), "{err}");

        let preds = "day,source,prediction\n2016-10-01,a,warm\n";
        let err = parse_dataset(preds.as_bytes(), ACTUALS.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::Malformed { row: 2, .. }), "{err}");

        let preds = "day,source,prediction\n2016-10-01,a\n";
        assert!(parse_dataset(preds.as_bytes(), ACTUALS.as_bytes()).is_err());

        let actuals = "day,actual\n2016-10-01,1\n2016-10-01,2\n";
        let err = parse_dataset("day,source,prediction\n".as_bytes(), actuals.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateActual { row: 3, .. }), "{err}");

        let err = parse_dataset("day,src,prediction\n".as_bytes(), ACTUALS.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::Header { .. }), "{err}");
    }

    #[test]
    fn written_dataset_reads_back() {
        let d = ForecastDataset::synthetic(12, &[-1, 0, 2], 3).with_dropout(2, &[4, 5]).unwrap();
        let (mut p, mut a) = (Vec::new(), Vec::new());
        write_dataset(&d, &mut p, &mut a).unwrap();
        assert_eq!(parse_dataset(p.as_slice(), a.as_slice()).unwrap(), d);
    }
}
