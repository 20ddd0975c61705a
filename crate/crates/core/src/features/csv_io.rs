use std::io::{Read, Write};

use super::{feature_names, FeatureError, FeatureVector};

/// One window's features with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub user_id: String,
    pub session_id: String,
    pub window_start: f64,
    pub features: FeatureVector,
}

fn csv_err(e: impl std::fmt::Display) -> FeatureError {
    FeatureError::Csv(e.to_string())
}

/// Header `user_id,session_id,window_start,<schema names>`, one row per window.
pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureRow]) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "user_id".to_owned(),
        "session_id".to_owned(),
        "window_start".to_owned(),
    ];
    header.extend(feature_names());
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut rec = vec![
            row.user_id.clone(),
            row.session_id.clone(),
            row.window_start.to_string(),
        ];
        rec.extend(row.features.values().iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_err)?.clone();
    let expected = feature_names();
    let names: Vec<&str> = header.iter().skip(3).collect();
    if header.len() != expected.len() + 3
        || header
            .iter()
            .take(3)
            .ne(["user_id", "session_id", "window_start"])
        || names.iter().zip(&expected).any(|(a, b)| *a != b.as_str())
    {
        return Err(FeatureError::Csv(
            "header does not match feature schema".into(),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let parse = |s: &str| s.parse::<f64>().map_err(csv_err);
        let values = record
            .iter()
            .skip(3)
            .map(parse)
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(FeatureRow {
            user_id: record[0].to_owned(),
            session_id: record[1].to_owned(),
            window_start: parse(&record[2])?,
            features: FeatureVector::new(values)?,
        });
    }
    Ok(rows)
}
