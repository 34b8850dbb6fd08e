//! Descriptor files.
//!
//! CSV: header `id,label,group,f0,f1,…`, one descriptor per row.
//! JSON: a [`DescriptorSet`] object that also records the STA parameters
//! and the flow configuration the descriptors were computed with.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DescriptorKind, StaError, StaParams};

/// One labeled descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRow {
    pub id: String,
    pub label: String,
    /// Cross-validation group (the person id for action datasets).
    pub group: u32,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSet {
    pub kind: DescriptorKind,
    pub params: StaParams,
    /// Flow provenance, e.g. `farneback(w=2,s=5,sigma=1.1)`.
    #[serde(default)]
    pub flow: Option<String>,
    pub rows: Vec<DescriptorRow>,
}

pub fn write_descriptor_csv<W: Write>(rows: &[DescriptorRow], out: W) -> Result<(), StaError> {
    let mut writer = csv::Writer::from_writer(out);
    let dim = rows.first().map_or(0, |r| r.values.len());
    let mut header = vec!["id".to_string(), "label".to_string(), "group".to_string()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    writer.write_record(&header).map_err(csv_err)?;
    for row in rows {
        if row.values.len() != dim {
            return Err(StaError::LengthMismatch { got: row.values.len(), expected: dim });
        }
        let mut record = vec![row.id.clone(), row.label.clone(), row.group.to_string()];
        record.extend(row.values.iter().map(f64::to_string));
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_descriptor_csv<R: Read>(input: R) -> Result<Vec<DescriptorRow>, StaError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" || &header[2] != "group" {
        return Err(StaError::Format("header must start with id,label,group".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let group = record[2]
            .parse()
            .map_err(|_| StaError::Format(format!("bad group {:?}", &record[2])))?;
        let values = record
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>().map_err(|_| StaError::Format(format!("bad value {v:?}"))))
            .collect::<Result<_, _>>()?;
        rows.push(DescriptorRow { id: record[0].to_string(), label: record[1].to_string(), group, values });
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> StaError {
    StaError::Format(e.to_string())
}
