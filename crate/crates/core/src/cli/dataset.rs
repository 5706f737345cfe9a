//! Flexion dataset CSV ingestion and CSV output helpers.
//!
//! A dataset has a header row naming its columns. Recognized columns:
//! `sample_id` (optional), `cycle` (optional), either `f_in_N` or the pair
//! `actuator_torque_Nm,pulley_radius_m` (tension = torque / radius), and
//! `theta1_deg … thetam_deg`. Joint columns are matched on the `thetaN`
//! prefix and read as degrees unless radians are requested. Any other column
//! is ignored, so trajectory output can be read back directly.

use std::io::{Read, Write};
use std::path::Path;

use super::CliError;
use crate::calibration::{FlexionDataset, FlexionSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleUnit {
    #[default]
    Degrees,
    Radians,
}

enum ForceColumns {
    Tension(usize),
    Torque { torque: usize, radius: usize },
}

pub fn read_dataset(path: &Path, unit: AngleUnit) -> Result<FlexionDataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(file, unit).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_dataset<R: Read>(input: R, unit: AngleUnit) -> Result<FlexionDataset, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Parse(format!("header: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let force = match (find("f_in_N"), find("actuator_torque_Nm"), find("pulley_radius_m")) {
        (Some(c), _, _) => ForceColumns::Tension(c),
        (None, Some(torque), Some(radius)) => ForceColumns::Torque { torque, radius },
        _ => {
            return Err(CliError::Parse(
                "header needs f_in_N or actuator_torque_Nm and pulley_radius_m".into(),
            ))
        }
    };
    let mut joints = Vec::new();
    loop {
        let prefix = format!("theta{}", joints.len() + 1);
        let col = headers.iter().position(|h| {
            h == prefix || h.strip_prefix(&prefix).is_some_and(|rest| rest.starts_with('_'))
        });
        match col {
            Some(c) => joints.push(c),
            None => break,
        }
    }
    if joints.is_empty() {
        return Err(CliError::Parse("header has no theta1 column".into()));
    }
    let id_col = find("sample_id");
    let cycle_col = find("cycle");

    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        // Row numbers count the header as line 1.
        let line = row + 2;
        let record = record.map_err(|e| CliError::Parse(format!("line {line}: {e}")))?;
        let field = |col: usize| -> Result<f64, CliError> {
            let name = &headers[col];
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Parse(format!("line {line}, column {name}: invalid number {raw:?}")))
        };
        let f_in = match force {
            ForceColumns::Tension(c) => field(c)?,
            ForceColumns::Torque { torque, radius } => {
                let r = field(radius)?;
                if r <= 0.0 {
                    return Err(CliError::Parse(format!(
                        "line {line}, column pulley_radius_m: radius must be positive"
                    )));
                }
                field(torque)? / r
            }
        };
        if f_in < 0.0 {
            let name = match force {
                ForceColumns::Tension(c) => &headers[c],
                ForceColumns::Torque { torque, .. } => &headers[torque],
            };
            return Err(CliError::Parse(format!(
                "line {line}, column {name}: negative tendon tension {f_in}"
            )));
        }
        let angles = joints
            .iter()
            .map(|&c| {
                field(c).map(|v| match unit {
                    AngleUnit::Degrees => v.to_radians(),
                    AngleUnit::Radians => v,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let id = match id_col {
            Some(c) => {
                let raw = record.get(c).unwrap_or("");
                raw.parse::<usize>().map_err(|_| {
                    CliError::Parse(format!("line {line}, column sample_id: invalid id {raw:?}"))
                })?
            }
            None => row,
        };
        let cycle = match cycle_col {
            Some(c) => Some(record.get(c).unwrap_or("").parse::<u32>().map_err(|_| {
                CliError::Parse(format!("line {line}, column cycle: invalid cycle id"))
            })?),
            None => None,
        };
        samples.push(FlexionSample {
            id,
            f_in,
            angles,
            cycle,
        });
    }
    Ok(FlexionDataset::new(samples)?)
}

/// Plot-ready CSV: LF line endings, fixed nine-decimal floats.
pub struct CsvOut<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvOut<W> {
    pub fn new(inner: W, header: &[String]) -> Result<Self, CliError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(inner);
        writer.write_record(header).map_err(io_err)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.writer.write_record(fields).map_err(io_err)
    }

    pub fn flush(&mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

impl CsvOut<std::fs::File> {
    pub fn create(path: &Path, header: &[String]) -> Result<Self, CliError> {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::new(file, header)
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn num(v: f64) -> String {
    // Avoid printing "-0.000000000".
    let s = format!("{v:.9}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}
