//! Labeled feature vectors and their text file format: one example per
//! line, the label (`0`-`9`, or `-1` for a negative) followed by the
//! comma-separated features.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Class(u8),
    Negative,
}

impl Label {
    pub fn code(&self) -> i32 {
        match self {
            Label::Class(k) => i32::from(*k),
            Label::Negative => -1,
        }
    }

    pub fn from_code(code: i32) -> Option<Label> {
        match code {
            -1 => Some(Label::Negative),
            0..=9 => Some(Label::Class(code as u8)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: Label,
}

/// A training corpus. Every example has the same feature length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub examples: Vec<Example>,
}

pub type DigitDataset = Dataset;

impl Dataset {
    pub fn push(&mut self, features: Vec<f64>, label: Label) -> Result<()> {
        if let Some(first) = self.examples.first() {
            if first.features.len() != features.len() {
                return Err(Error::Shape {
                    expected: first.features.len(),
                    got: features.len(),
                });
            }
        }
        self.examples.push(Example { features, label });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn feature_len(&self) -> usize {
        self.examples.first().map_or(0, |e| e.features.len())
    }

    pub fn distinct_labels(&self) -> usize {
        self.examples.iter().map(|e| e.label).collect::<BTreeSet<_>>().len()
    }

    pub fn count(&self, label: Label) -> usize {
        self.examples.iter().filter(|e| e.label == label).count()
    }

    pub fn extend(&mut self, other: Dataset) -> Result<()> {
        for e in other.examples {
            self.push(e.features, e.label)?;
        }
        Ok(())
    }

    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        for e in &self.examples {
            write!(out, "{}", e.label.code())?;
            for v in &e.features {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Dataset> {
        let mut data = Dataset::default();
        for (n, line) in input.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let label_text = fields.next().unwrap_or_default().trim();
            let label = label_text
                .parse::<i32>()
                .ok()
                .and_then(Label::from_code)
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("invalid label `{label_text}`"),
                })?;
            let features = fields
                .map(|f| {
                    f.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("invalid feature `{f}`"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if features.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "no features".into(),
                });
            }
            data.push(features, label).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        }
        Ok(data)
    }
}
