use std::path::PathBuf;

use crate::dataset::ValidationReport;

/// Crate-wide error type. Variants carry enough structure for callers to
/// report the exact record, file, or constraint that failed.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input is not syntactically valid JSON.
    #[error("JSON syntax error at byte {offset} (line {line}, column {column}): {message}")]
    JsonSyntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    /// JSON parsed but does not match the expected schema (missing or
    /// mistyped field). The message names the offending field.
    #[error("schema error: {message}")]
    Schema { message: String },

    /// Dataset records reference ids that do not resolve, or otherwise fail
    /// validation. The report lists every violation.
    #[error("dataset integrity error: {report}")]
    Integrity { report: ValidationReport },

    /// A label file line could not be parsed or holds out-of-range values.
    #[error("label format error in {file} line {line}: {message}")]
    LabelFormat {
        file: String,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image decode error on {path}: {message}")]
    ImageDecode { path: PathBuf, message: String },

    /// A rectangle with non-positive extent reached an area-based operation.
    #[error("degenerate rectangle: {w}x{h} has no area")]
    DegenerateRect { w: f64, h: f64 },

    /// Sampling was requested from a histogram with zero recorded events.
    #[error("histogram for category {category} is empty; nothing to sample")]
    EmptyHistogram { category: i64 },

    #[error("donor pool is empty after filtering")]
    EmptyDonorPool,

    /// No placement satisfying the constraints was found within the retry
    /// budget for one output image.
    #[error("augmentation infeasible for output {slot}: {detail}")]
    Infeasible { slot: usize, detail: String },

    #[error("invalid configuration: {message}")]
    Config { message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps a serde_json error, classifying syntax failures (with byte
    /// offset computed against `input`) separately from schema mismatches.
    pub fn from_json(err: serde_json::Error, input: &[u8]) -> Self {
        let line = err.line();
        let column = err.column();
        if err.is_syntax() || err.is_eof() {
            Error::JsonSyntax {
                offset: byte_offset(input, line, column),
                line,
                column,
                message: plain_message(&err),
            }
        } else {
            Error::Schema {
                message: plain_message(&err),
            }
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// serde_json appends " at line L column C" to its messages; strip it since
/// the location is carried structurally.
fn plain_message(err: &serde_json::Error) -> String {
    let text = err.to_string();
    match text.rfind(" at line ") {
        Some(pos) => text[..pos].to_string(),
        None => text,
    }
}

/// Byte offset of 1-based (line, column) in `input`. serde_json counts
/// columns in bytes from 1; offset 0 is returned for out-of-range locations.
fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current_line = 1usize;
    let mut line_start = 0usize;
    if line > 1 {
        for (i, &b) in input.iter().enumerate() {
            if b == b'\n' {
                current_line += 1;
                if current_line == line {
                    line_start = i + 1;
                    break;
                }
            }
        }
        if current_line != line {
            return input.len();
        }
    }
    (line_start + column.saturating_sub(1)).min(input.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_error_carries_byte_offset() {
        let input = b"{\n  \"images\": [,]\n}";
        let err = serde_json::from_slice::<serde_json::Value>(input).unwrap_err();
        match Error::from_json(err, input) {
            Error::JsonSyntax { offset, line, .. } => {
                assert_eq!(line, 2);
                assert_eq!(input[offset], b',');
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn data_error_reported_as_schema() {
        #[derive(serde::Deserialize, Debug)]
        #[allow(dead_code)]
        struct Needs {
            id: i64,
        }
        let input = b"{}";
        let err = serde_json::from_slice::<Needs>(input).unwrap_err();
        match Error::from_json(err, input) {
            Error::Schema { message } => assert!(message.contains("id"), "{message}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }
}
