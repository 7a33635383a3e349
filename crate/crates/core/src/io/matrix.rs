//! Plain-text correlation matrix files: rectangular numeric tables with
//! comma or whitespace delimiters and '#' comments, parsed with
//! position-accurate errors.

use thiserror::Error;

use crate::predictions::{Origin, PredictionMatrix, EXPERIMENTAL_ENTRY_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum MatrixParseError {
    #[error("line {line}, column {column}: '{token}' is not a finite real number")]
    BadToken {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("line {line}, column {column}: entry {value} outside [-1-{tol:e}, 1+{tol:e}]")]
    EntryOutOfRange {
        line: usize,
        column: usize,
        value: f64,
        tol: f64,
    },
    #[error("line {line}: row has {got} entries, previous rows have {expected}")]
    RaggedRow {
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("no data rows found")]
    Empty,
}

/// Parses a matrix file into an experimental-origin prediction matrix.
pub fn parse_matrix(text: &str) -> Result<PredictionMatrix, MatrixParseError> {
    let mut entries: Vec<f64> = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0usize;

    for (line_idx, raw_line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let tokens = tokenize(line);
        if tokens.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(tokens.len());
        for (column, token) in tokens {
            let value: f64 = token.parse().map_err(|_| MatrixParseError::BadToken {
                line: line_no,
                column,
                token: token.to_string(),
            })?;
            if !value.is_finite() {
                return Err(MatrixParseError::BadToken {
                    line: line_no,
                    column,
                    token: token.to_string(),
                });
            }
            if value.abs() > 1.0 + EXPERIMENTAL_ENTRY_TOL {
                return Err(MatrixParseError::EntryOutOfRange {
                    line: line_no,
                    column,
                    value,
                    tol: EXPERIMENTAL_ENTRY_TOL,
                });
            }
            row.push(value);
        }
        match cols {
            None => cols = Some(row.len()),
            Some(expected) if expected != row.len() => {
                return Err(MatrixParseError::RaggedRow {
                    line: line_no,
                    got: row.len(),
                    expected,
                });
            }
            _ => {}
        }
        entries.extend(row);
        rows += 1;
    }

    let cols = cols.ok_or(MatrixParseError::Empty)?;
    Ok(
        PredictionMatrix::new(rows, cols, entries, Origin::Experimental)
            .expect("entries validated during parsing"),
    )
}

/// Splits on commas and whitespace, yielding `(1-based char column, token)`.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None; // (char col, byte offset)
    let mut byte = 0usize;
    for (col, ch) in line.chars().enumerate() {
        let is_sep = ch == ',' || ch.is_whitespace();
        if is_sep {
            if let Some((scol, sbyte)) = start.take() {
                out.push((scol + 1, &line[sbyte..byte]));
            }
        } else if start.is_none() {
            start = Some((col, byte));
        }
        byte += ch.len_utf8();
    }
    if let Some((scol, sbyte)) = start {
        out.push((scol + 1, &line[sbyte..]));
    }
    out
}

/// Renders a matrix in the same plain-text format the parser accepts.
pub fn format_matrix(matrix: &PredictionMatrix) -> String {
    let mut out = String::new();
    for i in 0..matrix.rows() {
        let row: Vec<String> = (0..matrix.cols())
            .map(|j| format!("{}", matrix.get(i, j)))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_whitespace_and_comma_tables() {
        let ws = parse_matrix("0.1 -0.2\n0.3 0.4\n").unwrap();
        let csv = parse_matrix("0.1,-0.2\n0.3,0.4\n").unwrap();
        assert_eq!(ws.entries(), csv.entries());
        assert_eq!((ws.rows(), ws.cols()), (2, 2));
        assert_eq!(ws.origin(), Origin::Experimental);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let q = parse_matrix("# comment\n0 0\n\n0 0 # trailing\n").unwrap();
        assert_eq!((q.rows(), q.cols()), (2, 2));
        assert!(q.is_zero());
    }

    #[test]
    fn out_of_range_entry_is_positioned() {
        let err = parse_matrix("1.5").unwrap_err();
        assert_eq!(
            err,
            MatrixParseError::EntryOutOfRange {
                line: 1,
                column: 1,
                value: 1.5,
                tol: EXPERIMENTAL_ENTRY_TOL,
            }
        );
    }

    #[test]
    fn bad_token_is_positioned() {
        let err = parse_matrix("0.1 0.2\n0.3 abc\n").unwrap_err();
        assert_eq!(
            err,
            MatrixParseError::BadToken {
                line: 2,
                column: 5,
                token: "abc".to_string(),
            }
        );
        assert!(matches!(
            parse_matrix("inf").unwrap_err(),
            MatrixParseError::BadToken { .. }
        ));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = parse_matrix("0.1 0.2\n0.3\n").unwrap_err();
        assert_eq!(
            err,
            MatrixParseError::RaggedRow {
                line: 2,
                got: 1,
                expected: 2,
            }
        );
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(parse_matrix("# only comments\n"), Err(MatrixParseError::Empty));
    }

    #[test]
    fn format_round_trips() {
        let q = parse_matrix("0.125 -0.5\n0.333333333333 1\n").unwrap();
        let again = parse_matrix(&format_matrix(&q)).unwrap();
        assert_eq!(q.entries(), again.entries());
    }
}
