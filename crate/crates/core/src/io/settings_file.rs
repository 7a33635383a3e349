//! Settings files: a header line declaring representation and side, then
//! one setting per line. Angles may be given in degrees or radians; vector
//! files carry three components per line.

use std::f64::consts::PI;

use thiserror::Error;

use crate::predictions::{Setting, SettingsError};

#[derive(Debug, Error, PartialEq)]
pub enum SettingsFileError {
    #[error("missing header line (expected 'angles-rad|angles-deg|vectors A|B')")]
    MissingHeader,
    #[error("bad header '{0}' (expected 'angles-rad|angles-deg|vectors A|B')")]
    BadHeader(String),
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("no settings after the header")]
    Empty,
    #[error(transparent)]
    Settings(#[from] SettingsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Representation {
    AnglesRad,
    AnglesDeg,
    Vectors,
}

/// Parsed settings for one side; angles are stored in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingsFile {
    pub side: Side,
    pub settings: Vec<Setting>,
}

pub fn parse_settings_file(text: &str) -> Result<SettingsFile, SettingsFileError> {
    let mut lines = text.lines().enumerate().filter_map(|(idx, raw)| {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = line.trim();
        (!trimmed.is_empty()).then_some((idx + 1, trimmed))
    });

    let (_, header) = lines.next().ok_or(SettingsFileError::MissingHeader)?;
    let mut parts = header.split_whitespace();
    let repr = match parts.next() {
        Some("angles-rad") => Representation::AnglesRad,
        Some("angles-deg") => Representation::AnglesDeg,
        Some("vectors") => Representation::Vectors,
        _ => return Err(SettingsFileError::BadHeader(header.to_string())),
    };
    let side = match parts.next() {
        Some("A") => Side::A,
        Some("B") => Side::B,
        _ => return Err(SettingsFileError::BadHeader(header.to_string())),
    };
    if parts.next().is_some() {
        return Err(SettingsFileError::BadHeader(header.to_string()));
    }

    let mut settings = Vec::new();
    for (line_no, line) in lines {
        let numbers: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| SettingsFileError::BadLine {
                    line: line_no,
                    message: format!("'{t}' is not a number"),
                })
            })
            .collect::<Result<_, _>>()?;
        let setting = match repr {
            Representation::AnglesRad | Representation::AnglesDeg => {
                if numbers.len() != 1 {
                    return Err(SettingsFileError::BadLine {
                        line: line_no,
                        message: format!("expected one angle, got {} values", numbers.len()),
                    });
                }
                let radians = match repr {
                    Representation::AnglesDeg => numbers[0] * PI / 180.0,
                    _ => numbers[0],
                };
                Setting::angle(radians)?
            }
            Representation::Vectors => {
                if numbers.len() != 3 {
                    return Err(SettingsFileError::BadLine {
                        line: line_no,
                        message: format!("expected three components, got {}", numbers.len()),
                    });
                }
                Setting::direction([numbers[0], numbers[1], numbers[2]])?
            }
        };
        settings.push(setting);
    }

    if settings.is_empty() {
        return Err(SettingsFileError::Empty);
    }
    Ok(SettingsFile { side, settings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_degree_angles_to_radians() {
        let file = parse_settings_file("angles-deg A\n0\n90\n").unwrap();
        assert_eq!(file.side, Side::A);
        assert_eq!(file.settings.len(), 2);
        match file.settings[1] {
            Setting::Angle(r) => assert!((r - PI / 2.0).abs() < 1e-12),
            _ => panic!("expected angle"),
        }
    }

    #[test]
    fn parses_vectors_with_comments() {
        let file = parse_settings_file("vectors B\n# z axis\n0 0 1\n1, 0, 0\n").unwrap();
        assert_eq!(file.side, Side::B);
        assert_eq!(file.settings.len(), 2);
    }

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(parse_settings_file(""), Err(SettingsFileError::MissingHeader));
        assert!(matches!(
            parse_settings_file("angles-foo A\n0\n"),
            Err(SettingsFileError::BadHeader(_))
        ));
        assert!(matches!(
            parse_settings_file("angles-rad A\n0 1\n"),
            Err(SettingsFileError::BadLine { line: 2, .. })
        ));
        assert_eq!(
            parse_settings_file("vectors A\n"),
            Err(SettingsFileError::Empty)
        );
        assert!(matches!(
            parse_settings_file("vectors A\n5 0 0\n"),
            Err(SettingsFileError::Settings(_))
        ));
    }
}
