//! File formats and fixtures: matrix tables, settings files, bundled
//! experimental data, and the structured result document.

pub mod fixtures;
pub mod matrix;
pub mod result_doc;
pub mod settings_file;

pub use fixtures::{bundled_fixtures, fixture, Fixture, LONG_DISTANCE, WEINFURTER_MICHLER};
pub use matrix::{format_matrix, parse_matrix, MatrixParseError};
pub use result_doc::{
    matrix_digest, truncate_six, write_result, DocError, OutputFormat, ResultDocument,
};
pub use settings_file::{parse_settings_file, SettingsFile, SettingsFileError, Side};
