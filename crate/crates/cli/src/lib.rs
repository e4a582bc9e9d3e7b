//! Front end for the prexpect analyzer: the `.pgts` program format, report
//! rendering and the `prexpect` command line.

pub mod app;
pub mod dsl;
pub mod report;

pub use app::{run_cli, run_cli_with};
pub use dsl::{parse_program, print_program, ParseError, ParseErrorKind, SourceSpan};
pub use report::{analyze, AnalysisReport, Exactness};
