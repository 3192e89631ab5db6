//! XML verification reports, their schema and the HTML rendering.

pub mod html;
pub mod schema;
pub mod xml;

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use html::{render_html, render_report};
pub use schema::{validate_report, REPORT_SCHEMA};
pub use xml::{build_trace_xml, parse_report, wikipedia_permalink, Report, ReportSummary};

pub const REPORT_NAMESPACE: &str = "urn:kgtrace:verification-report:v1";
pub const SCHEMA_VERSION: &str = "1";
pub const REPORT_STYLESHEET: &str = include_str!("../../assets/schema/verification-report.v1.xsl");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("report violates the schema: {}", .0.join("; "))]
    SchemaViolation(Vec<String>),
    #[error("unusable schema: {0}")]
    Schema(String),
    #[error("malformed report: {0}")]
    Malformed(String),
    #[error("cannot render report: {0}")]
    TransformFailure(String),
    #[error("incomplete summary: {0}")]
    Incomplete(String),
}

/// File stem for a run's outputs, derived from the subject and start time.
pub fn run_id(subject: &str, started: DateTime<Utc>) -> String {
    let subject: String = subject.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("{subject}-{}", started.format("%Y%m%dT%H%M%SZ"))
}
