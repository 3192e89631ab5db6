use std::fs;
use std::path::PathBuf;

use clap::Args;
use kgtrace::report::{render_html, validate_report, REPORT_SCHEMA, REPORT_STYLESHEET};

use super::Outcome;
use crate::exit::CliError;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Verification report XML.
    pub xml: Option<PathBuf>,
    /// Where to write the HTML; defaults to the XML path with an .html extension.
    #[arg(long)]
    pub html: Option<PathBuf>,
    /// Only validate against the bundled schema.
    #[arg(long)]
    pub validate_only: bool,
    /// Write the bundled schema and stylesheet into the output directory.
    #[arg(long)]
    pub export_schema: bool,
}

pub fn report(out: &std::path::Path, args: &ReportArgs) -> Result<Outcome, CliError> {
    if args.export_schema {
        for (name, text) in [("verification-report.v1.xsd", REPORT_SCHEMA), ("verification-report.v1.xsl", REPORT_STYLESHEET)] {
            let path = out.join(name);
            fs::write(&path, text).map_err(|e| CliError::io(path.display(), e))?;
            println!("{}", path.display());
        }
    }
    let Some(xml_path) = &args.xml else {
        return if args.export_schema { Ok(Outcome::Completed) } else { Err(CliError::Input("no report XML given".into())) };
    };
    let xml = fs::read_to_string(xml_path).map_err(|e| CliError::Input(format!("{}: {e}", xml_path.display())))?;
    validate_report(&xml)?;
    if args.validate_only {
        println!("{}: valid", xml_path.display());
        return Ok(Outcome::Completed);
    }
    let html = render_html(&xml)?;
    let target = args.html.clone().unwrap_or_else(|| xml_path.with_extension("html"));
    fs::write(&target, html).map_err(|e| CliError::io(target.display(), e))?;
    println!("{}", target.display());
    Ok(Outcome::Completed)
}
