use std::io::Write;

use moebius::{Error, Result};
use serde::Serialize;
use serde_json::Value;

use crate::args::{Command, Format, GlobalOpts};

/// Rows for the CSV rendering of a result.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }
}

/// What a subcommand produced. `failure` is reported after the document is
/// written, so partial reports (a failed verification, say) stay readable.
pub struct Output {
    pub result: Value,
    pub table: Table,
    pub failure: Option<Error>,
}

impl Output {
    pub fn ok(result: impl Serialize, table: Table) -> Result<Self> {
        Ok(Output {
            result: serde_json::to_value(result)?,
            table,
            failure: None,
        })
    }

    pub fn failing_if(mut self, failed: bool, err: impl FnOnce() -> Error) -> Self {
        if failed {
            self.failure = Some(err());
        }
        self
    }
}

#[derive(Serialize)]
struct Config<'a> {
    command: &'a Command,
    #[serde(flatten)]
    global: &'a GlobalOpts,
}

#[derive(Serialize)]
struct Document<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    config: Config<'a>,
    result: &'a Value,
}

pub fn default_format(cmd: &Command) -> Format {
    match cmd {
        Command::Euler { .. } => Format::Csv,
        _ => Format::Json,
    }
}

/// Writes the document. CSV output starts with one `#` line holding the same
/// metadata as the JSON envelope, followed by a header row.
pub fn write(out: &mut impl Write, cmd: &Command, global: &GlobalOpts, o: &Output) -> Result<()> {
    let config = Config { command: cmd, global };
    let format = global.format.unwrap_or_else(|| default_format(cmd));
    match format {
        Format::Json => {
            let doc = Document {
                tool: "moebius",
                version: env!("CARGO_PKG_VERSION"),
                seed: global.seed,
                config,
                result: &o.result,
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(
                out,
                "# moebius {} seed={} config={}",
                env!("CARGO_PKG_VERSION"),
                global.seed,
                serde_json::to_string(&config)?
            )?;
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(&o.table.header).map_err(csv_err)?;
            for r in &o.table.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// One-line, machine-parsable error report for stderr.
pub fn error_line(e: &Error) -> String {
    serde_json::json!({
        "error": e.kind(),
        "exit": e.exit_code(),
        "message": e.to_string(),
    })
    .to_string()
}
