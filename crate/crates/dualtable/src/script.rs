//! Script and REPL execution.

use std::fmt;
use std::io::{self, BufRead, Write};

use dualtable_core::dml::ScriptParser;
use dualtable_core::Value;

use crate::engine::{Database, ExecutionReport, Outcome, QueryResult};
use crate::error::Error;

/// An error raised by the statement starting at `line:col`.
#[derive(Debug)]
pub struct ScriptError {
    pub line: u32,
    pub col: u32,
    pub error: Error,
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.error {
            // Parse errors already carry their position.
            Error::Parse(e) => write!(f, "{e}"),
            e => write!(f, "{}:{}: {e}", self.line, self.col),
        }
    }
}

impl std::error::Error for ScriptError {}

/// Runs the statements of `text` in order, writing SELECT results to `out`
/// as CSV. Stops at the first error.
pub fn run_script(db: &mut Database, text: &str, out: &mut dyn Write) -> Result<(), ScriptError> {
    for item in ScriptParser::new(text) {
        let (stmt, line, col) = item.map_err(|e| ScriptError {
            line: e.line,
            col: e.col,
            error: Error::Parse(e),
        })?;
        let at = |error| ScriptError { line, col, error };
        match db.execute(&stmt).map_err(at)? {
            Outcome::Rows(r) => write_csv(&r, out).map_err(|e| at(Error::io("<stdout>", e)))?,
            Outcome::Report(_) | Outcome::Done { .. } => {}
        }
    }
    Ok(())
}

pub fn write_csv(result: &QueryResult, out: &mut dyn Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&result.columns)?;
    for row in &result.rows {
        w.write_record(row.0.iter().map(Value::to_string))?;
    }
    w.flush()
}

pub fn describe_report(r: &ExecutionReport) -> String {
    let plan = r.plan_used.map_or("COMPACT".to_owned(), |p| p.to_string());
    let mut s = format!(
        "{plan}: matched {} changed {} scanned {}; master r/w {}/{} B, attached r/w {}/{} B; {:.3} s",
        r.rows_matched,
        r.rows_changed,
        r.rows_scanned,
        r.bytes.master_read,
        r.bytes.master_written,
        r.bytes.attached_read,
        r.bytes.attached_written,
        r.wall_seconds,
    );
    if let Some(d) = &r.decision {
        s.push_str(&format!(
            "; model chose {} at ratio {} (margin {:.6} s)",
            d.plan, d.ratio_used, d.cost_margin_seconds
        ));
    }
    s
}

/// Reads statements from `input` until EOF. A statement ends at a line
/// whose last non-blank character is `;`. Errors are reported to `err` and
/// do not end the session, except a poisoned database.
pub fn repl(db: &mut Database, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<()> {
    let mut pending = String::new();
    let mut line = String::new();
    loop {
        write!(err, "{}", if pending.is_empty() { "dualtable> " } else { "      ...> " })?;
        err.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        pending.push_str(&line);
        if !line.trim_end().ends_with(';') {
            continue;
        }
        let text = std::mem::take(&mut pending);
        for item in ScriptParser::new(&text) {
            let (stmt, _, _) = match item {
                Ok(x) => x,
                Err(e) => {
                    writeln!(err, "error: {e}")?;
                    break;
                }
            };
            match db.execute(&stmt) {
                Ok(Outcome::Rows(r)) => write_csv(&r, out)?,
                Ok(Outcome::Report(r)) => writeln!(err, "{}", describe_report(&r))?,
                Ok(Outcome::Done { rows }) => writeln!(err, "ok ({rows} rows)")?,
                Err(e @ Error::Poisoned) => {
                    writeln!(err, "error: {e}")?;
                    return Ok(());
                }
                Err(e) => {
                    writeln!(err, "error: {e}")?;
                    break;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn db(dir: &std::path::Path) -> Database {
        Database::open(Config::with_data_dir(dir)).unwrap()
    }

    #[test]
    fn select_output_is_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = db(dir.path());
        let mut out = Vec::new();
        run_script(
            &mut d,
            "CREATE TABLE t (a INT64, s UTF8);\nINSERT INTO t VALUES (1, 'x, y'), (2, NULL);\nSELECT * FROM t;",
            &mut out,
        )
        .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a,s\n1,\"x, y\"\n2,\n");
    }

    #[test]
    fn syntax_error_position() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = db(dir.path());
        let mut out = Vec::new();
        let e = run_script(
            &mut d,
            "CREATE TABLE t (a INT64);\nINSERT INTO t VALUES (1);\nSELECT * FORM t;\nSELECT * FROM t;",
            &mut out,
        )
        .unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.to_string().starts_with("3:10:"), "{e}");
        assert_eq!(e.to_string().matches("3:10").count(), 1, "{e}");
        assert!(e.error.is_user_error());
        assert!(out.is_empty());
    }

    #[test]
    fn execution_error_points_at_statement() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = db(dir.path());
        let e = run_script(&mut d, "CREATE TABLE t (a INT64);\n  SELECT * FROM u;", &mut Vec::new()).unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        assert!(matches!(e.error, Error::UnknownTable(_)));
    }

    #[test]
    fn repl_continues_after_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = db(dir.path());
        let input = "CREATE TABLE t (a INT64);\nSELECT * FROM nope;\nINSERT INTO t\n VALUES (5);\nSELECT a FROM t;\n";
        let (mut out, mut err) = (Vec::new(), Vec::new());
        repl(&mut d, &mut input.as_bytes(), &mut out, &mut err).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a\n5\n");
        assert!(String::from_utf8(err).unwrap().contains("unknown table `nope`"));
    }
}
