use std::sync::OnceLock;

use regex::Regex;

use super::Record;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct ApacheOptions {
    /// Append the user-agent string to the request text.
    pub include_user_agent: bool,
}

fn combined_log_format() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // host ident user [time] "request" status size ["referer" "agent"]
        Regex::new(concat!(
            r#"^(\S+) (\S+) (\S+) \[([^\]]*)\] "((?:[^"\\]|\\.)*)" (\S+) (\S+)"#,
            r#"(?: "((?:[^"\\]|\\.)*)" "((?:[^"\\]|\\.)*)")?\s*$"#
        ))
        .unwrap()
    })
}

/// Parses one line of the Apache combined (or common) log format. The
/// record's text is the quoted request string.
pub fn parse_apache_line(line: &str, options: &ApacheOptions) -> Result<Record> {
    let caps = combined_log_format()
        .captures(line)
        .ok_or_else(|| Error::Parse {
            line: 0,
            msg: "not in combined log format (unbalanced quotes or missing request)".into(),
        })?;
    let request = &caps[5];
    if request.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty request string".into(),
        });
    }
    let mut text = request.to_string();
    if options.include_user_agent {
        if let Some(agent) = caps.get(9) {
            text.push(' ');
            text.push_str(agent.as_str());
        }
    }
    Ok(Record {
        text: Some(text),
        ..Record::default()
    })
}
