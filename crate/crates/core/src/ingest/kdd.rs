use super::{decimals_of, format_decimal, Record};
use crate::error::{Error, Result};

/// The 41 connection features, in file order.
pub const KDD_FIELDS: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

/// Symbolic fields plus the binary flags, which would only produce
/// degenerate bins if treated as continuous.
pub const KDD_CATEGORICAL: [&str; 7] = [
    "protocol_type",
    "service",
    "flag",
    "land",
    "logged_in",
    "is_host_login",
    "is_guest_login",
];

pub const KDD_NORMAL_LABEL: &str = "normal";

fn is_categorical(field: usize) -> bool {
    KDD_CATEGORICAL.contains(&KDD_FIELDS[field])
}

pub(super) fn continuous_names() -> Vec<String> {
    (0..KDD_FIELDS.len())
        .filter(|&i| !is_categorical(i))
        .map(|i| KDD_FIELDS[i].to_string())
        .collect()
}

/// Parses one comma-separated connection record with an optional trailing
/// label (`normal.`, `smurf.`, ...). The trailing dot is stripped.
pub fn parse_kdd_record(line: &str) -> Result<Record> {
    let fields: Vec<&str> = line.trim_end().split(',').collect();
    let label = match fields.len() {
        41 => None,
        42 => Some(fields[41].trim().trim_end_matches('.').to_string()),
        n => {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected 41 or 42 fields, found {n}"),
            })
        }
    };
    let mut rec = Record {
        label,
        ..Record::default()
    };
    for (i, tok) in fields[..41].iter().enumerate() {
        let tok = tok.trim();
        if is_categorical(i) {
            rec.categorical.push(tok.to_string());
        } else {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("field {} ({}) is not numeric: {tok:?}", i + 1, KDD_FIELDS[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("field {} ({}) is not finite", i + 1, KDD_FIELDS[i]),
                });
            }
            rec.continuous.push(v);
            rec.decimals.push(decimals_of(tok));
        }
    }
    Ok(rec)
}

/// Writes a record back in file order; labels regain their trailing dot.
pub fn format_kdd_record(rec: &Record) -> String {
    let mut cont = rec.continuous.iter().zip(&rec.decimals);
    let mut cat = rec.categorical.iter();
    let mut out: Vec<String> = (0..KDD_FIELDS.len())
        .map(|i| {
            if is_categorical(i) {
                cat.next().cloned().unwrap_or_default()
            } else {
                cont.next()
                    .map(|(&v, &d)| format_decimal(v, d))
                    .unwrap_or_default()
            }
        })
        .collect();
    if let Some(label) = &rec.label {
        out.push(format!("{label}."));
    }
    out.join(",")
}
