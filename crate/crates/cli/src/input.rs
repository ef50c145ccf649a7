//! p-value file ingestion: one value per line, or delimited columns with a
//! `--column` selector (name or 1-based position). A first line that does
//! not parse as a number is treated as a header.

use std::fs;
use std::path::Path;

use crate::CliError;

pub fn read_pvalues(path: &Path, column: Option<&str>) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no p-values found",
            path.display()
        )));
    }

    let positional: Option<usize> = match column {
        Some(c) => match c.parse::<usize>() {
            Ok(0) => {
                return Err(CliError::Validation(
                    "--column positions are 1-based".into(),
                ))
            }
            Ok(pos) => Some(pos - 1),
            Err(_) => None, // header name, resolved below
        },
        None => None,
    };

    // header detection: the first line is a header if the selected field is
    // not numeric
    let first_fields: Vec<&str> = lines[0].1.split(',').map(str::trim).collect();
    let probe = first_fields.get(positional.unwrap_or(0));
    let first_is_header = probe.is_none_or(|f| f.parse::<f64>().is_err());

    let (col_index, data_start) = if first_is_header {
        let idx = match (positional, column) {
            (Some(idx), _) => idx,
            (None, Some(name)) => first_fields
                .iter()
                .position(|f| f.eq_ignore_ascii_case(name.trim()))
                .ok_or_else(|| {
                    CliError::Validation(format!(
                        "{}: no column named `{name}` in header `{}`",
                        path.display(),
                        lines[0].1
                    ))
                })?,
            (None, None) => 0,
        };
        (idx, 1)
    } else {
        if column.is_some() && positional.is_none() {
            return Err(CliError::Validation(format!(
                "{}: --column names a header field but the file has no header",
                path.display()
            )));
        }
        (positional.unwrap_or(0), 0)
    };

    let mut values = Vec::new();
    let mut offenders = Vec::new();
    for &(line_no, line) in &lines[data_start..] {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let field = fields.get(col_index).ok_or_else(|| {
            CliError::Validation(format!(
                "{} line {line_no}: column {} missing ({} fields)",
                path.display(),
                col_index + 1,
                fields.len()
            ))
        })?;
        let value: f64 = field.parse().map_err(|_| {
            CliError::Validation(format!(
                "{} line {line_no}: cannot parse `{field}` as a number",
                path.display()
            ))
        })?;
        if !(0.0..=1.0).contains(&value) {
            offenders.push(format!("line {line_no}: {value}"));
        }
        values.push(value);
    }

    if !offenders.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: p-values outside [0, 1]: {}",
            path.display(),
            offenders.join("; ")
        )));
    }
    if values.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no p-values found",
            path.display()
        )));
    }
    Ok(values)
}
