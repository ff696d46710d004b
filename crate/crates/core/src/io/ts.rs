//! Reader for the sktime/UEA `.ts` text format, restricted to equal-length,
//! fully numeric, classification-labelled (or unlabelled) files.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::io::TimeSeriesDataset;

#[derive(Default)]
struct Header {
    name: Option<String>,
    univariate: Option<bool>,
    dimensions: Option<usize>,
    series_length: Option<usize>,
    class_labels: Option<Vec<String>>,
}

fn parse_bool(line: usize, key: &str, value: Option<&str>) -> Result<bool> {
    match value.map(str::to_ascii_lowercase).as_deref() {
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        _ => Err(Error::parse(line, format!("@{key} expects true or false"))),
    }
}

fn parse_count(line: usize, key: &str, value: Option<&str>) -> Result<usize> {
    value
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v > 0)
        .ok_or_else(|| Error::parse(line, format!("@{key} expects a positive integer")))
}

impl Header {
    fn apply(&mut self, line: usize, text: &str) -> Result<()> {
        let mut tokens = text[1..].split_whitespace();
        let key = tokens
            .next()
            .ok_or_else(|| Error::parse(line, "empty header line"))?
            .to_ascii_lowercase();
        match key.as_str() {
            "problemname" => {
                let rest: Vec<&str> = tokens.collect();
                self.name = Some(rest.join(" "));
            }
            "timestamps" => {
                if parse_bool(line, &key, tokens.next())? {
                    return Err(Error::parse(line, "timestamped series unsupported"));
                }
            }
            "missing" => {
                parse_bool(line, &key, tokens.next())?;
            }
            "univariate" => self.univariate = Some(parse_bool(line, &key, tokens.next())?),
            "dimensions" => self.dimensions = Some(parse_count(line, &key, tokens.next())?),
            "equallength" => {
                if !parse_bool(line, &key, tokens.next())? {
                    return Err(Error::VariableLength { line });
                }
            }
            "serieslength" => self.series_length = Some(parse_count(line, &key, tokens.next())?),
            "classlabel" => {
                if parse_bool(line, &key, tokens.next())? {
                    let labels: Vec<String> = tokens.map(str::to_owned).collect();
                    if labels.is_empty() {
                        return Err(Error::parse(line, "@classLabel true without labels"));
                    }
                    for (i, l) in labels.iter().enumerate() {
                        if labels[..i].contains(l) {
                            return Err(Error::parse(line, format!("duplicate class label {l:?}")));
                        }
                    }
                    self.class_labels = Some(labels);
                } else {
                    self.class_labels = None;
                }
            }
            "targetlabel" => {
                if parse_bool(line, &key, tokens.next())? {
                    return Err(Error::parse(line, "regression targets unsupported"));
                }
            }
            other => return Err(Error::parse(line, format!("unknown header @{other}"))),
        }
        Ok(())
    }

    fn channels(&self, line: usize) -> Result<Option<usize>> {
        match (self.univariate, self.dimensions) {
            (Some(true), Some(d)) if d != 1 => Err(Error::parse(
                line,
                format!("@univariate true contradicts @dimensions {d}"),
            )),
            (Some(true), _) => Ok(Some(1)),
            (_, d) => Ok(d),
        }
    }
}

fn parse_value(line: usize, token: &str) -> Result<f64> {
    let token = token.trim();
    if token == "?" {
        return Err(Error::parse(line, "missing values unsupported"));
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(line, format!("non-numeric value {token:?}"))),
    }
}

/// Parse a `.ts` document. Sample order follows record order in the file.
pub fn parse_ts<R: BufRead>(reader: R) -> Result<TimeSeriesDataset> {
    let mut header = Header::default();
    let mut in_data = false;
    let mut channels: Option<usize> = None;
    let mut length: Option<usize> = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    let mut data_line = 0usize;

    for (idx, raw) in reader.lines().enumerate() {
        let line = idx + 1;
        let raw = raw?;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if !in_data {
            if !text.starts_with('@') {
                return Err(Error::parse(line, "data before @data"));
            }
            if text[1..].trim().eq_ignore_ascii_case("data") {
                in_data = true;
                data_line = line;
                channels = header.channels(line)?;
                length = header.series_length;
            } else {
                header.apply(line, text)?;
            }
            continue;
        }

        let mut fields: Vec<&str> = text.split(':').collect();
        if let Some(classes) = &header.class_labels {
            if fields.len() < 2 {
                return Err(Error::parse(line, "record without class label"));
            }
            let label = fields.pop().unwrap_or_default().trim();
            let index = classes
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| Error::parse(line, format!("unknown class label {label:?}")))?;
            labels.push(index);
        }
        match channels {
            Some(c) if c != fields.len() => {
                return Err(Error::parse(
                    line,
                    format!("channel count mismatch: expected {c}, found {}", fields.len()),
                ))
            }
            Some(_) => {}
            None => channels = Some(fields.len()),
        }
        for field in fields {
            let start = values.len();
            for token in field.split(',') {
                values.push(parse_value(line, token)?);
            }
            let found = values.len() - start;
            match length {
                Some(l) if l != found => return Err(Error::VariableLength { line }),
                Some(_) => {}
                None => length = Some(found),
            }
        }
        n += 1;
    }

    if !in_data {
        return Err(Error::parse(data_line.max(1), "missing @data section"));
    }
    if n == 0 {
        return Err(Error::parse(data_line, "empty dataset"));
    }
    let c = channels.unwrap_or(1);
    let l = length.unwrap_or(0);
    if l < 2 {
        return Err(Error::parse(data_line, format!("series length {l} < 2")));
    }
    let (labels, class_names) = match header.class_labels {
        Some(names) => (Some(labels), names),
        None => (None, Vec::new()),
    };
    TimeSeriesDataset::new(header.name.unwrap_or_default(), (n, c, l), values, labels, class_names)
}

pub fn parse_ts_str(text: &str) -> Result<TimeSeriesDataset> {
    parse_ts(text.as_bytes())
}
