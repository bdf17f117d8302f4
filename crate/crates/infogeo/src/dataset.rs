//! Binary observation tables in CSV form.
//!
//! One row per observation, one column per node (model node order),
//! values 0 or 1, optional header line of column names.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub names: Option<Vec<String>>,
    pub rows: Vec<Vec<u8>>,
}

fn parse_row(line: &str, lineno: usize, width: Option<usize>) -> Result<Vec<u8>> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if let Some(w) = width {
        if fields.len() != w {
            return Err(Error::Parse(format!(
                "line {lineno}: expected {w} columns, found {}",
                fields.len()
            )));
        }
    }
    fields
        .iter()
        .map(|f| match *f {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(Error::Parse(format!(
                "line {lineno}: `{other}` is not 0 or 1"
            ))),
        })
        .collect()
}

fn looks_like_data(line: &str) -> bool {
    line.split(',').map(str::trim).all(|f| f == "0" || f == "1")
}

pub fn parse_bit_csv(text: &str) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let names = match lines.peek() {
        Some(&(_, first)) if !looks_like_data(first) => {
            let header: Vec<String> = first.split(',').map(|f| f.trim().to_string()).collect();
            if header.iter().any(String::is_empty) {
                return Err(Error::Parse("header has an empty column name".into()));
            }
            lines.next();
            Some(header)
        }
        Some(_) => None,
        None => return Err(Error::Parse("empty dataset".into())),
    };

    let mut rows = Vec::new();
    let mut width = names.as_ref().map(Vec::len);
    for (lineno, line) in lines {
        let row = parse_row(line, lineno, width)?;
        width.get_or_insert(row.len());
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("dataset has a header but no rows".into()));
    }
    Ok(Dataset { names, rows })
}

pub fn read_bit_csv(path: &std::path::Path) -> Result<Dataset> {
    parse_bit_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_rows_parse() {
        let d = parse_bit_csv("0,1\n1,1\n0,0\n").unwrap();
        assert_eq!(d.names, None);
        assert_eq!(d.rows, vec![vec![0, 1], vec![1, 1], vec![0, 0]]);
    }

    #[test]
    fn header_detected_and_stripped() {
        let d = parse_bit_csv("rain,sprinkler\r\n0, 1\r\n1,0\r\n").unwrap();
        assert_eq!(d.names.unwrap(), vec!["rain", "sprinkler"]);
        assert_eq!(d.rows.len(), 2);
    }

    #[test]
    fn bad_tokens_report_line_numbers() {
        let err = parse_bit_csv("0,1\n0,2\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = parse_bit_csv("a,b\n0,1\n0\n").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(parse_bit_csv("").is_err());
        assert!(parse_bit_csv("a,b\n").is_err());
    }
}
