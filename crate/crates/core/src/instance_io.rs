//! Plain-text instance format.
//!
//! ```text
//! # comments and blank lines are ignored
//! n K
//! C
//! c_1 p_1^1 ... p_1^K
//! ...
//! c_n p_n^1 ... p_n^K
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Instance;

pub fn parse_instance(source: &str, name: &str) -> Result<Instance> {
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header line `n K`"))?;
    let header = numbers(line, header)?;
    let [n, k] = header[..] else {
        return Err(Error::parse(line, "header must be `n K`"));
    };
    if k < 1 {
        return Err(Error::parse(line, "at least one objective is required"));
    }
    let (n, k) = (n as usize, k as usize);

    let last_line = source.lines().count().max(1);
    let (line, cap) = lines
        .next()
        .ok_or_else(|| Error::parse(last_line + 1, "missing capacity line"))?;
    let [capacity] = numbers(line, cap)?[..] else {
        return Err(Error::parse(line, "capacity line must hold a single value"));
    };

    let mut costs = Vec::with_capacity(n);
    let mut profits = vec![Vec::with_capacity(n); k];
    for j in 0..n {
        let (line, text) = lines
            .next()
            .ok_or_else(|| Error::parse(last_line + 1, format!("expected {n} item lines, found {j}")))?;
        let values = numbers(line, text)?;
        if values.len() != k + 1 {
            return Err(Error::parse(
                line,
                format!(
                    "expected {} values (cost and {k} profits), found {}",
                    k + 1,
                    values.len()
                ),
            ));
        }
        costs.push(values[0]);
        for (row, &p) in profits.iter_mut().zip(&values[1..]) {
            row.push(p);
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, format!("unexpected data after {n} item lines")));
    }
    Instance::new(name, capacity, costs, profits).map_err(|e| Error::parse(1, e.to_string()))
}

fn numbers(line: usize, text: &str) -> Result<Vec<i64>> {
    text.split_whitespace()
        .map(|t| match t.parse::<i64>() {
            Ok(v) if v < 0 => Err(Error::parse(line, format!("negative value {v}"))),
            Ok(v) => Ok(v),
            Err(_) => Err(Error::parse(line, format!("invalid integer {t:?}"))),
        })
        .collect()
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string());
    parse_instance(&text, &name)
}

pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", instance.num_items(), instance.num_objectives());
    let _ = writeln!(out, "{}", instance.capacity());
    for j in 0..instance.num_items() {
        let _ = write!(out, "{}", instance.cost(j));
        for k in 0..instance.num_objectives() {
            let _ = write!(out, " {}", instance.profit(k, j));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;

    #[test]
    fn parses_t1() {
        let inst = parse_instance("4 2\n6\n2 3 4\n3 5 2\n4 1 5\n5 4 3\n", "T1").unwrap();
        assert_eq!(inst, t1());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# T1\n\n4 2   # n K\n6\n2 3 4\n3 5 2\n\n4 1 5\n5 4 3\n";
        assert_eq!(parse_instance(text, "T1").unwrap(), t1());
    }

    #[test]
    fn empty_instance() {
        let inst = parse_instance("0 2\n5\n", "e").unwrap();
        assert_eq!(inst.num_items(), 0);
        assert_eq!(inst.num_objectives(), 2);
    }

    #[test]
    fn errors_name_lines() {
        let line = |text: &str| match parse_instance(text, "x").unwrap_err() {
            Error::Parse { line, .. } => line,
            other => panic!("unexpected {other}"),
        };
        assert_eq!(line(""), 1);
        assert_eq!(line("4 2\n6\n2 3\n3 5 2\n"), 3);
        assert_eq!(line("4 2\n6\n2 3 4\n3 -5 2\n"), 4);
        assert_eq!(line("2 2\n6\n2 3 4\n"), 4);
        assert_eq!(line("1 2\n6\n2 3 4\n1 1 1\n"), 4);
        assert_eq!(line("1 2 3\n"), 1);
        assert_eq!(line("1 2\nx\n"), 2);
    }

    #[test]
    fn write_round_trip() {
        let text = write_instance(&t1());
        assert_eq!(text, "4 2\n6\n2 3 4\n3 5 2\n4 1 5\n5 4 3\n");
        assert_eq!(parse_instance(&text, "T1").unwrap(), t1());
    }
}
