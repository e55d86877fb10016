//! Plain CSV with `#` metadata lines ahead of the header.
//!
//! ```text
//! # generator: circle
//! # seed: 1
//! # standardized: false
//! # param.r: 10
//! # constraints: circle
//! x1,x2
//! 1.0000000000000000e1,0.0000000000000000e0
//! ```
//!
//! Values are written with 17 significant digits, which round-trips `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Constraint, Dataset, DatasetMeta};
use crate::numerics::Matrix;
use crate::report::write_atomic;
use crate::{Error, Result};

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_write(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::new();
    let m = &data.meta;
    writeln!(s, "# generator: {}", m.generator).unwrap();
    if let Some(seed) = m.seed {
        writeln!(s, "# seed: {seed}").unwrap();
    }
    writeln!(s, "# standardized: {}", m.standardized).unwrap();
    for (k, v) in &m.params {
        writeln!(s, "# param.{k}: {}", fmt_f64(*v)).unwrap();
    }
    let ids: Vec<&str> = data.constraints.iter().map(|c| c.id()).collect();
    writeln!(s, "# constraints: {}", ids.join(",")).unwrap();
    writeln!(s, "{}", data.names.join(",")).unwrap();
    for r in 0..data.len() {
        let row: Vec<String> = data.features.row(r).iter().map(|&v| fmt_f64(v)).collect();
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    write_atomic(path.as_ref(), s.as_bytes())
}

pub fn csv_read(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut meta = DatasetMeta::default();
    let mut constraints = Vec::new();
    let mut names: Option<Vec<String>> = None;
    let mut values = Vec::new();
    let mut rows = 0usize;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if names.is_some() {
                continue;
            }
            let Some((key, value)) = comment.split_once(':') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "generator" => meta.generator = value.to_string(),
                "seed" => {
                    meta.seed = Some(
                        value
                            .parse()
                            .map_err(|_| err(lineno, format!("bad seed `{value}`")))?,
                    )
                }
                "standardized" => {
                    meta.standardized = value
                        .parse()
                        .map_err(|_| err(lineno, format!("bad standardized flag `{value}`")))?
                }
                "constraints" => {
                    for id in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        let c = Constraint::from_id(id)
                            .ok_or_else(|| err(lineno, format!("unknown constraint `{id}`")))?;
                        constraints.push(c);
                    }
                }
                k => {
                    if let Some(p) = k.strip_prefix("param.") {
                        let v = value
                            .parse()
                            .map_err(|_| err(lineno, format!("bad value for parameter `{p}`")))?;
                        meta.params.insert(p.to_string(), v);
                    }
                }
            }
            continue;
        }
        match &names {
            None => {
                let header: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
                if header.iter().any(String::is_empty) {
                    return Err(err(lineno, "empty column name in header".into()));
                }
                names = Some(header);
            }
            Some(header) => {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != header.len() {
                    return Err(err(
                        lineno,
                        format!("expected {} columns, found {}", header.len(), fields.len()),
                    ));
                }
                for f in fields {
                    let v: f64 = f.trim().parse().map_err(|_| {
                        err(lineno, format!("cannot parse `{}` as a number", f.trim()))
                    })?;
                    if !v.is_finite() {
                        return Err(err(lineno, format!("non-finite value `{}`", f.trim())));
                    }
                    values.push(v);
                }
                rows += 1;
            }
        }
    }

    let Some(names) = names else {
        return Err(err(0, "file has no header row".into()));
    };
    if rows == 0 {
        return Err(err(0, "file has no data rows".into()));
    }
    let features = Matrix::from_vec(rows, names.len(), values)?;
    Dataset::new(features, names, meta, constraints)
}
