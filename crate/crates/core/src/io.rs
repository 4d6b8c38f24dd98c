//! Text formats: `key = value` config and sweep files, result and trace CSVs.

use std::io::Write;
use std::path::Path;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::pipeline::{P0Report, ResultRow, Scheme, SweepParam, SweepSpec};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `(line number, key, value)` for every non-blank, non-comment line.
fn key_values(path: &Path, text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected key = value, got {line:?}"),
            });
        };
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Applies a config file on top of `base`.
pub fn parse_config(path: &Path, text: &str, base: SystemConfig) -> Result<SystemConfig> {
    let mut config = base;
    for (line, key, value) in key_values(path, text)? {
        config.set(&key, &value).map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{key}: {msg}"),
        })?;
    }
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path, base: SystemConfig) -> Result<SystemConfig> {
    parse_config(path, &read(path)?, base)
}

/// Config file listing every key.
pub fn render_config(config: &SystemConfig) -> String {
    let mut s = String::new();
    for (k, v) in config.entries() {
        s.push_str(&format!("{k} = {v}\n"));
    }
    s
}

fn list<T>(path: &Path, line: usize, value: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            item(s).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("bad list item {s:?}"),
            })
        })
        .collect()
}

/// Sweep file with keys `param`, `values`, `seeds` and `schemes`.
///
/// `seeds` also accepts a half-open range `a..b`.
pub fn parse_sweep(path: &Path, text: &str) -> Result<SweepSpec> {
    let mut param = None;
    let mut values = Vec::new();
    let mut seeds = Vec::new();
    let mut schemes = vec![Scheme::Proposed];
    for (line, key, value) in key_values(path, text)? {
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        match key.as_str() {
            "param" => {
                param = Some(SweepParam::parse(&value).ok_or_else(|| bad(format!("unknown sweep parameter {value:?}")))?)
            }
            "values" => values = list(path, line, &value, |s| s.parse::<f64>().ok())?,
            "seeds" => {
                seeds = match value.split_once("..") {
                    Some((a, b)) => {
                        let a: u64 = a.trim().parse().map_err(|_| bad(format!("bad seed range {value:?}")))?;
                        let b: u64 = b.trim().parse().map_err(|_| bad(format!("bad seed range {value:?}")))?;
                        (a..b).collect()
                    }
                    None => list(path, line, &value, |s| s.parse::<u64>().ok())?,
                }
            }
            "schemes" => schemes = list(path, line, &value, Scheme::parse)?,
            _ => return Err(bad(format!("unknown key {key:?}"))),
        }
    }
    let spec = SweepSpec {
        param: param.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "missing `param`".into(),
        })?,
        values,
        seeds,
        schemes,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    parse_sweep(path, &read(path)?)
}

pub const CSV_HEADER: [&str; 13] = [
    "sweep_param",
    "value",
    "seed",
    "scheme",
    "objective_bits",
    "sum_rate_bps",
    "tau1_s",
    "tau2_s",
    "t1_s",
    "inner_iters",
    "outer_iters",
    "status",
    "wall_s",
];

/// Writes result rows. Wall-clock times are zeroed unless `timing` is set so
/// repeated runs produce identical files.
pub fn write_rows<W: Write>(out: W, rows: &[ResultRow], timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.sweep_param.clone(),
            r.value.to_string(),
            r.seed.to_string(),
            r.scheme.tag().to_string(),
            r.objective_bits.to_string(),
            r.sum_rate_bps.to_string(),
            r.tau1_s.to_string(),
            r.tau2_s.to_string(),
            r.t1_s.to_string(),
            r.inner_iters.to_string(),
            r.outer_iters.to_string(),
            r.status.clone(),
            if timing { r.wall_s.to_string() } else { "0".into() },
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            msg: msg.to_string(),
        };
        if rec.len() != CSV_HEADER.len() {
            return Err(bad("wrong column count"));
        }
        let num = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(CSV_HEADER[j]));
        let int = |j: usize| rec[j].parse::<usize>().map_err(|_| bad(CSV_HEADER[j]));
        rows.push(ResultRow {
            sweep_param: rec[0].to_string(),
            value: num(1)?,
            seed: rec[2].parse().map_err(|_| bad("seed"))?,
            scheme: Scheme::parse(&rec[3]).ok_or_else(|| bad("scheme"))?,
            objective_bits: num(4)?,
            sum_rate_bps: num(5)?,
            tau1_s: num(6)?,
            tau2_s: num(7)?,
            t1_s: num(8)?,
            inner_iters: int(9)?,
            outer_iters: int(10)?,
            status: rec[11].to_string(),
            wall_s: num(12)?,
        });
    }
    Ok(rows)
}

/// Iteration trace of a solve: one line per inner iteration of each stage,
/// then one line per `tau2` grid point.
pub fn write_trace<W: Write>(out: W, report: &P0Report) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["stage", "outer", "inner", "objective", "residual", "penalty"])?;
    for (stage, rep) in [("p3", &report.p3), ("p4", &report.p4)] {
        for e in &rep.trace {
            w.write_record([
                stage.to_string(),
                e.outer.to_string(),
                e.inner.to_string(),
                e.objective.to_string(),
                e.residual.to_string(),
                e.penalty.to_string(),
            ])?;
        }
    }
    for (j, g) in report.grid.iter().enumerate() {
        w.write_record([
            "tau2".to_string(),
            j.to_string(),
            "0".to_string(),
            g.objective.map(|v| v.to_string()).unwrap_or_else(|| "nan".into()),
            g.tau2.to_string(),
            "0".to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
