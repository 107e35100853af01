//! Sweep grids and their tabular output.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{parse_component, AxisName, RunConfig, SeriesSpec};
use super::eval::{evaluate, formula_for, formula_tags, Point};
use crate::error::{Error, Result};
use crate::susceptibility::ChiResult;

/// One `chi{order}_{indices}` column pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Channel {
    pub order: u8,
    pub indices: Vec<usize>,
}

impl Channel {
    pub fn name(&self) -> String {
        let idx: String = self.indices.iter().map(|&i| ['x', 'y', 'z'][i]).collect();
        format!("chi{}_{idx}", self.order)
    }

    fn pick(&self, r: &ChiResult) -> Option<(f64, f64)> {
        let z = match self.order {
            0 => r.chi0.as_ref()?[self.indices[0]],
            1 => r.chi1.as_ref()?[[self.indices[0], self.indices[1]]],
            _ => r.chi2.as_ref()?[[self.indices[0], self.indices[1], self.indices[2]]],
        };
        Some((z.re, z.im))
    }
}

/// Channels for the requested orders; components of length `order + 1` apply to that order,
/// otherwise the all-`x` component is used.
pub fn channels(orders: &[u8], components: &[String]) -> Result<Vec<Channel>> {
    let parsed = components.iter().map(|c| parse_component(c)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for &order in orders {
        let len = order as usize + 1;
        let mut picked: Vec<Vec<usize>> = parsed.iter().filter(|c| c.len() == len).cloned().collect();
        if picked.is_empty() {
            picked.push(vec![0; len]);
        }
        out.extend(picked.into_iter().map(|indices| Channel { order, indices }));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub series: String,
    pub axes: Vec<f64>,
    /// `(re, im)` per channel; `None` on failed rows.
    pub values: Vec<Option<(f64, f64)>>,
    pub formula: String,
    /// Error code, empty on success.
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub axes: Vec<String>,
    pub channels: Vec<String>,
    pub rows: Vec<Row>,
}

fn axis_values(cfg: &RunConfig) -> Vec<(AxisName, Vec<f64>)> {
    cfg.sweep.axes.iter().map(|a| (a.name, a.values())).collect()
}

fn grid(axes: &[(AxisName, Vec<f64>)]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for (_, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Points in output order: series, then the first axis, then the second.
pub fn sweep_points(cfg: &RunConfig) -> Result<Vec<(String, Vec<f64>, Point)>> {
    let axes = axis_values(cfg);
    let series = if cfg.sweep.series.is_empty() { vec![SeriesSpec::default()] } else { cfg.sweep.series.clone() };
    let base = Point { system: cfg.system.clone(), state: cfg.state.clone(), eval: cfg.evaluation.clone() };
    let mut out = Vec::new();
    for s in &series {
        let mut point = base.clone();
        point.apply_series(s);
        for &o in &point.eval.orders {
            formula_for(o, point.eval.formula).map_err(|e| match e {
                Error::Config(m) if !s.label.is_empty() => Error::Config(format!("series '{}': {m}", s.label)),
                other => other,
            })?;
        }
        for values in grid(&axes) {
            let mut p = point.clone();
            for ((name, _), &v) in axes.iter().zip(&values) {
                p.set_axis(*name, v);
            }
            out.push((s.label.clone(), values, p));
        }
    }
    Ok(out)
}

/// Evaluates the whole grid; failed points become error rows.
pub fn run_sweep(cfg: &RunConfig) -> Result<Table> {
    cfg.validate()?;
    let chans = channels(&cfg.evaluation.orders, &cfg.evaluation.components)?;
    let points = sweep_points(cfg)?;
    let rows: Vec<Row> = points
        .into_par_iter()
        .map(|(series, axes, point)| {
            let formula = formula_tags(&point);
            match evaluate(&point) {
                Ok(r) => Row { series, axes, values: chans.iter().map(|c| c.pick(&r)).collect(), formula, error: String::new() },
                Err(e) => Row { series, axes, values: vec![None; chans.len()], formula, error: e.code().to_string() },
            }
        })
        .collect();
    Ok(Table {
        axes: cfg.sweep.axes.iter().map(|a| a.name.tag().to_string()).collect(),
        channels: chans.iter().map(Channel::name).collect(),
        rows,
    })
}

/// One-row table for an already evaluated point.
pub fn point_table(cfg: &RunConfig, point: &Point, result: &ChiResult) -> Result<Table> {
    let chans = channels(&cfg.evaluation.orders, &cfg.evaluation.components)?;
    let row = Row {
        series: String::new(),
        axes: Vec::new(),
        values: chans.iter().map(|c| c.pick(result)).collect(),
        formula: formula_tags(point),
        error: String::new(),
    };
    Ok(Table { axes: Vec::new(), channels: chans.iter().map(Channel::name).collect(), rows: vec![row] })
}

fn cell(v: f64) -> String {
    // Shortest string that parses back to the same bits; exponent form at the extremes.
    format!("{v:?}")
}

fn parse_cell(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Config(format!("bad number '{s}' in column {what}")))
}

impl Table {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["series".to_string()];
        h.extend(self.axes.iter().cloned());
        for c in &self.channels {
            h.push(format!("{c}_re"));
            h.push(format!("{c}_im"));
        }
        h.push("formula".into());
        h.push("error".into());
        h
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(self.header()).map_err(io)?;
        for r in &self.rows {
            let mut rec = vec![r.series.clone()];
            rec.extend(r.axes.iter().map(|&v| cell(v)));
            for v in &r.values {
                match v {
                    Some((re, im)) => {
                        rec.push(cell(*re));
                        rec.push(cell(*im));
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            rec.push(r.formula.clone());
            rec.push(r.error.clone());
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Config(format!("table CSV: {m}"));
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
        let n = header.len();
        if n < 3 || header[0] != "series" || header[n - 2] != "formula" || header[n - 1] != "error" {
            return Err(bad("expected series, axes, channels, formula, error".into()));
        }
        let first_chan = header.iter().position(|h| h.starts_with("chi")).unwrap_or(n - 2);
        let axes = header[1..first_chan].to_vec();
        let chan_cols = &header[first_chan..n - 2];
        if chan_cols.len() % 2 != 0 {
            return Err(bad("channel columns must come in re/im pairs".into()));
        }
        let mut channels = Vec::new();
        for pair in chan_cols.chunks(2) {
            let (re, im) = (pair[0].strip_suffix("_re"), pair[1].strip_suffix("_im"));
            match (re, im) {
                (Some(a), Some(b)) if a == b => channels.push(a.to_string()),
                _ => return Err(bad(format!("unpaired columns {} / {}", pair[0], pair[1]))),
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != n {
                return Err(bad(format!("row has {} fields, header has {n}", rec.len())));
            }
            let axes_v = (1..first_chan).map(|i| parse_cell(&rec[i], &header[i])).collect::<Result<Vec<_>>>()?;
            let mut values = Vec::new();
            for k in 0..channels.len() {
                let (i, j) = (first_chan + 2 * k, first_chan + 2 * k + 1);
                values.push(match (&rec[i], &rec[j]) {
                    ("", "") => None,
                    (a, b) => Some((parse_cell(a, &header[i])?, parse_cell(b, &header[j])?)),
                });
            }
            rows.push(Row {
                series: rec[0].to_string(),
                axes: axes_v,
                values,
                formula: rec[n - 2].to_string(),
                error: rec[n - 1].to_string(),
            });
        }
        Ok(Table { axes, channels, rows })
    }

    /// Same data as the CSV; non-finite values become `null`.
    pub fn to_json(&self) -> Result<String> {
        let finite = |v: f64| v.is_finite().then_some(v);
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let axes: serde_json::Map<String, serde_json::Value> =
                    self.axes.iter().zip(&r.axes).map(|(a, &v)| (a.clone(), finite(v).into())).collect();
                let values: serde_json::Map<String, serde_json::Value> = self
                    .channels
                    .iter()
                    .zip(&r.values)
                    .map(|(c, v)| {
                        let val = match v {
                            Some((re, im)) => serde_json::json!({ "re": finite(*re), "im": finite(*im) }),
                            None => serde_json::Value::Null,
                        };
                        (c.clone(), val)
                    })
                    .collect();
                serde_json::json!({
                    "series": r.series,
                    "axes": axes,
                    "values": values,
                    "formula": r.formula,
                    "error": if r.error.is_empty() { serde_json::Value::Null } else { r.error.clone().into() },
                })
            })
            .collect();
        let doc = serde_json::json!({ "axes": self.axes, "channels": self.channels, "rows": rows });
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))
    }

    /// Distinct series labels in first-seen order.
    pub fn series(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.series) {
                out.push(r.series.clone());
            }
        }
        out
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::{AxisScale, AxisSpec};

    fn sample() -> Table {
        Table {
            axes: vec!["detuning".into()],
            channels: vec!["chi1_xx".into()],
            rows: vec![
                Row { series: "MS, q".into(), axes: vec![0.1 + 0.2], values: vec![Some((1e-300, -2.5e17))], formula: "QuantumGeneral".into(), error: String::new() },
                Row { series: "MM".into(), axes: vec![-0.0], values: vec![None], formula: "QuantumGeneral".into(), error: "E3".into() },
                Row { series: "\"q\"".into(), axes: vec![f64::MIN_POSITIVE], values: vec![Some((f64::INFINITY, 5e-324))], formula: "x".into(), error: String::new() },
            ],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let text = t.to_csv().unwrap();
        let back = Table::from_csv(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_csv().unwrap(), text);
        assert!(back.rows[1].axes[0].is_sign_negative());
    }

    #[test]
    fn header_layout() {
        let h = sample().header();
        assert_eq!(h, ["series", "detuning", "chi1_xx_re", "chi1_xx_im", "formula", "error"]);
    }

    #[test]
    fn default_channels() {
        let c = channels(&[0, 1, 2], &["yy".into()]).unwrap();
        let names: Vec<String> = c.iter().map(Channel::name).collect();
        assert_eq!(names, ["chi0_x", "chi1_yy", "chi2_xxx"]);
    }

    #[test]
    fn sweep_marks_failed_rows_and_continues() {
        let mut cfg = RunConfig::default();
        cfg.sweep.axes = vec![AxisSpec { name: AxisName::FockN, start: 0.0, stop: 2.0, count: 3, scale: AxisScale::Linear }];
        cfg.state.field = crate::cli::config::FieldKind::Fock;
        let t = run_sweep(&cfg).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.iter().all(|r| !r.error.is_empty() && r.values[0].is_none()));
        cfg.evaluation.formula = Some(crate::susceptibility::Formula::FockLimit);
        let t = run_sweep(&cfg).unwrap();
        assert!(!t.rows[0].error.is_empty(), "n = 0 has no lower neighbour");
        assert!(t.rows[1].error.is_empty() && t.rows[2].error.is_empty());
    }
}
