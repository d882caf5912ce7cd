//! Plot-ready summary CSVs aggregated across Monte Carlo trials.
//!
//! Every file has columns `<x>,series,mean,ci_low,ci_high`, where `<x>` names
//! the independent variable (`t`, `method` or `jitter_std_deg`) and the interval
//! is `mean ± 1.96 s / sqrt(n)` over trials (zero width for one trial).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::Jitter;
use super::runner::MetricsRow;
use crate::classifier::ModelKind;
use crate::error::{Error, Result};
use crate::fusion::FusionKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Figure {
    /// OBF accuracy over time, one series per model and radar count.
    AccuracyOverTime,
    /// Final accuracy per fusion rule at the largest radar count, plus the
    /// single-radar baseline.
    FinalAccuracyByRule,
    /// Accuracy over time per fusion rule at the largest radar count.
    RuleAccuracyOverTime,
    /// Final accuracy against azimuth-jitter standard deviation.
    FinalAccuracyVsJitter,
}

impl Figure {
    pub const ALL: [Figure; 4] = [
        Figure::AccuracyOverTime,
        Figure::FinalAccuracyByRule,
        Figure::RuleAccuracyOverTime,
        Figure::FinalAccuracyVsJitter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::AccuracyOverTime => "fig5",
            Figure::FinalAccuracyByRule => "fig6",
            Figure::RuleAccuracyOverTime => "fig7",
            Figure::FinalAccuracyVsJitter => "fig8",
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                Error::Config(format!("unknown figure {s:?} (fig5 | fig6 | fig7 | fig8)"))
            })
    }
}

/// Mean and 95% normal-approximation interval of `v`.
pub fn mean_ci(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, mean, mean);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

/// Totally ordered f64 for use as a map key.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Real(f64);

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

type JitKey = (Real, Real);

fn jit_key(j: Jitter) -> JitKey {
    (Real(j.az_deg), Real(j.el_deg))
}

fn jit_of(k: JitKey) -> Jitter {
    Jitter {
        az_deg: k.0 .0,
        el_deg: k.1 .0,
    }
}

/// Sweep axes present in a set of rows.
struct Axes {
    models: Vec<ModelKind>,
    rules: Vec<FusionKind>,
    radars: Vec<usize>,
    snrs: Vec<f64>,
    jitters: Vec<Jitter>,
    steps: usize,
}

fn axes(rows: &[MetricsRow]) -> Result<Axes> {
    if rows.is_empty() {
        return Err(Error::MissingData("metrics file has no rows".into()));
    }
    let steps = rows[0].accuracy.len();
    if steps == 0 || rows.iter().any(|r| r.accuracy.len() != steps) {
        return Err(Error::Shape(
            "metrics rows differ in trajectory length".into(),
        ));
    }
    let mut models: Vec<_> = rows.iter().map(|r| r.model).collect();
    let mut rules: Vec<_> = rows.iter().map(|r| r.rule).collect();
    let mut radars: Vec<_> = rows.iter().map(|r| r.radars).collect();
    let mut snrs: Vec<_> = rows.iter().map(|r| Real(r.snr_db)).collect();
    let mut jitters: Vec<_> = rows.iter().map(|r| jit_key(r.jitter)).collect();
    models.sort();
    models.dedup();
    rules.sort();
    rules.dedup();
    radars.sort();
    radars.dedup();
    snrs.sort();
    snrs.dedup();
    jitters.sort();
    jitters.dedup();
    Ok(Axes {
        models,
        rules,
        radars,
        snrs: snrs.into_iter().map(|s| s.0).collect(),
        jitters: jitters.into_iter().map(jit_of).collect(),
        steps,
    })
}

/// Rows of one (model, rule, radars, snr, jitter) cell, indexed by trial.
struct Index<'a> {
    cells: BTreeMap<(ModelKind, FusionKind, usize, Real, JitKey), Vec<&'a MetricsRow>>,
}

impl<'a> Index<'a> {
    fn new(rows: &'a [MetricsRow]) -> Self {
        let mut cells: BTreeMap<_, Vec<&MetricsRow>> = BTreeMap::new();
        for r in rows {
            cells
                .entry((r.model, r.rule, r.radars, Real(r.snr_db), jit_key(r.jitter)))
                .or_default()
                .push(r);
        }
        Self { cells }
    }

    fn get(
        &self,
        model: ModelKind,
        rule: FusionKind,
        radars: usize,
        snr: f64,
        jitter: Jitter,
    ) -> Result<&[&'a MetricsRow]> {
        self.cells
            .get(&(model, rule, radars, Real(snr), jit_key(jitter)))
            .map(|v| &v[..])
            .ok_or_else(|| {
                Error::MissingData(format!(
                    "no rows for model={model} rule={rule} radars={radars} snr_db={snr} jitter_deg={}",
                    jitter.label()
                ))
            })
    }
}

struct Table {
    x_name: &'static str,
    body: String,
}

impl Table {
    fn new(x_name: &'static str) -> Self {
        Self {
            x_name,
            body: String::new(),
        }
    }

    fn push(&mut self, x: &str, series: &str, values: &[f64]) {
        let (m, lo, hi) = mean_ci(values);
        let _ = writeln!(self.body, "{x},{series},{m:.6},{lo:.6},{hi:.6}");
    }

    fn render(&self) -> String {
        format!("{},series,mean,ci_low,ci_high\n{}", self.x_name, self.body)
    }
}

fn panel_suffix(snr: f64, jitter: Jitter) -> String {
    format!("snr{snr}_jit{}", jitter.label())
}

/// Rule used for the single-radar baseline; at one radar OBF, soft and max
/// all reduce to the classifier output.
fn single_rule(axes: &Axes) -> Result<FusionKind> {
    [FusionKind::Obf, FusionKind::Soft, FusionKind::Max]
        .into_iter()
        .find(|r| axes.rules.contains(r))
        .ok_or_else(|| {
            Error::MissingData("single-radar baseline needs rule obf, soft or max".into())
        })
}

fn largest_array(axes: &Axes, figure: Figure) -> Result<usize> {
    let j = *axes.radars.last().expect("non-empty");
    if j < 2 || !axes.radars.contains(&1) {
        return Err(Error::MissingData(format!(
            "{} needs rows for radars=1 and for a multi-radar array",
            figure.name()
        )));
    }
    Ok(j)
}

fn over_time(table: &mut Table, series: &str, cell: &[&MetricsRow], steps: usize) {
    for t in 0..steps {
        let v: Vec<f64> = cell.iter().map(|r| r.accuracy[t]).collect();
        table.push(&(t + 1).to_string(), series, &v);
    }
}

fn finals(cell: &[&MetricsRow]) -> Vec<f64> {
    cell.iter().map(|r| r.final_accuracy()).collect()
}

/// Builds the summary tables of `figure` as (file name, contents) pairs.
pub fn plot_tables(rows: &[MetricsRow], figure: Figure) -> Result<Vec<(String, String)>> {
    let axes = axes(rows)?;
    let index = Index::new(rows);
    let mut out = Vec::new();
    match figure {
        Figure::AccuracyOverTime => {
            if !axes.rules.contains(&FusionKind::Obf) {
                return Err(Error::MissingData("fig5 needs rows with rule=obf".into()));
            }
            for &snr in &axes.snrs {
                for &jit in &axes.jitters {
                    let mut table = Table::new("t");
                    for &m in &axes.models {
                        for &j in &axes.radars {
                            let cell = index.get(m, FusionKind::Obf, j, snr, jit)?;
                            over_time(&mut table, &format!("{m}_J{j}"), cell, axes.steps);
                        }
                    }
                    out.push((
                        format!("fig5_{}.csv", panel_suffix(snr, jit)),
                        table.render(),
                    ));
                }
            }
        }
        Figure::FinalAccuracyByRule => {
            let jmax = largest_array(&axes, figure)?;
            let single = single_rule(&axes)?;
            for &snr in &axes.snrs {
                for &jit in &axes.jitters {
                    let mut table = Table::new("method");
                    for &m in &axes.models {
                        for &rule in &axes.rules {
                            let cell = index.get(m, rule, jmax, snr, jit)?;
                            table.push(rule.name(), m.name(), &finals(cell));
                        }
                        let cell = index.get(m, single, 1, snr, jit)?;
                        table.push("single", m.name(), &finals(cell));
                    }
                    out.push((
                        format!("fig6_{}.csv", panel_suffix(snr, jit)),
                        table.render(),
                    ));
                }
            }
        }
        Figure::RuleAccuracyOverTime => {
            let jmax = largest_array(&axes, figure)?;
            let single = single_rule(&axes)?;
            for &snr in &axes.snrs {
                for &jit in &axes.jitters {
                    for &m in &axes.models {
                        let mut table = Table::new("t");
                        for &rule in &axes.rules {
                            let cell = index.get(m, rule, jmax, snr, jit)?;
                            over_time(&mut table, rule.name(), cell, axes.steps);
                        }
                        let cell = index.get(m, single, 1, snr, jit)?;
                        over_time(&mut table, "single", cell, axes.steps);
                        out.push((
                            format!("fig7_{}_{m}.csv", panel_suffix(snr, jit)),
                            table.render(),
                        ));
                    }
                }
            }
        }
        Figure::FinalAccuracyVsJitter => {
            let jmax = *axes.radars.last().expect("non-empty");
            for &snr in &axes.snrs {
                let mut table = Table::new("jitter_std_deg");
                for &m in &axes.models {
                    for &rule in &axes.rules {
                        for &jit in &axes.jitters {
                            let cell = index.get(m, rule, jmax, snr, jit)?;
                            let x = format!("{:.6}", jit.az_std_deg());
                            table.push(&x, &format!("{m}_{rule}"), &finals(cell));
                        }
                    }
                }
                out.push((format!("fig8_snr{snr}.csv"), table.render()));
            }
        }
    }
    Ok(out)
}

/// Writes the summary CSVs of `figure` into `dir`, returning their paths.
pub fn emit_plot_data(rows: &[MetricsRow], figure: Figure, dir: &Path) -> Result<Vec<PathBuf>> {
    let tables = plot_tables(rows, figure)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    tables
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
