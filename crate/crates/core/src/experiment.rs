//! Experiment presets, parameter sweeps and artifact emission.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::attack::{non_injective_fault_count, AttackKind};
use crate::batchorder::{order_tournament, BatchScheme};
use crate::depgraph::build_tournament;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, rows_to_csv, MetricsRow};
use crate::netsim::{run, AttackConfig, SimConfig, SimResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    HonestEnv,
    AttackTrap,
    Reorder,
    NonInjective,
    MitigateRanked,
    MitigateBroadcast,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [
        PresetName::HonestEnv,
        PresetName::AttackTrap,
        PresetName::Reorder,
        PresetName::NonInjective,
        PresetName::MitigateRanked,
        PresetName::MitigateBroadcast,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::HonestEnv => "honest-env",
            PresetName::AttackTrap => "attack-trap",
            PresetName::Reorder => "reorder",
            PresetName::NonInjective => "non-injective",
            PresetName::MitigateRanked => "mitigate-ranked",
            PresetName::MitigateBroadcast => "mitigate-broadcast",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset `{s}`")))
    }
}

/// The swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    R,
    RInternal,
    P,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::R => "r",
            Axis::RInternal => "r_internal",
            Axis::P => "p",
        }
    }

    pub fn is_log(self) -> bool {
        !matches!(self, Axis::P)
    }

    pub fn apply(self, cfg: &mut SimConfig, x: f64) {
        match self {
            Axis::R => cfg.r = x,
            Axis::RInternal => cfg.r_internal = x,
            Axis::P => cfg.reorder_p = x,
        }
    }
}

/// The quantity plotted for a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Headline {
    CycleProbability,
    TxsInCycles,
    Trapped,
    SuccessRate,
    PairError,
}

impl Headline {
    pub fn as_str(self) -> &'static str {
        match self {
            Headline::CycleProbability => "cycle probability",
            Headline::TxsInCycles => "transactions in cycles",
            Headline::Trapped => "trapped honest transactions",
            Headline::SuccessRate => "attack success rate",
            Headline::PairError => "pair ordering error",
        }
    }

    pub fn value(self, s: &SummaryRow) -> Option<f64> {
        match self {
            Headline::CycleProbability => Some(s.cycle_probability),
            Headline::TxsInCycles => Some(s.txs_in_cycles.0),
            Headline::Trapped => s.trapped.map(|m| m.0),
            Headline::SuccessRate => s.success_all_rate,
            Headline::PairError => s.accuracy.map(|m| 1.0 - m.0),
        }
    }
}

/// A family of runs sharing a configuration template.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// When set, every trial yields one row labelled with it; otherwise one
    /// row per scheme.
    pub label: Option<String>,
    pub config: SimConfig,
    pub schemes: Vec<BatchScheme>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: PresetName,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub series: Vec<Series>,
    pub headline: Headline,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PresetOptions {
    pub trials: Option<usize>,
    pub points_per_decade: Option<usize>,
    pub n: Option<usize>,
    pub honest_count: Option<usize>,
    pub schemes: Option<Vec<BatchScheme>>,
}

/// `per_decade` log-spaced points from `lo` to `hi`, both included.
pub fn log_space(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let steps = ((b - a) * per_decade as f64).round() as usize;
    (0..=steps)
        .map(|i| {
            let x = 10f64.powf(a + (b - a) * i as f64 / steps.max(1) as f64);
            // Trim float noise so grid values print cleanly.
            format!("{x:.10e}").parse().expect("formatted float parses")
        })
        .collect()
}

fn reorder_values() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 20.0).collect()
}

impl Preset {
    pub fn build(name: PresetName, opts: &PresetOptions) -> Result<Preset> {
        let ppd = opts.points_per_decade.unwrap_or(20);
        let sizes = match opts.n {
            Some(n) => vec![n],
            None => vec![21, 101],
        };
        let n = opts.n.unwrap_or(21);
        let honest = |default: usize| opts.honest_count.unwrap_or(default);
        let schemes = opts.schemes.clone().unwrap_or_else(BatchScheme::all);
        let attack = |kind: AttackKind, clones: u32| AttackConfig { kind, pause: 10.0, clones, ..Default::default() };
        let preset = match name {
            PresetName::HonestEnv => Preset {
                name,
                axis: Axis::R,
                values: log_space(0.01, 1000.0, ppd),
                trials: opts.trials.unwrap_or(100),
                series: sizes
                    .iter()
                    .map(|&n| Series {
                        label: None,
                        config: SimConfig { n, honest_count: honest(100), ..Default::default() },
                        schemes: schemes.clone(),
                    })
                    .collect(),
                headline: Headline::CycleProbability,
            },
            PresetName::AttackTrap => Preset {
                name,
                axis: Axis::R,
                values: log_space(0.01, 1.0, ppd),
                trials: opts.trials.unwrap_or(100),
                series: sizes
                    .iter()
                    .flat_map(|&n| {
                        [10.0, 50.0].map(|pause| Series {
                            label: Some(format!("tau{pause}")),
                            config: SimConfig {
                                n,
                                honest_count: honest(100),
                                attack: Some(AttackConfig { pause, ..Default::default() }),
                                ..Default::default()
                            },
                            schemes: Vec::new(),
                        })
                    })
                    .collect(),
                headline: Headline::Trapped,
            },
            PresetName::Reorder => Preset {
                name,
                axis: Axis::P,
                values: reorder_values(),
                trials: opts.trials.unwrap_or(1000),
                series: [
                    ("two_tx", AttackKind::TwoTx, 1),
                    ("two_tx+clone", AttackKind::TwoTx, 2),
                    ("four_tx", AttackKind::FourTx, 1),
                    ("four_tx+clone", AttackKind::FourTx, 2),
                ]
                .into_iter()
                .map(|(label, kind, clones)| Series {
                    label: Some(label.into()),
                    config: SimConfig {
                        n,
                        r: 0.01,
                        honest_count: honest(20),
                        attack: Some(attack(kind, clones)),
                        ..Default::default()
                    },
                    schemes: Vec::new(),
                })
                .collect(),
                headline: Headline::SuccessRate,
            },
            PresetName::NonInjective => {
                let mut series = Vec::new();
                for &n in &sizes {
                    let f = non_injective_fault_count(n);
                    for (label, reversing) in [("truthful", 0), ("reversed", f)] {
                        series.push(Series {
                            label: Some(label.into()),
                            config: SimConfig {
                                n,
                                honest_count: honest(100),
                                reversing,
                                orderings_used: Some(n - f),
                                ..Default::default()
                            },
                            schemes: Vec::new(),
                        });
                    }
                }
                Preset {
                    name,
                    axis: Axis::R,
                    values: log_space(0.01, 100.0, ppd),
                    trials: opts.trials.unwrap_or(100),
                    series,
                    headline: Headline::TxsInCycles,
                }
            }
            PresetName::MitigateRanked => Preset {
                name,
                axis: Axis::R,
                values: log_space(0.001, 1.0, ppd),
                trials: opts.trials.unwrap_or(100),
                series: vec![Series {
                    label: None,
                    config: SimConfig {
                        n,
                        honest_count: honest(20),
                        attack: Some(attack(AttackKind::TwoTx, 1)),
                        key_pool: 4,
                        ..Default::default()
                    },
                    schemes,
                }],
                headline: Headline::PairError,
            },
            PresetName::MitigateBroadcast => {
                let base = SimConfig { n, r: 0.1, honest_count: honest(20), ..Default::default() };
                let attacked = SimConfig { attack: Some(attack(AttackKind::TwoTx, 1)), ..base.clone() };
                Preset {
                    name,
                    axis: Axis::RInternal,
                    values: log_space(0.01, 1000.0, ppd),
                    trials: opts.trials.unwrap_or(100),
                    series: vec![
                        Series {
                            label: Some("honest+broadcast".into()),
                            config: SimConfig { broadcast: true, ..base },
                            schemes: Vec::new(),
                        },
                        Series { label: Some("attack".into()), config: attacked.clone(), schemes: Vec::new() },
                        Series {
                            label: Some("attack+broadcast".into()),
                            config: SimConfig { broadcast: true, ..attacked },
                            schemes: Vec::new(),
                        },
                    ],
                    headline: Headline::Trapped,
                }
            }
        };
        preset.validate()?;
        Ok(preset)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials per point must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep has no points".into()));
        }
        if self.values.iter().any(|x| !x.is_finite()) || self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("sweep values must be finite and strictly increasing".into()));
        }
        for s in &self.series {
            for &x in &self.values {
                let mut cfg = s.config.clone();
                self.axis.apply(&mut cfg, x);
                cfg.validate()?;
            }
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of one trial at one grid point. Series share seeds so they can be
/// compared run by run.
pub fn trial_seed(base: u64, point: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ point as u64) ^ trial as u64)
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub const SUMMARY_CSV_HEADER: &str = "scheme,n,tau,axis,x,runs,cycle_probability,cycles_mean,cycles_std,\
txs_in_cycles_mean,txs_in_cycles_std,trapped_mean,trapped_std,success_any_rate,success_all_rate,\
accuracy_mean,accuracy_std,accuracy_runs";

/// Aggregate over the trials of one grid point of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: String,
    pub n: usize,
    pub tau: Option<f64>,
    pub axis: Axis,
    pub x: f64,
    pub runs: usize,
    pub cycle_probability: f64,
    pub cycles: (f64, f64),
    pub txs_in_cycles: (f64, f64),
    pub trapped: Option<(f64, f64)>,
    pub success_any_rate: Option<f64>,
    pub success_all_rate: Option<f64>,
    pub accuracy: Option<(f64, f64)>,
    pub accuracy_runs: usize,
}

impl SummaryRow {
    fn from_rows(axis: Axis, x: f64, rows: &[&MetricsRow]) -> SummaryRow {
        let first = rows[0];
        let col = |f: &dyn Fn(&MetricsRow) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(|r| f(r)).collect() };
        let rate = |xs: Vec<f64>| (!xs.is_empty()).then(|| mean_std(&xs).0);
        let cycles = col(&|r| Some(r.cycles as f64));
        let trapped = col(&|r| r.trapped.map(|t| t as f64));
        let accuracy = col(&|r| r.accuracy);
        SummaryRow {
            scheme: first.scheme.clone(),
            n: first.n,
            tau: first.tau,
            axis,
            x,
            runs: rows.len(),
            cycle_probability: rows.iter().filter(|r| r.cycles > 0).count() as f64 / rows.len() as f64,
            cycles: mean_std(&cycles),
            txs_in_cycles: mean_std(&col(&|r| Some(r.txs_in_cycles as f64))),
            trapped: (!trapped.is_empty()).then(|| mean_std(&trapped)),
            success_any_rate: rate(col(&|r| r.success_any.map(|b| b as u8 as f64))),
            success_all_rate: rate(col(&|r| r.success_all.map(|b| b as u8 as f64))),
            accuracy_runs: accuracy.len(),
            accuracy: (!accuracy.is_empty()).then(|| mean_std(&accuracy)),
        }
    }

    pub fn to_record(&self) -> String {
        fn o(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.n,
            o(self.tau),
            self.axis.as_str(),
            self.x,
            self.runs,
            self.cycle_probability,
            self.cycles.0,
            self.cycles.1,
            self.txs_in_cycles.0,
            self.txs_in_cycles.1,
            o(self.trapped.map(|m| m.0)),
            o(self.trapped.map(|m| m.1)),
            o(self.success_any_rate),
            o(self.success_all_rate),
            o(self.accuracy.map(|m| m.0)),
            o(self.accuracy.map(|m| m.1)),
            self.accuracy_runs,
        )
    }
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_record());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetOutput {
    pub rows: Vec<MetricsRow>,
    pub summary: Vec<SummaryRow>,
}

impl PresetOutput {
    /// Summary rows whose scheme column equals `label`.
    pub fn series<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a SummaryRow> + 'a {
        self.summary.iter().filter(move |s| s.scheme == label)
    }
}

pub fn run_preset(preset: &Preset, seed: u64) -> Result<PresetOutput> {
    preset.validate()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for series in &preset.series {
        for (point, &x) in preset.values.iter().enumerate() {
            let start = rows.len();
            for trial in 0..preset.trials {
                let mut cfg = series.config.clone();
                preset.axis.apply(&mut cfg, x);
                cfg.seed = trial_seed(seed, point, trial);
                let result = run(&cfg)?;
                let metrics = evaluate(&result, &series.schemes)?;
                rows.extend(MetricsRow::from_trial(trial, &result, &metrics, series.label.as_deref()));
            }
            // Group this point's rows by scheme, keeping first-seen order.
            let mut groups: Vec<(String, Vec<&MetricsRow>)> = Vec::new();
            let mut index: HashMap<&str, usize> = HashMap::new();
            for row in &rows[start..] {
                let i = *index.entry(row.scheme.as_str()).or_insert_with(|| {
                    groups.push((row.scheme.clone(), Vec::new()));
                    groups.len() - 1
                });
                groups[i].1.push(row);
            }
            summary.extend(groups.iter().map(|(_, g)| SummaryRow::from_rows(preset.axis, x, g)));
        }
    }
    Ok(PresetOutput { rows, summary })
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Line chart of the preset's headline quantity, one line per series and
/// scheme.
pub fn render_svg(preset: &Preset, summary: &[SummaryRow]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 170.0, 20.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let tx = |x: f64| if preset.axis.is_log() { x.log10() } else { x };

    let mut lines: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for s in summary {
        let Some(y) = preset.headline.value(s).filter(|y| y.is_finite()) else {
            continue;
        };
        let key = match s.tau {
            Some(t) => format!("{} n={} tau={}", s.scheme, s.n, t),
            None => format!("{} n={}", s.scheme, s.n),
        };
        match lines.iter_mut().find(|l| l.0 == key) {
            Some(l) => l.1.push((tx(s.x), y)),
            None => lines.push((key, vec![(tx(s.x), y)])),
        }
    }
    let xs = preset.values.iter().map(|&x| tx(x));
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let ys = lines.iter().flat_map(|l| l.1.iter().map(|p| p.1));
    let y1 = ys.fold(0.0f64, f64::max).max(1e-9);
    let x_span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let sx = |x: f64| left + (x - x0) / x_span * pw;
    let sy = |y: f64| top + ph - y / y1 * ph;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for i in 0..=4 {
        let y = y1 * i as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, left - 4.0, sy(y) + 4.0, fmt_tick(y));
    }
    if preset.axis.is_log() {
        for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
            let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">1e{d}</text>"#, sx(d as f64), top + ph + 15.0);
        }
    } else {
        for &x in &preset.values {
            let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">{x}</text>"#, sx(x), top + ph + 15.0);
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 12.0,
        preset.axis.as_str()
    );
    let _ = writeln!(svg, r#"<text x="{left}" y="12">{}: {}</text>"#, preset.name, preset.headline.as_str());
    for (i, (key, pts)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, points.join(" "));
        let ly = top + 14.0 * i as f64 + 10.0;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, w - right + 10.0, w - right + 28.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{key}</text>"#, w - right + 32.0, ly + 4.0);
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(y: f64) -> String {
    if y >= 10.0 {
        format!("{y:.0}")
    } else {
        format!("{y:.2}")
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Writes `<name>.csv`, `<name>_summary.csv` and `<name>.svg`.
pub fn write_preset(preset: &Preset, output: &PresetOutput, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let name = preset.name.as_str();
    Ok(vec![
        write_file(out_dir, &format!("{name}.csv"), &rows_to_csv(&output.rows))?,
        write_file(out_dir, &format!("{name}_summary.csv"), &summary_to_csv(&output.summary))?,
        write_file(out_dir, &format!("{name}.svg"), &render_svg(preset, &output.summary))?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleOutput {
    pub result: SimResult,
    pub final_orders: Vec<(BatchScheme, Vec<crate::model::TxId>)>,
    pub files: Vec<PathBuf>,
}

/// Runs one simulation and writes its orderings, delivery log, transaction
/// registry, dependency graph, metrics and one final order per scheme.
pub fn run_single(config: &SimConfig, schemes: &[BatchScheme], out_dir: &Path) -> Result<SingleOutput> {
    let result = run(config)?;
    ensure_dir(out_dir)?;
    let t = build_tournament(result.leader_orderings())?;
    let mut files = vec![
        write_file(out_dir, "orderings.csv", &result.orderings_csv())?,
        write_file(out_dir, "delivery_log.csv", &result.delivery_log_csv())?,
        write_file(out_dir, "transactions.csv", &result.registry.to_csv())?,
        write_file(out_dir, "tournament.dot", &t.to_dot(Some(&result.registry)))?,
    ];
    let metrics = evaluate(&result, schemes)?;
    files.push(write_file(out_dir, "metrics.csv", &rows_to_csv(&MetricsRow::from_trial(0, &result, &metrics, None)))?);
    let mut final_orders = Vec::with_capacity(schemes.len());
    for scheme in schemes {
        let order = order_tournament(&t, scheme, Some(&result.registry))?;
        let mut text = String::new();
        for id in &order {
            let _ = writeln!(text, "{id}");
        }
        files.push(write_file(out_dir, &format!("final_{scheme}.txt"), &text)?);
        final_orders.push((scheme.clone(), order));
    }
    Ok(SingleOutput { result, final_orders, files })
}

/// Settings read from a configuration file: a `[sim]` table with simulation
/// parameters (and an optional `[sim.attack]` table) and a `[run]` table.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub sim: SimConfig,
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub schemes: Option<Vec<String>>,
    pub trials: Option<usize>,
    pub points_per_decade: Option<usize>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        FileConfig::parse(&text)
    }
}

pub fn parse_schemes<S: AsRef<str>>(names: &[S]) -> Result<Vec<BatchScheme>> {
    names.iter().map(|s| s.as_ref().trim().parse()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_space_hits_decades() {
        let v = log_space(0.01, 1000.0, 20);
        assert_eq!(v.len(), 101);
        assert_eq!(v[0], 0.01);
        assert_eq!(v[20], 0.1);
        assert_eq!(v[40], 1.0);
        assert_eq!(v[100], 1000.0);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_space(0.001, 1.0, 1), vec![0.001, 0.01, 0.1, 1.0]);
    }

    #[test]
    fn preset_names_round_trip() {
        for p in PresetName::ALL {
            assert_eq!(p.as_str().parse::<PresetName>().unwrap(), p);
        }
        assert!("fig9".parse::<PresetName>().is_err());
    }

    #[test]
    fn presets_build_with_defaults() {
        let d = PresetOptions::default();
        let honest = Preset::build(PresetName::HonestEnv, &d).unwrap();
        assert_eq!(honest.trials, 100);
        assert_eq!(honest.series.iter().map(|s| s.config.n).collect::<Vec<_>>(), vec![21, 101]);
        assert_eq!(honest.values.len(), 101);
        let reorder = Preset::build(PresetName::Reorder, &d).unwrap();
        assert_eq!(reorder.trials, 1000);
        assert_eq!(reorder.values.len(), 11);
        assert_eq!(reorder.values[10], 0.5);
        let non = Preset::build(PresetName::NonInjective, &PresetOptions { n: Some(21), ..d.clone() }).unwrap();
        assert_eq!(non.series[1].config.reversing, 4);
        assert_eq!(non.series[1].config.orderings_used, Some(17));
        let attack = Preset::build(PresetName::AttackTrap, &d).unwrap();
        assert_eq!(attack.series.len(), 4);
        for name in PresetName::ALL {
            Preset::build(name, &d).unwrap();
        }
    }

    #[test]
    fn invalid_presets_are_rejected() {
        let zero = PresetOptions { trials: Some(0), ..Default::default() };
        assert!(Preset::build(PresetName::Reorder, &zero).is_err());
        let small = PresetOptions { n: Some(3), ..Default::default() };
        assert!(Preset::build(PresetName::Reorder, &small).is_err(), "four-tx needs n >= 4");
        let mut p = Preset::build(PresetName::MitigateRanked, &PresetOptions::default()).unwrap();
        p.values = vec![0.1, 0.1];
        assert!(p.validate().is_err());
        p.values = vec![f64::NAN];
        assert!(p.validate().is_err());
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for point in 0..50 {
            for trial in 0..200 {
                assert!(seen.insert(trial_seed(9, point, trial)));
            }
        }
        assert_ne!(trial_seed(1, 0, 0), trial_seed(2, 0, 0));
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn small_preset_runs_and_summarizes() {
        let mut p = Preset::build(PresetName::MitigateBroadcast, &PresetOptions { trials: Some(3), ..Default::default() }).unwrap();
        p.values = vec![0.1, 10.0];
        let out = run_preset(&p, 5).unwrap();
        assert_eq!(out.rows.len(), 3 * 2 * 3);
        assert_eq!(out.summary.len(), 3 * 2);
        assert_eq!(out.series("attack").count(), 2);
        assert!(out.series("honest+broadcast").all(|s| s.trapped.is_none()));
        let svg = render_svg(&p, &out.summary);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(summary_to_csv(&out.summary).lines().next(), Some(SUMMARY_CSV_HEADER));
    }

    #[test]
    fn file_config_parses_sections() {
        let cfg = FileConfig::parse(
            r#"
            [sim]
            n = 7
            r = 0.5
            broadcast = true
            [sim.attack]
            kind = "two_tx"
            pause = 20.0
            [run]
            schemes = ["ranked-pairs", "alphabetical"]
            trials = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.sim.n, 7);
        assert_eq!(cfg.sim.attack.as_ref().unwrap().pause, 20.0);
        assert_eq!(parse_schemes(cfg.run.schemes.as_ref().unwrap()).unwrap().len(), 2);
        assert_eq!(cfg.run.trials, Some(4));
        assert!(matches!(FileConfig::parse("[sim]\nwat = 1"), Err(Error::Parse(_))));
    }
}
