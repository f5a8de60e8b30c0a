//! Monte-Carlo experiment harness: runs the design schemes over seeded
//! channel realizations and emits CSV tables.
//!
//! Within one realization every scheme sees the identical channel draw
//! (the channel seed depends on the dimensions and realization index only),
//! so per-realization comparisons are paired. Records are produced in a
//! canonical order (grid-major, realization-minor, schemes last) no matter
//! how the work is scheduled; with the `parallel` feature the realizations
//! fan out over the rayon pool (bounded by `RAYON_NUM_THREADS`), without it
//! they run sequentially, and both produce bit-identical output.
//!
//! Wall-clock timing is off by default so that two runs of the same
//! configuration serialize to byte-identical files; `measure_time` fills
//! the `wall_ms` column for profiling runs instead.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{sample_channels, PropagationConfig, Seed};
use crate::error::{Error, Result};
use crate::ls_solver::ls_design;
use crate::quasi_newton::{newton_ls_design, newton_random_design, OptimizerConfig};
use crate::scattering::DEFAULT_Z0;
use crate::spectral::{decompose, upper_bound};
use crate::topology::ArchitectureSpec;
use crate::SystemDims;

/// Named experiment families; `Custom` is whatever the config says.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig3,
    Fig4,
    Fig5,
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Custom => "custom",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            "fig5" => Ok(Preset::Fig5),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::Parse(format!("unknown preset {other:?}"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Design schemes the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Closed-form least squares on the configured stem size.
    Ls,
    /// Quasi-Newton refinement from the least-squares point.
    NewtonLs,
    /// Quasi-Newton from a random starting point.
    NewtonRandom,
    /// Quasi-Newton from least squares on the fully connected architecture,
    /// independent of the configured stem size.
    NewtonLsFully,
    /// The SVD performance upper bound, independent of the architecture.
    UpperBound,
}

impl Scheme {
    /// Canonical order used for record layout and CSV emission.
    pub const ALL: [Scheme; 5] = [
        Scheme::Ls,
        Scheme::NewtonLs,
        Scheme::NewtonRandom,
        Scheme::NewtonLsFully,
        Scheme::UpperBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ls => "ls",
            Scheme::NewtonLs => "newton-ls",
            Scheme::NewtonRandom => "newton-random",
            Scheme::NewtonLsFully => "newton-ls-fully",
            Scheme::UpperBound => "upper-bound",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "ls" => Ok(Scheme::Ls),
            "newton-ls" => Ok(Scheme::NewtonLs),
            "newton-random" => Ok(Scheme::NewtonRandom),
            "newton-ls-fully" => Ok(Scheme::NewtonLsFully),
            "upper-bound" => Ok(Scheme::UpperBound),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }

    /// Whether the scheme depends on the configured stem size.
    pub fn depends_on_stem(self) -> bool {
        matches!(self, Scheme::Ls | Scheme::NewtonLs | Scheme::NewtonRandom)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub dims_grid: Vec<SystemDims>,
    pub q_grid: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub realizations: usize,
    pub base_seed: Seed,
    pub propagation: PropagationConfig,
    pub z0: f64,
    pub optimizer: OptimizerConfig,
    /// Fill `wall_ms`; leaves output non-reproducible, so off by default.
    pub measure_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Custom,
            dims_grid: vec![SystemDims::new(16, 4, 4)],
            q_grid: vec![0, 1, 3, 7],
            schemes: Scheme::ALL.to_vec(),
            realizations: 50,
            base_seed: Seed(1),
            propagation: PropagationConfig::default(),
            z0: DEFAULT_Z0,
            optimizer: OptimizerConfig::default(),
            measure_time: false,
        }
    }
}

impl ExperimentConfig {
    /// Gain versus stem size at fixed dimensions, desk scale.
    pub fn fig3() -> Self {
        Self {
            preset: Preset::Fig3,
            dims_grid: vec![SystemDims::new(16, 4, 4)],
            q_grid: vec![0, 1, 2, 3, 5, 7, 15],
            schemes: Scheme::ALL.to_vec(),
            realizations: 50,
            ..Self::default()
        }
    }

    /// Gain versus element count, desk scale.
    pub fn fig4() -> Self {
        Self {
            preset: Preset::Fig4,
            dims_grid: vec![
                SystemDims::new(8, 4, 4),
                SystemDims::new(16, 4, 4),
                SystemDims::new(32, 4, 4),
            ],
            q_grid: vec![1, 7],
            schemes: vec![Scheme::Ls, Scheme::NewtonLs, Scheme::NewtonLsFully, Scheme::UpperBound],
            realizations: 30,
            ..Self::default()
        }
    }

    /// Gain versus stream count at fixed elements, desk scale. The analysis
    /// of interest pairs each user count `k` with stem size `2k - 1`, which
    /// the cross product covers.
    pub fn fig5() -> Self {
        Self {
            preset: Preset::Fig5,
            dims_grid: vec![
                SystemDims::new(16, 5, 1),
                SystemDims::new(16, 5, 2),
                SystemDims::new(16, 5, 3),
            ],
            q_grid: vec![1, 3, 5],
            schemes: vec![Scheme::NewtonLs, Scheme::NewtonLsFully, Scheme::UpperBound],
            realizations: 50,
            ..Self::default()
        }
    }

    /// Rescales a preset to the full-size setup (64 elements, 100
    /// realizations). Considerably slower.
    pub fn full_scale(mut self) -> Self {
        self.realizations = 100;
        match self.preset {
            Preset::Fig3 => {
                self.dims_grid = vec![SystemDims::new(64, 4, 4)];
                self.q_grid = vec![0, 1, 2, 3, 5, 7, 15, 31, 63];
            }
            Preset::Fig4 => {
                self.dims_grid = vec![
                    SystemDims::new(16, 4, 4),
                    SystemDims::new(32, 4, 4),
                    SystemDims::new(64, 4, 4),
                ];
            }
            Preset::Fig5 => {
                self.dims_grid = (1..=5).map(|k| SystemDims::new(64, 5, k)).collect();
                self.q_grid = vec![1, 3, 5, 7, 9];
            }
            Preset::Custom => {}
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims_grid.is_empty() {
            return Err(Error::InvalidInput("empty dimension grid".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidInput("no schemes requested".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidInput("realizations must be at least 1".into()));
        }
        if !(self.z0 > 0.0) {
            return Err(Error::InvalidInput(format!("reference impedance {} not positive", self.z0)));
        }
        let needs_q = self.schemes.iter().any(|s| s.depends_on_stem());
        if needs_q && self.q_grid.is_empty() {
            return Err(Error::InvalidInput(
                "stem-dependent schemes requested with an empty q grid".into(),
            ));
        }
        for dims in &self.dims_grid {
            if dims.n == 0 || dims.l == 0 || dims.k == 0 {
                return Err(Error::InvalidInput(format!("degenerate dimensions {dims:?}")));
            }
            for &q in &self.q_grid {
                if q > dims.n - 1 {
                    return Err(Error::InvalidInput(format!(
                        "stem size {q} out of range for n = {}",
                        dims.n
                    )));
                }
            }
        }
        Ok(())
    }

    /// Requested schemes in canonical order, deduplicated.
    fn canonical_schemes(&self) -> Vec<Scheme> {
        Scheme::ALL.iter().copied().filter(|s| self.schemes.contains(s)).collect()
    }
}

/// One (dimensions, stem size, scheme, realization) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub preset: Preset,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    /// Stem size the scheme ran at; stem-independent schemes report the
    /// fully connected value `n - 1`.
    pub q: usize,
    pub scheme: Scheme,
    pub realization_index: usize,
    /// Channel seed of this realization, shared by all schemes.
    pub derived_seed: u64,
    pub gain: f64,
    /// Least-squares residual, for the schemes that solve one.
    pub residual: Option<f64>,
    /// Quasi-Newton iterations, for the schemes that iterate.
    pub iterations: Option<usize>,
    /// Wall-clock of the scheme evaluation; present only on timing runs.
    pub wall_ms: Option<f64>,
}

struct Task {
    dims: SystemDims,
    /// Stem size for stem-dependent schemes; `None` marks the per-dims
    /// bundle of stem-independent schemes.
    q: Option<usize>,
    realization: usize,
}

/// Runs every requested scheme over the whole grid.
///
/// Record order is canonical: dimensions in grid order, stem sizes in grid
/// order, then the stem-independent bundle, with realizations and schemes
/// nested innermost. Output is a pure function of the configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let schemes = cfg.canonical_schemes();
    let stem_schemes: Vec<Scheme> = schemes.iter().copied().filter(|s| s.depends_on_stem()).collect();
    let free_schemes: Vec<Scheme> = schemes.iter().copied().filter(|s| !s.depends_on_stem()).collect();

    let mut tasks = Vec::new();
    for &dims in &cfg.dims_grid {
        if !stem_schemes.is_empty() {
            for &q in &cfg.q_grid {
                for realization in 0..cfg.realizations {
                    tasks.push(Task { dims, q: Some(q), realization });
                }
            }
        }
        if !free_schemes.is_empty() {
            for realization in 0..cfg.realizations {
                tasks.push(Task { dims, q: None, realization });
            }
        }
    }

    let run_task = |task: &Task| -> Result<Vec<ResultRecord>> {
        let bundle = match task.q {
            Some(_) => &stem_schemes,
            None => &free_schemes,
        };
        evaluate_bundle(cfg, task, bundle)
    };

    #[cfg(feature = "parallel")]
    let nested: Vec<Vec<ResultRecord>> =
        tasks.par_iter().map(run_task).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let nested: Vec<Vec<ResultRecord>> = tasks.iter().map(run_task).collect::<Result<_>>()?;

    Ok(nested.into_iter().flatten().collect())
}

fn evaluate_bundle(cfg: &ExperimentConfig, task: &Task, bundle: &[Scheme]) -> Result<Vec<ResultRecord>> {
    let dims = task.dims;
    let channel_seed = cfg.base_seed.derive(&[
        dims.n as u64,
        dims.l as u64,
        dims.k as u64,
        task.realization as u64,
    ]);
    let ch = sample_channels(dims, &cfg.propagation, channel_seed)?;
    let recorded_q = task.q.unwrap_or(dims.n - 1);
    let mut records = Vec::with_capacity(bundle.len());
    for &scheme in bundle {
        let start = std::time::Instant::now();
        let (gain, residual, iterations) = match scheme {
            Scheme::Ls => {
                let spec = ArchitectureSpec::q_stem(task.q.expect("stem scheme"), dims.n)?;
                let out = ls_design(&ch, &spec, cfg.z0)?;
                (out.gain, Some(out.residual), None)
            }
            Scheme::NewtonLs => {
                let spec = ArchitectureSpec::q_stem(task.q.expect("stem scheme"), dims.n)?;
                let out = newton_ls_design(&ch, &spec, cfg.z0, &cfg.optimizer)?;
                (out.gain, out.ls_residual, Some(out.trace.iterations))
            }
            Scheme::NewtonRandom => {
                let q = task.q.expect("stem scheme");
                let spec = ArchitectureSpec::q_stem(q, dims.n)?;
                let opt = OptimizerConfig {
                    seed: channel_seed.derive(&[q as u64, 0x5eed]),
                    ..cfg.optimizer
                };
                let out = newton_random_design(&ch, &spec, cfg.z0, &opt)?;
                (out.gain, None, Some(out.trace.iterations))
            }
            Scheme::NewtonLsFully => {
                let spec = ArchitectureSpec::fully(dims.n)?;
                let out = newton_ls_design(&ch, &spec, cfg.z0, &cfg.optimizer)?;
                (out.gain, out.ls_residual, Some(out.trace.iterations))
            }
            Scheme::UpperBound => (upper_bound(&decompose(&ch)), None, None),
        };
        let wall_ms = cfg
            .measure_time
            .then(|| start.elapsed().as_secs_f64() * 1e3);
        records.push(ResultRecord {
            preset: cfg.preset,
            n: dims.n,
            k: dims.k,
            l: dims.l,
            q: recorded_q,
            scheme,
            realization_index: task.realization,
            derived_seed: channel_seed.0,
            gain,
            residual,
            iterations,
            wall_ms,
        });
    }
    Ok(records)
}

/// Aggregates of one (dimensions, stem size, scheme) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub preset: Preset,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub q: usize,
    pub scheme: Scheme,
    pub count: usize,
    pub mean_gain: f64,
    pub std_gain: f64,
    pub min_gain: f64,
    pub max_gain: f64,
    /// `mean_gain` over the mean upper bound of the same dimensions, when
    /// upper-bound records are present.
    pub ub_ratio: Option<f64>,
}

type GroupKey = (Preset, usize, usize, usize, usize, Scheme);

/// Per-group mean / std / min / max plus the bound ratio. The aggregation
/// sorts the gains first, so permuting the input records cannot change the
/// output.
pub fn summarize(records: &[ResultRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to summarize".into()));
    }
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.preset, r.n, r.k, r.l, r.q, r.scheme))
            .or_default()
            .push(r.gain);
    }
    let mut ub_means: BTreeMap<(Preset, usize, usize, usize), f64> = BTreeMap::new();
    for ((preset, n, k, l, _, scheme), gains) in &groups {
        if *scheme == Scheme::UpperBound {
            ub_means.insert((*preset, *n, *k, *l), stable_mean(gains));
        }
    }
    Ok(groups
        .into_iter()
        .map(|((preset, n, k, l, q, scheme), mut gains)| {
            gains.sort_by(f64::total_cmp);
            let count = gains.len();
            let mean = stable_mean(&gains);
            let variance = gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / count as f64;
            let ub_ratio = ub_means.get(&(preset, n, k, l)).map(|ub| mean / ub);
            SummaryRow {
                preset,
                n,
                k,
                l,
                q,
                scheme,
                count,
                mean_gain: mean,
                std_gain: variance.sqrt(),
                min_gain: gains[0],
                max_gain: gains[count - 1],
                ub_ratio,
            }
        })
        .collect())
}

fn stable_mean(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

/// Fixed 12-significant-digit scientific form, identical across runs.
fn fmt_f64(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub const RECORD_HEADER: [&str; 12] = [
    "preset", "n", "k", "l", "q", "scheme", "realization_index", "derived_seed", "gain",
    "residual", "iterations", "wall_ms",
];

pub const SUMMARY_HEADER: [&str; 12] = [
    "preset", "n", "k", "l", "q", "scheme", "count", "mean_gain", "std_gain", "min_gain",
    "max_gain", "ub_ratio",
];

/// Writes records as CSV with the fixed header; bit-identical for equal
/// inputs.
pub fn emit_records_csv<P: AsRef<Path>>(records: &[ResultRecord], path: P) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.preset.name().to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.l.to_string(),
            r.q.to_string(),
            r.scheme.name().to_string(),
            r.realization_index.to_string(),
            r.derived_seed.to_string(),
            fmt_f64(r.gain),
            fmt_opt_f64(r.residual),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            fmt_opt_f64(r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a records CSV written by [`emit_records_csv`].
pub fn read_records_csv<P: AsRef<Path>>(path: P) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(RECORD_HEADER) {
        return Err(Error::Parse(format!("unexpected record header {headers:?}")));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let parse_usize = |i: usize| -> Result<usize> {
            field(i)
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer {:?} in column {}", field(i), RECORD_HEADER[i])))
        };
        let parse_f64 = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {:?} in column {}", field(i), RECORD_HEADER[i])))
        };
        let parse_opt_f64 = |i: usize| -> Result<Option<f64>> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                parse_f64(i).map(Some)
            }
        };
        out.push(ResultRecord {
            preset: Preset::parse(field(0))?,
            n: parse_usize(1)?,
            k: parse_usize(2)?,
            l: parse_usize(3)?,
            q: parse_usize(4)?,
            scheme: Scheme::parse(field(5))?,
            realization_index: parse_usize(6)?,
            derived_seed: field(7)
                .parse()
                .map_err(|_| Error::Parse(format!("bad seed {:?}", field(7))))?,
            gain: parse_f64(8)?,
            residual: parse_opt_f64(9)?,
            iterations: if field(10).is_empty() { None } else { Some(parse_usize(10)?) },
            wall_ms: parse_opt_f64(11)?,
        });
    }
    Ok(out)
}

/// Writes the summary table as CSV.
pub fn emit_summary_csv<P: AsRef<Path>>(rows: &[SummaryRow], path: P) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.preset.name().to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.l.to_string(),
            r.q.to_string(),
            r.scheme.name().to_string(),
            r.count.to_string(),
            fmt_f64(r.mean_gain),
            fmt_f64(r.std_gain),
            fmt_f64(r.min_gain),
            fmt_f64(r.max_gain),
            fmt_opt_f64(r.ub_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Emits a gnuplot script that draws mean gain versus stem size, one curve
/// per scheme, from the summary CSV sitting next to it.
pub fn emit_plot_script<P: AsRef<Path>>(cfg: &ExperimentConfig, summary_name: &str, path: P) -> Result<()> {
    use std::io::Write;
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "# Mean sum channel gain versus stem size, per scheme.")?;
    writeln!(out, "# Generated for the {} run; data in {summary_name}.", cfg.preset)?;
    writeln!(out, "set datafile separator comma")?;
    writeln!(out, "set key outside right")?;
    writeln!(out, "set xlabel 'Q'")?;
    writeln!(out, "set ylabel 'mean sum channel gain'")?;
    writeln!(out, "set term pngcairo size 900,600")?;
    writeln!(out, "set output 'gains.png'")?;
    let lines: Vec<String> = cfg
        .canonical_schemes()
        .iter()
        .map(|s| {
            format!(
                "  '{summary_name}' skip 1 using (strcol(6) eq '{name}' ? column(5) : NaN):8 \
                 with linespoints title '{name}'",
                name = s.name()
            )
        })
        .collect();
    writeln!(out, "plot \\\n{}", lines.join(", \\\n"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            preset: Preset::Custom,
            dims_grid: vec![SystemDims::new(6, 2, 2)],
            q_grid: vec![0, 2],
            schemes: Scheme::ALL.to_vec(),
            realizations: 3,
            base_seed: Seed(99),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn record_layout_is_canonical() {
        let cfg = tiny_config();
        let records = run_experiment(&cfg).unwrap();
        // 2 stem sizes x 3 realizations x 3 stem schemes, then 3
        // realizations x 2 stem-independent schemes.
        assert_eq!(records.len(), 2 * 3 * 3 + 3 * 2);
        let mut expected = Vec::new();
        for &q in &[0usize, 2] {
            for r in 0..3 {
                for s in [Scheme::Ls, Scheme::NewtonLs, Scheme::NewtonRandom] {
                    expected.push((q, r, s));
                }
            }
        }
        for r in 0..3 {
            for s in [Scheme::NewtonLsFully, Scheme::UpperBound] {
                expected.push((5, r, s));
            }
        }
        let actual: Vec<(usize, usize, Scheme)> = records
            .iter()
            .map(|rec| (rec.q, rec.realization_index, rec.scheme))
            .collect();
        assert_eq!(actual, expected);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = tiny_config();
        let first = run_experiment(&cfg).unwrap();
        let second = run_experiment(&cfg).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn schemes_share_the_channel_draw() {
        let cfg = tiny_config();
        let records = run_experiment(&cfg).unwrap();
        for r in 0..3 {
            let seeds: Vec<u64> = records
                .iter()
                .filter(|rec| rec.realization_index == r)
                .map(|rec| rec.derived_seed)
                .collect();
            assert!(seeds.windows(2).all(|w| w[0] == w[1]), "realization {r}");
        }
    }

    #[test]
    fn per_realization_ordering_holds() {
        let cfg = tiny_config();
        let records = run_experiment(&cfg).unwrap();
        for r in 0..3 {
            let pick = |scheme: Scheme, q: Option<usize>| -> Vec<f64> {
                records
                    .iter()
                    .filter(|rec| {
                        rec.realization_index == r
                            && rec.scheme == scheme
                            && q.map_or(true, |q| rec.q == q)
                    })
                    .map(|rec| rec.gain)
                    .collect()
            };
            let ub = pick(Scheme::UpperBound, None)[0];
            for &q in &[0usize, 2] {
                let ls = pick(Scheme::Ls, Some(q))[0];
                let newton = pick(Scheme::NewtonLs, Some(q))[0];
                assert!(newton >= ls * (1.0 - 1e-12), "q={q} r={r}");
                assert!(newton <= ub * (1.0 + 1e-9));
                assert!(ls <= ub * (1.0 + 1e-9));
            }
            let fully = pick(Scheme::NewtonLsFully, None)[0];
            assert!(fully <= ub * (1.0 + 1e-9));
        }
    }

    #[test]
    fn timing_is_off_by_default_and_on_by_request() {
        let mut cfg = tiny_config();
        cfg.realizations = 1;
        cfg.q_grid = vec![0];
        cfg.schemes = vec![Scheme::Ls];
        let plain = run_experiment(&cfg).unwrap();
        assert!(plain.iter().all(|r| r.wall_ms.is_none()));
        cfg.measure_time = true;
        let timed = run_experiment(&cfg).unwrap();
        assert!(timed.iter().all(|r| r.wall_ms.is_some()));
    }

    #[test]
    fn validation_catches_bad_grids() {
        let mut cfg = tiny_config();
        cfg.q_grid = vec![0, 6];
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_config();
        cfg.realizations = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_config();
        cfg.q_grid.clear();
        assert!(cfg.validate().is_err());
        cfg.schemes = vec![Scheme::UpperBound];
        assert!(cfg.validate().is_ok());
        let mut cfg = tiny_config();
        cfg.schemes.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn summary_of_single_record_is_degenerate() {
        let mut cfg = tiny_config();
        cfg.schemes = vec![Scheme::Ls];
        cfg.q_grid = vec![2];
        cfg.realizations = 1;
        let records = run_experiment(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        let summary = summarize(&records).unwrap();
        assert_eq!(summary.len(), 1);
        assert_eq!(summary[0].count, 1);
        assert_eq!(summary[0].mean_gain, records[0].gain);
        assert_eq!(summary[0].std_gain, 0.0);
        assert_eq!(summary[0].min_gain, summary[0].max_gain);
        assert!(summary[0].ub_ratio.is_none());
    }

    #[test]
    fn summary_is_permutation_invariant_and_bounded() {
        let cfg = tiny_config();
        let records = run_experiment(&cfg).unwrap();
        let summary = summarize(&records).unwrap();
        let mut shuffled = records.clone();
        shuffled.reverse();
        shuffled.swap(0, 7);
        shuffled.swap(3, 11);
        assert_eq!(summary, summarize(&shuffled).unwrap());
        for row in &summary {
            let ratio = row.ub_ratio.expect("upper bound was run");
            assert!(ratio <= 1.0 + 1e-9, "{:?}", row);
        }
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn record_csv_round_trips() {
        let cfg = tiny_config();
        let records = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        emit_records_csv(&records, &path).unwrap();
        let parsed = read_records_csv(&path).unwrap();
        assert_eq!(parsed.len(), records.len());
        // Serialization is a 12-digit canonicalization; a second pass
        // through it is the identity.
        let path2 = dir.path().join("records2.csv");
        emit_records_csv(&parsed, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
        for (a, b) in records.iter().zip(&parsed) {
            assert_eq!(a.scheme, b.scheme);
            assert_eq!(a.derived_seed, b.derived_seed);
            assert!((a.gain - b.gain).abs() <= 1e-11 * a.gain.abs().max(1e-300));
        }
    }

    #[test]
    fn identical_runs_serialize_identically() {
        let cfg = tiny_config();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        emit_records_csv(&run_experiment(&cfg).unwrap(), &a).unwrap();
        emit_records_csv(&run_experiment(&cfg).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn empty_record_list_gives_header_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_records_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", RECORD_HEADER.join(",")));
    }

    #[test]
    fn summary_csv_and_plot_script_are_emitted() {
        let cfg = tiny_config();
        let records = run_experiment(&cfg).unwrap();
        let summary = summarize(&records).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let summary_path = dir.path().join("summary.csv");
        emit_summary_csv(&summary, &summary_path).unwrap();
        let text = std::fs::read_to_string(&summary_path).unwrap();
        assert!(text.starts_with(&SUMMARY_HEADER.join(",")));
        assert_eq!(text.lines().count(), summary.len() + 1);

        let plot_path = dir.path().join("plot.gp");
        emit_plot_script(&cfg, "summary.csv", &plot_path).unwrap();
        let script = std::fs::read_to_string(&plot_path).unwrap();
        for scheme in Scheme::ALL {
            assert!(script.contains(scheme.name()));
        }
    }

    #[test]
    fn preset_and_scheme_names_round_trip() {
        for p in [Preset::Fig3, Preset::Fig4, Preset::Fig5, Preset::Custom] {
            assert_eq!(Preset::parse(p.name()).unwrap(), p);
        }
        for s in Scheme::ALL {
            assert_eq!(Scheme::parse(s.name()).unwrap(), s);
        }
        assert!(Preset::parse("fig9").is_err());
        assert!(Scheme::parse("magic").is_err());
    }

    #[test]
    fn preset_configs_validate() {
        for cfg in [ExperimentConfig::fig3(), ExperimentConfig::fig4(), ExperimentConfig::fig5()] {
            cfg.validate().unwrap();
            cfg.clone().full_scale().validate().unwrap();
        }
    }
}
