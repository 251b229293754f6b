//! Experiment matrix: sizes × strains × stiffness cases across the
//! orthotropic topologies, plus the reports built on the resulting table.
//!
//! Every run is keyed by (topology, size, case, strain). Runs are independent,
//! so the matrix is mapped over a rayon pool when the `parallel` feature is on
//! and sequentially otherwise; the table is assembled in key order either way.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homogenize::{homogenize_with, BoundaryMode, HomogenizeOptions, ResultRecord, DEFAULT_STRAIN, MAX_STRAIN};
use crate::meshbuild::{CaseKind, Material, StiffnessCase, DEFAULT_DEPTH, DEFAULT_EDGE_LENGTH};
use crate::tiling::{Bbox, TopologyId};

/// Adjacent ranked values closer than this (relative) are reported as ties.
pub const TIE_TOLERANCE: f64 = 0.05;
/// Default flag threshold for the spread of a modulus across sizes.
pub const SIZE_SPREAD_THRESHOLD: f64 = 0.05;
/// EqualHigh/EqualLow modulus ratio band that marks linear area scaling.
pub const STRETCHING_BAND: (f64, f64) = (4.0, 6.0);

pub const DEFAULT_SIZES: [f64; 4] = [750.0, 1000.0, 1250.0, 1500.0];
pub const DEFAULT_STRAINS: [f64; 8] = [0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04, 0.045];

fn default_topologies() -> Vec<TopologyId> {
    TopologyId::ORTHOTROPIC.to_vec()
}
fn default_sizes() -> Vec<f64> {
    DEFAULT_SIZES.to_vec()
}
fn default_strains() -> Vec<f64> {
    DEFAULT_STRAINS.to_vec()
}
fn default_cases() -> Vec<CaseKind> {
    CaseKind::ALL.to_vec()
}
fn default_edge() -> f64 {
    DEFAULT_EDGE_LENGTH
}
fn default_depth() -> f64 {
    DEFAULT_DEPTH
}
fn default_output() -> PathBuf {
    PathBuf::from("study-out")
}

/// Study description, loadable from JSON or TOML. Every field has a default,
/// so an empty file describes the full matrix. Sizes are square box sides in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_topologies")]
    pub topologies: Vec<TopologyId>,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<f64>,
    #[serde(default = "default_strains")]
    pub strains: Vec<f64>,
    #[serde(default = "default_cases")]
    pub cases: Vec<CaseKind>,
    #[serde(default)]
    pub material: Material,
    #[serde(default = "default_depth")]
    pub depth: f64,
    #[serde(default = "default_edge")]
    pub edge_length: f64,
    #[serde(default)]
    pub boundary: BoundaryMode,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            topologies: default_topologies(),
            sizes: default_sizes(),
            strains: default_strains(),
            cases: default_cases(),
            material: Material::default(),
            depth: DEFAULT_DEPTH,
            edge_length: DEFAULT_EDGE_LENGTH,
            boundary: BoundaryMode::default(),
            output_dir: default_output(),
        }
    }
}

impl StudyConfig {
    /// Parse by extension: `.toml`, otherwise JSON. The result is validated.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let cfg = if is_toml { Self::from_toml(&text)? } else { Self::from_json(&text)? };
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: StudyConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Error::Config(format!("`{name}` must not be empty"));
        if self.topologies.is_empty() {
            return Err(empty("topologies"));
        }
        if self.sizes.is_empty() {
            return Err(empty("sizes"));
        }
        if self.strains.is_empty() {
            return Err(empty("strains"));
        }
        if self.cases.is_empty() {
            return Err(empty("cases"));
        }
        if let Some(t) = self.topologies.iter().find(|t| !t.orthotropic_rve()) {
            return Err(Error::Config(Error::NotOrthotropic(*t).to_string()));
        }
        if let Some(s) = self.sizes.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Config(format!("size {s} mm is not positive")));
        }
        if let Some(s) = self.strains.iter().find(|s| !(**s > 0.0 && **s <= MAX_STRAIN)) {
            return Err(Error::Config(format!("strain {s} outside (0, {MAX_STRAIN}]")));
        }
        for (name, v) in [("depth", self.depth), ("edge_length", self.edge_length)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("`{name}` must be positive, got {v}")));
            }
        }
        Material::new(self.material.young_modulus, self.material.poisson_ratio)
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for key in self.keys() {
            if !seen.insert(key) {
                return Err(Error::Config(format!("duplicate run {key:?}")));
            }
        }
        Ok(())
    }

    pub fn options(&self) -> HomogenizeOptions {
        HomogenizeOptions {
            edge_length: self.edge_length,
            depth: self.depth,
            material: self.material,
            boundary: self.boundary,
        }
    }

    /// The cartesian product in table order.
    pub fn keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for &topology in &self.topologies {
            for &size in &self.sizes {
                for &case in &self.cases {
                    for &strain in &self.strains {
                        keys.push(RunKey { topology, size, case, strain });
                    }
                }
            }
        }
        keys.sort();
        keys
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunKey {
    pub topology: TopologyId,
    pub size: f64,
    pub case: CaseKind,
    pub strain: f64,
}

impl Eq for RunKey {}

impl Ord for RunKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.topology
            .cmp(&other.topology)
            .then(self.size.total_cmp(&other.size))
            .then(self.case.cmp(&other.case))
            .then(self.strain.total_cmp(&other.strain))
    }
}

impl PartialOrd for RunKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of one key: a record, or the error that stopped it.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyEntry {
    pub key: RunKey,
    pub outcome: std::result::Result<ResultRecord, String>,
}

/// Keyed results; every key appears once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    entries: BTreeMap<RunKey, std::result::Result<ResultRecord, String>>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert one entry; a repeated key is rejected.
    pub fn insert(&mut self, entry: StudyEntry) -> Result<()> {
        if self.entries.contains_key(&entry.key) {
            return Err(Error::InvalidParameter(format!("duplicate result key {:?}", entry.key)));
        }
        self.entries.insert(entry.key, entry.outcome);
        Ok(())
    }

    /// Table of successful records keyed by their own fields (square boxes assumed).
    pub fn from_records(records: impl IntoIterator<Item = ResultRecord>) -> Result<Self> {
        let mut t = ResultTable::new();
        for r in records {
            let key = RunKey { topology: r.topology, size: r.bbox_width, case: r.case, strain: r.strain };
            t.insert(StudyEntry { key, outcome: Ok(r) })?;
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &RunKey) -> Option<&std::result::Result<ResultRecord, String>> {
        self.entries.get(key)
    }

    /// Successful records in key order.
    pub fn records(&self) -> impl Iterator<Item = &ResultRecord> {
        self.entries.values().filter_map(|o| o.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (&RunKey, &str)> {
        self.entries.iter().filter_map(|(k, o)| o.as_ref().err().map(|e| (k, e.as_str())))
    }

    pub fn topologies(&self) -> Vec<TopologyId> {
        let mut v: Vec<_> = self.entries.keys().map(|k| k.topology).collect();
        v.dedup();
        v
    }

    /// Records of one topology at one (strain, case), all sizes.
    fn at(&self, topology: TopologyId, strain: f64, case: CaseKind) -> Vec<&ResultRecord> {
        self.records().filter(|r| r.topology == topology && r.case == case && same(r.strain, strain)).collect()
    }

    /// Strain closest to `target` among the successful records.
    pub fn nearest_strain(&self, target: f64) -> Option<f64> {
        self.records().map(|r| r.strain).min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
    }

    pub fn has_case(&self, case: CaseKind) -> bool {
        self.records().any(|r| r.case == case)
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// How the matrix is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool with the given thread count (`None`: available parallelism).
    /// Without the `parallel` feature this runs sequentially.
    Parallel(Option<usize>),
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel(None)
    }
}

fn run_key(key: &RunKey, opts: &HomogenizeOptions) -> StudyEntry {
    let outcome = homogenize_with(key.topology, Bbox::square(key.size), StiffnessCase::preset(key.case), key.strain, opts)
        .map_err(|e| e.to_string());
    if let Err(e) = &outcome {
        log::warn!("{} {} mm {} {}: {e}", key.topology, key.size, key.case, key.strain);
    }
    StudyEntry { key: *key, outcome }
}

/// Run every key of `cfg`. Per-key failures are recorded, never dropped.
pub fn run_study(cfg: &StudyConfig) -> Result<ResultTable> {
    run_study_with(cfg, Execution::default())
}

pub fn run_study_with(cfg: &StudyConfig, exec: Execution) -> Result<ResultTable> {
    cfg.validate()?;
    let keys = cfg.keys();
    let opts = cfg.options();
    let start = Instant::now();
    log::info!("study: {} runs", keys.len());
    let entries = match exec {
        Execution::Sequential => keys.iter().map(|k| run_key(k, &opts)).collect::<Vec<_>>(),
        #[cfg(feature = "parallel")]
        Execution::Parallel(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(|| keys.par_iter().map(|k| run_key(k, &opts)).collect::<Vec<_>>())
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel(_) => keys.iter().map(|k| run_key(k, &opts)).collect::<Vec<_>>(),
    };
    let mut table = ResultTable::new();
    for e in entries {
        table.insert(e)?;
    }
    log::info!(
        "study: {} ok, {} failed in {:.2} s",
        table.records().count(),
        table.failures().count(),
        start.elapsed().as_secs_f64()
    );
    Ok(table)
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        0.0
    } else {
        (max - min) / mean.abs()
    }
}

/// Relative spread `(max - min) / mean` of each modulus across sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeSpread {
    pub topology: TopologyId,
    pub case: CaseKind,
    pub strain: f64,
    pub sizes: usize,
    pub e1: f64,
    pub e2: f64,
    pub g12: f64,
    pub flagged: bool,
}

impl SizeSpread {
    pub fn max(&self) -> f64 {
        self.e1.max(self.e2).max(self.g12)
    }
}

/// One line per (topology, case, strain); each needs at least two sizes.
pub fn size_independence_report(t: &ResultTable, threshold: f64) -> Result<Vec<SizeSpread>> {
    let mut groups: BTreeMap<(TopologyId, CaseKind, u64), Vec<&ResultRecord>> = BTreeMap::new();
    for r in t.records() {
        groups.entry((r.topology, r.case, r.strain.to_bits())).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(Error::InsufficientData("no successful records".into()));
    }
    groups
        .into_iter()
        .map(|((topology, case, bits), rs)| {
            if rs.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "{topology} {case} at strain {} has {} size(s), need 2",
                    f64::from_bits(bits),
                    rs.len()
                )));
            }
            let col = |f: fn(&ResultRecord) -> f64| spread(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (e1, e2, g12) = (col(|r| r.e1), col(|r| r.e2), col(|r| r.g12));
            Ok(SizeSpread {
                topology,
                case,
                strain: f64::from_bits(bits),
                sizes: rs.len(),
                e1,
                e2,
                g12,
                flagged: e1.max(e2).max(g12) > threshold,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankEntry {
    pub topology: TopologyId,
    pub value: f64,
    /// Within [`TIE_TOLERANCE`] of the next entry.
    pub tied_with_next: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub strain: f64,
    pub case: CaseKind,
    /// Descending mean of E1 and E2.
    pub e: Vec<RankEntry>,
    /// Descending G12.
    pub g: Vec<RankEntry>,
}

pub fn within_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

fn ranked(mut values: Vec<(TopologyId, f64)>) -> Vec<RankEntry> {
    values.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out: Vec<RankEntry> =
        values.iter().map(|&(topology, value)| RankEntry { topology, value, tied_with_next: false }).collect();
    for i in 1..out.len() {
        out[i - 1].tied_with_next = within_tie(out[i - 1].value, out[i].value);
    }
    out
}

/// Rank every topology in the table at (strain, case). Values are averaged
/// over sizes. A topology present in the table without a record at this
/// point is an error.
pub fn rank_report(t: &ResultTable, strain: f64, case: CaseKind) -> Result<RankReport> {
    let mut e = Vec::new();
    let mut g = Vec::new();
    for topology in t.topologies() {
        let rs = t.at(topology, strain, case);
        if rs.is_empty() {
            return Err(Error::MissingTopology(topology));
        }
        let n = rs.len() as f64;
        e.push((topology, rs.iter().map(|r| r.e_mean()).sum::<f64>() / n));
        g.push((topology, rs.iter().map(|r| r.g12).sum::<f64>() / n));
    }
    if e.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(RankReport { strain, case, e: ranked(e), g: ranked(g) })
}

/// Pairs that `ranking` puts in the wrong order relative to `expected`
/// (descending), ignoring pairs whose values are tied. Topologies absent from
/// either list are skipped.
pub fn order_violations(ranking: &[RankEntry], expected: &[TopologyId]) -> Vec<(TopologyId, TopologyId)> {
    let value = |t: TopologyId| ranking.iter().find(|r| r.topology == t).map(|r| r.value);
    let mut out = Vec::new();
    for (i, &hi) in expected.iter().enumerate() {
        for &lo in &expected[i + 1..] {
            if let (Some(a), Some(b)) = (value(hi), value(lo)) {
                if a < b && !within_tie(a, b) {
                    out.push((hi, lo));
                }
            }
        }
    }
    out
}

pub fn format_ranking(title: &str, entries: &[RankEntry]) -> String {
    let mut s = format!("# {title}\n");
    for (i, r) in entries.iter().enumerate() {
        let tie = if r.tied_with_next { "  (tie with next)" } else { "" };
        let _ = writeln!(s, "{:>2}. {:<6} {:.6e}{tie}", i + 1, r.topology.code(), r.value);
    }
    s
}

/// Modulus of each stiffness case divided by its ActuatorStiff value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapRow {
    pub topology: TopologyId,
    /// Indexed like [`CaseKind::ALL`].
    pub e1: [f64; 4],
    pub e2: [f64; 4],
    pub g12: [f64; 4],
}

impl HeatmapRow {
    pub fn e_mean(&self, case: CaseKind) -> f64 {
        let i = case_index(case);
        0.5 * (self.e1[i] + self.e2[i])
    }

    pub fn g(&self, case: CaseKind) -> f64 {
        self.g12[case_index(case)]
    }
}

fn case_index(case: CaseKind) -> usize {
    CaseKind::ALL.iter().position(|c| *c == case).expect("every case is listed")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub strain: f64,
    pub rows: Vec<HeatmapRow>,
}

/// Ratio tables at one strain, averaged over sizes.
pub fn stiffness_case_heatmap(t: &ResultTable, strain: f64) -> Result<Heatmap> {
    let mut rows = Vec::new();
    for topology in t.topologies() {
        let mut mean = [[0.0; 3]; 4];
        for (i, &case) in CaseKind::ALL.iter().enumerate() {
            let rs = t.at(topology, strain, case);
            if rs.is_empty() {
                return Err(Error::MissingCase(format!("{case} for {topology} at strain {strain}")));
            }
            let n = rs.len() as f64;
            mean[i] = [
                rs.iter().map(|r| r.e1).sum::<f64>() / n,
                rs.iter().map(|r| r.e2).sum::<f64>() / n,
                rs.iter().map(|r| r.g12).sum::<f64>() / n,
            ];
        }
        let base = mean[0];
        let ratio = |k: usize| std::array::from_fn(|i| mean[i][k] / base[k]);
        rows.push(HeatmapRow { topology, e1: ratio(0), e2: ratio(1), g12: ratio(2) });
    }
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(Heatmap { strain, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Deformation {
    Stretching,
    Bending,
}

impl Deformation {
    /// Linear area scaling of the EqualHigh/EqualLow ratio marks stretching.
    pub fn from_area_ratio(ratio: f64) -> Self {
        if (STRETCHING_BAND.0..=STRETCHING_BAND.1).contains(&ratio) {
            Deformation::Stretching
        } else {
            Deformation::Bending
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Deformation::Stretching => "stretching",
            Deformation::Bending => "bending",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub topology: TopologyId,
    pub axial_ratio: f64,
    pub shear_ratio: f64,
    pub axial: Deformation,
    pub shear: Deformation,
}

pub fn classify_topologies(h: &Heatmap) -> Vec<Classification> {
    h.rows
        .iter()
        .map(|row| {
            let axial_ratio = row.e_mean(CaseKind::EqualHigh) / row.e_mean(CaseKind::EqualLow);
            let shear_ratio = row.g(CaseKind::EqualHigh) / row.g(CaseKind::EqualLow);
            Classification {
                topology: row.topology,
                axial_ratio,
                shear_ratio,
                axial: Deformation::from_area_ratio(axial_ratio),
                shear: Deformation::from_area_ratio(shear_ratio),
            }
        })
        .collect()
}

/// Point used by the single-strain reports: ActuatorStiff (or the first case
/// present) at the strain closest to the default.
pub fn comparison_point(t: &ResultTable) -> Option<(f64, CaseKind)> {
    let strain = t.nearest_strain(DEFAULT_STRAIN)?;
    let case = if t.has_case(CaseKind::ActuatorStiff) {
        CaseKind::ActuatorStiff
    } else {
        t.records().map(|r| r.case).min()?
    };
    Some((strain, case))
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// `results.csv` body; wall time is zeroed so reruns are byte-identical.
pub fn results_csv(t: &ResultTable) -> String {
    let mut s = String::from(ResultRecord::CSV_HEADER);
    s.push('\n');
    for r in t.records() {
        s.push_str(&r.csv_row(false));
        s.push('\n');
    }
    s
}

fn heatmap_csv(h: &Heatmap, pick: impl Fn(&HeatmapRow) -> [f64; 4]) -> String {
    let mut s = String::from("topology");
    for c in CaseKind::ALL {
        s.push(',');
        s.push_str(c.name());
    }
    s.push('\n');
    for row in &h.rows {
        s.push_str(row.topology.code());
        for v in pick(row) {
            s.push(',');
            s.push_str(&num(v));
        }
        s.push('\n');
    }
    s
}

fn poisson_csv(t: &ResultTable, strain: f64, case: CaseKind, classes: &[Classification]) -> String {
    let mut s = String::from("topology,nu12,nu21,axial_class\n");
    for topology in t.topologies() {
        let rs = t.at(topology, strain, case);
        if rs.is_empty() {
            continue;
        }
        let n = rs.len() as f64;
        let nu12 = rs.iter().map(|r| r.nu12).sum::<f64>() / n;
        let nu21 = rs.iter().map(|r| r.nu21).sum::<f64>() / n;
        let class = classes.iter().find(|c| c.topology == topology).map_or("unknown", |c| c.axial.name());
        let _ = writeln!(s, "{},{},{},{class}", topology.code(), num(nu12), num(nu21));
    }
    s
}

fn write(path: &Path, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, body)?;
    written.push(path.to_path_buf());
    Ok(())
}

/// Write the output set into `dir`. Reports that need data the table does not
/// hold (e.g. a heatmap without all four cases) are skipped with a warning.
/// Returns the files written, in write order.
pub fn export(t: &ResultTable, dir: &Path) -> Result<Vec<PathBuf>> {
    if t.records().next().is_none() {
        return Err(Error::EmptyTable);
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    write(&dir.join("results.csv"), &results_csv(t), &mut written)?;

    let failures: Vec<_> = t.failures().collect();
    if !failures.is_empty() {
        let mut s = String::from("topology,size,case,strain,error\n");
        for (k, e) in failures {
            let _ = writeln!(s, "{},{},{},{},\"{}\"", k.topology, k.size, k.case, k.strain, e.replace('"', "'"));
        }
        write(&dir.join("failures.csv"), &s, &mut written)?;
    }

    let plot = dir.join("plot-data");
    let curves = plot.join("curves");
    fs::create_dir_all(&curves)?;
    for topology in t.topologies() {
        let mut s = String::from("size,case,strain,e1,e2,g12\n");
        for r in t.records().filter(|r| r.topology == topology) {
            let _ = writeln!(s, "{},{},{},{},{},{}", r.bbox_width, r.case, r.strain, num(r.e1), num(r.e2), num(r.g12));
        }
        write(&curves.join(format!("{}.csv", topology.code())), &s, &mut written)?;
    }

    let Some((strain, case)) = comparison_point(t) else { return Ok(written) };
    match rank_report(t, strain, case) {
        Ok(rank) => {
            let title = |m: &str| format!("{m} ranking, {case}, strain {strain}");
            write(&dir.join("ranking_E.txt"), &format_ranking(&title("E"), &rank.e), &mut written)?;
            write(&dir.join("ranking_G.txt"), &format_ranking(&title("G"), &rank.g), &mut written)?;
            let bars = plot.join("bars");
            fs::create_dir_all(&bars)?;
            for (name, entries) in [("E", &rank.e), ("G", &rank.g)] {
                let mut s = String::from("rank,topology,value,tied_with_next\n");
                for (i, r) in entries.iter().enumerate() {
                    let _ = writeln!(s, "{},{},{},{}", i + 1, r.topology.code(), num(r.value), r.tied_with_next);
                }
                write(&bars.join(format!("{name}.csv")), &s, &mut written)?;
            }
        }
        Err(e) => log::warn!("skipping rankings: {e}"),
    }

    let classes = match stiffness_case_heatmap(t, strain) {
        Ok(h) => {
            write(&dir.join("heatmap_E.csv"), &heatmap_csv(&h, |r| std::array::from_fn(|i| 0.5 * (r.e1[i] + r.e2[i]))), &mut written)?;
            write(&dir.join("heatmap_G.csv"), &heatmap_csv(&h, |r| r.g12), &mut written)?;
            let maps = plot.join("heatmaps");
            fs::create_dir_all(&maps)?;
            write(&maps.join("E1.csv"), &heatmap_csv(&h, |r| r.e1), &mut written)?;
            write(&maps.join("E2.csv"), &heatmap_csv(&h, |r| r.e2), &mut written)?;
            write(&maps.join("G12.csv"), &heatmap_csv(&h, |r| r.g12), &mut written)?;
            let classes = classify_topologies(&h);
            let mut s = String::from("topology,axial_ratio,axial,shear_ratio,shear\n");
            for c in &classes {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    c.topology.code(),
                    num(c.axial_ratio),
                    c.axial.name(),
                    num(c.shear_ratio),
                    c.shear.name()
                );
            }
            write(&dir.join("classification.csv"), &s, &mut written)?;
            classes
        }
        Err(e) => {
            log::warn!("skipping heatmaps: {e}");
            Vec::new()
        }
    };
    write(&dir.join("poisson.csv"), &poisson_csv(t, strain, case, &classes), &mut written)?;
    Ok(written)
}

/// Read back a `results.csv`.
pub fn read_results_csv(text: &str) -> Result<ResultTable> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == ResultRecord::CSV_HEADER => {}
        _ => return Err(Error::InvalidParameter("results file lacks the expected header".into())),
    }
    let records = lines.filter(|l| !l.trim().is_empty()).map(ResultRecord::from_csv_row).collect::<Result<Vec<_>>>()?;
    ResultTable::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(topology: TopologyId, size: f64, case: CaseKind, strain: f64, e: f64, g: f64) -> ResultRecord {
        ResultRecord {
            topology,
            bbox_width: size,
            bbox_height: size,
            case,
            strain,
            c1111: e,
            c2222: e,
            c1122: 0.0,
            c1212: g,
            e1: e,
            e2: e,
            g12: g,
            nu12: 0.3,
            nu21: 0.3,
            wall_time_s: 0.25,
            dof_count: 10,
        }
    }

    fn small_config() -> StudyConfig {
        StudyConfig {
            topologies: vec![TopologyId::Square],
            sizes: vec![750.0],
            strains: vec![0.01],
            cases: vec![CaseKind::ActuatorStiff],
            ..StudyConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = StudyConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.keys().len(), 10 * 4 * 4 * 8);
    }

    #[test]
    fn config_rejects_chiral_topology() {
        let err = StudyConfig::from_json(r#"{"topologies": ["T", "T4H"]}"#).unwrap_err();
        assert!(matches!(err, Error::Config(m) if m.contains("T4H")));
    }

    #[test]
    fn config_rejects_empty_lists_and_unknown_fields() {
        assert!(StudyConfig::from_json(r#"{"sizes": []}"#).is_err());
        assert!(StudyConfig::from_toml("strains = []").is_err());
        assert!(StudyConfig::from_toml("size = [750.0]").is_err());
        assert!(StudyConfig::from_toml("strains = [0.5]").is_err());
        assert!(StudyConfig::from_toml("sizes = [750.0, 750.0]").is_err());
    }

    #[test]
    fn config_toml_round_trip() {
        let text = r#"
            topologies = ["S", "THTH"]
            sizes = [750.0]
            strains = [0.01, 0.02]
            cases = ["actuator-stiff", "equal-high"]
            boundary = "mirror"
            output_dir = "out"
        "#;
        let cfg = StudyConfig::from_toml(text).unwrap();
        assert_eq!(cfg.topologies, vec![TopologyId::Square, TopologyId::Trihexagonal]);
        assert_eq!(cfg.keys().len(), 2 * 2 * 2);
        assert_eq!(cfg.depth, DEFAULT_DEPTH);
    }

    #[test]
    fn single_key_study_gives_one_record() {
        let t = run_study_with(&small_config(), Execution::Sequential).unwrap();
        assert_eq!(t.len(), 1);
        let r = t.records().next().unwrap();
        assert!((r.c1111 - 200.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn failures_are_recorded() {
        let cfg = StudyConfig { sizes: vec![10.0, 750.0], ..small_config() };
        let t = run_study_with(&cfg, Execution::Sequential).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.failures().count(), 1);
        assert!(t.failures().next().unwrap().1.contains("too small"));
    }

    #[test]
    fn schedules_agree() {
        let cfg = StudyConfig {
            topologies: vec![TopologyId::Square, TopologyId::Triangular],
            sizes: vec![750.0, 1000.0],
            ..small_config()
        };
        let a = run_study_with(&cfg, Execution::Sequential).unwrap();
        let b = run_study_with(&cfg, Execution::Parallel(Some(3))).unwrap();
        assert_eq!(results_csv(&a), results_csv(&b));
    }

    #[test]
    fn spread_of_identical_records_is_zero() {
        let t = ResultTable::from_records(
            DEFAULT_SIZES.iter().map(|&s| record(TopologyId::Square, s, CaseKind::ActuatorStiff, 0.01, 66.0, 0.01)),
        )
        .unwrap();
        let rep = size_independence_report(&t, SIZE_SPREAD_THRESHOLD).unwrap();
        assert_eq!(rep.len(), 1);
        assert_eq!(rep[0].max(), 0.0);
        assert!(!rep[0].flagged);
    }

    #[test]
    fn outlier_is_flagged() {
        let t = ResultTable::from_records([
            record(TopologyId::Square, 750.0, CaseKind::ActuatorStiff, 0.01, 66.0, 0.01),
            record(TopologyId::Square, 1000.0, CaseKind::ActuatorStiff, 0.01, 66.0, 0.01),
            record(TopologyId::Square, 1250.0, CaseKind::ActuatorStiff, 0.01, 132.0, 0.01),
        ])
        .unwrap();
        let rep = size_independence_report(&t, SIZE_SPREAD_THRESHOLD).unwrap();
        assert!(rep[0].flagged);
        assert!((rep[0].e1 - 66.0 / 88.0).abs() < 1e-12);
    }

    #[test]
    fn spread_needs_two_sizes() {
        let t = ResultTable::from_records([record(TopologyId::Square, 750.0, CaseKind::ActuatorStiff, 0.01, 1.0, 1.0)])
            .unwrap();
        assert!(matches!(size_independence_report(&t, 0.05), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn ranking_orders_and_marks_ties() {
        let t = ResultTable::from_records([
            record(TopologyId::Square, 750.0, CaseKind::ActuatorStiff, 0.01, 66.0, 1.0),
            record(TopologyId::Triangular, 750.0, CaseKind::ActuatorStiff, 0.01, 77.0, 29.0),
            record(TopologyId::Hexagonal, 750.0, CaseKind::ActuatorStiff, 0.01, 64.0, 2.0),
        ])
        .unwrap();
        let r = rank_report(&t, 0.01, CaseKind::ActuatorStiff).unwrap();
        let order: Vec<_> = r.e.iter().map(|e| e.topology).collect();
        assert_eq!(order, vec![TopologyId::Triangular, TopologyId::Square, TopologyId::Hexagonal]);
        assert!(!r.e[0].tied_with_next);
        assert!(r.e[1].tied_with_next);
        let swapped = [TopologyId::Triangular, TopologyId::Hexagonal, TopologyId::Square];
        assert!(order_violations(&r.e, &swapped).is_empty());
        let wrong = [TopologyId::Square, TopologyId::Triangular];
        assert_eq!(order_violations(&r.e, &wrong), vec![(TopologyId::Square, TopologyId::Triangular)]);
    }

    #[test]
    fn ranking_of_one_topology() {
        let t = ResultTable::from_records([record(TopologyId::Square, 750.0, CaseKind::ActuatorStiff, 0.01, 1.0, 1.0)])
            .unwrap();
        let r = rank_report(&t, 0.01, CaseKind::ActuatorStiff).unwrap();
        assert_eq!(r.e.len(), 1);
        assert!(matches!(rank_report(&t, 0.02, CaseKind::ActuatorStiff), Err(Error::MissingTopology(_))));
    }

    #[test]
    fn heatmap_self_ratio_and_missing_case() {
        let mut rs: Vec<_> = CaseKind::ALL
            .iter()
            .enumerate()
            .map(|(i, &c)| record(TopologyId::Square, 750.0, c, 0.01, 10.0 * (i + 1) as f64, 1.0 + i as f64))
            .collect();
        let h = stiffness_case_heatmap(&ResultTable::from_records(rs.clone()).unwrap(), 0.01).unwrap();
        assert_eq!(h.rows[0].e1[0], 1.0);
        assert_eq!(h.rows[0].g12[0], 1.0);
        assert_eq!(h.rows[0].e1[3], 4.0);
        rs.pop();
        let err = stiffness_case_heatmap(&ResultTable::from_records(rs).unwrap(), 0.01).unwrap_err();
        assert!(matches!(err, Error::MissingCase(_)));
    }

    #[test]
    fn area_ratio_rule() {
        assert_eq!(Deformation::from_area_ratio(5.0), Deformation::Stretching);
        assert_eq!(Deformation::from_area_ratio(4.0), Deformation::Stretching);
        assert_eq!(Deformation::from_area_ratio(118.0), Deformation::Bending);
        assert_eq!(Deformation::from_area_ratio(3.9), Deformation::Bending);
    }

    #[test]
    fn export_single_record_and_empty_table() {
        let dir = tempfile::tempdir().unwrap();
        let t = ResultTable::from_records([record(TopologyId::Square, 750.0, CaseKind::ActuatorStiff, 0.01, 66.0, 0.01)])
            .unwrap();
        export(&t, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().contains(",0.000000,"));
        assert!(matches!(export(&ResultTable::new(), dir.path()), Err(Error::EmptyTable)));
    }

    #[test]
    fn results_csv_round_trip() {
        let t = ResultTable::from_records([
            record(TopologyId::Square, 750.0, CaseKind::ActuatorStiff, 0.01, 66.0, 0.01),
            record(TopologyId::Trihexagonal, 1000.0, CaseKind::EqualHigh, 0.045, 38.5, 14.4),
        ])
        .unwrap();
        let text = results_csv(&t);
        assert_eq!(results_csv(&read_results_csv(&text).unwrap()), text);
    }
}
