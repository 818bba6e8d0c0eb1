//! Experiment configuration, the runner, manifests and plot emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::ensembles;
use crate::error::{Error, Result};
use crate::geometry::{Arc, Rational};
use crate::homotopy::{
    certify_with_base, conjugation_path, log_path, theorem1_pipeline, CertificateReport, CertifyConfig,
    Theorem1Config,
};
use crate::index::{index_k_projection, projection_index_with, IndexConfig};
use crate::locality::{compactness_profile, csv_err};
use crate::operator::{Boundary, Representation, TruncationWindow};
use crate::surgery::deletion_series;

pub const OUT_DIR_ENV: &str = "OPL_OUT";
pub const REPORT_FORMAT: &str = "opl-report v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub sv_threshold: f64,
    pub trace_power: u32,
    pub compact_floor: f64,
    pub buffer: f64,
    pub tol_idem: f64,
    pub tol_inv: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sv_threshold: 1e-6,
            trace_power: 4,
            compact_floor: 1e-3,
            buffer: 0.25,
            tol_idem: 1e-10,
            tol_inv: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn index_config(&self) -> IndexConfig {
        IndexConfig {
            sv_threshold: self.sv_threshold,
            trace_power: self.trace_power,
            compact_floor: self.compact_floor,
            buffer: self.buffer,
            tol_idem: self.tol_idem,
            ..IndexConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    IndexSweep,
    Theorem1,
    Theorem2,
    Surgery,
    LocalityScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    Open,
    Periodic,
}

impl From<BoundaryMode> for Boundary {
    fn from(b: BoundaryMode) -> Self {
        match b {
            BoundaryMode::Open => Boundary::Open,
            BoundaryMode::Periodic => Boundary::Periodic,
        }
    }
}

/// Experiment-specific knobs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub ks: Vec<i64>,
    pub k: i64,
    pub eps: f64,
    pub centers: usize,
    pub copies: usize,
    pub pairs: usize,
    /// Half-width of the line segment where the conjugating unitary acts.
    pub reach: i64,
    pub export_path: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            ks: (-3..=3).collect(),
            k: -1,
            eps: 1e-4,
            centers: 8,
            copies: 1,
            pairs: 10,
            reach: 3,
            export_path: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub representation: Representation,
    pub radius: i64,
    pub boundary: BoundaryMode,
    pub tolerances: Tolerances,
    pub samples: usize,
    /// Pairs of arcs in their textual form, e.g. `["(1,0)..(0,1)", "(-1,0)..(0,-1)"]`.
    pub arc_pairs: Vec<(String, String)>,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub params: Params,
}

const REQUIRED: [&str; 9] = [
    "experiment",
    "representation",
    "radius",
    "boundary",
    "tolerances",
    "samples",
    "arc_pairs",
    "seed",
    "output_dir",
];

impl ExperimentConfig {
    /// Parse and validate, collecting every field-level problem.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Validation(vec![format!("invalid JSON: {e}")]))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Validation(vec!["config must be a JSON object".into()]))?;
        let missing: Vec<String> = REQUIRED
            .iter()
            .filter(|k| !obj.contains_key(**k))
            .map(|k| format!("missing field `{k}`"))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Validation(missing));
        }
        let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| Error::Validation(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let t = &self.tolerances;
        for (name, v) in [
            ("sv_threshold", t.sv_threshold),
            ("compact_floor", t.compact_floor),
            ("buffer", t.buffer),
            ("tol_idem", t.tol_idem),
            ("tol_inv", t.tol_inv),
        ] {
            if !(v > 0.0) {
                errs.push(format!("tolerances.{name} must be positive"));
            }
        }
        if t.trace_power == 0 {
            errs.push("tolerances.trace_power must be positive".into());
        }
        if self.radius <= 0 {
            errs.push("radius must be positive".into());
        }
        if self.samples < 2 {
            errs.push("samples must be at least 2".into());
        }
        if !(self.params.eps > 0.0 && self.params.eps < 1.0) {
            errs.push("params.eps must lie in (0, 1)".into());
        }
        if let Err(e) = self.arcs() {
            errs.push(format!("arc_pairs: {e}"));
        }
        let need = match self.experiment {
            Experiment::IndexSweep | Experiment::Theorem2 | Experiment::Surgery => Representation::Z,
            Experiment::Theorem1 | Experiment::LocalityScan => Representation::Z2,
        };
        if self.representation != need {
            errs.push(format!("representation must be {need} for this experiment"));
        }
        if matches!(self.experiment, Experiment::IndexSweep | Experiment::Theorem2)
            && self.boundary != BoundaryMode::Open
        {
            errs.push("boundary must be open for index computations".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn arcs(&self) -> Result<Vec<(Arc, Arc)>> {
        self.arc_pairs
            .iter()
            .map(|(a, b)| Ok((a.parse::<Arc>()?, b.parse::<Arc>()?)))
            .collect()
    }

    pub fn window(&self) -> Result<TruncationWindow> {
        TruncationWindow::new(self.representation, Rational::from_integer(self.radius))
    }

    fn certify_config(&self) -> Result<CertifyConfig> {
        Ok(CertifyConfig {
            samples: self.samples,
            arc_pairs: self.arcs()?,
            index: self.tolerances.index_config(),
            ..CertifyConfig::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub versions: BTreeMap<String, String>,
    pub timings: Vec<(String, f64)>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes files under the output directory and remembers their hashes.
struct Emitter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Emitter {
    fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Emitter { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn plot(&mut self, plot: &Plot) -> Result<()> {
        for (name, bytes) in plot.render()? {
            self.write(&name, &bytes)?;
        }
        Ok(())
    }

    /// Record files written by someone else.
    fn adopt(&mut self, name: &str) -> Result<()> {
        let bytes = std::fs::read(self.dir.join(name))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }
}

/// Number formatting shared by CSVs and SVG labels.
pub fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotKind {
    Lines { x_label: String, y_label: String, log_y: bool },
    Bars { x_label: String, y_label: String },
}

/// A named table of series sharing one plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub kind: PlotKind,
    /// `(series, points)`.
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: f64 = 60.0;

impl Plot {
    pub fn lines(name: &str, title: &str, x: &str, y: &str, log_y: bool) -> Self {
        Plot {
            name: name.into(),
            title: title.into(),
            kind: PlotKind::Lines {
                x_label: x.into(),
                y_label: y.into(),
                log_y,
            },
            series: Vec::new(),
        }
    }

    pub fn bars(name: &str, title: &str, x: &str, y: &str) -> Self {
        Plot {
            name: name.into(),
            title: title.into(),
            kind: PlotKind::Bars {
                x_label: x.into(),
                y_label: y.into(),
            },
            series: Vec::new(),
        }
    }

    pub fn with_series(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push((label.into(), points));
        self
    }

    fn is_empty(&self) -> bool {
        self.series.iter().all(|(_, p)| p.is_empty())
    }

    fn labels(&self) -> (&str, &str) {
        match &self.kind {
            PlotKind::Lines { x_label, y_label, .. } | PlotKind::Bars { x_label, y_label } => (x_label, y_label),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let (x, y) = self.labels();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["series", x, y]).map_err(csv_err)?;
        for (label, pts) in &self.series {
            for (a, b) in pts {
                w.write_record([label.as_str(), &fmt_num(*a), &fmt_num(*b)]).map_err(csv_err)?;
            }
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// SVG text; numbers appear only as the extreme data values, printed as in the CSV.
    pub fn to_svg(&self) -> String {
        let (xl, yl) = self.labels();
        let log_y = matches!(self.kind, PlotKind::Lines { log_y: true, .. });
        let pts: Vec<(f64, f64)> = self.series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
        let (mut x0, mut x1) = extent(pts.iter().map(|p| p.0));
        let (mut y0, mut y1) = extent(pts.iter().map(|p| p.1));
        let (lx0, lx1, ly0, ly1) = (x0, x1, y0, y1);
        if matches!(self.kind, PlotKind::Bars { .. }) {
            y0 = y0.min(0.0);
            y1 = y1.max(0.0);
            x0 -= 0.5;
            x1 += 0.5;
        }
        let ty = |v: f64| {
            if log_y {
                v.max(1e-300).log10()
            } else {
                v
            }
        };
        let (mut yy0, mut yy1) = (ty(y0), ty(y1));
        if yy1 - yy0 < 1e-12 {
            yy0 -= 0.5;
            yy1 += 0.5;
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
        let py = |y: f64| H - M - (ty(y) - yy0) / (yy1 - yy0) * (H - 2.0 * M);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<path d="M{M} {} H{} M{M} {} V{M}" stroke="black" fill="none"/>"#,
            H - M,
            W - M,
            H - M
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            W / 2.0,
            H - 15.0,
            escape(xl)
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle" font-family="sans-serif" font-size="12">{}{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(yl),
            if log_y { " (log)" } else { "" }
        );
        for (v, x, y, anchor) in [
            (lx0, M, H - M + 16.0, "start"),
            (lx1, W - M, H - M + 16.0, "end"),
        ] {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{}</text>"#,
                fmt_num(v)
            );
        }
        for v in [ly0, ly1] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
                M - 4.0,
                py(v),
                fmt_num(v)
            );
        }
        const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
        for (k, (label, p)) in self.series.iter().enumerate() {
            let c = COLORS[k % COLORS.len()];
            match self.kind {
                PlotKind::Lines { .. } => {
                    let d: Vec<String> = p.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" stroke="{c}" stroke-width="1.5" fill="none"/>"#,
                        d.join(" ")
                    );
                }
                PlotKind::Bars { .. } => {
                    let base = py(0.0);
                    let bw = 0.6 * (W - 2.0 * M) / (x1 - x0);
                    for (x, y) in p {
                        let top = py(*y).min(base);
                        let h = (py(*y) - base).abs();
                        let _ = writeln!(
                            s,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}"/>"#,
                            px(*x) - bw / 2.0,
                            top,
                            bw,
                            h
                        );
                    }
                }
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11" fill="{c}">{}</text>"#,
                W - M,
                M + 14.0 * k as f64,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    /// `(file name, bytes)` for the CSV and, unless empty, the SVG.
    pub fn render(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut out = vec![(format!("{}.csv", self.name), self.to_csv()?.into_bytes())];
        if !self.is_empty() {
            out.push((format!("{}.svg", self.name), self.to_svg().into_bytes()));
        }
        Ok(out)
    }
}

fn extent(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Write each plot's CSV and SVG into `out_dir`; returns the file names.
pub fn emit_plots(plots: &[Plot], out_dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(out_dir)?;
    let mut names = Vec::new();
    for p in plots {
        for (name, bytes) in p.render()? {
            std::fs::write(out_dir.join(&name), bytes)?;
            names.push(name);
        }
    }
    Ok(names)
}

/// Defect-versus-t plots of a certificate, one per metric.
pub fn certificate_plots(report: &CertificateReport, prefix: &str) -> Vec<Plot> {
    let metric = |name: &str, title: &str, y: &str, log: bool, f: fn(&crate::homotopy::SegmentReport) -> &Vec<f64>| {
        let mut p = Plot::lines(&format!("{prefix}{name}"), title, "t", y, log);
        for (i, s) in report.segments.iter().enumerate() {
            let pts: Vec<(f64, f64)> = s.t.iter().copied().zip(f(s).iter().copied()).collect();
            p = p.with_series(&format!("{i}:{}", s.label), pts);
        }
        p
    };
    vec![
        metric("unitarity_defect", "unitarity defect along the path", "defect", true, |s| &s.unitarity),
        metric("sigma_min", "smallest singular value along the path", "sigma_min", false, |s| &s.sigma_min),
        metric("locality_defect", "cross-cone block norm beyond the allowance", "defect", true, |s| &s.locality),
    ]
}

/// Execute the experiment described by the file at `config_path`.
pub fn run(config_path: &Path) -> Result<RunManifest> {
    let cfg = ExperimentConfig::load(config_path)?;
    run_config(cfg)
}

/// Execute an already-validated config. `OPL_OUT` overrides the output directory.
pub fn run_config(mut cfg: ExperimentConfig) -> Result<RunManifest> {
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.output_dir = PathBuf::from(dir);
        }
    }
    run_resolved(cfg)
}

/// Execute with the output directory exactly as configured.
pub fn run_resolved(cfg: ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let mut em = Emitter::new(cfg.output_dir.clone())?;
    let mut timings = Vec::new();
    let clock = Instant::now();
    let stage = |name: &'static str| move |e: Error| e.in_stage(name);
    match cfg.experiment {
        Experiment::IndexSweep => index_sweep(&cfg, &mut em).map_err(stage("index-sweep"))?,
        Experiment::Theorem1 => theorem1(&cfg, &mut em).map_err(stage("theorem1"))?,
        Experiment::Theorem2 => theorem2(&cfg, &mut em).map_err(stage("theorem2"))?,
        Experiment::Surgery => surgery(&cfg, &mut em).map_err(stage("surgery"))?,
        Experiment::LocalityScan => locality_scan(&cfg, &mut em).map_err(stage("locality-scan"))?,
    }
    timings.push((format!("{:?}", cfg.experiment), clock.elapsed().as_secs_f64()));
    let mut versions = BTreeMap::new();
    versions.insert("opl-core".to_string(), env!("CARGO_PKG_VERSION").to_string());
    versions.insert("opmat".to_string(), "v1".to_string());
    versions.insert("report".to_string(), REPORT_FORMAT.to_string());
    let manifest = RunManifest {
        experiment: cfg.experiment,
        config: cfg.clone(),
        versions,
        timings,
        files: em.files.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(cfg.output_dir.join("manifest.json"), text)?;
    Ok(manifest)
}

#[derive(Serialize)]
struct SweepRow {
    k: i64,
    index: i64,
    complement_index: i64,
    method: crate::index::IndexMethod,
}

fn index_sweep(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<()> {
    let w = cfg.window()?.shared();
    let icfg = cfg.tolerances.index_config();
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for &k in &cfg.params.ks {
        let (base, p) = index_k_projection(k, w.clone())?;
        let r = projection_index_with(&p, &base, &icfg)?;
        let c = projection_index_with(&p.complement(), &base, &icfg)?;
        rows.push(SweepRow {
            k,
            index: r.value,
            complement_index: c.value,
            method: r.method,
        });
        results.push(r);
    }
    let mut w_csv = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w_csv.serialize(r).map_err(csv_err)?;
    }
    em.write("index_sweep.csv", &w_csv.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    em.json("index_sweep.json", &results)?;
    let bars = Plot::bars("index_vs_k", "projection index against k", "k", "index")
        .with_series("index", rows.iter().map(|r| (r.k as f64, r.index as f64)).collect());
    em.plot(&bars)
}

fn theorem1(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<()> {
    let w = cfg.window()?.shared();
    let u = ensembles::local_unitary(w, cfg.seed)?;
    let t1 = Theorem1Config {
        centers: cfg.params.centers,
        copies: cfg.params.copies,
        certify: cfg.certify_config()?,
    };
    let out = theorem1_pipeline(&u, cfg.params.eps, &t1)?;
    em.json("certificate.json", &out.report)?;
    em.write("certificate.csv", out.report.to_csv()?.as_bytes())?;
    em.write("plan.json", format!("{}\n", out.plan.to_json()?).as_bytes())?;
    em.json("mixing.json", &out.mixing)?;
    em.json("block_unitary_checks.json", &out.block_checks)?;
    if cfg.params.export_path {
        let manifest = out.path.write_manifest(&cfg.output_dir.join("path"))?;
        for s in &manifest.segments {
            for f in &s.payload {
                em.adopt(&format!("path/{f}"))?;
            }
        }
        em.adopt("path/path.json")?;
    } else {
        let segs: Vec<_> = out
            .path
            .segments
            .iter()
            .map(|s| serde_json::json!({"kind": s.kind, "label": s.label, "reversed": s.reversed, "payload": []}))
            .collect();
        em.json("path.json", &serde_json::json!({"window": out.path.window().to_string(), "segments": segs}))?;
    }
    for p in certificate_plots(&out.report, "") {
        em.plot(&p)?;
    }
    Ok(())
}

fn theorem2(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<()> {
    let w = cfg.window()?.shared();
    let (base, q) = index_k_projection(cfg.params.k, w.clone())?;
    let u = ensembles::line_local_unitary(w.clone(), cfg.params.reach, cfg.seed)?;
    let upath = log_path(&u)?.reversed();
    let path = conjugation_path(&q, &upath)?;
    let rep = certify_with_base(&path, &cfg.certify_config()?, Some(&base))?;
    em.json("certificate.json", &rep)?;
    em.write("certificate.csv", rep.to_csv()?.as_bytes())?;
    let trace = Plot::lines("index_trace", "projection index along the path", "t", "index", false).with_series(
        "index",
        rep.segments
            .iter()
            .flat_map(|s| s.t.iter().copied())
            .zip(rep.index_trace.iter().map(|&i| i as f64))
            .collect(),
    );
    em.plot(&trace)
}

#[derive(Serialize)]
struct SurgeryReport {
    eps: f64,
    pair_norms: Vec<f64>,
    budgets: Vec<f64>,
    residuals: Vec<f64>,
    max_residual: f64,
    s_norm: f64,
    series_bound: f64,
    distance: f64,
}

fn surgery(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<()> {
    let w = cfg.window()?.shared();
    let eps = cfg.params.eps;
    let (a, blocks) = ensembles::admissible_instance(w, cfg.params.pairs, eps, cfg.seed)?;
    let pairs = ensembles::pairs_for(&a, &blocks)?;
    let d = deletion_series(&a, &pairs, eps)?;
    let rep = SurgeryReport {
        eps,
        budgets: (1..=pairs.len()).map(|k| crate::surgery::pair_budget(eps, k)).collect(),
        max_residual: d.residuals.iter().copied().fold(0.0, f64::max),
        pair_norms: d.pair_norms.clone(),
        residuals: d.residuals.clone(),
        s_norm: d.s_norm,
        series_bound: d.series_bound,
        distance: a.dist(&d.b)?,
    };
    em.json("surgery.json", &rep)?;
    let plot = Plot::lines("surgery_pairs", "pair norms before and after deletion", "pair", "norm", true)
        .with_series("before", d.pair_norms.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect())
        .with_series("after", d.residuals.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect());
    em.plot(&plot)
}

fn locality_scan(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<()> {
    let w = cfg.window()?.shared();
    let u = ensembles::local_unitary(w, cfg.seed)?;
    let cutoffs: Vec<Rational> = (0..=cfg.radius).map(Rational::from_integer).collect();
    let mut plot = Plot::lines("decay_profile", "cross-cone block norm against cutoff radius", "radius", "norm", false);
    let mut profiles = Vec::new();
    for (i, j) in cfg.arcs()? {
        let prof = compactness_profile(&u, &i, &j, &cutoffs)?;
        let pts: Vec<(f64, f64)> = prof
            .radii
            .iter()
            .map(|r| *r.numer() as f64 / *r.denom() as f64)
            .zip(prof.values.iter().copied())
            .collect();
        plot = plot.with_series(&format!("{i} -> {j}"), pts);
        profiles.push(serde_json::json!({"from": i.to_string(), "to": j.to_string(), "profile": prof}));
    }
    em.json("decay_profiles.json", &profiles)?;
    em.plot(&plot)?;
    Ok(())
}

/// Ready-made config for an experiment, for `opl` users and tests.
pub fn example_config(experiment: Experiment, out: &Path, seed: u64) -> ExperimentConfig {
    let (representation, radius, samples) = match experiment {
        Experiment::IndexSweep => (Representation::Z, 32, 20),
        Experiment::Theorem2 => (Representation::Z, 32, 20),
        Experiment::Surgery => (Representation::Z, 100, 20),
        Experiment::Theorem1 => (Representation::Z2, 8, 20),
        Experiment::LocalityScan => (Representation::Z2, 12, 20),
    };
    let arc_pairs = match representation {
        Representation::Z2 => vec![
            ("(1,0)..(1,1)".to_string(), "(-1,0)..(-1,-1)".to_string()),
            ("(0,1)..(-1,1)".to_string(), "(0,-1)..(1,-1)".to_string()),
            ("(1,2)..(-1,2)".to_string(), "(-1,-2)..(1,-2)".to_string()),
        ],
        Representation::Z => Vec::new(),
    };
    ExperimentConfig {
        experiment,
        representation,
        radius,
        boundary: BoundaryMode::Open,
        tolerances: Tolerances::default(),
        samples,
        arc_pairs,
        seed,
        output_dir: out.to_path_buf(),
        params: Params::default(),
    }
}
