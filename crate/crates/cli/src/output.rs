//! Errors, run manifests and file writers shared by the commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bbr_core::latent_model::ModelConfig;
use bbr_core::sampler::SamplerConfig;

use crate::args::{BasisArg, PolicyArg, TruthArg};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PREREQUISITE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bbr_core::Error),
    #[error("{0}")]
    Prerequisite(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use bbr_core::Error as E;
        match self {
            CliError::Prerequisite(_) => EXIT_PREREQUISITE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Core(E::DrawsFormat(_)) => EXIT_PREREQUISITE,
            CliError::Core(E::Domain(_) | E::UndefinedRatio | E::AllSimulationsUndefined(_)) => EXIT_NUMERICAL,
            CliError::Core(_) | CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Io { .. } | CliError::Json(_) | CliError::Csv(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// What a command read and how, written as `manifest.<command>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auxiliary: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<TruthArg>,
    #[serde(default)]
    pub group_by_elims: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_basis: Option<BasisArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sims: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<String>,
    pub versions: BTreeMap<String, String>,
    pub out_dir: PathBuf,
}

impl RunManifest {
    pub fn new(command: &str, out_dir: &Path) -> Self {
        RunManifest {
            command: command.into(),
            input: None,
            auxiliary: None,
            mapping: None,
            policy: None,
            ground_truth: None,
            group_by_elims: false,
            sampler: None,
            model: None,
            ratio_basis: None,
            seed: None,
            n_sims: None,
            params: None,
            assignment: None,
            versions: BTreeMap::from([
                ("bbr".to_string(), env!("CARGO_PKG_VERSION").to_string()),
                ("manifest".to_string(), "1".to_string()),
            ]),
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn path(out: &Path, command: &str) -> PathBuf {
        out.join(format!("manifest.{command}.json"))
    }

    pub fn write(&self) -> CliResult<()> {
        write_json(&Self::path(&self.out_dir, &self.command), self)
    }

    /// Loads the manifest of an earlier command, or explains which command
    /// to run first.
    pub fn load_prerequisite(out: &Path, command: &str) -> CliResult<Self> {
        let path = Self::path(out, command);
        let text = fs::read_to_string(&path).map_err(|_| {
            CliError::Prerequisite(format!(
                "{} not found: run {command} first",
                path.display()
            ))
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(io_err(path))
}

/// Serialises rows with a header taken from the struct fields.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Histogram of proportions in ten 10%-wide bins, as standalone SVG.
pub fn histogram_svg(title: &str, x_label: &str, proportions: &[f64]) -> String {
    const W: f64 = 520.0;
    const H: f64 = 340.0;
    const LEFT: f64 = 56.0;
    const RIGHT: f64 = 16.0;
    const TOP: f64 = 36.0;
    const BOTTOM: f64 = 52.0;
    let mut counts = [0usize; 10];
    for &p in proportions {
        let b = ((p * 10.0).floor() as usize).min(9);
        counts[b] += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0).max(1);
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let bar_w = plot_w / 10.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    for (k, &c) in counts.iter().enumerate() {
        let h = plot_h * c as f64 / max as f64;
        let x = LEFT + k as f64 * bar_w;
        let y = TOP + plot_h - h;
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{h:.1}" fill="#4c72b0" stroke="white"><title>{}-{}%: {c}</title></rect>"##,
            bar_w,
            k * 10,
            k * 10 + 10
        );
    }
    let base = TOP + plot_h;
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        W - RIGHT
    );
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="black"/>"#);
    for k in 0..=10 {
        let x = LEFT + k as f64 * bar_w;
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            base + 16.0,
            k * 10
        );
    }
    for (v, label) in [(0, "0".to_string()), (max, max.to_string())] {
        let y = base - plot_h * v as f64 / max as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">Count</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Fixed-width float for human-readable output; `-` for missing values.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins_and_top_edge() {
        let svg = histogram_svg("t", "x", &[0.0, 0.05, 0.95, 1.0, 0.5]);
        assert!(svg.contains("<title>0-10%: 2</title>"));
        assert!(svg.contains("<title>90-100%: 2</title>"));
        assert!(svg.contains("<title>50-60%: 1</title>"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = RunManifest::new("fit", Path::new("o"));
        m.policy = Some(PolicyArg::Pool);
        m.sampler = Some(SamplerConfig::default());
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"policy\":\"pool\""));
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
