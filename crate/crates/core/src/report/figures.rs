//! Parameter grids and CSV tables for the alpha-sweep figures.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::model::{AccessModel, ServiceModel};
use crate::optimizer::{column_direction, optimal_alpha, sweep_alpha, trend, SweepTable};
use crate::report::format::{fmt_sig, CsvDoc};
use crate::Result;

/// Node count used for the probabilistic-access figures, large enough that
/// `alpha` in `[1, 10]` is feasible for every `m <= 4`.
pub const PROBABILISTIC_NODES: u64 = 40;

pub const FIGURE_MU: f64 = 1.0;
pub const FIGURE_DELTA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [FigureId::Fig2, FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown figure id {s:?} (expected one of fig2, fig3, fig4, fig5, fig6)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    Scaled,
    Shifted,
    Recovery,
}

impl Panel {
    pub fn as_str(self) -> &'static str {
        match self {
            Panel::Scaled => "scaled",
            Panel::Shifted => "shifted",
            Panel::Recovery => "recovery",
        }
    }

    fn service(self) -> ServiceModel<f64> {
        match self {
            Panel::Shifted => ServiceModel::ShiftedExponential { mu: FIGURE_MU, delta: FIGURE_DELTA },
            _ => ServiceModel::ScaledExponential { mu: FIGURE_MU },
        }
    }
}

/// One curve of a figure: a fixed system family swept over `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSeries {
    pub label: String,
    pub nodes: u64,
    pub redundancy: u64,
    pub access: AccessModel<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub id: FigureId,
    pub series: Vec<FigureSeries>,
    pub panels: Vec<Panel>,
    /// Cap on the sweep beyond the structural `min(N/m, r)` limit.
    pub alpha_limit: Option<u64>,
    /// Free-form metadata lines recorded in every panel file.
    pub notes: Vec<String>,
}

fn fixed(label: String, nodes: u64, redundancy: u64, r: u64) -> FigureSeries {
    FigureSeries { label, nodes, redundancy, access: AccessModel::FixedSize { r } }
}

fn prob(label: String, redundancy: u64, p: f64) -> FigureSeries {
    FigureSeries { label, nodes: PROBABILISTIC_NODES, redundancy, access: AccessModel::Probabilistic { p } }
}

pub fn figure_spec(id: FigureId) -> FigureSpec {
    let all = vec![Panel::Scaled, Panel::Shifted, Panel::Recovery];
    match id {
        FigureId::Fig2 => FigureSpec {
            id,
            series: (3..=6).map(|m| fixed(format!("m={m}"), 30, m, 5)).collect(),
            panels: all,
            alpha_limit: None,
            notes: vec!["fixed-size access N=30 r=5; alpha in [1, min(N/m, r)]".into()],
        },
        FigureId::Fig3 => FigureSpec {
            id,
            series: (6..=9).map(|r| fixed(format!("r={r}"), 30, 3, r)).collect(),
            panels: all,
            alpha_limit: None,
            notes: vec!["fixed-size access N=30 m=3; alpha in [1, min(N/m, r)]".into()],
        },
        FigureId::Fig4 => FigureSpec {
            id,
            series: (1..=4).map(|m| prob(format!("m={m}"), m, 0.3)).collect(),
            panels: all,
            alpha_limit: Some(10),
            notes: vec![format!("probabilistic access p=0.3 N={PROBABILISTIC_NODES}; alpha in [1, 10]")],
        },
        FigureId::Fig5 => FigureSpec {
            id,
            series: [0.51, 0.61, 0.71].into_iter().map(|p| prob(format!("p={p}"), 2, p)).collect(),
            panels: vec![Panel::Scaled, Panel::Recovery],
            alpha_limit: Some(10),
            notes: vec![
                format!("probabilistic access m=2 N={PROBABILISTIC_NODES}; alpha in [1, 10]"),
                "p values 0.51 0.61 0.71 are evenly spaced between the stated endpoints".into(),
            ],
        },
        FigureId::Fig6 => FigureSpec {
            id,
            series: [0.3, 0.5, 0.7].into_iter().map(|p| prob(format!("p={p}"), 2, p)).collect(),
            panels: vec![Panel::Shifted, Panel::Recovery],
            alpha_limit: Some(10),
            notes: vec![
                format!("probabilistic access m=2 N={PROBABILISTIC_NODES}; alpha in [1, 10]"),
                "interpretation: mu=1 delta=3 is read as shifted exponential service".into(),
            ],
        },
    }
}

/// One `fig<k>_<panel>.csv` file.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelTable {
    pub figure: FigureId,
    pub panel: Panel,
    pub metadata: Vec<String>,
    /// `(alpha, series_label, value)` ordered by series, then alpha.
    pub rows: Vec<(u64, String, f64)>,
}

impl PanelTable {
    pub fn file_name(&self) -> String {
        format!("{}_{}.csv", self.figure, self.panel.as_str())
    }

    pub fn render(&self) -> String {
        let mut doc = CsvDoc::new(&["alpha", "series_label", "value"]);
        for line in &self.metadata {
            doc.comment(line.clone());
        }
        for (alpha, label, value) in &self.rows {
            doc.row([alpha.to_string(), label.clone(), fmt_sig(*value)]);
        }
        doc.render()
    }

    /// Values of one series in alpha order.
    pub fn series(&self, label: &str) -> Vec<(u64, f64)> {
        self.rows.iter().filter(|(_, l, _)| l == label).map(|(a, _, v)| (*a, *v)).collect()
    }
}

fn truncate(mut sweep: SweepTable<f64>, limit: Option<u64>) -> SweepTable<f64> {
    if let Some(limit) = limit {
        sweep.rows.retain(|r| r.alpha <= limit);
        sweep.alpha_max = sweep.alpha_max.min(limit);
    }
    sweep
}

/// Computes every panel of a figure.
pub fn compute_figure(id: FigureId) -> Result<Vec<PanelTable>> {
    let spec = figure_spec(id);
    spec.panels
        .iter()
        .map(|&panel| {
            let service = panel.service();
            let mut rows = Vec::new();
            let mut optima = Vec::new();
            let mut metadata = vec![
                format!("figure: {id}"),
                format!("panel: {}", panel.as_str()),
                format!("version: {}", env!("CARGO_PKG_VERSION")),
            ];
            metadata.extend(spec.notes.iter().cloned());
            metadata.push(match panel {
                Panel::Recovery => "value: recovery probability p_s".into(),
                Panel::Scaled => format!("value: service rate mu_s, scaled exponential mu={FIGURE_MU}"),
                Panel::Shifted => {
                    format!("value: service rate mu_s, shifted exponential mu={FIGURE_MU} delta={FIGURE_DELTA}")
                }
            });
            for s in &spec.series {
                let sweep = truncate(sweep_alpha(s.nodes, s.redundancy, &s.access, &service)?, spec.alpha_limit);
                let opt = optimal_alpha(&sweep)?;
                let values: Vec<f64> = sweep
                    .rows
                    .iter()
                    .map(|r| if panel == Panel::Recovery { r.recovery_probability } else { r.service_rate })
                    .collect();
                let star = if panel == Panel::Recovery { opt.alpha_star_recovery } else { opt.alpha_star_rate };
                optima.push(star);
                metadata.push(format!(
                    "series {}: alpha_star={star} direction={}",
                    s.label,
                    column_direction(&values).as_str()
                ));
                rows.extend(sweep.rows.iter().zip(values).map(|(r, v)| (r.alpha, s.label.clone(), v)));
            }
            metadata.push(format!("trend of alpha_star across series: {}", trend(&optima).as_str()));
            Ok(PanelTable { figure: id, panel, metadata, rows })
        })
        .collect()
}

/// Writes every panel of a figure into `dir` and returns the paths written.
pub fn write_figure(id: FigureId, dir: &Path) -> std::result::Result<Vec<PathBuf>, FigureError> {
    let tables = compute_figure(id).map_err(FigureError::Compute)?;
    std::fs::create_dir_all(dir).map_err(|e| FigureError::Io(dir.to_path_buf(), e))?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(t.file_name());
            std::fs::write(&path, t.render()).map_err(|e| FigureError::Io(path.clone(), e))?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum FigureError {
    #[error(transparent)]
    Compute(crate::Error),
    #[error("cannot write {path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),
}
