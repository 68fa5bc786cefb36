//! Empirical |Sha| divisibility proportions against Delaunay's heuristics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvedata::Dataset;
use crate::error::{Error, Result};
use crate::svg::{Plot, Series};

pub const GRID_START: f64 = 1e3;
pub const GRID_POINTS: usize = 50;

/// Statistic compared in the Delaunay table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Trivial,
    Divisible(u64),
}

impl Statistic {
    fn holds(self, sha: u64) -> bool {
        match self {
            Statistic::Trivial => sha == 1,
            Statistic::Divisible(p) => sha % p == 0,
        }
    }

    pub fn name(self) -> String {
        match self {
            Statistic::Trivial => "sha = 1".into(),
            Statistic::Divisible(p) => format!("{p} | sha"),
        }
    }
}

/// (statistic, rank, heuristic prediction, observed value for conductor < 500000)
/// as published alongside the data this toolkit was designed around.
pub const HEURISTIC_TABLE: [(Statistic, u32, f64, f64); 6] = [
    (Statistic::Trivial, 0, 0.022924, 0.809611),
    (Statistic::Trivial, 1, 0.54914, 0.986610),
    (Statistic::Divisible(2), 0, 0.580577, 0.138529),
    (Statistic::Divisible(2), 1, 0.31146, 0.012370),
    (Statistic::Divisible(3), 0, 0.360995, 0.044557),
    (Statistic::Divisible(3), 1, 0.0416, 0.0004953),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub conductor_bound: f64,
    /// `None` when no curve of this rank lies below the bound.
    pub proportion: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionSeries {
    pub statistic: Statistic,
    pub rank: u32,
    pub points: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub statistic: Statistic,
    pub rank: u32,
    pub heuristic: f64,
    /// Over the whole dataset (no conductor bound).
    pub observed: Option<f64>,
    pub support: usize,
    pub reference_observed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaunayResult {
    pub grid: Vec<f64>,
    pub series: Vec<ProportionSeries>,
    pub table: Vec<TableRow>,
}

/// `n` log-spaced bounds from 10^3 to `max`; a single point when `max <= 10^3`.
pub fn conductor_grid(max: f64, n: usize) -> Vec<f64> {
    if max <= GRID_START || n < 2 {
        return vec![max];
    }
    let (a, b) = (GRID_START.ln(), max.ln());
    (0..n)
        .map(|k| {
            if k + 1 == n {
                max
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Proportion of rank-`rank` curves with conductor below `bound` (all when `None`)
/// satisfying `stat`.
pub fn proportion(ds: &Dataset, stat: Statistic, rank: u32, bound: Option<f64>) -> (Option<f64>, usize) {
    let (mut hit, mut support) = (0usize, 0usize);
    for r in &ds.records {
        if r.rank != rank || bound.is_some_and(|b| r.conductor as f64 >= b) {
            continue;
        }
        let Some(sha) = r.sha_order else { continue };
        support += 1;
        hit += usize::from(stat.holds(sha));
    }
    ((support > 0).then(|| hit as f64 / support as f64), support)
}

pub fn run_delaunay_analysis(ds: &Dataset, primes: &[u64], ranks: &[u32]) -> Result<DelaunayResult> {
    if let Some(r) = ds.records.iter().find(|r| r.sha_order.is_none()) {
        return Err(Error::MissingFeature {
            label: r.label.clone(),
            feature: "sha_order".into(),
        });
    }
    if ds.is_empty() {
        return Err(Error::Empty);
    }
    let max = ds.records.iter().map(|r| r.conductor).max().unwrap() as f64;
    // Bounds are strict, so the top point sits just past the largest conductor.
    let grid = conductor_grid(max + 1.0, GRID_POINTS);
    let mut stats = vec![Statistic::Trivial];
    stats.extend(primes.iter().map(|&p| Statistic::Divisible(p)));
    let mut series = Vec::new();
    for &stat in &stats {
        for &rank in ranks {
            let points = grid
                .iter()
                .map(|&n| {
                    let (proportion, support) = proportion(ds, stat, rank, Some(n));
                    GridPoint {
                        conductor_bound: n,
                        proportion,
                        support,
                    }
                })
                .collect();
            series.push(ProportionSeries { statistic: stat, rank, points });
        }
    }
    let table = HEURISTIC_TABLE
        .iter()
        .filter(|(s, r, _, _)| stats.contains(s) && ranks.contains(r))
        .map(|&(statistic, rank, heuristic, reference_observed)| {
            let (observed, support) = proportion(ds, statistic, rank, None);
            TableRow {
                statistic,
                rank,
                heuristic,
                observed,
                support,
                reference_observed,
            }
        })
        .collect();
    Ok(DelaunayResult { grid, series, table })
}

#[derive(Serialize)]
struct SeriesRow {
    statistic: String,
    rank: u32,
    conductor_bound: f64,
    proportion: Option<f64>,
    support: usize,
}

#[derive(Serialize)]
struct TableCsvRow {
    statistic: String,
    rank: u32,
    heuristic: f64,
    observed: Option<f64>,
    support: usize,
    reference_observed: f64,
}

impl DelaunayResult {
    pub fn table_row(&self, stat: Statistic, rank: u32) -> Option<&TableRow> {
        self.table.iter().find(|t| t.statistic == stat && t.rank == rank)
    }

    pub fn write_csv(&self, series_path: impl AsRef<Path>, table_path: impl AsRef<Path>) -> Result<()> {
        let p = series_path.as_ref();
        let mut w = csv::Writer::from_path(p)?;
        for s in &self.series {
            for pt in &s.points {
                w.serialize(SeriesRow {
                    statistic: s.statistic.name(),
                    rank: s.rank,
                    conductor_bound: pt.conductor_bound,
                    proportion: pt.proportion,
                    support: pt.support,
                })?;
            }
        }
        w.flush().map_err(|e| Error::io(p, e))?;
        let p = table_path.as_ref();
        let mut w = csv::Writer::from_path(p)?;
        for t in &self.table {
            w.serialize(TableCsvRow {
                statistic: t.statistic.name(),
                rank: t.rank,
                heuristic: t.heuristic,
                observed: t.observed,
                support: t.support,
                reference_observed: t.reference_observed,
            })?;
        }
        w.flush().map_err(|e| Error::io(p, e))
    }

    /// Line plot of one statistic against the conductor bound, one line per rank.
    pub fn plot(&self, stat: Statistic) -> Plot {
        let series = self
            .series
            .iter()
            .filter(|s| s.statistic == stat)
            .map(|s| {
                Series::new(
                    format!("rank {}", s.rank),
                    s.points
                        .iter()
                        .filter_map(|p| p.proportion.map(|v| (p.conductor_bound, v)))
                        .collect(),
                )
            })
            .collect();
        Plot::Lines {
            title: format!("Proportion of curves with {} below conductor N", stat.name()),
            x_label: "conductor bound N".into(),
            y_label: "proportion".into(),
            log_x: true,
            series,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvedata::{CurveRecord, Source};

    pub(crate) fn fixture() -> Dataset {
        let mk = |l: &str, n: u64, r: u32, s: u64| CurveRecord::bsd(l, n, r, 1, 1.0, 1.0, 1, s as f64, Some(s));
        Dataset::new(
            vec![mk("a", 11, 0, 1), mk("b", 14, 0, 4), mk("c", 37, 1, 1), mk("d", 43, 1, 9)],
            Source::Memory,
        )
        .unwrap()
    }

    #[test]
    fn hand_enumeration() {
        let d = fixture();
        assert_eq!(proportion(&d, Statistic::Divisible(2), 0, None).0, Some(0.5));
        assert_eq!(proportion(&d, Statistic::Divisible(3), 1, None).0, Some(0.5));
        assert_eq!(proportion(&d, Statistic::Trivial, 0, None).0, Some(0.5));
        assert_eq!(proportion(&d, Statistic::Trivial, 1, None).0, Some(0.5));
        assert_eq!(proportion(&d, Statistic::Trivial, 1, Some(37.0)), (None, 0));
    }

    #[test]
    fn heuristic_constants() {
        let r = run_delaunay_analysis(&fixture(), &[2, 3], &[0, 1]).unwrap();
        assert_eq!(r.table_row(Statistic::Trivial, 0).unwrap().heuristic, 0.022924);
        assert_eq!(r.table_row(Statistic::Trivial, 1).unwrap().heuristic, 0.54914);
        assert_eq!(r.table.len(), 6);
        assert_eq!(r.series.len(), 6);
    }

    #[test]
    fn grid_shape() {
        let g = conductor_grid(500_000.0, 50);
        assert_eq!(g.len(), 50);
        assert!((g[0] - 1e3).abs() < 1e-9);
        assert_eq!(g[49], 500_000.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
