use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Algorithm, MetricSummary};
use crate::error::{Error, Result};
use crate::metrics::{ci_aggregate, Metric};
use crate::signal::BreathingClass;

/// Evaluated summary of one (algorithm, sequence, horizon) condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub algorithm: Algorithm,
    pub sequence: String,
    pub breathing_class: BreathingClass,
    pub horizon_seconds: f64,
    pub n_diverged: usize,
    pub metrics: Vec<MetricSummary>,
}

impl Cell {
    fn metric(&self, metric: Metric) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}

/// Average over a cohort's sequences and all horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub cohort: String,
    pub metric: Metric,
    pub mean: f64,
    pub half_range: Option<f64>,
    pub n_sequences: usize,
    pub n_horizons: usize,
}

/// Average over a cohort's sequences at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub algorithm: Algorithm,
    pub cohort: String,
    pub horizon_seconds: f64,
    pub metric: Metric,
    pub mean: f64,
    pub half_range: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub summary: Vec<SummaryRow>,
    pub curves: Vec<CurveRow>,
}

/// Horizons are matched to the millisecond.
fn horizon_key(seconds: f64) -> i64 {
    (seconds * 1000.0).round() as i64
}

/// Averages cells over sequences and horizons per algorithm and cohort
/// ("all", "regular", "irregular"). `exclusions` maps a cohort name to
/// sequence labels left out of it. Refuses incomplete or duplicated grids.
pub fn aggregate(cells: &[Cell], exclusions: &BTreeMap<String, Vec<String>>) -> Result<Report> {
    if cells.is_empty() {
        return Err(Error::Empty("no result cells to aggregate".into()));
    }
    let algorithms: BTreeSet<Algorithm> = cells.iter().map(|c| c.algorithm).collect();
    let mut sequences: BTreeMap<&str, BreathingClass> = BTreeMap::new();
    for c in cells {
        if let Some(prev) = sequences.insert(&c.sequence, c.breathing_class) {
            if prev != c.breathing_class {
                return Err(Error::Config(format!(
                    "sequence {:?} is labeled both {prev} and {}",
                    c.sequence, c.breathing_class
                )));
            }
        }
    }
    let horizons: BTreeMap<i64, f64> = cells
        .iter()
        .map(|c| (horizon_key(c.horizon_seconds), c.horizon_seconds))
        .collect();

    let mut grid: BTreeMap<(Algorithm, &str, i64), &Cell> = BTreeMap::new();
    let mut problems = Vec::new();
    for c in cells {
        if grid
            .insert((c.algorithm, &c.sequence, horizon_key(c.horizon_seconds)), c)
            .is_some()
        {
            problems.push(format!("duplicate {} {} h={} s", c.algorithm, c.sequence, c.horizon_seconds));
        }
        for m in Metric::ALL {
            if c.metric(m).is_none() {
                problems.push(format!("{} {} h={} s lacks {}", c.algorithm, c.sequence, c.horizon_seconds, m.name()));
            }
        }
    }
    for &a in &algorithms {
        for s in sequences.keys() {
            for (k, h) in &horizons {
                if !grid.contains_key(&(a, s, *k)) {
                    problems.push(format!("missing {a} {s} h={h} s"));
                }
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Incomplete(format!(
            "{} problem(s) in the result grid: {}",
            problems.len(),
            problems.join("; ")
        )));
    }

    let excluded = |cohort: &str, seq: &str| {
        exclusions
            .get(cohort)
            .is_some_and(|v| v.iter().any(|s| s == seq))
    };
    let cohorts: [(&str, Option<BreathingClass>); 3] = [
        ("all", None),
        ("regular", Some(BreathingClass::Regular)),
        ("irregular", Some(BreathingClass::Irregular)),
    ];

    let mut report = Report::default();
    for &a in &algorithms {
        for (cohort, class) in cohorts {
            let members: Vec<&str> = sequences
                .iter()
                .filter(|(s, c)| class.is_none_or(|k| **c == k) && !excluded(cohort, s))
                .map(|(s, _)| *s)
                .collect();
            if members.is_empty() {
                continue;
            }
            for metric in Metric::ALL {
                let at = |s: &str, k: i64| grid[&(a, s, k)].metric(metric).expect("checked above");
                let means: Vec<f64> = members
                    .iter()
                    .flat_map(|s| horizons.keys().map(move |&k| at(s, k).mean))
                    .collect();
                let half_ranges: Option<Vec<Vec<f64>>> = members
                    .iter()
                    .map(|s| horizons.keys().map(|&k| at(s, k).half_range).collect())
                    .collect();
                report.summary.push(SummaryRow {
                    algorithm: a,
                    cohort: cohort.to_string(),
                    metric,
                    mean: means.iter().sum::<f64>() / means.len() as f64,
                    half_range: half_ranges.map(|g| ci_aggregate(&g)).transpose()?,
                    n_sequences: members.len(),
                    n_horizons: horizons.len(),
                });
                for (&k, &h) in &horizons {
                    let col: Vec<&MetricSummary> = members.iter().map(|s| at(s, k)).collect();
                    let hr: Option<Vec<Vec<f64>>> = col.iter().map(|m| m.half_range.map(|d| vec![d])).collect();
                    report.curves.push(CurveRow {
                        algorithm: a,
                        cohort: cohort.to_string(),
                        horizon_seconds: h,
                        metric,
                        mean: col.iter().map(|m| m.mean).sum::<f64>() / col.len() as f64,
                        half_range: hr.map(|g| ci_aggregate(&g)).transpose()?,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cell(seq: &str, class: BreathingClass, h: f64, f: impl Fn(Metric) -> (f64, Option<f64>)) -> Cell {
        Cell {
            algorithm: Algorithm::Uoro,
            sequence: seq.into(),
            breathing_class: class,
            horizon_seconds: h,
            n_diverged: 0,
            metrics: Metric::ALL
                .iter()
                .map(|&metric| {
                    let (mean, half_range) = f(metric);
                    MetricSummary {
                        metric,
                        mean,
                        half_range,
                        n_runs: 2,
                    }
                })
                .collect(),
        }
    }

    fn row<'a>(r: &'a Report, cohort: &str, metric: Metric) -> &'a SummaryRow {
        r.summary.iter().find(|s| s.cohort == cohort && s.metric == metric).unwrap()
    }

    #[test]
    fn single_cell_aggregates_to_itself() {
        let c = cell("a", BreathingClass::Regular, 0.5, |_| (1.5, Some(0.2)));
        let r = aggregate(&[c], &BTreeMap::new()).unwrap();
        let s = row(&r, "all", Metric::Rmse);
        assert_eq!((s.mean, s.half_range), (1.5, Some(0.2)));
        assert!(r.summary.iter().all(|s| s.cohort != "irregular"));
        assert_eq!(r.curves.iter().filter(|c| c.cohort == "all").count(), 5);
    }

    #[test]
    fn uniform_cells_aggregate_to_the_value() {
        let mut cells = Vec::new();
        for s in ["a", "b", "c"] {
            for h in [0.1, 0.2] {
                cells.push(cell(s, BreathingClass::Irregular, h, |_| (3.0, Some(0.5))));
            }
        }
        let r = aggregate(&cells, &BTreeMap::new()).unwrap();
        let s = row(&r, "irregular", Metric::Mae);
        assert_eq!(s.mean, 3.0);
        assert!((s.half_range.unwrap() - (6.0 * 0.25f64).sqrt() / 6.0).abs() < 1e-15);
    }

    #[test]
    fn random_grid_matches_recomputation_and_honors_exclusions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cells = Vec::new();
        let classes = [BreathingClass::Regular, BreathingClass::Irregular, BreathingClass::Irregular];
        let mut table = Vec::new();
        for (i, s) in ["s0", "s1", "s2"].iter().enumerate() {
            for h in [0.1, 0.6, 2.0] {
                let (m, d) = (rng.random_range(0.5..3.0), rng.random_range(0.0..0.3));
                table.push((i, m, d));
                cells.push(cell(s, classes[i], h, |_| (m, Some(d))));
            }
        }
        let excl: BTreeMap<String, Vec<String>> = [("irregular".to_string(), vec!["s2".to_string()])].into();
        let r = aggregate(&cells, &excl).unwrap();

        let check = |cohort: &str, members: &[usize]| {
            let rows: Vec<_> = table.iter().filter(|t| members.contains(&t.0)).collect();
            let mean = rows.iter().map(|t| t.1).sum::<f64>() / rows.len() as f64;
            let hr = rows.iter().map(|t| t.2 * t.2).sum::<f64>().sqrt() / rows.len() as f64;
            let s = row(&r, cohort, Metric::Jitter);
            assert!((s.mean - mean).abs() < 1e-12 && (s.half_range.unwrap() - hr).abs() < 1e-12);
            assert_eq!(s.n_sequences, members.len());
        };
        check("all", &[0, 1, 2]);
        check("regular", &[0]);
        check("irregular", &[1]);
    }

    #[test]
    fn refuses_incomplete_grids() {
        let cells = vec![
            cell("a", BreathingClass::Regular, 0.1, |_| (1.0, None)),
            cell("a", BreathingClass::Regular, 0.2, |_| (1.0, None)),
            cell("b", BreathingClass::Regular, 0.1, |_| (1.0, None)),
        ];
        let err = aggregate(&cells, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::Incomplete(ref m) if m.contains("missing uoro b h=0.2")), "{err}");
        let mut dup = cells.clone();
        dup.push(cells[0].clone());
        assert!(aggregate(&dup, &BTreeMap::new()).is_err());
    }

    #[test]
    fn missing_half_ranges_propagate_as_absent() {
        let cells = vec![
            cell("a", BreathingClass::Regular, 0.1, |_| (1.0, Some(0.1))),
            cell("b", BreathingClass::Regular, 0.1, |_| (2.0, None)),
        ];
        let r = aggregate(&cells, &BTreeMap::new()).unwrap();
        assert_eq!(row(&r, "all", Metric::Rmse).half_range, None);
        assert_eq!(row(&r, "all", Metric::Rmse).mean, 1.5);
    }
}
