use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{pct, MetricsReport};
use crate::error::{Error, Result};
use crate::judge::ConfusionCounts;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub counts: ConfusionCounts,
}

/// One variant's cells, each the mean over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub per_seed: Vec<SeedResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, variant: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    /// Metrics down the side, variants across, values in percent.
    pub fn render(&self, title: &str) -> String {
        let width = self.rows.iter().map(|r| r.variant.len()).max().unwrap_or(0).max(7);
        let mut out = String::new();
        let _ = write!(out, "{:<12} {:<6}", "Test", "Metric");
        for r in &self.rows {
            let _ = write!(out, " {:>width$}", r.variant);
        }
        out.push('\n');
        for (i, (name, get)) in [
            ("Pre", (|r: &AblationRow| r.precision) as fn(&AblationRow) -> f64),
            ("Rec", |r: &AblationRow| r.recall),
            ("F0.5", |r: &AblationRow| r.f05),
        ]
        .iter()
        .enumerate()
        {
            let _ = write!(out, "{:<12} {:<6}", if i == 0 { title } else { "" }, name);
            for r in &self.rows {
                let _ = write!(out, " {:>width$}", pct(get(r)));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates every variant under every seed with `run` and averages the
/// cells. Variants run in the order given, seeds innermost.
pub fn ablation_run<F>(variants: &[String], seeds: &[u64], mut run: F) -> Result<AblationReport>
where
    F: FnMut(&str, u64) -> Result<MetricsReport>,
{
    if variants.len() < 2 {
        return Err(Error::config("ablation needs at least two variants"));
    }
    if seeds.is_empty() {
        return Err(Error::config("ablation needs at least one seed"));
    }
    let mut seen = HashSet::new();
    for v in variants {
        if !seen.insert(v) {
            return Err(Error::config(format!("duplicate ablation variant {v:?}")));
        }
    }
    let mut rows = Vec::new();
    for v in variants {
        let mut per_seed = Vec::new();
        for &seed in seeds {
            let r = run(v, seed)?;
            per_seed.push(SeedResult {
                seed,
                precision: r.precision,
                recall: r.recall,
                f05: r.f05,
                counts: r.counts,
            });
        }
        let n = per_seed.len() as f64;
        let mean = |f: fn(&SeedResult) -> f64| per_seed.iter().map(f).sum::<f64>() / n;
        rows.push(AblationRow {
            variant: v.clone(),
            precision: mean(|s| s.precision),
            recall: mean(|s| s.recall),
            f05: mean(|s| s.f05),
            per_seed,
        });
    }
    Ok(AblationReport {
        seeds: seeds.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(variant: &str, seed: u64) -> Result<MetricsReport> {
        let base = variant.len() as f64 / 100.0;
        Ok(MetricsReport {
            precision: base + seed as f64 / 1000.0,
            recall: base,
            f05: base / 2.0,
            ..Default::default()
        })
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn four_variant_shape() {
        let v = names(&["plain_ce", "+dynamic", "+reranker", "+both"]);
        let r = ablation_run(&v, &[1, 2, 3], fake).unwrap();
        assert_eq!(r.rows.len(), 4);
        let text = r.render("synthetic");
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().next().unwrap().contains("+reranker"));
    }

    #[test]
    fn cells_recompute_from_seeds() {
        let r = ablation_run(&names(&["a", "bb"]), &[1, 3], fake).unwrap();
        for row in &r.rows {
            let mean = row.per_seed.iter().map(|s| s.precision).sum::<f64>() / 2.0;
            assert_eq!(row.precision, mean);
        }
        assert!((r.row("a").unwrap().precision - 0.012).abs() < 1e-15);
    }

    #[test]
    fn invalid_variant_sets() {
        assert!(ablation_run(&names(&["a", "a"]), &[1], fake).is_err());
        assert!(ablation_run(&names(&["a"]), &[1], fake).is_err());
        assert!(ablation_run(&names(&["a", "b"]), &[], fake).is_err());
    }
}
