//! Reduction of run results into comparison tables and report files.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PolicyKind, RunResult};
use crate::error::{Error, Result};

/// Percentage improvement of the reference policy over another: positive
/// when the reference costs less.
pub fn improvement_pct(reference_cost: f64, other_cost: f64) -> f64 {
    if other_cost == 0.0 {
        return 0.0;
    }
    100.0 * (other_cost - reference_cost) / other_cost
}

/// Mean improvement of the reference policy over one comparison policy in
/// one stratum (or pooled over all strata when `sigma` is none).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementRow {
    pub reference: PolicyKind,
    pub against: PolicyKind,
    pub sigma: Option<f64>,
    pub scenarios: usize,
    pub mean_pct: f64,
    /// Half-width of the normal-approximation 95% confidence interval.
    pub ci_half_width: f64,
}

/// Per-policy aggregates over all scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetrics {
    pub policy: PolicyKind,
    pub scenarios: usize,
    /// Scenarios where this policy had the lowest objective; ties split
    /// equally, hence fractional counts.
    pub wins: f64,
    pub mean_objective: f64,
    pub mean_schedule_delay: f64,
    pub mean_airborne_holding: f64,
    pub mean_pool_holding: f64,
    pub same_class_follow_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsTable {
    pub policies: Vec<PolicyMetrics>,
    pub improvements: Vec<ImprovementRow>,
}

fn mean_and_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, 1.96 * (var / n as f64).sqrt())
}

/// Reduce a batch of results into the comparison table. Every policy must
/// cover the identical (sigma, scenario) set. Improvements are computed with
/// the first policy present (in `PolicyKind::ALL` order) as reference.
pub fn compare_policies(results: &[RunResult]) -> Result<MetricsTable> {
    if results.is_empty() {
        return Ok(MetricsTable::default());
    }
    type Key = ((u64, usize), PolicyKind);
    let mut by_key: BTreeMap<Key, &RunResult> = BTreeMap::new();
    let mut coverage: BTreeMap<PolicyKind, BTreeSet<(u64, u64)>> = BTreeMap::new();
    for r in results {
        let scenario = (r.sigma.to_bits(), r.scenario_index);
        if by_key.insert((scenario, r.policy), r).is_some() {
            return Err(Error::Config(format!(
                "duplicate result for policy {} on scenario {} (sigma {})",
                r.policy, r.scenario_index, r.sigma
            )));
        }
        coverage
            .entry(r.policy)
            .or_default()
            .insert((r.sigma.to_bits(), r.scenario_index as u64));
    }
    let policies: Vec<PolicyKind> = coverage.keys().copied().collect();
    let first_cover = coverage.values().next().expect("non-empty");
    if coverage.values().any(|c| c != first_cover) {
        return Err(Error::Config(
            "policies cover different scenario sets; comparison undefined".into(),
        ));
    }
    let scenarios: Vec<(u64, usize)> = {
        let mut s: BTreeSet<(u64, usize)> = BTreeSet::new();
        for ((scenario, _), _) in &by_key {
            s.insert(*scenario);
        }
        s.into_iter().collect()
    };

    // Win counts: lowest objective per scenario, ties split equally.
    let mut wins: BTreeMap<PolicyKind, f64> = policies.iter().map(|&p| (p, 0.0)).collect();
    for &scenario in &scenarios {
        let best = policies
            .iter()
            .map(|&p| by_key[&(scenario, p)].objective)
            .fold(f64::INFINITY, f64::min);
        let winners: Vec<PolicyKind> = policies
            .iter()
            .copied()
            .filter(|&p| by_key[&(scenario, p)].objective == best)
            .collect();
        for p in &winners {
            *wins.get_mut(p).unwrap() += 1.0 / winners.len() as f64;
        }
    }

    let policy_rows: Vec<PolicyMetrics> = policies
        .iter()
        .map(|&p| {
            let rows: Vec<&&RunResult> = by_key
                .iter()
                .filter(|((_, pk), _)| *pk == p)
                .map(|(_, r)| r)
                .collect();
            let n = rows.len() as f64;
            PolicyMetrics {
                policy: p,
                scenarios: rows.len(),
                wins: wins[&p],
                mean_objective: rows.iter().map(|r| r.objective).sum::<f64>() / n,
                mean_schedule_delay: rows.iter().map(|r| r.mean_schedule_delay).sum::<f64>() / n,
                mean_airborne_holding: rows
                    .iter()
                    .map(|r| r.mean_airborne_holding)
                    .sum::<f64>()
                    / n,
                mean_pool_holding: rows.iter().map(|r| r.mean_pool_holding).sum::<f64>() / n,
                same_class_follow_pct: rows
                    .iter()
                    .map(|r| r.same_class_follow_pct)
                    .sum::<f64>()
                    / n,
            }
        })
        .collect();

    let reference = PolicyKind::ALL
        .into_iter()
        .find(|p| policies.contains(p))
        .expect("non-empty policy set");
    let strata: BTreeSet<u64> = scenarios.iter().map(|&(s, _)| s).collect();
    let mut improvements = Vec::new();
    for &against in policies.iter().filter(|&&p| p != reference) {
        let per_scenario = |filter_sigma: Option<u64>| -> Vec<f64> {
            scenarios
                .iter()
                .filter(|&&(s, _)| filter_sigma.map_or(true, |f| f == s))
                .map(|&scenario| {
                    improvement_pct(
                        by_key[&(scenario, reference)].objective,
                        by_key[&(scenario, against)].objective,
                    )
                })
                .collect()
        };
        for &sigma_bits in &strata {
            let values = per_scenario(Some(sigma_bits));
            let (mean_pct, ci_half_width) = mean_and_ci(&values);
            improvements.push(ImprovementRow {
                reference,
                against,
                sigma: Some(f64::from_bits(sigma_bits)),
                scenarios: values.len(),
                mean_pct,
                ci_half_width,
            });
        }
        let values = per_scenario(None);
        let (mean_pct, ci_half_width) = mean_and_ci(&values);
        improvements.push(ImprovementRow {
            reference,
            against,
            sigma: None,
            scenarios: values.len(),
            mean_pct,
            ci_half_width,
        });
    }

    Ok(MetricsTable {
        policies: policy_rows,
        improvements,
    })
}

/// Write the table as `policy_metrics.csv`, `improvements.csv` and
/// `metrics.json` inside `dir`. Empty tables produce header-only CSVs.
pub fn emit_reports(table: &MetricsTable, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

    let policy_path = dir.join("policy_metrics.csv");
    let mut w = csv::Writer::from_path(&policy_path)
        .map_err(|e| Error::Config(format!("{}: {e}", policy_path.display())))?;
    w.write_record([
        "policy",
        "scenarios",
        "wins",
        "mean_objective",
        "mean_schedule_delay",
        "mean_airborne_holding",
        "mean_pool_holding",
        "same_class_follow_pct",
    ])?;
    for row in &table.policies {
        w.write_record([
            row.policy.label().to_string(),
            row.scenarios.to_string(),
            row.wins.to_string(),
            row.mean_objective.to_string(),
            row.mean_schedule_delay.to_string(),
            row.mean_airborne_holding.to_string(),
            row.mean_pool_holding.to_string(),
            row.same_class_follow_pct.to_string(),
        ])?;
    }
    w.flush()
        .map_err(|e| Error::io(policy_path.display().to_string(), e))?;

    let imp_path = dir.join("improvements.csv");
    let mut w = csv::Writer::from_path(&imp_path)
        .map_err(|e| Error::Config(format!("{}: {e}", imp_path.display())))?;
    w.write_record([
        "reference",
        "against",
        "sigma",
        "scenarios",
        "mean_pct",
        "ci_half_width",
    ])?;
    for row in &table.improvements {
        w.write_record([
            row.reference.label().to_string(),
            row.against.label().to_string(),
            row.sigma.map_or_else(|| "pooled".to_string(), |s| s.to_string()),
            row.scenarios.to_string(),
            row.mean_pct.to_string(),
            row.ci_half_width.to_string(),
        ])?;
    }
    w.flush()
        .map_err(|e| Error::io(imp_path.display().to_string(), e))?;

    let json_path = dir.join("metrics.json");
    let mut file = std::fs::File::create(&json_path)
        .map_err(|e| Error::io(json_path.display().to_string(), e))?;
    serde_json::to_writer_pretty(&mut file, table)?;
    file.write_all(b"\n")
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(json_path.display().to_string(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FlightId;
    use crate::policies::PolicyOutcome;

    fn result(policy: PolicyKind, sigma: f64, n: usize, objective: f64) -> RunResult {
        RunResult {
            policy,
            sigma,
            scenario_index: n,
            seed: 0,
            objective,
            mean_schedule_delay: objective / 10.0,
            mean_airborne_holding: objective / 20.0,
            mean_pool_holding: objective / 40.0,
            same_class_follow_pct: 50.0,
            outcome: PolicyOutcome {
                order: vec![FlightId(0)],
                pool_entries: vec![0.0],
                releases: vec![0.0],
                unconstrained: vec![0.0],
                landings: vec![0.0],
                holdings: vec![0.0],
                per_flight_cost: vec![objective],
                total_cost: objective,
            },
        }
    }

    #[test]
    fn improvement_formula_matches_hand_values() {
        assert!((improvement_pct(90.0, 100.0) - 10.0).abs() < 1e-12);
        assert_eq!(improvement_pct(100.0, 100.0), 0.0);
        // Swapping roles flips the sign of the numerator (though not the
        // denominator, which always belongs to the comparison policy).
        assert!(improvement_pct(110.0, 100.0) < 0.0);
    }

    #[test]
    fn identical_policies_give_zero_improvement_centered_ci() {
        let mut results = Vec::new();
        for n in 0..10 {
            let cost = 50.0 + n as f64;
            results.push(result(PolicyKind::SimHeur, 0.5, n, cost));
            results.push(result(PolicyKind::Fcfs, 0.5, n, cost));
        }
        let table = compare_policies(&results).unwrap();
        let pooled = table
            .improvements
            .iter()
            .find(|r| r.sigma.is_none())
            .unwrap();
        assert_eq!(pooled.mean_pct, 0.0);
        assert_eq!(pooled.ci_half_width, 0.0);
        // Ties split the wins evenly.
        for p in &table.policies {
            assert_eq!(p.wins, 5.0);
        }
    }

    #[test]
    fn wins_and_improvements_reduce_correctly() {
        let mut results = Vec::new();
        for n in 0..4 {
            results.push(result(PolicyKind::SimHeur, 0.1, n, 90.0));
            results.push(result(PolicyKind::Fcfs, 0.1, n, 100.0));
        }
        let table = compare_policies(&results).unwrap();
        let row = table
            .improvements
            .iter()
            .find(|r| r.sigma == Some(0.1))
            .unwrap();
        assert_eq!(row.reference, PolicyKind::SimHeur);
        assert_eq!(row.against, PolicyKind::Fcfs);
        assert!((row.mean_pct - 10.0).abs() < 1e-12);
        assert_eq!(row.ci_half_width, 0.0);
        let sh = table
            .policies
            .iter()
            .find(|p| p.policy == PolicyKind::SimHeur)
            .unwrap();
        assert_eq!(sh.wins, 4.0);
    }

    #[test]
    fn mismatched_coverage_is_rejected() {
        let results = vec![
            result(PolicyKind::SimHeur, 0.5, 0, 90.0),
            result(PolicyKind::Fcfs, 0.5, 1, 100.0),
        ];
        assert!(compare_policies(&results).is_err());
        let dup = vec![
            result(PolicyKind::Fcfs, 0.5, 0, 90.0),
            result(PolicyKind::Fcfs, 0.5, 0, 100.0),
        ];
        assert!(compare_policies(&dup).is_err());
    }

    #[test]
    fn reports_roundtrip_and_handle_empty_tables() {
        let dir = tempfile::tempdir().unwrap();
        let empty = MetricsTable::default();
        emit_reports(&empty, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("policy_metrics.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1, "header-only CSV for empty table");
        assert!(csv.starts_with("policy,scenarios,wins,mean_objective"));

        let mut results = Vec::new();
        for n in 0..3 {
            results.push(result(PolicyKind::SimHeur, 0.3, n, 80.0 + n as f64));
            results.push(result(PolicyKind::Dstat, 0.3, n, 95.0 - n as f64));
        }
        let table = compare_policies(&results).unwrap();
        emit_reports(&table, dir.path()).unwrap();
        let json = std::fs::read_to_string(dir.path().join("metrics.json")).unwrap();
        let back: MetricsTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, table, "JSON report must roundtrip losslessly");

        let imp = std::fs::read_to_string(dir.path().join("improvements.csv")).unwrap();
        assert!(imp.starts_with("reference,against,sigma,scenarios,mean_pct,ci_half_width"));
        // One stratum row plus one pooled row for the single comparison.
        assert_eq!(imp.lines().count(), 3);
    }
}
