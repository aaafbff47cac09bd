//! Per-speaker evaluation and solver benchmark reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use voxid::features::SpeakerId;

/// `100 * correct / total` rounded half-up to two decimals. Computed on
/// integer hundredths so ties round the same way on every platform.
pub fn success_pct(correct: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let hundredths = (20_000 * correct + total) / (2 * total);
    hundredths as f64 / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeakerRow {
    pub speaker_id: u32,
    pub total: u64,
    pub correct: u64,
    pub false_count: u64,
    pub success_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub correct: u64,
    pub false_count: u64,
    pub success_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub solver: String,
    pub rows: Vec<SpeakerRow>,
    pub aggregate: AggregateRow,
}

impl EvaluationReport {
    /// Builds the report from `(speaker, total, correct)` counts; the
    /// percentages are always recomputed from the counts.
    pub fn from_counts(solver: &str, counts: &[(SpeakerId, u64, u64)]) -> Self {
        let rows: Vec<SpeakerRow> = counts
            .iter()
            .map(|&(id, total, correct)| {
                assert!(correct <= total, "correct exceeds total for speaker {id}");
                SpeakerRow {
                    speaker_id: id.get(),
                    total,
                    correct,
                    false_count: total - correct,
                    success_pct: success_pct(correct, total),
                }
            })
            .collect();
        let correct: u64 = rows.iter().map(|r| r.correct).sum();
        let total: u64 = rows.iter().map(|r| r.total).sum();
        Self {
            solver: solver.to_string(),
            aggregate: AggregateRow {
                correct,
                false_count: total - correct,
                success_pct: success_pct(correct, total),
            },
            rows,
        }
    }

    /// Tallies `(truth, predicted)` pairs per true speaker.
    pub fn from_predictions(solver: &str, pairs: &[(SpeakerId, SpeakerId)]) -> Self {
        let mut tally: BTreeMap<SpeakerId, (u64, u64)> = BTreeMap::new();
        for &(truth, pred) in pairs {
            let e = tally.entry(truth).or_default();
            e.0 += 1;
            e.1 += u64::from(truth == pred);
        }
        let counts: Vec<_> = tally.into_iter().map(|(id, (t, c))| (id, t, c)).collect();
        Self::from_counts(solver, &counts)
    }

    pub fn total(&self) -> u64 {
        self.aggregate.correct + self.aggregate.false_count
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "solver: {}", self.solver);
        let _ = writeln!(
            out,
            "{:>7}  {:>5}  {:>7}  {:>5}  {:>9}",
            "speaker", "total", "correct", "false", "success %"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>7}  {:>5}  {:>7}  {:>5}  {:>9.2}",
                r.speaker_id, r.total, r.correct, r.false_count, r.success_pct
            );
        }
        let a = &self.aggregate;
        let _ = writeln!(
            out,
            "{:>7}  {:>5}  {:>7}  {:>5}  {:>9.2}",
            "all",
            self.total(),
            a.correct,
            a.false_count,
            a.success_pct
        );
        out
    }

    /// CSV with one row per speaker plus a final `all` row. Columns:
    /// `solver,speaker_id,total,correct,false_count,success_pct`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("solver,speaker_id,total,correct,false_count,success_pct\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.2}",
                self.solver, r.speaker_id, r.total, r.correct, r.false_count, r.success_pct
            );
        }
        let a = &self.aggregate;
        let _ = writeln!(
            out,
            "{},all,{},{},{},{:.2}",
            self.solver,
            self.total(),
            a.correct,
            a.false_count,
            a.success_pct
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub training_set_size: usize,
    pub solver: String,
    pub kernel: String,
    pub wall_seconds: f64,
    pub iterations: u64,
    pub support_vector_count: usize,
    pub dual_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>6}  {:<10}  {:<6}  {:>10}  {:>10}  {:>6}  {:>14}",
            "size", "solver", "kernel", "seconds", "iterations", "svs", "dual objective"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>6}  {:<10}  {:<6}  {:>10.4}  {:>10}  {:>6}  {:>14.6}",
                r.training_set_size,
                r.solver,
                r.kernel,
                r.wall_seconds,
                r.iterations,
                r.support_vector_count,
                r.dual_objective
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "training_set_size,solver,kernel,wall_seconds,iterations,support_vector_count,dual_objective\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:?},{},{},{:?}",
                r.training_set_size,
                r.solver,
                r.kernel,
                r.wall_seconds,
                r.iterations,
                r.support_vector_count,
                r.dual_objective
            );
        }
        out
    }

    /// Rows of one solver, in sweep order.
    pub fn solver_rows<'a>(&'a self, solver: &'a str) -> impl Iterator<Item = &'a BenchRow> + 'a {
        self.rows.iter().filter(move |r| r.solver == solver)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sid(i: u32) -> SpeakerId {
        SpeakerId::new(i).unwrap()
    }

    #[test]
    fn known_aggregates_round_half_up() {
        assert_eq!(success_pct(147, 160), 91.88);
        assert_eq!(success_pct(152, 160), 95.00);
        assert_eq!(success_pct(16, 20), 80.00);
        assert_eq!(success_pct(1, 8), 12.50);
        assert_eq!(success_pct(1, 3), 33.33);
        assert_eq!(success_pct(2, 3), 66.67);
    }

    proptest::proptest! {
        #[test]
        fn percent_matches_exact_rational_rounding(total in 1u64..100_000, frac in 0.0f64..=1.0) {
            let correct = (total as f64 * frac) as u64;
            proptest::prop_assert_eq!(success_pct(correct, total), voxid_oracles::pct_half_up(correct, total));
        }
    }

    #[test]
    fn rows_are_consistent() {
        let r = EvaluationReport::from_counts("smo", &[(sid(1), 20, 16), (sid(2), 20, 20)]);
        assert_eq!(r.rows[0].false_count, 4);
        assert_eq!(r.aggregate.correct, 36);
        assert_eq!(r.aggregate.false_count, 4);
        assert_eq!(r.aggregate.success_pct, 90.0);
        let table = r.to_table();
        assert!(table.contains("80.00"));
        assert!(table.lines().last().unwrap().trim_start().starts_with("all"));
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.ends_with("smo,all,40,36,4,90.00\n"));
    }

    #[test]
    fn predictions_are_tallied_by_truth() {
        let pairs = [(sid(2), sid(2)), (sid(1), sid(2)), (sid(1), sid(1))];
        let r = EvaluationReport::from_predictions("chunking", &pairs);
        assert_eq!(r.rows.len(), 2);
        assert_eq!((r.rows[0].speaker_id, r.rows[0].correct, r.rows[0].total), (1, 1, 2));
        assert_eq!(r.rows[1].success_pct, 100.0);
    }

    #[test]
    fn json_has_exactly_the_named_fields() {
        let r = EvaluationReport::from_counts("smo", &[(sid(1), 2, 1)]);
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 3);
        let row: Vec<&String> = v["rows"][0].as_object().unwrap().keys().collect();
        assert_eq!(row.len(), 5);
        let agg: Vec<&String> = v["aggregate"].as_object().unwrap().keys().collect();
        assert_eq!(agg.len(), 3);
    }
}
