use serde::{Deserialize, Serialize};

use super::{aggregate_runs, format_score, make_eval_sequences, score_run, EvalConfig, EvalError, Predictor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub k: usize,
    pub mean: f64,
    pub std: f64,
    /// Per-run accuracies in run order.
    pub runs: Vec<f64>,
    pub display: String,
}

/// One (dataset, predictor) row of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub predictor: String,
    /// Windows generated per run.
    pub sequences: usize,
    pub scored: Vec<usize>,
    pub skipped: Vec<usize>,
    pub cells: Vec<CellStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub rows: Vec<ReportRow>,
}

/// Scores every predictor on every dataset for `config.num_runs` runs, each
/// run with its own mask choices, and aggregates per cell. Rows are ordered
/// dataset-major, predictors in the given order.
pub fn run_evaluation(
    datasets: &[(String, String)],
    predictors: &[&dyn Predictor],
    config: &EvalConfig,
    maskable: &dyn Fn(&str) -> bool,
) -> Result<EvalReport, EvalError> {
    config.validate()?;
    let mut rows = Vec::new();
    for (tag, text) in datasets {
        let per_run = (0..config.num_runs)
            .map(|run| make_eval_sequences(text, config, run, maskable))
            .collect::<Result<Vec<_>, _>>()?;
        let sequences = per_run[0].len();
        for predictor in predictors {
            let scores = per_run
                .iter()
                .map(|seqs| score_run(seqs, *predictor, &config.top_ks))
                .collect::<Result<Vec<_>, _>>()?;
            let cells = config
                .top_ks
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let runs: Vec<f64> = scores.iter().map(|s| s.accuracy[i]).collect();
                    let (mean, std) = aggregate_runs(&runs)?;
                    Ok(CellStats {
                        k,
                        mean,
                        std,
                        runs,
                        display: format_score(mean, std),
                    })
                })
                .collect::<Result<Vec<_>, EvalError>>()?;
            rows.push(ReportRow {
                dataset: tag.clone(),
                predictor: predictor.name().to_string(),
                sequences,
                scored: scores.iter().map(|s| s.scored).collect(),
                skipped: scores.iter().map(|s| s.skipped).collect(),
                cells,
            });
        }
    }
    Ok(EvalReport {
        config: config.clone(),
        rows,
    })
}

/// Fixed-width table: Model, Evaluation dataset, then one column per k.
pub fn render_table(report: &EvalReport) -> String {
    let mut header = vec!["Model".to_string(), "Evaluation dataset".to_string()];
    header.extend(report.config.top_ks.iter().map(|k| format!("Top {k} Match")));
    let mut lines = vec![header];
    for row in &report.rows {
        let mut line = vec![row.predictor.clone(), row.dataset.clone()];
        line.extend(row.cells.iter().map(|c| c.display.clone()));
        lines.push(line);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &lines {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
