//! Stable file formats: fixed float rendering, CSV writers, Markdown tables.
//!
//! Floats render with 6 significant digits (C's %.6g convention) so golden
//! files stay byte-stable across platforms and releases.

use wmarena_core::arena::{ForgeryReport, InterferenceMatrix, PolicyTable, Scenario};
use wmarena_core::pipeline::PipelineRun;
use wmarena_core::quality::NqdModel;
use wmarena_core::stats::quantile_linear;

/// %.6g-style rendering: 6 significant digits, positional form for exponents
/// in [-4, 6), trailing zeros trimmed.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let formatted = if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_trailing_zeros(&s)
    } else {
        let s = format!("{x:.5e}");
        // normalize "1.23000e5" -> "1.23e5"
        match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{}", trim_trailing_zeros(mantissa), e),
            None => s,
        }
    };
    formatted
}

fn trim_trailing_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    t.trim_end_matches('.').to_string()
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_g6).unwrap_or_else(|| "-".to_string())
}

/// One row per (victim, attack) cell.
pub fn matrix_csv(matrix: &InterferenceMatrix) -> String {
    let mut out = String::from(
        "victim,attack,n,tpr_at_fpr,mean_ba,mean_score,mean_nqd,attacker_ba,attacker_tpr\n",
    );
    for cell in &matrix.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            cell.victim_id,
            cell.attack_id,
            cell.records.len(),
            fmt_g6(cell.tpr_at_fpr),
            fmt_opt(cell.mean_ba),
            fmt_g6(cell.mean_score),
            fmt_g6(cell.mean_nqd),
            fmt_opt(cell.mean_attacker_ba),
            fmt_opt(cell.attacker_tpr),
        ));
    }
    out
}

/// TPR band glyphs for the interference grid.
fn band_glyph(tpr: f64) -> &'static str {
    if tpr <= 0.1 {
        "##"
    } else if tpr <= 0.5 {
        "+"
    } else {
        "."
    }
}

/// Markdown interference grid: attacks as rows, victims as columns; the
/// policy-selected cell per victim is marked with (x).
pub fn matrix_grid_markdown(matrix: &InterferenceMatrix, policy: Option<&PolicyTable>) -> String {
    let mut out = String::from("# Interference grid\n\n");
    out.push_str("Cell glyphs: `##` removed (TPR <= 0.1), `+` partial (0.1 < TPR <= 0.5), `.` no effect (TPR > 0.5); `(x)` marks the policy-selected attack.\n\n");
    out.push_str("| attack \\ victim |");
    for v in &matrix.victims {
        out.push_str(&format!(" {v} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in &matrix.victims {
        out.push_str("---|");
    }
    out.push('\n');
    for attack in &matrix.attacks {
        out.push_str(&format!("| {} |", attack.attack_id));
        for victim in &matrix.victims {
            let cell = matrix.cell(victim, &attack.attack_id);
            let glyph = cell.map(|c| band_glyph(c.tpr_at_fpr)).unwrap_or("?");
            let selected = policy
                .and_then(|p| p.attack_for(victim))
                .is_some_and(|e| e.attack_id == attack.attack_id);
            out.push_str(&format!(" {}{} |", glyph, if selected { " (x)" } else { "" }));
        }
        out.push('\n');
    }
    out
}

pub fn policy_markdown(policy: &PolicyTable) -> String {
    let mut out = String::from("# Attack policy\n\n");
    out.push_str(&format!("NQD budget: {}\n\n", fmt_g6(policy.nqd_budget)));
    out.push_str("| victim | attack | TPR | mean NQD | budget relaxed |\n|---|---|---|---|---|\n");
    for e in &policy.entries {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            e.victim_id,
            e.attack_id,
            fmt_g6(e.tpr_at_fpr),
            fmt_g6(e.mean_nqd),
            e.budget_relaxed
        ));
    }
    out.push_str("\nSelection traces:\n\n");
    for e in &policy.entries {
        out.push_str(&format!("- {}: {}\n", e.victim_id, e.trace.join("; ")));
    }
    out
}

pub fn forgery_csv(report: &ForgeryReport) -> String {
    let mut out =
        String::from("attack_codec,scenario,n,mean_attacker_ba,mean_attacker_score,attacker_tpr\n");
    for cell in &report.cells {
        let scenario = match cell.scenario {
            Scenario::Cross => "cross",
            Scenario::Same => "same",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cell.attack_codec,
            scenario,
            cell.n,
            fmt_opt(cell.mean_attacker_ba),
            fmt_g6(cell.mean_attacker_score),
            fmt_g6(cell.attacker_tpr),
        ));
    }
    out
}

pub fn pipeline_csv(run: &PipelineRun) -> String {
    let mut out = String::from(
        "victim,n,ba_clean,ba_unwm,ba_atk,score_clean,score_unwm,score_atk,tpr_clean,tpr_atk,mean_nqd,n_mis\n",
    );
    for v in &run.victims {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            v.victim_id,
            v.n,
            fmt_opt(v.ba_clean),
            fmt_opt(v.ba_unwm),
            fmt_opt(v.ba_atk),
            fmt_g6(v.mean_score_clean),
            fmt_g6(v.mean_score_unwm),
            fmt_g6(v.mean_score_atk),
            fmt_g6(v.tpr_clean),
            fmt_g6(v.tpr_atk),
            fmt_g6(v.mean_nqd),
            v.n_mis,
        ));
    }
    out
}

/// The decoder-metrics table: per victim, our attack's numbers plus
/// strength-matched baseline columns from the matrix. The baseline shown per
/// sweep is the strongest level whose mean NQD does not exceed our attack's;
/// when even the weakest level exceeds it, that level is shown flagged with
/// `!` (budget exceeded).
pub fn decoder_table_markdown(run: &PipelineRun, matrix: Option<&InterferenceMatrix>) -> String {
    let mut out = String::from("# Decoder metrics\n\n");
    out.push_str("BA^clean / BA^unwm / BA^atk are bit accuracies on clean watermarked, unwatermarked, and attacked images (zero-bit codecs report their statistic instead: L1 distance for ring-fft, p-value for chi2-ring). TPR at the calibrated 1% FPR threshold; #mis counts images misclassified as unwatermarked and left unattacked. Baseline levels are chosen to not exceed our attack's quality degradation; `!` flags a sweep whose weakest level still exceeds it.\n\n");
    let sweeps = ["noise", "blur", "jpeg", "resize"];
    out.push_str("| victim | BA^clean | BA^unwm | BA^atk | TPR | #mis |");
    for s in &sweeps {
        out.push_str(&format!(" {s} BA^atk | {s} TPR |"));
    }
    out.push('\n');
    out.push_str("|---|---|---|---|---|---|");
    for _ in &sweeps {
        out.push_str("---|---|");
    }
    out.push('\n');
    for v in &run.victims {
        let stat = |ba: Option<f64>, score: f64| -> String {
            match ba {
                Some(b) => fmt_g6(b),
                None => fmt_g6(score),
            }
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |",
            v.victim_id,
            stat(v.ba_clean, v.mean_score_clean),
            stat(v.ba_unwm, v.mean_score_unwm),
            stat(v.ba_atk, v.mean_score_atk),
            fmt_g6(v.tpr_atk),
            v.n_mis,
        ));
        for sweep in &sweeps {
            match matrix.and_then(|m| matched_baseline(m, &v.victim_id, sweep, v.mean_nqd)) {
                Some((cell, exceeded)) => {
                    let flag = if exceeded { "!" } else { "" };
                    out.push_str(&format!(
                        " {}{} | {}{} |",
                        stat(cell.mean_ba, cell.mean_score),
                        flag,
                        fmt_g6(cell.tpr_at_fpr),
                        flag,
                    ));
                }
                None => out.push_str(" - | - |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Strength-matched baseline: strongest level of the sweep with mean NQD at
/// most `budget`; falls back to the weakest level flagged as exceeding.
fn matched_baseline<'m>(
    matrix: &'m InterferenceMatrix,
    victim: &str,
    sweep_prefix: &str,
    budget: f64,
) -> Option<(&'m wmarena_core::arena::InterferenceCell, bool)> {
    let mut cells: Vec<&wmarena_core::arena::InterferenceCell> = matrix
        .cells
        .iter()
        .filter(|c| {
            c.victim_id == victim && c.attack_id.starts_with(&format!("{sweep_prefix}:"))
        })
        .collect();
    if cells.is_empty() {
        return None;
    }
    cells.sort_by(|a, b| a.mean_nqd.partial_cmp(&b.mean_nqd).expect("finite NQD"));
    let within: Vec<&&wmarena_core::arena::InterferenceCell> =
        cells.iter().filter(|c| c.mean_nqd <= budget).collect();
    match within.last() {
        Some(cell) => Some((**cell, false)),
        None => Some((cells[0], true)),
    }
}

/// Box-plot data of per-image NQD per attack: quartiles, 1.5-IQR whiskers,
/// and the mean.
pub fn nqd_boxplot_csv(matrix: &InterferenceMatrix) -> String {
    use std::collections::BTreeMap;
    let mut per_attack: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for cell in &matrix.cells {
        per_attack
            .entry(cell.attack_id.as_str())
            .or_default()
            .extend(cell.records.iter().map(|r| r.nqd));
    }
    let mut out = String::from("attack,n,lo_whisker,q1,median,q3,hi_whisker,mean\n");
    for (attack, mut values) in per_attack {
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite NQD"));
        let q1 = quantile_linear(&values, 0.25);
        let med = quantile_linear(&values, 0.5);
        let q3 = quantile_linear(&values, 0.75);
        let iqr = q3 - q1;
        let lo = values.iter().cloned().find(|v| *v >= q1 - 1.5 * iqr).unwrap_or(q1);
        let hi = values.iter().rev().cloned().find(|v| *v <= q3 + 1.5 * iqr).unwrap_or(q3);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        out.push_str(&format!(
            "{attack},{},{},{},{},{},{},{}\n",
            values.len(),
            fmt_g6(lo),
            fmt_g6(q1),
            fmt_g6(med),
            fmt_g6(q3),
            fmt_g6(hi),
            fmt_g6(mean),
        ));
    }
    out
}

pub fn eval_confusion_csv(report: &wmarena_core::classify::EvalReport) -> String {
    let mut out = String::from("truth\\predicted");
    for c in &report.classes {
        out.push_str(&format!(",{c}"));
    }
    out.push('\n');
    for (k, row) in report.confusion.iter().enumerate() {
        out.push_str(&report.classes[k]);
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn nqd_model_note(model: &NqdModel) -> String {
    let names: Vec<&str> = model.anchors.iter().map(|a| a.name.as_str()).collect();
    format!("NQD over metrics [{}], fitted on {} attacked images\n", names.join(", "), model.fitted_on)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_formatting_is_stable() {
        assert_eq!(fmt_g6(0.0), "0");
        assert_eq!(fmt_g6(1.0), "1");
        assert_eq!(fmt_g6(0.5), "0.5");
        assert_eq!(fmt_g6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_g6(123456.0), "123456");
        assert_eq!(fmt_g6(1234567.0), "1.23457e6");
        assert_eq!(fmt_g6(0.000012345), "1.2345e-5");
        assert_eq!(fmt_g6(-0.25), "-0.25");
        assert_eq!(fmt_g6(33.979_400_086_720_38), "33.9794");
    }
}
