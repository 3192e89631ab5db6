use serde::Serialize;

use super::metrics::{compute_metrics, ConfusionCounts, Fraction, Metrics};
use super::nli::NliConfusion;
use super::runner::PairRow;
use crate::dataset::RelationType;
use crate::model::NliClass;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub label: Vec<String>,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub precision: Fraction,
    pub recall: Fraction,
    pub f1: Fraction,
}

impl MetricRow {
    pub fn new(label: Vec<String>, counts: ConfusionCounts) -> Self {
        let Metrics { precision, recall, f1, .. } = compute_metrics(&counts);
        Self { label, counts, precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<MetricRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub micro: Option<MetricRow>,
}

/// Per concept pair counts for one relation, with the micro average as the
/// final row.
pub fn pair_table(rows: &[PairRow], relation: RelationType) -> MetricTable {
    let selected: Vec<&PairRow> = rows.iter().filter(|r| r.relation_type == relation).collect();
    let micro: ConfusionCounts = selected.iter().map(|r| r.counts).sum();
    MetricTable {
        title: format!("Evaluation of predicate \"{}\"", relation.label()),
        columns: vec!["Concept 1".into(), "Concept 2".into()],
        rows: selected
            .iter()
            .map(|r| MetricRow::new(vec![r.concept_pair.0.clone(), r.concept_pair.1.clone()], r.counts))
            .collect(),
        micro: Some(MetricRow::new(vec!["Average (micro)".into(), String::new()], micro)),
    }
}

/// One row per relation.
pub fn relation_table(title: &str, rows: &[(RelationType, ConfusionCounts)]) -> MetricTable {
    MetricTable {
        title: title.to_string(),
        columns: vec!["Relation".into()],
        rows: rows.iter().map(|(r, c)| MetricRow::new(vec![r.label().replace('_', " ")], *c)).collect(),
        micro: None,
    }
}

fn markdown_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn metric_cells(row: &MetricRow) -> Vec<String> {
    let mut cells = row.label.clone();
    let c = row.counts;
    cells.extend([c.tp, c.tn, c.fp, c.fn_].map(|n| n.to_string()));
    cells.push(row.precision.to_string());
    cells.push(row.recall.to_string());
    cells
}

pub fn metric_table_markdown(table: &MetricTable) -> String {
    let mut header = table.columns.clone();
    header.extend(["TP", "TN", "FP", "FN", "Precision", "Recall"].map(String::from));
    let mut out = format!("**{}**\n\n", table.title);
    out.push_str(&markdown_row(&header));
    out.push_str(&markdown_row(&header.iter().map(|_| "---".to_string()).collect::<Vec<_>>()));
    for row in table.rows.iter().chain(&table.micro) {
        out.push_str(&markdown_row(&metric_cells(row)));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NliTable {
    pub model: String,
    pub total: u64,
    pub matrix: [[u64; 3]; 3],
    pub unparsed: u64,
    pub accuracy: Fraction,
}

pub fn nli_table(model: &str, confusion: &NliConfusion) -> NliTable {
    NliTable {
        model: model.to_string(),
        total: confusion.total(),
        matrix: confusion.matrix,
        unparsed: confusion.unparsed_total(),
        accuracy: confusion.accuracy(),
    }
}

/// Cells show the share of all evaluated records and the absolute count.
pub fn nli_table_markdown(table: &NliTable) -> String {
    let mut header = vec![table.model.clone()];
    header.extend(NliClass::ALL.iter().map(|c| format!("Answered {c}")));
    let mut out = markdown_row(&header);
    out.push_str(&markdown_row(&header.iter().map(|_| "---".to_string()).collect::<Vec<_>>()));
    for expected in NliClass::ALL {
        let mut cells = vec![format!("Expected {expected}")];
        for answered in NliClass::ALL {
            let n = table.matrix[expected.index()][answered.index()];
            cells.push(format!("{} % ({n})", Fraction::new(n, table.total).percent(1)));
        }
        out.push_str(&markdown_row(&cells));
    }
    out.push_str(&format!("\nAccuracy: {} % of {} records", table.accuracy.percent(1), table.total));
    if table.unparsed > 0 {
        out.push_str(&format!("; {} answers could not be parsed", table.unparsed));
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markdown_layouts() {
        let rows = vec![PairRow {
            relation_type: RelationType::NegativeCorrelation,
            concept_pair: ("ChemicalEntity".into(), "ChemicalEntity".into()),
            counts: ConfusionCounts::new(18, 110, 0, 92),
        }];
        let md = metric_table_markdown(&pair_table(&rows, RelationType::NegativeCorrelation));
        assert!(md.contains("| ChemicalEntity | ChemicalEntity | 18 | 110 | 0 | 92 | 100.00 % | 16.36 % |"), "{md}");
        assert!(md.contains("| Average (micro) |  | 18 |"));
        let t = relation_table("strict", &[(RelationType::NegativeCorrelation, ConfusionCounts::new(0, 700, 0, 700))]);
        assert!(metric_table_markdown(&t).contains("| Negative Correlation | 0 | 700 | 0 | 700 | NaN | 0.00 % |"));
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["rows"][0]["precision"], "NaN");
        assert_eq!(json["rows"][0]["fn"], 700);

        let mut c = NliConfusion::default();
        c.matrix = [[326, 9, 11], [63, 217, 30], [4, 16, 324]];
        let md = nli_table_markdown(&nli_table("llama-3-70b", &c));
        assert!(md.contains("| Expected entailment | 32.6 % (326) | 0.9 % (9) | 1.1 % (11) |"), "{md}");
        assert!(md.contains("Accuracy: 86.7 %"));
    }
}
