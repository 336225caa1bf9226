//! Text documents produced by the CLI: the metrics table, scatter and
//! embedding exports, per-repetition audit rows, kappa and cohort summaries.

use std::fmt::Write as _;

use cxrsev_core::agreement::RatingMatrix;
use cxrsev_core::data::{CohortSummary, Target};
use cxrsev_core::eval::{EvalRun, MetricsSummary, ScatterPoint, Stat};
use cxrsev_core::regress::FeatureSet;
use cxrsev_core::tsne::EmbeddingRow;

use crate::error::Result;
use crate::sheet::{csv_writer, fmt_f64, write_error};

pub const SKIPPED_NO_INTERMEDIATE: &str = "skipped: features absent";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Markdown,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableRow {
    Done(MetricsSummary),
    Skipped {
        target: Target,
        feature_set: FeatureSet,
        reason: String,
    },
}

impl TableRow {
    fn key(&self) -> (Target, FeatureSet) {
        match self {
            TableRow::Done(s) => (s.target, s.feature_set),
            TableRow::Skipped { target, feature_set, .. } => (*target, *feature_set),
        }
    }
}

/// "0.80±0.05" (or just "0.80" with a single repetition).
pub fn mean_std(stat: &Stat) -> String {
    let fix = |v: f64| {
        let s = format!("{v:.2}");
        if s == "-0.00" {
            "0.00".to_string()
        } else {
            s
        }
    };
    match stat.std {
        Some(sd) => format!("{}±{}", fix(stat.mean), fix(sd)),
        None => fix(stat.mean),
    }
}

fn cells(row: &TableRow) -> [String; 7] {
    let (target, fs) = row.key();
    let head = [target.label().to_string(), fs.label().to_string(), format!("{}+1", fs.width())];
    let metrics = match row {
        TableRow::Done(s) => [mean_std(&s.pearson), mean_std(&s.r2), mean_std(&s.mae), mean_std(&s.mse)],
        TableRow::Skipped { reason, .. } => [reason.clone(), String::new(), String::new(), String::new()],
    };
    let [a, b, c] = head;
    let [d, e, f, g] = metrics;
    [a, b, c, d, e, f, g]
}

/// Rows are ordered by task, then by parameter count.
pub fn emit_table(rows: &[TableRow], format: TableFormat) -> Result<String> {
    let target_rank = |t: Target| Target::ALL.iter().position(|&x| x == t).unwrap_or(usize::MAX);
    let mut sorted: Vec<&TableRow> = rows.iter().collect();
    sorted.sort_by_key(|r| {
        let (t, fs) = r.key();
        (target_rank(t), fs.n_params())
    });

    match format {
        TableFormat::Markdown => {
            let mut out = String::new();
            out.push_str("| Task | Features | # params | Pearson | R² | MAE | MSE |\n");
            out.push_str("|---|---|---:|---:|---:|---:|---:|\n");
            for r in sorted {
                let _ = writeln!(out, "| {} |", cells(r).join(" | "));
            }
            Ok(out)
        }
        TableFormat::Csv => {
            let mut buf = Vec::new();
            {
                let mut w = csv_writer(&mut buf);
                let err = |e| write_error("table", e);
                w.write_record(["task", "features", "params", "pearson", "r2", "mae", "mse"]).map_err(err)?;
                for r in sorted {
                    let (t, fs) = r.key();
                    let mut c = cells(r);
                    c[0] = t.as_str().to_string();
                    c[1] = fs.as_str().to_string();
                    w.write_record(&c).map_err(err)?;
                }
                w.flush().map_err(|e| crate::error::Error::format("table", e.to_string()))?;
            }
            Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
        }
    }
}

pub fn scatter_csv(points: &[ScatterPoint]) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        let err = |e| write_error("scatter", e);
        w.write_record(["image_id", "truth", "prediction", "abs_error"]).map_err(err)?;
        for p in points {
            w.write_record([p.image_id.clone(), fmt_f64(p.truth), fmt_f64(p.prediction), fmt_f64(p.abs_error)])
                .map_err(err)?;
        }
        w.flush().map_err(|e| crate::error::Error::format("scatter", e.to_string()))?;
    }
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// `with_predictions` controls whether the `predicted_extent` column exists at
/// all; rows lacking a prediction then read "unknown".
pub fn embedding_csv(rows: &[EmbeddingRow], with_predictions: bool) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        let err = |e| write_error("embedding", e);
        let mut header = vec!["image_id", "x", "y"];
        if with_predictions {
            header.push("predicted_extent");
        }
        header.push("survival");
        w.write_record(&header).map_err(err)?;
        for r in rows {
            let mut rec = vec![r.image_id.clone(), fmt_f64(r.x), fmt_f64(r.y)];
            if with_predictions {
                rec.push(r.predicted_extent.map_or_else(|| "unknown".to_string(), fmt_f64));
            }
            rec.push(r.survival.as_str().to_string());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| crate::error::Error::format("embedding", e.to_string()))?;
    }
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// One line per repetition of every run, for auditing the summaries.
pub fn repetitions_csv(runs: &[&EvalRun]) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        let err = |e| write_error("repetitions", e);
        w.write_record([
            "task", "features", "repetition", "n_train", "n_test", "pearson", "r2", "mae", "mse",
        ])
        .map_err(err)?;
        for run in runs {
            for r in &run.repetitions {
                w.write_record([
                    run.summary.target.as_str().to_string(),
                    run.summary.feature_set.as_str().to_string(),
                    r.index.to_string(),
                    r.n_train.to_string(),
                    r.n_test.to_string(),
                    fmt_f64(r.pearson),
                    fmt_f64(r.r2),
                    fmt_f64(r.mae),
                    fmt_f64(r.mse),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|e| crate::error::Error::format("repetitions", e.to_string()))?;
    }
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn kappa_line(scale: Target, kappa: f64, m: &RatingMatrix) -> String {
    format!(
        "{}: kappa = {kappa:.3} (N = {}, n_raters = {}, C = {})",
        scale.as_str(),
        m.n_items(),
        m.n_raters(),
        m.n_categories()
    )
}

pub fn cohort_text(s: &CohortSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "images: {}", s.n_images);
    let _ = writeln!(out, "patients: {}", s.n_patients);
    let _ = writeln!(out, "male/female/unknown: {}/{}/{}", s.male, s.female, s.sex_unknown);
    match &s.age {
        Some(a) => {
            let _ = writeln!(out, "age: {:.1}±{:.1} (n = {}, population std)", a.mean, a.std, a.n);
        }
        None => out.push_str("age: absent\n"),
    }
    for (sex, a) in &s.age_by_sex {
        let _ = writeln!(out, "age[{sex}]: {:.1}±{:.1} (n = {})", a.mean, a.std, a.n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use cxrsev_core::data::Survival;

    fn summary(target: Target, fs: FeatureSet, p: f64) -> MetricsSummary {
        let st = |m: f64| Stat { mean: m, std: Some(0.05) };
        MetricsSummary {
            target,
            feature_set: fs,
            n_params: fs.n_params(),
            n_reps: 50,
            pearson: st(p),
            r2: st(-0.0001),
            mae: st(1.14),
            mse: st(2.06),
        }
    }

    #[test]
    fn one_row_table() {
        let t = emit_table(&[TableRow::Done(summary(Target::Extent, FeatureSet::Opacity1, 0.8))], TableFormat::Markdown)
            .unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[2],
            "| Geographic Extent | \"lung opacity\" output | 1+1 | 0.80±0.05 | 0.00±0.05 | 1.14±0.05 | 2.06±0.05 |"
        );
    }

    #[test]
    fn ten_rows_in_task_then_size_order() {
        let mut rows = Vec::new();
        for fs in FeatureSet::ALL {
            for t in [Target::Extent, Target::Opacity] {
                rows.push(TableRow::Done(summary(t, fs, 0.5)));
            }
        }
        let t = emit_table(&rows, TableFormat::Csv).unwrap();
        let order: Vec<(String, String)> = t
            .lines()
            .skip(1)
            .map(|l| {
                let mut f = l.split(',');
                (f.next().unwrap().to_string(), f.next().unwrap().to_string())
            })
            .collect();
        let want: Vec<(String, String)> = ["opacity", "extent"]
            .iter()
            .flat_map(|t| {
                ["none", "opacity1", "pneumonia4", "all18", "intermediate1024"]
                    .iter()
                    .map(move |f| (t.to_string(), f.to_string()))
            })
            .collect();
        assert_eq!(order, want);
    }

    #[test]
    fn csv_table_parses_back() {
        let rows = [
            TableRow::Done(summary(Target::Opacity, FeatureSet::Pneumonia4, 0.78)),
            TableRow::Skipped {
                target: Target::Opacity,
                feature_set: FeatureSet::Intermediate1024,
                reason: SKIPPED_NO_INTERMEDIATE.into(),
            },
        ];
        let text = emit_table(&rows, TableFormat::Csv).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let recs: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(&recs[0][3], "0.78±0.05");
        assert_eq!(&recs[1][3], SKIPPED_NO_INTERMEDIATE);
    }

    #[test]
    fn single_repetition_has_no_std() {
        assert_eq!(mean_std(&Stat { mean: 0.123, std: None }), "0.12");
    }

    #[test]
    fn embedding_columns() {
        let rows = vec![EmbeddingRow { image_id: "a".into(), x: 1.5, y: -2.0, predicted_extent: None, survival: Survival::Unknown }];
        assert_eq!(embedding_csv(&rows, false).unwrap(), "image_id,x,y,survival\na,1.5,-2.0,unknown\n");
        assert_eq!(
            embedding_csv(&rows, true).unwrap(),
            "image_id,x,y,predicted_extent,survival\na,1.5,-2.0,unknown,unknown\n"
        );
    }

    #[test]
    fn scatter_rows() {
        let p = ScatterPoint { image_id: "a".into(), truth: 5.0, prediction: 5.3, abs_error: 0.3 };
        assert_eq!(scatter_csv(&[p]).unwrap(), "image_id,truth,prediction,abs_error\na,5.0,5.3,0.3\n");
    }
}
