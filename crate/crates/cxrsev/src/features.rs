//! The per-image feature file:
//! `image_id,patient_id,timepoint,sex,age,survival,out_<task>×18[,feat_0000..feat_1023]`.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use cxrsev_core::data::{FeatureRow, FeatureTable, FeatureVector, ImageRecord, INTERMEDIATE_DIM};
use cxrsev_core::task::{Task, N_TASKS};

use crate::error::{read_file, Error, Result};
use crate::sheet::{csv_writer, fmt_f64, parse_finite, write_error, Sheet};

pub const METADATA_COLUMNS: [&str; 6] = ["image_id", "patient_id", "timepoint", "sex", "age", "survival"];
const N_FIXED: usize = METADATA_COLUMNS.len() + N_TASKS;

pub fn output_column(task: Task) -> String {
    format!("out_{}", task.name())
}

pub fn intermediate_column(i: usize) -> String {
    format!("feat_{i:04}")
}

pub fn feature_header(with_intermediate: bool) -> Vec<String> {
    let mut h: Vec<String> = METADATA_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.extend(Task::ALL.iter().map(|&t| output_column(t)));
    if with_intermediate {
        h.extend((0..INTERMEDIATE_DIM).map(intermediate_column));
    }
    h
}

pub fn read_features(path: &Path) -> Result<FeatureTable> {
    parse_features(&read_file(path)?, &path.display().to_string())
}

pub fn parse_features(bytes: &[u8], source_name: &str) -> Result<FeatureTable> {
    let sheet = Sheet::parse(bytes, source_name)?;
    let with_intermediate = check_header(&sheet)?;

    let mut rows = Vec::with_capacity(sheet.records.len());
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut slots: HashMap<(String, u32), usize> = HashMap::new();
    for (i, (_, rec)) in sheet.records.iter().enumerate() {
        let text = |c: usize| rec[c].trim();
        let number = |c: usize| parse_finite(&rec[c]).map_err(|m| sheet.cell_error(i, c, m));

        let image_id = text(0).to_string();
        if image_id.is_empty() {
            return Err(sheet.cell_error(i, 0, "empty image_id".into()));
        }
        if let Some(first) = ids.insert(image_id.clone(), i) {
            return Err(sheet.cell_error(i, 0, format!("duplicate image_id `{image_id}` (first at row {})", first + 1)));
        }
        let patient_id = text(1).to_string();
        if patient_id.is_empty() {
            return Err(sheet.cell_error(i, 1, "empty patient_id".into()));
        }
        let timepoint: u32 = text(2)
            .parse()
            .map_err(|_| sheet.cell_error(i, 2, format!("`{}` is not a non-negative integer", &rec[2])))?;
        if let Some(first) = slots.insert((patient_id.clone(), timepoint), i) {
            return Err(sheet.cell_error(
                i,
                2,
                format!("patient `{patient_id}` already has timepoint {timepoint} (row {})", first + 1),
            ));
        }
        let sex = text(3)
            .parse()
            .map_err(|_| sheet.cell_error(i, 3, format!("`{}` is not one of male, female, unknown", &rec[3])))?;
        let age = if text(4).is_empty() { None } else { Some(number(4)?) };
        let survival = text(5).parse().map_err(|_| {
            sheet.cell_error(i, 5, format!("`{}` is not one of survived, deceased, unknown", &rec[5]))
        })?;

        let mut outputs = [0.0; N_TASKS];
        for (k, o) in outputs.iter_mut().enumerate() {
            *o = number(METADATA_COLUMNS.len() + k)?;
        }
        let intermediate = if with_intermediate {
            Some((N_FIXED..N_FIXED + INTERMEDIATE_DIM).map(number).collect::<Result<Vec<f64>>>()?)
        } else {
            None
        };

        rows.push(FeatureRow {
            record: ImageRecord {
                image_id,
                patient_id,
                timepoint,
                sex,
                age,
                survival,
            },
            features: FeatureVector { outputs, intermediate },
        });
    }
    FeatureTable::new(rows).map_err(|source| Error::Data {
        source_name: source_name.to_string(),
        source,
    })
}

/// Returns whether the intermediate block is present.
fn check_header(sheet: &Sheet) -> Result<bool> {
    sheet.expect_prefix(&METADATA_COLUMNS)?;
    for (k, &task) in Task::ALL.iter().enumerate() {
        let col = METADATA_COLUMNS.len() + k;
        let want = output_column(task);
        match sheet.header.get(col) {
            Some(got) if *got == want => {}
            Some(got) if got.starts_with("out_") && got[4..].parse::<Task>().is_err() => {
                return Err(sheet.header_error(format!("unknown task column `{got}`")))
            }
            Some(got) => {
                return Err(sheet.header_error(format!("column {} is `{got}`, expected `{want}`", col + 1)))
            }
            None => return Err(sheet.header_error(format!("missing task column `{want}`"))),
        }
    }
    let extra = sheet.header.len() - N_FIXED;
    if extra == 0 {
        return Ok(false);
    }
    if extra != INTERMEDIATE_DIM {
        return Err(sheet.header_error(format!(
            "intermediate block has {extra} columns, expected {INTERMEDIATE_DIM}"
        )));
    }
    for i in 0..INTERMEDIATE_DIM {
        let want = intermediate_column(i);
        let got = &sheet.header[N_FIXED + i];
        if *got != want {
            return Err(sheet.header_error(format!("column {} is `{got}`, expected `{want}`", N_FIXED + i + 1)));
        }
    }
    Ok(true)
}

/// Writes `table` in the feature-file format. The intermediate block is
/// written when every row has one.
pub fn write_features<W: Write>(table: &FeatureTable, w: W) -> Result<()> {
    let with_intermediate = table.has_intermediate();
    if !with_intermediate && table.rows().iter().any(|r| r.features.intermediate.is_some()) {
        return Err(Error::format(
            "feature table",
            "intermediate block present on some rows only",
        ));
    }
    let mut out = csv_writer(w);
    let err = |e| write_error("feature table", e);
    out.write_record(feature_header(with_intermediate)).map_err(err)?;
    for row in table.rows() {
        let r = &row.record;
        let mut fields = vec![
            r.image_id.clone(),
            r.patient_id.clone(),
            r.timepoint.to_string(),
            r.sex.as_str().to_string(),
            r.age.map(fmt_f64).unwrap_or_default(),
            r.survival.as_str().to_string(),
        ];
        fields.extend(row.features.outputs.iter().map(|&v| fmt_f64(v)));
        if with_intermediate {
            if let Some(v) = &row.features.intermediate {
                fields.extend(v.iter().map(|&x| fmt_f64(x)));
            }
        }
        out.write_record(&fields).map_err(err)?;
    }
    out.flush().map_err(|e| Error::format("feature table", e.to_string()))
}

pub fn features_to_bytes(table: &FeatureTable) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_features(table, &mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        feature_header(false).join(",")
    }

    fn row(id: &str, patient: &str, t: u32, opacity: &str) -> String {
        let mut outs = vec!["0.5".to_string(); N_TASKS];
        outs[Task::LungOpacity.index()] = opacity.to_string();
        format!("{id},{patient},{t},male,61,survived,{}", outs.join(","))
    }

    #[test]
    fn header_only_is_an_empty_table() {
        let t = parse_features(format!("{}\n", header()).as_bytes(), "f.csv").unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn parses_rows_in_order() {
        let text = format!("{}\n{}\n{}\n", header(), row("a", "p1", 0, "1.25"), row("b", "p1", 1, "-3"));
        let t = parse_features(text.as_bytes(), "f.csv").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.rows()[0].features.output(Task::LungOpacity), 1.25);
        assert_eq!(t.rows()[1].record.timepoint, 1);
        assert_eq!(t.rows()[1].record.age, Some(61.0));
    }

    #[test]
    fn nan_names_line_and_column() {
        let mut outs = vec!["0".to_string(); N_TASKS];
        outs[Task::Pneumonia.index()] = "NaN".into();
        let text = format!("{}\na,p,0,f,,unknown,{}\n", header(), outs.join(","));
        let msg = parse_features(text.as_bytes(), "f.csv").unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("out_pneumonia"), "{msg}");
    }

    #[test]
    fn duplicate_id_is_rejected_with_both_rows() {
        let text = format!("{}\n{}\n{}\n", header(), row("a", "p1", 0, "1"), row("a", "p2", 0, "1"));
        let msg = parse_features(text.as_bytes(), "f.csv").unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("row 1"), "{msg}");
    }

    #[test]
    fn duplicate_timepoint_is_rejected() {
        let text = format!("{}\n{}\n{}\n", header(), row("a", "p1", 0, "1"), row("b", "p1", 0, "1"));
        assert!(parse_features(text.as_bytes(), "f.csv").is_err());
    }

    #[test]
    fn header_problems() {
        let bad = header().replace("out_hernia", "out_fibrosis2");
        let msg = parse_features(bad.as_bytes(), "f.csv").unwrap_err().to_string();
        assert!(msg.contains("unknown task column `out_fibrosis2`"), "{msg}");

        let short = header().replace(",out_enlarged_cardiomediastinum", "");
        let msg = parse_features(short.as_bytes(), "f.csv").unwrap_err().to_string();
        assert!(msg.contains("missing task column `out_enlarged_cardiomediastinum`"), "{msg}");

        let partial = format!("{},feat_0000", header());
        assert!(parse_features(partial.as_bytes(), "f.csv").is_err());
        assert!(parse_features(b"", "f.csv").is_err());
    }

    #[test]
    fn ragged_row_is_a_record_error() {
        let text = format!("{}\na,p,0\n", header());
        let msg = parse_features(text.as_bytes(), "f.csv").unwrap_err().to_string();
        assert!(msg.contains("line 2") && msg.contains("fields"), "{msg}");
    }

    #[test]
    fn bad_enums_and_integers() {
        for (from, to) in [(",male,", ",other,"), (",survived,", ",maybe,"), (",0,male", ",-1,male")] {
            let text = format!("{}\n{}\n", header(), row("a", "p", 0, "1").replacen(from, to, 1));
            assert!(parse_features(text.as_bytes(), "f.csv").is_err(), "{to}");
        }
    }

    #[test]
    fn round_trip_with_intermediate() {
        let mut text = feature_header(true).join(",");
        text.push('\n');
        let mut r = row("x", "p", 3, "0.1").replace(",male,61,", ",unknown,,");
        for i in 0..INTERMEDIATE_DIM {
            r.push_str(&format!(",{}", (i as f64 * 0.37).sin() / 3.0));
        }
        text.push_str(&r);
        text.push('\n');
        let a = parse_features(text.as_bytes(), "f.csv").unwrap();
        assert!(a.has_intermediate());
        let b = parse_features(&features_to_bytes(&a).unwrap(), "again").unwrap();
        assert_eq!(a, b);
    }
}
