//! The rater file: `image_id,rater_id,extent_right,extent_left,opacity_right,opacity_left`.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use cxrsev_core::data::{LabelTable, RaterScore};

use crate::error::{read_file, Error, Result};
use crate::sheet::{csv_writer, write_error, Sheet};

pub const LABEL_COLUMNS: [&str; 6] = [
    "image_id",
    "rater_id",
    "extent_right",
    "extent_left",
    "opacity_right",
    "opacity_left",
];

pub fn read_labels(path: &Path) -> Result<LabelTable> {
    parse_labels(&read_file(path)?, &path.display().to_string())
}

pub fn parse_labels(bytes: &[u8], source_name: &str) -> Result<LabelTable> {
    let sheet = Sheet::parse(bytes, source_name)?;
    sheet.expect_prefix(&LABEL_COLUMNS)?;
    if sheet.header.len() > LABEL_COLUMNS.len() {
        return Err(sheet.header_error(format!("unexpected column `{}`", sheet.header[LABEL_COLUMNS.len()])));
    }

    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    let mut scores = Vec::with_capacity(sheet.records.len());
    for (i, (_, rec)) in sheet.records.iter().enumerate() {
        let image = rec[0].trim();
        let rater = rec[1].trim();
        if image.is_empty() {
            return Err(sheet.cell_error(i, 0, "empty image_id".into()));
        }
        if rater.is_empty() {
            return Err(sheet.cell_error(i, 1, "empty rater_id".into()));
        }
        if let Some(first) = seen.insert((image.to_string(), rater.to_string()), i) {
            return Err(sheet.row_error(
                i,
                format!("rater `{rater}` already scored image `{image}` (row {})", first + 1),
            ));
        }
        let mut v = [0i64; 4];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = rec[k + 2]
                .trim()
                .parse()
                .map_err(|_| sheet.cell_error(i, k + 2, format!("`{}` is not an integer", &rec[k + 2])))?;
        }
        let score = RaterScore::new(image, rater, [v[0], v[1]], [v[2], v[3]]).map_err(|e| match e {
            cxrsev_core::Error::ScoreOutOfRange { field, .. } => {
                let col = LABEL_COLUMNS.iter().position(|c| *c == field).unwrap_or(2);
                sheet.cell_error(i, col, e.to_string())
            }
            other => Error::Data {
                source_name: source_name.to_string(),
                source: other,
            },
        })?;
        scores.push(score);
    }
    LabelTable::new(scores).map_err(|source| Error::Data {
        source_name: source_name.to_string(),
        source,
    })
}

pub fn write_labels<W: Write>(labels: &LabelTable, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let err = |e| write_error("label table", e);
    out.write_record(LABEL_COLUMNS).map_err(err)?;
    for s in labels.scores() {
        out.write_record([
            s.image_id.clone(),
            s.rater_id.clone(),
            s.extent_right.to_string(),
            s.extent_left.to_string(),
            s.opacity_right.to_string(),
            s.opacity_left.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::format("label table", e.to_string()))
}
