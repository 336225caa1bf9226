//! Key-value text form of a fitted probe.
//!
//! ```text
//! feature_set = pneumonia4
//! target = extent
//! intercept = 1.0000000000000000e0
//! weights = 2.5000000000000000e-1, ...
//! ```
//!
//! Values are written with 17 significant digits so they parse back exactly.

use std::path::Path;

use cxrsev_core::regress::RegressionModel;

use crate::error::{read_file, write_file, Error, Result};
use crate::sheet::parse_finite;

pub fn model_to_string(model: &RegressionModel) -> String {
    let weights: Vec<String> = model.weights.iter().map(|w| format!("{w:.16e}")).collect();
    format!(
        "feature_set = {}\ntarget = {}\nintercept = {:.16e}\nweights = {}\n",
        model.feature_set,
        model.target,
        model.intercept,
        weights.join(", ")
    )
}

pub fn parse_model(text: &str, source_name: &str) -> Result<RegressionModel> {
    let bad = |line: usize, msg: String| Error::format(source_name, format!("line {}: {msg}", line + 1));
    let (mut feature_set, mut target, mut intercept, mut weights) = (None, None, None, None);

    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(n, "expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let slot_taken = match key {
            "feature_set" => feature_set
                .replace(value.parse().map_err(|_| bad(n, format!("unknown feature set `{value}`")))?)
                .is_some(),
            "target" => target
                .replace(value.parse().map_err(|_| bad(n, format!("unknown target `{value}`")))?)
                .is_some(),
            "intercept" => intercept.replace(parse_finite(value).map_err(|m| bad(n, m))?).is_some(),
            "weights" => {
                let w = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| parse_finite(v).map_err(|m| bad(n, m)))
                        .collect::<Result<Vec<f64>>>()?
                };
                weights.replace(w).is_some()
            }
            other => return Err(bad(n, format!("unknown key `{other}`"))),
        };
        if slot_taken {
            return Err(bad(n, format!("`{key}` given twice")));
        }
    }

    let missing = |k: &str| Error::format(source_name, format!("missing `{k}`"));
    let feature_set: cxrsev_core::regress::FeatureSet = feature_set.ok_or_else(|| missing("feature_set"))?;
    let weights: Vec<f64> = weights.ok_or_else(|| missing("weights"))?;
    if weights.len() != feature_set.width() {
        return Err(Error::format(
            source_name,
            format!("{} weights for feature set {feature_set}, expected {}", weights.len(), feature_set.width()),
        ));
    }
    Ok(RegressionModel {
        feature_set,
        target: target.ok_or_else(|| missing("target"))?,
        weights,
        intercept: intercept.ok_or_else(|| missing("intercept"))?,
    })
}

pub fn read_model(path: &Path) -> Result<RegressionModel> {
    let bytes = read_file(path)?;
    let name = path.display().to_string();
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::format(&name, "invalid UTF-8"))?;
    parse_model(text, &name)
}

pub fn write_model(path: &Path, model: &RegressionModel) -> Result<()> {
    write_file(path, model_to_string(model).as_bytes())
}
