pub mod eval;
pub mod label;
pub mod report;
pub mod synth;
pub mod train;
pub mod tune;

use std::collections::BTreeSet;
use std::path::Path;

use pkde_core::{split_dataset, Dataset, LayerKey, SplitAssignment, SplitFractions};

use crate::error::CliError;

pub const SPLIT_FILE: &str = "split.json";

/// Loads `split`, or draws the seeded default split and saves it under `out`.
pub(crate) fn split_for(dataset: &Dataset, split: Option<&Path>, seed: u64, out: &Path) -> Result<SplitAssignment, CliError> {
    let s = match split {
        Some(p) => {
            crate::paths::require_file(p, "split file")?;
            SplitAssignment::load(p)?
        }
        None => split_dataset(dataset, SplitFractions::default(), seed)?,
    };
    let keys: BTreeSet<LayerKey> = dataset.keys().collect();
    if let Some(k) = s.train.iter().chain(&s.validation).chain(&s.test).find(|k| !keys.contains(k)) {
        return Err(CliError::Data(format!("split references {k:?}, which the dataset lacks")));
    }
    let mut text = s.to_json();
    text.push('\n');
    crate::paths::write_text(&out.join(SPLIT_FILE), &text)?;
    Ok(s)
}
