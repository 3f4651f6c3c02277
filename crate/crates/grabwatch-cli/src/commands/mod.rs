pub mod calibrate;
pub mod estimate;
pub mod monitor;
pub mod simulate;
pub mod validate;

use crate::errors::CliError;
use grabwatch::ingestion::{self, Dataset, DatasetFormat, LoadOptions};
use std::path::Path;

/// Loads a dataset, inferring the format from the extension unless forced.
pub fn load_dataset_arg(
    path: &Path,
    format: Option<&str>,
    image_width: u32,
    image_height: u32,
) -> Result<Dataset, CliError> {
    let format = match format {
        Some(s) => s.parse::<DatasetFormat>()?,
        None => DatasetFormat::from_path(path),
    };
    let opts = LoadOptions::new(image_width, image_height);
    Ok(ingestion::load_dataset(path, format, &opts)?)
}
