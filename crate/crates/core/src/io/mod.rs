//! Initial conditions, budget CSV files, checkpoints and run manifests.

pub mod checkpoint;
pub mod csv;
pub mod ic;
pub mod manifest;

pub use self::csv::{budget_csv_header, read_budget_csv, write_budget_csv};
pub use checkpoint::{
    checkpoint_load, checkpoint_save, load_checkpoint_file, load_for_resume, save_checkpoint_file,
};
pub use ic::build_ic;
pub use manifest::{RunManifest, MANIFEST_FILE};
