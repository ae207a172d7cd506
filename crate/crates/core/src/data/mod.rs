//! Dataset ingestion and synthetic data.

pub mod synth;
pub mod ucr;

pub use synth::{synthesize_twopatterns, synthesize_with_layouts, Pulse, SynthConfig};
pub use ucr::{format_ucr, load_ucr_file, parse_ucr, write_ucr, LabelTable, UcrDataset, UcrSplit};
