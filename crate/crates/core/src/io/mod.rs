//! On-disk formats: Netpbm heat maps, MDF record files and significance
//! tables.

pub mod image;
pub mod records;
pub mod table;

pub use image::{decode_pgm, encode_pgm, encode_ppm, sidecar_path, write_pgm, write_ppm, ImageSidecar};
pub use records::{read_records, write_records, MdfRecord};
pub use table::{format_real, read_significance, significance_csv, write_significance};
