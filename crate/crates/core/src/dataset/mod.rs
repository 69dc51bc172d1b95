//! Dataset storage: the ILDS container, the registry and the fetch cache.

mod fetch;
mod ilds;
mod registry;

pub use fetch::{fetch_dataset, sha256_file, sha256_hex};
pub use ilds::{read_ilds, write_ilds, ActionColumn, DatasetFile, DatasetMetadata, ILDS_MAGIC, ILDS_VERSION};
pub use registry::{registry_load, registry_lookup, DatasetLocation, Registry, RegistryEntry};
