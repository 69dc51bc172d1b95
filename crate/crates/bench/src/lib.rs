//! Fixtures shared by the criterion benchmarks in `benches/`.

use ilkit::benchmark::{default_cache_dir, default_registry_path};
use ilkit::dataset::{fetch_dataset, read_ilds, DatasetFile, Registry};

/// Load a dataset shipped with the registry.
pub fn shipped_dataset(key: &str) -> DatasetFile {
    let registry = Registry::load(default_registry_path()).expect("shipped registry");
    let entry = registry.lookup(key).expect("shipped key");
    let path = fetch_dataset(entry, default_cache_dir()).expect("shipped dataset");
    read_ilds(path).expect("valid dataset")
}
