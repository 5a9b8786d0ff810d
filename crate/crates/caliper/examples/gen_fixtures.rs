//! Regenerates the embedded fixture bundles under `fixtures/v1/`.
//!
//! Run from the crate root after changing any fixture builder:
//!
//! ```text
//! cargo run --example gen_fixtures
//! ```
//!
//! A unit test pins the embedded bytes to the builders' output, so a builder
//! change without a regeneration fails the suite.

use std::fs;
use std::path::Path;

use caliper::fixtures::{build_bundle, FIXTURE_NAMES};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/v1");
    fs::create_dir_all(&dir).expect("fixture directory");
    for name in FIXTURE_NAMES {
        let wire = build_bundle(name)
            .unwrap_or_else(|e| panic!("building {name}: {e}"))
            .to_wire()
            .unwrap_or_else(|e| panic!("encoding {name}: {e}"));
        let path = dir.join(format!("{name}.bundle"));
        fs::write(&path, &wire).unwrap_or_else(|e| panic!("writing {}: {e}", path.display()));
        println!("wrote {} ({} bytes)", path.display(), wire.len());
    }
}
