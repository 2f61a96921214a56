//! Regenerates the bundled test image: `cargo run --example make_test_scene [out.png]`.

use std::path::PathBuf;

use retina_limit::foveate::{io, scene};

fn main() -> retina_limit::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/test_scene.png"));
    let img = scene::test_scene(512, 320, 17);
    io::write_png(&out, &img)?;
    println!("wrote {}", out.display());
    Ok(())
}
