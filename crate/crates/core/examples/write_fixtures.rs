//! Writes the synthetic fixture files used by the README walkthrough.
//!
//! Usage: `cargo run --example write_fixtures -- [DIR]` (default `data/synthetic`).

use deae::synthetic::{write_fixture_dir, SyntheticSpec};

fn main() -> deae::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/synthetic".into());
    let paths = write_fixture_dir(&dir, SyntheticSpec::default(), 4)?;
    println!("{paths:#?}");
    Ok(())
}
