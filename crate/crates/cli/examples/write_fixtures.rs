//! Regenerates the bundled fixtures: `cargo run -p ucdi-cli --example write_fixtures`.

fn main() -> anyhow::Result<()> {
    let dir = ucdi_cli::fixtures::bundled_dir();
    ucdi_cli::fixtures::write(&dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}
