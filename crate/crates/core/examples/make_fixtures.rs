//! Writes the scenario recordings and fixture registries to a directory.
//!
//!     cargo run -p anamnesa-core --example make_fixtures -- out/fixtures

use std::path::PathBuf;
use std::time::Instant;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures-out".into()));
    let started = Instant::now();
    let written = anamnesa_core::scenario::write_fixture_dir(&dir)?;
    for path in written
        .recordings
        .iter()
        .chain([&written.transcripts, &written.summaries])
    {
        println!("{}", path.display());
    }
    eprintln!("done in {:.2} s", started.elapsed().as_secs_f64());
    Ok(())
}
