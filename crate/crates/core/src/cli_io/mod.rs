//! Configuration, persistence and the command line.

pub mod cli;
pub mod config;
pub mod ledger_io;
pub mod profiles;
pub mod snapshot;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use cli::cli_main;
pub use config::{load_config, save_config, SimConfig};
pub use ledger_io::{emit_ledger, LedgerFormat};
pub use profiles::builtin_profile;
pub use snapshot::{read_snapshot, write_snapshot};

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
