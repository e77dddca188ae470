pub mod bench;
pub mod eval;
pub mod interpolate;
pub mod synth;
pub mod tca;

pub use bench::BenchArgs;
pub use eval::EvalArgs;
pub use interpolate::InterpolateArgs;
pub use synth::SynthArgs;
pub use tca::TcaArgs;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ripstab_core::tca::Preset;
use ripstab_core::{Error, Result, TcaConfig};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Config from an explicit file, else a named preset (`identity` or one of
/// the gain/decay regimes), else defaults.
pub(crate) fn load_config(config: Option<&Path>, preset: Option<&str>) -> Result<TcaConfig> {
    match (config, preset) {
        (Some(_), Some(_)) => Err(Error::Config("--config and --preset are mutually exclusive".into())),
        (Some(path), None) => TcaConfig::load(path),
        (None, Some("identity")) => Ok(TcaConfig::identity()),
        (None, Some(name)) => Preset::from_name(name)
            .map(TcaConfig::preset)
            .ok_or_else(|| Error::Config(format!("unknown preset {name:?}"))),
        (None, None) => Ok(TcaConfig::default()),
    }
}

/// Default manifest location next to an output file.
pub(crate) fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
