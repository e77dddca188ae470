use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use ripstab_core::annotations::{CocoDataset, FpsPolicy};
use ripstab_core::{Error, Result};

use super::create;

#[derive(Debug, Clone, Args)]
pub struct InterpolateArgs {
    /// COCO-style annotation JSON with manual keyframes.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// `linear` (every in-between frame) or `stride:N` (every N-th).
    #[arg(long, default_value = "linear", env = "RIPSTAB_FPS_POLICY")]
    pub fps_policy: PolicyArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy)]
pub struct PolicyArg(pub FpsPolicy);

impl FromStr for PolicyArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "linear" {
            return Ok(PolicyArg(FpsPolicy::Linear));
        }
        s.strip_prefix("stride:")
            .and_then(|n| n.parse::<u64>().ok())
            .filter(|&n| n > 0)
            .map(|n| PolicyArg(FpsPolicy::Stride(n)))
            .ok_or_else(|| format!("expected `linear` or `stride:N`, got {s:?}"))
    }
}

pub fn execute(args: &InterpolateArgs) -> Result<()> {
    let dataset = CocoDataset::load(&args.input)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", args.input.display())))?;
    let dense = dataset.densified(args.fps_policy.0)?;
    let mut out = create(&args.out)?;
    serde_json::to_writer(&mut out, &dense)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
