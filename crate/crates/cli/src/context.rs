use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context as _;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_SCHEMA: &str = "rfnet-run/1";

/// A failed command, split by exit code: 2 for usage, file and schema
/// problems, 1 for failures of the computation itself.
#[derive(Debug)]
pub enum Exit {
    Usage(anyhow::Error),
    Domain(anyhow::Error),
}

impl Exit {
    pub fn code(&self) -> u8 {
        match self {
            Exit::Usage(_) => 2,
            Exit::Domain(_) => 1,
        }
    }
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exit::Usage(e) | Exit::Domain(e) => write!(f, "{e:#}"),
        }
    }
}

pub type CmdResult<T> = Result<T, Exit>;

pub trait Classify<T> {
    fn usage(self) -> CmdResult<T>;
    fn domain(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> CmdResult<T> {
        self.map_err(|e| Exit::Usage(e.into()))
    }

    fn domain(self) -> CmdResult<T> {
        self.map_err(|e| Exit::Domain(e.into()))
    }
}

pub fn usage_error<T>(msg: impl fmt::Display) -> CmdResult<T> {
    Err(Exit::Usage(anyhow::anyhow!("{msg}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run a command and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    /// Arguments after the program name, with `--out` removed.
    pub args: Vec<String>,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub version: String,
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Per-invocation state: global options, the recorded inputs and outputs.
pub struct Ctx {
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    config_file: Option<serde_json::Value>,
    config: serde_json::Value,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<FileRecord>,
    input_paths: Vec<PathBuf>,
    outputs: Vec<FileRecord>,
    started: Instant,
}

impl Ctx {
    pub fn new(
        command: &str,
        args: Vec<String>,
        seed: Option<u64>,
        out: PathBuf,
        config: Option<&Path>,
    ) -> CmdResult<Self> {
        let mut ctx = Self {
            command: command.into(),
            args,
            seed,
            out,
            config_file: None,
            config: serde_json::Value::Null,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            input_paths: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        };
        if let Some(path) = config {
            let text = ctx.read(path)?;
            let v =
                serde_json::from_str(&text).with_context(|| format!("{}: not valid JSON", path.display())).usage()?;
            ctx.config_file = Some(v);
        }
        fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display())).usage()?;
        Ok(ctx)
    }

    /// Command configuration: the `--config` file over the defaults.
    pub fn config<T: DeserializeOwned + Default>(&self) -> CmdResult<T> {
        match &self.config_file {
            None => Ok(T::default()),
            Some(v) => serde_json::from_value(v.clone()).context("config file does not match this command").usage(),
        }
    }

    pub fn config_path_given(&self) -> bool {
        self.config_file.is_some()
    }

    /// Records the effective configuration for the manifest.
    pub fn record_config<T: Serialize>(&mut self, cfg: &T) {
        self.config = serde_json::to_value(cfg).expect("config serializes");
    }

    pub fn record_seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.into(), seed);
    }

    /// Reads and records an input file.
    pub fn read(&mut self, path: &Path) -> CmdResult<String> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).usage()?;
        self.inputs.push(FileRecord { path: path.display().to_string(), sha256: sha256_hex(text.as_bytes()) });
        self.input_paths.extend(fs::canonicalize(path));
        Ok(text)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CmdResult<PathBuf> {
        let path = self.out.join(name);
        if fs::canonicalize(&path).is_ok_and(|p| self.input_paths.contains(&p)) {
            return usage_error(format!("output {} would overwrite an input of this command", path.display()));
        }
        write_atomic(&path, contents.as_bytes()).with_context(|| format!("writing {}", path.display())).usage()?;
        self.outputs.push(FileRecord { path: name.into(), sha256: sha256_hex(contents.as_bytes()) });
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CmdResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes `<stem>.<command>.manifest.json` next to the outputs.
    pub fn finish(self, stem: &str) -> CmdResult<()> {
        let path = self.out.join(format!("{stem}.{}.manifest.json", self.command));
        let config_text = serde_json::to_string(&self.config).expect("config serializes");
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            command: self.command,
            args: self.args,
            config_hash: sha256_hex(config_text.as_bytes()),
            config: self.config,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write_atomic(&path, text.as_bytes()).with_context(|| format!("writing {}", path.display())).usage()
    }
}

/// File stem of `path`, for naming outputs.
pub fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("out").to_string()
}

/// `a,b,c` into a list.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> CmdResult<Vec<T>>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| Exit::Usage(anyhow::anyhow!("`{t}`: {e}"))))
        .collect()
}
