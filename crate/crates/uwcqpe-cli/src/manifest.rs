// Run manifests: every input and output file with its SHA-256 digest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// The parts of a written manifest needed to replay it.
#[derive(Deserialize)]
pub struct Recorded {
    pub argv: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Recorded {
    pub fn parse(text: &str) -> uwcqpe::Result<Self> {
        serde_json::from_str(text).map_err(|e| uwcqpe::Error::Parse { line: e.line(), msg: format!("manifest: {e}") })
    }
}

pub fn file_digest(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(digest(&bytes))
}

/// `args` with its `--out` value replaced by `out` (appended if absent).
pub fn with_out_dir(args: &[String], out: &Path) -> Vec<String> {
    let out = out.to_string_lossy().into_owned();
    let mut v = Vec::with_capacity(args.len() + 2);
    let mut it = args.iter();
    let mut seen = false;
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            v.push(a.clone());
            continue;
        }
        v.push("--out".into());
        v.push(out.clone());
        seen = true;
    }
    if !seen {
        v.push("--out".into());
        v.push(out);
    }
    v
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: &'a [String],
    config: serde_json::Value,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
    started_unix_s: u64,
    finished_unix_s: u64,
}

pub struct Recorder {
    command: &'static str,
    argv: Vec<String>,
    out: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    started: u64,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Recorder {
    pub fn new(command: &'static str, argv: &[String], out: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(out)?;
        Ok(Self { command, argv: argv.to_vec(), out: out.to_path_buf(), inputs: Vec::new(), outputs: Vec::new(), started: now() })
    }

    pub fn input(&mut self, path: &Path) -> std::io::Result<()> {
        self.inputs.push(FileDigest { path: path.to_path_buf(), sha256: file_digest(path)? });
        Ok(())
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, contents)?;
        self.outputs.push(FileDigest { path: PathBuf::from(name), sha256: digest(contents.as_bytes()) });
        Ok(())
    }

    pub fn finish(self, config: serde_json::Value) -> std::io::Result<()> {
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: &self.argv,
            config,
            inputs: &self.inputs,
            outputs: &self.outputs,
            started_unix_s: self.started,
            finished_unix_s: now(),
        };
        let mut s = serde_json::to_string_pretty(&m).expect("serializable");
        s.push('\n');
        std::fs::write(self.out.join("manifest.json"), s)
    }
}
