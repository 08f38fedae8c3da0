//! Configuration-driven front end for the projlab experiments.

pub mod commands;
pub mod config;
pub mod error;
pub mod reproduce;
pub mod svg;

pub use error::CliError;

/// Files produced by a command, in emission order, plus the summary printed
/// on standard output.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub summary: serde_json::Value,
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(summary: serde_json::Value) -> Self {
        Artifacts { summary, files: Vec::new() }
    }

    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &std::path::Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for (name, contents) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, contents).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }
}

pub fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
