//! Output targets with collision protection.

use std::path::PathBuf;

pub enum OutputTarget {
    Stdout,
    File(PathBuf),
}

impl OutputTarget {
    pub fn new(path: Option<PathBuf>, force: bool) -> Result<Self, super::CliError> {
        match path {
            None => Ok(OutputTarget::Stdout),
            Some(p) => {
                if p.exists() && !force {
                    return Err(super::CliError::Usage(format!(
                        "output {} exists; pass --force to overwrite",
                        p.display()
                    )));
                }
                Ok(OutputTarget::File(p))
            }
        }
    }

    /// A sibling target with an extra extension (e.g. the fits file of a
    /// sweep table).
    pub fn derive(&self, ext: &str) -> OutputTarget {
        match self {
            OutputTarget::Stdout => OutputTarget::Stdout,
            OutputTarget::File(p) => {
                let mut name = p.as_os_str().to_os_string();
                name.push(".");
                name.push(ext);
                OutputTarget::File(PathBuf::from(name))
            }
        }
    }
}

/// Write text to the target; returns the list of files written.
pub fn write_text(target: &OutputTarget, text: &str) -> Result<Vec<PathBuf>, super::CliError> {
    match target {
        OutputTarget::Stdout => {
            print!("{text}");
            Ok(Vec::new())
        }
        OutputTarget::File(p) => {
            std::fs::write(p, text).map_err(|e| {
                super::CliError::Usage(format!("cannot write {}: {e}", p.display()))
            })?;
            Ok(vec![p.clone()])
        }
    }
}
