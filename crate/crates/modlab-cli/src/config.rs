//! `key = value` run configuration with `[section]` headers.
//!
//! Keys are the long flag names of the subcommand being run. Sections only
//! group keys; a key may appear once. Values from the file are turned into
//! flags and inserted ahead of the command-line flags, so explicit flags win.

use std::collections::BTreeSet;
use std::fmt;

use ini::{Ini, ParseOption};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line and column, when the error comes from the parser
    pub position: Option<(usize, usize)>,
    pub message: String,
}

impl ConfigError {
    fn new(message: String) -> Self {
        Self { position: None, message }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            Some((line, col)) => write!(f, "{line}:{col}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub section: Option<String>,
    pub key: String,
    pub value: String,
}

pub const SECTIONS: [&str; 7] = ["grid", "data", "norm", "sweep", "maximal", "verify", "output"];

/// Parses the file contents; comments start with `#` or `;`.
pub fn parse(text: &str) -> Result<Vec<Entry>, ConfigError> {
    // Backslashes are literal so table paths survive untouched.
    let opt = ParseOption { enabled_escape: false, ..ParseOption::default() };
    let ini = Ini::load_from_str_opt(text, opt)
        .map_err(|e| ConfigError { position: Some((e.line + 1, e.col + 1)), message: e.msg.into_owned() })?;
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (section, props) in ini.iter() {
        if let Some(name) = section {
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::new(format!(
                    "unknown section `{name}` (expected one of {})",
                    SECTIONS.join(", ")
                )));
            }
        }
        for (key, value) in props.iter() {
            let key = key.replace('_', "-");
            if value.is_empty() {
                return Err(ConfigError::new(format!("missing value for `{key}`")));
            }
            if !seen.insert(key.clone()) {
                return Err(ConfigError::new(format!("duplicate key `{key}`")));
            }
            entries.push(Entry { section: section.map(str::to_string), key, value: value.to_string() });
        }
    }
    Ok(entries)
}

fn describe(e: &Entry) -> String {
    match &e.section {
        Some(s) => format!("`{}` in [{s}]", e.key),
        None => format!("`{}`", e.key),
    }
}

/// Checks every key against the flags the subcommand accepts.
pub fn validate(entries: &[Entry], known: &[String]) -> Result<(), ConfigError> {
    match entries.iter().find(|e| !known.contains(&e.key)) {
        Some(e) => Err(ConfigError::new(format!("unknown key {}", describe(e)))),
        None => Ok(()),
    }
}

/// Flags for entries not already given on the command line. Boolean flags
/// take `true`/`false`.
pub fn to_flags(entries: &[Entry], given: &[String], boolean: &[String]) -> Result<Vec<String>, ConfigError> {
    let mut out = Vec::new();
    for e in entries {
        let flag = format!("--{}", e.key);
        if given.iter().any(|g| g == &flag || g.starts_with(&format!("{flag}="))) {
            continue;
        }
        if boolean.contains(&e.key) {
            match e.value.as_str() {
                "true" => out.push(flag),
                "false" => {}
                other => {
                    return Err(ConfigError::new(format!("{} takes true or false, got `{other}`", describe(e))));
                }
            }
        } else {
            out.push(format!("{flag}={}", e.value));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let text = "# run\n[grid]\nn = 512\nhalf_width = 8\n\n[data]\ndata = \"falpha:0.5\"\n";
        let e = parse(text).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e[1].key, "half-width");
        assert_eq!(e[2].value, "falpha:0.5");
        assert_eq!(e[2].section.as_deref(), Some("data"));
    }

    #[test]
    fn rejects_bad_files() {
        let err = parse("[grid\nn = 1\n").unwrap_err();
        assert!(err.position.is_some(), "{err}");
        let err = parse("[bogus]\n").unwrap_err();
        assert!(err.message.contains("unknown section"));
        let err = parse("n = 1\nn = 2\n").unwrap_err();
        assert!(err.message.contains("duplicate"));
        let e = parse("[norm]\n  colour = red\n").unwrap();
        let err = validate(&e, &["p".into()]).unwrap_err();
        assert_eq!(err.to_string(), "unknown key `colour` in [norm]");
    }

    #[test]
    fn flags_override_file() {
        let e = parse("p = 2\nq = 4\nsuite = true\n").unwrap();
        let flags = to_flags(&e, &["--p".into()], &["suite".into()]).unwrap();
        assert_eq!(flags, vec!["--q=4".to_string(), "--suite".to_string()]);
    }
}
