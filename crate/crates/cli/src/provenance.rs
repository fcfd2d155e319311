//! Provenance headers: every CSV the tool writes starts with `# key=value`
//! lines carrying the tool version and the full effective parameter set,
//! so any output can be regenerated from its own header.
//!
//! Execution details that do not influence the numbers (worker count) are
//! deliberately not recorded: outputs are byte-identical across
//! parallelism levels.

use std::fmt::Display;

pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str) -> Self {
        let mut p = Self {
            entries: Vec::new(),
        };
        p.push("tool", "rqa");
        p.push("version", env!("CARGO_PKG_VERSION"));
        p.push("command", command);
        p
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_opt(&mut self, key: &str, value: Option<impl Display>) -> &mut Self {
        if let Some(v) = value {
            self.push(key, v);
        }
        self
    }

    /// Header block, one `# key=value` line per entry.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str("# ");
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}
