use std::fmt;

/// Single-line `key=value` record. Keys keep insertion order so output is
/// stable; `elapsed_s` always goes last.
#[derive(Debug, Default)]
pub struct Summary {
    fields: Vec<(&'static str, String)>,
}

impl Summary {
    pub fn new(command: &str) -> Self {
        let mut s = Summary::default();
        s.push("command", command);
        s
    }

    pub fn push(&mut self, key: &'static str, value: impl fmt::Display) -> &mut Self {
        self.fields.push((key, value.to_string()));
        self
    }

    /// Shortest round-trip form, switching to exponent notation for tiny
    /// or huge magnitudes.
    pub fn push_f64(&mut self, key: &'static str, value: f64) -> &mut Self {
        let a = value.abs();
        if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
            self.push(key, format!("{value:e}"))
        } else {
            self.push(key, value)
        }
    }

    pub fn push_opt(&mut self, key: &'static str, value: Option<impl fmt::Display>) -> &mut Self {
        if let Some(v) = value {
            self.push(key, v);
        }
        self
    }
}

fn needs_quotes(v: &str) -> bool {
    v.is_empty() || v.chars().any(|c| c.is_whitespace() || c == '"' || c == '=')
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if needs_quotes(v) {
                write!(f, "{k}={v:?}")?;
            } else {
                write!(f, "{k}={v}")?;
            }
        }
        Ok(())
    }
}
