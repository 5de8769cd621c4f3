//! Run reports: every runtime-verified bound is recorded with whether its
//! hypotheses held for this run.

use serde::{Deserialize, Serialize};


#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    /// False when the bound's hypotheses involve constants that were scaled
    /// away from the paper values; such failures are informational.
    pub binding: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, holds: bool, binding: bool) -> Check {
        Check { name: name.into(), holds, binding }
    }

    pub fn violated(&self) -> bool {
        self.binding && !self.holds
    }
}

/// Collapses repeated checks with the same name: holds iff all hold, binding
/// if any binding instance failed (or all were binding).
pub fn summarize(checks: &[Check]) -> Vec<Check> {
    let mut out: Vec<Check> = Vec::new();
    for c in checks {
        match out.iter_mut().find(|o| o.name == c.name) {
            Some(o) => {
                if c.violated() {
                    o.holds = false;
                    o.binding = true;
                } else if !o.violated() {
                    o.holds &= c.holds;
                    o.binding &= c.binding;
                }
            }
            None => out.push(c.clone()),
        }
    }
    out
}

pub fn any_violation(checks: &[Check]) -> bool {
    checks.iter().any(Check::violated)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_keeps_binding_failures() {
        let cs = vec![
            Check::new("a", true, true),
            Check::new("a", false, false),
            Check::new("b", true, true),
            Check::new("b", false, true),
            Check::new("b", true, false),
        ];
        let s = summarize(&cs);
        assert_eq!(s[0], Check::new("a", false, false));
        assert_eq!(s[1], Check::new("b", false, true));
        assert!(any_violation(&s));
    }
}
