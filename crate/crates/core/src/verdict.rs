use std::fmt;

/// Outcome of a budgeted, falsification-style check.
///
/// `Pass` means no counterexample was found within the budgets, never a
/// proof. `Inconclusive` is reported when a numerical estimate did not settle
/// and no falsifying witness was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Falsified,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Falsified => "FALSIFIED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }

    /// Combines per-row outcomes: any falsification wins, then any
    /// inconclusive row.
    pub fn combine<I: IntoIterator<Item = Verdict>>(rows: I) -> Verdict {
        rows.into_iter().fold(Verdict::Pass, |acc, v| match (acc, v) {
            (Verdict::Falsified, _) | (_, Verdict::Falsified) => Verdict::Falsified,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
