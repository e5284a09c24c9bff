use super::EvalReport;

pub const F1_THRESHOLD: f64 = 0.9;
pub const ENTROPY_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Select,
    Reject,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Select => "select",
            Self::Reject => "reject",
        }
    }
}

/// Both class F1 scores at least 0.9 and mean entropy at most 0.1.
pub fn select(f1_cl0: f64, f1_cl1: f64, mean_entropy: f64) -> Decision {
    if f1_cl0 >= F1_THRESHOLD && f1_cl1 >= F1_THRESHOLD && mean_entropy <= ENTROPY_THRESHOLD {
        Decision::Select
    } else {
        Decision::Reject
    }
}

/// Indices of selected and rejected reports, each in input order.
pub fn select_candidates(reports: &[EvalReport]) -> (Vec<usize>, Vec<usize>) {
    (0..reports.len()).partition(|&i| {
        let a = &reports[i].aggregates;
        select(a.f1[0], a.f1[1], a.mean_entropy) == Decision::Select
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate() {
        assert_eq!(select(0.9942, 0.9814, 0.0142), Decision::Select);
        assert_eq!(select(0.95, 0.89, 0.05), Decision::Reject);
        assert_eq!(select(0.95, 0.95, 0.12), Decision::Reject);
        assert_eq!(select(0.9, 0.9, 0.1), Decision::Select);
    }
}
