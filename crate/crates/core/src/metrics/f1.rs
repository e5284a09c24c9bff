use super::{MetricsError, Result};

/// Confusion outcome with class 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Tp,
    Tn,
    Fp,
    Fn,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Self::Tp, Self::Tn, Self::Fp, Self::Fn];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tp => "TP",
            Self::Tn => "TN",
            Self::Fp => "FP",
            Self::Fn => "FN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.as_str() == s)
    }

    pub fn is_correct(self) -> bool {
        matches!(self, Self::Tp | Self::Tn)
    }
}

pub fn outcome(label: u8, pred: u8) -> Outcome {
    match (label, pred) {
        (1, 1) => Outcome::Tp,
        (0, 0) => Outcome::Tn,
        (0, _) => Outcome::Fp,
        _ => Outcome::Fn,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub f1: [f64; 2],
    pub weighted_f1: f64,
    pub accuracy: f64,
    /// Classes with neither predictions nor labels; their F1 is reported as 0.
    pub undefined: [bool; 2],
}

/// One-vs-rest F1 per class, support-weighted F1, and accuracy.
pub fn f1_and_accuracy(preds: &[u8], labels: &[u8]) -> Result<ClassScores> {
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if preds.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(preds.len(), labels.len()));
    }
    let n = preds.len() as f64;
    let mut f1 = [0.0; 2];
    let mut undefined = [false; 2];
    let mut weighted = 0.0;
    for c in 0..2u8 {
        let tp = preds.iter().zip(labels).filter(|&(&p, &y)| p == c && y == c).count() as f64;
        let predicted = preds.iter().filter(|&&p| p == c).count() as f64;
        let support = labels.iter().filter(|&&y| y == c).count() as f64;
        let i = c as usize;
        if predicted + support == 0.0 {
            undefined[i] = true;
        } else {
            // Equivalent to the harmonic mean of precision and recall.
            f1[i] = 2.0 * tp / (predicted + support);
        }
        weighted += support / n * f1[i];
    }
    let correct = preds.iter().zip(labels).filter(|(p, y)| p == y).count() as f64;
    Ok(ClassScores { f1, weighted_f1: weighted, accuracy: correct / n, undefined })
}
