use super::{ece, f1_and_accuracy, outcome, predictive_entropy, Bin, EceMode, MetricsError, Outcome, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub id: String,
    pub probs: [f64; 2],
    pub entropy: f64,
    pub label: u8,
    pub pred: u8,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub n: usize,
    pub accuracy: f64,
    pub f1: [f64; 2],
    pub weighted_f1: f64,
    pub mean_entropy: f64,
    pub ece: f64,
}

/// Per-sample predictions of one model on one split plus aggregates and
/// the calibration bin table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub meta: Vec<(String, String)>,
    pub rows: Vec<SampleRow>,
    pub aggregates: Aggregates,
    pub bins: Vec<Bin>,
    pub ece_mode: EceMode,
}

const HEADER: [&str; 7] = ["sample_id", "p0", "p1", "entropy", "label", "pred", "outcome"];

fn f(v: f64) -> String {
    format!("{v:?}")
}

impl EvalReport {
    pub fn from_predictions(ids: Vec<String>, mean_probs: &[[f64; 2]], labels: &[u8], bins: usize, mode: EceMode) -> Result<Self> {
        if ids.len() != mean_probs.len() {
            return Err(MetricsError::LengthMismatch(ids.len(), mean_probs.len()));
        }
        let (ece_value, bin_table) = ece(mean_probs, labels, bins, mode)?;
        let mut rows = Vec::with_capacity(ids.len());
        for ((id, p), &label) in ids.into_iter().zip(mean_probs).zip(labels) {
            let pred = u8::from(p[1] > p[0]);
            rows.push(SampleRow { id, probs: *p, entropy: predictive_entropy(p)?, label, pred, outcome: outcome(label, pred) });
        }
        let preds: Vec<u8> = rows.iter().map(|r| r.pred).collect();
        let scores = f1_and_accuracy(&preds, labels)?;
        let aggregates = Aggregates {
            n: rows.len(),
            accuracy: scores.accuracy,
            f1: scores.f1,
            weighted_f1: scores.weighted_f1,
            mean_entropy: rows.iter().map(|r| r.entropy).sum::<f64>() / rows.len() as f64,
            ece: ece_value,
        };
        Ok(Self { meta: Vec::new(), rows, aggregates, bins: bin_table, ece_mode: mode })
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let mut put = |rec: &[String]| w.write_record(rec).expect("writing to memory");
        put(&HEADER.map(String::from));
        for r in &self.rows {
            put(&[
                r.id.clone(),
                f(r.probs[0]),
                f(r.probs[1]),
                f(r.entropy),
                r.label.to_string(),
                r.pred.to_string(),
                r.outcome.as_str().into(),
            ]);
        }
        for (k, v) in &self.meta {
            put(&["#meta".into(), k.clone(), v.clone()]);
        }
        let a = &self.aggregates;
        let mode = match self.ece_mode {
            EceMode::Confidence => "confidence",
            EceMode::PositiveClass => "positive_class",
        };
        for (k, v) in [
            ("n", a.n.to_string()),
            ("accuracy", f(a.accuracy)),
            ("f1_cl0", f(a.f1[0])),
            ("f1_cl1", f(a.f1[1])),
            ("f1_weighted", f(a.weighted_f1)),
            ("mean_entropy", f(a.mean_entropy)),
            ("ece", f(a.ece)),
            ("ece_bins", self.bins.len().to_string()),
            ("ece_mode", mode.into()),
        ] {
            put(&["#agg".into(), k.into(), v]);
        }
        for (i, b) in self.bins.iter().enumerate() {
            put(&["#bin".into(), i.to_string(), b.count.to_string(), f(b.mean_score), f(b.frequency)]);
        }
        String::from_utf8(w.into_inner().expect("flushing memory")).expect("csv output is utf-8")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let bad = |m: String| MetricsError::MalformedReport(m);
        let mut rd = csv::ReaderBuilder::new().flexible(true).has_headers(false).from_reader(text.as_bytes());
        let mut records = rd.records();
        let header = records.next().ok_or_else(|| bad("empty file".into()))?.map_err(|e| bad(e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != HEADER {
            return Err(bad("unexpected header".into()));
        }
        let mut rows = Vec::new();
        let mut meta = Vec::new();
        let mut agg = std::collections::HashMap::new();
        let mut bins = Vec::new();
        for (line, rec) in records.enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("record {}: too few fields", line + 2)));
            let num = |i: usize| -> Result<f64> {
                field(i)?.parse().map_err(|_| bad(format!("record {}: bad number `{}`", line + 2, rec.get(i).unwrap_or(""))))
            };
            match field(0)? {
                "#meta" => meta.push((field(1)?.to_string(), field(2)?.to_string())),
                "#agg" => {
                    agg.insert(field(1)?.to_string(), field(2)?.to_string());
                }
                "#bin" => bins.push(Bin { count: num(2)? as usize, mean_score: num(3)?, frequency: num(4)? }),
                id => {
                    let label = num(4)? as u8;
                    let pred = num(5)? as u8;
                    let outcome = Outcome::parse(field(6)?).ok_or_else(|| bad(format!("record {}: bad outcome", line + 2)))?;
                    rows.push(SampleRow { id: id.to_string(), probs: [num(1)?, num(2)?], entropy: num(3)?, label, pred, outcome });
                }
            }
        }
        let get = |k: &str| -> Result<f64> {
            agg.get(k)
                .ok_or_else(|| bad(format!("missing aggregate `{k}`")))?
                .parse()
                .map_err(|_| bad(format!("bad aggregate `{k}`")))
        };
        let aggregates = Aggregates {
            n: get("n")? as usize,
            accuracy: get("accuracy")?,
            f1: [get("f1_cl0")?, get("f1_cl1")?],
            weighted_f1: get("f1_weighted")?,
            mean_entropy: get("mean_entropy")?,
            ece: get("ece")?,
        };
        if aggregates.n != rows.len() {
            return Err(bad(format!("aggregate n = {} but {} sample rows", aggregates.n, rows.len())));
        }
        let ece_mode = match agg.get("ece_mode").map(String::as_str) {
            Some("positive_class") => EceMode::PositiveClass,
            _ => EceMode::Confidence,
        };
        Ok(Self { meta, rows, aggregates, bins, ece_mode })
    }
}

/// Per-sample entropies grouped by confusion outcome.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeEntropies {
    pub tp: Vec<f64>,
    pub tn: Vec<f64>,
    pub fp: Vec<f64>,
    pub fn_: Vec<f64>,
}

impl OutcomeEntropies {
    pub fn group(&self, o: Outcome) -> &[f64] {
        match o {
            Outcome::Tp => &self.tp,
            Outcome::Tn => &self.tn,
            Outcome::Fp => &self.fp,
            Outcome::Fn => &self.fn_,
        }
    }

    /// Mean of a group; `None` when the group is empty.
    pub fn mean(&self, o: Outcome) -> Option<f64> {
        let g = self.group(o);
        (!g.is_empty()).then(|| g.iter().sum::<f64>() / g.len() as f64)
    }

    pub fn correct(&self) -> Vec<f64> {
        self.tp.iter().chain(&self.tn).copied().collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.fp.iter().chain(&self.fn_).copied().collect()
    }
}

pub fn entropy_by_outcome(report: &EvalReport) -> OutcomeEntropies {
    let mut g = OutcomeEntropies::default();
    for r in &report.rows {
        match r.outcome {
            Outcome::Tp => g.tp.push(r.entropy),
            Outcome::Tn => g.tn.push(r.entropy),
            Outcome::Fp => g.fp.push(r.entropy),
            Outcome::Fn => g.fn_.push(r.entropy),
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EvalReport {
        let probs = [[0.1, 0.9], [0.8, 0.2], [0.3, 0.7], [0.6, 0.4]];
        let ids = (0..4).map(|i| format!("log,{i}")).collect();
        EvalReport::from_predictions(ids, &probs, &[1, 0, 0, 1], 10, EceMode::Confidence)
            .unwrap()
            .with_meta("uq", "mc_dropout")
    }

    #[test]
    fn one_of_each_outcome() {
        let g = entropy_by_outcome(&sample());
        for o in Outcome::ALL {
            assert_eq!(g.group(o).len(), 1);
        }
        assert_eq!(g.errors().len(), 2);
    }

    #[test]
    fn csv_roundtrip() {
        let r = sample();
        let text = r.to_csv();
        assert!(text.starts_with("sample_id,p0,p1,entropy,label,pred,outcome\n"));
        assert!(text.contains("#agg,f1_weighted,"));
        assert_eq!(EvalReport::parse_csv(&text).unwrap(), r);
        let no_footer: String = text.lines().filter(|l| !l.starts_with("#agg")).map(|l| format!("{l}\n")).collect();
        assert!(matches!(EvalReport::parse_csv(&no_footer), Err(MetricsError::MalformedReport(_))));
    }
}
