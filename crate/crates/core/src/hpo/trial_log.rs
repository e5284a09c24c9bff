use super::bohb::Trial;

pub const TRIAL_COLUMNS: [&str; 8] =
    ["trial_id", "bracket", "rung", "budget_epochs", "status", "val_loss", "val_wF1", "wall_seconds"];

/// Trial-log CSV: fixed columns, then `config_keys` filled by `pairs`.
pub fn render_trial_csv<C>(
    trials: &[Trial<C>],
    config_keys: &[&str],
    pairs: impl Fn(&C) -> Vec<(&'static str, String)>,
) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = TRIAL_COLUMNS.iter().chain(config_keys).copied().collect();
    w.write_record(&header).expect("in-memory write");
    for t in trials {
        let mut row = vec![
            t.id.to_string(),
            t.bracket.to_string(),
            t.rung.to_string(),
            t.budget.to_string(),
            t.status.as_str().to_string(),
            format!("{:?}", t.val_loss),
            format!("{:?}", t.val_score),
            format!("{:.3}", t.wall_seconds),
        ];
        let kv = pairs(&t.config);
        for key in config_keys {
            row.push(kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone()).unwrap_or_default());
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
