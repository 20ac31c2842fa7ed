use super::StatsError;

/// `(S_b - S_a) - (S_d - S_c)` in bits, where a = (no wh, no gap),
/// b = (wh, no gap), c = (no wh, gap), d = (wh, gap).
///
/// Positive values mean the licensor makes the gap less surprising.
pub fn licensing_interaction(s_a: f64, s_b: f64, s_c: f64, s_d: f64) -> Result<f64, StatsError> {
    for (name, v) in [("S_a", s_a), ("S_b", s_b), ("S_c", s_c), ("S_d", s_d)] {
        if !v.is_finite() {
            return Err(StatsError::NonFinite(format!("{name} = {v}")));
        }
    }
    Ok((s_b - s_a) - (s_d - s_c))
}

/// The four core surprisals of one item under one measurement and one
/// setting of the design factors.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionRecord {
    pub item: String,
    /// `(factor, level)` for each design factor.
    pub design: Vec<(String, String)>,
    pub measurement: String,
    pub s_a: f64,
    pub s_b: f64,
    pub s_c: f64,
    pub s_d: f64,
    pub interaction: f64,
}

impl InteractionRecord {
    pub fn new(
        item: impl Into<String>,
        design: Vec<(String, String)>,
        measurement: impl Into<String>,
        [s_a, s_b, s_c, s_d]: [f64; 4],
    ) -> Result<Self, StatsError> {
        let interaction = licensing_interaction(s_a, s_b, s_c, s_d)?;
        Ok(InteractionRecord {
            item: item.into(),
            design,
            measurement: measurement.into(),
            s_a,
            s_b,
            s_c,
            s_d,
            interaction,
        })
    }

    pub fn surprisals(&self) -> [f64; 4] {
        [self.s_a, self.s_b, self.s_c, self.s_d]
    }

    /// `position=obj,length=long`, or `-` without design factors.
    pub fn design_label(&self) -> String {
        if self.design.is_empty() {
            return "-".into();
        }
        self.design.iter().map(|(f, l)| format!("{f}={l}")).collect::<Vec<_>>().join(",")
    }
}

/// Fraction of records with a strictly positive interaction. `None` for an
/// empty set.
pub fn positive_share(records: &[InteractionRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let pos = records.iter().filter(|r| r.interaction > 0.0).count();
    Some(pos as f64 / records.len() as f64)
}
