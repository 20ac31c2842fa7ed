use super::experiment::{Condition, Experiment, MeasurementSpec};
use super::SuiteError;
use crate::profile::SurprisalProfile;

/// Word range `[start, end)` of one region. Empty regions have `start == end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSpan {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// One item realized under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSentence {
    /// Index into `Experiment::items`.
    pub item: usize,
    pub condition: Condition,
    pub words: Vec<String>,
    pub spans: Vec<RegionSpan>,
}

impl ConditionSentence {
    pub fn span(&self, label: &str) -> Option<&RegionSpan> {
        self.spans.iter().find(|s| s.label == label)
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

/// All condition sentences, ordered by item (file order) then condition
/// (lexicographic by level index).
pub fn expand(experiment: &Experiment) -> Vec<ConditionSentence> {
    let conditions = experiment.conditions();
    let mut out = Vec::with_capacity(experiment.items.len() * conditions.len());
    for (i, item) in experiment.items.iter().enumerate() {
        for cond in &conditions {
            let mut words = Vec::new();
            let mut spans = Vec::with_capacity(item.regions.len());
            for r in &item.regions {
                let start = words.len();
                let text = r.resolve(cond).expect("validated at parse time");
                words.extend(text.split_whitespace().map(String::from));
                spans.push(RegionSpan { label: r.label.clone(), start, end: words.len() });
            }
            out.push(ConditionSentence { item: i, condition: cond.clone(), words, spans });
        }
    }
    out
}

/// Bits over the measurement's regions: word surprisals summed in sentence
/// order, plus the terminal surprisal when the measurement includes it.
pub fn measure(
    experiment: &Experiment,
    sentence: &ConditionSentence,
    profile: &SurprisalProfile,
    spec: &MeasurementSpec,
) -> Result<f64, SuiteError> {
    let fail = |message: String| SuiteError::Measure {
        item: experiment.items[sentence.item].id.0.clone(),
        condition: experiment.condition_label(&sentence.condition),
        message,
    };
    if profile.words != sentence.words || profile.bits.len() != sentence.words.len() {
        return Err(fail(format!("profile from {} is not aligned with the sentence", profile.backend)));
    }
    let mut include = vec![false; sentence.words.len()];
    for label in &spec.regions {
        let span = sentence
            .span(label)
            .ok_or_else(|| fail(format!("measurement {:?} names missing region {label:?}", spec.name)))?;
        include[span.start..span.end].iter_mut().for_each(|x| *x = true);
    }
    let mut total = 0.0;
    for (b, _) in profile.bits.iter().zip(&include).filter(|(_, &inc)| inc) {
        total += b;
    }
    if spec.include_eos {
        let eos = profile
            .eos_bits
            .ok_or_else(|| fail(format!("backend {} reported no end-of-sentence surprisal", profile.backend)))?;
        total += eos;
    }
    Ok(total)
}

/// Words in the declared intervener regions of item `item` under `cond`.
pub fn intervener_length(experiment: &Experiment, item: usize, cond: &Condition) -> Result<usize, SuiteError> {
    let regions = experiment.intervener_regions.as_ref().ok_or_else(|| SuiteError::Validation {
        item: None,
        condition: None,
        message: "experiment declares no intervener_regions".into(),
    })?;
    let it = &experiment.items[item];
    let mut n = 0;
    for label in regions {
        let region = it.region(label).ok_or_else(|| SuiteError::Validation {
            item: Some(it.id.0.clone()),
            condition: None,
            message: format!("no intervener region {label:?}"),
        })?;
        let text = region.resolve(cond).map_err(|message| SuiteError::Validation {
            item: Some(it.id.0.clone()),
            condition: Some(experiment.condition_label(cond)),
            message,
        })?;
        n += text.split_whitespace().count();
    }
    Ok(n)
}
