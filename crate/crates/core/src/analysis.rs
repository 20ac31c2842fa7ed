//! Runs an experiment's analysis requests on scored condition sentences.

use std::collections::HashMap;

use thiserror::Error;

use crate::profile::SurprisalProfile;
use crate::stats::{
    island_contrast, length_slope, licensing_fit, within_item_ci, InteractionRecord, IslandContrast, MixedFit,
    StatsError, WithinItemCIs,
};
use crate::suite::{
    expand, intervener_length, measure, AnalysisKind, AnalysisRequest, Condition, ConditionSentence, Experiment,
    MeasurementSpec, SuiteError,
};

/// Condition order used for per-condition tables: a, b, c, d.
pub const CORE_LABELS: [&str; 4] = ["that,nogap", "wh,nogap", "that,gap", "wh,gap"];

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown analysis {0:?}")]
    UnknownAnalysis(String),
    #[error("no profile for item {item}, condition {condition}")]
    MissingProfile { item: String, condition: String },
    #[error("{context}: {source}")]
    Stats { context: String, source: StatsError },
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("analysis {0:?} selects no design cells")]
    Empty(String),
}

/// Scored sentences of one experiment, indexed by (item, condition).
pub struct ScoredExperiment<'a> {
    pub experiment: &'a Experiment,
    pub sentences: Vec<ConditionSentence>,
    conditions: Vec<Condition>,
    profiles: HashMap<(usize, Condition), SurprisalProfile>,
}

impl<'a> ScoredExperiment<'a> {
    /// `profiles` must be in the order of `expand(experiment)`.
    pub fn new(experiment: &'a Experiment, profiles: Vec<SurprisalProfile>) -> Result<Self, AnalysisError> {
        let sentences = expand(experiment);
        if profiles.len() != sentences.len() {
            let s = sentences.get(profiles.len()).or(sentences.last()).expect("experiments have items");
            return Err(AnalysisError::MissingProfile {
                item: experiment.items[s.item].id.0.clone(),
                condition: experiment.condition_label(&s.condition),
            });
        }
        let profiles = sentences.iter().zip(profiles).map(|(s, p)| ((s.item, s.condition.clone()), p)).collect();
        Ok(ScoredExperiment { experiment, sentences, conditions: experiment.conditions(), profiles })
    }

    fn sentence(&self, item: usize, cond: &Condition) -> &ConditionSentence {
        let k = self.conditions.binary_search(cond).expect("valid condition");
        &self.sentences[item * self.conditions.len() + k]
    }

    pub fn profile(&self, item: usize, cond: &Condition) -> Result<&SurprisalProfile, AnalysisError> {
        self.profiles.get(&(item, cond.clone())).ok_or_else(|| AnalysisError::MissingProfile {
            item: self.experiment.items[item].id.0.clone(),
            condition: self.experiment.condition_label(cond),
        })
    }

    pub fn measure(&self, item: usize, cond: &Condition, spec: &MeasurementSpec) -> Result<f64, AnalysisError> {
        Ok(measure(self.experiment, self.sentence(item, cond), self.profile(item, cond)?, spec)?)
    }

    fn record(
        &self,
        item: usize,
        base: &Condition,
        spec: &MeasurementSpec,
        design: &[usize],
    ) -> Result<InteractionRecord, AnalysisError> {
        let e = self.experiment;
        let cells = e.core_cells(base);
        let mut s = [0.0; 4];
        for (k, c) in cells.iter().enumerate() {
            s[k] = self.measure(item, c, spec)?;
        }
        let levels =
            design.iter().map(|&f| (e.factors[f].name.clone(), e.factors[f].levels[base.0[f]].clone())).collect();
        InteractionRecord::new(e.items[item].id.0.clone(), levels, spec.name.clone(), s)
            .map_err(|source| AnalysisError::Stats { context: format!("item {}", e.items[item].id), source })
    }
}

/// Results for one setting of the design factors not consumed by the analysis.
#[derive(Debug, Clone)]
pub struct InteractionCell {
    pub design: Vec<(String, String)>,
    pub records: Vec<InteractionRecord>,
    pub fit: MixedFit,
    /// Conditions in [`CORE_LABELS`] order; contrasts `wh_nogap`, `wh_gap`, `interaction`.
    pub cis: WithinItemCIs,
    /// Mean per-item interaction of each region, in region order.
    pub regions: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct SlopePoint {
    pub item: String,
    pub level: String,
    pub length: usize,
    pub interaction: f64,
}

#[derive(Debug, Clone)]
pub struct SlopeCell {
    pub design: Vec<(String, String)>,
    pub points: Vec<SlopePoint>,
    pub fit: MixedFit,
}

#[derive(Debug, Clone)]
pub struct ContrastCell {
    pub design: Vec<(String, String)>,
    /// Records per level of the contrast factor, in level order.
    pub groups: Vec<(String, Vec<InteractionRecord>)>,
    pub contrast: IslandContrast,
}

#[derive(Debug, Clone)]
pub enum AnalysisOutput {
    Interaction(Vec<InteractionCell>),
    LengthSlope(Vec<SlopeCell>),
    Contrast(Vec<ContrastCell>),
}

pub fn design_label(design: &[(String, String)]) -> String {
    if design.is_empty() {
        return "-".into();
    }
    design.iter().map(|(f, l)| format!("{f}={l}")).collect::<Vec<_>>().join(",")
}

/// Base conditions (wh and gap at level 0, `across` at level 0) for every
/// selected combination of the remaining design factors.
fn design_cells(e: &Experiment, request: &AnalysisRequest, across: Option<usize>) -> (Vec<usize>, Vec<Condition>) {
    let design: Vec<usize> = e.design_factors().into_iter().filter(|&f| Some(f) != across).collect();
    let mut cells = Vec::new();
    for c in e.conditions() {
        let is_base = c.0[e.wh_factor()] == 0 && c.0[e.gap_factor()] == 0 && across.is_none_or(|f| c.0[f] == 0);
        if is_base && request.selects(e, &c) {
            cells.push(c);
        }
    }
    (design, cells)
}

pub fn run_analysis(scored: &ScoredExperiment<'_>, name: &str) -> Result<AnalysisOutput, AnalysisError> {
    let e = scored.experiment;
    let request = e.analysis(name).ok_or_else(|| AnalysisError::UnknownAnalysis(name.to_string()))?;
    let spec = e.measurement(request.kind.measurement()).expect("validated at parse time");
    let across = request.kind.across().map(|f| e.factor_index(f).expect("validated at parse time"));
    let (design, cells) = design_cells(e, request, across);
    if cells.is_empty() {
        return Err(AnalysisError::Empty(name.to_string()));
    }
    let stats = |context: String| move |source| AnalysisError::Stats { context, source };
    let labels = |c: &Condition| -> Vec<(String, String)> {
        design.iter().map(|&f| (e.factors[f].name.clone(), e.factors[f].levels[c.0[f]].clone())).collect()
    };

    match &request.kind {
        AnalysisKind::Interaction { .. } => {
            let mut out = Vec::with_capacity(cells.len());
            for base in &cells {
                let records =
                    (0..e.items.len()).map(|i| scored.record(i, base, spec, &design)).collect::<Result<Vec<_>, _>>()?;
                let where_ = design_label(&labels(base));
                let fit = licensing_fit(&records).map_err(stats(format!("{name}, {where_}")))?;
                let matrix: Vec<Vec<f64>> = records.iter().map(|r| r.surprisals().to_vec()).collect();
                let names: Vec<String> = CORE_LABELS.iter().map(|s| s.to_string()).collect();
                let contrasts = vec![
                    ("wh_nogap".to_string(), vec![-1.0, 1.0, 0.0, 0.0]),
                    ("wh_gap".to_string(), vec![0.0, 0.0, -1.0, 1.0]),
                    ("interaction".to_string(), vec![-1.0, 1.0, 1.0, -1.0]),
                ];
                let cis = within_item_ci(&matrix, &names, &contrasts).map_err(stats(format!("{name}, {where_}")))?;
                let regions = region_interactions(scored, base)?;
                out.push(InteractionCell { design: labels(base), records, fit, cis, regions });
            }
            Ok(AnalysisOutput::Interaction(out))
        }
        AnalysisKind::LengthSlope { .. } => {
            let f = across.expect("slope has a factor");
            let mut out = Vec::with_capacity(cells.len());
            for base in &cells {
                let mut points = Vec::new();
                for (l, level) in e.factors[f].levels.iter().enumerate() {
                    let mut at = base.clone();
                    at.0[f] = l;
                    for i in 0..e.items.len() {
                        let rec = scored.record(i, &at, spec, &design)?;
                        let lens = e
                            .core_cells(&at)
                            .iter()
                            .map(|c| intervener_length(e, i, c))
                            .collect::<Result<Vec<_>, _>>()?;
                        if lens.iter().any(|&n| n != lens[0]) {
                            return Err(SuiteError::Validation {
                                item: Some(e.items[i].id.0.clone()),
                                condition: Some(e.condition_label(&at)),
                                message: format!("intervener length differs across the 2x2 cells: {lens:?}"),
                            }
                            .into());
                        }
                        points.push(SlopePoint {
                            item: rec.item,
                            level: level.clone(),
                            length: lens[0],
                            interaction: rec.interaction,
                        });
                    }
                }
                let y: Vec<f64> = points.iter().map(|p| p.interaction).collect();
                let x: Vec<f64> = points.iter().map(|p| p.length as f64).collect();
                let ids: Vec<String> = points.iter().map(|p| p.item.clone()).collect();
                let where_ = design_label(&labels(base));
                let fit = length_slope(&y, &x, &ids).map_err(stats(format!("{name}, {where_}")))?;
                out.push(SlopeCell { design: labels(base), points, fit });
            }
            Ok(AnalysisOutput::LengthSlope(out))
        }
        AnalysisKind::Contrast { baseline, .. } => {
            let f = across.expect("contrast has a factor");
            let mut out = Vec::with_capacity(cells.len());
            for base in &cells {
                let mut groups = Vec::new();
                for (l, level) in e.factors[f].levels.iter().enumerate() {
                    let mut at = base.clone();
                    at.0[f] = l;
                    let recs = (0..e.items.len())
                        .map(|i| scored.record(i, &at, spec, &design))
                        .collect::<Result<Vec<_>, _>>()?;
                    groups.push((level.clone(), recs));
                }
                let where_ = design_label(&labels(base));
                let contrast = island_contrast(&groups, baseline).map_err(stats(format!("{name}, {where_}")))?;
                out.push(ContrastCell { design: labels(base), groups, contrast });
            }
            Ok(AnalysisOutput::Contrast(out))
        }
    }
}

/// Mean interaction per region label (words only, no terminal event).
fn region_interactions(scored: &ScoredExperiment<'_>, base: &Condition) -> Result<Vec<(String, f64)>, AnalysisError> {
    let e = scored.experiment;
    let labels: Vec<String> = e.items[0].regions.iter().map(|r| r.label.clone()).collect();
    let mut out = Vec::with_capacity(labels.len());
    for label in labels {
        if e.items.iter().any(|it| it.region(&label).is_none()) {
            continue;
        }
        let spec = MeasurementSpec { name: label.clone(), regions: vec![label.clone()], include_eos: false };
        let mut sum = 0.0;
        for i in 0..e.items.len() {
            sum += scored.record(i, base, &spec, &[])?.interaction;
        }
        out.push((label, sum / e.items.len() as f64));
    }
    Ok(out)
}
