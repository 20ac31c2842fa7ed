use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SuiteError;

/// Which part of the design a factor plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorRole {
    /// Presence of a wh-licensor. Level 0 has no licensor, level 1 has one.
    Wh,
    /// Presence of a gap. Level 0 is the filled variant, level 1 the gapped one.
    Gap,
    /// Any other manipulation (position, island type, intervener length, ...).
    Design,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
    pub role: FactorRole,
}

impl Factor {
    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }
}

/// Level index per factor, in factor order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemId(pub String);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A partial condition: the region text applies wherever every listed
/// factor takes the listed level. The empty pattern (`*`) matches everything.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    key: String,
    assignments: Vec<(usize, usize)>,
}

impl Pattern {
    fn matches(&self, cond: &Condition) -> bool {
        self.assignments.iter().all(|&(f, l)| cond.0[f] == l)
    }

    pub fn key(&self) -> &str {
        &self.key
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionContent {
    Text(String),
    ByCondition(Vec<(Pattern, String)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionTemplate {
    pub label: String,
    pub content: RegionContent,
}

impl RegionTemplate {
    /// Text of this region under `cond`: the most specific matching pattern
    /// wins; equally specific matches with different text are ambiguous.
    pub fn resolve(&self, cond: &Condition) -> Result<&str, String> {
        match &self.content {
            RegionContent::Text(t) => Ok(t),
            RegionContent::ByCondition(cases) => {
                let mut best: Option<(usize, &Pattern, &str)> = None;
                for (pat, text) in cases.iter().filter(|(p, _)| p.matches(cond)) {
                    let spec = pat.assignments.len();
                    match best {
                        Some((s, other, other_text)) if s == spec && other_text != text => {
                            return Err(format!(
                                "region {:?}: patterns {:?} and {:?} both apply",
                                self.label, other.key, pat.key
                            ))
                        }
                        Some((s, ..)) if s >= spec => {}
                        _ => best = Some((spec, pat, text)),
                    }
                }
                best.map(|(_, _, t)| t).ok_or_else(|| format!("region {:?} has no text for this condition", self.label))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: ItemId,
    pub regions: Vec<RegionTemplate>,
}

impl Item {
    pub fn region(&self, label: &str) -> Option<&RegionTemplate> {
        self.regions.iter().find(|r| r.label == label)
    }
}

/// A named set of regions whose word surprisals are summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSpec {
    pub name: String,
    pub regions: Vec<String>,
    /// Also add the terminal end-of-sentence surprisal.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub include_eos: bool,
}

/// An analysis the experiment asks for, run by name from the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRequest {
    pub name: String,
    /// Restricts the analysis to these levels of the named design factors.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub only: BTreeMap<String, Vec<String>>,
    #[serde(flatten)]
    pub kind: AnalysisKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisKind {
    /// The 2x2 licensing interaction within every design cell.
    Interaction { measurement: String },
    /// Interaction regressed on intervener length across the levels of `factor`.
    LengthSlope { measurement: String, factor: String },
    /// Interaction reduction for each level of `factor` relative to `baseline`.
    Contrast { measurement: String, factor: String, baseline: String },
}

impl AnalysisRequest {
    /// Whether `cond` passes the `only` filter.
    pub fn selects(&self, experiment: &Experiment, cond: &Condition) -> bool {
        self.only.iter().all(|(factor, levels)| match experiment.factor_index(factor) {
            Some(f) => levels.iter().any(|l| experiment.factors[f].levels[cond.0[f]] == *l),
            None => false,
        })
    }
}

impl AnalysisKind {
    pub fn measurement(&self) -> &str {
        match self {
            AnalysisKind::Interaction { measurement }
            | AnalysisKind::LengthSlope { measurement, .. }
            | AnalysisKind::Contrast { measurement, .. } => measurement,
        }
    }

    /// The design factor the analysis runs across, if any.
    pub fn across(&self) -> Option<&str> {
        match self {
            AnalysisKind::Interaction { .. } => None,
            AnalysisKind::LengthSlope { factor, .. } | AnalysisKind::Contrast { factor, .. } => Some(factor),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub factors: Vec<Factor>,
    pub gap_region: Option<String>,
    pub measurements: Vec<MeasurementSpec>,
    pub intervener_regions: Option<Vec<String>>,
    pub items: Vec<Item>,
    pub analyses: Vec<AnalysisRequest>,
    wh: usize,
    gap: usize,
}

// ---- file schema -------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    name: String,
    factors: Vec<FactorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gap_region: Option<String>,
    #[serde(default)]
    measurements: Vec<MeasurementSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intervener_regions: Option<Vec<String>>,
    items: Vec<ItemFile>,
    #[serde(default)]
    analyses: Vec<AnalysisRequest>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorFile {
    name: String,
    levels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role: Option<FactorRole>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum IdFile {
    Number(u64),
    Text(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemFile {
    id: IdFile,
    regions: Vec<RegionFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionFile {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    by_condition: Option<BTreeMap<String, String>>,
}

fn invalid(item: Option<&ItemId>, condition: Option<String>, message: impl Into<String>) -> SuiteError {
    SuiteError::Validation { item: item.map(|i| i.0.clone()), condition, message: message.into() }
}

impl Experiment {
    pub fn from_json(text: &str) -> Result<Self, SuiteError> {
        let file: ExperimentFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        let file = ExperimentFile {
            name: self.name.clone(),
            factors: self
                .factors
                .iter()
                .map(|f| FactorFile { name: f.name.clone(), levels: f.levels.clone(), role: Some(f.role) })
                .collect(),
            gap_region: self.gap_region.clone(),
            measurements: self.measurements.clone(),
            intervener_regions: self.intervener_regions.clone(),
            items: self
                .items
                .iter()
                .map(|it| ItemFile {
                    id: IdFile::Text(it.id.0.clone()),
                    regions: it
                        .regions
                        .iter()
                        .map(|r| match &r.content {
                            RegionContent::Text(t) => {
                                RegionFile { label: r.label.clone(), text: Some(t.clone()), by_condition: None }
                            }
                            RegionContent::ByCondition(cases) => RegionFile {
                                label: r.label.clone(),
                                text: None,
                                by_condition: Some(cases.iter().map(|(p, t)| (p.key.clone(), t.clone())).collect()),
                            },
                        })
                        .collect(),
                })
                .collect(),
            analyses: self.analyses.clone(),
        };
        serde_json::to_string_pretty(&file).expect("experiment serializes")
    }

    fn from_file(file: ExperimentFile) -> Result<Self, SuiteError> {
        // factors
        let mut factors = Vec::with_capacity(file.factors.len());
        let mut names = HashSet::new();
        for f in file.factors {
            if !names.insert(f.name.clone()) {
                return Err(invalid(None, None, format!("factor {:?} declared twice", f.name)));
            }
            let role = f.role.unwrap_or(match f.name.as_str() {
                "wh" => FactorRole::Wh,
                "gap" => FactorRole::Gap,
                _ => FactorRole::Design,
            });
            let distinct: HashSet<&String> = f.levels.iter().collect();
            if f.levels.is_empty() || distinct.len() != f.levels.len() {
                return Err(invalid(None, None, format!("factor {:?} needs distinct, non-empty levels", f.name)));
            }
            if role != FactorRole::Design && f.levels.len() != 2 {
                return Err(invalid(None, None, format!("factor {:?} must have exactly 2 levels", f.name)));
            }
            factors.push(Factor { name: f.name, levels: f.levels, role });
        }
        let find_role = |role: FactorRole, what: &str| -> Result<usize, SuiteError> {
            let hits: Vec<usize> = (0..factors.len()).filter(|&i| factors[i].role == role).collect();
            match hits.as_slice() {
                [one] => Ok(*one),
                [] => Err(invalid(None, None, format!("missing the {what} factor"))),
                _ => Err(invalid(None, None, format!("more than one {what} factor"))),
            }
        };
        let wh = find_role(FactorRole::Wh, "wh")?;
        let gap = find_role(FactorRole::Gap, "gap")?;

        // items
        if file.items.is_empty() {
            return Err(invalid(None, None, "experiment has no items"));
        }
        let mut items = Vec::with_capacity(file.items.len());
        let mut ids = HashSet::new();
        for it in file.items {
            let id = ItemId(match it.id {
                IdFile::Number(n) => n.to_string(),
                IdFile::Text(s) => s,
            });
            if !ids.insert(id.clone()) {
                return Err(invalid(Some(&id), None, "duplicate item id"));
            }
            let mut labels = HashSet::new();
            let mut regions = Vec::with_capacity(it.regions.len());
            for r in it.regions {
                if !labels.insert(r.label.clone()) {
                    return Err(invalid(Some(&id), None, format!("duplicate region label {:?}", r.label)));
                }
                let content = match (r.text, r.by_condition) {
                    (Some(t), None) => RegionContent::Text(t),
                    (None, Some(cases)) => {
                        let mut parsed = Vec::with_capacity(cases.len());
                        for (key, text) in cases {
                            let pat = parse_pattern(&key, &factors)
                                .map_err(|m| invalid(Some(&id), None, format!("region {:?}: {m}", r.label)))?;
                            parsed.push((pat, text));
                        }
                        RegionContent::ByCondition(parsed)
                    }
                    _ => {
                        return Err(invalid(
                            Some(&id),
                            None,
                            format!("region {:?} needs exactly one of `text` or `by_condition`", r.label),
                        ))
                    }
                };
                regions.push(RegionTemplate { label: r.label, content });
            }
            items.push(Item { id, regions });
        }

        let mut exp = Experiment {
            name: file.name,
            factors,
            gap_region: file.gap_region,
            measurements: file.measurements,
            intervener_regions: file.intervener_regions,
            items,
            analyses: file.analyses,
            wh,
            gap,
        };
        exp.validate()?;
        Ok(exp)
    }

    fn validate(&mut self) -> Result<(), SuiteError> {
        let conditions = self.conditions();
        for item in &self.items {
            for cond in &conditions {
                let mut n_words = 0;
                for r in &item.regions {
                    let text =
                        r.resolve(cond).map_err(|m| invalid(Some(&item.id), Some(self.condition_label(cond)), m))?;
                    n_words += text.split_whitespace().count();
                }
                if n_words == 0 {
                    return Err(invalid(Some(&item.id), Some(self.condition_label(cond)), "sentence has no words"));
                }
            }
        }

        let require_label = |label: &str, what: &str| -> Result<(), SuiteError> {
            for item in &self.items {
                if item.region(label).is_none() {
                    return Err(invalid(Some(&item.id), None, format!("{what} names unknown region {label:?}")));
                }
            }
            Ok(())
        };
        if let Some(g) = &self.gap_region {
            require_label(g, "gap_region")?;
        }
        if let Some(regions) = &self.intervener_regions {
            for r in regions {
                require_label(r, "intervener_regions")?;
            }
        }
        let mut seen = HashSet::new();
        for m in &self.measurements {
            if !seen.insert(m.name.clone()) {
                return Err(invalid(None, None, format!("measurement {:?} declared twice", m.name)));
            }
            if m.regions.is_empty() && !m.include_eos {
                return Err(invalid(None, None, format!("measurement {:?} covers nothing", m.name)));
            }
            for r in &m.regions {
                require_label(r, &format!("measurement {:?}", m.name))?;
            }
        }

        // default post-gap measurement: the region right after the gap region
        if let Some(gap) = self.gap_region.clone() {
            if !self.measurements.iter().any(|m| m.name == "post_gap") {
                let mut next: Option<String> = None;
                for item in &self.items {
                    let pos = item.regions.iter().position(|r| r.label == gap).expect("checked above");
                    let label = item.regions.get(pos + 1).map(|r| r.label.clone()).ok_or_else(|| {
                        invalid(Some(&item.id), None, "gap region is the last region; declare post_gap explicitly")
                    })?;
                    match &next {
                        None => next = Some(label),
                        Some(l) if *l == label => {}
                        Some(_) => {
                            return Err(invalid(
                                Some(&item.id),
                                None,
                                "the region after the gap differs between items; declare post_gap explicitly",
                            ))
                        }
                    }
                }
                let label = next.expect("at least one item");
                self.measurements.push(MeasurementSpec {
                    name: "post_gap".into(),
                    regions: vec![label],
                    include_eos: false,
                });
            }
        }

        let mut names = HashSet::new();
        for a in &self.analyses {
            if !names.insert(a.name.clone()) {
                return Err(invalid(None, None, format!("analysis {:?} declared twice", a.name)));
            }
            let ctx = |m: String| invalid(None, None, format!("analysis {:?}: {m}", a.name));
            if self.measurement(a.kind.measurement()).is_none() {
                return Err(ctx(format!("unknown measurement {:?}", a.kind.measurement())));
            }
            if let Some(f) = a.kind.across() {
                let factor = self.factor(f).ok_or_else(|| ctx(format!("unknown factor {f:?}")))?;
                if factor.role != FactorRole::Design {
                    return Err(ctx(format!("factor {f:?} is not a design factor")));
                }
                if factor.levels.len() < 2 {
                    return Err(ctx(format!("factor {f:?} needs at least 2 levels")));
                }
            }
            for (f, levels) in &a.only {
                let factor = self.factor(f).ok_or_else(|| ctx(format!("`only` names unknown factor {f:?}")))?;
                if factor.role != FactorRole::Design {
                    return Err(ctx(format!("`only` may filter design factors, not {f:?}")));
                }
                if a.kind.across() == Some(f.as_str()) {
                    return Err(ctx(format!("`only` cannot filter the factor the analysis runs across ({f:?})")));
                }
                if let Some(l) = levels.iter().find(|l| factor.level_index(l).is_none()) {
                    return Err(ctx(format!("{l:?} is not a level of {f:?}")));
                }
            }
            match &a.kind {
                AnalysisKind::Contrast { factor, baseline, .. } => {
                    if self.factor(factor).and_then(|f| f.level_index(baseline)).is_none() {
                        return Err(ctx(format!("baseline {baseline:?} is not a level of {factor:?}")));
                    }
                }
                AnalysisKind::LengthSlope { .. } if self.intervener_regions.is_none() => {
                    return Err(ctx("length slope needs `intervener_regions`".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn wh_factor(&self) -> usize {
        self.wh
    }

    pub fn gap_factor(&self) -> usize {
        self.gap
    }

    pub fn factor(&self, name: &str) -> Option<&Factor> {
        self.factors.iter().find(|f| f.name == name)
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    /// Indices of the design (non wh, non gap) factors.
    pub fn design_factors(&self) -> Vec<usize> {
        (0..self.factors.len()).filter(|&i| self.factors[i].role == FactorRole::Design).collect()
    }

    pub fn measurement(&self, name: &str) -> Option<&MeasurementSpec> {
        self.measurements.iter().find(|m| m.name == name)
    }

    pub fn analysis(&self, name: &str) -> Option<&AnalysisRequest> {
        self.analyses.iter().find(|a| a.name == name)
    }

    /// Every condition in lexicographic order of level indices.
    pub fn conditions(&self) -> Vec<Condition> {
        let mut out = vec![Condition(vec![0; self.factors.len()])];
        for (f, factor) in self.factors.iter().enumerate().rev() {
            out = out
                .into_iter()
                .flat_map(|c| {
                    (0..factor.levels.len()).map(move |l| {
                        let mut c = c.clone();
                        c.0[f] = l;
                        c
                    })
                })
                .collect();
        }
        out.sort();
        out
    }

    pub fn n_conditions(&self) -> usize {
        self.factors.iter().map(|f| f.levels.len()).product()
    }

    /// `wh=what,gap=gap,position=obj`
    pub fn condition_label(&self, cond: &Condition) -> String {
        self.factors
            .iter()
            .zip(&cond.0)
            .map(|(f, &l)| format!("{}={}", f.name, f.levels[l]))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_condition_label(&self, label: &str) -> Option<Condition> {
        let pat = parse_pattern(label, &self.factors).ok()?;
        if pat.assignments.len() != self.factors.len() {
            return None;
        }
        let mut levels = vec![0; self.factors.len()];
        for (f, l) in pat.assignments {
            levels[f] = l;
        }
        Some(Condition(levels))
    }

    /// The four cells of the 2x2 core for fixed design levels, in the order
    /// (no wh, no gap), (wh, no gap), (no wh, gap), (wh, gap).
    pub fn core_cells(&self, base: &Condition) -> [Condition; 4] {
        let with = |wh: usize, gap: usize| {
            let mut c = base.clone();
            c.0[self.wh] = wh;
            c.0[self.gap] = gap;
            c
        };
        [with(0, 0), with(1, 0), with(0, 1), with(1, 1)]
    }
}

fn parse_pattern(key: &str, factors: &[Factor]) -> Result<Pattern, String> {
    let key_trim = key.trim();
    if key_trim == "*" {
        return Ok(Pattern { key: key.to_string(), assignments: Vec::new() });
    }
    let mut assignments = Vec::new();
    for part in key_trim.split(',') {
        let (name, level) =
            part.split_once('=').ok_or_else(|| format!("condition key {key:?} should look like `factor=level,...`"))?;
        let (name, level) = (name.trim(), level.trim());
        let f = factors
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| format!("condition key {key:?} names unknown factor {name:?}"))?;
        let l = factors[f]
            .level_index(level)
            .ok_or_else(|| format!("condition key {key:?}: {level:?} is not a level of {name:?}"))?;
        if assignments.iter().any(|&(g, _)| g == f) {
            return Err(format!("condition key {key:?} sets {name:?} twice"));
        }
        assignments.push((f, l));
    }
    assignments.sort();
    Ok(Pattern { key: key.to_string(), assignments })
}
