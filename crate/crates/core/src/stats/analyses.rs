use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::interaction::InteractionRecord;
use super::mixed::{fit_mixed, MixedFit};
use super::StatsError;

/// One row of the long-format 2x2 data: the surprisal of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellObservation {
    pub item: String,
    pub x_wh: f64,
    pub x_gap: f64,
    pub bits: f64,
}

const CORE: [(f64, f64); 4] = [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)];

fn long_format(records: &[InteractionRecord]) -> Vec<CellObservation> {
    records
        .iter()
        .flat_map(|r| {
            r.surprisals().into_iter().zip(CORE).map(|(bits, (x_wh, x_gap))| CellObservation {
                item: r.item.clone(),
                x_wh,
                x_gap,
                bits,
            })
        })
        .collect()
}

/// Long-format response, design matrix, column names and item labels for the
/// sum-coded 2x2 model `1 + wh + gap + wh:gap`.
pub fn interaction_design(records: &[InteractionRecord]) -> (Vec<f64>, DMatrix<f64>, Vec<String>, Vec<String>) {
    let obs = long_format(records);
    let x = DMatrix::from_fn(obs.len(), 4, |i, j| {
        let o = &obs[i];
        match j {
            0 => 1.0,
            1 => o.x_wh,
            2 => o.x_gap,
            _ => -(o.x_wh * o.x_gap),
        }
    });
    let names = ["(Intercept)", "wh", "gap", "wh:gap"].map(String::from).to_vec();
    let y = obs.iter().map(|o| o.bits).collect();
    let items = obs.into_iter().map(|o| o.item).collect();
    (y, x, names, items)
}

fn check_one_per_item(records: &[InteractionRecord]) -> Result<(), StatsError> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(&r.item) {
            return Err(StatsError::Unbalanced(format!("item {} appears more than once", r.item)));
        }
    }
    Ok(())
}

/// Mixed-model fit of the 2x2 core for one design cell (one record per item).
/// The `wh:gap` coefficient is the licensing interaction in bits.
pub fn licensing_fit(records: &[InteractionRecord]) -> Result<MixedFit, StatsError> {
    check_one_per_item(records)?;
    let (y, x, names, items) = interaction_design(records);
    fit_mixed(&y, &x, &names, &items)
}

/// Regresses interactions on intervener length with item intercepts. The
/// `length` coefficient is the slope in bits per word.
pub fn length_slope(interactions: &[f64], lengths: &[f64], items: &[String]) -> Result<MixedFit, StatsError> {
    if interactions.len() != lengths.len() || lengths.len() != items.len() {
        return Err(StatsError::Dimension(format!(
            "{} interactions, {} lengths, {} items",
            interactions.len(),
            lengths.len(),
            items.len()
        )));
    }
    let first = lengths.first().copied().unwrap_or(0.0);
    if lengths.iter().all(|&l| l == first) {
        return Err(StatsError::RankDeficient { rank: 1, cols: 2, detail: "intervener length is constant".into() });
    }
    let x = DMatrix::from_fn(lengths.len(), 2, |i, j| if j == 0 { 1.0 } else { lengths[i] });
    let names = ["(Intercept)", "length"].map(String::from).to_vec();
    fit_mixed(interactions, &x, &names, items)
}

/// Exact two-stage check: one-sample t test on per-item differences.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedTest {
    pub mean: f64,
    pub sd: f64,
    pub t: f64,
    pub df: usize,
    pub p: f64,
}

impl PairedTest {
    pub fn new(diffs: &[f64]) -> Result<Self, StatsError> {
        let n = diffs.len();
        if n < 2 {
            return Err(StatsError::TooFewItems { need: 2, got: n });
        }
        let mean = diffs.iter().sum::<f64>() / n as f64;
        let sd = (diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let (t, p) = if sd > 0.0 {
            let t = mean / (sd / (n as f64).sqrt());
            let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("df >= 1");
            (t, 2.0 * dist.sf(t.abs()))
        } else if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        };
        Ok(PairedTest { mean, sd, t, df: n - 1, p })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReduction {
    pub level: String,
    /// Baseline interaction minus this level's interaction, in bits.
    pub reduction: f64,
    pub se: f64,
    pub p: f64,
    pub paired: PairedTest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IslandContrast {
    pub baseline: String,
    pub fit: MixedFit,
    pub levels: Vec<LevelReduction>,
}

/// Fits `bits ~ wh * gap * level` with item intercepts, sum coding on the 2x2
/// core and treatment coding on `level` against `baseline`. For each other
/// level the reduction is minus its three-way coefficient, i.e. how much
/// smaller its licensing interaction is than the baseline's.
///
/// `groups` maps each level to its records, one per item; every level must
/// cover the same items.
pub fn island_contrast(
    groups: &[(String, Vec<InteractionRecord>)],
    baseline: &str,
) -> Result<IslandContrast, StatsError> {
    let base_idx = groups
        .iter()
        .position(|(l, _)| l == baseline)
        .ok_or_else(|| StatsError::MissingBaseline(format!("{baseline:?} is not among the levels")))?;
    if groups.len() < 2 {
        return Err(StatsError::Dimension("need at least 2 levels".into()));
    }
    let mut by_level: Vec<BTreeMap<&str, &InteractionRecord>> = Vec::with_capacity(groups.len());
    for (_, recs) in groups {
        check_one_per_item(recs)?;
        by_level.push(recs.iter().map(|r| (r.item.as_str(), r)).collect());
    }
    let base_items: BTreeSet<&str> = by_level[base_idx].keys().copied().collect();
    for ((level, _), m) in groups.iter().zip(&by_level) {
        let items: BTreeSet<&str> = m.keys().copied().collect();
        if items != base_items {
            return Err(StatsError::Unbalanced(format!("level {level:?} does not cover the baseline's items")));
        }
    }

    let others: Vec<usize> = (0..groups.len()).filter(|&g| g != base_idx).collect();
    let mut names: Vec<String> = ["(Intercept)", "wh", "gap", "wh:gap"].map(String::from).to_vec();
    for &g in &others {
        let l = &groups[g].0;
        names.extend([l.clone(), format!("wh:{l}"), format!("gap:{l}"), format!("wh:gap:{l}")]);
    }
    let p = names.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    let mut items = Vec::new();
    for (g, (_, recs)) in groups.iter().enumerate() {
        for o in long_format(recs) {
            let core = [1.0, o.x_wh, o.x_gap, -(o.x_wh * o.x_gap)];
            let mut row = vec![0.0; p];
            row[..4].copy_from_slice(&core);
            if let Some(k) = others.iter().position(|&h| h == g) {
                row[4 + 4 * k..8 + 4 * k].copy_from_slice(&core);
            }
            rows.push(row);
            y.push(o.bits);
            items.push(o.item);
        }
    }
    let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let fit = fit_mixed(&y, &x, &names, &items)?;

    let mut levels = Vec::with_capacity(others.len());
    for &g in &others {
        let l = &groups[g].0;
        let idx = fit.index(&format!("wh:gap:{l}"))?;
        let diffs: Vec<f64> = base_items
            .iter()
            .map(|item| by_level[base_idx][item].interaction - by_level[g][item].interaction)
            .collect();
        levels.push(LevelReduction {
            level: l.clone(),
            reduction: -fit.beta[idx],
            se: fit.se[idx],
            p: fit.p[idx],
            paired: PairedTest::new(&diffs)?,
        });
    }
    Ok(IslandContrast { baseline: baseline.to_string(), fit, levels })
}
