//! The subcommands, as library functions. Each writes its artifacts and
//! returns what it wrote; `main` only parses flags and maps errors to exit
//! codes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use filler_gap_core::analysis::{
    design_label, run_analysis, AnalysisOutput, ContrastCell, InteractionCell, ScoredExperiment, SlopeCell,
};
use filler_gap_core::backend::protocol;
use filler_gap_core::ngram::{self, export_arpa};
use filler_gap_core::stats::{paired_t_interval, positive_share, InteractionRecord, MixedFit};
use filler_gap_core::suite::{expand, AnalysisKind, Experiment};
use filler_gap_core::SurprisalProfile;

use crate::archive::{archive_bytes, manifest_path, read_profiles, sha256_file, sha256_hex, Manifest};
use crate::backends::{BackendSpec, OpenBackend};
use crate::fmt::{num, stars, Table};
use crate::svg::{self, Bar};

/// An error that exits with status 1: the inputs were read, but the run or
/// analysis could not be carried out on them.
#[derive(Debug)]
pub struct Failure(pub String);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failure {}

fn failure(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Failure(msg.into()))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn load_experiment(path: &Path) -> Result<Experiment> {
    let text = read_text(path)?;
    Experiment::from_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

// ---- train ----

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub vocab_size: usize,
    pub ngram_counts: Vec<usize>,
}

pub fn train(corpus: &Path, order: usize, min_count: u64, out: &Path) -> Result<TrainSummary> {
    let text = read_text(corpus)?;
    let lines = ngram::tokenize_corpus(&text);
    let model = ngram::train(&lines, order, min_count).with_context(|| format!("training on {}", corpus.display()))?;
    write_file(out, export_arpa(&model))?;
    Ok(TrainSummary { vocab_size: model.vocab().len(), ngram_counts: model.ngram_counts() })
}

// ---- run ----

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub threads: usize,
    pub allow_nondeterministic: bool,
}

/// Scores every condition sentence and writes the archive and its manifest.
pub fn run(experiment_path: &Path, spec: &BackendSpec, archive: &Path, options: &RunOptions) -> Result<Manifest> {
    let experiment = load_experiment(experiment_path)?;
    let mut backend = spec.open().with_context(|| format!("opening backend {}", spec.descriptor()))?;
    if !backend.deterministic() && !options.allow_nondeterministic {
        return Err(failure(format!(
            "backend {} ({}) declares itself nondeterministic, so its archive could not be reproduced; \
             pin its randomness, or pass --allow-nondeterministic to accept that",
            spec.descriptor(),
            backend.name()
        )));
    }
    let profiles = score_experiment(&experiment, &mut backend, options.threads)?;
    if matches!(backend, OpenBackend::External(_)) && profiles.iter().any(|p| p.eos_bits == Some(0.0)) {
        eprintln!("warning: backend {} reports 0 bits for the terminal event; it may not model one", backend.name());
    }
    let sentences = expand(&experiment);
    let bytes = archive_bytes(&experiment, &sentences, &profiles)?;
    write_file(archive, &bytes)?;

    let mut digests = BTreeMap::new();
    let mut files = BTreeMap::new();
    let abs = |p: &Path| std::fs::canonicalize(p).with_context(|| format!("resolving {}", p.display()));
    digests.insert("experiment".to_string(), sha256_file(experiment_path)?);
    files.insert("experiment".to_string(), abs(experiment_path)?);
    digests.insert("archive".to_string(), sha256_hex(&bytes));
    files.insert("archive".to_string(), abs(archive)?);
    if let Some(model) = spec.model_file() {
        digests.insert("model".to_string(), sha256_file(model)?);
        files.insert("model".to_string(), abs(model)?);
    }
    let manifest = Manifest {
        experiment: experiment.name.clone(),
        experiment_path: abs(experiment_path)?,
        backend: spec.descriptor(),
        backend_name: backend.name().to_string(),
        deterministic: backend.deterministic(),
        harness_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        digests,
        files,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    write_file(&manifest_path(archive), json + "\n")?;
    Ok(manifest)
}

/// Profiles for `expand(experiment)`, in order. Backend errors name the item
/// and condition they concern.
pub fn score_experiment(
    experiment: &Experiment,
    backend: &mut OpenBackend,
    threads: usize,
) -> Result<Vec<SurprisalProfile>> {
    let sentences = expand(experiment);
    let words: Vec<Vec<String>> = sentences.iter().map(|s| s.words.clone()).collect();
    let profiles = backend.score_all(&words, threads).map_err(|f| {
        let at = f
            .index
            .map(|i| {
                let s = &sentences[i];
                format!(
                    "item {}, condition {}: ",
                    experiment.items[s.item].id,
                    experiment.condition_label(&s.condition)
                )
            })
            .unwrap_or_default();
        failure(format!("scoring with {}: {at}{}", backend.name(), f.error))
    })?;
    for (s, p) in sentences.iter().zip(&profiles) {
        if let Err(e) = p.validate() {
            return Err(failure(format!(
                "item {}, condition {}: {e}",
                experiment.items[s.item].id,
                experiment.condition_label(&s.condition)
            )));
        }
    }
    Ok(profiles)
}

// ---- analyze ----

/// An archive with its manifest and experiment, checked for staleness.
pub struct LoadedRun {
    pub manifest: Manifest,
    pub experiment: Experiment,
    pub profiles: Vec<SurprisalProfile>,
}

pub fn load_run(archive: &Path, force: bool) -> Result<LoadedRun> {
    let mpath = manifest_path(archive);
    let manifest: Manifest =
        serde_json::from_str(&read_text(&mpath)?).with_context(|| format!("parsing manifest {}", mpath.display()))?;
    let stale = manifest.stale_inputs();
    if !stale.is_empty() {
        let msg = format!("inputs changed since the run: {}", stale.join(", "));
        if !force {
            return Err(failure(format!("{msg}; rerun the experiment, or pass --force to analyze anyway")));
        }
        eprintln!("warning: {msg}");
    }
    let experiment = load_experiment(&manifest.experiment_path)?;
    let bytes = std::fs::read(archive).with_context(|| format!("reading {}", archive.display()))?;
    let sentences = expand(&experiment);
    let profiles = read_profiles(&bytes, &experiment, &sentences, &manifest.backend_name)
        .map_err(|e| failure(format!("{}: {e}", archive.display())))?;
    Ok(LoadedRun { manifest, experiment, profiles })
}

/// What one analysis produced.
#[derive(Debug, Clone)]
pub struct AnalysisFiles {
    pub name: String,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Markdown summary for the report.
    pub summary: String,
}

/// Runs `names` (all declared analyses when empty), writing each into
/// `out/<analysis>/`.
pub fn analyze(run: &LoadedRun, names: &[String], out: &Path) -> Result<Vec<AnalysisFiles>> {
    let e = &run.experiment;
    let scored = ScoredExperiment::new(e, run.profiles.clone()).map_err(|err| failure(err.to_string()))?;
    let names: Vec<String> =
        if names.is_empty() { e.analyses.iter().map(|a| a.name.clone()).collect() } else { names.to_vec() };
    if names.is_empty() {
        return Err(failure(format!("experiment {} declares no analyses", e.name)));
    }
    let mut done = Vec::new();
    for name in &names {
        let output = run_analysis(&scored, name).map_err(|err| failure(err.to_string()))?;
        let dir = out.join(name);
        let mut w = Writer { dir: dir.clone(), files: Vec::new() };
        let summary = match &output {
            AnalysisOutput::Interaction(cells) => write_interaction(&mut w, name, cells)?,
            AnalysisOutput::LengthSlope(cells) => write_slope(&mut w, name, cells)?,
            AnalysisOutput::Contrast(cells) => write_contrast(&mut w, name, e, cells)?,
        };
        done.push(AnalysisFiles { name: name.clone(), dir, files: w.files, summary });
    }
    Ok(done)
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn put(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_file(&path, text)?;
        self.files.push(path);
        Ok(())
    }
}

fn slug(design: &[(String, String)]) -> String {
    if design.is_empty() {
        return String::new();
    }
    let s: String =
        design_label(design).chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("_{s}")
}

const COEF_HEADER: [&str; 10] =
    ["design", "term", "estimate", "se", "z", "p", "method", "sigma2_item", "sigma2_resid", "n_obs"];

fn coefficient_rows(t: &mut Table, design: &str, fit: &MixedFit) {
    for (k, name) in fit.names.iter().enumerate() {
        t.push(vec![
            design.to_string(),
            name.clone(),
            num(fit.beta[k]),
            num(fit.se[k]),
            num(fit.z[k]),
            num(fit.p[k]),
            fit.method.as_str().to_string(),
            num(fit.sigma2_item),
            num(fit.sigma2_resid),
            fit.n_obs.to_string(),
        ]);
    }
}

fn record_row(design: &str, extra: &[String], r: &InteractionRecord) -> Vec<String> {
    let mut row = vec![design.to_string()];
    row.extend(extra.iter().cloned());
    row.extend([
        r.item.clone(),
        r.measurement.clone(),
        num(r.s_a),
        num(r.s_b),
        num(r.s_c),
        num(r.s_d),
        num(r.interaction),
    ]);
    row
}

const RECORD_COLS: [&str; 7] =
    ["item", "measurement", "s_that_nogap", "s_wh_nogap", "s_that_gap", "s_wh_gap", "interaction"];

fn coef_line(fit: &MixedFit, term: &str) -> String {
    match fit.index(term) {
        Ok(k) => format!("β={}, SE={}, p={} {}", num(fit.beta[k]), num(fit.se[k]), num(fit.p[k]), stars(fit.p[k])),
        Err(_) => format!("{term}: not estimated"),
    }
}

fn write_interaction(w: &mut Writer, name: &str, cells: &[InteractionCell]) -> Result<String> {
    let mut records = Table::new(&[&["design"][..], &RECORD_COLS[..]].concat());
    let mut coefs = Table::new(&COEF_HEADER);
    let mut conditions = Table::new(&["design", "condition", "mean", "half_width", "method"]);
    let mut contrasts = Table::new(&["design", "contrast", "estimate", "half_width", "method"]);
    let mut regions = Table::new(&["design", "region", "interaction"]);
    let mut interaction_bars = Vec::new();
    let mut region_series = Vec::new();
    let mut region_labels: Vec<String> = Vec::new();
    let mut summary = String::new();

    for cell in cells {
        let d = design_label(&cell.design);
        for r in &cell.records {
            records.push(record_row(&d, &[], r));
        }
        coefficient_rows(&mut coefs, &d, &cell.fit);
        let mut bars = Vec::new();
        for c in &cell.cis.conditions {
            conditions.push(vec![d.clone(), c.name.clone(), num(c.estimate), num(c.half_width), c.method.into()]);
            bars.push(Bar { label: c.name.clone(), value: c.estimate, half_width: Some(c.half_width) });
        }
        for c in &cell.cis.contrasts {
            contrasts.push(vec![d.clone(), c.name.clone(), num(c.estimate), num(c.half_width), c.method.into()]);
            if c.name == "interaction" {
                interaction_bars.push(Bar { label: d.clone(), value: c.estimate, half_width: Some(c.half_width) });
            }
        }
        for (label, v) in &cell.regions {
            regions.push(vec![d.clone(), label.clone(), num(*v)]);
        }
        if region_labels.is_empty() {
            region_labels = cell.regions.iter().map(|r| r.0.clone()).collect();
        }
        region_series.push((d.clone(), cell.regions.iter().map(|r| r.1).collect::<Vec<_>>()));
        w.put(
            &format!("conditions{}.svg", slug(&cell.design)),
            &svg::bar_chart(&format!("{name}: condition means ({d})"), "surprisal (bits)", &bars),
        )?;

        let share = positive_share(&cell.records).map(|s| format!("{:.1}%", 100.0 * s)).unwrap_or("-".into());
        let _ = writeln!(
            summary,
            "- `{d}`: wh:gap {}; positive interaction in {share} of {} items",
            coef_line(&cell.fit, "wh:gap"),
            cell.records.len()
        );
    }
    w.put("records.tsv", &records.render())?;
    w.put("coefficients.tsv", &coefs.render())?;
    w.put("conditions.tsv", &conditions.render())?;
    w.put("contrasts.tsv", &contrasts.render())?;
    w.put("regions.tsv", &regions.render())?;
    w.put("interaction.svg", &svg::bar_chart(&format!("{name}: licensing interaction"), "bits", &interaction_bars))?;
    w.put(
        "regions.svg",
        &svg::line_plot(&format!("{name}: interaction by region"), "bits", &region_labels, &region_series),
    )?;
    Ok(summary)
}

fn write_slope(w: &mut Writer, name: &str, cells: &[SlopeCell]) -> Result<String> {
    let mut points = Table::new(&["design", "item", "level", "length", "interaction"]);
    let mut coefs = Table::new(&COEF_HEADER);
    let mut summary = String::new();
    for cell in cells {
        let d = design_label(&cell.design);
        for p in &cell.points {
            points.push(vec![d.clone(), p.item.clone(), p.level.clone(), p.length.to_string(), num(p.interaction)]);
        }
        coefficient_rows(&mut coefs, &d, &cell.fit);
        let (b0, b1) = (cell.fit.coef("(Intercept)")?, cell.fit.coef("length")?);
        let xy: Vec<(f64, f64)> = cell.points.iter().map(|p| (p.length as f64, p.interaction)).collect();
        w.put(
            &format!("slope{}.svg", slug(&cell.design)),
            &svg::scatter_fit(
                &format!("{name}: interaction by length ({d})"),
                "intervener length (words)",
                "bits",
                &xy,
                b0,
                b1,
            ),
        )?;
        let _ = writeln!(summary, "- `{d}`: length {}", coef_line(&cell.fit, "length"));
    }
    w.put("points.tsv", &points.render())?;
    w.put("coefficients.tsv", &coefs.render())?;
    Ok(summary)
}

fn write_contrast(w: &mut Writer, name: &str, e: &Experiment, cells: &[ContrastCell]) -> Result<String> {
    let across = match &e.analysis(name).map(|a| &a.kind) {
        Some(AnalysisKind::Contrast { factor, .. }) => factor.clone(),
        _ => "level".into(),
    };
    let mut records = Table::new(&[&["design", across.as_str()][..], &RECORD_COLS[..]].concat());
    let mut coefs = Table::new(&COEF_HEADER);
    let mut levels = Table::new(&["design", "level", "interaction", "half_width"]);
    let mut reductions = Table::new(&[
        "design",
        "level",
        "baseline",
        "reduction",
        "se",
        "p",
        "paired_mean",
        "paired_sd",
        "paired_t",
        "paired_df",
        "paired_p",
    ]);
    let mut bars = Vec::new();
    let mut summary = String::new();
    for cell in cells {
        let d = design_label(&cell.design);
        for (level, recs) in &cell.groups {
            for r in recs {
                records.push(record_row(&d, std::slice::from_ref(level), r));
            }
            let values: Vec<f64> = recs.iter().map(|r| r.interaction).collect();
            let (mean, half) = paired_t_interval(&values).map_err(|err| failure(format!("{name}, {d}: {err}")))?;
            levels.push(vec![d.clone(), level.clone(), num(mean), num(half)]);
            let label = if cell.design.is_empty() { level.clone() } else { format!("{d},{across}={level}") };
            bars.push(Bar { label, value: mean, half_width: Some(half) });
        }
        coefficient_rows(&mut coefs, &d, &cell.contrast.fit);
        for l in &cell.contrast.levels {
            reductions.push(vec![
                d.clone(),
                l.level.clone(),
                cell.contrast.baseline.clone(),
                num(l.reduction),
                num(l.se),
                num(l.p),
                num(l.paired.mean),
                num(l.paired.sd),
                num(l.paired.t),
                l.paired.df.to_string(),
                num(l.paired.p),
            ]);
            let _ = writeln!(
                summary,
                "- `{d}`: {} vs {}: reduction {} (SE {}, p={} {}); paired t({})={}, p={} {}",
                l.level,
                cell.contrast.baseline,
                num(l.reduction),
                num(l.se),
                num(l.p),
                stars(l.p),
                l.paired.df,
                num(l.paired.t),
                num(l.paired.p),
                stars(l.paired.p)
            );
        }
    }
    w.put("records.tsv", &records.render())?;
    w.put("coefficients.tsv", &coefs.render())?;
    w.put("levels.tsv", &levels.render())?;
    w.put("reductions.tsv", &reductions.render())?;
    w.put("interaction.svg", &svg::bar_chart(&format!("{name}: licensing interaction by {across}"), "bits", &bars))?;
    Ok(summary)
}

// ---- report ----

/// Runs every analysis and writes `report.md` next to the per-analysis
/// directories.
pub fn report(run: &LoadedRun, archive: &Path, out: &Path) -> Result<PathBuf> {
    let done = analyze(run, &[], out)?;
    let m = &run.manifest;
    let mut md = String::new();
    let _ = writeln!(md, "# {}\n", m.experiment);
    let _ = writeln!(md, "- archive: `{}`", archive.display());
    let _ = writeln!(md, "- backend: `{}` ({}, deterministic: {})", m.backend, m.backend_name, m.deterministic);
    let _ = writeln!(md, "- harness version: {}", m.harness_version);
    let _ = writeln!(md, "- items: {}, conditions: {}\n", run.experiment.items.len(), run.experiment.n_conditions());
    let _ = writeln!(
        md,
        "Significance: `***` p < 0.001, `**` p < 0.01, `*` p < 0.05. Raw p-values are in the TSV files.\n"
    );
    for a in &done {
        let _ = writeln!(md, "## {}\n", a.name);
        md.push_str(&a.summary);
        md.push('\n');
        for f in &a.files {
            let rel = f.strip_prefix(out).unwrap_or(f);
            if f.extension().is_some_and(|x| x == "svg") {
                let _ = writeln!(md, "![{}]({})", rel.display(), rel.display());
            } else {
                let _ = writeln!(md, "- [{}]({})", rel.display(), rel.display());
            }
        }
        md.push('\n');
    }
    let path = out.join("report.md");
    write_file(&path, md)?;
    Ok(path)
}

// ---- score / serve ----

/// Scores one sentence per input line and writes a TSV of word surprisals.
pub fn score(spec: &BackendSpec, input: impl BufRead, mut output: impl Write, threads: usize) -> Result<()> {
    let mut sentences = Vec::new();
    for line in input.lines() {
        let line = line.context("reading sentences")?;
        let words: Vec<String> = line.split_whitespace().map(String::from).collect();
        if !words.is_empty() {
            sentences.push(words);
        }
    }
    if sentences.is_empty() {
        bail!("no sentences to score");
    }
    let mut backend = spec.open()?;
    let profiles = backend.score_all(&sentences, threads).map_err(|f| {
        let at = f.index.map(|i| format!("sentence {}: ", i + 1)).unwrap_or_default();
        failure(format!("{at}{}", f.error))
    })?;
    let mut t = Table::new(&["sentence", "position", "word", "bits"]);
    for (i, p) in profiles.iter().enumerate() {
        for (j, (w, b)) in p.words.iter().zip(&p.bits).enumerate() {
            t.push(vec![(i + 1).to_string(), j.to_string(), w.clone(), num(*b)]);
        }
        if let Some(eos) = p.eos_bits {
            t.push(vec![(i + 1).to_string(), p.words.len().to_string(), crate::archive::TERMINAL.into(), num(eos)]);
        }
    }
    output.write_all(t.render().as_bytes())?;
    Ok(())
}

/// Speaks the adapter side of the wire protocol on stdin/stdout.
pub fn serve(spec: &BackendSpec, input: impl BufRead, output: impl Write) -> Result<()> {
    let mut backend = spec.open()?;
    protocol::serve(&mut backend, input, output)?;
    Ok(())
}
