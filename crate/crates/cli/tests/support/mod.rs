#![allow(dead_code)]

use std::path::PathBuf;

use filler_gap_core::backend::OracleTable;
use filler_gap_core::suite::{expand, Condition, Experiment};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_filler-gap"))
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load_fixture(name: &str) -> Experiment {
    Experiment::from_json(&std::fs::read_to_string(fixture(&format!("{name}.json"))).unwrap()).unwrap()
}

/// Oracle table giving every word of every condition sentence the surprisal
/// `bits(item, condition, region label, offset within region)`, plus
/// `eos_bits` for the terminal event. Panics when two sentences share a
/// context and word but ask for different values.
pub fn oracle_table(
    exp: &Experiment,
    eos_bits: f64,
    bits: impl Fn(usize, &Condition, &str, usize) -> f64,
) -> OracleTable {
    let mut t = OracleTable::new("programmed");
    for s in expand(exp) {
        for span in &s.spans {
            for i in span.start..span.end {
                let b = bits(s.item, &s.condition, &span.label, i - span.start);
                put(&mut t, &s.words[..i], &s.words[i], b);
            }
        }
        put(&mut t, &s.words, "</s>", eos_bits);
    }
    t.validate().unwrap();
    t
}

fn put(t: &mut OracleTable, ctx: &[String], word: &str, bits: f64) {
    let p = (-bits).exp2();
    if let Some(old) = t.get(ctx, word) {
        assert_eq!(old, p, "conflicting values for {word:?} after {ctx:?}");
    }
    t.insert(ctx, word, p);
}

/// On the wh-island fixture: the wh licensor lowers the first post-gap word's
/// surprisal by `k_open` bits in the non-island level and by `k_island` in
/// the island levels. Items differ by a constant offset.
pub fn island_oracle(exp: &Experiment, k_open: f64, k_island: f64) -> OracleTable {
    let post_gap = exp.measurement("post_gap").unwrap().regions[0].clone();
    let (wh, gap, island) = (exp.wh_factor(), exp.gap_factor(), exp.factor_index("island").unwrap());
    oracle_table(exp, 2.0, |item, c, region, offset| {
        if region != post_gap || offset != 0 {
            return 4.0;
        }
        let base = 8.0 + 0.25 * (item % 4) as f64;
        if c.0[wh] == 1 && c.0[gap] == 1 {
            base - if c.0[island] == 0 { k_open } else { k_island }
        } else {
            base
        }
    })
}
