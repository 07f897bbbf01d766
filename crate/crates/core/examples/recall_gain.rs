//! Full versus attribute-only linkage on a perturbed synthetic pair.
//!
//! cargo run --release -p siglink --example recall_gain -- [records] [seed] [key=value ...]

use siglink::evaluate::{precision_recall, threshold_sweep};
use siglink::synth::{corrupt, generate_pair, inject_mcar, SynthParams, QID_ATTRIBUTES};
use siglink::{link, CombinationSource, Config};

fn main() -> siglink::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let mut cfg = Config {
        attributes: QID_ATTRIBUTES.iter().map(|s| s.to_string()).collect(),
        relationships: vec![vec!["last_name".parse()?, "street_address".parse()?]],
        ..Config::default()
    };
    for kv in args.iter().skip(2) {
        let (k, v) = kv.split_once('=').expect("key=value");
        if let Some(attr) = k.strip_prefix("t.") {
            cfg.set_transforms(attr, v)?;
        } else {
            cfg.set(k, v)?;
        }
    }
    cfg.validate()?;

    let t0 = std::time::Instant::now();
    let pair = generate_pair(&SynthParams {
        records_a: n,
        records_b: n,
        overlap: 0.8,
        household_size: 3.0,
        seed,
    })?;
    let qids: Vec<String> = QID_ATTRIBUTES.iter().map(|s| s.to_string()).collect();
    let a = corrupt(
        &inject_mcar(&pair.a, 0.2, 5, &qids, seed ^ 0xa1)?,
        0.2,
        3,
        &qids,
        seed ^ 0xa2,
    )?;
    let b = corrupt(
        &inject_mcar(&pair.b, 0.2, 5, &qids, seed ^ 0xb1)?,
        0.2,
        3,
        &qids,
        seed ^ 0xb2,
    )?;
    let keep = |db: &siglink::Database| -> siglink::Result<siglink::Database> {
        let idx: Vec<usize> = qids
            .iter()
            .map(|q| db.attribute_index(q))
            .collect::<Result<_, _>>()?;
        let records = db
            .records()
            .iter()
            .map(|r| {
                let mut rec = siglink::Record::new(r.id(), idx.iter().map(|&i| r.value(i)));
                if let Some(e) = r.entity_id() {
                    rec = rec.with_entity(e);
                }
                rec
            })
            .collect();
        siglink::Database::new(db.name(), qids.clone(), records)
    };
    let (a, b) = (keep(&a)?, keep(&b)?);
    eprintln!("generated in {:?}", t0.elapsed());

    let out = link(&a, &b, &cfg, CombinationSource::Select)?;
    for c in &out.combinations {
        println!(
            "combo {} score {:.4}",
            c.combination.label(a.schema()),
            c.score
        );
    }
    let m = precision_recall(&out.matches, &pair.truth);
    println!("{}", out.runtime);
    println!(
        "full: {m:?} rel={}",
        out.matches.count_stage(siglink::Stage::Relational)
    );
    let matcher = siglink::matcher::Matcher::new(&out.signatures_a, &out.signatures_b)?;
    let mut hist = std::collections::BTreeMap::new();
    let mut cand_true = 0;
    for c in matcher.candidates() {
        let (ia, ib) = (
            out.signatures_a.record_id(c.a as usize),
            out.signatures_b.record_id(c.b as usize),
        );
        if !pair.truth.contains(ia, ib) {
            continue;
        }
        cand_true += 1;
        let sa = matcher.attribute_similarity(c);
        let sr = matcher.relational_similarity(c);
        let key = ((sa * 10.0).floor() as i32, (sr * 10.0).floor() as i32);
        *hist.entry(key).or_insert(0) += 1;
    }
    println!(
        "true candidates {cand_true} of {} (all candidates {})",
        pair.truth.len(),
        matcher.candidates().len()
    );
    for ((sa, sr), n) in &hist {
        println!("  sA~{sa} sR~{sr}: {n}");
    }
    let empty_a = (0..out.signatures_a.record_count())
        .filter(|&i| out.signatures_a.signatures_of(i).is_empty())
        .count();
    let deg0 = (0..out.signatures_a.record_count())
        .filter(|&i| out.signatures_a.graph().degree(i).unwrap() == 0)
        .count();
    println!(
        "A: empty sig sets {empty_a}, isolated {deg0}, sigs {}",
        out.signatures_a.signature_count()
    );
    let rows = threshold_sweep(
        &out.signatures_a,
        &out.signatures_b,
        &cfg,
        &pair.truth,
        &[0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
    )?;
    for r in rows {
        println!(
            "{:.1} {:>14} |M|={:>6} P={:.4} R={:.4}",
            r.s_t, r.mode, r.matches, r.metrics.precision, r.metrics.recall
        );
    }
    Ok(())
}
