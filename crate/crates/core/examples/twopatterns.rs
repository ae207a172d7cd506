//! Trains and evaluates on the synthetic TwoPatterns analog.
//!
//! cargo run --release -p mdf-core --example twopatterns -- [n] [epochs] [cv_epochs] [seed] [strides|cv]

use std::time::Instant;

use mdf_core::data::{synthesize_twopatterns, SynthConfig};
use mdf_core::explain::{explain, ClassScore, TieRule};
use mdf_core::fcn::{fit, TrainConfig, STRIDE_CANDIDATES};

fn main() -> mdf_core::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(default);
    let n = arg(0, 3) as usize;
    let epochs = arg(1, 30) as usize;
    let cv_epochs = arg(2, 15) as usize;
    let seed = arg(3, 0);
    let candidates = match args.get(4).map(String::as_str) {
        None | Some("cv") => STRIDE_CANDIDATES.to_vec(),
        Some(s) => {
            let v: Vec<usize> = s.split(',').map(|t| t.parse().unwrap()).collect();
            vec![[v[0], v[1], v[2]]]
        }
    };
    let synth = |s| SynthConfig { classes: 4, per_class: 50, len: 64, sigma: 0.05, seed: s };
    let train = synthesize_twopatterns(&synth(seed * 2 + 1))?;
    let test = synthesize_twopatterns(&synth(seed * 2 + 2))?;
    let cfg = TrainConfig {
        n,
        epochs,
        cv_epochs: Some(cv_epochs),
        stride_candidates: candidates,
        seed,
        batch_size: std::env::var("BATCH").ok().and_then(|b| b.parse().ok()).unwrap_or(16),
        ..TrainConfig::default()
    };
    let t = Instant::now();
    let artifact = fit::<f32>(&train, 4, &cfg)?;
    let err = artifact.evaluate(&test)?;
    println!(
        "n={n} strides={:?} test_error={err:.4} final_loss={:.5} time={:.1}s",
        artifact.meta.strides,
        artifact.meta.loss_history.last().copied().unwrap_or(f64::NAN),
        t.elapsed().as_secs_f64()
    );
    let pred = artifact.predict(&test)?;
    let mut confusion = [[0usize; 4]; 4];
    for (p, t) in pred.iter().zip(&test) {
        confusion[t.label.unwrap()][*p] += 1;
    }
    println!("  confusion (row = truth): {confusion:?}");
    let clean = synthesize_twopatterns(&SynthConfig { sigma: 0.0, ..synth(seed * 2 + 2) })?;
    let pred = artifact.predict(&clean)?;
    let (mut correct, mut hits) = (0, 0);
    let mut tops = std::collections::BTreeMap::new();
    let mut stats = std::collections::BTreeMap::new();
    for (p, ts) in pred.iter().zip(&clean) {
        if Some(*p) != ts.label {
            continue;
        }
        correct += 1;
        let score = if std::env::var("PROB").is_ok() { ClassScore::Probability } else { ClassScore::Logit };
        let ex = explain(&artifact, ts, *p, score, TieRule::EXACT)?;
        let top = ex.significance.top(2);
        if top.contains(&"112") && top.contains(&"211") {
            hits += 1;
        }
        *tops.entry(top.join("/")).or_insert(0) += 1;
        for sc in &ex.significance.scores {
            let e = stats.entry(sc.code.clone()).or_insert((0usize, 0usize, 0usize));
            e.0 += sc.count;
            if let Some(r) = sc.rank {
                e.1 += r;
                e.2 += 1;
            }
        }
    }
    println!("  noiseless: {correct} correct, {hits} with top-2 = {{112, 211}}");
    println!("  top-2 histogram: {tops:?}");
    for (code, (z, r, k)) in &stats {
        println!("  {code}: mean Z {:.1}, mean rank {:.2} over {k}", *z as f64 / correct as f64, *r as f64 / (*k).max(1) as f64);
    }
    if let Some(cv) = &artifact.meta.cv {
        for c in &cv.candidates {
            println!("  {:?} {:?}", c.strides, c.mean_error);
        }
    }
    Ok(())
}
