//! Writes a small labelled Adult sample with tree predictions and a `batch`
//! column: `cargo run --example make_sample -- <out.csv> [rows] [batches]`.

use driftscope::adult::{self, AdultData};
use driftscope::io::write_atomic;
use driftscope_core::seed::SeedSplitter;
use driftscope_core::streams::fit_tree;
use rand::seq::SliceRandom;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let out = args
        .get(1)
        .ok_or("usage: make_sample <out.csv> [rows] [batches]")?;
    let n: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let batches: usize = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(10);
    let data: AdultData = adult::load(&adult::default_dir())?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut SeedSplitter::new(7).rng(0, 0));
    let (train, rest) = order.split_at(data.len() / 2);
    let features = data.features();
    let x: Vec<Vec<f64>> = train.iter().map(|&r| features[r].clone()).collect();
    let y: Vec<u32> = train.iter().map(|&r| data.labels[r]).collect();
    let model = fit_tree(&x, &y, 8)?;
    let rows = &rest[..n.min(rest.len())];
    let labels: Vec<u32> = rows.iter().map(|&r| data.labels[r]).collect();
    let preds: Vec<u32> = rows.iter().map(|&r| model.predict(&features[r])).collect();
    let mut table = data.table(rows, &labels, Some(&preds));
    table.columns.push("batch".into());
    let per = rows.len().div_ceil(batches);
    for (i, row) in table.rows.iter_mut().enumerate() {
        row.push((i / per + 1).to_string());
    }
    write_atomic(std::path::Path::new(out), &table.to_csv()?)?;
    Ok(())
}
