//! Paired runs of the endurance policy against a queue pinned at depth 1,
//! across several seeds.
//!
//! Run with: cargo run --example compare_baseline

use endurq::sim::{compare_baseline, SimConfig};

fn main() -> endurq::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/bursty.json");
    let base = SimConfig::from_json_file(path.as_ref())?;
    println!(
        "{:>4} {:>8} {:>10} {:>8} {:>10} {:>6}",
        "seed", "offered", "endurance", "fixed", "reduction", "depth"
    );
    for seed in 0..8 {
        let cmp = compare_baseline(&base.clone().with_seed(seed))?;
        let (e, f) = (cmp.endurance.dropped, cmp.fixed.dropped);
        let reduction = if f == 0 {
            0.0
        } else {
            100.0 * (f - e.min(f)) as f64 / f as f64
        };
        println!(
            "{seed:>4} {:>8} {e:>10} {f:>8} {reduction:>9.1}% {:>6}",
            cmp.endurance.offered, cmp.endurance.final_depth
        );
    }
    Ok(())
}
