//! Normalizing constants of a closed product-form network, state
//! probabilities, and the spawn plans for a multiprogrammed stack.
//!
//! Run with: cargo run --example convolution

use endurq::product_form::{
    apply_multiprogram, enumerate_states, normalizing_constant, state_probability, zero_dominated, ProductFormModel,
};

fn main() -> endurq::Result<()> {
    let demands = [0.5, 1.0, 2.0];
    let g = normalizing_constant(&demands, 4)?;
    for (n, v) in g.iter().enumerate() {
        println!("G({n}) = {v:.6}");
    }

    let model = ProductFormModel::new(demands.to_vec(), 3)?;
    let mut states: Vec<(Vec<u64>, f64)> = enumerate_states(3, 3)
        .into_iter()
        .map(|s| {
            let p = state_probability(&model, &s).unwrap();
            (s.counts, p)
        })
        .collect();
    states.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("\nmost likely states for N = 3:");
    for (counts, p) in states.iter().take(4) {
        println!("  {counts:?}: {p:.4}");
    }

    let growth = [2, 9, 4];
    let plans = apply_multiprogram(3, &growth, &demands, 2.0)?;
    println!("\ngrowth values {growth:?}:");
    for p in &plans {
        println!(
            "  spawn {} thread(s) on station {}, zero station {}",
            p.thread_count, p.target_station, p.zeroed_station
        );
    }
    println!("after zeroing: {:?}", zero_dominated(&growth, &plans));
    Ok(())
}
