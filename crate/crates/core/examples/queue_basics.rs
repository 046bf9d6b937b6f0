//! Drop-newest admission, growth, migration and a producer/consumer pair on
//! a shared queue.
//!
//! Run with: cargo run --example queue_basics

use std::thread;

use endurq::growth::Decision;
use endurq::heatmap::{Anchor, PlacementPoint};
use endurq::queue::{EnduranceQueue, EnqueueOutcome, WorkItem};

fn main() -> endurq::Result<()> {
    let here = PlacementPoint {
        boundary_index: 0,
        bucket_index: 2,
        anchored: true,
    };
    let mut q = EnduranceQueue::new(8, here)?;
    for id in 0..3 {
        println!(
            "enqueue {id} at depth {}: {:?}",
            q.depth(),
            q.enqueue(WorkItem::new(id, 0.0, "up"))
        );
    }
    q.apply_growth(&Decision::Grow { to: 4 });
    for id in 3..7 {
        println!(
            "enqueue {id} at depth {}: {:?}",
            q.depth(),
            q.enqueue(WorkItem::new(id, 0.0, "up"))
        );
    }

    let held = Anchor::for_placement(&here);
    println!(
        "migrate while held: {:?}",
        q.migrate(here, &held).err().map(|e| e.to_string())
    );
    let released = Anchor { released: true, ..held };
    let there = PlacementPoint {
        bucket_index: 5,
        ..here
    };
    q.migrate(there, &released)?;
    println!("moved to bucket {} with {} items", q.placement().bucket_index, q.len());
    println!("{:?}", q.snapshot(1.0));

    let shared = EnduranceQueue::new(1024, here)?.into_shared();
    shared.apply_growth(&Decision::Grow { to: 1024 });
    let producer = {
        let q = shared.clone();
        thread::spawn(move || {
            (0..500)
                .filter(|&i| q.enqueue(WorkItem::new(i, 0.0, "up")) == EnqueueOutcome::Accepted)
                .count()
        })
    };
    let consumer = {
        let q = shared.clone();
        thread::spawn(move || {
            let mut got = Vec::new();
            while got.len() < 500 {
                match q.dequeue() {
                    Some(item) => got.push(item.id),
                    None => thread::yield_now(),
                }
            }
            got
        })
    };
    let accepted = producer.join().unwrap();
    let got = consumer.join().unwrap();
    println!(
        "threads: {accepted} accepted, {} consumed, in order: {}",
        got.len(),
        got.windows(2).all(|w| w[0] < w[1])
    );
    Ok(())
}
