//! Delay chain construction, its edge set and empirical transition counts.
//!
//! Run with `cargo run --example markov_sampling`.

use mjds::jump_system::trajectory_rng;
use mjds::{DelayBijection, DelayVector, MarkovDelayChain, Mode, Tpm};

fn main() -> mjds::Result<()> {
    let tpm = Tpm::new(vec![
        vec![0.6, 0.4, 0.0],
        vec![0.0, 0.5, 0.5],
        vec![1.0, 0.0, 0.0],
    ])?;
    let alphabet = vec![
        DelayVector::new(vec![0, 1]),
        DelayVector::new(vec![1, 3]),
        DelayVector::new(vec![2, 2]),
    ];
    let chain = MarkovDelayChain::new(tpm, DelayBijection::new(alphabet)?)?;

    println!("edges:");
    for (from, to) in chain.edge_set() {
        println!("  {from} -> {to}");
    }

    let mut rng = trajectory_rng(42, 0);
    let mut counts = [[0usize; 3]; 3];
    let mut mode = Mode::new(1);
    for _ in 0..100_000 {
        let next = chain.sample_next(mode, &mut rng)?;
        counts[mode.index()][next.index()] += 1;
        mode = next;
    }
    println!("empirical transition frequencies:");
    for (i, row) in counts.iter().enumerate() {
        let total: usize = row.iter().sum();
        let freqs: Vec<String> = row
            .iter()
            .map(|&c| format!("{:.3}", c as f64 / total as f64))
            .collect();
        println!("  mode {}: [{}]", i + 1, freqs.join(", "));
    }
    Ok(())
}
