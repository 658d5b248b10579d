//! Single-threaded masking and matching rates on a synthetic graph.
//!
//! ```text
//! cargo run --release -p kgcorpus --example throughput [graph_size] [sentences]
//! ```

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kgcorpus::masker::{mask_triple, record_rng, DEFAULT_SENTINEL};
use kgcorpus::matcher::EntityMatcher;
use kgcorpus::{match_record, KnowledgeGraph, MaskPolicy, RoleChoice, Triple};

const STEMS: [&str; 8] = ["Ardan", "Belor", "Cyrin", "Dovel", "Esker", "Farro", "Gavin", "Halden"];
const RELATIONS: [&str; 4] = ["director", "capital", "award received", "author"];

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("a count"));
    let graph_size = args.next().unwrap_or(1_000_000);
    let n_sentences = args.next().unwrap_or(200_000);
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    let start = Instant::now();
    let triples: Vec<Triple> = (0..graph_size)
        .map(|i| {
            let s = format!("{} {i}", STEMS[rng.random_range(0..STEMS.len())]);
            let o = format!("{} {}", STEMS[rng.random_range(0..STEMS.len())], rng.random_range(0..graph_size));
            Triple::new(s, RELATIONS[rng.random_range(0..RELATIONS.len())], o).unwrap()
        })
        .collect();
    let kg = KnowledgeGraph::new(triples);
    println!("built graph of {} triples in {:.2?}", kg.len(), start.elapsed());

    let policy = MaskPolicy::new(DEFAULT_SENTINEL, RoleChoice::Random, 1).unwrap();
    let start = Instant::now();
    let mut emitted = 0usize;
    for (i, t) in kg.triples().iter().enumerate() {
        emitted += mask_triple(t, &policy, &mut record_rng(1, i as u64)).len();
    }
    let secs = start.elapsed().as_secs_f64();
    println!("mask:  {:>10.0} triples/s ({emitted} examples in {secs:.2}s)", emitted as f64 / secs);

    let records: Vec<(String, Vec<Triple>)> = (0..n_sentences)
        .map(|i| {
            let a = kg.triples()[(i * 17) % graph_size].clone();
            let b = kg.triples()[(i * 31 + 5) % graph_size].clone();
            let sentence = format!(
                "In {}, {} was recognised for {} after a long career, alongside {}.",
                1900 + i % 120,
                a.subject(),
                a.object(),
                b.object()
            );
            (sentence, vec![a, b])
        })
        .collect();

    let start = Instant::now();
    let mut matched = 0usize;
    for (s, ts) in &records {
        matched += usize::from(match_record(s, ts.clone()).is_matched());
    }
    let secs = start.elapsed().as_secs_f64();
    println!("match: {:>10.0} sentences/s ({matched}/{n_sentences} matched in {secs:.2}s)", n_sentences as f64 / secs);

    // one automaton over a fixed entity list, many sentences
    let entities: Vec<&str> = kg.triples().iter().take(2_000).map(|t| t.object()).collect();
    let matcher = EntityMatcher::new(&entities);
    let start = Instant::now();
    let mut hits = 0usize;
    for (s, _) in records.iter().take(20_000) {
        hits += matcher.find_all(s).iter().filter(|v| !v.is_empty()).count();
    }
    let secs = start.elapsed().as_secs_f64();
    println!("multi: {:>10.0} sentences/s against {} entities ({hits} hits)", 20_000.0 / secs, entities.len());
}
