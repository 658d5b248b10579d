//! Reference checks any build can run on itself.

use kgcorpus::masker::{mask_sentence, mask_triple, record_rng, DEFAULT_SENTINEL};
use kgcorpus::mixer::epochs;
use kgcorpus::{match_record, MaskPolicy, Rational, RoleChoice, Scalar, TrainConfig, Triple};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

const KELM_SENTENCE: &str = "Quentin Tarantino won the Palme d'Or in 1994 for Pulp Fiction.";

fn check(name: &'static str, got: String, want: &str) -> Check {
    Check { name, passed: got == want, detail: format!("got {got:?}, want {want:?}") }
}

fn pulp() -> Triple {
    Triple::new("Pulp Fiction", "award received", "Palme d'Or").expect("valid triple")
}

fn policy(role: RoleChoice) -> MaskPolicy {
    MaskPolicy::new(DEFAULT_SENTINEL, role, 0).expect("valid sentinel")
}

fn epoch_check(name: &'static str, corpus_size: u64, want: f64) -> Check {
    let cfg = TrainConfig {
        steps: 500_000,
        batch_size: 1024,
        mix_fraction: Rational::new(1, 2),
        corpus_size,
    };
    let got = epochs(&cfg).map(|e| e.to_f64_lossy()).unwrap_or(f64::NAN);
    Check { name, passed: (got - want).abs() <= 0.005, detail: format!("got {got:.4}, want {want} ± 0.005") }
}

pub fn run() -> Vec<Check> {
    let mut rng = record_rng(0, 0);
    let object = mask_triple(&pulp(), &policy(RoleChoice::Object), &mut rng);
    let subject = mask_triple(&pulp(), &policy(RoleChoice::Subject), &mut rng);
    let m = match_record(KELM_SENTENCE, vec![pulp()]);
    let sentence = mask_sentence(&m, &policy(RoleChoice::Object), &mut rng);
    let pair = |e: Option<&kgcorpus::MaskedExample>| {
        e.map_or_else(|| "<none>".to_string(), |e| format!("{} => {}", e.input, e.target))
    };
    vec![
        check(
            "triple, object masked",
            pair(object.first()),
            "Pulp Fiction, award received, [MASK] => Palme d'Or",
        ),
        check(
            "triple, subject masked",
            pair(subject.first()),
            "[MASK], award received, Palme d'Or => Pulp Fiction",
        ),
        check(
            "sentence, object masked",
            pair(sentence.as_ref()),
            "Quentin Tarantino won the [MASK] in 1994 for Pulp Fiction. => Palme d'Or",
        ),
        epoch_check("epochs over the triple corpus", 35_697_715, 7.17),
        epoch_check("epochs over the sentence corpus", 15_628_486, 16.38),
    ]
}
