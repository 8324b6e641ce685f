mod common;

use sentasm::disassembly::Degenerate;
use sentasm::ingest::{self, write_conllu, Task};
use sentasm::jsonl::{read_jsonl, to_jsonl_string, TemplateRecord};
use sentasm::{disassemble, DerivationTemplate};

#[test]
fn fixture_corpus_reassembles_exactly() {
    let corpus = common::corpus();
    assert!(corpus.len() >= 50, "only {} sentences", corpus.len());
    let mut checked = 0;
    let mut degenerate = Vec::new();
    for s in corpus.iter() {
        let t = disassemble(s).unwrap();
        match t.degenerate {
            None => {
                assert_eq!(t.render_all_originals(), s.text, "{}", s.id);
                checked += 1;
            }
            Some(reason) => {
                assert!(t.slots.is_empty());
                degenerate.push((s.id.clone(), reason));
            }
        }
    }
    assert_eq!(degenerate, [("m03".to_string(), Degenerate::NoSubject)]);
    assert_eq!(checked, corpus.len() - 1);
}

#[test]
fn seed_capitalization_moves_with_the_first_word() {
    let corpus = common::corpus();
    let base = |id: &str| disassemble(corpus.get(id).unwrap()).unwrap().render_base();
    assert_eq!(base("sa06"), "The story never recovers from its weak opening.");
    assert_eq!(base("m05"), "The man walked to the station.");
    assert_eq!(base("m04"), "The cat died.");
    assert_eq!(base("sa01"), "It's a attempt.");
    assert_eq!(base("ss01"), "Why did Trump purge members?");
}

#[test]
fn conllu_writer_round_trips_the_fixture() {
    let text = std::fs::read_to_string(common::fixture("corpus.conllu")).unwrap();
    let parsed = ingest::parse_conllu(&text).unwrap();
    assert_eq!(ingest::parse_conllu(&write_conllu(&parsed)).unwrap(), parsed);
}

#[test]
fn template_records_round_trip() {
    let corpus = common::corpus();
    let templates: Vec<DerivationTemplate> = corpus.iter().map(|s| disassemble(s).unwrap()).collect();
    let records: Vec<TemplateRecord> = templates.iter().map(TemplateRecord::from).collect();
    let back: Vec<TemplateRecord> = read_jsonl(&to_jsonl_string(&records)).unwrap();
    assert_eq!(back, records);
    let jax = records.iter().find(|r| r.id == "p2s1").unwrap();
    assert_eq!(jax.template, "[1], Downtown Jacksonville was ravaged by a fire [2].");
    assert_eq!(jax.slots.len(), 2);
}

#[test]
fn seed_datasets_load_against_the_corpus() {
    let corpus = common::corpus();
    let mrc = ingest::load_seed_dataset(Task::Mrc, &common::fixture("mrc.json"), &corpus).unwrap();
    let sa = ingest::load_seed_dataset(Task::Sa, &common::fixture("sa.tsv"), &corpus).unwrap();
    let ssm = ingest::load_seed_dataset(Task::Ssm, &common::fixture("ssm.tsv"), &corpus).unwrap();
    assert_eq!((mrc.len(), sa.len(), ssm.len()), (20, 20, 20));
    let (lexicon, report) = ingest::load_lexicon(&common::fixture("lexicon.tsv")).unwrap();
    assert!(lexicon.len() > 90);
    assert_eq!(report.skipped_empty, 1);
    let vectors = ingest::load_embeddings(&common::fixture("embeddings.txt")).unwrap();
    assert_eq!(vectors.dim(), 16);
}
