use std::path::Path;

use deae::corpus::{load_ontologies, load_parses, Corpus, CorpusFormat, Split, TriggerSpan};
use deae::synthetic::{example_ontologies, write_fixture_dir, SyntheticSpec};
use deae::Error;

const COMM: &str = "contact.communicate";

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn generic_lines_keep_spans_and_splits() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "c.jsonl",
        concat!(
            r#"{"doc_id":"d1","tokens":["ann","called","bo","."],"event_type":"contact.communicate","trigger":{"start":1,"end":1},"arguments":[{"role":"communicator","start":0,"end":0},{"role":"recipient","start":2,"end":2,"head_index":2}],"split":"dev"}"#,
            "\n\n",
            r#"{"doc_id":"d2","tokens":["x","joined","y"],"event_type":"personnel.start","trigger":{"start":1,"end":1}}"#,
            "\n"
        ),
    );
    let corpus = Corpus::load(&path, CorpusFormat::Generic, example_ontologies()).unwrap();
    assert_eq!(corpus.instances.len(), 2);
    assert_eq!(corpus.instances[0].split, Split::Dev);
    assert_eq!(corpus.instances[0].arguments[1].head_index, Some(2));
    // No split field and no split-like filename: defaults to train.
    assert_eq!(corpus.instances[1].split, Split::Train);
    assert!(corpus.instances[1].arguments.is_empty());
    assert_eq!(corpus.trigger_text(&corpus.instances[0]).unwrap(), "called");
}

#[test]
fn directory_layout_tags_by_file_name() {
    let dir = tempfile::tempdir().unwrap();
    let line = |id: &str| {
        format!(
            r#"{{"doc_id":"{id}","tokens":["a","called","b"],"event_type":"{COMM}","trigger":{{"start":1,"end":1}}}}"#
        )
    };
    write(dir.path(), "train.jsonl", &line("t"));
    write(dir.path(), "dev.jsonl", &line("d"));
    write(dir.path(), "test.jsonl", &line("e"));
    let corpus = Corpus::load(dir.path(), CorpusFormat::Generic, example_ontologies()).unwrap();
    let tags: Vec<(&str, Split)> = corpus.instances.iter().map(|i| (i.doc_id.as_str(), i.split)).collect();
    assert_eq!(tags, vec![("t", Split::Train), ("d", Split::Dev), ("e", Split::Test)]);
}

#[test]
fn empty_directory_is_missing_data() {
    let dir = tempfile::tempdir().unwrap();
    let err = Corpus::load(dir.path(), CorpusFormat::Generic, example_ontologies()).unwrap_err();
    assert!(matches!(err, Error::Missing(_)), "{err}");
}

#[test]
fn rams_documents_flatten_sentences_and_strip_role_prefixes() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "dev.jsonlines",
        concat!(
            r#"{"doc_key":"r1","sentences":[["Ann","phoned","Bo","."],["In","Rome","."]],"#,
            r#""evt_triggers":[[1,1,[["contact.communicate",1.0]]]],"#,
            r#""gold_evt_links":[[[1,1],[0,0],"evt042arg01communicator"],[[1,1],[2,2],"evt042arg02recipient"],[[1,1],[5,5],"evt042arg03place"]]}"#,
            "\n"
        ),
    );
    let corpus = Corpus::load(&path, CorpusFormat::Rams, example_ontologies()).unwrap();
    assert_eq!(corpus.instances.len(), 1);
    let inst = &corpus.instances[0];
    assert_eq!(inst.split, Split::Dev);
    assert_eq!(corpus.documents["r1"].tokens.len(), 7);
    let roles: Vec<(&str, usize, usize)> =
        inst.arguments.iter().map(|a| (a.role.as_str(), a.start, a.end)).collect();
    assert_eq!(roles, vec![("communicator", 0, 0), ("recipient", 2, 2), ("place", 5, 5)]);
}

#[test]
fn wikievents_uses_exclusive_entity_ends_and_ignores_coreference() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "test.jsonl",
        concat!(
            r#"{"doc_id":"w1","tokens":["Acme","Corp","hired","Dana","in","Oslo","."],"#,
            r#""entity_mentions":[{"id":"e1","start":0,"end":2,"head":1},{"id":"e2","start":3,"end":4},{"id":"e3","start":5,"end":6}],"#,
            r#""event_mentions":[{"event_type":"personnel.start","trigger":{"start":2,"end":3},"#,
            r#""arguments":[{"entity_id":"e1","role":"placeofemployment"},{"entity_id":"e2","role":"employee"},{"entity_id":"e3","role":"place"},{"entity_id":"e2","role":"employee"}]}],"#,
            r#""coref_clusters":[["e1","e3"]]}"#,
            "\n"
        ),
    );
    let corpus = Corpus::load(&path, CorpusFormat::Wikievents, example_ontologies()).unwrap();
    let inst = &corpus.instances[0];
    assert_eq!(inst.split, Split::Test);
    assert_eq!(inst.trigger, TriggerSpan { start: 2, end: 2 });
    let args: Vec<(&str, usize, usize, Option<usize>)> = inst
        .arguments
        .iter()
        .map(|a| (a.role.as_str(), a.start, a.end, a.head_index))
        .collect();
    assert_eq!(
        args,
        vec![("placeofemployment", 0, 1, Some(1)), ("employee", 3, 3, None), ("place", 5, 5, None)]
    );
}

#[test]
fn unknown_event_types_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let rec = |t: &str| format!(r#"{{"doc_id":"{t}","tokens":["a"],"event_type":"{t}","trigger":{{"start":0,"end":0}}}}"#);
    let path = write(dir.path(), "c.jsonl", &format!("{}\n{}\n", rec("b.type"), rec("a.type")));
    match Corpus::load(&path, CorpusFormat::Generic, example_ontologies()).unwrap_err() {
        Error::UnknownEventType(types) => assert_eq!(types, vec!["a.type", "b.type"]),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn bad_records_report_file_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let good = format!(r#"{{"doc_id":"d","tokens":["a","called","b"],"event_type":"{COMM}","trigger":{{"start":1,"end":1}}}}"#);
    let cases = [
        (
            format!(r#"{{"doc_id":"d","tokens":["a","called","b"],"event_type":"{COMM}","trigger":{{"start":1,"end":1}},"arguments":[{{"role":"victim","start":0,"end":0}}]}}"#),
            "arguments[0].role",
        ),
        (
            format!(r#"{{"doc_id":"d","tokens":["a","called","b"],"event_type":"{COMM}","trigger":{{"start":1,"end":1}},"arguments":[{{"role":"recipient","start":0,"end":1,"head_index":2}}]}}"#),
            "arguments[0].head_index",
        ),
        (good.clone(), "trigger"),
        (
            format!(r#"{{"doc_id":"d","tokens":["other"],"event_type":"{COMM}","trigger":{{"start":0,"end":0}}}}"#),
            "doc_id",
        ),
    ];
    for (bad, field) in cases {
        let path = write(dir.path(), "c.jsonl", &format!("{good}\n{bad}\n"));
        match Corpus::load(&path, CorpusFormat::Generic, example_ontologies()).unwrap_err() {
            Error::Record { line, field: f, .. } => {
                assert_eq!(line, 2);
                assert_eq!(f, field);
            }
            other => panic!("unexpected {other}"),
        }
    }
}

#[test]
fn out_of_bounds_spans_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "c.jsonl",
        &format!(r#"{{"doc_id":"d","tokens":["a","b"],"event_type":"{COMM}","trigger":{{"start":1,"end":1}},"arguments":[{{"role":"place","start":1,"end":2}}]}}"#),
    );
    let err = Corpus::load(&path, CorpusFormat::Generic, example_ontologies()).unwrap_err();
    assert!(matches!(err, Error::OutOfBounds { start: 1, end: 2, len: 2, .. }), "{err}");
}

#[test]
fn fixture_directory_round_trips_through_the_generic_writer() {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_fixture_dir(dir.path(), SyntheticSpec::default(), 3).unwrap();
    let ontologies = load_ontologies(&paths.ontology).unwrap();
    let mut corpus = Corpus::load(&paths.corpus, CorpusFormat::Generic, ontologies.clone()).unwrap();
    corpus.attach_parses(load_parses(&paths.parses).unwrap()).unwrap();
    assert_eq!(corpus.parses.len(), corpus.documents.len());

    let copy = dir.path().join("copy.jsonl");
    corpus.write_jsonl(&copy).unwrap();
    let mut again = Corpus::load(&copy, CorpusFormat::Generic, ontologies).unwrap();
    again.parses = corpus.parses.clone();
    assert_eq!(again, corpus);

    let key = corpus.instances[0].key();
    assert_eq!(corpus.find(&key), Some(&corpus.instances[0]));
}

#[test]
fn misaligned_parse_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_fixture_dir(dir.path(), SyntheticSpec::default(), 3).unwrap();
    let mut corpus = Corpus::load(&paths.corpus, CorpusFormat::Generic, load_ontologies(&paths.ontology).unwrap()).unwrap();
    let doc = corpus.instances[0].doc_id.clone();
    let bad = write(dir.path(), "p.jsonl", &format!(r#"{{"doc_id":"{doc}","labels":["ROOT"],"heads":[-1]}}"#));
    assert!(corpus.attach_parses(load_parses(&bad).unwrap()).is_err());
    let stray = write(dir.path(), "q.jsonl", r#"{"doc_id":"nowhere","labels":["ROOT"],"heads":[-1]}"#);
    assert!(matches!(corpus.attach_parses(load_parses(&stray).unwrap()), Err(Error::Missing(_))));
}
