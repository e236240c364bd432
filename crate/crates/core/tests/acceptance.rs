//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use deae::bias_analysis::{
    apply_alt_prompts, identity_alt_prompts, robustness_delta, spurious_role_error_ratio, syntactic_match_ratio,
    AltPrompt,
};
use deae::corpus::{zero_shot_split, DependencyParse, EventOntology, Split, TriggerSpan};
use deae::evaluation::{evaluate, predict};
use deae::model::{
    decode_spans, extract, InstanceBatchItem, InstancePredictions, ModelConfig, Prediction, PromptInput,
    SpanDistributions, ToyModel,
};
use deae::prompts::{build_prompt, normalize_cluster_weights, ClusterSource, PromptCluster, PromptStyle};
use deae::synthetic::{learnable_corpus, ten_type_corpus, write_fixture_dir, SyntheticSpec};
use deae::training::{init_model, mean_loss, prepare_items, train, TrainConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, format!("took {:?}, limit {limit:?}", start.elapsed()))
}

fn same_bits(a: &InstancePredictions, b: &InstancePredictions) -> bool {
    a.predictions.len() == b.predictions.len()
        && a.predictions
            .iter()
            .zip(&b.predictions)
            .all(|(x, y)| x.role == y.role && x.span == y.span && x.score.to_bits() == y.score.to_bits())
}

fn mixture_boundaries() -> Outcome {
    let start = Instant::now();
    let corpus = learnable_corpus(SyntheticSpec {
        train: 50,
        dev: 0,
        test: 0,
        seed: 11,
    })
    .map_err(|e| e.to_string())?;
    let stub = ClusterSource::Stub { k: 4, seed: 5 };
    let base = init_model(ModelConfig { h: 16, ..Default::default() }, &corpus, &stub).map_err(|e| e.to_string())?;
    let mut at_zero = base.config.clone();
    at_zero.lambda = 0.0;
    let mut checked = 0;
    for inst in &corpus.instances {
        let doc = corpus.document(&inst.doc_id).unwrap();
        let ont = corpus.ontology(&inst.event_type).unwrap();
        let prompt = build_prompt(ont, PromptStyle::OntologyBased);
        let cluster = stub.cluster_for(inst, &corpus).unwrap().unwrap();
        let alone = PromptInput { prompt: &prompt, cluster: None };
        let with_cluster = PromptInput { prompt: &prompt, cluster: Some(&cluster) };
        let baseline = extract(&base, doc, inst, ont, alone, &base.config).unwrap();
        let lambda_one = extract(&base, doc, inst, ont, with_cluster, &base.config).unwrap();
        ensure(same_bits(&baseline, &lambda_one), format!("lambda=1 differs on {}", inst.key()))?;

        let member = cluster.prompts[1].clone();
        let singleton = PromptCluster::new(inst.key(), vec![member.clone()], vec![cluster.logliks[1]]).unwrap();
        let mixed = extract(
            &base,
            doc,
            inst,
            ont,
            PromptInput { prompt: &prompt, cluster: Some(&singleton) },
            &at_zero,
        )
        .unwrap();
        let direct = extract(&base, doc, inst, ont, PromptInput { prompt: &member, cluster: None }, &base.config).unwrap();
        ensure(same_bits(&mixed, &direct), format!("lambda=0 singleton differs on {}", inst.key()))?;
        checked += 1;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("{checked} instances bit-identical in {:?}", start.elapsed()))
}

fn softmax_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_sum: f64 = 0.0;
    let mut worst_shift: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.random_range(1..=16);
        let scale = [1.0, 50.0, 1e4][case % 3];
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..=scale)).collect();
        if case % 10 == 0 {
            x[0] = if case % 20 == 0 { 1e4 } else { -1e4 };
        }
        let w = normalize_cluster_weights(&x).map_err(|e| e.to_string())?;
        ensure(w.iter().all(|v| v.is_finite() && *v >= 0.0), format!("bad weights for {x:?}"))?;
        worst_sum = worst_sum.max((w.iter().sum::<f64>() - 1.0).abs());
        let c = rng.random_range(-1e4..=1e4);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let ws = normalize_cluster_weights(&shifted).map_err(|e| e.to_string())?;
        for (a, b) in w.iter().zip(&ws) {
            worst_shift = worst_shift.max((a - b).abs());
        }
    }
    ensure(worst_sum <= 1e-9, format!("sum deviates by {worst_sum:e}"))?;
    ensure(worst_shift <= 1e-9, format!("shift changes weights by {worst_shift:e}"))?;
    Ok(format!("max |sum-1| {worst_sum:.1e}, max shift deviation {worst_shift:.1e}"))
}

fn gradient_check_criterion() -> Outcome {
    let start = Instant::now();
    let ont = EventOntology::new(
        "attack",
        vec!["attacker".into(), "target".into(), "instrument".into()],
        "attacker attacked the target with some instrument last night",
    )
    .unwrap();
    ensure(ont.template_tokens().len() == 9, "template must have 9 tokens")?;
    let tokens = words("yesterday the rebels attacked a convoy with rockets near the border .");
    ensure(tokens.len() == 12, "instance must have 12 tokens")?;
    let corpus = corpus_from(
        vec![ont],
        vec![("d0".into(), tokens, "attack", (3, 3), vec![arg("attacker", 2, 2), arg("target", 4, 5)])],
    );
    let stub = ClusterSource::Stub { k: 2, seed: 3 };
    let lambda = 0.6;
    let config = ModelConfig { h: 8, lambda, seed: 17, ..Default::default() };
    let model = init_model(config, &corpus, &stub).map_err(|e| e.to_string())?;
    let inst = &corpus.instances[0];
    let item = InstanceBatchItem::prepare(&corpus, inst, PromptStyle::OntologyBased, &stub, 512, lambda)
        .map_err(|e| e.to_string())?;
    let ont = corpus.ontology("attack").unwrap();
    let inputs = item.inputs(ont, lambda);
    let (_, _, assignment) = model.loss_and_grad(&inputs, &item.gold).map_err(|e| e.to_string())?;
    let (worst, name, k) = gradient_check(&model, &inputs, &assignment, 1e-5, 1e-6);
    ensure(worst <= 1e-4, format!("relative error {worst:e} at {name}[{k}]"))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{} scalars, max relative error {worst:.2e} in {:?}",
        model.params.num_scalars(),
        start.elapsed()
    ))
}

fn overfit_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 2e-2,
        weight_decay: 0.0,
        batch_size: 4,
        max_steps: 500,
        eval_every: 100,
        seed: 42,
        ..Default::default()
    }
}

fn overfit_oracle() -> Outcome {
    let start = Instant::now();
    let corpus = learnable_corpus(SyntheticSpec::default()).map_err(|e| e.to_string())?;
    ensure(corpus.split(Split::Train).count() == 20, "fixture must have 20 train instances")?;
    let none = ClusterSource::None;
    let run = || -> deae::Result<_> {
        let model = init_model(ModelConfig { h: 16, ..Default::default() }, &corpus, &none)?;
        let items = prepare_items(&model, &corpus, Split::Train, &none)?;
        let initial = mean_loss(&model, &corpus, &items)?;
        let outcome = train(model, &corpus, &none, &overfit_config())?;
        Ok((initial, outcome))
    };
    let (initial, first) = run().map_err(|e| e.to_string())?;
    let (_, second) = run().map_err(|e| e.to_string())?;
    ensure(first.curve == second.curve, "loss curves differ between identical runs")?;
    ensure(first.checkpoint == second.checkpoint, "checkpoints differ between identical runs")?;
    let trained = ToyModel::from_checkpoint(first.checkpoint).map_err(|e| e.to_string())?;
    let items = prepare_items(&trained, &corpus, Split::Train, &none).map_err(|e| e.to_string())?;
    let loss = mean_loss(&trained, &corpus, &items).map_err(|e| e.to_string())?;
    let train_set: Vec<_> = corpus.split(Split::Train).collect();
    let preds = predict(&trained, &corpus, &train_set, &none).map_err(|e| e.to_string())?;
    let f1 = evaluate(&preds, &corpus, Some(Split::Train)).map_err(|e| e.to_string())?.arg_c.f1;
    ensure(loss < 0.05, format!("train loss {loss}"))?;
    ensure(loss < initial, "loss did not decrease")?;
    ensure(f1 == 1.0, format!("train Arg-C F1 {f1}"))?;
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "loss {initial:.3} -> {loss:.2e}, Arg-C F1 {f1}, deterministic, {:?} for two runs",
        start.elapsed()
    ))
}

fn pred(role: &str, span: Option<(usize, usize)>, score: f64) -> Prediction {
    Prediction { role: role.into(), span, score }
}

fn metric_oracle() -> Outcome {
    let ont = EventOntology::new("e", vec!["a".into(), "b".into(), "c".into()], "a met b in c").unwrap();
    let mini = corpus_from(
        vec![ont.clone()],
        vec![(
            "d".into(),
            words("w0 w1 w2 w3 w4 w5 w6"),
            "e",
            (1, 1),
            vec![arg("a", 0, 0), arg("b", 2, 3), arg("c", 5, 5)],
        )],
    );
    let preds = vec![InstancePredictions {
        doc_id: "d".into(),
        event_type: "e".into(),
        trigger: TriggerSpan { start: 1, end: 1 },
        predictions: vec![pred("a", Some((0, 0)), -0.1), pred("c", Some((2, 3)), -0.2), pred("b", None, -0.3)],
    }];
    let r = evaluate(&preds, &mini, None).map_err(|e| e.to_string())?;
    ensure((r.arg_i.f1 - 0.8).abs() < 1e-12, format!("Arg-I F1 {}", r.arg_i.f1))?;
    ensure((r.arg_c.f1 - 0.4).abs() < 1e-12, format!("Arg-C F1 {}", r.arg_c.f1))?;
    ensure(r.arg_i.precision == 1.0 && r.arg_c.precision == 0.5, "precision mismatch")?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let roles = ["a", "b", "c"];
    let mut instances = Vec::new();
    let mut all_preds = Vec::new();
    let (mut oracle_i, mut oracle_c) = (0, 0);
    for i in 0..200 {
        let n_gold = rng.random_range(0..=5);
        let mut gold = Vec::new();
        while gold.len() < n_gold {
            let s = rng.random_range(0..4);
            let a = arg(roles[rng.random_range(0..3)], s, s + rng.random_range(0..2));
            if !gold.contains(&a) {
                gold.push(a);
            }
        }
        let n_pred = rng.random_range(0..=5);
        let preds: Vec<Prediction> = (0..n_pred)
            .map(|_| {
                let s = rng.random_range(0..4);
                let span = (rng.random_range(0..5) > 0).then(|| (s, s + rng.random_range(0..2)));
                pred(roles[rng.random_range(0..3)], span, -(rng.random_range(0..4) as f64))
            })
            .collect();
        let p_spans: Vec<&Prediction> = preds.iter().filter(|p| p.span.is_some()).collect();
        oracle_i += max_matching(&p_spans, &gold, &|p, g| p.span == Some((g.start, g.end)));
        oracle_c += max_matching(&p_spans, &gold, &|p, g| p.span == Some((g.start, g.end)) && p.role == g.role);
        let doc = format!("r{i:03}");
        all_preds.push(InstancePredictions {
            doc_id: doc.clone(),
            event_type: "e".into(),
            trigger: TriggerSpan { start: 6, end: 6 },
            predictions: preds,
        });
        instances.push((doc, words("w0 w1 w2 w3 w4 w5 w6"), "e", (6, 6), gold));
    }
    let random = corpus_from(vec![ont], instances);
    let r = evaluate(&all_preds, &random, None).map_err(|e| e.to_string())?;
    ensure(r.counts.arg_i.tp == oracle_i, format!("Arg-I TP {} vs oracle {oracle_i}", r.counts.arg_i.tp))?;
    ensure(r.counts.arg_c.tp == oracle_c, format!("Arg-C TP {} vs oracle {oracle_c}", r.counts.arg_c.tp))?;
    Ok(format!("mini-set exact; 200 random instances agree (TP {oracle_i}/{oracle_c})"))
}

fn zero_shot_invariant() -> Outcome {
    let corpus = ten_type_corpus(4).map_err(|e| e.to_string())?;
    ensure(corpus.event_types().len() == 10, "fixture needs 10 event types")?;
    let multiset = |c: &deae::corpus::Corpus| {
        let mut v: Vec<String> = c
            .instances
            .iter()
            .map(|i| format!("{}|{:?}", i.key(), i.arguments))
            .collect();
        v.sort();
        v
    };
    for n in 4..=6 {
        let split = zero_shot_split(&corpus, n).map_err(|e| e.to_string())?;
        let seen: std::collections::BTreeSet<&str> = split
            .instances
            .iter()
            .filter(|i| i.split != Split::Test)
            .map(|i| i.event_type.as_str())
            .collect();
        let unseen: std::collections::BTreeSet<&str> = split
            .split(Split::Test)
            .map(|i| i.event_type.as_str())
            .collect();
        ensure(seen.is_disjoint(&unseen), format!("n={n}: seen and unseen overlap"))?;
        ensure(seen.len() == n && unseen.len() == 10 - n, format!("n={n}: {} seen types", seen.len()))?;
        ensure(multiset(&split) == multiset(&corpus), format!("n={n}: instance multiset changed"))?;
    }
    Ok("n = 4, 5, 6: disjoint types, multiset preserved".into())
}

fn bias_ratios() -> Outcome {
    // Spurious fixture: 4 predictions, one on a role without gold.
    let ont = EventOntology::new("e", vec!["a".into(), "b".into(), "c".into()], "a met b in c")
        .unwrap()
        .with_dep_labels(
            [("a", "nsubj"), ("b", "dobj"), ("c", "pobj")]
                .iter()
                .map(|(r, l)| (r.to_string(), l.to_string()))
                .collect(),
        );
    let toks = words("t0 t1 t2 t3 t4 t5");
    let corpus = corpus_from(
        vec![ont.clone()],
        vec![
            ("d1".into(), toks.clone(), "e", (1, 1), vec![arg("a", 0, 0), arg("b", 2, 2)]),
            ("d2".into(), toks.clone(), "e", (1, 1), vec![arg("a", 0, 0), arg("c", 4, 5)]),
        ],
    );
    let mk = |doc: &str, preds: Vec<Prediction>| InstancePredictions {
        doc_id: doc.into(),
        event_type: "e".into(),
        trigger: TriggerSpan { start: 1, end: 1 },
        predictions: preds,
    };
    let preds = vec![
        mk("d1", vec![pred("a", Some((0, 0)), 0.0), pred("b", Some((3, 3)), 0.0), pred("c", None, 0.0)]),
        mk("d2", vec![pred("b", Some((2, 2)), 0.0), pred("c", Some((4, 5)), 0.0), pred("a", None, 0.0)]),
    ];
    let r = spurious_role_error_ratio(&preds, &corpus).map_err(|e| e.to_string())?;
    let mut num = 0;
    let mut den = 0;
    for p in &preds {
        let inst = corpus.instances.iter().find(|i| i.doc_id == p.doc_id).unwrap();
        for role in &ont.roles {
            let has_gold = inst.arguments.iter().any(|a| &a.role == role);
            let count = p.predictions.iter().filter(|q| &q.role == role && q.span.is_some()).count();
            den += count;
            if !has_gold {
                num += count;
            }
        }
    }
    ensure(r.ratio == 0.25 && (r.numerator, r.denominator) == (num, den), format!("spurious {r:?} vs {num}/{den}"))?;

    // Syntactic fixture: 10 predictions, 6 whose span head carries the role's label.
    let labels: Vec<String> = words("nsubj ROOT dobj compound pobj prep pobj amod nsubj punct");
    let heads: Vec<i64> = vec![1, -1, 1, 4, 5, 1, 5, 8, 1, 1];
    let parse = DependencyParse { doc_id: "s".into(), labels: labels.clone(), heads: heads.clone() };
    let spans: [(&str, (usize, usize)); 10] = [
        ("a", (0, 0)), // nsubj = nsubj
        ("b", (2, 2)), // dobj = dobj
        ("c", (3, 4)), // head 4: pobj = pobj
        ("c", (6, 6)), // pobj = pobj
        ("a", (7, 8)), // head 8: nsubj = nsubj
        ("b", (4, 6)), // head 5: prep != dobj
        ("a", (2, 2)), // dobj != nsubj
        ("c", (9, 9)), // punct != pobj
        ("b", (2, 3)), // head 2: dobj = dobj
        ("c", (3, 6)), // head 5 (prep) != pobj
    ];
    let preds: Vec<InstancePredictions> = spans
        .iter()
        .map(|(r, s)| InstancePredictions {
            doc_id: "s".into(),
            event_type: "e".into(),
            trigger: TriggerSpan { start: 1, end: 1 },
            predictions: vec![pred(r, Some(*s), 0.0)],
        })
        .collect();
    let mut parses = std::collections::BTreeMap::new();
    parses.insert("s".to_string(), parse);
    let mut ontologies = std::collections::BTreeMap::new();
    ontologies.insert("e".to_string(), ont.clone());
    let r = syntactic_match_ratio(&preds, &parses, &ontologies).map_err(|e| e.to_string())?;
    let dep = ont.role_dep_labels.as_ref().unwrap();
    let brute = spans
        .iter()
        .filter(|(role, (s, e))| labels[head_oracle(&heads, *s, *e)] == dep[*role])
        .count();
    ensure(brute == 6, format!("fixture miscounted: {brute} matches"))?;
    ensure(r.ratio == 0.6 && r.numerator == brute && r.denominator == 10, format!("syntactic {r:?}"))?;
    Ok("spurious 0.25 and syntactic 0.6 match brute-force recounts".into())
}

fn decode_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sentinel_wins = 0;
    for case in 0..500 {
        let n = rng.random_range(1..=20);
        let max_len = rng.random_range(1..=10);
        let mut logits = |sentinel_boost: f64| -> Vec<f64> {
            let mut v: Vec<f64> = (0..=n)
                .map(|_| if case % 4 == 0 { rng.random_range(0..3) as f64 } else { rng.random_range(-3.0..3.0) })
                .collect();
            v[0] += sentinel_boost;
            let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = v.iter().map(|x| (x - m).exp()).sum();
            v.iter().map(|x| (x - m).exp() / z).collect()
        };
        let boost = if case % 5 == 0 { 4.0 } else { 0.0 };
        let dist = SpanDistributions { p_start: logits(boost), p_end: logits(boost) };
        let (expected, score) = brute_decode(&dist, max_len);
        let got = decode_spans(&[("r", &dist)], max_len).remove(0);
        let got_pair = got.span.unwrap_or((0, 0));
        ensure(
            got_pair == expected && got.score == score,
            format!("case {case}: decoded {got_pair:?}, oracle {expected:?}"),
        )?;
        if got.span.is_none() {
            sentinel_wins += 1;
        }
    }
    ensure(sentinel_wins > 0, "no sentinel outcome exercised")?;
    Ok(format!("500 cases agree ({sentinel_wins} sentinel outcomes)"))
}

fn robustness_identity() -> Outcome {
    let corpus = learnable_corpus(SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let stub = ClusterSource::Stub { k: 3, seed: 1 };
    let model = init_model(ModelConfig { h: 16, lambda: 0.8, ..Default::default() }, &corpus, &stub)
        .map_err(|e| e.to_string())?;
    let same = identity_alt_prompts(&corpus.ontologies);
    let r = robustness_delta(&model, &corpus, Split::Test, &same, &stub).map_err(|e| e.to_string())?;
    ensure(r.delta == 0.0 && r.raw == r.perturbed, format!("delta {} for identical prompts", r.delta))?;
    let mut broken = same.clone();
    broken[0] = AltPrompt {
        event_type: broken[0].event_type.clone(),
        template: "communicator communicated remotely with somebody at place".into(),
    };
    match apply_alt_prompts(&corpus, &broken) {
        Err(e) if e.to_string().contains("every argument name") => {}
        Err(e) => return Err(format!("wrong error for missing role: {e}")),
        Ok(_) => return Err("alt prompt missing a role was accepted".into()),
    }
    ensure(robustness_delta(&model, &corpus, Split::Test, &broken, &stub).is_err(), "harness ran anyway")?;
    Ok("delta = 0 for identical prompts; missing role rejected".into())
}

fn end_to_end_determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixtures = write_fixture_dir(root.path().join("data"), SyntheticSpec::default(), 3).map_err(|e| e.to_string())?;
    let run = |tag: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let out = root.path().join(tag);
        let p = |name: &str| out.join(name).display().to_string();
        let corpus = fixtures.corpus.display().to_string();
        let ontology = fixtures.ontology.display().to_string();
        let parses = fixtures.parses.display().to_string();
        let clusters = fixtures.clusters.display().to_string();
        let steps: Vec<Vec<String>> = vec![
            vec!["ingest", "--corpus", &corpus, "--ontology", &ontology, "--parses", &parses, "--out", &p("corpus.jsonl")],
            vec![
                "train", "--corpus", &p("corpus.jsonl"), "--ontology", &ontology, "--cluster-file", &clusters,
                "--lambda", "0.9", "--h", "12", "--max-steps", "50", "--eval-every", "25", "--learning-rate", "0.02",
                "--seed", "5", "--out", &p("run"),
            ],
            vec![
                "eval", "--ckpt", &p("run/checkpoint.json"), "--corpus", &p("corpus.jsonl"), "--ontology", &ontology,
                "--cluster-file", &clusters, "--split", "test", "--report", &p("eval.json"),
            ],
            vec![
                "eval", "--ckpt", &p("run/checkpoint.json"), "--corpus", &p("corpus.jsonl"), "--ontology", &ontology,
                "--split", "test", "--lambda", "1", "--report", &p("eval_plain.json"),
            ],
            vec![
                "analyze-bias", "--pred", &p("eval_plain.predictions.jsonl"), "--pred", &p("eval.predictions.jsonl"),
                "--gold", &p("corpus.jsonl"), "--ontology", &ontology, "--parses", &parses, "--report", &p("bias.json"),
            ],
        ]
        .into_iter()
        .map(|v| v.into_iter().map(String::from).collect())
        .collect();
        for args in steps {
            let code = deae::cli::dispatch(std::iter::once("deae".to_string()).chain(args.iter().cloned()));
            ensure(code == 0, format!("{} exited {code}", args[0]))?;
        }
        let files = [
            "corpus.jsonl",
            "run/checkpoint.json",
            "run/curve.jsonl",
            "run/summary.json",
            "eval.json",
            "eval.predictions.jsonl",
            "eval_plain.predictions.jsonl",
            "bias.json",
        ];
        files
            .iter()
            .map(|f| std::fs::read(out.join(f)).map(|b| (f.to_string(), b)).map_err(|e| format!("{f}: {e}")))
            .collect()
    };
    let a = run("first")?;
    let b = run("second")?;
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure(x == y, format!("{name} differs between runs"))?;
    }
    Ok(format!("{} output files byte-identical", a.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: Vec<Criterion> = vec![
        ("mixture boundary equivalence", mixture_boundaries),
        ("cluster softmax contract", softmax_contract),
        ("gradient check", gradient_check_criterion),
        ("overfit oracle", overfit_oracle),
        ("metric oracle", metric_oracle),
        ("zero-shot split invariant", zero_shot_invariant),
        ("bias ratios", bias_ratios),
        ("decode oracle", decode_oracle),
        ("robustness harness identity", robustness_identity),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
