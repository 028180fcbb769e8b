//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

#[path = "../../chem/tests/common/mod.rs"]
mod chem_common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use fraglearn_chem::{is_isomorphic, parse_smiles, write_canonical, ChemError, Molecule};
use fraglearn_core::membership::shipped_class;
use fraglearn_core::metrics::{chamfer_distance, internal_diversity};
use fraglearn_core::objective::default_fingerprint;
use fraglearn_core::proxies::ProxyProvider;
use fraglearn_core::training::training_keys;
use fraglearn_core::tuning::FeedbackItem;
use fraglearn_core::{
    cuttable_bonds, decompose, evaluate, generate_batch, DecompositionConfig, GenerationConfig, LoopMode, MetricsConfig,
    Property, QParams, QTable, RunConfig, RunState, Session, Trainer,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Acrylates model trained for 50 epochs, shared by several criteria.
struct AcrylateRun {
    cfg: RunConfig,
    data: Vec<Molecule>,
    provider: ProxyProvider,
    state: RunState,
    generated: Vec<String>,
}

fn acrylate_run() -> AcrylateRun {
    let data = common::dataset("acrylates");
    let cfg = RunConfig { seed: 1, epochs: 50, ..RunConfig::default() };
    let provider = ProxyProvider::with_reference(&data);
    let mut state = RunState::new(&cfg).unwrap();
    Trainer { config: &cfg, dataset: &data, provider: &provider }.train(&mut state, 50).unwrap();
    let gen = GenerationConfig { batch_size: 1000, rng_seed: 1, ..cfg.generation };
    let generated = generate_batch(&state.qtable, &state.active_fragments().unwrap(), &gen)
        .unwrap()
        .into_iter()
        .map(|g| g.smiles)
        .collect();
    AcrylateRun { cfg, data, provider, state, generated }
}

fn acrylate_report(run: &AcrylateRun) -> fraglearn_core::EvaluationReport {
    let class = shipped_class("acrylates").unwrap();
    evaluate(&run.generated, &run.data, &MetricsConfig::default(), Some(&class), &run.provider).unwrap()
}

fn validity(run: &AcrylateRun) -> Check {
    let r = acrylate_report(run);
    ensure(r.count == 1000 && r.validity == 100.0, format!("{} generated, validity {:.1}%", r.count, r.validity))
}

fn novelty_uniqueness(run: &AcrylateRun) -> Check {
    let r = acrylate_report(run);
    ensure(r.novelty >= 95.0 && r.uniqueness >= 50.0, format!("novelty {:.1}%, uniqueness {:.1}%", r.novelty, r.uniqueness))
}

fn membership(run: &AcrylateRun) -> Check {
    let m = acrylate_report(run).membership.unwrap();
    ensure(m >= 40.0, format!("membership {m:.1}%"))
}

fn decomposition_oracle(run: &AcrylateRun) -> Check {
    let cfg = DecompositionConfig { k: 64, max_cuts: 6, explore_prob: 0.0, ..DecompositionConfig::default() };
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for q in [QTable::new(QParams::default()), run.state.qtable.clone()] {
        for m in common::all_molecules().iter().filter(|m| cuttable_bonds(m).len() <= 6) {
            let got = decompose(m, &q, &cfg).unwrap();
            let (cuts, keys) = common::oracle::argmax_decomposition(m, &q);
            let got_keys: Vec<String> = got.sorted_keys().iter().map(|s| s.to_string()).collect();
            if got.cut_bonds != cuts || got_keys != keys {
                mismatches.push(write_canonical(m).into_string());
            }
            checked += 1;
        }
    }
    ensure(mismatches.is_empty(), format!("{checked} decompositions checked, mismatches {mismatches:?}"))
}

fn warm_start() -> Check {
    let data = common::dataset("acrylates");
    let cfg = RunConfig::default();
    let provider = ProxyProvider::with_reference(&data);
    let mut state = RunState::new(&cfg).unwrap();
    let decomps = Trainer { config: &cfg, dataset: &data, provider: &provider }.warm_start(&mut state).unwrap();
    let allowed = training_keys(&decomps);
    let gen = GenerationConfig { epsilon_floor: false, batch_size: 1000, rng_seed: 4, ..cfg.generation };
    let batch = generate_batch(&state.qtable, &state.active_fragments().unwrap(), &gen).unwrap();
    let outside = batch.iter().flat_map(|g| &g.connections_used).filter(|k| !allowed.contains(*k)).count();
    ensure(batch.len() == 1000 && outside == 0, format!("{} molecules, {outside} connections outside training", batch.len()))
}

fn q_arithmetic() -> Check {
    let mut q = QTable::new(QParams { epsilon: 0.1, alpha: 0.5, ..QParams::default() });
    let key = fraglearn_core::ConnectionKey::new("[*:1]CO", 0, "[*:1]C", 0);
    let first = q.update(&key, 1.0);
    let second = q.update(&key, 1.0);
    let sequence = (first - 0.55).abs() < 1e-12 && (second - 0.775).abs() < 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut invariant = 0;
    for _ in 0..10_000 {
        let k = common::oracle::random_key(&mut rng);
        let s = k.swapped();
        let r = rng.gen_range(0.0..1.0);
        let v = q.update(&s, r);
        if k.is_normalized() && q.get(&k).map(|e| e.q) == Some(v) {
            invariant += 1;
        }
    }
    ensure(sequence && invariant == 10_000, format!("0.1 -> {first} -> {second}; {invariant}/10000 keys orientation invariant"))
}

fn metric_oracles() -> Check {
    let corpus = common::all_molecules();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for size in 1..=20 {
        for _ in 0..10 {
            let g: Vec<_> = corpus.choose_multiple(&mut rng, size).map(default_fingerprint).collect();
            let r: Vec<_> = corpus.choose_multiple(&mut rng, 12).map(default_fingerprint).collect();
            worst = worst.max((internal_diversity(&g) - common::oracle::diversity(&g)).abs());
            worst = worst.max((chamfer_distance(&g, &r) - common::oracle::chamfer(&g, &r)).abs());
        }
    }
    let train = common::dataset("acrylates");
    let own = evaluate(&common::smiles(&train), &train, &MetricsConfig::default(), None, &ProxyProvider::new()).unwrap();
    ensure(
        worst < 1e-12 && own.novelty == 0.0 && own.chamfer == 0.0,
        format!("max deviation {worst:e}; self novelty {}, self chamfer {}", own.novelty, own.chamfer),
    )
}

const ALPHABET: &[u8] = b"CNOSPBFIcnosp()=#123456789%[]+-@/\\.*:H0lr ";

fn parser_suite() -> Check {
    let corpus = common::parser_corpus();
    let distinct: BTreeSet<String> = common::smiles(&corpus).into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = 0;
    for m in &corpus {
        let written = write_canonical(m).into_string();
        let back = parse_smiles(&written).unwrap();
        if !is_isomorphic(m, &back) || write_canonical(&back).into_string() != written {
            failures += 1;
        }
        for _ in 0..100 {
            if write_canonical(&chem_common::permute(m, &mut rng)).into_string() != written {
                failures += 1;
            }
        }
    }
    let texts: Vec<String> = common::smiles(&corpus);
    let (mut rejected, mut crashes) = (0, 0);
    for i in 0..10_000 {
        let mut bytes = texts[i % texts.len()].as_bytes().to_vec();
        for _ in 0..rng.gen_range(1..5) {
            let c = ALPHABET[rng.gen_range(0..ALPHABET.len())];
            let at = rng.gen_range(0..=bytes.len());
            match rng.gen_range(0..4) {
                0 if at < bytes.len() => {
                    bytes.remove(at);
                }
                1 if at < bytes.len() => bytes[at] = c,
                2 => bytes.truncate(at),
                _ => bytes.insert(at, c),
            }
        }
        let text = String::from_utf8(bytes).unwrap();
        match catch_unwind(|| parse_smiles(&text)) {
            Ok(Ok(_)) => {}
            Ok(Err(ChemError::Syntax { .. } | ChemError::UnsupportedFeature { .. } | ChemError::Valence { .. } | ChemError::MultiComponent)) => {
                rejected += 1
            }
            Ok(Err(_)) | Err(_) => crashes += 1,
        }
    }
    ensure(
        distinct.len() == 200 && failures == 0 && crashes == 0,
        format!("{} molecules, {failures} round-trip/permutation failures, 10000 mutations: {rejected} typed rejections, {crashes} crashes", distinct.len()),
    )
}

fn closed_loop() -> Check {
    let data = common::dataset("toy_drugs");
    let mut cfg = RunConfig { seed: 1, epochs: 20, ..RunConfig::default() };
    cfg.objective.preset = "drug_like".into();
    cfg.round.generate = 2000;
    cfg.tuning.chemist.persona = vec![FeedbackItem::SetThreshold { property: Property::Mw, value: 300.0 }];
    cfg.tuning.chemist.diversity_floor = 0.95;
    let state = RunState::new(&cfg).unwrap();
    let mut s = Session::new(cfg, data, state, LoopMode::AgentAgent);
    let mut mw = Vec::new();
    for _ in 0..3 {
        mw.push(s.start_round(None).unwrap().mean_mw(50));
    }
    let version = s.spec().version;
    ensure(
        mw[0] > mw[1] && mw[1] > mw[2] && version >= 3,
        format!("top-50 mean MW {:.1} -> {:.1} -> {:.1}, objective version {version}", mw[0], mw[1], mw[2]),
    )
}

fn resume(run: &AcrylateRun) -> Check {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    let trainer = Trainer { config: &run.cfg, dataset: &run.data, provider: &run.provider };
    let mut half = RunState::new(&run.cfg).unwrap();
    trainer.train(&mut half, 25).unwrap();
    half.persist(&path).unwrap();
    let mut resumed = RunState::restore(&path).unwrap();
    trainer.train(&mut resumed, 25).unwrap();
    let (a, b) = (run.state.digest(), resumed.digest());
    ensure(a == b, format!("digest {} vs {}", &a[..16], &b[..16]))
}

fn main() {
    let start = Instant::now();
    let run = acrylate_run();
    println!("trained acrylates for 50 epochs in {:.1?}", start.elapsed());
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Check + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("validity", Box::new(|| validity(&run))),
        ("novelty and uniqueness", Box::new(|| novelty_uniqueness(&run))),
        ("membership", Box::new(|| membership(&run))),
        ("decomposition oracle", Box::new(|| decomposition_oracle(&run))),
        ("warm-start reconstruction", Box::new(warm_start)),
        ("q arithmetic", Box::new(q_arithmetic)),
        ("metric oracles", Box::new(metric_oracles)),
        ("parser suite", Box::new(parser_suite)),
        ("closed loop", Box::new(closed_loop)),
        ("resume equivalence", Box::new(|| resume(&run))),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {name}: {detail} ({:.1?})", t.elapsed());
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
