//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Criteria 5, 6 and 8 run the full `cwm pipeline` at seed 0 twice.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cwm_core::harness::{
    build_intrinsic_testset, eval_intrinsic, filter_episodes, heldout_episodes, run_filter_eval,
    score_intrinsic, Category, Condition, FilterConfig, IntrinsicInstance, SystemUnderTest,
    TestSetConfig, COMBINED,
};
use cwm_core::io::{read_json, read_jsonl};
use cwm_core::metrics::{
    auc_roc, garr_at_k, mrr, precision_at_1, rank_of_positive, safety_margin, score_gap,
    FilterReport, IntrinsicReport, ScoredCandidate, ScoredInstance, StepRecord,
};
use cwm_core::microworld::{init_episode, step, Episode, Family, FeedbackClass};
use cwm_core::negmine::{
    assemble_dataset, EpisodeRef, MiningConfig, NegType, NegativeSample, TrainingInstance,
};
use cwm_core::rng::derive_seed;
use cwm_core::scorer::{init_params, ScorerParams, Vocabulary};
use cwm_core::training::{infonce_loss, LossHyper, Mode, RegScope, TrainReport};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. closed forms

fn default_instance() -> TrainingInstance {
    let eps: Vec<Episode> = Family::ALL
        .iter()
        .map(|&f| init_episode(f, 0, 0).unwrap())
        .collect();
    let (insts, _) = assemble_dataset(&eps, &MiningConfig::default(), 0).unwrap();
    insts.into_iter().next().unwrap()
}

fn loss_closed_forms() -> Check {
    let uniform = infonce_loss(0.25, &[0.25; 16], 0.6).map_err(|e| e.to_string())?;
    let ln17 = 17f64.ln();
    ensure((uniform - ln17).abs() <= 1e-9, || {
        format!("infonce {uniform} vs ln 17")
    })?;

    let inst = default_instance();
    ensure(inst.negatives.len() == 16, || {
        "default instance lacks 16 negatives".into()
    })?;
    let zero = ScorerParams::zeros(Vocabulary::standard(), 64, 64);
    for scope in [RegScope::Interaction, RegScope::All] {
        let hyper = LossHyper {
            l2_scope: scope,
            ..LossHyper::default()
        };
        let total = zero.loss(&inst, &hyper).map_err(|e| e.to_string())?;
        ensure((total - (ln17 + 0.6)).abs() <= 1e-9, || {
            format!("total {total} vs ln 17 + 0.6")
        })?;
    }
    Ok(format!(
        "infonce = {uniform:.12}, total = {:.12}",
        ln17 + 0.6
    ))
}

// 2. gradient oracle

const WORDS: [&str; 12] = [
    "heat", "water", "pot", "stove", "open", "close", "door", "kitchen", "salt", "take", "fridge",
    "seed",
];

fn phrase(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.gen_range(lo..=hi);
    (0..n)
        .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_pair(rng: &mut ChaCha8Rng) -> (ScorerParams, TrainingInstance) {
    let mut p = init_params(
        rng.gen(),
        Vocabulary::from_words(WORDS),
        rng.gen_range(2..=5),
        rng.gen_range(2..=4),
    )
    .unwrap();
    let scale = rng.gen_range(1.0..12.0);
    for t in p.weights.slices_mut() {
        t.iter_mut()
            .for_each(|x| *x = *x * scale + rng.gen_range(-0.05..0.05));
    }
    let negatives = (0..rng.gen_range(1..=6))
        .map(|_| NegativeSample {
            surface: phrase(rng, 1, 3),
            neg_type: NegType::Rejected,
            source_family: None,
            edited_token_index: None,
        })
        .collect();
    let inst = TrainingInstance {
        schema_version: cwm_core::SCHEMA_VERSION,
        state_prompt: phrase(rng, 3, 10),
        positive: phrase(rng, 1, 3),
        negatives,
        episode_ref: EpisodeRef {
            family: Family::Boil,
            variation: 0,
            seed: 0,
            step: 0,
        },
    };
    (p, inst)
}

fn max_relative_error(p: &ScorerParams, inst: &TrainingInstance, hyper: &LossHyper) -> f64 {
    const STEP: f64 = 1e-4;
    let (_, grad) = p.loss_and_gradients(inst, hyper).unwrap();
    let analytic: Vec<f64> = grad.iter().collect();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    for t in 0..7 {
        for i in 0..p.weights.slices()[t].len() {
            let mut plus = p.clone();
            plus.weights.slices_mut()[t][i] += STEP;
            let mut minus = p.clone();
            minus.weights.slices_mut()[t][i] -= STEP;
            let numeric =
                (plus.loss(inst, hyper).unwrap() - minus.loss(inst, hyper).unwrap()) / (2.0 * STEP);
            let a = analytic[k];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
            k += 1;
        }
    }
    worst
}

fn gradient_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut summary = Vec::new();
    for mode in [Mode::Cwm, Mode::Sft] {
        let hyper = LossHyper {
            mode,
            ..LossHyper::default()
        };
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < 20 {
            let (p, inst) = random_pair(&mut rng);
            if mode == Mode::Cwm {
                // keep central differences off the margin hinge
                let pos = p.score(&inst.state_prompt, &inst.positive);
                let negs = p.score_many(
                    &inst.state_prompt,
                    &inst.negative_surfaces().collect::<Vec<_>>(),
                );
                let mean = negs.iter().sum::<f64>() / negs.len() as f64;
                if (hyper.gamma - pos + mean).abs() < 1e-2 {
                    continue;
                }
            }
            worst = worst.max(max_relative_error(&p, &inst, &hyper));
            done += 1;
        }
        ensure(worst <= 1e-4, || {
            format!("{} max relative error {worst:e}", mode.name())
        })?;
        summary.push(format!("{} max rel err {worst:.1e}", mode.name()));
    }
    Ok(summary.join(", "))
}

// 3. metric oracles

fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut credit = 0.0;
    for p in pos {
        for n in neg {
            credit += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    credit / (pos.len() * neg.len()) as f64
}

fn grid_scores(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let grid = rng.gen_range(2..40);
    (0..n)
        .map(|_| rng.gen_range(0..grid) as f64 * 0.25 - 3.0)
        .collect()
}

fn sorted_rank(pos: f64, negs: &[f64]) -> usize {
    let mut all: Vec<(f64, bool)> = negs.iter().map(|&s| (s, false)).collect();
    all.push((pos, true));
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    all.iter().position(|x| x.1).unwrap() + 1
}

fn record(scores: &[f64], gold: Option<usize>) -> StepRecord {
    let candidates = scores
        .iter()
        .enumerate()
        .map(|(i, &score)| ScoredCandidate {
            surface: format!("c{i}"),
            score,
        })
        .collect();
    StepRecord::new("e".into(), 0, "g".into(), candidates, gold)
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for f in 0..50 {
        let (np, nn) = (rng.gen_range(1..=200), rng.gen_range(1..=200));
        let (pos, neg) = if f % 2 == 0 {
            (grid_scores(&mut rng, np), grid_scores(&mut rng, nn))
        } else {
            (
                (0..np).map(|_| rng.gen_range(-5.0..5.0)).collect(),
                (0..nn).map(|_| rng.gen_range(-5.0..5.0)).collect(),
            )
        };
        let err = (auc_roc(&pos, &neg).unwrap() - brute_auc(&pos, &neg)).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12, || format!("auc fixture {f}: error {err:e}"))?;
    }
    for f in 0..100 {
        let insts: Vec<ScoredInstance> = (0..rng.gen_range(1..60))
            .map(|_| {
                let n = rng.gen_range(1..20);
                let s = grid_scores(&mut rng, n + 1);
                ScoredInstance::new(s[0], s[1..].to_vec())
            })
            .collect();
        let ranks: Vec<usize> = insts
            .iter()
            .map(|i| sorted_rank(i.positive_score, &i.negative_scores))
            .collect();
        let n = ranks.len() as f64;
        let p1 = ranks.iter().filter(|&&r| r == 1).count() as f64 / n;
        let rr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
        ensure(precision_at_1(&insts).unwrap() == p1, || {
            format!("P@1 fixture {f}")
        })?;
        ensure(mrr(&insts).unwrap() == rr, || format!("MRR fixture {f}"))?;
        let records: Vec<StepRecord> = insts
            .iter()
            .map(|i| {
                let mut s = vec![i.positive_score];
                s.extend(&i.negative_scores);
                record(&s, Some(0))
            })
            .collect();
        for k in [1, 5, 10, 20] {
            let want = ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
            ensure(garr_at_k(&records, k).unwrap() == Some(want), || {
                format!("GARR@{k} fixture {f}")
            })?;
        }
    }
    Ok(format!(
        "50 AUC fixtures (max error {worst:.1e}), 100 rank fixtures exact"
    ))
}

// 4. random baseline

fn random_baseline() -> Check {
    let eps = heldout_episodes(&Family::ALL, 1..5).map_err(|e| e.to_string())?;
    let ts =
        build_intrinsic_testset(&eps, &TestSetConfig::default(), 0).map_err(|e| e.to_string())?;
    let system = SystemUnderTest::random(derive_seed(0, "random"));
    let scored: Vec<ScoredInstance> = ts
        .instances
        .iter()
        .map(|i| score_intrinsic(&system, i))
        .collect();
    let pooled = scored.len()
        + scored
            .iter()
            .map(|s| s.negative_scores.len())
            .sum::<usize>();
    ensure(pooled >= 1000, || format!("only {pooled} pooled scores"))?;
    let report = eval_intrinsic(&system, &ts).map_err(|e| e.to_string())?;
    let combined = report.category(COMBINED).ok_or("no combined row")?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trials = 10_000;
    let mut hits = 0;
    for _ in 0..trials {
        let inst = &ts.instances[rng.gen_range(0..ts.instances.len())];
        let pos: f64 = rng.gen();
        if inst.negatives.iter().all(|_| rng.gen::<f64>() < pos) {
            hits += 1;
        }
    }
    let oracle = hits as f64 / trials as f64;
    let auc_ok = (0.47..=0.53).contains(&combined.auc_roc);
    let p1_ok = (combined.p_at_1 - oracle).abs() <= 0.03;
    let detail = format!(
        "{pooled} pooled scores, AUC {:.4}, P@1 {:.4} vs Monte-Carlo mean(1/c) {oracle:.4}",
        combined.auc_roc, combined.p_at_1
    );
    ensure(auc_ok && p1_ok, || detail.clone())?;
    Ok(detail)
}

// pipeline runs shared by 5, 6 and 8

struct PipelineRun {
    root: PathBuf,
    elapsed: Duration,
}

fn run_pipeline(root: &Path) -> Result<PipelineRun, String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_cwm"))
        .args(["pipeline", "--seed", "0", "--out"])
        .arg(root)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "pipeline failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(PipelineRun {
        root: root.to_path_buf(),
        elapsed: start.elapsed(),
    })
}

const BUDGET: Duration = Duration::from_secs(600);

fn training_convergence(run: &PipelineRun) -> Check {
    let report: TrainReport =
        read_json(&run.root.join("models/cwm-all/train-report.json")).map_err(|e| e.to_string())?;
    let kept = if report.best_epoch == 0 {
        report.initial_train_loss
    } else {
        report.train_loss[report.best_epoch - 1]
    };
    let reduction = 1.0 - kept / report.initial_train_loss;
    let intrinsic: IntrinsicReport = read_json(&run.root.join("eval/intrinsic/intrinsic-cwm.json"))
        .map_err(|e| e.to_string())?;
    let combined = intrinsic
        .category(COMBINED)
        .ok_or("no combined row")?
        .p_at_1;
    let rejection = intrinsic
        .category(Category::RejectionOnly.name())
        .ok_or("no rejection-only row")?
        .p_at_1;
    let detail = format!(
        "loss {:.4} -> {kept:.4} ({:.1}% lower, epoch {}), combined P@1 {:.4}, rejection-only P@1 {:.4}, pipeline {:.0}s",
        report.initial_train_loss,
        100.0 * reduction,
        report.best_epoch,
        combined,
        rejection,
        run.elapsed.as_secs_f64()
    );
    ensure(
        reduction >= 0.80 && combined >= 0.90 && rejection >= 0.95 && run.elapsed <= BUDGET,
        || detail.clone(),
    )?;
    Ok(detail)
}

const SYSTEMS: [&str; 4] = ["cwm", "sft", "untrained", "random"];

fn experiment_shape(run: &PipelineRun) -> Check {
    let expected = [
        (Category::RejectionOnly.name(), 225),
        (Category::CrossTask.name(), 306),
        (Category::MinimalEdit.name(), 74),
        (COMBINED, 605),
    ];
    let mut intrinsic = BTreeMap::new();
    for s in SYSTEMS {
        let r: IntrinsicReport =
            read_json(&run.root.join(format!("eval/intrinsic/intrinsic-{s}.json")))
                .map_err(|e| e.to_string())?;
        ensure(r.categories.len() == 4, || {
            format!("{s}: {} categories", r.categories.len())
        })?;
        for (cat, n) in expected {
            let m = r
                .category(cat)
                .ok_or_else(|| format!("{s}: no {cat} row"))?;
            ensure(m.n == n, || format!("{s} {cat}: n = {} not {n}", m.n))?;
            ensure(
                [m.p_at_1, m.mrr, m.auc_roc, m.score_gap]
                    .iter()
                    .all(|x| x.is_finite()),
                || format!("{s} {cat}: non-finite metric"),
            )?;
        }
        intrinsic.insert(s, r);
    }
    let table =
        fs::read_to_string(run.root.join("report/intrinsic.txt")).map_err(|e| e.to_string())?;
    for word in SYSTEMS
        .iter()
        .chain(["P@1", "MRR", "AUC-ROC", "score gap"].iter())
    {
        ensure(table.contains(word), || {
            format!("intrinsic table lacks {word}")
        })?;
    }

    let mut margins = BTreeMap::new();
    for cond in ["in-domain", "ood"] {
        for s in SYSTEMS {
            let r: FilterReport =
                read_json(&run.root.join(format!("eval/filter/filter-{cond}-{s}.json")))
                    .map_err(|e| e.to_string())?;
            let g: Vec<f64> = [1, 5, 10, 20]
                .iter()
                .map(|&k| {
                    r.metrics
                        .garr_at(k)
                        .ok_or_else(|| format!("{cond} {s}: no GARR@{k}"))
                })
                .collect::<Result<_, _>>()?;
            ensure(g.windows(2).all(|w| w[0] <= w[1]), || {
                format!("{cond} {s}: GARR not monotone {g:?}")
            })?;
            let m = r
                .metrics
                .safety_margin
                .ok_or_else(|| format!("{cond} {s}: no safety margin"))?;
            margins.insert((cond, s), m);
        }
    }
    let filter =
        fs::read_to_string(run.root.join("report/filter.txt")).map_err(|e| e.to_string())?;
    for word in [
        "GARR@1",
        "GARR@5",
        "GARR@10",
        "GARR@20",
        "safety margin",
        "in-domain",
        "ood",
    ] {
        ensure(filter.contains(word), || {
            format!("filter table lacks {word}")
        })?;
    }

    let me = |s: &str| {
        intrinsic[s]
            .category(Category::MinimalEdit.name())
            .unwrap()
            .p_at_1
            * 100.0
    };
    Ok(format!(
        "605 instances (225/306/74), 4 systems, both conditions; minimal-edit P@1 cwm {:.2} vs sft {:.2}; \
         in-domain margin cwm {:.3} vs sft {:.3}; ood margin cwm {:.3} vs sft {:.3}",
        me("cwm"),
        me("sft"),
        margins[&("in-domain", "cwm")],
        margins[&("in-domain", "sft")],
        margins[&("ood", "cwm")],
        margins[&("ood", "sft")],
    ))
}

// 7. invariance suite

fn dyadic(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-3200i32..3200) as f64 / 64.0
}

fn token_edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<&str> = a.split_whitespace().collect();
    let b: Vec<&str> = b.split_whitespace().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1];
        for (j, y) in b.iter().enumerate() {
            cur.push(
                (prev[j] + usize::from(x != y))
                    .min(prev[j + 1] + 1)
                    .min(cur[j] + 1),
            );
        }
        prev = cur;
    }
    prev[b.len()]
}

fn metric_invariance() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fixtures = 200;
    for f in 0..fixtures {
        let insts: Vec<ScoredInstance> = (0..rng.gen_range(1..20))
            .map(|_| {
                let n = rng.gen_range(1..12);
                ScoredInstance::new(dyadic(&mut rng), (0..n).map(|_| dyadic(&mut rng)).collect())
            })
            .collect();
        let steps: Vec<(Vec<f64>, Option<usize>)> = (0..rng.gen_range(1..15))
            .map(|_| {
                let s: Vec<f64> = (0..rng.gen_range(1..25))
                    .map(|_| dyadic(&mut rng))
                    .collect();
                let g = (rng.gen::<f64>() < 0.9).then(|| rng.gen_range(0..s.len()));
                (s, g)
            })
            .collect();
        let c = rng.gen_range(-64i32..64) as f64;
        let k = 2f64.powi(rng.gen_range(-4..5));
        let base_records: Vec<StepRecord> = steps.iter().map(|(s, g)| record(s, *g)).collect();
        let base_gap = score_gap(&insts).unwrap();
        let base_margin = safety_margin(&base_records).unwrap();
        let longest = steps.iter().map(|(s, _)| s.len()).max().unwrap();

        for (label, t, factor) in [("shift", (1.0, c), 1.0), ("scale", (k, 0.0), k)] {
            let map = |x: f64| x * t.0 + t.1;
            let moved: Vec<ScoredInstance> = insts
                .iter()
                .map(|i| {
                    ScoredInstance::new(
                        map(i.positive_score),
                        i.negative_scores.iter().map(|&x| map(x)).collect(),
                    )
                })
                .collect();
            let fail = || format!("{label} fixture {f}");
            for (a, b) in insts.iter().zip(&moved) {
                ensure(rank_of_positive(a) == rank_of_positive(b), fail)?;
            }
            ensure(
                precision_at_1(&insts).unwrap() == precision_at_1(&moved).unwrap(),
                fail,
            )?;
            ensure(mrr(&insts).unwrap() == mrr(&moved).unwrap(), fail)?;
            let pool = |xs: &[ScoredInstance]| -> (Vec<f64>, Vec<f64>) {
                (
                    xs.iter().map(|i| i.positive_score).collect(),
                    xs.iter().flat_map(|i| i.negative_scores.clone()).collect(),
                )
            };
            let ((p, n), (p2, n2)) = (pool(&insts), pool(&moved));
            ensure(auc_roc(&p, &n).unwrap() == auc_roc(&p2, &n2).unwrap(), fail)?;
            ensure(
                (score_gap(&moved).unwrap() - factor * base_gap).abs()
                    <= 1e-9 * (1.0 + base_gap.abs() * factor),
                fail,
            )?;

            let records: Vec<StepRecord> = steps
                .iter()
                .map(|(s, g)| record(&s.iter().map(|&x| map(x)).collect::<Vec<_>>(), *g))
                .collect();
            for kk in 1..=longest {
                ensure(
                    garr_at_k(&base_records, kk).unwrap() == garr_at_k(&records, kk).unwrap(),
                    fail,
                )?;
            }
            match (base_margin, safety_margin(&records).unwrap()) {
                (None, None) => {}
                (Some(a), Some(b)) => ensure(
                    (b - factor * a).abs() <= 1e-9 * (1.0 + a.abs() * factor),
                    fail,
                )?,
                _ => return Err(fail()),
            }
        }

        let mut prev = 0.0;
        for kk in 1..=longest {
            if let Some(g) = garr_at_k(&base_records, kk).unwrap() {
                ensure(g >= prev, || format!("GARR not monotone, fixture {f}"))?;
                prev = g;
            }
        }
        if base_records.iter().any(|r| !r.excluded) {
            ensure(
                garr_at_k(&base_records, longest).unwrap() == Some(1.0),
                || format!("GARR@max below 1, fixture {f}"),
            )?;
        }
    }
    Ok(fixtures)
}

fn invariance_suite(run: &PipelineRun) -> Check {
    let fixtures = metric_invariance()?;

    let testset: Vec<IntrinsicInstance> =
        read_jsonl(&run.root.join("testset/testset.jsonl")).map_err(|e| e.to_string())?;
    let mut edits = 0;
    for inst in testset
        .iter()
        .filter(|i| i.category == Category::MinimalEdit)
    {
        for n in &inst.negatives {
            ensure(token_edit_distance(&inst.positive, n) == 1, || {
                format!("{} vs {n}", inst.positive)
            })?;
            edits += 1;
        }
    }
    let train_eps: Vec<Episode> = Family::ALL
        .iter()
        .flat_map(|&f| (0..=6).map(move |v| init_episode(f, v, 0).unwrap()))
        .collect();
    let cfg = MiningConfig {
        include_type4: true,
        ..MiningConfig::default()
    };
    let (mined, _) = assemble_dataset(&train_eps, &cfg, 0).map_err(|e| e.to_string())?;
    for inst in &mined {
        for n in inst
            .negatives
            .iter()
            .filter(|n| n.neg_type == NegType::MinimalEdit)
        {
            ensure(token_edit_distance(&inst.positive, &n.surface) == 1, || {
                format!("{} vs {}", inst.positive, n.surface)
            })?;
            edits += 1;
        }
    }

    let mut steps = 0;
    for condition in [Condition::InDomain, Condition::Ood] {
        let cfg = FilterConfig::new(condition, 0);
        let eps = filter_episodes(&cfg).map_err(|e| e.to_string())?;
        for ep in &eps {
            let mut state = ep.initial_state.clone();
            for gold in &ep.gold_trajectory {
                let (next, fb) = step(&state, gold);
                ensure(fb.class == FeedbackClass::Effective, || {
                    format!(
                        "{} v{}: {} was {:?}",
                        ep.family, ep.variation, gold.surface, fb.class
                    )
                })?;
                state = next;
                steps += 1;
            }
        }
        run_filter_eval(&SystemUnderTest::random(0), &eps, &cfg).map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "{fixtures} shift/scale/monotonicity fixtures, {edits} minimal-edit negatives at distance 1, \
         {steps} teacher-forced steps all effective"
    ))
}

// 8. determinism

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn determinism(first: &PipelineRun, scratch: &Path) -> Check {
    let second = run_pipeline(&scratch.join("second"))?;
    let (a, b) = (tree(&first.root), tree(&second.root));
    let names = |t: &[(PathBuf, Vec<u8>)]| t.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
    ensure(names(&a) == names(&b), || {
        "output trees list different files".into()
    })?;
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure(x == y, || format!("{} differs", name.display()))?;
    }
    let checkpoints = a
        .iter()
        .filter(|x| x.0.extension().is_some_and(|e| e == "bin"))
        .count();
    let manifests = a
        .iter()
        .filter(|x| x.0.to_string_lossy().ends_with(".manifest.json"))
        .count();
    Ok(format!(
        "{} files identical across two runs ({checkpoints} checkpoints, {manifests} manifests)",
        a.len()
    ))
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let scratch = tempfile::TempDir::new().expect("temp dir");
    let mut results: Vec<(&str, Check)> = vec![
        ("1 loss closed forms", guarded(loss_closed_forms)),
        ("2 gradient oracle", guarded(gradient_oracle)),
        ("3 metric oracles", guarded(metric_oracles)),
        ("4 random baseline", guarded(random_baseline)),
    ];
    match run_pipeline(&scratch.path().join("first")) {
        Ok(run) => {
            results.push((
                "5 training convergence",
                guarded(|| training_convergence(&run)),
            ));
            results.push(("6 experiment shape", guarded(|| experiment_shape(&run))));
            results.push(("7 invariance suite", guarded(|| invariance_suite(&run))));
            results.push((
                "8 determinism",
                guarded(|| determinism(&run, scratch.path())),
            ));
        }
        Err(e) => {
            for name in [
                "5 training convergence",
                "6 experiment shape",
                "7 invariance suite",
                "8 determinism",
            ] {
                results.push((name, Err(e.clone())));
            }
        }
    }

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
