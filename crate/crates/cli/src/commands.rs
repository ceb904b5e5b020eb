//! One function per subcommand. Each reads its inputs, writes its outputs into
//! an output directory and finishes with a manifest.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cwm_core::harness::{
    build_intrinsic_testset, eval_intrinsic, filter_episodes, run_filter_eval, Condition,
    FilterConfig, IntrinsicInstance, IntrinsicTestSet, SystemKind, SystemUnderTest, TestSetConfig,
};
use cwm_core::io::{from_jsonl, to_json_pretty, to_jsonl};
use cwm_core::metrics::{
    render_filter_table, render_intrinsic_table, FilterReport, IntrinsicReport, DEFAULT_KS,
};
use cwm_core::microworld::episode::MAX_VARIATION;
use cwm_core::microworld::{init_episode, Episode, EpisodeRecord, Family};
use cwm_core::negmine::{assemble_dataset, MiningConfig, TrainingInstance};
use cwm_core::rng::{derive_seed, digest_hex};
use cwm_core::scorer::{load_checkpoint, save_checkpoint, Provenance};
use cwm_core::training::{train, Mode, TrainConfig};

use crate::manifest::OutDir;

/// A bad flag, missing input or invalid config: exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    if !path.is_file() {
        return Err(usage(format!(
            "input file {} does not exist",
            path.display()
        )));
    }
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

/// Parsed config plus the digest of its effective JSON form.
fn load_config<T>(path: Option<&Path>, out: &mut OutDir) -> Result<(T, String)>
where
    T: DeserializeOwned + Serialize + Default,
{
    let config = match path {
        None => T::default(),
        Some(p) => {
            let bytes = read_input(p)?;
            out.input("config", p, &bytes);
            serde_json::from_slice(&bytes)
                .map_err(|e| usage(format!("config {}: {e}", p.display())))?
        }
    };
    let digest = digest_hex(&serde_json::to_vec(&config)?);
    Ok((config, digest))
}

fn jsonl_input<T: DeserializeOwned>(role: &str, path: &Path, out: &mut OutDir) -> Result<Vec<T>> {
    let bytes = read_input(path)?;
    out.input(role, path, &bytes);
    Ok(from_jsonl(&bytes, &path.display().to_string())?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySet(pub Vec<Family>);

pub fn parse_families(s: &str) -> std::result::Result<FamilySet, String> {
    match s {
        "all" => return Ok(FamilySet(Family::ALL.to_vec())),
        "in-domain" => return Ok(FamilySet(Family::IN_DOMAIN.to_vec())),
        "ood" => return Ok(FamilySet(Family::OOD.to_vec())),
        _ => {}
    }
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim) {
        let f: Family = name.parse().map_err(|e: cwm_core::Error| e.to_string())?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(FamilySet(out))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variations(pub Vec<u32>);

/// `0-9`, `7` or `0,2,4`.
pub fn parse_variations(s: &str) -> std::result::Result<Variations, String> {
    let num = |t: &str| -> std::result::Result<u32, String> {
        let v: u32 = t
            .trim()
            .parse()
            .map_err(|_| format!("bad variation {t:?}"))?;
        if v > MAX_VARIATION {
            return Err(format!("variation {v} out of range 0-{MAX_VARIATION}"));
        }
        Ok(v)
    };
    let mut out = BTreeSet::new();
    for part in s.split(',') {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty variation range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(num(part)?);
            }
        }
    }
    Ok(Variations(out.into_iter().collect()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ks(pub Vec<usize>);

pub fn parse_ks(s: &str) -> std::result::Result<Ks, String> {
    let ks: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad K {t:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if ks.contains(&0) {
        return Err("K must be positive".into());
    }
    Ok(Ks(ks))
}

#[derive(Args, Debug, Clone)]
pub struct GenData {
    /// Comma-separated family names, or `all`, `in-domain`, `ood`.
    #[arg(long, default_value = "all", value_parser = parse_families)]
    pub families: FamilySet,
    /// Range `a-b` or comma list, within 0-9.
    #[arg(long, default_value = "0-9", value_parser = parse_variations)]
    pub variations: Variations,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generate seeds `seed .. seed + seed_count` for every (family, variation).
    #[arg(long, default_value_t = 1)]
    pub seed_count: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn gen_data(args: &GenData) -> Result<PathBuf> {
    if args.seed_count == 0 {
        return Err(usage("--seed-count must be positive"));
    }
    let mut out = OutDir::create(&args.out, "gen-data")?;
    let mut records = Vec::new();
    for seed in args.seed..args.seed + args.seed_count {
        for &family in &args.families.0 {
            for &v in &args.variations.0 {
                records.push(init_episode(family, v, seed)?.export()?);
            }
        }
    }
    let path = out.write("episodes.jsonl", &to_jsonl(&records)?)?;
    let params = serde_json::json!({
        "families": args.families.0,
        "variations": args.variations.0,
        "seed_count": args.seed_count,
    });
    out.finish(args.seed, digest_hex(&serde_json::to_vec(&params)?))?;
    println!("gen-data: {} episodes -> {}", records.len(), path.display());
    Ok(path)
}

fn restore_episodes(records: &[EpisodeRecord]) -> Result<Vec<Episode>> {
    records
        .iter()
        .map(|r| r.restore().map_err(anyhow::Error::from))
        .collect()
}

#[derive(Args, Debug, Clone)]
pub struct Mine {
    #[arg(long)]
    pub episodes: PathBuf,
    /// JSON mining config; defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Keep only these families before mining (also restricts the cross-task pool).
    #[arg(long, default_value = "all", value_parser = parse_families)]
    pub families: FamilySet,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn mine(args: &Mine) -> Result<PathBuf> {
    let mut out = OutDir::create(&args.out, "mine")?;
    let (config, mut digest): (MiningConfig, _) = load_config(args.config.as_deref(), &mut out)?;
    config.validate().map_err(|e| usage(e.to_string()))?;
    let records: Vec<EpisodeRecord> = jsonl_input("episodes", &args.episodes, &mut out)?;
    let episodes: Vec<Episode> = restore_episodes(&records)?
        .into_iter()
        .filter(|e| args.families.0.contains(&e.family))
        .collect();
    if episodes.is_empty() {
        bail!(
            "no episodes of the selected families in {}",
            args.episodes.display()
        );
    }
    let (instances, stats) = assemble_dataset(&episodes, &config, args.seed)?;
    let path = out.write("instances.jsonl", &to_jsonl(&instances)?)?;
    out.write("mining-stats.json", &to_json_pretty(&stats)?)?;
    let fams: Vec<&str> = args.families.0.iter().map(|f| f.name()).collect();
    digest = digest_hex(format!("{digest}/{}", fams.join(",")).as_bytes());
    out.finish(args.seed, digest)?;
    println!(
        "mine: {} instances from {} steps ({} skipped) -> {}",
        stats.instances,
        stats.steps,
        stats.skipped,
        path.display()
    );
    Ok(path)
}

#[derive(Args, Debug, Clone)]
pub struct BuildTestset {
    /// Episodes from held-out variations only.
    #[arg(long)]
    pub episodes: PathBuf,
    /// JSON with category targets and the negative cap.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn build_testset(args: &BuildTestset) -> Result<PathBuf> {
    let mut out = OutDir::create(&args.out, "build-testset")?;
    let (config, digest): (TestSetConfig, _) = load_config(args.config.as_deref(), &mut out)?;
    let records: Vec<EpisodeRecord> = jsonl_input("episodes", &args.episodes, &mut out)?;
    let episodes = restore_episodes(&records)?;
    let testset = build_intrinsic_testset(&episodes, &config, args.seed)?;
    let path = out.write("testset.jsonl", &to_jsonl(&testset.instances)?)?;
    out.write("testset-counts.json", &to_json_pretty(&testset.counts())?)?;
    out.finish(args.seed, digest)?;
    println!(
        "build-testset: {} instances {:?} -> {}",
        testset.instances.len(),
        testset.counts(),
        path.display()
    );
    Ok(path)
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Cwm,
    Sft,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Cwm => Mode::Cwm,
            ModeArg::Sft => Mode::Sft,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Train {
    /// Training instances (JSONL).
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out instances used for early stopping (JSONL).
    #[arg(long)]
    pub heldout: PathBuf,
    /// Overrides the config's mode.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// JSON training config; defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub const CHECKPOINT: &str = "checkpoint.bin";

pub fn train_cmd(args: &Train) -> Result<PathBuf> {
    let mut out = OutDir::create(&args.out, "train")?;
    let (mut config, _): (TrainConfig, _) = load_config(args.config.as_deref(), &mut out)?;
    if let Some(m) = args.mode {
        config.mode = m.into();
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    let data_bytes = read_input(&args.data)?;
    let heldout_bytes = read_input(&args.heldout)?;
    out.input("data", &args.data, &data_bytes);
    out.input("heldout", &args.heldout, &heldout_bytes);
    let data: Vec<TrainingInstance> = from_jsonl(&data_bytes, &args.data.display().to_string())?;
    let heldout: Vec<TrainingInstance> =
        from_jsonl(&heldout_bytes, &args.heldout.display().to_string())?;

    let (params, report) = train(&data, &heldout, &config)?;
    let families: BTreeSet<Family> = data.iter().map(|i| i.episode_ref.family).collect();
    let provenance = Provenance {
        mode: Some(config.mode),
        seed: config.seed,
        trained_families: families.into_iter().collect(),
        data_digest: Some(digest_hex(&data_bytes)),
    };
    let path = out.write(CHECKPOINT, &save_checkpoint(&params, &provenance)?)?;
    out.write("train-report.json", &to_json_pretty(&report)?)?;
    out.finish(config.seed, digest_hex(&serde_json::to_vec(&config)?))?;
    println!(
        "train: {} mode, {} epochs ({:?}), best epoch {}, loss {:.4} -> {:.4} -> {}",
        config.mode,
        report.stop_epoch,
        report.stop_reason,
        report.best_epoch,
        report.initial_train_loss,
        report
            .train_loss
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
        path.display()
    );
    Ok(path)
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemArg {
    Cwm,
    Sft,
    Untrained,
    Random,
}

impl From<SystemArg> for SystemKind {
    fn from(s: SystemArg) -> SystemKind {
        match s {
            SystemArg::Cwm => SystemKind::Cwm,
            SystemArg::Sft => SystemKind::Sft,
            SystemArg::Untrained => SystemKind::Untrained,
            SystemArg::Random => SystemKind::Random,
        }
    }
}

fn resolve_system(
    kind: SystemKind,
    checkpoint: Option<&Path>,
    seed: u64,
    out: &mut OutDir,
) -> Result<SystemUnderTest> {
    match (kind.needs_checkpoint(), checkpoint) {
        (true, None) => Err(usage(format!(
            "--checkpoint is required for the {kind} system"
        ))),
        (false, Some(_)) => Err(usage(format!("the {kind} system takes no checkpoint"))),
        (true, Some(p)) => {
            let bytes = read_input(p)?;
            out.input("checkpoint", p, &bytes);
            let (params, provenance) = load_checkpoint(&bytes)?;
            Ok(SystemUnderTest::trained(kind, params, provenance)?)
        }
        (false, None) => Ok(match kind {
            SystemKind::Untrained => SystemUnderTest::untrained(derive_seed(seed, "untrained"))?,
            _ => SystemUnderTest::random(derive_seed(seed, "random")),
        }),
    }
}

#[derive(Args, Debug, Clone)]
pub struct EvalIntrinsic {
    #[arg(long)]
    pub testset: PathBuf,
    #[arg(long, value_enum)]
    pub system: SystemArg,
    /// Required for cwm and sft.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn eval_intrinsic_cmd(args: &EvalIntrinsic) -> Result<PathBuf> {
    let kind: SystemKind = args.system.into();
    let mut out = OutDir::create(&args.out, &format!("eval-intrinsic-{kind}"))?;
    let system = resolve_system(kind, args.checkpoint.as_deref(), args.seed, &mut out)?;
    let instances: Vec<IntrinsicInstance> = jsonl_input("testset", &args.testset, &mut out)?;
    if let Some(bad) = instances
        .iter()
        .find(|i| i.schema_version != cwm_core::SCHEMA_VERSION)
    {
        bail!(
            "test set line for {} has schema_version {}",
            bad.episode_ref,
            bad.schema_version
        );
    }
    let report = eval_intrinsic(&system, &IntrinsicTestSet { instances })?;
    let path = out.write(&format!("intrinsic-{kind}.json"), &to_json_pretty(&report)?)?;
    out.finish(args.seed, digest_hex(kind.name().as_bytes()))?;
    println!("eval-intrinsic: {kind} -> {}", path.display());
    Ok(path)
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionArg {
    InDomain,
    Ood,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Condition {
        match c {
            ConditionArg::InDomain => Condition::InDomain,
            ConditionArg::Ood => Condition::Ood,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct EvalFilter {
    #[arg(long, value_enum)]
    pub system: SystemArg,
    /// Required for cwm and sft.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub condition: ConditionArg,
    /// Rollout episodes; defaults to 15 in-domain, 90 out of domain.
    #[arg(long)]
    pub n_episodes: Option<usize>,
    #[arg(long, default_value = "1,5,10,20", value_parser = parse_ks)]
    pub ks: Ks,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn eval_filter_cmd(args: &EvalFilter) -> Result<PathBuf> {
    let kind: SystemKind = args.system.into();
    let condition: Condition = args.condition.into();
    let mut out = OutDir::create(&args.out, &format!("eval-filter-{condition}-{kind}"))?;
    let system = resolve_system(kind, args.checkpoint.as_deref(), args.seed, &mut out)?;
    let mut config = FilterConfig::new(condition, args.seed);
    if let Some(n) = args.n_episodes {
        if n == 0 {
            return Err(usage("--n-episodes must be positive"));
        }
        config.episodes = n;
    }
    config.ks = args.ks.0.clone();
    let episodes = filter_episodes(&config)?;
    let (report, records) = run_filter_eval(&system, &episodes, &config)?;
    let path = out.write(
        &format!("filter-{condition}-{kind}.json"),
        &to_json_pretty(&report)?,
    )?;
    out.write(
        &format!("steps-{condition}-{kind}.jsonl"),
        &to_jsonl(&records)?,
    )?;
    let params = serde_json::json!({
        "system": kind,
        "condition": condition,
        "episodes": config.episodes,
        "ks": config.ks,
        "matcher": config.matcher,
    });
    out.finish(args.seed, digest_hex(&serde_json::to_vec(&params)?))?;
    println!(
        "eval-filter: {kind} {condition}, {} steps -> {}",
        report.metrics.steps,
        path.display()
    );
    Ok(path)
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Intrinsic,
    Filter,
}

#[derive(Args, Debug, Clone)]
pub struct Report {
    #[arg(long, value_enum)]
    pub tables: TableKind,
    /// Report JSON files, one row per file within each block.
    #[arg(required = true, num_args = 1..)]
    pub reports: Vec<PathBuf>,
    /// Also write the table to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_reports<T: DeserializeOwned>(paths: &[PathBuf]) -> Result<Vec<(PathBuf, Vec<u8>, T)>> {
    paths
        .iter()
        .map(|p| {
            let bytes = read_input(p)?;
            let r = serde_json::from_slice(&bytes)
                .map_err(|e| anyhow!("{}: not a report of this kind: {e}", p.display()))?;
            Ok((p.clone(), bytes, r))
        })
        .collect()
}

pub fn render_report(
    tables: TableKind,
    reports: &[PathBuf],
) -> Result<(String, Vec<(PathBuf, Vec<u8>)>)> {
    if reports.is_empty() {
        return Err(usage("no report files given"));
    }
    Ok(match tables {
        TableKind::Intrinsic => {
            let rs = read_reports::<IntrinsicReport>(reports)?;
            let parsed: Vec<IntrinsicReport> = rs.iter().map(|r| r.2.clone()).collect();
            (
                render_intrinsic_table(&parsed)?,
                rs.into_iter().map(|r| (r.0, r.1)).collect(),
            )
        }
        TableKind::Filter => {
            let rs = read_reports::<FilterReport>(reports)?;
            let parsed: Vec<FilterReport> = rs.iter().map(|r| r.2.clone()).collect();
            (
                render_filter_table(&parsed)?,
                rs.into_iter().map(|r| (r.0, r.1)).collect(),
            )
        }
    })
}

pub fn report(args: &Report) -> Result<String> {
    let (table, inputs) = render_report(args.tables, &args.reports)?;
    if let Some(path) = &args.out {
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let name = path
            .file_name()
            .ok_or_else(|| usage(format!("{} is not a file path", path.display())))?
            .to_string_lossy()
            .into_owned();
        let stem = name.split('.').next().unwrap_or("report").to_string();
        let mut out = OutDir::create(dir, &format!("report-{stem}"))?;
        for (i, (p, bytes)) in inputs.iter().enumerate() {
            out.input(&format!("report{i}"), p, bytes);
        }
        out.write(&name, table.as_bytes())?;
        out.finish(0, digest_hex(format!("{:?}", args.tables).as_bytes()))?;
    }
    print!("{table}");
    Ok(table)
}

#[derive(Args, Debug, Clone)]
pub struct Pipeline {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON training config shared by all four trainings.
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Held-out seeds per (family, variation) feeding the intrinsic test set.
    #[arg(long, default_value_t = 4)]
    pub test_seeds: u64,
    /// Override the filter rollout episode counts (both conditions).
    #[arg(long)]
    pub n_episodes: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// The two rendered tables.
#[derive(Debug, Clone)]
pub struct PipelineOutputs {
    pub intrinsic_table: PathBuf,
    pub filter_table: PathBuf,
}

/// gen-data, mine, train x4, build-testset, both evaluations, report.
///
/// The intrinsic study uses weights trained on all families; the filter
/// study uses weights trained on the in-domain families only, so the
/// out-of-domain condition never sees its families during training.
pub fn pipeline(args: &Pipeline) -> Result<PipelineOutputs> {
    let root = &args.out;
    let seed = args.seed;
    if args.test_seeds == 0 {
        return Err(usage("--test-seeds must be positive"));
    }
    let all = FamilySet(Family::ALL.to_vec());
    let in_domain = FamilySet(Family::IN_DOMAIN.to_vec());

    let gen = |dir: &str, vars: &str, seed: u64, count: u64| {
        gen_data(&GenData {
            families: all.clone(),
            variations: parse_variations(vars).expect("static range"),
            seed,
            seed_count: count,
            out: root.join("episodes").join(dir),
        })
    };
    let train_eps = gen("train", "0-6", seed, 1)?;
    let heldout_eps = gen("heldout", "7-9", seed, 1)?;
    let test_eps = gen("test", "7-9", seed + 1, args.test_seeds)?;

    let mine_to = |eps: &Path, fams: &FamilySet, dir: &str| {
        mine(&Mine {
            episodes: eps.to_path_buf(),
            config: None,
            families: fams.clone(),
            seed,
            out: root.join("mined").join(dir),
        })
    };
    let data_all = mine_to(&train_eps, &all, "train-all")?;
    let held_all = mine_to(&heldout_eps, &all, "heldout-all")?;
    let data_id = mine_to(&train_eps, &in_domain, "train-in-domain")?;
    let held_id = mine_to(&heldout_eps, &in_domain, "heldout-in-domain")?;

    let train_to = |data: &Path, held: &Path, mode: ModeArg, dir: &str| {
        train_cmd(&Train {
            data: data.to_path_buf(),
            heldout: held.to_path_buf(),
            mode: Some(mode),
            config: args.train_config.clone(),
            seed: Some(seed),
            out: root.join("models").join(dir),
        })
    };
    let cwm_all = train_to(&data_all, &held_all, ModeArg::Cwm, "cwm-all")?;
    let sft_all = train_to(&data_all, &held_all, ModeArg::Sft, "sft-all")?;
    let cwm_id = train_to(&data_id, &held_id, ModeArg::Cwm, "cwm-in-domain")?;
    let sft_id = train_to(&data_id, &held_id, ModeArg::Sft, "sft-in-domain")?;

    let testset = build_testset(&BuildTestset {
        episodes: test_eps,
        config: None,
        seed,
        out: root.join("testset"),
    })?;

    let systems = |cwm: &Path, sft: &Path| {
        vec![
            (SystemArg::Cwm, Some(cwm.to_path_buf())),
            (SystemArg::Sft, Some(sft.to_path_buf())),
            (SystemArg::Untrained, None),
            (SystemArg::Random, None),
        ]
    };
    let mut intrinsic_reports = Vec::new();
    for (system, checkpoint) in systems(&cwm_all, &sft_all) {
        intrinsic_reports.push(eval_intrinsic_cmd(&EvalIntrinsic {
            testset: testset.clone(),
            system,
            checkpoint,
            seed,
            out: root.join("eval").join("intrinsic"),
        })?);
    }
    let mut filter_reports = Vec::new();
    for condition in [ConditionArg::InDomain, ConditionArg::Ood] {
        for (system, checkpoint) in systems(&cwm_id, &sft_id) {
            filter_reports.push(eval_filter_cmd(&EvalFilter {
                system,
                checkpoint,
                condition,
                n_episodes: args.n_episodes,
                ks: Ks(DEFAULT_KS.to_vec()),
                seed,
                out: root.join("eval").join("filter"),
            })?);
        }
    }

    let report_dir = root.join("report");
    let intrinsic_table = report_dir.join("intrinsic.txt");
    let filter_table = report_dir.join("filter.txt");
    report(&Report {
        tables: TableKind::Intrinsic,
        reports: intrinsic_reports,
        out: Some(intrinsic_table.clone()),
    })?;
    report(&Report {
        tables: TableKind::Filter,
        reports: filter_reports,
        out: Some(filter_table.clone()),
    })?;
    Ok(PipelineOutputs {
        intrinsic_table,
        filter_table,
    })
}
