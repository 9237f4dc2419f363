use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use peerinfo::io::{
    ingest_embeddings, ingest_records, ingest_schedules, read_labels, write_labels, write_records, write_schedules,
};
use peerinfo::model::verify_predictions;
use peerinfo::welfare::{compare_policies, evaluate_policy, welfare_gain, PolicyRow};
use peerinfo::{
    build_wtp_schedule, classify, estimate_effects, run_experiment, select_k, simulate_population, type_shares,
    AgentSpec, EffectTable, Grouping, Scenario, WorkerRecord, WorkerType, WtpSchedule,
};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

/// What a successful command found.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    HypothesisFailure,
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub format: Format,
}

impl Ctx {
    fn path(&self, stem: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{stem}.{ext}"))
    }

    fn create(&self, stem: &str, ext: &str) -> Result<(PathBuf, BufWriter<File>)> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.path(stem, ext);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok((path, BufWriter::new(f)))
    }

    fn write_json(&self, stem: &str, value: &impl Serialize) -> Result<PathBuf> {
        let (path, mut w) = self.create(stem, "json")?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }

    fn write_lines<T: Serialize>(&self, stem: &str, items: impl IntoIterator<Item = T>) -> Result<PathBuf> {
        let (path, mut w) = self.create(stem, "jsonl")?;
        for item in items {
            serde_json::to_writer(&mut w, &item)?;
            writeln!(w)?;
        }
        w.flush()?;
        Ok(path)
    }
}

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct ScheduleLine {
    worker_id: String,
    exante: [i32; 9],
    expost: [i32; 9],
}

#[derive(Serialize, Deserialize)]
struct TypeLine {
    worker_id: String,
    #[serde(rename = "type")]
    worker_type: u8,
}

#[derive(Serialize, Deserialize)]
struct ClusterLine {
    worker_id: String,
    cluster: usize,
}

fn load_schedules(path: &Path) -> Result<Vec<(String, WtpSchedule)>> {
    if !is_jsonl(path) {
        return Ok(ingest_schedules(path)?);
    }
    let mut seen = BTreeMap::new();
    for (i, l) in read_lines::<ScheduleLine>(path)?.into_iter().enumerate() {
        let s =
            WtpSchedule::from_signed([l.exante, l.expost]).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if seen.insert(l.worker_id.clone(), s).is_some() {
            bail!("{}:{}: duplicate worker id {}", path.display(), i + 1, l.worker_id);
        }
    }
    Ok(seen.into_iter().collect())
}

fn load_records(path: &Path) -> Result<Vec<WorkerRecord>> {
    if is_jsonl(path) {
        read_lines(path)
    } else {
        Ok(ingest_records(path)?)
    }
}

fn load_labels(path: &Path, column: &str) -> Result<BTreeMap<String, String>> {
    if is_jsonl(path) {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = read_lines(path)?;
        rows.into_iter()
            .enumerate()
            .map(|(i, r)| {
                let get = |k: &str| r.get(k).ok_or_else(|| anyhow!("{}:{}: missing {k}", path.display(), i + 1));
                let id = get("worker_id")?.as_str().ok_or_else(|| anyhow!("worker_id must be a string"))?;
                Ok((id.to_string(), get(column)?.to_string()))
            })
            .collect()
    } else {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(read_labels(f, column, &path.display().to_string())?)
    }
}

fn write_schedule_file<'a>(ctx: &Ctx, rows: impl IntoIterator<Item = (&'a str, &'a WtpSchedule)>) -> Result<PathBuf> {
    match ctx.format {
        Format::Csv => {
            let (path, mut w) = ctx.create("schedules", "csv")?;
            write_schedules(&mut w, rows)?;
            w.flush()?;
            Ok(path)
        }
        Format::Jsonl => ctx.write_lines(
            "schedules",
            rows.into_iter().map(|(id, s)| ScheduleLine {
                worker_id: id.to_string(),
                exante: s.profile(Scenario::ExAnte),
                expost: s.profile(Scenario::ExPost),
            }),
        ),
    }
}

fn write_record_file(ctx: &Ctx, records: &[WorkerRecord]) -> Result<PathBuf> {
    match ctx.format {
        Format::Csv => {
            let (path, mut w) = ctx.create("records", "csv")?;
            write_records(&mut w, records)?;
            w.flush()?;
            Ok(path)
        }
        Format::Jsonl => ctx.write_lines("records", records),
    }
}

#[derive(Serialize)]
struct EffectsReport {
    n_workers: usize,
    tables: Vec<EffectTable>,
}

fn effects(records: &[WorkerRecord], groupings: &[Grouping]) -> EffectsReport {
    EffectsReport {
        n_workers: records.len(),
        tables: groupings.iter().map(|g| estimate_effects(records, *g)).collect(),
    }
}

pub fn simulate(ctx: &Ctx) -> Result<Status> {
    let pop = &ctx.cfg.population;
    let mut records = simulate_population(pop)?;
    run_experiment(&mut records, pop)?;
    let rec_path = write_record_file(ctx, &records)?;
    let sched_path = write_schedule_file(ctx, records.iter().map(|r| (r.worker_id.as_str(), &r.schedule)))?;
    let eff_path =
        ctx.write_json("effects", &effects(&records, &[Grouping::All, Grouping::ByType, Grouping::ByModel]))?;
    println!("simulated {} workers (seed {})", records.len(), pop.seed);
    for p in [rec_path, sched_path, eff_path] {
        println!("wrote {}", p.display());
    }
    Ok(Status::Ok)
}

pub fn elicit(ctx: &Ctx, agents: Option<&Path>) -> Result<Status> {
    let schedules: Vec<(String, WtpSchedule)> = match agents {
        Some(path) => {
            let specs: Vec<AgentSpec> = read_lines(path)?;
            specs
                .iter()
                .map(|a| {
                    build_wtp_schedule(a, &ctx.cfg.population.offsets)
                        .map(|s| (a.worker_id.clone(), s))
                        .with_context(|| format!("agent {}", a.worker_id))
                })
                .collect::<Result<_>>()?
        }
        None => simulate_population(&ctx.cfg.population)?.into_iter().map(|r| (r.worker_id, r.schedule)).collect(),
    };
    let path = write_schedule_file(ctx, schedules.iter().map(|(id, s)| (id.as_str(), s)))?;
    println!("elicited {} schedules", schedules.len());
    println!("wrote {}", path.display());
    Ok(Status::Ok)
}

pub fn classify_cmd(ctx: &Ctx, schedules: &Path) -> Result<Status> {
    let rows = load_schedules(schedules)?;
    let cfg = &ctx.cfg.population.classifier;
    cfg.validate()?;
    let types: Vec<(String, WorkerType)> = rows.iter().map(|(id, s)| (id.clone(), classify(s, cfg))).collect();
    let path = match ctx.format {
        Format::Csv => {
            let (path, mut w) = ctx.create("types", "csv")?;
            write_labels(&mut w, "type", types.iter().map(|(id, t)| (id.clone(), t.number().to_string())))?;
            w.flush()?;
            path
        }
        Format::Jsonl => ctx.write_lines(
            "types",
            types.iter().map(|(id, t)| TypeLine { worker_id: id.clone(), worker_type: t.number() }),
        )?,
    };
    let shares = type_shares(&types.iter().map(|(_, t)| *t).collect::<Vec<_>>())?;
    println!("classified {} workers", types.len());
    for t in WorkerType::ALL {
        println!("  type {} ({:?}): {:.4}", t.number(), t, shares[t.index()]);
    }
    println!("wrote {}", path.display());
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct ClusterReport {
    n: usize,
    d: usize,
    normalized: bool,
    k: usize,
    scores: Vec<(usize, f64)>,
    inertia: f64,
    silhouette: f64,
    iterations: usize,
    sizes: Vec<usize>,
    centroids: Vec<Vec<f64>>,
}

pub fn cluster(ctx: &Ctx, embeddings: &Path) -> Result<Status> {
    let c = &ctx.cfg.clustering;
    let raw = ingest_embeddings(embeddings)?;
    let x = if c.normalize { raw.l2_normalized() } else { raw };
    let k_max = c.k_max.min(x.n().saturating_sub(1));
    let sel = select_k(&x, c.k_min, k_max, ctx.cfg.seed(), c.restarts)?;
    let best = &sel.best;
    let mut sizes = vec![0; best.k];
    best.labels.iter().for_each(|&l| sizes[l] += 1);
    let labels = x.ids().iter().zip(&best.labels);
    let path = match ctx.format {
        Format::Csv => {
            let (path, mut w) = ctx.create("clusters", "csv")?;
            write_labels(&mut w, "cluster", labels.map(|(id, l)| (id.clone(), l.to_string())))?;
            w.flush()?;
            path
        }
        Format::Jsonl => {
            ctx.write_lines("clusters", labels.map(|(id, l)| ClusterLine { worker_id: id.clone(), cluster: *l }))?
        }
    };
    let report = ClusterReport {
        n: x.n(),
        d: x.d(),
        normalized: c.normalize,
        k: sel.k,
        scores: sel.scores.clone(),
        inertia: best.inertia,
        silhouette: best.silhouette,
        iterations: best.iterations,
        sizes,
        centroids: (0..best.k).map(|j| best.centroid(j).to_vec()).collect(),
    };
    let rep_path = ctx.write_json("cluster_report", &report)?;
    println!("selected k = {} (silhouette {:.4}) over {} points", sel.k, best.silhouette, x.n());
    println!("wrote {}", path.display());
    println!("wrote {}", rep_path.display());
    Ok(Status::Ok)
}

/// Replaces each record's type (or cluster) with the one in `labels`;
/// every record must be covered.
fn relabel(records: &mut [WorkerRecord], types: Option<&Path>, clusters: Option<&Path>) -> Result<()> {
    if let Some(path) = types {
        let map = load_labels(path, "type")?;
        for r in records.iter_mut() {
            let v = map
                .get(&r.worker_id)
                .ok_or_else(|| anyhow!("{}: no type for worker {}", path.display(), r.worker_id))?;
            r.worker_type = v
                .parse()
                .ok()
                .and_then(WorkerType::from_number)
                .ok_or_else(|| anyhow!("{}: bad type {v} for worker {}", path.display(), r.worker_id))?;
        }
        if map.len() != records.len() {
            bail!("{} has {} workers but the records have {}", path.display(), map.len(), records.len());
        }
    }
    if let Some(path) = clusters {
        let map = load_labels(path, "cluster")?;
        for r in records.iter_mut() {
            let v = map
                .get(&r.worker_id)
                .ok_or_else(|| anyhow!("{}: no cluster for worker {}", path.display(), r.worker_id))?;
            r.cluster = Some(v.parse().map_err(|_| anyhow!("{}: bad cluster {v}", path.display()))?);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PolicyReport {
    n_workers: usize,
    type_counts: [usize; 4],
    policies: Vec<PolicyRow>,
    configured: PolicyRow,
}

fn policy_report(ctx: &Ctx, records: &[WorkerRecord]) -> Result<PolicyReport> {
    let policies = compare_policies(records)?;
    let (ante, post) = (&policies[0].outcome, &policies[1].outcome);
    let outcome = evaluate_policy(records, &ctx.cfg.welfare.policy())?;
    let configured = PolicyRow {
        gain_vs_uniform_exante: welfare_gain(&outcome, ante).ok(),
        gain_vs_uniform_expost: welfare_gain(&outcome, post).ok(),
        outcome,
    };
    Ok(PolicyReport { n_workers: records.len(), type_counts: configured.outcome.n_per_type, policies, configured })
}

fn fmt_gain(g: Option<f64>) -> String {
    g.map_or_else(|| "undefined".into(), |g| format!("{g:+.2}%"))
}

pub fn welfare(ctx: &Ctx, records: &Path, types: Option<&Path>) -> Result<Status> {
    let mut recs = load_records(records)?;
    relabel(&mut recs, types, None)?;
    let report = policy_report(ctx, &recs)?;
    let path = ctx.write_json("policy_report", &report)?;
    println!("{} workers", report.n_workers);
    for row in report.policies.iter().chain([&report.configured]) {
        println!(
            "  {:<45} mean {:>8.4}  vs ex ante {:>9}  vs ex post {:>9}",
            row.outcome.policy,
            row.outcome.mean,
            fmt_gain(row.gain_vs_uniform_exante),
            fmt_gain(row.gain_vs_uniform_expost)
        );
    }
    println!("wrote {}", path.display());
    Ok(Status::Ok)
}

pub fn verify(ctx: &Ctx) -> Result<Status> {
    let v = &ctx.cfg.verify;
    let report = verify_predictions(&v.grid, v.tolerance);
    let path = ctx.write_json("theory_report", &report)?;
    for m in &report.models {
        println!("  {:<18} {} combinations", m.model, m.combinations);
    }
    let failed: Vec<_> = report.failures().collect();
    println!("{} of {} checks pass", report.checks.len() - failed.len(), report.checks.len());
    for c in &failed {
        println!("  FAIL {} ({}/{}, max violation {:e})", c.id, c.pass_count, c.grid_size, c.max_violation);
    }
    println!("wrote {}", path.display());
    Ok(if report.all_pass { Status::Ok } else { Status::HypothesisFailure })
}

#[derive(Serialize)]
struct FullReport {
    n_workers: usize,
    type_shares: [f64; 4],
    effects: Vec<EffectTable>,
    welfare: PolicyReport,
}

pub fn report(ctx: &Ctx, records: &Path, types: Option<&Path>, clusters: Option<&Path>) -> Result<Status> {
    let mut recs = load_records(records)?;
    relabel(&mut recs, types, clusters)?;
    let mut groupings = vec![Grouping::All, Grouping::ByType, Grouping::ByModel];
    if recs.iter().all(|r| r.cluster.is_some()) {
        groupings.push(Grouping::ByCluster);
    }
    let shares = type_shares(&recs.iter().map(|r| r.worker_type).collect::<Vec<_>>())?;
    let eff = effects(&recs, &groupings);
    let full = FullReport {
        n_workers: recs.len(),
        type_shares: shares,
        effects: eff.tables,
        welfare: policy_report(ctx, &recs)?,
    };
    let path = ctx.write_json("report", &full)?;
    println!("{} workers", full.n_workers);
    for table in &full.effects {
        println!("effects {:?}", table.grouping);
        for row in &table.rows {
            let cell = |e: Option<peerinfo::simulator::Effect>| match e {
                Some(e) => match e.se {
                    Some(se) => format!("{:+.3} ({se:.3})", e.mean),
                    None => format!("{:+.3}", e.mean),
                },
                None => "n/a".into(),
            };
            println!(
                "  {:<20} n={:<6} ex ante {:<18} ex post {:<18}",
                row.group,
                row.size(),
                cell(row.exante),
                cell(row.expost)
            );
        }
    }
    println!("wrote {}", path.display());
    Ok(Status::Ok)
}
