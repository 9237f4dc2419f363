//! CSV file formats: WTP schedules, embeddings, worker records, and
//! per-worker labels.
//!
//! Readers report every bad row with its line number rather than stopping at
//! the first one.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::agent::ModelTag;
use crate::classifier::WorkerType;
use crate::clustering::EmbeddingMatrix;
use crate::elicitation::{BdmOutcome, PerformanceBin, TreatmentArm, WtpEntry, WtpSchedule, BONUS_CENTS};
use crate::error::{Error, ParseErrors, Result};
use crate::model::Scenario;
use crate::simulator::{BdmRecord, WorkerRecord};

pub const SCHEDULE_HEADER: [&str; 5] = ["worker_id", "scenario", "bin", "prefer_info", "wtp_cents"];

/// Formats with 9 significant digits, then prints the shortest string that
/// reads back to the same value.
pub fn fmt_float(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().expect("scientific notation parses");
    format!("{rounded}")
}

fn scenario_parse(s: &str) -> Option<Scenario> {
    Scenario::ALL.into_iter().find(|sc| sc.as_str() == s)
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "1" => Some(true),
        "0" => Some(false),
        _ => None,
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, csv::Position::line)
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str], errs: &mut ParseErrors) -> Result<bool> {
    let header = rdr.headers()?.clone();
    if header.iter().eq(expected.iter().copied()) {
        Ok(true)
    } else {
        errs.push(
            1,
            format!("expected header {}, got {}", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        );
        Ok(false)
    }
}

pub fn write_schedules<'a, W: Write>(
    out: W,
    schedules: impl IntoIterator<Item = (&'a str, &'a WtpSchedule)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCHEDULE_HEADER)?;
    for (id, s) in schedules {
        for scenario in Scenario::ALL {
            for bin in PerformanceBin::ALL {
                let e = s.entry(scenario, bin);
                w.write_record([
                    id,
                    scenario.as_str(),
                    &bin.number().to_string(),
                    flag(e.prefer_info),
                    &e.wtp_cents.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a schedule file. Workers are returned in order of first
/// appearance; each must have all 18 entries exactly once.
pub fn read_schedules(input: impl Read, source: &str) -> Result<Vec<(String, WtpSchedule)>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let mut errs = ParseErrors::new(source);
    if !check_header(&mut rdr, &SCHEDULE_HEADER, &mut errs)? {
        return Err(Error::Parse(errs));
    }
    let mut order: Vec<String> = Vec::new();
    let mut cells: HashMap<String, [[Option<(WtpEntry, u64)>; 9]; 2]> = HashMap::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                errs.push(e.position().map_or(0, csv::Position::line), e.to_string());
                continue;
            }
        };
        let line = line_of(&rec);
        if rec.len() != 5 {
            errs.push(line, format!("expected 5 fields, got {}", rec.len()));
            continue;
        }
        let id = &rec[0];
        let mut problems = Vec::new();
        if id.is_empty() {
            problems.push("empty worker_id".to_string());
        }
        let scenario = scenario_parse(&rec[1]);
        if scenario.is_none() {
            problems.push(format!("scenario must be exante or expost, got {:?}", &rec[1]));
        }
        let bin = rec[2].parse::<u8>().ok().and_then(PerformanceBin::from_number);
        if bin.is_none() {
            problems.push(format!("bin must be 1..9, got {:?}", &rec[2]));
        }
        let prefer = parse_flag(&rec[3]);
        if prefer.is_none() {
            problems.push(format!("prefer_info must be 0 or 1, got {:?}", &rec[3]));
        }
        let cents = rec[4].parse::<i64>().ok();
        match cents {
            Some(c) if (0..=i64::from(BONUS_CENTS)).contains(&c) => {}
            _ => problems.push(format!("wtp_cents must be an integer in [0, 50], got {:?}", &rec[4])),
        }
        if !problems.is_empty() {
            errs.push(line, problems.join("; "));
            continue;
        }
        let (scenario, bin) = (scenario.expect("checked"), bin.expect("checked"));
        let entry = WtpEntry::new(prefer.expect("checked"), cents.expect("checked") as u8)?;
        let slots = cells.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            [[None; 9]; 2]
        });
        let slot = &mut slots[scenario.index()][bin.index()];
        if let Some((_, first)) = slot {
            errs.push(
                line,
                format!("duplicate entry for {id} {} bin {} (first on line {first})", scenario.as_str(), bin.number()),
            );
            continue;
        }
        *slot = Some((entry, line));
    }
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let slots = &cells[&id];
        let missing: Vec<String> = Scenario::ALL
            .iter()
            .flat_map(|s| PerformanceBin::ALL.iter().map(move |b| (*s, *b)))
            .filter(|(s, b)| slots[s.index()][b.index()].is_none())
            .map(|(s, b)| format!("{} bin {}", s.as_str(), b.number()))
            .collect();
        if !missing.is_empty() {
            let first_line = slots.iter().flatten().flatten().map(|(_, l)| *l).min().unwrap_or(0);
            errs.push(first_line, format!("incomplete schedule for {id}: missing {}", missing.join(", ")));
            continue;
        }
        let entries = [0, 1].map(|s| std::array::from_fn(|b| slots[s][b].expect("complete").0));
        out.push((id, WtpSchedule::new(entries)?));
    }
    errs.into_result()?;
    Ok(out)
}

pub fn ingest_schedules(path: &Path) -> Result<Vec<(String, WtpSchedule)>> {
    read_schedules(File::open(path)?, &path.display().to_string())
}

pub fn write_embeddings<W: Write>(out: W, x: &EmbeddingMatrix) -> Result<()> {
    let mut out = out;
    writeln!(out, "d={}", x.d())?;
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    for (i, id) in x.ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(x.row(i).iter().map(|v| fmt_float(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `d=<int>` followed by `id,v1,...,vd` rows.
pub fn read_embeddings(input: impl Read, source: &str) -> Result<EmbeddingMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut errs = ParseErrors::new(source);
    let mut records = rdr.records();
    let d = match records.next() {
        Some(Ok(h)) => match h.get(0).and_then(|f| f.strip_prefix("d=")).map(str::parse::<usize>) {
            Some(Ok(d)) if d >= 1 && h.len() == 1 => d,
            _ => {
                errs.push(1, format!("expected header d=<int >= 1>, got {:?}", h.iter().collect::<Vec<_>>().join(",")));
                return Err(Error::Parse(errs));
            }
        },
        Some(Err(e)) => {
            errs.push(1, e.to_string());
            return Err(Error::Parse(errs));
        }
        None => {
            errs.push(1, "empty file, expected header d=<int>");
            return Err(Error::Parse(errs));
        }
    };
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for rec in records {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                errs.push(e.position().map_or(0, csv::Position::line), e.to_string());
                continue;
            }
        };
        let line = line_of(&rec);
        if rec.len() != d + 1 {
            errs.push(line, format!("expected id and {d} values, got {} values", rec.len().saturating_sub(1)));
            continue;
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            errs.push(line, "empty worker id");
            continue;
        }
        if let Some(first) = seen.get(&id) {
            errs.push(line, format!("duplicate worker id {id} (first on line {first})"));
            continue;
        }
        let mut row = Vec::with_capacity(d);
        let mut bad = Vec::new();
        for (j, f) in rec.iter().skip(1).enumerate() {
            match f.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => bad.push(format!("column {} is not a finite number: {f:?}", j + 1)),
            }
        }
        if !bad.is_empty() {
            errs.push(line, bad.join("; "));
            continue;
        }
        seen.insert(id.clone(), line);
        ids.push(id);
        data.extend(row);
    }
    errs.into_result()?;
    EmbeddingMatrix::new(ids, data, d)
}

pub fn ingest_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    read_embeddings(File::open(path)?, &path.display().to_string())
}

/// Columns of the worker-record file.
pub fn record_header() -> Vec<String> {
    let mut h: Vec<String> =
        ["worker_id", "model", "type", "arm", "e1", "e2", "bin"].iter().map(|s| s.to_string()).collect();
    for s in Scenario::ALL {
        for b in PerformanceBin::ALL {
            h.push(format!("{}_b{}", s.as_str(), b.number()));
        }
    }
    for c in [
        "bdm_scenario",
        "bdm_coin_direct",
        "bdm_draw_cents",
        "bdm_implemented",
        "bdm_payment_cents",
        "bdm_final_bonus_cents",
        "bdm_receives_info",
        "cluster",
    ] {
        h.push(c.to_string());
    }
    h
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_records<W: Write>(out: W, records: &[WorkerRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(record_header())?;
    for r in records {
        let mut row = vec![
            r.worker_id.clone(),
            r.model.map_or("", ModelTag::as_str).to_string(),
            r.worker_type.number().to_string(),
            r.arm.map_or("", TreatmentArm::as_str).to_string(),
            r.e1.to_string(),
            opt(r.e2),
            r.bin.number().to_string(),
        ];
        for s in Scenario::ALL {
            row.extend(r.schedule.profile(s).iter().map(i32::to_string));
        }
        let b = r.bdm;
        row.push(b.map_or("", |b| b.scenario.as_str()).to_string());
        row.push(b.map_or("", |b| flag(b.coin_direct)).to_string());
        row.push(opt(b.map(|b| b.draw_cents)));
        row.push(b.map_or("", |b| flag(b.outcome.implemented)).to_string());
        row.push(opt(b.map(|b| b.outcome.payment_cents)));
        row.push(opt(b.map(|b| b.outcome.final_bonus_cents)));
        row.push(b.map_or("", |b| flag(b.outcome.receives_info)).to_string());
        row.push(opt(r.cluster));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

struct Fields<'a> {
    rec: &'a csv::StringRecord,
    problems: Vec<String>,
}

impl<'a> Fields<'a> {
    fn get<T>(&mut self, i: usize, name: &str, parse: impl FnOnce(&str) -> Option<T>) -> Option<T> {
        let v = parse(&self.rec[i]);
        if v.is_none() {
            self.problems.push(format!("bad {name}: {:?}", &self.rec[i]));
        }
        v
    }

    /// Empty means absent.
    fn opt<T>(&mut self, i: usize, name: &str, parse: impl FnOnce(&str) -> Option<T>) -> Option<Option<T>> {
        if self.rec[i].is_empty() {
            Some(None)
        } else {
            self.get(i, name, parse).map(Some)
        }
    }
}

fn parse_record(rec: &csv::StringRecord) -> std::result::Result<WorkerRecord, String> {
    let mut f = Fields { rec, problems: Vec::new() };
    let id = rec[0].to_string();
    if id.is_empty() {
        f.problems.push("empty worker_id".into());
    }
    let model = f.opt(1, "model", ModelTag::parse);
    let worker_type = f.get(2, "type", |s| s.parse().ok().and_then(WorkerType::from_number));
    let arm = f.opt(3, "arm", TreatmentArm::parse);
    let e1 = f.get(4, "e1", |s| s.parse::<u32>().ok());
    let e2 = f.opt(5, "e2", |s| s.parse::<u32>().ok());
    let bin = f.get(6, "bin", |s| s.parse().ok().and_then(PerformanceBin::from_number));
    let mut signed = [[0i32; 9]; 2];
    for s in 0..2 {
        for b in 0..9 {
            let col = 7 + s * 9 + b;
            let v = f.get(col, "signed wtp", |x| x.parse::<i32>().ok().filter(|v| v.abs() <= BONUS_CENTS));
            signed[s][b] = v.unwrap_or(0);
        }
    }
    let scenario = f.opt(25, "bdm_scenario", scenario_parse);
    let coin = f.opt(26, "bdm_coin_direct", parse_flag);
    let draw = f.opt(27, "bdm_draw_cents", |s| s.parse::<u8>().ok().filter(|d| i32::from(*d) <= BONUS_CENTS));
    let implemented = f.opt(28, "bdm_implemented", parse_flag);
    let payment = f.opt(29, "bdm_payment_cents", |s| s.parse::<u8>().ok());
    let bonus = f.opt(30, "bdm_final_bonus_cents", |s| s.parse::<u8>().ok());
    let receives = f.opt(31, "bdm_receives_info", parse_flag);
    let cluster = f.opt(32, "cluster", |s| s.parse::<usize>().ok());
    if !f.problems.is_empty() {
        return Err(f.problems.join("; "));
    }
    let bdm_fields = (
        scenario.flatten(),
        coin.flatten(),
        draw.flatten(),
        implemented.flatten(),
        payment.flatten(),
        bonus.flatten(),
        receives.flatten(),
    );
    let bdm = match bdm_fields {
        (None, None, None, None, None, None, None) => None,
        (
            Some(scenario),
            Some(coin_direct),
            Some(draw_cents),
            Some(implemented),
            Some(payment_cents),
            Some(final_bonus_cents),
            Some(receives_info),
        ) => {
            if i32::from(payment_cents) + i32::from(final_bonus_cents) != BONUS_CENTS {
                return Err("bdm payment and final bonus must add up to 50".into());
            }
            Some(BdmRecord {
                scenario,
                coin_direct,
                draw_cents,
                outcome: BdmOutcome { implemented, payment_cents, final_bonus_cents, receives_info },
            })
        }
        _ => return Err("bdm fields must be all present or all empty".into()),
    };
    Ok(WorkerRecord {
        worker_id: id,
        model: model.flatten(),
        agent: None,
        e1: e1.expect("checked"),
        e2: e2.flatten(),
        arm: arm.flatten(),
        schedule: WtpSchedule::from_signed(signed).map_err(|e| e.to_string())?,
        bin: bin.expect("checked"),
        worker_type: worker_type.expect("checked"),
        cluster: cluster.flatten(),
        bdm,
    })
}

/// Reads a worker-record file. Agent specifications are not stored, so
/// records come back with `agent: None`.
pub fn read_records(input: impl Read, source: &str) -> Result<Vec<WorkerRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let mut errs = ParseErrors::new(source);
    let header = record_header();
    let expected: Vec<&str> = header.iter().map(String::as_str).collect();
    if !check_header(&mut rdr, &expected, &mut errs)? {
        return Err(Error::Parse(errs));
    }
    let mut out = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                errs.push(e.position().map_or(0, csv::Position::line), e.to_string());
                continue;
            }
        };
        let line = line_of(&rec);
        if rec.len() != expected.len() {
            errs.push(line, format!("expected {} fields, got {}", expected.len(), rec.len()));
            continue;
        }
        match parse_record(&rec) {
            Ok(r) => {
                if let Some(first) = seen.insert(r.worker_id.clone(), line) {
                    errs.push(line, format!("duplicate worker id {} (first on line {first})", r.worker_id));
                } else {
                    out.push(r);
                }
            }
            Err(msg) => errs.push(line, msg),
        }
    }
    errs.into_result()?;
    Ok(out)
}

pub fn ingest_records(path: &Path) -> Result<Vec<WorkerRecord>> {
    read_records(File::open(path)?, &path.display().to_string())
}

/// Two-column `worker_id,<column>` file.
pub fn write_labels<W: Write>(out: W, column: &str, rows: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["worker_id", column])?;
    for (id, v) in rows {
        w.write_record([id, v])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `worker_id,<column>` file into an id-ordered map.
pub fn read_labels(input: impl Read, column: &str, source: &str) -> Result<BTreeMap<String, String>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut errs = ParseErrors::new(source);
    if !check_header(&mut rdr, &["worker_id", column], &mut errs)? {
        return Err(Error::Parse(errs));
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        match rec {
            Ok(r) => {
                if out.insert(r[0].to_string(), r[1].to_string()).is_some() {
                    errs.push(line_of(&r), format!("duplicate worker id {}", &r[0]));
                }
            }
            Err(e) => errs.push(e.position().map_or(0, csv::Position::line), e.to_string()),
        }
    }
    errs.into_result()?;
    Ok(out)
}
