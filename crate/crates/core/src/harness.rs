//! Loading instances from files, run records and benchmark reports.

use crate::cegis::{refinement_loop, target_width, verify, Outcome, SolverConfig, StrategyKind, Verdict};
use crate::frontends::{self, auto_disjunct, encode, AnalysisTask, Encoded, Payload, Roles, TaskKind};
use crate::lvm::{parse_program, parse_programs, print_programs, Program, WordWidth};
use crate::specir::{parse_spec, skolemize, SpecProblem};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

/// Superoptimisation target width when the reference file names none.
pub const DEFAULT_SUPEROPT_WIDTH: u32 = 32;

/// Per-instance timeout for `bench` unless one is configured.
pub const BENCH_TIMEOUT: Duration = Duration::from_secs(180);

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Spec(PathBuf, crate::specir::SpecError),
    #[error("{0}: {1}")]
    Loop(PathBuf, frontends::LoopParseError),
    #[error("{0}: {1}")]
    Program(PathBuf, crate::lvm::ParseProgramError),
    #[error("{0}: {1}")]
    Encode(PathBuf, frontends::EncodeError),
    #[error("{0}: unknown file type (expected .spec, .loop or .sopt)")]
    Extension(PathBuf),
    #[error("{0}: no task given; use --task or a `task:` statement")]
    NoTask(PathBuf),
}

/// A problem ready for the solver.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub category: String,
    pub task: Option<TaskKind>,
    pub encoded: Encoded,
    pub problem: SpecProblem,
    /// Width implied by the file itself, used unless the configuration sets one.
    pub target_width: Option<WordWidth>,
}

impl Instance {
    pub fn config(&self, cfg: &SolverConfig) -> SolverConfig {
        let mut c = cfg.clone();
        if c.target_width.is_none() {
            c.target_width = self.target_width.map(WordWidth::bits);
        }
        c
    }
}

fn stem(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads a `.spec`, `.loop` or `.sopt` file. `task` overrides the task of a loop file.
pub fn load_instance(path: &Path, task: Option<TaskKind>) -> Result<Instance, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.into(), e))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let (encoded, task, target) = match ext {
        "spec" => {
            let spec = parse_spec(&text).map_err(|e| LoadError::Spec(path.into(), e))?;
            (Encoded { spec, roles: Roles::default() }, None, None)
        }
        "loop" => {
            let sys = frontends::parse_loop(&text).map_err(|e| LoadError::Loop(path.into(), e))?;
            let kind = task.or(sys.task).ok_or_else(|| LoadError::NoTask(path.into()))?;
            let t = AnalysisTask { kind, payload: Payload::Loop(sys) };
            (encode(&t).map_err(|e| LoadError::Encode(path.into(), e))?, Some(kind), None)
        }
        "sopt" => {
            let (program, w) = parse_program(&text).map_err(|e| LoadError::Program(path.into(), e))?;
            let width = w.unwrap_or(WordWidth::of(DEFAULT_SUPEROPT_WIDTH));
            let t = AnalysisTask { kind: TaskKind::Superopt, payload: Payload::Reference { program, width } };
            (encode(&t).map_err(|e| LoadError::Encode(path.into(), e))?, Some(TaskKind::Superopt), Some(width))
        }
        _ => return Err(LoadError::Extension(path.into())),
    };
    let category = match task {
        Some(k) => k.category().to_string(),
        None => text
            .lines()
            .find_map(|l| l.trim().strip_prefix('#').and_then(|c| c.trim().strip_prefix("category:")))
            .map(|c| c.trim().to_string())
            .unwrap_or_else(|| "spec".into()),
    };
    let problem = skolemize(&encoded.spec);
    Ok(Instance { name: stem(path), category, task, encoded, problem, target_width: target })
}

/// One solver run, as written to the stats stream.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub category: String,
    /// `SAT`, `UNSAT`, `BOUND_EXHAUSTED` or `ERROR`.
    pub verdict: String,
    /// Exhaustion reason, proven disjunct or error message.
    pub detail: String,
    pub witness: String,
    pub size: usize,
    pub iterations: u64,
    pub synth_wins: [u64; 3],
    pub verif_wins: [u64; 2],
    pub time_synth: Duration,
    pub time_verif: Duration,
    pub time_generalize: Duration,
    pub time_total: Duration,
    pub seed: u64,
    pub target_width: u32,
    /// `l,c,w` points separated by `;`.
    pub trajectory: String,
}

fn quote(v: &str) -> String {
    if !v.is_empty() && !v.contains([' ', '"', '=', '\n', '\\']) {
        return v.to_string();
    }
    let mut s = String::from("\"");
    for ch in v.chars() {
        match ch {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

fn split_fields(line: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.peek() == Some(&' ') {
            chars.next();
        }
        if chars.peek().is_none() {
            return Ok(out);
        }
        let mut key = String::new();
        for ch in chars.by_ref() {
            if ch == '=' {
                break;
            }
            key.push(ch);
        }
        let mut val = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some('n') => val.push('\n'),
                        Some(c) => val.push(c),
                        None => return Err("dangling escape".into()),
                    },
                    Some(c) => val.push(c),
                    None => return Err(format!("unterminated value for `{key}`")),
                }
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c == ' ' {
                    break;
                }
                val.push(c);
                chars.next();
            }
        }
        out.insert(key, val);
    }
}

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1000.0)
}

impl RunRecord {
    /// The record as one line of `key=value` fields.
    pub fn to_line(&self) -> String {
        let fields: Vec<(&str, String)> = vec![
            ("instance", self.instance.clone()),
            ("category", self.category.clone()),
            ("verdict", self.verdict.clone()),
            ("detail", self.detail.clone()),
            ("size", self.size.to_string()),
            ("iterations", self.iterations.to_string()),
            ("synth_explicit", self.synth_wins[0].to_string()),
            ("synth_symbolic", self.synth_wins[1].to_string()),
            ("synth_gp", self.synth_wins[2].to_string()),
            ("verif_explicit", self.verif_wins[0].to_string()),
            ("verif_symbolic", self.verif_wins[1].to_string()),
            ("time_synth_ms", ms(self.time_synth)),
            ("time_verif_ms", ms(self.time_verif)),
            ("time_generalize_ms", ms(self.time_generalize)),
            ("time_total_ms", ms(self.time_total)),
            ("seed", self.seed.to_string()),
            ("target_width", self.target_width.to_string()),
            ("trajectory", self.trajectory.clone()),
            ("witness", self.witness.clone()),
        ];
        fields.iter().map(|(k, v)| format!("{k}={}", quote(v))).collect::<Vec<_>>().join(" ")
    }

    /// The line without wall-clock fields, for replay comparisons.
    pub fn without_times(&self) -> String {
        self.to_line().split(' ').filter(|f| !f.starts_with("time_")).collect::<Vec<_>>().join(" ")
    }

    pub fn parse_line(line: &str) -> Result<RunRecord, String> {
        let f = split_fields(line)?;
        let get = |k: &str| f.get(k).cloned().ok_or_else(|| format!("missing field `{k}`"));
        let num = |k: &str| get(k)?.parse::<u64>().map_err(|_| format!("bad number in `{k}`"));
        let dur = |k: &str| -> Result<Duration, String> {
            let v: f64 = get(k)?.parse().map_err(|_| format!("bad time in `{k}`"))?;
            Ok(Duration::from_secs_f64(v / 1000.0))
        };
        Ok(RunRecord {
            instance: get("instance")?,
            category: get("category")?,
            verdict: get("verdict")?,
            detail: get("detail")?,
            witness: get("witness")?,
            size: num("size")? as usize,
            iterations: num("iterations")?,
            synth_wins: [num("synth_explicit")?, num("synth_symbolic")?, num("synth_gp")?],
            verif_wins: [num("verif_explicit")?, num("verif_symbolic")?],
            time_synth: dur("time_synth_ms")?,
            time_verif: dur("time_verif_ms")?,
            time_generalize: dur("time_generalize_ms")?,
            time_total: dur("time_total_ms")?,
            seed: num("seed")?,
            target_width: num("target_width")? as u32,
            trajectory: get("trajectory")?,
        })
    }

    pub fn solved(&self) -> bool {
        self.verdict == "SAT" || self.verdict == "UNSAT"
    }

    fn error(name: String, category: String, msg: String, seed: u64) -> Self {
        RunRecord {
            instance: name,
            category,
            verdict: "ERROR".into(),
            detail: msg,
            witness: String::new(),
            size: 0,
            iterations: 0,
            synth_wins: [0; 3],
            verif_wins: [0; 2],
            time_synth: Duration::ZERO,
            time_verif: Duration::ZERO,
            time_generalize: Duration::ZERO,
            time_total: Duration::ZERO,
            seed,
            target_width: 0,
            trajectory: String::new(),
        }
    }
}

/// The outcome of solving one instance.
#[derive(Clone, Debug)]
pub struct Run {
    pub result: crate::cegis::SynthesisResult,
    pub record: RunRecord,
}

pub fn solve_instance(inst: &Instance, cfg: &SolverConfig) -> Run {
    let cfg = inst.config(cfg);
    let result = refinement_loop(&inst.problem, &cfg);
    let s = &result.stats;
    let w = result.target_width;
    let (verdict, detail, witness, size) = match &result.outcome {
        Outcome::Sat { witness, minimal_length } => {
            let detail = auto_disjunct(&inst.encoded.roles, witness, w).map(|d| d.to_string()).unwrap_or_default();
            let text = print_programs(witness.iter().map(|(n, p)| (n.as_str(), p)), None);
            ("SAT", detail, text, *minimal_length)
        }
        Outcome::Unsat => ("UNSAT", String::new(), String::new(), 0),
        Outcome::BoundExhausted(r) => ("BOUND_EXHAUSTED", r.name().to_string(), String::new(), 0),
    };
    let trajectory = s
        .trajectory
        .iter()
        .map(|p| format!("{},{},{}", p.l, p.c, p.w_syn.bits()))
        .collect::<Vec<_>>()
        .join(";");
    let record = RunRecord {
        instance: inst.name.clone(),
        category: inst.category.clone(),
        verdict: verdict.into(),
        detail,
        witness,
        size,
        iterations: s.iterations,
        synth_wins: s.synth_wins,
        verif_wins: [s.verif_wins[0], s.verif_wins[1]],
        time_synth: s.synth_time,
        time_verif: s.verif_time,
        time_generalize: s.generalize_time,
        time_total: s.total_time,
        seed: cfg.seed,
        target_width: w.bits(),
        trajectory,
    };
    Run { result, record }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Valid,
    Counterexample(Vec<(String, u64)>),
    Incomplete,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("witness has no program for `{0}`")]
    Missing(String),
    #[error("witness program `{name}` does not fit: {msg}")]
    Shape { name: String, msg: String },
}

/// What an unknown stands for in the encoded task, for display.
pub fn role_of(roles: &Roles, name: &str) -> Option<&'static str> {
    let is = |r: &Option<String>| r.as_deref() == Some(name);
    if is(&roles.invariant) {
        Some("invariant")
    } else if is(&roles.rank) {
        Some("ranking function")
    } else if is(&roles.rank_invariant) {
        Some("supporting invariant")
    } else if is(&roles.recurrence) {
        Some("recurrence set")
    } else if is(&roles.successor) {
        Some("successor")
    } else if roles.initial.iter().any(|n| n == name) {
        Some("initial state")
    } else if is(&roles.selector) {
        Some("disjunct selector")
    } else if is(&roles.program) {
        Some("program")
    } else {
        None
    }
}

/// Re-verifies a witness at the target width, independently of how it was found.
pub fn check_witness(
    inst: &Instance,
    witness: &[(String, Program)],
    cfg: &SolverConfig,
) -> Result<CheckOutcome, CheckError> {
    let cfg = inst.config(cfg);
    let mut programs = Vec::new();
    for (k, u) in inst.problem.unknowns.iter().enumerate() {
        let found = witness.iter().find(|(n, _)| *n == u.name).or_else(|| {
            // A lone unnamed program stands for a lone unknown.
            (inst.problem.unknowns.len() == 1 && witness.len() == 1 && k == 0).then(|| &witness[0])
        });
        let (_, p) = found.ok_or_else(|| CheckError::Missing(u.name.clone()))?;
        if p.arity != u.in_arity || p.outputs.len() != u.out_arity {
            return Err(CheckError::Shape {
                name: u.name.clone(),
                msg: format!("arity {} with {} output(s), expected {} and {}", p.arity, p.outputs.len(), u.in_arity, u.out_arity),
            });
        }
        let v = crate::lvm::validate(p);
        if !v.is_empty() {
            let msg = v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            return Err(CheckError::Shape { name: u.name.clone(), msg });
        }
        programs.push(p.clone());
    }
    let spec = crate::specir::CompiledSpec::new(&inst.problem);
    let w = target_width(&inst.problem, &cfg);
    Ok(match verify(&spec, &programs, w, &cfg, None).verdict {
        Verdict::Valid => CheckOutcome::Valid,
        Verdict::Counterexample(a) => {
            CheckOutcome::Counterexample(inst.problem.universals.iter().map(|(n, _)| n.clone()).zip(a).collect())
        }
        Verdict::Incomplete => CheckOutcome::Incomplete,
    })
}

/// Reads a witness file: `program NAME` blocks, or a single bare program.
pub fn parse_witness(text: &str) -> Result<Vec<(String, Program)>, crate::lvm::ParseProgramError> {
    if text.lines().any(|l| l.trim_start().starts_with("program ")) {
        Ok(parse_programs(text)?.0)
    } else {
        Ok(vec![(String::new(), parse_program(text)?.0)])
    }
}

fn instance_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("spec" | "loop" | "sopt")))
        .collect();
    files.sort();
    Ok(files)
}

/// Solves every instance in `dir`, in file-name order. Failures become
/// `ERROR` records; loop files without a task run as `auto`.
pub fn bench(dir: &Path, cfg: &SolverConfig) -> std::io::Result<Vec<RunRecord>> {
    let mut cfg = cfg.clone();
    cfg.timeout = cfg.timeout.or(Some(BENCH_TIMEOUT));
    let cfg = &cfg;
    let mut out = Vec::new();
    for path in instance_files(dir)? {
        let task = match frontends::parse_loop(&std::fs::read_to_string(&path).unwrap_or_default()) {
            Ok(s) if path.extension().is_some_and(|e| e == "loop") && s.task.is_none() => Some(TaskKind::Auto),
            _ => None,
        };
        match load_instance(&path, task) {
            Ok(inst) => out.push(solve_instance(&inst, cfg).record),
            Err(e) => out.push(RunRecord::error(stem(&path), "unknown".into(), e.to_string(), cfg.seed)),
        }
    }
    Ok(out)
}

fn secs(d: Duration) -> String {
    format!("{:.2}", d.as_secs_f64())
}

fn pct(part: u64, total: u64) -> String {
    if total == 0 {
        "-".into()
    } else {
        format!("{:.0}%", 100.0 * part as f64 / total as f64)
    }
}

/// Per-category summary, strategy win shares and phase time shares.
pub fn report(records: &[RunRecord]) -> String {
    let mut cats: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        cats.entry(r.category.as_str()).or_default().push(r);
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:>11} {:>8} {:>10} {:>10} {:>10} {:>11}",
        "category", "#benchmarks", "#solved", "avg size", "avg iters", "avg time", "total time"
    );
    let mut rows: Vec<(&str, Vec<&RunRecord>)> = cats.into_iter().collect();
    rows.push(("total", records.iter().collect()));
    for (name, rs) in &rows {
        let solved: Vec<&&RunRecord> = rs.iter().filter(|r| r.solved()).collect();
        let sat: Vec<&&RunRecord> = solved.iter().copied().filter(|r| r.verdict == "SAT").collect();
        let avg = |xs: Vec<f64>| if xs.is_empty() { "-".to_string() } else { format!("{:.1}", xs.iter().sum::<f64>() / xs.len() as f64) };
        let total: Duration = rs.iter().map(|r| r.time_total).sum();
        let avg_time = if solved.is_empty() {
            "-".to_string()
        } else {
            secs(solved.iter().map(|r| r.time_total).sum::<Duration>() / solved.len() as u32)
        };
        let _ = writeln!(
            s,
            "{:<12} {:>11} {:>8} {:>10} {:>10} {:>10} {:>11}",
            name,
            rs.len(),
            solved.len(),
            avg(sat.iter().map(|r| r.size as f64).collect()),
            avg(solved.iter().map(|r| r.iterations as f64).collect()),
            avg_time,
            secs(total)
        );
    }
    let syn: [u64; 3] = std::array::from_fn(|k| records.iter().map(|r| r.synth_wins[k]).sum());
    let ver: [u64; 2] = std::array::from_fn(|k| records.iter().map(|r| r.verif_wins[k]).sum());
    let (st, vt) = (syn.iter().sum::<u64>(), ver.iter().sum::<u64>());
    let _ = writeln!(s, "\nwins       {:>9} {:>9} {:>9}", "explicit", "symbolic", "gp");
    let _ = writeln!(
        s,
        "synth      {:>9} {:>9} {:>9}",
        pct(syn[0], st),
        pct(syn[1], st),
        pct(syn[StrategyKind::Gp as usize], st)
    );
    let _ = writeln!(s, "verif      {:>9} {:>9} {:>9}", pct(ver[0], vt), pct(ver[1], vt), "-");
    let phase: [Duration; 3] = [
        records.iter().map(|r| r.time_synth).sum(),
        records.iter().map(|r| r.time_verif).sum(),
        records.iter().map(|r| r.time_generalize).sum(),
    ];
    let pt = phase.iter().sum::<Duration>().as_nanos() as u64;
    let _ = writeln!(s, "\ntime       {:>9} {:>9} {:>10}", "synth", "verif", "generalize");
    let p: Vec<String> = phase.iter().map(|d| pct(d.as_nanos() as u64, pt)).collect();
    let _ = writeln!(s, "share      {:>9} {:>9} {:>10}", p[0], p[1], p[2]);
    s
}
