use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use qoetm_core::export::{
    write_aggregate_demand_csv, write_cumulative_csv, write_per_second_csv, write_second_stats_csv,
    write_summary_csv,
};
use qoetm_core::{
    aggregate_demand, average_scc, compute_kpis, cumulative_shares, emulate_session, generate_clip,
    load_ladder_trace, run_scenario, save_ladder_trace, sweep_capacity, BreakRule, GenParams,
    LadderTrace, Method, Scenario, ScenarioConfig, TargetGrid, UtilityCurve,
};
use rayon::prelude::*;

use crate::config::FileConfig;
use crate::parse::{parse_caps, parse_methods, parse_mode, parse_targets};
use crate::{
    Common, EmulateArgs, Failure, GenArgs, ScenarioArgs, SharesArgs, SimulateArgs, SweepArgs,
};

type CmdResult = Result<(), Failure>;

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

const DEFAULT_TARGETS: &str = "10:95";

struct Setup {
    cfg: FileConfig,
    out: PathBuf,
    pool: rayon::ThreadPool,
}

fn setup(common: Common) -> Result<Setup, Failure> {
    let cfg = match &common.config {
        Some(path) => FileConfig::load(path).usage()?,
        None => FileConfig::default(),
    };
    let out = common
        .out
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Failure::Usage(anyhow!("--out is required")))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    match common.jobs.or(cfg.jobs) {
        Some(0) => return Err(Failure::Usage(anyhow!("--jobs must be at least 1"))),
        Some(n) => builder = builder.num_threads(n),
        None => {}
    }
    let pool = builder.build().runtime()?;
    Ok(Setup { cfg, out, pool })
}

fn create(dir: &Path, name: &str) -> anyhow::Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

/// The CSV files named by `path`: the file itself, or every `*.csv` in a directory, sorted.
fn ladder_files(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        bail!("ladder path {} does not exist", path.display());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("listing {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no ladder CSV files in {}", path.display());
    }
    Ok(files)
}

fn load_ladders(files: &[PathBuf]) -> anyhow::Result<Vec<Arc<LadderTrace>>> {
    let clips: Vec<Arc<LadderTrace>> = files
        .par_iter()
        .map(|f| {
            load_ladder_trace(f)
                .map(Arc::new)
                .with_context(|| format!("loading {}", f.display()))
        })
        .collect::<anyhow::Result<_>>()?;
    for (i, a) in clips.iter().enumerate() {
        if clips[..i].iter().any(|b| b.clip_id() == a.clip_id()) {
            bail!(
                "clip id {:?} appears in more than one ladder file",
                a.clip_id()
            );
        }
    }
    Ok(clips)
}

pub fn gen(a: GenArgs) -> CmdResult {
    let Setup { cfg, out, pool } = setup(a.common)?;
    let mut params = GenParams::default();
    if let Some(p) = cfg.profiles {
        params.profiles = p;
    }
    if let Some(v) = cfg.vmaf {
        params.vmaf = v;
    }
    params.clip_count = a.clips.or(cfg.clips).unwrap_or(params.clip_count);
    params.windows_per_clip = a.windows.or(cfg.windows).unwrap_or(params.windows_per_clip);
    params.seed = a.seed.or(cfg.seed).unwrap_or(params.seed);
    if let Some(crfs) = a.crfs.or(cfg.crfs) {
        params.crf_values = crfs;
    }
    params.validate().usage()?;

    let clips: Vec<LadderTrace> = pool
        .install(|| {
            (0..params.clip_count)
                .into_par_iter()
                .map(|i| generate_clip(&params, i))
                .collect::<qoetm_core::Result<_>>()
        })
        .runtime()?;
    fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .runtime()?;
    for clip in &clips {
        let path = out.join(format!("{}.csv", clip.clip_id()));
        save_ladder_trace(clip, &path).runtime()?;
    }
    println!(
        "wrote {} clips x {} windows to {}",
        clips.len(),
        params.windows_per_clip,
        out.display()
    );
    Ok(())
}

pub fn emulate(a: EmulateArgs) -> CmdResult {
    let Setup { cfg, out, pool } = setup(a.common)?;
    let ladder = a
        .ladder
        .or(cfg.ladder)
        .ok_or_else(|| Failure::Usage(anyhow!("--ladder is required")))?;
    let files = ladder_files(&ladder).usage()?;
    let targets = a
        .targets
        .or_else(|| cfg.targets.map(|t| t.to_string()))
        .unwrap_or_else(|| DEFAULT_TARGETS.into());
    let grid = parse_targets(&targets).usage()?;
    let want_scc = a.scc || cfg.scc.unwrap_or(false);

    pool.install(|| -> anyhow::Result<()> {
        let clips = load_ladders(&files)?;
        let traces = clips
            .par_iter()
            .map(|c| emulate_session(c.clip_id(), c.view(), &grid))
            .collect::<qoetm_core::Result<Vec<_>>>()?;
        for trace in &traces {
            let (path, w) = create(&out, &format!("{}.csv", trace.session_id()))?;
            qoetm_core::emulation::write_target_trace_csv(trace, w)?;
            println!("wrote {}", path.display());
        }
        if want_scc {
            let sccs = traces
                .iter()
                .map(|t| average_scc(&[t], t.session_id()))
                .collect::<qoetm_core::Result<Vec<_>>>()?;
            let (path, w) = create(&out, "avg_scc.csv")?;
            qoetm_core::emulation::write_avg_scc_csv(&sccs, w)?;
            println!("wrote {}", path.display());
        }
        Ok(())
    })
    .runtime()
}

enum Source {
    Ladder(Vec<PathBuf>),
    Seed(u64),
}

struct ScenarioPlan {
    source: Source,
    sessions_per_clip: usize,
    len: usize,
    grid: TargetGrid,
    curve: UtilityCurve,
    rule: BreakRule,
}

fn plan_scenario(a: ScenarioArgs, cfg: &FileConfig) -> Result<ScenarioPlan, Failure> {
    // a flag for either source overrides both config keys
    let source = match (a.ladder, a.seed, &cfg.ladder, cfg.seed) {
        (Some(l), _, _, _) => Source::Ladder(ladder_files(&l).usage()?),
        (None, Some(s), _, _) => Source::Seed(s),
        (None, None, Some(_), Some(_)) => {
            return Err(Failure::Usage(anyhow!(
                "config sets both ladder and seed; use one"
            )))
        }
        (None, None, Some(l), None) => Source::Ladder(ladder_files(l).usage()?),
        (None, None, None, s) => Source::Seed(s.unwrap_or(qoetm_core::synth::DEFAULT_SEED)),
    };
    let clips = match &source {
        Source::Ladder(files) => files.len(),
        Source::Seed(_) => GenParams::default().clip_count,
    };
    let sessions = a.sessions.or(cfg.sessions).unwrap_or(30);
    if sessions == 0 || !sessions.is_multiple_of(clips) {
        return Err(Failure::Usage(anyhow!(
            "--sessions {sessions} must be a positive multiple of the clip count {clips}"
        )));
    }
    let len = a.len.or(cfg.len).unwrap_or(220);
    if len == 0 {
        return Err(Failure::Usage(anyhow!("--len must be at least 1")));
    }
    let targets = a
        .targets
        .or_else(|| cfg.targets.as_ref().map(|t| t.to_string()))
        .unwrap_or_else(|| DEFAULT_TARGETS.into());
    let grid = parse_targets(&targets).usage()?;
    let curve = match a.curve.or_else(|| cfg.curve.clone()) {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .with_context(|| format!("reading curve {}", path.display()))
                .usage()?;
            toml::from_str::<UtilityCurve>(&text)
                .with_context(|| format!("parsing curve {}", path.display()))
                .usage()?
        }
        None => UtilityCurve::default(),
    };
    let rule = match a.mode.or_else(|| cfg.mode.clone()) {
        Some(m) => parse_mode(&m).usage()?,
        None => BreakRule::Break,
    };
    Ok(ScenarioPlan {
        source,
        sessions_per_clip: sessions / clips,
        len,
        grid,
        curve,
        rule,
    })
}

fn build_scenario(plan: ScenarioPlan) -> anyhow::Result<Scenario> {
    let clips = match &plan.source {
        Source::Ladder(files) => load_ladders(files)?,
        Source::Seed(seed) => {
            let params = GenParams {
                seed: *seed,
                ..GenParams::default()
            };
            (0..params.clip_count)
                .into_par_iter()
                .map(|i| generate_clip(&params, i).map(Arc::new))
                .collect::<qoetm_core::Result<_>>()?
        }
    };
    let scenario = Scenario::from_clips(
        &clips,
        plan.sessions_per_clip,
        plan.len,
        plan.grid,
        plan.curve,
    )?;
    Ok(scenario.with_break_rule(plan.rule))
}

fn methods_of(flag: Option<String>, cfg: &FileConfig) -> Result<Vec<Method>, Failure> {
    let text = flag
        .or_else(|| cfg.methods.as_ref().map(|m| m.to_string()))
        .unwrap_or_else(|| "all".into());
    parse_methods(&text).usage()
}

fn caps_of(flag: Option<String>, cfg: &FileConfig, default: &str) -> Result<Vec<f64>, Failure> {
    let text = flag
        .or_else(|| cfg.cap.as_ref().map(|c| c.to_string()))
        .unwrap_or_else(|| default.into());
    parse_caps(&text).usage()
}

pub fn simulate(a: SimulateArgs) -> CmdResult {
    let Setup { cfg, out, pool } = setup(a.common)?;
    let caps = caps_of(a.cap, &cfg, "50e6")?;
    let methods = methods_of(a.methods, &cfg)?;
    let plan = plan_scenario(a.scenario, &cfg)?;

    pool.install(|| -> anyhow::Result<()> {
        let scenario = build_scenario(plan)?;
        let configs: Vec<ScenarioConfig> = caps
            .iter()
            .flat_map(|&capacity_bps| {
                methods.iter().map(move |&method| ScenarioConfig {
                    capacity_bps,
                    method,
                })
            })
            .collect();
        let runs = configs
            .par_iter()
            .map(|&c| run_scenario(&scenario, c))
            .collect::<qoetm_core::Result<Vec<_>>>()?;
        let reports = runs
            .iter()
            .map(|r| compute_kpis(&r.records))
            .collect::<qoetm_core::Result<Vec<_>>>()?;
        let summaries = runs
            .iter()
            .map(|r| r.summary())
            .collect::<qoetm_core::Result<Vec<_>>>()?;
        let ids = scenario.session_ids();

        let (path, w) = create(&out, "per_second.csv")?;
        write_per_second_csv(&runs, &ids, w)?;
        println!("wrote {}", path.display());
        let (path, w) = create(&out, "per_second_stats.csv")?;
        write_second_stats_csv(runs.iter().zip(&reports), w)?;
        println!("wrote {}", path.display());
        let (path, w) = create(&out, "summary.csv")?;
        write_summary_csv(&summaries, w)?;
        println!("wrote {}", path.display());
        Ok(())
    })
    .runtime()
}

pub fn sweep(a: SweepArgs) -> CmdResult {
    let Setup { cfg, out, pool } = setup(a.common)?;
    let caps = caps_of(a.cap, &cfg, "10e6:100e6:1e6")?;
    let methods = methods_of(a.methods, &cfg)?;
    let plan = plan_scenario(a.scenario, &cfg)?;

    pool.install(|| -> anyhow::Result<()> {
        let scenario = build_scenario(plan)?;
        let rows = sweep_capacity(&scenario, &caps, &methods)?;
        let (path, w) = create(&out, "summary.csv")?;
        write_summary_csv(&rows, w)?;
        println!("wrote {} ({} rows)", path.display(), rows.len());
        Ok(())
    })
    .runtime()
}

pub fn export_shares(a: SharesArgs) -> CmdResult {
    let Setup { cfg, out, pool } = setup(a.common)?;
    let target = a.target.or(cfg.target).unwrap_or(70);
    let plan = plan_scenario(a.scenario, &cfg)?;
    if plan.grid.index_of(target).is_none() {
        return Err(Failure::Usage(anyhow!(
            "--target {target} is not on the target grid"
        )));
    }

    pool.install(|| -> anyhow::Result<()> {
        let scenario = build_scenario(plan)?;
        let traces: Vec<_> = scenario.sessions().iter().map(|s| &s.trace).collect();
        let ids = scenario.session_ids();
        let cumulative = cumulative_shares(&traces, target)?;
        let totals = aggregate_demand(&traces)?;

        let (path, w) = create(&out, "cumulative_shares.csv")?;
        write_cumulative_csv(&cumulative, &ids, w)?;
        println!("wrote {}", path.display());
        let (path, w) = create(&out, "aggregate_demand.csv")?;
        write_aggregate_demand_csv(&totals, scenario.grid().targets(), w)?;
        println!("wrote {}", path.display());
        Ok(())
    })
    .runtime()
}
