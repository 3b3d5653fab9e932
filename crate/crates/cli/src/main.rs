use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use czkit_core::covering::{vitali_cover, whitney_cover};
use czkit_core::czd::{certify_czd, cz_decompose};
use czkit_core::exponent::parse_exponent_list;
use czkit_core::interp::{phi_query, phi_region_sup};
use czkit_core::kernel::{build_kernel, BumpProfile};
use czkit_core::maximal::{
    check_comparison, check_lebesgue_points, check_lp_bound, check_weak11, maximal_centred, maximal_uncentred,
};
use czkit_core::mixed::{check_mixed_maximal, MixedNormTensor};
use czkit_core::operator::{check_czo_bound, check_patched_bound, load_kernel_csv, CzoConfig, DEFAULT_SEED, DEFAULT_TRIALS};
use czkit_core::space::{doubling_constant, doubling_profile};
use czkit_core::suite::{emit_plot_data, run_suite_in, PlotKind, SuiteConfig};
use czkit_core::{BoundReport, Exponent, FunctionOnSpace, MetricMeasureSpace};

/// Finite checks for Calderón–Zygmund theory on metric measure spaces.
#[derive(Parser)]
#[command(name = "czkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a space file or compute its doubling profile.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Vitali and Whitney coverings.
    #[command(subcommand)]
    Cover(CoverCmd),
    /// Evaluate the maximal function and write it as CSV.
    Maximal(MaximalArgs),
    /// Verify maximal-function inequalities.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Calderón–Zygmund decomposition of a function.
    Czd(CzdArgs),
    /// Interpolation constant phi(r, p), or its sup over a region.
    Phi(PhiArgs),
    /// Build the smoothing kernel S_r and certify it.
    Kernel(KernelArgs),
    /// Operator bounds for a kernel read from CSV.
    #[command(subcommand)]
    Czo(CzoCmd),
    /// Mixed-norm maximal checks.
    #[command(subcommand)]
    Mixed(MixedCmd),
    /// Run a configured verification suite.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum SpaceCmd {
    Validate {
        file: PathBuf,
    },
    Doubling {
        file: PathBuf,
        #[arg(long)]
        rmax: f64,
        /// Profile CSV: r_lo, r_hi, doubling.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CoverCmd {
    Vitali {
        space: PathBuf,
        #[arg(long)]
        set: String,
        /// One radius per member of the set, or one per point.
        #[arg(long)]
        radii: PathBuf,
        #[arg(long = "R")]
        big_r: f64,
    },
    Whitney {
        space: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long = "R")]
        big_r: f64,
    },
}

#[derive(Args)]
struct MaximalArgs {
    space: PathBuf,
    function: PathBuf,
    #[arg(long = "R")]
    big_r: f64,
    #[arg(long)]
    centred: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCmd {
    Maximal {
        space: PathBuf,
        function: PathBuf,
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long, default_value = "1.5,2,4,inf")]
        p: String,
        /// Support set for the weak and strong bounds; defaults to every point.
        #[arg(long = "E")]
        set: Option<String>,
    },
}

#[derive(Args)]
struct CzdArgs {
    space: PathBuf,
    function: PathBuf,
    #[arg(long = "E")]
    set: String,
    #[arg(long = "R")]
    big_r: f64,
    #[arg(long, default_value_t = 2.5)]
    kappa: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct PhiArgs {
    #[command(subcommand)]
    region: Option<PhiRegion>,
    #[arg(long)]
    r: Option<Exponent>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Subcommand)]
enum PhiRegion {
    Region {
        #[arg(long, default_value_t = 2.0)]
        c1: f64,
        #[arg(long, default_value_t = 2.0)]
        c2: f64,
        #[arg(long, default_value_t = 50)]
        grid: usize,
    },
}

#[derive(Args)]
struct KernelArgs {
    space: PathBuf,
    #[arg(long)]
    r: f64,
    #[arg(long = "R")]
    big_r: f64,
    #[arg(long, default_value_t = 7.0 / 6.0)]
    eta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CzoCommon {
    space: PathBuf,
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long = "R")]
    big_r: f64,
    #[arg(long, default_value_t = 2.5)]
    kappa: f64,
    #[arg(long, default_value = "inf")]
    r: Exponent,
    #[arg(long, default_value = "1.5,2")]
    p: String,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Use this A_R instead of the computed bound.
    #[arg(long = "A")]
    a_override: Option<f64>,
}

#[derive(Subcommand)]
enum CzoCmd {
    Check {
        #[command(flatten)]
        common: CzoCommon,
        #[arg(long = "E")]
        set: String,
    },
    Patched {
        #[command(flatten)]
        common: CzoCommon,
    },
}

#[derive(Subcommand)]
enum MixedCmd {
    Check {
        space: PathBuf,
        tensor: PathBuf,
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json and the plot CSVs; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Index list such as `0,3,5-9` (ranges inclusive) or `all`.
fn parse_ids(spec: &str, n: usize) -> Result<Vec<usize>> {
    if spec.trim() == "all" {
        return Ok((0..n).collect());
    }
    let mut out = Vec::new();
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = tok.split_once('-') {
            let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
            if a > b {
                bail!("empty range {tok}");
            }
            out.extend(a..=b);
        } else {
            out.push(tok.parse().with_context(|| format!("bad index {tok:?}"))?);
        }
    }
    out.sort_unstable();
    out.dedup();
    if let Some(&bad) = out.iter().find(|&&i| i >= n) {
        bail!("index {bad} out of range for a space of {n} points");
    }
    Ok(out)
}

fn parse_p_list(spec: &str) -> Result<Vec<f64>> {
    parse_exponent_list(spec)?
        .into_iter()
        .map(|e| match e {
            Exponent::Finite(p) => Ok(p),
            Exponent::Infinite => bail!("p must be finite here"),
        })
        .collect()
}

fn load_space(path: &Path) -> Result<MetricMeasureSpace> {
    Ok(MetricMeasureSpace::load(path)?)
}

fn load_function(path: &Path, space: &MetricMeasureSpace) -> Result<FunctionOnSpace> {
    let f = FunctionOnSpace::load(path)?;
    f.check_space(space).with_context(|| path.display().to_string())?;
    Ok(f)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

/// Prints the reports and turns the verdict into an exit status.
fn verdict(reports: &[BoundReport]) -> ExitCode {
    let failed: Vec<&BoundReport> = reports.iter().filter(|r| !r.pass).collect();
    if failed.is_empty() {
        return ExitCode::SUCCESS;
    }
    banner(failed.iter().map(|r| format!("{} (ratio {}, witness {})", r.name, r.ratio, r.witness)));
    ExitCode::from(1)
}

fn banner(lines: impl Iterator<Item = String>) {
    eprintln!("==================================================================");
    eprintln!("IMPLEMENTATION BUG: a theorem-guaranteed inequality failed");
    eprintln!("==================================================================");
    for l in lines {
        eprintln!("  {l}");
    }
}

fn maximal_csv(values: &[f64]) -> String {
    let mut s = String::from("point,value\n");
    for (x, v) in values.iter().enumerate() {
        s.push_str(&format!("{x},{v}\n"));
    }
    s
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Space(SpaceCmd::Validate { file }) => {
            let s = load_space(&file)?;
            println!(
                "{}",
                pretty(&json!({
                    "valid": true,
                    "n": s.len(),
                    "total_mass": s.total_mass(),
                    "diameter": s.diameter(),
                    "min_distance": s.min_distance(),
                }))
            );
        }
        Command::Space(SpaceCmd::Doubling { file, rmax, out }) => {
            if !(rmax > 0.0) {
                bail!("--rmax must be positive");
            }
            let s = load_space(&file)?;
            let profile = doubling_profile(&s, rmax);
            if let Some(out) = out {
                let mut csv = String::from("r_lo,r_hi,doubling\n");
                for (lo, hi, v) in profile.pieces() {
                    csv.push_str(&format!("{lo},{hi},{v}\n"));
                }
                write_or_print(Some(&out), &csv)?;
            }
            println!("{}", pretty(&json!({ "r_max": rmax, "doubling": doubling_constant(&s, rmax) })));
        }
        Command::Cover(CoverCmd::Vitali { space, set, radii, big_r }) => {
            let s = load_space(&space)?;
            let e = parse_ids(&set, s.len())?;
            let raw = FunctionOnSpace::load(&radii)?;
            let all = raw.values();
            let rad: Vec<f64> = if all.len() == e.len() {
                all.to_vec()
            } else if all.len() == s.len() {
                e.iter().map(|&x| all[x]).collect()
            } else {
                bail!("{} radii for a set of {} points in a space of {}", all.len(), e.len(), s.len());
            };
            let cover = vitali_cover(&s, &e, &rad, big_r)?;
            let disjoint = cover.disjointness_violations(&s);
            let covered = cover.coverage_violations(&s);
            let certificate = cover.certificate_violations(&s, |x| rad[e.binary_search(&x).expect("member")]);
            let reports = vec![
                BoundReport::assertion("vitali balls pairwise disjoint", disjoint, ""),
                BoundReport::assertion("vitali 3-balls cover E", covered, ""),
                BoundReport::assertion("vitali greedy certificate", certificate, ""),
            ];
            println!("{}", pretty(&json!({ "cover": cover, "verification": reports })));
            return Ok(verdict(&reports));
        }
        Command::Cover(CoverCmd::Whitney { space, set, big_r }) => {
            let s = load_space(&space)?;
            let u = parse_ids(&set, s.len())?;
            let cover = whitney_cover(&s, &u, big_r)?;
            let reports = cover.certify(&s);
            println!(
                "{}",
                pretty(&json!({
                    "cover": cover,
                    "verification": {
                        "max_overlap": cover.max_overlap(&s),
                        "overlap_bound": cover.overlap_bound,
                        "reports": reports,
                    },
                }))
            );
            return Ok(verdict(&reports));
        }
        Command::Maximal(a) => {
            if !(a.big_r > 0.0) {
                bail!("--R must be positive");
            }
            let s = load_space(&a.space)?;
            let f = load_function(&a.function, &s)?;
            let m = if a.centred {
                maximal_centred(&s, &f, a.big_r)
            } else {
                maximal_uncentred(&s, &f, a.big_r)
            };
            write_or_print(a.out.as_deref(), &maximal_csv(&m))?;
        }
        Command::Verify(VerifyCmd::Maximal { space, function, big_r, p, set }) => {
            if !(big_r > 0.0) {
                bail!("--R must be positive");
            }
            let s = load_space(&space)?;
            let f = load_function(&function, &s)?;
            let e = match set {
                Some(spec) => parse_ids(&spec, s.len())?,
                None => (0..s.len()).collect(),
            };
            let mut reports = vec![check_lebesgue_points(&s, &f), check_comparison(&s, &f, big_r)];
            reports.push(check_weak11(&s, &f, &e, big_r, None)?);
            for p in parse_exponent_list(&p)? {
                reports.push(check_lp_bound(&s, &f, &e, big_r, p)?);
            }
            println!("{}", pretty(&json!({ "reports": reports })));
            return Ok(verdict(&reports));
        }
        Command::Czd(a) => {
            let s = load_space(&a.space)?;
            let f = load_function(&a.function, &s)?;
            let e = parse_ids(&a.set, s.len())?;
            let dec = cz_decompose(&s, &f, &e, a.big_r, a.kappa, a.alpha)?;
            let reports = certify_czd(&s, &dec);
            write_or_print(a.out.as_deref(), &pretty(&json!({ "decomposition": dec, "reports": reports })))?;
            if a.out.is_some() {
                println!("{}", pretty(&json!({ "bad_points": dec.bad_set.len(), "balls": dec.centers.len() })));
            }
            return Ok(verdict(&reports));
        }
        Command::Phi(PhiArgs { region: Some(PhiRegion::Region { c1, c2, grid }), .. }) => {
            println!("{}", pretty(&phi_region_sup(c1, c2, grid)?));
        }
        Command::Phi(PhiArgs { region: None, r, p }) => {
            let (Some(r), Some(p)) = (r, p) else {
                bail!("phi needs --r and --p (or the region subcommand)");
            };
            println!("{}", pretty(&phi_query(r, p)?));
        }
        Command::Kernel(a) => {
            let s = load_space(&a.space)?;
            let k = build_kernel(&s, &BumpProfile::new(a.eta)?, a.r, a.big_r)?;
            if let Some(out) = &a.out {
                k.write_csv(out)?;
            }
            let reports = k.certify(&s);
            let summary = json!({
                "r": k.r,
                "R": k.scale,
                "eta": k.eta,
                "doubling_4R": k.doubling,
                "empirical_c6": k.empirical_c6,
                "identity_shortcut": k.identity,
                "reports": reports,
            });
            match &a.report {
                Some(path) => write_or_print(Some(path), &pretty(&summary))?,
                None => println!("{}", pretty(&summary)),
            }
            return Ok(verdict(&reports));
        }
        Command::Czo(cmd) => {
            let (common, set) = match cmd {
                CzoCmd::Check { common, set } => (common, Some(set)),
                CzoCmd::Patched { common } => (common, None),
            };
            let s = load_space(&common.space)?;
            let k = load_kernel_csv(&common.kernel, s.len())?;
            let config = CzoConfig {
                trials: common.trials,
                seed: common.seed,
                a_override: common.a_override,
                ..CzoConfig::new(common.kappa, common.r, parse_p_list(&common.p)?)
            };
            let (value, reports) = match set {
                Some(set) => {
                    let e = parse_ids(&set, s.len())?;
                    let c = check_czo_bound(&s, &k, &e, common.big_r, &config)?;
                    let reports = c.reports.clone();
                    (serde_json::to_value(c)?, reports)
                }
                None => {
                    let c = check_patched_bound(&s, &k, common.big_r, &config)?;
                    let reports = c.reports.clone();
                    (serde_json::to_value(c)?, reports)
                }
            };
            println!("{}", pretty(&value));
            return Ok(verdict(&reports));
        }
        Command::Mixed(MixedCmd::Check { space, tensor, big_r, trials, seed }) => {
            let s = load_space(&space)?;
            let t = MixedNormTensor::load(&tensor, &s)?;
            let report = check_mixed_maximal(&s, &t, big_r, trials, seed)?;
            println!("{}", pretty(&report));
            return Ok(verdict(std::slice::from_ref(&report)));
        }
        Command::Run(a) => {
            let config = SuiteConfig::load(&a.config)?;
            let base = a.config.parent().filter(|p| !p.as_os_str().is_empty());
            let report = run_suite_in(&config, base)?;
            let dir = a.out.or_else(|| config.output_dir.clone());
            if let Some(dir) = &dir {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                write_or_print(Some(&dir.join("report.json")), &report.to_json())?;
                for kind in PlotKind::ALL {
                    emit_plot_data(&report, kind.file_stem(), dir)?;
                }
            } else {
                println!("{}", report.to_json());
            }
            let sum = report.body.summary;
            eprintln!(
                "{} checks: {} passed, {} failed, {} skipped",
                sum.checks, sum.passed, sum.failed, sum.skipped
            );
            for section in &report.body.sections {
                for s in &section.skipped {
                    eprintln!("skipped [{:?} {}]: {s}", section.check, section.space.as_deref().unwrap_or("-"));
                }
            }
            let failures = report.failures();
            if !failures.is_empty() {
                banner(failures.iter().map(|(sec, r)| {
                    format!(
                        "[{:?} {}] {} (ratio {}, witness {})",
                        sec.check,
                        sec.space.as_deref().unwrap_or("-"),
                        r.name,
                        r.ratio,
                        r.witness
                    )
                }));
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CZKIT_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("CZKIT_THREADS={v:?} is not a count"))?;
        if n == 0 {
            bail!("CZKIT_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
