//! Verification-suite orchestration and plot-data emission.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{vitali_cover, whitney_cover};
use crate::czd::{admissibility_threshold, certify_czd, cz_decompose};
use crate::error::{invalid, Error, Result};
use crate::exponent::Exponent;
use crate::function::FunctionOnSpace;
use crate::interp::{phi, phi_region_sup};
use crate::kernel::{build_kernel, BumpProfile};
use crate::maximal::{check_comparison, check_lebesgue_points, check_lp_bound, check_weak11};
use crate::mixed::{check_mixed_maximal, check_schur_rowsum, MixedNormTensor};
use crate::operator::{check_czo_bound, CzoConfig};
use crate::report::extended_float;
use crate::report::BoundReport;
use crate::space::{doubling_constant, doubling_profile, generate_space, MetricMeasureSpace, SpaceSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Doubling,
    Covering,
    Maximal,
    Czd,
    Phi,
    Kernel,
    Czo,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSource {
    File { name: String, file: PathBuf },
    Generated { name: String, generator: SpaceSpec },
}

impl SpaceSource {
    pub fn name(&self) -> &str {
        match self {
            SpaceSource::File { name, .. } | SpaceSource::Generated { name, .. } => name,
        }
    }

    /// Relative file paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<MetricMeasureSpace> {
        match self {
            SpaceSource::File { file, .. } => {
                let path = match base {
                    Some(b) if file.is_relative() => b.join(file),
                    _ => file.clone(),
                };
                MetricMeasureSpace::load(path)
            }
            SpaceSource::Generated { generator, .. } => generate_space(generator),
        }
    }
}

fn default_trials() -> usize {
    200
}
fn default_seed() -> u64 {
    crate::operator::DEFAULT_SEED
}
fn default_kappa() -> f64 {
    2.5
}
fn default_r_exp() -> Exponent {
    Exponent::Infinite
}
fn default_exponents() -> Vec<Exponent> {
    vec![Exponent::Finite(1.5), Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Infinite]
}
fn default_phi_r() -> Vec<Exponent> {
    vec![Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Infinite]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    #[serde(default)]
    pub spaces: Vec<SpaceSource>,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default = "default_exponents")]
    pub exponents: Vec<Exponent>,
    #[serde(default = "default_phi_r")]
    pub phi_r: Vec<Exponent>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_r_exp")]
    pub r_exp: Exponent,
    /// Relative slack for every inequality, replacing the default `1e-9`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            spaces: Vec::new(),
            checks: Vec::new(),
            radii: Vec::new(),
            exponents: default_exponents(),
            phi_r: default_phi_r(),
            trials: default_trials(),
            seed: default_seed(),
            kappa: default_kappa(),
            r_exp: default_r_exp(),
            report_slack: None,
            output_dir: None,
        }
    }
}

impl SuiteConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    #[serde(with = "extended_float")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub check: CheckKind,
    pub space: Option<String>,
    pub values: Vec<NamedValue>,
    pub reports: Vec<BoundReport>,
    /// Checks whose preconditions failed, with the reason.
    pub skipped: Vec<String>,
}

impl Section {
    fn new(check: CheckKind, space: Option<&str>) -> Self {
        Section {
            check,
            space: space.map(str::to_owned),
            values: Vec::new(),
            reports: Vec::new(),
            skipped: Vec::new(),
        }
    }

    fn value(&mut self, name: impl Into<String>, value: f64) {
        self.values.push(NamedValue {
            name: name.into(),
            value,
        });
    }

    fn absorb<T>(&mut self, what: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.skipped.push(format!("{what}: {e}"));
                None
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlotData {
    /// `(r, p, φ)`.
    pub phi_surface: Vec<(Exponent, f64, f64)>,
    /// `(check, p, ratio, bound)`.
    pub ratio_vs_p: Vec<(String, f64, f64, f64)>,
    /// `(space, R, overlap, points)`.
    pub overlap_hist: Vec<(String, f64, usize, usize)>,
    /// `(space, lo, hi, D)`.
    pub profile: Vec<(String, f64, f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunBody {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: SuiteConfig,
    pub sections: Vec<Section>,
    pub plots: PlotData,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub body: RunBody,
    /// Wall-clock seconds per section, outside the deterministic body.
    pub timing: Vec<(String, f64)>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.body.summary.failed == 0
    }

    pub fn failures(&self) -> Vec<(&Section, &BoundReport)> {
        self.body
            .sections
            .iter()
            .flat_map(|s| s.reports.iter().filter(|r| !r.pass).map(move |r| (s, r)))
            .collect()
    }

    pub fn body_json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs every configured check. Spaces are built up front (a missing file is
/// an error); precondition failures inside a check are recorded as skipped.
pub fn run_suite(config: &SuiteConfig) -> Result<RunReport> {
    run_suite_in(config, None)
}

/// As [`run_suite`], resolving relative space files against `base`.
pub fn run_suite_in(config: &SuiteConfig, base: Option<&Path>) -> Result<RunReport> {
    let spaces: Vec<(String, MetricMeasureSpace)> = config
        .spaces
        .iter()
        .map(|s| Ok((s.name().to_owned(), s.build(base)?)))
        .collect::<Result<_>>()?;

    let mut checks = config.checks.clone();
    checks.dedup();
    let mut sections = Vec::new();
    let mut plots = PlotData::default();
    let mut timing = Vec::new();

    for &check in &checks {
        let started = Instant::now();
        if check == CheckKind::Phi {
            sections.push(run_phi(config, &mut plots));
        } else {
            let results: Vec<(Section, PlotData)> = spaces
                .par_iter()
                .enumerate()
                .map(|(i, (name, space))| run_on_space(check, config, name, space, i as u64))
                .collect();
            for (s, p) in results {
                sections.push(s);
                plots.ratio_vs_p.extend(p.ratio_vs_p);
                plots.overlap_hist.extend(p.overlap_hist);
                plots.profile.extend(p.profile);
            }
        }
        timing.push((format!("{check:?}").to_lowercase(), started.elapsed().as_secs_f64()));
    }

    if let Some(slack) = config.report_slack {
        if !(slack >= 0.0 && slack.is_finite()) {
            return Err(invalid(format!("report slack must be finite and nonnegative, got {slack}")));
        }
        for s in &mut sections {
            for r in &mut s.reports {
                *r = r.clone().with_slack(slack);
            }
        }
    }

    let mut summary = Summary::default();
    for s in &sections {
        summary.checks += s.reports.len();
        summary.passed += s.reports.iter().filter(|r| r.pass).count();
        summary.skipped += s.skipped.len();
    }
    summary.failed = summary.checks - summary.passed;

    Ok(RunReport {
        body: RunBody {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_owned(),
            config: config.clone(),
            sections,
            plots,
            summary,
        },
        timing,
    })
}

fn run_phi(config: &SuiteConfig, plots: &mut PlotData) -> Section {
    let mut s = Section::new(CheckKind::Phi, None);
    let ps: Vec<f64> = (0..=40).map(|i| 1.0 + 0.05 * 1.1f64.powi(i) * i as f64).filter(|&p| p > 1.0).collect();
    for &r in &config.phi_r {
        for &p in &ps {
            if let Some(v) = s.absorb("phi", phi(r, p)) {
                plots.phi_surface.push((r, p, v));
            }
        }
        for p in config.exponents.iter().filter_map(|e| match e {
            Exponent::Finite(p) if *p > 1.0 => Some(*p),
            _ => None,
        }) {
            if let Some(v) = s.absorb("phi", phi(r, p)) {
                s.value(format!("phi({r}, {p})"), v);
            }
        }
    }
    if let Some(sup) = s.absorb("region sup", phi_region_sup(2.0, 2.0, 50)) {
        s.value("phi region sup (C1 = C2 = 2, 50 x 50 grid)", sup.value);
        s.reports.push(BoundReport::new(
            "phi region sup is finite",
            f64::INFINITY,
            sup.value,
            1.0,
            format!("attained at r = {}, p = {}", sup.r, sup.p),
        ));
    }
    s
}

/// Points within `rho` of point 0 (open ball), as a deterministic probe set.
fn ball0(space: &MetricMeasureSpace, rho: f64) -> Vec<usize> {
    space.ball_members(0, rho).expect("point 0 exists")
}

fn run_on_space(check: CheckKind, config: &SuiteConfig, name: &str, space: &MetricMeasureSpace, index: u64) -> (Section, PlotData) {
    let mut s = Section::new(check, Some(name));
    let mut plots = PlotData::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (index.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    let n = space.len();
    let radii = &config.radii;

    match check {
        CheckKind::Doubling => {
            for &r in radii {
                s.value(format!("D_{r}"), doubling_constant(space, r));
            }
            if let Some(&r_max) = radii.iter().max_by(|a, b| a.total_cmp(b)) {
                for (lo, hi, v) in doubling_profile(space, r_max).pieces() {
                    plots.profile.push((name.to_owned(), lo, hi, v));
                }
            }
        }
        CheckKind::Covering => {
            for &r in radii {
                let e = ball0(space, r);
                let rad: Vec<f64> = e.iter().map(|_| r * rng.gen_range(0.05..=1.0)).collect();
                if let Some(c) = s.absorb(&format!("vitali R = {r}"), vitali_cover(space, &e, &rad, r)) {
                    s.reports.push(BoundReport::assertion(format!("vitali disjoint (R = {r})"), c.disjointness_violations(space), ""));
                    s.reports.push(BoundReport::assertion(format!("vitali 3r-cover (R = {r})"), c.coverage_violations(space), ""));
                }
                let u = ball0(space, r / 2.0);
                if let Some(w) = s.absorb(&format!("whitney R = {r}"), whitney_cover(space, &u, r)) {
                    let counts = w.overlap_counts(space);
                    let mut hist = std::collections::BTreeMap::new();
                    for &y in &w.target {
                        *hist.entry(counts[y]).or_insert(0usize) += 1;
                    }
                    for (overlap, points) in hist {
                        plots.overlap_hist.push((name.to_owned(), r, overlap, points));
                    }
                    s.reports.extend(w.certify(space));
                }
            }
        }
        CheckKind::Maximal => {
            let f = FunctionOnSpace::scalar((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            s.reports.push(check_lebesgue_points(space, &f));
            for &r in radii {
                s.reports.push(check_comparison(space, &f, r));
                let e = ball0(space, 3.0 * r);
                if let Some(rep) = s.absorb("weak(1,1)", check_weak11(space, &f, &e, r, None)) {
                    s.reports.push(rep);
                }
                for &p in &config.exponents {
                    if let Some(rep) = s.absorb("L^p", check_lp_bound(space, &f, &e, r, p)) {
                        plots.ratio_vs_p.push((format!("maximal {name} R = {r}"), p.value(), rep.ratio, rep.claimed_constant));
                        s.reports.push(rep);
                    }
                }
            }
        }
        CheckKind::Czd => {
            for &r in radii {
                let e = ball0(space, r / 2.0);
                let mut v = vec![0.0; n];
                for &x in &e {
                    v[x] = if rng.gen::<f64>() < 0.1 { rng.gen_range(5.0..50.0) } else { rng.gen_range(-1.0..1.0) };
                }
                let f = FunctionOnSpace::scalar(v);
                let alpha = 2.0 * admissibility_threshold(space, &f, &e, r, config.kappa);
                if let Some(dec) = s.absorb(&format!("czd R = {r}"), cz_decompose(space, &f, &e, r, config.kappa, alpha)) {
                    s.value(format!("R = {r}: |U_alpha|"), dec.bad_set.len() as f64);
                    s.reports.extend(certify_czd(space, &dec));
                }
            }
        }
        CheckKind::Kernel => {
            for &r in radii {
                if let Some(k) = s.absorb("kernel", build_kernel(space, &BumpProfile::default(), r / 4.0, r)) {
                    s.value(format!("R = {r}: empirical C6"), k.empirical_c6);
                    s.reports.extend(k.certify(space));
                }
            }
        }
        CheckKind::Czo => {
            let ps: Vec<f64> = config.exponents.iter().filter_map(|e| match e {
                Exponent::Finite(p) if *p > 1.0 => Some(*p),
                _ => None,
            }).collect();
            for &r in radii {
                let e = ball0(space, r / 2.0);
                let cfg = CzoConfig {
                    trials: config.trials,
                    seed: config.seed,
                    ..CzoConfig::new(config.kappa, config.r_exp, ps.clone())
                };
                let Some(k) = s.absorb("kernel", build_kernel(space, &BumpProfile::default(), r / 8.0, r)) else {
                    continue;
                };
                if let Some(c) = s.absorb(&format!("czo R = {r}"), check_czo_bound(space, &k.s, &e, r, &cfg)) {
                    s.value(format!("R = {r}: A_R"), c.a_r);
                    s.value(format!("R = {r}: C_R"), c.c_r.value);
                    for (rep, &p) in c.reports.iter().zip(ps.iter().flat_map(|p| {
                        let both = *p == config.r_exp.value();
                        std::iter::repeat(p).take(if both { 2 } else { 1 })
                    })) {
                        plots.ratio_vs_p.push((format!("czo {name} R = {r}"), p, rep.ratio, rep.claimed_constant));
                    }
                    s.reports.extend(c.reports);
                }
            }
        }
        CheckKind::Mixed => {
            for &r in radii {
                s.reports.push(check_schur_rowsum(space, r));
                for (axes, exps) in [(vec![3, n], vec![2.0, 3.0]), (vec![2, 2, n], vec![2.0, 3.0, 2.0])] {
                    let weights: Vec<Vec<f64>> = axes[..axes.len() - 1]
                        .iter()
                        .map(|&m| vec![1.0; m])
                        .chain(std::iter::once(space.weights().to_vec()))
                        .collect();
                    let total: usize = axes.iter().product();
                    let values = (0..total).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let t = MixedNormTensor::new(axes, weights, exps, values).and_then(|t| check_mixed_maximal(space, &t, r, config.trials.min(20), config.seed));
                    if let Some(rep) = s.absorb("mixed", t) {
                        s.reports.push(rep);
                    }
                }
            }
        }
        CheckKind::Phi => unreachable!("handled without a space"),
    }
    (s, plots)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    PhiSurface,
    RatioVsP,
    OverlapHist,
    Profile,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi_surface" => Ok(PlotKind::PhiSurface),
            "ratio_vs_p" => Ok(PlotKind::RatioVsP),
            "overlap_hist" => Ok(PlotKind::OverlapHist),
            "profile" => Ok(PlotKind::Profile),
            other => Err(invalid(format!(
                "unknown plot kind {other:?}; expected phi_surface, ratio_vs_p, overlap_hist or profile"
            ))),
        }
    }
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [PlotKind::PhiSurface, PlotKind::RatioVsP, PlotKind::OverlapHist, PlotKind::Profile];

    pub fn file_stem(self) -> &'static str {
        match self {
            PlotKind::PhiSurface => "phi_surface",
            PlotKind::RatioVsP => "ratio_vs_p",
            PlotKind::OverlapHist => "overlap_hist",
            PlotKind::Profile => "profile",
        }
    }
}

/// Tidy CSV for one plot kind.
pub fn plot_csv(report: &RunReport, kind: PlotKind) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let plots = &report.body.plots;
    let res: std::result::Result<(), csv::Error> = (|| {
        match kind {
            PlotKind::PhiSurface => {
                w.write_record(["r", "p", "phi"])?;
                for (r, p, v) in &plots.phi_surface {
                    w.write_record([r.to_string(), p.to_string(), v.to_string()])?;
                }
            }
            PlotKind::RatioVsP => {
                w.write_record(["check", "p", "ratio", "bound"])?;
                for (c, p, ratio, bound) in &plots.ratio_vs_p {
                    w.write_record([c.clone(), p.to_string(), ratio.to_string(), bound.to_string()])?;
                }
            }
            PlotKind::OverlapHist => {
                w.write_record(["space", "R", "overlap", "points"])?;
                for (s, r, o, c) in &plots.overlap_hist {
                    w.write_record([s.clone(), r.to_string(), o.to_string(), c.to_string()])?;
                }
            }
            PlotKind::Profile => {
                w.write_record(["space", "r_lo", "r_hi", "doubling"])?;
                for (s, lo, hi, v) in &plots.profile {
                    w.write_record([s.clone(), lo.to_string(), hi.to_string(), v.to_string()])?;
                }
            }
        }
        Ok(())
    })();
    res.expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8")
}

/// Writes `<dir>/<kind>.csv` and returns the path.
pub fn emit_plot_data(report: &RunReport, kind: &str, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let kind: PlotKind = kind.parse()?;
    let path = dir.as_ref().join(format!("{}.csv", kind.file_stem()));
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(&path).map_err(io)?;
    file.write_all(plot_csv(report, kind).as_bytes()).map_err(io)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{GeneratorKind, WeightSpec};

    #[test]
    fn two_point_doubling() {
        let config = SuiteConfig {
            spaces: vec![SpaceSource::Generated {
                name: "pair".into(),
                generator: SpaceSpec {
                    kind: GeneratorKind::Line { n: 2, spacing: 1.0 },
                    weights: WeightSpec::Unit,
                },
            }],
            checks: vec![CheckKind::Doubling],
            radii: vec![1.0],
            ..SuiteConfig::default()
        };
        let report = run_suite(&config).unwrap();
        assert_eq!(report.body.sections[0].values[0].value, 2.0);
        assert!(plot_csv(&report, PlotKind::Profile).starts_with("space,r_lo,r_hi,doubling\n"));
    }

    #[test]
    fn empty_config() {
        let report = run_suite(&SuiteConfig::default()).unwrap();
        assert_eq!(report.body.summary.checks, 0);
        assert!(report.all_passed());
        assert_eq!(plot_csv(&report, PlotKind::OverlapHist), "space,R,overlap,points\n");
        assert!("bogus".parse::<PlotKind>().is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let config = SuiteConfig {
            spaces: vec![SpaceSource::File {
                name: "gone".into(),
                file: "/nonexistent/space.json".into(),
            }],
            ..SuiteConfig::default()
        };
        let err = run_suite(&config).unwrap_err().to_string();
        assert!(err.contains("/nonexistent/space.json"), "{err}");
    }
}
