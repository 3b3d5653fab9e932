use czkit_core::interp::phi;
use czkit_core::kernel::{build_kernel, BumpProfile};
use czkit_core::space::{doubling_constant, doubling_profile, generate_space, GeneratorKind, SpaceFile, SpaceSpec, WeightSpec};
use czkit_core::suite::{
    emit_plot_data, plot_csv, run_suite, run_suite_in, CheckKind, PlotKind, SpaceSource, SuiteConfig,
};
use czkit_core::Exponent;

fn generated(name: &str, kind: GeneratorKind) -> SpaceSource {
    SpaceSource::Generated {
        name: name.into(),
        generator: SpaceSpec { kind, weights: WeightSpec::Unit },
    }
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect()
}

#[test]
fn phi_surface_csv() {
    let config = SuiteConfig { checks: vec![CheckKind::Phi], ..SuiteConfig::default() };
    let report = run_suite(&config).unwrap();
    let text = plot_csv(&report, PlotKind::PhiSurface);
    assert!(text.starts_with("r,p,phi\n"));
    let table = rows(&text);
    assert!(!table.is_empty());
    let mut seen_r = Vec::new();
    for row in &table {
        assert_eq!(row.len(), 3);
        let r: Exponent = row[0].parse().unwrap();
        let p: f64 = row[1].parse().unwrap();
        let v: f64 = row[2].parse().unwrap();
        assert_eq!(v, phi(r, p).unwrap());
        if !seen_r.contains(&r) {
            seen_r.push(r);
        }
    }
    assert_eq!(seen_r, vec![Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Infinite]);
    assert!(report.all_passed());
}

#[test]
fn profile_csv_of_two_points() {
    let config = SuiteConfig {
        spaces: vec![generated("pair", GeneratorKind::Line { n: 2, spacing: 1.0 })],
        checks: vec![CheckKind::Doubling],
        radii: vec![1.0],
        ..SuiteConfig::default()
    };
    let report = run_suite(&config).unwrap();
    let table = rows(&plot_csv(&report, PlotKind::Profile));
    let space = generate_space(&GeneratorKind::Line { n: 2, spacing: 1.0 }.into()).unwrap();
    let want = doubling_profile(&space, 1.0).pieces();
    assert_eq!(table.len(), want.len());
    for (row, (lo, hi, v)) in table.iter().zip(want) {
        assert_eq!(row[0], "pair");
        assert_eq!(row[1].parse::<f64>().unwrap(), lo);
        assert_eq!(row[2].parse::<f64>().unwrap(), hi);
        assert_eq!(row[3].parse::<f64>().unwrap(), v);
    }
}

#[test]
fn sections_agree_with_direct_calls() {
    let spaces = [
        ("line", GeneratorKind::Line { n: 30, spacing: 1.0 }),
        ("tree", GeneratorKind::UltrametricDyadic { levels: 4, base: 2.0 }),
    ];
    let config = SuiteConfig {
        spaces: spaces.iter().map(|(n, k)| generated(n, k.clone())).collect(),
        checks: vec![CheckKind::Doubling, CheckKind::Kernel],
        radii: vec![4.0, 8.0],
        ..SuiteConfig::default()
    };
    let report = run_suite(&config).unwrap();
    assert_eq!(report.body.sections.len(), 4);
    for section in &report.body.sections {
        let (_, kind) = spaces.iter().find(|(n, _)| Some(*n) == section.space.as_deref()).unwrap();
        let space = generate_space(&kind.clone().into()).unwrap();
        match section.check {
            CheckKind::Doubling => {
                let got: Vec<f64> = section.values.iter().map(|v| v.value).collect();
                assert_eq!(got, vec![doubling_constant(&space, 4.0), doubling_constant(&space, 8.0)]);
            }
            CheckKind::Kernel => {
                let mut want = Vec::new();
                for r in [4.0, 8.0] {
                    want.extend(build_kernel(&space, &BumpProfile::default(), r / 4.0, r).unwrap().certify(&space));
                }
                assert_eq!(section.reports, want);
            }
            other => panic!("unexpected section {other:?}"),
        }
    }
}

#[test]
fn slack_override() {
    let base = SuiteConfig {
        spaces: vec![generated("line", GeneratorKind::Line { n: 20, spacing: 1.0 })],
        checks: vec![CheckKind::Maximal],
        radii: vec![3.0],
        ..SuiteConfig::default()
    };
    let plain = run_suite(&base).unwrap();
    let loose = run_suite(&SuiteConfig { report_slack: Some(0.5), ..base.clone() }).unwrap();
    assert!(plain.all_passed() && loose.all_passed());
    // Same measurements, only the verdict tolerance differs.
    let strip = |r: &czkit_core::suite::RunReport| {
        r.body.sections.iter().flat_map(|s| s.reports.iter().map(|b| (b.measured_lhs, b.measured_rhs))).collect::<Vec<_>>()
    };
    assert_eq!(strip(&plain), strip(&loose));
    for bad in [-1.0, f64::NAN, f64::INFINITY] {
        assert!(run_suite(&SuiteConfig { report_slack: Some(bad), ..base.clone() }).is_err());
    }
}

#[test]
fn infeasible_checks_are_skipped_not_fatal() {
    let config = SuiteConfig {
        spaces: vec![generated("line", GeneratorKind::Line { n: 10, spacing: 1.0 })],
        checks: vec![CheckKind::Kernel],
        // Zero scale cannot build a kernel.
        radii: vec![0.0],
        ..SuiteConfig::default()
    };
    let report = run_suite(&config).unwrap();
    assert_eq!(report.body.sections[0].skipped.len(), 1);
    assert_eq!(report.body.summary.skipped, 1);
    assert!(report.all_passed());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let space = generate_space(&GeneratorKind::Grid { rows: 3, cols: 4, spacing: 1.0, p: 1.0 }.into()).unwrap();
    std::fs::write(dir.path().join("grid.json"), serde_json::to_string(&SpaceFile::from_space(&space)).unwrap()).unwrap();
    let config = SuiteConfig {
        spaces: vec![
            SpaceSource::File { name: "grid".into(), file: "grid.json".into() },
            generated("line", GeneratorKind::Line { n: 8, spacing: 1.0 }),
        ],
        checks: vec![CheckKind::Doubling, CheckKind::Covering],
        radii: vec![2.0],
        report_slack: Some(1e-6),
        ..SuiteConfig::default()
    };
    let path = dir.path().join("suite.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let back = SuiteConfig::load(&path).unwrap();
    assert_eq!(back, config);
    let a = run_suite_in(&back, Some(dir.path())).unwrap();
    let b = run_suite_in(&config, Some(dir.path())).unwrap();
    assert_eq!(a.body_json(), b.body_json());
    assert!(run_suite(&back).is_err());

    let minimal: SuiteConfig = serde_json::from_str(r#"{"checks": ["phi"]}"#).unwrap();
    assert_eq!(minimal.trials, 200);
    assert_eq!(minimal.exponents.len(), 4);
}

#[test]
fn plot_files() {
    let config = SuiteConfig {
        spaces: vec![generated("line", GeneratorKind::Line { n: 16, spacing: 1.0 })],
        checks: vec![CheckKind::Covering, CheckKind::Czo],
        radii: vec![8.0],
        trials: 10,
        ..SuiteConfig::default()
    };
    let report = run_suite(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for kind in PlotKind::ALL {
        let path = emit_plot_data(&report, kind.file_stem(), dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), plot_csv(&report, kind));
    }
    assert!(!rows(&plot_csv(&report, PlotKind::OverlapHist)).is_empty());
    assert!(!rows(&plot_csv(&report, PlotKind::RatioVsP)).is_empty());
    let err = emit_plot_data(&report, "histogram", dir.path()).unwrap_err().to_string();
    assert!(err.contains("phi_surface"), "{err}");
}
