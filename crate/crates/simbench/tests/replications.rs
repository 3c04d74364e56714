use plfam_core::averaging::CandidateMode;
use plfam_core::Method;
use plfam_simbench::{
    nmspe_table, run_replications, write_raw_csv, write_summary_csv, CandidateConfig, Design,
    DesignConfig,
};

fn small(design: Design, n: usize, r2: f64, reps: usize) -> DesignConfig {
    let mut c = DesignConfig::new(design, n, r2);
    c.reps = reps;
    c.n_test = 100;
    c
}

#[test]
fn aic_alone_normalizes_to_one() {
    let r = run_replications(
        &small(Design::One, 50, 0.5, 3),
        &CandidateConfig::default(),
        &[Method::Aic],
    )
    .unwrap();
    assert_eq!(r.nmspe(Method::Aic), 1.0);
    assert_eq!(r.nmse(Method::Aic), 1.0);
    let t = nmspe_table(&[r]).unwrap();
    assert_eq!(t.values, vec![vec![1.0]]);
}

#[test]
fn cv_weights_beat_every_single_candidate() {
    for design in [Design::One, Design::Two, Design::Three] {
        let cand = CandidateConfig {
            mode: CandidateMode::NonNested,
            scalar_pool: 3,
            score_pool: 3,
            ..CandidateConfig::default()
        };
        let r = run_replications(&small(design, 60, 0.6, 3), &cand, &Method::ALL).unwrap();
        assert!(r.failures.is_empty());
        for rec in &r.records {
            assert!(rec.cv_objective <= rec.best_single_cv * (1.0 + 1e-12));
            assert!(rec
                .mspe
                .iter()
                .chain(rec.mse.iter())
                .all(|&v| v > 0.0 && v.is_finite()));
        }
    }
}

#[test]
fn table_matches_manual_recomputation() {
    let reports: Vec<_> = [0.3, 0.7]
        .iter()
        .map(|&r2| {
            run_replications(
                &small(Design::Two, 50, r2, 4),
                &CandidateConfig::default(),
                &Method::ALL,
            )
            .unwrap()
        })
        .collect();
    let table = nmspe_table(&reports).unwrap();
    assert_eq!(table.r2_levels, vec![0.3, 0.7]);
    for (col, report) in reports.iter().enumerate() {
        let aic: f64 = report
            .records
            .iter()
            .map(|r| r.mspe(Method::Aic))
            .sum::<f64>();
        for m in Method::ALL {
            let own: f64 = report.records.iter().map(|r| r.mspe(m)).sum::<f64>();
            assert!((table.get(m, col).unwrap() - own / aic).abs() <= 1e-12);
        }
        assert_eq!(table.get(Method::Aic, col), Some(1.0));
    }
    assert!(table
        .to_csv()
        .starts_with("method,R2=0.3,R2=0.7\nAIC,1,1\n"));
    assert!(table.to_string().contains("CVMA"));
}

#[test]
fn reports_are_byte_reproducible() {
    let render = || {
        let r = run_replications(
            &small(Design::Three, 40, 0.5, 3),
            &CandidateConfig::default(),
            &Method::ALL,
        )
        .unwrap();
        let (mut raw, mut summary) = (Vec::new(), Vec::new());
        write_raw_csv(std::slice::from_ref(&r), &mut raw).unwrap();
        write_summary_csv(std::slice::from_ref(&r), &mut summary).unwrap();
        (raw, summary)
    };
    let (a, b) = (render(), render());
    assert_eq!(a, b);
    let raw = String::from_utf8(a.0).unwrap();
    assert!(raw.starts_with("design,R2,n,method,replication,mspe,mse\n3,0.5,40,AIC,0,"));
    assert_eq!(raw.lines().count(), 1 + 5 * 3);
    let summary = String::from_utf8(a.1).unwrap();
    assert!(summary.starts_with("design,R2,n,method,nmspe,nmse\n3,0.5,40,AIC,1,1\n"));
}

#[test]
fn cvma_beats_aic_at_moderate_signal() {
    let mut c = DesignConfig::new(Design::One, 100, 0.5);
    c.reps = 50;
    let r = run_replications(
        &c,
        &CandidateConfig::default(),
        &[Method::Aic, Method::Cvma],
    )
    .unwrap();
    assert!(
        r.nmspe(Method::Cvma) < 1.0,
        "CVMA NMSPE {}",
        r.nmspe(Method::Cvma)
    );
}

#[test]
fn invalid_configuration_rejected() {
    let mut c = small(Design::One, 50, 0.5, 1);
    c.r2 = 1.0;
    assert!(run_replications(&c, &CandidateConfig::default(), &Method::ALL).is_err());
    c.r2 = 0.5;
    assert!(run_replications(&c, &CandidateConfig::default(), &[]).is_err());
}
