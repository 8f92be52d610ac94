use super::*;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn table1_text() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/table1.csv")).unwrap()
}

fn table2_text() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/table2.csv")).unwrap()
}

fn outcome(h: f64, bottom: f64, waist: f64) -> EtchOutcome {
    EtchOutcome {
        height_nm: Some(h),
        bottom_diameter_nm: Some(LengthCell::Exact(bottom)),
        top_diameter_nm: None,
        waist_diameter_nm: Some(LengthCell::Exact(waist)),
        mask_consumed_nm: None,
        result: String::new(),
    }
}

#[test]
fn taper_reference_rows() {
    // Published rows recompute from the full-height convention.
    let d = taper_angle(&outcome(1100.0, 280.0, 300.0)).unwrap();
    assert!((d.degrees - 89.5).abs() < 0.5, "row d: {}", d.degrees);
    assert!(!d.undercut_inverted);

    let e = taper_angle(&outcome(1000.0, 220.0, 310.0)).unwrap();
    assert!((e.degrees - 87.4).abs() < 0.5, "row e: {}", e.degrees);

    let h = taper_angle(&outcome(1000.0, 260.0, 280.0)).unwrap();
    assert!((h.degrees - 89.5).abs() < 0.5, "row h: {}", h.degrees);

    // Independent oracle for row e: angle whose tangent is 1000/45.
    assert_abs_diff_eq!(
        e.degrees.to_radians().tan(),
        1000.0 / 45.0,
        epsilon = 1e-9
    );
}

#[test]
fn taper_vertical_sidewall() {
    let t = taper_angle(&outcome(1000.0, 300.0, 300.0)).unwrap();
    assert_eq!(t.degrees, 90.0);
    assert!(!t.undercut_inverted);
}

#[test]
fn taper_undercut_inverted() {
    let t = taper_angle(&outcome(1000.0, 320.0, 300.0)).unwrap();
    assert!(t.undercut_inverted);
    let mirror = taper_angle(&outcome(1000.0, 300.0, 320.0)).unwrap();
    assert_abs_diff_eq!(t.degrees, mirror.degrees, epsilon = 1e-12);
}

#[test]
fn taper_missing_inputs() {
    let mut o = outcome(1000.0, 280.0, 300.0);
    o.height_nm = None;
    assert!(taper_angle(&o).is_err());
    let mut o = outcome(1000.0, 280.0, 300.0);
    o.waist_diameter_nm = None;
    assert!(taper_angle(&o).is_err());
}

#[test]
fn etch_rate_reference_values() {
    assert_abs_diff_eq!(etch_rate(1000.0, 5.0).unwrap(), 200.0);
    assert_abs_diff_eq!(etch_rate(1900.0, 10.0).unwrap(), 190.0);
    assert_abs_diff_eq!(etch_rate(0.0, 7.0).unwrap(), 0.0);
    assert!(etch_rate(1000.0, 0.0).is_err());
}

#[test]
fn selectivity_reference_values() {
    assert_eq!(selectivity(200.0, 25.0).unwrap(), Selectivity::Finite(8.0));
    assert_eq!(selectivity(200.0, 10.0).unwrap(), Selectivity::Finite(20.0));
    assert_eq!(selectivity(3.7, 3.7).unwrap(), Selectivity::Finite(1.0));
    // Al2O3 showed no appreciable erosion.
    assert_eq!(
        selectivity(200.0, 0.0).unwrap(),
        Selectivity::EffectivelyInfinite
    );
    assert!(selectivity(-1.0, 5.0).is_err());
}

proptest! {
    #[test]
    fn taper_scale_invariant(
        h in 1.0f64..5000.0,
        bottom in 0.0f64..500.0,
        spread in 0.0f64..300.0,
        c in 0.01f64..100.0,
    ) {
        let waist = bottom + spread;
        let base = taper_angle(&outcome(h, bottom, waist)).unwrap();
        let scaled = taper_angle(&outcome(c * h, c * bottom, c * waist)).unwrap();
        prop_assert!((base.degrees - scaled.degrees).abs() < 1e-9);
    }

    #[test]
    fn etch_rate_homogeneous_degree_one(
        h in 0.0f64..5000.0,
        t in 0.1f64..60.0,
        c in 0.01f64..100.0,
    ) {
        let r = etch_rate(h, t).unwrap();
        let rc = etch_rate(c * h, t).unwrap();
        prop_assert!((rc - c * r).abs() <= 1e-9 * rc.abs().max(1.0));
    }

    #[test]
    fn selectivity_homogeneous_degree_zero(
        d in 0.1f64..1000.0,
        m in 0.1f64..1000.0,
        c in 0.01f64..100.0,
    ) {
        let (Selectivity::Finite(s), Selectivity::Finite(sc)) =
            (selectivity(d, m).unwrap(), selectivity(c * d, c * m).unwrap())
        else {
            unreachable!()
        };
        prop_assert!((s - sc).abs() <= 1e-9 * s.abs());
    }
}

#[test]
fn shipped_table1_parses() {
    let records = ingest_table(&table1_text()).unwrap();
    assert_eq!(records.len(), 8);
    let labels: Vec<&str> = records.iter().map(|r| r.recipe.label.as_str()).collect();
    assert_eq!(
        labels,
        ["(a)", "(b)", "(c)", "(d)", "(e)", "(f)", "(g)", "(h)"]
    );
    // Rows (c) and (f) have no printed rate: absent, not zero.
    assert!(records[2].printed_rate_nm_min.is_none());
    assert!(records[5].printed_rate_nm_min.is_none());
    // RT normalization keeps the token but evaluates to 20 C.
    assert_eq!(records[0].recipe.temperature, Temperature::RoomTemp);
    assert_abs_diff_eq!(records[0].recipe.temperature.celsius(), 20.0);
    assert_abs_diff_eq!(records[1].recipe.temperature.celsius(), 73.0);
    // Range cell midpoint.
    assert_eq!(
        records[0].outcome.bottom_diameter_nm,
        Some(LengthCell::Range(330.0, 420.0))
    );
    assert_abs_diff_eq!(records[0].outcome.bottom_diameter_nm.unwrap().nm(), 375.0);
}

#[test]
fn shipped_table1_round_trips_exactly() {
    let text = table1_text();
    let records = ingest_table(&text).unwrap();
    assert_eq!(serialize_table(&records), text);
}

#[test]
fn shipped_table2_round_trips_exactly() {
    let text = table2_text();
    let records = ingest_rate_table(&text).unwrap();
    assert_eq!(serialize_rate_table(&records), text);
}

#[test]
fn shipped_table2_rates() {
    let records = ingest_rate_table(&table2_text()).unwrap();
    let rates: Vec<f64> = records.iter().map(|r| r.etch_rate_nm_min).collect();
    assert_eq!(rates, [200.0, 190.0, 220.0, 240.0]);
    // Ib sc-D: 10 min at 190 nm/min gives the observed 1.9 um height.
    assert_abs_diff_eq!(records[1].height_nm(), 1900.0);
}

#[test]
fn empty_table_is_empty_list() {
    let text = "rec,temp_c,pressure_mtorr,bias_w,icp_w,o2_sccm,duration_min,mask,etch_rate_nm_min,height_nm,bottom_diameter_nm,top_diameter_nm,waist_diameter_nm,taper_deg,result\n";
    assert!(ingest_table(text).unwrap().is_empty());
}

#[test]
fn malformed_cell_reports_line_number() {
    let mut text = table1_text();
    text = text.replace("73,10,100", "73,oops,100");
    match ingest_table(&text) {
        Err(FabError::RowParse { line, msg }) => {
            assert_eq!(line, 3);
            assert!(msg.contains("pressure"), "{msg}");
        }
        other => panic!("expected row error, got {other:?}"),
    }
}

#[test]
fn wrong_header_rejected() {
    assert!(matches!(
        ingest_table("a,b,c\n1,2,3\n"),
        Err(FabError::RowParse { line: 1, .. })
    ));
}

#[test]
fn report_validates_taper_per_row() {
    let records = ingest_table(&table1_text()).unwrap();
    let rep = report(&records).unwrap();
    assert_eq!(rep.rows.len(), 8);
    for row in &rep.rows {
        // Every row with both a recomputed and printed taper must agree
        // within its per-row tolerance, including the 88 vs 88.9 row (b).
        if let Some(ok) = row.taper_matches_printed {
            assert!(ok, "taper mismatch in row {}", row.label);
        }
    }
    let d = &rep.rows[3];
    assert_abs_diff_eq!(d.rate_nm_min.unwrap(), 220.0);
    assert!((d.taper.unwrap().degrees - 89.48).abs() < 0.05);
    // Row (b) recomputes to 88.9, only the widened tolerance admits 88.
    let b = &rep.rows[1];
    assert!((b.taper.unwrap().degrees - 88.85).abs() < 0.05);
    assert!(taper_tolerance_deg("(b)") > (b.taper.unwrap().degrees - 88.0).abs());
    assert!(taper_tolerance_deg("(d)") == 0.5);
}

#[test]
fn report_single_record_and_empty() {
    let records = ingest_table(&table1_text()).unwrap();
    let rep = report(&records[..1]).unwrap();
    assert_eq!(rep.rows.len(), 1);
    assert!(matches!(report(&[]), Err(FabError::EmptyReport)));
}

#[test]
fn report_text_is_deterministic_and_ordered() {
    let records = ingest_table(&table1_text()).unwrap();
    let a = report(&records).unwrap().to_text();
    let b = report(&records).unwrap().to_text();
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 9);
    assert!(lines[1].starts_with("(a)"));
    assert!(lines[8].starts_with("(h)"));
}

#[test]
fn report_json_serializes() {
    let records = ingest_table(&table1_text()).unwrap();
    let rep = report(&records).unwrap();
    let json = serde_json::to_string_pretty(&rep).unwrap();
    let back: FabReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn recipe_validation() {
    let mut records = ingest_table(&table1_text()).unwrap();
    records[0].recipe.duration_min = 0.0;
    assert!(records[0].recipe.validate().is_err());
    let mut bad = records[1].clone();
    bad.outcome.height_nm = Some(-5.0);
    assert!(bad.outcome.validate().is_err());
}
