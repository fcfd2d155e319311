//! Welch t-test against 100 stored high-precision reference cases
//! (computed once with 60-digit arithmetic and frozen in
//! `fixtures/welch_cases.txt`).

use rqa_core::welch_t_test;

fn parse_list(s: &str) -> Vec<f64> {
    s.split(',').map(|v| v.parse().unwrap()).collect()
}

#[test]
fn matches_high_precision_fixtures() {
    let raw = include_str!("fixtures/welch_cases.txt");
    let mut count = 0;
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(';').collect();
        assert_eq!(fields.len(), 5, "fixture line {lineno} malformed");
        let a = parse_list(fields[0]);
        let b = parse_list(fields[1]);
        let t_ref: f64 = fields[2].parse().unwrap();
        let df_ref: f64 = fields[3].parse().unwrap();
        let p_ref: f64 = fields[4].parse().unwrap();

        let r = welch_t_test(&a, &b).unwrap();
        assert!(
            (r.t - t_ref).abs() <= 1e-9,
            "case {lineno}: t {} vs {t_ref}",
            r.t
        );
        assert!(
            (r.df - df_ref).abs() <= 1e-6 * df_ref.max(1.0),
            "case {lineno}: df {} vs {df_ref}",
            r.df
        );
        assert!(
            (r.p - p_ref).abs() <= 1e-9,
            "case {lineno}: p {} vs {p_ref}",
            r.p
        );
        count += 1;
    }
    assert_eq!(count, 100, "expected 100 fixture cases");
}
