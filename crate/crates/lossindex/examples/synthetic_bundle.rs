//! Writes the synthetic 32-category bundle under `data/synthetic/`:
//! a nominal loss panel with gaps, CPI deflators and three annual macro
//! factor series driven by a common skewed, fat-tailed shock. Deterministic; rerunning reproduces the files.
//!
//!     cargo run -p lossindex --example synthetic_bundle [-- <dir>]

use std::fs;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::StandardNormal;

use lossindex::files::csv_bytes;
use lossindex_core::nig::NigParams;
use lossindex_core::rng;

const SEED: u64 = 2001_2019;
const FIRST: i32 = 1980;
const LAST: i32 = 2019;

const CATEGORIES: [&str; 32] = [
    "Real Estate",
    "Ransomware",
    "Government Impersonation",
    "Identity Theft",
    "Extortion",
    "Lottery",
    "Confidence Fraud",
    "Investment",
    "Crimes Against Children",
    "Personal Data Breach",
    "Credit Card Fraud",
    "BEC/EAC",
    "Non-Payment",
    "IPR Copyright",
    "Gambling",
    "Robbery",
    "Phishing",
    "Civil Matter",
    "Denial Of Service",
    "Motor Vehicle Theft",
    "Check Fraud",
    "Advanced Fee",
    "Harassment",
    "Corporate Data Breach",
    "Larceny Theft",
    "Terrorism",
    "Burglary",
    "Employment",
    "Charity",
    "Overpayment",
    "Social Media",
    "Misrepresentation",
];

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data/synthetic"));
    fs::create_dir_all(&dir).expect("create output directory");
    let years: Vec<i32> = (FIRST..=LAST).collect();
    let n = years.len();
    let mut g = rng::stream(SEED, 0);
    // Macro shocks are fat-tailed and skewed towards bad years.
    let jump = NigParams::new(0.0, 1.2, 0.5, 1.0).expect("valid shock law").standardized();
    let shock: Vec<f64> = (0..n).map(|_| jump.sample_at(1.0, &mut g)).collect();
    let mut normal = move || -> f64 { g.sample(StandardNormal) };
    let mut unemployment = vec![4.7];
    let mut poverty = vec![11.7];
    let mut income = vec![42_000.0];
    for t in 1..n {
        let u: f64 = unemployment[t - 1] * (0.12 * shock[t] + 0.06 * normal()).exp();
        unemployment.push(u.clamp(3.0, 11.0));
        poverty.push(poverty[t - 1] * (0.04 * shock[t] + 0.03 * normal()).exp());
        income.push(income[t - 1] * (0.025 - 0.015 * shock[t] + 0.01 * normal()).exp());
    }

    // CPI deflators to 2020 dollars, about 2.2% inflation a year.
    let deflators: Vec<f64> = years.iter().map(|y| 1.022f64.powi(2020 - y)).collect();

    // Real losses: category-specific drift, loading on the common shock and
    // NIG idiosyncratic noise whose scale grows down the ranking.
    let mut cells = vec![vec![0.0; CATEGORIES.len()]; n];
    let mut h = rng::stream(SEED, 1);
    for (j, _) in CATEGORIES.iter().enumerate() {
        let rank = j as f64 / 31.0;
        let scale = 0.35 - 0.25 * rank;
        let noise = NigParams::new(0.0, 6.0, 1.0, 6.0 * scale * scale).expect("valid noise law");
        let noise_mean = noise.mean();
        let base = 5.0e8 * (-3.0 * rank).exp();
        let drift = 0.06 + 0.04 * (1.0 - rank);
        let load = 0.10 * (1.0 - rank) + 0.02;
        let mut level: f64 = base;
        for t in 0..n {
            if t > 0 {
                level *= (drift + load * shock[t] + noise.sample_at(1.0, &mut h) - noise_mean).exp();
            }
            cells[t][j] = level;
        }
    }

    // Nominal panel with about 3% of cells blanked, never a whole row or
    // column.
    let mut header = vec!["year"];
    header.extend(CATEGORIES);
    let mut k = rng::stream(SEED, 2);
    let rows: Vec<Vec<String>> = (0..n)
        .map(|t| {
            let mut r = vec![years[t].to_string()];
            for v in &cells[t] {
                let blank = t > 0 && t + 1 < n && k.random::<f64>() < 0.03;
                r.push(if blank { String::new() } else { format!("{:.0}", v / deflators[t]) });
            }
            r
        })
        .collect();
    fs::write(dir.join("panel.csv"), csv_bytes(&header, &rows)).expect("write panel");

    let series = |values: &[f64], digits: usize| -> Vec<Vec<String>> {
        years.iter().zip(values).map(|(y, v)| vec![y.to_string(), format!("{v:.digits$}")]).collect()
    };
    fs::write(dir.join("deflators.csv"), csv_bytes(&["year", "factor"], &series(&deflators, 6))).expect("write deflators");
    fs::write(dir.join("unemployment.csv"), csv_bytes(&["year", "Unemployment Rate"], &series(&unemployment, 2)))
        .expect("write factor");
    fs::write(dir.join("poverty.csv"), csv_bytes(&["year", "Poverty Rate"], &series(&poverty, 2))).expect("write factor");
    fs::write(dir.join("income.csv"), csv_bytes(&["year", "Household Income"], &series(&income, 0))).expect("write factor");
    println!("wrote {}", dir.display());
}
