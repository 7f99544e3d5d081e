//! Per-rule analysis report: reversibility, propagation profile, cycle
//! structure and criterion verdicts. Rules are analyzed on a worker pool
//! and assembled in input order.

use std::fmt::Write as _;

use anyhow::Result;
use rayon::prelude::*;
use rca_cluster::ca::{self, CaError};
use rca_cluster::rules::{self, Criterion3Params};
use rca_cluster::Rule;

pub struct AnalyzeConfig {
    pub n: usize,
    pub rules: Vec<u32>,
    pub l1: Option<f64>,
    pub l2: Option<usize>,
}

pub fn analysis_text(config: &AnalyzeConfig) -> Result<String> {
    let catalog_entry = rules::builtin_catalog().entry(config.n).ok();
    let l1 = config.l1.or(catalog_entry.map(|e| e.l1));
    let l2 = config.l2.or(catalog_entry.map(|e| e.l2));
    let selection: Option<&Criterion3Params> = catalog_entry.map(|e| &e.selection);

    let mut out = String::from("rca-cluster analysis v1\n");
    let _ = writeln!(out, "n {}", config.n);
    match l1 {
        Some(v) => {
            let _ = writeln!(out, "l1 {v}");
        }
        None => {
            let _ = writeln!(out, "l1 unset");
        }
    }
    match l2 {
        Some(v) => {
            let _ = writeln!(out, "l2 {v}");
        }
        None => {
            let _ = writeln!(out, "l2 unset");
        }
    }

    let blocks: Result<Vec<String>> = config
        .rules
        .par_iter()
        .map(|&decimal| rule_block(decimal, config.n, l1, l2, selection))
        .collect();
    for block in blocks? {
        out.push_str(&block);
    }
    Ok(out)
}

fn rule_block(
    decimal: u32,
    n: usize,
    l1: Option<f64>,
    l2: Option<usize>,
    selection: Option<&Criterion3Params>,
) -> Result<String> {
    let rule = Rule::from_decimal(decimal);
    let profile = rules::rule_profile(rule);
    let mut out = String::new();
    let _ = writeln!(out, "rule {decimal}");
    let lambda: Vec<String> = profile
        .lambda
        .iter()
        .map(|r| format!("{:.6}", r.as_f64()))
        .collect();
    let _ = writeln!(out, "  lambda {}", lambda.join(" "));
    let _ = writeln!(
        out,
        "  self-replication {:.6}",
        profile.self_replication.as_f64()
    );
    let _ = writeln!(out, "  criterion1 {}", verdict(profile.criterion1));

    match ca::decompose_cycles(rule, n) {
        Ok(partition) => {
            let report = rules::signature_report(&partition);
            let zero = report.signatures.iter().filter(|&&s| s == 0).count();
            let le9 = report.signatures.iter().filter(|&&s| s <= 9).count();
            let le99 = report.signatures.iter().filter(|&&s| s <= 99).count();
            let max = report.signatures.iter().copied().max().unwrap_or(0);
            let _ = writeln!(out, "  reversible true");
            let _ = writeln!(out, "  cycles {}", report.cycle_count);
            let _ = writeln!(
                out,
                "  signatures zero {zero} le9 {le9} le99 {le99} max {max}"
            );
            match l1 {
                Some(l1) => {
                    let _ = writeln!(out, "  criterion2 {}", verdict(report.fraction_le_9 >= l1));
                }
                None => {
                    let _ = writeln!(out, "  criterion2 skipped (no l1)");
                }
            }
            match l2 {
                Some(l2) => {
                    let pass = report.cycle_count <= l2 && report.fraction_le_99 >= 0.5;
                    let _ = writeln!(out, "  criterion3 {}", verdict(pass));
                }
                None => {
                    let _ = writeln!(out, "  criterion3 skipped (no l2)");
                }
            }
            if let Some(params) = selection {
                let pass = rules::passes_criterion3_with(rule, n, params)?;
                let _ = writeln!(out, "  selection {}", verdict(pass));
            }
        }
        Err(CaError::NotReversible { .. }) => {
            let _ = writeln!(out, "  reversible false");
        }
        Err(other) => return Err(other.into()),
    }
    Ok(out)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}
