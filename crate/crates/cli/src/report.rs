//! `report`: reads a manifest back and, with `--check`, evaluates the checks
//! that apply to the command that wrote it.

use std::fs;
use std::io::Write;

use anyhow::{anyhow, Context};
use serde_json::Value;

use crate::commands::{CommandOutput, SCALED_FLOOR, SLOPE_BAND};
use crate::config::ReportArgs;
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        detail,
    }
}

fn num(v: &Value, key: &str) -> anyhow::Result<f64> {
    v.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| anyhow!("aggregates.{key} missing or not a number"))
}

/// Checks for a parsed manifest, chosen by `config.command`.
pub fn checks(manifest: &Value) -> anyhow::Result<Vec<Check>> {
    let command = manifest
        .pointer("/config/command")
        .and_then(Value::as_str)
        .ok_or_else(|| anyhow!("manifest has no config.command"))?;
    let agg = manifest.get("aggregates").unwrap_or(&Value::Null);
    let mut out = Vec::new();
    if let Some(status) = manifest.get("status").and_then(Value::as_str) {
        out.push(check("status", status == "ok", format!("status {status}")));
    }
    match command {
        "run" => {
            let sat = num(agg, "saturated_fraction")?;
            out.push(check("saturated", sat == 1.0, format!("saturated fraction {sat}")));
            if let Some(tv) = agg.get("oracle_tv").and_then(Value::as_f64) {
                out.push(check("oracle_tv", tv < 0.02, format!("TV {tv:.5} (< 0.02)")));
            }
            if let Some(rate) = agg.get("good_subset_rate").and_then(Value::as_f64) {
                out.push(check("good_subset", rate == 1.0, format!("pass rate {rate}")));
            }
            let d = manifest.pointer("/config/d").and_then(Value::as_u64).unwrap_or(0);
            let bound = (-1.0f64).exp() - 0.05;
            for pair in agg
                .get("mean_isolated_at")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
            {
                let (j, f) = (pair[0].as_u64(), pair[1].as_f64());
                if let (Some(j), Some(f)) = (j, f) {
                    if d >= 2 && j == 1 << (d - 2) {
                        out.push(check(
                            "isolated_fraction",
                            f >= bound,
                            format!("j={j}: {f:.4} (>= {bound:.4})"),
                        ));
                    }
                }
            }
        }
        "sweep" => {
            let slope = num(agg, "slope")?;
            out.push(check(
                "slope",
                (SLOPE_BAND[0]..=SLOPE_BAND[1]).contains(&slope),
                format!("{slope:.4} in [{}, {}]", SLOPE_BAND[0], SLOPE_BAND[1]),
            ));
            let min = num(agg, "min_scaled")?;
            out.push(check(
                "scaled_floor",
                min >= SCALED_FLOOR,
                format!("min M/(d^(2/3)2^d) {min:.4} (>= {SCALED_FLOOR})"),
            ));
        }
        "goodedges" => {
            let z = num(agg, "z")?;
            out.push(check("mean_good", z.abs() <= 2.0, format!("z = {z:.3} (|z| <= 2)")));
            let rate = num(agg, "subset_pass_rate")?;
            out.push(check("good_subset", rate == 1.0, format!("pass rate {rate}")));
        }
        "ode" => {
            let sup = num(agg, "sup_error")?;
            out.push(check("rk4_vs_closed_form", sup < 1e-8, format!("{sup:e} (< 1e-8)")));
            let res = num(agg, "residual")?;
            out.push(check("closed_form_residual", res < 1e-6, format!("{res:e} (< 1e-6)")));
            let iw = num(agg, "identity_w_q3")?;
            let iy = num(agg, "identity_y_q")?;
            out.push(check(
                "identities",
                iw < 1e-10 && iy < 1e-10,
                format!("w/q^3 {iw:e}, y/q {iy:e} (< 1e-10)"),
            ));
        }
        "oracle" => {
            let total = manifest.get("total").and_then(Value::as_str).unwrap_or("");
            out.push(check("total_mass", total == "1/1", format!("total {total}")));
        }
        other => return Err(anyhow!("unknown command {other:?} in manifest")),
    }
    Ok(out)
}

pub fn cmd_report(args: &ReportArgs) -> Result<CommandOutput, LabError> {
    let text = fs::read_to_string(&args.manifest)
        .with_context(|| format!("reading {}", args.manifest.display()))?;
    let manifest: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.manifest.display()))?;
    let mut out = CommandOutput::default();
    if let Some(cfg) = manifest.get("config") {
        out.lines.push(format!("config: {cfg}"));
    }
    if let Some(agg) = manifest.get("aggregates") {
        let mut agg = agg.clone();
        if let Some(obj) = agg.as_object_mut() {
            obj.remove("rows");
        }
        out.lines.push(format!("aggregates: {agg}"));
    }
    if !args.check {
        return Ok(out);
    }
    let results = checks(&manifest)?;
    let failed = results.iter().filter(|c| !c.pass).count();
    for c in &results {
        out.lines.push(format!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    if failed > 0 {
        let mut stdout = std::io::stdout().lock();
        for line in &out.lines {
            let _ = writeln!(stdout, "{line}");
        }
        return Err(LabError::CheckFailed(failed));
    }
    Ok(out)
}
