use engel_core::{GroupElement, HamiltonianLifts, PolarCurve, Sample, Trajectory};
use serde::Serialize;
use std::fmt::Write as _;

pub const TRACE_HEADER: &str = "t,x,y,z,v,theta,u1,u2,h1,h2,h3,h4,E,eq_residual";
pub const POLAR_HEADER: &str = "theta,r,dr_minus,dr_plus,h1,h2,corner";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        // keeps -0.0 and 0.0 apart in the bytes as well
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    format!("{x:.16e}")
}

fn casimir(h: &HamiltonianLifts) -> f64 {
    0.5 * h.h3 * h.h3 - h.h2 * h.h4
}

pub fn trace_csv(tr: &Trajectory) -> String {
    let mut out = String::with_capacity(256 * (tr.samples.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in &tr.samples {
        let cols = [
            s.t,
            s.g.x,
            s.g.y,
            s.g.z,
            s.g.v,
            s.theta,
            s.u[0],
            s.u[1],
            s.h.h1,
            s.h.h2,
            s.h.h3,
            s.h.h4,
            casimir(&s.h),
            s.eq_residual,
        ];
        let row: Vec<String> = cols.iter().map(|&c| num(c)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Samples read back from a trajectory CSV. `reference_e` is the Casimir of
/// the covector, used to rebuild the per-sample residual.
pub fn parse_trace_csv(text: &str, reference_e: f64, m: f64) -> Result<Vec<Sample>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty trajectory file")?;
    if header.trim() != TRACE_HEADER {
        return Err(format!("trajectory header must be `{TRACE_HEADER}`, got `{}`", header.trim()));
    }
    let mut samples = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("row {}: {e}", k + 2))?;
        if row.len() != 14 {
            return Err(format!("row {}: expected 14 columns, got {}", k + 2, row.len()));
        }
        let h = HamiltonianLifts { h1: row[8], h2: row[9], h3: row[10], h4: row[11], m };
        samples.push(Sample {
            t: row[0],
            g: GroupElement::new(row[1], row[2], row[3], row[4]),
            theta: row[5],
            u: [row[6], row[7]],
            h,
            e_residual: (casimir(&h) - reference_e).abs(),
            eq_residual: row[13],
            x_quad: None,
        });
    }
    if samples.len() < 2 {
        return Err("trajectory file needs at least two rows".into());
    }
    Ok(samples)
}

#[derive(Serialize)]
struct JsonSample {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    v: f64,
    theta: f64,
    u1: f64,
    u2: f64,
    h1: f64,
    h2: f64,
    h3: f64,
    h4: f64,
    #[serde(rename = "E")]
    e: f64,
    eq_residual: f64,
}

pub fn trace_json_samples(tr: &Trajectory) -> serde_json::Value {
    let rows: Vec<JsonSample> = tr
        .samples
        .iter()
        .map(|s| JsonSample {
            t: s.t,
            x: s.g.x,
            y: s.g.y,
            z: s.g.z,
            v: s.g.v,
            theta: s.theta,
            u1: s.u[0],
            u2: s.u[1],
            h1: s.h.h1,
            h2: s.h.h2,
            h3: s.h.h3,
            h4: s.h.h4,
            e: casimir(&s.h),
            eq_residual: s.eq_residual,
        })
        .collect();
    serde_json::to_value(rows).expect("samples serialize")
}

/// `n` equally spaced angles on `[0, 2π)`.
pub fn polar_rows(polar: &PolarCurve, n: usize) -> Vec<[f64; 7]> {
    (0..n)
        .map(|k| {
            let theta = engel_core::TAU * k as f64 / n as f64;
            let p = polar.eval(theta);
            let [h1, h2] = polar.point(theta);
            [theta, p.r, p.dr_minus, p.dr_plus, h1, h2, if p.is_corner() { 1.0 } else { 0.0 }]
        })
        .collect()
}

pub fn polar_csv(rows: &[[f64; 7]]) -> String {
    let mut out = String::new();
    out.push_str(POLAR_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{},{}", num(r[0]), num(r[1]), num(r[2]), num(r[3]), num(r[4]), num(r[5]), r[6] as u8);
    }
    out
}

pub fn polar_json(rows: &[[f64; 7]]) -> serde_json::Value {
    serde_json::Value::Array(
        rows.iter()
            .map(|r| {
                serde_json::json!({
                    "theta": r[0], "r": r[1], "dr_minus": r[2], "dr_plus": r[3],
                    "h1": r[4], "h2": r[5], "corner": r[6] != 0.0,
                })
            })
            .collect(),
    )
}

pub fn pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
