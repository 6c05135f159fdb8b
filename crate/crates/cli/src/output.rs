//! CSV, witness, summary and chart rendering.

use std::fmt::Write as _;

use cstar_core::Verdict;

pub const CSV_HEADER: &str = "experiment,param_hash,index,bound,estimate,residual,support,converged,verdict";

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub index: i64,
    pub bound: f64,
    pub estimate: f64,
    pub residual: f64,
    pub support: usize,
    pub converged: bool,
    pub verdict: Verdict,
}

/// One line of the witness file: a point (or word) with a coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessEntry {
    pub experiment: String,
    pub index: i64,
    pub item: String,
    pub re: f64,
    pub im: f64,
}

/// `%.12g`: 12 significant digits, trailing zeros stripped, exponent form
/// outside `[1e-4, 1e12)`.
pub fn format_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    strip_zeros(&format!("{x:.decimals$}")).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn render_csv(rows: &[ResultRow], param_hash: &str) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            param_hash,
            r.index,
            format_g(r.bound),
            format_g(r.estimate),
            format_g(r.residual),
            r.support,
            r.converged,
            r.verdict
        );
    }
    out
}

pub fn render_witness(entries: &[WitnessEntry]) -> String {
    let mut out = String::from("experiment,index,item,re,im\n");
    for w in entries {
        let _ = writeln!(out, "{},{},{},{},{}", w.experiment, w.index, w.item, format_g(w.re), format_g(w.im));
    }
    out
}

pub fn render_summary(title: &str, param_hash: &str, notes: &[String], rows: &[ResultRow], verdict: Verdict) -> String {
    let mut out = format!("{title}\nparam_hash: {param_hash}\n");
    for note in notes {
        let _ = writeln!(out, "{note}");
    }
    for r in rows {
        let _ = writeln!(
            out,
            "  {:<24} {:>4}  bound {:<14} estimate {:<14} support {:<7} {}{}",
            r.experiment,
            r.index,
            format_g(r.bound),
            format_g(r.estimate),
            r.support,
            r.verdict,
            if r.converged { "" } else { " (not converged)" }
        );
    }
    let _ = writeln!(out, "verdict: {verdict}");
    out
}

/// Estimate and bound against the row index, one polyline each.
pub fn render_svg(rows: &[ResultRow], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 48.0;
    let xs: Vec<f64> = rows.iter().map(|r| r.index as f64).collect();
    let ys = rows.iter().flat_map(|r| [r.bound, r.estimate]).filter(|y| y.is_finite());
    let (x_min, x_max) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let y_max = ys.fold(0.0_f64, f64::max).max(1e-12);
    let span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let px = |x: f64| PAD + (x - x_min) / span * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - y.min(y_max) / y_max * (H - 2.0 * PAD);
    let line = |f: &dyn Fn(&ResultRow) -> f64| {
        rows.iter().map(|r| format!("{:.2},{:.2}", px(r.index as f64), py(f(r)))).collect::<Vec<_>>().join(" ")
    };
    let mut svg =
        format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n");
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(svg, "<text x=\"{PAD}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{title}</text>");
    let _ = writeln!(
        svg,
        "<line x1=\"{PAD}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{y0}\" stroke=\"black\"/>",
        y0 = H - PAD,
        x1 = W - PAD
    );
    let _ = writeln!(svg, "<text x=\"4\" y=\"{:.2}\" font-size=\"11\">{}</text>", PAD, format_g(y_max));
    let _ = writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>", PAD, H - PAD + 16.0, x_min);
    let _ = writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>", W - PAD, H - PAD + 16.0, x_max);
    let _ = writeln!(
        svg,
        "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\" points=\"{}\"/>",
        line(&|r| r.bound)
    );
    let _ = writeln!(svg, "<polyline fill=\"none\" stroke=\"#2c3e50\" points=\"{}\"/>", line(&|r| r.estimate));
    let _ = writeln!(svg, "<text x=\"{:.2}\" y=\"40\" font-size=\"11\" fill=\"#c0392b\">bound</text>", W - 3.0 * PAD);
    let _ =
        writeln!(svg, "<text x=\"{:.2}\" y=\"54\" font-size=\"11\" fill=\"#2c3e50\">estimate</text>", W - 3.0 * PAD);
    svg.push_str("</svg>\n");
    svg
}
