//! Markdown, CSV and SVG renderings of a [`MetricsReport`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::{GroupMetrics, MetricsReport, Proportion};
use super::HarnessError;
use crate::saboteur::ErrorType;

fn pct(p: &Proportion) -> String {
    format!("{:.1}% [{:.1}, {:.1}]", 100.0 * p.value, 100.0 * p.ci_low, 100.0 * p.ci_high)
}

fn opt_pct(p: &Option<Proportion>) -> String {
    p.as_ref().map_or_else(|| "n/a".to_string(), pct)
}

pub fn render_markdown(m: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Evaluation report\n");
    let _ = writeln!(s, "Agents: {}\n", m.agents.join(", "));
    let o = &m.overall;
    let _ = writeln!(s, "## Overall ({} episodes)\n", o.episodes);
    let _ = writeln!(s, "| Metric | Value |\n|---|---|");
    let _ = writeln!(s, "| RR | {} |", pct(&o.rr));
    let _ = writeln!(s, "| RRR | {} |", pct(&o.rrr));
    let _ = writeln!(s, "| P2Pass | {} |", opt_pct(&o.p2_pass));
    let _ = writeln!(s, "| Mean steps | {:.2} |", o.mean_steps);
    let _ = writeln!(s, "| Mean tokens | {:.0} |", o.mean_tokens);
    let _ = writeln!(s, "| Mean reward | {:.2} |", o.mean_reward);
    let _ = writeln!(s, "| Mean composite | {:.2} |", o.mean_composite);
    let _ = writeln!(s, "\n## By error type (sorted by RRR)\n");
    let _ = writeln!(s, "| Type | Difficulty | n | RR | RRR | P2Pass | Steps | Tokens |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
    let mut rows: Vec<(&ErrorType, &GroupMetrics)> = m.per_type.iter().collect();
    rows.sort_by(|a, b| b.1.rrr.value.total_cmp(&a.1.rrr.value).then(a.0.cmp(b.0)));
    for (e, g) in rows {
        let _ = writeln!(
            s,
            "| {e} | {:?} | {} | {} | {} | {} | {:.2} | {:.0} |",
            e.difficulty(),
            g.episodes,
            pct(&g.rr),
            pct(&g.rrr),
            opt_pct(&g.p2_pass),
            g.mean_steps,
            g.mean_tokens
        );
    }
    let small = m.per_type.values().filter(|g| g.episodes > 0 && g.episodes < 30).count();
    let _ = writeln!(
        s,
        "\nIntervals are 95% Wilson score intervals. {small} of the error types have fewer than 30 episodes; \
         differences between types whose intervals overlap should not be read as significant."
    );
    s
}

const METRICS: [&str; 8] = ["episodes", "rr", "rrr", "p2_pass", "mean_steps", "mean_tokens", "mean_reward", "mean_composite"];

fn metric_value(g: &GroupMetrics, name: &str) -> String {
    match name {
        "episodes" => g.episodes.to_string(),
        "rr" => format!("{:.4}", g.rr.value),
        "rrr" => format!("{:.4}", g.rrr.value),
        "p2_pass" => g.p2_pass.map_or(String::new(), |p| format!("{:.4}", p.value)),
        "mean_steps" => format!("{:.4}", g.mean_steps),
        "mean_tokens" => format!("{:.1}", g.mean_tokens),
        "mean_reward" => format!("{:.4}", g.mean_reward),
        _ => format!("{:.4}", g.mean_composite),
    }
}

/// Rows are metrics, columns ME1..ME10 then overall.
pub fn render_csv(m: &MetricsReport) -> String {
    let mut s = String::from("metric");
    for e in ErrorType::ALL {
        let _ = write!(s, ",{e}");
    }
    s.push_str(",overall\n");
    for name in METRICS {
        s.push_str(name);
        for e in ErrorType::ALL {
            let _ = write!(s, ",{}", metric_value(&m.per_type[&e], name));
        }
        let _ = writeln!(s, ",{}", metric_value(&m.overall, name));
    }
    s
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const ML: f64 = 60.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Axes with ticks; returns the plotting rectangle's maps from data to pixels.
fn axes(s: &mut String, xlabel: &str, ylabel: &str, ymax: f64, yfmt: &dyn Fn(f64) -> String) {
    let (x0, y0, x1, y1) = (ML, H - MB, W - MR, MT);
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>");
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    for i in 0..=5 {
        let v = ymax * i as f64 / 5.0;
        let y = y0 - (y0 - y1) * i as f64 / 5.0;
        let _ = writeln!(s, "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{x0}\" y2=\"{y:.1}\" stroke=\"black\"/>", x0 - 4.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", x0 - 6.0, y + 4.0, yfmt(v));
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", (x0 + x1) / 2.0, H - 10.0, escape(xlabel));
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&c| c >= v).unwrap_or(10.0 * mag)
}

pub fn svg_rrr_by_type(m: &MetricsReport) -> String {
    let mut s = svg_open("RRR by error type (95% Wilson CI)");
    axes(&mut s, "error type", "RRR", 1.0, &|v| format!("{:.0}%", 100.0 * v));
    let slot = (W - ML - MR) / ErrorType::ALL.len() as f64;
    let ph = H - MB - MT;
    for (i, e) in ErrorType::ALL.into_iter().enumerate() {
        let g = &m.per_type[&e];
        let x = ML + slot * i as f64;
        let h = ph * g.rrr.value;
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"#4c78a8\"/>",
            x + slot * 0.15,
            H - MB - h,
            slot * 0.7
        );
        if g.episodes > 0 {
            let cx = x + slot / 2.0;
            let (lo, hi) = (H - MB - ph * g.rrr.ci_low, H - MB - ph * g.rrr.ci_high);
            let _ = writeln!(s, "<line x1=\"{cx:.1}\" y1=\"{lo:.1}\" x2=\"{cx:.1}\" y2=\"{hi:.1}\" stroke=\"black\"/>");
        }
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{e}</text>", x + slot / 2.0, H - MB + 16.0);
    }
    s.push_str("</svg>\n");
    s
}

fn scatter(title: &str, xl: &str, yl: &str, pts: &[(String, f64, f64, f64)], xmax: f64, ymax: f64, pct_axes: bool) -> String {
    let mut s = svg_open(title);
    let f = move |v: f64| if pct_axes { format!("{:.0}%", 100.0 * v) } else { format!("{v:.0}") };
    axes(&mut s, xl, yl, ymax, &f);
    let (pw, ph) = (W - ML - MR, H - MB - MT);
    for i in 0..=5 {
        let v = xmax * i as f64 / 5.0;
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>", ML + pw * i as f64 / 5.0, H - MB + 16.0, f(v));
    }
    for (label, x, y, r) in pts {
        let cx = ML + pw * x / xmax;
        let cy = H - MB - ph * y / ymax;
        let _ = writeln!(s, "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"{r:.1}\" fill=\"#f58518\" fill-opacity=\"0.6\" stroke=\"#333\"/>");
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>", cx + r + 2.0, cy + 4.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

/// RR against P2Pass per type; point radius grows with RRR.
pub fn svg_rr_vs_p2pass(m: &MetricsReport) -> String {
    let pts: Vec<_> = m
        .per_type
        .iter()
        .filter_map(|(e, g)| g.p2_pass.map(|p| (e.to_string(), g.rr.value, p.value, 3.0 + 12.0 * g.rrr.value)))
        .collect();
    scatter("Recovery vs rationality pass rate", "RR", "P2Pass", &pts, 1.0, 1.0, true)
}

pub fn svg_steps_vs_tokens(m: &MetricsReport) -> String {
    let pts: Vec<_> = m
        .per_type
        .iter()
        .filter(|(_, g)| g.episodes > 0)
        .map(|(e, g)| (e.to_string(), g.mean_steps, g.mean_tokens, 5.0))
        .collect();
    let xmax = nice_max(pts.iter().map(|p| p.1).fold(0.0, f64::max));
    let ymax = nice_max(pts.iter().map(|p| p.2).fold(0.0, f64::max));
    scatter("Mean steps vs mean tokens", "mean steps", "mean tokens", &pts, xmax, ymax, false)
}

/// Writes the three plots into `dir` and returns their paths.
pub fn write_plots(m: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let files = [
        ("rrr_by_type.svg", svg_rrr_by_type(m)),
        ("rr_vs_p2pass.svg", svg_rr_vs_p2pass(m)),
        ("steps_vs_tokens.svg", svg_steps_vs_tokens(m)),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| HarnessError::io(&p, e))?;
        out.push(p);
    }
    Ok(out)
}
