//! Minimal SVG line chart of mean best-so-far correlation per method.

use std::collections::BTreeMap;
use std::fmt::Write;

use rbc_core::experiments::RunRecord;
use rbc_core::MethodTag;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn mean_curves(runs: &[RunRecord]) -> BTreeMap<MethodTag, Vec<f64>> {
    let mut sums: BTreeMap<MethodTag, Vec<(f64, usize)>> = BTreeMap::new();
    for r in runs {
        let acc = sums.entry(r.method).or_default();
        if acc.len() < r.history.len() {
            acc.resize(r.history.len(), (0.0, 0));
        }
        for (slot, p) in acc.iter_mut().zip(&r.history) {
            if let Some(v) = p.best_so_far.value() {
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    sums.into_iter()
        .map(|(m, acc)| {
            let curve = acc
                .into_iter()
                .map(|(s, n)| if n == 0 { f64::NAN } else { s / n as f64 })
                .collect();
            (m, curve)
        })
        .collect()
}

pub fn fitness_curves(runs: &[RunRecord]) -> String {
    let curves = mean_curves(runs);
    let max_x = curves.values().map(Vec::len).max().unwrap_or(1).max(2) as f64;
    let finite = curves.values().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (lo.min(0.0), lo.min(0.0) + 1.0)
    };
    let x = |i: usize| MARGIN + (i as f64) / (max_x - 1.0) * (W - 2.0 * MARGIN);
    let y = |v: f64| H - MARGIN - (v - lo) / (hi - lo) * (H - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{W}" height="{H}" fill="white"/><path d="M{MARGIN} {MARGIN} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{cx}" y="{ty}" text-anchor="middle">evaluation</text><text x="10" y="{MARGIN}">{hi:.3}</text><text x="10" y="{b}">{lo:.3}</text>"#,
        cx = W / 2.0,
        ty = H - 15.0,
        b = H - MARGIN
    );
    for (k, (method, curve)) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        for (i, v) in curve.iter().enumerate().filter(|(_, v)| v.is_finite()) {
            let _ = write!(d, "{}{:.2} {:.2} ", if d.is_empty() { "M" } else { "L" }, x(i), y(*v));
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        let _ = writeln!(
            out,
            r#"<text x="{lx}" y="{ly}" fill="{color}">{}</text>"#,
            method.label(),
            lx = W - MARGIN - 80.0,
            ly = H - MARGIN - 20.0 - 16.0 * k as f64
        );
    }
    out.push_str("</svg>\n");
    out
}
