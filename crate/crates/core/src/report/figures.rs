//! SVG figures, one per analysis family. Output is a pure function of the
//! report, so identical reports give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::AnalysisReport;
use crate::analyses::WordCount;

pub const FIGURE_FILES: [&str; 6] = [
    "factor_size.svg",
    "factor_authors.svg",
    "evolution.svg",
    "structure.svg",
    "words_decision.svg",
    "words_rationale.svg",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const MAX_BARS: usize = 20;

const DECISION_COLOR: &str = "#1f77b4";
const RATIONALE_COLOR: &str = "#ff7f0e";
const NONE_COLOR: &str = "#9e9e9e";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Figure {
    pub file_name: &'static str,
    pub svg: String,
}

pub fn export_figures(r: &AnalysisReport) -> Vec<Figure> {
    let svgs = [
        factor_size(r),
        factor_authors(r),
        evolution(r),
        structure(r),
        words(&r.word_frequencies.decision_only, "Decision-only sentences: top words", DECISION_COLOR),
        words(&r.word_frequencies.rationale_only, "Rationale-only sentences: top words", RATIONALE_COLOR),
    ];
    FIGURE_FILES
        .iter()
        .zip(svgs)
        .map(|(file_name, svg)| Figure { file_name, svg })
        .collect()
}

pub fn write_figures(r: &AnalysisReport, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    export_figures(r)
        .into_iter()
        .map(|f| {
            let path = dir.join(f.file_name);
            std::fs::write(&path, f.svg)?;
            Ok(path)
        })
        .collect()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' && c != '\n' => {}
            c => out.push(c),
        }
    }
    out
}

struct Canvas {
    body: String,
}

impl Canvas {
    fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            concat!(
                r#"<?xml version="1.0" encoding="UTF-8"?>"#,
                "\n",
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
                "\n",
                r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#,
                "\n",
                r#"<text x="{cx:.1}" y="22" text-anchor="middle" font-size="14">{title}</text>"#,
                "\n",
                r#"<line x1="{l}" y1="{b:.1}" x2="{r:.1}" y2="{b:.1}" stroke="black"/>"#,
                "\n",
                r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{b:.1}" stroke="black"/>"#,
                "\n",
                r#"<text x="{cx:.1}" y="{xl:.1}" text-anchor="middle">{xlab}</text>"#,
                "\n",
                r#"<text x="14" y="{cy:.1}" text-anchor="middle" transform="rotate(-90 14 {cy:.1})">{ylab}</text>"#,
                "\n"
            ),
            w = WIDTH,
            h = HEIGHT,
            cx = WIDTH / 2.0,
            cy = (TOP + HEIGHT - BOTTOM) / 2.0,
            l = LEFT,
            r = WIDTH - RIGHT,
            t = TOP,
            b = HEIGHT - BOTTOM,
            xl = HEIGHT - 12.0,
            title = escape(title),
            xlab = escape(x_label),
            ylab = escape(y_label),
        );
        Self { body }
    }

    fn plot_w() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    fn x(frac: f64) -> f64 {
        LEFT + frac * Self::plot_w()
    }

    fn y(frac: f64) -> f64 {
        HEIGHT - BOTTOM - frac * Self::plot_h()
    }

    fn no_data(&mut self) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="gray">no data</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
    }

    fn y_ticks(&mut self, max: f64, fmt: impl Fn(f64) -> String) {
        for i in 0..=4 {
            let frac = i as f64 / 4.0;
            let y = Self::y(frac);
            let _ = writeln!(
                self.body,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 4.0,
                LEFT - 6.0,
                y + 4.0,
                escape(&fmt(max * frac))
            );
        }
    }

    fn x_label_at(&mut self, x: f64, label: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 14.0,
            escape(label)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, tip: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{h:.1}" fill="{fill}"><title>{}</title></rect>"#,
            escape(tip)
        );
    }

    fn legend(&mut self, entries: &[(&str, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let x = WIDTH - RIGHT - 110.0;
            let y = TOP + 4.0 + i as f64 * 16.0;
            let _ = writeln!(
                self.body,
                r#"<rect x="{x:.1}" y="{y:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                x + 14.0,
                y + 9.0,
                escape(label)
            );
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn factor_size(r: &AnalysisReport) -> String {
    let mut c = Canvas::new(
        "Rationale density vs. commit message size",
        "number of sentences",
        "rationale density",
    );
    let points = &r.factors.size_series;
    if points.is_empty() {
        c.no_data();
        return c.finish();
    }
    let max = points.iter().map(|p| p.size).max().unwrap_or(1).max(1);
    // One spare unit so the largest messages sit inside the plot.
    let span = (max + 1) as f64;
    let step = max.div_ceil(10).max(1);
    c.y_ticks(1.0, |v| format!("{v:.2}"));
    for tick in (0..=max + 1).step_by(step) {
        c.x_label_at(Canvas::x(tick as f64 / span), &tick.to_string());
    }
    for p in points {
        let _ = writeln!(
            c.body,
            r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{RATIONALE_COLOR}" fill-opacity="0.6"><title>{}</title></circle>"#,
            Canvas::x(p.size as f64 / span),
            Canvas::y(p.rationale_density),
            escape(&format!("{}: {} sentences, density {:.2}", p.commit_sha, p.size, p.rationale_density))
        );
    }
    c.finish()
}

fn factor_authors(r: &AnalysisReport) -> String {
    let mut c = Canvas::new(
        "Average rationale density per author",
        "authors by number of commits",
        "average rationale density",
    );
    let authors: Vec<_> = r.factors.author_series.iter().take(MAX_BARS).collect();
    if authors.is_empty() {
        c.no_data();
        return c.finish();
    }
    c.y_ticks(1.0, |v| format!("{v:.2}"));
    let slot = Canvas::plot_w() / authors.len() as f64;
    for (i, a) in authors.iter().enumerate() {
        let density = a.avg_rationale_density.unwrap_or(0.0);
        let x = LEFT + i as f64 * slot;
        let h = density * Canvas::plot_h();
        c.rect(
            x + slot * 0.15,
            Canvas::y(density),
            slot * 0.7,
            h,
            RATIONALE_COLOR,
            &format!("{}: {} commits, density {:.2}", a.author_id, a.n_commits, density),
        );
        c.x_label_at(x + slot / 2.0, &a.n_commits.to_string());
    }
    c.finish()
}

fn evolution(r: &AnalysisReport) -> String {
    let mut c = Canvas::new("Rationale and decision density per year", "year", "average density");
    let years = &r.evolution;
    if years.is_empty() {
        c.no_data();
        return c.finish();
    }
    c.y_ticks(1.0, |v| format!("{v:.2}"));
    c.legend(&[("rationale", RATIONALE_COLOR), ("decision", DECISION_COLOR)]);
    let first = years[0].year;
    let span = (years[years.len() - 1].year - first).max(1) as f64;
    let xpos = |year: i32| {
        if years.len() == 1 {
            Canvas::x(0.5)
        } else {
            Canvas::x((year - first) as f64 / span)
        }
    };
    for (color, pick) in [
        (RATIONALE_COLOR, (|y: &crate::analyses::YearPoint| y.avg_rationale_density) as fn(&_) -> f64),
        (DECISION_COLOR, |y: &crate::analyses::YearPoint| y.avg_decision_density),
    ] {
        let pts: Vec<String> = years
            .iter()
            .map(|y| format!("{:.1},{:.1}", xpos(y.year), Canvas::y(pick(y))))
            .collect();
        let _ = writeln!(
            c.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for y in years {
            let _ = writeln!(
                c.body,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"><title>{}: {:.2} ({} commits)</title></circle>"#,
                xpos(y.year),
                Canvas::y(pick(y)),
                y.year,
                pick(y),
                y.n_commits
            );
        }
    }
    for y in years {
        c.x_label_at(xpos(y.year), &y.year.to_string());
    }
    c.finish()
}

fn structure(r: &AnalysisReport) -> String {
    let mut c = Canvas::new(
        "Sentence categories by normalized position",
        "normalized position in message",
        "sentences",
    );
    let h = &r.structure;
    let totals: Vec<usize> = (0..h.n_bins)
        .map(|i| h.decision[i] + h.rationale[i] + h.none[i])
        .collect();
    let max = totals.iter().copied().max().unwrap_or(0);
    if max == 0 {
        c.no_data();
        return c.finish();
    }
    c.y_ticks(max as f64, |v| format!("{v:.0}"));
    c.legend(&[("decision", DECISION_COLOR), ("rationale", RATIONALE_COLOR), ("none", NONE_COLOR)]);
    let slot = Canvas::plot_w() / h.n_bins as f64;
    for i in 0..h.n_bins {
        let x = LEFT + i as f64 * slot + slot * 0.1;
        let mut base = 0usize;
        for (label, count, color) in [
            ("decision", h.decision[i], DECISION_COLOR),
            ("rationale", h.rationale[i], RATIONALE_COLOR),
            ("none", h.none[i], NONE_COLOR),
        ] {
            if count == 0 {
                continue;
            }
            let top = (base + count) as f64 / max as f64;
            let hgt = count as f64 / max as f64 * Canvas::plot_h();
            c.rect(x, Canvas::y(top), slot * 0.8, hgt, color, &format!("bin {i} {label}: {count}"));
            base += count;
        }
        c.x_label_at(
            LEFT + (i as f64 + 0.5) * slot,
            &format!("{:.2}", (i as f64 + 0.5) / h.n_bins as f64),
        );
    }
    c.finish()
}

fn words(entries: &[WordCount], title: &str, color: &str) -> String {
    let mut c = Canvas::new(title, "count", "");
    let shown: Vec<_> = entries.iter().take(MAX_BARS).collect();
    let max = shown.iter().map(|w| w.count).max().unwrap_or(0);
    if max == 0 {
        c.no_data();
        return c.finish();
    }
    let row = Canvas::plot_h() / shown.len() as f64;
    let label_w = 90.0;
    let bar_w = Canvas::plot_w() - label_w - 40.0;
    for (i, w) in shown.iter().enumerate() {
        let y = TOP + i as f64 * row;
        let len = w.count as f64 / max as f64 * bar_w;
        let _ = writeln!(
            c.body,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT + label_w - 4.0,
            y + row * 0.7,
            escape(&w.word)
        );
        c.rect(LEFT + label_w, y + row * 0.15, len, row * 0.7, color, &format!("{}: {}", w.word, w.count));
        let _ = writeln!(
            c.body,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            LEFT + label_w + len + 4.0,
            y + row * 0.7,
            w.count
        );
    }
    c.finish()
}
