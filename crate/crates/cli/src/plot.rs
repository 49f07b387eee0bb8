//! Static SVG charts: keyword bars, word clouds and 2-D scatter plots.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"30\" font-size=\"18\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    s
}

/// Horizontal bar chart of `(label, value)` pairs, largest first.
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let mut s = open(title);
    let max = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    let left = MARGIN * 2.0;
    let band = (HEIGHT - 2.0 * MARGIN) / bars.len().max(1) as f64;
    for (i, (label, value)) in bars.iter().enumerate() {
        let y = MARGIN + i as f64 * band;
        let w = if max > 0.0 {
            value / max * (WIDTH - left - MARGIN)
        } else {
            0.0
        };
        let _ = writeln!(
            s,
            "<rect x=\"{left}\" y=\"{:.1}\" width=\"{w:.1}\" height=\"{:.1}\" fill=\"{}\"/>",
            y + band * 0.1,
            band * 0.8,
            PALETTE[0]
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>",
            left - 6.0,
            y + band / 2.0,
            escape(label)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" dominant-baseline=\"middle\">{value}</text>",
            left + w + 4.0,
            y + band / 2.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Word cloud: words laid out in rows, font size proportional to weight.
pub fn word_cloud(title: &str, words: &[(String, f64)]) -> String {
    let mut s = open(title);
    let max = words.iter().map(|w| w.1).fold(0.0, f64::max);
    let (min_size, max_size) = (12.0, 56.0);
    let (mut x, mut y, mut row_height) = (MARGIN / 2.0, MARGIN + 10.0, 0.0f64);
    for (i, (word, weight)) in words.iter().enumerate() {
        let size = if max > 0.0 {
            min_size + (max_size - min_size) * weight / max
        } else {
            min_size
        };
        // rough advance width of a sans-serif glyph
        let width = size * 0.6 * word.chars().count() as f64;
        if x + width > WIDTH - MARGIN / 2.0 && x > MARGIN / 2.0 {
            x = MARGIN / 2.0;
            y += row_height + 8.0;
            row_height = 0.0;
        }
        if y + size > HEIGHT {
            break;
        }
        row_height = row_height.max(size);
        let _ = writeln!(
            s,
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"{size:.1}\" fill=\"{}\">{}</text>",
            y + size,
            PALETTE[i % PALETTE.len()],
            escape(word)
        );
        x += width + 14.0;
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter plot of labelled points, coloured by `cluster` when given.
pub fn scatter(title: &str, points: &[[f64; 2]], labels: &[String], cluster: Option<&[usize]>) -> String {
    let mut s = open(title);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let project = |v: f64, d: usize, size: f64| -> f64 {
        let span = hi[d] - lo[d];
        if span > 0.0 {
            (v - lo[d]) / span * (size - 2.0 * MARGIN)
        } else {
            (size - 2.0 * MARGIN) / 2.0
        }
    };
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (i, p) in points.iter().enumerate() {
        let cx = MARGIN + project(p[0], 0, WIDTH);
        let cy = HEIGHT - MARGIN - project(p[1], 1, HEIGHT);
        let colour = PALETTE[cluster.map_or(0, |c| c[i]) % PALETTE.len()];
        let _ = writeln!(s, "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"5\" fill=\"{colour}\"/>");
        if let Some(l) = labels.get(i) {
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>",
                cx + 7.0,
                cy - 7.0,
                escape(l)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed_and_escape_labels() {
        let bars = vec![("a<b".to_string(), 3.0), ("c".to_string(), 1.0)];
        for svg in [
            bar_chart("t", &bars),
            word_cloud("t", &bars),
            scatter(
                "t",
                &[[0.0, 0.0], [1.0, 2.0]],
                &["x&y".into(), "z".into()],
                Some(&[0, 1]),
            ),
        ] {
            assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
            assert!(!svg.contains("a<b") && !svg.contains("x&y"));
        }
    }

    #[test]
    fn degenerate_inputs_do_not_produce_nan() {
        let svg = scatter("t", &[[1.0, 1.0]], &[], None);
        assert!(!svg.contains("NaN"));
        assert!(!bar_chart("t", &[("z".into(), 0.0)]).contains("NaN"));
    }
}
