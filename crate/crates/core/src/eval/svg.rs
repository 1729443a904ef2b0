//! Static SVG rendering for accuracy histograms and train-size scatter
//! plots. Plain generated markup; no plotting dependency.

fn svg_header(width: u32, height: u32, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{title}</text>\n",
        width / 2
    )
}

/// Histogram of values in [0, 1] (e.g. per-class accuracies).
pub fn histogram_svg(values: &[f64], bins: usize, title: &str) -> String {
    let (width, height, margin) = (480u32, 320u32, 40.0f64);
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v.clamp(0.0, 1.0)) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let max_count = counts.iter().cloned().max().unwrap_or(1).max(1) as f64;
    let plot_w = width as f64 - 2.0 * margin;
    let plot_h = height as f64 - 2.0 * margin;
    let mut svg = svg_header(width, height, title);
    for (i, &count) in counts.iter().enumerate() {
        let bar_h = plot_h * count as f64 / max_count;
        let x = margin + plot_w * i as f64 / bins as f64;
        let y = height as f64 - margin - bar_h;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" \
             fill=\"#4a7c59\" stroke=\"white\"/>\n",
            x,
            y,
            plot_w / bins as f64,
            bar_h
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{m}\" y=\"{t}\" font-family=\"sans-serif\" font-size=\"10\">0</text>\n\
         <text x=\"{r}\" y=\"{t}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">1</text>\n",
        m = margin,
        b = height as f64 - margin,
        r = width as f64 - margin,
        t = height as f64 - margin + 14.0,
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Scatter of (train_count, accuracy) pairs; x is log-scaled when the
/// count range spans more than a decade.
pub fn scatter_svg(points: &[(f64, f64)], title: &str) -> String {
    let (width, height, margin) = (480u32, 320u32, 40.0f64);
    let mut svg = svg_header(width, height, title);
    if !points.is_empty() {
        let xs: Vec<f64> = points.iter().map(|p| p.0.max(1.0)).collect();
        let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let x_max = xs.iter().cloned().fold(1.0, f64::max);
        let log_scale = x_max / x_min.max(1.0) > 10.0;
        let (lo, hi) = if log_scale {
            (x_min.ln(), x_max.ln().max(x_min.ln() + 1e-9))
        } else {
            (x_min, x_max.max(x_min + 1e-9))
        };
        let plot_w = width as f64 - 2.0 * margin;
        let plot_h = height as f64 - 2.0 * margin;
        for (&x, &(_, y)) in xs.iter().zip(points) {
            let xv = if log_scale { x.ln() } else { x };
            let px = margin + plot_w * (xv - lo) / (hi - lo);
            let py = height as f64 - margin - plot_h * y.clamp(0.0, 1.0);
            svg.push_str(&format!(
                "<circle cx=\"{px:.1}\" cy=\"{py:.1}\" r=\"3\" fill=\"#31708e\" \
                 fill-opacity=\"0.7\"/>\n"
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_every_value_once() {
        let values = vec![0.0, 0.1, 0.55, 0.95, 1.0];
        let svg = histogram_svg(&values, 10, "per-class accuracy");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        // Five bars drawn for ten bins (empty bins render zero-height rects).
        assert_eq!(svg.matches("<rect").count(), 11); // background + 10 bins
    }

    #[test]
    fn scatter_renders_points() {
        let svg = scatter_svg(&[(182.0, 1.0), (30000.0, 0.4)], "train size vs accuracy");
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
