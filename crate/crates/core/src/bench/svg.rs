use std::fmt::Write as _;
use std::io;

use super::{SpaceStats, SummaryStats};
use crate::error::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const BOX_W: f64 = 36.0;
const VFS_FILL: &str = "#4c72b0";
const GT_FILL: &str = "#dd8452";

/// Grouped boxplot: one group per family, the realized value-function box
/// and the ground-truth box side by side. Whiskers span min to max.
pub fn write_boxplot_svg<W: io::Write>(summary: &SummaryStats, mut out: W) -> Result<()> {
    let stats: Vec<&SpaceStats> = summary.families.iter().flat_map(|f| [&f.vfs, &f.ground_truth]).collect();
    let mut lo = stats.iter().map(|s| s.min).fold(0.0, f64::min);
    let mut hi = stats.iter().map(|s| s.max).fold(0.0, f64::max);
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let y = |v: f64| MARGIN + (hi - v) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        y(0.0),
        WIDTH - MARGIN
    );
    for v in [lo + pad, 0.0, hi - pad] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            MARGIN - 6.0,
            y(v) + 4.0
        );
    }

    let n = summary.families.len().max(1) as f64;
    let group_w = (WIDTH - 2.0 * MARGIN) / n;
    for (i, fam) in summary.families.iter().enumerate() {
        let cx = MARGIN + group_w * (i as f64 + 0.5);
        for (st, dx, fill) in [(&fam.vfs, -0.6 * BOX_W, VFS_FILL), (&fam.ground_truth, 0.6 * BOX_W, GT_FILL)] {
            let x = cx + dx;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                y(st.max),
                y(st.min)
            );
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{BOX_W}" height="{:.2}" fill="{fill}" stroke="black"/>"#,
                x - BOX_W / 2.0,
                y(st.q3),
                (y(st.q1) - y(st.q3)).max(0.5)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{2:.2}" x2="{:.2}" y2="{2:.2}" stroke="black" stroke-width="2"/>"#,
                x - BOX_W / 2.0,
                x + BOX_W / 2.0,
                y(st.median)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN + 20.0,
            fam.family
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{0}" y="12" width="12" height="12" fill="{VFS_FILL}"/><text x="{1}" y="22">value-function space</text>"#,
        MARGIN,
        MARGIN + 16.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{0}" y="12" width="12" height="12" fill="{GT_FILL}"/><text x="{1}" y="22">state space</text>"#,
        MARGIN + 180.0,
        MARGIN + 196.0
    );
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{BenchRecord, TaskFamily};
    use super::*;

    #[test]
    fn two_boxes_per_family() {
        let records: Vec<BenchRecord> = TaskFamily::ALL
            .iter()
            .flat_map(|&family| {
                (0..4).map(move |i| BenchRecord {
                    family,
                    sample: i,
                    seed: 0,
                    formula: String::new(),
                    vfs_robustness: 0.1 * i as f64,
                    predicted_robustness: 0.0,
                    gt_robustness: -0.05 * i as f64,
                    error: None,
                })
            })
            .collect();
        let summary = SummaryStats::from_records(&records).unwrap();
        let mut buf = Vec::new();
        write_boxplot_svg(&summary, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("<svg"));
        assert_eq!(text.matches(VFS_FILL).count(), 3 + 1);
        assert_eq!(text.matches(GT_FILL).count(), 3 + 1);
        assert!(text.contains("reach_avoid"));
    }
}
