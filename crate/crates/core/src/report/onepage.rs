//! The one-page report: a self-contained HTML document sized to a single
//! A4 sheet.
//!
//! Every block on the page has a fixed height in millimetres, recorded in a
//! `data-height-mm` attribute, and the blocks plus the gaps between them
//! never exceed the printable height. Content that would not fit is clipped
//! rather than allowed to push onto a second sheet.

use std::f64::consts::PI;
use std::fmt::Write;

use super::equivalency::{compute_equivalencies, EquivalencyFactors};
use super::trend::{compute_trend, TrendThresholds};
use super::{ReportDocument, ReportFormat};
use crate::allocation::Footprint;
use crate::scope::Scope2Category;

/// Printable area of an A4 sheet with 12 mm margins.
pub const PAGE_WIDTH_MM: f64 = 186.0;
pub const PAGE_HEIGHT_MM: f64 = 273.0;
/// Vertical gap between blocks.
pub const BLOCK_GAP_MM: f64 = 3.0;

const SUMMARY_MM: f64 = 60.0;
const EQUIVALENCIES_MM: f64 = 28.0;
const CHARTS_MM: f64 = 100.0;
const FOOTER_BASE_MM: f64 = 30.0;
const FOOTER_ROW_MM: f64 = 4.5;

fn footer_budget_mm() -> f64 {
    PAGE_HEIGHT_MM - SUMMARY_MM - EQUIVALENCIES_MM - CHARTS_MM - 3.0 * BLOCK_GAP_MM
}

/// Most data center rows the footer table can hold (two per line).
fn max_footer_dcs() -> usize {
    2 * ((footer_budget_mm() - FOOTER_BASE_MM) / FOOTER_ROW_MM).floor() as usize
}

/// One pie slice or legend entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub key: &'static str,
    pub label: &'static str,
    pub value: f64,
    pub color: &'static str,
}

/// Emissions by Scope 1, the four Scope 2 sources, and Scope 3.
pub fn scope_slices(fp: &Footprint) -> Vec<Slice> {
    let b = fp.aggregate_breakdown();
    let c = |cat| b.component(cat).emissions.value();
    vec![
        Slice { key: "scope1", label: "Scope 1", value: b.scope1.value(), color: "#6d4c41" },
        Slice { key: "server", label: "Scope 2 servers", value: c(Scope2Category::Server), color: "#1565c0" },
        Slice { key: "network", label: "Scope 2 network", value: c(Scope2Category::Network), color: "#42a5f5" },
        Slice { key: "cooling", label: "Scope 2 cooling", value: c(Scope2Category::Cooling), color: "#26a69a" },
        Slice { key: "other", label: "Scope 2 other", value: c(Scope2Category::Other), color: "#90caf9" },
        Slice { key: "scope3", label: "Scope 3", value: b.scope3.value(), color: "#8e24aa" },
    ]
}

/// Gross split into what each offset method covers and what remains. A
/// tenant without offsets gets a single net slice.
pub fn offset_slices(fp: &Footprint) -> Vec<Slice> {
    let o = fp.offsets();
    let net = Slice { key: "net", label: "Net emissions", value: fp.net_total.value().max(0.0), color: "#757575" };
    if o.total().value() == 0.0 {
        return vec![net];
    }
    vec![
        Slice { key: "green", label: "Green energy", value: o.green.value(), color: "#43a047" },
        Slice { key: "rec", label: "Renewable energy certificates", value: o.rec.value(), color: "#c0ca33" },
        net,
    ]
}

/// Renders the one-page report with the default ±5% trend thresholds.
pub fn render_onepage(fp: &Footprint, f: &EquivalencyFactors) -> ReportDocument {
    render_onepage_with(fp, f, &TrendThresholds::default())
}

pub fn render_onepage_with(fp: &Footprint, f: &EquivalencyFactors, thresholds: &TrendThresholds) -> ReportDocument {
    let mut html = String::with_capacity(16 * 1024);
    let title = format!("Carbon footprint {} {}", escape(&fp.display_name), fp.period);
    let _ = write!(
        html,
        r#"<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>{title}</title>
<style>
@page {{ size: A4 portrait; margin: 12mm; }}
html, body {{ margin: 0; padding: 0; }}
body {{ font-family: "Helvetica Neue", Arial, sans-serif; font-size: 9pt; color: #212121; }}
.page {{ width: {PAGE_WIDTH_MM}mm; height: {PAGE_HEIGHT_MM}mm; overflow: hidden; box-sizing: border-box; break-inside: avoid; page-break-inside: avoid; break-after: avoid; }}
.block {{ box-sizing: border-box; overflow: hidden; margin: 0 0 {BLOCK_GAP_MM}mm 0; border: 0.3mm solid #e0e0e0; border-radius: 2mm; padding: 3mm 4mm; }}
.block:last-child {{ margin-bottom: 0; }}
h1 {{ font-size: 15pt; margin: 0 0 1mm 0; }}
h2 {{ font-size: 10.5pt; margin: 0 0 2mm 0; color: #37474f; }}
.sub {{ color: #616161; margin: 0 0 2mm 0; }}
.figures {{ display: flex; gap: 4mm; }}
.figure {{ flex: 1; background: #f5f5f5; border-radius: 1.5mm; padding: 2mm 3mm; }}
.figure .value {{ font-size: 13pt; font-weight: bold; }}
.figure .label {{ color: #616161; font-size: 8pt; }}
.trend {{ margin-top: 3mm; display: flex; align-items: center; gap: 4mm; }}
.trend table {{ border-collapse: collapse; font-size: 8pt; }}
.trend td, .trend th {{ padding: 0.5mm 2mm; text-align: right; border-bottom: 0.2mm solid #eeeeee; }}
.badge {{ color: #fff; border-radius: 3mm; padding: 1mm 3mm; font-weight: bold; font-size: 8pt; }}
.row {{ display: flex; gap: {BLOCK_GAP_MM}mm; margin: 0 0 {BLOCK_GAP_MM}mm 0; }}
.row > .block {{ flex: 1; margin: 0; height: 100%; }}
.chart {{ display: flex; align-items: center; gap: 3mm; }}
.chart svg {{ width: 42mm; height: 42mm; flex: none; }}
.legend {{ list-style: none; padding: 0; margin: 0; font-size: 7.5pt; }}
.legend li {{ margin: 0 0 1mm 0; }}
.swatch {{ display: inline-block; width: 2.5mm; height: 2.5mm; margin-right: 1.5mm; vertical-align: middle; }}
.note {{ font-size: 7.5pt; color: #616161; margin-top: 2mm; }}
footer p {{ font-size: 7pt; margin: 0 0 1.5mm 0; color: #424242; }}
footer table {{ width: 100%; border-collapse: collapse; font-size: 7pt; }}
footer td, footer th {{ text-align: left; padding: 0.3mm 1.5mm; }}
</style>
</head>
<body>
<div class="page" data-page-height-mm="{PAGE_HEIGHT_MM}" data-gap-mm="{BLOCK_GAP_MM}">
"#
    );
    summary(&mut html, fp, thresholds);
    equivalencies(&mut html, fp, f);
    charts(&mut html, fp);
    footer(&mut html, fp, f);
    html.push_str("</div>\n</body>\n</html>\n");
    ReportDocument {
        tenant_id: fp.tenant_id.clone(),
        period: fp.period,
        format: ReportFormat::OnePage,
        content: html.into_bytes(),
    }
}

fn summary(html: &mut String, fp: &Footprint, thresholds: &TrendThresholds) {
    let _ = write!(
        html,
        r#"<section class="block" id="summary" data-height-mm="{SUMMARY_MM}" style="height: {SUMMARY_MM}mm">
<h1>{name}</h1>
<p class="sub">Operational carbon footprint for {period}, {agents} agents</p>
<div class="figures">
<div class="figure" data-field="gross" data-value="{gross_v}"><div class="value">{gross}</div><div class="label">Gross emissions (CO₂e)</div></div>
<div class="figure" data-field="net" data-value="{net_v}"><div class="value">{net}</div><div class="label">Net emissions (CO₂e)</div></div>
<div class="figure" data-field="per-agent" data-value="{per_agent_v}"><div class="value">{per_agent}</div><div class="label">Per agent (CO₂e)</div></div>
</div>
"#,
        name = escape(&fp.display_name),
        period = fp.period,
        agents = group(fp.agent_count as f64, 0),
        gross = mass(fp.gross_total.value()),
        net = mass(fp.net_total.value()),
        per_agent = mass(fp.per_agent.value()),
        gross_v = fp.gross_total.value(),
        net_v = fp.net_total.value(),
        per_agent_v = fp.per_agent.value(),
    );

    let deltas = compute_trend(fp, &fp.history);
    html.push_str("<div class=\"trend\" data-field=\"trend\">\n");
    if deltas.is_empty() {
        html.push_str("<p class=\"note\">No earlier months on record.</p>\n");
    } else {
        html.push_str("<table><tr><th>Month</th><th>Gross</th><th>Net</th><th>Change</th></tr>\n");
        for d in &deltas {
            let change = d.pct_change.map_or("n/a".to_string(), |p| format!("{p:+.1}%"));
            let _ = writeln!(
                html,
                r#"<tr data-period="{}"><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>"#,
                d.period,
                d.period,
                mass(d.gross.value()),
                mass(d.net.value()),
                change
            );
        }
        html.push_str("</table>\n");
        if let Some(badge) = thresholds.badge(&deltas) {
            let _ = writeln!(
                html,
                r#"<span class="badge" data-field="badge" data-badge="{badge}" style="background: {}">{}</span>"#,
                badge.color(),
                badge.label()
            );
        }
    }
    html.push_str("</div>\n");
    if fp.is_over_offset() {
        html.push_str("<p class=\"note\">Offsets exceed gross emissions this month.</p>\n");
    }
    html.push_str("</section>\n");
}

fn equivalencies(html: &mut String, fp: &Footprint, f: &EquivalencyFactors) {
    let e = compute_equivalencies(fp.gross_total, f);
    let _ = write!(
        html,
        r#"<section class="block" id="equivalencies" data-height-mm="{EQUIVALENCIES_MM}" style="height: {EQUIVALENCIES_MM}mm">
<h2>Gross emissions are comparable to</h2>
<div class="figures">
<div class="figure" data-field="flights"><div class="value">{}</div><div class="label">one-way flights Amsterdam to New York</div></div>
<div class="figure" data-field="car-km"><div class="value">{}</div><div class="label">km driven by an average car</div></div>
<div class="figure" data-field="smartphone-charges"><div class="value">{}</div><div class="label">smartphone charges</div></div>
</div>
</section>
"#,
        group(e.flights, 1),
        group(e.car_km, 1),
        group(e.smartphone_charges, 1)
    );
}

fn charts(html: &mut String, fp: &Footprint) {
    let _ = writeln!(html, r#"<div class="row" data-height-mm="{CHARTS_MM}" style="height: {CHARTS_MM}mm">"#);
    let scopes = scope_slices(fp);
    chart(html, "scope-breakdown", "Emissions by scope", &scopes, fp.gross_total.value());
    let offsets = offset_slices(fp);
    let total: f64 = offsets.iter().map(|s| s.value).sum();
    chart(html, "offsets", "Offsets against gross emissions", &offsets, total);
    html.push_str("</div>\n");
}

fn chart(html: &mut String, id: &str, heading: &str, slices: &[Slice], total: f64) {
    let _ = write!(
        html,
        "<section class=\"block\" id=\"{id}\">\n<h2>{heading}</h2>\n<div class=\"chart\">\n{}",
        pie_svg(slices)
    );
    html.push_str("<ul class=\"legend\">\n");
    for s in slices {
        let pct = if total > 0.0 { s.value / total * 100.0 } else { 0.0 };
        let _ = writeln!(
            html,
            r#"<li data-category="{}" data-value="{}"><span class="swatch" style="background: {}"></span>{}: {} ({:.1}%)</li>"#,
            s.key,
            s.value,
            s.color,
            s.label,
            mass(s.value),
            pct
        );
    }
    html.push_str("</ul>\n</div>\n");
    let _ = writeln!(html, "<p class=\"note\">Total {}</p>", mass(total));
    html.push_str("</section>\n");
}

/// Inline SVG pie; zero slices draw nothing.
fn pie_svg(slices: &[Slice]) -> String {
    let total: f64 = slices.iter().map(|s| s.value.max(0.0)).sum();
    let mut svg = String::from(r#"<svg viewBox="0 0 100 100" xmlns="http://www.w3.org/2000/svg" role="img">"#);
    svg.push('\n');
    if total <= 0.0 {
        svg.push_str(r##"<circle cx="50" cy="50" r="45" fill="#eeeeee"/>"##);
        svg.push_str("\n</svg>\n");
        return svg;
    }
    let mut angle = -PI / 2.0;
    for s in slices.iter().filter(|s| s.value > 0.0) {
        let frac = s.value / total;
        if frac >= 1.0 - 1e-12 {
            let _ = writeln!(
                svg,
                r#"<circle class="slice" data-category="{}" cx="50" cy="50" r="45" fill="{}"><title>{}</title></circle>"#,
                s.key, s.color, s.label
            );
            continue;
        }
        let end = angle + frac * 2.0 * PI;
        let (x0, y0) = (50.0 + 45.0 * angle.cos(), 50.0 + 45.0 * angle.sin());
        let (x1, y1) = (50.0 + 45.0 * end.cos(), 50.0 + 45.0 * end.sin());
        let large = if frac > 0.5 { 1 } else { 0 };
        let _ = writeln!(
            svg,
            r#"<path class="slice" data-category="{}" d="M50,50 L{x0:.3},{y0:.3} A45,45 0 {large} 1 {x1:.3},{y1:.3} Z" fill="{}"><title>{}</title></path>"#,
            s.key, s.color, s.label
        );
        angle = end;
    }
    svg.push_str("</svg>\n");
    svg
}

fn footer(html: &mut String, fp: &Footprint, f: &EquivalencyFactors) {
    let limit = max_footer_dcs();
    let shown = fp.per_dc.len().min(limit);
    let rows = shown.div_ceil(2);
    let height = FOOTER_BASE_MM + rows as f64 * FOOTER_ROW_MM;
    let _ = write!(
        html,
        r#"<footer class="block" id="methodology" data-height-mm="{height}" style="height: {height}mm">
<h2>Methodology and data</h2>
<p>Gross emissions are Scope 1 plus Scope 2 plus Scope 3 for the month. Scope 2 is the energy of the tenant's servers, estimated with calibrated linear power models, and of its network traffic at 6×10⁻⁸ Wh per byte, plus a share of cooling and other facility energy proportional to that direct energy, times the grid carbon intensity of each data center. Each data center's Scope 1 and Scope 3 are attributed by the responsibility ratio r = λ × L<sub>share</sub>, where λ is the tenant's fraction of the data center's Scope 2. Net emissions subtract the tenant's r-weighted share of green energy and renewable energy certificates. Embodied emissions are not included.</p>
<p>Equivalency factors: flight {} g, car {} g/km, smartphone charge {} g. {}</p>
<table>
"#,
        group(f.flight_ams_nyc, 1),
        group(f.car_km, 1),
        group(f.smartphone_charge, 2),
        escape(&f.source_note)
    );
    html.push_str("<tr><th>Data center</th><th>g/Wh</th><th>λ</th><th>r</th><th>Data center</th><th>g/Wh</th><th>λ</th><th>r</th></tr>\n");
    for pair in fp.per_dc[..shown].chunks(2) {
        html.push_str("<tr>");
        for d in pair {
            let _ = write!(
                html,
                r#"<td data-datacenter="{id}">{id} {name} ({region})</td><td>{c}</td><td>{l:.4}</td><td>{r:.4}</td>"#,
                id = escape(&d.datacenter_id),
                name = escape(&d.name),
                region = escape(&d.region),
                c = d.scope2.grid_intensity.value(),
                l = d.ratio.lambda.value(),
                r = d.ratio.r.value(),
            );
        }
        html.push_str("</tr>\n");
    }
    html.push_str("</table>\n");
    if shown < fp.per_dc.len() {
        let _ =
            writeln!(html, "<p>{} further data centers are listed in the JSON report.</p>", fp.per_dc.len() - shown);
    }
    html.push_str("</footer>\n");
}

/// Grams shown in g, kg or t with one decimal.
fn mass(grams: f64) -> String {
    let a = grams.abs();
    if a >= 1e6 {
        format!("{} t", group(grams / 1e6, 1))
    } else if a >= 1e3 {
        format!("{} kg", group(grams / 1e3, 1))
    } else {
        format!("{} g", group(grams, 1))
    }
}

/// Fixed decimals with comma thousands separators.
fn group(x: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, x.abs());
    let (int, frac) = s.split_once('.').map_or((s.as_str(), None), |(i, f)| (i, Some(f)));
    let mut out = String::new();
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    if let Some(f) = frac {
        out.push('.');
        out.push_str(f);
    }
    let negative = x < 0.0 && out.chars().any(|c| c.is_ascii_digit() && c != '0');
    if negative {
        out.insert(0, '-');
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{DcFootprint, HistoryEntry, Offsets};
    use crate::report::json::tests::{factors, listing_footprint};
    use crate::units::{EmissionsG, Period};

    fn html(fp: &Footprint) -> String {
        String::from_utf8(render_onepage(fp, &factors()).content).unwrap()
    }

    fn heights(doc: &str) -> Vec<f64> {
        doc.split("data-height-mm=\"").skip(1).map(|s| s[..s.find('"').unwrap()].parse().unwrap()).collect()
    }

    #[test]
    fn grouping() {
        assert_eq!(group(1_234_567.891, 1), "1,234,567.9");
        assert_eq!(group(999.96, 1), "1,000.0");
        assert_eq!(group(-0.01, 1), "0.0");
        assert_eq!(group(-1500.0, 0), "-1,500");
        assert_eq!(mass(1_800_000.0), "1.8 t");
        assert_eq!(mass(40_000.0), "40.0 kg");
    }

    #[test]
    fn five_sections_within_page() {
        let doc = html(&listing_footprint());
        for id in ["summary", "equivalencies", "scope-breakdown", "offsets", "methodology"] {
            assert!(doc.contains(&format!("id=\"{id}\"")), "{id}");
        }
        assert_eq!(doc.matches("<svg").count(), 2);
        let h = heights(&doc);
        assert_eq!(h.len(), 4);
        assert!(h.iter().sum::<f64>() + BLOCK_GAP_MM * 3.0 <= PAGE_HEIGHT_MM);
        assert!(!doc.contains("src=") && !doc.contains("href="));
    }

    #[test]
    fn zero_offsets_give_single_net_slice() {
        let fp = listing_footprint();
        let slices = offset_slices(&fp);
        assert_eq!(slices.len(), 1);
        assert_eq!(slices[0].key, "net");
        assert_eq!(slices[0].value, fp.gross_total.value());
        assert!(html(&fp).contains(r#"<circle class="slice" data-category="net""#));
    }

    #[test]
    fn scope_slices_sum_to_gross() {
        let fp = listing_footprint();
        let s = scope_slices(&fp);
        assert_eq!(s.len(), 6);
        let sum: f64 = s.iter().map(|x| x.value).sum();
        assert!((sum - fp.gross_total.value()).abs() <= 1e-9 * fp.gross_total.value());
    }

    #[test]
    fn offset_slices_sum_to_gross() {
        let mut fp = listing_footprint();
        let d: &mut DcFootprint = &mut fp.per_dc[0];
        d.offsets = Offsets { green: EmissionsG::gross(30_000.0).unwrap(), rec: EmissionsG::gross(10_000.0).unwrap() };
        d.net = d.gross - d.offsets.total();
        fp.net_total = d.net;
        let sum: f64 = offset_slices(&fp).iter().map(|s| s.value).sum();
        assert!((sum - fp.gross_total.value()).abs() < 1e-6);
    }

    #[test]
    fn many_datacenters_stay_on_one_page() {
        let mut fp = listing_footprint();
        let template = fp.per_dc[0].clone();
        fp.per_dc = (0..60)
            .map(|i| {
                let mut d = template.clone();
                d.datacenter_id = format!("DC_{i:02}");
                d
            })
            .collect();
        let doc = html(&fp);
        let h = heights(&doc);
        assert!(h.iter().sum::<f64>() + BLOCK_GAP_MM * 3.0 <= PAGE_HEIGHT_MM + 1e-9);
        assert!(doc.contains("further data centers"));
    }

    #[test]
    fn trend_rows_and_badge() {
        let mut fp = listing_footprint();
        fp.history = vec![
            HistoryEntry {
                period: Period::new(2022, 12).unwrap(),
                gross: EmissionsG::gross(1_000.0).unwrap(),
                net: EmissionsG::gross(1_000.0).unwrap(),
            },
            HistoryEntry { period: Period::new(2022, 11).unwrap(), gross: EmissionsG::ZERO, net: EmissionsG::ZERO },
        ];
        let doc = html(&fp);
        assert!(doc.contains(r#"data-period="2022-12""#));
        assert!(doc.contains(r#"data-period="2022-11""#));
        assert!(doc.contains("n/a"));
        assert!(doc.contains(r#"data-badge="worsening""#));
    }

    #[test]
    fn names_are_escaped() {
        let mut fp = listing_footprint();
        fp.display_name = "<script>x</script>".into();
        assert!(!html(&fp).contains("<script>"));
    }
}
