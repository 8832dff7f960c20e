//! Static SVG rendering of a plan.

use std::fmt::Write;

use crate::model::{Instance, Plan, StepAction};
use crate::rational::Rational;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const SCALE: f64 = 40.0;
const MARGIN: f64 = 1.5;

/// Position of an agent at time `t` along its timeline.
fn position_at(inst: &Instance, plan: &Plan, agent: usize, t: f64) -> (f64, f64) {
    let tl = &plan.timelines[agent];
    for s in &tl.steps {
        let depart = s.depart().to_f64();
        if t <= depart {
            return inst.coord(s.vertex).to_f64();
        }
        if let StepAction::Move { to, duration } = &s.action {
            let end = depart + duration.to_f64();
            if t <= end {
                let (x0, y0) = inst.coord(s.vertex).to_f64();
                let (x1, y1) = inst.coord(*to).to_f64();
                let f = (t - depart) / duration.to_f64();
                return (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            }
        }
    }
    inst.coord(tl.final_vertex).to_f64()
}

/// SVG with the graph, start and goal disks, one trajectory polyline per
/// agent and `samples` time ticks spread over the makespan.
pub fn render_svg(inst: &Instance, plan: &Plan, samples: usize) -> String {
    let pts: Vec<(f64, f64)> = inst.vertices().iter().map(|v| v.coord.to_f64()).collect();
    let max_r = inst.agents().iter().map(|a| a.radius.to_f64()).fold(0.0, f64::max);
    let pad = MARGIN + max_r;
    let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - pad;
    let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + pad;
    let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) - pad;
    let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) + pad;
    let (w, h) = if pts.is_empty() { (1.0, 1.0) } else { (max_x - min_x, max_y - min_y) };
    let px = |(x, y): (f64, f64)| ((x - min_x) * SCALE, (y - min_y) * SCALE);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.1}" height="{:.1}" viewBox="0 0 {:.1} {:.1}">"#,
        w * SCALE,
        h * SCALE,
        w * SCALE,
        h * SCALE
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(inst.name()));
    let _ = writeln!(svg, r##"<g class="edges" stroke="#cccccc" stroke-width="1">"##);
    for e in inst.edges() {
        let (x0, y0) = px(pts[e.from]);
        let (x1, y1) = px(pts[e.to]);
        let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}"/>"#);
    }
    let _ = writeln!(svg, "</g>");

    let makespan = plan.timelines.iter().map(|t| t.final_arrive.clone()).max().unwrap_or_else(Rational::zero).to_f64();
    for (i, a) in inst.agents().iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let r = a.radius.to_f64() * SCALE;
        let _ = writeln!(svg, r#"<g class="agent" id="agent-{i}">"#);
        let (sx, sy) = px(pts[a.start]);
        let (gx, gy) = px(pts[a.goal]);
        let _ = writeln!(svg, r#"<circle class="start" cx="{sx:.2}" cy="{sy:.2}" r="{r:.2}" fill="{color}" fill-opacity="0.35"/>"#);
        let _ = writeln!(
            svg,
            r#"<circle class="goal" cx="{gx:.2}" cy="{gy:.2}" r="{r:.2}" fill="none" stroke="{color}" stroke-dasharray="4 2"/>"#
        );
        if let Some(tl) = plan.timelines.get(i) {
            let mut way = vec![px(inst.coord(tl.start_vertex()).to_f64())];
            for s in &tl.steps {
                if let StepAction::Move { to, .. } = s.action {
                    way.push(px(inst.coord(to).to_f64()));
                }
            }
            let points: Vec<String> = way.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="trajectory" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                points.join(" ")
            );
            for s in 0..samples {
                let t = if samples == 1 { 0.0 } else { makespan * s as f64 / (samples - 1) as f64 };
                let (x, y) = px(position_at(inst, plan, i, t));
                let _ = writeln!(svg, r#"<circle class="tick" cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"><title>t={t:.3}</title></circle>"#);
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::gen_bottleneck;
    use crate::model::{opt_preplan, CostKind};
    use crate::planner::{solve, SolveConfig};

    fn count(svg: &str, needle: &str) -> usize {
        svg.matches(needle).count()
    }

    #[test]
    fn single_agent_single_polyline() {
        let inst = gen_bottleneck(1, Rational::from_integer(10), Rational::new(1, 2)).unwrap();
        let (pre, _, _) = opt_preplan(&inst, CostKind::SumOfCosts).unwrap();
        let svg = render_svg(&inst, &Plan::uncertified(pre), 5);
        assert_eq!(count(&svg, "<polyline"), 1);
        assert_eq!(count(&svg, r#"class="tick""#), 5);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn bottleneck_polylines_pass_the_centre() {
        let inst = gen_bottleneck(4, Rational::from_integer(10), Rational::new(1, 2)).unwrap();
        let plan = solve(&inst, &SolveConfig::default()).unwrap().plan;
        let svg = render_svg(&inst, &plan, 0);
        assert_eq!(count(&svg, "<polyline"), 4);
        assert_eq!(count(&svg, r#"class="tick""#), 0);
        let centre = format!("{:.2},{:.2}", 12.0 * SCALE, 12.0 * SCALE);
        assert_eq!(count(&svg, &centre), 4);
    }

    #[test]
    fn ticks_follow_the_motion() {
        let inst = gen_bottleneck(1, Rational::from_integer(10), Rational::new(1, 2)).unwrap();
        let (pre, _, _) = opt_preplan(&inst, CostKind::SumOfCosts).unwrap();
        let plan = Plan::uncertified(pre);
        assert_eq!(position_at(&inst, &plan, 0, 10.0), (0.0, 0.0));
        let (x, _) = position_at(&inst, &plan, 0, 5.0);
        assert!((x - 5.0).abs() < 1e-9);
        assert_eq!(position_at(&inst, &plan, 0, 99.0), (-10.0, 0.0));
    }
}
