use mobisim_core::report::{
    nice_axis, overlay_plot, plot_area, render_svg, thin_indices, trajectory_plot, PlotSpec,
    Series, YRange, MAX_POINTS,
};
use mobisim_core::{preset, presets, simulate};
use proptest::prelude::*;

fn polylines(svg: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    svg.lines()
        .filter(|l| l.starts_with("<polyline"))
        .map(|l| {
            let attr = |name: &str| {
                let start = l.find(&format!("{name}=\"")).unwrap() + name.len() + 2;
                let end = start + l[start..].find('"').unwrap();
                l[start..end].to_string()
            };
            let pts = attr("points")
                .split(' ')
                .map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect();
            (attr("data-label"), pts)
        })
        .collect()
}

fn series(label: &str, times: Vec<f64>, values: Vec<f64>) -> Series {
    Series {
        label: label.into(),
        times,
        values,
        style: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn x_coordinates_are_affine_in_time(
        t0 in -1e3..1e3f64,
        steps in prop::collection::vec(1e-3..10.0f64, 3..200),
        vals in prop::collection::vec(-1e3..1e3f64, 200),
    ) {
        let mut times = vec![t0];
        for d in &steps {
            times.push(times.last().unwrap() + d);
        }
        let values = vals[..times.len()].to_vec();
        let mut spec = PlotSpec::new("p");
        spec.series.push(series("s", times.clone(), values));
        let svg = render_svg(&spec).unwrap();
        let pts = &polylines(&svg)[0].1;
        let n = times.len() - 1;
        let (i, j, k) = (0, n / 2, n);
        let slope = (pts[k].0 - pts[i].0) / (times[k] - times[i]);
        let predicted = pts[i].0 + slope * (times[j] - times[i]);
        prop_assert!((pts[j].0 - predicted).abs() <= 1e-6);
    }

    #[test]
    fn tick_labels_parse_to_tick_values(lo in -1e6..1e6f64, width in 1e-6..1e6f64, expand in any::<bool>()) {
        let axis = nice_axis(lo, lo + width, expand);
        prop_assert!(!axis.ticks.is_empty() && axis.ticks.len() <= 11);
        for t in &axis.ticks {
            prop_assert_eq!(t.label.parse::<f64>().unwrap().to_bits(), t.value.to_bits());
        }
    }
}

#[test]
fn endpoints_hit_plot_corners() {
    let mut spec = PlotSpec::new("");
    spec.x_label.clear();
    spec.width = 100;
    spec.height = 100;
    spec.series.push(series("diag", vec![0.0, 5.0, 10.0], vec![0.0, 5.0, 10.0]));
    let svg = render_svg(&spec).unwrap();
    let pts = &polylines(&svg)[0].1;
    let (left, top, right, bottom) = plot_area(100, 100);
    assert!((pts[0].0 - left).abs() < 1e-9 && (pts[0].1 - bottom).abs() < 1e-9);
    assert!((pts[2].0 - right).abs() < 1e-9 && (pts[2].1 - top).abs() < 1e-9);
    assert!(svg.contains(r#"width="100" height="100""#));
}

#[test]
fn explicit_range_keeps_bounds() {
    let mut spec = PlotSpec::new("");
    spec.y_range = YRange::Explicit(-1.0, 1.0);
    spec.series.push(series("s", vec![0.0, 1.0], vec![-1.0, 1.0]));
    let svg = render_svg(&spec).unwrap();
    let pts = &polylines(&svg)[0].1;
    let (_, top, _, bottom) = plot_area(900, 600);
    assert!((pts[0].1 - bottom).abs() < 1e-9);
    assert!((pts[1].1 - top).abs() < 1e-9);
}

#[test]
fn trajectory_chart_structure() {
    let tr = simulate(&preset("scenario-1").unwrap()).unwrap().trajectory;
    let svg = render_svg(&trajectory_plot(&tr)).unwrap();
    let lines = polylines(&svg);
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].0, "congestion");
    assert_eq!(lines[1].0, "adoption");
    assert_eq!(lines[0].1.len(), tr.len());
    assert!(svg.contains("class=\"legend\""));
    assert!(svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg, render_svg(&trajectory_plot(&tr)).unwrap());
}

#[test]
fn overlay_has_every_series() {
    let runs: Vec<_> = presets()
        .iter()
        .map(|s| simulate(s).unwrap().trajectory)
        .collect();
    let svg = render_svg(&overlay_plot(&runs)).unwrap();
    let lines = polylines(&svg);
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[0].0, "scenario-1 congestion");
    assert_eq!(lines[7].0, "scenario-4 adoption");
}

#[test]
fn long_series_are_thinned() {
    let n = 10_001;
    let idx = thin_indices(n);
    assert!(idx.len() <= MAX_POINTS + 1);
    assert_eq!(idx[0], 0);
    assert_eq!(*idx.last().unwrap(), n - 1);
    let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mut spec = PlotSpec::new("");
    spec.series.push(series("s", times.clone(), times));
    let pts = &polylines(&render_svg(&spec).unwrap())[0].1;
    assert_eq!(pts.len(), idx.len());
}

#[test]
fn labels_are_escaped() {
    let mut spec = PlotSpec::new("a < b & \"c\"");
    spec.series.push(series("<s>", vec![0.0, 1.0], vec![0.0, 1.0]));
    let svg = render_svg(&spec).unwrap();
    assert!(svg.contains("a &lt; b &amp; &quot;c&quot;"));
    assert!(svg.contains("data-label=\"&lt;s&gt;\""));
}
