use nscluster::risk::{circles_geojson, high_risk_mask, intensity_map, risk_boundaries, ThresholdSpec};
use nscluster::{Point, Window};

#[test]
fn intensity_peaks_at_the_densest_parent_group() {
    let window = Window::square(10_000.0).unwrap();
    let parents = [
        Point::new(2000.0, 2000.0),
        Point::new(7000.0, 6000.0),
        Point::new(7400.0, 6100.0),
        Point::new(7200.0, 6400.0),
    ];
    let r = intensity_map(&parents, 5.0, 300.0, &window, 100.0).unwrap();
    let (row, col) = r.argmax();
    let c = r.center(row, col);
    assert!(c.dist(&Point::new(7200.0, 6170.0)) < 300.0, "{c:?}");
}

#[test]
fn intensity_is_linear_in_alpha_and_additive_in_parents() {
    let window = Window::rect(0.0, 4000.0, 0.0, 3000.0).unwrap();
    let a = [Point::new(1000.0, 1000.0)];
    let b = [Point::new(3000.0, 2500.0)];
    let both = [a[0], b[0]];
    let ra = intensity_map(&a, 2.0, 250.0, &window, 50.0).unwrap();
    let rb = intensity_map(&b, 2.0, 250.0, &window, 50.0).unwrap();
    let rab = intensity_map(&both, 2.0, 250.0, &window, 50.0).unwrap();
    let r2 = intensity_map(&both, 6.0, 250.0, &window, 50.0).unwrap();
    for k in 0..rab.values.len() {
        assert!((rab.values[k] - ra.values[k] - rb.values[k]).abs() <= 1e-15);
        assert!((r2.values[k] - 3.0 * rab.values[k]).abs() <= 1e-15);
    }
}

#[test]
fn polygon_cells_outside_are_nodata() {
    let window = Window::polygon(vec![
        Point::new(0.0, 0.0),
        Point::new(2000.0, 0.0),
        Point::new(0.0, 2000.0),
    ])
    .unwrap();
    let r = intensity_map(&[Point::new(500.0, 500.0)], 4.0, 200.0, &window, 100.0).unwrap();
    let mut buf = Vec::new();
    r.write_ascii(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("NODATA_value -9999"));
    // top-right cell lies outside the triangle
    let first_row = text.lines().nth(6).unwrap();
    assert_eq!(first_row.split_whitespace().last(), Some("-9999"));
    let mask = high_risk_mask(&r, &ThresholdSpec::default()).unwrap();
    for k in 0..r.values.len() {
        assert!(r.inside[k] || !mask.flags[k]);
    }
}

#[test]
fn boundary_circles_cover_parents_and_serialise() {
    let parents = [Point::new(100.0, 200.0), Point::new(900.0, 50.0)];
    let circles = risk_boundaries(&parents, 600.0, 400.0);
    assert_eq!(circles.len(), 2);
    for (c, p) in circles.iter().zip(&parents) {
        assert!(c.contains(p));
        assert!((c.radius - (600.0 + 1.96 * 400.0)).abs() < 1e-9);
    }
    let gj = circles_geojson(&circles);
    assert_eq!(gj["type"], "FeatureCollection");
    assert_eq!(gj["features"].as_array().unwrap().len(), 2);
    assert_eq!(gj["features"][1]["properties"]["radius_m"], circles[1].radius);
}
