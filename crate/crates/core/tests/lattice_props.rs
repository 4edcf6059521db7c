use lotus_core::lattice::*;
use proptest::prelude::*;

fn spec(pitch: Nm, wall: Nm) -> HoneycombSpec {
    HoneycombSpec::new(pitch, wall, 2000).unwrap()
}

proptest! {
    #[test]
    fn area_fraction_identity(k in 1i64..400, m in 2i64..=400) {
        prop_assume!(k < m);
        let s = spec(m * 10, k * 10);
        let q = honeycomb_linear_ratio(&s).value();
        let a = honeycomb_area_fraction(&s).value();
        prop_assert!((a - (2.0 * q - q * q)).abs() < 1e-12);
        prop_assert!(a > q && a <= 2.0 * q);
    }

    #[test]
    fn openings_are_disjoint_and_inside_cells(wall in 20i64..200, cols in 1i64..6, rows in 1i64..6) {
        let s = spec(4000, wall * 10);
        let z = Zone::new(s, Rect::new(0, 0, cols * 4000 + 1234, rows * 3460 + 777)).unwrap();
        let g = tile_zone(&z);
        let cells: Vec<Cell> = g.cells().collect();
        let half_wall = s.wall() as f64 / 2.0;
        for c in &cells {
            for v in c.opening.vertices() {
                // Inside the extent and inside the cell's Voronoi hexagon.
                prop_assert!(z.extent().x <= v.x && v.x <= z.extent().right());
                prop_assert!(z.extent().y <= v.y && v.y <= z.extent().top());
                let dx = (v.x - c.center.x) as f64;
                let dy = (v.y - c.center.y) as f64;
                prop_assert!(dx.abs() <= 2000.0 - half_wall + 1.0);
                prop_assert!(dx.abs() / 2.0 + dy.abs() * 3f64.sqrt() / 2.0 <= 2000.0 - half_wall + 1.5);
            }
        }
        // Neighbouring centres are at least one pitch apart, openings at most pitch - wall wide.
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                let d = (((a.center.x - b.center.x).pow(2) + (a.center.y - b.center.y).pow(2)) as f64).sqrt();
                prop_assert!(d >= 3990.0, "{:?} {:?}", a.center, b.center);
            }
        }
    }

    #[test]
    fn count_formula_on_whole_periods(nx in 1i64..60, ny in 1i64..60) {
        let frame = LatticeFrame::new(4000, 10);
        let z = Zone::new(spec(4000, 1000), Rect::new(0, 0, nx * 4000, ny * 2 * frame.row_period)).unwrap();
        let g = tile_zone(&z);
        prop_assert_eq!(g.len() as i64, 2 * nx * ny);
        prop_assert_eq!(g.cells().count(), g.len());
    }

    #[test]
    fn drc_is_independent_of_zone_order(w1 in 30i64..150, w2 in 30i64..150, h in 100i64..1200) {
        let a = Zone::new(HoneycombSpec::new(4000, w1 * 10, h * 10).unwrap(), Rect::new(0, 0, 8000, 8000)).unwrap();
        let b = Zone::new(HoneycombSpec::new(4000, w2 * 10, h * 10).unwrap(), Rect::new(8000, 0, 8000, 8000)).unwrap();
        let rules = DesignRules::default();
        let ab = Layout::new("ab", vec![a, b]).unwrap();
        let ba = Layout::new("ba", vec![b, a]).unwrap();
        prop_assert_eq!(
            check_design_rules(DrcTarget::Layout(&ab), &rules),
            check_design_rules(DrcTarget::Layout(&ba), &rules)
        );
    }
}

#[test]
fn opening_area_converges_at_100_pitches() {
    for s in [
        HoneycombSpec::paper_design_1(),
        HoneycombSpec::paper_design_2(),
    ] {
        let z = Zone::new(s, Rect::new(0, 0, 400_000, 400_000)).unwrap();
        let ratio = tile_zone(&z).opening_area() / z.extent().area();
        let ideal = 1.0 - honeycomb_area_fraction(&s).value();
        assert!((ratio / ideal - 1.0).abs() < 0.01, "{ratio} vs {ideal}");
    }
}

#[test]
fn monte_carlo_brackets_closed_form_across_seeds() {
    let s = HoneycombSpec::paper_design_1();
    let exact = honeycomb_area_fraction(&s).value();
    let inside = (0..100u64)
        .filter(|&seed| {
            let e = monte_carlo_fraction(&s, 1_000_000, seed).unwrap();
            (e.fraction - exact).abs() <= 3.0 * e.std_error
        })
        .count();
    assert!(inside >= 99, "{inside}/100 seeds within 3σ");
}

#[test]
fn monte_carlo_is_thread_count_invariant() {
    let s = HoneycombSpec::paper_design_2();
    let runs: Vec<McEstimate> = [1, 2, 8]
        .iter()
        .map(|&t| monte_carlo_fraction_with_threads(&s, 3_000_000, 7, t).unwrap())
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}
