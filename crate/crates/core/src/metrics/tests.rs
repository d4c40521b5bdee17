use proptest::prelude::*;

use super::*;
use crate::geometry::Rect;

fn empty_map() -> StaticMap {
    StaticMap::new(Rect::new(0.0, 0.0, 10.0, 10.0), 0.1, vec![])
}

fn nav_record(l0: f64, objects: Vec<(f64, f64)>) -> EpisodeRecord {
    EpisodeRecord {
        class: TaskClass::Navigation,
        robot_mass: 1.0,
        robot_path_length: l0,
        robot_start: Vec2::new(1.0, 1.0),
        robot_radius: 0.25,
        success: true,
        objects: objects
            .into_iter()
            .map(|(mass, distance)| ObjectRecord {
                mass,
                distance,
                initial_position: Vec2::new(5.0, 5.0),
                radius: 0.2,
                success: false,
            })
            .collect(),
        goal: GoalGeometry::Disk {
            center: Vec2::new(8.0, 8.0),
            radius: 0.5,
        },
        static_map: empty_map(),
    }
}

fn clearing_record(boxes: &[(Vec2, f64, bool)], l0: f64) -> EpisodeRecord {
    EpisodeRecord {
        class: TaskClass::Manipulation,
        robot_mass: 2.0,
        robot_path_length: l0,
        robot_start: Vec2::new(5.0, 1.0),
        robot_radius: 0.25,
        success: false,
        objects: boxes
            .iter()
            .map(|&(p, d, s)| ObjectRecord {
                mass: 1.0,
                distance: d,
                initial_position: p,
                radius: 0.22,
                success: s,
            })
            .collect(),
        goal: GoalGeometry::OutsideRect {
            rect: Rect::new(2.5, 3.0, 7.5, 8.0),
        },
        static_map: empty_map(),
    }
}

#[test]
fn nav_efficiency_cases() {
    assert_eq!(nav_efficiency(false, Some(3.0), 5.0).unwrap(), 0.0);
    assert_eq!(nav_efficiency(true, Some(5.0), 5.0).unwrap(), 1.0);
    assert!((nav_efficiency(true, Some(4.3), 5.0).unwrap() - 0.86).abs() < 1e-12);
    assert_eq!(nav_efficiency(true, Some(5.02), 5.0).unwrap(), 1.0);
    assert!(nav_efficiency(true, Some(1.0), 0.0).is_err());
    assert_eq!(nav_efficiency(true, None, 5.0).unwrap(), 0.0);
}

#[test]
fn nav_effort_cases() {
    assert_eq!(nav_interaction_effort(&nav_record(10.0, vec![(2.0, 0.0)])), 1.0);
    let r = nav_record(10.0, vec![(2.0, 1.0)]);
    assert!((nav_interaction_effort(&r) - 10.0 / 12.0).abs() < 1e-12);
    let mut doubled = r.clone();
    doubled.robot_mass *= 2.0;
    doubled.objects[0].mass *= 2.0;
    assert!((nav_interaction_effort(&doubled) - nav_interaction_effort(&r)).abs() < 1e-15);
}

#[test]
fn nav_evaluation_uses_static_shortest_path() {
    let r = nav_record(12.0, vec![]);
    let m = evaluate_navigation(&r).unwrap();
    let star = Vec2::new(1.0, 1.0).distance(Vec2::new(8.0, 8.0)) - 0.5;
    assert!((m.l0_star.unwrap() - star).abs() < 1e-9);
    assert!((m.efficiency - star / 12.0).abs() < 1e-9);
    assert_eq!(m.effort, 1.0);
}

#[test]
fn manip_success_is_exact_ratio() {
    let r = clearing_record(
        &[
            (Vec2::new(4.0, 5.0), 1.0, true),
            (Vec2::new(5.0, 6.0), 1.0, true),
            (Vec2::new(6.0, 5.0), 0.0, false),
        ],
        10.0,
    );
    let s = manip_success(&r).unwrap();
    assert_eq!(s, Ratio::new(2, 3));
    assert_eq!(ratio_to_f64(s), 2.0 / 3.0);
    let mut none = r.clone();
    none.objects.clear();
    assert!(manip_success(&none).is_err());
}

#[test]
fn manip_efficiency_cases() {
    assert_eq!(manip_efficiency(4.0, 10.0, 0), 0.0);
    assert_eq!(manip_efficiency(4.0, 4.0, 1), 1.0);
    assert_eq!(manip_efficiency(4.0, 8.0, 2), 0.5);
    assert!(manip_efficiency(6.0, 4.0, 2) > 1.0);
}

#[test]
fn manip_effort_cases() {
    let untouched = clearing_record(&[(Vec2::new(4.0, 5.0), 0.0, false)], 6.0);
    assert_eq!(manip_interaction_effort(&untouched, &[None]).unwrap(), 1.0);

    // Completed box pushed exactly its shortest distance cancels out.
    let exact = clearing_record(&[(Vec2::new(4.0, 5.0), 1.5, true)], 6.0);
    let i = manip_interaction_effort(&exact, &[Some(1.5)]).unwrap();
    assert!((i - 1.0).abs() < 1e-15);

    // Hand evaluation: (2*6 + 1*1.5) / (2*6 + 1*2.5).
    let over = clearing_record(&[(Vec2::new(4.0, 5.0), 2.5, true)], 6.0);
    let i = manip_interaction_effort(&over, &[Some(1.5)]).unwrap();
    assert!((i - 13.5 / 14.5).abs() < 1e-15);

    let mut worse = over.clone();
    worse.objects.push(ObjectRecord {
        mass: 1.0,
        distance: 0.7,
        initial_position: Vec2::new(6.0, 6.0),
        radius: 0.22,
        success: false,
    });
    let j = manip_interaction_effort(&worse, &[Some(1.5), None]).unwrap();
    assert!(j < i);
    assert!(manip_interaction_effort(&over, &[None]).is_err());
}

#[test]
fn object_shortest_distance_to_clearance_boundary() {
    let map = empty_map();
    let goal = GoalGeometry::OutsideRect {
        rect: Rect::new(2.0, 2.0, 8.0, 6.0),
    };
    let on_edge = shortest_static_path(Vec2::new(2.0, 4.0), &goal, &map, 0.2).unwrap();
    assert_eq!(on_edge, 0.0);
    let centre = shortest_static_path(Vec2::new(5.0, 4.0), &goal, &map, 0.2).unwrap();
    assert!((centre - 2.0).abs() < 1e-9, "{centre}");
}

#[test]
fn object_shortest_distance_detours_around_column() {
    let mut map = empty_map();
    // Column just above the box blocks the nearest (top) edge route.
    map.obstacles
        .push(Rect::new(4.5, 5.0, 5.5, 5.6).to_polygon().unwrap());
    let goal = GoalGeometry::OutsideRect {
        rect: Rect::new(1.0, 1.0, 9.0, 6.0),
    };
    let start = Vec2::new(5.0, 4.6);
    let inflation = 0.2;
    let d = shortest_static_path(start, &goal, &map, inflation).unwrap();
    assert!(d > 1.4 + 1e-6, "column must force a detour, got {d}");
    // Upper bound: the same search restricted to 8-connected moves.
    let occ = map.occupancy(inflation).unwrap();
    let spec = occ.spec;
    let sources: Vec<(usize, usize)> = (0..spec.height)
        .flat_map(|j| (0..spec.width).map(move |i| (i, j)))
        .filter(|&(i, j)| !occ.get(i, j) && goal.contains(spec.center(i, j)))
        .collect();
    let dt = crate::grid::distance_transform(&occ, &sources).unwrap();
    let (ci, cj) = spec.cell_of(start).unwrap();
    let octile = dt.get(ci, cj) + start.distance(spec.center(ci, cj));
    assert!(d <= octile + 1e-9, "{d} > {octile}");
}

#[test]
fn spanning_graph_shapes() {
    let one = clearing_record(&[(Vec2::new(5.0, 7.0), 1.0, true), (Vec2::new(4.0, 4.0), 0.0, false)], 5.0);
    let mut oracle = PathOracle::new(&one.static_map);
    let g = build_spanning_graph(&one, &mut oracle).unwrap();
    assert_eq!(g.vertices.len(), 3);
    let classes: Vec<EdgeClass> = g.edges.iter().map(|e| e.class).collect();
    assert!(classes.contains(&EdgeClass::RobotObject));
    assert!(classes.contains(&EdgeClass::ObjectGoal));

    let two = clearing_record(
        &[(Vec2::new(5.0, 7.0), 1.0, true), (Vec2::new(4.0, 4.0), 1.0, true)],
        5.0,
    );
    let mut oracle = PathOracle::new(&two.static_map);
    let g = build_spanning_graph(&two, &mut oracle).unwrap();
    assert_eq!(g.vertices.len(), 5);
    assert!(g.edges.iter().any(|e| e.class == EdgeClass::ObjectObject));
    // Empty map: every weight is the straight-line distance.
    for e in &g.edges {
        let straight = g.vertices[e.u].position.distance(g.vertices[e.v].position);
        assert!((e.weight - straight).abs() < 1e-9, "{e:?} vs {straight}");
    }
}

#[test]
fn manipulation_evaluation_on_open_map() {
    // One box 1 m below the top edge, robot 6 m below the box.
    let r = clearing_record(&[(Vec2::new(5.0, 7.0), 1.2, true)], 9.0);
    let m = evaluate_manipulation(&r).unwrap();
    assert!((m.object_shortest[0].unwrap() - 1.0).abs() < 1e-9);
    // MST: robot->box (6) + box->goal (1).
    assert!((m.l_star - 7.0).abs() < 1e-9);
    assert!((m.efficiency - 7.0 / 9.0).abs() < 1e-9);
    assert!((m.effort - (18.0 + 1.0) / (18.0 + 1.2)).abs() < 1e-9);
}

#[test]
fn report_serializes_with_short_keys() {
    let r = clearing_record(&[(Vec2::new(5.0, 7.0), 1.2, true)], 9.0);
    let m = evaluate(&r).unwrap();
    let rep = MetricReport::new("area_clearing", 3, &r, &m);
    let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
    assert!(v.get("E").is_some() && v.get("I").is_some() && v.get("S").is_some());
    assert!(v.get("L_star").is_some());
    let back: MetricReport = serde_json::from_value(v).unwrap();
    assert_eq!(back, rep);
}

/// Brute force: the lightest subset of `n-1` edges that connects every vertex.
fn brute_force_mst(n: usize, edges: &[(usize, usize, f64)]) -> Option<f64> {
    if n <= 1 {
        return Some(0.0);
    }
    let m = edges.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut label: Vec<usize> = (0..n).collect();
        let mut total = 0.0;
        for (k, &(u, v, w)) in edges.iter().enumerate() {
            if mask & (1 << k) != 0 {
                total += w;
                let (a, b) = (label[u], label[v]);
                for l in label.iter_mut() {
                    if *l == b {
                        *l = a;
                    }
                }
            }
        }
        if label.iter().all(|&l| l == label[0]) && best.is_none_or(|b| total < b) {
            best = Some(total);
        }
    }
    best
}

fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2usize..=6).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        let m = pairs.len();
        (
            Just(n),
            Just(pairs),
            proptest::collection::vec(proptest::option::weighted(0.7, 0u32..20), m),
        )
            .prop_map(|(n, pairs, ws)| {
                let edges = pairs
                    .into_iter()
                    .zip(ws)
                    .filter_map(|((u, v), w)| w.map(|w| (u, v, w as f64 * 0.5)))
                    .collect();
                (n, edges)
            })
    })
}

proptest! {
    #[test]
    fn mst_matches_brute_force((n, edges) in arb_graph()) {
        let fast = minimum_spanning_tree(n, &edges);
        match brute_force_mst(n, &edges) {
            Some(best) => {
                let t = fast.unwrap();
                prop_assert!((t.total - best).abs() < 1e-9);
                prop_assert_eq!(t.edges.len(), n - 1);
            }
            None => prop_assert!(matches!(fast, Err(MetricsError::Disconnected(_)))),
        }
    }

    #[test]
    fn efforts_are_mass_scale_invariant_and_bounded(
        l0 in 0.1f64..50.0,
        objs in proptest::collection::vec((0.1f64..20.0, 0.0f64..10.0, any::<bool>()), 0..8),
        scale in 0.01f64..100.0,
    ) {
        let boxes: Vec<(Vec2, f64, bool)> = objs.iter().map(|&(_, d, s)| (Vec2::new(5.0, 5.0), d, s)).collect();
        let mut r = clearing_record(&boxes, l0);
        for (o, &(m, _, _)) in r.objects.iter_mut().zip(&objs) {
            o.mass = m;
        }
        let shortest: Vec<Option<f64>> = r.objects.iter().map(|o| o.success.then_some(o.distance * 0.8)).collect();
        let i_nav = nav_interaction_effort(&r);
        let i_manip = manip_interaction_effort(&r, &shortest).unwrap();
        prop_assert!(i_nav > 0.0 && i_nav <= 1.0);
        prop_assert!((0.0..=1.0).contains(&i_manip));

        let mut scaled = r.clone();
        scaled.robot_mass *= scale;
        for o in &mut scaled.objects {
            o.mass *= scale;
        }
        prop_assert!((nav_interaction_effort(&scaled) - i_nav).abs() < 1e-12);
        prop_assert!((manip_interaction_effort(&scaled, &shortest).unwrap() - i_manip).abs() < 1e-12);

        // A failed object that moved strictly lowers both scores.
        let mut more = r.clone();
        more.objects.push(ObjectRecord {
            mass: 1.0,
            distance: 0.5,
            initial_position: Vec2::new(4.0, 4.0),
            radius: 0.2,
            success: false,
        });
        let mut more_short = shortest.clone();
        more_short.push(None);
        prop_assert!(nav_interaction_effort(&more) < i_nav);
        prop_assert!(manip_interaction_effort(&more, &more_short).unwrap() < i_manip);
    }
}

mod live {
    use super::*;
    use crate::env::{Action, Env, EnvConfig, EnvKind, MazeLayout};

    #[test]
    fn navigation_starts_at_full_effort_and_matches_offline_at_the_end() {
        let mut c = EnvConfig::defaults_for(EnvKind::Maze);
        c.layout = MazeLayout::Open;
        c.obstacle_count = 0;
        let mut env = Env::new(c).unwrap();
        let mut live = LiveMetrics::new();
        let m = live.update(&env.episode_record(), false).unwrap();
        assert_eq!(m.effort(), 1.0);
        assert_eq!(m.efficiency(), 1.0);
        let mut last = m;
        let mut steps = 0;
        while !env.status().is_done() && steps < 400 {
            let p = env.robot_pose();
            let to = env.goal().closest_point(p.position()) - p.position();
            let err = crate::geometry::normalize_angle(to.angle() - p.theta);
            env.step(Action::AngularVelocity { omega: (4.0 * err).clamp(-1.0, 1.0) }).unwrap();
            last = live.update(&env.episode_record(), env.status().is_done()).unwrap();
            steps += 1;
        }
        assert!(env.status().goal_reached);
        let offline = evaluate(&env.episode_record()).unwrap();
        assert!((last.efficiency() - offline.efficiency()).abs() <= 1e-9);
        assert!((last.effort() - offline.effort()).abs() <= 1e-9);
    }

    #[test]
    fn manipulation_scores_equal_offline_formulas_every_step() {
        let mut c = EnvConfig::defaults_for(EnvKind::AreaClearing);
        c.box_count = 4;
        c.action_mode = crate::env::ActionMode::Waypoint;
        let mut env = Env::new(c).unwrap();
        let mut live = LiveMetrics::new();
        let target = env.movable(0).pose.position();
        for _ in 0..6 {
            let r = env.episode_record();
            let a = live.update(&r, false).unwrap();
            assert_eq!(a, evaluate(&r).unwrap());
            if env.status().is_done() {
                break;
            }
            env.step(Action::waypoint(target)).unwrap();
        }
    }

    #[test]
    fn pushing_lowers_navigation_effort() {
        let mut c = EnvConfig::defaults_for(EnvKind::ShipIce);
        c.concentration = 0.5;
        let mut env = Env::new(c).unwrap();
        let mut live = LiveMetrics::new();
        let mut effort = 1.0;
        for _ in 0..60 {
            env.step(Action::AngularVelocity { omega: 0.0 }).unwrap();
            effort = live.update(&env.episode_record(), false).unwrap().effort();
            if env.status().is_done() {
                break;
            }
        }
        assert!(effort < 1.0, "no ice was pushed");
    }
}
