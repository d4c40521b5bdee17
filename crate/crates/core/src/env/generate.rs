//! Procedural scenes for the four tasks.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, EnvKind, MazeLayout};
use super::EnvError;
use crate::geometry::{ConvexPolygon, Pose, Rect, Vec2};
use crate::grid::GoalGeometry;

/// Thickness of the boundary walls, which sit just outside the interior.
pub const WALL_THICKNESS: f64 = 0.2;

const PLACEMENT_ATTEMPTS: usize = 2000;

/// A generated world before it is turned into physics bodies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Everything, walls included.
    pub bounds: Rect,
    /// Free working area inside the boundary walls.
    pub interior: Rect,
    pub statics: Vec<ConvexPolygon>,
    /// World-frame movable polygons with their masses.
    pub movables: Vec<(ConvexPolygon, f64)>,
    pub robot_pose: Pose,
    pub goal: GoalGeometry,
}

impl Scene {
    /// Empty scene with boundary walls around `interior`.
    pub fn walled(interior: Rect, robot_pose: Pose, goal: GoalGeometry) -> Self {
        Self {
            bounds: interior.inflate(WALL_THICKNESS),
            interior,
            statics: border_walls(interior),
            movables: Vec::new(),
            robot_pose,
            goal,
        }
    }
}

pub fn border_walls(interior: Rect) -> Vec<ConvexPolygon> {
    let t = WALL_THICKNESS;
    let (a, b) = (interior.min, interior.max);
    [
        Rect::new(a.x - t, a.y - t, a.x, b.y + t),
        Rect::new(b.x, a.y - t, b.x + t, b.y + t),
        Rect::new(a.x, a.y - t, b.x, a.y),
        Rect::new(a.x, b.y, b.x, b.y + t),
    ]
    .iter()
    .map(|r| r.to_polygon().expect("walls have positive size"))
    .collect()
}

fn rect_poly(x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexPolygon {
    Rect::new(x0, y0, x1, y1)
        .to_polygon()
        .expect("layout rectangles have positive size")
}

/// Static part of a maze layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MazeGeometry {
    pub interior: Rect,
    pub dividers: Vec<ConvexPolygon>,
    pub spawn: Pose,
    pub goal_center: Vec2,
    pub goal_radius: f64,
}

pub fn maze_geometry(layout: MazeLayout) -> MazeGeometry {
    match layout {
        // Start at the bottom of the right lane, goal at the bottom of the
        // left lane, a divider in between.
        MazeLayout::UShape => MazeGeometry {
            interior: Rect::new(0.0, 0.0, 6.0, 6.0),
            dividers: vec![rect_poly(2.9, 0.0, 3.1, 4.0)],
            spawn: Pose::new(4.5, 0.8, FRAC_PI_2),
            goal_center: Vec2::new(1.5, 0.8),
            goal_radius: 0.5,
        },
        MazeLayout::Open => MazeGeometry {
            interior: Rect::new(0.0, 0.0, 6.0, 6.0),
            dividers: vec![],
            spawn: Pose::new(1.0, 1.0, PI / 4.0),
            goal_center: Vec2::new(5.0, 5.0),
            goal_radius: 0.5,
        },
        MazeLayout::Zigzag => MazeGeometry {
            interior: Rect::new(0.0, 0.0, 9.0, 6.0),
            dividers: vec![rect_poly(2.9, 0.0, 3.1, 4.0), rect_poly(5.9, 2.0, 6.1, 6.0)],
            spawn: Pose::new(1.5, 0.8, FRAC_PI_2),
            goal_center: Vec2::new(7.5, 5.0),
            goal_radius: 0.5,
        },
    }
}

/// Square of side `size` centred at `c`, rotated by `theta`.
pub fn square(c: Vec2, size: f64, theta: f64) -> ConvexPolygon {
    ConvexPolygon::rectangle(size, size)
        .expect("positive size")
        .transformed(&Pose::new(c.x, c.y, theta))
}

/// Uniform point in `r` shrunk by `margin`, or `None` if nothing is left.
fn sample_in<R: Rng + ?Sized>(rng: &mut R, r: Rect, margin: f64) -> Option<Vec2> {
    let (x0, x1) = (r.min.x + margin, r.max.x - margin);
    let (y0, y1) = (r.min.y + margin, r.max.y - margin);
    if x0 > x1 || y0 > y1 {
        return None;
    }
    Some(Vec2::new(
        if x0 < x1 { rng.gen_range(x0..x1) } else { x0 },
        if y0 < y1 { rng.gen_range(y0..y1) } else { y0 },
    ))
}

fn clear_of(poly: &ConvexPolygon, others: &[ConvexPolygon], gap: f64) -> bool {
    others.iter().all(|o| {
        let reach = poly.radius_about(poly.centroid()) + o.radius_about(o.centroid()) + gap;
        poly.centroid().distance(o.centroid()) > reach || poly.separation(o) >= gap
    })
}

/// Robot footprint used to keep generated objects off the spawn.
pub fn robot_footprint(config: &EnvConfig, pose: Pose) -> ConvexPolygon {
    robot_shape(config).transformed(&pose)
}

/// Robot shape in its body frame, heading along +x.
pub fn robot_shape(config: &EnvConfig) -> ConvexPolygon {
    let (l, w) = (config.robot.length, config.robot.width);
    match config.kind {
        EnvKind::ShipIce => ConvexPolygon::new(vec![
            Vec2::new(-0.5 * l, -0.5 * w),
            Vec2::new(0.2 * l, -0.5 * w),
            Vec2::new(0.5 * l, 0.0),
            Vec2::new(0.2 * l, 0.5 * w),
            Vec2::new(-0.5 * l, 0.5 * w),
        ])
        .expect("hull is convex"),
        _ => ConvexPolygon::rectangle(l, w).expect("positive robot size"),
    }
}

pub fn generate(config: &EnvConfig, rng: &mut impl Rng) -> Result<Scene, EnvError> {
    match config.kind {
        EnvKind::Maze => generate_maze(config, rng),
        EnvKind::ShipIce => generate_ship_ice(config, rng),
        EnvKind::BoxDelivery | EnvKind::AreaClearing => generate_manipulation(config, rng),
    }
}

/// Maze walls from the layout library plus `obstacle_count` square
/// obstacles placed uniformly in free space.
pub fn generate_maze(config: &EnvConfig, rng: &mut impl Rng) -> Result<Scene, EnvError> {
    let geo = maze_geometry(config.layout);
    let mut scene = Scene::walled(
        geo.interior,
        geo.spawn,
        GoalGeometry::Disk {
            center: geo.goal_center,
            radius: geo.goal_radius,
        },
    );
    scene.statics.extend(geo.dividers.iter().cloned());
    let spawn = robot_footprint(config, geo.spawn);
    let size = config.obstacle_size;
    let half_diag = size * std::f64::consts::FRAC_1_SQRT_2;
    let mut placed: Vec<ConvexPolygon> = Vec::new();
    for k in 0..config.obstacle_count {
        let mut ok = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let Some(c) = sample_in(rng, geo.interior, half_diag + 0.05) else {
                break;
            };
            let theta = rng.gen_range(-PI..PI);
            let poly = square(c, size, theta);
            if c.distance(geo.goal_center) < geo.goal_radius + half_diag + 0.1 {
                continue;
            }
            if !clear_of(&poly, &scene.statics, 0.05)
                || !clear_of(&poly, std::slice::from_ref(&spawn), 0.15)
                || !clear_of(&poly, &placed, 0.05)
            {
                continue;
            }
            ok = Some(poly);
            break;
        }
        let poly = ok.ok_or_else(|| {
            EnvError::Generation(format!(
                "could not place maze obstacle {} of {} clear of walls, spawn and goal",
                k + 1,
                config.obstacle_count
            ))
        })?;
        placed.push(poly);
    }
    scene
        .movables
        .extend(placed.into_iter().map(|p| (p, config.obstacle_mass)));
    Ok(scene)
}

/// Random convex polygon: `n` vertices on a circle of `radius` at sorted
/// random angles, centred on the origin's neighbourhood.
fn random_floe_shape(rng: &mut impl Rng) -> Vec<Vec2> {
    let n = rng.gen_range(5..=8);
    let slot = 2.0 * PI / n as f64;
    let phase = rng.gen_range(0.0..2.0 * PI);
    (0..n)
        .map(|i| {
            let a = phase + slot * (i as f64 + rng.gen_range(-0.3..0.3));
            Vec2::from_angle(a)
        })
        .collect()
}

fn unit_area(shape: &[Vec2]) -> f64 {
    let n = shape.len();
    0.5 * (0..n).map(|i| shape[i].cross(shape[(i + 1) % n])).sum::<f64>()
}

/// Rectangle of ice between the start area and the goal line.
pub fn ice_region(config: &EnvConfig) -> Rect {
    let goal_y = 1.0 + config.goal_distance;
    Rect::new(0.0, 2.0f64.min(goal_y), config.channel_width, goal_y)
}

/// Non-overlapping convex floes (5 to 8 vertices, radius 0.3 to 1.0 m)
/// covering `concentration` of `region`. Floes are placed largest first by
/// rejection sampling and the last one is sized to hit the target area. If
/// random placement jams, floes are laid out on a jittered hexagonal lattice.
pub fn generate_ice_field(
    rng: &mut impl Rng,
    region: Rect,
    concentration: f64,
) -> Result<Vec<ConvexPolygon>, EnvError> {
    if !(0.0..=0.5).contains(&concentration) {
        return Err(EnvError::InvalidConfig(format!(
            "concentration {concentration} outside [0, 0.5]"
        )));
    }
    let target = concentration * region.area();
    if target <= 0.0 {
        return Ok(Vec::new());
    }
    if let Some(floes) = random_ice(rng, region, target) {
        return Ok(floes);
    }
    log::debug!("random floe placement jammed; using a lattice layout");
    lattice_ice(rng, region, target).ok_or_else(|| {
        EnvError::Generation(format!(
            "cannot reach ice concentration {concentration} in a {:.1} x {:.1} m region",
            region.width(),
            region.height()
        ))
    })
}

const FLOE_GAP: f64 = 0.02;
const TOLERANCE: f64 = 0.002;

fn random_ice(rng: &mut impl Rng, region: Rect, target: f64) -> Option<Vec<ConvexPolygon>> {
    let mut radii = Vec::new();
    let mut planned = 0.0;
    loop {
        let r: f64 = rng.gen_range(0.3..1.0);
        // Expected polygon area is a bit under the disk's.
        let a = 0.75 * PI * r * r;
        if planned + a > target {
            break;
        }
        planned += a;
        radii.push(r);
    }
    radii.sort_by(|a, b| b.total_cmp(a));

    let mut floes: Vec<ConvexPolygon> = Vec::new();
    let mut area = 0.0;
    let place = |rng: &mut dyn rand::RngCore, shape: &[Vec2], r: f64, floes: &mut Vec<ConvexPolygon>| {
        for _ in 0..PLACEMENT_ATTEMPTS {
            let c = sample_in(rng, region, r + FLOE_GAP)?;
            let pts: Vec<Vec2> = shape.iter().map(|&v| c + v * r).collect();
            let poly = ConvexPolygon::new(pts).ok()?;
            let fits = floes.iter().all(|f| {
                let fc = f.centroid();
                fc.distance(c) > f.radius_about(fc) + r + FLOE_GAP || f.separation(&poly) >= FLOE_GAP
            });
            if fits {
                let a = poly.area();
                floes.push(poly);
                return Some(a);
            }
        }
        None
    };

    for r in radii {
        if target - area <= TOLERANCE * region.area() {
            break;
        }
        let shape = random_floe_shape(rng);
        let ua = unit_area(&shape);
        let mut rr = r;
        while rr >= 0.3 {
            if area + ua * rr * rr > target {
                rr = ((target - area).max(0.0) / ua).sqrt().min(rr);
            }
            if let Some(a) = place(rng, &shape, rr, &mut floes) {
                area += a;
                break;
            }
            rr *= 0.85;
        }
    }
    // Fill the remainder, the last floe sized to land on the target.
    let mut failures = 0;
    while target - area > TOLERANCE * region.area() {
        let shape = random_floe_shape(rng);
        let ua = unit_area(&shape);
        let exact = ((target - area) / ua).sqrt();
        let r = exact.min(1.0);
        match place(rng, &shape, r, &mut floes) {
            Some(a) => area += a,
            None => {
                failures += 1;
                if failures > 20 {
                    return None;
                }
            }
        }
    }
    Some(floes)
}

fn lattice_ice(rng: &mut impl Rng, region: Rect, target: f64) -> Option<Vec<ConvexPolygon>> {
    let spacing = 1.6;
    let row_h = spacing * 3f64.sqrt() / 2.0;
    let max_r = 0.5 * spacing - FLOE_GAP;
    let mut centers = Vec::new();
    let mut row = 0;
    let mut y = region.min.y + max_r;
    while y <= region.max.y - max_r {
        let offset = if row % 2 == 0 { 0.0 } else { 0.5 * spacing };
        let mut x = region.min.x + max_r + offset;
        while x <= region.max.x - max_r {
            centers.push(Vec2::new(x, y));
            x += spacing;
        }
        y += row_h;
        row += 1;
    }
    let shapes: Vec<Vec<Vec2>> = centers.iter().map(|_| random_floe_shape(rng)).collect();
    let full: f64 = shapes.iter().map(|s| unit_area(s) * max_r * max_r).sum();
    if full < target {
        return None;
    }
    // Use as many lattice sites as needed at a common radius >= 0.3.
    let mut floes = Vec::new();
    let mut area = 0.0;
    for (c, s) in centers.iter().zip(&shapes) {
        let remaining = target - area;
        if remaining <= TOLERANCE * region.area() {
            break;
        }
        let ua = unit_area(s);
        let r = (remaining / ua).sqrt().min(max_r);
        let jitter = Vec2::new(rng.gen_range(-0.02..0.02), rng.gen_range(-0.02..0.02));
        let poly = ConvexPolygon::new(s.iter().map(|&v| *c + jitter + v * r).collect()).ok()?;
        area += poly.area();
        floes.push(poly);
    }
    Some(floes)
}

pub fn generate_ship_ice(config: &EnvConfig, rng: &mut impl Rng) -> Result<Scene, EnvError> {
    let w = config.channel_width;
    let goal_y = 1.0 + config.goal_distance;
    let interior = Rect::new(0.0, 0.0, w, goal_y + 2.0);
    let mut scene = Scene::walled(
        interior,
        Pose::new(0.5 * w, 1.0, FRAC_PI_2),
        GoalGeometry::LineAbove { y: goal_y },
    );
    let floes = generate_ice_field(rng, ice_region(config), config.concentration)?;
    scene.movables = floes
        .into_iter()
        .map(|f| {
            let m = config.floe_density * f.area();
            (f, m)
        })
        .collect();
    Ok(scene)
}

pub fn generate_manipulation(config: &EnvConfig, rng: &mut impl Rng) -> Result<Scene, EnvError> {
    let interior = Rect::new(0.0, 0.0, config.room_width, config.room_height);
    let delivery = config.kind == EnvKind::BoxDelivery;
    let (goal, target) = if delivery {
        let poly = config
            .receptacle
            .to_polygon()
            .map_err(|e| EnvError::InvalidConfig(format!("receptacle: {e}")))?;
        (GoalGeometry::Polygon { polygon: poly }, config.receptacle)
    } else {
        (
            GoalGeometry::OutsideRect {
                rect: config.clearance,
            },
            config.clearance,
        )
    };
    let mut scene = Scene::walled(interior, Pose::default(), goal);

    // Columns stay out of the goal area so every box remains completable.
    let col = config.column_size;
    let mut columns: Vec<ConvexPolygon> = Vec::new();
    for k in 0..config.static_obstacle_count {
        let mut ok = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let Some(c) = sample_in(rng, interior, 0.5 * col + 0.6) else {
                break;
            };
            let poly = square(c, col, 0.0);
            if rect_overlaps(&poly.bounds().inflate(0.3), &target) {
                continue;
            }
            if !clear_of(&poly, &columns, config.robot.width + 0.3) {
                continue;
            }
            ok = Some(poly);
            break;
        }
        columns.push(ok.ok_or_else(|| {
            EnvError::Generation(format!("could not place static column {}", k + 1))
        })?);
    }
    scene.statics.extend(columns.iter().cloned());

    // Robot spawn.
    let mut spawn = None;
    for _ in 0..PLACEMENT_ATTEMPTS {
        let pose = if delivery {
            let Some(c) = sample_in(rng, interior, 0.5 * config.robot.length + 0.2) else {
                break;
            };
            Pose::new(c.x, c.y, rng.gen_range(-PI..PI))
        } else {
            let x0 = 1.0f64.min(0.5 * config.room_width);
            let x1 = (config.room_width - 1.0).max(x0);
            Pose::new(rng.gen_range(x0..=x1), 1.0, FRAC_PI_2)
        };
        let fp = robot_footprint(config, pose);
        if delivery && scene.goal.contains(pose.position()) {
            continue;
        }
        if clear_of(&fp, &scene.statics, 0.1) {
            spawn = Some(pose);
            break;
        }
    }
    scene.robot_pose =
        spawn.ok_or_else(|| EnvError::Generation("could not place the robot spawn".into()))?;
    let spawn_fp = robot_footprint(config, scene.robot_pose);

    let size = config.box_size;
    let half_diag = size * std::f64::consts::FRAC_1_SQRT_2;
    let mut boxes: Vec<ConvexPolygon> = Vec::new();
    for k in 0..config.box_count {
        let mut ok = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let (c, theta) = if delivery {
                let Some(c) = sample_in(rng, interior, half_diag + 0.1) else {
                    break;
                };
                if config.receptacle.inflate(half_diag + 0.1).contains(c) {
                    continue;
                }
                (c, rng.gen_range(-PI..PI))
            } else {
                let Some(c) = sample_in(rng, config.clearance, half_diag + 0.05) else {
                    break;
                };
                (c, rng.gen_range(-PI..PI))
            };
            let poly = square(c, size, theta);
            if clear_of(&poly, &scene.statics, 0.2)
                && clear_of(&poly, std::slice::from_ref(&spawn_fp), 0.2)
                && clear_of(&poly, &boxes, 0.1)
            {
                ok = Some(poly);
                break;
            }
        }
        boxes.push(ok.ok_or_else(|| {
            EnvError::Generation(format!(
                "could not place box {} of {} clear of walls, columns, robot and other boxes",
                k + 1,
                config.box_count
            ))
        })?);
    }
    scene.movables = boxes.into_iter().map(|b| (b, config.box_mass)).collect();
    Ok(scene)
}

fn rect_overlaps(a: &Rect, b: &Rect) -> bool {
    a.min.x < b.max.x && b.min.x < a.max.x && a.min.y < b.max.y && b.min.y < a.max.y
}
