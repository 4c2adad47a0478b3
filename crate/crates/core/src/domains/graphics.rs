//! Turtle graphics with an explicit state value and exact integer rasterization.
//!
//! The turtle starts at the canvas centre facing east with the pen down. `move_pen d a` walks `d`
//! units forward, then turns `a` radians counter-clockwise. One unit is [`UNIT_PX`] pixels. Line
//! endpoints are rounded to pixels and drawn with Bresenham's algorithm; trigonometry uses a fixed
//! polynomial so rasters are identical on every platform.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{number_word, tokenize, Domain, GeneratedTask};
use crate::error::{Error, EvalError};
use crate::eval::{evaluate, Executor, Inventions, Machine, Value};
use crate::task::{Split, Task};
use crate::term::Term;
use crate::types::PolyType;
use crate::util::derive_seed;

pub const CANVAS: usize = 64;
pub const UNIT_PX: f64 = 4.0;
/// Iteration cap for `for ∞`.
pub const INFINITE_LOOP_CAP: i64 = 20;
/// Largest finite loop count.
pub const MAX_LOOP: i64 = 100;
const INF: i64 = i64::MAX;
const EPSILON_DISTANCE: f64 = 0.25;
const CLOSE_TOLERANCE: f64 = 1e-6;
const TAU: f64 = 2.0 * PI;

/// Sine by range reduction and a fixed Taylor polynomial.
pub fn sin(x: f64) -> f64 {
    let r = x - TAU * (x / TAU).round();
    let r2 = r * r;
    let mut term = r;
    let mut sum = r;
    for k in 1..=12 {
        let k = k as f64;
        term = -term * r2 / ((2.0 * k) * (2.0 * k + 1.0));
        sum += term;
    }
    sum
}

pub fn cos(x: f64) -> f64 {
    sin(x + PI / 2.0)
}

/// A binary raster, one `u64` per row.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Raster {
    rows: [u64; CANVAS],
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Raster({} px)", self.count())
    }
}

impl Default for Raster {
    fn default() -> Self {
        Raster { rows: [0; CANVAS] }
    }
}

impl Raster {
    pub fn get(&self, x: usize, y: usize) -> bool {
        x < CANVAS && y < CANVAS && self.rows[y] >> x & 1 == 1
    }

    pub fn set(&mut self, x: i64, y: i64) {
        if (0..CANVAS as i64).contains(&x) && (0..CANVAS as i64).contains(&y) {
            self.rows[y as usize] |= 1 << x;
        }
    }

    pub fn count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_blank(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    /// Integer Bresenham line, inclusive of both endpoints.
    pub fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64)) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    /// Run-length encoding: alternating run lengths over the row-major bits, starting with unset.
    pub fn to_rle(&self) -> String {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0usize;
        for y in 0..CANVAS {
            for x in 0..CANVAS {
                if self.get(x, y) == current {
                    len += 1;
                } else {
                    runs.push(len.to_string());
                    current = !current;
                    len = 1;
                }
            }
        }
        runs.push(len.to_string());
        runs.join(",")
    }

    pub fn from_rle(text: &str) -> Result<Raster, Error> {
        let bad = || Error::Data(format!("bad raster encoding `{text}`"));
        let mut r = Raster::default();
        let mut pos = 0usize;
        let mut on = false;
        for run in text.split(',') {
            let n: usize = run.parse().map_err(|_| bad())?;
            if on {
                for p in pos..pos + n {
                    if p >= CANVAS * CANVAS {
                        return Err(bad());
                    }
                    r.set((p % CANVAS) as i64, (p / CANVAS) as i64);
                }
            }
            pos += n;
            on = !on;
        }
        if pos != CANVAS * CANVAS {
            return Err(bad());
        }
        Ok(r)
    }

    /// Number of 8-connected components of set pixels.
    pub fn components(&self) -> usize {
        let mut seen = [0u64; CANVAS];
        let mut count = 0;
        for y0 in 0..CANVAS {
            for x0 in 0..CANVAS {
                if !self.get(x0, y0) || seen[y0] >> x0 & 1 == 1 {
                    continue;
                }
                count += 1;
                let mut stack = vec![(x0, y0)];
                seen[y0] |= 1 << x0;
                while let Some((x, y)) = stack.pop() {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            if nx < 0 || ny < 0 {
                                continue;
                            }
                            let (nx, ny) = (nx as usize, ny as usize);
                            if self.get(nx, ny) && seen[ny] >> nx & 1 == 0 {
                                seen[ny] |= 1 << nx;
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
            }
        }
        count
    }
}

/// Turtle state: position in units relative to the canvas centre, heading in `[0, 2π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Turtle {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub pen_down: bool,
    /// Pixel endpoints of every segment drawn so far.
    pub segments: Arc<Vec<[i64; 4]>>,
}

fn to_px(x: f64, y: f64) -> (i64, i64) {
    let c = (CANVAS / 2) as f64;
    ((c + x * UNIT_PX).round() as i64, (c - y * UNIT_PX).round() as i64)
}

impl Turtle {
    pub fn start() -> Turtle {
        Turtle {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            pen_down: true,
            segments: Arc::new(Vec::new()),
        }
    }

    fn advance(&self, distance: f64, angle: f64) -> Turtle {
        let nx = self.x + distance * cos(self.heading);
        let ny = self.y + distance * sin(self.heading);
        let mut segments = self.segments.clone();
        if self.pen_down {
            let (a, b) = to_px(self.x, self.y);
            let (c, d) = to_px(nx, ny);
            Arc::make_mut(&mut segments).push([a, b, c, d]);
        }
        Turtle {
            x: nx,
            y: ny,
            heading: (self.heading + angle).rem_euclid(TAU),
            pen_down: self.pen_down,
            segments,
        }
    }

    fn same_pose(&self, other: &Turtle) -> bool {
        let dh = (self.heading - other.heading).rem_euclid(TAU);
        (self.x - other.x).abs() < CLOSE_TOLERANCE
            && (self.y - other.y).abs() < CLOSE_TOLERANCE
            && (dh < CLOSE_TOLERANCE || TAU - dh < CLOSE_TOLERANCE)
    }

    pub fn render(&self) -> Raster {
        let mut r = Raster::default();
        for s in self.segments.iter() {
            r.line((s[0], s[1]), (s[2], s[3]));
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GValue {
    Int(i64),
    Distance(f64),
    Angle(f64),
    Turtle(Arc<Turtle>),
    Raster(Arc<Raster>),
}

impl GValue {
    pub fn raster(&self) -> Option<Raster> {
        match self {
            GValue::Turtle(t) => Some(t.render()),
            GValue::Raster(r) => Some(r.as_ref().clone()),
            _ => None,
        }
    }
}

/// The turtle-graphics executor and task generator.
#[derive(Clone, Debug, Default)]
pub struct Graphics;

fn int<'a>(v: &Value<'a, GValue>) -> Result<i64, EvalError> {
    match v.data()? {
        GValue::Int(n) => Ok(*n),
        _ => Err(EvalError::runtime("expected an integer")),
    }
}

fn real<'a>(v: &Value<'a, GValue>) -> Result<f64, EvalError> {
    match v.data()? {
        GValue::Distance(x) | GValue::Angle(x) => Ok(*x),
        _ => Err(EvalError::runtime("expected a distance or angle")),
    }
}

fn turtle<'a>(v: Value<'a, GValue>) -> Result<Arc<Turtle>, EvalError> {
    match v.into_data()? {
        GValue::Turtle(t) => Ok(t),
        _ => Err(EvalError::runtime("expected a turtle")),
    }
}

fn finite(n: i64) -> Result<i64, EvalError> {
    if n == INF {
        Err(EvalError::runtime("∞ used as a number"))
    } else {
        Ok(n)
    }
}

impl Executor for Graphics {
    type Data = GValue;

    fn arity(&self, name: &str) -> Option<usize> {
        Some(match name {
            "move_pen" | "for" => 3,
            "pen_up" | "get_set" | "*" | "/" | "+" | "-" => 2,
            "unit_line" | "2π" | "ε" | "∞" => 0,
            n if n.len() == 1 && matches!(n.as_bytes()[0], b'1'..=b'9') => 0,
            _ => return None,
        })
    }

    fn call<'a>(
        &self,
        name: &str,
        args: Vec<Value<'a, GValue>>,
        m: &mut Machine<'a, '_, Self>,
    ) -> Result<Value<'a, GValue>, EvalError> {
        let out = match name {
            "move_pen" => {
                let (d, a) = (real(&args[0])?, real(&args[1])?);
                let t = turtle(args[2].clone())?;
                GValue::Turtle(Arc::new(t.advance(d, a)))
            }
            "pen_up" => {
                let mut it = args.into_iter();
                let f = it.next().unwrap();
                let t = turtle(it.next().unwrap())?;
                let mut lifted = t.as_ref().clone();
                lifted.pen_down = false;
                let r = turtle(m.apply(f, Value::Data(GValue::Turtle(Arc::new(lifted))))?)?;
                let mut r = r.as_ref().clone();
                r.pen_down = t.pen_down;
                GValue::Turtle(Arc::new(r))
            }
            "get_set" => {
                let mut it = args.into_iter();
                let f = it.next().unwrap();
                let t = turtle(it.next().unwrap())?;
                let r = turtle(m.apply(f, Value::Data(GValue::Turtle(t.clone())))?)?;
                GValue::Turtle(Arc::new(Turtle {
                    x: t.x,
                    y: t.y,
                    heading: t.heading,
                    pen_down: t.pen_down,
                    segments: r.segments.clone(),
                }))
            }
            "for" => {
                let n = int(&args[0])?;
                let mut it = args.into_iter().skip(1);
                let body = it.next().unwrap();
                let start = turtle(it.next().unwrap())?;
                let (count, closes) = if n == INF {
                    (INFINITE_LOOP_CAP, true)
                } else if n > MAX_LOOP {
                    return Err(EvalError::runtime("loop count too large"));
                } else {
                    (n.max(0), false)
                };
                let mut state = start.clone();
                for _ in 0..count {
                    m.tick()?;
                    state = turtle(m.apply(body.clone(), Value::Data(GValue::Turtle(state)))?)?;
                    if closes && state.same_pose(&start) {
                        break;
                    }
                }
                GValue::Turtle(state)
            }
            "*" => GValue::Distance(real(&args[0])? * finite(int(&args[1])?)? as f64),
            "/" => {
                let n = finite(int(&args[1])?)?;
                if n == 0 {
                    return Err(EvalError::runtime("division by zero"));
                }
                GValue::Angle(real(&args[0])? / n as f64)
            }
            "+" => {
                let (a, b) = (int(&args[0])?, int(&args[1])?);
                GValue::Int(if a == INF || b == INF { INF } else { a + b })
            }
            "-" => GValue::Angle(real(&args[0])? - real(&args[1])?),
            "unit_line" => GValue::Distance(1.0),
            "ε" => GValue::Distance(EPSILON_DISTANCE),
            "2π" => GValue::Angle(TAU),
            "∞" => GValue::Int(INF),
            n => match n.parse::<i64>() {
                Ok(k) if (1..=9).contains(&k) => GValue::Int(k),
                _ => return Err(EvalError::UnknownPrimitive(n.to_string())),
            },
        };
        Ok(Value::Data(out))
    }

    fn output_equal(&self, produced: &GValue, expected: &GValue) -> bool {
        match (produced.raster(), expected.raster()) {
            (Some(a), Some(b)) => a == b,
            _ => produced == expected,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Size {
    Small,
    Medium,
    Big,
}

impl Size {
    fn sample(rng: &mut ChaCha8Rng) -> Size {
        [Size::Small, Size::Medium, Size::Big][rng.gen_range(0..3)]
    }

    fn scale(self) -> i64 {
        match self {
            Size::Small => 1,
            Size::Medium => 2,
            Size::Big => 3,
        }
    }

    fn word(self) -> &'static str {
        match self {
            Size::Small => "small",
            Size::Medium => "medium",
            Size::Big => "big",
        }
    }

    fn line_word(self) -> &'static str {
        match self {
            Size::Small => "short",
            Size::Medium => "medium",
            Size::Big => "long",
        }
    }
}

/// Shapes that the compositional templates combine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Simple {
    Line(Size),
    Polygon(i64, Size),
    Circle(Size),
    Semicircle(Size),
}

fn distance(units: i64) -> String {
    if units == 1 {
        "unit_line".into()
    } else {
        format!("(* unit_line {units})")
    }
}

fn count(n: i64) -> String {
    if n <= 9 {
        n.to_string()
    } else {
        format!("(+ 9 {})", n - 9)
    }
}

impl Simple {
    fn sample(rng: &mut ChaCha8Rng, size: Size) -> Simple {
        match rng.gen_range(0..6) {
            0 => Simple::Line(size),
            1 => Simple::Circle(size),
            2 => Simple::Semicircle(size),
            _ => Simple::Polygon(rng.gen_range(3..=8), size),
        }
    }

    /// Program text drawing this shape starting from the turtle expression `input`.
    fn draw(self, input: &str) -> String {
        let arc = |s: Size| format!("(move_pen (* ε {}) (/ 2π (+ 9 9)) $0)", 2 * s.scale());
        match self {
            Simple::Line(s) => format!("(move_pen {} 2π {input})", distance(2 * s.scale())),
            Simple::Polygon(n, s) => format!(
                "(for {n} (lambda (move_pen {} (/ 2π {n}) $0)) {input})",
                distance(s.scale())
            ),
            Simple::Circle(s) => format!("(for ∞ (lambda {}) {input})", arc(s)),
            Simple::Semicircle(s) => format!("(for 9 (lambda {}) {input})", arc(s)),
        }
    }

    fn noun(self) -> Vec<&'static str> {
        match self {
            Simple::Line(_) => vec!["line"],
            Simple::Polygon(3, _) => vec!["triangle"],
            Simple::Polygon(4, _) => vec!["square"],
            Simple::Polygon(n, _) => vec![number_word(n), "gon"],
            Simple::Circle(_) => vec!["circle"],
            Simple::Semicircle(_) => vec!["semicircle"],
        }
    }

    fn adjective(self) -> &'static str {
        match self {
            Simple::Line(s) => s.line_word(),
            Simple::Polygon(_, s) | Simple::Circle(s) | Simple::Semicircle(s) => s.word(),
        }
    }

    fn phrase(self) -> String {
        format!("a {} {}", self.adjective(), self.noun().join(" "))
    }

    fn with_size(self, size: Size) -> Simple {
        match self {
            Simple::Line(_) => Simple::Line(size),
            Simple::Polygon(n, _) => Simple::Polygon(n, size),
            Simple::Circle(_) => Simple::Circle(size),
            Simple::Semicircle(_) => Simple::Semicircle(size),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Simple(Simple),
    Spiral(i64),
    Staircase(i64),
    Zigzag(i64),
    Star(i64),
    Nested(Simple),
    NextTo(Simple, Simple),
    SeparatedBy(Simple, Simple),
    ConnectedBy(Simple, Simple),
    InARow(i64, Simple),
    Snowflake(i64, Simple),
}

impl Shape {
    fn sample(rng: &mut ChaCha8Rng) -> Shape {
        let roll = rng.gen_range(0..20);
        let size = Size::sample(rng);
        let small = |rng: &mut ChaCha8Rng| Simple::sample(rng, Size::Small);
        match roll {
            0..=9 => Shape::Simple(Simple::sample(rng, size)),
            10 => Shape::Spiral(rng.gen_range(3..=6)),
            11 => Shape::Staircase(rng.gen_range(3..=6)),
            12 => Shape::Zigzag(rng.gen_range(3..=6)),
            13 => Shape::Star([5, 7, 9][rng.gen_range(0..3)]),
            14 => Shape::Nested(Simple::Polygon(rng.gen_range(3..=6), Size::Small)),
            15 => Shape::NextTo(small(rng), small(rng)),
            16 => Shape::SeparatedBy(small(rng), small(rng)),
            17 => Shape::ConnectedBy(small(rng), small(rng)),
            18 => Shape::InARow(rng.gen_range(2..=4), small(rng)),
            _ => Shape::Snowflake(rng.gen_range(5..=7), small(rng)),
        }
    }

    fn body(self) -> String {
        let hop = |units: i64, pen: bool, input: &str| {
            let mv = format!("(move_pen {} 2π {{}})", distance(units));
            if pen {
                mv.replace("{}", input)
            } else {
                format!("(pen_up (lambda {}) {input})", mv.replace("{}", "$0"))
            }
        };
        match self {
            Shape::Simple(s) => s.draw("$0"),
            Shape::Spiral(n) => (1..=n).fold("$0".to_string(), |acc, k| {
                format!("(move_pen {} (/ 2π 4) {acc})", distance(k))
            }),
            Shape::Staircase(n) => format!(
                "(for {n} (lambda (move_pen unit_line (- 2π (/ 2π 4)) (move_pen unit_line (/ 2π 4) $0))) $0)"
            ),
            Shape::Zigzag(n) => format!(
                "(for {n} (lambda (move_pen unit_line (- 2π (/ 2π 3)) (move_pen unit_line (/ 2π 3) $0))) $0)"
            ),
            Shape::Star(n) => format!(
                "(for ∞ (lambda (move_pen (* unit_line 3) (- (/ 2π 2) (/ 2π (+ {n} {n}))) $0)) $0)"
            ),
            Shape::Nested(s) => {
                let inner = format!("(get_set (lambda {}) $0)", s.draw("$0"));
                s.with_size(Size::Big).draw(&inner)
            }
            Shape::NextTo(a, b) => b.draw(&hop(4, false, &a.draw("$0"))),
            Shape::SeparatedBy(a, b) => b.draw(&hop(7, false, &a.draw("$0"))),
            Shape::ConnectedBy(a, b) => b.draw(&hop(3, true, &a.draw("$0"))),
            Shape::InARow(n, a) => format!(
                "(for {n} (lambda {}) $0)",
                hop(4, false, &a.draw("$0"))
            ),
            Shape::Snowflake(n, a) => format!(
                "(for {} (lambda (pen_up (lambda (move_pen ε (/ 2π {n}) $0)) (get_set (lambda {}) $0))) $0)",
                count(n),
                a.draw(&format!("(move_pen {} 2π $0)", distance(2)))
            ),
        }
    }

    fn description(self) -> String {
        match self {
            Shape::Simple(s) => s.phrase(),
            Shape::Spiral(n) => format!("a spiral with {} turn s", number_word(n)),
            Shape::Staircase(n) => format!("a staircase with {} step s", number_word(n)),
            Shape::Zigzag(n) => format!("a zigzag with {} step s", number_word(n)),
            Shape::Star(n) => format!("a {} pointed star", number_word(n)),
            Shape::Nested(s) => format!(
                "a {} {} nested in a big {}",
                s.adjective(),
                s.noun().join(" "),
                s.noun().join(" ")
            ),
            Shape::NextTo(a, b) => format!("{} next to {}", a.phrase(), b.phrase()),
            Shape::SeparatedBy(a, b) => {
                format!("{} separated by a big space from {}", a.phrase(), b.phrase())
            }
            Shape::ConnectedBy(a, b) => {
                format!("{} connected by a short line to {}", a.phrase(), b.phrase())
            }
            Shape::InARow(n, a) => format!(
                "{} {} {} s in a row",
                number_word(n),
                a.adjective(),
                a.noun().join(" ")
            ),
            Shape::Snowflake(n, a) => format!(
                "a {} sided snowflake with a short line and {} as arm s",
                number_word(n),
                a.phrase()
            ),
        }
    }
}

/// Renders a closed program of type `turtle → turtle` from the starting state.
pub fn render(program: &Term, inventions: &Inventions) -> Result<Raster, EvalError> {
    let out = evaluate(
        program,
        &[GValue::Turtle(Arc::new(Turtle::start()))],
        &Graphics,
        inventions,
        Graphics.eval_limit(),
    )?;
    out.raster().ok_or(EvalError::NotData)
}

impl Domain for Graphics {
    fn name(&self) -> &'static str {
        "graphics"
    }

    fn primitives(&self) -> Vec<(String, PolyType)> {
        let t = |s: &str| PolyType::parse(s).expect("valid primitive type");
        let mut prims: Vec<(String, PolyType)> = [
            ("move_pen", "distance → angle → turtle → turtle"),
            ("pen_up", "(turtle → turtle) → turtle → turtle"),
            ("for", "int → (turtle → turtle) → turtle → turtle"),
            ("get_set", "(turtle → turtle) → turtle → turtle"),
            ("+", "int → int → int"),
            ("-", "angle → angle → angle"),
            ("*", "distance → int → distance"),
            ("/", "angle → int → angle"),
            ("unit_line", "distance"),
            ("ε", "distance"),
            ("2π", "angle"),
            ("∞", "int"),
        ]
        .into_iter()
        .map(|(n, ty)| (n.to_string(), t(ty)))
        .collect();
        prims.extend((1..=9).map(|k| (k.to_string(), t("int"))));
        prims
    }

    fn request(&self) -> PolyType {
        PolyType::parse("turtle → turtle").unwrap()
    }

    fn feature_len(&self) -> usize {
        22
    }

    fn task_features(&self, task: &Task<GValue>) -> Vec<f64> {
        let mut f = vec![0.0; self.feature_len()];
        let rasters: Vec<Raster> = task.examples.iter().filter_map(|(_, o)| o.raster()).collect();
        let n = rasters.len().max(1) as f64;
        for r in &rasters {
            if r.is_blank() {
                continue;
            }
            let (mut x0, mut y0, mut x1, mut y1) = (CANVAS, CANVAS, 0, 0);
            let mut blocks = [0.0; 16];
            for y in 0..CANVAS {
                for x in 0..CANVAS {
                    if r.get(x, y) {
                        x0 = x0.min(x);
                        y0 = y0.min(y);
                        x1 = x1.max(x);
                        y1 = y1.max(y);
                        blocks[(y / 16) * 4 + x / 16] += 1.0;
                    }
                }
            }
            f[0] += r.count() as f64 / 100.0 / n;
            for (k, v) in [x0, y0, x1, y1].into_iter().enumerate() {
                f[1 + k] += v as f64 / CANVAS as f64 / n;
            }
            for (k, b) in blocks.iter().enumerate() {
                f[5 + k] += b / 32.0 / n;
            }
            f[21] += r.components() as f64 / 4.0 / n;
        }
        f
    }

    fn sample_example_count(&self) -> usize {
        1
    }

    fn sample_inputs(&self, _rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<GValue>> {
        (0..n)
            .map(|_| vec![GValue::Turtle(Arc::new(Turtle::start()))])
            .collect()
    }

    fn accept_sample(&self, examples: &[(Vec<GValue>, GValue)]) -> bool {
        examples
            .iter()
            .all(|(_, o)| o.raster().is_some_and(|r| r.count() >= 4))
    }

    fn generate_tasks(&self, n: usize, seed: u64, split: Split) -> Vec<GeneratedTask<GValue>> {
        let tag = match split {
            Split::Train => "train",
            Split::Test => "test",
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("graphics-{tag}"), 0));
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let shape = Shape::sample(&mut rng);
            let solution =
                Term::parse(&format!("(lambda {})", shape.body())).expect("template programs parse");
            let raster = render(&solution, &Inventions::new()).expect("template programs render");
            let examples = vec![(
                vec![GValue::Turtle(Arc::new(Turtle::start()))],
                GValue::Raster(Arc::new(raster)),
            )];
            if !self.accept_sample(&examples) {
                continue;
            }
            out.push(GeneratedTask {
                task: Task {
                    id: format!("graphics-{tag}-{:04}", out.len()),
                    request: self.request(),
                    examples,
                    description: Some(tokenize(&shape.description())),
                    split,
                },
                solution,
            });
        }
        out
    }

    fn encode_value(&self, value: &GValue) -> serde_json::Value {
        use serde_json::json;
        match value {
            GValue::Int(n) if *n == INF => json!({ "int": "∞" }),
            GValue::Int(n) => json!({ "int": n }),
            GValue::Distance(d) => json!({ "distance": d }),
            GValue::Angle(a) => json!({ "angle": a }),
            GValue::Turtle(t) => {
                if **t == Turtle::start() {
                    json!("start")
                } else {
                    json!({ "raster": t.render().to_rle() })
                }
            }
            GValue::Raster(r) => json!({ "raster": r.to_rle() }),
        }
    }

    fn decode_value(&self, value: &serde_json::Value) -> Result<GValue, Error> {
        let bad = || Error::Data(format!("not a graphics value: {value}"));
        if value.as_str() == Some("start") {
            return Ok(GValue::Turtle(Arc::new(Turtle::start())));
        }
        let obj = value.as_object().ok_or_else(bad)?;
        let (k, v) = obj.iter().next().ok_or_else(bad)?;
        Ok(match k.as_str() {
            "raster" => GValue::Raster(Arc::new(Raster::from_rle(v.as_str().ok_or_else(bad)?)?)),
            "int" if v.as_str() == Some("∞") => GValue::Int(INF),
            "int" => GValue::Int(v.as_i64().ok_or_else(bad)?),
            "distance" => GValue::Distance(v.as_f64().ok_or_else(bad)?),
            "angle" => GValue::Angle(v.as_f64().ok_or_else(bad)?),
            _ => return Err(bad()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::EvalLimit;
    use crate::grammar::Grammar;
    use crate::task::check_task;

    fn run(src: &str) -> Result<Arc<Turtle>, EvalError> {
        let out = evaluate(
            &Term::parse(src).unwrap(),
            &[GValue::Turtle(Arc::new(Turtle::start()))],
            &Graphics,
            &Inventions::new(),
            Graphics.eval_limit(),
        )?;
        match out {
            GValue::Turtle(t) => Ok(t),
            _ => panic!("not a turtle"),
        }
    }

    #[test]
    fn trig_is_accurate() {
        for k in -40..40 {
            let x = k as f64 * 0.37;
            assert!((sin(x) - x.sin()).abs() < 1e-12, "{x}");
            assert!((cos(x) - x.cos()).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn horizontal_line() {
        let t = run("(lambda (move_pen (* unit_line 2) 2π $0))").unwrap();
        let r = t.render();
        assert_eq!(r.count(), 9);
        for x in 32..=40 {
            assert!(r.get(x, 32));
        }
    }

    #[test]
    fn hexagon_closes() {
        let t = run("(for ∞ (move_pen (* unit_line 3) (/ 2π 6)))").unwrap();
        assert_eq!(t.segments.len(), 6);
        assert!(t.same_pose(&Turtle::start()));
        assert_eq!(t.segments[0][..2], t.segments[5][2..]);
    }

    #[test]
    fn pen_up_moves_without_drawing() {
        let t = run("(lambda (pen_up (lambda (move_pen unit_line 2π $0)) $0))").unwrap();
        assert!(t.render().is_blank());
        assert!((t.x - 1.0).abs() < 1e-12);
        assert!(t.pen_down);
    }

    #[test]
    fn get_set_restores_pose() {
        let t = run("(lambda (get_set (lambda (move_pen unit_line (/ 2π 4) $0)) $0))").unwrap();
        assert_eq!(t.segments.len(), 1);
        assert!(t.same_pose(&Turtle::start()));
    }

    #[test]
    fn runaway_loops_hit_the_step_limit() {
        let inner = "(pen_up (lambda (move_pen ε 2π $0)) $0)";
        let src = (0..4).fold(inner.to_string(), |acc, _| format!("(for ∞ (lambda {acc}) $0)"));
        let r = evaluate(
            &Term::parse(&format!("(lambda {src})")).unwrap(),
            &[GValue::Turtle(Arc::new(Turtle::start()))],
            &Graphics,
            &Inventions::new(),
            EvalLimit::default(),
        );
        assert!(matches!(r, Err(EvalError::StepLimit(_))));
    }

    #[test]
    fn raster_encoding_round_trips() {
        let r = run("(for ∞ (move_pen (* unit_line 3) (/ 2π 6)))").unwrap().render();
        assert_eq!(Raster::from_rle(&r.to_rle()).unwrap(), r);
        assert_eq!(Raster::from_rle(&Raster::default().to_rle()).unwrap(), Raster::default());
        assert!(Raster::from_rle("1,2").is_err());
    }

    #[test]
    fn generated_tasks_are_self_consistent() {
        let g = Grammar::new(Graphics.primitives());
        let tasks = Graphics.generate_tasks(60, 3, Split::Train);
        for t in &tasks {
            assert!(check_task(&t.solution, &t.task, &Graphics, &Inventions::new(), Graphics.eval_limit()));
            assert!(g.log_prior(&t.solution, &t.task.request).is_ok(), "{}", t.solution);
        }
        assert_eq!(tasks, Graphics.generate_tasks(60, 3, Split::Train));
        let snow = Shape::Snowflake(7, Simple::Polygon(3, Size::Small)).description();
        assert!(snow.contains("seven") && snow.contains("snowflake"));
    }

    #[test]
    fn features_of_blank_canvas_are_zero() {
        let task = Task {
            id: "blank".into(),
            request: Graphics.request(),
            examples: vec![(vec![], GValue::Raster(Arc::new(Raster::default())))],
            description: None,
            split: Split::Train,
        };
        assert!(Graphics.task_features(&task).iter().all(|&v| v == 0.0));
    }
}
