use std::fmt::Write;

use super::{MarkedPoint, PointConfiguration};
use crate::error::{GeoError, Result};
use crate::geometry::Window;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with columns `id, x1..xd, time, grain_radius, growth_speed` and an
/// optional trailing `xi` column. Absent marks are empty fields.
pub fn write_csv(config: &PointConfiguration, xi: Option<&[f64]>) -> String {
    let d = config.dim();
    let mut out = String::from("id");
    for i in 1..=d {
        write!(out, ",x{i}").unwrap();
    }
    out.push_str(",time,grain_radius,growth_speed");
    if xi.is_some() {
        out.push_str(",xi");
    }
    out.push('\n');
    for (k, p) in config.points.iter().enumerate() {
        write!(out, "{}", p.id).unwrap();
        for c in &p.position[..d] {
            write!(out, ",{c}").unwrap();
        }
        write!(out, ",{},{},{}", opt(p.time), opt(p.grain_radius), opt(p.growth_speed)).unwrap();
        if let Some(xi) = xi {
            write!(out, ",{}", xi[k]).unwrap();
        }
        out.push('\n');
    }
    out
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse().map_err(|_| GeoError::Parse(format!("line {line}: bad number {field:?}")))
}

fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(field, line).map(Some)
    }
}

/// Inverse of [`write_csv`]. Returns the configuration and the `xi` column
/// if present.
pub fn read_csv(text: &str, window: Window) -> Result<(PointConfiguration, Option<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| GeoError::Parse("missing header".into()))?.split(',').collect();
    let d = window.dim;
    let base = 1 + d + 3;
    let has_xi = match header.len() {
        n if n == base => false,
        n if n == base + 1 && header[base] == "xi" => true,
        n => return Err(GeoError::Parse(format!("expected {base} columns for d={d}, got {n}"))),
    };
    let mut points = Vec::new();
    let mut xi = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line_no = lineno + 2;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != header.len() {
            return Err(GeoError::Parse(format!("line {line_no}: expected {} fields", header.len())));
        }
        let id = f[0].trim().parse().map_err(|_| GeoError::Parse(format!("line {line_no}: bad id")))?;
        let mut x = [0.0; 3];
        for i in 0..d {
            x[i] = parse_f64(f[1 + i], line_no)?;
        }
        let mut p = MarkedPoint::new(id, x);
        p.time = parse_opt(f[1 + d], line_no)?;
        p.grain_radius = parse_opt(f[2 + d], line_no)?;
        p.growth_speed = parse_opt(f[3 + d], line_no)?;
        points.push(p);
        if has_xi {
            xi.push(parse_f64(f[base], line_no)?);
        }
    }
    let cfg = PointConfiguration::new(window, points)?;
    Ok((cfg, has_xi.then_some(xi)))
}
