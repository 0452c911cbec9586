//! Deterministic text output: CSV trajectories and point clouds, OBJ grid
//! meshes, and human-facing number formatting.
//!
//! CSV floats use 17 significant digits so every value round-trips.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::model::{hamiltonian, GroupPoint};
use crate::sphere::SphereGrid;

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,px,py,pz,H,speed_err,adm_err";

/// Round-trippable scientific notation, independent of locale.
pub fn fmt_csv(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

/// `%.15g`: 15 significant digits, trailing zeros dropped.
pub fn fmt_human(v: f64) -> String {
    if !v.is_finite() {
        return fmt_csv(v);
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{v:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_csv(v));
    }
    out.push('\n');
}

fn trajectory_row(tr: &Trajectory, i: usize) -> [f64; 10] {
    let s = &tr.states[i];
    let r = &tr.residuals[i];
    [
        tr.times[i],
        s.point.x,
        s.point.y,
        s.point.z,
        s.px,
        s.py,
        s.pz,
        hamiltonian(s),
        r.speed_err,
        r.adm_err,
    ]
}

pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::with_capacity(256 * (tr.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for i in 0..tr.len() {
        push_row(&mut out, trajectory_row(tr, i));
    }
    out
}

/// Closed-form columns, the oracle's state columns suffixed `_ode`, and the
/// componentwise maximum deviation between the two.
pub fn comparison_csv(closed: &Trajectory, ode: &Trajectory) -> Result<String> {
    if closed.times != ode.times {
        return Err(Error::domain("trajectories are sampled at different times"));
    }
    let mut out = String::with_capacity(400 * (closed.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push_str(",x_ode,y_ode,z_ode,px_ode,py_ode,pz_ode,deviation\n");
    for i in 0..closed.len() {
        let o = &ode.states[i];
        let row = trajectory_row(closed, i).into_iter().chain([
            o.point.x,
            o.point.y,
            o.point.z,
            o.px,
            o.py,
            o.pz,
            closed.states[i].max_abs_diff(o),
        ]);
        push_row(&mut out, row);
    }
    Ok(out)
}

fn vertical(p: &GroupPoint, exp_z: bool) -> f64 {
    if exp_z {
        p.z.exp()
    } else {
        p.z
    }
}

/// `theta,mu,x,y,z` (or `exp_z`), one row per grid node in row-major order.
pub fn sphere_csv(g: &SphereGrid, exp_z: bool) -> String {
    let mut out = String::with_capacity(128 * (g.points.len() + 1));
    out.push_str(if exp_z {
        "theta,mu,x,y,exp_z\n"
    } else {
        "theta,mu,x,y,z\n"
    });
    for p in &g.points {
        push_row(
            &mut out,
            [p.theta, p.mu, p.point.x, p.point.y, vertical(&p.point, exp_z)],
        );
    }
    out
}

/// Quad mesh over the grid: vertex `i * n_mu + j + 1` is node `(i, j)`.
pub fn sphere_obj(g: &SphereGrid, exp_z: bool) -> String {
    let (n, m) = (g.spec.n_theta, g.spec.n_mu);
    let mut out = String::with_capacity(64 * n * m);
    let _ = writeln!(
        out,
        "# geodesic sphere r = {}, {n}x{m} grid",
        fmt_csv(g.spec.radius)
    );
    for p in &g.points {
        let _ = writeln!(
            out,
            "v {} {} {}",
            fmt_csv(p.point.x),
            fmt_csv(p.point.y),
            fmt_csv(vertical(&p.point, exp_z))
        );
    }
    for i in 0..n.saturating_sub(1) {
        for j in 0..m.saturating_sub(1) {
            let v = |i: usize, j: usize| i * m + j + 1;
            let _ = writeln!(
                out,
                "f {} {} {} {}",
                v(i, j),
                v(i + 1, j),
                v(i + 1, j + 1),
                v(i, j + 1)
            );
        }
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
