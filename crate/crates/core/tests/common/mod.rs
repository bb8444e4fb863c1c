//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use tr_afem::mesh::Mesh;

/// Exact weighted projection onto `{lo <= y <= hi, Σ w y = volume}` by
/// enumerating every lower/upper/free partition of at most a few cells.
pub fn brute_box_volume(z: &[f64], w: &[f64], lo: f64, hi: f64, volume: f64) -> Option<Vec<f64>> {
    let n = z.len();
    assert!(n <= 8);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let mut state = vec![0u8; n];
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let mut fixed = 0.0;
        let (mut fw, mut fwz) = (0.0, 0.0);
        for i in 0..n {
            match state[i] {
                0 => fixed += w[i] * lo,
                1 => fixed += w[i] * hi,
                _ => {
                    fw += w[i];
                    fwz += w[i] * z[i];
                }
            }
        }
        let mut y = vec![0.0; n];
        if fw == 0.0 {
            if (fixed - volume).abs() > 1e-12 {
                continue;
            }
        } else {
            let mu = (fwz - (volume - fixed)) / fw;
            for i in 0..n {
                if state[i] == 2 {
                    y[i] = z[i] - mu;
                }
            }
        }
        let mut ok = true;
        for i in 0..n {
            match state[i] {
                0 => y[i] = lo,
                1 => y[i] = hi,
                _ => ok &= y[i] >= lo - 1e-14 && y[i] <= hi + 1e-14,
            }
        }
        if !ok {
            continue;
        }
        let obj: f64 = (0..n).map(|i| w[i] * (y[i] - z[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, y));
        }
    }
    best.map(|b| b.1)
}

/// Minimises `(y - z)² / 2r + β|y|` by bisection on the sign of the
/// monotone subdifferential.
pub fn brute_l1(z: f64, r: f64, beta: f64) -> f64 {
    // right derivative at y; the minimiser is where it changes sign
    let d = |y: f64| (y - z) / r + if y >= 0.0 { beta } else { -beta };
    let (mut a, mut b) = (-z.abs() - 1.0, z.abs() + 1.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if d(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Conformity, orientation and area checks computed from the raw cell
/// list. `on_boundary` decides whether a point lies on the domain boundary.
pub fn check_mesh(mesh: &Mesh, area: f64, on_boundary: &dyn Fn([f64; 2]) -> bool) -> Result<(), String> {
    let v = mesh.vertices();
    let mut uses: HashMap<(usize, usize), Vec<bool>> = HashMap::new();
    let mut total = 0.0;
    for (ci, c) in mesh.cells().iter().enumerate() {
        let [a, b, d] = [v[c[0]], v[c[1]], v[c[2]]];
        let sa = 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]));
        if sa <= 0.0 || sa.is_nan() {
            return Err(format!("cell {ci} is not positively oriented"));
        }
        total += sa;
        for i in 0..3 {
            let (p, q) = (c[i], c[(i + 1) % 3]);
            uses.entry((p.min(q), p.max(q))).or_default().push(p < q);
        }
    }
    if (total - area).abs() > 1e-12 {
        return Err(format!("area {total} differs from {area}"));
    }
    for ((p, q), dirs) in &uses {
        match dirs.len() {
            1 => {
                let mid = [0.5 * (v[*p][0] + v[*q][0]), 0.5 * (v[*p][1] + v[*q][1])];
                if !(on_boundary(v[*p]) && on_boundary(v[*q]) && on_boundary(mid)) {
                    return Err(format!("edge ({p}, {q}) is used once inside the domain (hanging node)"));
                }
            }
            2 if dirs[0] != dirs[1] => {}
            2 => return Err(format!("edge ({p}, {q}) is traversed twice in the same direction")),
            n => return Err(format!("edge ({p}, {q}) is used {n} times")),
        }
    }
    Ok(())
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
