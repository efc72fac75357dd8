//! Brute-force LP oracle: enumerate every basic point of the system boxed at
//! |x_j| <= M, keep the feasible ones, and compare optima at two box sizes.

use chainfix::lp::{LpModel, Sense};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth {
    Infeasible,
    Unbounded,
    Optimal(f64),
}

/// One half-space or hyperplane `a . x (<=|=) b` in dense form.
struct Row {
    a: Vec<f64>,
    b: f64,
    eq: bool,
}

fn dense_rows(m: &LpModel<f64>, big: f64) -> Vec<Row> {
    let n = m.n_variables();
    let names: Vec<&str> = m.variables().map(|v| v.name.as_str()).collect();
    let mut rows = Vec::new();
    for c in m.constraints() {
        let mut a = vec![0.0; n];
        for (v, &coef) in &c.coeffs {
            a[names.iter().position(|x| x == v).unwrap()] += coef;
        }
        match c.sense {
            Sense::Le => rows.push(Row { a, b: c.rhs, eq: false }),
            Sense::Ge => rows.push(Row {
                a: a.iter().map(|x| -x).collect(),
                b: -c.rhs,
                eq: false,
            }),
            Sense::Eq => rows.push(Row { a, b: c.rhs, eq: true }),
        }
    }
    for (j, v) in m.variables().enumerate() {
        let unit = |s: f64| {
            let mut a = vec![0.0; n];
            a[j] = s;
            a
        };
        let lo = if v.lower.is_finite() { v.lower.max(-big) } else { -big };
        let hi = if v.upper.is_finite() { v.upper.min(big) } else { big };
        rows.push(Row { a: unit(-1.0), b: -lo, eq: false });
        rows.push(Row { a: unit(1.0), b: hi, eq: false });
    }
    rows
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &k| a[i][col].abs().total_cmp(&a[k][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn best_vertex(m: &LpModel<f64>, big: f64) -> Option<f64> {
    let n = m.n_variables();
    let rows = dense_rows(m, big);
    let cost: Vec<f64> = m.variables().map(|v| v.objective).collect();
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let a = pick.iter().map(|&i| rows[i].a.clone()).collect();
        let b = pick.iter().map(|&i| rows[i].b).collect();
        if let Some(x) = solve_square(a, b) {
            let ok = rows.iter().all(|r| {
                let act: f64 = r.a.iter().zip(&x).map(|(p, q)| p * q).sum();
                let tol = 1e-7 * (1.0 + r.b.abs());
                if r.eq {
                    (act - r.b).abs() <= tol
                } else {
                    act <= r.b + tol
                }
            });
            if ok {
                let z: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(z, |b: f64| b.min(z)));
            }
        }
        // next n-combination of rows in lexicographic order
        let total = rows.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - n + i {
                break;
            }
        }
        pick[i] += 1;
        for k in i + 1..n {
            pick[k] = pick[k - 1] + 1;
        }
    }
}

/// Box sizes well above any vertex of the small-integer systems generated below.
pub const BOX_SMALL: f64 = 1e6;
pub const BOX_LARGE: f64 = 1e7;

pub fn brute_force(m: &LpModel<f64>) -> Truth {
    let Some(small) = best_vertex(m, BOX_SMALL) else {
        return Truth::Infeasible;
    };
    let large = best_vertex(m, BOX_LARGE).expect("larger box keeps the feasible point");
    if large < small - 1e-6 * (1.0 + small.abs()) {
        Truth::Unbounded
    } else {
        Truth::Optimal(small)
    }
}

/// Dense LP with at most 6 variables and 8 rows, small integer data.
pub fn random_lp(rng: &mut impl Rng) -> LpModel<f64> {
    let n = rng.gen_range(1..=6);
    let rows = rng.gen_range(1..=8);
    let mut m = LpModel::new();
    for j in 0..n {
        let (lo, hi) = match rng.gen_range(0..4) {
            0 => (0.0, f64::INFINITY),
            1 => (f64::NEG_INFINITY, f64::INFINITY),
            2 => {
                let lo = rng.gen_range(-5..=2) as f64;
                (lo, lo + rng.gen_range(0..=6) as f64)
            }
            _ => (f64::NEG_INFINITY, rng.gen_range(-3..=8) as f64),
        };
        m.add_variable(format!("x{j}"), lo, hi, rng.gen_range(-4..=4) as f64)
            .unwrap();
    }
    for i in 0..rows {
        let mut terms: Vec<(String, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.75) {
                terms.push((format!("x{j}"), rng.gen_range(-3..=3) as f64));
            }
        }
        let sense = match rng.gen_range(0..5) {
            0 | 1 => Sense::Le,
            2 | 3 => Sense::Ge,
            _ => Sense::Eq,
        };
        m.add_constraint(format!("r{i}"), terms, sense, rng.gen_range(-10..=10) as f64)
            .unwrap();
    }
    m
}
