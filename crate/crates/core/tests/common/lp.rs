use occlp::lpcore::StandardFormLP;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Solves the square system `m x = rhs` by Gaussian elimination; `None` if singular.
pub fn solve_square(m: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = m.iter().zip(rhs).map(|(r, &b)| {
        let mut r = r.clone();
        r.push(b);
        r
    }).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

pub fn rank(m: &[Vec<f64>]) -> usize {
    let mut a = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let piv = (r..rows).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[piv][c].abs() < 1e-10 {
            continue;
        }
        a.swap(r, piv);
        for i in r + 1..rows {
            let f = a[i][c] / a[r][c];
            for k in c..cols {
                a[i][k] -= f * a[r][k];
            }
        }
        r += 1;
    }
    r
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// Minimum of `cᵀx` over all basic feasible solutions (full-row-rank `A`).
pub fn bfs_minimum(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let m = b.len();
    let n = c.len();
    let mut best: Option<f64> = None;
    for cols in subsets(n, m) {
        let bm: Vec<Vec<f64>> = (0..m).map(|i| cols.iter().map(|&j| a[i][j]).collect()).collect();
        if let Some(xb) = solve_square(&bm, b) {
            if xb.iter().all(|&v| v >= -1e-9) {
                let obj: f64 = cols.iter().zip(&xb).map(|(&j, v)| c[j] * v).sum();
                best = Some(best.map_or(obj, |o: f64| o.min(obj)));
            }
        }
    }
    best
}

/// Random feasible, bounded LP with full row rank: `b = A x₀`, `c = Aᵀy₀ + s`, `s ≥ 0`.
pub fn random_lp(rng: &mut ChaCha8Rng) -> StandardFormLP {
    loop {
        let m = rng.gen_range(1..=5);
        let n = rng.gen_range(m..=8);
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect())
            .collect();
        if rank(&a) < m {
            continue;
        }
        let x0: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(0..=4) as f64 })
            .collect();
        let b: Vec<f64> = a.iter().map(|r| r.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
        let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-3..=3) as f64).collect();
        let c: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| a[i][j] * y0[i]).sum::<f64>() + rng.gen_range(0..=4) as f64)
            .collect();
        return StandardFormLP::new(c, a, b).unwrap();
    }
}
