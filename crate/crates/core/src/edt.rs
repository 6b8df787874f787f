//! Exact squared Euclidean distance transform.
//!
//! Separable lower-envelope-of-parabolas algorithm (Felzenszwalb &
//! Huttenlocher). All distances are integer squared distances, so results are
//! exact.

const INF: i64 = i64::MAX / 4;

/// Squared distance from every pixel to the nearest `true` seed, or `None`
/// when there are no seeds at all.
pub fn squared_distance_to_seeds(seeds: &[bool], width: usize, height: usize) -> Vec<Option<u64>> {
    assert_eq!(seeds.len(), width * height, "seed mask must cover the grid");
    let mut grid: Vec<i64> = seeds.iter().map(|&s| if s { 0 } else { INF }).collect();

    let mut column = vec![0i64; height];
    let mut out = vec![0i64; height.max(width)];
    for x in 0..width {
        for y in 0..height {
            column[y] = grid[y * width + x];
        }
        lower_envelope(&column, &mut out[..height]);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        let row = &mut grid[y * width..(y + 1) * width];
        lower_envelope(row, &mut out[..width]);
        row.copy_from_slice(&out[..width]);
    }
    grid.into_iter()
        .map(|d| if d >= INF { None } else { Some(d as u64) })
        .collect()
}

/// 1-D transform `out[q] = min_p (q - p)^2 + f[p]` over the finite entries of `f`.
fn lower_envelope(f: &[i64], out: &mut [i64]) {
    let sites: Vec<usize> = (0..f.len()).filter(|&p| f[p] < INF).collect();
    let Some(&first) = sites.first() else {
        out.fill(INF);
        return;
    };
    let key = |p: usize| f[p] + (p * p) as i64;
    let mut v = vec![first];
    let mut z = vec![f64::NEG_INFINITY, f64::INFINITY];
    for &q in &sites[1..] {
        let mut s;
        loop {
            let p = *v.last().unwrap();
            s = (key(q) - key(p)) as f64 / (2 * (q - p)) as f64;
            if s <= z[v.len() - 1] {
                v.pop();
                z.pop();
            } else {
                break;
            }
        }
        let k = v.len();
        v.push(q);
        z[k] = s;
        z.push(f64::INFINITY);
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as i64 - v[k] as i64;
        *o = d * d + f[v[k]];
    }
}

/// Smallest integer `r` with `r*r >= v`.
pub fn ceil_sqrt(v: u64) -> u64 {
    let mut r = (v as f64).sqrt() as u64;
    while r * r < v {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= v {
        r -= 1;
    }
    r
}
