//! Adaptive Gauss-Kronrod quadrature and kernel-integral oracles built on it.
//! Shared by the kernel tests here and the acceptance target of the CLI crate.
#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = r * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * r, ((kron - gauss) * r).abs())
}

/// Integral of `f` over `[a, b]` to relative tolerance `rel` (absolute floor
/// `abs`), by recursive bisection.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64) -> f64 {
    use std::collections::BinaryHeap;
    #[derive(PartialEq)]
    struct Piece(f64, f64, f64, f64);
    impl Eq for Piece {}
    impl PartialOrd for Piece {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Piece {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.3.total_cmp(&other.3)
        }
    }
    let (v, e) = gk15(f, a, b);
    let (mut total, mut err) = (v, e);
    let mut heap = BinaryHeap::from([Piece(a, b, v, e)]);
    for _ in 0..20000 {
        if err <= (rel * total.abs()).max(abs) {
            break;
        }
        let Piece(lo, hi, v, e) = heap.pop().unwrap();
        let mid = 0.5 * (lo + hi);
        let (lv, le) = gk15(f, lo, mid);
        let (rv, re) = gk15(f, mid, hi);
        total += lv + rv - v;
        err += le + re - e;
        heap.push(Piece(lo, mid, lv, le));
        heap.push(Piece(mid, hi, rv, re));
    }
    // Re-sum to shed the drift of the running total.
    heap.iter().map(|p| p.2).sum()
}

/// `∫_a^b f` where `f` has an integrable power singularity at `a`; the
/// substitution `z = a + (b - a) w^m` removes it for a suitable `m`.
pub fn integrate_singular_left(f: &dyn Fn(f64) -> f64, a: f64, b: f64, m: f64, rel: f64) -> f64 {
    let len = b - a;
    let g = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        let z = a + len * w.powf(m);
        f(z) * len * m * w.powf(m - 1.0)
    };
    integrate(&g, 0.0, 1.0, rel, 1e-300)
}

/// `∫_L^∞ z^{-(1+σ)} dz`-type tails via `z = L e^y`.
pub fn integrate_tail(f: &dyn Fn(f64) -> f64, lo: f64, sigma: f64, rel: f64) -> f64 {
    let g = |y: f64| {
        let z = lo * y.exp();
        f(z) * z
    };
    let ymax = 80.0 / sigma;
    integrate(&g, 0.0, ymax, rel, 1e-300)
}

/// Length of `[a0, a1] ∩ [b0 - z, b1 - z]` for `a1 <= b0`, written in terms
/// of `z - gap` so it stays accurate for tiny `z` across a shared edge.
fn overlap(a0: f64, a1: f64, b0: f64, b1: f64, z: f64) -> f64 {
    let gap = b0 - a1;
    (a1 - a0).min(b1 - b0).min(z - gap).min((b1 - a0) - z).max(0.0)
}

/// `∬_{[a0,a1]×[b0,b1]} |x - y|^{-(1+σ)}` for disjoint intervals with
/// `a1 <= b0`, reduced by Fubini to `∫ z^{-(1+σ)} |{x : x + z ∈ [b0,b1]}| dz`.
pub fn pair_integral(a0: f64, a1: f64, b0: f64, b1: f64, sigma: f64, rel: f64) -> f64 {
    assert!(a1 <= b0);
    let w = |z: f64| z.powf(-(1.0 + sigma)) * overlap(a0, a1, b0, b1, z);
    let zmin = b0 - a1;
    let zmax = b1 - a0;
    // Breakpoints where the overlap length changes slope.
    let mut cuts = vec![zmin, b0 - a0, b1 - a1, zmax];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        if seg[1] - seg[0] <= 0.0 {
            continue;
        }
        total += if seg[0] == 0.0 {
            integrate_singular_left(&w, 0.0, seg[1], 1.0 / (1.0 - sigma), rel)
        } else {
            integrate(&w, seg[0], seg[1], rel, 1e-300)
        };
    }
    total
}

/// `∬_{[x0,x1]×(edge,∞)} |x - y|^{-(1+σ)}` for `x1 <= edge`.
pub fn half_line_integral(x0: f64, x1: f64, edge: f64, sigma: f64, rel: f64) -> f64 {
    let len = x1 - x0;
    let near = edge - x1;
    let far = edge - x0;
    let measure = |z: f64| (z - near).clamp(0.0, len);
    let w = |z: f64| z.powf(-(1.0 + sigma)) * measure(z);
    let mut total = if near == 0.0 {
        integrate_singular_left(&w, 0.0, far, 1.0 / (1.0 - sigma), rel)
    } else {
        integrate(&w, near, far, rel, 1e-300)
    };
    total += integrate_tail(&|z: f64| z.powf(-(1.0 + sigma)) * len, far, sigma, rel);
    total
}

/// Oracle for the pair weight between cells `i < j` of a uniform mesh.
pub fn cell_pair(edges: &[f64], i: usize, j: usize, sigma: f64) -> f64 {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    pair_integral(edges[i], edges[i + 1], edges[j], edges[j + 1], sigma, 1e-12)
}

/// Oracle for the tail weight of cell `i`: both exterior half-lines.
pub fn cell_tail(edges: &[f64], i: usize, sigma: f64) -> f64 {
    let a = edges[0];
    let b = *edges.last().unwrap();
    let right = half_line_integral(edges[i], edges[i + 1], b, sigma, 1e-12);
    // Reflect the left half-line onto the right.
    let left = half_line_integral(-edges[i + 1], -edges[i], -a, sigma, 1e-12);
    right + left
}
