//! Hausdorff dimension of the attractor and of the boundary sets `B_h`.

use serde::{Deserialize, Serialize};

use crate::ifs::IfsSpec;
use crate::neighbor::NeighborGraph;
use crate::rational::to_f64;
use crate::topology::Condensation;

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 100_000;

/// `2·ln m / ln det M`.
pub fn attractor_dimension(spec: &IfsSpec) -> f64 {
    2.0 * (spec.m() as f64).ln() / to_f64(&spec.det()).ln()
}

/// `B_h = ⋃ f_k(B_{h'})` over the edges `h → h'` labelled `(k, j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryEquation {
    /// 1-based vertex.
    pub vertex: usize,
    /// `(k, h')`, both 1-based.
    pub terms: Vec<(usize, usize)>,
}

pub fn boundary_equations(g: &NeighborGraph) -> Vec<BoundaryEquation> {
    (0..g.type_count())
        .map(|v| BoundaryEquation {
            vertex: v + 1,
            terms: g.out_edges(v).map(|e| (e.k, e.to + 1)).collect(),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub radius: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Perron root of an irreducible non-negative count matrix.
///
/// Iterates on `C + I`, which is primitive, and stops when the
/// Collatz–Wielandt bounds `min (Ax)_i/x_i ≤ ρ ≤ max (Ax)_i/x_i` agree.
pub fn perron_root(c: &[Vec<f64>]) -> SpectralEstimate {
    let n = c.len();
    let mut x = vec![1.0; n];
    let mut estimate = 0.0;
    for it in 1..=POWER_MAX_ITERATIONS {
        let y: Vec<f64> = (0..n)
            .map(|i| x[i] + (0..n).map(|j| c[i][j] * x[j]).sum::<f64>())
            .collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let q = y[i] / x[i];
            lo = lo.min(q);
            hi = hi.max(q);
        }
        estimate = (lo + hi) / 2.0 - 1.0;
        if hi - lo < POWER_TOLERANCE {
            return SpectralEstimate {
                radius: estimate,
                converged: true,
                iterations: it,
            };
        }
        let norm = y.iter().cloned().fold(0.0, f64::max);
        x = y.iter().map(|v| v / norm).collect();
    }
    SpectralEstimate {
        radius: estimate,
        converged: false,
        iterations: POWER_MAX_ITERATIONS,
    }
}

/// Spectral radius of every strongly connected component of `g`.
pub fn component_radii(g: &NeighborGraph, cond: &Condensation) -> (Vec<f64>, bool) {
    let mut radii = vec![0.0; cond.components()];
    let mut converged = true;
    for c in 0..cond.components() {
        if !cond.is_cyclic(c) {
            continue;
        }
        if !cond.is_rich(c) {
            radii[c] = 1.0;
            continue;
        }
        let members: Vec<usize> = (0..g.type_count()).filter(|&v| cond.comp[v] == c).collect();
        let pos = |v: usize| members.iter().position(|&w| w == v);
        let mut mat = vec![vec![0.0; members.len()]; members.len()];
        for e in &g.edges {
            if let (Some(i), Some(j)) = (pos(e.from), pos(e.to)) {
                mat[i][j] += 1.0;
            }
        }
        let est = perron_root(&mat);
        converged &= est.converged;
        radii[c] = est.radius;
    }
    (radii, converged)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionReport {
    pub alpha: f64,
    pub beta_global: f64,
    pub beta_per_vertex: Vec<f64>,
    pub spectral_radius: f64,
    pub boundary_equations: Vec<BoundaryEquation>,
    /// `false` if power iteration hit its iteration cap.
    pub converged: bool,
}

fn beta(rho: f64, det: f64) -> f64 {
    if rho <= 1.0 {
        0.0
    } else {
        2.0 * rho.ln() / det.ln()
    }
}

pub fn boundary_dimension(g: &NeighborGraph, spec: &IfsSpec) -> DimensionReport {
    let det = to_f64(&spec.det());
    let cond = Condensation::new(&g.adjacency());
    let (radii, converged) = component_radii(g, &cond);
    let spectral_radius = radii.iter().cloned().fold(0.0, f64::max);
    let beta_per_vertex = (0..g.type_count())
        .map(|v| {
            let rho = cond
                .reachable_components(v)
                .map(|c| radii[c])
                .fold(0.0, f64::max);
            beta(rho, det)
        })
        .collect();
    DimensionReport {
        alpha: attractor_dimension(spec),
        beta_global: beta(spectral_radius, det),
        beta_per_vertex,
        spectral_radius,
        boundary_equations: boundary_equations(g),
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::fixtures::*;
    use crate::neighbor::{build, Limits};
    use crate::rational::int;
    use crate::topology::tests::synthetic;
    use crate::Rational;
    use num_traits::{Signed, Zero};

    fn built(spec: &IfsSpec) -> NeighborGraph {
        build(spec, Limits::default()).unwrap().graph().unwrap().clone()
    }

    /// Characteristic polynomial coefficients `c_0 … c_n` (monic, `c_n = 1`)
    /// by Faddeev–LeVerrier, exactly.
    fn char_poly(a: &[Vec<Rational>]) -> Vec<Rational> {
        let n = a.len();
        let mul = |x: &Vec<Vec<Rational>>, y: &Vec<Vec<Rational>>| -> Vec<Vec<Rational>> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).map(|k| &x[i][k] * &y[k][j]).sum())
                        .collect()
                })
                .collect()
        };
        let mut coeffs = vec![Rational::zero(); n + 1];
        coeffs[n] = int(1);
        let mut m = vec![vec![Rational::zero(); n]; n];
        let a = a.to_vec();
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I
            let mut next = mul(&a, &m);
            for (i, row) in next.iter_mut().enumerate() {
                row[i] += &coeffs[n - k + 1];
            }
            m = next;
            let am = mul(&a, &m);
            let tr: Rational = (0..n).map(|i| am[i][i].clone()).sum();
            coeffs[n - k] = -tr / int(k as i64);
        }
        coeffs
    }

    fn trim(mut p: Vec<Rational>) -> Vec<Rational> {
        while p.len() > 1 && p.last().unwrap().is_zero() {
            p.pop();
        }
        p
    }

    /// `(quotient, remainder)` of polynomial division, coefficients low to high.
    fn divmod(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
        let mut r = trim(a.to_vec());
        let b = trim(b.to_vec());
        let lead = b.last().unwrap().clone();
        if r.len() < b.len() {
            return (vec![Rational::zero()], r);
        }
        let mut q = vec![Rational::zero(); r.len() - b.len() + 1];
        while r.len() >= b.len() && !(r.len() == 1 && r[0].is_zero()) {
            let shift = r.len() - b.len();
            let f = r.last().unwrap() / &lead;
            for (i, bi) in b.iter().enumerate() {
                r[i + shift] -= &f * bi;
            }
            q[shift] = f;
            r.pop();
            if r.is_empty() {
                r.push(Rational::zero());
            }
            r = trim(r);
        }
        (q, r)
    }

    fn poly_gcd(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
        while !(b.len() == 1 && b[0].is_zero()) {
            let (_, r) = divmod(&a, &b);
            a = b;
            b = r;
        }
        a
    }

    /// Largest real root: reduce to the square-free part exactly, then Newton
    /// from above the Cauchy bound (simple roots, monotone convergence).
    fn largest_root(c: &[Rational]) -> f64 {
        let deriv: Vec<Rational> = (1..c.len()).map(|i| &c[i] * int(i as i64)).collect();
        let (sf, _) = divmod(c, &poly_gcd(c, &deriv));
        let lead = sf.last().unwrap().clone();
        let c: Vec<f64> = sf.iter().map(|v| to_f64(&(v / &lead))).collect();
        let n = c.len() - 1;
        let mut x = 1.0 + c[..n].iter().map(|v| v.abs()).fold(0.0, f64::max);
        for _ in 0..10_000 {
            let (mut p, mut dp) = (0.0, 0.0);
            for i in (0..=n).rev() {
                dp = dp * x + p;
                p = p * x + c[i];
            }
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        x
    }

    fn count_matrix(g: &NeighborGraph) -> Vec<Vec<Rational>> {
        let n = g.type_count();
        let mut a = vec![vec![Rational::zero(); n]; n];
        for e in &g.edges {
            a[e.from][e.to] += int(1);
        }
        a
    }

    #[test]
    fn attractor_dimensions() {
        let a = attractor_dimension(&pythagorean_carpet());
        assert!((a - 4.0 * 2f64.ln() / 5f64.ln()).abs() < 1e-12);
        assert!((a - 1.7227).abs() < 5e-5);
        assert!((attractor_dimension(&full_square(2)) - 2.0).abs() < 1e-12);
        assert!((attractor_dimension(&full_square(3)) - 2.0).abs() < 1e-12);
        let sc = attractor_dimension(&sierpinski_carpet());
        assert!((sc - 8f64.ln() / 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn carpet_boundary_equations() {
        let g = built(&pythagorean_carpet());
        let eqs = boundary_equations(&g);
        let terms = |v: usize| {
            let mut t = eqs[v - 1].terms.clone();
            t.sort();
            t
        };
        assert_eq!(terms(1), vec![(4, 2)]);
        assert_eq!(terms(2), vec![(2, 4)]);
        assert_eq!(terms(3), vec![(1, 2)]);
        assert_eq!(terms(4), vec![(2, 5), (4, 5)]);
        assert_eq!(terms(5), vec![(1, 4)]);
        for eq in &eqs {
            assert!(eq.terms.iter().all(|&(_, h)| h >= 1 && h <= g.type_count()));
        }
    }

    #[test]
    fn carpet_boundary_dimension() {
        let spec = pythagorean_carpet();
        let r = boundary_dimension(&built(&spec), &spec);
        assert!(r.converged);
        assert!((r.spectral_radius - 2f64.sqrt()).abs() < 1e-9);
        let expect = 2f64.ln() / 5f64.ln();
        assert!((r.beta_global - expect).abs() < 1e-9);
        assert!((r.beta_global - r.alpha / 4.0).abs() < 1e-9);
        assert!((r.beta_global - 0.4307).abs() < 5e-5);
        for b in &r.beta_per_vertex {
            assert!((b - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn simple_cycle_has_point_boundaries() {
        let g = synthetic(3, &[(0, 1), (1, 2), (2, 0)]);
        let spec = sierpinski_triangle();
        let r = boundary_dimension(&g, &spec);
        assert_eq!(r.spectral_radius, 1.0);
        assert_eq!(r.beta_global, 0.0);
    }

    #[test]
    fn sierpinski_carpet_edges_are_segments() {
        let spec = sierpinski_carpet();
        let g = built(&spec);
        let r = boundary_dimension(&g, &spec);
        assert!((r.spectral_radius - 3.0).abs() < 1e-9);
        assert!((r.beta_global - 1.0).abs() < 1e-9);
        // the two axis-parallel types carry three self-loops each
        let loops = |v: usize| g.edges.iter().filter(|e| e.from == v && e.to == v).count();
        assert_eq!((0..g.type_count()).filter(|&v| loops(v) == 3).count(), 4);
    }

    #[test]
    fn power_iteration_matches_characteristic_polynomial() {
        let mut graphs: Vec<NeighborGraph> = all().iter().map(|(_, s)| built(s)).collect();
        graphs.push(synthetic(2, &[(0, 1), (0, 1), (1, 0)]));
        graphs.push(synthetic(3, &[(0, 1), (1, 2), (2, 0), (0, 0), (1, 0)]));
        // periodic: period 2 with a doubled edge
        graphs.push(synthetic(2, &[(0, 1), (0, 1), (1, 0), (1, 0), (1, 0)]));
        for g in &graphs {
            if g.type_count() > 8 {
                continue;
            }
            let spec = sierpinski_triangle();
            let r = boundary_dimension(g, &spec);
            let exact = largest_root(&char_poly(&count_matrix(g))).max(0.0);
            assert!(
                (r.spectral_radius - exact).abs() < 1e-8,
                "{} vs {exact}",
                r.spectral_radius
            );
        }
    }

    #[test]
    fn char_poly_oracle_sanity() {
        // [[0, 2], [1, 0]]: λ² − 2
        let a = vec![vec![int(0), int(2)], vec![int(1), int(0)]];
        assert_eq!(char_poly(&a), vec![int(-2), int(0), int(1)]);
        assert!((largest_root(&char_poly(&a)) - 2f64.sqrt()).abs() < 1e-12);
        assert!(char_poly(&a)[0].is_negative());
    }

    #[test]
    fn relabelling_leaves_radius_unchanged() {
        let spec = pythagorean_carpet();
        let g = built(&spec);
        let n = g.type_count();
        let mut h = g.clone();
        for e in h.edges.iter_mut() {
            e.from = n - 1 - e.from;
            e.to = n - 1 - e.to;
        }
        let a = boundary_dimension(&g, &spec);
        let b = boundary_dimension(&h, &spec);
        assert!((a.spectral_radius - b.spectral_radius).abs() < 1e-12);
    }

    #[test]
    fn beta_never_exceeds_alpha() {
        for (_, spec) in all() {
            let r = boundary_dimension(&built(&spec), &spec);
            for b in &r.beta_per_vertex {
                assert!(*b >= 0.0 && *b <= r.alpha + 1e-9);
            }
            assert!(r.alpha <= 2.0 + 1e-12);
        }
    }
}
