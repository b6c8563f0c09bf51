use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use pvdispatch::feeder::{
    build_admittance, node_matrices, quadratic_form, FeederSpec, LineSpec, NodeKind, NodeSpec, PerUnitBase,
};

fn node(index: usize) -> NodeSpec {
    let kind = if index == 0 { NodeKind::Transformer } else { NodeKind::House };
    NodeSpec { index, kind, load_w: 0.0, load_var: 0.0, inverter: None }
}

fn line(from: usize, to: usize, (r, x, b): (f64, f64, f64)) -> LineSpec {
    LineSpec {
        from,
        to,
        impedance: Complex64::new(r, x),
        shunt: Complex64::new(0.0, b),
        length_m: 10.0 + r,
    }
}

/// Connected feeders with 2 to 6 nodes: a random tree plus at most two chords.
fn feeder() -> impl Strategy<Value = FeederSpec> {
    let z = (0.01f64..1.0, 0.0f64..1.0, prop_oneof![Just(0.0), 0.0f64..1e-3]);
    (2usize..=6).prop_flat_map(move |n| {
        let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
        (
            parents,
            prop::collection::vec(z.clone(), n - 1),
            prop::collection::vec((0..n, 0..n, z.clone()), 0..=2),
        )
            .prop_map(move |(parents, zs, chords)| {
                let mut lines: Vec<LineSpec> =
                    parents.iter().zip(zs).enumerate().map(|(i, (&p, z))| line(p, i + 1, z)).collect();
                for (a, b, z) in chords {
                    let dup = lines.iter().any(|l| (l.from, l.to) == (a, b) || (l.from, l.to) == (b, a));
                    if a != b && !dup {
                        lines.push(line(a, b, z));
                    }
                }
                FeederSpec { nodes: (0..n).map(node).collect(), lines, base: PerUnitBase::default() }
            })
    })
}

fn voltages(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((0.9f64..1.1, -0.3f64..0.3), n)
        .prop_map(|v| v.into_iter().map(|(m, a)| Complex64::from_polar(m, a)).collect())
}

fn feeder_and_voltages() -> impl Strategy<Value = (FeederSpec, Vec<Complex64>)> {
    feeder().prop_flat_map(|f| {
        let n = f.nodes.len();
        (Just(f), voltages(n))
    })
}

proptest! {
    #[test]
    fn traces_give_complex_injections((spec, v) in feeder_and_voltages()) {
        let f = build_admittance(&spec).unwrap();
        let y = &f.admittance;
        let dim = v.len();
        for n in 0..dim {
            let m = node_matrices(&f, n).unwrap();
            let i_n: Complex64 = (0..dim).map(|k| y[(n, k)] * v[k]).sum();
            let s = v[n] * i_n.conj();
            let p = quadratic_form(&m.a, &v);
            let q = quadratic_form(&m.b, &v);
            prop_assert!((p.re - s.re).abs() < 1e-10 && p.im.abs() < 1e-10);
            prop_assert!((q.re - s.im).abs() < 1e-10 && q.im.abs() < 1e-10);
            prop_assert!((quadratic_form(&m.m, &v).re - v[n].norm_sqr()).abs() < 1e-12);
            for mat in [&m.a, &m.b, &m.m] {
                prop_assert!((mat - mat.adjoint()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn node_matrices_sum_to_hermitian_part_and_identity(spec in feeder()) {
        let f = build_admittance(&spec).unwrap();
        let dim = spec.nodes.len();
        let mut sum_a = DMatrix::<Complex64>::zeros(dim, dim);
        let mut sum_m = DMatrix::<Complex64>::zeros(dim, dim);
        for n in 0..dim {
            let m = node_matrices(&f, n).unwrap();
            sum_a += m.a;
            sum_m += m.m;
        }
        let herm = (&f.admittance + f.admittance.adjoint()).map(|x| x * 0.5);
        prop_assert!((sum_a - herm).norm() < 1e-10);
        prop_assert!((sum_m - DMatrix::<Complex64>::identity(dim, dim)).norm() == 0.0);
    }

    #[test]
    fn admittance_is_symmetric_with_shunt_row_sums(spec in feeder()) {
        let f = build_admittance(&spec).unwrap();
        let y = &f.admittance;
        let dim = spec.nodes.len();
        prop_assert!((y - y.transpose()).norm() < 1e-12);
        for n in 0..dim {
            let row: Complex64 = y.row(n).iter().sum();
            let shunt: Complex64 = spec.lines.iter().filter(|l| l.from == n || l.to == n).map(|l| l.shunt).sum();
            prop_assert!((row - shunt).norm() < 1e-9);
        }
        prop_assert_eq!(f.radial, spec.lines.len() == dim - 1);
    }

    #[test]
    fn relabeling_permutes_admittance(
        (spec, perm) in feeder().prop_flat_map(|f| {
            let rest: Vec<usize> = (1..f.nodes.len()).collect();
            (Just(f), Just(rest).prop_shuffle())
        })
    ) {
        // node 0 stays the slack; the others are relabeled by `to`
        let mut to = vec![0];
        to.extend(perm);
        let lines = spec.lines.iter().map(|l| LineSpec { from: to[l.from], to: to[l.to], ..*l }).collect();
        let relabeled = FeederSpec { lines, ..spec.clone() };
        let (a, b) = (build_admittance(&spec).unwrap(), build_admittance(&relabeled).unwrap());
        let dim = spec.nodes.len();
        for i in 0..dim {
            for j in 0..dim {
                prop_assert!((a.admittance[(i, j)] - b.admittance[(to[i], to[j])]).norm() < 1e-12);
            }
        }
    }
}
