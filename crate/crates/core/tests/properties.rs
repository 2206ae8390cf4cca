use num_traits::{One, Zero};
use proptest::prelude::*;

use signalcert::behavior::NsConstraint;
use signalcert::catalog;
use signalcert::channel::{enumerate_vertices, ChannelParams};
use signalcert::geometry::{membership, verify_membership};
use signalcert::relabel::{group, Relabeling};
use signalcert::scalar::{fmt_q, parse_q, q, Q};
use signalcert::{Behavior, BehaviorQ};

fn det(code: u8) -> BehaviorQ {
    let c = code as usize;
    Behavior::deterministic([c & 1, c >> 1 & 1], [c >> 2 & 1, c >> 3 & 1])
}

/// Convex mixture of local deterministic boxes with small integer weights.
fn local_mix() -> impl Strategy<Value = BehaviorQ> {
    prop::collection::vec((0u8..16, 1i64..9), 1..6).prop_map(|terms| {
        let total: i64 = terms.iter().map(|t| t.1).sum();
        let mut acc: Option<BehaviorQ> = None;
        let mut mass = 0i64;
        for (code, w) in terms {
            mass += w;
            let b = det(code);
            acc = Some(match acc {
                None => b,
                Some(a) => b.combine(&q(w, mass), &a),
            });
        }
        assert_eq!(mass, total);
        acc.unwrap()
    })
}

fn fidelity() -> impl Strategy<Value = Q> {
    (0i64..=20).prop_map(|k| q(k, 20))
}

fn params() -> impl Strategy<Value = ChannelParams> {
    (fidelity(), fidelity(), fidelity(), fidelity()).prop_map(|(p, qq, r, s)| ChannelParams::new(p, qq, r, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn correlators_round_trip(b in local_mix()) {
        prop_assert!(b.validate().is_ok());
        prop_assert_eq!(b.to_correlators().to_behavior().unwrap(), b.clone());
        prop_assert!(b.is_non_signaling());
        prop_assert_eq!(b.transpose().transpose(), b);
    }

    #[test]
    fn relabelings_act_as_a_group(b in local_mix(), g in 0u8..128, h in 0u8..128) {
        let (g, h) = (Relabeling::from_code(g), Relabeling::from_code(h));
        let gb = g.apply(&b);
        prop_assert!(gb.validate().is_ok());
        prop_assert_eq!(g.inverse().apply(&gb), b.clone());
        prop_assert_eq!(g.compose(&h).apply(&b), h.apply(&gb));
    }

    #[test]
    fn channel_vertices_are_behaviors(c in params()) {
        let m = enumerate_vertices(&c);
        prop_assert!(!m.is_empty() && m.len() <= 256);
        for v in &m.vertices {
            prop_assert!(v.behavior.validate().is_ok());
        }
    }

    #[test]
    fn output_flips_preserve_channel_vertex_sets(c in params(), code in 0u8..16) {
        let g = Relabeling { flip_a: [code & 1 == 1, code & 2 == 2], flip_b: [code & 4 == 4, code & 8 == 8], ..Default::default() };
        let verts = enumerate_vertices(&c).behaviors();
        for v in &verts {
            prop_assert!(verts.contains(&g.apply(v)));
        }
    }

    #[test]
    fn mixtures_of_vertices_are_certified_members(c in params(), picks in prop::collection::vec((0usize..256, 1i64..5), 1..5)) {
        let verts = enumerate_vertices(&c).behaviors();
        let total: i64 = picks.iter().map(|t| t.1).sum();
        let mut b = Behavior::from_fn(|_, _, _, _| Q::zero());
        for (i, w) in &picks {
            let v = &verts[i % verts.len()];
            b = Behavior::from_fn(|x, y, a, bb| b.get(a, bb, x, y) + v.get(a, bb, x, y) * q(*w, total));
        }
        let m = membership(&b, &verts);
        prop_assert!(m.is_inside());
        prop_assert!(verify_membership(&b, &verts, &m));
    }

    #[test]
    fn functionals_are_affine(a in local_mix(), b in local_mix(), t in 0i64..=8) {
        let f = catalog::instantiate("B3:5", &q(3, 5), &q(2, 5)).unwrap();
        let alpha = q(t, 8);
        let mix = a.combine(&alpha, &b);
        let lhs = f.evaluate(&mix);
        let rhs = &alpha * f.evaluate(&a) + (Q::one() - &alpha) * f.evaluate(&b);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn rationals_print_and_parse(n in -10_000i64..10_000, d in 1i64..10_000) {
        let x = q(n, d);
        prop_assert_eq!(parse_q(&fmt_q(&x)).unwrap(), x);
    }

    #[test]
    fn ns_constraints_vanish_on_local_mixtures(b in local_mix()) {
        for c in NsConstraint::ALL {
            prop_assert!(b.ns_overlap(c).is_zero());
        }
    }
}

#[test]
fn group_sizes() {
    assert_eq!(group(false).len(), 64);
    assert_eq!(group(true).len(), 128);
    let probe = det(6).combine(&q(1, 3), &det(9)).combine(&q(1, 7), &det(12));
    let images: std::collections::BTreeSet<String> = group(false)
        .iter()
        .map(|g| format!("{:?}", g.apply(&probe).flat()))
        .collect();
    assert!(images.len() > 1);
}
