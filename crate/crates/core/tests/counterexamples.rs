//! Exact witnesses for statements that do not hold as stated, plus
//! cross-checks between independent vertex computations.

use num_traits::{One, Zero};

use signalcert::catalog;
use signalcert::channel::{named_polytope, ChannelParams, PolytopeSpec};
use signalcert::functional::Family;
use signalcert::geometry::{
    hull_equal, membership, ns_project, ns_project_by_edges, verify_facet, verify_membership, Sense, DEFAULT_NS_ORDER,
};
use signalcert::hull::{slice_vertices, Hull};
use signalcert::relax::{pd_to_channel, pd_vertices, sample_and_verify_inclusion, PdExtremal, Table};
use signalcert::scalar::{q, qi, Q};
use signalcert::BehaviorQ;

fn plain(p: &Q, qq: &Q, r: &Q, s: &Q) -> Vec<BehaviorQ> {
    named_polytope(&PolytopeSpec::Plain(ChannelParams::of(p, qq, r, s))).behaviors()
}

fn rows(m: [[(i64, i64); 4]; 4]) -> BehaviorQ {
    BehaviorQ::from_rows(m.map(|r| r.map(|(n, d)| q(n, d))))
}

fn int_matrix(m: [[i64; 4]; 4]) -> [[Q; 4]; 4] {
    m.map(|r| r.map(qi))
}

#[test]
fn two_way_ns_part_exceeds_one_way_at_three_quarters() {
    let p = q(3, 4);
    let b = rows([
        [(7, 12), (1, 12), (5, 16), (17, 48)],
        [(1, 12), (1, 4), (1, 48), (5, 16)],
        [(2, 3), (0, 1), (1, 12), (7, 12)],
        [(0, 1), (1, 3), (1, 4), (1, 12)],
    ]);
    assert!(b.validate().is_ok());
    assert!(b.is_non_signaling());

    let two_way = plain(&p, &p, &p, &p);
    let inside = membership(&b, &two_way);
    assert!(inside.is_inside());
    assert!(verify_membership(&b, &two_way, &inside));

    let one_way = named_polytope(&PolytopeSpec::OneWay(p.clone())).behaviors();
    let f = int_matrix([[-4, -4, 1, 1], [-4, 1, -14, 1], [1, -14, 1, 1], [1, 1, 1, -4]]);
    let ns_one_way = ns_project(&one_way, &DEFAULT_NS_ORDER, true);
    assert_eq!(ns_one_way.len(), 48);
    let max = ns_one_way.iter().map(|v| v.dot(&f)).max().unwrap();
    assert_eq!(max, qi(-1));
    assert!(b.dot(&f) > qi(-1));

    let outside = membership(&b, &ns_one_way);
    assert!(!outside.is_inside());
    assert!(verify_membership(&b, &ns_one_way, &outside));
}

#[test]
fn ns_parts_agree_at_three_fifths() {
    let p = q(3, 5);
    let two = ns_project(&plain(&p, &p, &p, &p), &DEFAULT_NS_ORDER, true);
    let one = ns_project(
        &named_polytope(&PolytopeSpec::OneWay(p)).behaviors(),
        &DEFAULT_NS_ORDER,
        true,
    );
    assert!(hull_equal(&two, &one));
}

#[test]
fn slice_matches_edge_crossing() {
    let h = q(1, 2);
    for p in [q(3, 5), q(9, 10)] {
        let verts = plain(&p, &p, &h, &h);
        let a = slice_vertices(&verts, &DEFAULT_NS_ORDER);
        let mut order = DEFAULT_NS_ORDER.to_vec();
        order.reverse();
        let b = ns_project_by_edges(&verts, &order);
        assert_eq!(a.len(), 32);
        assert!(hull_equal(&a, &b));
        for v in &a {
            assert!(v.is_non_signaling());
        }
    }
}

#[test]
fn hull_of_local_box_set() {
    let det: Vec<BehaviorQ> = (0..16usize)
        .map(|c| BehaviorQ::deterministic([c & 1, c >> 1 & 1], [c >> 2 & 1, c >> 3 & 1]))
        .collect();
    let hull = Hull::new(&det).unwrap();
    assert_eq!(hull.dim(), 8);
    let facets = hull.facets();
    assert_eq!(facets.len(), 24);
    assert!(det.iter().all(|v| facets.iter().all(|f| f.holds(v))));
    assert!(!facets.iter().all(|f| f.holds(&BehaviorQ::pr_box())));
}

#[test]
fn b2_entries_belong_to_the_one_way_polytope() {
    let p = q(3, 4);
    let h = q(1, 2);
    let pppp = plain(&p, &p, &p, &p);
    let pphh = plain(&p, &p, &h, &h);
    let f = catalog::instantiate("B2:4", &p, &qi(0)).unwrap();
    let on_home = verify_facet(&f.coeffs, &f.bound, f.sense, &pppp);
    assert!(!on_home.valid);
    let worst = if f.sense == Sense::Le {
        on_home.max_value
    } else {
        on_home.min_value
    };
    assert_eq!(worst, q(19, 16));
    for id in ["B2:3", "B2:4", "B2:5"] {
        let f = catalog::instantiate(id, &p, &qi(0)).unwrap();
        assert!(verify_facet(&f.coeffs, &f.bound, f.sense, &pphh).is_facet, "{id}");
    }
}

#[test]
fn b3_entries_need_r_at_least_p() {
    let f = catalog::instantiate("B3:13", &q(1, 2), &q(1, 10)).unwrap();
    let home = named_polytope(&catalog::home_polytope(Family::B3, &q(1, 2), &q(1, 10)).unwrap()).behaviors();
    assert!(!verify_facet(&f.coeffs, &f.bound, f.sense, &home).valid);
    let f = catalog::instantiate("B3:13", &q(1, 2), &q(7, 10)).unwrap();
    let home = named_polytope(&catalog::home_polytope(Family::B3, &q(1, 2), &q(7, 10)).unwrap()).behaviors();
    assert!(verify_facet(&f.coeffs, &f.bound, f.sense, &home).is_facet);
}

#[test]
fn mixed_pattern_extremal_escapes_the_star_polytope() {
    let p = q(3, 4);
    let one = Q::one();
    let z = Q::zero();
    let col = |u: &Q| [u.clone(), &one - u];
    // Alice: (p, 0) at x = 0 and (1, 1 - p) at x = 1; Bob always outputs 0.
    let mut pa: Table = Default::default();
    let alice = [[p.clone(), z.clone()], [one.clone(), &one - &p]];
    for x in 0..2 {
        for y in 0..2 {
            pa[x][y] = col(&alice[x][y]);
        }
    }
    let mut pb: Table = Default::default();
    for x in 0..2 {
        for y in 0..2 {
            pb[x][y] = col(&one);
        }
    }
    let e = PdExtremal::new(pa, pb, p.clone()).unwrap();
    assert!(pd_to_channel(&e).is_err());
    let b = e.behavior();

    let pd = pd_vertices(&p);
    let m = membership(&b, &pd);
    assert!(m.is_inside() && verify_membership(&b, &pd, &m));

    let star = named_polytope(&PolytopeSpec::Star(p.clone(), p.clone())).behaviors();
    let m = membership(&b, &star);
    assert!(!m.is_inside());
    assert!(verify_membership(&b, &star, &m));
}

#[test]
fn inclusion_fails_for_mirrored_hidden_laws() {
    let rep = sample_and_verify_inclusion(&q(1, 8), &q(1, 4), 500, 17).unwrap();
    assert!(rep.over_kappa.is_empty());
    assert!(!rep.outside.is_empty());
    assert!(!rep.outside_pd.is_empty());
    assert!(!rep.passed());
}
