use num_traits::One;

use signalcert::channel::{named_polytope, ChannelParams, PolytopeSpec};
use signalcert::functional::{chsh, t_bounds, t_functional};
use signalcert::quantum::prop2_strategy;
use signalcert::randomness::{chsh_strategy, classical_attack_lp, noise_threshold, noisy_bell_value, vertex_maximum};
use signalcert::scalar::{q, q_from_f64, qi, Q};

#[test]
fn chsh_threshold_matches_closed_form() {
    let f = chsh().instantiate(&qi(0), &qi(0)).unwrap();
    let s = chsh_strategy();
    assert!((noisy_bell_value(&f, &s, 0.0) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    let t = noise_threshold(&f, &s, 2.0);
    assert!(t.violated);
    assert!((t.mu_star - (1.0 - 0.5f64.sqrt())).abs() < 1e-9);
    assert!((t.mu_star - t.closed_form).abs() < 1e-9);
}

#[test]
fn no_violation_means_no_threshold() {
    let f = chsh().instantiate(&qi(0), &qi(0)).unwrap();
    let t = noise_threshold(&f, &chsh_strategy(), 3.0);
    assert!(!t.violated);
}

#[test]
fn attack_lp_on_t_functional() {
    let p = q(3, 4);
    let h = q(1, 2);
    let verts = named_polytope(&PolytopeSpec::Plain(ChannelParams::of(&p, &p, &h, &h))).behaviors();
    let f = t_functional(&p).unwrap().instantiate(&p, &qi(0)).unwrap();
    let tb = t_bounds(&p).unwrap();
    let vmax = vertex_maximum(&f, &verts);
    assert_eq!(vmax, tb.signaling);
    assert!(tb.local <= tb.signaling);

    // at the maximum only deterministic-output vertices remain
    let at_max = classical_attack_lp(&f, &vmax, &verts).unwrap();
    assert!(at_max.feasible);
    assert_eq!(at_max.p_guess, Some(Q::one()));

    let above = classical_attack_lp(&f, &(&vmax + q(1, 1000)), &verts).unwrap();
    assert!(!above.feasible);
    assert!(above.p_guess.is_none());

    let quantum = noisy_bell_value(&f, &prop2_strategy(0.75).unwrap(), 0.0);
    assert!((quantum - tb.quantum).abs() < 1e-9);
    let omega = q_from_f64(quantum).unwrap();
    let r = classical_attack_lp(&f, &omega, &verts).unwrap();
    assert_eq!(r.feasible, omega <= vmax);
}

#[test]
fn threshold_is_where_noisy_value_meets_beta() {
    let p = q(3, 4);
    let f = t_functional(&p).unwrap().instantiate(&p, &qi(0)).unwrap();
    let s = prop2_strategy(0.75).unwrap();
    let beta = t_bounds(&p).unwrap().local;
    let beta = signalcert::scalar::Scalar::to_f64(&beta);
    let t = noise_threshold(&f, &s, beta);
    assert!(t.violated);
    assert!((noisy_bell_value(&f, &s, t.mu_star) - beta).abs() < 1e-9);
}
