use proptest::prelude::*;
use surfperc::percolation::{self, effective_fraction_step, stationary_fraction};
use surfperc::layout::GraphKind;
use surfperc::{CodeLayout, PauliOperator};

fn op(n: usize) -> impl Strategy<Value = PauliOperator> {
    (
        proptest::collection::vec(any::<bool>(), n),
        proptest::collection::vec(any::<bool>(), n),
        any::<bool>(),
    )
        .prop_map(|(x, z, s)| PauliOperator::from_bits(&x, &z, s).unwrap())
}

fn symplectic(a: &PauliOperator, b: &PauliOperator) -> bool {
    let odd = (0..a.n_qubits()).fold(false, |acc, q| {
        let ((ax, az), (bx, bz)) = (a.get(q), b.get(q));
        acc ^ (ax & bz) ^ (az & bx)
    });
    !odd
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn commutation_is_the_symplectic_form((a, b) in (op(9), op(9))) {
        prop_assert_eq!(a.commutes(&b).unwrap(), symplectic(&a, &b));
        prop_assert_eq!(a.commutes(&b).unwrap(), b.commutes(&a).unwrap());
    }

    #[test]
    fn products_of_hermitian_operators((a, b) in (op(7), op(7))) {
        let ab = a.multiply(&b).unwrap();
        let ba = b.multiply(&a).unwrap();
        prop_assert!(ab.same_support(&ba));
        prop_assert_eq!(ab.is_hermitian(), a.commutes(&b).unwrap());
        if a.commutes(&b).unwrap() {
            prop_assert_eq!(ab, ba);
        }
        let square = a.multiply(&a).unwrap();
        prop_assert!(square.is_identity());
        prop_assert!(!square.is_negative());
    }

    #[test]
    fn multiplication_is_associative((a, b, c) in (op(6), op(6), op(6))) {
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn removing_more_edges_never_reconnects(
        d in 2usize..7,
        mask in proptest::collection::vec(0u8..3, 61),
        z_graph in any::<bool>(),
    ) {
        let layout = CodeLayout::build(d).unwrap();
        let kind = if z_graph { GraphKind::Z } else { GraphKind::X };
        let n = layout.n_qubits;
        let small: Vec<usize> = (0..n).filter(|&q| mask[q % mask.len()] == 0).collect();
        let large: Vec<usize> = (0..n).filter(|&q| mask[q % mask.len()] != 2).collect();
        let survives_large = percolation::survives_cut(&layout, kind, &large).unwrap();
        let survives_small = percolation::survives_cut(&layout, kind, &small).unwrap();
        prop_assert!(!survives_large || survives_small);
    }

    #[test]
    fn fraction_recursion_stays_in_range_and_is_monotone(
        f in 0.0f64..=1.0,
        g in 0.0f64..=1.0,
        p_x in 0.0f64..=1.0,
        p_s in 0.0f64..=1.0,
    ) {
        let (lo, hi) = if f <= g { (f, g) } else { (g, f) };
        let next_lo = effective_fraction_step(lo, p_x, p_s).unwrap();
        let next_hi = effective_fraction_step(hi, p_x, p_s).unwrap();
        prop_assert!((0.0..=1.0).contains(&next_lo));
        prop_assert!(next_lo <= next_hi + 1e-15);
        if p_x > 0.0 || p_s > 0.0 {
            if let Ok(fixed) = stationary_fraction(p_x, p_s) {
                let step = effective_fraction_step(fixed, p_x, p_s).unwrap();
                prop_assert!((step - fixed).abs() < 1e-12);
            }
        }
    }
}
