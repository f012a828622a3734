use super::*;
use crate::exact::rat;

#[test]
fn delta_leading_coefficients_by_hand() {
    let d = delta_series(10);
    assert_eq!(d.leading_exponent(), Some((1, 1)));
    assert_eq!(d.coefficient(1, 1), rat(1));
    // (1-q)^24 (1-q^2)^24 ... = 1 - 24q + (binom(24,2) - 24) q^2 + O(q^3)
    // so tau(2) = -24 and tau(3) = 276 - 24 = 252.
    assert_eq!(d.coefficient(2, 1), rat(-24));
    assert_eq!(d.coefficient(3, 1), rat(252));
}

#[test]
fn tau_multiplicativity_spot_check() {
    let d = delta_series(8);
    let t2 = d.coefficient(2, 1);
    let t3 = d.coefficient(3, 1);
    let t6 = d.coefficient(6, 1);
    assert_eq!(t6, &t2 * &t3);
}

#[test]
fn delta_n_leading_exponents() {
    // N = 1 is Delta itself.
    let d1 = delta_n_series(1, 20).unwrap();
    let d = delta_series(20);
    for e in 1..=20 {
        assert_eq!(d1.coefficient(e, 1), d.coefficient(e, 1));
    }
    // N = p: Delta(pz)/Delta(z) leads with q^{p-1}.
    for p in [2u64, 3, 5, 7] {
        let dp = delta_n_series(p, 30).unwrap();
        assert_eq!(dp.leading_exponent(), Some((p as i64 - 1, 1)));
        assert_eq!(*dp.leading_coefficient().unwrap(), rat(1));
    }
    // N = 6: leading exponent 6 - 3 - 2 + 1 = 2.
    let d6 = delta_n_series(6, 40).unwrap();
    assert_eq!(d6.leading_exponent(), Some((2, 1)));
    assert!(delta_n_series(12, 10).is_err());
}

#[test]
fn delta_n_times_inverse_is_one() {
    for n in [6u64, 10, 15] {
        let dn = delta_n_series(n, 60).unwrap();
        let prod = dn.mul(&dn.inverse().unwrap());
        assert!(prod.is_one(), "Delta_{n} * Delta_{n}^-1 != 1 + O(q^M)");
    }
}

#[test]
fn cusp_divisor_of_delta_n() {
    // N = 6 -> 2(P1 - P2 - P3 + P6).
    let d6 = div_delta_n(6).unwrap();
    assert_eq!(d6.coefficient(1), 2);
    assert_eq!(d6.coefficient(2), -2);
    assert_eq!(d6.coefficient(3), -2);
    assert_eq!(d6.coefficient(6), 2);
    assert_eq!(d6.degree(), 0);

    for n in 2..=210u64 {
        if is_squarefree(n) {
            assert_eq!(div_delta_n(n).unwrap().degree(), 0, "degree != 0 at N = {n}");
        }
    }
    assert!(div_delta_n(1).is_err());
}

#[test]
fn cusp_infinity_coefficient_matches_series_order() {
    // The cusp at infinity is P_N (width 1), so the q-order of Delta_N equals
    // the divisor coefficient there.  Audit for prime and composite levels.
    for n in [2u64, 3, 5, 6, 10, 15, 30] {
        let div = div_delta_n(n).unwrap();
        let series = delta_n_series(n, 40).unwrap();
        let (le, den) = series.leading_exponent().unwrap();
        assert_eq!(den, 1);
        assert_eq!(le, div.coefficient(n), "order/divisor mismatch at N = {n}");
    }
}

#[test]
fn lambda_decomposition_small_cases() {
    let d = lambda_decomposition(6, 2).unwrap();
    assert_eq!(d.kappa, 4);
    assert_eq!(d.lambdas, vec![(1, 8), (3, -8)]);
    assert!(d.identity_holds);

    // N = p prime, p0 = p: kappa = 1, single Lambda_1 = -(p - 1) since
    // mu(N/1) = mu(p) = -1; consistent with div(Delta_p) = (p-1)(P_p - P_1)
    // because Lambda_1 (P_1 - P_p) = (p-1)(P_p - P_1).
    for p in [2u64, 3, 5, 13] {
        let d = lambda_decomposition(p, p).unwrap();
        assert_eq!(d.kappa, 1);
        assert_eq!(d.lambdas, vec![(1, -(p as i64 - 1))]);
        assert!(d.identity_holds);
    }

    assert!(lambda_decomposition(6, 5).is_err());
    assert!(lambda_decomposition(12, 2).is_err());
}

#[test]
fn lambda_identity_exhaustive_to_210() {
    for n in 2..=210u64 {
        if !is_squarefree(n) {
            continue;
        }
        for &(p0, _) in &prime_factors(n) {
            let d = lambda_decomposition(n, p0).unwrap();
            assert!(d.identity_holds, "identity fails at N = {n}, p0 = {p0}");
        }
    }
}

#[test]
fn eisenstein_e1_is_e2() {
    let e = eisenstein_en(1, 10).unwrap();
    assert_eq!(e.coefficient(0, 1), rat(1));
    assert_eq!(e.coefficient(1, 1), rat(-24));
    assert_eq!(e.coefficient(2, 1), rat(-72)); // -24 sigma_1(2)
    let e2 = eisenstein_e2(10);
    for k in 0..=10 {
        assert_eq!(e.coefficient(k, 1), e2.coefficient(k, 1));
    }
}

#[test]
fn eisenstein_en_dual_route_agreement() {
    for n in [1u64, 2, 6, 10, 30] {
        let via_log = eisenstein_en(n, 100).unwrap();
        let via_e2 = eisenstein_en_via_e2(n, 100).unwrap();
        assert_eq!(
            via_e2.coefficient(0, 1).to_integer(),
            divisors(n)
                .iter()
                .map(|&d| moebius(d) * (n / d) as i64)
                .sum::<i64>()
                .into()
        );
        for k in 0..=100 {
            assert_eq!(
                via_log.coefficient(k, 1),
                via_e2.coefficient(k, 1),
                "E_{n} routes disagree at q^{k}"
            );
        }
    }
}

#[test]
fn fractional_exponent_substitution_roundtrip() {
    let d = delta_series(12);
    let half = d.substitute(1, 2);
    assert_eq!(half.leading_exponent(), Some((1, 2)));
    let back = half.substitute(2, 1);
    assert_eq!(back.leading_exponent(), Some((1, 1)));
    for e in 1..=12 {
        assert_eq!(back.coefficient(e, 1), d.coefficient(e, 1));
    }
    // Mixed-denominator arithmetic stays exact: the square of Delta(z/2) has
    // the coefficients of Delta^2 at halved exponents.
    let s = half.mul(&half);
    let dd = d.mul(&d);
    for e in 1..=6 {
        assert_eq!(s.coefficient(e, 1), dd.coefficient(2 * e, 1));
    }
}
