use num_bigint::BigInt;
use num_rational::BigRational;
use randlochs::lochs::{lochs_series, LochsOptions, SymbolSource};
use randlochs::montecarlo::AmbiguityPolicy;
use randlochs::numeric::{Backend, Scalar};
use randlochs::oracle::{brute_force_m, Oracle};
use randlochs::systems::{FiberedMapFamily, Symbol};

fn fiber(pattern: u64, len: usize) -> Vec<Symbol> {
    (0..len).map(|i| Symbol(if (pattern >> (i % 64)) & 1 == 1 { 3 } else { 2 })).collect()
}

fn opts(backend: Backend) -> LochsOptions {
    LochsOptions { backend, policy: AmbiguityPolicy::Escalate { max_prec: 4096 }, depth_cap: 200 }
}

#[test]
fn random_base_against_decimal_matches_brute_force() {
    let t = FiberedMapFamily::integer_base(&[2, 3]).unwrap();
    let s = FiberedMapFamily::integer_base(&[10]).unwrap();
    let ot = Oracle::new(&t, None).unwrap();
    let os = Oracle::new(&s, None).unwrap();
    let ws = vec![Symbol(10); 40];
    for k in 1..40u64 {
        let x = BigRational::new(BigInt::from(k * 25 + 3), BigInt::from(997));
        let wt = fiber(k.wrapping_mul(0x9e37_79b9_7f4a_7c15), 10);
        let series = lochs_series(&t, &wt, &s, SymbolSource::Slice(&ws), &Scalar::Rational(x.clone()), &opts(Backend::Rational)).unwrap();
        for n in 1..=10 {
            let (_, c) = ot.cylinder_of_point(&wt, &x, n).unwrap();
            let m = brute_force_m(&c, &os, &ws, &x, 12).unwrap();
            assert_eq!(series.m[n], m, "x = {x}, n = {n}");
        }
    }
}

#[test]
fn decimal_against_binary_float_and_exact_agree() {
    let t = FiberedMapFamily::integer_base(&[10]).unwrap();
    let s = FiberedMapFamily::integer_base(&[2]).unwrap();
    let wt = vec![Symbol(10); 30];
    let ws = vec![Symbol(2); 200];
    let ot = Oracle::new(&t, None).unwrap();
    let os = Oracle::new(&s, None).unwrap();
    for k in [1u64, 17, 123, 4567, 89012] {
        let x = BigRational::new(BigInt::from(k), BigInt::from(99991));
        let exact = lochs_series(&t, &wt, &s, SymbolSource::Slice(&ws), &Scalar::Rational(x.clone()), &opts(Backend::Rational)).unwrap();
        let float = lochs_series(&t, &wt, &s, SymbolSource::Slice(&ws), &Scalar::Rational(x.clone()), &opts(Backend::Float { prec: 256 })).unwrap();
        assert_eq!(exact.m, float.m);
        for n in 1..=3 {
            let (_, c) = ot.cylinder_of_point(&wt, &x, n).unwrap();
            assert_eq!(exact.m[n], brute_force_m(&c, &os, &ws, &x, 16).unwrap());
        }
    }
}
