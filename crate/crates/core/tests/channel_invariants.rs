use proptest::prelude::*;
use puritylab::channels::{
    cq_map, depolarizing, hadamard_map, identity_map, qc_map, random_channel, random_cp, trace_channel, CPMap,
    ChannelSpec,
};
use puritylab::matlin::{kron, trace_product, ComplexMatrix, HermitianMatrix};
use puritylab::rng::{gaussian_matrix, random_psd, rng_from_seed};

fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.sub(b).frobenius_norm() <= tol * b.frobenius_norm().max(1.0)
}

/// `Φ(A) = Σ_k K_k A K_k*` written out directly.
fn kraus_oracle(ops: &[ComplexMatrix], a: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(ops[0].rows(), ops[0].rows());
    for k in ops {
        out = out.add(&k.matmul(a).matmul(&k.adjoint()));
    }
    out
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..4, 1usize..4, 1usize..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn choi_and_kraus_agree(seed in any::<u64>(), (din, dout, r) in dims()) {
        let mut rng = rng_from_seed(seed);
        let ops: Vec<_> = (0..r).map(|_| gaussian_matrix(dout, din, &mut rng)).collect();
        let phi = CPMap::from_kraus(ops.clone()).unwrap();
        let a = gaussian_matrix(din, din, &mut rng);
        let expect = kraus_oracle(&ops, &a);
        prop_assert!(close(&phi.apply_choi(&a).unwrap(), &expect, 1e-10));
        prop_assert!(close(&phi.apply_kraus(&a).unwrap(), &expect, 1e-10));
        let rebuilt = CPMap::from_choi(phi.choi().clone(), din, dout).unwrap();
        prop_assert!(close(&rebuilt.apply(&a).unwrap(), &expect, 1e-9));
    }

    #[test]
    fn adjoint_duality(seed in any::<u64>(), (din, dout, r) in dims()) {
        let mut rng = rng_from_seed(seed);
        let phi = random_cp(din, dout, r, seed).unwrap();
        let a = gaussian_matrix(din, din, &mut rng);
        let b = gaussian_matrix(dout, dout, &mut rng);
        let lhs = trace_product(&b.adjoint(), &phi.apply(&a).unwrap());
        let rhs = trace_product(&phi.apply_adjoint(&b).unwrap().adjoint(), &a);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
        let adj = phi.adjoint();
        prop_assert!(close(&adj.apply(&b).unwrap(), &phi.apply_adjoint(&b).unwrap(), 1e-10));
        prop_assert_eq!(adj.adjoint(), phi);
    }

    #[test]
    fn tensor_acts_on_products(seed in any::<u64>(), d in 1usize..4, n in 1usize..4) {
        let mut rng = rng_from_seed(seed);
        let phi = random_channel(d, d, 2, seed).unwrap();
        let omega = random_cp(n, n, 2, seed ^ 1).unwrap();
        let (a, b) = (gaussian_matrix(d, d, &mut rng), gaussian_matrix(n, n, &mut rng));
        let t = phi.tensor(&omega).unwrap();
        let lhs = t.apply(&kron(&a, &b)).unwrap();
        let rhs = kron(&phi.apply(&a).unwrap(), &omega.apply(&b).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-10));
    }

    #[test]
    fn random_channels_are_trace_preserving(seed in any::<u64>(), (din, dout, env) in dims()) {
        let phi = random_channel(din, dout, env.max(din.div_ceil(dout)), seed).unwrap();
        prop_assert!(phi.is_trace_preserving());
        let a = random_psd(din, din, &mut rng_from_seed(seed));
        let out = phi.apply_herm(&a).unwrap();
        prop_assert!((out.trace() - a.trace()).abs() <= 1e-10 * a.trace().max(1.0));
        prop_assert!(out.is_psd());
    }

    #[test]
    fn conjugate_conjugates_outputs(seed in any::<u64>(), d in 1usize..4) {
        let phi = random_cp(d, d, 2, seed).unwrap();
        let a = gaussian_matrix(d, d, &mut rng_from_seed(seed));
        let lhs = phi.conjugate().apply(&a.conj()).unwrap();
        prop_assert!(close(&lhs, &phi.apply(&a).unwrap().conj(), 1e-10));
    }

    #[test]
    fn cq_and_qc_are_adjoint_families(seed in any::<u64>(), d in 1usize..4, k in 1usize..4) {
        let mut rng = rng_from_seed(seed);
        let states: Vec<_> = (0..d).map(|_| random_psd(k, 1, &mut rng)).collect();
        let cq = cq_map(states.clone()).unwrap();
        prop_assert!(cq.is_cq());
        let qc = cq.adjoint();
        prop_assert!(qc.is_qc());
        let direct = qc_map(states, d).unwrap();
        let b = gaussian_matrix(k, k, &mut rng);
        prop_assert!(close(&qc.apply(&b).unwrap(), &direct.apply(&b).unwrap(), 1e-10));
    }
}

#[test]
fn named_maps() {
    let a = gaussian_matrix(3, 3, &mut rng_from_seed(1));
    assert!(close(&identity_map(3).apply(&a).unwrap(), &a, 1e-14));
    let t = trace_channel(3).apply(&a).unwrap();
    assert!((t[(0, 0)] - a.trace()).norm() < 1e-12);
    // Δ_λ(ρ) = λρ + (1-λ) Tr(ρ) I/d
    let dep = depolarizing(3, 0.4).unwrap().apply(&a).unwrap();
    let expect = a.scale_real(0.4).add(&ComplexMatrix::identity(3).scale(a.trace() * 0.6 / 3.0));
    assert!(close(&dep, &expect, 1e-12));
    let c = random_psd(3, 2, &mut rng_from_seed(2));
    let h = hadamard_map(c.clone()).unwrap().apply(&a).unwrap();
    assert!(close(&h, &c.as_matrix().hadamard(&a), 1e-12));
    assert!(depolarizing(2, -0.5).is_err());
    assert!(depolarizing(2, -1.0 / 3.0).is_ok());
}

#[test]
fn spec_round_trip_and_diagnostics() {
    let spec = ChannelSpec::from_json_str(
        r#"{"kind":"tensor","factors":[{"kind":"depolarizing","d":2,"lambda":0.5},{"kind":"adjoint","of":{"kind":"trace","d":2}}]}"#,
    )
    .unwrap();
    let again = ChannelSpec::from_json_str(&spec.to_json_string()).unwrap();
    assert_eq!(spec, again);
    let map = spec.build().unwrap();
    assert_eq!((map.d_in(), map.d_out()), (2, 4));
    let err = ChannelSpec::from_json_str(r#"{"kind":"identity","d":2,"extra":1}"#).unwrap_err().to_string();
    assert!(err.contains("extra"), "{err}");
    let err = ChannelSpec::from_json_str(r#"{"kind":"nope"}"#).unwrap_err().to_string();
    assert!(err.contains("nope"), "{err}");
    let h = HermitianMatrix::identity(2);
    assert!(cq_map(vec![h.clone(), h]).is_ok());
}
