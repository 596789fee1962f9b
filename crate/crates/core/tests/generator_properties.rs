use doublewell::environment::{cross_coupled_strengths, random_psd_strengths, CorrelationModel, Matrix4c};
use doublewell::fockspace::{random_operator, random_state, FockBasis, OperatorMatrix};
use doublewell::generator::LindbladGenerator;
use doublewell::model::ModelParams;
use doublewell::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn all_limits(basis: &FockBasis, p: &ModelParams, seed: u64) -> Vec<LindbladGenerator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_psd_strengths(&mut rng);
    let exp = CorrelationModel::exponential(g, 1.7).unwrap();
    let delta = CorrelationModel::delta_hermitian(g).unwrap();
    let mut gens = vec![
        LindbladGenerator::weak_coupling_auto(basis, p, &exp, true).unwrap(),
        LindbladGenerator::singular_coupling(basis, p, &delta).unwrap(),
    ];
    if p.is_symmetric() {
        gens.push(LindbladGenerator::weak_coupling(basis, p, &exp, false).unwrap());
    }
    gens
}

#[test]
fn spectrum_lies_in_the_closed_left_half_plane() {
    for n_max in [2, 3] {
        let b = FockBasis::new(n_max).unwrap();
        for p in [
            ModelParams::new(0.01, 1.0, 0.5, 0.5, 0.05).unwrap(),
            ModelParams::new(0.3, 0.7, 0.1, 0.6, 0.4).unwrap(),
        ] {
            for gen in all_limits(&b, &p, n_max as u64) {
                let sup = gen.superoperator_matrix().unwrap();
                let eig = sup.schur().eigenvalues().unwrap();
                let top = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                assert!(top <= 1e-10, "n_max = {n_max}: {top:e}");
                assert!(top > -1e-10, "no stationary state: {top:e}");
            }
        }
    }
}

#[test]
fn closed_diagonal_limit_has_a_diagonal_superoperator() {
    let b = FockBasis::new(3).unwrap();
    let p = ModelParams::new(0.0, 1.0, 0.2, 0.4, 0.05).unwrap();
    let zero = CorrelationModel::exponential(Matrix4c::zeros(), 1.0).unwrap();
    let gen = LindbladGenerator::weak_coupling_auto(&b, &p, &zero, false).unwrap();
    let sup = gen.superoperator_matrix().unwrap();
    let dim = b.dim();
    let energy = |i: usize| {
        let (n1, n2) = b.occupations(i);
        let (n1, n2) = (n1 as f64, n2 as f64);
        n1 * n1 + n2 * n2 + 0.2 * n1 + 0.4 * n2
    };
    for r in 0..sup.nrows() {
        for c in 0..sup.ncols() {
            if r != c {
                assert_eq!(sup[(r, c)], C64::new(0.0, 0.0));
            }
        }
        // column stacking: entry (i, j) of rho sits at j * dim + i
        let (i, j) = (r % dim, r / dim);
        let expected = C64::new(0.0, -(energy(i) - energy(j)));
        assert!((sup[(r, r)] - expected).norm() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_hermiticity_and_unitality(
        t in 0.0..0.5f64,
        u in 0.1..2.0f64,
        e1 in -1.0..1.0f64,
        de in prop_oneof![Just(0.0), 0.05..0.8f64],
        lambda in 0.01..0.5f64,
        seed in 0u64..1000,
    ) {
        let b = FockBasis::new(3).unwrap();
        let p = ModelParams::new(t, u, e1, e1 + de, lambda).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for gen in all_limits(&b, &p, seed) {
            let rho = random_state(&b, 4, &mut rng).unwrap();
            let out = gen.apply_schrodinger(rho.operator()).unwrap();
            prop_assert!(out.trace().norm() < 1e-12);
            prop_assert!(out.hermiticity_error() < 1e-12);

            let id = gen.apply_dual(&b.identity()).unwrap();
            prop_assert!(id.max_abs() < 1e-12);

            let x = random_operator(&b, &mut rng);
            let h: OperatorMatrix = &x + &x.adjoint();
            prop_assert!(gen.apply_dual(&h).unwrap().hermiticity_error() < 1e-11);

            for block in gen.blocks() {
                prop_assert!(block.min_eigenvalue() >= -1e-10);
            }
        }
    }

    #[test]
    fn singular_current_slope_ignores_the_hamiltonian(
        t in 0.0..0.5f64,
        u in 0.1..2.0f64,
        e1 in -1.0..1.0f64,
        e2 in -1.0..1.0f64,
    ) {
        let b = FockBasis::new(4).unwrap();
        let delta = CorrelationModel::delta_hermitian(cross_coupled_strengths(0.3, 0.1)).unwrap();
        let rho0 = doublewell::fockspace::fock_state(&b, 2, 2).unwrap();
        let p = ModelParams::new(t, u, e1, e2, 0.05).unwrap();
        let gen = LindbladGenerator::singular_coupling(&b, &p, &delta).unwrap();
        let slope = doublewell::evolution::current_slope(&gen, &rho0).unwrap();
        prop_assert!((slope - 1.0e-3).abs() < 1e-15);
    }
}
