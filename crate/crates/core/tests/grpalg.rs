mod common;

use hopfkirby::center::compute_center;
use hopfkirby::grpalg::{ac_move, group_algebra, hom_count, AcMove, FiniteGroup, Presentation};
use hopfkirby::CycNum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::groups::{compose, random_move, random_presentation, Oracle, GROUPS, S3};

#[test]
fn hom_count_examples() {
    let empty = Presentation::new(0, vec![vec![]]).unwrap();
    for g in GROUPS {
        assert_eq!(hom_count(&empty, &g.group()).unwrap(), 1);
    }
    let xsq = Presentation::parse("generators 1\n+1 +1\n").unwrap();
    assert_eq!(hom_count(&xsq, &FiniteGroup::cyclic(2)).unwrap(), 2);
    assert_eq!(Oracle::Cyclic(2).count(&xsq), 2);
    let comm = Presentation::parse("generators 2\n+1 +2 -1 -2\n").unwrap();
    assert_eq!(hom_count(&comm, &FiniteGroup::symmetric3()).unwrap(), 18);
    // commuting pairs counted straight from the permutations
    let pairs = S3
        .iter()
        .flat_map(|a| S3.iter().map(move |b| (a, b)))
        .filter(|(a, b)| compose(a, b) == compose(b, a))
        .count();
    assert_eq!(pairs, 18);
}

#[test]
fn hom_count_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pairs = 0;
    for _ in 0..12 {
        let p = random_presentation(&mut rng);
        for g in GROUPS {
            assert_eq!(hom_count(&p, &g.group()).unwrap(), g.count(&p), "{p} in {g:?}");
            pairs += 1;
        }
    }
    assert!(pairs >= 20);
}

#[test]
fn ac_moves_preserve_hom_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut sequences = 0;
    let mut applied = 0;
    while sequences < 60 {
        let p0 = random_presentation(&mut rng);
        let counts: Vec<u64> = GROUPS.iter().map(|g| hom_count(&p0, &g.group()).unwrap()).collect();
        let mut p = p0.clone();
        for _ in 0..8 {
            let mv = random_move(&mut rng, &p);
            if matches!(mv, AcMove::AddGenerator(_)) && p.n_generators >= 4 {
                continue;
            }
            let Ok(next) = ac_move(&p, &mv) else { continue };
            applied += 1;
            p = next;
        }
        for (g, c) in GROUPS.iter().zip(&counts) {
            assert_eq!(hom_count(&p, &g.group()).unwrap(), *c, "{p0} -> {p} in {g:?}");
        }
        sequences += 1;
    }
    assert!(applied > 200, "only {applied} moves applied");
}

#[test]
fn ac_move_examples() {
    let p = Presentation::new(2, vec![vec![1, 2], vec![-2]]).unwrap();
    let m = ac_move(&p, &AcMove::Multiply(0, 1)).unwrap();
    assert_eq!(m.relators, vec![vec![1, 2, -2], vec![-2]]);
    let x = Presentation::new(1, vec![vec![1]]).unwrap();
    assert_eq!(ac_move(&x, &AcMove::Invert(0)).unwrap().relators, vec![vec![-1]]);
    let added = ac_move(&x, &AcMove::AddGenerator(vec![1, 1])).unwrap();
    assert_eq!(added.n_generators, 2);
    assert_eq!(added.relators[1], vec![2, 1, 1]);
    assert_eq!(ac_move(&added, &AcMove::RemoveGenerator).unwrap(), x);
    assert!(ac_move(&x, &AcMove::RemoveGenerator).is_ok());
    let y = Presentation::new(1, vec![vec![1, 1]]).unwrap();
    assert!(ac_move(&y, &AcMove::RemoveGenerator).is_err());
    assert!(ac_move(&x, &AcMove::Multiply(0, 0)).is_err());
    assert!(ac_move(&x, &AcMove::Swap(0, 3)).is_err());
}

#[test]
fn wedge_is_multiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let a = random_presentation(&mut rng);
        let b = random_presentation(&mut rng);
        for g in [FiniteGroup::cyclic(3), FiniteGroup::symmetric3()] {
            let ab = hom_count(&a.wedge(&b), &g).unwrap();
            assert_eq!(ab, hom_count(&a, &g).unwrap() * hom_count(&b, &g).unwrap());
        }
    }
}

#[test]
fn group_algebra_examples() {
    let h = group_algebra(&FiniteGroup::cyclic(2), 5).unwrap();
    assert_eq!(h.dim, 2);
    assert_eq!(h.lambda(&h.integral), CycNum::one(5));
    let h3 = group_algebra(&FiniteGroup::cyclic(3), 5).unwrap();
    assert_eq!(h3.counit(&h3.integral), CycNum::from_int(5, 3));
    let cb = compute_center(&h3, &h3.generators);
    assert_eq!(cb.dim_z(), 3);
    // the λ-pairing of k[G] is nondegenerate
    assert_eq!(cb.dim_k(), 0);
    let s3 = group_algebra(&FiniteGroup::symmetric3(), 5).unwrap();
    assert_eq!(compute_center(&s3, &s3.generators).dim_z(), 3);
}

#[test]
fn invalid_tables_rejected() {
    let broken = vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 0]];
    assert!(FiniteGroup::from_table(broken).is_err());
    assert!(FiniteGroup::parse_csv("0,1\n1,1\n").is_err());
    assert!(FiniteGroup::parse_csv("0,1\n1,0\n").is_ok());
    let big = Presentation::new(11, vec![]).unwrap();
    assert!(hom_count(&big, &FiniteGroup::symmetric3()).is_err());
}
