use hopfkirby::grpalg::{AcMove, FiniteGroup, Presentation};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Group arithmetic written independently of the Cayley-table code.
#[derive(Clone, Copy, Debug)]
pub enum Oracle {
    Cyclic(usize),
    S3,
}

pub type Perm = [usize; 3];

pub const S3: [Perm; 6] = [[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];

pub fn compose(a: &Perm, b: &Perm) -> Perm {
    [a[b[0]], a[b[1]], a[b[2]]]
}

pub fn invert(a: &Perm) -> Perm {
    let mut r = [0; 3];
    for i in 0..3 {
        r[a[i]] = i;
    }
    r
}

impl Oracle {
    pub fn order(self) -> usize {
        match self {
            Oracle::Cyclic(n) => n,
            Oracle::S3 => 6,
        }
    }

    pub fn group(self) -> FiniteGroup {
        match self {
            Oracle::Cyclic(n) => FiniteGroup::cyclic(n),
            Oracle::S3 => FiniteGroup::symmetric3(),
        }
    }

    pub fn is_identity(self, word: &[i32], a: &[usize]) -> bool {
        match self {
            Oracle::Cyclic(n) => {
                let s: i64 = word.iter().map(|&l| l.signum() as i64 * a[l.unsigned_abs() as usize - 1] as i64).sum();
                s.rem_euclid(n as i64) == 0
            }
            Oracle::S3 => {
                let mut acc = [0, 1, 2];
                for &l in word {
                    let x = S3[a[l.unsigned_abs() as usize - 1]];
                    acc = compose(&acc, &if l > 0 { x } else { invert(&x) });
                }
                acc == [0, 1, 2]
            }
        }
    }

    pub fn count(self, p: &Presentation) -> u64 {
        let n = p.n_generators;
        let ord = self.order();
        let mut c = 0;
        for k in 0..ord.pow(n as u32) {
            let a: Vec<usize> = (0..n).map(|i| k / ord.pow(i as u32) % ord).collect();
            if p.relators.iter().all(|r| self.is_identity(r, &a)) {
                c += 1;
            }
        }
        c
    }
}

pub const GROUPS: [Oracle; 4] = [Oracle::Cyclic(2), Oracle::Cyclic(3), Oracle::Cyclic(6), Oracle::S3];

pub fn random_word(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> Vec<i32> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            let g = rng.gen_range(1..=n as i32);
            if rng.gen() {
                g
            } else {
                -g
            }
        })
        .collect()
}

pub fn random_presentation(rng: &mut ChaCha8Rng) -> Presentation {
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=3);
    let rels = (0..m).map(|_| random_word(rng, n, 6)).collect();
    Presentation::new(n, rels).unwrap()
}

pub fn random_move(rng: &mut ChaCha8Rng, p: &Presentation) -> AcMove {
    let m = p.relators.len();
    if p.n_generators == 0 || m == 0 {
        return AcMove::AddGenerator(vec![]);
    }
    match rng.gen_range(0..6) {
        0 => AcMove::Swap(rng.gen_range(0..m), rng.gen_range(0..m)),
        1 => {
            let g = rng.gen_range(1..=p.n_generators as i32);
            AcMove::Conjugate(rng.gen_range(0..m), vec![if rng.gen() { g } else { -g }])
        }
        2 => AcMove::Invert(rng.gen_range(0..m)),
        3 => AcMove::Multiply(rng.gen_range(0..m), rng.gen_range(0..m)),
        4 => AcMove::AddGenerator(random_word(rng, p.n_generators, 3)),
        _ => AcMove::RemoveGenerator,
    }
}
