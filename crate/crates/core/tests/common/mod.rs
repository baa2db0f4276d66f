#![allow(dead_code)]

pub mod groups;

use std::path::PathBuf;
use std::sync::OnceLock;

use hopfkirby::center::{kerler_basis, CenterBasis, KerlerBasis};
use hopfkirby::kirby::Diagram;
use hopfkirby::uqsl2::build_uqsl2;
use hopfkirby::{AlgElem, HopfData};

pub struct Sl2 {
    pub h: HopfData,
    pub kb: KerlerBasis,
    pub cb: CenterBasis,
}

impl Sl2 {
    /// `(name, z)` for the four trace elements `1, Λ, P_0, z_RT`.
    pub fn trace_elements(&self) -> Vec<(&'static str, AlgElem)> {
        vec![
            ("1", self.h.unit.clone()),
            ("Lambda", self.h.integral.clone()),
            ("P_0", self.kb.p_elems[0].clone()),
            ("z_RT", self.kb.z_rt()),
        ]
    }
}

fn build(p: u32) -> Sl2 {
    let h = build_uqsl2(p).unwrap();
    let kb = kerler_basis(&h).unwrap();
    let cb = kb.center_basis(&h).unwrap();
    Sl2 { h, kb, cb }
}

pub fn sl2(p: u32) -> &'static Sl2 {
    static P5: OnceLock<Sl2> = OnceLock::new();
    static P7: OnceLock<Sl2> = OnceLock::new();
    match p {
        5 => P5.get_or_init(|| build(5)),
        7 => P7.get_or_init(|| build(7)),
        _ => panic!("no cached algebra for p = {p}"),
    }
}

pub fn testdata() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../testdata")
}

/// The closed-diagram corpus as `(file name, diagram)`.
pub fn corpus() -> Vec<(String, Diagram)> {
    let mut files: Vec<_> = std::fs::read_dir(testdata().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "kbl"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p.file_name().unwrap().to_string_lossy().into_owned(), Diagram::parse(&text).unwrap())
        })
        .collect()
}
