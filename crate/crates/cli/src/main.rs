use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hopfkirby::center::{
    classify_trace_element, delta_pairing, delta_witness, enumerate_tz, fusion_coefficients, j_map, kerler_basis, CenterBasis,
    CenterError, KerlerBasis,
};
use hopfkirby::cyclo::{qint, CycNum};
use hopfkirby::grpalg::{group_algebra, hom_count, FiniteGroup, Presentation};
use hopfkirby::hkr::{
    self, boundary_prepared, invariant_prepared, prepare, Coloring, Engine, Prepared, Value,
};
use hopfkirby::hopf::{axiom_report, HopfData, HopfError, Samples};
use hopfkirby::kirby::{
    apply_move, builders, extract_presentation, linking_data, random_isotopy_move, Diagram, Move,
};
use hopfkirby::uqsl2::build_uqsl2;
use hopfkirby::AlgElem;

#[derive(Parser)]
#[command(name = "hopfkirby", version, about = "Exact HKR invariants of Kirby diagrams")]
struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the Hopf, quasitriangular and ribbon axioms.
    CheckAxioms {
        #[arg(long)]
        p: u32,
        /// Check every basis pair and triple instead of a sample.
        #[arg(long)]
        all: bool,
        /// Use the group algebra of this group instead of quantum sl(2).
        #[arg(long)]
        group: Option<String>,
    },
    /// Center, Kerler basis, λ-values and the 𝒯_Z rays.
    Center {
        #[arg(long)]
        p: u32,
    },
    /// Classify the 𝒯_Z rays against 𝒯³ and 𝒯⁴.
    TraceElements {
        #[arg(long)]
        p: u32,
    },
    /// Fusion coefficients `ε_ij^s`.
    Fusion {
        #[arg(long)]
        p: u32,
    },
    /// Evaluate a diagram colored by a trace element.
    Invariant {
        #[arg(long)]
        p: u32,
        #[command(flatten)]
        z: ZArg,
        #[command(flatten)]
        src: DiagramArg,
        /// Apply the boundary normalization (ignores `color` directives).
        #[arg(long)]
        boundary: bool,
        /// Fail unless the value is rational.
        #[arg(long)]
        rational_only: bool,
        #[arg(long, value_enum, default_value_t = EngineArg::Slice)]
        engine: EngineArg,
    },
    /// Boundary invariant of the lens space `L(n,1)`.
    Lens {
        #[arg(long)]
        p: u32,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[command(flatten)]
        z: ZArg,
    },
    /// Unknot values λ(θⁿ), λ(z_RT θⁿ), λ(P_0 θⁿ) and the product identity.
    TableHrt {
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 5)]
        nmax: i64,
    },
    /// Count homomorphisms from a presented group to a finite group.
    HomCount {
        /// Cayley CSV file or one of z2, z3, z6, s3.
        #[arg(long)]
        group: String,
        #[arg(long)]
        pres: PathBuf,
    },
    /// Extracted presentation and linking data of a diagram.
    Presentation {
        #[command(flatten)]
        src: DiagramArg,
    },
    /// Random isotopy walk checking that the invariant does not change.
    MovesCheck {
        #[arg(long)]
        p: u32,
        #[command(flatten)]
        z: ZArg,
        #[command(flatten)]
        src: DiagramArg,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Skip walks that grow past this many rows.
        #[arg(long, default_value_t = 30)]
        max_rows: usize,
    },
}

#[derive(Args)]
struct ZArg {
    /// one, lambda, p0, zrt or file:PATH
    #[arg(long, default_value = "one")]
    z: String,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DiagramArg {
    /// `.kbl` file.
    #[arg(long)]
    diagram: Option<PathBuf>,
    /// Builder such as "unknot 2", "hopf", "lens 3", "s1xd3", "cancel-pair".
    #[arg(long, allow_hyphen_values = true)]
    builder: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Slice,
    Sum,
}

/// Marks an internal consistency failure (exit code 2).
#[derive(Debug)]
struct Internal(String);

impl std::fmt::Display for Internal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal consistency error: {}", self.0)
    }
}

impl std::error::Error for Internal {}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Internal>()
            || matches!(cause.downcast_ref::<CenterError>(), Some(CenterError::Consistency(_)))
            || matches!(cause.downcast_ref::<HopfError>(), Some(HopfError::Structural(_)))
        {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.cmd) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Sl2 {
    h: HopfData,
    kb: KerlerBasis,
    cb: CenterBasis,
}

impl Sl2 {
    fn new(p: u32) -> Result<Self> {
        let h = build_uqsl2(p)?;
        let kb = kerler_basis(&h)?;
        let cb = kb.center_basis(&h)?;
        Ok(Sl2 { h, kb, cb })
    }

    fn named(&self, name: &str) -> Option<AlgElem> {
        let h = &self.h;
        let kb = &self.kb;
        let idx = |prefix: &str, suffix: &str| -> Option<usize> {
            name.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok()
        };
        let pick = |v: &[AlgElem], i: Option<usize>| i.and_then(|i| v.get(i).cloned());
        match name {
            "one" | "1" => Some(h.unit.clone()),
            "lambda" | "Lambda" => Some(h.integral.clone()),
            "p0" => Some(kb.p_elems[0].clone()),
            "zrt" => Some(kb.z_rt()),
            _ if name.starts_with("Ndot_") => pick(&kb.ndot_minus, idx("Ndot_", "^-")),
            _ if name.ends_with("^+") => pick(&kb.n_plus, idx("N_", "^+")),
            _ if name.ends_with("^-") => pick(&kb.n_minus, idx("N_", "^-")),
            _ if name.starts_with("N_") => pick(&kb.n, idx("N_", "")),
            _ => pick(&kb.p_elems, idx("P_", "")),
        }
    }

    /// `one`, `lambda`, `p0`, `zrt` or `file:PATH`, where the file lists lines
    /// `NAME [COEFF]` over the names above and `P_i`, `N_i`, `N_i^±`, `Ndot_i^-`.
    fn element(&self, spec: &str) -> Result<AlgElem> {
        if let Some(path) = spec.strip_prefix("file:") {
            let text = read(Path::new(path))?;
            let mut acc = AlgElem::zero();
            for (ln, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (name, coeff) = line.split_once(char::is_whitespace).unwrap_or((line, "1"));
                let e = self
                    .named(name)
                    .ok_or_else(|| anyhow!("{path}:{}: unknown element `{name}`", ln + 1))?;
                let c = CycNum::parse(self.h.p, coeff.trim())
                    .with_context(|| format!("{path}:{}", ln + 1))?;
                acc.add_scaled(&e, &c);
            }
            return Ok(acc);
        }
        match spec {
            "one" | "lambda" | "p0" | "zrt" => Ok(self.named(spec).unwrap()),
            _ => bail!("unknown trace element `{spec}` (one, lambda, p0, zrt, file:PATH)"),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_diagram(src: &DiagramArg) -> Result<Diagram> {
    match (&src.diagram, &src.builder) {
        (Some(path), _) => {
            Diagram::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
        }
        (None, Some(b)) => builders::by_name(b).ok_or_else(|| anyhow!("unknown builder `{b}`")),
        (None, None) => bail!("give --diagram or --builder"),
    }
}

fn load_group(spec: &str) -> Result<FiniteGroup> {
    Ok(match spec {
        "z2" => FiniteGroup::cyclic(2),
        "z3" => FiniteGroup::cyclic(3),
        "z6" => FiniteGroup::cyclic(6),
        "s3" => FiniteGroup::symmetric3(),
        path => FiniteGroup::parse_csv(&read(Path::new(path))?)
            .with_context(|| format!("parsing {path}"))?,
    })
}

fn scalar(v: Value) -> Result<CycNum> {
    match v {
        Value::Scalar(c) => Ok(c),
        Value::Tensor(_) => bail!("diagram is an open tangle"),
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn run(cmd: Cmd) -> Result<String> {
    let mut out = String::new();
    macro_rules! line {
        ($($t:tt)*) => {{ out.push_str(&format!($($t)*)); out.push('\n'); }};
    }
    match cmd {
        Cmd::CheckAxioms { p, all, group } => {
            let h = match group {
                Some(g) => group_algebra(&load_group(&g)?, p)?,
                None => build_uqsl2(p)?,
            };
            let samples = if all { Samples::All } else { Samples::default() };
            let report = axiom_report(&h, &samples);
            line!("algebra {} (dim {})", h.name, h.dim);
            out.push_str(&report.to_string());
            if !report.all_passed() {
                print!("{out}");
                return Err(Internal(format!("{} axiom(s) failed", report.failed().len())).into());
            }
        }
        Cmd::Center { p } => {
            let s = Sl2::new(p)?;
            let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
            let q = kb.q as usize;
            line!("p {p}  q {q}");
            line!("dim Z {}  dim K {}  dim Zhat {}", cb.dim_z(), cb.dim_k(), cb.dim_zhat());
            kb.verify_products(h)?;
            line!("Kerler product table: verified");
            for i in 0..=q {
                line!("lambda(P_{i}) = {}", h.lambda(&kb.p_elems[i]));
            }
            for i in 0..q {
                line!("lambda(N_{i}^-) = {}", h.lambda(&kb.n_minus[i]));
            }
            for i in 0..q {
                line!("lambda(Ndot_{i}^-) = {}", h.lambda(&kb.ndot_minus[i]));
            }
            let j1 = j_map(h, &h.unit)?;
            line!("[J(1)] coords {}", coords_str(&cb.class_coords(h, &j1)?));
            line!("class basis {}", cb.class_labels.join(" "));
            for (name, z) in enumerate_tz(h, kb, cb)? {
                line!("T_Z ray {name}: coords {}", coords_str(&cb.class_coords(h, &z)?));
            }
            let zrt = kb.z_rt();
            let p0z = h.mul(&kb.p_elems[0], &zrt);
            line!("[P_0 z_RT] coords {}", coords_str(&cb.class_coords(h, &p0z)?));
            line!("lambda(z_RT) = {}", h.lambda(&zrt));
            let mut names: Vec<String> = (0..=q).map(|i| format!("P_{i}")).collect();
            names.extend((0..q).map(|i| format!("N_{i}^+")));
            names.extend((0..q).map(|i| format!("N_{i}^-")));
            let (w, z) = (&kb.p_elems[1], &kb.p_elems[0]);
            match delta_witness(h, cb, w, z) {
                Some((a, b, c)) => {
                    let e = &cb.elements;
                    let val = delta_pairing(h, w, z, &e[a], &e[b], &e[c]);
                    line!("delta(w=P_1, z=P_0) witness ({}, {}, {}) = {val}", names[a], names[b], names[c]);
                }
                None => line!("delta(w=P_1, z=P_0) vanishes on all center triples"),
            }
        }
        Cmd::TraceElements { p } => {
            let s = Sl2::new(p)?;
            let (h, kb, cb) = (&s.h, &s.kb, &s.cb);
            let rib = h.ribbon_elements()?;
            for (name, z) in enumerate_tz(h, kb, cb)? {
                let r = classify_trace_element(h, cb, &z, None)?;
                line!("ray {name}");
                line!("  coords {}", coords_str(&r.coords));
                line!("  T_Z {}", yes(r.in_tz));
                line!("  T4 {}", yes(r.in_t4));
                if let Some((w, _)) = &r.t4_witness {
                    line!("  T4 witness coords {}", coords_str(&cb.class_coords(h, w)?));
                }
                match &r.x_z {
                    Some(x) => line!("  T3 {}  X_z = {x}", yes(r.in_t3)),
                    None => line!("  T3 no  ([zJ(z)] not a multiple of [Lambda])"),
                }
                line!("  C+ = {}", r.c_plus);
                line!("  C- = {}", r.c_minus);
                if let Some(x) = &r.x_z {
                    let cross = h.lambda_mul(&z, &rib.theta_inv) * h.lambda_mul(&z, &rib.theta);
                    if &cross != x {
                        return Err(Internal(format!("X_z ≠ C+C- for ray {name}")).into());
                    }
                }
            }
        }
        Cmd::Fusion { p } => {
            let s = Sl2::new(p)?;
            let eps = fusion_coefficients(&s.h, &s.kb)?;
            line!("# i j s eps (sigma ratio agrees with the rule)");
            for (i, a) in eps.iter().enumerate() {
                for (j, b) in a.iter().enumerate() {
                    for (k, e) in b.iter().enumerate() {
                        line!("{i} {j} {k} {e}");
                    }
                }
            }
        }
        Cmd::Invariant { p, z, src, boundary, rational_only, engine } => {
            let s = Sl2::new(p)?;
            let d = load_diagram(&src)?;
            let z = s.element(&z.z)?;
            let t = prepare(&s.h, &s.cb, &z, None)?;
            let v = if boundary {
                scalar(boundary_prepared(&s.h, &d, &t)?.value)?
            } else {
                let mut col = Coloring::uniform(&d, &t.z, &t.w)?;
                for (c, name) in &d.colors {
                    col.undotted[*c] = s.element(name)?;
                }
                let engine = match engine {
                    EngineArg::Slice => Engine::Slice,
                    EngineArg::Sum => Engine::Sum,
                };
                scalar(hkr::evaluate_with(&s.h, &d, &col, engine)?)?
            };
            if rational_only && v.to_rational().is_none() {
                bail!("value {v} is not rational");
            }
            line!("{v}");
        }
        Cmd::Lens { p, n, z } => {
            let s = Sl2::new(p)?;
            let z = s.element(&z.z)?;
            let t = prepare(&s.h, &s.cb, &z, None)?;
            let r = boundary_prepared(&s.h, &builders::lens(n), &t)?;
            line!("{}", scalar(r.value)?);
        }
        Cmd::TableHrt { p, nmax } => {
            let s = Sl2::new(p)?;
            out.push_str(&table_hrt(&s, nmax)?);
        }
        Cmd::HomCount { group, pres } => {
            let g = load_group(&group)?;
            let pr = Presentation::parse(&read(&pres)?)
                .with_context(|| format!("parsing {}", pres.display()))?;
            line!("{}", hom_count(&pr, &g)?);
        }
        Cmd::Presentation { src } => {
            let d = load_diagram(&src)?;
            let ld = linking_data(&d)?;
            out.push_str(&extract_presentation(&d)?.to_string());
            line!("# linking matrix {:?}", ld.matrix);
            line!(
                "# sigma+ {} sigma- {} sigma0 {} dotted {}",
                ld.sigma_plus,
                ld.sigma_minus,
                ld.sigma_zero,
                ld.n_dotted
            );
            line!("# framing parity {:?}", ld.parity);
        }
        Cmd::MovesCheck { p, z, src, steps, seed, max_rows } => {
            let s = Sl2::new(p)?;
            let z = s.element(&z.z)?;
            let d0 = load_diagram(&src)?;
            let prep = prepare(&s.h, &s.cb, &z, None)?;
            let v0 = invariant_prepared(&s.h, &d0, &prep)?;
            let mut lk0 = linking_data(&d0)?.matrix;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut d = d0;
            let mut applied = 0;
            for _ in 0..steps {
                let t = d.trace()?;
                let Some(mv) = random_isotopy_move(&d, &t, &mut rng) else { continue };
                let Ok(d2) = apply_move(&d, &mv) else { continue };
                if d2.events.len() > max_rows {
                    continue;
                }
                let v = invariant_prepared(&s.h, &d2, &prep)?;
                if v != v0 {
                    return Err(Internal(format!("value changed under {mv:?}:\n{d}\n->\n{d2}")).into());
                }
                if let Move::Flip { comp } = mv {
                    // reversing one component negates its off-diagonal entries
                    for (j, row) in lk0.iter_mut().enumerate() {
                        if j != comp {
                            row[comp] = -row[comp];
                        }
                    }
                    for j in 0..lk0.len() {
                        if j != comp {
                            lk0[comp][j] = -lk0[comp][j];
                        }
                    }
                }
                if linking_data(&d2)?.matrix != lk0 {
                    return Err(Internal(format!("linking matrix changed under {mv:?}")).into());
                }
                applied += 1;
                d = d2;
            }
            line!("value {v0}");
            line!("{applied} moves applied, value unchanged");
        }
    }
    Ok(out)
}

fn coords_str(c: &[CycNum]) -> String {
    let parts: Vec<String> = c.iter().map(|x| format!("[{x}]")).collect();
    parts.join(" ")
}

fn table_hrt(s: &Sl2, nmax: i64) -> Result<String> {
    let h = &s.h;
    let p = h.p;
    let q = s.kb.q as i64;
    let vmv = &CycNum::v_pow(p, 1) - &CycNum::v_pow(p, -1);
    let sum_rt = |n: i64| {
        (0..q).fold(CycNum::zero(p), |acc, j| {
            let r = qint(p, 2 * j + 1);
            &acc + &(&CycNum::v_pow(p, 2 * n * j * (j + 1)) * &(&r * &r))
        })
    };
    let lin = |n: i64| vmv.mul_int(-(p as i64) * n);
    let one = prepare(h, &s.cb, &h.unit, None)?;
    let p0 = prepare(h, &s.cb, &s.kb.p_elems[0], None)?;
    let zrt = prepare(h, &s.cb, &s.kb.z_rt(), None)?;
    let mut out = String::new();
    for n in 0..=nmax {
        let d = builders::unknot(n);
        let eval = |t: &Prepared| invariant_prepared(h, &d, t);
        let (a, b, c) = (eval(&one)?, eval(&zrt)?, eval(&p0)?);
        let forms = (&lin(n) * &sum_rt(n), sum_rt(n), lin(n));
        let closed_ok = (a == forms.0, b == forms.1, c == forms.2);
        let bnd = |t: &Prepared| -> Result<CycNum> { scalar(boundary_prepared(h, &d, t)?.value) };
        let (ba, bb, bc) = (bnd(&one)?, bnd(&zrt)?, bnd(&p0)?);
        let prod_ok = ba == &bb * &bc;
        out.push_str(&format!("n {n}\n"));
        out.push_str(&format!("  lambda(theta^n)      = {a}\n"));
        out.push_str(&format!("  lambda(z_RT theta^n) = {b}\n"));
        out.push_str(&format!("  lambda(P_0 theta^n)  = {c}\n"));
        out.push_str(&format!("  Zb[1] = {ba}\n  Zb[z_RT] = {bb}\n  Zb[P_0] = {bc}\n"));
        out.push_str(&format!(
            "  closed forms {}  product identity {}\n",
            if closed_ok == (true, true, true) { "ok" } else { "MISMATCH" },
            if prod_ok { "ok" } else { "MISMATCH" }
        ));
        if closed_ok != (true, true, true) || !prod_ok {
            print!("{out}");
            return Err(Internal(format!("table-hrt mismatch at n = {n}")).into());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        let internal = anyhow::Error::new(Internal("mismatch".into())).context("table-hrt");
        assert_eq!(exit_code(&internal), 2);
        let consistency = anyhow::Error::new(CenterError::Consistency("x".into()));
        assert_eq!(exit_code(&consistency), 2);
        assert_eq!(exit_code(&anyhow!("bad flag")), 1);
    }
}
