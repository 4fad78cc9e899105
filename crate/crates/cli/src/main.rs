//! `weylkit`: deterministic JSON commands over root data, extended affine
//! Weyl groups, twisted conjugacy classes, lattice coinvariants, homology
//! traces, and packet decompositions.
//!
//! Every command prints one JSON report to stdout: the command name, a
//! canonical echo of the parsed inputs, a SHA-256 digest of that echo, the
//! output payload, and a status. Output is byte-identical for identical
//! inputs regardless of worker count (`WEYLKIT_THREADS`).
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a cross-checked
//! identity fails (never expected).

mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use weylkit_core::affine::{
    demazure, element_repr, elements_up_to_length, finite_word_string, inversion_count,
    is_m_regular, length, parse_affine_word, parse_element, reduced_word, regularity,
    simple_affine_root, AffElt, AffineRoot, ElementRepr,
};
use weylkit_core::cartan::{RootDatum, RootDatumConfig, SmallMat};
use weylkit_core::gentrace::{
    verify_trace_formula, FiltrationSpec, ModuleSpec, TraceFixture,
};
use weylkit_core::lattice::{self, IntMat};
use weylkit_core::packets::{packet_classes, packet_partition, verify_eq_m, PacketDescription};
use weylkit_core::twist::{
    diagram_twist, enumerate_fiber_classes, is_sigma_torsion, is_sigma_torsion_by_norm,
    linearization, trivial_twist, ActingLattice, FrobeniusTwist,
};

// ---------------------------------------------------------------------------
// argument grammar
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "weylkit",
    version,
    about = "Deterministic JSON queries over extended affine Weyl groups",
    propagate_version = true
)]
struct Cli {
    /// Emit JSON (accepted for compatibility; JSON is the only format).
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Acting {
    /// classes of the coroot-lattice fiber under coroot translations
    Coroot,
    /// classes of the full cocharacter fiber under cocharacter translations
    Cocharacter,
}

#[derive(Subcommand)]
enum Command {
    /// Root system, coroots, affine simple roots, and lattice data of a datum
    Roots {
        /// root-datum description file, e.g. {"type":"A","rank":2,"isogeny":"sc"}
        #[arg(long)]
        datum: PathBuf,
        /// also count the group elements of length <= BOUND
        #[arg(long)]
        bound: Option<usize>,
    },
    /// Length of an element, by three independent routes
    Length {
        #[arg(long)]
        datum: PathBuf,
        /// element word, e.g. "s0*s1" or "t[2,0]*s2" or "e"
        #[arg(long)]
        w: String,
    },
    /// Demazure (join) product of two elements
    Demazure {
        #[arg(long)]
        datum: PathBuf,
        /// left factor, as an element word
        #[arg(long)]
        u: String,
        /// right factor, as an element word
        #[arg(long)]
        v: String,
    },
    /// m-regularity test and the exact regularity of an element
    Regular {
        #[arg(long)]
        datum: PathBuf,
        /// element word
        #[arg(long)]
        w: String,
        /// regularity threshold to test
        #[arg(long)]
        m: usize,
    },
    /// Torsion test for w~sigma, by two independent routes
    Torsion {
        #[arg(long)]
        datum: PathBuf,
        /// twist description file, e.g. {"diagram_perm":[1,0]} (0-based); identity if absent
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// element word
        #[arg(long)]
        w: String,
    },
    /// Translation-conjugacy classes of the fiber {t_l * wbar * sigma}
    ClassifyEmbeddings {
        #[arg(long)]
        datum: PathBuf,
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// finite Weyl word, e.g. "s1*s2"
        #[arg(long)]
        wbar: String,
        /// which lattice translates and is translated by
        #[arg(long, value_enum, default_value_t = Acting::Coroot)]
        acting: Acting,
    },
    /// Coinvariants Z^n/(1-u)Z^n of an integer matrix, with determinant checks
    Coinvariants {
        /// matrix rows as inline JSON, e.g. "[[-1]]"
        #[arg(long)]
        matrix: String,
    },
    /// Homology trace formula for a lattice-automorphism module fixture
    TraceFormula {
        /// fixture file: {"u": rows, "module": {...}, "filtration": optional}
        #[arg(long)]
        fixture: PathBuf,
    },
    /// Packet classes over an elliptic Weyl element, with the partition under
    /// the bigger lattice and an optional decomposition check
    Packet {
        #[arg(long)]
        datum: PathBuf,
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// finite Weyl word with elliptic action, e.g. "s1" or "s1*s2"
        #[arg(long)]
        wbar: String,
        /// module fixture file: {"module": {...}, "filtration": optional}
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Seeded invariant suite across every module
    Selftest {
        /// RNG seed for the randomized parts
        #[arg(long, default_value_t = 17)]
        seed: u64,
        /// size knob: length caps and sample counts scale with it
        #[arg(long, default_value_t = 4)]
        bound: usize,
    },
}

// ---------------------------------------------------------------------------
// report envelope
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Report<I: Serialize, O: Serialize> {
    command: &'static str,
    inputs: I,
    digest: String,
    output: O,
    status: &'static str,
}

/// Print the report and translate the identity verdict into an exit code.
fn emit<I: Serialize, O: Serialize>(command: &'static str, inputs: I, output: O, ok: bool) -> ExitCode {
    let canonical = serde_json::to_string(&inputs).expect("inputs serialize");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = format!("sha256:{:x}", hasher.finalize());
    let status = if ok { "ok" } else { "identity-violation" };
    let report = Report { command, inputs, digest, output, status };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    use std::io::Write;
    if let Err(e) = writeln!(std::io::stdout().lock(), "{text}") {
        // a closed pipe downstream truncates the report but is not our error
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("cannot write report: {e}");
            return ExitCode::FAILURE;
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn fail(message: String) -> ExitCode {
    let body = serde_json::json!({ "error": message });
    eprintln!("{}", serde_json::to_string(&body).expect("error serializes"));
    ExitCode::FAILURE
}

// ---------------------------------------------------------------------------
// input loading
// ---------------------------------------------------------------------------

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {what} file {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("malformed {what} file {}: {e}", path.display()))
}

fn load_datum(path: &Path) -> Result<(RootDatumConfig, RootDatum), String> {
    let config: RootDatumConfig = read_json(path, "datum")?;
    let datum = config.build().map_err(|e| format!("invalid datum: {e}"))?;
    Ok((config, datum))
}

/// On-disk twist description: a 0-based permutation of the simple coroots.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct SigmaConfig {
    diagram_perm: Vec<usize>,
}

/// Canonical echo of the resolved twist.
#[derive(Serialize)]
struct SigmaEcho {
    diagram_perm: Vec<usize>,
    order: usize,
}

fn load_sigma(datum: &RootDatum, path: Option<&PathBuf>) -> Result<FrobeniusTwist, String> {
    match path {
        None => Ok(trivial_twist(datum)),
        Some(p) => {
            let config: SigmaConfig = read_json(p, "twist")?;
            diagram_twist(datum, &config.diagram_perm).map_err(|e| format!("invalid twist: {e}"))
        }
    }
}

fn sigma_echo(twist: &FrobeniusTwist) -> SigmaEcho {
    SigmaEcho { diagram_perm: twist.diagram_perm.clone(), order: twist.order }
}

/// Parse a finite Weyl word ("s1*s2" or "e") into its matrix.
fn parse_finite_word(datum: &RootDatum, word: &str) -> Result<SmallMat, String> {
    let repr = ElementRepr { t: vec![0; datum.rank], w: word.to_string() };
    parse_element(datum, &repr).map(|e| e.w).map_err(|e| format!("invalid Weyl word: {e}"))
}

fn parse_matrix(text: &str) -> Result<IntMat, String> {
    let rows: Vec<Vec<i64>> =
        serde_json::from_str(text).map_err(|e| format!("malformed matrix: {e}"))?;
    if rows.is_empty() {
        return Err("matrix must have at least one row".into());
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err("matrix must be square".into());
    }
    Ok(IntMat::from_i64_rows(&rows))
}

fn bigint_to_i64(x: &BigInt, what: &str) -> Result<i64, String> {
    i64::try_from(x).map_err(|_| format!("{what} exceeds the i64 range"))
}

/// Render an element as a parseable word: reduced word over the affine
/// generators followed by the length-zero part (translation and finite word).
fn render_affine(datum: &RootDatum, e: &AffElt) -> String {
    let (word, omega) = reduced_word(datum, e);
    let mut parts: Vec<String> = word.iter().map(|i| format!("s{i}")).collect();
    if !omega.is_identity() {
        if omega.t.iter().any(|&c| c != 0) {
            let coords: Vec<String> = omega.t.iter().map(|c| c.to_string()).collect();
            parts.push(format!("t[{}]", coords.join(",")));
        }
        if !omega.w.is_identity() {
            parts.push(finite_word_string(&datum.canonical_word(&omega.w)));
        }
    }
    if parts.is_empty() {
        "e".to_string()
    } else {
        parts.join("*")
    }
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RootsInputs {
    datum: RootDatumConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<usize>,
}

#[derive(Serialize)]
struct ElementsCount {
    bound: usize,
    count: usize,
}

#[derive(Serialize)]
struct RootsOut {
    rank: usize,
    cartan: Vec<Vec<i64>>,
    num_roots: usize,
    positive_roots: Vec<Vec<i64>>,
    positive_coroots: Vec<Vec<i64>>,
    highest_root: Vec<i64>,
    simple_affine_roots: Vec<AffineRoot>,
    fundamental_group: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elements: Option<ElementsCount>,
}

fn cmd_roots(datum_path: &Path, bound: Option<usize>) -> Result<ExitCode, String> {
    let (config, datum) = load_datum(datum_path)?;
    let positives = datum.positive_roots().to_vec();
    let positive_coroots = datum.coroots[..datum.num_positive()].to_vec();
    let fundamental_group = datum
        .fundamental_group()
        .invariant_factors
        .iter()
        .map(|d| bigint_to_i64(d, "invariant factor"))
        .collect::<Result<_, _>>()?;
    let output = RootsOut {
        rank: datum.rank,
        cartan: datum.cartan.clone(),
        num_roots: datum.roots.len(),
        highest_root: datum.roots[datum.highest_root].clone(),
        simple_affine_roots: (0..=datum.rank).map(|i| simple_affine_root(&datum, i)).collect(),
        positive_roots: positives,
        positive_coroots,
        fundamental_group,
        elements: bound.map(|b| ElementsCount {
            bound: b,
            count: elements_up_to_length(&datum, b).len(),
        }),
    };
    Ok(emit("roots", RootsInputs { datum: config, bound }, output, true))
}

#[derive(Serialize)]
struct ElementInputs {
    datum: RootDatumConfig,
    w: String,
}

#[derive(Serialize)]
struct LengthOut {
    element: ElementRepr,
    len: usize,
    reduced_word: String,
    word_len: usize,
    inversions: usize,
    routes_agree: bool,
}

fn cmd_length(datum_path: &Path, w: &str) -> Result<ExitCode, String> {
    let (config, datum) = load_datum(datum_path)?;
    let e = parse_affine_word(&datum, w).map_err(|e| format!("invalid element: {e}"))?;
    let len = length(&datum, &e);
    let (word, _) = reduced_word(&datum, &e);
    let inversions = inversion_count(&datum, &e);
    let routes_agree = len == word.len() && len == inversions;
    let output = LengthOut {
        element: element_repr(&datum, &e),
        len,
        reduced_word: render_affine(&datum, &e),
        word_len: word.len(),
        inversions,
        routes_agree,
    };
    let inputs = ElementInputs { datum: config, w: w.to_string() };
    Ok(emit("length", inputs, output, routes_agree))
}

#[derive(Serialize)]
struct DemazureInputs {
    datum: RootDatumConfig,
    u: String,
    v: String,
}

#[derive(Serialize)]
struct DemazureOut {
    result: String,
    len: usize,
}

fn cmd_demazure(datum_path: &Path, u: &str, v: &str) -> Result<ExitCode, String> {
    let (config, datum) = load_datum(datum_path)?;
    let ue = parse_affine_word(&datum, u).map_err(|e| format!("invalid left factor: {e}"))?;
    let ve = parse_affine_word(&datum, v).map_err(|e| format!("invalid right factor: {e}"))?;
    let product = demazure(&datum, &ue, &ve);
    let output =
        DemazureOut { result: render_affine(&datum, &product), len: length(&datum, &product) };
    let inputs = DemazureInputs { datum: config, u: u.to_string(), v: v.to_string() };
    Ok(emit("demazure", inputs, output, true))
}

#[derive(Serialize)]
struct RegularInputs {
    datum: RootDatumConfig,
    w: String,
    m: usize,
}

#[derive(Serialize)]
struct RegularOut {
    element: ElementRepr,
    m: usize,
    regular: bool,
    regularity: usize,
}

fn cmd_regular(datum_path: &Path, w: &str, m: usize) -> Result<ExitCode, String> {
    let (config, datum) = load_datum(datum_path)?;
    let e = parse_affine_word(&datum, w).map_err(|e| format!("invalid element: {e}"))?;
    let regular = is_m_regular(&datum, &e, m).map_err(|e| e.to_string())?;
    let reg = regularity(&datum, &e).map_err(|e| e.to_string())?;
    let ok = regular == (m <= reg);
    let output = RegularOut { element: element_repr(&datum, &e), m, regular, regularity: reg };
    Ok(emit("regular", RegularInputs { datum: config, w: w.to_string(), m }, output, ok))
}

#[derive(Serialize)]
struct TorsionInputs {
    datum: RootDatumConfig,
    sigma: SigmaEcho,
    w: String,
}

#[derive(Serialize)]
struct TorsionOut {
    element: ElementRepr,
    torsion: bool,
    torsion_by_norm: bool,
    routes_agree: bool,
}

fn cmd_torsion(datum_path: &Path, sigma: Option<&PathBuf>, w: &str) -> Result<ExitCode, String> {
    let (config, datum) = load_datum(datum_path)?;
    let twist = load_sigma(&datum, sigma)?;
    let e = parse_affine_word(&datum, w).map_err(|e| format!("invalid element: {e}"))?;
    let torsion = is_sigma_torsion(&twist, &e);
    let torsion_by_norm = is_sigma_torsion_by_norm(&datum, &twist, &e);
    let routes_agree = torsion == torsion_by_norm;
    let output =
        TorsionOut { element: element_repr(&datum, &e), torsion, torsion_by_norm, routes_agree };
    let inputs =
        TorsionInputs { datum: config, sigma: sigma_echo(&twist), w: w.to_string() };
    Ok(emit("torsion", inputs, output, routes_agree))
}

#[derive(Serialize)]
struct ClassifyInputs {
    datum: RootDatumConfig,
    sigma: SigmaEcho,
    wbar: String,
    acting: String,
}

#[derive(Serialize)]
struct FiberDesc {
    wbar: String,
    sigma_order: usize,
    acting: String,
}

#[derive(Serialize)]
struct ClassifyOut {
    fiber: FiberDesc,
    classes: Vec<ElementRepr>,
    count: usize,
    determinant: i64,
}

fn cmd_classify(
    datum_path: &Path,
    sigma: Option<&PathBuf>,
    wbar: &str,
    acting: Acting,
) -> Result<ExitCode, String> {
    let (config, datum) = load_datum(datum_path)?;
    let twist = load_sigma(&datum, sigma)?;
    let wbar_mat = parse_finite_word(&datum, wbar)?;
    let acting_lattice = match acting {
        Acting::Coroot => ActingLattice::Coroot,
        Acting::Cocharacter => ActingLattice::Cocharacter,
    };
    let classes = enumerate_fiber_classes(&datum, &twist, &wbar_mat, acting_lattice)
        .map_err(|e| format!("cannot enumerate classes: {e}"))?;
    let det = lattice::det_one_minus(&linearization(&twist, &wbar_mat).to_int_mat())
        .map_err(|e| e.to_string())?;
    let determinant = bigint_to_i64(&det.magnitude().clone().into(), "determinant")?;
    let ok = classes.len() == usize::try_from(determinant).unwrap_or(usize::MAX);
    let acting_name = match acting {
        Acting::Coroot => "coroot",
        Acting::Cocharacter => "cocharacter",
    };
    let output = ClassifyOut {
        fiber: FiberDesc {
            wbar: finite_word_string(&datum.canonical_word(&wbar_mat)),
            sigma_order: twist.order,
            acting: acting_name.to_string(),
        },
        classes: classes.iter().map(|x| element_repr(&datum, &x.base)).collect(),
        count: classes.len(),
        determinant,
    };
    let inputs = ClassifyInputs {
        datum: config,
        sigma: sigma_echo(&twist),
        wbar: wbar.to_string(),
        acting: acting_name.to_string(),
    };
    Ok(emit("classify-embeddings", inputs, output, ok))
}

#[derive(Serialize)]
struct CoinvariantsInputs {
    matrix: Vec<Vec<i64>>,
}

#[derive(Serialize)]
struct CoinvariantsOut {
    invariant_factors: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    free_rank: Option<usize>,
    det1mu: i64,
}

fn cmd_coinvariants(matrix: &str) -> Result<ExitCode, String> {
    let u = parse_matrix(matrix)?;
    let group = lattice::coinvariants(&u).map_err(|e| e.to_string())?;
    let det = lattice::det_one_minus(&u).map_err(|e| e.to_string())?;
    let alt = lattice::alt_exterior_trace(&u).map_err(|e| e.to_string())?;
    // cross-checks: the exterior-trace identity, and |coinvariants| = |det|
    let mut ok = det == alt;
    match group.order() {
        Some(order) => ok = ok && order == det.magnitude().clone().into(),
        None => ok = ok && det == BigInt::from(0),
    }
    let invariant_factors = group
        .invariant_factors
        .iter()
        .map(|d| bigint_to_i64(d, "invariant factor"))
        .collect::<Result<_, _>>()?;
    let output = CoinvariantsOut {
        invariant_factors,
        free_rank: if group.free_rank > 0 { Some(group.free_rank) } else { None },
        det1mu: bigint_to_i64(&det, "det(1-u)")?,
    };
    let echo = (0..u.rows())
        .map(|i| u.row(i).iter().map(|x| bigint_to_i64(x, "matrix entry")).collect())
        .collect::<Result<_, _>>()?;
    Ok(emit("coinvariants", CoinvariantsInputs { matrix: echo }, output, ok))
}

#[derive(Serialize)]
struct TraceFormulaInputs {
    fixture: TraceFixture,
}

#[derive(Serialize)]
struct ClassTermOut {
    rep: Vec<i64>,
    term: String,
}

#[derive(Serialize)]
struct HomologyOut {
    dims: Vec<usize>,
    u_traces: Vec<String>,
}

#[derive(Serialize)]
struct TraceFormulaOut {
    homology: HomologyOut,
    lhs: String,
    per_class: Vec<ClassTermOut>,
    rhs: String,
    equal: bool,
}

fn cmd_trace_formula(fixture_path: &Path) -> Result<ExitCode, String> {
    let fixture: TraceFixture = read_json(fixture_path, "fixture")?;
    let group = fixture.group().map_err(|e| format!("invalid automorphism: {e}"))?;
    let module = fixture.module.build().map_err(|e| format!("invalid module: {e}"))?;
    let default_spec;
    let spec = match &fixture.filtration {
        Some(s) => s,
        None => {
            default_spec = FiltrationSpec::default_for(&group);
            &default_spec
        }
    };
    let homology =
        weylkit_core::gentrace::homology(&group, &module).map_err(|e| e.to_string())?;
    let report = verify_trace_formula(&group, &module, spec).map_err(|e| e.to_string())?;
    let output = TraceFormulaOut {
        homology: HomologyOut {
            dims: homology.dims,
            u_traces: homology.u_traces.iter().map(|c| c.to_string()).collect(),
        },
        lhs: report.lhs.to_string(),
        per_class: report
            .per_class
            .iter()
            .map(|c| ClassTermOut { rep: c.rep.clone(), term: c.term.to_string() })
            .collect(),
        rhs: report.rhs.to_string(),
        equal: report.equal,
    };
    Ok(emit("trace-formula", TraceFormulaInputs { fixture }, output, report.equal))
}

/// On-disk module fixture for the packet decomposition check.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct PacketFixture {
    module: ModuleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    filtration: Option<FiltrationSpec>,
}

#[derive(Serialize)]
struct PacketInputs {
    datum: RootDatumConfig,
    sigma: SigmaEcho,
    wbar: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixture: Option<PacketFixture>,
}

#[derive(Serialize)]
struct DecompositionOut {
    lhs: String,
    per_class: Vec<ClassTermOut>,
    rhs: String,
    equal: bool,
}

#[derive(Serialize)]
struct PacketOut {
    classes: Vec<ElementRepr>,
    count: usize,
    determinant: i64,
    /// partition of the class indices under the bigger lattice
    partition: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition: Option<DecompositionOut>,
}

fn cmd_packet(
    datum_path: &Path,
    sigma: Option<&PathBuf>,
    wbar: &str,
    fixture_path: Option<&PathBuf>,
) -> Result<ExitCode, String> {
    let (config, datum) = load_datum(datum_path)?;
    let twist = load_sigma(&datum, sigma)?;
    let wbar_mat = parse_finite_word(&datum, wbar)?;
    let fixture: Option<PacketFixture> = match fixture_path {
        Some(p) => Some(read_json(p, "fixture")?),
        None => None,
    };
    let packet = PacketDescription::new(datum.clone(), twist.clone(), wbar_mat, vec![])
        .map_err(|e| format!("invalid packet: {e}"))?;
    let enumerated = packet_classes(&packet).map_err(|e| e.to_string())?;
    let blocks = packet_partition(&packet).map_err(|e| e.to_string())?;
    let partition: Vec<Vec<usize>> = blocks
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|member| {
                    enumerated
                        .classes
                        .iter()
                        .position(|c| c == member)
                        .expect("partition members come from the class list")
                })
                .collect()
        })
        .collect();
    let mut ok = true;
    let decomposition = match &fixture {
        None => None,
        Some(f) => {
            let module = f.module.build().map_err(|e| format!("invalid module: {e}"))?;
            let report = verify_eq_m(&packet, &module, f.filtration.as_ref())
                .map_err(|e| format!("decomposition check failed to run: {e}"))?;
            ok = report.equal;
            Some(DecompositionOut {
                lhs: report.lhs.to_string(),
                per_class: report
                    .per_class
                    .iter()
                    .map(|c| ClassTermOut { rep: c.rep.clone(), term: c.term.to_string() })
                    .collect(),
                rhs: report.rhs.to_string(),
                equal: report.equal,
            })
        }
    };
    let output = PacketOut {
        classes: enumerated.classes.iter().map(|x| element_repr(&datum, &x.base)).collect(),
        count: enumerated.classes.len(),
        determinant: bigint_to_i64(&enumerated.determinant, "determinant")?,
        partition,
        decomposition,
    };
    let inputs = PacketInputs {
        datum: config,
        sigma: sigma_echo(&twist),
        wbar: wbar.to_string(),
        fixture,
    };
    Ok(emit("packet", inputs, output, ok))
}

#[derive(Serialize)]
struct SelftestInputs {
    seed: u64,
    bound: usize,
}

fn cmd_selftest(seed: u64, bound: usize) -> Result<ExitCode, String> {
    let output = selftest::run(seed, bound);
    let all_ok = output.all_ok;
    Ok(emit("selftest", SelftestInputs { seed, bound }, output, all_ok))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Roots { datum, bound } => cmd_roots(datum, *bound),
        Command::Length { datum, w } => cmd_length(datum, w),
        Command::Demazure { datum, u, v } => cmd_demazure(datum, u, v),
        Command::Regular { datum, w, m } => cmd_regular(datum, w, *m),
        Command::Torsion { datum, sigma, w } => cmd_torsion(datum, sigma.as_ref(), w),
        Command::ClassifyEmbeddings { datum, sigma, wbar, acting } => {
            cmd_classify(datum, sigma.as_ref(), wbar, *acting)
        }
        Command::Coinvariants { matrix } => cmd_coinvariants(matrix),
        Command::TraceFormula { fixture } => cmd_trace_formula(fixture),
        Command::Packet { datum, sigma, wbar, fixture } => {
            cmd_packet(datum, sigma.as_ref(), wbar, fixture.as_ref())
        }
        Command::Selftest { seed, bound } => cmd_selftest(*seed, *bound),
    };
    match result {
        Ok(code) => code,
        Err(message) => fail(message),
    }
}
