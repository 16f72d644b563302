//! Command-line front end for the quatavg library.
//!
//! Every subcommand prints to standard output (or `--out`) in one of three
//! formats: `pretty` (human-readable, the default), `json` (a stable
//! machine-readable document), or `csv` (one row per record with a fixed
//! header).  JSON documents are byte-identical across runs with the same
//! configuration except for `metadata.runtime_ms`.
//!
//! Exit codes: 0 success, 1 computation failure, 2 usage error,
//! 3 verification failure (some record did not pass).

use clap::{Parser, Subcommand, ValueEnum};
use quatavg::arith::{gamma_int, is_prime};
use quatavg::brandt::{al_operator, brandt_matrix, brandt_matrix_classical, eigenforms_on};
use quatavg::localsym::{
    discriminant, hilbert_inf, hilbert_p, presentation_for_level, ramified_primes,
};
use quatavg::periods::{epsilon_condition, l_algebraic};
use quatavg::su2rep::{archimedean_i, norm_sq_p_closed, norm_sq_w, CmField, TriTensor};
use quatavg::verify::{
    classify_level, nearest_rational, sum_over_three_with, verify_main, DEFAULT_PRIME_BUDGET,
};
use quatavg::{
    class_set, dim_newforms, weight_space, Cyclo12, Error, LevelType, PeriodCtx, DEFAULT_PREC,
};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde_json::{Map, Value};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

type Result<T> = std::result::Result<T, Error>;

#[derive(Parser)]
#[command(
    name = "quatavg",
    version,
    about = "Ideal classes, Brandt matrices, and triple-product averages on definite quaternion algebras",
    propagate_version = true
)]
struct Cli {
    /// Working precision in bits (at least 64)
    #[arg(long, global = true, default_value_t = DEFAULT_PREC, env = "QUATAVG_PRECISION")]
    precision: u32,

    /// Relative tolerance for pass/fail comparisons
    #[arg(long, global = true, default_value_t = 1e-8, env = "QUATAVG_TOL")]
    tol: f64,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty, env = "QUATAVG_FORMAT")]
    format: Format,

    /// Cap the number of worker threads used by parallel sums
    #[arg(long, global = true, env = "QUATAVG_THREADS")]
    threads: Option<usize>,

    /// Write output to this file instead of standard output
    #[arg(long, global = true, env = "QUATAVG_OUT")]
    out: Option<PathBuf>,

    /// Also display sums in the classical normalization with explicit powers of pi
    #[arg(long, global = true)]
    classical: bool,

    /// Enable the toric-period geometric side on levels without a closed form
    #[arg(long, global = true)]
    extended: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Subcommand)]
enum Cmd {
    /// Hilbert symbols, ramified places, and the discriminant of (a, b / Q)
    #[command(allow_negative_numbers = true)]
    Hilbert {
        /// First presentation parameter (i^2 = a)
        a: i64,
        /// Second presentation parameter (j^2 = b)
        b: i64,
        /// Also report the single local symbol (a, b)_p at this prime
        #[arg(short = 'p', long)]
        prime: Option<u64>,
    },
    /// Exact constants for one weight: tensor table, orbit integrals, norms
    Constants {
        /// Weight 2k (even, at least 2)
        #[arg(short = 'w', long)]
        weight: u32,
    },
    /// Newform dimension at (level, weight)
    Dims {
        #[arg(short = 'N', long)]
        level: u64,
        #[arg(short = 'w', long)]
        weight: u32,
    },
    /// Right ideal classes of a maximal order: class number, unit orders, mass
    Classset {
        #[arg(short = 'N', long)]
        level: u64,
    },
    /// Brandt matrix at a prime (the Atkin-Lehner involution when p divides the level)
    Brandt {
        #[arg(short = 'N', long)]
        level: u64,
        #[arg(short = 'w', long, default_value_t = 2)]
        weight: u32,
        #[arg(short = 'p', long)]
        prime: u64,
    },
    /// Hecke eigenform systems: eigenvalues and Atkin-Lehner signs
    Eigen {
        #[arg(short = 'N', long)]
        level: u64,
        #[arg(short = 'w', long)]
        weight: u32,
        /// Number of good primes used to separate eigensystems
        #[arg(long, default_value_t = DEFAULT_PRIME_BUDGET)]
        budget: usize,
    },
    /// Compare the spectral and geometric sides for every eigenform at (level, weight)
    Verify {
        #[arg(short = 'N', long)]
        level: u64,
        #[arg(short = 'w', long)]
        weight: u32,
    },
    /// Average of normalized central values over all ordered eigenform triples
    Sum3 {
        #[arg(short = 'N', long)]
        level: u64,
        #[arg(short = 'w', long)]
        weight: u32,
    },
    /// Normalized central values for every ordered eigenform triple, with rational reconstruction
    Lalg {
        #[arg(short = 'N', long)]
        level: u64,
        #[arg(short = 'w', long, default_value_t = 2)]
        weight: u32,
        /// Largest denominator tried by the rational reconstruction
        #[arg(long, default_value_t = 10_000)]
        max_den: u64,
    },
}

/// One rendered command: the JSON payload pieces plus the preformatted
/// pretty and CSV views, and whether a verification record failed.
struct CmdOut {
    command: &'static str,
    params: Value,
    results: Value,
    pretty: String,
    csv: String,
    failed: bool,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    if cli.precision < 64 {
        eprintln!("error: --precision must be at least 64 bits");
        return 2;
    }
    if !cli.tol.is_finite() || cli.tol <= 0.0 {
        eprintln!("error: --tol must be positive");
        return 2;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return 2;
        }
        // Best effort: a pool may already exist in this process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    if let Cmd::Verify { level, .. } = &cli.cmd {
        let lt = classify_level(*level);
        if !matches!(lt, LevelType::Type1 | LevelType::Other) && !cli.extended {
            eprintln!(
                "error: level {level} is {lt}; its geometric side needs toric periods — pass --extended"
            );
            return 2;
        }
    }
    let t0 = Instant::now();
    match dispatch(&cli) {
        Ok(out) => {
            let rendered = render(&cli, &out, t0.elapsed().as_millis());
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, rendered) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return 1;
                }
            } else {
                print!("{rendered}");
            }
            if out.failed {
                3
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<CmdOut> {
    let prec = cli.precision;
    match &cli.cmd {
        Cmd::Hilbert { a, b, prime } => cmd_hilbert(*a, *b, *prime),
        Cmd::Constants { weight } => cmd_constants(*weight, prec),
        Cmd::Dims { level, weight } => cmd_dims(*level, *weight),
        Cmd::Classset { level } => cmd_classset(*level),
        Cmd::Brandt {
            level,
            weight,
            prime,
        } => cmd_brandt(*level, *weight, *prime, prec),
        Cmd::Eigen {
            level,
            weight,
            budget,
        } => cmd_eigen(*level, *weight, *budget, prec),
        Cmd::Verify { level, weight } => cmd_verify(*level, *weight, cli.tol, prec, cli.classical),
        Cmd::Sum3 { level, weight } => cmd_sum3(*level, *weight, cli.tol, prec, cli.classical),
        Cmd::Lalg {
            level,
            weight,
            max_den,
        } => cmd_lalg(*level, *weight, *max_den, prec),
    }
}

fn render(cli: &Cli, out: &CmdOut, runtime_ms: u128) -> String {
    match cli.format {
        Format::Json => {
            let doc = obj(vec![
                ("command", Value::from(out.command)),
                ("params", out.params.clone()),
                ("results", out.results.clone()),
                (
                    "metadata",
                    obj(vec![
                        ("precision", Value::from(cli.precision)),
                        ("runtime_ms", Value::from(runtime_ms as u64)),
                        ("version", Value::from(env!("CARGO_PKG_VERSION"))),
                    ]),
                ),
            ]);
            let mut s = serde_json::to_string_pretty(&doc).expect("JSON document");
            s.push('\n');
            s
        }
        Format::Csv => out.csv.clone(),
        Format::Pretty => out.pretty.clone(),
    }
}

// ---------------------------------------------------------------------------
// Serialization helpers.  Exact values never round-trip through floats:
// rationals render as "num/den" and cyclotomic numbers as their four
// power-basis coordinates.

fn obj(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_owned(), v);
    }
    Value::Object(m)
}

fn srat(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn jrat(r: &Rational) -> Value {
    Value::from(srat(r))
}

fn jint(n: &Integer) -> Value {
    match n.to_i64() {
        Some(v) => Value::from(v),
        None => Value::from(n.to_string()),
    }
}

fn jfloat(x: &Float) -> Value {
    Value::from(x.to_f64())
}

fn sfloat(x: &Float) -> String {
    let v = x.to_f64();
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn jcyclo(c: &Cyclo12) -> Value {
    Value::Array(c.c.iter().map(jrat).collect())
}

/// Cyclotomic pretty form: a plain rational when possible, otherwise the
/// power-basis expansion in z = e^{i pi/6}.
fn scyclo(c: &Cyclo12) -> String {
    if let Some(r) = c.as_rational() {
        return srat(&r);
    }
    let names = ["", " z", " z^2", " z^3"];
    let mut parts = Vec::new();
    for (co, name) in c.c.iter().zip(names) {
        if co.cmp0() != std::cmp::Ordering::Equal {
            parts.push(format!("({}){}", srat(co), name));
        }
    }
    parts.join(" + ")
}

fn csv_doc(header: &str, rows: Vec<Vec<String>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Strip characters that would break a CSV cell.
fn csv_safe(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

fn half_weight(weight: u32) -> Result<u32> {
    if weight < 2 || weight % 2 != 0 {
        return Err(Error::Weight(
            weight,
            "weight must be a positive even integer".into(),
        ));
    }
    Ok(weight / 2)
}

/// π^e at the working precision.
fn pi_pow(e: u32, prec: u32) -> Float {
    Float::with_val(prec, quatavg::hp::pi(prec).pow(e))
}

/// Exact part of the adelic-to-classical conversion for one fixed form:
/// the classical sum over (f, g) equals the adelic value times
/// 2^{12k−4} π^{6k−1} / N.
fn classical_factor(k: u32, level: u64) -> Rational {
    Rational::from((Integer::from(1) << (12 * k - 4), Integer::from(level)))
}

/// Classical view of one per-form record: the power of π, the exact
/// coefficient when the engine target is exact, and the float value of
/// the classical sum Σ_{f,g} L(3k−1, f×g×h)/((f,f)(g,g)(h,h)).
fn classical_view(
    k: u32,
    level: u64,
    lhs: &Float,
    exact: Option<&Rational>,
    extra_units: &Rational,
    prec: u32,
) -> (Value, String) {
    let e = 6 * k - 1;
    let factor = classical_factor(k, level) * extra_units;
    let coeff = exact.map(|q| Rational::from(q * &factor));
    let mut val = Float::with_val(prec, lhs * pi_pow(e, prec));
    val *= quatavg::hp::float_rat(prec, &factor);
    let json = obj(vec![
        ("pi_power", Value::from(e)),
        (
            "coefficient",
            coeff.as_ref().map(jrat).unwrap_or(Value::Null),
        ),
        ("value", jfloat(&val)),
    ]);
    let text = match &coeff {
        Some(q) => format!("{} = ({}) pi^{}", sfloat(&val), srat(q), e),
        None => format!("{} (pi^{})", sfloat(&val), e),
    };
    (json, text)
}

// ---------------------------------------------------------------------------
// Subcommands.

fn cmd_hilbert(a: i64, b: i64, prime: Option<u64>) -> Result<CmdOut> {
    if a == 0 || b == 0 {
        return Err(Error::Domain(
            "the Hilbert symbol needs nonzero arguments".into(),
        ));
    }
    if let Some(p) = prime {
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
    }
    let inf = hilbert_inf(a, b);
    let ram = ramified_primes(a, b);
    let disc = discriminant(a, b);
    let at = prime.map(|p| (p, hilbert_p(a, b, p)));

    let results = obj(vec![
        ("a", Value::from(a)),
        ("b", Value::from(b)),
        ("ramified_at_infinity", Value::from(inf == -1)),
        (
            "ramified_primes",
            Value::Array(ram.iter().map(|&p| Value::from(p)).collect()),
        ),
        ("discriminant", Value::from(disc)),
        ("definite", Value::from(inf == -1)),
        (
            "symbol",
            at.map_or(Value::Null, |(p, v)| {
                obj(vec![("p", Value::from(p)), ("value", Value::from(v))])
            }),
        ),
    ]);

    let mut places: Vec<String> = Vec::new();
    if inf == -1 {
        places.push("inf".into());
    }
    places.extend(ram.iter().map(|p| p.to_string()));
    let mut pretty = format!(
        "(a, b / Q) = ({a}, {b})\nramified places: {}\ndiscriminant: {disc}\n",
        if places.is_empty() {
            "none (split everywhere)".to_owned()
        } else {
            places.join(", ")
        }
    );
    if let Some((p, v)) = at {
        let _ = writeln!(pretty, "({a}, {b})_{p} = {v}");
    }

    let mut rows = Vec::new();
    if inf == -1 {
        rows.push(vec![
            a.to_string(),
            b.to_string(),
            "inf".into(),
            "-1".into(),
            disc.to_string(),
        ]);
    }
    for &p in &ram {
        rows.push(vec![
            a.to_string(),
            b.to_string(),
            p.to_string(),
            "-1".into(),
            disc.to_string(),
        ]);
    }
    if let Some((p, v)) = at {
        if v == 1 {
            rows.push(vec![
                a.to_string(),
                b.to_string(),
                p.to_string(),
                "1".into(),
                disc.to_string(),
            ]);
        }
    }

    Ok(CmdOut {
        command: "hilbert",
        params: obj(vec![
            ("a", Value::from(a)),
            ("b", Value::from(b)),
            ("prime", prime.map_or(Value::Null, Value::from)),
        ]),
        results,
        pretty,
        csv: csv_doc("a,b,place,symbol,discriminant", rows),
        failed: false,
    })
}

fn cmd_constants(weight: u32, prec: u32) -> Result<CmdOut> {
    let k = half_weight(weight)?;
    let t = TriTensor::expand(k);
    let np = norm_sq_p_closed(k);
    let nw = norm_sq_w(k);

    let mut tensor = Vec::new();
    let mut rows: Vec<Vec<String>> = vec![
        vec![
            "norm_p".into(),
            String::new(),
            k.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            srat(&np),
        ],
        vec![
            "norm_w".into(),
            String::new(),
            k.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            srat(&nw),
        ],
    ];
    for ((i, j, r), c) in t.entries() {
        tensor.push(obj(vec![
            ("i", Value::from(i)),
            ("j", Value::from(j)),
            ("r", Value::from(r)),
            ("c", jint(c)),
        ]));
        rows.push(vec![
            "tensor".into(),
            String::new(),
            k.to_string(),
            String::new(),
            i.to_string(),
            j.to_string(),
            r.to_string(),
            c.to_string(),
        ]);
    }

    let fields = [(CmField::E0, "Q(i)"), (CmField::E1, "Q(sqrt-3)")];
    let mut orbit = Vec::new();
    let mut orbit_pretty = String::new();
    for (field, label) in fields {
        let step = field.step();
        let mut m = -(k as i64 - 1);
        while m < k as i64 {
            if m.rem_euclid(step) == 0 {
                let v = archimedean_i(k, m, field)?;
                let cx = v.to_cx(prec);
                orbit.push(obj(vec![
                    ("field", Value::from(label)),
                    ("m", Value::from(m)),
                    ("value", jcyclo(&v)),
                    ("approx", Value::Array(vec![jfloat(&cx.re), jfloat(&cx.im)])),
                ]));
                let _ = writeln!(orbit_pretty, "  I({label}, m = {m}) = {}", scyclo(&v));
                rows.push(vec![
                    "orbit".into(),
                    label.into(),
                    k.to_string(),
                    m.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    csv_safe(&scyclo(&v)),
                ]);
            }
            m += 1;
        }
    }

    let results = obj(vec![
        ("weight", Value::from(weight)),
        ("k", Value::from(k)),
        ("norm_sq_p", jrat(&np)),
        ("norm_sq_w", jrat(&nw)),
        ("tensor_entries", Value::from(t.entries().len() as u64)),
        ("tensor", Value::Array(tensor)),
        ("orbit_integrals", Value::Array(orbit)),
    ]);

    let mut pretty = format!(
        "weight {weight} (k = {k})\n|P|^2 = {}   |w|^2 = {}\ntensor table ({} nonzero entries):\n",
        srat(&np),
        srat(&nw),
        t.entries().len()
    );
    for ((i, j, r), c) in t.entries() {
        let _ = writeln!(pretty, "  C[{i},{j},{r}] = {c}");
    }
    pretty.push_str("orbit integrals:\n");
    pretty.push_str(&orbit_pretty);

    Ok(CmdOut {
        command: "constants",
        params: obj(vec![("weight", Value::from(weight))]),
        results,
        pretty,
        csv: csv_doc("kind,field,k,m,i,j,r,value", rows),
        failed: false,
    })
}

fn cmd_dims(level: u64, weight: u32) -> Result<CmdOut> {
    let dim = dim_newforms(level, weight)?;
    Ok(CmdOut {
        command: "dims",
        params: obj(vec![
            ("level", Value::from(level)),
            ("weight", Value::from(weight)),
        ]),
        results: obj(vec![
            ("level", Value::from(level)),
            ("weight", Value::from(weight)),
            ("dim_newforms", Value::from(dim)),
        ]),
        pretty: format!("dim F_{weight}({level}) = {dim}\n"),
        csv: csv_doc(
            "level,weight,dim",
            vec![vec![level.to_string(), weight.to_string(), dim.to_string()]],
        ),
        failed: false,
    })
}

fn cmd_classset(level: u64) -> Result<CmdOut> {
    let pres = presentation_for_level(level)?;
    let cs = class_set(level)?;
    let unit_orders = cs.unit_orders();
    let mass = cs.mass();

    let results = obj(vec![
        ("level", Value::from(level)),
        (
            "presentation",
            obj(vec![
                ("a", Value::from(pres.a)),
                ("b", Value::from(pres.b)),
            ]),
        ),
        ("class_number", Value::from(cs.h() as u64)),
        ("mass", jrat(&mass)),
        (
            "unit_orders",
            Value::Array(unit_orders.iter().map(|&u| Value::from(u)).collect()),
        ),
    ]);

    let pretty = format!(
        "level {level}: quaternion algebra ({}, {} / Q)\nclass number h = {}\nmass = {}\nunit orders (mod +-1): {}\n",
        pres.a,
        pres.b,
        cs.h(),
        srat(&mass),
        unit_orders
            .iter()
            .map(|u| u.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );

    let rows = unit_orders
        .iter()
        .enumerate()
        .map(|(i, u)| {
            vec![
                level.to_string(),
                cs.h().to_string(),
                srat(&mass),
                i.to_string(),
                u.to_string(),
            ]
        })
        .collect();

    Ok(CmdOut {
        command: "classset",
        params: obj(vec![("level", Value::from(level))]),
        results,
        pretty,
        csv: csv_doc("level,h,mass,class_index,unit_order", rows),
        failed: false,
    })
}

fn cmd_brandt(level: u64, weight: u32, p: u64, prec: u32) -> Result<CmdOut> {
    let k = half_weight(weight)?;
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    let cs = class_set(level)?;
    let ramified_in_level = level % p == 0;

    let mut rows = Vec::new();
    let (operator, dim, entries, pretty_mat) = if ramified_in_level || k > 1 {
        let ws = weight_space(&cs, k, prec);
        let hm = if ramified_in_level {
            al_operator(p, &ws)?
        } else {
            brandt_matrix(p, &ws)?
        };
        let name = if ramified_in_level {
            "atkin-lehner"
        } else {
            "brandt"
        };
        let d = ws.total_dim;
        let mut out_rows = Vec::new();
        let mut text = String::new();
        for i in 0..d {
            let mut json_row = Vec::new();
            let mut cells = Vec::new();
            for j in 0..d {
                let z = hm.entries.at(i, j);
                json_row.push(Value::Array(vec![jfloat(&z.re), jfloat(&z.im)]));
                cells.push(format!("{:+.6}{:+.6}i", z.re.to_f64(), z.im.to_f64()));
                rows.push(vec![
                    level.to_string(),
                    weight.to_string(),
                    p.to_string(),
                    name.into(),
                    i.to_string(),
                    j.to_string(),
                    sfloat(&z.re),
                    sfloat(&z.im),
                ]);
            }
            let _ = writeln!(text, "  [{}]", cells.join("  "));
            out_rows.push(Value::Array(json_row));
        }
        (name, d, Value::Array(out_rows), text)
    } else {
        let m = brandt_matrix_classical(p, &cs)?;
        let d = m.len();
        let mut out_rows = Vec::new();
        let mut text = String::new();
        for (i, r) in m.iter().enumerate() {
            out_rows.push(Value::Array(r.iter().map(|&c| Value::from(c)).collect()));
            let _ = writeln!(
                text,
                "  [{}]",
                r.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
            );
            for (j, &c) in r.iter().enumerate() {
                rows.push(vec![
                    level.to_string(),
                    weight.to_string(),
                    p.to_string(),
                    "brandt".into(),
                    i.to_string(),
                    j.to_string(),
                    c.to_string(),
                    "0".into(),
                ]);
            }
        }
        ("brandt", d, Value::Array(out_rows), text)
    };

    let results = obj(vec![
        ("level", Value::from(level)),
        ("weight", Value::from(weight)),
        ("p", Value::from(p)),
        ("operator", Value::from(operator)),
        ("dim", Value::from(dim as u64)),
        ("entries", entries),
    ]);

    let pretty = format!(
        "{} operator at p = {p}, level {level}, weight {weight} ({dim} x {dim}):\n{pretty_mat}",
        operator
    );

    Ok(CmdOut {
        command: "brandt",
        params: obj(vec![
            ("level", Value::from(level)),
            ("weight", Value::from(weight)),
            ("prime", Value::from(p)),
        ]),
        results,
        pretty,
        csv: csv_doc("level,weight,p,operator,row,col,re,im", rows),
        failed: false,
    })
}

fn cmd_eigen(level: u64, weight: u32, budget: usize, prec: u32) -> Result<CmdOut> {
    let k = half_weight(weight)?;
    let cs = class_set(level)?;
    let ws = weight_space(&cs, k, prec);
    let es = eigenforms_on(&ws, budget)?;

    let mut forms = Vec::new();
    let mut rows = Vec::new();
    let mut pretty = format!(
        "level {level}, weight {weight}: {} eigenforms over {} classes\nhecke primes: {}\n",
        es.forms.len(),
        cs.h(),
        es.hecke_primes
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    for (idx, f) in es.forms.iter().enumerate() {
        let mut ap = Map::new();
        for (p, a) in &f.a_p {
            ap.insert(p.to_string(), jfloat(a));
            rows.push(vec![
                level.to_string(),
                weight.to_string(),
                idx.to_string(),
                f.is_residual.to_string(),
                p.to_string(),
                sfloat(a),
                String::new(),
            ]);
        }
        let mut dl = Map::new();
        for (p, d) in &f.delta {
            dl.insert(p.to_string(), Value::from(*d));
            rows.push(vec![
                level.to_string(),
                weight.to_string(),
                idx.to_string(),
                f.is_residual.to_string(),
                p.to_string(),
                String::new(),
                d.to_string(),
            ]);
        }
        forms.push(obj(vec![
            ("index", Value::from(idx as u64)),
            ("residual", Value::from(f.is_residual)),
            ("a_p", Value::Object(ap)),
            ("delta", Value::Object(dl)),
        ]));
        let kind = if f.is_residual { "residual " } else { "" };
        let _ = writeln!(
            pretty,
            "form {idx} ({kind}eigenvalues): {}",
            f.a_p
                .iter()
                .map(|(p, a)| format!("a_{p} = {:.6}", a.to_f64()))
                .chain(f.delta.iter().map(|(p, d)| format!("delta_{p} = {d:+}")))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }

    let results = obj(vec![
        ("level", Value::from(level)),
        ("weight", Value::from(weight)),
        ("class_number", Value::from(cs.h() as u64)),
        (
            "hecke_primes",
            Value::Array(es.hecke_primes.iter().map(|&p| Value::from(p)).collect()),
        ),
        ("count", Value::from(es.forms.len() as u64)),
        (
            "residual_count",
            Value::from(es.forms.iter().filter(|f| f.is_residual).count() as u64),
        ),
        ("forms", Value::Array(forms)),
    ]);

    Ok(CmdOut {
        command: "eigen",
        params: obj(vec![
            ("level", Value::from(level)),
            ("weight", Value::from(weight)),
            ("budget", Value::from(budget as u64)),
        ]),
        results,
        pretty,
        csv: csv_doc("level,weight,form,residual,p,a_p,delta", rows),
        failed: false,
    })
}

fn cmd_verify(level: u64, weight: u32, tol: f64, prec: u32, classical: bool) -> Result<CmdOut> {
    let k = half_weight(weight)?;
    let rep = verify_main(level, weight, tol, prec)?;
    let unit = Rational::from(1);

    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut pretty = format!(
        "level {level}, weight {weight} ({}) — {} eigenforms over {} classes\n",
        rep.level_type, rep.eigenform_count, rep.class_number
    );
    for r in &rep.records {
        let mut fields = vec![
            ("h", Value::from(r.h_index as u64)),
            ("lhs", jfloat(&r.lhs)),
            ("rhs", jfloat(&r.rhs)),
            (
                "rhs_exact",
                r.rhs_exact.as_ref().map(jrat).unwrap_or(Value::Null),
            ),
            ("abs_err", jfloat(&r.abs_err)),
            ("rel_err", jfloat(&r.rel_err)),
            ("pass", Value::from(r.pass)),
            (
                "error",
                r.error.as_deref().map(Value::from).unwrap_or(Value::Null),
            ),
        ];
        let mut cl_text = String::new();
        if classical {
            let (cv, ct) =
                classical_view(k, level, &r.lhs, r.rhs_exact.as_ref(), &unit, prec);
            fields.push(("classical", cv));
            cl_text = format!("\n      classical sum = {ct}");
        }
        records.push(obj(fields));
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let exact = r
            .rhs_exact
            .as_ref()
            .map(|q| format!(" (= {})", srat(q)))
            .unwrap_or_default();
        let _ = writeln!(
            pretty,
            "h {}: lhs {}  rhs {}{exact}  abs {:.2e}  rel {:.2e}  {verdict}{cl_text}",
            r.h_index,
            sfloat(&r.lhs),
            sfloat(&r.rhs),
            r.abs_err.to_f64(),
            r.rel_err.to_f64()
        );
        if let Some(e) = &r.error {
            let _ = writeln!(pretty, "      error: {e}");
        }
        rows.push(vec![
            level.to_string(),
            weight.to_string(),
            r.h_index.to_string(),
            sfloat(&r.lhs),
            sfloat(&r.rhs),
            r.rhs_exact.as_ref().map(srat).unwrap_or_default(),
            sfloat(&r.abs_err),
            sfloat(&r.rel_err),
            r.pass.to_string(),
            r.error.as_deref().map(csv_safe).unwrap_or_default(),
        ]);
    }

    let aggregate = rep.aggregate.as_ref().map(|a| {
        obj(vec![
            ("lhs", jfloat(&a.lhs)),
            ("rhs", jfloat(&a.rhs)),
            (
                "rhs_exact",
                a.rhs_exact.as_ref().map(jrat).unwrap_or(Value::Null),
            ),
            ("abs_err", jfloat(&a.abs_err)),
            ("rel_err", jfloat(&a.rel_err)),
            ("pass", Value::from(a.pass)),
        ])
    });
    if let Some(a) = &rep.aggregate {
        let verdict = if a.pass { "PASS" } else { "FAIL" };
        let exact = a
            .rhs_exact
            .as_ref()
            .map(|q| format!(" (= {})", srat(q)))
            .unwrap_or_default();
        let _ = writeln!(
            pretty,
            "aggregate: lhs {}  rhs {}{exact}  {verdict}",
            sfloat(&a.lhs),
            sfloat(&a.rhs)
        );
    }
    let all = rep.all_pass();
    let _ = writeln!(
        pretty,
        "{}",
        if all {
            "all records pass"
        } else {
            "SOME RECORDS FAIL"
        }
    );

    let results = obj(vec![
        ("level", Value::from(level)),
        ("weight", Value::from(weight)),
        ("level_type", Value::from(rep.level_type.to_string())),
        ("class_number", Value::from(rep.class_number as u64)),
        ("eigenform_count", Value::from(rep.eigenform_count as u64)),
        ("tol_rel", Value::from(rep.tol_rel)),
        ("tol_abs", Value::from(rep.tol_abs)),
        ("records", Value::Array(records)),
        ("aggregate", aggregate.unwrap_or(Value::Null)),
        ("all_pass", Value::from(all)),
    ]);

    Ok(CmdOut {
        command: "verify",
        params: obj(vec![
            ("level", Value::from(level)),
            ("weight", Value::from(weight)),
            ("tol", Value::from(tol)),
        ]),
        results,
        pretty,
        csv: csv_doc(
            "level,weight,h,lhs,rhs,rhs_exact,abs_err,rel_err,pass,error",
            rows,
        ),
        failed: !all,
    })
}

/// Factor mapping the reported three-form average back to the plain sum
/// of per-form adelic values: the classical tables are scaled by 1, 4,
/// 144/35 at weights 2, 4, 6; higher weights are Γ-normalized instead.
fn sum3_unit_factor(k: u32) -> Rational {
    match k {
        1 => Rational::from(1),
        2 => Rational::from((1, 4)),
        3 => Rational::from((35, 144)),
        _ => Rational::from(gamma_int(k as u64).pow(3u32) * gamma_int(3 * k as u64 - 1)),
    }
}

fn cmd_sum3(level: u64, weight: u32, tol: f64, prec: u32, classical: bool) -> Result<CmdOut> {
    let k = half_weight(weight)?;
    let rep = sum_over_three_with(level, weight, tol, prec)?;

    let mut fields = vec![
        ("level", Value::from(level)),
        ("weight", Value::from(weight)),
        ("level_type", Value::from(rep.level_type.to_string())),
        ("lhs", jfloat(&rep.lhs)),
        ("rhs", jfloat(&rep.rhs)),
        (
            "rhs_exact",
            rep.rhs_exact.as_ref().map(jrat).unwrap_or(Value::Null),
        ),
        ("abs_err", jfloat(&rep.abs_err)),
        ("rel_err", jfloat(&rep.rel_err)),
        ("pass", Value::from(rep.pass)),
    ];
    let mut cl_text = String::new();
    if classical {
        let units = sum3_unit_factor(k);
        let (cv, ct) = classical_view(k, level, &rep.lhs, rep.rhs_exact.as_ref(), &units, prec);
        fields.push(("classical", cv));
        cl_text = format!("classical triple sum = {ct}\n");
    }
    let results = obj(fields);

    let verdict = if rep.pass { "PASS" } else { "FAIL" };
    let exact = rep
        .rhs_exact
        .as_ref()
        .map(|q| format!(" (= {})", srat(q)))
        .unwrap_or_default();
    let pretty = format!(
        "three-form average at level {level}, weight {weight} ({}):\nlhs {}  rhs {}{exact}  abs {:.2e}  rel {:.2e}  {verdict}\n{cl_text}",
        rep.level_type,
        sfloat(&rep.lhs),
        sfloat(&rep.rhs),
        rep.abs_err.to_f64(),
        rep.rel_err.to_f64()
    );

    let rows = vec![vec![
        level.to_string(),
        weight.to_string(),
        rep.level_type.to_string(),
        sfloat(&rep.lhs),
        sfloat(&rep.rhs),
        rep.rhs_exact.as_ref().map(srat).unwrap_or_default(),
        sfloat(&rep.abs_err),
        sfloat(&rep.rel_err),
        rep.pass.to_string(),
    ]];

    Ok(CmdOut {
        command: "sum3",
        params: obj(vec![
            ("level", Value::from(level)),
            ("weight", Value::from(weight)),
            ("tol", Value::from(tol)),
        ]),
        results,
        pretty,
        csv: csv_doc(
            "level,weight,type,lhs,rhs,rhs_exact,abs_err,rel_err,pass",
            rows,
        ),
        failed: !rep.pass,
    })
}

fn cmd_lalg(level: u64, weight: u32, max_den: u64, prec: u32) -> Result<CmdOut> {
    let k = half_weight(weight)?;
    let cs = class_set(level)?;
    let ws = weight_space(&cs, k, prec);
    let es = eigenforms_on(&ws, DEFAULT_PRIME_BUDGET)?;
    let cusp: Vec<_> = es.forms.iter().filter(|f| !f.is_residual).collect();
    let ctx = PeriodCtx::new(&ws);

    let mut triples = Vec::new();
    let mut rows = Vec::new();
    let mut pretty = format!(
        "normalized central values at level {level}, weight {weight} ({} eigenforms):\n",
        cusp.len()
    );
    for (fi, f) in cusp.iter().enumerate() {
        for (gi, g) in cusp.iter().enumerate() {
            for (hi, h) in cusp.iter().enumerate() {
                let eps = epsilon_condition(f, g, h, level)?;
                let v = l_algebraic(f, g, h, &ctx)?;
                let q = nearest_rational(&v, max_den);
                let qf = quatavg::hp::float_rat(prec, &q);
                let dev = Float::with_val(prec, &v - &qf).abs();
                triples.push(obj(vec![
                    ("f", Value::from(fi as u64)),
                    ("g", Value::from(gi as u64)),
                    ("h", Value::from(hi as u64)),
                    ("epsilon_ok", Value::from(eps)),
                    ("value", jfloat(&v)),
                    ("nearest", jrat(&q)),
                    ("abs_dev", jfloat(&dev)),
                ]));
                let _ = writeln!(
                    pretty,
                    "({fi}, {gi}, {hi}): {} ~ {}  (dev {:.2e}{})",
                    sfloat(&v),
                    srat(&q),
                    dev.to_f64(),
                    if eps { "" } else { ", eps = -1" }
                );
                rows.push(vec![
                    level.to_string(),
                    weight.to_string(),
                    fi.to_string(),
                    gi.to_string(),
                    hi.to_string(),
                    eps.to_string(),
                    sfloat(&v),
                    srat(&q),
                    sfloat(&dev),
                ]);
            }
        }
    }

    let results = obj(vec![
        ("level", Value::from(level)),
        ("weight", Value::from(weight)),
        ("eigenform_count", Value::from(cusp.len() as u64)),
        ("max_denominator", Value::from(max_den)),
        ("triples", Value::Array(triples)),
    ]);

    Ok(CmdOut {
        command: "lalg",
        params: obj(vec![
            ("level", Value::from(level)),
            ("weight", Value::from(weight)),
            ("max_den", Value::from(max_den)),
        ]),
        results,
        pretty,
        csv: csv_doc(
            "level,weight,f,g,h,epsilon_ok,value,nearest,abs_dev",
            rows,
        ),
        failed: false,
    })
}
