//! Command-line front end for dsfkit: evaluation, extension, exhaustive
//! verification, greedy maximization, training, and a self-checking
//! reproduction harness for the desk-scale reference cases.

pub mod io;

use clap::{Arg, Command};
use dsfkit::analysis::{
    self, classify_two_layer_scmm, expand_two_layer_scmm, is_modular_at, symmetrize_five_vector,
    Property, ScmmClassification,
};
use dsfkit::concave::ConcaveUnit;
use dsfkit::dsf::DsfModel;
use dsfkit::error::{DsfError, Result};
use dsfkit::handle::SetFunctionHandle;
use dsfkit::learn::{fit_max_margin, fit_regression, TrainConfig};
use dsfkit::optimize::{greedy_max, Constraint};
use dsfkit::set::{powerset, Subset};
use dsfkit::zoo;
use num_rational::Ratio;
use std::io::Write;
use std::path::Path;

/// Formats a number with 12 significant digits, printing exact integers
/// without a fractional part.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.fract() == 0.0 && x.abs() < 1e12 {
        return format!("{}", x as i64);
    }
    // round to 12 significant digits, then print the shortest form
    let rounded: f64 = format!("{:.11e}", x).parse().unwrap();
    format!("{rounded}")
}

fn fmt_ratio(r: Ratio<i64>) -> String {
    if *r.denom() == 1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Named models available to `--model`/`--preset` alongside JSON file paths.
pub const MODEL_PRESETS: [&str; 8] =
    ["laminar6", "overlap6", "fourblocks8", "fig1", "fk1", "fk2", "thm41:sqrt", "thm41:trunc3"];

fn preset_model(name: &str) -> Result<Option<DsfModel<f64>>> {
    Ok(match name {
        "laminar6" => Some(zoo::laminar6_model()),
        "overlap6" => Some(zoo::overlap6_model()),
        "fourblocks8" => Some(zoo::fourblocks8_model()),
        "fig1" => Some(zoo::fig1_model()),
        "fk1" => Some(zoo::make_fk_hat(1)?),
        "fk2" => Some(zoo::make_fk_hat(2)?),
        "thm41:sqrt" => Some(zoo::thm41_model(ConcaveUnit::sqrt())),
        "thm41:trunc3" => Some(zoo::thm41_model(ConcaveUnit::truncate(3.0)?)),
        _ => None,
    })
}

/// Resolves a `--model` argument: a preset name, otherwise a JSON file path.
pub fn resolve_model(spec: &str) -> Result<DsfModel<f64>> {
    if let Some(m) = preset_model(spec)? {
        return Ok(m);
    }
    if Path::new(spec).exists() {
        return io::load_model(Path::new(spec));
    }
    Err(DsfError::InvalidArgument(format!("unknown preset or missing model file '{spec}'")))
}

/// Resolves to a set-function handle; accepts the handle-only presets
/// (`k4`, `truncrank8`) in addition to everything `resolve_model` takes.
pub fn resolve_handle(spec: &str) -> Result<SetFunctionHandle> {
    match spec {
        "k4" => Ok(zoo::k4_rank_handle()),
        "truncrank8" => Ok(zoo::truncated_rank8_handle()),
        other => Ok(resolve_model(other)?.handle(other)),
    }
}

fn parse_labels(ground: &std::sync::Arc<dsfkit::set::GroundSet>, csv: &str) -> Result<Subset> {
    if csv.is_empty() {
        return Ok(Subset::empty(ground));
    }
    let labels: Vec<&str> = csv.split(',').collect();
    Subset::from_labels(ground, &labels)
}

fn parse_f64_list(csv: &str) -> Result<Vec<f64>> {
    csv.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| DsfError::InvalidArgument(format!("bad number '{s}'"))))
        .collect()
}

fn cli_command() -> Command {
    let model_arg = Arg::new("model").long("model").required(true).help("preset name or model JSON path");
    Command::new("dsfkit")
        .about("deep submodular function toolkit")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("eval").about("evaluate f(A)").arg(model_arg.clone()).arg(
                Arg::new("set").long("set").default_value("").help("comma-separated element labels"),
            ),
        )
        .subcommand(
            Command::new("extension")
                .about("evaluate the concave extension at a real vector")
                .arg(model_arg.clone())
                .arg(Arg::new("x").long("x").required(true).help("comma-separated coordinates")),
        )
        .subcommand(
            Command::new("verify")
                .about("exhaustively verify properties")
                .arg(Arg::new("model").long("model").help("preset name or model JSON path"))
                .arg(Arg::new("preset").long("preset").help("alias for --model"))
                .arg(Arg::new("props").long("props").required(true).help("comma-separated properties"))
                .arg(Arg::new("threads").long("threads").value_parser(clap::value_parser!(usize))),
        )
        .subcommand(
            Command::new("maximize")
                .about("greedy maximization")
                .arg(model_arg.clone())
                .arg(Arg::new("cardinality").long("cardinality").value_parser(clap::value_parser!(usize)))
                .arg(Arg::new("knapsack").long("knapsack").value_parser(clap::value_parser!(f64)).help("budget"))
                .arg(Arg::new("costs").long("costs").help("comma-separated knapsack costs")),
        )
        .subcommand(
            Command::new("learn")
                .about("train a model on a JSONL dataset")
                .arg(Arg::new("mode").long("mode").required(true).value_parser(["regression", "maxmargin"]))
                .arg(model_arg)
                .arg(Arg::new("data").long("data").required(true))
                .arg(Arg::new("epochs").long("epochs").value_parser(clap::value_parser!(usize)).default_value("50"))
                .arg(Arg::new("lr").long("lr").value_parser(clap::value_parser!(f64)).default_value("0.05"))
                .arg(Arg::new("lambda").long("lambda").value_parser(clap::value_parser!(f64)).default_value("0"))
                .arg(Arg::new("seed").long("seed").value_parser(clap::value_parser!(u64)).default_value("0"))
                .arg(Arg::new("budget").long("budget").value_parser(clap::value_parser!(usize)).default_value("0"))
                .arg(Arg::new("batch").long("batch").value_parser(clap::value_parser!(usize)).default_value("8"))
                .arg(Arg::new("out").long("out").help("path to save the trained model JSON")),
        )
        .subcommand(
            Command::new("repro")
                .about("reproduce a reference case and self-check the values")
                .arg(Arg::new("case").long("case").required(true)),
        )
        .subcommand(
            Command::new("save-preset")
                .about("write a preset model to a JSON file")
                .arg(Arg::new("preset").long("preset").required(true))
                .arg(Arg::new("out").long("out").required(true)),
        )
        .disable_version_flag(true)
}

/// Runs the CLI on the given arguments, writing to `out`; returns the exit
/// code: 0 pass, 1 verification failure, 2 usage error.
pub fn run_cli<I, S>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let matches = match cli_command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(out, "{e}");
            // help/version requests count as success, everything else is usage
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match matches.subcommand() {
        Some(("eval", m)) => cmd_eval(m, out),
        Some(("extension", m)) => cmd_extension(m, out),
        Some(("verify", m)) => cmd_verify(m, out),
        Some(("maximize", m)) => cmd_maximize(m, out),
        Some(("learn", m)) => cmd_learn(m, out),
        Some(("repro", m)) => cmd_repro(m, out),
        Some(("save-preset", m)) => cmd_save_preset(m, out),
        _ => unreachable!("subcommand required"),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            2
        }
    }
}

type Out<'a> = &'a mut dyn Write;

fn wln(out: Out, s: String) -> Result<()> {
    writeln!(out, "{s}").map_err(|e| DsfError::Io(e.to_string()))
}

fn cmd_eval(m: &clap::ArgMatches, out: Out) -> Result<i32> {
    let f = resolve_handle(m.get_one::<String>("model").unwrap())?;
    let a = parse_labels(f.ground(), m.get_one::<String>("set").unwrap())?;
    wln(out, fmt_num(f.eval(&a)?))?;
    Ok(0)
}

fn cmd_extension(m: &clap::ArgMatches, out: Out) -> Result<i32> {
    let model = resolve_model(m.get_one::<String>("model").unwrap())?;
    let x = parse_f64_list(m.get_one::<String>("x").unwrap())?;
    wln(out, fmt_num(model.concave_extension(&x)?))?;
    Ok(0)
}

fn cmd_verify(m: &clap::ArgMatches, out: Out) -> Result<i32> {
    let spec = m
        .get_one::<String>("model")
        .or_else(|| m.get_one::<String>("preset"))
        .ok_or_else(|| DsfError::InvalidArgument("verify needs --model or --preset".into()))?;
    let f = resolve_handle(spec)?;
    let props: Vec<Property> = m
        .get_one::<String>("props")
        .unwrap()
        .split(',')
        .map(Property::parse)
        .collect::<Result<_>>()?;
    let threads = m.get_one::<usize>("threads").copied().unwrap_or_else(analysis::default_threads);
    let reports = analysis::verify_properties_with_threads(&f, &props, threads)?;
    let mut all_pass = true;
    for r in &reports {
        write!(out, "{r}").map_err(|e| DsfError::Io(e.to_string()))?;
        all_pass &= r.pass;
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_maximize(m: &clap::ArgMatches, out: Out) -> Result<i32> {
    let f = resolve_handle(m.get_one::<String>("model").unwrap())?;
    let constraint = match (m.get_one::<usize>("cardinality"), m.get_one::<f64>("knapsack")) {
        (Some(&k), None) => Constraint::Cardinality(k),
        (None, Some(&budget)) => {
            let costs = parse_f64_list(
                m.get_one::<String>("costs")
                    .ok_or_else(|| DsfError::InvalidArgument("--knapsack requires --costs".into()))?,
            )?;
            Constraint::Knapsack { budget, costs }
        }
        _ => {
            return Err(DsfError::InvalidArgument(
                "maximize needs exactly one of --cardinality or --knapsack".into(),
            ))
        }
    };
    let (set, value, trace) = greedy_max(&f, &constraint)?;
    wln(out, format!("set: {}", set.label_vec().join(",")))?;
    wln(out, format!("value: {}", fmt_num(value)))?;
    let picks: Vec<String> = trace
        .picks
        .iter()
        .map(|&(id, gain)| format!("{}:{}", f.ground().label(id), fmt_num(gain)))
        .collect();
    wln(out, format!("picks: {}", picks.join(",")))?;
    Ok(0)
}

fn cmd_learn(m: &clap::ArgMatches, out: Out) -> Result<i32> {
    let topology = resolve_model(m.get_one::<String>("model").unwrap())?;
    let data_path = Path::new(m.get_one::<String>("data").unwrap());
    let mode = m.get_one::<String>("mode").unwrap();
    let cfg = TrainConfig {
        lr0: *m.get_one::<f64>("lr").unwrap(),
        epochs: *m.get_one::<usize>("epochs").unwrap(),
        lambda: *m.get_one::<f64>("lambda").unwrap(),
        seed: *m.get_one::<u64>("seed").unwrap(),
        budget: *m.get_one::<usize>("budget").unwrap(),
        batch_size: *m.get_one::<usize>("batch").unwrap(),
        ..Default::default()
    };
    let (trained, history) = if mode == "regression" {
        let data = io::load_regression_dataset(topology.ground(), data_path)?;
        fit_regression(&topology, &data, &cfg)?
    } else {
        let data = io::load_summary_dataset(topology.ground(), data_path)?;
        fit_max_margin(&topology, &data, &cfg)?
    };
    wln(out, "epoch,loss".to_string())?;
    for (epoch, loss) in history.iter().enumerate() {
        wln(out, format!("{epoch},{}", fmt_num(*loss)))?;
    }
    if let Some(path) = m.get_one::<String>("out") {
        io::save_model(&trained, Path::new(path))?;
    }
    Ok(0)
}

fn cmd_save_preset(m: &clap::ArgMatches, _out: Out) -> Result<i32> {
    let model = resolve_model(m.get_one::<String>("preset").unwrap())?;
    io::save_model(&model, Path::new(m.get_one::<String>("out").unwrap()))?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// repro harness: every case recomputes its values and compares them against
// expectations embedded here, exiting 1 on any mismatch.
// ---------------------------------------------------------------------------

struct Checker<'a> {
    out: Out<'a>,
    failures: usize,
}

impl<'a> Checker<'a> {
    fn check(&mut self, what: &str, ok: bool, detail: String) -> Result<()> {
        if ok {
            wln(self.out, format!("  {what}: ok ({detail})"))
        } else {
            self.failures += 1;
            wln(self.out, format!("  {what}: MISMATCH ({detail})"))
        }
    }
}

/// Preset model/oracle agreement on every subset plus polymatroid properties.
fn repro_model_oracle(
    c: &mut Checker,
    model: &DsfModel<f64>,
    oracle: &SetFunctionHandle,
) -> Result<()> {
    let ground = model.ground().clone();
    let mut worst = 0.0f64;
    for a in powerset(&ground, analysis::BRUTE_FORCE_CAP)? {
        worst = worst.max((model.evaluate(&a)? - oracle.eval(&a)?).abs());
    }
    c.check("model equals oracle on all subsets", worst <= 1e-9, format!("max gap {worst:e}"))?;
    let props = [Property::Submodular, Property::Monotone, Property::Normalized];
    for r in analysis::verify_properties(oracle, &props)? {
        c.check(&format!("{} holds", r.property), r.pass, format!("checked {}", r.subsets_checked))?;
    }
    Ok(())
}

fn repro_k4(c: &mut Checker) -> Result<()> {
    let f = zoo::k4_rank_handle();
    let ground = f.ground().clone();
    // edge bits: ab=0, ac=1, ad=2, bc=3, bd=4, cd=5
    let triangles: [u64; 4] = [
        0b001011, // abc: ab,ac,bc
        0b010101, // abd: ab,ad,bd
        0b100110, // acd: ac,ad,cd
        0b111000, // bcd: bc,bd,cd
    ];
    let mut rank_ok = true;
    let mut modular_ok = true;
    for mask in 0..64u64 {
        let a = Subset::from_mask(&ground, mask);
        let is_triangle = triangles.contains(&mask);
        let expected = if a.len() <= 3 {
            a.len() as f64 - if is_triangle { 1.0 } else { 0.0 }
        } else {
            3.0
        };
        rank_ok &= f.eval(&a)? == expected;
        // modular exactly on cycle-free patterns: a set is dependent iff it
        // contains a triangle or has more than 3 edges
        let contains_cycle = a.len() > 3 || triangles.iter().any(|&t| t & mask == t);
        modular_ok &= is_modular_at(&f, &a)? == !contains_cycle;
    }
    c.check("rank signature over all 64 subsets", rank_ok, "exact integers".into())?;
    c.check("is_modular_at flags exactly the cyclic patterns", modular_ok, "64 subsets".into())?;
    Ok(())
}

fn repro_fk(c: &mut Checker, k: usize) -> Result<()> {
    let model = zoo::make_fk_hat(k)?;
    let oracle = zoo::fk_hat_handle(k)?;
    repro_model_oracle(c, &model, &oracle)?;
    let rep = analysis::check_fk_membership(&oracle, k)?;
    c.check(
        &format!("F_{k} membership"),
        rep.pass,
        format!("{} partition checks", rep.subsets_checked),
    )
}

fn repro_table1(c: &mut Checker) -> Result<()> {
    let expected: [[Ratio<i64>; 5]; 5] = [
        [Ratio::new(1, 1); 5],
        [Ratio::new(1, 1), Ratio::new(2, 1), Ratio::new(2, 1), Ratio::new(2, 1), Ratio::new(2, 1)],
        [Ratio::new(1, 1), Ratio::new(1, 1), Ratio::new(2, 1), Ratio::new(2, 1), Ratio::new(2, 1)],
        [Ratio::new(1, 1), Ratio::new(2, 1), Ratio::new(2, 1), Ratio::new(3, 1), Ratio::new(4, 1)],
        [Ratio::new(7, 12), Ratio::new(1, 1), Ratio::new(5, 6), Ratio::new(1, 1), Ratio::new(1, 1)],
    ];
    for (f, want) in zoo::table1_functions().iter().zip(&expected) {
        let got = symmetrize_five_vector(f)?.values;
        let row: Vec<String> = got.iter().map(|&r| fmt_ratio(r)).collect();
        c.check(&format!("{} five-vector = [{}]", f.name(), row.join(", ")), got == *want, "exact".into())?;
    }
    Ok(())
}

fn repro_fig1(c: &mut Checker) -> Result<()> {
    let model = zoo::fig1_model();
    let ground = model.ground().clone();
    let b = Subset::from_labels(&ground, &["b"])?;
    let gb = model.evaluate(&b)?;
    c.check("g({b}) = sqrt(8)+1", (gb - (8.0f64.sqrt() + 1.0)).abs() < 1e-12, fmt_num(gb))?;
    let dhf = Subset::from_labels(&ground, &["d", "h", "f"])?;
    let gdhf = model.evaluate(&dhf)?;
    c.check("g({d,h,f}) = 9", gdhf == 9.0, fmt_num(gdhf))?;
    let (set, value, _) = greedy_max(&model.handle("fig1"), &Constraint::Cardinality(3))?;
    c.check(
        "greedy top-3 is {d,f,h} with value 9",
        set == dhf && value == 9.0,
        format!("{{{}}} value {}", set.label_vec().join(","), fmt_num(value)),
    )
}

fn repro_thm41(c: &mut Checker, phi: ConcaveUnit<f64>, expect_scmm: bool) -> Result<()> {
    match classify_two_layer_scmm(&phi)? {
        ScmmClassification::IsScmm { c1, c2 } => {
            c.check(
                "classified as SCMM",
                expect_scmm,
                format!("c1 = {}, c2 = {}", fmt_num(c1), fmt_num(c2)),
            )?;
            if expect_scmm {
                c.check("c1 matches", (c1 - 0.02155).abs() < 1e-5, fmt_num(c1))?;
                c.check("c2 matches", (c2 - 0.48601).abs() < 1e-5, fmt_num(c2))?;
                let nested = zoo::thm41_handle(phi.clone());
                let expansion = expand_two_layer_scmm(&phi)?;
                let mut worst = 0.0f64;
                for a in powerset(nested.ground(), analysis::BRUTE_FORCE_CAP)? {
                    worst = worst.max((nested.eval(&a)? - expansion.eval(&a)?).abs());
                }
                c.check("expansion equals nested form on 64 subsets", worst <= 1e-9, format!("max gap {worst:e}"))?;
            }
        }
        ScmmClassification::NotScmm { c1, c2, violated } => {
            c.check("classified as not-SCMM", !expect_scmm, violated)?;
            if !expect_scmm {
                c.check("c1 = -3/2 exactly", c1 == -1.5, format!("c1 = {}, c2 = {}", fmt_num(c1), fmt_num(c2)))?;
            }
        }
    }
    Ok(())
}

fn cmd_repro(m: &clap::ArgMatches, out: Out) -> Result<i32> {
    let case = m.get_one::<String>("case").unwrap().as_str();
    wln(out, format!("case {case}:"))?;
    let mut c = Checker { out, failures: 0 };
    match case {
        "laminar6" => repro_model_oracle(&mut c, &zoo::laminar6_model(), &zoo::laminar6_handle())?,
        "overlap6" => repro_model_oracle(&mut c, &zoo::overlap6_model(), &zoo::overlap6_handle())?,
        "fourblocks8" => repro_model_oracle(&mut c, &zoo::fourblocks8_model(), &zoo::fourblocks8_handle())?,
        "k4" => repro_k4(&mut c)?,
        "fk1" => repro_fk(&mut c, 1)?,
        "fk2" => repro_fk(&mut c, 2)?,
        "table1" => repro_table1(&mut c)?,
        "fig1" => repro_fig1(&mut c)?,
        "thm41:sqrt" => repro_thm41(&mut c, ConcaveUnit::sqrt(), true)?,
        "thm41:trunc3" => repro_thm41(&mut c, ConcaveUnit::truncate(3.0)?, false)?,
        other => return Err(DsfError::InvalidArgument(format!("unknown repro case '{other}'"))),
    }
    let failures = c.failures;
    if failures == 0 {
        wln(out, format!("case {case}: pass"))?;
        Ok(0)
    } else {
        wln(out, format!("case {case}: FAIL ({failures} mismatches)"))?;
        Ok(1)
    }
}
