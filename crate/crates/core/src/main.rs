use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use apedit::config::{parse_pairs, RunConfig};
use apedit::datapipe::{
    build_model_vocabs, build_word_vocab, coarse_filter, gen_synthetic, lm_select, load_parallel, load_triples,
    read_sentences, ter_filter, FilterRules, LmConfig, TerFilterConfig, Triple, TrigramLm,
};
use apedit::editops::{apply_ops, build_op_vocab, extract_ops, script_stats, EditScript, Sentence};
use apedit::infer::{decode_words, post_edit_corpus, PeInput};
use apedit::metrics::{bleu_corpus, ter_corpus};
use apedit::model::{load_checkpoint, Batch, Example, Model, ModelConfig, ModelVocabs, TargetMode};
use apedit::numcore::{GradCheckConfig, Scalar};
use apedit::trainer::{oversample_concat, train, Sample};
use apedit::vocab::{Vocab, VocabKind};

#[derive(Parser, Serialize)]
#[command(name = "apedit", version, about = "Automatic post-editing with edit-operation prediction")]
struct Cli {
    /// Seed for every random choice; overrides config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Floating-point precision for training and decoding.
    #[arg(long, global = true, value_enum, default_value_t = Precision::F32)]
    precision: Precision,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Precision {
    F32,
    F64,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Extract minimal edit scripts turning MT into PE.
    ExtractOps {
        #[arg(long)]
        mt: PathBuf,
        #[arg(long)]
        pe: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply edit scripts to MT sentences.
    ApplyOps {
        #[arg(long)]
        mt: PathBuf,
        #[arg(long)]
        ops: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Edit-operation distribution of a script file.
    Stats {
        #[arg(long)]
        ops: PathBuf,
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// Build a word or op vocabulary.
    BuildVocab {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = KindArg::Words)]
        kind: KindArg,
        #[arg(long, default_value_t = 30000)]
        limit: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model from a config file and overrides.
    Train(TrainArgs),
    /// Post-edit (or, for words models, translate) a corpus.
    Decode {
        #[arg(long)]
        model: PathBuf,
        /// MT hypotheses, or the input side of a words model.
        #[arg(long, alias = "input")]
        mt: PathBuf,
        #[arg(long)]
        src: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the predicted edit scripts.
        #[arg(long)]
        ops_out: Option<PathBuf>,
        #[arg(long, default_value_t = apedit::infer::DEFAULT_MAX_EXTRA)]
        max_extra: usize,
    },
    /// Corpus TER and BLEU.
    Eval {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        no_shifts: bool,
    },
    /// Estimate a trigram language model.
    LmTrain {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Trigram, bigram and unigram interpolation weights.
        #[arg(long, num_args = 3, value_delimiter = ',', default_values_t = [0.5, 0.3, 0.2])]
        weights: Vec<f64>,
    },
    /// Keep the best-scoring lines under a language model.
    LmSelect {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        top_k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drop lines that are not well-formed sentences.
    CoarseFilter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        min_tokens: usize,
        #[arg(long, default_value_t = 80)]
        max_tokens: usize,
        #[arg(long, default_value_t = 0.7)]
        min_alpha: f64,
        #[arg(long)]
        allow_control: bool,
        #[arg(long)]
        allow_upper: bool,
        /// Disable every rule.
        #[arg(long)]
        no_rules: bool,
    },
    /// Back-generate SRC and MT sides for PE lines.
    GenSynthetic {
        #[arg(long)]
        pe: PathBuf,
        #[arg(long)]
        pe2src: PathBuf,
        #[arg(long)]
        pe2mt: PathBuf,
        /// Output prefix; writes PREFIX.src, PREFIX.mt and PREFIX.pe.
        #[arg(long)]
        out: PathBuf,
    },
    /// Select synthetic triples whose TER statistics match the real data.
    FilterTer {
        /// Real corpus prefix (PREFIX.src, PREFIX.mt, PREFIX.pe).
        #[arg(long)]
        real: PathBuf,
        /// Synthetic corpus prefix.
        #[arg(long)]
        synthetic: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        target_size: usize,
        #[arg(long, default_value_t = 1000)]
        subset_size: usize,
        #[arg(long)]
        no_shifts: bool,
    },
    /// Finite-difference gradient check of a tiny model in 64-bit mode.
    GradCheck {
        #[arg(long, value_enum, default_value_t = ArchArg::Chained)]
        arch: ArchArg,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    Words,
    Ops,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ArchArg {
    MonoGlobal,
    MonoForced,
    Chained,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    /// Flat `section.key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `section.key=value` overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    train_src: Option<String>,
    #[arg(long)]
    train_mt: Option<String>,
    #[arg(long)]
    train_pe: Option<String>,
    #[arg(long)]
    dev_src: Option<String>,
    #[arg(long)]
    dev_mt: Option<String>,
    #[arg(long)]
    dev_pe: Option<String>,
    /// Checkpoint path.
    #[arg(long)]
    out: Option<String>,
    /// TSV training log.
    #[arg(long)]
    log: Option<String>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("{}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_lines<I: IntoIterator<Item = String>>(path: Option<&Path>, lines: I) -> Result<()> {
    let mut w = output(path)?;
    for l in lines {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("{}", path.display()))
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn prefix_triples(prefix: &Path) -> Result<Vec<Triple>> {
    Ok(load_triples(&with_ext(prefix, "src"), &with_ext(prefix, "mt"), &with_ext(prefix, "pe"))?)
}

fn write_triples(prefix: &Path, triples: &[Triple]) -> Result<()> {
    write_lines(Some(&with_ext(prefix, "src")), triples.iter().map(|t| t.src.to_string()))?;
    write_lines(Some(&with_ext(prefix, "mt")), triples.iter().map(|t| t.mt.to_string()))?;
    write_lines(Some(&with_ext(prefix, "pe")), triples.iter().map(|t| t.pe.to_string()))
}

fn seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(1)
}

fn extract(mt: &Path, pe: &Path, out: Option<&Path>) -> Result<()> {
    let sides = load_parallel(&[mt, pe])?;
    let scripts = sides[0].iter().zip(&sides[1]).map(|(m, p)| extract_ops(m, p).to_string());
    write_lines(out, scripts)
}

fn apply(mt: &Path, ops: &Path, out: Option<&Path>) -> Result<()> {
    let mts = read_sentences(mt)?;
    let scripts = EditScript::parse_text(&read_text(ops)?)?;
    if scripts.len() != mts.len() {
        bail!("line count mismatch: {} has {} lines, {} has {}", mt.display(), mts.len(), ops.display(), scripts.len());
    }
    let lines = mts
        .iter()
        .zip(&scripts)
        .enumerate()
        .map(|(i, (m, s))| apply_ops(m, s).map(|p| p.to_string()).map_err(|e| anyhow!("line {}: {e}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    write_lines(out, lines)
}

fn stats(ops: &Path, top: usize) -> Result<()> {
    let scripts = EditScript::parse_text(&read_text(ops)?)?;
    let st = script_stats(&scripts)?;
    println!("total\t{}", st.total);
    for e in st.top(top) {
        println!("{}\t{}\t{:.2}", e.op, e.count, e.percent);
    }
    Ok(())
}

fn build_vocab(inputs: &[PathBuf], kind: KindArg, limit: usize, out: Option<&Path>) -> Result<()> {
    let vocab: Vocab = match kind {
        KindArg::Words => {
            let mut all = Vec::new();
            for p in inputs {
                all.extend(read_sentences(p)?);
            }
            build_word_vocab(&all, limit)?
        }
        KindArg::Ops => {
            let mut all = Vec::new();
            for p in inputs {
                all.extend(EditScript::parse_text(&read_text(p)?)?);
            }
            build_op_vocab(&all, limit)?
        }
    };
    let mut w = output(out)?;
    vocab.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

fn run_config(args: &TrainArgs, cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut pairs = match &args.config {
        Some(p) => parse_pairs(&read_text(p)?).with_context(|| format!("{}", p.display()))?,
        None => Vec::new(),
    };
    for s in &args.sets {
        let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {s}"))?;
        pairs.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    let flags = [
        ("train_src", &args.train_src),
        ("train_mt", &args.train_mt),
        ("train_pe", &args.train_pe),
        ("dev_src", &args.dev_src),
        ("dev_mt", &args.dev_mt),
        ("dev_pe", &args.dev_pe),
        ("out", &args.out),
        ("log", &args.log),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            pairs.push((format!("data.{k}"), v.clone()));
        }
    }
    if let Some(s) = cli.seed {
        pairs.push(("model.seed".into(), s.to_string()));
        pairs.push(("train.seed".into(), s.to_string()));
    }
    pairs.push(("train.threads".into(), cli.threads.to_string()));
    cfg.apply_all(&pairs)?;
    cfg.model.validate()?;
    cfg.train.validate()?;
    Ok(cfg)
}

/// Samples from `{prefix}_src/_mt/_pe` data keys. Words models read PE as
/// input and the side named by `data.generate` as target.
fn load_samples(cfg: &RunConfig, prefix: &str) -> Result<Option<Vec<Sample>>> {
    let key = |side: &str| cfg.data(&format!("{prefix}_{side}")).map(PathBuf::from);
    let chained = cfg.model.is_chained();
    match cfg.model.target {
        TargetMode::Ops => {
            let (Some(mt), Some(pe)) = (key("mt"), key("pe")) else {
                return Ok(None);
            };
            let mut paths = vec![mt, pe];
            if chained {
                paths.push(key("src").ok_or_else(|| anyhow!("chained models need data.{prefix}_src"))?);
            }
            let refs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
            let mut sides = load_parallel(&refs)?.into_iter();
            let (mt, pe, src) = (sides.next().unwrap(), sides.next().unwrap(), sides.next());
            let src_iter: Box<dyn Iterator<Item = Option<Sentence>>> = match src {
                Some(s) => Box::new(s.into_iter().map(Some)),
                None => Box::new(std::iter::repeat(None)),
            };
            Ok(Some(
                mt.into_iter()
                    .zip(pe)
                    .zip(src_iter)
                    .map(|((input, target), src)| Sample { src, input, target })
                    .collect(),
            ))
        }
        TargetMode::Words => {
            let side = cfg.data("generate").ok_or_else(|| anyhow!("words models need data.generate = src or mt"))?;
            if side != "src" && side != "mt" {
                bail!("data.generate must be src or mt");
            }
            let (Some(pe), Some(tgt)) = (key("pe"), key(side)) else {
                return Ok(None);
            };
            let sides = load_parallel(&[&pe, &tgt])?;
            let mut it = sides.into_iter();
            let (pe, tgt) = (it.next().unwrap(), it.next().unwrap());
            Ok(Some(
                pe.into_iter()
                    .zip(tgt)
                    .map(|(input, target)| Sample { src: None, input, target })
                    .collect(),
            ))
        }
    }
}

fn run_train<T: Scalar>(cfg: &RunConfig) -> Result<()> {
    let mut corpus = load_samples(cfg, "train")?.ok_or_else(|| anyhow!("training data paths are not configured"))?;
    if let Some(small) = load_samples(cfg, "small")? {
        let factor: usize = cfg
            .data("oversample_factor")
            .unwrap_or("1")
            .parse()
            .context("data.oversample_factor")?;
        corpus = oversample_concat(&corpus, &small, factor)?;
    }
    let dev = load_samples(cfg, "dev")?.unwrap_or_default();
    let out = PathBuf::from(cfg.data("out").ok_or_else(|| anyhow!("data.out (checkpoint path) is required"))?);
    let vocabs = build_model_vocabs(&cfg.model, &corpus)?;
    let mut model = Model::<T>::new(cfg.model.clone(), vocabs)?;
    let mut log: Box<dyn Write> = match cfg.data("log") {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| p.to_owned())?)),
        None => Box::new(io::sink()),
    };
    let state = train(&mut model, &corpus, &dev, &cfg.train, Some(&out), &mut *log)?;
    match state.best_dev_ter {
        Some(t) => println!(
            "best dev TER {t:.2} at step {} after {} steps",
            state.best_step.unwrap_or(0),
            state.step
        ),
        None => println!("trained {} steps (no dev set)", state.step),
    }
    Ok(())
}

fn run_decode<T: Scalar>(
    cli: &Cli,
    model: &Path,
    mt: &Path,
    src: Option<&Path>,
    out: Option<&Path>,
    ops_out: Option<&Path>,
    max_extra: usize,
) -> Result<()> {
    let model: Model<T> = load_checkpoint(model)?;
    let inputs = read_sentences(mt)?;
    if model.config().target == TargetMode::Words {
        let lines = inputs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                decode_words(&model, s, 2 * s.len() + 10)
                    .map(|o| o.to_string())
                    .map_err(|e| anyhow!("line {}: {e}", i + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        return write_lines(out, lines);
    }
    let srcs: Vec<Option<Sentence>> = match src {
        Some(p) => {
            let s = read_sentences(p)?;
            if s.len() != inputs.len() {
                bail!("line count mismatch: {} has {} lines, {} has {}", p.display(), s.len(), mt.display(), inputs.len());
            }
            s.into_iter().map(Some).collect()
        }
        None => vec![None; inputs.len()],
    };
    let pe_inputs: Vec<PeInput> = srcs.into_iter().zip(inputs).collect();
    let decoded = post_edit_corpus(&model, &pe_inputs, max_extra, cli.threads)
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| anyhow!("line {}: {e}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(p) = ops_out {
        write_lines(Some(p), decoded.iter().map(|d| d.script.to_string()))?;
    }
    write_lines(out, decoded.iter().map(|d| d.output.to_string()))
}

fn eval(hyp: &Path, reference: &Path, shifts: bool) -> Result<()> {
    let sides = load_parallel(&[hyp, reference])?;
    let pairs = || sides[0].iter().zip(&sides[1]);
    let ter = ter_corpus(pairs(), shifts)?;
    let bleu = bleu_corpus(pairs())?;
    println!("TER {ter:.2} BLEU {:.2}", bleu.score);
    Ok(())
}

fn lm_train(corpus: &Path, out: &Path, alpha: f64, weights: &[f64]) -> Result<()> {
    let lines = read_sentences(corpus)?;
    let config = LmConfig {
        alpha,
        weights: [weights[0], weights[1], weights[2]],
    };
    let lm = TrigramLm::train(&lines, config)?;
    let mut w = output(Some(out))?;
    lm.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

fn lm_sel(lm: &Path, input: &Path, top_k: usize, out: Option<&Path>) -> Result<()> {
    if top_k == 0 {
        bail!("--top-k must be at least 1");
    }
    let file = File::open(lm).with_context(|| format!("{}", lm.display()))?;
    let lm = TrigramLm::read_from(BufReader::new(file))?;
    let lines = read_sentences(input)?;
    write_lines(out, lm_select(&lm, &lines, top_k).iter().map(|s| s.to_string()))
}

fn gen_syn<T: Scalar>(pe: &Path, pe2src: &Path, pe2mt: &Path, out: &Path, threads: usize) -> Result<()> {
    let lines = read_sentences(pe)?;
    let a: Model<T> = load_checkpoint(pe2src)?;
    let b: Model<T> = load_checkpoint(pe2mt)?;
    let result = gen_synthetic(&lines, &a, &b, threads)?;
    write_triples(out, &result.triples)?;
    eprintln!("generated {} triples, skipped {}", result.triples.len(), result.skipped.len());
    Ok(())
}

fn tiny_vocab(kind: VocabKind, extra: &[&str]) -> Vocab {
    let mut symbols: Vec<String> = kind.reserved().iter().map(|s| s.to_string()).collect();
    symbols.extend(extra.iter().map(|s| s.to_string()));
    Vocab::from_symbols(kind, symbols).expect("valid tiny vocabulary")
}

fn grad_check(arch: ArchArg, step: f64, tolerance: f64, seed: u64) -> Result<bool> {
    let base = match arch {
        ArchArg::MonoGlobal => ModelConfig::mono_global(),
        ArchArg::MonoForced => ModelConfig::mono_forced(),
        ArchArg::Chained => ModelConfig::chained(),
    };
    let config = ModelConfig { seed, ..base.with_sizes(3, 3) };
    let chained = config.is_chained();
    let vocabs = ModelVocabs {
        src: chained.then(|| tiny_vocab(VocabKind::Words, &["x", "y", "z"])),
        input: tiny_vocab(VocabKind::Words, &["a", "b", "c"]),
        output: tiny_vocab(VocabKind::Ops, &["INS|a", "INS|b"]),
    };
    let mut model = Model::<f64>::new(config, vocabs)?;
    model.params_mut().randomize(1.0, &mut ChaCha8Rng::seed_from_u64(seed));
    let data = [("x y z", "a b c a", "a c a b"), ("z", "b", "b a")];
    let examples: Vec<Example> = data
        .iter()
        .map(|(s, m, p)| {
            let src = Sentence::parse(s);
            model.example(chained.then_some(&src), &Sentence::parse(m), &Sentence::parse(p))
        })
        .collect::<Result<_, _>>()?;
    let refs: Vec<&Example> = examples.iter().collect();
    let batch = Batch::new(&refs)?;
    let cfg = GradCheckConfig {
        step,
        seed,
        ..GradCheckConfig::default()
    };
    let report = model.check_gradients(&batch, Some(seed.wrapping_add(10)), &cfg)?;
    for (name, err) in &report.per_param {
        println!("{name}\t{err:.3e}");
    }
    let ok = report.max_rel_error < tolerance;
    println!(
        "max relative error {:.3e} over {} entries: {}",
        report.max_rel_error,
        report.entries_checked,
        if ok { "ok" } else { "FAILED" }
    );
    Ok(ok)
}

fn run(cli: &Cli) -> Result<bool> {
    let f64_mode = cli.precision == Precision::F64;
    match &cli.command {
        Command::ExtractOps { mt, pe, out } => extract(mt, pe, out.as_deref())?,
        Command::ApplyOps { mt, ops, out } => apply(mt, ops, out.as_deref())?,
        Command::Stats { ops, top } => stats(ops, *top)?,
        Command::BuildVocab { input, kind, limit, out } => build_vocab(input, *kind, *limit, out.as_deref())?,
        Command::Train(args) => {
            let cfg = run_config(args, cli)?;
            for (k, v) in cfg.effective() {
                eprintln!("{k}={v}");
            }
            if f64_mode {
                run_train::<f64>(&cfg)?
            } else {
                run_train::<f32>(&cfg)?
            }
        }
        Command::Decode {
            model,
            mt,
            src,
            out,
            ops_out,
            max_extra,
        } => {
            let a = (model.as_path(), mt.as_path(), src.as_deref(), out.as_deref(), ops_out.as_deref(), *max_extra);
            if f64_mode {
                run_decode::<f64>(cli, a.0, a.1, a.2, a.3, a.4, a.5)?
            } else {
                run_decode::<f32>(cli, a.0, a.1, a.2, a.3, a.4, a.5)?
            }
        }
        Command::Eval { hyp, reference, no_shifts } => eval(hyp, reference, !no_shifts)?,
        Command::LmTrain {
            corpus,
            out,
            alpha,
            weights,
        } => lm_train(corpus, out, *alpha, weights)?,
        Command::LmSelect { lm, input, top_k, out } => lm_sel(lm, input, *top_k, out.as_deref())?,
        Command::CoarseFilter {
            input,
            out,
            min_tokens,
            max_tokens,
            min_alpha,
            allow_control,
            allow_upper,
            no_rules,
        } => {
            let rules = if *no_rules {
                FilterRules::disabled()
            } else {
                FilterRules {
                    min_tokens: Some(*min_tokens),
                    max_tokens: Some(*max_tokens),
                    min_alpha_punct: Some(*min_alpha),
                    reject_control: !allow_control,
                    reject_all_upper: !allow_upper,
                }
            };
            let text = read_text(input)?;
            write_lines(out.as_deref(), coarse_filter(text.lines().map(str::to_owned), &rules))?
        }
        Command::GenSynthetic { pe, pe2src, pe2mt, out } => {
            if f64_mode {
                gen_syn::<f64>(pe, pe2src, pe2mt, out, cli.threads)?
            } else {
                gen_syn::<f32>(pe, pe2src, pe2mt, out, cli.threads)?
            }
        }
        Command::FilterTer {
            real,
            synthetic,
            out,
            target_size,
            subset_size,
            no_shifts,
        } => {
            let cfg = TerFilterConfig {
                target_size: *target_size,
                subset_size: *subset_size,
                seed: seed(cli),
                use_shifts: !no_shifts,
            };
            let selected = ter_filter(&prefix_triples(real)?, &prefix_triples(synthetic)?, &cfg)?;
            write_triples(out, &selected)?
        }
        Command::GradCheck { arch, step, tolerance } => return grad_check(*arch, *step, *tolerance, seed(cli)),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let shown = serde_json::to_string(&cli).unwrap_or_default();
    eprintln!("config {shown} seed={}", seed(&cli));
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
