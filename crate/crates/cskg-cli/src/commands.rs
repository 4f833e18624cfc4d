//! Subcommand implementations. Each resolves its inputs from flags first and
//! the config file second, validates before touching the filesystem, and
//! stamps every artifact with the config digest and seed.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as AnyhowContext};

use cskg::anno::{
    build_annotation_records, fleiss_kappa, kappa_matrix, read_hits_csv, read_ratings_csv,
    sample_for_eval, write_hits_csv, KappaMode,
};
use cskg::compare::{accuracy_breakdown, coverage, coverage_matrix, CoverageReport};
use cskg::ingest::{
    open_input, read_kg_jsonl, write_tuples_jsonl, AtomicTsvParser, ConceptNetParser,
    CurationRules, Curator, IngestConfig, IngestReport, InputFormat, JsonlParser,
};
use cskg::kg::{KgId, KnowledgeGraph, MatchMode, RelationId, RelationMapping, Split, Tuple};
use cskg::metrics::{read_generations_jsonl, score_corpus, score_per_relation, ScoreReport};
use cskg::normalize::Normalizer;
use cskg::split::{make_adversarial_split, verify_split, SplitConfig};
use cskg::verbalize::{
    build_fewshot_block, check_training_exportable, render_prefix, render_training_line,
};

use crate::artifacts::{self, Meta};
use crate::config::{self, FileConfig};
use crate::{Command, MappingArgs};

pub struct Context {
    pub seed: u64,
    pub file: FileConfig,
}

fn require<T>(flag: Option<T>, section: Option<T>, what: &str) -> anyhow::Result<T> {
    flag.or(section)
        .ok_or_else(|| anyhow!(cskg::Error::Config(format!("missing required {what}"))))
}

fn load_mapping(
    args: &MappingArgs,
    ctx: &Context,
) -> anyhow::Result<Cow<'static, RelationMapping>> {
    let path = args.mapping.clone().or_else(|| ctx.file.mapping.clone());
    match path {
        None => Ok(Cow::Borrowed(cskg::data::default_mapping())),
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("mapping file {}", path.display()))?;
            Ok(Cow::Owned(RelationMapping::from_tsv(
                &text,
                &path.display().to_string(),
            )?))
        }
    }
}

fn resolve_mode(args: &MappingArgs, ctx: &Context) -> anyhow::Result<MatchMode> {
    let raw = args.mode.clone().or_else(|| ctx.file.mode.clone());
    match raw {
        None => Ok(MatchMode::AllTargets),
        Some(raw) => MatchMode::parse(&raw)
            .ok_or_else(|| anyhow!(cskg::Error::Config(format!("unknown mode {raw:?}")))),
    }
}

fn resolve_format(flag: Option<String>, ctx: &Context) -> String {
    flag.or_else(|| ctx.file.format.clone())
        .unwrap_or_else(|| "json".to_string())
}

fn read_kg(path: &Path, kg: &str) -> anyhow::Result<KnowledgeGraph> {
    let (graph, report) = read_kg_jsonl(path, kg, IngestConfig::new(InputFormat::GenericJsonl))
        .with_context(|| format!("loading {}", path.display()))?;
    if report.rejected_by.values().sum::<u64>() > 0 {
        eprintln!(
            "warning: {}: {} records rejected while loading ({:?})",
            path.display(),
            report.total_rejected(),
            report.rejected_by
        );
    }
    Ok(graph)
}

pub fn dispatch(command: Command, ctx: Context) -> anyhow::Result<()> {
    match command {
        Command::Ingest {
            format,
            input,
            output,
            kg,
            preset,
            english_only,
            min_weight,
            keep_equal_weight,
            whitelist,
            blacklist,
            dedup,
            curate,
            rules,
            report,
            mapping,
        } => cmd_ingest(
            &ctx, format, input, output, kg, preset, english_only, min_weight,
            keep_equal_weight, whitelist, blacklist, dedup, curate, rules, report, &mapping,
        ),
        Command::Normalize {
            input,
            kg,
            output,
            mapping,
        } => cmd_normalize(&ctx, input, kg, output, &mapping),
        Command::Compare {
            source,
            source_kg,
            target,
            target_kg,
            inputs,
            format,
            output,
            mapping,
        } => cmd_compare(
            &ctx, source, source_kg, target, target_kg, inputs, format, output, &mapping,
        ),
        Command::Split {
            input,
            kg,
            ratios,
            cap,
            min_confidence,
            preserve_upstream,
            output_dir,
        } => cmd_split(&ctx, input, kg, ratios, cap, min_confidence, preserve_upstream, output_dir),
        Command::Score {
            input,
            kg,
            per_relation,
            format,
            output,
        } => cmd_score(&ctx, input, kg, per_relation, format, output),
        Command::SampleHits {
            input,
            kg,
            count,
            output,
        } => cmd_sample_hits(&ctx, input, kg, count, output),
        Command::AggregateVotes {
            ratings,
            hits,
            output,
            breakdown,
            baseline,
            kappa_mode,
            raters,
        } => cmd_aggregate_votes(&ctx, ratings, hits, output, breakdown, baseline, kappa_mode, raters),
        Command::ExportTraining {
            input,
            kg,
            split,
            output,
        } => cmd_export_training(&ctx, input, kg, split, output),
        Command::ExportPrompts {
            input,
            kg,
            output,
            fewshot,
            query_head,
            k,
        } => cmd_export_prompts(&ctx, input, kg, output, fewshot, query_head, k),
        Command::Stats {
            input,
            kg,
            format,
            output,
        } => cmd_stats(&ctx, input, kg, format, output),
        Command::Pipeline { file } => cmd_pipeline(ctx, file),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_ingest(
    ctx: &Context,
    format: Option<String>,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    kg: Option<String>,
    preset: Option<String>,
    english_only: bool,
    min_weight: Option<f64>,
    keep_equal_weight: bool,
    whitelist: Option<String>,
    blacklist: Option<String>,
    dedup: bool,
    curate: bool,
    rules: Option<PathBuf>,
    report_path: Option<PathBuf>,
    mapping_args: &MappingArgs,
) -> anyhow::Result<()> {
    let section = ctx.file.section("ingest");
    let input = require(input, config::get_path(section, "input"), "ingest --input")?;
    let output = require(output, config::get_path(section, "output"), "ingest --output")?;
    let preset = preset.or_else(|| config::get_str(section, "preset"));

    let mut config = match preset.as_deref() {
        Some("conceptnet") => IngestConfig::conceptnet(),
        Some("transomcs") => IngestConfig::transomcs(),
        Some("atomic") => IngestConfig::atomic(),
        Some(other) => bail!(cskg::Error::Config(format!("unknown preset {other:?}"))),
        None => {
            let format = require(
                format.clone(),
                config::get_str(section, "format"),
                "ingest --format",
            )?;
            let format = InputFormat::parse(&format)
                .ok_or_else(|| anyhow!(cskg::Error::Config(format!("unknown format {format:?}"))))?;
            IngestConfig::new(format)
        }
    };
    if let Some(format) = format.or_else(|| config::get_str(section, "format")) {
        config.format = InputFormat::parse(&format)
            .ok_or_else(|| anyhow!(cskg::Error::Config(format!("unknown format {format:?}"))))?;
    }
    if english_only || config::get_bool(section, "english_only").unwrap_or(false) {
        config.english_only = true;
    }
    if let Some(w) = min_weight.or_else(|| config::get_f64(section, "min_weight")) {
        config.min_weight = Some(w);
    }
    if keep_equal_weight || config::get_bool(section, "keep_equal_weight").unwrap_or(false) {
        config.keep_equal_weight = true;
    }
    let parse_list = |raw: Option<String>| {
        raw.map(|s| {
            s.split(',')
                .map(|w| w.trim().to_string())
                .filter(|w| !w.is_empty())
                .collect::<std::collections::BTreeSet<String>>()
        })
    };
    if let Some(list) = parse_list(whitelist.or_else(|| config::get_str(section, "whitelist"))) {
        config.relation_whitelist = Some(list);
    }
    if let Some(list) = parse_list(blacklist.or_else(|| config::get_str(section, "blacklist"))) {
        config.relation_blacklist = Some(list);
    }
    if dedup || config::get_bool(section, "dedup").unwrap_or(false) {
        config.dedup_exact = true;
    }
    config.validate()?;
    let curate = curate || config::get_bool(section, "curate").unwrap_or(false);

    let kg_name = kg
        .or_else(|| config::get_str(section, "kg"))
        .unwrap_or_else(|| {
            match config.format {
                InputFormat::ConceptnetEdges => "conceptnet",
                InputFormat::AtomicTsv => "atomic",
                InputFormat::GenericJsonl => "",
            }
            .to_string()
        });
    if kg_name.is_empty() {
        bail!(cskg::Error::Config(
            "generic-jsonl input needs --kg".to_string()
        ));
    }

    let registry = cskg::data::default_registry();
    let mapping = load_mapping(mapping_args, ctx)?;
    let rules_owned: Option<CurationRules> = match rules.or_else(|| config::get_path(section, "rules")) {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("rules file {}", path.display()))?;
            Some(CurationRules::from_tsv(&text, &path.display().to_string())?)
        }
        None => None,
    };
    let rules = rules_owned
        .as_ref()
        .unwrap_or_else(|| cskg::data::default_curation());

    let digest = cskg::config_digest(&[
        ("tool", cskg::TOOL_VERSION),
        ("command", "ingest"),
        ("format", config.format.as_str()),
        ("kg", &kg_name),
        ("english_only", &config.english_only.to_string()),
        ("min_weight", &format!("{:?}", config.min_weight)),
        ("keep_equal", &config.keep_equal_weight.to_string()),
        ("whitelist", &format!("{:?}", config.relation_whitelist)),
        ("blacklist", &format!("{:?}", config.relation_blacklist)),
        ("dedup", &config.dedup_exact.to_string()),
        ("curate", &curate.to_string()),
        ("rules", rules.version()),
        ("mapping", mapping.version()),
    ]);
    let meta = Meta::new("ingest", digest, ctx.seed);

    let reader = open_input(&input).with_context(|| format!("opening {}", input.display()))?;
    let mut writer = BufWriter::new(std::fs::File::create(&output)?);
    let mut curator = curate.then(|| Curator::new(registry, &mapping, rules));
    let mut kept = 0u64;

    let mut emit = |tuple: Tuple, curator: &mut Option<Curator>| -> anyhow::Result<()> {
        let tuple = match curator {
            Some(curator) => match curator.process(tuple) {
                Some(t) => t,
                None => return Ok(()),
            },
            None => tuple,
        };
        write_tuples_jsonl(&mut writer, std::iter::once(&tuple))?;
        kept += 1;
        Ok(())
    };

    let parse_report: IngestReport = match config.format {
        InputFormat::ConceptnetEdges => {
            let mut parser = ConceptNetParser::new(reader, config)?;
            while let Some(tuple) = parser.next_tuple()? {
                emit(tuple, &mut curator)?;
            }
            parser.finish()
        }
        InputFormat::GenericJsonl => {
            let mut parser = JsonlParser::new(reader, kg_name.as_str(), config)?;
            while let Some(tuple) = parser.next_tuple()? {
                emit(tuple, &mut curator)?;
            }
            parser.finish()
        }
        InputFormat::AtomicTsv => {
            let mut parser = AtomicTsvParser::new(reader, config)?;
            while let Some(tuple) = parser.next_tuple()? {
                emit(tuple, &mut curator)?;
            }
            parser.finish()
        }
    };
    writer.flush()?;
    let curation_report = curator.map(Curator::finish);

    artifacts::write_sidecar(&output, &meta, None)?;
    let report_body = serde_json::json!({
        "parse": parse_report,
        "curation": curation_report,
        "written": kept,
    });
    match report_path.or_else(|| config::get_path(section, "report")) {
        Some(path) => artifacts::write_json_report(&path, &meta, "ingest", &report_body)?,
        None => eprintln!("{}", serde_json::to_string_pretty(&report_body)?),
    }
    Ok(())
}

fn cmd_normalize(
    ctx: &Context,
    input: Option<PathBuf>,
    kg: Option<String>,
    output: Option<PathBuf>,
    mapping_args: &MappingArgs,
) -> anyhow::Result<()> {
    let section = ctx.file.section("normalize");
    let input = require(input, config::get_path(section, "input"), "normalize --input")?;
    let kg = require(kg, config::get_str(section, "kg"), "normalize --kg")?;
    let output = require(output, config::get_path(section, "output"), "normalize --output")?;

    let registry = cskg::data::default_registry();
    let mapping = load_mapping(mapping_args, ctx)?;
    let mode = resolve_mode(mapping_args, ctx)?;
    let normalizer = Normalizer::new(registry, &mapping, mode, cskg::data::default_normalizer());
    let meta = Meta::new("normalize", normalizer.digest(), ctx.seed);

    let graph = read_kg(&input, &kg)?;
    let mut writer = BufWriter::new(std::fs::File::create(&output)?);
    for tuple in graph.tuples() {
        let keys = normalizer.tuple_keys(tuple);
        let status = match keys.status {
            cskg::normalize::KeyStatus::Ok => "ok",
            cskg::normalize::KeyStatus::Unmapped => "unmapped",
            cskg::normalize::KeyStatus::Degenerate => "degenerate",
        };
        let line = serde_json::json!({
            "id": tuple.id.as_str(),
            "status": status,
            "keys": keys.keys,
        });
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    artifacts::write_sidecar(&output, &meta, None)?;
    Ok(())
}

fn parse_named_inputs(inputs: &[String]) -> anyhow::Result<Vec<(String, PathBuf)>> {
    inputs
        .iter()
        .map(|raw| {
            raw.split_once('=')
                .map(|(name, path)| (name.to_string(), PathBuf::from(path)))
                .ok_or_else(|| {
                    anyhow!(cskg::Error::Config(format!(
                        "--input expects NAME=FILE, got {raw:?}"
                    )))
                })
        })
        .collect()
}

fn coverage_grid_tsv(reports: &[CoverageReport], meta: &Meta) -> String {
    let mut names: Vec<String> = Vec::new();
    for report in reports {
        for kg in [&report.source, &report.target] {
            if !names.contains(&kg.to_string()) {
                names.push(kg.to_string());
            }
        }
    }
    let cell = |value: Option<f64>| match value {
        Some(v) => format!("{v:.1}"),
        None => "n/a".to_string(),
    };
    let mut out = meta.tsv_header();
    for (title, pick) in [
        ("coverage precision (%)", 0usize),
        ("coverage recall, raw (%)", 1),
        ("coverage recall, dedup (%)", 2),
    ] {
        out.push_str(&format!("# {title}\n"));
        out.push_str(&format!("source\\target\t{}\n", names.join("\t")));
        for source in &names {
            let mut row = vec![source.clone()];
            for target in &names {
                if source == target {
                    row.push("-".to_string());
                    continue;
                }
                let report = reports
                    .iter()
                    .find(|r| &r.source.to_string() == source && &r.target.to_string() == target);
                row.push(match report {
                    None => String::new(),
                    Some(r) => cell(match pick {
                        0 => r.precision_pct,
                        1 => r.recall_raw_pct,
                        _ => r.recall_dedup_pct,
                    }),
                });
            }
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    ctx: &Context,
    source: Option<PathBuf>,
    source_kg: Option<String>,
    target: Option<PathBuf>,
    target_kg: Option<String>,
    inputs: Vec<String>,
    format: Option<String>,
    output: Option<PathBuf>,
    mapping_args: &MappingArgs,
) -> anyhow::Result<()> {
    let section = ctx.file.section("compare");
    let output = require(output, config::get_path(section, "output"), "compare --output")?;
    let format = resolve_format(format.or_else(|| config::get_str(section, "format")), ctx);

    let registry = cskg::data::default_registry();
    let mapping = load_mapping(mapping_args, ctx)?;
    let mode = resolve_mode(mapping_args, ctx)?;
    let normalizer = Normalizer::new(registry, &mapping, mode, cskg::data::default_normalizer());
    let meta = Meta::new("compare", normalizer.digest(), ctx.seed);

    let named = if inputs.is_empty() {
        Vec::new()
    } else {
        parse_named_inputs(&inputs)?
    };
    let reports = if !named.is_empty() {
        if named.len() < 2 {
            bail!(cskg::Error::Config(
                "matrix mode needs at least two --input NAME=FILE pairs".to_string()
            ));
        }
        let graphs: Vec<KnowledgeGraph> = named
            .iter()
            .map(|(name, path)| read_kg(path, name))
            .collect::<anyhow::Result<_>>()?;
        let refs: Vec<&KnowledgeGraph> = graphs.iter().collect();
        coverage_matrix(&refs, &normalizer)?
    } else {
        let source = require(source, config::get_path(section, "source"), "compare --source")?;
        let source_kg = require(
            source_kg,
            config::get_str(section, "source_kg"),
            "compare --source-kg",
        )?;
        let target = require(target, config::get_path(section, "target"), "compare --target")?;
        let target_kg = require(
            target_kg,
            config::get_str(section, "target_kg"),
            "compare --target-kg",
        )?;
        let source = read_kg(&source, &source_kg)?;
        let target = read_kg(&target, &target_kg)?;
        vec![coverage(&source, &target, &normalizer)]
    };

    match format.as_str() {
        "json" => artifacts::write_json_report(&output, &meta, "reports", &reports)?,
        "tsv" => {
            let text = coverage_grid_tsv(&reports, &meta);
            std::fs::write(&output, text)?;
        }
        other => bail!(cskg::Error::Config(format!("unknown report format {other:?}"))),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_split(
    ctx: &Context,
    input: Option<PathBuf>,
    kg: Option<String>,
    ratios: Option<String>,
    cap: Option<u64>,
    min_confidence: Option<f64>,
    preserve_upstream: bool,
    output_dir: Option<PathBuf>,
) -> anyhow::Result<()> {
    let section = ctx.file.section("split");
    let input = require(input, config::get_path(section, "input"), "split --input")?;
    let kg_name = require(kg, config::get_str(section, "kg"), "split --kg")?;
    let output_dir = require(
        output_dir,
        config::get_path(section, "output_dir"),
        "split --output-dir",
    )?;

    let mut config = SplitConfig::new(cskg::seed::derive_seed(ctx.seed, "split"));
    if let Some(raw) = ratios.or_else(|| config::get_str(section, "ratios")) {
        let parts: Vec<f64> = raw
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| anyhow!(cskg::Error::Config(format!("bad ratios {raw:?}: {e}"))))?;
        let [train, dev, test] = parts.as_slice() else {
            bail!(cskg::Error::Config(format!(
                "ratios need 3 comma-separated numbers, got {raw:?}"
            )));
        };
        config.ratios = (*train, *dev, *test);
    }
    if let Some(cap) = cap.or_else(|| config::get_u64(section, "cap")) {
        config.max_head_tuples_eval = cap;
    }
    if let Some(threshold) = min_confidence.or_else(|| config::get_f64(section, "min_confidence")) {
        config.min_confidence = Some(threshold);
    }
    if preserve_upstream || config::get_bool(section, "preserve_upstream").unwrap_or(false) {
        config.preserve_upstream = true;
    }
    // validate before any I/O
    config.validate()?;

    let norm = cskg::data::default_normalizer();
    let digest = cskg::config_digest(&[
        ("tool", cskg::TOOL_VERSION),
        ("command", "split"),
        ("ratios", &format!("{:?}", config.ratios)),
        ("cap", &config.max_head_tuples_eval.to_string()),
        ("min_confidence", &format!("{:?}", config.min_confidence)),
        ("preserve_upstream", &config.preserve_upstream.to_string()),
        ("normalizer", &norm.version_string()),
        ("seed", &config.seed.to_string()),
    ]);
    let meta = Meta::new("split", digest, ctx.seed);

    let graph = read_kg(&input, &kg_name)?;
    let result = make_adversarial_split(&graph, &config, norm)?;
    let violations = verify_split(&graph, &result, &config, norm);
    if !violations.is_empty() {
        bail!("split verification failed: {violations:?}");
    }
    if let Some(deviation) = &result.deviation {
        eprintln!("warning: {deviation}");
    }

    std::fs::create_dir_all(&output_dir)?;
    for split in Split::ALL {
        let path = output_dir.join(format!("{split}.jsonl"));
        let mut writer = BufWriter::new(std::fs::File::create(&path)?);
        let members = graph
            .tuples()
            .iter()
            .filter(|t| result.assignment.get(&t.id) == Some(&split));
        for tuple in members {
            let mut tagged = tuple.clone();
            tagged.split = Some(split);
            write_tuples_jsonl(&mut writer, std::iter::once(&tagged))?;
        }
        writer.flush()?;
        artifacts::write_sidecar(&path, &meta, None)?;
    }

    let assignment_path = output_dir.join("assignment.jsonl");
    let mut writer = BufWriter::new(std::fs::File::create(&assignment_path)?);
    for (id, split) in &result.assignment {
        let line = serde_json::json!({"id": id.as_str(), "split": split});
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    artifacts::write_sidecar(&assignment_path, &meta, None)?;

    let summary = serde_json::json!({
        "counts": result.counts,
        "dropped_low_confidence": result.dropped_low_confidence,
        "requested_ratios": result.requested_ratios,
        "achieved_ratios": result.achieved_ratios,
        "deviation": result.deviation,
        "seed": result.seed,
        "head_groups": result.head_partition.len(),
    });
    artifacts::write_json_report(&output_dir.join("result.json"), &meta, "split", &summary)?;
    Ok(())
}

fn score_tsv(meta: &Meta, system: &str, rows: &BTreeMap<String, ScoreReport>) -> String {
    let mut out = meta.tsv_header();
    out.push_str("system\tbleu-1\tbleu-2\tbleu-3\tbleu-4\tmeteor\trouge-l\tcider\tn\n");
    for (name, report) in rows {
        out.push_str(&format!(
            "{system}:{name}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{}\n",
            report.bleu[0],
            report.bleu[1],
            report.bleu[2],
            report.bleu[3],
            report.meteor,
            report.rouge_l,
            report.cider,
            report.n
        ));
    }
    out
}

fn cmd_score(
    ctx: &Context,
    input: Option<PathBuf>,
    kg: Option<String>,
    per_relation: bool,
    format: Option<String>,
    output: Option<PathBuf>,
) -> anyhow::Result<()> {
    let section = ctx.file.section("score");
    let input = require(input, config::get_path(section, "input"), "score --input")?;
    let kg = require(kg, config::get_str(section, "kg"), "score --kg")?;
    let output = require(output, config::get_path(section, "output"), "score --output")?;
    let per_relation = per_relation || config::get_bool(section, "per_relation").unwrap_or(false);
    let format = resolve_format(format.or_else(|| config::get_str(section, "format")), ctx);

    let reader = open_input(&input)?;
    let records = read_generations_jsonl(reader, &kg)?;
    let corpus = score_corpus(&records)?;
    let relation_reports = if per_relation {
        Some(score_per_relation(&records)?)
    } else {
        None
    };

    let digest = cskg::config_digest(&[
        ("tool", cskg::TOOL_VERSION),
        ("command", "score"),
        ("params", cskg::metrics::METRIC_PARAMS),
        ("corpus", &corpus.corpus_digest),
    ]);
    let meta = Meta::new("score", digest, ctx.seed);

    match format.as_str() {
        "json" => {
            let body = serde_json::json!({
                "corpus": corpus,
                "per_relation": relation_reports,
            });
            artifacts::write_json_report(&output, &meta, "scores", &body)?;
        }
        "tsv" => {
            let system = input
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "system".to_string());
            let mut rows = BTreeMap::new();
            rows.insert("all".to_string(), corpus);
            if let Some(per_rel) = relation_reports {
                rows.extend(per_rel);
            }
            std::fs::write(&output, score_tsv(&meta, &system, &rows))?;
        }
        other => bail!(cskg::Error::Config(format!("unknown report format {other:?}"))),
    }
    Ok(())
}

fn cmd_sample_hits(
    ctx: &Context,
    input: Option<PathBuf>,
    kg: Option<String>,
    count: Option<usize>,
    output: Option<PathBuf>,
) -> anyhow::Result<()> {
    let section = ctx.file.section("sample-hits");
    let input = require(input, config::get_path(section, "input"), "sample-hits --input")?;
    let kg = require(kg, config::get_str(section, "kg"), "sample-hits --kg")?;
    let count = require(
        count,
        config::get_u64(section, "count").map(|v| v as usize),
        "sample-hits -n",
    )?;
    let output = require(output, config::get_path(section, "output"), "sample-hits --output")?;

    let graph = read_kg(&input, &kg)?;
    let templates = cskg::data::default_templates();
    let registry = cskg::data::default_registry();
    let batches = sample_for_eval(&graph, count, ctx.seed, templates, registry)?;

    let digest = cskg::config_digest(&[
        ("tool", cskg::TOOL_VERSION),
        ("command", "sample-hits"),
        ("kg", &kg),
        ("n", &count.to_string()),
        ("templates", templates.version()),
        ("seed", &ctx.seed.to_string()),
    ]);
    let meta = Meta::new("sample-hits", digest, ctx.seed);

    let file = std::fs::File::create(&output)?;
    write_hits_csv(file, &batches)?;
    let short = batches.iter().filter(|b| b.short).count();
    artifacts::write_sidecar(
        &output,
        &meta,
        Some(serde_json::json!({"hits": batches.len(), "short_hits": short})),
    )?;
    eprintln!("{} HITs written ({short} short)", batches.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_aggregate_votes(
    ctx: &Context,
    ratings: Option<PathBuf>,
    hits: Option<PathBuf>,
    output: Option<PathBuf>,
    breakdown: Option<PathBuf>,
    baseline: Option<String>,
    kappa_mode: Option<String>,
    raters: Option<usize>,
) -> anyhow::Result<()> {
    let section = ctx.file.section("aggregate-votes");
    let ratings_path = require(
        ratings,
        config::get_path(section, "ratings"),
        "aggregate-votes --ratings",
    )?;
    let hits_path = require(hits, config::get_path(section, "hits"), "aggregate-votes --hits")?;
    let output = require(
        output,
        config::get_path(section, "output"),
        "aggregate-votes --output",
    )?;
    let baseline = baseline
        .or_else(|| config::get_str(section, "baseline"))
        .unwrap_or_else(|| "atomic2020".to_string());
    let raters = raters
        .or_else(|| config::get_u64(section, "raters").map(|v| v as usize))
        .unwrap_or(3);
    let kappa_mode = match kappa_mode
        .or_else(|| config::get_str(section, "kappa_mode"))
        .as_deref()
    {
        None | Some("binarized") => KappaMode::Binarized,
        Some("raw-likert") | Some("likert") => KappaMode::RawLikert,
        Some(other) => bail!(cskg::Error::Config(format!("unknown kappa mode {other:?}"))),
    };

    let ratings = read_ratings_csv(std::fs::File::open(&ratings_path)?)?;
    let relations = read_hits_csv(std::fs::File::open(&hits_path)?)?;
    let records = build_annotation_records(ratings, &relations)?;

    let (matrix, skipped) = kappa_matrix(&records, raters, kappa_mode);
    let kappa = if matrix.is_empty() {
        None
    } else {
        Some(fleiss_kappa(&matrix)?)
    };

    let digest = cskg::config_digest(&[
        ("tool", cskg::TOOL_VERSION),
        ("command", "aggregate-votes"),
        ("baseline", &baseline),
        ("raters", &raters.to_string()),
        ("kappa_mode", kappa_mode.as_str()),
    ]);
    let meta = Meta::new("aggregate-votes", digest, ctx.seed);

    let mut writer = BufWriter::new(std::fs::File::create(&output)?);
    for record in &records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    artifacts::write_sidecar(
        &output,
        &meta,
        Some(serde_json::json!({
            "records": records.len(),
            "fleiss_kappa": kappa,
            "kappa_mode": kappa_mode.as_str(),
            "kappa_items_skipped": skipped,
        })),
    )?;

    if let Some(breakdown_path) = breakdown.or_else(|| config::get_path(section, "breakdown")) {
        let table = accuracy_breakdown(
            &records,
            cskg::data::default_cognates(),
            &KgId::new(&baseline),
        );
        let mut out = meta.tsv_header();
        out.push_str(&format!("# baseline: {} ({}, alpha {})\n", table.baseline, table.test, table.alpha));
        out.push_str("group\tkg\tn\taccept%\treject%\tno-judgment%\tsignificant-vs-baseline\n");
        let write_rows =
            |group: &str, cells: &BTreeMap<KgId, cskg::compare::AccuracyCell>, out: &mut String| {
                for (kg, cell) in cells {
                    out.push_str(&format!(
                        "{group}\t{kg}\t{}\t{:.1}\t{:.1}\t{:.1}\t{}\n",
                        cell.n,
                        cell.accept_pct,
                        cell.reject_pct,
                        cell.no_judgment_pct,
                        match cell.significant_vs_baseline {
                            None => "-",
                            Some(true) => "yes",
                            Some(false) => "no",
                        }
                    ));
                }
            };
        write_rows("overall", &table.overall, &mut out);
        for (group, cells) in &table.rows {
            write_rows(group, cells, &mut out);
        }
        for diagnostic in &table.diagnostics {
            out.push_str(&format!("# note: {diagnostic}\n"));
        }
        std::fs::write(&breakdown_path, out)?;
    }
    Ok(())
}

fn cmd_export_training(
    ctx: &Context,
    input: Option<PathBuf>,
    kg: Option<String>,
    split: Option<String>,
    output: Option<PathBuf>,
) -> anyhow::Result<()> {
    let section = ctx.file.section("export-training");
    let input = require(input, config::get_path(section, "input"), "export-training --input")?;
    let kg = require(kg, config::get_str(section, "kg"), "export-training --kg")?;
    let output = require(
        output,
        config::get_path(section, "output"),
        "export-training --output",
    )?;
    let split = match split.or_else(|| config::get_str(section, "split")) {
        None => None,
        Some(raw) => Some(Split::parse(&raw).ok_or_else(|| {
            anyhow!(cskg::Error::Config(format!("unknown split {raw:?}")))
        })?),
    };

    let graph = read_kg(&input, &kg)?;
    let mut lines = String::new();
    let mut count = 0u64;
    for tuple in graph.tuples() {
        if let Some(wanted) = split {
            if tuple.split != Some(wanted) {
                continue;
            }
        }
        check_training_exportable(tuple)?;
        lines.push_str(&render_training_line(tuple));
        lines.push('\n');
        count += 1;
    }

    let digest = cskg::config_digest(&[
        ("tool", cskg::TOOL_VERSION),
        ("command", "export-training"),
        ("kg", &kg),
        ("split", &format!("{split:?}")),
    ]);
    let meta = Meta::new("export-training", digest, ctx.seed);
    artifacts::write_text_artifact(&output, &meta, &lines)?;
    eprintln!("{count} training lines written");
    Ok(())
}

fn cmd_export_prompts(
    ctx: &Context,
    input: Option<PathBuf>,
    kg: Option<String>,
    output: Option<PathBuf>,
    fewshot: Option<String>,
    query_head: Option<String>,
    k: Option<usize>,
) -> anyhow::Result<()> {
    let section = ctx.file.section("export-prompts");
    let input = require(input, config::get_path(section, "input"), "export-prompts --input")?;
    let kg = require(kg, config::get_str(section, "kg"), "export-prompts --kg")?;
    let output = require(
        output,
        config::get_path(section, "output"),
        "export-prompts --output",
    )?;
    let fewshot = fewshot.or_else(|| config::get_str(section, "fewshot"));

    let graph = read_kg(&input, &kg)?;
    let templates = cskg::data::default_templates();
    let registry = cskg::data::default_registry();

    let digest = cskg::config_digest(&[
        ("tool", cskg::TOOL_VERSION),
        ("command", "export-prompts"),
        ("kg", &kg),
        ("templates", templates.version()),
        ("fewshot", &format!("{fewshot:?}")),
        ("seed", &ctx.seed.to_string()),
    ]);
    let meta = Meta::new("export-prompts", digest, ctx.seed);

    match fewshot {
        None => {
            let mut lines = String::new();
            for tuple in graph.tuples() {
                lines.push_str(&render_prefix(&tuple.head, &tuple.relation, templates, registry)?);
                lines.push('\n');
            }
            artifacts::write_text_artifact(&output, &meta, &lines)?;
        }
        Some(relation_name) => {
            let query_head = require(
                query_head,
                config::get_str(section, "query_head"),
                "export-prompts --query-head",
            )?;
            let k = k
                .or_else(|| config::get_u64(section, "k").map(|v| v as usize))
                .unwrap_or(5);
            let relation = registry
                .resolve(&kg, &relation_name)
                .or_else(|| RelationId::new(kg.as_str(), &relation_name).ok())
                .ok_or_else(|| anyhow!(cskg::Error::Config(format!(
                    "bad relation name {relation_name:?}"
                ))))?;
            let block = build_fewshot_block(
                &relation,
                &query_head,
                graph.tuples(),
                k,
                ctx.seed,
                templates,
                registry,
            )?;
            std::fs::write(&output, format!("{block}\n"))?;
            // decoding-side hints recorded for downstream harnesses
            artifacts::write_sidecar(
                &output,
                &meta,
                Some(serde_json::json!({
                    "relation": relation.to_string(),
                    "k": k,
                    "recommended_temperature": 0.4,
                    "recommended_priming_seeds": 3,
                })),
            )?;
        }
    }
    Ok(())
}

fn cmd_stats(
    ctx: &Context,
    input: Option<PathBuf>,
    kg: Option<String>,
    format: Option<String>,
    output: Option<PathBuf>,
) -> anyhow::Result<()> {
    let section = ctx.file.section("stats");
    let input = require(input, config::get_path(section, "input"), "stats --input")?;
    let kg = require(kg, config::get_str(section, "kg"), "stats --kg")?;
    let output = output.or_else(|| config::get_path(section, "output"));
    let format = resolve_format(format.or_else(|| config::get_str(section, "format")), ctx);

    let registry = cskg::data::default_registry();
    let graph = read_kg(&input, &kg)?;

    let mut per_relation: BTreeMap<String, u64> = BTreeMap::new();
    let mut per_category: BTreeMap<String, u64> = BTreeMap::new();
    let mut unknown: BTreeMap<String, u64> = BTreeMap::new();
    for tuple in graph.tuples() {
        *per_relation.entry(tuple.relation.name().to_string()).or_insert(0) += 1;
        match registry
            .resolve(&kg, tuple.relation.name())
            .and_then(|rel| registry.category(&rel))
        {
            Some(category) => {
                *per_category.entry(category.to_string()).or_insert(0) += 1;
            }
            None => {
                *per_category.entry("other".to_string()).or_insert(0) += 1;
                *unknown.entry(tuple.relation.name().to_string()).or_insert(0) += 1;
            }
        }
    }
    for (name, count) in &unknown {
        eprintln!("warning: unknown relation {name:?} ({count} tuples) counted under 'other'");
    }

    let digest = cskg::config_digest(&[
        ("tool", cskg::TOOL_VERSION),
        ("command", "stats"),
        ("kg", &kg),
        ("registry", registry.version()),
    ]);
    let meta = Meta::new("stats", digest, ctx.seed);

    let render_tsv = || {
        let mut out = meta.tsv_header();
        out.push_str("relation\tcount\n");
        for (name, count) in &per_relation {
            out.push_str(&format!("{name}\t{count}\n"));
        }
        out.push_str("category\tcount\n");
        for (name, count) in &per_category {
            out.push_str(&format!("{name}\t{count}\n"));
        }
        out.push_str(&format!("total\t{}\n", graph.len()));
        out
    };

    match (format.as_str(), output) {
        ("tsv", Some(path)) => std::fs::write(path, render_tsv())?,
        ("tsv", None) => print!("{}", render_tsv()),
        ("json", output) => {
            let body = serde_json::json!({
                "per_relation": per_relation,
                "per_category": per_category,
                "unknown_relations": unknown,
                "total": graph.len(),
            });
            match output {
                Some(path) => artifacts::write_json_report(&path, &meta, "stats", &body)?,
                None => println!("{}", serde_json::to_string_pretty(&body)?),
            }
        }
        (other, _) => bail!(cskg::Error::Config(format!("unknown report format {other:?}"))),
    }
    Ok(())
}

/// Check every staged section for its required keys (and parseable ratios)
/// before any stage runs. Stage outputs may feed later stages, so only key
/// presence is validated here, not file existence.
fn validate_pipeline(config: &FileConfig) -> anyhow::Result<()> {
    let required: &[(&str, &[&str])] = &[
        ("ingest", &["input", "output"]),
        ("normalize", &["input", "kg", "output"]),
        ("compare", &["source", "source_kg", "target", "target_kg", "output"]),
        ("split", &["input", "kg", "output_dir"]),
        ("score", &["input", "kg", "output"]),
        ("sample-hits", &["input", "kg", "count", "output"]),
        ("aggregate-votes", &["ratings", "hits", "output"]),
        ("export-training", &["input", "kg", "output"]),
        ("export-prompts", &["input", "kg", "output"]),
        ("stats", &["input", "kg"]),
    ];
    for stage in &config.run {
        let Some((_, keys)) = required.iter().find(|(name, _)| name == stage) else {
            bail!(cskg::Error::Config(format!("unknown pipeline stage {stage:?}")));
        };
        let section = config.section(stage);
        for key in *keys {
            if !section.contains_key(*key) {
                bail!(cskg::Error::Config(format!(
                    "pipeline stage {stage:?} is missing key {key:?}"
                )));
            }
        }
        if stage == "ingest"
            && !section.contains_key("format")
            && !section.contains_key("preset")
        {
            bail!(cskg::Error::Config(
                "pipeline stage \"ingest\" needs format or preset".to_string()
            ));
        }
        if stage == "split" {
            if let Some(raw) = config::get_str(section, "ratios") {
                let parts: Vec<f64> = raw
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| {
                        anyhow!(cskg::Error::Config(format!("bad ratios {raw:?}: {e}")))
                    })?;
                if parts.len() != 3 {
                    bail!(cskg::Error::Config(format!(
                        "ratios need 3 comma-separated numbers, got {raw:?}"
                    )));
                }
                let mut probe = SplitConfig::new(0);
                probe.ratios = (parts[0], parts[1], parts[2]);
                probe.validate()?;
            }
        }
    }
    Ok(())
}

fn cmd_pipeline(ctx: Context, file: Option<PathBuf>) -> anyhow::Result<()> {
    let file_config = match file {
        Some(path) => config::load(Some(&path))?,
        None => ctx.file.clone(),
    };
    if file_config.run.is_empty() {
        bail!(cskg::Error::Config(
            "pipeline config has no `run` stage list".to_string()
        ));
    }
    validate_pipeline(&file_config)?;
    let seed = file_config.seed.unwrap_or(ctx.seed);
    for stage in file_config.run.clone() {
        eprintln!("pipeline: running {stage}");
        let stage_ctx = Context {
            seed,
            file: file_config.clone(),
        };
        let mapping = MappingArgs::default();
        let command = match stage.as_str() {
            "ingest" => Command::Ingest {
                format: None,
                input: None,
                output: None,
                kg: None,
                preset: None,
                english_only: false,
                min_weight: None,
                keep_equal_weight: false,
                whitelist: None,
                blacklist: None,
                dedup: false,
                curate: false,
                rules: None,
                report: None,
                mapping: mapping.clone(),
            },
            "normalize" => Command::Normalize {
                input: None,
                kg: None,
                output: None,
                mapping: mapping.clone(),
            },
            "compare" => Command::Compare {
                source: None,
                source_kg: None,
                target: None,
                target_kg: None,
                inputs: Vec::new(),
                format: None,
                output: None,
                mapping: mapping.clone(),
            },
            "split" => Command::Split {
                input: None,
                kg: None,
                ratios: None,
                cap: None,
                min_confidence: None,
                preserve_upstream: false,
                output_dir: None,
            },
            "score" => Command::Score {
                input: None,
                kg: None,
                per_relation: false,
                format: None,
                output: None,
            },
            "sample-hits" => Command::SampleHits {
                input: None,
                kg: None,
                count: None,
                output: None,
            },
            "aggregate-votes" => Command::AggregateVotes {
                ratings: None,
                hits: None,
                output: None,
                breakdown: None,
                baseline: None,
                kappa_mode: None,
                raters: None,
            },
            "export-training" => Command::ExportTraining {
                input: None,
                kg: None,
                split: None,
                output: None,
            },
            "export-prompts" => Command::ExportPrompts {
                input: None,
                kg: None,
                output: None,
                fewshot: None,
                query_head: None,
                k: None,
            },
            "stats" => Command::Stats {
                input: None,
                kg: None,
                format: None,
                output: None,
            },
            other => bail!(cskg::Error::Config(format!("unknown pipeline stage {other:?}"))),
        };
        dispatch(command, stage_ctx)
            .with_context(|| format!("pipeline stage {stage}"))?;
    }
    Ok(())
}
