//! Human-evaluation support: sample tuples into same-relation HITs of five,
//! binarize 4-point Likert ratings into accept/reject/no-judgment, take the
//! majority vote per tuple, and compute Fleiss' kappa.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::kg::{KnowledgeGraph, RelationId, RelationRegistry, TupleId};
use crate::seed::derive_rng;
use crate::verbalize::{render_human, TemplateTable};
use crate::{Error, Result};

/// 4-point Likert scale plus the opt-out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikertLabel {
    AlwaysOften,
    SometimesLikely,
    FarfetchedNever,
    Invalid,
    NoJudgment,
}

impl LikertLabel {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_lowercase().as_str() {
            "always_often" | "always/often" | "always" | "often" => Some(Self::AlwaysOften),
            "sometimes_likely" | "sometimes/likely" | "sometimes" | "likely" => {
                Some(Self::SometimesLikely)
            }
            "farfetched_never" | "farfetched/never" | "farfetched" | "never" => {
                Some(Self::FarfetchedNever)
            }
            "invalid" => Some(Self::Invalid),
            "no_judgment" | "no judgment" | "no-judgment" => Some(Self::NoJudgment),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AlwaysOften => "always_often",
            Self::SometimesLikely => "sometimes_likely",
            Self::FarfetchedNever => "farfetched_never",
            Self::Invalid => "invalid",
            Self::NoJudgment => "no_judgment",
        }
    }

    pub const ALL: [LikertLabel; 5] = [
        Self::AlwaysOften,
        Self::SometimesLikely,
        Self::FarfetchedNever,
        Self::Invalid,
        Self::NoJudgment,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalLabel {
    Accept,
    Reject,
    NoJudgment,
}

impl FinalLabel {
    pub const ALL: [FinalLabel; 3] = [Self::Accept, Self::Reject, Self::NoJudgment];
}

/// Likert binarization: the first two scale points accept, the last two
/// reject, the opt-out stays.
pub fn binarize(label: LikertLabel) -> FinalLabel {
    match label {
        LikertLabel::AlwaysOften | LikertLabel::SometimesLikely => FinalLabel::Accept,
        LikertLabel::FarfetchedNever | LikertLabel::Invalid => FinalLabel::Reject,
        LikertLabel::NoJudgment => FinalLabel::NoJudgment,
    }
}

/// One worker's rating of one tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub tuple_id: TupleId,
    pub worker_id: String,
    pub label: LikertLabel,
}

/// A tuple's ratings with the aggregated label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub tuple_id: TupleId,
    pub relation: RelationId,
    pub ratings: Vec<Rating>,
    pub final_label: FinalLabel,
}

/// Majority vote over binarized ratings. The label with a strict plurality
/// wins; any tie (including the three-way 1-1-1) resolves to no-judgment.
pub fn aggregate_votes<I>(ratings: I) -> FinalLabel
where
    I: IntoIterator<Item = LikertLabel>,
{
    let mut accepts = 0u32;
    let mut rejects = 0u32;
    let mut no_judgments = 0u32;
    for label in ratings {
        match binarize(label) {
            FinalLabel::Accept => accepts += 1,
            FinalLabel::Reject => rejects += 1,
            FinalLabel::NoJudgment => no_judgments += 1,
        }
    }
    if accepts > rejects && accepts > no_judgments {
        FinalLabel::Accept
    } else if rejects > accepts && rejects > no_judgments {
        FinalLabel::Reject
    } else {
        FinalLabel::NoJudgment
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FleissKappa {
    pub value: f64,
    /// All ratings fell into a single category; kappa is defined as 1.
    pub degenerate: bool,
}

/// Standard Fleiss' kappa over an item x category count matrix. Every item
/// must carry the same number of ratings (>= 2).
pub fn fleiss_kappa(matrix: &[Vec<u64>]) -> Result<FleissKappa> {
    if matrix.is_empty() {
        return Err(Error::invalid("kappa input", "no items"));
    }
    let categories = matrix[0].len();
    if categories == 0 {
        return Err(Error::invalid("kappa input", "no categories"));
    }
    let raters: u64 = matrix[0].iter().sum();
    if raters < 2 {
        return Err(Error::invalid("kappa input", "need at least 2 ratings per item"));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != categories {
            return Err(Error::invalid(
                "kappa input",
                format!("item {i} has {} categories, expected {categories}", row.len()),
            ));
        }
        let sum: u64 = row.iter().sum();
        if sum != raters {
            return Err(Error::invalid(
                "kappa input",
                format!("item {i} has {sum} ratings, expected {raters}"),
            ));
        }
    }

    let n_items = matrix.len() as f64;
    let n = raters as f64;
    let p_bar: f64 = matrix
        .iter()
        .map(|row| {
            let sq: u64 = row.iter().map(|c| c * c).sum();
            (sq as f64 - n) / (n * (n - 1.0))
        })
        .sum::<f64>()
        / n_items;
    let p_e: f64 = (0..categories)
        .map(|j| {
            let col: u64 = matrix.iter().map(|row| row[j]).sum();
            let p = col as f64 / (n_items * n);
            p * p
        })
        .sum();

    if (1.0 - p_e).abs() < 1e-12 {
        return Ok(FleissKappa {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(FleissKappa {
        value: (p_bar - p_e) / (1.0 - p_e),
        degenerate: false,
    })
}

/// Category space for the kappa matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaMode {
    /// Three categories: accept / reject / no-judgment.
    Binarized,
    /// Raw five-way Likert space.
    RawLikert,
}

impl KappaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            KappaMode::Binarized => "binarized",
            KappaMode::RawLikert => "raw-likert",
        }
    }
}

/// Build the kappa matrix from records with exactly `raters` ratings.
/// Returns the matrix and how many records were skipped for having a
/// different rating count.
pub fn kappa_matrix(
    records: &[AnnotationRecord],
    raters: usize,
    mode: KappaMode,
) -> (Vec<Vec<u64>>, usize) {
    let mut matrix = Vec::new();
    let mut skipped = 0usize;
    for record in records {
        if record.ratings.len() != raters {
            skipped += 1;
            continue;
        }
        let row = match mode {
            KappaMode::Binarized => {
                let mut row = vec![0u64; 3];
                for rating in &record.ratings {
                    let idx = FinalLabel::ALL
                        .iter()
                        .position(|l| *l == binarize(rating.label))
                        .unwrap();
                    row[idx] += 1;
                }
                row
            }
            KappaMode::RawLikert => {
                let mut row = vec![0u64; 5];
                for rating in &record.ratings {
                    let idx = LikertLabel::ALL
                        .iter()
                        .position(|l| *l == rating.label)
                        .unwrap();
                    row[idx] += 1;
                }
                row
            }
        };
        matrix.push(row);
    }
    (matrix, skipped)
}

/// One crowdsourcing task: five same-relation tuples with rendered prompts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitBatch {
    pub hit_id: String,
    pub relation: RelationId,
    pub tuple_ids: Vec<TupleId>,
    pub prompts: Vec<String>,
    /// Fewer than five tuples and no same-relation padding pool left.
    pub short: bool,
}

pub const HIT_SIZE: usize = 5;

/// Seeded uniform sample of `n` tuples grouped into same-relation HITs of
/// five. Partial groups are padded with additional same-relation tuples when
/// the graph has them, otherwise emitted short and flagged.
pub fn sample_for_eval(
    kg: &KnowledgeGraph,
    n: usize,
    seed: u64,
    templates: &TemplateTable,
    registry: &RelationRegistry,
) -> Result<Vec<HitBatch>> {
    if n > kg.len() {
        return Err(Error::Config(format!(
            "cannot sample {n} tuples from a graph of {}",
            kg.len()
        )));
    }
    let mut rng = derive_rng(seed, "sample-hits");
    let mut indices: Vec<usize> = (0..kg.len()).collect();
    indices.shuffle(&mut rng);
    let (sampled, pool) = indices.split_at(n);

    // group sampled tuples by relation, preserving sample order inside groups
    let mut groups: BTreeMap<RelationId, Vec<usize>> = BTreeMap::new();
    for &idx in sampled {
        groups
            .entry(kg.tuples()[idx].relation.clone())
            .or_default()
            .push(idx);
    }
    // padding pool per relation, in shuffle order
    let mut padding: HashMap<RelationId, Vec<usize>> = HashMap::new();
    for &idx in pool {
        padding
            .entry(kg.tuples()[idx].relation.clone())
            .or_default()
            .push(idx);
    }
    for queue in padding.values_mut() {
        queue.reverse(); // pop() then yields shuffle order
    }

    let mut batches = Vec::new();
    let mut serial = 0usize;
    for (relation, members) in groups {
        let pad = padding.get_mut(&relation);
        let mut chunks: Vec<Vec<usize>> =
            members.chunks(HIT_SIZE).map(<[usize]>::to_vec).collect();
        if let (Some(last), Some(pad)) = (chunks.last_mut(), pad) {
            while last.len() < HIT_SIZE {
                match pad.pop() {
                    Some(idx) => last.push(idx),
                    None => break,
                }
            }
        }
        for chunk in chunks {
            serial += 1;
            let mut prompts = Vec::with_capacity(chunk.len());
            for &idx in &chunk {
                prompts.push(render_human(&kg.tuples()[idx], templates, registry)?);
            }
            batches.push(HitBatch {
                hit_id: format!("hit-{}-{serial:05}", kg.id()),
                relation: relation.clone(),
                tuple_ids: chunk.iter().map(|&i| kg.tuples()[i].id.clone()).collect(),
                prompts,
                short: chunk.len() < HIT_SIZE,
            });
        }
    }
    Ok(batches)
}

/// Write HITs as CSV (one row per tuple): hit_id, kg, relation, tuple_id,
/// prompt. The format round-trips through [`read_hits_csv`].
pub fn write_hits_csv<W: Write>(writer: W, batches: &[HitBatch]) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record(["hit_id", "kg", "relation", "tuple_id", "prompt"])?;
    for batch in batches {
        for (tuple_id, prompt) in batch.tuple_ids.iter().zip(&batch.prompts) {
            csv_writer.write_record([
                batch.hit_id.as_str(),
                batch.relation.kg().as_str(),
                batch.relation.name(),
                tuple_id.as_str(),
                prompt.as_str(),
            ])?;
        }
    }
    csv_writer.flush()?;
    Ok(())
}

/// tuple_id -> relation association recovered from an exported HIT file.
pub fn read_hits_csv<R: Read>(reader: R) -> Result<HashMap<TupleId, RelationId>> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid("hits csv", format!("missing column {name:?}")))
    };
    let kg_col = col("kg")?;
    let rel_col = col("relation")?;
    let id_col = col("tuple_id")?;
    let mut out = HashMap::new();
    for row in csv_reader.records() {
        let row = row?;
        let relation = RelationId::new(&row[kg_col], &row[rel_col])
            .map_err(|e| Error::invalid("hits csv", e.to_string()))?;
        out.insert(TupleId::new(&row[id_col]), relation);
    }
    Ok(out)
}

/// Ratings import: CSV with columns hit_id, tuple_id, worker_id, label.
pub fn read_ratings_csv<R: Read>(reader: R) -> Result<Vec<Rating>> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid("ratings csv", format!("missing column {name:?}")))
    };
    let id_col = col("tuple_id")?;
    let worker_col = col("worker_id")?;
    let label_col = col("label")?;
    let mut ratings = Vec::new();
    for (idx, row) in csv_reader.records().enumerate() {
        let row = row?;
        let label = LikertLabel::parse(&row[label_col]).ok_or_else(|| {
            Error::data("ratings csv", idx + 2, format!("unknown label {:?}", &row[label_col]))
        })?;
        ratings.push(Rating {
            tuple_id: TupleId::new(&row[id_col]),
            worker_id: row[worker_col].to_string(),
            label,
        });
    }
    Ok(ratings)
}

/// Join ratings with the HIT manifest and aggregate one record per tuple.
/// Duplicate (tuple, worker) pairs are data errors.
pub fn build_annotation_records(
    ratings: Vec<Rating>,
    relations: &HashMap<TupleId, RelationId>,
) -> Result<Vec<AnnotationRecord>> {
    let mut by_tuple: BTreeMap<TupleId, Vec<Rating>> = BTreeMap::new();
    let mut seen: HashSet<(TupleId, String)> = HashSet::new();
    for rating in ratings {
        if !seen.insert((rating.tuple_id.clone(), rating.worker_id.clone())) {
            return Err(Error::invalid(
                "ratings",
                format!(
                    "worker {} rated tuple {} twice",
                    rating.worker_id, rating.tuple_id
                ),
            ));
        }
        by_tuple.entry(rating.tuple_id.clone()).or_default().push(rating);
    }
    let mut records = Vec::new();
    for (tuple_id, ratings) in by_tuple {
        let relation = relations.get(&tuple_id).ok_or_else(|| {
            Error::invalid("ratings", format!("tuple {tuple_id} is not in the HIT manifest"))
        })?;
        let final_label = aggregate_votes(ratings.iter().map(|r| r.label));
        records.push(AnnotationRecord {
            tuple_id,
            relation: relation.clone(),
            ratings,
            final_label,
        });
    }
    Ok(records)
}
