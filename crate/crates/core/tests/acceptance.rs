//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vocab_free::candidates::{
    extract_candidates, standardize, CandidatePipeline, FilterConfig, Pos,
};
use vocab_free::classify::{
    rank, score_candidates, softmax, Classifier, ClassifierConfig, Prediction, TemplateSet,
    DEFAULT_TEMPLATE,
};
use vocab_free::dense::{
    accumulate_features, encode_png, plan_patches, segment_dense, segment_features, GridSpec,
};
use vocab_free::embedding::Embedding;
use vocab_free::fixtures::{
    clustered_store, concept_color, perturb, planted_index, random_unit, solid_image, split_image,
};
use vocab_free::labelmap::LabelMap;
use vocab_free::metrics::{
    cluster_accuracy, evaluate_segmentation, segmentation_jaccard, segmentation_recall,
    semantic_iou, ExactKernel, Mode, SegPair,
};
use vocab_free::provider::{EmbeddingProvider, ImageRef, MockProvider, Role};
use vocab_free::store::{vfeb, CaptionIndex, EmbeddingMatrix, IndexKind, IvfParams};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------- retrieval ----------

fn naive_dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

fn oracle_topk(store: &vocab_free::store::CaptionStore, q: &[f32], k: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = (0..store.len())
        .map(|i| (naive_dot(store.embedding(i), q), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| i).collect()
}

struct RetrievalFixture {
    store: vocab_free::store::CaptionStore,
    queries: Vec<Embedding>,
}

fn retrieval_fixture() -> RetrievalFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11ce);
    let (store, centers) = clustered_store(10_000, 512, 100, 1.0, &mut rng);
    let queries = (0..1000)
        .map(|i| perturb(&centers[i % centers.len()], 1.0, &mut rng))
        .collect();
    RetrievalFixture { store, queries }
}

fn retrieval_exactness(fx: &RetrievalFixture) -> Outcome {
    let index = CaptionIndex::exact(fx.store.clone()).map_err(err)?;
    let t = Instant::now();
    let got: Vec<Vec<usize>> = fx
        .queries
        .iter()
        .map(|q| index.retrieve_topk(q, 10).map(|r| r.ids()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let elapsed = t.elapsed();
    for (i, (q, ids)) in fx.queries.iter().zip(&got).enumerate() {
        check(
            *ids == oracle_topk(&fx.store, q.as_slice(), 10),
            format!("query {i} differs from the exhaustive scan"),
        )?;
    }
    check(
        elapsed < Duration::from_secs(10),
        format!("1000 queries took {elapsed:?}"),
    )?;
    Ok(format!(
        "1000/1000 queries identical, {:.2?} for 1000 queries over 10k x 512",
        elapsed
    ))
}

fn ivf_recall(fx: &RetrievalFixture) -> Outcome {
    let index = CaptionIndex::build(
        fx.store.clone(),
        IndexKind::QuantizedIvf,
        Some(IvfParams {
            n_lists: 64,
            n_probe: 8,
        }),
    )
    .map_err(err)?;
    let (mut hit, mut total) = (0usize, 0usize);
    for q in &fx.queries {
        let truth = oracle_topk(&fx.store, q.as_slice(), 10);
        let approx = index.retrieve_topk(q, 10).map_err(err)?.ids();
        hit += approx.iter().filter(|i| truth.contains(i)).count();
        total += truth.len();
    }
    let recall = hit as f64 / total as f64;
    check(recall >= 0.95, format!("recall@10 {recall:.4} < 0.95"))?;
    Ok(format!("recall@10 = {recall:.4} (n_lists 64, n_probe 8)"))
}

// ---------- scoring ----------

fn argmax(xs: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, x) in xs.enumerate() {
        if x > best.0 {
            best = (x, i);
        }
    }
    best.1
}

fn scoring_endpoints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..10_000 {
        let n = rng.gen_range(2..=50);
        let dim = 16;
        let image = random_unit(dim, &mut rng);
        let centroid = random_unit(dim, &mut rng);
        let cands: Vec<Embedding> = (0..n).map(|_| random_unit(dim, &mut rng)).collect();
        let one = score_candidates(&image, &cands, &centroid, 1.0).map_err(err)?;
        let zero = score_candidates(&image, &cands, &centroid, 0.0).map_err(err)?;
        let mid =
            score_candidates(&image, &cands, &centroid, rng.gen_range(0.0..1.0)).map_err(err)?;
        check(
            argmax(one.iter().map(|s| s.s)) == argmax(one.iter().map(|s| s.s_v)),
            format!("trial {trial}: alpha=1"),
        )?;
        check(
            argmax(zero.iter().map(|s| s.s)) == argmax(zero.iter().map(|s| s.s_t)),
            format!("trial {trial}: alpha=0"),
        )?;
        let sv: Vec<f64> = mid.iter().map(|s| s.s_v).collect();
        let st: Vec<f64> = mid.iter().map(|s| s.s_t).collect();
        for (name, p) in [("s_v", softmax(&sv)), ("s_t", softmax(&st))] {
            let z: f64 = p.iter().sum();
            check(
                (z - 1.0).abs() <= 1e-6,
                format!("trial {trial}: softmax({name}) sums to {z}"),
            )?;
        }
        let total: f64 = mid.iter().map(|s| s.s).sum();
        check(
            (total - 1.0).abs() <= 1e-6,
            format!("trial {trial}: fused scores sum to {total}"),
        )?;
    }
    Ok("10000 trials, sizes 2-50: argmax endpoints hold, softmaxes sum to 1 within 1e-6".into())
}

// ---------- single-template degeneracy ----------

fn single_template_degeneracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let provider = MockProvider::new(5);
    let concepts = ["cat", "dog", "bird", "car", "tree"];
    let index = planted_index(&provider, &concepts, 60, &mut rng).map_err(err)?;
    let cfg = ClassifierConfig {
        templates: TemplateSet::new([DEFAULT_TEMPLATE]).map_err(err)?,
        ..ClassifierConfig::default()
    };
    let clf = Classifier::new(&index, &provider, cfg.clone()).map_err(err)?;
    let pipeline = CandidatePipeline::new(cfg.filter.clone()).map_err(err)?;
    for i in 0..50 {
        let c = concepts[i % concepts.len()];
        let img = solid_image(concept_color(&provider, c), 24, 24, 25, &mut rng);
        let emb = provider
            .embed_image(&ImageRef::Png(encode_png(&img).map_err(err)?))
            .map_err(err)?;

        // reference: retrieve, extract, one prompt per candidate, fuse, rank
        let retrieved = index.retrieve_topk(&emb, cfg.k).map_err(err)?;
        let names = pipeline.extract(retrieved.texts()).names();
        let prompts: Vec<String> = names
            .iter()
            .map(|n| DEFAULT_TEMPLATE.replace("{}", n))
            .collect();
        let text = provider
            .embed_texts(Role::JointText, &prompts)
            .map_err(err)?;
        let scores = score_candidates(&emb, &text, &retrieved.centroid, cfg.alpha).map_err(err)?;
        let reference = Prediction {
            ranked: rank(names, scores),
            retrieved_caption_ids: retrieved.ids(),
        };

        let got = serde_json::to_string(&clf.classify(&emb).map_err(err)?).map_err(err)?;
        let want = serde_json::to_string(&reference).map_err(err)?;
        check(got == want, format!("image {i}: {got} vs {want}"))?;
    }
    Ok("50 images: single-template output byte-identical to the one-prompt reference".into())
}

// ---------- candidate pipeline ----------

fn pipeline_goldens() -> Outcome {
    let cfg = FilterConfig::default();
    let p = CandidatePipeline::new(cfg.clone()).map_err(err)?;
    let words = |s: &str| p.words(s);
    check(
        words("a photo of a ⟨PERSON⟩").is_empty(),
        format!("PERSON: {:?}", words("a photo of a ⟨PERSON⟩")),
    )?;
    check(
        words("<PERSON> walking") == ["walking"],
        format!("{:?}", words("<PERSON> walking")),
    )?;
    for meta in ["image", "photo", "thumbnail"] {
        check(
            words(&format!("{meta} of cats")) == ["cat"],
            format!("meta word {meta} kept"),
        )?;
    }
    check(words("my cat") == ["cat"], "short word kept")?;
    check(words("an ox").is_empty(), "two-letter word kept")?;
    check(
        words("sunset_beach.jpg at www.example.com") == ["sunset", "beach"],
        format!("{:?}", words("sunset_beach.jpg at www.example.com")),
    )?;
    check(words("tree-house") == ["tree", "house"], "dash split")?;
    check(standardize("Cassowary") == "cassowary", "Cassowary")?;
    check(
        standardize("dogs") == "dog" && standardize("glasses") == "glass",
        "plural rules",
    )?;
    let merged = extract_candidates(["Cassowary in the zoo", "a cassowary"], &cfg).map_err(err)?;
    check(
        merged.get("cassowary") == Some(2),
        format!("merge: {merged:?}"),
    )?;
    let dropped = extract_candidates(["a cat on a mat", "the cat sleeps"], &cfg).map_err(err)?;
    check(
        dropped.names() == ["cat"] && dropped.get("cat") == Some(2),
        format!("min occurrences: {dropped:?}"),
    )?;
    let apples = extract_candidates(vec!["red apple"; 10], &cfg).map_err(err)?;
    check(
        apples.names() == ["apple"],
        format!("nouns only: {apples:?}"),
    )?;
    let wide = FilterConfig {
        keep_pos_tags: [Pos::Noun, Pos::Adjective].into(),
        ..cfg.clone()
    };
    let apples = extract_candidates(vec!["red apple"; 10], &wide).map_err(err)?;
    check(
        apples.names() == ["apple", "red"],
        format!("with adjectives: {apples:?}"),
    )?;
    check(
        extract_candidates([""], &cfg).map_err(err)?.is_empty(),
        "empty caption",
    )?;
    Ok("cleaning, standardization and filtering examples pass verbatim".into())
}

const POOL: &[&str] = &[
    "Cat",
    "cats",
    "DOG",
    "dogs",
    "Cassowary",
    "cassowaries",
    "photo",
    "image",
    "thumbnail",
    "<PERSON>",
    "⟨PERSON⟩",
    "red_panda",
    "tree-house",
    "www.example.com",
    "http://x.org/a",
    "IMG_0042.jpg",
    "2019",
    "a",
    "of",
    "the",
    "on",
    "running",
    "happy",
    "glasses",
    "boxes",
    "leaves",
    "geese",
    "mice",
    "fish",
    "Zoo",
    "café",
    "naïve",
    "it's",
    "sofa,",
    "couch.",
    "#tag",
    "x1",
    "beach!",
    "sky",
    "skies",
];

fn random_captions(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            let len = rng.gen_range(0..9);
            (0..len)
                .map(|_| *POOL.choose(rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn pipeline_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cfg = FilterConfig::default();
    let p = CandidatePipeline::new(cfg.clone()).map_err(err)?;
    let captions = random_captions(&mut rng, 1000);
    let set = p.extract(captions.iter().map(String::as_str));
    check(!set.is_empty(), "fixture produced no candidates")?;

    // idempotence: every output name passes through the pipeline unchanged
    for name in set.names() {
        check(
            p.words(&name) == [name.clone()],
            format!("{name:?} is not a fixed point"),
        )?;
        check(
            standardize(&standardize(&name)) == standardize(&name),
            format!("standardize({name:?}) not idempotent"),
        )?;
    }
    let again = p.extract(set.iter().flat_map(|(n, c)| std::iter::repeat_n(n, c)));
    check(again == set, "re-extracting the output changed it")?;
    for w in POOL {
        check(
            standardize(&standardize(w)) == standardize(w),
            format!("standardize not idempotent on {w:?}"),
        )?;
    }

    // output shape
    for (name, count) in set.iter() {
        check(
            name.chars().all(|c| c.is_alphabetic() && !c.is_uppercase()),
            format!("bad characters in {name:?}"),
        )?;
        check(
            count >= cfg.min_occurrences,
            format!("{name} has count {count}"),
        )?;
    }

    // permutation invariance
    for _ in 0..20 {
        let mut shuffled = captions.clone();
        shuffled.shuffle(&mut rng);
        check(
            p.extract(shuffled.iter().map(String::as_str)) == set,
            "permutation changed the candidate set",
        )?;
    }
    Ok(format!(
        "1000 random captions, {} candidates: idempotent and permutation-invariant",
        set.len()
    ))
}

// ---------- dense ----------

fn dense_plan() -> Outcome {
    let spec = GridSpec::default();
    let plan = plan_patches(256, 256, &spec).map_err(err)?;
    for (s, want) in [(2u32, 9usize), (4, 49), (8, 225)] {
        let got = plan.patches.iter().filter(|p| p.scale == s).count();
        check(
            got == want,
            format!("scale {s}: {got} patches, want {want}"),
        )?;
        check(
            got == ((2 * s - 1) * (2 * s - 1)) as usize,
            "count is not (2n-1)^2",
        )?;
    }

    // coverage against rectangle containment of cell centres
    for (w, h) in [(256u32, 256u32), (300, 200), (97, 131)] {
        let plan = plan_patches(w, h, &spec).map_err(err)?;
        let m = plan.map_cells;
        let cov = plan.coverage();
        for r in 0..m {
            for c in 0..m {
                let cx = (c as f64 + 0.5) * w as f64 / m as f64;
                let cy = (r as f64 + 0.5) * h as f64 / m as f64;
                let want = plan
                    .patches
                    .iter()
                    .filter(|p| {
                        (p.x0 as f64) <= cx
                            && cx < p.x1 as f64
                            && (p.y0 as f64) <= cy
                            && cy < p.y1 as f64
                    })
                    .count() as u32;
                check(
                    cov[(r * m + c) as usize] == want,
                    format!(
                        "{w}x{h} cell ({r},{c}): {} vs {want}",
                        cov[(r * m + c) as usize]
                    ),
                )?;
            }
        }
    }

    // uniform embeddings give a single label
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let provider = MockProvider::new(0);
    let index = planted_index(&provider, &["cat", "dog"], 40, &mut rng).map_err(err)?;
    let clf = Classifier::new(&index, &provider, ClassifierConfig::default()).map_err(err)?;
    let e = provider.anchor(Role::JointImage, "dog").unwrap();
    let feats = accumulate_features(&plan, &vec![e; plan.patches.len()]).map_err(err)?;
    let seg = segment_features(&feats, &clf, false).map_err(err)?;
    let labels: BTreeSet<&String> = seg.cells.iter().flatten().collect();
    check(
        seg.cells.len() == 16 && seg.cells.iter().all(|r| r.len() == 16),
        "map is not 16x16",
    )?;
    check(
        labels.len() == 1,
        format!("uniform input gave labels {labels:?}"),
    )?;
    Ok(format!(
        "9/49/225 patches, coverage matches containment on 3 sizes, uniform map -> {:?}",
        labels
    ))
}

// ---------- planted recovery ----------

fn planted_recovery() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let provider = MockProvider::new(11);
    let index = planted_index(&provider, &["cat", "dog"], 200, &mut rng).map_err(err)?;
    let clf = Classifier::new(&index, &provider, ClassifierConfig::default()).map_err(err)?;
    let mut images = Vec::new();
    let mut truth = Vec::new();
    for i in 0..200 {
        let c = if i % 2 == 0 { "cat" } else { "dog" };
        let img = solid_image(concept_color(&provider, c), 32, 32, 20, &mut rng);
        images.push(
            provider
                .embed_image(&ImageRef::Png(encode_png(&img).map_err(err)?))
                .map_err(err)?,
        );
        truth.push(c);
    }
    let preds = clf.classify_batch(&images).map_err(err)?;
    let correct = preds
        .iter()
        .zip(&truth)
        .filter(|(p, g)| p.top1() == **g)
        .count();
    let acc = correct as f64 / 200.0;

    let img = split_image(
        concept_color(&provider, "cat"),
        concept_color(&provider, "dog"),
        256,
        256,
        20,
        &mut rng,
    );
    let seg = segment_dense(&img, &clf, &GridSpec::default()).map_err(err)?;
    let m = seg.cells.len();
    let (mut ok, mut total) = (0, 0);
    for row in &seg.cells {
        for (c, label) in row.iter().enumerate() {
            if c == m / 2 - 1 || c == m / 2 {
                continue;
            }
            total += 1;
            ok += (label == if c < m / 2 { "cat" } else { "dog" }) as usize;
        }
    }
    let seg_acc = ok as f64 / total as f64;
    let elapsed = t.elapsed();
    check(acc >= 0.95, format!("classification accuracy {acc:.3}"))?;
    check(
        seg_acc >= 0.9,
        format!("segmentation accuracy {seg_acc:.3}"),
    )?;
    check(
        elapsed < Duration::from_secs(60),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!("classify {acc:.3} on 200 images, split recovery {seg_acc:.3} on non-boundary cells, {elapsed:.2?}"))
}

// ---------- metrics ----------

const L3: [&str; 3] = ["cat", "dog", "owl"];

/// Counting oracle for one map pair from its contingency table
/// `n[p][g]` (rows predicted label, columns ground truth).
struct TableOracle {
    n: [[usize; 3]; 3],
}

impl TableOracle {
    fn gt_present(&self) -> Vec<usize> {
        (0..3)
            .filter(|&g| (0..3).any(|p| self.n[p][g] > 0))
            .collect()
    }

    fn jaccard_of(n: &[[usize; 3]; 3], present: &[usize]) -> f64 {
        let ji = |c: usize| {
            let inter = n[c][c];
            let pred: usize = n[c].iter().sum();
            let gt: usize = (0..3).map(|p| n[p][c]).sum();
            inter as f64 / (pred + gt - inter) as f64
        };
        present.iter().map(|&c| ji(c)).sum::<f64>() / present.len() as f64
    }

    fn hji(&self) -> f64 {
        Self::jaccard_of(&self.n, &self.gt_present())
    }

    fn recall(&self) -> f64 {
        let present = self.gt_present();
        present.iter().filter(|&&c| self.n[c][c] > 0).count() as f64 / present.len() as f64
    }

    fn remapped(&self, map: impl Fn(usize) -> usize) -> [[usize; 3]; 3] {
        let mut out = [[0; 3]; 3];
        for p in 0..3 {
            for g in 0..3 {
                out[map(p)][g] += self.n[p][g];
            }
        }
        out
    }

    fn oji(&self) -> f64 {
        // labels are in lexicographic order, so the first maximum wins ties
        let target = |p: usize| {
            (0..3).fold(0, |best, g| {
                if self.n[p][g] > self.n[p][best] {
                    g
                } else {
                    best
                }
            })
        };
        Self::jaccard_of(&self.remapped(target), &self.gt_present())
    }

    fn nji(&self) -> f64 {
        let present = self.gt_present();
        let target = |p: usize| if present.contains(&p) { p } else { present[0] };
        Self::jaccard_of(&self.remapped(target), &present)
    }
}

fn tables(cells: usize, slots: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(left - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(cells, slots, &mut Vec::new(), &mut out);
    out
}

fn metric_oracles() -> Outcome {
    // every 3x3 map pair over 3 labels is equivalent, up to a pixel
    // permutation, to one realisation of its contingency table
    let all = tables(9, 9);
    check(all.len() == 24_310, format!("{} tables", all.len()))?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    for t in &all {
        let mut n = [[0usize; 3]; 3];
        let mut cells = Vec::with_capacity(9);
        for (k, &v) in t.iter().enumerate() {
            n[k / 3][k % 3] = v;
            cells.extend(std::iter::repeat_n((k / 3, k % 3), v));
        }
        let pred = LabelMap::from_fn(3, 3, |x, y| Some(L3[cells[y * 3 + x].0]));
        let gt = LabelMap::from_fn(3, 3, |x, y| Some(L3[cells[y * 3 + x].1]));
        let r = evaluate_segmentation(&[SegPair::new(pred, gt)], &ExactKernel).map_err(err)?;
        let o = TableOracle { n };
        for (name, want) in [
            ("hji", o.hji()),
            ("sji", o.hji()),
            ("hr", o.recall()),
            ("sr", o.recall()),
            ("oji", o.oji()),
            ("nji", o.nji()),
        ] {
            let got = r.metrics[name];
            check(
                close(got, want),
                format!("table {t:?}: {name} {got} vs oracle {want}"),
            )?;
        }
    }

    // soft equals hard under the exact kernel
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let labels = ["cat", "dog", "owl", "emu"];
    for i in 0..1000 {
        let batch: Vec<SegPair> = (0..rng.gen_range(1..4))
            .map(|_| {
                let mut f = || {
                    let v: Vec<u8> = (0..16).map(|_| rng.gen_range(0..4)).collect();
                    LabelMap::from_fn(4, 4, |x, y| Some(labels[v[y * 4 + x] as usize]))
                };
                SegPair::new(f(), f())
            })
            .collect();
        let hj = segmentation_jaccard(&batch, Mode::Hard, &ExactKernel).map_err(err)?;
        let sj = segmentation_jaccard(&batch, Mode::Soft, &ExactKernel).map_err(err)?;
        let hr = segmentation_recall(&batch, Mode::Hard, &ExactKernel).map_err(err)?;
        let sr = segmentation_recall(&batch, Mode::Soft, &ExactKernel).map_err(err)?;
        check(
            close(hj.mean, sj.mean) && close(hr, sr),
            format!(
                "batch {i}: soft {} / {sr} vs hard {} / {hr}",
                sj.mean, hj.mean
            ),
        )?;
    }

    // cluster accuracy against brute-force assignment
    for i in 0..1000 {
        let len = rng.gen_range(1..25);
        let pairs: Vec<(String, String)> = (0..len)
            .map(|_| {
                (
                    format!("p{}", rng.gen_range(0..4)),
                    format!("g{}", rng.gen_range(0..3)),
                )
            })
            .collect();
        let preds: Vec<&String> = pairs
            .iter()
            .map(|(p, _)| p)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let gts: Vec<&String> = pairs
            .iter()
            .map(|(_, g)| g)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut best = 0;
        for code in 0..gts.len().pow(preds.len() as u32) {
            let assign: BTreeMap<&String, &String> = preds
                .iter()
                .enumerate()
                .map(|(k, p)| (*p, gts[code / gts.len().pow(k as u32) % gts.len()]))
                .collect();
            best = best.max(pairs.iter().filter(|(p, g)| assign[p] == g).count());
        }
        let want = best as f64 / len as f64;
        let got = cluster_accuracy(&pairs).map_err(err)?;
        check(
            close(got, want),
            format!("batch {i}: {got} vs brute force {want}"),
        )?;
    }

    // worked examples
    let pred = LabelMap::from_rows(&[vec!["cat", "cat"], vec!["cat", "cat"]]);
    let gt = LabelMap::from_rows(&[vec!["cat", "cat"], vec!["dog", "dog"]]);
    let hji = segmentation_jaccard(&[SegPair::new(pred, gt)], Mode::Hard, &ExactKernel)
        .map_err(err)?
        .mean;
    check(hji == 0.25, format!("worked HJI {hji}"))?;
    let iou = semantic_iou("granny smith apple", "apple");
    check(iou == 1.0 / 3.0, format!("worked semantic IoU {iou}"))?;
    Ok("24310 3x3 contingency tables, 1000 soft==hard batches, 1000 cluster batches, worked cases 0.25 and 1/3".into())
}

// ---------- filtering ablation ----------

fn filtering_ablation() -> Outcome {
    let provider = MockProvider::new(11).with_image_bias("photo", 2.5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let concepts = ["cat", "dog", "bird", "car", "tree", "couch"];
    let index = planted_index(&provider, &concepts, 100, &mut rng).map_err(err)?;
    let mut images = Vec::new();
    let mut truth = Vec::new();
    for i in 0..120 {
        let c = concepts[i % concepts.len()];
        let img = solid_image(concept_color(&provider, c), 32, 32, 20, &mut rng);
        images.push(
            provider
                .embed_image(&ImageRef::Png(encode_png(&img).map_err(err)?))
                .map_err(err)?,
        );
        truth.push(c);
    }
    let mut acc = Vec::new();
    for filter in [FilterConfig::default(), FilterConfig::unfiltered()] {
        let clf = Classifier::new(
            &index,
            &provider,
            ClassifierConfig {
                filter,
                ..ClassifierConfig::default()
            },
        )
        .map_err(err)?;
        let preds = clf.classify_batch(&images).map_err(err)?;
        let pairs: Vec<(&str, &str)> = preds
            .iter()
            .zip(&truth)
            .map(|(p, g)| (p.top1(), *g))
            .collect();
        acc.push(cluster_accuracy(&pairs).map_err(err)?);
    }
    check(
        acc[0] >= acc[1],
        format!("full {:.3} < unfiltered {:.3}", acc[0], acc[1]),
    )?;
    Ok(format!(
        "cluster accuracy full {:.3} >= unfiltered {:.3}",
        acc[0], acc[1]
    ))
}

// ---------- persistence ----------

fn persistence() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (store, _) = clustered_store(3000, 64, 20, 0.8, &mut rng);
    for (kind, params) in [
        (IndexKind::ExactFlat, None),
        (
            IndexKind::QuantizedIvf,
            Some(IvfParams {
                n_lists: 16,
                n_probe: 4,
            }),
        ),
    ] {
        let index = CaptionIndex::build(store.clone(), kind, params).map_err(err)?;
        let path = dir.path().join(format!("{kind:?}"));
        index.save(&path).map_err(err)?;
        let back = CaptionIndex::load(&path).map_err(err)?;
        for i in 0..100 {
            let q = random_unit(64, &mut rng);
            check(
                index.retrieve_topk(&q, 10).map_err(err)?
                    == back.retrieve_topk(&q, 10).map_err(err)?,
                format!("{kind:?} query {i}"),
            )?;
        }
    }

    // bit patterns survive, including signed zero, subnormals and extremes
    let mut data: Vec<f32> = (0..4096)
        .map(|_| f32::from_bits(rng.gen::<u32>() & 0x7f7f_ffff | (rng.gen::<u32>() & 0x8000_0000)))
        .collect();
    data.extend([
        0.0,
        -0.0,
        f32::MIN_POSITIVE,
        f32::MAX,
        f32::MIN,
        1e-45,
        -1e-45,
        1.0,
    ]);
    let m = EmbeddingMatrix::new(8, data).map_err(err)?;
    let path = dir.path().join("fixture.vfeb");
    vfeb::write_file(&path, &m).map_err(err)?;
    let back = vfeb::read_file(&path).map_err(err)?;
    let same = back.dim == m.dim
        && back.count == m.count
        && back
            .data
            .iter()
            .zip(&m.data)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    check(same, "VFEB round trip changed bits")?;
    let len = std::fs::metadata(&path).map_err(err)?.len() as usize;
    check(
        len == vfeb::HEADER_LEN + 4 * m.data.len(),
        format!("file length {len}"),
    )?;
    Ok("exact and IVF indexes answer 100 queries identically after reload; VFEB bit-exact".into())
}

fn main() {
    let fx = retrieval_fixture();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("retrieval exactness", Box::new(|| retrieval_exactness(&fx))),
        ("ivf recall", Box::new(|| ivf_recall(&fx))),
        ("scoring endpoints", Box::new(scoring_endpoints)),
        (
            "single-template degeneracy",
            Box::new(single_template_degeneracy),
        ),
        ("candidate pipeline goldens", Box::new(pipeline_goldens)),
        (
            "candidate pipeline properties",
            Box::new(pipeline_properties),
        ),
        ("dense plan and accumulation", Box::new(dense_plan)),
        ("planted recovery", Box::new(planted_recovery)),
        ("metric oracles", Box::new(metric_oracles)),
        ("filtering ablation direction", Box::new(filtering_ablation)),
        ("persistence", Box::new(persistence)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let t = Instant::now();
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.2?}]", t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{:.2?}]", t.elapsed());
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
