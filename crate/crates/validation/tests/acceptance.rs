//! Acceptance suite: one trial per criterion, each printing a PASS or FAIL
//! line with the measured values.

#[path = "../../core/tests/support/mod.rs"]
mod support;

#[path = "../../model/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use libtest_mimic::{Arguments, Failed, Trial};
use ndarray::{s, Array2};

use rawmuse_core::labels::TokenLabels;
use rawmuse_core::metrics::chords::{label_chords, Chord, ChordSequence};
use rawmuse_core::metrics::fitness::fitness;
use rawmuse_core::metrics::ngram::{cpi, cpvr, NGramModel};
use rawmuse_core::metrics::pnsr::{band_histogram, pnsr, PnsrBand};
use rawmuse_core::metrics::scape::si;
use rawmuse_core::metrics::ssm::SsmParams;
use rawmuse_core::metrics::{aggregate, evaluate_piece, scape_for_notes, EvalConfig, MetricRegistry, PieceInput};
use rawmuse_core::metrics::{SI_BANDS, TABLE_COLUMNS};
use rawmuse_core::midi::PITCHES;
use rawmuse_core::tokenizer::{Token, EVENT_COUNT, SHIFT_STEP_MS};
use rawmuse_core::{decode, encode, label_sequence, LabelerState, NoteEvent, NoteList, PianoRoll, TokenSequence, VOCAB_SIZE};
use rawmuse_model::generate::{run_protocol, StopReason};
use rawmuse_model::loss::next_token_nll;
use rawmuse_model::train::mean_nll;
use rawmuse_model::{Example, Model, ModelConfig, Params, ProtocolConfig, TrainConfig, Trainer};

fn verdict(id: u32, name: &str, ok: bool, detail: impl AsRef<str>) -> Result<(), Failed> {
    let line = format!("criterion {id:>2} {} {name}: {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
    println!("{line}");
    if ok {
        Ok(())
    } else {
        Err(line.into())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.3} s", d.as_secs_f64())
}

fn c01_tokenizer_roundtrip() -> Result<(), Failed> {
    let t0 = Instant::now();
    let mut rng = support::rng(101);
    let (mut worst_ms, mut worst_vel, mut events, mut bad) = (0u64, 0u8, 0usize, 0usize);
    for _ in 0..200 {
        let notes = support::random_notes(&mut rng);
        let back = decode(&encode(&notes));
        let (a, b) = (support::by_pitch(&notes), support::by_pitch(&back));
        for (orig, dec) in a.iter().zip(&b) {
            if orig.len() != dec.len() {
                bad += 1;
                continue;
            }
            for (x, y) in orig.iter().zip(dec) {
                worst_ms = worst_ms
                    .max(x.onset_ms.abs_diff(y.onset_ms))
                    .max(x.offset_ms.abs_diff(y.offset_ms));
                worst_vel = worst_vel.max(x.velocity.abs_diff(y.velocity));
                events += 2;
            }
        }
    }
    let elapsed = t0.elapsed();
    let ok = bad == 0 && worst_ms <= SHIFT_STEP_MS / 2 && worst_vel <= 2 && elapsed < Duration::from_secs(5);
    verdict(
        1,
        "tokenizer roundtrip",
        ok,
        format!(
            "{events} boundaries, worst {worst_ms} ms / {worst_vel} velocity, {bad} count mismatches, {}",
            secs(elapsed)
        ),
    )
}

fn c02_vocabulary() -> Result<(), Failed> {
    let t0 = Instant::now();
    let mut seen = BTreeSet::new();
    let mut roundtrip = true;
    for id in 0..VOCAB_SIZE as u32 {
        let token = Token::from_id(id)?;
        roundtrip &= token.id() == id;
        seen.insert(format!("{token:?}"));
    }
    let outside = Token::from_id(VOCAB_SIZE as u32).is_err();
    let elapsed = t0.elapsed();
    let ok = EVENT_COUNT == 4196
        && VOCAB_SIZE == 4199
        && roundtrip
        && seen.len() == VOCAB_SIZE
        && outside
        && elapsed < Duration::from_secs(1);
    verdict(
        2,
        "vocabulary",
        ok,
        format!("{EVENT_COUNT} events, {VOCAB_SIZE} ids, {} distinct tokens, {}", seen.len(), secs(elapsed)),
    )
}

fn c03_labeler_equivalence() -> Result<(), Failed> {
    let mut rng = support::rng(103);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let seq = support::random_tokens(&mut rng, 300);
        let batch = label_sequence(&seq).to_rows();
        let mut state = LabelerState::new(seq.duration_ms().max(1))?;
        let streamed: Vec<TokenLabels> = seq.ids().iter().map(|&id| state.step(id)).collect::<Result<_, _>>()?;
        mismatches += usize::from(streamed != batch);
    }

    let on = support::note_on;
    let off = |pitch| Token::NoteOff { pitch };
    let worked = TokenSequence::from_tokens([
        Token::Bos,
        on(60),
        Token::Shift(2),
        on(64),
        on(67),
        Token::Shift(3),
        Token::Shift(4),
        off(60),
        Token::Eos,
    ]);
    let rows = label_sequence(&worked).to_rows();
    let column = |f: fn(&TokenLabels) -> u8| rows.iter().map(f).collect::<Vec<u8>>();
    let worked_ok = column(|l| l.time) == [0, 0, 0, 2, 2, 0, 0, 4, 0]
        && column(|l| l.kind) == [3, 0, 2, 0, 0, 2, 2, 1, 3]
        && column(|l| l.pc) == [0, 1, 0, 5, 8, 0, 0, 1, 0];

    // 12.8 s piece with a note at 250 ms: part width 100 ms, part 3.
    let mut tokens = vec![Token::Bos, Token::Shift(25), on(60)];
    tokens.extend(std::iter::repeat_n(Token::Shift(100), 12));
    tokens.extend([Token::Shift(55), Token::Eos]);
    let part_seq = TokenSequence::from_tokens(tokens);
    let part_ok = part_seq.duration_ms() == 12_800 && label_sequence(&part_seq).get(2).part == 3;

    verdict(
        3,
        "labeler equivalence",
        mismatches == 0 && worked_ok && part_ok,
        format!("{mismatches}/1000 streamed sequences differ; worked example {worked_ok}; part example {part_ok}"),
    )
}

fn closed_form(rows: usize, d: usize, w: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, d), |(k, j)| {
        let i = (j / 2) as f64;
        let angle = k as f64 / (10_000.0 / w).powf(2.0 * i / d as f64);
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

/// max |<part_j, time_k>| / d over all rows j, k >= 1.
fn orthogonality(part: &Array2<f64>, time: &Array2<f64>) -> f64 {
    let d = part.ncols() as f64;
    let mut worst = 0.0f64;
    for j in 1..part.nrows() {
        for k in 1..time.nrows() {
            worst = worst.max(part.row(j).dot(&time.row(k)).abs() / d);
        }
    }
    worst
}

fn c04_sinusoidal_closed_form() -> Result<(), Failed> {
    let cfg = ModelConfig::toy("gpt2-se");
    let p = Params::init(&cfg, 7)?;
    let st = p.embed.structural.as_ref().ok_or("gpt2-se has no structural tables")?;
    let e = &cfg.embedding;
    let part_err = (&st.tables[0] - &closed_form(129, e.d_struct, e.w_part)).fold(0.0f64, |m, v| m.max(v.abs()));
    let time_err = (&st.tables[2] - &closed_form(101, e.d_struct, e.w_time)).fold(0.0f64, |m, v| m.max(v.abs()));
    verdict(
        4,
        "sinusoidal closed form",
        part_err <= 1e-6 && time_err <= 1e-6,
        format!("max deviation part {part_err:.2e}, time {time_err:.2e} (d_struct {})", e.d_struct),
    )
}

fn c04_near_orthogonality() -> Result<(), Failed> {
    let d = ModelConfig::toy("gpt2-se").embedding.d_struct;
    let time = closed_form(101, d, 1.0);
    let chosen = orthogonality(&closed_form(129, d, 10.0), &time);
    let baseline = orthogonality(&closed_form(129, d, 1.0), &time);
    let ratio = baseline / chosen;
    verdict(
        4,
        "near-orthogonality",
        ratio >= 2.0,
        format!("w_part=10: {chosen:.4}, w equal: {baseline:.4}, ratio {ratio:.3} (needs >= 2)"),
    )
}

fn c05_gradient_check() -> Result<(), Failed> {
    let t0 = Instant::now();
    let seq = common::probe_sequence();
    let labels = common::probe_labels(&seq);
    let mut worst = (String::new(), 0.0f64);
    let mut blocks = 0;
    for variant in ["gpt2", "gpt2-re", "gpt2-se"] {
        let model = Model::new(common::small_config(variant), 21)?;
        let l = model.config.uses_structure().then_some(labels.as_slice());
        for b in common::check_gradients(&model, seq.ids(), l, None, 4, 5) {
            blocks += 1;
            if b.worst_rel >= worst.1 {
                worst = (format!("{variant} {}", b.block), b.worst_rel);
            }
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        5,
        "gradient check",
        worst.1 < 1e-4 && elapsed < Duration::from_secs(60),
        format!("{blocks} blocks, worst relative error {:.2e} ({}), {}", worst.1, worst.0, secs(elapsed)),
    )
}

/// Ten 48-token sequences. They diverge right after BOS, so a memorizing
/// model still pays ln(10) once per sequence: a floor of ln(10)/47 ≈ 0.049.
fn overfit_examples() -> Vec<Example> {
    let mut rng = support::rng(106);
    (0..10)
        .map(|_| {
            let mut ids = vec![1];
            while ids.len() < 47 {
                let t = support::random_tokens(&mut rng, 60);
                ids.extend(&t.ids()[1..t.len() - 1]);
            }
            ids.truncate(47);
            ids.push(2);
            let seq = TokenSequence::new(ids).unwrap();
            Example::from_sequence(&seq, None, true).unwrap()
        })
        .collect()
}

fn c06_overfit() -> Result<(), Failed> {
    let t0 = Instant::now();
    let mut cfg = ModelConfig::toy("gpt2-se");
    cfg.n_positions = 64;
    let examples = overfit_examples();
    let train = TrainConfig {
        peak_lr: 1e-3,
        warmup_steps: 20,
        total_steps: 2000,
        batch_size: 10,
        max_len: 64,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(Model::new(cfg, 6)?, &examples, train, 6)?;
    let mut nll = mean_nll(&trainer.model, &examples)?;
    let start = nll;
    while trainer.step_count() < 2000 && nll >= 0.1 {
        trainer.step()?;
        if trainer.step_count() % 10 == 0 {
            nll = mean_nll(&trainer.model, &examples)?;
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        6,
        "overfit",
        nll < 0.1 && elapsed < Duration::from_secs(600),
        format!(
            "mean NLL {start:.3} -> {nll:.4} after {} steps, {}",
            trainer.step_count(),
            secs(elapsed)
        ),
    )
}

fn c06_uniform_logits() -> Result<(), Failed> {
    let mut model = Model::new(common::small_config("gpt2"), 1)?;
    model.params.lm_head.fill(0.0);
    let seq = common::probe_sequence();
    let loss = next_token_nll(&model.forward(seq.ids(), None)?, seq.ids())?.mean();
    let expected = (VOCAB_SIZE as f64).ln();
    verdict(
        6,
        "uniform-logit loss",
        (loss - expected).abs() <= 1e-6 && (loss - 8.3427).abs() < 1e-4,
        format!("{loss:.9} vs ln(4199) = {expected:.9}"),
    )
}

/// `times` repetitions of a motif with one new pitch per second.
fn repeated_motif(period_s: u64, times: u64) -> NoteList {
    (0..period_s * times)
        .map(|t| NoteEvent::new(60 + (t % period_s) as u8, 90, t * 1000, (t + 1) * 1000).unwrap())
        .collect()
}

fn c07_fitness_oracle() -> Result<(), Failed> {
    let mut rng = support::rng(107);
    let (mut segments, mut wrong) = (0, 0);
    for trial in 0..50 {
        let n = 1 + trial % 6;
        let s = support::random_ssm(&mut rng, n);
        for start in 0..n {
            for end in start..n {
                let f = fitness(&s, start, end)?;
                let oracle = support::brute_force_families(&s, start, end);
                segments += 1;
                let ok = f.score == oracle.score
                    && oracle.families.contains(&f.family)
                    && f.fitness == support::oracle_fitness(&s, start, end, &f.family);
                wrong += usize::from(!ok);
            }
        }
    }
    let mut bands = Vec::new();
    let mut ordered = true;
    for (period, band) in [(5, 0), (10, 1), (16, 2)] {
        let plot = scape_for_notes(&repeated_motif(period, 4), 1000, &SsmParams::default())?;
        let v: Vec<f64> = SI_BANDS
            .iter()
            .map(|&(_, lo, hi)| si(&plot, lo, hi).map(|x| x.value))
            .collect::<Result<_, _>>()?;
        let peak = (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
        ordered &= peak == band;
        bands.push(format!("{period} s -> [{:.3} {:.3} {:.3}]", v[0], v[1], v[2]));
    }
    verdict(
        7,
        "fitness oracle",
        wrong == 0 && ordered,
        format!("{wrong}/{segments} segments differ; SI by band: {}", bands.join(", ")),
    )
}

fn c08_ngram_oracle() -> Result<(), Failed> {
    let mut rng = support::rng(108);
    let mut wrong = 0;
    for trial in 0..100 {
        let alphabet = 2 + trial % 6;
        let corpus: Vec<Vec<Chord>> = (0..3).map(|_| support::random_chords(&mut rng, alphabet, 30)).collect();
        let seqs: Vec<ChordSequence> = corpus.iter().map(|c| ChordSequence::new(c.clone(), 1000)).collect();
        let query = support::random_chords(&mut rng, alphabet, 25);
        let q = ChordSequence::new(query.clone(), 1000);
        for n in 2..=4 {
            let model = NGramModel::build(&seqs, n)?;
            let got = cpvr(&q, &model, n, 0.0)?;
            wrong += usize::from(match support::brute_force_cpvr(&corpus, &query, n) {
                Some(v) => got.value != v,
                None => !got.degenerate,
            });
            let got = cpi(&q, n)?;
            wrong += usize::from(match support::brute_force_cpi(&query, n) {
                Some(v) => got.value != v,
                None => !got.degenerate,
            });
        }
    }
    let distinct = ChordSequence::new(Chord::templates().collect(), 1000);
    let cycle = ChordSequence::new(
        ["C:maj", "G:maj", "A:min", "F:maj"]
            .iter()
            .cycle()
            .take(16)
            .map(|c| c.parse().unwrap())
            .collect(),
        1000,
    );
    let mut identities = true;
    for n in 2..=4 {
        identities &= cpi(&distinct, n)?.value == 1.0;
        for own in [&distinct, &cycle] {
            identities &= cpvr(own, &NGramModel::build(std::slice::from_ref(own), n)?, n, 0.0)?.value == 1.0;
        }
    }
    verdict(
        8,
        "CPVR/CPI oracle",
        wrong == 0 && identities,
        format!("{wrong}/600 oracle mismatches; distinct CPI = 1 and own-model CPVR = 1: {identities}"),
    )
}

fn c09_pnsr() -> Result<(), Failed> {
    let mut wrong = 0;
    for i in 0..20usize {
        let frames = 40 + 3 * i;
        let mut grid = vec![0u8; PITCHES * frames];
        // frames 0..i sound, plus every frame divisible by 7 beyond them
        let mut active = 0;
        for t in 0..frames {
            if t < i || t % 7 == 0 {
                active += 1;
                for p in 0..=(t % 3) {
                    grid[(20 + 30 * p) * frames + t] = 1;
                }
            }
        }
        let expected = active as f64 / frames as f64;
        wrong += usize::from(pnsr(&PianoRoll::from_grid(grid, frames, 10)?)? != expected);
    }
    let labels: Vec<&str> = PnsrBand::ALL.iter().map(|b| b.label()).collect();
    let bands_ok = labels == ["s<0.25", "0.25<=s<0.5", "0.5<=s<0.75", "0.75<=s"]
        && band_histogram([0.0, 0.2499, 0.25, 0.4999, 0.5, 0.7499, 0.75, 1.0]) == [2, 2, 2, 2];
    verdict(
        9,
        "PNSR",
        wrong == 0 && bands_ok,
        format!("{wrong}/20 rolls differ; bands {labels:?}"),
    )
}

fn c10_protocol() -> Result<(), Failed> {
    let defaults = ProtocolConfig::default();
    let defaults_ok = defaults.prompt_exponents == [4, 6, 8]
        && defaults.samples == 5
        && defaults.generate.k == 32
        && defaults.generate.horizon_ms == 60_000;

    // dense enough that even the 256-token prompt ends well inside a minute
    let piece = encode(&common::structured_corpus(1, 110)[0]);
    let model = Model::new(common::small_config("gpt2-se").tap(|c| c.n_positions = 1024), 10)?;
    let (samples, skipped) = run_protocol(&model, &piece, &defaults, 10)?;
    let mut per_prompt: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let (mut steps, mut bad_steps, mut bad_prefix, mut bad_clock) = (0, 0, 0, 0);
    for s in &samples {
        per_prompt.entry(s.prompt_len).or_default().insert(s.sample);
        let g = &s.generation;
        bad_prefix += usize::from(g.tokens.ids()[..s.prompt_len] != piece.ids()[..s.prompt_len]);
        bad_clock += usize::from(g.clock_ms > 60_000);
        for t in &g.trace {
            steps += 1;
            bad_steps += usize::from(t.support != 32 || t.rank >= 32);
        }
    }
    let lens: Vec<usize> = per_prompt.keys().copied().collect();
    let counts_ok = lens == [16, 64, 256] && per_prompt.values().all(|v| v.len() == 5) && skipped.is_empty();

    // Push all mass onto shift tokens so the horizon, not the length, stops.
    let mut shifty = Model::new(common::small_config("gpt2-se").tap(|c| c.n_positions = 1024), 10)?;
    shifty.params.ln_f_gain.fill(0.0);
    shifty.params.ln_f_bias.fill(0.0);
    shifty.params.ln_f_bias[0] = 1.0;
    shifty.params.lm_head.fill(0.0);
    shifty.params.lm_head.slice_mut(s![0, 4099..]).fill(10.0);
    let (horizon_runs, _) = run_protocol(&shifty, &piece, &defaults, 11)?;
    let horizon_ok = horizon_runs
        .iter()
        .all(|s| s.generation.stop == StopReason::Horizon && s.generation.clock_ms <= 60_000);
    let mut stops: BTreeMap<String, usize> = BTreeMap::new();
    for s in samples.iter().chain(&horizon_runs) {
        *stops.entry(format!("{:?}", s.generation.stop)).or_default() += 1;
    }

    let names = |v: &str| -> Result<Vec<(String, Vec<usize>)>, Failed> {
        Ok(Params::zeros(&ModelConfig::toy(v))?.census())
    };
    let (plain, re, se) = (names("gpt2")?, names("gpt2-re")?, names("gpt2-se")?);
    let diff: BTreeSet<&String> = plain
        .iter()
        .chain(&re)
        .chain(&se)
        .filter(|e| !(plain.contains(e) && re.contains(e) && se.contains(e)))
        .map(|(n, _)| n)
        .collect();
    let census_ok = !diff.is_empty() && diff.iter().all(|n| n.starts_with("embed."));

    verdict(
        10,
        "protocol fidelity",
        defaults_ok && counts_ok && bad_steps == 0 && bad_prefix == 0 && bad_clock == 0 && horizon_ok && census_ok,
        format!(
            "prompts {lens:?} x {} samples; {bad_steps}/{steps} steps outside top-32; \
             {bad_clock} past 60 s; shift-heavy runs stop at the horizon: {horizon_ok}; stops {stops:?}; \
             census differs only in {diff:?}",
            defaults.samples
        ),
    )
}

trait Tap: Sized {
    fn tap(mut self, f: impl FnOnce(&mut Self)) -> Self {
        f(&mut self);
        self
    }
}

impl Tap for ModelConfig {}

fn c11_trend() -> Result<(), Failed> {
    let t0 = Instant::now();
    let pieces = common::structured_corpus(12, 111);
    let (val, train) = pieces.split_at(1);
    let train_seqs: Vec<TokenSequence> = train.iter().map(encode).collect();
    let val_seq = encode(&val[0]);
    let chord_corpus: Vec<ChordSequence> = train
        .iter()
        .map(|n| label_chords(n, 1000))
        .collect::<Result<_, _>>()?;
    let ngram_models: BTreeMap<usize, NGramModel> = (2..=4)
        .map(|n| NGramModel::build(&chord_corpus, n).map(|m| (n, m)))
        .collect::<Result<_, _>>()?;
    let eval = EvalConfig::default();
    let registry = MetricRegistry::standard();
    let metrics = registry.select(&["si", "cpvr", "cpi"])?;

    let mut rows = Vec::new();
    for variant in ["gpt2", "gpt2-re", "gpt2-se"] {
        let mut cfg = ModelConfig::new(variant, 2, 4, 64);
        cfg.n_positions = 512;
        let structure = cfg.uses_structure();
        let examples: Vec<Example> = train_seqs
            .iter()
            .map(|s| Example::from_sequence(s, None, structure))
            .collect::<Result<_, _>>()?;
        let train_cfg = TrainConfig {
            peak_lr: 3e-3,
            warmup_steps: 10,
            total_steps: 100,
            batch_size: 4,
            max_len: 128,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(Model::new(cfg, 11)?, &examples, train_cfg, 11)?;
        trainer.run(|_| false)?;
        let val_examples = Example::from_sequence(&val_seq, None, structure)?.windows(128);
        let val_nll = mean_nll(&trainer.model, &val_examples)?;

        let protocol = ProtocolConfig {
            samples: 2,
            ..ProtocolConfig::default()
        };
        let (samples, _) = run_protocol(&trainer.model, &val_seq, &protocol, 11)?;
        for l in &protocol.prompt_exponents {
            let prompt_len = 1usize << l;
            let reports = samples
                .iter()
                .filter(|s| s.prompt_len == prompt_len)
                .map(|s| {
                    let notes = decode(&s.generation.tokens);
                    let input = PieceInput {
                        notes: &notes,
                        prompt: None,
                        ngram_models: &ngram_models,
                    };
                    evaluate_piece(variant, Some(prompt_len), &input, &metrics, &eval)
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(mean) = aggregate(&reports, variant) {
                rows.push((mean, val_nll));
            }
        }
    }
    rows.sort_by_key(|(r, _)| r.prompt_len);

    let mut header = vec!["Metric".to_string(), "Prompt".to_string()];
    header.extend(TABLE_COLUMNS.iter().map(|c| c.to_string()));
    header.push("val_nll".to_string());
    println!("{}", header.join(" | "));
    for (r, nll) in &rows {
        let mut cells = vec![r.id.clone(), r.prompt_len.map_or("-".into(), |p| p.to_string())];
        cells.extend(TABLE_COLUMNS.iter().map(|c| r.get(c).map_or("-".into(), |v| format!("{v:.4}"))));
        cells.push(format!("{nll:.4}"));
        println!("{}", cells.join(" | "));
    }
    println!(
        "criterion 11 REPORTED trend smoke test: {} rows from {} training pieces, {}",
        rows.len(),
        train.len(),
        secs(t0.elapsed())
    );
    Ok(())
}

type Criterion = fn() -> Result<(), Failed>;

fn main() {
    let args = Arguments::from_args();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("c01_tokenizer_roundtrip", c01_tokenizer_roundtrip),
        ("c02_vocabulary", c02_vocabulary),
        ("c03_labeler_equivalence", c03_labeler_equivalence),
        ("c04_sinusoidal_closed_form", c04_sinusoidal_closed_form),
        ("c04_near_orthogonality", c04_near_orthogonality),
        ("c05_gradient_check", c05_gradient_check),
        ("c06_overfit", c06_overfit),
        ("c06_uniform_logits", c06_uniform_logits),
        ("c07_fitness_oracle", c07_fitness_oracle),
        ("c08_ngram_oracle", c08_ngram_oracle),
        ("c09_pnsr", c09_pnsr),
        ("c10_protocol", c10_protocol),
        ("c11_trend", c11_trend),
    ];
    let trials = criteria
        .into_iter()
        .map(|(name, f)| Trial::test(name, f))
        .collect();
    libtest_mimic::run(&args, trials).exit();
}
