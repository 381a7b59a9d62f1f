use ndarray::{s, Array2};

use rawmuse_core::label_sequence;
use rawmuse_model::embedding::cross_orthogonality;
use rawmuse_model::variant::variants;
use rawmuse_model::{Model, ModelConfig, Params};

fn census(variant: &str) -> Vec<(String, Vec<usize>)> {
    Params::zeros(&ModelConfig::toy(variant)).unwrap().census()
}

#[test]
fn variants_differ_only_in_embedding_blocks() {
    let plain = census("gpt2");
    let re = census("gpt2-re");
    let se = census("gpt2-se");
    assert_eq!(re, se);
    let outside = |c: &[(String, Vec<usize>)]| -> Vec<(String, Vec<usize>)> {
        c.iter().filter(|(n, _)| !n.starts_with("embed.")).cloned().collect()
    };
    assert_eq!(outside(&plain), outside(&re));
    let extra: Vec<&str> = re
        .iter()
        .filter(|e| !plain.contains(e))
        .map(|(n, _)| n.as_str())
        .collect();
    assert_eq!(
        extra,
        ["embed.part", "embed.type", "embed.time", "embed.pc", "embed.proj.weight", "embed.proj.bias"]
    );
    assert!(plain.iter().all(|e| re.contains(e)));
}

#[test]
fn registry_names() {
    let names: Vec<&str> = variants().iter().map(|v| v.name()).collect();
    assert_eq!(names, ["gpt2", "gpt2-re", "gpt2-se"]);
}

/// A structural model whose projection passes the token row through and
/// ignores the tables computes exactly what the plain model computes.
#[test]
fn identity_projection_reduces_to_plain() {
    let plain = Model::new(ModelConfig::new("gpt2", 2, 4, 64), 3).unwrap();
    let mut re = Model::new(ModelConfig::new("gpt2-re", 2, 4, 64), 4).unwrap();
    re.params.blocks = plain.params.blocks.clone();
    re.params.ln_f_gain = plain.params.ln_f_gain.clone();
    re.params.ln_f_bias = plain.params.ln_f_bias.clone();
    re.params.lm_head = plain.params.lm_head.clone();
    re.params.embed.token = plain.params.embed.token.clone();
    re.params.embed.positional = plain.params.embed.positional.clone();
    let st = re.params.embed.structural.as_mut().unwrap();
    for t in &mut st.tables {
        t.fill(0.0);
    }
    let d = 64;
    let mut proj = Array2::zeros(st.proj_w.raw_dim());
    proj.slice_mut(s![..d, ..]).assign(&Array2::eye(d));
    st.proj_w = proj;
    st.proj_b.fill(0.0);

    let seq = common_sequence();
    let labels = label_sequence(&seq).to_rows();
    let a = plain.forward(seq.ids(), None).unwrap();
    let b = re.forward(seq.ids(), Some(&labels)).unwrap();
    let diff = (&a - &b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(diff < 1e-12, "max logit difference {diff}");
}

fn common_sequence() -> rawmuse_core::TokenSequence {
    rawmuse_core::TokenSequence::new(vec![1, 3 + 128 * 20 + 60, 4099 + 49, 3 + 60, 4099 + 3, 2]).unwrap()
}

#[test]
fn sinusoidal_tables_are_fixed_by_config() {
    let a = Params::init(&ModelConfig::toy("gpt2-se"), 1).unwrap();
    let b = Params::init(&ModelConfig::toy("gpt2-se"), 2).unwrap();
    let (sa, sb) = (a.embed.structural.unwrap(), b.embed.structural.unwrap());
    assert_eq!(sa.tables[0], sb.tables[0]);
    assert_eq!(sa.tables[2], sb.tables[2]);
    assert_ne!(sa.proj_w, sb.proj_w);
    let ratio = cross_orthogonality(&sa.tables[0], &sa.tables[2]);
    assert!(ratio.is_finite() && ratio > 0.0);
}
